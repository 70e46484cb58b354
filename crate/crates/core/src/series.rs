//! Truncated doubly-infinite Laurent series over Q(p^{1/e}).
//!
//! A series is a finite window of exactly known coefficients `a_n`,
//! n ∈ [n_min, n_max] with n_min ≤ 0 ≤ n_max, together with a working
//! precision M > 0: two series are congruent when all coefficients of their
//! difference have valuation ≥ M. The `tail_certificate` asserts that the
//! unstored coefficients below the window have valuation ≥ M (the stored
//! data then determines the element mod M on and below the window).
//!
//! Operations keep windows by hull (addition, multiplication) and shrink
//! them only through checked truncation, which fails with
//! `PrecisionOverflow` rather than silently dropping mass of valuation < M.
//! The inversion, root and factorization routines exploit the sign grading:
//! series supported in strictly positive exponents never push mass downward
//! and series supported in strictly negative exponents only push it further
//! down with strictly growing valuation, so their geometric expansions are
//! exact in-window once iterated past the precision.
//!
//! Newton data of a unit is the pair (v, v′): the minimal coefficient
//! valuation and the least exponent attaining it. A series with coefficients
//! in O_C is invertible exactly when this minimum is attained, and every
//! unit factors uniquely as c·T^k·u₊·u₋ with u₊ ∈ 1 + T·O[[T]] and
//! u₋ ∈ 1 + T⁻¹·m⟨T⁻¹⟩; (v_p(c), k) = (v, v′) does not depend on the
//! parameter T.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::{ScalarContext, ScalarError, Valuation, ValuedScalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("series context mismatch: {0}")]
    ContextMismatch(String),
    #[error("invalid window or precision: {0}")]
    BadContext(String),
    #[error("exponent {0} lies outside the window [{1}, {2}]")]
    OutsideWindow(i64, i64, i64),
    #[error("precision overflow: {0}")]
    PrecisionOverflow(String),
    #[error("newton data not determined (minimum may hide below precision or window)")]
    NotDetermined,
    #[error("not a unit: {0}")]
    NotAUnit(String),
    #[error("not a parameter: {0}")]
    NotAParameter(String),
    #[error("operand is not in an allowed multiplicative subgroup: {0}")]
    BadSubgroup(String),
    #[error("divisor point {0} lies on the circle")]
    PointOnCircle(String),
}

/// Coefficient field, precision, and default window for a series family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesContext {
    scalar: ScalarContext,
    prec: BigRational,
    n_min: i64,
    n_max: i64,
}

impl SeriesContext {
    pub fn new(
        scalar: ScalarContext,
        prec: BigRational,
        n_min: i64,
        n_max: i64,
    ) -> Result<Self, SeriesError> {
        if prec <= BigRational::zero() {
            return Err(SeriesError::BadContext("precision must be positive".into()));
        }
        if n_min > 0 || n_max < 0 {
            return Err(SeriesError::BadContext(format!(
                "window [{n_min}, {n_max}] must contain 0"
            )));
        }
        if n_max - n_min > 100_000 {
            return Err(SeriesError::BadContext(format!(
                "window [{n_min}, {n_max}] is too large for exact arithmetic"
            )));
        }
        Ok(SeriesContext { scalar, prec, n_min, n_max })
    }

    pub fn scalar(&self) -> &ScalarContext {
        &self.scalar
    }

    pub fn prec(&self) -> &BigRational {
        &self.prec
    }

    pub fn window(&self) -> (i64, i64) {
        (self.n_min, self.n_max)
    }

    fn with_window(&self, n_min: i64, n_max: i64) -> SeriesContext {
        SeriesContext { scalar: self.scalar, prec: self.prec.clone(), n_min, n_max }
    }
}

/// A truncated Laurent series; immutable, all arithmetic is exact on the
/// stored window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentSeries {
    ctx: SeriesContext,
    coeffs: BTreeMap<i64, ValuedScalar>,
    tail_certificate: bool,
}

impl LaurentSeries {
    pub fn zero(ctx: &SeriesContext) -> LaurentSeries {
        LaurentSeries { ctx: ctx.clone(), coeffs: BTreeMap::new(), tail_certificate: true }
    }

    pub fn one(ctx: &SeriesContext) -> LaurentSeries {
        let mut s = LaurentSeries::zero(ctx);
        s.coeffs.insert(0, ctx.scalar.one());
        s
    }

    pub fn from_terms(
        ctx: &SeriesContext,
        terms: Vec<(i64, ValuedScalar)>,
    ) -> Result<LaurentSeries, SeriesError> {
        let mut s = LaurentSeries::zero(ctx);
        for (n, c) in terms {
            if n < ctx.n_min || n > ctx.n_max {
                return Err(SeriesError::OutsideWindow(n, ctx.n_min, ctx.n_max));
            }
            if c.ctx() != &ctx.scalar {
                return Err(SeriesError::ContextMismatch("coefficient scalar context".into()));
            }
            if c.is_zero() {
                continue;
            }
            match s.coeffs.remove(&n) {
                None => {
                    s.coeffs.insert(n, c);
                }
                Some(prev) => {
                    let sum = prev.add(&c)?;
                    if !sum.is_zero() {
                        s.coeffs.insert(n, sum);
                    }
                }
            }
        }
        Ok(s)
    }

    pub fn monomial(ctx: &SeriesContext, n: i64, c: ValuedScalar) -> Result<LaurentSeries, SeriesError> {
        LaurentSeries::from_terms(ctx, vec![(n, c)])
    }

    pub fn ctx(&self) -> &SeriesContext {
        &self.ctx
    }

    pub fn tail_certificate(&self) -> bool {
        self.tail_certificate
    }

    pub fn coeff(&self, n: i64) -> ValuedScalar {
        self.coeffs.get(&n).cloned().unwrap_or_else(|| self.ctx.scalar.zero())
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &ValuedScalar)> {
        self.coeffs.iter().map(|(&n, c)| (n, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support(&self) -> Option<(i64, i64)> {
        let min = self.coeffs.keys().next()?;
        let max = self.coeffs.keys().last()?;
        Some((*min, *max))
    }

    /// All stored coefficients have valuation ≥ 0.
    pub fn is_integral(&self) -> bool {
        self.coeffs
            .values()
            .all(|c| c.valuation().at_least(&BigRational::zero()))
    }

    /// Minimal stored coefficient valuation (∞ for the zero series).
    pub fn min_valuation(&self) -> Valuation {
        self.coeffs
            .values()
            .map(|c| c.valuation())
            .min()
            .unwrap_or(Valuation::Infinity)
    }

    fn check_compatible(&self, other: &LaurentSeries) -> Result<(), SeriesError> {
        if self.ctx.scalar != other.ctx.scalar {
            return Err(SeriesError::ContextMismatch("scalar context".into()));
        }
        if self.ctx.prec != other.ctx.prec {
            return Err(SeriesError::ContextMismatch("precision".into()));
        }
        Ok(())
    }

    /// Addition on the window hull.
    pub fn add(&self, other: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
        self.check_compatible(other)?;
        let ctx = self
            .ctx
            .with_window(self.ctx.n_min.min(other.ctx.n_min), self.ctx.n_max.max(other.ctx.n_max));
        let mut coeffs = self.coeffs.clone();
        for (&n, c) in &other.coeffs {
            match coeffs.remove(&n) {
                None => {
                    coeffs.insert(n, c.clone());
                }
                Some(prev) => {
                    let sum = prev.add(c)?;
                    if !sum.is_zero() {
                        coeffs.insert(n, sum);
                    }
                }
            }
        }
        Ok(LaurentSeries {
            ctx,
            coeffs,
            tail_certificate: self.tail_certificate && other.tail_certificate,
        })
    }

    pub fn neg(&self) -> LaurentSeries {
        let mut out = self.clone();
        out.coeffs = out.coeffs.into_iter().map(|(n, c)| (n, c.neg())).collect();
        out
    }

    pub fn sub(&self, other: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
        self.add(&other.neg())
    }

    pub fn scalar_mul(&self, c: &ValuedScalar) -> Result<LaurentSeries, SeriesError> {
        if c.ctx() != &self.ctx.scalar {
            return Err(SeriesError::ContextMismatch("scalar context".into()));
        }
        if c.is_zero() {
            return Ok(LaurentSeries::zero(&self.ctx));
        }
        let mut out = LaurentSeries::zero(&self.ctx);
        for (&n, a) in &self.coeffs {
            let prod = a.mul(c)?;
            if !prod.is_zero() {
                out.coeffs.insert(n, prod);
            }
        }
        // Scaling by something of negative valuation can push the unstored
        // tail below the precision.
        out.tail_certificate =
            self.tail_certificate && c.valuation().at_least(&BigRational::zero());
        Ok(out)
    }

    /// Exact product on the window hull; nothing is discarded.
    pub fn mul(&self, other: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
        self.check_compatible(other)?;
        let ctx = self.ctx.with_window(
            self.ctx.n_min + other.ctx.n_min,
            self.ctx.n_max + other.ctx.n_max,
        );
        let mut coeffs: BTreeMap<i64, ValuedScalar> = BTreeMap::new();
        for (&i, a) in &self.coeffs {
            for (&j, b) in &other.coeffs {
                let prod = a.mul(b)?;
                if prod.is_zero() {
                    continue;
                }
                let n = i + j;
                match coeffs.remove(&n) {
                    None => {
                        coeffs.insert(n, prod);
                    }
                    Some(prev) => {
                        let sum = prev.add(&prod)?;
                        if !sum.is_zero() {
                            coeffs.insert(n, sum);
                        }
                    }
                }
            }
        }
        Ok(LaurentSeries {
            ctx,
            coeffs,
            tail_certificate: self.tail_certificate && other.tail_certificate,
        })
    }

    /// Multiplication by T^k; the window shifts with the data (kept around 0).
    pub fn shift(&self, k: i64) -> LaurentSeries {
        let ctx = self
            .ctx
            .with_window((self.ctx.n_min + k).min(0), (self.ctx.n_max + k).max(0));
        LaurentSeries {
            ctx,
            coeffs: self.coeffs.iter().map(|(&n, c)| (n + k, c.clone())).collect(),
            tail_certificate: self.tail_certificate,
        }
    }

    /// d/dT: Σ n·a_n T^{n−1}.
    pub fn derive(&self) -> LaurentSeries {
        self.t_derive().shift(-1)
    }

    /// T·d/dT: Σ n·a_n T^n. Window unchanged; the n = 0 term disappears.
    pub fn t_derive(&self) -> LaurentSeries {
        let mut out = LaurentSeries::zero(&self.ctx);
        for (&n, c) in &self.coeffs {
            if n == 0 {
                continue;
            }
            let scaled = c.scale(&BigRational::from_integer(n.into()));
            if !scaled.is_zero() {
                out.coeffs.insert(n, scaled);
            }
        }
        // Tail terms keep valuation ≥ M after multiplication by an integer.
        out.tail_certificate = self.tail_certificate;
        out
    }

    /// Checked truncation: drops coefficients outside [n_min, n_max], failing
    /// if any dropped coefficient has valuation < M.
    pub fn truncate_to_window(&self, n_min: i64, n_max: i64) -> Result<LaurentSeries, SeriesError> {
        let ctx = self.ctx.with_window(n_min, n_max);
        if n_min > 0 || n_max < 0 {
            return Err(SeriesError::BadContext(format!(
                "window [{n_min}, {n_max}] must contain 0"
            )));
        }
        let mut out = LaurentSeries::zero(&ctx);
        out.tail_certificate = self.tail_certificate;
        for (&n, c) in &self.coeffs {
            if n >= n_min && n <= n_max {
                out.coeffs.insert(n, c.clone());
            } else if !c.valuation().at_least(&self.ctx.prec) {
                return Err(SeriesError::PrecisionOverflow(format!(
                    "coefficient at T^{n} with valuation < {} would be dropped",
                    self.ctx.prec
                )));
            }
        }
        Ok(out)
    }

    /// In-window image: coefficients above the window are projected away
    /// (the model stores bounded-top approximations), and the tail
    /// certificate survives only if every dropped low coefficient has
    /// valuation ≥ M.
    pub fn project_to_window(&self, n_min: i64, n_max: i64) -> LaurentSeries {
        let ctx = self.ctx.with_window(n_min.min(0), n_max.max(0));
        let mut out = LaurentSeries::zero(&ctx);
        let mut cert = self.tail_certificate;
        for (&n, c) in &self.coeffs {
            if n > n_max {
                continue;
            }
            if n < n_min {
                if !c.valuation().at_least(&self.ctx.prec) {
                    cert = false;
                }
                continue;
            }
            out.coeffs.insert(n, c.clone());
        }
        out.tail_certificate = cert;
        out
    }

    /// Unchecked top cut, sound only for computations graded toward positive
    /// exponents (dropped terms can never flow back under the cut).
    fn cut_above(&self, n_max: i64) -> LaurentSeries {
        let ctx = self.ctx.with_window(self.ctx.n_min, n_max.max(0));
        LaurentSeries {
            ctx,
            coeffs: self.coeffs.iter().filter(|(&n, _)| n <= n_max).map(|(&n, c)| (n, c.clone())).collect(),
            tail_certificate: self.tail_certificate,
        }
    }

    /// Unchecked bottom cut for computations graded toward negative
    /// exponents; the caller asserts the dropped mass has valuation ≥ M.
    fn cut_below(&self, n_min: i64) -> LaurentSeries {
        let ctx = self.ctx.with_window(n_min.min(0), self.ctx.n_max);
        LaurentSeries {
            ctx,
            coeffs: self.coeffs.iter().filter(|(&n, _)| n >= n_min).map(|(&n, c)| (n, c.clone())).collect(),
            tail_certificate: self.tail_certificate,
        }
    }

    /// The part with strictly positive exponents.
    pub fn positive_part(&self) -> LaurentSeries {
        let mut out = LaurentSeries::zero(&self.ctx);
        out.coeffs = self
            .coeffs
            .iter()
            .filter(|(&n, _)| n > 0)
            .map(|(&n, c)| (n, c.clone()))
            .collect();
        out
    }

    /// The part with strictly negative exponents.
    pub fn negative_part(&self) -> LaurentSeries {
        let mut out = LaurentSeries::zero(&self.ctx);
        out.coeffs = self
            .coeffs
            .iter()
            .filter(|(&n, _)| n < 0)
            .map(|(&n, c)| (n, c.clone()))
            .collect();
        out.tail_certificate = self.tail_certificate;
        out
    }

    /// Congruence modulo precision: all coefficients of the difference have
    /// valuation ≥ M.
    pub fn congruent(&self, other: &LaurentSeries) -> Result<bool, SeriesError> {
        let diff = self.sub(other)?;
        Ok(diff
            .coeffs
            .values()
            .all(|c| c.valuation().at_least(&self.ctx.prec)))
    }

    /// Balanced reduction of every coefficient modulo p^⌈M⌉: changes the
    /// element by mass of valuation ≥ M only, and keeps numerators small
    /// through the fixed-point loops. Requires p-integral coefficients.
    fn reduced_mod_prec(&self) -> Result<LaurentSeries, SeriesError> {
        let m = prec_exponent(&self.ctx)?;
        let mut out = LaurentSeries::zero(&self.ctx);
        out.tail_certificate = self.tail_certificate;
        for (&n, c) in &self.coeffs {
            let r = c.reduce_mod_p_pow(m)?;
            if !r.is_zero() {
                out.coeffs.insert(n, r);
            }
        }
        Ok(out)
    }

    /// Congruence modulo precision restricted to [n_min, n_max], for
    /// comparisons against window-truncated references.
    pub fn congruent_on(
        &self,
        other: &LaurentSeries,
        n_min: i64,
        n_max: i64,
    ) -> Result<bool, SeriesError> {
        let diff = self.sub(other)?;
        Ok(diff
            .coeffs
            .iter()
            .filter(|(&n, _)| n >= n_min && n <= n_max)
            .all(|(_, c)| c.valuation().at_least(&self.ctx.prec)))
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (n, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match n {
                0 => write!(f, "({})", c)?,
                1 => write!(f, "({})*T", c)?,
                _ => write!(f, "({})*T^{}", c, n)?,
            }
        }
        Ok(())
    }
}

fn prec_exponent(ctx: &SeriesContext) -> Result<u32, SeriesError> {
    let m = ctx.prec.ceil().to_integer();
    m.try_into()
        .map_err(|_| SeriesError::PrecisionOverflow("precision exponent out of range".into()))
}

/// (v, v′): minimal coefficient valuation and least attaining exponent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonData {
    pub v: BigRational,
    pub v_prime: i64,
}

/// The minimum of the stored valuations and its least attaining exponent,
/// provided the data determines them: the minimum must be < M (so the tail
/// certificate rules out hidden attainers) or attained above the window
/// bottom.
pub fn newton_data(u: &LaurentSeries) -> Result<NewtonData, SeriesError> {
    let mut best: Option<(BigRational, i64)> = None;
    for (&n, c) in &u.coeffs {
        let v = match c.valuation() {
            Valuation::Finite(v) => v,
            Valuation::Infinity => continue,
        };
        match &best {
            None => best = Some((v, n)),
            Some((bv, _)) if v < *bv => best = Some((v, n)),
            _ => {}
        }
    }
    let Some((v, v_prime)) = best else {
        return Err(SeriesError::NotDetermined);
    };
    if v >= u.ctx.prec {
        return Err(SeriesError::NotDetermined);
    }
    if v_prime == u.ctx.n_min && !u.tail_certificate {
        return Err(SeriesError::NotDetermined);
    }
    Ok(NewtonData { v, v_prime })
}

/// The canonical normal form u = c·T^k·u₊·u₋ at working precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitFactorization {
    pub c: ValuedScalar,
    pub k: i64,
    /// In 1 + T·O[[T]]: constant term exactly 1, positive support, integral.
    pub u_plus: LaurentSeries,
    /// In 1 + T⁻¹·m⟨T⁻¹⟩: constant term exactly 1, negative support with
    /// strictly positive valuations.
    pub u_minus: LaurentSeries,
}

impl UnitFactorization {
    /// Reassembles c·T^k·u₊·u₋ (exact product of the stored parts).
    pub fn multiply_back(&self) -> Result<LaurentSeries, SeriesError> {
        self.u_plus.mul(&self.u_minus)?.shift(self.k).scalar_mul(&self.c)
    }
}

/// Geometric inverse of 1 + x for x supported in strictly positive exponents:
/// Σ (−x)^k, exact in the window up to n_max.
fn invert_one_plus_positive(x: &LaurentSeries, n_max: i64) -> Result<LaurentSeries, SeriesError> {
    let ctx = x.ctx.with_window(0, n_max.max(0));
    let mut acc = LaurentSeries::one(&ctx);
    if x.is_zero() {
        return Ok(acc);
    }
    if x.support().is_some_and(|(lo, _)| lo <= 0) {
        return Err(SeriesError::BadSubgroup(
            "positive part must have strictly positive support".into(),
        ));
    }
    let minus_x = x.neg().cut_above(n_max);
    let mut term = LaurentSeries::one(&ctx);
    // Supports grow by at least 1 per factor, so n_max passes suffice.
    for _ in 0..n_max.max(0) {
        term = term.mul(&minus_x)?.cut_above(n_max).reduced_mod_prec()?;
        if term.is_zero() {
            break;
        }
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Geometric inverse of 1 + y for y supported in strictly negative exponents
/// with strictly positive coefficient valuations: Σ (−y)^k, iterated until
/// every remaining term has valuation ≥ M.
fn invert_one_plus_negative(y: &LaurentSeries, n_min: i64) -> Result<LaurentSeries, SeriesError> {
    let ctx = y.ctx.with_window(n_min.min(0), 0);
    let mut acc = LaurentSeries::one(&ctx);
    if y.is_zero() {
        return Ok(acc);
    }
    let delta = match y.min_valuation() {
        Valuation::Finite(d) if d > BigRational::zero() => d,
        Valuation::Infinity => return Ok(acc),
        _ => {
            return Err(SeriesError::BadSubgroup(
                "negative part must have strictly positive valuations".into(),
            ))
        }
    };
    let prec = y.ctx.prec.clone();
    let steps = (&prec / &delta).ceil().to_integer();
    let steps: u64 = steps.try_into().map_err(|_| {
        SeriesError::PrecisionOverflow("geometric iteration count overflow".into())
    })?;
    let minus_y = y.neg();
    let mut term = LaurentSeries::one(&ctx);
    for _ in 0..=steps {
        term = term.mul(&minus_y)?.cut_below(n_min).reduced_mod_prec()?;
        if term.is_zero() {
            break;
        }
        acc = acc.add(&term)?;
        if term.min_valuation().at_least(&prec) {
            break;
        }
    }
    let mut out = acc.cut_below(n_min);
    // The true inverse has tail valuations ≥ |n|·δ below the window.
    out.tail_certificate = y.tail_certificate
        && BigRational::from_integer((1 - n_min).into()) * &delta >= prec;
    Ok(out)
}

/// Canonical unit factorization (Weierstrass-type alternating fixed point).
///
/// After normalizing by the attaining monomial, u₊ and u₋ are improved in
/// turn; every pass gains at least the minimal valuation of the negative part
/// and the loop stops when the multiply-back residual sits below precision.
pub fn factorize_unit(u: &LaurentSeries) -> Result<UnitFactorization, SeriesError> {
    let nd = newton_data(u).map_err(|_| {
        SeriesError::NotAUnit("newton data not determined; minimum may not be attained".into())
    })?;
    let c0 = u.coeff(nd.v_prime);
    let u0 = u.shift(-nd.v_prime).scalar_mul(&c0.invert()?)?.reduced_mod_prec()?;
    let (lo, hi) = u0.ctx.window();
    debug_assert!(u0.is_integral(), "normalized unit is integral by the Newton data");

    let prec = u0.ctx.prec.clone();
    let delta = match u0.negative_part().min_valuation() {
        Valuation::Infinity => prec.clone(),
        Valuation::Finite(d) => d,
    };
    if delta <= BigRational::zero() {
        return Err(SeriesError::NotAUnit(
            "coefficients below the attaining exponent must have larger valuation".into(),
        ));
    }
    let max_pass = {
        let p: BigInt = (&prec / &delta).ceil().to_integer();
        let p: u64 = p.try_into().unwrap_or(u64::MAX);
        p + 3
    };

    let one = LaurentSeries::one(&u0.ctx.with_window(0, 0));
    let mut gamma = u0.ctx.scalar.one();
    let mut u_minus = one.clone();
    for _ in 0..max_pass {
        // u₊ ← positive normalization of u₀ / (γ·u₋).
        let inv_minus = invert_one_plus_negative(&u_minus.sub(&one)?, lo)?;
        let w = u0.mul(&inv_minus)?.scalar_mul(&gamma.invert()?)?;
        let u_plus = one.add(&w.positive_part().cut_above(hi))?.reduced_mod_prec()?;

        // γ·u₋ ← negative normalization of u₀ / u₊.
        let inv_plus = invert_one_plus_positive(&u_plus.sub(&one)?, hi)?;
        let w = u0.mul(&inv_plus)?;
        let w0 = w.coeff(0);
        if w0.is_zero() {
            return Err(SeriesError::NotAUnit("vanishing constant term in normalization".into()));
        }
        gamma = w0.reduce_mod_p_pow(prec_exponent(&u0.ctx)?)?;
        u_minus = one
            .add(&w.negative_part().cut_below(lo).scalar_mul(&gamma.invert()?)?)?
            .reduced_mod_prec()?;

        let back = u_plus
            .mul(&u_minus)?
            .scalar_mul(&gamma)?
            .truncate_unchecked_hull(lo, hi);
        if back.congruent(&u0)? {
            let c = c0.mul(&gamma)?;
            return Ok(UnitFactorization { c, k: nd.v_prime, u_plus, u_minus });
        }
    }
    Err(SeriesError::PrecisionOverflow(
        "unit factorization did not converge within the precision budget".into(),
    ))
}

impl LaurentSeries {
    /// Hull restriction used when comparing against a window-supported
    /// reference: outside terms are only dropped for the comparison.
    fn truncate_unchecked_hull(&self, n_min: i64, n_max: i64) -> LaurentSeries {
        self.cut_above(n_max).cut_below(n_min)
    }
}

/// Multiplicative inverse of a unit via its factorization:
/// u⁻¹ = c⁻¹·T^{−k}·u₊⁻¹·u₋⁻¹, exact in-window mod M.
pub fn invert_unit(u: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
    let f = factorize_unit(u)?;
    let (lo, hi) = u.ctx.window();
    let one = LaurentSeries::one(&u.ctx.with_window(0, 0));
    let inv_plus = invert_one_plus_positive(&f.u_plus.sub(&one)?, hi)?;
    let inv_minus = invert_one_plus_negative(&f.u_minus.sub(&one)?, lo)?;
    inv_plus
        .mul(&inv_minus)?
        .shift(-f.k)
        .scalar_mul(&f.c.invert()?)
}

/// Substitution of a parameter w for T: w must have Newton data (0, 1) and
/// integral coefficients (its reduction is a uniformizer of k_C((T))).
pub fn substitute_parameter(
    u: &LaurentSeries,
    w: &LaurentSeries,
) -> Result<LaurentSeries, SeriesError> {
    u.check_compatible(w)?;
    let nd = newton_data(w).map_err(|_| SeriesError::NotAParameter("no newton data".into()))?;
    if !(nd.v.is_zero() && nd.v_prime == 1) {
        return Err(SeriesError::NotAParameter(format!(
            "newton data is ({}, {}), expected (0, 1)",
            nd.v, nd.v_prime
        )));
    }
    if !w.is_integral() {
        return Err(SeriesError::NotAParameter("parameter must be integral".into()));
    }
    if !u.min_valuation().at_least(&BigRational::zero()) {
        return Err(SeriesError::PrecisionOverflow(
            "composition with non-integral coefficients is not precision-safe".into(),
        ));
    }
    let (lo, hi) = u.ctx.window();
    let mut result = LaurentSeries::zero(&u.ctx);
    // Positive powers.
    let mut pow = LaurentSeries::one(&w.ctx.with_window(0, 0));
    for n in 0..=hi {
        if n > 0 {
            pow = pow.mul(w)?.reduced_mod_prec()?;
        }
        let a = u.coeff(n);
        if !a.is_zero() {
            result = result.add(&pow.scalar_mul(&a)?)?;
        }
    }
    // Negative powers through the inverse parameter.
    if lo < 0 {
        let w_inv = invert_unit(w)?;
        let mut pow = LaurentSeries::one(&w.ctx.with_window(0, 0));
        for n in 1..=(-lo) {
            pow = pow.mul(&w_inv)?.reduced_mod_prec()?;
            let a = u.coeff(-n);
            if !a.is_zero() {
                result = result.add(&pow.scalar_mul(&a)?)?;
            }
        }
    }
    Ok(result.project_to_window(lo, hi))
}

/// Residue of ω = (coefficient series)·dT/T: the coefficient of T⁰.
pub fn residue(omega_coeff: &LaurentSeries) -> ValuedScalar {
    omega_coeff.coeff(0)
}

/// Coefficient series of du/u against dT/T, computed through the canonical
/// factorization: dlog u = v′(u) + T·u₊′/u₊ + T·u₋′/u₋. The three pieces live
/// in disjoint exponent ranges, so Res(dlog u) = v′(u) exactly.
pub fn dlog(u: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
    let f = factorize_unit(u)?;
    let (lo, hi) = u.ctx.window();
    let one = LaurentSeries::one(&u.ctx.with_window(0, 0));

    let k_term = LaurentSeries::monomial(
        &u.ctx.with_window(0, 0),
        0,
        u.ctx.scalar.from_rational(BigRational::from_integer(f.k.into())),
    )?;

    let inv_plus = invert_one_plus_positive(&f.u_plus.sub(&one)?, hi)?;
    let pos = f.u_plus.t_derive().mul(&inv_plus)?.cut_above(hi);

    let inv_minus = invert_one_plus_negative(&f.u_minus.sub(&one)?, lo)?;
    let neg = f.u_minus.t_derive().mul(&inv_minus)?.cut_below(lo);

    k_term.add(&pos)?.add(&neg)
}

/// Side of a leg T₁·T₂ = p^μ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LegSide {
    One,
    Two,
}

impl LegSide {
    pub fn parse(v: u8) -> Result<LegSide, SeriesError> {
        match v {
            1 => Ok(LegSide::One),
            2 => Ok(LegSide::Two),
            _ => Err(SeriesError::BadContext(format!("side must be 1 or 2, got {v}"))),
        }
    }
}

/// Restriction of a leg element Σ a_n T₁^n to a boundary circle: side 1 is
/// the identity, side 2 substitutes T₁ = p^μ·T₂⁻¹, transporting Newton data
/// by (v, v′) ↦ (v + v′·μ, −v′).
pub fn leg_restrict(
    f: &LaurentSeries,
    side: LegSide,
    mu: &BigRational,
) -> Result<LaurentSeries, SeriesError> {
    if *mu <= BigRational::zero() {
        return Err(SeriesError::BadContext("leg length must be positive".into()));
    }
    match side {
        LegSide::One => Ok(f.clone()),
        LegSide::Two => {
            let (lo, hi) = f.ctx.window();
            let ctx = f.ctx.with_window(-hi, -lo);
            let mut terms = Vec::new();
            for (n, a) in f.terms() {
                let factor = f
                    .ctx
                    .scalar
                    .p_pow(&(mu * BigRational::from_integer(n.into())))?;
                terms.push((-n, a.mul(&factor)?));
            }
            LaurentSeries::from_terms(&ctx, terms)
        }
    }
}

/// Restriction of the form f·dT₁/T₁ to a boundary circle; on side 2 the
/// orientation flips: dT₁/T₁ = −dT₂/T₂.
pub fn leg_restrict_form(
    f: &LaurentSeries,
    side: LegSide,
    mu: &BigRational,
) -> Result<LaurentSeries, SeriesError> {
    let g = leg_restrict(f, side, mu)?;
    Ok(match side {
        LegSide::One => g,
        LegSide::Two => g.neg(),
    })
}

/// ℓ-th root of a unit in 1 + T·O[[T]] or 1 + T⁻¹·m⟨T⁻¹⟩ for ℓ prime to p,
/// via the binomial series Σ C(1/ℓ, k)(u−1)^k; the result stays in the same
/// subgroup.
pub fn prime_to_p_root(u: &LaurentSeries, ell: u64) -> Result<LaurentSeries, SeriesError> {
    if ell < 2 {
        return Err(SeriesError::BadSubgroup(format!("root order must be >= 2, got {ell}")));
    }
    if ell.is_multiple_of(u.ctx.scalar.p()) {
        return Err(SeriesError::BadSubgroup(format!(
            "root order {ell} is divisible by p = {}",
            u.ctx.scalar.p()
        )));
    }
    if u.coeff(0) != u.ctx.scalar.one() {
        return Err(SeriesError::BadSubgroup("constant term must be exactly 1".into()));
    }
    let x = u.sub(&LaurentSeries::one(&u.ctx.with_window(0, 0)))?;
    let (lo, hi) = u.ctx.window();
    enum Side {
        Positive,
        Negative,
    }
    let side = match x.support() {
        None => return Ok(LaurentSeries::one(&u.ctx)),
        Some((xlo, xhi)) => {
            if xlo > 0 {
                if !x.is_integral() {
                    return Err(SeriesError::BadSubgroup(
                        "positive part must be integral".into(),
                    ));
                }
                Side::Positive
            } else if xhi < 0 {
                match x.min_valuation() {
                    Valuation::Finite(d) if d > BigRational::zero() => Side::Negative,
                    _ => {
                        return Err(SeriesError::BadSubgroup(
                            "negative part must have strictly positive valuations".into(),
                        ))
                    }
                }
            } else {
                return Err(SeriesError::BadSubgroup(
                    "series must lie in 1 + T·O[[T]] or 1 + T⁻¹·m⟨T⁻¹⟩".into(),
                ));
            }
        }
    };

    let inv_ell = BigRational::new(BigInt::one(), BigInt::from(ell));
    let prec = u.ctx.prec.clone();
    let mut acc = LaurentSeries::one(&u.ctx.with_window(0, 0));
    let mut x_pow = LaurentSeries::one(&u.ctx.with_window(0, 0));
    let mut binom = BigRational::one();
    let mut k: u64 = 0;
    loop {
        k += 1;
        // C(1/ℓ, k) = C(1/ℓ, k−1)·(1/ℓ − (k−1))/k.
        binom = binom * (&inv_ell - BigRational::from_integer((k - 1).into()))
            / BigRational::from_integer(k.into());
        x_pow = match side {
            Side::Positive => x_pow.mul(&x)?.cut_above(hi).reduced_mod_prec()?,
            Side::Negative => x_pow.mul(&x)?.cut_below(lo).reduced_mod_prec()?,
        };
        if x_pow.is_zero() {
            break;
        }
        let term = x_pow.scalar_mul(&u.ctx.scalar.from_rational(binom.clone()))?;
        acc = acc.add(&term)?;
        match side {
            // x^k is supported beyond the window once k > hi.
            Side::Positive => {
                if k as i64 > hi {
                    break;
                }
            }
            Side::Negative => {
                if term.min_valuation().at_least(&prec) {
                    break;
                }
            }
        }
    }
    Ok(acc.truncate_unchecked_hull(lo, hi))
}

/// The dlog coefficient series of Π(T−aᵢ)^{mᵢ} on the circle v_p(T) = r, in
/// the circle coordinate S = T/p^r: a point strictly inside (v_p(a) > r)
/// contributes m·Σ_k (a/p^r)^k S^{−k}, a point strictly outside contributes
/// −m·Σ_{k≥1} (p^r/a)^k S^k; the residue is m per inside point.
pub fn rational_on_circle(
    divisor: &[(ValuedScalar, i64)],
    r: &BigRational,
    ctx: &SeriesContext,
) -> Result<LaurentSeries, SeriesError> {
    let (lo, hi) = ctx.window();
    let prec = ctx.prec.clone();
    let mut out = LaurentSeries::zero(ctx);
    for (a, m) in divisor {
        if *m == 0 {
            continue;
        }
        let m_scalar = ctx.scalar.from_integer(*m);
        if a.is_zero() {
            // dlog(T) = dT/T.
            out = out.add(&LaurentSeries::monomial(ctx, 0, m_scalar)?)?;
            continue;
        }
        let va = match a.valuation() {
            Valuation::Finite(v) => v,
            Valuation::Infinity => unreachable!("nonzero scalar"),
        };
        if va == *r {
            return Err(SeriesError::PointOnCircle(a.to_string()));
        }
        if va > *r {
            // Inside: m·Σ_{k≥0} (a·p^{−r})^k S^{−k}, valuations growing by
            // gap = v_p(a) − r per term.
            let ratio = a.mul(&ctx.scalar.p_pow(&-r.clone())?)?;
            let gap = &va - r;
            let mut pow = ctx.scalar.one();
            for k in 0..=(-lo) {
                if k > 0 {
                    pow = pow.mul(&ratio)?;
                }
                out = out.add(&LaurentSeries::monomial(ctx, -k, pow.mul(&m_scalar)?)?)?;
            }
            // Honest tail certificate: dropped terms have valuation
            // ≥ (|n_min|+1)·gap.
            if BigRational::from_integer((1 - lo).into()) * &gap < prec {
                out.tail_certificate = false;
            }
        } else {
            // Outside: −m·Σ_{k≥1} (p^r·a⁻¹)^k S^k; residue contribution 0.
            let ratio = ctx.scalar.p_pow(r)?.mul(&a.invert()?)?;
            let mut pow = ctx.scalar.one();
            for k in 1..=hi {
                pow = pow.mul(&ratio)?;
                out = out.add(&LaurentSeries::monomial(ctx, k, pow.mul(&m_scalar)?.neg())?)?;
            }
        }
    }
    Ok(out)
}
