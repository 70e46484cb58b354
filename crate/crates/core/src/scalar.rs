//! Exact arithmetic in Q(p^{1/e}) with its p-adic valuation.
//!
//! Elements are written Σ cᵢ·πⁱ, 0 ≤ i < e, with π^e = p and exact rational
//! coefficients. The valuation v is normalized by v(p) = 1, so v(π) = 1/e and
//! v takes values in (1/e)·Z. For a nonzero element the candidate valuations
//! v_p(cᵢ) + i/e are pairwise distinct mod 1, hence the minimum is attained at
//! a unique index and v is well defined.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::{solve, QMat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("ramification index must be >= 1")]
    BadRamification,
    #[error("scalar context mismatch: (p={0}, e={1}) vs (p={2}, e={3})")]
    ContextMismatch(u64, u32, u64, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent {0} is not in (1/{1})*Z")]
    BadExponent(BigRational, u32),
    #[error("element is not p-integral, cannot reduce modulo p^{0}")]
    NotPIntegral(u32),
    #[error("exponent {0} is too large for exact arithmetic")]
    ExponentTooLarge(BigRational),
    #[error("parse error: {0}")]
    Parse(String),
}

/// The field Q(p^{1/e}): a prime p and a ramification index e ≥ 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScalarContext {
    p: u64,
    e: u32,
}

impl ScalarContext {
    pub fn new(p: u64, e: u32) -> Result<Self, ScalarError> {
        if !is_prime(p) {
            return Err(ScalarError::NotPrime(p));
        }
        if e < 1 {
            return Err(ScalarError::BadRamification);
        }
        Ok(ScalarContext { p, e })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn zero(&self) -> ValuedScalar {
        ValuedScalar { ctx: *self, coeffs: vec![BigRational::zero(); self.e as usize] }
    }

    pub fn one(&self) -> ValuedScalar {
        self.from_rational(BigRational::one())
    }

    pub fn from_rational(&self, c: BigRational) -> ValuedScalar {
        let mut coeffs = vec![BigRational::zero(); self.e as usize];
        coeffs[0] = c;
        ValuedScalar { ctx: *self, coeffs }
    }

    pub fn from_integer(&self, n: i64) -> ValuedScalar {
        self.from_rational(BigRational::from_integer(n.into()))
    }

    /// The uniformizer π = p^{1/e}.
    pub fn pi(&self) -> ValuedScalar {
        if self.e == 1 {
            return self.from_integer(self.p as i64);
        }
        let mut coeffs = vec![BigRational::zero(); self.e as usize];
        coeffs[1] = BigRational::one();
        ValuedScalar { ctx: *self, coeffs }
    }

    /// p^r for r ∈ (1/e)·Z (possibly negative), i.e. π^{re}.
    pub fn p_pow(&self, r: &BigRational) -> Result<ValuedScalar, ScalarError> {
        let scaled = r * BigRational::from_integer(self.e.into());
        if !scaled.is_integer() {
            return Err(ScalarError::BadExponent(r.clone(), self.e));
        }
        let m = scaled.to_integer();
        let e = BigInt::from(self.e);
        let (q, rem) = num_integer::Integer::div_mod_floor(&m, &e);
        // π^m = p^q · π^rem with 0 <= rem < e.
        let rem: usize = rem.try_into().expect("small remainder");
        let mut coeffs = vec![BigRational::zero(); self.e as usize];
        coeffs[rem] = rational_pow(&BigRational::from_integer(self.p.into()), &q)
            .ok_or_else(|| ScalarError::ExponentTooLarge(r.clone()))?;
        Ok(ValuedScalar { ctx: *self, coeffs })
    }

    fn check(&self, other: &ScalarContext) -> Result<(), ScalarError> {
        if self != other {
            return Err(ScalarError::ContextMismatch(self.p, self.e, other.p, other.e));
        }
        Ok(())
    }
}

fn rational_pow(base: &BigRational, exp: &BigInt) -> Option<BigRational> {
    let mag: u32 = exp.abs().try_into().ok().filter(|m| *m <= 1 << 16)?;
    let mut acc = BigRational::one();
    for _ in 0..mag {
        acc *= base;
    }
    Some(if exp.is_negative() { acc.recip() } else { acc })
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// p-adic valuation of an element, v(0) = +∞.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    Finite(BigRational),
    Infinity,
}

impl Valuation {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Valuation::Infinity)
    }

    pub fn unwrap_finite(self) -> BigRational {
        match self {
            Valuation::Finite(v) => v,
            Valuation::Infinity => panic!("valuation of zero"),
        }
    }

    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinity => None,
        }
    }

    pub fn add(&self, other: &Valuation) -> Valuation {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinity,
        }
    }

    /// v ≥ bound, with v(0) = ∞ ≥ everything.
    pub fn at_least(&self, bound: &BigRational) -> bool {
        match self {
            Valuation::Finite(v) => v >= bound,
            Valuation::Infinity => true,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Infinity, Valuation::Infinity) => Ordering::Equal,
            (Valuation::Infinity, Valuation::Finite(_)) => Ordering::Greater,
            (Valuation::Finite(_), Valuation::Infinity) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

/// v_p of a rational number; `None` for 0.
pub fn rational_valuation(p: u64, x: &BigRational) -> Option<BigInt> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    Some(int_valuation(&p, x.numer()) - int_valuation(&p, x.denom()))
}

fn int_valuation(p: &BigInt, n: &BigInt) -> BigInt {
    let mut n = n.abs();
    let mut v = BigInt::zero();
    while (&n % p).is_zero() {
        n /= p;
        v += 1;
    }
    v
}

/// An element Σ cᵢ πⁱ of Q(p^{1/e}); immutable, context-checked arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValuedScalar {
    ctx: ScalarContext,
    coeffs: Vec<BigRational>,
}

impl ValuedScalar {
    pub fn ctx(&self) -> &ScalarContext {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn from_coeffs(ctx: ScalarContext, coeffs: Vec<BigRational>) -> Result<Self, ScalarError> {
        if coeffs.len() != ctx.e as usize {
            return Err(ScalarError::Parse(format!(
                "expected {} coefficients, got {}",
                ctx.e,
                coeffs.len()
            )));
        }
        Ok(ValuedScalar { ctx, coeffs })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &ValuedScalar) -> Result<ValuedScalar, ScalarError> {
        self.ctx.check(&other.ctx)?;
        let coeffs =
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(ValuedScalar { ctx: self.ctx, coeffs })
    }

    pub fn sub(&self, other: &ValuedScalar) -> Result<ValuedScalar, ScalarError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ValuedScalar {
        ValuedScalar { ctx: self.ctx, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    /// Product, reducing π^e → p.
    pub fn mul(&self, other: &ValuedScalar) -> Result<ValuedScalar, ScalarError> {
        self.ctx.check(&other.ctx)?;
        let e = self.ctx.e as usize;
        let p = BigRational::from_integer(self.ctx.p.into());
        let mut coeffs = vec![BigRational::zero(); e];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let prod = a * b;
                let k = i + j;
                if k < e {
                    coeffs[k] += prod;
                } else {
                    coeffs[k - e] += prod * &p;
                }
            }
        }
        Ok(ValuedScalar { ctx: self.ctx, coeffs })
    }

    pub fn scale(&self, c: &BigRational) -> ValuedScalar {
        ValuedScalar { ctx: self.ctx, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// min over i of v_p(cᵢ) + i/e; ∞ for zero. The minimum is attained at a
    /// unique index because the candidates are distinct mod 1.
    pub fn valuation(&self) -> Valuation {
        match self.valuation_with_index() {
            Some((v, _)) => Valuation::Finite(v),
            None => Valuation::Infinity,
        }
    }

    /// The valuation together with the (unique) attaining coefficient index.
    pub fn valuation_with_index(&self) -> Option<(BigRational, usize)> {
        let e = BigRational::from_integer(self.ctx.e.into());
        let mut best: Option<(BigRational, usize)> = None;
        for (i, c) in self.coeffs.iter().enumerate() {
            let Some(vc) = rational_valuation(self.ctx.p, c) else {
                continue;
            };
            let cand = BigRational::from_integer(vc)
                + BigRational::from_integer(BigInt::from(i)) / &e;
            match &best {
                None => best = Some((cand, i)),
                Some((b, _)) if cand < *b => best = Some((cand, i)),
                _ => {}
            }
        }
        best
    }

    /// Exact inverse, solving the e×e system x·y = 1 over Q.
    pub fn invert(&self) -> Result<ValuedScalar, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let e = self.ctx.e as usize;
        if e == 1 {
            return Ok(ValuedScalar { ctx: self.ctx, coeffs: vec![self.coeffs[0].recip()] });
        }
        // Column j of the multiplication matrix is x·π^j in the π-basis.
        let p = BigRational::from_integer(self.ctx.p.into());
        let mut m = QMat::zeros(e, e);
        for j in 0..e {
            for (i, c) in self.coeffs.iter().enumerate() {
                let k = i + j;
                if k < e {
                    let v = m.get(k, j) + c;
                    m.set(k, j, v);
                } else {
                    let v = m.get(k - e, j) + c * &p;
                    m.set(k - e, j, v);
                }
            }
        }
        let mut rhs = vec![BigRational::zero(); e];
        rhs[0] = BigRational::one();
        // x ≠ 0 is invertible in the field Q(π), so the system is regular.
        let coeffs = solve(&m, &rhs).expect("nonzero element of a field is invertible");
        Ok(ValuedScalar { ctx: self.ctx, coeffs })
    }

    pub fn div(&self, other: &ValuedScalar) -> Result<ValuedScalar, ScalarError> {
        self.mul(&other.invert()?)
    }

    /// Replaces each coefficient by its balanced residue modulo p^m, which
    /// changes the element by something of valuation ≥ m. Only defined for
    /// p-integral coefficients (denominators prime to p); keeps the numbers
    /// small through iterative computations that are read modulo p^m anyway.
    pub fn reduce_mod_p_pow(&self, m: u32) -> Result<ValuedScalar, ScalarError> {
        let modulus = BigInt::from(self.ctx.p).pow(m);
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                if c.is_zero() {
                    return Ok(BigRational::zero());
                }
                let den = c.denom();
                if (den % BigInt::from(self.ctx.p)).is_zero() {
                    return Err(ScalarError::NotPIntegral(m));
                }
                let inv = mod_inverse(den, &modulus).ok_or(ScalarError::NotPIntegral(m))?;
                let mut r = num_integer::Integer::mod_floor(&(c.numer() * inv), &modulus);
                // Balanced representative in (−p^m/2, p^m/2].
                if &r * BigInt::from(2) > modulus {
                    r -= &modulus;
                }
                Ok(BigRational::from_integer(r))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ValuedScalar { ctx: self.ctx, coeffs })
    }
}

fn mod_inverse(a: &BigInt, modulus: &BigInt) -> Option<BigInt> {
    let gcd = num_integer::Integer::extended_gcd(&num_integer::Integer::mod_floor(a, modulus), modulus);
    if !gcd.gcd.is_one() {
        return None;
    }
    Some(num_integer::Integer::mod_floor(&gcd.x, modulus))
}

impl fmt::Display for ValuedScalar {
    /// Renders as "c0 + c1*pi + c2*pi^2 + …", omitting zero terms.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", c)?,
                1 => write!(f, "{}*pi", c)?,
                _ => write!(f, "{}*pi^{}", c, i)?,
            }
        }
        Ok(())
    }
}

/// Parses the rendering grammar: sum of terms `rat`, `rat*pi`, `rat*pi^k`,
/// `pi`, `pi^k`, with rationals written `a/b` or `a`.
pub fn parse_scalar(ctx: &ScalarContext, s: &str) -> Result<ValuedScalar, ScalarError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ScalarError::Parse("empty scalar".into()));
    }
    let mut coeffs = vec![BigRational::zero(); ctx.e as usize];
    for term in split_terms(s)? {
        let (coeff, power) = parse_term(&term)?;
        if power >= ctx.e as usize {
            return Err(ScalarError::Parse(format!(
                "pi^{} is out of range for ramification {}",
                power, ctx.e
            )));
        }
        coeffs[power] += coeff;
    }
    Ok(ValuedScalar { ctx: *ctx, coeffs })
}

/// Splits on top-level '+' and '-' (the sign travels with the term).
fn split_terms(s: &str) -> Result<Vec<String>, ScalarError> {
    let mut terms = Vec::new();
    let mut cur = String::new();
    for (i, ch) in s.chars().enumerate() {
        match ch {
            '+' if i > 0 => {
                if cur.trim().is_empty() {
                    return Err(ScalarError::Parse(format!("dangling '+' in {s:?}")));
                }
                terms.push(cur.trim().to_string());
                cur = String::new();
            }
            '-' if i > 0 && !cur.trim().is_empty() => {
                terms.push(cur.trim().to_string());
                cur = String::from("-");
            }
            _ => cur.push(ch),
        }
    }
    if cur.trim().is_empty() {
        return Err(ScalarError::Parse(format!("dangling sign in {s:?}")));
    }
    terms.push(cur.trim().to_string());
    Ok(terms)
}

fn parse_term(term: &str) -> Result<(BigRational, usize), ScalarError> {
    let term = term.trim();
    let (sign, body) = match term.strip_prefix('-') {
        Some(rest) => (-1i64, rest.trim()),
        None => (1, term),
    };
    let (rat_str, power) = if let Some((lhs, rhs)) = body.split_once('*') {
        (lhs.trim().to_string(), parse_pi(rhs.trim())?)
    } else if body.starts_with("pi") {
        ("1".to_string(), parse_pi(body)?)
    } else {
        (body.to_string(), 0)
    };
    let rat = parse_rational(&rat_str)?;
    Ok((rat * BigRational::from_integer(sign.into()), power))
}

fn parse_pi(s: &str) -> Result<usize, ScalarError> {
    if s == "pi" {
        return Ok(1);
    }
    s.strip_prefix("pi^")
        .and_then(|k| k.trim().parse::<usize>().ok())
        .ok_or_else(|| ScalarError::Parse(format!("expected pi power, got {s:?}")))
}

/// Parses "a/b" or "a" into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, ScalarError> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt, ScalarError> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| ScalarError::Parse(format!("bad integer {t:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(ScalarError::Parse("zero denominator".into()));
            }
            Ok(BigRational::new(parse_int(n)?, den))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

/// Renders a rational as "a/b" (or "a" when the denominator is 1).
pub fn render_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, e: u32) -> ScalarContext {
        ScalarContext::new(p, e).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn context_rejects_composites() {
        assert!(ScalarContext::new(6, 1).is_err());
        assert!(ScalarContext::new(1, 1).is_err());
        assert!(ScalarContext::new(2, 0).is_err());
        assert!(ScalarContext::new(5, 2).is_ok());
    }

    #[test]
    fn add_examples() {
        let c = ctx(5, 1);
        let x = c.from_rational(q(1, 2));
        let y = c.from_rational(q(1, 3));
        assert_eq!(x.add(&y).unwrap(), c.from_rational(q(5, 6)));

        let c2 = ctx(5, 2);
        let two_pi = c2.pi().add(&c2.pi()).unwrap();
        assert_eq!(two_pi.coeffs()[1], q(2, 1));

        let z = c2.pi();
        assert_eq!(z.add(&c2.zero()).unwrap(), z);
    }

    #[test]
    fn context_mismatch_is_an_error() {
        let a = ctx(5, 1).one();
        let b = ctx(5, 2).one();
        assert!(matches!(a.add(&b), Err(ScalarError::ContextMismatch(..))));
        assert!(matches!(a.mul(&b), Err(ScalarError::ContextMismatch(..))));
    }

    #[test]
    fn mul_reduces_pi_squared() {
        let c = ctx(5, 2);
        let pi = c.pi();
        assert_eq!(pi.mul(&pi).unwrap(), c.from_integer(5));

        let one_plus = c.one().add(&pi).unwrap();
        let one_minus = c.one().sub(&pi).unwrap();
        assert_eq!(one_plus.mul(&one_minus).unwrap(), c.from_integer(-4));

        let x = c.from_rational(q(7, 3));
        assert_eq!(x.mul(&c.one()).unwrap(), x);
    }

    #[test]
    fn valuation_examples() {
        let c1 = ctx(5, 1);
        assert_eq!(c1.from_integer(50).valuation(), Valuation::Finite(q(2, 1)));

        let c2 = ctx(5, 2);
        assert_eq!(c2.pi().valuation(), Valuation::Finite(q(1, 2)));

        // 5 + π: min(1, 1/2) = 1/2.
        let x = c2.from_integer(5).add(&c2.pi()).unwrap();
        assert_eq!(x.valuation(), Valuation::Finite(q(1, 2)));

        assert_eq!(c2.zero().valuation(), Valuation::Infinity);
    }

    #[test]
    fn invert_examples() {
        let c1 = ctx(5, 1);
        assert_eq!(c1.from_integer(2).invert().unwrap(), c1.from_rational(q(1, 2)));

        let c2 = ctx(5, 2);
        let pi = c2.pi();
        let inv = pi.invert().unwrap();
        assert_eq!(pi.mul(&inv).unwrap(), c2.one());
        assert_eq!(inv, pi.scale(&q(1, 5)));

        let x = c2.one().add(&pi).unwrap();
        let y = x.invert().unwrap();
        assert_eq!(x.mul(&y).unwrap(), c2.one());
        // (1+π)^{-1} = (1-π)/(1-5) = (1-π)/(-4).
        let expected = c2.one().sub(&pi).unwrap().scale(&q(-1, 4));
        assert_eq!(y, expected);

        assert!(matches!(c2.zero().invert(), Err(ScalarError::DivisionByZero)));
    }

    #[test]
    fn p_pow_handles_fractional_exponents() {
        let c = ctx(5, 2);
        assert_eq!(c.p_pow(&q(3, 2)).unwrap(), c.pi().mul(&c.from_integer(5)).unwrap());
        assert_eq!(c.p_pow(&q(-1, 2)).unwrap().mul(&c.pi()).unwrap(), c.one());
        assert!(c.p_pow(&q(1, 3)).is_err());
    }

    #[test]
    fn display_parse_round_trip() {
        let c = ctx(5, 2);
        let x = c.from_rational(q(-3, 2)).add(&c.pi().scale(&q(7, 4))).unwrap();
        let rendered = x.to_string();
        assert_eq!(rendered, "-3/2 + 7/4*pi");
        assert_eq!(parse_scalar(&c, &rendered).unwrap(), x);
        assert_eq!(parse_scalar(&c, "0").unwrap(), c.zero());
        assert_eq!(parse_scalar(&c, "pi").unwrap(), c.pi());
        assert!(parse_scalar(&c, "pi^2").is_err());
    }
}
