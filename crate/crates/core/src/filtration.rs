//! Dimension/weight/slope reports for the filtrations of H¹ of the curve a
//! patron encodes, the total monodromy operator, and the splitting-change
//! (Picard–Lefschetz) class.
//!
//! Every report describes the associated graded of a three-step filtration
//!
//!   [ graph H¹ | component contributions | dual of compactly supported H¹ ]
//!
//! with weights 0, 1, 2. Which graph and which component contributions enter
//! depends on the theory:
//!
//! * étale (ℓ ≠ p): Γ^ad everywhere, each short contributes 2g;
//! * separated Hyodo–Kato: Γ_int for the first piece, interior shorts
//!   contribute 2g, boundary shorts only their slope-1 part d₁; the third
//!   piece is twisted by (−1);
//! * separated de Rham: same dimensions as Hyodo–Kato (via the Hyodo–Kato
//!   isomorphism) without Frobenius data;
//! * overconvergent (dagger): the separated graph Γ^an (0⁺ edges deleted),
//!   all shorts contribute in full, with Hyodo–Kato slope and twist data.
//!
//! Frobenius slopes are tracked per piece as multiplicities at 0, at 1, and
//! an aggregate band strictly inside (0,1); the patron determines nothing
//! finer. Only the block H¹_c* → H¹ of the monodromy can be nonzero, so the
//! total operator squares to zero by shape.

use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    cohomology, graph_bases, interior_subgraph, monodromy_matrix, separate, CoeffRing, Graph,
    GraphError,
};
use crate::linalg::QMat;
use crate::patron::{validate, Patron, PatronError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FiltrationError {
    #[error(transparent)]
    Patron(#[from] PatronError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("unknown theory {0:?}")]
    BadTheory(String),
    #[error("vector of length {got} does not match the {want} edges of the adic graph")]
    BadVectorLength { got: usize, want: usize },
    #[error("vector is not in Ker of the coboundary operator")]
    NotInKernel,
}

/// Cohomology theory whose H¹ filtration is being reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theory {
    /// Étale cohomology with Q_ℓ(1) coefficients, ℓ ≠ p.
    EtaleL(u64),
    /// Separated Hyodo–Kato cohomology.
    HyodoKatoSep,
    /// Separated de Rham cohomology.
    DeRhamSep,
    /// Overconvergent (dagger) Hyodo–Kato cohomology.
    Dagger,
}

impl Theory {
    pub fn etale(ell: u64) -> Result<Theory, FiltrationError> {
        if !is_prime(ell) {
            return Err(FiltrationError::NotPrime(ell));
        }
        Ok(Theory::EtaleL(ell))
    }

    pub fn parse(s: &str) -> Result<Theory, FiltrationError> {
        let s = s.trim();
        if let Some(ell) = s.strip_prefix("etale:") {
            let ell: u64 = ell
                .trim()
                .parse()
                .map_err(|_| FiltrationError::BadTheory(s.to_string()))?;
            return Theory::etale(ell);
        }
        match s {
            "hk" => Ok(Theory::HyodoKatoSep),
            "dr" => Ok(Theory::DeRhamSep),
            "dagger" => Ok(Theory::Dagger),
            _ => Err(FiltrationError::BadTheory(s.to_string())),
        }
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theory::EtaleL(ell) => write!(f, "etale:{}", ell),
            Theory::HyodoKatoSep => write!(f, "hk"),
            Theory::DeRhamSep => write!(f, "dr"),
            Theory::Dagger => write!(f, "dagger"),
        }
    }
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

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceLabel {
    GraphH1,
    Components,
    GraphH1cDual,
}

/// Frobenius slope multiplicities: at 0, strictly inside (0,1) as an
/// unresolved aggregate band, and at 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeProfile {
    pub zero: usize,
    pub band: usize,
    pub one: usize,
}

impl SlopeProfile {
    pub fn total(&self) -> usize {
        self.zero + self.band + self.one
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedPiece {
    pub label: PieceLabel,
    pub dimension: usize,
    pub weight: u8,
    /// Present for the Frobenius-equipped theories (Hyodo–Kato and dagger).
    pub slopes: Option<SlopeProfile>,
    pub tate_twist: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiltrationReport {
    pub theory: Theory,
    pub pieces: [GradedPiece; 3],
    pub total_dimension: usize,
    /// The only possibly nonzero monodromy block, from the GraphH1cDual basis
    /// to the GraphH1 basis (deterministic bases of the underlying graphs).
    pub monodromy: QMat,
}

impl FiltrationReport {
    /// Dimension/weight/slope/twist data, without the monodromy matrix.
    pub fn graded_data(&self) -> Vec<(PieceLabel, usize, u8, Option<SlopeProfile>, i64)> {
        self.pieces
            .iter()
            .map(|p| (p.label, p.dimension, p.weight, p.slopes.clone(), p.tate_twist))
            .collect()
    }
}

struct ShortSums {
    two_g_all: usize,
    two_g_interior: usize,
    d1_interior: usize,
    d1_boundary: usize,
    band_interior: usize,
    band_all: usize,
    d1_all: usize,
}

fn short_sums(pat: &Patron, gamma_ad: &Graph) -> ShortSums {
    let boundary = crate::graph::boundary_vertices(gamma_ad);
    let mut sums = ShortSums {
        two_g_all: 0,
        two_g_interior: 0,
        d1_interior: 0,
        d1_boundary: 0,
        band_interior: 0,
        band_all: 0,
        d1_all: 0,
    };
    for (i, vid) in gamma_ad.vertex_ids().iter().enumerate() {
        let short = pat.short(vid).expect("graph vertices come from shorts");
        let two_g = 2 * short.genus as usize;
        let d1 = short.slope_one_dim as usize;
        sums.two_g_all += two_g;
        sums.band_all += two_g - 2 * d1;
        sums.d1_all += d1;
        if boundary.contains(&i) {
            sums.d1_boundary += d1;
        } else {
            sums.two_g_interior += two_g;
            sums.d1_interior += d1;
            sums.band_interior += two_g - 2 * d1;
        }
    }
    sums
}

fn ensure_valid(pat: &Patron) -> Result<(), FiltrationError> {
    let violations = validate(pat);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(PatronError::Invalid(violations).into())
    }
}

/// Restriction H¹(Γ) → H¹(Γ′) in the deterministic cokernel bases, for a
/// subgraph Γ′ whose edges are matched by id.
///
/// The monodromy of the separated Hyodo–Kato/de Rham theories is defined
/// here as N_μ followed by this restriction; the basis compatibility of the
/// restriction with the filtration maps is a construction of this library,
/// not forced by the abstract statements.
fn restriction_matrix(g: &Graph, sub: &Graph) -> QMat {
    let g_bases = graph_bases(g);
    let sub_bases = graph_bases(sub);
    let g_compact = g.compact_edges();
    let sub_compact = sub.compact_edges();
    let rows = sub_bases.coker_edges.len();
    let cols = g_bases.coker_edges.len();
    let mut m = QMat::zeros(rows, cols);
    for (j, &ci) in g_bases.coker_edges.iter().enumerate() {
        let edge_id = &g.edges()[g_compact[ci]].id;
        let Some(sub_pos) = sub_compact
            .iter()
            .position(|&ei| &sub.edges()[ei].id == edge_id)
        else {
            continue;
        };
        let mut vec = vec![BigRational::zero(); sub_compact.len()];
        vec[sub_pos] = BigRational::from_integer(1.into());
        for (i, v) in sub_bases.image.quotient_coords(&vec).into_iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}

/// The three graded pieces and the monodromy block for one theory.
pub fn filtration_report(pat: &Patron, theory: Theory) -> Result<FiltrationReport, FiltrationError> {
    ensure_valid(pat)?;
    let gamma_ad = pat.adic_graph()?;
    let sums = short_sums(pat, &gamma_ad);
    let coh_ad = cohomology(&gamma_ad, CoeffRing::RationalField)?;
    let n_ad = monodromy_matrix(&gamma_ad, CoeffRing::RationalField)?;

    let (dims, slopes, twists, monodromy): (
        [usize; 3],
        [Option<SlopeProfile>; 3],
        [i64; 3],
        QMat,
    ) = match theory {
        Theory::EtaleL(_) => (
            [coh_ad.h1_rank, sums.two_g_all, coh_ad.h1c_dual_rank],
            [None, None, None],
            [0, 0, -1],
            n_ad,
        ),
        Theory::HyodoKatoSep | Theory::DeRhamSep => {
            let gamma_int = interior_subgraph(&gamma_ad);
            let coh_int = cohomology(&gamma_int, CoeffRing::RationalField)?;
            let restrict = restriction_matrix(&gamma_ad, &gamma_int);
            let n = restrict.mul(&n_ad);
            let dims = [
                coh_int.h1_rank,
                sums.two_g_interior + sums.d1_boundary,
                coh_ad.h1c_dual_rank,
            ];
            if theory == Theory::HyodoKatoSep {
                (
                    dims,
                    [
                        Some(SlopeProfile { zero: dims[0], band: 0, one: 0 }),
                        Some(SlopeProfile {
                            zero: sums.d1_interior,
                            band: sums.band_interior,
                            one: sums.d1_interior + sums.d1_boundary,
                        }),
                        Some(SlopeProfile { zero: 0, band: 0, one: dims[2] }),
                    ],
                    [0, 0, -1],
                    n,
                )
            } else {
                (dims, [None, None, None], [0, 0, 0], n)
            }
        }
        Theory::Dagger => {
            let gamma_an = separate(&gamma_ad)?;
            let coh_an = cohomology(&gamma_an, CoeffRing::RationalField)?;
            let n = monodromy_matrix(&gamma_an, CoeffRing::RationalField)?;
            let dims = [coh_an.h1_rank, sums.two_g_all, coh_an.h1c_dual_rank];
            (
                dims,
                [
                    Some(SlopeProfile { zero: dims[0], band: 0, one: 0 }),
                    Some(SlopeProfile {
                        zero: sums.d1_all,
                        band: sums.band_all,
                        one: sums.d1_all,
                    }),
                    Some(SlopeProfile { zero: 0, band: 0, one: dims[2] }),
                ],
                [0, 0, -1],
                n,
            )
        }
    };

    let labels = [PieceLabel::GraphH1, PieceLabel::Components, PieceLabel::GraphH1cDual];
    let pieces: [GradedPiece; 3] = std::array::from_fn(|i| GradedPiece {
        label: labels[i],
        dimension: dims[i],
        weight: i as u8,
        slopes: slopes[i].clone(),
        tate_twist: twists[i],
    });
    for p in &pieces {
        if let Some(s) = &p.slopes {
            debug_assert_eq!(s.total(), p.dimension, "slope multiplicities match dimension");
        }
    }
    debug_assert_eq!(pieces[0].dimension, monodromy.nrows());
    debug_assert_eq!(pieces[2].dimension, monodromy.ncols());
    Ok(FiltrationReport {
        theory,
        total_dimension: dims.iter().sum(),
        pieces,
        monodromy,
    })
}

/// The monodromy operator on the direct sum of the three graded pieces: zero
/// except for the GraphH1cDual → GraphH1 block. Squares to zero by shape.
pub fn total_monodromy(pat: &Patron, theory: Theory) -> Result<QMat, FiltrationError> {
    let report = filtration_report(pat, theory)?;
    let d: Vec<usize> = report.pieces.iter().map(|p| p.dimension).collect();
    let total = d[0] + d[1] + d[2];
    let mut m = QMat::zeros(total, total);
    for i in 0..report.monodromy.nrows() {
        for j in 0..report.monodromy.ncols() {
            m.set(i, d[0] + d[1] + j, report.monodromy.get(i, j).clone());
        }
    }
    Ok(m)
}

/// The change-of-splitting class t·N_μ(φ) in the deterministic Coker ∂ basis
/// of Γ^ad, for φ ∈ Ker ∂* (edge-indexed over the adic graph, edges in the
/// graph's id order).
pub fn picard_lefschetz_delta(
    pat: &Patron,
    t: &BigRational,
    phi: &[BigRational],
) -> Result<Vec<BigRational>, FiltrationError> {
    ensure_valid(pat)?;
    let gamma = pat.adic_graph()?;
    if phi.len() != gamma.edge_count() {
        return Err(FiltrationError::BadVectorLength {
            got: phi.len(),
            want: gamma.edge_count(),
        });
    }
    let coboundary = gamma.coboundary_matrix().to_rational();
    if coboundary.mul_vec(phi).iter().any(|x| !x.is_zero()) {
        return Err(FiltrationError::NotInKernel);
    }
    let bases = graph_bases(&gamma);
    let compact = gamma.compact_edges();
    let weighted: Vec<BigRational> = compact
        .iter()
        .map(|&ei| {
            let mu = gamma.edges()[ei]
                .length
                .as_finite()
                .expect("patron legs have finite rational lengths");
            mu * &phi[ei]
        })
        .collect();
    Ok(bases
        .image
        .quotient_coords(&weighted)
        .into_iter()
        .map(|v| t * v)
        .collect())
}
