//! Finite semi-metrized oriented graphs and their cohomology.
//!
//! A graph is a finite vertex set S and a finite edge set A; each edge has an
//! orientation (tail, head) and at least one present endpoint. Edges with both
//! endpoints present form A_c (relatively compact edges); loops are allowed.
//! Lengths live in the extended set {q, 0⁺, q⁺, q⁺⁺, ∞, ∞⁺, 2∞}.
//!
//! H¹(Γ,L) = Coker[∂: L^S → L^{A_c}] and H¹_c(Γ,L)* = Ker[∂*: L^A → L^S],
//! with ∂φ(a) = φ(s₂(a)) − φ(s₁(a)) and ∂*φ(s) = Σ_{out} φ − Σ_{in} φ.
//! Bases are deterministic: vertices and edges are ordered lexicographically
//! by identifier, the Coker basis consists of the non-pivot edge classes of
//! the echelon form of im ∂, and the Ker basis is the standard nullspace of
//! the echelon form of ∂*.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{EchelonSubspace, IMat, QMat};
use crate::scalar::{parse_rational, render_rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("duplicate edge id {0:?}")]
    DuplicateEdge(String),
    #[error("edge {edge:?} references unknown vertex {vertex:?}")]
    UnknownVertex { edge: String, vertex: String },
    #[error("edge {0:?} has no endpoints; free circles/lines are not modeled")]
    MissingEndpoints(String),
    #[error("finite length must be positive, got {0:?}")]
    NonPositiveLength(String),
    #[error("bad length literal {0:?}")]
    BadLength(String),
    #[error("edge {0:?} has a non-finite compact length")]
    NonFiniteLength(String),
    #[error("edge {0:?}: compact edges need a finite rational length for monodromy")]
    NonRationalLength(String),
    #[error("edge {0:?}: length does not lie in the coefficient ring")]
    LengthNotInRing(String),
    #[error("unsupported length on edge {0:?}")]
    UnsupportedLength(String),
    #[error("modulus must be >= 2, got {0}")]
    BadModulus(u64),
}

/// Edge lengths: the extended half-line with bout markers. The number of `+`
/// marks is the number of contracted ends of the edge closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Length {
    Finite(BigRational),
    ZeroPlus,
    FinitePlus(BigRational),
    FinitePlusPlus(BigRational),
    Infinity,
    InfinityPlus,
    TwoInfinity,
}

impl Length {
    pub fn finite(q: BigRational) -> Result<Self, GraphError> {
        if q <= BigRational::zero() {
            return Err(GraphError::NonPositiveLength(render_rational(&q)));
        }
        Ok(Length::Finite(q))
    }

    /// q⁺ with q ≥ 0; 0⁺ is canonicalized to `ZeroPlus`.
    pub fn finite_plus(q: BigRational) -> Result<Self, GraphError> {
        if q < BigRational::zero() {
            return Err(GraphError::NonPositiveLength(render_rational(&q)));
        }
        if q.is_zero() {
            Ok(Length::ZeroPlus)
        } else {
            Ok(Length::FinitePlus(q))
        }
    }

    pub fn finite_plus_plus(q: BigRational) -> Result<Self, GraphError> {
        if q < BigRational::zero() {
            return Err(GraphError::NonPositiveLength(render_rational(&q)));
        }
        Ok(Length::FinitePlusPlus(q))
    }

    pub fn parse(s: &str) -> Result<Self, GraphError> {
        let s = s.trim();
        let bad = || GraphError::BadLength(s.to_string());
        match s {
            "inf" => return Ok(Length::Infinity),
            "inf+" => return Ok(Length::InfinityPlus),
            "2inf" => return Ok(Length::TwoInfinity),
            _ => {}
        }
        if let Some(q) = s.strip_suffix("++") {
            return Length::finite_plus_plus(parse_rational(q).map_err(|_| bad())?);
        }
        if let Some(q) = s.strip_suffix('+') {
            return Length::finite_plus(parse_rational(q).map_err(|_| bad())?);
        }
        Length::finite(parse_rational(s).map_err(|_| bad())?)
    }

    pub fn as_finite(&self) -> Option<&BigRational> {
        match self {
            Length::Finite(q) => Some(q),
            _ => None,
        }
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Finite(q) => write!(f, "{}", render_rational(q)),
            Length::ZeroPlus => write!(f, "0+"),
            Length::FinitePlus(q) => write!(f, "{}+", render_rational(q)),
            Length::FinitePlusPlus(q) => write!(f, "{}++", render_rational(q)),
            Length::Infinity => write!(f, "inf"),
            Length::InfinityPlus => write!(f, "inf+"),
            Length::TwoInfinity => write!(f, "2inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub tail: Option<usize>,
    pub head: Option<usize>,
    pub length: Length,
}

impl Edge {
    pub fn is_compact(&self) -> bool {
        self.tail.is_some() && self.head.is_some()
    }

    pub fn is_loop(&self) -> bool {
        self.is_compact() && self.tail == self.head
    }
}

/// Building block for `Graph::new`: endpoints by vertex id, `None` = absent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSpec {
    pub id: String,
    pub tail: Option<String>,
    pub head: Option<String>,
    pub length: Length,
}

impl EdgeSpec {
    pub fn compact(id: &str, tail: &str, head: &str, length: Length) -> Self {
        EdgeSpec {
            id: id.into(),
            tail: Some(tail.into()),
            head: Some(head.into()),
            length,
        }
    }

    pub fn dangler(id: &str, tail: &str, length: Length) -> Self {
        EdgeSpec { id: id.into(), tail: Some(tail.into()), head: None, length }
    }
}

/// Finite oriented semi-metrized graph with deterministic element order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertex_ids: Vec<String>,
    edges: Vec<Edge>,
}

impl Graph {
    pub fn new(
        vertices: Vec<String>,
        edge_specs: Vec<EdgeSpec>,
    ) -> Result<Graph, GraphError> {
        let mut vertex_ids = vertices;
        vertex_ids.sort();
        for w in vertex_ids.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateVertex(w[0].clone()));
            }
        }
        let index: BTreeMap<&str, usize> =
            vertex_ids.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let resolve = |edge: &str, v: &Option<String>| -> Result<Option<usize>, GraphError> {
            match v {
                None => Ok(None),
                Some(id) => index.get(id.as_str()).copied().map(Some).ok_or_else(|| {
                    GraphError::UnknownVertex { edge: edge.into(), vertex: id.clone() }
                }),
            }
        };
        let mut edges = Vec::with_capacity(edge_specs.len());
        for spec in edge_specs {
            let tail = resolve(&spec.id, &spec.tail)?;
            let head = resolve(&spec.id, &spec.head)?;
            if tail.is_none() && head.is_none() {
                return Err(GraphError::MissingEndpoints(spec.id));
            }
            edges.push(Edge { id: spec.id, tail, head, length: spec.length });
        }
        edges.sort_by(|a, b| a.id.cmp(&b.id));
        for w in edges.windows(2) {
            if w[0].id == w[1].id {
                return Err(GraphError::DuplicateEdge(w[0].id.clone()));
            }
        }
        Ok(Graph { vertex_ids, edges })
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Indices (into `edges`) of the relatively compact edges, in order.
    pub fn compact_edges(&self) -> Vec<usize> {
        (0..self.edges.len()).filter(|&i| self.edges[i].is_compact()).collect()
    }

    pub fn non_compact_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_compact()).count()
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// ∂: L^S → L^{A_c}, row(a) = e_{head(a)} − e_{tail(a)}; loops give zero rows.
    pub fn boundary_matrix(&self) -> IMat {
        let compact = self.compact_edges();
        let mut m = IMat::zeros(compact.len(), self.vertex_count());
        for (r, &ei) in compact.iter().enumerate() {
            let e = &self.edges[ei];
            let (t, h) = (e.tail.unwrap(), e.head.unwrap());
            let v = m.get(r, h) + BigInt::one();
            m.set(r, h, v);
            let v = m.get(r, t) - BigInt::one();
            m.set(r, t, v);
        }
        m
    }

    /// ∂: L^S → L^A with functions vanishing at absent endpoints.
    pub fn boundary_matrix_compact_support(&self) -> IMat {
        let mut m = IMat::zeros(self.edge_count(), self.vertex_count());
        for (r, e) in self.edges.iter().enumerate() {
            if let Some(h) = e.head {
                let v = m.get(r, h) + BigInt::one();
                m.set(r, h, v);
            }
            if let Some(t) = e.tail {
                let v = m.get(r, t) - BigInt::one();
                m.set(r, t, v);
            }
        }
        m
    }

    /// ∂*: L^A → L^S, entry(s,a) = [tail(a)=s] − [head(a)=s]; loops contribute 0.
    pub fn coboundary_matrix(&self) -> IMat {
        let mut m = IMat::zeros(self.vertex_count(), self.edge_count());
        for (c, e) in self.edges.iter().enumerate() {
            if let Some(t) = e.tail {
                let v = m.get(t, c) + BigInt::one();
                m.set(t, c, v);
            }
            if let Some(h) = e.head {
                let v = m.get(h, c) - BigInt::one();
                m.set(h, c, v);
            }
        }
        m
    }
}

/// Coefficient ring for cohomology computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffRing {
    IntegerRing,
    RationalField,
    IntegersMod(u64),
}

impl CoeffRing {
    pub fn integers_mod(n: u64) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::BadModulus(n));
        }
        Ok(CoeffRing::IntegersMod(n))
    }
}

impl fmt::Display for CoeffRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffRing::IntegerRing => write!(f, "Z"),
            CoeffRing::RationalField => write!(f, "Q"),
            CoeffRing::IntegersMod(n) => write!(f, "Z/{}", n),
        }
    }
}

/// Ranks, torsion and chosen bases of the graph cohomology groups.
///
/// Over Q, "rank" is a dimension. Over Z it is the free rank, with the
/// elementary divisors of the torsion part of H¹_c reported separately.
/// Over Z/n every module is a finite direct sum of cyclic groups Z/m (m | n,
/// m > 1); "rank" counts the summands and the divisors list their orders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohomologyReport {
    pub ring: CoeffRing,
    pub h0_rank: usize,
    pub h1_rank: usize,
    pub h0c_rank: usize,
    pub h1c_rank: usize,
    pub h1c_dual_rank: usize,
    /// Elementary divisors of the torsion of H¹_c (empty over Q).
    pub h1c_torsion: Vec<BigInt>,
    /// Classes of standard edge vectors spanning Coker ∂ (A_c-indexed).
    pub coker_basis: Vec<Vec<BigRational>>,
    /// Standard nullspace basis of Ker ∂* (A-indexed).
    pub ker_basis: Vec<Vec<BigRational>>,
}

/// Deterministic echelon data shared by cohomology and monodromy: the image
/// of ∂ in echelon form (for cokernel coordinates) and the kernel of ∂*.
pub(crate) struct GraphBases {
    pub(crate) image: EchelonSubspace,
    pub(crate) coker_edges: Vec<usize>,
    pub(crate) ker_basis: Vec<Vec<BigRational>>,
}

pub(crate) fn graph_bases(g: &Graph) -> GraphBases {
    let boundary = g.boundary_matrix().to_rational();
    let image = EchelonSubspace::from_row_span(&boundary.transpose());
    let coker_edges = image.complement();
    let ker_basis = g.coboundary_matrix().to_rational().kernel_basis();
    GraphBases { image, coker_edges, ker_basis }
}

fn ker_rank(m: &IMat, ring: CoeffRing) -> usize {
    let cols = m.ncols();
    match ring {
        CoeffRing::RationalField | CoeffRing::IntegerRing => cols - m.to_rational().rank(),
        CoeffRing::IntegersMod(n) => {
            let divisors = m.smith_divisors();
            let n = BigInt::from(n);
            let torsion = divisors
                .iter()
                .filter(|d| !num_integer::Integer::gcd(*d, &n).is_one())
                .count();
            cols - divisors.len() + torsion
        }
    }
}

fn coker_rank_and_torsion(m: &IMat, ring: CoeffRing) -> (usize, Vec<BigInt>) {
    let rows = m.nrows();
    match ring {
        CoeffRing::RationalField => (rows - m.to_rational().rank(), Vec::new()),
        CoeffRing::IntegerRing => {
            let divisors = m.smith_divisors();
            let torsion: Vec<BigInt> =
                divisors.iter().filter(|d| !d.is_one()).cloned().collect();
            (rows - divisors.len(), torsion)
        }
        CoeffRing::IntegersMod(n) => {
            let divisors = m.smith_divisors();
            let n = BigInt::from(n);
            let mut torsion: Vec<BigInt> = divisors
                .iter()
                .map(|d| num_integer::Integer::gcd(d, &n))
                .filter(|g| !g.is_one())
                .collect();
            let free = rows - divisors.len();
            torsion.extend(std::iter::repeat_n(n, free));
            torsion.sort();
            (torsion.len(), torsion)
        }
    }
}

/// Ranks and torsion of H⁰, H¹, H⁰_c, H¹_c, H¹_c* over the given ring, with
/// the deterministic bases of Coker ∂ and Ker ∂*.
pub fn cohomology(g: &Graph, ring: CoeffRing) -> Result<CohomologyReport, GraphError> {
    if let CoeffRing::IntegersMod(n) = ring {
        if n < 2 {
            return Err(GraphError::BadModulus(n));
        }
    }
    let boundary = g.boundary_matrix();
    let boundary_c = g.boundary_matrix_compact_support();
    let coboundary = g.coboundary_matrix();

    let h0_rank = ker_rank(&boundary, ring);
    let h0c_rank = ker_rank(&boundary_c, ring);
    let (h1_rank, _) = coker_rank_and_torsion(&boundary, ring);
    let (h1c_rank, h1c_torsion) = coker_rank_and_torsion(&boundary_c, ring);
    let h1c_dual_rank = ker_rank(&coboundary, ring);
    if ring == CoeffRing::RationalField {
        debug_assert_eq!(h1c_dual_rank, h1c_rank, "duality over a field");
    }

    let bases = graph_bases(g);
    let n_compact = g.compact_edges().len();
    let coker_basis = bases
        .coker_edges
        .iter()
        .map(|&i| {
            let mut v = vec![BigRational::zero(); n_compact];
            v[i] = BigRational::one();
            v
        })
        .collect();

    Ok(CohomologyReport {
        ring,
        h0_rank,
        h1_rank,
        h0c_rank,
        h1c_rank,
        h1c_dual_rank,
        h1c_torsion,
        coker_basis,
        ker_basis: bases.ker_basis,
    })
}

/// Alternating-rank identity of the five-term exact sequence
/// 0 → H⁰_c → H⁰ → L^{A∖A_c} → H¹_c → H¹ → 0 over Q.
pub fn exact_sequence_check(g: &Graph) -> bool {
    let r = cohomology(g, CoeffRing::RationalField).expect("rational cohomology");
    let boundary_terms = g.non_compact_edge_count() as i64;
    (r.h0c_rank as i64) - (r.h0_rank as i64) + boundary_terms - (r.h1c_rank as i64)
        + (r.h1_rank as i64)
        == 0
}

/// The monodromy operator N_μ: Ker ∂* → Coker ∂ in the deterministic bases:
/// a circulation φ is sent to the class of (a ↦ μ(a)·φ(a)) restricted to A_c.
///
/// Over Z the lengths must be integers; over Z/n they must be integers and
/// entries are reduced to canonical residues. Length scaling for Z is left to
/// callers (the CLI clears denominators and reports the factor).
pub fn monodromy_matrix(g: &Graph, ring: CoeffRing) -> Result<QMat, GraphError> {
    let compact = g.compact_edges();
    let mut lengths = Vec::with_capacity(compact.len());
    for &ei in &compact {
        let e = &g.edges[ei];
        let q = e.length.as_finite().ok_or_else(|| GraphError::NonRationalLength(e.id.clone()))?;
        match ring {
            CoeffRing::RationalField => {}
            CoeffRing::IntegerRing | CoeffRing::IntegersMod(_) => {
                if !q.is_integer() {
                    return Err(GraphError::LengthNotInRing(e.id.clone()));
                }
            }
        }
        lengths.push(q.clone());
    }

    let bases = graph_bases(g);
    let rows = bases.coker_edges.len();
    let cols = bases.ker_basis.len();
    let mut m = QMat::zeros(rows, cols);
    for (j, phi) in bases.ker_basis.iter().enumerate() {
        let weighted: Vec<BigRational> = compact
            .iter()
            .zip(&lengths)
            .map(|(&ei, mu)| mu * &phi[ei])
            .collect();
        let coords = bases.image.quotient_coords(&weighted);
        for (i, v) in coords.into_iter().enumerate() {
            m.set(i, j, v);
        }
    }
    if let CoeffRing::IntegersMod(n) = ring {
        let n = BigInt::from(n);
        let mut reduced = QMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = m.get(i, j);
                debug_assert!(v.is_integer());
                let r = num_integer::Integer::mod_floor(&v.to_integer(), &n);
                reduced.set(i, j, BigRational::from_integer(r));
            }
        }
        return Ok(reduced);
    }
    Ok(m)
}

/// Barycentric subdivision: each compact edge a of length μ is replaced by a
/// fresh midpoint vertex and two edges of length μ/2, both oriented from the
/// old endpoint toward the midpoint. Dangling edges are unchanged.
pub fn subdivide(g: &Graph) -> Result<Graph, GraphError> {
    let two = BigRational::from_integer(2.into());
    let mut vertices = g.vertex_ids.clone();
    let mut specs = Vec::new();
    for e in &g.edges {
        if !e.is_compact() {
            specs.push(EdgeSpec {
                id: e.id.clone(),
                tail: e.tail.map(|i| g.vertex_ids[i].clone()),
                head: e.head.map(|i| g.vertex_ids[i].clone()),
                length: e.length.clone(),
            });
            continue;
        }
        let mu = e.length.as_finite().ok_or_else(|| GraphError::NonFiniteLength(e.id.clone()))?;
        let half = Length::finite(mu / &two)?;
        let mid = format!("{}__mid", e.id);
        vertices.push(mid.clone());
        specs.push(EdgeSpec::compact(
            &format!("{}__1", e.id),
            &g.vertex_ids[e.tail.unwrap()],
            &mid,
            half.clone(),
        ));
        specs.push(EdgeSpec::compact(
            &format!("{}__2", e.id),
            &g.vertex_ids[e.head.unwrap()],
            &mid,
            half,
        ));
    }
    Graph::new(vertices, specs)
}

/// The separated (metrized) graph: contract zero-length bouts and promote
/// positive-length one-bout edges to compact edges ending at fresh leaves.
pub fn separate(g: &Graph) -> Result<Graph, GraphError> {
    let mut vertices = g.vertex_ids.clone();
    let mut specs = Vec::new();
    for e in &g.edges {
        let tail = e.tail.map(|i| g.vertex_ids[i].clone());
        let head = e.head.map(|i| g.vertex_ids[i].clone());
        match &e.length {
            Length::TwoInfinity => return Err(GraphError::UnsupportedLength(e.id.clone())),
            Length::ZeroPlus => continue,
            Length::FinitePlusPlus(q) if q.is_zero() => continue,
            Length::FinitePlus(q) => {
                // One contracted bout: only meaningful on a one-endpoint edge.
                if e.is_compact() {
                    return Err(GraphError::UnsupportedLength(e.id.clone()));
                }
                let leaf = format!("{}__leaf", e.id);
                vertices.push(leaf.clone());
                let (tail, head) = if tail.is_some() {
                    (tail, Some(leaf))
                } else {
                    (Some(leaf), head)
                };
                specs.push(EdgeSpec {
                    id: e.id.clone(),
                    tail,
                    head,
                    length: Length::finite(q.clone())?,
                });
            }
            Length::Infinity | Length::InfinityPlus => {
                specs.push(EdgeSpec { id: e.id.clone(), tail, head, length: Length::Infinity });
            }
            _ => specs.push(EdgeSpec { id: e.id.clone(), tail, head, length: e.length.clone() }),
        }
    }
    Graph::new(vertices, specs)
}

/// Vertices incident to a 0⁺ edge (the analytic boundary of the curve).
pub fn boundary_vertices(g: &Graph) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for e in &g.edges {
        if e.length == Length::ZeroPlus {
            out.extend(e.tail);
            out.extend(e.head);
        }
    }
    out
}

/// Γ_int: drop the boundary vertices and every edge with an endpoint there.
/// Edges all of whose present endpoints are interior survive.
pub fn interior_subgraph(g: &Graph) -> Graph {
    let boundary = boundary_vertices(g);
    let vertices: Vec<String> = g
        .vertex_ids
        .iter()
        .enumerate()
        .filter(|(i, _)| !boundary.contains(i))
        .map(|(_, v)| v.clone())
        .collect();
    let specs: Vec<EdgeSpec> = g
        .edges
        .iter()
        .filter(|e| {
            e.tail.is_none_or(|t| !boundary.contains(&t))
                && e.head.is_none_or(|h| !boundary.contains(&h))
        })
        .map(|e| EdgeSpec {
            id: e.id.clone(),
            tail: e.tail.map(|i| g.vertex_ids[i].clone()),
            head: e.head.map(|i| g.vertex_ids[i].clone()),
            length: e.length.clone(),
        })
        .collect();
    Graph::new(vertices, specs).expect("subgraph of a valid graph is valid")
}

// --- JSON schema ---

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct VertexDto {
    pub id: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct EdgeDto {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<String>,
    pub length: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GraphDto {
    pub vertices: Vec<VertexDto>,
    pub edges: Vec<EdgeDto>,
}

impl Graph {
    pub fn to_dto(&self) -> GraphDto {
        GraphDto {
            vertices: self.vertex_ids.iter().map(|id| VertexDto { id: id.clone() }).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDto {
                    id: e.id.clone(),
                    tail: e.tail.map(|i| self.vertex_ids[i].clone()),
                    head: e.head.map(|i| self.vertex_ids[i].clone()),
                    length: e.length.to_string(),
                })
                .collect(),
        }
    }

    pub fn from_dto(dto: &GraphDto) -> Result<Graph, GraphError> {
        let vertices = dto.vertices.iter().map(|v| v.id.clone()).collect();
        let specs = dto
            .edges
            .iter()
            .map(|e| {
                Ok(EdgeSpec {
                    id: e.id.clone(),
                    tail: e.tail.clone(),
                    head: e.head.clone(),
                    length: Length::parse(&e.length)?,
                })
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        Graph::new(vertices, specs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn len(n: i64) -> Length {
        Length::finite(BigRational::from_integer(n.into())).unwrap()
    }

    pub(crate) fn segment() -> Graph {
        Graph::new(
            vec!["s1".into(), "s2".into()],
            vec![EdgeSpec::compact("a", "s1", "s2", len(1))],
        )
        .unwrap()
    }

    pub(crate) fn loop_at_s(l: Length) -> Graph {
        Graph::new(vec!["s".into()], vec![EdgeSpec::compact("a", "s", "s", l)]).unwrap()
    }

    pub(crate) fn three_cycle(l1: Length, l2: Length, l3: Length) -> Graph {
        Graph::new(
            vec!["s1".into(), "s2".into(), "s3".into()],
            vec![
                EdgeSpec::compact("a1", "s1", "s2", l1),
                EdgeSpec::compact("a2", "s2", "s3", l2),
                EdgeSpec::compact("a3", "s3", "s1", l3),
            ],
        )
        .unwrap()
    }

    /// Triangle on s1,s2,s3 plus two 0⁺ danglers at s3.
    pub(crate) fn triangle_with_danglers() -> Graph {
        Graph::new(
            vec!["s1".into(), "s2".into(), "s3".into()],
            vec![
                EdgeSpec::compact("a1", "s1", "s2", len(1)),
                EdgeSpec::compact("a2", "s2", "s3", len(1)),
                EdgeSpec::compact("a3", "s3", "s1", len(1)),
                EdgeSpec::dangler("a4", "s3", Length::ZeroPlus),
                EdgeSpec::dangler("a5", "s3", Length::ZeroPlus),
            ],
        )
        .unwrap()
    }

    fn ranks(g: &Graph, ring: CoeffRing) -> (usize, usize, usize, usize, usize) {
        let r = cohomology(g, ring).unwrap();
        (r.h0_rank, r.h1_rank, r.h0c_rank, r.h1c_rank, r.h1c_dual_rank)
    }

    #[test]
    fn rejects_degenerate_edges() {
        let e = EdgeSpec { id: "a".into(), tail: None, head: None, length: len(1) };
        assert!(matches!(
            Graph::new(vec!["s".into()], vec![e]),
            Err(GraphError::MissingEndpoints(_))
        ));
        assert!(Length::finite(q(0, 1)).is_err());
        assert!(Length::finite(q(-1, 2)).is_err());
        assert_eq!(Length::finite_plus(q(0, 1)).unwrap(), Length::ZeroPlus);
    }

    #[test]
    fn length_literals_round_trip() {
        for s in ["3/2", "2", "0+", "3/2+", "0++", "5++", "inf", "inf+", "2inf"] {
            assert_eq!(Length::parse(s).unwrap().to_string(), s);
        }
        assert!(Length::parse("0").is_err());
        assert!(Length::parse("x").is_err());
    }

    #[test]
    fn boundary_matrix_examples() {
        let m = segment().boundary_matrix();
        assert_eq!(m, IMat::from_int_rows(vec![vec![-1, 1]]));

        let m = loop_at_s(len(1)).boundary_matrix();
        assert_eq!(m, IMat::from_int_rows(vec![vec![0]]));

        let m = three_cycle(len(1), len(1), len(1)).boundary_matrix();
        assert_eq!(
            m,
            IMat::from_int_rows(vec![vec![-1, 1, 0], vec![0, -1, 1], vec![1, 0, -1]])
        );
    }

    #[test]
    fn compact_support_boundary_examples() {
        let dangler = Graph::new(
            vec!["s".into()],
            vec![EdgeSpec::dangler("a", "s", Length::Infinity)],
        )
        .unwrap();
        assert_eq!(dangler.boundary_matrix_compact_support(), IMat::from_int_rows(vec![vec![-1]]));

        let seg = segment();
        assert_eq!(seg.boundary_matrix_compact_support(), seg.boundary_matrix());

        let g = Graph::new(
            vec!["s1".into(), "s2".into()],
            vec![
                EdgeSpec::compact("a1", "s1", "s2", len(1)),
                EdgeSpec::dangler("a2", "s2", Length::Infinity),
            ],
        )
        .unwrap();
        assert_eq!(
            g.boundary_matrix_compact_support(),
            IMat::from_int_rows(vec![vec![-1, 1], vec![0, -1]])
        );
    }

    #[test]
    fn coboundary_examples() {
        let m = segment().coboundary_matrix();
        assert_eq!(m, IMat::from_int_rows(vec![vec![1], vec![-1]]));

        let m = loop_at_s(len(1)).coboundary_matrix();
        assert_eq!(m, IMat::from_int_rows(vec![vec![0]]));
    }

    #[test]
    fn coboundary_is_negative_transpose_of_boundary_on_compact_edges() {
        for g in [segment(), loop_at_s(len(2)), three_cycle(len(1), len(2), len(3)), triangle_with_danglers()] {
            let cob = g.coboundary_matrix();
            let bt = g.boundary_matrix().transpose();
            for (r, &ei) in g.compact_edges().iter().enumerate() {
                for s in 0..g.vertex_count() {
                    assert_eq!(cob.get(s, ei), &(-bt.get(s, r)));
                }
            }
        }
    }

    #[test]
    fn cohomology_examples() {
        assert_eq!(ranks(&segment(), CoeffRing::RationalField), (1, 0, 1, 0, 0));
        assert_eq!(
            ranks(&three_cycle(len(1), len(1), len(1)), CoeffRing::RationalField),
            (1, 1, 1, 1, 1)
        );
        let v_dangler = Graph::new(
            vec!["s".into()],
            vec![EdgeSpec::dangler("a", "s", Length::ZeroPlus)],
        )
        .unwrap();
        assert_eq!(ranks(&v_dangler, CoeffRing::RationalField), (1, 0, 0, 0, 0));
        assert_eq!(ranks(&triangle_with_danglers(), CoeffRing::RationalField), (1, 1, 0, 2, 2));
    }

    #[test]
    fn loop_contributes_rank_one_to_h1() {
        for ring in [CoeffRing::RationalField, CoeffRing::IntegerRing] {
            let r = cohomology(&loop_at_s(len(1)), ring).unwrap();
            assert_eq!(r.h1_rank, 1);
        }
        let r = cohomology(&loop_at_s(len(1)), CoeffRing::IntegersMod(4)).unwrap();
        assert_eq!(r.h1_rank, 1);
        assert_eq!(r.h1c_torsion, vec![BigInt::from(4)]);
    }

    #[test]
    fn exactness_examples() {
        assert!(exact_sequence_check(&segment()));
        assert!(exact_sequence_check(&three_cycle(len(1), len(1), len(1))));
        assert!(exact_sequence_check(&triangle_with_danglers()));
    }

    #[test]
    fn monodromy_examples() {
        let m = monodromy_matrix(&three_cycle(len(1), len(1), len(1)), CoeffRing::RationalField)
            .unwrap();
        assert_eq!(m.nrows(), 1);
        assert_eq!(m.ncols(), 1);
        assert_eq!(m.get(0, 0), &q(3, 1));

        let g = three_cycle(
            Length::finite(q(1, 2)).unwrap(),
            Length::finite(q(1, 3)).unwrap(),
            Length::finite(q(1, 6)).unwrap(),
        );
        let m = monodromy_matrix(&g, CoeffRing::RationalField).unwrap();
        assert_eq!(m.get(0, 0), &q(1, 1));
        assert!(matches!(
            monodromy_matrix(&g, CoeffRing::IntegerRing),
            Err(GraphError::LengthNotInRing(_))
        ));

        let m = monodromy_matrix(&segment(), CoeffRing::RationalField).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (0, 0));
    }

    #[test]
    fn monodromy_over_integer_rings() {
        let g = three_cycle(len(1), len(2), len(3));
        let m = monodromy_matrix(&g, CoeffRing::IntegerRing).unwrap();
        assert_eq!(m.get(0, 0), &q(6, 1));
        let m = monodromy_matrix(&g, CoeffRing::IntegersMod(4)).unwrap();
        assert_eq!(m.get(0, 0), &q(2, 1));
    }

    #[test]
    fn subdivision_examples() {
        let s = subdivide(&segment()).unwrap();
        assert_eq!(s.vertex_count(), 3);
        assert_eq!(s.edge_count(), 2);
        assert!(s.edges().iter().all(|e| e.length == Length::Finite(q(1, 2))));

        let c = three_cycle(len(1), len(1), len(1));
        let sc = subdivide(&c).unwrap();
        assert_eq!(sc.vertex_count(), 6);
        assert_eq!(sc.edge_count(), 6);
        assert_eq!(
            ranks(&sc, CoeffRing::RationalField),
            ranks(&c, CoeffRing::RationalField)
        );

        let l = loop_at_s(len(3));
        let sl = subdivide(&l).unwrap();
        assert_eq!(sl.vertex_count(), 2);
        assert_eq!(sl.edge_count(), 2);
        assert_eq!(ranks(&sl, CoeffRing::RationalField).1, 1);
    }

    #[test]
    fn separate_examples() {
        let g = Graph::new(
            vec!["s".into()],
            vec![
                EdgeSpec::dangler("a1", "s", Length::ZeroPlus),
                EdgeSpec::dangler("a2", "s", Length::ZeroPlus),
            ],
        )
        .unwrap();
        let sep = separate(&g).unwrap();
        assert_eq!(sep.vertex_count(), 1);
        assert_eq!(sep.edge_count(), 0);

        let g = Graph::new(
            vec!["s".into()],
            vec![EdgeSpec::dangler("a", "s", Length::FinitePlus(q(2, 1)))],
        )
        .unwrap();
        let sep = separate(&g).unwrap();
        assert_eq!(sep.vertex_count(), 2);
        let e = &sep.edges()[0];
        assert!(e.is_compact());
        assert_eq!(e.length, Length::Finite(q(2, 1)));

        let c = three_cycle(len(1), len(2), len(3));
        assert_eq!(separate(&c).unwrap(), c);

        let g = Graph::new(
            vec!["s".into()],
            vec![EdgeSpec::dangler("a", "s", Length::TwoInfinity)],
        )
        .unwrap();
        assert!(matches!(separate(&g), Err(GraphError::UnsupportedLength(_))));
    }

    #[test]
    fn interior_subgraph_examples() {
        let c = three_cycle(len(1), len(1), len(1));
        assert_eq!(interior_subgraph(&c), c);

        let g = Graph::new(
            vec!["s1".into(), "s2".into()],
            vec![
                EdgeSpec::compact("a1", "s1", "s2", len(1)),
                EdgeSpec::dangler("a2", "s2", Length::ZeroPlus),
            ],
        )
        .unwrap();
        let int = interior_subgraph(&g);
        assert_eq!(int.vertex_ids(), &["s1".to_string()]);
        assert_eq!(int.edge_count(), 0);

        let int = interior_subgraph(&triangle_with_danglers());
        assert_eq!(int.vertex_ids(), &["s1".to_string(), "s2".to_string()]);
        assert_eq!(int.edge_count(), 1);
        assert_eq!(int.edges()[0].id, "a1");
        assert_eq!(cohomology(&int, CoeffRing::RationalField).unwrap().h1_rank, 0);
    }

    #[test]
    fn graph_json_round_trip() {
        let g = triangle_with_danglers();
        let json = serde_json::to_string(&g.to_dto()).unwrap();
        let back = Graph::from_dto(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
