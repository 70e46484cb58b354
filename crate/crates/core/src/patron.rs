//! Patrons (gluing data for p-adic curves), their special fibers as marked
//! curves, dual graphs, and stable contraction of rational components.
//!
//! A patron is a finite connected graph whose vertices are *shorts* (formal
//! models of good-reduction affinoids, carrying a genus and a Frobenius
//! slope-1 dimension), whose compact edges are *legs* (open annuli of
//! positive rational length), plus *punctures* marking boundary circles.
//! Fineness means no leg is a loop and no two legs share both endpoints.
//!
//! The special fiber has one proper component per short, one node per leg
//! (multiplicity = leg length) and one 0⁺ marked point per puncture. Stable
//! contraction collapses every genus-0 component carrying at most two marked
//! points, counting incidences, until the curve is stable or degenerates to a
//! point / double point (Tate case).

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{cohomology, CoeffRing, EdgeSpec, Graph, GraphError, Length};
use crate::scalar::{parse_rational, render_rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatronError {
    #[error("invalid patron: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("invalid marked curve: {0}")]
    InvalidCurve(String),
    #[error("degenerate curve has no dual graph")]
    DegenerateCurve,
    #[error("leg {0:?} not found")]
    LegNotFound(String),
    #[error("split point must satisfy 0 < mu1 < mu(leg), got {0}")]
    BadSplitPoint(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// A short: component of the special fiber with good reduction data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Short {
    pub id: String,
    pub genus: u64,
    /// dim of the Frobenius slope-1 part of H¹_rig of the component (the
    /// p-rank); constrained by 0 ≤ d₁ ≤ g.
    pub slope_one_dim: u64,
}

/// A leg: open annulus of length μ > 0 between two shorts.
///
/// The optional twist annotations are opaque markers for the gluing
/// isomorphisms at the two ends; the data here determines the curve, so
/// every operation ignores them and they are only carried through.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leg {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length: BigRational,
    pub twist_tail: Option<String>,
    pub twist_head: Option<String>,
}

impl Leg {
    pub fn new(id: &str, tail: &str, head: &str, length: BigRational) -> Leg {
        Leg {
            id: id.into(),
            tail: tail.into(),
            head: head.into(),
            length,
            twist_tail: None,
            twist_head: None,
        }
    }
}

/// A puncture: a 0⁺ boundary circle attached to a short.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Puncture {
    pub id: String,
    pub vertex: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patron {
    shorts: Vec<Short>,
    legs: Vec<Leg>,
    punctures: Vec<Puncture>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateId(String),
    UnknownShort { referrer: String, short: String },
    LoopLeg(String),
    ParallelLegs(String, String),
    NonPositiveLegLength(String),
    SlopeDimExceedsGenus(String),
    Empty,
    Disconnected,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "duplicate id {id:?}"),
            Violation::UnknownShort { referrer, short } => {
                write!(f, "{referrer:?} references unknown short {short:?}")
            }
            Violation::LoopLeg(id) => write!(f, "leg {id:?} is a loop with 1 vertex"),
            Violation::ParallelLegs(a, b) => {
                write!(f, "legs {a:?} and {b:?} form a loop with 2 vertices")
            }
            Violation::NonPositiveLegLength(id) => {
                write!(f, "leg {id:?} has non-positive length")
            }
            Violation::SlopeDimExceedsGenus(id) => {
                write!(f, "short {id:?} has slope-1 dimension exceeding its genus")
            }
            Violation::Empty => write!(f, "patron has no shorts"),
            Violation::Disconnected => write!(f, "underlying graph is not connected"),
        }
    }
}

impl Patron {
    /// Assembles a patron; structural invariants are checked by [`validate`].
    pub fn new(mut shorts: Vec<Short>, mut legs: Vec<Leg>, mut punctures: Vec<Puncture>) -> Patron {
        shorts.sort_by(|a, b| a.id.cmp(&b.id));
        legs.sort_by(|a, b| a.id.cmp(&b.id));
        punctures.sort_by(|a, b| a.id.cmp(&b.id));
        Patron { shorts, legs, punctures }
    }

    pub fn shorts(&self) -> &[Short] {
        &self.shorts
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn punctures(&self) -> &[Puncture] {
        &self.punctures
    }

    pub fn short(&self, id: &str) -> Option<&Short> {
        self.shorts.iter().find(|s| s.id == id)
    }

    /// The adic skeleton Γ^ad: shorts as vertices, legs as compact edges,
    /// punctures as 0⁺ dangling edges.
    pub fn adic_graph(&self) -> Result<Graph, PatronError> {
        let vertices = self.shorts.iter().map(|s| s.id.clone()).collect();
        let mut specs = Vec::new();
        for leg in &self.legs {
            specs.push(EdgeSpec::compact(
                &leg.id,
                &leg.tail,
                &leg.head,
                Length::finite(leg.length.clone())?,
            ));
        }
        for p in &self.punctures {
            specs.push(EdgeSpec::dangler(&p.id, &p.vertex, Length::ZeroPlus));
        }
        Ok(Graph::new(vertices, specs)?)
    }

    fn ensure_valid(&self) -> Result<(), PatronError> {
        let violations = validate(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(PatronError::Invalid(violations))
        }
    }
}

/// Checks all patron invariants; violations are data, not errors.
pub fn validate(pat: &Patron) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = BTreeMap::new();
    let mut dup = |id: &String, out: &mut Vec<Violation>| {
        if ids.insert(id.clone(), ()).is_some() {
            out.push(Violation::DuplicateId(id.clone()));
        }
    };
    for s in &pat.shorts {
        dup(&s.id, &mut out);
        if s.slope_one_dim > s.genus {
            out.push(Violation::SlopeDimExceedsGenus(s.id.clone()));
        }
    }
    let known: BTreeMap<&str, usize> =
        pat.shorts.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    for leg in &pat.legs {
        dup(&leg.id, &mut out);
        for end in [&leg.tail, &leg.head] {
            if !known.contains_key(end.as_str()) {
                out.push(Violation::UnknownShort {
                    referrer: leg.id.clone(),
                    short: end.clone(),
                });
            }
        }
        if leg.length <= BigRational::zero() {
            out.push(Violation::NonPositiveLegLength(leg.id.clone()));
        }
        if leg.tail == leg.head {
            out.push(Violation::LoopLeg(leg.id.clone()));
        }
    }
    for (i, a) in pat.legs.iter().enumerate() {
        for b in &pat.legs[i + 1..] {
            let same = (a.tail == b.tail && a.head == b.head)
                || (a.tail == b.head && a.head == b.tail);
            if same && a.tail != a.head {
                out.push(Violation::ParallelLegs(a.id.clone(), b.id.clone()));
            }
        }
    }
    for p in &pat.punctures {
        dup(&p.id, &mut out);
        if !known.contains_key(p.vertex.as_str()) {
            out.push(Violation::UnknownShort {
                referrer: p.id.clone(),
                short: p.vertex.clone(),
            });
        }
    }
    if pat.shorts.is_empty() {
        out.push(Violation::Empty);
    } else if !out.iter().any(|v| matches!(v, Violation::UnknownShort { .. })) {
        // Union-find on shorts through legs.
        let mut parent: Vec<usize> = (0..pat.shorts.len()).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for leg in &pat.legs {
            let a = find(&mut parent, known[leg.tail.as_str()]);
            let b = find(&mut parent, known[leg.head.as_str()]);
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        if (0..pat.shorts.len()).any(|i| find(&mut parent, i) != root) {
            out.push(Violation::Disconnected);
        }
    }
    out
}

/// Multiplicity of a marked point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mult {
    Rational(BigRational),
    ZeroPlus,
    Infinity,
}

impl Mult {
    /// Fusion arithmetic: rationals add, ∞ absorbs, 0⁺ is neutral.
    pub fn fuse(&self, other: &Mult) -> Mult {
        match (self, other) {
            (Mult::Infinity, _) | (_, Mult::Infinity) => Mult::Infinity,
            (Mult::ZeroPlus, x) | (x, Mult::ZeroPlus) => x.clone(),
            (Mult::Rational(a), Mult::Rational(b)) => Mult::Rational(a + b),
        }
    }

    pub fn parse(s: &str) -> Result<Mult, PatronError> {
        match s.trim() {
            "0+" => Ok(Mult::ZeroPlus),
            "inf" => Ok(Mult::Infinity),
            other => {
                let q = parse_rational(other)
                    .map_err(|_| PatronError::InvalidCurve(format!("bad multiplicity {s:?}")))?;
                if q <= BigRational::zero() {
                    return Err(PatronError::InvalidCurve(format!(
                        "multiplicity must be positive, got {s:?}"
                    )));
                }
                Ok(Mult::Rational(q))
            }
        }
    }
}

impl fmt::Display for Mult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mult::Rational(q) => write!(f, "{}", render_rational(q)),
            Mult::ZeroPlus => write!(f, "0+"),
            Mult::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub id: String,
    pub genus: u64,
}

/// A marked point with its incident components (1 for a smooth point, 2 for
/// a node; both entries equal for a self-intersection).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedPoint {
    pub id: String,
    pub mult: Mult,
    pub incident: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveData {
    components: Vec<Component>,
    points: Vec<MarkedPoint>,
}

impl CurveData {
    pub fn new(
        mut components: Vec<Component>,
        mut points: Vec<MarkedPoint>,
    ) -> Result<CurveData, PatronError> {
        components.sort_by(|a, b| a.id.cmp(&b.id));
        points.sort_by(|a, b| a.id.cmp(&b.id));
        let ids: BTreeMap<&str, ()> =
            components.iter().map(|c| (c.id.as_str(), ())).collect();
        if ids.len() != components.len() {
            return Err(PatronError::InvalidCurve("duplicate component id".into()));
        }
        for p in &points {
            if p.incident.is_empty() || p.incident.len() > 2 {
                return Err(PatronError::InvalidCurve(format!(
                    "point {:?} must touch 1 or 2 components",
                    p.id
                )));
            }
            for c in &p.incident {
                if !ids.contains_key(c.as_str()) {
                    return Err(PatronError::InvalidCurve(format!(
                        "point {:?} references unknown component {c:?}",
                        p.id
                    )));
                }
            }
            if p.incident.len() == 2 && !matches!(p.mult, Mult::Rational(_)) {
                return Err(PatronError::InvalidCurve(format!(
                    "singular point {:?} needs a rational multiplicity",
                    p.id
                )));
            }
            if matches!(p.mult, Mult::ZeroPlus) && p.incident.len() != 1 {
                return Err(PatronError::InvalidCurve(format!(
                    "0+ point {:?} must be smooth",
                    p.id
                )));
            }
        }
        Ok(CurveData { components, points })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    /// Marked-point count of a component, incidences counted with
    /// multiplicity (a self-node counts twice).
    pub fn point_count(&self, comp: &str) -> usize {
        self.points
            .iter()
            .map(|p| p.incident.iter().filter(|c| c.as_str() == comp).count())
            .sum()
    }

    /// Stability: no genus-0 component carries ≤ 2 marked points.
    pub fn is_stable(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.genus > 0 || self.point_count(&c.id) > 2)
    }
}

/// A marked curve, possibly degenerate (a point, or a double point for the
/// Tate case).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarkedCurve {
    Curve(CurveData),
    SinglePoint,
    DoublePoint,
}

impl MarkedCurve {
    pub fn as_curve(&self) -> Option<&CurveData> {
        match self {
            MarkedCurve::Curve(c) => Some(c),
            _ => None,
        }
    }
}

/// The special fiber of the curve a patron encodes: one component per short,
/// one node per leg, one 0⁺ point per puncture.
pub fn special_fiber(pat: &Patron) -> Result<MarkedCurve, PatronError> {
    pat.ensure_valid()?;
    let components = pat
        .shorts
        .iter()
        .map(|s| Component { id: s.id.clone(), genus: s.genus })
        .collect();
    let mut points = Vec::new();
    for leg in &pat.legs {
        points.push(MarkedPoint {
            id: leg.id.clone(),
            mult: Mult::Rational(leg.length.clone()),
            incident: vec![leg.tail.clone(), leg.head.clone()],
        });
    }
    for p in &pat.punctures {
        points.push(MarkedPoint {
            id: p.id.clone(),
            mult: Mult::ZeroPlus,
            incident: vec![p.vertex.clone()],
        });
    }
    Ok(MarkedCurve::Curve(CurveData::new(components, points)?))
}

/// Dual graph of a marked curve: components become vertices; nodes become
/// compact edges of their multiplicity; other marked points become dangling
/// edges (0⁺, finite, or ∞). Orientation follows the incident-list order.
pub fn dual_graph(c: &MarkedCurve) -> Result<Graph, PatronError> {
    let data = c.as_curve().ok_or(PatronError::DegenerateCurve)?;
    let vertices = data.components.iter().map(|c| c.id.clone()).collect();
    let mut specs = Vec::new();
    for p in &data.points {
        let length = match (&p.mult, p.incident.len()) {
            (Mult::Rational(q), _) => Length::finite(q.clone())?,
            (Mult::ZeroPlus, _) => Length::ZeroPlus,
            (Mult::Infinity, _) => Length::Infinity,
        };
        let spec = if p.incident.len() == 2 {
            EdgeSpec::compact(&p.id, &p.incident[0], &p.incident[1], length)
        } else {
            EdgeSpec::dangler(&p.id, &p.incident[0], length)
        };
        specs.push(spec);
    }
    Ok(Graph::new(vertices, specs)?)
}

/// One contraction step: collapse the genus-0 component `comp` (which must
/// carry ≤ 2 marked points). Public so tests can exercise arbitrary orders.
pub fn contract_component(data: &CurveData, comp: &str) -> Result<MarkedCurve, PatronError> {
    let c = data
        .components
        .iter()
        .find(|c| c.id == comp)
        .ok_or_else(|| PatronError::InvalidCurve(format!("no component {comp:?}")))?;
    if c.genus != 0 {
        return Err(PatronError::InvalidCurve(format!("component {comp:?} has positive genus")));
    }
    let count = data.point_count(comp);
    if count > 2 {
        return Err(PatronError::InvalidCurve(format!("component {comp:?} is not contractible")));
    }
    let touching: Vec<&MarkedPoint> =
        data.points.iter().filter(|p| p.incident.iter().any(|x| x == comp)).collect();
    let rest_components: Vec<Component> =
        data.components.iter().filter(|x| x.id != comp).cloned().collect();
    let rest_points: Vec<MarkedPoint> = data
        .points
        .iter()
        .filter(|p| p.incident.iter().all(|x| x != comp))
        .cloned()
        .collect();
    let sole_component = rest_components.is_empty();

    match touching.as_slice() {
        [] => {
            // No marked point: the whole (connected) curve is this P¹.
            if sole_component {
                Ok(MarkedCurve::SinglePoint)
            } else {
                Ok(MarkedCurve::Curve(CurveData::new(rest_components, rest_points)?))
            }
        }
        [p] if p.incident.len() == 1 => {
            // Unique smooth marked point: the curve is this P¹.
            if sole_component {
                Ok(MarkedCurve::SinglePoint)
            } else {
                Ok(MarkedCurve::Curve(CurveData::new(rest_components, rest_points)?))
            }
        }
        [p] if p.incident[0] == comp && p.incident[1] == comp => {
            // Unique marked point is a self-node: a Tate curve degenerates to
            // a double point.
            if sole_component {
                Ok(MarkedCurve::DoublePoint)
            } else {
                Ok(MarkedCurve::Curve(CurveData::new(rest_components, rest_points)?))
            }
        }
        [p] => {
            // Unique marked point is a node to another component: the node
            // becomes an unmarked smooth point there; drop component and point.
            debug_assert_eq!(p.incident.len(), 2);
            Ok(MarkedCurve::Curve(CurveData::new(rest_components, rest_points)?))
        }
        [p1, p2] => {
            // Two marked points fuse into one of multiplicity μ(P₁)+μ(P₂).
            let (p1, p2) = if p1.id <= p2.id { (p1, p2) } else { (p2, p1) };
            let mut incident: Vec<String> = Vec::new();
            for p in [p1, p2] {
                let mut dropped = false;
                for x in &p.incident {
                    if x == comp && !dropped {
                        dropped = true;
                    } else {
                        incident.push(x.clone());
                    }
                }
            }
            incident.sort();
            if incident.is_empty() {
                // The fused point has nothing to live on: the curve was this
                // P¹ alone, and it is not a Tate curve.
                debug_assert!(sole_component);
                return Ok(MarkedCurve::SinglePoint);
            }
            let fused = MarkedPoint {
                id: p1.id.clone(),
                mult: p1.mult.fuse(&p2.mult),
                incident,
            };
            let mut points = rest_points;
            points.push(fused);
            Ok(MarkedCurve::Curve(CurveData::new(rest_components, points)?))
        }
        _ => unreachable!("at most two points can touch a contractible component"),
    }
}

/// Iterated contraction of genus-0 components with ≤ 2 marked points until
/// the curve is stable (or degenerates); confluent, so the scan order is a
/// convention (lexicographically first contractible component).
pub fn stabilize(c: &MarkedCurve) -> Result<MarkedCurve, PatronError> {
    let mut cur = c.clone();
    loop {
        let data = match &cur {
            MarkedCurve::Curve(d) => d,
            degenerate => return Ok(degenerate.clone()),
        };
        let target = data
            .components
            .iter()
            .find(|c| c.genus == 0 && data.point_count(&c.id) <= 2)
            .map(|c| c.id.clone());
        match target {
            None => return Ok(cur),
            Some(id) => cur = contract_component(data, &id)?,
        }
    }
}

/// Splits a leg at an interior point: two legs of lengths μ₁ and μ−μ₁ through
/// a fresh genus-0 short with slope-1 dimension 0.
pub fn refine_leg(pat: &Patron, leg_id: &str, mu1: &BigRational) -> Result<Patron, PatronError> {
    let leg = pat
        .legs
        .iter()
        .find(|l| l.id == leg_id)
        .ok_or_else(|| PatronError::LegNotFound(leg_id.to_string()))?;
    if *mu1 <= BigRational::zero() || *mu1 >= leg.length {
        return Err(PatronError::BadSplitPoint(render_rational(mu1)));
    }
    let mid = format!("{}__m", leg.id);
    let mut shorts = pat.shorts.clone();
    shorts.push(Short { id: mid.clone(), genus: 0, slope_one_dim: 0 });
    let mut legs: Vec<Leg> = pat.legs.iter().filter(|l| l.id != leg_id).cloned().collect();
    legs.push(Leg {
        id: format!("{}__1", leg.id),
        tail: leg.tail.clone(),
        head: mid.clone(),
        length: mu1.clone(),
        twist_tail: leg.twist_tail.clone(),
        twist_head: None,
    });
    legs.push(Leg {
        id: format!("{}__2", leg.id),
        tail: mid,
        head: leg.head.clone(),
        length: &leg.length - mu1,
        twist_tail: None,
        twist_head: leg.twist_head.clone(),
    });
    Ok(Patron::new(shorts, legs, pat.punctures.clone()))
}

/// Genus of the curve the patron encodes: Σ genus(short) + b₁ of the graph.
pub fn genus(pat: &Patron) -> Result<u64, PatronError> {
    pat.ensure_valid()?;
    let graph = pat.adic_graph()?;
    let h1 = cohomology(&graph, CoeffRing::RationalField)?.h1_rank;
    Ok(pat.shorts.iter().map(|s| s.genus).sum::<u64>() + h1 as u64)
}

// --- JSON schema ---

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ShortDto {
    pub id: String,
    pub genus: u64,
    #[serde(default)]
    pub slope_one_dim: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LegDto {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist_tail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist_head: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PunctureDto {
    pub id: String,
    pub vertex: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PatronDto {
    /// Prime used only as a default by series-related commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    pub shorts: Vec<ShortDto>,
    #[serde(default)]
    pub legs: Vec<LegDto>,
    #[serde(default)]
    pub punctures: Vec<PunctureDto>,
}

impl Patron {
    pub fn to_dto(&self, p: Option<u64>) -> PatronDto {
        PatronDto {
            p,
            shorts: self
                .shorts
                .iter()
                .map(|s| ShortDto { id: s.id.clone(), genus: s.genus, slope_one_dim: s.slope_one_dim })
                .collect(),
            legs: self
                .legs
                .iter()
                .map(|l| LegDto {
                    id: l.id.clone(),
                    tail: l.tail.clone(),
                    head: l.head.clone(),
                    length: render_rational(&l.length),
                    twist_tail: l.twist_tail.clone(),
                    twist_head: l.twist_head.clone(),
                })
                .collect(),
            punctures: self
                .punctures
                .iter()
                .map(|p| PunctureDto { id: p.id.clone(), vertex: p.vertex.clone() })
                .collect(),
        }
    }

    pub fn from_dto(dto: &PatronDto) -> Result<Patron, PatronError> {
        let shorts = dto
            .shorts
            .iter()
            .map(|s| Short { id: s.id.clone(), genus: s.genus, slope_one_dim: s.slope_one_dim })
            .collect();
        let legs = dto
            .legs
            .iter()
            .map(|l| {
                let length = parse_rational(&l.length).map_err(|_| {
                    PatronError::InvalidCurve(format!("bad leg length {:?}", l.length))
                })?;
                Ok(Leg {
                    id: l.id.clone(),
                    tail: l.tail.clone(),
                    head: l.head.clone(),
                    length,
                    twist_tail: l.twist_tail.clone(),
                    twist_head: l.twist_head.clone(),
                })
            })
            .collect::<Result<Vec<_>, PatronError>>()?;
        let punctures = dto
            .punctures
            .iter()
            .map(|p| Puncture { id: p.id.clone(), vertex: p.vertex.clone() })
            .collect();
        Ok(Patron::new(shorts, legs, punctures))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ComponentDto {
    pub id: String,
    pub genus: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct MarkedPointDto {
    pub id: String,
    pub multiplicity: String,
    pub incident: Vec<String>,
}

/// Marked curve schema; degenerate curves carry only the `degenerate` tag.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct MarkedCurveDto {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub marked_points: Vec<MarkedPointDto>,
}

impl MarkedCurve {
    pub fn to_dto(&self) -> MarkedCurveDto {
        match self {
            MarkedCurve::SinglePoint => MarkedCurveDto {
                degenerate: Some("point".into()),
                components: Vec::new(),
                marked_points: Vec::new(),
            },
            MarkedCurve::DoublePoint => MarkedCurveDto {
                degenerate: Some("double_point".into()),
                components: Vec::new(),
                marked_points: Vec::new(),
            },
            MarkedCurve::Curve(data) => MarkedCurveDto {
                degenerate: None,
                components: data
                    .components
                    .iter()
                    .map(|c| ComponentDto { id: c.id.clone(), genus: c.genus })
                    .collect(),
                marked_points: data
                    .points
                    .iter()
                    .map(|p| MarkedPointDto {
                        id: p.id.clone(),
                        multiplicity: p.mult.to_string(),
                        incident: p.incident.clone(),
                    })
                    .collect(),
            },
        }
    }

    pub fn from_dto(dto: &MarkedCurveDto) -> Result<MarkedCurve, PatronError> {
        match dto.degenerate.as_deref() {
            Some("point") => return Ok(MarkedCurve::SinglePoint),
            Some("double_point") => return Ok(MarkedCurve::DoublePoint),
            Some(other) => {
                return Err(PatronError::InvalidCurve(format!("bad degenerate tag {other:?}")))
            }
            None => {}
        }
        let components = dto
            .components
            .iter()
            .map(|c| Component { id: c.id.clone(), genus: c.genus })
            .collect();
        let points = dto
            .marked_points
            .iter()
            .map(|p| {
                Ok(MarkedPoint {
                    id: p.id.clone(),
                    mult: Mult::parse(&p.multiplicity)?,
                    incident: p.incident.clone(),
                })
            })
            .collect::<Result<Vec<_>, PatronError>>()?;
        Ok(MarkedCurve::Curve(CurveData::new(components, points)?))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn short(id: &str, genus: u64, d1: u64) -> Short {
        Short { id: id.into(), genus, slope_one_dim: d1 }
    }

    fn leg(id: &str, tail: &str, head: &str, len: BigRational) -> Leg {
        Leg::new(id, tail, head, len)
    }

    /// The figure patron: triangle of genera (4,0,3), d₁ = (2,0,1), leg
    /// lengths (μ₁,μ₂,μ₃) = (1,1,1), two punctures at s3.
    pub(crate) fn triangle_patron() -> Patron {
        Patron::new(
            vec![short("s1", 4, 2), short("s2", 0, 0), short("s3", 3, 1)],
            vec![
                leg("a1", "s1", "s2", q(1, 1)),
                leg("a2", "s2", "s3", q(1, 1)),
                leg("a3", "s3", "s1", q(1, 1)),
            ],
            vec![
                Puncture { id: "a4".into(), vertex: "s3".into() },
                Puncture { id: "a5".into(), vertex: "s3".into() },
            ],
        )
    }

    /// Tate patron: a 3-cycle of genus-0 shorts with unit leg lengths.
    pub(crate) fn tate_patron() -> Patron {
        Patron::new(
            vec![short("c1", 0, 0), short("c2", 0, 0), short("c3", 0, 0)],
            vec![
                leg("n1", "c1", "c2", q(1, 1)),
                leg("n2", "c2", "c3", q(1, 1)),
                leg("n3", "c3", "c1", q(1, 1)),
            ],
            vec![],
        )
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&triangle_patron()).is_empty());

        let loopy = Patron::new(
            vec![short("s", 1, 0)],
            vec![leg("a", "s", "s", q(1, 1))],
            vec![],
        );
        assert_eq!(validate(&loopy), vec![Violation::LoopLeg("a".into())]);

        let parallel = Patron::new(
            vec![short("s1", 0, 0), short("s2", 0, 0)],
            vec![leg("a", "s1", "s2", q(1, 1)), leg("b", "s2", "s1", q(2, 1))],
            vec![],
        );
        assert_eq!(
            validate(&parallel),
            vec![Violation::ParallelLegs("a".into(), "b".into())]
        );

        let d1_too_big = Patron::new(vec![short("s", 1, 2)], vec![], vec![]);
        assert_eq!(
            validate(&d1_too_big),
            vec![Violation::SlopeDimExceedsGenus("s".into())]
        );

        let disconnected = Patron::new(
            vec![short("s1", 1, 0), short("s2", 1, 0)],
            vec![],
            vec![],
        );
        assert_eq!(validate(&disconnected), vec![Violation::Disconnected]);
    }

    #[test]
    fn special_fiber_examples() {
        let fiber = special_fiber(&triangle_patron()).unwrap();
        let data = fiber.as_curve().unwrap();
        let genera: Vec<u64> = data.components().iter().map(|c| c.genus).collect();
        assert_eq!(genera, vec![4, 0, 3]);
        let nodes = data.points().iter().filter(|p| p.incident.len() == 2).count();
        let smooth = data.points().iter().filter(|p| p.incident.len() == 1).count();
        assert_eq!((nodes, smooth), (3, 2));

        let single = Patron::new(
            vec![short("s", 2, 1)],
            vec![],
            vec![Puncture { id: "b".into(), vertex: "s".into() }],
        );
        let fiber = special_fiber(&single).unwrap();
        let data = fiber.as_curve().unwrap();
        assert_eq!(data.components().len(), 1);
        assert_eq!(data.points().len(), 1);
        assert_eq!(data.points()[0].mult, Mult::ZeroPlus);

        let two = Patron::new(
            vec![short("s1", 1, 0), short("s2", 2, 0)],
            vec![leg("a", "s1", "s2", q(5, 2))],
            vec![],
        );
        let fiber = special_fiber(&two).unwrap();
        let data = fiber.as_curve().unwrap();
        assert_eq!(data.components().len(), 2);
        assert_eq!(data.points().len(), 1);
    }

    #[test]
    fn dual_graph_round_trips_the_patron_graph() {
        for pat in [triangle_patron(), tate_patron()] {
            let g = dual_graph(&special_fiber(&pat).unwrap()).unwrap();
            assert_eq!(g, pat.adic_graph().unwrap());
        }
    }

    #[test]
    fn dual_graph_examples() {
        let self_node = MarkedCurve::Curve(
            CurveData::new(
                vec![Component { id: "c".into(), genus: 1 }],
                vec![MarkedPoint {
                    id: "n".into(),
                    mult: Mult::Rational(q(3, 1)),
                    incident: vec!["c".into(), "c".into()],
                }],
            )
            .unwrap(),
        );
        let g = dual_graph(&self_node).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert!(g.edges()[0].is_loop());

        let node = MarkedCurve::Curve(
            CurveData::new(
                vec![
                    Component { id: "c1".into(), genus: 0 },
                    Component { id: "c2".into(), genus: 0 },
                ],
                vec![MarkedPoint {
                    id: "n".into(),
                    mult: Mult::Rational(q(5, 2)),
                    incident: vec!["c1".into(), "c2".into()],
                }],
            )
            .unwrap(),
        );
        let g = dual_graph(&node).unwrap();
        assert_eq!(g.edges()[0].length, Length::Finite(q(5, 2)));

        assert!(matches!(
            dual_graph(&MarkedCurve::DoublePoint),
            Err(PatronError::DegenerateCurve)
        ));
    }

    #[test]
    fn figure_fusion_example() {
        // s2 is a P¹ with exactly the nodes P_{a1}, P_{a2}: they fuse into a
        // node of multiplicity μ₁+μ₂ between s1 and s3.
        let fiber = special_fiber(&triangle_patron()).unwrap();
        let stable = stabilize(&fiber).unwrap();
        let data = stable.as_curve().unwrap();
        assert_eq!(data.components().len(), 2);
        let fused = data.points().iter().find(|p| p.id == "a1").unwrap();
        assert_eq!(fused.mult, Mult::Rational(q(2, 1)));
        assert_eq!(fused.incident, vec!["s1".to_string(), "s3".to_string()]);
        assert!(data.is_stable());
    }

    #[test]
    fn tate_cycle_stabilizes_to_double_point() {
        let fiber = special_fiber(&tate_patron()).unwrap();
        assert_eq!(stabilize(&fiber).unwrap(), MarkedCurve::DoublePoint);
    }

    #[test]
    fn stable_curve_is_fixed() {
        let single = MarkedCurve::Curve(
            CurveData::new(vec![Component { id: "c".into(), genus: 2 }], vec![]).unwrap(),
        );
        assert_eq!(stabilize(&single).unwrap(), single);
    }

    #[test]
    fn lone_rational_curve_contracts_to_a_point() {
        let lone = MarkedCurve::Curve(
            CurveData::new(vec![Component { id: "c".into(), genus: 0 }], vec![]).unwrap(),
        );
        assert_eq!(stabilize(&lone).unwrap(), MarkedCurve::SinglePoint);

        let once_marked = MarkedCurve::Curve(
            CurveData::new(
                vec![Component { id: "c".into(), genus: 0 }],
                vec![MarkedPoint {
                    id: "b".into(),
                    mult: Mult::Infinity,
                    incident: vec!["c".into()],
                }],
            )
            .unwrap(),
        );
        assert_eq!(stabilize(&once_marked).unwrap(), MarkedCurve::SinglePoint);
    }

    #[test]
    fn refine_leg_examples() {
        let pat = Patron::new(
            vec![short("s1", 1, 0), short("s2", 1, 0)],
            vec![leg("a", "s1", "s2", q(1, 1))],
            vec![],
        );
        let refined = refine_leg(&pat, "a", &q(1, 3)).unwrap();
        assert!(validate(&refined).is_empty());
        assert_eq!(refined.shorts().len(), 3);
        let lengths: Vec<BigRational> =
            refined.legs().iter().map(|l| l.length.clone()).collect();
        assert_eq!(lengths, vec![q(1, 3), q(2, 3)]);

        assert!(matches!(
            refine_leg(&pat, "a", &q(1, 1)),
            Err(PatronError::BadSplitPoint(_))
        ));
        assert!(matches!(
            refine_leg(&pat, "zz", &q(1, 2)),
            Err(PatronError::LegNotFound(_))
        ));
    }

    /// Stable models are compared up to renaming of marked points (fused
    /// points keep the smaller constituent id) and node orientation:
    /// components with their genera, plus the multiset of
    /// (multiplicity, unordered incidences).
    #[allow(clippy::type_complexity)]
    pub(crate) fn structural_signature(
        c: &MarkedCurve,
    ) -> Option<(Vec<(String, u64)>, Vec<(String, Vec<String>)>)> {
        let data = c.as_curve()?;
        let comps = data
            .components()
            .iter()
            .map(|x| (x.id.clone(), x.genus))
            .collect();
        let mut pts: Vec<(String, Vec<String>)> = data
            .points()
            .iter()
            .map(|p| {
                let mut inc = p.incident.clone();
                inc.sort();
                (p.mult.to_string(), inc)
            })
            .collect();
        pts.sort();
        Some((comps, pts))
    }

    #[test]
    fn refine_then_stabilize_recovers_the_stable_model() {
        let pat = triangle_patron();
        let base = stabilize(&special_fiber(&pat).unwrap()).unwrap();
        let refined = refine_leg(&pat, "a3", &q(1, 2)).unwrap();
        let again = stabilize(&special_fiber(&refined).unwrap()).unwrap();
        assert_eq!(structural_signature(&again), structural_signature(&base));
        assert!(structural_signature(&base).is_some());
    }

    #[test]
    fn genus_examples() {
        assert_eq!(genus(&triangle_patron()).unwrap(), 8);
        assert_eq!(genus(&tate_patron()).unwrap(), 1);
        let single = Patron::new(
            vec![short("s", 3, 2)],
            vec![],
            vec![Puncture { id: "b".into(), vertex: "s".into() }],
        );
        assert_eq!(genus(&single).unwrap(), 3);
    }

    #[test]
    fn genus_is_stable_under_refinement() {
        let pat = triangle_patron();
        let refined = refine_leg(&pat, "a1", &q(1, 4)).unwrap();
        assert_eq!(genus(&pat).unwrap(), genus(&refined).unwrap());
    }

    #[test]
    fn genus_is_stable_under_stabilization() {
        // Σ genus + b₁ of the dual graph is unchanged by contracting the
        // rational components of the fiber.
        let pat = triangle_patron();
        let stable = stabilize(&special_fiber(&pat).unwrap()).unwrap();
        let data = stable.as_curve().unwrap();
        let graph = dual_graph(&stable).unwrap();
        let b1 = cohomology(&graph, CoeffRing::RationalField).unwrap().h1_rank as u64;
        let total = data.components().iter().map(|c| c.genus).sum::<u64>() + b1;
        assert_eq!(total, genus(&pat).unwrap());
    }

    #[test]
    fn cycle_length_is_conserved_by_contraction() {
        // On the Tate cycle the total node multiplicity stays 3 step by step.
        let fiber = special_fiber(&tate_patron()).unwrap();
        let mut cur = fiber;
        loop {
            let Some(data) = cur.as_curve() else { break };
            let total: BigRational = data
                .points()
                .iter()
                .filter(|p| p.incident.len() == 2)
                .map(|p| match &p.mult {
                    Mult::Rational(v) => v.clone(),
                    _ => unreachable!("nodes are rational"),
                })
                .sum();
            assert_eq!(total, q(3, 1));
            let Some(target) = data
                .components()
                .iter()
                .find(|c| c.genus == 0 && data.point_count(&c.id) <= 2)
                .map(|c| c.id.clone())
            else {
                break;
            };
            cur = contract_component(data, &target).unwrap();
        }
        assert_eq!(cur, MarkedCurve::DoublePoint);
    }

    #[test]
    fn patron_json_round_trip() {
        let pat = triangle_patron();
        let dto = pat.to_dto(Some(5));
        let json = serde_json::to_string(&dto).unwrap();
        let parsed: PatronDto = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, dto);
        assert_eq!(Patron::from_dto(&parsed).unwrap(), pat);
    }
}
