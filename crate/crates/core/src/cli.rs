//! Command execution and deterministic JSON reports.
//!
//! Commands are plain data so they can be driven in-process (and from the
//! Python bindings) as well as from the binary. All output goes through
//! `serde_json::Value`, whose object keys are sorted, and arrays are built
//! in lexicographic id order, so byte-identical inputs give byte-identical
//! reports. Exit protocol: 0 on success, 1 on a domain error (with
//! `{"error": code, "detail": …}`), 2 on malformed input.

use std::path::PathBuf;

use num_rational::BigRational;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::filtration::{
    filtration_report, total_monodromy, FiltrationError, FiltrationReport, SlopeProfile, Theory,
};
use crate::graph::{cohomology, CoeffRing, Graph, GraphDto, GraphError};
use crate::linalg::QMat;
use crate::patron::{
    dual_graph, genus, special_fiber, stabilize, validate, Patron, PatronDto, PatronError,
};
use crate::scalar::{parse_rational, parse_scalar, render_rational, ScalarContext, ScalarError};
use crate::series::{
    dlog, factorize_unit, leg_restrict_form, newton_data, residue, LaurentSeries, LegSide,
    SeriesContext, SeriesError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{detail}")]
    Domain { code: String, detail: String },
    #[error("{0}")]
    Malformed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain { .. } => 1,
            CliError::Malformed(_) => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Domain { code, detail } => json!({ "error": code, "detail": detail }),
            CliError::Malformed(detail) => json!({ "error": "malformed_input", "detail": detail }),
        }
    }

    fn domain(code: &str, detail: impl ToString) -> CliError {
        CliError::Domain { code: code.into(), detail: detail.to_string() }
    }
}

fn graph_error_code(e: &GraphError) -> &'static str {
    match e {
        GraphError::DuplicateVertex(_) => "duplicate_vertex",
        GraphError::DuplicateEdge(_) => "duplicate_edge",
        GraphError::UnknownVertex { .. } => "unknown_vertex",
        GraphError::MissingEndpoints(_) => "missing_endpoints",
        GraphError::NonPositiveLength(_) | GraphError::BadLength(_) => "bad_length",
        GraphError::NonFiniteLength(_) => "non_finite_length",
        GraphError::NonRationalLength(_) => "non_rational_length",
        GraphError::LengthNotInRing(_) => "length_not_in_ring",
        GraphError::UnsupportedLength(_) => "unsupported_length",
        GraphError::BadModulus(_) => "bad_modulus",
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::domain(graph_error_code(&e), e)
    }
}

impl From<PatronError> for CliError {
    fn from(e: PatronError) -> Self {
        let code = match &e {
            PatronError::Invalid(_) => "invalid_patron",
            PatronError::InvalidCurve(_) => "invalid_curve",
            PatronError::DegenerateCurve => "degenerate_curve",
            PatronError::LegNotFound(_) => "leg_not_found",
            PatronError::BadSplitPoint(_) => "bad_split_point",
            PatronError::Graph(g) => graph_error_code(g),
        };
        CliError::domain(code, e)
    }
}

impl From<FiltrationError> for CliError {
    fn from(e: FiltrationError) -> Self {
        let code = match &e {
            FiltrationError::Patron(p) => return CliError::from(p.clone()),
            FiltrationError::Graph(g) => graph_error_code(g),
            FiltrationError::NotPrime(_) => "not_prime",
            FiltrationError::BadTheory(_) => return CliError::Malformed(e.to_string()),
            FiltrationError::BadVectorLength { .. } => "bad_vector_length",
            FiltrationError::NotInKernel => "not_in_kernel",
        };
        CliError::domain(code, e)
    }
}

impl From<ScalarError> for CliError {
    fn from(e: ScalarError) -> Self {
        match &e {
            ScalarError::Parse(_) => CliError::Malformed(e.to_string()),
            ScalarError::NotPrime(_) => CliError::Malformed(e.to_string()),
            ScalarError::BadRamification => CliError::Malformed(e.to_string()),
            _ => CliError::domain("scalar_error", e),
        }
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        let code = match &e {
            SeriesError::Scalar(s) => return CliError::from(s.clone()),
            SeriesError::ContextMismatch(_) => "context_mismatch",
            SeriesError::BadContext(_) => return CliError::Malformed(e.to_string()),
            SeriesError::OutsideWindow(..) => return CliError::Malformed(e.to_string()),
            SeriesError::PrecisionOverflow(_) => "precision_overflow",
            SeriesError::NotDetermined => "not_determined",
            SeriesError::NotAUnit(_) => "not_a_unit",
            SeriesError::NotAParameter(_) => "not_a_parameter",
            SeriesError::BadSubgroup(_) => "bad_subgroup",
            SeriesError::PointOnCircle(_) => "point_on_circle",
        };
        CliError::domain(code, e)
    }
}

/// Flags shared by the series subcommands.
#[derive(Clone, Debug)]
pub struct SeriesParams {
    pub p: u64,
    pub ram: u32,
    pub prec: String,
    pub coeffs: String,
    pub n_min: Option<i64>,
    pub n_max: Option<i64>,
}

#[derive(Clone, Debug)]
pub enum Command {
    GraphCohomology { file: PathBuf, ring: String },
    Filtration { file: PathBuf, theory: String },
    Monodromy { file: PathBuf, theory: String },
    Stabilize { file: PathBuf },
    Genus { file: PathBuf },
    Validate { file: PathBuf },
    SeriesFactor { params: SeriesParams },
    SeriesResidue { params: SeriesParams },
    SeriesDlog { params: SeriesParams },
    SeriesLeg { params: SeriesParams, mu: String, side: u8 },
}

pub fn run(cmd: &Command) -> Result<Value, CliError> {
    match cmd {
        Command::GraphCohomology { file, ring } => {
            let graph = load_graph(file)?;
            let ring = parse_ring(ring)?;
            let report = cohomology(&graph, ring)?;
            let mut out = Map::new();
            out.insert("ring".into(), json!(ring.to_string()));
            out.insert("h0".into(), json!(report.h0_rank));
            out.insert("h1".into(), json!(report.h1_rank));
            out.insert("h0c".into(), json!(report.h0c_rank));
            out.insert("h1c".into(), json!(report.h1c_rank));
            out.insert("h1c_dual".into(), json!(report.h1c_dual_rank));
            out.insert(
                "h1c_torsion".into(),
                json!(report.h1c_torsion.iter().map(|d| d.to_string()).collect::<Vec<_>>()),
            );
            out.insert(
                "coker_basis".into(),
                json!(report.coker_basis.iter().map(|v| render_vector(v)).collect::<Vec<_>>()),
            );
            out.insert(
                "ker_basis".into(),
                json!(report.ker_basis.iter().map(|v| render_vector(v)).collect::<Vec<_>>()),
            );
            Ok(Value::Object(out))
        }
        Command::Filtration { file, theory } => {
            let (patron, p) = load_patron(file)?;
            let theory = parse_theory(theory, p)?;
            let report = filtration_report(&patron, theory)?;
            Ok(filtration_json(&report))
        }
        Command::Monodromy { file, theory } => {
            let (patron, p) = load_patron(file)?;
            let theory = parse_theory(theory, p)?;
            let total = total_monodromy(&patron, theory)?;
            let report = filtration_report(&patron, theory)?;
            let scale = length_scale(&patron);
            let mut out = Map::new();
            out.insert("theory".into(), json!(theory.to_string()));
            out.insert("block".into(), matrix_json(&report.monodromy));
            out.insert("total".into(), matrix_json(&total));
            // N_{cμ} = c·N_μ: the integer normalization clears length
            // denominators and scales the matrix accordingly.
            out.insert("integer_scale".into(), json!(scale.to_string()));
            let scaled = scale_matrix(&report.monodromy, &BigRational::from_integer(scale));
            out.insert("block_scaled".into(), matrix_json(&scaled));
            Ok(Value::Object(out))
        }
        Command::Stabilize { file } => {
            let (patron, _) = load_patron(file)?;
            let fiber = special_fiber(&patron)?;
            let stable = stabilize(&fiber)?;
            let graph = match &stable {
                crate::patron::MarkedCurve::Curve(_) => {
                    Some(dual_graph(&stable)?.to_dto())
                }
                _ => None,
            };
            let mut out = Map::new();
            out.insert(
                "stable".into(),
                serde_json::to_value(stable.to_dto())
                    .map_err(|e| CliError::Malformed(e.to_string()))?,
            );
            if let Some(g) = graph {
                out.insert(
                    "dual_graph".into(),
                    serde_json::to_value(g).map_err(|e| CliError::Malformed(e.to_string()))?,
                );
            }
            Ok(Value::Object(out))
        }
        Command::Genus { file } => {
            let (patron, _) = load_patron(file)?;
            Ok(json!({ "genus": genus(&patron)? }))
        }
        Command::Validate { file } => {
            let (patron, _) = load_patron(file)?;
            let violations = validate(&patron);
            if violations.is_empty() {
                Ok(json!({ "ok": true }))
            } else {
                Ok(json!({
                    "ok": false,
                    "violations": violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                }))
            }
        }
        Command::SeriesFactor { params } => {
            let u = parse_series(params)?;
            let f = factorize_unit(&u)?;
            let nd = newton_data(&u)?;
            let mut out = Map::new();
            out.insert("c".into(), json!(f.c.to_string()));
            out.insert("k".into(), json!(f.k));
            out.insert("newton".into(), json!({
                "v": render_rational(&nd.v),
                "v_prime": nd.v_prime,
            }));
            out.insert("u_plus".into(), series_json(&f.u_plus));
            out.insert("u_minus".into(), series_json(&f.u_minus));
            Ok(Value::Object(out))
        }
        Command::SeriesResidue { params } => {
            let omega = parse_series(params)?;
            Ok(json!({ "residue": residue(&omega).to_string() }))
        }
        Command::SeriesDlog { params } => {
            let u = parse_series(params)?;
            let d = dlog(&u)?;
            let mut out = Map::new();
            out.insert("residue".into(), json!(residue(&d).to_string()));
            out.insert("series".into(), series_json(&d));
            Ok(Value::Object(out))
        }
        Command::SeriesLeg { params, mu, side } => {
            let f = parse_series(params)?;
            let mu = parse_rational(mu).map_err(|e| CliError::Malformed(e.to_string()))?;
            let side = LegSide::parse(*side)?;
            let g = leg_restrict_form(&f, side, &mu)?;
            let mut out = Map::new();
            out.insert("series".into(), series_json(&g));
            out.insert("residue".into(), json!(residue(&g).to_string()));
            if let Ok(nd) = newton_data(&g) {
                out.insert("newton".into(), json!({
                    "v": render_rational(&nd.v),
                    "v_prime": nd.v_prime,
                }));
            }
            Ok(Value::Object(out))
        }
    }
}

fn load_graph(file: &PathBuf) -> Result<Graph, CliError> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| CliError::Malformed(format!("cannot read {}: {e}", file.display())))?;
    let dto: GraphDto = serde_json::from_str(&text)
        .map_err(|e| CliError::Malformed(format!("bad graph JSON: {e}")))?;
    Graph::from_dto(&dto).map_err(CliError::from)
}

fn load_patron(file: &PathBuf) -> Result<(Patron, Option<u64>), CliError> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| CliError::Malformed(format!("cannot read {}: {e}", file.display())))?;
    let dto: PatronDto = serde_json::from_str(&text)
        .map_err(|e| CliError::Malformed(format!("bad patron JSON: {e}")))?;
    let p = dto.p;
    let patron = Patron::from_dto(&dto)?;
    Ok((patron, p))
}

fn parse_ring(s: &str) -> Result<CoeffRing, CliError> {
    let s = s.trim();
    match s.to_ascii_uppercase().as_str() {
        "Q" => Ok(CoeffRing::RationalField),
        "Z" => Ok(CoeffRing::IntegerRing),
        other => {
            if let Some(n) = other.strip_prefix("Z/") {
                let n: u64 = n
                    .parse()
                    .map_err(|_| CliError::Malformed(format!("bad modulus in ring {s:?}")))?;
                CoeffRing::integers_mod(n)
                    .map_err(|e| CliError::Malformed(e.to_string()))
            } else {
                Err(CliError::Malformed(format!("unknown ring {s:?} (expected Q, Z or Z/n)")))
            }
        }
    }
}

fn parse_theory(s: &str, patron_p: Option<u64>) -> Result<Theory, CliError> {
    let theory = Theory::parse(s)?;
    if let (Theory::EtaleL(ell), Some(p)) = (theory, patron_p) {
        if ell == p {
            return Err(CliError::domain(
                "ell_equals_p",
                format!("etale theory needs ell != p, got ell = p = {ell}"),
            ));
        }
    }
    Ok(theory)
}

fn length_scale(pat: &Patron) -> num_bigint::BigInt {
    use num_integer::Integer;
    let mut scale = num_bigint::BigInt::from(1);
    for leg in pat.legs() {
        scale = scale.lcm(leg.length.denom());
    }
    scale
}

fn scale_matrix(m: &QMat, c: &BigRational) -> QMat {
    let mut out = QMat::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.set(i, j, m.get(i, j) * c);
        }
    }
    out
}

fn parse_series(params: &SeriesParams) -> Result<LaurentSeries, CliError> {
    let scalar = ScalarContext::new(params.p, params.ram)?;
    let prec = parse_rational(&params.prec).map_err(|e| CliError::Malformed(e.to_string()))?;
    let mut terms = Vec::new();
    for item in params.coeffs.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (n, value) = item
            .split_once(':')
            .ok_or_else(|| CliError::Malformed(format!("bad coefficient entry {item:?}")))?;
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|_| CliError::Malformed(format!("bad exponent {n:?}")))?;
        let c = parse_scalar(&scalar, value)?;
        terms.push((n, c));
    }
    let lo = terms.iter().map(|(n, _)| *n).min().unwrap_or(0).min(0);
    let hi = terms.iter().map(|(n, _)| *n).max().unwrap_or(0).max(0);
    let n_min = params.n_min.unwrap_or(lo);
    let n_max = params.n_max.unwrap_or(hi);
    let ctx = SeriesContext::new(scalar, prec, n_min, n_max)?;
    Ok(LaurentSeries::from_terms(&ctx, terms)?)
}

fn render_vector(v: &[BigRational]) -> Vec<String> {
    v.iter().map(render_rational).collect()
}

/// Matrix report: rows, cols, and row-major entries as rational strings.
pub fn matrix_json(m: &QMat) -> Value {
    let entries: Vec<Vec<String>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| render_rational(m.get(i, j))).collect())
        .collect();
    json!({ "rows": m.nrows(), "cols": m.ncols(), "entries": entries })
}

fn slopes_json(s: &Option<SlopeProfile>) -> Value {
    let Some(s) = s else {
        return json!([]);
    };
    let mut out = Vec::new();
    if s.zero > 0 {
        out.push(json!({ "slope": "0", "multiplicity": s.zero }));
    }
    if s.band > 0 {
        out.push(json!({ "slope": "(0,1)", "multiplicity": s.band }));
    }
    if s.one > 0 {
        out.push(json!({ "slope": "1", "multiplicity": s.one }));
    }
    json!(out)
}

/// Filtration report as emitted by the `filtration` command.
pub fn filtration_json(report: &FiltrationReport) -> Value {
    let pieces: Vec<Value> = report
        .pieces
        .iter()
        .map(|p| {
            json!({
                "label": serde_json::to_value(p.label).expect("label serializes"),
                "dimension": p.dimension,
                "weight": p.weight,
                "slopes": slopes_json(&p.slopes),
                "twist": p.tate_twist,
            })
        })
        .collect();
    json!({
        "theory": report.theory.to_string(),
        "pieces": pieces,
        "total": report.total_dimension,
        "monodromy": matrix_json(&report.monodromy),
    })
}

/// Series report: exponent-keyed coefficients as scalar strings.
pub fn series_json(s: &LaurentSeries) -> Value {
    let mut coeffs = Map::new();
    for (n, c) in s.terms() {
        coeffs.insert(n.to_string(), json!(c.to_string()));
    }
    let (n_min, n_max) = s.ctx().window();
    json!({
        "coeffs": coeffs,
        "prec": render_rational(s.ctx().prec()),
        "window": [n_min, n_max],
        "tail_certified": s.tail_certificate(),
    })
}
