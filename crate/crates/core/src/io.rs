//! JSON model files and analysis reports.
//!
//! A model file is `{"format_version": "1", "kind": "wmdp" | "pphs", "body": ...}`.
//!
//! WMDP body:
//! ```json
//! {"states": 2, "init": 0,
//!  "actions": [[{"dist": {"1": 1.0}, "weight": -1}], [{"dist": {"0": 1.0}, "weight": "+inf"}]]}
//! ```
//!
//! PPHS body, with constraint rows `[a_1, ..., a_n, "<=" | "=" | ">=", b]`:
//! ```json
//! {"dim": 2,
//!  "locations": [{"invariant": [[-1, 0, "<=", 0], [0, -1, "<=", 0]], "flow": [[1, 0, "=", -2], [0, 1, "=", 1]]}],
//!  "edges": [{"loc": 0, "facet_index": 0, "dist": {"0": 1.0}}],
//!  "init": {"loc": 0, "point": [1, 0]}}
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;
use serde_json::{json, Value};
use thiserror::Error;

use crate::abstraction::PphsVerdict;
use crate::chain::AsVerdict;
use crate::mdp::{Action, Wmdp};
use crate::mean_payoff::{MeanPayoffAnalysis, StabilityVerdict, UnknownReason};
use crate::pphs::{ConeInvariant, GuardEdge, Halfspace, HsRelation, InitPoint, Location, Polyhedron, Pphs, PphsError};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IoError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Schema { line: Option<usize>, message: String },
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
}

impl IoError {
    fn schema(message: impl Into<String>) -> Self {
        IoError::Schema { line: None, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Wmdp(Wmdp),
    Pphs(Pphs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Wmdp,
    Pphs,
}

/// A weight that is a real number or `+inf`, written as `"+inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight(pub f64);

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("+inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Lit {
            Num(f64),
            Text(String),
        }
        match Lit::deserialize(d)? {
            Lit::Num(v) => Ok(Weight(v)),
            Lit::Text(t) if t == "+inf" => Ok(Weight(f64::INFINITY)),
            Lit::Text(t) => Err(D::Error::custom(format!("weight must be a number or \"+inf\", found \"{t}\""))),
        }
    }
}

#[derive(Deserialize)]
struct RawFile<'a> {
    format_version: String,
    kind: ModelKind,
    #[serde(borrow)]
    body: &'a RawValue,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WmdpBody {
    states: usize,
    init: usize,
    actions: Vec<Vec<ActionBody>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionBody {
    dist: BTreeMap<String, f64>,
    weight: Weight,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PphsBody {
    dim: usize,
    locations: Vec<LocationBody>,
    #[serde(default)]
    edges: Vec<EdgeBody>,
    init: InitBody,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationBody {
    invariant: Vec<Vec<Value>>,
    flow: Vec<Vec<Value>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeBody {
    loc: usize,
    facet_index: usize,
    dist: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitBody {
    loc: usize,
    point: Vec<f64>,
}

fn json_error(e: serde_json::Error, line_offset: usize) -> IoError {
    let line = e.line() + line_offset;
    let message = strip_position(&e.to_string());
    match e.classify() {
        serde_json::error::Category::Data => IoError::Schema { line: Some(line), message },
        _ => IoError::Parse { line, column: e.column(), message },
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Reads and validates a model file.
pub fn parse_model(path: impl AsRef<Path>) -> Result<Model, IoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| IoError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_model_str(&text)
}

pub fn parse_model_str(text: &str) -> Result<Model, IoError> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| json_error(e, 0))?;
    if raw.format_version != FORMAT_VERSION {
        return Err(IoError::schema(format!("unsupported format_version \"{}\" (expected \"{FORMAT_VERSION}\")", raw.format_version)));
    }
    let body = raw.body.get();
    let offset = body.as_ptr() as usize - text.as_ptr() as usize;
    let body_line = text[..offset].matches('\n').count();
    match raw.kind {
        ModelKind::Wmdp => {
            let b: WmdpBody = serde_json::from_str(body).map_err(|e| json_error(e, body_line))?;
            wmdp_from_body(b).map(Model::Wmdp)
        }
        ModelKind::Pphs => {
            let b: PphsBody = serde_json::from_str(body).map_err(|e| json_error(e, body_line))?;
            pphs_from_body(b).map(Model::Pphs)
        }
    }
}

fn parse_dist(dist: &BTreeMap<String, f64>, what: &str) -> Result<Vec<(usize, f64)>, IoError> {
    let mut out: Vec<(usize, f64)> = dist
        .iter()
        .map(|(k, &p)| k.trim().parse::<usize>().map(|t| (t, p)).map_err(|_| IoError::schema(format!("{what}: \"{k}\" is not an index"))))
        .collect::<Result<_, _>>()?;
    out.sort_by_key(|e| e.0);
    Ok(out)
}

fn wmdp_from_body(b: WmdpBody) -> Result<Wmdp, IoError> {
    if b.actions.len() != b.states {
        return Err(IoError::Validation(vec![format!("{} action lists for {} states", b.actions.len(), b.states)]));
    }
    let mut actions = Vec::with_capacity(b.states);
    for (s, acts) in b.actions.iter().enumerate() {
        let mut row = Vec::with_capacity(acts.len());
        for (a, act) in acts.iter().enumerate() {
            row.push(Action::new(parse_dist(&act.dist, &format!("state {s}, action {a}"))?, act.weight.0));
        }
        actions.push(row);
    }
    let m = Wmdp::new(actions, b.init);
    let v = m.validate();
    if v.is_empty() {
        Ok(m)
    } else {
        Err(IoError::Validation(v.iter().map(|x| x.to_string()).collect()))
    }
}

fn parse_rows(rows: &[Vec<Value>], dim: usize, what: &str) -> Result<Vec<Halfspace>, IoError> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let bad = |m: &str| IoError::schema(format!("{what}, row {i}: {m}"));
            if row.len() != dim + 2 {
                return Err(bad(&format!("expected {} coefficients, a relation and a bound", dim)));
            }
            let num = |v: &Value| v.as_f64().ok_or_else(|| bad("coefficients must be numbers"));
            let mut normal: Vec<f64> = row[..dim].iter().map(num).collect::<Result<_, _>>()?;
            let mut offset = num(&row[dim + 1])?;
            let rel = match row[dim].as_str() {
                Some("<=") => HsRelation::Le,
                Some("=") | Some("==") => HsRelation::Eq,
                Some(">=") => {
                    normal.iter_mut().for_each(|a| *a = -*a);
                    offset = -offset;
                    HsRelation::Le
                }
                _ => return Err(bad("relation must be \"<=\", \"=\" or \">=\"")),
            };
            Ok(Halfspace { normal, rel, offset })
        })
        .collect()
}

fn pphs_from_body(b: PphsBody) -> Result<Pphs, IoError> {
    let n = b.dim;
    let mut problems = Vec::new();
    let mut locations = Vec::with_capacity(b.locations.len());
    for (q, l) in b.locations.iter().enumerate() {
        let inv = parse_rows(&l.invariant, n, &format!("location {q}, invariant"))?;
        let flow = parse_rows(&l.flow, n, &format!("location {q}, flow"))?;
        match ConeInvariant::new(Polyhedron { dim: n, halfspaces: inv }) {
            Ok(invariant) => locations.push(Location { invariant, flow: Polyhedron { dim: n, halfspaces: flow } }),
            Err(_) => problems.push(PphsError::NotACone(Some(q)).to_string()),
        }
    }
    if !problems.is_empty() {
        return Err(IoError::Validation(problems));
    }
    let edges = b
        .edges
        .iter()
        .map(|e| {
            let dist = parse_dist(&e.dist, &format!("guard of location {}, facet {}", e.loc, e.facet_index))?;
            Ok(GuardEdge { loc: e.loc, facet: e.facet_index, dist })
        })
        .collect::<Result<_, IoError>>()?;
    let h = Pphs { dim: n, locations, edges, init: InitPoint { loc: b.init.loc, point: b.init.point } };
    if h.init.point.len() != n {
        return Err(IoError::Validation(vec![format!("initial point has {} coordinates instead of {n}", h.init.point.len())]));
    }
    if h.init.loc >= h.locations.len() {
        return Err(IoError::Validation(vec![format!("initial location {} out of range", h.init.loc)]));
    }
    let v = h.validate();
    if v.is_empty() {
        Ok(h)
    } else {
        Err(IoError::Validation(v.iter().map(|x| x.to_string()).collect()))
    }
}

fn dist_map(dist: &[(usize, f64)]) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<usize, f64> = BTreeMap::new();
    for &(t, p) in dist {
        *out.entry(t).or_default() += p;
    }
    out.into_iter().map(|(t, p)| (t.to_string(), p)).collect()
}

fn file(kind: ModelKind, body: impl Serialize) -> String {
    let v = json!({ "format_version": FORMAT_VERSION, "kind": kind, "body": body });
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}

pub fn wmdp_to_json(m: &Wmdp) -> String {
    let body = WmdpBody {
        states: m.state_count(),
        init: m.init,
        actions: m
            .actions
            .iter()
            .map(|acts| acts.iter().map(|a| ActionBody { dist: dist_map(&a.dist), weight: Weight(a.weight) }).collect())
            .collect(),
    };
    file(ModelKind::Wmdp, body)
}

fn rows(hs: &[Halfspace]) -> Vec<Vec<Value>> {
    hs.iter()
        .map(|h| {
            let mut row: Vec<Value> = h.normal.iter().map(|&a| json!(a)).collect();
            row.push(json!(if h.rel == HsRelation::Le { "<=" } else { "=" }));
            row.push(json!(h.offset));
            row
        })
        .collect()
}

pub fn pphs_to_json(h: &Pphs) -> String {
    let body = PphsBody {
        dim: h.dim,
        locations: h.locations.iter().map(|l| LocationBody { invariant: rows(l.invariant.halfspaces()), flow: rows(&l.flow.halfspaces) }).collect(),
        edges: h.edges.iter().map(|e| EdgeBody { loc: e.loc, facet_index: e.facet, dist: dist_map(&e.dist) }).collect(),
        init: InitBody { loc: h.init.loc, point: h.init.point.clone() },
    };
    file(ModelKind::Pphs, body)
}

pub fn model_to_json(m: &Model) -> String {
    match m {
        Model::Wmdp(m) => wmdp_to_json(m),
        Model::Pphs(h) => pphs_to_json(h),
    }
}

pub fn write_model(path: impl AsRef<Path>, m: &Model) -> Result<(), IoError> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(m)).map_err(|e| IoError::Io { path: path.display().to_string(), message: e.to_string() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportVerdict {
    Stable,
    Unknown,
    Yes,
    No,
}

impl fmt::Display for ReportVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<StabilityVerdict> for ReportVerdict {
    fn from(v: StabilityVerdict) -> Self {
        match v {
            StabilityVerdict::Stable => ReportVerdict::Stable,
            StabilityVerdict::Unknown(_) => ReportVerdict::Unknown,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abstraction_secs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification_secs: Option<f64>,
}

/// What every subcommand prints. `details` carries command-specific data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub verdict: Option<ReportVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_mean_payoff: Option<Weight>,
    pub diagnostics: Vec<Value>,
    pub timings: Timings,
    #[serde(skip_serializing_if = "Value::is_null", default)]
    pub details: Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn analysis_diagnostics(a: &MeanPayoffAnalysis, verdict: StabilityVerdict) -> Vec<Value> {
    let mut out = Vec::new();
    if a.infinite_edge {
        out.push(json!({ "kind": "infinite_edge", "message": "a reachable edge has weight +inf" }));
    }
    if verdict == StabilityVerdict::Unknown(UnknownReason::NonNegativeMeanPayoff) {
        out.push(json!({ "kind": "non_negative_mean_payoff" }));
    }
    out
}

fn analysis_details(a: &MeanPayoffAnalysis) -> Value {
    json!({
        "bias": a.bias_c,
        "r_max": a.r_max,
        "reach_probability": a.reach_probability,
        "mec_count": a.mec_count,
        "reachable_states": a.reachable_states,
        "lp_count": a.lp_count,
    })
}

/// Report of `analyze` on a WMDP.
pub fn analysis_report(a: &MeanPayoffAnalysis) -> Report {
    let verdict = StabilityVerdict::from_analysis(a);
    Report {
        verdict: Some(verdict.into()),
        max_mean_payoff: Some(Weight(a.mean_payoff().value())),
        diagnostics: analysis_diagnostics(a, verdict),
        timings: Timings { abstraction_secs: None, verification_secs: Some(a.elapsed_secs) },
        details: analysis_details(a),
    }
}

/// Report of `verify` on a PPHS.
pub fn pphs_report(v: &PphsVerdict) -> Report {
    let mut diagnostics = analysis_diagnostics(&v.analysis, v.verdict);
    diagnostics.extend(v.abstraction.diagnostics.iter().map(|d| serde_json::to_value(d).expect("serializable")));
    let mut details = analysis_details(&v.analysis);
    details["abstract_states"] = json!(v.abstraction.states.len());
    details["abstract_edges"] = json!(v.abstraction.edge_count());
    details["weight_lps"] = json!(v.abstraction.origins.iter().flatten().map(|o| o.lp_cases).sum::<usize>());
    Report {
        verdict: Some(v.verdict.into()),
        max_mean_payoff: Some(Weight(v.analysis.mean_payoff().value())),
        diagnostics,
        timings: Timings { abstraction_secs: Some(v.abstraction_secs), verification_secs: Some(v.verification_secs) },
        details,
    }
}

/// Report of the almost-sure convergence check.
pub fn as_report(v: &AsVerdict, secs: f64) -> Report {
    let (verdict, diagnostics) = match v {
        AsVerdict::Yes => (ReportVerdict::Yes, vec![]),
        AsVerdict::No(w) => (
            ReportVerdict::No,
            vec![json!({ "kind": "witness", "policy": w.policy.0, "bscc": w.bscc, "weight": Weight(w.weight) })],
        ),
    };
    Report {
        verdict: Some(verdict),
        max_mean_payoff: None,
        diagnostics,
        timings: Timings { abstraction_secs: None, verification_secs: Some(secs) },
        details: Value::Null,
    }
}
