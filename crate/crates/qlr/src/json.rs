//! JSON file formats: instances, spin models, solver reports. All floats
//! are emitted with 17 significant digits so files round-trip exactly and
//! fixed-seed runs are byte-identical.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bloch::{BlochProjector, LocalTerm};
use crate::error::{QlrError, Result};
use crate::gadgets::TIMInstance;
use crate::instance::{Edge, Instance, Kind, Psi};
use crate::localratio::{CertReport, Certificate};
use crate::state::ProductState;

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{:.16e}", value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value)
    }
}

/// Serialize any JSON value with 17-significant-digit floats.
pub fn to_json_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    serde::Serialize::serialize(value, &mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// Format a single float the way the JSON and CSV writers do.
pub fn format_f64(value: f64) -> String {
    format!("{:.16e}", value)
}

#[derive(Serialize, Deserialize)]
struct VertexJson {
    id: usize,
    c: f64,
    bloch: [f64; 3],
    offset: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    u: usize,
    v: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    penalty: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    kind: Kind,
    n: usize,
    vertices: Vec<VertexJson>,
    edges: Vec<EdgeJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi: Option<Psi>,
    offset: f64,
}

#[derive(Serialize, Deserialize)]
struct TimEdgeJson {
    u: usize,
    v: usize,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct TimJson {
    kind: String,
    n: usize,
    edges: Vec<TimEdgeJson>,
    fields: Vec<f64>,
}

pub fn instance_to_json(inst: &Instance) -> String {
    let file = InstanceJson {
        kind: inst.kind,
        n: inst.n,
        vertices: inst
            .terms
            .iter()
            .enumerate()
            .map(|(id, t)| VertexJson {
                id,
                c: t.weight,
                bloch: [t.projector.ax, t.projector.ay, t.projector.az],
                offset: t.offset,
            })
            .collect(),
        edges: inst
            .edges
            .iter()
            .map(|e| EdgeJson {
                u: e.u,
                v: e.v,
                penalty: e.penalty,
            })
            .collect(),
        psi: inst.psi,
        offset: inst.global_offset,
    };
    to_json_string(&serde_json::to_value(&file).expect("serializable"))
}

pub fn tim_to_json(tim: &TIMInstance) -> String {
    let file = TimJson {
        kind: "tim".into(),
        n: tim.n,
        edges: tim
            .edges
            .iter()
            .map(|&(u, v, w)| TimEdgeJson { u, v, w })
            .collect(),
        fields: tim.fields.clone(),
    };
    to_json_string(&serde_json::to_value(&file).expect("serializable"))
}

/// Either of the two accepted input file shapes, keyed by `kind`.
#[derive(Debug, Clone)]
pub enum InputFile {
    Instance(Instance),
    Tim(TIMInstance),
}

pub fn parse_input(text: &str) -> Result<InputFile> {
    let value: Value = serde_json::from_str(text)?;
    let kind = value
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| QlrError::InvalidInstance("missing \"kind\" field".into()))?;
    if kind == "tim" {
        let file: TimJson = serde_json::from_value(value)?;
        let tim = TIMInstance::new(
            file.n,
            file.edges.iter().map(|e| (e.u, e.v, e.w)).collect(),
            file.fields,
        );
        tim.validate()?;
        return Ok(InputFile::Tim(tim));
    }
    let file: InstanceJson = serde_json::from_value(value)?;
    let mut inst = Instance::new(file.kind, file.n);
    if file.vertices.len() != file.n {
        return Err(QlrError::DimensionMismatch {
            expected: file.n,
            got: file.vertices.len(),
        });
    }
    let mut seen = vec![false; file.n];
    for v in &file.vertices {
        if v.id >= file.n || seen[v.id] {
            return Err(QlrError::InvalidInstance(format!(
                "bad or duplicate vertex id {}",
                v.id
            )));
        }
        seen[v.id] = true;
        inst.terms[v.id] = LocalTerm::new(
            v.c,
            BlochProjector::new(v.bloch[0], v.bloch[1], v.bloch[2]),
            v.offset,
        );
    }
    for e in &file.edges {
        match e.penalty {
            Some(p) => inst.add_edge(Edge::with_penalty(e.u, e.v, p)),
            None => inst.add_edge(Edge::new(e.u, e.v)),
        }
    }
    inst.psi = file.psi;
    inst.global_offset = file.offset;
    let report = inst.validate();
    if !report.passed() {
        return Err(QlrError::InvalidInstance(report.violations.join("; ")));
    }
    Ok(InputFile::Instance(inst))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    match parse_input(text)? {
        InputFile::Instance(inst) => Ok(inst),
        InputFile::Tim(_) => Err(QlrError::KindMismatch(
            "expected a problem instance, found a spin-model file".into(),
        )),
    }
}

/// Solver report: energy, state, decomposition certificate, optional
/// oracle comparison and certificate re-validation.
pub struct Report<'a> {
    pub energy: f64,
    pub state: Option<&'a ProductState>,
    pub certificate: Option<&'a Certificate>,
    /// Per-round achieved local ratios, aligned with certificate rounds.
    pub local_ratios: Option<Vec<f64>>,
    pub cert_report: Option<&'a CertReport>,
    pub exact: Option<f64>,
    pub ratio: Option<f64>,
}

pub fn report_to_json(report: &Report) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("energy".into(), serde_json::json!(report.energy));
    if let Some(st) = report.state {
        obj.insert("state".into(), serde_json::json!(st.bloch));
    }
    if let Some(cert) = report.certificate {
        let rounds: Vec<Value> = cert
            .rounds
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let mut round = serde_json::Map::new();
                round.insert("edge".into(), serde_json::json!([r.edge.0, r.edge.1]));
                round.insert("w".into(), serde_json::json!(r.w));
                if let Some(l) = r.lambda {
                    round.insert("lambda".into(), serde_json::json!(l));
                }
                round.insert("mu_star".into(), serde_json::json!(r.mu_star));
                if let Some(ratios) = &report.local_ratios {
                    round.insert("local_ratio".into(), serde_json::json!(ratios[k]));
                }
                Value::Object(round)
            })
            .collect();
        let alpha_effective = report
            .local_ratios
            .as_ref()
            .and_then(|r| r.iter().cloned().reduce(f64::max))
            .unwrap_or(0.0);
        let mut c = serde_json::Map::new();
        c.insert("rounds".into(), Value::Array(rounds));
        c.insert("residual".into(), serde_json::json!(cert.residual));
        if !cert.residual_penalties.is_empty() {
            c.insert(
                "residual_penalties".into(),
                serde_json::json!(cert.residual_penalties),
            );
        }
        c.insert("selected".into(), serde_json::json!(cert.selected));
        c.insert("alpha".into(), serde_json::json!(cert.alpha));
        c.insert("alpha_effective".into(), serde_json::json!(alpha_effective));
        obj.insert("certificate".into(), Value::Object(c));
    }
    if let Some(cr) = report.cert_report {
        obj.insert(
            "cert_report".into(),
            serde_json::to_value(cr).expect("serializable"),
        );
    }
    if let Some(exact) = report.exact {
        obj.insert("exact".into(), serde_json::json!(exact));
    }
    if let Some(ratio) = report.ratio {
        obj.insert("ratio".into(), serde_json::json!(ratio));
    }
    to_json_string(&Value::Object(obj))
}

pub fn evc_report_to_json(
    report: &crate::evc::EvcReport,
    exact: Option<f64>,
) -> String {
    let components: Vec<Value> = report
        .components
        .iter()
        .map(|c| {
            let mut obj = serde_json::Map::new();
            obj.insert(
                "case".into(),
                serde_json::json!(match c.case {
                    crate::evc::CaseKind::Case1 => "1",
                    crate::evc::CaseKind::Case2 => "2",
                    crate::evc::CaseKind::Case3 => "3",
                }),
            );
            obj.insert("energy".into(), serde_json::json!(c.energy));
            obj.insert("dim".into(), serde_json::json!(c.dim));
            let amps: Vec<[f64; 2]> = c.amplitudes.iter().map(|a| [a.re, a.im]).collect();
            obj.insert("amplitudes".into(), serde_json::json!(amps));
            obj.insert("vertices".into(), serde_json::json!(c.vertices));
            if let Some((a, b)) = &c.partition {
                obj.insert("partition".into(), serde_json::json!({ "A": a, "B": b }));
            }
            Value::Object(obj)
        })
        .collect();
    let mut obj = serde_json::Map::new();
    obj.insert("energy".into(), serde_json::json!(report.energy));
    obj.insert("components".into(), Value::Array(components));
    if let Some(e) = exact {
        obj.insert("exact".into(), serde_json::json!(e));
    }
    to_json_string(&Value::Object(obj))
}

pub fn spectrum_to_json(report: &crate::exact::SpectrumReport) -> String {
    to_json_string(&serde_json::to_value(report).expect("serializable"))
}

pub fn convergence_to_json(report: &crate::gadgets::ConvergenceReport) -> String {
    to_json_string(&serde_json::to_value(report).expect("serializable"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_17_significant_digits() {
        assert_eq!(format_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(format_f64(1.0 / 3.0), "3.3333333333333331e-1");
        let third: f64 = format_f64(1.0 / 3.0).parse().unwrap();
        assert_eq!(third, 1.0 / 3.0);
    }

    #[test]
    fn instance_round_trip() {
        let mut inst = Instance::new(Kind::Tvc, 3);
        inst.terms[0] = LocalTerm::new(0.7, BlochProjector::minus_x(), -0.35);
        inst.terms[1] = LocalTerm::new(1.0 / 3.0, BlochProjector::ket1(), 0.0);
        inst.terms[2] = LocalTerm::new(
            0.9,
            BlochProjector::new(-0.6, 0.0, -0.8),
            0.1,
        );
        inst.add_edge(Edge::new(0, 1));
        inst.add_edge(Edge::new(1, 2));
        inst.global_offset = 0.25;
        let text = instance_to_json(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(inst, back);
        assert_eq!(text, instance_to_json(&back));
    }

    #[test]
    fn evc_round_trip_with_psi() {
        let mut inst = Instance::new(Kind::Evc, 2);
        inst.psi = Some(Psi::Diagonal {
            alpha: 0.8,
            beta: 0.6,
        });
        inst.terms[0] = LocalTerm::new(1.0, BlochProjector::ket1(), 0.0);
        inst.terms[1] = LocalTerm::new(1.0, BlochProjector::ket1(), 0.0);
        inst.add_edge(Edge::new(0, 1));
        let back = parse_instance(&instance_to_json(&inst)).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn tim_round_trip() {
        let tim = TIMInstance::new(2, vec![(0, 1, 1.0)], vec![-0.5, 0.0]);
        match parse_input(&tim_to_json(&tim)).unwrap() {
            InputFile::Tim(back) => {
                assert_eq!(back.n, 2);
                assert_eq!(back.edges, tim.edges);
                assert_eq!(back.fields, tim.fields);
            }
            InputFile::Instance(_) => panic!("expected spin-model file"),
        }
    }

    #[test]
    fn invalid_instances_are_rejected() {
        assert!(parse_input("{}").is_err());
        assert!(parse_input("{\"kind\":\"tvc\",\"n\":1,\"vertices\":[],\"edges\":[],\"offset\":0}").is_err());
        // positive az fails validation
        let bad = "{\"kind\":\"tvc\",\"n\":1,\"vertices\":[{\"id\":0,\"c\":1.0,\"bloch\":[0.0,0.0,1.0],\"offset\":0.0}],\"edges\":[],\"offset\":0.0}";
        assert!(parse_input(bad).is_err());
    }
}
