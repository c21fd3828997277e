//! Diagram export and import.
//!
//! JSON schema:
//! ```text
//! {"model": {"N": int, "m": int, "d": float, "nonlinearity": {...}},
//!  "branches": [{"id": int, "homogeneous": bool,
//!                "points": [{"mu": float, "u": [float], "l2norm": float,
//!                            "stability": int, "label": string|null}],
//!                "events": [{"kind": string, "mu": float, "point_index": int}]}],
//!  "summary": {"fold_count": int, "branch_point_count": int, "closed": bool,
//!              "label_sequence": [string], "gamma_match": string}}
//! ```
//! Floats are serialized with 17 significant digits, which round-trips
//! IEEE doubles bitwise. CSV rows carry
//! `branch_id, point_index, mu, l2norm, stability, label`.

use anyhow::{Context, Result};
use ring_snake_core::continuation::EventKind;
use ring_snake_core::diagram::Diagram;
use ring_snake_core::linalg::euclidean_norm;
use serde::Deserialize;
use std::fmt::Write as _;

use crate::config::{ModelConfig, NonlinearityConfig};

/// Serializable view of a diagram (also the parse target for imports).
#[derive(Clone, Debug, Deserialize)]
pub struct DiagramDoc {
    pub model: ModelConfig,
    pub branches: Vec<BranchDoc>,
    pub summary: SummaryDoc,
}

#[derive(Clone, Debug, Deserialize)]
pub struct BranchDoc {
    pub id: usize,
    #[serde(default)]
    pub homogeneous: bool,
    pub points: Vec<PointDoc>,
    pub events: Vec<EventDoc>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct PointDoc {
    pub mu: f64,
    pub u: Vec<f64>,
    pub l2norm: f64,
    pub stability: usize,
    pub label: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct EventDoc {
    pub kind: String,
    pub mu: f64,
    pub point_index: usize,
}

#[derive(Clone, Debug, Deserialize)]
pub struct SummaryDoc {
    pub fold_count: usize,
    pub branch_point_count: usize,
    pub closed: bool,
    pub label_sequence: Vec<String>,
    pub gamma_match: String,
}

impl DiagramDoc {
    pub fn from_diagram(diagram: &Diagram) -> Self {
        let model = ModelConfig {
            n: diagram.model.node_count(),
            m: diagram.model.range(),
            d: diagram.model.d,
            nonlinearity: NonlinearityConfig::from_nonlinearity(&diagram.model.nonlinearity),
        };
        let branches = diagram
            .branches
            .iter()
            .enumerate()
            .map(|(id, b)| BranchDoc {
                id,
                homogeneous: b.homogeneous,
                points: b
                    .points
                    .iter()
                    .map(|p| PointDoc {
                        mu: p.mu,
                        u: p.full.clone(),
                        l2norm: euclidean_norm(&p.full),
                        stability: p.stability,
                        label: p.label.map(|l| l.to_string()),
                    })
                    .collect(),
                events: b
                    .events
                    .iter()
                    .map(|e| EventDoc {
                        kind: event_kind_str(e.kind).to_string(),
                        mu: e.mu,
                        point_index: e.point_index,
                    })
                    .collect(),
            })
            .collect();
        let summary = SummaryDoc {
            fold_count: diagram.summary.fold_count,
            branch_point_count: diagram.summary.branch_point_count,
            closed: diagram.summary.closed,
            label_sequence: diagram
                .summary
                .label_sequence
                .iter()
                .map(|l| l.to_string())
                .collect(),
            gamma_match: diagram.summary.gamma().to_string(),
        };
        DiagramDoc {
            model,
            branches,
            summary,
        }
    }
}

pub fn event_kind_str(kind: EventKind) -> &'static str {
    match kind {
        EventKind::Fold => "fold",
        EventKind::BranchPoint => "branch-point",
        EventKind::WindowExit => "window-exit",
        EventKind::LabelStop => "label-stop",
        EventKind::Closure => "closure",
    }
}

/// 17 significant digits: enough to reproduce any `f64` bitwise.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn diagram_to_json(doc: &DiagramDoc) -> String {
    let mut s = String::new();
    s.push_str("{\n  \"model\": {");
    let _ = write!(
        s,
        "\"N\": {}, \"m\": {}, \"d\": {}, \"nonlinearity\": {{\"kind\": {}, \"coefficients\": [{}]}}",
        doc.model.n,
        doc.model.m,
        fmt17(doc.model.d),
        json_string(&doc.model.nonlinearity.kind),
        doc.model
            .nonlinearity
            .coefficients
            .iter()
            .map(|c| fmt17(*c))
            .collect::<Vec<_>>()
            .join(", ")
    );
    s.push_str("},\n  \"branches\": [");
    for (bi, b) in doc.branches.iter().enumerate() {
        if bi > 0 {
            s.push(',');
        }
        let _ = write!(
            s,
            "\n    {{\"id\": {}, \"homogeneous\": {}, \"points\": [",
            b.id, b.homogeneous
        );
        for (pi, p) in b.points.iter().enumerate() {
            if pi > 0 {
                s.push(',');
            }
            let u = p
                .u
                .iter()
                .map(|v| fmt17(*v))
                .collect::<Vec<_>>()
                .join(", ");
            let label = match &p.label {
                Some(l) => json_string(l),
                None => "null".to_string(),
            };
            let _ = write!(
                s,
                "\n      {{\"mu\": {}, \"u\": [{}], \"l2norm\": {}, \"stability\": {}, \"label\": {}}}",
                fmt17(p.mu),
                u,
                fmt17(p.l2norm),
                p.stability,
                label
            );
        }
        s.push_str("\n    ], \"events\": [");
        for (ei, e) in b.events.iter().enumerate() {
            if ei > 0 {
                s.push(',');
            }
            let _ = write!(
                s,
                "\n      {{\"kind\": {}, \"mu\": {}, \"point_index\": {}}}",
                json_string(&e.kind),
                fmt17(e.mu),
                e.point_index
            );
        }
        s.push_str("\n    ]}");
    }
    s.push_str("\n  ],\n  \"summary\": {");
    let labels = doc
        .summary
        .label_sequence
        .iter()
        .map(|l| json_string(l))
        .collect::<Vec<_>>()
        .join(", ");
    let _ = write!(
        s,
        "\"fold_count\": {}, \"branch_point_count\": {}, \"closed\": {}, \"label_sequence\": [{}], \"gamma_match\": {}",
        doc.summary.fold_count,
        doc.summary.branch_point_count,
        doc.summary.closed,
        labels,
        json_string(&doc.summary.gamma_match)
    );
    s.push_str("}\n}\n");
    s
}

pub fn diagram_from_json(text: &str) -> Result<DiagramDoc> {
    serde_json::from_str(text).context("parsing diagram JSON")
}

pub fn diagram_to_csv(doc: &DiagramDoc) -> String {
    let mut s = String::from("branch_id,point_index,mu,l2norm,stability,label\n");
    for b in &doc.branches {
        for (pi, p) in b.points.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                b.id,
                pi,
                fmt17(p.mu),
                fmt17(p.l2norm),
                p.stability,
                p.label.as_deref().unwrap_or("")
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ring_snake_core::diagram::{DiagramMode, DiagramSummary, GammaMatch};
    use ring_snake_core::model::RingModel;

    fn empty_diagram() -> Diagram {
        Diagram {
            model: RingModel::cubic_quintic(6, 1, 0.005).unwrap(),
            mode: DiagramMode::SparseSnake,
            branches: vec![],
            summary: DiagramSummary {
                gamma_match: Some(GammaMatch::None),
                ..DiagramSummary::default()
            },
        }
    }

    #[test]
    fn empty_diagram_is_valid_json() {
        let doc = DiagramDoc::from_diagram(&empty_diagram());
        let json = diagram_to_json(&doc);
        let back = diagram_from_json(&json).unwrap();
        assert!(back.branches.is_empty());
        assert_eq!(back.summary.gamma_match, "none");
    }

    #[test]
    fn seventeen_digits_round_trip_exactly() {
        for &x in &[
            0.1,
            1.0 / 3.0,
            core::f64::consts::PI,
            3.0 * (1e-4f64 * 1e-4f64).cbrt(),
            -1.2345678901234567e-12,
        ] {
            let s = fmt17(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{s}");
        }
    }
}
