//! SVG rendering of bifurcation diagrams: `μ` on the abscissa, the
//! Euclidean norm of the state on the ordinate. One polyline per branch
//! (dotted for homogeneous branches), dots at folds, crosses at branch
//! points, and squares at the exceptional stops.

use crate::export::{BranchDoc, DiagramDoc};
use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const MARGIN: f64 = 56.0;

struct Frame {
    mu_lo: f64,
    mu_hi: f64,
    norm_lo: f64,
    norm_hi: f64,
}

impl Frame {
    fn from_doc(doc: &DiagramDoc) -> Frame {
        let mut mu_lo = f64::INFINITY;
        let mut mu_hi = f64::NEG_INFINITY;
        let mut norm_hi = f64::NEG_INFINITY;
        for b in &doc.branches {
            for p in &b.points {
                mu_lo = mu_lo.min(p.mu);
                mu_hi = mu_hi.max(p.mu);
                norm_hi = norm_hi.max(p.l2norm);
            }
        }
        if !mu_lo.is_finite() {
            (mu_lo, mu_hi, norm_hi) = (0.0, 1.0, 1.0);
        }
        if mu_hi - mu_lo < 1e-9 {
            mu_hi = mu_lo + 1.0;
        }
        let pad = 0.04 * (mu_hi - mu_lo);
        Frame {
            mu_lo: mu_lo - pad,
            mu_hi: mu_hi + pad,
            norm_lo: 0.0,
            norm_hi: norm_hi.max(1e-9) * 1.06,
        }
    }

    fn x(&self, mu: f64) -> f64 {
        MARGIN + (mu - self.mu_lo) / (self.mu_hi - self.mu_lo) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, norm: f64) -> f64 {
        HEIGHT - MARGIN - (norm - self.norm_lo) / (self.norm_hi - self.norm_lo) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn polyline(out: &mut String, frame: &Frame, b: &BranchDoc) {
    let style = if b.homogeneous {
        "fill=\"none\" stroke=\"#666666\" stroke-width=\"1.2\" stroke-dasharray=\"4 4\""
    } else {
        "fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.6\""
    };
    let mut points = String::new();
    for p in &b.points {
        let _ = write!(points, "{:.2},{:.2} ", frame.x(p.mu), frame.y(p.l2norm));
    }
    let _ = writeln!(out, "  <polyline {style} points=\"{}\"/>", points.trim_end());
}

fn markers(out: &mut String, frame: &Frame, b: &BranchDoc) {
    for e in &b.events {
        let Some(p) = b.points.get(e.point_index) else {
            continue;
        };
        let (x, y) = (frame.x(p.mu), frame.y(p.l2norm));
        match e.kind.as_str() {
            "fold" => {
                let _ = writeln!(
                    out,
                    "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.2\" fill=\"#c23b22\"/>"
                );
            }
            "branch-point" => {
                let _ = writeln!(
                    out,
                    "  <path d=\"M {x0:.2} {y0:.2} L {x1:.2} {y1:.2} M {x0:.2} {y1:.2} L {x1:.2} {y0:.2}\" stroke=\"#12752c\" stroke-width=\"1.8\"/>",
                    x0 = x - 4.0,
                    x1 = x + 4.0,
                    y0 = y - 4.0,
                    y1 = y + 4.0
                );
            }
            "label-stop" => {
                let _ = writeln!(
                    out,
                    "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"7\" height=\"7\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1.5\"/>",
                    x - 3.5,
                    y - 3.5
                );
            }
            _ => {}
        }
    }
}

fn axes(out: &mut String, frame: &Frame) {
    let _ = writeln!(
        out,
        "  <rect x=\"{m:.1}\" y=\"{m:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"none\" stroke=\"#000\" stroke-width=\"1\"/>",
        m = MARGIN,
        w = WIDTH - 2.0 * MARGIN,
        h = HEIGHT - 2.0 * MARGIN
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let mu = frame.mu_lo + f * (frame.mu_hi - frame.mu_lo);
        let x = frame.x(mu);
        let _ = writeln!(
            out,
            "  <line x1=\"{x:.1}\" y1=\"{y0:.1}\" x2=\"{x:.1}\" y2=\"{y1:.1}\" stroke=\"#000\"/>\n  <text x=\"{x:.1}\" y=\"{yt:.1}\" font-size=\"12\" text-anchor=\"middle\">{mu:.3}</text>",
            y0 = HEIGHT - MARGIN,
            y1 = HEIGHT - MARGIN + 5.0,
            yt = HEIGHT - MARGIN + 20.0
        );
        let norm = frame.norm_lo + f * (frame.norm_hi - frame.norm_lo);
        let y = frame.y(norm);
        let _ = writeln!(
            out,
            "  <line x1=\"{x0:.1}\" y1=\"{y:.1}\" x2=\"{x1:.1}\" y2=\"{y:.1}\" stroke=\"#000\"/>\n  <text x=\"{xt:.1}\" y=\"{yt:.1}\" font-size=\"12\" text-anchor=\"end\">{norm:.2}</text>",
            x0 = MARGIN - 5.0,
            x1 = MARGIN,
            xt = MARGIN - 8.0,
            yt = y + 4.0
        );
    }
    let _ = writeln!(
        out,
        "  <text x=\"{x:.1}\" y=\"{y:.1}\" font-size=\"13\" text-anchor=\"middle\">mu</text>",
        x = WIDTH / 2.0,
        y = HEIGHT - 14.0
    );
    let _ = writeln!(
        out,
        "  <text x=\"16\" y=\"{y:.1}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {y:.1})\">|U|</text>",
        y = HEIGHT / 2.0
    );
}

pub fn render(doc: &DiagramDoc) -> String {
    let frame = Frame::from_doc(doc);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(out, "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    axes(&mut out, &frame);
    // Homogeneous branches first so traced curves draw over them.
    for b in doc.branches.iter().filter(|b| b.homogeneous) {
        polyline(&mut out, &frame, b);
    }
    for b in doc.branches.iter().filter(|b| !b.homogeneous) {
        polyline(&mut out, &frame, b);
        markers(&mut out, &frame, b);
    }
    for b in doc.branches.iter().filter(|b| b.homogeneous) {
        markers(&mut out, &frame, b);
    }
    out.push_str("</svg>\n");
    out
}
