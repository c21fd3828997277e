//! Anti-continuum pattern catalogue and state classification.
//!
//! At `d = 0` every steady state of the ring is a combinatorial placement of
//! the roots `{0, u₋(μ), u₊(μ)}` on the nodes. This module constructs the
//! named placements that organize the bifurcation diagrams, extends them to
//! full ring vectors by the flip symmetry or the two-block layout, and
//! classifies arbitrary states against the catalogue in max-norm.
//!
//! The label grammar used by the CLI and file formats is
//! `U:k, V:k, W23, W24+, W24-, W3-, A+:k, A-:k, B:k, C+:k, C-:k, D:k,
//! hom-, hom+, zero`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::model::RingModel;

/// A named anti-continuum pattern.
///
/// `U(k)` is a symmetric plateau of activated nodes (`2k-1` nodes at
/// `u₊` centred on node 1 after flip extension); `V(k)` is the same
/// plateau with the outermost pair resting at the unstable root. The `W`
/// variants are the extra motifs that appear for `(N, m) = (6, 2)` and
/// `(8, 3)`. `A±, B, C±, D` are the two-block states of the all-to-all
/// regime: first `k` nodes at one root, remaining `N-k` at another.
///
/// The declaration order is the tie-break order used by [`classify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PatternLabel {
    U(usize),
    V(usize),
    W23,
    W24Plus,
    W24Minus,
    W3Minus,
    APlus(usize),
    AMinus(usize),
    B(usize),
    CPlus(usize),
    CMinus(usize),
    D(usize),
    HomMinus,
    HomPlus,
    Zero,
}

impl PatternLabel {
    /// Position in the family declaration order, for tie-breaking.
    pub fn family_rank(&self) -> usize {
        match self {
            PatternLabel::U(_) => 0,
            PatternLabel::V(_) => 1,
            PatternLabel::W23 => 2,
            PatternLabel::W24Plus => 3,
            PatternLabel::W24Minus => 4,
            PatternLabel::W3Minus => 5,
            PatternLabel::APlus(_) => 6,
            PatternLabel::AMinus(_) => 7,
            PatternLabel::B(_) => 8,
            PatternLabel::CPlus(_) => 9,
            PatternLabel::CMinus(_) => 10,
            PatternLabel::D(_) => 11,
            PatternLabel::HomMinus => 12,
            PatternLabel::HomPlus => 13,
            PatternLabel::Zero => 14,
        }
    }

    pub fn block_size(&self) -> Option<usize> {
        match self {
            PatternLabel::U(k)
            | PatternLabel::V(k)
            | PatternLabel::APlus(k)
            | PatternLabel::AMinus(k)
            | PatternLabel::B(k)
            | PatternLabel::CPlus(k)
            | PatternLabel::CMinus(k)
            | PatternLabel::D(k) => Some(*k),
            _ => None,
        }
    }
}

impl fmt::Display for PatternLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternLabel::U(k) => write!(f, "U:{k}"),
            PatternLabel::V(k) => write!(f, "V:{k}"),
            PatternLabel::W23 => write!(f, "W23"),
            PatternLabel::W24Plus => write!(f, "W24+"),
            PatternLabel::W24Minus => write!(f, "W24-"),
            PatternLabel::W3Minus => write!(f, "W3-"),
            PatternLabel::APlus(k) => write!(f, "A+:{k}"),
            PatternLabel::AMinus(k) => write!(f, "A-:{k}"),
            PatternLabel::B(k) => write!(f, "B:{k}"),
            PatternLabel::CPlus(k) => write!(f, "C+:{k}"),
            PatternLabel::CMinus(k) => write!(f, "C-:{k}"),
            PatternLabel::D(k) => write!(f, "D:{k}"),
            PatternLabel::HomMinus => write!(f, "hom-"),
            PatternLabel::HomPlus => write!(f, "hom+"),
            PatternLabel::Zero => write!(f, "zero"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseLabelError {
    pub input: String,
}

impl fmt::Display for ParseLabelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unrecognized pattern label '{}'", self.input)
    }
}

impl core::error::Error for ParseLabelError {}

impl FromStr for PatternLabel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseLabelError {
            input: String::from(s),
        };
        match s {
            "W23" => return Ok(PatternLabel::W23),
            "W24+" => return Ok(PatternLabel::W24Plus),
            "W24-" => return Ok(PatternLabel::W24Minus),
            "W3-" => return Ok(PatternLabel::W3Minus),
            "hom-" => return Ok(PatternLabel::HomMinus),
            "hom+" => return Ok(PatternLabel::HomPlus),
            "zero" => return Ok(PatternLabel::Zero),
            _ => {}
        }
        let (head, tail) = s.split_once(':').ok_or_else(err)?;
        let k: usize = tail.parse().map_err(|_| err())?;
        match head {
            "U" => Ok(PatternLabel::U(k)),
            "V" => Ok(PatternLabel::V(k)),
            "A+" => Ok(PatternLabel::APlus(k)),
            "A-" => Ok(PatternLabel::AMinus(k)),
            "B" => Ok(PatternLabel::B(k)),
            "C+" => Ok(PatternLabel::CPlus(k)),
            "C-" => Ok(PatternLabel::CMinus(k)),
            "D" => Ok(PatternLabel::D(k)),
            _ => Err(err()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PatternError {
    /// Family or block size is not valid for this `(N, m)`.
    InvalidLabel {
        label: PatternLabel,
        n: usize,
        m: usize,
    },
    /// The nonlinearity has no root data at this `μ`.
    RootsUnavailable { mu: f64 },
}

impl fmt::Display for PatternError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternError::InvalidLabel { label, n, m } => {
                write!(f, "label {label} is not valid for N = {n}, m = {m}")
            }
            PatternError::RootsUnavailable { mu } => {
                write!(f, "pattern roots unavailable at mu = {mu}")
            }
        }
    }
}

impl core::error::Error for PatternError {}

/// Number of representative indices of the flip-invariant subspace,
/// `⌊N/2⌋ + 1`.
pub fn representative_count(n: usize) -> usize {
    n / 2 + 1
}

/// Extend flip-invariant representatives to the full ring:
/// entries past the representatives mirror back onto them.
pub fn flip_extend(reps: &[f64], n: usize) -> Vec<f64> {
    let r = n / 2 + 1;
    assert_eq!(reps.len(), r, "representative length mismatch");
    let mut full = vec![0.0; n];
    full[..r].copy_from_slice(reps);
    for j in r..n {
        full[j] = reps[n - j];
    }
    full
}

fn valid_block_range(label: &PatternLabel, n: usize) -> bool {
    let half = n / 2;
    match label {
        PatternLabel::U(k) | PatternLabel::V(k) => *k >= 1 && *k <= half + 1,
        PatternLabel::APlus(k)
        | PatternLabel::AMinus(k)
        | PatternLabel::B(k)
        | PatternLabel::CPlus(k)
        | PatternLabel::CMinus(k)
        | PatternLabel::D(k) => *k >= 1 && *k <= half,
        _ => true,
    }
}

/// Whether the label names a pattern of this model's `(N, m)`.
pub fn label_valid(label: &PatternLabel, model: &RingModel) -> bool {
    let (n, m) = (model.node_count(), model.range());
    if !valid_block_range(label, n) {
        return false;
    }
    match label {
        PatternLabel::W23 => (n, m) == (6, 2),
        PatternLabel::W24Plus | PatternLabel::W24Minus | PatternLabel::W3Minus => (n, m) == (8, 3),
        PatternLabel::APlus(_)
        | PatternLabel::AMinus(_)
        | PatternLabel::B(_)
        | PatternLabel::CPlus(_)
        | PatternLabel::CMinus(_)
        | PatternLabel::D(_) => model.is_all_to_all(),
        _ => true,
    }
}

/// Build the full `N`-vector of an anti-continuum pattern at coupling zero.
pub fn make_pattern(
    label: PatternLabel,
    model: &RingModel,
    mu: f64,
) -> Result<Vec<f64>, PatternError> {
    if !label_valid(&label, model) {
        return Err(PatternError::InvalidLabel {
            label,
            n: model.node_count(),
            m: model.range(),
        });
    }
    let n = model.node_count();
    let roots = model
        .nonlinearity
        .roots(mu)
        .map_err(|_| PatternError::RootsUnavailable { mu })?;
    let (um, up) = (roots.minus, roots.plus);
    let r = n / 2 + 1;

    let two_block = |k: usize, first: f64, second: f64| -> Vec<f64> {
        let mut v = vec![second; n];
        for slot in v.iter_mut().take(k) {
            *slot = first;
        }
        v
    };

    let full = match label {
        PatternLabel::U(k) => {
            let reps: Vec<f64> = (0..r).map(|i| if i < k { up } else { 0.0 }).collect();
            flip_extend(&reps, n)
        }
        PatternLabel::V(k) => {
            let reps: Vec<f64> = (0..r)
                .map(|i| {
                    if i + 1 < k {
                        up
                    } else if i + 1 == k {
                        um
                    } else {
                        0.0
                    }
                })
                .collect();
            flip_extend(&reps, n)
        }
        PatternLabel::W23 => flip_extend(&[up, um, um, 0.0], n),
        PatternLabel::W24Plus => flip_extend(&[up, up, 0.0, up, 0.0], n),
        PatternLabel::W24Minus => flip_extend(&[up, um, 0.0, um, 0.0], n),
        PatternLabel::W3Minus => flip_extend(&[up, up, um, up, 0.0], n),
        PatternLabel::APlus(k) => two_block(k, up, 0.0),
        PatternLabel::AMinus(k) => two_block(k, um, 0.0),
        PatternLabel::B(k) => two_block(k, up, um),
        PatternLabel::CPlus(k) => two_block(k, 0.0, up),
        PatternLabel::CMinus(k) => two_block(k, 0.0, um),
        PatternLabel::D(k) => two_block(k, um, up),
        PatternLabel::HomMinus => vec![um; n],
        PatternLabel::HomPlus => vec![up; n],
        PatternLabel::Zero => vec![0.0; n],
    };
    Ok(full)
}

/// Default classification tolerance at coupling `d`: continued solutions
/// deviate like `d^{2/3}`–`d` from the anti-continuum patterns near folds,
/// so `d^{1/3}` dominates the deviation at small `d`.
pub fn default_classify_tol(d: f64) -> f64 {
    3.0 * libm::cbrt(d.abs()).max(1e-6)
}

/// Candidate labels classification compares against. The two-block family
/// is only meaningful under all-to-all coupling; the flip-symmetric
/// families are used otherwise.
pub fn candidate_labels(model: &RingModel) -> Vec<PatternLabel> {
    let n = model.node_count();
    let half = n / 2;
    let mut out = Vec::new();
    if model.is_all_to_all() {
        for k in 1..=half {
            out.push(PatternLabel::APlus(k));
            out.push(PatternLabel::AMinus(k));
            out.push(PatternLabel::B(k));
            out.push(PatternLabel::CPlus(k));
            out.push(PatternLabel::CMinus(k));
            out.push(PatternLabel::D(k));
        }
    } else {
        for k in 1..=(half + 1) {
            out.push(PatternLabel::U(k));
            out.push(PatternLabel::V(k));
        }
        if (n, model.range()) == (6, 2) {
            out.push(PatternLabel::W23);
        }
        if (n, model.range()) == (8, 3) {
            out.push(PatternLabel::W24Plus);
            out.push(PatternLabel::W24Minus);
            out.push(PatternLabel::W3Minus);
        }
    }
    out.push(PatternLabel::HomMinus);
    out.push(PatternLabel::HomPlus);
    out.push(PatternLabel::Zero);
    out
}

/// Label a state by the nearest catalogue pattern in max-norm, or `None`
/// when nothing is within `tol`. Ties break by smallest distance, then by
/// family declaration order.
pub fn classify(u: &[f64], model: &RingModel, mu: f64, tol: f64) -> Option<PatternLabel> {
    let mu_eff = mu.clamp(0.0, 1.0);
    if model.nonlinearity.roots(mu_eff).is_err() {
        return None;
    }
    let mut best: Option<(f64, PatternLabel)> = None;
    for label in candidate_labels(model) {
        let Ok(pattern) = make_pattern(label, model, mu_eff) else {
            continue;
        };
        let dist = u
            .iter()
            .zip(&pattern)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        if dist > tol {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bd, bl)) => {
                dist < *bd || (dist == *bd && label.family_rank() < bl.family_rank())
            }
        };
        if better {
            best = Some((dist, label));
        }
    }
    best.map(|(_, l)| l)
}

/// Render a sequence of labels like `V:1 -> U:1 -> W23`.
pub fn format_label_sequence(labels: &[PatternLabel]) -> String {
    let mut out = String::new();
    for (i, l) in labels.iter().enumerate() {
        if i > 0 {
            out.push_str(" -> ");
        }
        out.push_str(&format!("{l}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RingModel;

    fn cq(n: usize, m: usize, d: f64) -> RingModel {
        RingModel::cubic_quintic(n, m, d).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
    }

    #[test]
    fn label_grammar_round_trips() {
        let labels = [
            "U:1", "V:4", "W23", "W24+", "W24-", "W3-", "A+:2", "A-:1", "B:3", "C+:1", "C-:2",
            "D:3", "hom-", "hom+", "zero",
        ];
        for s in labels {
            let l: PatternLabel = s.parse().unwrap();
            assert_eq!(format!("{l}"), s);
        }
        assert!("U".parse::<PatternLabel>().is_err());
        assert!("Q:3".parse::<PatternLabel>().is_err());
        assert!("U:x".parse::<PatternLabel>().is_err());
    }

    #[test]
    fn uniform_plateau_at_max_block() {
        let model = cq(6, 1, 0.0);
        let up = model.nonlinearity.roots(0.5).unwrap().plus;
        let u = make_pattern(PatternLabel::U(4), &model, 0.5).unwrap();
        assert_eq!(u, vec![up; 6]);
    }

    #[test]
    fn v2_at_mu_zero_equals_u1() {
        let model = cq(6, 1, 0.0);
        let a = make_pattern(PatternLabel::V(2), &model, 0.0).unwrap();
        let b = make_pattern(PatternLabel::U(1), &model, 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn w23_flip_extension() {
        let model = cq(6, 2, 0.0);
        let r = model.nonlinearity.roots(0.5).unwrap();
        let u = make_pattern(PatternLabel::W23, &model, 0.5).unwrap();
        assert_eq!(u, vec![r.plus, r.minus, r.minus, 0.0, r.minus, r.minus]);
    }

    #[test]
    fn flip_symmetric_families_are_flip_invariant() {
        let model = cq(8, 3, 0.0);
        let labels = [
            PatternLabel::U(2),
            PatternLabel::V(3),
            PatternLabel::W24Plus,
            PatternLabel::W24Minus,
            PatternLabel::W3Minus,
        ];
        for label in labels {
            let u = make_pattern(label, &model, 0.3).unwrap();
            let flipped: Vec<f64> = (0..8).map(|i| u[(8 - i) % 8]).collect();
            assert_eq!(u, flipped, "{label}");
        }
    }

    #[test]
    fn patterns_solve_uncoupled_system_exactly() {
        for (n, m) in [(6, 1), (6, 2), (8, 3), (9, 2), (6, 3), (20, 10)] {
            let model = cq(n, m, 0.0);
            for label in candidate_labels(&model) {
                for i in 1..10 {
                    let mu = i as f64 / 10.0;
                    let u = make_pattern(label, &model, mu).unwrap();
                    let res = model.residual(&u, mu);
                    for v in res {
                        assert!(v.abs() < 1e-12, "{label} at mu={mu}: residual {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_identities_sparse() {
        let model = cq(6, 1, 0.0);
        for k in 2..=4 {
            let a = make_pattern(PatternLabel::U(k - 1), &model, 0.0).unwrap();
            let b = make_pattern(PatternLabel::V(k), &model, 0.0).unwrap();
            assert!(max_diff(&a, &b) < 1e-14);
        }
        for k in 1..=3 {
            let a = make_pattern(PatternLabel::U(k), &model, 1.0).unwrap();
            let b = make_pattern(PatternLabel::V(k), &model, 1.0).unwrap();
            assert!(max_diff(&a, &b) < 1e-14);
        }
    }

    #[test]
    fn boundary_identities_all_to_all() {
        let model = cq(6, 3, 0.0);
        for k in 1..=3 {
            let pairs_mu0 = [
                (PatternLabel::AMinus(k), PatternLabel::CMinus(k)),
                (PatternLabel::APlus(k), PatternLabel::B(k)),
                (PatternLabel::CPlus(k), PatternLabel::D(k)),
            ];
            for (l, r) in pairs_mu0 {
                let a = make_pattern(l, &model, 0.0).unwrap();
                let b = make_pattern(r, &model, 0.0).unwrap();
                assert!(max_diff(&a, &b) < 1e-14, "{l} vs {r} at mu=0");
            }
            let pairs_mu1 = [
                (PatternLabel::AMinus(k), PatternLabel::APlus(k)),
                (PatternLabel::B(k), PatternLabel::D(k)),
                (PatternLabel::CMinus(k), PatternLabel::CPlus(k)),
            ];
            for (l, r) in pairs_mu1 {
                let a = make_pattern(l, &model, 1.0).unwrap();
                let b = make_pattern(r, &model, 1.0).unwrap();
                assert!(max_diff(&a, &b) < 1e-14, "{l} vs {r} at mu=1");
            }
        }
    }

    #[test]
    fn boundary_identities_eight_three() {
        let model = cq(8, 3, 0.0);
        let cases = [
            (PatternLabel::W24Minus, PatternLabel::U(1), 0.0),
            (PatternLabel::W24Plus, PatternLabel::W24Minus, 1.0),
            (PatternLabel::W3Minus, PatternLabel::W24Plus, 0.0),
            (PatternLabel::W3Minus, PatternLabel::U(4), 1.0),
        ];
        for (l, r, mu) in cases {
            let a = make_pattern(l, &model, mu).unwrap();
            let b = make_pattern(r, &model, mu).unwrap();
            assert!(max_diff(&a, &b) < 1e-14, "{l} vs {r} at mu={mu}");
        }
    }

    #[test]
    fn invalid_labels_rejected() {
        let model = cq(6, 1, 0.0);
        assert!(make_pattern(PatternLabel::U(9), &model, 0.5).is_err());
        assert!(make_pattern(PatternLabel::W23, &model, 0.5).is_err());
        assert!(make_pattern(PatternLabel::APlus(1), &model, 0.5).is_err());
        let m62 = cq(6, 2, 0.0);
        assert!(make_pattern(PatternLabel::W23, &m62, 0.5).is_ok());
        assert!(make_pattern(PatternLabel::W24Plus, &m62, 0.5).is_err());
    }

    #[test]
    fn classify_exact_and_homogeneous() {
        let model = cq(8, 2, 0.0);
        let u = make_pattern(PatternLabel::U(2), &model, 0.4).unwrap();
        assert_eq!(
            classify(&u, &model, 0.4, 1e-6),
            Some(PatternLabel::U(2))
        );
        let um = model.nonlinearity.roots(0.3).unwrap().minus;
        let hom = vec![um; 8];
        assert_eq!(
            classify(&hom, &model, 0.3, 1e-6),
            Some(PatternLabel::HomMinus)
        );
        let far = vec![5.0; 8];
        assert_eq!(classify(&far, &model, 0.3, 1e-6), None);
    }

    #[test]
    fn classify_ties_break_by_family_order() {
        // At mu = 1 the plateau and its interface variant coincide; the
        // plateau family wins the tie.
        let model = cq(6, 1, 0.0);
        let u = make_pattern(PatternLabel::U(2), &model, 1.0).unwrap();
        assert_eq!(classify(&u, &model, 1.0, 1e-6), Some(PatternLabel::U(2)));
    }

    #[test]
    fn classify_all_to_all_uses_two_block_labels() {
        let model = cq(6, 3, 0.0);
        let u = make_pattern(PatternLabel::B(2), &model, 0.5).unwrap();
        assert_eq!(classify(&u, &model, 0.5, 1e-6), Some(PatternLabel::B(2)));
    }

    #[test]
    fn default_tolerance_floor() {
        assert!((default_classify_tol(0.0) - 3e-6).abs() < 1e-18);
        assert!((default_classify_tol(1e-3) - 0.3).abs() < 1e-12);
    }
}
