//! Multi-branch diagram assembly and classification.
//!
//! A diagram bundles the branches computed for one `(N, m, d)` together
//! with a summary: fold and branch-point counts, closure, the label
//! visiting order, and whether that order matches the expected connected
//! set for the coupling regime.
//!
//! Snake-type modes seed a single activated node at `μ = 0.5`, trace under
//! the flip reduction in both directions, and stop at the exceptional
//! configurations near `μ = 0, 1` where nothing further is established.
//! The all-to-all mode locates the two symmetry-breaking points on the
//! homogeneous branch, switches onto the emerging branch, and traces it
//! around to closure.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::continuation::{
    switch_branch, trace_bidirectional, trace_branch, Branch, BranchEvent, ContinuationError,
    ContinuationOptions, ContinuationPoint, EventKind, MuSide, SteadySystem, StopRule,
    SwitchError, STABILITY_THRESHOLD,
};
use crate::linalg::symmetric_eigenvalues;
use crate::model::{HomogeneousRoot, ModelError, RingModel};
use crate::patterns::{make_pattern, PatternError, PatternLabel};
use crate::reduction::{ReductionError, SymmetryReduction};

/// Two event locations within this distance in `μ` are one bifurcation.
const BIFURCATION_DEDUP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagramMode {
    /// Snaking branch expected to follow the sparse connected set.
    SparseSnake,
    /// The `(N, m) = (6, 2)` diagram with its three-node motif.
    Special62,
    /// The `(N, m) = (8, 3)` diagram with its alternating-pair motifs.
    Special83,
    /// Closed two-block curve for all-to-all coupling at block size `k`.
    AllToAll(usize),
    /// Snake-style run with no expected label sequence.
    GenericM,
}

impl fmt::Display for DiagramMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagramMode::SparseSnake => write!(f, "sparse-snake"),
            DiagramMode::Special62 => write!(f, "special-6-2"),
            DiagramMode::Special83 => write!(f, "special-8-3"),
            DiagramMode::AllToAll(k) => write!(f, "all-to-all:{k}"),
            DiagramMode::GenericM => write!(f, "generic-m"),
        }
    }
}

/// Which expected connected set the traced label sequence matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaMatch {
    Sparse,
    G62,
    G83,
    AllToAll(usize),
    None,
}

impl fmt::Display for GammaMatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaMatch::Sparse => write!(f, "sparse"),
            GammaMatch::G62 => write!(f, "gamma-6-2"),
            GammaMatch::G83 => write!(f, "gamma-8-3"),
            GammaMatch::AllToAll(k) => write!(f, "all-to-all:{k}"),
            GammaMatch::None => write!(f, "none"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct DiagramSummary {
    pub fold_count: usize,
    pub branch_point_count: usize,
    pub closed: bool,
    pub label_sequence: Vec<PatternLabel>,
    pub gamma_match: Option<GammaMatch>,
    pub note: Option<String>,
}

impl DiagramSummary {
    pub fn gamma(&self) -> GammaMatch {
        self.gamma_match.unwrap_or(GammaMatch::None)
    }
}

#[derive(Clone, Debug)]
pub struct Diagram {
    pub model: RingModel,
    pub mode: DiagramMode,
    pub branches: Vec<Branch>,
    pub summary: DiagramSummary,
}

impl Diagram {
    /// The first traced (non-homogeneous) branch.
    pub fn primary_branch(&self) -> &Branch {
        self.branches
            .iter()
            .find(|b| !b.homogeneous)
            .unwrap_or(&self.branches[0])
    }

    /// Unique branch-point locations across all branches, sorted in `μ`.
    pub fn branch_point_mus(&self) -> Vec<f64> {
        let mut mus: Vec<f64> = self
            .branches
            .iter()
            .flat_map(|b| b.events_of(EventKind::BranchPoint))
            .map(|e| e.mu)
            .collect();
        mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mus.dedup_by(|a, b| (*a - *b).abs() < BIFURCATION_DEDUP);
        mus
    }
}

#[derive(Clone, Debug)]
pub enum DiagramError {
    ModeMismatch {
        mode: DiagramMode,
        n: usize,
        m: usize,
    },
    SeedUnavailable(PatternError),
    Continuation(ContinuationError),
    BranchSwitch(SwitchError),
    Reduction(ReductionError),
    Model(ModelError),
    /// No symmetry-breaking point found on the homogeneous branch.
    BranchPointNotFound,
}

impl fmt::Display for DiagramError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagramError::ModeMismatch { mode, n, m } => {
                write!(f, "mode {mode} is inconsistent with N = {n}, m = {m}")
            }
            DiagramError::SeedUnavailable(e) => write!(f, "seed pattern unavailable: {e}"),
            DiagramError::Continuation(e) => write!(f, "continuation failed: {e}"),
            DiagramError::BranchSwitch(e) => write!(f, "branch switching failed: {e}"),
            DiagramError::Reduction(e) => write!(f, "{e}"),
            DiagramError::Model(e) => write!(f, "{e}"),
            DiagramError::BranchPointNotFound => {
                write!(f, "no branch point found on the homogeneous branch")
            }
        }
    }
}

impl core::error::Error for DiagramError {}

impl From<ContinuationError> for DiagramError {
    fn from(e: ContinuationError) -> Self {
        DiagramError::Continuation(e)
    }
}
impl From<PatternError> for DiagramError {
    fn from(e: PatternError) -> Self {
        DiagramError::SeedUnavailable(e)
    }
}
impl From<ReductionError> for DiagramError {
    fn from(e: ReductionError) -> Self {
        DiagramError::Reduction(e)
    }
}
impl From<ModelError> for DiagramError {
    fn from(e: ModelError) -> Self {
        DiagramError::Model(e)
    }
}

#[derive(Clone, Debug)]
pub struct DiagramOptions {
    /// Parameter value branches are seeded at.
    pub seed_mu: f64,
    pub continuation: ContinuationOptions,
    /// Sample count for the analytic homogeneous branch added to
    /// all-to-all diagrams.
    pub hom_samples: usize,
}

impl Default for DiagramOptions {
    fn default() -> Self {
        DiagramOptions {
            seed_mu: 0.5,
            continuation: ContinuationOptions::default(),
            hom_samples: 201,
        }
    }
}

/// Pick the natural mode for `(N, m)`: all-to-all when `m = ⌊N/2⌋`, the two
/// special almost-all-to-all cases, plain sparse snakes for `m ≤ 2`, and a
/// no-expectation run otherwise.
pub fn auto_mode(model: &RingModel) -> DiagramMode {
    let (n, m) = (model.node_count(), model.range());
    if model.is_all_to_all() {
        DiagramMode::AllToAll(1)
    } else if (n, m) == (6, 2) {
        DiagramMode::Special62
    } else if (n, m) == (8, 3) {
        DiagramMode::Special83
    } else if m <= 2 {
        DiagramMode::SparseSnake
    } else {
        DiagramMode::GenericM
    }
}

/// Expected visiting order of the sparse connected set.
pub fn sparse_sequence(n: usize) -> Vec<PatternLabel> {
    let half = n / 2;
    let mut seq = Vec::with_capacity(2 * half + 1);
    for k in 1..=half {
        seq.push(PatternLabel::V(k));
        seq.push(PatternLabel::U(k));
    }
    seq.push(PatternLabel::V(half + 1));
    seq
}

/// Expected visiting order for `(6, 2)`.
pub fn gamma_62_sequence() -> Vec<PatternLabel> {
    vec![
        PatternLabel::V(1),
        PatternLabel::U(1),
        PatternLabel::W23,
        PatternLabel::U(3),
        PatternLabel::V(4),
    ]
}

/// Expected visiting order for `(8, 3)`.
pub fn gamma_83_sequence() -> Vec<PatternLabel> {
    vec![
        PatternLabel::V(1),
        PatternLabel::U(1),
        PatternLabel::W24Minus,
        PatternLabel::W24Plus,
        PatternLabel::W3Minus,
        PatternLabel::U(4),
        PatternLabel::V(5),
    ]
}

/// Expected cycle of the all-to-all closed curve at block size `k`.
pub fn gamma_all_sequence(k: usize) -> Vec<PatternLabel> {
    vec![
        PatternLabel::AMinus(k),
        PatternLabel::APlus(k),
        PatternLabel::B(k),
        PatternLabel::D(k),
        PatternLabel::CPlus(k),
        PatternLabel::CMinus(k),
    ]
}

fn strip_transients(seq: &[PatternLabel]) -> Vec<PatternLabel> {
    seq.iter()
        .copied()
        .filter(|l| {
            !matches!(
                l,
                PatternLabel::HomMinus | PatternLabel::HomPlus | PatternLabel::Zero
            )
        })
        .collect()
}

fn is_subsequence(needle: &[PatternLabel], hay: &[PatternLabel]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// Whether the traced sequence visits the expected labels in order,
/// forward or backward.
pub fn visits_in_order(traced: &[PatternLabel], expected: &[PatternLabel]) -> bool {
    let seq = strip_transients(traced);
    let rev: Vec<PatternLabel> = expected.iter().rev().copied().collect();
    is_subsequence(expected, &seq) || is_subsequence(&rev, &seq)
}

/// Whether the traced sequence visits the expected cycle in order, in
/// either direction, starting anywhere on the cycle.
pub fn visits_cycle(traced: &[PatternLabel], cycle: &[PatternLabel]) -> bool {
    let seq = strip_transients(traced);
    let m = cycle.len();
    for rotation in 0..m {
        let fwd: Vec<PatternLabel> = (0..m).map(|i| cycle[(rotation + i) % m]).collect();
        let bwd: Vec<PatternLabel> = fwd.iter().rev().copied().collect();
        if is_subsequence(&fwd, &seq) || is_subsequence(&bwd, &seq) {
            return true;
        }
    }
    false
}

/// Compute the diagram for one `(N, m, d)` in the requested mode.
pub fn build_diagram(
    model: &RingModel,
    mode: DiagramMode,
    opts: &DiagramOptions,
) -> Result<Diagram, DiagramError> {
    let (n, m) = (model.node_count(), model.range());
    match mode {
        DiagramMode::Special62 if (n, m) != (6, 2) => {
            return Err(DiagramError::ModeMismatch { mode, n, m })
        }
        DiagramMode::Special83 if (n, m) != (8, 3) => {
            return Err(DiagramError::ModeMismatch { mode, n, m })
        }
        DiagramMode::AllToAll(k) if !model.is_all_to_all() || k < 1 || k > n / 2 => {
            return Err(DiagramError::ModeMismatch { mode, n, m })
        }
        _ => {}
    }
    match mode {
        DiagramMode::AllToAll(k) => build_all_to_all(model, k, opts),
        _ => build_snake(model, mode, opts),
    }
}

fn build_snake(
    model: &RingModel,
    mode: DiagramMode,
    opts: &DiagramOptions,
) -> Result<Diagram, DiagramError> {
    let n = model.node_count();
    let half = n / 2;
    let reduction = SymmetryReduction::kappa(model);
    let system = SteadySystem::new(model, reduction);

    let seed_full = make_pattern(PatternLabel::U(1), model, opts.seed_mu)?;
    let seed = reduction.project(&seed_full);

    let mut copts = opts.continuation.clone();
    if copts.stop_labels.is_empty() {
        copts.stop_labels = vec![
            StopRule {
                label: PatternLabel::V(1),
                side: MuSide::NearZero,
            },
            StopRule {
                label: PatternLabel::V(half + 1),
                side: MuSide::NearOne,
            },
        ];
    }

    let branch = trace_bidirectional(&system, &seed, opts.seed_mu, &copts)?;

    let label_sequence = branch.label_sequence();
    let gamma = match mode {
        DiagramMode::SparseSnake => {
            if visits_in_order(&label_sequence, &sparse_sequence(n)) {
                GammaMatch::Sparse
            } else {
                GammaMatch::None
            }
        }
        DiagramMode::Special62 => {
            if visits_in_order(&label_sequence, &gamma_62_sequence()) {
                GammaMatch::G62
            } else {
                GammaMatch::None
            }
        }
        DiagramMode::Special83 => {
            if visits_in_order(&label_sequence, &gamma_83_sequence()) {
                GammaMatch::G83
            } else {
                GammaMatch::None
            }
        }
        _ => GammaMatch::None,
    };

    let note = if mode == DiagramMode::GenericM && model.range() == half.saturating_sub(1) {
        Some(String::from(
            "almost-all-to-all coupling: diagram structure is case-by-case, no sequence asserted",
        ))
    } else {
        None
    };

    let fold_count = branch.fold_count();
    let bp_count = branch.events_of(EventKind::BranchPoint).len();
    let closed = !branch.events_of(EventKind::Closure).is_empty();

    Ok(Diagram {
        model: model.clone(),
        mode,
        branches: vec![branch],
        summary: DiagramSummary {
            fold_count,
            branch_point_count: bp_count,
            closed,
            label_sequence,
            gamma_match: Some(gamma),
            note,
        },
    })
}

fn build_all_to_all(
    model: &RingModel,
    k: usize,
    opts: &DiagramOptions,
) -> Result<Diagram, DiagramError> {
    let reduction = SymmetryReduction::two_block(model, k)?;
    let system = SteadySystem::new(model, reduction);
    let um = model.nonlinearity.roots(opts.seed_mu)?.minus;
    let hom_seed = [um, um];

    // Locate the two symmetry-breaking points on the homogeneous branch.
    let mut hom_opts = opts.continuation.clone();
    hom_opts.stop_labels = Vec::new();
    hom_opts.detect_closure = false;
    hom_opts.max_branch_points = Some(1);
    hom_opts.mu_window = (1e-6, opts.continuation.mu_window.1);

    let hom_down = trace_branch(&system, &hom_seed, opts.seed_mu, -1.0, &hom_opts)?;
    let hom_up = trace_branch(&system, &hom_seed, opts.seed_mu, 1.0, &hom_opts)?;
    let bp_left = hom_down
        .events_of(EventKind::BranchPoint)
        .first()
        .map(|e| (**e).clone())
        .ok_or(DiagramError::BranchPointNotFound)?;
    let bp_right = hom_up
        .events_of(EventKind::BranchPoint)
        .first()
        .map(|e| (**e).clone())
        .ok_or(DiagramError::BranchPointNotFound)?;

    // Switch onto the emerging branch at the left point; retry with a
    // smaller amplitude on sharp curvature. The switch direction must be
    // transverse to the homogeneous branch, whose tangent is known in
    // closed form: all blocks move together as the root of `f` moves.
    let bp_point = hom_down.points[bp_left.point_index].clone();
    let hom_tangent = {
        let h = 1e-6;
        let lo = model.nonlinearity.roots((bp_point.mu - h).clamp(0.0, 1.0))?.minus;
        let hi = model.nonlinearity.roots((bp_point.mu + h).clamp(0.0, 1.0))?.minus;
        let du = (hi - lo) / (2.0 * h);
        let norm = libm::sqrt(2.0 * du * du + 1.0);
        alloc::vec![du / norm, du / norm, 1.0 / norm]
    };
    let mut seed = None;
    for eps in [1e-4, 1e-5, 1e-3] {
        match switch_branch(
            &system,
            &bp_point.reduced,
            bp_point.mu,
            Some(&hom_tangent),
            1.0,
            eps,
            &opts.continuation.newton,
        ) {
            Ok(s) => {
                seed = Some(s);
                break;
            }
            Err(SwitchError::Solver(_)) | Err(SwitchError::FallbackToOriginalBranch) => continue,
            Err(e) => return Err(DiagramError::BranchSwitch(e)),
        }
    }
    let seed = seed.ok_or(DiagramError::BranchSwitch(SwitchError::FallbackToOriginalBranch))?;

    let mut curve_opts = opts.continuation.clone();
    curve_opts.stop_labels = Vec::new();
    curve_opts.detect_closure = true;
    curve_opts.max_branch_points = None;
    let curve = trace_branch(&system, &seed.u, seed.mu, 1.0, &curve_opts)?;

    // Analytic homogeneous branch for rendering, dotted, carrying the two
    // located symmetry-breaking events.
    let hom_branch = sample_homogeneous(model, opts.hom_samples, &[bp_left, bp_right])?;

    let label_sequence = curve.label_sequence();
    let gamma = if visits_cycle(&label_sequence, &gamma_all_sequence(k)) {
        GammaMatch::AllToAll(k)
    } else {
        GammaMatch::None
    };

    let fold_count = curve.fold_count();
    let closed = !curve.events_of(EventKind::Closure).is_empty();

    let diagram = Diagram {
        model: model.clone(),
        mode: DiagramMode::AllToAll(k),
        branches: vec![curve, hom_branch],
        summary: DiagramSummary {
            fold_count,
            branch_point_count: 0,
            closed,
            label_sequence,
            gamma_match: Some(gamma),
            note: None,
        },
    };
    let bp_count = diagram.branch_point_mus().len();
    let mut diagram = diagram;
    diagram.summary.branch_point_count = bp_count;
    Ok(diagram)
}

/// Analytic sample of the homogeneous unstable-root branch, with any
/// located branch-point events spliced in at their exact locations.
fn sample_homogeneous(
    model: &RingModel,
    samples: usize,
    events: &[BranchEvent],
) -> Result<Branch, DiagramError> {
    let n = model.node_count() as f64;
    let mut mus: Vec<f64> = (0..samples)
        .map(|i| 1e-4 + (1.0 - 2e-4) * i as f64 / (samples - 1) as f64)
        .collect();
    for e in events {
        mus.push(e.mu);
    }
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut branch = Branch {
        homogeneous: true,
        ..Branch::default()
    };
    for mu in mus {
        let u = model.homogeneous(mu, HomogeneousRoot::Minus)?;
        let fu = model.nonlinearity.eval_du(u[0], mu);
        let ratio = fu / u[0].max(1e-12);
        let tangent_mu = ratio / libm::sqrt(n + ratio * ratio);
        let stability = symmetric_eigenvalues(&model.jacobian(&u, mu))
            .iter()
            .filter(|&&e| e > STABILITY_THRESHOLD)
            .count();
        branch.points.push(ContinuationPoint {
            reduced: u.clone(),
            full: u,
            mu,
            tangent_mu,
            stability,
            label: Some(PatternLabel::HomMinus),
        });
    }
    for e in events {
        let idx = branch
            .points
            .iter()
            .position(|p| (p.mu - e.mu).abs() < 1e-15)
            .unwrap_or(0);
        branch.events.push(BranchEvent {
            kind: e.kind,
            mu: e.mu,
            point_index: idx,
            tangent_mu: e.tangent_mu,
        });
    }
    Ok(branch)
}
