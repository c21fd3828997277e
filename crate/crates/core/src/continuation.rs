//! Pseudo-arclength continuation with event detection.
//!
//! Branches of `F(u, μ) = 0` are traced by a tangent predictor and a
//! bordered Newton corrector orthogonal to the tangent. Along the way the
//! driver watches two scalar diagnostics: the `μ`-component of the unit
//! tangent (its zeros are folds) and the determinant of the system Jacobian
//! (sign changes without a co-located fold are branch points). Both are
//! localized by bisection with full corrector solves at each trial point.
//!
//! Tracing stops on window exit, on classification hitting a configured
//! stop label outside `[2δ*, 1-2δ*]` (the neighbourhoods where nothing is
//! proven about the diagram), on branch closure, or on the step budget.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{euclidean_norm, max_norm, symmetric_eigenvalues, Lu, Mat};
use crate::model::RingModel;
use crate::patterns::{self, PatternLabel};
use crate::reduction::SymmetryReduction;
use crate::solver::{bordered_solve, newton_solve, NewtonOptions, ParametricSystem, SolverError};

/// Eigenvalues with real part above this count as unstable.
pub const STABILITY_THRESHOLD: f64 = 1e-10;

/// States whose entries spread less than this around their mean count as
/// near-homogeneous; steps are capped there because the Jacobian has a
/// cluster of near-zero eigenvalues.
const HOMOGENEOUS_SPREAD: f64 = 0.05;

/// Two located events closer than this in `μ` are the same event.
const EVENT_COLOCATION: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum ContinuationError {
    SeedNotConverged(SolverError),
    /// Step size collapsed below `ds_min` without an accepted step.
    StepCollapse { mu: f64 },
    /// The extended Jacobian is rank-deficient (signals a branch point).
    SingularJacobian,
    /// Bisection was asked to localize an event with no sign change.
    NoSignChange,
    Solver(SolverError),
}

impl fmt::Display for ContinuationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContinuationError::SeedNotConverged(e) => write!(f, "seed did not converge: {e}"),
            ContinuationError::StepCollapse { mu } => {
                write!(f, "step size collapsed near mu = {mu}")
            }
            ContinuationError::SingularJacobian => write!(f, "extended Jacobian rank-deficient"),
            ContinuationError::NoSignChange => write!(f, "no sign change in bracketing segment"),
            ContinuationError::Solver(e) => write!(f, "solver failure: {e}"),
        }
    }
}

impl core::error::Error for ContinuationError {}

impl From<SolverError> for ContinuationError {
    fn from(e: SolverError) -> Self {
        ContinuationError::Solver(e)
    }
}

/// Which end of the parameter interval an exceptional configuration
/// belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MuSide {
    NearZero,
    NearOne,
}

/// Terminate the trace when classification returns `label` while `μ` is in
/// the guarded neighbourhood on the given side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopRule {
    pub label: PatternLabel,
    pub side: MuSide,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationOptions {
    pub ds_init: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    /// Allowed `μ` range; slight excursions outside `[0, 1]` let the
    /// corrector round fold noses.
    pub mu_window: (f64, f64),
    /// Exceptional-set guards: labels that terminate the trace once `μ`
    /// leaves `[2δ*, 1-2δ*]` on their side.
    pub stop_labels: Vec<StopRule>,
    /// Half-width parameter of the exceptional-set guard.
    pub delta_star: f64,
    /// Localization tolerance for events, in `μ`.
    pub event_tol: f64,
    pub newton: NewtonOptions,
    /// Stop after this many located branch points.
    pub max_branch_points: Option<usize>,
    /// Detect return to the starting point (closed curves).
    pub detect_closure: bool,
    pub closure_tol: f64,
    /// Largest admissible angle between consecutive unit tangents.
    pub max_tangent_angle_deg: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            ds_init: 1e-3,
            ds_min: 1e-8,
            ds_max: 1e-2,
            max_steps: 50_000,
            mu_window: (-0.05, 1.05),
            stop_labels: Vec::new(),
            delta_star: 0.02,
            event_tol: 1e-9,
            newton: NewtonOptions::default(),
            max_branch_points: None,
            detect_closure: false,
            closure_tol: 1e-6,
            max_tangent_angle_deg: 30.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Fold,
    BranchPoint,
    WindowExit,
    LabelStop,
    Closure,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::Fold => "fold",
            EventKind::BranchPoint => "branch-point",
            EventKind::WindowExit => "window-exit",
            EventKind::LabelStop => "label-stop",
            EventKind::Closure => "closure",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchEvent {
    pub kind: EventKind,
    pub mu: f64,
    pub point_index: usize,
    /// Signed `μ`-component of the unit tangent at the event.
    pub tangent_mu: f64,
}

/// Which kind of `μ`-extremum a fold is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FoldSide {
    MuMin,
    MuMax,
}

/// A fold with the modal labels of the two arcs it connects.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoldPair {
    pub mu: f64,
    pub before: Option<PatternLabel>,
    pub after: Option<PatternLabel>,
}

impl FoldPair {
    pub fn joins(&self, x: PatternLabel, y: PatternLabel) -> bool {
        (self.before == Some(x) && self.after == Some(y))
            || (self.before == Some(y) && self.after == Some(x))
    }
}

/// Label carrying the largest share of the arc by length. Step control
/// packs points densely near corners, so a plain point count would be
/// dominated by whatever transient label rules there.
fn mode_label(points: &[ContinuationPoint]) -> Option<PatternLabel> {
    let mut weights: Vec<(PatternLabel, f64)> = Vec::new();
    let mut add = |label: Option<PatternLabel>, w: f64| {
        if let Some(l) = label {
            match weights.iter_mut().find(|(c, _)| *c == l) {
                Some((_, acc)) => *acc += w,
                None => weights.push((l, w)),
            }
        }
    };
    for pair in points.windows(2) {
        let mut d2 = (pair[1].mu - pair[0].mu) * (pair[1].mu - pair[0].mu);
        for (a, b) in pair[0].reduced.iter().zip(&pair[1].reduced) {
            d2 += (a - b) * (a - b);
        }
        add(pair[0].label, libm::sqrt(d2));
    }
    if let Some(last) = points.last() {
        add(last.label, 1e-12);
    }
    weights
        .into_iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite weights"))
        .map(|(l, _)| l)
}

#[derive(Clone, Debug)]
pub struct ContinuationPoint {
    /// Coordinates in the (possibly reduced) continuation space.
    pub reduced: Vec<f64>,
    /// Embedded full ring state.
    pub full: Vec<f64>,
    pub mu: f64,
    /// `μ`-component of the unit tangent, oriented along the traversal.
    pub tangent_mu: f64,
    /// Unstable eigenvalue count of the full Jacobian.
    pub stability: usize,
    pub label: Option<PatternLabel>,
}

impl ContinuationPoint {
    /// The full-space state this point represents, at coupling `d`.
    pub fn state_point(&self, d: f64) -> crate::model::StatePoint {
        crate::model::StatePoint::new(self.full.clone(), self.mu, d)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Branch {
    pub points: Vec<ContinuationPoint>,
    pub events: Vec<BranchEvent>,
    /// Marks analytically sampled homogeneous branches in diagrams.
    pub homogeneous: bool,
}

impl Branch {
    /// Indices where the classification changes, with their labels.
    pub fn label_changes(&self) -> Vec<(usize, PatternLabel)> {
        let mut out = Vec::new();
        let mut last: Option<PatternLabel> = None;
        for (i, p) in self.points.iter().enumerate() {
            if let Some(l) = p.label {
                if last != Some(l) {
                    out.push((i, l));
                    last = Some(l);
                }
            }
        }
        out
    }

    /// Deduplicated label visiting order.
    pub fn label_sequence(&self) -> Vec<PatternLabel> {
        self.label_changes().into_iter().map(|(_, l)| l).collect()
    }

    pub fn events_of(&self, kind: EventKind) -> Vec<&BranchEvent> {
        self.events.iter().filter(|e| e.kind == kind).collect()
    }

    pub fn fold_count(&self) -> usize {
        self.events_of(EventKind::Fold).len()
    }

    /// Most common label on each arc between consecutive fold events
    /// (`fold_count + 1` arcs). Arcs are the natural snake segments, and
    /// their modal label is robust against classification jitter right at
    /// the folds.
    pub fn arc_labels(&self) -> Vec<Option<PatternLabel>> {
        let mut boundaries: Vec<usize> = self
            .events_of(EventKind::Fold)
            .iter()
            .map(|e| e.point_index)
            .collect();
        boundaries.sort_unstable();
        let mut arcs = Vec::with_capacity(boundaries.len() + 1);
        let mut start = 0usize;
        for &b in boundaries.iter().chain(core::iter::once(&self.points.len())) {
            let end = b.min(self.points.len());
            arcs.push(mode_label(&self.points[start..end]));
            start = end;
        }
        arcs
    }

    /// Each fold event together with the modal labels of the two arcs it
    /// joins, in traversal order.
    pub fn fold_pairs(&self) -> Vec<FoldPair> {
        let mut folds: Vec<&BranchEvent> = self.events_of(EventKind::Fold);
        folds.sort_by_key(|e| e.point_index);
        let arcs = self.arc_labels();
        folds
            .iter()
            .enumerate()
            .map(|(i, e)| FoldPair {
                mu: e.mu,
                before: arcs.get(i).copied().flatten(),
                after: arcs.get(i + 1).copied().flatten(),
            })
            .collect()
    }

    /// Fold locations with the direction of the `μ`-extremum: a fold where
    /// the branch turns from decreasing to increasing `μ` is a local
    /// minimum (a left-type fold), the opposite turn is a maximum.
    pub fn fold_sides(&self) -> Vec<(f64, FoldSide)> {
        self.events_of(EventKind::Fold)
            .into_iter()
            .map(|e| {
                let after = self
                    .points
                    .get(e.point_index + 1)
                    .map(|p| p.tangent_mu)
                    .unwrap_or(0.0);
                let side = if after > 0.0 {
                    FoldSide::MuMin
                } else {
                    FoldSide::MuMax
                };
                (e.mu, side)
            })
            .collect()
    }

    /// Reverse traversal order, remapping event indices and flipping the
    /// stored tangent orientation.
    pub fn reversed(mut self) -> Branch {
        let n = self.points.len();
        self.points.reverse();
        for p in &mut self.points {
            p.tangent_mu = -p.tangent_mu;
        }
        for e in &mut self.events {
            e.point_index = n - 1 - e.point_index;
            e.tangent_mu = -e.tangent_mu;
        }
        self.events.reverse();
        self
    }

    /// Append `other` (sharing its first point with our last) in place.
    pub fn extend_with(&mut self, other: Branch) {
        let offset = self.points.len();
        let mut iter = other.points.into_iter();
        let _shared_seed = iter.next();
        self.points.extend(iter);
        for mut e in other.events {
            // Index 0 of `other` is the shared seed, which we dropped.
            e.point_index = offset + e.point_index.saturating_sub(1);
            self.events.push(e);
        }
    }
}

/// A ring model viewed through a symmetry reduction, ready for tracing.
pub struct SteadySystem<'a> {
    pub model: &'a RingModel,
    pub reduction: SymmetryReduction,
    pub classify_tol: f64,
}

impl<'a> SteadySystem<'a> {
    pub fn new(model: &'a RingModel, reduction: SymmetryReduction) -> Self {
        SteadySystem {
            model,
            reduction,
            classify_tol: patterns::default_classify_tol(model.d),
        }
    }

    pub fn with_classify_tol(mut self, tol: f64) -> Self {
        self.classify_tol = tol;
        self
    }
}

impl ParametricSystem for SteadySystem<'_> {
    fn dim(&self) -> usize {
        self.reduction.reduced_dim()
    }
    fn residual_into(&self, u: &[f64], mu: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.reduction.reduced_residual(self.model, u, mu));
    }
    fn jacobian(&self, u: &[f64], mu: f64) -> Mat {
        self.reduction.reduced_jacobian(self.model, u, mu)
    }
    fn mu_derivative_into(&self, u: &[f64], mu: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.reduction.reduced_residual_mu(self.model, u, mu));
    }
}

/// What the tracer needs beyond the square system: embedding back to the
/// ring, classification, and stability counting.
pub trait ContinuableSystem: ParametricSystem {
    fn embed_full(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }
    fn classify_state(&self, full: &[f64], mu: f64) -> Option<PatternLabel> {
        let _ = (full, mu);
        None
    }
    fn unstable_count(&self, full: &[f64], mu: f64) -> usize;
    /// Largest step that keeps the corrector inside the basin of the
    /// current solution curve. Distinct steady states sit roughly one root
    /// separation of `f(·, μ)` apart, so steps must stay well below that.
    fn step_scale(&self, u: &[f64], mu: f64) -> f64 {
        let _ = (u, mu);
        f64::INFINITY
    }
}

impl ContinuableSystem for SteadySystem<'_> {
    fn embed_full(&self, u: &[f64]) -> Vec<f64> {
        self.reduction.embed(u)
    }
    fn classify_state(&self, full: &[f64], mu: f64) -> Option<PatternLabel> {
        patterns::classify(full, self.model, mu, self.classify_tol)
    }
    fn unstable_count(&self, full: &[f64], mu: f64) -> usize {
        stability_index(self.model, full, mu)
    }
    fn step_scale(&self, _u: &[f64], mu: f64) -> f64 {
        match self.model.nonlinearity.roots(mu.clamp(0.0, 1.0)) {
            Ok(r) => {
                let lower_gap = r.minus.max(1e-6);
                let upper_gap = (r.plus - r.minus).max(1e-6);
                (0.25 * lower_gap.min(upper_gap)).max(1e-5)
            }
            // Outside the bistable window; roam cautiously.
            Err(_) => 1e-3,
        }
    }
}

/// Count of full-Jacobian eigenvalues with real part above
/// [`STABILITY_THRESHOLD`] for the steady state `u` of `u̇ = F(u, μ)`.
///
/// The full Jacobian is symmetric (symmetric coupling plus a diagonal), so
/// the spectrum is real. Stability is always judged in the full space even
/// when continuation runs reduced: symmetry-breaking instabilities live
/// outside the fixed-point subspace.
pub fn stability_index(model: &RingModel, u: &[f64], mu: f64) -> usize {
    let eig = symmetric_eigenvalues(&model.jacobian(u, mu));
    eig.iter().filter(|&&e| e > STABILITY_THRESHOLD).count()
}

fn spread(full: &[f64]) -> f64 {
    let mean = full.iter().sum::<f64>() / full.len() as f64;
    full.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()))
}

/// Unit tangent of the solution curve at `(u, μ)`: the null vector of the
/// extended Jacobian `[J | F_μ]`, oriented to positive inner product with
/// `previous` (toward increasing `μ` when no previous tangent is given).
///
/// Layout: the first `dim` entries are the state components, the last entry
/// is the `μ`-component.
pub fn tangent<S: ParametricSystem>(
    system: &S,
    u: &[f64],
    mu: f64,
    previous: Option<&[f64]>,
) -> Result<Vec<f64>, ContinuationError> {
    let n = system.dim();
    let jac = system.jacobian(u, mu);
    let fmu = system.mu_derivative_vec(u, mu);
    let mut rhs = vec![0.0; n + 1];
    rhs[n] = 1.0;

    let try_border = |row: &[f64]| -> Option<Vec<f64>> {
        let state_part = &row[..n];
        let corner = row[n];
        match bordered_solve(&jac, &fmu, state_part, corner, &rhs) {
            Ok(t) => {
                let norm = euclidean_norm(&t);
                if norm > 1e-12 && t.iter().all(|v| v.is_finite()) {
                    Some(t.iter().map(|v| v / norm).collect())
                } else {
                    None
                }
            }
            Err(_) => None,
        }
    };

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if let Some(prev) = previous {
        candidates.push(prev.to_vec());
    }
    let mut e_mu = vec![0.0; n + 1];
    e_mu[n] = 1.0;
    candidates.push(e_mu);
    for i in 0..n {
        let mut e = vec![0.0; n + 1];
        e[i] = 1.0;
        candidates.push(e);
    }

    for border in &candidates {
        if let Some(mut t) = try_border(border) {
            let orient = match previous {
                Some(prev) => t.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>(),
                None => t[n],
            };
            if orient < 0.0 {
                for v in &mut t {
                    *v = -*v;
                }
            }
            return Ok(t);
        }
    }
    Err(ContinuationError::SingularJacobian)
}

/// One corrector solve: Newton on `F(u, μ) = 0` plus the hyperplane
/// constraint `⟨border, (u, μ) - predictor⟩ = 0`.
fn correct_on_hyperplane<S: ParametricSystem>(
    system: &S,
    pred_u: &[f64],
    pred_mu: f64,
    border: &[f64],
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, f64, usize), SolverError> {
    let n = system.dim();
    let mut u = pred_u.to_vec();
    let mut mu = pred_mu;
    for iter in 0..opts.max_iters {
        let res = system.residual_vec(&u, mu);
        let cons: f64 = u
            .iter()
            .zip(&border[..n])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            - pred_u
                .iter()
                .zip(&border[..n])
                .map(|(a, b)| a * b)
                .sum::<f64>()
            + border[n] * (mu - pred_mu);
        let rnorm = max_norm(&res);
        if !rnorm.is_finite() || max_norm(&u) > 1e6 {
            return Err(SolverError::Diverged { iterations: iter });
        }
        if rnorm <= opts.tol_residual && cons.abs() <= 1e-10 {
            return Ok((u, mu, iter));
        }
        let jac = system.jacobian(&u, mu);
        let fmu = system.mu_derivative_vec(&u, mu);
        let mut rhs = vec![0.0; n + 1];
        for i in 0..n {
            rhs[i] = -res[i];
        }
        rhs[n] = -cons;
        let delta = bordered_solve(&jac, &fmu, &border[..n], border[n], &rhs)?;
        for i in 0..n {
            u[i] += delta[i];
        }
        mu += delta[n];
    }
    let rnorm = max_norm(&system.residual_vec(&u, mu));
    if rnorm <= opts.tol_residual {
        return Ok((u, mu, opts.max_iters));
    }
    Err(SolverError::NoConvergence {
        iterations: opts.max_iters,
        residual_norm: rnorm,
    })
}

/// Internal marching state.
#[derive(Clone)]
struct Carried {
    u: Vec<f64>,
    mu: f64,
    tangent: Vec<f64>,
    det: f64,
}

fn system_det<S: ParametricSystem>(system: &S, u: &[f64], mu: f64) -> f64 {
    Lu::factor(&system.jacobian(u, mu)).determinant()
}

fn make_point<S: ContinuableSystem>(system: &S, u: &[f64], mu: f64, tau: f64) -> ContinuationPoint {
    let full = system.embed_full(u);
    let stability = system.unstable_count(&full, mu);
    let label = system.classify_state(&full, mu);
    ContinuationPoint {
        reduced: u.to_vec(),
        full,
        mu,
        tangent_mu: tau,
        stability,
        label,
    }
}

/// Refined location of an event between two consecutive accepted points.
pub struct EventLocation {
    pub u: Vec<f64>,
    pub mu: f64,
    pub tangent_mu: f64,
}

/// Localize a fold between two points whose traversal tangents have
/// opposite `μ`-components, by bisection on the interpolation parameter
/// with a full corrector solve at every trial point.
pub fn locate_fold<S: ParametricSystem>(
    system: &S,
    a: (&[f64], f64),
    b: (&[f64], f64),
    opts: &ContinuationOptions,
) -> Result<EventLocation, ContinuationError> {
    let dir = secant_direction(a, b);
    let tau_of = |u: &[f64], mu: f64| -> Result<f64, ContinuationError> {
        Ok(tangent(system, u, mu, Some(&dir))?[system.dim()])
    };
    let tau_a = tau_of(a.0, a.1)?;
    let tau_b = tau_of(b.0, b.1)?;
    if tau_a * tau_b > 0.0 {
        return Err(ContinuationError::NoSignChange);
    }
    // Folds stop on the tangent criterion itself: near a fold the state
    // resolves like the square root of the μ bracket, so a μ-width stop
    // would leave the fold state orders of magnitude less accurate.
    bisect_event(
        system,
        a,
        b,
        &dir,
        opts,
        |u, mu| tau_of(u, mu),
        tau_a,
        BisectStop::ValueBelow,
    )
}

/// Localize a branch point: the Jacobian determinant changes sign across
/// the segment while the tangent `μ`-component does not.
pub fn locate_branch_point<S: ParametricSystem>(
    system: &S,
    a: (&[f64], f64),
    b: (&[f64], f64),
    opts: &ContinuationOptions,
) -> Result<EventLocation, ContinuationError> {
    let dir = secant_direction(a, b);
    let det_a = system_det(system, a.0, a.1);
    let det_b = system_det(system, b.0, b.1);
    if det_a * det_b > 0.0 {
        return Err(ContinuationError::NoSignChange);
    }
    bisect_event(
        system,
        a,
        b,
        &dir,
        opts,
        |u, mu| Ok(system_det(system, u, mu)),
        det_a,
        BisectStop::ArcBracket,
    )
}

fn secant_direction(a: (&[f64], f64), b: (&[f64], f64)) -> Vec<f64> {
    let mut dir: Vec<f64> = b.0.iter().zip(a.0).map(|(x, y)| x - y).collect();
    dir.push(b.1 - a.1);
    let norm = euclidean_norm(&dir).max(1e-300);
    for v in &mut dir {
        *v /= norm;
    }
    dir
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BisectStop {
    /// Stop once the monitored quantity itself is below `event_tol`.
    ValueBelow,
    /// Stop once the bracket is narrower than `event_tol` in arclength.
    /// Near folds `μ` degenerates as a coordinate (it varies
    /// quadratically along the curve), so the bracket must be measured
    /// along the curve for the located point to be sharp.
    ArcBracket,
}

#[allow(clippy::too_many_arguments)]
fn bisect_event<S: ParametricSystem>(
    system: &S,
    a: (&[f64], f64),
    b: (&[f64], f64),
    dir: &[f64],
    opts: &ContinuationOptions,
    mut test: impl FnMut(&[f64], f64) -> Result<f64, ContinuationError>,
    test_a: f64,
    stop: BisectStop,
) -> Result<EventLocation, ContinuationError> {
    let n = a.0.len();
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let sign_lo = test_a.signum();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let seg_len = {
        let mut acc = 0.0;
        for i in 0..n {
            let d = b.0[i] - a.0[i];
            acc += d * d;
        }
        let dmu = b.1 - a.1;
        libm::sqrt(acc + dmu * dmu)
    };

    for _ in 0..90 {
        let s = 0.5 * (lo + hi);
        let pred_u: Vec<f64> = (0..n).map(|i| a.0[i] + s * (b.0[i] - a.0[i])).collect();
        let pred_mu = a.1 + s * (b.1 - a.1);
        let (u, mu, _) = correct_on_hyperplane(system, &pred_u, pred_mu, dir, &opts.newton)
            .map_err(ContinuationError::Solver)?;
        let moved = {
            let mut acc = 0.0;
            for i in 0..n {
                let d = u[i] - pred_u[i];
                acc += d * d;
            }
            let dmu = mu - pred_mu;
            libm::sqrt(acc + dmu * dmu)
        };
        if moved > 4.0 * seg_len + 1e-9 {
            return Err(ContinuationError::Solver(SolverError::NoConvergence {
                iterations: 0,
                residual_norm: moved,
            }));
        }
        let value = test(&u, mu)?;
        best = Some((u, mu));
        if stop == BisectStop::ValueBelow && value.abs() < opts.event_tol {
            break;
        }
        if value.signum() == sign_lo {
            lo = s;
        } else {
            hi = s;
        }
        if stop == BisectStop::ArcBracket && (hi - lo) * seg_len < opts.event_tol {
            break;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }

    let (u, mu) = best.ok_or(ContinuationError::NoSignChange)?;
    let tau = tangent(system, &u, mu, Some(dir))?[n];
    Ok(EventLocation {
        u,
        mu,
        tangent_mu: tau,
    })
}

/// Seed for a branch emerging at a located branch point.
#[derive(Clone, Debug)]
pub struct SwitchedSeed {
    pub u: Vec<f64>,
    pub mu: f64,
    /// Unit direction in state space along which the amplitude was pinned.
    pub null_direction: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SwitchError {
    NullVectorNotFound,
    /// The corrector relaxed back onto the symmetric branch; retry with a
    /// different amplitude.
    FallbackToOriginalBranch,
    Solver(SolverError),
}

impl fmt::Display for SwitchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwitchError::NullVectorNotFound => write!(f, "no null direction at branch point"),
            SwitchError::FallbackToOriginalBranch => {
                write!(f, "corrector returned to the symmetric branch")
            }
            SwitchError::Solver(e) => write!(f, "switch corrector failed: {e}"),
        }
    }
}

impl core::error::Error for SwitchError {}

/// Approximate unit null vector of the Jacobian at a branch point,
/// orthogonalized against the branch tangent's state part when given.
pub fn null_direction<S: ParametricSystem>(
    system: &S,
    u: &[f64],
    mu: f64,
    branch_tangent: Option<&[f64]>,
) -> Result<Vec<f64>, SwitchError> {
    let n = system.dim();
    let jac = system.jacobian(u, mu);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let mut rhs = vec![0.0; n + 1];
        rhs[n] = 1.0;
        let Ok(sol) = bordered_solve(&jac, &e, &e, 0.0, &rhs) else {
            continue;
        };
        let phi = &sol[..n];
        let norm = euclidean_norm(phi);
        if norm < 1e-12 || !phi.iter().all(|v| v.is_finite()) {
            continue;
        }
        let jphi = jac.mul_vec(phi);
        let quality = euclidean_norm(&jphi) / norm;
        if best.as_ref().is_none_or(|(q, _)| quality < *q) {
            best = Some((quality, phi.iter().map(|v| v / norm).collect()));
        }
    }
    let (_, mut phi) = best.ok_or(SwitchError::NullVectorNotFound)?;
    // Canonical sign: the dominant component points up, so that
    // `direction = +1` raises the leading block.
    let mut max_idx = 0;
    for (i, v) in phi.iter().enumerate() {
        if v.abs() > phi[max_idx].abs() {
            max_idx = i;
        }
    }
    if phi[max_idx] < 0.0 {
        for v in &mut phi {
            *v = -*v;
        }
    }
    if let Some(t) = branch_tangent {
        let tp = &t[..n];
        let tnorm = euclidean_norm(tp);
        if tnorm > 1e-12 {
            let dot: f64 = phi.iter().zip(tp).map(|(a, b)| a * b).sum::<f64>() / (tnorm * tnorm);
            for (p, b) in phi.iter_mut().zip(tp) {
                *p -= dot * b;
            }
            let norm = euclidean_norm(&phi);
            if norm < 1e-8 {
                return Err(SwitchError::NullVectorNotFound);
            }
            for p in &mut phi {
                *p /= norm;
            }
        }
    }
    Ok(phi)
}

/// Produce a seed on the branch that emerges transversally at a branch
/// point: offset by `ε` along the null direction, then Newton-correct with
/// the amplitude along that direction pinned (`μ` free).
pub fn switch_branch<S: ParametricSystem>(
    system: &S,
    bp_u: &[f64],
    bp_mu: f64,
    branch_tangent: Option<&[f64]>,
    direction: f64,
    epsilon: f64,
    newton: &NewtonOptions,
) -> Result<SwitchedSeed, SwitchError> {
    let phi = null_direction(system, bp_u, bp_mu, branch_tangent)?;
    let eps = epsilon * direction.signum() * euclidean_norm(bp_u).max(1.0);
    let seed: Vec<f64> = bp_u.iter().zip(&phi).map(|(a, p)| a + eps * p).collect();

    // Border pins the component along phi; μ adjusts freely.
    let mut border = phi.clone();
    border.push(0.0);
    let (u, mu, _) = correct_on_hyperplane(system, &seed, bp_mu, &border, newton)
        .map_err(SwitchError::Solver)?;

    let off_axis: f64 = u
        .iter()
        .zip(bp_u)
        .zip(&phi)
        .map(|((a, b), p)| (a - b) * p)
        .sum();
    if off_axis.abs() < 0.25 * eps.abs() {
        return Err(SwitchError::FallbackToOriginalBranch);
    }
    // The pinned corrector can still land on the original branch when the
    // null direction has a component along it; compare against the
    // original branch continued to the corrected μ.
    if let Ok(on_branch) = newton_solve(system, mu, bp_u, newton) {
        let mut dist2 = 0.0;
        for (a, b) in u.iter().zip(&on_branch.u) {
            let d = a - b;
            dist2 += d * d;
        }
        if libm::sqrt(dist2) < 0.25 * eps.abs() {
            return Err(SwitchError::FallbackToOriginalBranch);
        }
    }
    Ok(SwitchedSeed {
        u,
        mu,
        null_direction: phi,
    })
}

/// Trace one branch from a seed.
///
/// `orientation > 0` starts toward increasing `μ`, `< 0` toward
/// decreasing `μ`. Steps are halved on corrector failure or when the turn
/// angle between consecutive tangents exceeds the configured limit, and
/// grown by 1.3 after four consecutive easy steps.
pub fn trace_branch<S: ContinuableSystem>(
    system: &S,
    seed_u: &[f64],
    seed_mu: f64,
    orientation: f64,
    opts: &ContinuationOptions,
) -> Result<Branch, ContinuationError> {
    let n = system.dim();
    let converged = newton_solve(system, seed_mu, seed_u, &opts.newton)
        .map_err(ContinuationError::SeedNotConverged)?;

    let mut t0 = tangent(system, &converged.u, seed_mu, None)?;
    if orientation < 0.0 {
        for v in &mut t0 {
            *v = -*v;
        }
    }

    let mut branch = Branch::default();
    branch
        .points
        .push(make_point(system, &converged.u, seed_mu, t0[n]));

    let start_u = converged.u.clone();
    let start_mu = seed_mu;
    let start_tangent = t0.clone();

    let mut carried = Carried {
        det: system_det(system, &converged.u, seed_mu),
        u: converged.u,
        mu: seed_mu,
        tangent: t0,
    };

    let mut ds = opts.ds_init;
    let mut easy_streak = 0usize;
    let mut branch_points_found = 0usize;
    let mut arc_traveled = 0.0f64;
    let cos_limit = libm::cos(opts.max_tangent_angle_deg * core::f64::consts::PI / 180.0);

    for _step in 0..opts.max_steps {
        // Near-homogeneous states have a cluster of near-zero eigenvalues;
        // keep steps small there so event sign changes stay resolved.
        let full_here = system.embed_full(&carried.u);
        let ds_cap = if spread(&full_here) < HOMOGENEOUS_SPREAD {
            opts.ds_init / 10.0
        } else {
            opts.ds_max
        };
        let eff_ds = ds
            .min(ds_cap)
            .min(system.step_scale(&carried.u, carried.mu));

        // Predict and correct; on failure halve the step.
        let pred_u: Vec<f64> = (0..n)
            .map(|i| carried.u[i] + eff_ds * carried.tangent[i])
            .collect();
        let pred_mu = carried.mu + eff_ds * carried.tangent[n];
        let corrected = correct_on_hyperplane(system, &pred_u, pred_mu, &carried.tangent, &opts.newton);
        let (new_u, new_mu, iters) = match corrected {
            Ok(ok) => ok,
            Err(_) => {
                ds *= 0.5;
                easy_streak = 0;
                if ds < opts.ds_min {
                    return Err(ContinuationError::StepCollapse { mu: carried.mu });
                }
                continue;
            }
        };

        // Trust-region guard: near-singular Jacobians (clustered activation
        // levels at small μ) can make Newton hop onto a neighbouring
        // solution curve far from the predictor. Such a result is a
        // different branch, not a continuation step.
        let moved = {
            let mut acc = 0.0;
            for i in 0..n {
                let d = new_u[i] - carried.u[i];
                acc += d * d;
            }
            let dmu = new_mu - carried.mu;
            libm::sqrt(acc + dmu * dmu)
        };
        if moved > 3.0 * eff_ds {
            ds *= 0.5;
            easy_streak = 0;
            if ds < opts.ds_min {
                return Err(ContinuationError::StepCollapse { mu: carried.mu });
            }
            continue;
        }

        let new_tangent = match tangent(system, &new_u, new_mu, Some(&carried.tangent)) {
            Ok(t) => t,
            Err(_) => {
                ds *= 0.5;
                easy_streak = 0;
                if ds < opts.ds_min {
                    return Err(ContinuationError::StepCollapse { mu: carried.mu });
                }
                continue;
            }
        };

        // Smoothness contract: reject sharp turns.
        let cos_angle: f64 = new_tangent
            .iter()
            .zip(&carried.tangent)
            .map(|(a, b)| a * b)
            .sum();
        if cos_angle < cos_limit {
            ds *= 0.5;
            easy_streak = 0;
            if ds < opts.ds_min {
                return Err(ContinuationError::StepCollapse { mu: carried.mu });
            }
            continue;
        }

        let new_det = system_det(system, &new_u, new_mu);
        arc_traveled += moved;

        branch
            .points
            .push(make_point(system, &new_u, new_mu, new_tangent[n]));

        // --- Event detection over [carried, new] ---
        let tau_a = carried.tangent[n];
        let tau_b = new_tangent[n];
        let fold_crossing = tau_a * tau_b < 0.0;
        let det_crossing = carried.det * new_det < 0.0;

        let mut fold_mu: Option<f64> = None;
        if fold_crossing {
            if let Ok(loc) = locate_fold(
                system,
                (&carried.u, carried.mu),
                (&new_u, new_mu),
                opts,
            ) {
                fold_mu = Some(loc.mu);
                let insert_at = branch.points.len() - 1;
                branch
                    .points
                    .insert(insert_at, make_point(system, &loc.u, loc.mu, loc.tangent_mu));
                branch.events.push(BranchEvent {
                    kind: EventKind::Fold,
                    mu: loc.mu,
                    point_index: insert_at,
                    tangent_mu: loc.tangent_mu,
                });
            }
        }
        if det_crossing {
            if let Ok(loc) = locate_branch_point(
                system,
                (&carried.u, carried.mu),
                (&new_u, new_mu),
                opts,
            ) {
                let colocated = fold_mu.is_some_and(|fm| (fm - loc.mu).abs() <= EVENT_COLOCATION);
                if !colocated {
                    let insert_at = branch.points.len() - 1;
                    branch
                        .points
                        .insert(insert_at, make_point(system, &loc.u, loc.mu, loc.tangent_mu));
                    branch.events.push(BranchEvent {
                        kind: EventKind::BranchPoint,
                        mu: loc.mu,
                        point_index: insert_at,
                        tangent_mu: loc.tangent_mu,
                    });
                    branch_points_found += 1;
                }
            }
        }

        let last_index = branch.points.len() - 1;

        // --- Termination checks ---
        if new_mu < opts.mu_window.0 || new_mu > opts.mu_window.1 {
            branch.events.push(BranchEvent {
                kind: EventKind::WindowExit,
                mu: new_mu,
                point_index: last_index,
                tangent_mu: new_tangent[n],
            });
            break;
        }

        if let Some(limit) = opts.max_branch_points {
            if branch_points_found >= limit {
                break;
            }
        }

        if !opts.stop_labels.is_empty() {
            let guard_lo = 2.0 * opts.delta_star;
            let guard_hi = 1.0 - 2.0 * opts.delta_star;
            if let Some(label) = branch.points[last_index].label {
                let stop = opts.stop_labels.iter().any(|rule| {
                    rule.label == label
                        && match rule.side {
                            MuSide::NearZero => new_mu < guard_lo,
                            MuSide::NearOne => new_mu > guard_hi,
                        }
                });
                if stop {
                    branch.events.push(BranchEvent {
                        kind: EventKind::LabelStop,
                        mu: new_mu,
                        point_index: last_index,
                        tangent_mu: new_tangent[n],
                    });
                    break;
                }
            }
        }

        if opts.detect_closure && arc_traveled > 20.0 * opts.ds_init {
            let mut dist2 = 0.0;
            for i in 0..n {
                let d = new_u[i] - start_u[i];
                dist2 += d * d;
            }
            let dmu = new_mu - start_mu;
            dist2 += dmu * dmu;
            let dist = libm::sqrt(dist2);
            let aligned: f64 = new_tangent
                .iter()
                .zip(&start_tangent)
                .map(|(a, b)| a * b)
                .sum();
            if dist < 1.5 * eff_ds.max(opts.closure_tol) && aligned > 0.5 {
                // Aim the final corrector at the start point itself.
                if let Ok((cu, cmu, _)) =
                    correct_on_hyperplane(system, &start_u, start_mu, &new_tangent, &opts.newton)
                {
                    let mut err2 = 0.0;
                    for i in 0..n {
                        let d = cu[i] - start_u[i];
                        err2 += d * d;
                    }
                    let dm = cmu - start_mu;
                    err2 += dm * dm;
                    if libm::sqrt(err2) < opts.closure_tol {
                        let tau = tangent(system, &cu, cmu, Some(&new_tangent))
                            .map(|t| t[n])
                            .unwrap_or(new_tangent[n]);
                        // The closing hop can still straddle a fold (for
                        // even block splits the curve's μ-minimum sits
                        // right at the symmetry-breaking point the trace
                        // started from).
                        if new_tangent[n] * tau < 0.0 {
                            if let Ok(loc) =
                                locate_fold(system, (&new_u, new_mu), (&cu, cmu), opts)
                            {
                                branch
                                    .points
                                    .push(make_point(system, &loc.u, loc.mu, loc.tangent_mu));
                                branch.events.push(BranchEvent {
                                    kind: EventKind::Fold,
                                    mu: loc.mu,
                                    point_index: branch.points.len() - 1,
                                    tangent_mu: loc.tangent_mu,
                                });
                            }
                        }
                        branch.points.push(make_point(system, &cu, cmu, tau));
                        branch.events.push(BranchEvent {
                            kind: EventKind::Closure,
                            mu: cmu,
                            point_index: branch.points.len() - 1,
                            tangent_mu: tau,
                        });
                        break;
                    }
                }
            }
        }

        // --- Step-size control ---
        if iters <= 3 {
            easy_streak += 1;
            if easy_streak >= 4 {
                ds = (ds * 1.3).min(opts.ds_max);
                easy_streak = 0;
            }
        } else {
            easy_streak = 0;
        }

        carried = Carried {
            u: new_u,
            mu: new_mu,
            tangent: new_tangent,
            det: new_det,
        };
    }

    Ok(branch)
}

/// Trace in both directions from the seed and stitch the halves into one
/// branch traversed from the end of the decreasing-`μ` half to the end of
/// the increasing-`μ` half.
pub fn trace_bidirectional<S: ContinuableSystem>(
    system: &S,
    seed_u: &[f64],
    seed_mu: f64,
    opts: &ContinuationOptions,
) -> Result<Branch, ContinuationError> {
    let forward = trace_branch(system, seed_u, seed_mu, 1.0, opts)?;
    let backward = trace_branch(system, seed_u, seed_mu, -1.0, opts)?;
    let mut merged = forward.reversed();
    merged.extend_with(backward);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HomogeneousRoot, Nonlinearity, RingModel};
    use crate::patterns::{make_pattern, PatternLabel};
    use crate::reduction::SymmetryReduction;

    /// Scalar branch `p - u + u³ = 0` continued in `p`.
    struct CubicScalar;

    impl ParametricSystem for CubicScalar {
        fn dim(&self) -> usize {
            1
        }
        fn residual_into(&self, u: &[f64], mu: f64, out: &mut [f64]) {
            out[0] = mu - u[0] + u[0] * u[0] * u[0];
        }
        fn jacobian(&self, u: &[f64], _mu: f64) -> Mat {
            let mut j = Mat::zeros(1, 1);
            j[(0, 0)] = -1.0 + 3.0 * u[0] * u[0];
            j
        }
        fn mu_derivative_into(&self, _u: &[f64], _mu: f64, out: &mut [f64]) {
            out[0] = 1.0;
        }
    }

    impl ContinuableSystem for CubicScalar {
        fn unstable_count(&self, full: &[f64], _mu: f64) -> usize {
            usize::from(-1.0 + 3.0 * full[0] * full[0] > STABILITY_THRESHOLD)
        }
    }

    /// Scalar fold model `-drive + f(u, μ) = 0` with the quadratic fold
    /// nonlinearity, continued in `μ`.
    struct DrivenFold {
        f: Nonlinearity,
        drive: f64,
    }

    impl ParametricSystem for DrivenFold {
        fn dim(&self) -> usize {
            1
        }
        fn residual_into(&self, u: &[f64], mu: f64, out: &mut [f64]) {
            out[0] = -self.drive + self.f.eval(u[0], mu);
        }
        fn jacobian(&self, u: &[f64], mu: f64) -> Mat {
            let mut j = Mat::zeros(1, 1);
            j[(0, 0)] = self.f.eval_du(u[0], mu);
            j
        }
        fn mu_derivative_into(&self, u: &[f64], mu: f64, out: &mut [f64]) {
            out[0] = self.f.eval_dmu(u[0], mu);
        }
    }

    impl ContinuableSystem for DrivenFold {
        fn unstable_count(&self, full: &[f64], mu: f64) -> usize {
            usize::from(self.f.eval_du(full[0], mu) > STABILITY_THRESHOLD)
        }
    }

    fn scalar_opts() -> ContinuationOptions {
        ContinuationOptions {
            mu_window: (-1.0, 1.5),
            ds_max: 5e-3,
            ..ContinuationOptions::default()
        }
    }

    #[test]
    fn scalar_cubic_fold_location() {
        let sys = CubicScalar;
        let branch = trace_branch(&sys, &[0.0], 0.0, 1.0, &scalar_opts()).unwrap();
        let folds = branch.events_of(EventKind::Fold);
        assert!(!folds.is_empty(), "no fold found");
        let fold = folds[0];
        let expect_mu = 2.0 / (3.0 * libm::sqrt(3.0));
        assert!((fold.mu - expect_mu).abs() < 1e-6, "fold mu {}", fold.mu);
        let fold_u = branch.points[fold.point_index].reduced[0];
        assert!((fold_u - 1.0 / libm::sqrt(3.0)).abs() < 1e-6);
        assert!(fold.tangent_mu.abs() < 1e-6);
    }

    #[test]
    fn quadratic_fold_at_one_minus_drive() {
        let sys = DrivenFold {
            f: Nonlinearity::normal_form_fold(),
            drive: 0.1,
        };
        // Solve -0.1 + (1-mu) - (u-1)^2 = 0 at mu = 0.5: u = 1 + sqrt(0.4).
        let u0 = 1.0 + libm::sqrt(0.4);
        let opts = ContinuationOptions {
            mu_window: (0.0, 2.0),
            ..ContinuationOptions::default()
        };
        let branch = trace_branch(&sys, &[u0], 0.5, 1.0, &opts).unwrap();
        let folds = branch.events_of(EventKind::Fold);
        assert!(!folds.is_empty());
        assert!((folds[0].mu - 0.9).abs() < 1e-6, "fold at {}", folds[0].mu);
    }

    #[test]
    fn locate_fold_requires_bracket() {
        let sys = CubicScalar;
        let res = locate_fold(
            &sys,
            (&[0.0][..], 0.0),
            (&[0.1][..], 0.09),
            &scalar_opts(),
        );
        assert!(matches!(res, Err(ContinuationError::NoSignChange)));
    }

    #[test]
    fn tangent_orientation_and_reversal() {
        let sys = CubicScalar;
        let t = tangent(&sys, &[0.0], 0.0, None).unwrap();
        assert!(t[1] > 0.0, "first tangent oriented toward increasing mu");
        let flipped: Vec<f64> = t.iter().map(|v| -v).collect();
        let t2 = tangent(&sys, &[0.0], 0.0, Some(&flipped)).unwrap();
        for (a, b) in t2.iter().zip(&flipped) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_ratio_on_homogeneous_branch() {
        // Implicit differentiation of f(u, mu) = 0 gives dmu/du = f_u / u.
        let model = RingModel::cubic_quintic(6, 1, 0.0).unwrap();
        let sys = SteadySystem::new(&model, SymmetryReduction::full(&model));
        let u = model.homogeneous(0.5, HomogeneousRoot::Minus).unwrap();
        let t = tangent(&sys, &u, 0.5, None).unwrap();
        let ratio = t[6] / t[0];
        let expect = model.nonlinearity.eval_du(u[0], 0.5) / u[0];
        assert!(
            (ratio - expect).abs() / expect.abs() < 1e-8,
            "ratio {ratio} vs {expect}"
        );
        assert!((t[6] > 0.0) == (expect > 0.0));
    }

    #[test]
    fn homogeneous_branch_exits_window_both_ends() {
        let model = RingModel::cubic_quintic(6, 1, 0.004).unwrap();
        let sys = SteadySystem::new(&model, SymmetryReduction::kappa(&model));
        let seed = [model.nonlinearity.roots(0.5).unwrap().minus; 4];
        let opts = ContinuationOptions {
            mu_window: (0.1, 0.9),
            stop_labels: alloc::vec![],
            ..ContinuationOptions::default()
        };
        let branch = trace_bidirectional(&sys, &seed, 0.5, &opts).unwrap();
        let exits = branch.events_of(EventKind::WindowExit);
        assert_eq!(exits.len(), 2);
        let mus: Vec<f64> = exits.iter().map(|e| e.mu).collect();
        assert!(mus.iter().any(|&m| m < 0.1) && mus.iter().any(|&m| m > 0.9));
        for p in &branch.points {
            assert_eq!(p.label, Some(PatternLabel::HomMinus));
        }
    }

    #[test]
    fn snake_first_fold_near_left_law() {
        let model = RingModel::cubic_quintic(6, 1, 0.005).unwrap();
        let sys = SteadySystem::new(&model, SymmetryReduction::kappa(&model));
        let seed_full = make_pattern(PatternLabel::U(1), &model, 0.5).unwrap();
        let seed = SymmetryReduction::kappa(&model).project(&seed_full);
        let opts = ContinuationOptions {
            max_steps: 20_000,
            ..ContinuationOptions::default()
        };
        let branch = trace_branch(&sys, &seed, 0.5, -1.0, &opts).unwrap();
        assert_eq!(branch.points[0].label, Some(PatternLabel::U(1)));
        let folds = branch.events_of(EventKind::Fold);
        assert!(!folds.is_empty());
        let expect = 3.0 * libm::cbrt(0.005 * 0.005);
        let rel = (folds[0].mu - expect).abs() / expect;
        assert!(rel < 0.15, "first fold {} vs {}", folds[0].mu, expect);
    }

    #[test]
    fn stability_of_anti_continuum_patterns() {
        let model = RingModel::cubic_quintic(6, 1, 0.0).unwrap();
        for mu in [0.2, 0.5, 0.8] {
            let u = make_pattern(PatternLabel::U(2), &model, mu).unwrap();
            assert_eq!(stability_index(&model, &u, mu), 0);
            // One node at the unstable root carries one positive eigenvalue;
            // interface patterns with k >= 2 carry the flip-mirrored pair.
            let v1 = make_pattern(PatternLabel::V(1), &model, mu).unwrap();
            assert_eq!(stability_index(&model, &v1, mu), 1);
            let v2 = make_pattern(PatternLabel::V(2), &model, mu).unwrap();
            assert_eq!(stability_index(&model, &v2, mu), 2);
            let hom = model.homogeneous(mu, HomogeneousRoot::Minus).unwrap();
            assert_eq!(stability_index(&model, &hom, mu), 6);
        }
    }

    #[test]
    fn two_block_branch_point_on_homogeneous_branch() {
        let model = RingModel::cubic_quintic(6, 3, 0.001).unwrap();
        let sys = SteadySystem::new(&model, SymmetryReduction::two_block(&model, 1).unwrap());
        let um = model.nonlinearity.roots(0.5).unwrap().minus;
        let opts = ContinuationOptions {
            max_branch_points: Some(1),
            mu_window: (1e-4, 1.05),
            ..ContinuationOptions::default()
        };
        let branch = trace_branch(&sys, &[um, um], 0.5, -1.0, &opts).unwrap();
        let bps = branch.events_of(EventKind::BranchPoint);
        assert_eq!(bps.len(), 1);
        let expect = 6.0 * 0.001 / 2.0;
        assert!(
            (bps[0].mu - expect).abs() / expect < 0.1,
            "mu_sb {} vs {}",
            bps[0].mu,
            expect
        );
    }

    #[test]
    fn right_branch_point_matches_quartic_law() {
        let model = RingModel::cubic_quintic(6, 3, 0.001).unwrap();
        let sys = SteadySystem::new(&model, SymmetryReduction::two_block(&model, 2).unwrap());
        let um = model.nonlinearity.roots(0.5).unwrap().minus;
        let opts = ContinuationOptions {
            max_branch_points: Some(1),
            ..ContinuationOptions::default()
        };
        let branch = trace_branch(&sys, &[um, um], 0.5, 1.0, &opts).unwrap();
        let bps = branch.events_of(EventKind::BranchPoint);
        assert_eq!(bps.len(), 1);
        let gap = 6.0 * 0.001 / 4.0;
        let expect = 1.0 - gap * gap;
        assert!(
            (bps[0].mu - expect).abs() < 0.1 * gap * gap,
            "right bp {} vs {}",
            bps[0].mu,
            expect
        );
    }

    #[test]
    fn switch_produces_asymmetric_seed() {
        let model = RingModel::cubic_quintic(6, 3, 0.001).unwrap();
        let sys = SteadySystem::new(&model, SymmetryReduction::two_block(&model, 1).unwrap());
        let um = model.nonlinearity.roots(0.5).unwrap().minus;
        let opts = ContinuationOptions {
            max_branch_points: Some(1),
            mu_window: (1e-4, 1.05),
            ..ContinuationOptions::default()
        };
        let branch = trace_branch(&sys, &[um, um], 0.5, -1.0, &opts).unwrap();
        let bp = branch.events_of(EventKind::BranchPoint)[0].clone();
        let bp_point = &branch.points[bp.point_index];

        let plus = switch_branch(
            &sys,
            &bp_point.reduced,
            bp_point.mu,
            None,
            1.0,
            1e-4,
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(plus.u[0] > plus.u[1], "direction +1 raises the first block");

        let minus = switch_branch(
            &sys,
            &bp_point.reduced,
            bp_point.mu,
            None,
            -1.0,
            1e-4,
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(minus.u[0] < minus.u[1], "direction -1 is the mirror seed");

        // A wildly large offset must not silently pretend to switch.
        let too_big = switch_branch(
            &sys,
            &bp_point.reduced,
            bp_point.mu,
            None,
            1.0,
            1e-1,
            &NewtonOptions::default(),
        );
        if let Ok(seed) = too_big {
            let sym_gap = (seed.u[0] - seed.u[1]).abs();
            assert!(sym_gap > 1e-4, "large epsilon fell back silently");
        }
    }

    #[test]
    fn reversal_bookkeeping() {
        let sys = CubicScalar;
        let branch = trace_branch(&sys, &[0.0], 0.0, 1.0, &scalar_opts()).unwrap();
        let n = branch.points.len();
        let fold_mu = branch.events_of(EventKind::Fold)[0].mu;
        let rev = branch.reversed();
        let fold_rev = rev.events_of(EventKind::Fold)[0].clone();
        assert_eq!(fold_rev.mu, fold_mu);
        assert!((rev.points[fold_rev.point_index].mu - fold_mu).abs() < 1e-12);
        assert_eq!(rev.points.len(), n);
    }
}
