//! Ring lattice model: bistable nonlinearity, coupling operator, and the
//! steady-state residual `F(U, μ, d)_n = d (Δ_m U)_n + f(u_n, μ)`.
//!
//! Node indices are `0..N` in code and all index arithmetic wraps modulo
//! `N`. The interaction range `m` couples each node to its `m` nearest
//! neighbours on both sides; `m = ⌊N/2⌋` is the all-to-all regime where
//! every node talks to every other node.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::Mat;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    /// The nonlinearity does not have the three-nonnegative-root structure
    /// at this parameter value.
    NoThreeRoots { mu: f64 },
    /// Node count / interaction range combination is not a valid ring.
    InvalidGeometry { n: usize, m: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NoThreeRoots { mu } => {
                write!(f, "no three-root structure at mu = {mu}")
            }
            ModelError::InvalidGeometry { n, m } => {
                write!(f, "invalid ring geometry N = {n}, m = {m} (need N >= 3, 1 <= m <= N/2)")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// Which scalar bistable law the model uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonlinearityKind {
    /// `f(u, μ) = -μu + 2u³ - u⁵`, the default bistable law with stable
    /// states `u = 0` and `u = u₊(μ)` for `μ ∈ (0, 1)`.
    CubicQuintic,
    /// `f(u, μ) = -μu + u³ - u⁵`: the small-amplitude normal form with a
    /// quintic term retained so orbits stay bounded. Bistable for
    /// `μ ∈ (0, 1/4)` with `u₊(0) = 1`.
    NormalFormCubic,
    /// `f(u, μ) = (1 - μ) - (u - 1)²`: local quadratic model of the fold at
    /// `(u, μ) = (1, 1)`. Not odd and has no zero root; used to exercise
    /// fold-location laws on scalar test systems.
    NormalFormFold,
    /// `f(u, μ) = -μu + c₀u³ + c₁u⁵ + …` with caller-supplied odd
    /// coefficients.
    CustomOddPolynomial,
}

/// A scalar bistable nonlinearity `f(u, μ)` together with its exact partial
/// derivatives and nonnegative-root bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    /// Coefficients of `u³, u⁵, u⁷, …` for the odd-polynomial kinds.
    pub coefficients: Vec<f64>,
}

/// The nonnegative roots `0 ≤ u₋(μ) ≤ u₊(μ)` of `f(·, μ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Roots {
    pub zero: f64,
    pub minus: f64,
    pub plus: f64,
}

impl Nonlinearity {
    pub fn cubic_quintic() -> Self {
        Nonlinearity {
            kind: NonlinearityKind::CubicQuintic,
            coefficients: vec![2.0, -1.0],
        }
    }

    pub fn normal_form_cubic() -> Self {
        Nonlinearity {
            kind: NonlinearityKind::NormalFormCubic,
            coefficients: vec![1.0, -1.0],
        }
    }

    pub fn normal_form_fold() -> Self {
        Nonlinearity {
            kind: NonlinearityKind::NormalFormFold,
            coefficients: Vec::new(),
        }
    }

    /// Odd polynomial `-μu + coeffs[0]·u³ + coeffs[1]·u⁵ + …`.
    pub fn odd_polynomial(coefficients: Vec<f64>) -> Self {
        Nonlinearity {
            kind: NonlinearityKind::CustomOddPolynomial,
            coefficients,
        }
    }

    /// Whether `f(-u, μ) = -f(u, μ)` holds identically.
    pub fn is_odd(&self) -> bool {
        self.kind != NonlinearityKind::NormalFormFold
    }

    /// `f(u, μ)`.
    pub fn eval(&self, u: f64, mu: f64) -> f64 {
        match self.kind {
            NonlinearityKind::NormalFormFold => {
                let v = u - 1.0;
                (1.0 - mu) - v * v
            }
            _ => {
                let u2 = u * u;
                let mut acc = 0.0;
                // Horner evaluation of c₀u³ + c₁u⁵ + … = u³ (c₀ + c₁u² + …).
                for &c in self.coefficients.iter().rev() {
                    acc = acc * u2 + c;
                }
                -mu * u + u * u2 * acc
            }
        }
    }

    /// `∂f/∂u`.
    pub fn eval_du(&self, u: f64, mu: f64) -> f64 {
        match self.kind {
            NonlinearityKind::NormalFormFold => -2.0 * (u - 1.0),
            _ => {
                let u2 = u * u;
                let mut acc = 0.0;
                for (j, &c) in self.coefficients.iter().enumerate().rev() {
                    let power = (2 * j + 3) as f64;
                    acc = acc * u2 + power * c;
                }
                -mu + u2 * acc
            }
        }
    }

    /// `∂f/∂μ`.
    pub fn eval_dmu(&self, u: f64, _mu: f64) -> f64 {
        match self.kind {
            NonlinearityKind::NormalFormFold => -1.0,
            _ => -u,
        }
    }

    /// Nonnegative roots `0, u₋(μ), u₊(μ)`.
    ///
    /// For the cubic–quintic family the closed form of the quadratic in
    /// `u²` is used; longer odd polynomials fall back to a scan plus Newton
    /// refinement. `μ = 0` and the upper saddle-node value return the
    /// degenerate limits.
    pub fn roots(&self, mu: f64) -> Result<Roots, ModelError> {
        if self.kind == NonlinearityKind::NormalFormFold {
            return Err(ModelError::NoThreeRoots { mu });
        }
        if mu < 0.0 {
            return Err(ModelError::NoThreeRoots { mu });
        }
        if mu == 0.0 {
            let plus = self.positive_roots_of_h(0.0).last().copied().unwrap_or(0.0);
            return Ok(Roots {
                zero: 0.0,
                minus: 0.0,
                plus,
            });
        }
        if self.coefficients.len() == 2 {
            // h(u) = -μ + c₃u² + c₅u⁴ = 0, a quadratic in w = u².
            let c3 = self.coefficients[0];
            let c5 = self.coefficients[1];
            let disc = c3 * c3 + 4.0 * c5 * mu;
            if disc < 0.0 || c5 >= 0.0 || c3 <= 0.0 {
                return Err(ModelError::NoThreeRoots { mu });
            }
            let sq = libm::sqrt(disc);
            let w_minus = (c3 - sq) / (-2.0 * c5);
            let w_plus = (c3 + sq) / (-2.0 * c5);
            if w_minus < 0.0 {
                return Err(ModelError::NoThreeRoots { mu });
            }
            return Ok(Roots {
                zero: 0.0,
                minus: libm::sqrt(w_minus),
                plus: libm::sqrt(w_plus),
            });
        }
        let roots = self.positive_roots_of_h(mu);
        if roots.len() < 2 {
            return Err(ModelError::NoThreeRoots { mu });
        }
        Ok(Roots {
            zero: 0.0,
            minus: roots[0],
            plus: *roots.last().unwrap(),
        })
    }

    /// Positive roots of `h(u) = f(u, μ)/u`, found by a sign-change scan
    /// with bisection seeds and Newton polish.
    fn positive_roots_of_h(&self, mu: f64) -> Vec<f64> {
        let h = |u: f64| -> f64 {
            let u2 = u * u;
            let mut acc = 0.0;
            for &c in self.coefficients.iter().rev() {
                acc = acc * u2 + c;
            }
            -mu + u2 * acc
        };
        let h_du = |u: f64| -> f64 {
            let u2 = u * u;
            let mut acc = 0.0;
            for (j, &c) in self.coefficients.iter().enumerate().rev() {
                let power = (2 * j + 2) as f64;
                acc = acc * u2 + power * c;
            }
            u * acc
        };
        let u_max = 4.0;
        let steps = 4000;
        let mut out = Vec::new();
        let mut prev_u = 0.0;
        let mut prev_h = h(0.0);
        for i in 1..=steps {
            let u = u_max * i as f64 / steps as f64;
            let hv = h(u);
            if prev_h == 0.0 {
                out.push(prev_u);
            } else if prev_h * hv < 0.0 {
                let (mut lo, mut hi) = (prev_u, u);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if h(lo) * h(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let mut root = 0.5 * (lo + hi);
                for _ in 0..4 {
                    let d = h_du(root);
                    if d.abs() > 1e-14 {
                        root -= h(root) / d;
                    }
                }
                out.push(root);
            }
            prev_u = u;
            prev_h = hv;
        }
        out
    }
}

/// Ring of `N` identical bistable nodes with symmetric `m`-range coupling
/// of strength `d`.
#[derive(Clone, Debug)]
pub struct RingModel {
    n: usize,
    m: usize,
    pub d: f64,
    pub nonlinearity: Nonlinearity,
}

impl RingModel {
    pub fn new(n: usize, m: usize, d: f64, nonlinearity: Nonlinearity) -> Result<Self, ModelError> {
        if n < 3 || m < 1 || m > n / 2 || d < 0.0 {
            return Err(ModelError::InvalidGeometry { n, m });
        }
        Ok(RingModel {
            n,
            m,
            d,
            nonlinearity,
        })
    }

    pub fn cubic_quintic(n: usize, m: usize, d: f64) -> Result<Self, ModelError> {
        RingModel::new(n, m, d, Nonlinearity::cubic_quintic())
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn range(&self) -> usize {
        self.m
    }

    /// `m = ⌊N/2⌋` couples every node to every other node.
    pub fn is_all_to_all(&self) -> bool {
        self.m == self.n / 2
    }

    /// `(Δ_m U)_node` with modulo-`N` indexing (`node` is 0-based).
    pub fn coupling_row(&self, u: &[f64], node: usize) -> f64 {
        debug_assert_eq!(u.len(), self.n);
        if self.is_all_to_all() {
            let sum: f64 = u.iter().sum();
            sum - self.n as f64 * u[node]
        } else {
            let mut sum = 0.0;
            for j in 0..=(2 * self.m) {
                let idx = (node + self.n + j - self.m) % self.n;
                sum += u[idx];
            }
            sum - (2 * self.m + 1) as f64 * u[node]
        }
    }

    /// The full coupling vector `Δ_m U`.
    pub fn apply_coupling(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.coupling_row(u, i)).collect()
    }

    /// The circulant matrix `L_m` with `Δ_m U = L_m U`.
    pub fn coupling_matrix(&self) -> Mat {
        let mut l = Mat::zeros(self.n, self.n);
        for i in 0..self.n {
            let e: Vec<f64> = (0..self.n).map(|j| if j == i { 1.0 } else { 0.0 }).collect();
            let col = self.apply_coupling(&e);
            for r in 0..self.n {
                l[(r, i)] = col[r];
            }
        }
        l
    }

    /// Steady-state residual `F(U, μ)_n = d (Δ_m U)_n + f(u_n, μ)`.
    pub fn residual(&self, u: &[f64], mu: f64) -> Vec<f64> {
        assert_eq!(u.len(), self.n, "state dimension mismatch");
        (0..self.n)
            .map(|i| self.d * self.coupling_row(u, i) + self.nonlinearity.eval(u[i], mu))
            .collect()
    }

    /// Residual at a stored branch point (its own `d` wins over the
    /// model's).
    pub fn residual_at(&self, point: &StatePoint) -> Vec<f64> {
        let mut model = self.clone();
        model.d = point.d;
        model.residual(&point.u, point.mu)
    }

    ///`∂F/∂U = d L_m + diag(f_u(u_n, μ))`.
    pub fn jacobian(&self, u: &[f64], mu: f64) -> Mat {
        assert_eq!(u.len(), self.n, "state dimension mismatch");
        let mut j = self.coupling_matrix();
        for r in 0..self.n {
            for c in 0..self.n {
                j[(r, c)] *= self.d;
            }
        }
        for i in 0..self.n {
            j[(i, i)] += self.nonlinearity.eval_du(u[i], mu);
        }
        j
    }

    /// `∂F/∂μ`, componentwise `f_μ(u_n, μ)`.
    pub fn residual_mu(&self, u: &[f64], mu: f64) -> Vec<f64> {
        u.iter().map(|&v| self.nonlinearity.eval_dmu(v, mu)).collect()
    }

    /// The homogeneous state at the requested root of `f`.
    pub fn homogeneous(&self, mu: f64, root: HomogeneousRoot) -> Result<Vec<f64>, ModelError> {
        let value = match root {
            HomogeneousRoot::Zero => 0.0,
            HomogeneousRoot::Minus => self.nonlinearity.roots(mu)?.minus,
            HomogeneousRoot::Plus => self.nonlinearity.roots(mu)?.plus,
        };
        Ok(vec![value; self.n])
    }
}

/// Which root of `f` a homogeneous state sits at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HomogeneousRoot {
    Zero,
    Minus,
    Plus,
}

/// A point on a solution branch in the full state space.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePoint {
    pub u: Vec<f64>,
    pub mu: f64,
    pub d: f64,
}

impl StatePoint {
    pub fn new(u: Vec<f64>, mu: f64, d: f64) -> Self {
        StatePoint { u, mu, d }
    }

    pub fn all_finite(&self) -> bool {
        self.mu.is_finite() && self.d.is_finite() && self.u.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = core::f64::consts::SQRT_2;

    #[test]
    fn cubic_quintic_values() {
        let f = Nonlinearity::cubic_quintic();
        assert_eq!(f.eval(0.0, 0.37), 0.0);
        assert!(f.eval(1.0, 1.0).abs() < 1e-15);
        assert!(f.eval(SQRT2, 0.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_quintic_derivatives() {
        let f = Nonlinearity::cubic_quintic();
        assert!(f.eval_du(1.0, 1.0).abs() < 1e-15);
        assert_eq!(f.eval_du(0.0, 0.5), -0.5);
        // Central finite difference at (0.7, 0.3).
        let h = 1e-6;
        let fd = (f.eval(0.7 + h, 0.3) - f.eval(0.7 - h, 0.3)) / (2.0 * h);
        let an = f.eval_du(0.7, 0.3);
        assert!((fd - an).abs() / an.abs() < 1e-8);
        assert_eq!(f.eval_dmu(0.7, 0.3), -0.7);
    }

    #[test]
    fn oddness_holds_for_odd_kinds() {
        let kinds = [
            Nonlinearity::cubic_quintic(),
            Nonlinearity::normal_form_cubic(),
            Nonlinearity::odd_polynomial(vec![1.5, -0.3, -0.2]),
        ];
        for f in &kinds {
            assert!(f.is_odd());
            for i in 0..50 {
                let u = -1.5 + 3.0 * i as f64 / 49.0;
                let mu = 0.1 + 0.8 * i as f64 / 49.0;
                assert!((f.eval(-u, mu) + f.eval(u, mu)).abs() < 1e-14);
            }
        }
        assert!(!Nonlinearity::normal_form_fold().is_odd());
    }

    #[test]
    fn roots_closed_forms() {
        let f = Nonlinearity::cubic_quintic();
        let r = f.roots(1.0).unwrap();
        assert!((r.minus - 1.0).abs() < 1e-12 && (r.plus - 1.0).abs() < 1e-12);

        let r = f.roots(0.0).unwrap();
        assert_eq!(r.minus, 0.0);
        assert!((r.plus - SQRT2).abs() < 1e-14);

        let r = f.roots(0.75).unwrap();
        assert!((r.minus - libm::sqrt(0.5)).abs() < 1e-13);
        assert!((r.plus - libm::sqrt(1.5)).abs() < 1e-13);
        assert!(f.eval(r.minus, 0.75).abs() < 1e-12);
        assert!(f.eval(r.plus, 0.75).abs() < 1e-12);

        assert!(f.roots(-0.1).is_err());
        assert!(f.roots(1.1).is_err());
    }

    #[test]
    fn roots_sign_structure_matches_bistability() {
        let f = Nonlinearity::cubic_quintic();
        for i in 1..10 {
            let mu = i as f64 / 10.0;
            let r = f.roots(mu).unwrap();
            assert!(0.0 < r.minus && r.minus < r.plus);
            assert!(f.eval_du(0.0, mu) < 0.0);
            assert!(f.eval_du(r.minus, mu) > 0.0);
            assert!(f.eval_du(r.plus, mu) < 0.0);
        }
    }

    #[test]
    fn roots_scan_path_agrees_with_closed_form() {
        // Degree-7 polynomial equal to the cubic-quintic plus a tiny u^7 term.
        let f = Nonlinearity::odd_polynomial(vec![2.0, -1.0, 0.0]);
        let g = Nonlinearity::cubic_quintic();
        let rf = f.roots(0.4).unwrap();
        let rg = g.roots(0.4).unwrap();
        assert!((rf.minus - rg.minus).abs() < 1e-9);
        assert!((rf.plus - rg.plus).abs() < 1e-9);
    }

    #[test]
    fn normal_form_cubic_window() {
        let f = Nonlinearity::normal_form_cubic();
        let r = f.roots(0.1).unwrap();
        assert!(f.eval(r.minus, 0.1).abs() < 1e-13);
        assert!(f.eval(r.plus, 0.1).abs() < 1e-13);
        // Three-root structure collapses beyond mu = 1/4.
        assert!(f.roots(0.3).is_err());
    }

    #[test]
    fn coupling_row_cases() {
        let m1 = RingModel::cubic_quintic(6, 1, 1.0).unwrap();
        let constant = vec![0.7; 6];
        for n in 0..6 {
            assert_eq!(m1.coupling_row(&constant, n), 0.0);
        }
        let mut e1 = vec![0.0; 6];
        e1[0] = 1.0;
        // Node 2 (index 1): u1 + u3 - 2 u2 = 1.
        assert_eq!(m1.coupling_row(&e1, 1), 1.0);

        let m2 = RingModel::cubic_quintic(6, 2, 1.0).unwrap();
        assert_eq!(m2.coupling_row(&e1, 0), -4.0);
    }

    #[test]
    fn all_to_all_row() {
        let m = RingModel::cubic_quintic(6, 3, 1.0).unwrap();
        assert!(m.is_all_to_all());
        let u = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let sum: f64 = u.iter().sum();
        for n in 0..6 {
            assert!((m.coupling_row(&u, n) - (sum - 6.0 * u[n])).abs() < 1e-14);
        }
    }

    #[test]
    fn residual_zero_on_homogeneous_states() {
        let model = RingModel::cubic_quintic(6, 1, 0.37).unwrap();
        let u = model.homogeneous(0.42, HomogeneousRoot::Minus).unwrap();
        for r in model.residual(&u, 0.42) {
            assert!(r.abs() < 1e-13);
        }
    }

    #[test]
    fn single_node_seed_residual_concentrates_at_the_interface() {
        // Seed quality check: at small coupling the residual of the
        // one-node pattern is largest at the activated node and its two
        // neighbours, zero elsewhere.
        let model = RingModel::cubic_quintic(6, 1, 0.005).unwrap();
        let up = model.nonlinearity.roots(0.5).unwrap().plus;
        let mut u = vec![0.0; 6];
        u[0] = up;
        let res = model.residual(&u, 0.5);
        assert!(res.iter().any(|r| r.abs() > 1e-6));
        let mut order: Vec<usize> = (0..6).collect();
        order.sort_by(|&a, &b| res[b].abs().partial_cmp(&res[a].abs()).unwrap());
        assert_eq!(order[0], 0);
        assert_eq!({ let mut s = [order[1], order[2]]; s.sort_unstable(); s }, [1, 5]);
        assert!(res[2].abs() < 1e-15 && res[3].abs() < 1e-15 && res[4].abs() < 1e-15);
    }

    #[test]
    fn jacobian_diagonal_when_uncoupled() {
        let model = RingModel::cubic_quintic(5, 2, 0.0).unwrap();
        let u = [0.3, -0.1, 0.9, 0.0, 1.2];
        let j = model.jacobian(&u, 0.3);
        for r in 0..5 {
            for c in 0..5 {
                if r == c {
                    assert_eq!(j[(r, c)], model.nonlinearity.eval_du(u[r], 0.3));
                } else {
                    assert_eq!(j[(r, c)], 0.0);
                }
            }
        }
    }

    #[test]
    fn coupling_matrix_rows_sum_to_zero() {
        for (n, m) in [(6, 1), (8, 3), (20, 10), (9, 2)] {
            let model = RingModel::cubic_quintic(n, m, 1.0).unwrap();
            let l = model.coupling_matrix();
            for r in 0..n {
                let sum: f64 = l.row(r).iter().sum();
                assert!(sum.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let model = RingModel::cubic_quintic(8, 3, 0.02).unwrap();
        let u: Vec<f64> = (0..8).map(|i| -1.2 + 0.31 * i as f64).collect();
        let mu = 0.45;
        let j = model.jacobian(&u, mu);
        let h = 1e-6;
        let scale = j.max_abs();
        for c in 0..8 {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[c] += h;
            dn[c] -= h;
            let fu = model.residual(&up, mu);
            let fd = model.residual(&dn, mu);
            for r in 0..8 {
                let approx = (fu[r] - fd[r]) / (2.0 * h);
                assert!(
                    (approx - j[(r, c)]).abs() / scale < 1e-6,
                    "entry ({r},{c})"
                );
            }
        }
    }

    #[test]
    fn state_points_carry_their_own_coupling() {
        let model = RingModel::cubic_quintic(6, 1, 0.5).unwrap();
        let roots = model.nonlinearity.roots(0.4).unwrap();
        // Anti-continuum state: exact at d = 0 regardless of the model's d.
        let point = StatePoint::new(
            vec![roots.plus, 0.0, 0.0, 0.0, 0.0, 0.0],
            0.4,
            0.0,
        );
        assert!(point.all_finite());
        let res = model.residual_at(&point);
        assert!(res.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(RingModel::cubic_quintic(2, 1, 0.1).is_err());
        assert!(RingModel::cubic_quintic(6, 0, 0.1).is_err());
        assert!(RingModel::cubic_quintic(6, 4, 0.1).is_err());
        assert!(RingModel::cubic_quintic(6, 1, -0.1).is_err());
    }
}
