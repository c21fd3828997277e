//! Fixed-point-space reductions of the ring system.
//!
//! The steady-state map is equivariant under the dihedral group generated by
//! the rotation and the flip of the ring (and under all permutations in the
//! all-to-all regime). Restricting to a fixed-point subspace of a subgroup
//! yields a smaller square system whose solutions embed back into full ring
//! states with that symmetry. Three restrictions are supported:
//!
//! * `Full` — no reduction;
//! * `Kappa` — flip-invariant states, representatives `0..⌊N/2⌋+1`;
//! * `TwoBlock` — all-to-all states constant on the first `k` and the last
//!   `N-k` nodes, reduced to the pair `(v₁, v₂)`.
//!
//! The reduced residual is the full residual evaluated at representative
//! rows of the embedded state, with no re-weighting. Stability is always
//! judged from the full Jacobian elsewhere; reductions exist so the
//! corrector works on a square nonsingular-away-from-events system.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::Mat;
use crate::model::RingModel;

/// Rotation action: node `i` of the result reads node `i+1` of the input.
pub fn apply_rotation(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| u[(i + 1) % n]).collect()
}

/// Flip action fixing node 0 (and node `N/2` for even `N`).
pub fn apply_flip(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| u[(n - i) % n]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReductionError {
    /// The reduction does not fix a subspace compatible with the model's
    /// symmetry group (e.g. two-block with sparse coupling).
    Incompatible { reason: &'static str },
    /// Block size out of `1..=⌊N/2⌋`.
    BlockOutOfRange { k: usize, n: usize },
}

impl fmt::Display for ReductionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionError::Incompatible { reason } => {
                write!(f, "incompatible reduction: {reason}")
            }
            ReductionError::BlockOutOfRange { k, n } => {
                write!(f, "two-block size k = {k} out of range for N = {n}")
            }
        }
    }
}

impl core::error::Error for ReductionError {}

/// An embedding/projection pair onto a fixed-point subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryReduction {
    Full { n: usize },
    Kappa { n: usize },
    TwoBlock { n: usize, k: usize },
}

impl SymmetryReduction {
    pub fn full(model: &RingModel) -> Self {
        SymmetryReduction::Full {
            n: model.node_count(),
        }
    }

    pub fn kappa(model: &RingModel) -> Self {
        SymmetryReduction::Kappa {
            n: model.node_count(),
        }
    }

    /// Two-block reduction with the first `k` nodes in one block. The
    /// canonical block sizes are `1..=N/2`; values up to `N-1` describe
    /// the complementary split and are accepted so the `k ↔ N-k` exchange
    /// can be exercised directly.
    pub fn two_block(model: &RingModel, k: usize) -> Result<Self, ReductionError> {
        let n = model.node_count();
        if !model.is_all_to_all() {
            return Err(ReductionError::Incompatible {
                reason: "two-block states are only invariant under all-to-all coupling",
            });
        }
        if k < 1 || k >= n {
            return Err(ReductionError::BlockOutOfRange { k, n });
        }
        Ok(SymmetryReduction::TwoBlock { n, k })
    }

    pub fn full_dim(&self) -> usize {
        match *self {
            SymmetryReduction::Full { n }
            | SymmetryReduction::Kappa { n }
            | SymmetryReduction::TwoBlock { n, .. } => n,
        }
    }

    pub fn reduced_dim(&self) -> usize {
        match *self {
            SymmetryReduction::Full { n } => n,
            SymmetryReduction::Kappa { n } => n / 2 + 1,
            SymmetryReduction::TwoBlock { .. } => 2,
        }
    }

    /// Representative full-space index of each reduced coordinate.
    fn representative(&self, i: usize) -> usize {
        match *self {
            SymmetryReduction::Full { .. } | SymmetryReduction::Kappa { .. } => i,
            SymmetryReduction::TwoBlock { k, .. } => {
                if i == 0 {
                    0
                } else {
                    k
                }
            }
        }
    }

    /// Map reduced coordinates to the full symmetric state.
    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.reduced_dim(), "reduced dimension mismatch");
        match *self {
            SymmetryReduction::Full { .. } => x.to_vec(),
            SymmetryReduction::Kappa { n } => crate::patterns::flip_extend(x, n),
            SymmetryReduction::TwoBlock { n, k } => {
                let mut u = vec![x[1]; n];
                for slot in u.iter_mut().take(k) {
                    *slot = x[0];
                }
                u
            }
        }
    }

    /// Select representatives of a full state; left inverse of [`embed`].
    ///
    /// [`embed`]: SymmetryReduction::embed
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.full_dim(), "full dimension mismatch");
        (0..self.reduced_dim())
            .map(|i| u[self.representative(i)])
            .collect()
    }

    /// Linearization of the embedding as an `N × r` 0/1 matrix.
    pub fn embedding_matrix(&self) -> Mat {
        let n = self.full_dim();
        let r = self.reduced_dim();
        let mut e = Mat::zeros(n, r);
        for j in 0..r {
            let mut x = vec![0.0; r];
            x[j] = 1.0;
            let col = self.embed(&x);
            for i in 0..n {
                e[(i, j)] = col[i];
            }
        }
        e
    }

    /// How many full-space nodes each reduced coordinate represents.
    pub fn multiplicities(&self) -> Vec<usize> {
        let e = self.embedding_matrix();
        (0..self.reduced_dim())
            .map(|j| (0..self.full_dim()).filter(|&i| e[(i, j)] != 0.0).count())
            .collect()
    }

    /// Residual of the reduced system: representative rows of the full
    /// residual at the embedded state.
    pub fn reduced_residual(&self, model: &RingModel, x: &[f64], mu: f64) -> Vec<f64> {
        let full = self.embed(x);
        let res = model.residual(&full, mu);
        self.project(&res)
    }

    /// Jacobian of the reduced residual via the chain rule through the
    /// embedding: representative rows of `J_full · E`.
    pub fn reduced_jacobian(&self, model: &RingModel, x: &[f64], mu: f64) -> Mat {
        let full = self.embed(x);
        let jf = model.jacobian(&full, mu);
        let n = self.full_dim();
        let r = self.reduced_dim();
        let e = self.embedding_matrix();
        let mut out = Mat::zeros(r, r);
        for (i, row) in (0..r).map(|i| (i, self.representative(i))) {
            for j in 0..r {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += jf[(row, c)] * e[(c, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `∂/∂μ` of the reduced residual.
    pub fn reduced_residual_mu(&self, model: &RingModel, x: &[f64], mu: f64) -> Vec<f64> {
        let full = self.embed(x);
        let res = model.residual_mu(&full, mu);
        self.project(&res)
    }

    /// Eigenvalues of the reduced Jacobian.
    ///
    /// At embedded points the full Jacobian is symmetric and maps the
    /// fixed-point subspace to itself, so the reduced Jacobian is similar to
    /// a symmetric matrix via the square root of the node multiplicities.
    pub fn reduced_eigenvalues(&self, model: &RingModel, x: &[f64], mu: f64) -> Vec<f64> {
        let r = self.reduced_dim();
        let jr = self.reduced_jacobian(model, x, mu);
        let w: Vec<f64> = self
            .multiplicities()
            .iter()
            .map(|&m| libm::sqrt(m as f64))
            .collect();
        let sym = Mat::from_fn(r, r, |i, j| jr[(i, j)] * w[i] / w[j]);
        crate::linalg::symmetric_eigenvalues(&sym)
    }
}
