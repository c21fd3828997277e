//! Leading-order location laws for the folds and branch points of the ring
//! system at small coupling, in two coordinate frames, plus the power-law
//! fitting harness used to verify them against detected events.
//!
//! Frames: `NormalForm` states the laws for the small-amplitude normal form
//! `f = -μu + u³` (and its fold-side analogue `μ̌ - ǔ²`); `RawCubicQuintic`
//! restates them for the default law `f = -μu + 2u³ - u⁵`, whose cubic
//! coefficient 2 and fold-side quadratic coefficient 4 rescale some
//! prefactors.
//!
//! The unified left-fold prefactor with `a` active neighbours is
//! `3 (a²/4)^{1/3}` in the normal-form frame. For `a = 1` the literature
//! also circulates the value `3/∛2`; both are available here with explicit
//! provenance so a numerical fit can adjudicate, and the fitted answer in
//! this crate's verification suite matches `3/∛4`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use core::fmt;

/// Where a law's constant comes from: stated as such in the source
/// analysis, or derived/checked by this crate's own oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Stated,
    OracleDerived,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawFrame {
    NormalForm,
    RawCubicQuintic,
}

impl fmt::Display for LawFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawFrame::NormalForm => write!(f, "normal-form"),
            LawFrame::RawCubicQuintic => write!(f, "raw-cubic-quintic"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AsymptoticsError {
    /// Corner parametrization angle outside `(0, π/2)`.
    DomainError { phi: f64 },
    /// Power-law fit needs at least 3 samples spanning a decade in `d`.
    InsufficientSamples,
    /// Samples must have positive `d` and positive transformed ordinate.
    InvalidSample,
}

impl fmt::Display for AsymptoticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AsymptoticsError::DomainError { phi } => {
                write!(f, "angle {phi} outside (0, pi/2)")
            }
            AsymptoticsError::InsufficientSamples => {
                write!(f, "need at least 3 samples spanning one decade in d")
            }
            AsymptoticsError::InvalidSample => write!(f, "samples must be positive"),
        }
    }
}

impl core::error::Error for AsymptoticsError {}

/// Left fold of a plateau edge with `a` active neighbours:
/// `μ_l(d) = A a^{2/3}-type prefactor · d^{2/3}` to leading order.
pub fn fold_left(frame: LawFrame, active: usize, d: f64) -> f64 {
    let a = active as f64;
    let d23 = libm::cbrt(d * d);
    match frame {
        LawFrame::NormalForm => 3.0 * libm::cbrt(a * a / 4.0) * d23,
        LawFrame::RawCubicQuintic => 3.0 * libm::cbrt(a * a) * d23,
    }
}

/// The stated normal-form left-fold prefactor: for a single active
/// neighbour the stated value is `3/∛2`, which disagrees with the unified
/// law's `3/∛4`; kept verbatim for adjudication.
pub fn fold_left_stated(active: usize, d: f64) -> f64 {
    let d23 = libm::cbrt(d * d);
    if active == 1 {
        3.0 / libm::cbrt(2.0) * d23
    } else {
        fold_left(LawFrame::NormalForm, active, d)
    }
}

/// Right fold of an interface with `c` inactive neighbours:
/// `μ_r(d) = 1 - c d` to leading order. The quadratic coefficient of the
/// fold normal form cancels from the fold condition, so the leading term is
/// the same in both frames.
pub fn fold_right(_frame: LawFrame, inactive: usize, d: f64) -> f64 {
    1.0 - inactive as f64 * d
}

/// Symmetry-breaking point on the homogeneous branch near `μ = 0`:
/// `μ_sb(d) = N d / 2` in both frames (the cubic coefficient cancels).
pub fn branch_point_left(_frame: LawFrame, n: usize, d: f64) -> f64 {
    n as f64 * d / 2.0
}

/// Symmetry-breaking point on the homogeneous branch near `μ = 1`:
/// `1 - (N d / 2)²` in the normal-form frame; the raw quadratic
/// coefficient 4 halves the offset twice, giving `1 - (N d / 4)²`.
pub fn branch_point_right(frame: LawFrame, n: usize, d: f64) -> f64 {
    let gap = match frame {
        LawFrame::NormalForm => n as f64 * d / 2.0,
        LawFrame::RawCubicQuintic => n as f64 * d / 4.0,
    };
    1.0 - gap * gap
}

/// Fold on the two-block connection near `(u, μ) = (1, 1)`:
/// `1 - k (N-k) d²` in the normal-form frame, `1 - k (N-k) d² / 4` in the
/// raw frame. The raw constant is pinned by this crate's continuation
/// oracle (see the verification suite), provenance [`Provenance::OracleDerived`].
pub fn fold_all_to_all_right_corner(frame: LawFrame, n: usize, k: usize, d: f64) -> f64 {
    let factor = (k * (n - k)) as f64;
    match frame {
        LawFrame::NormalForm => 1.0 - factor * d * d,
        LawFrame::RawCubicQuintic => 1.0 - factor * d * d / 4.0,
    }
}

/// The ratio `μ/d` along the lower-left two-block branch as a function of
/// the angle `φ` between the blocks:
/// `μ̃(φ) = (k cos³φ + (N-k) sin³φ) / ((cosφ + sinφ) cosφ sinφ)`.
/// Identical in both frames.
pub fn corner_mu_ratio(n: usize, k: usize, phi: f64) -> f64 {
    let (c, s) = (libm::cos(phi), libm::sin(phi));
    let kk = k as f64;
    let nk = (n - k) as f64;
    (kk * c * c * c + nk * s * s * s) / ((c + s) * c * s)
}

/// Leading-order two-block state near the origin corner, parametrized by
/// amplitude `s` and angle `φ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerPoint {
    pub v1: f64,
    pub v2: f64,
    pub d: f64,
    pub mu: f64,
}

/// `(v₁, v₂, d, μ)(φ, s)` for the branch of two-block states near
/// `(u, μ) = (0, 0)`. In the raw frame the cubic coefficient 2 doubles the
/// `s²` scale of both `d` and `μ`, leaving the ratio `μ/d` unchanged.
pub fn corner_parametrization(
    n: usize,
    k: usize,
    phi: f64,
    s: f64,
    frame: LawFrame,
) -> Result<CornerPoint, AsymptoticsError> {
    if !(phi > 0.0 && phi < FRAC_PI_2) {
        return Err(AsymptoticsError::DomainError { phi });
    }
    let (c, sn) = (libm::cos(phi), libm::sin(phi));
    let kk = k as f64;
    let nk = (n - k) as f64;
    let scale = match frame {
        LawFrame::NormalForm => 1.0,
        LawFrame::RawCubicQuintic => 2.0,
    };
    let d = scale * (c + sn) * c * sn / (kk * c + nk * sn) * s * s;
    let mu = corner_mu_ratio(n, k, phi) * d;
    Ok(CornerPoint {
        v1: s * c,
        v2: s * sn,
        d,
        mu,
    })
}

/// Minimize `μ̃(φ)` over `(0, π/4]` by golden-section search; the minimum
/// times `d` is the interior fold location `μ_fd(d)` of the lower-left
/// corner branch. Returns `(φ*, μ̃(φ*))`.
pub fn corner_mu_ratio_min(n: usize, k: usize) -> (f64, f64) {
    let f = |phi: f64| corner_mu_ratio(n, k, phi);
    let inv_gr = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut a = 1e-9;
    let mut b = FRAC_PI_4;
    let mut c = b - inv_gr * (b - a);
    let mut d = a + inv_gr * (b - a);
    for _ in 0..200 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_gr * (b - a);
        d = a + inv_gr * (b - a);
        if (b - a).abs() < 1e-14 {
            break;
        }
    }
    let phi = 0.5 * (a + b);
    (phi, f(phi))
}

/// Interior fold of the lower-left corner branch: `μ_fd(d) = min μ̃ · d`.
pub fn corner_interior_fold(n: usize, k: usize, d: f64) -> f64 {
    corner_mu_ratio_min(n, k).1 * d
}

/// Power-law model fitted against detected events.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerLawModel {
    /// `μ = A d^p`
    Mu,
    /// `1 - μ = A d^p`
    OneMinusMu,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub amplitude: f64,
    pub exponent: f64,
    pub max_rel_residual: f64,
}

/// Least-squares fit of `(d, μ)` samples in log–log coordinates.
pub fn fit_power_law(
    samples: &[(f64, f64)],
    model: PowerLawModel,
) -> Result<PowerLawFit, AsymptoticsError> {
    if samples.len() < 3 {
        return Err(AsymptoticsError::InsufficientSamples);
    }
    let d_min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let d_max = samples.iter().map(|s| s.0).fold(0.0f64, f64::max);
    if d_min <= 0.0 || !d_min.is_finite() || d_max / d_min < 10.0 {
        return Err(AsymptoticsError::InsufficientSamples);
    }
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for &(d, mu) in samples {
        let y = match model {
            PowerLawModel::Mu => mu,
            PowerLawModel::OneMinusMu => 1.0 - mu,
        };
        if !(y > 0.0 && d > 0.0) {
            return Err(AsymptoticsError::InvalidSample);
        }
        xs.push(libm::log(d));
        ys.push(libm::log(y));
    }
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let amplitude = libm::exp((sy - exponent * sx) / m);

    let mut max_rel = 0.0f64;
    for &(d, mu) in samples {
        let y = match model {
            PowerLawModel::Mu => mu,
            PowerLawModel::OneMinusMu => 1.0 - mu,
        };
        let pred = amplitude * libm::pow(d, exponent);
        max_rel = max_rel.max((pred - y).abs() / y.abs());
    }
    Ok(PowerLawFit {
        amplitude,
        exponent,
        max_rel_residual: max_rel,
    })
}

/// A predicted event location as a function of `d`, carrying its frame and
/// provenance; the unit the verification report is built from.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticLaw {
    pub name: String,
    pub frame: LawFrame,
    pub provenance: Provenance,
    pub kind: LawKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LawKind {
    FoldLeft { active: usize },
    FoldLeftStated { active: usize },
    FoldRight { inactive: usize },
    BranchPointLeft { n: usize },
    BranchPointRight { n: usize },
    CornerFoldRight { n: usize, k: usize },
    CornerFoldInterior { n: usize, k: usize },
}

impl AsymptoticLaw {
    pub fn new(name: &str, frame: LawFrame, provenance: Provenance, kind: LawKind) -> Self {
        AsymptoticLaw {
            name: String::from(name),
            frame,
            provenance,
            kind,
        }
    }

    pub fn predict(&self, d: f64) -> f64 {
        match self.kind {
            LawKind::FoldLeft { active } => fold_left(self.frame, active, d),
            LawKind::FoldLeftStated { active } => fold_left_stated(active, d),
            LawKind::FoldRight { inactive } => fold_right(self.frame, inactive, d),
            LawKind::BranchPointLeft { n } => branch_point_left(self.frame, n, d),
            LawKind::BranchPointRight { n } => branch_point_right(self.frame, n, d),
            LawKind::CornerFoldRight { n, k } => {
                fold_all_to_all_right_corner(self.frame, n, k, d)
            }
            LawKind::CornerFoldInterior { n, k } => corner_interior_fold(n, k, d),
        }
    }

    /// Exponent of the leading term in the natural fit coordinates
    /// (`μ` for left-side laws, `1 - μ` for right-side laws).
    pub fn exponent(&self) -> f64 {
        match self.kind {
            LawKind::FoldLeft { .. } | LawKind::FoldLeftStated { .. } => 2.0 / 3.0,
            LawKind::FoldRight { .. }
            | LawKind::BranchPointLeft { .. }
            | LawKind::CornerFoldInterior { .. } => 1.0,
            LawKind::BranchPointRight { .. } | LawKind::CornerFoldRight { .. } => 2.0,
        }
    }

    pub fn fit_model(&self) -> PowerLawModel {
        match self.kind {
            LawKind::FoldLeft { .. }
            | LawKind::FoldLeftStated { .. }
            | LawKind::BranchPointLeft { .. }
            | LawKind::CornerFoldInterior { .. } => PowerLawModel::Mu,
            _ => PowerLawModel::OneMinusMu,
        }
    }

    /// Leading coefficient in the fit coordinates.
    pub fn amplitude(&self) -> f64 {
        let probe = 1e-4;
        match self.fit_model() {
            PowerLawModel::Mu => self.predict(probe) / libm::pow(probe, self.exponent()),
            PowerLawModel::OneMinusMu => {
                (1.0 - self.predict(probe)) / libm::pow(probe, self.exponent())
            }
        }
    }
}
