//! Analytic object kernels.
//!
//! The Tricube kernel `(1 - |u|^3)^gamma * (1 - |v|^3)^gamma` has compact
//! rectangular support `|u|, |v| <= 1`, peaks at 1 in the middle and falls to
//! 0 on the support edge. Its level sets are rounded rectangles, so a
//! thresholded kernel still carries the box orientation. Three alternative
//! families are kept for ablations: a truncated Gaussian (circular level
//! sets), a binary rectangle and a binary rectangle shrunk toward the center.
//!
//! Coordinates `(u, v)` are normalized box coordinates: `u` runs along the
//! `w` side and `v` along the `h` side, both in `[-1, 1]` inside the box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 7.0;
/// Gaussian std as a fraction of the half-extent; the support edge sits at 3 sigma.
pub const DEFAULT_SIGMA_FRAC: f64 = 1.0 / 3.0;
pub const DEFAULT_SHRINK: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Tricube,
    Gaussian,
    BinaryRect,
    EffectiveRect,
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tricube" => Ok(Self::Tricube),
            "gaussian" => Ok(Self::Gaussian),
            "binary" | "binary_rect" => Ok(Self::BinaryRect),
            "effective" | "effective_rect" => Ok(Self::EffectiveRect),
            other => Err(Error::InvalidKernel(format!(
                "unknown kernel family {other:?} (expected tricube|gaussian|binary|effective)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Tricube shape exponent.
    pub gamma: f64,
    /// Gaussian std over the half-extent.
    pub sigma_frac: f64,
    /// Fraction by which the effective rectangle is shrunk.
    pub shrink: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::tricube(DEFAULT_GAMMA)
    }
}

impl KernelSpec {
    pub fn tricube(gamma: f64) -> Self {
        Self {
            family: KernelFamily::Tricube,
            gamma,
            sigma_frac: DEFAULT_SIGMA_FRAC,
            shrink: DEFAULT_SHRINK,
        }
    }

    pub fn gaussian(sigma_frac: f64) -> Self {
        Self {
            family: KernelFamily::Gaussian,
            sigma_frac,
            ..Self::default()
        }
    }

    pub fn binary_rect() -> Self {
        Self {
            family: KernelFamily::BinaryRect,
            ..Self::default()
        }
    }

    pub fn effective_rect(shrink: f64) -> Self {
        Self {
            family: KernelFamily::EffectiveRect,
            shrink,
            ..Self::default()
        }
    }

    /// Default parameters for `family`.
    pub fn for_family(family: KernelFamily) -> Self {
        Self {
            family,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidKernel(format!("gamma must be >= 1, got {}", self.gamma)));
        }
        if !(self.sigma_frac > 0.0 && self.sigma_frac.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "sigma_frac must be > 0, got {}",
                self.sigma_frac
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidKernel(format!(
                "shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        eval_kernel(u, v, self)
    }
}

/// 1D Tricube profile `(1 - x^3)^gamma` for `x` in `[0, 1]`.
#[inline]
pub fn profile_level(x: f64, gamma: f64) -> f64 {
    let x = x.abs();
    if x >= 1.0 {
        return 0.0;
    }
    (1.0 - x * x * x).powf(gamma)
}

/// Separable 2D Tricube kernel, 0 outside `|u|, |v| <= 1`.
#[inline]
pub fn eval_tricube(u: f64, v: f64, gamma: f64) -> f64 {
    if u.abs() > 1.0 || v.abs() > 1.0 {
        return 0.0;
    }
    profile_level(u, gamma) * profile_level(v, gamma)
}

pub fn eval_kernel(u: f64, v: f64, spec: &KernelSpec) -> f64 {
    let (au, av) = (u.abs(), v.abs());
    if au > 1.0 || av > 1.0 {
        return 0.0;
    }
    match spec.family {
        KernelFamily::Tricube => eval_tricube(u, v, spec.gamma),
        KernelFamily::Gaussian => {
            let s = spec.sigma_frac;
            (-(u * u + v * v) / (2.0 * s * s)).exp()
        }
        KernelFamily::BinaryRect => 1.0,
        KernelFamily::EffectiveRect => {
            let edge = 1.0 - spec.shrink;
            if au <= edge && av <= edge {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Factor that restores a Tricube footprint thresholded at `tau` to the full
/// kernel extent.
///
/// The 1D profile `(1 - |x|^3)^gamma` crosses `tau` at
/// `x_tau = (1 - tau^(1/gamma))^(1/3)`, so `s = 1 / x_tau`. This goes to 1 as
/// `tau -> 0`, where thresholding removes nothing. The closed form
/// `1 / (1 - (1 - |tau|^3)^gamma)` that is sometimes quoted for this factor
/// is not the inverse of that profile: it diverges at `tau -> 0` and falls
/// below 1 for larger `tau`, so it is not used here.
pub fn scale_factor(tau: f64, gamma: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::TauOutOfRange(tau));
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::InvalidKernel(format!("gamma must be >= 1, got {gamma}")));
    }
    Ok((1.0 - tau.powf(1.0 / gamma)).powf(-1.0 / 3.0))
}
