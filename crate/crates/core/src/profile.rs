//! Velocity profiles used for collision kernels and initial data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `int_{-1}^{1} exp(-1 / (1 - s^2)) ds`.
pub const BUMP_INTEGRAL: f64 = 0.443_993_816_168_079_4;

/// Unit bump `exp(-1 / (1 - s^2))` on `(-1, 1)`, zero elsewhere.
pub fn unit_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// A function of velocity alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityProfile {
    Zero,
    /// Smooth compactly supported bump with total integral `mass`.
    Bump {
        center: f64,
        half_width: f64,
        #[serde(default = "default_mass")]
        mass: f64,
    },
    /// Constant `value` on the whole velocity interval.
    Flat {
        value: f64,
    },
}

fn default_mass() -> f64 {
    1.0
}

impl VelocityProfile {
    pub fn bump(center: f64, half_width: f64, mass: f64) -> Self {
        VelocityProfile::Bump {
            center,
            half_width,
            mass,
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            VelocityProfile::Zero => 0.0,
            VelocityProfile::Bump {
                center,
                half_width,
                mass,
            } => mass / (BUMP_INTEGRAL * half_width) * unit_bump((v - center) / half_width),
            VelocityProfile::Flat { value } => value,
        }
    }

    /// Closed support, or `None` for the zero profile. `Flat` reports the full line.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            VelocityProfile::Zero => None,
            VelocityProfile::Bump { center, half_width, .. } => Some((center - half_width, center + half_width)),
            VelocityProfile::Flat { .. } => Some((f64::NEG_INFINITY, f64::INFINITY)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            VelocityProfile::Zero => true,
            VelocityProfile::Bump { mass, .. } => mass == 0.0,
            VelocityProfile::Flat { value } => value == 0.0,
        }
    }

    /// Checks the parameters and that the support lies inside `interval`.
    pub fn validate(&self, interval: (f64, f64)) -> Result<()> {
        match *self {
            VelocityProfile::Zero => Ok(()),
            VelocityProfile::Flat { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("value", "must be finite"))
                }
            }
            VelocityProfile::Bump {
                center,
                half_width,
                mass,
            } => {
                if !(half_width > 0.0) || !center.is_finite() || !mass.is_finite() {
                    return Err(Error::invalid(
                        "half_width",
                        "bump needs a positive width and finite center and mass",
                    ));
                }
                let (lo, hi) = (center - half_width, center + half_width);
                if lo < interval.0 || hi > interval.1 {
                    return Err(Error::BumpOutsideInterval { lo, hi });
                }
                Ok(())
            }
        }
    }
}
