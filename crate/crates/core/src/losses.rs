//! Loss families `rho` with their derivative hierarchy `psi`, `psi'`, `psi''`.
//!
//! * Squared: `t^2 / 2`.
//! * Huber(α): `t^2 / 2` on `|t| <= α`, `α(|t| - α/2)` outside.
//! * Welsch(α): `(1 - exp(-α t^2 / 2)) / α`; α = 0 is the squared-loss limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossFamily {
    Squared,
    Huber,
    Welsch,
}

impl std::fmt::Display for LossFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossFamily::Squared => "squared",
            LossFamily::Huber => "huber",
            LossFamily::Welsch => "welsch",
        })
    }
}

impl std::str::FromStr for LossFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "squared" | "ls" => Ok(LossFamily::Squared),
            "huber" => Ok(LossFamily::Huber),
            "welsch" => Ok(LossFamily::Welsch),
            other => Err(Error::InvalidSpec(format!("unknown loss family {other:?}"))),
        }
    }
}

/// A validated loss: family plus tuning parameter α.
///
/// Serialized as `{"family": "huber", "alpha": 1.0}`. Construction and
/// deserialization both reject invalid α, so evaluation never fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLossSpec<F>", into = "RawLossSpec<F>")]
#[serde(bound(
    serialize = "F: Scalar + Serialize",
    deserialize = "F: Scalar + Deserialize<'de>"
))]
pub struct LossSpec<F> {
    family: LossFamily,
    alpha: F,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawLossSpec<F> {
    family: LossFamily,
    #[serde(default = "Option::default")]
    alpha: Option<F>,
}

impl<F: Scalar> TryFrom<RawLossSpec<F>> for LossSpec<F> {
    type Error = Error;

    fn try_from(raw: RawLossSpec<F>) -> Result<Self> {
        LossSpec::new(raw.family, raw.alpha.unwrap_or_else(F::zero))
    }
}

impl<F: Scalar> From<LossSpec<F>> for RawLossSpec<F> {
    fn from(spec: LossSpec<F>) -> Self {
        RawLossSpec {
            family: spec.family,
            alpha: Some(spec.alpha),
        }
    }
}

/// Per-derivative sup-norm bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBounds<F> {
    /// Bound on `|psi|`; infinite for the squared loss.
    pub l_psi: F,
    /// Bound on `|psi'|`.
    pub l_psi1: F,
    /// Bound on `|psi''|`.
    pub l_psi2: F,
}

impl<F: Scalar> LossBounds<F> {
    /// `max(l_psi, l_psi1, l_psi2)`, the single constant bounding all three.
    pub fn universal(&self) -> F {
        self.l_psi.max(self.l_psi1).max(self.l_psi2)
    }
}

impl<F: Scalar> LossSpec<F> {
    pub fn new(family: LossFamily, alpha: F) -> Result<Self> {
        if !alpha.is_finite() && family != LossFamily::Huber {
            return Err(Error::InvalidSpec(format!("alpha must be finite, got {alpha}")));
        }
        if alpha.is_nan() || alpha < F::zero() {
            return Err(Error::InvalidSpec(format!("alpha must be nonnegative, got {alpha}")));
        }
        if family == LossFamily::Huber && alpha <= F::zero() {
            return Err(Error::InvalidSpec(format!(
                "huber loss requires alpha > 0, got {alpha}"
            )));
        }
        let alpha = if family == LossFamily::Squared { F::zero() } else { alpha };
        Ok(Self { family, alpha })
    }

    pub fn squared() -> Self {
        Self {
            family: LossFamily::Squared,
            alpha: F::zero(),
        }
    }

    pub fn huber(alpha: F) -> Result<Self> {
        Self::new(LossFamily::Huber, alpha)
    }

    pub fn welsch(alpha: F) -> Result<Self> {
        Self::new(LossFamily::Welsch, alpha)
    }

    pub fn family(&self) -> LossFamily {
        self.family
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    /// True when the loss is the plain quadratic (Squared, or Welsch with α = 0).
    pub fn is_quadratic(&self) -> bool {
        match self.family {
            LossFamily::Squared => true,
            LossFamily::Welsch => self.alpha == F::zero(),
            LossFamily::Huber => false,
        }
    }

    /// Convex families: every Huber and the quadratic.
    pub fn is_convex(&self) -> bool {
        self.family != LossFamily::Welsch || self.is_quadratic()
    }

    pub fn cast<G: Scalar>(&self) -> LossSpec<G> {
        LossSpec {
            family: self.family,
            alpha: G::of(self.alpha.to_f64_lossy()),
        }
    }

    pub fn rho(&self, t: F) -> F {
        let half = F::of(0.5);
        if self.is_quadratic() {
            return half * t * t;
        }
        let a = self.alpha;
        match self.family {
            LossFamily::Huber => {
                let at = t.abs();
                if at <= a {
                    half * t * t
                } else {
                    a * (at - half * a)
                }
            }
            // -expm1 keeps the small-α limit t^2/2 accurate
            LossFamily::Welsch => -(-a * t * t * half).exp_m1() / a,
            LossFamily::Squared => unreachable!(),
        }
    }

    pub fn psi(&self, t: F) -> F {
        if self.is_quadratic() {
            return t;
        }
        let a = self.alpha;
        match self.family {
            LossFamily::Huber => {
                if t.abs() <= a {
                    t
                } else {
                    a.copysign(t)
                }
            }
            LossFamily::Welsch => t * (-a * t * t * F::of(0.5)).exp(),
            LossFamily::Squared => unreachable!(),
        }
    }

    /// Huber returns 1 at the corner `|t| = α`.
    pub fn psi_prime(&self, t: F) -> F {
        if self.is_quadratic() {
            return F::one();
        }
        let a = self.alpha;
        match self.family {
            LossFamily::Huber => {
                if t.abs() <= a {
                    F::one()
                } else {
                    F::zero()
                }
            }
            LossFamily::Welsch => {
                let at2 = a * t * t;
                (-at2 * F::of(0.5)).exp() * (F::one() - at2)
            }
            LossFamily::Squared => unreachable!(),
        }
    }

    /// Huber's third derivative is taken as 0 everywhere, including the corner.
    pub fn psi_double_prime(&self, t: F) -> F {
        match self.family {
            LossFamily::Welsch if !self.is_quadratic() => {
                let a = self.alpha;
                let at2 = a * t * t;
                (-at2 * F::of(0.5)).exp() * a * t * (at2 - F::of(3.0))
            }
            _ => F::zero(),
        }
    }

    /// Sup-norm bounds on `psi`, `psi'`, `psi''`.
    ///
    /// For Welsch the `psi` bound is the loose `sqrt(e/α)` that the closed-form
    /// radii are built on; [`LossSpec::tight_psi_bound`] gives the exact sup.
    pub fn bounds(&self) -> LossBounds<F> {
        if self.is_quadratic() {
            return LossBounds {
                l_psi: F::infinity(),
                l_psi1: F::one(),
                l_psi2: F::zero(),
            };
        }
        let a = self.alpha;
        match self.family {
            LossFamily::Huber => LossBounds {
                l_psi: a,
                l_psi1: F::one(),
                l_psi2: F::zero(),
            },
            LossFamily::Welsch => LossBounds {
                l_psi: (F::E() / a).sqrt(),
                l_psi1: F::one(),
                l_psi2: F::of(1.5) * a.sqrt(),
            },
            LossFamily::Squared => unreachable!(),
        }
    }

    /// Exact `sup |psi|`: `1/sqrt(α e)` for Welsch, α for Huber.
    pub fn tight_psi_bound(&self) -> F {
        if self.is_quadratic() {
            return F::infinity();
        }
        match self.family {
            LossFamily::Welsch => F::one() / (self.alpha * F::E()).sqrt(),
            _ => self.alpha,
        }
    }
}
