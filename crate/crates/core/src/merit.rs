//! Merit function, merit-parameter update, acceptance test and proximal
//! parameter updates.

use serde::{Deserialize, Serialize};

use crate::linalg::dot;
use crate::Scalar;

/// Smallest admissible merit parameter.
pub const TAU_FLOOR: f64 = 1e-12;
/// Smallest admissible proximal parameter.
pub const ALPHA_FLOOR: f64 = 1e-16;

/// Proximal-parameter update after an accepted step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    /// `α_{k+1} = α_k`.
    Hold,
    /// `α_{k+1} = max{α_k/ξ, α_cap}`.
    VerbatimMax,
    /// `α_{k+1} = min{α_k/ξ, α_cap}`.
    #[default]
    MinCap,
}

impl std::str::FromStr for AlphaRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hold" => Ok(Self::Hold),
            "verbatim_max" => Ok(Self::VerbatimMax),
            "min_cap" => Ok(Self::MinCap),
            other => Err(format!(
                "unknown alpha rule `{other}` (expected hold, min_cap or verbatim_max)"
            )),
        }
    }
}

/// Cached pieces of `Φ_τ(x) = τ(f + r) + ‖c‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct MeritParts<T: Scalar> {
    pub f: T,
    pub r: T,
    pub c_norm: T,
}

impl<T: Scalar> MeritParts<T> {
    pub fn value(&self, tau: T) -> T {
        merit_value(self.f, self.r, self.c_norm, tau)
    }

    pub fn is_finite(&self) -> bool {
        self.f.is_finite() && self.r.is_finite() && self.c_norm.is_finite()
    }
}

pub fn merit_value<T: Scalar>(f: T, r: T, c_norm: T, tau: T) -> T {
    tau * (f + r) + c_norm
}

/// `A = gᵀs + ‖s‖²/(2α) + r(x + s) − r(x)`.
pub fn compute_ak<T: Scalar>(g: &[T], s: &[T], alpha: T, r_at_xs: T, r_at_x: T) -> T {
    dot(g, s) + dot(s, s) / (T::lit(2.0) * alpha) + r_at_xs - r_at_x
}

/// `∞` when `A ≤ 0`, otherwise `(1 − σ_c)·gain / A` with
/// `gain = ‖c‖ − ‖c + Js‖`.
pub fn tau_trial<T: Scalar>(a_k: T, c_norm: T, lin_norm: T, sigma_c: T) -> T {
    if a_k <= T::zero() {
        T::infinity()
    } else {
        (T::one() - sigma_c) * (c_norm - lin_norm) / a_k
    }
}

/// Keeps `τ_prev` when it already satisfies the trial bound, otherwise
/// `min{(1 − ε_τ)τ_prev, τ_trial}`.
pub fn update_tau<T: Scalar>(tau_prev: T, tau_trial: T, eps_tau: T) -> T {
    if tau_prev <= tau_trial {
        tau_prev
    } else {
        ((T::one() - eps_tau) * tau_prev).min(tau_trial)
    }
}

/// Right-hand side `−η_Φ(τ‖s‖²/(4α) + σ_c·gain)` of the acceptance test.
pub fn required_decrease<T: Scalar>(
    tau: T,
    alpha: T,
    s_norm_sq: T,
    gain: T,
    eta_phi: T,
    sigma_c: T,
) -> T {
    -eta_phi * (tau / (T::lit(4.0) * alpha) * s_norm_sq + sigma_c * gain)
}

/// Acceptance slack `1e-14·(1 + |Φ_old|)`.
pub fn acceptance_slack<T: Scalar>(phi_old: T) -> T {
    T::lit(1e-14) * (T::one() + phi_old.abs())
}

#[allow(clippy::too_many_arguments)]
pub fn sufficient_decrease<T: Scalar>(
    phi_new: T,
    phi_old: T,
    tau: T,
    alpha: T,
    s: &[T],
    c_norm: T,
    lin_norm: T,
    eta_phi: T,
    sigma_c: T,
) -> bool {
    let rhs = required_decrease(tau, alpha, dot(s, s), c_norm - lin_norm, eta_phi, sigma_c);
    phi_new - phi_old <= rhs + acceptance_slack(phi_old)
}

pub fn update_alpha<T: Scalar>(
    alpha: T,
    accepted: bool,
    rule: AlphaRule,
    xi: T,
    alpha_cap: T,
) -> T {
    if !accepted {
        return xi * alpha;
    }
    match rule {
        AlphaRule::Hold => alpha,
        AlphaRule::VerbatimMax => (alpha / xi).max(alpha_cap),
        AlphaRule::MinCap => (alpha / xi).min(alpha_cap),
    }
}
