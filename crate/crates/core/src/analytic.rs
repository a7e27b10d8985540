//! Closed-form reference solutions for the chain schemes, used as
//! independent checks on the numerical engines.

use crate::error::{Error, Result};

/// Controlled-subspace population of the bare two-level scheme:
/// P0(t) = cos^2(xi t).
pub fn p0_two_level(xi: f64, t: f64) -> f64 {
    (xi * t).cos().powi(2)
}

/// Exact P0(t) of the coherent three-level chain started in |0>, with
/// mu^2 = omega^2 + xi^2:
///
/// P0 = (2 omega^4 + xi^4)/(2 mu^4)
///    + (2 omega^2 xi^2 / mu^4) cos(mu t)
///    + (xi^4 / (2 mu^4)) cos(2 mu t)
pub fn p0_three_level_exact(xi: f64, omega: f64, t: f64) -> f64 {
    let mu2 = omega * omega + xi * xi;
    assert!(mu2 > 0.0, "xi and omega cannot both vanish");
    let mu = mu2.sqrt();
    let mu4 = mu2 * mu2;
    let (o2, x2) = (omega * omega, xi * xi);
    (2.0 * o2 * o2 + x2 * x2) / (2.0 * mu4)
        + (2.0 * o2 * x2 / mu4) * (mu * t).cos()
        + (x2 * x2 / (2.0 * mu4)) * (2.0 * mu * t).cos()
}

/// First order in xi^2/omega^2: P0 = 1 - (2 xi^2/omega^2)(1 - cos(omega t)).
pub fn p0_three_level_first_order(xi: f64, omega: f64, t: f64) -> f64 {
    assert!(omega > 0.0, "first-order form needs omega > 0");
    1.0 - (2.0 * xi * xi / (omega * omega)) * (1.0 - (omega * t).cos())
}

/// Steady-state P0 of the dissipative two-level scheme,
/// (gamma^2 + 4 xi^2) / (gamma^2 + 8 xi^2): the fixed point of its 2x2
/// rate system.
pub fn steady_state_two_level(xi: f64, gamma: f64) -> Result<f64> {
    if gamma <= 0.0 {
        return Err(Error::NoSteadyState(
            "two-level scheme needs gamma > 0 to relax".into(),
        ));
    }
    let (g2, x2) = (gamma * gamma, xi * xi);
    Ok((g2 + 4.0 * x2) / (g2 + 8.0 * x2))
}
