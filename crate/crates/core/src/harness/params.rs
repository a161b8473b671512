//! Parameter settings implied by the near-optimality analysis.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalParams {
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    /// Smallest `H >= 1` with `gamma^H / (1 - gamma) <= epsilon`.
    pub horizon: usize,
    /// Smallest `H >= 1` with `gamma^H / (1 - gamma) <= epsilon / 2`.
    pub horizon_half_epsilon: usize,
    /// Optimism parameter `eta = H`.
    pub eta: f64,
    /// Known-pair threshold `4 eta^2 / (epsilon (1 - gamma))`.
    pub m: f64,
    /// `|S| |A| eta^2 / (epsilon^2 (1 - gamma)^2)`, logarithms dropped.
    pub sample_complexity: f64,
    /// The dropped factor `ln(|S| |A| / delta)`.
    pub log_factor: f64,
}

fn horizon_for(target: f64, gamma: f64) -> usize {
    let h = (target * (1.0 - gamma)).ln() / gamma.ln();
    if h.is_finite() && h > 1.0 {
        h.ceil() as usize
    } else {
        1
    }
}

impl TheoreticalParams {
    pub fn m_for_eta(&self, eta: f64) -> f64 {
        4.0 * eta * eta / (self.epsilon * (1.0 - self.gamma))
    }
}

/// Requires `epsilon > 0` and `0 < gamma < 1`; other inputs yield NaN fields.
pub fn compute_theoretical_params(
    epsilon: f64,
    delta: f64,
    gamma: f64,
    n_states: usize,
    n_actions: usize,
) -> TheoreticalParams {
    let horizon = horizon_for(epsilon, gamma);
    let eta = horizon as f64;
    let pairs = (n_states * n_actions) as f64;
    let one_minus = 1.0 - gamma;
    TheoreticalParams {
        epsilon,
        delta,
        gamma,
        horizon,
        horizon_half_epsilon: horizon_for(epsilon / 2.0, gamma),
        eta,
        m: 4.0 * eta * eta / (epsilon * one_minus),
        sample_complexity: pairs * eta * eta / (epsilon * epsilon * one_minus * one_minus),
        log_factor: (pairs / delta).ln(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_setting() {
        let p = compute_theoretical_params(0.01, 0.1, 0.95, 5, 2);
        // ln(5e-4) / ln(0.95) = 148.18...
        assert_eq!(p.horizon, 149);
        assert!(0.95f64.powi(149) / 0.05 <= 0.01 && 0.95f64.powi(148) / 0.05 > 0.01);
        assert_eq!(p.horizon_half_epsilon, 162);
        assert!((p.m_for_eta(150.0) - 1.8e8).abs() < 1e-3);
        assert_eq!(p.eta, 149.0);
    }

    #[test]
    fn myopic_limit_clamps_to_one() {
        assert_eq!(compute_theoretical_params(0.5, 0.1, 1e-9, 1, 1).horizon, 1);
        assert_eq!(compute_theoretical_params(2.0, 0.1, 0.5, 1, 1).horizon, 1);
    }
}
