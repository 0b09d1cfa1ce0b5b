//! Boundary value, equation assembly and collocation solve in one call.

use crate::boundary::{phi0, Phi0Result};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_rule, MAX_ORDER};
use crate::risk_model::{build_gs_vie, ClaimModel, PenaltyKind, RiskParams};
use crate::vie::{solve, CollocationConfig, CollocationSolution, VieProblem};

/// Gauss order used for the block matrices: m + 6.
pub fn default_rule_order(m: usize) -> usize {
    (m + 6).min(MAX_ORDER)
}

/// A solved Gerber–Shiu function on [0, T].
#[derive(Debug, Clone)]
pub struct GsSolution {
    pub phi0: Phi0Result,
    pub problem: VieProblem,
    pub solution: CollocationSolution,
}

impl GsSolution {
    pub fn eval(&self, u: f64) -> Result<f64> {
        self.solution.eval(u)
    }
}

/// Φ(0) from the boundary-value formula, then the collocation solve on
/// [0, horizon] with the default Gauss order.
pub fn solve_gs(
    params: &RiskParams,
    model: &ClaimModel,
    penalty: &PenaltyKind,
    config: &CollocationConfig,
    horizon: f64,
) -> Result<GsSolution> {
    let p0 = phi0(params, model, penalty)?;
    solve_gs_with_phi0(params, model, penalty, config, horizon, p0)
}

/// As [`solve_gs`] with a precomputed boundary value, so a ladder of N can
/// share one Φ(0).
pub fn solve_gs_with_phi0(
    params: &RiskParams,
    model: &ClaimModel,
    penalty: &PenaltyKind,
    config: &CollocationConfig,
    horizon: f64,
    p0: Phi0Result,
) -> Result<GsSolution> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon T must be positive and finite, got {horizon}"
        )));
    }
    let problem = build_gs_vie(params, model, penalty, p0.value, horizon)?;
    let rule = gauss_rule(default_rule_order(config.m()))?;
    let solution = solve(&problem, config, rule)?;
    Ok(GsSolution {
        phi0: p0,
        problem,
        solution,
    })
}
