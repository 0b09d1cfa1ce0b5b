//! Reference solution for exponential claims.
//!
//! With F̄(x) = e^{-βx}, applying (d/du + β) to the integro-differential
//! equation removes the convolution and leaves
//!
//! (c + δu)Φ'' + (δ − λ + β(c + δu))Φ' = −λ(A' + βA),
//!
//! with Φ(0) from the boundary-value formula and Φ'(0) = λ(Φ(0) − A(0))/c.
//! See `docs/exponential-ode.md` for the derivation. A' + βA vanishes for the
//! ruin indicator and the deficit and equals e^{-βu} for the claim causing
//! ruin.

use crate::boundary::phi0;
use crate::error::{Error, Result};
use crate::risk_model::{ClaimModel, PenaltyKind, RiskParams};

/// Gragg step counts per extrapolation column.
const STEPS: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];
const MIN_STEP: f64 = 1e-10;
const INITIAL_STEP: f64 = 0.25;
const MAX_STEP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Source {
    None,
    /// −λe^{-βu}
    Exponential,
}

#[derive(Debug, Clone, Copy)]
struct Ode {
    c: f64,
    lambda: f64,
    delta: f64,
    rate: f64,
    source: Source,
}

impl Ode {
    fn rhs(&self, u: f64, y: [f64; 2]) -> [f64; 2] {
        let d = self.c + self.delta * u;
        let q = self.delta - self.lambda + self.rate * d;
        let forcing = match self.source {
            Source::None => 0.0,
            Source::Exponential => -self.lambda * (-self.rate * u).exp(),
        };
        [y[1], (forcing - q * y[1]) / d]
    }

    /// Modified midpoint rule with `n` substeps over [u, u + big].
    fn midpoint(&self, u: f64, y: [f64; 2], big: f64, n: usize) -> [f64; 2] {
        let h = big / n as f64;
        let f0 = self.rhs(u, y);
        let mut z0 = y;
        let mut z1 = [y[0] + h * f0[0], y[1] + h * f0[1]];
        for k in 1..n {
            let f = self.rhs(u + k as f64 * h, z1);
            let z2 = [z0[0] + 2.0 * h * f[0], z0[1] + 2.0 * h * f[1]];
            z0 = z1;
            z1 = z2;
        }
        let f = self.rhs(u + big, z1);
        [
            0.5 * (z0[0] + z1[0] + h * f[0]),
            0.5 * (z0[1] + z1[1] + h * f[1]),
        ]
    }

    /// One extrapolated step; returns the estimate and its scaled error.
    fn gbs_step(&self, u: f64, y: [f64; 2], big: f64, tol: f64) -> ([f64; 2], f64) {
        let mut prev: Vec<[f64; 2]> = Vec::with_capacity(STEPS.len());
        let mut err = f64::INFINITY;
        for (k, &n) in STEPS.iter().enumerate() {
            // Row k of the Neville tableau, extrapolating in h² toward zero.
            let mut row = Vec::with_capacity(k + 1);
            row.push(self.midpoint(u, y, big, n));
            for j in 1..=k {
                let ratio = (n as f64 / STEPS[k - j] as f64).powi(2);
                let a = row[j - 1];
                let b = prev[j - 1];
                row.push([
                    a[0] + (a[0] - b[0]) / (ratio - 1.0),
                    a[1] + (a[1] - b[1]) / (ratio - 1.0),
                ]);
            }
            if k > 0 {
                let (best, second) = (row[k], row[k - 1]);
                err = (0..2)
                    .map(|i| (best[i] - second[i]).abs() / (tol * (1.0 + best[i].abs())))
                    .fold(0.0, f64::max);
                if k >= 3 && err <= 1.0 {
                    return (best, err);
                }
            }
            prev = row;
        }
        (prev[prev.len() - 1], err)
    }
}

/// Dense evaluator for Φ on [0, u_max] built from stored checkpoints.
#[derive(Debug, Clone)]
pub struct OdeOracle {
    ode: Ode,
    tol: f64,
    u_max: f64,
    phi0: f64,
    dphi0: f64,
    checkpoints: Vec<(f64, [f64; 2])>,
}

impl OdeOracle {
    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    /// Φ'(0).
    pub fn derivative_at_zero(&self) -> f64 {
        self.dphi0
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        Ok(self.state(u)?[0])
    }

    /// (Φ(u), Φ'(u)).
    pub fn state(&self, u: f64) -> Result<[f64; 2]> {
        if !(0.0..=self.u_max).contains(&u) {
            return Err(Error::Domain {
                what: "oracle argument u",
                value: u,
                expected: "0 <= u <= u_max",
            });
        }
        let k = self.checkpoints.partition_point(|(x, _)| *x <= u) - 1;
        let (start, y) = self.checkpoints[k];
        if start == u {
            return Ok(y);
        }
        let mut trace = Vec::new();
        integrate(&self.ode, start, y, u, self.tol, &mut trace)
    }
}

/// Adaptive extrapolated midpoint integration from `u0` to `u1`, pushing
/// every accepted step onto `trace`.
fn integrate(
    ode: &Ode,
    u0: f64,
    y0: [f64; 2],
    u1: f64,
    tol: f64,
    trace: &mut Vec<(f64, [f64; 2])>,
) -> Result<[f64; 2]> {
    let mut u = u0;
    let mut y = y0;
    let mut h = INITIAL_STEP.min(u1 - u0);
    while u < u1 {
        let last = u + h >= u1;
        let step = if last { u1 - u } else { h };
        let (next, err) = ode.gbs_step(u, y, step, tol);
        if err <= 1.0 {
            u = if last { u1 } else { u + step };
            y = next;
            trace.push((u, y));
            let grow = if err > 0.0 {
                0.9 * err.powf(-1.0 / 9.0)
            } else {
                2.0
            };
            h = (step * grow.clamp(0.5, 2.0)).min(MAX_STEP);
        } else {
            h = step * 0.5;
            if h < MIN_STEP {
                return Err(Error::ConvergenceFailure(format!(
                    "ODE oracle step size underflow at u = {u} for tolerance {tol}"
                )));
            }
        }
    }
    Ok(y)
}

/// Builds the reference evaluator for claims with survival e^{-rate·x}.
pub fn exponential_ode_oracle(
    params: &RiskParams,
    rate: f64,
    penalty: &PenaltyKind,
    u_max: f64,
    tol: f64,
) -> Result<OdeOracle> {
    if params.alpha != 0.0 {
        return Err(Error::Unsupported(format!(
            "the ODE oracle is only available for alpha = 0, got alpha = {}",
            params.alpha
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if !(u_max > 0.0 && u_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "u_max must be positive, got {u_max}"
        )));
    }
    let model = ClaimModel::exponential(rate)?;
    let (source, a0) = match penalty {
        PenaltyKind::RuinIndicator => (Source::None, 1.0),
        PenaltyKind::DeficitAtRuin => (Source::None, 1.0 / rate),
        PenaltyKind::ClaimCausingRuin => (Source::Exponential, 1.0 / rate),
        PenaltyKind::Custom(_) => {
            return Err(Error::Unsupported(
                "the ODE oracle covers the ruin, deficit and claim-causing penalties only".into(),
            ))
        }
    };
    let p0 = phi0(params, &model, penalty)?.value;
    let dphi0 = params.lambda * (p0 - a0) / params.c;
    let ode = Ode {
        c: params.c,
        lambda: params.lambda,
        delta: params.delta,
        rate,
        source,
    };
    let mut checkpoints = vec![(0.0, [p0, dphi0])];
    integrate(&ode, 0.0, [p0, dphi0], u_max, tol, &mut checkpoints)?;
    Ok(OdeOracle {
        ode,
        tol,
        u_max,
        phi0: p0,
        dphi0,
        checkpoints,
    })
}

/// Rejects non-exponential laws with a configuration error.
pub fn exponential_rate(model: &ClaimModel) -> Result<f64> {
    match model.kind() {
        crate::risk_model::ClaimKind::Exponential { rate } => Ok(*rate),
        _ => Err(Error::Unsupported(
            "the ODE oracle requires exponentially distributed claims".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn base() -> RiskParams {
        RiskParams::new(1.2, 1.0, 0.01, 0.0).unwrap()
    }

    #[test]
    fn classical_ruin_probability_without_interest() {
        // δ = 0: ψ(u) = e^{-θu/(1+θ)}/(1+θ) with θ = 0.2
        let p = RiskParams::new(1.2, 1.0, 0.0, 0.0).unwrap();
        let o = exponential_ode_oracle(&p, 1.0, &PenaltyKind::RuinIndicator, 30.0, 1e-12).unwrap();
        for u in [0.0, 0.7, 5.0, 13.3, 30.0] {
            let exact = (-u / 6.0f64).exp() / 1.2;
            assert_abs_diff_eq!(o.eval(u).unwrap(), exact, epsilon = 1e-11);
        }
    }

    #[test]
    fn initial_slope_for_ruin() {
        let o =
            exponential_ode_oracle(&base(), 1.0, &PenaltyKind::RuinIndicator, 30.0, 1e-12).unwrap();
        assert_abs_diff_eq!(
            o.derivative_at_zero(),
            (o.phi0() - 1.0) / 1.2,
            epsilon = 1e-15
        );
        assert!(o.derivative_at_zero() < 0.0);
    }

    #[test]
    fn reproduces_tabulated_values() {
        let p = base();
        let ruin =
            exponential_ode_oracle(&p, 1.0, &PenaltyKind::RuinIndicator, 30.0, 1e-12).unwrap();
        assert_abs_diff_eq!(ruin.eval(5.0).unwrap(), 0.2705412, epsilon = 1e-6);
        let cc =
            exponential_ode_oracle(&p, 1.0, &PenaltyKind::ClaimCausingRuin, 30.0, 1e-12).unwrap();
        assert_abs_diff_eq!(cc.eval(5.0).unwrap(), 0.8649379, epsilon = 1e-6);
    }

    #[test]
    fn tolerance_refinement_is_consistent() {
        let p = base();
        let coarse =
            exponential_ode_oracle(&p, 1.0, &PenaltyKind::ClaimCausingRuin, 30.0, 1e-8).unwrap();
        let fine =
            exponential_ode_oracle(&p, 1.0, &PenaltyKind::ClaimCausingRuin, 30.0, 1e-13).unwrap();
        for k in 0..=60 {
            let u = k as f64 * 0.5;
            assert_abs_diff_eq!(
                coarse.eval(u).unwrap(),
                fine.eval(u).unwrap(),
                epsilon = 1e-7
            );
        }
    }

    #[test]
    fn rejects_unsupported_inputs() {
        let p = base();
        let w = PenaltyKind::custom(|_, _| 1.0);
        assert!(exponential_ode_oracle(&p, 1.0, &w, 30.0, 1e-10).is_err());
        let a = RiskParams::new(1.2, 1.0, 0.01, 0.1).unwrap();
        assert!(exponential_ode_oracle(&a, 1.0, &PenaltyKind::RuinIndicator, 30.0, 1e-10).is_err());
        assert!(exponential_rate(&ClaimModel::erlang2(2.0).unwrap()).is_err());
        let o = exponential_ode_oracle(&p, 1.0, &PenaltyKind::RuinIndicator, 10.0, 1e-10).unwrap();
        assert!(o.eval(10.5).is_err());
    }
}
