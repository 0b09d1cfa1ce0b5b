//! The boundary value Φ(0) for α = 0.
//!
//! With E(z) = −cz + λμ∫₀^z φ₁(δs) ds and κ = c∫₀^∞ e^{E(z)} dz,
//!
//! Φ(0) = (λ·m_A/κ) ∫₀^∞ β(δz) e^{E(z)} dz,
//!
//! which for the ruin indicator reduces to (κ − 1)/κ.

use crate::error::{ensure_nonneg, Error, Result};
use crate::quadrature::{composite, gauss_rule, CumulativeIntegral, PANEL_ORDER};
use crate::risk_model::{phi1, ClaimModel, PenaltyKind, PenaltyTail, RiskParams};

/// Outer integrals stop once e^{E(z)} falls below this fraction of the
/// running integral.
const TRUNCATION_RATIO: f64 = 1e-16;
const REFINE_REL_TOL: f64 = 1e-13;
const MAX_HALVINGS: u32 = 8;
const MAX_TRUNCATION: f64 = 1e4;
/// Tolerance for the agreement of the general and shortcut ruin paths.
const SHORTCUT_TOL: f64 = 1e-9;

/// Φ(0) together with the quantities it was assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi0Result {
    pub value: f64,
    pub kappa_delta: f64,
    /// Where the outer integral was cut.
    pub truncation_point: f64,
    pub est_abs_error: f64,
}

/// Evaluator for E(z), reusable across many z.
#[derive(Debug, Clone)]
pub struct InnerExponent {
    c: f64,
    lambda: f64,
    delta: f64,
    mu: f64,
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    /// (1/μ)·∫₀^z L_F̄(δs) ds in closed form.
    Closed(crate::risk_model::ExpPoly),
    /// Running integral of φ₁(δs) on unit panels.
    Table(CumulativeIntegral),
}

impl InnerExponent {
    /// Valid for z in [0, z_max]; built-in laws are valid everywhere.
    pub fn new(params: &RiskParams, model: &ClaimModel, z_max: f64) -> Result<Self> {
        ensure_nonneg("z_max", z_max)?;
        let inner = match model.survival_poly() {
            Some(p) => Inner::Closed(p.clone()),
            None => {
                let mut table = CumulativeIntegral::new(1.0);
                let mut failure = None;
                table.extend_to(z_max, |s| match phi1(model, params.delta * s) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
                Inner::Table(table)
            }
        };
        Ok(Self {
            c: params.c,
            lambda: params.lambda,
            delta: params.delta,
            mu: model.mean(),
            inner,
        })
    }

    /// ∫₀^z φ₁(δs) ds.
    pub fn phi1_integral(&self, z: f64) -> f64 {
        match &self.inner {
            Inner::Closed(p) => p.laplace_integral(self.delta, z) / self.mu,
            Inner::Table(t) => t.integral_to(z.min(t.end())),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        -self.c * z + self.lambda * self.mu * self.phi1_integral(z)
    }
}

/// E(z) = −cz + λμ∫₀^z φ₁(δs) ds.
pub fn inner_exponent(params: &RiskParams, model: &ClaimModel, z: f64) -> Result<f64> {
    ensure_nonneg("z", z)?;
    Ok(InnerExponent::new(params, model, z)?.eval(z))
}

/// A z beyond which e^{E(z)} is certainly below the truncation threshold:
/// φ₁ <= 1 gives E(z) <= −(c − λμ)z, and the running integral is at least
/// ∫₀^∞ e^{−cz} dz = 1/c.
fn truncation_bound(params: &RiskParams, model: &ClaimModel) -> f64 {
    let drift = params.c - params.lambda * model.mean();
    let z = (params.c / TRUNCATION_RATIO).ln() / drift;
    (z.ceil() + 2.0).min(MAX_TRUNCATION)
}

#[derive(Debug, Clone, Copy)]
struct Outer {
    value: f64,
    truncation: f64,
    est_abs_error: f64,
}

/// ∫₀^{z*} f(z)·e^{E(z)} dz with unit 32-point panels, followed by panel
/// halving until the relative change drops below 1e-13. `fixed` overrides
/// the adaptive truncation point.
fn outer_integral(
    expo: &InnerExponent,
    f: impl Fn(f64) -> f64,
    fixed: Option<f64>,
) -> Result<Outer> {
    let rule = gauss_rule(PANEL_ORDER)?;
    let integrand = |z: f64| f(z) * expo.eval(z).exp();
    let truncation = match fixed {
        Some(z) => {
            ensure_nonneg("truncation point", z)?;
            z
        }
        None => {
            let mut running = 0.0;
            let mut z = 0.0;
            loop {
                running += rule.apply(integrand, z, z + 1.0);
                z += 1.0;
                if expo.eval(z).exp() < TRUNCATION_RATIO * running {
                    break z;
                }
                if z >= MAX_TRUNCATION {
                    return Err(Error::ConvergenceFailure(format!(
                        "outer integral still significant at z = {z}"
                    )));
                }
            }
        }
    };
    let mut width = 1.0;
    let mut value = composite(rule, integrand, 0.0, truncation, width);
    for _ in 0..MAX_HALVINGS {
        width /= 2.0;
        let refined = composite(rule, integrand, 0.0, truncation, width);
        let change = (refined - value).abs();
        value = refined;
        if !value.is_finite() {
            return Err(Error::NonFinite("outer boundary-value integral".into()));
        }
        if change <= REFINE_REL_TOL * value.abs() {
            return Ok(Outer {
                value,
                truncation,
                est_abs_error: change,
            });
        }
    }
    Err(Error::ConvergenceFailure(format!(
        "outer integral did not settle to relative 1e-13 after {MAX_HALVINGS} halvings"
    )))
}

fn check_config(params: &RiskParams, model: &ClaimModel) -> Result<()> {
    if params.alpha != 0.0 {
        return Err(Error::Unsupported(format!(
            "the boundary value is only available for alpha = 0, got alpha = {}",
            params.alpha
        )));
    }
    params.check_loading(model)
}

fn kappa_parts(
    params: &RiskParams,
    model: &ClaimModel,
    fixed: Option<f64>,
) -> Result<(InnerExponent, Outer)> {
    let z_max = fixed.unwrap_or(0.0).max(truncation_bound(params, model));
    let expo = InnerExponent::new(params, model, z_max)?;
    let outer = outer_integral(&expo, |_| 1.0, fixed)?;
    Ok((expo, outer))
}

/// κ_δ = c∫₀^∞ e^{E(z)} dz.
pub fn kappa_delta(params: &RiskParams, model: &ClaimModel) -> Result<f64> {
    params.check_loading(model)?;
    let (_, outer) = kappa_parts(params, model, None)?;
    Ok(params.c * outer.value)
}

/// Φ(0) with adaptive truncation of the outer integrals.
pub fn phi0(params: &RiskParams, model: &ClaimModel, penalty: &PenaltyKind) -> Result<Phi0Result> {
    phi0_impl(params, model, penalty, None)
}

/// Φ(0) with the outer integrals cut at a caller-chosen point.
pub fn phi0_with_truncation(
    params: &RiskParams,
    model: &ClaimModel,
    penalty: &PenaltyKind,
    truncation: f64,
) -> Result<Phi0Result> {
    phi0_impl(params, model, penalty, Some(truncation))
}

fn phi0_impl(
    params: &RiskParams,
    model: &ClaimModel,
    penalty: &PenaltyKind,
    fixed: Option<f64>,
) -> Result<Phi0Result> {
    check_config(params, model)?;
    let (expo, k_outer) = kappa_parts(params, model, fixed)?;
    let kappa = params.c * k_outer.value;
    let kappa_err = params.c * k_outer.est_abs_error;
    if params.lambda == 0.0 {
        return Ok(Phi0Result {
            value: 0.0,
            kappa_delta: kappa,
            truncation_point: k_outer.truncation,
            est_abs_error: 0.0,
        });
    }
    let delta = params.delta;
    let lambda = params.lambda;
    let (mass, outer) = if matches!(penalty, PenaltyKind::RuinIndicator) {
        let out = outer_integral(&expo, |z| phi1(model, delta * z).unwrap_or(f64::NAN), fixed)?;
        (model.mean(), out)
    } else {
        let tail = PenaltyTail::new(model, penalty)?;
        if tail.mass() == 0.0 {
            return Ok(Phi0Result {
                value: 0.0,
                kappa_delta: kappa,
                truncation_point: k_outer.truncation,
                est_abs_error: 0.0,
            });
        }
        let out = outer_integral(&expo, |z| tail.beta(delta * z), fixed)?;
        (tail.mass(), out)
    };
    let general = lambda * mass / kappa * outer.value;
    let general_err = lambda * mass / kappa * outer.est_abs_error + general * kappa_err / kappa;
    if matches!(penalty, PenaltyKind::RuinIndicator) {
        let shortcut = (kappa - 1.0) / kappa;
        if (shortcut - general).abs() > SHORTCUT_TOL {
            return Err(Error::InternalConsistency(format!(
                "ruin boundary value: general path {general} and (kappa-1)/kappa = {shortcut} differ"
            )));
        }
        return Ok(Phi0Result {
            value: shortcut,
            kappa_delta: kappa,
            truncation_point: outer.truncation,
            est_abs_error: kappa_err / (kappa * kappa),
        });
    }
    Ok(Phi0Result {
        value: general,
        kappa_delta: kappa,
        truncation_point: outer.truncation,
        est_abs_error: general_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::risk_model::phi1_by_quadrature;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn base() -> RiskParams {
        RiskParams::new(1.2, 1.0, 0.01, 0.0).unwrap()
    }

    fn exp1() -> ClaimModel {
        ClaimModel::exponential(1.0).unwrap()
    }

    #[test]
    fn inner_exponent_examples() {
        let p = base();
        assert_eq!(inner_exponent(&p, &exp1(), 0.0).unwrap(), 0.0);
        let v = inner_exponent(&p, &exp1(), 1.0).unwrap();
        assert_abs_diff_eq!(v, -1.2 + 100.0 * 1.01f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(v, -0.2049669, epsilon = 1e-7);
        // cross-check against quadrature of φ₁(δs) = 1/(1+δs)
        let q = integrate(
            gauss_rule(16).unwrap(),
            |s| 1.0 / (1.0 + 0.01 * s),
            0.0,
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(v, -1.2 + q, epsilon = 1e-14);
        let no_interest = RiskParams::new(1.2, 1.0, 0.0, 0.0).unwrap();
        for z in [0.5, 3.0, 40.0] {
            assert_abs_diff_eq!(
                inner_exponent(&no_interest, &exp1(), z).unwrap(),
                -0.2 * z,
                epsilon = 1e-13
            );
        }
    }

    fn custom_erlang() -> ClaimModel {
        ClaimModel::custom(
            |x| 4.0 * x * (-2.0 * x).exp(),
            |x| 1.0 - (1.0 + 2.0 * x) * (-2.0 * x).exp(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn custom_inner_table_audit() {
        let p = RiskParams::new(1.2, 1.0, 0.05, 0.0).unwrap();
        let custom = custom_erlang();
        let closed = InnerExponent::new(&p, &ClaimModel::erlang2(2.0).unwrap(), 0.0).unwrap();
        let table = InnerExponent::new(&p, &custom, 60.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let z: f64 = rng.random_range(0.0..60.0);
            let direct = crate::quadrature::composite(
                gauss_rule(32).unwrap(),
                |s| phi1_by_quadrature(&custom, 0.05 * s).unwrap(),
                0.0,
                z,
                1.0,
            );
            assert_abs_diff_eq!(table.phi1_integral(z), direct, epsilon = 1e-11);
            assert_abs_diff_eq!(closed.phi1_integral(z), direct, epsilon = 1e-11);
        }
    }

    #[test]
    fn kappa_examples() {
        let no_interest = RiskParams::new(1.2, 1.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            kappa_delta(&no_interest, &exp1()).unwrap(),
            6.0,
            epsilon = 1e-12
        );
        let no_claims = RiskParams {
            c: 1.2,
            lambda: 0.0,
            delta: 0.01,
            alpha: 0.0,
        };
        assert_abs_diff_eq!(
            kappa_delta(&no_claims, &exp1()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let thin = RiskParams::new(1.0, 1.0, 0.01, 0.0).unwrap();
        assert!(kappa_delta(&thin, &exp1()).unwrap_err().is_configuration());
    }

    #[test]
    fn kappa_is_nonincreasing_in_delta() {
        for model in [
            exp1(),
            ClaimModel::erlang2(2.0).unwrap(),
            ClaimModel::combination(2.0, 1.5, -1.0, 3.0).unwrap(),
        ] {
            let ks: Vec<f64> = [0.0, 0.005, 0.01, 0.02, 0.05]
                .iter()
                .map(|&d| kappa_delta(&RiskParams::new(1.2, 1.0, d, 0.0).unwrap(), &model).unwrap())
                .collect();
            assert!(ks.windows(2).all(|w| w[1] <= w[0]), "{ks:?}");
            assert!(ks.iter().all(|&k| k >= 1.0));
        }
    }

    #[test]
    fn phi0_examples() {
        let no_interest = RiskParams::new(1.2, 1.0, 0.0, 0.0).unwrap();
        let r = phi0(&no_interest, &exp1(), &PenaltyKind::RuinIndicator).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 / 1.2, epsilon = 1e-10);
        let no_claims = RiskParams {
            c: 1.2,
            lambda: 0.0,
            delta: 0.01,
            alpha: 0.0,
        };
        for w in [PenaltyKind::RuinIndicator, PenaltyKind::ClaimCausingRuin] {
            assert_eq!(phi0(&no_claims, &exp1(), &w).unwrap().value, 0.0);
        }
        let discounted = RiskParams::new(1.2, 1.0, 0.01, 0.1).unwrap();
        assert!(matches!(
            phi0(&discounted, &exp1(), &PenaltyKind::RuinIndicator),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn ruin_value_is_in_unit_interval_and_deficit_matches_for_exponential() {
        let p = base();
        let ruin = phi0(&p, &exp1(), &PenaltyKind::RuinIndicator).unwrap();
        let deficit = phi0(&p, &exp1(), &PenaltyKind::DeficitAtRuin).unwrap();
        assert!(ruin.value > 0.0 && ruin.value < 1.0);
        assert!(ruin.kappa_delta >= 1.0);
        assert_abs_diff_eq!(ruin.value, deficit.value, epsilon = 1e-12);
        assert!(ruin.est_abs_error < 1e-12);
    }

    #[test]
    fn doubling_truncation_changes_nothing() {
        let p = base();
        for model in [exp1(), ClaimModel::erlang2(2.0).unwrap()] {
            for w in [PenaltyKind::RuinIndicator, PenaltyKind::ClaimCausingRuin] {
                let a = phi0(&p, &model, &w).unwrap();
                let b = phi0_with_truncation(&p, &model, &w, 2.0 * a.truncation_point).unwrap();
                assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn custom_paths_match_builtin_paths() {
        let p = base();
        let erl = ClaimModel::erlang2(2.0).unwrap();
        let custom = custom_erlang();
        let w = PenaltyKind::custom(|x, y| x + y);
        let builtin = phi0(&p, &erl, &PenaltyKind::ClaimCausingRuin).unwrap();
        let generic = phi0(&p, &custom, &w).unwrap();
        assert_abs_diff_eq!(builtin.value, generic.value, epsilon = 1e-10);
        let r1 = phi0(&p, &erl, &PenaltyKind::RuinIndicator).unwrap();
        let r2 = phi0(&p, &custom, &PenaltyKind::RuinIndicator).unwrap();
        assert_abs_diff_eq!(r1.value, r2.value, epsilon = 1e-10);
    }
}
