//! Monte-Carlo estimation of Gerber–Shiu functions by simulating the
//! surplus process between claims.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pipeline::solve_gs;
use crate::risk_model::{ClaimKind, ClaimModel, PenaltyKind, RiskParams};
use crate::vie::CollocationConfig;

pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000;
/// Bias bound targeted by [`default_safe_barrier`].
pub const BARRIER_BIAS: f64 = 1e-6;
const BARRIER_MARGIN: f64 = 40.0;
const BARRIER_STEP: f64 = 5.0;
const BARRIER_SEARCH_LIMIT: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub paths: u64,
    pub seed: u64,
    /// Initial reserve.
    pub u0: f64,
    /// Paths whose surplus exceeds this level count as survived.
    pub safe_barrier: f64,
    /// Paths still unresolved after this many claims are censored.
    pub max_events: u64,
}

impl McConfig {
    pub fn new(paths: u64, seed: u64, u0: f64, safe_barrier: f64, max_events: u64) -> Result<Self> {
        let cfg = Self {
            paths,
            seed,
            u0,
            safe_barrier,
            max_events,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::InvalidParameter("paths must be at least 1".into()));
        }
        if !(self.u0.is_finite() && self.u0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial reserve must be finite and >= 0, got {}",
                self.u0
            )));
        }
        if !(self.safe_barrier.is_finite() && self.safe_barrier > self.u0) {
            return Err(Error::InvalidParameter(format!(
                "safe barrier {} must exceed the initial reserve {}",
                self.safe_barrier, self.u0
            )));
        }
        if self.max_events == 0 {
            return Err(Error::InvalidParameter(
                "max_events must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over √paths; undefined for a single path.
    pub std_error: Option<f64>,
    pub paths: u64,
    pub censored_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Ruin { before: f64, deficit: f64 },
    Survived,
    Censored,
}

#[derive(Debug, Clone, Copy)]
enum Sampler {
    Exponential(Exp<f64>),
    Erlang2(Exp<f64>),
    Mixture {
        w1: f64,
        first: Exp<f64>,
        second: Exp<f64>,
    },
    /// Proposal from the dominating positive component, accepted with
    /// probability 1 + (neg_coeff / pos_coeff)·e^{-(neg_rate − pos_rate)x}.
    Rejection {
        proposal: Exp<f64>,
        coeff_ratio: f64,
        rate_gap: f64,
    },
}

impl Sampler {
    fn new(model: &ClaimModel) -> Result<Self> {
        let exp = |r: f64| Exp::new(r).map_err(|e| Error::InvalidParameter(e.to_string()));
        Ok(match *model.kind() {
            ClaimKind::Exponential { rate } => Sampler::Exponential(exp(rate)?),
            ClaimKind::Erlang2 { rate } => Sampler::Erlang2(exp(rate)?),
            ClaimKind::CombinationOfExponentials { w1, r1, w2, r2 } => {
                if w1 >= 0.0 && w2 >= 0.0 {
                    Sampler::Mixture {
                        w1,
                        first: exp(r1)?,
                        second: exp(r2)?,
                    }
                } else {
                    let ((wp, rp), (wn, rn)) = if w1 > 0.0 {
                        ((w1, r1), (w2, r2))
                    } else {
                        ((w2, r2), (w1, r1))
                    };
                    Sampler::Rejection {
                        proposal: exp(rp)?,
                        coeff_ratio: (wn * rn) / (wp * rp),
                        rate_gap: rn - rp,
                    }
                }
            }
            ClaimKind::Custom(_) => {
                return Err(Error::Unsupported(
                    "simulation needs a sampler; custom claim laws are not supported".into(),
                ))
            }
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Exponential(e) => e.sample(rng),
            Sampler::Erlang2(e) => e.sample(rng) + e.sample(rng),
            Sampler::Mixture { w1, first, second } => {
                if rng.random::<f64>() < *w1 {
                    first.sample(rng)
                } else {
                    second.sample(rng)
                }
            }
            Sampler::Rejection {
                proposal,
                coeff_ratio,
                rate_gap,
            } => loop {
                let x = proposal.sample(rng);
                let accept = 1.0 + coeff_ratio * (-rate_gap * x).exp();
                if rng.random::<f64>() < accept {
                    break x;
                }
            },
        }
    }
}

fn run_path(
    params: &RiskParams,
    sampler: &Sampler,
    waits: Option<&Exp<f64>>,
    cfg: &McConfig,
    index: u64,
) -> Outcome {
    let Some(waits) = waits else {
        return Outcome::Survived;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let mut u = cfg.u0;
    for _ in 0..cfg.max_events {
        let t = waits.sample(&mut rng);
        u = if params.delta == 0.0 {
            u + params.c * t
        } else {
            let dt = params.delta * t;
            u * dt.exp() + params.c * dt.exp_m1() / params.delta
        };
        let before = u;
        u -= sampler.sample(&mut rng);
        if u < 0.0 {
            return Outcome::Ruin {
                before,
                deficit: -u,
            };
        }
        if u > cfg.safe_barrier {
            return Outcome::Survived;
        }
    }
    Outcome::Censored
}

/// Sum in a fixed binary-tree order.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

fn estimate(values: &[f64], censored: u64) -> McEstimate {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let std_error = if values.len() > 1 {
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        Some((pairwise_sum(&sq) / (n - 1.0)).sqrt() / n.sqrt())
    } else {
        None
    };
    McEstimate {
        mean,
        std_error,
        paths: values.len() as u64,
        censored_fraction: censored as f64 / n,
    }
}

/// Estimates several Gerber–Shiu functions on common paths.
pub fn simulate_gs_many(
    params: &RiskParams,
    model: &ClaimModel,
    penalties: &[PenaltyKind],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    cfg.validate()?;
    if params.alpha != 0.0 {
        return Err(Error::Unsupported(format!(
            "simulation is only available for alpha = 0, got alpha = {}",
            params.alpha
        )));
    }
    params.check_loading(model)?;
    let sampler = Sampler::new(model)?;
    let waits = if params.lambda > 0.0 {
        Some(Exp::new(params.lambda).map_err(|e| Error::InvalidParameter(e.to_string()))?)
    } else {
        None
    };
    let outcomes: Vec<Outcome> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| run_path(params, &sampler, waits.as_ref(), cfg, i))
        .collect();
    let censored = outcomes.iter().filter(|o| **o == Outcome::Censored).count() as u64;
    Ok(penalties
        .iter()
        .map(|w| {
            let values: Vec<f64> = outcomes
                .iter()
                .map(|o| match *o {
                    Outcome::Ruin { before, deficit } => w.eval(before, deficit),
                    _ => 0.0,
                })
                .collect();
            estimate(&values, censored)
        })
        .collect())
}

pub fn simulate_gs(
    params: &RiskParams,
    model: &ClaimModel,
    penalty: &PenaltyKind,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let mut v = simulate_gs_many(params, model, std::slice::from_ref(penalty), cfg)?;
    Ok(v.remove(0))
}

/// Smallest b >= u0 + 40 on a step-5 ladder with Φ(b) < 1e-6, where Φ is
/// the requested function computed by a coarse collocation solve. Once the
/// surplus exceeds b the remaining contribution of a path is at most Φ(b).
pub fn default_safe_barrier(
    params: &RiskParams,
    model: &ClaimModel,
    penalty: &PenaltyKind,
    u0: f64,
) -> Result<f64> {
    let mut b = u0 + BARRIER_MARGIN;
    while b <= u0 + BARRIER_SEARCH_LIMIT {
        let n = (b / 0.1).ceil() as usize;
        let config = CollocationConfig::with_default_params(3, n)?;
        let sol = solve_gs(params, model, penalty, &config, b)?;
        if sol.eval(b)?.abs() < BARRIER_BIAS {
            return Ok(b);
        }
        b += BARRIER_STEP;
    }
    Err(Error::ConvergenceFailure(format!(
        "no safe barrier below {} keeps the truncation bias under {BARRIER_BIAS:e}",
        u0 + BARRIER_SEARCH_LIMIT
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn base() -> RiskParams {
        RiskParams::new(1.2, 1.0, 0.01, 0.0).unwrap()
    }

    #[test]
    fn no_claims_means_no_ruin() {
        let p = RiskParams {
            c: 1.2,
            lambda: 0.0,
            delta: 0.01,
            alpha: 0.0,
        };
        let cfg = McConfig::new(1000, 3, 0.0, 40.0, 100).unwrap();
        let e = simulate_gs(
            &p,
            &ClaimModel::exponential(1.0).unwrap(),
            &PenaltyKind::RuinIndicator,
            &cfg,
        )
        .unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.censored_fraction, 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(0, 1, 0.0, 10.0, 10).is_err());
        assert!(McConfig::new(1, 1, 5.0, 5.0, 10).is_err());
        assert!(McConfig::new(1, 1, -1.0, 5.0, 10).is_err());
        assert!(McConfig::new(1, 1, 0.0, 5.0, 0).is_err());
    }

    #[test]
    fn single_path_has_no_standard_error() {
        let cfg = McConfig::new(1, 11, 5.0, 45.0, 10_000).unwrap();
        let e = simulate_gs(
            &base(),
            &ClaimModel::exponential(1.0).unwrap(),
            &PenaltyKind::RuinIndicator,
            &cfg,
        )
        .unwrap();
        assert!(e.std_error.is_none());
        assert!(e.mean == 0.0 || e.mean == 1.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = McConfig::new(20_000, 99, 2.0, 42.0, 100_000).unwrap();
        let m = ClaimModel::combination(2.0, 1.5, -1.0, 3.0).unwrap();
        let a = simulate_gs(&base(), &m, &PenaltyKind::ClaimCausingRuin, &cfg).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = single
            .install(|| simulate_gs(&base(), &m, &PenaltyKind::ClaimCausingRuin, &cfg).unwrap());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(
            a.std_error.unwrap().to_bits(),
            b.std_error.unwrap().to_bits()
        );
    }

    #[test]
    fn claim_causing_is_sum_of_parts_on_common_paths() {
        let cfg = McConfig::new(50_000, 5, 1.0, 41.0, 100_000).unwrap();
        let m = ClaimModel::erlang2(2.0).unwrap();
        let ws = [
            PenaltyKind::ClaimCausingRuin,
            PenaltyKind::custom(|x, _| x),
            PenaltyKind::DeficitAtRuin,
        ];
        let e = simulate_gs_many(&base(), &m, &ws, &cfg).unwrap();
        assert_abs_diff_eq!(e[0].mean, e[1].mean + e[2].mean, epsilon = 1e-12);
    }

    #[test]
    fn samplers_reproduce_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for model in [
            ClaimModel::exponential(1.0).unwrap(),
            ClaimModel::erlang2(2.0).unwrap(),
            ClaimModel::combination(2.0, 1.5, -1.0, 3.0).unwrap(),
            ClaimModel::combination(0.3, 1.0 / 0.4, 0.7, 1.0 / (0.6 / 0.7)).unwrap(),
        ] {
            let s = Sampler::new(&model).unwrap();
            let n = 400_000;
            let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
            let mean = pairwise_sum(&xs) / n as f64;
            assert!((mean - model.mean()).abs() < 0.01, "{mean}");
            // P(X > 1) against the closed-form survival
            let tail = xs.iter().filter(|&&x| x > 1.0).count() as f64 / n as f64;
            assert!((tail - model.survival(1.0).unwrap()).abs() < 0.004);
        }
    }

    #[test]
    fn custom_claims_are_rejected() {
        let m = ClaimModel::custom(|x| (-x).exp(), |x| 1.0 - (-x).exp(), 1.0).unwrap();
        let cfg = McConfig::new(10, 1, 0.0, 40.0, 10).unwrap();
        assert!(matches!(
            simulate_gs(&base(), &m, &PenaltyKind::RuinIndicator, &cfg),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 4950.0);
    }
}
