use gerber_shiu::experiments::ClaimFamily;
use gerber_shiu::oracles::{simulate_gs, simulate_gs_many, McConfig, DEFAULT_MAX_EVENTS};
use gerber_shiu::pipeline::solve_gs;
use gerber_shiu::risk_model::{PenaltyKind, RiskParams};
use gerber_shiu::vie::CollocationConfig;

fn base() -> RiskParams {
    RiskParams::new(1.2, 1.0, 0.01, 0.0).unwrap()
}

const FAMILIES: [ClaimFamily; 3] = [ClaimFamily::Exp, ClaimFamily::Erlang2, ClaimFamily::CombExp];

#[test]
fn ruin_estimate_is_nonincreasing_in_initial_reserve() {
    // Same seed and path count, so every u0 sees the same claim stream.
    let model = ClaimFamily::Exp.model();
    let mut prev: Option<(f64, f64)> = None;
    for u0 in [0.0, 2.5, 5.0, 10.0] {
        let cfg = McConfig::new(200_000, 7, u0, u0 + 40.0, DEFAULT_MAX_EVENTS).unwrap();
        let est = simulate_gs(&base(), &model, &PenaltyKind::RuinIndicator, &cfg).unwrap();
        let se = est.std_error.unwrap();
        if let Some((mean, prev_se)) = prev {
            assert!(
                est.mean <= mean + 3.0 * (se + prev_se),
                "u0={u0}: {} > {mean}",
                est.mean
            );
        }
        prev = Some((est.mean, se));
    }
}

#[test]
fn censoring_is_negligible_with_forty_unit_margin() {
    for family in FAMILIES {
        let cfg = McConfig::new(100_000, 3, 5.0, 45.0, DEFAULT_MAX_EVENTS).unwrap();
        let est = simulate_gs(&base(), &family.model(), &PenaltyKind::RuinIndicator, &cfg).unwrap();
        assert!(
            est.censored_fraction < 1e-4,
            "{family:?}: {}",
            est.censored_fraction
        );
    }
}

#[test]
fn simulation_agrees_with_collocation_for_every_claim_family() {
    let u0 = 2.0;
    let penalties = [
        PenaltyKind::RuinIndicator,
        PenaltyKind::ClaimCausingRuin,
        PenaltyKind::DeficitAtRuin,
    ];
    for family in FAMILIES {
        let model = family.model();
        let cfg = McConfig::new(200_000, 11, u0, u0 + 80.0, DEFAULT_MAX_EVENTS).unwrap();
        let est = simulate_gs_many(&base(), &model, &penalties, &cfg).unwrap();
        for (w, e) in penalties.iter().zip(&est) {
            let config = CollocationConfig::with_default_params(3, 1024).unwrap();
            let v = solve_gs(&base(), &model, w, &config, 30.0)
                .unwrap()
                .eval(u0)
                .unwrap();
            let z = (e.mean - v) / e.std_error.unwrap();
            assert!(
                z.abs() <= 3.5,
                "{family:?} {w:?}: MC {} vs {v}, z = {z}",
                e.mean
            );
        }
    }
}

#[test]
fn claim_causing_splits_exactly_on_common_paths() {
    let model = ClaimFamily::Erlang2.model();
    let cfg = McConfig::new(50_000, 5, 1.0, 41.0, DEFAULT_MAX_EVENTS).unwrap();
    let est = simulate_gs_many(
        &base(),
        &model,
        &[
            PenaltyKind::ClaimCausingRuin,
            PenaltyKind::custom(|x, _| x),
            PenaltyKind::DeficitAtRuin,
        ],
        &cfg,
    )
    .unwrap();
    assert!((est[0].mean - est[1].mean - est[2].mean).abs() <= 1e-12);
}
