use gerber_shiu::boundary::phi0;
use gerber_shiu::experiments::ClaimFamily;
use gerber_shiu::oracles::exponential_ode_oracle;
use gerber_shiu::pipeline::solve_gs;
use gerber_shiu::risk_model::{PenaltyKind, RiskParams};
use gerber_shiu::vie::CollocationConfig;

fn base() -> RiskParams {
    RiskParams::new(1.2, 1.0, 0.01, 0.0).unwrap()
}

fn solve_at(family: ClaimFamily, w: &PenaltyKind, m: usize, n: usize, u: f64) -> f64 {
    let config = CollocationConfig::with_default_params(m, n).unwrap();
    solve_gs(&base(), &family.model(), w, &config, 30.0)
        .unwrap()
        .eval(u)
        .unwrap()
}

#[test]
fn zero_penalty_gives_zero_function() {
    let config = CollocationConfig::with_default_params(2, 64).unwrap();
    let sol = solve_gs(
        &base(),
        &ClaimFamily::Erlang2.model(),
        &PenaltyKind::custom(|_, _| 0.0),
        &config,
        30.0,
    )
    .unwrap();
    assert_eq!(sol.phi0.value, 0.0);
    assert!(sol.solution.coeffs().iter().all(|c| *c == 0.0));
}

#[test]
fn value_at_zero_approaches_boundary_value_at_collocation_order() {
    // c1 > 0, so u_h(0) is the first cell's polynomial extrapolated to its
    // left end and only matches Φ(0) up to O(h^m).
    let model = ClaimFamily::Exp.model();
    let p0 = phi0(&base(), &model, &PenaltyKind::RuinIndicator)
        .unwrap()
        .value;
    for (m, lo, hi) in [(2, 3.5, 4.5), (3, 7.0, 9.0)] {
        let e: Vec<f64> = [256, 512]
            .iter()
            .map(|&n| {
                (solve_at(ClaimFamily::Exp, &PenaltyKind::RuinIndicator, m, n, 0.0) - p0).abs()
            })
            .collect();
        let ratio = e[0] / e[1];
        assert!((lo..=hi).contains(&ratio), "m={m}: {e:?}");
    }
}

#[test]
fn numeric_tail_path_matches_closed_forms() {
    // A custom w = x + y runs the quadrature tail and running-integral table.
    for family in [ClaimFamily::Exp, ClaimFamily::Erlang2, ClaimFamily::CombExp] {
        let closed = solve_at(family, &PenaltyKind::ClaimCausingRuin, 2, 512, 5.0);
        let numeric = solve_at(family, &PenaltyKind::custom(|x, y| x + y), 2, 512, 5.0);
        assert!(
            (closed - numeric).abs() <= 1e-9,
            "{family:?}: {closed} vs {numeric}"
        );
    }
}

#[test]
fn ruin_probability_stays_in_unit_interval_and_decreases() {
    for family in [ClaimFamily::Exp, ClaimFamily::Erlang2, ClaimFamily::CombExp] {
        let config = CollocationConfig::with_default_params(2, 512).unwrap();
        let sol = solve_gs(
            &base(),
            &family.model(),
            &PenaltyKind::RuinIndicator,
            &config,
            30.0,
        )
        .unwrap();
        let vals: Vec<f64> = (0..=300)
            .map(|k| sol.eval(k as f64 * 0.1).unwrap())
            .collect();
        assert!(vals.iter().all(|v| (0.0..1.0).contains(v)), "{family:?}");
        assert!(vals.windows(2).all(|w| w[1] <= w[0]), "{family:?}");
    }
}

#[test]
fn collocation_tracks_ode_reference() {
    let o = exponential_ode_oracle(&base(), 1.0, &PenaltyKind::RuinIndicator, 30.0, 1e-12).unwrap();
    for u in [1.0, 5.0, 12.5, 29.0] {
        let v = solve_at(ClaimFamily::Exp, &PenaltyKind::RuinIndicator, 3, 512, u);
        assert!((v - o.eval(u).unwrap()).abs() <= 5e-8, "u={u}");
    }
}

#[test]
fn heavier_interest_lowers_ruin() {
    let model = ClaimFamily::Exp.model();
    let config = CollocationConfig::with_default_params(2, 256).unwrap();
    let mut prev = f64::INFINITY;
    for delta in [0.0, 0.01, 0.05, 0.1] {
        let p = RiskParams::new(1.2, 1.0, delta, 0.0).unwrap();
        let v = solve_gs(&p, &model, &PenaltyKind::RuinIndicator, &config, 30.0)
            .unwrap()
            .eval(5.0)
            .unwrap();
        assert!(v < prev, "delta={delta}");
        prev = v;
    }
}
