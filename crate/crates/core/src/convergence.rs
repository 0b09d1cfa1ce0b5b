//! Error and order studies over a ladder of doubling N.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::boundary::phi0;
use crate::error::{Error, Result};
use crate::oracles::{exponential_ode_oracle, exponential_rate};
use crate::pipeline::solve_gs_with_phi0;
use crate::risk_model::{ClaimModel, PenaltyKind, RiskParams};
use crate::vie::{CollocationConfig, CollocationSolution};

/// Number of equispaced points standing in for the supremum over [0, T].
pub const DEFAULT_GRID_POINTS: usize = 3001;
/// Local tolerance of the ODE oracle used as the exact solution.
pub const ORACLE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Sup-norm distance to an exact (oracle) solution.
    ExactReferenced,
    /// |u_{N/2}(t) − u_N(t)| at the evaluation point.
    SelfDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub value: f64,
    pub error: Option<f64>,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub kind: ErrorKind,
    pub rows: Vec<ConvergenceRow>,
    pub u_eval: f64,
    pub m: usize,
    pub params: Vec<f64>,
    pub horizon: f64,
}

impl ConvergenceReport {
    /// `N,value,error,order`; absent entries are written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,value,error,order\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.n,
                format_number(r.value),
                r.error.map_or("NA".to_string(), format_number),
                r.order.map_or("NA".to_string(), format_number)
            );
        }
        out
    }

    /// Orders of the last `k` rows that carry one.
    pub fn last_orders(&self, k: usize) -> Vec<f64> {
        let orders: Vec<f64> = self.rows.iter().filter_map(|r| r.order).collect();
        orders[orders.len().saturating_sub(k)..].to_vec()
    }
}

/// 17 significant digits in scientific notation, '.' as decimal separator.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// `points` equispaced points covering [0, horizon].
pub fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    let last = points.saturating_sub(1).max(1) as f64;
    (0..points)
        .map(|k| {
            if k + 1 == points {
                horizon
            } else {
                horizon * k as f64 / last
            }
        })
        .collect()
}

/// Sup over `grid` of |u_h − exact| for each solution.
pub fn error_exact(
    solutions: &BTreeMap<usize, CollocationSolution>,
    exact: impl Fn(f64) -> Result<f64> + Sync,
    grid: &[f64],
) -> Result<BTreeMap<usize, f64>> {
    let reference: Vec<f64> = grid.par_iter().map(|&t| exact(t)).collect::<Result<_>>()?;
    solutions
        .iter()
        .map(|(&n, sol)| {
            let mut sup = 0.0f64;
            for (t, y) in grid.iter().zip(&reference) {
                sup = sup.max((sol.eval(*t)? - y).abs());
            }
            Ok((n, sup))
        })
        .collect()
}

/// |u_N(t_eval) − u_{2N}(t_eval)|.
pub fn error_self_pair(
    solutions: &BTreeMap<usize, CollocationSolution>,
    n: usize,
    t_eval: f64,
) -> Result<f64> {
    let coarse = solutions.get(&n).ok_or(Error::MissingLevel(n))?;
    let fine = solutions.get(&(2 * n)).ok_or(Error::MissingLevel(2 * n))?;
    Ok((coarse.eval(t_eval)? - fine.eval(t_eval)?).abs())
}

/// Self-differences keyed by the finer level: entry 2N holds
/// |u_N(t_eval) − u_{2N}(t_eval)|, as in the tabulated layout.
pub fn error_self(
    solutions: &BTreeMap<usize, CollocationSolution>,
    t_eval: f64,
) -> Result<BTreeMap<usize, f64>> {
    let mut out = BTreeMap::new();
    for &n in solutions.keys() {
        if solutions.contains_key(&(2 * n)) {
            out.insert(2 * n, error_self_pair(solutions, n, t_eval)?);
        }
    }
    if out.is_empty() {
        return Err(Error::MissingLevel(
            solutions.keys().next().map_or(0, |n| 2 * n),
        ));
    }
    Ok(out)
}

/// log₂(e / e2); `None` unless both errors are positive.
pub fn order(e: f64, e2: f64) -> Option<f64> {
    (e > 0.0 && e2 > 0.0 && e.is_finite() && e2.is_finite()).then(|| (e / e2).log2())
}

fn check_ladder(ladder: &[usize]) -> Result<()> {
    if ladder.is_empty() || ladder[0] == 0 {
        return Err(Error::InvalidParameter(
            "the N ladder must start at N >= 1".into(),
        ));
    }
    if ladder.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidParameter(format!(
            "N values must double from one level to the next, got {ladder:?}"
        )));
    }
    Ok(())
}

/// Inputs of one convergence study.
#[derive(Debug, Clone)]
pub struct StudySpec {
    pub params: RiskParams,
    pub model: ClaimModel,
    pub penalty: PenaltyKind,
    pub collocation_params: Vec<f64>,
    pub ladder: Vec<usize>,
    pub u_eval: f64,
    pub horizon: f64,
    pub kind: ErrorKind,
}

/// Solves every level of the ladder, sharing one boundary value.
pub fn solve_ladder(
    params: &RiskParams,
    model: &ClaimModel,
    penalty: &PenaltyKind,
    collocation_params: &[f64],
    ladder: &[usize],
    horizon: f64,
) -> Result<BTreeMap<usize, CollocationSolution>> {
    check_ladder(ladder)?;
    let p0 = phi0(params, model, penalty)?;
    ladder
        .par_iter()
        .map(|&n| {
            let config = CollocationConfig::new(collocation_params.to_vec(), n)?;
            let sol = solve_gs_with_phi0(params, model, penalty, &config, horizon, p0)?;
            Ok((n, sol.solution))
        })
        .collect()
}

/// Drives the solver across the ladder and assembles values, errors and
/// orders.
pub fn run_study(spec: &StudySpec) -> Result<ConvergenceReport> {
    check_ladder(&spec.ladder)?;
    if !(0.0..=spec.horizon).contains(&spec.u_eval) {
        return Err(Error::Domain {
            what: "u_eval",
            value: spec.u_eval,
            expected: "0 <= u_eval <= T",
        });
    }
    let solutions = solve_ladder(
        &spec.params,
        &spec.model,
        &spec.penalty,
        &spec.collocation_params,
        &spec.ladder,
        spec.horizon,
    )?;
    let errors = match spec.kind {
        ErrorKind::ExactReferenced => {
            let rate = exponential_rate(&spec.model)?;
            let oracle = exponential_ode_oracle(
                &spec.params,
                rate,
                &spec.penalty,
                spec.horizon,
                ORACLE_TOL,
            )?;
            let grid = uniform_grid(spec.horizon, DEFAULT_GRID_POINTS);
            error_exact(&solutions, |t| oracle.eval(t), &grid)?
        }
        ErrorKind::SelfDifference => {
            if spec.ladder.len() < 2 {
                BTreeMap::new()
            } else {
                error_self(&solutions, spec.u_eval)?
            }
        }
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(spec.ladder.len());
    for &n in &spec.ladder {
        let value = solutions[&n].eval(spec.u_eval)?;
        let error = errors.get(&n).copied();
        let order = match (rows.last().and_then(|r| r.error), error) {
            (Some(prev), Some(e)) => order(prev, e),
            _ => None,
        };
        rows.push(ConvergenceRow {
            n,
            value,
            error,
            order,
        });
    }
    Ok(ConvergenceReport {
        kind: spec.kind,
        rows,
        u_eval: spec.u_eval,
        m: spec.collocation_params.len(),
        params: spec.collocation_params.clone(),
        horizon: spec.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_rule;
    use crate::vie::{solve, VieProblem};
    use approx::assert_abs_diff_eq;

    fn manufactured(n: usize, m: usize) -> CollocationSolution {
        let p = VieProblem::new(|_| 1.0, |_, _| 1.0, 1.0).unwrap();
        let cfg = CollocationConfig::with_default_params(m, n).unwrap();
        solve(&p, &cfg, gauss_rule(m + 6).unwrap()).unwrap()
    }

    #[test]
    fn order_examples() {
        assert_abs_diff_eq!(order(4.0, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        // five-digit inputs pin the order to about 1e-4
        assert_abs_diff_eq!(order(1.8019e-5, 4.5111e-6).unwrap(), 1.9979, epsilon = 1e-4);
        assert_abs_diff_eq!(order(8.3565e-7, 1.0430e-7).unwrap(), 3.0021, epsilon = 1e-4);
        assert!(order(0.0, 1.0).is_none());
        assert!(order(1.0, 0.0).is_none());
        assert!(order(-1.0, 1.0).is_none());
    }

    #[test]
    fn self_comparisons_are_zero() {
        let mut sols = BTreeMap::new();
        sols.insert(8, manufactured(8, 2));
        let s = sols[&8].clone();
        let e = error_exact(&sols, |t| s.eval(t), &uniform_grid(1.0, 101)).unwrap();
        assert_eq!(e[&8], 0.0);
        let mut twins = BTreeMap::new();
        twins.insert(4, manufactured(8, 2));
        twins.insert(8, manufactured(8, 2));
        assert_eq!(error_self(&twins, 0.5).unwrap()[&8], 0.0);
    }

    #[test]
    fn missing_pair_is_reported() {
        let mut sols = BTreeMap::new();
        sols.insert(8, manufactured(8, 2));
        assert_eq!(error_self_pair(&sols, 8, 0.5), Err(Error::MissingLevel(16)));
        assert!(matches!(
            error_self(&sols, 0.5),
            Err(Error::MissingLevel(_))
        ));
    }

    #[test]
    fn manufactured_errors_shrink_at_rate_m() {
        for m in [2, 3] {
            let mut sols = BTreeMap::new();
            for n in [16, 32, 64, 128] {
                sols.insert(n, manufactured(n, m));
            }
            let e = error_exact(&sols, |t| Ok(t.exp()), &uniform_grid(1.0, 1001)).unwrap();
            let v: Vec<f64> = e.values().copied().collect();
            for w in v.windows(2) {
                let p = order(w[0], w[1]).unwrap();
                assert!((p - m as f64).abs() < 0.15, "m={m}: {v:?}");
            }
            let s = error_self(&sols, 0.5).unwrap();
            assert_eq!(s.keys().copied().collect::<Vec<_>>(), vec![32, 64, 128]);
        }
    }

    #[test]
    fn ladder_must_double() {
        assert!(check_ladder(&[64, 128, 256]).is_ok());
        assert!(check_ladder(&[64, 96]).is_err());
        assert!(check_ladder(&[]).is_err());
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = uniform_grid(30.0, 3001);
        assert_eq!(g.len(), 3001);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[3000], 30.0);
        assert_abs_diff_eq!(g[1500], 15.0, epsilon = 1e-14);
    }

    #[test]
    fn csv_layout() {
        let r = ConvergenceReport {
            kind: ErrorKind::SelfDifference,
            rows: vec![
                ConvergenceRow {
                    n: 64,
                    value: 0.25,
                    error: None,
                    order: None,
                },
                ConvergenceRow {
                    n: 128,
                    value: 0.5,
                    error: Some(1e-5),
                    order: None,
                },
            ],
            u_eval: 5.0,
            m: 2,
            params: vec![1.0 / 3.0, 2.0 / 3.0],
            horizon: 30.0,
        };
        assert_eq!(
            r.to_csv(),
            "N,value,error,order\n64,2.5000000000000000e-1,NA,NA\n128,5.0000000000000000e-1,1.0000000000000001e-5,NA\n"
        );
    }
}
