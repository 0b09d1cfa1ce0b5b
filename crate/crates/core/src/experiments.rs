//! Run configurations and table/figure generation for the built-in
//! experiment set: mean-one exponential, Erlang(2) and combination claims,
//! c = 1.2, λ = 1, δ = 0.01 on [0, 30].

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::boundary::{phi0, Phi0Result};
use crate::convergence::{format_number, run_study, ConvergenceReport, ErrorKind, StudySpec};
use crate::error::{Error, Result};
use crate::oracles::{
    default_safe_barrier, exponential_ode_oracle, simulate_gs, McConfig, McEstimate,
    DEFAULT_MAX_EVENTS,
};
use crate::pipeline::{solve_gs, solve_gs_with_phi0};
use crate::risk_model::{ClaimModel, PenaltyKind, RiskParams};
use crate::vie::CollocationConfig;

pub const FIGURE_LEVELS: [usize; 4] = [512, 1024, 2048, 4096];
pub const FIGURE_ORACLE_TOL: f64 = 1e-13;
const LADDER_START: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimFamily {
    Exp,
    Erlang2,
    CombExp,
}

impl ClaimFamily {
    pub fn model(self) -> ClaimModel {
        match self {
            ClaimFamily::Exp => ClaimModel::exponential(1.0),
            ClaimFamily::Erlang2 => ClaimModel::erlang2(2.0),
            ClaimFamily::CombExp => ClaimModel::combination(2.0, 1.5, -1.0, 3.0),
        }
        .expect("built-in claim parameters are valid")
    }
}

impl FromStr for ClaimFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(ClaimFamily::Exp),
            "erlang2" => Ok(ClaimFamily::Erlang2),
            "combexp" => Ok(ClaimFamily::CombExp),
            other => Err(Error::InvalidParameter(format!(
                "unknown claim family '{other}', expected exp, erlang2 or combexp"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyChoice {
    Ruin,
    ClaimCause,
    Deficit,
}

impl PenaltyChoice {
    pub const ALL: [PenaltyChoice; 3] = [
        PenaltyChoice::Ruin,
        PenaltyChoice::ClaimCause,
        PenaltyChoice::Deficit,
    ];

    pub fn kind(self) -> PenaltyKind {
        match self {
            PenaltyChoice::Ruin => PenaltyKind::RuinIndicator,
            PenaltyChoice::ClaimCause => PenaltyKind::ClaimCausingRuin,
            PenaltyChoice::Deficit => PenaltyKind::DeficitAtRuin,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PenaltyChoice::Ruin => "ruin",
            PenaltyChoice::ClaimCause => "claimcause",
            PenaltyChoice::Deficit => "deficit",
        }
    }
}

impl FromStr for PenaltyChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ruin" => Ok(PenaltyChoice::Ruin),
            "claimcause" => Ok(PenaltyChoice::ClaimCause),
            "deficit" => Ok(PenaltyChoice::Deficit),
            other => Err(Error::InvalidParameter(format!(
                "unknown penalty '{other}', expected ruin, claimcause or deficit"
            ))),
        }
    }
}

/// Reference solution for relative-error figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureReference {
    /// ODE oracle for exponential claims, `Refined` otherwise.
    Auto,
    Oracle,
    /// N = 4096 with one more collocation point than the figure runs.
    Refined,
    /// N = 4096 with the same method as the figure runs.
    SelfN,
}

impl FromStr for FigureReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(FigureReference::Auto),
            "oracle" => Ok(FigureReference::Oracle),
            "refined" => Ok(FigureReference::Refined),
            "self" => Ok(FigureReference::SelfN),
            other => Err(Error::InvalidParameter(format!(
                "unknown figure reference '{other}', expected auto, oracle, refined or self"
            ))),
        }
    }
}

/// Error measure for convergence tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyError {
    /// Exact-referenced for the exponential ruin case, self-difference
    /// otherwise.
    Auto,
    Exact,
    SelfDifference,
}

impl FromStr for StudyError {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(StudyError::Auto),
            "exact" => Ok(StudyError::Exact),
            "self" => Ok(StudyError::SelfDifference),
            other => Err(Error::InvalidParameter(format!(
                "unknown error measure '{other}', expected auto, exact or self"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub claims: ClaimFamily,
    pub penalty: PenaltyChoice,
    pub m: usize,
    /// Collocation parameters; defaults depend on m.
    pub params: Option<Vec<f64>>,
    /// Subintervals, and the top of the ladder for convergence studies.
    pub n: usize,
    pub horizon: f64,
    pub c: f64,
    pub lambda: f64,
    pub delta: f64,
    /// Evaluation points; each command has its own default.
    pub u: Option<Vec<f64>>,
    pub seed: u64,
    pub paths: u64,
    pub reference: FigureReference,
    pub error: StudyError,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            claims: ClaimFamily::Exp,
            penalty: PenaltyChoice::Ruin,
            m: 2,
            params: None,
            n: 2048,
            horizon: 30.0,
            c: 1.2,
            lambda: 1.0,
            delta: 0.01,
            u: None,
            seed: 1,
            paths: 1_000_000,
            reference: FigureReference::Auto,
            error: StudyError::Auto,
        }
    }
}

impl RunConfig {
    pub fn risk_params(&self) -> Result<RiskParams> {
        let p = RiskParams::new(self.c, self.lambda, self.delta, 0.0)?;
        p.check_loading(&self.model())?;
        Ok(p)
    }

    pub fn model(&self) -> ClaimModel {
        self.claims.model()
    }

    pub fn collocation_params(&self) -> Result<Vec<f64>> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        match &self.params {
            Some(p) if p.len() != self.m => Err(Error::InvalidParameter(format!(
                "{} collocation parameters given for m = {}",
                p.len(),
                self.m
            ))),
            Some(p) => Ok(p.clone()),
            None => Ok(CollocationConfig::default_params(self.m)),
        }
    }

    pub fn collocation(&self) -> Result<CollocationConfig> {
        CollocationConfig::new(self.collocation_params()?, self.n)
    }

    fn check_horizon(&self) -> Result<()> {
        if self.horizon.is_finite() && self.horizon > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "T must be positive and finite, got {}",
                self.horizon
            )))
        }
    }

    /// Evaluation points, defaulting to 0, 0.1, ..., T.
    pub fn u_points(&self) -> Result<Vec<f64>> {
        let pts = match &self.u {
            Some(u) => u.clone(),
            None => default_u_grid(self.horizon),
        };
        for &u in &pts {
            if !(0.0..=self.horizon).contains(&u) {
                return Err(Error::Domain {
                    what: "evaluation point u",
                    value: u,
                    expected: "0 <= u <= T",
                });
            }
        }
        Ok(pts)
    }

    /// Single evaluation point for tables and simulation, defaulting to 5.
    pub fn single_u(&self) -> Result<f64> {
        match self.u.as_deref() {
            None => Ok(5.0),
            Some([u]) => Ok(*u),
            Some(other) => Err(Error::InvalidParameter(format!(
                "exactly one evaluation point expected, got {}",
                other.len()
            ))),
        }
    }
}

/// 0, 0.1, ..., T (T included when it lies on the 0.1 lattice).
pub fn default_u_grid(horizon: f64) -> Vec<f64> {
    let steps = (horizon * 10.0 + 1e-9).floor() as usize;
    (0..=steps).map(|k| k as f64 / 10.0).collect()
}

/// Φ(u) at the configured points.
pub fn solve_curve(cfg: &RunConfig) -> Result<Vec<(f64, f64)>> {
    cfg.check_horizon()?;
    let params = cfg.risk_params()?;
    let points = cfg.u_points()?;
    let sol = solve_gs(
        &params,
        &cfg.model(),
        &cfg.penalty.kind(),
        &cfg.collocation()?,
        cfg.horizon,
    )?;
    points.into_iter().map(|u| Ok((u, sol.eval(u)?))).collect()
}

pub fn solve_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("u,value\n");
    for (u, v) in rows {
        let _ = writeln!(out, "{},{}", format_number(*u), format_number(*v));
    }
    out
}

pub fn phi0_result(cfg: &RunConfig) -> Result<Phi0Result> {
    phi0(&cfg.risk_params()?, &cfg.model(), &cfg.penalty.kind())
}

pub fn phi0_csv(r: &Phi0Result) -> String {
    format!(
        "value,kappa_delta,truncation_point,est_abs_error\n{},{},{},{}\n",
        format_number(r.value),
        format_number(r.kappa_delta),
        format_number(r.truncation_point),
        format_number(r.est_abs_error)
    )
}

/// N ladder from 64 doubling up to `top`; a top below 64 yields one level.
pub fn ladder_to(top: usize) -> Vec<usize> {
    let mut n = LADDER_START.min(top);
    let mut out = vec![n];
    while n * 2 <= top {
        n *= 2;
        out.push(n);
    }
    out
}

pub fn convergence(cfg: &RunConfig) -> Result<ConvergenceReport> {
    cfg.check_horizon()?;
    let kind = match cfg.error {
        StudyError::Exact => ErrorKind::ExactReferenced,
        StudyError::SelfDifference => ErrorKind::SelfDifference,
        StudyError::Auto => {
            if cfg.claims == ClaimFamily::Exp && cfg.penalty == PenaltyChoice::Ruin {
                ErrorKind::ExactReferenced
            } else {
                ErrorKind::SelfDifference
            }
        }
    };
    run_study(&StudySpec {
        params: cfg.risk_params()?,
        model: cfg.model(),
        penalty: cfg.penalty.kind(),
        collocation_params: cfg.collocation_params()?,
        ladder: ladder_to(cfg.n),
        u_eval: cfg.single_u()?,
        horizon: cfg.horizon,
        kind,
    })
}

pub fn monte_carlo(cfg: &RunConfig) -> Result<McEstimate> {
    let params = cfg.risk_params()?;
    let model = cfg.model();
    let penalty = cfg.penalty.kind();
    let u0 = cfg.single_u()?;
    if !(u0.is_finite() && u0 >= 0.0) {
        return Err(Error::Domain {
            what: "initial reserve u",
            value: u0,
            expected: "finite and >= 0",
        });
    }
    let barrier = default_safe_barrier(&params, &model, &penalty, u0)?;
    let mc = McConfig::new(cfg.paths, cfg.seed, u0, barrier, DEFAULT_MAX_EVENTS)?;
    simulate_gs(&params, &model, &penalty, &mc)
}

pub fn mc_csv(e: &McEstimate) -> String {
    format!(
        "mean,std_error,paths,censored_fraction\n{},{},{},{}\n",
        format_number(e.mean),
        e.std_error.map_or("NA".to_string(), format_number),
        e.paths,
        format_number(e.censored_fraction)
    )
}

/// Values and relative errors of the figure runs on a common u grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub u: Vec<f64>,
    pub levels: Vec<usize>,
    /// values[k][i] = u_h at u[i] for levels[k].
    pub values: Vec<Vec<f64>>,
    pub reference: Vec<f64>,
    pub relerr: Vec<Vec<f64>>,
}

impl FigureData {
    pub fn values_csv(&self) -> String {
        self.table("value", &self.values)
    }

    pub fn relerr_csv(&self) -> String {
        self.table("relerr", &self.relerr)
    }

    fn table(&self, prefix: &str, cols: &[Vec<f64>]) -> String {
        let mut out = String::from("u");
        for n in &self.levels {
            let _ = write!(out, ",{prefix}_N{n}");
        }
        out.push('\n');
        for (i, u) in self.u.iter().enumerate() {
            out.push_str(&format_number(*u));
            for col in cols {
                out.push(',');
                out.push_str(&format_number(col[i]));
            }
            out.push('\n');
        }
        out
    }

    /// For each consecutive pair of levels, the median over u of
    /// relerr_N / relerr_2N, skipping points where either is zero.
    pub fn median_ratios(&self) -> Vec<f64> {
        self.relerr
            .windows(2)
            .filter_map(|w| {
                let mut r: Vec<f64> = w[0]
                    .iter()
                    .zip(&w[1])
                    .filter(|(a, b)| **a > 0.0 && **b > 0.0)
                    .map(|(a, b)| a / b)
                    .collect();
                if r.is_empty() {
                    return None;
                }
                r.sort_by(f64::total_cmp);
                let k = r.len();
                Some(if k % 2 == 1 {
                    r[k / 2]
                } else {
                    0.5 * (r[k / 2 - 1] + r[k / 2])
                })
            })
            .collect()
    }
}

pub fn figures(cfg: &RunConfig) -> Result<FigureData> {
    cfg.check_horizon()?;
    let params = cfg.risk_params()?;
    let model = cfg.model();
    let penalty = cfg.penalty.kind();
    let colloc = cfg.collocation_params()?;
    let points = cfg.u_points()?;
    let p0 = phi0(&params, &model, &penalty)?;
    let solve_at = |cparams: &[f64], n: usize| {
        let config = CollocationConfig::new(cparams.to_vec(), n)?;
        let sol = solve_gs_with_phi0(&params, &model, &penalty, &config, cfg.horizon, p0)?;
        points
            .iter()
            .map(|&u| sol.eval(u))
            .collect::<Result<Vec<f64>>>()
    };
    let values: Vec<Vec<f64>> = FIGURE_LEVELS
        .par_iter()
        .map(|&n| solve_at(&colloc, n))
        .collect::<Result<_>>()?;
    let top = *FIGURE_LEVELS.last().expect("non-empty");
    let reference = match (cfg.reference, cfg.claims) {
        (FigureReference::Oracle, _) | (FigureReference::Auto, ClaimFamily::Exp) => {
            let rate = crate::oracles::exponential_rate(&model)?;
            let oracle =
                exponential_ode_oracle(&params, rate, &penalty, cfg.horizon, FIGURE_ORACLE_TOL)?;
            points
                .iter()
                .map(|&u| oracle.eval(u))
                .collect::<Result<Vec<f64>>>()?
        }
        (FigureReference::Refined, _) | (FigureReference::Auto, _) => {
            solve_at(&CollocationConfig::default_params(colloc.len() + 1), top)?
        }
        (FigureReference::SelfN, _) => values[values.len() - 1].clone(),
    };
    let relerr = values
        .iter()
        .map(|col| {
            col.iter()
                .zip(&reference)
                .map(|(v, r)| {
                    if *r == 0.0 {
                        v.abs()
                    } else {
                        ((v - r) / r).abs()
                    }
                })
                .collect()
        })
        .collect();
    Ok(FigureData {
        u: points,
        levels: FIGURE_LEVELS.to_vec(),
        values,
        reference,
        relerr,
    })
}

/// The three functionals side by side at the configured N.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub u: Vec<f64>,
    /// Columns in [`PenaltyChoice::ALL`] order.
    pub columns: Vec<Vec<f64>>,
}

impl Curves {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u");
        for p in PenaltyChoice::ALL {
            let _ = write!(out, ",{}", p.name());
        }
        out.push('\n');
        for (i, u) in self.u.iter().enumerate() {
            out.push_str(&format_number(*u));
            for col in &self.columns {
                out.push(',');
                out.push_str(&format_number(col[i]));
            }
            out.push('\n');
        }
        out
    }
}

pub fn curves(cfg: &RunConfig) -> Result<Curves> {
    let columns = PenaltyChoice::ALL
        .par_iter()
        .map(|&p| {
            let c = RunConfig {
                penalty: p,
                ..cfg.clone()
            };
            Ok(solve_curve(&c)?.into_iter().map(|(_, v)| v).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(Curves {
        u: cfg.u_points()?,
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        assert_eq!(
            "erlang2".parse::<ClaimFamily>().unwrap(),
            ClaimFamily::Erlang2
        );
        assert_eq!(
            "claimcause".parse::<PenaltyChoice>().unwrap(),
            PenaltyChoice::ClaimCause
        );
        assert_eq!(
            "self".parse::<FigureReference>().unwrap(),
            FigureReference::SelfN
        );
        assert!("gamma"
            .parse::<ClaimFamily>()
            .unwrap_err()
            .is_configuration());
        assert!("x".parse::<PenaltyChoice>().is_err());
    }

    #[test]
    fn defaults_match_experiment_set() {
        let cfg = RunConfig::default();
        let p = cfg.risk_params().unwrap();
        assert_eq!((p.c, p.lambda, p.delta, p.alpha), (1.2, 1.0, 0.01, 0.0));
        assert_eq!(cfg.horizon, 30.0);
        assert_eq!(
            cfg.collocation_params().unwrap(),
            vec![1.0 / 3.0, 2.0 / 3.0]
        );
        let m3 = RunConfig {
            m: 3,
            ..RunConfig::default()
        };
        assert_eq!(
            m3.collocation_params().unwrap(),
            vec![1.0 / 3.0, 2.0 / 3.0, 1.0]
        );
        let bad = RunConfig {
            params: Some(vec![0.5]),
            ..RunConfig::default()
        };
        assert!(bad.collocation_params().is_err());
    }

    #[test]
    fn grids_and_ladders() {
        let g = default_u_grid(30.0);
        assert_eq!(g.len(), 301);
        assert_eq!(g[300], 30.0);
        assert_eq!(g[50], 5.0);
        assert_eq!(ladder_to(2048), vec![64, 128, 256, 512, 1024, 2048]);
        assert_eq!(ladder_to(32), vec![32]);
    }

    #[test]
    fn csv_shapes() {
        let s = solve_csv(&[(0.0, 0.5)]);
        assert_eq!(s, "u,value\n0.0000000000000000e0,5.0000000000000000e-1\n");
        let e = McEstimate {
            mean: 0.0,
            std_error: None,
            paths: 1,
            censored_fraction: 0.0,
        };
        assert!(mc_csv(&e).ends_with(",NA,1,0.0000000000000000e0\n"));
    }

    #[test]
    fn median_ratio_of_quartering_errors() {
        let d = FigureData {
            u: vec![0.0, 1.0, 2.0],
            levels: vec![1, 2],
            values: vec![vec![0.0; 3], vec![0.0; 3]],
            reference: vec![1.0; 3],
            relerr: vec![vec![4.0, 8.0, 0.0], vec![1.0, 2.0, 0.0]],
        };
        assert_eq!(d.median_ratios(), vec![4.0]);
    }
}
