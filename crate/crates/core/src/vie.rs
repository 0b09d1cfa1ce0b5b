//! Piecewise-polynomial collocation for linear second-kind Volterra
//! equations `y(t) = g(t) + ∫₀ᵗ K(t,s) y(s) ds` on a uniform grid.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// Blocks are assembled in parallel once the history holds this many kernel
/// evaluations.
const PAR_THRESHOLD: usize = 4096;
const MAX_CONDITION: f64 = 1e12;
/// Samples per side of the finiteness spot check in [`VieProblem::new`].
const SPOT_SAMPLES: usize = 16;

type Forcing = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Kernel = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Forcing `g`, kernel `K(t, s)` on `0 <= s <= t <= T`, and horizon `T`.
#[derive(Clone)]
pub struct VieProblem {
    forcing: Forcing,
    kernel: Kernel,
    horizon: f64,
}

impl fmt::Debug for VieProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VieProblem")
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl VieProblem {
    /// Continuity of `g` and `K` is the caller's responsibility; the
    /// constructor only checks finiteness on a coarse sample of the triangle.
    pub fn new(
        forcing: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kernel: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        horizon: f64,
    ) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon T must be positive and finite, got {horizon}"
            )));
        }
        let problem = Self {
            forcing: Arc::new(forcing),
            kernel: Arc::new(kernel),
            horizon,
        };
        for a in 0..=SPOT_SAMPLES {
            let t = horizon * a as f64 / SPOT_SAMPLES as f64;
            let g = problem.forcing(t);
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("forcing g({t}) = {g}")));
            }
            for b in 0..=a {
                let s = horizon * b as f64 / SPOT_SAMPLES as f64;
                let k = problem.kernel(t, s);
                if !k.is_finite() {
                    return Err(Error::NonFinite(format!("kernel K({t}, {s}) = {k}")));
                }
            }
        }
        Ok(problem)
    }

    pub fn forcing(&self, t: f64) -> f64 {
        (self.forcing)(t)
    }

    pub fn kernel(&self, t: f64, s: f64) -> f64 {
        (self.kernel)(t, s)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// Lagrange basis on distinct collocation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeBasis {
    params: Vec<f64>,
    denoms: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(params: &[f64]) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one collocation parameter is required".into(),
            ));
        }
        for (a, x) in params.iter().enumerate() {
            if params[..a].contains(x) {
                return Err(Error::InvalidParameter(format!(
                    "collocation parameters must be distinct, {x} is repeated"
                )));
            }
        }
        let denoms = (0..params.len())
            .map(|i| {
                params
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i)
                    .map(|(_, ck)| params[i] - ck)
                    .product()
            })
            .collect();
        Ok(Self {
            params: params.to_vec(),
            denoms,
        })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// L_i(θ) for the zero-based index `i`.
    pub fn eval(&self, i: usize, theta: f64) -> f64 {
        let num: f64 = self
            .params
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, ck)| theta - ck)
            .product();
        num / self.denoms[i]
    }

    /// Σ_j L_j(θ)·values[j].
    pub fn interpolate(&self, values: &[f64], theta: f64) -> f64 {
        (0..self.len())
            .map(|j| self.eval(j, theta) * values[j])
            .sum()
    }
}

/// L_i(θ) with a zero-based index `i`.
pub fn lagrange_basis(params: &[f64], i: usize, theta: f64) -> Result<f64> {
    let basis = LagrangeBasis::new(params)?;
    if i >= basis.len() {
        return Err(Error::InvalidParameter(format!(
            "basis index {i} out of range for {} parameters",
            basis.len()
        )));
    }
    Ok(basis.eval(i, theta))
}

/// Number of points per subinterval, their parameters, and the number of
/// subintervals.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationConfig {
    params: Vec<f64>,
    subintervals: usize,
}

impl CollocationConfig {
    /// Parameters must satisfy `0 < c_1 < ... < c_m <= 1`.
    pub fn new(params: Vec<f64>, subintervals: usize) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if subintervals == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if !params.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter(
                "collocation parameters must be finite".into(),
            ));
        }
        if params[0] <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "c_1 = {} is not supported; the first collocation parameter must be > 0",
                params[0]
            )));
        }
        if params[params.len() - 1] > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "c_m = {} exceeds 1",
                params[params.len() - 1]
            )));
        }
        if params.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "collocation parameters must be strictly increasing, got {params:?}"
            )));
        }
        Ok(Self {
            params,
            subintervals,
        })
    }

    /// `(1/3, 2/3)` for m = 2, `i/m` otherwise (so `(1/3, 2/3, 1)` for m = 3).
    pub fn default_params(m: usize) -> Vec<f64> {
        match m {
            2 => vec![1.0 / 3.0, 2.0 / 3.0],
            _ => (1..=m).map(|i| i as f64 / m as f64).collect(),
        }
    }

    pub fn with_default_params(m: usize, subintervals: usize) -> Result<Self> {
        Self::new(Self::default_params(m), subintervals)
    }

    pub fn m(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn subintervals(&self) -> usize {
        self.subintervals
    }

    pub fn with_subintervals(&self, subintervals: usize) -> Result<Self> {
        Self::new(self.params.clone(), subintervals)
    }
}

/// `B_n` and the history matrices `B_n^{(l)}`, `l = 0..n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrices {
    pub current: DMatrix<f64>,
    pub history: Vec<DMatrix<f64>>,
}

/// Basis values at the quadrature nodes, shared by assembly and residuals.
struct Assembler<'a> {
    problem: &'a VieProblem,
    m: usize,
    q: usize,
    h: f64,
    params: &'a [f64],
    /// Nodes and weights mapped to [0, 1].
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// L_j(x_k), row-major m × q.
    basis_hist: Vec<f64>,
    /// L_j(c_i·x_k), indexed [(i·m + j)·q + k].
    basis_diag: Vec<f64>,
}

impl<'a> Assembler<'a> {
    fn new(
        problem: &'a VieProblem,
        config: &'a CollocationConfig,
        rule: &GaussRule,
    ) -> Result<Self> {
        let basis = LagrangeBasis::new(config.params())?;
        let m = config.m();
        let q = rule.order();
        let (nodes, weights): (Vec<f64>, Vec<f64>) = rule.mapped(0.0, 1.0).unzip();
        let mut basis_hist = vec![0.0; m * q];
        for j in 0..m {
            for k in 0..q {
                basis_hist[j * q + k] = basis.eval(j, nodes[k]);
            }
        }
        let mut basis_diag = vec![0.0; m * m * q];
        for (i, ci) in config.params().iter().enumerate() {
            for j in 0..m {
                for k in 0..q {
                    basis_diag[(i * m + j) * q + k] = basis.eval(j, ci * nodes[k]);
                }
            }
        }
        Ok(Self {
            problem,
            m,
            q,
            h: problem.horizon() / config.subintervals() as f64,
            params: config.params(),
            nodes,
            weights,
            basis_hist,
            basis_diag,
        })
    }

    fn point(&self, n: usize, i: usize) -> f64 {
        n as f64 * self.h + self.params[i] * self.h
    }

    fn kernel_at(&self, n: usize, i: usize, l: Option<usize>, t: f64, s: f64) -> Result<f64> {
        let value = self.problem.kernel(t, s);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::KernelEvaluation {
                n,
                i,
                l,
                t,
                s,
                value,
            })
        }
    }

    /// B_n^{(l)} into `out` (row-major m × m).
    fn history_block(&self, n: usize, l: usize, out: &mut [f64]) -> Result<()> {
        let (m, q) = (self.m, self.q);
        let tl = l as f64 * self.h;
        let mut kw = vec![0.0; q];
        for i in 0..m {
            let t = self.point(n, i);
            for k in 0..q {
                let s = tl + self.nodes[k] * self.h;
                kw[k] = self.weights[k] * self.kernel_at(n, i, Some(l), t, s)?;
            }
            for j in 0..m {
                let lj = &self.basis_hist[j * q..(j + 1) * q];
                out[i * m + j] = kw.iter().zip(lj).map(|(a, b)| a * b).sum();
            }
        }
        Ok(())
    }

    fn current_block(&self, n: usize) -> Result<DMatrix<f64>> {
        let (m, q) = (self.m, self.q);
        let tn = n as f64 * self.h;
        let mut b = DMatrix::zeros(m, m);
        let mut kw = vec![0.0; q];
        for i in 0..m {
            let t = self.point(n, i);
            let ci = self.params[i];
            for k in 0..q {
                let s = tn + ci * self.nodes[k] * self.h;
                kw[k] = ci * self.weights[k] * self.kernel_at(n, i, None, t, s)?;
            }
            for j in 0..m {
                let lj = &self.basis_diag[(i * m + j) * q..(i * m + j + 1) * q];
                b[(i, j)] = kw.iter().zip(lj).map(|(a, b)| a * b).sum();
            }
        }
        Ok(b)
    }

    /// G_n = Σ_l h·B_n^{(l)}·U_l, summed with l ascending then j ascending.
    fn history_sum(&self, n: usize, coeffs: &[f64]) -> Result<Vec<f64>> {
        let m = self.m;
        let mut contrib = vec![0.0; n * m];
        let per_l = |l: usize, out: &mut [f64]| -> Result<()> {
            let mut block = vec![0.0; m * m];
            self.history_block(n, l, &mut block)?;
            let ul = &coeffs[l * m..(l + 1) * m];
            for i in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += self.h * block[i * m + j] * ul[j];
                }
                out[i] = acc;
            }
            Ok(())
        };
        if n * m * self.q >= PAR_THRESHOLD {
            let first_failure = contrib
                .par_chunks_mut(m)
                .enumerate()
                .filter_map(|(l, out)| per_l(l, out).err().map(|e| (l, e)))
                .min_by_key(|(l, _)| *l);
            if let Some((_, e)) = first_failure {
                return Err(e);
            }
        } else {
            for (l, out) in contrib.chunks_mut(m).enumerate() {
                per_l(l, out)?;
            }
        }
        let mut g = vec![0.0; m];
        for out in contrib.chunks(m) {
            for i in 0..m {
                g[i] += out[i];
            }
        }
        Ok(g)
    }

    fn forcing_block(&self, n: usize) -> Result<Vec<f64>> {
        (0..self.m)
            .map(|i| {
                let t = self.point(n, i);
                let g = self.problem.forcing(t);
                if g.is_finite() {
                    Ok(g)
                } else {
                    Err(Error::NonFinite(format!("forcing g({t}) = {g}")))
                }
            })
            .collect()
    }
}

fn check_block_index(config: &CollocationConfig, n: usize) -> Result<()> {
    if n < config.subintervals() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "subinterval index {n} out of range for N = {}",
            config.subintervals()
        )))
    }
}

/// B_n and B_n^{(l)} for one subinterval, each entry by the given Gauss rule.
pub fn build_block_matrices(
    problem: &VieProblem,
    config: &CollocationConfig,
    n: usize,
    rule: &GaussRule,
) -> Result<BlockMatrices> {
    check_block_index(config, n)?;
    let asm = Assembler::new(problem, config, rule)?;
    let m = config.m();
    let mut history = Vec::with_capacity(n);
    let mut buf = vec![0.0; m * m];
    for l in 0..n {
        asm.history_block(n, l, &mut buf)?;
        history.push(DMatrix::from_row_slice(m, m, &buf));
    }
    Ok(BlockMatrices {
        current: asm.current_block(n)?,
        history,
    })
}

/// Solved collocation approximation `u_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSolution {
    config: CollocationConfig,
    horizon: f64,
    basis: LagrangeBasis,
    coeffs: Vec<f64>,
}

impl CollocationSolution {
    pub fn config(&self) -> &CollocationConfig {
        &self.config
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.config.subintervals() as f64
    }

    /// All U_{n,i}, row-major N × m.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// U_n.
    pub fn block(&self, n: usize) -> &[f64] {
        let m = self.config.m();
        &self.coeffs[n * m..(n + 1) * m]
    }

    /// The collocation point t_{n,i} = t_n + c_i·h.
    pub fn point(&self, n: usize, i: usize) -> f64 {
        let h = self.step();
        n as f64 * h + self.config.params()[i] * h
    }

    /// u_h(t). Grid point t_{n+1} belongs to subinterval n, matching the
    /// half-open cells (t_n, t_{n+1}]; t = 0 belongs to the first one.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain {
                what: "evaluation point t",
                value: t,
                expected: "0 <= t <= T",
            });
        }
        let h = self.step();
        let big_n = self.config.subintervals();
        let x = t / h;
        let nearest = x.round();
        let x = if (x - nearest).abs() <= 8.0 * f64::EPSILON * x.max(1.0) {
            nearest
        } else {
            x
        };
        let n = if x <= 0.0 {
            0
        } else {
            ((x.ceil() as usize).saturating_sub(1)).min(big_n - 1)
        };
        let theta = x - n as f64;
        let u = self.block(n);
        let snap = 8.0 * f64::EPSILON * x.max(1.0);
        for (j, cj) in self.config.params().iter().enumerate() {
            if (theta - cj).abs() <= snap {
                return Ok(u[j]);
            }
        }
        Ok(self.basis.interpolate(u, theta))
    }
}

/// Solves `[I - h·B_n] U_n = g_n + G_n` for n = 0..N-1.
pub fn solve(
    problem: &VieProblem,
    config: &CollocationConfig,
    rule: &GaussRule,
) -> Result<CollocationSolution> {
    let asm = Assembler::new(problem, config, rule)?;
    let m = config.m();
    let big_n = config.subintervals();
    let h = asm.h;
    let mut coeffs = vec![0.0; big_n * m];
    for n in 0..big_n {
        let g = asm.forcing_block(n)?;
        let hist = asm.history_sum(n, &coeffs)?;
        let b = asm.current_block(n)?;
        let norm = h * norm1(&b);
        if norm >= 1.0 {
            return Err(Error::StepSize { n, value: norm });
        }
        let a = DMatrix::identity(m, m) - b * h;
        let rhs = DVector::from_iterator(m, g.iter().zip(&hist).map(|(x, y)| x + y));
        let lu = a.clone().lu();
        let condition = match lu.try_inverse() {
            Some(inv) => norm1(&a) * norm1(&inv),
            None => f64::INFINITY,
        };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { n, condition });
        }
        let u = lu
            .solve(&rhs)
            .ok_or(Error::IllConditioned { n, condition })?;
        coeffs[n * m..(n + 1) * m].copy_from_slice(u.as_slice());
    }
    Ok(CollocationSolution {
        config: config.clone(),
        horizon: problem.horizon(),
        basis: LagrangeBasis::new(config.params())?,
        coeffs,
    })
}

/// Collocation defect `u_h(t) - g(t) - (V u_h)(t)` at t_{n,i}, with the
/// integral evaluated by the assembly quadrature.
pub fn residual(
    problem: &VieProblem,
    solution: &CollocationSolution,
    rule: &GaussRule,
    n: usize,
    i: usize,
) -> Result<f64> {
    let config = solution.config();
    check_block_index(config, n)?;
    if i >= config.m() {
        return Err(Error::InvalidParameter(format!(
            "collocation index {i} out of range for m = {}",
            config.m()
        )));
    }
    let asm = Assembler::new(problem, config, rule)?;
    let g = asm.forcing_block(n)?;
    let hist = asm.history_sum(n, solution.coeffs())?;
    let b = asm.current_block(n)?;
    let u = solution.block(n);
    let local: f64 = (0..config.m()).map(|j| asm.h * b[(i, j)] * u[j]).sum();
    Ok(u[i] - g[i] - hist[i] - local)
}

/// Maximum absolute column sum.
fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
