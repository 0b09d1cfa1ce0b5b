//! Claim-size laws, penalty functions and the model-derived scalar
//! functions that enter the Gerber–Shiu integral equation.
//!
//! The built-in claim laws (exponential, Erlang(2) and two-term combinations
//! of exponentials) are finite sums of gamma-type terms `a·xⁿ·e^{-bx}`. For
//! those, the tail `A`, its running integral, its mass `m_A` and all Laplace
//! transforms are evaluated in closed form through [`ExpPoly`]. Custom laws
//! and custom penalties fall back to Gauss–Legendre quadrature.

use std::fmt;
use std::sync::Arc;

use crate::error::{ensure_nonneg, Error, Result};
use crate::quadrature::{integrate_semi_infinite, semi_infinite_table, CumulativeIntegral};
use crate::vie::VieProblem;

/// Panel width of the running-integral table used for custom penalties.
const CUMULATIVE_WIDTH: f64 = 0.25;

/// Premium rate, claim intensity, interest force and discount rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskParams {
    pub c: f64,
    pub lambda: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl RiskParams {
    /// Validated constructor: `c > 0`, `lambda > 0`, `delta >= 0`, `alpha >= 0`.
    ///
    /// The fields are public so degenerate fixtures (for instance `lambda = 0`)
    /// can still be built directly.
    pub fn new(c: f64, lambda: f64, delta: f64, alpha: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite();
        if !(ok(c) && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "premium rate c must be > 0, got {c}"
            )));
        }
        if !(ok(lambda) && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "claim intensity lambda must be > 0, got {lambda}"
            )));
        }
        if !(ok(delta) && delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "interest force delta must be >= 0, got {delta}"
            )));
        }
        if !(ok(alpha) && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "discount rate alpha must be >= 0, got {alpha}"
            )));
        }
        Ok(Self {
            c,
            lambda,
            delta,
            alpha,
        })
    }

    /// Premium loading θ in `c = λμ(1+θ)`.
    pub fn loading(&self, model: &ClaimModel) -> f64 {
        self.c / (self.lambda * model.mean()) - 1.0
    }

    /// Fails unless `c > λμ`.
    pub fn check_loading(&self, model: &ClaimModel) -> Result<()> {
        let drift = self.c - self.lambda * model.mean();
        if drift > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "positive loading requires c > lambda*mu, got c={} and lambda*mu={}",
                self.c,
                self.lambda * model.mean()
            )))
        }
    }
}

/// One `coeff · t^power · e^{-rate·t}` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coeff: f64,
    pub power: u32,
    pub rate: f64,
}

/// Finite sum of [`ExpTerm`]s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpPoly {
    terms: Vec<ExpTerm>,
}

impl ExpPoly {
    pub fn new(terms: Vec<ExpTerm>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|e| e.coeff * t.powi(e.power as i32) * (-e.rate * t).exp())
            .sum()
    }

    /// ∫₀^u of the sum.
    pub fn integral_to(&self, u: f64) -> f64 {
        self.terms
            .iter()
            .map(|e| {
                e.coeff * lower_gamma_int(e.power, e.rate * u) / e.rate.powi(e.power as i32 + 1)
            })
            .sum()
    }

    /// Laplace transform ∫₀^∞ e^{-sx} (...) dx.
    pub fn laplace(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|e| e.coeff * factorial(e.power) / (e.rate + s).powi(e.power as i32 + 1))
            .sum()
    }

    /// ∫₀^z L(δ·s) ds where L is [`ExpPoly::laplace`].
    pub fn laplace_integral(&self, delta: f64, z: f64) -> f64 {
        if delta == 0.0 {
            return z * self.laplace(0.0);
        }
        self.terms
            .iter()
            .map(|e| {
                let b = e.rate;
                let p = e.power as i32;
                let ratio_log = (delta * z / b).ln_1p();
                let inner = if p == 0 {
                    ratio_log / delta
                } else {
                    // [b^{-p} - (b+δz)^{-p}] / (pδ) without cancellation.
                    -(-(p as f64) * ratio_log).exp_m1() / (b.powi(p) * p as f64 * delta)
                };
                e.coeff * factorial(e.power) * inner
            })
            .sum()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// ∫₀^x t^p e^{-t} dt for integer p.
fn lower_gamma_int(p: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let pf = factorial(p);
    if x < 4.0 + p as f64 {
        // p! e^{-x} Σ_{i>p} x^i / i!
        let mut term = (1..=p + 1).fold(1.0, |acc, i| acc * x / f64::from(i));
        let mut sum = 0.0;
        let mut i = p + 1;
        loop {
            sum += term;
            i += 1;
            term *= x / f64::from(i);
            if term < 1e-18 * sum {
                break;
            }
        }
        pf * (-x).exp() * sum
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..=p {
            term *= x / f64::from(i);
            sum += term;
        }
        pf * (1.0 - (-x).exp() * sum)
    }
}

/// Density term `a·xⁿ·e^{-bx}` of a built-in claim law.
#[derive(Debug, Clone, Copy, PartialEq)]
struct DensityTerm {
    a: f64,
    n: u32,
    b: f64,
}

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Caller-supplied claim law.
#[derive(Clone)]
pub struct CustomClaims {
    density: Fn1,
    cdf: Fn1,
    mean: f64,
}

impl fmt::Debug for CustomClaims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomClaims")
            .field("mean", &self.mean)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum ClaimKind {
    Exponential {
        rate: f64,
    },
    Erlang2 {
        rate: f64,
    },
    /// Density `w1·r1·e^{-r1 x} + w2·r2·e^{-r2 x}` with `w1 + w2 = 1`.
    CombinationOfExponentials {
        w1: f64,
        r1: f64,
        w2: f64,
        r2: f64,
    },
    Custom(CustomClaims),
}

/// Claim-size distribution.
#[derive(Debug, Clone)]
pub struct ClaimModel {
    kind: ClaimKind,
    mu: f64,
    terms: Vec<DensityTerm>,
    survival: Option<ExpPoly>,
}

impl ClaimModel {
    pub fn exponential(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self::from_terms(
            ClaimKind::Exponential { rate },
            vec![DensityTerm {
                a: rate,
                n: 0,
                b: rate,
            }],
        ))
    }

    /// Gamma law with shape 2: density `rate²·x·e^{-rate·x}`.
    pub fn erlang2(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self::from_terms(
            ClaimKind::Erlang2 { rate },
            vec![DensityTerm {
                a: rate * rate,
                n: 1,
                b: rate,
            }],
        ))
    }

    /// Two-term combination of exponentials; one weight may be negative as
    /// long as the density stays nonnegative.
    pub fn combination(w1: f64, r1: f64, w2: f64, r2: f64) -> Result<Self> {
        check_rate(r1)?;
        check_rate(r2)?;
        if r1 == r2 {
            return Err(Error::InvalidParameter(
                "combination rates must differ".into(),
            ));
        }
        if !((w1 + w2) - 1.0).abs().le(&1e-12) {
            return Err(Error::InvalidParameter(format!(
                "combination weights must sum to 1, got {w1} + {w2}"
            )));
        }
        // Nonnegative density: f(0) >= 0 and any negative weight sits on the
        // faster-decaying component.
        let slow_weight = if r1 < r2 { w1 } else { w2 };
        if w1 * r1 + w2 * r2 < 0.0 || slow_weight <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "combination ({w1},{r1}),({w2},{r2}) does not define a nonnegative density"
            )));
        }
        Ok(Self::from_terms(
            ClaimKind::CombinationOfExponentials { w1, r1, w2, r2 },
            vec![
                DensityTerm {
                    a: w1 * r1,
                    n: 0,
                    b: r1,
                },
                DensityTerm {
                    a: w2 * r2,
                    n: 0,
                    b: r2,
                },
            ],
        ))
    }

    /// Custom law from explicit density, CDF and mean. The CDF must satisfy
    /// `cdf(0) = 0`; nothing is differentiated or inverted numerically.
    pub fn custom(
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mean: f64,
    ) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "custom claim mean must be positive and finite, got {mean}"
            )));
        }
        Ok(Self {
            kind: ClaimKind::Custom(CustomClaims {
                density: Arc::new(density),
                cdf: Arc::new(cdf),
                mean,
            }),
            mu: mean,
            terms: Vec::new(),
            survival: None,
        })
    }

    fn from_terms(kind: ClaimKind, terms: Vec<DensityTerm>) -> Self {
        let mu = terms
            .iter()
            .map(|t| t.a * factorial(t.n + 1) / t.b.powi(t.n as i32 + 2))
            .sum();
        let survival = tail_poly(&terms, &[(0, 0, 1.0)]);
        Self {
            kind,
            mu,
            terms,
            survival: Some(survival),
        }
    }

    pub fn kind(&self) -> &ClaimKind {
        &self.kind
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.kind, ClaimKind::Custom(_))
    }

    /// Mean claim size μ.
    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.kind {
            ClaimKind::Custom(c) => (c.density)(x),
            _ => self
                .terms
                .iter()
                .map(|t| t.a * x.powi(t.n as i32) * (-t.b * x).exp())
                .sum(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            ClaimKind::Custom(c) => (c.cdf)(x),
            _ => 1.0 - self.survival_unchecked(x),
        }
    }

    /// F̄(x) = 1 - F(x); negative arguments are a domain error.
    pub fn survival(&self, x: f64) -> Result<f64> {
        ensure_nonneg("claim size x", x)?;
        Ok(self.survival_unchecked(x))
    }

    pub(crate) fn survival_unchecked(&self, x: f64) -> f64 {
        match (&self.survival, &self.kind) {
            (Some(p), _) => p.eval(x),
            (None, ClaimKind::Custom(c)) => 1.0 - (c.cdf)(x),
            (None, _) => unreachable!("built-in models carry a closed-form survival"),
        }
    }

    /// Closed-form F̄ for built-in laws.
    pub fn survival_poly(&self) -> Option<&ExpPoly> {
        self.survival.as_ref()
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "rate must be positive, got {rate}"
        )))
    }
}

/// A(t) = ∫₀^∞ w(t, x) f(t + x) dx for a density made of gamma-type terms and
/// a penalty `w(t, x) = Σ γ·tⁱ·xʲ`, given as `(i, j, γ)` triples.
fn tail_poly(terms: &[DensityTerm], penalty: &[(u32, u32, f64)]) -> ExpPoly {
    let mut out = Vec::new();
    for d in terms {
        for &(i, j, gamma) in penalty {
            // ∫₀^∞ x^j (x+t)^n e^{-b x} dx = Σ_k C(n,k) t^{n-k} (j+k)! / b^{j+k+1}
            for k in 0..=d.n {
                let coeff = gamma * d.a * binomial(d.n, k) * factorial(j + k)
                    / d.b.powi((j + k + 1) as i32);
                out.push(ExpTerm {
                    coeff,
                    power: i + d.n - k,
                    rate: d.b,
                });
            }
        }
    }
    ExpPoly::new(out)
}

/// Caller-supplied penalty `w(x, y)`.
#[derive(Clone)]
pub struct CustomPenalty(Fn2);

impl fmt::Debug for CustomPenalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomPenalty(..)")
    }
}

/// Penalty applied to (surplus before ruin, deficit at ruin).
#[derive(Debug, Clone)]
pub enum PenaltyKind {
    /// w ≡ 1: ruin probability.
    RuinIndicator,
    /// w(x, y) = x + y: expected claim causing ruin.
    ClaimCausingRuin,
    /// w(x, y) = y: expected deficit at ruin.
    DeficitAtRuin,
    Custom(CustomPenalty),
}

impl PenaltyKind {
    pub fn custom(w: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        PenaltyKind::Custom(CustomPenalty(Arc::new(w)))
    }

    pub fn eval(&self, surplus_before: f64, deficit: f64) -> f64 {
        match self {
            PenaltyKind::RuinIndicator => 1.0,
            PenaltyKind::ClaimCausingRuin => surplus_before + deficit,
            PenaltyKind::DeficitAtRuin => deficit,
            PenaltyKind::Custom(w) => (w.0)(surplus_before, deficit),
        }
    }

    fn monomials(&self) -> Option<&'static [(u32, u32, f64)]> {
        match self {
            PenaltyKind::RuinIndicator => Some(&[(0, 0, 1.0)]),
            PenaltyKind::ClaimCausingRuin => Some(&[(1, 0, 1.0), (0, 1, 1.0)]),
            PenaltyKind::DeficitAtRuin => Some(&[(0, 1, 1.0)]),
            PenaltyKind::Custom(_) => None,
        }
    }
}

/// Precomputed representation of A for one (claim law, penalty) pair.
#[derive(Debug, Clone)]
pub enum PenaltyTail {
    Closed(ExpPoly),
    Numeric {
        model: ClaimModel,
        penalty: PenaltyKind,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        values: Vec<f64>,
        mass: f64,
    },
}

impl PenaltyTail {
    /// Closed form when both the law and the penalty are built in,
    /// quadrature tables otherwise.
    pub fn new(model: &ClaimModel, penalty: &PenaltyKind) -> Result<Self> {
        match (model.is_builtin(), penalty.monomials()) {
            (true, Some(mono)) => Ok(PenaltyTail::Closed(tail_poly(&model.terms, mono))),
            _ => Self::by_quadrature(model, penalty),
        }
    }

    /// Quadrature representation regardless of closed-form availability.
    pub fn by_quadrature(model: &ClaimModel, penalty: &PenaltyKind) -> Result<Self> {
        let mut failure = None;
        let (nodes, weights, values) =
            semi_infinite_table(|t| match tail_by_quadrature(model, penalty, t) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            })?;
        if let Some(e) = failure {
            return Err(e);
        }
        let mass: f64 = weights.iter().zip(&values).map(|(w, v)| w * v).sum();
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::ConvergenceFailure(format!(
                "penalty mass m_A = {mass} is not a nonnegative finite number"
            )));
        }
        Ok(PenaltyTail::Numeric {
            model: model.clone(),
            penalty: penalty.clone(),
            nodes,
            weights,
            values,
            mass,
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            PenaltyTail::Closed(p) => Ok(p.eval(t)),
            PenaltyTail::Numeric { model, penalty, .. } => tail_by_quadrature(model, penalty, t),
        }
    }

    /// m_A = ∫₀^∞ A(t) dt.
    pub fn mass(&self) -> f64 {
        match self {
            PenaltyTail::Closed(p) => p.laplace(0.0),
            PenaltyTail::Numeric { mass, .. } => *mass,
        }
    }

    /// β(s) = (1/m_A) ∫₀^∞ e^{-sx} A(x) dx, taken as 0 when A vanishes.
    pub fn beta(&self, s: f64) -> f64 {
        if self.mass() == 0.0 {
            return 0.0;
        }
        match self {
            PenaltyTail::Closed(p) => p.laplace(s) / p.laplace(0.0),
            PenaltyTail::Numeric {
                nodes,
                weights,
                values,
                mass,
                ..
            } => {
                let acc: f64 = nodes
                    .iter()
                    .zip(weights)
                    .zip(values)
                    .map(|((x, w), v)| w * (-s * x).exp() * v)
                    .sum();
                acc / mass
            }
        }
    }

    /// Running integral ∫₀^u A(t) dt, valid on [0, horizon].
    pub fn running_integral(&self, horizon: f64) -> Result<RunningTail> {
        match self {
            PenaltyTail::Closed(p) => Ok(RunningTail::Closed(p.clone())),
            PenaltyTail::Numeric { model, penalty, .. } => {
                let mut table = CumulativeIntegral::new(CUMULATIVE_WIDTH);
                let mut failure = None;
                table.extend_to(horizon, |t| match tail_by_quadrature(model, penalty, t) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                })?;
                match failure {
                    Some(e) => Err(e),
                    None => Ok(RunningTail::Table(table)),
                }
            }
        }
    }
}

/// ∫₀^u A(t) dt evaluator.
#[derive(Debug, Clone)]
pub enum RunningTail {
    Closed(ExpPoly),
    #[allow(private_interfaces)]
    Table(CumulativeIntegral),
}

impl RunningTail {
    pub fn integral_to(&self, u: f64) -> f64 {
        match self {
            RunningTail::Closed(p) => p.integral_to(u),
            RunningTail::Table(t) => t.integral_to(u.min(t.end())),
        }
    }
}

fn tail_by_quadrature(model: &ClaimModel, penalty: &PenaltyKind, t: f64) -> Result<f64> {
    integrate_semi_infinite(|x| penalty.eval(t, x) * model.density(t + x), 0.0)
}

/// F̄(x) for x >= 0.
pub fn survival(model: &ClaimModel, x: f64) -> Result<f64> {
    model.survival(x)
}

/// A(t) = ∫_t^∞ w(t, s - t) dF(s).
pub fn penalty_tail_a(model: &ClaimModel, penalty: &PenaltyKind, t: f64) -> Result<f64> {
    ensure_nonneg("t", t)?;
    match (model.is_builtin(), penalty.monomials()) {
        (true, Some(mono)) => Ok(tail_poly(&model.terms, mono).eval(t)),
        _ => tail_by_quadrature(model, penalty, t),
    }
}

/// A(t) by semi-infinite quadrature of the density.
pub fn penalty_tail_a_by_quadrature(
    model: &ClaimModel,
    penalty: &PenaltyKind,
    t: f64,
) -> Result<f64> {
    ensure_nonneg("t", t)?;
    tail_by_quadrature(model, penalty, t)
}

/// m_A = ∫₀^∞ A(t) dt; equals μ for the ruin indicator.
pub fn penalty_mass(model: &ClaimModel, penalty: &PenaltyKind) -> Result<f64> {
    if matches!(penalty, PenaltyKind::RuinIndicator) {
        return Ok(model.mean());
    }
    Ok(PenaltyTail::new(model, penalty)?.mass())
}

pub fn penalty_mass_by_quadrature(model: &ClaimModel, penalty: &PenaltyKind) -> Result<f64> {
    Ok(PenaltyTail::by_quadrature(model, penalty)?.mass())
}

/// φ₁(s) = (1/μ) ∫₀^∞ e^{-sx} F̄(x) dx.
pub fn phi1(model: &ClaimModel, s: f64) -> Result<f64> {
    ensure_nonneg("s", s)?;
    match model.survival_poly() {
        Some(p) => Ok(p.laplace(s) / model.mean()),
        None => phi1_by_quadrature(model, s),
    }
}

pub fn phi1_by_quadrature(model: &ClaimModel, s: f64) -> Result<f64> {
    ensure_nonneg("s", s)?;
    let v = integrate_semi_infinite(|x| (-s * x).exp() * model.survival_unchecked(x), 0.0)?;
    Ok(v / model.mean())
}

/// β(s) = (1/m_A) ∫₀^∞ e^{-sx} A(x) dx; coincides with φ₁ for the ruin
/// indicator.
pub fn beta_transform(model: &ClaimModel, penalty: &PenaltyKind, s: f64) -> Result<f64> {
    ensure_nonneg("s", s)?;
    if matches!(penalty, PenaltyKind::RuinIndicator) {
        return phi1(model, s);
    }
    Ok(PenaltyTail::new(model, penalty)?.beta(s))
}

pub fn beta_transform_by_quadrature(
    model: &ClaimModel,
    penalty: &PenaltyKind,
    s: f64,
) -> Result<f64> {
    ensure_nonneg("s", s)?;
    Ok(PenaltyTail::by_quadrature(model, penalty)?.beta(s))
}

/// K(u, t) = (δ + α + λ F̄(u - t)) / (c + δu) on 0 <= t <= u.
pub fn gs_kernel(params: &RiskParams, model: &ClaimModel, u: f64, t: f64) -> Result<f64> {
    ensure_nonneg("t", t)?;
    if t > u {
        return Err(Error::Domain {
            what: "kernel argument t",
            value: t,
            expected: "t <= u",
        });
    }
    Ok(kernel_unchecked(params, model, u, t))
}

#[inline]
fn kernel_unchecked(params: &RiskParams, model: &ClaimModel, u: f64, t: f64) -> f64 {
    (params.delta + params.alpha + params.lambda * model.survival_unchecked(u - t))
        / (params.c + params.delta * u)
}

/// Forcing term g(u) = cΦ(0)/(c + δu) - λ/(c + δu) ∫₀^u A(t) dt.
#[derive(Debug, Clone)]
pub struct GsForcing {
    c: f64,
    lambda: f64,
    delta: f64,
    phi0: f64,
    tail: RunningTail,
}

impl GsForcing {
    /// Forcing valid on [0, horizon]. Only α = 0 is supported.
    pub fn new(
        params: &RiskParams,
        model: &ClaimModel,
        penalty: &PenaltyKind,
        phi0: f64,
        horizon: f64,
    ) -> Result<Self> {
        if params.alpha != 0.0 {
            return Err(Error::Unsupported(format!(
                "the second-kind forcing term is only available for alpha = 0, got alpha = {}",
                params.alpha
            )));
        }
        if !phi0.is_finite() || phi0 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "boundary value phi0 must be finite and >= 0, got {phi0}"
            )));
        }
        ensure_nonneg("horizon", horizon)?;
        let tail = PenaltyTail::new(model, penalty)?.running_integral(horizon)?;
        Ok(Self {
            c: params.c,
            lambda: params.lambda,
            delta: params.delta,
            phi0,
            tail,
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        let denom = self.c + self.delta * u;
        if self.lambda == 0.0 {
            return self.c * self.phi0 / denom;
        }
        (self.c * self.phi0 - self.lambda * self.tail.integral_to(u)) / denom
    }
}

/// g(u) at a single point.
pub fn gs_forcing(
    params: &RiskParams,
    model: &ClaimModel,
    penalty: &PenaltyKind,
    phi0: f64,
    u: f64,
) -> Result<f64> {
    ensure_nonneg("u", u)?;
    Ok(GsForcing::new(params, model, penalty, phi0, u)?.eval(u))
}

/// The Gerber–Shiu second-kind Volterra equation on [0, horizon].
pub fn build_gs_vie(
    params: &RiskParams,
    model: &ClaimModel,
    penalty: &PenaltyKind,
    phi0: f64,
    horizon: f64,
) -> Result<VieProblem> {
    let forcing = GsForcing::new(params, model, penalty, phi0, horizon)?;
    let p = *params;
    let m = model.clone();
    VieProblem::new(
        move |u| forcing.eval(u),
        move |u, t| kernel_unchecked(&p, &m, u, t),
        horizon,
    )
}
