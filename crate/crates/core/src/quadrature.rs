//! Gauss–Legendre quadrature.
//!
//! Rules are computed by Newton iteration on the Legendre three-term
//! recurrence and cached per order for the lifetime of the process, so every
//! caller sees the same node set bit for bit.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest supported rule order.
pub const MAX_ORDER: usize = 64;

/// Order used for the semi-infinite and panel integrals of the model layer.
pub(crate) const PANEL_ORDER: usize = 32;

/// Relative size of the last doubling panel at which a semi-infinite
/// integral is considered converged.
const TAIL_REL_TOL: f64 = 1e-13;

/// Truncation cap for semi-infinite integrals.
const TAIL_CAP: f64 = 1e4;

/// A q-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// Computes the q-point rule, 1 <= q <= 64.
    pub fn new(q: usize) -> Result<Self> {
        if q == 0 || q > MAX_ORDER {
            return Err(Error::InvalidParameter(format!(
                "Gauss-Legendre order must be in 1..={MAX_ORDER}, got {q}"
            )));
        }
        let mut nodes = vec![0.0; q];
        let mut weights = vec![0.0; q];
        let half = q.div_ceil(2);
        for k in 0..half {
            // Tricomi's initial guess for the k-th largest root.
            let mut x = (PI * (k as f64 + 0.75) / (q as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(q, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-15 {
                    // One more sweep settles the last bit.
                    let (p, d) = legendre_with_derivative(q, x);
                    x -= p / d;
                    dp = d;
                    break;
                }
            }
            if q % 2 == 1 && k == half - 1 {
                x = 0.0;
                dp = legendre_with_derivative(q, 0.0).1;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[k] = -x;
            nodes[q - 1 - k] = x;
            weights[k] = w;
            weights[q - 1 - k] = w;
        }
        Ok(Self {
            order: q,
            nodes,
            weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Nodes in ascending order on [-1, 1].
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights affinely mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Raw estimate of the integral of `f` over [a, b]; no finiteness check.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        half * acc
    }
}

/// Evaluates (P_q(x), P_q'(x)).
fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached rule of order q.
pub fn gauss_rule(q: usize) -> Result<&'static GaussRule> {
    static CACHE: [OnceLock<GaussRule>; MAX_ORDER] = [const { OnceLock::new() }; MAX_ORDER];
    if q == 0 || q > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "Gauss-Legendre order must be in 1..={MAX_ORDER}, got {q}"
        )));
    }
    Ok(CACHE[q - 1].get_or_init(|| GaussRule::new(q).expect("order validated above")))
}

/// Affine-mapped Gauss–Legendre estimate of the integral of `f` over [a, b].
pub fn integrate(rule: &GaussRule, f: impl FnMut(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidParameter(format!(
            "integration bounds must satisfy a <= b, got [{a}, {b}]"
        )));
    }
    let v = rule.apply(f, a, b);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("integrand over [{a}, {b}]")))
    }
}

/// Composite rule over [a, b] with panels no wider than `max_width`.
pub(crate) fn composite(
    rule: &GaussRule,
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    max_width: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * width;
            let hi = if k + 1 == panels { b } else { lo + width };
            rule.apply(&mut f, lo, hi)
        })
        .sum()
}

/// Integral of `f` over [a, ∞) by interval doubling.
///
/// Integrates [a, a+1], then [a+L, a+2L] for L = 1, 2, 4, ... with unit-width
/// 32-point panels until the newest piece contributes less than 1e-13 of the
/// running total. Exceeding L = 1e4 is a convergence failure.
pub fn integrate_semi_infinite(mut f: impl FnMut(f64) -> f64, a: f64) -> Result<f64> {
    let rule = gauss_rule(PANEL_ORDER)?;
    let mut total = rule.apply(&mut f, a, a + 1.0);
    let mut len = 1.0;
    loop {
        let piece = composite(rule, &mut f, a + len, a + 2.0 * len, 1.0);
        total += piece;
        len *= 2.0;
        if !total.is_finite() {
            return Err(Error::NonFinite(format!(
                "semi-infinite integrand on [{a}, {}]",
                a + len
            )));
        }
        if len >= 8.0 && piece.abs() <= TAIL_REL_TOL * total.abs() {
            return Ok(total);
        }
        if len * 2.0 > TAIL_CAP {
            return Err(Error::ConvergenceFailure(format!(
                "tail of the integral from {a} still contributes {piece:e} at truncation length {len}"
            )));
        }
    }
}

/// Nodes of a semi-infinite composite rule together with their weights,
/// truncated by the same doubling test as [`integrate_semi_infinite`].
///
/// Returned as (nodes, weights, f values at the nodes).
pub(crate) fn semi_infinite_table(
    mut f: impl FnMut(f64) -> f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let rule = gauss_rule(PANEL_ORDER)?;
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let mut fs = Vec::new();
    let mut push_range =
        |lo: f64, hi: f64, xs: &mut Vec<f64>, ws: &mut Vec<f64>, fs: &mut Vec<f64>| {
            let panels = (hi - lo).ceil().max(1.0) as usize;
            let width = (hi - lo) / panels as f64;
            let mut piece = 0.0;
            for k in 0..panels {
                let a = lo + k as f64 * width;
                for (x, w) in rule.mapped(a, a + width) {
                    let v = f(x);
                    xs.push(x);
                    ws.push(w);
                    fs.push(v);
                    piece += w * v;
                }
            }
            piece
        };
    let mut total = push_range(0.0, 1.0, &mut xs, &mut ws, &mut fs);
    let mut len = 1.0;
    loop {
        let piece = push_range(len, 2.0 * len, &mut xs, &mut ws, &mut fs);
        total += piece;
        len *= 2.0;
        if !total.is_finite() {
            return Err(Error::NonFinite(format!(
                "semi-infinite integrand on [0, {len}]"
            )));
        }
        if len >= 8.0 && piece.abs() <= TAIL_REL_TOL * total.abs() {
            return Ok((xs, ws, fs));
        }
        if len * 2.0 > TAIL_CAP {
            return Err(Error::ConvergenceFailure(format!(
                "tail still contributes {piece:e} at truncation length {len}"
            )));
        }
    }
}

/// Running integral ∫₀^x f built panel by panel.
///
/// Each panel stores f at its Gauss nodes; partial panels are integrated
/// through the degree q-1 interpolant of those values, so no extra f
/// evaluations are needed after construction.
#[derive(Debug, Clone)]
pub(crate) struct CumulativeIntegral {
    width: f64,
    rule: &'static GaussRule,
    bary: Vec<f64>,
    /// ∫₀^{k·width} f for k = 0..=panels.
    starts: Vec<f64>,
    /// f at the mapped nodes, panel-major.
    values: Vec<f64>,
}

const CUMULATIVE_ORDER: usize = 16;

impl CumulativeIntegral {
    pub(crate) fn new(width: f64) -> Self {
        let rule = gauss_rule(CUMULATIVE_ORDER).expect("fixed order is valid");
        let nodes = rule.nodes();
        let bary = (0..nodes.len())
            .map(|j| {
                let prod: f64 = (0..nodes.len())
                    .filter(|&k| k != j)
                    .map(|k| nodes[j] - nodes[k])
                    .product();
                1.0 / prod
            })
            .collect();
        Self {
            width,
            rule,
            bary,
            starts: vec![0.0],
            values: Vec::new(),
        }
    }

    /// Panel-covered range [0, end].
    pub(crate) fn end(&self) -> f64 {
        (self.starts.len() - 1) as f64 * self.width
    }

    /// Adds panels until [0, x] is covered.
    pub(crate) fn extend_to(&mut self, x: f64, mut f: impl FnMut(f64) -> f64) -> Result<()> {
        while self.end() < x {
            let a = self.end();
            let mut piece = 0.0;
            for (t, w) in self.rule.mapped(a, a + self.width) {
                let v = f(t);
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("cumulative integrand at {t}")));
                }
                self.values.push(v);
                piece += w * v;
            }
            let last = *self.starts.last().expect("starts is never empty");
            self.starts.push(last + piece);
        }
        Ok(())
    }

    fn interpolate(&self, panel: usize, xi: f64) -> f64 {
        let q = self.rule.order();
        let vals = &self.values[panel * q..(panel + 1) * q];
        let nodes = self.rule.nodes();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..q {
            let d = xi - nodes[j];
            if d == 0.0 {
                return vals[j];
            }
            let c = self.bary[j] / d;
            num += c * vals[j];
            den += c;
        }
        num / den
    }

    /// ∫₀^x f; `x` must lie within the covered range.
    pub(crate) fn integral_to(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0 && x <= self.end() * (1.0 + 1e-12));
        let panels = self.starts.len() - 1;
        let k = ((x / self.width).floor() as usize).min(panels.saturating_sub(1));
        let a = k as f64 * self.width;
        if x == a {
            return self.starts[k];
        }
        // Map [a, x] into the panel's reference coordinate.
        let to_ref = |t: f64| 2.0 * (t - a) / self.width - 1.0;
        let part = self.rule.apply(|t| self.interpolate(k, to_ref(t)), a, x);
        self.starts[k] + part
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_orders_match_classical_values() {
        let r1 = GaussRule::new(1).unwrap();
        assert_eq!(r1.nodes(), &[0.0]);
        assert_eq!(r1.weights(), &[2.0]);

        let r2 = GaussRule::new(2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(r2.nodes()[0], -x, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.nodes()[1], x, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.weights()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.weights()[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn five_points_integrate_x8() {
        let r = GaussRule::new(5).unwrap();
        let v = integrate(&r, |x| x.powi(8), -1.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, 2.0 / 9.0, epsilon = 1e-13);
    }

    #[test]
    fn rule_invariants_up_to_sixty_four() {
        for q in 1..=MAX_ORDER {
            let r = gauss_rule(q).unwrap();
            let sum: f64 = r.weights().iter().sum();
            assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-14);
            for k in 0..q {
                assert_abs_diff_eq!(r.nodes()[k], -r.nodes()[q - 1 - k], epsilon = 1e-14);
                assert!(r.weights()[k] > 0.0);
                assert!(r.nodes()[k] > -1.0 && r.nodes()[k] < 1.0);
            }
            for w in r.nodes().windows(2) {
                assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn order_out_of_range_is_rejected() {
        assert!(GaussRule::new(0).is_err());
        assert!(GaussRule::new(65).is_err());
        assert!(gauss_rule(65).is_err());
    }

    #[test]
    fn degenerate_and_simple_intervals() {
        let r = gauss_rule(2).unwrap();
        assert_eq!(integrate(r, |x| x.exp(), 0.7, 0.7).unwrap(), 0.0);
        assert_abs_diff_eq!(
            integrate(r, |_| 1.0, 0.0, 1.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            integrate(r, |s| s * s * s, 0.0, 1.0).unwrap(),
            0.25,
            epsilon = 1e-16
        );
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = gauss_rule(4).unwrap();
        let err = integrate(r, |x| 1.0 / (x - x), 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert!(integrate(r, |x| x, 1.0, 0.0).is_err());
    }

    #[test]
    fn semi_infinite_exponential_moments() {
        let v = integrate_semi_infinite(|x| (-x).exp(), 0.0).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        let v = integrate_semi_infinite(|x| x * x * (-2.0 * x).exp(), 0.0).unwrap();
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-14);
        let v = integrate_semi_infinite(|x| (-x).exp(), 3.0).unwrap();
        assert_abs_diff_eq!(v, (-3.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn divergent_tail_fails() {
        let err = integrate_semi_infinite(|x| 1.0 / (1.0 + x), 0.0).unwrap_err();
        assert!(matches!(err, Error::ConvergenceFailure(_)));
    }

    #[test]
    fn cumulative_integral_matches_closed_form() {
        let mut c = CumulativeIntegral::new(0.25);
        c.extend_to(10.0, |x| (-x).exp() * (1.0 + x)).unwrap();
        for k in 0..=96 {
            let x = k as f64 * 0.1031;
            // ∫₀^x (1+t)e^{-t} dt = 2 - (2+x)e^{-x}
            let exact = 2.0 - (2.0 + x) * (-x).exp();
            assert_abs_diff_eq!(c.integral_to(x), exact, epsilon = 1e-14);
        }
    }
}
