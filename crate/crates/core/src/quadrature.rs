//! One-dimensional rules: Gauss–Legendre, composite panels, periodic trapezoid and adaptive
//! Gauss–Kronrod.

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=order {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if order == 0 {
        return (1.0, 0.0);
    }
    let dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A one-dimensional rule as explicit `(node, weight)` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Composite Gauss–Legendre: each segment between consecutive `breaks` is split into
    /// `panels` equal panels carrying an `order`-point rule.
    pub fn composite(breaks: &[f64], panels: usize, order: usize) -> Result<Self> {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("breaks", "breakpoints must be strictly increasing"));
        }
        if panels == 0 || order == 0 {
            return Err(Error::param("order", "panels and order must be positive"));
        }
        let (x, w) = gauss_legendre(order);
        let mut rule = Rule::default();
        for seg in breaks.windows(2) {
            let width = (seg[1] - seg[0]) / panels as f64;
            for p in 0..panels {
                let a = seg[0] + width * p as f64;
                for (xi, wi) in x.iter().zip(&w) {
                    rule.nodes.push(a + 0.5 * width * (xi + 1.0));
                    rule.weights.push(0.5 * width * wi);
                }
            }
        }
        Ok(rule)
    }

    /// Trapezoid rule on a full period `[0, 2π)`.
    pub fn periodic(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::param("count", "periodic rule needs at least one node"));
        }
        let h = 2.0 * PI / count as f64;
        Ok(Rule { nodes: (0..count).map(|k| h * k as f64).collect(), weights: vec![h; count] })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS7_WEIGHTS[3] * fc;
    for j in 0..7 {
        let dx = h * KRONROD_NODES[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += KRONROD_WEIGHTS[j] * pair;
        if j % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss–Kronrod (7, 15) on `[a, b]`, with optional interior breakpoints
/// where the integrand is known to be non-smooth.
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Estimate> {
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|x| *x > a && *x < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut heap = BinaryHeap::new();
    for w in cuts.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        heap.push(Interval { a: w[0], b: w[1], value, error });
    }
    loop {
        let total: f64 = heap.iter().map(|i| i.value).sum();
        let error: f64 = heap.iter().map(|i| i.error).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if error <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(Estimate { value: total, error });
        }
        if heap.len() >= max_intervals {
            return Err(Error::Quadrature(format!(
                "adaptive rule exhausted {max_intervals} intervals with error {error:e}"
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split at double precision
            heap.push(Interval { error: 0.0, ..worst });
            continue;
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, lo, hi);
            heap.push(Interval { a: lo, b: hi, value, error });
        }
    }
}

/// Neumaier-compensated sum, evaluated in the order given.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        let m18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert_abs_diff_eq!(m18, 2.0 / 19.0, epsilon = 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn composite_rule_integrates_smooth_function() {
        let rule = Rule::composite(&[0.0, 1.0, 3.0], 4, 8).unwrap();
        assert_abs_diff_eq!(rule.integrate(f64::exp), 3f64.exp() - 1.0, epsilon = 1e-12);
        assert!(Rule::composite(&[1.0, 0.0], 1, 4).is_err());
    }

    #[test]
    fn periodic_rule_is_spectral() {
        let rule = Rule::periodic(16).unwrap();
        let v = rule.integrate(|x| x.cos().exp());
        // 2π I₀(1)
        assert_abs_diff_eq!(v, 2.0 * PI * 1.266_065_877_752_008_4, epsilon = 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_and_interior_singularities() {
        let e = adaptive_gk(|x: f64| x.sqrt(), 0.0, 1.0, &[], 1e-14, 1e-14, 2000).unwrap();
        assert_abs_diff_eq!(e.value, 2.0 / 3.0, epsilon = 1e-13);
        let e = adaptive_gk(|x: f64| (x - 0.3).abs().sqrt(), 0.0, 1.0, &[0.3], 1e-14, 1e-14, 2000).unwrap();
        let exact = (2.0 / 3.0) * (0.3f64.powf(1.5) + 0.7f64.powf(1.5));
        assert_abs_diff_eq!(e.value, exact, epsilon = 1e-13);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = compensated_sum([1e16, 1.0, -1e16, 1.0]);
        assert_eq!(v, 2.0);
    }
}
