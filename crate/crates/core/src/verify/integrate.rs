//! Volume integrals over the group by tensor grids in adapted charts or by Monte Carlo.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Point, StepTwoGroup};
use crate::norms::koranyi_value;
use crate::quadrature::Rule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadMethod {
    TensorGrid,
    MonteCarlo,
}

/// Coordinates used by the tensor grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// `(|ω|, φ, λ)` with `z = |ω|(1+λ²)^{-1/4} e^{iφ}`, `t = λ|ω|²(1+λ²)^{-1/2}`, so that
    /// `|ω|` is the Korányi radius.
    PhiPolar,
    /// Cylindrical `(|z|, φ, t)`.
    Ambient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub method: QuadMethod,
    pub chart: Chart,
    /// Node counts along (radial, angular, vertical) axes of the tensor grid.
    pub nodes: [usize; 3],
    pub samples: usize,
    pub seed: u64,
    pub rel_tol: f64,
    /// Korányi radii bracketing the integrand's support, with smoothness breaks in between.
    pub radial_breaks: Vec<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            method: QuadMethod::TensorGrid,
            chart: Chart::PhiPolar,
            nodes: [96, 32, 96],
            samples: 10_000_000,
            seed: 0,
            rel_tol: 2e-3,
            radial_breaks: vec![0.25, 0.5, 1.5, 2.0],
        }
    }
}

impl QuadratureSpec {
    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self { method: QuadMethod::MonteCarlo, samples, seed, ..Self::default() }
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.radial_breaks = breaks;
        self
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        self.chart = chart;
        self
    }

    pub fn with_nodes(mut self, nodes: [usize; 3]) -> Self {
        self.nodes = nodes;
        self
    }

    fn validate(&self) -> Result<()> {
        let b = &self.radial_breaks;
        if b.len() < 2 || b[0] < 0.0 || b.windows(2).any(|w| !(w[1] > w[0])) || !b.iter().all(|v| v.is_finite()) {
            return Err(Error::param("radial_breaks", "need at least two increasing finite radii ≥ 0"));
        }
        match self.method {
            QuadMethod::TensorGrid if self.nodes.iter().any(|&k| k < 2) => {
                Err(Error::param("nodes", "each tensor axis needs at least two nodes"))
            }
            QuadMethod::MonteCarlo if self.samples < 2 => Err(Error::param("samples", "need at least two samples")),
            _ => Ok(()),
        }
    }

    fn outer_radius(&self) -> f64 {
        *self.radial_breaks.last().expect("validated")
    }
}

/// Integral estimates for `K` integrands sharing one set of nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadEstimate<const K: usize> {
    pub value: [f64; K],
    /// Difference to a half-resolution grid, or the Monte Carlo standard error.
    pub error: [f64; K],
    pub evaluations: usize,
}

/// Splits `total` nodes over the segments of `breaks` as Gauss–Legendre panels of order ≤ 16.
pub fn axis_rule(breaks: &[f64], total: usize) -> Result<Rule> {
    let segments = breaks.len().saturating_sub(1).max(1);
    let per_segment = (total / segments).max(1);
    let panels = per_segment.div_ceil(16);
    let order = per_segment.div_ceil(panels);
    Rule::composite(breaks, panels, order)
}

/// `α(β) = (π/2) β (2 − |β|)` maps `[−1, 1]` onto `[−π/2, π/2]` with vanishing derivative at the
/// ends, which smooths the `√cos α` edge of the chart.
fn alpha_of(beta: f64) -> (f64, f64) {
    (FRAC_PI_2 * beta * (2.0 - beta.abs()), PI * (1.0 - beta.abs()))
}

/// Point of `H¹` at Korányi radius `r`, angle `phi`, and `α = atan λ`.
pub fn phi_polar_point(r: f64, phi: f64, alpha: f64) -> Point {
    let rz = r * alpha.cos().sqrt();
    Point::single(&[rz * phi.cos(), rz * phi.sin()], r * r * alpha.sin())
}

fn require_tensor(g: &StepTwoGroup) -> Result<()> {
    if g.n() != 1 || g.h() != 1 {
        return Err(Error::param("quad_method", "tensor grids are implemented for n = 1, h = 1; use monte_carlo"));
    }
    Ok(())
}

fn accumulate<const K: usize>(acc: &mut [f64; K], w: f64, v: [f64; K]) -> Result<()> {
    for k in 0..K {
        if !v[k].is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand sample in component {k}")));
        }
        acc[k] += w * v[k];
    }
    Ok(())
}

/// Tensor sum `Σ w₀ w₁ w₂ J f(point)` over three one-dimensional rules.
pub(crate) fn tensor_sum<const K: usize, F, M>(rules: [&Rule; 3], map: M, f: &F) -> Result<([f64; K], usize)>
where
    F: Fn(&Point) -> Result<[f64; K]>,
    M: Fn(f64, f64, f64) -> (Point, f64),
{
    let mut acc = [0.0; K];
    let mut count = 0;
    for (a, wa) in rules[0].nodes.iter().zip(&rules[0].weights) {
        let mut inner = [0.0; K];
        for (c, wc) in rules[2].nodes.iter().zip(&rules[2].weights) {
            for (b, wb) in rules[1].nodes.iter().zip(&rules[1].weights) {
                let (x, jac) = map(*a, *b, *c);
                if jac == 0.0 {
                    continue;
                }
                count += 1;
                accumulate(&mut inner, wb * wc * jac, f(&x)?)?;
            }
        }
        accumulate(&mut acc, *wa, inner)?;
    }
    Ok((acc, count))
}

fn tensor_grid<const K: usize, F>(g: &StepTwoGroup, f: &F, quad: &QuadratureSpec, nodes: [usize; 3]) -> Result<([f64; K], usize)>
where
    F: Fn(&Point) -> Result<[f64; K]>,
{
    require_tensor(g)?;
    let angular = Rule::periodic(nodes[1])?;
    match quad.chart {
        Chart::PhiPolar => {
            let radial = axis_rule(&quad.radial_breaks, nodes[0])?;
            let vertical = axis_rule(&[-1.0, 0.0, 1.0], nodes[2])?;
            tensor_sum(
                [&radial, &angular, &vertical],
                |r, phi, beta| {
                    let (alpha, dalpha) = alpha_of(beta);
                    (phi_polar_point(r, phi, alpha), r.powi(3) * dalpha)
                },
                f,
            )
        }
        Chart::Ambient => {
            let mut rb = vec![0.0];
            rb.extend(quad.radial_breaks.iter().copied().filter(|v| *v > 0.0));
            let mut tb: Vec<f64> = quad.radial_breaks.iter().rev().filter(|v| **v > 0.0).map(|v| -v * v).collect();
            tb.push(0.0);
            tb.extend(quad.radial_breaks.iter().filter(|v| **v > 0.0).map(|v| v * v));
            let radial = axis_rule(&rb, nodes[0])?;
            let vertical = axis_rule(&tb, nodes[2])?;
            tensor_sum(
                [&radial, &angular, &vertical],
                |r, phi, t| (Point::single(&[r * phi.cos(), r * phi.sin()], t), r),
                f,
            )
        }
    }
}

/// Monte Carlo over the box `|z_k| ≤ R`, `|t_j| ≤ R²`, discarding points outside the Korányi
/// annulus given by the first and last break.
fn monte_carlo<const K: usize, F>(g: &StepTwoGroup, f: &F, quad: &QuadratureSpec) -> Result<QuadEstimate<K>>
where
    F: Fn(&Point) -> Result<[f64; K]>,
{
    let outer = quad.outer_radius();
    let inner = quad.radial_breaks[0];
    let (m, h) = (g.horizontal_dim(), g.h());
    let volume = (2.0 * outer).powi(m as i32) * (2.0 * outer * outer).powi(h as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(quad.seed);
    let mut sum = [0.0; K];
    let mut sum_sq = [0.0; K];
    let mut evaluations = 0;
    let mut z = vec![0.0; m];
    let mut t = vec![0.0; h];
    for _ in 0..quad.samples {
        for v in z.iter_mut() {
            *v = rng.gen_range(-outer..outer);
        }
        for v in t.iter_mut() {
            *v = rng.gen_range(-outer * outer..outer * outer);
        }
        let x = Point::new(z.clone(), t.clone());
        let rho = koranyi_value(&x);
        if rho > outer || rho < inner {
            continue;
        }
        evaluations += 1;
        let v = f(&x)?;
        for k in 0..K {
            if !v[k].is_finite() {
                return Err(Error::Quadrature(format!("non-finite integrand sample in component {k}")));
            }
            sum[k] += v[k];
            sum_sq[k] += v[k] * v[k];
        }
    }
    let count = quad.samples as f64;
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for k in 0..K {
        let mean = sum[k] / count;
        let var = (sum_sq[k] / count - mean * mean).max(0.0);
        value[k] = volume * mean;
        error[k] = volume * (var / (count - 1.0)).sqrt();
    }
    Ok(QuadEstimate { value, error, evaluations })
}

/// Integrates `K` functions at once. The tensor grid reports the difference to a grid with half
/// the nodes along every axis as its error indicator.
pub fn integrate_many<const K: usize, F>(g: &StepTwoGroup, f: F, quad: &QuadratureSpec) -> Result<QuadEstimate<K>>
where
    F: Fn(&Point) -> Result<[f64; K]>,
{
    quad.validate()?;
    match quad.method {
        QuadMethod::MonteCarlo => monte_carlo(g, &f, quad),
        QuadMethod::TensorGrid => {
            let (value, fine) = tensor_grid(g, &f, quad, quad.nodes)?;
            let half = quad.nodes.map(|k| (k / 2).max(2));
            let (coarse, extra) = tensor_grid(g, &f, quad, half)?;
            let mut error = [0.0; K];
            for k in 0..K {
                error[k] = (value[k] - coarse[k]).abs();
            }
            Ok(QuadEstimate { value, error, evaluations: fine + extra })
        }
    }
}

pub fn integrate<F>(g: &StepTwoGroup, f: F, quad: &QuadratureSpec) -> Result<QuadEstimate<1>>
where
    F: Fn(&Point) -> f64,
{
    integrate_many(g, |x| Ok([f(x)]), quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn h1() -> StepTwoGroup {
        StepTwoGroup::heisenberg(1).unwrap()
    }

    #[test]
    fn koranyi_ball_volume() {
        // |{ρ ≤ 1}| = π²/2, so |{a ≤ ρ ≤ b}| = (π²/2)(b⁴ − a⁴)
        let quad = QuadratureSpec::default().with_breaks(vec![0.5, 1.0]);
        let e = integrate(&h1(), |_| 1.0, &quad).unwrap();
        assert_relative_eq!(e.value[0], PI * PI / 2.0 * (1.0 - 0.0625), max_relative = 1e-12);
    }

    #[test]
    fn gaussian_moment_in_both_charts() {
        // ∫ e^{-|z|² - t²} over ℝ³ = π^{3/2}, truncated far out
        let f = |x: &Point| (-x.z_norm_sq() - x.t[0] * x.t[0]).exp();
        let exact = PI.powf(1.5);
        for chart in [Chart::PhiPolar, Chart::Ambient] {
            let quad = QuadratureSpec::default()
                .with_chart(chart)
                .with_breaks(vec![0.0, 1.0, 2.0, 3.0, 4.5])
                .with_nodes([128, 16, 128]);
            let e = integrate(&h1(), f, &quad).unwrap();
            assert_relative_eq!(e.value[0], exact, max_relative = 1e-8);
        }
    }

    #[test]
    fn zero_integrand_and_bad_samples() {
        let e = integrate(&h1(), |_| 0.0, &QuadratureSpec::default()).unwrap();
        assert_eq!(e.value[0], 0.0);
        assert!(integrate(&h1(), |_| f64::NAN, &QuadratureSpec::default()).is_err());
        let g2 = StepTwoGroup::heisenberg(2).unwrap();
        assert!(integrate(&g2, |_| 1.0, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn monte_carlo_volume_with_error_bar() {
        let g = StepTwoGroup::heisenberg_product(1, 2).unwrap();
        let quad = QuadratureSpec::monte_carlo(200_000, 7).with_breaks(vec![0.0, 1.0]);
        let e = integrate(&g, |_| 1.0, &quad).unwrap();
        // independent estimate: the Korányi ball volume scales like r^Q, checked at two radii
        let quad2 = QuadratureSpec::monte_carlo(200_000, 8).with_breaks(vec![0.0, 2.0]);
        let e2 = integrate(&g, |_| 1.0, &quad2).unwrap();
        let ratio = e2.value[0] / e.value[0];
        let expected = 2f64.powf(g.homogeneous_dimension());
        assert!((ratio - expected).abs() < expected * 5.0 * (e.error[0] / e.value[0] + e2.error[0] / e2.value[0]));
    }
}
