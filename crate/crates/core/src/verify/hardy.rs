//! Hardy quotients, the cut-off sequence approaching the sharp constant, and the extremal profile.

use serde::{Deserialize, Serialize};

use crate::bounds::{bound_report, projected_constant};
use crate::error::{Error, Result};
use crate::group::{frame_from_partials, horizontal_gradient, Point, ScalarField, Scheme};
use crate::norms::{norm_equivalence, rotation_defect, NormModel};
use crate::quadrature::Rule;
use crate::zfield::{z_field_at, z_field_from_gradient, SupOptions, ZFieldSpec};

use super::identities::partials_or_fd;
use super::integrate::{axis_rule, integrate_many, phi_polar_point, tensor_sum, QuadratureSpec};
use super::testfn::{Extremal, SharpnessFunction};
use super::Report;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quotient {
    pub numerator: f64,
    pub denominator: f64,
    pub value: f64,
    pub numerator_error: f64,
    pub denominator_error: f64,
}

/// Densities `[numerator, denominator]` of the Hardy quotient at `x`.
fn quotient_densities<U: ScalarField + ?Sized>(
    spec: &ZFieldSpec,
    u: &U,
    x: &Point,
    projected: bool,
) -> Result<[f64; 2]> {
    let g = spec.group();
    let partials = partials_or_fd(g, u, x)?;
    let grad_u = frame_from_partials(g, x, &partials);
    let val = u.value(x);
    if val == 0.0 && grad_u.norm_sq() == 0.0 {
        return Ok([0.0; 2]);
    }
    let p = spec.p;
    let d = spec.norm.value(x);
    let slope = if projected {
        let z = z_field_from_gradient(spec, x, d, &spec.norm.hgrad(x)?);
        grad_u.dot(&z).abs()
    } else {
        grad_u.norm()
    };
    Ok([slope.powf(p) * d.powf(-p * (spec.theta - 1.0)), val.abs().powf(p) * d.powf(-spec.p_theta())])
}

fn quotient_from(value: [f64; 2], error: [f64; 2]) -> Result<Quotient> {
    if !(value[1] > 1e-300) {
        return Err(Error::Domain("vanishing denominator: the test function is zero on the grid".into()));
    }
    Ok(Quotient {
        numerator: value[0],
        denominator: value[1],
        value: value[0] / value[1],
        numerator_error: error[0],
        denominator_error: error[1],
    })
}

/// `∫|⟨∇_G u, Z_d⟩|^p/d^{p(θ−1)} / ∫|u|^p/d^{pθ}`, or with `|∇_G u|` when `projected` is false.
pub fn hardy_quotient<U: ScalarField + ?Sized>(
    spec: &ZFieldSpec,
    u: &U,
    quad: &QuadratureSpec,
    projected: bool,
) -> Result<Quotient> {
    let e = integrate_many(spec.group(), |x| quotient_densities(spec, u, x, projected), quad)?;
    quotient_from(e.value, e.error)
}

/// Both quotients of `u` against the projected constant and the closed-form bound.
pub fn hardy_check<U: ScalarField + ?Sized>(spec: &ZFieldSpec, u: &U, quad: &QuadratureSpec) -> Result<Report> {
    let slack = 1e-3;
    let projected = hardy_quotient(spec, u, quad, true)?;
    let full = hardy_quotient(spec, u, quad, false)?;
    let target = projected_constant(spec.q(), spec.p, spec.theta);
    let bound = bound_report(spec, &SupOptions::default())?.bound;
    let passed = projected.value >= target - slack && full.value >= bound - slack;
    Ok(Report::new("hardy", slack)
        .value("projected_quotient", projected.value)
        .value("projected_constant", target)
        .value("full_quotient", full.value)
        .value("denominator", projected.denominator)
        .value("p", spec.p)
        .value("theta", spec.theta)
        .with_bound(bound)
        .diagnostic("norm", spec.norm.kind().as_str())
        .diagnostic("quad_error", vec![projected.numerator_error, full.numerator_error, full.denominator_error])
        .verdict(passed))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessPoint {
    pub eps: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub quotient: f64,
    /// Change of the quotient when the radial and `log λ` grids are halved.
    pub grid_change: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub points: Vec<SharpnessPoint>,
    pub target: f64,
    /// `C` in the least-squares fit `quotient − target ≈ C / log(1/ε)`.
    pub fitted_c: f64,
    pub fit_residual: f64,
    pub monotone: bool,
    pub above_target: bool,
    /// `∫|u_ε|^p/d^{pθ} / log(1/(2ε))`.
    pub growth_ratios: Vec<f64>,
    pub log_growth: bool,
    pub report: Report,
}

fn check_rotation_hypothesis(norm: &NormModel) -> Result<()> {
    let g = norm.group();
    if g.h() != 1 {
        return Err(Error::Hypothesis("the cut-off family needs one vertical direction".into()));
    }
    let probes = [
        [0.7, 0.2, 0.4],
        [-0.3, 0.5, -0.8],
        [0.1, -0.9, 0.2],
        [0.6, 0.6, 1.5],
    ];
    for probe in probes {
        let z: Vec<f64> = (0..g.horizontal_dim()).map(|k| probe[k % 2] * (1.0 + 0.1 * k as f64)).collect();
        let x = Point::new(z, vec![probe[2]]);
        let defect = rotation_defect(norm, &x)?;
        if defect.abs() > 1e-6 * norm.value(&x) {
            return Err(Error::Hypothesis(format!(
                "⟨z, B⁻¹∇_z d⟩ = {defect:e} ≠ 0 for the {} gauge",
                norm.kind()
            )));
        }
    }
    Ok(())
}

/// Korányi radii covering `{0.25 ≤ d ≤ 2}`, padded from sampled norm equivalence.
fn sharpness_radial_breaks(norm: &NormModel) -> Result<Vec<f64>> {
    if norm.kind() == crate::norms::NormKind::Koranyi {
        return Ok(vec![0.25, 0.5, 1.5, 2.0]);
    }
    let koranyi = NormModel::koranyi(norm.group().clone());
    let (lo, hi) = norm_equivalence(norm, &koranyi, 4000, 17)?;
    Ok(vec![0.25 / hi * 0.95, 0.5 / hi, 1.5 / lo, 2.0 / lo * 1.05])
}

fn log_lambda_rule(eps: f64, fine: bool) -> Result<Rule> {
    let (a, b) = ((2.0 * eps).ln(), -(2.0 * eps).ln());
    let order = if fine { 16 } else { 8 };
    let mut rule = Rule::composite(&[eps.ln(), a], 2, order)?;
    let middle = Rule::composite(&[a, b], ((b - a) / 1.5).ceil() as usize, order)?;
    let top = Rule::composite(&[b, -eps.ln()], 2, order)?;
    for r in [middle, top] {
        rule.nodes.extend(r.nodes);
        rule.weights.extend(r.weights);
    }
    Ok(rule)
}

/// Projected quotient of `u_ε` in `(R, φ, s = log λ)` coordinates, where `u_ε` lives on `t > 0`.
fn sharpness_quotient(spec: &ZFieldSpec, u: &SharpnessFunction, quad: &QuadratureSpec, fine: bool) -> Result<[f64; 2]> {
    let breaks = sharpness_radial_breaks(&spec.norm)?;
    let radial = axis_rule(&breaks, if fine { quad.nodes[0] } else { quad.nodes[0] / 2 })?;
    let angular = Rule::periodic(quad.nodes[1].max(1))?;
    let vertical = log_lambda_rule(u.cutoff.eps, fine)?;
    let (value, _) = tensor_sum(
        [&radial, &angular, &vertical],
        |r, phi, s| {
            let lam = s.exp();
            (phi_polar_point(r, phi, lam.atan()), r.powi(3) * lam / (1.0 + lam * lam))
        },
        &|x: &Point| quotient_densities(spec, u, x, true),
    )?;
    Ok(value)
}

/// Projected quotients along the cut-off family `u_ε`, with the fit of the excess to `C/log(1/ε)`
/// and the logarithmic growth of the denominator.
pub fn sharpness_sequence(spec: &ZFieldSpec, eps_list: &[f64], quad: &QuadratureSpec) -> Result<SharpnessReport> {
    if eps_list.len() < 2 {
        return Err(Error::param("eps", "need at least two cut-off levels"));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("eps", "cut-off levels must be strictly decreasing"));
    }
    check_rotation_hypothesis(&spec.norm)?;
    if spec.group().n() != 1 {
        return Err(Error::param("group", "the cut-off quadrature is implemented on H¹-type groups (n = 1)"));
    }
    let target = projected_constant(spec.q(), spec.p, spec.theta);
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let u = SharpnessFunction::new(spec.norm.clone(), eps, spec.p)?;
        let [num, den] = sharpness_quotient(spec, &u, quad, true)?;
        let [num_c, den_c] = sharpness_quotient(spec, &u, quad, false)?;
        let q = quotient_from([num, den], [0.0; 2])?.value;
        points.push(SharpnessPoint {
            eps,
            numerator: num,
            denominator: den,
            quotient: q,
            grid_change: (q - num_c / den_c).abs(),
        });
    }
    let inv_logs: Vec<f64> = points.iter().map(|pt| 1.0 / (1.0 / pt.eps).ln()).collect();
    let excess: Vec<f64> = points.iter().map(|pt| pt.quotient - target).collect();
    let fitted_c = excess.iter().zip(&inv_logs).map(|(e, l)| e * l).sum::<f64>()
        / inv_logs.iter().map(|l| l * l).sum::<f64>();
    let fit_residual = excess
        .iter()
        .zip(&inv_logs)
        .map(|(e, l)| (e - fitted_c * l).abs() / e.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let monotone = points.windows(2).all(|w| w[1].quotient <= w[0].quotient + 1e-3);
    let above_target = points.iter().all(|pt| pt.quotient >= target - 1e-3);
    let growth_ratios: Vec<f64> = points.iter().map(|pt| pt.denominator / (1.0 / (2.0 * pt.eps)).ln()).collect();
    let max_ratio = growth_ratios.iter().copied().fold(0.0, f64::max);
    let min_ratio = growth_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let log_growth = points.windows(2).all(|w| w[1].denominator > w[0].denominator) && min_ratio >= 0.5 * max_ratio;
    let passed = monotone && above_target && fit_residual <= 0.2 && log_growth;
    let mut report = Report::new("sharpness", 0.2)
        .value("target", target)
        .value("fitted_c", fitted_c)
        .value("fit_residual", fit_residual)
        .with_bound(target)
        .diagnostic("norm", spec.norm.kind().as_str())
        .diagnostic("monotone", monotone)
        .diagnostic("above_target", above_target)
        .diagnostic("log_growth", log_growth)
        .diagnostic("growth_ratios", growth_ratios.clone())
        .diagnostic("grid_change", points.iter().map(|pt| pt.grid_change).collect::<Vec<_>>())
        .verdict(passed);
    for pt in &points {
        report = report
            .value(&format!("quotient_eps_{:e}", pt.eps), pt.quotient)
            .value(&format!("denominator_eps_{:e}", pt.eps), pt.denominator);
    }
    Ok(SharpnessReport { points, target, fitted_c, fit_residual, monotone, above_target, growth_ratios, log_growth, report })
}

/// `|⟨∇_G u, Z_d⟩/d^{θ−1} + ((Q−pθ)/p) u/d^θ|` for `u = (|t|/|z|²)^{(Q−2)/(2p)}`, with `∇_G u`
/// by central differences.
pub fn extremal_residual(spec: &ZFieldSpec, x: &Point) -> Result<f64> {
    let g = spec.group();
    g.check_point(x)?;
    if g.h() != 1 {
        return Err(Error::Hypothesis("the extremal profile needs one vertical direction".into()));
    }
    if x.on_center() || x.t[0] == 0.0 {
        return Err(Error::Domain("the extremal profile is evaluated off the center and off t = 0".into()));
    }
    let d = spec.norm.value(x);
    let defect = rotation_defect(&spec.norm, x)?;
    if defect.abs() > 1e-8 * d.max(1.0) {
        return Err(Error::Hypothesis(format!("⟨z, B⁻¹∇_z d⟩ = {defect:e} ≠ 0 at this point")));
    }
    let q = spec.q();
    let u = Extremal { kappa: (q - 2.0) / (2.0 * spec.p) };
    let grad = horizontal_gradient(g, &u, x, Scheme::CentralFd(None))?;
    let z = z_field_at(spec, x)?;
    let theta = spec.theta;
    Ok((grad.dot(&z) / d.powf(theta - 1.0) + (q - spec.p_theta()) / spec.p * u.value(x) / d.powf(theta)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::StepTwoGroup;
    use crate::norms::NormKind;
    use crate::verify::testfn::Bump;

    fn spec(kind: NormKind, p: f64, theta: f64) -> ZFieldSpec {
        let g = StepTwoGroup::heisenberg(1).unwrap();
        ZFieldSpec::auto(NormModel::new(kind, g).unwrap(), p, theta).unwrap()
    }

    #[test]
    fn extremal_residual_examples() {
        let x = Point::single(&[1.0, 0.0], 1.0);
        assert!(extremal_residual(&spec(NormKind::Koranyi, 2.0, 1.0), &x).unwrap() <= 1e-8);
        assert!(extremal_residual(&spec(NormKind::Cc, 2.0, 1.0), &x).unwrap() <= 1e-7);
        assert!(extremal_residual(&spec(NormKind::Koranyi, 2.0, 2.0), &x).unwrap() <= 1e-8);
        assert!(extremal_residual(&spec(NormKind::Koranyi, 2.0, 1.0), &Point::single(&[1.0, 0.0], 0.0)).is_err());
    }

    #[test]
    fn extremal_residual_on_block_radial_gauge() {
        // the Balogh–Tyson gauge depends on block radii only, so the rotation hypothesis holds
        let g = StepTwoGroup::single(&[0.5, 1.0]).unwrap();
        let bt = ZFieldSpec::auto(NormModel::new(NormKind::BaloghTyson, g).unwrap(), 2.0, 1.0).unwrap();
        let x = Point::single(&[0.3, 0.4, 0.5, 0.1], 0.7);
        let r = extremal_residual(&bt, &x).unwrap();
        assert!(r <= 1e-6);
    }

    #[test]
    fn quotient_is_dilation_invariant() {
        let s = spec(NormKind::Koranyi, 2.0, 1.0);
        let g = s.group().clone();
        let u = Bump::radial(&g, 1.0);
        let v = Bump { scale: 0.6, ..u.clone() };
        let qu = hardy_quotient(&s, &u, &QuadratureSpec::default().with_breaks(u.breaks()), true).unwrap();
        let qv = hardy_quotient(&s, &v, &QuadratureSpec::default().with_breaks(v.breaks()), true).unwrap();
        assert!((qu.value - qv.value).abs() <= 1e-6 * qu.value);
        assert!(qu.value >= 1.0);
    }

    #[test]
    fn zero_function_has_no_quotient() {
        let s = spec(NormKind::Koranyi, 2.0, 1.0);
        let zero = |_: &Point| 0.0;
        assert!(hardy_quotient(&s, &zero, &QuadratureSpec::default(), true).is_err());
    }
}
