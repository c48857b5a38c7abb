//! Pointwise and integrated identities: the `w` expansion, integration by parts against `Z_d`,
//! the Euler adjoint, the divergence identities and the frame commutators.

use crate::error::{Error, Result};
use crate::group::{
    commutator_apply, default_step, directional_fd, dilate_unchecked, frame_from_partials, vertical_derivative,
    HVector, Partials, Point, ScalarField, Scheme, StepTwoGroup,
};
use crate::quadrature::adaptive_gk;
use crate::zfield::{z_field_from_gradient, ZFieldSpec};

use super::integrate::{integrate, integrate_many, Chart, QuadratureSpec};
use super::{relative_gap, Report};

/// `w(p, f, g)² = p(p−1) ∫₀¹ s |s g + (1−s) f|^{p−2} ds`.
pub fn w_weight_sq(p: f64, f: f64, g: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::param("p", format!("need p ≥ 2, got {p}")));
    }
    let root = if f != g { f / (f - g) } else { -1.0 };
    let integrand = |s: f64| s * (s * g + (1.0 - s) * f).abs().powf(p - 2.0);
    let e = adaptive_gk(integrand, 0.0, 1.0, &[root], 1e-300, 1e-14, 500)?;
    Ok(p * (p - 1.0) * e.value)
}

/// `Σ w²(f−g)² = Σ|f|^p + (p−1)Σ|g|^p − p Σ|g|^{p−2} g f` over a discrete measure.
pub fn check_w_identity(p: f64, f: &[f64], g: &[f64]) -> Result<Report> {
    if !(p >= 2.0) {
        return Err(Error::param("p", format!("need p ≥ 2, got {p}")));
    }
    if f.len() != g.len() {
        return Err(Error::DimensionMismatch { expected: f.len(), found: g.len() });
    }
    let mut lhs = 0.0;
    for (a, b) in f.iter().zip(g) {
        lhs += w_weight_sq(p, *a, *b)? * (a - b) * (a - b);
    }
    let norm_f: f64 = f.iter().map(|v| v.abs().powf(p)).sum();
    let norm_g: f64 = g.iter().map(|v| v.abs().powf(p)).sum();
    let pairing: f64 = f.iter().zip(g).map(|(a, b)| b.abs().powf(p - 2.0) * b * a).sum();
    let rhs = norm_f + (p - 1.0) * norm_g - p * pairing;
    let scale = norm_f + (p - 1.0) * norm_g + p * pairing.abs();
    // when f ≈ g the right side is pure cancellation, so measure against the size of its terms
    let denom = if rhs.abs() > 1e-8 * scale { rhs.abs() } else { scale.max(f64::MIN_POSITIVE) };
    let gap = (lhs - rhs).abs() / denom;
    let tol = if p == 2.0 { 1e-14 } else { 1e-10 };
    Ok(Report::new("w_identity", tol)
        .value("p", p)
        .value("lhs", lhs)
        .value("rhs", rhs)
        .value("relative_gap", gap)
        .diagnostic("samples", f.len())
        .verdict(gap <= tol))
}

/// Euclidean partials, by central differences when no analytic form is available.
pub(crate) fn partials_or_fd<U: ScalarField + ?Sized>(g: &StepTwoGroup, u: &U, x: &Point) -> Result<Partials> {
    match u.partials(x) {
        Err(Error::NoAnalyticDerivative) => {
            let h = default_step(x);
            let axis = |k: usize| {
                let mut dir = Point::origin(g);
                if k < g.horizontal_dim() {
                    dir.z[k] = 1.0;
                } else {
                    dir.t[k - g.horizontal_dim()] = 1.0;
                }
                directional_fd(u, x, &dir, h)
            };
            Ok(Partials {
                dz: (0..g.horizontal_dim()).map(axis).collect(),
                dt: (g.horizontal_dim()..g.dim()).map(axis).collect(),
            })
        }
        other => other,
    }
}

pub(crate) fn euler_from_partials(x: &Point, p: &Partials) -> f64 {
    let radial: f64 = x.z.iter().zip(&p.dz).map(|(a, b)| a * b).sum();
    let vertical: f64 = x.t.iter().zip(&p.dt).map(|(a, b)| a * b).sum();
    radial + 2.0 * vertical
}

/// Integrands of the three-way identity at `x`: `[I₁, I₂, I₃]` densities.
pub(crate) fn ibp_densities<U: ScalarField + ?Sized>(spec: &ZFieldSpec, u: &U, x: &Point) -> Result<[f64; 3]> {
    let val = u.value(x);
    if val == 0.0 {
        return Ok([0.0; 3]);
    }
    let g = spec.group();
    let p = spec.p;
    let pt = spec.p_theta();
    let partials = partials_or_fd(g, u, x)?;
    let grad_u = frame_from_partials(g, x, &partials);
    let eu = euler_from_partials(x, &partials);
    let d = spec.norm.value(x);
    let z = z_field_from_gradient(spec, x, d, &spec.norm.hgrad(x)?);
    let power = val.abs().powf(p - 2.0) * val;
    let weight = d.powf(-pt);
    Ok([
        power * grad_u.dot(&z) * d * weight,
        power * eu * weight,
        -(spec.q() - pt) / p * val.abs().powf(p) * weight,
    ])
}

/// `∫|u|^{p−2}u ⟨∇_G u, Z_d⟩/d^{pθ−1} = ∫|u|^{p−2}u E u/d^{pθ} = −((Q−pθ)/p) ∫|u|^p/d^{pθ}`.
pub fn check_ibp_identity<U: ScalarField + ?Sized>(spec: &ZFieldSpec, u: &U, quad: &QuadratureSpec) -> Result<Report> {
    let e = integrate_many(spec.group(), |x| ibp_densities(spec, u, x), quad)?;
    let [i1, i2, i3] = e.value;
    let degenerate = (spec.q() - spec.p_theta()).abs() < 1e-12;
    let (gap12, gap13, gap23) = (relative_gap(i1, i2), relative_gap(i1, i3), relative_gap(i2, i3));
    let (tol, passed) = if degenerate {
        (1e-4, i1.abs().max(i2.abs()).max(i3.abs()) <= 1e-4)
    } else {
        (quad.rel_tol, gap12.max(gap13).max(gap23) <= quad.rel_tol)
    };
    Ok(Report::new("ibp_identity", tol)
        .value("i1", i1)
        .value("i2", i2)
        .value("i3", i3)
        .value("gap_12", gap12)
        .value("gap_13", gap13)
        .value("gap_23", gap23)
        .value("p", spec.p)
        .value("theta", spec.theta)
        .diagnostic("norm", spec.norm.kind().as_str())
        .diagnostic("group", spec.group().descriptor())
        .diagnostic("quad_error", e.error.to_vec())
        .diagnostic("evaluations", e.evaluations)
        .diagnostic("absolute", degenerate)
        .verdict(passed))
}

/// `∫(Eu)v + ∫u(Ev) + Q∫uv = 0`.
pub fn euler_adjoint_check<U, V>(g: &StepTwoGroup, u: &U, v: &V, quad: &QuadratureSpec) -> Result<Report>
where
    U: ScalarField + ?Sized,
    V: ScalarField + ?Sized,
{
    let e = integrate_many(
        g,
        |x| {
            let (uv, vv) = (u.value(x), v.value(x));
            if uv == 0.0 && vv == 0.0 {
                return Ok([0.0; 3]);
            }
            let eu = euler_from_partials(x, &partials_or_fd(g, u, x)?);
            let ev = euler_from_partials(x, &partials_or_fd(g, v, x)?);
            Ok([eu * vv, uv * ev, uv * vv])
        },
        quad,
    )?;
    let [a, b, c] = e.value;
    let q = g.homogeneous_dimension();
    let scale = a.abs().max(b.abs()).max(q * c.abs());
    let residual = (a + b + q * c).abs() / scale.max(f64::MIN_POSITIVE);
    Ok(Report::new("euler_adjoint", quad.rel_tol)
        .value("eu_v", a)
        .value("u_ev", b)
        .value("q_uv", q * c)
        .value("relative_residual", residual)
        .diagnostic("quad_error", e.error.to_vec())
        .verdict(residual <= quad.rel_tol))
}

/// Weak form of the two divergence identities, tested against `phi`:
/// `∫⟨V, ∇_G φ⟩ + ∫(div V) φ = 0` for
/// (i) `V = t d^{−pθ−1} B^{-1}∇_G d`, `div V = −½⟨z,∇_G d⟩/d^{pθ+1} + n t ∂_t d/d^{pθ+1}`;
/// (ii) `V = z/d^{pθ}`, `div V = 2n/d^{pθ} − pθ⟨z,∇_G d⟩/d^{pθ+1}`.
pub fn divergence_identities_check<U: ScalarField + ?Sized>(
    spec: &ZFieldSpec,
    phi: &U,
    quad: &QuadratureSpec,
) -> Result<Report> {
    let g = spec.group();
    if g.h() != 1 {
        return Err(Error::InvalidGroup("divergence identities need one vertical direction".into()));
    }
    let n = g.n() as f64;
    let pt = spec.p_theta();
    let e = integrate_many(
        g,
        |x| {
            let val = phi.value(x);
            let partials = partials_or_fd(g, phi, x)?;
            let grad_phi = frame_from_partials(g, x, &partials);
            if val == 0.0 && grad_phi.norm_sq() == 0.0 {
                return Ok([0.0; 4]);
            }
            let d = spec.norm.value(x);
            let grad_d = spec.norm.hgrad(x)?;
            let dt = spec.norm.dt(x)?[0];
            let t = x.t[0];
            let radial = grad_d.dot_slice(&x.z);
            let w1 = d.powf(-pt - 1.0);
            let w0 = d.powf(-pt);
            let v1 = g.b_inverse(&grad_d);
            let v2 = HVector(x.z.iter().map(|z| z * w0).collect());
            Ok([
                t * w1 * v1.dot(&grad_phi),
                (-0.5 * radial * w1 + n * t * dt * w1) * val,
                v2.dot(&grad_phi),
                (2.0 * n * w0 - pt * radial * w1) * val,
            ])
        },
        quad,
    )?;
    let [a1, b1, a2, b2] = e.value;
    let r1 = relative_gap(a1, -b1);
    let r2 = relative_gap(a2, -b2);
    Ok(Report::new("divergence_identities", quad.rel_tol)
        .value("i_flux", a1)
        .value("i_source", -b1)
        .value("i_relative_gap", r1)
        .value("ii_flux", a2)
        .value("ii_source", -b2)
        .value("ii_relative_gap", r2)
        .diagnostic("norm", spec.norm.kind().as_str())
        .diagnostic("quad_error", e.error.to_vec())
        .verdict(r1 <= quad.rel_tol && r2 <= quad.rel_tol))
}

/// Integrates each function in the Φ chart and in cylindrical coordinates.
pub fn chart_equivalence_check(
    g: &StepTwoGroup,
    integrands: &[&dyn Fn(&Point) -> f64],
    quad: &QuadratureSpec,
) -> Result<Report> {
    let tol = 1e-3;
    let mut worst = 0.0_f64;
    let mut pairs = Vec::with_capacity(integrands.len());
    for f in integrands {
        let polar = integrate(g, f, &quad.clone().with_chart(Chart::PhiPolar))?.value[0];
        let ambient = integrate(g, f, &quad.clone().with_chart(Chart::Ambient))?.value[0];
        worst = worst.max(relative_gap(ambient, polar));
        pairs.push(vec![polar, ambient]);
    }
    Ok(Report::new("chart_equivalence", tol)
        .value("max_relative_gap", worst)
        .diagnostic("integrals", serde_json::json!(pairs))
        .verdict(worst <= tol))
}

/// `∫u(δ_γ x) dx = γ^{−Q} ∫u`.
pub fn dilation_check<U: ScalarField + ?Sized>(
    g: &StepTwoGroup,
    u: &U,
    gamma: f64,
    quad: &QuadratureSpec,
) -> Result<Report> {
    if !(gamma > 0.0) {
        return Err(Error::param("gamma", "dilation factor must be positive"));
    }
    let base = integrate(g, |x| u.value(x), quad)?.value[0];
    let scaled_quad = quad.clone().with_breaks(quad.radial_breaks.iter().map(|r| r / gamma).collect());
    let scaled = integrate(g, |x| u.value(&dilate_unchecked(gamma, x)), &scaled_quad)?.value[0];
    let expected = gamma.powf(-g.homogeneous_dimension()) * base;
    let gap = relative_gap(scaled, expected);
    Ok(Report::new("dilation_scaling", quad.rel_tol)
        .value("dilated", scaled)
        .value("expected", expected)
        .value("relative_gap", gap)
        .verdict(gap <= quad.rel_tol))
}

/// `[X_{2i}, X_{2i−1}] u = Σ_j λ_i^{(j)} ∂_{t_j} u` at each point and block, by nested central
/// differences with `step`. Passes when the worst error is within `10 step²`.
pub fn commutator_check<U: ScalarField + ?Sized>(
    g: &StepTwoGroup,
    u: &U,
    points: &[Point],
    step: f64,
) -> Result<Report> {
    let worst_at = |h: f64| -> Result<f64> {
        let mut worst = 0.0_f64;
        for x in points {
            let dt = vertical_derivative(g, u, x, Scheme::Auto)?;
            for block in 0..g.n() {
                let lhs = commutator_apply(g, u, x, block, h)?;
                let rhs: f64 = (0..g.h()).map(|j| g.coupling(block, j) * dt[j]).sum();
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Ok(worst)
    };
    let err = worst_at(step)?;
    let err_half = worst_at(0.5 * step)?;
    let tol = 10.0 * step * step;
    Ok(Report::new("commutator", tol)
        .value("max_error", err)
        .value("max_error_half_step", err_half)
        .value("step", step)
        .diagnostic("points", points.len())
        .verdict(err <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{NormKind, NormModel};
    use crate::verify::testfn::Bump;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `∫₀¹ s|a + b s|^q ds` in closed form.
    fn weight_oracle(q: f64, a: f64, b: f64) -> f64 {
        if b == 0.0 {
            return a.abs().powf(q) / 2.0;
        }
        let prim = |l: f64| {
            l.abs().powf(q + 2.0) / (q + 2.0) - a * l.signum() * l.abs().powf(q + 1.0) / (q + 1.0)
        };
        (prim(a + b) - prim(a)) / (b * b)
    }

    #[test]
    fn weight_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [2.0, 2.5, 3.0, 4.0, 5.5] {
            for _ in 0..50 {
                let (f, g) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let exact = p * (p - 1.0) * weight_oracle(p - 2.0, f, g - f);
                let got = w_weight_sq(p, f, g).unwrap();
                assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1e-300), "p={p} f={f} g={g}");
            }
        }
    }

    #[test]
    fn w_identity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for p in [2.0, 2.5, 3.0, 4.0] {
            assert!(check_w_identity(p, &f, &g).unwrap().passed, "p={p}");
        }
        let same = check_w_identity(3.0, &f, &f).unwrap();
        assert_eq!(same.values["lhs"], 0.0);
        assert!(same.passed);
        assert!(check_w_identity(1.5, &f, &g).is_err());
        assert!(check_w_identity(2.0, &f, &g[..3]).is_err());
    }

    #[test]
    fn ibp_radial_bump_koranyi() {
        let g = StepTwoGroup::heisenberg(1).unwrap();
        let spec = ZFieldSpec::auto(NormModel::koranyi(g.clone()), 2.0, 1.0).unwrap();
        let u = Bump::radial(&g, 1.0);
        let r = check_ibp_identity(&spec, &u, &QuadratureSpec::default().with_breaks(u.breaks())).unwrap();
        assert!(r.passed && r.values["gap_13"] < 1e-3, "{r:?}");
    }

    #[test]
    fn ibp_degenerate_weight_vanishes() {
        let g = StepTwoGroup::heisenberg(1).unwrap();
        let spec = ZFieldSpec::auto(NormModel::koranyi(g.clone()), 2.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = Bump::random(&g, &mut rng);
        let r = check_ibp_identity(&spec, &u, &QuadratureSpec::default().with_breaks(u.breaks())).unwrap();
        assert_eq!(r.values["i3"], 0.0);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn ibp_with_cc_gauge() {
        let g = StepTwoGroup::heisenberg(1).unwrap();
        let spec = ZFieldSpec::auto(NormModel::new(NormKind::Cc, g.clone()).unwrap(), 2.0, 1.0).unwrap();
        let u = Bump::radial(&g, 1.0);
        let r = check_ibp_identity(&spec, &u, &QuadratureSpec::default().with_breaks(u.breaks())).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn divergence_identities_weak_form() {
        let g = StepTwoGroup::heisenberg(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = Bump::random(&g, &mut rng);
        for kind in [NormKind::Koranyi, NormKind::Cc] {
            let spec = ZFieldSpec::auto(NormModel::new(kind, g.clone()).unwrap(), 2.0, 1.0).unwrap();
            let r = divergence_identities_check(&spec, &phi, &QuadratureSpec::default().with_breaks(phi.breaks())).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn dilation_and_charts() {
        let g = StepTwoGroup::heisenberg(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = Bump::random(&g, &mut rng);
        let quad = QuadratureSpec::default().with_breaks(u.breaks());
        assert!(dilation_check(&g, &u, 1.7, &quad).unwrap().passed);
        let f = |x: &Point| u.value(x);
        let r = chart_equivalence_check(&g, &[&f], &quad.clone().with_nodes([128, 32, 128])).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn commutators_on_nonisotropic_group() {
        let g = StepTwoGroup::single(&[0.5, 1.0, 3.0]).unwrap();
        let u = |x: &Point| (x.z[0] - 0.3 * x.z[3]).sin() * (0.5 * x.t[0] + x.z[4]).cos() + x.t[0] * x.z[1] * x.z[5];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points: Vec<Point> = (0..20)
            .map(|_| Point::from_flat(&g, &(0..7).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap())
            .collect();
        let r = commutator_check(&g, &u, &points, 1e-3).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
