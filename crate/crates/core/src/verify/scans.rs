//! Quasi-random scans of `|Z_d|²`: the non-isotropic counterexample and products of Heisenberg
//! groups.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::bounds::{bound_product, product_hypothesis};
use crate::error::{Error, Result};
use crate::group::{Point, StepTwoGroup};
use crate::norms::{koranyi_value, NormKind, NormModel};
use crate::optimize::{coordinate_refine_max, Halton};
use crate::zfield::{multistart_sup, to_unit_slice, z_field_at, SupArg, SupOptions, ZFieldSpec};

use super::identities::ibp_densities;
use super::integrate::{integrate_many, QuadratureSpec};
use super::testfn::Bump;
use super::{relative_gap, Report};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub samples: usize,
    pub refine_top: usize,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { samples: 100_000, refine_top: 8, seed: 0 }
    }
}

fn squared_z(spec: &ZFieldSpec, x: &Point) -> Option<f64> {
    z_field_at(spec, x).ok().map(|z| z.norm_sq()).filter(|v| v.is_finite())
}

/// `B(z, t) = |Z(z, t)|² − |Z(z, 0)|²`.
fn excess_over_plane(spec: &ZFieldSpec, x: &Point) -> f64 {
    let plane = Point::new(x.z.clone(), vec![0.0; x.t.len()]);
    match (squared_z(spec, x), squared_z(spec, &plane)) {
        (Some(a), Some(b)) => a - b,
        _ => f64::NEG_INFINITY,
    }
}

struct ScanOutcome {
    value: f64,
    point: Point,
    evaluated: usize,
    plane_defect: f64,
}

/// Maximizes `B` over Halton points on `{d = 1}`, then refines the best starts coordinate-wise.
fn scan_excess(spec: &ZFieldSpec, opts: &ScanOptions) -> Result<ScanOutcome> {
    let g = spec.group();
    let mut halton = Halton::new(g.dim())?;
    for _ in 0..(opts.seed % 4096) {
        halton.next_point();
    }
    let top = opts.refine_top.max(1);
    let mut leaders: Vec<(f64, Vec<f64>)> = Vec::with_capacity(top + 1);
    let mut evaluated = 0;
    let mut plane_defect = 0.0_f64;
    for _ in 0..opts.samples {
        let flat: Vec<f64> = halton.next_point().iter().map(|v| 2.0 * v - 1.0).collect();
        let Some(x) = to_unit_slice(spec, &flat) else { continue };
        let value = excess_over_plane(spec, &x);
        evaluated += 1;
        if !value.is_finite() {
            continue;
        }
        if evaluated % 1000 == 0 {
            let plane = Point::new(x.z.clone(), vec![0.0; x.t.len()]);
            let b0 = excess_over_plane(spec, &plane);
            if b0.is_finite() {
                plane_defect = plane_defect.max(b0.abs());
            }
        }
        if leaders.len() < top || value > leaders[leaders.len() - 1].0 {
            leaders.push((value, x.to_flat()));
            leaders.sort_by(|a, b| b.0.total_cmp(&a.0));
            leaders.truncate(top);
        }
    }
    if leaders.is_empty() {
        return Err(Error::Domain("no admissible sample on the unit slice".into()));
    }
    let objective = |flat: &[f64]| match Point::from_flat(g, flat) {
        Ok(x) => excess_over_plane(spec, &x),
        Err(_) => f64::NEG_INFINITY,
    };
    let mut best = (f64::NEG_INFINITY, leaders[0].1.clone());
    for (value, start) in &leaders {
        let (arg, refined) = coordinate_refine_max(objective, start, 0.25, 10, 1e-10)?;
        let candidate = if refined >= *value { (refined, arg) } else { (*value, start.clone()) };
        if candidate.0 > best.0 {
            best = candidate;
        }
    }
    let raw = Point::from_flat(g, &best.1)?;
    let point = to_unit_slice(spec, &best.1).unwrap_or(raw);
    Ok(ScanOutcome { value: best.0, point, evaluated, plane_defect })
}

fn scan_report(name: &str, spec: &ZFieldSpec, outcome: &ScanOutcome, opts: &ScanOptions) -> Report {
    Report::new(name, 1e-6)
        .value("max_b", outcome.value)
        .value("p_theta", spec.p_theta())
        .value("max_abs_b_on_plane", outcome.plane_defect)
        .diagnostic("location", json!({ "z": outcome.point.z, "t": outcome.point.t }))
        .diagnostic("gauge_at_location", spec.norm.value(&outcome.point))
        .diagnostic("group", spec.group().descriptor())
        .diagnostic("norm", spec.norm.kind().as_str())
        .diagnostic("evaluated", outcome.evaluated)
        .diagnostic("seed", opts.seed)
}

/// Searches `λ = (½, 1)` with the Balogh–Tyson gauge for a point where `|Z|` exceeds its value
/// on the horizontal plane. A search without a positive value is reported as inconclusive.
pub fn counterexample_scan(p_theta: f64, opts: &ScanOptions) -> Result<Report> {
    let g = StepTwoGroup::single(&[0.5, 1.0])?;
    let spec = ZFieldSpec::auto(NormModel::new(NormKind::BaloghTyson, g)?, 2.0, p_theta / 2.0)?;
    let outcome = scan_excess(&spec, opts)?;
    let found = outcome.value > 1e-6;
    Ok(scan_report("counterexample", &spec, &outcome, opts).diagnostic("inconclusive", !found).verdict(found))
}

/// The same scan on `H²` with the Korányi gauge, where `|Z|` peaks on the horizontal plane.
pub fn counterexample_control_scan(p_theta: f64, opts: &ScanOptions) -> Result<Report> {
    let g = StepTwoGroup::heisenberg(2)?;
    let spec = ZFieldSpec::auto(NormModel::koranyi(g), 2.0, p_theta / 2.0)?;
    let outcome = scan_excess(&spec, opts)?;
    let passed = outcome.value <= 1e-6;
    Ok(scan_report("counterexample_control", &spec, &outcome, opts).verdict(passed))
}

/// Closed form of `|Z_ρ|²` on `(H^n)^N` for the Korányi gauge.
pub fn product_formula_sq(n: usize, p_theta: f64, x: &Point) -> f64 {
    let nf = n as f64;
    let rho = koranyi_value(x);
    let (rho2, rho4) = (rho * rho, rho.powi(4));
    let z2 = x.z_norm_sq();
    let sum: f64 = x
        .t
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let zj: f64 = x.z[2 * n * j..2 * n * (j + 1)].iter().map(|v| v * v).sum();
            t * t * zj / (rho4 * rho2) * (p_theta / 4.0 * (z2 * z2 + t * t) / rho4 - (nf + 1.0))
        })
        .sum();
    ((nf + 1.0) / nf).powi(2) * z2 / rho2 + p_theta / (nf * nf) * sum
}

/// Scans `|Z_ρ|²` on `(H^n)^N`, checks it against its closed form and, when `identity` is
/// given, verifies `∫|u|^{p−2}u E u/ρ^{pθ} = ∫|u|^{p−2}u ⟨∇_G u, Z_ρ⟩/ρ^{pθ−1}` for one bump.
pub fn product_check(
    n: usize,
    factors: usize,
    p: f64,
    theta: f64,
    opts: &ScanOptions,
    identity: Option<&QuadratureSpec>,
) -> Result<Report> {
    if !(theta >= 0.0) {
        return Err(Error::param("theta", "the product scan needs θ ≥ 0"));
    }
    let g = StepTwoGroup::heisenberg_product(n, factors)?;
    let spec = ZFieldSpec::auto(NormModel::koranyi(g.clone()), p, theta)?;
    let sup_opts = SupOptions { samples: opts.samples, refine_top: opts.refine_top, seed: opts.seed, ..SupOptions::default() };
    let sup = multistart_sup(&spec, &sup_opts)?;
    let arg_t = match &sup.arg {
        SupArg::Point { point } => point.t_norm_sq().sqrt(),
        _ => f64::NAN,
    };
    let plane_value = ((n as f64 + 1.0) / n as f64).powi(2);
    let holds = product_hypothesis(n, p, theta);

    // closed form against the assembled field on random unit-sphere points
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut formula_gap = 0.0_f64;
    for _ in 0..1000 {
        let x = crate::norms::koranyi_sphere_sample(&g, &mut rng);
        let direct = z_field_at(&spec, &x)?.norm_sq();
        formula_gap = formula_gap.max((direct - product_formula_sq(n, spec.p_theta(), &x)).abs());
    }

    let mut report = Report::new("product", 1e-9)
        .value("sup_z_squared", sup.sup_squared)
        .value("plane_value", plane_value)
        .value("argmax_t_norm", arg_t)
        .value("formula_gap", formula_gap)
        .value("p", p)
        .value("theta", theta)
        .diagnostic("hypothesis_holds", holds)
        .diagnostic("exceeds_plane_value", sup.sup_squared > plane_value + 1e-9)
        .diagnostic("group", g.descriptor());
    let mut passed = formula_gap <= 1e-10;
    if holds {
        let bound = bound_product(n, factors, p, theta)?;
        report = report.with_bound(bound);
        passed &= sup.sup_squared <= plane_value + 1e-9 && arg_t <= 1e-4;
    }
    if let Some(quad) = identity {
        let mut bump_rng = ChaCha8Rng::seed_from_u64(quad.seed ^ 0x5eed);
        let u = Bump::random(&g, &mut bump_rng);
        let quad = quad.clone().with_breaks(vec![u.breaks()[0], u.support_radius()]);
        let e = integrate_many(&g, |x| ibp_densities(&spec, &u, x), &quad)?;
        let [i1, i2, i3] = e.value;
        let gap = relative_gap(i1, i2);
        report = report
            .value("identity_field_side", i1)
            .value("identity_euler_side", i2)
            .value("identity_reference", i3)
            .value("identity_relative_gap", gap)
            .diagnostic("identity_tolerance", 5e-3)
            .diagnostic("identity_standard_error", e.error.to_vec())
            .diagnostic("identity_samples", quad.samples);
        passed &= gap <= 5e-3;
    }
    Ok(report.verdict(passed))
}
