//! The horizontal field `Z_d` and the supremum of its length.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{dilate_unchecked, GroupKind, HVector, Point, StepTwoGroup};
use crate::norms::cc::{cosc, horizontal_profile, vertical_profile};
use crate::norms::{NormKind, NormModel};
use crate::optimize::{coordinate_refine_max, scan_golden_max, Halton};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZVariant {
    Single,
    Product,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZFieldSpec {
    pub norm: NormModel,
    pub p: f64,
    pub theta: f64,
    pub variant: ZVariant,
}

impl ZFieldSpec {
    pub fn new(norm: NormModel, p: f64, theta: f64, variant: ZVariant) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::param("p", format!("need p ≥ 2, got {p}")));
        }
        if !theta.is_finite() {
            return Err(Error::param("theta", "θ must be finite"));
        }
        let g = norm.group();
        match variant {
            ZVariant::Single if g.h() != 1 => {
                return Err(Error::InvalidGroup("single variant needs one vertical direction".into()))
            }
            ZVariant::Product if !matches!(g.kind(), GroupKind::HeisenbergProduct { .. }) => {
                return Err(Error::InvalidGroup("product variant needs a product of Heisenberg groups".into()))
            }
            ZVariant::General if !matches!(g.kind(), GroupKind::General { .. }) => {
                return Err(Error::InvalidGroup("general variant needs selected blocks and A".into()))
            }
            _ => {}
        }
        Ok(Self { norm, p, theta, variant })
    }

    /// Picks the variant matching the group structure.
    pub fn auto(norm: NormModel, p: f64, theta: f64) -> Result<Self> {
        let variant = match norm.group().kind() {
            GroupKind::Single => ZVariant::Single,
            GroupKind::HeisenbergProduct { .. } => ZVariant::Product,
            GroupKind::General { .. } => ZVariant::General,
        };
        Self::new(norm, p, theta, variant)
    }

    pub fn group(&self) -> &StepTwoGroup {
        self.norm.group()
    }

    pub fn q(&self) -> f64 {
        self.group().homogeneous_dimension()
    }

    pub fn p_theta(&self) -> f64 {
        self.p * self.theta
    }
}

/// `Z_d(x)` in the horizontal frame.
pub fn z_field_at(spec: &ZFieldSpec, x: &Point) -> Result<HVector> {
    let g = spec.group();
    g.check_point(x)?;
    let d = spec.norm.value(x);
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("gauge value {d} is not positive")));
    }
    let grad = spec.norm.hgrad(x)?;
    Ok(z_field_from_gradient(spec, x, d, &grad))
}

/// `Z_d` from an already computed gauge value and horizontal gradient.
pub fn z_field_from_gradient(spec: &ZFieldSpec, x: &Point, d: f64, grad: &HVector) -> HVector {
    let g = spec.group();
    let pt = spec.p_theta();
    let m = g.horizontal_dim();
    match spec.variant {
        ZVariant::Single => {
            let n = g.n() as f64;
            let radial = (n + 1.0) / n / d;
            let twist = 2.0 * pt / n * x.t[0] / (d * d);
            let rotated = g.b_inverse(grad);
            HVector((0..m).map(|k| radial * x.z[k] - twist * rotated.0[k]).collect())
        }
        ZVariant::Product => {
            let GroupKind::HeisenbergProduct { n, .. } = *g.kind() else {
                unreachable!("variant checked at construction")
            };
            let nf = n as f64;
            let radial = (nf + 1.0) / nf / d;
            let mut out: Vec<f64> = x.z.iter().map(|v| radial * v).collect();
            for block in 0..g.n() {
                let factor = block / n;
                let scale = pt / (2.0 * nf) * x.t[factor] / (d * d);
                let (p0, p1) = grad.block_perp(block);
                out[2 * block] -= scale * p0;
                out[2 * block + 1] -= scale * p1;
            }
            HVector(out)
        }
        ZVariant::General => {
            let selected = g.selected_blocks().expect("variant checked at construction");
            let a_inv = g.a_inverse().expect("general groups carry A^{-1}");
            let mut out: Vec<f64> = x.z.iter().map(|v| v / d).collect();
            for (k, &block) in selected.iter().enumerate() {
                out[2 * block] += x.z[2 * block] / d;
                out[2 * block + 1] += x.z[2 * block + 1] / d;
                let weight: f64 = (0..g.h()).map(|j| a_inv[j][k] * x.t[j]).sum::<f64>();
                let scale = 2.0 * pt * weight / (d * d);
                let (p0, p1) = grad.block_perp(block);
                out[2 * block] -= scale * p0;
                out[2 * block + 1] -= scale * p1;
            }
            HVector(out)
        }
    }
}

/// `|z|_B = ½ √⟨z, (−B²)^{1/2} z⟩`.
pub fn symplectic_norm(g: &StepTwoGroup, z: &[f64]) -> Result<f64> {
    if g.h() != 1 {
        return Err(Error::InvalidGroup("symplectic norm needs a single vertical direction".into()));
    }
    if z.len() != g.horizontal_dim() {
        return Err(Error::DimensionMismatch { expected: g.horizontal_dim(), found: z.len() });
    }
    Ok(g.symplectic_norm_sq(z).sqrt())
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 2.0) {
        return Err(Error::param("Q", format!("homogeneous dimension must exceed 2, got {q}")));
    }
    Ok(())
}

/// Coefficients `(α, β)` with `|Z_ρ|² = √(1−s)(α + β s)`, `s = λ²/(1+λ²)`.
pub fn koranyi_profile_coefficients(q: f64, p: f64, theta: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    let pt = p * theta;
    let alpha = (q / (q - 2.0)).powi(2);
    let beta = pt * (pt - 2.0 * q) / (q - 2.0).powi(2);
    Ok((alpha, beta))
}

/// `|Z_ρ|²` at `λ = t/|z|²` on the Heisenberg group of homogeneous dimension `Q`.
pub fn z_profile_koranyi(q: f64, p: f64, theta: f64, lam: f64) -> Result<f64> {
    let (alpha, beta) = koranyi_profile_coefficients(q, p, theta)?;
    if lam.is_infinite() {
        return Ok(0.0);
    }
    let l2 = lam * lam;
    let s = l2 / (1.0 + l2);
    Ok((alpha + beta * s) / (1.0 + l2).sqrt())
}

fn profile_in_s(alpha: f64, beta: f64, s: f64) -> f64 {
    (1.0 - s).max(0.0).sqrt() * (alpha + beta * s)
}

fn lambda_from_s(s: f64) -> f64 {
    if s >= 1.0 {
        f64::INFINITY
    } else {
        (s / (1.0 - s)).sqrt()
    }
}

/// Exact maximizer `(s*, max)` of the Korányi profile over `s ∈ [0, 1)`.
pub fn koranyi_profile_max(q: f64, p: f64, theta: f64) -> Result<(f64, f64)> {
    let (alpha, beta) = koranyi_profile_coefficients(q, p, theta)?;
    if beta > 0.0 && 2.0 * beta > alpha {
        let s = (2.0 * beta - alpha) / (3.0 * beta);
        return Ok((s, profile_in_s(alpha, beta, s)));
    }
    Ok((0.0, alpha))
}

/// `g(ν)`: the value of `|Z_{δ_cc}|²` along polar coordinates.
pub fn g_cc(q: f64, p: f64, theta: f64, nu: f64) -> Result<f64> {
    check_q(q)?;
    if !(nu.abs() <= TAU) {
        return Err(Error::param("nu", format!("{nu} outside [-2π, 2π]")));
    }
    let pt = p * theta;
    let alpha = (q / (q - 2.0)).powi(2);
    let f1 = horizontal_profile(nu);
    let f2 = vertical_profile(nu);
    let f3 = cosc(nu);
    Ok(2.0 * alpha * f1 + (2.0 * pt / (q - 2.0)).powi(2) * f2 * f2 - 4.0 * pt * q / (q - 2.0).powi(2) * f2 * f3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupMethod {
    ClosedForm,
    ScanGolden,
    Multistart,
}

/// Which length is maximized: Euclidean in the frame, or `|·|_B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Symplectic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupArg {
    Lambda { lambda: f64, s: f64 },
    Nu { nu: f64 },
    Point { point: Point },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    /// Supremum of the length of `Z_d`.
    pub sup_value: f64,
    pub sup_squared: f64,
    pub arg: SupArg,
    pub method: SupMethod,
    pub samples: usize,
    pub metric: Metric,
    /// Exact value of the squared supremum when a closed form exists.
    pub closed_form_squared: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupOptions {
    pub scan_nodes: usize,
    pub samples: usize,
    pub refine_top: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SupOptions {
    fn default() -> Self {
        Self { scan_nodes: 10_001, samples: 100_000, refine_top: 8, seed: 0, tol: 1e-12 }
    }
}

/// Supremum of `|Z_d|` with the method appropriate to the gauge.
pub fn sup_z_norm(spec: &ZFieldSpec) -> Result<SupResult> {
    sup_z_norm_with(spec, &SupOptions::default())
}

pub fn sup_z_norm_with(spec: &ZFieldSpec, opts: &SupOptions) -> Result<SupResult> {
    let g = spec.group();
    let q = spec.q();
    match (spec.norm.kind(), spec.variant) {
        (NormKind::Koranyi, ZVariant::Single) if g.is_heisenberg() => profile_sup(spec, opts, Metric::Euclidean),
        (NormKind::KoranyiB, ZVariant::Single) => profile_sup(spec, opts, Metric::Symplectic),
        (NormKind::Cc, ZVariant::Single) => {
            let objective = |nu: f64| g_cc(q, spec.p, spec.theta, nu).unwrap_or(f64::NEG_INFINITY);
            let best = scan_golden_max(objective, -TAU, TAU, opts.scan_nodes, opts.tol)?;
            Ok(SupResult {
                sup_value: best.value.sqrt(),
                sup_squared: best.value,
                arg: SupArg::Nu { nu: best.arg },
                method: SupMethod::ScanGolden,
                samples: opts.scan_nodes,
                metric: Metric::Euclidean,
                closed_form_squared: None,
            })
        }
        _ => multistart_sup(spec, opts),
    }
}

fn profile_sup(spec: &ZFieldSpec, opts: &SupOptions, metric: Metric) -> Result<SupResult> {
    let q = spec.q();
    let (alpha, beta) = koranyi_profile_coefficients(q, spec.p, spec.theta)?;
    let best = scan_golden_max(|s| profile_in_s(alpha, beta, s), 0.0, 1.0, opts.scan_nodes, opts.tol)?;
    let (_, exact) = koranyi_profile_max(q, spec.p, spec.theta)?;
    Ok(SupResult {
        sup_value: best.value.sqrt(),
        sup_squared: best.value,
        arg: SupArg::Lambda { lambda: lambda_from_s(best.arg), s: best.arg },
        method: SupMethod::ScanGolden,
        samples: opts.scan_nodes,
        metric,
        closed_form_squared: Some(exact),
    })
}

/// `|V|_B² = Σ_i (λ_i/4)(V_{2i-1}² + V_{2i}²)`.
pub fn symplectic_length_sq(g: &StepTwoGroup, v: &HVector) -> f64 {
    g.symplectic_norm_sq(&v.0)
}

fn squared_length(spec: &ZFieldSpec, x: &Point) -> f64 {
    match z_field_at(spec, x) {
        Ok(z) if spec.norm.kind() == NormKind::KoranyiB => symplectic_length_sq(spec.group(), &z),
        Ok(z) => z.norm_sq(),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Projects a flat coordinate vector onto the slice `{d = 1}`.
pub fn to_unit_slice(spec: &ZFieldSpec, flat: &[f64]) -> Option<Point> {
    let x = Point::from_flat(spec.group(), flat).ok()?;
    let d = spec.norm.value(&x);
    (d > 1e-6 && d.is_finite()).then(|| dilate_unchecked(1.0 / d, &x))
}

/// Quasi-random multistart on `{d = 1}` followed by coordinate refinement of the best starts.
pub fn multistart_sup(spec: &ZFieldSpec, opts: &SupOptions) -> Result<SupResult> {
    let g = spec.group();
    let mut halton = Halton::new(g.dim())?;
    // skip a seed-dependent prefix so different seeds give different designs
    for _ in 0..(opts.seed % 4096) {
        halton.next_point();
    }
    let top = opts.refine_top.max(1);
    let mut leaders: Vec<(f64, Vec<f64>)> = Vec::with_capacity(top + 1);
    let mut evaluated = 0usize;
    for _ in 0..opts.samples {
        let u = halton.next_point();
        let flat: Vec<f64> = u.iter().map(|v| 2.0 * v - 1.0).collect();
        let Some(x) = to_unit_slice(spec, &flat) else { continue };
        let value = squared_length(spec, &x);
        evaluated += 1;
        if !value.is_finite() {
            continue;
        }
        if leaders.len() < top || value > leaders[leaders.len() - 1].0 {
            leaders.push((value, x.to_flat()));
            leaders.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| cmp_lex(&a.1, &b.1)));
            leaders.truncate(top);
        }
    }
    if leaders.is_empty() {
        return Err(Error::Domain("no admissible sample on the unit slice".into()));
    }
    let objective = |flat: &[f64]| match Point::from_flat(g, flat) {
        Ok(x) => squared_length(spec, &x),
        Err(_) => f64::NEG_INFINITY,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (value, start) in &leaders {
        let (arg, refined) = coordinate_refine_max(objective, start, 0.25, 10, 1e-10)?;
        let candidate = if refined >= *value { (refined, arg) } else { (*value, start.clone()) };
        let better = match &best {
            None => true,
            Some((v, a)) => candidate.0 > *v || (candidate.0 == *v && cmp_lex(&candidate.1, a).is_lt()),
        };
        if better {
            best = Some(candidate);
        }
    }
    let (value, flat) = best.expect("at least one leader");
    let point = to_unit_slice(spec, &flat).unwrap_or(Point::from_flat(g, &flat)?);
    let metric = if spec.norm.kind() == NormKind::KoranyiB { Metric::Symplectic } else { Metric::Euclidean };
    Ok(SupResult {
        sup_value: value.sqrt(),
        sup_squared: value,
        arg: SupArg::Point { point },
        method: SupMethod::Multistart,
        samples: evaluated,
        metric,
        closed_form_squared: None,
    })
}

fn cmp_lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}
