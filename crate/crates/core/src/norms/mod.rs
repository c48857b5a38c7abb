//! Homogeneous gauges: Korányi, its symplectic variant `ρ_B`, the Carnot–Carathéodory
//! distance, and the Balogh–Tyson gauge of the `(½, 1)` group.

pub mod cc;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{
    frame_from_partials, horizontal_gradient, HVector, Partials, Point, ScalarField, Scheme,
    StepTwoGroup,
};

pub use cc::{cc_dt, cc_from_polar, cc_hgrad, cc_invert, cc_value, CcPolar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Koranyi,
    KoranyiB,
    Cc,
    BaloghTyson,
}

impl NormKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::Koranyi => "koranyi",
            NormKind::KoranyiB => "koranyi_b",
            NormKind::Cc => "cc",
            NormKind::BaloghTyson => "balogh_tyson",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "koranyi" => Ok(NormKind::Koranyi),
            "koranyi_b" | "koranyib" => Ok(NormKind::KoranyiB),
            "cc" | "carnot_caratheodory" => Ok(NormKind::Cc),
            "balogh_tyson" | "bt" => Ok(NormKind::BaloghTyson),
            other => Err(Error::param("norm", format!("unknown norm `{other}`"))),
        }
    }
}

/// A homogeneous gauge bound to a group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormModel {
    kind: NormKind,
    group: StepTwoGroup,
}

impl NormModel {
    pub fn new(kind: NormKind, group: StepTwoGroup) -> Result<Self> {
        match kind {
            NormKind::Koranyi => {}
            NormKind::KoranyiB if group.h() != 1 => {
                return Err(Error::InvalidGroup("ρ_B needs a single vertical direction".into()))
            }
            NormKind::KoranyiB => {}
            NormKind::Cc if !group.is_heisenberg() => {
                return Err(Error::InvalidGroup("δ_cc is implemented on H^n only".into()))
            }
            NormKind::Cc => {}
            NormKind::BaloghTyson if group.lambdas().as_deref() != Some(&[0.5, 1.0][..]) => {
                return Err(Error::InvalidGroup("the Balogh–Tyson gauge needs λ = (1/2, 1)".into()))
            }
            NormKind::BaloghTyson => {}
        }
        Ok(Self { kind, group })
    }

    pub fn koranyi(group: StepTwoGroup) -> Self {
        Self { kind: NormKind::Koranyi, group }
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn group(&self) -> &StepTwoGroup {
        &self.group
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.kind != NormKind::BaloghTyson
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self.kind {
            NormKind::Koranyi => koranyi_value(x),
            NormKind::KoranyiB => koranyi_b_value(&self.group, x),
            NormKind::Cc => cc_value(x).unwrap_or(f64::NAN),
            NormKind::BaloghTyson => balogh_tyson_value(x),
        }
    }

    /// Euclidean partials; `NoAnalyticDerivative` for gauges evaluated by differences only.
    pub fn partials(&self, x: &Point) -> Result<Partials> {
        self.group.check_point(x)?;
        match self.kind {
            NormKind::Koranyi => koranyi_partials(x),
            NormKind::KoranyiB => koranyi_b_partials(&self.group, x),
            NormKind::Cc => cc::cc_partials(x),
            NormKind::BaloghTyson => Err(Error::NoAnalyticDerivative),
        }
    }

    /// `∇_G d`, analytic where available, central differences otherwise.
    pub fn hgrad(&self, x: &Point) -> Result<HVector> {
        self.group.check_point(x)?;
        match self.kind {
            NormKind::Cc => cc_hgrad(x),
            NormKind::BaloghTyson => {
                if x.is_origin() {
                    return Err(Error::Domain("gauge gradient at the origin".into()));
                }
                horizontal_gradient(&self.group, self, x, Scheme::CentralFd(None))
            }
            _ => Ok(frame_from_partials(&self.group, x, &self.partials(x)?)),
        }
    }

    /// `∂_{t_j} d`.
    pub fn dt(&self, x: &Point) -> Result<Vec<f64>> {
        match self.kind {
            NormKind::BaloghTyson => {
                if x.is_origin() {
                    return Err(Error::Domain("gauge derivative at the origin".into()));
                }
                crate::group::vertical_derivative(&self.group, self, x, Scheme::CentralFd(None))
            }
            _ => Ok(self.partials(x)?.dt),
        }
    }
}

impl ScalarField for NormModel {
    fn value(&self, x: &Point) -> f64 {
        NormModel::value(self, x)
    }

    fn partials(&self, x: &Point) -> Result<Partials> {
        NormModel::partials(self, x)
    }
}

/// `ρ = (|z|⁴ + |t|²)^{1/4}`.
pub fn koranyi_value(x: &Point) -> f64 {
    let z2 = x.z_norm_sq();
    (z2 * z2 + x.t_norm_sq()).sqrt().sqrt()
}

fn koranyi_partials(x: &Point) -> Result<Partials> {
    if x.is_origin() {
        return Err(Error::Domain("Korányi gradient at the origin".into()));
    }
    let rho = koranyi_value(x);
    let rho3 = rho.powi(3);
    let z2 = x.z_norm_sq();
    Ok(Partials {
        dz: x.z.iter().map(|v| z2 * v / rho3).collect(),
        dt: x.t.iter().map(|v| v / (2.0 * rho3)).collect(),
    })
}

/// Horizontal gradient of the Korányi gauge on `H^n`-type groups.
pub fn koranyi_hgrad(g: &StepTwoGroup, x: &Point) -> Result<HVector> {
    g.check_point(x)?;
    Ok(frame_from_partials(g, x, &koranyi_partials(x)?))
}

/// `ρ_B = (|z|_B⁴ + t²)^{1/4}`.
pub fn koranyi_b_value(g: &StepTwoGroup, x: &Point) -> f64 {
    let zb = g.symplectic_norm_sq(&x.z);
    (zb * zb + x.t_norm_sq()).sqrt().sqrt()
}

fn koranyi_b_partials(g: &StepTwoGroup, x: &Point) -> Result<Partials> {
    if x.is_origin() {
        return Err(Error::Domain("ρ_B gradient at the origin".into()));
    }
    let rho = koranyi_b_value(g, x);
    let rho3 = rho.powi(3);
    let zb = g.symplectic_norm_sq(&x.z);
    let dz = x
        .z
        .iter()
        .enumerate()
        .map(|(k, v)| g.coupling(k / 2, 0) * zb * v / (4.0 * rho3))
        .collect();
    Ok(Partials { dz, dt: x.t.iter().map(|v| v / (2.0 * rho3)).collect() })
}

/// Balogh–Tyson gauge for `λ = (½, 1)` on `ℝ⁴ × ℝ`.
pub fn balogh_tyson_value(x: &Point) -> f64 {
    let z = &x.z;
    let t = x.t[0];
    let first = 0.5 * (z[0] * z[0] + z[1] * z[1]);
    let w = first + z[2] * z[2] + z[3] * z[3];
    let s = w.hypot(t);
    if s == 0.0 {
        return 0.0;
    }
    s.powf(0.25) * (first + s).powf(0.375) / (w + s).powf(0.125)
}

/// `⟨z, B^{-1} ∇_z d⟩`, which vanishes when the gauge is invariant under the block rotations.
pub fn rotation_defect(norm: &NormModel, x: &Point) -> Result<f64> {
    let g = norm.group();
    if g.h() != 1 {
        return Err(Error::InvalidGroup("rotation defect needs a single vertical direction".into()));
    }
    let dz = match norm.partials(x) {
        Ok(p) => p.dz,
        Err(Error::NoAnalyticDerivative) => fd_z_partials(norm, x),
        Err(e) => return Err(e),
    };
    Ok((0..g.n())
        .map(|i| (x.z[2 * i + 1] * dz[2 * i] - x.z[2 * i] * dz[2 * i + 1]) / g.coupling(i, 0))
        .sum())
}

fn fd_z_partials(norm: &NormModel, x: &Point) -> Vec<f64> {
    let h = crate::group::default_step(x);
    (0..x.z.len())
        .map(|k| {
            let mut dir = Point::origin(norm.group());
            dir.z[k] = 1.0;
            crate::group::directional_fd(norm, x, &dir, h)
        })
        .collect()
}

/// Left side of the reconstruction identity `4 (t/|z|²) ⟨B^{-1}∇_G d, z⟩ + ⟨z, ∇_G d⟩`,
/// which equals `d` off the center for rotation-invariant gauges.
pub fn reconstruction_lhs(norm: &NormModel, x: &Point) -> Result<f64> {
    let g = norm.group();
    if g.h() != 1 {
        return Err(Error::InvalidGroup("reconstruction needs a single vertical direction".into()));
    }
    if x.on_center() {
        return Err(Error::Domain("reconstruction is stated off the center".into()));
    }
    let grad = norm.hgrad(x)?;
    let twisted = g.b_inverse(&grad).dot_slice(&x.z);
    Ok(4.0 * x.t[0] / x.z_norm_sq() * twisted + grad.dot_slice(&x.z))
}

/// `⟨z/|z|, B^{-1} ∇_G d⟩`, which must tend to zero as `|z| → 0` at fixed `t ≠ 0`.
pub fn center_flux(norm: &NormModel, x: &Point) -> Result<f64> {
    let g = norm.group();
    if g.h() != 1 {
        return Err(Error::InvalidGroup("center flux needs a single vertical direction".into()));
    }
    let grad = norm.hgrad(x)?;
    Ok(g.b_inverse(&grad).dot_slice(&x.z) / x.z_norm())
}

/// Uniform point on the unit Korányi sphere of `g`, from a uniform direction in `ℝ^{dim}`.
pub fn koranyi_sphere_sample<R: Rng>(g: &StepTwoGroup, rng: &mut R) -> Point {
    loop {
        let flat: Vec<f64> = (0..g.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = Point::from_flat(g, &flat).expect("dimension matches");
        let rho = koranyi_value(&x);
        if rho > 1e-3 {
            return crate::group::dilate_unchecked(1.0 / rho, &x);
        }
    }
}

/// Empirical `(min, max)` of `d₁/d₂` over random points on the unit Korányi sphere.
pub fn norm_equivalence(first: &NormModel, second: &NormModel, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if first.group() != second.group() {
        return Err(Error::InvalidGroup("gauges live on different groups".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for _ in 0..samples {
        let x = koranyi_sphere_sample(first.group(), &mut rng);
        let ratio = first.value(&x) / second.value(&x);
        if !ratio.is_finite() {
            return Err(Error::Domain(format!("gauge ratio undefined at {:?}", x)));
        }
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{dilate, euler_apply, horizontal_gradient};
    use approx::assert_abs_diff_eq;

    fn h1() -> StepTwoGroup {
        StepTwoGroup::heisenberg(1).unwrap()
    }

    #[test]
    fn koranyi_examples() {
        assert_eq!(koranyi_value(&Point::single(&[1.0, 0.0], 0.0)), 1.0);
        assert_eq!(koranyi_value(&Point::single(&[0.0, 0.0], 1.0)), 1.0);
        assert_abs_diff_eq!(koranyi_value(&Point::single(&[1.0, 0.0], 1.0)), 2f64.powf(0.25), epsilon = 1e-15);
        let g = koranyi_hgrad(&h1(), &Point::single(&[1.0, 0.0], 0.0)).unwrap();
        assert_eq!(g.0, vec![1.0, 0.0]);
        assert!(matches!(koranyi_hgrad(&h1(), &Point::origin(&h1())), Err(Error::Domain(_))));
    }

    #[test]
    fn koranyi_perp_pairing_at_reference_point() {
        let x = Point::single(&[1.0, 0.0], 1.0);
        let grad = koranyi_hgrad(&h1(), &x).unwrap();
        let (p0, p1) = grad.block_perp(0);
        assert_abs_diff_eq!(p0 * x.z[0] + p1 * x.z[1], 2f64.powf(-0.75), epsilon = 1e-12);
    }

    #[test]
    fn koranyi_b_examples() {
        let g = StepTwoGroup::single(&[1.0, 2.0]).unwrap();
        let x = Point::single(&[2.0, 0.0, 0.0, 0.0], 0.0);
        assert_abs_diff_eq!(koranyi_b_value(&g, &x), 1.0, epsilon = 1e-15);
        let h2 = StepTwoGroup::heisenberg(2).unwrap();
        let y = Point::single(&[0.3, -0.2, 1.1, 0.4], -0.7);
        assert_abs_diff_eq!(koranyi_b_value(&h2, &y), koranyi_value(&y), epsilon = 1e-15);
    }

    #[test]
    fn balogh_tyson_reference_value() {
        let x = Point::single(&[0.0, 0.0, 1.0, 0.0], 0.0);
        assert_abs_diff_eq!(balogh_tyson_value(&x), 2f64.powf(-0.125), epsilon = 1e-15);
        assert_eq!(balogh_tyson_value(&Point::single(&[0.0; 4], 0.0)), 0.0);
    }

    #[test]
    fn norm_constructor_checks_group() {
        let h1 = h1();
        assert!(NormModel::new(NormKind::Cc, h1.clone()).is_ok());
        assert!(NormModel::new(NormKind::BaloghTyson, h1).is_err());
        let nonisotropic = StepTwoGroup::single(&[0.5, 1.0]).unwrap();
        assert!(NormModel::new(NormKind::BaloghTyson, nonisotropic.clone()).is_ok());
        assert!(NormModel::new(NormKind::Cc, nonisotropic).is_err());
        assert_eq!("koranyi-b".parse::<NormKind>().unwrap(), NormKind::KoranyiB);
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let cases = [
            NormModel::new(NormKind::Koranyi, StepTwoGroup::heisenberg(2).unwrap()).unwrap(),
            NormModel::new(NormKind::KoranyiB, StepTwoGroup::single(&[1.0, 3.0]).unwrap()).unwrap(),
            NormModel::new(NormKind::Cc, StepTwoGroup::heisenberg(2).unwrap()).unwrap(),
            NormModel::new(NormKind::Koranyi, StepTwoGroup::heisenberg_product(1, 2).unwrap()).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for norm in &cases {
            for _ in 0..20 {
                let x = koranyi_sphere_sample(norm.group(), &mut rng);
                let exact = norm.hgrad(&x).unwrap();
                let fd = horizontal_gradient(norm.group(), norm, &x, Scheme::CentralFd(None)).unwrap();
                for (a, b) in exact.0.iter().zip(&fd.0) {
                    assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
                }
                let dt = norm.dt(&x).unwrap();
                let fd_dt =
                    crate::group::vertical_derivative(norm.group(), norm, &x, Scheme::CentralFd(None)).unwrap();
                for (a, b) in dt.iter().zip(&fd_dt) {
                    assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn euler_field_reproduces_gauges() {
        let norms = [
            NormModel::new(NormKind::Koranyi, h1()).unwrap(),
            NormModel::new(NormKind::Cc, h1()).unwrap(),
            NormModel::new(NormKind::BaloghTyson, StepTwoGroup::single(&[0.5, 1.0]).unwrap()).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for norm in &norms {
            for _ in 0..10 {
                let x = dilate(norm.group(), 1.7, &koranyi_sphere_sample(norm.group(), &mut rng)).unwrap();
                let e = euler_apply(norm.group(), norm, &x).unwrap();
                assert_abs_diff_eq!(e, norm.value(&x), epsilon = 1e-7 * norm.value(&x));
            }
        }
    }

    #[test]
    fn rotation_and_reconstruction_for_invariant_gauges() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [NormKind::Koranyi, NormKind::Cc] {
            let norm = NormModel::new(kind, StepTwoGroup::heisenberg(2).unwrap()).unwrap();
            for _ in 0..20 {
                let x = koranyi_sphere_sample(norm.group(), &mut rng);
                assert!(rotation_defect(&norm, &x).unwrap().abs() <= 1e-8);
                let lhs = reconstruction_lhs(&norm, &x).unwrap();
                assert_abs_diff_eq!(lhs, norm.value(&x), epsilon = 1e-6 * norm.value(&x));
            }
        }
    }

    #[test]
    fn equivalence_constants_are_finite() {
        let g = h1();
        let cc = NormModel::new(NormKind::Cc, g.clone()).unwrap();
        let k = NormModel::koranyi(g);
        let (lo, hi) = norm_equivalence(&cc, &k, 2000, 1).unwrap();
        assert!(lo >= 1.0 - 1e-9 && hi <= std::f64::consts::PI.sqrt() + 1e-9);
        assert!(hi > 1.5);
    }
}
