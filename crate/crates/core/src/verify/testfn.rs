//! Compactly supported test functions with analytic partial derivatives.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Partials, Point, ScalarField, StepTwoGroup};
use crate::norms::{koranyi_value, NormModel};

fn psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn psi_prime(x: f64) -> f64 {
    if x > 0.0 {
        psi(x) / (x * x)
    } else {
        0.0
    }
}

/// `C^∞` step: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let (a, b) = (psi(x), psi(1.0 - x));
        a / (a + b)
    }
}

pub fn smooth_step_prime(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let (a, b) = (psi(x), psi(1.0 - x));
    let (da, db) = (psi_prime(x), psi_prime(1.0 - x));
    (da * b + a * db) / ((a + b) * (a + b))
}

/// Plateau profile: 1 on `[inner, outer]`, supported in `[support_lo, support_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub support_lo: f64,
    pub inner: f64,
    pub outer: f64,
    pub support_hi: f64,
}

impl Default for Plateau {
    fn default() -> Self {
        Self { support_lo: 0.25, inner: 0.5, outer: 1.5, support_hi: 2.0 }
    }
}

impl Plateau {
    pub fn new(support_lo: f64, inner: f64, outer: f64, support_hi: f64) -> Result<Self> {
        if !(0.0 <= support_lo && support_lo < inner && inner <= outer && outer < support_hi) {
            return Err(Error::param("plateau", "need 0 ≤ r₂ < r₁ ≤ R₁ < R₂"));
        }
        Ok(Self { support_lo, inner, outer, support_hi })
    }

    pub fn value(&self, r: f64) -> f64 {
        smooth_step((r - self.support_lo) / (self.inner - self.support_lo))
            * smooth_step((self.support_hi - r) / (self.support_hi - self.outer))
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let rise_w = self.inner - self.support_lo;
        let fall_w = self.support_hi - self.outer;
        let rise = smooth_step((r - self.support_lo) / rise_w);
        let fall = smooth_step((self.support_hi - r) / fall_w);
        smooth_step_prime((r - self.support_lo) / rise_w) / rise_w * fall
            - rise * smooth_step_prime((self.support_hi - r) / fall_w) / fall_w
    }

    pub fn breaks(&self, scale: f64) -> Vec<f64> {
        vec![self.support_lo * scale, self.inner * scale, self.outer * scale, self.support_hi * scale]
    }
}

/// `g_ε`: zero outside `(ε, 1/ε)`, one on `[2ε, 1/(2ε)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub eps: f64,
}

impl Cutoff {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.25) {
            return Err(Error::param("eps", format!("cut-off level must lie in (0, 1/4), got {eps}")));
        }
        Ok(Self { eps })
    }

    pub fn value(&self, lam: f64) -> f64 {
        let e = self.eps;
        smooth_step((lam - e) / e) * smooth_step((1.0 / e - lam) * 2.0 * e)
    }

    pub fn derivative(&self, lam: f64) -> f64 {
        let e = self.eps;
        let rise = smooth_step((lam - e) / e);
        let fall = smooth_step((1.0 / e - lam) * 2.0 * e);
        smooth_step_prime((lam - e) / e) / e * fall - rise * smooth_step_prime((1.0 / e - lam) * 2.0 * e) * 2.0 * e
    }
}

/// `u = η(ρ/scale) · exp(Σ a_k z_k/ρ + Σ b_j t_j/ρ²)` with `ρ` the Korányi gauge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub scale: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub profile: Plateau,
}

impl Bump {
    pub fn radial(g: &StepTwoGroup, scale: f64) -> Self {
        Self { scale, a: vec![0.0; g.horizontal_dim()], b: vec![0.0; g.h()], profile: Plateau::default() }
    }

    /// Random member of the family: `scale ∈ [0.8, 1.25]`, tilts in `[−½, ½]`.
    pub fn random<R: Rng>(g: &StepTwoGroup, rng: &mut R) -> Self {
        Self {
            scale: rng.gen_range(0.8..1.25),
            a: (0..g.horizontal_dim()).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            b: (0..g.h()).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            profile: Plateau::default(),
        }
    }

    /// Korányi radii of the support and plateau edges.
    pub fn breaks(&self) -> Vec<f64> {
        self.profile.breaks(self.scale)
    }

    pub fn support_radius(&self) -> f64 {
        self.profile.support_hi * self.scale
    }

    fn tilt(&self, x: &Point, rho: f64) -> (f64, f64, f64) {
        let az: f64 = self.a.iter().zip(&x.z).map(|(a, z)| a * z).sum();
        let bt: f64 = self.b.iter().zip(&x.t).map(|(b, t)| b * t).sum();
        (az, bt, az / rho + bt / (rho * rho))
    }
}

impl ScalarField for Bump {
    fn value(&self, x: &Point) -> f64 {
        let rho = koranyi_value(x);
        let eta = self.profile.value(rho / self.scale);
        if eta == 0.0 {
            return 0.0;
        }
        eta * self.tilt(x, rho).2.exp()
    }

    fn partials(&self, x: &Point) -> Result<Partials> {
        let rho = koranyi_value(x);
        let r = rho / self.scale;
        let eta = self.profile.value(r);
        let deta = self.profile.derivative(r) / self.scale;
        if eta == 0.0 && deta == 0.0 {
            return Ok(Partials { dz: vec![0.0; x.z.len()], dt: vec![0.0; x.t.len()] });
        }
        let (az, bt, e) = self.tilt(x, rho);
        let ex = e.exp();
        let rho3 = rho.powi(3);
        let z2 = x.z_norm_sq();
        // ∂ρ/∂z_k = |z|² z_k / ρ³, ∂ρ/∂t_j = t_j / (2ρ³)
        let tilt_rho = -az / (rho * rho) - 2.0 * bt / rho3;
        let dz = x
            .z
            .iter()
            .zip(&self.a)
            .map(|(z, a)| {
                let drho = z2 * z / rho3;
                ex * (deta * drho + eta * (a / rho + tilt_rho * drho))
            })
            .collect();
        let dt = x
            .t
            .iter()
            .zip(&self.b)
            .map(|(t, b)| {
                let drho = t / (2.0 * rho3);
                ex * (deta * drho + eta * (b / (rho * rho) + tilt_rho * drho))
            })
            .collect();
        Ok(Partials { dz, dt })
    }
}

/// `u_ε = λ^κ g_ε(λ) η(d)` with `λ = t/|z|²`, on a group with one vertical direction.
#[derive(Clone, Debug, PartialEq)]
pub struct SharpnessFunction {
    pub norm: NormModel,
    pub cutoff: Cutoff,
    pub kappa: f64,
    pub profile: Plateau,
}

impl SharpnessFunction {
    pub fn new(norm: NormModel, eps: f64, p: f64) -> Result<Self> {
        if norm.group().h() != 1 {
            return Err(Error::InvalidGroup("cut-off family needs one vertical direction".into()));
        }
        let q = norm.group().homogeneous_dimension();
        Ok(Self { norm, cutoff: Cutoff::new(eps)?, kappa: (q - 2.0) / (2.0 * p), profile: Plateau::default() })
    }

    fn lambda(x: &Point) -> f64 {
        x.t[0] / x.z_norm_sq()
    }
}

impl ScalarField for SharpnessFunction {
    fn value(&self, x: &Point) -> f64 {
        let lam = Self::lambda(x);
        if !(lam > self.cutoff.eps) {
            return 0.0;
        }
        lam.powf(self.kappa) * self.cutoff.value(lam) * self.profile.value(self.norm.value(x))
    }

    fn partials(&self, x: &Point) -> Result<Partials> {
        let lam = Self::lambda(x);
        let zero = || Partials { dz: vec![0.0; x.z.len()], dt: vec![0.0; 1] };
        if !(lam > self.cutoff.eps && lam < 1.0 / self.cutoff.eps) {
            return Ok(zero());
        }
        let d = self.norm.value(x);
        let eta = self.profile.value(d);
        let deta = self.profile.derivative(d);
        if eta == 0.0 && deta == 0.0 {
            return Ok(zero());
        }
        let g = self.cutoff.value(lam);
        let phi = lam.powf(self.kappa) * g;
        let dphi = self.kappa * lam.powf(self.kappa - 1.0) * g + lam.powf(self.kappa) * self.cutoff.derivative(lam);
        let z2 = x.z_norm_sq();
        let dd = if deta != 0.0 { Some(self.norm.partials(x)?) } else { None };
        let dz = x
            .z
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let dlam = -2.0 * x.t[0] * z / (z2 * z2);
                dphi * dlam * eta + dd.as_ref().map_or(0.0, |p| phi * deta * p.dz[k])
            })
            .collect();
        let dt = vec![dphi / z2 * eta + dd.as_ref().map_or(0.0, |p| phi * deta * p.dt[0])];
        Ok(Partials { dz, dt })
    }
}

/// `u = (|t|/|z|²)^κ`, the profile attaining equality in the projected inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremal {
    pub kappa: f64,
}

impl ScalarField for Extremal {
    fn value(&self, x: &Point) -> f64 {
        (x.t[0].abs() / x.z_norm_sq()).powf(self.kappa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{horizontal_gradient, vertical_derivative, Scheme};
    use crate::norms::NormKind;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(0.5), 0.5);
        assert_eq!(smooth_step(2.0), 1.0);
        for x in [0.1, 0.37, 0.8] {
            let fd = (smooth_step(x + 1e-6) - smooth_step(x - 1e-6)) / 2e-6;
            assert_abs_diff_eq!(smooth_step_prime(x), fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn plateau_and_cutoff_levels() {
        let eta = Plateau::default();
        assert_eq!(eta.value(0.2), 0.0);
        assert_eq!(eta.value(1.0), 1.0);
        assert_eq!(eta.value(2.1), 0.0);
        let g = Cutoff::new(1e-2).unwrap();
        assert_eq!(g.value(0.005), 0.0);
        assert_eq!(g.value(0.02), 1.0);
        assert_eq!(g.value(50.0), 1.0);
        assert_eq!(g.value(100.0), 0.0);
        // |g'| ≤ c/ε on the rise and ≤ c ε on the fall
        let rise = (0..100).map(|i| g.derivative(0.01 + 0.0001 * i as f64).abs()).fold(0.0, f64::max);
        let fall = (0..100).map(|i| g.derivative(50.0 + 0.5 * i as f64).abs()).fold(0.0, f64::max);
        assert!(rise * 1e-2 < 3.0 && fall / 1e-2 < 6.0);
        assert!(Cutoff::new(0.3).is_err());
    }

    #[test]
    fn bump_partials_match_differences() {
        let g = StepTwoGroup::heisenberg_product(1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = Bump::random(&g, &mut rng);
        for _ in 0..20 {
            let x = crate::group::dilate_unchecked(
                rng.gen_range(0.3..2.2),
                &crate::norms::koranyi_sphere_sample(&g, &mut rng),
            );
            let exact = horizontal_gradient(&g, &u, &x, Scheme::Analytic).unwrap();
            let fd = horizontal_gradient(&g, &u, &x, Scheme::CentralFd(Some(1e-6))).unwrap();
            for (a, b) in exact.0.iter().zip(&fd.0) {
                assert_abs_diff_eq!(*a, *b, epsilon = 2e-6);
            }
            let dt = vertical_derivative(&g, &u, &x, Scheme::Analytic).unwrap();
            let fd = vertical_derivative(&g, &u, &x, Scheme::CentralFd(Some(1e-6))).unwrap();
            for (a, b) in dt.iter().zip(&fd) {
                assert_abs_diff_eq!(*a, *b, epsilon = 2e-6);
            }
        }
    }

    #[test]
    fn sharpness_partials_match_differences() {
        let g = StepTwoGroup::heisenberg(1).unwrap();
        for kind in [NormKind::Koranyi, NormKind::Cc] {
            let u = SharpnessFunction::new(NormModel::new(kind, g.clone()).unwrap(), 0.05, 2.0).unwrap();
            for (z, t) in [([0.9, 0.2], 0.05), ([0.3, -0.4], 0.2), ([0.1, 0.05], 0.8), ([0.5, 0.5], 0.6)] {
                let x = Point::single(&z, t);
                let exact = horizontal_gradient(&g, &u, &x, Scheme::Analytic).unwrap();
                let fd = horizontal_gradient(&g, &u, &x, Scheme::CentralFd(Some(1e-7))).unwrap();
                for (a, b) in exact.0.iter().zip(&fd.0) {
                    assert_abs_diff_eq!(*a, *b, epsilon = 1e-5 * a.abs().max(1.0));
                }
            }
        }
    }
}
