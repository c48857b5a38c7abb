//! Carnot–Carathéodory distance from the origin on `H^n` (eigenvalue 4 on every block),
//! through the polar parametrization `Φ(a + ib, ν, r)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{HVector, Partials, Point};

/// Below this `|ν|` the trigonometric quotients switch to their Taylor expansions.
const SERIES_CUTOFF: f64 = 1e-3;
const BISECTION_TOL: f64 = 1e-13;
const UNIT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcPolar {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub nu: f64,
    pub r: f64,
}

/// `sin ν / ν`
fn sinc(nu: f64) -> f64 {
    if nu.abs() < SERIES_CUTOFF {
        let n2 = nu * nu;
        1.0 - n2 / 6.0 + n2 * n2 / 120.0
    } else {
        nu.sin() / nu
    }
}

/// `(1 − cos ν) / ν`
pub(crate) fn cosc(nu: f64) -> f64 {
    if nu.abs() < SERIES_CUTOFF {
        let n2 = nu * nu;
        nu * (0.5 - n2 / 24.0 + n2 * n2 / 720.0)
    } else {
        2.0 * (0.5 * nu).sin().powi(2) / nu
    }
}

/// `(ν − sin ν) / ν²`
pub(crate) fn vertical_profile(nu: f64) -> f64 {
    if nu.abs() < SERIES_CUTOFF {
        let n2 = nu * nu;
        nu * (1.0 / 6.0 - n2 / 120.0 + n2 * n2 / 5040.0 - n2 * n2 * n2 / 362_880.0)
    } else {
        (nu - nu.sin()) / (nu * nu)
    }
}

/// `(1 − cos ν) / ν²`
pub(crate) fn horizontal_profile(nu: f64) -> f64 {
    if nu.abs() < SERIES_CUTOFF {
        let n2 = nu * nu;
        0.5 - n2 / 24.0 + n2 * n2 / 720.0 - n2 * n2 * n2 / 40_320.0
    } else {
        2.0 * (0.5 * nu).sin().powi(2) / (nu * nu)
    }
}

/// `μ(ν) = (ν − sin ν)/(1 − cos ν)`, odd and increasing on `(−2π, 2π)`.
pub fn mu(nu: f64) -> f64 {
    if nu.abs() < SERIES_CUTOFF {
        let n2 = nu * nu;
        nu * (1.0 / 3.0 + n2 / 90.0 + n2 * n2 / 2520.0)
    } else {
        (nu - nu.sin()) / (2.0 * (0.5 * nu).sin().powi(2))
    }
}

fn mu_prime(nu: f64) -> f64 {
    if nu.abs() < SERIES_CUTOFF {
        let n2 = nu * nu;
        1.0 / 3.0 + n2 / 30.0 + n2 * n2 / 504.0
    } else {
        let one_minus_cos = 2.0 * (0.5 * nu).sin().powi(2);
        (one_minus_cos * one_minus_cos - (nu - nu.sin()) * nu.sin()) / (one_minus_cos * one_minus_cos)
    }
}

/// Solves `μ(ν) = target` on `(−2π, 2π)`.
pub fn solve_nu(target: f64) -> Result<f64> {
    if !target.is_finite() {
        return Err(Error::RootFinding(format!("non-finite target {target}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let m = target.abs();
    let (mut lo, mut hi) = (0.0_f64, TAU);
    let mut iterations = 0;
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if mu(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 200 {
            return Err(Error::RootFinding(format!("bisection stalled for μ = {target}")));
        }
    }
    let mut nu = 0.5 * (lo + hi);
    for _ in 0..2 {
        let slope = mu_prime(nu);
        if slope.is_finite() && slope > 0.0 {
            let next = nu - (mu(nu) - m) / slope;
            if next > 0.0 && next < TAU {
                nu = next;
            }
        }
    }
    if !(nu > 0.0 && nu < TAU) {
        return Err(Error::RootFinding(format!("ν left the bracket for μ = {target}")));
    }
    Ok(nu.copysign(target))
}

fn check_heisenberg_point(x: &Point) -> Result<usize> {
    if x.z.is_empty() || !x.z.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: 2, found: x.z.len() });
    }
    if x.t.len() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: x.t.len() });
    }
    Ok(x.z.len() / 2)
}

/// The point `Φ(a + ib, ν, r)`.
pub fn cc_from_polar(p: &CcPolar) -> Result<Point> {
    let n = p.a.len();
    if n == 0 || p.b.len() != n {
        return Err(Error::DimensionMismatch { expected: n.max(1), found: p.b.len() });
    }
    let unit: f64 = p.a.iter().chain(&p.b).map(|v| v * v).sum();
    if (unit - 1.0).abs() > UNIT_TOL {
        return Err(Error::param("a+ib", format!("|a+ib|² = {unit}, expected 1")));
    }
    if !(p.nu.abs() <= TAU) {
        return Err(Error::param("nu", format!("{} outside [-2π, 2π]", p.nu)));
    }
    if !(p.r > 0.0 && p.r.is_finite()) {
        return Err(Error::param("r", format!("radius must be positive, got {}", p.r)));
    }
    let (s, c) = (sinc(p.nu), cosc(p.nu));
    let mut z = Vec::with_capacity(2 * n);
    for i in 0..n {
        z.push(p.r * (p.b[i] * c + p.a[i] * s));
        z.push(p.r * (-p.a[i] * c + p.b[i] * s));
    }
    let t = 2.0 * vertical_profile(p.nu) * p.r * p.r;
    Ok(Point { z, t: vec![t] })
}

/// Polar coordinates of a point off the origin.
pub fn cc_invert(x: &Point) -> Result<CcPolar> {
    let n = check_heisenberg_point(x)?;
    let t = x.t[0];
    let z_sq = x.z_norm_sq();
    if z_sq == 0.0 {
        if t == 0.0 {
            return Err(Error::Domain("the origin has no polar coordinates".into()));
        }
        let mut a = vec![0.0; n];
        a[0] = 1.0;
        return Ok(CcPolar { a, b: vec![0.0; n], nu: TAU.copysign(t), r: (PI * t.abs()).sqrt() });
    }
    let nu = solve_nu(t / z_sq)?;
    let z_norm = z_sq.sqrt();
    let r = if nu == 0.0 { z_norm } else { z_norm * nu.abs() / (2.0 * (0.5 * nu).sin().abs()) };
    let (s, c) = (sinc(nu), cosc(nu));
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let (z1, z2) = (x.z[2 * i], x.z[2 * i + 1]);
        a.push(s * z1 - c * z2);
        b.push(c * z1 + s * z2);
    }
    let scale = a.iter().chain(&b).map(|v| v * v).sum::<f64>().sqrt();
    a.iter_mut().chain(b.iter_mut()).for_each(|v| *v /= scale);
    Ok(CcPolar { a, b, nu, r })
}

/// `δ_cc(x)`; zero at the origin and `√(π|t|)` on the center.
pub fn cc_value(x: &Point) -> Result<f64> {
    check_heisenberg_point(x)?;
    if x.is_origin() {
        return Ok(0.0);
    }
    Ok(cc_invert(x)?.r)
}

fn off_center(x: &Point) -> Result<CcPolar> {
    check_heisenberg_point(x)?;
    if x.on_center() {
        return Err(Error::Domain("δ_cc is not differentiable on the center".into()));
    }
    cc_invert(x)
}

fn hgrad_from_polar(p: &CcPolar) -> HVector {
    let (sn, cs) = p.nu.sin_cos();
    let mut out = Vec::with_capacity(2 * p.a.len());
    for (a, b) in p.a.iter().zip(&p.b) {
        out.push(b * sn + a * cs);
        out.push(b * cs - a * sn);
    }
    HVector(out)
}

/// `∇_H δ_cc`, a unit horizontal vector off the center.
pub fn cc_hgrad(x: &Point) -> Result<HVector> {
    Ok(hgrad_from_polar(&off_center(x)?))
}

/// `∂_t δ_cc = ν / (4 r)`.
pub fn cc_dt(x: &Point) -> Result<f64> {
    let p = off_center(x)?;
    Ok(p.nu / (4.0 * p.r))
}

/// Euclidean partials of `δ_cc`, assembled from the frame derivatives.
pub fn cc_partials(x: &Point) -> Result<Partials> {
    let p = off_center(x)?;
    let grad = hgrad_from_polar(&p);
    let dt = p.nu / (4.0 * p.r);
    let dz = (0..x.z.len())
        .map(|k| {
            // X_{2i-1} = ∂ + 2 z_{2i} ∂_t,  X_{2i} = ∂ − 2 z_{2i-1} ∂_t
            let coeff = if k % 2 == 0 { 2.0 * x.z[k + 1] } else { -2.0 * x.z[k - 1] };
            grad.0[k] - coeff * dt
        })
        .collect();
    Ok(Partials { dz, dt: vec![dt] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mu_series_matches_closed_form_at_cutoff() {
        for nu in [0.9e-3, 1.1e-3, -1.05e-3] {
            let closed = (nu - f64::sin(nu)) / (1.0 - f64::cos(nu));
            assert_abs_diff_eq!(mu(nu), closed, epsilon = 1e-9);
        }
    }

    #[test]
    fn solve_nu_inverts_mu() {
        for target in [-50.0, -1.0, -1e-6, 1e-9, 0.3, PI / 2.0, 10.0, 1e4] {
            let nu = solve_nu(target).unwrap();
            assert!((mu(nu) - target).abs() <= 1e-11 * target.abs().max(1.0), "{target}");
        }
        assert_abs_diff_eq!(solve_nu(PI / 2.0).unwrap(), PI, epsilon = 1e-12);
    }

    #[test]
    fn polar_zero_angle() {
        let p = CcPolar { a: vec![1.0], b: vec![0.0], nu: 0.0, r: 2.0 };
        assert_eq!(cc_from_polar(&p).unwrap(), Point::single(&[2.0, 0.0], 0.0));
    }

    #[test]
    fn polar_half_turn() {
        let p = CcPolar { a: vec![1.0], b: vec![0.0], nu: PI, r: PI / 2.0 };
        let x = cc_from_polar(&p).unwrap();
        assert_abs_diff_eq!(x.z_norm_sq(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x.t[0], PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn polar_full_turn_limit() {
        let r = 1.3;
        let p = CcPolar { a: vec![0.6], b: vec![0.8], nu: TAU - 1e-7, r };
        let x = cc_from_polar(&p).unwrap();
        assert!(x.z_norm() < 1e-6);
        assert_abs_diff_eq!(x.t[0], r * r / PI, epsilon = 1e-6);
    }

    #[test]
    fn polar_validation() {
        let bad_unit = CcPolar { a: vec![1.0], b: vec![1.0], nu: 0.0, r: 1.0 };
        assert!(matches!(cc_from_polar(&bad_unit), Err(Error::InvalidParameter { .. })));
        let bad_nu = CcPolar { a: vec![1.0], b: vec![0.0], nu: 7.0, r: 1.0 };
        assert!(cc_from_polar(&bad_nu).is_err());
    }

    #[test]
    fn invert_examples() {
        let p = cc_invert(&Point::single(&[1.0, 0.0], 0.0)).unwrap();
        assert_eq!((p.nu, p.r), (0.0, 1.0));
        let p = cc_invert(&Point::single(&[0.0, 1.0], PI / 2.0)).unwrap();
        assert_abs_diff_eq!(p.nu, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(p.r, PI / 2.0, epsilon = 1e-12);
        let p = cc_invert(&Point::single(&[0.0, 0.0], 1.0)).unwrap();
        assert_abs_diff_eq!(p.r, PI.sqrt(), epsilon = 1e-15);
        assert!(matches!(cc_invert(&Point::single(&[0.0, 0.0], 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn values_and_derivatives_at_reference_points() {
        assert_eq!(cc_value(&Point::single(&[0.0, 0.0], 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(cc_value(&Point::single(&[0.0, 0.0], 1.0)).unwrap(), 1.772_453_850_905_516, epsilon = 1e-12);
        let g = cc_hgrad(&Point::single(&[1.0, 0.0], 0.0)).unwrap();
        assert_eq!(g.0, vec![1.0, 0.0]);
        assert_eq!(cc_dt(&Point::single(&[1.0, 0.0], 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(cc_dt(&Point::single(&[1.0, 0.0], PI / 2.0)).unwrap(), 0.5, epsilon = 1e-12);
        assert!(matches!(cc_hgrad(&Point::single(&[0.0, 0.0], 1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn round_trip_in_two_blocks() {
        let p = CcPolar { a: vec![0.5, -0.1], b: vec![0.3, 0.8], nu: -2.0, r: 0.7 };
        let norm = p.a.iter().chain(&p.b).map(|v| v * v).sum::<f64>().sqrt();
        let p = CcPolar {
            a: p.a.iter().map(|v| v / norm).collect(),
            b: p.b.iter().map(|v| v / norm).collect(),
            ..p
        };
        let x = cc_from_polar(&p).unwrap();
        let q = cc_invert(&x).unwrap();
        assert_abs_diff_eq!(q.nu, p.nu, epsilon = 1e-11);
        assert_abs_diff_eq!(q.r, p.r, epsilon = 1e-12);
        for (u, v) in q.a.iter().chain(&q.b).zip(p.a.iter().chain(&p.b)) {
            assert_abs_diff_eq!(*u, *v, epsilon = 1e-11);
        }
    }
}
