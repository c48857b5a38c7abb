//! Bounded scalar maximization and quasi-random sampling.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximum {
    pub arg: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Maximum> {
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::param("interval", format!("[{lo}, {hi}] is not a finite interval")));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("tolerance must be positive, got {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { Maximum { arg: c, value: fc } } else { Maximum { arg: d, value: fd } };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.value {
            best = Maximum { arg: x, value: fx };
        }
    }
    Ok(best)
}

/// Evaluates `f` on `nodes` equispaced points of `[lo, hi]` and returns the best node and its index.
pub fn dense_scan_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, nodes: usize) -> Result<(Maximum, usize)> {
    if nodes < 2 {
        return Err(Error::param("nodes", "a scan needs at least two nodes"));
    }
    let step = (hi - lo) / (nodes - 1) as f64;
    let mut best = (Maximum { arg: lo, value: f64::NEG_INFINITY }, 0);
    for i in 0..nodes {
        let x = if i + 1 == nodes { hi } else { lo + step * i as f64 };
        let fx = f(x);
        if fx.is_nan() {
            return Err(Error::Domain(format!("objective is NaN at {x}")));
        }
        if fx > best.0.value {
            best = (Maximum { arg: x, value: fx }, i);
        }
    }
    Ok(best)
}

/// Dense scan followed by golden-section refinement in the bracketing cell pair.
/// The result is never worse than the best scanned node.
pub fn scan_golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, nodes: usize, tol: f64) -> Result<Maximum> {
    let (coarse, index) = dense_scan_max(&f, lo, hi, nodes)?;
    let step = (hi - lo) / (nodes - 1) as f64;
    let a = (lo + step * index.saturating_sub(1) as f64).max(lo);
    let b = (lo + step * (index + 1) as f64).min(hi);
    let fine = golden_section_max(&f, a, b, tol)?;
    Ok(if fine.value >= coarse.value { fine } else { coarse })
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Halton points in `[0, 1)^dim`, skipping the degenerate origin.
#[derive(Clone, Debug)]
pub struct Halton {
    dim: usize,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > PRIMES.len() {
            return Err(Error::param("dim", format!("Halton dimension must be in 1..={}", PRIMES.len())));
        }
        Ok(Self { dim, index: 1 })
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let p = (0..self.dim).map(|k| radical_inverse(self.index, PRIMES[k])).collect();
        self.index += 1;
        p
    }
}

/// Cyclic coordinate ascent: golden-section along each axis in a window that shrinks by half
/// every sweep.
pub fn coordinate_refine_max<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    window: f64,
    sweeps: usize,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut x = start.to_vec();
    let mut best = f(&x);
    let mut width = window;
    for _ in 0..sweeps {
        for k in 0..x.len() {
            let centre = x[k];
            let probe = |v: f64| {
                let mut y = x.clone();
                y[k] = v;
                f(&y)
            };
            let m = golden_section_max(probe, centre - width, centre + width, tol)?;
            if m.value > best {
                best = m.value;
                x[k] = m.arg;
            }
        }
        width *= 0.5;
    }
    Ok((x, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_finds_parabola_peak() {
        let m = golden_section_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 1.0, 1e-10).unwrap();
        assert_abs_diff_eq!(m.arg, 0.3, epsilon = 1e-7);
        assert_abs_diff_eq!(m.value, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn golden_checks_endpoints() {
        let m = golden_section_max(|x| x, 0.0, 1.0, 1e-9).unwrap();
        assert_eq!(m.arg, 1.0);
        assert!(golden_section_max(|x| x, 1.0, 0.0, 1e-9).is_err());
    }

    #[test]
    fn scan_then_golden_on_multimodal() {
        let f = |x: f64| (3.0 * x).sin() + 0.1 * x;
        let m = scan_golden_max(f, 0.0, 10.0, 1001, 1e-12).unwrap();
        let (coarse, _) = dense_scan_max(f, 0.0, 10.0, 100_001).unwrap();
        assert!(m.value >= coarse.value - 1e-12);
    }

    #[test]
    fn halton_first_points() {
        let mut h = Halton::new(2).unwrap();
        assert_eq!(h.next_point(), vec![0.5, 1.0 / 3.0]);
        assert_eq!(h.next_point(), vec![0.25, 2.0 / 3.0]);
        assert_eq!(radical_inverse(6, 2), 0.375);
    }

    #[test]
    fn coordinate_refine_climbs() {
        let f = |x: &[f64]| -(x[0] - 0.2).powi(2) - 2.0 * (x[1] + 0.4).powi(2);
        let (x, v) = coordinate_refine_max(f, &[0.0, 0.0], 1.0, 6, 1e-12).unwrap();
        assert_abs_diff_eq!(x[0], 0.2, epsilon = 1e-8);
        assert_abs_diff_eq!(x[1], -0.4, epsilon = 1e-8);
        assert!(v <= 0.0 && v > -1e-14);
    }
}
