//! Step-two Carnot groups in block-diagonal coordinates.
//!
//! Every vertical direction `j` is coupled to the horizontal block `i` (coordinates
//! `z[2i], z[2i+1]`) through a nonnegative eigenvalue `λ_i^{(j)}`, so that
//!
//! ```text
//! X_{2i-1} = ∂_{z_{2i-1}} + Σ_j (λ_i^{(j)}/2) z_{2i} ∂_{t_j}
//! X_{2i}   = ∂_{z_{2i}}   - Σ_j (λ_i^{(j)}/2) z_{2i-1} ∂_{t_j}
//! ```
//!
//! Indices in code are zero-based: block `i` owns `z[2 * i]` and `z[2 * i + 1]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative scale of the default central-difference step.
pub const FD_RELATIVE_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKind {
    /// One vertical direction, eigenvalues `λ_1..λ_n`.
    Single,
    /// `(H^n)^N`, each factor with the standard eigenvalue 4.
    HeisenbergProduct { n: usize, factors: usize },
    /// Several vertical directions; `selected` are the block indices `i_1..i_h`
    /// whose coupling rows form the invertible matrix `A`.
    General { selected: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTwoGroup {
    /// `couplings[i][j] = λ_i^{(j)}`, one row per horizontal block.
    couplings: Vec<Vec<f64>>,
    kind: GroupKind,
    #[serde(skip)]
    a_inverse: Option<Vec<Vec<f64>>>,
}

impl StepTwoGroup {
    /// Group with a one-dimensional vertical layer and block eigenvalues `lambdas`.
    pub fn single(lambdas: &[f64]) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidGroup("empty eigenvalue list".into()));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidGroup(format!("eigenvalue {bad} is not positive")));
        }
        Ok(Self {
            couplings: lambdas.iter().map(|&l| vec![l]).collect(),
            kind: GroupKind::Single,
            a_inverse: None,
        })
    }

    /// The Heisenberg group `H^n` with `λ_i = 4`.
    pub fn heisenberg(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGroup("n must be at least 1".into()));
        }
        Self::single(&vec![4.0; n])
    }

    pub fn heisenberg_product(n: usize, factors: usize) -> Result<Self> {
        if n == 0 || factors == 0 {
            return Err(Error::InvalidGroup("n and N must be at least 1".into()));
        }
        let mut couplings = Vec::with_capacity(n * factors);
        for j in 0..factors {
            for _ in 0..n {
                let mut row = vec![0.0; factors];
                row[j] = 4.0;
                couplings.push(row);
            }
        }
        let a_inverse = Some(identity(factors, 0.25));
        Ok(Self { couplings, kind: GroupKind::HeisenbergProduct { n, factors }, a_inverse })
    }

    /// General step-two group. `couplings[i][j] = λ_i^{(j)} ≥ 0`; `selected` picks
    /// `h` distinct blocks whose coupling rows must form an invertible matrix.
    pub fn general(couplings: Vec<Vec<f64>>, selected: Vec<usize>) -> Result<Self> {
        let n = couplings.len();
        if n == 0 {
            return Err(Error::InvalidGroup("no horizontal blocks".into()));
        }
        let h = couplings[0].len();
        if h == 0 || couplings.iter().any(|row| row.len() != h) {
            return Err(Error::InvalidGroup("ragged or empty coupling rows".into()));
        }
        if couplings.iter().flatten().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidGroup("couplings must be finite and nonnegative".into()));
        }
        if selected.len() != h {
            return Err(Error::InvalidGroup(format!(
                "need {h} selected blocks, got {}",
                selected.len()
            )));
        }
        let mut seen = selected.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != h || seen.iter().any(|&i| i >= n) {
            return Err(Error::InvalidGroup("selected blocks must be distinct and in range".into()));
        }
        let a = DMatrix::from_fn(h, h, |k, j| couplings[selected[k]][j]);
        let inv = a
            .clone()
            .try_inverse()
            .filter(|inv| inv.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::InvalidGroup("matrix A is not invertible".into()))?;
        // reject numerically singular selections
        if (a.determinant()).abs() < 1e-12 * a.norm().powi(h as i32).max(1e-300) {
            return Err(Error::InvalidGroup("matrix A is numerically singular".into()));
        }
        let a_inverse = Some((0..h).map(|j| (0..h).map(|k| inv[(j, k)]).collect()).collect());
        Ok(Self { couplings, kind: GroupKind::General { selected }, a_inverse })
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    /// Number of horizontal blocks (half the horizontal dimension).
    pub fn n(&self) -> usize {
        self.couplings.len()
    }

    /// Number of vertical directions.
    pub fn h(&self) -> usize {
        self.couplings[0].len()
    }

    pub fn horizontal_dim(&self) -> usize {
        2 * self.n()
    }

    pub fn dim(&self) -> usize {
        self.horizontal_dim() + self.h()
    }

    /// Homogeneous dimension `Q = 2n + 2h`.
    pub fn homogeneous_dimension(&self) -> f64 {
        (2 * self.n() + 2 * self.h()) as f64
    }

    pub fn coupling(&self, block: usize, vertical: usize) -> f64 {
        self.couplings[block][vertical]
    }

    pub fn couplings(&self) -> &[Vec<f64>] {
        &self.couplings
    }

    /// Block eigenvalues for a group with one vertical direction.
    pub fn lambdas(&self) -> Option<Vec<f64>> {
        (self.h() == 1).then(|| self.couplings.iter().map(|r| r[0]).collect())
    }

    /// `(A^{-1})_{jk}` for product and general groups.
    pub fn a_inverse(&self) -> Option<&[Vec<f64>]> {
        self.a_inverse.as_deref()
    }

    pub fn selected_blocks(&self) -> Option<&[usize]> {
        match &self.kind {
            GroupKind::General { selected } => Some(selected),
            _ => None,
        }
    }

    /// True for `H^n`: one vertical direction and every eigenvalue equal to 4.
    pub fn is_heisenberg(&self) -> bool {
        self.h() == 1 && self.couplings.iter().all(|r| r[0] == 4.0)
    }

    pub fn descriptor(&self) -> String {
        match &self.kind {
            GroupKind::Single if self.is_heisenberg() => format!("heisenberg(n={})", self.n()),
            GroupKind::Single => {
                let l: Vec<String> = self.couplings.iter().map(|r| format!("{}", r[0])).collect();
                format!("nonisotropic(lambdas=[{}])", l.join(","))
            }
            GroupKind::HeisenbergProduct { n, factors } => format!("product(n={n},N={factors})"),
            GroupKind::General { selected } => {
                format!("general(n={},h={},selected={:?})", self.n(), self.h(), selected)
            }
        }
    }

    /// `½ (B^{(j)} z)_k`: coefficient of `∂_{t_j}` in `X_k` at horizontal position `z`.
    pub fn vertical_coefficient(&self, z: &[f64], k: usize, j: usize) -> f64 {
        let block = k / 2;
        let lam = self.couplings[block][j];
        if k.is_multiple_of(2) {
            0.5 * lam * z[k + 1]
        } else {
            -0.5 * lam * z[k - 1]
        }
    }

    /// `|z|_B² = Σ_i (λ_i/4)(z_{2i-1}² + z_{2i}²)`, using the first vertical direction.
    pub fn symplectic_norm_sq(&self, z: &[f64]) -> f64 {
        (0..self.n())
            .map(|i| 0.25 * self.couplings[i][0] * (z[2 * i].powi(2) + z[2 * i + 1].powi(2)))
            .sum()
    }

    /// `B^{-1} v` for a single vertical direction: `(1/λ_i) v^⊥` on every block.
    pub fn b_inverse(&self, v: &HVector) -> HVector {
        let mut out = vec![0.0; v.0.len()];
        for i in 0..self.n() {
            let (p, q) = v.block_perp(i);
            let lam = self.couplings[i][0];
            out[2 * i] = p / lam;
            out[2 * i + 1] = q / lam;
        }
        HVector(out)
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        if x.z.len() != self.horizontal_dim() {
            return Err(Error::DimensionMismatch { expected: self.horizontal_dim(), found: x.z.len() });
        }
        if x.t.len() != self.h() {
            return Err(Error::DimensionMismatch { expected: self.h(), found: x.t.len() });
        }
        Ok(())
    }
}

fn identity(n: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n).map(|j| (0..n).map(|k| if j == k { scale } else { 0.0 }).collect()).collect()
}

/// A point `(z, t)` of the group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub z: Vec<f64>,
    pub t: Vec<f64>,
}

impl Point {
    pub fn new(z: Vec<f64>, t: Vec<f64>) -> Self {
        Self { z, t }
    }

    /// Point with a single vertical coordinate.
    pub fn single(z: &[f64], t: f64) -> Self {
        Self { z: z.to_vec(), t: vec![t] }
    }

    pub fn origin(g: &StepTwoGroup) -> Self {
        Self { z: vec![0.0; g.horizontal_dim()], t: vec![0.0; g.h()] }
    }

    /// Splits a flat coordinate vector `[z.., t..]`.
    pub fn from_flat(g: &StepTwoGroup, flat: &[f64]) -> Result<Self> {
        if flat.len() != g.dim() {
            return Err(Error::DimensionMismatch { expected: g.dim(), found: flat.len() });
        }
        let m = g.horizontal_dim();
        Ok(Self { z: flat[..m].to_vec(), t: flat[m..].to_vec() })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.z.iter().chain(self.t.iter()).copied().collect()
    }

    pub fn z_norm_sq(&self) -> f64 {
        self.z.iter().map(|v| v * v).sum()
    }

    pub fn z_norm(&self) -> f64 {
        self.z_norm_sq().sqrt()
    }

    pub fn t_norm_sq(&self) -> f64 {
        self.t.iter().map(|v| v * v).sum()
    }

    /// Euclidean length of the flat coordinate vector.
    pub fn euclidean_norm(&self) -> f64 {
        (self.z_norm_sq() + self.t_norm_sq()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.z.iter().chain(self.t.iter()).all(|v| v.is_finite())
    }

    /// True on the center `L = {z = 0}`.
    pub fn on_center(&self) -> bool {
        self.z.iter().all(|v| *v == 0.0)
    }

    pub fn is_origin(&self) -> bool {
        self.on_center() && self.t.iter().all(|v| *v == 0.0)
    }

    /// `self + s * dir` in flat coordinates.
    pub(crate) fn offset(&self, dir: &Point, s: f64) -> Point {
        Point {
            z: self.z.iter().zip(&dir.z).map(|(a, b)| a + s * b).collect(),
            t: self.t.iter().zip(&dir.t).map(|(a, b)| a + s * b).collect(),
        }
    }
}

/// Components of a horizontal vector in the orthonormal frame `X_1..X_{2n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HVector(pub Vec<f64>);

impl HVector {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &HVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn dot_slice(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Rotation by a quarter turn inside one block: `(v_{2i-1}, v_{2i}) ↦ (-v_{2i}, v_{2i-1})`.
    pub fn block_perp(&self, block: usize) -> (f64, f64) {
        (-self.0[2 * block + 1], self.0[2 * block])
    }
}

/// Euclidean partial derivatives `(∇_z u, ∂_t u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partials {
    pub dz: Vec<f64>,
    pub dt: Vec<f64>,
}

/// A real function on the group, optionally with analytic partial derivatives.
pub trait ScalarField {
    fn value(&self, x: &Point) -> f64;

    fn partials(&self, _x: &Point) -> Result<Partials> {
        Err(Error::NoAnalyticDerivative)
    }
}

impl<F: Fn(&Point) -> f64> ScalarField for F {
    fn value(&self, x: &Point) -> f64 {
        self(x)
    }
}

/// How derivatives are assembled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    Analytic,
    /// Central differences; `None` selects `1e-5 · max(1, |x|)`.
    CentralFd(Option<f64>),
    /// Analytic when the field provides partials, central differences otherwise.
    Auto,
}

pub fn default_step(x: &Point) -> f64 {
    FD_RELATIVE_STEP * x.euclidean_norm().max(1.0)
}

/// Group law `(z, t) ∘ (η, τ) = (z + η, t + τ + ½⟨B z, η⟩)`.
pub fn group_law(g: &StepTwoGroup, x: &Point, y: &Point) -> Result<Point> {
    g.check_point(x)?;
    g.check_point(y)?;
    let z: Vec<f64> = x.z.iter().zip(&y.z).map(|(a, b)| a + b).collect();
    let t = (0..g.h())
        .map(|j| {
            let twisted: f64 = (0..g.horizontal_dim())
                .map(|k| g.vertical_coefficient(&x.z, k, j) * y.z[k])
                .sum();
            x.t[j] + y.t[j] + twisted
        })
        .collect();
    Ok(Point { z, t })
}

pub fn inverse(x: &Point) -> Point {
    Point { z: x.z.iter().map(|v| -v).collect(), t: x.t.iter().map(|v| -v).collect() }
}

/// Dilation `δ_γ(z, t) = (γ z, γ² t)`.
pub fn dilate(g: &StepTwoGroup, gamma: f64, x: &Point) -> Result<Point> {
    g.check_point(x)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", format!("dilation factor must be positive, got {gamma}")));
    }
    Ok(dilate_unchecked(gamma, x))
}

pub(crate) fn dilate_unchecked(gamma: f64, x: &Point) -> Point {
    Point {
        z: x.z.iter().map(|v| gamma * v).collect(),
        t: x.t.iter().map(|v| gamma * gamma * v).collect(),
    }
}

/// Flat direction of the frame field `X_k` at `x`.
pub fn frame_direction(g: &StepTwoGroup, x: &Point, k: usize) -> Point {
    let mut z = vec![0.0; g.horizontal_dim()];
    z[k] = 1.0;
    let t = (0..g.h()).map(|j| g.vertical_coefficient(&x.z, k, j)).collect();
    Point { z, t }
}

/// `X_k u(x)` from Euclidean partials.
pub fn frame_from_partials(g: &StepTwoGroup, x: &Point, p: &Partials) -> HVector {
    HVector(
        (0..g.horizontal_dim())
            .map(|k| {
                p.dz[k] + (0..g.h()).map(|j| g.vertical_coefficient(&x.z, k, j) * p.dt[j]).sum::<f64>()
            })
            .collect(),
    )
}

/// Central difference of `u` along `dir` at `x`.
pub fn directional_fd<U: ScalarField + ?Sized>(u: &U, x: &Point, dir: &Point, step: f64) -> f64 {
    (u.value(&x.offset(dir, step)) - u.value(&x.offset(dir, -step))) / (2.0 * step)
}

fn resolve_step(step: Option<f64>, x: &Point) -> Result<f64> {
    match step {
        None => Ok(default_step(x)),
        Some(h) if h > 0.0 && h.is_finite() => Ok(h),
        Some(h) => Err(Error::param("step", format!("finite-difference step must be positive, got {h}"))),
    }
}

/// Horizontal gradient `∇_G u = (X_1 u, …, X_{2n} u)`.
pub fn horizontal_gradient<U: ScalarField + ?Sized>(
    g: &StepTwoGroup,
    u: &U,
    x: &Point,
    scheme: Scheme,
) -> Result<HVector> {
    g.check_point(x)?;
    let fd = |step: Option<f64>| -> Result<HVector> {
        let h = resolve_step(step, x)?;
        Ok(HVector(
            (0..g.horizontal_dim())
                .map(|k| directional_fd(u, x, &frame_direction(g, x, k), h))
                .collect(),
        ))
    };
    match scheme {
        Scheme::Analytic => Ok(frame_from_partials(g, x, &u.partials(x)?)),
        Scheme::CentralFd(step) => fd(step),
        Scheme::Auto => match u.partials(x) {
            Ok(p) => Ok(frame_from_partials(g, x, &p)),
            Err(Error::NoAnalyticDerivative) => fd(None),
            Err(e) => Err(e),
        },
    }
}

/// Vertical derivatives `∂_{t_j} u`.
pub fn vertical_derivative<U: ScalarField + ?Sized>(
    g: &StepTwoGroup,
    u: &U,
    x: &Point,
    scheme: Scheme,
) -> Result<Vec<f64>> {
    g.check_point(x)?;
    let fd = |step: Option<f64>| -> Result<Vec<f64>> {
        let h = resolve_step(step, x)?;
        Ok((0..g.h())
            .map(|j| {
                let mut dir = Point::origin(g);
                dir.t[j] = 1.0;
                directional_fd(u, x, &dir, h)
            })
            .collect())
    };
    match scheme {
        Scheme::Analytic => Ok(u.partials(x)?.dt),
        Scheme::CentralFd(step) => fd(step),
        Scheme::Auto => match u.partials(x) {
            Ok(p) => Ok(p.dt),
            Err(Error::NoAnalyticDerivative) => fd(None),
            Err(e) => Err(e),
        },
    }
}

/// Euler field `E u = ⟨z, ∇_z u⟩ + 2 ⟨t, ∂_t u⟩`, the generator of dilations.
pub fn euler_apply<U: ScalarField + ?Sized>(g: &StepTwoGroup, u: &U, x: &Point) -> Result<f64> {
    euler_apply_with(g, u, x, Scheme::Auto)
}

pub fn euler_apply_with<U: ScalarField + ?Sized>(
    g: &StepTwoGroup,
    u: &U,
    x: &Point,
    scheme: Scheme,
) -> Result<f64> {
    g.check_point(x)?;
    let fd = |step: Option<f64>| -> Result<f64> {
        // E u(x) = d/ds u(δ_{e^s} x) at s = 0
        let h = resolve_step(step, x)? / x.euclidean_norm().max(1.0);
        let plus = u.value(&dilate_unchecked(h.exp(), x));
        let minus = u.value(&dilate_unchecked((-h).exp(), x));
        Ok((plus - minus) / (2.0 * h))
    };
    let from_partials = |p: Partials| -> f64 {
        let radial: f64 = x.z.iter().zip(&p.dz).map(|(a, b)| a * b).sum();
        let vertical: f64 = x.t.iter().zip(&p.dt).map(|(a, b)| a * b).sum();
        radial + 2.0 * vertical
    };
    match scheme {
        Scheme::Analytic => Ok(from_partials(u.partials(x)?)),
        Scheme::CentralFd(step) => fd(step),
        Scheme::Auto => match u.partials(x) {
            Ok(p) => Ok(from_partials(p)),
            Err(Error::NoAnalyticDerivative) => fd(None),
            Err(e) => Err(e),
        },
    }
}

/// Horizontal divergence `Σ_k X_k(V_k)(x)` by central differences.
pub fn horizontal_divergence<V>(g: &StepTwoGroup, field: V, x: &Point, step: Option<f64>) -> Result<f64>
where
    V: Fn(&Point) -> HVector,
{
    g.check_point(x)?;
    let h = resolve_step(step, x)?;
    let mut div = 0.0;
    for k in 0..g.horizontal_dim() {
        let dir = frame_direction(g, x, k);
        let plus = field(&x.offset(&dir, h)).0[k];
        let minus = field(&x.offset(&dir, -h)).0[k];
        div += (plus - minus) / (2.0 * h);
    }
    Ok(div)
}

/// `(X_{2i} X_{2i-1} − X_{2i-1} X_{2i}) u(x)` for block `i`, by nested central differences.
pub fn commutator_apply<U: ScalarField + ?Sized>(
    g: &StepTwoGroup,
    u: &U,
    x: &Point,
    block: usize,
    step: f64,
) -> Result<f64> {
    g.check_point(x)?;
    if block >= g.n() {
        return Err(Error::param("block", format!("block {block} out of range")));
    }
    let (odd, even) = (2 * block, 2 * block + 1);
    let apply = |k: usize, y: &Point| directional_fd(u, y, &frame_direction(g, y, k), step);
    let outer = |outer_k: usize, inner_k: usize| {
        let dir = frame_direction(g, x, outer_k);
        (apply(inner_k, &x.offset(&dir, step)) - apply(inner_k, &x.offset(&dir, -step))) / (2.0 * step)
    };
    Ok(outer(even, odd) - outer(odd, even))
}

/// Smallest eigenvalue of `(−B²)^{1/2}`, i.e. `min_i λ_i` for one vertical direction.
pub fn lambda_min(g: &StepTwoGroup) -> Result<f64> {
    let lambdas = g
        .lambdas()
        .ok_or_else(|| Error::InvalidGroup("lambda_min needs a single vertical direction".into()))?;
    lambdas
        .into_iter()
        .reduce(f64::min)
        .ok_or_else(|| Error::InvalidGroup("empty eigenvalue list".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h1() -> StepTwoGroup {
        StepTwoGroup::heisenberg(1).unwrap()
    }

    #[test]
    fn identity_element() {
        let g = h1();
        let y = Point::single(&[1.0, 2.0], 3.0);
        assert_eq!(group_law(&g, &Point::origin(&g), &y).unwrap(), y);
    }

    #[test]
    fn group_law_twist_follows_block_matrix() {
        let g = h1();
        let x = Point::single(&[1.0, 0.0], 0.0);
        let y = Point::single(&[0.0, 1.0], 0.0);
        // ½⟨Bz, η⟩ = ½ (λ z₂ η₁ − λ z₁ η₂) = −2
        let xy = group_law(&g, &x, &y).unwrap();
        assert_eq!(xy, Point::single(&[1.0, 1.0], -2.0));
    }

    #[test]
    fn inverse_cancels() {
        let g = StepTwoGroup::single(&[1.0, 3.0]).unwrap();
        let x = Point::single(&[0.3, -1.2, 2.0, 0.7], 1.5);
        let e = group_law(&g, &x, &inverse(&x)).unwrap();
        assert!(e.is_origin());
    }

    #[test]
    fn dilation_cases() {
        let g = h1();
        let x = Point::single(&[1.0, 0.0], 1.0);
        assert_eq!(dilate(&g, 1.0, &x).unwrap(), x);
        assert_eq!(dilate(&g, 2.0, &x).unwrap(), Point::single(&[2.0, 0.0], 4.0));
        let a = dilate(&g, 3.0, &dilate(&g, 0.5, &x).unwrap()).unwrap();
        let b = dilate(&g, 1.5, &x).unwrap();
        assert_eq!(a, b);
        assert!(matches!(dilate(&g, 0.0, &x), Err(Error::InvalidParameter { .. })));
        assert!(matches!(dilate(&g, -1.0, &x), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = h1();
        let bad = Point::single(&[1.0, 0.0, 0.0], 0.0);
        assert!(matches!(
            group_law(&g, &bad, &Point::origin(&g)),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn gradient_of_coordinate_functions() {
        let g = StepTwoGroup::single(&[1.0, 2.0]).unwrap();
        let x = Point::single(&[0.4, -0.3, 1.1, 0.2], 0.9);
        let t = |p: &Point| p.t[0];
        let grad = horizontal_gradient(&g, &t, &x, Scheme::CentralFd(None)).unwrap();
        let expected = [0.5 * 1.0 * -0.3, -0.5 * 1.0 * 0.4, 0.5 * 2.0 * 0.2, -0.5 * 2.0 * 1.1];
        for (a, b) in grad.0.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
        }
        let z1 = |p: &Point| p.z[0];
        let grad = horizontal_gradient(&g, &z1, &x, Scheme::CentralFd(None)).unwrap();
        for (k, v) in grad.0.iter().enumerate() {
            assert_abs_diff_eq!(*v, if k == 0 { 1.0 } else { 0.0 }, epsilon = 1e-9);
        }
    }

    #[test]
    fn analytic_scheme_requires_partials() {
        let g = h1();
        let u = |p: &Point| p.z[0];
        let x = Point::single(&[1.0, 0.0], 0.0);
        assert!(matches!(
            horizontal_gradient(&g, &u, &x, Scheme::Analytic),
            Err(Error::NoAnalyticDerivative)
        ));
        assert!(matches!(
            horizontal_gradient(&g, &u, &x, Scheme::CentralFd(Some(-1.0))),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn euler_on_simple_fields() {
        let g = h1();
        let x = Point::single(&[0.7, -1.3], 0.4);
        let t = |p: &Point| p.t[0];
        assert_abs_diff_eq!(euler_apply(&g, &t, &x).unwrap(), 2.0 * 0.4, epsilon = 1e-8);
        let r2 = |p: &Point| p.z_norm_sq();
        assert_abs_diff_eq!(euler_apply(&g, &r2, &x).unwrap(), 2.0 * x.z_norm_sq(), epsilon = 1e-8);
    }

    #[test]
    fn divergence_of_identity_and_constant_fields() {
        let g = StepTwoGroup::single(&[1.0, 2.0]).unwrap();
        let x = Point::single(&[0.4, -0.3, 1.1, 0.2], 0.9);
        let id = |p: &Point| HVector(p.z.clone());
        assert_abs_diff_eq!(horizontal_divergence(&g, id, &x, None).unwrap(), 4.0, epsilon = 1e-8);
        let c = |_: &Point| HVector(vec![1.0, -2.0, 3.0, 0.5]);
        assert_abs_diff_eq!(horizontal_divergence(&g, c, &x, None).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lambda_min_cases() {
        assert_eq!(lambda_min(&StepTwoGroup::single(&[4.0, 4.0]).unwrap()).unwrap(), 4.0);
        assert_eq!(lambda_min(&StepTwoGroup::single(&[1.0, 2.0]).unwrap()).unwrap(), 1.0);
        assert_eq!(lambda_min(&StepTwoGroup::single(&[0.5, 1.0]).unwrap()).unwrap(), 0.5);
        assert!(StepTwoGroup::single(&[]).is_err());
        assert!(StepTwoGroup::single(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn homogeneous_dimensions() {
        assert_eq!(StepTwoGroup::heisenberg(1).unwrap().homogeneous_dimension(), 4.0);
        assert_eq!(StepTwoGroup::heisenberg_product(1, 2).unwrap().homogeneous_dimension(), 8.0);
        let g = StepTwoGroup::general(vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]], vec![0, 1])
            .unwrap();
        assert_eq!(g.homogeneous_dimension(), 10.0);
        assert!(StepTwoGroup::general(vec![vec![1.0, 1.0], vec![2.0, 2.0]], vec![0, 1]).is_err());
    }
}
