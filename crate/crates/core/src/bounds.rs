//! Lower bounds for the unweighted Hardy constant
//! `c(d,p,θ) = sup { c ≥ 0 : ∫|∇_G u|^p / d^{p(θ−1)} ≥ c ∫|u|^p / d^{pθ} }`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{lambda_min, GroupKind, StepTwoGroup};
use crate::norms::NormKind;
use crate::zfield::{sup_z_norm_with, Metric, SupOptions, SupResult, ZFieldSpec, ZVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `|(Q−pθ)/p|^p / sup|Z_d|^p` with a numerically computed supremum.
    Generic,
    KoranyiFirst,
    KoranyiSecond,
    CcClosed,
    CcFallback,
    Product,
}

/// `|(Q−pθ)/p|^p`, the constant of the projected inequality.
pub fn projected_constant(q: f64, p: f64, theta: f64) -> f64 {
    ((q - p * theta) / p).abs().powf(p)
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 2.0) {
        return Err(Error::param("Q", format!("homogeneous dimension must exceed 2, got {q}")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::param("p", format!("need p ≥ 2, got {p}")));
    }
    Ok(())
}

/// `|(Q−pθ)/p|^p / sup_z^p`.
pub fn bound_generic(sup_z: f64, q: f64, p: f64, theta: f64) -> Result<f64> {
    check_p(p)?;
    if !(sup_z > 0.0 && sup_z.is_finite()) {
        return Err(Error::param("sup_z", format!("supremum must be positive, got {sup_z}")));
    }
    Ok(projected_constant(q, p, theta) / sup_z.powf(p))
}

/// Endpoints `(1 ∓ √(3/2)) Q` of the first Korányi branch.
pub fn koranyi_branch_interval(q: f64) -> (f64, f64) {
    let r = 1.5_f64.sqrt();
    ((1.0 - r) * q, (1.0 + r) * q)
}

/// Closed-form bound for the Korányi gauge on `H^n`.
pub fn bound_koranyi(q: f64, p: f64, theta: f64) -> Result<(f64, Branch)> {
    check_q(q)?;
    check_p(p)?;
    let pt = p * theta;
    let (lo, hi) = koranyi_branch_interval(q);
    if (lo..=hi).contains(&pt) {
        let value = projected_constant(q, p, theta) * ((q - 2.0) / q).abs().powf(p);
        return Ok((value, Branch::KoranyiFirst));
    }
    let radicand = 3.0 * pt * (pt - 2.0 * q);
    if !(radicand > 0.0) {
        return Err(Error::Hypothesis(format!(
            "second Korányi branch needs pθ(pθ−2Q) > 0, got {}",
            radicand / 3.0
        )));
    }
    let value = 1.5_f64.powf(p / 2.0) * radicand.powf(p / 4.0) / (pt - q).abs().powf(p / 2.0)
        * ((q - 2.0) / p).abs().powf(p);
    Ok((value, Branch::KoranyiSecond))
}

/// `Q ≥ 4pθ / (12 − π²)` with `θ ≥ 0`: the condition under which `g` peaks at `ν = 0`.
pub fn cc_closed_condition(q: f64, p: f64, theta: f64) -> bool {
    theta >= 0.0 && q >= 4.0 * p * theta / (12.0 - PI * PI)
}

/// Bound for the Carnot–Carathéodory distance; `g_sup` is `sup g` and is only read
/// when the closed branch does not apply.
pub fn bound_cc(q: f64, p: f64, theta: f64, g_sup: Option<f64>) -> Result<(f64, Branch)> {
    check_q(q)?;
    check_p(p)?;
    if cc_closed_condition(q, p, theta) {
        let value = ((q - 2.0) / q).powf(p) * projected_constant(q, p, theta);
        return Ok((value, Branch::CcClosed));
    }
    match g_sup {
        Some(gs) if gs > 0.0 && gs.is_finite() => {
            Ok((projected_constant(q, p, theta) / gs.powf(p / 2.0), Branch::CcFallback))
        }
        other => Err(Error::param("g_sup", format!("fallback branch needs sup g > 0, got {other:?}"))),
    }
}

/// Bound for `ρ_B` on a group with one vertical direction.
pub fn bound_koranyi_b(g: &StepTwoGroup, p: f64, theta: f64) -> Result<(f64, Branch)> {
    let lmin = lambda_min(g)?;
    let (base, branch) = bound_koranyi(g.homogeneous_dimension(), p, theta)?;
    Ok(((lmin / 4.0).powf(p / 2.0) * base, branch))
}

/// `n ≥ (pθ − 4)/4` with `θ ≥ 0`.
pub fn product_hypothesis(n: usize, p: f64, theta: f64) -> bool {
    theta >= 0.0 && n as f64 >= (p * theta - 4.0) / 4.0
}

/// Bound for the Korányi gauge on `(H^n)^N`.
pub fn bound_product(n: usize, factors: usize, p: f64, theta: f64) -> Result<f64> {
    check_p(p)?;
    if n == 0 || factors == 0 {
        return Err(Error::param("n", "n and N must be at least 1"));
    }
    if !product_hypothesis(n, p, theta) {
        return Err(Error::Hypothesis(format!("need θ ≥ 0 and n ≥ (pθ−4)/4; got n={n}, pθ={}", p * theta)));
    }
    let q = (2 * factors * (n + 1)) as f64;
    let nf = n as f64;
    Ok((nf / (nf + 1.0)).powf(p) * projected_constant(q, p, theta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub group: String,
    pub norm: NormKind,
    pub p: f64,
    pub theta: f64,
    pub q: f64,
    pub sup_z: SupResult,
    pub bound: f64,
    pub branch: Branch,
    pub condition_checks: BTreeMap<String, bool>,
    /// The bound `|(Q−pθ)/p|^p / sup^p` from the computed supremum, for comparison.
    pub generic_bound: f64,
    /// Known strict upper bound `(Q−2)²/4` of the constant, recorded for `p = 2, θ = 1`.
    pub upper_remark: Option<f64>,
}

/// Full bound computation for one `(group, gauge, p, θ)`.
pub fn bound_report(spec: &ZFieldSpec, opts: &SupOptions) -> Result<BoundReport> {
    let g = spec.group();
    let q = spec.q();
    let (p, theta) = (spec.p, spec.theta);
    let sup = sup_z_norm_with(spec, opts)?;
    let mut checks = BTreeMap::new();
    checks.insert("p_at_least_2".to_string(), p >= 2.0);
    checks.insert("degenerate_p_theta_equals_q".to_string(), p * theta == q);

    // length of Z in the frame metric; ρ_B maximizes |Z|_B, which dominates |Z| / √(4/λ_min)
    let frame_sup = match sup.metric {
        Metric::Euclidean => sup.sup_value,
        Metric::Symplectic => sup.sup_value * (4.0 / lambda_min(g)?).sqrt(),
    };
    let generic_bound = bound_generic(frame_sup, q, p, theta)?;

    let (bound, branch) = match (spec.norm.kind(), spec.variant) {
        (NormKind::Koranyi, ZVariant::Single) if g.is_heisenberg() => {
            let (lo, hi) = koranyi_branch_interval(q);
            checks.insert("koranyi_first_branch_interval".to_string(), (lo..=hi).contains(&(p * theta)));
            bound_koranyi(q, p, theta)?
        }
        (NormKind::KoranyiB, ZVariant::Single) => bound_koranyi_b(g, p, theta)?,
        (NormKind::Cc, ZVariant::Single) => {
            checks.insert("cc_closed_condition".to_string(), cc_closed_condition(q, p, theta));
            bound_cc(q, p, theta, Some(sup.sup_squared))?
        }
        (NormKind::Koranyi, ZVariant::Product) => {
            let GroupKind::HeisenbergProduct { n, factors } = *g.kind() else {
                unreachable!("variant checked at construction")
            };
            let holds = product_hypothesis(n, p, theta);
            checks.insert("product_hypothesis".to_string(), holds);
            if holds {
                (bound_product(n, factors, p, theta)?, Branch::Product)
            } else {
                (generic_bound, Branch::Generic)
            }
        }
        _ => (generic_bound, Branch::Generic),
    };
    let upper_remark = (p == 2.0 && theta == 1.0 && spec.variant == ZVariant::Single).then(|| (q - 2.0).powi(2) / 4.0);
    Ok(BoundReport {
        group: g.descriptor(),
        norm: spec.norm.kind(),
        p,
        theta,
        q,
        sup_z: sup,
        bound,
        branch,
        condition_checks: checks,
        generic_bound,
        upper_remark,
    })
}
