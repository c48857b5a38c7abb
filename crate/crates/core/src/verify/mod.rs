//! Numerical checks of the integral identities, the Hardy inequalities and the extremal
//! behaviour of the fields.

mod hardy;
mod identities;
mod integrate;
mod scans;
pub mod testfn;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use hardy::{
    extremal_residual, hardy_check, hardy_quotient, sharpness_sequence, Quotient, SharpnessPoint, SharpnessReport,
};
pub use identities::{
    chart_equivalence_check, check_ibp_identity, check_w_identity, commutator_check, dilation_check,
    euler_adjoint_check, divergence_identities_check, w_weight_sq,
};
pub use integrate::{axis_rule, integrate, integrate_many, phi_polar_point, Chart, QuadEstimate, QuadMethod, QuadratureSpec};
pub use scans::{counterexample_control_scan, counterexample_scan, product_check, product_formula_sq, ScanOptions};
pub use testfn::{Bump, Cutoff, Extremal, Plateau, SharpnessFunction};

/// Outcome of one check: the computed quantities, the tolerance and whether it was met.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub values: BTreeMap<String, f64>,
    pub bound: Option<f64>,
    pub passed: bool,
    pub tolerance: f64,
    pub diagnostics: BTreeMap<String, Value>,
}

impl Report {
    pub fn new(check: impl Into<String>, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            values: BTreeMap::new(),
            bound: None,
            passed: false,
            tolerance,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn value(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_owned(), v);
        self
    }

    pub fn diagnostic(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.diagnostics.insert(key.to_owned(), v.into());
        self
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn verdict(mut self, passed: bool) -> Self {
        self.passed = passed;
        self
    }
}

/// `|a − b| / |b|`, falling back to the absolute difference when `b` vanishes.
pub(crate) fn relative_gap(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        (a - b).abs()
    } else {
        (a - b).abs() / b.abs()
    }
}
