//! JSON report records, one per line on stdout.

use fht::tensor::{SymmetryReport, SYMMETRY_RELATIONS};
use serde::Serialize;
use serde_json::{json, Map, Value};

pub fn emit(record: &Value) {
    println!("{record}");
}

/// JSON has no NaN or infinity.
pub fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

#[derive(Serialize)]
pub struct SymmetryRecord {
    pub ok: bool,
    pub tolerance: f64,
    pub max_defect: f64,
    pub defects: Map<String, Value>,
}

impl From<&SymmetryReport> for SymmetryRecord {
    fn from(r: &SymmetryReport) -> Self {
        let defects = SYMMETRY_RELATIONS
            .iter()
            .zip(r.defects)
            .map(|(name, d)| (name.to_string(), json!(d)))
            .collect();
        Self {
            ok: r.ok,
            tolerance: r.tolerance,
            max_defect: r.max_defect(),
            defects,
        }
    }
}

/// Signed min/max and the quartiles of `|w|` (linear interpolation).
pub fn weight_summary(weights: &[f64]) -> Value {
    if weights.is_empty() {
        return json!({ "min": null, "max": null, "abs_quartiles": null });
    }
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut abs: Vec<f64> = weights.iter().map(|w| w.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let quantile = |q: f64| {
        let pos = q * (abs.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        abs[lo] + (abs[hi] - abs[lo]) * (pos - lo as f64)
    };
    let quartiles = [0.0, 0.25, 0.5, 0.75, 1.0].map(quantile);
    json!({ "min": min, "max": max, "abs_quartiles": quartiles })
}
