//! Refinement traces, verdicts and structured text records.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative slack allowed when deciding that a sequence has stopped growing.
pub const BOUNDED_SLACK: f64 = 0.05;
/// Growth factor per refinement that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Diverging,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Bounded => "bounded",
            Verdict::Diverging => "diverging",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Classify a refinement trace of suprema.
///
/// Bounded: the last value is finite and at most 5% above the previous one.
/// Diverging: the trace is increasing and the last step grew by more than 2×
/// (or the last value is infinite).
pub fn classify(trace: &[f64]) -> Verdict {
    let n = trace.len();
    if n < 2 {
        return Verdict::Inconclusive;
    }
    let (prev, last) = (trace[n - 2], trace[n - 1]);
    if last.is_infinite() || last.is_nan() && prev.is_finite() {
        return Verdict::Diverging;
    }
    if !last.is_finite() || !prev.is_finite() {
        return Verdict::Inconclusive;
    }
    let increasing = trace.windows(2).all(|w| w[1] >= w[0]);
    if increasing && last > DIVERGENCE_FACTOR * prev && prev > 0.0 {
        return Verdict::Diverging;
    }
    if last <= (1.0 + BOUNDED_SLACK) * prev || (prev == 0.0 && last == 0.0) {
        return Verdict::Bounded;
    }
    Verdict::Inconclusive
}

/// Outcome of a numerical check of an analytic estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub quantity: String,
    pub grid: String,
    /// Supremum over the grid at each refinement level.
    pub trace: Vec<f64>,
    /// Fitted constants, e.g. `("C", 1.7)`.
    pub constants: Vec<(String, f64)>,
    pub verdict: Verdict,
}

impl EstimateReport {
    pub fn new(quantity: impl Into<String>, grid: impl Into<String>, trace: Vec<f64>) -> Self {
        let verdict = classify(&trace);
        Self {
            quantity: quantity.into(),
            grid: grid.into(),
            trace,
            constants: Vec::new(),
            verdict,
        }
    }

    pub fn with_constant(mut self, name: impl Into<String>, value: f64) -> Self {
        self.constants.push((name.into(), value));
        self
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Last entry of the trace.
    pub fn sup(&self) -> f64 {
        self.trace.last().copied().unwrap_or(f64::NAN)
    }

    /// `key = value` lines.
    pub fn to_record(&self) -> String {
        let mut s = format!("quantity = {}\ngrid = {}\n", self.quantity, self.grid);
        for (i, v) in self.trace.iter().enumerate() {
            s.push_str(&format!("level.{i}.sup = {v:.12e}\n"));
        }
        for (n, v) in &self.constants {
            s.push_str(&format!("constant.{n} = {v:.12e}\n"));
        }
        s.push_str(&format!("verdict = {}\n", self.verdict));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(classify(&[1.0, 1.02, 1.03]), Verdict::Bounded);
        assert_eq!(classify(&[1.0, 0.5]), Verdict::Bounded);
        assert_eq!(classify(&[1.0, 3.0, 9.0]), Verdict::Diverging);
        assert_eq!(classify(&[1.0, 1.5, 1.8]), Verdict::Inconclusive);
        assert_eq!(classify(&[1.0]), Verdict::Inconclusive);
        assert_eq!(classify(&[1.0, f64::INFINITY]), Verdict::Diverging);
    }

    #[test]
    fn record_lists_levels_and_verdict() {
        let r = EstimateReport::new("q", "g", vec![2.0, 2.0]).with_constant("C", 2.0);
        let rec = r.to_record();
        assert!(rec.contains("level.1.sup"));
        assert!(rec.contains("constant.C"));
        assert!(rec.ends_with("verdict = bounded\n"));
    }
}
