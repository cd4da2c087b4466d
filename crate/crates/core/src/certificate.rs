//! Pass/fail records for numerically checked inequalities `lhs <= rhs`.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// A hypothesis (typically positive curvature) does not hold, so the
    /// inequality makes no claim.
    Skipped,
}

/// Outcome of checking `lhs <= rhs + tolerance` over a family of instances.
///
/// `lhs`, `rhs` and `margin = rhs - lhs` describe the worst instance (the
/// one with the smallest margin); `witness` identifies it.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCertificate {
    pub name: String,
    pub hypotheses: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub status: Status,
    pub checked: usize,
    pub violations: usize,
    pub witness: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip)]
    margins: Vec<f64>,
}

impl InequalityCertificate {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        InequalityCertificate {
            name: name.into(),
            hypotheses: BTreeMap::new(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::INFINITY,
            tolerance,
            pass: true,
            status: Status::Pass,
            checked: 0,
            violations: 0,
            witness: Value::Null,
            note: None,
            margins: Vec::new(),
        }
    }

    /// Certificate for an inequality whose hypothesis failed.
    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut c = Self::new(name, 0.0);
        c.status = Status::Skipped;
        c.margin = f64::NAN;
        c.note = Some(reason.into());
        c
    }

    pub fn with_hypothesis(mut self, key: &str, value: f64) -> Self {
        self.hypotheses.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Records one instance. The witness closure only runs when the
    /// instance becomes the new worst case.
    pub fn observe(&mut self, lhs: f64, rhs: f64, witness: impl FnOnce() -> Value) {
        self.checked += 1;
        let margin = rhs - lhs;
        self.margins.push(margin);
        let ok = margin >= -self.tolerance;
        if !ok || margin.is_nan() {
            self.violations += 1;
            self.pass = false;
            self.status = Status::Fail;
        }
        if margin < self.margin || margin.is_nan() || self.checked == 1 {
            self.lhs = lhs;
            self.rhs = rhs;
            self.margin = margin;
            self.witness = witness();
        }
    }

    /// Folds another certificate for the same inequality into this one.
    pub fn merge(&mut self, other: InequalityCertificate) {
        if other.status == Status::Skipped {
            return;
        }
        self.checked += other.checked;
        self.violations += other.violations;
        self.margins.extend(other.margins);
        if !other.pass {
            self.pass = false;
            self.status = Status::Fail;
        }
        if other.margin < self.margin {
            self.lhs = other.lhs;
            self.rhs = other.rhs;
            self.margin = other.margin;
            self.witness = other.witness;
        }
    }

    /// Re-evaluates every recorded instance against a new tolerance.
    pub fn retolerate(&mut self, tolerance: f64) {
        if self.is_skipped() {
            return;
        }
        self.tolerance = tolerance;
        self.violations = self
            .margins
            .iter()
            .filter(|m| !(**m >= -tolerance))
            .count();
        self.pass = self.violations == 0;
        self.status = if self.pass { Status::Pass } else { Status::Fail };
    }

    pub fn is_skipped(&self) -> bool {
        self.status == Status::Skipped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tracks_worst_instance() {
        let mut c = InequalityCertificate::new("demo", 1e-9);
        c.observe(1.0, 2.0, || json!(0));
        c.observe(1.0, 1.5, || json!(1));
        c.observe(0.0, 3.0, || json!(2));
        assert!(c.pass);
        assert_eq!(c.checked, 3);
        assert_eq!(c.margin, 0.5);
        assert_eq!(c.witness, json!(1));
        c.observe(1.0 + 1e-10, 1.0, || json!(3));
        assert!(c.pass, "within tolerance");
        c.observe(2.0, 1.0, || json!(4));
        assert!(!c.pass);
        assert_eq!(c.violations, 1);
        assert_eq!(c.status, Status::Fail);
        assert_eq!(c.witness, json!(4));
    }

    #[test]
    fn merge_keeps_worst() {
        let mut a = InequalityCertificate::new("demo", 0.0);
        a.observe(0.0, 1.0, || json!("a"));
        let mut b = InequalityCertificate::new("demo", 0.0);
        b.observe(0.0, 0.25, || json!("b"));
        a.merge(b);
        assert_eq!(a.checked, 2);
        assert_eq!(a.witness, json!("b"));
        a.merge(InequalityCertificate::skipped("demo", "n/a"));
        assert_eq!(a.checked, 2);
    }

    #[test]
    fn retolerate_recounts() {
        let mut c = InequalityCertificate::new("demo", 0.0);
        c.observe(1.1, 1.0, || json!(0));
        c.observe(1.3, 1.0, || json!(1));
        assert_eq!(c.violations, 2);
        c.retolerate(0.2);
        assert_eq!(c.violations, 1);
        c.retolerate(0.5);
        assert!(c.pass);
        assert_eq!(c.status, Status::Pass);
    }
}
