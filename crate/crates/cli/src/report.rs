//! Machine-readable job reports and their Markdown rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// A precondition failed and no outcome was expected.
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Exact,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessCoord {
    pub coord: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub name: String,
    /// Largest magnitude seen; `None` when it was not finite.
    pub max_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<WitnessCoord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ResidualSummary {
    pub fn new(name: impl Into<String>, max_abs: f64) -> Self {
        ResidualSummary {
            name: name.into(),
            max_abs: finite(max_abs),
            witness: Vec::new(),
            detail: None,
        }
    }

    pub fn with_witness<S: ToString>(mut self, w: impl IntoIterator<Item = (S, f64)>) -> Self {
        self.witness = w
            .into_iter()
            .filter(|(_, v)| v.is_finite())
            .map(|(c, v)| WitnessCoord {
                coord: c.to_string(),
                value: v,
            })
            .collect();
        self
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        let d = d.into();
        self.detail = (!d.is_empty()).then_some(d);
        self
    }
}

pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub verdict: Verdict,
    /// Expected outcome (`true` = pass); `None` for skipped checks.
    pub expected: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Confidence>,
    /// Scalar result, e.g. a Chern number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default)]
    pub residuals: Vec<ResidualSummary>,
    pub elapsed_ms: f64,
}

impl CheckReport {
    /// Whether the outcome agrees with the expectation. Skipped checks agree.
    pub fn as_expected(&self) -> bool {
        match (self.verdict, self.expected) {
            (Verdict::Skipped, _) | (_, None) => true,
            (v, Some(e)) => (v == Verdict::Pass) == e,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the config file, or of the canonical fixture reference.
    pub input_digest: String,
    pub input: String,
    pub seed: u64,
    pub checks: Vec<CheckReport>,
}

impl Report {
    pub fn all_as_expected(&self) -> bool {
        self.checks.iter().all(CheckReport::as_expected)
    }

    /// Process exit status: 0 when every outcome matches its expectation.
    pub fn exit_code(&self) -> i32 {
        if self.all_as_expected() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} {} report\n", self.tool, self.version);
        let _ = writeln!(s, "- input: `{}`", self.input);
        let _ = writeln!(s, "- digest: `{}`", self.input_digest);
        let _ = writeln!(s, "- seed: {}", self.seed);
        let status = if self.all_as_expected() { "all as expected" } else { "unexpected outcomes" };
        let _ = writeln!(s, "- status: {status}\n");
        let _ = writeln!(s, "| check | verdict | expected | confidence | max residual | time (ms) |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for c in &self.checks {
            let expected = match c.expected {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "-",
            };
            let max = c
                .residuals
                .iter()
                .map(|r| r.max_abs.unwrap_or(f64::INFINITY))
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
            let max = max.map_or("-".to_string(), |m| format!("{m:.3e}"));
            let conf = c.confidence.map_or("-", |c| match c {
                Confidence::Exact => "exact",
                Confidence::Numeric => "numeric",
            });
            let verdict = match c.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
                Verdict::Skipped => "skipped",
            };
            let mark = if c.as_expected() { "" } else { " ✗" };
            let _ = writeln!(
                s,
                "| {} | {verdict}{mark} | {expected} | {conf} | {max} | {:.1} |",
                c.name, c.elapsed_ms
            );
        }
        let details: Vec<&CheckReport> = self
            .checks
            .iter()
            .filter(|c| c.value.is_some() || c.residuals.iter().any(|r| r.detail.is_some() || !r.witness.is_empty()))
            .collect();
        if !details.is_empty() {
            let _ = writeln!(s, "\n## Details\n");
        }
        for c in details {
            let _ = writeln!(s, "### {}\n", c.name);
            if let Some(v) = c.value {
                let _ = writeln!(s, "- value: {v}");
            }
            for r in &c.residuals {
                let max = r.max_abs.map_or("non-finite".to_string(), |m| format!("{m:.3e}"));
                let _ = write!(s, "- {}: {max}", r.name);
                if !r.witness.is_empty() {
                    let w: Vec<String> = r.witness.iter().map(|w| format!("{}={}", w.coord, w.value)).collect();
                    let _ = write!(s, " at ({})", w.join(", "));
                }
                if let Some(d) = &r.detail {
                    let _ = write!(s, "; {d}");
                }
                let _ = writeln!(s);
            }
            let _ = writeln!(s);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn verdict() -> impl Strategy<Value = Verdict> {
        prop_oneof![Just(Verdict::Pass), Just(Verdict::Fail), Just(Verdict::Skipped)]
    }

    fn summary() -> impl Strategy<Value = ResidualSummary> {
        (
            "[a-z_]{1,8}",
            prop::option::of(any::<f64>().prop_filter("finite", |x| x.is_finite())),
            prop::collection::vec(("[a-z][a-z0-9]{0,3}", any::<f64>().prop_filter("finite", |x| x.is_finite())), 0..3),
            prop::option::of(".{0,12}"),
        )
            .prop_map(|(name, max_abs, w, detail)| ResidualSummary {
                name,
                max_abs,
                witness: w.into_iter().map(|(coord, value)| WitnessCoord { coord, value }).collect(),
                detail,
            })
    }

    fn check() -> impl Strategy<Value = CheckReport> {
        (
            "[a-z.]{1,12}",
            verdict(),
            prop::option::of(any::<bool>()),
            prop::option::of(prop_oneof![Just(Confidence::Exact), Just(Confidence::Numeric)]),
            prop::option::of(-1e6f64..1e6),
            prop::collection::vec(summary(), 0..3),
            0.0f64..1e4,
        )
            .prop_map(|(name, verdict, expected, confidence, value, residuals, elapsed_ms)| CheckReport {
                name,
                verdict,
                expected,
                confidence,
                value,
                residuals,
                elapsed_ms,
            })
    }

    fn report() -> impl Strategy<Value = Report> {
        (any::<u64>(), "[0-9a-f]{64}", prop::collection::vec(check(), 0..5)).prop_map(|(seed, digest, checks)| Report {
            tool: "acw".into(),
            version: "0.1.0".into(),
            input_digest: digest,
            input: "fixture:so3".into(),
            seed,
            checks,
        })
    }

    proptest! {
        #[test]
        fn json_round_trips(r in report()) {
            let back: Report = serde_json::from_str(&r.to_json()).unwrap();
            prop_assert_eq!(back, r);
        }

        #[test]
        fn exit_status_depends_only_on_verdicts(r in report(), text in ".{0,8}", x in any::<f64>()) {
            let mut other = r.clone();
            for c in &mut other.checks {
                c.elapsed_ms = x.abs();
                c.residuals.clear();
                c.value = None;
                c.name = text.clone();
            }
            other.seed ^= 1;
            prop_assert_eq!(r.exit_code(), other.exit_code());
            let mismatched = r
                .checks
                .iter()
                .any(|c| matches!((c.verdict, c.expected), (Verdict::Pass, Some(false)) | (Verdict::Fail, Some(true))));
            prop_assert_eq!(r.exit_code(), i32::from(mismatched));
        }
    }

    #[test]
    fn non_finite_magnitudes_are_dropped() {
        assert_eq!(ResidualSummary::new("r", f64::NAN).max_abs, None);
        assert_eq!(ResidualSummary::new("r", f64::INFINITY).max_abs, None);
        assert_eq!(ResidualSummary::new("r", 0.5).max_abs, Some(0.5));
    }

    #[test]
    fn markdown_marks_unexpected_outcomes() {
        let r = Report {
            tool: "acw".into(),
            version: "0".into(),
            input_digest: "00".into(),
            input: "x".into(),
            seed: 1,
            checks: vec![CheckReport {
                name: "adjust.plain".into(),
                verdict: Verdict::Fail,
                expected: Some(true),
                confidence: Some(Confidence::Exact),
                value: None,
                residuals: vec![ResidualSummary::new("basic_curvature", 1.0).with_detail("nonzero")],
                elapsed_ms: 0.0,
            }],
        };
        let md = r.to_markdown();
        assert!(md.contains("| adjust.plain | fail ✗ | pass | exact | 1.000e0 |"));
        assert!(md.contains("- basic_curvature: 1.000e0; nonzero"));
        assert_eq!(r.exit_code(), 1);
    }
}
