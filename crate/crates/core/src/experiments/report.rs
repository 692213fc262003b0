use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::CensusDoc;
use crate::io::{write_atomic, write_json};
use crate::{Error, Result};

/// Slack on `0 ≤ ratio ≤ 1`.
pub const RATIO_RANGE_SLACK: f64 = 1e-12;

pub const NORM_CONVENTION: &str =
    "squared: ratio = ||W psi||^2 / ||psi||^2 and every bound column is the square of the normed bound";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Boundary mass too large for whole-space hypotheses.
    Advisory,
    /// Outside the hypotheses of the checked inequality.
    OutOfScope,
    TrivialPass,
    /// Training data with no pass criterion of its own.
    Info,
    Error,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Advisory => "advisory",
            Verdict::OutOfScope => "out-of-scope",
            Verdict::TrivialPass => "trivial-pass",
            Verdict::Info => "info",
            Verdict::Error => "error",
        }
    }

    pub fn is_hard_failure(self) -> bool {
        matches!(self, Verdict::Fail)
    }
}

/// One flat row of a report. The check is always `bound ≤ observed + slack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case: String,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub energy: Option<f64>,
    pub n: Option<u64>,
    /// `‖Wψ‖²/‖ψ‖²` when the record tests a field.
    pub observed_ratio: Option<f64>,
    pub observed: f64,
    pub bound: f64,
    pub slack: f64,
    pub residual: Option<f64>,
    pub boundary_mass: f64,
    pub boundary_tol: f64,
    pub verdict: Verdict,
    pub note: String,
}

impl CaseRecord {
    pub fn new(case: impl Into<String>, delta: f64, m: f64, k: f64) -> Self {
        CaseRecord {
            case: case.into(),
            delta,
            m,
            k,
            energy: None,
            n: None,
            observed_ratio: None,
            observed: 0.0,
            bound: 0.0,
            slack: 0.0,
            residual: None,
            boundary_mass: 0.0,
            boundary_tol: f64::INFINITY,
            verdict: Verdict::Info,
            note: String::new(),
        }
    }

    /// Sets `observed`, `bound` and `slack` and derives the verdict.
    pub fn judged(mut self, observed: f64, bound: f64, slack: f64) -> Self {
        self.observed = observed;
        self.bound = bound;
        self.slack = slack;
        self.verdict = Verdict::Pass;
        self.verdict = self.recompute();
        self
    }

    pub fn with_boundary(mut self, mass: f64, tol: f64) -> Self {
        self.boundary_mass = mass;
        self.boundary_tol = tol;
        self
    }

    pub fn ratio_in_range(&self) -> bool {
        self.observed_ratio
            .is_none_or(|r| (-RATIO_RANGE_SLACK..=1.0 + RATIO_RANGE_SLACK).contains(&r))
    }

    /// `residual < 1/n` for Weyl iterate records.
    pub fn residual_contract(&self) -> bool {
        match (self.n, self.residual) {
            (Some(n), Some(r)) => r < 1.0 / n as f64,
            _ => true,
        }
    }

    /// Verdict derived from the stored numbers alone. Records marked
    /// out-of-scope, trivial, info or error keep their verdict.
    pub fn recompute(&self) -> Verdict {
        match self.verdict {
            Verdict::OutOfScope | Verdict::TrivialPass | Verdict::Info | Verdict::Error => {
                self.verdict
            }
            _ if !(self.observed.is_finite() && self.bound.is_finite()) => Verdict::Fail,
            _ if !self.ratio_in_range() => Verdict::Fail,
            _ if !self.residual_contract() => Verdict::Fail,
            _ if self.boundary_mass >= self.boundary_tol => Verdict::Advisory,
            _ if self.bound <= self.observed + self.slack => Verdict::Pass,
            _ => Verdict::Fail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub mode: usize,
    pub energy: f64,
    pub v_norm: f64,
    pub log_ratios: Vec<f64>,
    pub log_deltas: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub k_hat: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusSummary {
    pub mode: usize,
    pub energy: f64,
    pub relative_boundary_mass: f64,
    pub dominant_count: usize,
    pub weak_count: usize,
    pub mass_weak: f64,
    pub bound_holds: bool,
    pub census: CensusDoc,
}

/// Term-by-term record of the projector-range chain
/// `t0 ≤ t1 ≤ t2 ≤ t3`, plus `2M⁴γ² − δ²M²γ² ≥ M⁴γ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub case: String,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub gamma: f64,
    pub center: f64,
    pub norm_sq: f64,
    pub residual: f64,
    /// `2M⁴γ²‖ψ‖²`
    pub t0: f64,
    /// `(δ/M)^{K(1+M^{4/3}‖V−E‖^{2/3})}‖ψ‖²`
    pub t1: f64,
    /// `‖Wψ‖² + δ²M²‖(H−E)ψ‖²`
    pub t2: f64,
    /// `‖Wψ‖² + δ²M²γ²‖ψ‖²`
    pub t3: f64,
    pub residual_ok: bool,
    pub steps_ok: [bool; 3],
    pub algebra_ok: bool,
    pub tol: f64,
    pub verdict: Verdict,
}

impl ChainRecord {
    pub fn recompute(&self) -> Verdict {
        let tol = self.tol;
        let scale = self.norm_sq.max(1.0);
        let residual_ok = self.residual <= self.gamma * self.norm_sq.sqrt() + tol * scale;
        let s0 = self.t0 <= self.t1 + tol * scale;
        let s1 = self.t1 <= self.t2 + tol * scale;
        let s2 = self.t2 <= self.t3 + tol * scale;
        let g2 = self.gamma * self.gamma;
        let algebra = 2.0 * self.m.powi(4) * g2 - (self.delta * self.m).powi(2) * g2
            >= self.m.powi(4) * g2 - tol;
        if residual_ok && s0 && s1 && s2 && algebra {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub advisory: usize,
    pub out_of_scope: usize,
    pub trivial_pass: usize,
    pub info: usize,
    pub error: usize,
}

impl Summary {
    fn add(&mut self, v: Verdict) {
        self.total += 1;
        match v {
            Verdict::Pass => self.pass += 1,
            Verdict::Fail => self.fail += 1,
            Verdict::Advisory => self.advisory += 1,
            Verdict::OutOfScope => self.out_of_scope += 1,
            Verdict::TrivialPass => self.trivial_pass += 1,
            Verdict::Info => self.info += 1,
            Verdict::Error => self.error += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KInfo {
    pub value: f64,
    /// `"fixed (illustrative)"`, `"fit"` or `"fit:<path>"`.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub norm_convention: String,
    pub dimension: usize,
    pub potential: String,
    pub k: Option<KInfo>,
    pub summary: Summary,
    pub records: Vec<CaseRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chain: Vec<ChainRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitDiagnostics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub census: Vec<CensusSummary>,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(experiment: &str, dimension: usize, potential: &str) -> Self {
        Report {
            experiment: experiment.to_string(),
            norm_convention: NORM_CONVENTION.to_string(),
            dimension,
            potential: potential.to_string(),
            k: None,
            summary: Summary::default(),
            records: Vec::new(),
            chain: Vec::new(),
            fit: None,
            census: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    /// Recounts the summary from records and chain entries.
    pub fn finish(&mut self) {
        let mut s = Summary::default();
        for r in &self.records {
            s.add(r.verdict);
        }
        for c in &self.chain {
            s.add(c.verdict);
        }
        for c in &self.census {
            s.add(if c.bound_holds {
                Verdict::Pass
            } else {
                Verdict::Fail
            });
        }
        self.summary = s;
    }

    pub fn has_hard_failure(&self) -> bool {
        self.records.iter().any(|r| r.verdict.is_hard_failure())
            || self.chain.iter().any(|c| c.verdict.is_hard_failure())
            || self.census.iter().any(|c| !c.bound_holds)
    }

    pub fn has_errors(&self) -> bool {
        self.records.iter().any(|r| r.verdict == Verdict::Error)
    }

    /// True when every stored verdict matches the one recomputed from its numbers.
    pub fn is_consistent(&self) -> bool {
        self.records.iter().all(|r| r.recompute() == r.verdict)
            && self.chain.iter().all(|c| c.recompute() == c.verdict)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)
                .map_err(|e| Error::config(format!("csv: {e}")))?;
        }
        w.into_inner()
            .map_err(|e| Error::config(format!("csv: {e}")))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }

    /// Fixed-width summary table for stdout.
    pub fn summary_table(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(out, "experiment   {}", self.experiment);
        if let Some(k) = &self.k {
            let _ = writeln!(out, "K            {:.6} ({})", k.value, k.source);
        }
        if let Some(f) = &self.fit {
            let _ = writeln!(
                out,
                "fit          slope {:.6}  R^2 {:.6}  K_hat {:.6}",
                f.slope, f.r_squared, f.k_hat
            );
        }
        let _ = writeln!(out, "{:<13}{:>7}", "verdict", "count");
        for (name, n) in [
            ("pass", s.pass),
            ("fail", s.fail),
            ("advisory", s.advisory),
            ("out-of-scope", s.out_of_scope),
            ("trivial-pass", s.trivial_pass),
            ("info", s.info),
            ("error", s.error),
        ] {
            if n > 0 {
                let _ = writeln!(out, "{name:<13}{n:>7}");
            }
        }
        let _ = writeln!(out, "{:<13}{:>7}", "total", s.total);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        let r = CaseRecord::new("a", 0.25, 1.0, 1.0)
            .with_boundary(0.0, 1e-6)
            .judged(0.5, 0.2, 0.0);
        assert_eq!(r.verdict, Verdict::Pass);
        let r = CaseRecord::new("a", 0.25, 1.0, 1.0)
            .with_boundary(0.0, 1e-6)
            .judged(0.1, 0.2, 0.0);
        assert_eq!(r.verdict, Verdict::Fail);
        let r = CaseRecord::new("a", 0.25, 1.0, 1.0)
            .with_boundary(1e-3, 1e-6)
            .judged(0.1, 0.2, 0.0);
        assert_eq!(r.verdict, Verdict::Advisory);
        let mut r = CaseRecord::new("a", 0.25, 1.0, 1.0);
        r.verdict = Verdict::OutOfScope;
        assert_eq!(r.recompute(), Verdict::OutOfScope);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut rep = Report::new("t", 1, "constant");
        rep.records
            .push(CaseRecord::new("x", 0.1, 1.0, 1.0).judged(0.3, 0.1, 0.0));
        rep.finish();
        let text = String::from_utf8(rep.to_csv().unwrap()).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("case,delta,M,K,energy"));
        assert!(lines.next().unwrap().contains(",pass,"));
        assert_eq!(rep.summary.pass, 1);
        assert!(rep.is_consistent());
    }
}
