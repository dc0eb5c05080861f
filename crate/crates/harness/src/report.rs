//! Checks and the summary block.

use std::fmt::Write;

use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Reported for reference, not gated.
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub observed: String,
    pub required: String,
}

impl Check {
    pub fn gate(name: impl Into<String>, passed: bool, observed: String, required: String) -> Self {
        Check {
            name: name.into(),
            status: if passed { Status::Pass } else { Status::Fail },
            observed,
            required,
        }
    }

    pub fn info(name: impl Into<String>, observed: String) -> Self {
        Check {
            name: name.into(),
            status: Status::Info,
            observed,
            required: String::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn line(&self) -> String {
        match self.status {
            Status::Info => format!("INFO {}: {}", self.name, self.observed),
            Status::Pass | Status::Fail => format!(
                "{} {}: observed {}; required {}",
                if self.status == Status::Pass {
                    "PASS"
                } else {
                    "FAIL"
                },
                self.name,
                self.observed,
                self.required
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub kind: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub table: Table,
    pub checks: Vec<Check>,
    /// Extra tables produced in diagnostic mode, by file suffix.
    pub traces: Vec<(&'static str, Table)>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.kind);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "trials: {}", self.trials);
        for c in &self.checks {
            let _ = writeln!(s, "{}", c.line());
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "result: {verdict}");
        s
    }
}

/// `k/n`.
pub fn ratio(k: usize, n: usize) -> String {
    format!("{k}/{n}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn info_lines_never_fail_a_report() {
        let report = Report {
            kind: "tail-identity",
            seed: 3,
            trials: 2,
            table: Table::default(),
            checks: vec![
                Check::gate("a", true, "2/2".into(), "2/2".into()),
                Check::info("b", "0.5".into()),
            ],
            traces: Vec::new(),
        };
        assert!(report.passed());
        assert_eq!(
            report.summary(),
            "experiment: tail-identity\nseed: 3\ntrials: 2\n\
             PASS a: observed 2/2; required 2/2\nINFO b: 0.5\nresult: PASS\n"
        );
    }

    #[test]
    fn one_failed_gate_fails_the_report() {
        let mut report = Report {
            kind: "k",
            seed: 0,
            trials: 1,
            table: Table::default(),
            checks: vec![Check::gate("a", false, "0/1".into(), "1/1".into())],
            traces: Vec::new(),
        };
        assert!(!report.passed());
        assert!(report
            .summary()
            .ends_with("FAIL a: observed 0/1; required 1/1\nresult: FAIL\n"));
        report.checks[0].status = Status::Pass;
        assert!(report.passed());
    }
}
