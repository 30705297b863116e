//! Pass/fail records for law suites.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawResult {
    pub law: String,
    pub passed: bool,
    /// Number of instances examined.
    pub checked: usize,
    /// First failing instance, in enumeration order (smallest first).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl LawResult {
    pub fn pass(law: impl Into<String>, checked: usize) -> Self {
        LawResult {
            law: law.into(),
            passed: true,
            checked,
            witness: None,
        }
    }

    pub fn fail(law: impl Into<String>, checked: usize, witness: impl Into<String>) -> Self {
        LawResult {
            law: law.into(),
            passed: false,
            checked,
            witness: Some(witness.into()),
        }
    }
}

/// Runs `check` on each item, stopping at the first failure.
pub fn check_all<T>(
    law: impl Into<String>,
    items: impl IntoIterator<Item = T>,
    mut check: impl FnMut(&T) -> Result<(), String>,
) -> LawResult {
    let law = law.into();
    let mut n = 0;
    for item in items {
        n += 1;
        if let Err(w) = check(&item) {
            return LawResult::fail(law, n, w);
        }
    }
    LawResult::pass(law, n)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub suite: String,
    pub bounds: BTreeMap<String, usize>,
    pub results: Vec<LawResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(suite: impl Into<String>) -> Self {
        Report {
            suite: suite.into(),
            ..Default::default()
        }
    }

    pub fn bound(mut self, name: &str, value: usize) -> Self {
        self.bounds.insert(name.to_string(), value);
        self
    }

    pub fn push(&mut self, r: LawResult) {
        self.results.push(r);
    }

    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn get(&self, law: &str) -> Option<&LawResult> {
        self.results.iter().find(|r| r.law == law)
    }

    pub fn failures(&self) -> Vec<&LawResult> {
        self.results.iter().filter(|r| !r.passed).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stops_at_first_failure() {
        let r = check_all("even", [2, 4, 5, 7], |x| {
            if x % 2 == 0 {
                Ok(())
            } else {
                Err(format!("{x} is odd"))
            }
        });
        assert!(!r.passed);
        assert_eq!(r.checked, 3);
        assert_eq!(r.witness.as_deref(), Some("5 is odd"));
    }
}
