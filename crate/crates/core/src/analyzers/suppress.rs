use glob::Pattern;
use serde::{Deserialize, Serialize};

use super::Warning;

/// Drops warnings whose check id matches `check_id_glob`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuppressionRule {
    pub check_id_glob: String,
    #[serde(default)]
    pub reason: String,
}

impl SuppressionRule {
    pub fn new(check_id_glob: impl Into<String>, reason: impl Into<String>) -> SuppressionRule {
        SuppressionRule {
            check_id_glob: check_id_glob.into(),
            reason: reason.into(),
        }
    }

    /// True when `check_id` matches the glob. Invalid and empty patterns
    /// match nothing.
    pub fn matches(&self, check_id: &str) -> bool {
        if self.check_id_glob.is_empty() {
            return false;
        }
        match Pattern::new(&self.check_id_glob) {
            Ok(p) => p.matches(check_id),
            Err(_) => self.check_id_glob == check_id,
        }
    }
}

/// The shipped rule set: Juliet's harness declares virtual overrides without
/// `override`, which cppcheck reports on every C++ case.
pub fn default_suppressions() -> Vec<SuppressionRule> {
    vec![SuppressionRule::new(
        "missingOverride",
        "induced by the Juliet harness, unrelated to the demonstrated weakness",
    )]
}

/// Returns the warnings matched by no rule, in their original order.
pub fn apply_suppressions(warnings: &[Warning], rules: &[SuppressionRule]) -> Vec<Warning> {
    warnings
        .iter()
        .filter(|w| !rules.iter().any(|r| r.matches(&w.check_id)))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzers::{Severity, Tool};
    use proptest::prelude::*;

    fn w(id: &str) -> Warning {
        Warning {
            tool: Tool::Cppcheck,
            check_id: id.into(),
            severity: Severity::Style,
            file: "a.cpp".into(),
            line: 1,
            column: None,
            message: String::new(),
            cwe: None,
        }
    }

    fn ids(ws: &[Warning]) -> Vec<&str> {
        ws.iter().map(|w| w.check_id.as_str()).collect()
    }

    #[test]
    fn default_rule_drops_missing_override() {
        let out = apply_suppressions(&[w("missingOverride"), w("zerodiv")], &default_suppressions());
        assert_eq!(ids(&out), ["zerodiv"]);
    }

    #[test]
    fn empty_rules_are_identity() {
        let input = vec![w("a"), w("b")];
        assert_eq!(apply_suppressions(&input, &[]), input);
    }

    #[test]
    fn glob_prefix() {
        let rules = [SuppressionRule::new("uninit*", "")];
        assert!(apply_suppressions(&[w("uninitvar")], &rules).is_empty());
        assert_eq!(apply_suppressions(&[w("legacyUninitvar")], &rules).len(), 1);
    }

    #[test]
    fn empty_pattern_matches_nothing() {
        assert!(!SuppressionRule::new("", "").matches(""));
    }

    proptest! {
        #[test]
        fn output_is_a_subsequence(ids in proptest::collection::vec("[a-cA-C]{1,4}", 0..20), globs in proptest::collection::vec("[a-c*?]{1,3}", 0..4)) {
            let input: Vec<Warning> = ids.iter().map(|i| w(i)).collect();
            let rules: Vec<SuppressionRule> = globs.into_iter().map(|g| SuppressionRule::new(g, "")).collect();
            let out = apply_suppressions(&input, &rules);
            let mut it = input.iter();
            for kept in &out {
                prop_assert!(it.any(|x| x == kept));
            }
            // adding a rule never keeps more
            let mut more = rules.clone();
            more.push(SuppressionRule::new("a*", ""));
            prop_assert!(apply_suppressions(&input, &more).len() <= out.len());
        }
    }
}
