use std::collections::BTreeMap;

use serde::Serialize;

/// Outcome of a sampled property check. `holds` always means "no
/// counterexample found under the recorded plan".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub holds: bool,
    pub checked_count: usize,
    pub witness: Option<Witness>,
    /// Every failing sample, sorted ascending.
    pub bad_points: Vec<f64>,
    pub notes: Vec<String>,
    pub seed: Option<u64>,
}

impl Verdict {
    pub(crate) fn new(check: &str) -> Self {
        Self {
            check: check.to_string(),
            holds: true,
            checked_count: 0,
            witness: None,
            bad_points: Vec::new(),
            notes: Vec::new(),
            seed: None,
        }
    }

    pub(crate) fn fail(&mut self, witness: Witness) {
        self.holds = false;
        if self.witness.is_none() {
            self.witness = Some(witness);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub at: Vec<f64>,
    pub values: BTreeMap<String, f64>,
}

impl Witness {
    pub fn new(at: Vec<f64>, values: &[(&str, f64)]) -> Self {
        Self {
            at,
            values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}
