use serde::{Deserialize, Serialize};

use crate::vector::HVector;

/// Outcome of a sampled certificate check.
///
/// `worst_value` is the extreme observed value of the checked quantity. Its
/// sign convention is set by each check. When `passed` is false the witness
/// holds the inputs that produced `worst_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorReport {
    pub passed: bool,
    pub samples_checked: usize,
    pub worst_value: f64,
    pub witness: Option<(HVector, HVector)>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl ValidatorReport {
    pub(crate) fn new(passed: bool, samples_checked: usize, worst_value: f64) -> Self {
        Self { passed, samples_checked, worst_value, witness: None, note: String::new() }
    }

    pub(crate) fn with_witness(mut self, witness: Option<(HVector, HVector)>) -> Self {
        self.witness = witness;
        self
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Failed report without samples, for checks that could not run.
    pub(crate) fn aborted(note: impl Into<String>) -> Self {
        Self::new(false, 0, f64::NAN).with_note(note)
    }
}
