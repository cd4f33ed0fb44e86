//! Constraint-violation reports shared by the instrument and process validators.

use alloc::string::String;
use alloc::vec::Vec;

use crate::num::Scalar;

/// One violated constraint with its maximum absolute residual.
#[derive(Clone, Debug)]
pub struct Violation<T> {
    pub constraint: &'static str,
    pub max_residual: T,
}

/// Validation outcome: an empty report means valid.
#[derive(Clone, Debug)]
pub struct Report<T> {
    pub violations: Vec<Violation<T>>,
}

impl<T: Scalar> Report<T> {
    pub fn new() -> Self {
        Report { violations: Vec::new() }
    }

    pub fn push(&mut self, constraint: &'static str, max_residual: T) {
        self.violations.push(Violation { constraint, max_residual });
    }

    /// Records the constraint when the residual is not zero (within tolerance).
    pub fn check_residual(&mut self, constraint: &'static str, residual: T) {
        if !residual.is_zero_tol() {
            self.push(constraint, residual);
        }
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        use alloc::format;
        if self.is_valid() {
            return String::from("valid");
        }
        let mut s = String::from("violated:");
        for v in &self.violations {
            s.push_str(&format!(" {}(residual {:e})", v.constraint, v.max_residual.to_f64_lossy()));
        }
        s
    }
}

impl<T: Scalar> Default for Report<T> {
    fn default() -> Self {
        Self::new()
    }
}
