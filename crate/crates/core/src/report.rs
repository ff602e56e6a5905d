//! Report rows shared by the counting, exponential-sum and family modules.

use serde::{Deserialize, Serialize};

/// Which quantity a [`CountReport`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Points,
    Lehmer,
    Visible,
    VisibleLehmer,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Points => "points",
            Quantity::Lehmer => "lehmer",
            Quantity::Visible => "visible",
            Quantity::VisibleLehmer => "visible-lehmer",
        }
    }
}

/// An error budget together with the formula that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub formula: String,
    pub value: f64,
}

impl Budget {
    pub fn new(formula: impl Into<String>, value: f64) -> Self {
        Self {
            formula: formula.into(),
            value,
        }
    }
}

/// Exact count against an asymptotic main term and an error budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub label: String,
    pub p: u64,
    pub kind: Quantity,
    pub exact: u64,
    pub main_term: f64,
    /// `exact - main_term`.
    pub deviation: f64,
    pub budget: f64,
    /// `|deviation| / budget`.
    pub normalized: f64,
    pub budget_formula: String,
    /// Further budgets reported alongside the primary one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternate_budgets: Vec<Budget>,
}

impl CountReport {
    pub fn new(
        label: impl Into<String>,
        p: u64,
        kind: Quantity,
        exact: u64,
        main_term: f64,
        budget: Budget,
        alternate_budgets: Vec<Budget>,
    ) -> Self {
        let deviation = exact as f64 - main_term;
        // Budgets are built from p >= 3, where every factor is positive.
        debug_assert!(budget.value > 0.0, "nonpositive budget {budget:?}");
        Self {
            label: label.into(),
            p,
            kind,
            exact,
            main_term,
            deviation,
            budget: budget.value,
            normalized: deviation.abs() / budget.value,
            budget_formula: budget.formula,
            alternate_budgets,
        }
    }

    /// `|exact / main_term - 1|`, or `None` when the main term vanishes.
    pub fn relative_error(&self) -> Option<f64> {
        (self.main_term != 0.0).then(|| (self.exact as f64 / self.main_term - 1.0).abs())
    }
}
