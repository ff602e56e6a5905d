use serde::Serialize;
use serde_json::Value;

use lehmer_visible::CountReport;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rows for CSV, records for JSON, plus side files and detected
/// invariant violations.
#[derive(Debug, Default)]
pub struct Output {
    pub task: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub records: Vec<Value>,
    pub warnings: Vec<String>,
    pub violations: Vec<String>,
    /// `(suffix, contents)` written next to the main output.
    pub side_files: Vec<(String, String)>,
}

impl Output {
    pub fn new(task: &str, header: &[&str]) -> Self {
        Self {
            task: task.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn record<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let v = serde_json::to_value(value)
            .map_err(|e| CliError::Validation(format!("serializing report: {e}")))?;
        self.records.push(v);
        Ok(())
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Validation(format!("csv: {e}"));
                w.write_record(&self.header).map_err(io)?;
                for row in &self.rows {
                    w.write_record(row).map_err(io)?;
                }
                let bytes = w
                    .into_inner()
                    .map_err(|e| CliError::Validation(format!("csv: {e}")))?;
                String::from_utf8(bytes).map_err(|e| CliError::Validation(e.to_string()))
            }
            Format::Json => {
                let doc = serde_json::json!({
                    "task": self.task,
                    "results": self.records,
                    "warnings": self.warnings,
                    "violations": self.violations,
                });
                let mut text = serde_json::to_string_pretty(&doc)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                text.push('\n');
                Ok(text)
            }
        }
    }
}

pub const COUNT_HEADER: [&str; 9] = [
    "label",
    "p",
    "kind",
    "exact",
    "main_term",
    "deviation",
    "budget",
    "normalized",
    "budget_formula",
];

pub fn count_row(r: &CountReport) -> Vec<String> {
    vec![
        r.label.clone(),
        r.p.to_string(),
        r.kind.as_str().to_string(),
        r.exact.to_string(),
        r.main_term.to_string(),
        r.deviation.to_string(),
        r.budget.to_string(),
        r.normalized.to_string(),
        r.budget_formula.clone(),
    ]
}

pub fn joined(xs: &[u64]) -> String {
    xs.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}
