//! Deterministic, schema-versioned verification reports.

use serde::Serialize;

use super::equation::EquationResult;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub equation: String,
    pub cell: Vec<i64>,
    pub u_exponent: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquationLine {
    pub label: String,
    pub cells_checked: usize,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub identity: String,
    pub window: i64,
    pub order: i64,
    pub cells_checked: usize,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_mismatch: Option<Mismatch>,
    pub equations: Vec<EquationLine>,
}

impl Report {
    pub fn new(identity: &str, window: i64, order: i64, results: &[EquationResult]) -> Self {
        let first_mismatch = results.iter().find_map(|r| {
            r.first_mismatch.as_ref().map(|(cell, e)| Mismatch {
                equation: r.label.clone(),
                cell: cell.clone(),
                u_exponent: *e,
            })
        });
        let status = |ok: bool| if ok { Status::Pass } else { Status::Fail };
        Report {
            schema: SCHEMA,
            identity: identity.into(),
            window,
            order,
            cells_checked: results.iter().map(|r| r.cells_checked).sum(),
            status: status(first_mismatch.is_none()),
            first_mismatch,
            equations: results
                .iter()
                .map(|r| EquationLine { label: r.label.clone(), cells_checked: r.cells_checked, status: status(r.passed()) })
                .collect(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
