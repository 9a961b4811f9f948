//! Report structures and emitters. All numbers are decimal strings so a
//! report is byte-identical across runs (modulo the timestamp field).

use serde::Serialize;

use crate::job::{JobFile, OutputFormat};

pub const SCHEMA: &str = "selfsim-report/1";

#[derive(Serialize, Debug)]
pub struct JobReport {
    pub schema: &'static str,
    /// Wall-clock stamp; the only nondeterministic field.
    pub generated_unix_ms: u128,
    pub precision: u32,
    pub method: String,
    pub job: JobFile,
    pub orders: Vec<OrderRow>,
    pub recommended_order: Option<usize>,
    pub exact: Option<ExactRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Serialize, Debug, Clone)]
pub struct OrderRow {
    pub k: usize,
    pub status: String, // ok | skipped-nonreal | skipped-singular
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_strategy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub evaluations: Vec<EvalRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagRow>,
}

impl OrderRow {
    pub fn skipped(k: usize, status: &str, note: String) -> Self {
        OrderRow {
            k,
            status: status.into(),
            u: None,
            u_strategy: None,
            c: None,
            nu: None,
            validity: None,
            note: Some(note),
            evaluations: vec![],
            diagnostics: None,
        }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct EvalRow {
    pub x: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Serialize, Debug, Clone)]
pub struct DiagRow {
    pub s_k: String,
    pub max_pair_product: String,
    pub hankel_condition: String,
    pub effective_rank: usize,
    pub residual: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_from: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub s_probes: Vec<(String, Option<String>)>,
}

#[derive(Serialize, Debug, Clone)]
pub struct ExactRow {
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<String>,
}

pub fn emit_report(report: &JobReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            serde_json::to_string_pretty(report).expect("report serializes") + "\n"
        }
        OutputFormat::Csv => emit_csv(report),
        OutputFormat::Table => emit_table(report),
    }
}

fn emit_csv(report: &JobReport) -> String {
    let mut out = String::from("k,C,nu,status\n");
    for row in &report.orders {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.k,
            row.c.as_deref().unwrap_or(""),
            row.nu.as_deref().unwrap_or(""),
            row.status
        ));
    }
    out
}

fn emit_table(report: &JobReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "method: {}   precision: {} digits\n",
        report.method, report.precision
    ));
    out.push_str(&format!(
        "{:>3}  {:<12} {:<12} {:<18} {:<8} {}\n",
        "k", "C", "nu", "status", "u", "note"
    ));
    for row in &report.orders {
        let trunc = |s: &Option<String>| -> String {
            s.as_deref()
                .map(|v| v.chars().take(10).collect::<String>())
                .unwrap_or_default()
        };
        let mark = if Some(row.k) == report.recommended_order {
            " <- recommended"
        } else {
            ""
        };
        out.push_str(&format!(
            "{:>3}  {:<12} {:<12} {:<18} {:<8} {}{}\n",
            row.k,
            trunc(&row.c),
            trunc(&row.nu),
            row.status,
            trunc(&row.u),
            row.note.as_deref().unwrap_or(""),
            mark,
        ));
        for ev in &row.evaluations {
            out.push_str(&format!(
                "      f({}) = {} {}\n",
                ev.x,
                ev.value.as_deref().unwrap_or("-"),
                ev.note.as_deref().unwrap_or("")
            ));
        }
    }
    if let Some(exact) = &report.exact {
        out.push_str(&format!(
            "{:>3}  {:<12} {:<12} ({})\n",
            "ex",
            exact.c.as_deref().unwrap_or("-").chars().take(10).collect::<String>(),
            exact.nu.as_deref().unwrap_or("-").chars().take(10).collect::<String>(),
            exact.source
        ));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}
