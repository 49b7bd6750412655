//! Machine-readable reports (JSON, versioned) and their table renderings.

use serde::{Deserialize, Serialize};
use usd_core::oracle::SimulationReport;
use usd_core::{HermitianMatrix, Method, C64};

use crate::input::Amplitude;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Json,
    Both,
}

pub trait Render: Serialize {
    fn table(&self) -> String;

    fn render(&self, format: Format) -> String {
        let json = || serde_json::to_string_pretty(self).expect("reports serialize") + "\n";
        match format {
            Format::Table => self.table(),
            Format::Json => json(),
            Format::Both => format!("{}\n{}", self.table(), json()),
        }
    }
}

pub fn pairs(v: &[C64]) -> Vec<Amplitude> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn matrix_pairs(m: &HermitianMatrix) -> Vec<Vec<Amplitude>> {
    m.rows().iter().map(|r| pairs(r)).collect()
}

/// Aligned plain-text table; the first column is left aligned, the rest
/// right aligned.
pub fn text_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let width: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([headers[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let pad = " ".repeat(width[c] - s.chars().count());
                if c == 0 {
                    format!("{s}{pad}")
                } else {
                    format!("{pad}{s}")
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(headers);
    out += &(width
        .iter()
        .map(|w| "-".repeat(*w))
        .collect::<Vec<_>>()
        .join("  ")
        + "\n");
    for r in rows {
        out += &line(r);
    }
    out
}

fn num(x: f64) -> String {
    format!("{x:.12}")
}

fn complex_cell([re, im]: Amplitude) -> String {
    if im == 0.0 {
        format!("{re:.6}")
    } else {
        format!("{re:.6}{im:+.6}i")
    }
}

fn matrix_block(title: &str, m: &[Vec<Amplitude>]) -> String {
    let headers: Vec<String> = std::iter::once(title.to_string())
        .chain((1..=m.len()).map(|j| j.to_string()))
        .collect();
    let rows: Vec<Vec<String>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            std::iter::once((i + 1).to_string())
                .chain(r.iter().map(|z| complex_cell(*z)))
                .collect()
        })
        .collect();
    text_table(&headers, &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub schema_version: u32,
    pub input_digest: String,
    pub valid: bool,
    pub states: usize,
    pub dimension: usize,
    pub min_gram_eigenvalue: Option<f64>,
    pub diagnostics: Vec<String>,
}

impl Render for ValidateReport {
    fn table(&self) -> String {
        let verdict = if self.valid { "valid" } else { "invalid" };
        let mut out = format!(
            "{verdict}: {} states in dimension {}\nλ_min(G) = {}\n",
            self.states,
            self.dimension,
            self.min_gram_eigenvalue
                .map_or("n/a".into(), |x| format!("{x:.6e}"))
        );
        for d in &self.diagnostics {
            out += &format!("  - {d}\n");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub method: Method,
    pub p: Vec<f64>,
    pub q: f64,
    pub p_success: f64,
    /// Smallest eigenvalue of the inconclusive operator.
    pub min_eigenvalue_pi0: f64,
    pub kkt_certified: bool,
    pub reciprocal_states: Vec<Vec<Amplitude>>,
    pub elapsed_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub method: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// Spread of `Q` across the exact solvers.
    pub max_delta_q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_bound: Option<f64>,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub input_digest: String,
    pub labels: Vec<String>,
    pub priors: Vec<f64>,
    pub reports: Vec<SolutionReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Skipped>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<Agreement>,
}

impl Render for SolveReport {
    fn table(&self) -> String {
        let mut headers = vec!["method".to_string()];
        headers.extend(self.labels.iter().map(|l| format!("p[{l}]")));
        headers.extend(["Q", "P", "λ_min(Π₀)", "KKT", "ms"].map(String::from));
        let rows: Vec<Vec<String>> = self
            .reports
            .iter()
            .map(|r| {
                let mut row = vec![r.method.to_string()];
                row.extend(r.p.iter().map(|x| num(*x)));
                row.push(num(r.q));
                row.push(num(r.p_success));
                row.push(format!("{:.3e}", r.min_eigenvalue_pi0));
                row.push(if r.kkt_certified { "yes" } else { "no" }.into());
                row.push(format!("{:.2}", r.elapsed_ms));
                row
            })
            .collect();
        let mut out = text_table(&headers, &rows);
        for s in &self.skipped {
            out += &format!("skipped {}: {}\n", s.method, s.reason);
        }
        if let Some(a) = &self.agreement {
            out += &format!("max |ΔQ| across exact solvers: {:.3e}\n", a.max_delta_q);
            if let (Some(gap), Some(bound)) = (a.oracle_gap, a.oracle_bound) {
                out += &format!("oracle gap {gap:.3e} (grid bound {bound:.3e})\n");
            }
            out += &format!("consistent: {}\n", if a.consistent { "yes" } else { "no" });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub schema_version: u32,
    pub input_digest: String,
    pub gram: Vec<Vec<Amplitude>>,
    pub gram_spectrum: Vec<f64>,
    pub dual_gram: Vec<Vec<Amplitude>>,
    pub dual_gram_spectrum: Vec<f64>,
}

impl Render for GramReport {
    fn table(&self) -> String {
        let spectrum = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join("  ");
        format!(
            "{}spectrum: {}\n\n{}spectrum: {}\n",
            matrix_block("G", &self.gram),
            spectrum(&self.gram_spectrum),
            matrix_block("G̃", &self.dual_gram),
            spectrum(&self.dual_gram_spectrum),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub input_digest: String,
    pub labels: Vec<String>,
    pub method: Method,
    pub p: Vec<f64>,
    pub q: f64,
    pub sigma: f64,
    pub z_score: f64,
    pub simulation: SimulationReport,
}

impl Render for SimulateReport {
    fn table(&self) -> String {
        let mut headers = vec!["outcome".to_string()];
        headers.extend(self.labels.iter().cloned());
        let rows: Vec<Vec<String>> = self
            .simulation
            .counts
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let name = if k == 0 {
                    "inconclusive".to_string()
                } else {
                    self.labels[k - 1].clone()
                };
                std::iter::once(name)
                    .chain(row.iter().map(|c| c.to_string()))
                    .collect()
            })
            .collect();
        let s = &self.simulation;
        format!(
            "{} trials, seed {}, solution from {}\n{}empirical Q {}  vs  Q {}  (σ {:.3e}, z {:+.3})\nerror rate {}  (max cross probability {:.3e})\n",
            s.trials,
            s.seed,
            self.method,
            text_table(&headers, &rows),
            num(s.empirical_failure_rate),
            num(self.q),
            self.sigma,
            self.z_score,
            s.empirical_error_rate,
            s.max_cross_probability,
        )
    }
}
