//! Ensemble files: JSON with amplitudes as `[re, im]` pairs.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "states": [[[1, 0], [0, 0]], [[0.7071067811865476, 0], [0.7071067811865476, 0]]],
//!   "priors": [0.5, 0.5],
//!   "labels": ["zero", "plus"]
//! }
//! ```
//!
//! `normalize: true` rescales each state to unit norm. A `symmetry` block
//! (`generator` plus unitary `group` matrices) may replace `states`; the
//! states are then the orbit `U_i·generator`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use usd_core::{Ensemble, HermitianMatrix, StateVector, Tolerances};

use crate::error::{CliError, CliResult};

pub type Amplitude = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<Vec<Amplitude>>,
    pub priors: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<Symmetry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Symmetry {
    pub generator: Vec<Amplitude>,
    pub group: Vec<Vec<Vec<Amplitude>>>,
}

/// A parsed file together with everything derived from it.
#[derive(Debug, Clone)]
pub struct LoadedInput {
    pub file: EnsembleFile,
    /// SHA-256 of the raw file bytes, hex encoded.
    pub digest: String,
    /// State vectors as listed (or generated), before any validation.
    pub vectors: Vec<Vec<Complex64>>,
    pub group: Option<(StateVector, Vec<Vec<Vec<Complex64>>>)>,
}

impl LoadedInput {
    pub fn labels(&self) -> Vec<String> {
        self.file
            .labels
            .clone()
            .unwrap_or_else(|| (1..=self.vectors.len()).map(|i| format!("ψ{i}")).collect())
    }

    /// Builds the validated ensemble with `tol` applied to norms and priors.
    pub fn ensemble(&self, tol: f64) -> CliResult<Ensemble> {
        let tolerances = Tolerances::uniform(tol);
        let states = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let s = if self.file.normalize {
                    StateVector::normalized(v.clone())
                } else {
                    StateVector::with_tolerance(v.clone(), tol)
                };
                s.map_err(|e| CliError::field(format!("states[{i}]"), e.to_string()))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Ensemble::with_tolerances(
            states,
            self.file.priors.clone(),
            &tolerances,
        )?)
    }

    /// `λ_min` of the Gram matrix of the listed vectors, when they share a
    /// dimension.
    pub fn min_gram_eigenvalue(&self) -> Option<f64> {
        let d = self.vectors.first()?.len();
        if self.vectors.iter().any(|v| v.len() != d) {
            return None;
        }
        let unit: Vec<Vec<Complex64>> = self
            .vectors
            .iter()
            .map(|v| {
                let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if self.file.normalize && n > 0.0 {
                    v.iter().map(|z| z / n).collect()
                } else {
                    v.clone()
                }
            })
            .collect();
        HermitianMatrix::gram(&unit).min_eigenvalue().ok()
    }
}

fn complex(v: &[Amplitude]) -> Vec<Complex64> {
    v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load(path: &Path) -> CliResult<LoadedInput> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&bytes)
}

pub fn parse(bytes: &[u8]) -> CliResult<LoadedInput> {
    let file: EnsembleFile = serde_json::from_slice(bytes).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let digest = digest(bytes);
    let d = file.dimension;
    if d == 0 {
        return Err(CliError::field("dimension", "must be at least 1"));
    }

    let group = match &file.symmetry {
        None => None,
        Some(sym) => {
            if sym.generator.len() != d {
                return Err(CliError::field(
                    "symmetry.generator",
                    format!("expected {d} amplitudes, found {}", sym.generator.len()),
                ));
            }
            let mut mats = Vec::with_capacity(sym.group.len());
            for (k, u) in sym.group.iter().enumerate() {
                if u.len() != d {
                    return Err(CliError::field(
                        format!("symmetry.group[{k}]"),
                        format!("expected {d} rows, found {}", u.len()),
                    ));
                }
                let mut rows = Vec::with_capacity(d);
                for (r, row) in u.iter().enumerate() {
                    if row.len() != d {
                        return Err(CliError::field(
                            format!("symmetry.group[{k}][{r}]"),
                            format!("expected {d} entries, found {}", row.len()),
                        ));
                    }
                    rows.push(complex(row));
                }
                mats.push(rows);
            }
            let g = complex(&sym.generator);
            let generator = if file.normalize {
                StateVector::normalized(g)
            } else {
                StateVector::new(g)
            }
            .map_err(|e| CliError::field("symmetry.generator", e.to_string()))?;
            Some((generator, mats))
        }
    };

    let vectors: Vec<Vec<Complex64>> = if file.states.is_empty() {
        let Some((generator, mats)) = &group else {
            return Err(CliError::field(
                "states",
                "no states listed and no symmetry block",
            ));
        };
        mats.iter()
            .map(|u| {
                u.iter()
                    .map(|row| {
                        row.iter()
                            .zip(generator.amplitudes())
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect()
            })
            .collect()
    } else {
        for (i, s) in file.states.iter().enumerate() {
            if s.len() != d {
                return Err(CliError::field(
                    format!("states[{i}]"),
                    format!("expected {d} amplitudes, found {}", s.len()),
                ));
            }
        }
        file.states.iter().map(|s| complex(s)).collect()
    };

    if file.priors.len() != vectors.len() {
        return Err(CliError::field(
            "priors",
            format!(
                "expected {} entries, found {}",
                vectors.len(),
                file.priors.len()
            ),
        ));
    }
    if let Some(labels) = &file.labels {
        if labels.len() != vectors.len() {
            return Err(CliError::field(
                "labels",
                format!("expected {} entries, found {}", vectors.len(), labels.len()),
            ));
        }
    }
    Ok(LoadedInput {
        file,
        digest,
        vectors,
        group,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"{
        "dimension": 2,
        "states": [[[1, 0], [0, 0]], [[1, 0], [1, 0]]],
        "priors": [0.5, 0.5],
        "normalize": true
    }"#;

    #[test]
    fn parses_and_builds() {
        let input = parse(PAIR.as_bytes()).unwrap();
        let e = input.ensemble(1e-9).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(input.labels(), vec!["ψ1", "ψ2"]);
        assert_eq!(input.digest.len(), 64);
        assert!((input.min_gram_eigenvalue().unwrap() - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = parse(b"{\n  \"dimension\": 2,\n  \"states\": [\n}").unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn field_errors_name_the_field() {
        let text = r#"{"dimension": 3, "states": [[[1,0],[0,0],[0,0]], [[1,0],[0,0]]], "priors": [0.5, 0.5]}"#;
        let err = parse(text.as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("states[1]:"), "{err}");
        let text = r#"{"dimension": 1, "states": [[[1,0]]], "priors": [0.5, 0.5]}"#;
        assert!(parse(text.as_bytes())
            .unwrap_err()
            .to_string()
            .starts_with("priors:"));
        let text = r#"{"dimension": 1, "states": [[[1,0]]], "priors": [1], "colour": 3}"#;
        assert!(matches!(
            parse(text.as_bytes()),
            Err(CliError::Parse { .. })
        ));
    }

    #[test]
    fn unnormalized_state_is_rejected_without_flag() {
        let text = r#"{"dimension": 2, "states": [[[1,0],[1,0]]], "priors": [1]}"#;
        let err = parse(text.as_bytes()).unwrap().ensemble(1e-9).unwrap_err();
        assert!(err.to_string().contains("states[0]"), "{err}");
    }

    #[test]
    fn symmetry_generates_the_orbit() {
        let text = r#"{
            "dimension": 2,
            "priors": [0.5, 0.5],
            "normalize": true,
            "symmetry": {
                "generator": [[1, 0], [2, 0]],
                "group": [[[[1,0],[0,0]],[[0,0],[1,0]]], [[[1,0],[0,0]],[[0,0],[-1,0]]]]
            }
        }"#;
        let input = parse(text.as_bytes()).unwrap();
        let e = input.ensemble(1e-9).unwrap();
        let v = e.state_vectors();
        assert!((v[1][1].re + v[0][1].re).abs() < 1e-15);
        assert!(input.group.is_some());
    }
}
