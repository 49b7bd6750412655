use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UsdError};
use crate::feasibility::{FeasibilityCertificate, ProbabilityVector, Region};

/// Slack allowed when clamping solver output into `[0, 1]`.
const PROBABILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    Lp,
    LpRefined,
    Lsd,
    Oracle,
    Epm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Lp => "lp",
            Method::LpRefined => "lp-refined",
            Method::Lsd => "lsd",
            Method::Oracle => "oracle",
            Method::Epm => "epm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An unambiguous measurement described by its detection probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmSolution {
    pub p: ProbabilityVector,
    pub q_fail: f64,
    pub p_success: f64,
    pub method: Method,
    pub certificate: FeasibilityCertificate,
    /// Tangency multiplier of the gradient-matching conditions, when one was used.
    pub multiplier: Option<f64>,
}

impl PovmSolution {
    /// Wraps `p` after checking it against the region. Fails if `p` is
    /// infeasible.
    pub fn new(
        region: &Region,
        priors: &[f64],
        p: Vec<f64>,
        method: Method,
        multiplier: Option<f64>,
    ) -> Result<Self> {
        let p = ProbabilityVector::clamped(p, PROBABILITY_SLACK)?;
        let certificate = region.certificate(&p)?;
        if !certificate.feasible {
            return Err(UsdError::Infeasible {
                min_eigenvalue: certificate.min_eigenvalue_pi0,
            });
        }
        let p_success = p.success(priors);
        Ok(Self {
            p,
            q_fail: 1.0 - p_success,
            p_success,
            method,
            certificate,
            multiplier,
        })
    }
}

/// Picks the best candidate: larger `Σ η_i p_i`, then larger `min p_i`, then
/// the lexicographically larger `p`. Success values within `1e-12` tie.
pub fn better_candidate(a: &[f64], b: &[f64], priors: &[f64]) -> bool {
    let pa: f64 = a.iter().zip(priors).map(|(x, e)| x * e).sum();
    let pb: f64 = b.iter().zip(priors).map(|(x, e)| x * e).sum();
    if (pa - pb).abs() > 1e-12 {
        return pa > pb;
    }
    let ma = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let mb = b.iter().cloned().fold(f64::INFINITY, f64::min);
    if (ma - mb).abs() > 1e-12 {
        return ma > mb;
    }
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-12 {
            return x > y;
        }
    }
    false
}
