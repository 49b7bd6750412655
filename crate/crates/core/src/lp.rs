//! Inner polytope approximation of the feasible region and boundary ascent.
//!
//! A linear objective over the hull of finitely many points peaks at one of
//! them, so the LP optimum is found by evaluating the vertices directly.

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Result, UsdError};
use crate::feasibility::{ProbabilityVector, Region};
use crate::linalg::inner;
use crate::solution::{better_candidate, Method, PovmSolution};

pub const DEFAULT_REFINE_STEPS: usize = 200;
const INITIAL_STEP: f64 = 0.1;
const STEP_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    /// Origin first, then one vertex per nonempty subset in bitmask order.
    pub vertices: Vec<ProbabilityVector>,
    pub objective: Vec<f64>,
}

impl Polytope {
    pub fn new(ensemble: &Ensemble) -> Result<Self> {
        Self::from_region(&Region::new(ensemble)?, ensemble.priors())
    }

    pub fn from_region(region: &Region, priors: &[f64]) -> Result<Self> {
        let mut vertices = vec![ProbabilityVector::zeros(region.len())];
        vertices.extend(region.vertices()?.into_iter().map(|v| v.p));
        Ok(Self {
            vertices,
            objective: priors.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// The vertex maximizing `Σ η_i p_i`, ties broken as in `better_candidate`.
    pub fn best_vertex(&self) -> &ProbabilityVector {
        let mut best = &self.vertices[0];
        for v in &self.vertices[1..] {
            if better_candidate(v, best, &self.objective) {
                best = v;
            }
        }
        best
    }
}

pub fn solve_lp(ensemble: &Ensemble) -> Result<PovmSolution> {
    let region = Region::new(ensemble)?;
    let poly = Polytope::from_region(&region, ensemble.priors())?;
    PovmSolution::new(
        &region,
        ensemble.priors(),
        poly.best_vertex().to_vec(),
        Method::Lp,
        None,
    )
}

/// LP vertex followed by `steps` rounds of boundary ascent.
pub fn solve_lp_refined(ensemble: &Ensemble, steps: usize) -> Result<PovmSolution> {
    let lp = solve_lp(ensemble)?;
    refine_on_boundary(ensemble, &lp.p, steps)
}

/// Projected ascent along the boundary from a feasible `start`. Each round
/// moves along the priors projected onto the boundary's tangent plane, then
/// pulls back radially onto the boundary; only strict improvements are kept,
/// so `Q` never increases.
pub fn refine_on_boundary(
    ensemble: &Ensemble,
    start: &[f64],
    steps: usize,
) -> Result<PovmSolution> {
    let region = Region::new(ensemble)?;
    let eta = ensemble.priors();
    let n = region.len();
    if start.len() != n {
        return Err(UsdError::DimensionMismatch {
            expected: n,
            found: start.len(),
        });
    }
    let cert = region.certificate(start)?;
    if !cert.feasible {
        return Err(UsdError::Infeasible {
            min_eigenvalue: cert.min_eigenvalue_pi0,
        });
    }
    let success = |p: &[f64]| p.iter().zip(eta).map(|(a, b)| a * b).sum::<f64>();

    let mut p: Vec<f64> = start.iter().map(|x| x.max(0.0)).collect();
    let pulled = to_boundary(&region, &p)?;
    if success(&pulled) > success(&p) {
        p = pulled;
    }
    let mut h = INITIAL_STEP;
    for _ in 0..steps {
        let Some(d) = tangent_direction(&region, eta, &p)? else {
            break;
        };
        let trial: Vec<f64> = p
            .iter()
            .zip(&d)
            .map(|(x, dx)| (x + h * dx).max(0.0))
            .collect();
        let trial = to_boundary(&region, &trial)?;
        if success(&trial) > success(&p) && region.is_feasible(&trial)? {
            p = trial;
            h = (2.0 * h).min(1.0);
        } else {
            h *= 0.5;
            if h < STEP_FLOOR {
                break;
            }
        }
    }
    PovmSolution::new(&region, eta, p, Method::LpRefined, None)
}

/// `t·p` with `t = 1/λ_max(√P G̃ √P)`, capped so every entry stays ≤ 1.
fn to_boundary(region: &Region, p: &[f64]) -> Result<Vec<f64>> {
    if p.iter().all(|x| *x <= 0.0) {
        return Ok(p.to_vec());
    }
    let top = p.iter().cloned().fold(0.0, f64::max);
    let t = region.radial_scale(p)?.min(1.0 / top);
    Ok(p.iter().map(|x| (x * t).min(1.0)).collect())
}

/// Priors projected onto the tangent plane of the boundary at `p`, with the
/// coordinates pinned at `p_i = 0` that would go negative held fixed.
/// `None` when the projection vanishes.
fn tangent_direction(region: &Region, eta: &[f64], p: &[f64]) -> Result<Option<Vec<f64>>> {
    let n = p.len();
    let eig = region.inconclusive_operator(p)?.eig()?;
    let u = &eig.vectors[0];
    let normal: Vec<f64> = region
        .frame()
        .reciprocal_states
        .iter()
        .map(|d| inner(u, d).norm_sqr())
        .collect();
    let mut free: Vec<bool> = vec![true; n];
    for _ in 0..=n {
        let dot = |a: &[f64], b: &[f64]| {
            (0..n)
                .filter(|&i| free[i])
                .map(|i| a[i] * b[i])
                .sum::<f64>()
        };
        let nn = dot(&normal, &normal);
        let coef = if nn > 0.0 {
            dot(eta, &normal) / nn
        } else {
            0.0
        };
        let d: Vec<f64> = (0..n)
            .map(|i| {
                if free[i] {
                    eta[i] - coef * normal[i]
                } else {
                    0.0
                }
            })
            .collect();
        let blocked: Vec<usize> = (0..n)
            .filter(|&i| free[i] && p[i] <= 1e-12 && d[i] < 0.0)
            .collect();
        if blocked.is_empty() {
            let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            return Ok((len > 1e-14).then(|| d.iter().map(|x| x / len).collect()));
        }
        for i in blocked {
            free[i] = false;
        }
    }
    Ok(None)
}
