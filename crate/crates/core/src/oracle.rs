//! Independent checks: a brute-force grid maximizer and a Monte Carlo
//! simulator of the measurement.
//!
//! The grid scan deliberately avoids the eigensolver: feasibility of a grid
//! point is a Cholesky factorisation of `Π₀ + tol·I`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Result, UsdError};
use crate::feasibility::Region;
use crate::linalg::{inner, C64};
use crate::solution::{better_candidate, Method, PovmSolution};

pub const GRID_STATE_CAP: usize = 4;
pub const MIN_RESOLUTION: usize = 11;

/// Additive bound on how far the grid optimum of `Q` can sit above the true
/// optimum: `N/(r − 1)·max η`.
pub fn grid_bound(ensemble: &Ensemble, resolution: usize) -> f64 {
    let top = ensemble.priors().iter().cloned().fold(0.0, f64::max);
    ensemble.len() as f64 / (resolution - 1) as f64 * top
}

/// Best feasible point of the grid `{0, 1/(r−1), …, 1}^N`.
///
/// The feasible set is closed under decreasing any coordinate, so for each
/// prefix of the first `N − 2` coordinates the largest feasible last
/// coordinate can only fall as the second-to-last one rises; walking that
/// staircase visits every maximal grid point and equals an exhaustive scan.
pub fn grid_maximize(ensemble: &Ensemble, resolution: usize) -> Result<PovmSolution> {
    let n = ensemble.len();
    if n > GRID_STATE_CAP {
        return Err(UsdError::TooManyStates {
            n,
            cap: GRID_STATE_CAP,
        });
    }
    if resolution < MIN_RESOLUTION {
        return Err(UsdError::InvalidArgument(format!(
            "grid resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    let region = Region::new(ensemble)?;
    let eta = ensemble.priors();
    let test = PsdTest::new(&region.frame().reciprocal_states, region.tol_psd());
    let r = resolution;
    let level = |k: usize| {
        if k == r - 1 {
            1.0
        } else {
            k as f64 / (r - 1) as f64
        }
    };

    let best_for_prefix = |code: usize| -> Option<Vec<f64>> {
        let mut scratch = test.scratch();
        let mut p = vec![0.0; n];
        let mut rest = code;
        for slot in p.iter_mut().take(n.saturating_sub(2)) {
            *slot = level(rest % r);
            rest /= r;
        }
        let mut best: Option<Vec<f64>> = None;
        let mut last = r as isize - 1;
        let outer = if n >= 2 { r } else { 1 };
        for a in 0..outer {
            if n >= 2 {
                p[n - 2] = level(a);
            }
            while last >= 0 {
                p[n - 1] = level(last as usize);
                if test.feasible(&p, &mut scratch) {
                    break;
                }
                last -= 1;
            }
            if last < 0 {
                break;
            }
            if best.as_ref().is_none_or(|b| better_candidate(&p, b, eta)) {
                best = Some(p.clone());
            }
        }
        best
    };

    let prefixes = r.pow(n.saturating_sub(2) as u32);
    let per_prefix: Vec<Option<Vec<f64>>> =
        (0..prefixes).into_par_iter().map(best_for_prefix).collect();
    let mut winner: Option<Vec<f64>> = None;
    for p in per_prefix.into_iter().flatten() {
        if winner.as_ref().is_none_or(|w| better_candidate(&p, w, eta)) {
            winner = Some(p);
        }
    }
    let p = winner.expect("the origin is always feasible");
    PovmSolution::new(&region, eta, p, Method::Oracle, None)
}

/// `Π₀ + tol·I ≻ 0` by an in-place Cholesky factorisation.
struct PsdTest {
    dim: usize,
    tol: f64,
    /// Row-major `|ψ̃_i⟩⟨ψ̃_i|`.
    projectors: Vec<Vec<C64>>,
}

impl PsdTest {
    fn new(duals: &[Vec<C64>], tol: f64) -> Self {
        let dim = duals[0].len();
        let projectors = duals
            .iter()
            .map(|v| {
                (0..dim * dim)
                    .map(|ij| v[ij / dim] * v[ij % dim].conj())
                    .collect()
            })
            .collect();
        Self {
            dim,
            tol,
            projectors,
        }
    }

    fn scratch(&self) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); self.dim * self.dim]
    }

    fn feasible(&self, p: &[f64], m: &mut [C64]) -> bool {
        let d = self.dim;
        for (ij, slot) in m.iter_mut().enumerate() {
            let diag = if ij / d == ij % d {
                1.0 + self.tol
            } else {
                0.0
            };
            let mut z = C64::new(diag, 0.0);
            for (pk, proj) in p.iter().zip(&self.projectors) {
                z -= proj[ij] * pk;
            }
            *slot = z;
        }
        for j in 0..d {
            let mut diag = m[j * d + j].re;
            for k in 0..j {
                diag -= m[j * d + k].norm_sqr();
            }
            if diag <= 0.0 {
                return false;
            }
            let root = diag.sqrt();
            m[j * d + j] = C64::new(root, 0.0);
            for i in j + 1..d {
                let mut z = m[i * d + j];
                for k in 0..j {
                    z -= m[i * d + k] * m[j * d + k].conj();
                }
                m[i * d + j] = z / root;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    /// `counts[k][i]`: outcome `k` (0 = inconclusive) when the state was `i`.
    pub counts: Vec<Vec<u64>>,
    pub empirical_error_rate: f64,
    pub empirical_failure_rate: f64,
    /// `Σ η_i ⟨ψ_i|Π₀|ψ_i⟩` from the operators themselves.
    pub expected_failure_rate: f64,
    /// `max_{i≠k} ⟨ψ_i|Π_k|ψ_i⟩`.
    pub max_cross_probability: f64,
}

impl SimulationReport {
    pub fn state_totals(&self) -> Vec<u64> {
        let n = self.counts.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| self.counts.iter().map(|row| row[i]).sum())
            .collect()
    }

    /// Binomial standard deviation of the failure rate at probability `q`.
    pub fn sigma(&self, q: f64) -> f64 {
        (q * (1.0 - q) / self.trials as f64).sqrt()
    }

    /// `(empirical − q)/σ`; zero when `σ` vanishes and the rates agree.
    pub fn z_score(&self, q: f64) -> f64 {
        let diff = self.empirical_failure_rate - q;
        let s = self.sigma(q);
        if s > 0.0 {
            diff / s
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

/// Outcome law `⟨ψ_i|Π_k|ψ_i⟩` of the measurement `Π_k = p_k|ψ̃_k⟩⟨ψ̃_k|`,
/// `Π₀ = I − Σ Π_k`; rows are states, column 0 is inconclusive.
pub fn outcome_probabilities(
    region: &Region,
    ensemble: &Ensemble,
    p: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let pi0 = region.inconclusive_operator(p)?;
    let duals = &region.frame().reciprocal_states;
    Ok(ensemble
        .state_vectors()
        .iter()
        .map(|psi| {
            let mut row = Vec::with_capacity(p.len() + 1);
            row.push(pi0.quadratic_form(psi).max(0.0));
            for (pk, d) in p.iter().zip(duals) {
                row.push((pk * inner(d, psi).norm_sqr()).max(0.0));
            }
            row
        })
        .collect())
}

/// Draws `trials` rounds of (state, outcome) from a ChaCha8 stream seeded
/// with `seed`; the report depends only on the inputs and the seed.
pub fn simulate_measurement(
    ensemble: &Ensemble,
    solution: &PovmSolution,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(UsdError::InvalidArgument(
            "trials must be at least 1".into(),
        ));
    }
    let region = Region::new(ensemble)?;
    let cert = region.certificate(&solution.p)?;
    if !cert.feasible {
        return Err(UsdError::Infeasible {
            min_eigenvalue: cert.min_eigenvalue_pi0,
        });
    }
    let n = ensemble.len();
    let eta = ensemble.priors();
    let law = outcome_probabilities(&region, ensemble, &solution.p)?;
    let cumulative = |w: &[f64]| {
        let total: f64 = w.iter().sum();
        let mut acc = 0.0;
        w.iter()
            .map(|x| {
                acc += x / total;
                acc
            })
            .collect::<Vec<f64>>()
    };
    let state_cdf = cumulative(eta);
    let outcome_cdf: Vec<Vec<f64>> = law.iter().map(|row| cumulative(row)).collect();
    let draw = |cdf: &[f64], u: f64| cdf.iter().position(|c| u < *c).unwrap_or(cdf.len() - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0u64; n]; n + 1];
    for _ in 0..trials {
        let i = draw(&state_cdf, rng.random::<f64>());
        let k = draw(&outcome_cdf[i], rng.random::<f64>());
        counts[k][i] += 1;
    }

    let errors: u64 = (1..=n)
        .flat_map(|k| (0..n).filter(move |&i| i != k - 1).map(move |i| (k, i)))
        .map(|(k, i)| counts[k][i])
        .sum();
    let failures: u64 = counts[0].iter().sum();
    let max_cross_probability = (0..n)
        .flat_map(|i| (1..=n).filter(move |&k| k - 1 != i).map(move |k| (i, k)))
        .map(|(i, k)| law[i][k])
        .fold(0.0, f64::max);
    let expected_failure_rate = law.iter().zip(eta).map(|(row, e)| e * row[0]).sum();
    Ok(SimulationReport {
        trials,
        seed,
        counts,
        empirical_error_rate: errors as f64 / trials as f64,
        empirical_failure_rate: failures as f64 / trials as f64,
        expected_failure_rate,
        max_cross_probability,
    })
}
