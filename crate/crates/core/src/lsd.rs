//! Maximal subtraction of weighted projections from `ρ` (here `ρ = I`),
//! which coincides with optimal unambiguous discrimination, plus the KKT
//! machinery used to certify optimality.

use serde::{Deserialize, Serialize};

use crate::analytic::is_gauge_equiangular;
use crate::ensemble::{pinv, DualFrame, Ensemble};
use crate::error::{Result, UsdError};
use crate::feasibility::{ProbabilityVector, Region};
use crate::linalg::{inner, norm, solve_real, sub_vec, HermitianMatrix, C64};
use crate::solution::{better_candidate, Method, PovmSolution};

pub const MINOR_CAP: usize = 6;
const KKT_TOL: f64 = 1e-7;
const PHASE_STARTS: usize = 12;

/// `ã_ij = ⟨ψ̃_i|ρ⁺|ψ̃_j⟩` with all principal minors cached.
#[derive(Debug, Clone)]
pub struct DualGramData {
    pub a_tilde: HermitianMatrix,
    pub rho: HermitianMatrix,
    /// Principal minors indexed by subset bitmask; entry 0 is 1.
    minors: Vec<f64>,
}

impl DualGramData {
    pub fn from_frame(frame: &DualFrame) -> Result<Self> {
        let rho = HermitianMatrix::identity(frame.dim());
        Self::build(frame.dual_gram.clone(), rho)
    }

    pub fn from_vectors(rho: &HermitianMatrix, vectors: &[Vec<C64>]) -> Result<Self> {
        let rp = pinv(rho)?;
        let mapped: Vec<Vec<C64>> = vectors.iter().map(|v| rp.mul_vec(v)).collect();
        let a = HermitianMatrix::from_fn(vectors.len(), |i, j| inner(&vectors[i], &mapped[j]));
        Self::build(a, rho.clone())
    }

    fn build(a_tilde: HermitianMatrix, rho: HermitianMatrix) -> Result<Self> {
        let n = a_tilde.dim();
        if n > MINOR_CAP {
            return Err(UsdError::TooManyStates { n, cap: MINOR_CAP });
        }
        let rows = a_tilde.rows();
        let minors = (0..1usize << n)
            .map(|mask| {
                let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let sub: Vec<Vec<C64>> = idx
                    .iter()
                    .map(|&i| idx.iter().map(|&j| rows[i][j]).collect())
                    .collect();
                cofactor_determinant(&sub).re
            })
            .collect();
        Ok(Self {
            a_tilde,
            rho,
            minors,
        })
    }

    pub fn len(&self) -> usize {
        self.a_tilde.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn minor(&self, subset: &[usize]) -> f64 {
        self.minors[subset.iter().fold(0, |m, &i| m | 1 << i)]
    }
}

/// Determinant by Laplace expansion along the first row.
fn cofactor_determinant(m: &[Vec<C64>]) -> C64 {
    match m.len() {
        0 => C64::new(1.0, 0.0),
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => (0..n)
            .map(|col| {
                let minor: Vec<Vec<C64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != col)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                m[0][col] * cofactor_determinant(&minor) * sign
            })
            .sum(),
    }
}

/// `1 − Σ D_i p_i + Σ_{i<j} D_ij p_i p_j − …` over the principal minors of `ã`.
pub fn lsd_manifold_residual(data: &DualGramData, p: &[f64]) -> Result<f64> {
    let n = data.len();
    if p.len() != n {
        return Err(UsdError::DimensionMismatch {
            expected: n,
            found: p.len(),
        });
    }
    Ok((0..1usize << n)
        .map(|mask| {
            let mut term = data.minors[mask];
            for (i, pi) in p.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    term *= -pi;
                }
            }
            term
        })
        .sum())
}

fn range_projection_residual(rho: &HermitianMatrix, v: &[C64]) -> Result<(f64, HermitianMatrix)> {
    let rp = pinv(rho)?;
    let projected = rho.mul_vec(&rp.mul_vec(v));
    Ok((norm(&sub_vec(v, &projected)), rp))
}

/// Largest `p` with `ρ − p|ψ⟩⟨ψ| ⪰ 0`: `1/⟨ψ|ρ⁺|ψ⟩`, or 0 when `ψ` leaves
/// the range of `ρ`.
pub fn lsd_single(rho: &HermitianMatrix, psi: &[C64]) -> Result<f64> {
    let len = norm(psi);
    if len == 0.0 {
        return Ok(0.0);
    }
    let (residual, rp) = range_projection_residual(rho, psi)?;
    if residual > 1e-8 * len {
        return Ok(0.0);
    }
    Ok(1.0 / rp.quadratic_form(psi))
}

/// Maximal weighted pair `(p1, p2)` for two vectors in the range of `ρ`.
pub fn lsd_pair(
    rho: &HermitianMatrix,
    v1: &[C64],
    v2: &[C64],
    eta1: f64,
    eta2: f64,
) -> Result<(f64, f64)> {
    let in_range = |v: &[C64]| -> Result<bool> {
        let (r, _) = range_projection_residual(rho, v)?;
        Ok(norm(v) > 0.0 && r <= 1e-8 * norm(v))
    };
    match (in_range(v1)?, in_range(v2)?) {
        (true, true) => {}
        (false, false) => return Ok((0.0, 0.0)),
        (true, false) => return Ok((lsd_single(rho, v1)?, 0.0)),
        (false, true) => return Ok((0.0, lsd_single(rho, v2)?)),
    }
    let data = DualGramData::from_vectors(rho, &[v1.to_vec(), v2.to_vec()])?;
    let a = &data.a_tilde;
    let p = pair_from_entries(
        a.get(0, 0).re,
        a.get(1, 1).re,
        a.get(0, 1).norm(),
        eta1,
        eta2,
    )?;
    Ok((p[0], p[1]))
}

/// Weighted pair formula on the entries of a 2×2 `ã`; falls back to the
/// better axis point when the tangency leaves the quadrant.
pub fn pair_from_entries(a11: f64, a22: f64, a12: f64, eta1: f64, eta2: f64) -> Result<[f64; 2]> {
    let det = a11 * a22 - a12 * a12;
    if det <= 1e-12 * a11 * a22 {
        return Err(UsdError::CollinearDuals { determinant: det });
    }
    let axis1 = [1.0 / a11, 0.0];
    let axis2 = [0.0, 1.0 / a22];
    if eta1 <= 0.0 || eta2 <= 0.0 {
        return Ok(if eta1 >= eta2 { axis1 } else { axis2 });
    }
    let p1 = (a22 - (eta2 / eta1).sqrt() * a12) / det;
    let p2 = (a11 - (eta1 / eta2).sqrt() * a12) / det;
    if p1 >= -1e-12 && p2 >= -1e-12 {
        return Ok([p1.max(0.0), p2.max(0.0)]);
    }
    Ok(if eta1 / a11 >= eta2 / a22 {
        axis1
    } else {
        axis2
    })
}

/// Probabilities `1/(1 + a(n − 1))` for reciprocal states with unit norm and
/// all mutual overlaps `a`.
pub fn solve_lsd_equiangular_dual(n: usize, a: f64) -> Result<ProbabilityVector> {
    if n == 0 {
        return Err(UsdError::InvalidArgument("need at least one state".into()));
    }
    if !(0.0..1.0).contains(&a) {
        return Err(UsdError::InvalidOverlap(a));
    }
    ProbabilityVector::new(vec![1.0 / (1.0 + a * (n as f64 - 1.0)); n])
}

// ---------------------------------------------------------------------------
// Three states

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum KktBranch {
    /// All three probabilities positive; the multiplier has rank one.
    FullRank,
    /// `p_zero = 0`, the other two from the weighted pair formula.
    Face { zero: usize },
    /// A single projective detection.
    Single { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktThreeAnalysis {
    pub p: Vec<f64>,
    pub branch: KktBranch,
    /// The full-rank closed form with every square root taken positive.
    pub closed_form: [f64; 3],
    /// Whether that closed form is feasible with nonnegative entries.
    pub closed_form_feasible: bool,
    /// The three row inequalities on `p`, evaluated at the returned point.
    pub row_window: bool,
}

pub fn solve_kkt_three(ensemble: &Ensemble) -> Result<PovmSolution> {
    let (region, a) = analyze_kkt_three(ensemble)?;
    PovmSolution::new(&region, ensemble.priors(), a.p, Method::Lsd, None)
}

pub fn analyze_kkt_three(ensemble: &Ensemble) -> Result<(Region, KktThreeAnalysis)> {
    if ensemble.len() != 3 {
        return Err(UsdError::DimensionMismatch {
            expected: 3,
            found: ensemble.len(),
        });
    }
    let region = Region::new(ensemble)?;
    let analysis = kkt_three_p(&region, ensemble.priors())?;
    Ok((region, analysis))
}

fn closed_form_three(a: &HermitianMatrix, eta: &[f64]) -> [f64; 3] {
    let e = |i: usize, j: usize| a.get(i - 1, j - 1);
    let r = |i: usize, j: usize| (eta[i - 1] / eta[j - 1]).sqrt();
    let den = e(1, 1) * (e(2, 2) * e(3, 3) - e(2, 3).norm_sqr())
        - e(1, 2) * (e(2, 1) * e(3, 3) - e(3, 1) * e(2, 3))
        + e(1, 3) * (e(2, 1) * e(3, 2) - e(2, 2) * e(3, 1));
    let n1 = (e(2, 2) * e(3, 3) - e(2, 3).norm_sqr())
        - (e(2, 1) * e(3, 3) - e(3, 1) * e(2, 3)) * r(2, 1)
        + (e(2, 1) * e(3, 2) - e(2, 2) * e(3, 1)) * r(3, 1);
    let n2 = (e(1, 1) * e(3, 3) - e(1, 3).norm_sqr())
        - (e(1, 2) * e(3, 3) - e(3, 2) * e(1, 3)) * r(1, 2)
        + (e(1, 1) * e(3, 2) - e(3, 1) * e(1, 2)) * r(3, 2);
    let n3 = (e(1, 1) * e(2, 2) - e(1, 2).norm_sqr())
        + (e(1, 2) * e(2, 3) - e(2, 2) * e(1, 3)) * r(1, 3)
        - (e(1, 1) * e(2, 3) - e(2, 1) * e(1, 3)) * r(2, 3);
    [(n1 / den).re, (n2 / den).re, (n3 / den).re]
}

fn row_window(a: &HermitianMatrix, p: &[f64]) -> bool {
    (0..3).all(|i| {
        let aii = a.get(i, i).re;
        let rhs: f64 = (0..3)
            .filter(|&j| j != i)
            .map(|j| p[j] * a.get(i, j).norm_sqr())
            .sum::<f64>()
            / aii;
        1.0 - p[i] * aii >= rhs - 1e-12
    }) && p.iter().all(|x| *x >= 0.0)
}

/// `G = ã⁻¹` for a 3×3 matrix, by the adjugate.
fn inverse3(a: &HermitianMatrix) -> Vec<Vec<C64>> {
    let m = a.rows();
    let cof = |r: usize, c: usize| {
        let rr: Vec<usize> = (0..3).filter(|&x| x != r).collect();
        let cc: Vec<usize> = (0..3).filter(|&x| x != c).collect();
        let d = m[rr[0]][cc[0]] * m[rr[1]][cc[1]] - m[rr[0]][cc[1]] * m[rr[1]][cc[0]];
        if (r + c).is_multiple_of(2) {
            d
        } else {
            -d
        }
    };
    let det: C64 = (0..3).map(|c| m[0][c] * cof(0, c)).sum();
    (0..3)
        .map(|i| (0..3).map(|j| cof(j, i) / det).collect())
        .collect()
}

/// `p_i = (G v)_i / v_i` with `v = (√η_1, √η_2 e^{iθ_2}, √η_3 e^{iθ_3})`.
fn phase_p(g: &[Vec<C64>], eta: &[f64], theta: [f64; 2]) -> ([C64; 3], [C64; 3]) {
    let v = [
        C64::new(eta[0].sqrt(), 0.0),
        C64::from_polar(eta[1].sqrt(), theta[0]),
        C64::from_polar(eta[2].sqrt(), theta[1]),
    ];
    let gv: Vec<C64> = (0..3)
        .map(|i| (0..3).map(|j| g[i][j] * v[j]).sum())
        .collect();
    ([gv[0] / v[0], gv[1] / v[1], gv[2] / v[2]], v)
}

/// Solves `Im p_2 = Im p_3 = 0` for the phases by damped Newton iterations
/// from a grid of starts. The imaginary part of `p_1` then vanishes too,
/// since `Σ η_i p_i = v†Gv` is real.
fn phase_solutions(g: &[Vec<C64>], eta: &[f64]) -> Vec<[f64; 3]> {
    let scale = g.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for s2 in 0..PHASE_STARTS {
        for s3 in 0..PHASE_STARTS {
            let step = std::f64::consts::TAU / PHASE_STARTS as f64;
            let mut th = [s2 as f64 * step, s3 as f64 * step];
            let mut mu = 1e-6;
            let resid = |th: [f64; 2]| {
                let (p, _) = phase_p(g, eta, th);
                [p[1].im, p[2].im]
            };
            let mut f = resid(th);
            for _ in 0..60 {
                if f[0].abs().max(f[1].abs()) <= 1e-15 * scale {
                    break;
                }
                let (p, v) = phase_p(g, eta, th);
                // d p_i / d θ_m: off-diagonal term for m ≠ i, −i(p_i − G_ii) for m = i.
                let dp = |i: usize, m: usize| -> C64 {
                    if i == m {
                        -C64::i() * (p[i] - g[i][i])
                    } else {
                        C64::i() * g[i][m] * v[m] / v[i]
                    }
                };
                let j = [[dp(1, 1).im, dp(1, 2).im], [dp(2, 1).im, dp(2, 2).im]];
                let jtj = [
                    j[0][0] * j[0][0] + j[1][0] * j[1][0] + mu,
                    j[0][0] * j[0][1] + j[1][0] * j[1][1],
                    j[0][1] * j[0][0] + j[1][1] * j[1][0],
                    j[0][1] * j[0][1] + j[1][1] * j[1][1] + mu,
                ];
                let jtf = [
                    j[0][0] * f[0] + j[1][0] * f[1],
                    j[0][1] * f[0] + j[1][1] * f[1],
                ];
                let Some(d) = solve_real(&jtj, &jtf) else {
                    break;
                };
                let trial = [th[0] - d[0], th[1] - d[1]];
                let ft = resid(trial);
                if ft[0].hypot(ft[1]) < f[0].hypot(f[1]) {
                    th = trial;
                    f = ft;
                    mu = (mu * 0.3).max(1e-15);
                } else {
                    mu *= 10.0;
                    if mu > 1e6 {
                        break;
                    }
                }
            }
            if f[0].abs().max(f[1].abs()) <= 1e-11 * scale.max(1.0) {
                let (p, _) = phase_p(g, eta, th);
                out.push([p[0].re, p[1].re, p[2].re]);
            }
        }
    }
    out
}

fn kkt_three_p(region: &Region, eta: &[f64]) -> Result<KktThreeAnalysis> {
    let a = &region.frame().dual_gram;
    let positive = eta.iter().all(|e| *e > 0.0);
    let closed_form = if positive {
        closed_form_three(a, eta)
    } else {
        [f64::NAN; 3]
    };

    let mut candidates: Vec<(Vec<f64>, KktBranch)> = Vec::new();
    if positive {
        candidates.push((closed_form.to_vec(), KktBranch::FullRank));
        let g = inverse3(a);
        for p in phase_solutions(&g, eta) {
            candidates.push((p.to_vec(), KktBranch::FullRank));
        }
    }
    for zero in 0..3 {
        let (i, j) = match zero {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        if let Ok(pair) = pair_from_entries(
            a.get(i, i).re,
            a.get(j, j).re,
            a.get(i, j).norm(),
            eta[i],
            eta[j],
        ) {
            let mut p = vec![0.0; 3];
            p[i] = pair[0];
            p[j] = pair[1];
            candidates.push((p, KktBranch::Face { zero }));
        }
    }
    for index in 0..3 {
        let mut p = vec![0.0; 3];
        p[index] = 1.0 / a.get(index, index).re;
        candidates.push((p, KktBranch::Single { index }));
    }

    let admissible = |p: &[f64]| -> Result<bool> {
        Ok(p.iter()
            .all(|x| x.is_finite() && *x >= -1e-12 && *x <= 1.0 + 1e-12)
            && region.is_feasible(&clamp(p))?)
    };
    let closed_form_feasible = positive && admissible(&closed_form)?;
    let mut best: Option<(Vec<f64>, KktBranch)> = None;
    for (p, branch) in candidates {
        if !admissible(&p)? {
            continue;
        }
        let p = clamp(&p);
        if best
            .as_ref()
            .is_none_or(|(b, _)| better_candidate(&p, b, eta))
        {
            best = Some((p, branch));
        }
    }
    let (p, branch) = best.expect("single projective detections are always feasible");
    let row_window = row_window(a, &p);
    Ok(KktThreeAnalysis {
        p,
        branch,
        closed_form,
        closed_form_feasible,
        row_window,
    })
}

fn clamp(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

/// Dispatches on the number of states: one, two (weighted pair), three
/// (KKT case analysis), or more with equal priors and a dual Gram matrix that
/// is equiangular up to phases.
pub fn solve_lsd(ensemble: &Ensemble) -> Result<PovmSolution> {
    let region = Region::new(ensemble)?;
    let eta = ensemble.priors();
    let a = &region.frame().dual_gram;
    let p = match ensemble.len() {
        1 => vec![1.0 / a.get(0, 0).re],
        2 => pair_from_entries(
            a.get(0, 0).re,
            a.get(1, 1).re,
            a.get(0, 1).norm(),
            eta[0],
            eta[1],
        )?
        .to_vec(),
        3 => kkt_three_p(&region, eta)?.p,
        n => {
            let equal = eta.iter().all(|e| (e - eta[0]).abs() <= 1e-12);
            if equal && is_gauge_equiangular(a, 1e-10) {
                vec![1.0 / a.max_eigenvalue()?; n]
            } else {
                return Err(UsdError::Unsupported(format!(
                    "decomposition solver handles {n} states only with equal priors and equiangular duals"
                )));
            }
        }
    };
    PovmSolution::new(&region, eta, p, Method::Lsd, None)
}

// ---------------------------------------------------------------------------
// Optimality certificate

/// Checks the KKT conditions at `solution`: there must be `X ⪰ 0` supported
/// on the kernel of `Π₀` with `⟨ψ̃_i|X|ψ̃_i⟩ = η_i` where `p_i > 0` and
/// `≥ η_i` where `p_i = 0`.
pub fn kkt_certificate(ensemble: &Ensemble, solution: &PovmSolution) -> bool {
    match Region::new(ensemble) {
        Ok(region) => kkt_certificate_duals(
            &region.frame().reciprocal_states,
            ensemble.priors(),
            &solution.p,
        ),
        Err(_) => false,
    }
}

/// The same certificate stated directly on reciprocal vectors.
pub fn kkt_certificate_duals(duals: &[Vec<C64>], eta: &[f64], p: &[f64]) -> bool {
    if duals.is_empty() || duals.len() != eta.len() || p.len() != eta.len() {
        return false;
    }
    if p.iter().any(|x| *x < -1e-12) {
        return false;
    }
    let d = duals[0].len();
    let pi0 = HermitianMatrix::identity(d).sub(&HermitianMatrix::outer_sum(d, duals, p));
    let Ok(eig) = pi0.eig() else { return false };
    if eig.values[0] < -1e-9 {
        return false;
    }
    let kernel: Vec<&Vec<C64>> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(l, _)| **l <= KKT_TOL)
        .map(|(_, v)| v)
        .collect();
    if kernel.is_empty() {
        return false;
    }
    // b_i = K† ψ̃_i
    let b: Vec<Vec<C64>> = duals
        .iter()
        .map(|psi| kernel.iter().map(|k| inner(k, psi)).collect())
        .collect();
    let active: Vec<bool> = p.iter().map(|x| *x > 1e-9).collect();
    solve_kernel_multiplier(&b, eta, &active).is_some_and(|r| r <= KKT_TOL)
}

/// Levenberg–Marquardt on `M = L L†` for the multiplier conditions; returns
/// the smallest max-residual reached over a few deterministic starts.
fn solve_kernel_multiplier(b: &[Vec<C64>], eta: &[f64], active: &[bool]) -> Option<f64> {
    let k = b[0].len();
    let n = b.len();
    let params = 2 * k * k;
    let residuals = |x: &[f64]| -> (Vec<f64>, Vec<Vec<f64>>) {
        let l = |a: usize, c: usize| C64::new(x[2 * (a * k + c)], x[2 * (a * k + c) + 1]);
        let mut r = vec![0.0; n];
        let mut jac = vec![vec![0.0; params]; n];
        for i in 0..n {
            // u = L† b_i
            let u: Vec<C64> = (0..k)
                .map(|c| (0..k).map(|a| l(a, c).conj() * b[i][a]).sum())
                .collect();
            let q: f64 = u.iter().map(|z| z.norm_sqr()).sum();
            let raw = q - eta[i];
            let counted = active[i] || raw < 0.0;
            r[i] = if counted { raw } else { 0.0 };
            if counted {
                for a in 0..k {
                    for c in 0..k {
                        let z = u[c].conj() * b[i][a];
                        jac[i][2 * (a * k + c)] = 2.0 * z.re;
                        jac[i][2 * (a * k + c) + 1] = 2.0 * z.im;
                    }
                }
            }
        }
        (r, jac)
    };
    let norm2 = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let max_abs = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let targets: Vec<f64> = (0..n)
        .filter(|&i| active[i])
        .map(|i| eta[i] / b[i].iter().map(|z| z.norm_sqr()).sum::<f64>().max(1e-300))
        .collect();
    let s = if targets.is_empty() {
        1.0
    } else {
        (targets.iter().sum::<f64>() / targets.len() as f64).sqrt()
    };
    let starts: Vec<Vec<f64>> = (0..4)
        .map(|variant| {
            let mut x = vec![0.0; params];
            for a in 0..k {
                for c in 0..k {
                    let (re, im) = match variant {
                        0 => (if a == c { 1.0 } else { 0.0 }, 0.0),
                        1 => (
                            if a == c {
                                (a + 1) as f64 / k as f64
                            } else {
                                0.0
                            },
                            0.0,
                        ),
                        2 => (
                            if a >= c { 1.0 } else { 0.0 },
                            if a > c { 0.3 } else { 0.0 },
                        ),
                        _ => (
                            if a == c { 1.0 } else { 0.2 },
                            if a < c { -0.2 } else { 0.1 },
                        ),
                    };
                    x[2 * (a * k + c)] = s * re;
                    x[2 * (a * k + c) + 1] = s * im;
                }
            }
            x
        })
        .collect();

    let mut best: Option<f64> = None;
    for mut x in starts {
        let (mut r, mut jac) = residuals(&x);
        let mut mu = 1e-3;
        for _ in 0..300 {
            if max_abs(&r) <= 1e-14 {
                break;
            }
            // Minimum-norm damped step: δ = −Jᵀ (J Jᵀ + μI)⁻¹ r.
            let mut jjt = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    jjt[i * n + j] = jac[i].iter().zip(&jac[j]).map(|(a, b)| a * b).sum::<f64>()
                        + if i == j { mu } else { 0.0 };
                }
            }
            let Some(y) = solve_real(&jjt, &r) else { break };
            let trial: Vec<f64> = (0..params)
                .map(|t| x[t] - (0..n).map(|i| jac[i][t] * y[i]).sum::<f64>())
                .collect();
            let (rt, jt) = residuals(&trial);
            if norm2(&rt) < norm2(&r) {
                x = trial;
                r = rt;
                jac = jt;
                mu = (mu * 0.3).max(1e-15);
            } else {
                mu *= 4.0;
                if mu > 1e8 {
                    break;
                }
            }
        }
        let m = max_abs(&r);
        best = Some(best.map_or(m, |b: f64| b.min(m)));
        if m <= 1e-12 {
            break;
        }
    }
    best
}
