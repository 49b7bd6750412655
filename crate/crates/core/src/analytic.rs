//! Closed-form optimal measurements.
//!
//! The three-state solver collects every candidate contact point (interior
//! tangencies, tangencies on the coordinate faces, single-state vertices),
//! discards infeasible ones and keeps the best. Interior tangencies come from
//! the gradient-matching system
//!
//! ```text
//! x_j x_k − |a_jk|² = Λ η_i,   x_i = 1 − p_i,
//! ```
//!
//! whose solutions satisfy `x_i = √(c_j c_k / c_i)` with `c_i = |a_jk|² + Λη_i`.
//! `Λ` is fixed by requiring the point to lie on the boundary
//! `det(G − P) = 0`.

use serde::{Deserialize, Serialize};

use crate::ensemble::{reciprocal_states, DualFrame, Ensemble, StateVector};
use crate::error::{Result, UsdError};
use crate::feasibility::Region;
use crate::linalg::{c, inner, norm, sub_vec, HermitianMatrix, C64};
use crate::solution::{better_candidate, Method, PovmSolution};

const LAMBDA_SCAN_SAMPLES: usize = 4000;
const UNITARY_TOL: f64 = 1e-10;
const GU_TOL: f64 = 1e-9;

/// Optimal measurement for `N ≤ 3`, or for larger ensembles with equal
/// priors and equiangular (up to phases) overlaps.
pub fn solve_analytic(ensemble: &Ensemble) -> Result<PovmSolution> {
    let region = Region::new(ensemble)?;
    let p = analytic_p(&region, ensemble.priors())?;
    let multiplier = p.1;
    PovmSolution::new(
        &region,
        ensemble.priors(),
        p.0,
        Method::Analytic,
        multiplier,
    )
}

fn analytic_p(region: &Region, eta: &[f64]) -> Result<(Vec<f64>, Option<f64>)> {
    let n = eta.len();
    if n == 1 {
        return Ok((vec![1.0], None));
    }
    if eta.contains(&0.0) {
        return reduced_p(region.frame(), eta).map(|p| (p, None));
    }
    match n {
        2 => {
            let (p, l) = two_state_p(region.frame().gram.get(0, 1).norm(), eta[0], eta[1]);
            Ok((p.to_vec(), l))
        }
        3 => Ok(three_state_p(region, eta)?.into_pair()),
        _ => {
            let g = &region.frame().gram;
            if equal_priors(eta) && is_gauge_equiangular(g, 1e-10) {
                let p = g.min_eigenvalue()?;
                Ok((vec![p; n], None))
            } else {
                Err(UsdError::Unsupported(format!(
                    "no closed form for {n} states without equiangular symmetry; use the lp or oracle solvers"
                )))
            }
        }
    }
}

/// Drops zero-prior states by fixing their `p` to zero. The remaining states
/// see the Schur complement `M = (G̃_SS)⁻¹`, renormalised to unit diagonal.
fn reduced_p(frame: &DualFrame, eta: &[f64]) -> Result<Vec<f64>> {
    let keep: Vec<usize> = (0..eta.len()).filter(|&i| eta[i] > 0.0).collect();
    let m = crate::ensemble::pinv(&frame.dual_gram.principal_submatrix(&keep))?;
    let d: Vec<f64> = (0..keep.len()).map(|i| m.get(i, i).re).collect();
    let inv_sqrt: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let g_hat = m.congruence_diag(&inv_sqrt);
    let weights: Vec<f64> = keep.iter().zip(&d).map(|(&i, di)| eta[i] * di).collect();
    let total: f64 = weights.iter().sum();
    let reduced = Ensemble::from_gram(&g_hat, weights.iter().map(|w| w / total).collect())?;
    let sub = Region::new(&reduced)?;
    let (p_hat, _) = analytic_p(&sub, reduced.priors())?;
    let mut p = vec![0.0; eta.len()];
    for (k, &i) in keep.iter().enumerate() {
        p[i] = p_hat[k] * d[k];
    }
    Ok(p)
}

fn equal_priors(eta: &[f64]) -> bool {
    eta.iter().all(|e| (e - eta[0]).abs() <= 1e-12)
}

/// True when `m = αI + β w w†` with `|w_i| = 1`: equal diagonal, equal
/// off-diagonal magnitudes, and every triple product `m_ij m_jk m_ki` equal
/// to the same real number.
pub fn is_gauge_equiangular(m: &HermitianMatrix, tol: f64) -> bool {
    let n = m.dim();
    let scale = m.frobenius_norm().max(1.0);
    let d0 = m.get(0, 0).re;
    if (0..n).any(|i| (m.get(i, i).re - d0).abs() > tol * scale) {
        return false;
    }
    if n < 2 {
        return true;
    }
    let b = m.get(0, 1).norm();
    for i in 0..n {
        for j in i + 1..n {
            if (m.get(i, j).norm() - b).abs() > tol * scale {
                return false;
            }
        }
    }
    if n < 3 || b <= tol * scale {
        return true;
    }
    let t0 = m.get(0, 1) * m.get(1, 2) * m.get(2, 0);
    if t0.im.abs() > tol * scale.powi(3) {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let t = m.get(i, j) * m.get(j, k) * m.get(k, i);
                if (t - t0).norm() > tol * scale.powi(3) {
                    return false;
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Two states

/// Piecewise optimum for overlap magnitude `a` and positive priors.
fn two_state_p(a: f64, eta1: f64, eta2: f64) -> ([f64; 2], Option<f64>) {
    if a == 0.0 {
        return ([1.0, 1.0], None);
    }
    let r = (eta2 / eta1).sqrt();
    if r < a {
        ([1.0 - a * a, 0.0], None)
    } else if r > 1.0 / a {
        ([0.0, 1.0 - a * a], None)
    } else {
        let p1 = 1.0 - r * a;
        let p2 = 1.0 - a / r;
        ([p1, p2], Some(-a / (eta1 * eta2).sqrt()))
    }
}

pub fn solve_two_state(ensemble: &Ensemble) -> Result<PovmSolution> {
    if ensemble.len() != 2 {
        return Err(UsdError::DimensionMismatch {
            expected: 2,
            found: ensemble.len(),
        });
    }
    let eta = ensemble.priors();
    if let Some(index) = eta.iter().position(|e| *e == 0.0) {
        return Err(UsdError::DegeneratePrior { index });
    }
    let region = Region::new(ensemble)?;
    let (p, l) = two_state_p(region.frame().gram.get(0, 1).norm(), eta[0], eta[1]);
    PovmSolution::new(&region, eta, p.to_vec(), Method::Analytic, l)
}

// ---------------------------------------------------------------------------
// Three states

/// Where the three-state optimum was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ContactKind {
    /// Interior tangency with multiplier `Λ`.
    Interior { lambda: f64 },
    /// Tangency on the face `p_zero = 0`.
    Face { zero: usize },
    /// Only one state is ever detected.
    Vertex { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeStateAnalysis {
    pub p: Vec<f64>,
    pub contact: ContactKind,
    /// The eight multipliers of the real-overlap closed form, in table order;
    /// `None` when the overlaps cannot be made real by rephasing.
    pub candidate_lambdas: Option<[f64; 8]>,
    /// Roots of the boundary condition found by scanning `Λ`.
    pub scanned_lambdas: Vec<f64>,
}

impl ThreeStateAnalysis {
    fn into_pair(self) -> (Vec<f64>, Option<f64>) {
        let l = match self.contact {
            ContactKind::Interior { lambda } => Some(lambda),
            _ => None,
        };
        (self.p, l)
    }
}

pub fn solve_three_state(ensemble: &Ensemble) -> Result<PovmSolution> {
    let (region, analysis) = analyze_three_state(ensemble)?;
    let (p, l) = analysis.into_pair();
    PovmSolution::new(&region, ensemble.priors(), p, Method::Analytic, l)
}

pub fn analyze_three_state(ensemble: &Ensemble) -> Result<(Region, ThreeStateAnalysis)> {
    if ensemble.len() != 3 {
        return Err(UsdError::DimensionMismatch {
            expected: 3,
            found: ensemble.len(),
        });
    }
    if let Some(index) = ensemble.priors().iter().position(|e| *e == 0.0) {
        return Err(UsdError::DegeneratePrior { index });
    }
    let region = Region::new(ensemble)?;
    let analysis = three_state_p(&region, ensemble.priors())?;
    Ok((region, analysis))
}

/// Pairs `(j, k)` opposite to each index `i`.
const OPPOSITE: [(usize, usize); 3] = [(1, 2), (0, 2), (0, 1)];

/// The eight candidate multipliers for real overlaps `a12, a13 ≥ 0` and a
/// signed `a23`.
pub fn lambda_candidates(a12: f64, a13: f64, a23: f64, eta: [f64; 3]) -> [f64; 8] {
    let s12 = (eta[0] * eta[1]).sqrt();
    let s123 = (eta[0] * eta[1] * eta[2]).sqrt();
    let (r1, r2) = (eta[0].sqrt(), eta[1].sqrt());
    let u = a13 * a23 / s12;
    let plus = a12 * (a13 * r1 + a23 * r2) / s123;
    let minus = a12 * (a13 * r1 - a23 * r2) / s123;
    [
        0.0,
        u - plus,
        -a23 * a23 / eta[0],
        u + plus,
        -a13 * a13 / eta[1],
        -u - minus,
        -a12 * a12 / eta[2],
        -u + minus,
    ]
}

/// `p(Λ)` from `x_i = √(c_j c_k / c_i)`; `None` when some `c_i ≤ 0`.
fn p_from_lambda(opp_sq: [f64; 3], eta: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let cc: Vec<f64> = (0..3).map(|i| opp_sq[i] + lambda * eta[i]).collect();
    if cc.iter().any(|x| !(*x > 0.0)) {
        return None;
    }
    Some(
        (0..3)
            .map(|i| {
                let (j, k) = OPPOSITE[i];
                1.0 - (cc[j] * cc[k] / cc[i]).sqrt()
            })
            .collect(),
    )
}

/// Boundary condition along the tangency curve, in rephasing-invariant form.
fn tangency_residual(opp_sq: [f64; 3], eta: &[f64], re_triple: f64, lambda: f64) -> f64 {
    let cc: Vec<f64> = (0..3).map(|i| opp_sq[i] + lambda * eta[i]).collect();
    let root = (cc[0] * cc[1] * cc[2]).sqrt();
    let weighted: f64 = (0..3)
        .map(|i| {
            let (j, k) = OPPOSITE[i];
            eta[i] * cc[j] * cc[k]
        })
        .sum();
    -2.0 * root + lambda * weighted / root + 2.0 * re_triple
}

fn scan_lambda_roots(opp_sq: [f64; 3], eta: &[f64], re_triple: f64) -> Vec<f64> {
    let upper = (0..3)
        .map(|i| (1.0 - opp_sq[i]) / eta[i])
        .fold(f64::INFINITY, f64::min);
    if !(upper > 0.0) {
        return vec![];
    }
    let mut grid: Vec<f64> = (1..=LAMBDA_SCAN_SAMPLES)
        .map(|k| upper * k as f64 / LAMBDA_SCAN_SAMPLES as f64)
        .collect();
    // Geometric refinement near zero, where roots crowd for small overlaps.
    grid.extend((0..200).map(|k| upper * 10f64.powf(-12.0 + 12.0 * k as f64 / 200.0)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let f = |l: f64| tangency_residual(opp_sq, eta, re_triple, l);
    let mut roots = Vec::new();
    let mut prev = (grid[0], f(grid[0]));
    for &l in &grid[1..] {
        let v = f(l);
        if v == 0.0 {
            roots.push(l);
        } else if prev.1.is_finite() && v.is_finite() && prev.1 * v < 0.0 {
            let (mut lo, mut hi, flo) = (prev.0, l, prev.1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) * flo > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = (l, v);
    }
    roots
}

fn three_state_p(region: &Region, eta: &[f64]) -> Result<ThreeStateAnalysis> {
    let g = &region.frame().gram;
    let opp_sq = [
        g.get(1, 2).norm_sqr(),
        g.get(0, 2).norm_sqr(),
        g.get(0, 1).norm_sqr(),
    ];
    let triple = g.get(0, 1) * g.get(1, 2) * g.get(2, 0);

    let mut candidates: Vec<(Vec<f64>, ContactKind)> = Vec::new();

    // Rephase so that a12, a13 ≥ 0; a23 is then real iff the triple product is.
    let (m12, m13) = (g.get(0, 1).norm(), g.get(0, 2).norm());
    let real_gauge = if m12 * m13 == 0.0 {
        Some(g.get(1, 2).norm())
    } else if triple.im.abs() <= 1e-12 * triple.norm().max(1e-300) {
        Some(triple.re / (m12 * m13))
    } else {
        None
    };
    let closed_form =
        real_gauge.map(|a23| lambda_candidates(m12, m13, a23, [eta[0], eta[1], eta[2]]));
    if let Some(ls) = closed_form {
        for l in ls {
            if let Some(p) = p_from_lambda(opp_sq, eta, l) {
                candidates.push((p, ContactKind::Interior { lambda: l }));
            }
        }
    }
    // Rank-one contact, Λ → 0⁺: x_i = √(c_j c_k / c_i), which is
    // |a_ij||a_ik| / |a_jk| when no overlap vanishes. A vanishing |a_jk|²
    // leaves c_i = Λη_i, so each x_i carries a power of Λ that decides
    // whether it tends to zero, stays finite or diverges.
    let vanishes = opp_sq.map(|a| a < 1e-24);
    let coef = |i: usize| if vanishes[i] { eta[i] } else { opp_sq[i] };
    let rank_one: Option<Vec<f64>> = (0..3)
        .map(|i| {
            let (j, k) = OPPOSITE[i];
            let order = vanishes[j] as i32 + vanishes[k] as i32 - vanishes[i] as i32;
            match order.cmp(&0) {
                std::cmp::Ordering::Greater => Some(1.0),
                std::cmp::Ordering::Less => None,
                std::cmp::Ordering::Equal => Some(1.0 - (coef(j) * coef(k) / coef(i)).sqrt()),
            }
        })
        .collect();
    if let Some(p) = rank_one {
        candidates.push((p, ContactKind::Interior { lambda: 0.0 }));
    }
    let scanned = scan_lambda_roots(opp_sq, eta, triple.re);
    for &l in &scanned {
        if let Some(p) = p_from_lambda(opp_sq, eta, l) {
            candidates.push((p, ContactKind::Interior { lambda: l }));
        }
    }

    // Faces p_k = 0: two-state problem on the Schur complement.
    for (k, &(i, j)) in OPPOSITE.iter().enumerate() {
        let gik = g.get(i, k);
        let gjk = g.get(j, k);
        let mii = 1.0 - gik.norm_sqr();
        let mjj = 1.0 - gjk.norm_sqr();
        let mij = (g.get(i, j) - gik * g.get(k, j)).norm();
        let place = |pi: f64, pj: f64| {
            let mut p = vec![0.0; 3];
            p[i] = pi;
            p[j] = pj;
            p
        };
        let yi = mij * (eta[j] / eta[i]).sqrt();
        let yj = mij * (eta[i] / eta[j]).sqrt();
        candidates.push((place(mii - yi, mjj - yj), ContactKind::Face { zero: k }));
        candidates.push((
            place(mii - mij * mij / mjj, 0.0),
            ContactKind::Face { zero: k },
        ));
        candidates.push((
            place(0.0, mjj - mij * mij / mii),
            ContactKind::Face { zero: k },
        ));
    }
    for index in 0..3 {
        let mut p = vec![0.0; 3];
        p[index] = 1.0 / region.frame().dual_gram.get(index, index).re;
        candidates.push((p, ContactKind::Vertex { index }));
    }

    let mut best: Option<(Vec<f64>, ContactKind)> = None;
    for (p, kind) in candidates {
        if p.iter()
            .any(|x| !x.is_finite() || *x < -1e-12 || *x > 1.0 + 1e-12)
        {
            continue;
        }
        let p: Vec<f64> = p.into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
        if !region.is_feasible(&p)? {
            continue;
        }
        if best
            .as_ref()
            .is_none_or(|(b, _)| better_candidate(&p, b, eta))
        {
            best = Some((p, kind));
        }
    }
    let (p, contact) = best.expect("single-state vertices are always feasible");
    Ok(ThreeStateAnalysis {
        p,
        contact,
        candidate_lambdas: closed_form,
        scanned_lambdas: scanned,
    })
}

// ---------------------------------------------------------------------------
// Symmetric families

/// Equal priors, all overlaps equal to `s`.
pub fn solve_equiangular(n: usize, s: f64) -> Result<PovmSolution> {
    if n < 2 {
        return Err(UsdError::InvalidArgument(format!(
            "need at least two states, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&s) {
        return Err(UsdError::InvalidOverlap(s));
    }
    let ensemble = equiangular_ensemble(n, s)?;
    let region = Region::new(&ensemble)?;
    PovmSolution::new(
        &region,
        ensemble.priors(),
        vec![1.0 - s; n],
        Method::Analytic,
        None,
    )
}

pub fn equiangular_gram(n: usize, s: f64) -> HermitianMatrix {
    HermitianMatrix::from_fn(n, |i, j| c(if i == j { 1.0 } else { s }, 0.0))
}

pub fn equiangular_ensemble(n: usize, s: f64) -> Result<Ensemble> {
    Ensemble::from_gram(&equiangular_gram(n, s), vec![1.0 / n as f64; n])
}

#[derive(Debug, Clone)]
pub struct GuSolution {
    pub solution: PovmSolution,
    pub ensemble: Ensemble,
    /// `ψ̃ = (ΦΦ*)⁺ ψ`; the reciprocal states are `U_i ψ̃`.
    pub dual_generator: Vec<C64>,
}

fn apply(u: &[Vec<C64>], v: &[C64]) -> Vec<C64> {
    u.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Geometrically uniform states `U_i ψ` with equal priors.
pub fn solve_gu(generator: &StateVector, group: &[Vec<Vec<C64>>]) -> Result<GuSolution> {
    let d = generator.dim();
    if group.is_empty() {
        return Err(UsdError::InvalidArgument("group has no elements".into()));
    }
    for (index, u) in group.iter().enumerate() {
        if u.len() != d || u.iter().any(|row| row.len() != d) {
            return Err(UsdError::DimensionMismatch {
                expected: d,
                found: u.len(),
            });
        }
        let mut deviation: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let v: C64 = (0..d).map(|k| u[k][i].conj() * u[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((v - c(target, 0.0)).norm());
            }
        }
        if deviation > UNITARY_TOL {
            return Err(UsdError::NotUnitary { index, deviation });
        }
    }
    let states = group
        .iter()
        .map(|u| StateVector::normalized(apply(u, generator.amplitudes())))
        .collect::<Result<Vec<_>>>()?;
    let ensemble = Ensemble::with_equal_priors(states)?;
    let frame = reciprocal_states(&ensemble)?;
    let s = crate::ensemble::frame_operator(&ensemble.state_vectors());
    let dual_generator = crate::ensemble::pinv(&s)?.mul_vec(generator.amplitudes());
    let deviation = group
        .iter()
        .zip(&frame.reciprocal_states)
        .map(|(u, dual)| norm(&sub_vec(&apply(u, &dual_generator), dual)))
        .fold(0.0, f64::max);
    if deviation > GU_TOL {
        return Err(UsdError::NotGeometricallyUniform { deviation });
    }
    let p = 1.0 / frame.dual_gram.max_eigenvalue()?;
    let n = group.len();
    let region = Region::from_frame(frame, crate::ensemble::Tolerances::default().psd);
    let solution = PovmSolution::new(&region, ensemble.priors(), vec![p; n], Method::Epm, None)?;
    Ok(GuSolution {
        solution,
        ensemble,
        dual_generator,
    })
}

// ---------------------------------------------------------------------------
// Equal-probability measurement priors

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpmPriors {
    /// Priors for which the equal-probability point is optimal.
    pub priors: [f64; 3],
    /// The common detection probability, `λ_min(G)`.
    pub p: f64,
    /// Closed-form priors, and whether they verify.
    pub closed_form: [f64; 3],
    pub closed_form_verified: bool,
    /// The same form with the linear `a23` terms squared.
    pub symmetrized: [f64; 3],
    pub symmetrized_verified: bool,
}

/// Priors making the equal-probability point optimal for real overlaps
/// `a12, a13, a23`.
///
/// At `p = λ_min(G)` the gradient-matching conditions read
/// `cof_ii(G − pI) = Λ η_i`, so the priors are proportional to the diagonal
/// cofactors. When all cofactors vanish (a doubly degenerate minimum, which
/// forces equal overlaps) the equal priors are returned.
pub fn epm_priors(a12: f64, a13: f64, a23: f64) -> Result<EpmPriors> {
    for a in [a12, a13, a23] {
        if !(0.0..1.0).contains(&a) {
            return Err(UsdError::InvalidOverlap(a));
        }
    }
    let g = HermitianMatrix::from_fn(3, |i, j| match (i.min(j), i.max(j)) {
        (0, 1) => c(a12, 0.0),
        (0, 2) => c(a13, 0.0),
        (1, 2) => c(a23, 0.0),
        _ => c(1.0, 0.0),
    });
    let p = g.min_eigenvalue()?;
    if p <= 1e-10 {
        return Err(UsdError::LinearlyDependent { min_eigenvalue: p });
    }
    let x = 1.0 - p;
    let cof = [x * x - a23 * a23, x * x - a13 * a13, x * x - a12 * a12];
    let sum: f64 = cof.iter().map(|v| v.max(0.0)).sum();
    let priors = if sum <= 1e-12 {
        [1.0 / 3.0; 3]
    } else {
        [
            cof[0].max(0.0) / sum,
            cof[1].max(0.0) / sum,
            cof[2].max(0.0) / sum,
        ]
    };

    let closed_form = closed_form_epm(a12, a13, a23);
    let symmetrized = closed_form_epm(a12, a13, a23 * a23);
    let verify = |eta: [f64; 3]| epm_is_optimal(&g, eta, p).unwrap_or(false);
    if !verify(priors) {
        return Err(UsdError::NoEpmSolution(format!(
            "cofactor priors {priors:?} do not make p = {p} optimal"
        )));
    }
    Ok(EpmPriors {
        priors,
        p,
        closed_form,
        closed_form_verified: verify(closed_form),
        symmetrized,
        symmetrized_verified: verify(symmetrized),
    })
}

fn closed_form_epm(a12: f64, a13: f64, a23: f64) -> [f64; 3] {
    let (s12, s13) = (a12 * a12, a13 * a13);
    let den = 3.0 - 2.0 * s12 - s13 - s12 * s13 - 2.0 * a23 + 2.0 * a23 * s12 + s12 * s12;
    let e1 = (s12 - 1.0).powi(2) / den;
    let e2 = (1.0 - s12 - s13 + s12 * s13) / den;
    [e1, e2, 1.0 - e1 - e2]
}

/// Re-solves the weighted problem and checks that the equal point `p·1`
/// attains the optimum.
fn epm_is_optimal(g: &HermitianMatrix, eta: [f64; 3], p: f64) -> Result<bool> {
    if eta.iter().any(|e| !(*e > 0.0)) || ((eta.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
        return Ok(false);
    }
    let ensemble = Ensemble::from_gram(g, eta.to_vec())?;
    let region = Region::new(&ensemble)?;
    let best = three_state_p(&region, &eta)?;
    let p_opt: f64 = best.p.iter().zip(eta).map(|(x, e)| x * e).sum();
    Ok(p_opt - p <= 1e-9)
}

// ---------------------------------------------------------------------------
// Bloch sphere

/// Distance from the centre of the Bloch sphere to the chord joining two
/// pure-state Bloch vectors; equals the minimal failure probability of the
/// pair at equal priors.
pub fn bloch_chord_q(n1: [f64; 3], n2: [f64; 3]) -> Result<f64> {
    for v in [n1, n2] {
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (len - 1.0).abs() > 1e-9 {
            return Err(UsdError::NonUnitBloch(len));
        }
    }
    let d: Vec<f64> = (0..3).map(|k| n2[k] - n1[k]).collect();
    let dd: f64 = d.iter().map(|x| x * x).sum();
    let t = if dd == 0.0 {
        0.0
    } else {
        (-(0..3).map(|k| n1[k] * d[k]).sum::<f64>() / dd).clamp(0.0, 1.0)
    };
    Ok((0..3)
        .map(|k| (n1[k] + t * d[k]).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Pure qubit state `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` with Bloch vector `n`.
pub fn bloch_state(n: [f64; 3]) -> Result<StateVector> {
    let len = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (len - 1.0).abs() > 1e-9 {
        return Err(UsdError::NonUnitBloch(len));
    }
    let theta = n[2].clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]);
    StateVector::new(vec![
        c((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ])
}

/// `|⟨ψ1|ψ2⟩|` of two qubit states.
pub fn qubit_overlap(a: &StateVector, b: &StateVector) -> f64 {
    inner(a.amplitudes(), b.amplitudes()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::random_ensemble;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real_state(v: &[f64]) -> StateVector {
        StateVector::from_real(v).unwrap()
    }

    fn pair(a: f64, eta: [f64; 2]) -> Ensemble {
        let g = HermitianMatrix::from_fn(2, |i, j| c(if i == j { 1.0 } else { a }, 0.0));
        Ensemble::from_gram(&g, eta.to_vec()).unwrap()
    }

    fn interior_triple() -> Ensemble {
        Ensemble::with_equal_priors(vec![
            real_state(&[1.0, 0.0, 0.0]),
            real_state(&[1.0, 2.0, 2.0]),
            real_state(&[1.0, 2.0, -2.0]),
        ])
        .unwrap()
    }

    fn face_triple() -> Ensemble {
        Ensemble::with_equal_priors(vec![
            real_state(&[1.0, 1.0, 1.0]),
            real_state(&[1.0, 1.0, 0.0]),
            real_state(&[0.0, 1.0, 1.0]),
        ])
        .unwrap()
    }

    /// Exhaustive search over a fine grid, independent of the closed forms.
    fn grid_q(ensemble: &Ensemble, r: usize) -> f64 {
        let region = Region::new(ensemble).unwrap();
        let n = ensemble.len();
        let eta = ensemble.priors();
        let step = 1.0 / (r - 1) as f64;
        let mut best: f64 = 0.0;
        let mut idx = vec![0usize; n];
        loop {
            let p: Vec<f64> = idx.iter().map(|&k| k as f64 * step).collect();
            if region.is_feasible(&p).unwrap() {
                best = best.max(p.iter().zip(eta).map(|(a, b)| a * b).sum());
            }
            let mut pos = 0;
            while pos < n {
                idx[pos] += 1;
                if idx[pos] < r {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
        1.0 - best
    }

    #[test]
    fn qubit_pair_equal_priors() {
        let e = Ensemble::with_equal_priors(vec![real_state(&[1.0, 0.0]), real_state(&[1.0, 1.0])])
            .unwrap();
        let s = solve_two_state(&e).unwrap();
        let want = (2.0 - 2f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(s.p[0], want, epsilon = 1e-12);
        assert_abs_diff_eq!(s.p[1], want, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q_fail, 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_pair_is_perfectly_distinguishable() {
        let s = solve_two_state(&pair(0.0, [0.8, 0.2])).unwrap();
        assert_eq!(s.p.to_vec(), vec![1.0, 1.0]);
        assert_abs_diff_eq!(s.q_fail, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn skewed_priors_switch_off_the_weak_state() {
        let s = solve_two_state(&pair(0.5, [0.9, 0.1])).unwrap();
        assert_abs_diff_eq!(s.p[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(s.p[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q_fail, 0.325, epsilon = 1e-12);
        assert!((s.q_fail - grid_q(&pair(0.5, [0.9, 0.1]), 1001)).abs() <= 2e-3);
    }

    #[test]
    fn zero_prior_is_rejected_by_two_state_solver() {
        let e = pair(0.3, [1.0, 0.0]);
        assert!(matches!(
            solve_two_state(&e),
            Err(UsdError::DegeneratePrior { index: 1 })
        ));
        let s = solve_analytic(&e).unwrap();
        assert_abs_diff_eq!(s.p[0], 1.0 - 0.09, epsilon = 1e-12);
        assert_eq!(s.p[1], 0.0);
    }

    #[test]
    fn three_state_example_interior_contact() {
        let s = solve_three_state(&interior_triple()).unwrap();
        assert_abs_diff_eq!(s.p[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.p[1], 7.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.p[2], 7.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q_fail, 10.0 / 27.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.multiplier.unwrap(), 1.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn three_state_example_face_contact() {
        let (_, a) = analyze_three_state(&face_triple()).unwrap();
        assert_eq!(a.contact, ContactKind::Face { zero: 0 });
        assert_abs_diff_eq!(a.p[0], 0.0);
        assert_abs_diff_eq!(a.p[1], 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.p[2], 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_overlaps_three_states() {
        let basis = |i: usize| {
            let mut v = [0.0; 3];
            v[i] = 1.0;
            real_state(&v)
        };
        let e = Ensemble::new(vec![basis(0), basis(1), basis(2)], vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(solve_three_state(&e).unwrap().p.to_vec(), vec![1.0; 3]);

        // The third state is orthogonal to a pair with overlap 1/2.
        let e = Ensemble::new(
            vec![
                real_state(&[1.0, 0.0, 0.0]),
                real_state(&[0.5, 0.75f64.sqrt(), 0.0]),
                real_state(&[0.0, 0.0, 1.0]),
            ],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        let s = solve_three_state(&e).unwrap();
        let ratio = 0.3f64 / 0.5;
        assert_abs_diff_eq!(s.p[0], 1.0 - 0.5 * ratio.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.p[1], 1.0 - 0.5 / ratio.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.p[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tabulated_multiplier_for_interior_contact() {
        let third = 1.0 / 3.0;
        let ls = lambda_candidates(third, third, 1.0 / 9.0, [third; 3]);
        assert_abs_diff_eq!(ls[7], 1.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ls[0], 0.0);
        assert_abs_diff_eq!(ls[2], -1.0 / 27.0, epsilon = 1e-14);
    }

    #[test]
    fn equal_overlaps_three_states() {
        let s = solve_analytic(&equiangular_ensemble(3, 0.4).unwrap()).unwrap();
        for p in s.p.iter() {
            assert_abs_diff_eq!(*p, 0.6, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(s.q_fail, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn equiangular_family() {
        let s = solve_equiangular(3, 0.0).unwrap();
        assert_eq!(s.p.to_vec(), vec![1.0; 3]);
        let s = solve_equiangular(4, 0.25).unwrap();
        assert_abs_diff_eq!(s.p[0], 0.75, epsilon = 1e-15);
        let vals = equiangular_gram(4, 0.25).eigenvalues().unwrap();
        for (v, w) in vals.iter().zip([0.75, 0.75, 0.75, 1.75]) {
            assert_abs_diff_eq!(*v, w, epsilon = 1e-12);
        }
        assert!(matches!(
            solve_equiangular(3, 1.0),
            Err(UsdError::InvalidOverlap(_))
        ));
        let dispatched = solve_analytic(&equiangular_ensemble(6, 0.3).unwrap()).unwrap();
        assert_abs_diff_eq!(dispatched.p[5], 0.7, epsilon = 1e-10);
    }

    fn diag(signs: [f64; 4]) -> Vec<Vec<C64>> {
        (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| c(if i == j { signs[i] } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn geometrically_uniform_example() {
        let psi = real_state(&[2.0, 2.0, 1.0, 3.0]);
        let group = vec![
            diag([1.0, 1.0, 1.0, 1.0]),
            diag([1.0, -1.0, 1.0, -1.0]),
            diag([1.0, 1.0, -1.0, -1.0]),
            diag([1.0, -1.0, -1.0, 1.0]),
        ];
        let gu = solve_gu(&psi, &group).unwrap();
        for p in gu.solution.p.iter() {
            assert_abs_diff_eq!(*p, 2.0 / 9.0, epsilon = 1e-12);
        }
        let k = 1.0 / (4.0 * 2f64.sqrt());
        for (v, w) in gu.dual_generator.iter().zip([3.0, 3.0, 6.0, 2.0]) {
            assert_abs_diff_eq!(v.re, w * k, epsilon = 1e-12);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
        }
        let trivial = solve_gu(&psi, &[diag([1.0; 4])]).unwrap();
        assert_abs_diff_eq!(trivial.solution.p[0], 1.0, epsilon = 1e-12);
        let mut bad = diag([1.0; 4]);
        bad[0][0] = c(2.0, 0.0);
        assert!(matches!(
            solve_gu(&psi, &[bad]),
            Err(UsdError::NotUnitary { .. })
        ));
    }

    #[test]
    fn epm_priors_zero_overlaps() {
        let r = epm_priors(0.0, 0.0, 0.0).unwrap();
        for e in r.priors {
            assert_abs_diff_eq!(e, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(r.p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn epm_priors_equal_overlaps() {
        let r = epm_priors(0.3, 0.3, 0.3).unwrap();
        for e in r.priors {
            assert_abs_diff_eq!(e, 1.0 / 3.0, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(r.p, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn epm_priors_unequal_overlaps() {
        let r = epm_priors(1.0 / 3.0, 1.0 / 3.0, 1.0 / 9.0).unwrap();
        assert_abs_diff_eq!(r.priors[0], 0.5585, epsilon = 1e-4);
        assert_abs_diff_eq!(r.priors[1], r.priors[2], epsilon = 1e-12);
        assert!(!r.closed_form_verified);
        // The equal point is the optimum of the weighted problem on a grid.
        let g = HermitianMatrix::from_fn(3, |i, j| match (i.min(j), i.max(j)) {
            (0, 1) | (0, 2) => c(1.0 / 3.0, 0.0),
            (1, 2) => c(1.0 / 9.0, 0.0),
            _ => c(1.0, 0.0),
        });
        let e = Ensemble::from_gram(&g, r.priors.to_vec()).unwrap();
        let best = 1.0 - grid_q(&e, 81);
        assert!(best <= r.p + 1e-12);
        assert!(r.p - best <= 3.0 / 80.0 * r.priors[0]);
    }

    #[test]
    fn bloch_chord_examples() {
        assert_abs_diff_eq!(
            bloch_chord_q([0.0, 0.0, 1.0], [0.0, 0.0, -1.0]).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            bloch_chord_q([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(matches!(
            bloch_chord_q([0.0, 0.0, 2.0], [1.0, 0.0, 0.0]),
            Err(UsdError::NonUnitBloch(_))
        ));
    }

    fn random_unit<R: Rng>(rng: &mut R) -> [f64; 3] {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn bloch_chord_equals_pair_failure(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (n1, n2) = (random_unit(&mut rng), random_unit(&mut rng));
            let (a, b) = (bloch_state(n1).unwrap(), bloch_state(n2).unwrap());
            prop_assume!(qubit_overlap(&a, &b) < 1.0 - 1e-6);
            let e = Ensemble::with_equal_priors(vec![a, b]).unwrap();
            let q = solve_two_state(&e).unwrap().q_fail;
            prop_assert!((bloch_chord_q(n1, n2).unwrap() - q).abs() <= 1e-9);
        }

        #[test]
        fn two_state_q_is_continuous(eta1 in 0.01f64..0.99, a in 0.0f64..0.99) {
            let h = 1e-7;
            let q = |e: f64, x: f64| {
                let (p, _) = two_state_p(x, e, 1.0 - e);
                1.0 - e * p[0] - (1.0 - e) * p[1]
            };
            prop_assert!((q(eta1, a) - q(eta1 + h, a)).abs() <= 1e-6);
            prop_assert!((q(eta1, a) - q(eta1, a + h)).abs() <= 1e-6);
        }

        #[test]
        fn two_state_beats_the_grid(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.random_range(2..=4);
            let e = random_ensemble(&mut rng, 2, dim, 1e-3);
            let s = solve_two_state(&e).unwrap();
            prop_assert!(s.certificate.feasible);
            prop_assert!(s.q_fail <= grid_q(&e, 201) + 1e-12);
            prop_assert!((s.q_fail + s.p_success - 1.0).abs() <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn three_state_matches_the_grid(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.random_range(3..=5);
            let e = random_ensemble(&mut rng, 3, dim, 1e-3);
            let s = solve_three_state(&e).unwrap();
            let r = 41;
            let bound = 3.0 / (r - 1) as f64 * e.priors().iter().cloned().fold(0.0, f64::max);
            let gq = grid_q(&e, r);
            prop_assert!(s.q_fail <= gq + 1e-12);
            prop_assert!(gq - s.q_fail <= bound);
        }
    }
}
