//! The feasible region of detection probabilities: points `p` for which the
//! inconclusive operator `Π₀ = I − Σ p_i |ψ̃_i⟩⟨ψ̃_i|` stays positive
//! semidefinite.

use std::ops::Deref;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{reciprocal_states_with, DualFrame, Ensemble, Tolerances};
use crate::error::{Result, UsdError};
use crate::linalg::{complex_determinant, solve_real, HermitianMatrix, C64};

pub const VERTEX_CAP: usize = 20;
pub const BISECTION_ITERATIONS: usize = 80;
pub const BISECTION_WIDTH: f64 = 1e-12;

/// Detection probabilities, one per state, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(UsdError::InvalidProbability(format!(
                "{bad} is outside [0, 1]"
            )));
        }
        Ok(Self(p))
    }

    /// Accepts values within `slack` of `[0, 1]` and clamps them into range.
    pub fn clamped(p: Vec<f64>, slack: f64) -> Result<Self> {
        if let Some(bad) = p.iter().find(|x| !(**x >= -slack && **x <= 1.0 + slack)) {
            return Err(UsdError::InvalidProbability(format!(
                "{bad} is outside [0, 1]"
            )));
        }
        Ok(Self(p.into_iter().map(|x| x.clamp(0.0, 1.0)).collect()))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `Σ η_i p_i`.
    pub fn success(&self, priors: &[f64]) -> f64 {
        self.0.iter().zip(priors).map(|(p, e)| p * e).sum()
    }
}

impl Deref for ProbabilityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCertificate {
    pub feasible: bool,
    pub min_eigenvalue_pi0: f64,
    /// `λ_max(√P G̃ √P)`; feasibility is equivalent to this being at most 1.
    pub dual_max_eigenvalue: f64,
    pub boundary_residual: f64,
}

/// An ensemble's feasible region, with the dual frame computed once.
#[derive(Debug, Clone)]
pub struct Region {
    frame: DualFrame,
    tol_psd: f64,
}

impl Region {
    pub fn new(ensemble: &Ensemble) -> Result<Self> {
        Self::with_tolerances(ensemble, &Tolerances::default())
    }

    pub fn with_tolerances(ensemble: &Ensemble, tol: &Tolerances) -> Result<Self> {
        Ok(Self {
            frame: reciprocal_states_with(ensemble, tol)?,
            tol_psd: tol.psd,
        })
    }

    pub fn from_frame(frame: DualFrame, tol_psd: f64) -> Self {
        Self { frame, tol_psd }
    }

    pub fn frame(&self) -> &DualFrame {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    pub fn tol_psd(&self) -> f64 {
        self.tol_psd
    }

    fn check_len(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.len() {
            return Err(UsdError::DimensionMismatch {
                expected: self.len(),
                found: p.len(),
            });
        }
        Ok(())
    }

    pub fn inconclusive_operator(&self, p: &[f64]) -> Result<HermitianMatrix> {
        self.check_len(p)?;
        let d = self.frame.dim();
        Ok(
            HermitianMatrix::identity(d).sub(&HermitianMatrix::outer_sum(
                d,
                &self.frame.reciprocal_states,
                p,
            )),
        )
    }

    /// `λ_max(√P G̃ √P)` for nonnegative `p`.
    pub fn dual_max_eigenvalue(&self, p: &[f64]) -> Result<f64> {
        self.check_len(p)?;
        let sqrt_p: Vec<f64> = p.iter().map(|x| x.max(0.0).sqrt()).collect();
        self.frame
            .dual_gram
            .congruence_diag(&sqrt_p)
            .max_eigenvalue()
    }

    pub fn certificate(&self, p: &[f64]) -> Result<FeasibilityCertificate> {
        let min = self.inconclusive_operator(p)?.min_eigenvalue()?;
        let dual = self.dual_max_eigenvalue(p)?;
        Ok(FeasibilityCertificate {
            feasible: min >= -self.tol_psd && p.iter().all(|x| *x >= 0.0),
            min_eigenvalue_pi0: min,
            dual_max_eigenvalue: dual,
            boundary_residual: boundary_polynomial_gram(&self.frame.gram, p),
        })
    }

    pub fn is_feasible(&self, p: &[f64]) -> Result<bool> {
        Ok(self.dual_max_eigenvalue(p)? <= 1.0 + self.tol_psd && p.iter().all(|x| *x >= 0.0))
    }

    /// Largest `t` with `t·p` feasible: `1 / λ_max(√P G̃ √P)`, infinite at `p = 0`.
    pub fn radial_scale(&self, p: &[f64]) -> Result<f64> {
        let l = self.dual_max_eigenvalue(p)?;
        Ok(if l > 0.0 { 1.0 / l } else { f64::INFINITY })
    }

    pub fn boundary_polynomial(&self, p: &[f64]) -> Result<f64> {
        self.check_len(p)?;
        Ok(boundary_polynomial_gram(&self.frame.gram, p))
    }

    /// Decides feasibility from the boundary polynomial alone (N ≤ 3).
    pub fn polynomial_feasible(&self, p: &[f64]) -> Result<bool> {
        self.check_len(p)?;
        if self.len() > 3 {
            return Err(UsdError::Unsupported(
                "polynomial feasibility test needs at most three states".into(),
            ));
        }
        Ok(ray_has_no_root(&self.frame.gram, p, self.tol_psd))
    }

    /// For every nonempty subset `T`, the point with `p_i = 1/λ_max(G̃_T)` on
    /// `T` and zero elsewhere. Ordered by subset bitmask.
    pub fn vertices(&self) -> Result<Vec<Vertex>> {
        let n = self.len();
        if n > VERTEX_CAP {
            return Err(UsdError::TooManyStates { n, cap: VERTEX_CAP });
        }
        let masks: Vec<usize> = (1..(1usize << n)).collect();
        masks
            .par_iter()
            .map(|&mask| {
                let subset: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let l = self
                    .frame
                    .dual_gram
                    .principal_submatrix(&subset)
                    .max_eigenvalue()?;
                let mut p = vec![0.0; n];
                for &i in &subset {
                    p[i] = (1.0 / l).min(1.0);
                }
                Ok(Vertex {
                    subset,
                    p: ProbabilityVector(p),
                })
            })
            .collect()
    }

    /// Boundary points along `samples` rays through the positive orthant.
    pub fn sample_boundary(&self, samples: usize) -> Result<Vec<ProbabilityVector>> {
        let n = self.len();
        if !(2..=3).contains(&n) {
            return Err(UsdError::Unsupported(format!(
                "boundary sampling needs two or three states, got {n}"
            )));
        }
        if samples < 2 {
            return Err(UsdError::InvalidArgument(
                "at least two samples are required".into(),
            ));
        }
        (0..samples)
            .into_par_iter()
            .map(|k| {
                let dir = ray_direction(n, k, samples);
                self.boundary_along(&dir).map(ProbabilityVector)
            })
            .collect()
    }

    /// Bisects `t ∈ [0, 1]` for the boundary crossing of `t·dir`, where `dir`
    /// is scaled so that its largest component is 1.
    pub fn boundary_along(&self, dir: &[f64]) -> Result<Vec<f64>> {
        let top = dir.iter().cloned().fold(0.0, f64::max);
        if top <= 0.0 {
            return Err(UsdError::InvalidArgument(
                "ray direction must be positive".into(),
            ));
        }
        let d: Vec<f64> = dir.iter().map(|x| x.max(0.0) / top).collect();
        let at = |t: f64| d.iter().map(|x| x * t).collect::<Vec<_>>();
        if self.dual_max_eigenvalue(&d)? <= 1.0 {
            return Ok(d);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..BISECTION_ITERATIONS {
            if hi - lo <= BISECTION_WIDTH {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.dual_max_eigenvalue(&at(mid))? <= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(at(lo))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub subset: Vec<usize>,
    pub p: ProbabilityVector,
}

fn ray_direction(n: usize, k: usize, samples: usize) -> Vec<f64> {
    use std::f64::consts::FRAC_PI_2;
    if n == 2 {
        let theta = FRAC_PI_2 * k as f64 / (samples - 1) as f64;
        vec![theta.cos().max(0.0), theta.sin().max(0.0)]
    } else {
        // Fibonacci lattice restricted to the positive octant.
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        let z = 1.0 - (k as f64 + 0.5) / samples as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = FRAC_PI_2 * (k as f64 * golden).fract();
        vec![r * phi.cos(), r * phi.sin(), z]
    }
}

pub fn is_feasible(ensemble: &Ensemble, p: &[f64]) -> Result<FeasibilityCertificate> {
    Region::new(ensemble)?.certificate(p)
}

pub fn boundary_polynomial(ensemble: &Ensemble, p: &[f64]) -> Result<f64> {
    Region::new(ensemble)?.boundary_polynomial(p)
}

pub fn enumerate_vertices(ensemble: &Ensemble) -> Result<Vec<Vertex>> {
    Region::new(ensemble)?.vertices()
}

pub fn sample_boundary(ensemble: &Ensemble, samples: usize) -> Result<Vec<ProbabilityVector>> {
    Region::new(ensemble)?.sample_boundary(samples)
}

/// `det(G − P) / det(G)`: equal to 1 at the origin and vanishing on the
/// boundary of the region. Two and three states use the expanded forms.
pub fn boundary_polynomial_gram(gram: &HermitianMatrix, p: &[f64]) -> f64 {
    let x = |i: usize| 1.0 - p[i];
    let a2 = |i: usize, j: usize| gram.get(i, j).norm_sqr();
    match gram.dim() {
        0 => 1.0,
        1 => x(0),
        2 => {
            let a = a2(0, 1);
            (x(0) * x(1) - a) / (1.0 - a)
        }
        3 => {
            let triple = (gram.get(0, 1) * gram.get(1, 2) * gram.get(2, 0)).re;
            let cubic = |x0: f64, x1: f64, x2: f64| {
                x0 * x1 * x2 - x0 * a2(1, 2) - x1 * a2(0, 2) - x2 * a2(0, 1) + 2.0 * triple
            };
            cubic(x(0), x(1), x(2)) / cubic(1.0, 1.0, 1.0)
        }
        n => {
            let shifted: Vec<Vec<C64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            gram.get(i, j)
                                - if i == j {
                                    C64::new(p[i], 0.0)
                                } else {
                                    C64::new(0.0, 0.0)
                                }
                        })
                        .collect()
                })
                .collect();
            complex_determinant(&shifted).re / gram.determinant()
        }
    }
}

/// True when `g(t) = boundary_polynomial(t·p)` has no root in
/// `[0, 1/(1 + tol))`. Since `g(0) = 1` and the first positive root of `g` is
/// `1/λ_max(√P G̃ √P)`, this is the polynomial form of the eigenvalue test.
fn ray_has_no_root(gram: &HermitianMatrix, p: &[f64], tol: f64) -> bool {
    if p.iter().any(|x| *x < 0.0) {
        return false;
    }
    let n = p.len();
    let coeffs = ray_coefficients(gram, p);
    let eval = |t: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
    let end = 1.0 / (1.0 + tol);

    // Split [0, end] at the critical points so that g is monotone on each piece.
    let mut knots = vec![0.0, end];
    let deriv: Vec<f64> = (1..coeffs.len()).map(|k| k as f64 * coeffs[k]).collect();
    for r in real_roots_upto_quadratic(&deriv) {
        if r > 0.0 && r < end {
            knots.push(r);
        }
    }
    knots.sort_by(f64::total_cmp);
    let scale = coeffs.iter().map(|c| c.abs()).fold(1.0, f64::max);
    let touch = 1e-13 * scale * n as f64;
    for w in knots.windows(2) {
        let (a, b) = (eval(w[0]), eval(w[1]));
        if a <= 0.0 || b <= 0.0 {
            return false;
        }
    }
    // A tangential root leaves g nonnegative; catch it at the critical points.
    !knots[1..knots.len() - 1].iter().any(|&t| eval(t) <= touch)
}

/// Coefficients of `t ↦ boundary_polynomial(t·p)` (degree ≤ N) by
/// interpolation at `t = 0..=N`.
fn ray_coefficients(gram: &HermitianMatrix, p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let m = n + 1;
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    for k in 0..m {
        let t = k as f64;
        for j in 0..m {
            a[k * m + j] = t.powi(j as i32);
        }
        let tp: Vec<f64> = p.iter().map(|x| x * t).collect();
        b[k] = boundary_polynomial_gram(gram, &tp);
    }
    solve_real(&a, &b).expect("Vandermonde system at distinct nodes is regular")
}

fn real_roots_upto_quadratic(c: &[f64]) -> Vec<f64> {
    let c2 = c.get(2).copied().unwrap_or(0.0);
    let c1 = c.get(1).copied().unwrap_or(0.0);
    let c0 = c.first().copied().unwrap_or(0.0);
    let scale = c.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if c2.abs() <= 1e-14 * scale {
        if c1.abs() <= 1e-14 * scale {
            return vec![];
        }
        return vec![-c0 / c1];
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    let mut roots = vec![q / c2];
    if q != 0.0 {
        roots.push(c0 / q);
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{random_ensemble, StateVector};
    use crate::linalg::c;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real_state(v: &[f64]) -> StateVector {
        StateVector::from_real(v).unwrap()
    }

    fn pair_with_overlap(a: f64) -> Ensemble {
        let g = HermitianMatrix::from_fn(2, |i, j| c(if i == j { 1.0 } else { a }, 0.0));
        Ensemble::from_gram(&g, vec![0.5, 0.5]).unwrap()
    }

    fn three_state_example() -> Ensemble {
        Ensemble::with_equal_priors(vec![
            real_state(&[1.0, 0.0, 0.0]),
            real_state(&[1.0, 2.0, 2.0]),
            real_state(&[1.0, 2.0, -2.0]),
        ])
        .unwrap()
    }

    #[test]
    fn origin_is_feasible() {
        let cert = is_feasible(&three_state_example(), &[0.0; 3]).unwrap();
        assert!(cert.feasible);
        assert_abs_diff_eq!(cert.min_eigenvalue_pi0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cert.boundary_residual, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_pair_boundary_point() {
        let a = 0.5f64.sqrt();
        let e = pair_with_overlap(a);
        let cert = is_feasible(&e, &[1.0 - a, 1.0 - a]).unwrap();
        assert!(cert.feasible);
        assert_abs_diff_eq!(cert.min_eigenvalue_pi0, 0.0, epsilon = 1e-9);
        let outside = is_feasible(&e, &[0.5, 0.5]).unwrap();
        assert!(!outside.feasible);
        assert!(outside.min_eigenvalue_pi0 < 0.0);
        // Unnormalised form p1 p2 − (p1 + p2) + 1 − a² = −0.25.
        assert_abs_diff_eq!(
            outside.boundary_residual * (1.0 - a * a),
            -0.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn three_state_optimum_lies_on_boundary() {
        let v = boundary_polynomial(&three_state_example(), &[1.0 / 3.0, 7.0 / 9.0, 7.0 / 9.0])
            .unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn pair_vertices() {
        let a = 0.6;
        let v = enumerate_vertices(&pair_with_overlap(a)).unwrap();
        assert_eq!(v.len(), 3);
        assert_abs_diff_eq!(v[0].p[0], 1.0 - a * a, epsilon = 1e-12);
        assert_abs_diff_eq!(v[0].p[1], 0.0);
        assert_abs_diff_eq!(v[1].p[1], 1.0 - a * a, epsilon = 1e-12);
        assert_abs_diff_eq!(v[2].p[0], 1.0 - a, epsilon = 1e-12);
        assert_abs_diff_eq!(v[2].p[1], 1.0 - a, epsilon = 1e-12);
    }

    #[test]
    fn orthonormal_vertices_are_indicator_vectors() {
        let e = Ensemble::with_equal_priors(vec![
            real_state(&[1.0, 0.0, 0.0]),
            real_state(&[0.0, 1.0, 0.0]),
            real_state(&[0.0, 0.0, 1.0]),
        ])
        .unwrap();
        let v = enumerate_vertices(&e).unwrap();
        assert_eq!(v.len(), 7);
        for vert in v {
            for i in 0..3 {
                let want = if vert.subset.contains(&i) { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(vert.p[i], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn equiangular_full_vertex() {
        let s = 0.3;
        let g = HermitianMatrix::from_fn(3, |i, j| c(if i == j { 1.0 } else { s }, 0.0));
        let e = Ensemble::from_gram(&g, vec![1.0 / 3.0; 3]).unwrap();
        let v = enumerate_vertices(&e).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(v[6].p[i], 1.0 - s, epsilon = 1e-12);
        }
    }

    #[test]
    fn vertices_are_on_the_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=4 {
            let e = random_ensemble(&mut rng, n, n + 1, 1e-2);
            let region = Region::new(&e).unwrap();
            for v in region.vertices().unwrap() {
                let cert = region.certificate(&v.p).unwrap();
                assert!(cert.min_eigenvalue_pi0.abs() <= 1e-8);
                assert!(cert.boundary_residual.abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn orthogonal_pair_samples_reach_the_cube_edge() {
        let e = pair_with_overlap(0.0);
        for p in sample_boundary(&e, 25).unwrap() {
            assert_abs_diff_eq!(p[0].max(p[1]), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_ray_hits_symmetric_point() {
        let a = 0.5f64.sqrt();
        let samples = sample_boundary(&pair_with_overlap(a), 201).unwrap();
        let mid = &samples[100];
        assert_abs_diff_eq!(mid[0], 1.0 - a, epsilon = 1e-9);
        assert_abs_diff_eq!(mid[1], 1.0 - a, epsilon = 1e-9);
    }

    #[test]
    fn three_state_samples_satisfy_polynomial() {
        let e = three_state_example();
        let region = Region::new(&e).unwrap();
        let pts = region.sample_boundary(200).unwrap();
        assert_eq!(pts.len(), 200);
        for p in pts {
            assert!(region.boundary_polynomial(&p).unwrap().abs() <= 1e-7);
        }
    }

    #[test]
    fn sampling_rejects_four_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = random_ensemble(&mut rng, 4, 4, 1e-2);
        assert!(matches!(
            sample_boundary(&e, 10),
            Err(UsdError::Unsupported(_))
        ));
    }

    #[test]
    fn sign_alone_does_not_decide_three_state_feasibility() {
        let s = 0.2;
        let g = HermitianMatrix::from_fn(3, |i, j| c(if i == j { 1.0 } else { s }, 0.0));
        let e = Ensemble::from_gram(&g, vec![1.0 / 3.0; 3]).unwrap();
        let region = Region::new(&e).unwrap();
        let p = [1.0, 1.0, 1.0];
        assert!(region.boundary_polynomial(&p).unwrap() > 0.0);
        assert!(!region.polynomial_feasible(&p).unwrap());
        assert!(!region.is_feasible(&p).unwrap());
    }

    fn random_point<R: Rng>(rng: &mut R, region: &Region) -> Vec<f64> {
        let n = region.len();
        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let scale = region.radial_scale(&dir).unwrap().min(1e6);
        let t = rng.random_range(0.0..1.6);
        dir.iter().map(|x| x * scale * t).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn eigenvalue_and_dual_tests_agree(seed in any::<u64>(), n in 1usize..=4, extra in 0usize..=1) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_ensemble(&mut rng, n, n + extra, 1e-3);
            let region = Region::new(&e).unwrap();
            let p = random_point(&mut rng, &region);
            let cert = region.certificate(&p).unwrap();
            prop_assert!((cert.min_eigenvalue_pi0 - (1.0 - cert.dual_max_eigenvalue)).abs() <= 1e-9);
            if (cert.dual_max_eigenvalue - 1.0).abs() > 1e-9 {
                prop_assert_eq!(cert.feasible, cert.dual_max_eigenvalue <= 1.0);
                if n <= 3 {
                    prop_assert_eq!(region.polynomial_feasible(&p).unwrap(), cert.feasible);
                }
            }
        }

        #[test]
        fn region_is_convex(seed in any::<u64>(), n in 2usize..=3, t in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_ensemble(&mut rng, n, n, 1e-3);
            let region = Region::new(&e).unwrap();
            let pick = |rng: &mut ChaCha8Rng| {
                let dir: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                let s = region.radial_scale(&dir).unwrap() * rng.random_range(0.0..1.0);
                dir.iter().map(|x| x * s).collect::<Vec<_>>()
            };
            let (p, q) = (pick(&mut rng), pick(&mut rng));
            let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            prop_assert!(region.is_feasible(&mix).unwrap());
        }

        #[test]
        fn region_is_downward_closed(seed in any::<u64>(), n in 2usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_ensemble(&mut rng, n, n, 1e-3);
            let region = Region::new(&e).unwrap();
            let dir: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let s = region.radial_scale(&dir).unwrap();
            let p: Vec<f64> = dir.iter().map(|x| x * s).collect();
            let q: Vec<f64> = p.iter().map(|x| x * rng.random_range(0.0..1.0)).collect();
            prop_assert!(region.is_feasible(&p).unwrap());
            prop_assert!(region.is_feasible(&q).unwrap());
        }
    }
}
