//! States, ensembles and their reciprocal (dual) frames.

use rand::Rng;

use crate::error::{Result, UsdError};
use crate::linalg::{
    default_rank_tolerance, inner, norm, pseudo_inverse, realize_gram, HermitianMatrix, C64,
};

/// Numerical tolerances shared by validation and the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a state norm from 1.
    pub norm: f64,
    /// Rank threshold relative to the largest Gram eigenvalue.
    pub rank_relative: f64,
    /// Allowed deviation from the biorthogonality `⟨ψ̃_i|ψ_k⟩ = δ_ik`.
    pub dual: f64,
    /// Eigenvalue slack when testing positive semidefiniteness.
    pub psd: f64,
    /// Allowed deviation of the prior sum from 1.
    pub prior_sum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: 1e-9,
            rank_relative: 1e-10,
            dual: 1e-9,
            psd: 1e-9,
            prior_sum: 1e-9,
        }
    }
}

impl Tolerances {
    /// Same absolute tolerance for norms, duality, PSD tests and prior sums.
    pub fn uniform(tol: f64) -> Self {
        Self {
            norm: tol,
            dual: tol,
            psd: tol,
            prior_sum: tol,
            ..Self::default()
        }
    }
}

/// Unit-norm complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        Self::with_tolerance(amplitudes, Tolerances::default().norm)
    }

    pub fn with_tolerance(amplitudes: Vec<C64>, tol_norm: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(UsdError::InvalidArgument("state has no amplitudes".into()));
        }
        let n = norm(&amplitudes);
        if !n.is_finite() || (n - 1.0).abs() > tol_norm {
            return Err(UsdError::NotNormalized { index: 0, norm: n });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if !n.is_finite() || n == 0.0 {
            return Err(UsdError::NotNormalized { index: 0, norm: n });
        }
        Self::new(amplitudes.into_iter().map(|a| a / n).collect())
    }

    /// Real amplitudes, normalised.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }
}

/// Linearly independent pure states with prior probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    dim: usize,
    states: Vec<StateVector>,
    priors: Vec<f64>,
}

impl Ensemble {
    pub fn new(states: Vec<StateVector>, priors: Vec<f64>) -> Result<Self> {
        Self::with_tolerances(states, priors, &Tolerances::default())
    }

    pub fn with_equal_priors(states: Vec<StateVector>) -> Result<Self> {
        let n = states.len();
        Self::new(states, vec![1.0 / n as f64; n])
    }

    pub fn with_tolerances(
        states: Vec<StateVector>,
        priors: Vec<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(UsdError::InvalidArgument("ensemble has no states".into()));
        };
        let dim = first.dim();
        for (index, s) in states.iter().enumerate() {
            if s.dim() != dim {
                return Err(UsdError::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            let n = norm(s.amplitudes());
            if (n - 1.0).abs() > tol.norm {
                return Err(UsdError::NotNormalized { index, norm: n });
            }
        }
        if states.len() > dim {
            let g = HermitianMatrix::gram(&vectors_of(&states));
            return Err(UsdError::LinearlyDependent {
                min_eigenvalue: g.min_eigenvalue()?,
            });
        }
        if priors.len() != states.len() {
            return Err(UsdError::DimensionMismatch {
                expected: states.len(),
                found: priors.len(),
            });
        }
        validate_priors(&priors, tol.prior_sum)?;

        let g = HermitianMatrix::gram(&vectors_of(&states));
        let eig = g.eigenvalues()?;
        let (min, max) = (eig[0], eig[eig.len() - 1]);
        if min <= tol.rank_relative * max {
            return Err(UsdError::LinearlyDependent {
                min_eigenvalue: min,
            });
        }
        Ok(Self {
            dim,
            states,
            priors,
        })
    }

    /// Realises states with the given Gram matrix (Cholesky factor columns,
    /// dimension `N`).
    pub fn from_gram(gram: &HermitianMatrix, priors: Vec<f64>) -> Result<Self> {
        let vectors = realize_gram(gram).ok_or(UsdError::LinearlyDependent {
            min_eigenvalue: gram.min_eigenvalue().unwrap_or(f64::NAN),
        })?;
        let states = vectors
            .into_iter()
            .map(StateVector::normalized)
            .collect::<Result<Vec<_>>>()?;
        Self::new(states, priors)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn state_vectors(&self) -> Vec<Vec<C64>> {
        vectors_of(&self.states)
    }

    pub fn with_priors(&self, priors: Vec<f64>) -> Result<Self> {
        Self::new(self.states.clone(), priors)
    }
}

fn vectors_of(states: &[StateVector]) -> Vec<Vec<C64>> {
    states.iter().map(|s| s.amplitudes.clone()).collect()
}

pub fn validate_priors(priors: &[f64], tol: f64) -> Result<()> {
    if let Some(bad) = priors.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(UsdError::InvalidPriors(format!(
            "prior {bad} is not a nonnegative number"
        )));
    }
    let sum: f64 = priors.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(UsdError::InvalidPriors(format!(
            "priors sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

pub fn gram_matrix(ensemble: &Ensemble) -> HermitianMatrix {
    HermitianMatrix::gram(&ensemble.state_vectors())
}

/// `S = Σ_i |v_i⟩⟨v_i|`.
pub fn frame_operator(vectors: &[Vec<C64>]) -> HermitianMatrix {
    let dim = vectors.first().map_or(0, Vec::len);
    HermitianMatrix::outer_sum(dim, vectors, &vec![1.0; vectors.len()])
}

/// Reciprocal states together with the primal and dual Gram matrices.
#[derive(Debug, Clone)]
pub struct DualFrame {
    pub gram: HermitianMatrix,
    pub dual_gram: HermitianMatrix,
    /// `ψ̃_i`, not normalised.
    pub reciprocal_states: Vec<Vec<C64>>,
    /// Ascending spectrum of the primal frame operator.
    pub frame_eigenvalues: Vec<f64>,
}

impl DualFrame {
    pub fn len(&self) -> usize {
        self.reciprocal_states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reciprocal_states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.reciprocal_states.first().map_or(0, Vec::len)
    }

    /// `max_{i,k} |⟨ψ̃_i|ψ_k⟩ − δ_ik|`.
    pub fn duality_error(&self, ensemble: &Ensemble) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, d) in self.reciprocal_states.iter().enumerate() {
            for (k, s) in ensemble.states().iter().enumerate() {
                let target = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((inner(d, s.amplitudes()) - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// `ψ̃_i = (ΦΦ*)⁺ ψ_i`, computed through the eigendecomposition of `ΦΦ*` so
/// that `dim > N` needs no special handling.
pub fn reciprocal_states(ensemble: &Ensemble) -> Result<DualFrame> {
    reciprocal_states_with(ensemble, &Tolerances::default())
}

pub fn reciprocal_states_with(ensemble: &Ensemble, tol: &Tolerances) -> Result<DualFrame> {
    let vectors = ensemble.state_vectors();
    let gram = HermitianMatrix::gram(&vectors);
    let g_eig = gram.eigenvalues()?;
    let rank_tol = tol.rank_relative * g_eig[g_eig.len() - 1];
    if g_eig[0] <= rank_tol {
        return Err(UsdError::LinearlyDependent {
            min_eigenvalue: g_eig[0],
        });
    }

    let s = frame_operator(&vectors);
    let s_eig = s.eig()?;
    let s_pinv = s_eig.map_spectrum(|l| (l > rank_tol).then(|| 1.0 / l));
    let reciprocal: Vec<Vec<C64>> = vectors.iter().map(|v| s_pinv.mul_vec(v)).collect();
    let dual_gram = HermitianMatrix::gram(&reciprocal);

    let frame = DualFrame {
        gram,
        dual_gram,
        reciprocal_states: reciprocal,
        frame_eigenvalues: s_eig.values.iter().map(|&l| l.max(0.0)).collect(),
    };
    let err = frame.duality_error(ensemble);
    if !(err <= tol.dual) {
        return Err(UsdError::LinearlyDependent {
            min_eigenvalue: g_eig[0],
        });
    }
    Ok(frame)
}

/// Pseudo-inverse of an arbitrary Hermitian PSD matrix with the default
/// relative rank threshold.
pub fn pinv(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let max = m.max_eigenvalue()?;
    pseudo_inverse(m, default_rank_tolerance(max))
}

/// Random ensemble with uniformly drawn amplitudes and priors, rejecting draws
/// whose smallest Gram eigenvalue falls below `min_gram_eigenvalue`.
pub fn random_ensemble<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    dim: usize,
    min_gram_eigenvalue: f64,
) -> Ensemble {
    assert!(n >= 1 && n <= dim);
    loop {
        let states: Vec<StateVector> = (0..n)
            .map(|_| {
                let amps = (0..dim)
                    .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                StateVector::normalized(amps)
            })
            .collect::<Result<_>>()
            .expect("nonzero draw");
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let priors = raw.iter().map(|x| x / total).collect();
        let g = HermitianMatrix::gram(&vectors_of(&states));
        if g.min_eigenvalue().is_ok_and(|m| m >= min_gram_eigenvalue) {
            if let Ok(e) = Ensemble::new(states, priors) {
                return e;
            }
        }
    }
}
