//! Minimal complex linear algebra for Born-rule probabilities on small
//! multipartite systems (total dimension capped at 16).

use num_complex::Complex64;
use thiserror::Error;

pub const MAX_DIM: usize = 16;
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuantumError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state is not normalized (norm/trace = {0})")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,
    #[error("eigenvalue {0} outside [0, 1] within tolerance")]
    EigenvalueOutOfRange(f64),
    #[error("effects for one setting do not sum to identity")]
    IncompleteEffects,
    #[error("total dimension {0} exceeds cap {MAX_DIM}")]
    DimensionTooLarge(usize),
    #[error("state is not positive semidefinite (eigenvalue {0})")]
    NotPositive(f64),
}

/// Dense complex square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self, QuantumError> {
        let dim = rows.len();
        for r in &rows {
            if r.len() != dim {
                return Err(QuantumError::DimensionMismatch(format!(
                    "row length {} in a {}x{} matrix",
                    r.len(),
                    dim,
                    dim
                )));
            }
        }
        Ok(CMatrix {
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        for i in 0..self.dim {
            for j in 0..self.dim {
                if (self.at(i, j) - self.at(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMatrix {
            dim: self.dim,
            data,
        }
    }

    /// Eigenvalues of a Hermitian matrix via cyclic Jacobi on the real
    /// symmetric embedding [[Re, -Im], [Im, Re]] (each eigenvalue doubled).
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let m = 2 * n;
        let mut a = vec![0.0f64; m * m];
        for i in 0..n {
            for j in 0..n {
                let z = self.at(i, j);
                a[i * m + j] = z.re;
                a[i * m + (j + n)] = -z.im;
                a[(i + n) * m + j] = z.im;
                a[(i + n) * m + (j + n)] = z.re;
            }
        }
        // Cyclic Jacobi sweeps.
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..m {
                for q in (p + 1)..m {
                    off += a[p * m + q] * a[p * m + q];
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..m {
                for q in (p + 1)..m {
                    let apq = a[p * m + q];
                    if apq.abs() < 1e-15 {
                        continue;
                    }
                    let app = a[p * m + p];
                    let aqq = a[q * m + q];
                    // Standard Jacobi rotation.
                    let t = if (aqq - app).abs() < 1e-300 {
                        1.0
                    } else {
                        let tau = (aqq - app) / (2.0 * apq);
                        let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
                        sign / (tau.abs() + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..m {
                        let akp = a[k * m + p];
                        let akq = a[k * m + q];
                        a[k * m + p] = c * akp - s * akq;
                        a[k * m + q] = s * akp + c * akq;
                    }
                    for k in 0..m {
                        let apk = a[p * m + k];
                        let aqk = a[q * m + k];
                        a[p * m + k] = c * apk - s * aqk;
                        a[q * m + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eigs: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // Deduplicate the doubling: take every other value.
        eigs.into_iter().step_by(2).collect()
    }
}

/// A POVM element acting on a declared tensor factor subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    pub matrix: CMatrix,
}

impl Effect {
    pub fn validate(&self) -> Result<(), QuantumError> {
        if !self.matrix.is_hermitian(HERMITIAN_TOL) {
            return Err(QuantumError::NotHermitian);
        }
        for ev in self.matrix.hermitian_eigenvalues() {
            if !(-HERMITIAN_TOL..=1.0 + HERMITIAN_TOL).contains(&ev) {
                return Err(QuantumError::EigenvalueOutOfRange(ev));
            }
        }
        Ok(())
    }
}

/// Checks that a measurement setting's effects sum to the identity.
pub fn effects_complete(effects: &[Effect]) -> Result<(), QuantumError> {
    if effects.is_empty() {
        return Err(QuantumError::IncompleteEffects);
    }
    let dim = effects[0].matrix.dim;
    let mut sum = CMatrix::zeros(dim);
    for e in effects {
        if e.matrix.dim != dim {
            return Err(QuantumError::DimensionMismatch(
                "effects of one setting differ in dimension".to_string(),
            ));
        }
        sum = sum.add(&e.matrix);
    }
    let id = CMatrix::identity(dim);
    for i in 0..dim {
        for j in 0..dim {
            if (sum.at(i, j) - id.at(i, j)).norm() > HERMITIAN_TOL {
                return Err(QuantumError::IncompleteEffects);
            }
        }
    }
    Ok(())
}

/// A pure or mixed state over a list of tensor factors.
#[derive(Debug, Clone, PartialEq)]
pub enum StateBody {
    Pure(Vec<Complex64>),
    Mixed(CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub subsystem_dims: Vec<usize>,
    pub body: StateBody,
}

impl QuantumState {
    pub fn total_dim(&self) -> usize {
        self.subsystem_dims.iter().product()
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        let d = self.total_dim();
        if d > MAX_DIM {
            return Err(QuantumError::DimensionTooLarge(d));
        }
        match &self.body {
            StateBody::Pure(v) => {
                if v.len() != d {
                    return Err(QuantumError::DimensionMismatch(format!(
                        "amplitude vector length {} for total dimension {}",
                        v.len(),
                        d
                    )));
                }
                let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum();
                if (norm - 1.0).abs() > HERMITIAN_TOL {
                    return Err(QuantumError::NotNormalized(norm));
                }
            }
            StateBody::Mixed(m) => {
                if m.dim != d {
                    return Err(QuantumError::DimensionMismatch(format!(
                        "density matrix dimension {} for total dimension {}",
                        m.dim, d
                    )));
                }
                if !m.is_hermitian(HERMITIAN_TOL) {
                    return Err(QuantumError::NotHermitian);
                }
                let trace: f64 = (0..m.dim).map(|i| m.at(i, i).re).sum();
                if (trace - 1.0).abs() > HERMITIAN_TOL {
                    return Err(QuantumError::NotNormalized(trace));
                }
                for ev in m.hermitian_eigenvalues() {
                    if ev < -HERMITIAN_TOL {
                        return Err(QuantumError::NotPositive(ev));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn density(&self) -> CMatrix {
        match &self.body {
            StateBody::Mixed(m) => m.clone(),
            StateBody::Pure(v) => {
                let d = v.len();
                let mut m = CMatrix::zeros(d);
                for i in 0..d {
                    for j in 0..d {
                        m.set(i, j, v[i] * v[j].conj());
                    }
                }
                m
            }
        }
    }
}

/// Splits a flat index into per-factor digits under `dims`.
fn unflatten(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0usize; dims.len()];
    for k in (0..dims.len()).rev() {
        digits[k] = idx % dims[k];
        idx /= dims[k];
    }
    digits
}

/// tr((⊗ effects ⊗ identity on untouched factors) · ρ), clamped to [0, 1].
///
/// Each entry of `effects` names the tensor factors it acts on; the factor
/// lists must be pairwise disjoint and ascending within each effect.
pub fn born_probability(
    state: &QuantumState,
    effects: &[(Vec<usize>, Effect)],
) -> Result<f64, QuantumError> {
    let dims = &state.subsystem_dims;
    let mut seen = vec![false; dims.len()];
    for (factors, eff) in effects {
        let mut edim = 1usize;
        for &f in factors {
            if f >= dims.len() {
                return Err(QuantumError::DimensionMismatch(format!(
                    "factor index {f} out of range"
                )));
            }
            if seen[f] {
                return Err(QuantumError::DimensionMismatch(format!(
                    "factor {f} used by two effects"
                )));
            }
            seen[f] = true;
            edim *= dims[f];
        }
        if eff.matrix.dim != edim {
            return Err(QuantumError::DimensionMismatch(format!(
                "effect dimension {} does not match factors {:?}",
                eff.matrix.dim, factors
            )));
        }
    }
    let rho = state.density();
    let total = state.total_dim();
    // tr(O rho) = sum_{i,j} O[i,j] rho[j,i] with O factorized per effect.
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..total {
        let di = unflatten(i, dims);
        for j in 0..total {
            let dj = unflatten(j, dims);
            // Identity on untouched factors.
            if dims
                .iter()
                .enumerate()
                .any(|(k, _)| !seen[k] && di[k] != dj[k])
            {
                continue;
            }
            let mut o = Complex64::new(1.0, 0.0);
            for (factors, eff) in effects {
                let mut row = 0usize;
                let mut col = 0usize;
                for &f in factors {
                    row = row * dims[f] + di[f];
                    col = col * dims[f] + dj[f];
                }
                o *= eff.matrix.at(row, col);
            }
            acc += o * rho.at(j, i);
        }
    }
    let p = acc.re;
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        // Valid states and effects keep this inside [0,1] up to rounding.
        return Err(QuantumError::EigenvalueOutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Z-basis projector |v⟩⟨v| on a qubit.
pub fn qubit_z_projector(v: u8) -> Effect {
    let mut m = CMatrix::zeros(2);
    m.set(v as usize, v as usize, Complex64::new(1.0, 0.0));
    Effect { matrix: m }
}

/// X-basis projector |±⟩⟨±| on a qubit (v = 0 for +, 1 for −).
pub fn qubit_x_projector(v: u8) -> Effect {
    let s = if v == 0 { 1.0 } else { -1.0 };
    let mut m = CMatrix::zeros(2);
    m.set(0, 0, Complex64::new(0.5, 0.0));
    m.set(1, 1, Complex64::new(0.5, 0.0));
    m.set(0, 1, Complex64::new(0.5 * s, 0.0));
    m.set(1, 0, Complex64::new(0.5 * s, 0.0));
    Effect { matrix: m }
}

pub fn bell_phi_plus() -> QuantumState {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    QuantumState {
        subsystem_dims: vec![2, 2],
        body: StateBody::Pure(vec![
            Complex64::new(a, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(a, 0.0),
        ]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_state_perfect_correlation() {
        let s = bell_phi_plus();
        s.validate().unwrap();
        let p = born_probability(
            &s,
            &[
                (vec![0], qubit_z_projector(0)),
                (vec![1], qubit_z_projector(0)),
            ],
        )
        .unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let p = born_probability(
            &s,
            &[
                (vec![0], qubit_z_projector(0)),
                (vec![1], qubit_z_projector(1)),
            ],
        )
        .unwrap();
        assert!(p.abs() < 1e-12);
    }

    #[test]
    fn bell_state_mixed_bases() {
        let s = bell_phi_plus();
        let p = born_probability(
            &s,
            &[
                (vec![0], qubit_z_projector(0)),
                (vec![1], qubit_x_projector(0)),
            ],
        )
        .unwrap();
        assert!((p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn identity_effects_give_one() {
        let s = bell_phi_plus();
        let p = born_probability(&s, &[]).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complete_povm_sums_to_one() {
        let s = bell_phi_plus();
        let mut total = 0.0;
        for x in 0..2u8 {
            for y in 0..2u8 {
                total += born_probability(
                    &s,
                    &[
                        (vec![0], qubit_x_projector(x)),
                        (vec![1], qubit_z_projector(y)),
                    ],
                )
                .unwrap();
            }
        }
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn effect_validation() {
        qubit_z_projector(0).validate().unwrap();
        qubit_x_projector(1).validate().unwrap();
        effects_complete(&[qubit_z_projector(0), qubit_z_projector(1)]).unwrap();
        assert!(effects_complete(&[qubit_z_projector(0)]).is_err());
        let mut bad = CMatrix::zeros(2);
        bad.set(0, 1, Complex64::new(1.0, 0.0));
        assert!(Effect { matrix: bad }.validate().is_err());
    }

    #[test]
    fn eigenvalues_of_projector() {
        let eigs = qubit_x_projector(0).matrix.hermitian_eigenvalues();
        assert_eq!(eigs.len(), 2);
        assert!(eigs[0].abs() < 1e-9 && (eigs[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let s = bell_phi_plus();
        let big = Effect {
            matrix: CMatrix::identity(4),
        };
        assert!(born_probability(&s, &[(vec![0], big)]).is_err());
    }
}
