//! Dense-matrix reference: exact spectra and `e^{-iHt}` on small grids.
//!
//! The kinetic block is the spectral derivative itself
//! (`ℱ⁻¹·diag(κ²)·ℱ` applied to unit vectors), so the oracle shares the
//! production discretization and differences isolate time-stepping error.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use splitstep_core::propagator::{Hamiltonian, PropagatorError};
use splitstep_core::{Grid, Wavefunction, WavefunctionError};
use thiserror::Error;

/// Largest grid the oracle accepts.
pub const MAX_POINTS: usize = 4096;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid has {0} points; the dense oracle is capped at {MAX_POINTS}")]
    TooLarge(usize),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("requested {count} levels from a {size}x{size} matrix")]
    TooManyLevels { count: usize, size: usize },
    #[error(transparent)]
    Hamiltonian(#[from] PropagatorError),
    #[error(transparent)]
    Wavefunction(#[from] WavefunctionError),
}

/// Imaginary time evolves with `e^{-Ht}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleTime {
    Real(f64),
    Imaginary(f64),
}

#[derive(Debug, Clone)]
pub struct DenseHamiltonian {
    pub size: usize,
    pub matrix: DMatrix<Complex64>,
    pub grid: Arc<Grid>,
    pub tau_frozen: f64,
}

pub fn dense_hamiltonian(h: &Hamiltonian, tau: f64) -> Result<DenseHamiltonian, OracleError> {
    let grid = h.grid().clone();
    let n = grid.len();
    if n > MAX_POINTS {
        return Err(OracleError::TooLarge(n));
    }
    let k2 = grid.kinetic_symbol();
    let mut matrix = DMatrix::<Complex64>::zeros(n, n);
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        column.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        column[j] = Complex64::new(1.0, 0.0);
        grid.fft().forward(&mut column);
        for (c, k) in column.iter_mut().zip(&k2) {
            *c *= k / n as f64;
        }
        grid.fft().inverse(&mut column);
        for (i, c) in column.iter().enumerate() {
            matrix[(i, j)] = *c;
        }
    }
    let v = h.potential_field(tau)?;
    for (i, v) in v.iter().enumerate() {
        matrix[(i, i)] += v;
    }
    if matrix.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(OracleError::NonFinite);
    }
    Ok(DenseHamiltonian {
        size: n,
        matrix,
        grid,
        tau_frozen: tau,
    })
}

/// Eigenpairs of a dense Hamiltonian, ascending.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub values: Vec<f64>,
    /// Columns are orthonormal eigenvectors (unit Euclidean norm).
    pub vectors: DMatrix<Complex64>,
    grid: Arc<Grid>,
}

impl DenseHamiltonian {
    /// `max |M − M†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.size;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Full eigendecomposition. Spectral kinetic matrices on these lattices
    /// are real up to rounding, so the real symmetric solver is used when
    /// the imaginary parts are negligible.
    pub fn decompose(&self) -> Result<DenseSpectrum, OracleError> {
        let imag = self.matrix.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        let scale = self.matrix.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let (values, vectors) = if imag <= 1e-12 * scale {
            let real = DMatrix::from_fn(self.size, self.size, |i, j| {
                0.5 * (self.matrix[(i, j)].re + self.matrix[(j, i)].re)
            });
            let eig = real.symmetric_eigen();
            let vectors = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
            (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), vectors)
        } else {
            let herm = DMatrix::from_fn(self.size, self.size, |i, j| {
                0.5 * (self.matrix[(i, j)] + self.matrix[(j, i)].conj())
            });
            let eig = herm.symmetric_eigen();
            (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors)
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(OracleError::NonFinite);
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
        let sorted_values = order.iter().map(|&i| values[i]).collect();
        let sorted_vectors = DMatrix::from_fn(self.size, self.size, |r, c| vectors[(r, order[c])]);
        Ok(DenseSpectrum {
            values: sorted_values,
            vectors: sorted_vectors,
            grid: self.grid.clone(),
        })
    }
}

impl DenseSpectrum {
    /// Eigenvector `index` as a normalized wavefunction.
    pub fn state(&self, index: usize) -> Result<Wavefunction, OracleError> {
        let col: Vec<Complex64> = self.vectors.column(index).iter().copied().collect();
        Ok(Wavefunction::new(self.grid.clone(), col)?.normalize()?.0)
    }

    pub fn evolve(&self, psi: &Wavefunction, t: OracleTime) -> Result<Wavefunction, OracleError> {
        if psi.amplitudes().len() != self.values.len() {
            return Err(WavefunctionError::LengthMismatch {
                expected: self.values.len(),
                found: psi.amplitudes().len(),
            }
            .into());
        }
        let x = DVector::from_column_slice(psi.amplitudes());
        let mut coeffs = self.vectors.adjoint() * x;
        for (c, e) in coeffs.iter_mut().zip(&self.values) {
            *c *= match t {
                OracleTime::Real(t) => Complex64::from_polar(1.0, -e * t),
                OracleTime::Imaginary(t) => Complex64::new((-e * t).exp(), 0.0),
            };
        }
        let y = &self.vectors * coeffs;
        Ok(Wavefunction::new(psi.grid().clone(), y.iter().copied().collect())?)
    }
}

/// Exact `e^{-iHt}ψ` (or `e^{-Ht}ψ`).
pub fn expm_evolve(dense: &DenseHamiltonian, psi: &Wavefunction, t: OracleTime) -> Result<Wavefunction, OracleError> {
    dense.decompose()?.evolve(psi, t)
}

/// Lowest `count` eigenvalues, ascending.
pub fn oracle_spectrum(dense: &DenseHamiltonian, count: usize) -> Result<Vec<f64>, OracleError> {
    if count > dense.size {
        return Err(OracleError::TooManyLevels { count, size: dense.size });
    }
    let mut values = dense.decompose()?.values;
    values.truncate(count);
    Ok(values)
}
