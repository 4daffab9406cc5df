//! Complex amplitude fields on a [`Grid`].
//!
//! The discrete transform mirrors the continuum pair
//! `ψ̃(κ) = ∫dβ e^{-iκ·β} ψ(β)` and `ψ(β) = ∫dκ/(2π) e^{iβ·κ} ψ̃(κ)`:
//! forward sums carry the measure `δβⁿ`, inverse sums `δκⁿ/(2π)ⁿ`, so norms
//! agree in both representations.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Position,
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToMomentum,
    ToPosition,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WavefunctionError {
    #[error("wavefunction is in {found:?} representation, expected {expected:?}")]
    RepresentationMismatch {
        expected: Representation,
        found: Representation,
    },
    #[error("wavefunctions live on different grids")]
    GridMismatch,
    #[error("amplitude count {found} does not match grid size {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("cannot normalize a state with zero norm")]
    ZeroNorm,
    #[error("state norm is not finite")]
    NonFiniteNorm,
}

#[derive(Debug, Clone)]
pub struct Wavefunction {
    grid: Arc<Grid>,
    amplitudes: Vec<Complex64>,
    representation: Representation,
}

impl Wavefunction {
    /// Wraps position-space amplitudes.
    pub fn new(grid: Arc<Grid>, amplitudes: Vec<Complex64>) -> Result<Self, WavefunctionError> {
        Self::with_representation(grid, amplitudes, Representation::Position)
    }

    pub fn with_representation(
        grid: Arc<Grid>,
        amplitudes: Vec<Complex64>,
        representation: Representation,
    ) -> Result<Self, WavefunctionError> {
        if amplitudes.len() != grid.len() {
            return Err(WavefunctionError::LengthMismatch {
                expected: grid.len(),
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            grid,
            amplitudes,
            representation,
        })
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        let amplitudes = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self {
            grid,
            amplitudes,
            representation: Representation::Position,
        }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let amplitudes = alloc::vec![Complex64::new(0.0, 0.0); grid.len()];
        Self {
            grid,
            amplitudes,
            representation: Representation::Position,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    /// Quadrature weight of the current representation.
    pub fn measure(&self) -> f64 {
        match self.representation {
            Representation::Position => self.grid.position_measure(),
            Representation::Momentum => self.grid.momentum_measure(),
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>() * self.measure()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `|ψ|²` per cell (no measure).
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }

    /// `self += factor · other`.
    pub fn add_scaled(&mut self, factor: Complex64, other: &Wavefunction) -> Result<(), WavefunctionError> {
        self.check_compatible(other)?;
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Returns the normalized state and the norm it had.
    pub fn normalize(&self) -> Result<(Wavefunction, f64), WavefunctionError> {
        let norm = self.norm();
        if !norm.is_finite() {
            return Err(WavefunctionError::NonFiniteNorm);
        }
        if norm == 0.0 {
            return Err(WavefunctionError::ZeroNorm);
        }
        let mut out = self.clone();
        out.scale(Complex64::new(1.0 / norm, 0.0));
        Ok((out, norm))
    }

    /// `⟨self|other⟩` with the representation's measure.
    pub fn inner_product(&self, other: &Wavefunction) -> Result<Complex64, WavefunctionError> {
        self.check_compatible(other)?;
        let sum: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.measure())
    }

    pub fn transform(&self, direction: Direction) -> Result<Wavefunction, WavefunctionError> {
        let (expected, target) = match direction {
            Direction::ToMomentum => (Representation::Position, Representation::Momentum),
            Direction::ToPosition => (Representation::Momentum, Representation::Position),
        };
        if self.representation != expected {
            return Err(WavefunctionError::RepresentationMismatch {
                expected,
                found: self.representation,
            });
        }
        let grid = &self.grid;
        let mut data = self.amplitudes.clone();
        // κ·β_first accounts for the lattice not starting at β = 0.
        let first: [f64; 3] = grid.point(0);
        let phase = |i: usize| -> f64 {
            let k = grid.wave_vector(i);
            k.iter().zip(first.iter()).map(|(k, b)| k * b).sum()
        };
        match direction {
            Direction::ToMomentum => {
                grid.fft().forward(&mut data);
                let w = grid.position_measure();
                for (i, a) in data.iter_mut().enumerate() {
                    *a *= Complex64::from_polar(w, -phase(i));
                }
            }
            Direction::ToPosition => {
                for (i, a) in data.iter_mut().enumerate() {
                    *a *= Complex64::from_polar(1.0, phase(i));
                }
                grid.fft().inverse(&mut data);
                let w = grid.momentum_measure();
                for a in &mut data {
                    *a *= w;
                }
            }
        }
        Ok(Wavefunction {
            grid: self.grid.clone(),
            amplitudes: data,
            representation: target,
        })
    }

    pub(crate) fn check_compatible(&self, other: &Wavefunction) -> Result<(), WavefunctionError> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(WavefunctionError::GridMismatch);
        }
        if self.representation != other.representation {
            return Err(WavefunctionError::RepresentationMismatch {
                expected: self.representation,
                found: other.representation,
            });
        }
        Ok(())
    }
}
