//! Measurements on states: moments, energies, region probabilities.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::propagator::{Hamiltonian, PropagatorError};
use crate::wavefunction::{Direction, Representation, Wavefunction, WavefunctionError};

/// Allowed `|‖ψ‖ − 1|` for operations that require a normalized state.
pub const NORM_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservableError {
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("region must have one interval per dimension with lo < hi")]
    EmptyRegion,
    #[error("region contains no cell centers")]
    NoCellsInRegion,
    #[error("beat period needs distinct energies, got {0} twice")]
    EqualEnergies(f64),
    #[error(transparent)]
    Wavefunction(#[from] WavefunctionError),
    #[error(transparent)]
    Hamiltonian(#[from] PropagatorError),
}

/// Time-stamped record of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub tau: f64,
    pub density: Vec<f64>,
    pub mean_position: Vec<f64>,
    pub spread: Vec<f64>,
    pub energy: f64,
    pub norm: f64,
    pub amplitudes: Option<Vec<Complex64>>,
}

impl Snapshot {
    /// Moments and energy are taken relative to the state's own norm, so a
    /// slightly non-unitary real-time state still yields meaningful values.
    pub fn capture(
        psi: &Wavefunction,
        h: &Hamiltonian,
        tau: f64,
        with_amplitudes: bool,
    ) -> Result<Self, ObservableError> {
        let v = h.potential_field(tau)?;
        Self::capture_with_field(psi, &v, tau, with_amplitudes)
    }

    pub(crate) fn capture_with_field(
        psi: &Wavefunction,
        v: &[f64],
        tau: f64,
        with_amplitudes: bool,
    ) -> Result<Self, ObservableError> {
        let position = in_position(psi)?;
        let (mean_position, spread) = raw_moments(&position);
        Ok(Self {
            tau,
            density: position.density(),
            mean_position,
            spread,
            energy: energy_with_field(&position, v)?,
            norm: position.norm(),
            amplitudes: with_amplitudes.then(|| position.amplitudes().to_vec()),
        })
    }
}

fn in_position(psi: &Wavefunction) -> Result<Wavefunction, WavefunctionError> {
    match psi.representation() {
        Representation::Position => Ok(psi.clone()),
        Representation::Momentum => psi.transform(Direction::ToPosition),
    }
}

fn check_normalized(psi: &Wavefunction) -> Result<(), ObservableError> {
    let n = psi.norm();
    if (n - 1.0).abs() > NORM_SLACK {
        Err(ObservableError::NotNormalized(n))
    } else {
        Ok(())
    }
}

fn raw_moments(psi: &Wavefunction) -> (Vec<f64>, Vec<f64>) {
    let grid = psi.grid();
    let dims = grid.dims();
    let mut m1 = [0.0; 3];
    let mut m2 = [0.0; 3];
    let mut total = 0.0;
    for (i, a) in psi.amplitudes().iter().enumerate() {
        let w = a.norm_sqr();
        let p = grid.point(i);
        total += w;
        for d in 0..dims {
            m1[d] += w * p[d];
            m2[d] += w * p[d] * p[d];
        }
    }
    let mut mean = Vec::with_capacity(dims);
    let mut spread = Vec::with_capacity(dims);
    for d in 0..dims {
        let mu = m1[d] / total;
        mean.push(mu);
        spread.push((m2[d] / total - mu * mu).max(0.0).sqrt());
    }
    (mean, spread)
}

/// Per-dimension mean position and standard deviation.
pub fn moments(psi: &Wavefunction) -> Result<(Vec<f64>, Vec<f64>), ObservableError> {
    let position = in_position(psi)?;
    check_normalized(&position)?;
    Ok(raw_moments(&position))
}

/// `⟨κ⟩` per dimension.
pub fn mean_momentum(psi: &Wavefunction) -> Result<Vec<f64>, ObservableError> {
    let position = in_position(psi)?;
    let mom = position.transform(Direction::ToMomentum)?;
    let grid = psi.grid();
    let mut acc = [0.0; 3];
    let mut total = 0.0;
    for (i, a) in mom.amplitudes().iter().enumerate() {
        let w = a.norm_sqr();
        let k = grid.wave_vector(i);
        total += w;
        for d in 0..grid.dims() {
            acc[d] += w * k[d];
        }
    }
    Ok(acc[..grid.dims()].iter().map(|s| s / total).collect())
}

/// `⟨ψ|ℋ|ψ⟩ / ⟨ψ|ψ⟩` with the kinetic part taken spectrally.
pub(crate) fn energy_with_field(psi: &Wavefunction, v: &[f64]) -> Result<f64, WavefunctionError> {
    let position = in_position(psi)?;
    let grid = position.grid().clone();
    let mom = position.transform(Direction::ToMomentum)?;
    let kinetic: f64 = mom
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = grid.wave_vector(i);
            (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * a.norm_sqr()
        })
        .sum::<f64>()
        * grid.momentum_measure();
    let potential: f64 = position
        .amplitudes()
        .iter()
        .zip(v)
        .map(|(a, v)| v * a.norm_sqr())
        .sum::<f64>()
        * grid.position_measure();
    Ok((kinetic + potential) / position.norm_squared())
}

pub fn energy_expectation(psi: &Wavefunction, h: &Hamiltonian, tau: f64) -> Result<f64, ObservableError> {
    check_normalized(&in_position(psi)?)?;
    let v = h.potential_field(tau)?;
    Ok(energy_with_field(psi, &v)?)
}

/// Probability mass in cells whose centers lie in the closed box `region`.
pub fn probability_in_region(psi: &Wavefunction, region: &[(f64, f64)]) -> Result<f64, ObservableError> {
    let grid = psi.grid();
    if region.len() != grid.dims() || region.iter().any(|(lo, hi)| !(lo < hi)) {
        return Err(ObservableError::EmptyRegion);
    }
    let position = in_position(psi)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, a) in position.amplitudes().iter().enumerate() {
        let p = grid.point(i);
        if region
            .iter()
            .enumerate()
            .all(|(d, (lo, hi))| p[d] >= *lo && p[d] <= *hi)
        {
            hits += 1;
            sum += a.norm_sqr();
        }
    }
    if hits == 0 {
        return Err(ObservableError::NoCellsInRegion);
    }
    Ok(sum * grid.position_measure())
}

/// `2π / |e_high − e_low|`.
pub fn beat_period(e_low: f64, e_high: f64) -> Result<f64, ObservableError> {
    if e_high == e_low {
        return Err(ObservableError::EqualEnergies(e_low));
    }
    Ok(2.0 * PI / (e_high - e_low).abs())
}
