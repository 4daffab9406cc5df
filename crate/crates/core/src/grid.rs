//! Discretized position/momentum lattice and the α-driven scale heuristics.
//!
//! Every axis is cell-centered: `β_j = origin + (j - N/2 + 1/2)·δβ`, so the
//! lattice is symmetric about `origin` and parity maps index `j` to
//! `N - 1 - j`. Momenta use signed FFT ordering, `κ_j = δκ·j` for
//! `j ∈ [-N/2, N/2)`, and every axis satisfies `δβ·δκ·N = 2π`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::fft::NdFft;

/// Smallest accepted number of bins per axis.
pub const MIN_BINS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("bins per dimension must be a power of two, got {0}")]
    NotPowerOfTwo(usize),
    #[error("bins per dimension must be at least {MIN_BINS}, got {0}")]
    TooFewBins(usize),
    #[error("grid must have 1 to 3 dimensions, got {0}")]
    BadDimensions(usize),
    #[error("coupling alpha must be positive and finite, got {0}")]
    NonPositiveAlpha(f64),
    #[error("axis {axis}: period must be positive and finite, got {value}")]
    BadPeriod { axis: usize, value: f64 },
    #[error("axis {axis}: box length must be positive and finite, got {value}")]
    BadLength { axis: usize, value: f64 },
    #[error("axis {axis}: origin must be finite")]
    BadOrigin { axis: usize },
    #[error("scale inputs must be positive: alpha={alpha}, p={power}")]
    NonPositiveScaleInput { alpha: f64, power: f64 },
}

/// How an axis's extent is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extent {
    /// Periodic with the given period; `δβ = period/N`.
    Periodic { period: f64 },
    /// Aperiodic box of the given length; `δβ = length/N`.
    Box { length: f64 },
    /// Aperiodic with `δβ = α^{-1/4}·√(2π/N)`.
    AlphaScaled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub extent: Extent,
    pub origin: f64,
}

impl AxisSpec {
    pub fn periodic(period: f64) -> Self {
        Self {
            extent: Extent::Periodic { period },
            origin: 0.0,
        }
    }

    pub fn boxed(length: f64) -> Self {
        Self {
            extent: Extent::Box { length },
            origin: 0.0,
        }
    }

    pub fn alpha_scaled() -> Self {
        Self {
            extent: Extent::AlphaScaled,
            origin: 0.0,
        }
    }

    pub fn with_origin(mut self, origin: f64) -> Self {
        self.origin = origin;
        self
    }
}

/// One lattice axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    bins: usize,
    spacing: f64,
    momentum_spacing: f64,
    origin: f64,
    period: Option<f64>,
    positions: Vec<f64>,
    momenta: Vec<f64>,
}

impl Axis {
    fn new(bins: usize, spacing: f64, origin: f64, period: Option<f64>) -> Self {
        let momentum_spacing = 2.0 * PI / (bins as f64 * spacing);
        let half = (bins / 2) as f64;
        let positions = (0..bins)
            .map(|j| origin + (j as f64 - half + 0.5) * spacing)
            .collect();
        let momenta = (0..bins)
            .map(|j| {
                let signed = if j < bins / 2 {
                    j as f64
                } else {
                    j as f64 - bins as f64
                };
                signed * momentum_spacing
            })
            .collect();
        Self {
            bins,
            spacing,
            momentum_spacing,
            origin,
            period,
            positions,
            momenta,
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Position spacing δβ.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Momentum spacing δκ.
    pub fn momentum_spacing(&self) -> f64 {
        self.momentum_spacing
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    /// Total extent `N·δβ`.
    pub fn length(&self) -> f64 {
        self.bins as f64 * self.spacing
    }

    /// Lower edge of the first cell.
    pub fn lower_edge(&self) -> f64 {
        self.origin - 0.5 * self.length()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }
}

/// Immutable discretized phase space.
#[derive(Debug, Clone)]
pub struct Grid {
    axes: Vec<Axis>,
    fft: NdFft,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.axes == other.axes
    }
}

/// Builds a grid with the same number of bins on every axis.
pub fn make_grid(bins: usize, alpha: f64, axes: &[AxisSpec]) -> Result<Grid, GridError> {
    let per_axis: Vec<usize> = axes.iter().map(|_| bins).collect();
    Grid::new(&per_axis, alpha, axes)
}

impl Grid {
    /// Builds a grid with per-axis bin counts.
    pub fn new(bins: &[usize], alpha: f64, specs: &[AxisSpec]) -> Result<Self, GridError> {
        if specs.is_empty() || specs.len() > 3 || bins.len() != specs.len() {
            return Err(GridError::BadDimensions(specs.len()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(GridError::NonPositiveAlpha(alpha));
        }
        let mut axes = Vec::with_capacity(specs.len());
        for (axis, (&n, spec)) in bins.iter().zip(specs).enumerate() {
            if !n.is_power_of_two() {
                return Err(GridError::NotPowerOfTwo(n));
            }
            if n < MIN_BINS {
                return Err(GridError::TooFewBins(n));
            }
            if !spec.origin.is_finite() {
                return Err(GridError::BadOrigin { axis });
            }
            let nf = n as f64;
            let built = match spec.extent {
                Extent::Periodic { period } => {
                    if !(period > 0.0 && period.is_finite()) {
                        return Err(GridError::BadPeriod {
                            axis,
                            value: period,
                        });
                    }
                    Axis::new(n, period / nf, spec.origin, Some(period))
                }
                Extent::Box { length } => {
                    if !(length > 0.0 && length.is_finite()) {
                        return Err(GridError::BadLength {
                            axis,
                            value: length,
                        });
                    }
                    Axis::new(n, length / nf, spec.origin, None)
                }
                Extent::AlphaScaled => {
                    let spacing = alpha.powf(-0.25) * (2.0 * PI / nf).sqrt();
                    Axis::new(n, spacing, spec.origin, None)
                }
            };
            axes.push(built);
        }
        let fft = NdFft::new(bins).expect("bins validated as powers of two");
        Ok(Self { axes, fft })
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::bins).collect()
    }

    /// Total number of lattice points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::bins).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fft(&self) -> &NdFft {
        &self.fft
    }

    /// Cell volume `Π δβ`.
    pub fn position_measure(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Momentum-space weight `Π δκ/(2π)`.
    pub fn momentum_measure(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| a.momentum_spacing() / (2.0 * PI))
            .product()
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for d in (0..self.dims()).rev() {
            let n = self.axes[d].bins;
            idx[d] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, a)| acc * a.bins + i)
    }

    /// Cell-center coordinates; unused dimensions are zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut p = [0.0; 3];
        for (d, a) in self.axes.iter().enumerate() {
            p[d] = a.positions[idx[d]];
        }
        p
    }

    /// Wave vector of a flat index in momentum space.
    pub fn wave_vector(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut k = [0.0; 3];
        for (d, a) in self.axes.iter().enumerate() {
            k[d] = a.momenta[idx[d]];
        }
        k
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// `κ²` per flat index.
    pub fn kinetic_symbol(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let k = self.wave_vector(i);
                k.iter().map(|c| c * c).sum()
            })
            .collect()
    }

    /// Index of the parity image `β - o → -(β - o)` on every axis.
    pub fn mirror_index(&self, flat: usize) -> usize {
        let idx = self.multi_index(flat);
        let mut m = [0usize; 3];
        for (d, a) in self.axes.iter().enumerate() {
            m[d] = a.bins - 1 - idx[d];
        }
        self.flat_index(&m[..self.dims()])
    }

    /// Index of the cell mirrored along axis `d` only.
    pub fn mirror_index_along(&self, flat: usize, d: usize) -> usize {
        let mut idx = self.multi_index(flat);
        idx[d] = self.axes[d].bins - 1 - idx[d];
        self.flat_index(&idx[..self.dims()])
    }
}

/// Characteristic scales of the low-lying states of `-∂² + α(β²)^p`,
/// with unit proportionality constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEstimate {
    pub length: f64,
    pub time: f64,
    pub momentum: f64,
    pub energy: f64,
}

pub fn characteristic_scales(alpha: f64, power: f64) -> Result<ScaleEstimate, GridError> {
    if !(alpha > 0.0 && power > 0.0 && alpha.is_finite() && power.is_finite()) {
        return Err(GridError::NonPositiveScaleInput { alpha, power });
    }
    let ap = alpha * power;
    let length = ap.powf(-1.0 / (2.0 * power + 2.0));
    let time = ap.powf(-1.0 / (power + 1.0));
    Ok(ScaleEstimate {
        length,
        time,
        momentum: 1.0 / length,
        energy: 1.0 / time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn periodic_spacing_is_period_over_bins() {
        let g = make_grid(16, 1.0, &[AxisSpec::periodic(2.0 * PI)]).unwrap();
        assert_relative_eq!(g.axis(0).spacing(), 2.0 * PI / 16.0, epsilon = 1e-15);
        assert_relative_eq!(g.axis(0).length(), 2.0 * PI, epsilon = 1e-14);
    }

    #[test]
    fn alpha_scaled_spacing() {
        let g = make_grid(64, 16.0, &[AxisSpec::alpha_scaled()]).unwrap();
        let a = g.axis(0);
        assert_relative_eq!(a.spacing(), 0.156_664_3, epsilon = 1e-6);
        assert_relative_eq!(a.momentum_spacing(), 0.626_657_1, epsilon = 1e-6);
        assert_relative_eq!(a.momentum_spacing() / a.spacing(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            make_grid(12, 1.0, &[AxisSpec::periodic(1.0)]),
            Err(GridError::NotPowerOfTwo(12))
        );
        assert_eq!(
            make_grid(4, 1.0, &[AxisSpec::periodic(1.0)]),
            Err(GridError::TooFewBins(4))
        );
        assert!(matches!(
            make_grid(16, 0.0, &[AxisSpec::alpha_scaled()]),
            Err(GridError::NonPositiveAlpha(_))
        ));
        assert!(matches!(
            make_grid(16, 1.0, &[AxisSpec::periodic(-1.0)]),
            Err(GridError::BadPeriod { .. })
        ));
        assert!(matches!(make_grid(16, 1.0, &[]), Err(GridError::BadDimensions(0))));
    }

    #[test]
    fn cell_centers_are_symmetric_about_origin() {
        let g = make_grid(8, 1.0, &[AxisSpec::boxed(4.0).with_origin(1.5)]).unwrap();
        let x = g.axis(0).positions();
        for j in 0..8 {
            assert_relative_eq!(x[j] - 1.5, -(x[7 - j] - 1.5), epsilon = 1e-14);
        }
        assert_relative_eq!(x[0], 1.5 - 2.0 + 0.25, epsilon = 1e-14);
    }

    #[test]
    fn momenta_use_signed_ordering() {
        let g = make_grid(8, 1.0, &[AxisSpec::periodic(2.0 * PI)]).unwrap();
        let k: Vec<f64> = g.axis(0).momenta().to_vec();
        assert_eq!(k, [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn flat_and_multi_index_agree() {
        let g = make_grid(8, 1.0, &[AxisSpec::boxed(1.0), AxisSpec::boxed(2.0)]).unwrap();
        for flat in 0..g.len() {
            let idx = g.multi_index(flat);
            assert_eq!(g.flat_index(&idx[..2]), flat);
            assert_eq!(g.mirror_index(g.mirror_index(flat)), flat);
            let along = g.mirror_index_along(g.mirror_index_along(flat, 0), 1);
            assert_eq!(along, g.mirror_index(flat));
        }
    }

    #[test]
    fn scales() {
        let s = characteristic_scales(1.0, 1.0).unwrap();
        assert_eq!((s.length, s.time, s.momentum, s.energy), (1.0, 1.0, 1.0, 1.0));
        let s = characteristic_scales(100.0, 1.0).unwrap();
        assert_relative_eq!(s.length, 0.316_227_8, epsilon = 1e-6);
        assert_relative_eq!(s.energy, 10.0, epsilon = 1e-12);
        assert_relative_eq!(s.length * s.momentum, 1.0, epsilon = 1e-15);
        let s = characteristic_scales(1.0, 2.0).unwrap();
        assert_relative_eq!(s.length, 0.890_899, epsilon = 1e-6);
        assert!(characteristic_scales(-1.0, 1.0).is_err());
        assert!(characteristic_scales(1.0, 0.0).is_err());
    }
}
