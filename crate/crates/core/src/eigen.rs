//! Imaginary-time eigensolver: parity-carrying trial states, Gram–Schmidt
//! deflation against lower states, relaxation to a stationary energy.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::dsl::{Expr, Point};
use crate::grid::Grid;
use crate::observables::energy_with_field;
use crate::propagator::{choose_timestep, Hamiltonian, Mode, Order, PropagatorError, StepConfig, Stepper};
use crate::wavefunction::{Direction, Wavefunction, WavefunctionError};

/// Regularization of `1/U` in periodic trial states.
pub const TRIAL_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Converged once `|E_k − E_{k−1}| < energy_tolerance · δτ`.
    pub energy_tolerance: f64,
    pub max_steps: usize,
    pub reorth_every: usize,
    pub order: Order,
    pub dtau_base: f64,
    /// δτ is halved after convergence while the residual exceeds this.
    pub residual_target: f64,
    pub max_refinements: u32,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            energy_tolerance: 1e-8,
            max_steps: 200_000,
            reorth_every: 1,
            order: Order::Second,
            dtau_base: 0.01,
            residual_target: 1e-4,
            max_refinements: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub energy: f64,
    pub state: Wavefunction,
    pub steps_taken: usize,
    /// `‖(ℋ − E)ψ‖`.
    pub residual: f64,
    pub energy_trace: Vec<f64>,
    /// Final imaginary time step.
    pub dtau: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("energy tolerance must be positive and reorth_every at least 1")]
    BadOptions,
    #[error("trial state lies in the span of the basis (remainder norm {0:e})")]
    ZeroRemainder(f64),
    #[error("no convergence after {steps} steps (last energy {last_energy})")]
    NotConverged {
        steps: usize,
        last_energy: f64,
        energy_trace: Vec<f64>,
    },
    #[error("eigenpair {index}: {source}")]
    Level {
        index: usize,
        #[source]
        source: Box<EigenError>,
    },
    #[error("count must be at least 1")]
    ZeroCount,
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Wavefunction(#[from] WavefunctionError),
}

/// `Π_d (β_d−o_d)^{n_d mod 2}` times `exp(−Σ(β_d−o_d)²)` over aperiodic axes
/// and `1/(U − min U + ε)` if any axis is periodic; normalized.
pub fn trial_state(grid: &alloc::sync::Arc<Grid>, u: &Expr, quantum_numbers: &[u32]) -> Result<Wavefunction, EigenError> {
    let dims = grid.dims();
    let any_periodic = grid.axes().iter().any(|a| a.is_periodic());
    let u_field: Option<Vec<f64>> = if any_periodic {
        Some(
            (0..grid.len())
                .map(|i| u.eval(&Point::new(grid.point(i), 0.0)))
                .collect::<Result<_, _>>()
                .map_err(PropagatorError::from)?,
        )
    } else {
        None
    };
    let u_min = u_field
        .as_ref()
        .map(|f| f.iter().copied().fold(f64::INFINITY, f64::min))
        .unwrap_or(0.0);
    let amplitudes = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            let mut value = 1.0;
            for d in 0..dims {
                let axis = grid.axis(d);
                let b = p[d] - axis.origin();
                if quantum_numbers.get(d).copied().unwrap_or(0) % 2 == 1 {
                    value *= b;
                }
                match axis.period() {
                    None => value *= (-b * b).exp(),
                    // U may repeat several times per cell; this even envelope
                    // carries every harmonic, so the trial also overlaps states
                    // that are odd under the sub-period translation.
                    Some(l) => value *= (2.0 * PI * b / l).cos().exp(),
                }
            }
            if let Some(f) = &u_field {
                value /= f[i] - u_min + TRIAL_EPSILON;
            }
            Complex64::new(value, 0.0)
        })
        .collect();
    let psi = Wavefunction::new(grid.clone(), amplitudes)?;
    Ok(psi.normalize()?.0)
}

/// Removes the components along `basis` (two Gram–Schmidt passes) and
/// renormalizes.
pub fn deflate(psi: &Wavefunction, basis: &[Wavefunction]) -> Result<Wavefunction, EigenError> {
    if basis.is_empty() {
        return Ok(psi.clone());
    }
    let start = psi.norm();
    let mut out = psi.clone();
    for _ in 0..2 {
        for b in basis {
            let overlap = b.inner_product(&out)?;
            out.add_scaled(-overlap, b)?;
        }
    }
    let remainder = out.norm();
    if !(remainder > 1e-10 * start) {
        return Err(EigenError::ZeroRemainder(remainder / start));
    }
    Ok(out.normalize()?.0)
}

/// `ℋψ` with the kinetic term applied spectrally (`ψ` in position space).
pub fn apply_hamiltonian(psi: &Wavefunction, v: &[f64]) -> Result<Wavefunction, WavefunctionError> {
    let grid = psi.grid().clone();
    let mut mom = psi.transform(Direction::ToMomentum)?;
    for (i, a) in mom.amplitudes_mut().iter_mut().enumerate() {
        let k = grid.wave_vector(i);
        *a *= k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    }
    let mut out = mom.transform(Direction::ToPosition)?;
    for ((o, p), v) in out.amplitudes_mut().iter_mut().zip(psi.amplitudes()).zip(v) {
        *o += p * v;
    }
    Ok(out)
}

/// `‖(ℋ − E)ψ‖` with the kinetic term applied spectrally.
pub fn residual(psi: &Wavefunction, v: &[f64], energy: f64) -> Result<f64, WavefunctionError> {
    let hpsi = apply_hamiltonian(psi, v)?;
    let sum: f64 = hpsi
        .amplitudes()
        .iter()
        .zip(psi.amplitudes())
        .map(|(h, p)| (h - p * energy).norm_sqr())
        .sum();
    Ok((sum * psi.grid().position_measure()).sqrt())
}

/// Cyclic Jacobi on a small real symmetric matrix (row-major `n×n`).
/// Returns eigenvalues and eigenvector columns. Off-diagonal entries below
/// `floor` are treated as zero so exactly degenerate pairs are left alone.
fn jacobi_eigen(mut a: Vec<f64>, n: usize, floor: f64) -> (Vec<f64>, Vec<f64>) {
    let mut vecs = alloc::vec![0.0; n * n];
    for i in 0..n {
        vecs[i * n + i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= floor {
                    continue;
                }
                rotated = true;
                let theta = 0.5 * (2.0 * apq).atan2(a[q * n + q] - a[p * n + p]);
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (vecs[k * n + p], vecs[k * n + q]);
                    vecs[k * n + p] = c * vkp - s * vkq;
                    vecs[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), vecs)
}

/// Rayleigh–Ritz within the span of the found states: removes the mutual
/// contamination that deflation against slightly inexact states leaves.
///
/// The span is deliberately not enlarged with residual directions. Those
/// carry high-wavenumber content that imaginary time had damped, and the
/// linearized shift in the higher-order real-time steps is not unitary at
/// large κ, so such states drift once propagated.
/// Skipped when the projected matrix is not real (the solver only handles
/// the real case, which is all real trials ever produce).
fn rayleigh_ritz(found: &mut [EigenResult], v: &[f64]) -> Result<(), EigenError> {
    let n = found.len();
    if n < 2 {
        return Ok(());
    }
    let hpsi = found
        .iter()
        .map(|r| apply_hamiltonian(&r.state, v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut m = alloc::vec![0.0; n * n];
    let mut imag: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = found[i].state.inner_product(&hpsi[j])?;
            m[i * n + j] = z.re;
            imag = imag.max(z.im.abs());
            scale = scale.max(z.re.abs());
        }
    }
    if imag > 1e-10 * scale.max(1.0) {
        return Ok(());
    }
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
    let (_, vecs) = jacobi_eigen(m, n, 1e-12 * scale.max(1.0));
    let mut rotated = Vec::with_capacity(n);
    for c in 0..n {
        let mut phi = Wavefunction::zeros(found[0].state.grid().clone());
        for i in 0..n {
            let w = vecs[i * n + c];
            if w != 0.0 {
                phi.add_scaled(Complex64::new(w, 0.0), &found[i].state)?;
            }
        }
        let mut phi = phi.normalize()?.0;
        fix_phase(&mut phi);
        let energy = energy_with_field(&phi, v)?;
        let residual = residual(&phi, v, energy)?;
        rotated.push((energy, residual, phi));
    }
    // Columns of the identity stay with their own level; otherwise the
    // rotated set is relabelled by energy together with `found`.
    rotated.sort_by(|a, b| a.0.total_cmp(&b.0));
    found.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    for (r, (energy, residual, state)) in found.iter_mut().zip(rotated) {
        r.energy = energy;
        r.residual = residual;
        r.state = state;
    }
    Ok(())
}

/// Rotates `psi` so that `Σ ψ·Π_d(1 + (β_d−o_d)/L_d)` is real and positive.
pub fn fix_phase(psi: &mut Wavefunction) {
    let grid = psi.grid().clone();
    let s: Complex64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let p = grid.point(i);
            let w: f64 = grid
                .axes()
                .iter()
                .enumerate()
                .map(|(d, ax)| 1.0 + (p[d] - ax.origin()) / ax.length())
                .product();
            a * w
        })
        .sum();
    if s.norm() > 0.0 {
        psi.scale(s.conj() / s.norm());
    }
}

/// [`deflate`], normalizing even when `basis` is empty.
fn project_out(psi: &Wavefunction, basis: &[Wavefunction]) -> Result<Wavefunction, EigenError> {
    if basis.is_empty() {
        Ok(psi.normalize()?.0)
    } else {
        deflate(psi, basis)
    }
}

fn static_hamiltonian(h: &Hamiltonian) -> Result<Hamiltonian, PropagatorError> {
    if h.is_static() {
        Ok(h.clone())
    } else {
        h.frozen(0.0)
    }
}

/// Relaxes `psi_trial` in imaginary time, deflating against `basis`.
/// Time-dependent Hamiltonians are frozen at τ = 0.
pub fn relax(
    psi_trial: &Wavefunction,
    h: &Hamiltonian,
    basis: &[Wavefunction],
    opts: &EigenOptions,
) -> Result<EigenResult, EigenError> {
    relax_in_class(psi_trial, h, basis, opts, &[])
}

/// Axes along which the sampled potential is mirror-symmetric about the
/// grid origin.
fn mirror_axes(grid: &Grid, v: &[f64]) -> Vec<usize> {
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    (0..grid.dims())
        .filter(|&d| (0..v.len()).all(|i| (v[i] - v[grid.mirror_index_along(i, d)]).abs() <= 1e-12 * scale))
        .collect()
}

/// Projects onto the class `ψ(…, −β_d, …) = s·ψ(…, β_d, …)` for each
/// `(d, s)`. Roundoff breaks the symmetry at the 1e-16 level and imaginary
/// time amplifies any lower level it seeds, so long relaxations drift out
/// of the trial's class without this.
fn symmetrize(psi: &mut Wavefunction, class: &[(usize, f64)]) {
    let grid = psi.grid().clone();
    for &(d, sign) in class {
        let a = psi.amplitudes_mut();
        for i in 0..a.len() {
            let m = grid.mirror_index_along(i, d);
            if m > i {
                let avg = 0.5 * (a[i] + a[m] * sign);
                a[i] = avg;
                a[m] = avg * sign;
            }
        }
    }
}

fn relax_in_class(
    psi_trial: &Wavefunction,
    h: &Hamiltonian,
    basis: &[Wavefunction],
    opts: &EigenOptions,
    class: &[(usize, f64)],
) -> Result<EigenResult, EigenError> {
    if !(opts.energy_tolerance > 0.0) || opts.reorth_every == 0 {
        return Err(EigenError::BadOptions);
    }
    let h = static_hamiltonian(h)?;
    let v = h.potential_field(0.0)?;
    let cfg = StepConfig {
        dtau_base: opts.dtau_base,
        ..StepConfig::default()
    };
    let mut dtau = choose_timestep(h.alpha_at(0.0)?, &cfg);
    let mut stepper = Stepper::new();
    let mut psi = project_out(psi_trial, basis)?;
    let mut energy = energy_with_field(&psi, &v)?;
    let mut trace = alloc::vec![energy];
    let mut steps = 0usize;
    let mut refinements = 0u32;
    loop {
        if steps >= opts.max_steps {
            return Err(EigenError::NotConverged {
                steps,
                last_energy: energy,
                energy_trace: trace,
            });
        }
        let next = stepper.step(&psi, &h, 0.0, dtau, opts.order, Mode::Imaginary)?;
        if !next.is_finite() {
            return Err(PropagatorError::NonFinite { tau: steps as f64 * dtau }.into());
        }
        steps += 1;
        let mut next = next;
        symmetrize(&mut next, class);
        psi = if steps % opts.reorth_every == 0 {
            project_out(&next, basis)?
        } else {
            next.normalize()?.0
        };
        let next_energy = energy_with_field(&psi, &v)?;
        trace.push(next_energy);
        let settled = (next_energy - energy).abs() < opts.energy_tolerance * dtau;
        energy = next_energy;
        if settled {
            let r = residual(&psi, &v, energy)?;
            if r < opts.residual_target || refinements >= opts.max_refinements {
                break;
            }
            dtau *= 0.5;
            refinements += 1;
        }
    }
    let mut state = project_out(&psi, basis)?;
    fix_phase(&mut state);
    let energy = energy_with_field(&state, &v)?;
    let residual = residual(&state, &v, energy)?;
    Ok(EigenResult {
        energy,
        state,
        steps_taken: steps,
        residual,
        energy_trace: trace,
        dtau,
    })
}

/// Trial quantum numbers in enumeration order: by total, then
/// lexicographically (`(0,0), (0,1), (1,0), (0,2), …` in 2D).
pub fn quantum_numbers(dims: usize, count: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(count);
    let mut total = 0u32;
    while out.len() < count {
        let mut level = Vec::new();
        collect(dims, total, &mut Vec::new(), &mut level);
        for q in level {
            if out.len() == count {
                break;
            }
            out.push(q);
        }
        total += 1;
    }
    out
}

fn collect(dims: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == dims {
        let mut q = prefix.clone();
        q.push(remaining);
        out.push(q);
        return;
    }
    for first in 0..=remaining {
        prefix.push(first);
        collect(dims, remaining - first, prefix, out);
        prefix.pop();
    }
}

/// `count` eigenpairs in nondecreasing energy order.
pub fn spectrum(h: &Hamiltonian, count: usize, opts: &EigenOptions) -> Result<Vec<EigenResult>, EigenError> {
    if count == 0 {
        return Err(EigenError::ZeroCount);
    }
    let h = static_hamiltonian(h)?;
    let grid = h.grid().clone();
    let v = h.potential_field(0.0)?;
    let symmetric = mirror_axes(&grid, &v);
    let mut found: Vec<EigenResult> = Vec::with_capacity(count);
    for (index, q) in quantum_numbers(grid.dims(), count).into_iter().enumerate() {
        let level = |e: EigenError| EigenError::Level {
            index,
            source: Box::new(e),
        };
        let trial = trial_state(&grid, h.potential(), &q).map_err(level)?;
        let class: Vec<(usize, f64)> = symmetric
            .iter()
            .map(|&d| (d, if q[d] % 2 == 1 { -1.0 } else { 1.0 }))
            .collect();
        let basis: Vec<Wavefunction> = found.iter().map(|r| r.state.clone()).collect();
        found.push(relax_in_class(&trial, &h, &basis, opts, &class).map_err(level)?);
    }
    rayleigh_ritz(&mut found, &v)?;
    found.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_potential;
    use crate::grid::{make_grid, AxisSpec};
    use alloc::sync::Arc;
    use core::f64::consts::PI;

    fn harmonic(n: usize) -> Hamiltonian {
        let g = Arc::new(make_grid(n, 1.0, &[AxisSpec::alpha_scaled()]).unwrap());
        Hamiltonian::new(g, &parse_potential("x^2").unwrap(), &parse_potential("1").unwrap()).unwrap()
    }

    #[test]
    fn enumeration_order() {
        assert_eq!(quantum_numbers(1, 3), [[0], [1], [2]]);
        assert_eq!(
            quantum_numbers(2, 4),
            alloc::vec![alloc::vec![0, 0], alloc::vec![0, 1], alloc::vec![1, 0], alloc::vec![0, 2]]
        );
        assert_eq!(quantum_numbers(3, 4)[3], [1, 0, 0]);
    }

    #[test]
    fn trial_parity() {
        let h = harmonic(64);
        let g = h.grid().clone();
        let even = trial_state(&g, h.potential(), &[0]).unwrap();
        let odd = trial_state(&g, h.potential(), &[1]).unwrap();
        assert!((even.norm() - 1.0).abs() < 1e-12);
        for i in 0..g.len() {
            let m = g.mirror_index(i);
            assert_eq!(even.amplitudes()[i], even.amplitudes()[m]);
            assert_eq!(odd.amplitudes()[i], -odd.amplitudes()[m]);
        }
    }

    #[test]
    fn symmetrize_projects_onto_parity_class() {
        let g = Arc::new(make_grid(16, 1.0, &[AxisSpec::boxed(4.0), AxisSpec::periodic(2.0 * PI)]).unwrap());
        let mut psi = Wavefunction::from_fn(g.clone(), |p| Complex64::new(1.0 + p[0] + p[1] * p[1], p[0] * p[1]));
        symmetrize(&mut psi, &[(0, -1.0), (1, 1.0)]);
        for i in 0..g.len() {
            let a = psi.amplitudes();
            assert!((a[i] + a[g.mirror_index_along(i, 0)]).norm() < 1e-14);
            assert!((a[i] - a[g.mirror_index_along(i, 1)]).norm() < 1e-14);
        }
        let v: Vec<f64> = g.points().iter().map(|p| p[0] * p[0] + p[1]).collect();
        assert_eq!(mirror_axes(&g, &v), [0]);
    }

    #[test]
    fn jacobi_diagonalizes_small_symmetric_matrix() {
        let a = alloc::vec![2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let (mut vals, vecs) = jacobi_eigen(a.clone(), 3, 1e-15);
        // A·v = λ·v for every column.
        for c in 0..3 {
            for r in 0..3 {
                let av: f64 = (0..3).map(|k| a[r * 3 + k] * vecs[k * 3 + c]).sum();
                assert!((av - vals[c] * vecs[r * 3 + c]).abs() < 1e-12);
            }
        }
        vals.sort_by(f64::total_cmp);
        for (v, want) in vals.iter().zip([1.0, 3.0, 5.0]) {
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_leaves_tiny_couplings_alone() {
        let a = alloc::vec![1.0, 1e-16, 1e-16, 1.0];
        let (_, vecs) = jacobi_eigen(a, 2, 1e-12);
        assert_eq!(vecs, alloc::vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn periodic_trial_peaks_in_valleys() {
        let g = Arc::new(make_grid(64, 1.0, &[AxisSpec::periodic(2.0 * PI)]).unwrap());
        let u = parse_potential("2+2*cos(2*x)").unwrap();
        let psi = trial_state(&g, &u, &[0]).unwrap();
        let (imax, _) = psi
            .amplitudes()
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (i, a)| if a.norm() > best.1 { (i, a.norm()) } else { best });
        let x = g.point(imax)[0];
        let umin = (0..g.len()).map(|i| u.eval(&Point::new(g.point(i), 0.0)).unwrap()).fold(f64::INFINITY, f64::min);
        let at_peak = u.eval(&Point::new([x, 0.0, 0.0], 0.0)).unwrap();
        assert!((at_peak - umin).abs() < 1e-12, "{at_peak} vs {umin}");
    }

    #[test]
    fn deflation() {
        let h = harmonic(64);
        let g = h.grid().clone();
        let a = trial_state(&g, h.potential(), &[0]).unwrap();
        assert_eq!(deflate(&a, &[]).unwrap().amplitudes(), a.amplitudes());
        assert!(matches!(deflate(&a, &[a.clone()]), Err(EigenError::ZeroRemainder(_))));
        let b = deflate(&trial_state(&g, h.potential(), &[1]).unwrap(), &[a.clone()]).unwrap();
        let noisy = Wavefunction::from_fn(g.clone(), |p| Complex64::new((3.1 * p[0]).sin() + 0.2, (-(p[0] - 0.4).powi(2)).exp()));
        let r = deflate(&noisy, &[a.clone(), b.clone()]).unwrap();
        assert!(a.inner_product(&r).unwrap().norm() < 1e-12);
        assert!(b.inner_product(&r).unwrap().norm() < 1e-12);
        assert!((r.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_levels() {
        let h = harmonic(128);
        let levels = spectrum(&h, 4, &EigenOptions::default()).unwrap();
        for (n, r) in levels.iter().enumerate() {
            assert!((r.energy - (2 * n + 1) as f64).abs() < 1e-3, "level {n}: {:?}", levels.iter().map(|r| (r.energy, r.steps_taken, r.residual)).collect::<Vec<_>>());
            assert!(r.residual < 1e-4);
            let g = r.state.grid();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..g.len() {
                let m = g.mirror_index(i);
                assert!((r.state.amplitudes()[i] - sign * r.state.amplitudes()[m]).norm() < 1e-6);
            }
        }
        for a in &levels {
            for b in &levels {
                let o = a.state.inner_product(&b.state).unwrap();
                let expect = if core::ptr::eq(a, b) { 1.0 } else { 0.0 };
                assert!((o - Complex64::new(expect, 0.0)).norm() < 1e-6);
            }
        }
        let trace = &levels[0].energy_trace;
        for w in trace[100.min(trace.len())..].windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn max_steps_reports_trace() {
        let h = harmonic(64);
        let trial = trial_state(h.grid(), h.potential(), &[0]).unwrap();
        let opts = EigenOptions {
            max_steps: 5,
            ..EigenOptions::default()
        };
        match relax(&trial, &h, &[], &opts) {
            Err(EigenError::NotConverged { steps, energy_trace, .. }) => {
                assert_eq!(steps, 5);
                assert_eq!(energy_trace.len(), 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
