//! Eigensolver vs dense oracle on every shipped 1D spectrum.

use splitstep_core::{spectrum, EigenError};
use thiserror::Error;

use crate::builtin::{builtin, BuiltinError, NAMES};
use crate::config::SetupError;
use crate::oracle::{dense_hamiltonian, oracle_spectrum, OracleError, MAX_POINTS};

/// Agreement required between the two solvers.
pub const ORACLE_TOLERANCE: f64 = 5e-3;

/// Levels compared per scenario.
pub const LEVELS: usize = 4;

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
    #[error("{scenario}: {source}")]
    Setup {
        scenario: &'static str,
        #[source]
        source: SetupError,
    },
    #[error("{scenario}: oracle: {source}")]
    Oracle {
        scenario: &'static str,
        #[source]
        source: OracleError,
    },
    #[error("{scenario}: eigensolver: {source}")]
    Eigen {
        scenario: &'static str,
        #[source]
        source: EigenError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub scenario: &'static str,
    pub level: usize,
    pub eigensolver: f64,
    pub oracle: f64,
}

impl OracleCheck {
    pub fn difference(&self) -> f64 {
        (self.eigensolver - self.oracle).abs()
    }

    pub fn passed(&self) -> bool {
        self.difference() < ORACLE_TOLERANCE
    }
}

/// Builtins with a spectrum small enough for the dense oracle.
pub fn oracle_scenarios() -> Result<Vec<&'static str>, BuiltinError> {
    let mut out = Vec::new();
    for name in NAMES {
        let s = builtin(name)?;
        if s.eigen.is_some() && s.grid.n.pow(s.grid.dims as u32) <= MAX_POINTS {
            out.push(name);
        }
    }
    Ok(out)
}

pub fn check_scenario(scenario: &'static str) -> Result<Vec<OracleCheck>, ValidateError> {
    let s = builtin(scenario)?;
    let setup = |source| ValidateError::Setup { scenario, source };
    let grid = s.build_grid().map_err(setup)?;
    let h = s.hamiltonian(&grid).map_err(setup)?;
    let tau = s.t_start();
    let count = LEVELS.min(s.eigen.as_ref().map_or(0, |e| e.count));
    let oracle = dense_hamiltonian(&h, tau)
        .and_then(|d| oracle_spectrum(&d, count))
        .map_err(|source| ValidateError::Oracle { scenario, source })?;
    let opts = s.eigen_options().unwrap_or_default();
    let solved = spectrum(&h, count, &opts).map_err(|source| ValidateError::Eigen { scenario, source })?;
    Ok(solved
        .iter()
        .zip(oracle)
        .enumerate()
        .map(|(level, (r, o))| OracleCheck {
            scenario,
            level,
            eigensolver: r.energy,
            oracle: o,
        })
        .collect())
}

/// Every check over every eligible builtin.
pub fn oracle_suite() -> Result<Vec<OracleCheck>, ValidateError> {
    let mut all = Vec::new();
    for name in oracle_scenarios()? {
        all.extend(check_scenario(name)?);
    }
    Ok(all)
}
