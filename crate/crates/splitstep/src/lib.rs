//! Scenario files, shipped experiments, run output, the dense reference
//! oracle and the `splitstep` command line, on top of `splitstep-core`.

pub mod builtin;
pub mod config;
pub mod oracle;
pub mod run;
pub mod validate;

pub use builtin::{alpha_schedule_not_gate, builtin, BuiltinError, NAMES};
pub use config::{load_config, read_config, ConfigError, Scenario};
pub use oracle::{dense_hamiltonian, expm_evolve, oracle_spectrum, DenseHamiltonian, OracleError, OracleTime};
pub use run::{run, run_full, RunError, RunReport};
