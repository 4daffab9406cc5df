//! Shipped scenarios. Each is stored as config text so `splitstep list`
//! can print a template and every builtin exercises the loader.

use thiserror::Error;

use crate::config::{load_config, ConfigError, Scenario};

#[derive(Debug, Error)]
pub enum BuiltinError {
    #[error("unknown builtin `{name}`; available: {}", NAMES.join(", "))]
    Unknown { name: String },
    #[error("builtin `{name}` is malformed: {source}")]
    Malformed {
        name: &'static str,
        #[source]
        source: ConfigError,
    },
}

pub const NAMES: [&str; 9] = [
    "harmonic",
    "mathieu",
    "cosine100",
    "twod",
    "gauss_free",
    "gauss_wall",
    "gauss_box",
    "squid_static",
    "squid_not",
];

const HARMONIC: &str = r#"# Oscillator levels 2n+1.
name = harmonic
potential = "x^2"
alpha = "1"

[grid]
n = 256
extent = alpha

[eigen]
count = 4
"#;

const MATHIEU: &str = r#"# Lowest eleven levels of U = 2 + 2 cos 2x over one 2π period.
name = mathieu
potential = "2 + 2*cos(2*x)"
alpha = "1"

[grid]
n = 256
extent = periodic
period = 2*pi

[eigen]
count = 11
"#;

const COSINE100: &str = r#"# Deep cosine wells: near-degenerate tunnelling doublets.
name = cosine100
potential = "2 + 2*cos(2*x)"
alpha = "100"

[grid]
n = 256
extent = periodic
period = 2*pi

[eigen]
count = 10
# Levels near E = 170 need a tighter settle criterion to reach residual 1e-4.
tolerance = 1e-10
"#;

const TWOD: &str = r#"# 2D eigenstates; (ψ00 + ψ01)/√2 beats with period 2π/(E01 - E00).
name = twod
potential = "3 + cos(2*y) - 2*cos(x)*cos(y)"
alpha = "1"

[grid]
dims = 2
n = 128
extent = periodic
period = 2*pi

[eigen]
count = 3

[init]
kind = superposition
states = 0, 1
weights = 1, 1

[evolve]
t_end = 8.1
order = 2
mode = real
snapshots = 5

[region]
upper = "-pi, pi; 0, pi"

[output]
series_every = 10
"#;

const GAUSS_FREE: &str = r#"# Free packet. Horizon 1 keeps it far from the box edge (mean 8, spread 1.6).
name = gauss_free
potential = "0"
alpha = "1"

[grid]
n = 1024
extent = box
length = 32

[init]
kind = gaussian
beta0 = 0
sigma0 = 1/sqrt(2)
k0 = 4

[evolve]
t_end = 1
order = 2
mode = real
snapshots = 5
"#;

const GAUSS_WALL: &str = r#"# Packet reflecting off a hard wall at β = 8.
name = gauss_wall
potential = "wall(-17, 8)"
alpha = "1"

[grid]
n = 1024
extent = box
length = 32

[init]
kind = gaussian
beta0 = 0
sigma0 = 1/sqrt(2)
k0 = 4

[evolve]
t_end = 2.5
order = 2
mode = real
dtau_base = 5e-4
snapshots = 6

[output]
series_every = 20
"#;

const GAUSS_BOX: &str = r#"# Packet bouncing between walls at ±8; the mean decays toward the centre.
name = gauss_box
potential = "wall(-8, 8)"
alpha = "1"

[grid]
n = 1024
extent = box
length = 32

[init]
kind = gaussian
beta0 = 0
sigma0 = 1/sqrt(2)
k0 = 4

[evolve]
t_end = 40
order = 2
mode = real
dtau_base = 5e-4
snapshots = 9

[region]
left = "-8, 0"
right = "0, 8"

[output]
series_every = 100
"#;

const SQUID_STATIC: &str = r#"# SQUID double well at α = 10: (ψ0 + ψ1)/√2 stays in the positive well.
name = squid_static
potential = "(x - phi0)^2/(2*beta_l) + 1 - cos(x)"
alpha = "10"

[param]
beta_l = pi
phi0 = pi

[grid]
n = 512
extent = box
length = 16
origin = phi0

[eigen]
count = 4

[init]
kind = superposition
states = 0, 1
weights = 1, 1

[evolve]
t_end = 10
order = 2
mode = real
snapshots = 5

[region]
neg = "phi0 - 8, phi0"
pos = "phi0, phi0 + 8"

[output]
series_every = 10
"#;

const SQUID_NOT: &str = r#"# NOT gate: α drops from 10 to 0.4 for about half the α = 0.4 beat period
# (12.8), letting the state tunnel to the negative well, then returns to 10.
name = squid_not
potential = "(x - phi0)^2/(2*beta_l) + 1 - cos(x)"
alpha = "10 - 4.8*(erf((t - 5)/(0.8*sqrt(2))) - erf((t - 17.8)/(1.6*sqrt(2))))"

[param]
beta_l = pi
phi0 = pi

[grid]
n = 512
extent = box
length = 16
origin = phi0

[eigen]
count = 4
probe_alpha = 0.4

[init]
kind = superposition
states = 0, 1
weights = 1, 1

[evolve]
t_end = 24.2
order = 2
mode = real
snapshots = 12

[region]
neg = "phi0 - 8, phi0"
pos = "phi0, phi0 + 8"

[output]
series_every = 10
"#;

/// Config text of a builtin.
pub fn builtin_text(name: &str) -> Result<&'static str, BuiltinError> {
    Ok(match name {
        "harmonic" => HARMONIC,
        "mathieu" => MATHIEU,
        "cosine100" => COSINE100,
        "twod" => TWOD,
        "gauss_free" => GAUSS_FREE,
        "gauss_wall" => GAUSS_WALL,
        "gauss_box" => GAUSS_BOX,
        "squid_static" => SQUID_STATIC,
        "squid_not" => SQUID_NOT,
        _ => return Err(BuiltinError::Unknown { name: name.into() }),
    })
}

pub fn builtin(name: &str) -> Result<Scenario, BuiltinError> {
    let text = builtin_text(name)?;
    let key = NAMES.iter().find(|n| **n == name).expect("text found");
    load_config(text).map_err(|source| BuiltinError::Malformed { name: key, source })
}

/// First comment line of a builtin.
pub fn describe(name: &str) -> Result<&'static str, BuiltinError> {
    let text = builtin_text(name)?;
    Ok(text.lines().next().and_then(|l| l.strip_prefix("# ")).unwrap_or(""))
}

/// α(τ) of the NOT-gate pulse.
pub fn alpha_schedule_not_gate(tau: f64) -> f64 {
    use splitstep_core::dsl::Point;
    builtin("squid_not")
        .expect("shipped")
        .alpha_expr()
        .expect("shipped")
        .eval(&Point::time(tau))
        .expect("finite")
}
