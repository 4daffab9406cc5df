//! Scenario files.
//!
//! Line-oriented `key = value` pairs grouped by `[section]` headers. A key
//! written as `section.key` at the top of the file is equivalent to the
//! same key inside `[section]`. `#` starts a comment outside quotes; a value
//! may be wrapped in double quotes. Numeric values are constant expressions
//! and may use `pi` and any `param.NAME` (params may reference earlier
//! params). `potential` and `alpha` are expressions in `x, y, z, t`.
//!
//! ```text
//! name = "harmonic"
//! potential = "x^2"
//! alpha = "1"
//!
//! [grid]
//! dims = 1
//! n = 256
//! extent = alpha
//!
//! [eigen]
//! count = 4
//! ```
//!
//! Keys (defaults in parentheses):
//!
//! | section  | keys |
//! |----------|------|
//! | top      | `name`, `potential`, `alpha` (`1`) |
//! | `param`  | any identifier |
//! | `grid`   | `dims` (1), `n`, `extent` = `periodic`/`box`/`alpha`, `period`, `length`, `origin` (0) |
//! | `init`   | `kind` = `eigen`/`gaussian`/`superposition`, `index`, `beta0`, `sigma0`, `k0`, `states`, `weights` |
//! | `evolve` | `t_start` (0), `t_end`, `order` (2), `mode` = `real`/`imaginary`, `dtau_base` (0.01), `dynamic` (false), `renormalize`, `snapshots` (0) |
//! | `eigen`  | `count`, `tolerance` (1e-8), `max_steps`, `reorth_every` (1), `order` (2), `dtau_base` (0.01), `residual_target` (1e-4), `probe_alpha` |
//! | `region` | any identifier = `"lo, hi[; lo, hi ...]"` (one interval per dimension) |
//! | `output` | `series_every` (1), `amplitudes` (false) |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use splitstep_core::dsl::Point;
use splitstep_core::propagator::{Hamiltonian, Mode, Order, PropagatorError, StepConfig};
use splitstep_core::{parse_with_params, AxisSpec, DslError, EigenOptions, Expr, Grid, GridError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}`: {source}")]
    Expression {
        line: usize,
        key: String,
        #[source]
        source: DslError,
    },
    #[error("line {line}: `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridExtent {
    Periodic { period: f64 },
    Box { length: f64 },
    AlphaScaled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dims: usize,
    pub n: usize,
    pub extent: GridExtent,
    /// Centre of every axis.
    pub origin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Eigenstate `index` of the solved spectrum.
    Eigen { index: usize },
    /// `(2πσ²)^{-d/4} e^{-|β-β0|²/4σ²} e^{ik0·β}`, one entry of `beta0`/`k0`
    /// per dimension.
    Gaussian { beta0: Vec<f64>, sigma0: f64, k0: Vec<f64> },
    /// `Σ w_i ψ_i`, renormalized.
    Superposition { states: Vec<usize>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub order: Order,
    pub mode: Mode,
    pub dtau_base: f64,
    pub dynamic: bool,
    pub renormalize: Option<bool>,
    /// Evenly spaced snapshot count over `[t_start, t_end]`.
    pub snapshots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpec {
    pub count: usize,
    pub tolerance: f64,
    pub max_steps: usize,
    pub reorth_every: usize,
    pub order: Order,
    pub dtau_base: f64,
    pub residual_target: f64,
    /// Also solve the spectrum at this constant α.
    pub probe_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub series_every: usize,
    pub amplitudes: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            series_every: 1,
            amplitudes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub potential: String,
    pub alpha: String,
    pub params: BTreeMap<String, f64>,
    pub grid: GridSpec,
    pub init: Option<InitSpec>,
    pub evolve: Option<EvolveSpec>,
    pub eigen: Option<EigenSpec>,
    pub regions: Vec<Region>,
    pub output: OutputSpec,
}

const SECTIONS: [&str; 7] = ["param", "grid", "init", "evolve", "eigen", "region", "output"];

struct Entry {
    line: usize,
    value: String,
}

/// Raw `section.key → value` map plus lookup helpers that remember which
/// keys were consumed.
struct Table {
    entries: BTreeMap<String, Entry>,
    params: BTreeMap<String, f64>,
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(value: &str, line: usize) -> Result<String, ConfigError> {
    let v = value.trim();
    if let Some(rest) = v.strip_prefix('"') {
        let inner = rest.strip_suffix('"').ok_or_else(|| ConfigError::Syntax {
            line,
            message: "unterminated string".into(),
        })?;
        if inner.contains('"') {
            return Err(ConfigError::Syntax {
                line,
                message: "stray quote in value".into(),
            });
        }
        Ok(inner.to_string())
    } else if v.contains('"') {
        Err(ConfigError::Syntax {
            line,
            message: "stray quote in value".into(),
        })
    } else {
        Ok(v.to_string())
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn lex(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut section: Option<String> = None;
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: "unterminated section header".into(),
            })?;
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        if key.is_empty() || !key.split('.').all(is_ident) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("malformed key `{key}`"),
            });
        }
        let full = match &section {
            Some(s) if key.contains('.') => {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("dotted key `{key}` inside [{s}]"),
                })
            }
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        let value = unquote(value, line)?;
        if entries.contains_key(&full) {
            return Err(ConfigError::Duplicate { line, key: full });
        }
        entries.insert(full, Entry { line, value });
    }
    Ok(entries)
}

impl Table {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn names(&self) -> Vec<&str> {
        self.params.keys().map(String::as_str).collect()
    }

    fn constant(&self, key: &str, e: &Entry) -> Result<f64, ConfigError> {
        let expr_err = |source| ConfigError::Expression {
            line: e.line,
            key: key.to_string(),
            source,
        };
        let expr = parse_with_params(&e.value, &self.names()).map_err(expr_err)?;
        if expr.is_spatial() || expr.depends_on(splitstep_core::dsl::Var::T) {
            return Err(ConfigError::Value {
                line: e.line,
                key: key.into(),
                message: "must be a constant".into(),
            });
        }
        let v = expr
            .bind(&self.params)
            .and_then(|b| b.eval(&Point::time(0.0)))
            .map_err(expr_err)?;
        Ok(v)
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            Some(e) => self.constant(key, &e).map(Some),
            None => Ok(None),
        }
    }

    fn real_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(e) = self.take(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|part| {
                self.constant(
                    key,
                    &Entry {
                        line: e.line,
                        value: part.trim().to_string(),
                    },
                )
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn integer(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some(e) = self.take(key) else { return Ok(None) };
        e.value.trim().parse::<usize>().map(Some).map_err(|_| ConfigError::Value {
            line: e.line,
            key: key.into(),
            message: format!("expected a non-negative integer, got `{}`", e.value),
        })
    }

    fn integer_list(&mut self, key: &str) -> Result<Option<Vec<usize>>, ConfigError> {
        let Some(e) = self.take(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|p| {
                p.trim().parse::<usize>().map_err(|_| ConfigError::Value {
                    line: e.line,
                    key: key.into(),
                    message: format!("expected integers, got `{}`", e.value),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        let Some(e) = self.take(key) else { return Ok(None) };
        match e.value.trim() {
            "true" => Ok(Some(true)),
            "false" => Ok(Some(false)),
            other => Err(ConfigError::Value {
                line: e.line,
                key: key.into(),
                message: format!("expected true or false, got `{other}`"),
            }),
        }
    }

    fn order(&mut self, key: &str) -> Result<Option<Order>, ConfigError> {
        let line = self.entries.get(key).map(|e| e.line).unwrap_or(0);
        match self.integer(key)? {
            None => Ok(None),
            Some(n) => Order::from_number(n as u32).map(Some).ok_or_else(|| ConfigError::Value {
                line,
                key: key.into(),
                message: format!("order must be 1, 2 or 3, got {n}"),
            }),
        }
    }
}

fn value_error(e: &Entry, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        line: e.line,
        key: key.into(),
        message: message.into(),
    }
}

pub fn load_config(text: &str) -> Result<Scenario, ConfigError> {
    let mut t = Table {
        entries: lex(text)?,
        params: BTreeMap::new(),
    };

    // Params first, in line order so later params can use earlier ones.
    let mut param_keys: Vec<(usize, String)> = t
        .entries
        .iter()
        .filter_map(|(k, e)| k.strip_prefix("param.").map(|n| (e.line, n.to_string())))
        .collect();
    param_keys.sort();
    for (line, name) in param_keys {
        let key = format!("param.{name}");
        if name.contains('.') {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if matches!(name.as_str(), "x" | "y" | "z" | "t" | "pi") {
            return Err(ConfigError::Value {
                line,
                key,
                message: "reserved name".into(),
            });
        }
        let e = t.take(&key).expect("listed above");
        let v = t.constant(&key, &e)?;
        t.params.insert(name, v);
    }

    let name = t.take("name").map(|e| e.value).unwrap_or_else(|| "scenario".into());
    let potential_entry = t.take("potential").ok_or(ConfigError::Missing("potential"))?;
    let alpha_entry = t.take("alpha").unwrap_or(Entry {
        line: 0,
        value: "1".into(),
    });
    checked_expr(&t, "potential", &potential_entry)?;
    let a = checked_expr(&t, "alpha", &alpha_entry)?;
    if a.is_spatial() {
        return Err(value_error(&alpha_entry, "alpha", "α may depend on t only"));
    }

    let grid = {
        let dims = t.integer("grid.dims")?.unwrap_or(1);
        if !(1..=3).contains(&dims) {
            return Err(ConfigError::Invalid(format!("grid.dims must be 1, 2 or 3, got {dims}")));
        }
        let n = t.integer("grid.n")?.ok_or(ConfigError::Missing("grid.n"))?;
        let extent_entry = t.take("grid.extent").ok_or(ConfigError::Missing("grid.extent"))?;
        let period = t.real("grid.period")?;
        let length = t.real("grid.length")?;
        let extent = match extent_entry.value.trim() {
            "periodic" => GridExtent::Periodic {
                period: period.ok_or(ConfigError::Missing("grid.period"))?,
            },
            "box" => GridExtent::Box {
                length: length.ok_or(ConfigError::Missing("grid.length"))?,
            },
            "alpha" => GridExtent::AlphaScaled,
            other => {
                return Err(value_error(
                    &extent_entry,
                    "grid.extent",
                    format!("expected periodic, box or alpha, got `{other}`"),
                ))
            }
        };
        let stray = match extent {
            GridExtent::Periodic { .. } => length.map(|_| "grid.length"),
            GridExtent::Box { .. } => period.map(|_| "grid.period"),
            GridExtent::AlphaScaled => period.map(|_| "grid.period").or(length.map(|_| "grid.length")),
        };
        if let Some(key) = stray {
            return Err(ConfigError::Invalid(format!("`{key}` does not apply to extent `{}`", extent_entry.value.trim())));
        }
        GridSpec {
            dims,
            n,
            extent,
            origin: t.real_or("grid.origin", 0.0)?,
        }
    };

    let eigen = if t.entries.keys().any(|k| k.starts_with("eigen.")) {
        let count = t.integer("eigen.count")?.ok_or(ConfigError::Missing("eigen.count"))?;
        let d = EigenOptions::default();
        Some(EigenSpec {
            count,
            tolerance: t.real_or("eigen.tolerance", d.energy_tolerance)?,
            max_steps: t.integer("eigen.max_steps")?.unwrap_or(d.max_steps),
            reorth_every: t.integer("eigen.reorth_every")?.unwrap_or(d.reorth_every),
            order: t.order("eigen.order")?.unwrap_or(d.order),
            dtau_base: t.real_or("eigen.dtau_base", d.dtau_base)?,
            residual_target: t.real_or("eigen.residual_target", d.residual_target)?,
            probe_alpha: t.real("eigen.probe_alpha")?,
        })
    } else {
        None
    };

    let init = match t.take("init.kind") {
        None => None,
        Some(kind) => Some(match kind.value.trim() {
            "eigen" => InitSpec::Eigen {
                index: t.integer("init.index")?.ok_or(ConfigError::Missing("init.index"))?,
            },
            "gaussian" => {
                let broadcast = |v: Vec<f64>, key: &str| -> Result<Vec<f64>, ConfigError> {
                    match v.len() {
                        1 => Ok(vec![v[0]; grid.dims]),
                        n if n == grid.dims => Ok(v),
                        n => Err(ConfigError::Invalid(format!("`{key}` has {n} entries for {} dimensions", grid.dims))),
                    }
                };
                let beta0 = t.list("init.beta0")?.unwrap_or(vec![0.0]);
                let k0 = t.list("init.k0")?.unwrap_or(vec![0.0]);
                InitSpec::Gaussian {
                    beta0: broadcast(beta0, "init.beta0")?,
                    sigma0: t.real("init.sigma0")?.ok_or(ConfigError::Missing("init.sigma0"))?,
                    k0: broadcast(k0, "init.k0")?,
                }
            }
            "superposition" => {
                let states = t.integer_list("init.states")?.ok_or(ConfigError::Missing("init.states"))?;
                let weights = t.list("init.weights")?.unwrap_or_else(|| vec![1.0; states.len()]);
                InitSpec::Superposition { states, weights }
            }
            other => {
                return Err(value_error(
                    &kind,
                    "init.kind",
                    format!("expected eigen, gaussian or superposition, got `{other}`"),
                ))
            }
        }),
    };

    let evolve = if t.entries.keys().any(|k| k.starts_with("evolve.")) {
        let mode = match t.take("evolve.mode") {
            None => Mode::Real,
            Some(e) => match e.value.trim() {
                "real" => Mode::Real,
                "imaginary" => Mode::Imaginary,
                other => return Err(value_error(&e, "evolve.mode", format!("expected real or imaginary, got `{other}`"))),
            },
        };
        Some(EvolveSpec {
            t_start: t.real_or("evolve.t_start", 0.0)?,
            t_end: t.real("evolve.t_end")?.ok_or(ConfigError::Missing("evolve.t_end"))?,
            order: t.order("evolve.order")?.unwrap_or(Order::Second),
            mode,
            dtau_base: t.real_or("evolve.dtau_base", StepConfig::default().dtau_base)?,
            dynamic: t.boolean("evolve.dynamic")?.unwrap_or(false),
            renormalize: t.boolean("evolve.renormalize")?,
            snapshots: t.integer("evolve.snapshots")?.unwrap_or(0),
        })
    } else {
        None
    };

    let mut regions = Vec::new();
    let region_keys: Vec<String> = t.entries.keys().filter(|k| k.starts_with("region.")).cloned().collect();
    for key in region_keys {
        let e = t.take(&key).expect("listed");
        let name = key["region.".len()..].to_string();
        if name.contains('.') {
            return Err(ConfigError::UnknownKey { line: e.line, key });
        }
        let mut bounds = Vec::new();
        for interval in e.value.split(';') {
            let parts: Vec<&str> = interval.split(',').collect();
            if parts.len() != 2 {
                return Err(value_error(&e, &key, "each interval is `lo, hi`"));
            }
            let lo = t.constant(&key, &Entry { line: e.line, value: parts[0].trim().into() })?;
            let hi = t.constant(&key, &Entry { line: e.line, value: parts[1].trim().into() })?;
            if !(lo < hi) {
                return Err(value_error(&e, &key, "need lo < hi"));
            }
            bounds.push((lo, hi));
        }
        if bounds.len() != grid.dims {
            return Err(value_error(&e, &key, format!("{} intervals for {} dimensions", bounds.len(), grid.dims)));
        }
        regions.push(Region { name, bounds });
    }

    let output = OutputSpec {
        series_every: t.integer("output.series_every")?.unwrap_or(1),
        amplitudes: t.boolean("output.amplitudes")?.unwrap_or(false),
    };

    if let Some((key, e)) = t.entries.iter().min_by_key(|(_, e)| e.line) {
        return Err(ConfigError::UnknownKey {
            line: e.line,
            key: key.clone(),
        });
    }

    let scenario = Scenario {
        name,
        potential: potential_entry.value,
        alpha: alpha_entry.value,
        params: t.params,
        grid,
        init,
        evolve,
        eigen,
        regions,
        output,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn checked_expr(t: &Table, key: &str, e: &Entry) -> Result<Expr, ConfigError> {
    let expr = parse_with_params(&e.value, &t.names()).map_err(|source| ConfigError::Expression {
        line: e.line,
        key: key.into(),
        source,
    })?;
    expr.bind(&t.params).map_err(|source| ConfigError::Expression {
        line: e.line,
        key: key.into(),
        source,
    })
}

pub fn read_config(path: &std::path::Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_config(&text)
}

impl Scenario {
    /// Cross-field checks that hold for every loadable scenario.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') || self.name.is_empty() {
            return bad(format!("name `{}` must be non-empty [A-Za-z0-9_-]", self.name));
        }
        if let Some(m) = self.max_used_axis() {
            if m >= self.grid.dims {
                return bad(format!("potential uses axis {} on a {}-D grid", m + 1, self.grid.dims));
            }
        }
        let count = self.eigen.as_ref().map_or(0, |e| e.count);
        if let Some(e) = &self.eigen {
            if e.count == 0 {
                return bad("eigen.count must be positive".into());
            }
            if !(e.tolerance > 0.0) || !(e.dtau_base > 0.0) || !(e.residual_target > 0.0) || e.reorth_every == 0 {
                return bad("eigen tolerances, dtau_base and reorth_every must be positive".into());
            }
            if let Some(p) = e.probe_alpha {
                if !(p > 0.0 && p.is_finite()) {
                    return bad(format!("eigen.probe_alpha must be positive, got {p}"));
                }
            }
        }
        match &self.init {
            Some(InitSpec::Eigen { index }) if *index >= count => {
                return bad(format!("init.index {index} needs eigen.count > {index}"));
            }
            Some(InitSpec::Superposition { states, weights }) => {
                if states.is_empty() || states.len() != weights.len() {
                    return bad("init.states and init.weights must be non-empty and the same length".into());
                }
                if let Some(s) = states.iter().find(|s| **s >= count) {
                    return bad(format!("init.states refers to level {s} but eigen.count is {count}"));
                }
            }
            Some(InitSpec::Gaussian { sigma0, .. }) if !(*sigma0 > 0.0) => {
                return bad("init.sigma0 must be positive".into());
            }
            _ => {}
        }
        if let Some(ev) = &self.evolve {
            if self.init.is_none() {
                return bad("[evolve] needs an [init] section".into());
            }
            if !(ev.t_end >= ev.t_start) || !(ev.dtau_base > 0.0) {
                return bad("evolve needs t_end >= t_start and positive dtau_base".into());
            }
        } else if self.eigen.is_none() {
            return bad("nothing to do: add an [eigen] or [evolve] section".into());
        }
        if self.output.series_every == 0 {
            return bad("output.series_every must be positive".into());
        }
        self.potential_expr()?;
        self.alpha_expr()?;
        Ok(())
    }

    fn max_used_axis(&self) -> Option<usize> {
        self.potential_expr().ok()?.max_axis()
    }

    fn names(&self) -> Vec<&str> {
        self.params.keys().map(String::as_str).collect()
    }

    fn bound(&self, key: &str, text: &str) -> Result<Expr, ConfigError> {
        parse_with_params(text, &self.names())
            .and_then(|e| e.bind(&self.params))
            .map_err(|source| ConfigError::Expression {
                line: 0,
                key: key.into(),
                source,
            })
    }

    pub fn potential_expr(&self) -> Result<Expr, ConfigError> {
        self.bound("potential", &self.potential)
    }

    pub fn alpha_expr(&self) -> Result<Expr, ConfigError> {
        self.bound("alpha", &self.alpha)
    }

    pub fn t_start(&self) -> f64 {
        self.evolve.as_ref().map_or(0.0, |e| e.t_start)
    }

    /// Grid sized with α at the start of the run.
    pub fn build_grid(&self) -> Result<Arc<Grid>, SetupError> {
        let alpha = self.alpha_expr()?.eval(&Point::time(self.t_start()))?;
        let spec = match self.grid.extent {
            GridExtent::Periodic { period } => AxisSpec::periodic(period),
            GridExtent::Box { length } => AxisSpec::boxed(length),
            GridExtent::AlphaScaled => AxisSpec::alpha_scaled(),
        }
        .with_origin(self.grid.origin);
        let specs = vec![spec; self.grid.dims];
        Ok(Arc::new(splitstep_core::make_grid(self.grid.n, alpha, &specs)?))
    }

    pub fn hamiltonian(&self, grid: &Arc<Grid>) -> Result<Hamiltonian, SetupError> {
        Ok(Hamiltonian::new(grid.clone(), &self.potential_expr()?, &self.alpha_expr()?)?)
    }

    /// Same potential with a constant α.
    pub fn hamiltonian_at_alpha(&self, grid: &Arc<Grid>, alpha: f64) -> Result<Hamiltonian, SetupError> {
        Ok(Hamiltonian::new(grid.clone(), &self.potential_expr()?, &Expr::Num(alpha))?)
    }

    pub fn eigen_options(&self) -> Option<EigenOptions> {
        self.eigen.as_ref().map(|e| EigenOptions {
            energy_tolerance: e.tolerance,
            max_steps: e.max_steps,
            reorth_every: e.reorth_every,
            order: e.order,
            dtau_base: e.dtau_base,
            residual_target: e.residual_target,
            ..EigenOptions::default()
        })
    }

    /// `K` evenly spaced times over the evolution window, duplicates removed.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let Some(ev) = &self.evolve else { return Vec::new() };
        let k = ev.snapshots;
        let mut times: Vec<f64> = match k {
            0 => Vec::new(),
            1 => vec![ev.t_start],
            _ => (0..k)
                .map(|i| {
                    if i + 1 == k {
                        ev.t_end
                    } else {
                        ev.t_start + (ev.t_end - ev.t_start) * i as f64 / (k - 1) as f64
                    }
                })
                .collect(),
        };
        times.dedup();
        times
    }

    /// Canonical text form; `load_config(&s.serialize())` reproduces `s`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "name = \"{}\"", self.name);
        let _ = writeln!(w, "potential = \"{}\"", self.potential);
        let _ = writeln!(w, "alpha = \"{}\"", self.alpha);
        if !self.params.is_empty() {
            let _ = writeln!(w, "\n[param]");
            for (k, v) in &self.params {
                let _ = writeln!(w, "{k} = {}", num(*v));
            }
        }
        let _ = writeln!(w, "\n[grid]\ndims = {}\nn = {}", self.grid.dims, self.grid.n);
        match self.grid.extent {
            GridExtent::Periodic { period } => {
                let _ = writeln!(w, "extent = periodic\nperiod = {}", num(period));
            }
            GridExtent::Box { length } => {
                let _ = writeln!(w, "extent = box\nlength = {}", num(length));
            }
            GridExtent::AlphaScaled => {
                let _ = writeln!(w, "extent = alpha");
            }
        }
        let _ = writeln!(w, "origin = {}", num(self.grid.origin));
        if let Some(e) = &self.eigen {
            let _ = writeln!(w, "\n[eigen]\ncount = {}\ntolerance = {}", e.count, num(e.tolerance));
            let _ = writeln!(w, "max_steps = {}\nreorth_every = {}", e.max_steps, e.reorth_every);
            let _ = writeln!(w, "order = {}\ndtau_base = {}", e.order.number(), num(e.dtau_base));
            let _ = writeln!(w, "residual_target = {}", num(e.residual_target));
            if let Some(p) = e.probe_alpha {
                let _ = writeln!(w, "probe_alpha = {}", num(p));
            }
        }
        match &self.init {
            None => {}
            Some(InitSpec::Eigen { index }) => {
                let _ = writeln!(w, "\n[init]\nkind = eigen\nindex = {index}");
            }
            Some(InitSpec::Gaussian { beta0, sigma0, k0 }) => {
                let _ = writeln!(w, "\n[init]\nkind = gaussian\nbeta0 = \"{}\"", nums(beta0));
                let _ = writeln!(w, "sigma0 = {}\nk0 = \"{}\"", num(*sigma0), nums(k0));
            }
            Some(InitSpec::Superposition { states, weights }) => {
                let s: Vec<String> = states.iter().map(|s| s.to_string()).collect();
                let _ = writeln!(w, "\n[init]\nkind = superposition\nstates = \"{}\"", s.join(", "));
                let _ = writeln!(w, "weights = \"{}\"", nums(weights));
            }
        }
        if let Some(ev) = &self.evolve {
            let mode = match ev.mode {
                Mode::Real => "real",
                Mode::Imaginary => "imaginary",
            };
            let _ = writeln!(w, "\n[evolve]\nt_start = {}\nt_end = {}", num(ev.t_start), num(ev.t_end));
            let _ = writeln!(w, "order = {}\nmode = {mode}", ev.order.number());
            let _ = writeln!(w, "dtau_base = {}\ndynamic = {}", num(ev.dtau_base), ev.dynamic);
            if let Some(r) = ev.renormalize {
                let _ = writeln!(w, "renormalize = {r}");
            }
            let _ = writeln!(w, "snapshots = {}", ev.snapshots);
        }
        if !self.regions.is_empty() {
            let _ = writeln!(w, "\n[region]");
            for r in &self.regions {
                let parts: Vec<String> = r.bounds.iter().map(|(lo, hi)| format!("{}, {}", num(*lo), num(*hi))).collect();
                let _ = writeln!(w, "{} = \"{}\"", r.name, parts.join("; "));
            }
        }
        let _ = writeln!(
            w,
            "\n[output]\nseries_every = {}\namplitudes = {}",
            self.output.series_every, self.output.amplitudes
        );
        out
    }

    pub fn step_config(&self) -> Option<StepConfig> {
        self.evolve.as_ref().map(|ev| StepConfig {
            order: ev.order,
            mode: ev.mode,
            dtau_base: ev.dtau_base,
            dynamic: ev.dynamic,
            renorm_each_step: ev.renormalize.unwrap_or(false),
        })
    }
}

/// Shortest text that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn nums(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")
}

/// Failures turning a valid scenario into grid + Hamiltonian.
#[derive(Debug, Error)]
pub enum SetupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Hamiltonian(#[from] PropagatorError),
}

#[cfg(test)]
mod tests {
    use super::*;

    const HARMONIC: &str = "potential = \"x^2\"\nalpha = \"1\"\ngrid.n = 256\ngrid.extent = alpha\neigen.count = 4\n";

    #[test]
    fn minimal_harmonic() {
        let s = load_config(HARMONIC).unwrap();
        assert_eq!(s.grid.n, 256);
        assert_eq!(s.eigen.as_ref().unwrap().count, 4);
        assert_eq!(s.grid.extent, GridExtent::AlphaScaled);
        assert!(s.evolve.is_none());
    }

    #[test]
    fn bad_potential_points_at_its_line() {
        let text = "name = x\n\n# comment\npotential = \"cos(\"\ngrid.n = 8\ngrid.extent = alpha\neigen.count = 1\n";
        match load_config(text) {
            Err(ConfigError::Expression { line, key, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(key, "potential");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_sections() {
        let text = format!("{HARMONIC}grid.bogus = 1\n");
        assert!(matches!(load_config(&text), Err(ConfigError::UnknownKey { line: 6, .. })));
        let text = format!("{HARMONIC}[nope]\n");
        assert!(matches!(load_config(&text), Err(ConfigError::Syntax { line: 6, .. })));
        let text = format!("{HARMONIC}eigen.count = 5\n");
        assert!(matches!(load_config(&text), Err(ConfigError::Duplicate { .. })));
    }

    #[test]
    fn params_feed_expressions() {
        let text = "potential = \"(x - phi0)^2/(2*beta_l) + 1 - cos(x)\"\n\
                    alpha = \"10 - 4.8*(erf((t - 5)/(0.8*sqrt(2))) - erf((t - 17.8)/(1.6*sqrt(2))))\"\n\
                    [param]\nbeta_l = pi\nphi0 = beta_l  # later params see earlier ones\n\
                    [grid]\nn = 512\nextent = box\nlength = 16\norigin = phi0\n\
                    [eigen]\ncount = 4\n";
        let s = load_config(text).unwrap();
        assert!((s.grid.origin - std::f64::consts::PI).abs() < 1e-15);
        let a0 = s.alpha_expr().unwrap().eval(&Point::time(0.0)).unwrap();
        assert!((a0 - 10.0).abs() < 1e-4);
    }

    #[test]
    fn init_must_refer_to_solved_levels() {
        let text = format!("{HARMONIC}init.kind = eigen\ninit.index = 4\nevolve.t_end = 1\n");
        assert!(matches!(load_config(&text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn round_trip() {
        let text = "name = rt\npotential = \"3 + cos(2*y) - 2*cos(x)*cos(y)\"\n\
                    [grid]\ndims = 2\nn = 16\nextent = periodic\nperiod = 2*pi\n\
                    [eigen]\ncount = 2\nprobe_alpha = 0.4\n\
                    [init]\nkind = superposition\nstates = 0, 1\nweights = 1, -1/3\n\
                    [evolve]\nt_end = 8.1\nsnapshots = 5\nrenormalize = false\n\
                    [region]\nleft = \"-pi, 0; -pi, pi\"\n\
                    [output]\namplitudes = true\n";
        let s = load_config(text).unwrap();
        let again = load_config(&s.serialize()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn snapshot_schedule() {
        let text = format!("{HARMONIC}init.kind = eigen\ninit.index = 0\nevolve.t_end = 1\nevolve.snapshots = 5\n");
        let s = load_config(&text).unwrap();
        assert_eq!(s.snapshot_times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let text = format!("{HARMONIC}init.kind = eigen\ninit.index = 0\nevolve.t_end = 0\nevolve.snapshots = 4\n");
        assert_eq!(load_config(&text).unwrap().snapshot_times(), vec![0.0]);
    }
}
