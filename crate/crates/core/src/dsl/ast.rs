use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt;


use super::DslError;

/// Default height of `wall(lo, hi)`.
pub const DEFAULT_WALL_HEIGHT: f64 = 1.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    Z,
    /// Dimensionless time τ.
    T,
}

impl Var {
    pub fn spatial(axis: usize) -> Option<Var> {
        match axis {
            0 => Some(Var::X),
            1 => Some(Var::Y),
            2 => Some(Var::Z),
            _ => None,
        }
    }

    pub fn axis(self) -> Option<usize> {
        match self {
            Var::X => Some(0),
            Var::Y => Some(1),
            Var::Z => Some(2),
            Var::T => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Erf,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Erf => "erf",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Erf => libm::erf(v),
            Func::Sqrt => v.sqrt(),
        }
    }
}

/// Potential / schedule expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// `height` where `x ∉ [lo, hi]`, zero inside.
    Wall {
        lo: Box<Expr>,
        hi: Box<Expr>,
        height: Box<Expr>,
    },
}

/// Where an expression is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub coords: [f64; 3],
    pub t: f64,
}

impl Point {
    pub fn new(coords: [f64; 3], t: f64) -> Self {
        Self { coords, t }
    }

    pub fn time(t: f64) -> Self {
        Self {
            coords: [0.0; 3],
            t,
        }
    }

    fn get(&self, var: Var) -> f64 {
        match var.axis() {
            Some(a) => self.coords[a],
            None => self.t,
        }
    }
}

// Constant-folding constructors. Identity elements are dropped so derivative
// trees stay small; nothing beyond that is simplified.

pub(crate) fn num(v: f64) -> Expr {
    Expr::Num(v)
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (Expr::Num(z), e) | (e, Expr::Num(z)) if z == 0.0 => e,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (e, Expr::Num(z)) if z == 0.0 => e,
        (Expr::Num(z), e) if z == 0.0 => neg(e),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (Expr::Num(z), _) | (_, Expr::Num(z)) if z == 0.0 => Expr::Num(0.0),
        (Expr::Num(o), e) | (e, Expr::Num(o)) if o == 1.0 => e,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) if y != 0.0 => Expr::Num(x / y),
        (Expr::Num(z), _) if z == 0.0 => Expr::Num(0.0),
        (e, Expr::Num(o)) if o == 1.0 => e,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(power(x, y)),
        (_, Expr::Num(z)) if z == 0.0 => Expr::Num(1.0),
        (e, Expr::Num(o)) if o == 1.0 => e,
        (a, b) => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn call(f: Func, a: Expr) -> Expr {
    match a {
        Expr::Num(v) if f.apply(v).is_finite() => Expr::Num(f.apply(v)),
        other => Expr::Call(f, Box::new(other)),
    }
}

fn power(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

impl Expr {
    /// Evaluates at a point. Parameters must have been bound first.
    pub fn eval(&self, at: &Point) -> Result<f64, DslError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(var) => at.get(*var),
            Expr::Param(name) => return Err(DslError::UnboundParameter(name.clone())),
            Expr::Neg(a) => -a.eval(at)?,
            Expr::Add(a, b) => a.eval(at)? + b.eval(at)?,
            Expr::Sub(a, b) => a.eval(at)? - b.eval(at)?,
            Expr::Mul(a, b) => a.eval(at)? * b.eval(at)?,
            Expr::Div(a, b) => {
                let d = b.eval(at)?;
                if d == 0.0 {
                    return Err(DslError::DivisionByZero);
                }
                a.eval(at)? / d
            }
            Expr::Pow(a, b) => power(a.eval(at)?, b.eval(at)?),
            Expr::Call(f, a) => f.apply(a.eval(at)?),
            Expr::Wall { lo, hi, height } => {
                let x = at.coords[0];
                if x < lo.eval(at)? || x > hi.eval(at)? {
                    height.eval(at)?
                } else {
                    0.0
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DslError::NonFinite)
        }
    }

    /// Substitutes parameter values and folds constants.
    pub fn bind(&self, params: &BTreeMap<String, f64>) -> Result<Expr, DslError> {
        self.rewrite(&|e| match e {
            Expr::Param(name) => params
                .get(name)
                .map(|v| Some(Expr::Num(*v)))
                .ok_or_else(|| DslError::UnboundParameter(name.clone())),
            _ => Ok(None),
        })
    }

    /// Replaces `t` by a constant.
    pub fn freeze_time(&self, tau: f64) -> Expr {
        self.rewrite(&|e| match e {
            Expr::Var(Var::T) => Ok::<_, DslError>(Some(Expr::Num(tau))),
            _ => Ok(None),
        })
        .expect("time substitution cannot fail")
    }

    fn rewrite<F>(&self, leaf: &F) -> Result<Expr, DslError>
    where
        F: Fn(&Expr) -> Result<Option<Expr>, DslError>,
    {
        if let Some(replaced) = leaf(self)? {
            return Ok(replaced);
        }
        Ok(match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => self.clone(),
            Expr::Neg(a) => neg(a.rewrite(leaf)?),
            Expr::Add(a, b) => add(a.rewrite(leaf)?, b.rewrite(leaf)?),
            Expr::Sub(a, b) => sub(a.rewrite(leaf)?, b.rewrite(leaf)?),
            Expr::Mul(a, b) => mul(a.rewrite(leaf)?, b.rewrite(leaf)?),
            Expr::Div(a, b) => div(a.rewrite(leaf)?, b.rewrite(leaf)?),
            Expr::Pow(a, b) => pow(a.rewrite(leaf)?, b.rewrite(leaf)?),
            Expr::Call(f, a) => call(*f, a.rewrite(leaf)?),
            Expr::Wall { lo, hi, height } => Expr::Wall {
                lo: Box::new(lo.rewrite(leaf)?),
                hi: Box::new(hi.rewrite(leaf)?),
                height: Box::new(height.rewrite(leaf)?),
            },
        })
    }

    pub fn depends_on(&self, var: Var) -> bool {
        self.any(&|e| matches!(e, Expr::Var(v) if *v == var))
    }

    /// True if any spatial variable appears.
    pub fn is_spatial(&self) -> bool {
        [Var::X, Var::Y, Var::Z].iter().any(|v| self.depends_on(*v))
    }

    pub fn contains_wall(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Wall { .. }))
    }

    pub fn has_params(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Param(_)))
    }

    /// Highest spatial axis referenced, if any.
    pub fn max_axis(&self) -> Option<usize> {
        (0..3).rev().find(|&a| self.depends_on(Var::spatial(a).unwrap()))
    }

    fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.any(pred),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.any(pred) || b.any(pred)
            }
            Expr::Wall { lo, hi, height } => lo.any(pred) || hi.any(pred) || height.any(pred),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Pow(..) => 3,
            Expr::Neg(_) => 4,
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 4,
            _ => 5,
        }
    }
}

struct Wrapped<'a>(&'a Expr, bool);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Prints text the parser accepts back into an equal tree (up to folding).
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precedence();
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Param(name) => f.write_str(name),
            // Unary minus binds tighter than `^`, so anything but an atom is wrapped.
            Expr::Neg(a) => write!(f, "-{}", Wrapped(a, a.precedence() < 5)),
            Expr::Add(a, b) => write!(f, "{} + {}", a, Wrapped(b, b.precedence() <= 1)),
            Expr::Sub(a, b) => write!(f, "{} - {}", a, Wrapped(b, b.precedence() <= 1)),
            Expr::Mul(a, b) => write!(
                f,
                "{}*{}",
                Wrapped(a, a.precedence() < p),
                Wrapped(b, b.precedence() <= p)
            ),
            Expr::Div(a, b) => write!(
                f,
                "{}/{}",
                Wrapped(a, a.precedence() < p),
                Wrapped(b, b.precedence() <= p)
            ),
            Expr::Pow(a, b) => write!(
                f,
                "{}^{}",
                Wrapped(a, a.precedence() <= p),
                Wrapped(b, b.precedence() < p)
            ),
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
            Expr::Wall { lo, hi, height } => write!(f, "wall({lo}, {hi}, {height})"),
        }
    }
}
