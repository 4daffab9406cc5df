use core::f64::consts::PI;

use super::ast::{add, call, div, mul, neg, num, pow, sub, Expr, Func, Var};
use super::DslError;

/// Exact partial derivative with respect to a spatial variable.
///
/// `wall` differentiates to 0. Exponents must not depend on `var`.
pub fn differentiate(e: &Expr, var: Var) -> Result<Expr, DslError> {
    if var == Var::T {
        return Err(DslError::TimeDerivative);
    }
    d(e, var)
}

fn d(e: &Expr, var: Var) -> Result<Expr, DslError> {
    Ok(match e {
        Expr::Num(_) | Expr::Param(_) | Expr::Wall { .. } => num(0.0),
        Expr::Var(v) => num(if *v == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(d(a, var)?),
        Expr::Add(a, b) => add(d(a, var)?, d(b, var)?),
        Expr::Sub(a, b) => sub(d(a, var)?, d(b, var)?),
        Expr::Mul(a, b) => add(
            mul(d(a, var)?, (**b).clone()),
            mul((**a).clone(), d(b, var)?),
        ),
        Expr::Div(a, b) => {
            let da = d(a, var)?;
            let db = d(b, var)?;
            // a'/b - a·b'/b²
            sub(
                div(da, (**b).clone()),
                div(mul((**a).clone(), db), pow((**b).clone(), num(2.0))),
            )
        }
        Expr::Pow(a, b) => {
            if b.depends_on(var) {
                return Err(DslError::VariableExponent);
            }
            let da = d(a, var)?;
            let lowered = pow((**a).clone(), sub((**b).clone(), num(1.0)));
            mul(mul((**b).clone(), lowered), da)
        }
        Expr::Call(f, a) => {
            let da = d(a, var)?;
            let inner = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, inner),
                Func::Cos => neg(call(Func::Sin, inner)),
                Func::Exp => call(Func::Exp, inner),
                Func::Erf => mul(
                    num(2.0 / PI.sqrt()),
                    call(Func::Exp, neg(pow(inner, num(2.0)))),
                ),
                Func::Sqrt => div(num(0.5), call(Func::Sqrt, inner)),
            };
            mul(outer, da)
        }
    })
}
