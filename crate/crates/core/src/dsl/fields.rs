use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::ast::{add, num, Expr, Point, Var};
use super::diff::differentiate;
use super::DslError;
use crate::grid::Grid;

/// `U` together with the symbolic derivatives the propagators use.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialModel {
    dims: usize,
    u: Expr,
    grad: Vec<Expr>,
    /// `hessian[j][k]` for `k <= j`.
    hessian: Vec<Vec<Expr>>,
    laplacian: Expr,
    bilaplacian: Expr,
}

impl PotentialModel {
    /// `u` must be fully bound (no parameters).
    pub fn new(u: &Expr, dims: usize) -> Result<Self, DslError> {
        if let Some(name) = first_param(u) {
            return Err(DslError::UnboundParameter(name));
        }
        let mut grad = Vec::with_capacity(dims);
        let mut hessian = Vec::with_capacity(dims);
        for j in 0..dims {
            let dj = differentiate(u, spatial(j))?;
            let row = (0..=j)
                .map(|k| differentiate(&dj, spatial(k)))
                .collect::<Result<Vec<_>, _>>()?;
            grad.push(dj);
            hessian.push(row);
        }
        let laplacian = (0..dims).fold(num(0.0), |acc, j| add(acc, hessian[j][j].clone()));
        let mut bilaplacian = num(0.0);
        for j in 0..dims {
            let once = differentiate(&laplacian, spatial(j))?;
            bilaplacian = add(bilaplacian, differentiate(&once, spatial(j))?);
        }
        Ok(Self {
            dims,
            u: u.clone(),
            grad,
            hessian,
            laplacian,
            bilaplacian,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn expr(&self) -> &Expr {
        &self.u
    }

    pub fn gradient_exprs(&self) -> &[Expr] {
        &self.grad
    }

    pub fn laplacian_expr(&self) -> &Expr {
        &self.laplacian
    }

    pub fn bilaplacian_expr(&self) -> &Expr {
        &self.bilaplacian
    }

    /// `∂_j∂_k U` for any `j, k < dims`.
    pub fn second_expr(&self, j: usize, k: usize) -> &Expr {
        if k <= j {
            &self.hessian[j][k]
        } else {
            &self.hessian[k][j]
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        self.u.depends_on(Var::T)
    }

    pub fn value(&self, at: &Point) -> Result<f64, DslError> {
        self.u.eval(at)
    }

    pub fn gradient(&self, at: &Point) -> Result<[f64; 3], DslError> {
        let mut g = [0.0; 3];
        for (slot, e) in g.iter_mut().zip(&self.grad) {
            *slot = e.eval(at)?;
        }
        Ok(g)
    }

    pub fn laplacian(&self, at: &Point) -> Result<f64, DslError> {
        self.laplacian.eval(at)
    }

    pub fn bilaplacian(&self, at: &Point) -> Result<f64, DslError> {
        self.bilaplacian.eval(at)
    }

    pub fn second(&self, j: usize, k: usize, at: &Point) -> Result<f64, DslError> {
        self.second_expr(j, k).eval(at)
    }
}

fn spatial(axis: usize) -> Var {
    Var::spatial(axis).expect("axis below 3")
}

fn first_param(e: &Expr) -> Option<String> {
    match e {
        Expr::Param(name) => Some(name.clone()),
        Expr::Num(_) | Expr::Var(_) => None,
        Expr::Neg(a) | Expr::Call(_, a) => first_param(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
            first_param(a).or_else(|| first_param(b))
        }
        Expr::Wall { lo, hi, height } => first_param(lo)
            .or_else(|| first_param(hi))
            .or_else(|| first_param(height)),
    }
}

fn at_point(point: [f64; 3], err: DslError) -> DslError {
    DslError::AtPoint {
        point,
        source: Box::new(err),
    }
}

fn eval_field(e: &Expr, grid: &Grid, tau: f64, scale: f64) -> Result<Vec<f64>, DslError> {
    (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            e.eval(&Point::new(p, tau))
                .map(|v| scale * v)
                .map_err(|err| at_point(p, err))
        })
        .collect()
}

/// Evaluates `e` at every cell center at time `tau`.
pub fn evaluate_on_grid(
    e: &Expr,
    grid: &Grid,
    tau: f64,
    params: &BTreeMap<String, f64>,
) -> Result<Vec<f64>, DslError> {
    let bound = e.bind(params)?;
    eval_field(&bound, grid, tau, 1.0)
}

/// Derivative fields of `V = α·U` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBundle {
    pub v: Vec<f64>,
    pub grad: Vec<Vec<f64>>,
    pub laplacian: Vec<f64>,
    pub bilaplacian: Vec<f64>,
    pub grad_dot_grad: Vec<f64>,
    /// `((j, k), ∂_j∂_k V)` for every pair `j > k`.
    pub mixed_second: Vec<((usize, usize), Vec<f64>)>,
}

pub fn derivative_bundle(
    e: &Expr,
    grid: &Grid,
    tau: f64,
    alpha: f64,
) -> Result<DerivativeBundle, DslError> {
    let model = PotentialModel::new(e, grid.dims())?;
    let v = eval_field(model.expr(), grid, tau, alpha)?;
    let grad = model
        .gradient_exprs()
        .iter()
        .map(|g| eval_field(g, grid, tau, alpha))
        .collect::<Result<Vec<_>, _>>()?;
    let laplacian = eval_field(model.laplacian_expr(), grid, tau, alpha)?;
    let bilaplacian = eval_field(model.bilaplacian_expr(), grid, tau, alpha)?;
    let grad_dot_grad = (0..grid.len())
        .map(|i| grad.iter().map(|g| g[i] * g[i]).sum())
        .collect();
    let mut mixed_second = Vec::new();
    for j in 0..grid.dims() {
        for k in 0..j {
            let field = eval_field(model.second_expr(j, k), grid, tau, alpha)?;
            mixed_second.push(((j, k), field));
        }
    }
    Ok(DerivativeBundle {
        v,
        grad,
        laplacian,
        bilaplacian,
        grad_dot_grad,
        mixed_second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_potential, parse_with_params};
    use crate::grid::{make_grid, AxisSpec};
    use core::f64::consts::PI;

    fn line(n: usize, len: f64) -> Grid {
        make_grid(n, 1.0, &[AxisSpec::boxed(len)]).unwrap()
    }

    #[test]
    fn zero_potential_is_zero_field() {
        let g = line(16, 4.0);
        let f = evaluate_on_grid(&parse_potential("0").unwrap(), &g, 0.0, &BTreeMap::new()).unwrap();
        assert!(f.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn squid_potential_at_phi0() {
        let e = parse_with_params("(x - phi0)^2/(2*beta_l) - cos(x)", &["phi0", "beta_l"]).unwrap();
        let mut params = BTreeMap::new();
        params.insert("phi0".into(), PI);
        params.insert("beta_l".into(), PI);
        let v = e.bind(&params).unwrap().eval(&Point::new([PI, 0.0, 0.0], 0.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert!(matches!(
            evaluate_on_grid(&e, &line(8, 2.0), 0.0, &BTreeMap::new()),
            Err(DslError::UnboundParameter(_))
        ));
    }

    #[test]
    fn division_by_zero_names_the_point() {
        // Origin shifted so a cell center sits exactly on x = 0.
        let g = make_grid(8, 1.0, &[AxisSpec::boxed(8.0).with_origin(0.5)]).unwrap();
        let err = evaluate_on_grid(&parse_potential("1/x").unwrap(), &g, 0.0, &BTreeMap::new()).unwrap_err();
        match err {
            DslError::AtPoint { point, source } => {
                assert_eq!(point[0], 0.0);
                assert_eq!(*source, DslError::DivisionByZero);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quadratic_bundle() {
        let g = line(32, 8.0);
        let b = derivative_bundle(&parse_potential("x^2").unwrap(), &g, 0.0, 1.0).unwrap();
        for i in 0..g.len() {
            let x = g.point(i)[0];
            assert!((b.grad[0][i] - 2.0 * x).abs() < 1e-14);
            assert_eq!(b.laplacian[i], 2.0);
            assert_eq!(b.bilaplacian[i], 0.0);
            assert!((b.grad_dot_grad[i] - 4.0 * x * x).abs() < 1e-13);
        }
        assert!(b.mixed_second.is_empty());
    }

    #[test]
    fn mathieu_laplacian_and_alpha_scaling() {
        let g = line(32, 2.0 * PI);
        let e = parse_potential("2+2*cos(2*x)").unwrap();
        let b = derivative_bundle(&e, &g, 0.0, 1.0).unwrap();
        let b3 = derivative_bundle(&e, &g, 0.0, 3.0).unwrap();
        for i in 0..g.len() {
            let x = g.point(i)[0];
            assert!((b.laplacian[i] + 8.0 * (2.0 * x).cos()).abs() < 1e-13);
            assert!((b3.v[i] - 3.0 * b.v[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let g = make_grid(16, 1.0, &[AxisSpec::boxed(4.0), AxisSpec::boxed(4.0)]).unwrap();
        let e = parse_potential("3 + cos(2*y) - 2*cos(x)*cos(y) + 0.1*x^3*y").unwrap();
        let b = derivative_bundle(&e, &g, 0.0, 1.0).unwrap();
        assert_eq!(b.mixed_second.len(), 1);
        assert_eq!(b.mixed_second[0].0, (1, 0));
        let h = 1e-4;
        for i in 0..g.len() {
            let p = g.point(i);
            for d in 0..2 {
                let mut hi = p;
                let mut lo = p;
                hi[d] += h;
                lo[d] -= h;
                let fd = (e.eval(&Point::new(hi, 0.0)).unwrap() - e.eval(&Point::new(lo, 0.0)).unwrap())
                    / (2.0 * h);
                let exact = b.grad[d][i];
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
            }
        }
    }
}
