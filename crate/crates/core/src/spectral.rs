//! Principal (smallest) eigenvalue and positive eigenfunction of symmetric
//! second-order operators on the torus.
//!
//! `principal_eigenpair` treats -mu*Laplacian - V, whose smallest eigenvalue
//! has the variational form  lambda_1(mu, V) = min over int u^2 = 1 of
//! mu int |grad u|^2 - int V u^2.  `weighted_principal_eigenvalue` treats the
//! weighted form -mu div(w grad .) - q with face-averaged weights, keeping
//! the discrete matrix symmetric.
//!
//! Both solvers run inverse power iteration on a shifted operator. The shift
//! -(max V) - 1 makes the shifted matrix a strictly diagonally dominant
//! M-matrix, so the solve is positive-definite and the iterates inherit the
//! Perron positivity of the eigenfunction.

use crate::error::{Error, Result};
use crate::grid::{kahan_sum, Field, TorusGrid};
use crate::linalg::{conjugate_gradient, solve_cyclic_tridiagonal};

/// Eigenvalue increment tolerance for the inverse power iteration.
const EIG_TOL: f64 = 1e-10;
/// Iteration cap; exceeded means an explicit failure, never a silent result.
const EIG_MAX_ITER: usize = 10_000;

/// Smallest eigenvalue with its positive, L2-normalized eigenfunction.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub lambda1: f64,
    pub eigenfunction: Field,
    /// ||A phi - lambda phi||_2 relative to ||phi||_2 = 1.
    pub residual: f64,
    pub iterations: usize,
}

/// Symmetric operator x -> -mu div(w grad x) - q x with unit weights giving
/// back -mu Lap - V. Stored as per-edge weights plus a node potential.
struct WeightedOperator {
    grid: TorusGrid,
    mu: f64,
    /// per-axis face weights, edge index = lower node (see grid::EdgeVelocities)
    face_w: Vec<Vec<f64>>,
    potential: Vec<f64>,
}

impl WeightedOperator {
    fn unweighted(grid: TorusGrid, mu: f64, v: &Field) -> Self {
        let ones = vec![1.0; grid.node_count().max(grid.n())];
        let face_w = match grid.dim() {
            1 => vec![ones[..grid.n()].to_vec()],
            _ => vec![ones.clone(), ones],
        };
        WeightedOperator {
            grid,
            mu,
            face_w,
            potential: v.values().to_vec(),
        }
    }

    fn weighted(grid: TorusGrid, mu: f64, w: &Field, q: &Field) -> Self {
        let n = grid.n();
        let wv = w.values();
        let mut face_w = Vec::new();
        match grid.dim() {
            1 => {
                let mut fx = vec![0.0; n];
                for (i, f) in fx.iter_mut().enumerate() {
                    *f = 0.5 * (wv[i] + wv[(i + 1) % n]);
                }
                face_w.push(fx);
            }
            _ => {
                let mut fx = vec![0.0; grid.node_count()];
                let mut fy = vec![0.0; grid.node_count()];
                for ix in 0..n {
                    for iy in 0..n {
                        let c = grid.index(ix, iy);
                        fx[c] = 0.5 * (wv[c] + wv[grid.index((ix + 1) % n, iy)]);
                        fy[c] = 0.5 * (wv[c] + wv[grid.index(ix, (iy + 1) % n)]);
                    }
                }
                face_w.push(fx);
                face_w.push(fy);
            }
        }
        WeightedOperator {
            grid,
            mu,
            face_w,
            potential: q.values().to_vec(),
        }
    }

    /// out = A x (no shift).
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let grid = self.grid;
        let n = grid.n();
        let inv_h2 = 1.0 / (grid.h() * grid.h());
        match grid.dim() {
            1 => {
                let fw = &self.face_w[0];
                for i in 0..n {
                    let im = (i + n - 1) % n;
                    let ip = (i + 1) % n;
                    let flux = fw[i] * (x[ip] - x[i]) - fw[im] * (x[i] - x[im]);
                    out[i] = -self.mu * flux * inv_h2 - self.potential[i] * x[i];
                }
            }
            _ => {
                let fx = &self.face_w[0];
                let fy = &self.face_w[1];
                for ix in 0..n {
                    let xp = (ix + 1) % n;
                    let xm = (ix + n - 1) % n;
                    for iy in 0..n {
                        let yp = (iy + 1) % n;
                        let ym = (iy + n - 1) % n;
                        let c = grid.index(ix, iy);
                        let flux = fx[c] * (x[grid.index(xp, iy)] - x[c])
                            - fx[grid.index(xm, iy)] * (x[c] - x[grid.index(xm, iy)])
                            + fy[c] * (x[grid.index(ix, yp)] - x[c])
                            - fy[grid.index(ix, ym)] * (x[c] - x[grid.index(ix, ym)]);
                        out[c] = -self.mu * flux * inv_h2 - self.potential[c] * x[c];
                    }
                }
            }
        }
    }

    /// Diagonal of A - shift*I, used as preconditioner and Thomas diagonal.
    fn shifted_diagonal(&self, shift: f64) -> Vec<f64> {
        let grid = self.grid;
        let n = grid.n();
        let inv_h2 = 1.0 / (grid.h() * grid.h());
        let mut d = vec![0.0; grid.node_count()];
        match grid.dim() {
            1 => {
                let fw = &self.face_w[0];
                for i in 0..n {
                    let im = (i + n - 1) % n;
                    d[i] = self.mu * (fw[i] + fw[im]) * inv_h2 - self.potential[i] - shift;
                }
            }
            _ => {
                let fx = &self.face_w[0];
                let fy = &self.face_w[1];
                for ix in 0..n {
                    let xm = (ix + n - 1) % n;
                    for iy in 0..n {
                        let ym = (iy + n - 1) % n;
                        let c = grid.index(ix, iy);
                        d[c] = self.mu
                            * (fx[c] + fx[grid.index(xm, iy)] + fy[c] + fy[grid.index(ix, ym)])
                            * inv_h2
                            - self.potential[c]
                            - shift;
                    }
                }
            }
        }
        d
    }

    /// Solve (A - shift I) x = b.
    fn solve_shifted(&self, shift: f64, b: &[f64], warm: Option<&[f64]>) -> Result<Vec<f64>> {
        let grid = self.grid;
        match grid.dim() {
            1 => {
                let n = grid.n();
                let inv_h2 = 1.0 / (grid.h() * grid.h());
                let fw = &self.face_w[0];
                let diag = self.shifted_diagonal(shift);
                let mut lower = vec![0.0; n];
                let mut upper = vec![0.0; n];
                for i in 0..n {
                    let im = (i + n - 1) % n;
                    lower[i] = -self.mu * fw[im] * inv_h2;
                    upper[i] = -self.mu * fw[i] * inv_h2;
                }
                solve_cyclic_tridiagonal(&lower, &diag, &upper, b)
            }
            _ => {
                let diag = self.shifted_diagonal(shift);
                let apply = |x: &[f64], out: &mut [f64]| {
                    self.apply(x, out);
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o -= shift * xi;
                    }
                };
                conjugate_gradient(&apply, &diag, b, warm, 1e-13, 20_000)
            }
        }
    }

    fn smallest_eigenpair(&self) -> Result<Eigenpair> {
        let grid = self.grid;
        let vol = grid.cell_volume();
        let nn = grid.node_count();
        // shift below the spectrum: lambda_1 >= -max(potential)
        let shift = -self.potential.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - 1.0;
        let mut x = vec![1.0; nn];
        let mut lambda_old = f64::INFINITY;
        let mut ax = vec![0.0; nn];
        for it in 1..=EIG_MAX_ITER {
            let y = self.solve_shifted(shift, &x, Some(&x))?;
            let norm = (vol * y.iter().map(|v| v * v).sum::<f64>()).sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::SolverFailure("inverse power iteration broke down".into()));
            }
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / norm;
            }
            self.apply(&x, &mut ax);
            let lambda = vol * x.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>();
            if (lambda - lambda_old).abs() <= EIG_TOL * lambda.abs().max(1.0) {
                // sign convention: Perron eigenfunction taken positive
                let total = kahan_sum(&x);
                let sgn = if total < 0.0 { -1.0 } else { 1.0 };
                let phi: Vec<f64> = x.iter().map(|v| sgn * v).collect();
                let res = {
                    let mut r = 0.0;
                    for i in 0..nn {
                        let d = ax[i] - lambda * x[i];
                        r += d * d;
                    }
                    (vol * r).sqrt()
                };
                let eigenfunction = Field::new(grid, phi)?;
                if eigenfunction.min() <= 0.0 {
                    return Err(Error::SolverFailure(
                        "principal eigenfunction lost positivity; operator data may be invalid".into(),
                    ));
                }
                return Ok(Eigenpair {
                    lambda1: lambda,
                    eigenfunction,
                    residual: res,
                    iterations: it,
                });
            }
            lambda_old = lambda;
        }
        Err(Error::NonConvergence {
            solver: "inverse power iteration",
            iterations: EIG_MAX_ITER,
            residual: f64::NAN,
        })
    }
}

/// Smallest eigenvalue of -mu*Laplacian - V with its positive eigenfunction.
pub fn principal_eigenpair(mu: f64, v: &Field) -> Result<Eigenpair> {
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", "diffusivity must be positive"));
    }
    WeightedOperator::unweighted(v.grid(), mu, v).smallest_eigenpair()
}

/// Smallest eigenvalue of the weighted form -mu div(w grad .) - q, i.e. the
/// minimum over int u^2 = 1 of mu int w |grad u|^2 - int q u^2.
pub fn weighted_principal_eigenvalue(mu: f64, w: &Field, q: &Field) -> Result<Eigenpair> {
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", "diffusivity must be positive"));
    }
    if w.grid() != q.grid() {
        return Err(Error::GridMismatch("weight and potential grids differ".into()));
    }
    if w.min() <= 0.0 {
        return Err(Error::invalid("w", "weight must be strictly positive"));
    }
    WeightedOperator::weighted(w.grid(), mu, w, q).smallest_eigenpair()
}
