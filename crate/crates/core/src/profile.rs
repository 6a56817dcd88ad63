//! Analytic spatial profiles.
//!
//! Resource distributions and potentials are configured as finite cosine
//! series a0 + sum_k a_k cos(2*pi*k*x) (with an additive `cosy` family on
//! the second axis in 2D); this covers every even smooth profile the
//! models call for while keeping configurations text-only. A periodic
//! cubic spline provides point evaluation and exact piecewise quadrature
//! for profiles that are only known through their grid values.

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};
use crate::linalg::solve_cyclic_tridiagonal;
use serde::{Deserialize, Serialize};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Finite cosine series a0 + sum a_k cos(2 pi k x) + sum b_l cos(2 pi l y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineSeries {
    pub a0: f64,
    /// (mode k, coefficient) pairs on the first axis.
    pub x_modes: Vec<(usize, f64)>,
    /// (mode l, coefficient) pairs on the second axis (empty in 1D).
    pub y_modes: Vec<(usize, f64)>,
}

impl CosineSeries {
    pub fn constant(a0: f64) -> Self {
        CosineSeries {
            a0,
            x_modes: Vec::new(),
            y_modes: Vec::new(),
        }
    }

    /// a0 + a1 cos(2 pi x), the workhorse one-dimensional profile.
    pub fn one_cosine(a0: f64, a1: f64) -> Self {
        CosineSeries {
            a0,
            x_modes: vec![(1, a1)],
            y_modes: Vec::new(),
        }
    }

    /// Parse a profile string like `1+0.5cos`, `1-0.3cos2+0.1cos3` or, in
    /// 2D, `1+0.5cosx+0.2cosy2`. Each term is either a plain number or
    /// `[coeff]cos[axis][mode]` with coefficient defaulting to 1, axis to
    /// `x` and mode to 1.
    pub fn parse(text: &str) -> Result<Self> {
        let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(Error::invalid("profile", "empty profile string"));
        }
        let mut series = CosineSeries::constant(0.0);
        let mut rest = cleaned.as_str();
        let mut sign = 1.0;
        if let Some(r) = rest.strip_prefix('-') {
            sign = -1.0;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        }
        while !rest.is_empty() {
            let term_end = rest
                .char_indices()
                .skip(1)
                .find(|(_, c)| *c == '+' || *c == '-')
                .map(|(i, _)| i)
                .unwrap_or(rest.len());
            let term = &rest[..term_end];
            Self::parse_term(term, sign, &mut series)
                .map_err(|e| Error::invalid("profile", format!("term `{term}`: {e}")))?;
            if term_end == rest.len() {
                break;
            }
            sign = if rest.as_bytes()[term_end] == b'-' { -1.0 } else { 1.0 };
            rest = &rest[term_end + 1..];
        }
        Ok(series)
    }

    fn parse_term(term: &str, sign: f64, series: &mut CosineSeries) -> std::result::Result<(), String> {
        if let Some(pos) = term.find("cos") {
            let coeff_part = &term[..pos];
            let coeff = if coeff_part.is_empty() {
                1.0
            } else {
                coeff_part
                    .parse::<f64>()
                    .map_err(|_| format!("bad coefficient `{coeff_part}`"))?
            };
            let mut tail = &term[pos + 3..];
            let axis = if let Some(t) = tail.strip_prefix('x') {
                tail = t;
                0
            } else if let Some(t) = tail.strip_prefix('y') {
                tail = t;
                1
            } else {
                0
            };
            let mode = if tail.is_empty() {
                1
            } else {
                tail.parse::<usize>().map_err(|_| format!("bad mode `{tail}`"))?
            };
            if mode == 0 {
                return Err("mode must be >= 1 (use a plain constant term)".into());
            }
            let modes = if axis == 0 {
                &mut series.x_modes
            } else {
                &mut series.y_modes
            };
            if let Some(entry) = modes.iter_mut().find(|(k, _)| *k == mode) {
                entry.1 += sign * coeff;
            } else {
                modes.push((mode, sign * coeff));
            }
            Ok(())
        } else {
            let c = term
                .parse::<f64>()
                .map_err(|_| format!("bad constant `{term}`"))?;
            series.a0 += sign * c;
            Ok(())
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut v = self.a0;
        for &(k, c) in &self.x_modes {
            v += c * (TAU * k as f64 * x).cos();
        }
        for &(l, c) in &self.y_modes {
            v += c * (TAU * l as f64 * y).cos();
        }
        v
    }

    /// Integral over the whole torus (the oscillating modes drop out).
    pub fn torus_integral(&self) -> f64 {
        self.a0
    }

    /// Exact one-dimensional antiderivative integral over [a, b] (1D series).
    pub fn integral_1d(&self, a: f64, b: f64) -> f64 {
        let mut v = self.a0 * (b - a);
        for &(k, c) in &self.x_modes {
            let w = TAU * k as f64;
            v += c * ((w * b).sin() - (w * a).sin()) / w;
        }
        v
    }

    pub fn to_field(&self, grid: TorusGrid) -> Field {
        Field::from_fn(grid, |x, y| self.eval(x, y))
    }

    /// Canonical text form (used to echo configurations back).
    pub fn render(&self) -> String {
        let mut s = format!("{}", self.a0);
        for &(k, c) in &self.x_modes {
            let op = if c < 0.0 { "-" } else { "+" };
            s.push_str(&format!("{op}{}cos{k}", c.abs()));
        }
        for &(l, c) in &self.y_modes {
            let op = if c < 0.0 { "-" } else { "+" };
            s.push_str(&format!("{op}{}cosy{l}", c.abs()));
        }
        s
    }
}

/// Point evaluation plus exact definite integrals on [a, b].
pub trait Profile1d {
    fn eval(&self, x: f64) -> f64;
    fn integral(&self, a: f64, b: f64) -> f64;
}

impl Profile1d for CosineSeries {
    fn eval(&self, x: f64) -> f64 {
        CosineSeries::eval(self, x, 0.0)
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        self.integral_1d(a, b)
    }
}

/// Periodic cubic spline through the nodes of a 1D field; period 1 with
/// base point -0.5. Supplies smooth evaluation, derivatives and exact
/// piecewise-polynomial integrals for grid-sampled profiles.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    n: usize,
    h: f64,
    y: Vec<f64>,
    /// second-derivative moments at the nodes
    m: Vec<f64>,
}

impl PeriodicSpline {
    pub fn from_field(f: &Field) -> Result<Self> {
        if f.grid().dim() != 1 {
            return Err(Error::invalid("field", "periodic spline requires a 1D field"));
        }
        let n = f.grid().n();
        let h = f.grid().h();
        let y = f.values().to_vec();
        // natural periodic spline: (h/6) M_{i-1} + (2h/3) M_i + (h/6) M_{i+1}
        //   = (y_{i+1} - 2 y_i + y_{i-1}) / h
        let lower = vec![h / 6.0; n];
        let diag = vec![2.0 * h / 3.0; n];
        let upper = vec![h / 6.0; n];
        let rhs: Vec<f64> = (0..n)
            .map(|i| (y[(i + 1) % n] - 2.0 * y[i] + y[(i + n - 1) % n]) / h)
            .collect();
        let m = solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs)?;
        Ok(PeriodicSpline { n, h, y, m })
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        // map into [-0.5, 0.5)
        let mut xm = x + 0.5;
        xm -= xm.floor();
        let mut i = (xm / self.h).floor() as usize;
        if i >= self.n {
            i = self.n - 1;
        }
        let t = (xm - i as f64 * self.h) / self.h;
        (i, t)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let ip = (i + 1) % self.n;
        let h2 = self.h * self.h;
        let omt = 1.0 - t;
        self.y[i] * omt
            + self.y[ip] * t
            + h2 / 6.0 * ((omt.powi(3) - omt) * self.m[i] + (t.powi(3) - t) * self.m[ip])
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let ip = (i + 1) % self.n;
        let omt = 1.0 - t;
        (self.y[ip] - self.y[i]) / self.h
            + self.h / 6.0
                * (-(3.0 * omt * omt - 1.0) * self.m[i] + (3.0 * t * t - 1.0) * self.m[ip])
    }

    /// Integral of the spline over [x_i, x_i + t*h] within one cell.
    fn cell_integral(&self, i: usize, t: f64) -> f64 {
        let ip = (i + 1) % self.n;
        let h2 = self.h * self.h;
        let omt = 1.0 - t;
        self.h
            * (self.y[i] * (t - 0.5 * t * t)
                + self.y[ip] * 0.5 * t * t
                + h2 / 6.0
                    * (self.m[i] * (0.5 * omt * omt - 0.25 * omt.powi(4) - 0.25)
                        + self.m[ip] * (0.25 * t.powi(4) - 0.5 * t * t)))
    }

    /// Definite integral over [a, b] with b >= a and b - a <= 1.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integral(b, a);
        }
        // cumulative integral from the base point to x
        let cumulative = |x: f64| -> f64 {
            let (i, t) = self.locate(x);
            let mut s = 0.0;
            for j in 0..i {
                s += self.cell_integral(j, 1.0);
            }
            s + self.cell_integral(i, t)
        };
        let wraps = ((b + 0.5).floor() - (a + 0.5).floor()).max(0.0);
        cumulative(b) - cumulative(a) + wraps * self.full_integral()
    }

    pub fn full_integral(&self) -> f64 {
        (0..self.n).map(|j| self.cell_integral(j, 1.0)).sum()
    }
}

impl Profile1d for PeriodicSpline {
    fn eval(&self, x: f64) -> f64 {
        PeriodicSpline::eval(self, x)
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        PeriodicSpline::integral(self, a, b)
    }
}
