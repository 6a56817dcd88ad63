//! Periodic grids on the unit torus and their discrete calculus.
//!
//! The spatial domain is the d-torus with unit side (d = 1 or 2). In one
//! dimension it is identified with the interval (-0.5, 0.5) with periodic
//! ends, so node i sits at x_i = -0.5 + i*h with h = 1/n. All operators
//! wrap periodically:
//!
//! - `laplacian`, `gradient`, `divergence`: second-order centered stencils,
//! - `upwind_grad_sq`: the Godunov numerical Hamiltonian for |grad u|^2 / 2,
//! - `upwind_advection_div`: donor-cell flux divergence built so that it is
//!   the exact transpose of the linearized Godunov Hamiltonian (the discrete
//!   backbone of the HJB/FPK duality used by the equilibrium diagnostics).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic discretization of the unit d-torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    /// Build a grid with `n` points per axis; `dim` must be 1 or 2, `n >= 8`.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid("dim", format!("unsupported dimension {dim}; expected 1 or 2")));
        }
        if n < 8 {
            return Err(Error::invalid("n", format!("n = {n} below the minimum of 8 points per axis")));
        }
        Ok(TorusGrid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing h = 1/n.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of nodes, n^dim.
    pub fn node_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Cell volume h^dim, the quadrature weight of every node.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Coordinate of index i along one axis, x_i = -0.5 + i*h.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 + i as f64 * self.h()
    }

    /// Coordinates of a flat node index (y coordinate only present in 2D).
    pub fn node_coords(&self, idx: usize) -> (f64, Option<f64>) {
        match self.dim {
            1 => (self.coord(idx), None),
            _ => (self.coord(idx / self.n), Some(self.coord(idx % self.n))),
        }
    }

    /// Flat index of (ix, iy); `iy` ignored in 1D.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        match self.dim {
            1 => ix,
            _ => ix * self.n + iy,
        }
    }

    /// Periodic wrap of a signed axis index.
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    /// Minimum-image (signed) displacement between two axis coordinates.
    pub fn min_image(&self, dx: f64) -> f64 {
        let mut d = dx - dx.round();
        if d <= -0.5 {
            d += 1.0;
        }
        d
    }

    fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "dim {}/{} n {}/{}",
                self.dim, other.dim, self.n, other.n
            )));
        }
        Ok(())
    }
}

/// Scalar grid function. The physical meaning of the values (fish density,
/// fisherman density, value, potential) is set by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::invalid(
                "values",
                format!("expected {} values, got {}", grid.node_count(), values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "non-finite value"));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Field {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Sample a function of the node coordinates. In 1D the closure receives
    /// (x, 0.0); in 2D (x, y).
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.node_count());
        match grid.dim() {
            1 => {
                for i in 0..n {
                    values.push(f(grid.coord(i), 0.0));
                }
            }
            _ => {
                for ix in 0..n {
                    for iy in 0..n {
                        values.push(f(grid.coord(ix), grid.coord(iy)));
                    }
                }
            }
        }
        Field { grid, values }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete integral h^d * sum(values).
    pub fn integrate(&self) -> f64 {
        self.grid.cell_volume() * kahan_sum(&self.values)
    }

    /// Discrete mean (equals the integral on the unit torus).
    pub fn mean(&self) -> f64 {
        kahan_sum(&self.values) / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Discrete L1 norm, h^d * sum |v|.
    pub fn norm_l1(&self) -> f64 {
        self.grid.cell_volume() * kahan_sum_by(&self.values, |v| v.abs())
    }

    /// Discrete L2 norm, sqrt(h^d * sum v^2).
    pub fn norm_l2(&self) -> f64 {
        (self.grid.cell_volume() * kahan_sum_by(&self.values, |v| v * v)).sqrt()
    }

    /// h^d * sum of f*g.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(self.grid.cell_volume() * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// axpy-style in-place update: self += c * other.
    pub fn add_scaled(&mut self, c: f64, other: &Field) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    /// Reflection x -> -x (nodes map onto nodes on the symmetric grid).
    pub fn reflect(&self) -> Field {
        let n = self.grid.n();
        let mut out = vec![0.0; self.values.len()];
        match self.grid.dim() {
            1 => {
                for i in 0..n {
                    out[i] = self.values[(n - i) % n];
                }
            }
            _ => {
                for ix in 0..n {
                    for iy in 0..n {
                        out[self.grid.index(ix, iy)] =
                            self.values[self.grid.index((n - ix) % n, (n - iy) % n)];
                    }
                }
            }
        }
        Field {
            grid: self.grid,
            values: out,
        }
    }
}

/// One real per node per axis; houses gradients and drifts.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: TorusGrid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        VectorField {
            grid,
            components: vec![vec![0.0; grid.node_count()]; grid.dim()],
        }
    }

    pub fn from_components(grid: TorusGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::invalid("components", "one component per axis required"));
        }
        for c in &components {
            if c.len() != grid.node_count() {
                return Err(Error::invalid("components", "component length mismatch"));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("components", "non-finite value"));
            }
        }
        Ok(VectorField { grid, components })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut Vec<f64> {
        &mut self.components[axis]
    }

    pub fn norm_inf(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Time slab of fields on a shared grid with uniform time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeField {
    grid: TorusGrid,
    t_nodes: Vec<f64>,
    frames: Vec<Field>,
}

impl TimeField {
    pub fn new(grid: TorusGrid, t_nodes: Vec<f64>, frames: Vec<Field>) -> Result<Self> {
        if t_nodes.len() != frames.len() || t_nodes.is_empty() {
            return Err(Error::invalid("frames", "frame count must equal time-node count and be nonzero"));
        }
        if t_nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("t_nodes", "times must be strictly increasing"));
        }
        for f in &frames {
            grid.check_same(&f.grid())?;
        }
        Ok(TimeField { grid, t_nodes, frames })
    }

    /// Uniform time nodes 0, dt, ..., T with `steps + 1` frames.
    pub fn time_nodes(t_final: f64, steps: usize) -> Vec<f64> {
        let dt = t_final / steps as f64;
        (0..=steps)
            .map(|k| if k == steps { t_final } else { k as f64 * dt })
            .collect()
    }

    /// Constant-in-time path.
    pub fn constant_in_time(field: &Field, t_final: f64, steps: usize) -> Self {
        let t_nodes = Self::time_nodes(t_final, steps);
        TimeField {
            grid: field.grid(),
            frames: vec![field.clone(); t_nodes.len()],
            t_nodes,
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t_nodes
    }

    pub fn t_final(&self) -> f64 {
        *self.t_nodes.last().unwrap()
    }

    /// Uniform step between stored frames.
    pub fn dt(&self) -> f64 {
        if self.t_nodes.len() < 2 {
            0.0
        } else {
            self.t_nodes[1] - self.t_nodes[0]
        }
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn frame(&self, k: usize) -> &Field {
        &self.frames[k]
    }

    pub fn frames(&self) -> &[Field] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [Field] {
        &mut self.frames
    }

    pub fn push_unchecked(&mut self, t: f64, f: Field) {
        self.t_nodes.push(t);
        self.frames.push(f);
    }

    pub fn first(&self) -> &Field {
        self.frames.first().unwrap()
    }

    pub fn last(&self) -> &Field {
        self.frames.last().unwrap()
    }

    /// Linear interpolation between stored frames; clamps outside [0, T].
    pub fn sample(&self, t: f64) -> Field {
        let (k, w) = self.locate(t);
        if w == 0.0 {
            return self.frames[k].clone();
        }
        let mut out = self.frames[k].clone();
        for (o, next) in out.values_mut().iter_mut().zip(self.frames[k + 1].values()) {
            *o = (1.0 - w) * *o + w * next;
        }
        out
    }

    /// Frame index and interpolation weight for time t.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.t_nodes.len();
        if t <= self.t_nodes[0] {
            return (0, 0.0);
        }
        if t >= self.t_nodes[n - 1] {
            return (n - 1, 0.0);
        }
        let dt = self.dt();
        let k = (((t - self.t_nodes[0]) / dt).floor() as usize).min(n - 2);
        let w = ((t - self.t_nodes[k]) / dt).clamp(0.0, 1.0);
        (k, w)
    }

    /// Max over frames of the sup-norm distance to another path.
    pub fn sup_inf_distance(&self, other: &TimeField) -> f64 {
        self.frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| {
                a.values()
                    .iter()
                    .zip(b.values())
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            })
            .fold(0.0, f64::max)
    }

    /// Max over frames of the discrete L1 distance to another path.
    pub fn sup_l1_distance(&self, other: &TimeField) -> f64 {
        let vol = self.grid.cell_volume();
        self.frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| {
                vol * a
                    .values()
                    .iter()
                    .zip(b.values())
                    .map(|(x, y)| (x - y).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Time-indexed vector field (control / drift along a trajectory of frames).
#[derive(Debug, Clone)]
pub struct TimeVectorField {
    pub t_nodes: Vec<f64>,
    pub frames: Vec<VectorField>,
}

impl TimeVectorField {
    pub fn grid(&self) -> TorusGrid {
        self.frames[0].grid()
    }

    pub fn dt(&self) -> f64 {
        if self.t_nodes.len() < 2 {
            0.0
        } else {
            self.t_nodes[1] - self.t_nodes[0]
        }
    }
}

/// Direction rule for the Godunov flux of |grad u|^2 / 2. The monotone
/// one-sided choice depends on which way time marches:
/// `ForwardInTime` suits d_t u + H(grad u) = 0 stepped forward,
/// `BackwardInTime` suits -d_t u - H(grad u) = F stepped backward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionRule {
    ForwardInTime,
    BackwardInTime,
}

/// Standard second-order centered five/three-point Laplacian.
pub fn laplacian(f: &Field) -> Field {
    let grid = f.grid();
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    match grid.dim() {
        1 => {
            for i in 0..n {
                let ip = (i + 1) % n;
                let im = (i + n - 1) % n;
                out[i] = (v[ip] - 2.0 * v[i] + v[im]) * inv_h2;
            }
        }
        _ => {
            for ix in 0..n {
                let xp = (ix + 1) % n;
                let xm = (ix + n - 1) % n;
                for iy in 0..n {
                    let yp = (iy + 1) % n;
                    let ym = (iy + n - 1) % n;
                    let c = grid.index(ix, iy);
                    out[c] = (v[grid.index(xp, iy)]
                        + v[grid.index(xm, iy)]
                        + v[grid.index(ix, yp)]
                        + v[grid.index(ix, ym)]
                        - 4.0 * v[c])
                        * inv_h2;
                }
            }
        }
    }
    Field::new(grid, out).expect("laplacian preserves shape")
}

/// Second-order centered gradient.
pub fn gradient(f: &Field) -> VectorField {
    let grid = f.grid();
    let n = grid.n();
    let inv_2h = 0.5 / grid.h();
    let v = f.values();
    let mut out = VectorField::zeros(grid);
    match grid.dim() {
        1 => {
            let c0 = out.component_mut(0);
            for i in 0..n {
                c0[i] = (v[(i + 1) % n] - v[(i + n - 1) % n]) * inv_2h;
            }
        }
        _ => {
            for ix in 0..n {
                let xp = (ix + 1) % n;
                let xm = (ix + n - 1) % n;
                for iy in 0..n {
                    let idx = grid.index(ix, iy);
                    out.component_mut(0)[idx] =
                        (v[grid.index(xp, iy)] - v[grid.index(xm, iy)]) * inv_2h;
                }
            }
            for ix in 0..n {
                for iy in 0..n {
                    let yp = (iy + 1) % n;
                    let ym = (iy + n - 1) % n;
                    let idx = grid.index(ix, iy);
                    out.component_mut(1)[idx] =
                        (v[grid.index(ix, yp)] - v[grid.index(ix, ym)]) * inv_2h;
                }
            }
        }
    }
    out
}

/// Second-order centered divergence of a vector field.
pub fn divergence(vf: &VectorField) -> Field {
    let grid = vf.grid();
    let n = grid.n();
    let inv_2h = 0.5 / grid.h();
    let mut out = vec![0.0; grid.node_count()];
    match grid.dim() {
        1 => {
            let c = vf.component(0);
            for i in 0..n {
                out[i] = (c[(i + 1) % n] - c[(i + n - 1) % n]) * inv_2h;
            }
        }
        _ => {
            let cx = vf.component(0);
            let cy = vf.component(1);
            for ix in 0..n {
                let xp = (ix + 1) % n;
                let xm = (ix + n - 1) % n;
                for iy in 0..n {
                    let yp = (iy + 1) % n;
                    let ym = (iy + n - 1) % n;
                    let idx = grid.index(ix, iy);
                    out[idx] = (cx[grid.index(xp, iy)] - cx[grid.index(xm, iy)]
                        + cy[grid.index(ix, yp)]
                        - cy[grid.index(ix, ym)])
                        * inv_2h;
                }
            }
        }
    }
    Field::new(grid, out).expect("divergence preserves shape")
}

/// Godunov numerical Hamiltonian for |grad u|^2 / 2, split per axis.
///
/// `ForwardInTime` yields sum over axes of
/// (max(D-u, 0)^2 + min(D+u, 0)^2) / 2, `BackwardInTime` the mirrored
/// variant (min(D-u, 0)^2 + max(D+u, 0)^2) / 2, which is the monotone
/// choice when the HJB equation is marched backward from its terminal
/// condition.
pub fn upwind_grad_sq(u: &Field, rule: DirectionRule) -> Field {
    let grid = u.grid();
    let n = grid.n();
    let inv_h = 1.0 / grid.h();
    let v = u.values();
    let mut out = vec![0.0; v.len()];
    let flux = |dm: f64, dp: f64| -> f64 {
        match rule {
            DirectionRule::ForwardInTime => 0.5 * (dm.max(0.0).powi(2) + dp.min(0.0).powi(2)),
            DirectionRule::BackwardInTime => 0.5 * (dm.min(0.0).powi(2) + dp.max(0.0).powi(2)),
        }
    };
    match grid.dim() {
        1 => {
            for i in 0..n {
                let dm = (v[i] - v[(i + n - 1) % n]) * inv_h;
                let dp = (v[(i + 1) % n] - v[i]) * inv_h;
                out[i] = flux(dm, dp);
            }
        }
        _ => {
            for ix in 0..n {
                let xp = (ix + 1) % n;
                let xm = (ix + n - 1) % n;
                for iy in 0..n {
                    let yp = (iy + 1) % n;
                    let ym = (iy + n - 1) % n;
                    let c = grid.index(ix, iy);
                    let dmx = (v[c] - v[grid.index(xm, iy)]) * inv_h;
                    let dpx = (v[grid.index(xp, iy)] - v[c]) * inv_h;
                    let dmy = (v[c] - v[grid.index(ix, ym)]) * inv_h;
                    let dpy = (v[grid.index(ix, yp)] - v[c]) * inv_h;
                    out[c] = flux(dmx, dpx) + flux(dmy, dpy);
                }
            }
        }
    }
    Field::new(grid, out).expect("upwind_grad_sq preserves shape")
}

/// Per-axis edge velocities, the face-centered representation used by the
/// conservative upwind advection. Edge e of axis 0 sits between nodes
/// (e, iy) and (e+1, iy); values are stored with the same flat layout as
/// node fields (edge index = lower node index).
#[derive(Debug, Clone)]
pub struct EdgeVelocities {
    grid: TorusGrid,
    per_axis: Vec<Vec<f64>>,
}

impl EdgeVelocities {
    /// Edge differences of a scalar value function: v_edge = (u_right - u_left)/h.
    /// With this choice the advection below is the exact transpose of the
    /// linearized backward-in-time Godunov Hamiltonian of `u`.
    pub fn from_value_function(u: &Field) -> Self {
        let grid = u.grid();
        let n = grid.n();
        let inv_h = 1.0 / grid.h();
        let v = u.values();
        let mut per_axis = Vec::with_capacity(grid.dim());
        match grid.dim() {
            1 => {
                let mut e = vec![0.0; n];
                for i in 0..n {
                    e[i] = (v[(i + 1) % n] - v[i]) * inv_h;
                }
                per_axis.push(e);
            }
            _ => {
                let mut ex = vec![0.0; grid.node_count()];
                let mut ey = vec![0.0; grid.node_count()];
                for ix in 0..n {
                    let xp = (ix + 1) % n;
                    for iy in 0..n {
                        let c = grid.index(ix, iy);
                        ex[c] = (v[grid.index(xp, iy)] - v[c]) * inv_h;
                        ey[c] = (v[grid.index(ix, (iy + 1) % n)] - v[c]) * inv_h;
                    }
                }
                per_axis.push(ex);
                per_axis.push(ey);
            }
        }
        EdgeVelocities { grid, per_axis }
    }

    /// Arithmetic average of the two adjacent node values of a vector field.
    pub fn from_vector_field(vf: &VectorField) -> Self {
        let grid = vf.grid();
        let n = grid.n();
        let mut per_axis = Vec::with_capacity(grid.dim());
        for axis in 0..grid.dim() {
            let c = vf.component(axis);
            let mut e = vec![0.0; grid.node_count()];
            match grid.dim() {
                1 => {
                    for i in 0..n {
                        e[i] = 0.5 * (c[i] + c[(i + 1) % n]);
                    }
                }
                _ => {
                    for ix in 0..n {
                        for iy in 0..n {
                            let idx = grid.index(ix, iy);
                            let nb = if axis == 0 {
                                grid.index((ix + 1) % n, iy)
                            } else {
                                grid.index(ix, (iy + 1) % n)
                            };
                            e[idx] = 0.5 * (c[idx] + c[nb]);
                        }
                    }
                }
            }
            per_axis.push(e);
        }
        EdgeVelocities { grid, per_axis }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn axis(&self, axis: usize) -> &[f64] {
        &self.per_axis[axis]
    }

    /// Largest per-node sum over axes of upwind speeds; the advection CFL
    /// number is dt * this / h.
    pub fn max_cfl_speed(&self) -> f64 {
        let grid = self.grid;
        let n = grid.n();
        let mut worst = 0.0f64;
        match grid.dim() {
            1 => {
                let e = &self.per_axis[0];
                for i in 0..n {
                    let s = e[i].max(0.0) - e[(i + n - 1) % n].min(0.0);
                    worst = worst.max(s);
                }
            }
            _ => {
                let ex = &self.per_axis[0];
                let ey = &self.per_axis[1];
                for ix in 0..n {
                    let xm = (ix + n - 1) % n;
                    for iy in 0..n {
                        let ym = (iy + n - 1) % n;
                        let c = grid.index(ix, iy);
                        let s = ex[c].max(0.0) - ex[grid.index(xm, iy)].min(0.0)
                            + ey[c].max(0.0)
                            - ey[grid.index(ix, ym)].min(0.0);
                        worst = worst.max(s);
                    }
                }
            }
        }
        worst
    }
}

/// Conservative donor-cell divergence of (m v) with edge velocities v:
/// returns div(m v) so that m' = m - dt * upwind_advection_div(m, v)
/// telescopes to exact mass conservation. For v built by
/// `EdgeVelocities::from_value_function(u)` this operator is the exact
/// negative transpose of the linearized Godunov Hamiltonian of u.
pub fn upwind_advection_div(m: &Field, vel: &EdgeVelocities) -> Result<Field> {
    m.grid().check_same(&vel.grid())?;
    let grid = m.grid();
    let n = grid.n();
    let inv_h = 1.0 / grid.h();
    let v = m.values();
    let mut out = vec![0.0; v.len()];
    for axis in 0..grid.dim() {
        let e = vel.axis(axis);
        match grid.dim() {
            1 => {
                for i in 0..n {
                    let im = (i + n - 1) % n;
                    let flux_r = e[i].max(0.0) * v[i] + e[i].min(0.0) * v[(i + 1) % n];
                    let flux_l = e[im].max(0.0) * v[im] + e[im].min(0.0) * v[i];
                    out[i] += (flux_r - flux_l) * inv_h;
                }
            }
            _ => {
                for ix in 0..n {
                    for iy in 0..n {
                        let c = grid.index(ix, iy);
                        let (up, down) = if axis == 0 {
                            (grid.index((ix + 1) % n, iy), grid.index((ix + n - 1) % n, iy))
                        } else {
                            (grid.index(ix, (iy + 1) % n), grid.index(ix, (iy + n - 1) % n))
                        };
                        let flux_r = e[c].max(0.0) * v[c] + e[c].min(0.0) * v[up];
                        let flux_l = e[down].max(0.0) * v[down] + e[down].min(0.0) * v[c];
                        out[c] += (flux_r - flux_l) * inv_h;
                    }
                }
            }
        }
    }
    Field::new(grid, out)
}

/// Directional derivative v . grad(w) linearizing the backward Godunov
/// Hamiltonian at the value function that generated `vel`; the transpose
/// partner of `upwind_advection_div`.
pub fn upwind_directional_derivative(w: &Field, vel: &EdgeVelocities) -> Result<Field> {
    w.grid().check_same(&vel.grid())?;
    let grid = w.grid();
    let n = grid.n();
    let inv_h = 1.0 / grid.h();
    let v = w.values();
    let mut out = vec![0.0; v.len()];
    for axis in 0..grid.dim() {
        let e = vel.axis(axis);
        match grid.dim() {
            1 => {
                for i in 0..n {
                    let im = (i + n - 1) % n;
                    // a_minus = min(D-u,0) lives on the left edge, a_plus = max(D+u,0) on the right.
                    let a_minus = e[im].min(0.0);
                    let a_plus = e[i].max(0.0);
                    let dm = (v[i] - v[im]) * inv_h;
                    let dp = (v[(i + 1) % n] - v[i]) * inv_h;
                    out[i] += a_minus * dm + a_plus * dp;
                }
            }
            _ => {
                for ix in 0..n {
                    for iy in 0..n {
                        let c = grid.index(ix, iy);
                        let (up, down) = if axis == 0 {
                            (grid.index((ix + 1) % n, iy), grid.index((ix + n - 1) % n, iy))
                        } else {
                            (grid.index(ix, (iy + 1) % n), grid.index(ix, (iy + n - 1) % n))
                        };
                        let a_minus = e[down].min(0.0);
                        let a_plus = e[c].max(0.0);
                        let dm = (v[c] - v[down]) * inv_h;
                        let dp = (v[up] - v[c]) * inv_h;
                        out[c] += a_minus * dm + a_plus * dp;
                    }
                }
            }
        }
    }
    Field::new(grid, out)
}

/// Compensated summation; keeps the 1e-12 quadrature invariants honest on
/// large grids.
pub fn kahan_sum(values: &[f64]) -> f64 {
    kahan_sum_by(values, |v| v)
}

fn kahan_sum_by(values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &v in values {
        let y = f(v) - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_construction() {
        let g = TorusGrid::new(1, 8).unwrap();
        assert_eq!(g.h(), 0.125);
        assert_eq!(g.coord(0), -0.5);
        assert_eq!(g.coord(1), -0.375);
        let g2 = TorusGrid::new(2, 16).unwrap();
        assert_eq!(g2.node_count(), 256);
        assert_eq!(g2.h(), 1.0 / 16.0);
        assert!(matches!(
            TorusGrid::new(3, 16),
            Err(Error::InvalidArgument { name: "dim", .. })
        ));
        assert!(TorusGrid::new(1, 7).is_err());
    }

    #[test]
    fn integrate_ones_is_exact() {
        for &(dim, n) in &[(1usize, 64usize), (2, 16)] {
            let g = TorusGrid::new(dim, n).unwrap();
            let ones = Field::constant(g, 1.0);
            assert_eq!(ones.integrate(), 1.0);
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = Field::constant(g, 3.25);
        assert_eq!(laplacian(&f).norm_inf(), 0.0);
    }

    #[test]
    fn laplacian_cosine_second_order_richardson() {
        // error(n) ~ C h^2 with C estimated on the doubled grid
        let err = |n: usize| -> f64 {
            let g = TorusGrid::new(1, n).unwrap();
            let f = Field::from_fn(g, |x, _| (2.0 * std::f64::consts::PI * x).cos());
            let lap = laplacian(&f);
            let exact = f.scale(-4.0 * std::f64::consts::PI.powi(2));
            lap.sub(&exact).unwrap().norm_inf()
        };
        let e256 = err(256);
        let e512 = err(512);
        let ratio = e256 / e512;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        let c512 = e512 * 512.0f64.powi(2);
        assert!(e256 <= 1.1 * c512 / 256.0f64.powi(2));
    }

    #[test]
    fn gradient_of_sine() {
        let g = TorusGrid::new(1, 256).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let u = Field::from_fn(g, |x, _| (tau * x).sin());
        let alpha = gradient(&u);
        for i in 0..g.n() {
            let exact = tau * (tau * g.coord(i)).cos();
            assert!((alpha.component(0)[i] - exact).abs() < 1e-3);
        }
    }

    #[test]
    fn summation_by_parts_symmetry() {
        let g = TorusGrid::new(1, 128).unwrap();
        let f = Field::from_fn(g, |x, _| (2.0 * std::f64::consts::PI * x).cos() + 0.3 * (4.0 * std::f64::consts::PI * x).sin());
        let w = Field::from_fn(g, |x, _| (6.0 * std::f64::consts::PI * x).sin() - 0.7);
        let a = w.zip_with(&laplacian(&f), |x, y| x * y).unwrap().integrate();
        let b = f.zip_with(&laplacian(&w), |x, y| x * y).unwrap().integrate();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn upwind_grad_sq_matches_printed_formula() {
        let g = TorusGrid::new(1, 16).unwrap();
        let u = Field::from_fn(g, |x, _| (2.0 * std::f64::consts::PI * x).sin() + x * x);
        let h = g.h();
        let got = upwind_grad_sq(&u, DirectionRule::ForwardInTime);
        for i in 0..g.n() {
            let v = u.values();
            let dm = (v[i] - v[(i + 15) % 16]) / h;
            let dp = (v[(i + 1) % 16] - v[i]) / h;
            let expect = 0.5 * (dm.max(0.0).powi(2) + dp.min(0.0).powi(2));
            assert_eq!(got.values()[i], expect);
        }
    }

    #[test]
    fn advection_is_exact_transpose_of_linearized_hamiltonian() {
        // <v.grad w, m> = <w, -div(m v)> must hold to round-off.
        let g = TorusGrid::new(1, 64).unwrap();
        let u = Field::from_fn(g, |x, _| (2.0 * std::f64::consts::PI * x).sin());
        let vel = EdgeVelocities::from_value_function(&u);
        let w = Field::from_fn(g, |x, _| (4.0 * std::f64::consts::PI * x).cos() + 0.1);
        let m = Field::from_fn(g, |x, _| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos());
        let lhs = upwind_directional_derivative(&w, &vel).unwrap().inner(&m).unwrap();
        let rhs = -upwind_advection_div(&m, &vel).unwrap().inner(&w).unwrap();
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");

        let g2 = TorusGrid::new(2, 16).unwrap();
        let u2 = Field::from_fn(g2, |x, y| (2.0 * std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).cos());
        let vel2 = EdgeVelocities::from_value_function(&u2);
        let w2 = Field::from_fn(g2, |x, y| (2.0 * std::f64::consts::PI * (x + y)).cos());
        let m2 = Field::from_fn(g2, |x, y| 1.0 + 0.3 * (2.0 * std::f64::consts::PI * x).cos() * (2.0 * std::f64::consts::PI * y).sin());
        let lhs2 = upwind_directional_derivative(&w2, &vel2).unwrap().inner(&m2).unwrap();
        let rhs2 = -upwind_advection_div(&m2, &vel2).unwrap().inner(&w2).unwrap();
        assert!((lhs2 - rhs2).abs() < 1e-12);
    }

    #[test]
    fn advection_conserves_mass_exactly() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = Field::from_fn(g, |x, y| (2.0 * std::f64::consts::PI * x).cos() + 0.5 * (2.0 * std::f64::consts::PI * y).sin());
        let vel = EdgeVelocities::from_value_function(&u);
        let m = Field::from_fn(g, |x, y| 1.0 + 0.4 * (2.0 * std::f64::consts::PI * (x - y)).sin());
        let div = upwind_advection_div(&m, &vel).unwrap();
        assert!(div.values().iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn time_field_sampling() {
        let g = TorusGrid::new(1, 8).unwrap();
        let frames = vec![Field::constant(g, 0.0), Field::constant(g, 1.0), Field::constant(g, 2.0)];
        let tf = TimeField::new(g, vec![0.0, 0.5, 1.0], frames).unwrap();
        assert_eq!(tf.sample(0.25).values()[0], 0.5);
        assert_eq!(tf.sample(-1.0).values()[0], 0.0);
        assert_eq!(tf.sample(2.0).values()[0], 2.0);
        assert_eq!(tf.dt(), 0.5);
    }

    #[test]
    fn reflection_is_involutive() {
        let g = TorusGrid::new(2, 8).unwrap();
        let f = Field::from_fn(g, |x, y| x + 2.0 * y + (2.0 * std::f64::consts::PI * x).sin());
        assert_eq!(f.reflect().reflect(), f);
    }
}
