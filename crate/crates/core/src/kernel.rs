//! Periodic convolution kernels.
//!
//! The harvesting radius of an agent is modelled by an even, nonnegative,
//! unit-mass kernel rho. Two kinds are supported: a compactly supported
//! smooth bump and the identity (convolution is then the identity map,
//! rho acting as a Dirac mass). Normalization is discrete so that the
//! grid integral of the weights is exactly 1 at every resolution; the
//! wrapped direct sum below is the normative definition of `convolve`.

use crate::error::{Error, Result};
use crate::grid::{Field, TimeField, TorusGrid};

/// Kernel specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// Smooth bump of radius r, w(x) ~ exp(-1/(1-(|x|/r)^2)) inside |x| < r.
    Bump { radius: f64 },
    /// Dirac mass; convolution is the identity map.
    Identity,
}

/// Even, nonnegative, unit-mass periodic convolution kernel.
///
/// Internally the weights are tabulated against node *offsets*:
/// `offsets[k] = w(k * h)` reduced to the minimum image, so that
/// `(rho * f)(x_i) = h^d * sum_j offsets[i - j mod n] * f(x_j)` holds
/// without any base-point shift.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    grid: TorusGrid,
    spec: KernelSpec,
    /// Unit-mass weight table indexed by wrapped node offset; `None` for identity.
    offsets: Option<Vec<f64>>,
    /// Nonzero entries of `offsets` as (flat offset index, weight).
    support: Vec<(usize, f64)>,
}

impl Kernel {
    pub fn new(grid: TorusGrid, spec: KernelSpec) -> Result<Self> {
        match spec {
            KernelSpec::Identity => Ok(Kernel {
                grid,
                spec,
                offsets: None,
                support: Vec::new(),
            }),
            KernelSpec::Bump { radius } => {
                if !(radius > 0.0 && radius <= 0.25) {
                    return Err(Error::invalid(
                        "radius",
                        format!("bump radius {radius} outside (0, 0.25]"),
                    ));
                }
                if grid.n() % 2 != 0 {
                    return Err(Error::invalid("grid", "bump kernel requires an even n"));
                }
                let n = grid.n();
                let h = grid.h();
                let bump = |d2: f64| -> f64 {
                    let q = d2 / (radius * radius);
                    if q < 1.0 {
                        (-1.0 / (1.0 - q)).exp()
                    } else {
                        0.0
                    }
                };
                let mut offsets = vec![0.0; grid.node_count()];
                match grid.dim() {
                    1 => {
                        for (k, o) in offsets.iter_mut().enumerate() {
                            let d = grid.min_image(k as f64 * h);
                            *o = bump(d * d);
                        }
                    }
                    _ => {
                        for a in 0..n {
                            let dx = grid.min_image(a as f64 * h);
                            for b in 0..n {
                                let dy = grid.min_image(b as f64 * h);
                                offsets[grid.index(a, b)] = bump(dx * dx + dy * dy);
                            }
                        }
                    }
                }
                let mass: f64 = grid.cell_volume() * offsets.iter().sum::<f64>();
                if mass <= 0.0 {
                    return Err(Error::invalid(
                        "radius",
                        "bump support contains no grid node; refine the grid",
                    ));
                }
                for o in offsets.iter_mut() {
                    *o /= mass;
                }
                let support: Vec<(usize, f64)> = offsets
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0.0)
                    .map(|(k, &w)| (k, w))
                    .collect();
                Ok(Kernel {
                    grid,
                    spec,
                    offsets: Some(offsets),
                    support,
                })
            }
        }
    }

    pub fn identity(grid: TorusGrid) -> Self {
        Kernel {
            grid,
            spec: KernelSpec::Identity,
            offsets: None,
            support: Vec::new(),
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.spec, KernelSpec::Identity)
    }

    /// Weights as a node field (the bump centered at x = 0); `None` for the
    /// identity kernel. Unit discrete mass and even on the grid.
    pub fn weights(&self) -> Option<Field> {
        let offsets = self.offsets.as_ref()?;
        let grid = self.grid;
        let n = grid.n();
        let half = n / 2;
        let mut v = vec![0.0; grid.node_count()];
        match grid.dim() {
            1 => {
                for (k, out) in v.iter_mut().enumerate() {
                    *out = offsets[(k + half) % n];
                }
            }
            _ => {
                for kx in 0..n {
                    for ky in 0..n {
                        v[grid.index(kx, ky)] =
                            offsets[grid.index((kx + half) % n, (ky + half) % n)];
                    }
                }
            }
        }
        Some(Field::new(grid, v).expect("weights preserve shape"))
    }

    /// Sup-norm of the kernel as a density (identity treated as a discrete
    /// Dirac of height 1/h^d).
    pub fn norm_inf(&self) -> f64 {
        match &self.offsets {
            Some(o) => o.iter().fold(0.0f64, |a, v| a.max(*v)),
            None => 1.0 / self.grid.cell_volume(),
        }
    }

    /// Periodic convolution (rho * f)(x_i) = h^d sum_j w(x_i - x_j) f(x_j).
    ///
    /// Preserves the discrete mean exactly (the weights have unit discrete
    /// mass) and maps nonnegative fields to nonnegative fields.
    pub fn convolve(&self, f: &Field) -> Result<Field> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch("kernel and field grids differ".into()));
        }
        if self.offsets.is_none() {
            return Ok(f.clone());
        }
        let grid = self.grid;
        let n = grid.n();
        let vol = grid.cell_volume();
        let v = f.values();
        let mut out = vec![0.0; v.len()];
        match grid.dim() {
            1 => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for &(k, w) in &self.support {
                        s += w * v[(i + n - k) % n];
                    }
                    *o = vol * s;
                }
            }
            _ => {
                for ix in 0..n {
                    for iy in 0..n {
                        let mut s = 0.0;
                        for &(k, w) in &self.support {
                            let (a, b) = (k / n, k % n);
                            s += w * v[grid.index((ix + n - a) % n, (iy + n - b) % n)];
                        }
                        out[grid.index(ix, iy)] = vol * s;
                    }
                }
            }
        }
        Field::new(grid, out)
    }

    /// Convolve every frame of a time path.
    pub fn convolve_path(&self, path: &TimeField) -> Result<TimeField> {
        if self.is_identity() {
            return Ok(path.clone());
        }
        let mut frames = Vec::with_capacity(path.num_frames());
        for f in path.frames() {
            frames.push(self.convolve(f)?);
        }
        TimeField::new(path.grid(), path.t_nodes().to_vec(), frames)
    }
}
