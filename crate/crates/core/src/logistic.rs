//! The fish population: logistic reaction-diffusion with nonlocal
//! harvesting.
//!
//! Time stepping is IMEX: diffusion implicit through the resolvent
//! (I - dt*mu*Lap)^-1, reaction and harvesting explicit. Under the
//! positivity step bound the update multiplies the density by nonnegative
//! factors and then averages, so nonnegativity, the comparison principle
//! and the barrier max(||theta0||, ||K||) survive discretization. A useful
//! side effect of this splitting: its stationary points solve the discrete
//! elliptic equation -mu*Lap theta = theta (Ktilde - theta) exactly,
//! independently of dt, which is the same system `steady_state` solves by
//! damped Newton.

use crate::error::{Error, Result};
use crate::grid::{laplacian, Field, TimeField};
use crate::kernel::Kernel;
use crate::linalg::{conjugate_gradient, solve_cyclic_tridiagonal, DiffusionResolvent};
use crate::spectral::principal_eigenpair;

/// Dead band around lambda_1 = 0 inside which the steady state is declared
/// marginal and the trivial branch is returned.
const LAMBDA_DEAD_BAND: f64 = 1e-8;

/// Environment the fish live in: resource distribution and dispersal rate.
#[derive(Debug, Clone)]
pub struct Habitat {
    pub k: Field,
    pub mu: f64,
    mean_k: f64,
}

impl Habitat {
    pub fn new(k: Field, mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::invalid("mu", "fish diffusivity must be positive"));
        }
        let mean_k = k.integrate();
        Ok(Habitat { k, mu, mean_k })
    }

    /// Cached integral of K over the torus.
    pub fn mean_k(&self) -> f64 {
        self.mean_k
    }
}

/// Stationary state of the logistic equation for a given effective
/// resource distribution.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub theta_bar: Field,
    /// True when the unique nonnegative steady state is identically zero.
    pub trivial: bool,
    /// lambda_1(mu, Ktilde); the state is non-trivial iff this is negative.
    pub lambda1_check: f64,
    /// |lambda_1| fell inside the numerical dead band around zero.
    pub marginal: bool,
}

/// Unique nonnegative steady state of d_t theta - mu Lap theta = theta (Ktilde - theta).
///
/// Non-trivial (positive) exactly when lambda_1(mu, Ktilde) < 0; solved by
/// damped Newton on the discrete residual with a long-time marching
/// fallback, both sharing the same centered stencil.
pub fn steady_state(mu: f64, ktilde: &Field) -> Result<SteadyState> {
    let lambda1 = principal_eigenpair(mu, ktilde)?.lambda1;
    let grid = ktilde.grid();
    if lambda1 > -LAMBDA_DEAD_BAND {
        return Ok(SteadyState {
            theta_bar: Field::zeros(grid),
            trivial: true,
            lambda1_check: lambda1,
            marginal: lambda1.abs() <= LAMBDA_DEAD_BAND,
        });
    }
    let floor = 1e-2 * ktilde.norm_inf().max(1.0);
    let guess = ktilde.map(|v| v.max(floor));
    let theta = match newton_steady(mu, ktilde, guess) {
        Ok(t) => t,
        Err(_) => {
            // global exponential stability guarantees the marching fallback
            let marched = march_to_steady(mu, ktilde)?;
            newton_steady(mu, ktilde, marched)?
        }
    };
    if theta.min() <= 0.0 {
        return Err(Error::SolverFailure(
            "steady state lost positivity despite lambda_1 < 0".into(),
        ));
    }
    Ok(SteadyState {
        theta_bar: theta,
        trivial: false,
        lambda1_check: lambda1,
        marginal: false,
    })
}

fn steady_residual(mu: f64, ktilde: &Field, theta: &Field) -> Field {
    let lap = laplacian(theta);
    theta
        .zip_with(ktilde, |t, k| t * (k - t))
        .unwrap()
        .zip_with(&lap, |r, l| -mu * l - r)
        .unwrap()
}

fn newton_steady(mu: f64, ktilde: &Field, mut theta: Field) -> Result<Field> {
    let grid = ktilde.grid();
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let tol = 1e-13 * ktilde.norm_inf().max(1.0);
    let mut res = steady_residual(mu, ktilde, &theta);
    let mut res_norm = res.norm_inf();
    for _ in 0..60 {
        if res_norm <= tol {
            return Ok(theta);
        }
        // Jacobian: -mu Lap - diag(Ktilde - 2 theta)
        let jac_diag: Vec<f64> = (0..grid.node_count())
            .map(|i| {
                2.0 * grid.dim() as f64 * mu * inv_h2 - (ktilde.values()[i] - 2.0 * theta.values()[i])
            })
            .collect();
        let rhs: Vec<f64> = res.values().iter().map(|v| -v).collect();
        let delta = match grid.dim() {
            1 => {
                let off = vec![-mu * inv_h2; n];
                solve_cyclic_tridiagonal(&off, &jac_diag, &off, &rhs)?
            }
            _ => {
                let kv = ktilde.values().to_vec();
                let tv = theta.values().to_vec();
                let apply = |x: &[f64], out: &mut [f64]| {
                    let xf = Field::new(grid, x.to_vec()).unwrap();
                    let lap = laplacian(&xf);
                    for i in 0..x.len() {
                        out[i] = -mu * lap.values()[i] - (kv[i] - 2.0 * tv[i]) * x[i];
                    }
                };
                conjugate_gradient(&apply, &jac_diag, &rhs, None, 1e-12, 5_000)?
            }
        };
        // damped update with positivity guard
        let mut step = 1.0;
        loop {
            let mut trial = theta.clone();
            for (t, d) in trial.values_mut().iter_mut().zip(&delta) {
                *t += step * d;
            }
            if trial.min() > 0.0 {
                let trial_res = steady_residual(mu, ktilde, &trial);
                let trial_norm = trial_res.norm_inf();
                if trial_norm < res_norm || step < 1e-3 {
                    theta = trial;
                    res = trial_res;
                    res_norm = trial_norm;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-6 {
                return Err(Error::NonConvergence {
                    solver: "steady-state Newton",
                    iterations: 60,
                    residual: res_norm,
                });
            }
        }
    }
    if res_norm <= tol {
        Ok(theta)
    } else {
        Err(Error::NonConvergence {
            solver: "steady-state Newton",
            iterations: 60,
            residual: res_norm,
        })
    }
}

fn march_to_steady(mu: f64, ktilde: &Field) -> Result<Field> {
    let grid = ktilde.grid();
    let kmax = ktilde.norm_inf().max(0.1);
    let dt = 0.2 / (2.0 * kmax);
    let resolvent = DiffusionResolvent::new(grid, dt * mu);
    let mut theta = Field::constant(grid, kmax.max(1.0));
    let mut previous_gap = f64::INFINITY;
    for _ in 0..2_000_000 {
        let reacted = theta.zip_with(ktilde, |t, k| t * (1.0 + dt * (k - t))).unwrap();
        let next = resolvent.apply(&reacted)?;
        let gap = next.sub(&theta).unwrap().norm_inf() / dt;
        theta = next;
        if gap < 1e-10 {
            return Ok(theta);
        }
        previous_gap = gap;
    }
    Err(Error::NonConvergence {
        solver: "steady-state marching",
        iterations: 2_000_000,
        residual: previous_gap,
    })
}

/// Solve d_t theta - mu Lap theta = theta (K - theta) - eps (rho*m) theta
/// on [0, t_final], reporting frames every `dt`.
///
/// The fisherman path `m_path` is sampled at solver times by linear
/// interpolation of its frames (after convolution, which commutes with the
/// interpolation). Output is nonnegative at all nodes and times; a zero
/// initial state stays identically zero.
pub fn evolve(
    theta0: &Field,
    habitat: &Habitat,
    eps: f64,
    m_path: &TimeField,
    rho: &Kernel,
    t_final: f64,
    dt: f64,
) -> Result<TimeField> {
    let grid = theta0.grid();
    if theta0.min() < 0.0 {
        return Err(Error::invalid("theta0", "initial fish density must be nonnegative"));
    }
    if eps < 0.0 {
        return Err(Error::invalid("eps", "fishing pressure must be nonnegative"));
    }
    if !(t_final > 0.0 && dt > 0.0) {
        return Err(Error::invalid("dt", "horizon and step must be positive"));
    }
    if m_path.t_final() < t_final - 1e-12 {
        return Err(Error::invalid("m_path", "fisherman path does not span [0, T]"));
    }
    // precompute rho * m on the path frames; linear time interpolation of the
    // convolved frames equals convolution of the interpolated frames
    let conv_path = rho.convolve_path(m_path)?;
    let conv_sup = conv_path
        .frames()
        .iter()
        .fold(0.0f64, |a, f| a.max(f.norm_inf()));
    let k_sup = habitat.k.norm_inf();
    let explicit_rate = k_sup + eps * conv_sup;
    if dt * explicit_rate >= 1.0 {
        return Err(Error::TimeStep {
            dt,
            constraint: "positivity bound dt*(||K|| + eps ||rho*m||) < 1",
            suggested: 0.5 / explicit_rate.max(1e-300),
        });
    }
    let steps = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    let dt_out = t_final / steps as f64;
    // the reaction factor also sees -theta itself; the barrier bounds it
    let barrier = theta0.norm_inf().max(k_sup);
    let full_rate = k_sup + eps * conv_sup + barrier;
    let substeps = ((dt_out * full_rate / 0.9).ceil() as usize).max(1);
    let dt_sub = dt_out / substeps as f64;
    let resolvent = DiffusionResolvent::new(grid, dt_sub * habitat.mu);

    let mut theta = theta0.clone();
    let t_nodes = TimeField::time_nodes(t_final, steps);
    let mut frames = Vec::with_capacity(steps + 1);
    frames.push(theta.clone());
    for k in 0..steps {
        for s in 0..substeps {
            let t = t_nodes[k] + s as f64 * dt_sub;
            let harvest = conv_path.sample(t);
            let mut reacted = theta.clone();
            for ((tv, &kv), &hv) in reacted
                .values_mut()
                .iter_mut()
                .zip(habitat.k.values())
                .zip(harvest.values())
            {
                let factor = 1.0 + dt_sub * (kv - *tv - eps * hv);
                *tv *= factor.max(0.0);
            }
            theta = resolvent.apply(&reacted)?;
        }
        frames.push(theta.clone());
    }
    TimeField::new(grid, t_nodes, frames)
}

/// Outcome of the exponential-decay fit in `stability_rate`.
#[derive(Debug, Clone)]
pub struct StabilityRate {
    /// Fitted decay rate of log ||theta(t) - theta_bar||_inf vs t (positive).
    pub rate: f64,
    /// R^2 of the linear fit; low values mean the decay window was noisy.
    pub quality: f64,
    /// Too few usable samples (e.g. the path already sits on theta_bar).
    pub degenerate: bool,
    /// The error grew somewhere inside the fit window.
    pub monotone_violation: bool,
}

/// Least-squares decay rate of the sup-norm error against a steady state,
/// fitted over the window where the error lies in [1e-10, 1e-1].
pub fn stability_rate(theta_path: &TimeField, theta_bar: &Field) -> Result<StabilityRate> {
    let errs: Vec<(f64, f64)> = theta_path
        .t_nodes()
        .iter()
        .zip(theta_path.frames())
        .map(|(&t, f)| (t, f.sub(theta_bar).map(|d| d.norm_inf()).unwrap_or(f64::NAN)))
        .collect();
    let window: Vec<(f64, f64)> = errs
        .iter()
        .filter(|(_, e)| (1e-10..=1e-1).contains(e))
        .map(|&(t, e)| (t, e.ln()))
        .collect();
    if window.len() < 3 {
        return Ok(StabilityRate {
            rate: 0.0,
            quality: 0.0,
            degenerate: true,
            monotone_violation: false,
        });
    }
    let monotone_violation = window
        .windows(2)
        .any(|w| w[1].1 > w[0].1 + 0.1f64.ln().abs() * 0.1);
    let (slope, r2) = linear_fit(&window);
    Ok(StabilityRate {
        rate: -slope,
        quality: r2,
        degenerate: false,
        monotone_violation,
    })
}

/// Least-squares slope and R^2 of y against x.
pub(crate) fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, r2)
}

/// Sup over time of ||theta_{eps,m}(t) - theta_bar_K||_inf starting from the
/// unfished steady state; the numerical side of the O(eps) perturbation
/// bound (verified in tests by halving eps).
pub fn perturbation_gap(
    eps: f64,
    m_path: &TimeField,
    habitat: &Habitat,
    rho: &Kernel,
) -> Result<f64> {
    let steady = steady_state(habitat.mu, &habitat.k)?;
    if steady.trivial {
        return Err(Error::SolverFailure(
            "perturbation gap needs a non-trivial unfished steady state".into(),
        ));
    }
    let dt = m_path.dt();
    let path = evolve(
        &steady.theta_bar,
        habitat,
        eps,
        m_path,
        rho,
        m_path.t_final(),
        if dt > 0.0 { dt } else { 1e-2 },
    )?;
    Ok(path
        .frames()
        .iter()
        .map(|f| f.sub(&steady.theta_bar).unwrap().norm_inf())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::kernel::Kernel;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn constant_resource_gives_constant_steady_state() {
        let g = TorusGrid::new(1, 64).unwrap();
        let s = steady_state(1.0, &Field::constant(g, 0.8)).unwrap();
        assert!(!s.trivial);
        for v in s.theta_bar.values() {
            assert!((v - 0.8).abs() < 1e-11);
        }
        assert!((s.lambda1_check + 0.8).abs() < 1e-9);
    }

    #[test]
    fn hostile_resource_gives_trivial_state() {
        let g = TorusGrid::new(1, 64).unwrap();
        let s = steady_state(1.0, &Field::constant(g, -1.0)).unwrap();
        assert!(s.trivial);
        assert_eq!(s.theta_bar.norm_inf(), 0.0);
        assert!((s.lambda1_check - 1.0).abs() < 1e-9);
    }

    #[test]
    fn steady_state_matches_long_time_integration() {
        let g = TorusGrid::new(1, 512).unwrap();
        let k = Field::from_fn(g, |x, _| 1.0 + 0.5 * (TAU * x).cos());
        let habitat = Habitat::new(k.clone(), 1.0).unwrap();
        let s = steady_state(1.0, &k).unwrap();
        assert!(!s.trivial);
        // long-time oracle: march the time-dependent equation to t = 200
        let uniform = Field::constant(g, 1.0);
        let m = TimeField::constant_in_time(&uniform, 200.0, 40);
        let rho = Kernel::identity(g);
        let path = evolve(&s.theta_bar.map(|v| v * 1.3 + 0.05), &habitat, 0.0, &m, &rho, 200.0, 0.05).unwrap();
        let gap = path.last().sub(&s.theta_bar).unwrap().norm_inf();
        assert!(gap < 1e-6, "long-time oracle gap {gap}");
    }

    #[test]
    fn evolve_keeps_steady_state_stationary() {
        let g = TorusGrid::new(1, 128).unwrap();
        let k = Field::from_fn(g, |x, _| 1.0 + 0.5 * (TAU * x).cos());
        let habitat = Habitat::new(k.clone(), 1.0).unwrap();
        let s = steady_state(1.0, &k).unwrap();
        let m = TimeField::constant_in_time(&Field::constant(g, 1.0), 2.0, 10);
        let rho = Kernel::identity(g);
        let path = evolve(&s.theta_bar, &habitat, 0.0, &m, &rho, 2.0, 1e-3).unwrap();
        let drift = path.last().sub(&s.theta_bar).unwrap().norm_inf();
        // drift per unit time stays at solver round-off
        assert!(drift / 2.0 <= 1e-8, "stationarity drift {drift}");
    }

    #[test]
    fn uniform_logistic_matches_scalar_ode() {
        // K = 1, rho identity, m uniform, eps = 0.3: theta' = theta(0.7 - theta)
        let g = TorusGrid::new(1, 64).unwrap();
        let habitat = Habitat::new(Field::constant(g, 1.0), 1.0).unwrap();
        let m = TimeField::constant_in_time(&Field::constant(g, 1.0), 1.0, 100);
        let rho = Kernel::identity(g);
        let path = evolve(&Field::constant(g, 1.0), &habitat, 0.3, &m, &rho, 1.0, 1e-4).unwrap();
        // high-order scalar oracle: RK4 on theta' = theta(0.7 - theta)
        let mut y = 1.0f64;
        let dt = 1e-5;
        let f = |y: f64| y * (0.7 - y);
        for _ in 0..100_000 {
            let k1 = f(y);
            let k2 = f(y + 0.5 * dt * k1);
            let k3 = f(y + 0.5 * dt * k2);
            let k4 = f(y + dt * k3);
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let got = path.last().values()[0];
        assert!((got - y).abs() <= 1e-6, "got {got}, oracle {y}");
        // spatially uniform throughout
        assert!(path.last().max() - path.last().min() < 1e-13);
    }

    #[test]
    fn evolve_rejects_oversized_steps_with_suggestion() {
        let g = TorusGrid::new(1, 64).unwrap();
        let habitat = Habitat::new(Field::constant(g, 3.0), 1.0).unwrap();
        let m = TimeField::constant_in_time(&Field::constant(g, 1.0), 1.0, 4);
        let rho = Kernel::identity(g);
        let err = evolve(&Field::constant(g, 1.0), &habitat, 2.0, &m, &rho, 1.0, 0.5);
        match err {
            Err(Error::TimeStep { suggested, .. }) => assert!(suggested > 0.0 && suggested < 0.5),
            other => panic!("expected TimeStep error, got {other:?}"),
        }
    }

    #[test]
    fn zero_initial_state_stays_zero() {
        let g = TorusGrid::new(1, 64).unwrap();
        let habitat = Habitat::new(Field::constant(g, 1.0), 1.0).unwrap();
        let m = TimeField::constant_in_time(&Field::constant(g, 1.0), 1.0, 10);
        let rho = Kernel::identity(g);
        let path = evolve(&Field::zeros(g), &habitat, 0.1, &m, &rho, 1.0, 1e-2).unwrap();
        for f in path.frames() {
            assert_eq!(f.norm_inf(), 0.0);
        }
    }

    #[test]
    fn positivity_comparison_and_barrier() {
        let g = TorusGrid::new(1, 64).unwrap();
        let k = Field::from_fn(g, |x, _| 1.0 + 0.4 * (TAU * x).cos());
        let habitat = Habitat::new(k.clone(), 0.5).unwrap();
        let m = TimeField::constant_in_time(
            &Field::from_fn(g, |x, _| 1.0 + 0.9 * (TAU * x).sin()),
            1.0,
            50,
        );
        let rho = Kernel::new(g, crate::kernel::KernelSpec::Bump { radius: 0.1 }).unwrap();
        let theta_a = Field::from_fn(g, |x, _| 0.5 + 0.5 * (TAU * x).cos().powi(2));
        let theta_b = theta_a.map(|v| v + 0.3);
        let pa = evolve(&theta_a, &habitat, 0.2, &m, &rho, 1.0, 1e-3).unwrap();
        let pb = evolve(&theta_b, &habitat, 0.2, &m, &rho, 1.0, 1e-3).unwrap();
        let barrier = theta_b.norm_inf().max(k.norm_inf());
        for (fa, fb) in pa.frames().iter().zip(pb.frames()) {
            for (a, b) in fa.values().iter().zip(fb.values()) {
                assert!(*a >= 0.0);
                assert!(a <= b, "comparison principle violated");
                assert!(*b <= barrier + 1e-12, "barrier violated");
            }
        }
    }

    #[test]
    fn decay_rate_of_uniform_perturbation() {
        // K = 1: linearization around theta_bar = 1 gives rate 1
        let g = TorusGrid::new(1, 64).unwrap();
        let habitat = Habitat::new(Field::constant(g, 1.0), 1.0).unwrap();
        let m = TimeField::constant_in_time(&Field::constant(g, 1.0), 25.0, 100);
        let rho = Kernel::identity(g);
        let path = evolve(&Field::constant(g, 1.5), &habitat, 0.0, &m, &rho, 25.0, 1e-3).unwrap();
        let fit = stability_rate(&path, &Field::constant(g, 1.0)).unwrap();
        assert!(!fit.degenerate);
        assert!((fit.rate - 1.0).abs() <= 0.05, "rate {}", fit.rate);
    }

    #[test]
    fn degenerate_fit_is_flagged() {
        let g = TorusGrid::new(1, 64).unwrap();
        let bar = Field::constant(g, 1.0);
        let path = TimeField::constant_in_time(&bar, 1.0, 10);
        let fit = stability_rate(&path, &bar).unwrap();
        assert!(fit.degenerate);
    }

    #[test]
    fn decay_rate_matches_linearized_eigenvalue() {
        let g = TorusGrid::new(1, 256).unwrap();
        let k = Field::from_fn(g, |x, _| 1.0 + 0.5 * (TAU * x).cos());
        let habitat = Habitat::new(k.clone(), 1.0).unwrap();
        let s = steady_state(1.0, &k).unwrap();
        let linearized = k.zip_with(&s.theta_bar, |kv, tv| kv - 2.0 * tv).unwrap();
        let lam = principal_eigenpair(1.0, &linearized).unwrap().lambda1;
        assert!(lam > 0.0);
        let m = TimeField::constant_in_time(&Field::constant(g, 1.0), 20.0, 100);
        let rho = Kernel::identity(g);
        let theta0 = s.theta_bar.map(|v| v * 1.2);
        let path = evolve(&theta0, &habitat, 0.0, &m, &rho, 20.0, 1e-3).unwrap();
        let fit = stability_rate(&path, &s.theta_bar).unwrap();
        assert!(
            (fit.rate - lam).abs() <= 0.1 * lam,
            "rate {} vs eigenvalue {lam}",
            fit.rate
        );
    }

    #[test]
    fn perturbation_gap_examples() {
        let g = TorusGrid::new(1, 128).unwrap();
        let k = Field::from_fn(g, |x, _| 1.0 + 0.3 * (TAU * x).cos());
        let habitat = Habitat::new(k, 1.0).unwrap();
        let m = TimeField::constant_in_time(
            &Field::from_fn(g, |x, _| 1.0 + 0.5 * (TAU * x).sin()),
            6.0,
            600,
        );
        let rho = Kernel::new(g, crate::kernel::KernelSpec::Bump { radius: 0.1 }).unwrap();
        let zero = perturbation_gap(0.0, &m, &habitat, &rho).unwrap();
        assert!(zero <= 1e-9, "eps = 0 gap {zero}");
        let g1 = perturbation_gap(0.04, &m, &habitat, &rho).unwrap();
        let g2 = perturbation_gap(0.02, &m, &habitat, &rho).unwrap();
        let ratio = g1 / g2;
        assert!((1.8..=2.2).contains(&ratio), "first-order ratio {ratio}");
    }

    #[test]
    fn perturbation_gap_scalar_shift() {
        // m uniform, rho identity, K = 1: theta drops from 1 to 1 - eps
        let g = TorusGrid::new(1, 64).unwrap();
        let habitat = Habitat::new(Field::constant(g, 1.0), 1.0).unwrap();
        let m = TimeField::constant_in_time(&Field::constant(g, 1.0), 40.0, 400);
        let rho = Kernel::identity(g);
        let eps = 0.25;
        let gap = perturbation_gap(eps, &m, &habitat, &rho).unwrap();
        assert!((gap - eps).abs() < 1e-5, "gap {gap} vs eps {eps}");
    }
}
