//! Time evolution of the two representations: the full density-matrix
//! master equation and the closed rate system, both reporting the
//! controlled-subspace population P0(t) and the level populations.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::model::LevelScheme;
use crate::ode::{integrate_grid, SolverOptions};
use crate::operator::Operator;
use crate::rate::RateSystem;

/// Beyond this negative eigenvalue the integration is considered to have
/// lost positivity (signals too-loose tolerances).
const POSITIVITY_TOL: f64 = 1e-6;

/// A system density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermiticity_residual();
        if herm > 1e-10 {
            return Err(Error::NotHermitian(herm));
        }
        let tr = op.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidParams(format!(
                "density matrix trace {} is not 1",
                tr
            )));
        }
        let min_eig = hermitian_eigenvalues(op.entries())
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-8 {
            return Err(Error::PositivityLoss {
                t: 0.0,
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self { op })
    }

    /// The pure state |level><level|.
    pub fn pure(dim: usize, level: usize) -> Self {
        Self {
            op: Operator::projector(dim, level),
        }
    }

    /// The maximally mixed state I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim).scale_re(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn population(&self, level: usize) -> f64 {
        self.op.get(level, level).re
    }

    /// Tr(rho A).
    pub fn expectation(&self, a: &Operator) -> C64 {
        self.op.trace_product(a)
    }

    /// Tr(rho^2); equals 1 for pure states.
    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op).re
    }
}

/// P0 and the level populations on a time grid. Populations that cannot be
/// reconstructed from a pruned rate system are absent rather than guessed.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    /// Controlled-subspace population at each grid point.
    pub p_cs: Vec<f64>,
    /// populations[(row, level)], meaningful where `available[level]`.
    pub populations: Array2<f64>,
    pub available: Vec<bool>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn population(&self, row: usize, level: usize) -> Option<f64> {
        self.available
            .get(level)
            .copied()
            .unwrap_or(false)
            .then(|| self.populations[(row, level)])
    }

    pub fn min_p_cs(&self) -> f64 {
        self.p_cs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoidal time average of P0 over the grid.
    pub fn mean_p_cs(&self) -> f64 {
        if self.times.len() < 2 {
            return self.p_cs.first().copied().unwrap_or(f64::NAN);
        }
        let mut acc = 0.0;
        for i in 1..self.times.len() {
            let dt = self.times[i] - self.times[i - 1];
            acc += 0.5 * dt * (self.p_cs[i] + self.p_cs[i - 1]);
        }
        acc / (self.times.last().unwrap() - self.times[0])
    }
}

/// Uniform grid of `n_points` + 1 samples covering [0, t_max].
pub fn uniform_grid(t_max: f64, n_points: usize) -> Vec<f64> {
    let n = n_points.max(1);
    (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

fn flatten_density(rho: &Operator) -> Vec<f64> {
    let d = rho.dim();
    let mut y = vec![0.0; 2 * d * d];
    for j in 0..d {
        for k in 0..d {
            let z = rho.get(j, k);
            y[j * d + k] = z.re;
            y[d * d + j * d + k] = z.im;
        }
    }
    y
}

fn unflatten_density(y: &[f64], d: usize) -> Operator {
    let mut m = Array2::zeros((d, d));
    for j in 0..d {
        for k in 0..d {
            m[(j, k)] = C64::new(y[j * d + k], y[d * d + j * d + k]);
        }
    }
    Operator::new(m).expect("square by construction")
}

/// Lindblad right-hand side as a real matrix acting on the flattened
/// density matrix [Re(rho) rows, Im(rho) rows]. Built once per integration
/// so the hot path is a single dense mat-vec.
fn lindblad_superoperator(scheme: &LevelScheme) -> Array2<f64> {
    let d = scheme.dim();
    let n = 2 * d * d;
    let mut sup = Array2::zeros((n, n));
    let rhs = |rho: &Operator| -> Operator {
        let h = scheme.h_int();
        let mut out = (&h.matmul(rho) - &rho.matmul(h)).scale(C64::new(0.0, -1.0));
        for c in scheme.collapse_ops() {
            let cdag = c.dagger();
            let w = cdag.matmul(c);
            out = &out + &c.matmul(rho).matmul(&cdag);
            out = &out - &(&w.matmul(rho) + &rho.matmul(&w)).scale_re(0.5);
        }
        out
    };
    for col in 0..n {
        let mut unit = vec![0.0; n];
        unit[col] = 1.0;
        let image = rhs(&unflatten_density(&unit, d));
        let flat = flatten_density(&image);
        for row in 0..n {
            sup[(row, col)] = flat[row];
        }
    }
    sup
}

/// Integrate the master equation
/// rho_dot = -i [H, rho] + sum_k ( C_k rho C_k^dag - 1/2 {C_k^dag C_k, rho} )
/// and record P0 = Tr(P_cs rho) and the diagonal populations on the grid.
pub fn integrate_master_equation(
    scheme: &LevelScheme,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: SolverOptions,
) -> Result<TimeSeries> {
    if rho0.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch(rho0.dim(), scheme.dim()));
    }
    let d = scheme.dim();
    let sup = lindblad_superoperator(scheme);
    let n = 2 * d * d;
    let f = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        for (row, out) in dy.iter_mut().enumerate() {
            let mut acc = 0.0;
            for col in 0..n {
                acc += sup[(row, col)] * y[col];
            }
            *out = acc;
        }
    };
    let rows = integrate_grid(f, flatten_density(rho0.operator()), t_grid, opts)?;

    let mut p_cs = Vec::with_capacity(rows.len());
    let mut populations = Array2::zeros((rows.len(), d));
    for (idx, row) in rows.iter().enumerate() {
        let t = t_grid[idx];
        let rho = unflatten_density(row, d);
        let herm = rho.hermiticity_residual();
        let tr = rho.trace();
        if herm > 1e-6 || (tr - C64::new(1.0, 0.0)).norm() > 1e-6 {
            return Err(Error::StateInvariant {
                t,
                what: format!("hermiticity residual {herm:.3e}, trace {tr}"),
            });
        }
        let min_eig = hermitian_eigenvalues(rho.entries())
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::PositivityLoss {
                t,
                min_eigenvalue: min_eig,
            });
        }
        p_cs.push(rho.trace_product(scheme.p_cs()).re);
        for level in 0..d {
            populations[(idx, level)] = rho.get(level, level).re;
        }
    }
    Ok(TimeSeries {
        times: t_grid.to_vec(),
        p_cs,
        populations,
        available: vec![true; d],
    })
}

/// Expectation values Tr(rho sigma_i) of the retained basis operators; the
/// natural initial condition for `integrate_rate_system`.
pub fn expectations_of(state: &DensityMatrix, rs: &RateSystem) -> Vec<f64> {
    assert_eq!(state.dim(), rs.hilbert_dim(), "dimension mismatch");
    rs.elements()
        .iter()
        .map(|sigma| state.expectation(sigma).re)
        .collect()
}

/// Integrate d<sigma>/dt = M <sigma> + b from an initial expectation vector
/// and recover P0 (and the level populations where the retained basis
/// supports them).
pub fn integrate_rate_system(
    rs: &RateSystem,
    init: &[f64],
    t_grid: &[f64],
    opts: SolverOptions,
) -> Result<TimeSeries> {
    if init.len() != rs.size() {
        return Err(Error::DimensionMismatch(init.len(), rs.size()));
    }
    let rows = integrate_grid(|_t, x, dx| rs.rhs(x, dx), init.to_vec(), t_grid, opts)?;

    let d = rs.hilbert_dim();
    let maps: Vec<Option<(f64, Vec<f64>)>> =
        (0..d).map(|lvl| rs.level_population_map(lvl)).collect();
    let available: Vec<bool> = maps.iter().map(Option::is_some).collect();

    let mut p_cs = Vec::with_capacity(rows.len());
    let mut populations = Array2::zeros((rows.len(), d));
    for (idx, x) in rows.iter().enumerate() {
        let p0 = rs.population_cs(x);
        if !(-1e-6..=1.0 + 1e-6).contains(&p0) {
            return Err(Error::StateInvariant {
                t: t_grid[idx],
                what: format!("P0 = {p0} escaped [0, 1]"),
            });
        }
        p_cs.push(p0);
        for (level, map) in maps.iter().enumerate() {
            if let Some((c, w)) = map {
                populations[(idx, level)] =
                    c + w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
            }
        }
    }
    Ok(TimeSeries {
        times: t_grid.to_vec(),
        p_cs,
        populations,
        available,
    })
}
