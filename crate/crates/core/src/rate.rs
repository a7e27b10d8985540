//! Closed rate equations for operator expectation values.
//!
//! For a scheme with Hamiltonian H and collapse operators C_k, every
//! Hermitian operator A obeys d<A>/dt = <L(A)> with the adjoint generator
//!
//! ```text
//! L(A) = i [H, A] + sum_k ( C_k^dag A C_k - 1/2 {C_k^dag C_k, A} )
//! ```
//!
//! Expanding L(sigma_i) over the Gell-Mann basis turns this into the linear
//! system d<sigma>/dt = M <sigma> + b, which this module derives and,
//! optionally, prunes to the smallest self-contained subset that carries the
//! controlled-subspace population.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::solve_real;
use crate::model::LevelScheme;
use crate::operator::{anticommutator, commutator, expand_in_basis, gell_mann_basis, Operator};
use num_complex::Complex64 as C64;

/// Entries coupling rows below this magnitude are treated as structural
/// zeros by the pruning fixed point.
const PRUNE_TOL: f64 = 1e-12;

/// The derived linear system d<sigma>/dt = M <sigma> + b over a retained
/// subset of basis operators, plus the affine map recovering the
/// controlled-subspace population from the retained expectations.
#[derive(Debug, Clone)]
pub struct RateSystem {
    hilbert_dim: usize,
    labels: Vec<String>,
    elements: Vec<Operator>,
    m: Array2<f64>,
    b: Array1<f64>,
    p0_identity: f64,
    p0_coeffs: Array1<f64>,
}

impl RateSystem {
    /// Number of retained basis operators.
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    /// Dimension of the underlying Hilbert space.
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn m(&self) -> &Array2<f64> {
        &self.m
    }

    pub fn b(&self) -> &Array1<f64> {
        &self.b
    }

    /// (identity coefficient, coefficients on the retained operators) of
    /// the controlled-subspace projector.
    pub fn p0_map(&self) -> (f64, &Array1<f64>) {
        (self.p0_identity, &self.p0_coeffs)
    }

    /// Controlled-subspace population for a given expectation vector.
    pub fn population_cs(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.size());
        self.p0_identity
            + self
                .p0_coeffs
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Affine map (constant, weights) giving the population of `level` from
    /// the retained expectations, or `None` when |level><level| does not lie
    /// in span{I, retained sigmas}.
    pub fn level_population_map(&self, level: usize) -> Option<(f64, Vec<f64>)> {
        let d = self.hilbert_dim;
        if level >= d {
            return None;
        }
        let proj = Operator::projector(d, level);
        let constant = 1.0 / d as f64;
        let weights: Vec<f64> = self
            .elements
            .iter()
            .map(|sigma| proj.trace_product(sigma).re / 2.0)
            .collect();
        // valid only if the retained span actually reconstructs the projector
        let mut recon = Operator::identity(d).scale_re(constant);
        for (w, sigma) in weights.iter().zip(&self.elements) {
            recon = &recon + &sigma.scale_re(*w);
        }
        if recon.max_abs_diff(&proj) <= 1e-10 {
            Some((constant, weights))
        } else {
            None
        }
    }

    /// Unique fixed point of M x + b = 0, failing when M is singular. The
    /// fixed point is the long-time state only for relaxing (gamma > 0)
    /// schemes; coherent flows orbit it.
    pub fn steady_state(&self) -> Result<Array1<f64>> {
        let minus_b = self.b.mapv(|v| -v);
        solve_real(&self.m, &minus_b)
            .ok_or_else(|| Error::NoSteadyState("rate matrix is singular".into()))
    }

    /// Right-hand side M x + b, written into `out`.
    pub fn rhs(&self, x: &[f64], out: &mut [f64]) {
        let n = self.size();
        assert_eq!(x.len(), n);
        assert_eq!(out.len(), n);
        for (i, out_i) in out.iter_mut().enumerate() {
            let mut acc = self.b[i];
            for (m_ij, x_j) in self.m.row(i).iter().zip(x) {
                acc += m_ij * x_j;
            }
            *out_i = acc;
        }
    }
}

/// Apply the adjoint generator L to an operator:
/// i [H, a] + sum_k ( C_k^dag a C_k - 1/2 {C_k^dag C_k, a} ).
pub fn adjoint_generator(scheme: &LevelScheme, a: &Operator) -> Result<Operator> {
    if a.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch(a.dim(), scheme.dim()));
    }
    let mut out = commutator(scheme.h_int(), a)?.scale(C64::new(0.0, 1.0));
    for c in scheme.collapse_ops() {
        let cdag = c.dagger();
        let sandwich = cdag.matmul(a).matmul(c);
        let weight = cdag.matmul(c);
        let anti = anticommutator(&weight, a)?;
        out = &(&out + &sandwich) - &anti.scale_re(0.5);
    }
    Ok(out)
}

/// Derive the rate system of a scheme over the Gell-Mann basis. With
/// `prune` the basis is restricted to the smallest subset that contains the
/// support of the controlled-subspace projector and is invariant under the
/// flow; without it the full d^2 - 1 basis is kept.
pub fn derive_rate_system(scheme: &LevelScheme, prune: bool) -> Result<RateSystem> {
    let d = scheme.dim();
    let basis = gell_mann_basis(d)?;
    let n = basis.len();

    let mut m = Array2::<f64>::zeros((n, n));
    let mut b = Array1::<f64>::zeros(n);
    for i in 0..n {
        let image = adjoint_generator(scheme, basis.element(i))?;
        for j in 0..n {
            let coeff = image.trace_product(basis.element(j)) / 2.0;
            if coeff.im.abs() > 1e-12 {
                return Err(Error::ImaginaryResidual(coeff.im.abs()));
            }
            m[(i, j)] = coeff.re;
        }
        let inhom = image.trace() / d as f64;
        if inhom.im.abs() > 1e-12 {
            return Err(Error::ImaginaryResidual(inhom.im.abs()));
        }
        b[i] = inhom.re;
    }

    let (p0_full, p0_identity) = expand_in_basis(scheme.p_cs(), &basis)?;

    let retained: Vec<usize> = if prune {
        let mut keep: Vec<bool> = p0_full.iter().map(|c| c.abs() > PRUNE_TOL).collect();
        loop {
            let mut grew = false;
            for i in 0..n {
                if !keep[i] {
                    continue;
                }
                for j in 0..n {
                    if !keep[j] && m[(i, j)].abs() > PRUNE_TOL {
                        keep[j] = true;
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        (0..n).filter(|&i| keep[i]).collect()
    } else {
        (0..n).collect()
    };

    let k = retained.len();
    let mut m_r = Array2::zeros((k, k));
    let mut b_r = Array1::zeros(k);
    let mut p0_r = Array1::zeros(k);
    for (ri, &i) in retained.iter().enumerate() {
        b_r[ri] = b[i];
        p0_r[ri] = p0_full[i];
        for (rj, &j) in retained.iter().enumerate() {
            m_r[(ri, rj)] = m[(i, j)];
        }
    }

    Ok(RateSystem {
        hilbert_dim: d,
        labels: retained
            .iter()
            .map(|&i| basis.labels()[i].clone())
            .collect(),
        elements: retained.iter().map(|&i| basis.element(i).clone()).collect(),
        m: m_r,
        b: b_r,
        p0_identity,
        p0_coeffs: p0_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelKind, ModelParams};
    use crate::operator::gell_mann_basis;
    use approx::assert_abs_diff_eq;

    const R3: f64 = 1.732050807568877293527446341505872367_f64;

    fn scheme(kind: ModelKind, xi: f64, omega: f64, gamma: f64) -> LevelScheme {
        build_model(kind, ModelParams::new(xi, omega, gamma).unwrap()).unwrap()
    }

    #[test]
    fn identity_is_conserved() {
        for s in [
            scheme(ModelKind::TwoLevel, 1.0, 0.0, 3.0),
            scheme(ModelKind::ThreeLevelChain, 1.0, 5.0, 2.0),
            scheme(ModelKind::FourLevelChain, 1.0, 5.0, 2.0),
        ] {
            let id = Operator::identity(s.dim());
            let g = adjoint_generator(&s, &id).unwrap();
            assert!(g.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn coherent_two_level_generator_rows() {
        // sigma_3 flows to 2 xi sigma_2 under the coherent two-level scheme
        let s = scheme(ModelKind::TwoLevel, 1.0, 0.0, 0.0);
        let basis = gell_mann_basis(2).unwrap();
        let g = adjoint_generator(&s, basis.element(2)).unwrap();
        let expect = basis.element(1).scale_re(2.0);
        assert!(g.max_abs_diff(&expect) <= 1e-12);
    }

    #[test]
    fn dissipative_two_level_sigma3_row() {
        // sigma_3 -> 2 xi sigma_2 - gamma sigma_3 + gamma I
        let (xi, gamma) = (1.3, 4.7);
        let s = scheme(ModelKind::TwoLevel, xi, 0.0, gamma);
        let basis = gell_mann_basis(2).unwrap();
        let g = adjoint_generator(&s, basis.element(2)).unwrap();
        let expect = &(&basis.element(1).scale_re(2.0 * xi) - &basis.element(2).scale_re(gamma))
            + &Operator::identity(2).scale_re(gamma);
        assert!(g.max_abs_diff(&expect) <= 1e-12);
    }

    #[test]
    fn pruned_two_level_system() {
        let xi = 1.0;
        let rs = derive_rate_system(&scheme(ModelKind::TwoLevel, xi, 0.0, 0.0), true).unwrap();
        assert_eq!(rs.labels(), ["sigma_2", "sigma_3"]);
        let m = rs.m();
        assert_abs_diff_eq!(m[(0, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m[(0, 1)], -2.0 * xi, epsilon = 1e-12);
        assert_abs_diff_eq!(m[(1, 0)], 2.0 * xi, epsilon = 1e-12);
        assert_abs_diff_eq!(m[(1, 1)], 0.0, epsilon = 1e-12);
        assert_eq!(rs.b().iter().map(|v| v.abs()).fold(0.0, f64::max), 0.0);
        let (id, coeffs) = rs.p0_map();
        assert_abs_diff_eq!(id, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(coeffs[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(coeffs[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn pruned_three_level_coherent_matches_five_operator_system() {
        let (xi, omega) = (1.0, 10.0);
        let rs =
            derive_rate_system(&scheme(ModelKind::ThreeLevelChain, xi, omega, 0.0), true).unwrap();
        assert_eq!(
            rs.labels(),
            ["sigma_2", "sigma_3", "sigma_4", "sigma_7", "sigma_8"]
        );
        let expect = [
            [0.0, -2.0 * xi, -omega, 0.0, 0.0],
            [2.0 * xi, 0.0, 0.0, -omega, 0.0],
            [omega, 0.0, 0.0, -xi, 0.0],
            [0.0, omega, xi, 0.0, -R3 * omega],
            [0.0, 0.0, 0.0, R3 * omega, 0.0],
        ];
        for (i, row) in expect.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert_abs_diff_eq!(rs.m()[(i, j)], *want, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(rs.b()[i], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn three_level_dissipative_sigma8_row_is_master_equation_consistent() {
        // The sigma_8 relaxation rate must equal gamma: sigma_8 is an affine
        // function of the level-2 population alone, which decays at gamma.
        // (Three independent routes -- the adjoint generator, Tr(sigma_8
        // rho_dot), and the population kinetics -- all give -gamma and
        // b = gamma/sqrt3 here.)
        let (xi, omega, gamma) = (1.3, 7.1, 4.7);
        let rs = derive_rate_system(&scheme(ModelKind::ThreeLevelChain, xi, omega, gamma), true)
            .unwrap();
        assert_eq!(
            rs.labels(),
            ["sigma_2", "sigma_3", "sigma_4", "sigma_7", "sigma_8"]
        );
        let m = rs.m();
        assert_abs_diff_eq!(m[(4, 4)], -gamma, epsilon = 1e-12);
        assert_abs_diff_eq!(rs.b()[4], gamma / R3, epsilon = 1e-12);
        // remaining dissipative entries
        assert_abs_diff_eq!(m[(1, 4)], gamma / R3, epsilon = 1e-12);
        assert_abs_diff_eq!(m[(2, 2)], -gamma / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m[(3, 3)], -gamma / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rs.b()[1], -gamma / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn full_basis_closure_is_exact() {
        for s in [
            scheme(ModelKind::TwoLevel, 0.7, 0.0, 2.2),
            scheme(ModelKind::ThreeLevelChain, 0.7, 9.3, 2.2),
            scheme(ModelKind::FourLevelChain, 0.7, 9.3, 2.2),
        ] {
            let rs = derive_rate_system(&s, false).unwrap();
            let basis = gell_mann_basis(s.dim()).unwrap();
            for i in 0..rs.size() {
                let image = adjoint_generator(&s, basis.element(i)).unwrap();
                let mut recon = Operator::identity(s.dim()).scale_re(rs.b()[i]);
                for j in 0..rs.size() {
                    recon = &recon + &basis.element(j).scale_re(rs.m()[(i, j)]);
                }
                assert!(
                    image.max_abs_diff(&recon) <= 1e-10,
                    "closure residual too large for row {i} of {:?}",
                    s.kind()
                );
            }
        }
    }

    #[test]
    fn coherent_flow_is_antisymmetric() {
        // purely Hamiltonian flow preserves the trace form
        for kind in [
            ModelKind::TwoLevel,
            ModelKind::ThreeLevelChain,
            ModelKind::FourLevelChain,
        ] {
            let rs = derive_rate_system(&scheme(kind, 1.0, 8.0, 0.0), false).unwrap();
            let m = rs.m();
            for i in 0..rs.size() {
                for j in 0..rs.size() {
                    assert_abs_diff_eq!(m[(i, j)], -m[(j, i)], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn dissipative_flow_contracts_and_relaxes() {
        // Hilbert-Schmidt contraction (negative semidefinite symmetric
        // part) holds for the two-level scheme. It cannot hold in general:
        // decay toward a purer state grows the norm of the expectation
        // vector, and the chain schemes do exactly that. For those the
        // meaningful statement is relaxation to the unique fixed point.
        let rs = derive_rate_system(&scheme(ModelKind::TwoLevel, 1.0, 0.0, 6.0), false).unwrap();
        let m = rs.m();
        let n = rs.size();
        let mut sym = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                sym[(i, j)] = C64::new(0.5 * (m[(i, j)] + m[(j, i)]), 0.0);
            }
        }
        let eigs = crate::linalg::hermitian_eigenvalues(&sym);
        assert!(
            eigs.iter().all(|&e| e <= 1e-10),
            "two-level symmetric part has positive eigenvalue: {eigs:?}"
        );

        for kind in [ModelKind::ThreeLevelChain, ModelKind::FourLevelChain] {
            let s = scheme(kind, 1.0, 8.0, 6.0);
            let rs = derive_rate_system(&s, true).unwrap();
            let fixed = rs.steady_state().unwrap();
            // start from |0>: expectations of the ground projector
            let init: Vec<f64> = rs
                .elements()
                .iter()
                .map(|sigma| sigma.get(0, 0).re)
                .collect();
            // the slow leak mode relaxes at roughly xi^2/gamma
            let grid = [0.0, 400.0];
            let rows = crate::ode::integrate_grid(
                |_t, x, dx| rs.rhs(x, dx),
                init,
                &grid,
                crate::ode::SolverOptions::default(),
            )
            .unwrap();
            for (a, b) in rows[1].iter().zip(fixed.iter()) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn steady_state_two_level_dissipative() {
        let (xi, gamma) = (1.0, 10.0);
        let rs = derive_rate_system(&scheme(ModelKind::TwoLevel, xi, 0.0, gamma), true).unwrap();
        let x = rs.steady_state().unwrap();
        let p0 = rs.population_cs(x.as_slice().unwrap());
        let expect = (gamma * gamma + 4.0 * xi * xi) / (gamma * gamma + 8.0 * xi * xi);
        assert_abs_diff_eq!(p0, expect, epsilon = 1e-12);
    }

    #[test]
    fn singular_coherent_flow_has_no_steady_state() {
        // the 5x5 coherent system is antisymmetric with odd size, hence
        // singular; the solve must refuse rather than invent a fixed point
        let rs =
            derive_rate_system(&scheme(ModelKind::ThreeLevelChain, 1.0, 4.0, 0.0), true).unwrap();
        assert!(matches!(rs.steady_state(), Err(Error::NoSteadyState(_))));
    }

    #[test]
    fn coherent_two_level_fixed_point_is_the_center() {
        // even-dimensional antisymmetric M is invertible; the unique fixed
        // point is the oscillation center, not an attractor
        let rs = derive_rate_system(&scheme(ModelKind::TwoLevel, 1.0, 0.0, 0.0), true).unwrap();
        let x = rs.steady_state().unwrap();
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn level_population_maps_cover_all_levels_for_chain_models() {
        let rs =
            derive_rate_system(&scheme(ModelKind::FourLevelChain, 1.0, 5.0, 5.0), true).unwrap();
        for level in 0..4 {
            let (c, w) = rs.level_population_map(level).unwrap();
            assert_abs_diff_eq!(c, 0.25, epsilon = 1e-15);
            assert_eq!(w.len(), rs.size());
        }
        assert!(rs.level_population_map(4).is_none());
    }
}
