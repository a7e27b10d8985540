//! Static protection analysis: find dark states of the fast outside-space
//! dynamics and compute the effective Hamiltonian on the controlled
//! subspace, without integrating anything.
//!
//! A scheme fails to protect its controlled subspace exactly when the fast
//! generator (the strong couplings plus the decay widths) has a kernel
//! vector in the outside space that the slow coupling still reaches.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::null_space;
use crate::model::{LevelScheme, ModelKind};
use crate::operator::Operator;
use crate::trajectory::StateVector;

/// Couplings below this magnitude count as zero when deciding protection.
const COUPLING_TOL: f64 = 1e-10;

/// Dark states of the fast dynamics and their slow couplings back into the
/// controlled subspace.
#[derive(Debug, Clone)]
pub struct DarkStateReport {
    /// Normalized kernel vectors of the fast generator, embedded in the
    /// full space (zero inside the controlled subspace).
    pub kernel_vectors: Vec<StateVector>,
    /// Levels spanning the controlled subspace.
    pub controlled_levels: Vec<usize>,
    /// couplings[k][c] = <kernel_k| h_slow |controlled_c>.
    pub couplings: Vec<Vec<C64>>,
    /// False iff some kernel vector couples to the controlled subspace.
    pub protected: bool,
}

fn diagonal_projector_levels(p: &Operator) -> Result<(Vec<usize>, Vec<usize>)> {
    let d = p.dim();
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if i != j && p.get(i, j).norm() > 1e-12 {
                return Err(Error::InvalidParams(
                    "analysis requires a projector diagonal in the level basis".into(),
                ));
            }
        }
        let v = p.get(i, i).re;
        if (v - 1.0).abs() <= 1e-10 {
            inside.push(i);
        } else if v.abs() <= 1e-10 {
            outside.push(i);
        } else {
            return Err(Error::NotProjector((v - v * v).abs()));
        }
    }
    Ok((inside, outside))
}

/// Split the scheme Hamiltonian into caller-supplied slow and fast parts,
/// restrict the fast non-Hermitian generator
/// G = h_fast - (i/2) sum_k C_k^dag C_k to the outside space, and report its
/// kernel together with the slow couplings out of the controlled subspace.
pub fn find_dark_states(
    scheme: &LevelScheme,
    h_slow: &Operator,
    h_fast: &Operator,
) -> Result<DarkStateReport> {
    let d = scheme.dim();
    if h_slow.dim() != d || h_fast.dim() != d {
        return Err(Error::DimensionMismatch(h_slow.dim(), d));
    }
    let sum = h_slow + h_fast;
    let residual = sum.max_abs_diff(scheme.h_int());
    if residual > 1e-12 {
        return Err(Error::SplitMismatch(residual));
    }

    let (inside, outside) = diagonal_projector_levels(scheme.p_cs())?;
    let params = scheme.params();
    let rate_scale = params.xi.max(params.omega).max(params.gamma);
    let kernel_tol = 1e-8 * rate_scale;

    // G = h_fast - (i/2) sum C^dag C, restricted to the outside levels
    let mut g = ndarray::Array2::<C64>::zeros((outside.len(), outside.len()));
    let w = scheme.decay_rate_operator();
    for (r, &i) in outside.iter().enumerate() {
        for (c, &j) in outside.iter().enumerate() {
            g[(r, c)] = h_fast.get(i, j) - C64::new(0.0, 0.5) * w.get(i, j);
        }
    }
    let kernel = null_space(&g, kernel_tol);

    let mut kernel_vectors = Vec::with_capacity(kernel.len());
    let mut couplings = Vec::with_capacity(kernel.len());
    let mut protected = true;
    for v in kernel {
        let mut full = Array1::<C64>::zeros(d);
        for (r, &i) in outside.iter().enumerate() {
            full[i] = v[r];
        }
        // <v| h_slow |c> for each controlled level c
        let row: Vec<C64> = inside
            .iter()
            .map(|&c| {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..d {
                    acc += full[i].conj() * h_slow.get(i, c);
                }
                acc
            })
            .collect();
        if row.iter().any(|z| z.norm() > COUPLING_TOL) {
            protected = false;
        }
        kernel_vectors.push(StateVector::new(full)?);
        couplings.push(row);
    }

    Ok(DarkStateReport {
        kernel_vectors,
        controlled_levels: inside,
        couplings,
        protected,
    })
}

/// H_eff = P H P for a Hermitian projector P.
pub fn effective_hamiltonian(h: &Operator, p_cs: &Operator) -> Result<Operator> {
    if h.dim() != p_cs.dim() {
        return Err(Error::DimensionMismatch(h.dim(), p_cs.dim()));
    }
    let herm = p_cs.hermiticity_residual();
    if herm > 1e-10 {
        return Err(Error::NotHermitian(herm));
    }
    let idem = p_cs.projector_residual();
    if idem > 1e-10 {
        return Err(Error::NotProjector(idem));
    }
    Ok(p_cs.matmul(h).matmul(p_cs))
}

/// Rewrite the four-level chain Hamiltonian in the frame
/// {|0>, (|1>-|3>)/sqrt2, (|1>+|3>)/sqrt2, |2>}, where the strong coupling
/// collapses onto the single bright branch:
/// (xi/sqrt2)(|0><d| + |0><b|) + sqrt2 omega |b><2| + h.c.
pub fn bright_dark_rewrite(scheme: &LevelScheme) -> Result<Operator> {
    if scheme.kind() != Some(ModelKind::FourLevelChain) {
        return Err(Error::WrongScheme {
            expected: "four_level_chain",
        });
    }
    let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    // columns of U are the new basis states in the level basis
    let mut u = ndarray::Array2::<C64>::zeros((4, 4));
    u[(0, 0)] = C64::new(1.0, 0.0);
    u[(1, 1)] = inv_sqrt2;
    u[(3, 1)] = -inv_sqrt2;
    u[(1, 2)] = inv_sqrt2;
    u[(3, 2)] = inv_sqrt2;
    u[(2, 3)] = C64::new(1.0, 0.0);
    let u = Operator::new(u)?;
    let rotated = u.dagger().matmul(scheme.h_int()).matmul(&u);

    let params = scheme.params();
    let xi_c = params.xi / std::f64::consts::SQRT_2;
    let om_c = std::f64::consts::SQRT_2 * params.omega;
    let mut expected = ndarray::Array2::<C64>::zeros((4, 4));
    expected[(0, 1)] = C64::new(xi_c, 0.0);
    expected[(1, 0)] = C64::new(xi_c, 0.0);
    expected[(0, 2)] = C64::new(xi_c, 0.0);
    expected[(2, 0)] = C64::new(xi_c, 0.0);
    expected[(2, 3)] = C64::new(om_c, 0.0);
    expected[(3, 2)] = C64::new(om_c, 0.0);
    let expected = Operator::new(expected)?;
    let dev = rotated.max_abs_diff(&expected);
    debug_assert!(dev <= 1e-12, "frame change deviates by {dev}");
    if dev > 1e-12 {
        return Err(Error::StateInvariant {
            t: 0.0,
            what: format!("bright/dark rewrite residual {dev:.3e}"),
        });
    }
    Ok(rotated)
}
