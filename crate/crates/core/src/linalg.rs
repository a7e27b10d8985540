//! Small dense linear algebra helpers: Hermitian eigenvalues by cyclic
//! Jacobi rotations, complex null spaces by full-pivot elimination, and a
//! real linear solve. These cover the tiny systems this crate works with
//! (dimension <= ~16) without pulling in a LAPACK backend.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// Eigenvalues of a Hermitian matrix, ascending, via cyclic Jacobi sweeps
/// with complex plane rotations.
pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut a = m.clone();
    // symmetrize roundoff so the iteration sees an exactly Hermitian matrix
    for p in 0..n {
        for q in (p + 1)..n {
            let avg = (a[(p, q)] + a[(q, p)].conj()) * 0.5;
            a[(p, q)] = avg;
            a[(q, p)] = avg.conj();
        }
        a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    }
    let scale = a.iter().fold(0.0f64, |s, x| s.max(x.norm())).max(1.0);
    let tol = 1e-15 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let abs = apq.norm();
                if abs <= tol * 1e-2 {
                    continue;
                }
                let phase = apq / abs; // e^{i phi}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // small-magnitude root of t^2 - 2 tau t - 1 = 0
                let tau = (aqq - app) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns: col_p' = c col_p + s conj(phase) col_q,
                //          col_q' = -s phase col_p + c col_q
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c + aiq * phase.conj() * s;
                    a[(i, q)] = aiq * c - aip * phase * s;
                }
                // rows (conjugate transform)
                for i in 0..n {
                    let api = a[(p, i)];
                    let aqi = a[(q, i)];
                    a[(p, i)] = api * c + aqi * phase * s;
                    a[(q, i)] = aqi * c - api * phase.conj() * s;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Orthonormal basis of the null space of a complex matrix, determined by
/// full-pivot Gaussian elimination with pivot threshold `tol`.
pub fn null_space(m: &Array2<C64>, tol: f64) -> Vec<Array1<C64>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut a = m.clone();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for k in 0..n {
        // largest remaining entry
        let mut best = (k, k, 0.0f64);
        for i in k..n {
            for j in k..n {
                let v = a[(i, j)].norm();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        let (pi, pj, _) = best;
        if pi != k {
            for j in 0..n {
                let tmp = a[(k, j)];
                a[(k, j)] = a[(pi, j)];
                a[(pi, j)] = tmp;
            }
        }
        if pj != k {
            for i in 0..n {
                let tmp = a[(i, k)];
                a[(i, k)] = a[(i, pj)];
                a[(i, pj)] = tmp;
            }
            col_perm.swap(k, pj);
        }
        let pivot = a[(k, k)];
        for i in (k + 1)..n {
            let factor = a[(i, k)] / pivot;
            a[(i, k)] = C64::new(0.0, 0.0);
            for j in (k + 1)..n {
                let akj = a[(k, j)];
                a[(i, j)] -= factor * akj;
            }
        }
        rank += 1;
    }

    let mut basis = Vec::with_capacity(n - rank);
    for free in rank..n {
        // solve U x_basic = -U[.., free] by back substitution
        let mut x = vec![C64::new(0.0, 0.0); n];
        x[free] = C64::new(1.0, 0.0);
        for i in (0..rank).rev() {
            let mut s = a[(i, free)];
            for j in (i + 1)..rank {
                s += a[(i, j)] * x[j];
            }
            x[i] = -s / a[(i, i)];
        }
        // undo the column permutation
        let mut v = Array1::zeros(n);
        for (pos, &orig) in col_perm.iter().enumerate() {
            v[orig] = x[pos];
        }
        basis.push(v);
    }

    // modified Gram-Schmidt
    let mut ortho: Vec<Array1<C64>> = Vec::with_capacity(basis.len());
    for mut v in basis {
        for u in &ortho {
            let proj: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u.iter()) {
                *vi -= proj * ui;
            }
        }
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            ortho.push(v.mapv(|x| x / norm));
        }
    }
    ortho
}

/// Solve A x = b for a real square system by partial-pivot elimination.
/// Returns `None` when the matrix is singular to working precision.
pub fn solve_real(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut rhs = b.clone();
    let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1.0);
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_val = m[(k, k)].abs();
        for i in (k + 1)..n {
            if m[(i, k)].abs() > pivot_val {
                pivot_row = i;
                pivot_val = m[(i, k)].abs();
            }
        }
        if pivot_val <= 1e-12 * scale {
            return None;
        }
        if pivot_row != k {
            for j in 0..n {
                m.swap((k, j), (pivot_row, j));
            }
            rhs.swap(k, pivot_row);
        }
        for i in (k + 1)..n {
            let factor = m[(i, k)] / m[(k, k)];
            m[(i, k)] = 0.0;
            for j in (k + 1)..n {
                let mkj = m[(k, j)];
                m[(i, j)] -= factor * mkj;
            }
            let rk = rhs[k];
            rhs[i] -= factor * rk;
        }
    }
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in (i + 1)..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = array![
            [C64::new(3.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]
        ];
        let e = hermitian_eigenvalues(&m);
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn eigenvalues_of_pauli_y() {
        let m = array![
            [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            [C64::new(0.0, 1.0), C64::new(0.0, 0.0)]
        ];
        let e = hermitian_eigenvalues(&m);
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigenvalues_match_trace_and_det_for_random_hermitian() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(2..=5);
            let mut m = Array2::<C64>::zeros((n, n));
            for i in 0..n {
                m[(i, i)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
                for j in (i + 1)..n {
                    let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            let eigs = hermitian_eigenvalues(&m);
            let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
            let esum: f64 = eigs.iter().sum();
            assert_abs_diff_eq!(trace, esum, epsilon = 1e-10);
            // sum of squares equals the Frobenius norm squared
            let frob: f64 = m.iter().map(|x| x.norm_sqr()).sum();
            let e2: f64 = eigs.iter().map(|x| x * x).sum();
            assert_abs_diff_eq!(frob, e2, epsilon = 1e-9);
        }
    }

    #[test]
    fn null_space_of_tridiagonal_chain() {
        // [[0,1,0],[1,0,1],[0,1,0]] has kernel (1, 0, -1)/sqrt2
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let m = array![[zero, one, zero], [one, zero, one], [zero, one, zero]];
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        let r = (v[0] / v[2]).re;
        assert_abs_diff_eq!(r, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1].norm(), 0.0, epsilon = 1e-12);
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn null_space_of_full_rank_is_empty() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let m = array![[zero, one, zero], [one, -i, one], [zero, one, -i]];
        assert!(null_space(&m, 1e-10).is_empty());
    }

    #[test]
    fn solve_small_system() {
        let a = array![[2.0, 1.0], [1.0, 3.0]];
        let b = array![5.0, 10.0];
        let x = solve_real(&a, &b).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_singular_returns_none() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        let b = array![1.0, 2.0];
        assert!(solve_real(&a, &b).is_none());
    }
}
