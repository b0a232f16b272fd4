//! Truncated singular value decomposition via a seeded randomized range
//! finder (Gaussian test matrix, oversampling 10, four power iterations).
//! The small projected problem is solved with a Jacobi eigensolver, so the
//! result is deterministic and dependency-free.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::{matmul, transpose, Tensor};

const OVERSAMPLING: usize = 10;
const POWER_ITERATIONS: usize = 4;
const RANGE_FINDER_SEED: u64 = 0x5245_4C41_5441;

#[allow(clippy::needless_range_loop)]
/// Rank-`k` truncated SVD of a matrix: `(u, s, v)` with `u` of size m×k,
/// `s` the k singular values in descending order, and `v` of size n×k, so
/// that `u·diag(s)·vᵀ` approximates the input.
pub fn truncated_svd(m: &Tensor, k: usize) -> Result<(Tensor, Tensor, Tensor)> {
    let (rows, cols) = m.dims2()?;
    let limit = rows.min(cols);
    if k == 0 || k > limit {
        return Err(Error::Argument(format!(
            "svd rank {k} out of range for a {rows}x{cols} matrix"
        )));
    }
    let samples = (k + OVERSAMPLING).min(limit);

    let mut rng = ChaCha8Rng::seed_from_u64(RANGE_FINDER_SEED);
    let omega_data: Vec<f64> = (0..cols * samples)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let omega = Tensor::new(vec![cols, samples], omega_data)?;

    let mt = transpose(m)?;
    let mut q = householder_q(&matmul(m, &omega)?);
    for _ in 0..POWER_ITERATIONS {
        let z = householder_q(&matmul(&mt, &q)?);
        q = householder_q(&matmul(m, &z)?);
    }

    // Project: B = Qᵀ M, then eigendecompose the small Gram matrix B Bᵀ.
    let b = matmul(&transpose(&q)?, m)?;
    let bt = transpose(&b)?;
    let mut gram = matmul(&b, &bt)?;
    symmetrize(&mut gram);
    let (eigvals, w) = jacobi_eigh(&gram);

    let s_full: Vec<f64> = eigvals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    let u_full = matmul(&q, &w)?;
    let v_unscaled = matmul(&bt, &w)?;

    let mut u = Tensor::zeros(vec![rows, k]);
    let mut s = Tensor::zeros(vec![k]);
    let mut v = Tensor::zeros(vec![cols, k]);
    for j in 0..k {
        s.data_mut()[j] = s_full[j];
        for i in 0..rows {
            u.set2(i, j, u_full.get2(i, j));
        }
    }
    let tiny = s_full[0].max(1.0) * 1e-13;
    for j in 0..k {
        if s_full[j] > tiny {
            for i in 0..cols {
                v.set2(i, j, v_unscaled.get2(i, j) / s_full[j]);
            }
        } else {
            fill_orthonormal_column(&mut v, j);
        }
    }
    Ok((u, s, v))
}

fn symmetrize(a: &mut Tensor) {
    let (n, _) = a.dims2().expect("square");
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a.get2(i, j) + a.get2(j, i));
            a.set2(i, j, m);
            a.set2(j, i, m);
        }
    }
}

/// For a (near-)zero singular direction, extend the preceding columns with
/// a unit vector orthogonal to them so the factor keeps orthonormal columns.
fn fill_orthonormal_column(v: &mut Tensor, col: usize) {
    let (n, _) = v.dims2().expect("matrix");
    for candidate in 0..n {
        let mut vec = vec![0.0; n];
        vec[candidate] = 1.0;
        for j in 0..col {
            let proj: f64 = (0..n).map(|i| vec[i] * v.get2(i, j)).sum();
            for (i, value) in vec.iter_mut().enumerate() {
                *value -= proj * v.get2(i, j);
            }
        }
        let nrm: f64 = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-6 {
            for (i, value) in vec.iter().enumerate() {
                v.set2(i, col, value / nrm);
            }
            return;
        }
    }
}

/// Thin Q factor of a Householder QR decomposition of an m×l matrix
/// (m ≥ l). Columns are orthonormal even when the input is rank deficient.
fn householder_q(a: &Tensor) -> Tensor {
    let (m, l) = a.dims2().expect("matrix");
    debug_assert!(m >= l);
    let mut r = a.data().to_vec();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(l);

    for j in 0..l {
        let norm: f64 = (j..m).map(|i| r[i * l + j] * r[i * l + j]).sum::<f64>().sqrt();
        if norm < 1e-300 {
            reflectors.push(None);
            continue;
        }
        let alpha = if r[j * l + j] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m - j];
        v[0] = r[j * l + j] - alpha;
        for i in (j + 1)..m {
            v[i - j] = r[i * l + j];
        }
        let vnorm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm < 1e-300 {
            reflectors.push(None);
            continue;
        }
        for x in &mut v {
            *x /= vnorm;
        }
        for c in j..l {
            let s: f64 = (0..m - j).map(|i| v[i] * r[(i + j) * l + c]).sum();
            for i in 0..m - j {
                r[(i + j) * l + c] -= 2.0 * s * v[i];
            }
        }
        reflectors.push(Some(v));
    }

    // Q = H_0 · H_1 · … · H_{l−1} applied to the first l identity columns.
    let mut q = vec![0.0; m * l];
    for j in 0..l {
        q[j * l + j] = 1.0;
    }
    for j in (0..l).rev() {
        if let Some(v) = &reflectors[j] {
            for c in 0..l {
                let s: f64 = (0..m - j).map(|i| v[i] * q[(i + j) * l + c]).sum();
                for i in 0..m - j {
                    q[(i + j) * l + c] -= 2.0 * s * v[i];
                }
            }
        }
    }
    Tensor::new(vec![m, l], q).expect("finite Q")
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with matching eigenvector
/// columns.
fn jacobi_eigh(sym: &Tensor) -> (Vec<f64>, Tensor) {
    let (n, _) = sym.dims2().expect("square");
    let mut a = sym.data().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = (frob * 1e-14).max(1e-300);

    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = c * apj - s * aqj;
                    a[q * n + j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .expect("finite eigenvalues")
    });
    let vals: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (newc, &oldc) in order.iter().enumerate() {
        for i in 0..n {
            vecs[i * n + newc] = v[i * n + oldc];
        }
    }
    (vals, Tensor::new(vec![n, n], vecs).expect("finite eigenvectors"))
}

/// Max-norm reconstruction error ‖m − u·diag(s)·vᵀ‖∞, used by tests.
pub fn reconstruction_error(m: &Tensor, u: &Tensor, s: &Tensor, v: &Tensor) -> Result<f64> {
    let (rows, cols) = m.dims2()?;
    let k = s.numel();
    let mut worst = 0.0f64;
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for r in 0..k {
                acc += u.get2(i, r) * s.data()[r] * v.get2(j, r);
            }
            worst = worst.max((acc - m.get2(i, j)).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn orthonormality_error(m: &Tensor) -> f64 {
        let gram = matmul(&transpose(m).unwrap(), m).unwrap();
        let (k, _) = gram.dims2().unwrap();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram.get2(i, j) - want).abs());
            }
        }
        worst
    }

    #[test]
    fn diagonal_matrix_singular_values() {
        let m = Tensor::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let (u, s, v) = truncated_svd(&m, 2).unwrap();
        assert!((s.data()[0] - 3.0).abs() < 1e-8);
        assert!((s.data()[1] - 2.0).abs() < 1e-8);
        assert!(orthonormality_error(&u) < 1e-8);
        assert!(orthonormality_error(&v) < 1e-8);
    }

    #[test]
    fn rank_one_outer_product_recovers_exactly() {
        let a = [1.0, -2.0, 0.5, 3.0];
        let b = [2.0, 1.0, -1.0];
        let rows: Vec<Vec<f64>> = a
            .iter()
            .map(|&x| b.iter().map(|&y| x * y).collect())
            .collect();
        let m = Tensor::from_rows(&rows).unwrap();
        let (u, s, v) = truncated_svd(&m, 1).unwrap();
        assert!(reconstruction_error(&m, &u, &s, &v).unwrap() < 1e-4);
    }

    #[test]
    fn random_rank_three_recovers() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let left: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let right: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let l = Tensor::from_rows(&left).unwrap();
        let r = Tensor::from_rows(&right).unwrap();
        let m = matmul(&l, &r).unwrap();
        let (u, s, v) = truncated_svd(&m, 3).unwrap();
        assert!(reconstruction_error(&m, &u, &s, &v).unwrap() < 1e-4);
        assert!(s.data()[0] >= s.data()[1] && s.data()[1] >= s.data()[2]);
    }

    #[test]
    fn rank_out_of_range_is_rejected() {
        let m = Tensor::zeros(vec![4, 3]);
        assert!(matches!(truncated_svd(&m, 4), Err(Error::Argument(_))));
        assert!(matches!(truncated_svd(&m, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn deterministic_across_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let m = Tensor::from_rows(&rows).unwrap();
        let (u1, s1, v1) = truncated_svd(&m, 3).unwrap();
        let (u2, s2, v2) = truncated_svd(&m, 3).unwrap();
        assert_eq!(u1, u2);
        assert_eq!(s1, s2);
        assert_eq!(v1, v2);
    }

    #[test]
    fn jacobi_matches_known_eigvals() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let m = Tensor::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let (vals, vecs) = jacobi_eigh(&m);
        assert!((vals[0] - 3.0).abs() < 1e-10);
        assert!((vals[1] - 1.0).abs() < 1e-10);
        assert!(orthonormality_error(&vecs) < 1e-10);
    }
}
