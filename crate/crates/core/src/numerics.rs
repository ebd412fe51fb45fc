//! Dense complex linear algebra.
//!
//! Every matrix in the crate is a [`ComplexMatrix`] (column-major nalgebra
//! storage). `vec` stacks columns, so `vec(A B C) = (C^T kron A) vec(B)` holds
//! with the Kronecker layout produced by [`kron`]. All other modules rely on
//! that convention.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Systems whose 1-norm condition estimate exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative inflation applied to the largest eigenvalue so that
/// `lambda I - Q` stays positive semidefinite despite rounding.
pub const EIG_INFLATION: f64 = 1e-8;

/// Hermitian asymmetry tolerance, relative to the largest entry.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Singular values below `PINV_CUTOFF * s_max` are treated as zero.
pub const PINV_CUTOFF: f64 = 1e-12;

const ABS_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Kronecker product. Entry `(i*b.rows + k, j*b.cols + l)` equals `a[(i,j)] * b[(k,l)]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(m.len(), 1, m.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &ComplexMatrix, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.len() != rows * cols {
        return Err(Error::dims("unvec", rows * cols, v.len()));
    }
    Ok(ComplexMatrix::from_column_slice(rows, cols, v.as_slice()))
}

pub fn frobenius_sq(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Thin singular value decomposition `m = u diag(s) v^H`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd {
            u: ComplexMatrix::zeros(rows, 0),
            s: Vec::new(),
            v: ComplexMatrix::zeros(cols, 0),
        };
    }
    let dec = m.clone().svd(true, true);
    let u_raw = dec.u.expect("left singular vectors requested");
    let v_raw = dec.v_t.expect("right singular vectors requested").adjoint();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));

    let mut u = ComplexMatrix::zeros(rows, k);
    let mut v = ComplexMatrix::zeros(cols, k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &v_raw.column(src));
        s.push(dec.singular_values[src]);
    }
    Svd { u, s, v }
}

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest eigenvalue of a Hermitian positive semidefinite matrix.
///
/// The result is inflated by [`EIG_INFLATION`] (relative, plus an absolute
/// floor) so that `lambda I >= q` holds as a matrix inequality after rounding.
pub fn max_eig_hermitian(q: &ComplexMatrix) -> Result<f64> {
    if !q.is_square() {
        return Err(Error::dims("max_eig_hermitian", "square matrix", format!("{}x{}", q.nrows(), q.ncols())));
    }
    if q.is_empty() {
        return Ok(0.0);
    }
    let scale = max_abs(q);
    let mut asymmetry = 0.0f64;
    for j in 0..q.ncols() {
        for i in 0..=j {
            asymmetry = asymmetry.max((q[(i, j)] - q[(j, i)].conj()).norm());
        }
    }
    if asymmetry > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian { asymmetry });
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let sym = (q + q.adjoint()).scale(0.5);
    let lambda = sym
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(lambda + EIG_INFLATION * lambda.abs().max(scale) + ABS_TOL)
}

/// Partial-pivoting LU factorization `P a = L U`, generic over real and complex scalars.
#[derive(Debug, Clone)]
pub struct Lu<T: ComplexField> {
    lu: DMatrix<T>,
    perm: Vec<usize>,
}

impl<T> Lu<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    pub fn factor(a: &DMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims("lu", "square matrix", format!("{}x{}", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut piv, mut best) = (k, lu[(k, k)].modulus());
            for i in k + 1..n {
                let m = lu[(i, k)].modulus();
                if m > best {
                    piv = i;
                    best = m;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular { what: "linear system", condition: f64::INFINITY });
            }
            if piv != k {
                lu.swap_rows(piv, k);
                perm.swap(piv, k);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                lu[(i, k)] /= pivot;
            }
            for j in k + 1..n {
                let ukj = lu[(k, j)];
                if ukj == T::zero() {
                    continue;
                }
                for i in k + 1..n {
                    let lik = lu[(i, k)];
                    lu[(i, j)] -= lik * ukj;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solves `a x = b` for every column of `b`.
    pub fn solve(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let n = self.dim();
        let mut x = DMatrix::<T>::zeros(n, b.ncols());
        for col in 0..b.ncols() {
            for i in 0..n {
                x[(i, col)] = b[(self.perm[i], col)];
            }
            for i in 0..n {
                let mut acc = x[(i, col)];
                for k in 0..i {
                    acc -= self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = x[(i, col)];
                for k in i + 1..n {
                    acc -= self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = acc / self.lu[(i, i)];
            }
        }
        x
    }

    /// Solves `a^H x = b` for a single vector.
    #[allow(clippy::needless_range_loop)]
    fn solve_adjoint(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        // a^H = U^H L^H P, so solve U^H y = b, L^H z = y, x = P^T z.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= self.lu[(k, i)].conjugate() * y[k];
            }
            y[i] = acc / self.lu[(i, i)].conjugate();
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in i + 1..n {
                acc -= self.lu[(k, i)].conjugate() * y[k];
            }
            y[i] = acc;
        }
        let mut x = vec![T::zero(); n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }

    /// Hager-Higham lower estimate of `||a^{-1}||_1`.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let to_mat = |v: &[T]| DMatrix::from_column_slice(n, 1, v);
        let mut x = vec![T::from_real(1.0 / n as f64); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&to_mat(&x));
            let new_est: f64 = y.iter().map(|v| v.modulus()).sum();
            if new_est <= est && last_j != usize::MAX {
                break;
            }
            est = new_est;
            let xi: Vec<T> = y
                .iter()
                .map(|v| {
                    let m = v.modulus();
                    if m == 0.0 { T::one() } else { v.unscale(m) }
                })
                .collect();
            let z = self.solve_adjoint(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.modulus()))
                .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(zi, xi)| (zi.conjugate() * *xi).real()).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            x = vec![T::zero(); n];
            x[j] = T::one();
            last_j = j;
        }
        // Alternating-sign probe catches cases the power-style loop misses.
        let alt: Vec<T> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                T::from_real(sign * (1.0 + i as f64 / (n.max(2) - 1) as f64))
            })
            .collect();
        let y = self.solve(&to_mat(&alt));
        let alt_est = 2.0 * y.iter().map(|v| v.modulus()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|v| v.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition estimate of a square matrix (infinite when exactly singular).
pub fn condition_estimate<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> Result<f64> {
    match Lu::factor(a) {
        Ok(lu) => Ok(norm1(a) * lu.inverse_norm1_estimate()),
        Err(Error::Singular { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Solves `a x = b` with one step of iterative refinement.
///
/// Fails with [`Error::Singular`] when the condition estimate exceeds [`MAX_CONDITION`].
pub fn solve_linear<T>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    solve_named(a, b, "linear system")
}

pub(crate) fn solve_named<T>(a: &DMatrix<T>, b: &DMatrix<T>, what: &'static str) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    if b.nrows() != a.nrows() {
        return Err(Error::dims("solve_linear", a.nrows(), b.nrows()));
    }
    let lu = Lu::factor(a).map_err(|e| match e {
        Error::Singular { condition, .. } => Error::Singular { what, condition },
        other => other,
    })?;
    let condition = norm1(a) * lu.inverse_norm1_estimate();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { what, condition });
    }
    let mut x = lu.solve(b);
    let residual = b - a * &x;
    x += lu.solve(&residual);
    Ok(x)
}

/// Moore-Penrose pseudo-inverse with relative singular-value cutoff [`PINV_CUTOFF`].
pub fn pinv(m: &ComplexMatrix) -> ComplexMatrix {
    let Svd { u, s, v } = svd(m);
    let s_max = s.first().copied().unwrap_or(0.0);
    let cutoff = PINV_CUTOFF * s_max;
    let mut out = ComplexMatrix::zeros(m.ncols(), m.nrows());
    for (k, &sk) in s.iter().enumerate() {
        if sk > cutoff && sk > 0.0 {
            out += (v.column(k) * u.column(k).adjoint()).unscale(sk);
        }
    }
    out
}

/// Elementwise `exp(j arg(z))`, with `arg(0) := 0`.
pub fn phase_of(z: Complex64) -> Complex64 {
    if z.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / z.norm()
    }
}

/// Identity matrix of size `n`.
pub fn eye(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Hermitian log-determinant via Cholesky; `None` when not positive definite.
pub fn log_det_hpd(m: &ComplexMatrix) -> Option<f64> {
    let sym = (m + m.adjoint()).scale(0.5);
    let chol = sym.cholesky()?;
    let l = chol.l();
    Some((0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal_matrix, seeded};
    use approx::assert_relative_eq;

    fn nested_kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                for k in 0..b.nrows() {
                    for l in 0..b.ncols() {
                        out[(i * b.nrows() + k, j * b.ncols() + l)] = a[(i, j)] * b[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Cyclic Jacobi on the real 2n x 2n embedding [[Re, -Im], [Im, Re]].
    #[allow(clippy::needless_range_loop)]
    fn jacobi_max_eig(q: &ComplexMatrix) -> f64 {
        let n = q.nrows();
        let m = 2 * n;
        let mut a = vec![vec![0.0; m]; m];
        for i in 0..n {
            for j in 0..n {
                let z = q[(i, j)];
                a[i][j] = z.re;
                a[i + n][j + n] = z.re;
                a[i][j + n] = -z.im;
                a[i + n][j] = z.im;
            }
        }
        for _ in 0..100 {
            let off: f64 = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
            if off < 1e-26 {
                break;
            }
            for p in 0..m {
                for r in p + 1..m {
                    if a[p][r].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[r][r] - a[p][p]) / (2.0 * a[p][r]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let cs = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * cs;
                    for k in 0..m {
                        let akp = a[k][p];
                        let akr = a[k][r];
                        a[k][p] = cs * akp - sn * akr;
                        a[k][r] = sn * akp + cs * akr;
                    }
                    for k in 0..m {
                        let apk = a[p][k];
                        let ark = a[r][k];
                        a[p][k] = cs * apk - sn * ark;
                        a[r][k] = sn * apk + cs * ark;
                    }
                }
            }
        }
        (0..m).map(|i| a[i][i]).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn kron_identity_and_scalar() {
        let mut rng = seeded(1);
        let b = complex_normal_matrix(&mut rng, 2, 3);
        let k = kron(&eye(2), &b);
        assert_eq!(k.shape(), (4, 6));
        assert_eq!(k.view((0, 0), (2, 3)), b);
        assert_eq!(k.view((2, 3), (2, 3)), b);
        assert!(k.view((0, 3), (2, 3)).iter().all(|z| z.norm() == 0.0));
        let two = ComplexMatrix::from_element(1, 1, c(2.0, 0.0));
        assert_eq!(kron(&two, &b), b.scale(2.0));
    }

    #[test]
    fn kron_matches_nested_loops() {
        let mut rng = seeded(2);
        let a = complex_normal_matrix(&mut rng, 2, 3);
        let b = complex_normal_matrix(&mut rng, 3, 2);
        let diff = kron(&a, &b) - nested_kron(&a, &b);
        assert!(frobenius_sq(&diff) < 1e-28);
    }

    #[test]
    fn vec_stacks_columns() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(3., 0.), c(2., 0.), c(4., 0.)]);
        let v = vec(&m);
        let expect: Vec<f64> = vec![1., 2., 3., 4.];
        assert_eq!(v.iter().map(|z| z.re).collect::<Vec<_>>(), expect);
        assert_eq!(unvec(&v, 2, 2).unwrap(), m);
        assert!(matches!(unvec(&v, 3, 2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn vec_kron_identity() {
        let mut rng = seeded(3);
        let a = complex_normal_matrix(&mut rng, 2, 2);
        let b = complex_normal_matrix(&mut rng, 2, 2);
        let cm = complex_normal_matrix(&mut rng, 2, 2);
        let lhs = vec(&(&a * &b * &cm));
        let rhs = kron(&cm.transpose(), &a) * vec(&b);
        assert!(frobenius_sq(&(lhs - rhs)) < 1e-24);
    }

    #[test]
    fn svd_known_values() {
        let s = svd(&eye(3)).s;
        assert_eq!(s.len(), 3);
        for v in s {
            assert_relative_eq!(v, 1.0, epsilon = 1e-14);
        }
        let mut d = ComplexMatrix::zeros(2, 2);
        d[(0, 0)] = c(1.0, 0.0);
        d[(1, 1)] = c(3.0, 0.0);
        let s = svd(&d).s;
        assert_relative_eq!(s[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(s[1], 1.0, epsilon = 1e-14);
    }

    fn check_svd(m: &ComplexMatrix, tol: f64) {
        let Svd { u, s, v } = svd(m);
        let k = s.len();
        for w in s.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let mut sd = ComplexMatrix::zeros(k, k);
        for (i, &si) in s.iter().enumerate() {
            sd[(i, i)] = c(si, 0.0);
        }
        let rec = &u * sd * v.adjoint();
        let rel = frobenius_sq(&(rec - m)).sqrt() / frobenius_sq(m).sqrt().max(1e-300);
        assert!(rel < tol, "reconstruction error {rel}");
        assert!(frobenius_sq(&(u.adjoint() * &u - eye(k))).sqrt() < tol);
        assert!(frobenius_sq(&(v.adjoint() * &v - eye(k))).sqrt() < tol);
    }

    #[test]
    fn svd_reconstructs_random_and_rank_deficient() {
        let mut rng = seeded(4);
        check_svd(&complex_normal_matrix(&mut rng, 4, 3), 1e-10);
        check_svd(&complex_normal_matrix(&mut rng, 3, 5), 1e-10);
        check_svd(&complex_normal_matrix(&mut rng, 64, 64), 1e-9);
        let x = complex_normal_matrix(&mut rng, 6, 1);
        let y = complex_normal_matrix(&mut rng, 1, 5);
        check_svd(&(x * y), 1e-10);
    }

    #[test]
    fn max_eig_known_values() {
        let mut d = ComplexMatrix::zeros(3, 3);
        d[(0, 0)] = c(1.0, 0.0);
        d[(1, 1)] = c(5.0, 0.0);
        d[(2, 2)] = c(2.0, 0.0);
        assert_relative_eq!(max_eig_hermitian(&d).unwrap(), 5.0, max_relative = 1e-7);
        assert!(max_eig_hermitian(&d).unwrap() >= 5.0);
        let z = max_eig_hermitian(&ComplexMatrix::zeros(4, 4)).unwrap();
        assert!((0.0..1e-11).contains(&z));
    }

    #[test]
    fn max_eig_matches_jacobi_oracle() {
        let mut rng = seeded(5);
        for n in [2, 4, 7] {
            let a = complex_normal_matrix(&mut rng, n + 2, n);
            let q = a.adjoint() * &a;
            let oracle = jacobi_max_eig(&q);
            let got = max_eig_hermitian(&q).unwrap();
            assert!(got >= oracle);
            assert!((got - oracle).abs() / oracle < 1e-7, "{got} vs {oracle}");
        }
    }

    #[test]
    fn max_eig_rejects_non_hermitian() {
        let mut rng = seeded(6);
        let a = complex_normal_matrix(&mut rng, 3, 3);
        assert!(matches!(max_eig_hermitian(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn max_eig_dominates_rayleigh_quotients() {
        let mut rng = seeded(7);
        let a = complex_normal_matrix(&mut rng, 5, 5);
        let q = a.adjoint() * &a;
        let lambda = max_eig_hermitian(&q).unwrap();
        for _ in 0..100 {
            let x = complex_normal_matrix(&mut rng, 5, 1);
            let rq = (x.adjoint() * &q * &x)[(0, 0)].re / frobenius_sq(&x);
            assert!(lambda >= rq);
        }
    }

    #[test]
    fn solve_identity_random_and_singular() {
        let mut rng = seeded(8);
        let b = complex_normal_matrix(&mut rng, 6, 2);
        let x = solve_linear(&eye(6), &b).unwrap();
        assert!(frobenius_sq(&(x - &b)) < 1e-28);

        let a = complex_normal_matrix(&mut rng, 6, 6) + eye(6).scale(3.0);
        let x = solve_linear(&a, &b).unwrap();
        let res = frobenius_sq(&(&a * x - &b)).sqrt();
        assert!(res <= 1e-9 * frobenius_sq(&b).sqrt());

        let mut s = complex_normal_matrix(&mut rng, 4, 4);
        let col = s.column(0).clone_owned();
        s.set_column(3, &col);
        match solve_linear(&s, &complex_normal_matrix(&mut rng, 4, 1)) {
            Err(Error::Singular { condition, .. }) => assert!(condition > MAX_CONDITION),
            other => panic!("expected singular error, got {other:?}"),
        }
        assert!(solve_linear(&ComplexMatrix::zeros(3, 3), &complex_normal_matrix(&mut rng, 3, 1)).is_err());
    }

    #[test]
    fn solve_real_systems() {
        let a = DMatrix::<f64>::from_row_slice(2, 2, &[4.0, 1.0, 2.0, 3.0]);
        let b = DMatrix::<f64>::from_row_slice(2, 1, &[1.0, 2.0]);
        let x = solve_linear(&a, &b).unwrap();
        assert_relative_eq!(x[(0, 0)], 0.1, epsilon = 1e-14);
        assert_relative_eq!(x[(1, 0)], 0.6, epsilon = 1e-14);
    }

    #[test]
    fn condition_estimate_tracks_exact_value() {
        // diag(1, 1e-6): cond_1 = 1e6 exactly.
        let mut d = eye(2);
        d[(1, 1)] = c(1e-6, 0.0);
        let est = condition_estimate(&d).unwrap();
        assert_relative_eq!(est, 1e6, max_relative = 1e-9);
    }

    #[test]
    fn pinv_cases() {
        assert!(frobenius_sq(&(pinv(&eye(3)) - eye(3))) < 1e-26);
        let z = pinv(&ComplexMatrix::zeros(3, 2));
        assert_eq!(z.shape(), (2, 3));
        assert!(z.iter().all(|v| v.norm() == 0.0));

        let mut rng = seeded(9);
        let m = complex_normal_matrix(&mut rng, 6, 3);
        let normal = (m.adjoint() * &m).try_inverse().unwrap() * m.adjoint();
        let diff = frobenius_sq(&(pinv(&m) - &normal)).sqrt();
        assert!(diff < 1e-9 * frobenius_sq(&normal).sqrt());
    }

    #[test]
    fn log_det_of_diagonal() {
        let mut d = eye(2);
        d[(0, 0)] = c(2.0, 0.0);
        d[(1, 1)] = c(8.0, 0.0);
        assert_relative_eq!(log_det_hpd(&d).unwrap(), 16f64.ln(), epsilon = 1e-14);
        assert!(log_det_hpd(&ComplexMatrix::zeros(2, 2)).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn vec_kron_identity_holds(seed in any::<u64>(), p in 1usize..4, q in 1usize..4, r in 1usize..4, s in 1usize..4) {
                let mut rng = seeded(seed);
                let a = complex_normal_matrix(&mut rng, p, q);
                let b = complex_normal_matrix(&mut rng, q, r);
                let cm = complex_normal_matrix(&mut rng, r, s);
                let lhs = vec(&(&a * &b * &cm));
                let rhs = kron(&cm.transpose(), &a) * vec(&b);
                let scale = frobenius_sq(&lhs).sqrt().max(1.0);
                prop_assert!(frobenius_sq(&(lhs - rhs)).sqrt() < 1e-10 * scale);
            }

            #[test]
            fn svd_reconstruction_holds(seed in any::<u64>(), rows in 1usize..24, cols in 1usize..24) {
                let mut rng = seeded(seed);
                let m = complex_normal_matrix(&mut rng, rows, cols);
                check_svd(&m, 1e-9);
            }

            #[test]
            fn unvec_inverts_vec(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6) {
                let mut rng = seeded(seed);
                let m = complex_normal_matrix(&mut rng, rows, cols);
                prop_assert_eq!(unvec(&vec(&m), rows, cols).unwrap(), m);
            }
        }
    }
}
