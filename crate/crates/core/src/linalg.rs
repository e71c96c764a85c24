//! Small dense complex linear algebra: one-sided Jacobi SVD, Householder QR
//! and random unitaries.

use num_complex::{Complex, Complex64};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::{Real, C};

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C<T>>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> C<T> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut C<T> {
        &mut self.data[r * self.cols + c]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(c, r) = self.at(r, c).conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.at(r, c) + a * other.at(k, c);
                    *out.at_mut(r, c) = v;
                }
            }
        }
        out
    }

    pub fn frobenius_sq(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Thin SVD `A = U diag(s) Vh` with `s` sorted descending.
///
/// `u` is `rows × k`, `vh` is `k × cols`, `k = min(rows, cols)`. Columns of
/// `u` paired with a zero singular value are zero.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub u: CMatrix<T>,
    pub s: Vec<T>,
    pub vh: CMatrix<T>,
}

impl<T: Real> Svd<T> {
    /// Number of singular values above `rel_cutoff * s[0]`.
    pub fn numerical_rank(&self, rel_cutoff: T) -> usize {
        match self.s.first() {
            Some(&top) if top > T::zero() => self.s.iter().filter(|&&v| v > rel_cutoff * top).count(),
            _ => 0,
        }
    }
}

pub fn svd<T: Real>(a: &CMatrix<T>) -> Svd<T> {
    if a.rows >= a.cols {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.adjoint());
        Svd { u: t.vh.adjoint(), s: t.s, vh: t.u.adjoint() }
    }
}

/// Hestenes one-sided Jacobi on a matrix with `rows >= cols`.
fn jacobi_tall<T: Real>(a: &CMatrix<T>) -> Svd<T> {
    let (m, n) = (a.rows, a.cols);
    // column-major working copies
    let mut w: Vec<Vec<C<T>>> = (0..n).map(|j| (0..m).map(|i| a.at(i, j)).collect()).collect();
    let one = Complex::new(T::one(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    let mut v: Vec<Vec<C<T>>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { one } else { zero }).collect())
        .collect();
    let tol = T::epsilon() * T::lit(4.0);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: T = w[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = w[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C<T> = w[p].iter().zip(&w[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == T::zero() || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                rotate(&mut w, p, q, phase, cs, sn);
                rotate(&mut v, p, q, phase, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(T, usize)> =
        w.iter().enumerate().map(|(j, col)| (col.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt(), j)).collect();
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut u = CMatrix::zeros(m, n);
    let mut vh = CMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &(sigma, j)) in order.iter().enumerate() {
        s.push(sigma);
        if sigma > T::zero() {
            for i in 0..m {
                *u.at_mut(i, k) = w[j][i] / sigma;
            }
        }
        for i in 0..n {
            *vh.at_mut(k, i) = v[j][i].conj();
        }
    }
    Svd { u, s, vh }
}

/// Thin QR `A = Q R` by Householder reflections: `q` is `rows × k` with
/// orthonormal columns and `r` is `k × cols`, `k = min(rows, cols)`.
/// Rank-deficient inputs still get a full set of orthonormal columns.
pub fn qr<T: Real>(a: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
    let (m, n) = (a.rows, a.cols);
    let k = m.min(n);
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<C<T>>> = Vec::with_capacity(k);
    for j in 0..k {
        let norm = (j..m).map(|i| r.at(i, j).norm_sqr()).sum::<T>().sqrt();
        let mut v: Vec<C<T>> = (j..m).map(|i| r.at(i, j)).collect();
        let x0 = v[0];
        let phase = if x0.norm() > T::zero() { x0 / x0.norm() } else { Complex::new(T::one(), T::zero()) };
        v[0] = x0 + phase * norm;
        let vv: T = v.iter().map(|z| z.norm_sqr()).sum();
        if vv > T::zero() {
            let scale = T::lit(2.0) / vv;
            for c in j..n {
                let dot: C<T> = v.iter().enumerate().map(|(t, vi)| vi.conj() * r.at(j + t, c)).sum();
                for (t, vi) in v.iter().enumerate() {
                    let val = r.at(j + t, c) - *vi * dot * scale;
                    *r.at_mut(j + t, c) = val;
                }
            }
        }
        reflectors.push(v);
    }
    let mut q = CMatrix::zeros(m, k);
    for i in 0..k {
        *q.at_mut(i, i) = Complex::new(T::one(), T::zero());
    }
    for (j, v) in reflectors.iter().enumerate().rev() {
        let vv: T = v.iter().map(|z| z.norm_sqr()).sum();
        if vv == T::zero() {
            continue;
        }
        let scale = T::lit(2.0) / vv;
        for c in 0..k {
            let dot: C<T> = v.iter().enumerate().map(|(t, vi)| vi.conj() * q.at(j + t, c)).sum();
            for (t, vi) in v.iter().enumerate() {
                let val = q.at(j + t, c) - *vi * dot * scale;
                *q.at_mut(j + t, c) = val;
            }
        }
    }
    let mut rr = CMatrix::zeros(k, n);
    for i in 0..k {
        for c in i..n {
            *rr.at_mut(i, c) = r.at(i, c);
        }
    }
    (q, rr)
}

/// Thin LQ `A = L Q` with `q` having orthonormal rows.
pub fn lq<T: Real>(a: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
    let (q, r) = qr(&a.adjoint());
    (r.adjoint(), q.adjoint())
}

fn rotate<T: Real>(cols: &mut [Vec<C<T>>], p: usize, q: usize, phase: C<T>, cs: T, sn: T) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    let ph_conj = phase.conj();
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let yq = *y * ph_conj;
        let nx = *x * cs - yq * sn;
        let ny = (*x * sn + yq * cs) * phase;
        *x = nx;
        *y = ny;
    }
}

/// Haar-distributed `dim × dim` unitary (row-major) from Gram–Schmidt on a
/// complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let mut cols: Vec<Vec<Complex64>> = (0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        let mut degenerate = false;
        for j in 0..dim {
            for k in 0..j {
                let proj: Complex64 = cols[k].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let basis = cols[k].clone();
                for (x, b) in cols[j].iter_mut().zip(&basis) {
                    *x -= proj * b;
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                degenerate = true;
                break;
            }
            for x in cols[j].iter_mut() {
                *x /= norm;
            }
        }
        if degenerate {
            continue;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (j, col) in cols.iter().enumerate() {
            for (i, &z) in col.iter().enumerate() {
                out[i * dim + j] = z;
            }
        }
        return out;
    }
}
