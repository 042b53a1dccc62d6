//! Dense symmetric eigendecomposition (Householder tridiagonalization
//! followed by implicit QL with Wilkinson shifts).

use crate::{Error, Result, Scalar};

/// Maximum QL sweeps per eigenvalue before giving up.
const MAX_QL_ITERATIONS: usize = 64;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    n: usize,
    /// Row-major `n × n`; column `j` is the eigenvector of `values[j]`.
    vectors: Vec<Vec<T>>,
}

impl<T: Scalar> SymmetricEigen<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Component `i` of eigenvector `j`.
    #[inline]
    pub fn component(&self, i: usize, j: usize) -> T {
        self.vectors[i][j]
    }

    pub fn vector(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.vectors[i][j]).collect()
    }
}

/// Decomposes the symmetric matrix given as rows. Only the lower triangle is
/// read.
pub fn symmetric_eigen<T: Scalar>(matrix: &[Vec<T>]) -> Result<SymmetricEigen<T>> {
    let n = matrix.len();
    if let Some(bad) = matrix.iter().find(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            n,
            vectors: Vec::new(),
        });
    }
    let mut v: Vec<Vec<T>> = matrix.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tridiagonal_ql(Some(&mut v), &mut d, &mut e)?;
    Ok(SymmetricEigen {
        values: d,
        n,
        vectors: v,
    })
}

fn tridiagonalize<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    d.copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for dk in d.iter().take(i) {
            scale = scale + dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = zero;
                v[j][i] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g = g + v[k][j] * d[k];
                    e[k] = e[k] + v[k][j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] = v[k][j] - (f * e[k] + g * d[k]);
                }
                d[j] = v[i - 1][j];
                v[i][j] = zero;
            }
        }
        d[i] = h;
    }

    // accumulate the Householder reflections
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g = g + v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] = v[k][j] - g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = zero;
    }
    v[n - 1][n - 1] = T::one();
    e[0] = zero;
}

fn tridiagonal_ql<T: Scalar>(mut v: Option<&mut [Vec<T>]>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::of(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        // e[n-1] is zero, so m < n here
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::EigenNoConvergence(n));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut().flat_map(|v| v.iter_mut()) {
                        let h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = zero;
    }

    // selection sort keeps vectors paired with values
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in v.iter_mut().flat_map(|v| v.iter_mut()) {
                row.swap(i, k);
            }
        }
    }
    Ok(())
}

/// All eigenvalues, ascending, and the eigenvectors of the `count` smallest.
///
/// Householder reduction without forming `Q`, eigenvalues by QL, then
/// inverse iteration on the tridiagonal matrix. Vectors of close
/// eigenvalues are orthogonalized against each other. Much cheaper than
/// [`symmetric_eigen`] when `count` is small. Only the lower triangle is read.
pub fn symmetric_eigen_lowest<T: Scalar>(matrix: &[Vec<T>], count: usize) -> Result<SymmetricEigen<T>> {
    let n = matrix.len();
    if let Some(bad) = matrix.iter().find(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let count = count.min(n);
    let mut a = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            a[i * n + j] = matrix[i][j];
            a[j * n + i] = matrix[i][j];
        }
    }
    let (diag, sub, reflectors) = householder(&mut a, n);

    let mut d = diag.clone();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            n,
            vectors: Vec::new(),
        });
    }
    let mut e = vec![T::zero(); n];
    e[1..n].copy_from_slice(&sub);
    tridiagonal_ql(None, &mut d, &mut e)?;

    let norm = (0..n)
        .map(|i| {
            let mut r = diag[i].abs();
            if i > 0 {
                r = r + sub[i - 1].abs();
            }
            if i + 1 < n {
                r = r + sub[i].abs();
            }
            r
        })
        .fold(T::zero(), T::max);
    if norm == T::zero() {
        let vectors = (0..n).map(|i| (0..count).map(|j| T::of((i == j) as u8 as f64)).collect()).collect();
        return Ok(SymmetricEigen { values: d, n, vectors });
    }
    let eps = T::epsilon();
    let cluster_tol = T::of(1e-3) * norm;
    let nudge = T::of(10.0) * eps * norm;

    let mut columns: Vec<Vec<T>> = Vec::with_capacity(count);
    let mut cluster_start = 0;
    let mut prev_shift = T::zero();
    for j in 0..count {
        let mut shift = d[j];
        if j > 0 {
            if d[j] - d[j - 1] > cluster_tol {
                cluster_start = j;
            }
            if shift - prev_shift < nudge {
                shift = prev_shift + nudge;
            }
        }
        prev_shift = shift;
        let lu = TridiagonalLu::new(&diag, &sub, shift, eps * norm);
        let mut x: Vec<T> = (0..n).map(|i| start_component(i, j)).collect();
        for _ in 0..4 {
            x = lu.solve(x);
            for prev in &columns[cluster_start..j] {
                let dot: T = prev.iter().zip(&x).map(|(&p, &q)| p * q).sum();
                for (xi, &pi) in x.iter_mut().zip(prev) {
                    *xi = *xi - dot * pi;
                }
            }
            let peak = x.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
            if !(peak > T::zero()) || !peak.is_finite() {
                return Err(Error::EigenNoConvergence(n));
            }
            x.iter_mut().for_each(|v| *v = *v / peak);
            let len = x.iter().map(|&v| v * v).sum::<T>().sqrt();
            x.iter_mut().for_each(|v| *v = *v / len);
        }
        columns.push(x);
    }

    // back to the original basis: Q = H_0 H_1 ... H_{n-3}
    for x in columns.iter_mut() {
        for (k, v) in reflectors.iter().enumerate().rev() {
            let tail = &mut x[k + 1..];
            let vt = dot(v, tail);
            let f = vt + vt;
            for (t, &vi) in tail.iter_mut().zip(v) {
                *t = *t - f * vi;
            }
        }
    }
    let vectors = (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    Ok(SymmetricEigen { values: d, n, vectors })
}

// Four running sums so the reduction vectorizes.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (&x, &y) in ra.iter().zip(rb) {
        s = s + x * y;
    }
    s
}

// Deterministic, well-spread start vectors.
fn start_component<T: Scalar>(i: usize, j: usize) -> T {
    let mut h = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 29;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^= h >> 32;
    T::of(0.5 + (h >> 11) as f64 / (1u64 << 53) as f64)
}

/// Reduces the full symmetric row-major `a` to tridiagonal form. Returns
/// the diagonal, the subdiagonal and the unit Householder vectors; vector
/// `k` acts on indices `k + 1..n`.
fn householder<T: Scalar>(a: &mut [T], n: usize) -> (Vec<T>, Vec<T>, Vec<Vec<T>>) {
    let zero = T::zero();
    let mut diag = vec![zero; n];
    let mut sub = vec![zero; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        diag[k] = a[k * n + k];
        let x: Vec<T> = a[k * n + k + 1..(k + 1) * n].to_vec();
        let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm == zero {
            sub[k] = zero;
            reflectors.push(vec![zero; m]);
            continue;
        }
        let alpha = if x[0] > zero { -norm } else { norm };
        let mut v = x;
        v[0] = v[0] - alpha;
        let vlen = v.iter().map(|&t| t * t).sum::<T>().sqrt();
        v.iter_mut().for_each(|t| *t = *t / vlen);
        sub[k] = alpha;

        // B <- H B H on the trailing block, with p = 2 B v and q = p - (v.p) v
        let off = k + 1;
        let mut p = vec![zero; m];
        for (i, pi) in p.iter_mut().enumerate() {
            let s = dot(&a[(off + i) * n + off..(off + i) * n + n], &v);
            *pi = s + s;
        }
        let vp: T = v.iter().zip(&p).map(|(&a, &b)| a * b).sum();
        let q: Vec<T> = p.iter().zip(&v).map(|(&pi, &vi)| pi - vp * vi).collect();
        for i in 0..m {
            let (vi, qi) = (v[i], q[i]);
            let row = &mut a[(off + i) * n + off..(off + i) * n + n];
            for ((b, &vj), &qj) in row.iter_mut().zip(&v).zip(&q) {
                *b = *b - (vi * qj + qi * vj);
            }
        }
        reflectors.push(v);
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2];
        diag[n - 1] = a[(n - 1) * n + n - 1];
        sub[n - 2] = a[(n - 1) * n + n - 2];
    } else if n == 1 {
        diag[0] = a[0];
    }
    (diag, sub, reflectors)
}

/// LU factors of `T - shift I` with partial pivoting; `U` has two
/// superdiagonals.
struct TridiagonalLu<T> {
    u0: Vec<T>,
    u1: Vec<T>,
    u2: Vec<T>,
    l: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Scalar> TridiagonalLu<T> {
    fn new(diag: &[T], sub: &[T], shift: T, tiny: T) -> Self {
        let n = diag.len();
        let zero = T::zero();
        let guard = |x: T| if x.abs() < tiny { if x < zero { -tiny } else { tiny } } else { x };
        let mut lu = TridiagonalLu {
            u0: vec![zero; n],
            u1: vec![zero; n],
            u2: vec![zero; n],
            l: vec![zero; n],
            swapped: vec![false; n],
        };
        if n == 0 {
            return lu;
        }
        let mut cur = diag[0] - shift;
        let mut sup = if n > 1 { sub[0] } else { zero };
        for i in 0..n - 1 {
            let below = sub[i];
            let next_diag = diag[i + 1] - shift;
            let next_sup = if i + 2 < n { sub[i + 1] } else { zero };
            if cur.abs() >= below.abs() {
                let piv = guard(cur);
                let m = below / piv;
                lu.u0[i] = piv;
                lu.u1[i] = sup;
                lu.l[i] = m;
                cur = next_diag - m * sup;
                sup = next_sup;
            } else {
                let m = cur / below;
                lu.u0[i] = below;
                lu.u1[i] = next_diag;
                lu.u2[i] = next_sup;
                lu.l[i] = m;
                lu.swapped[i] = true;
                cur = sup - m * next_diag;
                sup = -m * next_sup;
            }
        }
        lu.u0[n - 1] = guard(cur);
        lu
    }

    fn solve(&self, mut y: Vec<T>) -> Vec<T> {
        let n = y.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] = y[i + 1] - self.l[i] * y[i];
        }
        for i in (0..n).rev() {
            let mut r = y[i];
            if i + 1 < n {
                r = r - self.u1[i] * y[i + 1];
            }
            if i + 2 < n {
                r = r - self.u2[i] * y[i + 2];
            }
            y[i] = r / self.u0[i];
        }
        y
    }
}
