//! Dense sample/covariance matrices, a cyclic Jacobi eigensolver and
//! k-sparse vectors.
//!
//! All matrices are stored row-major in a flat `Vec<f64>`.

use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// An `n x d` data matrix, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::EmptyInput("sample matrix"));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for {n}x{d}, got {}",
                n * d,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("sample matrix"));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(n, d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    /// Copy with column means subtracted.
    pub fn centered(&self) -> Self {
        let mut mean = vec![0.0; self.d];
        for i in 0..self.n {
            for (m, x) in mean.iter_mut().zip(self.row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.n as f64);
        let data = self.data.chunks(self.d).flat_map(|r| r.iter().zip(&mean).map(|(x, m)| x - m)).collect();
        Self { n: self.n, d: self.d, data }
    }

    /// Column subset, in the order given.
    pub fn columns(&self, cols: &[usize]) -> Self {
        let data = (0..self.n).flat_map(|i| cols.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        Self { n: self.n, d: cols.len(), data }
    }

    /// `X v` for a dense `v` of length `d`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.d);
        self.data.chunks(self.d).map(|r| dot(r, v)).collect()
    }

    /// `X v` touching only the support of `v`.
    pub fn mul_sparse(&self, v: &KSparseVector) -> Vec<f64> {
        assert_eq!(v.d, self.d);
        (0..self.n)
            .map(|i| {
                let r = self.row(i);
                v.support.iter().zip(&v.values).map(|(&j, x)| r[j] * x).sum()
            })
            .collect()
    }

    /// `X^T u` for `u` of length `n`.
    pub fn tmul_vec(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n);
        let mut out = vec![0.0; self.d];
        for (r, &ui) in self.data.chunks(self.d).zip(u) {
            for (o, x) in out.iter_mut().zip(r) {
                *o += ui * x;
            }
        }
        out
    }
}

/// Symmetric `d x d` matrix with a lazily computed eigendecomposition.
#[derive(Debug, Clone)]
pub struct Covariance {
    d: usize,
    data: Vec<f64>,
    eigen: OnceLock<EigenBasis>,
}

impl PartialEq for Covariance {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.data == other.data
    }
}

impl Covariance {
    /// Validates symmetry up to `1e-12` relative and symmetrizes exactly.
    pub fn new(d: usize, mut data: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::EmptyInput("covariance"));
        }
        if data.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for {d}x{d}, got {}",
                d * d,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("covariance"));
        }
        let scale = data.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut asym = 0.0f64;
        for i in 0..d {
            for j in i + 1..d {
                asym = asym.max((data[i * d + j] - data[j * d + i]).abs());
            }
        }
        if asym > 1e-12 * scale {
            return Err(Error::NotSymmetric(asym));
        }
        for i in 0..d {
            for j in i + 1..d {
                let m = 0.5 * (data[i * d + j] + data[j * d + i]);
                data[i * d + j] = m;
                data[j * d + i] = m;
            }
        }
        Ok(Self { d, data, eigen: OnceLock::new() })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.d).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.d);
        self.data.chunks(self.d).map(|r| dot(r, v)).collect()
    }

    /// Principal submatrix on `idx` (in the order given).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let data = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        Self { d: idx.len(), data, eigen: OnceLock::new() }
    }

    /// Cached eigendecomposition, eigenvalues descending.
    pub fn eigen(&self) -> &EigenBasis {
        self.eigen.get_or_init(|| jacobi_eigen(&self.data, self.d))
    }

    /// Largest eigenvalue of the principal submatrix on `idx` and its
    /// eigenvector (length `idx.len()`).
    pub fn top_eigenpair_on(&self, idx: &[usize]) -> (f64, Vec<f64>) {
        let sub = self.submatrix(idx);
        let e = jacobi_eigen(&sub.data, sub.d);
        (e.values[0], e.vector(0).to_vec())
    }
}

/// Eigenvalues in descending order and orthonormal eigenvectors.
///
/// Each eigenvector has its largest-magnitude component positive (ties go
/// to the lowest index).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub values: Vec<f64>,
    /// Column-major: eigenvector `j` occupies `vectors[j*d..(j+1)*d]`.
    vectors: Vec<f64>,
}

impl EigenBasis {
    pub fn d(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        let d = self.d();
        &self.vectors[j * d..(j + 1) * d]
    }

    /// Component `i` of eigenvector `j`.
    pub fn component(&self, i: usize, j: usize) -> f64 {
        self.vectors[j * self.d() + i]
    }

    /// `V^T v`.
    pub fn coordinates(&self, v: &[f64]) -> Vec<f64> {
        (0..self.d()).map(|j| dot(self.vector(j), v)).collect()
    }
}

pub fn covariance_from_samples(x: &SampleMatrix) -> Covariance {
    let (n, d) = (x.n, x.d);
    let mut s = vec![0.0; d * d];
    for r in x.data.chunks(d) {
        for i in 0..d {
            let ri = r[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..d {
                s[i * d + j] += ri * r[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = s[i * d + j] / n as f64;
            s[i * d + j] = v;
            s[j * d + i] = v;
        }
    }
    Covariance { d, data: s, eigen: OnceLock::new() }
}

pub fn symmetric_eigendecomposition(s: &Covariance) -> EigenBasis {
    s.eigen().clone()
}

/// Cyclic Jacobi on a symmetric row-major `d x d` matrix.
pub fn jacobi_eigen(a: &[f64], d: usize) -> EigenBasis {
    let mut a = a.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    off += a[i * d + j] * a[i * d + j];
                }
            }
        }
        if off.sqrt() <= JACOBI_TOL * frob.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = 0.5 * (a[q * d + q] - a[p * d + p]) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k * d + p], a[k * d + q]);
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p * d + k], a[q * d + k]);
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for k in 0..d {
                    let (vkp, vkq) = (v[k * d + p], v[k * d + q]);
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j * d + j].total_cmp(&a[i * d + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&j| a[j * d + j]).collect();
    let mut vectors = Vec::with_capacity(d * d);
    for &j in &order {
        let mut col: Vec<f64> = (0..d).map(|i| v[i * d + j]).collect();
        fix_sign(&mut col);
        vectors.extend(col);
    }
    EigenBasis { values, vectors }
}

fn fix_sign(v: &mut [f64]) {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(i) = v.iter().position(|x| x.abs() >= m - 1e-12) {
        if v[i] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// A vector with at most `k` nonzeros, stored by sorted support.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KSparseVector {
    pub d: usize,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl KSparseVector {
    pub fn new(d: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch("support/values length".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) || support.last().is_some_and(|&i| i >= d) {
            return Err(invalid("support must be strictly increasing and < d"));
        }
        Ok(Self { d, support, values })
    }

    /// Keeps the exactly-nonzero entries of `x`.
    pub fn from_dense(x: &[f64]) -> Self {
        let (support, values) = x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).unzip();
        Self { d: x.len(), support, values }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|x| x.abs()).sum()
    }

    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        self.support.iter().zip(&self.values).map(|(&i, v)| x[i] * v).sum()
    }
}

pub fn quadratic_form(s: &Covariance, v: &KSparseVector) -> f64 {
    let mut acc = 0.0;
    for (a, &i) in v.support.iter().enumerate() {
        for (b, &j) in v.support.iter().enumerate() {
            acc += v.values[a] * v.values[b] * s.get(i, j);
        }
    }
    acc
}

/// Indices of the `k` largest `|x_i|` (ties to the lower index), sorted.
pub fn top_k_support(x: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Euclidean projection of `x` onto the unit-norm k-sparse vectors:
/// keep the `k` largest magnitudes and normalize.
pub fn top_k_sparse_project(x: &[f64], k: usize) -> Result<KSparseVector> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    let support: Vec<usize> = top_k_support(x, k).into_iter().filter(|&i| x[i] != 0.0).collect();
    let nrm = support.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
    if !(nrm > 0.0) || !nrm.is_finite() {
        return Err(Error::ZeroVector);
    }
    // leave already-unit inputs untouched so the projection is idempotent
    let scale = if (nrm - 1.0).abs() <= 4.0 * f64::EPSILON { 1.0 } else { nrm };
    let values = support.iter().map(|&i| x[i] / scale).collect();
    Ok(KSparseVector { d: x.len(), support, values })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// Lexicographic k-subsets of `0..d`.
#[derive(Debug, Clone)]
pub struct Combinations {
    d: usize,
    cur: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(d: usize, k: usize) -> Self {
        Self { d, cur: (0..k).collect(), done: k > d }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let k = self.cur.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.cur[i] < self.d - k + i {
                self.cur[i] += 1;
                for j in i + 1..k {
                    self.cur[j] = self.cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}
