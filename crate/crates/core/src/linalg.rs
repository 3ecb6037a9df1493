//! Dense Hermitian linear algebra over a self-contained complex scalar.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("linear system is singular")]
    Singular,
    #[error("Jacobi iteration did not converge")]
    NoConvergence,
}

/// Scalar field a quadratic map is defined over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldTag {
    Real,
    Complex,
}

/// Complex scalar as an explicit real/imaginary pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

impl C64 {
    pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
    pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
    pub const I: C64 = C64 { re: 0.0, im: 1.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        C64 { re, im }
    }

    pub const fn real(re: f64) -> Self {
        C64 { re, im: 0.0 }
    }

    pub fn conj(self) -> Self {
        C64::new(self.re, -self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn scale(self, s: f64) -> Self {
        C64::new(self.re * s, self.im * s)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl fmt::Display for C64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im >= 0.0 {
            write!(f, "{}+{}i", self.re, self.im)
        } else {
            write!(f, "{}{}i", self.re, self.im)
        }
    }
}

impl Add for C64 {
    type Output = C64;
    fn add(self, o: C64) -> C64 {
        C64::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for C64 {
    type Output = C64;
    fn sub(self, o: C64) -> C64 {
        C64::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for C64 {
    type Output = C64;
    fn mul(self, o: C64) -> C64 {
        C64::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Mul<f64> for C64 {
    type Output = C64;
    fn mul(self, s: f64) -> C64 {
        self.scale(s)
    }
}

impl Div for C64 {
    type Output = C64;
    fn div(self, o: C64) -> C64 {
        let d = o.norm_sqr();
        C64::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
}

impl Div<f64> for C64 {
    type Output = C64;
    fn div(self, s: f64) -> C64 {
        C64::new(self.re / s, self.im / s)
    }
}

impl Neg for C64 {
    type Output = C64;
    fn neg(self) -> C64 {
        C64::new(-self.re, -self.im)
    }
}

impl AddAssign for C64 {
    fn add_assign(&mut self, o: C64) {
        self.re += o.re;
        self.im += o.im;
    }
}

impl SubAssign for C64 {
    fn sub_assign(&mut self, o: C64) {
        self.re -= o.re;
        self.im -= o.im;
    }
}

impl From<f64> for C64 {
    fn from(re: f64) -> Self {
        C64::real(re)
    }
}

/// Conjugate-linear inner product `a* b`.
pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = C64::ZERO;
    for (x, y) in a.iter().zip(b) {
        s += x.conj() * *y;
    }
    s
}

pub fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rnorm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rdot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Returns `a / |a|`, or `None` for a zero vector.
pub fn rnormalize(a: &[f64]) -> Option<Vec<f64>> {
    let n = rnorm(a);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(a.iter().map(|x| x / n).collect())
}

pub fn to_complex(a: &[f64]) -> Vec<C64> {
    a.iter().map(|&x| C64::real(x)).collect()
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![C64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols, "from_real: wrong number of entries");
        DenseMatrix {
            rows,
            cols,
            data: values.iter().map(|&x| C64::real(x)).collect(),
        }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix { rows: r, cols: c, data })
    }

    /// Builds `(M + M*)/2`, the Hermitian part of a square matrix.
    pub fn hermitian(m: &DenseMatrix) -> Result<Self, LinalgError> {
        m.require_square()?;
        let n = m.rows;
        Ok(Self::from_fn(n, n, |i, j| {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            if i == j {
                C64::real(v.re)
            } else {
                v
            }
        }))
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::real(x);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn require_square(&self) -> Result<usize, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.rows)
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.scale(s)).collect(),
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &DenseMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            a.re += s * b.re;
            a.im += s * b.im;
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += a * *b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut s = C64::ZERO;
                for (a, b) in self.row(i).iter().zip(x) {
                    s += *a * *b;
                }
                s
            })
            .collect()
    }

    /// Quadratic form `x* M x`.
    pub fn quad_form(&self, x: &[C64]) -> C64 {
        vdot(x, &self.matvec(x))
    }

    /// Sesquilinear form `x* M y`.
    pub fn sesqui(&self, x: &[C64], y: &[C64]) -> C64 {
        vdot(x, &self.matvec(y))
    }

    pub fn trace(&self) -> C64 {
        let mut s = C64::ZERO;
        for i in 0..self.rows.min(self.cols) {
            s += self[(i, i)];
        }
        s
    }

    /// Real trace inner product `Re tr(A* B)`.
    pub fn inner(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation `|M_ij - conj(M_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).abs());
            }
        }
        dev
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.im.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Conjugates by an outer factor: returns `L M L*`.
    pub fn congruence(&self, l: &DenseMatrix) -> Self {
        l.matmul(self).matmul(&l.adjoint())
    }

    /// Embeds `self` as a principal block of a larger zero matrix.
    pub fn embed(&self, size: usize, offset: usize) -> Self {
        let mut out = Self::zeros(size, size);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(offset + i, offset + j)] = self[(i, j)];
            }
        }
        out
    }

    pub fn sub_block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, o: &DenseMatrix) -> DenseMatrix {
        let mut out = self.clone();
        out.axpy(1.0, o);
        out
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, o: &DenseMatrix) -> DenseMatrix {
        let mut out = self.clone();
        out.axpy(-1.0, o);
        out
    }
}

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative eigenvalue threshold for rank decisions in `rank_and_kernel`.
    pub rank: f64,
    /// Primal/dual feasibility tolerance of the SDP solver.
    pub feas: f64,
    /// Duality gap tolerance of the SDP solver.
    pub gap: f64,
    /// Iteration cap of the SDP solver.
    pub max_iter: usize,
    /// Relative eigenvalue threshold for kernel dimensions of `c.A`.
    pub kernel: f64,
    /// Absolute orthogonality tolerance, scaled by `1 + |b|`.
    pub orth: f64,
    /// Collinearity / independence threshold for nonconvexity witnesses.
    pub collinear: f64,
    /// Least-squares residual threshold for triviality of `b`.
    pub trivial: f64,
    /// Margin a strict-feasibility witness must exceed.
    pub cert_margin: f64,
    /// Largest Hermitian deviation silently symmetrized on input.
    pub symmetrize: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rank: 1e-8,
            feas: 1e-9,
            gap: 1e-9,
            max_iter: 200,
            kernel: 1e-7,
            orth: 1e-7,
            collinear: 1e-6,
            trivial: 1e-9,
            cert_margin: 1e-7,
            symmetrize: 1e-9,
        }
    }
}

/// Eigen-decomposition `M = V diag(values) V*` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: DenseMatrix,
}

impl HermitianEig {
    pub fn vector(&self, j: usize) -> Vec<C64> {
        self.vectors.col(j)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// Rebuilds `V f(diag) V*` for a spectral function `f`.
    pub fn spectral(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        DenseMatrix::from_fn(n, n, |i, j| {
            let mut s = C64::ZERO;
            for k in 0..n {
                if fv[k] != 0.0 {
                    s += v[(i, k)] * v[(j, k)].conj() * fv[k];
                }
            }
            s
        })
    }
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// Rotations stay real for real symmetric input, so eigenvectors of real
/// matrices are real.
pub fn hermitian_eig(m: &DenseMatrix) -> Result<HermitianEig, LinalgError> {
    let n = m.require_square()?;
    let mut a = DenseMatrix::hermitian(m)?;
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius();
    if n > 1 && scale > 0.0 && scale.is_finite() {
        let target = f64::EPSILON * scale;
        let mut converged = false;
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= target * 1e-2 {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q, scale);
                }
            }
        }
        if !converged {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() > 1e3 * target {
                return Err(LinalgError::NoConvergence);
            }
        }
    } else if !scale.is_finite() {
        return Err(LinalgError::NoConvergence);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEig { values, vectors })
}

fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, scale: f64) {
    let apq = a[(p, q)];
    let mag = apq.abs();
    if mag <= f64::MIN_POSITIVE || mag <= 1e-300 * scale {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if mag < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = C64::ZERO;
        a[(q, p)] = C64::ZERO;
        return;
    }
    // Unit phase making the pivot real; equals the sign for real data.
    let e = if apq.im == 0.0 {
        C64::real(apq.re.signum())
    } else {
        apq / mag
    };
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // Rotation block [[vpp, vpq], [vqp, vqq]] = diag(1, conj(e)) * [[c, s], [-s, c]].
    let ec = e.conj();
    let vpp = C64::real(c);
    let vpq = C64::real(s);
    let vqp = ec * (-s);
    let vqq = ec * c;
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * vpp + akq * vqp;
        a[(k, q)] = akp * vpq + akq * vqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
        a[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
    }
    a[(p, q)] = C64::ZERO;
    a[(q, p)] = C64::ZERO;
    a[(p, p)] = C64::real(a[(p, p)].re);
    a[(q, q)] = C64::real(a[(q, q)].re);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * vpp + vkq * vqp;
        v[(k, q)] = vkp * vpq + vkq * vqq;
    }
}

/// Numerical rank and an orthonormal kernel basis.
#[derive(Debug, Clone)]
pub struct RankKernel {
    pub rank: usize,
    /// Orthonormal basis of the numerical kernel, one vector per entry.
    pub kernel: Vec<Vec<C64>>,
    pub eig: HermitianEig,
}

/// Eigenvalues with `|l| <= tol * max(1, |l_max|)` count as zero.
pub fn rank_and_kernel(m: &DenseMatrix, tol: f64) -> Result<RankKernel, LinalgError> {
    let eig = hermitian_eig(m)?;
    let thresh = tol * eig.max_abs().max(1.0);
    let kernel: Vec<Vec<C64>> = (0..eig.values.len())
        .filter(|&j| eig.values[j].abs() <= thresh)
        .map(|j| eig.vector(j))
        .collect();
    Ok(RankKernel {
        rank: eig.values.len() - kernel.len(),
        kernel,
        eig,
    })
}

/// Spectral Moore-Penrose pseudo-inverse of a Hermitian matrix.
pub fn pseudo_inverse(m: &DenseMatrix, tol: f64) -> Result<DenseMatrix, LinalgError> {
    let eig = hermitian_eig(m)?;
    Ok(pinv_from_eig(&eig, tol))
}

pub fn pinv_from_eig(eig: &HermitianEig, tol: f64) -> DenseMatrix {
    let thresh = tol * eig.max_abs().max(1.0);
    eig.spectral(|l| if l.abs() <= thresh { 0.0 } else { 1.0 / l })
}

/// Hermitian square-root factor `L` with `L* L = A` and its inverse.
#[derive(Debug, Clone)]
pub struct PosDefFactor {
    pub factor: DenseMatrix,
    pub inverse: DenseMatrix,
}

pub fn factor_posdef(a: &DenseMatrix, tol: f64) -> Result<PosDefFactor, LinalgError> {
    let eig = hermitian_eig(a)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min <= tol * eig.max_abs().max(1.0) {
        return Err(LinalgError::NotPositiveDefinite { min_eig: min });
    }
    Ok(PosDefFactor {
        factor: eig.spectral(f64::sqrt),
        inverse: eig.spectral(|l| 1.0 / l.sqrt()),
    })
}

/// Solves the square real system `a x = b` by LU with partial pivoting.
/// `a` is row-major `n x n`.
pub fn solve_real(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let lu = RealLu::new(a, n)?;
    Ok(lu.solve(b))
}

/// LU factorization with partial pivoting of a dense real matrix.
#[derive(Debug, Clone)]
pub struct RealLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl RealLu {
    pub fn new(a: &[f64], n: usize) -> Result<Self, LinalgError> {
        if a.len() != n * n {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected {} entries, found {}",
                n * n,
                a.len()
            )));
        }
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let amax = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for k in 0..n {
            let (piv, pval) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pval > 1e-300 && pval > f64::EPSILON * 1e-6 * amax) {
                return Err(LinalgError::Singular);
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(RealLu { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, complex: bool) -> DenseMatrix {
        let raw = DenseMatrix::from_fn(n, n, |_, _| {
            C64::new(
                rng.gen_range(-1.0..1.0),
                if complex { rng.gen_range(-1.0..1.0) } else { 0.0 },
            )
        });
        DenseMatrix::hermitian(&raw).unwrap()
    }

    fn reconstruct(e: &HermitianEig) -> DenseMatrix {
        e.spectral(|l| l)
    }

    #[test]
    fn complex_arithmetic() {
        let a = C64::new(1.0, 2.0);
        let b = C64::new(-0.5, 3.0);
        let p = a * b;
        assert_eq!(p, C64::new(-6.5, 2.0));
        let q = p / b;
        assert!((q - a).abs() < 1e-15);
        assert_eq!(a.conj(), C64::new(1.0, -2.0));
    }

    #[test]
    fn eig_of_diagonal_is_sorted() {
        let m = DenseMatrix::diag_real(&[3.0, -1.0, 2.0]);
        let e = hermitian_eig(&m).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn eig_two_by_two_complex() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let m = DenseMatrix::from_rows(&[
            vec![C64::real(2.0), C64::I],
            vec![-C64::I, C64::real(2.0)],
        ])
        .unwrap();
        let e = hermitian_eig(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn real_input_gives_real_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_hermitian(&mut rng, 6, false);
        let e = hermitian_eig(&m).unwrap();
        assert_eq!(e.vectors.max_imag_abs(), 0.0);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..9 {
            for complex in [false, true] {
                let m = random_hermitian(&mut rng, n, complex);
                let e = hermitian_eig(&m).unwrap();
                let err = (&reconstruct(&e) - &m).frobenius();
                assert!(err <= 10.0 * f64::EPSILON * n as f64 * m.frobenius().max(1e-300));
                let vtv = e.vectors.adjoint().matmul(&e.vectors);
                assert!((&vtv - &DenseMatrix::identity(n)).frobenius() < 1e-13);
                assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn rank_and_kernel_of_rank_deficient() {
        let x = vec![C64::real(1.0), C64::new(0.0, 1.0), C64::real(2.0)];
        let m = DenseMatrix::from_fn(3, 3, |i, j| x[i] * x[j].conj());
        let rk = rank_and_kernel(&m, 1e-8).unwrap();
        assert_eq!(rk.rank, 1);
        assert_eq!(rk.kernel.len(), 2);
        for k in &rk.kernel {
            assert!(vnorm(&m.matvec(k)) < 1e-12);
        }
    }

    #[test]
    fn rank_of_zero_matrix() {
        let rk = rank_and_kernel(&DenseMatrix::zeros(3, 3), 1e-8).unwrap();
        assert_eq!(rk.rank, 0);
        assert_eq!(rk.kernel.len(), 3);
    }

    #[test]
    fn pinv_of_singular_psd() {
        let q = DenseMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let p = pseudo_inverse(&q, 1e-8).unwrap();
        let expect = DenseMatrix::from_real(2, 2, &[0.25, 0.25, 0.25, 0.25]);
        assert!((&p - &expect).frobenius() < 1e-14);
    }

    #[test]
    fn factor_posdef_roundtrip_and_failure() {
        let a = DenseMatrix::from_real(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let f = factor_posdef(&a, 1e-12).unwrap();
        let ltl = f.factor.adjoint().matmul(&f.factor);
        assert!((&ltl - &a).frobenius() < 1e-13);
        let li = f.factor.matmul(&f.inverse);
        assert!((&li - &DenseMatrix::identity(2)).frobenius() < 1e-13);
        let bad = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            factor_posdef(&bad, 1e-12),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn lu_solve() {
        let a = [0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let x = solve_real(&a, 3, &[5.0, 3.0, 6.0]).unwrap();
        let r: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x[j]).sum::<f64>())
            .collect();
        for (ri, bi) in r.iter().zip([5.0, 3.0, 6.0]) {
            assert!((ri - bi).abs() < 1e-13);
        }
        assert_eq!(solve_real(&[1.0, 2.0, 2.0, 4.0], 2, &[1.0, 1.0]), Err(LinalgError::Singular));
    }

    proptest! {
        #[test]
        fn eig_invariants(seed in 0u64..10_000, n in 1usize..7, complex in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_hermitian(&mut rng, n, complex);
            let e = hermitian_eig(&m).unwrap();
            let recon = (&reconstruct(&e) - &m).frobenius();
            prop_assert!(recon <= 10.0 * f64::EPSILON * n as f64 * m.frobenius().max(1e-300));
            let tr: f64 = e.values.iter().sum();
            prop_assert!((tr - m.trace().re).abs() < 1e-12 * (1.0 + m.frobenius()));
        }

        #[test]
        fn rank_is_scale_invariant(seed in 0u64..10_000, r in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 5;
            let mut m = DenseMatrix::zeros(n, n);
            for _ in 0..r {
                let x: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                m = &m + &DenseMatrix::from_fn(n, n, |i, j| x[i] * x[j].conj());
            }
            for alpha in [1e-6, 1.0, 1e6] {
                prop_assert_eq!(rank_and_kernel(&m.scale(alpha), 1e-8).unwrap().rank, r);
            }
        }

        #[test]
        fn penrose_identities(seed in 0u64..10_000, r in 0usize..5, complex in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 5;
            let mut m = DenseMatrix::zeros(n, n);
            for _ in 0..r {
                let x: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), if complex { rng.gen_range(-1.0..1.0) } else { 0.0 })).collect();
                let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                m.axpy(s, &DenseMatrix::from_fn(n, n, |i, j| x[i] * x[j].conj()));
            }
            let p = pseudo_inverse(&m, 1e-8).unwrap();
            let scale = 1.0 + m.frobenius() + p.frobenius();
            prop_assert!((&m.matmul(&p).matmul(&m) - &m).frobenius() < 1e-10 * scale * scale);
            prop_assert!((&p.matmul(&m).matmul(&p) - &p).frobenius() < 1e-10 * scale * scale);
            let mp = m.matmul(&p);
            prop_assert!((&mp - &mp.adjoint()).frobenius() < 1e-10 * scale);
            let pm = p.matmul(&m);
            prop_assert!((&pm - &pm.adjoint()).frobenius() < 1e-10 * scale);
        }
    }
}
