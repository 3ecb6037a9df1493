//! Quadratic maps `f_k(x) = x* A_k x + 2 Re(b_k* x)` and their lifts.

use crate::linalg::{
    factor_posdef, pseudo_inverse, rnormalize, vdot, vnorm, DenseMatrix, FieldTag, LinalgError, ToleranceConfig, C64,
};
use crate::sdpcore::{strict_feasibility, LmiFamily, SdpStatus, SolverOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("invalid map: {0}")]
    Invalid(String),
    #[error("A[{index}] is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { index: usize, deviation: f64 },
    #[error("real map has a complex entry in {0}")]
    ComplexEntryInRealMap(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("c+ . A is not positive definite")]
    NotDefinite,
    #[error("JSON error: {0}")]
    Json(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("SDP solver failed with status {0:?}")]
    Solver(SdpStatus),
}

/// `f : F^n -> R^m` with Hermitian `A_k` and vectors `b_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticMap {
    field: FieldTag,
    n: usize,
    m: usize,
    a: Vec<DenseMatrix>,
    b: Vec<Vec<C64>>,
}

/// Result of the least-squares test for `b_k = A_k x0`.
#[derive(Debug, Clone)]
pub struct BTriviality {
    pub trivial: bool,
    /// Least-squares solution of the stacked system `A_k x = b_k`.
    pub witness: Vec<C64>,
    pub residual: f64,
}

/// Coordinates in which `c+ . A = I` and `c+ . b = 0`.
#[derive(Debug, Clone)]
pub struct CutTransform {
    pub c_plus: Vec<f64>,
    /// Center `x0 = -(c+ . A)^-1 (c+ . b)`.
    pub center: Vec<C64>,
    /// Hermitian square root of `c+ . A`.
    pub factor: DenseMatrix,
    pub factor_inv: DenseMatrix,
    /// `f(x0)`, subtracted from images.
    pub image_shift: Vec<f64>,
}

impl CutTransform {
    /// Maps an original point `x` to normalized coordinates `L (x - x0)`.
    pub fn to_normalized_x(&self, x: &[C64]) -> Vec<C64> {
        let d: Vec<C64> = x.iter().zip(&self.center).map(|(a, b)| *a - *b).collect();
        self.factor.matvec(&d)
    }

    pub fn from_normalized_x(&self, x: &[C64]) -> Vec<C64> {
        let mut v = self.factor_inv.matvec(x);
        for (vi, ci) in v.iter_mut().zip(&self.center) {
            *vi += *ci;
        }
        v
    }

    pub fn to_normalized_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.image_shift).map(|(a, b)| a - b).collect()
    }

    pub fn from_normalized_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.image_shift).map(|(a, b)| a + b).collect()
    }
}

impl QuadraticMap {
    /// Validates dimensions and Hermiticity, symmetrizing deviations up to
    /// `symmetrize_tol`.
    pub fn new(
        field: FieldTag,
        a: Vec<DenseMatrix>,
        b: Vec<Vec<C64>>,
        symmetrize_tol: f64,
    ) -> Result<Self, MapError> {
        let m = a.len();
        if m == 0 {
            return Err(MapError::Invalid("map has no components".into()));
        }
        if b.len() != m {
            return Err(MapError::DimensionMismatch(format!("{m} matrices but {} vectors", b.len())));
        }
        let n = a[0].rows();
        if n == 0 {
            return Err(MapError::Invalid("n must be positive".into()));
        }
        let mut sym = Vec::with_capacity(m);
        for (k, ak) in a.iter().enumerate() {
            if ak.rows() != n || ak.cols() != n {
                return Err(MapError::DimensionMismatch(format!(
                    "A[{k}] is {}x{}, expected {n}x{n}",
                    ak.rows(),
                    ak.cols()
                )));
            }
            if !ak.is_finite() {
                return Err(MapError::Invalid(format!("A[{k}] has a non-finite entry")));
            }
            if field == FieldTag::Real && ak.max_imag_abs() > 0.0 {
                return Err(MapError::ComplexEntryInRealMap(format!("A[{k}]")));
            }
            let dev = ak.hermitian_deviation();
            if dev > symmetrize_tol {
                return Err(MapError::NotHermitian { index: k, deviation: dev });
            }
            sym.push(DenseMatrix::hermitian(ak)?);
        }
        for (k, bk) in b.iter().enumerate() {
            if bk.len() != n {
                return Err(MapError::DimensionMismatch(format!("b[{k}] has {} entries, expected {n}", bk.len())));
            }
            if bk.iter().any(|x| !x.is_finite()) {
                return Err(MapError::Invalid(format!("b[{k}] has a non-finite entry")));
            }
            if field == FieldTag::Real && bk.iter().any(|x| x.im != 0.0) {
                return Err(MapError::ComplexEntryInRealMap(format!("b[{k}]")));
            }
        }
        Ok(QuadraticMap { field, n, m, a: sym, b })
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a(&self) -> &[DenseMatrix] {
        &self.a
    }

    pub fn b(&self) -> &[Vec<C64>] {
        &self.b
    }

    pub fn is_homogeneous(&self) -> bool {
        self.b.iter().all(|bk| bk.iter().all(|x| x.re == 0.0 && x.im == 0.0))
    }

    pub fn b_norm(&self) -> f64 {
        self.b.iter().map(|bk| vnorm(bk).powi(2)).sum::<f64>().sqrt()
    }

    /// Evaluates `f(x)`; the imaginary residue of each component is checked.
    pub fn evaluate(&self, x: &[C64]) -> Result<Vec<f64>, MapError> {
        if x.len() != self.n {
            return Err(MapError::DimensionMismatch(format!("x has {} entries, expected {}", x.len(), self.n)));
        }
        let mut y = Vec::with_capacity(self.m);
        for k in 0..self.m {
            let q = self.a[k].quad_form(x);
            let scale = 1.0 + vnorm(x).powi(2) * self.a[k].frobenius();
            if q.im.abs() > 1e-12 * scale {
                return Err(MapError::Invalid(format!("component {k} has imaginary residue {:.3e}", q.im)));
            }
            y.push(q.re + 2.0 * vdot(&self.b[k], x).re);
        }
        Ok(y)
    }

    /// `sum_k c_k A_k`.
    pub fn combine_a(&self, c: &[f64]) -> DenseMatrix {
        assert_eq!(c.len(), self.m);
        let mut out = DenseMatrix::zeros(self.n, self.n);
        for (ck, ak) in c.iter().zip(&self.a) {
            if *ck != 0.0 {
                out.axpy(*ck, ak);
            }
        }
        out
    }

    /// `sum_k c_k b_k`.
    pub fn combine_b(&self, c: &[f64]) -> Vec<C64> {
        assert_eq!(c.len(), self.m);
        let mut out = vec![C64::ZERO; self.n];
        for (ck, bk) in c.iter().zip(&self.b) {
            for (o, x) in out.iter_mut().zip(bk) {
                *o += *x * *ck;
            }
        }
        out
    }

    /// `[[c.A, c.b], [(c.b)*, corner]]`.
    pub fn bordered(&self, c: &[f64], corner: f64) -> DenseMatrix {
        border(&self.combine_a(c), &self.combine_b(c), corner)
    }

    /// Lifted matrices `H_k = [[A_k, b_k], [b_k*, 0]]`.
    pub fn lift(&self) -> Vec<DenseMatrix> {
        (0..self.m).map(|k| border(&self.a[k], &self.b[k], 0.0)).collect()
    }

    /// Decides whether `b_k = A_k x0` for one common `x0`.
    pub fn is_b_trivial(&self, tol: f64) -> Result<BTriviality, MapError> {
        let n = self.n;
        let mut normal = DenseMatrix::zeros(n, n);
        let mut rhs = vec![C64::ZERO; n];
        for (ak, bk) in self.a.iter().zip(&self.b) {
            normal.axpy(1.0, &ak.matmul(ak));
            let t = ak.matvec(bk);
            for (r, v) in rhs.iter_mut().zip(t) {
                *r += v;
            }
        }
        let pinv = pseudo_inverse(&DenseMatrix::hermitian(&normal)?, 1e-12)?;
        let witness = pinv.matvec(&rhs);
        let mut res2 = 0.0;
        for (ak, bk) in self.a.iter().zip(&self.b) {
            let ax = ak.matvec(&witness);
            res2 += ax.iter().zip(bk).map(|(p, q)| (*p - *q).norm_sqr()).sum::<f64>();
        }
        let residual = res2.sqrt();
        Ok(BTriviality {
            trivial: residual <= tol * (1.0 + self.b_norm()),
            witness,
            residual,
        })
    }

    /// Unit `c+` maximizing the smallest eigenvalue of `c.A` over `|c| <= 1`,
    /// or `None` when no combination is positive definite.
    pub fn find_definite_direction(&self, tol: &ToleranceConfig) -> Result<Option<Vec<f64>>, MapError> {
        let family = LmiFamily {
            f0: DenseMatrix::zeros(self.n, self.n),
            fi: self.a.clone(),
        };
        match strict_feasibility(&family, tol.cert_margin, &SolverOptions::from(tol)) {
            Ok(Some(w)) => Ok(rnormalize(&w.u)),
            Ok(None) => Ok(None),
            Err(SdpStatus::Infeasible) | Err(SdpStatus::Unbounded) => Ok(None),
            Err(st) => Err(MapError::Solver(st)),
        }
    }

    /// Changes coordinates so that `c+ . A = I` and `c+ . b = 0`.
    pub fn normalize_for_cut(&self, c_plus: &[f64], tol: &ToleranceConfig) -> Result<(QuadraticMap, CutTransform), MapError> {
        if c_plus.len() != self.m {
            return Err(MapError::DimensionMismatch(format!("c+ has {} entries, expected {}", c_plus.len(), self.m)));
        }
        let a_plus = self.combine_a(c_plus);
        let b_plus = self.combine_b(c_plus);
        let fac = factor_posdef(&a_plus, tol.rank).map_err(|e| match e {
            LinalgError::NotPositiveDefinite { .. } => MapError::NotDefinite,
            other => MapError::Linalg(other),
        })?;
        let li = &fac.inverse;
        let center: Vec<C64> = li.matvec(&li.matvec(&b_plus)).into_iter().map(|v| -v).collect();
        let image_shift = self.evaluate(&center)?;
        let mut a = Vec::with_capacity(self.m);
        let mut b = Vec::with_capacity(self.m);
        for k in 0..self.m {
            a.push(DenseMatrix::hermitian(&self.a[k].congruence(li))?);
            let mut t = self.a[k].matvec(&center);
            for (ti, bi) in t.iter_mut().zip(&self.b[k]) {
                *ti += *bi;
            }
            b.push(li.matvec(&t));
        }
        let map = QuadraticMap {
            field: self.field,
            n: self.n,
            m: self.m,
            a,
            b,
        };
        Ok((
            map,
            CutTransform {
                c_plus: c_plus.to_vec(),
                center,
                factor: fac.factor,
                factor_inv: fac.inverse,
                image_shift,
            },
        ))
    }

    /// Real map on `R^2n` with variable ordering `(Re x, Im x)`.
    pub fn real_embedding(&self) -> QuadraticMap {
        let n = self.n;
        let a = self
            .a
            .iter()
            .map(|ak| {
                DenseMatrix::from_fn(2 * n, 2 * n, |i, j| {
                    let (bi, ii) = (i / n, i % n);
                    let (bj, jj) = (j / n, j % n);
                    let v = ak[(ii, jj)];
                    C64::real(match (bi, bj) {
                        (0, 0) | (1, 1) => v.re,
                        (0, 1) => -v.im,
                        _ => v.im,
                    })
                })
            })
            .collect();
        let b = self
            .b
            .iter()
            .map(|bk| {
                bk.iter()
                    .map(|x| C64::real(x.re))
                    .chain(bk.iter().map(|x| C64::real(x.im)))
                    .collect()
            })
            .collect();
        QuadraticMap {
            field: FieldTag::Real,
            n: 2 * n,
            m: self.m,
            a,
            b,
        }
    }

    pub fn from_json_str(s: &str, tol: &ToleranceConfig) -> Result<Self, MapError> {
        let file: MapFile = serde_json::from_str(s).map_err(|e| MapError::Json(e.to_string()))?;
        file.into_map(tol)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&MapFile::from_map(self)).expect("map serializes")
    }

    /// Hex SHA-256 of the canonical JSON rendering.
    pub fn fingerprint(&self) -> String {
        let canon = serde_json::to_string(&MapFile::from_map(self)).expect("map serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn border(a: &DenseMatrix, b: &[C64], corner: f64) -> DenseMatrix {
    let n = a.rows();
    DenseMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => a[(i, j)],
        (true, false) => b[i],
        (false, true) => b[j].conj(),
        (false, false) => C64::real(corner),
    })
}

/// One JSON number, decimal string, or `[re, im]` pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonScalar {
    Number(f64),
    Text(String),
    Pair([JsonPart; 2]),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonPart {
    Number(f64),
    Text(String),
}

/// Parses a decimal or a rational `p/q`, as accepted in map files.
pub fn parse_real(s: &str) -> Result<f64, MapError> {
    parse_decimal(s, "value")
}

fn parse_decimal(s: &str, at: &str) -> Result<f64, MapError> {
    let t = s.trim();
    let parsed = match t.split_once('/') {
        Some((p, q)) => match (p.trim().parse::<f64>(), q.trim().parse::<f64>()) {
            (Ok(p), Ok(q)) if q != 0.0 => Ok(p / q),
            _ => Err(()),
        },
        None => t.parse::<f64>().map_err(|_| ()),
    };
    match parsed {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(MapError::Json(format!("{at}: cannot parse number {s:?}"))),
    }
}

impl JsonPart {
    fn value(&self, at: &str) -> Result<f64, MapError> {
        match self {
            JsonPart::Number(v) => Ok(*v),
            JsonPart::Text(s) => parse_decimal(s, at),
        }
    }
}

impl JsonScalar {
    fn value(&self, at: &str) -> Result<C64, MapError> {
        match self {
            JsonScalar::Number(v) => Ok(C64::real(*v)),
            JsonScalar::Text(s) => Ok(C64::real(parse_decimal(s, at)?)),
            JsonScalar::Pair([re, im]) => Ok(C64::new(re.value(at)?, im.value(at)?)),
        }
    }

    fn from_value(v: C64, field: FieldTag) -> Self {
        match field {
            FieldTag::Real => JsonScalar::Number(v.re),
            FieldTag::Complex => JsonScalar::Pair([JsonPart::Number(v.re), JsonPart::Number(v.im)]),
        }
    }
}

/// On-disk schema of a quadratic map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub field: FieldTag,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<JsonScalar>>>,
    pub b: Vec<Vec<JsonScalar>>,
}

impl MapFile {
    /// The matrices `A_k` as written, before symmetrization.
    pub fn raw_matrices(&self) -> Result<Vec<DenseMatrix>, MapError> {
        let (n, m) = (self.n, self.m);
        if self.a.len() != m {
            return Err(MapError::DimensionMismatch(format!("field \"A\" has {} matrices, expected m = {m}", self.a.len())));
        }
        let mut a = Vec::with_capacity(m);
        for (k, rows) in self.a.iter().enumerate() {
            if rows.len() != n {
                return Err(MapError::DimensionMismatch(format!("A[{k}] has {} rows, expected n = {n}", rows.len())));
            }
            let mut mat = DenseMatrix::zeros(n, n);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(MapError::DimensionMismatch(format!(
                        "A[{k}] row {i} has {} entries, expected n = {n}",
                        row.len()
                    )));
                }
                for (j, v) in row.iter().enumerate() {
                    mat[(i, j)] = v.value(&format!("A[{k}][{i}][{j}]"))?;
                }
            }
            a.push(mat);
        }
        Ok(a)
    }

    /// Largest entrywise deviation from Hermiticity of each `A_k` as written.
    pub fn hermitian_deviations(&self) -> Result<Vec<f64>, MapError> {
        Ok(self.raw_matrices()?.iter().map(|a| a.hermitian_deviation()).collect())
    }

    pub fn into_map(self, tol: &ToleranceConfig) -> Result<QuadraticMap, MapError> {
        let (n, m) = (self.n, self.m);
        let a = self.raw_matrices()?;
        if self.b.len() != m {
            return Err(MapError::DimensionMismatch(format!("field \"b\" has {} vectors, expected m = {m}", self.b.len())));
        }
        let mut b = Vec::with_capacity(m);
        for (k, vec) in self.b.iter().enumerate() {
            if vec.len() != n {
                return Err(MapError::DimensionMismatch(format!("b[{k}] has {} entries, expected n = {n}", vec.len())));
            }
            let v: Result<Vec<C64>, MapError> = vec.iter().enumerate().map(|(i, x)| x.value(&format!("b[{k}][{i}]"))).collect();
            b.push(v?);
        }
        QuadraticMap::new(self.field, a, b, tol.symmetrize)
    }

    pub fn from_map(map: &QuadraticMap) -> Self {
        let f = map.field;
        MapFile {
            field: f,
            n: map.n,
            m: map.m,
            a: map
                .a
                .iter()
                .map(|ak| (0..map.n).map(|i| ak.row(i).iter().map(|v| JsonScalar::from_value(*v, f)).collect()).collect())
                .collect(),
            b: map.b.iter().map(|bk| bk.iter().map(|v| JsonScalar::from_value(*v, f)).collect()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(v: f64) -> C64 {
        C64::real(v)
    }

    fn small_real() -> QuadraticMap {
        let a1 = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let a2 = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        QuadraticMap::new(FieldTag::Real, vec![a1, a2], vec![vec![r(0.0), r(0.0)], vec![r(1.0), r(0.0)]], 1e-9).unwrap()
    }

    fn random_complex(rng: &mut ChaCha8Rng, n: usize, m: usize) -> QuadraticMap {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..m {
            let raw = DenseMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            a.push(DenseMatrix::hermitian(&raw).unwrap());
            b.push((0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
        }
        QuadraticMap::new(FieldTag::Complex, a, b, 1e-9).unwrap()
    }

    #[test]
    fn evaluate_small() {
        let f = small_real();
        let y = f.evaluate(&[r(1.0), r(2.0)]).unwrap();
        assert_eq!(y, vec![5.0, 4.0 + 2.0]);
    }

    #[test]
    fn lift_matches_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_complex(&mut rng, 3, 4);
        let h = f.lift();
        let x: Vec<C64> = (0..3).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mut xt = x.clone();
        xt.push(C64::ONE);
        let y = f.evaluate(&x).unwrap();
        for k in 0..4 {
            assert!((h[k].quad_form(&xt).re - y[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian_and_symmetrizes_small_noise() {
        let bad = DenseMatrix::from_real(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let err = QuadraticMap::new(FieldTag::Real, vec![bad], vec![vec![r(0.0); 2]], 1e-9).unwrap_err();
        assert!(matches!(err, MapError::NotHermitian { index: 0, .. }));
        let noisy = DenseMatrix::from_real(2, 2, &[1.0, 0.5 + 1e-12, 0.5, 1.0]);
        let f = QuadraticMap::new(FieldTag::Real, vec![noisy], vec![vec![r(0.0); 2]], 1e-9).unwrap();
        assert_eq!(f.a()[0].hermitian_deviation(), 0.0);
    }

    #[test]
    fn trivial_b_detection() {
        let f = small_real();
        assert!(!f.is_b_trivial(1e-9).unwrap().trivial);
        let a1 = DenseMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let a2 = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let x0 = [r(1.0), r(-2.0)];
        let b = vec![a1.matvec(&x0), a2.matvec(&x0)];
        let g = QuadraticMap::new(FieldTag::Real, vec![a1, a2], b, 1e-9).unwrap();
        let t = g.is_b_trivial(1e-9).unwrap();
        assert!(t.trivial);
        assert!((t.witness[0].re - 1.0).abs() < 1e-10 && (t.witness[1].re + 2.0).abs() < 1e-10);
    }

    #[test]
    fn definite_direction() {
        let f = small_real();
        let c = f.find_definite_direction(&ToleranceConfig::default()).unwrap().unwrap();
        assert!((c[0] - 1.0).abs() < 1e-6 && c[1].abs() < 1e-6);
        // diag(1,-1) and offdiag: every combination is indefinite.
        let a1 = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let a2 = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let g = QuadraticMap::new(FieldTag::Real, vec![a1, a2], vec![vec![r(0.0); 2]; 2], 1e-9).unwrap();
        assert!(g.find_definite_direction(&ToleranceConfig::default()).unwrap().is_none());
    }

    #[test]
    fn normalization_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut f = random_complex(&mut rng, 3, 3);
        // Make the third component definite.
        let mut a = f.a().to_vec();
        a[2] = &a[2].scale(0.1) + &DenseMatrix::identity(3);
        f = QuadraticMap::new(FieldTag::Complex, a, f.b().to_vec(), 1e-9).unwrap();
        let cp = [0.0, 0.0, 1.0];
        let (g, t) = f.normalize_for_cut(&cp, &ToleranceConfig::default()).unwrap();
        assert!((&g.combine_a(&cp) - &DenseMatrix::identity(3)).frobenius() < 1e-12);
        assert!(vnorm(&g.combine_b(&cp)) < 1e-12);
        for _ in 0..20 {
            let x: Vec<C64> = (0..3).map(|_| C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            let y = f.evaluate(&x).unwrap();
            let y2 = t.from_normalized_y(&g.evaluate(&t.to_normalized_x(&x)).unwrap());
            for (p, q) in y.iter().zip(&y2) {
                assert!((p - q).abs() < 1e-10);
            }
        }
        let bad = f.normalize_for_cut(&[1.0, 0.0, 0.0], &ToleranceConfig::default());
        if hermitian_eig(&f.a()[0]).unwrap().values[0] <= 0.0 {
            assert_eq!(bad.unwrap_err(), MapError::NotDefinite);
        }
    }

    #[test]
    fn real_embedding_preserves_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_complex(&mut rng, 3, 2);
        let g = f.real_embedding();
        assert_eq!(g.n(), 6);
        for _ in 0..10 {
            let x: Vec<C64> = (0..3).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let xr: Vec<C64> = x.iter().map(|v| r(v.re)).chain(x.iter().map(|v| r(v.im))).collect();
            let y1 = f.evaluate(&x).unwrap();
            let y2 = g.evaluate(&xr).unwrap();
            for (p, q) in y1.iter().zip(&y2) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn json_roundtrip_and_diagnostics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_complex(&mut rng, 2, 2);
        let tol = ToleranceConfig::default();
        let g = QuadraticMap::from_json_str(&f.to_json_string(), &tol).unwrap();
        assert_eq!(f, g);
        assert_eq!(f.fingerprint(), g.fingerprint());
        let txt = r#"{"field":"real","n":2,"m":1,"A":[[["1","1/2"],["0.5",2]]],"b":[[0,"-1"]]}"#;
        let h = QuadraticMap::from_json_str(txt, &tol).unwrap();
        assert_eq!(h.a()[0][(0, 1)], r(0.5));
        let short = r#"{"field":"real","n":2,"m":1,"A":[[[1,0]]],"b":[[0,0]]}"#;
        let err = QuadraticMap::from_json_str(short, &tol).unwrap_err();
        assert!(err.to_string().contains("A[0] has 1 rows"));
        let complex_in_real = r#"{"field":"real","n":1,"m":1,"A":[[[[1,1]]]],"b":[[0]]}"#;
        assert!(matches!(
            QuadraticMap::from_json_str(complex_in_real, &tol).unwrap_err(),
            MapError::ComplexEntryInRealMap(_)
        ));
    }
}
