//! Stochastic detection and certification of boundary non-convexities.
//!
//! Inhomogeneous maps are certified through a face `{c.y = min}` whose
//! pencil `c.A` has a one-dimensional kernel orthogonal to `c.b`; homogeneous
//! maps through a two-dimensional kernel.

use crate::convexcut::{fix_phase, CutError, CutGeometry};
use crate::linalg::{
    hermitian_eig, pinv_from_eig, rdot, rnorm, rnormalize, vdot, vnorm, DenseMatrix, FieldTag, LinalgError,
    ToleranceConfig, C64,
};
use crate::oracles::get_c_from_d;
use crate::quadmap::{MapError, QuadraticMap};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonconvexityError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("b is trivial; use the homogeneous test")]
    HomogeneousMap,
    #[error("b is non-trivial; use the inhomogeneous test")]
    InhomogeneousMap,
    #[error("no positive definite combination of the A_k exists")]
    NotDefinite,
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<CutError> for NonconvexityError {
    fn from(e: CutError) -> Self {
        match e {
            CutError::NotDefinite => NonconvexityError::NotDefinite,
            CutError::Map(m) => NonconvexityError::Map(m),
            CutError::Linalg(l) => NonconvexityError::Linalg(l),
            other => NonconvexityError::InvalidInput(other.to_string()),
        }
    }
}

/// Largest angle (radians) between an input direction and its refined point of `C-`.
pub const SNAP_ANGLE: f64 = 1e-2;

/// A unit direction of `C-` with its boundary projection and kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMinusPoint {
    /// Sampling iteration that produced the point.
    pub index: u64,
    /// Unit direction orthogonal to `c+`.
    pub c: Vec<f64>,
    /// Boundary projection `c - c+ lambda_min(c.A)`.
    pub p: Vec<f64>,
    /// Unit kernel vectors of `p.A` in original coordinates.
    pub kernel: Vec<Vec<C64>>,
    pub kernel_dim: usize,
    /// `|x0*(c.b)|` in normalized coordinates (inhomogeneous case) or the
    /// relative eigenvalue gap (homogeneous case).
    pub residual: f64,
    /// Flat-edge offset `z(c)` for inhomogeneous maps.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    Inhomogeneous,
    Homogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonconvexityCertificate {
    pub kind: CertificateKind,
    /// Unit normal of the non-convex face.
    pub c: Vec<f64>,
    /// Particular solution of `(c.A) x = -c.b` (inhomogeneous kind).
    pub x_b: Option<Vec<C64>>,
    /// Kernel basis of `c.A`.
    pub kernel: Vec<Vec<C64>>,
    /// `u_k = x0* A_k x0`.
    pub u: Vec<f64>,
    /// `v_k = (x_b* A_k + b_k*) x0` or, homogeneous, `x1* A_k x1`.
    pub v: Vec<C64>,
    /// `w_k = x0* A_k x1` (homogeneous kind).
    pub w: Option<Vec<C64>>,
    /// Sine of principal angle (inhomogeneous) or smallest singular value
    /// of the normalized witnesses (homogeneous).
    pub defect: f64,
}

impl NonconvexityCertificate {
    /// Recomputes every condition from the map and the stored `c`.
    pub fn verify(&self, map: &QuadraticMap, tol: &ToleranceConfig) -> bool {
        let fresh = match self.kind {
            CertificateKind::Inhomogeneous => verify_inhomogeneous(map, &self.c, tol),
            CertificateKind::Homogeneous => verify_homogeneous(map, &self.c, tol),
        };
        matches!(fresh, Ok(Some(_)))
    }
}

struct Pencil {
    eig: crate::linalg::HermitianEig,
    kernel_dim: usize,
    psd: bool,
    scale: f64,
}

fn pencil(map: &QuadraticMap, c: &[f64], tol: &ToleranceConfig) -> Result<Pencil, LinalgError> {
    let eig = hermitian_eig(&map.combine_a(c))?;
    let scale = eig.max_abs();
    let thr = tol.kernel * scale.max(f64::MIN_POSITIVE);
    let kernel_dim = eig.values.iter().filter(|l| l.abs() <= thr).count();
    let psd = eig.values[0] >= -thr;
    Ok(Pencil {
        eig,
        kernel_dim,
        psd,
        scale,
    })
}

fn check_dims(map: &QuadraticMap) -> Result<(), NonconvexityError> {
    if map.m() < 3 || map.n() < 2 {
        return Err(NonconvexityError::InvalidInput(format!(
            "requires m >= 3 and n >= 2, got m = {}, n = {}",
            map.m(),
            map.n()
        )));
    }
    Ok(())
}

fn unit_c(map: &QuadraticMap, c: &[f64]) -> Result<Vec<f64>, NonconvexityError> {
    if c.len() != map.m() {
        return Err(NonconvexityError::InvalidInput(format!("c has {} entries, expected {}", c.len(), map.m())));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(NonconvexityError::InvalidInput("c has a non-finite entry".into()));
    }
    rnormalize(c).ok_or_else(|| NonconvexityError::InvalidInput("c is zero".into()))
}

/// Sine of the angle between two real vectors; zero when either vanishes.
pub fn collinearity_defect(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (rnorm(a), rnorm(b));
    if !(na > 0.0 && nb > 0.0) {
        return 0.0;
    }
    let cos = (rdot(a, b) / (na * nb)).clamp(-1.0, 1.0);
    (1.0 - cos * cos).max(0.0).sqrt()
}

/// Smallest singular value of the stacked unit-normalized vectors.
pub fn independence_sigma(vs: &[Vec<f64>]) -> f64 {
    let mut units = Vec::with_capacity(vs.len());
    for v in vs {
        match rnormalize(v) {
            Some(u) if rnorm(v) > 1e-300 => units.push(u),
            _ => return 0.0,
        }
    }
    let k = units.len();
    let gram = DenseMatrix::from_fn(k, k, |i, j| C64::real(rdot(&units[i], &units[j])));
    match hermitian_eig(&gram) {
        Ok(e) => e.values[0].max(0.0).sqrt(),
        Err(_) => 0.0,
    }
}

/// Strict check of the inhomogeneous conditions at `c`.
fn verify_inhomogeneous(
    map: &QuadraticMap,
    c: &[f64],
    tol: &ToleranceConfig,
) -> Result<Option<NonconvexityCertificate>, NonconvexityError> {
    let c = unit_c(map, c)?;
    let pen = pencil(map, &c, tol)?;
    if !pen.psd || pen.kernel_dim != 1 {
        return Ok(None);
    }
    let thr = tol.kernel * pen.scale.max(f64::MIN_POSITIVE);
    let pinv = pinv_from_eig(&pen.eig, thr);
    let cb = map.combine_b(&c);
    let x_b: Vec<C64> = pinv.matvec(&cb).into_iter().map(|v| -v).collect();
    let res: Vec<C64> = map
        .combine_a(&c)
        .matvec(&x_b)
        .iter()
        .zip(&cb)
        .map(|(a, b)| *a + *b)
        .collect();
    if vnorm(&res) > tol.orth * (1.0 + map.b_norm()) {
        return Ok(None);
    }
    let mut x0 = pen.eig.vector(0);
    fix_phase(&mut x0);
    let u: Vec<f64> = map.a().iter().map(|ak| ak.quad_form(&x0).re).collect();
    let v: Vec<C64> = map
        .a()
        .iter()
        .zip(map.b())
        .map(|(ak, bk)| ak.sesqui(&x_b, &x0) + vdot(bk, &x0))
        .collect();
    let vr: Vec<f64> = v.iter().map(|x| x.re).collect();
    let defect = match map.field() {
        FieldTag::Real => collinearity_defect(&u, &vr),
        FieldTag::Complex => {
            let vi: Vec<f64> = v.iter().map(|x| x.im).collect();
            let mut d: f64 = 0.0;
            let vecs = [u.clone(), vr, vi];
            let live: Vec<&Vec<f64>> = vecs.iter().filter(|x| rnorm(x) > 1e-14 * (1.0 + rnorm(&vecs[0]))).collect();
            for i in 0..live.len() {
                for j in i + 1..live.len() {
                    d = d.max(collinearity_defect(live[i], live[j]));
                }
            }
            d
        }
    };
    if defect < tol.collinear {
        return Ok(None);
    }
    Ok(Some(NonconvexityCertificate {
        kind: CertificateKind::Inhomogeneous,
        c,
        x_b: Some(x_b),
        kernel: vec![x0],
        u,
        v,
        w: None,
        defect,
    }))
}

/// Strict check of the homogeneous conditions at `c`.
fn verify_homogeneous(
    map: &QuadraticMap,
    c: &[f64],
    tol: &ToleranceConfig,
) -> Result<Option<NonconvexityCertificate>, NonconvexityError> {
    let c = unit_c(map, c)?;
    let pen = pencil(map, &c, tol)?;
    if !pen.psd || pen.kernel_dim != 2 {
        return Ok(None);
    }
    let mut x0 = pen.eig.vector(0);
    let mut x1 = pen.eig.vector(1);
    fix_phase(&mut x0);
    fix_phase(&mut x1);
    let u: Vec<f64> = map.a().iter().map(|ak| ak.quad_form(&x0).re).collect();
    let v: Vec<f64> = map.a().iter().map(|ak| ak.quad_form(&x1).re).collect();
    let w: Vec<C64> = map.a().iter().map(|ak| ak.sesqui(&x0, &x1)).collect();
    let mut vecs = vec![u.clone(), v.clone(), w.iter().map(|x| x.re).collect::<Vec<f64>>()];
    if map.field() == FieldTag::Complex {
        vecs.push(w.iter().map(|x| x.im).collect());
    }
    let defect = if vecs.len() > map.m() { 0.0 } else { independence_sigma(&vecs) };
    if defect < tol.collinear {
        return Ok(None);
    }
    Ok(Some(NonconvexityCertificate {
        kind: CertificateKind::Homogeneous,
        c,
        x_b: None,
        kernel: vec![x0, x1],
        u,
        v: v.into_iter().map(C64::real).collect(),
        w: Some(w),
        defect,
    }))
}

/// Tests the face with normal `c` for a non-convexity.
///
/// A direction that only approximately satisfies the kernel and
/// orthogonality conditions is first refined onto `C-` (for a definite map);
/// the certificate then carries the refined normal.
pub fn check_boundary_nonconvexity(
    map: &QuadraticMap,
    c: &[f64],
    tol: &ToleranceConfig,
) -> Result<Option<NonconvexityCertificate>, NonconvexityError> {
    check_dims(map)?;
    if map.is_b_trivial(tol.trivial)?.trivial {
        return Err(NonconvexityError::HomogeneousMap);
    }
    if let Some(cert) = verify_inhomogeneous(map, c, tol)? {
        return Ok(Some(cert));
    }
    let c_plus = match map.find_definite_direction(tol)? {
        Some(cp) => cp,
        None => return Ok(None),
    };
    let geo = CutGeometry::new(map, &c_plus, tol)?;
    let cu = unit_c(map, c)?;
    let st = match geo.state(&cu) {
        Ok(st) => st,
        Err(_) => return Ok(None),
    };
    // The direction must already be close to the boundary of K.
    if let Some(pu) = rnormalize(&st.p) {
        if rdot(&pu, &cu) < SNAP_ANGLE.cos() {
            return Ok(None);
        }
    } else {
        return Ok(None);
    }
    let refined = match geo.polish(&st.c, 50, 1e-12 * geo.b_scale()) {
        Ok(r) => r,
        Err(_) => return Ok(None),
    };
    let pu = match rnormalize(&refined.p) {
        Some(p) => p,
        None => return Ok(None),
    };
    if rdot(&pu, &cu) < SNAP_ANGLE.cos() {
        return Ok(None);
    }
    verify_inhomogeneous(map, &pu, tol)
}

/// Tests a homogeneous map at `c` for a two-dimensional kernel with
/// independent witnesses.
pub fn check_homogeneous_nonconvexity(
    map: &QuadraticMap,
    c: &[f64],
    tol: &ToleranceConfig,
) -> Result<Option<NonconvexityCertificate>, NonconvexityError> {
    check_dims(map)?;
    if !map.is_b_trivial(tol.trivial)?.trivial {
        return Err(NonconvexityError::InhomogeneousMap);
    }
    verify_homogeneous(map, c, tol)
}

/// Cosine between an SDP normal and its refined point of `C-` above which
/// the sample counts as a hit.
pub const HIT_COS: f64 = 0.999;

/// Draws directions, solves for supporting normals and refines those lying
/// on the singular part of the boundary of `K`.
#[derive(Debug, Clone)]
pub struct CMinusSampler<'a> {
    map: &'a QuadraticMap,
    geo: Option<CutGeometry>,
    base: Vec<f64>,
    seed: u64,
    homogeneous: bool,
    tol: ToleranceConfig,
}

impl<'a> CMinusSampler<'a> {
    /// Uses the definite direction maximizing `lambda_min(c.A)` when one exists.
    pub fn new(map: &'a QuadraticMap, base: Option<Vec<f64>>, seed: u64, tol: &ToleranceConfig) -> Result<Self, NonconvexityError> {
        let geo = match map.find_definite_direction(tol)? {
            Some(cp) => Some(CutGeometry::new(map, &cp, tol)?),
            None => None,
        };
        Self::build(map, geo, base, seed, tol)
    }

    pub fn with_geometry(
        map: &'a QuadraticMap,
        geo: CutGeometry,
        base: Option<Vec<f64>>,
        seed: u64,
        tol: &ToleranceConfig,
    ) -> Result<Self, NonconvexityError> {
        Self::build(map, Some(geo), base, seed, tol)
    }

    fn build(
        map: &'a QuadraticMap,
        geo: Option<CutGeometry>,
        base: Option<Vec<f64>>,
        seed: u64,
        tol: &ToleranceConfig,
    ) -> Result<Self, NonconvexityError> {
        let homogeneous = map.is_b_trivial(tol.trivial)?.trivial;
        let base = match base {
            Some(b) => {
                if b.len() != map.m() {
                    return Err(NonconvexityError::InvalidInput("base point has wrong length".into()));
                }
                b
            }
            None if homogeneous => map.a().iter().map(|a| a.trace().re).collect(),
            None => vec![0.0; map.m()],
        };
        Ok(CMinusSampler {
            map,
            geo,
            base,
            seed,
            homogeneous,
            tol: tol.clone(),
        })
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base
    }

    /// Unit direction for iteration `index`.
    pub fn direction(&self, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        loop {
            let d: Vec<f64> = (0..self.map.m()).map(|_| StandardNormal.sample(&mut rng)).collect();
            if let Some(u) = rnormalize(&d) {
                return u;
            }
        }
    }

    /// Supporting normal for iteration `index`, or `None` when the SDP fails.
    pub fn support(&self, index: u64) -> Option<Vec<f64>> {
        let d = self.direction(index);
        get_c_from_d(self.map, &self.base, &d, &self.tol).ok().map(|s| s.c_unit)
    }

    /// One sampling iteration.
    pub fn sample(&self, index: u64) -> Result<Option<CMinusPoint>, NonconvexityError> {
        let c = match self.support(index) {
            Some(c) => c,
            None => return Ok(None),
        };
        let geo = match &self.geo {
            Some(g) => g,
            None => return Ok(None),
        };
        if self.homogeneous {
            Ok(self.refine_homogeneous(geo, &c, index))
        } else {
            Ok(self.refine_inhomogeneous(geo, &c, index))
        }
    }

    fn refine_inhomogeneous(&self, geo: &CutGeometry, c: &[f64], index: u64) -> Option<CMinusPoint> {
        let st = geo.state(c).ok()?;
        let polished = geo.polish(&st.c, 50, 1e-12 * geo.b_scale()).ok()?;
        if rdot(&polished.c, &st.c) < HIT_COS {
            return None;
        }
        if polished.w.abs() > self.tol.orth * geo.b_scale() {
            return None;
        }
        let x0 = geo.transform.factor_inv.matvec(&polished.x0);
        let nx = vnorm(&x0);
        Some(CMinusPoint {
            index,
            c: polished.c.clone(),
            p: polished.p.clone(),
            kernel: vec![x0.iter().map(|v| *v / nx).collect()],
            kernel_dim: 1,
            residual: polished.w.abs(),
            z: Some(polished.z),
        })
    }

    fn refine_homogeneous(&self, geo: &CutGeometry, c: &[f64], index: u64) -> Option<CMinusPoint> {
        let (cu, gap) = polish_gap(geo, c, 40)?;
        let p = geo.project_to_dk(&cu).ok()?;
        let pen = pencil(self.map, &p, &self.tol).ok()?;
        if !pen.psd || pen.kernel_dim != 2 {
            return None;
        }
        let kernel = (0..2)
            .map(|j| {
                let mut v = pen.eig.vector(j);
                fix_phase(&mut v);
                v
            })
            .collect();
        Some(CMinusPoint {
            index,
            c: cu,
            p,
            kernel,
            kernel_dim: 2,
            residual: gap,
            z: None,
        })
    }
}

/// Gauss-Newton on the coincidence of the two smallest eigenvalues of
/// `c.A`, within the tangent space orthogonal to `c` and `c+`.
///
/// Returns the unit direction and its relative gap once the gap is below
/// the kernel tolerance.
fn polish_gap(geo: &CutGeometry, c: &[f64], max_iter: usize) -> Option<(Vec<f64>, f64)> {
    let map = &geo.map;
    if map.n() < 2 {
        return None;
    }
    let complex = map.field() == FieldTag::Complex;
    let measure = |c: &[f64]| -> Option<(Vec<f64>, f64, crate::linalg::HermitianEig)> {
        let cu = geo.tangent_unit(c).ok()?;
        let e = hermitian_eig(&map.combine_a(&cu)).ok()?;
        let spread = e.values[map.n() - 1] - e.values[0];
        if !(spread > 0.0) {
            return None;
        }
        let gap = (e.values[1] - e.values[0]) / spread;
        Some((cu, gap, e))
    };
    let (mut cu, mut gap, mut e) = measure(c)?;
    for _ in 0..max_iter {
        if gap <= geo.tol.kernel {
            return Some((cu, gap));
        }
        let x0 = e.vector(0);
        let x1 = e.vector(1);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        rows.push(map.a().iter().map(|a| a.quad_form(&x0).re - a.quad_form(&x1).re).collect());
        let w: Vec<C64> = map.a().iter().map(|a| a.sesqui(&x0, &x1)).collect();
        rows.push(w.iter().map(|x| x.re).collect());
        if complex {
            rows.push(w.iter().map(|x| x.im).collect());
        }
        let basis = [cu.clone(), geo.c_plus_unit.clone()];
        let rows: Vec<Vec<f64>> = rows
            .into_iter()
            .map(|r| {
                let mut r = r;
                for _ in 0..2 {
                    for b in &basis {
                        let d = rdot(&r, b);
                        for (ri, bi) in r.iter_mut().zip(b) {
                            *ri -= d * bi;
                        }
                    }
                }
                r
            })
            .collect();
        let rhs: Vec<f64> = std::iter::once(e.values[1] - e.values[0]).chain(std::iter::repeat(0.0).take(rows.len() - 1)).collect();
        let delta = min_norm_solve(&rows, &rhs)?;
        let mut s = 1.0;
        let mut next = None;
        for _ in 0..30 {
            let cand: Vec<f64> = cu.iter().zip(&delta).map(|(a, b)| a + s * b).collect();
            if let Some(r) = measure(&cand) {
                if r.1 < gap {
                    next = Some(r);
                    break;
                }
            }
            s *= 0.5;
        }
        let (nc, ng, ne) = next?;
        cu = nc;
        gap = ng;
        e = ne;
    }
    (gap <= geo.tol.kernel).then_some((cu, gap))
}

/// Least-squares minimum-norm solution of `J x = r` through the Gram matrix.
fn min_norm_solve(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let k = rows.len();
    let gram = DenseMatrix::from_fn(k, k, |i, j| C64::real(rdot(&rows[i], &rows[j])));
    let eig = hermitian_eig(&gram).ok()?;
    let top = eig.max_abs();
    if !(top > 0.0) {
        return None;
    }
    let pinv = pinv_from_eig(&eig, 1e-12 * top);
    let r: Vec<C64> = rhs.iter().map(|&x| C64::real(x)).collect();
    let a = pinv.matvec(&r);
    let m = rows[0].len();
    let mut x = vec![0.0; m];
    for (ai, row) in a.iter().zip(rows) {
        for (xj, rj) in x.iter_mut().zip(row) {
            *xj += ai.re * rj;
        }
    }
    Some(x)
}

/// First point of `C-` found within `max_iters` samples.
pub fn get_c_minus(
    map: &QuadraticMap,
    y: Option<&[f64]>,
    seed: u64,
    max_iters: usize,
    tol: &ToleranceConfig,
) -> Result<Option<CMinusPoint>, NonconvexityError> {
    let sampler = CMinusSampler::new(map, y.map(|v| v.to_vec()), seed, tol)?;
    Ok((0..max_iters as u64)
        .into_par_iter()
        .find_map_first(|i| sampler.sample(i).ok().flatten()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { seed: 0, max_iters: 100 }
    }
}

/// Certificate from the smallest sampling iteration that yields one.
pub fn nonconvexity_certificate(
    map: &QuadraticMap,
    opts: &CertifyOptions,
    tol: &ToleranceConfig,
) -> Result<Option<NonconvexityCertificate>, NonconvexityError> {
    if map.m() < 3 || map.n() < 2 {
        return Ok(None);
    }
    let sampler = CMinusSampler::new(map, None, opts.seed, tol)?;
    let homogeneous = sampler.is_homogeneous();
    let found = (0..opts.max_iters as u64).into_par_iter().find_map_first(|i| {
        if sampler.geo.is_some() {
            let pt = sampler.sample(i).ok().flatten()?;
            let cert = if homogeneous {
                verify_homogeneous(map, &pt.p, tol)
            } else {
                verify_inhomogeneous(map, &pt.p, tol)
            };
            cert.ok().flatten()
        } else {
            // Without a definite direction the supporting normal is tested as is.
            let c = sampler.support(i)?;
            let cert = if homogeneous {
                verify_homogeneous(map, &c, tol)
            } else {
                verify_inhomogeneous(map, &c, tol)
            };
            cert.ok().flatten()
        }
    });
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example;
    use proptest::prelude::*;

    fn ex(id: u8) -> QuadraticMap {
        example(id).unwrap().map().unwrap()
    }

    /// `f(x) = (|x|^2, 2 x1, 2 x2)`: convex image, no certificate exists.
    fn paraboloid() -> QuadraticMap {
        let z = DenseMatrix::zeros(2, 2);
        QuadraticMap::new(
            FieldTag::Real,
            vec![DenseMatrix::identity(2), z.clone(), z],
            vec![vec![C64::ZERO; 2], vec![C64::ONE, C64::ZERO], vec![C64::ZERO, C64::ONE]],
            1e-9,
        )
        .unwrap()
    }

    #[test]
    fn defect_of_parallel_and_orthogonal_vectors() {
        assert!(collinearity_defect(&[1.0, 2.0], &[-2.0, -4.0]) < 1e-7);
        assert!((collinearity_defect(&[1.0, 0.0], &[0.0, 3.0]) - 1.0).abs() < 1e-12);
        assert_eq!(collinearity_defect(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn independence_of_orthonormal_and_repeated_vectors() {
        let e = vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0]];
        assert!((independence_sigma(&e) - 1.0).abs() < 1e-12);
        let rep = vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]];
        assert!(independence_sigma(&rep) < 1e-6);
        assert_eq!(independence_sigma(&[vec![0.0, 0.0]]), 0.0);
    }

    #[test]
    fn certificate_for_example_two_verifies() {
        let map = ex(2);
        let tol = ToleranceConfig::default();
        let opts = CertifyOptions { seed: 2, max_iters: 100 };
        let cert = nonconvexity_certificate(&map, &opts, &tol).unwrap().expect("certificate");
        let want = if map.is_homogeneous() { CertificateKind::Homogeneous } else { CertificateKind::Inhomogeneous };
        assert_eq!(cert.kind, want);
        assert!(cert.verify(&map, &tol));
        assert_eq!(nonconvexity_certificate(&map, &opts, &tol).unwrap(), Some(cert));
    }

    #[test]
    fn convex_image_has_no_certificate() {
        let map = paraboloid();
        let tol = ToleranceConfig::default();
        assert_eq!(nonconvexity_certificate(&map, &CertifyOptions::default(), &tol).unwrap(), None);
        assert!(get_c_minus(&map, None, 0, 50, &tol).unwrap().is_none());
    }

    #[test]
    fn c_minus_point_of_example_one_is_singular() {
        let map = ex(1);
        let tol = ToleranceConfig::default();
        let pt = get_c_minus(&map, None, 0, 100, &tol).unwrap().expect("point of C-");
        assert_eq!(pt.kernel_dim, 1);
        let e = hermitian_eig(&map.combine_a(&pt.p)).unwrap();
        let scale = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(e.values[0].abs() <= 1e-6 * scale, "{:?}", e.values);
    }

    #[test]
    fn wrong_length_c_is_invalid_input() {
        let map = ex(1);
        assert!(matches!(unit_c(&map, &[1.0]), Err(NonconvexityError::InvalidInput(_))));
        assert!(matches!(unit_c(&map, &[0.0; 3]), Err(NonconvexityError::InvalidInput(_))));
    }

    proptest! {
        #[test]
        fn defect_is_a_scale_invariant_sine(a in prop::collection::vec(-10.0f64..10.0, 3), b in prop::collection::vec(-10.0f64..10.0, 3), s in 0.1f64..10.0) {
            let d = collinearity_defect(&a, &b);
            prop_assert!((0.0..=1.0).contains(&d));
            let scaled: Vec<f64> = a.iter().map(|v| v * s).collect();
            prop_assert!((collinearity_defect(&scaled, &b) - d).abs() < 1e-9);
        }
    }
}
