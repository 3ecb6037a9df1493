//! Convex cut: minimization of the flat-edge offset `z(c)` over the
//! singular boundary set `C-` of the cone `K = {c : c.A PSD}`.
//!
//! All geometry runs in normalized coordinates where `c+ . A = I` and
//! `c+ . b = 0` (see [`QuadraticMap::normalize_for_cut`]). Directions `c`
//! are the same vectors in original and normalized coordinates.

use crate::linalg::{
    hermitian_eig, rdot, rnorm, rnormalize, vdot, vnorm, DenseMatrix, FieldTag, HermitianEig, LinalgError,
    ToleranceConfig, C64,
};
use crate::nonconvexity::{CMinusPoint, CMinusSampler, NonconvexityError};
use crate::quadmap::{CutTransform, MapError, QuadraticMap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutError {
    #[error("b is zero or trivial; the cut is undefined")]
    TrivialB,
    #[error("c+ . A is not positive definite")]
    NotDefinite,
    #[error("no point of C- was found")]
    NoCMinusFound,
    #[error("kernel of Q(c) has dimension {0}, expected 1")]
    KernelDimExceeded(usize),
    #[error("normals are degenerate")]
    DegenerateNormals,
    #[error("direction vector is zero after removing the c+ component")]
    ZeroDirection,
    #[error("tracing requires a real map with m = 4")]
    UnsupportedDimension,
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Nonconvexity(#[from] Box<NonconvexityError>),
}

impl From<NonconvexityError> for CutError {
    fn from(e: NonconvexityError) -> Self {
        CutError::Nonconvexity(Box::new(e))
    }
}

/// Everything derived from a direction `c` in normalized coordinates.
#[derive(Debug, Clone)]
pub struct DescentState {
    /// Unit direction orthogonal to `c+`.
    pub c: Vec<f64>,
    /// Projection onto the boundary of `K`: `p = c - c+ lambda_min(c.A)`.
    pub p: Vec<f64>,
    pub lambda_min: f64,
    /// `Q = p.A`.
    pub q: DenseMatrix,
    /// Eigen-decomposition of `Q` (ascending, first value near zero).
    pub q_eig: HermitianEig,
    pub q_pinv: DenseMatrix,
    pub kernel_dim: usize,
    /// `mu_1 / mu_max`, the relative gap of the second eigenvalue of `Q`.
    pub gap_ratio: f64,
    /// Unit kernel vector of `Q`.
    pub x0: Vec<C64>,
    /// `v = Q+ (c.b)`.
    pub v: Vec<C64>,
    /// `z = v* v`.
    pub z: f64,
    /// Orthogonality residual `x0* (c.b)`.
    pub w: C64,
    /// `u_i = x0* A_i x0`.
    pub u: Vec<f64>,
    /// `q_i = b_i - (A_i - u_i I) v`.
    pub q_vecs: Vec<Vec<C64>>,
    /// `n_i = x0* q_i`.
    pub normals: Vec<C64>,
}

impl DescentState {
    /// `(grad z)_i = 2 Re(v* Q+ q_i)`.
    pub fn gradient(&self) -> Vec<f64> {
        let t = self.q_pinv.matvec(&self.v);
        self.q_vecs.iter().map(|qi| 2.0 * vdot(&t, qi).re).collect()
    }

    pub fn normals_re(&self) -> Vec<f64> {
        self.normals.iter().map(|x| x.re).collect()
    }

    pub fn normals_im(&self) -> Vec<f64> {
        self.normals.iter().map(|x| x.im).collect()
    }
}

/// Normals at a point of `C-`: one real vector, or the real and imaginary parts.
#[derive(Debug, Clone)]
pub enum Normals {
    Real(Vec<f64>),
    Complex(Vec<f64>, Vec<f64>),
}

/// Projects `grad` onto the orthogonal complement of `{c, c+, normals}`.
pub fn project_gradient(grad: &[f64], c: &[f64], c_plus: &[f64], normals: &Normals) -> Result<Vec<f64>, CutError> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in [c, c_plus] {
        if let Some(u) = orthonormal_residual(v, &basis) {
            basis.push(u);
        }
    }
    let ns: Vec<&Vec<f64>> = match normals {
        Normals::Real(n) => vec![n],
        Normals::Complex(n1, n2) => vec![n1, n2],
    };
    let scale = ns.iter().map(|n| rnorm(n)).fold(0.0, f64::max);
    if !(scale > 1e-14) {
        return Err(CutError::DegenerateNormals);
    }
    for n in ns {
        let r = residual(n, &basis);
        // Gram determinant test, relative to the normal length.
        if rnorm(&r) <= 1e-6 * scale {
            return Err(CutError::DegenerateNormals);
        }
        basis.push(rnormalize(&r).expect("nonzero"));
    }
    Ok(residual(grad, &basis))
}

fn residual(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let d = rdot(&r, b);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= d * bi;
            }
        }
    }
    r
}

fn orthonormal_residual(v: &[f64], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let r = residual(v, basis);
    if rnorm(&r) <= 1e-12 * rnorm(v).max(1e-300) {
        None
    } else {
        rnormalize(&r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RetractFailure {
    KernelDimExceeded,
    NoSignChange,
    NoConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GradientCollinearWithNormal,
    KernelDimExceeded,
    StepUnderflow,
    IterCap,
    DegenerateNormals,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentOptions {
    pub max_iters: usize,
    pub beta0: f64,
    pub beta_min: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            max_iters: 500,
            beta0: 0.1,
            beta_min: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentTrace {
    pub z: Vec<f64>,
    pub c: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub termination: Termination,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentOutcome {
    pub z: f64,
    pub c: Vec<f64>,
    pub p: Vec<f64>,
    pub trace: DescentTrace,
}

/// Normalized map together with the cut direction.
#[derive(Debug, Clone)]
pub struct CutGeometry {
    pub map: QuadraticMap,
    pub transform: CutTransform,
    pub c_plus: Vec<f64>,
    pub c_plus_unit: Vec<f64>,
    pub tol: ToleranceConfig,
    b_scale: f64,
}

impl CutGeometry {
    /// Normalizes `map` for the cut along `c_plus`.
    pub fn new(map: &QuadraticMap, c_plus: &[f64], tol: &ToleranceConfig) -> Result<Self, CutError> {
        let (norm, transform) = map.normalize_for_cut(c_plus, tol).map_err(|e| match e {
            MapError::NotDefinite => CutError::NotDefinite,
            other => CutError::Map(other),
        })?;
        let c_plus_unit = rnormalize(c_plus).ok_or(CutError::NotDefinite)?;
        let b_scale = 1.0 + norm.b_norm();
        Ok(CutGeometry {
            map: norm,
            transform,
            c_plus: c_plus.to_vec(),
            c_plus_unit,
            tol: tol.clone(),
            b_scale,
        })
    }

    pub fn field(&self) -> FieldTag {
        self.map.field()
    }

    /// `1 + |b|` in normalized coordinates.
    pub fn b_scale(&self) -> f64 {
        self.b_scale
    }

    /// Removes the `c+` component and normalizes.
    pub fn tangent_unit(&self, c: &[f64]) -> Result<Vec<f64>, CutError> {
        let d = rdot(c, &self.c_plus_unit);
        let r: Vec<f64> = c.iter().zip(&self.c_plus_unit).map(|(a, b)| a - d * b).collect();
        if rnorm(&r) <= 1e-12 * rnorm(c).max(1e-300) {
            return Err(CutError::ZeroDirection);
        }
        rnormalize(&r).ok_or(CutError::ZeroDirection)
    }

    /// `p(c) = c - c+ lambda_min(c.A)`; singular and PSD by construction.
    pub fn project_to_dk(&self, c: &[f64]) -> Result<Vec<f64>, CutError> {
        let e = hermitian_eig(&self.map.combine_a(c))?;
        let l = e.values[0];
        Ok(c.iter().zip(&self.c_plus).map(|(ci, pi)| ci - pi * l).collect())
    }

    /// Full state at `c`, allowing any orthogonality residual.
    pub fn state(&self, c: &[f64]) -> Result<DescentState, CutError> {
        let c = self.tangent_unit(c)?;
        let map = &self.map;
        let n = map.n();
        let m_c = map.combine_a(&c);
        let eig_m = hermitian_eig(&m_c)?;
        let lambda_min = eig_m.values[0];
        let p: Vec<f64> = c.iter().zip(&self.c_plus).map(|(ci, pi)| ci - pi * lambda_min).collect();
        let mut q = m_c.clone();
        q.axpy(-lambda_min, &DenseMatrix::identity(n));
        let mus: Vec<f64> = eig_m.values.iter().map(|l| l - lambda_min).collect();
        let mu_max = mus.last().copied().unwrap_or(0.0);
        let thresh = self.tol.kernel * mu_max.max(f64::MIN_POSITIVE);
        let kernel_dim = mus.iter().filter(|&&mu| mu <= thresh).count().max(1);
        let gap_ratio = if n > 1 && mu_max > 0.0 { mus[1] / mu_max } else { 0.0 };
        if kernel_dim > 1 {
            return Err(CutError::KernelDimExceeded(kernel_dim));
        }
        let q_eig = HermitianEig {
            values: mus.clone(),
            vectors: eig_m.vectors.clone(),
        };
        let q_pinv = q_eig.spectral(|mu| if mu <= thresh { 0.0 } else { 1.0 / mu });
        let mut x0 = q_eig.vector(0);
        fix_phase(&mut x0);
        let cb = map.combine_b(&c);
        let w = vdot(&x0, &cb);
        let v = q_pinv.matvec(&cb);
        let z = vnorm(&v).powi(2);
        let u: Vec<f64> = map.a().iter().map(|ak| ak.quad_form(&x0).re).collect();
        let q_vecs: Vec<Vec<C64>> = (0..map.m())
            .map(|i| {
                let mut av = map.a()[i].matvec(&v);
                for (avj, vj) in av.iter_mut().zip(&v) {
                    *avj -= *vj * u[i];
                }
                map.b()[i].iter().zip(&av).map(|(bj, aj)| *bj - *aj).collect()
            })
            .collect();
        let normals = q_vecs.iter().map(|qi| vdot(&x0, qi)).collect();
        Ok(DescentState {
            c,
            p,
            lambda_min,
            q,
            q_eig,
            q_pinv,
            kernel_dim,
            gap_ratio,
            x0,
            v,
            z,
            w,
            u,
            q_vecs,
            normals,
        })
    }

    /// `z(c) = |Q(c)+ (c.b)|^2` for any `c` (scale invariant).
    pub fn z_of_c(&self, c: &[f64]) -> Result<f64, CutError> {
        Ok(self.state(c)?.z)
    }

    pub fn normals_of(&self, st: &DescentState) -> Normals {
        match self.field() {
            FieldTag::Real => Normals::Real(st.normals_re()),
            FieldTag::Complex => Normals::Complex(st.normals_re(), st.normals_im()),
        }
    }

    /// Gauss-Newton steps on `x0*(c.b) = 0` within the tangent space at `c`.
    ///
    /// Stops once `|w| <= target`; fails when no step reduces the residual.
    pub fn polish(&self, c: &[f64], max_iter: usize, target: f64) -> Result<DescentState, RetractFailure> {
        let mut st = self.state(c).map_err(to_retract_failure)?;
        for _ in 0..max_iter {
            let res = st.w.abs();
            if res <= target {
                return Ok(st);
            }
            let delta = match self.newton_step(&st) {
                Some(d) => d,
                None => return Err(RetractFailure::NoConvergence),
            };
            let mut s = 1.0;
            let mut next = None;
            let mut last_err = RetractFailure::NoConvergence;
            for _ in 0..30 {
                let cand: Vec<f64> = st.c.iter().zip(&delta).map(|(a, b)| a + s * b).collect();
                match self.state(&cand) {
                    Ok(ns) if ns.w.abs() < res => {
                        next = Some(ns);
                        break;
                    }
                    Ok(_) => {}
                    Err(e) => last_err = to_retract_failure(e),
                }
                s *= 0.5;
            }
            match next {
                Some(ns) => st = ns,
                None => {
                    return if st.w.abs() <= target.max(1e2 * f64::EPSILON * self.b_scale) {
                        Ok(st)
                    } else {
                        Err(last_err)
                    }
                }
            }
        }
        if st.w.abs() <= target {
            Ok(st)
        } else {
            Err(RetractFailure::NoConvergence)
        }
    }

    /// Minimum-norm tangent step solving the linearized `w = 0`.
    fn newton_step(&self, st: &DescentState) -> Option<Vec<f64>> {
        let basis = vec![st.c.clone(), self.c_plus_unit.clone()];
        let j1 = residual(&st.normals_re(), &basis);
        match self.field() {
            FieldTag::Real => {
                let nn = rdot(&j1, &j1);
                if !(nn > 1e-300) {
                    return None;
                }
                let s = -st.w.re / nn;
                Some(j1.iter().map(|x| x * s).collect())
            }
            FieldTag::Complex => {
                let j2 = residual(&st.normals_im(), &basis);
                let (g11, g12, g22) = (rdot(&j1, &j1), rdot(&j1, &j2), rdot(&j2, &j2));
                let det = g11 * g22 - g12 * g12;
                if !(det > 1e-12 * g11 * g22) || !(det > 1e-300) {
                    return None;
                }
                // delta = -J'(JJ')^-1 [Re w, Im w].
                let (r1, r2) = (st.w.re, st.w.im);
                let a1 = (g22 * r1 - g12 * r2) / det;
                let a2 = (-g12 * r1 + g11 * r2) / det;
                Some(j1.iter().zip(&j2).map(|(x, y)| -(a1 * x + a2 * y)).collect())
            }
        }
    }

    /// Acceptance threshold for the real retraction.
    pub fn real_accept(&self) -> f64 {
        1e-10 * self.b_scale
    }

    /// Bisection along the reference normal `n` on `lambda in [-lambda0, lambda0]`.
    pub fn retract_real(&self, c_prime: &[f64], n: &[f64], lambda0: f64) -> Result<DescentState, RetractFailure> {
        let base = self.state(c_prime).map_err(to_retract_failure)?;
        let accept = self.real_accept();
        if base.w.abs() < accept {
            return Ok(base);
        }
        let x_ref = base.x0.clone();
        let eval = |lam: f64| -> Result<(f64, DescentState), RetractFailure> {
            let c: Vec<f64> = base.c.iter().zip(n).map(|(a, b)| a + lam * b).collect();
            let st = self.state(&c).map_err(to_retract_failure)?;
            let sign = if vdot(&x_ref, &st.x0).re >= 0.0 { 1.0 } else { -1.0 };
            Ok((sign * st.w.re, st))
        };
        let f0 = base.w.re;
        let hi = eval(lambda0);
        let lo = eval(-lambda0);
        let mut kernel_hit = false;
        let mut pick = |r: &Result<(f64, DescentState), RetractFailure>| match r {
            Ok((f, _)) => Some(*f),
            Err(RetractFailure::KernelDimExceeded) => {
                kernel_hit = true;
                None
            }
            Err(_) => None,
        };
        let fhi = pick(&hi);
        let flo = pick(&lo);
        let side_hi = fhi.is_some_and(|f| f.signum() != f0.signum());
        let side_lo = flo.is_some_and(|f| f.signum() != f0.signum());
        let use_hi = match (side_hi, side_lo) {
            (true, true) => {
                let slope = (fhi.unwrap() - flo.unwrap()) / (2.0 * lambda0);
                -f0 / slope >= 0.0
            }
            (true, false) => true,
            (false, true) => false,
            (false, false) => {
                return Err(if kernel_hit {
                    RetractFailure::KernelDimExceeded
                } else {
                    RetractFailure::NoSignChange
                })
            }
        };
        let (mut a, mut fa, mut b) = if use_hi { (0.0, f0, lambda0) } else { (0.0, f0, -lambda0) };
        let mut best: Option<DescentState> = None;
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            let (fm, st) = eval(mid)?;
            if fm.abs() < accept {
                best = Some(st);
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        best.ok_or(RetractFailure::NoConvergence)
    }

    /// Gauss-Newton retraction for complex maps; succeeds when `|w|^2 < 1e-16`.
    pub fn retract_complex(&self, c_prime: &[f64]) -> Result<DescentState, RetractFailure> {
        let st = match self.polish(c_prime, 50, 1e-12 * self.b_scale) {
            Ok(st) => st,
            Err(e) => return Err(e),
        };
        if st.w.norm_sqr() < 1e-16 {
            Ok(st)
        } else {
            Err(RetractFailure::NoConvergence)
        }
    }

    fn retract(&self, cur: &DescentState, c_prime: &[f64], lambda0: f64) -> Result<DescentState, RetractFailure> {
        match self.field() {
            FieldTag::Real => self.retract_real(c_prime, &cur.normals_re(), lambda0),
            FieldTag::Complex => self.retract_complex(c_prime),
        }
    }

    /// Projected gradient descent of `z` over `C-` starting at `start`.
    pub fn descend(&self, start: &[f64], opts: &DescentOptions) -> Result<DescentOutcome, CutError> {
        let mut st = self.state(start)?;
        let mut trace = DescentTrace {
            z: vec![st.z],
            c: vec![st.c.clone()],
            beta: Vec::new(),
            termination: Termination::IterCap,
        };
        let mut beta = opts.beta0;
        let mut successes = 0;
        let mut iters = 0;
        let termination = loop {
            if iters >= opts.max_iters {
                break Termination::IterCap;
            }
            iters += 1;
            if st.gap_ratio <= self.tol.kernel {
                break Termination::KernelDimExceeded;
            }
            let g = st.gradient();
            let pg = match project_gradient(&g, &st.c, &self.c_plus_unit, &self.normals_of(&st)) {
                Ok(v) => v,
                Err(_) => break Termination::DegenerateNormals,
            };
            let pnorm = rnorm(&pg);
            if pnorm < 1e-8 * (1.0 + rnorm(&g)) {
                break Termination::GradientCollinearWithNormal;
            }
            let mut accepted = None;
            let mut last_failure = RetractFailure::NoConvergence;
            while beta >= opts.beta_min {
                let cp: Vec<f64> = st.c.iter().zip(&pg).map(|(a, b)| a - beta * b).collect();
                match self.retract(&st, &cp, beta * pnorm) {
                    Ok(ns) if ns.z <= st.z => {
                        accepted = Some(ns);
                        break;
                    }
                    Ok(_) => last_failure = RetractFailure::NoConvergence,
                    Err(e) => last_failure = e,
                }
                beta *= 0.5;
                successes = 0;
            }
            match accepted {
                Some(ns) => {
                    trace.beta.push(beta);
                    trace.z.push(ns.z);
                    trace.c.push(ns.c.clone());
                    st = ns;
                    successes += 1;
                    if successes >= 3 {
                        beta = (2.0 * beta).min(opts.beta0);
                        successes = 0;
                    }
                }
                None => {
                    break if last_failure == RetractFailure::KernelDimExceeded {
                        Termination::KernelDimExceeded
                    } else {
                        Termination::StepUnderflow
                    };
                }
            }
        };
        trace.termination = termination;
        Ok(DescentOutcome {
            z: st.z,
            c: st.c.clone(),
            p: st.p.clone(),
            trace,
        })
    }

    /// Unit tangent to a one-dimensional `C-` (real, `m = 4`): orthogonal to `c`, `c+`, `n`.
    pub fn curve_tangent(&self, st: &DescentState) -> Result<Vec<f64>, CutError> {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for v in [st.c.clone(), self.c_plus_unit.clone(), st.normals_re()] {
            match orthonormal_residual(&v, &basis) {
                Some(u) => basis.push(u),
                None => return Err(CutError::DegenerateNormals),
            }
        }
        let m = self.map.m();
        let mut best: Option<Vec<f64>> = None;
        let mut best_norm = 0.0;
        for i in 0..m {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            let r = residual(&e, &basis);
            let nr = rnorm(&r);
            if nr > best_norm {
                best_norm = nr;
                best = Some(r);
            }
        }
        best.and_then(|r| rnormalize(&r)).ok_or(CutError::DegenerateNormals)
    }

    /// Traces the connected component of a one-dimensional `C-` through `start`.
    pub fn sample_c_minus_component(&self, start: &[f64], step: f64, max_points: usize) -> Result<ComponentTrace, CutError> {
        if self.field() != FieldTag::Real || self.map.m() != 4 {
            return Err(CutError::UnsupportedDimension);
        }
        let st0 = self.polish(start, 50, 1e-12 * self.b_scale).map_err(|_| CutError::NoCMinusFound)?;
        let t0 = self.curve_tangent(&st0)?;
        let (fwd, closed, fwd_end) = self.trace_branch(&st0, &t0, step, max_points)?;
        if closed {
            return Ok(ComponentTrace {
                points: fwd.iter().map(|s| s.c.clone()).collect(),
                z: fwd.iter().map(|s| s.z).collect(),
                topology: Topology::Loop,
            });
        }
        let back_t: Vec<f64> = t0.iter().map(|x| -x).collect();
        let (bwd, _, bwd_end) = self.trace_branch(&st0, &back_t, step, max_points)?;
        let mut pts: Vec<DescentState> = bwd.into_iter().skip(1).rev().collect();
        pts.extend(fwd);
        let topology = match (fwd_end, bwd_end) {
            (BranchEnd::RankDrop, BranchEnd::RankDrop) => Topology::Interval,
            _ => Topology::Unresolved,
        };
        Ok(ComponentTrace {
            points: pts.iter().map(|s| s.c.clone()).collect(),
            z: pts.iter().map(|s| s.z).collect(),
            topology,
        })
    }

    fn trace_branch(
        &self,
        st0: &DescentState,
        t0: &[f64],
        step: f64,
        max_points: usize,
    ) -> Result<(Vec<DescentState>, bool, BranchEnd), CutError> {
        let mut pts = vec![st0.clone()];
        let mut cur = st0.clone();
        let mut tan = t0.to_vec();
        let mut travelled = 0.0;
        let h_min = step * 1e-4;
        while pts.len() < max_points {
            let mut h = step;
            let mut next: Option<DescentState> = None;
            let mut last_err = RetractFailure::NoConvergence;
            while h >= h_min {
                let cp: Vec<f64> = cur.c.iter().zip(&tan).map(|(a, b)| a + h * b).collect();
                match self.retract_real(&cp, &cur.normals_re(), 2.0 * h) {
                    Ok(ns) => {
                        let d: Vec<f64> = ns.c.iter().zip(&cur.c).map(|(a, b)| a - b).collect();
                        // Reject jumps onto a different branch.
                        if rnorm(&d) <= 2.0 * h && rdot(&d, &tan) > 0.0 {
                            next = Some(ns);
                            break;
                        }
                    }
                    Err(e) => last_err = e,
                }
                h *= 0.5;
            }
            let ns = match next {
                Some(ns) => ns,
                None => {
                    let end = if last_err == RetractFailure::KernelDimExceeded || cur.gap_ratio < RANK_DROP_GAP {
                        BranchEnd::RankDrop
                    } else {
                        BranchEnd::Stalled
                    };
                    return Ok((pts, false, end));
                }
            };
            let d: Vec<f64> = ns.c.iter().zip(&cur.c).map(|(a, b)| a - b).collect();
            travelled += rnorm(&d);
            let new_tan = self.curve_tangent(&ns)?;
            tan = if rdot(&new_tan, &tan) >= 0.0 { new_tan } else { new_tan.iter().map(|x| -x).collect() };
            cur = ns;
            pts.push(cur.clone());
            let back: Vec<f64> = cur.c.iter().zip(&st0.c).map(|(a, b)| a - b).collect();
            if travelled > 4.0 * step && rnorm(&back) < 0.5 * step {
                return Ok((pts, true, BranchEnd::Closed));
            }
        }
        Ok((pts, false, BranchEnd::Stalled))
    }
}

/// Relative second-eigenvalue gap of `Q` below which a traced branch is
/// considered to end at a rank drop.
pub const RANK_DROP_GAP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BranchEnd {
    Closed,
    RankDrop,
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Loop,
    Interval,
    Unresolved,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentTrace {
    pub points: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    pub topology: Topology,
}

fn to_retract_failure(e: CutError) -> RetractFailure {
    match e {
        CutError::KernelDimExceeded(_) => RetractFailure::KernelDimExceeded,
        _ => RetractFailure::NoConvergence,
    }
}

/// Makes the largest-magnitude entry real and positive.
pub fn fix_phase(x: &mut [C64]) {
    let mut idx = 0;
    let mut best = -1.0;
    for (i, v) in x.iter().enumerate() {
        // Prefer the first index among near-equal magnitudes for stability.
        if v.abs() > best * (1.0 + 1e-9) {
            best = v.abs();
            idx = i;
        }
    }
    if best <= 0.0 {
        return;
    }
    let ph = x[idx] / x[idx].abs();
    let inv = ph.conj();
    for v in x.iter_mut() {
        *v = *v * inv;
    }
    x[idx] = C64::real(x[idx].re);
}

/// `z(c)` on an original map: normalizes with `c_plus` first.
pub fn z_of_c(map: &QuadraticMap, c_plus: &[f64], c: &[f64], tol: &ToleranceConfig) -> Result<f64, CutError> {
    CutGeometry::new(map, c_plus, tol)?.z_of_c(c)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZMaxOptions {
    pub seed: u64,
    /// Number of sampled SDP directions.
    pub restarts: usize,
    pub z_guess: Option<f64>,
    /// Base point of the sampled rays; defaults to the Gaussian mean of the
    /// image, `(tr A_k)`.
    pub base_point: Option<Vec<f64>>,
    pub descent: DescentOptions,
}

impl Default for ZMaxOptions {
    fn default() -> Self {
        ZMaxOptions {
            seed: 0,
            restarts: 100,
            z_guess: None,
            base_point: None,
            descent: DescentOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartRecord {
    pub index: u64,
    pub start: CMinusPoint,
    pub outcome: DescentOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZMaxResult {
    pub z_max: f64,
    /// Unit boundary normal `p/|p|` of the minimizing face.
    pub c_star: Vec<f64>,
    /// Minimizer as a unit direction orthogonal to `c+`.
    pub c_tangent: Vec<f64>,
    pub c_plus: Vec<f64>,
    pub z_guess: Option<f64>,
    pub samples: usize,
    pub starts: Vec<StartRecord>,
    /// Unit boundary directions `p/|p|` of distinct starting points.
    pub distinct_starts: Vec<Vec<f64>>,
}

/// Cosine above which two unit directions are reported as the same point.
pub const DUPLICATE_COS: f64 = 0.999;

/// Minimum of `z` over `C-` by sampled starts and projected descent.
pub fn get_z_max(map: &QuadraticMap, c_plus: &[f64], opts: &ZMaxOptions, tol: &ToleranceConfig) -> Result<ZMaxResult, CutError> {
    if map.is_b_trivial(tol.trivial)?.trivial {
        return Err(CutError::TrivialB);
    }
    let geo = CutGeometry::new(map, c_plus, tol)?;
    let base = opts
        .base_point
        .clone()
        .unwrap_or_else(|| map.a().iter().map(|a| a.trace().re).collect());
    let sampler = CMinusSampler::with_geometry(map, geo.clone(), Some(base), opts.seed, tol)?;
    let starts: Vec<StartRecord> = (0..opts.restarts as u64)
        .into_par_iter()
        .filter_map(|i| {
            let pt = sampler.sample(i).ok().flatten()?;
            let outcome = geo.descend(&pt.c, &opts.descent).ok()?;
            Some(StartRecord { index: i, start: pt, outcome })
        })
        .collect();
    let best = starts
        .iter()
        .min_by(|a, b| a.outcome.z.total_cmp(&b.outcome.z).then(a.index.cmp(&b.index)))
        .ok_or(CutError::NoCMinusFound)?;
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for s in &starts {
        if let Some(u) = rnormalize(&s.start.p) {
            if !distinct.iter().any(|d| rdot(d, &u).abs() > DUPLICATE_COS) {
                distinct.push(u);
            }
        }
    }
    Ok(ZMaxResult {
        z_max: best.outcome.z,
        c_star: rnormalize(&best.outcome.p).unwrap_or_else(|| best.outcome.p.clone()),
        c_tangent: best.outcome.c.clone(),
        c_plus: c_plus.to_vec(),
        z_guess: opts.z_guess,
        samples: opts.restarts,
        distinct_starts: distinct,
        starts,
    })
}
