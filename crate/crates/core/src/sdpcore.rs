//! Interior point solver for small dense semidefinite programs.
//!
//! Two problem shapes are exposed. [`LmiProblem`] is the conic form
//! `min c'x  s.t.  h - sum_i x_i G_i  PSD,  A x = b` over a product of
//! Hermitian blocks (1x1 blocks give linear inequalities). [`SdpProblem`] is
//! the trace form `<A_i, X> + a_i'u = b_i`, `X PSD`, `u` free, which is solved
//! as the conic dual of an [`LmiProblem`].
//!
//! The method is a homogeneous self-dual embedding with Nesterov-Todd
//! scaling and a Mehrotra predictor-corrector step.

use crate::linalg::{hermitian_eig, rdot, rnorm, DenseMatrix, LinalgError, RealLu, ToleranceConfig, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalTrouble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
    Feasibility,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-9,
            gap_tol: 1e-9,
            max_iter: 200,
        }
    }
}

impl From<&ToleranceConfig> for SolverOptions {
    fn from(t: &ToleranceConfig) -> Self {
        SolverOptions {
            feas_tol: t.feas,
            gap_tol: t.gap,
            max_iter: t.max_iter,
        }
    }
}

/// `min c'x  s.t.  S = h - sum_i x_i G_i  PSD,  A x = b`.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    pub blocks: Vec<usize>,
    pub c: Vec<f64>,
    /// `g[i][k]` is the coefficient matrix of `x_i` in block `k`.
    pub g: Vec<Vec<DenseMatrix>>,
    pub h: Vec<DenseMatrix>,
    /// Equality rows, each of length `c.len()`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl LmiProblem {
    pub fn new(blocks: Vec<usize>, c: Vec<f64>) -> Self {
        let nx = c.len();
        let h = blocks.iter().map(|&d| DenseMatrix::zeros(d, d)).collect();
        let g = (0..nx)
            .map(|_| blocks.iter().map(|&d| DenseMatrix::zeros(d, d)).collect())
            .collect();
        LmiProblem {
            blocks,
            c,
            g,
            h,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    pub fn nx(&self) -> usize {
        self.c.len()
    }

    pub fn add_equality(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.nx());
        self.a.push(row);
        self.b.push(rhs);
    }

    /// Slack `h - sum_i x_i G_i` for each block.
    pub fn slack(&self, x: &[f64]) -> Vec<DenseMatrix> {
        let mut s = self.h.clone();
        for (i, gi) in self.g.iter().enumerate() {
            if x[i] != 0.0 {
                for (sk, gik) in s.iter_mut().zip(gi) {
                    sk.axpy(-x[i], gik);
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct LmiSolution {
    pub status: SdpStatus,
    pub x: Vec<f64>,
    pub s: Vec<DenseMatrix>,
    /// Multipliers of the equality constraints.
    pub y: Vec<f64>,
    /// Dual matrix variable, one per block.
    pub z: Vec<DenseMatrix>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// Linear constraint `sum_k <mats[k], X_k> + free'u = rhs`.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub mats: Vec<DenseMatrix>,
    pub free: Vec<f64>,
    pub rhs: f64,
}

/// Trace-form SDP over Hermitian blocks with free scalar variables.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub n_free: usize,
    pub constraints: Vec<LinearConstraint>,
    pub objective_mats: Vec<DenseMatrix>,
    pub objective_free: Vec<f64>,
    pub sense: Sense,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>, n_free: usize, sense: Sense) -> Self {
        let objective_mats = blocks.iter().map(|&d| DenseMatrix::zeros(d, d)).collect();
        SdpProblem {
            blocks,
            n_free,
            constraints: Vec::new(),
            objective_mats,
            objective_free: vec![0.0; n_free],
            sense,
        }
    }

    pub fn zero_blocks(&self) -> Vec<DenseMatrix> {
        self.blocks.iter().map(|&d| DenseMatrix::zeros(d, d)).collect()
    }

    pub fn add_constraint(&mut self, mats: Vec<DenseMatrix>, free: Vec<f64>, rhs: f64) {
        assert_eq!(mats.len(), self.blocks.len());
        assert_eq!(free.len(), self.n_free);
        self.constraints.push(LinearConstraint { mats, free, rhs });
    }

    /// Converts to the conic form whose dual is this problem.
    ///
    /// The conic variable is the constraint multiplier `w`; the returned flag
    /// tells whether objective signs were flipped for maximization.
    fn to_lmi(&self) -> (LmiProblem, bool) {
        let flip = self.sense == Sense::Maximize;
        let sgn = if flip { -1.0 } else { 1.0 };
        let zero_obj = self.sense == Sense::Feasibility;
        let p = self.constraints.len();
        // Conic primal: min -b'w  s.t.  C - sum_i w_i A_i PSD,  sum_i w_i a_i = f.
        let c: Vec<f64> = self.constraints.iter().map(|k| -k.rhs).collect();
        let mut lmi = LmiProblem::new(self.blocks.clone(), c);
        for (k, blk) in self.objective_mats.iter().enumerate() {
            lmi.h[k] = if zero_obj { DenseMatrix::zeros(blk.rows(), blk.cols()) } else { blk.scale(sgn) };
        }
        for (i, con) in self.constraints.iter().enumerate() {
            lmi.g[i] = con.mats.clone();
        }
        for j in 0..self.n_free {
            let row: Vec<f64> = (0..p).map(|i| self.constraints[i].free[j]).collect();
            let rhs = if zero_obj { 0.0 } else { sgn * self.objective_free[j] };
            lmi.add_equality(row, rhs);
        }
        (lmi, flip)
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<DenseMatrix>,
    pub free: Vec<f64>,
    /// Constraint multipliers `w` with `C - sum_i w_i A_i PSD`.
    pub duals: Vec<f64>,
    /// Dual slack `C - sum_i w_i A_i`.
    pub dual_slack: Vec<DenseMatrix>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub iterations: usize,
}

pub fn solve_sdp(problem: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    let (lmi, flip) = problem.to_lmi();
    let sol = solve_lmi(&lmi, opts);
    let sgn = if flip { -1.0 } else { 1.0 };
    let status = match sol.status {
        SdpStatus::Optimal => SdpStatus::Optimal,
        // No multiplier exists: the trace form is unbounded.
        SdpStatus::Infeasible => SdpStatus::Unbounded,
        // The conic objective is unbounded below: the trace form is empty.
        SdpStatus::Unbounded => SdpStatus::Infeasible,
        SdpStatus::NumericalTrouble => SdpStatus::NumericalTrouble,
    };
    let x = sol.z.clone();
    let free = sol.y.clone();
    let primal_objective = if problem.sense == Sense::Feasibility {
        0.0
    } else {
        let mut v: f64 = problem.objective_mats.iter().zip(&x).map(|(c, x)| c.inner(x)).sum();
        v += rdot(&problem.objective_free, &free);
        v
    };
    // The conic primal objective -b'w equals the trace-form optimum (up to sign).
    let dual_objective = if problem.sense == Sense::Feasibility { 0.0 } else { -sgn * sol.primal_objective };
    SdpSolution {
        status,
        x,
        free,
        duals: sol.x,
        dual_slack: sol.s,
        primal_objective,
        dual_objective,
        gap: sol.gap,
        iterations: sol.iterations,
    }
}

/// Scaling data of one block: `W(S) = R^-1 S R^-*`, `W^-T(Z) = R* Z R`.
struct BlockScaling {
    r: DenseMatrix,
    rinv: DenseMatrix,
    lambda: Vec<f64>,
}

fn nt_scaling(s: &DenseMatrix, z: &DenseMatrix) -> Result<BlockScaling, LinalgError> {
    let es = hermitian_eig(s)?;
    if es.values[0] <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite { min_eig: es.values[0] });
    }
    let ls = es.spectral(f64::sqrt);
    let ls_inv = es.spectral(|l| 1.0 / l.sqrt());
    let mid = ls.matmul(z).matmul(&ls);
    let em = hermitian_eig(&DenseMatrix::hermitian(&mid)?)?;
    if em.values[0] <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite { min_eig: em.values[0] });
    }
    let lambda: Vec<f64> = em.values.iter().map(|l| l.sqrt()).collect();
    let d = lambda.len();
    let v = &em.vectors;
    // R = Ls V diag(lambda^-1/2),  R^-1 = diag(lambda^1/2) V* Ls^-1.
    let vs = DenseMatrix::from_fn(d, d, |i, j| v[(i, j)] * (1.0 / lambda[j].sqrt()));
    let r = ls.matmul(&vs);
    let vh = DenseMatrix::from_fn(d, d, |i, j| v[(j, i)].conj() * lambda[i].sqrt());
    let rinv = vh.matmul(&ls_inv);
    Ok(BlockScaling { r, rinv, lambda })
}

impl BlockScaling {
    /// `W(Y) = R^-1 Y R^-*`.
    fn w(&self, y: &DenseMatrix) -> DenseMatrix {
        y.congruence(&self.rinv)
    }
    /// `W^-1(Y) = R Y R*`.
    fn w_inv(&self, y: &DenseMatrix) -> DenseMatrix {
        y.congruence(&self.r)
    }
    /// `W^-T(Y) = R* Y R`.
    fn w_inv_t(&self, y: &DenseMatrix) -> DenseMatrix {
        y.congruence(&self.r.adjoint())
    }
    /// `W^T W(Y)`.
    fn wtw(&self, y: &DenseMatrix) -> DenseMatrix {
        self.w(y).congruence(&self.rinv.adjoint())
    }
}

/// Solves `lambda o X = D` for `X`, with `lambda o X = (Lambda X + X Lambda)/2`.
fn lyap_div(lambda: &[f64], d: &DenseMatrix) -> DenseMatrix {
    let n = lambda.len();
    DenseMatrix::from_fn(n, n, |i, j| d[(i, j)] * (2.0 / (lambda[i] + lambda[j])))
}

fn jordan(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut p = a.matmul(b);
    p.axpy(1.0, &b.matmul(a));
    DenseMatrix::hermitian(&p.scale(0.5)).expect("square")
}

fn lambda_o_lambda(lambda: &[f64]) -> DenseMatrix {
    DenseMatrix::diag_real(&lambda.iter().map(|l| l * l).collect::<Vec<_>>())
}

/// Largest step `alpha` with `Lambda + alpha * D  PSD`, capped at `cap`.
fn max_step_block(lambda: &[f64], d: &DenseMatrix, cap: f64) -> f64 {
    let n = lambda.len();
    let li: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
    let m = DenseMatrix::from_fn(n, n, |i, j| d[(i, j)] * (li[i] * li[j]));
    match hermitian_eig(&m) {
        Ok(e) => {
            let min = e.values[0];
            if min < 0.0 {
                (-1.0 / min).min(cap)
            } else {
                cap
            }
        }
        Err(_) => 0.0,
    }
}

fn blocks_inner(a: &[DenseMatrix], b: &[DenseMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

fn blocks_norm(a: &[DenseMatrix]) -> f64 {
    a.iter().map(|x| x.inner(x)).sum::<f64>().sqrt()
}

fn blocks_axpy(dst: &mut [DenseMatrix], s: f64, src: &[DenseMatrix]) {
    for (d, x) in dst.iter_mut().zip(src) {
        d.axpy(s, x);
    }
}

struct Kkt<'a> {
    p: &'a LmiProblem,
    scal: Vec<BlockScaling>,
    wg: Vec<Vec<DenseMatrix>>,
    lu: RealLu,
    /// Symmetric diagonal equilibration of the reduced matrix.
    dscale: Vec<f64>,
}

impl<'a> Kkt<'a> {
    fn new(p: &'a LmiProblem, scal: Vec<BlockScaling>) -> Result<Self, LinalgError> {
        let nx = p.nx();
        let ny = p.a.len();
        let wg: Vec<Vec<DenseMatrix>> = p
            .g
            .iter()
            .map(|gi| gi.iter().zip(&scal).map(|(g, sc)| sc.w(g)).collect())
            .collect();
        let dim = nx + ny;
        let mut k = vec![0.0; dim * dim];
        for i in 0..nx {
            for j in i..nx {
                let v = blocks_inner(&wg[i], &wg[j]);
                k[i * dim + j] = v;
                k[j * dim + i] = v;
            }
        }
        for (r, row) in p.a.iter().enumerate() {
            for i in 0..nx {
                k[(nx + r) * dim + i] = row[i];
                k[i * dim + nx + r] = row[i];
            }
        }
        let dscale: Vec<f64> = (0..dim)
            .map(|i| {
                let d = k[i * dim + i].abs();
                if i < nx && d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        for i in 0..dim {
            for j in 0..dim {
                k[i * dim + j] *= dscale[i] * dscale[j];
            }
        }
        let lu = RealLu::new(&k, dim)?;
        Ok(Kkt { p, scal, wg, lu, dscale })
    }

    fn apply_g(&self, x: &[f64]) -> Vec<DenseMatrix> {
        let mut out: Vec<DenseMatrix> = self.p.blocks.iter().map(|&d| DenseMatrix::zeros(d, d)).collect();
        for (i, gi) in self.p.g.iter().enumerate() {
            if x[i] != 0.0 {
                blocks_axpy(&mut out, x[i], gi);
            }
        }
        out
    }

    /// Solves `A'uy + G'uz = r1`, `-A ux = r2`, `-G ux + (W'W)^-1 uz = r3`.
    fn solve(&self, r1: &[f64], r2: &[f64], r3: &[DenseMatrix]) -> (Vec<f64>, Vec<f64>, Vec<DenseMatrix>) {
        let nx = self.p.nx();
        let ny = self.p.a.len();
        let wr3: Vec<DenseMatrix> = r3.iter().zip(&self.scal).map(|(r, sc)| sc.w(r)).collect();
        let mut rhs = vec![0.0; nx + ny];
        for i in 0..nx {
            rhs[i] = r1[i] - blocks_inner(&self.wg[i], &wr3);
        }
        for r in 0..ny {
            rhs[nx + r] = -r2[r];
        }
        let mut sol = self.scaled_solve(&rhs);
        // One step of iterative refinement on the reduced system.
        let resid = self.reduced_residual(&sol, &rhs);
        let corr = self.scaled_solve(&resid);
        for (s, c) in sol.iter_mut().zip(&corr) {
            *s += c;
        }
        let ux = sol[..nx].to_vec();
        let uy = sol[nx..].to_vec();
        let mut t = self.apply_g(&ux);
        blocks_axpy(&mut t, 1.0, r3);
        let uz = t.iter().zip(&self.scal).map(|(y, sc)| sc.wtw(y)).collect();
        (ux, uy, uz)
    }

    fn scaled_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = rhs.iter().zip(&self.dscale).map(|(v, d)| v * d).collect();
        let x = self.lu.solve(&r);
        x.iter().zip(&self.dscale).map(|(v, d)| v * d).collect()
    }

    fn reduced_residual(&self, sol: &[f64], rhs: &[f64]) -> Vec<f64> {
        let nx = self.p.nx();
        let ny = self.p.a.len();
        let ux = &sol[..nx];
        let uy = &sol[nx..];
        let wgx: Vec<DenseMatrix> = {
            let gx = self.apply_g(ux);
            gx.iter().zip(&self.scal).map(|(y, sc)| sc.w(y)).collect()
        };
        let mut r = rhs.to_vec();
        for i in 0..nx {
            r[i] -= blocks_inner(&self.wg[i], &wgx);
            for (row_idx, row) in self.p.a.iter().enumerate() {
                r[i] -= row[i] * uy[row_idx];
            }
        }
        for (row_idx, row) in self.p.a.iter().enumerate() {
            r[nx + row_idx] -= rdot(row, ux);
        }
        let _ = ny;
        r
    }
}

fn apply_gt(p: &LmiProblem, z: &[DenseMatrix]) -> Vec<f64> {
    p.g.iter().map(|gi| blocks_inner(gi, z)).collect()
}

fn apply_a(p: &LmiProblem, x: &[f64]) -> Vec<f64> {
    p.a.iter().map(|row| rdot(row, x)).collect()
}

fn apply_at(p: &LmiProblem, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.nx()];
    for (row, &yr) in p.a.iter().zip(y) {
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * yr;
        }
    }
    out
}

/// Multiple of the tolerances accepted for the best iterate when the
/// iteration stalls before meeting them.
pub const RELAXED_FACTOR: f64 = 100.0;

pub fn solve_lmi(p: &LmiProblem, opts: &SolverOptions) -> LmiSolution {
    let nx = p.nx();
    let ny = p.a.len();
    let nu: usize = p.blocks.iter().sum();
    let ident: Vec<DenseMatrix> = p.blocks.iter().map(|&d| DenseMatrix::identity(d)).collect();

    let mut x = vec![0.0; nx];
    let mut y = vec![0.0; ny];
    let mut s = ident.clone();
    let mut z = ident.clone();
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let cnorm = rnorm(&p.c).max(1.0);
    let bnorm = rnorm(&p.b).max(1.0);
    let hnorm = blocks_norm(&p.h).max(1.0);

    let mut status = SdpStatus::NumericalTrouble;
    let mut iterations = 0;
    let mut since_best = 0usize;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<DenseMatrix>, Vec<DenseMatrix>, f64)> = None;

    for it in 0..=opts.max_iter {
        iterations = it;
        // Residuals of the embedding.
        let gx = {
            let mut out: Vec<DenseMatrix> = p.blocks.iter().map(|&d| DenseMatrix::zeros(d, d)).collect();
            for (i, gi) in p.g.iter().enumerate() {
                if x[i] != 0.0 {
                    blocks_axpy(&mut out, x[i], gi);
                }
            }
            out
        };
        let gtz = apply_gt(p, &z);
        let aty = apply_at(p, &y);
        let ax = apply_a(p, &x);
        let rx: Vec<f64> = (0..nx).map(|i| aty[i] + gtz[i] + p.c[i] * tau).collect();
        let ry: Vec<f64> = (0..ny).map(|i| p.b[i] * tau - ax[i]).collect();
        let mut rz = p.h.iter().map(|h| h.scale(tau)).collect::<Vec<_>>();
        blocks_axpy(&mut rz, -1.0, &gx);
        blocks_axpy(&mut rz, -1.0, &s);
        let ctx = rdot(&p.c, &x);
        let bty = rdot(&p.b, &y);
        let htz = blocks_inner(&p.h, &z);
        let rt = -ctx - bty - htz - kappa;
        let sz = blocks_inner(&s, &z);
        let mu = (sz + tau * kappa) / (nu as f64 + 1.0);

        let pcost = ctx / tau;
        let dcost = -(bty + htz) / tau;
        let pres = (rnorm(&ry) / bnorm).max(blocks_norm(&rz) / hnorm) / tau;
        let dres = rnorm(&rx) / cnorm / tau;
        let gap = sz / (tau * tau);
        let gscale = pcost.abs().min(dcost.abs()).max(1.0);
        let relgap_ok = gap <= opts.gap_tol * gscale || (pcost - dcost).abs() <= opts.gap_tol * gscale;
        if pres <= opts.feas_tol && dres <= opts.feas_tol && relgap_ok {
            status = SdpStatus::Optimal;
            break;
        }
        let merit = pres.max(dres).max(gap / gscale);
        if merit.is_finite() && best.as_ref().map_or(true, |b| merit < b.0) {
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > 8 {
                break;
            }
        }
        if since_best == 0 {
            best = Some((merit, x.iter().map(|v| v / tau).collect(), y.iter().map(|v| v / tau).collect(),
                s.iter().map(|m| m.scale(1.0 / tau)).collect(), z.iter().map(|m| m.scale(1.0 / tau)).collect(), tau));
        }
        // Certificate of primal infeasibility: G'z + A'y = 0, h'z + b'y < 0.
        if htz + bty < 0.0 {
            let r: Vec<f64> = (0..nx).map(|i| aty[i] + gtz[i]).collect();
            let pinf = rnorm(&r) / cnorm / (-(htz + bty));
            if pinf <= opts.feas_tol {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        // Certificate of dual infeasibility: Ax = 0, Gx + s = 0, c'x < 0.
        if ctx < 0.0 {
            let mut gs = gx.clone();
            blocks_axpy(&mut gs, 1.0, &s);
            let dinf = (rnorm(&ax) / bnorm).max(blocks_norm(&gs) / hnorm) / (-ctx);
            if dinf <= opts.feas_tol {
                status = SdpStatus::Unbounded;
                break;
            }
        }
        if it == opts.max_iter {
            break;
        }

        // Scaling.
        let scal: Result<Vec<BlockScaling>, _> = s.iter().zip(&z).map(|(sk, zk)| nt_scaling(sk, zk)).collect();
        let scal = match scal {
            Ok(v) => v,
            Err(_) => break,
        };
        let lambdas: Vec<Vec<f64>> = scal.iter().map(|sc| sc.lambda.clone()).collect();
        let kkt = match Kkt::new(p, scal) {
            Ok(k) => k,
            Err(_) => break,
        };
        let negc: Vec<f64> = p.c.iter().map(|v| -v).collect();
        let negb: Vec<f64> = p.b.iter().map(|v| -v).collect();
        let negh: Vec<DenseMatrix> = p.h.iter().map(|m| m.scale(-1.0)).collect();
        let (qx, qy, qz) = kkt.solve(&negc, &negb, &negh);
        let q_denom_part = rdot(&p.c, &qx) + rdot(&p.b, &qy) + blocks_inner(&p.h, &qz);

        // Computes a search direction for centering sigma, residual factor eta,
        // and an optional second-order correction.
        let direction = |sigma: f64, eta: f64, corr: Option<(&[DenseMatrix], &[DenseMatrix], f64)>| {
            let mut ds: Vec<DenseMatrix> = Vec::with_capacity(p.blocks.len());
            for (k, lam) in lambdas.iter().enumerate() {
                let mut d = lambda_o_lambda(lam).scale(-1.0);
                d.axpy(sigma * mu, &ident[k]);
                if let Some((sa, za, _)) = corr {
                    d.axpy(-1.0, &jordan(&sa[k], &za[k]));
                }
                ds.push(d);
            }
            let mut dk = -tau * kappa + sigma * mu;
            if let Some((_, _, tk)) = corr {
                dk -= tk;
            }
            let es: Vec<DenseMatrix> = ds.iter().zip(&lambdas).map(|(d, lam)| lyap_div(lam, d)).collect();
            let r1: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let r2: Vec<f64> = ry.iter().map(|v| -eta * v).collect();
            let mut r3: Vec<DenseMatrix> = rz.iter().map(|m| m.scale(-eta)).collect();
            let wes: Vec<DenseMatrix> = es.iter().zip(&kkt.scal).map(|(e, sc)| sc.w_inv(e)).collect();
            blocks_axpy(&mut r3, 1.0, &wes);
            let (px, py, pz) = kkt.solve(&r1, &r2, &r3);
            let num = -eta * rt + dk / tau + rdot(&p.c, &px) + rdot(&p.b, &py) + blocks_inner(&p.h, &pz);
            let den = kappa / tau - q_denom_part;
            let dtau = num / den;
            let dx: Vec<f64> = (0..nx).map(|i| px[i] + dtau * qx[i]).collect();
            let dy: Vec<f64> = (0..ny).map(|i| py[i] + dtau * qy[i]).collect();
            let mut dz = pz;
            blocks_axpy(&mut dz, dtau, &qz);
            let dkappa = (dk - kappa * dtau) / tau;
            // ds from the linearized residual equation -G dx + h dtau - ds = -eta rz.
            let mut ds = kkt.apply_g(&dx);
            for blk in ds.iter_mut() {
                *blk = blk.scale(-1.0);
            }
            blocks_axpy(&mut ds, eta, &rz);
            blocks_axpy(&mut ds, dtau, &p.h);
            let zhat: Vec<DenseMatrix> = dz.iter().zip(&kkt.scal).map(|(m, sc)| sc.w_inv_t(m)).collect();
            let shat: Vec<DenseMatrix> = ds.iter().zip(&kkt.scal).map(|(m, sc)| sc.w(m)).collect();
            (dx, dy, dz, ds, dtau, dkappa, shat, zhat)
        };

        let step_len = |shat: &[DenseMatrix], zhat: &[DenseMatrix], dtau: f64, dkappa: f64| {
            let mut a = f64::INFINITY;
            for (k, lam) in lambdas.iter().enumerate() {
                a = a.min(max_step_block(lam, &shat[k], f64::INFINITY));
                a = a.min(max_step_block(lam, &zhat[k], f64::INFINITY));
            }
            if dtau < 0.0 {
                a = a.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-kappa / dkappa);
            }
            a
        };

        let (_, _, _, _, dtau_a, dkappa_a, shat_a, zhat_a) = direction(0.0, 1.0, None);
        let alpha_a = step_len(&shat_a, &zhat_a, dtau_a, dkappa_a).min(1.0);
        let sigma = (1.0 - alpha_a).powi(3);
        let eta = 1.0 - sigma;
        let (dx, dy, dz, ds, dtau, dkappa, shat, zhat) =
            direction(sigma, eta, Some((&shat_a, &zhat_a, dtau_a * dkappa_a)));
        let alpha = (0.99 * step_len(&shat, &zhat, dtau, dkappa)).min(1.0);
        if !(alpha.is_finite() && alpha > 1e-12) {
            break;
        }
        for i in 0..nx {
            x[i] += alpha * dx[i];
        }
        for i in 0..ny {
            y[i] += alpha * dy[i];
        }
        for k in 0..s.len() {
            s[k].axpy(alpha, &ds[k]);
            s[k] = DenseMatrix::hermitian(&s[k]).expect("square");
            z[k].axpy(alpha, &dz[k]);
            z[k] = DenseMatrix::hermitian(&z[k]).expect("square");
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if !(tau.is_finite() && kappa.is_finite()) || tau <= 0.0 || kappa <= 0.0 {
            break;
        }
    }

    let finish = |x: Vec<f64>, y: Vec<f64>, s: Vec<DenseMatrix>, z: Vec<DenseMatrix>, status| {
        let pobj = rdot(&p.c, &x);
        let dobj = -(rdot(&p.b, &y) + blocks_inner(&p.h, &z));
        let gap = blocks_inner(&s, &z);
        LmiSolution {
            status,
            x,
            s,
            y,
            z,
            primal_objective: pobj,
            dual_objective: dobj,
            gap,
            iterations,
        }
    };
    match status {
        SdpStatus::Optimal => finish(
            x.iter().map(|v| v / tau).collect(),
            y.iter().map(|v| v / tau).collect(),
            s.iter().map(|m| m.scale(1.0 / tau)).collect(),
            z.iter().map(|m| m.scale(1.0 / tau)).collect(),
            status,
        ),
        SdpStatus::Infeasible => {
            // Normalize the certificate to h'z + b'y = -1.
            let sc = -1.0 / (blocks_inner(&p.h, &z) + rdot(&p.b, &y));
            finish(
                vec![0.0; nx],
                y.iter().map(|v| v * sc).collect(),
                p.blocks.iter().map(|&d| DenseMatrix::zeros(d, d)).collect(),
                z.iter().map(|m| m.scale(sc)).collect(),
                status,
            )
        }
        SdpStatus::Unbounded => {
            let sc = -1.0 / rdot(&p.c, &x);
            finish(
                x.iter().map(|v| v * sc).collect(),
                vec![0.0; ny],
                s.iter().map(|m| m.scale(sc)).collect(),
                p.blocks.iter().map(|&d| DenseMatrix::zeros(d, d)).collect(),
                status,
            )
        }
        SdpStatus::NumericalTrouble => match best {
            // Accept the best iterate when it is accurate to a small multiple of the tolerances.
            Some((merit, bx, by, bs, bz, _)) => {
                let st = if merit <= RELAXED_FACTOR * opts.feas_tol.max(opts.gap_tol) {
                    SdpStatus::Optimal
                } else {
                    status
                };
                finish(bx, by, bs, bz, st)
            }
            None => finish(vec![0.0; nx], vec![0.0; ny], ident.clone(), ident.clone(), status),
        },
    }
}

/// Affine Hermitian family `F(u) = F_0 + sum_i u_i F_i`.
#[derive(Debug, Clone)]
pub struct LmiFamily {
    pub f0: DenseMatrix,
    pub fi: Vec<DenseMatrix>,
}

impl LmiFamily {
    pub fn eval(&self, u: &[f64]) -> DenseMatrix {
        let mut m = self.f0.clone();
        for (ui, fi) in u.iter().zip(&self.fi) {
            m.axpy(*ui, fi);
        }
        m
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrictWitness {
    pub u: Vec<f64>,
    pub lambda: f64,
}

/// Maximizes `lambda` subject to `F(u) - lambda I  PSD`, `|u| <= 1`.
///
/// Returns a witness when the optimum exceeds `margin`, with `lambda`
/// recomputed as the smallest eigenvalue of `F(u)`.
pub fn strict_feasibility(
    family: &LmiFamily,
    margin: f64,
    opts: &SolverOptions,
) -> Result<Option<StrictWitness>, SdpStatus> {
    let n = family.f0.require_square().expect("square family");
    let q = family.fi.len();
    // Variables (u, lambda); minimize -lambda.
    let mut c = vec![0.0; q + 1];
    c[q] = -1.0;
    let mut p = LmiProblem::new(vec![n, q + 1], c);
    p.h[0] = family.f0.clone();
    for i in 0..q {
        p.g[i][0] = family.fi[i].scale(-1.0);
    }
    p.g[q][0] = DenseMatrix::identity(n);
    // [[1, u'], [u, I]] PSD encodes |u| <= 1.
    p.h[1] = DenseMatrix::identity(q + 1);
    for i in 0..q {
        let mut e = DenseMatrix::zeros(q + 1, q + 1);
        e[(0, i + 1)] = C64::real(-1.0);
        e[(i + 1, 0)] = C64::real(-1.0);
        p.g[i][1] = e;
    }
    let sol = solve_lmi(&p, opts);
    let finite = sol.x.iter().all(|v| v.is_finite());
    match sol.status {
        SdpStatus::Optimal => {}
        // A witness is checked directly, so an unconverged iterate still counts.
        SdpStatus::NumericalTrouble if finite => {}
        other => return Err(other),
    }
    let mut u = sol.x[..q].to_vec();
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1.0 {
        u.iter_mut().for_each(|v| *v /= norm);
    }
    let lambda = hermitian_eig(&family.eval(&u)).map_err(|_| SdpStatus::NumericalTrouble)?.values[0];
    if lambda > margin {
        Ok(Some(StrictWitness { u, lambda }))
    } else if sol.status == SdpStatus::Optimal {
        Ok(None)
    } else {
        Err(sol.status)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e11(n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        m[(0, 0)] = C64::ONE;
        m
    }

    #[test]
    fn lp_in_diagonal_blocks() {
        // min x1 + x2 s.t. x1 >= 1, x2 >= 2 (as 1x1 blocks).
        let mut p = LmiProblem::new(vec![1, 1], vec![1.0, 1.0]);
        p.h[0] = DenseMatrix::from_real(1, 1, &[-1.0]);
        p.h[1] = DenseMatrix::from_real(1, 1, &[-2.0]);
        p.g[0][0] = DenseMatrix::from_real(1, 1, &[-1.0]);
        p.g[1][1] = DenseMatrix::from_real(1, 1, &[-1.0]);
        let sol = solve_lmi(&p, &SolverOptions::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-8);
        assert!((sol.x[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_trace_form() {
        // X PSD with X11 = -1.
        let mut p = SdpProblem::new(vec![2], 0, Sense::Feasibility);
        p.add_constraint(vec![e11(2)], vec![], -1.0);
        let sol = solve_sdp(&p, &SolverOptions::default());
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn max_with_scalar_slack() {
        // max t s.t. t + s = 3 with a 1x1 PSD slack s.
        let mut p = SdpProblem::new(vec![1], 1, Sense::Maximize);
        p.objective_free = vec![1.0];
        p.add_constraint(vec![DenseMatrix::identity(1)], vec![1.0], 3.0);
        let sol = solve_sdp(&p, &SolverOptions::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.free[0] - 3.0).abs() < 1e-8);
        assert!((sol.primal_objective - 3.0).abs() < 1e-8);
    }

    #[test]
    fn unbounded_trace_form() {
        // max t s.t. t - s = 0, s PSD.
        let mut p = SdpProblem::new(vec![1], 1, Sense::Maximize);
        p.objective_free = vec![1.0];
        p.add_constraint(vec![DenseMatrix::identity(1).scale(-1.0)], vec![1.0], 0.0);
        let sol = solve_sdp(&p, &SolverOptions::default());
        assert_eq!(sol.status, SdpStatus::Unbounded);
    }

    #[test]
    fn min_eigenvalue_by_sdp() {
        // min <C, X> s.t. tr X = 1 equals the smallest eigenvalue of C.
        for complex in [false, true] {
            let mut rng = ChaCha8Rng::seed_from_u64(if complex { 5 } else { 4 });
            let n = 4;
            let raw = DenseMatrix::from_fn(n, n, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), if complex { rng.gen_range(-1.0..1.0) } else { 0.0 })
            });
            let cm = DenseMatrix::hermitian(&raw).unwrap();
            let mut p = SdpProblem::new(vec![n], 0, Sense::Minimize);
            p.objective_mats = vec![cm.clone()];
            p.add_constraint(vec![DenseMatrix::identity(n)], vec![], 1.0);
            let sol = solve_sdp(&p, &SolverOptions::default());
            assert_eq!(sol.status, SdpStatus::Optimal);
            let lmin = hermitian_eig(&cm).unwrap().values[0];
            assert!((sol.primal_objective - lmin).abs() < 1e-7, "{} vs {}", sol.primal_objective, lmin);
            assert!((sol.dual_objective - lmin).abs() < 1e-7);
        }
    }

    #[test]
    fn strict_feasibility_witness() {
        // F(u) = diag(u1, u2): the best point is u = (1,1)/sqrt2.
        let mut f1 = DenseMatrix::zeros(2, 2);
        f1[(0, 0)] = C64::ONE;
        let mut f2 = DenseMatrix::zeros(2, 2);
        f2[(1, 1)] = C64::ONE;
        let fam = LmiFamily { f0: DenseMatrix::zeros(2, 2), fi: vec![f1, f2] };
        let w = strict_feasibility(&fam, 1e-7, &SolverOptions::default()).unwrap().unwrap();
        assert!((w.lambda - 0.5f64.sqrt()).abs() < 1e-6);
        // F(u) = diag(u1, -u1) has no strictly feasible point.
        let mut g = DenseMatrix::zeros(2, 2);
        g[(0, 0)] = C64::ONE;
        g[(1, 1)] = C64::real(-1.0);
        let fam = LmiFamily { f0: DenseMatrix::zeros(2, 2), fi: vec![g] };
        assert!(strict_feasibility(&fam, 1e-7, &SolverOptions::default()).unwrap().is_none());
    }
}
