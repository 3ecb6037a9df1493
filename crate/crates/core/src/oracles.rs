//! Membership, infeasibility and boundary oracles for the convex hull of
//! the image, all expressed through the lifted semidefinite relaxation.

use crate::linalg::{hermitian_eig, rnorm, DenseMatrix, ToleranceConfig, C64};
use crate::quadmap::{border, MapError, QuadraticMap};
use crate::sdpcore::{
    solve_lmi, solve_sdp, strict_feasibility, LmiFamily, LmiProblem, SdpProblem, SdpStatus, Sense, SolverOptions,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("relaxation status {0:?} is inconclusive")]
    Indeterminate(SdpStatus),
    #[error("base point is not in the convex hull of the image")]
    NotInteriorPoint,
    #[error("the ray from the base point is unbounded in the convex hull")]
    Unbounded,
    #[error("no supporting hyperplane found (solver status {0:?})")]
    NoSupportingHyperplane(SdpStatus),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    InG,
    NotInG,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OnF {
    Yes,
    Ambiguous,
}

/// Separating vector `c` with `c.(f(x) - y0) > 0` for every `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub c: Vec<f64>,
    pub y0: Vec<f64>,
    /// Smallest eigenvalue of `[[c.A, c.b], [(c.b)*, -c.y0]]`.
    pub min_eig: f64,
}

impl InfeasibilityCertificate {
    /// Recomputes the smallest eigenvalue from the map; true when positive.
    pub fn verify(&self, map: &QuadraticMap) -> bool {
        if self.c.len() != map.m() || self.y0.len() != map.m() {
            return false;
        }
        let corner = -self.c.iter().zip(&self.y0).map(|(a, b)| a * b).sum::<f64>();
        match hermitian_eig(&map.bordered(&self.c, corner)) {
            Ok(e) => e.values[0] > 0.0,
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryPoint {
    /// Step length along the unit direction.
    pub t: f64,
    /// Step length along the direction as supplied.
    pub t_input: f64,
    pub direction: Vec<f64>,
    /// `y + t d` for the unit direction `d`.
    pub point: Vec<f64>,
    /// Eigenvalues of the optimal lifted matrix, descending.
    pub x_eigenvalues: Vec<f64>,
    pub rank_estimate: usize,
    pub on_f: OnF,
    /// Preimage recovered from a rank-one optimum.
    pub preimage: Option<Vec<C64>>,
    /// Supporting vector `c` (with `c.d = -1`) from the dual multipliers.
    pub support: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportVector {
    /// Dual optimum normalized by `c.d = -1` for the unit direction.
    pub c: Vec<f64>,
    pub c_unit: Vec<f64>,
    pub gamma: f64,
    /// Optimal value `gamma + c.y`, equal to the boundary step `t`.
    pub objective: f64,
}

/// Ratio below which the second eigenvalue of the lifted optimum is treated as zero.
pub const RANK_ONE_RATIO: f64 = 1e-6;

fn check_point(map: &QuadraticMap, y: &[f64], what: &str) -> Result<(), OracleError> {
    if y.len() != map.m() {
        return Err(OracleError::InvalidInput(format!("{what} has {} entries, expected {}", y.len(), map.m())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::InvalidInput(format!("{what} has a non-finite entry")));
    }
    Ok(())
}

fn corner_matrix(n: usize) -> DenseMatrix {
    let mut e = DenseMatrix::zeros(n + 1, n + 1);
    e[(n, n)] = C64::ONE;
    e
}

/// Decides `y0` against the relaxation `{<H_k, X> = y0_k, X_nn = 1, X PSD}`.
pub fn membership_relaxation(map: &QuadraticMap, y0: &[f64], tol: &ToleranceConfig) -> Result<Membership, OracleError> {
    check_point(map, y0, "y0")?;
    let n = map.n();
    let mut p = SdpProblem::new(vec![n + 1], 0, Sense::Feasibility);
    for (hk, yk) in map.lift().into_iter().zip(y0) {
        p.add_constraint(vec![hk], vec![], *yk);
    }
    p.add_constraint(vec![corner_matrix(n)], vec![], 1.0);
    let sol = solve_sdp(&p, &SolverOptions::from(tol));
    match sol.status {
        SdpStatus::Optimal => Ok(Membership::InG),
        SdpStatus::Infeasible => Ok(Membership::NotInG),
        other => Err(OracleError::Indeterminate(other)),
    }
}

/// Searches for `c` with `[[c.A, c.b], [(c.b)*, -c.y0]]` positive definite.
pub fn infeasibility_oracle(
    map: &QuadraticMap,
    y0: &[f64],
    tol: &ToleranceConfig,
) -> Result<Option<InfeasibilityCertificate>, OracleError> {
    check_point(map, y0, "y0")?;
    let family = LmiFamily {
        f0: DenseMatrix::zeros(map.n() + 1, map.n() + 1),
        fi: (0..map.m()).map(|k| border(&map.a()[k], &map.b()[k], -y0[k])).collect(),
    };
    match strict_feasibility(&family, tol.cert_margin, &SolverOptions::from(tol)) {
        Ok(Some(w)) => {
            let cert = InfeasibilityCertificate {
                c: w.u,
                y0: y0.to_vec(),
                min_eig: w.lambda,
            };
            Ok(if cert.verify(map) { Some(cert) } else { None })
        }
        Ok(None) => Ok(None),
        Err(st) => Err(OracleError::Indeterminate(st)),
    }
}

fn unit_direction(map: &QuadraticMap, d: &[f64]) -> Result<(Vec<f64>, f64), OracleError> {
    check_point(map, d, "d")?;
    let norm = rnorm(d);
    if norm == 0.0 {
        return Err(OracleError::InvalidInput("direction d is zero".into()));
    }
    Ok((d.iter().map(|v| v / norm).collect(), norm))
}

/// Largest `t` with `y + t d` in the relaxation, plus rank diagnostics.
pub fn boundary_oracle(map: &QuadraticMap, y: &[f64], d: &[f64], tol: &ToleranceConfig) -> Result<BoundaryPoint, OracleError> {
    check_point(map, y, "y")?;
    let (du, dnorm) = unit_direction(map, d)?;
    if let Ok(Membership::NotInG) = membership_relaxation(map, y, tol) {
        return Err(OracleError::NotInteriorPoint);
    }
    let n = map.n();
    let mut p = SdpProblem::new(vec![n + 1], 1, Sense::Maximize);
    p.objective_free = vec![1.0];
    for ((hk, yk), dk) in map.lift().into_iter().zip(y).zip(&du) {
        p.add_constraint(vec![hk], vec![-dk], *yk);
    }
    p.add_constraint(vec![corner_matrix(n)], vec![0.0], 1.0);
    let sol = solve_sdp(&p, &SolverOptions::from(tol));
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Unbounded => return Err(OracleError::Unbounded),
        SdpStatus::Infeasible => return Err(OracleError::NotInteriorPoint),
        other => return Err(OracleError::Indeterminate(other)),
    }
    let t = sol.free[0];
    let x = &sol.x[0];
    let eig = hermitian_eig(x).map_err(|e| OracleError::Map(MapError::Linalg(e)))?;
    let mut vals: Vec<f64> = eig.values.clone();
    vals.reverse();
    let top = vals[0].max(f64::MIN_POSITIVE);
    let rank_estimate = 1 + vals.iter().skip(1).filter(|&&v| v / top >= RANK_ONE_RATIO).count();
    let on_f = if rank_estimate == 1 { OnF::Yes } else { OnF::Ambiguous };
    let preimage = if rank_estimate == 1 {
        let v = eig.vector(n);
        let last = v[n];
        if last.abs() > 1e-12 {
            Some(v[..n].iter().map(|vi| *vi / last).collect())
        } else {
            None
        }
    } else {
        None
    };
    let support: Vec<f64> = sol.duals[..map.m()].iter().map(|w| -w).collect();
    Ok(BoundaryPoint {
        t,
        t_input: t / dnorm,
        point: y.iter().zip(&du).map(|(a, b)| a + t * b).collect(),
        direction: du,
        x_eigenvalues: vals,
        rank_estimate,
        on_f,
        preimage,
        support,
    })
}

/// Supporting hyperplane at the boundary point hit from `y` along `d`:
/// minimizes `gamma + c.y` over `[[c.A, c.b], [(c.b)*, gamma]] PSD`, `c.d = -1`.
pub fn get_c_from_d(map: &QuadraticMap, y: &[f64], d: &[f64], tol: &ToleranceConfig) -> Result<SupportVector, OracleError> {
    check_point(map, y, "y")?;
    let (du, _) = unit_direction(map, d)?;
    let n = map.n();
    let m = map.m();
    let mut obj = y.to_vec();
    obj.push(1.0);
    let mut p = LmiProblem::new(vec![n + 1], obj);
    for (k, hk) in map.lift().into_iter().enumerate() {
        p.g[k][0] = hk.scale(-1.0);
    }
    p.g[m][0] = corner_matrix(n).scale(-1.0);
    let mut row = du.clone();
    row.push(0.0);
    p.add_equality(row, -1.0);
    let sol = solve_lmi(&p, &SolverOptions::from(tol));
    if sol.status != SdpStatus::Optimal {
        return Err(OracleError::NoSupportingHyperplane(sol.status));
    }
    let c = sol.x[..m].to_vec();
    let c_unit = crate::linalg::rnormalize(&c).ok_or(OracleError::NoSupportingHyperplane(sol.status))?;
    Ok(SupportVector {
        c,
        c_unit,
        gamma: sol.x[m],
        objective: sol.primal_objective,
    })
}

/// One ray of a planar section sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionRow {
    pub angle: f64,
    pub t: f64,
    pub point: Vec<f64>,
    pub rank_estimate: usize,
    pub on_f: OnF,
}

/// Boundary of the convex hull within a two-dimensional affine slice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Section {
    /// Indices of the two free coordinates.
    pub free: [usize; 2],
    pub center: Vec<f64>,
    pub rows: Vec<SectionRow>,
}

fn slice_axes(map: &QuadraticMap, fixed: &[(usize, f64)]) -> Result<[usize; 2], OracleError> {
    let m = map.m();
    let mut is_fixed = vec![false; m];
    for &(k, v) in fixed {
        if k >= m {
            return Err(OracleError::InvalidInput(format!("coordinate index {k} out of range")));
        }
        if is_fixed[k] {
            return Err(OracleError::InvalidInput(format!("coordinate {k} fixed twice")));
        }
        if !v.is_finite() {
            return Err(OracleError::InvalidInput("fixed value is not finite".into()));
        }
        is_fixed[k] = true;
    }
    let free: Vec<usize> = (0..m).filter(|&k| !is_fixed[k]).collect();
    if free.len() != 2 {
        return Err(OracleError::InvalidInput(format!("a section needs exactly 2 free coordinates, got {}", free.len())));
    }
    Ok([free[0], free[1]])
}

/// Interior point of the slice: the mean of the four extreme points along
/// the free axes.
pub fn section_center(map: &QuadraticMap, fixed: &[(usize, f64)], tol: &ToleranceConfig) -> Result<Vec<f64>, OracleError> {
    let free = slice_axes(map, fixed)?;
    let n = map.n();
    let lift = map.lift();
    let mut acc = vec![0.0; map.m()];
    for &axis in &free {
        for sense in [Sense::Minimize, Sense::Maximize] {
            let mut p = SdpProblem::new(vec![n + 1], 0, sense);
            p.objective_mats = vec![lift[axis].clone()];
            for &(k, v) in fixed {
                p.add_constraint(vec![lift[k].clone()], vec![], v);
            }
            p.add_constraint(vec![corner_matrix(n)], vec![], 1.0);
            let sol = solve_sdp(&p, &SolverOptions::from(tol));
            match sol.status {
                SdpStatus::Optimal => {}
                SdpStatus::Unbounded => return Err(OracleError::Unbounded),
                SdpStatus::Infeasible => return Err(OracleError::NotInteriorPoint),
                other => return Err(OracleError::Indeterminate(other)),
            }
            for (a, hk) in acc.iter_mut().zip(&lift) {
                *a += 0.25 * hk.inner(&sol.x[0]);
            }
        }
    }
    for &(k, v) in fixed {
        acc[k] = v;
    }
    Ok(acc)
}

/// Casts `rays` equally spaced rays within the slice from its center.
pub fn sweep_section(map: &QuadraticMap, fixed: &[(usize, f64)], rays: usize, tol: &ToleranceConfig) -> Result<Section, OracleError> {
    if rays == 0 {
        return Err(OracleError::InvalidInput("number of rays must be positive".into()));
    }
    let free = slice_axes(map, fixed)?;
    let center = section_center(map, fixed, tol)?;
    let mut rows = Vec::with_capacity(rays);
    for j in 0..rays {
        let angle = 2.0 * std::f64::consts::PI * j as f64 / rays as f64;
        let mut d = vec![0.0; map.m()];
        d[free[0]] = angle.cos();
        d[free[1]] = angle.sin();
        let bp = boundary_oracle(map, &center, &d, tol)?;
        rows.push(SectionRow {
            angle,
            t: bp.t,
            point: bp.point,
            rank_estimate: bp.rank_estimate,
            on_f: bp.on_f,
        });
    }
    Ok(Section { free, center, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::FieldTag;

    /// `f(x) = (|x|^2, 2 x1, 2 x2)` on `R^2`: image is a convex paraboloid.
    fn paraboloid() -> QuadraticMap {
        let z = DenseMatrix::zeros(2, 2);
        QuadraticMap::new(
            FieldTag::Real,
            vec![DenseMatrix::identity(2), z.clone(), z],
            vec![
                vec![C64::ZERO; 2],
                vec![C64::ONE, C64::ZERO],
                vec![C64::ZERO, C64::ONE],
            ],
            1e-9,
        )
        .unwrap()
    }

    #[test]
    fn membership_on_paraboloid() {
        let f = paraboloid();
        let tol = ToleranceConfig::default();
        assert_eq!(membership_relaxation(&f, &[2.0, 0.5, 0.5], &tol).unwrap(), Membership::InG);
        assert_eq!(membership_relaxation(&f, &[0.1, 2.0, 0.0], &tol).unwrap(), Membership::NotInG);
    }

    #[test]
    fn infeasibility_certificate_verifies() {
        let f = paraboloid();
        let tol = ToleranceConfig::default();
        let cert = infeasibility_oracle(&f, &[-1.0, 0.0, 0.0], &tol).unwrap().unwrap();
        assert!(cert.verify(&f));
        assert!(cert.min_eig > 0.0);
        assert!(infeasibility_oracle(&f, &[2.0, 0.0, 0.0], &tol).unwrap().is_none());
    }

    #[test]
    fn boundary_of_paraboloid() {
        // From (2, 0, 0) towards -y1 the boundary is y1 = 0 at t = 2.
        let f = paraboloid();
        let tol = ToleranceConfig::default();
        let bp = boundary_oracle(&f, &[2.0, 0.0, 0.0], &[-3.0, 0.0, 0.0], &tol).unwrap();
        assert!((bp.t - 2.0).abs() < 1e-6, "t = {}", bp.t);
        assert!((bp.t_input - 2.0 / 3.0).abs() < 1e-6);
        assert_eq!(bp.on_f, OnF::Yes);
        let sv = get_c_from_d(&f, &[2.0, 0.0, 0.0], &[-3.0, 0.0, 0.0], &tol).unwrap();
        assert!((sv.objective - bp.t).abs() < 1e-6);
        assert!((sv.c_unit[0] - 1.0).abs() < 1e-6);
        // Upward the paraboloid is unbounded.
        assert_eq!(boundary_oracle(&f, &[2.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &tol).unwrap_err(), OracleError::Unbounded);
        assert!(matches!(
            boundary_oracle(&f, &[2.0, 0.0, 0.0], &[0.0; 3], &tol).unwrap_err(),
            OracleError::InvalidInput(_)
        ));
        assert_eq!(
            boundary_oracle(&f, &[0.0, 3.0, 0.0], &[1.0, 0.0, 0.0], &tol).unwrap_err(),
            OracleError::NotInteriorPoint
        );
    }
}
