//! Infeasible-start primal-dual path-following interior-point method
//! with Nesterov-Todd scaling on dense blocks and free variables
//! handled natively in the KKT system.
//!
//! The search direction solves, per iteration,
//!
//! ```text
//! A_s ds + A_u du            = r_p
//! A_s^T dy + svec(dZ)        = r_d
//! A_u^T dy                   = r_f
//! dS + W dZ W                = sigma*mu*Z^-1 - S - corr
//! ```
//!
//! reduced to the saddle system `[M A_u; A_u^T -delta] (dy, du)` with
//! the Schur complement `M = A_s (W (.) W) A_s^T`, which is symmetric
//! positive definite under NT scaling.

use nalgebra::{DMatrix, DVector};

use super::presolve::{presolve, PresolveOutcome, Presolved};
use super::{
    dvec, smat, svec, svec_len, verify_ray, Constraint, InfeasibilityCertificate, Residuals,
    SDPProblem, SDPSolution, Sense, Status, SymMatrix,
};
use crate::tolerances::MAX_ITER;

const STALL_LIMIT: usize = 6;
const RAY_QUALITY: f64 = 1e-7;

pub(crate) fn solve_minimize(prob: &SDPProblem, tol: f64) -> SDPSolution {
    if let Some(fr) = facial_reduce(prob) {
        return fr.solve(prob, tol);
    }
    if prob.n_free > 0 {
        return solve_with_free_elimination(prob, tol);
    }
    let pres = match presolve(prob) {
        PresolveOutcome::Inconsistent { ray } => return infeasible_from_ray(prob, ray, Vec::new()),
        PresolveOutcome::Reduced(p) => p,
    };
    if pres.a.is_empty() {
        return solve_unconstrained(prob, &pres);
    }
    Ipm::new(prob, &pres, tol).run()
}

/// Facial reduction: a constraint `sum_l A_l . X_l = 0` whose
/// coefficient matrices are all PSD (or all NSD) forces each `X_l`
/// onto the kernel of `A_l`. Gram coefficient-matching systems
/// produce such rows systematically (odd top-degree monomials), which
/// empties the primal interior and stalls interior-point iterations;
/// shrinking the blocks onto the face restores strict feasibility.
struct FacialReduction {
    /// Per original block: orthonormal basis of the face (k x k',
    /// possibly k' = 0).
    transforms: Vec<DMatrix<f64>>,
    /// Original row indices consumed as face constraints, with the
    /// sign that made their matrices PSD.
    face_rows: Vec<(usize, f64)>,
    /// Surviving original row indices, in order.
    kept_rows: Vec<usize>,
    reduced: SDPProblem,
}

fn block_mats(prob: &SDPProblem, row: &Constraint) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(prob.block_dims.len());
    let mut off = 0;
    for &k in &prob.block_dims {
        let len = svec_len(k);
        out.push(
            smat(&row.coeffs[off..off + len], k)
                .expect("internal")
                .to_dmatrix(),
        );
        off += len;
    }
    out
}

fn facial_reduce(prob: &SDPProblem) -> Option<FacialReduction> {
    let ns = prob.total_svec();
    let m = prob.constraints.len();
    let mut transforms: Vec<DMatrix<f64>> = prob
        .block_dims
        .iter()
        .map(|&k| DMatrix::identity(k, k))
        .collect();
    let mut consumed = vec![false; m];
    let mut face_rows: Vec<(usize, f64)> = Vec::new();

    let scale = prob
        .constraints
        .iter()
        .flat_map(|c| c.coeffs.iter())
        .fold(0.0_f64, |a, &v| a.max(v.abs()))
        .max(1.0);

    loop {
        let mut progressed = false;
        for i in 0..m {
            if consumed[i] {
                continue;
            }
            let row = &prob.constraints[i];
            if row.rhs.abs() > 1e-12 * scale {
                continue;
            }
            if row.coeffs[ns..].iter().any(|&v| v.abs() > 1e-14 * scale) {
                continue;
            }
            // transformed matrices on the current face
            let mats = block_mats(prob, row);
            let reduced_mats: Vec<DMatrix<f64>> = mats
                .iter()
                .zip(&transforms)
                .map(|(a, q)| q.transpose() * a * q)
                .collect();
            let mut max_eig = f64::NEG_INFINITY;
            let mut min_eig = f64::INFINITY;
            let mut eigs = Vec::with_capacity(reduced_mats.len());
            for b in &reduced_mats {
                if b.nrows() == 0 {
                    eigs.push(None);
                    continue;
                }
                let sym = (b + b.transpose()) * 0.5;
                let e = nalgebra::SymmetricEigen::new(sym);
                for &l in e.eigenvalues.iter() {
                    max_eig = max_eig.max(l);
                    min_eig = min_eig.min(l);
                }
                eigs.push(Some(e));
            }
            if !max_eig.is_finite() || max_eig.max(-min_eig) <= 1e-13 * scale {
                continue; // effectively a null row on the face
            }
            let span = max_eig.max(-min_eig);
            let sign = if min_eig >= -1e-10 * span {
                1.0
            } else if max_eig <= 1e-10 * span {
                -1.0
            } else {
                continue; // indefinite row: not a face certificate
            };
            // kernel of the sign-corrected matrix per block
            for (l, e) in eigs.into_iter().enumerate() {
                let Some(e) = e else { continue };
                let dim = e.eigenvalues.len();
                let keep: Vec<usize> = (0..dim)
                    .filter(|&j| sign * e.eigenvalues[j] <= 1e-9 * span)
                    .collect();
                if keep.len() == dim {
                    continue;
                }
                let mut k_basis = DMatrix::zeros(dim, keep.len());
                for (col, &j) in keep.iter().enumerate() {
                    k_basis.set_column(col, &e.eigenvectors.column(j));
                }
                transforms[l] = &transforms[l] * k_basis;
            }
            consumed[i] = true;
            face_rows.push((i, sign));
            progressed = true;
        }
        if !progressed {
            break;
        }
    }

    if face_rows.is_empty() {
        return None;
    }

    // assemble the reduced problem over the surviving blocks
    let kept_blocks: Vec<usize> = (0..prob.block_dims.len())
        .filter(|&l| transforms[l].ncols() > 0)
        .collect();
    let reduced_dims: Vec<usize> = kept_blocks.iter().map(|&l| transforms[l].ncols()).collect();
    let project_vec = |coeffs: &[f64]| -> Vec<f64> {
        let mut out = Vec::new();
        let mut off = 0;
        for (l, &k) in prob.block_dims.iter().enumerate() {
            let len = svec_len(k);
            if transforms[l].ncols() > 0 {
                let a = smat(&coeffs[off..off + len], k).expect("internal").to_dmatrix();
                let b = transforms[l].transpose() * a * &transforms[l];
                out.extend(svec(&SymMatrix::from_dmatrix(&b)));
            }
            off += len;
        }
        out.extend_from_slice(&coeffs[ns..]);
        out
    };

    let mut kept_rows = Vec::new();
    let mut constraints = Vec::new();
    for i in 0..m {
        if consumed[i] {
            continue;
        }
        kept_rows.push(i);
        constraints.push(Constraint {
            coeffs: project_vec(&prob.constraints[i].coeffs),
            rhs: prob.constraints[i].rhs,
        });
    }
    let objective = if prob.objective.is_empty() {
        Vec::new()
    } else {
        project_vec(&prob.objective)
    };
    let reduced = SDPProblem {
        block_dims: reduced_dims,
        n_free: prob.n_free,
        objective,
        constraints,
        sense: Sense::Minimize,
    };
    Some(FacialReduction {
        transforms,
        face_rows,
        kept_rows,
        reduced,
    })
}

impl FacialReduction {
    fn lift_blocks(&self, prob: &SDPProblem, blocks: &[SymMatrix]) -> Vec<SymMatrix> {
        let mut out = Vec::with_capacity(prob.block_dims.len());
        let mut idx = 0;
        for (l, &k) in prob.block_dims.iter().enumerate() {
            if self.transforms[l].ncols() == 0 {
                out.push(SymMatrix::zeros(k));
            } else {
                let lifted = &self.transforms[l] * blocks[idx].to_dmatrix()
                    * self.transforms[l].transpose();
                out.push(SymMatrix::from_dmatrix(&lifted));
                idx += 1;
            }
        }
        out
    }

    fn lift_dual(&self, m: usize, dual: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (&orig, &v) in self.kept_rows.iter().zip(dual) {
            out[orig] = v;
        }
        out
    }

    fn solve(&self, prob: &SDPProblem, tol: f64) -> SDPSolution {
        if self.reduced.block_dims.is_empty() && self.reduced.n_free == 0 {
            // everything forced to zero: feasible iff all rhs vanish
            let bad = self
                .reduced
                .constraints
                .iter()
                .position(|c| c.rhs.abs() > 1e-10);
            return match bad {
                None => SDPSolution {
                    status: Status::Optimal,
                    blocks: prob.block_dims.iter().map(|&k| SymMatrix::zeros(k)).collect(),
                    free: Vec::new(),
                    dual: vec![0.0; prob.constraints.len()],
                    objective: 0.0,
                    dual_objective: 0.0,
                    residuals: Residuals {
                        primal: 0.0,
                        dual: 0.0,
                        gap: 0.0,
                    },
                    infeasibility: None,
                    warnings: vec!["facial reduction fixed every variable".into()],
                },
                Some(j) => {
                    let mut ray = vec![0.0; prob.constraints.len()];
                    let orig = self.kept_rows[j];
                    ray[orig] = 1.0 / self.reduced.constraints[j].rhs;
                    self.lift_infeasible(prob, ray, Vec::new())
                }
            };
        }
        let sol = solve_minimize(&self.reduced, tol);
        match sol.status {
            Status::Optimal => SDPSolution {
                status: Status::Optimal,
                blocks: self.lift_blocks(prob, &sol.blocks),
                free: sol.free,
                dual: self.lift_dual(prob.constraints.len(), &sol.dual),
                objective: sol.objective,
                dual_objective: sol.dual_objective,
                residuals: sol.residuals,
                infeasibility: None,
                warnings: sol.warnings,
            },
            Status::Infeasible => {
                let ray = sol
                    .infeasibility
                    .as_ref()
                    .map(|c| self.lift_dual(prob.constraints.len(), &c.ray))
                    .unwrap_or_default();
                self.lift_infeasible(prob, ray, sol.warnings)
            }
            Status::Unbounded => sol,
            Status::Inaccurate => {
                let mut out = sol;
                if !out.blocks.is_empty() {
                    out.blocks = self.lift_blocks(prob, &out.blocks);
                }
                out.dual = self.lift_dual(prob.constraints.len(), &out.dual);
                out
            }
        }
    }

    /// A reduced-space Farkas ray stays valid on the face; adding
    /// large negative multiples of the face rows (whose matrices are
    /// sign-definite with zero rhs) extends it to the full cone.
    fn lift_infeasible(
        &self,
        prob: &SDPProblem,
        mut ray: Vec<f64>,
        mut warnings: Vec<String>,
    ) -> SDPSolution {
        let base = ray.iter().fold(0.0_f64, |a, &v| a.max(v.abs())).max(1.0);
        let mut t = 1.0;
        for _ in 0..16 {
            for &(row, sign) in &self.face_rows {
                ray[row] = -sign * t * base;
            }
            let (b_dot, psd, free) = verify_ray(prob, &ray);
            if b_dot > 0.0 && psd.max(free) <= RAY_QUALITY * b_dot.max(1.0) * (1.0 + t * base) {
                return infeasible_from_ray(prob, ray, warnings);
            }
            t *= 16.0;
        }
        warnings.push("could not lift an infeasibility certificate across the face".into());
        let mut out = SDPSolution::inaccurate("facial lift of Farkas ray failed");
        out.warnings = warnings;
        out
    }
}

/// Eliminates the free variables exactly before the interior-point
/// iteration: with `A_u = U S V^T`, constraints are split into the
/// range of `A_u` (which determines `u` from the cone variables) and
/// its orthogonal complement (a pure cone problem). This keeps the
/// late-stage KKT systems definite and removes the free-variable dual
/// residual floor entirely.
fn solve_with_free_elimination(prob: &SDPProblem, tol: f64) -> SDPSolution {
    let ns = prob.total_svec();
    let nf = prob.n_free;
    let m = prob.constraints.len();
    let a_s = DMatrix::from_fn(m, ns, |i, j| prob.constraints[i].coeffs[j]);
    let a_u = DMatrix::from_fn(m, nf, |i, j| prob.constraints[i].coeffs[ns + j]);
    let b = DVector::from_fn(m, |i, _| prob.constraints[i].rhs);
    let c_s = if prob.objective.is_empty() {
        DVector::zeros(ns)
    } else {
        DVector::from_column_slice(&prob.objective[..ns])
    };
    let c_u = if prob.objective.is_empty() {
        DVector::zeros(nf)
    } else {
        DVector::from_column_slice(&prob.objective[ns..])
    };

    let svd = nalgebra::SVD::new(a_u.clone(), true, true);
    let u_full = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let sig = &svd.singular_values;
    let sig_max = sig.iter().cloned().fold(0.0_f64, f64::max);
    let rank = sig.iter().filter(|&&s| s > 1e-12 * sig_max.max(1.0)).count();

    // objective component along the null space of A_u rides free
    let vc = v_t * &c_u; // length min(m, nf), coords in V basis
    let mut null_component = 0.0_f64;
    for i in rank..vc.len() {
        null_component = null_component.max(vc[i].abs());
    }
    if nf > v_t.nrows() {
        // thin SVD: coordinates beyond min(m, nf) are pure null space
        let vv = v_t.transpose() * v_t; // nf x nf projector onto row space
        let resid = &c_u - &vv * &c_u;
        null_component = null_component.max(resid.amax());
    }
    if null_component > 1e-10 * (1.0 + c_u.amax()) {
        let mut out = SDPSolution::inaccurate(
            "free variable direction with nonzero objective and no constraints",
        );
        out.status = Status::Unbounded;
        return out;
    }

    // pinv(A_u) w = V_r S_r^-1 U_r^T w
    let u_r = u_full.columns(0, rank).into_owned();
    let apply_pinv = |w: &DVector<f64>| -> DVector<f64> {
        let mut t = u_r.transpose() * w; // rank
        for i in 0..rank {
            t[i] /= sig[i];
        }
        v_t.rows(0, rank).transpose() * t
    };

    // orthonormal basis W2 of the complement of range(A_u): the
    // reduced system W2^T A_s x = W2^T b has full row dimension
    // m - rank with no residual near-dependence from the projection
    let proj = DMatrix::identity(m, m) - &u_r * u_r.transpose();
    let peig = nalgebra::SymmetricEigen::new(proj);
    let mut w2_cols: Vec<usize> = Vec::new();
    for i in 0..m {
        if peig.eigenvalues[i] > 0.5 {
            w2_cols.push(i);
        }
    }
    let mut w2 = DMatrix::zeros(m, w2_cols.len());
    for (c, &i) in w2_cols.iter().enumerate() {
        w2.set_column(c, &peig.eigenvectors.column(i));
    }

    let reduced_a = w2.transpose() * &a_s; // (m - rank) x ns
    let reduced_b = w2.transpose() * &b;

    // reduced objective and its constant offset
    let pinv_t_cu = {
        let mut t = v_t.rows(0, rank) * &c_u; // rank
        for i in 0..rank {
            t[i] /= sig[i];
        }
        &u_r * t // m-vector: (pinv)^T c_u
    };
    let c_red = &c_s - a_s.transpose() * &pinv_t_cu;
    let offset = pinv_t_cu.dot(&b);

    let reduced = SDPProblem {
        block_dims: prob.block_dims.clone(),
        n_free: 0,
        objective: c_red.as_slice().to_vec(),
        constraints: (0..reduced_a.nrows())
            .map(|i| Constraint {
                coeffs: (0..ns).map(|j| reduced_a[(i, j)]).collect(),
                rhs: reduced_b[i],
            })
            .collect(),
        sense: Sense::Minimize,
    };
    let sol = solve_minimize(&reduced, tol);

    let lift_dual = |red_dual: &[f64]| -> DVector<f64> {
        let yhat = DVector::from_column_slice(red_dual);
        &w2 * yhat + &pinv_t_cu
    };
    match sol.status {
        Status::Optimal => {
            let mut s_vec = DVector::zeros(ns);
            let mut off = 0;
            for blk in &sol.blocks {
                for (t, v) in svec(blk).into_iter().enumerate() {
                    s_vec[off + t] = v;
                }
                off += svec_len(blk.dim());
            }
            let u_star = apply_pinv(&(&b - &a_s * &s_vec));
            let y = lift_dual(&sol.dual);
            let objective = sol.objective + offset;
            let dual_objective = sol.dual_objective + offset;
            SDPSolution {
                status: Status::Optimal,
                blocks: sol.blocks,
                free: u_star.as_slice().to_vec(),
                dual: y.as_slice().to_vec(),
                objective,
                dual_objective,
                residuals: sol.residuals,
                infeasibility: None,
                warnings: sol.warnings,
            }
        }
        Status::Infeasible => {
            let ray = sol
                .infeasibility
                .as_ref()
                .map(|c| (&w2 * DVector::from_column_slice(&c.ray)).as_slice().to_vec())
                .unwrap_or_else(|| vec![0.0; m]);
            infeasible_from_ray(prob, ray, sol.warnings)
        }
        Status::Unbounded => sol,
        Status::Inaccurate => {
            // map what we can so callers can verify the iterate
            let mut out = sol;
            if !out.blocks.is_empty() {
                let mut s_vec = DVector::zeros(ns);
                let mut off = 0;
                for blk in &out.blocks {
                    for (t, v) in svec(blk).into_iter().enumerate() {
                        s_vec[off + t] = v;
                    }
                    off += svec_len(blk.dim());
                }
                let u_star = apply_pinv(&(&b - &a_s * &s_vec));
                out.free = u_star.as_slice().to_vec();
                out.objective += offset;
                out.dual_objective += offset;
            }
            if out.dual.len() == w2.ncols() {
                out.dual = lift_dual(&out.dual).as_slice().to_vec();
            } else {
                out.dual = vec![0.0; m];
            }
            out
        }
    }
}

/// Feasibility via slack minimization: variables `S_l = X_l + t I`,
/// one extra 1x1 block bounding `t >= -1`, objective `min t`.
///
/// Facial reduction runs first on the raw equality system: face rows
/// stay recognizable only before the slack variable touches every
/// row, and solving on the face keeps the barrier geometry sane.
pub(crate) fn solve_feasibility(prob: &SDPProblem, tol: f64, feas_tol: f64) -> SDPSolution {
    if let Some(fr) = facial_reduce(prob) {
        let mut reduced = fr.reduced.clone();
        reduced.sense = Sense::Feasibility;
        reduced.objective = Vec::new();
        if reduced.block_dims.is_empty() && reduced.n_free == 0 {
            return fr.solve(prob, tol);
        }
        let sol = solve_feasibility(&reduced, tol, feas_tol);
        return match sol.status {
            Status::Optimal => SDPSolution {
                status: Status::Optimal,
                blocks: fr.lift_blocks(prob, &sol.blocks),
                free: sol.free,
                dual: fr.lift_dual(prob.constraints.len(), &sol.dual),
                objective: sol.objective,
                dual_objective: sol.dual_objective,
                residuals: sol.residuals,
                infeasibility: None,
                warnings: sol.warnings,
            },
            Status::Infeasible => {
                let ray = sol
                    .infeasibility
                    .as_ref()
                    .map(|c| fr.lift_dual(prob.constraints.len(), &c.ray))
                    .unwrap_or_default();
                fr.lift_infeasible(prob, ray, sol.warnings)
            }
            _ => sol,
        };
    }
    let ns = prob.total_svec();
    let nf = prob.n_free;
    let m = prob.constraints.len();
    let width_aug = ns + 1 + nf + 1; // slack block coord, then frees, then t

    let mut constraints = Vec::with_capacity(m + 1);
    for c in &prob.constraints {
        let mut coeffs = Vec::with_capacity(width_aug);
        coeffs.extend_from_slice(&c.coeffs[..ns]);
        coeffs.push(0.0);
        coeffs.extend_from_slice(&c.coeffs[ns..]);
        // sum of Tr(A_{i,l}) = sum of the diagonal svec coordinates
        let mut theta = 0.0;
        let mut off = 0;
        for &k in &prob.block_dims {
            let mut idx = off;
            for i in 0..k {
                theta += c.coeffs[idx];
                idx += k - i;
            }
            off += svec_len(k);
        }
        coeffs.push(-theta);
        constraints.push(Constraint {
            coeffs,
            rhs: c.rhs,
        });
    }
    // slack bound: (t + 1) - t = 1 with the 1x1 block holding t+1
    let mut bound = vec![0.0; width_aug];
    bound[ns] = 1.0;
    bound[width_aug - 1] = -1.0;
    constraints.push(Constraint {
        coeffs: bound,
        rhs: 1.0,
    });

    let mut objective = vec![0.0; width_aug];
    objective[width_aug - 1] = 1.0;

    let mut block_dims = prob.block_dims.clone();
    block_dims.push(1);
    let aug = SDPProblem {
        block_dims,
        n_free: nf + 1,
        objective,
        constraints,
        sense: Sense::Minimize,
    };

    let sol = solve_minimize(&aug, tol);
    match sol.status {
        Status::Optimal => {
            let t_star = sol.free[nf];
            let mut warnings = sol.warnings.clone();
            if t_star <= feas_tol {
                // recover X_l = S_l - t* I
                let blocks: Vec<SymMatrix> = sol.blocks[..prob.block_dims.len()]
                    .iter()
                    .map(|s| {
                        let mut x = s.clone();
                        for i in 0..x.dim() {
                            let v = x.entry(i, i) - t_star;
                            x.set(i, i, v);
                        }
                        x
                    })
                    .collect();
                SDPSolution {
                    status: Status::Optimal,
                    blocks,
                    free: sol.free[..nf].to_vec(),
                    dual: sol.dual[..m].to_vec(),
                    objective: t_star,
                    dual_objective: sol.dual_objective,
                    residuals: sol.residuals,
                    infeasibility: None,
                    warnings,
                }
            } else {
                // dual multipliers on the original rows certify infeasibility
                let ray = sol.dual[..m].to_vec();
                let (b_dot, psd_violation, free_violation) = verify_ray(prob, &ray);
                let scale = ray.iter().fold(0.0_f64, |a, &v| a.max(v.abs())).max(1.0);
                if b_dot > 0.0 && psd_violation.max(free_violation) <= RAY_QUALITY * scale * b_dot.max(1.0)
                {
                    SDPSolution {
                        status: Status::Infeasible,
                        blocks: Vec::new(),
                        free: Vec::new(),
                        dual: ray.clone(),
                        objective: t_star,
                        dual_objective: sol.dual_objective,
                        residuals: sol.residuals,
                        infeasibility: Some(InfeasibilityCertificate {
                            ray,
                            objective: b_dot,
                            psd_violation,
                            free_violation,
                        }),
                        warnings,
                    }
                } else {
                    warnings.push(format!(
                        "slack {t_star:.3e} positive but certificate quality poor \
                         (b.y={b_dot:.3e}, psd={psd_violation:.3e}, free={free_violation:.3e})"
                    ));
                    let mut out = SDPSolution::inaccurate("infeasibility certificate failed to verify");
                    out.warnings = warnings;
                    out.objective = t_star;
                    out
                }
            }
        }
        Status::Infeasible => {
            // equality system alone is inconsistent
            let ray = sol
                .infeasibility
                .as_ref()
                .map(|c| c.ray[..m].to_vec())
                .unwrap_or_default();
            infeasible_from_ray(prob, ray, sol.warnings)
        }
        Status::Unbounded => {
            let mut out = SDPSolution::inaccurate("slack problem reported unbounded");
            out.warnings.extend(sol.warnings);
            out
        }
        Status::Inaccurate => {
            // a stalled iterate can still settle the feasibility
            // question when the object it returns verifies on its own:
            // a near-feasible point with nonpositive slack, or a dual
            // ray that passes the Farkas check
            if sol.free.len() == nf + 1 && sol.residuals.primal <= 1e-7 {
                let t_star = sol.free[nf];
                if t_star.is_finite() && t_star <= feas_tol {
                    let blocks: Vec<SymMatrix> = sol.blocks[..prob.block_dims.len()]
                        .iter()
                        .map(|s| {
                            let mut x = s.clone();
                            for i in 0..x.dim() {
                                let v = x.entry(i, i) - t_star;
                                x.set(i, i, v);
                            }
                            x
                        })
                        .collect();
                    let mut warnings = sol.warnings.clone();
                    warnings.push("feasibility accepted from a reduced-precision iterate".into());
                    return SDPSolution {
                        status: Status::Optimal,
                        blocks,
                        free: sol.free[..nf].to_vec(),
                        dual: sol.dual[..m].to_vec(),
                        objective: t_star,
                        dual_objective: sol.dual_objective,
                        residuals: sol.residuals,
                        infeasibility: None,
                        warnings,
                    };
                }
            }
            if sol.dual.len() >= m {
                let ray = sol.dual[..m].to_vec();
                let (b_dot, psd, free_v) = verify_ray(prob, &ray);
                if b_dot > feas_tol.max(1e-6)
                    && psd.max(free_v) <= 1e-5 * b_dot + 1e-9
                {
                    let mut warnings = sol.warnings.clone();
                    warnings
                        .push("infeasibility accepted from a verified dual ray after stall".into());
                    return SDPSolution {
                        status: Status::Infeasible,
                        blocks: Vec::new(),
                        free: Vec::new(),
                        dual: ray.clone(),
                        objective: sol.objective,
                        dual_objective: sol.dual_objective,
                        residuals: sol.residuals,
                        infeasibility: Some(InfeasibilityCertificate {
                            ray,
                            objective: b_dot,
                            psd_violation: psd,
                            free_violation: free_v,
                        }),
                        warnings,
                    };
                }
            }
            sol
        }
    }
}

fn infeasible_from_ray(prob: &SDPProblem, ray: Vec<f64>, mut warnings: Vec<String>) -> SDPSolution {
    let (b_dot, psd_violation, free_violation) = verify_ray(prob, &ray);
    let scale = ray.iter().fold(0.0_f64, |a, &v| a.max(v.abs())).max(1.0);
    if !(b_dot > 0.0)
        || psd_violation.max(free_violation) > RAY_QUALITY * scale * b_dot.max(1.0)
    {
        warnings.push("inconsistency ray failed verification".into());
        let mut out = SDPSolution::inaccurate("inconsistent rows but certificate poor");
        out.warnings = warnings;
        return out;
    }
    SDPSolution {
        status: Status::Infeasible,
        blocks: Vec::new(),
        free: Vec::new(),
        dual: ray.clone(),
        objective: f64::NAN,
        dual_objective: f64::NAN,
        residuals: Residuals {
            primal: f64::NAN,
            dual: f64::NAN,
            gap: f64::NAN,
        },
        infeasibility: Some(InfeasibilityCertificate {
            ray,
            objective: b_dot,
            psd_violation,
            free_violation,
        }),
        warnings,
    }
}

fn solve_unconstrained(prob: &SDPProblem, pres: &Presolved) -> SDPSolution {
    // no equality rows: optimum is 0 at the origin unless the objective
    // has a strictly improving ray
    let ns = prob.total_svec();
    let c = if prob.objective.is_empty() {
        vec![0.0; prob.width()]
    } else {
        prob.objective.clone()
    };
    if c[ns..].iter().any(|&v| v != 0.0) {
        let mut out = SDPSolution::inaccurate("unbounded: free objective with no constraints");
        out.status = Status::Unbounded;
        return out;
    }
    let mut off = 0;
    for &k in &prob.block_dims {
        let len = svec_len(k);
        let m = smat(&c[off..off + len], k).expect("internal");
        if super::eigmin(&m).0 < -1e-12 {
            let mut out = SDPSolution::inaccurate("unbounded: objective indefinite on cone");
            out.status = Status::Unbounded;
            return out;
        }
        off += len;
    }
    SDPSolution {
        status: Status::Optimal,
        blocks: prob.block_dims.iter().map(|&k| SymMatrix::zeros(k)).collect(),
        free: vec![0.0; prob.n_free],
        dual: vec![0.0; prob.constraints.len()],
        objective: 0.0,
        dual_objective: 0.0,
        residuals: Residuals {
            primal: 0.0,
            dual: 0.0,
            gap: 0.0,
        },
        infeasibility: None,
        warnings: pres.warnings.clone(),
    }
}

struct Ipm<'a> {
    prob: &'a SDPProblem,
    pres: &'a Presolved,
    dims: Vec<usize>,
    ns: usize,
    nf: usize,
    m: usize,
    /// Per row, per block: the constraint coefficient matrix.
    a_mats: Vec<Vec<DMatrix<f64>>>,
    /// m x (ns + nf) dense constraint matrix (scaled rows).
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    c_mats: Vec<DMatrix<f64>>,
    tol: f64,
}

struct State {
    s: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    u: DVector<f64>,
    y: DVector<f64>,
}

struct Direction {
    ds: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
    du: DVector<f64>,
    dy: DVector<f64>,
}

impl<'a> Ipm<'a> {
    fn new(prob: &'a SDPProblem, pres: &'a Presolved, tol: f64) -> Self {
        let dims = prob.block_dims.clone();
        let ns = prob.total_svec();
        let nf = prob.n_free;
        let m = pres.a.len();
        let a = DMatrix::from_fn(m, ns + nf, |i, j| pres.a[i][j]);
        let b = dvec(&pres.b);
        let c = if prob.objective.is_empty() {
            DVector::zeros(ns + nf)
        } else {
            dvec(&prob.objective)
        };
        let mut a_mats = Vec::with_capacity(m);
        for row in &pres.a {
            let mut per_block = Vec::with_capacity(dims.len());
            let mut off = 0;
            for &k in &dims {
                let len = svec_len(k);
                per_block.push(smat(&row[off..off + len], k).expect("internal").to_dmatrix());
                off += len;
            }
            a_mats.push(per_block);
        }
        let mut c_mats = Vec::with_capacity(dims.len());
        let mut off = 0;
        for &k in &dims {
            let len = svec_len(k);
            c_mats.push(
                smat(&c.as_slice()[off..off + len], k)
                    .expect("internal")
                    .to_dmatrix(),
            );
            off += len;
        }
        Ipm {
            prob,
            pres,
            dims,
            ns,
            nf,
            m,
            a_mats,
            a,
            b,
            c,
            c_mats,
            tol,
        }
    }

    fn svec_concat(&self, mats: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.ns);
        let mut off = 0;
        for m in mats {
            let sm = svec(&SymMatrix::from_dmatrix(m));
            for (i, v) in sm.iter().enumerate() {
                out[off + i] = *v;
            }
            off += sm.len();
        }
        out
    }

    fn mats_from_svec(&self, v: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out = Vec::with_capacity(self.dims.len());
        let mut off = 0;
        for &k in &self.dims {
            let len = svec_len(k);
            out.push(
                smat(&v.as_slice()[off..off + len], k)
                    .expect("internal")
                    .to_dmatrix(),
            );
            off += len;
        }
        out
    }

    fn total_dim(&self) -> f64 {
        self.dims.iter().map(|&k| k as f64).sum()
    }

    fn run(self) -> SDPSolution {
        if std::env::var_os("SHADOWHULL_IPM_TRACE").is_some() {
            eprintln!(
                "ipm start: dims {:?}, m {}, nf {}, |c| {:.3e}, c_mats[0] amax {:.3e}",
                self.dims,
                self.m,
                self.nf,
                self.c.amax(),
                self.c_mats[0].amax()
            );
        }
        let n_total = self.total_dim();
        let b_norm = self.b.amax().max(1.0);
        let c_norm = self.c.amax().max(1.0);
        let eta_p = 10.0 * b_norm.sqrt().max(1.0);
        let eta_d = 10.0 * c_norm.sqrt().max(1.0);

        let mut st = State {
            s: self.dims.iter().map(|&k| DMatrix::identity(k, k) * eta_p).collect(),
            z: self.dims.iter().map(|&k| DMatrix::identity(k, k) * eta_d).collect(),
            u: DVector::zeros(self.nf),
            y: DVector::zeros(self.m),
        };

        let mut warnings = self.pres.warnings.clone();
        let mut stall = 0usize;
        let mut no_progress = 0usize;
        let mut best: Option<(f64, SDPSolution)> = None;

        for iter in 0..MAX_ITER {
            let x = self.primal_vec(&st);
            let r_p = &self.b - &self.a * &x;
            let (r_d_mats, r_f) = self.dual_residual(&st);
            let pobj = self.c.dot(&x);
            let dobj = self.b.dot(&st.y);
            let mu = self.mu(&st, n_total);

            let rel_p = r_p.amax() / (1.0 + b_norm);
            let rel_d = {
                let md = r_d_mats
                    .iter()
                    .map(|m| m.amax())
                    .fold(0.0_f64, f64::max)
                    .max(r_f.amax());
                md / (1.0 + c_norm)
            };
            let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let merit = rel_p.max(rel_d).max(rel_gap);

            if std::env::var_os("SHADOWHULL_IPM_TRACE").is_some() {
                let rd_mat = r_d_mats.iter().map(|m| m.amax()).fold(0.0_f64, f64::max);
                let rf = r_f.amax();
                let zmin = st
                    .z
                    .iter()
                    .map(|z| super::eigmin(&SymMatrix::from_dmatrix(z)).0)
                    .fold(f64::INFINITY, f64::min);
                let smin = st
                    .s
                    .iter()
                    .map(|s| super::eigmin(&SymMatrix::from_dmatrix(s)).0)
                    .fold(f64::INFINITY, f64::min);
                eprintln!(
                    "ipm iter {iter:3}  mu {mu:9.2e}  rp {rel_p:9.2e}  rdmat {rd_mat:9.2e}  \
                     rf {rf:9.2e}  gap {rel_gap:9.2e}  pobj {pobj:12.5e}  dobj {dobj:12.5e}  \
                     smin {smin:9.2e} zmin {zmin:9.2e}"
                );
            }
            if merit <= self.tol {
                return self.finish_optimal(&st, pobj, dobj, rel_p, rel_d, rel_gap, warnings);
            }
            if best.as_ref().map_or(true, |(bm, _)| merit < 0.9 * *bm) {
                let snapshot =
                    self.finish_optimal(&st, pobj, dobj, rel_p, rel_d, rel_gap, warnings.clone());
                best = Some((merit, snapshot));
                no_progress = 0;
            } else {
                no_progress += 1;
                if no_progress >= 12 {
                    warnings.push("residuals stopped improving".into());
                    break;
                }
            }

            // certificate probes once the iterates have clearly diverged
            if iter >= 8 {
                if let Some(sol) = self.try_dual_ray(&st, &warnings, false) {
                    return sol;
                }
                if let Some(sol) = self.try_primal_ray(&st, eta_p, &warnings, false) {
                    return sol;
                }
            }
            if !mu.is_finite() || mu > 1e16 {
                warnings.push("barrier parameter diverged".into());
                break;
            }

            // NT scaling per block
            let mut w_blocks = Vec::with_capacity(self.dims.len());
            let mut z_inv = Vec::with_capacity(self.dims.len());
            let mut scaling_ok = true;
            for (s_l, z_l) in st.s.iter().zip(&st.z) {
                match nt_scaling(s_l, z_l) {
                    Some((w, zi)) => {
                        w_blocks.push(w);
                        z_inv.push(zi);
                    }
                    None => {
                        scaling_ok = false;
                        break;
                    }
                }
            }
            if !scaling_ok {
                warnings.push("NT scaling failed".into());
                break;
            }

            // Schur complement and saddle factorization
            let kkt = match self.factor_kkt(&w_blocks) {
                Some(f) => f,
                None => {
                    warnings.push("KKT factorization failed".into());
                    break;
                }
            };

            // predictor (affine scaling) direction
            let rhs_aff: Vec<DMatrix<f64>> = st.s.iter().map(|s| -s.clone()).collect();
            let aff = self.direction(&kkt, &w_blocks, &r_p, &r_d_mats, &r_f, &rhs_aff);
            let alpha_p_aff = max_step_blocks(&st.s, &aff.ds);
            let alpha_d_aff = max_step_blocks(&st.z, &aff.dz);

            let mu_aff = {
                let ap = alpha_p_aff.min(1.0);
                let ad = alpha_d_aff.min(1.0);
                let mut acc = 0.0;
                for ((s_l, ds), (z_l, dz)) in
                    st.s.iter().zip(&aff.ds).zip(st.z.iter().zip(&aff.dz))
                {
                    let sn = s_l + ds.scale(ap);
                    let zn = z_l + dz.scale(ad);
                    acc += (&sn * &zn).trace();
                }
                (acc / n_total).max(0.0)
            };
            let mut sigma = ((mu_aff / mu).powi(3)).clamp(1e-6, 1.0);
            // wide-neighborhood safeguard: when the smallest eigenvalue
            // of S^{1/2} Z S^{1/2} falls well below mu, prioritize
            // centering over progress
            let cent = centrality(&st.s, &st.z);
            if cent < 1e-2 * mu {
                sigma = sigma.max(0.9);
            }

            // corrector with second-order term, suppressed when the
            // affine prediction is too wild to linearize around
            let firsts: Vec<DMatrix<f64>> = st
                .s
                .iter()
                .zip(&z_inv)
                .map(|(s_l, zi)| zi * (sigma * mu) - s_l)
                .collect();
            let seconds: Vec<DMatrix<f64>> = aff
                .ds
                .iter()
                .zip(&aff.dz)
                .zip(&z_inv)
                .map(|((ds, dz), zi)| {
                    let m = ds * dz * zi;
                    (&m + m.transpose()) * 0.5
                })
                .collect();
            let first_norm = firsts.iter().map(|m| m.amax()).fold(0.0_f64, f64::max);
            let second_norm = seconds.iter().map(|m| m.amax()).fold(0.0_f64, f64::max);
            let use_corrector = second_norm <= 10.0 * (first_norm + mu);
            let rhs_cc: Vec<DMatrix<f64>> = firsts
                .into_iter()
                .zip(seconds)
                .map(|(f, s)| if use_corrector { f - s } else { f })
                .collect();
            let dir = self.direction(&kkt, &w_blocks, &r_p, &r_d_mats, &r_f, &rhs_cc);

            let finite = dir
                .ds
                .iter()
                .chain(&dir.dz)
                .all(|m| m.iter().all(|v| v.is_finite()))
                && dir.du.iter().all(|v| v.is_finite())
                && dir.dy.iter().all(|v| v.is_finite());
            if !finite {
                warnings.push("search direction lost finiteness".into());
                break;
            }

            let amax_p = max_step_blocks(&st.s, &dir.ds);
            let amax_d = max_step_blocks(&st.z, &dir.dz);
            let gamma = 0.9 + 0.09 * amax_p.min(amax_d).min(1.0);
            let mut alpha_p = (gamma * amax_p).min(1.0);
            let mut alpha_d = (gamma * amax_d).min(1.0);

            // step acceptance: reject barrier blow-ups outright and
            // backtrack steps that would degrade centrality badly
            let mut accepted = false;
            for _ in 0..6 {
                let trial_s: Vec<DMatrix<f64>> =
                    st.s.iter().zip(&dir.ds).map(|(s, d)| s + d.scale(alpha_p)).collect();
                let trial_z: Vec<DMatrix<f64>> =
                    st.z.iter().zip(&dir.dz).map(|(z, d)| z + d.scale(alpha_d)).collect();
                let mut acc = 0.0;
                for (sn, zn) in trial_s.iter().zip(&trial_z) {
                    acc += (sn * zn).trace();
                }
                let mu_new = acc / n_total;
                if std::env::var_os("SHADOWHULL_IPM_TRACE").is_some() {
                    let cent_new = centrality(&trial_s, &trial_z);
                    eprintln!(
                        "  step try: alpha_p {alpha_p:.3e} alpha_d {alpha_d:.3e} \
                         mu_new {mu_new:.3e} cent_new {cent_new:.3e} cent {cent:.3e}"
                    );
                }
                // transient growth is normal while infeasible; only a
                // runaway barrier or (near feasibility) a neighborhood
                // escape is grounds for rejection
                if mu_new.is_finite() && mu_new <= 20.0 * (mu + 1.0) {
                    if rel_p.max(rel_d) > 1e-6 {
                        accepted = true;
                        break;
                    }
                    let cent_new = centrality(&trial_s, &trial_z);
                    let floor = (1e-3 * mu_new).min(0.5 * cent);
                    if cent_new >= floor || mu_new <= 1e-2 * self.tol {
                        accepted = true;
                        break;
                    }
                }
                alpha_p *= 0.5;
                alpha_d *= 0.5;
            }
            if !accepted {
                warnings.push("step rejected: left the central neighborhood".into());
                break;
            }

            if alpha_p < 1e-4 && alpha_d < 1e-4 {
                stall += 1;
                if stall >= STALL_LIMIT {
                    warnings.push("step sizes collapsed".into());
                    break;
                }
            } else {
                stall = 0;
            }

            for (s_l, ds) in st.s.iter_mut().zip(&dir.ds) {
                *s_l += ds.scale(alpha_p);
            }
            st.u += dir.du.scale(alpha_p);
            for (z_l, dz) in st.z.iter_mut().zip(&dir.dz) {
                *z_l += dz.scale(alpha_d);
            }
            st.y += dir.dy.scale(alpha_d);
        }

        // no clean convergence: last chance for a verified certificate
        if let Some(sol) = self.try_dual_ray(&st, &warnings, true) {
            return sol;
        }
        if let Some(sol) = self.try_primal_ray(&st, eta_p, &warnings, true) {
            return sol;
        }
        let mut out = match best {
            Some((_, snapshot)) => snapshot,
            None => SDPSolution::inaccurate("no iterate recorded"),
        };
        out.status = Status::Inaccurate;
        out.warnings = warnings;
        out.warnings
            .push("interior-point method did not converge to tolerance".into());
        out
    }

    fn primal_vec(&self, st: &State) -> DVector<f64> {
        let mut x = DVector::zeros(self.ns + self.nf);
        let sv = self.svec_concat(&st.s);
        for i in 0..self.ns {
            x[i] = sv[i];
        }
        for j in 0..self.nf {
            x[self.ns + j] = st.u[j];
        }
        x
    }

    /// Returns (per-block dual residual C_l - mat(A_s^T y)_l - Z_l, free residual).
    fn dual_residual(&self, st: &State) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let aty = self.a.transpose() * &st.y; // ns + nf
        let aty_s = DVector::from_column_slice(&aty.as_slice()[..self.ns]);
        let aty_mats = self.mats_from_svec(&aty_s);
        let mats: Vec<DMatrix<f64>> = self
            .c_mats
            .iter()
            .zip(aty_mats.iter().zip(&st.z))
            .map(|(c_l, (am, z_l))| c_l - am - z_l)
            .collect();
        let mut r_f = DVector::zeros(self.nf);
        for j in 0..self.nf {
            r_f[j] = self.c[self.ns + j] - aty[self.ns + j];
        }
        (mats, r_f)
    }

    fn mu(&self, st: &State, n_total: f64) -> f64 {
        let mut acc = 0.0;
        for (s_l, z_l) in st.s.iter().zip(&st.z) {
            acc += (s_l * z_l).trace();
        }
        acc / n_total
    }

    fn factor_kkt(&self, w_blocks: &[DMatrix<f64>]) -> Option<Kkt> {
        // scaled constraint images V_i = W A_i W, flattened
        let mut v_rows = DMatrix::zeros(self.m, self.ns);
        for i in 0..self.m {
            let mut off = 0;
            for (l, w) in w_blocks.iter().enumerate() {
                let vi = w * &self.a_mats[i][l] * w;
                let sv = svec(&SymMatrix::from_dmatrix(&vi));
                for (t, val) in sv.iter().enumerate() {
                    v_rows[(i, off + t)] = *val;
                }
                off += sv.len();
            }
        }
        let a_s = self.a.columns(0, self.ns);
        let mut schur = &v_rows * a_s.transpose();
        // symmetrize against roundoff
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                let avg = 0.5 * (schur[(i, j)] + schur[(j, i)]);
                schur[(i, j)] = avg;
                schur[(j, i)] = avg;
            }
        }
        let dim = self.m + self.nf;
        let mut k = DMatrix::zeros(dim, dim);
        k.view_mut((0, 0), (self.m, self.m)).copy_from(&schur);
        if self.nf > 0 {
            let a_u = self.a.columns(self.ns, self.nf);
            k.view_mut((0, self.m), (self.m, self.nf)).copy_from(&a_u);
            k.view_mut((self.m, 0), (self.nf, self.m))
                .copy_from(&a_u.transpose());
        }
        let delta = 1e-11 * (1.0 + schur.trace() / self.m as f64);
        for j in 0..self.nf {
            k[(self.m + j, self.m + j)] = -delta;
        }
        // factor a statically regularized copy; solves are refined
        // against the true matrix, so the shift does not bias results
        let mut k_reg = k.clone();
        for i in 0..self.m {
            k_reg[(i, i)] += delta;
        }
        for j in 0..self.nf {
            k_reg[(self.m + j, self.m + j)] -= delta;
        }
        let lu = k_reg.full_piv_lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Kkt {
            matrix: k,
            lu,
            v_rows,
        })
    }

    /// Solves the reduced KKT system for one right-hand side
    /// `rhs_nt` (the NT complementarity target, one matrix per block).
    fn direction(
        &self,
        kkt: &Kkt,
        w_blocks: &[DMatrix<f64>],
        r_p: &DVector<f64>,
        r_d_mats: &[DMatrix<f64>],
        r_f: &DVector<f64>,
        rhs_nt: &[DMatrix<f64>],
    ) -> Direction {
        // rhs1 = r_p - A_s svec(rhs_nt) + A_s (W (.) W) r_d
        let rhs_nt_sv = self.svec_concat(rhs_nt);
        let wrd: Vec<DMatrix<f64>> = w_blocks
            .iter()
            .zip(r_d_mats)
            .map(|(w, rd)| w * rd * w)
            .collect();
        let wrd_sv = self.svec_concat(&wrd);
        let a_s = self.a.columns(0, self.ns);
        let rhs1 = r_p - &a_s * &rhs_nt_sv + &a_s * &wrd_sv;

        let mut rhs = DVector::zeros(self.m + self.nf);
        for i in 0..self.m {
            rhs[i] = rhs1[i];
        }
        for j in 0..self.nf {
            rhs[self.m + j] = r_f[j];
        }
        let mut sol = kkt.lu.solve(&rhs).unwrap_or_else(|| DVector::zeros(self.m + self.nf));
        // iterative refinement against the unregularized matrix,
        // keeping the best candidate seen
        let res_of = |v: &DVector<f64>| (&rhs - &kkt.matrix * v).amax();
        let mut best = sol.clone();
        let mut best_res = res_of(&sol);
        for _ in 0..5 {
            if !best_res.is_finite() || best_res <= 1e-15 * rhs.amax().max(1.0) {
                break;
            }
            let resid = &rhs - &kkt.matrix * &sol;
            match kkt.lu.solve(&resid) {
                Some(corr) => sol += corr,
                None => break,
            }
            let r = res_of(&sol);
            if r < best_res {
                best_res = r;
                best = sol.clone();
            } else {
                break;
            }
        }
        let sol = best;
        let dy = DVector::from_column_slice(&sol.as_slice()[..self.m]);
        let du = DVector::from_column_slice(&sol.as_slice()[self.m..]);

        // dZ = mat(r_d - A_s^T dy); dS = rhs_nt - W dZ W
        let at_dy = a_s.transpose() * &dy;
        let at_dy_mats = self.mats_from_svec(&at_dy);
        let dz: Vec<DMatrix<f64>> = r_d_mats
            .iter()
            .zip(&at_dy_mats)
            .map(|(rd, am)| rd - am)
            .collect();
        let ds: Vec<DMatrix<f64>> = rhs_nt
            .iter()
            .zip(w_blocks.iter().zip(&dz))
            .map(|(target, (w, dz_l))| target - w * dz_l * w)
            .collect();
        Direction { ds, dz, du, dy }
    }

    fn finish_optimal(
        &self,
        st: &State,
        pobj: f64,
        dobj: f64,
        rel_p: f64,
        rel_d: f64,
        rel_gap: f64,
        warnings: Vec<String>,
    ) -> SDPSolution {
        SDPSolution {
            status: Status::Optimal,
            blocks: st.s.iter().map(SymMatrix::from_dmatrix).collect(),
            free: st.u.as_slice().to_vec(),
            dual: self
                .pres
                .expand_dual(st.y.as_slice(), self.prob.constraints.len()),
            objective: pobj,
            dual_objective: dobj,
            residuals: Residuals {
                primal: rel_p,
                dual: rel_d,
                gap: rel_gap,
            },
            infeasibility: None,
            warnings,
        }
    }

    /// Farkas probe: does the normalized dual iterate certify primal
    /// infeasibility?
    fn try_dual_ray(&self, st: &State, warnings: &[String], lenient: bool) -> Option<SDPSolution> {
        let y_norm = st.y.norm();
        let gate = if lenient { 1e1 } else { 1e2 };
        if y_norm < gate * (1.0 + self.b.amax()) {
            return None;
        }
        let y_hat: Vec<f64> = st.y.iter().map(|v| v / y_norm).collect();
        let ray = self
            .pres
            .expand_dual(&y_hat, self.prob.constraints.len());
        let (b_dot, psd_violation, free_violation) = verify_ray(self.prob, &ray);
        if b_dot <= 1e-10 {
            return None;
        }
        if psd_violation.max(free_violation) > RAY_QUALITY * b_dot {
            return None;
        }
        let mut w = warnings.to_vec();
        w.push("dual iterate diverged with a verified Farkas ray".into());
        Some(SDPSolution {
            status: Status::Infeasible,
            blocks: Vec::new(),
            free: Vec::new(),
            dual: ray.clone(),
            objective: f64::NAN,
            dual_objective: f64::INFINITY,
            residuals: Residuals {
                primal: f64::NAN,
                dual: f64::NAN,
                gap: f64::NAN,
            },
            infeasibility: Some(InfeasibilityCertificate {
                ray,
                objective: b_dot,
                psd_violation,
                free_violation,
            }),
            warnings: w,
        })
    }

    /// Improving-ray probe: does the normalized primal iterate certify
    /// dual infeasibility (primal unboundedness)?
    fn try_primal_ray(
        &self,
        st: &State,
        eta_p: f64,
        warnings: &[String],
        lenient: bool,
    ) -> Option<SDPSolution> {
        let x = self.primal_vec(st);
        let x_norm = x.norm();
        let gate = if lenient { 10.0 } else { 1e4 };
        if x_norm < gate * eta_p {
            return None;
        }
        let x_hat = x.scale(1.0 / x_norm);
        let obj = self.c.dot(&x_hat);
        if obj >= -1e-10 {
            return None;
        }
        let ax = (&self.a * &x_hat).amax();
        if ax > RAY_QUALITY * (-obj) {
            return None;
        }
        let mut w = warnings.to_vec();
        w.push("primal iterate diverged with a verified improving ray".into());
        let mut out = SDPSolution::inaccurate("unbounded");
        out.status = Status::Unbounded;
        out.objective = f64::NEG_INFINITY;
        out.warnings = w;
        Some(out)
    }
}

struct Kkt {
    matrix: DMatrix<f64>,
    lu: nalgebra::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    #[allow(dead_code)]
    v_rows: DMatrix<f64>,
}

/// Symmetric square root via eigendecomposition, eigenvalues clamped
/// positive. Returns `(G, G^{-1})` with `G G = M`.
fn sym_sqrt(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let k = eig.eigenvalues.len();
    let mut root = DMatrix::zeros(k, k);
    let mut root_inv = DMatrix::zeros(k, k);
    for i in 0..k {
        let lam = eig.eigenvalues[i];
        if !lam.is_finite() {
            return None;
        }
        let lam = lam.max(1e-300);
        root[(i, i)] = lam.sqrt();
        root_inv[(i, i)] = 1.0 / lam.sqrt();
    }
    let q = &eig.eigenvectors;
    Some((q * root * q.transpose(), q * root_inv * q.transpose()))
}

/// NT scaling point W with `W Z W = S`, plus `Z^{-1}`.
fn nt_scaling(s: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let (g, _) = sym_sqrt(s)?; // S = G G
    let t = g.transpose() * z * &g;
    let t = (&t + t.transpose()) * 0.5;
    let (_, t_isqrt) = sym_sqrt(&t)?;
    let w = &g * t_isqrt * g.transpose();
    let w = (&w + w.transpose()) * 0.5;

    let zc = (z + z.transpose()) * 0.5;
    let (_, z_isqrt) = sym_sqrt(&zc)?;
    let z_inv = &z_isqrt * &z_isqrt;
    Some((w, z_inv))
}

/// Smallest eigenvalue of `S^{1/2} Z S^{1/2}` over all blocks: the
/// centrality measure. On the central path this equals mu.
fn centrality(s: &[DMatrix<f64>], z: &[DMatrix<f64>]) -> f64 {
    let mut worst = f64::INFINITY;
    for (s_l, z_l) in s.iter().zip(z) {
        let Some((g, _)) = sym_sqrt(s_l) else {
            return 0.0;
        };
        let t = &g * z_l * &g;
        let t = (&t + t.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(t);
        let lam = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.min(lam);
    }
    worst
}

/// Largest step alpha with X + alpha dX still PSD (up to 1e8 cap).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let (_, g_inv) = match sym_sqrt(x) {
        Some(p) => p,
        None => return 0.0,
    };
    let y = &g_inv * dx * &g_inv;
    let y = (&y + y.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(y);
    let lam_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lam_min >= -1e-14 {
        1e8
    } else {
        -1.0 / lam_min
    }
}

fn max_step_blocks(xs: &[DMatrix<f64>], dxs: &[DMatrix<f64>]) -> f64 {
    xs.iter()
        .zip(dxs)
        .map(|(x, dx)| max_step(x, dx))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::super::{solve, Constraint, SDPProblem, Sense, Status};
    use crate::tolerances::SOLVER_TOL;

    /// min x with [[1,x],[x,1]] PSD: block X 2x2, free x, ties
    /// X11=1, X22=1, X12=x. The svec coordinate for (1,2) carries
    /// sqrt(2)*X12, so the tying row uses coefficient 1/sqrt(2).
    #[test]
    fn min_offdiag_of_correlation() {
        let isq2 = std::f64::consts::FRAC_1_SQRT_2;
        let prob = SDPProblem {
            block_dims: vec![2],
            n_free: 1,
            objective: vec![0.0, 0.0, 0.0, 1.0],
            constraints: vec![
                Constraint {
                    coeffs: vec![1.0, 0.0, 0.0, 0.0],
                    rhs: 1.0,
                },
                Constraint {
                    coeffs: vec![0.0, 0.0, 1.0, 0.0],
                    rhs: 1.0,
                },
                Constraint {
                    coeffs: vec![0.0, isq2, 0.0, -1.0],
                    rhs: 0.0,
                },
            ],
            sense: Sense::Minimize,
        };
        let sol = solve(&prob, SOLVER_TOL);
        assert_eq!(sol.status, Status::Optimal, "{:?}", sol.warnings);
        assert!(
            (sol.objective + 1.0).abs() < 1e-7,
            "objective {} should be -1",
            sol.objective
        );
        // weak duality on a minimization
        assert!(sol.objective >= sol.dual_objective - 1e-6);
    }

    #[test]
    fn feasibility_psd_completion() {
        let sq2 = std::f64::consts::SQRT_2;
        // X PSD with X11 = 1, X22 = 1, X12 = 1: rank-one all-ones matrix
        let mk = |x12: f64| SDPProblem {
            block_dims: vec![2],
            n_free: 0,
            objective: vec![],
            constraints: vec![
                Constraint {
                    coeffs: vec![1.0, 0.0, 0.0],
                    rhs: 1.0,
                },
                Constraint {
                    coeffs: vec![0.0, 0.0, 1.0],
                    rhs: 1.0,
                },
                Constraint {
                    coeffs: vec![0.0, sq2, 0.0],
                    rhs: sq2 * x12,
                },
            ],
            sense: Sense::Feasibility,
        };
        let sol = solve(&mk(1.0), SOLVER_TOL);
        assert_eq!(sol.status, Status::Optimal, "{:?}", sol.warnings);
        assert!(sol.objective <= 1e-7, "slack {}", sol.objective);

        let sol = solve(&mk(1.5), SOLVER_TOL);
        assert_eq!(sol.status, Status::Infeasible, "{:?}", sol.warnings);
        let cert = sol.infeasibility.expect("certificate");
        let (b_dot, psd, free) = cert.verify(&mk(1.5));
        assert!(b_dot > 0.0);
        assert!(psd <= 1e-6 * b_dot.max(1.0), "psd violation {psd}");
        assert_eq!(free, 0.0);
    }

    #[test]
    fn inconsistent_rows_detected() {
        let prob = SDPProblem {
            block_dims: vec![1],
            n_free: 0,
            objective: vec![],
            constraints: vec![
                Constraint {
                    coeffs: vec![1.0],
                    rhs: 1.0,
                },
                Constraint {
                    coeffs: vec![1.0],
                    rhs: 2.0,
                },
            ],
            sense: Sense::Feasibility,
        };
        let sol = solve(&prob, SOLVER_TOL);
        assert_eq!(sol.status, Status::Infeasible);
        assert!(sol.infeasibility.is_some());
    }

    #[test]
    fn dependent_rows_dropped_with_warning() {
        let prob = SDPProblem {
            block_dims: vec![1],
            n_free: 0,
            objective: vec![],
            constraints: vec![
                Constraint {
                    coeffs: vec![1.0],
                    rhs: 2.0,
                },
                Constraint {
                    coeffs: vec![2.0],
                    rhs: 4.0,
                },
            ],
            sense: Sense::Feasibility,
        };
        let sol = solve(&prob, SOLVER_TOL);
        assert_eq!(sol.status, Status::Optimal);
        assert!(sol.warnings.iter().any(|w| w.contains("dependent")));
        assert!((sol.blocks[0].entry(0, 0) - 2.0).abs() < 1e-6);
    }

    /// Unbounded: minimize -Tr(X) with a single harmless constraint.
    #[test]
    fn unbounded_detected() {
        let prob = SDPProblem {
            block_dims: vec![2],
            n_free: 0,
            objective: vec![-1.0, 0.0, -1.0],
            constraints: vec![Constraint {
                coeffs: vec![1.0, 0.0, -1.0],
                rhs: 0.0,
            }],
            sense: Sense::Minimize,
        };
        let sol = solve(&prob, SOLVER_TOL);
        assert_eq!(sol.status, Status::Unbounded, "{:?}", sol.warnings);
    }

    /// Primal infeasible minimization: trace zero forces X = 0 but an
    /// off-diagonal entry is pinned to 1.
    #[test]
    fn infeasible_minimize_detected() {
        let sq2 = std::f64::consts::SQRT_2;
        let prob = SDPProblem {
            block_dims: vec![2],
            n_free: 0,
            objective: vec![0.0, 0.0, 1.0],
            constraints: vec![
                Constraint {
                    coeffs: vec![1.0, 0.0, 1.0],
                    rhs: 0.0,
                },
                Constraint {
                    coeffs: vec![0.0, sq2, 0.0],
                    rhs: 1.0,
                },
            ],
            sense: Sense::Minimize,
        };
        let sol = solve(&prob, SOLVER_TOL);
        assert_eq!(sol.status, Status::Infeasible, "{:?}", sol.warnings);
        let cert = sol.infeasibility.expect("certificate");
        let (b_dot, psd, _) = cert.verify(&prob);
        assert!(b_dot > 0.0 && psd <= 1e-6 * b_dot.max(1.0));
    }
}
