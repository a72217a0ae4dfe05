//! Dense primal-dual interior-point solver for small semidefinite programs.
//!
//! Solves `maximize 1/2 tr(C G)` over symmetric `G >= 0` subject to
//! equality constraints `1/2 tr(D_i G) = r_i` and optional inequality
//! constraints `1/2 tr(E_j G) >= f_j`. Inequalities are reduced to
//! equalities through diagonal slack entries in an extended matrix
//! variable, with the cross terms pinned to zero.
//!
//! The search direction is the HKM direction; step lengths keep both the
//! primal and dual iterates strictly inside the cone. Problems whose
//! optimum sits on the boundary of the feasible set (no strictly feasible
//! interior) must be relaxed by the caller; see
//! [`crate::npa::certify_max_randomness_sdp`] for the relaxation schedule
//! used by the moment-matrix certification.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use twofloat::TwoFloat;

/// LU factorization with partial pivoting carried out in double-double
/// arithmetic. The normal system of the interior-point iteration has
/// condition number up to the square of the inverse relaxation parameter;
/// beyond ~1e-7 plain f64 directions degrade into noise while the doubled
/// mantissa keeps them usable.
struct PrecisionLu {
    lu: Vec<Vec<TwoFloat>>,
    piv: Vec<usize>,
}

impl PrecisionLu {
    fn factor(m: &DMatrix<f64>) -> Option<Self> {
        let n = m.nrows();
        let mut lu: Vec<Vec<TwoFloat>> = (0..n)
            .map(|i| (0..n).map(|j| TwoFloat::from(m[(i, j)])).collect())
            .collect();
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let (p, _) = (k..n)
                .map(|i| (i, lu[i][k].abs()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())?;
            if f64::from(lu[p][k]) == 0.0 {
                return None;
            }
            lu.swap(k, p);
            piv.push(p);
            for i in k + 1..n {
                let f = lu[i][k] / lu[k][k];
                lu[i][k] = f;
                for j in k + 1..n {
                    let d = lu[k][j];
                    lu[i][j] = lu[i][j] - f * d;
                }
            }
        }
        Some(PrecisionLu { lu, piv })
    }

    fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.lu.len();
        let mut b: Vec<TwoFloat> = (0..n).map(|i| TwoFloat::from(rhs[(i, 0)])).collect();
        for (k, &p) in self.piv.iter().enumerate() {
            b.swap(k, p);
        }
        for i in 1..n {
            for j in 0..i {
                let f = self.lu[i][j] * b[j];
                b[i] = b[i] - f;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let f = self.lu[i][j] * b[j];
                b[i] = b[i] - f;
            }
            b[i] = b[i] / self.lu[i][i];
        }
        DMatrix::from_fn(n, 1, |i, _| f64::from(b[i]))
    }
}

#[derive(Debug, Clone)]
pub struct SemidefiniteProgram {
    /// Matrix variable dimension.
    pub dim: usize,
    /// Symmetric objective matrix `C` in `maximize 1/2 tr(C G)`.
    pub objective: DMatrix<f64>,
    /// Equality constraints `(D_i, r_i)` meaning `1/2 tr(D_i G) = r_i`.
    pub eq: Vec<(DMatrix<f64>, f64)>,
    /// Inequality constraints `(E_j, f_j)` meaning `1/2 tr(E_j G) >= f_j`.
    pub ge: Vec<(DMatrix<f64>, f64)>,
    /// Optional strictly feasible starting point. A feasible start keeps
    /// the equality residuals at roundoff level throughout, which matters
    /// when the optimal value is far more sensitive to constraint residuals
    /// than to the duality gap. Defaults to the identity.
    pub init: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// Iteration limit hit before reaching the requested tolerance.
    MaxIterations,
    /// Progress stopped at floating-point precision before reaching the
    /// requested tolerance; the best iterate found is returned.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// `1/2 tr(C G)` at the returned point.
    pub value: f64,
    /// The matrix variable, restricted to the original dimension.
    pub gamma: DMatrix<f64>,
    /// Largest absolute equality-constraint residual.
    pub max_residual: f64,
    /// Smallest eigenvalue of `gamma`.
    pub min_eigenvalue: f64,
    pub iterations: usize,
    /// Final duality gap estimate `tr(X S) / n`.
    pub gap: f64,
}

const MAX_ITER: usize = 200;
/// Iterations without accuracy improvement before declaring a stall.
const STALL_LIMIT: usize = 30;

pub fn solve_sdp(sdp: &SemidefiniteProgram, tol: f64) -> Result<SdpSolution> {
    let n0 = sdp.dim;
    check_sym(&sdp.objective, n0)?;
    for (d, _) in sdp.eq.iter().chain(sdp.ge.iter()) {
        check_sym(d, n0)?;
    }

    // Extend with one diagonal slack per inequality; pin cross terms to 0.
    let k = sdp.ge.len();
    let n = n0 + k;
    let grow = |m: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(n, n);
        out.view_mut((0, 0), (n0, n0)).copy_from(m);
        out
    };
    let c = grow(&sdp.objective) * 0.5;
    let mut cons: Vec<(DMatrix<f64>, f64)> = Vec::new();
    for (d, r) in &sdp.eq {
        cons.push((grow(d) * 0.5, *r));
    }
    for (j, (e, f)) in sdp.ge.iter().enumerate() {
        let mut m = grow(e) * 0.5;
        m[(n0 + j, n0 + j)] = -1.0;
        cons.push((m, *f));
    }
    for j in 0..k {
        for i in 0..n {
            if i == n0 + j {
                continue;
            }
            let mut m = DMatrix::zeros(n, n);
            m[(i, n0 + j)] = 0.5;
            m[(n0 + j, i)] = 0.5;
            cons.push((m, 0.0));
        }
    }
    // Slack cross-term pins above are pairwise duplicated for j != j'; drop
    // exact duplicates so the normal matrix stays nonsingular.
    dedup_pins(&mut cons, n0);

    let m = cons.len();
    let mut x = DMatrix::<f64>::identity(n, n);
    if let Some(init) = &sdp.init {
        check_sym(init, n0)?;
        x.view_mut((0, 0), (n0, n0)).copy_from(init);
        // Slack values implied by the inequality rows at the start point.
        for (j, (e, f)) in sdp.ge.iter().enumerate() {
            let slack = 0.5 * inner(e, init) - f;
            if slack <= 0.0 {
                return Err(Error::Sdp(
                    "starting point violates an inequality constraint".into(),
                ));
            }
            x[(n0 + j, n0 + j)] = slack;
        }
    }
    let mut s = DMatrix::<f64>::identity(n, n);
    let mut y = vec![0.0; m];

    let bnorm = 1.0 + cons.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    let cnorm = 1.0 + c.amax();

    // Gram matrix of the constraint set, used to re-project the primal
    // iterate onto the affine constraint space each iteration. Without
    // this, roundoff in the normal solves lets the residuals drift to
    // ~1e-8, which matters when the optimum is that sensitive to them.
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = inner(&cons[i].0, &cons[j].0);
        }
    }
    let gram_lu = PrecisionLu::factor(&gram);

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = MAX_ITER;
    // Track the most accurate iterate seen: near the optimum the normal
    // system turns ill-conditioned and later iterates can drift.
    let mut best_x = x.clone();
    let mut best_score = f64::INFINITY;
    let mut since_best = 0usize;
    for it in 0..MAX_ITER {
        let gap = (&x * &s).trace() / n as f64;
        // Residuals.
        let mut rp = vec![0.0; m];
        let mut rp_norm: f64 = 0.0;
        for (i, (a, b)) in cons.iter().enumerate() {
            rp[i] = b - inner(a, &x);
            rp_norm = rp_norm.max(rp[i].abs());
        }
        let mut rd = -&s - &c;
        for (i, (a, _)) in cons.iter().enumerate() {
            rd += a * y[i];
        }
        let rd_norm = rd.amax();

        if std::env::var("SDP_TRACE").is_ok() {
            eprintln!(
                "it={it} gap={gap:.3e} rp={rp_norm:.3e} rd={rd_norm:.3e} val={:.9}",
                inner(&c, &x)
            );
        }
        let score = gap.abs().max(rp_norm / bnorm).max(rd_norm / cnorm);
        if score < best_score {
            best_score = score;
            best_x = x.clone();
            since_best = 0;
        } else {
            since_best += 1;
        }
        if gap.abs() <= tol && rp_norm <= tol * bnorm && rd_norm <= tol * cnorm {
            status = SdpStatus::Optimal;
            iterations = it;
            break;
        }
        if since_best >= STALL_LIMIT {
            status = SdpStatus::Stalled;
            iterations = it;
            break;
        }

        let s_inv = match sym_inverse(&s) {
            Some(inv) => inv,
            // The dual iterate degenerates only once steps are at the
            // resolution limit; report the best point instead of failing.
            None => {
                status = SdpStatus::Stalled;
                iterations = it;
                break;
            }
        };
        // Normal system M dy = rhs with M_ij = tr(A_i X A_j S^-1), shared
        // by the predictor and corrector solves.
        let v: Vec<DMatrix<f64>> = cons.iter().map(|(a, _)| &x * a * &s_inv).collect();
        let mut mat = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                mat[(i, j)] = inner(&cons[i].0, &v[j]);
            }
        }
        let Some(lu) = PrecisionLu::factor(&mat) else {
            status = SdpStatus::Stalled;
            iterations = it;
            break;
        };
        let xrs = &x * &rd * &s_inv;
        let direction = |target: f64, second_order: Option<&DMatrix<f64>>| {
            let mut rhs = DMatrix::<f64>::zeros(m, 1);
            for i in 0..m {
                rhs[(i, 0)] =
                    target * inner(&cons[i].0, &s_inv) - inner(&cons[i].0, &xrs) - cons[i].1;
                if let Some(w) = second_order {
                    rhs[(i, 0)] -= inner(&cons[i].0, w);
                }
            }
            let dy = lu.solve(&rhs);
            let mut ds = rd.clone();
            for (i, (a, _)) in cons.iter().enumerate() {
                ds += a * dy[(i, 0)];
            }
            let mut dx_raw = &s_inv * target - &x - &x * &ds * &s_inv;
            if let Some(w) = second_order {
                dx_raw -= w;
            }
            let dx = (&dx_raw + dx_raw.transpose()) * 0.5;
            Some((dx, ds, dy))
        };

        // Predictor: pure Newton step toward the boundary fixes the
        // centering weight; corrector adds the second-order cross term.
        let Some((dxa, dsa, _)) = direction(0.0, None) else {
            status = SdpStatus::Stalled;
            iterations = it;
            break;
        };
        let apa = (0.97 * max_step(&x, &dxa)).min(1.0);
        let ada = (0.97 * max_step(&s, &dsa)).min(1.0);
        let gap_aff = ((&x + &dxa * apa) * (&s + &dsa * ada)).trace() / n as f64;
        let sigma = (gap_aff / gap).max(0.0).powi(3).clamp(1e-6, 1.0);
        let target = sigma * gap;
        let cross = &dxa * &dsa * &s_inv;
        let Some((mut dx, ds, dy)) = direction(target, Some(&cross)) else {
            status = SdpStatus::Stalled;
            iterations = it;
            break;
        };
        // Least-squares correction of the primal direction onto
        // `A(dx) = rp`: roundoff in the ill-conditioned normal solve
        // otherwise lets the iterate drift off the constraint space.
        let mut res = DMatrix::<f64>::zeros(m, 1);
        for (i, (a, _)) in cons.iter().enumerate() {
            res[(i, 0)] = rp[i] - inner(a, &dx);
        }
        if let Some(gram_lu) = &gram_lu {
            let lambda = gram_lu.solve(&res);
            for (i, (a, _)) in cons.iter().enumerate() {
                dx += a * lambda[(i, 0)];
            }
        }

        let mut ap = (0.97 * max_step(&x, &dx)).min(1.0);
        let mut ad = (0.97 * max_step(&s, &ds)).min(1.0);
        // Backtrack while the step grows the complementarity gap: unequal
        // primal and dual step lengths can otherwise cycle near the optimum.
        for _ in 0..20 {
            let trial = ((&x + &dx * ap) * (&s + &ds * ad)).trace() / n as f64;
            if trial <= gap * 1.2 {
                break;
            }
            ap *= 0.5;
            ad *= 0.5;
        }
        x += &dx * ap;
        s += &ds * ad;
        for i in 0..m {
            y[i] += ad * dy[(i, 0)];
        }
    }

    let x = if status == SdpStatus::Optimal { x } else { best_x };
    let gap = (&x * &s).trace() / n as f64;
    let gamma = x.view((0, 0), (n0, n0)).into_owned();
    let gamma = (&gamma + gamma.transpose()) * 0.5;
    let value = 0.5 * inner(&sdp.objective, &gamma);
    let mut max_residual: f64 = 0.0;
    for (d, r) in &sdp.eq {
        max_residual = max_residual.max((0.5 * inner(d, &gamma) - r).abs());
    }
    for (e, f) in &sdp.ge {
        max_residual = max_residual.max((f - 0.5 * inner(e, &gamma)).max(0.0));
    }
    let min_eigenvalue = SymmetricEigen::new(gamma.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(SdpSolution {
        status,
        value,
        gamma,
        max_residual,
        min_eigenvalue,
        iterations,
        gap,
    })
}

fn check_sym(m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Sdp(format!(
            "matrix is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    if (m - m.transpose()).amax() > 1e-12 {
        return Err(Error::Sdp("constraint matrix not symmetric".into()));
    }
    Ok(())
}

fn dedup_pins(cons: &mut Vec<(DMatrix<f64>, f64)>, _n0: usize) {
    let mut seen: Vec<DMatrix<f64>> = Vec::new();
    cons.retain(|(a, _)| {
        if seen.iter().any(|s| (s - a).amax() < 1e-15) {
            false
        } else {
            seen.push(a.clone());
            true
        }
    });
}

pub(crate) fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.zip_fold(b, 0.0, |acc, x, y| acc + x * y)
}

/// Inverse of a symmetric positive definite matrix via eigendecomposition.
pub(crate) fn sym_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return None;
    }
    let mut d = DMatrix::zeros(m.nrows(), m.nrows());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        d[(i, i)] = 1.0 / l;
    }
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Largest step a in [0, inf) keeping `m + a dm` positive semidefinite,
/// for positive definite `m`.
fn max_step(m: &DMatrix<f64>, dm: &DMatrix<f64>) -> f64 {
    // lambda_min of L^-1 dm L^-T where m = L L^T.
    let chol = match m.clone().cholesky() {
        Some(c) => c,
        None => return 0.0,
    };
    let l = chol.l();
    let w = l
        .solve_lower_triangular(dm)
        .and_then(|t| l.solve_lower_triangular(&t.transpose()))
        .map(|t| (t.clone() + t.transpose()) * 0.5);
    let Some(w) = w else { return 0.0 };
    let lmin = SymmetricEigen::new(w)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if lmin >= -1e-14 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}
