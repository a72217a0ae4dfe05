//! Alternating-projection SDP oracle.
//!
//! Independent cross-check for [`super::sdp`]: feasibility of
//! `{G >= 0, 1/2 tr(D_i G) = r_i}` is decided by Dykstra's alternating
//! projections between the PSD cone and the affine subspace, and the
//! optimum of `maximize 1/2 tr(C G)` is located by bisection on the
//! objective level treated as one more affine constraint. Slow but built
//! from entirely different primitives than the interior-point path.

use crate::optim::sdp::{inner, SemidefiniteProgram};
use nalgebra::{DMatrix, SymmetricEigen};

/// Project onto the PSD cone by clamping negative eigenvalues.
fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut d = DMatrix::zeros(n, n);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        d[(i, i)] = l.max(0.0);
    }
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

struct AffineProjector {
    mats: Vec<DMatrix<f64>>,
    rhs: Vec<f64>,
    gram_inv: DMatrix<f64>,
}

impl AffineProjector {
    /// Constraints `<mats_i, X> = rhs_i` (plain Frobenius inner product).
    fn new(mats: Vec<DMatrix<f64>>, rhs: Vec<f64>) -> Option<Self> {
        let m = mats.len();
        let mut gram = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] = inner(&mats[i], &mats[j]);
            }
        }
        let gram_inv = gram.try_inverse()?;
        Some(AffineProjector {
            mats,
            rhs,
            gram_inv,
        })
    }

    fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.mats.len();
        let mut resid = DMatrix::zeros(m, 1);
        for i in 0..m {
            resid[(i, 0)] = self.rhs[i] - inner(&self.mats[i], x);
        }
        let lambda = &self.gram_inv * resid;
        let mut out = x.clone();
        for i in 0..m {
            out += &self.mats[i] * lambda[(i, 0)];
        }
        out
    }

    fn residual(&self, x: &DMatrix<f64>) -> f64 {
        self.mats
            .iter()
            .zip(&self.rhs)
            .map(|(a, r)| (inner(a, x) - r).abs())
            .fold(0.0, f64::max)
    }
}

/// Dykstra alternating projections; returns the final point and whether it
/// lies in both sets within `tol`.
fn dykstra_feasible(
    proj: &AffineProjector,
    start: &DMatrix<f64>,
    iters: usize,
    tol: f64,
) -> (DMatrix<f64>, bool) {
    let n = start.nrows();
    let mut x = start.clone();
    let mut p = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    for _ in 0..iters {
        let y = project_psd(&(&x + &p));
        p = &x + &p - &y;
        let x_next = proj.project(&(&y + &q));
        q = &y + &q - &x_next;
        x = x_next;
    }
    let psd_gap = (&x - project_psd(&x)).amax();
    let ok = psd_gap <= tol && proj.residual(&x) <= tol;
    (x, ok)
}

/// Bisection-based optimizer: largest `v` such that
/// `{G >= 0, eq constraints, 1/2 tr(C G) = v}` is nonempty within the
/// bracket `[lo, hi]`. Inequality constraints are not supported here.
pub fn solve_sdp_projection(
    sdp: &SemidefiniteProgram,
    lo: f64,
    hi: f64,
    level_tol: f64,
) -> Option<f64> {
    assert!(
        sdp.ge.is_empty(),
        "projection oracle handles equality-constrained problems"
    );
    let n = sdp.dim;
    let mut mats: Vec<DMatrix<f64>> = sdp.eq.iter().map(|(d, _)| d * 0.5).collect();
    let mut rhs: Vec<f64> = sdp.eq.iter().map(|(_, r)| *r).collect();
    mats.push(&sdp.objective * 0.5);
    rhs.push(0.0);
    let obj_row = mats.len() - 1;

    let feas = |v: f64| -> bool {
        let mut rhs = rhs.clone();
        rhs[obj_row] = v;
        match AffineProjector::new(mats.clone(), rhs) {
            Some(proj) => {
                let start = DMatrix::<f64>::identity(n, n);
                dykstra_feasible(&proj, &start, 4000, 1e-8).1
            }
            None => false,
        }
    };

    if !feas(lo) {
        return None;
    }
    let mut lo = lo;
    let mut hi = hi;
    while hi - lo > level_tol {
        let mid = 0.5 * (lo + hi);
        if feas(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}
