//! Built-in dense semidefinite-programming solver.
//!
//! Solves `min c.v  s.t.  G0 + sum_i v_i G_i >= 0` over a list of PSD blocks
//! with a Nesterov–Todd predictor-corrector interior-point core wrapped in
//! shift-and-polish rounds:
//!
//! * **Core** (`solve_core`): cold-started Mehrotra predictor-corrector with
//!   NT scaling, power-of-ten prescaling of variables/blocks/objective, a
//!   Schur complement solved by Cholesky with iterative refinement, and
//!   best-iterate tracking with a divergence guard.
//! * **Driver** (`solve_blocks`): each round re-anchors the problem at the
//!   current point (`G0 <- G0 + sum y_i G_i`), equilibrates the anchored
//!   constant per block by a Ruiz congruence, and solves for a correction.
//!   A round that stalls at relative accuracy `q` still contracts the
//!   absolute error by `q`, so a handful of rounds reach tight tolerances
//!   even on degenerate end-games.
//!
//! Optimality is certified, not trusted: every round's primal witness is
//! mapped back to the original data and the one with the smallest certified
//! weak-duality gap against the final point is reported. The returned
//! `worst_margin` is measured on the original constraints, and a returned
//! `Optimal`/`Feasible` status always carries a strictly positive margin:
//! when the converged point sits on (or numerically past) the boundary, a
//! final Newton polish lifts every deficient constraint eigenvalue to a
//! small strictly positive level, with the objective drift capped well
//! below the optimality tolerance.

use crate::error::{Error, Result};
use crate::lmi::AffineLmi;
use crate::matrix::{cholesky, sym_eig, Mat, SymMat};
use crate::scalar::Scalar;

/// One positive-semidefinite constraint block `G0 + sum_i v_i G_i >= 0`.
#[derive(Clone, Debug)]
pub struct ConeBlock<T> {
    pub g0: Mat<T>,
    pub gi: Vec<Mat<T>>,
    pub n: usize,
}

impl<T: Scalar> ConeBlock<T> {
    pub fn new(g0: Mat<T>, gi: Vec<Mat<T>>) -> Self {
        let n = g0.rows();
        ConeBlock { g0, gi, n }
    }
}

/// A full synthesis program: decision layout, matrix constraints, and a
/// linear objective (a zero vector means pure feasibility).
#[derive(Clone, Debug)]
pub struct SynthesisProgram<T> {
    pub layout: crate::lmi::DecisionLayout,
    pub constraints: Vec<AffineLmi<T>>,
    pub objective: Vec<T>,
}

/// Outcome classification of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    /// Certified: strictly feasible point with certified relative gap below
    /// the tolerance.
    Optimal,
    /// Strictly feasible point, but the optimality certificate is weaker
    /// than the requested tolerance.
    Feasible,
    /// An improving ray proved the constraints unsatisfiable.
    Infeasible,
    /// No strictly feasible point was produced.
    NumericalFailure,
}

/// Solver result: the assignment plus the measures that justify the status.
#[derive(Clone, Debug)]
pub struct SdpSolution<T> {
    pub status: SdpStatus,
    pub values: Vec<T>,
    pub objective_value: T,
    /// Most-violated constraint eigenvalue (sign-adjusted: positive means
    /// every block is strictly inside the cone).
    pub worst_margin: T,
    /// Certified relative optimality gap from the best primal witness
    /// (infinite when no witness survived).
    pub relgap: T,
    /// Witness dual-feasibility residual, relative.
    pub primal_residual: T,
    /// Magnitude of the constraint image along the improving ray when
    /// `Infeasible` (small = convincing certificate).
    pub ray_residual: Option<T>,
    pub rounds: usize,
    pub iterations: usize,
}

/// Tuning knobs for [`solve_blocks`] / [`solve_program`].
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions<T> {
    /// Certified relative optimality gap required for `Optimal`.
    pub gap_tol: T,
    /// Feasibility tolerance used for residual and margin acceptance.
    pub feas_tol: T,
    /// Interior-point iteration cap for each shift-and-polish round (each
    /// round is one anchored interior-point run; rounds normally exit on
    /// their own convergence or stall tests well before the cap).
    pub max_iter: usize,
    /// Maximum shift-and-polish rounds.
    pub max_rounds: usize,
    /// Minimum margin every constraint must hold with on a successful
    /// solve (`Optimal`/`Feasible` guarantee `worst_margin >= margin` and
    /// `worst_margin > 0`). The constraints are tightened by this amount
    /// before optimization, so the reported optimum respects it.
    pub margin: T,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            gap_tol: T::c(1e-7),
            feas_tol: T::c(1e-8),
            max_iter: 200,
            max_rounds: 6,
            margin: T::zero(),
        }
    }
}

fn sym<T: Scalar>(a: &Mat<T>) -> Mat<T> {
    a.add(&a.t()).scale(T::c(0.5))
}

fn eigh<T: Scalar>(m: &Mat<T>) -> Result<(Vec<T>, Mat<T>)> {
    sym_eig(&SymMat::new(m.clone())?)
}

fn min_eig<T: Scalar>(m: &Mat<T>) -> Result<T> {
    let (vals, _) = eigh(m)?;
    vals.first().copied().ok_or_else(|| Error::EmptyInput("eigenvalues of 0x0".into()))
}

/// Elementwise congruence scaling `out_ij = m_ij * d_i * d_j`.
fn congruence_scale<T: Scalar>(m: &Mat<T>, d: &[T]) -> Mat<T> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] * d[i] * d[j])
}

/// Scales the columns of `m` by `w`.
fn scale_cols<T: Scalar>(m: &Mat<T>, w: &[T]) -> Mat<T> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] * w[j])
}

fn vec_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn vec_max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

fn vec_dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `A(v)` per block: `G0 + sum_i v_i G_i`.
fn eval_blocks<T: Scalar>(blocks: &[ConeBlock<T>], v: &[T]) -> Vec<Mat<T>> {
    blocks
        .iter()
        .map(|b| {
            let mut s = b.g0.clone();
            for (i, g) in b.gi.iter().enumerate() {
                if v[i] != T::zero() {
                    s = s.add(&g.scale(v[i]));
                }
            }
            s
        })
        .collect()
}

/// Feasibility/optimality measures for `v` on the original data.
///
/// With a primal witness `X >= 0`, weak duality bounds the distance to the
/// true optimum `p*` by `c.v - p* <= <X, S(v)> + |v.(c - A'(X))|`, so the
/// returned `relgap` is a certified relative optimality gap.
struct Measures<T> {
    obj: T,
    worst_margin: T,
    relgap: T,
    pres: T,
}

fn measures<T: Scalar>(
    blocks: &[ConeBlock<T>],
    c: &[T],
    v: &[T],
    witness: Option<&[Mat<T>]>,
) -> Result<Measures<T>> {
    let s = eval_blocks(blocks, v);
    let mut worst = T::infinity();
    for sk in &s {
        worst = worst.min(min_eig(sk)?);
    }
    let obj = vec_dot(c, v);
    let (mut relgap, mut pres) = (T::infinity(), T::infinity());
    if let Some(xs) = witness {
        let rp: Vec<T> = (0..c.len())
            .map(|i| {
                c[i] - blocks.iter().zip(xs).map(|(b, xk)| b.gi[i].dot(xk)).sum::<T>()
            })
            .collect();
        let cgap: T = xs.iter().zip(&s).map(|(xk, sk)| xk.dot(sk)).sum();
        let gap_cert = cgap.abs() + vec_dot(v, &rp).abs();
        pres = vec_norm(&rp) / (T::one() + vec_norm(c));
        relgap = gap_cert / (T::one() + obj.abs());
    }
    Ok(Measures { obj, worst_margin: worst, relgap, pres })
}

struct CoreResult<T> {
    status: CoreStatus,
    v: Vec<T>,
    witness: Option<Vec<Mat<T>>>,
    iters: usize,
    ray_residual: T,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CoreStatus {
    Optimal,
    Stalled,
    MaxIter,
    Infeasible,
}

/// One interior-point run from the cold start `X = S = I`, `v = 0`.
/// Returns the best iterate seen, with the primal witness mapped back to the
/// caller's (unscaled) data.
fn solve_core<T: Scalar>(
    blocks: &[ConeBlock<T>],
    c: &[T],
    tol_gap: T,
    tol_feas: T,
    max_iter: usize,
) -> Result<CoreResult<T>> {
    let nv = c.len();
    let tau = T::c(0.95);

    // Power-of-ten prescaling: per-variable magnitudes, per-block scales,
    // and an objective scale, so the cold start X = S = I is balanced.
    let mut mags = vec![T::zero(); nv];
    for b in blocks {
        for i in 0..nv {
            mags[i] = mags[i].max(b.gi[i].max_abs());
        }
    }
    let used: Vec<bool> = mags.iter().map(|&m| m > T::zero()).collect();
    let ten = T::c(10.0);
    let mut d = vec![T::one(); nv];
    for i in 0..nv {
        if used[i] {
            d[i] = ten.powf(-mags[i].log10().round());
        }
    }
    let tiny = T::c(1e-300);
    let mut sscale = Vec::with_capacity(blocks.len());
    let mut sb = Vec::with_capacity(blocks.len());
    for b in blocks {
        let mut s = b.g0.max_abs();
        for (g, &di) in b.gi.iter().zip(&d) {
            s = s.max(g.max_abs() * di);
        }
        let s = ten.powf(s.max(tiny).log10().round());
        sscale.push(s);
        let inv = T::one() / s;
        sb.push(ConeBlock::new(
            b.g0.scale(inv),
            b.gi.iter().zip(&d).map(|(g, &di)| g.scale(di * inv)).collect(),
        ));
    }
    let mut cs: Vec<T> = c.iter().zip(&d).map(|(&ci, &di)| ci * di).collect();
    let cobj = ten.powf(vec_max_abs(&cs).max(tiny).log10().round());
    for x in &mut cs {
        *x = *x / cobj;
    }

    let ntot: usize = sb.iter().map(|b| b.n).sum();
    let ntot_t = T::c(ntot as f64);
    let mut xs: Vec<Mat<T>> = sb.iter().map(|b| Mat::eye(b.n)).collect();
    let mut ss: Vec<Mat<T>> = sb.iter().map(|b| Mat::eye(b.n)).collect();
    let mut v = vec![T::zero(); nv];
    let cnorm = T::one() + vec_norm(&cs);
    let gnorm = T::one() + sb.iter().map(|b| b.g0.frob()).fold(T::zero(), T::max);

    // Best iterate seen so far: (score, v, X).
    let mut best_score = T::infinity();
    let mut best_v = v.clone();
    let mut best_x: Option<Vec<Mat<T>>> = None;
    let mut best_it = 0usize;
    let mut status = CoreStatus::MaxIter;
    let mut iters_done = 0usize;

    // A'(X) per variable: sum_k <G_i,k, X_k>.
    let adjoint = |xs: &[Mat<T>]| -> Vec<T> {
        (0..nv)
            .map(|i| sb.iter().zip(xs).map(|(b, xk)| b.gi[i].dot(xk)).sum())
            .collect()
    };

    for it in 0..max_iter {
        iters_done = it + 1;
        let ax = adjoint(&xs);
        let mut rp: Vec<T> = cs.iter().zip(&ax).map(|(&ci, &ai)| ci - ai).collect();
        for i in 0..nv {
            if !used[i] {
                rp[i] = T::zero();
            }
        }
        let rd: Vec<Mat<T>> = sb
            .iter()
            .zip(&ss)
            .map(|(b, sk)| {
                let mut r = sk.sub(&b.g0);
                for (i, g) in b.gi.iter().enumerate() {
                    if v[i] != T::zero() {
                        r = r.sub(&g.scale(v[i]));
                    }
                }
                r
            })
            .collect();
        let cgap: T = xs.iter().zip(&ss).map(|(xk, sk)| xk.dot(sk)).sum();
        let mu = cgap / ntot_t;
        let pobj: T = sb.iter().zip(&xs).map(|(b, xk)| b.g0.dot(xk)).sum();
        let dobj = vec_dot(&cs, &v);
        let pdgap = (pobj + dobj).abs() / (T::one() + pobj.abs() + dobj.abs());
        let relgap = cgap.abs() / (T::one() + dobj.abs());
        let pres = vec_norm(&rp) / cnorm;
        let dres = rd.iter().map(Mat::frob).fold(T::zero(), T::max) / gnorm;
        let score = relgap.max(pdgap).max(pres).max(dres);
        if score < best_score {
            best_score = score;
            best_v = v.clone();
            best_x = Some(xs.clone());
            best_it = it;
        }
        if relgap.max(pdgap) <= tol_gap && pres <= tol_feas && dres <= tol_feas {
            status = CoreStatus::Optimal;
            best_v = v.clone();
            best_x = Some(xs.clone());
            best_it = it;
            break;
        }
        // Improving-ray infeasibility test: a normalized X with A'(X) ~ 0 and
        // <G0, X> < 0 certifies that no feasible point exists. Checked before
        // the divergence guard: the ray reveals itself precisely when X blows
        // up, which is the same event the guard would abort on.
        let trx: T = xs.iter().map(Mat::trace).sum();
        let mut ray = T::zero();
        for i in 0..nv {
            if used[i] {
                ray = ray.max((ax[i] / trx).abs());
            }
        }
        let gx = pobj / trx;
        if ray < T::c(1e-9) && gx < T::c(-1e-9) {
            return Ok(CoreResult {
                status: CoreStatus::Infeasible,
                v: v.iter().zip(&d).map(|(&a, &b)| a * b).collect(),
                witness: None,
                iters: it,
                ray_residual: ray,
            });
        }
        if !score.is_finite() || score > T::c(1e6) * best_score {
            status = CoreStatus::Stalled;
            break;
        }

        // Nesterov–Todd scaling per block: W = T T', with T built from
        // S^(1/2) and the eigensystem of S^(1/2) X S^(1/2).
        let mut ws_m = Vec::with_capacity(sb.len());
        let mut ts_m = Vec::with_capacity(sb.len());
        let mut tinv_m = Vec::with_capacity(sb.len());
        let mut vs = Vec::with_capacity(sb.len());
        let mut ok = true;
        for (xk, sk) in xs.iter().zip(&ss) {
            let (wse, qs) = eigh(sk)?;
            if wse[0] <= T::zero() {
                ok = false;
                break;
            }
            let sq: Vec<T> = wse.iter().map(|&w| w.sqrt()).collect();
            let isq: Vec<T> = sq.iter().map(|&w| T::one() / w).collect();
            let sh = scale_cols(&qs, &sq).matmul(&qs.t());
            let shi = scale_cols(&qs, &isq).matmul(&qs.t());
            let (wm, qm) = eigh(&sym(&sh.matmul(xk).matmul(&sh)))?;
            if wm[0] <= T::zero() {
                ok = false;
                break;
            }
            let q4: Vec<T> = wm.iter().map(|&w| w.powf(T::c(0.25))).collect();
            let q4i: Vec<T> = q4.iter().map(|&w| T::one() / w).collect();
            let t = shi.matmul(&scale_cols(&qm, &q4));
            let tinv = scale_cols(&qm, &q4i).t().matmul(&sh);
            ws_m.push(t.matmul(&t.t()));
            ts_m.push(t);
            tinv_m.push(tinv);
            vs.push(wm.iter().map(|&w| w.sqrt()).collect::<Vec<T>>());
        }
        if !ok {
            status = CoreStatus::Stalled;
            break;
        }

        // Schur complement B_ij = sum_k <G_i, W G_j W>; unused variables get
        // a unit diagonal so the factorization stays nonsingular.
        let mut bmat = Mat::zeros(nv, nv);
        for (k, b) in sb.iter().enumerate() {
            let wgw: Vec<Option<Mat<T>>> = (0..nv)
                .map(|i| {
                    if used[i] {
                        Some(ws_m[k].matmul(&b.gi[i]).matmul(&ws_m[k]))
                    } else {
                        None
                    }
                })
                .collect();
            for i in 0..nv {
                if !used[i] {
                    continue;
                }
                for j in i..nv {
                    if !used[j] {
                        continue;
                    }
                    let add = b.gi[i].dot(wgw[j].as_ref().expect("used"));
                    bmat[(i, j)] = bmat[(i, j)] + add;
                }
            }
        }
        for i in 0..nv {
            for j in 0..i {
                bmat[(i, j)] = bmat[(j, i)];
            }
            if !used[i] {
                bmat[(i, i)] = T::one();
            }
        }
        let reg = T::c(1e-14) * (bmat.trace() / T::c(nv as f64)).max(T::one());
        let breg = bmat.add(&Mat::eye(nv).scale(reg));
        let lc = match cholesky(&SymMat::new(breg)?) {
            Ok(l) => l,
            Err(_) => {
                status = CoreStatus::Stalled;
                break;
            }
        };
        let chol_solve = |rhs: &[T]| -> Vec<T> {
            let n = rhs.len();
            let mut y = rhs.to_vec();
            for i in 0..n {
                let mut s = y[i];
                for j in 0..i {
                    s = s - lc[(i, j)] * y[j];
                }
                y[i] = s / lc[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for j in (i + 1)..n {
                    s = s - lc[(j, i)] * y[j];
                }
                y[i] = s / lc[(i, i)];
            }
            y
        };
        let bsolve = |rhs: &[T]| -> Vec<T> {
            let mut x = chol_solve(rhs);
            for _ in 0..2 {
                let bx = bmat.matvec(&x);
                let r: Vec<T> = rhs.iter().zip(&bx).map(|(&a, &b)| a - b).collect();
                let dx = chol_solve(&r);
                for (xi, di) in x.iter_mut().zip(&dx) {
                    *xi = *xi + *di;
                }
            }
            x
        };

        // Search direction for a given complementarity residual Rc.
        let direction = |rc: &[Mat<T>]| -> (Vec<T>, Vec<Mat<T>>, Vec<Mat<T>>) {
            let mut rhs: Vec<T> = (0..nv)
                .map(|i| {
                    sb.iter()
                        .enumerate()
                        .map(|(k, b)| {
                            b.gi[i].dot(&rc[k].add(&ws_m[k].matmul(&rd[k]).matmul(&ws_m[k])))
                        })
                        .sum::<T>()
                        - rp[i]
                })
                .collect();
            for i in 0..nv {
                if !used[i] {
                    rhs[i] = T::zero();
                }
            }
            let dv = bsolve(&rhs);
            let ds: Vec<Mat<T>> = sb
                .iter()
                .zip(&rd)
                .map(|(b, rdk)| {
                    let mut s = rdk.neg();
                    for (j, g) in b.gi.iter().enumerate() {
                        if dv[j] != T::zero() {
                            s = s.add(&g.scale(dv[j]));
                        }
                    }
                    s
                })
                .collect();
            let dx: Vec<Mat<T>> = (0..sb.len())
                .map(|k| sym(&rc[k].sub(&ws_m[k].matmul(&ds[k]).matmul(&ws_m[k]))))
                .collect();
            (dv, ds, dx)
        };

        // Max step keeping the scaled iterate in the cone.
        let max_step = |vk: &[T], dm: &Mat<T>| -> Result<T> {
            let sq: Vec<T> = vk.iter().map(|&w| w.sqrt()).collect();
            let scaled =
                Mat::from_fn(dm.rows(), dm.cols(), |i, j| dm[(i, j)] / (sq[i] * sq[j]));
            let lmin = min_eig(&sym(&scaled))?;
            Ok(if lmin >= T::zero() { T::infinity() } else { T::one() / (-lmin) })
        };
        let steps = |dx: &[Mat<T>], ds: &[Mat<T>], t: T| -> Result<(T, T)> {
            let mut ap = T::infinity();
            let mut ad = T::infinity();
            for k in 0..sb.len() {
                ap = ap.min(max_step(&vs[k], &tinv_m[k].matmul(&dx[k]).matmul(&tinv_m[k].t()))?);
                ad = ad.min(max_step(&vs[k], &ts_m[k].t().matmul(&ds[k]).matmul(&ts_m[k]))?);
            }
            Ok((T::one().min(t * ap), T::one().min(t * ad)))
        };

        // Predictor: pure affine direction Rc = -X.
        let rc_aff: Vec<Mat<T>> = xs.iter().map(Mat::neg).collect();
        let (_dv_a, ds_a, dx_a) = direction(&rc_aff);
        let (ap_a, ad_a) = steps(&dx_a, &ds_a, T::one())?;
        let gap_aff: T = xs
            .iter()
            .zip(&dx_a)
            .zip(ss.iter().zip(&ds_a))
            .map(|((xk, dxk), (sk, dsk))| {
                xk.add(&dxk.scale(ap_a)).dot(&sk.add(&dsk.scale(ad_a)))
            })
            .sum();
        let sigma = T::one().min((gap_aff / cgap).max(T::c(1e-10)).powi(3));

        // Corrector with the Mehrotra second-order term in the scaled space.
        let mut rc = Vec::with_capacity(sb.len());
        for k in 0..sb.len() {
            let dxa = tinv_m[k].matmul(&dx_a[k]).matmul(&tinv_m[k].t());
            let dsa = ts_m[k].t().matmul(&ds_a[k]).matmul(&ts_m[k]);
            let prod = sym(&dxa.matmul(&dsa));
            let n = sb[k].n;
            let rhs = Mat::from_fn(n, n, |i, j| {
                let diag = if i == j { vs[k][i] * vs[k][i] } else { T::zero() };
                let base = sigma * mu * if i == j { T::one() } else { T::zero() };
                base - diag - prod[(i, j)]
            });
            let ratio =
                Mat::from_fn(n, n, |i, j| T::c(2.0) * rhs[(i, j)] / (vs[k][i] + vs[k][j]));
            rc.push(ts_m[k].matmul(&ratio).matmul(&ts_m[k].t()));
        }
        let (dv, ds, dx) = direction(&rc);
        let t = if mu > T::c(1e-8) { tau } else { T::c(0.98).min(tau + T::c(0.03)) };
        let (mut ap, mut ad) = steps(&dx, &ds, t)?;
        // Runaway-variable guard: cap the dual step so |dv| stays bounded
        // relative to the current iterate.
        let cap = T::c(1e3) * (T::one() + vec_max_abs(&v));
        let mx = vec_max_abs(&dv) * ad;
        if mx > cap {
            ap = ap * cap / mx;
            ad = ad * cap / mx;
        }
        for k in 0..sb.len() {
            xs[k] = sym(&xs[k].add(&dx[k].scale(ap)));
            ss[k] = sym(&ss[k].add(&ds[k].scale(ad)));
        }
        for i in 0..nv {
            v[i] = v[i] + ad * dv[i];
        }

        // Primal feasibility lift: when the primal step was too small to
        // contract the equality residuals, correct X directly in the NT
        // metric. The already-factored Schur matrix gives the exact
        // least-norm correction: <G_i, W (sum_j w_j G_j) W> = (B w)_i.
        if ap < T::c(0.5) {
            let ax2 = adjoint(&xs);
            let mut rp2: Vec<T> =
                cs.iter().zip(&ax2).map(|(&ci, &ai)| ci - ai).collect();
            for i in 0..nv {
                if !used[i] {
                    rp2[i] = T::zero();
                }
            }
            if vec_norm(&rp2) / cnorm > T::c(10.0) * tol_feas {
                let wlift = bsolve(&rp2);
                let dxl: Vec<Mat<T>> = sb
                    .iter()
                    .enumerate()
                    .map(|(k, b)| {
                        let mut g = Mat::zeros(b.n, b.n);
                        for (j, gj) in b.gi.iter().enumerate() {
                            if wlift[j] != T::zero() {
                                g = g.add(&gj.scale(wlift[j]));
                            }
                        }
                        ws_m[k].matmul(&g).matmul(&ws_m[k])
                    })
                    .collect();
                let ndx = dxl.iter().map(Mat::max_abs).fold(T::zero(), T::max);
                let nx = xs.iter().map(Mat::max_abs).fold(T::zero(), T::max);
                if ndx <= T::c(0.1) * nx {
                    let mut tl = T::one();
                    for _ in 0..20 {
                        let trial: Vec<Mat<T>> = xs
                            .iter()
                            .zip(&dxl)
                            .map(|(xk, dk)| sym(&xk.add(&dk.scale(tl))))
                            .collect();
                        let mut interior = true;
                        for m in &trial {
                            if min_eig(m)? <= T::zero() {
                                interior = false;
                                break;
                            }
                        }
                        if interior {
                            xs = trial;
                            break;
                        }
                        tl = tl * T::c(0.5);
                    }
                }
            }
        }
    }

    // Map the primal witness back to the caller's data:
    // X_caller,k = (cobj / s_k) X_core,k.
    let witness = best_x.map(|bx| {
        bx.into_iter().zip(&sscale).map(|(xk, &sk)| xk.scale(cobj / sk)).collect()
    });
    let _ = best_it;
    Ok(CoreResult {
        status,
        v: best_v.iter().zip(&d).map(|(&a, &b)| a * b).collect(),
        witness,
        iters: iters_done,
        ray_residual: T::infinity(),
    })
}

/// Solves the block-diagonal SDP `min c.v  s.t.  G0 + sum v_i G_i >= 0`.
pub fn solve_blocks<T: Scalar>(
    blocks: &[ConeBlock<T>],
    c: &[T],
    opts: &SolveOptions<T>,
) -> Result<SdpSolution<T>> {
    let nv = c.len();
    for b in blocks {
        if b.gi.len() != nv {
            return Err(Error::MissingVariable { len: b.gi.len(), expected: nv });
        }
        if !b.g0.is_square() {
            return Err(Error::DimensionMismatch("constraint block must be square".into()));
        }
    }
    if blocks.is_empty() {
        return Err(Error::EmptyInput("no constraint blocks".into()));
    }

    // The margin option tightens every constraint up front; the solve then
    // only has to find a strictly interior point of the tightened set, and
    // the original constraints automatically hold with at least that margin.
    let work: Vec<ConeBlock<T>> = if opts.margin > T::zero() {
        blocks
            .iter()
            .map(|b| {
                ConeBlock::new(
                    b.g0.sub(&Mat::eye(b.n).scale(opts.margin)),
                    b.gi.clone(),
                )
            })
            .collect()
    } else {
        blocks.to_vec()
    };

    let mut y = vec![T::zero(); nv];
    let mut cands: Vec<Vec<Mat<T>>> = Vec::new();
    let mut rounds_done = 0usize;
    let mut total_iters = 0usize;

    for _round in 0..opts.max_rounds {
        rounds_done += 1;
        // Anchor at y and equilibrate the anchored constant per block with a
        // Ruiz congruence (row norms of the shifted G0 only: including the
        // coefficient rows would distort the geometry the core relies on).
        // Blocks whose anchored constant is negligible next to the original
        // data are left unscaled: equilibrating a numerically-zero matrix
        // produces astronomically large scalings.
        let mut shifted = Vec::with_capacity(work.len());
        let mut dss: Vec<Vec<T>> = Vec::with_capacity(work.len());
        for b in &work {
            let mut g0r = b.g0.clone();
            for (i, g) in b.gi.iter().enumerate() {
                if y[i] != T::zero() {
                    g0r = g0r.add(&g.scale(y[i]));
                }
            }
            let mut dvec = vec![T::one(); b.n];
            if g0r.max_abs() > T::c(1e-14) * (T::one() + b.g0.max_abs()) {
                for _ in 0..3 {
                    let m = congruence_scale(&g0r, &dvec);
                    let rn: Vec<T> = (0..b.n)
                        .map(|i| (0..b.n).map(|j| m[(i, j)] * m[(i, j)]).sum::<T>().sqrt())
                        .collect();
                    let floor = T::c(1e-8) * rn.iter().fold(T::c(1e-300), |a, &b| a.max(b));
                    for (di, &ri) in dvec.iter_mut().zip(&rn) {
                        *di = *di / ri.max(floor).sqrt();
                    }
                }
            }
            shifted.push(ConeBlock::new(
                congruence_scale(&g0r, &dvec),
                b.gi.iter().map(|g| congruence_scale(g, &dvec)).collect(),
            ));
            dss.push(dvec);
        }

        let res = solve_core(
            &shifted,
            c,
            opts.gap_tol * T::c(0.1),
            opts.feas_tol * T::c(0.1),
            opts.max_iter,
        )?;
        total_iters += res.iters;

        if res.status == CoreStatus::Infeasible {
            if rounds_done == 1 {
                return Ok(SdpSolution {
                    status: SdpStatus::Infeasible,
                    values: y.clone(),
                    objective_value: vec_dot(c, &y),
                    worst_margin: T::nan(),
                    relgap: T::infinity(),
                    primal_residual: T::infinity(),
                    ray_residual: Some(res.ray_residual),
                    rounds: rounds_done,
                    iterations: total_iters,
                });
            }
            break; // later rounds start strictly feasible; treat as a stall
        }

        let step = vec_max_abs(&res.v) / (T::one() + vec_max_abs(&y));
        for (yi, dvi) in y.iter_mut().zip(&res.v) {
            *yi = *yi + *dvi;
        }
        if let Some(w) = res.witness {
            // Map the round's witness back through the equilibration; keep
            // every candidate (an active 1x1 block can blow up the last
            // round's scaling and poison that witness).
            cands.push(
                w.into_iter().zip(&dss).map(|(xk, dvec)| congruence_scale(&xk, dvec)).collect(),
            );
        }
        if res.status == CoreStatus::Optimal && step < T::c(1e-9) {
            break;
        }
        if matches!(res.status, CoreStatus::Stalled | CoreStatus::MaxIter) && step < T::c(1e-12)
        {
            break;
        }
    }

    // Strict-margin polish: the interior-point optimum sits on (or
    // numerically past) the tightened boundary; lift every deficient
    // constraint eigenvalue to a small strictly positive level.
    nudge_margins(&work, c, &mut y, opts.gap_tol)?;

    // Certified gap: evaluate every witness candidate against the final
    // point and keep the best. Optimality is certified on the tightened
    // problem (the one actually optimized); the margin is measured on the
    // caller's original constraints.
    let mut best: Option<(Vec<Mat<T>>, T)> = None;
    for cand in cands {
        let mc = measures(&work, c, &y, Some(&cand))?;
        if best.as_ref().map_or(true, |(_, g)| mc.relgap < *g) {
            best = Some((cand, mc.relgap));
        }
    }
    let m = match &best {
        Some((w, _)) => measures(&work, c, &y, Some(w))?,
        None => measures(&work, c, &y, None)?,
    };
    let worst_margin = if opts.margin > T::zero() {
        measures(blocks, c, &y, None)?.worst_margin
    } else {
        m.worst_margin
    };

    let strictly_feasible = worst_margin > T::zero() && worst_margin >= opts.margin;
    let status = if strictly_feasible && m.relgap <= opts.gap_tol {
        SdpStatus::Optimal
    } else if strictly_feasible {
        SdpStatus::Feasible
    } else {
        SdpStatus::NumericalFailure
    };

    Ok(SdpSolution {
        status,
        values: y,
        objective_value: m.obj,
        worst_margin,
        relgap: m.relgap,
        primal_residual: m.pres,
        ray_residual: None,
        rounds: rounds_done,
        iterations: total_iters,
    })
}

/// `u' M v` for dense `M`.
fn quad_form<T: Scalar>(m: &Mat<T>, u: &[T], v: &[T]) -> T {
    let mut acc = T::zero();
    for i in 0..m.rows() {
        if u[i] == T::zero() {
            continue;
        }
        let mut row = T::zero();
        for j in 0..m.cols() {
            row = row + m[(i, j)] * v[j];
        }
        acc = acc + u[i] * row;
    }
    acc
}

/// Lifts every deficient constraint eigenvalue of `S(y)` to a small strictly
/// positive level by damped Newton steps on the projected cluster matrices.
///
/// For each block, the eigenpairs below a cutoff form a near-null cluster
/// `U`; the step solves the least-norm linear system that raises the
/// deficient diagonal entries of `U' S U` to the target while pinning the
/// off-diagonal entries (which stops eigenvector rotation from leaking the
/// gain into a neighbor). The minimum margin is concave in `y`, so damped
/// ascent converges; the objective drift is kept a fixed fraction of the
/// optimality budget `gap_tol * (1 + |obj|)`.
fn nudge_margins<T: Scalar>(
    blocks: &[ConeBlock<T>],
    c: &[T],
    y: &mut [T],
    gap_tol: T,
) -> Result<()> {
    let nv = c.len();
    let eig_all = |y: &[T]| -> Result<Vec<(Mat<T>, Vec<T>, Mat<T>)>> {
        eval_blocks(blocks, y)
            .into_iter()
            .map(|s| {
                let (w, q) = eigh(&s)?;
                Ok((s, w, q))
            })
            .collect()
    };
    let scale = eval_blocks(blocks, y)
        .iter()
        .map(Mat::max_abs)
        .fold(T::zero(), T::max);
    let target = T::c(1e-14) * (T::one() + scale);
    let floor = T::c(1e-15) * (T::one() + scale);
    let cutoff = T::c(1e4) * target;
    let obj0 = vec_dot(c, y);
    let budget = T::c(0.25) * gap_tol * (T::one() + obj0.abs());

    for _ in 0..50 {
        let eb = eig_all(y)?;
        let mmin = eb.iter().map(|(_, w, _)| w[0]).fold(T::infinity(), T::min);
        let drift = (vec_dot(c, y) - obj0).abs();
        if mmin >= target || (mmin >= floor && drift > budget) {
            return Ok(());
        }
        if drift > T::c(4.0) * budget {
            return Ok(());
        }

        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut need: Vec<T> = Vec::new();
        for ((s, w, q), b) in eb.iter().zip(blocks) {
            let kdef = w.iter().take_while(|&&lam| lam < cutoff).count();
            if kdef == 0 {
                continue;
            }
            let cols: Vec<Vec<T>> = (0..kdef)
                .map(|a| (0..b.n).map(|r| q[(r, a)]).collect())
                .collect();
            for a in 0..kdef {
                for bb in a..kdef {
                    rows.push(
                        (0..nv).map(|i| quad_form(&b.gi[i], &cols[a], &cols[bb])).collect(),
                    );
                    let p_ab = quad_form(s, &cols[a], &cols[bb]);
                    let tgt = if a == bb { T::c(3.0) * target } else { T::zero() };
                    let nd = if a == bb && p_ab >= tgt { T::zero() } else { tgt - p_ab };
                    need.push(nd);
                }
            }
        }
        if rows.is_empty() {
            return Ok(());
        }

        // Least-norm step through the Gram system (A A' + reg) w = need,
        // step = A' w.
        let nr = rows.len();
        let mut aat = Mat::zeros(nr, nr);
        for i in 0..nr {
            for j in i..nr {
                let v = vec_dot(&rows[i], &rows[j]);
                aat[(i, j)] = v;
                aat[(j, i)] = v;
            }
        }
        let reg = T::c(1e-12) * (aat.trace() / T::c(nr as f64)).max(T::one());
        for i in 0..nr {
            aat[(i, i)] = aat[(i, i)] + reg;
        }
        let mut rhs = Mat::zeros(nr, 1);
        for i in 0..nr {
            rhs[(i, 0)] = need[i];
        }
        let wts = match crate::matrix::solve_linear(&aat, &rhs) {
            Ok(w) => w,
            Err(_) => return Ok(()),
        };
        let step: Vec<T> = (0..nv)
            .map(|i| {
                rows.iter()
                    .enumerate()
                    .map(|(k, r)| r[i] * wts[(k, 0)])
                    .sum()
            })
            .collect();

        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..25 {
            let trial: Vec<T> = y.iter().zip(&step).map(|(&a, &s)| a + t * s).collect();
            let m2 = eig_all(&trial)?
                .iter()
                .map(|(_, w, _)| w[0])
                .fold(T::infinity(), T::min);
            if m2 > mmin {
                y.copy_from_slice(&trial);
                accepted = true;
                break;
            }
            t = t * T::c(0.5);
        }
        if !accepted {
            return Ok(());
        }
    }
    Ok(())
}

/// Solves a [`SynthesisProgram`]: converts each constraint to PSD form and
/// runs the block solver.
pub fn solve_program<T: Scalar>(
    program: &SynthesisProgram<T>,
    opts: &SolveOptions<T>,
) -> Result<SdpSolution<T>> {
    let nv = program.layout.total();
    if program.objective.len() != nv {
        return Err(Error::MissingVariable { len: program.objective.len(), expected: nv });
    }
    let blocks: Vec<ConeBlock<T>> = program
        .constraints
        .iter()
        .map(|lmi| {
            let (g0, gi) = lmi.psd_form();
            ConeBlock::new(g0, gi)
        })
        .collect();
    solve_blocks(&blocks, &program.objective, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn opts() -> SolveOptions<f64> {
        SolveOptions::default()
    }

    fn mat(rows: &[Vec<f64>]) -> Mat<f64> {
        Mat::from_rows(rows).unwrap()
    }

    #[test]
    fn scalar_lower_bound() {
        // min v  s.t.  v - 1 >= 0  ->  v = 1.
        let b = ConeBlock::new(mat(&[vec![-1.0]]), vec![mat(&[vec![1.0]])]);
        let sol = solve_blocks(&[b], &[1.0], &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.values[0] - 1.0).abs() < 1e-6, "v = {}", sol.values[0]);
        assert!(sol.worst_margin > 0.0);
    }

    #[test]
    fn scalar_upper_bound_via_negation() {
        // max v  s.t.  v <= 3  ->  min -v  s.t.  3 - v >= 0.
        let b = ConeBlock::new(mat(&[vec![3.0]]), vec![mat(&[vec![-1.0]])]);
        let sol = solve_blocks(&[b], &[-1.0], &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.values[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn min_t_shifts_matrix_to_psd() {
        // min t  s.t.  tI - A >= 0  ->  t = lambda_max(A) = 1 for the
        // symmetry-forced pair.
        let a = mat(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let b = ConeBlock::new(a.neg(), vec![Mat::eye(2)]);
        let sol = solve_blocks(&[b], &[1.0], &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.values[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn min_t_battery_matches_eigen_oracle() {
        // min t s.t. tI - A >= 0 has the analytic answer lambda_max(A);
        // randomized battery against the eigensolver.
        let mut rng = StdRng::seed_from_u64(31);
        for k in 0..15 {
            let n = 2 + k % 3;
            let raw = Mat::from_fn(n, n, |_, _| rng.gen_range(-3.0..3.0));
            let a = sym(&raw);
            let lmax = {
                let (vals, _) = eigh(&a).unwrap();
                *vals.last().unwrap()
            };
            let b = ConeBlock::new(a.neg(), vec![Mat::eye(n)]);
            let sol = solve_blocks(&[b], &[1.0], &opts()).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal, "case {k}");
            assert!(
                (sol.values[0] - lmax).abs() <= 1e-6 * (1.0 + lmax.abs()),
                "case {k}: got {} want {lmax}",
                sol.values[0]
            );
        }
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        // v - 1 >= 0 and -v >= 0 cannot hold together.
        let b1 = ConeBlock::new(mat(&[vec![-1.0]]), vec![mat(&[vec![1.0]])]);
        let b2 = ConeBlock::new(mat(&[vec![0.0]]), vec![mat(&[vec![-1.0]])]);
        let sol = solve_blocks(&[b1, b2], &[1.0], &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        let ray = sol.ray_residual.expect("infeasible carries a ray residual");
        assert!(ray < 1e-6, "ray residual {ray}");
    }

    #[test]
    fn matrix_infeasibility_detected() {
        // tI + A >= 0 and -tI - A - I >= 0 for the same t is impossible.
        let a = mat(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let b1 = ConeBlock::new(a.clone(), vec![Mat::eye(2)]);
        let b2 = ConeBlock::new(a.neg().sub(&Mat::eye(2)), vec![Mat::eye(2).neg()]);
        let sol = solve_blocks(&[b1, b2], &[1.0], &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn objective_and_data_scaling_covariance() {
        // Rescaling the objective or the constraint data by powers of ten
        // must not move the optimizer.
        let a = mat(&[vec![1.5, -0.5], vec![-0.5, 0.25]]);
        for scale in [1e-3, 1e3] {
            let b = ConeBlock::new(a.neg().scale(scale), vec![Mat::eye(2).scale(scale)]);
            let sol = solve_blocks(&[b], &[scale], &opts()).unwrap();
            let (vals, _) = eigh(&a).unwrap();
            let lmax = *vals.last().unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal, "scale {scale}");
            assert!(
                (sol.values[0] - lmax).abs() <= 1e-6 * (1.0 + lmax.abs()),
                "scale {scale}: {} vs {lmax}",
                sol.values[0]
            );
        }
    }

    #[test]
    fn relaxing_a_bound_improves_the_optimum_monotonically() {
        // min v s.t. v >= b: optimum tracks the bound b.
        let mut prev = f64::INFINITY;
        for bound in [3.0, 2.0, 1.0, 0.5] {
            let b = ConeBlock::new(mat(&[vec![-bound]]), vec![mat(&[vec![1.0]])]);
            let sol = solve_blocks(&[b], &[1.0], &opts()).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            assert!(sol.objective_value < prev);
            prev = sol.objective_value;
        }
    }

    #[test]
    fn two_variable_coupled_blocks() {
        // min x + y  s.t.  [[x, 1], [1, y]] >= 0, x <= 4, y <= 4.
        // Optimal at x = y = 1 (det = xy - 1 = 0 active), objective 2.
        let g0 = mat(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let gx = mat(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let gy = mat(&[vec![0.0, 0.0], vec![0.0, 1.0]]);
        let b1 = ConeBlock::new(g0, vec![gx, gy]);
        let bx = ConeBlock::new(mat(&[vec![4.0]]), vec![mat(&[vec![-1.0]]), mat(&[vec![0.0]])]);
        let by = ConeBlock::new(mat(&[vec![4.0]]), vec![mat(&[vec![0.0]]), mat(&[vec![-1.0]])]);
        let sol = solve_blocks(&[b1, bx, by], &[1.0, 1.0], &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-6, "obj {}", sol.objective_value);
        assert!((sol.values[0] - 1.0).abs() < 1e-4);
        assert!((sol.values[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn reported_margin_is_strictly_positive_on_success() {
        let mut rng = StdRng::seed_from_u64(33);
        for k in 0..10 {
            let n = 2 + (k % 2);
            let a = sym(&Mat::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0)));
            let b = ConeBlock::new(a.neg(), vec![Mat::eye(n)]);
            let sol = solve_blocks(&[b], &[1.0], &opts()).unwrap();
            match sol.status {
                SdpStatus::Optimal | SdpStatus::Feasible => {
                    assert!(
                        sol.worst_margin > 0.0,
                        "case {k}: margin {}",
                        sol.worst_margin
                    );
                }
                other => panic!("case {k}: unexpected status {other:?}"),
            }
        }
    }

    #[test]
    fn unused_variable_is_left_untouched() {
        // Second variable appears in no constraint; solver must not let it
        // wander or crash the Schur factorization.
        let b = ConeBlock::new(
            mat(&[vec![-1.0]]),
            vec![mat(&[vec![1.0]]), mat(&[vec![0.0]])],
        );
        let sol = solve_blocks(&[b], &[1.0, 0.0], &opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.values[0] - 1.0).abs() < 1e-6);
        assert_eq!(sol.values[1], 0.0);
    }
}
