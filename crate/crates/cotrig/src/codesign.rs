//! Controller/trigger synthesis: turns a solved matrix-inequality program
//! into a dynamic output-feedback controller and an event-trigger
//! configuration, bounds the admissible dwell time, and independently
//! re-verifies the closed loop against the flow-stability certificate.
//!
//! The pipeline is [`design`]: assemble the constraints, minimize the
//! weighted sum of the trigger scalars with the cone solver, reconstruct the
//! controller from the decision variables, derive the trigger gains and the
//! dwell time, and build a [`VerificationCertificate`] that re-checks the
//! Lyapunov decay condition on the assembled closed loop from scratch.

use crate::error::{Error, Result};
use crate::lmi::{
    build_coupling_lmi, build_growth_lmi, build_stability_lmi, scalar_positivity, DecisionLayout,
    DecisionPoint,
};
use crate::matrix::{eig_range, inverse, solve_linear, spectral_norm, svd_square, Mat, SymMat};
use crate::model::{
    ClosedLoopMatrices, ControllerRealization, PlantModel, TriggerConfig, VerificationCertificate,
};
use crate::scalar::Scalar;
use crate::sdp::{solve_program, SdpSolution, SdpStatus, SolveOptions, SynthesisProgram};

/// Relative definiteness margin baked into every matrix constraint at design
/// time, so the returned design sits strictly inside the feasible cone
/// rather than on its boundary (where simulation-time round-off could flip a
/// certificate sign).
pub const DESIGN_MARGIN_REL: f64 = 1e-5;

/// Absolute positivity floor imposed on the scalar unknowns of the synthesis
/// program (`mu`, `eps`, and the growth budgets when constrained).
pub const SCALAR_FLOOR: f64 = 1e-7;

/// Largest dwell time certified for trigger gain `gamma` against the
/// inter-sample error growth bound `growth`: the time an error-dynamics
/// comparison system needs to escape, obtained in closed form from the
/// scalar Riccati equation it obeys.
///
/// With `r = sqrt(|(gamma/growth)^2 - 1|)` the bound is
/// `atan(r) / (growth * r)` when `gamma > growth`, `1 / growth` at the
/// branch point (tested to relative tolerance `1e-9`), and
/// `atanh(r) / (growth * r)` when `gamma < growth`. The bound is strictly
/// decreasing in both arguments and continuous across the branch point;
/// `gamma = 0` yields an unbounded horizon (`+inf`).
pub fn masp<T: Scalar>(gamma: T, growth: T) -> Result<T> {
    if !(growth > T::zero()) || !growth.is_finite() {
        return Err(Error::InvalidInput(format!("growth bound must be positive, got {growth}")));
    }
    if gamma < T::zero() || !gamma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "trigger gain must be nonnegative, got {gamma}"
        )));
    }
    let ratio = gamma / growth;
    if (ratio - T::one()).abs() <= T::c(1e-9) * T::one().max(ratio) {
        return Ok(T::one() / growth);
    }
    let r = (ratio * ratio - T::one()).abs().sqrt();
    let horizon = if ratio > T::one() { r.atan() } else { r.atanh() };
    Ok(horizon / (growth * r))
}

/// Guaranteed minimum inter-transmission time of a trigger: the contract the
/// simulator's statistics are tested against is that no two transmissions
/// are ever closer than this, and that zero-state solutions transmit exactly
/// this often.
pub fn guaranteed_dwell<T: Scalar>(trigger: &TriggerConfig<T>) -> T {
    trigger.dwell
}

fn check_controller_dims<T: Scalar>(
    plant: &PlantModel<T>,
    k: &ControllerRealization<T>,
) -> Result<()> {
    let (np, ny, nu) = (plant.np(), plant.ny(), plant.nu());
    let ok = k.a.rows() == np
        && k.a.cols() == np
        && k.b.rows() == np
        && k.b.cols() == ny
        && k.c.rows() == nu
        && k.c.cols() == np;
    if !ok {
        return Err(Error::DimensionMismatch(format!(
            "controller ({}x{}, {}x{}, {}x{}) does not match plant with {np} states, {ny} outputs, {nu} inputs",
            k.a.rows(),
            k.a.cols(),
            k.b.rows(),
            k.b.cols(),
            k.c.rows(),
            k.c.cols()
        )));
    }
    Ok(())
}

/// Inter-sample error growth bound of the closed loop: the larger of the
/// spectral norms of the controller feed-through product `C_c B_c` and the
/// plant feed-through product `C_p B_p`. Equals the spectral norm of the
/// error-to-error block of [`assemble_closed_loop`] because that block is
/// block-anti-diagonal in exactly these two products.
pub fn growth_bound<T: Scalar>(
    plant: &PlantModel<T>,
    controller: &ControllerRealization<T>,
) -> Result<T> {
    check_controller_dims(plant, controller)?;
    let controller_product = controller.c.matmul(&controller.b);
    let plant_product = plant.c().matmul(plant.b());
    Ok(spectral_norm(&controller_product)?.max(spectral_norm(&plant_product)?))
}

/// Assembles the flow matrices of the networked interconnection: the plant
/// driven by the held controller output and the controller driven by the
/// held plant output, with the hold errors `e = (e_y, e_u)` as extra states
/// whose flow is the negated derivative of the corresponding signal.
pub fn assemble_closed_loop<T: Scalar>(
    plant: &PlantModel<T>,
    controller: &ControllerRealization<T>,
) -> Result<ClosedLoopMatrices<T>> {
    check_controller_dims(plant, controller)?;
    let (np, ny, nu) = (plant.np(), plant.ny(), plant.nu());
    let (ap, bp, cp) = (plant.a(), plant.b(), plant.c());
    let (ac, bc, cc) = (&controller.a, &controller.b, &controller.c);

    let mut a1 = Mat::zeros(2 * np, 2 * np);
    a1.set_block(0, 0, ap);
    a1.set_block(0, np, &bp.matmul(cc));
    a1.set_block(np, 0, &bc.matmul(cp));
    a1.set_block(np, np, ac);

    let mut b1 = Mat::zeros(2 * np, ny + nu);
    b1.set_block(0, ny, bp);
    b1.set_block(np, 0, bc);

    let mut a2 = Mat::zeros(ny + nu, 2 * np);
    a2.set_block(0, 0, &cp.matmul(ap).neg());
    a2.set_block(0, np, &cp.matmul(bp).matmul(cc).neg());
    a2.set_block(ny, 0, &cc.matmul(bc).matmul(cp).neg());
    a2.set_block(ny, np, &cc.matmul(ac).neg());

    let mut b2 = Mat::zeros(ny + nu, ny + nu);
    b2.set_block(0, ny, &cp.matmul(bp).neg());
    b2.set_block(ny, 0, &cc.matmul(bc).neg());

    let mut cbar = Mat::zeros(ny, 2 * np);
    cbar.set_block(0, 0, cp);

    Ok(ClosedLoopMatrices { a1, b1, a2, b2, cbar })
}

/// How to split the defect `I - X*Y` into the invertible factor pair
/// `(U, V)` with `U V' = I - X*Y` during controller reconstruction. Any
/// valid pair yields the same closed-loop behavior (the controller state
/// basis changes, its transfer function does not).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factorization {
    /// Split the defect's singular values evenly: `U = W s^(1/2)`,
    /// `V = Q s^(1/2)` from the SVD `W diag(s) Q'`. Best conditioning; the
    /// default.
    Balanced,
    /// Take the defect itself as `U` and the identity as `V`. Kept as a
    /// cross-check branch.
    Direct,
}

fn singular_factor(e: Error) -> Error {
    Error::SingularFactor(format!("defect I - X*Y is numerically singular: {e}"))
}

/// Recovers the controller realization from a synthesis solution.
///
/// Factors `I - X*Y = U V'`, then inverts the synthesis change of variables:
/// `A_c = V^-1 (M - Y A_p X - Y B_p N - Z C_p X) U^-T`, `B_c = V^-1 Z`,
/// `C_c = N U^-T`. The trigger-relevant product obeys
/// `C_c B_c = N (I - Y X)^-1 Z` for every factorization choice, which is the
/// identity the growth constraint relies on.
pub fn reconstruct<T: Scalar>(
    point: &DecisionPoint<T>,
    plant: &PlantModel<T>,
    factorization: Factorization,
) -> Result<ControllerRealization<T>> {
    let np = plant.np();
    if point.x.rows() != np || point.n.cols() != np || point.z.cols() != plant.ny() {
        return Err(Error::DimensionMismatch(
            "decision variables do not match the plant dimensions".into(),
        ));
    }
    let defect = Mat::eye(np).sub(&point.x.matmul(&point.y));
    let (u, v) = match factorization {
        Factorization::Balanced => {
            let (w, s, q) = svd_square(&defect).map_err(singular_factor)?;
            let roots: Vec<T> = s.iter().map(|&si| si.sqrt()).collect();
            let u = Mat::from_fn(np, np, |i, j| w[(i, j)] * roots[j]);
            let v = Mat::from_fn(np, np, |i, j| q[(i, j)] * roots[j]);
            (u, v)
        }
        Factorization::Direct => (defect.clone(), Mat::eye(np)),
    };
    let core = point
        .m
        .sub(&point.y.matmul(plant.a()).matmul(&point.x))
        .sub(&point.y.matmul(plant.b()).matmul(&point.n))
        .sub(&point.z.matmul(plant.c()).matmul(&point.x));
    let vinv_core = solve_linear(&v, &core).map_err(singular_factor)?;
    let a = solve_linear(&u, &vinv_core.t()).map_err(singular_factor)?.t();
    let b = solve_linear(&v, &point.z).map_err(singular_factor)?;
    let c = solve_linear(&u, &point.n.t()).map_err(singular_factor)?.t();
    let residual = u.matmul(&v.t()).add(&point.x.matmul(&point.y)).sub(&Mat::eye(np)).max_abs();
    if residual > T::c(1e-8) * (T::one() + defect.max_abs()) {
        return Err(Error::SingularFactor(format!(
            "factor pair fails U*V' = I - X*Y (residual {:.3e})",
            residual.to_f64_lossy()
        )));
    }
    Ok(ControllerRealization { a, b, c, u, v })
}

/// Re-verifies a reconstructed design from first principles.
///
/// Completes the synthesis blocks into the Lyapunov matrix (build the basis
/// `S = [[X, U], [U', Xhat]]` with `Xhat = -U' Y V^-T`, set `P = S^-1`,
/// check `P` positive definite), assembles the closed loop, and evaluates
/// the flow-decay inequality
/// `[[A1' P + P A1 + A2' A2 + eps1 Cbar' Cbar, P B1], [B1' P, -mu I]]`,
/// whose maximum eigenvalue must be strictly negative. When the growth
/// constraint was imposed, additionally checks that the budget product
/// `alpha * beta` strictly covers the largest eigenvalue of
/// `(C_c B_c)' (C_c B_c)`.
///
/// Fails with [`Error::VerificationFailed`] naming the violated item.
pub fn verify<T: Scalar>(
    plant: &PlantModel<T>,
    controller: &ControllerRealization<T>,
    point: &DecisionPoint<T>,
    growth_imposed: bool,
) -> Result<VerificationCertificate<T>> {
    check_controller_dims(plant, controller)?;
    if point.mu <= T::zero() || point.eps <= T::zero() {
        return Err(Error::VerificationFailed(format!(
            "trigger scalars must be positive, got mu={}, eps={}",
            point.mu, point.eps
        )));
    }
    let np = plant.np();
    let basis_err = |e: Error| {
        Error::VerificationFailed(format!("certificate basis is numerically singular: {e}"))
    };
    // Completion blocks from the inversion identities of the certificate
    // basis; both are symmetric in exact arithmetic, so symmetrize.
    let xhat_raw =
        solve_linear(&controller.v, &point.y.matmul(&controller.u)).map_err(basis_err)?.neg().t();
    let xhat = xhat_raw.add(&xhat_raw.t()).scale(T::c(0.5));
    let yhat_raw =
        solve_linear(&controller.u, &point.x.matmul(&controller.v)).map_err(basis_err)?.neg();
    let yhat = yhat_raw.add(&yhat_raw.t()).scale(T::c(0.5));

    let mut s = Mat::zeros(2 * np, 2 * np);
    s.set_block(0, 0, &point.x);
    s.set_block(0, np, &controller.u);
    s.set_block(np, 0, &controller.u.t());
    s.set_block(np, np, &xhat);
    let p = SymMat::new(inverse(&s).map_err(basis_err)?)?;
    let (p_min_eig, _) = eig_range(&p)?;
    if p_min_eig <= T::zero() {
        return Err(Error::VerificationFailed(format!(
            "energy matrix is not positive definite (min eigenvalue {:.3e})",
            p_min_eig.to_f64_lossy()
        )));
    }

    let cl = assemble_closed_loop(plant, controller)?;
    let (nx, ne) = (cl.nx(), cl.ne());
    let pm = p.as_mat();
    let eps1 = T::one() / point.eps;
    let decay = pm
        .matmul(&cl.a1)
        .add(&cl.a1.t().matmul(pm))
        .add(&cl.a2.t().matmul(&cl.a2))
        .add(&cl.cbar.t().matmul(&cl.cbar).scale(eps1));
    let mut flow = Mat::zeros(nx + ne, nx + ne);
    flow.set_block(0, 0, &decay);
    let coupling = pm.matmul(&cl.b1);
    flow.set_block(0, nx, &coupling);
    flow.set_block(nx, 0, &coupling.t());
    flow.set_block(nx, nx, &Mat::eye(ne).scale(-point.mu));
    let (_, stability_lmi_max_eig) = eig_range(&SymMat::new(flow)?)?;
    if stability_lmi_max_eig >= T::zero() {
        return Err(Error::VerificationFailed(format!(
            "flow stability inequality violated (max eigenvalue {:.3e})",
            stability_lmi_max_eig.to_f64_lossy()
        )));
    }

    let growth_product_gap = if growth_imposed {
        let product = controller.c.matmul(&controller.b);
        let (_, lmax) = eig_range(&SymMat::new(product.t().matmul(&product))?)?;
        let gap = point.alpha * point.beta - lmax;
        if gap <= T::zero() {
            return Err(Error::VerificationFailed(format!(
                "growth budget {:.6e} does not cover the feed-through product (largest eigenvalue {:.6e})",
                (point.alpha * point.beta).to_f64_lossy(),
                lmax.to_f64_lossy()
            )));
        }
        Some(gap)
    } else {
        None
    };

    Ok(VerificationCertificate {
        p,
        xhat,
        yhat,
        stability_lmi_max_eig,
        eps2: -stability_lmi_max_eig,
        p_min_eig,
        growth_product_gap,
    })
}

/// Objective weights of the synthesis program, in the order the weighted sum
/// is written: `mu` (trigger gain), `alpha` and `beta` (growth budgets),
/// `eps` (output-dependence scale).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignWeights<T> {
    pub mu: T,
    pub alpha: T,
    pub beta: T,
    pub eps: T,
}

impl<T: Scalar> DesignWeights<T> {
    pub fn new(mu: T, alpha: T, beta: T, eps: T) -> Self {
        DesignWeights { mu, alpha, beta, eps }
    }
}

impl<T: Scalar> Default for DesignWeights<T> {
    /// Weight the trigger gain and both growth budgets equally and leave the
    /// output-dependence scale free (the dwell-time-maximizing choice).
    fn default() -> Self {
        DesignWeights::new(T::one(), T::one(), T::one(), T::zero())
    }
}

/// Everything a successful synthesis produces: the controller, the trigger,
/// the independently re-checked certificate, the structured decision
/// variables, and the raw solver diagnostics.
#[derive(Clone, Debug)]
pub struct DesignOutcome<T> {
    pub controller: ControllerRealization<T>,
    pub trigger: TriggerConfig<T>,
    pub certificate: VerificationCertificate<T>,
    pub point: DecisionPoint<T>,
    pub solution: SdpSolution<T>,
}

/// Co-designs controller and trigger for a plant.
///
/// Minimizes `weights.mu * mu + weights.alpha * alpha + weights.beta * beta
/// + weights.eps * eps` subject to the stability and coupling constraints
/// (plus the growth constraint when `include_growth` is set), reconstructs
/// the controller with the balanced factorization, derives the trigger
/// (`gamma = sqrt(mu)`, `eps1 = 1/eps`, dwell `= theta * masp`), and returns
/// a passing certificate.
///
/// Growth-budget weights require `include_growth`; without the constraint
/// those variables are unbounded below and the program would be ill-posed.
/// A constrained scalar whose weight is zero is a flat direction of the
/// objective, so it is pinned with a tie-break weight of `1e-6` times the
/// largest weight; its solved value is a point on the optimal face and other
/// solvers may legitimately report a different one.
pub fn design<T: Scalar>(
    plant: &PlantModel<T>,
    weights: &DesignWeights<T>,
    include_growth: bool,
    theta: T,
    opts: &SolveOptions<T>,
) -> Result<DesignOutcome<T>> {
    for w in [weights.mu, weights.alpha, weights.beta, weights.eps] {
        if w < T::zero() || !w.is_finite() {
            return Err(Error::InvalidInput(format!(
                "objective weights must be finite and nonnegative, got {w}"
            )));
        }
    }
    if (weights.alpha > T::zero() || weights.beta > T::zero()) && !include_growth {
        return Err(Error::InvalidInput(
            "growth-budget weights require the growth constraint to be included".into(),
        ));
    }

    let layout = DecisionLayout::for_plant(plant);
    let scalar_floor = T::c(SCALAR_FLOOR);

    let mut objective = vec![T::zero(); layout.total()];
    objective[layout.mu_index()] = weights.mu;
    objective[layout.alpha_index()] = weights.alpha;
    objective[layout.beta_index()] = weights.beta;
    objective[layout.eps_index()] = weights.eps;
    let tie = T::c(1e-6) * weights.mu.max(weights.alpha).max(weights.beta).max(weights.eps);
    let mut constrained_scalars = vec![layout.mu_index(), layout.eps_index()];
    if include_growth {
        constrained_scalars.push(layout.alpha_index());
        constrained_scalars.push(layout.beta_index());
    }
    for idx in constrained_scalars {
        if objective[idx] == T::zero() {
            objective[idx] = tie;
        }
    }

    // Solve with a progressively relaxed feasibility tightening. The first
    // rung keeps solutions comfortably inside the true inequalities; plants
    // whose programs are so close to the feasibility boundary that the
    // tightened problem loses its interior get retried with a tenfold
    // smaller tightening before we give up. The certificate produced at any
    // rung is re-checked against the untightened inequalities, so a relaxed
    // rung never weakens the result.
    let mut last_err = None;
    for relax in [1.0, 1e-1, 1e-2] {
        let matrix_margin = T::c(DESIGN_MARGIN_REL * relax);
        let mut constraints = vec![
            build_stability_lmi(plant, &layout, matrix_margin)?,
            build_coupling_lmi(plant, &layout, matrix_margin)?,
            scalar_positivity(&layout, layout.mu_index(), scalar_floor),
            scalar_positivity(&layout, layout.eps_index(), scalar_floor),
        ];
        if include_growth {
            constraints.push(build_growth_lmi(plant, &layout, matrix_margin)?);
            constraints.push(scalar_positivity(&layout, layout.alpha_index(), scalar_floor));
            constraints.push(scalar_positivity(&layout, layout.beta_index(), scalar_floor));
        }

        let program = SynthesisProgram { layout, constraints, objective: objective.clone() };
        let solution = solve_program(&program, opts)?;
        match solution.status {
            SdpStatus::Infeasible => {
                last_err = Some(Error::Infeasible {
                    ray_residual: solution
                        .ray_residual
                        .map(Scalar::to_f64_lossy)
                        .unwrap_or(f64::NAN),
                });
                continue;
            }
            SdpStatus::NumericalFailure => {
                last_err = Some(Error::NumericalFailure(format!(
                    "synthesis solve did not reach a strictly feasible point (relative gap {:.3e}, worst margin {:.3e})",
                    solution.relgap.to_f64_lossy(),
                    solution.worst_margin.to_f64_lossy()
                )));
                continue;
            }
            SdpStatus::Optimal | SdpStatus::Feasible => {}
        }

        let point = layout.unpack(&solution.values)?;
        let controller = reconstruct(&point, plant, Factorization::Balanced)?;
        let growth = growth_bound(plant, &controller)?;
        let trigger = TriggerConfig::from_design(point.mu, point.eps, growth, theta)?;
        trigger.validate_against(point.mu, point.eps)?;
        let certificate = verify(plant, &controller, &point, include_growth)?;
        return Ok(DesignOutcome { controller, trigger, certificate, point, solution });
    }
    Err(last_err.expect("at least one solve rung ran"))
}
