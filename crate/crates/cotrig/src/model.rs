//! Core data types: the plant, the synthesized controller, the transmission
//! trigger, the assembled closed-loop matrices, and the stability
//! certificate.

use crate::error::{Error, Result};
use crate::matrix::{Mat, SymMat};
use crate::scalar::Scalar;

/// Continuous-time LTI plant `x' = A x + B u`, `y = C x`.
#[derive(Clone, Debug)]
pub struct PlantModel<T> {
    a: Mat<T>,
    b: Mat<T>,
    c: Mat<T>,
}

impl<T: Scalar> PlantModel<T> {
    pub fn new(a: Mat<T>, b: Mat<T>, c: Mat<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "state matrix must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let np = a.rows();
        if np == 0 {
            return Err(Error::EmptyInput("plant with zero states".into()));
        }
        if b.rows() != np {
            return Err(Error::DimensionMismatch(format!(
                "input matrix has {} rows, plant has {np} states",
                b.rows()
            )));
        }
        if c.cols() != np {
            return Err(Error::DimensionMismatch(format!(
                "output matrix has {} columns, plant has {np} states",
                c.cols()
            )));
        }
        if b.cols() == 0 || c.rows() == 0 {
            return Err(Error::EmptyInput("plant needs at least one input and one output".into()));
        }
        Ok(PlantModel { a, b, c })
    }

    /// Number of plant states.
    pub fn np(&self) -> usize {
        self.a.rows()
    }

    /// Number of control inputs.
    pub fn nu(&self) -> usize {
        self.b.cols()
    }

    /// Number of measured outputs.
    pub fn ny(&self) -> usize {
        self.c.rows()
    }

    pub fn a(&self) -> &Mat<T> {
        &self.a
    }

    pub fn b(&self) -> &Mat<T> {
        &self.b
    }

    pub fn c(&self) -> &Mat<T> {
        &self.c
    }
}

/// Dynamic output-feedback controller `xc' = A_c xc + B_c v`, `u = C_c xc`,
/// together with the factorization pair `(U, V)` used to recover it from the
/// synthesis variables (kept for certificate construction).
#[derive(Clone, Debug)]
pub struct ControllerRealization<T> {
    pub a: Mat<T>,
    pub b: Mat<T>,
    pub c: Mat<T>,
    pub u: Mat<T>,
    pub v: Mat<T>,
}

/// Event-trigger parameters.
///
/// Transmissions are suppressed while `gamma^2 |e|^2 <= eps1 |y|^2` or while
/// the clock since the last transmission is below the dwell time `dwell`;
/// `masp` is the largest dwell time the theory certifies for the growth
/// bound `growth`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriggerConfig<T> {
    pub gamma: T,
    pub eps1: T,
    pub dwell: T,
    pub masp: T,
    pub growth: T,
}

impl<T: Scalar> TriggerConfig<T> {
    /// Builds a trigger from synthesis outputs: `gamma = sqrt(mu)`,
    /// `eps1 = 1/eps`, `masp` from the dwell-time bound, and
    /// `dwell = theta * masp` with `theta` strictly inside (0, 1).
    pub fn from_design(mu: T, eps: T, growth: T, theta: T) -> Result<Self> {
        if mu <= T::zero() || eps <= T::zero() {
            return Err(Error::InvalidInput(format!(
                "trigger gains need mu > 0 and eps > 0, got mu={mu}, eps={eps}"
            )));
        }
        if growth <= T::zero() {
            return Err(Error::InvalidInput(format!("growth bound must be positive, got {growth}")));
        }
        if theta <= T::zero() || theta >= T::one() {
            return Err(Error::InvalidInput(format!(
                "dwell fraction must lie strictly inside (0,1), got {theta}"
            )));
        }
        let gamma = mu.sqrt();
        let masp = crate::codesign::masp(gamma, growth)?;
        Ok(TriggerConfig { gamma, eps1: T::one() / eps, dwell: theta * masp, masp, growth })
    }

    /// Builds a trigger from explicitly supplied parts, e.g. when replaying a
    /// published parameter table whose dwell time was rounded.
    ///
    /// Skips the `dwell < masp` validation that [`Self::from_design`]
    /// enforces: tabulated dwell times are often equal to (or, after
    /// rounding, slightly above) the recomputed bound.
    pub fn from_parts(gamma: T, eps1: T, dwell: T, masp: T, growth: T) -> Result<Self> {
        if gamma < T::zero() || eps1 <= T::zero() || dwell <= T::zero() {
            return Err(Error::InvalidInput(
                "trigger needs gamma >= 0, eps1 > 0, dwell > 0".into(),
            ));
        }
        Ok(TriggerConfig { gamma, eps1, dwell, masp, growth })
    }

    /// Checks the invariants a freshly designed trigger must satisfy against
    /// the synthesis solution it came from.
    pub fn validate_against(&self, mu: T, eps: T) -> Result<()> {
        let rel = |a: T, b: T| (a - b).abs() / (T::one() + b.abs());
        if rel(self.gamma * self.gamma, mu) > T::c(1e-10) {
            return Err(Error::VerificationFailed(format!(
                "gamma^2 = {} does not match mu = {}",
                self.gamma * self.gamma,
                mu
            )));
        }
        if (self.eps1 * eps - T::one()).abs() > T::c(1e-10) {
            return Err(Error::VerificationFailed(format!(
                "eps1*eps = {} must equal 1",
                self.eps1 * eps
            )));
        }
        if !(self.dwell < self.masp) {
            return Err(Error::VerificationFailed(format!(
                "dwell {} must be strictly below the allowable bound {}",
                self.dwell, self.masp
            )));
        }
        Ok(())
    }
}

/// Closed-loop flow matrices for the interconnection of plant and controller
/// with the network-induced error `e = (e_y, e_u)`:
/// `x' = A1 x + B1 e`, `e' = A2 x + B2 e`, monitored output `y = Cbar x`.
#[derive(Clone, Debug)]
pub struct ClosedLoopMatrices<T> {
    pub a1: Mat<T>,
    pub b1: Mat<T>,
    pub a2: Mat<T>,
    pub b2: Mat<T>,
    pub cbar: Mat<T>,
}

impl<T: Scalar> ClosedLoopMatrices<T> {
    /// Combined state dimension `2 n_p`.
    pub fn nx(&self) -> usize {
        self.a1.rows()
    }

    /// Error dimension `n_y + n_u`.
    pub fn ne(&self) -> usize {
        self.b1.cols()
    }
}

/// Stability certificate assembled from a synthesis solution: the Lyapunov
/// matrix, the completion blocks that build it, and the margins that prove
/// each inequality held with room to spare.
#[derive(Clone, Debug)]
pub struct VerificationCertificate<T> {
    /// Lyapunov matrix for the flow dynamics.
    pub p: SymMat<T>,
    /// Completion block pairing the synthesis variables into a full basis.
    pub xhat: Mat<T>,
    /// Second completion block.
    pub yhat: Mat<T>,
    /// Max eigenvalue of the evaluated stability inequality (negative iff the
    /// Lyapunov decay condition holds).
    pub stability_lmi_max_eig: T,
    /// Decay margin `-stability_lmi_max_eig` (how much slack the certificate
    /// has before the inequality would fail).
    pub eps2: T,
    /// Smallest eigenvalue of the Lyapunov matrix (positive iff P is a valid
    /// energy function).
    pub p_min_eig: T,
    /// `alpha*beta - lambda_max(Bc' Cc' Cc Bc)`; positive iff the designed
    /// growth budget covers the controller feed-through product. `None` when
    /// the growth inequality was not imposed at design time.
    pub growth_product_gap: Option<T>,
}
