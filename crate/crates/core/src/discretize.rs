//! Structure-preserving spatial discretization (mixed finite elements).
//!
//! An n = 1 plant on [0, L] is split into `p` elements of length
//! `L_ab = L/p`. The effort-mapping parameter γ ∈ (0, 1) fixes where
//! inside each element the efforts are evaluated; γ = 1/2 gives the
//! centered scheme. The discrete model is again a port-Hamiltonian
//! system
//!
//! ```text
//! [ẋ1d; ẋ2d] = (J_n − R_n) [Q1 x1d; Q2 x2d] + [0; B0d] u_d
//! ```
//!
//! with `J_n = [[0, J_i], [−J_iᵀ, 0]]` exactly skew-symmetric and
//! `R_n = diag(0, R_d)` positive semidefinite, so passivity survives the
//! discretization by construction. Boundary actuation is hard-wired to
//! zero (clamped-free); only the in-domain port remains.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PhsError, Result};
use crate::linalg;
use crate::model::ContinuousPlant;

/// Lower-triangular discretization of the first-order operator for the
/// clamped-free configuration:
///
/// ```text
/// (J_i)_{jj}  = 1/γ
/// (J_i)_{ij}  = (−1)^d (γ')^{d−1} / γ^{d+1},   d = i − j ≥ 1,  γ' = 1 − γ
/// ```
pub fn build_ji(p: usize, gamma: f64) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(PhsError::Parameter("element count p must be >= 1".into()));
    }
    if gamma.is_nan() || gamma <= 0.0 || gamma >= 1.0 {
        return Err(PhsError::Parameter(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let gamma_prime = 1.0 - gamma;
    let mut ji = DMatrix::zeros(p, p);
    for i in 0..p {
        ji[(i, i)] = 1.0 / gamma;
        for j in 0..i {
            let d = (i - j) as i32;
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            ji[(i, j)] = sign * gamma_prime.powi(d - 1) / gamma.powi(d + 1);
        }
    }
    Ok(ji)
}

/// Finite-dimensional plant produced by [`discretize`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscretePlant {
    pub p: usize,
    /// Element length L/p in meters.
    pub l_ab: f64,
    pub gamma: f64,
    #[serde(with = "linalg::serde_matrix")]
    pub ji: DMatrix<f64>,
    #[serde(with = "linalg::serde_matrix")]
    pub q1: DMatrix<f64>,
    #[serde(with = "linalg::serde_matrix")]
    pub q2: DMatrix<f64>,
    #[serde(with = "linalg::serde_matrix")]
    pub rd: DMatrix<f64>,
    #[serde(with = "linalg::serde_matrix")]
    pub b0d: DMatrix<f64>,
}

/// Discretizes an n = 1 plant into `p` elements.
///
/// Energy and dissipation matrices sample the profiles at element
/// midpoints: `Q1 = diag(L1(ζ_j)/L_ab)`, `Q2 = diag(L2(ζ_j)/L_ab)`,
/// `R_d = diag(R · L_ab)`. The distributed-input map `B0d` is the
/// identity: the in-domain force density acts element-wise.
pub fn discretize(plant: &ContinuousPlant, p: usize, gamma: f64) -> Result<DiscretePlant> {
    if plant.n() != 1 {
        return Err(PhsError::Unsupported(format!(
            "discretizer targets n = 1 plants, got n = {}",
            plant.n()
        )));
    }
    let ji = build_ji(p, gamma)?;
    let length = plant.length();
    let l_ab = length / p as f64;
    let mut q1 = DMatrix::zeros(p, p);
    let mut q2 = DMatrix::zeros(p, p);
    for j in 0..p {
        let zeta = (j as f64 + 0.5) * l_ab;
        let l1 = plant.l1().eval(zeta);
        let l2 = plant.l2().eval(zeta);
        if l1.is_nan() || l2.is_nan() || l1 <= 0.0 || l2 <= 0.0 {
            return Err(PhsError::Model(format!(
                "energy profile non-coercive at zeta = {zeta:.4} (L1 = {l1:.3e}, L2 = {l2:.3e})"
            )));
        }
        q1[(j, j)] = l1 / l_ab;
        q2[(j, j)] = l2 / l_ab;
    }
    let r_scalar = plant.r()[(0, 0)];
    let rd = DMatrix::from_diagonal_element(p, p, r_scalar * l_ab);
    let b0d = DMatrix::identity(p, p);
    Ok(DiscretePlant {
        p,
        l_ab,
        gamma,
        ji,
        q1,
        q2,
        rd,
        b0d,
    })
}

impl DiscretePlant {
    /// Discrete Hamiltonian `H_d = ½ (x1dᵀ Q1 x1d + x2dᵀ Q2 x2d)` in joules.
    pub fn hamiltonian(&self, x1d: &DVector<f64>, x2d: &DVector<f64>) -> Result<f64> {
        if x1d.len() != self.p || x2d.len() != self.p {
            return Err(PhsError::Dimension(format!(
                "state vectors must have length {}, got {} and {}",
                self.p,
                x1d.len(),
                x2d.len()
            )));
        }
        Ok(0.5 * ((&self.q1 * x1d).dot(x1d) + (&self.q2 * x2d).dot(x2d)))
    }

    /// Assembled interconnection matrix `J_n = [[0, J_i], [−J_iᵀ, 0]]`.
    ///
    /// The lower-left block stores the elementwise negation of the
    /// upper-right block's transpose, so skew-symmetry holds bitwise.
    pub fn j_full(&self) -> DMatrix<f64> {
        let p = self.p;
        let mut j = DMatrix::zeros(2 * p, 2 * p);
        for i in 0..p {
            for k in 0..p {
                let value = self.ji[(i, k)];
                j[(i, p + k)] = value;
                j[(p + k, i)] = -value;
            }
        }
        j
    }

    /// Assembled dissipation matrix `R_n = diag(0, R_d)`.
    pub fn r_full(&self) -> DMatrix<f64> {
        let p = self.p;
        let mut r = DMatrix::zeros(2 * p, 2 * p);
        r.view_mut((p, p), (p, p)).copy_from(&self.rd);
        r
    }

    /// Assembled energy matrix `diag(Q1, Q2)`.
    pub fn q_full(&self) -> DMatrix<f64> {
        linalg::block_diag(&[&self.q1, &self.q2])
    }

    /// Open-loop state matrix `(J_n − R_n) diag(Q1, Q2)` with `u_d = 0`.
    pub fn open_loop_matrix(&self) -> DMatrix<f64> {
        (self.j_full() - self.r_full()) * self.q_full()
    }

    /// Uniform energy-shaping target `Q_m = diag(β / L_ab)`.
    pub fn uniform_energy_target(&self, beta: f64) -> Result<DMatrix<f64>> {
        if beta < 0.0 {
            return Err(PhsError::Parameter(format!(
                "beta must be nonnegative, got {beta}"
            )));
        }
        Ok(DMatrix::from_diagonal_element(
            self.p,
            self.p,
            beta / self.l_ab,
        ))
    }
}
