//! Assembly of the interconnected plant/controller system.
//!
//! Two equivalent representations are built:
//!
//! * the dynamic form, keeping the controller state explicit:
//!
//!   ```text
//!   ẋ_cl = (J_cl − R_cl) Q_cl x_cl,      x_cl = [x1d; x2d; xc]
//!   ```
//!
//!   with coupling block `−B0d M B_cᵀ` and damping block
//!   `R_d + B0d M D_c Mᵀ B0dᵀ`, and
//!
//! * the reduced form obtained on the Casimir leaf `C = 0`, where the
//!   controller collapses into the shaped stiffness
//!   `Q̃₁ = Q₁ + J_i⁻ᵀ B0d M B_cᵀ Q_c B_c Mᵀ B0dᵀ J_i⁻¹` and the lumped
//!   dissipation `R̃_d = R_d + B0d M D_c Mᵀ B0dᵀ`.
//!
//! Along midpoint trajectories both forms obey the discrete energy law
//! `H(t_{n+1}) − H(t_n) = −Δt (Q₂x₂)_midᵀ R̃_d (Q₂x₂)_mid` exactly.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::discretize::DiscretePlant;
use crate::error::{PhsError, Result};
use crate::integrate::{CasimirObserver, LinearPhsSystem};
use crate::linalg;
use crate::shaping::Controller;

/// Dynamic-form closed loop with explicit controller state.
#[derive(Clone, Debug, Serialize)]
pub struct ClosedLoop {
    #[serde(rename = "Jcl", with = "linalg::serde_matrix")]
    pub jcl: DMatrix<f64>,
    #[serde(rename = "Rcl", with = "linalg::serde_matrix")]
    pub rcl: DMatrix<f64>,
    #[serde(rename = "Qcl", with = "linalg::serde_matrix")]
    pub qcl: DMatrix<f64>,
    /// State matrix `(J_cl − R_cl) Q_cl`.
    #[serde(rename = "Acl", with = "linalg::serde_matrix")]
    pub a_cl: DMatrix<f64>,
    pub p: usize,
    pub m: usize,
    /// Left factor `K = B_c Mᵀ B0dᵀ J_i⁻¹` of the Casimir `C = K x1d − xc`.
    #[serde(skip)]
    casimir_factor: DMatrix<f64>,
}

fn shaped_dissipation(plant: &DiscretePlant, ctrl: &Controller) -> DMatrix<f64> {
    let bm = &plant.b0d * ctrl.patch.matrix();
    &plant.rd + &bm * &ctrl.dc * bm.transpose()
}

/// Assembles the dynamic form. Requires the controller patch map to match
/// the plant element count.
pub fn assemble_dynamic(plant: &DiscretePlant, ctrl: &Controller) -> Result<ClosedLoop> {
    let p = plant.p;
    let m = ctrl.m();
    if ctrl.patch.p != p {
        return Err(PhsError::Dimension(format!(
            "controller patch map covers p = {}, plant has p = {}",
            ctrl.patch.p, p
        )));
    }
    let dim = 2 * p + m;

    // coupling block −B0d M Bcᵀ between x2d and xc
    let coupling = &plant.b0d * ctrl.patch.matrix() * ctrl.bc.transpose();

    let mut jcl = DMatrix::zeros(dim, dim);
    for i in 0..p {
        for j in 0..p {
            let value = plant.ji[(i, j)];
            jcl[(i, p + j)] = value;
            jcl[(p + j, i)] = -value;
        }
    }
    for i in 0..p {
        for j in 0..m {
            let value = coupling[(i, j)];
            jcl[(p + i, 2 * p + j)] = -value;
            jcl[(2 * p + j, p + i)] = value;
        }
    }

    let mut rcl = DMatrix::zeros(dim, dim);
    rcl.view_mut((p, p), (p, p))
        .copy_from(&shaped_dissipation(plant, ctrl));

    let qcl = linalg::block_diag(&[&plant.q1, &plant.q2, &ctrl.qc]);
    let a_cl = (&jcl - &rcl) * &qcl;

    // K = Bc Mᵀ B0dᵀ Ji⁻¹ via Kᵀ = Ji⁻ᵀ (B0d M Bcᵀ)
    let lu_t = plant.ji.transpose().lu();
    if !lu_t.is_invertible() {
        return Err(PhsError::Singular("J_i is singular".into()));
    }
    let casimir_factor = lu_t
        .solve(&coupling)
        .ok_or_else(|| PhsError::Singular("failed to solve J_iᵀ Kᵀ = B0d M B_cᵀ".into()))?
        .transpose();

    Ok(ClosedLoop {
        jcl,
        rcl,
        qcl,
        a_cl,
        p,
        m,
        casimir_factor,
    })
}

impl ClosedLoop {
    pub fn dim(&self) -> usize {
        2 * self.p + self.m
    }

    /// Closed-loop Hamiltonian `½ xᵀ Q_cl x`.
    pub fn hamiltonian(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(PhsError::Dimension(format!(
                "state must have length {}",
                self.dim()
            )));
        }
        Ok(0.5 * (&self.qcl * x).dot(x))
    }

    /// Stacks plant and controller states into one closed-loop state.
    pub fn stack_state(
        &self,
        x1d: &DVector<f64>,
        x2d: &DVector<f64>,
        xc: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        if x1d.len() != self.p || x2d.len() != self.p || xc.len() != self.m {
            return Err(PhsError::Dimension(format!(
                "expected blocks of length {}, {}, {}",
                self.p, self.p, self.m
            )));
        }
        let mut x = DVector::zeros(self.dim());
        x.rows_mut(0, self.p).copy_from(x1d);
        x.rows_mut(self.p, self.p).copy_from(x2d);
        x.rows_mut(2 * self.p, self.m).copy_from(xc);
        Ok(x)
    }

    /// Simulation view: state matrix, energy matrix, endpoint block and
    /// Casimir observer.
    pub fn simulation_system(&self) -> LinearPhsSystem {
        LinearPhsSystem {
            a: self.a_cl.clone(),
            energy: self.qcl.clone(),
            p: self.p,
            casimir: Some(CasimirObserver {
                factor: self.casimir_factor.clone(),
                xc_offset: 2 * self.p,
            }),
        }
    }
}

/// Reduced (state-feedback) closed loop on the Casimir leaf.
#[derive(Clone, Debug, Serialize)]
pub struct ReducedClosedLoop {
    #[serde(rename = "Q1_tilde", with = "linalg::serde_matrix")]
    pub q1_tilde: DMatrix<f64>,
    #[serde(rename = "Rd_tilde", with = "linalg::serde_matrix")]
    pub rd_tilde: DMatrix<f64>,
    #[serde(rename = "Ji", with = "linalg::serde_matrix")]
    pub ji: DMatrix<f64>,
    #[serde(rename = "Q2", with = "linalg::serde_matrix")]
    pub q2: DMatrix<f64>,
    pub p: usize,
}

/// Builds `Q̃₁` and `R̃_d` of the reduced closed loop.
pub fn assemble_reduced(plant: &DiscretePlant, ctrl: &Controller) -> Result<ReducedClosedLoop> {
    let p = plant.p;
    if ctrl.patch.p != p {
        return Err(PhsError::Dimension(format!(
            "controller patch map covers p = {}, plant has p = {}",
            ctrl.patch.p, p
        )));
    }
    let lu_t = plant.ji.transpose().lu();
    if !lu_t.is_invertible() {
        return Err(PhsError::Singular("J_i is singular".into()));
    }
    // shift = Ji⁻ᵀ (B0d M BcᵀQcBc Mᵀ B0dᵀ) Ji⁻¹
    let bm = &plant.b0d * ctrl.patch.matrix() * ctrl.bc.transpose();
    let core = &bm * &ctrl.qc * bm.transpose();
    let y = lu_t
        .solve(&core)
        .ok_or_else(|| PhsError::Singular("failed to solve J_iᵀ Y = core".into()))?;
    let shift = lu_t
        .solve(&y.transpose())
        .ok_or_else(|| PhsError::Singular("failed to solve J_iᵀ Zᵀ = Yᵀ".into()))?
        .transpose();
    let q1_tilde = linalg::symmetrize(&(&plant.q1 + shift));
    let rd_tilde = shaped_dissipation(plant, ctrl);
    Ok(ReducedClosedLoop {
        q1_tilde,
        rd_tilde,
        ji: plant.ji.clone(),
        q2: plant.q2.clone(),
        p,
    })
}

impl ReducedClosedLoop {
    /// State matrix `[[0, J_i], [−J_iᵀ, −R̃_d]] · diag(Q̃₁, Q₂)`.
    pub fn system_matrix(&self) -> DMatrix<f64> {
        let p = self.p;
        let mut structure = DMatrix::zeros(2 * p, 2 * p);
        for i in 0..p {
            for j in 0..p {
                let value = self.ji[(i, j)];
                structure[(i, p + j)] = value;
                structure[(p + j, i)] = -value;
            }
        }
        structure
            .view_mut((p, p), (p, p))
            .copy_from(&(-&self.rd_tilde));
        structure * self.energy_matrix()
    }

    /// Energy matrix `diag(Q̃₁, Q₂)` of the reduced Hamiltonian.
    pub fn energy_matrix(&self) -> DMatrix<f64> {
        linalg::block_diag(&[&self.q1_tilde, &self.q2])
    }

    /// Reduced Hamiltonian `½ (x1ᵀ Q̃₁ x1 + x2ᵀ Q₂ x2)`.
    pub fn hamiltonian(&self, x1d: &DVector<f64>, x2d: &DVector<f64>) -> Result<f64> {
        if x1d.len() != self.p || x2d.len() != self.p {
            return Err(PhsError::Dimension(format!(
                "state blocks must have length {}",
                self.p
            )));
        }
        Ok(0.5 * ((&self.q1_tilde * x1d).dot(x1d) + (&self.q2 * x2d).dot(x2d)))
    }

    /// Simulation view of the reduced loop (no Casimir observer: the
    /// controller state is implicit).
    pub fn simulation_system(&self) -> LinearPhsSystem {
        LinearPhsSystem {
            a: self.system_matrix(),
            energy: self.energy_matrix(),
            p: self.p,
            casimir: None,
        }
    }
}

/// Equivalent state feedback on the Casimir leaf:
/// `u_d = −M (B_cᵀQ_cB_c Mᵀ B0dᵀ J_i⁻¹ x1d + D_c Mᵀ B0dᵀ Q₂ x2d)`.
pub fn state_feedback(
    plant: &DiscretePlant,
    ctrl: &Controller,
    x1d: &DVector<f64>,
    x2d: &DVector<f64>,
) -> Result<DVector<f64>> {
    let p = plant.p;
    if x1d.len() != p || x2d.len() != p {
        return Err(PhsError::Dimension(format!(
            "state blocks must have length {p}"
        )));
    }
    let m_mat = ctrl.patch.matrix();
    let lu_t = plant.ji.transpose().lu();
    if !lu_t.is_invertible() {
        return Err(PhsError::Singular("J_i is singular".into()));
    }
    // w = Ji⁻ᵀ x1d  =>  Mᵀ B0dᵀ w = Mᵀ B0dᵀ Ji⁻¹ ... careful:
    // we need Ji⁻¹ x1d, i.e. solve Ji z = x1d.
    let z = plant
        .ji
        .clone()
        .lu()
        .solve(x1d)
        .ok_or_else(|| PhsError::Singular("failed to solve J_i z = x1d".into()))?;
    let x = ctrl.bc.transpose() * &ctrl.qc * &ctrl.bc;
    let shaping_term = &x * (m_mat.transpose() * (plant.b0d.transpose() * z));
    let damping_term = &ctrl.dc * (m_mat.transpose() * (plant.b0d.transpose() * (&plant.q2 * x2d)));
    let y_c = shaping_term + damping_term;
    Ok(-(m_mat * y_c))
}

/// Full closed-loop Hamiltonian `H_d(x1d, x2d) + ½ xcᵀ Q_c xc`.
pub fn closed_loop_hamiltonian(
    plant: &DiscretePlant,
    ctrl: &Controller,
    x1d: &DVector<f64>,
    x2d: &DVector<f64>,
    xc: &DVector<f64>,
) -> Result<f64> {
    if xc.len() != ctrl.m() {
        return Err(PhsError::Dimension(format!(
            "xc must have length {}",
            ctrl.m()
        )));
    }
    let plant_energy = plant.hamiltonian(x1d, x2d)?;
    Ok(plant_energy + 0.5 * (&ctrl.qc * xc).dot(xc))
}
