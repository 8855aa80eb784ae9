//! Controller synthesis by interconnection: energy shaping and damping
//! injection.
//!
//! The controller is a port-Hamiltonian integrator (`J_c = 0`, `R_c = 0`)
//! interconnected to the discretized plant through the 0/1 patch map
//! `M = I_m ⊗ 1_k`. Choosing `X = B_cᵀ Q_c B_c` shapes the closed-loop
//! stiffness block; the fit quality is the Frobenius criterion
//!
//! ```text
//! f(X) = ‖A X Aᵀ − Q_m‖_F,     A = J_i⁻ᵀ M
//! ```
//!
//! Under full actuation (`m = p`, `M = I`) the minimum is exact with
//! `X̂ = J_iᵀ Q_m J_i` and `f(X̂) = 0`. Under patch actuation the unique
//! minimizer of `f²` is obtained from the thin SVD `A = U₁ Σ₀ Vᵀ` as
//! `X̂ = V Σ₀⁻¹ U₁ᵀ Q_m U₁ Σ₀⁻¹ Vᵀ`, with the leftover residual
//! `f²(X̂) = 2‖U₁ᵀ Q_m U₂‖²_F + ‖U₂ᵀ Q_m U₂‖²_F`.
//!
//! Damping injection fits the diagonal `D_c = diag(α L_ab / k)`, the
//! Frobenius-optimal diagonal match of the fully-actuated dissipation
//! target `diag(α L_ab)`. The Casimir invariant
//! `C = B_c Mᵀ B0dᵀ J_i⁻¹ x_{1d} − x_c` ties the controller state to the
//! plant state; initializing with `C = 0` makes the dynamic controller
//! equivalent to a state feedback.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::discretize::{build_ji, DiscretePlant};
use crate::error::{PhsError, Result};
use crate::linalg;

/// Relative floor below which singular values count as rank deficiency.
const SVD_RANK_FLOOR: f64 = 1e-12;

/// Patch actuation map `M = I_m ⊗ 1_k`: `m` independent inputs, each
/// driving a contiguous block of `k = p/m` elements.
#[derive(Clone, Debug)]
pub struct PatchMap {
    pub p: usize,
    pub m: usize,
    pub k: usize,
    matrix: DMatrix<f64>,
}

impl PatchMap {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Builds the patch map; errors unless `m` divides `p`.
pub fn build_patch_map(p: usize, m: usize) -> Result<PatchMap> {
    if p == 0 || m == 0 {
        return Err(PhsError::Config("p and m must be positive".into()));
    }
    if !p.is_multiple_of(m) {
        return Err(PhsError::Config(format!(
            "patch count m = {m} must divide element count p = {p}"
        )));
    }
    let k = p / m;
    let mut matrix = DMatrix::zeros(p, m);
    for col in 0..m {
        for row in col * k..(col + 1) * k {
            matrix[(row, col)] = 1.0;
        }
    }
    Ok(PatchMap { p, m, k, matrix })
}

/// Energy-shaping least-squares problem: minimize `‖A X Aᵀ − Q_m‖_F`
/// over symmetric positive-semidefinite `X`.
#[derive(Clone, Debug)]
pub struct ShapingProblem {
    a: DMatrix<f64>,
    qm: DMatrix<f64>,
}

impl ShapingProblem {
    /// Assembles `A = J_i⁻ᵀ M` and validates that the target increment
    /// `Q_m` is symmetric positive semidefinite.
    pub fn new(ji: &DMatrix<f64>, patch: &PatchMap, qm: DMatrix<f64>) -> Result<Self> {
        let p = patch.p;
        if ji.shape() != (p, p) {
            return Err(PhsError::Dimension(format!(
                "J_i must be {p}x{p}, got {}x{}",
                ji.nrows(),
                ji.ncols()
            )));
        }
        if qm.shape() != (p, p) {
            return Err(PhsError::Dimension(format!(
                "Q_m must be {p}x{p}, got {}x{}",
                qm.nrows(),
                qm.ncols()
            )));
        }
        if (qm.clone() - qm.transpose()).norm() > 1e-12 * qm.norm().max(1.0) {
            return Err(PhsError::Model("Q_m must be symmetric".into()));
        }
        let min_eig = linalg::min_symmetric_eigenvalue(&qm);
        if min_eig < -1e-12 * qm.norm().max(1.0) {
            return Err(PhsError::Model(format!(
                "Q_m must be positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        let lu = ji.transpose().lu();
        if !lu.is_invertible() {
            return Err(PhsError::Singular("J_i is singular".into()));
        }
        let a = lu.solve(patch.matrix()).ok_or_else(|| {
            PhsError::Singular("failed to solve J_iᵀ A = M".into())
        })?;
        Ok(Self { a, qm })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn qm(&self) -> &DMatrix<f64> {
        &self.qm
    }
}

/// Frobenius residual `f(X) = ‖A X Aᵀ − Q_m‖_F`.
pub fn residual_f(x: &DMatrix<f64>, problem: &ShapingProblem) -> Result<f64> {
    let m = problem.a.ncols();
    if x.shape() != (m, m) {
        return Err(PhsError::Dimension(format!(
            "X must be {m}x{m}, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok((&problem.a * x * problem.a.transpose() - &problem.qm).norm())
}

/// Exact fully-actuated solution.
#[derive(Clone, Debug)]
pub struct FullyActuatedSolution {
    pub x_hat: DMatrix<f64>,
    pub bc: DMatrix<f64>,
    pub qc: DMatrix<f64>,
    pub residual: f64,
}

/// Solves the fully-actuated case `m = p`, `M = I`:
/// `X̂ = J_iᵀ Q_m J_i`, realized by `B_c = J_i`, `Q_c = Q_m`.
pub fn solve_fully_actuated(
    problem: &ShapingProblem,
    ji: &DMatrix<f64>,
) -> Result<FullyActuatedSolution> {
    let p = problem.qm.nrows();
    if problem.a.ncols() != p {
        return Err(PhsError::WrongSolver(format!(
            "fully-actuated solver requires m = p, got m = {}, p = {}",
            problem.a.ncols(),
            p
        )));
    }
    let x_hat = linalg::symmetrize(&(ji.transpose() * &problem.qm * ji));
    let residual = residual_f(&x_hat, problem)?;
    Ok(FullyActuatedSolution {
        x_hat,
        bc: ji.clone(),
        qc: problem.qm.clone(),
        residual,
    })
}

/// Thin SVD factors of `A` exposed by the under-actuated solver:
/// `A = [U1 U2] [Σ0; 0] Vᵀ`.
#[derive(Clone, Debug)]
pub struct SvdParts {
    pub u1: DMatrix<f64>,
    pub u2: DMatrix<f64>,
    pub sigma0: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// Result of the SVD-optimal under-actuated fit.
#[derive(Clone, Debug)]
pub struct UnderActuatedSolution {
    pub x_hat: DMatrix<f64>,
    pub residual: f64,
    pub svd: SvdParts,
}

/// Minimizes `f²(X)` over symmetric PSD matrices via the SVD of `A`:
/// `X̂ = V Σ₀⁻¹ U₁ᵀ Q_m U₁ Σ₀⁻¹ Vᵀ`.
///
/// Errors when `A` is rank deficient (singular values below
/// `1e-12 · σ_max`), naming the deficient values.
pub fn solve_under_actuated(problem: &ShapingProblem) -> Result<UnderActuatedSolution> {
    let a = &problem.a;
    let m = a.ncols();
    let svd = a.clone().svd(true, true);
    let u1 = svd
        .u
        .ok_or_else(|| PhsError::Numeric("SVD did not return U".into()))?;
    let v = svd
        .v_t
        .ok_or_else(|| PhsError::Numeric("SVD did not return Vᵀ".into()))?
        .transpose();
    let sigma0 = svd.singular_values;
    let smax = sigma0.iter().cloned().fold(0.0_f64, f64::max);
    let deficient: Vec<f64> = sigma0
        .iter()
        .cloned()
        .filter(|s| *s <= SVD_RANK_FLOOR * smax)
        .collect();
    if smax == 0.0 || !deficient.is_empty() {
        return Err(PhsError::Singular(format!(
            "A is rank deficient: singular values {deficient:?} below {:.1e} of sigma_max = {smax:.6e}",
            SVD_RANK_FLOOR
        )));
    }
    let u2 = linalg::orthonormal_complement(&u1)?;
    // T1 = U1ᵀ Qm U1 scaled by Σ0⁻¹ on both sides, rotated back by V
    let t1 = u1.transpose() * &problem.qm * &u1;
    let inv_sigma = DMatrix::from_diagonal(&sigma0.map(|s| 1.0 / s));
    let x_hat = linalg::symmetrize(&(&v * &inv_sigma * t1 * &inv_sigma * v.transpose()));
    debug_assert_eq!(x_hat.shape(), (m, m));
    let residual = residual_f(&x_hat, problem)?;
    Ok(UnderActuatedSolution {
        x_hat,
        residual,
        svd: SvdParts { u1, u2, sigma0, v },
    })
}

impl UnderActuatedSolution {
    /// Independent evaluation of the residual identity
    /// `f²(X̂) = 2‖T₂‖²_F + ‖T₃‖²_F` from the SVD blocks.
    pub fn residual_squared_from_svd(&self, qm: &DMatrix<f64>) -> f64 {
        let t2 = self.svd.u1.transpose() * qm * &self.svd.u2;
        let t3 = self.svd.u2.transpose() * qm * &self.svd.u2;
        2.0 * t2.norm_squared() + t3.norm_squared()
    }
}

/// Realizes `X̂` with `B_c = J_m` (the size-m discretized derivative) and
/// `Q_c = J_m⁻ᵀ X̂ J_m⁻¹`, so that `B_cᵀ Q_c B_c = X̂`.
pub fn choose_bc_qc_under(
    x_hat: &DMatrix<f64>,
    jm: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = jm.nrows();
    if jm.ncols() != m || x_hat.shape() != (m, m) {
        return Err(PhsError::Dimension(format!(
            "X̂ and J_m must both be {m}x{m}"
        )));
    }
    let lu_t = jm.transpose().lu();
    if !lu_t.is_invertible() {
        return Err(PhsError::Singular("J_m is singular".into()));
    }
    // Qc = Jm⁻ᵀ X̂ Jm⁻¹: solve Jmᵀ Y = X̂, then Jmᵀ Qcᵀ = Yᵀ
    let y = lu_t
        .solve(x_hat)
        .ok_or_else(|| PhsError::Singular("failed to solve J_mᵀ Y = X̂".into()))?;
    let qc = lu_t
        .solve(&y.transpose())
        .ok_or_else(|| PhsError::Singular("failed to solve J_mᵀ Qcᵀ = Yᵀ".into()))?
        .transpose();
    Ok((jm.clone(), linalg::symmetrize(&qc)))
}

/// Frobenius-optimal diagonal damping fit
/// `D̂_c = diag(α L_ab / k)`, matching `M D_c Mᵀ` to the fully-actuated
/// dissipation target `diag(α L_ab)`.
pub fn fit_damping(target_alpha: f64, patch: &PatchMap, l_ab: f64) -> Result<DMatrix<f64>> {
    if target_alpha.is_nan() || target_alpha <= 0.0 {
        return Err(PhsError::Parameter(format!(
            "damping coefficient alpha must be positive, got {target_alpha}"
        )));
    }
    if l_ab.is_nan() || l_ab <= 0.0 {
        return Err(PhsError::Parameter(format!(
            "element length must be positive, got {l_ab}"
        )));
    }
    Ok(DMatrix::from_diagonal_element(
        patch.m,
        patch.m,
        target_alpha * l_ab / patch.k as f64,
    ))
}

fn casimir_left_factor(
    bc: &DMatrix<f64>,
    patch: &PatchMap,
    b0d: &DMatrix<f64>,
    ji: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p = patch.p;
    let m = patch.m;
    if bc.shape() != (m, m) {
        return Err(PhsError::Dimension(format!(
            "B_c must be {m}x{m}, got {}x{}",
            bc.nrows(),
            bc.ncols()
        )));
    }
    if b0d.shape() != (p, p) || ji.shape() != (p, p) {
        return Err(PhsError::Dimension(format!(
            "B0d and J_i must be {p}x{p}"
        )));
    }
    let lu_t = ji.transpose().lu();
    if !lu_t.is_invertible() {
        return Err(PhsError::Singular("J_i is singular".into()));
    }
    // K = Bc Mᵀ B0dᵀ Ji⁻¹  computed as  Kᵀ = Ji⁻ᵀ (B0d M Bcᵀ)
    let rhs = b0d * patch.matrix() * bc.transpose();
    let k_t = lu_t
        .solve(&rhs)
        .ok_or_else(|| PhsError::Singular("failed to solve J_iᵀ Kᵀ = B0d M B_cᵀ".into()))?;
    Ok(k_t.transpose())
}

/// Casimir invariant `C = B_c Mᵀ B0dᵀ J_i⁻¹ x_{1d} − x_c`.
pub fn casimir_value(
    bc: &DMatrix<f64>,
    patch: &PatchMap,
    b0d: &DMatrix<f64>,
    ji: &DMatrix<f64>,
    x1d: &DVector<f64>,
    xc: &DVector<f64>,
) -> Result<DVector<f64>> {
    if x1d.len() != patch.p || xc.len() != patch.m {
        return Err(PhsError::Dimension(format!(
            "x1d must have length {}, xc length {}",
            patch.p, patch.m
        )));
    }
    let k = casimir_left_factor(bc, patch, b0d, ji)?;
    Ok(k * x1d - xc)
}

/// Controller initial state making the Casimir vanish at t = 0:
/// `x_c(0) = B_c Mᵀ B0dᵀ J_i⁻¹ x_{1d}(0)`.
pub fn casimir_init(
    bc: &DMatrix<f64>,
    patch: &PatchMap,
    b0d: &DMatrix<f64>,
    ji: &DMatrix<f64>,
    x1d0: &DVector<f64>,
) -> Result<DVector<f64>> {
    if x1d0.len() != patch.p {
        return Err(PhsError::Dimension(format!(
            "x1d must have length {}",
            patch.p
        )));
    }
    let k = casimir_left_factor(bc, patch, b0d, ji)?;
    Ok(k * x1d0)
}

/// Synthesized in-domain controller (`J_c = 0`, `R_c = 0`).
///
/// Serializes to the wire schema
/// `{"Bc", "Qc", "Dc", "m", "k", "residual"}` with row-major matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "ControllerDocument", try_from = "ControllerDocument")]
pub struct Controller {
    pub bc: DMatrix<f64>,
    pub qc: DMatrix<f64>,
    pub dc: DMatrix<f64>,
    pub patch: PatchMap,
    /// Frobenius residual `f(X̂)` achieved by the energy-shaping fit.
    pub residual: f64,
}

/// JSON document form of a controller.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControllerDocument {
    #[serde(rename = "Bc", with = "linalg::serde_matrix")]
    pub bc: DMatrix<f64>,
    #[serde(rename = "Qc", with = "linalg::serde_matrix")]
    pub qc: DMatrix<f64>,
    #[serde(rename = "Dc", with = "linalg::serde_matrix")]
    pub dc: DMatrix<f64>,
    pub m: usize,
    pub k: usize,
    pub residual: f64,
}

impl From<Controller> for ControllerDocument {
    fn from(ctrl: Controller) -> Self {
        Self {
            bc: ctrl.bc,
            qc: ctrl.qc,
            dc: ctrl.dc,
            m: ctrl.patch.m,
            k: ctrl.patch.k,
            residual: ctrl.residual,
        }
    }
}

impl TryFrom<ControllerDocument> for Controller {
    type Error = String;

    fn try_from(doc: ControllerDocument) -> std::result::Result<Self, String> {
        let patch = build_patch_map(doc.m * doc.k, doc.m).map_err(|e| e.to_string())?;
        Controller::new(doc.bc, doc.qc, doc.dc, patch, doc.residual).map_err(|e| e.to_string())
    }
}

impl Controller {
    /// Validates shapes and the sign conditions `Q_c ⪰ 0`, `D_c ⪰ 0`.
    /// A merely semidefinite `D_c` (no damping in some direction) is
    /// accepted so that pure energy-shaping studies remain expressible.
    pub fn new(
        bc: DMatrix<f64>,
        qc: DMatrix<f64>,
        dc: DMatrix<f64>,
        patch: PatchMap,
        residual: f64,
    ) -> Result<Self> {
        let m = patch.m;
        for (name, matrix) in [("Bc", &bc), ("Qc", &qc), ("Dc", &dc)] {
            if matrix.shape() != (m, m) {
                return Err(PhsError::Dimension(format!(
                    "{name} must be {m}x{m}, got {}x{}",
                    matrix.nrows(),
                    matrix.ncols()
                )));
            }
        }
        if !bc.clone().lu().is_invertible() {
            return Err(PhsError::Singular("B_c must be invertible".into()));
        }
        for (name, matrix) in [("Qc", &qc), ("Dc", &dc)] {
            let min_eig = linalg::min_symmetric_eigenvalue(matrix);
            if min_eig < -1e-10 * matrix.norm().max(1.0) {
                return Err(PhsError::Model(format!(
                    "{name} must be positive semidefinite (min eigenvalue {min_eig:.3e})"
                )));
            }
        }
        Ok(Self {
            bc,
            qc,
            dc,
            patch,
            residual,
        })
    }

    pub fn m(&self) -> usize {
        self.patch.m
    }

    /// Exact design for one independent input per element
    /// (`B_c = J_i`, `Q_c = Q_m`), plus the damping fit for `alpha > 0`.
    pub fn design_fully_actuated(
        plant: &DiscretePlant,
        qm: DMatrix<f64>,
        alpha: f64,
    ) -> Result<Self> {
        let patch = build_patch_map(plant.p, plant.p)?;
        let problem = ShapingProblem::new(&plant.ji, &patch, qm)?;
        let solution = solve_fully_actuated(&problem, &plant.ji)?;
        let dc = if alpha > 0.0 {
            fit_damping(alpha, &patch, plant.l_ab)?
        } else {
            DMatrix::zeros(plant.p, plant.p)
        };
        Self::new(solution.bc, solution.qc, dc, patch, solution.residual)
    }

    /// SVD-optimal design for `m` patches: `B_c = J_m`,
    /// `Q_c = J_m⁻ᵀ X̂ J_m⁻¹`, `D_c = diag(α L_ab / k)`.
    pub fn design_under_actuated(
        plant: &DiscretePlant,
        m: usize,
        qm: DMatrix<f64>,
        alpha: f64,
    ) -> Result<Self> {
        let patch = build_patch_map(plant.p, m)?;
        let problem = ShapingProblem::new(&plant.ji, &patch, qm)?;
        let solution = solve_under_actuated(&problem)?;
        let jm = build_ji(m, plant.gamma)?;
        let (bc, qc) = choose_bc_qc_under(&solution.x_hat, &jm)?;
        let dc = if alpha > 0.0 {
            fit_damping(alpha, &patch, plant.l_ab)?
        } else {
            DMatrix::zeros(m, m)
        };
        Self::new(bc, qc, dc, patch, solution.residual)
    }

    /// Casimir value for a plant/controller state pair.
    pub fn casimir(
        &self,
        plant: &DiscretePlant,
        x1d: &DVector<f64>,
        xc: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        casimir_value(&self.bc, &self.patch, &plant.b0d, &plant.ji, x1d, xc)
    }

    /// Casimir-consistent controller initial state for a plant state.
    pub fn casimir_consistent_init(
        &self,
        plant: &DiscretePlant,
        x1d0: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        casimir_init(&self.bc, &self.patch, &plant.b0d, &plant.ji, x1d0)
    }
}
