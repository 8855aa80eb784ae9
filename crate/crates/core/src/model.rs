//! Continuous plant description and boundary-port algebra.
//!
//! The plant class is the 1-D two-conservation-law port-Hamiltonian system
//!
//! ```text
//! ∂t [x1; x2] = [[0, G], [−G*, −R]] [L1 x1; L2 x2] + [0; B0] u_d
//! ```
//!
//! on ζ ∈ [0, L], with first-order differential operator
//! `G = G0 + G1 ∂/∂ζ` (G1 full rank) and coercive energy densities
//! L1, L2. Boundary conditions are expressed through the boundary port
//! variables `(f_∂, e_∂)` and a boundary matrix `W`; admissibility of `W`
//! (full row rank and `W Σ Wᵀ ⪰ 0`) is what guarantees a well-posed,
//! contractive plant and is checked here numerically.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PhsError, Result};
use crate::linalg;

/// Energy-density profile over the spatial domain.
///
/// The string example uses constants (`L1 = T`, `L2 = 1/ρ`); custom
/// profiles are sampled at element midpoints during discretization.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Profile {
    pub fn eval(&self, zeta: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Custom(f) => f(zeta),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Profile::Constant(c) => Some(*c),
            Profile::Custom(_) => None,
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => write!(f, "Profile::Constant({c})"),
            Profile::Custom(_) => write!(f, "Profile::Custom(..)"),
        }
    }
}

/// Number of sample points used to check profile coercivity at
/// construction time (the discretizer re-checks at its own midpoints).
const PROFILE_SAMPLES: usize = 256;

/// Coercivity floor η for the energy densities.
const COERCIVITY_FLOOR: f64 = 0.0;

/// Continuous 1-D two-conservation-law plant.
#[derive(Clone, Debug)]
pub struct ContinuousPlant {
    n: usize,
    length: f64,
    g0: DMatrix<f64>,
    g1: DMatrix<f64>,
    l1: Profile,
    l2: Profile,
    r: DMatrix<f64>,
    w: DMatrix<f64>,
    w_tilde: DMatrix<f64>,
}

impl ContinuousPlant {
    /// Builds a plant and validates every model invariant:
    /// G1 invertible, R symmetric positive definite, coercive profiles,
    /// admissible W and invertible stacked boundary map.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        length: f64,
        g0: DMatrix<f64>,
        g1: DMatrix<f64>,
        l1: Profile,
        l2: Profile,
        r: DMatrix<f64>,
        w: DMatrix<f64>,
        w_tilde: DMatrix<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(PhsError::Parameter("n must be positive".into()));
        }
        if length.is_nan() || length <= 0.0 {
            return Err(PhsError::Parameter(format!(
                "domain length must be positive, got {length}"
            )));
        }
        for (name, m) in [("G0", &g0), ("G1", &g1), ("R", &r)] {
            if m.shape() != (n, n) {
                return Err(PhsError::Dimension(format!(
                    "{name} must be {n}x{n}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let det = g1.clone().lu().determinant();
        if det.abs() <= 1e-12 * g1.norm().max(f64::MIN_POSITIVE) {
            return Err(PhsError::Model(format!(
                "G1 is singular (|det| = {:.3e})",
                det.abs()
            )));
        }
        if (r.clone() - r.transpose()).norm() > 1e-12 * r.norm().max(1.0) {
            return Err(PhsError::Model("R must be symmetric".into()));
        }
        let r_min = linalg::min_symmetric_eigenvalue(&r);
        if r_min <= 0.0 {
            return Err(PhsError::Model(format!(
                "R must be positive definite (min eigenvalue {r_min:.3e})"
            )));
        }
        for (name, profile) in [("L1", &l1), ("L2", &l2)] {
            for j in 0..PROFILE_SAMPLES {
                let zeta = (j as f64 + 0.5) / PROFILE_SAMPLES as f64 * length;
                let value = profile.eval(zeta);
                if value.is_nan() || value <= COERCIVITY_FLOOR {
                    return Err(PhsError::Model(format!(
                        "{name}({zeta:.4}) = {value:.3e} violates coercivity"
                    )));
                }
            }
        }
        for (name, m) in [("W", &w), ("W_tilde", &w_tilde)] {
            if m.shape() != (2 * n, 4 * n) {
                return Err(PhsError::Dimension(format!(
                    "{name} must be {}x{}, got {}x{}",
                    2 * n,
                    4 * n,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let plant = Self {
            n,
            length,
            g0,
            g1,
            l1,
            l2,
            r,
            w,
            w_tilde,
        };
        let report = validate_boundary_matrix(&plant.w, &plant)?;
        if !report.pass {
            return Err(PhsError::Model(format!(
                "boundary matrix W inadmissible: rank = {} (need {}), min eig of sym(WΣWᵀ) = {:.3e}",
                report.rank,
                2 * n,
                report.min_eigenvalue
            )));
        }
        let mut stacked = DMatrix::zeros(4 * n, 4 * n);
        stacked
            .view_mut((0, 0), (2 * n, 4 * n))
            .copy_from(&plant.w);
        stacked
            .view_mut((2 * n, 0), (2 * n, 4 * n))
            .copy_from(&plant.w_tilde);
        if linalg::rank(&stacked) != 4 * n {
            return Err(PhsError::Model(
                "[Wᵀ, W̃ᵀ]ᵀ must be invertible".into(),
            ));
        }
        Ok(plant)
    }

    /// Clamped-free uniform string with `L1 = T` (tension) and
    /// `L2 = 1/ρ` (inverse lineic density): the wave-equation plant
    /// `G0 = 0`, `G1 = 1` with scalar dissipation `R`.
    pub fn uniform_string(length: f64, tension: f64, density: f64, dissipation: f64) -> Result<Self> {
        if tension.is_nan() || tension <= 0.0 {
            return Err(PhsError::Parameter(format!(
                "tension must be positive, got {tension}"
            )));
        }
        if density.is_nan() || density <= 0.0 {
            return Err(PhsError::Parameter(format!(
                "density must be positive, got {density}"
            )));
        }
        let s = std::f64::consts::SQRT_2 / 2.0;
        // u_b = [stress at L; velocity at 0] -> zero for a clamped-free string
        let w = DMatrix::from_row_slice(2, 4, &[0.0, s, s, 0.0, -s, 0.0, 0.0, s]);
        let w_tilde = DMatrix::from_row_slice(2, 4, &[0.0, -s, s, 0.0, s, 0.0, 0.0, s]);
        Self::new(
            1,
            length,
            DMatrix::zeros(1, 1),
            DMatrix::identity(1, 1),
            Profile::Constant(tension),
            Profile::Constant(1.0 / density),
            DMatrix::from_element(1, 1, dissipation),
            w,
            w_tilde,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn g0(&self) -> &DMatrix<f64> {
        &self.g0
    }

    pub fn g1(&self) -> &DMatrix<f64> {
        &self.g1
    }

    pub fn l1(&self) -> &Profile {
        &self.l1
    }

    pub fn l2(&self) -> &Profile {
        &self.l2
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn w_tilde(&self) -> &DMatrix<f64> {
        &self.w_tilde
    }
}

/// Pairing matrix `Σ = [[0, I], [I, 0]]` of size 4n×4n.
pub fn sigma_matrix(n: usize) -> DMatrix<f64> {
    let mut sigma = DMatrix::zeros(4 * n, 4 * n);
    for i in 0..2 * n {
        sigma[(i, 2 * n + i)] = 1.0;
        sigma[(2 * n + i, i)] = 1.0;
    }
    sigma
}

/// Boundary-port parametrization: `P1 = [[0, G1], [G1ᵀ, 0]]` and the
/// extended map `R_ext = (1/√2) [[P1, −P1], [I, I]]` sending the stacked
/// boundary co-energy traces `[Lx(L); Lx(0)]` to `(f_∂, e_∂)`.
#[derive(Clone, Debug)]
pub struct BoundaryPortMap {
    n: usize,
    p1: DMatrix<f64>,
    r_ext: DMatrix<f64>,
}

impl BoundaryPortMap {
    pub fn p1(&self) -> &DMatrix<f64> {
        &self.p1
    }

    pub fn r_ext(&self) -> &DMatrix<f64> {
        &self.r_ext
    }

    /// Maps boundary traces of the co-energy variables to the boundary
    /// port variables. `lx_at_length` and `lx_at_zero` are the 2n-vectors
    /// `[L1 x1; L2 x2]` evaluated at ζ = L and ζ = 0.
    pub fn port_variables(
        &self,
        lx_at_length: &DVector<f64>,
        lx_at_zero: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let dim = 2 * self.n;
        if lx_at_length.len() != dim || lx_at_zero.len() != dim {
            return Err(PhsError::Dimension(format!(
                "boundary traces must have length {dim}"
            )));
        }
        let mut stacked = DVector::zeros(2 * dim);
        stacked.rows_mut(0, dim).copy_from(lx_at_length);
        stacked.rows_mut(dim, dim).copy_from(lx_at_zero);
        let ports = &self.r_ext * stacked;
        let f = ports.rows(0, dim).into_owned();
        let e = ports.rows(dim, dim).into_owned();
        Ok((f, e))
    }
}

/// Builds the boundary-port map of a plant.
pub fn build_boundary_port_map(plant: &ContinuousPlant) -> Result<BoundaryPortMap> {
    let n = plant.n();
    let g1 = plant.g1();
    let det = g1.clone().lu().determinant();
    if det.abs() <= 1e-12 * g1.norm().max(f64::MIN_POSITIVE) {
        return Err(PhsError::Model("G1 is singular".into()));
    }
    let mut p1 = DMatrix::zeros(2 * n, 2 * n);
    p1.view_mut((0, n), (n, n)).copy_from(g1);
    p1.view_mut((n, 0), (n, n)).copy_from(&g1.transpose());
    let scale = 1.0 / std::f64::consts::SQRT_2;
    let dim = 2 * n;
    let mut r_ext = DMatrix::zeros(2 * dim, 2 * dim);
    r_ext.view_mut((0, 0), (dim, dim)).copy_from(&(&p1 * scale));
    r_ext
        .view_mut((0, dim), (dim, dim))
        .copy_from(&(&p1 * -scale));
    r_ext
        .view_mut((dim, 0), (dim, dim))
        .copy_from(&(DMatrix::identity(dim, dim) * scale));
    r_ext
        .view_mut((dim, dim), (dim, dim))
        .copy_from(&(DMatrix::identity(dim, dim) * scale));
    Ok(BoundaryPortMap { n, p1, r_ext })
}

/// Admissibility report for a candidate boundary matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub rank: usize,
    /// Smallest eigenvalue of `sym(W Σ Wᵀ)`.
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// Checks the boundary-matrix condition: full row rank and
/// `W Σ Wᵀ ⪰ 0`, with the positive-semidefiniteness floor taken relative
/// to `max(1, ‖WΣWᵀ‖)`.
pub fn validate_boundary_matrix(w: &DMatrix<f64>, plant: &ContinuousPlant) -> Result<BoundaryReport> {
    let n = plant.n();
    if w.shape() != (2 * n, 4 * n) {
        return Err(PhsError::Dimension(format!(
            "W must be {}x{}, got {}x{}",
            2 * n,
            4 * n,
            w.nrows(),
            w.ncols()
        )));
    }
    let gram = w * sigma_matrix(n) * w.transpose();
    let min_eigenvalue = linalg::min_symmetric_eigenvalue(&gram);
    let rank = linalg::rank(w);
    let pass = rank == 2 * n && min_eigenvalue >= -1e-12 * gram.norm().max(1.0);
    Ok(BoundaryReport {
        rank,
        min_eigenvalue,
        pass,
    })
}

/// JSON document for a plant with constant profiles; matrices are
/// row-major nested arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlantDocument {
    pub n: usize,
    pub length: f64,
    #[serde(rename = "G0", with = "linalg::serde_matrix")]
    pub g0: DMatrix<f64>,
    #[serde(rename = "G1", with = "linalg::serde_matrix")]
    pub g1: DMatrix<f64>,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "R", with = "linalg::serde_matrix")]
    pub r: DMatrix<f64>,
    #[serde(rename = "W", with = "linalg::serde_matrix")]
    pub w: DMatrix<f64>,
    #[serde(rename = "W_tilde", with = "linalg::serde_matrix")]
    pub w_tilde: DMatrix<f64>,
}

impl PlantDocument {
    pub fn into_plant(self) -> Result<ContinuousPlant> {
        ContinuousPlant::new(
            self.n,
            self.length,
            self.g0,
            self.g1,
            Profile::Constant(self.l1),
            Profile::Constant(self.l2),
            self.r,
            self.w,
            self.w_tilde,
        )
    }

    pub fn from_plant(plant: &ContinuousPlant) -> Result<Self> {
        let l1 = plant.l1().as_constant().ok_or_else(|| {
            PhsError::Unsupported("only constant L1 profiles serialize to JSON".into())
        })?;
        let l2 = plant.l2().as_constant().ok_or_else(|| {
            PhsError::Unsupported("only constant L2 profiles serialize to JSON".into())
        })?;
        Ok(Self {
            n: plant.n(),
            length: plant.length(),
            g0: plant.g0().clone(),
            g1: plant.g1().clone(),
            l1,
            l2,
            r: plant.r().clone(),
            w: plant.w().clone(),
            w_tilde: plant.w_tilde().clone(),
        })
    }
}
