//! Eigenvalue analysis of assembled systems: pole maps, stability
//! margins and the refined-grid spillover study.

use nalgebra::{Complex, DMatrix, Schur};
use serde::{Deserialize, Serialize};

use crate::closed_loop::{assemble_dynamic, ClosedLoop};
use crate::discretize::DiscretePlant;
use crate::error::{PhsError, Result};
use crate::shaping::{build_patch_map, Controller};

/// Experiment metadata carried next to a pole set.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PoleMeta {
    pub p: usize,
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Eigenvalues (rad/s) of a system matrix, sorted by ascending |Im|
/// with ties broken by real part, then by imaginary part.
#[derive(Clone, Debug)]
pub struct PoleSet {
    pub poles: Vec<Complex<f64>>,
    pub meta: Option<PoleMeta>,
}

/// Computes all eigenvalues of a real square matrix (no filtering) via
/// the real Schur decomposition.
pub fn poles(a: &DMatrix<f64>) -> Result<PoleSet> {
    if a.nrows() != a.ncols() {
        return Err(PhsError::Dimension(format!(
            "system matrix must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.is_empty() {
        return Err(PhsError::Input("empty system matrix".into()));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| PhsError::Numeric("Schur eigensolver did not converge".into()))?;
    let eigenvalues = schur
        .complex_eigenvalues();
    let mut poles: Vec<Complex<f64>> = eigenvalues.iter().cloned().collect();
    poles.sort_by(|a, b| {
        a.im.abs()
            .partial_cmp(&b.im.abs())
            .unwrap()
            .then(a.re.partial_cmp(&b.re).unwrap())
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(PoleSet { poles, meta: None })
}

/// Largest real part over the pole set; negative means the discretized
/// loop is asymptotically stable.
pub fn stability_margin(poleset: &PoleSet) -> Result<f64> {
    if poleset.poles.is_empty() {
        return Err(PhsError::Input("empty pole set".into()));
    }
    Ok(poleset
        .poles
        .iter()
        .map(|s| s.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

impl PoleSet {
    pub fn with_meta(mut self, meta: PoleMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    /// Largest |s| over the set (spectral scale for relative tolerances).
    pub fn spectral_radius(&self) -> f64 {
        self.poles.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// Checks closure under conjugation: every pole with |Im| above the
    /// relative floor has a matching conjugate within `rel_tol · |s|`.
    pub fn is_conjugate_closed(&self, rel_tol: f64) -> bool {
        let scale = self.spectral_radius().max(1.0);
        self.poles.iter().all(|s| {
            if s.im.abs() <= rel_tol * scale {
                return true;
            }
            let conj = s.conj();
            self.poles
                .iter()
                .any(|t| (t - conj).norm() <= rel_tol * s.norm().max(1.0))
        })
    }

    /// Poles with vanishing imaginary part (relative to `max(1, |s|)`).
    pub fn real_poles(&self, rel_tol: f64) -> Vec<f64> {
        self.poles
            .iter()
            .filter(|s| s.im.abs() <= rel_tol * s.norm().max(1.0))
            .map(|s| s.re)
            .collect()
    }

    /// Oscillatory pole (|Im| above the relative floor) with the largest
    /// real part; the slowest-decaying vibration mode.
    pub fn dominant_oscillatory(&self, rel_tol: f64) -> Option<Complex<f64>> {
        let scale = self.spectral_radius().max(1.0);
        self.poles
            .iter()
            .filter(|s| s.im.abs() > rel_tol * scale)
            .cloned()
            .max_by(|a, b| a.re.partial_cmp(&b.re).unwrap())
    }

    /// Oscillatory pole with the smallest |Im|; the lowest-frequency
    /// vibration mode.
    pub fn lowest_oscillatory(&self, rel_tol: f64) -> Option<Complex<f64>> {
        let scale = self.spectral_radius().max(1.0);
        self.poles
            .iter()
            .filter(|s| s.im.abs() > rel_tol * scale)
            .cloned()
            .min_by(|a, b| a.im.abs().partial_cmp(&b.im.abs()).unwrap())
    }

    /// Pole closest to `target` in Euclidean distance.
    pub fn nearest(&self, target: Complex<f64>) -> Option<Complex<f64>> {
        self.poles
            .iter()
            .cloned()
            .min_by(|a, b| (a - target).norm().partial_cmp(&(b - target).norm()).unwrap())
    }

    /// Real pole closest to a real target.
    pub fn nearest_real(&self, target: f64, rel_tol: f64) -> Option<f64> {
        self.real_poles(rel_tol)
            .into_iter()
            .min_by(|a, b| (a - target).abs().partial_cmp(&(b - target).abs()).unwrap())
    }
}

/// Pairs a controller with a refined plant: the patch map is rebuilt as
/// `M = I_m ⊗ 1_{p_fine/m}` while `B_c`, `Q_c`, `D_c` stay fixed. This is
/// the spillover configuration: the controller was designed on a coarser
/// grid than the plant it now drives.
pub fn spillover_assembly(fine_plant: &DiscretePlant, ctrl: &Controller) -> Result<ClosedLoop> {
    let m = ctrl.m();
    if !fine_plant.p.is_multiple_of(m) {
        return Err(PhsError::Config(format!(
            "patch count m = {m} must divide refined element count p = {}",
            fine_plant.p
        )));
    }
    let patch = build_patch_map(fine_plant.p, m)?;
    let repatched = Controller::new(
        ctrl.bc.clone(),
        ctrl.qc.clone(),
        ctrl.dc.clone(),
        patch,
        ctrl.residual,
    )?;
    assemble_dynamic(fine_plant, &repatched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::discretize;
    use crate::model::ContinuousPlant;

    fn string_discrete(p: usize, dissipation: f64) -> DiscretePlant {
        let plant =
            ContinuousPlant::uniform_string(2.0, 1.4e6, 1.225, dissipation.max(1e-3)).unwrap();
        let mut disc = discretize(&plant, p, 0.5).unwrap();
        if dissipation == 0.0 {
            disc.rd.fill(0.0);
        }
        disc
    }

    #[test]
    fn zero_matrix_has_zero_poles() {
        let ps = poles(&DMatrix::zeros(4, 4)).unwrap();
        assert_eq!(ps.poles.len(), 4);
        assert!(ps.poles.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn diagonal_matrix_margin() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -1.0, -1.0]));
        let ps = poles(&a).unwrap();
        assert_eq!(stability_margin(&ps).unwrap(), -1.0);
    }

    #[test]
    fn empty_pole_set_is_an_input_error() {
        let ps = PoleSet {
            poles: vec![],
            meta: None,
        };
        assert!(matches!(stability_margin(&ps), Err(PhsError::Input(_))));
    }

    #[test]
    fn lossless_open_loop_is_purely_imaginary() {
        let plant = string_discrete(20, 0.0);
        let ps = poles(&plant.open_loop_matrix()).unwrap();
        for s in &ps.poles {
            assert!(s.re.abs() <= 1e-6 * s.norm().max(1.0));
        }
        assert!(ps.is_conjugate_closed(1e-6));
    }

    #[test]
    fn dissipative_open_loop_margin_is_negative() {
        let plant = string_discrete(20, 1e-3);
        let ps = poles(&plant.open_loop_matrix()).unwrap();
        assert!(stability_margin(&ps).unwrap() < 0.0);
    }

    #[test]
    fn pole_ordering_is_by_imaginary_magnitude() {
        let plant = string_discrete(12, 1e-3);
        let ps = poles(&plant.open_loop_matrix()).unwrap();
        for w in ps.poles.windows(2) {
            assert!(w[0].im.abs() <= w[1].im.abs() + 1e-9);
        }
    }

    #[test]
    fn refinement_keeps_low_frequencies() {
        // eigenvalues of the open-loop generator for p and 2p agree on the
        // 5 lowest conjugate pairs within 2%
        let coarse = poles(&string_discrete(50, 1e-3).open_loop_matrix()).unwrap();
        let fine = poles(&string_discrete(100, 1e-3).open_loop_matrix()).unwrap();
        let coarse_freqs: Vec<f64> = coarse
            .poles
            .iter()
            .filter(|s| s.im > 1e-6)
            .map(|s| s.im)
            .collect();
        let fine_freqs: Vec<f64> = fine
            .poles
            .iter()
            .filter(|s| s.im > 1e-6)
            .map(|s| s.im)
            .collect();
        for i in 0..5 {
            let rel = (coarse_freqs[i] - fine_freqs[i]).abs() / fine_freqs[i];
            assert!(rel < 0.02, "pair {i}: rel dev {rel:.4}");
        }
    }

    #[test]
    fn spillover_with_equal_grids_matches_plain_assembly() {
        let plant = string_discrete(10, 1e-3);
        let ctrl = Controller::design_under_actuated(
            &plant,
            5,
            plant.uniform_energy_target(1e6).unwrap(),
            1000.0,
        )
        .unwrap();
        let direct = assemble_dynamic(&plant, &ctrl).unwrap();
        let spill = spillover_assembly(&plant, &ctrl).unwrap();
        assert_eq!(spill.a_cl, direct.a_cl);
    }

    #[test]
    fn spillover_rebuilds_patch_map() {
        let coarse = string_discrete(50, 1e-3);
        let fine = string_discrete(200, 1e-3);
        let ctrl = Controller::design_under_actuated(
            &coarse,
            10,
            coarse.uniform_energy_target(5e6).unwrap(),
            4000.0,
        )
        .unwrap();
        let cl = spillover_assembly(&fine, &ctrl).unwrap();
        assert_eq!(cl.dim(), 410);

        let bad = string_discrete(23, 1e-3);
        assert!(matches!(
            spillover_assembly(&bad, &ctrl),
            Err(PhsError::Config(_))
        ));
    }
}
