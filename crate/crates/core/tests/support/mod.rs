//! Shared fixtures and the independent optimization oracle used by the
//! acceptance and property suites.
#![allow(dead_code)] // each test binary uses a different subset

use nalgebra::{DMatrix, DVector};
use phs_control::{discretize, ContinuousPlant, DiscretePlant, ShapingProblem};
use rand::rngs::StdRng;
use rand::Rng;

/// Baseline string: L = 2 m, T = 1.4e6 N, rho = 1.225 kg/m, R = 1e-3.
pub fn baseline_plant(p: usize) -> DiscretePlant {
    let plant = ContinuousPlant::uniform_string(2.0, 1.4e6, 1.225, 1e-3).unwrap();
    discretize(&plant, p, 0.5).unwrap()
}

/// Strain initial condition of the experiments: Gaussian(1.5, 0.113).
pub fn strain_ic(p: usize) -> DVector<f64> {
    phs_control::gaussian_profile(p, 2.0, 1.5, 0.113, 1.0).unwrap()
}

/// Stacks [x1d; 0] for a 2p plant state.
pub fn rest_state(x1d: &DVector<f64>) -> DVector<f64> {
    let p = x1d.len();
    let mut x = DVector::zeros(2 * p);
    x.rows_mut(0, p).copy_from(x1d);
    x
}

/// Projection onto the symmetric positive-semidefinite cone.
pub fn project_psd(x: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (x + x.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let clamped = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0)));
    &eig.eigenvectors * clamped * eig.eigenvectors.transpose()
}

/// Projected-gradient descent on f²(X) = ‖A X Aᵀ − Q_m‖²_F over the PSD
/// cone, restarted from random PSD seeds. Returns the best f found.
///
/// This is the brute-force side of the dual-route check: it never sees
/// the SVD solution.
pub fn projected_gradient_best_f(
    problem: &ShapingProblem,
    rng: &mut StdRng,
    restarts: usize,
    iterations: usize,
) -> f64 {
    let a = problem.a();
    let qm = problem.qm();
    let m = a.ncols();
    let ata = a.transpose() * a;
    let lipschitz = 2.0 * ata.norm() * ata.norm();
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };
    let scale = (qm.norm() / ata.norm().max(1e-12)).max(1e-6);

    let mut best = f64::INFINITY;
    for restart in 0..restarts {
        let mut x = if restart == 0 {
            DMatrix::zeros(m, m)
        } else {
            let b = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
            project_psd(&(&b * b.transpose() * scale * rng.random_range(0.01..2.0)))
        };
        for _ in 0..iterations {
            let misfit = a * &x * a.transpose() - qm;
            let grad = a.transpose() * misfit * a * 2.0;
            x = project_psd(&(&x - grad * step));
        }
        let f = (a * &x * a.transpose() - qm).norm();
        best = best.min(f);
    }
    best
}

/// Random diagonal PSD target of size p.
pub fn random_diagonal_target(p: usize, rng: &mut StdRng, scale: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_fn(p, |_, _| {
        if rng.random_range(0.0..1.0) < 0.2 {
            0.0
        } else {
            rng.random_range(0.0..scale)
        }
    }))
}
