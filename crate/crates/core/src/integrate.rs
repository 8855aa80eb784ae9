//! Implicit-midpoint time integration with trajectory bookkeeping.
//!
//! For a linear system `ẋ = A x` the midpoint update
//!
//! ```text
//! x_{n+1} = (I − Δt/2 A)⁻¹ (I + Δt/2 A) x_n
//! ```
//!
//! is the (1,1) Padé approximant of the matrix exponential. It preserves
//! quadratic invariants exactly, so for a port-Hamiltonian `A = (J − R)Q`
//! the discrete energy balance
//! `H(x_{n+1}) − H(x_n) = −Δt (Qx)_midᵀ R (Qx)_mid` holds to round-off,
//! and a lossless system conserves `H` over arbitrarily long horizons.
//! The resolvent is LU-factored once per `(A, Δt)` pair and reused.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{PhsError, Result};

/// Time-integration configuration.
#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Time step in seconds.
    pub dt: f64,
    /// Final time in seconds.
    pub t_final: f64,
    /// Record every `record_stride`-th step (the initial and final states
    /// are always recorded).
    pub record_stride: usize,
}

impl SimConfig {
    pub fn new(dt: f64, t_final: f64, record_stride: usize) -> Result<Self> {
        if dt.is_nan() || dt <= 0.0 {
            return Err(PhsError::Parameter(format!("dt must be positive, got {dt}")));
        }
        if t_final.is_nan() || t_final <= 0.0 || t_final < dt {
            return Err(PhsError::Parameter(format!(
                "t_final must satisfy t_final >= dt > 0, got t_final = {t_final}, dt = {dt}"
            )));
        }
        if record_stride == 0 {
            return Err(PhsError::Parameter("record_stride must be >= 1".into()));
        }
        Ok(Self {
            dt,
            t_final,
            record_stride,
        })
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().max(1.0) as usize
    }
}

/// Initial state profile for the strain distribution.
#[derive(Clone, Debug)]
pub enum InitialProfile {
    Zero,
    /// Deterministic Gaussian bump `amplitude · exp(−(ζ−mu)²/(2 σ²))`
    /// sampled at element midpoints.
    Gaussian {
        mu: f64,
        sigma2: f64,
        amplitude: f64,
    },
    Custom(DVector<f64>),
}

impl InitialProfile {
    pub fn sample(&self, p: usize, length: f64) -> Result<DVector<f64>> {
        match self {
            InitialProfile::Zero => Ok(DVector::zeros(p)),
            InitialProfile::Gaussian {
                mu,
                sigma2,
                amplitude,
            } => gaussian_profile(p, length, *mu, *sigma2, *amplitude),
            InitialProfile::Custom(v) => {
                if v.len() != p {
                    return Err(PhsError::Dimension(format!(
                        "custom profile has length {}, expected {p}",
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Gaussian strain profile at element midpoints `ζ_j = (j − ½) L / p`.
pub fn gaussian_profile(
    p: usize,
    length: f64,
    mu: f64,
    sigma2: f64,
    amplitude: f64,
) -> Result<DVector<f64>> {
    if p == 0 {
        return Err(PhsError::Parameter("p must be >= 1".into()));
    }
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(PhsError::Parameter(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    let l_ab = length / p as f64;
    Ok(DVector::from_fn(p, |j, _| {
        let zeta = (j as f64 + 0.5) * l_ab;
        amplitude * (-(zeta - mu).powi(2) / (2.0 * sigma2)).exp()
    }))
}

/// Midpoint stepper with the resolvent factored once per `(A, dt)`.
pub struct MidpointStepper {
    lu: LU<f64, Dyn, Dyn>,
    plus: DMatrix<f64>,
    dt: f64,
    dim: usize,
}

impl MidpointStepper {
    pub fn new(a: &DMatrix<f64>, dt: f64) -> Result<Self> {
        let dim = a.nrows();
        if a.ncols() != dim {
            return Err(PhsError::Dimension("system matrix must be square".into()));
        }
        if dt == 0.0 || !dt.is_finite() {
            return Err(PhsError::Parameter(format!("invalid dt = {dt}")));
        }
        let half = 0.5 * dt;
        let minus = DMatrix::identity(dim, dim) - a * half;
        let plus = DMatrix::identity(dim, dim) + a * half;
        let lu = minus.lu();
        if !lu.is_invertible() {
            return Err(PhsError::Step {
                step: 0,
                dt,
                message: "midpoint resolvent (I − dt/2 A) is singular".into(),
            });
        }
        Ok(Self { lu, plus, dt, dim })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim {
            return Err(PhsError::Dimension(format!(
                "state must have length {}",
                self.dim
            )));
        }
        let rhs = &self.plus * x;
        self.lu.solve(&rhs).ok_or(PhsError::Step {
            step: 0,
            dt: self.dt,
            message: "midpoint solve failed".into(),
        })
    }
}

/// Single midpoint step (factors the resolvent; prefer
/// [`MidpointStepper`] inside loops).
pub fn midpoint_step(a: &DMatrix<f64>, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    MidpointStepper::new(a, dt)?.step(x)
}

/// Casimir observer attached to a simulated system:
/// `C(x) = factor · x[0..p] − x[xc_offset..xc_offset+m]`.
#[derive(Clone, Debug)]
pub struct CasimirObserver {
    pub factor: DMatrix<f64>,
    pub xc_offset: usize,
}

impl CasimirObserver {
    pub fn evaluate(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.factor.ncols();
        let m = self.factor.nrows();
        let x1d = x.rows(0, p);
        let xc = x.rows(self.xc_offset, m);
        &self.factor * x1d - xc
    }
}

/// Linear port-Hamiltonian system prepared for simulation: state matrix,
/// energy matrix (`H = ½ xᵀ E x`), leading strain-block size for the
/// endpoint observable, and an optional Casimir observer.
#[derive(Clone, Debug)]
pub struct LinearPhsSystem {
    pub a: DMatrix<f64>,
    pub energy: DMatrix<f64>,
    pub p: usize,
    pub casimir: Option<CasimirObserver>,
}

impl LinearPhsSystem {
    pub fn hamiltonian(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.energy * x).dot(x)
    }

    /// Endpoint displacement `ω(L) = Σ_j x1d_j` (element-integral strain
    /// convention).
    pub fn endpoint(&self, x: &DVector<f64>) -> f64 {
        x.rows(0, self.p).sum()
    }
}

/// Recorded trajectory of one simulation run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub hamiltonian: Vec<f64>,
    pub endpoint: Vec<f64>,
    /// Euclidean norm of the Casimir value per record (zero when the
    /// system carries no controller).
    pub casimir_norm: Vec<f64>,
    /// Maximum over all steps (not only records) of `‖C(x) − C(x0)‖`.
    pub casimir_drift: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_hamiltonian(&self) -> f64 {
        *self.hamiltonian.last().unwrap_or(&0.0)
    }
}

/// Integrates `ẋ = A x` from `x0` with the implicit midpoint rule,
/// recording times, states, Hamiltonian, endpoint displacement and
/// Casimir traces. Deterministic for fixed inputs.
pub fn simulate(system: &LinearPhsSystem, x0: &DVector<f64>, cfg: &SimConfig) -> Result<Trajectory> {
    if x0.len() != system.a.nrows() {
        return Err(PhsError::Dimension(format!(
            "initial state must have length {}",
            system.a.nrows()
        )));
    }
    let stepper = MidpointStepper::new(&system.a, cfg.dt)?;
    let steps = cfg.steps();
    let mut trajectory = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        hamiltonian: Vec::new(),
        endpoint: Vec::new(),
        casimir_norm: Vec::new(),
        casimir_drift: 0.0,
    };
    let casimir_ref = system.casimir.as_ref().map(|obs| obs.evaluate(x0));

    fn record(
        trajectory: &mut Trajectory,
        system: &LinearPhsSystem,
        step: usize,
        dt: f64,
        x: &DVector<f64>,
    ) {
        trajectory.times.push(step as f64 * dt);
        trajectory.states.push(x.clone());
        trajectory.hamiltonian.push(system.hamiltonian(x));
        trajectory.endpoint.push(system.endpoint(x));
        let norm = system
            .casimir
            .as_ref()
            .map_or(0.0, |obs| obs.evaluate(x).norm());
        trajectory.casimir_norm.push(norm);
    }

    let mut drift = 0.0_f64;
    let mut x = x0.clone();
    record(&mut trajectory, system, 0, cfg.dt, &x);
    for step in 1..=steps {
        x = stepper.step(&x).map_err(|e| match e {
            PhsError::Step { dt, message, .. } => PhsError::Step { step, dt, message },
            other => other,
        })?;
        if let (Some(obs), Some(reference)) = (&system.casimir, &casimir_ref) {
            let deviation = (obs.evaluate(&x) - reference).norm();
            drift = drift.max(deviation);
        }
        if step % cfg.record_stride == 0 || step == steps {
            record(&mut trajectory, system, step, cfg.dt, &x);
        }
    }
    trajectory.casimir_drift = drift;
    Ok(trajectory)
}

/// Strain-state convention for deformation reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrainConvention {
    /// `x1d_j` is the element integral of the strain: `ω_j = Σ_{i≤j} x1d_i`.
    ElementIntegral,
    /// `x1d_j` is the pointwise strain: weights the cumulative sum by `L_ab`.
    Pointwise,
}

/// Reconstructs the displacement `ω` at element right edges from the
/// strain state, with the clamped end `ω(0) = 0`.
pub fn reconstruct_deformation(
    x1d: &DVector<f64>,
    l_ab: f64,
    convention: StrainConvention,
) -> DVector<f64> {
    let weight = match convention {
        StrainConvention::ElementIntegral => 1.0,
        StrainConvention::Pointwise => l_ab,
    };
    let mut omega = DVector::zeros(x1d.len());
    let mut acc = 0.0;
    for (j, value) in x1d.iter().enumerate() {
        acc += weight * value;
        omega[j] = acc;
    }
    omega
}

/// Settle-time verdict.
#[derive(Clone, Copy, Debug)]
pub struct SettleTime {
    pub time: f64,
    pub settled: bool,
}

/// First recorded time after which `|trace|` stays within
/// `band_fraction · max |trace|` for all later records. Returns the final
/// time with `settled = false` when the trace never settles.
pub fn settle_time(times: &[f64], trace: &[f64], band_fraction: f64) -> Result<SettleTime> {
    if times.is_empty() || times.len() != trace.len() {
        return Err(PhsError::Input(format!(
            "need matching nonempty traces, got {} times and {} samples",
            times.len(),
            trace.len()
        )));
    }
    if band_fraction.is_nan() || band_fraction <= 0.0 || band_fraction >= 1.0 {
        return Err(PhsError::Parameter(format!(
            "band_fraction must lie in (0, 1), got {band_fraction}"
        )));
    }
    let peak = trace.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if peak == 0.0 {
        return Ok(SettleTime {
            time: times[0],
            settled: true,
        });
    }
    let band = band_fraction * peak;
    // walk backwards to the last out-of-band sample
    let mut first_inside = 0;
    for (idx, value) in trace.iter().enumerate().rev() {
        if value.abs() > band {
            first_inside = idx + 1;
            break;
        }
    }
    if first_inside >= times.len() {
        return Ok(SettleTime {
            time: *times.last().unwrap(),
            settled: false,
        });
    }
    Ok(SettleTime {
        time: times[first_inside],
        settled: true,
    })
}
