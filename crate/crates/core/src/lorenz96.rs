//! Lorenz-96 simulation with forward-Euler integration and additive
//! Gaussian observation noise.
//!
//! The system couples `n` state variables on a circular domain:
//!
//! ```text
//! dz_i/dt = (z_{i+1} - z_{i-2}) z_{i-1} - z_i + F
//! ```
//!
//! with periodic indices. Observations are `Y = z + eta`,
//! `eta ~ N(0, sigma_eta^2)` i.i.d. per site and period. Noise is applied
//! after the full latent trajectory is integrated, so the latent path for a
//! given seed does not depend on `sigma_eta`.
//!
//! `dt` is the recording interval between periods. Forward Euler is unstable
//! on this system for steps much beyond 0.02 (a single 0.1 step diverges
//! within ~20 periods), so each period may be integrated with `substeps`
//! equal Euler sub-steps of size `dt / substeps`. `substeps = 1` gives the
//! raw one-step recursion `z_{t+1} = z_t + dt * f(z_t)`.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::reservoir::stream_rng;
use crate::scalar::{conv, to_f64, Real};

/// Any state magnitude beyond this aborts the integration.
const BLOWUP_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct Lorenz96Config<T> {
    /// Number of circular sites; the stencil needs at least 4.
    pub n_sites: usize,
    /// Constant forcing `F`.
    pub forcing: T,
    /// Recording interval between periods.
    pub dt: T,
    /// Euler sub-steps per recorded period; the internal step is
    /// `dt / substeps`.
    pub substeps: usize,
    /// Observation noise standard deviation.
    pub sigma_eta: T,
    /// Recorded periods after burn-in.
    pub n_periods: usize,
    /// Discarded leading steps.
    pub burn_in: usize,
    pub seed: u64,
    /// Starting state; when absent, the equilibrium `z_i = F` perturbed by
    /// N(0, 0.01) per site.
    pub initial_state: Option<DVector<T>>,
}

impl<T: Real> Default for Lorenz96Config<T> {
    fn default() -> Self {
        Lorenz96Config {
            n_sites: 40,
            forcing: conv(5.0),
            dt: conv(0.1),
            substeps: 10,
            sigma_eta: conv(0.5),
            n_periods: 750,
            burn_in: 500,
            seed: 0,
            initial_state: None,
        }
    }
}

impl<T: Real> Lorenz96Config<T> {
    // Negated comparisons are deliberate: NaN must fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 4 {
            return Err(Error::param("n_sites", "the i-2..i+1 stencil needs at least 4 sites"));
        }
        if !(self.dt > T::zero()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if self.substeps == 0 {
            return Err(Error::param("substeps", "must be at least 1"));
        }
        if self.sigma_eta < T::zero() {
            return Err(Error::param("sigma_eta", "must be non-negative"));
        }
        if self.n_periods == 0 {
            return Err(Error::param("n_periods", "must be at least 1"));
        }
        if let Some(z0) = &self.initial_state {
            if z0.len() != self.n_sites {
                return Err(Error::dim(format!(
                    "initial state has {} entries for {} sites",
                    z0.len(),
                    self.n_sites
                )));
            }
        }
        Ok(())
    }
}

/// Latent states and noisy observations, one row per period.
#[derive(Debug, Clone, PartialEq)]
pub struct Lorenz96Run<T> {
    pub latent: DMatrix<T>,
    pub observed: DMatrix<T>,
}

/// Right-hand side of the system at state `z`. Panics if `z` has fewer than
/// 4 entries (documented precondition).
pub fn derivative<T: Real>(z: &DVector<T>, forcing: T) -> DVector<T> {
    let n = z.len();
    assert!(n >= 4, "Lorenz-96 stencil needs at least 4 sites");
    DVector::from_fn(n, |i, _| {
        let ahead = z[(i + 1) % n];
        let back2 = z[(i + n - 2) % n];
        let back1 = z[(i + n - 1) % n];
        (ahead - back2) * back1 - z[i] + forcing
    })
}

/// Integrate the system and attach observation noise.
pub fn simulate<T: Real>(config: &Lorenz96Config<T>) -> Result<Lorenz96Run<T>> {
    config.validate()?;
    let n = config.n_sites;
    let mut rng = stream_rng(config.seed, 0);

    let mut z = match &config.initial_state {
        Some(z0) => z0.clone_owned(),
        None => {
            // Equilibrium plus N(0, 0.01) per site.
            let sd = conv::<T>(0.1);
            DVector::from_fn(n, |_, _| config.forcing + sd * T::standard_normal(&mut rng))
        }
    };

    let mut latent = DMatrix::zeros(config.n_periods, n);
    let inner_dt = config.dt / conv::<T>(config.substeps as f64);
    let total_periods = config.burn_in + config.n_periods;
    for period in 0..total_periods {
        for _ in 0..config.substeps {
            let dz = derivative(&z, config.forcing);
            z.zip_apply(&dz, |zv, dv| *zv += inner_dt * dv);
        }
        let magnitude = z.iter().fold(T::zero(), |a, v| Float::max(a, Float::abs(*v)));
        if to_f64(magnitude) > BLOWUP_LIMIT {
            return Err(Error::NumericalBlowup {
                step: period,
                limit: BLOWUP_LIMIT,
            });
        }
        if period >= config.burn_in {
            let row = period - config.burn_in;
            for i in 0..n {
                latent[(row, i)] = z[i];
            }
        }
    }

    let mut observed = latent.clone();
    for t in 0..config.n_periods {
        for i in 0..n {
            observed[(t, i)] += config.sigma_eta * T::standard_normal(&mut rng);
        }
    }

    Ok(Lorenz96Run { latent, observed })
}
