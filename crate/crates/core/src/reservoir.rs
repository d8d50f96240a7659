//! Reservoir weight generation and the leaky hidden-state recursion.
//!
//! A reservoir is a pair of fixed random matrices: hidden-to-hidden weights
//! `W` (rescaled so its spectral radius equals the target `nu`) and
//! input-to-hidden weights `U`. Entries are drawn from a sparse mixture,
//! `Bernoulli(pi) * Uniform(-a, a)`, so most entries are exactly zero. The
//! hidden state evolves by
//!
//! ```text
//! h_t = (1 - alpha) * h_{t-1} + alpha * g(W h_{t-1} + U x_t)
//! ```
//!
//! where `W` is stored already rescaled. Weight draws for ensemble member
//! `k` come from an independent, counter-based ChaCha stream selected by
//! `k`, so member `k` is reproducible on its own regardless of the ensemble
//! size or the number of worker threads.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::scalar::{conv, to_f64, Real};

/// Raw spectral radii below this are treated as degenerate (unscalable).
const DEGENERATE_RADIUS_FLOOR: f64 = 1e-12;

/// Stream tag for per-member forecast-noise draws, disjoint from the
/// weight-generation streams.
pub(crate) const NOISE_STREAM_TAG: u64 = 1 << 63;

/// Deterministic ChaCha stream derived from a base seed and a stream id.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Hidden-unit activation `g_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Tanh => Float::tanh(x),
            Activation::Identity => x,
        }
    }
}

/// Hyper-parameters of one echo state reservoir.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirSpec<T> {
    /// Number of hidden units.
    pub n_h: usize,
    /// Target spectral radius, in (0, 1).
    pub nu: T,
    /// Inclusion probability for `W` entries, in (0, 1].
    pub pi_w: T,
    /// Inclusion probability for `U` entries, in (0, 1].
    pub pi_u: T,
    /// Half-width of the uniform support for `W` entries.
    pub a_w: T,
    /// Half-width of the uniform support for `U` entries.
    pub a_u: T,
    /// Leaking rate, in (0, 1].
    pub alpha: T,
    pub activation: Activation,
    /// Base RNG seed; member streams are derived from it.
    pub seed: u64,
}

impl<T: Real> Default for ReservoirSpec<T> {
    /// Sparsity and support fixed at 0.1 with `alpha = 1`, the settings used
    /// throughout the experiments; `n_h` and `nu` default to the values
    /// selected by validation on the Lorenz-96 benchmark.
    fn default() -> Self {
        ReservoirSpec {
            n_h: 60,
            nu: conv(0.55),
            pi_w: conv(0.1),
            pi_u: conv(0.1),
            a_w: conv(0.1),
            a_u: conv(0.1),
            alpha: T::one(),
            activation: Activation::Tanh,
            seed: 0,
        }
    }
}

impl<T: Real> ReservoirSpec<T> {
    // Negated comparisons are deliberate: NaN must fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.n_h == 0 {
            return Err(Error::param("n_h", "must be at least 1"));
        }
        let zero = T::zero();
        let one = T::one();
        if !(self.nu > zero && self.nu < one) {
            return Err(Error::param("nu", "must lie strictly inside (0, 1)"));
        }
        if !(self.alpha > zero && self.alpha <= one) {
            return Err(Error::param("alpha", "must lie in (0, 1]"));
        }
        if !(self.pi_w > zero && self.pi_w <= one) {
            return Err(Error::param("pi_w", "must lie in (0, 1]"));
        }
        if !(self.pi_u > zero && self.pi_u <= one) {
            return Err(Error::param("pi_u", "must lie in (0, 1]"));
        }
        if !(self.a_w > zero) {
            return Err(Error::param("a_w", "must be positive"));
        }
        if !(self.a_u > zero) {
            return Err(Error::param("a_u", "must be positive"));
        }
        Ok(())
    }
}

/// Fixed random weight matrices of one ensemble member.
///
/// `w` is stored already rescaled to spectral radius `spec.nu`; the raw
/// radius `lambda_w` is retained for audit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirWeights<T> {
    pub w: DMatrix<T>,
    pub u: DMatrix<T>,
    pub lambda_w: T,
    pub spec: ReservoirSpec<T>,
    pub member_index: usize,
}

/// Hidden states `h_t` stacked as rows, one per input row.
///
/// `washout` marks how many leading rows downstream fitting should skip; no
/// rows are removed here.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStateSequence<T> {
    pub states: DMatrix<T>,
    pub initial: DVector<T>,
    pub washout: usize,
}

impl<T: Real> HiddenStateSequence<T> {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    pub fn n_h(&self) -> usize {
        self.states.ncols()
    }
}

/// Largest eigenvalue magnitude of a square matrix, via the real Schur form.
pub fn spectral_radius<T: Real>(m: &DMatrix<T>) -> Result<T> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(format!(
            "spectral_radius needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !Float::is_finite(*v)) {
        return Err(Error::NonFinite {
            context: "spectral_radius input",
        });
    }
    if m.nrows() == 0 {
        return Ok(T::zero());
    }
    let radius = m
        .complex_eigenvalues()
        .iter()
        .map(|c| Float::sqrt(c.re * c.re + c.im * c.im))
        .fold(T::zero(), Float::max);
    Ok(radius)
}

fn sample_sparse_uniform<T: Real, R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    inclusion: T,
    half_width: T,
) -> DMatrix<T> {
    let p = to_f64(inclusion);
    let mut m = DMatrix::zeros(rows, cols);
    // Row-major fill order is part of the reproducibility contract.
    for i in 0..rows {
        for j in 0..cols {
            if rng.random_bool(p) {
                m[(i, j)] = rng.random_range(-half_width..half_width);
            }
        }
    }
    m
}

/// Draw the fixed weight matrices for ensemble member `member_index`.
///
/// `W` entries are `Bernoulli(pi_w) * Uniform(-a_w, a_w)`, then the whole
/// matrix is rescaled by `nu / |lambda_w|`; `U` uses `(pi_u, a_u)` and is
/// left unscaled. Identical `(spec, n_input, member_index)` always produce
/// bit-identical weights.
pub fn generate_weights<T: Real>(
    spec: &ReservoirSpec<T>,
    n_input: usize,
    member_index: usize,
) -> Result<ReservoirWeights<T>> {
    spec.validate()?;
    if n_input == 0 {
        return Err(Error::param("n_input", "must be at least 1"));
    }

    let mut rng = stream_rng(spec.seed, member_index as u64);
    let mut w = sample_sparse_uniform(&mut rng, spec.n_h, spec.n_h, spec.pi_w, spec.a_w);
    let u = sample_sparse_uniform(&mut rng, spec.n_h, n_input, spec.pi_u, spec.a_u);

    let lambda_w = spectral_radius(&w)?;
    if to_f64(lambda_w) < DEGENERATE_RADIUS_FLOOR {
        return Err(Error::DegenerateReservoir {
            radius: to_f64(lambda_w),
            floor: DEGENERATE_RADIUS_FLOOR,
        });
    }
    w *= spec.nu / lambda_w;

    Ok(ReservoirWeights {
        w,
        u,
        lambda_w,
        spec: spec.clone(),
        member_index,
    })
}

impl<T: Real> ReservoirWeights<T> {
    pub fn n_h(&self) -> usize {
        self.spec.n_h
    }

    pub fn n_input(&self) -> usize {
        self.u.ncols()
    }

    /// One step of the leaky recursion from state `h` under input `x`.
    pub fn step(&self, h: &DVector<T>, x: &DVector<T>) -> DVector<T> {
        let mut pre = DVector::zeros(self.n_h());
        pre.gemv(T::one(), &self.w, h, T::zero());
        pre.gemv(T::one(), &self.u, x, T::one());
        let alpha = self.spec.alpha;
        let keep = T::one() - alpha;
        let act = self.spec.activation;
        let mut next = h.clone_owned();
        next.zip_apply(&pre, |hv, pv| *hv = keep * *hv + alpha * act.apply(pv));
        next
    }
}

/// Run the recursion over `inputs` (one row per time step) from `initial`.
///
/// Row `t` of the result is the state after consuming input row `t`. The
/// stored `W` is already rescaled, so no further scaling happens here.
pub fn run_reservoir<T: Real>(
    weights: &ReservoirWeights<T>,
    inputs: &DMatrix<T>,
    initial: &DVector<T>,
    washout: usize,
) -> Result<HiddenStateSequence<T>> {
    let n_h = weights.n_h();
    if inputs.ncols() != weights.u.ncols() {
        return Err(Error::dim(format!(
            "inputs have {} columns but U expects {}",
            inputs.ncols(),
            weights.u.ncols()
        )));
    }
    if initial.len() != n_h {
        return Err(Error::dim(format!(
            "initial state has length {} but n_h = {}",
            initial.len(),
            n_h
        )));
    }

    let steps = inputs.nrows();
    // Transposed inputs give contiguous column views for gemv in the hot loop.
    let inputs_t = inputs.transpose();
    let alpha = weights.spec.alpha;
    let keep = T::one() - alpha;
    let act = weights.spec.activation;

    let mut states = DMatrix::zeros(steps, n_h);
    let mut h = initial.clone_owned();
    let mut pre = DVector::zeros(n_h);
    for t in 0..steps {
        pre.gemv(T::one(), &weights.w, &h, T::zero());
        pre.gemv(T::one(), &weights.u, &inputs_t.column(t), T::one());
        h.zip_apply(&pre, |hv, pv| *hv = keep * *hv + alpha * act.apply(pv));
        for j in 0..n_h {
            states[(t, j)] = h[j];
        }
    }

    Ok(HiddenStateSequence {
        states,
        initial: initial.clone_owned(),
        washout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(n_h: usize, nu: f64, seed: u64) -> ReservoirSpec<f64> {
        ReservoirSpec {
            n_h,
            nu,
            seed,
            ..ReservoirSpec::default()
        }
    }

    /// Dense mask for tiny test reservoirs, where sparse draws are often
    /// nilpotent (spectral radius exactly zero).
    fn dense_spec(n_h: usize, nu: f64, seed: u64) -> ReservoirSpec<f64> {
        ReservoirSpec {
            pi_w: 0.9,
            pi_u: 0.9,
            ..spec(n_h, nu, seed)
        }
    }

    /// Independent spectral-radius estimate: repeated squaring with
    /// renormalization, `rho = lim ||M^(2^k)||_F^(1/2^k)`.
    fn squaring_radius(m: &DMatrix<f64>, squarings: u32) -> f64 {
        let mut a = m.clone();
        let mut log_scale = 0.0_f64;
        for _ in 0..squarings {
            let norm = a.norm();
            if norm == 0.0 {
                return 0.0;
            }
            a /= norm;
            log_scale = 2.0 * (log_scale + norm.ln());
            a = &a * &a;
        }
        let final_norm = a.norm();
        if final_norm == 0.0 {
            return 0.0;
        }
        ((final_norm.ln() + log_scale) / f64::powi(2.0, squarings as i32)).exp()
    }

    #[test]
    fn spectral_radius_identity_and_zero() {
        for n in [1, 3, 17] {
            let eye = DMatrix::<f64>::identity(n, n);
            assert_relative_eq!(spectral_radius(&eye).unwrap(), 1.0, max_relative = 1e-12);
            let zero = DMatrix::<f64>::zeros(n, n);
            assert_eq!(spectral_radius(&zero).unwrap(), 0.0);
        }
    }

    #[test]
    fn spectral_radius_asymmetric_two_by_two() {
        // Characteristic polynomial lambda^2 = 1, so the radius is exactly 1.
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.5, 0.0]);
        assert_relative_eq!(spectral_radius(&m).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(squaring_radius(&m, 40), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn spectral_radius_matches_squaring_oracle() {
        let mut rng = stream_rng(7, 0);
        for n in [5usize, 12, 25] {
            for _ in 0..4 {
                let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                let schur = spectral_radius(&m).unwrap();
                let oracle = squaring_radius(&m, 45);
                assert_relative_eq!(schur, oracle, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn spectral_radius_rejects_non_finite() {
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(
            spectral_radius(&m),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn spectral_radius_rejects_non_square() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            spectral_radius(&m),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rescaling_hits_target_radius() {
        for (n_h, nu) in [(30, 0.25), (60, 0.55), (120, 0.9)] {
            let w = generate_weights(&spec(n_h, nu, 11), 5, 1).unwrap();
            let rho = spectral_radius(&w.w).unwrap();
            assert!(
                (rho - nu).abs() <= 1e-6 * nu,
                "rho = {rho}, target = {nu}"
            );
        }
    }

    #[test]
    fn known_symmetric_rescale() {
        // Raw [[0, 0.5], [0.5, 0]] has radius 0.5; scaling to nu = 0.8 must
        // give [[0, 0.8], [0.8, 0]].
        let raw = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let lambda = spectral_radius(&raw).unwrap();
        assert_relative_eq!(lambda, 0.5, max_relative = 1e-12);
        let scaled = &raw * (0.8 / lambda);
        assert_relative_eq!(scaled[(0, 1)], 0.8, max_relative = 1e-12);
        assert_relative_eq!(scaled[(1, 0)], 0.8, max_relative = 1e-12);
    }

    #[test]
    fn sparsity_within_binomial_bounds() {
        // ~90% zeros at pi = 0.1; 5 sigma binomial bounds at n_h = 200.
        let s = spec(200, 0.55, 3);
        let w = generate_weights(&s, 50, 2).unwrap();
        let check = |m: &DMatrix<f64>, pi: f64| {
            let n = (m.nrows() * m.ncols()) as f64;
            let nonzero = m.iter().filter(|v| **v != 0.0).count() as f64;
            let sigma = (n * pi * (1.0 - pi)).sqrt();
            assert!(
                (nonzero - n * pi).abs() <= 5.0 * sigma,
                "nonzero = {nonzero}, expected ~{}",
                n * pi
            );
        };
        check(&w.w, 0.1);
        check(&w.u, 0.1);
    }

    #[test]
    fn generation_is_bit_identical() {
        let s = spec(40, 0.55, 99);
        let a = generate_weights(&s, 7, 3).unwrap();
        let b = generate_weights(&s, 7, 3).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.u, b.u);
        assert_eq!(a.lambda_w, b.lambda_w);
    }

    #[test]
    fn members_get_distinct_draws() {
        let s = spec(40, 0.55, 99);
        let a = generate_weights(&s, 7, 1).unwrap();
        let b = generate_weights(&s, 7, 2).unwrap();
        assert_ne!(a.w, b.w);
        assert_ne!(a.u, b.u);
    }

    #[test]
    fn member_weights_do_not_depend_on_ensemble_size() {
        // Drawing member 5 is the same whether or not members 1..4 were drawn.
        let s = spec(20, 0.4, 123);
        let direct = generate_weights(&s, 3, 5).unwrap();
        for k in 1..5 {
            let _ = generate_weights(&s, 3, k).unwrap();
        }
        let after = generate_weights(&s, 3, 5).unwrap();
        assert_eq!(direct.w, after.w);
    }

    #[test]
    fn all_zero_mask_is_degenerate() {
        // pi_w = 1e-9 leaves every entry zero with near certainty.
        let s = ReservoirSpec {
            pi_w: 1e-9,
            ..spec(10, 0.5, 4)
        };
        assert!(matches!(
            generate_weights(&s, 3, 1),
            Err(Error::DegenerateReservoir { .. })
        ));
    }

    #[test]
    fn zero_weights_give_zero_states() {
        let s = dense_spec(8, 0.5, 5);
        let mut w = generate_weights(&s, 2, 1).unwrap();
        w.w.fill(0.0);
        w.u.fill(0.0);
        let inputs = DMatrix::from_element(20, 2, 3.5);
        let run = run_reservoir(&w, &inputs, &DVector::zeros(8), 0).unwrap();
        assert!(run.states.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn alpha_one_means_state_equals_update() {
        // With alpha = 1 the leak term vanishes: h_t = g(W h_{t-1} + U x_t).
        let s = dense_spec(6, 0.5, 6);
        let w = generate_weights(&s, 2, 1).unwrap();
        let mut rng = stream_rng(1, 0);
        let inputs = DMatrix::from_fn(15, 2, |_, _| rng.random_range(-1.0..1.0));
        let run = run_reservoir(&w, &inputs, &DVector::zeros(6), 0).unwrap();

        let mut h = DVector::<f64>::zeros(6);
        for t in 0..15 {
            let x = inputs.row(t).transpose();
            let pre = &w.w * &h + &w.u * &x;
            h = pre.map(f64::tanh);
            for j in 0..6 {
                assert_relative_eq!(run.states[(t, j)], h[j], max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn leaky_update_mixes_previous_state() {
        let s = ReservoirSpec {
            alpha: 0.3,
            ..dense_spec(5, 0.5, 8)
        };
        let w = generate_weights(&s, 2, 1).unwrap();
        let x = DVector::from_element(2, 0.7);
        let h0 = DVector::from_element(5, 0.2);
        let h1 = w.step(&h0, &x);
        let pre = &w.w * &h0 + &w.u * &x;
        for j in 0..5 {
            let expected = 0.7 * 0.2 + 0.3 * pre[j].tanh();
            assert_relative_eq!(h1[j], expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn tanh_states_stay_in_open_unit_interval() {
        let s = spec(30, 0.9, 10);
        let w = generate_weights(&s, 4, 1).unwrap();
        let mut rng = stream_rng(2, 0);
        let inputs = DMatrix::from_fn(100, 4, |_, _| rng.random_range(-5.0..5.0));
        let run = run_reservoir(&w, &inputs, &DVector::zeros(30), 0).unwrap();
        assert!(run.states.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn fading_memory_contracts_initial_conditions() {
        let s = spec(60, 0.55, 21);
        let w = generate_weights(&s, 3, 1).unwrap();
        let mut rng = stream_rng(3, 0);
        let inputs = DMatrix::from_fn(200, 3, |_, _| rng.random_range(-1.0..1.0));

        let from_zero = run_reservoir(&w, &inputs, &DVector::zeros(60), 0).unwrap();
        let other_start = DVector::from_fn(60, |i, _| if i % 2 == 0 { 0.9 } else { -0.9 });
        let from_other = run_reservoir(&w, &inputs, &other_start, 0).unwrap();

        let gap_at = |t: usize| {
            (from_zero.states.row(t) - from_other.states.row(t)).norm()
        };
        // Exponential contraction while the gap is still representable,
        // then effectively zero by the end of the run.
        assert!(gap_at(5) > gap_at(25));
        assert!(gap_at(25) > gap_at(50));
        assert!(gap_at(199) < 1e-6, "final gap = {}", gap_at(199));
    }

    #[test]
    fn run_rejects_shape_mismatches() {
        let s = dense_spec(5, 0.5, 1);
        let w = generate_weights(&s, 3, 1).unwrap();
        let bad_inputs = DMatrix::<f64>::zeros(4, 2);
        assert!(run_reservoir(&w, &bad_inputs, &DVector::zeros(5), 0).is_err());
        let inputs = DMatrix::<f64>::zeros(4, 3);
        assert!(run_reservoir(&w, &inputs, &DVector::zeros(4), 0).is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(spec(0, 0.5, 1).validate().is_err());
        assert!(spec(5, 1.0, 1).validate().is_err());
        assert!(spec(5, 0.0, 1).validate().is_err());
        let bad_alpha = ReservoirSpec {
            alpha: 0.0,
            ..spec(5, 0.5, 1)
        };
        assert!(bad_alpha.validate().is_err());
        let bad_pi = ReservoirSpec {
            pi_u: 1.5,
            ..spec(5, 0.5, 1)
        };
        assert!(bad_pi.validate().is_err());
    }

    #[test]
    fn single_precision_instantiation_works() {
        let s = ReservoirSpec::<f32> {
            n_h: 12,
            nu: 0.5,
            seed: 2,
            ..ReservoirSpec::default()
        };
        let w = generate_weights(&s, 2, 1).unwrap();
        let rho = spectral_radius(&w.w).unwrap();
        assert!((rho - 0.5).abs() < 1e-5);
        let inputs = DMatrix::<f32>::from_element(10, 2, 0.5);
        let run = run_reservoir(&w, &inputs, &DVector::zeros(12), 0).unwrap();
        assert_eq!(run.len(), 10);
    }
}
