//! Quantum-jump (Monte Carlo wavefunction) unraveling of the dissipative
//! schemes.
//!
//! Between jumps the state evolves under the non-Hermitian generator
//! H - (i/2) sum_k C_k^dag C_k, losing norm monotonically; a jump fires when
//! the squared norm crosses a pre-drawn uniform threshold, the channel is
//! selected with probability proportional to ||C_k psi||^2 and the state is
//! re-normalized. Trajectories are deterministic functions of
//! (scheme, initial state, t_max, seed, tolerances); ensembles assign one
//! counter-based RNG stream per trajectory index so parallel runs reproduce
//! bit-for-bit.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::LevelScheme;
use crate::ode::{SolverOptions, Stepper};
use crate::operator::Operator;

/// A normalized pure state.
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Array1<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParams(format!(
                "state vector norm {norm} is not 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// The basis state |level>.
    pub fn basis_state(dim: usize, level: usize) -> Self {
        assert!(level < dim);
        let mut amplitudes = Array1::zeros(dim);
        amplitudes[level] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn population(&self, level: usize) -> f64 {
        self.amplitudes[level].norm_sqr()
    }
}

/// One emission event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub time: f64,
    /// Index of the collapse operator that fired.
    pub channel: usize,
}

/// A single unraveled trajectory: its jumps and the normalized state
/// sampled at the requested times (with the raw squared norm of the
/// no-jump segment for diagnostics).
#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    pub jumps: Vec<JumpRecord>,
    pub sample_times: Vec<f64>,
    pub samples: Vec<StateVector>,
    pub raw_norm_sq: Vec<f64>,
}

fn split_complex(psi: &StateVector) -> Vec<f64> {
    let d = psi.dim();
    let mut y = vec![0.0; 2 * d];
    for i in 0..d {
        y[i] = psi.amplitudes[i].re;
        y[d + i] = psi.amplitudes[i].im;
    }
    y
}

fn join_complex(y: &[f64]) -> Array1<C64> {
    let d = y.len() / 2;
    Array1::from_iter((0..d).map(|i| C64::new(y[i], y[d + i])))
}

fn norm_sq(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum()
}

fn normalized_state(y: &[f64]) -> StateVector {
    let amps = join_complex(y);
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector {
        amplitudes: amps.mapv(|a| a / norm),
    }
}

/// Real split of -i H_eff acting on [Re psi, Im psi].
struct EffectiveFlow {
    dim: usize,
    a: Vec<f64>, // Re H_eff, row-major
    b: Vec<f64>, // Im H_eff, row-major
}

impl EffectiveFlow {
    fn new(scheme: &LevelScheme) -> Self {
        let h_eff = scheme.effective_generator();
        let d = scheme.dim();
        let mut a = vec![0.0; d * d];
        let mut b = vec![0.0; d * d];
        for j in 0..d {
            for k in 0..d {
                let z = h_eff.get(j, k);
                a[j * d + k] = z.re;
                b[j * d + k] = z.im;
            }
        }
        Self { dim: d, a, b }
    }

    /// d(u + iv)/dt = -i (A + iB)(u + iv):
    /// du = A v + B u, dv = B v - A u.
    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let d = self.dim;
        let (u, v) = y.split_at(d);
        for i in 0..d {
            let mut du = 0.0;
            let mut dv = 0.0;
            let row = i * d;
            for k in 0..d {
                du += self.a[row + k] * v[k] + self.b[row + k] * u[k];
                dv += self.b[row + k] * v[k] - self.a[row + k] * u[k];
            }
            dy[i] = du;
            dy[d + i] = dv;
        }
    }
}

fn apply_collapse(c: &Operator, psi: &Array1<C64>) -> Array1<C64> {
    let d = psi.len();
    Array1::from_iter((0..d).map(|j| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..d {
            acc += c.get(j, k) * psi[k];
        }
        acc
    }))
}

/// Draw from the open interval (0, 1).
fn draw_threshold(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let r: f64 = rng.random();
        if r > 0.0 {
            return r;
        }
    }
}

/// Unravel one trajectory with the given seed (stream 0 of the generator).
pub fn run_trajectory(
    scheme: &LevelScheme,
    psi0: &StateVector,
    t_max: f64,
    seed: u64,
    sample_times: &[f64],
    opts: SolverOptions,
) -> Result<TrajectoryResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_trajectory_with_rng(scheme, psi0, t_max, &mut rng, sample_times, opts)
}

fn run_trajectory_with_rng(
    scheme: &LevelScheme,
    psi0: &StateVector,
    t_max: f64,
    rng: &mut ChaCha8Rng,
    sample_times: &[f64],
    opts: SolverOptions,
) -> Result<TrajectoryResult> {
    if scheme.collapse_ops().is_empty() {
        return Err(Error::NoDissipation);
    }
    if psi0.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch(psi0.dim(), scheme.dim()));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::InvalidParams(format!("t_max = {t_max}")));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("sample times must be sorted".into()));
    }
    if let Some(&last) = sample_times.last() {
        if last > t_max + 1e-12 || sample_times[0] < 0.0 {
            return Err(Error::InvalidParams(
                "sample times must lie in [0, t_max]".into(),
            ));
        }
    }

    // the jump-time refinement resolves 1e-6 of the fastest decay time
    let gamma_scale = {
        let g = scheme.params().gamma;
        if g > 0.0 {
            g
        } else {
            let w = scheme.decay_rate_operator();
            (0..scheme.dim())
                .map(|i| w.get(i, i).re)
                .fold(0.0f64, f64::max)
                .max(1e-12)
        }
    };
    let time_tol = 1e-6 / gamma_scale;

    let flow = EffectiveFlow::new(scheme);
    let mut stepper = Stepper::new(
        |_t, y: &[f64], dy: &mut [f64]| flow.rhs(y, dy),
        0.0,
        split_complex(psi0),
        opts,
    )?;

    let mut jumps = Vec::new();
    let mut samples = Vec::new();
    let mut raw_norm_sq = Vec::new();
    let mut next_sample = 0;

    // samples at t = 0
    while next_sample < sample_times.len() && sample_times[next_sample] <= 0.0 {
        samples.push(psi0.clone());
        raw_norm_sq.push(1.0);
        next_sample += 1;
    }

    let mut threshold = draw_threshold(rng);
    let mut buf = vec![0.0; 2 * scheme.dim()];

    'evolution: loop {
        let dense = stepper.step()?;
        let seg_end = dense.t1().min(t_max);

        dense.eval(seg_end, &mut buf);
        let crossing = norm_sq(&buf) < threshold;

        let event_time = if crossing {
            // bisect the monotone norm decay for the crossing time
            let mut lo = dense.t0;
            let mut hi = seg_end;
            let mut guard = 0;
            while hi - lo > time_tol && guard < 200 {
                let mid = 0.5 * (lo + hi);
                dense.eval(mid, &mut buf);
                if norm_sq(&buf) < threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
                guard += 1;
            }
            Some(0.5 * (lo + hi))
        } else {
            None
        };

        let segment_stop = event_time.unwrap_or(seg_end);

        // samples inside the pre-jump segment
        while next_sample < sample_times.len() && sample_times[next_sample] <= segment_stop {
            dense.eval(sample_times[next_sample], &mut buf);
            samples.push(normalized_state(&buf));
            raw_norm_sq.push(norm_sq(&buf));
            next_sample += 1;
        }

        if let Some(t_jump) = event_time {
            dense.eval(t_jump, &mut buf);
            let psi = join_complex(&buf);
            let weights: Vec<f64> = scheme
                .collapse_ops()
                .iter()
                .map(|c| apply_collapse(c, &psi).iter().map(|a| a.norm_sqr()).sum())
                .collect();
            let total: f64 = weights.iter().sum();
            if !(total.is_finite() && total > 0.0) {
                return Err(Error::SolverFailure(t_jump));
            }
            let mut pick = rng.random::<f64>() * total;
            let mut channel = weights.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                if pick < *w {
                    channel = k;
                    break;
                }
                pick -= w;
            }
            let collapsed = apply_collapse(&scheme.collapse_ops()[channel], &psi);
            let norm = collapsed.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let renorm = collapsed.mapv(|a| a / norm);
            jumps.push(JumpRecord {
                time: t_jump,
                channel,
            });
            let new_state = StateVector { amplitudes: renorm };
            stepper.reset(t_jump, split_complex(&new_state));
            threshold = draw_threshold(rng);
            continue 'evolution;
        }

        if dense.t1() >= t_max {
            // samples equal to t_max up to roundoff may still be pending
            while next_sample < sample_times.len() {
                dense.eval(sample_times[next_sample].min(dense.t1()), &mut buf);
                samples.push(normalized_state(&buf));
                raw_norm_sq.push(norm_sq(&buf));
                next_sample += 1;
            }
            break;
        }
    }
    debug_assert_eq!(samples.len(), sample_times.len());

    Ok(TrajectoryResult {
        jumps,
        sample_times: sample_times.to_vec(),
        samples,
        raw_norm_sq,
    })
}

/// Ensemble controls. The RNG stream of trajectory `i` is derived from
/// (seed, i), so results are independent of the parallel schedule.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleOptions {
    pub n_traj: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

/// Trajectory-averaged populations with their standard errors, plus every
/// trajectory's jump record.
#[derive(Debug)]
pub struct EnsembleResult {
    pub sample_times: Vec<f64>,
    pub jumps: Vec<Vec<JumpRecord>>,
    /// mean_populations[(sample, level)]
    pub mean_populations: Array2<f64>,
    /// standard error of each mean entry
    pub sem_populations: Array2<f64>,
}

pub fn run_ensemble(
    scheme: &LevelScheme,
    psi0: &StateVector,
    t_max: f64,
    sample_times: &[f64],
    opts: &EnsembleOptions,
) -> Result<EnsembleResult> {
    if opts.n_traj == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let runs: Vec<TrajectoryResult> = (0..opts.n_traj)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(index as u64);
            run_trajectory_with_rng(scheme, psi0, t_max, &mut rng, sample_times, opts.solver)
        })
        .collect::<Result<Vec<_>>>()?;

    let d = scheme.dim();
    let n_samples = sample_times.len();
    let mut sum = Array2::<f64>::zeros((n_samples, d));
    let mut sum_sq = Array2::<f64>::zeros((n_samples, d));
    for run in &runs {
        debug_assert_eq!(run.samples.len(), n_samples);
        for (s, state) in run.samples.iter().enumerate() {
            for level in 0..d {
                let p = state.population(level);
                sum[(s, level)] += p;
                sum_sq[(s, level)] += p * p;
            }
        }
    }
    let n = opts.n_traj as f64;
    let mean = sum.mapv(|v| v / n);
    let mut sem = Array2::zeros((n_samples, d));
    if opts.n_traj > 1 {
        for s in 0..n_samples {
            for level in 0..d {
                let var =
                    (sum_sq[(s, level)] - n * mean[(s, level)] * mean[(s, level)]) / (n - 1.0);
                sem[(s, level)] = (var.max(0.0) / n).sqrt();
            }
        }
    }

    Ok(EnsembleResult {
        sample_times: sample_times.to_vec(),
        jumps: runs.into_iter().map(|r| r.jumps).collect(),
        mean_populations: mean,
        sem_populations: sem,
    })
}

/// Aggregated light/dark statistics of an ensemble of jump records.
#[derive(Debug, Clone)]
pub struct TrajectoryStats {
    pub n_traj: usize,
    pub seed: Option<u64>,
    pub dark_threshold: f64,
    /// Completed emission-free intervals of length >= dark_threshold.
    pub dark_period_samples: Vec<f64>,
    /// Arithmetic mean of the samples; absent when none qualify.
    pub mean_dark_period: Option<f64>,
    /// Trailing gaps cut off by t_max, excluded from the mean.
    pub n_censored: usize,
    /// Emissions per unit time inside light periods (completed gaps below
    /// the threshold); absent when no light gap was observed.
    pub emission_rate_light: Option<f64>,
}

/// Classify inter-emission gaps into dark periods (>= `dark_threshold`) and
/// light-period gaps. The interval from t = 0 to the first jump counts as a
/// completed gap; the trailing gap to `t_max` is censored and only counted.
pub fn dark_period_stats(
    records: &[Vec<JumpRecord>],
    dark_threshold: f64,
    t_max: f64,
) -> Result<TrajectoryStats> {
    if records.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(dark_threshold > 0.0 && dark_threshold.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "dark_threshold = {dark_threshold} must be positive"
        )));
    }
    let mut dark_samples = Vec::new();
    let mut n_censored = 0usize;
    let mut light_gap_total = 0.0;
    let mut light_gap_count = 0usize;
    for traj in records {
        let mut prev = 0.0;
        for jump in traj {
            let gap = jump.time - prev;
            if gap >= dark_threshold {
                dark_samples.push(gap);
            } else {
                light_gap_total += gap;
                light_gap_count += 1;
            }
            prev = jump.time;
        }
        if t_max > prev {
            n_censored += 1;
        }
    }
    let mean_dark_period = if dark_samples.is_empty() {
        None
    } else {
        Some(dark_samples.iter().sum::<f64>() / dark_samples.len() as f64)
    };
    let emission_rate_light = if light_gap_count > 0 && light_gap_total > 0.0 {
        Some(light_gap_count as f64 / light_gap_total)
    } else {
        None
    };
    Ok(TrajectoryStats {
        n_traj: records.len(),
        seed: None,
        dark_threshold,
        dark_period_samples: dark_samples,
        mean_dark_period,
        n_censored,
        emission_rate_light,
    })
}

/// Default separation between light-period emission gaps (~1/gamma) and
/// macroscopic dark periods.
pub fn default_dark_threshold(gamma: f64) -> f64 {
    10.0 / gamma
}
