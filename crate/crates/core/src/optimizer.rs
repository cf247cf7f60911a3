//! Iterative maximization of the finite-alphabet MI over the precoder.
//!
//! Projected gradient ascent with backtracking line search on a frozen set of
//! noise draws (sample-average approximation). Freezing the draws for the
//! whole run makes the estimated objective a deterministic function of the
//! precoder, so the accepted-MI trace is non-decreasing by construction.
//!
//! Ascent runs from several feasible starts and keeps the best: the
//! water-filling precoder alone is a poor start in the regime where it shuts
//! off weak streams — a zero precoder column is a fixed point of the
//! `H^H H G E` direction (the expected gradient cannot repopulate it), which
//! leaves the rank-deficient start trapped below even unprecoded transmission
//! at mid SNR. Starting additionally from the identity and from a blend
//! restores full-rank ascent paths; the water-filling run is always included,
//! so the result never falls below the WF rate on the frozen objective.

use crate::capacity::{mi_nats_with_draws, mmse_with_draws, mi_gradient};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::mimo::{normalize_matrix_power, wf_precoder, ChannelMatrix, Precoder};
use crate::rng::NoiseSampler;

use num_complex::Complex64;

const LN_2: f64 = std::f64::consts::LN_2;

/// Configuration of the ascent loop.
#[derive(Debug, Clone)]
pub struct OptimConfig {
    /// Outer-loop iteration cap per start.
    pub max_outer_iters: usize,
    /// Backtracking line-search iteration cap.
    pub max_line_search_iters: usize,
    /// Multiplicative step shrink on rejection, in (0, 1).
    pub backtrack_shrink: f64,
    /// Sufficient-increase coefficient, in (0, 1).
    pub sufficient_increase: f64,
    /// Initial line-search step.
    pub initial_step: f64,
    /// Stop when an accepted step improves MI by less than this many bits.
    pub tolerance_bits: f64,
    /// Noise draws per MI evaluation (frozen for the run).
    pub noise_samples: usize,
    pub seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 60,
            max_line_search_iters: 20,
            backtrack_shrink: 0.5,
            sufficient_increase: 1e-4,
            initial_step: 1.0,
            tolerance_bits: 1e-3,
            noise_samples: 500,
            seed: 0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.max_line_search_iters == 0 {
            return Err(Error::InvalidConfig("iteration caps must be at least 1"));
        }
        if self.noise_samples == 0 {
            return Err(Error::InvalidConfig("need at least one noise sample"));
        }
        if !(self.backtrack_shrink > 0.0 && self.backtrack_shrink < 1.0) {
            return Err(Error::InvalidConfig("backtrack shrink must lie in (0, 1)"));
        }
        if !(self.sufficient_increase > 0.0 && self.sufficient_increase < 1.0) {
            return Err(Error::InvalidConfig(
                "sufficient-increase coefficient must lie in (0, 1)",
            ));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidConfig("initial step must be positive"));
        }
        if !(self.tolerance_bits >= 0.0 && self.tolerance_bits.is_finite()) {
            return Err(Error::InvalidConfig("tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// One accepted ascent step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Frozen-noise MI after the step, in bits.
    pub mi_bits: f64,
    /// Accepted step length.
    pub step: f64,
    /// Gradient norm `sqrt(2) ||H^H H G E||_F` under the real inner product.
    pub grad_norm: f64,
}

/// Record of the winning ascent run.
#[derive(Debug, Clone, Default)]
pub struct OptimTrace {
    /// Frozen-noise MI of the start point, in bits.
    pub initial_mi_bits: f64,
    pub iterations: Vec<IterationRecord>,
    /// Set when the line search exhausted its budget without an acceptable
    /// step; the run then stops cleanly at the last accepted iterate.
    pub stalled: bool,
}

impl OptimTrace {
    /// Initial MI followed by the MI after each accepted step; non-decreasing
    /// for a fixed seed.
    pub fn mi_sequence(&self) -> Vec<f64> {
        let mut seq = Vec::with_capacity(self.iterations.len() + 1);
        seq.push(self.initial_mi_bits);
        seq.extend(self.iterations.iter().map(|r| r.mi_bits));
        seq
    }

    pub fn final_mi_bits(&self) -> f64 {
        self.iterations
            .last()
            .map(|r| r.mi_bits)
            .unwrap_or(self.initial_mi_bits)
    }
}

/// The unprecoded baseline `G = I_M` (trace exactly `M`).
pub fn identity_precoder(m: usize) -> Precoder {
    assert!(m >= 1, "precoder dimension must be at least 1");
    Precoder::identity(m)
}

struct AscentRun {
    precoder: Precoder,
    trace: OptimTrace,
    final_nats: f64,
}

fn ascend(
    h: &ChannelMatrix,
    start: Precoder,
    s: &Constellation,
    draws: &[Vec<Complex64>],
    cfg: &OptimConfig,
) -> Result<AscentRun> {
    let (mut mi_nats, _) = mi_nats_with_draws(h, &start, s, draws)?;
    let mut g = start;
    let mut trace = OptimTrace {
        initial_mi_bits: (mi_nats / LN_2).max(0.0),
        ..OptimTrace::default()
    };

    for _ in 0..cfg.max_outer_iters {
        let e = mmse_with_draws(h, &g, s, draws)?;
        let dir = mi_gradient(h, &g, &e)?;
        if !dir.is_finite() {
            return Err(Error::NonFinite("ascent direction"));
        }
        let grad_sq = 2.0 * dir.re_inner(&dir);
        let grad_norm = grad_sq.sqrt();

        let mut step = cfg.initial_step;
        let mut accepted: Option<(Precoder, f64)> = None;
        for _ in 0..cfg.max_line_search_iters {
            let raw = g.matrix().add_scaled(&dir, step);
            if raw.frobenius_norm() <= f64::MIN_POSITIVE {
                step *= cfg.backtrack_shrink;
                continue;
            }
            let candidate = normalize_matrix_power(&raw)?;
            let (cand_nats, _) = mi_nats_with_draws(h, &candidate, s, draws)?;
            if !cand_nats.is_finite() {
                return Err(Error::NonFinite("line-search objective"));
            }
            if cand_nats >= mi_nats + cfg.sufficient_increase * step * grad_sq {
                accepted = Some((candidate, cand_nats));
                break;
            }
            step *= cfg.backtrack_shrink;
        }

        let Some((next, next_nats)) = accepted else {
            trace.stalled = true;
            break;
        };
        let improvement_bits = (next_nats - mi_nats) / LN_2;
        g = next;
        mi_nats = next_nats;
        trace.iterations.push(IterationRecord {
            mi_bits: (mi_nats / LN_2).max(0.0),
            step,
            grad_norm,
        });
        if improvement_bits < cfg.tolerance_bits {
            break;
        }
    }

    Ok(AscentRun {
        precoder: g,
        trace,
        final_nats: mi_nats,
    })
}

/// Maximizes the finite-alphabet MI over feasible precoders.
///
/// Draws `cfg.noise_samples` noise vectors once, runs projected gradient
/// ascent (direction `H^H H G E`, backtracking line search, projection =
/// rescale to full power) from the water-filling precoder, the identity and
/// their blend, and returns the best run. The returned frozen-noise MI is
/// never below the water-filling start's.
pub fn optimize_precoder(
    h: &ChannelMatrix,
    s: &Constellation,
    cfg: &OptimConfig,
) -> Result<(Precoder, OptimTrace)> {
    cfg.validate()?;
    let m = h.transmit_dim();
    let draws = NoiseSampler::new(cfg.seed).draw_many(h.receive_dim(), cfg.noise_samples);

    let g_wf = wf_precoder(h)?;
    let blend = normalize_matrix_power(
        &g_wf
            .matrix()
            .add(&crate::matrix::ComplexMatrix::identity(m)),
    )?;
    let starts = [g_wf, identity_precoder(m), blend];

    let mut best: Option<AscentRun> = None;
    for start in starts {
        let run = ascend(h, start, s, &draws, cfg)?;
        let better = match &best {
            None => true,
            Some(b) => run.final_nats > b.final_nats,
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("at least one ascent run");
    Ok((best.precoder, best.trace))
}
