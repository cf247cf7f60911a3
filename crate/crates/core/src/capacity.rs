//! Constellation-constrained mutual information, the MMSE matrix, and the
//! MI gradient.
//!
//! The MI of a finite-alphabet MIMO link has no closed form; it is estimated
//! by enumerating all `|S|^M` transmit vectors exactly and averaging over a
//! finite set of noise draws. All internals are in nats (the Gaussian density
//! demands the natural log); conversion to bits happens once at the output.
//!
//! Determinism contract: given the same noise draws, every estimate is
//! bit-identical — the reduction runs sequentially over noise draws with an
//! inner loop over symbol vectors, and the same draws are reused across all
//! transmit hypotheses (common random numbers).

use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::mimo::{ChannelMatrix, Precoder};
use crate::quadrature::gauss_hermite;
use crate::rng::NoiseSampler;

/// Guard on `|S|^M`: symbol vectors are enumerated exhaustively.
pub const MAX_SYMBOL_VECTORS: u64 = 1 << 16;

/// A Monte-Carlo mutual-information estimate in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    /// Estimated mutual information, clamped at zero (MI is non-negative;
    /// sampling noise can push a near-zero estimate slightly negative).
    pub bits: f64,
    /// Standard error of the mean over noise draws, in bits.
    pub std_error: f64,
    /// Number of noise draws averaged.
    pub noise_samples: usize,
}

/// The MMSE matrix `E = E{(x - xhat)(x - xhat)^H}`, Hermitian by
/// construction (symmetrized after accumulation).
#[derive(Debug, Clone, PartialEq)]
pub struct MmseMatrix {
    matrix: ComplexMatrix,
}

impl MmseMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// All `|S|^M` symbol vectors in a fixed enumeration order (coordinate `M-1`
/// varies fastest).
fn symbol_vectors(s: &Constellation, m: usize) -> Vec<Vec<Complex64>> {
    let size = s.size();
    let count = size.pow(m as u32);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        let mut r = k;
        for j in (0..m).rev() {
            v[j] = s.points()[r % size];
            r /= size;
        }
        out.push(v);
    }
    out
}

fn check_guard(s: &Constellation, m: usize) -> Result<usize> {
    let symbols = (s.size() as u128).pow(m as u32);
    if symbols > MAX_SYMBOL_VECTORS as u128 {
        return Err(Error::AlphabetTooLarge {
            symbols,
            limit: MAX_SYMBOL_VECTORS,
        });
    }
    Ok(symbols as usize)
}

struct Setup {
    /// `H G x_k` for every symbol vector, receiver-side images.
    images: Vec<Vec<Complex64>>,
    symbols: Vec<Vec<Complex64>>,
    n_rx: usize,
}

fn prepare(h: &ChannelMatrix, g: &Precoder, s: &Constellation) -> Result<Setup> {
    if h.transmit_dim() != g.dim() {
        return Err(Error::DimensionMismatch("channel columns vs precoder size"));
    }
    check_guard(s, g.dim())?;
    let hg = h.matrix().mul(g.matrix());
    let symbols = symbol_vectors(s, g.dim());
    let images = symbols.iter().map(|x| hg.mul_vec(x)).collect();
    Ok(Setup {
        images,
        symbols,
        n_rx: h.receive_dim(),
    })
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Deterministic MI estimate from explicit noise draws (in nats, unclamped,
/// with its standard error). Shared by the public estimator, the optimizer's
/// frozen-noise line search, and common-random-number comparisons.
pub(crate) fn mi_nats_with_draws(
    h: &ChannelMatrix,
    g: &Precoder,
    s: &Constellation,
    draws: &[Vec<Complex64>],
) -> Result<(f64, f64)> {
    if draws.is_empty() {
        return Err(Error::NoNoiseSamples);
    }
    let setup = prepare(h, g, s)?;
    let k_total = setup.images.len();
    let ln_k = (k_total as f64).ln();

    let mut per_draw = Vec::with_capacity(draws.len());
    let mut exps = vec![0.0_f64; k_total];
    for noise in draws {
        if noise.len() != setup.n_rx {
            return Err(Error::DimensionMismatch("noise vector vs receive antennas"));
        }
        let noise_power = norm_sqr(noise);
        let mut acc = 0.0;
        for m_idx in 0..k_total {
            // a_k = |n|^2 - |H G (x_m - x_k) + n|^2; the k = m term is exactly
            // zero, making the G = 0 estimate exactly zero bits.
            let mut a_max = f64::NEG_INFINITY;
            for (k_idx, exp_slot) in exps.iter_mut().enumerate() {
                let mut d = 0.0;
                for r in 0..setup.n_rx {
                    let u = setup.images[m_idx][r] - setup.images[k_idx][r] + noise[r];
                    d += u.norm_sqr();
                }
                let a = noise_power - d;
                *exp_slot = a;
                if a > a_max {
                    a_max = a;
                }
            }
            let sum: f64 = exps.iter().map(|a| (a - a_max).exp()).sum();
            let lse = a_max + sum.ln();
            acc += ln_k - lse;
        }
        per_draw.push(acc / k_total as f64);
    }

    let t = per_draw.len() as f64;
    let mean = per_draw.iter().sum::<f64>() / t;
    let std_err = if per_draw.len() > 1 {
        let var = per_draw.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (t - 1.0);
        (var / t).sqrt()
    } else {
        0.0
    };
    Ok((mean, std_err))
}

/// MI estimate from explicit noise draws, in bits.
pub fn mi_with_draws(
    h: &ChannelMatrix,
    g: &Precoder,
    s: &Constellation,
    draws: &[Vec<Complex64>],
) -> Result<MiEstimate> {
    let (nats, se_nats) = mi_nats_with_draws(h, g, s, draws)?;
    Ok(MiEstimate {
        bits: (nats / std::f64::consts::LN_2).max(0.0),
        std_error: se_nats / std::f64::consts::LN_2,
        noise_samples: draws.len(),
    })
}

/// Monte-Carlo estimate of the finite-alphabet mutual information, in bits.
///
/// The inner double sum over symbol vectors is exact; only the expectation
/// over the noise is sampled (`t_n` draws from `sampler`).
pub fn mi_finite_alphabet(
    h: &ChannelMatrix,
    g: &Precoder,
    s: &Constellation,
    t_n: usize,
    sampler: &mut NoiseSampler,
) -> Result<MiEstimate> {
    if t_n == 0 {
        return Err(Error::NoNoiseSamples);
    }
    check_guard(s, g.dim())?;
    let draws = sampler.draw_many(h.receive_dim(), t_n);
    mi_with_draws(h, g, s, &draws)
}

/// MMSE matrix estimate from explicit noise draws.
pub fn mmse_with_draws(
    h: &ChannelMatrix,
    g: &Precoder,
    s: &Constellation,
    draws: &[Vec<Complex64>],
) -> Result<MmseMatrix> {
    if draws.is_empty() {
        return Err(Error::NoNoiseSamples);
    }
    let setup = prepare(h, g, s)?;
    let k_total = setup.images.len();
    let m_dim = g.dim();

    let mut acc = ComplexMatrix::zeros(m_dim, m_dim);
    let mut logits = vec![0.0_f64; k_total];
    let mut weights = vec![0.0_f64; k_total];
    let mut xhat = vec![Complex64::new(0.0, 0.0); m_dim];
    for noise in draws {
        if noise.len() != setup.n_rx {
            return Err(Error::DimensionMismatch("noise vector vs receive antennas"));
        }
        for m_idx in 0..k_total {
            // y = H G x_m + n; posterior weights w_k over the transmit
            // hypotheses, softmax of -|y - H G x_k|^2.
            let mut a_max = f64::NEG_INFINITY;
            for (k_idx, slot) in logits.iter_mut().enumerate() {
                let mut d = 0.0;
                for r in 0..setup.n_rx {
                    let u = setup.images[m_idx][r] - setup.images[k_idx][r] + noise[r];
                    d += u.norm_sqr();
                }
                *slot = -d;
                if -d > a_max {
                    a_max = -d;
                }
            }
            let mut sum = 0.0;
            for (w, a) in weights.iter_mut().zip(&logits) {
                *w = (a - a_max).exp();
                sum += *w;
            }
            for x in xhat.iter_mut() {
                *x = Complex64::new(0.0, 0.0);
            }
            for (k_idx, w) in weights.iter().enumerate() {
                let wk = w / sum;
                for (x, s_k) in xhat.iter_mut().zip(&setup.symbols[k_idx]) {
                    *x += s_k * wk;
                }
            }
            for i in 0..m_dim {
                let ei = setup.symbols[m_idx][i] - xhat[i];
                for j in 0..m_dim {
                    let ej = setup.symbols[m_idx][j] - xhat[j];
                    acc[(i, j)] += ei * ej.conj();
                }
            }
        }
    }
    let scale = 1.0 / (k_total as f64 * draws.len() as f64);
    let raw = acc.scale(scale);
    // Hermitian symmetrization removes accumulation asymmetry.
    let herm = raw.add(&raw.hermitian()).scale(0.5);
    Ok(MmseMatrix { matrix: herm })
}

/// Monte-Carlo estimate of the MMSE matrix `E{(x - xhat)(x - xhat)^H}`.
pub fn mmse_matrix(
    h: &ChannelMatrix,
    g: &Precoder,
    s: &Constellation,
    t_n: usize,
    sampler: &mut NoiseSampler,
) -> Result<MmseMatrix> {
    if t_n == 0 {
        return Err(Error::NoNoiseSamples);
    }
    check_guard(s, g.dim())?;
    let draws = sampler.draw_many(h.receive_dim(), t_n);
    mmse_with_draws(h, g, s, &draws)
}

/// Gradient of the mutual information (in nats) with respect to the conjugate
/// precoder: `H^H H G E`. The directional derivative along a perturbation `D`
/// is `2 Re tr(grad^H D)`.
pub fn mi_gradient(h: &ChannelMatrix, g: &Precoder, e: &MmseMatrix) -> Result<ComplexMatrix> {
    if h.transmit_dim() != g.dim() || e.dim() != g.dim() {
        return Err(Error::DimensionMismatch("gradient factor shapes"));
    }
    let ge = g.matrix().mul(e.matrix());
    let hge = h.matrix().mul(&ge);
    Ok(h.matrix().hermitian().mul(&hge))
}

/// Deterministic evaluation of the scalar-channel (`M = N = 1`) MI in bits by
/// tensor-product Gauss-Hermite quadrature over the real and imaginary noise
/// parts. Serves as the independent oracle for the Monte-Carlo estimator.
pub fn mi_scalar_quadrature(
    h: Complex64,
    g: Complex64,
    s: &Constellation,
    nodes: usize,
) -> Result<f64> {
    if nodes < 8 {
        return Err(Error::InvalidConfig("at least 8 quadrature nodes"));
    }
    let (t, w) = gauss_hermite(nodes);
    let hg = h * g;
    let size = s.size();
    let ln_s = (size as f64).ln();
    let inv_pi = 1.0 / std::f64::consts::PI;

    let mut total = 0.0;
    let mut exps = vec![0.0_f64; size];
    for m_idx in 0..size {
        let mut acc = 0.0;
        for (ti, wi) in t.iter().zip(&w) {
            for (tj, wj) in t.iter().zip(&w) {
                let n = Complex64::new(*ti, *tj);
                let noise_power = n.norm_sqr();
                let mut a_max = f64::NEG_INFINITY;
                for (k_idx, slot) in exps.iter_mut().enumerate() {
                    let u = hg * (s.points()[m_idx] - s.points()[k_idx]) + n;
                    let a = noise_power - u.norm_sqr();
                    *slot = a;
                    if a > a_max {
                        a_max = a;
                    }
                }
                let sum: f64 = exps.iter().map(|a| (a - a_max).exp()).sum();
                acc += wi * wj * (a_max + sum.ln());
            }
        }
        total += acc * inv_pi;
    }
    let nats = ln_s - total / size as f64;
    Ok(nats / std::f64::consts::LN_2)
}

/// Scalar-channel MMSE by the same quadrature; oracle counterpart of
/// [`mmse_matrix`] for `M = N = 1`.
pub fn mmse_scalar_quadrature(
    h: Complex64,
    g: Complex64,
    s: &Constellation,
    nodes: usize,
) -> Result<f64> {
    if nodes < 8 {
        return Err(Error::InvalidConfig("at least 8 quadrature nodes"));
    }
    let (t, w) = gauss_hermite(nodes);
    let hg = h * g;
    let size = s.size();
    let inv_pi = 1.0 / std::f64::consts::PI;

    let mut total = 0.0;
    let mut logits = vec![0.0_f64; size];
    for m_idx in 0..size {
        let mut acc = 0.0;
        for (ti, wi) in t.iter().zip(&w) {
            for (tj, wj) in t.iter().zip(&w) {
                let n = Complex64::new(*ti, *tj);
                let y = hg * s.points()[m_idx] + n;
                let mut a_max = f64::NEG_INFINITY;
                for (k_idx, slot) in logits.iter_mut().enumerate() {
                    let a = -(y - hg * s.points()[k_idx]).norm_sqr();
                    *slot = a;
                    if a > a_max {
                        a_max = a;
                    }
                }
                let mut sum = 0.0;
                let mut xhat = Complex64::new(0.0, 0.0);
                for (k_idx, a) in logits.iter().enumerate() {
                    let wgt = (a - a_max).exp();
                    sum += wgt;
                    xhat += s.points()[k_idx] * wgt;
                }
                xhat /= sum;
                acc += wi * wj * (s.points()[m_idx] - xhat).norm_sqr();
            }
        }
        total += acc * inv_pi;
    }
    Ok(total / size as f64)
}
