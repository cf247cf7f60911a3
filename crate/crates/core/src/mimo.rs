//! Channel model, SVD, water-filling and the Gaussian-input rate.

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Relative tolerance on the precoder trace budget.
pub const POWER_TOL: f64 = 1e-9;

/// Relative Frobenius tolerance on SVD reconstruction.
pub const SVD_TOL: f64 = 1e-10;

/// An `N x M` channel with its nominal SNR `rho` (linear scale).
///
/// Noise is fixed at unit covariance throughout the toolkit, so SNR is carried
/// by the scale of the matrix itself; `snr` records the value the matrix was
/// generated (or scaled) for and does not enter any rate computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    matrix: ComplexMatrix,
    snr: f64,
}

impl ChannelMatrix {
    pub fn new(matrix: ComplexMatrix, snr: f64) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::DimensionMismatch("channel must be at least 1x1"));
        }
        if !snr.is_finite() || snr < 0.0 {
            return Err(Error::NonFinite("channel snr"));
        }
        Ok(Self { matrix, snr })
    }

    /// Wraps a literal matrix, taking `rho = tr(H H^H) / N` as its SNR.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let snr = matrix.gram_trace() / matrix.rows() as f64;
        Self::new(matrix, snr)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    /// Receive antennas (rows).
    pub fn receive_dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Transmit antennas / streams (columns).
    pub fn transmit_dim(&self) -> usize {
        self.matrix.cols()
    }

    /// The same channel rescaled so that `tr(H H^H) / N` equals `rho`.
    pub fn scaled_to_snr(&self, rho: f64) -> Result<Self> {
        let current = self.matrix.gram_trace() / self.receive_dim() as f64;
        if current <= 0.0 {
            return Err(Error::ZeroChannel);
        }
        ChannelMatrix::new(self.matrix.scale((rho / current).sqrt()), rho)
    }
}

/// An `M x M` precoder satisfying the trace power budget `tr(G^H G) <= M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    matrix: ComplexMatrix,
}

impl Precoder {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch("precoder must be square"));
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite("precoder entries"));
        }
        let budget = matrix.rows() as f64;
        let power = matrix.gram_trace();
        if power > budget * (1.0 + POWER_TOL) {
            return Err(Error::PowerBudgetExceeded { power, budget });
        }
        Ok(Self { matrix })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(m),
        }
    }

    pub fn zero(m: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(m, m),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `tr(G^H G)`.
    pub fn power(&self) -> f64 {
        self.matrix.gram_trace()
    }
}

/// Thin singular value decomposition `H = U diag(sigma) V^H`.
///
/// Singular values are sorted descending; the sign convention makes the first
/// entry of each `V` column (above a small modulus cutoff) real and positive,
/// so decompositions are reproducible across runs.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    /// Reconstructs `U diag(sigma) V^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let r = self.sigma.len();
        let mut scaled = self.u.clone();
        for j in 0..r {
            let col: Vec<Complex64> = self.u.column(j).iter().map(|z| z * self.sigma[j]).collect();
            scaled.set_column(j, &col);
        }
        scaled.mul(&self.v.hermitian())
    }
}

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn from_nalgebra(m: &DMatrix<Complex<f64>>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD of a complex matrix.
pub fn svd(h: &ComplexMatrix) -> Result<Svd> {
    if !h.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    let decomp = to_nalgebra(h).svd(true, true);
    let u_na = decomp.u.expect("svd requested u");
    let v_t = decomp.v_t.expect("svd requested v_t");
    let mut u = from_nalgebra(&u_na);
    let mut v = from_nalgebra(&v_t.adjoint());
    let mut sigma: Vec<f64> = decomp.singular_values.iter().copied().collect();

    // Descending order, stable under ties.
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    let u_cols: Vec<_> = order.iter().map(|&j| u.column(j)).collect();
    let v_cols: Vec<_> = order.iter().map(|&j| v.column(j)).collect();
    sigma = order.iter().map(|&j| sigma[j]).collect();
    for (j, (uc, vc)) in u_cols.iter().zip(&v_cols).enumerate() {
        u.set_column(j, uc);
        v.set_column(j, vc);
    }

    // Phase convention: first non-negligible entry of each V column made
    // real-positive, with the matching U column rotated by the same phase.
    for j in 0..sigma.len() {
        let vc = v.column(j);
        if let Some(lead) = vc.iter().find(|z| z.norm() > 1e-12) {
            let phase = lead.conj() / lead.norm();
            let vc: Vec<Complex64> = vc.iter().map(|z| z * phase).collect();
            let uc: Vec<Complex64> = u.column(j).iter().map(|z| z * phase).collect();
            v.set_column(j, &vc);
            u.set_column(j, &uc);
        }
    }

    Ok(Svd { u, sigma, v })
}

/// Water-filling over non-negative channel gains (squared singular values).
///
/// Returns per-stream powers `p_m = (1/nu - 1/gain_m)^+` with the water level
/// `nu` chosen so the powers sum to `budget`. Zero gains receive zero power.
pub fn water_fill(gains: &[f64], budget: f64) -> Result<Vec<f64>> {
    if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::NonFinite("channel gains"));
    }
    if !(budget > 0.0) {
        return Err(Error::InvalidConfig("water-filling budget must be positive"));
    }
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::AllGainsZero);
    }
    order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap());

    let mut powers = vec![0.0; gains.len()];
    // Largest active set whose water level clears the weakest included gain.
    for k in (1..=order.len()).rev() {
        let inv_sum: f64 = order[..k].iter().map(|&i| 1.0 / gains[i]).sum();
        let level = (budget + inv_sum) / k as f64;
        if level > 1.0 / gains[order[k - 1]] {
            for &i in &order[..k] {
                powers[i] = level - 1.0 / gains[i];
            }
            break;
        }
    }
    let total: f64 = powers.iter().sum();
    debug_assert!(total > 0.0);
    // Tiny rescale so the budget is met exactly, not just to rounding.
    for p in &mut powers {
        *p *= budget / total;
    }
    Ok(powers)
}

/// Capacity-achieving water-filling precoder `G_WF = V diag(sqrt(p))`.
///
/// Water-fills over squared singular values with budget `M`; when `N < M` the
/// trailing streams have no channel mode and their columns are left zero.
pub fn wf_precoder(h: &ChannelMatrix) -> Result<Precoder> {
    let m = h.transmit_dim();
    if h.matrix().frobenius_norm() == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let dec = svd(h.matrix())?;
    let gains: Vec<f64> = dec.sigma.iter().map(|s| s * s).collect();
    let powers = water_fill(&gains, m as f64)?;
    let mut g = ComplexMatrix::zeros(m, m);
    for (j, p) in powers.iter().enumerate().take(m.min(dec.sigma.len())) {
        let col: Vec<Complex64> = dec.v.column(j).iter().map(|z| z * p.sqrt()).collect();
        g.set_column(j, &col);
    }
    Precoder::new(g)
}

/// Gaussian-input mutual information `log2 det(I + H G G^H H^H)` in bits.
pub fn gaussian_mi(h: &ChannelMatrix, g: &Precoder) -> Result<f64> {
    if h.transmit_dim() != g.dim() {
        return Err(Error::DimensionMismatch("channel columns vs precoder size"));
    }
    let hg = h.matrix().mul(g.matrix());
    let dec = svd(&hg)?;
    Ok(dec.sigma.iter().map(|s| (1.0 + s * s).log2()).sum())
}

/// Rescales a precoder to use the full power budget: `tr(G^H G) = M` exactly.
pub fn normalize_power(g: &Precoder) -> Result<Precoder> {
    normalize_matrix_power(g.matrix())
}

/// Matrix-level form of [`normalize_power`], used on raw line-search iterates
/// and raw network outputs before they become feasible precoders.
pub fn normalize_matrix_power(g: &ComplexMatrix) -> Result<Precoder> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch("precoder must be square"));
    }
    let power = g.gram_trace();
    if power <= 0.0 {
        return Err(Error::ZeroPrecoder);
    }
    let scaled = g.scale((g.rows() as f64 / power).sqrt());
    Precoder::new(scaled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag(entries: &[f64]) -> ComplexMatrix {
        let n = entries.len();
        ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(entries[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    /// Independent oracle: exhaustive grid search over diagonal power splits
    /// maximizing the Gaussian rate for a diagonal channel.
    fn grid_search_two_stream(gain1: f64, gain2: f64, budget: f64) -> (f64, f64) {
        let steps = 200_000;
        let mut best = (0.0, 0.0);
        let mut best_rate = f64::NEG_INFINITY;
        for i in 0..=steps {
            let p1 = budget * i as f64 / steps as f64;
            let p2 = budget - p1;
            let rate = (1.0 + gain1 * p1).log2() + (1.0 + gain2 * p2).log2();
            if rate > best_rate {
                best_rate = rate;
                best = (p1, p2);
            }
        }
        best
    }

    #[test]
    fn svd_of_diagonal_matrix() {
        let dec = svd(&diag(&[2.0, 1.0])).unwrap();
        assert!((dec.sigma[0] - 2.0).abs() < 1e-12);
        assert!((dec.sigma[1] - 1.0).abs() < 1e-12);
        // Up to column sign, U and V are the identity; the phase convention
        // pins the sign to +1.
        assert!(dec.v.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
        assert!(dec.u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn svd_of_zero_matrix_has_zero_spectrum() {
        let dec = svd(&ComplexMatrix::zeros(2, 3)).unwrap();
        assert!(dec.sigma.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn svd_of_the_benchmark_channel_matches_characteristic_polynomial() {
        // Oracle: eigenvalues of H^T H for H = [[2,1],[1,1]] solve
        // x^2 - 7x + 1 = 0; singular values are their square roots.
        let disc = (49.0_f64 - 4.0).sqrt();
        let expected_hi = ((7.0 + disc) / 2.0_f64).sqrt();
        let expected_lo = ((7.0 - disc) / 2.0_f64).sqrt();
        let h = ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 1.0]).unwrap();
        let dec = svd(&h).unwrap();
        assert!((dec.sigma[0] - expected_hi).abs() < 1e-12, "{:?}", dec.sigma);
        assert!((dec.sigma[1] - expected_lo).abs() < 1e-12, "{:?}", dec.sigma);
        // Golden-ratio pair: sigma = (phi^2, phi^-2) / they multiply to 1.
        assert!((dec.sigma[0] - 2.618033988749895).abs() < 1e-12);
        assert!((dec.sigma[1] - 0.3819660112501051).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let rows = rng.random_range(1..=4);
            let cols = rng.random_range(1..=4);
            let m = ComplexMatrix::from_fn(rows, cols, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let dec = svd(&m).unwrap();
            let err = dec.reconstruct().max_abs_diff(&m);
            let scale = m.frobenius_norm().max(1e-30);
            assert!(err / scale <= SVD_TOL * 10.0, "relative error {}", err / scale);
            for w in dec.sigma.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn svd_rejects_non_finite() {
        let m = ComplexMatrix::from_fn(1, 1, |_, _| c(1.0, 0.0));
        let mut bad = m;
        bad[(0, 0)] = c(f64::INFINITY, 0.0);
        assert!(matches!(svd(&bad), Err(Error::NonFinite(_))));
    }

    #[test]
    fn water_fill_symmetric_gains_split_evenly() {
        let p = water_fill(&[1.0, 1.0], 2.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn water_fill_matches_grid_search_oracle() {
        let p = water_fill(&[4.0, 1.0], 2.0).unwrap();
        assert!((p[0] - 1.375).abs() < 1e-12, "{p:?}");
        assert!((p[1] - 0.625).abs() < 1e-12, "{p:?}");
        let (g1, g2) = grid_search_two_stream(4.0, 1.0, 2.0);
        assert!((p[0] - g1).abs() < 1e-4 && (p[1] - g2).abs() < 1e-4);
    }

    #[test]
    fn water_fill_drops_weak_stream() {
        let p = water_fill(&[4.0, 0.01], 1.0).unwrap();
        assert_eq!(p[1], 0.0);
        assert!((p[0] - 1.0).abs() < 1e-12);
        let (g1, g2) = grid_search_two_stream(4.0, 0.01, 1.0);
        assert!((p[0] - g1).abs() < 1e-4 && (p[1] - g2).abs() < 1e-4);
    }

    #[test]
    fn water_fill_rejects_degenerate_inputs() {
        assert!(matches!(water_fill(&[0.0, 0.0], 1.0), Err(Error::AllGainsZero)));
        assert!(matches!(
            water_fill(&[1.0], 0.0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn wf_precoder_on_diagonal_channel() {
        let h = ChannelMatrix::from_matrix(diag(&[2.0, 1.0])).unwrap();
        let g = wf_precoder(&h).unwrap();
        assert!((g.matrix()[(0, 0)].re - 1.375_f64.sqrt()).abs() < 1e-12);
        assert!((g.matrix()[(1, 1)].re - 0.625_f64.sqrt()).abs() < 1e-12);
        assert!(g.matrix()[(0, 1)].norm() < 1e-12);
        assert!((g.power() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn wf_precoder_equal_singular_values_spread_power() {
        let h = ChannelMatrix::from_matrix(diag(&[3.0, 3.0])).unwrap();
        let g = wf_precoder(&h).unwrap();
        for j in 0..2 {
            assert!((g.matrix()[(j, j)].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wf_precoder_uses_full_power() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = ComplexMatrix::from_fn(2, 2, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let h = ChannelMatrix::from_matrix(m).unwrap();
            let g = wf_precoder(&h).unwrap();
            assert!((g.power() - 2.0).abs() <= 2.0 * POWER_TOL);
        }
    }

    #[test]
    fn wf_precoder_rejects_zero_channel() {
        let h = ChannelMatrix::from_matrix(ComplexMatrix::zeros(2, 2));
        // from_matrix itself accepts a zero matrix (snr 0); wf must not.
        assert!(matches!(wf_precoder(&h.unwrap()), Err(Error::ZeroChannel)));
    }

    #[test]
    fn wf_precoder_zero_pads_when_receive_side_is_smaller() {
        let h = ChannelMatrix::from_matrix(ComplexMatrix::from_real(1, 2, &[2.0, 0.0]).unwrap())
            .unwrap();
        let g = wf_precoder(&h).unwrap();
        assert_eq!(g.dim(), 2);
        assert!((g.power() - 2.0).abs() < 1e-9);
        // Only one channel mode exists; the second column stays zero.
        assert!(g.matrix().column(1).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn gaussian_mi_closed_forms() {
        let h = ChannelMatrix::from_matrix(ComplexMatrix::identity(2)).unwrap();
        assert!((gaussian_mi(&h, &Precoder::identity(2)).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(gaussian_mi(&h, &Precoder::zero(2)).unwrap(), 0.0);

        let h = ChannelMatrix::from_matrix(diag(&[2.0, 1.0])).unwrap();
        let mi = gaussian_mi(&h, &Precoder::identity(2)).unwrap();
        assert!((mi - 10.0_f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mi_monotone_under_channel_scaling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let m = ComplexMatrix::from_fn(2, 2, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let h = ChannelMatrix::from_matrix(m.clone()).unwrap();
            let h2 = ChannelMatrix::from_matrix(m.scale(1.7)).unwrap();
            let g = Precoder::identity(2);
            assert!(gaussian_mi(&h2, &g).unwrap() >= gaussian_mi(&h, &g).unwrap() - 1e-12);
        }
    }

    #[test]
    fn normalize_power_examples() {
        let g = Precoder::identity(2);
        let n = normalize_power(&g).unwrap();
        assert!(n.matrix().max_abs_diff(g.matrix()) < 1e-15);

        // trace 8 scaled down to the budget of 2
        let m = ComplexMatrix::identity(2).scale(2.0);
        let n = normalize_matrix_power(&m).unwrap();
        assert!((n.power() - 2.0).abs() < 1e-12);

        let m = ComplexMatrix::from_real(1, 1, &[0.5]).unwrap();
        let n = normalize_matrix_power(&m).unwrap();
        assert!((n.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);

        assert!(matches!(
            normalize_matrix_power(&ComplexMatrix::zeros(2, 2)),
            Err(Error::ZeroPrecoder)
        ));
    }

    #[test]
    fn precoder_rejects_power_above_budget() {
        let m = ComplexMatrix::identity(2).scale(1.1);
        assert!(matches!(
            Precoder::new(m),
            Err(Error::PowerBudgetExceeded { .. })
        ));
    }
}
