//! Shared fixtures for the criterion benchmarks.

use fapre_core::{
    make_constellation, ChannelMatrix, ComplexMatrix, Constellation, ConstellationKind,
};

/// The 2x2 benchmark channel at a mid-range SNR.
pub fn benchmark_channel() -> ChannelMatrix {
    let base = ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 1.0]).unwrap();
    ChannelMatrix::from_matrix(base)
        .unwrap()
        .scaled_to_snr(10.0)
        .unwrap()
}

pub fn bpsk() -> Constellation {
    make_constellation(ConstellationKind::Bpsk)
}
