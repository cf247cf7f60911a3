//! Signal constellations with unit average energy.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// The constellations the toolkit knows how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationKind {
    Bpsk,
    Qpsk,
    Qam16,
}

impl FromStr for ConstellationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" => Ok(Self::Qpsk),
            "qam16" | "16qam" | "16-qam" => Ok(Self::Qam16),
            other => Err(Error::UnknownConstellation(other.to_string())),
        }
    }
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Bpsk => "bpsk",
            Self::Qpsk => "qpsk",
            Self::Qam16 => "qam16",
        };
        f.write_str(s)
    }
}

/// A finite symbol set with zero mean and unit average power, so that
/// `E{x} = 0` and `E{x x^H} = I` hold for i.i.d. uniform symbol vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    points: Vec<Complex64>,
    bits_per_symbol: u32,
}

impl Constellation {
    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }
}

/// Builds a named constellation. BPSK is the exact set `{+1, -1}`; QPSK and
/// 16-QAM are Gray-ordered grids scaled to unit average power.
pub fn make_constellation(kind: ConstellationKind) -> Constellation {
    let points = match kind {
        ConstellationKind::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        ConstellationKind::Qpsk => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            // Gray order over (I, Q) sign bits: 00, 01, 11, 10.
            vec![
                Complex64::new(s, s),
                Complex64::new(-s, s),
                Complex64::new(-s, -s),
                Complex64::new(s, -s),
            ]
        }
        ConstellationKind::Qam16 => {
            // 2-bit Gray code per axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
            const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
            fn gray_level(bits: usize) -> f64 {
                match bits {
                    0b00 => LEVELS[0],
                    0b01 => LEVELS[1],
                    0b11 => LEVELS[2],
                    _ => LEVELS[3],
                }
            }
            let scale = 1.0 / 10.0_f64.sqrt();
            (0..16)
                .map(|s| {
                    let re = gray_level((s >> 2) & 0b11) * scale;
                    let im = gray_level(s & 0b11) * scale;
                    Complex64::new(re, im)
                })
                .collect()
        }
    };
    let bits_per_symbol = points.len().ilog2();
    Constellation {
        kind,
        points,
        bits_per_symbol,
    }
}

/// String-keyed variant of [`make_constellation`]; unknown names are a named
/// error rather than a panic, as the CLI feeds user input through here.
pub fn make_constellation_named(name: &str) -> Result<Constellation> {
    Ok(make_constellation(name.parse()?))
}
