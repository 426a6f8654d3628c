//! Binary waveform and trained-state files. All integers and reals are
//! little-endian.
//!
//! Waveform (`KAF1`):
//!
//! ```text
//! 0   magic   "KAF1"
//! 4   version u32 = 1
//! 8   count   u64
//! 16  samples count × f64
//! ```
//!
//! Trained state (`KAFS`): magic, version u32 = 1, kind u32, then a
//! kind-specific body.
//!
//! ```text
//! kind 0 (KLMS): n_taps u64, center_offset u64, mu f64, alpha f64,
//!                train_len u64, entries u64,
//!                entries × n_taps f64 dictionary (row-major),
//!                entries × f64 coefficients
//! kind 1 (LMS):  n_taps u64, center_offset u64, mu f64, n_taps × f64 weights
//! kind 2 (DFE):  n_fft u64, center_offset u64, n_fbt u64, mu f64,
//!                n_fft × f64 feed-forward, n_fbt × f64 feedback weights
//! ```

use std::path::Path;

use crate::equalizer::{DfeState, KlmsParams, KlmsState, LmsState, TapVectorizer};
use crate::error::{Error, FormatError, Result};

pub const WAVEFORM_MAGIC: [u8; 4] = *b"KAF1";
pub const STATE_MAGIC: [u8; 4] = *b"KAFS";
pub const FORMAT_VERSION: u32 = 1;
const WAVEFORM_HEADER: u64 = 16;

pub fn encode_waveform(samples: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(WAVEFORM_HEADER as usize + 8 * samples.len());
    out.extend_from_slice(&WAVEFORM_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn decode_waveform(bytes: &[u8]) -> std::result::Result<Vec<f64>, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(WAVEFORM_MAGIC)?;
    r.version()?;
    let count = r.u64()?;
    let expected = count
        .checked_mul(8)
        .and_then(|b| b.checked_add(WAVEFORM_HEADER))
        .ok_or_else(|| FormatError::Corrupt(format!("sample count {count} overflows")))?;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(FormatError::Truncated { expected, found });
    }
    if found > expected {
        return Err(FormatError::Trailing { expected, found });
    }
    (0..count).map(|_| r.f64()).collect()
}

pub fn write_waveform(path: impl AsRef<Path>, samples: &[f64]) -> Result<()> {
    std::fs::write(path, encode_waveform(samples))?;
    Ok(())
}

pub fn read_waveform(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path)?;
    Ok(decode_waveform(&bytes)?)
}

/// A persisted equalizer together with the tap layout it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedEqualizer {
    Klms { state: KlmsState, taps: TapVectorizer },
    Lms { state: LmsState, taps: TapVectorizer },
    Dfe { state: DfeState, taps: TapVectorizer },
}

impl TrainedEqualizer {
    pub fn taps(&self) -> &TapVectorizer {
        match self {
            TrainedEqualizer::Klms { taps, .. }
            | TrainedEqualizer::Lms { taps, .. }
            | TrainedEqualizer::Dfe { taps, .. } => taps,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedEqualizer::Klms { .. } => "klms",
            TrainedEqualizer::Lms { .. } => "lms",
            TrainedEqualizer::Dfe { .. } => "dfe",
        }
    }
}

pub fn encode_state(eq: &TrainedEqualizer) -> Vec<u8> {
    let mut w = Vec::new();
    w.extend_from_slice(&STATE_MAGIC);
    w.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let u = |w: &mut Vec<u8>, v: u64| w.extend_from_slice(&v.to_le_bytes());
    let f = |w: &mut Vec<u8>, v: f64| w.extend_from_slice(&v.to_le_bytes());
    match eq {
        TrainedEqualizer::Klms { state, taps } => {
            w.extend_from_slice(&0u32.to_le_bytes());
            let p = state.params();
            u(&mut w, p.n_taps as u64);
            u(&mut w, taps.center_offset() as u64);
            f(&mut w, p.mu);
            f(&mut w, p.alpha);
            u(&mut w, p.train_len as u64);
            u(&mut w, state.len() as u64);
            state.dictionary().iter().for_each(|&v| f(&mut w, v));
            state.coefficients().iter().for_each(|&v| f(&mut w, v));
        }
        TrainedEqualizer::Lms { state, taps } => {
            w.extend_from_slice(&1u32.to_le_bytes());
            u(&mut w, state.n_taps() as u64);
            u(&mut w, taps.center_offset() as u64);
            f(&mut w, state.mu());
            state.weights().iter().for_each(|&v| f(&mut w, v));
        }
        TrainedEqualizer::Dfe { state, taps } => {
            w.extend_from_slice(&2u32.to_le_bytes());
            u(&mut w, state.n_fft() as u64);
            u(&mut w, taps.center_offset() as u64);
            u(&mut w, state.n_fbt() as u64);
            f(&mut w, state.mu());
            state.ff_weights().iter().for_each(|&v| f(&mut w, v));
            state.fb_weights().iter().for_each(|&v| f(&mut w, v));
        }
    }
    w
}

fn corrupt(e: Error) -> FormatError {
    FormatError::Corrupt(e.to_string())
}

pub fn decode_state(bytes: &[u8]) -> std::result::Result<TrainedEqualizer, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(STATE_MAGIC)?;
    r.version()?;
    let kind = r.u32()?;
    let eq = match kind {
        0 => {
            let n_taps = r.usize()?;
            let offset = r.usize()?;
            let mu = r.f64()?;
            let alpha = r.f64()?;
            let train_len = r.usize()?;
            let entries = r.usize()?;
            let dict_len =
                entries.checked_mul(n_taps).ok_or_else(|| FormatError::Corrupt("dictionary size overflows".into()))?;
            let dictionary = r.f64s(dict_len)?;
            let coefficients = r.f64s(entries)?;
            let params = KlmsParams { mu, alpha, n_taps, train_len };
            TrainedEqualizer::Klms {
                state: KlmsState::from_parts(params, dictionary, coefficients).map_err(corrupt)?,
                taps: TapVectorizer::new(n_taps, offset).map_err(corrupt)?,
            }
        }
        1 => {
            let n_taps = r.usize()?;
            let offset = r.usize()?;
            let mu = r.f64()?;
            let weights = r.f64s(n_taps)?;
            TrainedEqualizer::Lms {
                state: LmsState::from_weights(weights, mu).map_err(corrupt)?,
                taps: TapVectorizer::new(n_taps, offset).map_err(corrupt)?,
            }
        }
        2 => {
            let n_fft = r.usize()?;
            let offset = r.usize()?;
            let n_fbt = r.usize()?;
            let mu = r.f64()?;
            let ff = r.f64s(n_fft)?;
            let fb = r.f64s(n_fbt)?;
            TrainedEqualizer::Dfe {
                state: DfeState::from_weights(ff, fb, mu).map_err(corrupt)?,
                taps: TapVectorizer::new(n_fft, offset).map_err(corrupt)?,
            }
        }
        other => return Err(FormatError::UnknownKind(other)),
    };
    r.finish()?;
    Ok(eq)
}

pub fn write_state(path: impl AsRef<Path>, eq: &TrainedEqualizer) -> Result<()> {
    std::fs::write(path, encode_state(eq))?;
    Ok(())
}

pub fn read_state(path: impl AsRef<Path>) -> Result<TrainedEqualizer> {
    let bytes = std::fs::read(path)?;
    Ok(decode_state(&bytes)?)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(FormatError::Truncated {
            expected: (self.pos as u64).saturating_add(n as u64),
            found: self.bytes.len() as u64,
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn magic(&mut self, expected: [u8; 4]) -> std::result::Result<(), FormatError> {
        let found: [u8; 4] = self.take(4)?.try_into().expect("4 bytes");
        if found != expected {
            return Err(FormatError::BadMagic { expected, found });
        }
        Ok(())
    }

    fn version(&mut self) -> std::result::Result<(), FormatError> {
        match self.u32()? {
            FORMAT_VERSION => Ok(()),
            v => Err(FormatError::Version(v)),
        }
    }

    fn u32(&mut self) -> std::result::Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> std::result::Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> std::result::Result<usize, FormatError> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| FormatError::Corrupt(format!("length {v} does not fit in memory")))
    }

    fn f64(&mut self) -> std::result::Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> std::result::Result<Vec<f64>, FormatError> {
        let bytes = n.checked_mul(8).ok_or_else(|| FormatError::Corrupt("array size overflows".into()))?;
        let raw = self.take(bytes)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    fn finish(&self) -> std::result::Result<(), FormatError> {
        if self.pos != self.bytes.len() {
            return Err(FormatError::Trailing { expected: self.pos as u64, found: self.bytes.len() as u64 });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_sample_file() {
        let bytes = encode_waveform(&[1.0, -0.5]);
        assert_eq!(bytes.len(), 32);
        assert_eq!(&bytes[..4], b"KAF1");
        assert_eq!(decode_waveform(&bytes).unwrap(), vec![1.0, -0.5]);
    }

    #[test]
    fn waveform_errors() {
        let mut bytes = encode_waveform(&[1.0]);
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_waveform(&bytes), Err(FormatError::BadMagic { .. })));

        let mut bytes = encode_waveform(&[1.0]);
        bytes[4] = 2;
        assert_eq!(decode_waveform(&bytes), Err(FormatError::Version(2)));

        let mut bytes = encode_waveform(&[1.0, 2.0, 3.0]);
        bytes[8..16].copy_from_slice(&5u64.to_le_bytes());
        assert_eq!(decode_waveform(&bytes), Err(FormatError::Truncated { expected: 56, found: 40 }));

        let mut bytes = encode_waveform(&[1.0]);
        bytes.push(0);
        assert!(matches!(decode_waveform(&bytes), Err(FormatError::Trailing { .. })));
        assert!(matches!(decode_waveform(b"KA"), Err(FormatError::Truncated { .. })));
    }

    #[test]
    fn state_round_trips() {
        let params = KlmsParams { mu: 0.5, alpha: 0.1, n_taps: 2, train_len: 2 };
        let klms = TrainedEqualizer::Klms {
            state: KlmsState::from_parts(params, vec![1.0, 2.0, -3.0, 0.5], vec![0.25, -0.125]).unwrap(),
            taps: TapVectorizer::centered(2).unwrap(),
        };
        let lms = TrainedEqualizer::Lms {
            state: LmsState::from_weights(vec![0.1, 0.9, -0.2], 1e-3).unwrap(),
            taps: TapVectorizer::new(3, 0).unwrap(),
        };
        let dfe = TrainedEqualizer::Dfe {
            state: DfeState::from_weights(vec![0.1, 0.9], vec![0.3], 1e-4).unwrap(),
            taps: TapVectorizer::centered(2).unwrap(),
        };
        for eq in [klms, lms, dfe] {
            let bytes = encode_state(&eq);
            assert_eq!(&bytes[..4], b"KAFS");
            assert_eq!(decode_state(&bytes).unwrap(), eq);
            assert!(decode_state(&bytes[..bytes.len() - 1]).is_err());
        }
        let mut bad = encode_state(&TrainedEqualizer::Lms {
            state: LmsState::new(1, 0.1).unwrap(),
            taps: TapVectorizer::centered(1).unwrap(),
        });
        bad[8] = 9;
        assert_eq!(decode_state(&bad), Err(FormatError::UnknownKind(9)));
        assert!(matches!(decode_state(&encode_waveform(&[1.0])), Err(FormatError::BadMagic { .. })));
    }

    fn any_bits_f64() -> impl Strategy<Value = f64> {
        prop_oneof![
            any::<u64>().prop_map(f64::from_bits),
            Just(-0.0),
            Just(f64::MIN_POSITIVE / 4.0),
            Just(f64::MAX),
            Just(f64::INFINITY),
        ]
    }

    proptest! {
        #[test]
        fn waveform_bit_exact(samples in prop::collection::vec(any_bits_f64(), 0..64)) {
            let back = decode_waveform(&encode_waveform(&samples)).unwrap();
            prop_assert_eq!(back.len(), samples.len());
            for (a, b) in back.iter().zip(&samples) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
