//! Kernel adaptive filtering for PAM4 direct-detection links.
//!
//! The crate provides a kernel LMS (KLMS) equalizer built on a Gaussian
//! kernel, linear LMS and DFE-LMS baselines, a seeded Wiener-Hammerstein
//! channel simulator, and the experiment drivers used to compare them
//! (BER versus taps, MSE learning curves, multi-channel FEC verdicts and
//! per-iteration cost).
//!
//! ```
//! use kaf_core::prelude::*;
//!
//! let bits = generate_bits(1, 4_000).unwrap();
//! let tx = bits_to_pam4(&bits).unwrap();
//! let rx = simulate_channel(&NONLINEAR_REFERENCE.config(7), &tx).unwrap();
//! let params = KlmsParams { train_len: 1_000, ..KlmsParams::default() };
//! let v = TapVectorizer::centered(params.n_taps).unwrap();
//! let trained = klms_train(&rx, &tx, params, &v).unwrap();
//! assert_eq!(trained.state.len(), 1_000);
//! ```

pub mod channel;
pub mod config;
pub mod equalizer;
pub mod error;
pub mod experiment;
pub mod format;
pub mod kernel;
pub mod pam;
pub mod report;

pub use error::{Error, FormatError, Result};

pub mod prelude {
    pub use crate::channel::{
        add_awgn, apply_fir, apply_nonlinearity, preset_by_name, simulate_channel, ChannelConfig, ChannelPreset,
        LINEAR_MILD, NOISELESS, NONLINEAR_REFERENCE,
    };
    pub use crate::equalizer::*;
    pub use crate::error::{Error, Result};
    pub use crate::experiment::{ExperimentConfig, ExperimentReport};
    pub use crate::kernel::{kernel_eval, kernel_eval_batch, GaussianKernel, InputVector, MercerKernel};
    pub use crate::pam::{
        bit_error_rate, bits_to_pam4, fec_verdict, generate_bits, pam4_to_bits, slice_pam4, BitSequence, FecVerdict,
        SymbolSequence,
    };
}
