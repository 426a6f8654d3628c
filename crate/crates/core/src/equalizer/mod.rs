//! Adaptive equalizers operating on sliding tap windows of the received
//! signal: kernel LMS and the linear LMS / DFE-LMS baselines.

pub mod dfe;
pub mod klms;
pub mod lms;
pub mod tap;

pub use dfe::{dfe_equalize, dfe_train, DfeMode, DfeParams, DfeState, DfeStep, DfeTraining};
pub use klms::{klms_train, KlmsParams, KlmsState, KlmsTraining};
pub use lms::{lms_train, LmsParams, LmsState, LmsTraining};
pub use tap::{make_tap_vectors, TapVectorizer};
