//! Circular (ECFP-style) fingerprints and a logistic-regression baseline on them.

mod baseline;
mod circular;

pub use baseline::{train_logistic, BaselineError, LogisticConfig, LogisticModel};
pub use circular::{
    circular_fingerprint, circular_identifiers, fnv1a64, write_fingerprint_csv, Fingerprint, FingerprintError, DEFAULT_NBITS, DEFAULT_RADIUS,
};
