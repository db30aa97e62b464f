//! Batch front-end for the `nbwalk` library: graph ingestion, configured
//! verification suites, Monte Carlo experiments, and machine-readable
//! reports.
//!
//! The binary is a thin wrapper around [`run`]; everything observable lives
//! here so integration tests can drive the same code paths in process.
//!
//! Determinism contract: identical configuration and seed produce
//! byte-identical JSON and CSV output. Reports therefore contain no
//! timestamps and no machine identifiers, and every map is ordered. Wall
//! times are attached only when explicitly requested (`--timing`), which
//! opts that report out of byte reproducibility.
//!
//! All randomness flows from one 64-bit root seed. Consumers never share a
//! generator: each takes the stream derived by [`sub_seed`] from a string
//! label naming the consumer (subcommand and role, for example
//! `"walk/trial"`) and a replica index, so trials can run in any order, or
//! in parallel, without changing their draws.

pub mod config;
pub mod experiments;
pub mod report;
pub mod run;

/// 64-bit FNV-1a. Stable, dependency-free content fingerprint used both for
/// provenance stamps on input files and for folding seed labels.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer, the standard 64-bit avalanche.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed for one consumer from the root seed.
///
/// The scheme is `splitmix64(splitmix64(root ^ fnv1a64(label)) + replica)`:
/// the label separates purposes, the replica index separates repetitions of
/// the same purpose, and the outer finalizer decorrelates neighboring
/// replicas. Every random component of the tool seeds its own
/// `ChaCha8Rng::seed_from_u64` with one of these values.
pub fn sub_seed(root: u64, label: &str, replica: u64) -> u64 {
    splitmix64(splitmix64(root ^ fnv1a64(label.as_bytes())).wrapping_add(replica))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_derivation_separates_labels_and_replicas() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        let s = sub_seed(7, "walk/trial", 0);
        assert_eq!(s, sub_seed(7, "walk/trial", 0));
        assert_ne!(s, sub_seed(7, "walk/trial", 1));
        assert_ne!(s, sub_seed(7, "capacity/flow", 0));
        assert_ne!(s, sub_seed(8, "walk/trial", 0));
    }
}
