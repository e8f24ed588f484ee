//! Built-in three-particle experiments.
//!
//! Particle 0 is the observed system, tied to the origin by an external spring;
//! particles 1 and 2 form the environment. `weak` and `strong` differ only in
//! the system-environment springs (a factor of ten). `decoupled` removes them.

use crate::model::{CatSpec, OscillatorNetwork};

pub const MASSES: [f64; 3] = [1.5, 1.0, 1.0];
pub const EXTERNAL_K: f64 = 2.5;
pub const OFFSETS: [f64; 3] = [-5.0, 6.0, 7.5];
pub const HBAR: f64 = 1.0;
pub const DEFAULT_SIGMA: f64 = 0.5;

pub const WEAK_K12: f64 = 0.01442;
pub const WEAK_K31: f64 = 0.01732;
pub const STRONG_K12: f64 = 0.1442;
pub const STRONG_K31: f64 = 0.1732;
pub const K23: f64 = 1.02236;

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 3] = ["weak", "strong", "decoupled"];

fn three_body(k12: f64, k31: f64) -> (OscillatorNetwork, CatSpec) {
    let net = OscillatorNetwork::unconnected(MASSES.to_vec())
        .with_external(0, EXTERNAL_K)
        .with_spring(0, 1, k12)
        .with_spring(1, 2, K23)
        .with_spring(2, 0, k31);
    let cat = CatSpec {
        d: OFFSETS.to_vec(),
        sigma: vec![DEFAULT_SIGMA; 3],
        hbar: HBAR,
    };
    (net, cat)
}

pub fn weak() -> (OscillatorNetwork, CatSpec) {
    three_body(WEAK_K12, WEAK_K31)
}

pub fn strong() -> (OscillatorNetwork, CatSpec) {
    three_body(STRONG_K12, STRONG_K31)
}

/// The weak/strong network with the system-environment springs removed.
pub fn decoupled() -> (OscillatorNetwork, CatSpec) {
    three_body(0.0, 0.0)
}

pub fn by_name(name: &str) -> Option<(OscillatorNetwork, CatSpec)> {
    match name {
        "weak" => Some(weak()),
        "strong" => Some(strong()),
        "decoupled" => Some(decoupled()),
        _ => None,
    }
}

/// One-line description used by the `presets` subcommand.
pub fn describe(name: &str) -> Option<String> {
    let (k12, k31) = match name {
        "weak" => (WEAK_K12, WEAK_K31),
        "strong" => (STRONG_K12, STRONG_K31),
        "decoupled" => (0.0, 0.0),
        _ => return None,
    };
    Some(format!(
        "m = {MASSES:?}, K = {EXTERNAL_K}, K12 = {k12}, K23 = {K23}, K31 = {k31}, d = {OFFSETS:?}, hbar = {HBAR}"
    ))
}

/// The twelve snapshot times `0.505 + 0.5 k`.
pub fn snapshot_times() -> Vec<f64> {
    (0..12).map(|k| 0.505 + 0.5 * k as f64).collect()
}
