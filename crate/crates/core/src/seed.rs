//! Named sub-seeds derived from one master seed.
//!
//! Every random draw in a run (validation split, seed batch, per-round random
//! selection, synthetic corpus) takes its own stream so that changing one
//! component never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sub-seed labels used by the simulator.
pub const SPLIT: &str = "split";
pub const SEED_BATCH: &str = "seed-batch";
pub const STRATEGY: &str = "strategy";
pub const SYNTH: &str = "synth";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the label bytes.
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derives a 64-bit seed for `(master, label, index)`.
pub fn sub_seed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ label_hash(label)) ^ splitmix64(index.wrapping_add(1)))
}

/// A reproducible generator for the named stream.
pub fn rng_for(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(master, label, index))
}
