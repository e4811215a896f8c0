//! Counter-based random streams.
//!
//! Every random draw in a run comes from a ChaCha8 generator keyed by the
//! master seed. The 64-bit ChaCha stream id encodes who owns the draws:
//!
//! ```text
//! stream = (trajectory_index << 8) | purpose
//! purpose 0      measurement outcomes; cycle k reads words [2k, 2k + 2)
//! purpose 1 + l  noise channel l, drawn sequentially per hold interval
//! ```
//!
//! Streams never depend on scheduling, so results are identical for any
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PURPOSE_BITS: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Measurement,
    Noise(usize),
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Measurement => 0,
            Purpose::Noise(l) => {
                assert!(l < (1 << PURPOSE_BITS) - 1, "too many noise channels");
                1 + l as u64
            }
        }
    }
}

/// Seed material for one trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrajectorySeed {
    pub master: u64,
    pub trajectory: u64,
}

impl TrajectorySeed {
    pub fn new(master: u64, trajectory: u64) -> Self {
        assert!(trajectory < 1 << (64 - PURPOSE_BITS), "trajectory index too large");
        Self { master, trajectory }
    }

    pub fn stream(&self, purpose: Purpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream((self.trajectory << PURPOSE_BITS) | purpose.code());
        rng
    }
}

/// Measurement stream positioned by cycle index.
pub struct MeasurementStream {
    rng: ChaCha8Rng,
}

impl MeasurementStream {
    pub fn new(seed: TrajectorySeed) -> Self {
        Self { rng: seed.stream(Purpose::Measurement) }
    }

    /// Generator positioned at the words reserved for cycle `k`.
    pub fn for_cycle(&mut self, k: usize) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(2 * k as u128);
        &mut self.rng
    }
}
