use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one trial seed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Environment = 0,
    Policy = 1,
    Discard = 2,
    Agents = 3,
}

pub(crate) fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
