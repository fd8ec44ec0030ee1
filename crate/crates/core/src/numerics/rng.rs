use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root seed for reproducible sampling. Substreams are independent ChaCha
/// streams keyed by `(seed, index)`, so chunked Monte-Carlo output does not
/// depend on how chunks are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    pub fn substream(self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }

    /// Derive a child seed, for nesting independent experiments.
    pub fn child(self, index: u64) -> Seed {
        let mut z = self.0 ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }
}
