/// SplitMix64 finalizer (Steele et al. constants).
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed. Chaining through the sweep value and then the
/// replication index makes every replication's seed a pure function of
/// (base_seed, sweep point, replication), independent of how many other
/// jobs run.
pub fn chain(seed: u64, token: u64) -> u64 {
    splitmix64(seed ^ splitmix64(token))
}

pub fn replication_seed(base_seed: u64, sweep_token: u64, replication: usize) -> u64 {
    chain(chain(base_seed, sweep_token), replication as u64)
}
