//! Named channels and seeded random channels and joints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{BroadcastChannel, Distribution, TransitionMatrix};
use crate::theorem::{Gate, GateJoint};

/// Seed for every sampler; equal seeds give bit-identical outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Seed of trial `i` in a batch started at `self`.
    pub fn offset(self, i: u64) -> Seed {
        Seed(self.0.wrapping_add(i))
    }
}

/// Uniform point of the simplex with `n` vertices (normalized exponential spacings).
pub fn uniform_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

fn uniform_distribution<R: Rng>(rng: &mut R, n: usize) -> Distribution {
    let mut m = uniform_simplex(rng, n);
    // absorb rounding so the row sums to 1 within the internal tolerance
    let s: f64 = m.iter().sum();
    let last = m.len() - 1;
    m[last] = (m[last] + 1.0 - s).max(0.0);
    Distribution::new(m).expect("normalized spacings form a distribution")
}

fn matrix(rows: [[f64; 2]; 2]) -> TransitionMatrix {
    TransitionMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()], 1e-12)
        .expect("rows are distributions")
}

/// Binary skew-symmetric broadcast channel: two mirrored Z-channels.
///
/// `Y` receives input 0 cleanly and input 1 flipped with probability `skew`;
/// `Z` receives input 1 cleanly and input 0 flipped with probability `skew`.
pub fn bssc(skew: f64) -> Result<BroadcastChannel> {
    if !(skew > 0.0 && skew < 1.0) {
        return Err(Error::InvalidParameter(format!("skew must lie in (0,1), got {skew}")));
    }
    BroadcastChannel::new(
        matrix([[1.0, 0.0], [skew, 1.0 - skew]]),
        matrix([[1.0 - skew, skew], [0.0, 1.0]]),
    )
}

/// Blackwell's deterministic channel: `Y = [X = 2]`, `Z = [X >= 1]`.
pub fn blackwell() -> BroadcastChannel {
    let rows = |ones: [bool; 3]| {
        let r: Vec<Vec<f64>> = ones
            .iter()
            .map(|&o| if o { vec![0.0, 1.0] } else { vec![1.0, 0.0] })
            .collect();
        TransitionMatrix::from_rows(&r, 0.0).expect("point masses")
    };
    BroadcastChannel::new(rows([false, false, true]), rows([false, true, true]))
        .expect("both sides have three inputs")
}

/// Binary-input channel with every row uniform on its output simplex.
pub fn random_channel(ny: usize, nz: usize, seed: Seed) -> Result<BroadcastChannel> {
    for (name, n) in [("ny", ny), ("nz", nz)] {
        if !(2..=8).contains(&n) {
            return Err(Error::InvalidParameter(format!("{name} must lie in 2..=8, got {n}")));
        }
    }
    let mut rng = seed.rng();
    let mut draw = |n: usize| {
        TransitionMatrix::new(vec![uniform_distribution(&mut rng, n), uniform_distribution(&mut rng, n)])
    };
    let y = draw(ny)?;
    let z = draw(nz)?;
    BroadcastChannel::new(y, z)
}

/// Uniform gate among the 16 and uniform `p(u,v)` on the 3-simplex.
pub fn random_gate_joint(seed: Seed) -> GateJoint {
    let mut rng = seed.rng();
    let gate = Gate::binary(rng.gen_range(0..16u8));
    let p = uniform_distribution(&mut rng, 4).into_masses();
    GateJoint::binary([p[0], p[1], p[2], p[3]], gate).expect("valid joint")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bssc_half_is_mirror_symmetric() {
        let bc = bssc(0.5).unwrap();
        let m = bc.flip_inputs().swap_receivers();
        let m = BroadcastChannel::new(m.to_y().permute_outputs(&[1, 0]), m.to_z().permute_outputs(&[1, 0])).unwrap();
        assert_eq!(m, bc);
        assert!(bssc(0.0).is_err());
        assert!(bssc(1.0).is_err());
    }

    #[test]
    fn blackwell_structure() {
        let bc = blackwell();
        assert_eq!(bc.input_size(), 3);
        assert_eq!(bc.to_y().row(1), &[1.0, 0.0]);
        assert_eq!(bc.to_z().row(1), &[0.0, 1.0]);
    }

    #[test]
    fn random_channel_is_deterministic_per_seed() {
        let a = random_channel(2, 3, Seed(7)).unwrap();
        assert_eq!(a, random_channel(2, 3, Seed(7)).unwrap());
        assert_ne!(a, random_channel(2, 3, Seed(8)).unwrap());
        assert_eq!(a.to_z().output_size(), 3);
        assert!(random_channel(1, 2, Seed(0)).is_err());
    }

    #[test]
    fn random_gate_joint_is_deterministic_per_seed() {
        assert_eq!(random_gate_joint(Seed(3)), random_gate_joint(Seed(3)));
    }
}
