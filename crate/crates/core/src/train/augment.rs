use rand::{Rng, RngCore};

use crate::tensor::Tensor;

/// Flip and photometric jitter parameters, in post-normalization units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AugmentConfig {
    pub flip_prob: f64,
    pub gain_min: f64,
    pub gain_max: f64,
    pub offset_min: f64,
    pub offset_max: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            flip_prob: 0.5,
            gain_min: 0.9,
            gain_max: 1.1,
            offset_min: -0.1,
            offset_max: 0.1,
        }
    }
}

/// One realised augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentDraw {
    pub flip: bool,
    pub gain: f64,
    pub offset: f64,
}

impl AugmentDraw {
    pub const IDENTITY: AugmentDraw = AugmentDraw {
        flip: false,
        gain: 1.0,
        offset: 0.0,
    };

    /// Draws flip, then gain, then offset.
    pub fn sample<R: RngCore + ?Sized>(rng: &mut R, cfg: &AugmentConfig) -> Self {
        let flip = rng.random::<f64>() < cfg.flip_prob;
        let gain = cfg.gain_min + (cfg.gain_max - cfg.gain_min) * rng.random::<f64>();
        let offset = cfg.offset_min + (cfg.offset_max - cfg.offset_min) * rng.random::<f64>();
        AugmentDraw { flip, gain, offset }
    }

    pub fn apply(&self, image: &Tensor) -> Tensor {
        let mut out = if self.flip {
            flip_horizontal(image)
        } else {
            image.clone()
        };
        if self.gain != 1.0 || self.offset != 0.0 {
            for v in out.data_mut() {
                *v = *v * self.gain + self.offset;
            }
        }
        out
    }
}

/// Mirrors the last (width) axis of a `[C, H, W]` tensor.
pub fn flip_horizontal(image: &Tensor) -> Tensor {
    let s = image.shape();
    let w = s[s.len() - 1];
    let mut out = image.clone();
    for row in out.data_mut().chunks_mut(w) {
        row.reverse();
    }
    out
}

pub fn augment<R: RngCore + ?Sized>(image: &Tensor, rng: &mut R, cfg: &AugmentConfig) -> Tensor {
    AugmentDraw::sample(rng, cfg).apply(image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn img() -> Tensor {
        Tensor::from_fn(&[2, 3, 4], |i| (i as f64 * 0.71).cos())
    }

    #[test]
    fn identity_draw() {
        assert_eq!(AugmentDraw::IDENTITY.apply(&img()), img());
    }

    #[test]
    fn flip_is_involution() {
        let d = AugmentDraw {
            flip: true,
            ..AugmentDraw::IDENTITY
        };
        assert_ne!(d.apply(&img()), img());
        assert_eq!(d.apply(&d.apply(&img())), img());
        let f = flip_horizontal(&img());
        assert_eq!(f.data()[0], img().data()[3]);
    }

    #[test]
    fn seeded_runs_match() {
        let cfg = AugmentConfig::default();
        let a = augment(&img(), &mut ChaCha8Rng::seed_from_u64(8), &cfg);
        let b = augment(&img(), &mut ChaCha8Rng::seed_from_u64(8), &cfg);
        assert_eq!(a, b);
        assert_eq!(a.shape(), img().shape());
    }

    #[test]
    fn draws_stay_in_range() {
        let cfg = AugmentConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut flips = 0;
        for _ in 0..2000 {
            let d = AugmentDraw::sample(&mut rng, &cfg);
            assert!((0.9..=1.1).contains(&d.gain));
            assert!((-0.1..=0.1).contains(&d.offset));
            flips += d.flip as usize;
        }
        assert!((900..1100).contains(&flips), "{flips}");
    }
}
