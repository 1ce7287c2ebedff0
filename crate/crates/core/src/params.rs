//! Named, ordered parameter collections.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// An ordered list of named tensors. Order is fixed at construction and is
/// the order used for serialization, optimizer state and gradient sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet { entries: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, value: Tensor) {
        self.entries.push((name.into(), value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    #[inline]
    pub fn at(&self, index: usize) -> &Tensor {
        &self.entries[index].1
    }

    #[inline]
    pub fn at_mut(&mut self, index: usize) -> &mut Tensor {
        &mut self.entries[index].1
    }

    pub fn name(&self, index: usize) -> &str {
        &self.entries[index].0
    }

    /// Same names and shapes, all values zero.
    pub fn zeros_like(&self) -> Self {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), Tensor::zeros(t.shape())))
                .collect(),
        }
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    /// Checks that `other` has identical names and shapes, in order.
    pub fn check_congruent(&self, other: &ParamSet, what: &'static str) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::shape(
                what,
                format!("{} tensors vs {}", self.entries.len(), other.entries.len()),
            ));
        }
        for ((na, ta), (nb, tb)) in self.entries.iter().zip(&other.entries) {
            if na != nb || ta.shape() != tb.shape() {
                return Err(Error::shape(
                    what,
                    format!("{na}{:?} vs {nb}{:?}", ta.shape(), tb.shape()),
                ));
            }
        }
        Ok(())
    }

    /// `self += alpha * other`, elementwise over congruent sets.
    pub fn add_scaled(&mut self, other: &ParamSet, alpha: f64) -> Result<()> {
        self.check_congruent(other, "param add")?;
        for ((_, a), (_, b)) in self.entries.iter_mut().zip(&other.entries) {
            a.add_scaled(b, alpha)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for (_, t) in &mut self.entries {
            t.scale(alpha);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|(_, t)| t.is_finite())
    }

    /// Order-sensitive FNV-1a hash over names, shapes and the bit patterns of
    /// every value. Equal checksums mean bitwise-identical parameters (up to
    /// hash collisions).
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for (n, t) in &self.entries {
            eat(n.as_bytes());
            for d in t.shape() {
                eat(&(*d as u64).to_le_bytes());
            }
            for v in t.data() {
                eat(&v.to_bits().to_le_bytes());
            }
        }
        h
    }
}

impl Default for ParamSet {
    fn default() -> Self {
        Self::new()
    }
}

/// Uniform `[-s, s]` with `s = sqrt(1 / fan_in)`.
pub(crate) fn init_uniform<R: RngCore + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    let s = libm::sqrt(1.0 / fan_in as f64);
    Tensor::from_fn(shape, |_| rng.random_range(-s..=s))
}
