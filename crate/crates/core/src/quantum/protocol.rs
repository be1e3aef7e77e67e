use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::QuantumError;

/// A bang-bang protocol: one normalized bang `σ_j ∈ {-1, +1}` per time step.
///
/// The physical field during step `j` is `h_max * σ_j`. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Protocol {
    bangs: Vec<i8>,
}

impl Protocol {
    pub fn from_signs(bangs: Vec<i8>) -> Result<Self, QuantumError> {
        if let Some(bad) = bangs.iter().find(|&&b| b != 1 && b != -1) {
            return Err(QuantumError::InvalidProtocol(format!(
                "bang values must be ±1, found {bad}"
            )));
        }
        Ok(Protocol { bangs })
    }

    pub fn constant(len: usize, sign: i8) -> Self {
        assert!(sign == 1 || sign == -1, "sign must be ±1");
        Protocol {
            bangs: vec![sign; len],
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let bangs = (0..len)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Protocol { bangs }
    }

    /// Protocol encoded by the bits of `index`: bit `j` set means `σ_j = -1`.
    ///
    /// This is the ordering of every full cost table in the crate.
    pub fn from_index(len: usize, index: u64) -> Self {
        let bangs = (0..len)
            .map(|j| if (index >> j) & 1 == 1 { -1 } else { 1 })
            .collect();
        Protocol { bangs }
    }

    /// Inverse of [`Protocol::from_index`]. Only meaningful for `len <= 64`.
    pub fn to_index(&self) -> u64 {
        self.bangs
            .iter()
            .enumerate()
            .filter(|(_, &b)| b < 0)
            .fold(0u64, |acc, (j, _)| acc | (1u64 << j))
    }

    pub fn len(&self) -> usize {
        self.bangs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bangs.is_empty()
    }

    pub fn bangs(&self) -> &[i8] {
        &self.bangs
    }

    pub fn sign(&self, step: usize) -> i8 {
        self.bangs[step]
    }

    /// Physical field values `h_max * σ_j`.
    pub fn fields(&self, field_max: f64) -> Vec<f64> {
        self.bangs.iter().map(|&b| field_max * b as f64).collect()
    }

    /// Copy with the bangs at `steps` inverted.
    pub fn flipped(&self, steps: &[usize]) -> Protocol {
        let mut out = self.clone();
        out.flip_in_place(steps);
        out
    }

    pub fn flip_in_place(&mut self, steps: &[usize]) {
        for &j in steps {
            self.bangs[j] = -self.bangs[j];
        }
    }

    /// Number of steps where the two protocols differ.
    pub fn hamming(&self, other: &Protocol) -> usize {
        assert_eq!(self.len(), other.len(), "protocol lengths differ");
        self.bangs
            .iter()
            .zip(&other.bangs)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Sum of the normalized bangs.
    pub fn magnetization(&self) -> i64 {
        self.bangs.iter().map(|&b| b as i64).sum()
    }

    /// Bits packed 64 per word, set where `σ_j = -1`.
    pub fn packed(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.len().div_ceil(64)];
        for (j, &b) in self.bangs.iter().enumerate() {
            if b < 0 {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        words
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bangs {
            f.write_str(if b > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for Protocol {
    type Err = QuantumError;

    /// Parses a string of `+`/`-` characters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bangs = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(QuantumError::InvalidProtocol(format!(
                    "unexpected character {other:?} in bang string"
                ))),
            })
            .collect::<Result<Vec<i8>, _>>()?;
        Ok(Protocol { bangs })
    }
}

impl TryFrom<String> for Protocol {
    type Error = QuantumError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Protocol> for String {
    fn from(p: Protocol) -> String {
        p.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn index_round_trip() {
        for s in 0..64u64 {
            let p = Protocol::from_index(6, s);
            assert_eq!(p.to_index(), s);
        }
        assert_eq!(Protocol::from_index(3, 0).to_string(), "+++");
        assert_eq!(Protocol::from_index(3, 0b001).to_string(), "-++");
    }

    #[test]
    fn parse_and_display() {
        let p: Protocol = "+-+-".parse().unwrap();
        assert_eq!(p.bangs(), &[1, -1, 1, -1]);
        assert_eq!(p.to_string(), "+-+-");
        assert!("+x".parse::<Protocol>().is_err());
    }

    #[test]
    fn rejects_non_unit_bangs() {
        assert!(Protocol::from_signs(vec![1, 0]).is_err());
    }

    #[test]
    fn flips_and_hamming() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Protocol::random(20, &mut rng);
        let q = p.flipped(&[0, 5, 19]);
        assert_eq!(p.hamming(&q), 3);
        assert_eq!(q.flipped(&[0, 5, 19]), p);
        let all_up = Protocol::constant(20, 1);
        assert_eq!(all_up.hamming(&Protocol::constant(20, -1)), 20);
    }

    #[test]
    fn packed_bits_follow_index_convention() {
        let p = Protocol::from_index(10, 0b10_0000_0101);
        assert_eq!(p.packed(), vec![0b10_0000_0101]);
    }
}
