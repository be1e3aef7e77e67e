use std::fmt;

use super::DescentError;

/// Largest flip order supported by [`FlipSet`].
pub const MAX_FLIP_ORDER: usize = 6;

/// A set of distinct bang indices flipped together, stored sorted ascending.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlipSet {
    len: u8,
    idx: [u16; MAX_FLIP_ORDER],
}

impl FlipSet {
    pub fn empty() -> Self {
        FlipSet {
            len: 0,
            idx: [0; MAX_FLIP_ORDER],
        }
    }

    /// Builds a flip set from distinct indices in any order.
    pub fn new(indices: &[usize]) -> Result<Self, DescentError> {
        if indices.len() > MAX_FLIP_ORDER {
            return Err(DescentError::FlipOrderTooLarge {
                k: indices.len(),
                max: MAX_FLIP_ORDER,
            });
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(DescentError::InvalidArgument(format!(
                "flip set has repeated indices: {indices:?}"
            )));
        }
        if let Some(&big) = sorted.iter().find(|&&i| i > u16::MAX as usize) {
            return Err(DescentError::InvalidArgument(format!(
                "flip index {big} does not fit the compact representation"
            )));
        }
        let mut idx = [0u16; MAX_FLIP_ORDER];
        for (slot, &i) in idx.iter_mut().zip(&sorted) {
            *slot = i as u16;
        }
        Ok(FlipSet {
            len: sorted.len() as u8,
            idx,
        })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn raw(&self) -> &[u16] {
        &self.idx[..self.len()]
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.raw().iter().map(|&i| i as usize)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.indices().collect()
    }

    pub fn first(&self) -> Option<usize> {
        self.raw().first().map(|&i| i as usize)
    }

    pub fn last(&self) -> Option<usize> {
        self.raw().last().map(|&i| i as usize)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.raw().iter().any(|&x| x as usize == i)
    }

    /// Packs all but the last index into a map key.
    pub(crate) fn prefix_key(&self) -> u128 {
        let mut key = (self.len() as u128).saturating_sub(1);
        for (slot, &i) in self.raw()[..self.len().saturating_sub(1)]
            .iter()
            .enumerate()
        {
            key |= (i as u128) << (8 + 16 * slot);
        }
        key
    }
}

impl fmt::Debug for FlipSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.raw()).finish()
    }
}

/// `Σ_{i=1..k} C(n, i)`, the size of the at-most-`k`-flip neighborhood.
pub fn update_count(n: usize, k: usize) -> u128 {
    (1..=k.min(n)).map(|i| binomial(n, i)).sum()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Every subset of `{0, …, n-1}` of size `1..=k`, by size then
/// lexicographically.
pub fn enumerate_updates(n: usize, k: usize) -> Result<Vec<FlipSet>, DescentError> {
    if k == 0 || k > n {
        return Err(DescentError::InvalidFlipOrder { k, bangs: n });
    }
    if k > MAX_FLIP_ORDER {
        return Err(DescentError::FlipOrderTooLarge {
            k,
            max: MAX_FLIP_ORDER,
        });
    }
    let total = update_count(n, k);
    let mut out = Vec::with_capacity(usize::try_from(total).unwrap_or(usize::MAX).min(1 << 28));
    for size in 1..=k {
        for_each_subset(n, size, |s| {
            out.push(FlipSet::new(s).expect("valid subset"))
        });
    }
    Ok(out)
}

/// Calls `f` with every sorted `size`-subset of `{0, …, n-1}` in
/// lexicographic order.
pub fn for_each_subset<F: FnMut(&[usize])>(n: usize, size: usize, mut f: F) {
    if size > n {
        return;
    }
    if size == 0 {
        f(&[]);
        return;
    }
    let mut comb: Vec<usize> = (0..size).collect();
    loop {
        f(&comb);
        // advance to the next combination
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if comb[i] < n - size + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        comb[i] += 1;
        for j in i + 1..size {
            comb[j] = comb[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn single_flips() {
        assert_eq!(enumerate_updates(5, 1).unwrap().len(), 5);
    }

    #[test]
    fn up_to_two_flips() {
        let u = enumerate_updates(5, 2).unwrap();
        assert_eq!(u.len(), 15);
        let distinct: HashSet<_> = u.iter().collect();
        assert_eq!(distinct.len(), 15);
    }

    #[test]
    fn four_flip_count_at_eighty_bangs() {
        let expected = binomial(80, 4) + binomial(80, 3) + binomial(80, 2) + binomial(80, 1);
        assert_eq!(expected, 1_581_580 + 82_160 + 3_160 + 80);
        assert_eq!(update_count(80, 4), expected);
        assert_eq!(enumerate_updates(80, 4).unwrap().len() as u128, expected);
    }

    #[test]
    fn order_above_length_is_rejected() {
        assert!(matches!(
            enumerate_updates(3, 4),
            Err(DescentError::InvalidFlipOrder { .. })
        ));
        assert!(enumerate_updates(3, 0).is_err());
    }

    #[test]
    fn subsets_are_sorted_and_complete() {
        let mut seen = Vec::new();
        for_each_subset(6, 3, |s| {
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            seen.push(s.to_vec());
        });
        assert_eq!(seen.len(), 20);
        let distinct: HashSet<_> = seen.into_iter().collect();
        assert_eq!(distinct.len(), 20);
    }

    #[test]
    fn prefix_keys_separate_prefixes() {
        let a = FlipSet::new(&[1, 5]).unwrap();
        let b = FlipSet::new(&[1, 9]).unwrap();
        let c = FlipSet::new(&[2, 5]).unwrap();
        let d = FlipSet::new(&[1, 5, 9]).unwrap();
        assert_eq!(a.prefix_key(), b.prefix_key());
        assert_ne!(a.prefix_key(), c.prefix_key());
        assert_ne!(a.prefix_key(), d.prefix_key());
        assert_ne!(
            FlipSet::new(&[0]).unwrap().prefix_key(),
            FlipSet::new(&[0, 3]).unwrap().prefix_key()
        );
    }
}
