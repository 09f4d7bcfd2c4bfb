use std::fmt;

/// Maximum number of genes a [`NetworkState`] can hold.
pub const MAX_GENES: usize = 64;

/// Binary gene-value vector of a fixed width.
///
/// Gene 0 is the most significant bit of [`NetworkState::index`], so the
/// numeric order of states is the lexicographic order of their bit-strings
/// (gene 0 leftmost).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetworkState {
    width: u8,
    bits: u64,
}

impl NetworkState {
    /// All-zero state of the given width.
    pub fn zeros(width: usize) -> Self {
        assert!(width >= 1 && width <= MAX_GENES, "state width {width} out of range");
        Self { width: width as u8, bits: 0 }
    }

    /// State whose numeric index (gene 0 = most significant bit) is `index`.
    pub fn from_index(width: usize, index: u64) -> Self {
        let mut state = Self::zeros(width);
        state.bits = index & state.mask();
        state
    }

    /// Builds a state from gene values, gene 0 first.
    pub fn from_bits(values: &[bool]) -> Self {
        let mut state = Self::zeros(values.len());
        for (gene, &value) in values.iter().enumerate() {
            state.set(gene, value);
        }
        state
    }

    /// Parses a bit-string such as `1010` (gene 0 leftmost).
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if text.is_empty() || text.len() > MAX_GENES {
            return None;
        }
        let mut values = Vec::with_capacity(text.len());
        for c in text.chars() {
            match c {
                '0' => values.push(false),
                '1' => values.push(true),
                _ => return None,
            }
        }
        Some(Self::from_bits(&values))
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn index(&self) -> u64 {
        self.bits
    }

    #[inline]
    fn gene_mask(&self, gene: usize) -> u64 {
        debug_assert!(gene < self.width());
        1u64 << (self.width() - 1 - gene)
    }

    fn mask(&self) -> u64 {
        if self.width() == 64 {
            u64::MAX
        } else {
            (1u64 << self.width()) - 1
        }
    }

    #[inline]
    pub fn get(&self, gene: usize) -> bool {
        self.bits & self.gene_mask(gene) != 0
    }

    #[inline]
    pub fn set(&mut self, gene: usize, value: bool) {
        let mask = self.gene_mask(gene);
        if value {
            self.bits |= mask;
        } else {
            self.bits &= !mask;
        }
    }

    #[inline]
    pub fn with(mut self, gene: usize, value: bool) -> Self {
        self.set(gene, value);
        self
    }

    /// Returns the state with every listed gene flipped.
    pub fn flipped(mut self, genes: &[usize]) -> Self {
        for &gene in genes {
            self.bits ^= self.gene_mask(gene);
        }
        self
    }

    /// Genes in which the two states differ.
    pub fn differing_genes(&self, other: &Self) -> Vec<usize> {
        (0..self.width()).filter(|&g| self.get(g) != other.get(g)).collect()
    }

    /// Gene values as 0.0 / 1.0, gene 0 first.
    pub fn write_features<F: num_traits::Float>(&self, out: &mut [F]) {
        for (gene, slot) in out.iter_mut().enumerate().take(self.width()) {
            *slot = if self.get(gene) { F::one() } else { F::zero() };
        }
    }
}

impl fmt::Display for NetworkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for gene in 0..self.width() {
            f.write_str(if self.get(gene) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for NetworkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NetworkState({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gene_zero_is_most_significant() {
        let s = NetworkState::from_bits(&[true, false, false, false]);
        assert_eq!(s.index(), 8);
        assert_eq!(s.to_string(), "1000");
        assert!(NetworkState::parse("0101").unwrap() < s);
    }

    #[test]
    fn flip_and_parse() {
        let s = NetworkState::parse("1010").unwrap();
        assert_eq!(s.flipped(&[0, 2]), NetworkState::zeros(4));
        assert_eq!(s.differing_genes(&NetworkState::zeros(4)), vec![0, 2]);
        assert!(NetworkState::parse("10a0").is_none());
        assert!(NetworkState::parse("").is_none());
    }

    #[test]
    fn full_width_roundtrip() {
        let s = NetworkState::from_index(64, u64::MAX - 5);
        assert_eq!(NetworkState::parse(&s.to_string()), Some(s));
    }
}
