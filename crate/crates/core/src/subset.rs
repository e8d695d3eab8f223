//! Agent subsets as bitmasks.

use std::fmt;

/// Subset of agents `{0, .., n-1}` stored as a bitmask (n <= 64).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentSet(u64);

impl AgentSet {
    pub const fn empty() -> Self {
        AgentSet(0)
    }

    pub fn from_bits(bits: u64) -> Self {
        AgentSet(bits)
    }

    pub fn from_members(members: &[usize]) -> Self {
        let mut bits = 0u64;
        for &m in members {
            assert!(m < 64, "agent index {m} does not fit in an AgentSet");
            bits |= 1 << m;
        }
        AgentSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn complement(self, n: usize) -> Self {
        AgentSet(!self.0 & full_mask(n))
    }

    /// True when the set is neither empty nor all of `{0, .., n-1}`.
    pub fn is_proper(self, n: usize) -> bool {
        self.0 != 0 && self.0 & full_mask(n) == self.0 && self.0 != full_mask(n)
    }

    pub fn members(self) -> Vec<usize> {
        (0..64).filter(|&i| self.contains(i)).collect()
    }

    /// All `2^n - 2` non-empty proper subsets, in increasing bitmask order.
    pub fn proper_subsets(n: usize) -> impl Iterator<Item = AgentSet> {
        assert!(n < 64);
        (1..full_mask(n)).map(AgentSet)
    }
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl fmt::Debug for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}
