/*!
Per-node random tapes.

A phase hands every participating node one fixed-width window into a shared
bit string; a node's behavior may depend only on its own window (and its
neighbors' messages), which is what makes bit-by-bit seed fixing sound.
Windows are assigned through a `ChunkMap`: nodes mapped to the same chunk
read the same bits. Sharing is sound exactly when same-chunk nodes are far
enough apart to never interact within the phase, so chunk classes come from
a power-graph coloring and the tape length scales with the class count, not
with n.

Every node keeps its own cursor into its chunk and fails loudly on overdraw
— chunk widths are part of each phase's contract, so running out is a bug,
not noise.

Uniform draws use rejection sampling: read ceil(log2 m) bits, accept values
below m, retry up to `REJECTION_TRIES` times, then fall back to a modulo
reduction and count the event. The fallback bias is at most
2^-REJECTION_TRIES per draw and the count is surfaced in run reports.
*/

use rand::RngCore;

use crate::graph::NodeId;
use crate::source::BitSource;

pub const REJECTION_TRIES: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TapeError {
    Exhausted {
        node: NodeId,
        requested: u64,
        remaining: u64,
    },
    UnknownNode(NodeId),
}

impl std::fmt::Display for TapeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TapeError::Exhausted {
                node,
                requested,
                remaining,
            } => write!(
                f,
                "tape chunk for node {node} exhausted: wanted {requested} bits, {remaining} left"
            ),
            TapeError::UnknownNode(v) => write!(f, "node {v} has no tape chunk"),
        }
    }
}

impl std::error::Error for TapeError {}

pub fn ceil_log2(m: u64) -> u32 {
    debug_assert!(m >= 1);
    64 - (m - 1).leading_zeros()
}

/// Bit budget for one uniform draw below m, all retries included.
pub fn draw_budget_bits(m: u64) -> u64 {
    REJECTION_TRIES as u64 * ceil_log2(m) as u64
}

/// Bit budget for sampling `count` distinct items from `pool`.
pub fn sample_budget_bits(pool: u64, count: u64) -> u64 {
    (0..count).map(|j| draw_budget_bits(pool - j)).sum()
}

const NO_CHUNK: u32 = u32::MAX;

/// node -> chunk assignment for one phase.
#[derive(Debug, Clone)]
pub struct ChunkMap {
    chunk_of: Vec<u32>,
    n_chunks: u32,
}

impl ChunkMap {
    /// Every listed node gets its own chunk, in list order.
    pub fn identity(n_total: usize, nodes: &[NodeId]) -> Self {
        let mut chunk_of = vec![NO_CHUNK; n_total];
        for (c, &v) in nodes.iter().enumerate() {
            chunk_of[v as usize] = c as u32;
        }
        ChunkMap {
            chunk_of,
            n_chunks: nodes.len() as u32,
        }
    }

    /// Nodes share chunks by class; classes must be < n_chunks.
    pub fn from_classes(n_total: usize, assignment: &[(NodeId, u32)], n_chunks: u32) -> Self {
        let mut chunk_of = vec![NO_CHUNK; n_total];
        for &(v, class) in assignment {
            debug_assert!(class < n_chunks);
            chunk_of[v as usize] = class;
        }
        ChunkMap { chunk_of, n_chunks }
    }

    pub fn n_chunks(&self) -> u32 {
        self.n_chunks
    }

    pub fn chunk(&self, v: NodeId) -> Option<u32> {
        match self.chunk_of.get(v as usize) {
            Some(&c) if c != NO_CHUNK => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomTape {
    bits_per_node: u64,
    map: ChunkMap,
    words: Vec<u64>,
    cursors: Vec<u64>,
    bias_events: u64,
}

impl RandomTape {
    /// Total bits a tape over `map` needs from its backing string.
    pub fn total_bits(map: &ChunkMap, bits_per_node: u64) -> u64 {
        bits_per_node * map.n_chunks() as u64
    }

    pub fn materialize(map: &ChunkMap, bits_per_node: u64, bit: impl Fn(u64) -> bool) -> Self {
        let total = Self::total_bits(map, bits_per_node);
        let mut words = vec![0u64; total.div_ceil(64) as usize];
        for i in 0..total {
            if bit(i) {
                words[(i / 64) as usize] |= 1u64 << (i % 64);
            }
        }
        RandomTape {
            bits_per_node,
            map: map.clone(),
            words,
            cursors: vec![0; map.chunk_of.len()],
            bias_events: 0,
        }
    }

    /// Wrap an already-expanded bit string (e.g. one candidate of a seed
    /// search) without copying.
    pub fn from_words(map: &ChunkMap, bits_per_node: u64, words: Vec<u64>) -> Self {
        debug_assert!(words.len() as u64 * 64 >= Self::total_bits(map, bits_per_node));
        RandomTape {
            bits_per_node,
            map: map.clone(),
            words,
            cursors: vec![0; map.chunk_of.len()],
            bias_events: 0,
        }
    }

    /// Expand one seed of a source into a tape.
    pub fn from_source(
        map: &ChunkMap,
        bits_per_node: u64,
        source: &dyn BitSource,
        seed: u64,
    ) -> Self {
        let total = Self::total_bits(map, bits_per_node);
        debug_assert!(total <= source.total_bits());
        let mut words = vec![0u64; total.div_ceil(64) as usize];
        source.fill_words(seed, &mut words);
        Self::from_words(map, bits_per_node, words)
    }

    /// Fresh randomness from a stream generator.
    pub fn from_rng(map: &ChunkMap, bits_per_node: u64, rng: &mut impl RngCore) -> Self {
        let total = Self::total_bits(map, bits_per_node);
        let mut words = vec![0u64; total.div_ceil(64) as usize];
        for w in words.iter_mut() {
            *w = rng.next_u64();
        }
        RandomTape {
            bits_per_node,
            map: map.clone(),
            words,
            cursors: vec![0; map.chunk_of.len()],
            bias_events: 0,
        }
    }

    pub fn bits_per_node(&self) -> u64 {
        self.bits_per_node
    }

    pub fn has_chunk(&self, node: NodeId) -> bool {
        self.map.chunk(node).is_some()
    }

    pub fn remaining(&self, node: NodeId) -> u64 {
        match self.map.chunk(node) {
            Some(_) => self.bits_per_node - self.cursors[node as usize],
            None => 0,
        }
    }

    pub fn bias_events(&self) -> u64 {
        self.bias_events
    }

    /// Read `width` bits (<= 64) from the node's chunk, LSB-first.
    pub fn read_bits(&mut self, node: NodeId, width: u32) -> Result<u64, TapeError> {
        debug_assert!(width <= 64);
        let c = match self.map.chunk(node) {
            Some(c) => c as u64,
            None => return Err(TapeError::UnknownNode(node)),
        };
        let cursor = self.cursors[node as usize];
        if cursor + width as u64 > self.bits_per_node {
            return Err(TapeError::Exhausted {
                node,
                requested: width as u64,
                remaining: self.bits_per_node - cursor,
            });
        }
        let mut out = 0u64;
        let base = c * self.bits_per_node + cursor;
        for i in 0..width as u64 {
            let g = base + i;
            if self.words[(g / 64) as usize] >> (g % 64) & 1 == 1 {
                out |= 1u64 << i;
            }
        }
        self.cursors[node as usize] = cursor + width as u64;
        Ok(out)
    }

    /// Uniform value in [0, m) by rejection; reads at most
    /// draw_budget_bits(m) bits.
    pub fn uniform_below(&mut self, node: NodeId, m: u64) -> Result<u64, TapeError> {
        debug_assert!(m >= 1);
        let width = ceil_log2(m);
        if width == 0 {
            return Ok(0);
        }
        let mut last = 0;
        for _ in 0..REJECTION_TRIES {
            last = self.read_bits(node, width)?;
            if last < m {
                return Ok(last);
            }
        }
        self.bias_events += 1;
        Ok(last % m)
    }

    /// Distinct positions in [0, pool) — the first `count` steps of a
    /// Fisher-Yates pass, reading one uniform draw per step.
    pub fn sample_distinct(
        &mut self,
        node: NodeId,
        pool: u64,
        count: u64,
    ) -> Result<Vec<u64>, TapeError> {
        debug_assert!(count <= pool);
        let mut idx: Vec<u64> = (0..pool).collect();
        let mut out = Vec::with_capacity(count as usize);
        for j in 0..count {
            let r = self.uniform_below(node, pool - j)?;
            idx.swap(j as usize, (j + r) as usize);
            out.push(idx[j as usize]);
        }
        Ok(out)
    }

    /// Full permutation of [0, pool).
    pub fn permutation(&mut self, node: NodeId, pool: u64) -> Result<Vec<u64>, TapeError> {
        self.sample_distinct(node, pool, pool)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn solo(bits: u64, bit: impl Fn(u64) -> bool) -> RandomTape {
        RandomTape::materialize(&ChunkMap::identity(1, &[0]), bits, bit)
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(1 << 20), 20);
    }

    #[test]
    fn chunks_are_disjoint_and_ordered() {
        // bit pattern: global bit i set iff i % 3 == 0
        let map = ChunkMap::identity(10, &[2, 5, 7]);
        let mut tape = RandomTape::materialize(&map, 6, |i| i % 3 == 0);
        // node 2 owns bits 0..6 -> LSB-first 0b001001
        assert_eq!(tape.read_bits(2, 6).unwrap(), 0b001001);
        // node 5 owns bits 6..12 -> bits 6,9 set
        assert_eq!(tape.read_bits(5, 3).unwrap(), 0b001);
        assert_eq!(tape.read_bits(5, 3).unwrap(), 0b001);
        // node 7 owns bits 12..18
        assert_eq!(tape.read_bits(7, 6).unwrap(), 0b001001);
        assert_eq!(tape.remaining(2), 0);
    }

    #[test]
    fn shared_chunks_read_identical_bits() {
        // nodes 0 and 3 share chunk 0; node 1 owns chunk 1
        let map = ChunkMap::from_classes(4, &[(0, 0), (3, 0), (1, 1)], 2);
        let mut tape = RandomTape::materialize(&map, 8, |i| i % 5 == 0);
        let a = tape.read_bits(0, 8).unwrap();
        let b = tape.read_bits(3, 8).unwrap();
        assert_eq!(a, b);
        // cursors are independent: 0 exhausted, 3 exhausted, 1 untouched
        assert_eq!(tape.remaining(0), 0);
        assert_eq!(tape.remaining(1), 8);
        let c = tape.read_bits(1, 8).unwrap();
        assert_ne!(c, a); // chunk 1 covers bits 8..16: different pattern phase
    }

    #[test]
    fn overdraw_is_an_error() {
        let mut tape = solo(8, |_| false);
        assert_eq!(tape.read_bits(0, 6).unwrap(), 0);
        let err = tape.read_bits(0, 6).unwrap_err();
        assert_eq!(
            err,
            TapeError::Exhausted {
                node: 0,
                requested: 6,
                remaining: 2
            }
        );
        assert_eq!(tape.read_bits(1, 1).unwrap_err(), TapeError::UnknownNode(1));
    }

    #[test]
    fn uniform_below_rejects_out_of_range() {
        // m = 3, width 2: chunk bits give values 3 (reject), then 2 (accept)
        let pattern = [true, true, false, true];
        let mut tape = solo(64, move |i| pattern.get(i as usize).copied().unwrap_or(false));
        assert_eq!(tape.uniform_below(0, 3).unwrap(), 2);
        assert_eq!(tape.bias_events(), 0);
        // all-ones chunk: every try reads 3, falls back to 3 % 3 = 0
        let mut tape = solo(64, |_| true);
        assert_eq!(tape.uniform_below(0, 3).unwrap(), 0);
        assert_eq!(tape.bias_events(), 1);
        // m = 1 reads nothing
        let mut tape = solo(1, |_| true);
        assert_eq!(tape.uniform_below(0, 1).unwrap(), 0);
        assert_eq!(tape.remaining(0), 1);
    }

    #[test]
    fn permutation_is_a_permutation() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let map = ChunkMap::identity(1, &[0]);
        let mut tape = RandomTape::from_rng(&map, sample_budget_bits(10, 10), &mut rng);
        let mut p = tape.permutation(0, 10).unwrap();
        p.sort_unstable();
        assert_eq!(p, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn sample_distinct_distinct() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let map = ChunkMap::identity(1, &[0]);
        for trial in 0..50u64 {
            let mut tape = RandomTape::from_rng(&map, sample_budget_bits(9, 4), &mut rng);
            let mut s = tape.sample_distinct(0, 9, 4).unwrap();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 4, "trial {trial}");
            assert!(s.iter().all(|&x| x < 9));
        }
    }

    #[test]
    fn source_expansion_matches_bits() {
        use crate::source::SeededGenerator;
        let gen = SeededGenerator::new(64, 2, 32);
        let map = ChunkMap::identity(4, &[1, 3]);
        let mut tape = RandomTape::from_source(&map, 16, &gen, 5);
        for c in 0..2u64 {
            let node = [1u32, 3u32][c as usize];
            for i in 0..16u64 {
                let want = gen.bit(5, c * 16 + i) as u64;
                assert_eq!(tape.read_bits(node, 1).unwrap(), want, "chunk {c} bit {i}");
            }
        }
    }
}
