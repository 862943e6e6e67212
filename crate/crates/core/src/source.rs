/*!
Seed-indexed bit-string families.

The derandomized drivers need a small family of candidate random strings:
each seed s in {0,1}^d names a string of `total_bits` bits, the search
enumerates seeds, and the winner is expanded into a tape. Two families live
here:

  * `SeededGenerator` — the production family. Output bit i is bit (i mod b)
    of P_s(element(i / b)) where P_s is a degree-(k-1) polynomial over
    GF(2^b) with coefficients drawn from the seed, and b is the smallest
    field width with b * 2^b >= total_bits. With the full k*b seed bits the
    family is k-wise independent per field element; when the seed is capped
    below k*b each coefficient bit becomes the parity of the seed against a
    fixed mask, XORed onto a fixed base coefficient. That drops the
    independence guarantee (any cap must) but keeps the one property the
    search leans on: every coefficient — and therefore every output bit —
    is an affine GF(2) function of the seed. A candidate string is the
    seed-0 string XOR a subset of per-seed-bit delta strings, so a search
    over 2^d seeds materializes d+1 strings, not 2^d.

  * `TrueRandomOracle` — a materialized table of 2^d genuinely pseudorandom
    rows, for tests that compare search behavior against unstructured
    randomness. Memory is 2^d * total_bits / 8, so d is capped.

Field moduli are found at construction: the smallest irreducible polynomial
of each degree with nonzero constant term, certified by the standard
x^(2^b) = x test plus gcd checks for every prime divisor of b.
*/

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// A family of bit strings indexed by seeds in [0, 2^seed_bits).
pub trait BitSource: Sync {
    fn seed_bits(&self) -> u32;
    fn total_bits(&self) -> u64;
    fn bit(&self, seed: u64, index: u64) -> bool;

    /// Whether string(s) = string(0) XOR the deltas of the set seed bits.
    /// Families that answer true let a seed search expand seed_bits + 1
    /// strings instead of 2^seed_bits.
    fn is_affine(&self) -> bool {
        false
    }

    /// Write the full string for one seed into `words` (bit i of the string
    /// at bit i % 64 of word i / 64; `words` must hold total_bits).
    fn fill_words(&self, seed: u64, words: &mut [u64]) {
        for w in words.iter_mut() {
            *w = 0;
        }
        for i in 0..self.total_bits() {
            if self.bit(seed, i) {
                words[(i / 64) as usize] |= 1u64 << (i % 64);
            }
        }
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// --- GF(2)[x] arithmetic on u64 bitmasks (bit i = coefficient of x^i) ---

fn poly_deg(a: u64) -> i32 {
    63 - a.leading_zeros() as i32 // -1 for a == 0 via wrap? guard below
}

fn poly_rem(mut a: u64, m: u64) -> u64 {
    debug_assert!(m != 0);
    let dm = poly_deg(m);
    while a != 0 && poly_deg(a) >= dm {
        a ^= m << (poly_deg(a) - dm);
    }
    a
}

fn poly_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

/// Multiply in GF(2^bits) with modulus f (degree exactly `bits`).
fn gf_mul(a: u64, b: u64, f: u64, bits: u32) -> u64 {
    let mut p: u128 = 0;
    let mut aa = a as u128;
    let mut bb = b;
    while bb != 0 {
        if bb & 1 == 1 {
            p ^= aa;
        }
        aa <<= 1;
        bb >>= 1;
    }
    let fu = f as u128;
    for i in (bits..2 * bits).rev() {
        if p >> i & 1 == 1 {
            p ^= fu << (i - bits);
        }
    }
    p as u64
}

fn prime_divisors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// x^(2^e) mod f, starting from the reduced image of x.
fn frobenius_power(e: u32, f: u64, bits: u32) -> u64 {
    let mut r = poly_rem(0b10, f);
    for _ in 0..e {
        r = gf_mul(r, r, f, bits);
    }
    r
}

/// Rabin irreducibility test for f of degree `bits`.
fn is_irreducible(f: u64, bits: u32) -> bool {
    debug_assert_eq!(poly_deg(f), bits as i32);
    let x = poly_rem(0b10, f);
    if frobenius_power(bits, f, bits) != x {
        return false;
    }
    for p in prime_divisors(bits) {
        let s = frobenius_power(bits / p, f, bits);
        let g = poly_gcd(f, s ^ x);
        if poly_deg(g) != 0 {
            return false;
        }
    }
    true
}

/// Smallest irreducible degree-`bits` polynomial with constant term 1.
pub fn min_irreducible(bits: u32) -> u64 {
    assert!((1..=58).contains(&bits), "field width out of range: {bits}");
    let high = 1u64 << bits;
    let mut low = 1u64;
    loop {
        let f = high | low;
        if is_irreducible(f, bits) {
            return f;
        }
        low += 2;
        assert!(low < high, "no irreducible polynomial found at degree {bits}");
    }
}

pub struct SeededGenerator {
    k: u32,
    b: u32,
    f: u64,
    seed_bits: u32,
    total_bits: u64,
    capped: bool,
}

impl SeededGenerator {
    /// Smallest b with b * 2^b >= t.
    pub fn field_bits_for(total_bits: u64) -> u32 {
        let mut b = 1u32;
        while (b as u64).saturating_mul(1u64 << b) < total_bits {
            b += 1;
        }
        b
    }

    pub fn new(total_bits: u64, k: u32, max_seed_bits: u32) -> Self {
        assert!(k >= 1);
        assert!(max_seed_bits >= 1 && max_seed_bits <= 63);
        let b = Self::field_bits_for(total_bits.max(1));
        let f = min_irreducible(b);
        let full = k.saturating_mul(b);
        let seed_bits = full.min(max_seed_bits);
        SeededGenerator {
            k,
            b,
            f,
            seed_bits,
            total_bits,
            capped: seed_bits < full,
        }
    }

    pub fn field_bits(&self) -> u32 {
        self.b
    }

    pub fn is_capped(&self) -> bool {
        self.capped
    }

    fn coefficients(&self, seed: u64) -> Vec<u64> {
        let mask = if self.b == 64 { u64::MAX } else { (1u64 << self.b) - 1 };
        if !self.capped {
            (0..self.k)
                .map(|i| (seed >> (i * self.b)) & mask)
                .collect()
        } else {
            // Affine in the seed: coefficient i starts from a fixed base
            // word, and each of its bits flips with the parity of the seed
            // against a fixed mask. Seed 0 yields the (pseudorandom) bases.
            let seed_mask = (1u64 << self.seed_bits) - 1;
            (0..self.k)
                .map(|i| {
                    let mut c = splitmix64(COEFF_BASE_SALT ^ i as u64) & mask;
                    for t in 0..self.b {
                        let m = splitmix64(COEFF_LIN_SALT ^ ((i * 64 + t) as u64)) & seed_mask;
                        c ^= (((seed & m).count_ones() & 1) as u64) << t;
                    }
                    c
                })
                .collect()
        }
    }

    fn eval(&self, coeffs: &[u64], x: u64) -> u64 {
        let mut acc = 0u64;
        for &c in coeffs.iter().rev() {
            acc = gf_mul(acc, x, self.f, self.b) ^ c;
        }
        acc
    }
}

const COEFF_BASE_SALT: u64 = 0xB45E_C0EF_F1C1_E475;
const COEFF_LIN_SALT: u64 = 0x11EA_12B1_75E7_5A17;

impl BitSource for SeededGenerator {
    fn seed_bits(&self) -> u32 {
        self.seed_bits
    }

    fn total_bits(&self) -> u64 {
        self.total_bits
    }

    fn bit(&self, seed: u64, index: u64) -> bool {
        debug_assert!(index < self.total_bits);
        let elem = index / self.b as u64;
        let bit = (index % self.b as u64) as u32;
        let coeffs = self.coefficients(seed);
        self.eval(&coeffs, elem) >> bit & 1 == 1
    }

    /// Both coefficient maps are affine over GF(2) in the seed, and the
    /// polynomial output is GF(2)-linear in its coefficients.
    fn is_affine(&self) -> bool {
        true
    }

    /// One polynomial evaluation per field element, b output bits at a time.
    fn fill_words(&self, seed: u64, words: &mut [u64]) {
        for w in words.iter_mut() {
            *w = 0;
        }
        let coeffs = self.coefficients(seed);
        let b = self.b as u64;
        let n_elems = self.total_bits.div_ceil(b);
        for elem in 0..n_elems {
            let y = self.eval(&coeffs, elem);
            let lo = elem * b;
            let take = b.min(self.total_bits - lo) as u32;
            // Scatter y's low `take` bits at string offset `lo`.
            let word = (lo / 64) as usize;
            let shift = (lo % 64) as u32;
            let val = if take == 64 { y } else { y & ((1u64 << take) - 1) };
            words[word] |= val << shift;
            if shift + take > 64 {
                words[word + 1] |= val >> (64 - shift);
            }
        }
    }
}

pub struct TrueRandomOracle {
    seed_bits: u32,
    total_bits: u64,
    rows: Vec<Vec<u8>>,
}

impl TrueRandomOracle {
    pub fn new(seed_bits: u32, total_bits: u64, entropy: u64) -> Self {
        assert!(seed_bits <= 20, "oracle table would need 2^{seed_bits} rows");
        let mut rng = ChaCha20Rng::seed_from_u64(entropy);
        let row_bytes = total_bits.div_ceil(8) as usize;
        let rows = (0..1usize << seed_bits)
            .map(|_| {
                let mut row = vec![0u8; row_bytes];
                rng.fill_bytes(&mut row);
                row
            })
            .collect();
        TrueRandomOracle {
            seed_bits,
            total_bits,
            rows,
        }
    }
}

impl BitSource for TrueRandomOracle {
    fn seed_bits(&self) -> u32 {
        self.seed_bits
    }

    fn total_bits(&self) -> u64 {
        self.total_bits
    }

    fn bit(&self, seed: u64, index: u64) -> bool {
        debug_assert!(index < self.total_bits);
        self.rows[seed as usize][(index / 8) as usize] >> (index % 8) & 1 == 1
    }

    fn fill_words(&self, seed: u64, words: &mut [u64]) {
        let row = &self.rows[seed as usize];
        for (i, w) in words.iter_mut().enumerate() {
            let mut v = 0u64;
            for (j, &byte) in row[i * 8..row.len().min(i * 8 + 8)].iter().enumerate() {
                v |= (byte as u64) << (8 * j);
            }
            *w = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// Polynomial generator; the production choice.
    Seeded,
    /// Frozen table of unstructured bits; for equivalence tests only.
    Oracle,
}

/// One constructor for both families, sized to the demand.
pub fn build_source(
    kind: SourceKind,
    total_bits: u64,
    k: u32,
    max_seed_bits: u32,
    entropy: u64,
) -> Box<dyn BitSource> {
    match kind {
        SourceKind::Seeded => Box::new(SeededGenerator::new(total_bits, k, max_seed_bits)),
        SourceKind::Oracle => Box::new(TrueRandomOracle::new(
            max_seed_bits.min(20),
            total_bits.max(1),
            entropy,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_basics() {
        // (x^2+1) mod (x+1) = 0 since x = 1 is a root
        assert_eq!(poly_rem(0b101, 0b11), 0);
        assert_eq!(poly_gcd(0b110, 0b100), 0b10); // gcd(x^2+x, x^2) = x
    }

    #[test]
    fn known_irreducibles() {
        assert_eq!(min_irreducible(1), 0b11); // x + 1
        assert_eq!(min_irreducible(2), 0b111); // x^2 + x + 1
        assert_eq!(min_irreducible(3), 0b1011); // x^3 + x + 1
        assert_eq!(min_irreducible(4), 0b10011); // x^4 + x + 1
        assert!(is_irreducible(0x11B, 8)); // x^8+x^4+x^3+x+1
        assert!(!is_irreducible(0x105, 8)); // x^8+x^2+1 = (x^4+x+1)^2
        // every reported modulus really is of the right degree
        for b in 1..=24 {
            let f = min_irreducible(b);
            assert_eq!(poly_deg(f), b as i32);
        }
    }

    #[test]
    fn field_width_is_minimal() {
        assert_eq!(SeededGenerator::field_bits_for(1), 1);
        assert_eq!(SeededGenerator::field_bits_for(2), 1);
        assert_eq!(SeededGenerator::field_bits_for(3), 2);
        assert_eq!(SeededGenerator::field_bits_for(8), 2);
        assert_eq!(SeededGenerator::field_bits_for(9), 3);
        assert_eq!(SeededGenerator::field_bits_for(24), 3);
        assert_eq!(SeededGenerator::field_bits_for(25), 4);
    }

    #[test]
    fn uncapped_pairwise_balance() {
        // Degree-1 polynomials over GF(8): bits taken from distinct field
        // elements must be exactly pairwise balanced across all 64 seeds.
        let gen = SeededGenerator::new(24, 2, 32);
        assert_eq!(gen.field_bits(), 3);
        assert_eq!(gen.seed_bits(), 6);
        assert!(!gen.is_capped());
        for &(i, j) in &[(0u64, 3u64), (1, 5), (2, 9), (4, 23)] {
            let mut counts = [0u32; 4];
            for seed in 0..64 {
                let a = gen.bit(seed, i) as usize;
                let b = gen.bit(seed, j) as usize;
                counts[a * 2 + b] += 1;
            }
            assert_eq!(counts, [16; 4], "positions {i},{j}");
        }
    }

    #[test]
    fn capped_seed_width() {
        let gen = SeededGenerator::new(1 << 20, 8, 16);
        assert_eq!(gen.seed_bits(), 16);
        assert!(gen.is_capped());
        // deterministic
        assert_eq!(gen.bit(12345, 678), gen.bit(12345, 678));
        // not constant
        let varied = (0..64u64).any(|i| gen.bit(7, i) != gen.bit(7, 0));
        assert!(varied);
    }

    fn words_of(src: &dyn BitSource, seed: u64) -> Vec<u64> {
        let mut w = vec![0u64; src.total_bits().div_ceil(64) as usize];
        src.fill_words(seed, &mut w);
        w
    }

    #[test]
    fn fill_words_matches_bit_by_bit() {
        let cases: Vec<Box<dyn BitSource>> = vec![
            Box::new(SeededGenerator::new(1000, 8, 12)),  // capped
            Box::new(SeededGenerator::new(24, 2, 32)),    // uncapped
            Box::new(TrueRandomOracle::new(6, 1000, 9)),
        ];
        for src in &cases {
            for seed in [0u64, 1, 5, (1 << src.seed_bits()) - 1] {
                let w = words_of(src.as_ref(), seed);
                for i in 0..src.total_bits() {
                    assert_eq!(
                        w[(i / 64) as usize] >> (i % 64) & 1 == 1,
                        src.bit(seed, i),
                        "seed {seed} bit {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn seeded_family_is_affine_in_the_seed() {
        for gen in [
            SeededGenerator::new(5000, 8, 12), // capped
            SeededGenerator::new(24, 2, 32),   // uncapped
        ] {
            assert!(gen.is_affine());
            let base = words_of(&gen, 0);
            let deltas: Vec<Vec<u64>> = (0..gen.seed_bits())
                .map(|j| {
                    let mut d = words_of(&gen, 1 << j);
                    for (x, b) in d.iter_mut().zip(&base) {
                        *x ^= b;
                    }
                    d
                })
                .collect();
            for seed in [3u64, 0b1011, (1 << gen.seed_bits()) - 1] {
                let mut composed = base.clone();
                for (j, d) in deltas.iter().enumerate() {
                    if seed >> j & 1 == 1 {
                        for (x, y) in composed.iter_mut().zip(d) {
                            *x ^= y;
                        }
                    }
                }
                assert_eq!(composed, words_of(&gen, seed), "seed {seed}");
            }
        }
    }

    #[test]
    fn oracle_shape_and_determinism() {
        let a = TrueRandomOracle::new(6, 100, 42);
        let b = TrueRandomOracle::new(6, 100, 42);
        assert_eq!(a.seed_bits(), 6);
        assert_eq!(a.total_bits(), 100);
        for seed in 0..64 {
            for i in (0..100).step_by(7) {
                assert_eq!(a.bit(seed, i), b.bit(seed, i));
            }
        }
        let c = TrueRandomOracle::new(6, 100, 43);
        let differs = (0..64u64).any(|s| (0..100).any(|i| a.bit(s, i) != c.bit(s, i)));
        assert!(differs);
    }
}
