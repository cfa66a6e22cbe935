//! Dense GF(2) matrices packed 64 bits per word, and an incremental
//! elimination basis used by the erasure decoder.

use rand::Rng;

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Row-major binary matrix; each row occupies `stride` words and the bits
/// past `cols` in the last word are kept zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    /// Independent fair bits.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.words.iter_mut().for_each(|w| *w = rng.random());
        m.clear_padding();
        m
    }

    fn clear_padding(&mut self) {
        let tail = self.cols % WORD;
        if tail != 0 {
            let mask = (1u64 << tail) - 1;
            for r in 0..self.rows {
                self.words[r * self.stride + self.stride - 1] &= mask;
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.words[r * self.stride..(r + 1) * self.stride]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        self.words[r * self.stride + c / WORD] >> (c % WORD) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, bit: bool) {
        assert!(r < self.rows && c < self.cols);
        let w = &mut self.words[r * self.stride + c / WORD];
        let mask = 1u64 << (c % WORD);
        if bit {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        let mut basis = XorBasis::new(self.cols, self.cols);
        let mut buf = vec![0; self.stride];
        for r in 0..self.rows {
            buf.copy_from_slice(self.row(r));
            basis.insert(&mut buf);
        }
        basis.rank()
    }
}

/// Parity of the bitwise AND of two packed vectors.
pub fn dot(a: &[u64], b: &[u64]) -> bool {
    a.iter()
        .zip(b)
        .fold(0u32, |acc, (x, y)| acc ^ (x & y).count_ones())
        & 1
        == 1
}

/// Echelon basis of packed vectors of `width` bits. Only the first `key`
/// bits are eliminated; any bits above them ride along as a payload.
/// Stored vectors have their lowest key bit as pivot and no key bits below
/// it.
#[derive(Clone, Debug)]
pub struct XorBasis {
    key: usize,
    stride: usize,
    slot: Vec<Option<usize>>,
    store: Vec<u64>,
    rank: usize,
}

impl XorBasis {
    pub fn new(width: usize, key: usize) -> Self {
        assert!(key <= width);
        let stride = words_for(width).max(1);
        XorBasis {
            key,
            stride,
            slot: vec![None; key],
            store: Vec::with_capacity(key * stride),
            rank: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full(&self) -> bool {
        self.rank == self.key
    }

    fn stored(&self, s: usize) -> &[u64] {
        &self.store[s * self.stride..(s + 1) * self.stride]
    }

    /// Reduces `v` in place; returns whether it extended the span.
    pub fn insert(&mut self, v: &mut [u64]) -> bool {
        debug_assert_eq!(v.len(), self.stride);
        let mut w = 0;
        loop {
            while w < self.stride && v[w] == 0 {
                w += 1;
            }
            if w == self.stride {
                return false;
            }
            let bit = w * WORD + v[w].trailing_zeros() as usize;
            if bit >= self.key {
                return false;
            }
            match self.slot[bit] {
                Some(s) => {
                    let row = &self.store[s * self.stride..(s + 1) * self.stride];
                    for (x, y) in v[w..].iter_mut().zip(&row[w..]) {
                        *x ^= y;
                    }
                }
                None => {
                    self.slot[bit] = Some(self.store.len() / self.stride);
                    self.store.extend_from_slice(v);
                    self.rank += 1;
                    return true;
                }
            }
        }
    }

    /// For a full-rank basis of augmented rows `[a | y]` with `y` at bit
    /// `key`, the unique `x` with `a . x = y` for every inserted row.
    pub fn solve(&self) -> Option<Vec<u64>> {
        if !self.is_full() {
            return None;
        }
        let mut x = vec![0u64; words_for(self.key).max(1)];
        let rhs_word = self.key / WORD;
        let rhs_bit = self.key % WORD;
        for p in (0..self.key).rev() {
            let row = self.stored(self.slot[p]?);
            let y = rhs_word < self.stride && row[rhs_word] >> rhs_bit & 1 == 1;
            // x only has bits above p set, and never the payload bit.
            if y ^ dot(&row[..x.len()], &x) {
                x[p / WORD] |= 1 << (p % WORD);
            }
        }
        Some(x)
    }
}
