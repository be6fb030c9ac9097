//! Dense bit vectors over the two-element field.

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(index);
        v
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.words[index / 64] >> (index % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: usize) {
        self.words[index / 64] |= 1 << (index % 64);
    }

    #[inline]
    pub fn flip(&mut self, index: usize) {
        self.words[index / 64] ^= 1 << (index % 64);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the lowest set bit.
    pub fn pivot(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

/// Column-major matrix over GF(2); `cols[j]` has length `rows`.
#[derive(Debug, Clone)]
pub(crate) struct BitMatrix {
    pub rows: usize,
    pub cols: Vec<BitVec>,
}

impl BitMatrix {
    /// Matrix-vector product.
    pub fn apply(&self, x: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.rows);
        for j in x.ones() {
            out.xor_assign(&self.cols[j]);
        }
        out
    }
}
