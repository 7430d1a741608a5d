//! Segment tree over free soup cells for first-fit gap queries.

/// Per node: free-run length at the left edge, at the right edge and the
/// longest run inside. Padding leaves past the soup count as occupied.
#[derive(Clone, Debug)]
pub struct FreeIndex {
    n: usize,
    size: usize,
    pref: Vec<u32>,
    suf: Vec<u32>,
    best: Vec<u32>,
}

impl FreeIndex {
    pub fn new(n: usize) -> Self {
        Self::from_fn(n, |_| true)
    }

    pub fn from_fn(n: usize, free: impl Fn(usize) -> bool) -> Self {
        let size = n.next_power_of_two().max(1);
        let mut ix =
            FreeIndex { n, size, pref: vec![0; 2 * size], suf: vec![0; 2 * size], best: vec![0; 2 * size] };
        for i in 0..n {
            let v = free(i) as u32;
            ix.pref[size + i] = v;
            ix.suf[size + i] = v;
            ix.best[size + i] = v;
        }
        for node in (1..size).rev() {
            ix.pull(node);
        }
        ix
    }

    #[inline]
    fn half_len(&self, node: usize) -> u32 {
        // children of `node` each cover size >> (depth + 1) cells
        (self.size >> (usize::BITS - 1 - node.leading_zeros() + 1)) as u32
    }

    #[inline]
    fn pull(&mut self, node: usize) {
        let (l, r) = (2 * node, 2 * node + 1);
        let half = self.half_len(node);
        self.pref[node] = if self.pref[l] == half { half + self.pref[r] } else { self.pref[l] };
        self.suf[node] = if self.suf[r] == half { half + self.suf[l] } else { self.suf[r] };
        self.best[node] = self.best[l].max(self.best[r]).max(self.suf[l] + self.pref[r]);
    }

    /// Marks cells `lo..hi` (no wrap) free or occupied.
    pub fn set_range(&mut self, lo: usize, hi: usize, free: bool) {
        if lo >= hi {
            return;
        }
        let v = free as u32;
        for i in lo..hi {
            let leaf = self.size + i;
            self.pref[leaf] = v;
            self.suf[leaf] = v;
            self.best[leaf] = v;
        }
        let (mut a, mut b) = ((self.size + lo) >> 1, (self.size + hi - 1) >> 1);
        while a >= 1 {
            for node in a..=b {
                self.pull(node);
            }
            a >>= 1;
            b >>= 1;
        }
    }

    /// Leftmost `s >= lo` with cells `s..s + need` free and inside the soup.
    pub fn first_window(&self, lo: usize, need: u32) -> Option<usize> {
        if need == 0 || lo >= self.n {
            return None;
        }
        let mut carry = 0u32;
        self.visit(1, 0, self.size, lo, need, &mut carry)
    }

    fn visit(&self, node: usize, start: usize, len: usize, lo: usize, need: u32, carry: &mut u32) -> Option<usize> {
        if start + len <= lo {
            return None;
        }
        if start >= lo {
            if *carry + self.pref[node] >= need {
                return Some(start - *carry as usize);
            }
            if self.best[node] < need {
                *carry = if self.pref[node] as usize == len { *carry + len as u32 } else { self.suf[node] };
                return None;
            }
        }
        let half = len / 2;
        self.visit(2 * node, start, half, lo, need, carry)
            .or_else(|| self.visit(2 * node + 1, start + half, half, lo, need, carry))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(free: &[bool], lo: usize, need: usize) -> Option<usize> {
        (lo..free.len()).find(|&s| s + need <= free.len() && free[s..s + need].iter().all(|&f| f))
    }

    #[test]
    fn agrees_with_scan_under_updates() {
        let mut rng = crate::RngStream::new(9, "test");
        for n in [1usize, 5, 37, 64, 100] {
            let mut free = vec![true; n];
            let mut ix = FreeIndex::new(n);
            for _ in 0..400 {
                let a = rng.below(n as u64) as usize;
                let b = (a + 1 + rng.below(8) as usize).min(n);
                let f = rng.bernoulli(0.5);
                free[a..b].iter_mut().for_each(|x| *x = f);
                ix.set_range(a, b, f);
                let lo = rng.below(n as u64) as usize;
                let need = 1 + rng.below(12) as usize;
                assert_eq!(ix.first_window(lo, need as u32), naive(&free, lo, need), "n {n} lo {lo} need {need}");
            }
        }
    }
}
