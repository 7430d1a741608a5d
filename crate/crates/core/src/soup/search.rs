//! Template addressing.
//!
//! A template is the run of nop0/nop1 cells following an instruction. A
//! search looks for the complemented pattern (nop0 <-> nop1):
//!
//! * forward candidates start at `from + 1 + len + d`, `d` in `0..limit`;
//!   the reported address is one past the match's last cell;
//! * backward candidates start at `from - d`, `d` in `1..=limit`; the
//!   reported address is the match's first cell;
//! * nearest takes the smaller `d`, ties going forward.
//!
//! `limit` is `min(search_limit, soup_size)` and addresses wrap.

/// Longest template read after an instruction.
pub const MAX_TEMPLATE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
    Nearest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Found {
    /// First cell of the matching pattern.
    pub start: usize,
    pub len: usize,
    pub forward: bool,
    pub distance: usize,
}

impl Found {
    /// The search result address: one past the match going forward, the
    /// match start going backward.
    pub fn address(&self, soup_size: usize) -> usize {
        if self.forward {
            (self.start + self.len) % soup_size
        } else {
            self.start
        }
    }

    pub fn one_past(&self, soup_size: usize) -> usize {
        (self.start + self.len) % soup_size
    }
}

/// Reads the template following the instruction at `ip`, capped at
/// [`MAX_TEMPLATE`] cells (and at `soup.len() - 1`).
#[inline]
pub fn read_template(soup: &[u8], ip: usize, out: &mut [u8; MAX_TEMPLATE]) -> usize {
    let n = soup.len();
    let cap = MAX_TEMPLATE.min(n - 1);
    let mut len = 0;
    let mut a = ip + 1;
    while len < cap {
        if a >= n {
            a -= n;
        }
        let c = soup[a];
        if c > 1 {
            break;
        }
        out[len] = c;
        len += 1;
        a += 1;
    }
    len
}

#[inline(always)]
fn window_eq(soup: &[u8], s: usize, pat: &[u8]) -> bool {
    let n = soup.len();
    if s + pat.len() <= n {
        soup[s..s + pat.len()].iter().zip(pat).all(|(a, b)| a == b)
    } else {
        pat.iter().enumerate().all(|(i, &p)| soup[(s + i) % n] == p)
    }
}

/// Smallest `d < count` with the pattern at `base + d`.
fn scan_forward(soup: &[u8], base: usize, count: usize, pat: &[u8]) -> Option<usize> {
    let n = soup.len();
    let first = pat[0];
    for d in 0..count {
        let mut s = base + d;
        if s >= n {
            s -= n;
        }
        if soup[s] == first && window_eq(soup, s, pat) {
            return Some(d);
        }
    }
    None
}

/// Smallest `d` in `1..=max_d` with the pattern at `from - d`.
fn scan_backward(soup: &[u8], from: usize, max_d: usize, pat: &[u8]) -> Option<usize> {
    let n = soup.len();
    let first = pat[0];
    for d in 1..=max_d {
        let s = if d <= from { from - d } else { from + n - d };
        if soup[s] == first && window_eq(soup, s, pat) {
            return Some(d);
        }
    }
    None
}

/// Searches for the complement of `template` relative to the instruction at
/// `from`. Returns `None` for an empty template or when nothing matches
/// within the search limit.
pub fn template_search(
    soup: &[u8],
    from: usize,
    direction: Direction,
    template: &[u8],
    search_limit: usize,
) -> Option<Found> {
    let n = soup.len();
    let len = template.len();
    if len == 0 || n == 0 || len > MAX_TEMPLATE {
        return None;
    }
    let mut pat = [0u8; MAX_TEMPLATE];
    for (p, &t) in pat.iter_mut().zip(template) {
        *p = t ^ 1;
    }
    let pat = &pat[..len];
    let limit = search_limit.min(n);
    let from = from % n;
    let fwd_base = (from + 1 + len) % n;
    let forward = |d: usize| Found { start: (fwd_base + d) % n, len, forward: true, distance: d };
    let backward = |d: usize| Found { start: (from + n - d % n) % n, len, forward: false, distance: d };
    match direction {
        Direction::Forward => scan_forward(soup, fwd_base, limit, pat).map(forward),
        Direction::Backward => scan_backward(soup, from, limit, pat).map(backward),
        Direction::Nearest => {
            let f = scan_forward(soup, fwd_base, limit, pat);
            // ties go forward, so only a strictly closer backward match wins
            let max_b = f.map_or(limit, |d| d.saturating_sub(1).min(limit));
            match scan_backward(soup, from, max_b, pat) {
                Some(d) => Some(backward(d)),
                None => f.map(forward),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_template_not_found() {
        let soup = vec![0u8; 32];
        assert_eq!(template_search(&soup, 0, Direction::Forward, &[], 32), None);
    }

    #[test]
    fn forward_at_distance_five() {
        let mut soup = vec![9u8; 40];
        // instruction at 0, template 0 1 at 1..3, forward scan starts at 3
        soup[1] = 0;
        soup[2] = 1;
        soup[8] = 1;
        soup[9] = 0;
        let f = template_search(&soup, 0, Direction::Forward, &[0, 1], 64).unwrap();
        assert_eq!(f.start, 8);
        assert_eq!(f.distance, 5);
        assert_eq!(f.address(40), 10);
    }

    #[test]
    fn backward_returns_start() {
        let mut soup = vec![9u8; 40];
        soup[20] = 1;
        soup[21] = 1;
        let f = template_search(&soup, 30, Direction::Backward, &[0, 0], 64).unwrap();
        assert_eq!(f.address(40), 20);
        assert_eq!(f.distance, 10);
    }

    #[test]
    fn nearest_tie_goes_forward() {
        let mut soup = vec![9u8; 64];
        // from = 20, template len 1 at 21; forward base 22
        soup[21] = 0;
        soup[25] = 1; // forward d = 3
        soup[17] = 1; // backward d = 3
        let f = template_search(&soup, 20, Direction::Nearest, &[0], 64).unwrap();
        assert!(f.forward);
        assert_eq!(f.start, 25);
    }

    #[test]
    fn no_complement_anywhere() {
        let soup = vec![0u8; 50];
        assert_eq!(template_search(&soup, 3, Direction::Nearest, &[0, 0, 0], 1024), None);
    }

    #[test]
    fn search_limit_bounds_distance() {
        let mut soup = vec![9u8; 100];
        soup[50] = 1;
        assert!(template_search(&soup, 0, Direction::Forward, &[0], 10).is_none());
        assert!(template_search(&soup, 0, Direction::Forward, &[0], 100).is_some());
    }

    #[test]
    fn template_reading_caps() {
        let soup = vec![0u8; 64];
        let mut t = [0u8; MAX_TEMPLATE];
        assert_eq!(read_template(&soup, 5, &mut t), MAX_TEMPLATE);
        let soup = vec![2u8, 1, 0, 1, 7];
        assert_eq!(read_template(&soup, 0, &mut t), 3);
        assert_eq!(&t[..3], &[1, 0, 1]);
    }
}
