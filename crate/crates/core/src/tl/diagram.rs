//! Planar pairings of boundary points in a rectangle.
//!
//! A diagram in Hom(m, n) has `m` top points (indices `0..m`, left to right)
//! and `n` bottom points (indices `m..m+n`, left to right). Composition
//! `a ∘ b` stacks `b` on top of `a`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TlDiagram {
    m: usize,
    n: usize,
    pairing: Vec<u8>,
}

impl TlDiagram {
    /// Validate and build a diagram from its involution array.
    pub fn new(m: usize, n: usize, pairing: Vec<u8>) -> Result<Self> {
        let total = m + n;
        if pairing.len() != total || total % 2 == 1 || total > 254 {
            return Err(Error::SignatureMismatch(format!(
                "pairing of length {} for signature ({m},{n})",
                pairing.len()
            )));
        }
        for (i, &p) in pairing.iter().enumerate() {
            let p = p as usize;
            if p >= total || p == i || pairing[p] as usize != i {
                return Err(Error::InvariantViolation(format!("pairing is not a fixed-point-free involution at {i}")));
            }
        }
        let d = TlDiagram { m, n, pairing };
        if !d.is_planar() {
            return Err(Error::InvariantViolation("pairing is not planar".into()));
        }
        Ok(d)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairing(&self) -> &[u8] {
        &self.pairing
    }

    pub fn partner(&self, i: usize) -> usize {
        self.pairing[i] as usize
    }

    /// Position of boundary point `i` when walking the rectangle clockwise
    /// from the top-left corner.
    fn circle_pos(&self, i: usize) -> usize {
        if i < self.m {
            i
        } else {
            self.m + (self.n - 1 - (i - self.m))
        }
    }

    fn from_circle_pos(m: usize, n: usize, p: usize) -> usize {
        if p < m {
            p
        } else {
            m + (n - 1 - (p - m))
        }
    }

    /// Balanced-parenthesis test in boundary order.
    pub fn is_planar(&self) -> bool {
        let total = self.m + self.n;
        let mut at = vec![0usize; total];
        for i in 0..total {
            at[self.circle_pos(i)] = i;
        }
        let mut stack = Vec::new();
        for pos in 0..total {
            let i = at[pos];
            let j = self.partner(i);
            if self.circle_pos(j) > pos {
                stack.push(i);
            } else if stack.pop() != Some(j) {
                return false;
            }
        }
        stack.is_empty()
    }

    pub fn identity(n: usize) -> Self {
        let mut p = vec![0u8; 2 * n];
        for i in 0..n {
            p[i] = (n + i) as u8;
            p[n + i] = i as u8;
        }
        TlDiagram { m: n, n, pairing: p }
    }

    /// The arc in Hom(0, 2).
    pub fn cap() -> Self {
        TlDiagram { m: 0, n: 2, pairing: vec![1, 0] }
    }

    /// The arc in Hom(2, 0).
    pub fn cup() -> Self {
        TlDiagram { m: 2, n: 0, pairing: vec![1, 0] }
    }

    /// Generator U_i in TL_n (1-based `i`, joins strands i and i+1 on both sides).
    pub fn u(n: usize, i: usize) -> Self {
        assert!(i >= 1 && i < n, "U_{i} undefined in TL_{n}");
        let mut d = TlDiagram::identity(n);
        let (a, b) = (i - 1, i);
        d.pairing[a] = b as u8;
        d.pairing[b] = a as u8;
        d.pairing[n + a] = (n + b) as u8;
        d.pairing[n + b] = (n + a) as u8;
        d
    }

    pub fn is_identity(&self) -> bool {
        self.m == self.n && (0..self.m).all(|i| self.partner(i) == self.m + i)
    }

    /// Number of strands connecting top to bottom.
    pub fn through_strands(&self) -> usize {
        (0..self.m).filter(|&i| self.partner(i) >= self.m).count()
    }

    /// All planar pairings of Hom(m, n) in a fixed order.
    pub fn enumerate(m: usize, n: usize) -> Vec<TlDiagram> {
        let total = m + n;
        if total % 2 == 1 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut circ = vec![0u8; total];
        enumerate_matchings(&mut circ, 0, total, &mut |c: &[u8]| {
            let mut p = vec![0u8; total];
            for pos in 0..total {
                let i = TlDiagram::from_circle_pos(m, n, pos);
                let j = TlDiagram::from_circle_pos(m, n, c[pos] as usize);
                p[i] = j as u8;
            }
            out.push(TlDiagram { m, n, pairing: p });
        });
        out
    }

    /// Stack `b` (Hom(l, m)) on top of `self` (Hom(m, n)); returns the
    /// diagram in Hom(l, n) and the number of closed loops removed.
    pub fn compose(&self, b: &TlDiagram) -> Result<(TlDiagram, usize)> {
        if b.n != self.m {
            return Err(Error::SignatureMismatch(format!(
                "compose Hom({},{}) after Hom({},{})",
                self.m, self.n, b.m, b.n
            )));
        }
        Ok(self.compose_unchecked(b))
    }

    pub(crate) fn compose_unchecked(&self, b: &TlDiagram) -> (TlDiagram, usize) {
        let a = self;
        let (l, m, n) = (b.m, b.n, a.n);
        let mut out = vec![0u8; l + n];
        let mut mid_seen = vec![false; m];
        // Walk from an outer point until we exit on another outer point.
        // Positions: outer top k < l is b's point k; outer bottom k is a's point m+k.
        let trace = |start_in_b: bool, start: usize, mid_seen: &mut Vec<bool>| -> usize {
            let (mut in_b, mut pt) = (start_in_b, start);
            loop {
                if in_b {
                    let q = b.partner(pt);
                    if q < l {
                        return q;
                    }
                    let mid = q - l;
                    mid_seen[mid] = true;
                    in_b = false;
                    pt = mid;
                } else {
                    let q = a.partner(pt);
                    if q >= m {
                        return l + (q - m);
                    }
                    mid_seen[q] = true;
                    in_b = true;
                    pt = l + q;
                }
            }
        };
        let mut done = vec![false; l + n];
        for k in 0..l + n {
            if done[k] {
                continue;
            }
            let j = if k < l { trace(true, k, &mut mid_seen) } else { trace(false, m + (k - l), &mut mid_seen) };
            out[k] = j as u8;
            out[j] = k as u8;
            done[k] = true;
            done[j] = true;
        }
        // Remaining middle points lie on closed loops.
        let mut loops = 0;
        for s in 0..m {
            if mid_seen[s] {
                continue;
            }
            loops += 1;
            let mut cur = s;
            loop {
                mid_seen[cur] = true;
                // Down through a from its top point `cur`, then back up through b.
                let q = a.partner(cur);
                debug_assert!(q < m);
                mid_seen[q] = true;
                let r = b.partner(l + q) - l;
                if r == s {
                    break;
                }
                cur = r;
            }
        }
        (TlDiagram { m: l, n, pairing: out }, loops)
    }

    /// Horizontal juxtaposition with `self` on the left.
    pub fn tensor(&self, b: &TlDiagram) -> TlDiagram {
        let (m1, n1, m2, n2) = (self.m, self.n, b.m, b.n);
        let m = m1 + m2;
        let n = n1 + n2;
        // Map old index to new index.
        let map_a = |i: usize| if i < m1 { i } else { m + (i - m1) };
        let map_b = |i: usize| if i < m2 { m1 + i } else { m + n1 + (i - m2) };
        let mut p = vec![0u8; m + n];
        for i in 0..m1 + n1 {
            p[map_a(i)] = map_a(self.partner(i)) as u8;
        }
        for i in 0..m2 + n2 {
            p[map_b(i)] = map_b(b.partner(i)) as u8;
        }
        TlDiagram { m, n, pairing: p }
    }

    /// Reflection in a horizontal line: Hom(m, n) → Hom(n, m).
    pub fn bar(&self) -> TlDiagram {
        let (m, n) = (self.m, self.n);
        // top i ↦ bottom i (index n+i); bottom j ↦ top j.
        let map = |i: usize| if i < m { n + i } else { i - m };
        let mut p = vec![0u8; m + n];
        for i in 0..m + n {
            p[map(i)] = map(self.partner(i)) as u8;
        }
        TlDiagram { m: n, n: m, pairing: p }
    }

    /// Loops formed by joining top point i to bottom point i.
    pub fn trace_loops(&self) -> Result<usize> {
        if self.m != self.n {
            return Err(Error::SignatureMismatch(format!("trace of Hom({},{})", self.m, self.n)));
        }
        let n = self.n;
        let mut seen = vec![false; 2 * n];
        let mut loops = 0;
        for s in 0..2 * n {
            if seen[s] {
                continue;
            }
            loops += 1;
            let mut cur = s;
            loop {
                seen[cur] = true;
                let q = self.partner(cur);
                seen[q] = true;
                // Closure strand joins top k with bottom n+k.
                let next = if q < n { q + n } else { q - n };
                if seen[next] {
                    break;
                }
                cur = next;
            }
        }
        Ok(loops)
    }
}

/// Noncrossing perfect matchings of positions `lo..hi`; the first point of
/// each open interval is matched in increasing order of partner.
fn enumerate_matchings(c: &mut Vec<u8>, lo: usize, hi: usize, emit: &mut dyn FnMut(&[u8])) {
    fn go(c: &mut Vec<u8>, stack: &mut Vec<(usize, usize)>, emit: &mut dyn FnMut(&[u8])) {
        let Some((lo, hi)) = stack.pop() else {
            emit(c);
            return;
        };
        if lo >= hi {
            go(c, stack, emit);
            stack.push((lo, hi));
            return;
        }
        let mut k = lo + 1;
        while k < hi {
            c[lo] = k as u8;
            c[k] = lo as u8;
            stack.push((k + 1, hi));
            stack.push((lo + 1, k));
            go(c, stack, emit);
            stack.pop();
            stack.pop();
            k += 2;
        }
        stack.push((lo, hi));
    }
    let mut stack = vec![(lo, hi)];
    go(c, &mut stack, emit);
}

impl fmt::Debug for TlDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D({},{}:{:?})", self.m, self.n, self.pairing)
    }
}

/// Catalan numbers as u128.
pub fn catalan(k: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_enumeration_counts() {
        assert_eq!(TlDiagram::enumerate(3, 3).len(), 5);
        assert!(TlDiagram::enumerate(1, 2).is_empty());
        assert_eq!(TlDiagram::enumerate(0, 4).len(), 2);
        for (m, n) in [(2, 4), (4, 4), (5, 3), (0, 10)] {
            let ds = TlDiagram::enumerate(m, n);
            assert_eq!(ds.len() as u128, catalan((m + n) / 2));
            for d in &ds {
                assert!(TlDiagram::new(m, n, d.pairing().to_vec()).is_ok());
            }
            let set: std::collections::HashSet<_> = ds.iter().collect();
            assert_eq!(set.len(), ds.len());
        }
    }

    #[test]
    fn test_crossing_rejected() {
        // Top 0 ↔ bottom 1 and top 1 ↔ bottom 0 cross.
        assert!(TlDiagram::new(2, 2, vec![3, 2, 1, 0]).is_err());
        assert!(TlDiagram::new(2, 2, vec![2, 3, 0, 1]).is_ok());
    }

    #[test]
    fn test_basic_compositions() {
        let u1 = TlDiagram::u(2, 1);
        let (r, loops) = u1.compose(&u1).unwrap();
        assert_eq!((r, loops), (u1.clone(), 1));
        let (a, b) = (TlDiagram::u(3, 1), TlDiagram::u(3, 2));
        let (ab, l1) = a.compose(&b).unwrap();
        let (aba, l2) = ab.compose(&a).unwrap();
        assert_eq!((aba, l1 + l2), (a.clone(), 0));
        let (e, loops) = TlDiagram::cup().compose(&TlDiagram::cap()).unwrap();
        assert_eq!((e.m(), e.n(), loops), (0, 0, 1));
        let (u, loops) = TlDiagram::cap().compose(&TlDiagram::cup()).unwrap();
        assert_eq!((u, loops), (TlDiagram::u(2, 1), 0));
    }

    #[test]
    fn test_tensor_and_bar() {
        assert_eq!(TlDiagram::identity(2).tensor(&TlDiagram::identity(3)), TlDiagram::identity(5));
        assert_eq!(TlDiagram::u(2, 1).tensor(&TlDiagram::identity(1)), TlDiagram::u(3, 1));
        let cc = TlDiagram::cap().tensor(&TlDiagram::cap());
        assert_eq!(cc.pairing(), &[1, 0, 3, 2]);
        assert_eq!(TlDiagram::cap().bar(), TlDiagram::cup());
        assert_eq!(TlDiagram::identity(3).bar(), TlDiagram::identity(3));
    }

    #[test]
    fn test_trace_loops() {
        assert_eq!(TlDiagram::identity(2).trace_loops().unwrap(), 2);
        assert_eq!(TlDiagram::u(3, 1).trace_loops().unwrap(), 2);
        assert_eq!(TlDiagram::u(2, 1).trace_loops().unwrap(), 1);
    }
}
