/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    #[inline]
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Merges the sets of `a` and `b`, returning the new representative.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        ra
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unions_connect() {
        let mut s = DisjointSets::new(5);
        s.union(0, 1);
        s.union(3, 4);
        assert_eq!(s.find(0), s.find(1));
        assert_ne!(s.find(1), s.find(3));
        s.union(1, 4);
        assert_eq!(s.find(0), s.find(3));
        assert_ne!(s.find(2), s.find(0));
    }
}
