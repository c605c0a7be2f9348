//! Maximum cardinality matching in general graphs (Edmonds' blossom algorithm).

use std::collections::VecDeque;

/// Returns `mate[v]` for every vertex, `None` when unmatched.
///
/// Vertices are visited in index order and neighbor lists are scanned in the
/// order given, so the result is deterministic for a fixed input.
pub fn maximum_matching(n: usize, adjacency: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut m = Matcher {
        adj: adjacency,
        mate: vec![None; n],
        parent: vec![None; n],
        base: (0..n).collect(),
        used: vec![false; n],
        blossom: vec![false; n],
    };
    for root in 0..n {
        if m.mate[root].is_none() {
            if let Some(end) = m.find_path(root) {
                m.augment(end);
            }
        }
    }
    m.mate
}

struct Matcher<'a> {
    adj: &'a [Vec<usize>],
    mate: Vec<Option<usize>>,
    parent: Vec<Option<usize>>,
    base: Vec<usize>,
    used: Vec<bool>,
    blossom: Vec<bool>,
}

impl Matcher<'_> {
    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; self.mate.len()];
        loop {
            a = self.base[a];
            seen[a] = true;
            match self.mate[a] {
                Some(m) => a = self.parent[m].expect("alternating tree parent"),
                None => break,
            }
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            let m = self.mate[b].expect("path reaches the root");
            b = self.parent[m].expect("alternating tree parent");
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            let m = self.mate[v].expect("matched vertex on blossom path");
            self.blossom[self.base[v]] = true;
            self.blossom[self.base[m]] = true;
            self.parent[v] = Some(child);
            child = m;
            v = self.parent[m].expect("alternating tree parent");
        }
    }

    fn find_path(&mut self, root: usize) -> Option<usize> {
        let n = self.mate.len();
        self.used.iter_mut().for_each(|u| *u = false);
        self.parent.iter_mut().for_each(|p| *p = None);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        let mut queue = VecDeque::from([root]);
        let adj = self.adj;
        while let Some(v) = queue.pop_front() {
            for &to in &adj[v] {
                if self.base[v] == self.base[to] || self.mate[v] == Some(to) {
                    continue;
                }
                let to_is_outer =
                    to == root || self.mate[to].is_some_and(|m| self.parent[m].is_some());
                if to_is_outer {
                    let cur = self.lca(v, to);
                    self.blossom.iter_mut().for_each(|b| *b = false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to].is_none() {
                    self.parent[to] = Some(v);
                    match self.mate[to] {
                        None => return Some(to),
                        Some(m) => {
                            self.used[m] = true;
                            queue.push_back(m);
                        }
                    }
                }
            }
        }
        None
    }

    fn augment(&mut self, end: usize) {
        let mut v = Some(end);
        while let Some(x) = v {
            let pv = self.parent[x].expect("augmenting path parent");
            let ppv = self.mate[pv];
            self.mate[x] = Some(pv);
            self.mate[pv] = Some(x);
            v = ppv;
        }
    }
}
