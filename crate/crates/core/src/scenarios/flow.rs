//! Integer maximum flow (Edmonds-Karp).

use std::collections::VecDeque;

pub(crate) struct FlowNet {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u64>,
    orig: Vec<u64>,
}

impl FlowNet {
    pub(crate) fn new(nodes: usize) -> Self {
        FlowNet {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            orig: Vec::new(),
        }
    }

    /// Adds `u -> v` and returns its handle for [`FlowNet::flow`].
    pub(crate) fn add(&mut self, u: usize, v: usize, cap: u64) -> usize {
        let id = self.to.len();
        for (a, b, c) in [(u, v, cap), (v, u, 0)] {
            self.adj[a].push(self.to.len());
            self.to.push(b);
            self.cap.push(c);
            self.orig.push(c);
        }
        id
    }

    pub(crate) fn flow(&self, id: usize) -> u64 {
        self.orig[id] - self.cap[id]
    }

    pub(crate) fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut total = 0;
        loop {
            let mut pred = vec![usize::MAX; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            while let Some(v) = queue.pop_front() {
                for &e in &self.adj[v] {
                    let w = self.to[e];
                    if !seen[w] && self.cap[e] > 0 {
                        seen[w] = true;
                        pred[w] = e;
                        queue.push_back(w);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut push = u64::MAX;
            let mut v = t;
            while v != s {
                let e = pred[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = pred[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            total += push;
        }
    }
}
