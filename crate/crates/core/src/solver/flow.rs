//! Small max-flow solver over integer capacities, used to count disjoint
//! paths. Shortest augmenting paths (BFS); fine for the graph sizes the
//! diagnostics deal in.

pub(crate) struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u32>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    #[cfg(test)]
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Add a directed arc with the given capacity. The paired reverse arc
    /// (capacity 0) is created automatically; arc `i` and `i ^ 1` are
    /// residual partners.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: u32) {
        let idx = self.to.len();
        self.to.push(to);
        self.cap.push(cap);
        self.adj[from].push(idx);
        self.to.push(from);
        self.cap.push(0);
        self.adj[to].push(idx + 1);
    }

    /// Maximum flow from `s` to `t`, stopping early once `limit` is reached.
    pub fn max_flow(&mut self, s: usize, t: usize, limit: u32) -> u32 {
        let mut total = 0;
        let mut pred: Vec<Option<usize>> = vec![None; self.adj.len()];
        let mut queue = std::collections::VecDeque::new();
        while total < limit {
            pred.iter_mut().for_each(|p| *p = None);
            queue.clear();
            queue.push_back(s);
            'bfs: while let Some(v) = queue.pop_front() {
                for &arc in &self.adj[v] {
                    let w = self.to[arc];
                    if self.cap[arc] > 0 && pred[w].is_none() && w != s {
                        pred[w] = Some(arc);
                        if w == t {
                            break 'bfs;
                        }
                        queue.push_back(w);
                    }
                }
            }
            let Some(_) = pred[t] else { break };
            let mut bottleneck = limit - total;
            let mut v = t;
            while v != s {
                let arc = pred[v].unwrap();
                bottleneck = bottleneck.min(self.cap[arc]);
                v = self.to[arc ^ 1];
            }
            let mut v = t;
            while v != s {
                let arc = pred[v].unwrap();
                self.cap[arc] -= bottleneck;
                self.cap[arc ^ 1] += bottleneck;
                v = self.to[arc ^ 1];
            }
            total += bottleneck;
        }
        total
    }
}
