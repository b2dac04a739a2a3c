//! Edmonds–Karp maximum flow over exact capacities.

use std::collections::VecDeque;
use std::ops::{Add, Sub};

use num_traits::Zero;

use crate::rational::Rational;

/// Capacity values: small integers for blowup networks, rationals for fractional ones.
pub trait Capacity: Clone + Ord + Zero + Add<Output = Self> + Sub<Output = Self> {}
impl Capacity for i64 {}
impl Capacity for Rational {}

#[derive(Clone, Debug)]
struct Arc<C> {
    to: usize,
    residual: C,
    original: C,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork<C> {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc<C>>,
}

impl<C: Capacity> FlowNetwork<C> {
    pub fn new(num_nodes: usize) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); num_nodes],
            arcs: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    /// Returns the arc index; its reverse is `index ^ 1`.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: C) -> usize {
        let idx = self.arcs.len();
        self.arcs.push(Arc {
            to,
            residual: cap.clone(),
            original: cap,
        });
        self.arcs.push(Arc {
            to: from,
            residual: C::zero(),
            original: C::zero(),
        });
        self.adj[from].push(idx);
        self.adj[to].push(idx + 1);
        idx
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len() / 2
    }

    pub fn arc_endpoints(&self, arc: usize) -> (usize, usize) {
        (self.arcs[arc ^ 1].to, self.arcs[arc].to)
    }

    pub fn capacity(&self, arc: usize) -> C {
        self.arcs[arc].original.clone()
    }

    pub fn flow(&self, arc: usize) -> C {
        self.arcs[arc].original.clone() - self.arcs[arc].residual.clone()
    }

    /// Disables an arc that carries no flow.
    pub fn disable_arc(&mut self, arc: usize) {
        debug_assert!(self.flow(arc).is_zero());
        self.arcs[arc].residual = C::zero();
        self.arcs[arc].original = C::zero();
    }

    fn bfs(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let mut pred = vec![usize::MAX; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let arc = &self.arcs[a];
                if !seen[arc.to] && arc.residual > C::zero() {
                    seen[arc.to] = true;
                    pred[arc.to] = a;
                    if arc.to == t {
                        let mut path = Vec::new();
                        let mut v = t;
                        while v != s {
                            let a = pred[v];
                            path.push(a);
                            v = self.arcs[a ^ 1].to;
                        }
                        return Some(path);
                    }
                    queue.push_back(arc.to);
                }
            }
        }
        None
    }

    /// One shortest augmenting path, saturating its bottleneck. Returns the amount pushed.
    pub fn augment_once(&mut self, s: usize, t: usize) -> Option<C> {
        let path = self.bfs(s, t)?;
        let mut bottleneck = self.arcs[path[0]].residual.clone();
        for &a in &path[1..] {
            if self.arcs[a].residual < bottleneck {
                bottleneck = self.arcs[a].residual.clone();
            }
        }
        for &a in &path {
            self.arcs[a].residual = self.arcs[a].residual.clone() - bottleneck.clone();
            self.arcs[a ^ 1].residual = self.arcs[a ^ 1].residual.clone() + bottleneck.clone();
        }
        Some(bottleneck)
    }

    /// Augments to a maximum flow; returns the value added by this call.
    pub fn max_flow(&mut self, s: usize, t: usize) -> C {
        let mut total = C::zero();
        if s == t {
            return total;
        }
        while let Some(pushed) = self.augment_once(s, t) {
            total = total + pushed;
        }
        total
    }

    /// Current flow value leaving `s`.
    pub fn value(&self, s: usize) -> C {
        let mut v = C::zero();
        for &a in &self.adj[s] {
            if a % 2 == 0 {
                v = v + self.flow(a);
            } else {
                v = v - self.flow(a ^ 1);
            }
        }
        v
    }

    /// Nodes that can still reach `t` in the residual network. After a maximum flow this is
    /// the smallest sink side of a minimum cut.
    pub fn reaches_sink(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[t] = true;
        let mut queue = VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[v] {
                // a leaves v; residual of its reverse a^1 is an arc u → v
                let u = self.arcs[a].to;
                if !seen[u] && self.arcs[a ^ 1].residual > C::zero() {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// Nodes reachable from `s` in the residual network.
    pub fn reachable_from(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let arc = &self.arcs[a];
                if !seen[arc.to] && arc.residual > C::zero() {
                    seen[arc.to] = true;
                    queue.push_back(arc.to);
                }
            }
        }
        seen
    }

    /// Total original capacity of arcs entering the node set `side` from outside.
    pub fn cut_capacity(&self, side: &[bool]) -> C {
        let mut total = C::zero();
        for a in (0..self.arcs.len()).step_by(2) {
            let (u, v) = self.arc_endpoints(a);
            if !side[u] && side[v] {
                total = total + self.arcs[a].original.clone();
            }
        }
        total
    }

    /// Forward arcs leaving `u`.
    pub fn arcs_from(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[u].iter().copied().filter(|a| a % 2 == 0)
    }
}
