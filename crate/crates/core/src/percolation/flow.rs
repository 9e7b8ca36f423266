use std::collections::VecDeque;

/// Unit-capacity max-flow (Dinic) with an iterative blocking-flow search.
#[derive(Debug, Clone)]
pub(crate) struct UnitFlow {
    head: Vec<u32>,
    next: Vec<u32>,
    to: Vec<u32>,
    cap: Vec<u8>,
    level: Vec<i32>,
    iter: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl UnitFlow {
    pub(crate) fn new(nodes: usize) -> Self {
        UnitFlow {
            head: vec![NONE; nodes],
            next: Vec::new(),
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![0; nodes],
            iter: vec![0; nodes],
        }
    }

    /// Adds a unit arc `a -> b`; returns the id of the forward arc.
    pub(crate) fn add(&mut self, a: usize, b: usize) -> usize {
        let id = self.to.len();
        for (from, to, cap) in [(a, b, 1u8), (b, a, 0u8)] {
            self.to.push(to as u32);
            self.cap.push(cap);
            self.next.push(self.head[from]);
            self.head[from] = self.to.len() as u32 - 1;
        }
        id
    }

    /// Flow on a forward arc (0 or 1).
    pub(crate) fn flow(&self, arc: usize) -> u8 {
        1 - self.cap[arc]
    }

    /// Forward arcs leaving `a`, as `(arc id, head)`.
    pub(crate) fn out_arcs(&self, a: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let mut e = self.head[a];
        std::iter::from_fn(move || {
            while e != NONE {
                let id = e as usize;
                e = self.next[id];
                if id % 2 == 0 {
                    return Some((id, self.to[id] as usize));
                }
            }
            None
        })
    }

    pub(crate) fn max_flow(&mut self, s: usize, t: usize) -> usize {
        let mut total = 0;
        while self.bfs(s, t) {
            self.iter.copy_from_slice(&self.head);
            loop {
                let pushed = self.augment(s, t);
                if !pushed {
                    break;
                }
                total += 1;
            }
        }
        total
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            let mut e = self.head[u];
            while e != NONE {
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
                e = self.next[e as usize];
            }
        }
        self.level[t] >= 0
    }

    /// Finds one augmenting path in the level graph and pushes a unit on it.
    fn augment(&mut self, s: usize, t: usize) -> bool {
        let mut stack: Vec<u32> = Vec::new(); // arcs on the current path
        let mut u = s;
        loop {
            if u == t {
                for &e in &stack {
                    self.cap[e as usize] -= 1;
                    self.cap[(e ^ 1) as usize] += 1;
                }
                return true;
            }
            let mut advanced = false;
            while self.iter[u] != NONE {
                let e = self.iter[u] as usize;
                let v = self.to[e] as usize;
                if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                    stack.push(e as u32);
                    u = v;
                    advanced = true;
                    break;
                }
                self.iter[u] = self.next[e];
            }
            if advanced {
                continue;
            }
            // dead end: retire u and step back
            self.level[u] = -1;
            match stack.pop() {
                None => return false,
                Some(e) => {
                    u = self.to[(e ^ 1) as usize] as usize;
                    self.iter[u] = self.next[e as usize];
                }
            }
        }
    }
}
