//! Elementary circuits of the counting-space graph.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::EdgeLabel;
use crate::state_space::LabeledGenerator;

pub const DEFAULT_MAX_CYCLES: usize = 1_000_000;

/// A directed simple cycle `[y_1, ..., y_s]`, rotated so the smallest state
/// index comes first. `labels[k]` belongs to the edge `y_k -> y_{k+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Cycle {
    pub states: Vec<usize>,
    pub labels: Vec<Option<EdgeLabel>>,
}

impl Cycle {
    /// Builds a cycle from any rotation of its state sequence, reading edge
    /// labels off `gen`.
    pub fn from_states(gen: &LabeledGenerator, states: &[usize]) -> Self {
        let states = canonical_rotation(states);
        let labels = cyclic_pairs(&states).map(|(a, b)| gen.label(a, b)).collect();
        Self { states, labels }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Edges `(y_k, y_{k+1})` in traversal order, wrapping around.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        cyclic_pairs(&self.states)
    }

    /// Same states traversed the other way. A 2-cycle is its own reversal.
    pub fn reversal(&self, gen: &LabeledGenerator) -> Self {
        let mut rev = self.states.clone();
        rev.reverse();
        Self::from_states(gen, &rev)
    }

    /// Product of the generator entries along the cycle.
    pub fn rate_product(&self, q: &nalgebra::DMatrix<f64>) -> f64 {
        self.edges().map(|(a, b)| q[(a, b)]).product()
    }

    /// State indices joined by `-`, used as a stable identifier.
    pub fn id(&self) -> String {
        self.states.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("-")
    }

    pub fn label_string(&self) -> String {
        self.labels
            .iter()
            .map(|l| l.map_or_else(|| "?".to_string(), |l| l.to_string()))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.id().replace('-', ","))
    }
}

fn cyclic_pairs(states: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let n = states.len();
    (0..n).map(move |k| (states[k], states[(k + 1) % n]))
}

/// Rotates a cyclic sequence so that its minimum comes first.
pub fn canonical_rotation(states: &[usize]) -> Vec<usize> {
    let Some(pos) = states.iter().enumerate().min_by_key(|(_, &s)| s).map(|(i, _)| i) else {
        return Vec::new();
    };
    states[pos..].iter().chain(&states[..pos]).copied().collect()
}

/// All elementary circuits with `2 <= s <= max_len`, each once, sorted by
/// state sequence. Fails once more than `max_count` are found.
pub fn enumerate_cycles(gen: &LabeledGenerator, max_len: usize, max_count: usize) -> Result<Vec<Cycle>> {
    let n = gen.n_states();
    let mut found = if max_len >= n {
        Johnson::new(gen, max_count).run()?
    } else {
        bounded_search(gen, max_len, max_count)?
    };
    found.sort();
    Ok(found.iter().map(|s| Cycle::from_states(gen, s)).collect())
}

/// Johnson's circuit search restricted, for each start `s`, to the strong
/// component of `s` in the subgraph on vertices `>= s`.
struct Johnson<'a> {
    gen: &'a LabeledGenerator,
    max_count: usize,
    in_component: Vec<bool>,
    blocked: Vec<bool>,
    blocked_by: Vec<Vec<usize>>,
    stack: Vec<usize>,
    found: Vec<Vec<usize>>,
}

impl<'a> Johnson<'a> {
    fn new(gen: &'a LabeledGenerator, max_count: usize) -> Self {
        let n = gen.n_states();
        Self {
            gen,
            max_count,
            in_component: vec![false; n],
            blocked: vec![false; n],
            blocked_by: vec![Vec::new(); n],
            stack: Vec::new(),
            found: Vec::new(),
        }
    }

    fn run(mut self) -> Result<Vec<Vec<usize>>> {
        let n = self.gen.n_states();
        let mut preds = vec![Vec::new(); n];
        for e in self.gen.edges() {
            preds[e.to].push(e.from);
        }
        for s in 0..n {
            let fwd = reach(s, |v| self.gen.successors(v), s, n);
            let bwd = reach(s, |v| &preds[v], s, n);
            let mut size = 0;
            for v in 0..n {
                self.in_component[v] = fwd[v] && bwd[v];
                if self.in_component[v] {
                    size += 1;
                    self.blocked[v] = false;
                    self.blocked_by[v].clear();
                }
            }
            if size < 2 {
                continue;
            }
            self.circuit(s, s)?;
        }
        Ok(self.found)
    }

    fn unblock(&mut self, u: usize) {
        let mut work = vec![u];
        while let Some(v) = work.pop() {
            if !self.blocked[v] {
                continue;
            }
            self.blocked[v] = false;
            work.append(&mut self.blocked_by[v]);
        }
    }

    fn circuit(&mut self, v: usize, s: usize) -> Result<bool> {
        let mut closed = false;
        self.stack.push(v);
        self.blocked[v] = true;
        let gen = self.gen;
        for &w in gen.successors(v) {
            if !self.in_component[w] {
                continue;
            }
            if w == s {
                if self.found.len() >= self.max_count {
                    return Err(Error::CycleBudgetExceeded(self.max_count));
                }
                self.found.push(self.stack.clone());
                closed = true;
            } else if !self.blocked[w] && self.circuit(w, s)? {
                closed = true;
            }
        }
        if closed {
            self.unblock(v);
        } else {
            for &w in gen.successors(v) {
                if self.in_component[w] && !self.blocked_by[w].contains(&v) {
                    self.blocked_by[w].push(v);
                }
            }
        }
        self.stack.pop();
        Ok(closed)
    }
}

/// Vertices reachable from `start` through vertices `>= floor`.
fn reach<'g, F>(start: usize, next: F, floor: usize, n: usize) -> Vec<bool>
where
    F: Fn(usize) -> &'g [usize],
{
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &w in next(v) {
            if w >= floor && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Depth-limited backtracking used when circuits are capped below the
/// number of states; blocking in Johnson's search is not sound under a
/// length cap.
fn bounded_search(gen: &LabeledGenerator, max_len: usize, max_count: usize) -> Result<Vec<Vec<usize>>> {
    fn dfs(
        gen: &LabeledGenerator,
        s: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        max_len: usize,
        max_count: usize,
        found: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        let v = *path.last().unwrap();
        for &w in gen.successors(v) {
            if w == s && path.len() >= 2 {
                if found.len() >= max_count {
                    return Err(Error::CycleBudgetExceeded(max_count));
                }
                found.push(path.clone());
            } else if w > s && !on_path[w] && path.len() < max_len {
                on_path[w] = true;
                path.push(w);
                dfs(gen, s, path, on_path, max_len, max_count, found)?;
                path.pop();
                on_path[w] = false;
            }
        }
        Ok(())
    }
    let n = gen.n_states();
    let mut found = Vec::new();
    if max_len < 2 {
        return Ok(found);
    }
    let mut on_path = vec![false; n];
    for s in 0..n {
        let mut path = vec![s];
        on_path[s] = true;
        dfs(gen, s, &mut path, &mut on_path, max_len, max_count, &mut found)?;
        on_path[s] = false;
    }
    Ok(found)
}
