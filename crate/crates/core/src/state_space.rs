//! Finite counting space and the labeled rate matrix of the chemical master
//! equation on it.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CrnSpec, Direction, EdgeLabel, FinitenessConstraint};

/// Copy numbers of the internal species.
pub type State = Vec<u64>;

/// How external species enter propensities at finite system size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum XMode {
    /// Falling factorial of the rounded copy number `round(alpha * omega)`.
    #[default]
    FallingFactorial,
    /// `(alpha * omega)^xi`, smooth in omega.
    Concentration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSpace {
    states: Vec<State>,
    #[serde(skip)]
    index: HashMap<State, usize>,
}

impl StateSpace {
    /// Builds a space from explicit states; they are sorted into canonical
    /// order (descending lexicographic) and deduplicated.
    pub fn from_states(mut states: Vec<State>) -> Self {
        states.sort_by(|a, b| b.cmp(a));
        states.dedup();
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Self { states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &State {
        &self.states[i]
    }

    pub fn index_of(&self, state: &[u64]) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Target of firing `label` from `state`, if it stays nonnegative.
    pub fn shifted(spec: &CrnSpec, state: &[u64], label: EdgeLabel) -> Option<State> {
        let step = spec.reactions[label.reaction].step(label.direction);
        state
            .iter()
            .zip(&step)
            .map(|(&n, &d)| u64::try_from(n as i64 + d).ok())
            .collect()
    }
}

/// Enumerates the counting space: every nonnegative vector satisfying the
/// constraints that can be reached from the first admissible state by
/// forward or backward reaction steps.
pub fn enumerate_states(spec: &CrnSpec) -> Result<StateSpace> {
    let n2 = spec.n_internal();
    let mut caps: Vec<Option<u64>> = vec![None; n2];
    for c in &spec.constraints {
        match c {
            FinitenessConstraint::Conserve { species, total } => {
                for &j in species {
                    caps[j] = Some(caps[j].map_or(*total, |m| m.min(*total)));
                }
            }
            FinitenessConstraint::Bound { species, max } => {
                caps[*species] = Some(caps[*species].map_or(*max, |m| m.min(*max)));
            }
        }
    }
    let caps: Vec<u64> = caps
        .into_iter()
        .enumerate()
        .map(|(j, c)| c.ok_or_else(|| Error::UnboundedStateSpace(spec.internal_species[j].clone())))
        .collect::<Result<_>>()?;

    let admissible = |s: &[u64]| spec.constraints.iter().all(|c| c.is_satisfied(s));

    // Seed: largest admissible vector in lexicographic order.
    let seed = first_admissible(spec, &caps).ok_or(Error::EmptyStateSpace)?;

    let labels: Vec<EdgeLabel> = (0..spec.n_reactions())
        .flat_map(|l| Direction::BOTH.map(|d| EdgeLabel::new(l, d)))
        .collect();
    let mut seen: HashMap<State, ()> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(seed.clone(), ());
    queue.push_back(seed);
    while let Some(s) = queue.pop_front() {
        for &label in &labels {
            if let Some(t) = StateSpace::shifted(spec, &s, label) {
                let within = t.iter().zip(&caps).all(|(v, c)| v <= c);
                if within && admissible(&t) && !seen.contains_key(&t) {
                    seen.insert(t.clone(), ());
                    queue.push_back(t);
                }
            }
        }
    }
    Ok(StateSpace::from_states(seen.into_keys().collect()))
}

fn first_admissible(spec: &CrnSpec, caps: &[u64]) -> Option<State> {
    fn rec(spec: &CrnSpec, caps: &[u64], prefix: &mut State) -> bool {
        let j = prefix.len();
        if j == caps.len() {
            return spec.constraints.iter().all(|c| c.is_satisfied(prefix));
        }
        for v in (0..=caps[j]).rev() {
            prefix.push(v);
            let feasible = spec.constraints.iter().all(|c| match c {
                FinitenessConstraint::Conserve { species, total } => {
                    species.iter().filter(|&&k| k <= j).map(|&k| prefix[k]).sum::<u64>() <= *total
                }
                FinitenessConstraint::Bound { .. } => true,
            });
            if feasible && rec(spec, caps, prefix) {
                return true;
            }
            prefix.pop();
        }
        false
    }
    let mut prefix = Vec::with_capacity(caps.len());
    rec(spec, caps, &mut prefix).then_some(prefix)
}

/// `n (n-1) ... (n-k+1)`, zero when `n < k`.
pub fn falling_factorial(n: u64, k: u32) -> f64 {
    if n < k as u64 {
        return 0.0;
    }
    (0..k as u64).map(|i| (n - i) as f64).product()
}

/// External copy numbers `round(alpha * omega)`.
pub fn external_counts(spec: &CrnSpec, omega: f64) -> Vec<u64> {
    spec.external_species
        .iter()
        .map(|x| (x.concentration * omega).round() as u64)
        .collect()
}

/// Mass-action propensity of firing `reaction` in `direction` from `state`
/// at system size `omega`.
pub fn propensity(
    spec: &CrnSpec,
    state: &[u64],
    reaction: usize,
    direction: Direction,
    omega: f64,
    x_mode: XMode,
) -> f64 {
    let r = &spec.reactions[reaction];
    let (cy, cx) = r.consumed(direction);
    let mut rate = r.rate_constant(direction) * omega.powi(1 - r.order(direction) as i32);
    for (x, &k) in spec.external_species.iter().zip(cx) {
        rate *= match x_mode {
            XMode::FallingFactorial => falling_factorial((x.concentration * omega).round() as u64, k),
            XMode::Concentration => (x.concentration * omega).powi(k as i32),
        };
    }
    for (&n, &k) in state.iter().zip(cy) {
        rate *= falling_factorial(n, k);
    }
    if rate > 0.0 {
        rate
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: Option<EdgeLabel>,
    pub rate: f64,
}

/// Rate matrix with a (reaction, direction) label on each positive
/// off-diagonal entry.
#[derive(Debug, Clone)]
pub struct LabeledGenerator {
    q: DMatrix<f64>,
    edges: Vec<Edge>,
    labels: HashMap<(usize, usize), EdgeLabel>,
    successors: Vec<Vec<usize>>,
    pub omega: f64,
    pub x_counts: Vec<u64>,
}

impl LabeledGenerator {
    /// Wraps a bare rate matrix; off-diagonals must be nonnegative. The
    /// diagonal is overwritten with minus the off-diagonal row sum.
    pub fn from_matrix(q: DMatrix<f64>) -> Result<Self> {
        Self::from_parts(q, HashMap::new(), 1.0, Vec::new())
    }

    fn from_parts(
        mut q: DMatrix<f64>,
        labels: HashMap<(usize, usize), EdgeLabel>,
        omega: f64,
        x_counts: Vec<u64>,
    ) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n {
            return Err(Error::Invalid(format!("rate matrix is {}x{}, not square", n, q.ncols())));
        }
        let mut edges = Vec::new();
        let mut successors = vec![Vec::new(); n];
        for i in 0..n {
            let mut exit = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = q[(i, j)];
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::Invalid(format!("off-diagonal q[{i},{j}] = {v} is not a finite nonnegative rate")));
                }
                if v > 0.0 {
                    edges.push(Edge { from: i, to: j, label: labels.get(&(i, j)).copied(), rate: v });
                    successors[i].push(j);
                    exit += v;
                }
            }
            q[(i, i)] = -exit;
        }
        Ok(Self { q, edges, labels, successors, omega, x_counts })
    }

    /// Same graph and labels with every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_parts(&self.q * factor, self.labels.clone(), self.omega, self.x_counts.clone())
    }

    /// Same labels, new matrix; used for volume families built on a fixed
    /// graph.
    pub fn with_matrix(&self, q: DMatrix<f64>) -> Result<Self> {
        Self::from_parts(q, self.labels.clone(), self.omega, self.x_counts.clone())
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn n_states(&self) -> usize {
        self.q.nrows()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.q[(from, to)]
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.q[(i, i)]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn label(&self, from: usize, to: usize) -> Option<EdgeLabel> {
        self.labels.get(&(from, to)).copied()
    }

    /// States reachable in one jump, increasing index order.
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.successors[i]
    }

    /// Largest row-sum residual relative to `max |q|`.
    pub fn row_sum_residual(&self) -> f64 {
        let scale = self.q.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        self.q
            .row_iter()
            .map(|r| r.iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn to_json(&self, space: Option<&StateSpace>) -> GeneratorJson {
        GeneratorJson {
            omega: self.omega,
            x_counts: self.x_counts.clone(),
            states: space.map(|s| s.states().to_vec()),
            edges: self.edges.clone(),
            q: self.q.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GeneratorJson {
    pub omega: f64,
    pub x_counts: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<State>>,
    pub edges: Vec<Edge>,
    pub q: Vec<Vec<f64>>,
}

/// Assembles a labeled generator on `space` whose rate for an edge is
/// `rate(from_index, label)`. Steps leaving the space are dropped; a zero
/// rate produces no edge.
pub fn assemble_generator<F>(spec: &CrnSpec, space: &StateSpace, omega: f64, mut rate: F) -> Result<LabeledGenerator>
where
    F: FnMut(usize, EdgeLabel) -> Result<f64>,
{
    let n = space.len();
    let mut q = DMatrix::zeros(n, n);
    let mut labels: BTreeMap<(usize, usize), EdgeLabel> = BTreeMap::new();
    for (i, s) in space.states().iter().enumerate() {
        for l in 0..spec.n_reactions() {
            for d in Direction::BOTH {
                let label = EdgeLabel::new(l, d);
                let Some(t) = StateSpace::shifted(spec, s, label) else { continue };
                let Some(j) = space.index_of(&t) else { continue };
                let r = rate(i, label)?;
                if r <= 0.0 {
                    continue;
                }
                if let Some(prev) = labels.insert((i, j), label) {
                    return Err(Error::AmbiguousEdge {
                        from: i,
                        to: j,
                        first: prev.to_string(),
                        second: label.to_string(),
                    });
                }
                q[(i, j)] = r;
            }
        }
    }
    LabeledGenerator::from_parts(q, labels.into_iter().collect(), omega, external_counts(spec, omega))
}

pub fn build_generator(spec: &CrnSpec, space: &StateSpace, omega: f64, x_mode: XMode) -> Result<LabeledGenerator> {
    assemble_generator(spec, space, omega, |i, label| {
        Ok(propensity(spec, space.state(i), label.reaction, label.direction, omega, x_mode))
    })
}

/// True iff the graph of positive off-diagonal rates is strongly connected.
pub fn check_irreducible(gen: &LabeledGenerator) -> bool {
    let n = gen.n_states();
    if n <= 1 {
        return true;
    }
    let mut preds = vec![Vec::new(); n];
    for e in gen.edges() {
        preds[e.to].push(e.from);
    }
    let reach = |adj: &dyn Fn(usize) -> Vec<usize>| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in adj(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|b| b)
    };
    reach(&|v| gen.successors(v).to_vec()) && reach(&|v| preds[v].clone())
}
