//! Gillespie sampling and loop-erasure cycle counting.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::cycles::canonical_rotation;
use crate::error::{Error, Result};
use crate::model::EdgeLabel;
use crate::state_space::LabeledGenerator;

pub const RNG_NAME: &str = "ChaCha8";
pub const DEFAULT_BATCHES: usize = 20;

/// A sampled path. `labels[k]` is the label of the jump into `states[k]`;
/// `labels[0]` is always `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    pub labels: Vec<Option<EdgeLabel>>,
    pub t_end: f64,
    pub seed: u64,
    pub rng: &'static str,
}

impl Trajectory {
    pub fn jumps(&self) -> usize {
        self.states.len() - 1
    }

    /// Time spent in each state up to `t_end`.
    pub fn occupation(&self, n_states: usize) -> Vec<f64> {
        let mut occ = vec![0.0; n_states];
        for k in 0..self.states.len() {
            let until = self.times.get(k + 1).copied().unwrap_or(self.t_end);
            occ[self.states[k]] += until - self.times[k];
        }
        occ
    }

    /// One JSON object per line: `{"t":..,"state":..,"label":..}`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line {
            t: f64,
            state: usize,
            label: Option<String>,
        }
        for ((&t, &state), label) in self.times.iter().zip(&self.states).zip(&self.labels) {
            serde_json::to_writer(&mut out, &Line { t, state, label: label.map(|l| l.to_string()) })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Exact CTMC path from `init` on `[0, t_end]`.
pub fn gillespie(gen: &LabeledGenerator, init: usize, t_end: f64, seed: u64) -> Result<Trajectory> {
    let n = gen.n_states();
    if init >= n {
        return Err(Error::Invalid(format!("initial state {init} outside 0..{n}")));
    }
    if t_end <= 0.0 || !t_end.is_finite() {
        return Err(Error::Invalid(format!("t_end must be positive, got {t_end}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut x = init;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![init],
        labels: vec![None],
        t_end,
        seed,
        rng: RNG_NAME,
    };
    let q = gen.q();
    loop {
        let exit = gen.exit_rate(x);
        if exit <= 0.0 || exit.is_nan() {
            return Err(Error::AbsorbingState(x));
        }
        t += Exp::new(exit).expect("positive rate").sample(&mut rng);
        if t >= t_end {
            break;
        }
        let succ = gen.successors(x);
        let mut u = rng.random::<f64>() * exit;
        let mut next = *succ.last().expect("positive exit rate implies a successor");
        for &j in succ {
            u -= q[(x, j)];
            if u < 0.0 {
                next = j;
                break;
            }
        }
        traj.times.push(t);
        traj.states.push(next);
        traj.labels.push(gen.label(x, next));
        x = next;
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy)]
pub struct CountOptions {
    pub batches: usize,
    /// Completions before this time are erased but not counted.
    pub burn_in: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self { batches: DEFAULT_BATCHES, burn_in: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleCount {
    pub count: u64,
    /// Completions per batch, aligned with `CycleCountTable::batch_durations`.
    pub batch_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleCountTable {
    /// Canonical state sequence to completions.
    pub counts: BTreeMap<Vec<usize>, CycleCount>,
    pub batch_durations: Vec<f64>,
    /// Total counted time.
    pub t: f64,
    pub jumps: u64,
    pub seeds: Vec<u64>,
    /// Loop-erased path left at the horizon (single replica only).
    pub residual_stack: Vec<usize>,
}

/// Runs loop erasure over a state sequence, calling `on_loop(k, cycle)` when
/// the jump into `seq[k]` closes a loop. Returns the residual stack.
pub fn loop_erase<F: FnMut(usize, Vec<usize>)>(seq: &[usize], mut on_loop: F) -> Vec<usize> {
    let n = seq.iter().copied().max().map_or(0, |m| m + 1);
    let mut pos = vec![usize::MAX; n];
    let mut stack: Vec<usize> = Vec::new();
    for (k, &x) in seq.iter().enumerate() {
        let p = pos[x];
        if p != usize::MAX {
            on_loop(k, canonical_rotation(&stack[p..]));
            for &y in &stack[p + 1..] {
                pos[y] = usize::MAX;
            }
            stack.truncate(p + 1);
        } else {
            pos[x] = stack.len();
            stack.push(x);
        }
    }
    stack
}

/// Completion counts of a plain state sequence.
pub fn count_sequence(seq: &[usize]) -> (BTreeMap<Vec<usize>, u64>, Vec<usize>) {
    let mut counts = BTreeMap::new();
    let stack = loop_erase(seq, |_, c| *counts.entry(c).or_insert(0) += 1);
    (counts, stack)
}

pub fn count_cycles(traj: &Trajectory, opts: CountOptions) -> Result<CycleCountTable> {
    if opts.batches == 0 {
        return Err(Error::Invalid("at least one batch is required".into()));
    }
    if opts.burn_in.is_nan() || opts.burn_in < 0.0 || opts.burn_in >= traj.t_end {
        return Err(Error::Invalid(format!("burn-in {} must lie in [0, t_end)", opts.burn_in)));
    }
    let b = opts.batches;
    let span = traj.t_end - opts.burn_in;
    let width = span / b as f64;
    let mut counts: BTreeMap<Vec<usize>, CycleCount> = BTreeMap::new();
    let residual = loop_erase(&traj.states, |k, c| {
        let t = traj.times[k];
        if t < opts.burn_in {
            return;
        }
        let slot = (((t - opts.burn_in) / width) as usize).min(b - 1);
        let e = counts.entry(c).or_insert_with(|| CycleCount { count: 0, batch_counts: vec![0; b] });
        e.count += 1;
        e.batch_counts[slot] += 1;
    });
    Ok(CycleCountTable {
        counts,
        batch_durations: vec![width; b],
        t: span,
        jumps: traj.jumps() as u64,
        seeds: vec![traj.seed],
        residual_stack: residual,
    })
}

impl CycleCountTable {
    /// Pools two tables: counts add and batches concatenate.
    pub fn merge(mut self, other: CycleCountTable) -> CycleCountTable {
        let (na, nb) = (self.batch_durations.len(), other.batch_durations.len());
        for c in self.counts.values_mut() {
            c.batch_counts.resize(na + nb, 0);
        }
        for (k, c) in other.counts {
            let e = self
                .counts
                .entry(k)
                .or_insert_with(|| CycleCount { count: 0, batch_counts: vec![0; na + nb] });
            e.count += c.count;
            e.batch_counts[na..].copy_from_slice(&c.batch_counts);
        }
        self.batch_durations.extend(other.batch_durations);
        self.t += other.t;
        self.jumps += other.jumps;
        self.seeds.extend(other.seeds);
        self.residual_stack.clear();
        self
    }

    /// Estimate and batch-means standard error for one cycle, given as any
    /// rotation of its state sequence.
    pub fn estimate(&self, states: &[usize]) -> EmpiricalFlux {
        let key = canonical_rotation(states);
        let zero = vec![0; self.batch_durations.len()];
        let (count, batches) = match self.counts.get(&key) {
            Some(c) => (c.count, &c.batch_counts),
            None => (0, &zero),
        };
        let rates: Vec<f64> = batches.iter().zip(&self.batch_durations).map(|(&c, &d)| c as f64 / d).collect();
        let b = rates.len() as f64;
        let stderr = if rates.len() < 2 {
            f64::NAN
        } else {
            let mean = rates.iter().sum::<f64>() / b;
            (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (b * (b - 1.0))).sqrt()
        };
        EmpiricalFlux { states: key, count, estimate: count as f64 / self.t, stderr }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalFlux {
    pub states: Vec<usize>,
    pub count: u64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Estimates for every cycle observed at least once, ordered by key.
pub fn empirical_fluxes(table: &CycleCountTable) -> Vec<EmpiricalFlux> {
    table.counts.keys().map(|k| table.estimate(k)).collect()
}

/// Independent replicas with the given seeds, pooled in seed order.
pub fn simulate_replicas(
    gen: &LabeledGenerator,
    init: usize,
    t_end: f64,
    seeds: &[u64],
    opts: CountOptions,
) -> Result<CycleCountTable> {
    let tables: Vec<CycleCountTable> = seeds
        .par_iter()
        .map(|&s| count_cycles(&gillespie(gen, init, t_end, s)?, opts))
        .collect::<Result<_>>()?;
    let mut it = tables.into_iter();
    let first = it.next().ok_or_else(|| Error::Invalid("no replicas requested".into()))?;
    Ok(it.fold(first, CycleCountTable::merge))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn duo() -> LabeledGenerator {
        LabeledGenerator::from_matrix(DMatrix::from_row_slice(2, 2, &[-2.0, 2.0, 3.0, -3.0])).unwrap()
    }

    fn tri_gen() -> LabeledGenerator {
        LabeledGenerator::from_matrix(DMatrix::from_row_slice(3, 3, &[-3.0, 1.0, 2.0, 2.0, -3.0, 1.0, 1.0, 2.0, -3.0]))
            .unwrap()
    }

    #[test]
    fn single_loop() {
        let (c, stack) = count_sequence(&[1, 2, 3, 1]);
        assert_eq!(c, BTreeMap::from([(vec![1, 2, 3], 1)]));
        assert_eq!(stack, vec![1]);
    }

    #[test]
    fn nested_loops() {
        let mut order = Vec::new();
        loop_erase(&[1, 2, 1, 2, 3, 1], |_, c| order.push(c));
        assert_eq!(order, vec![vec![1, 2], vec![1, 2, 3]]);
    }

    #[test]
    fn loop_in_the_middle() {
        let (c, stack) = count_sequence(&[1, 2, 3, 2]);
        assert_eq!(c, BTreeMap::from([(vec![2, 3], 1)]));
        assert_eq!(stack, vec![1, 2]);
    }

    #[test]
    fn jump_count_is_conserved() {
        let traj = gillespie(&tri_gen(), 0, 500.0, 3).unwrap();
        let t = count_cycles(&traj, CountOptions::default()).unwrap();
        let erased: u64 = t.counts.iter().map(|(k, c)| c.count * k.len() as u64).sum();
        assert_eq!(t.jumps, erased + t.residual_stack.len() as u64 - 1);
    }

    #[test]
    fn duo_occupancy() {
        let traj = gillespie(&duo(), 0, 1e4, 11).unwrap();
        // Batch the occupation of state 0 to get a standard error.
        let b = 20;
        let w = traj.t_end / b as f64;
        let mut frac = vec![0.0; b];
        for k in 0..traj.states.len() {
            if traj.states[k] != 0 {
                continue;
            }
            let (mut a, z) = (traj.times[k], traj.times.get(k + 1).copied().unwrap_or(traj.t_end));
            while a < z {
                let slot = ((a / w) as usize).min(b - 1);
                let edge = ((slot + 1) as f64 * w).min(z);
                frac[slot] += (edge - a) / w;
                a = edge;
            }
        }
        let mean = frac.iter().sum::<f64>() / b as f64;
        let se = (frac.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (b * (b - 1)) as f64).sqrt();
        let occ = traj.occupation(2);
        assert!((occ[0] / traj.t_end - mean).abs() < 1e-9);
        assert!((mean - 0.6).abs() < 3.0 * se, "{mean} +- {se}");
    }

    #[test]
    fn short_horizon_has_no_jumps() {
        let traj = gillespie(&duo(), 1, 1e-12, 5).unwrap();
        assert_eq!(traj.states, vec![1]);
    }

    #[test]
    fn same_seed_same_path() {
        let a = gillespie(&tri_gen(), 0, 100.0, 42).unwrap();
        let b = gillespie(&tri_gen(), 0, 100.0, 42).unwrap();
        assert_eq!(a, b);
        let c = gillespie(&tri_gen(), 0, 100.0, 43).unwrap();
        assert_ne!(a.times, c.times);
    }

    #[test]
    fn absorbing_state_is_an_error() {
        let gen = LabeledGenerator::from_matrix(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0])).unwrap();
        assert!(matches!(gillespie(&gen, 1, 1.0, 0), Err(Error::AbsorbingState(1))));
    }

    #[test]
    fn tri_estimate_and_zero_class() {
        let traj = gillespie(&tri_gen(), 0, 2e4, 7).unwrap();
        let t = count_cycles(&traj, CountOptions::default()).unwrap();
        let e = t.estimate(&[1, 2, 0]);
        assert!((e.estimate - 1.0 / 21.0).abs() < 4.0 * e.stderr, "{e:?}");
        let none = t.estimate(&[5, 6]);
        assert_eq!((none.count, none.estimate, none.stderr), (0, 0.0, 0.0));
    }

    #[test]
    fn standard_error_shrinks_with_horizon() {
        let gen = tri_gen();
        let seeds: Vec<u64> = (0..8).collect();
        let se = |t_end: f64| {
            let s: f64 = seeds
                .iter()
                .map(|&s| count_cycles(&gillespie(&gen, 0, t_end, s).unwrap(), CountOptions::default()).unwrap())
                .map(|t| t.estimate(&[0, 1]).stderr)
                .sum();
            s / seeds.len() as f64
        };
        let ratio = se(2e4) / se(4e4);
        assert!((1.2..=1.8).contains(&ratio), "{ratio}");
    }

    #[test]
    fn merge_pads_batches() {
        let gen = tri_gen();
        let a = count_cycles(&gillespie(&gen, 0, 50.0, 1).unwrap(), CountOptions { batches: 4, burn_in: 0.0 }).unwrap();
        let b = count_cycles(&gillespie(&gen, 0, 50.0, 2).unwrap(), CountOptions { batches: 4, burn_in: 0.0 }).unwrap();
        let total: u64 = a.counts.values().chain(b.counts.values()).map(|c| c.count).sum();
        let m = a.clone().merge(b);
        assert_eq!(m.counts.values().map(|c| c.count).sum::<u64>(), total);
        assert!(m.counts.values().all(|c| c.batch_counts.len() == 8 && c.batch_counts.iter().sum::<u64>() == c.count));
        assert_eq!(m.t, 100.0);
        let pooled = simulate_replicas(&gen, 0, 50.0, &[1, 2], CountOptions { batches: 4, burn_in: 0.0 }).unwrap();
        assert_eq!(pooled, m);
    }

    #[test]
    fn jsonl_export() {
        let traj = gillespie(&duo(), 0, 2.0, 9).unwrap();
        let mut buf = Vec::new();
        traj.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), traj.states.len());
        assert!(text.starts_with("{\"t\":0.0,\"state\":0,\"label\":null}"));
    }
}
