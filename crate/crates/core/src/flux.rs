//! Steady-state cycle fluxes from principal minors of the generator.
//!
//! For a cycle `c = [y_1, ..., y_s]` of an irreducible generator `Q`,
//!
//! ```text
//! w_c = (-1)^(s-1) q(y1,y2) ... q(ys,y1) |Q({y1..ys}^c)| / sum_j |Q({j}^c)|
//! ```
//!
//! where `|Q(H)|` is the principal minor on `H` and the empty minor is 1.
//! Minors are evaluated once per distinct removed state set.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::cycles::Cycle;
use crate::error::{Error, Result};
use crate::linalg::{complement, log_sum, principal_minor_logdet, LogDet};
use crate::state_space::LabeledGenerator;

/// Relative size below which the minor sum is treated as zero.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct CycleFlux {
    pub cycle: Cycle,
    pub omega: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxTable {
    pub records: Vec<CycleFlux>,
    /// `sum_j |Q({j}^c)|`.
    pub denominator: f64,
    pub stationary: Vec<f64>,
    /// Principal minors whose sign disagreed with `(-1)^|H|`.
    pub sign_warnings: usize,
}

impl FluxTable {
    pub fn total(&self) -> f64 {
        self.records.iter().map(|r| r.omega).sum()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FluxOptions {
    pub parallel: bool,
}

/// The `N` minors `|Q({j}^c)|`, their log-sum and the sign sanity count.
struct Denominator {
    minors: Vec<LogDet>,
    sum: LogDet,
    sign_warnings: usize,
}

fn denominator(q: &DMatrix<f64>, parallel: bool) -> Result<Denominator> {
    let n = q.nrows();
    if n == 0 {
        return Err(Error::Invalid("empty generator".into()));
    }
    let minor = |j: usize| principal_minor_logdet(q, &complement(n, &[j]));
    let minors: Vec<LogDet> = if parallel {
        (0..n).into_par_iter().map(minor).collect()
    } else {
        (0..n).map(minor).collect()
    };
    let expected = if (n - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let sign_warnings = minors.iter().filter(|d| d.sign != 0.0 && d.sign != expected).count();
    let (sum, _) = log_sum(&minors);
    let largest = minors.iter().map(|d| d.log_abs).fold(f64::NEG_INFINITY, f64::max);
    if sum.sign == 0.0 || sum.log_abs < largest + SINGULAR_TOL.ln() {
        return Err(Error::SingularDenominator(sum.value()));
    }
    Ok(Denominator { minors, sum, sign_warnings })
}

/// Stationary distribution from the matrix-tree minors.
pub fn stationary_from_minors(gen: &LabeledGenerator) -> Result<Vec<f64>> {
    let d = denominator(gen.q(), false)?;
    Ok(stationary_from(&d))
}

fn stationary_from(d: &Denominator) -> Vec<f64> {
    d.minors
        .iter()
        .map(|m| if m.sign == 0.0 { 0.0 } else { m.sign * d.sum.sign * (m.log_abs - d.sum.log_abs).exp() })
        .collect()
}

/// Flux of one cycle, computing the denominator from scratch.
pub fn cycle_flux(gen: &LabeledGenerator, cycle: &Cycle) -> Result<f64> {
    let d = denominator(gen.q(), false)?;
    let removed = sorted(&cycle.states);
    let minor = principal_minor_logdet(gen.q(), &complement(gen.n_states(), &removed));
    Ok(flux_from(gen.q(), cycle, minor, d.sum))
}

fn flux_from(q: &DMatrix<f64>, cycle: &Cycle, minor: LogDet, denom: LogDet) -> f64 {
    let mut sign = if (cycle.len() - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut log_prod = 0.0;
    for (a, b) in cycle.edges() {
        let r = q[(a, b)];
        if r <= 0.0 || minor.sign == 0.0 {
            return 0.0;
        }
        log_prod += r.ln();
    }
    sign *= minor.sign * denom.sign;
    sign * (log_prod + minor.log_abs - denom.log_abs).exp()
}

fn sorted(states: &[usize]) -> Vec<usize> {
    let mut v = states.to_vec();
    v.sort_unstable();
    v
}

/// Fluxes of all `cycles`, in input order.
pub fn flux_table(gen: &LabeledGenerator, cycles: &[Cycle], opts: FluxOptions) -> Result<FluxTable> {
    let q = gen.q();
    let n = gen.n_states();
    let d = denominator(q, opts.parallel)?;

    // Distinct removed sets, in first-seen order.
    let mut slot: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let keys: Vec<usize> = cycles
        .iter()
        .map(|c| {
            let key = sorted(&c.states);
            *slot.entry(key.clone()).or_insert_with(|| {
                sets.push(key);
                sets.len() - 1
            })
        })
        .collect();
    let minor = |set: &Vec<usize>| principal_minor_logdet(q, &complement(n, set));
    let minors: Vec<LogDet> = if opts.parallel {
        sets.par_iter().map(minor).collect()
    } else {
        sets.iter().map(minor).collect()
    };

    let mut sign_warnings = d.sign_warnings;
    for (set, m) in sets.iter().zip(&minors) {
        let expected = if (n - set.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
        if m.sign != 0.0 && m.sign != expected {
            sign_warnings += 1;
        }
    }

    let eval = |(c, &k): (&Cycle, &usize)| CycleFlux { cycle: c.clone(), omega: flux_from(q, c, minors[k], d.sum) };
    let records: Vec<CycleFlux> = if opts.parallel {
        cycles.par_iter().zip(keys.par_iter()).map(eval).collect()
    } else {
        cycles.iter().zip(keys.iter()).map(eval).collect()
    };

    Ok(FluxTable { records, denominator: d.sum.value(), stationary: stationary_from(&d), sign_warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{enumerate_cycles, DEFAULT_MAX_CYCLES};
    use crate::linalg::stationary_direct;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn tri_gen() -> LabeledGenerator {
        LabeledGenerator::from_matrix(DMatrix::from_row_slice(3, 3, &[-3.0, 1.0, 2.0, 2.0, -3.0, 1.0, 1.0, 2.0, -3.0]))
            .unwrap()
    }

    fn duo(a: f64, b: f64) -> LabeledGenerator {
        LabeledGenerator::from_matrix(DMatrix::from_row_slice(2, 2, &[-a, a, b, -b])).unwrap()
    }

    #[test]
    fn duo_loop_flux_matches_stationary_edge_flow() {
        let gen = duo(2.0, 3.0);
        let c = Cycle::from_states(&gen, &[0, 1]);
        let w = cycle_flux(&gen, &c).unwrap();
        // pi_1 q_12 with pi = (3/5, 2/5).
        assert!(rel(w, 0.6 * 2.0) < 1e-14);
        let pi = stationary_from_minors(&gen).unwrap();
        assert!(rel(pi[0], 0.6) < 1e-14 && rel(pi[1], 0.4) < 1e-14);
    }

    #[test]
    fn tri_fluxes() {
        let gen = tri_gen();
        let cycles = enumerate_cycles(&gen, usize::MAX, DEFAULT_MAX_CYCLES).unwrap();
        let t = flux_table(&gen, &cycles, FluxOptions::default()).unwrap();
        assert!(rel(t.denominator, 21.0) < 1e-14);
        let by_id: HashMap<String, f64> = t.records.iter().map(|r| (r.cycle.id(), r.omega)).collect();
        assert!(rel(by_id["0-1-2"], 1.0 / 21.0) < 1e-13);
        assert!(rel(by_id["0-2-1"], 8.0 / 21.0) < 1e-13);
        for two in ["0-1", "0-2", "1-2"] {
            assert!(rel(by_id[two], 2.0 / 7.0) < 1e-13);
        }
        for p in &t.stationary {
            assert!(rel(*p, 1.0 / 3.0) < 1e-14);
        }
        assert_eq!(t.sign_warnings, 0);
    }

    #[test]
    fn parallel_matches_serial() {
        let gen = tri_gen();
        let cycles = enumerate_cycles(&gen, usize::MAX, DEFAULT_MAX_CYCLES).unwrap();
        let a = flux_table(&gen, &cycles, FluxOptions { parallel: false }).unwrap();
        let b = flux_table(&gen, &cycles, FluxOptions { parallel: true }).unwrap();
        let wa: Vec<f64> = a.records.iter().map(|r| r.omega).collect();
        let wb: Vec<f64> = b.records.iter().map(|r| r.omega).collect();
        assert_eq!(wa, wb);
    }

    #[test]
    fn stationary_is_scale_invariant() {
        let gen = tri_gen();
        let a = stationary_from_minors(&gen).unwrap();
        let b = stationary_from_minors(&gen.scaled(7.5).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn reducible_chain_is_singular() {
        // Two disconnected pairs.
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        m[(2, 3)] = 1.0;
        m[(3, 2)] = 1.0;
        let gen = LabeledGenerator::from_matrix(m).unwrap();
        assert!(matches!(stationary_from_minors(&gen), Err(Error::SingularDenominator(_))));
    }

    #[test]
    fn minors_agree_with_direct_solve() {
        let gen = tri_gen();
        let a = stationary_from_minors(&gen).unwrap();
        let b = stationary_direct(gen.q()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
