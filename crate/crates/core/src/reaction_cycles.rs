//! Reaction cycles: net reaction counts of counting-space cycles, class
//! fluxes and one-way flux affinities.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cycles::Cycle;
use crate::error::{Error, Result};
use crate::flux::FluxTable;
use crate::model::{Direction, IntMatrix};

/// Forward, backward and net occurrence counts of each reaction in a cycle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ReactionCycleKey {
    pub net: Vec<i64>,
    pub plus: Vec<i64>,
    pub minus: Vec<i64>,
}

impl ReactionCycleKey {
    pub fn is_null(&self) -> bool {
        self.net.iter().all(|&c| c == 0)
    }

    pub fn total_steps(&self) -> i64 {
        self.plus.iter().chain(&self.minus).sum()
    }
}

/// Counts the (reaction, direction) labels along `cycle`.
pub fn phi(cycle: &Cycle, n_reactions: usize) -> Result<ReactionCycleKey> {
    let mut plus = vec![0i64; n_reactions];
    let mut minus = vec![0i64; n_reactions];
    for label in &cycle.labels {
        let label = label.ok_or_else(|| Error::MissingLabel(cycle.to_string()))?;
        match label.direction {
            Direction::Forward => plus[label.reaction] += 1,
            Direction::Backward => minus[label.reaction] += 1,
        }
    }
    let net = plus.iter().zip(&minus).map(|(p, m)| p - m).collect();
    Ok(ReactionCycleKey { net, plus, minus })
}

/// True iff `xi_y * net == 0`, exactly.
pub fn closure_check(xi_y: &IntMatrix, net: &[i64]) -> bool {
    xi_y.mul_vec(net).iter().all(|&v| v == 0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassMember {
    /// Index into the flux table.
    pub cycle: usize,
    pub plus: Vec<i64>,
    pub minus: Vec<i64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassFlux {
    pub net: Vec<i64>,
    pub omega: f64,
    pub members: Vec<ClassMember>,
}

/// Class fluxes keyed by net reaction-count vector, ordered by key.
#[derive(Debug, Clone, Serialize)]
pub struct ClassFluxTable {
    pub classes: Vec<ClassFlux>,
}

impl ClassFluxTable {
    pub fn get(&self, net: &[i64]) -> Option<&ClassFlux> {
        self.classes
            .binary_search_by(|c| c.net.as_slice().cmp(net))
            .ok()
            .map(|i| &self.classes[i])
    }

    pub fn total(&self) -> f64 {
        self.classes.iter().map(|c| c.omega).sum()
    }

    /// `ln(w_c / w_{-c})` when the opposite class is present and `c != 0`.
    pub fn affinity(&self, net: &[i64]) -> Option<f64> {
        if net.iter().all(|&c| c == 0) {
            return None;
        }
        let opposite: Vec<i64> = net.iter().map(|c| -c).collect();
        let here = self.get(net)?;
        let there = self.get(&opposite)?;
        Some((here.omega / there.omega).ln())
    }
}

/// Groups cycle fluxes by net reaction counts. Every cycle must close under
/// the internal stoichiometry.
pub fn aggregate(table: &FluxTable, xi_y: &IntMatrix) -> Result<ClassFluxTable> {
    let m = xi_y.cols;
    let mut classes: BTreeMap<Vec<i64>, (Vec<f64>, Vec<ClassMember>)> = BTreeMap::new();
    for (i, rec) in table.records.iter().enumerate() {
        let key = phi(&rec.cycle, m)?;
        if !closure_check(xi_y, &key.net) {
            return Err(Error::ClosureViolation { cycle: rec.cycle.to_string(), net: key.net });
        }
        let entry = classes.entry(key.net).or_default();
        entry.0.push(rec.omega);
        entry.1.push(ClassMember { cycle: i, plus: key.plus, minus: key.minus });
    }
    Ok(ClassFluxTable {
        classes: classes
            .into_iter()
            .map(|(net, (omegas, members))| ClassFlux { net, omega: omegas.iter().sum(), members })
            .collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AffinityPair {
    /// Orientation whose first nonzero entry is positive.
    pub forward: Vec<i64>,
    pub backward: Vec<i64>,
    pub j_plus: f64,
    pub j_minus: f64,
    /// `ln(J+ / J-)`.
    pub affinity: f64,
    /// `-kBT ln(J+ / J-)`.
    pub delta_g: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AffinityReport {
    pub kbt: f64,
    pub pairs: Vec<AffinityPair>,
    /// Directional classes whose reversal never occurs.
    pub unpaired: Vec<Vec<i64>>,
}

fn leading_positive(v: &[i64]) -> bool {
    v.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

pub fn affinities(table: &ClassFluxTable, kbt: f64) -> AffinityReport {
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    for class in &table.classes {
        if class.net.iter().all(|&c| c == 0) {
            continue;
        }
        let opposite: Vec<i64> = class.net.iter().map(|c| -c).collect();
        match table.get(&opposite) {
            Some(back) if leading_positive(&class.net) => {
                let ratio = class.omega / back.omega;
                pairs.push(AffinityPair {
                    forward: class.net.clone(),
                    backward: opposite,
                    j_plus: class.omega,
                    j_minus: back.omega,
                    affinity: ratio.ln(),
                    delta_g: -kbt * ratio.ln(),
                });
            }
            Some(_) => {}
            None => unpaired.push(class.net.clone()),
        }
    }
    AffinityReport { kbt, pairs, unpaired }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{enumerate_cycles, DEFAULT_MAX_CYCLES};
    use crate::flux::{flux_table, FluxOptions};
    use crate::model::fixtures::tri;
    use crate::model::parse_crn;
    use crate::state_space::{build_generator, enumerate_states, XMode};

    fn tri_classes() -> (ClassFluxTable, FluxTable) {
        let spec = tri();
        let space = enumerate_states(&spec).unwrap();
        let gen = build_generator(&spec, &space, 1.0, XMode::FallingFactorial).unwrap();
        let cycles = enumerate_cycles(&gen, usize::MAX, DEFAULT_MAX_CYCLES).unwrap();
        let t = flux_table(&gen, &cycles, FluxOptions::default()).unwrap();
        (aggregate(&t, &spec.stoich_matrices().xi_y).unwrap(), t)
    }

    #[test]
    fn phi_on_tri_cycles() {
        let (_, t) = tri_classes();
        let get = |id: &str| t.records.iter().find(|r| r.cycle.id() == id).unwrap();
        let k = phi(&get("0-1-2").cycle, 3).unwrap();
        assert_eq!((k.plus.clone(), k.minus.clone(), k.net.clone()), (vec![1, 1, 1], vec![0, 0, 0], vec![1, 1, 1]));
        assert_eq!(phi(&get("0-2-1").cycle, 3).unwrap().net, vec![-1, -1, -1]);
        let k = phi(&get("0-1").cycle, 3).unwrap();
        assert_eq!((k.plus, k.minus, k.net), (vec![1, 0, 0], vec![1, 0, 0], vec![0, 0, 0]));
    }

    #[test]
    fn phi_requires_labels() {
        let gen = crate::state_space::LabeledGenerator::from_matrix(nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 1.0, 1.0, 0.0],
        ))
        .unwrap();
        let c = Cycle::from_states(&gen, &[0, 1]);
        assert!(matches!(phi(&c, 1), Err(Error::MissingLabel(_))));
    }

    #[test]
    fn closure_on_tri() {
        let xi = tri().stoich_matrices().xi_y;
        assert!(closure_check(&xi, &[1, 1, 1]));
        assert!(closure_check(&xi, &[0, 0, 0]));
        assert!(!closure_check(&xi, &[1, 0, 0]));
    }

    #[test]
    fn tri_class_fluxes() {
        let (c, t) = tri_classes();
        assert_eq!(c.classes.len(), 3);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-13 * b;
        assert!(close(c.get(&[1, 1, 1]).unwrap().omega, 1.0 / 21.0));
        assert!(close(c.get(&[-1, -1, -1]).unwrap().omega, 8.0 / 21.0));
        assert!(close(c.get(&[0, 0, 0]).unwrap().omega, 6.0 / 7.0));
        assert_eq!(c.get(&[0, 0, 0]).unwrap().members.len(), 3);
        assert!((c.total() - t.total()).abs() <= 1e-12 * t.total());
    }

    #[test]
    fn tri_affinity_is_ln_eight() {
        let (c, _) = tri_classes();
        let rep = affinities(&c, 1.0);
        assert_eq!(rep.pairs.len(), 1);
        let p = &rep.pairs[0];
        assert_eq!(p.forward, vec![1, 1, 1]);
        assert!((p.delta_g - 8f64.ln()).abs() < 1e-12);
        assert!(rep.unpaired.is_empty());
        assert!(c.affinity(&[0, 0, 0]).is_none());
    }

    #[test]
    fn single_cycle_table() {
        let (_, t) = tri_classes();
        let one = FluxTable { records: vec![t.records[1].clone()], ..t.clone() };
        let c = aggregate(&one, &tri().stoich_matrices().xi_y).unwrap();
        assert_eq!(c.classes.len(), 1);
        assert_eq!(c.classes[0].omega, t.records[1].omega);
    }

    #[test]
    fn detailed_balance_has_zero_affinity() {
        // k1 k2 k3 alpha1 = kr1 kr2 kr3 alpha2.
        let spec = parse_crn(
            "species internal Y0 Y1 Y2\nspecies external X1=2.0 X2=1.0\nreaction R1: X1 + Y0 <-> Y1 ; kf=1 kr=2\nreaction R2: Y1 <-> Y2 ; kf=3 kr=1.5\nreaction R3: Y2 <-> X2 + Y0 ; kf=1 kr=2\nconserve Y0 + Y1 + Y2 = 2\n",
        )
        .unwrap();
        let space = enumerate_states(&spec).unwrap();
        let gen = build_generator(&spec, &space, 1.0, XMode::FallingFactorial).unwrap();
        let cycles = enumerate_cycles(&gen, usize::MAX, DEFAULT_MAX_CYCLES).unwrap();
        let t = flux_table(&gen, &cycles, FluxOptions::default()).unwrap();
        let c = aggregate(&t, &spec.stoich_matrices().xi_y).unwrap();
        let rep = affinities(&c, 1.0);
        assert!(!rep.pairs.is_empty());
        for p in rep.pairs {
            assert!(p.delta_g.abs() < 1e-12, "{p:?}");
        }
    }
}
