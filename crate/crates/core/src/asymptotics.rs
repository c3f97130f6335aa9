//! Large-volume limit of cycle and reaction-cycle fluxes.
//!
//! Every mesoscopic rate behaves like `V (a + O(1/V))` where the coefficient
//! `a` is the concentration-law rate `k prod(alpha^xi) prod(beta^xi)`. The
//! limit generator carries these coefficients on the same graph, and the
//! macroscopic class flux is the cycle flux on it, aggregated by net
//! reaction counts.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycles::Cycle;
use crate::error::{Error, Result};
use crate::flux::{flux_table, FluxOptions};
use crate::linalg::{complement, principal_minor};
use crate::model::{CrnSpec, Direction, EdgeLabel};
use crate::reaction_cycles::{aggregate, phi, ClassFluxTable};
use crate::state_space::{assemble_generator, falling_factorial, propensity, LabeledGenerator, StateSpace, XMode};

/// Internal concentrations attached to every state of the space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationAssignment {
    beta: Vec<Vec<f64>>,
    alpha: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct AssignmentEntry {
    state: Vec<u64>,
    beta: Vec<f64>,
}

impl ConcentrationAssignment {
    /// `beta[i]` belongs to state `i` of the space.
    pub fn new(spec: &CrnSpec, space: &StateSpace, beta: Vec<Vec<f64>>) -> Result<Self> {
        if beta.len() != space.len() {
            return Err(Error::Assignment(format!(
                "{} concentration vectors for {} states",
                beta.len(),
                space.len()
            )));
        }
        for (i, b) in beta.iter().enumerate() {
            if b.len() != spec.n_internal() {
                return Err(Error::Assignment(format!("state {i}: expected {} entries", spec.n_internal())));
            }
            if b.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
                return Err(Error::Assignment(format!("state {i}: concentrations must be positive")));
            }
        }
        Ok(Self { beta, alpha: spec.alpha() })
    }

    pub fn uniform(spec: &CrnSpec, space: &StateSpace, value: f64) -> Result<Self> {
        Self::new(spec, space, vec![vec![value; spec.n_internal()]; space.len()])
    }

    /// Reads `[{"state": [..], "beta": [..]}, ...]`; every state of the space
    /// must be covered.
    pub fn from_json(spec: &CrnSpec, space: &StateSpace, text: &str) -> Result<Self> {
        let entries: Vec<AssignmentEntry> = serde_json::from_str(text)?;
        let mut beta: Vec<Option<Vec<f64>>> = vec![None; space.len()];
        for e in entries {
            let i = space
                .index_of(&e.state)
                .ok_or_else(|| Error::Assignment(format!("state {:?} is not in the space", e.state)))?;
            beta[i] = Some(e.beta);
        }
        let beta = beta
            .into_iter()
            .enumerate()
            .map(|(i, b)| b.ok_or_else(|| Error::Assignment(format!("state {:?} has no concentrations", space.state(i)))))
            .collect::<Result<_>>()?;
        Self::new(spec, space, beta)
    }

    pub fn beta(&self, state: usize) -> &[f64] {
        &self.beta[state]
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }
}

/// `k prod_i alpha_i^xi_i prod_j beta_j^xi_j` for the reactant side of
/// `label`.
pub fn limit_coefficient_at(spec: &CrnSpec, label: EdgeLabel, alpha: &[f64], beta: &[f64]) -> f64 {
    let r = &spec.reactions[label.reaction];
    let (cy, cx) = r.consumed(label.direction);
    let mut a = r.rate_constant(label.direction);
    for (&al, &k) in alpha.iter().zip(cx) {
        a *= al.powi(k as i32);
    }
    for (&b, &k) in beta.iter().zip(cy) {
        a *= b.powi(k as i32);
    }
    a
}

pub fn limit_coefficient(spec: &CrnSpec, label: EdgeLabel, state: usize, assignment: &ConcentrationAssignment) -> f64 {
    limit_coefficient_at(spec, label, assignment.alpha(), assignment.beta(state))
}

/// Whether the internal copy numbers suffice to fire `label` from `state`.
/// External copy numbers grow with the volume and never block a step.
fn internally_enabled(spec: &CrnSpec, state: &[u64], label: EdgeLabel) -> bool {
    let (cy, _) = spec.reactions[label.reaction].consumed(label.direction);
    state.iter().zip(cy).all(|(&n, &k)| falling_factorial(n, k) > 0.0)
}

/// Limit generator: mesoscopic graph, concentration-law weights.
#[derive(Debug, Clone)]
pub struct LimitGenerator {
    pub generator: LabeledGenerator,
}

pub fn build_limit_generator(
    spec: &CrnSpec,
    space: &StateSpace,
    assignment: &ConcentrationAssignment,
) -> Result<LimitGenerator> {
    if assignment.len() != space.len() {
        return Err(Error::Assignment(format!(
            "assignment covers {} states, space has {}",
            assignment.len(),
            space.len()
        )));
    }
    let generator = assemble_generator(spec, space, spec.omega, |i, label| {
        Ok(if internally_enabled(spec, space.state(i), label) {
            limit_coefficient(spec, label, i, assignment)
        } else {
            0.0
        })
    })?;
    Ok(LimitGenerator { generator })
}

/// Macroscopic class fluxes: cycle fluxes on the limit generator, grouped
/// by net reaction counts.
pub fn macroscopic_class_flux(limit: &LimitGenerator, cycles: &[Cycle], spec: &CrnSpec) -> Result<ClassFluxTable> {
    let table = flux_table(&limit.generator, cycles, FluxOptions::default())?;
    aggregate(&table, &spec.stoich_matrices().xi_y)
}

/// The cycle's edge product regrouped by reaction and direction: for each
/// `(l, +/-)` occurring `c` times, `k^c (prod alpha^xi)^c` times the product
/// of `beta^xi` over the `c` states it fires from.
pub fn expanded_product(cycle: &Cycle, spec: &CrnSpec, assignment: &ConcentrationAssignment) -> Result<f64> {
    let key = phi(cycle, spec.n_reactions())?;
    let firing: Vec<(usize, EdgeLabel)> = cycle
        .states
        .iter()
        .zip(&cycle.labels)
        .map(|(&s, l)| (s, l.expect("phi checked labels")))
        .collect();
    let mut product = 1.0;
    for d in Direction::BOTH {
        let counts = match d {
            Direction::Forward => &key.plus,
            Direction::Backward => &key.minus,
        };
        for (l, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let r = &spec.reactions[l];
            let (cy, cx) = r.consumed(d);
            let alpha_part: f64 = assignment.alpha().iter().zip(cx).map(|(&a, &k)| a.powi(k as i32)).product();
            product *= r.rate_constant(d).powi(c as i32) * alpha_part.powi(c as i32);
            for &(s, _) in firing.iter().filter(|(_, lab)| *lab == EdgeLabel::new(l, d)) {
                product *= assignment.beta(s).iter().zip(cy).map(|(&b, &k)| b.powi(k as i32)).product::<f64>();
            }
        }
    }
    Ok(product)
}

/// The explicit limit formula: `(-1)^(s-1)` times the regrouped product times
/// the ratio of limit-generator minors, summed per class.
pub fn explicit_class_flux(
    limit: &LimitGenerator,
    cycles: &[Cycle],
    spec: &CrnSpec,
    assignment: &ConcentrationAssignment,
) -> Result<BTreeMap<Vec<i64>, f64>> {
    let q = limit.generator.q();
    let n = q.nrows();
    let denom: f64 = (0..n).map(|j| principal_minor(q, &complement(n, &[j]))).sum();
    if denom == 0.0 {
        return Err(Error::SingularDenominator(denom));
    }
    let mut out: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for c in cycles {
        let key = phi(c, spec.n_reactions())?;
        let mut removed = c.states.clone();
        removed.sort_unstable();
        let sign = if (c.len() - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * expanded_product(c, spec, assignment)? * principal_minor(q, &complement(n, &removed)) / denom;
        *out.entry(key.net).or_default() += w;
    }
    Ok(out)
}

/// A family of generators indexed by volume, all on the same graph.
#[derive(Debug, Clone)]
pub enum VFamily {
    /// `Q(V) = V * qhat + perturbation`.
    Synthetic { limit: LabeledGenerator, perturbation: DMatrix<f64> },
    /// Mass-action rates at system size `V` with copy numbers
    /// `round(beta * V)` on each state of a fixed counting-space graph.
    Crn { spec: CrnSpec, space: StateSpace, assignment: ConcentrationAssignment, x_mode: XMode },
}

impl VFamily {
    pub fn synthetic(limit: LabeledGenerator, perturbation: DMatrix<f64>) -> Result<Self> {
        let n = limit.n_states();
        if perturbation.shape() != (n, n) {
            return Err(Error::Invalid("perturbation shape does not match the limit generator".into()));
        }
        for i in 0..n {
            let s: f64 = perturbation.row(i).iter().sum();
            if s.abs() > 1e-12 * perturbation.amax().max(1.0) {
                return Err(Error::Invalid(format!("perturbation row {i} sums to {s}, not zero")));
            }
        }
        Ok(VFamily::Synthetic { limit, perturbation })
    }

    pub fn limit(&self) -> Result<LabeledGenerator> {
        match self {
            VFamily::Synthetic { limit, .. } => Ok(limit.clone()),
            VFamily::Crn { spec, space, assignment, .. } => {
                Ok(build_limit_generator(spec, space, assignment)?.generator)
            }
        }
    }

    pub fn at(&self, v: f64) -> Result<LabeledGenerator> {
        match self {
            VFamily::Synthetic { limit, perturbation } => {
                let mut q = limit.q() * v + perturbation;
                for i in 0..q.nrows() {
                    q[(i, i)] = 0.0;
                }
                limit.with_matrix(q)
            }
            VFamily::Crn { spec, space, assignment, x_mode } => {
                let mut gen = assemble_generator(spec, space, v, |i, label| {
                    if !internally_enabled(spec, space.state(i), label) {
                        return Ok(0.0);
                    }
                    let counts: Vec<u64> = assignment.beta(i).iter().map(|b| (b * v).round() as u64).collect();
                    Ok(propensity(spec, &counts, label.reaction, label.direction, v, *x_mode))
                })?;
                gen.omega = v;
                Ok(gen)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub v: f64,
    pub key: String,
    pub mesoscopic_per_v: f64,
    pub limit: f64,
    pub abs_error: f64,
    /// `ln(e_prev / e) / ln(V / V_prev)` against the previous V for this key.
    pub est_order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn for_key<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.key == key)
    }
}

/// Compares `w(V)/V` with the limit value for each cycle (key `cycle:ID`)
/// and, when edges are labeled, each reaction class (key `class:c1 c2 ..`).
pub fn v_sweep(family: &VFamily, cycles: &[Cycle], v_list: &[f64], n_reactions: Option<usize>) -> Result<SweepTable> {
    let limit = family.limit()?;
    let limit_table = flux_table(&limit, cycles, FluxOptions::default())?;
    let class_key = |c: &Cycle| -> Result<Option<String>> {
        match n_reactions {
            Some(m) => {
                let k = phi(c, m)?;
                Ok(Some(format!(
                    "class:{}",
                    k.net.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
                )))
            }
            None => Ok(None),
        }
    };
    let keyed: Vec<(String, Option<String>)> = cycles
        .iter()
        .map(|c| Ok((format!("cycle:{}", c.id()), class_key(c)?)))
        .collect::<Result<_>>()?;

    let sums = |omegas: &[f64]| -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = keyed.iter().zip(omegas).map(|((k, _), &w)| (k.clone(), w)).collect();
        let mut classes: BTreeMap<String, f64> = BTreeMap::new();
        for ((_, ck), &w) in keyed.iter().zip(omegas) {
            if let Some(ck) = ck {
                *classes.entry(ck.clone()).or_default() += w;
            }
        }
        out.extend(classes);
        out
    };
    let limit_values = sums(&limit_table.records.iter().map(|r| r.omega).collect::<Vec<_>>());

    let per_v: Vec<Vec<(String, f64)>> = v_list
        .par_iter()
        .map(|&v| {
            let gen = family.at(v)?;
            let t = flux_table(&gen, cycles, FluxOptions::default())?;
            Ok(sums(&t.records.iter().map(|r| r.omega / v).collect::<Vec<_>>()))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut prev: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for (&v, values) in v_list.iter().zip(per_v) {
        for ((key, meso), (_, lim)) in values.into_iter().zip(&limit_values) {
            let err = (meso - lim).abs();
            let est_order = prev
                .get(&key)
                .filter(|(pv, pe)| *pe > 0.0 && err > 0.0 && *pv != v)
                .map(|(pv, pe)| (pe / err).ln() / (v / pv).ln());
            prev.insert(key.clone(), (v, err));
            rows.push(SweepRow { v, key, mesoscopic_per_v: meso, limit: *lim, abs_error: err, est_order });
        }
    }
    Ok(SweepTable { rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateExpansionRow {
    pub omega: f64,
    pub rate_per_omega: f64,
    pub gap: f64,
    pub gap_times_omega: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateExpansionReport {
    pub coefficient: f64,
    pub rows: Vec<RateExpansionRow>,
    /// `gap * omega` at the largest omega is at most twice the largest value
    /// seen before it, up to a floating-point floor.
    pub bounded: bool,
}

/// Compares `r(round(beta * omega); omega) / omega` with the limit
/// coefficient for each system size.
pub fn rate_expansion_check(
    spec: &CrnSpec,
    label: EdgeLabel,
    beta: &[f64],
    omegas: &[f64],
    x_mode: XMode,
) -> RateExpansionReport {
    let a = limit_coefficient_at(spec, label, &spec.alpha(), beta);
    let rows: Vec<RateExpansionRow> = omegas
        .iter()
        .map(|&omega| {
            let counts: Vec<u64> = beta.iter().map(|b| (b * omega).round() as u64).collect();
            let r = propensity(spec, &counts, label.reaction, label.direction, omega, x_mode) / omega;
            let gap = (r - a).abs();
            RateExpansionRow { omega, rate_per_omega: r, gap, gap_times_omega: gap * omega }
        })
        .collect();
    let bounded = match rows.split_last() {
        Some((last, earlier)) if !earlier.is_empty() => {
            let seen = earlier.iter().map(|r| r.gap_times_omega).fold(0.0, f64::max);
            last.gap_times_omega <= 2.0 * seen + 1e-9 * a.max(1.0) * last.omega
        }
        _ => true,
    };
    RateExpansionReport { coefficient: a, rows, bounded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{enumerate_cycles, DEFAULT_MAX_CYCLES};
    use crate::model::fixtures::tri;
    use crate::model::parse_crn;
    use crate::state_space::{build_generator, enumerate_states};

    fn tri_setup() -> (CrnSpec, StateSpace) {
        let spec = tri();
        let space = enumerate_states(&spec).unwrap();
        (spec, space)
    }

    #[test]
    fn coefficient_of_unimolecular_step() {
        let (spec, _) = tri_setup();
        let a = limit_coefficient_at(&spec, EdgeLabel::new(1, Direction::Forward), &spec.alpha(), &[0.2, 0.5, 0.3]);
        assert!((a - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_reactant_side_gives_bare_constant() {
        let spec = parse_crn("species internal A\nreaction r: 0 <-> A ; kf=2.5 kr=1\nbound A <= 3\n").unwrap();
        assert_eq!(limit_coefficient_at(&spec, EdgeLabel::new(0, Direction::Forward), &[], &[0.7]), 2.5);
    }

    #[test]
    fn coefficient_is_linear_in_alpha() {
        let (spec, _) = tri_setup();
        let l = EdgeLabel::new(0, Direction::Forward);
        let a1 = limit_coefficient_at(&spec, l, &[1.0, 1.0], &[0.4, 1.0, 1.0]);
        let a2 = limit_coefficient_at(&spec, l, &[2.0, 1.0], &[0.4, 1.0, 1.0]);
        assert!((a2 - 2.0 * a1).abs() < 1e-15);
    }

    #[test]
    fn unit_concentrations_reproduce_tri_generator() {
        let (spec, space) = tri_setup();
        let asg = ConcentrationAssignment::uniform(&spec, &space, 1.0).unwrap();
        let lim = build_limit_generator(&spec, &space, &asg).unwrap();
        let meso = build_generator(&spec, &space, 1.0, XMode::FallingFactorial).unwrap();
        assert_eq!(lim.generator.q(), meso.q());
    }

    #[test]
    fn beta_scaling_on_first_order_edges() {
        let (spec, space) = tri_setup();
        let a = build_limit_generator(&spec, &space, &ConcentrationAssignment::uniform(&spec, &space, 1.0).unwrap())
            .unwrap();
        let b = build_limit_generator(&spec, &space, &ConcentrationAssignment::uniform(&spec, &space, 3.0).unwrap())
            .unwrap();
        // R2 has internal order one in both directions.
        for e in a.generator.edges().iter().filter(|e| e.label.unwrap().reaction == 1) {
            assert!((b.generator.rate(e.from, e.to) - 3.0 * e.rate).abs() < 1e-14);
        }
    }

    #[test]
    fn incomplete_assignment_is_rejected() {
        let (spec, space) = tri_setup();
        let json = r#"[{"state":[1,0,0],"beta":[1,1,1]},{"state":[0,1,0],"beta":[1,1,1]}]"#;
        assert!(matches!(ConcentrationAssignment::from_json(&spec, &space, json), Err(Error::Assignment(_))));
        let json = r#"[{"state":[1,0,0],"beta":[1,1,1]},{"state":[0,1,0],"beta":[1,1,1]},{"state":[0,0,1],"beta":[1,0,1]}]"#;
        assert!(matches!(ConcentrationAssignment::from_json(&spec, &space, json), Err(Error::Assignment(_))));
        let json = r#"[{"state":[1,0,0],"beta":[1,1,1]},{"state":[0,1,0],"beta":[1,1,1]},{"state":[0,0,1],"beta":[1,2,1]}]"#;
        assert!(ConcentrationAssignment::from_json(&spec, &space, json).is_ok());
    }

    #[test]
    fn tri_macroscopic_class_flux() {
        let (spec, space) = tri_setup();
        let asg = ConcentrationAssignment::uniform(&spec, &space, 1.0).unwrap();
        let lim = build_limit_generator(&spec, &space, &asg).unwrap();
        let cycles = enumerate_cycles(&lim.generator, usize::MAX, DEFAULT_MAX_CYCLES).unwrap();
        let j = macroscopic_class_flux(&lim, &cycles, &spec).unwrap();
        assert!((j.get(&[1, 1, 1]).unwrap().omega - 1.0 / 21.0).abs() < 1e-14);
        assert!((j.get(&[-1, -1, -1]).unwrap().omega - 8.0 / 21.0).abs() < 1e-14);
        let fwd = cycles.iter().find(|c| c.id() == "0-1-2").unwrap();
        let bwd = cycles.iter().find(|c| c.id() == "0-2-1").unwrap();
        assert!((expanded_product(fwd, &spec, &asg).unwrap() - 1.0).abs() < 1e-15);
        assert!((expanded_product(bwd, &spec, &asg).unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn homogeneity_of_class_flux() {
        let (spec, space) = tri_setup();
        let asg = ConcentrationAssignment::uniform(&spec, &space, 1.0).unwrap();
        let lim = build_limit_generator(&spec, &space, &asg).unwrap();
        let cycles = enumerate_cycles(&lim.generator, usize::MAX, DEFAULT_MAX_CYCLES).unwrap();
        let scaled = LimitGenerator { generator: lim.generator.scaled(4.0).unwrap() };
        let a = macroscopic_class_flux(&lim, &cycles, &spec).unwrap();
        let b = macroscopic_class_flux(&scaled, &cycles, &spec).unwrap();
        for (x, y) in a.classes.iter().zip(&b.classes) {
            assert!((y.omega - 4.0 * x.omega).abs() <= 1e-13 * y.omega);
        }
    }

    #[test]
    fn unperturbed_family_is_exact() {
        let (spec, space) = tri_setup();
        let meso = build_generator(&spec, &space, 1.0, XMode::FallingFactorial).unwrap();
        let cycles = enumerate_cycles(&meso, usize::MAX, DEFAULT_MAX_CYCLES).unwrap();
        let fam = VFamily::synthetic(meso, DMatrix::zeros(3, 3)).unwrap();
        let t = v_sweep(&fam, &cycles, &[10.0, 1000.0], Some(3)).unwrap();
        for r in &t.rows {
            assert!(r.abs_error <= 1e-14 * r.limit.max(1e-300), "{r:?}");
        }
    }

    #[test]
    fn single_v_sweep() {
        let (spec, space) = tri_setup();
        let meso = build_generator(&spec, &space, 1.0, XMode::FallingFactorial).unwrap();
        let cycles = enumerate_cycles(&meso, usize::MAX, DEFAULT_MAX_CYCLES).unwrap();
        let mut e = DMatrix::zeros(3, 3);
        e[(0, 1)] = 0.1;
        e[(0, 0)] = -0.1;
        let fam = VFamily::synthetic(meso, e).unwrap();
        let t = v_sweep(&fam, &cycles[..1], &[50.0], None).unwrap();
        assert_eq!(t.rows.len(), 1);
        let r = &t.rows[0];
        assert_eq!(r.abs_error, (r.mesoscopic_per_v - r.limit).abs());
        assert!(r.est_order.is_none());
    }

    #[test]
    fn rate_expansion_first_and_second_order() {
        let (spec, _) = tri_setup();
        let rep = rate_expansion_check(
            &spec,
            EdgeLabel::new(1, Direction::Forward),
            &[0.25, 0.5, 0.25],
            &[1e2, 1e3, 1e4],
            XMode::FallingFactorial,
        );
        assert!(rep.bounded);
        assert!(rep.rows.iter().all(|r| r.gap < 1e-15));

        let spec = parse_crn("species internal A B\nreaction r: 2*A <-> B ; kf=1.5 kr=1\nbound A <= 2\nbound B <= 2\n").unwrap();
        let rep = rate_expansion_check(&spec, EdgeLabel::new(0, Direction::Forward), &[0.3, 0.1], &[1e2, 1e3, 1e4], XMode::FallingFactorial);
        assert!(rep.bounded);
        let last = rep.rows.last().unwrap();
        assert!((last.gap_times_omega - 1.5 * 0.3).abs() / (1.5 * 0.3) < 1e-6);

        let spec = parse_crn("species internal A\nreaction r: 0 <-> A ; kf=2 kr=1\nbound A <= 2\n").unwrap();
        let rep = rate_expansion_check(&spec, EdgeLabel::new(0, Direction::Forward), &[0.3], &[1e2, 1e3], XMode::FallingFactorial);
        assert!(rep.rows.iter().all(|r| r.gap == 0.0));
    }
}
