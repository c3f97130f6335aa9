use std::fmt;

use serde::Serialize;

use super::{CrnSpec, Direction, EdgeLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ValidationMode {
    /// Pairwise distinct columns of the stacked stoichiometric matrix.
    Faithful,
    /// Additionally, the 2M signed internal steps are pairwise distinct, so
    /// every counting-space edge has a unique (reaction, direction) label.
    #[default]
    Strict,
}

/// One signed step `±Ξ_l^Y`.
pub type SignedStep = EdgeLabel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// Reactions `a` and `b` have identical stacked columns.
    DuplicateColumn { a: usize, b: usize },
    /// Two signed internal steps coincide.
    StepCollision { a: SignedStep, b: SignedStep },
    /// External species appear outside the first reactant side or the last
    /// product side.
    ExchangeShape { reaction: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateColumn { a, b } => {
                write!(f, "reactions {} and {} have identical stoichiometric columns", a + 1, b + 1)
            }
            Violation::StepCollision { a, b } => {
                write!(f, "signed steps {a} and {b} coincide in internal-species space")
            }
            Violation::ExchangeShape { reaction } => {
                write!(f, "reaction {} exchanges external species outside R1 input / RM output", reaction + 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub faithful_ok: bool,
    pub strict_ok: bool,
    /// Present only when the restricted input/output shape was requested.
    pub exchange_shape_ok: Option<bool>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        let base = match self.mode {
            ValidationMode::Faithful => self.faithful_ok,
            ValidationMode::Strict => self.faithful_ok && self.strict_ok,
        };
        base && self.exchange_shape_ok.unwrap_or(true)
    }
}

pub fn validate_hypotheses(spec: &CrnSpec, mode: ValidationMode, exchange_shape: bool) -> ValidationReport {
    let xi = spec.stoich_matrices();
    let m = spec.n_reactions();
    let mut violations = Vec::new();

    let columns: Vec<Vec<i64>> = (0..m).map(|l| xi.stacked_column(l)).collect();
    let mut faithful_ok = true;
    for a in 0..m {
        for b in a + 1..m {
            if columns[a] == columns[b] {
                faithful_ok = false;
                violations.push(Violation::DuplicateColumn { a, b });
            }
        }
    }

    let mut strict_ok = true;
    if mode == ValidationMode::Strict {
        let steps: Vec<(SignedStep, Vec<i64>)> = (0..m)
            .flat_map(|l| Direction::BOTH.map(|d| (EdgeLabel::new(l, d), spec.reactions[l].step(d))))
            .collect();
        for i in 0..steps.len() {
            for j in i + 1..steps.len() {
                if steps[i].1 == steps[j].1 {
                    strict_ok = false;
                    violations.push(Violation::StepCollision { a: steps[i].0, b: steps[j].0 });
                }
            }
        }
    }

    let exchange_shape_ok = exchange_shape.then(|| {
        let mut ok = true;
        for (l, r) in spec.reactions.iter().enumerate() {
            let bad_input = l != 0 && r.reactant_x.iter().any(|&c| c > 0);
            let bad_output = l + 1 != m && r.product_x.iter().any(|&c| c > 0);
            if bad_input || bad_output {
                ok = false;
                violations.push(Violation::ExchangeShape { reaction: l });
            }
        }
        ok
    });

    ValidationReport { mode, faithful_ok, strict_ok, exchange_shape_ok, violations }
}
