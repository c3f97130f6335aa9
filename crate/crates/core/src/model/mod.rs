//! Reaction network model: species, reversible mass-action reactions,
//! stoichiometric matrices and the finiteness constraints that carve out a
//! finite counting space.

mod parse;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use parse::{parse_crn, ParseError, ParseErrorKind};
pub use validate::{validate_hypotheses, SignedStep, ValidationMode, ValidationReport, Violation};

/// Largest stoichiometric coefficient accepted by the parser. Falling
/// factorials of larger orders leave the double range quickly.
pub const MAX_COEFFICIENT: u32 = 1 << 16;

/// Firing direction of a reversible reaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Forward, Direction::Backward];

    pub fn sign(self) -> i64 {
        match self {
            Direction::Forward => 1,
            Direction::Backward => -1,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    fn symbol(self) -> char {
        match self {
            Direction::Forward => '+',
            Direction::Backward => '-',
        }
    }
}

/// A reaction index together with the direction it fired in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeLabel {
    pub reaction: usize,
    pub direction: Direction,
}

impl EdgeLabel {
    pub fn new(reaction: usize, direction: Direction) -> Self {
        Self { reaction, direction }
    }

    pub fn reversed(self) -> Self {
        Self::new(self.reaction, self.direction.reversed())
    }
}

impl fmt::Display for EdgeLabel {
    /// One-based reaction number followed by the direction sign, e.g. `2-`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.reaction + 1, self.direction.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSpecies {
    pub name: String,
    /// Clamped concentration, amount per volume.
    pub concentration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionDecl {
    pub id: String,
    pub reactant_y: Vec<u32>,
    pub product_y: Vec<u32>,
    pub reactant_x: Vec<u32>,
    pub product_x: Vec<u32>,
    /// Forward rate constant.
    pub kf: f64,
    /// Backward rate constant.
    pub kr: f64,
}

impl ReactionDecl {
    /// Internal and external coefficients consumed when firing in `direction`.
    pub fn consumed(&self, direction: Direction) -> (&[u32], &[u32]) {
        match direction {
            Direction::Forward => (&self.reactant_y, &self.reactant_x),
            Direction::Backward => (&self.product_y, &self.product_x),
        }
    }

    pub fn rate_constant(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Forward => self.kf,
            Direction::Backward => self.kr,
        }
    }

    /// Molecularity of the reactant side for `direction`, X and Y together.
    pub fn order(&self, direction: Direction) -> u32 {
        let (y, x) = self.consumed(direction);
        y.iter().chain(x).sum()
    }

    /// Net change of the internal copy numbers on one forward firing.
    pub fn net_y(&self) -> Vec<i64> {
        net(&self.reactant_y, &self.product_y)
    }

    pub fn net_x(&self) -> Vec<i64> {
        net(&self.reactant_x, &self.product_x)
    }

    /// Net internal change when firing in `direction`.
    pub fn step(&self, direction: Direction) -> Vec<i64> {
        let s = direction.sign();
        self.net_y().into_iter().map(|v| v * s).collect()
    }
}

fn net(reactant: &[u32], product: &[u32]) -> Vec<i64> {
    reactant
        .iter()
        .zip(product)
        .map(|(&r, &p)| p as i64 - r as i64)
        .collect()
}

/// Constraint that bounds the counting space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinitenessConstraint {
    /// Sum of the listed internal copy numbers equals `total`.
    Conserve { species: Vec<usize>, total: u64 },
    /// Copy number of one internal species is at most `max`.
    Bound { species: usize, max: u64 },
}

impl FinitenessConstraint {
    pub fn is_satisfied(&self, state: &[u64]) -> bool {
        match self {
            FinitenessConstraint::Conserve { species, total } => {
                species.iter().map(|&j| state[j]).sum::<u64>() == *total
            }
            FinitenessConstraint::Bound { species, max } => state[*species] <= *max,
        }
    }
}

/// A parsed, validated chemostatted reaction network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrnSpec {
    pub internal_species: Vec<String>,
    pub external_species: Vec<ExternalSpecies>,
    pub reactions: Vec<ReactionDecl>,
    pub constraints: Vec<FinitenessConstraint>,
    /// System size, volume times Avogadro's number.
    pub omega: f64,
    pub kbt: f64,
}

impl CrnSpec {
    pub fn n_internal(&self) -> usize {
        self.internal_species.len()
    }

    pub fn n_external(&self) -> usize {
        self.external_species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn alpha(&self) -> Vec<f64> {
        self.external_species.iter().map(|x| x.concentration).collect()
    }

    pub fn internal_index(&self, name: &str) -> Option<usize> {
        self.internal_species.iter().position(|s| s == name)
    }

    pub fn stoich_matrices(&self) -> StoichiometricMatrices {
        stoich_matrices(self)
    }

    /// Renders the network in the line-oriented document format accepted by
    /// [`parse_crn`]. Parsing the output yields an identical value.
    pub fn to_document(&self) -> String {
        use std::fmt::Write;

        let mut out = String::new();
        writeln!(out, "species internal {}", self.internal_species.join(" ")).unwrap();
        if !self.external_species.is_empty() {
            let xs: Vec<String> = self
                .external_species
                .iter()
                .map(|x| format!("{}={}", x.name, fmt_float(x.concentration)))
                .collect();
            writeln!(out, "species external {}", xs.join(" ")).unwrap();
        }
        for r in &self.reactions {
            writeln!(
                out,
                "reaction {}: {} <-> {} ; kf={} kr={}",
                r.id,
                self.side(&r.reactant_x, &r.reactant_y),
                self.side(&r.product_x, &r.product_y),
                fmt_float(r.kf),
                fmt_float(r.kr),
            )
            .unwrap();
        }
        for c in &self.constraints {
            match c {
                FinitenessConstraint::Conserve { species, total } => {
                    let names: Vec<&str> = species
                        .iter()
                        .map(|&j| self.internal_species[j].as_str())
                        .collect();
                    writeln!(out, "conserve {} = {}", names.join(" + "), total).unwrap();
                }
                FinitenessConstraint::Bound { species, max } => {
                    writeln!(out, "bound {} <= {}", self.internal_species[*species], max).unwrap();
                }
            }
        }
        writeln!(out, "omega {}", fmt_float(self.omega)).unwrap();
        writeln!(out, "kbt {}", fmt_float(self.kbt)).unwrap();
        out
    }

    fn side(&self, x: &[u32], y: &[u32]) -> String {
        let names = self
            .external_species
            .iter()
            .map(|s| s.name.as_str())
            .zip(x)
            .chain(self.internal_species.iter().map(String::as_str).zip(y));
        let terms: Vec<String> = names
            .filter(|(_, &c)| c > 0)
            .map(|(n, &c)| if c == 1 { n.to_string() } else { format!("{c}*{n}") })
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

/// Dense integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Exact integer product with a column vector.
    pub fn mul_vec(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }
}

/// Net stoichiometric matrices; column `l` is the net change of reaction `l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoichiometricMatrices {
    pub xi_x: IntMatrix,
    pub xi_y: IntMatrix,
}

impl StoichiometricMatrices {
    /// Column `l` of the stacked matrix, X rows above Y rows.
    pub fn stacked_column(&self, l: usize) -> Vec<i64> {
        let mut col = self.xi_x.column(l);
        col.extend(self.xi_y.column(l));
        col
    }
}

pub fn stoich_matrices(spec: &CrnSpec) -> StoichiometricMatrices {
    let m = spec.n_reactions();
    let mut xi_x = IntMatrix::zeros(spec.n_external(), m);
    let mut xi_y = IntMatrix::zeros(spec.n_internal(), m);
    for (l, r) in spec.reactions.iter().enumerate() {
        for (i, v) in r.net_x().into_iter().enumerate() {
            xi_x.set(i, l, v);
        }
        for (j, v) in r.net_y().into_iter().enumerate() {
            xi_y.set(j, l, v);
        }
    }
    StoichiometricMatrices { xi_x, xi_y }
}

#[cfg(test)]
pub(crate) mod fixtures {
    pub const TRI: &str = "\
species internal Y0 Y1 Y2
species external X1=1.0 X2=1.0
reaction R1: X1 + Y0 <-> Y1 ; kf=1 kr=2
reaction R2: Y1 <-> Y2 ; kf=1 kr=2
reaction R3: Y2 <-> X2 + Y0 ; kf=1 kr=2
conserve Y0+Y1+Y2 = 1
omega 1
";

    pub fn tri() -> super::CrnSpec {
        super::parse_crn(TRI).unwrap()
    }

    pub fn tri_with_total(total: u64) -> super::CrnSpec {
        super::parse_crn(&TRI.replace("= 1", &format!("= {total}"))).unwrap()
    }
}
