//! Cycle and reaction-cycle fluxes of mass-action reaction networks on a
//! finite counting space.
//!
//! The pipeline runs `model` (parse and validate a network) into
//! `state_space` (enumerate states, assemble the generator), `cycles`
//! (elementary circuits), `flux` (closed-form steady-state cycle fluxes),
//! `reaction_cycles` (grouping by net reaction counts, affinities) and
//! `asymptotics` (the large-volume limit). `ssa` is an independent
//! simulation oracle.

pub mod asymptotics;
pub mod cli;
pub mod cycles;
pub mod error;
pub mod flux;
pub mod linalg;
pub mod model;
pub mod reaction_cycles;
pub mod report;
pub mod ssa;
pub mod state_space;

pub use cycles::{enumerate_cycles, Cycle, DEFAULT_MAX_CYCLES};
pub use error::{Error, Result};
pub use flux::{cycle_flux, flux_table, stationary_from_minors, FluxOptions, FluxTable};
pub use model::{parse_crn, CrnSpec, Direction, EdgeLabel};
pub use reaction_cycles::{affinities, aggregate, phi, ClassFluxTable};
pub use state_space::{build_generator, enumerate_states, LabeledGenerator, StateSpace, XMode};
