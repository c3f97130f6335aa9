//! Command-line front end.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::asymptotics::{
    build_limit_generator, macroscopic_class_flux, explicit_class_flux, v_sweep, ConcentrationAssignment, VFamily,
};
use crate::cycles::{enumerate_cycles, Cycle, DEFAULT_MAX_CYCLES};
use crate::error::{Error, Result};
use crate::flux::{flux_table, FluxOptions, FluxTable};
use crate::model::{parse_crn, validate_hypotheses, CrnSpec, ValidationMode};
use crate::reaction_cycles::{affinities, aggregate};
use crate::report::{self, num};
use crate::ssa::{gillespie, simulate_replicas, CountOptions, DEFAULT_BATCHES, RNG_NAME};
use crate::state_space::{build_generator, enumerate_states, LabeledGenerator, StateSpace, XMode};

/// Process exit status for a failed hypothesis check.
pub const EXIT_VALIDATION: i32 = 1;
/// Process exit status for any runtime error.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Check the network hypotheses.
    Validate,
    /// Enumerate the counting space.
    States,
    /// Cycle fluxes and the stationary distribution.
    Fluxes,
    /// Reaction-cycle class fluxes and affinities.
    Classes,
    /// Large-volume class fluxes on the limit generator.
    Limit,
    /// Convergence of scaled fluxes toward the limit.
    Sweep,
    /// Simulated cycle counts against the exact fluxes.
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum XModeArg {
    /// Falling factorial of `round(alpha * omega)`.
    Ff,
    /// `(alpha * omega)^xi`.
    Conc,
}

impl From<XModeArg> for XMode {
    fn from(m: XModeArg) -> Self {
        match m {
            XModeArg::Ff => XMode::FallingFactorial,
            XModeArg::Conc => XMode::Concentration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    /// Mass-action rates at size V with copy numbers round(beta * V).
    Crn,
    /// `V * Qhat + E`, with `E` the mesoscopic generator at `--omega`.
    Synthetic,
}

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "crnflux", version, about = "Cycle fluxes of chemical master equation chains")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Network description file.
    pub input: PathBuf,
    /// System size; defaults to the value in the input file.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Longest cycle to enumerate; unbounded by default.
    #[arg(long)]
    pub max_cycle_len: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MAX_CYCLES)]
    pub max_cycles: usize,
    /// Comma-separated volumes for `sweep`.
    #[arg(long, value_delimiter = ',', default_values_t = [100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0])]
    pub v_list: Vec<f64>,
    /// JSON concentration assignment; all ones when absent.
    #[arg(long)]
    pub beta: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent simulation replicas, seeded `seed, seed+1, ...`.
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    #[arg(long, default_value_t = 1e4)]
    pub t_end: f64,
    /// Initial state index for `simulate`.
    #[arg(long, default_value_t = 0)]
    pub init: usize,
    #[arg(long, default_value_t = DEFAULT_BATCHES)]
    pub batches: usize,
    #[arg(long, default_value_t = 0.0)]
    pub burn_in: f64,
    /// Write the first replica's trajectory as JSON lines.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Require distinct signed steps (default).
    #[arg(long, conflicts_with = "faithful")]
    pub strict: bool,
    /// Require only distinct stoichiometric columns.
    #[arg(long)]
    pub faithful: bool,
    #[arg(long, value_enum, default_value_t = XModeArg::Ff)]
    pub x_mode: XModeArg,
    /// Also check that external species enter only the first and last reactions.
    #[arg(long = "paper-shape", alias = "exchange-shape")]
    pub exchange_shape: bool,
    #[arg(long, value_enum, default_value_t = FamilyArg::Crn)]
    pub family: FamilyArg,
    /// Worker threads; 1 runs serially.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Result of a run: exit status and rendered output.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: i32,
    pub output: String,
}

impl Cli {
    fn mode(&self) -> ValidationMode {
        if self.faithful {
            ValidationMode::Faithful
        } else {
            ValidationMode::Strict
        }
    }

    fn check_flags(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("--{name} must be positive, got {v}")))
            }
        };
        if let Some(o) = self.omega {
            positive("omega", o)?;
        }
        positive("t-end", self.t_end)?;
        for &v in &self.v_list {
            positive("v-list", v)?;
        }
        if self.v_list.is_empty() {
            return Err(Error::Invalid("--v-list is empty".into()));
        }
        if self.replicas == 0 || self.batches < 2 || self.parallel == 0 || self.max_cycles == 0 {
            return Err(Error::Invalid("--replicas, --parallel and --max-cycles must be positive, --batches at least 2".into()));
        }
        if self.max_cycle_len.is_some_and(|l| l < 2) {
            return Err(Error::Invalid("--max-cycle-len must be at least 2".into()));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_end) {
            return Err(Error::Invalid("--burn-in must lie in [0, t-end)".into()));
        }
        Ok(())
    }

    fn header(&self, spec: &CrnSpec) -> String {
        let mut h = format!("# crnflux {}\n", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(h, "# command={:?} input={}", self.command, self.input.display());
        let _ = writeln!(
            h,
            "# omega={} kbt={} max_cycle_len={} max_cycles={} x_mode={:?} mode={:?} exchange_shape={} parallel={}",
            num(self.omega.unwrap_or(spec.omega)),
            num(spec.kbt),
            self.max_cycle_len.map_or("none".to_string(), |l| l.to_string()),
            self.max_cycles,
            self.x_mode,
            self.mode(),
            self.exchange_shape,
            self.parallel,
        );
        match self.command {
            Command::Limit | Command::Sweep => {
                let v: Vec<String> = self.v_list.iter().map(|v| num(*v)).collect();
                let _ = writeln!(
                    h,
                    "# beta={} family={:?} v_list={}",
                    self.beta.as_ref().map_or("uniform:1".to_string(), |p| p.display().to_string()),
                    self.family,
                    v.join(" ")
                );
            }
            Command::Simulate => {
                let _ = writeln!(
                    h,
                    "# rng={RNG_NAME} seed={} replicas={} t_end={} init={} batches={} burn_in={}",
                    self.seed,
                    self.replicas,
                    num(self.t_end),
                    self.init,
                    self.batches,
                    num(self.burn_in)
                );
            }
            _ => {}
        }
        h
    }
}

/// Single-line error record for standard error.
pub fn error_record(e: &Error) -> String {
    let kind = match e {
        Error::Parse(_) => "parse",
        Error::UnboundedStateSpace(_) => "unbounded_state_space",
        Error::EmptyStateSpace => "empty_state_space",
        Error::AmbiguousEdge { .. } => "ambiguous_edge",
        Error::CycleBudgetExceeded(_) => "cycle_budget_exceeded",
        Error::SingularDenominator(_) => "singular_denominator",
        Error::MissingLabel(_) => "missing_label",
        Error::ClosureViolation { .. } => "closure_violation",
        Error::AbsorbingState(_) => "absorbing_state",
        Error::Assignment(_) => "assignment",
        Error::Invalid(_) => "invalid_argument",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    };
    json!({ "error": kind, "message": e.to_string() }).to_string()
}

struct Pipeline<'a> {
    cli: &'a Cli,
    spec: CrnSpec,
    opts: FluxOptions,
}

impl Pipeline<'_> {
    fn omega(&self) -> f64 {
        self.cli.omega.unwrap_or(self.spec.omega)
    }

    fn space(&self) -> Result<StateSpace> {
        enumerate_states(&self.spec)
    }

    fn generator(&self, space: &StateSpace) -> Result<LabeledGenerator> {
        build_generator(&self.spec, space, self.omega(), self.cli.x_mode.into())
    }

    fn cycles(&self, gen: &LabeledGenerator) -> Result<Vec<Cycle>> {
        enumerate_cycles(gen, self.cli.max_cycle_len.unwrap_or(usize::MAX), self.cli.max_cycles)
    }

    fn assignment(&self, space: &StateSpace) -> Result<ConcentrationAssignment> {
        match &self.cli.beta {
            Some(p) => ConcentrationAssignment::from_json(&self.spec, space, &std::fs::read_to_string(p)?),
            None => ConcentrationAssignment::uniform(&self.spec, space, 1.0),
        }
    }

    fn fluxes(&self) -> Result<(StateSpace, LabeledGenerator, FluxTable)> {
        let space = self.space()?;
        let gen = self.generator(&space)?;
        let cycles = self.cycles(&gen)?;
        let table = flux_table(&gen, &cycles, self.opts)?;
        Ok((space, gen, table))
    }
}

fn render<T: Serialize>(cli: &Cli, payload: T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&json!({ "config": cli, "result": payload }))?;
    s.push('\n');
    Ok(s)
}

/// Runs one command on already-parsed flags, returning the rendered output.
pub fn run(cli: &Cli) -> Result<Outcome> {
    cli.check_flags()?;
    let text = std::fs::read_to_string(&cli.input)?;
    let spec = parse_crn(&text)?;
    let p = Pipeline { cli, spec, opts: FluxOptions { parallel: cli.parallel > 1 } };
    let csv = cli.format == Format::Csv;
    let mut out = if csv { cli.header(&p.spec) } else { String::new() };
    let mut status = 0;

    match cli.command {
        Command::Validate => {
            let r = validate_hypotheses(&p.spec, cli.mode(), cli.exchange_shape);
            if !r.passed() {
                status = EXIT_VALIDATION;
            }
            if csv {
                out.push_str("check,result\n");
                let pf = |b: bool| if b { "pass" } else { "fail" };
                let _ = writeln!(out, "faithful,{}", pf(r.faithful_ok));
                let _ = writeln!(out, "strict,{}", pf(r.strict_ok));
                if let Some(ps) = r.exchange_shape_ok {
                    let _ = writeln!(out, "exchange_shape,{}", pf(ps));
                }
                let _ = writeln!(out, "overall,{}", pf(r.passed()));
                for v in &r.violations {
                    let _ = writeln!(out, "violation,\"{v}\"");
                }
            } else {
                let violations: Vec<String> = r.violations.iter().map(|v| v.to_string()).collect();
                out = render(cli, json!({ "report": r, "passed": r.passed(), "messages": violations }))?;
            }
        }
        Command::States => {
            let space = p.space()?;
            if csv {
                out.push_str(&report::states_csv(&space, &p.spec.internal_species));
            } else {
                let gen = p.generator(&space)?;
                out = render(cli, gen.to_json(Some(&space)))?;
            }
        }
        Command::Fluxes => {
            let (_, _, table) = p.fluxes()?;
            if csv {
                let _ = writeln!(out, "# denominator={} sign_warnings={}", num(table.denominator), table.sign_warnings);
                out.push_str(&report::flux_csv(&table));
            } else {
                out = render(cli, &table)?;
            }
        }
        Command::Classes => {
            let (_, _, table) = p.fluxes()?;
            let classes = aggregate(&table, &p.spec.stoich_matrices().xi_y)?;
            let aff = affinities(&classes, p.spec.kbt);
            if csv {
                out.push_str("# section=classes\n");
                out.push_str(&report::class_csv(&classes, &table));
                out.push_str("# section=affinities\n");
                out.push_str(&report::affinity_csv(&aff));
            } else {
                out = render(cli, json!({ "classes": classes, "affinities": aff }))?;
            }
        }
        Command::Limit => {
            let space = p.space()?;
            let asg = p.assignment(&space)?;
            let lim = build_limit_generator(&p.spec, &space, &asg)?;
            let cycles = p.cycles(&lim.generator)?;
            let j = macroscopic_class_flux(&lim, &cycles, &p.spec)?;
            let explicit = explicit_class_flux(&lim, &cycles, &p.spec, &asg)?;
            let rows: Vec<_> = j
                .classes
                .iter()
                .map(|c| {
                    let t = explicit.get(&c.net).copied().unwrap_or(f64::NAN);
                    let rel = if c.omega == 0.0 { (t - c.omega).abs() } else { ((t - c.omega) / c.omega).abs() };
                    (c.net.clone(), c.members.len(), c.omega, t, rel)
                })
                .collect();
            if csv {
                out.push_str("net,members,macroscopic,explicit,rel_diff\n");
                for (net, m, w, t, rel) in &rows {
                    let _ = writeln!(out, "{},{m},{},{},{}", report::join_i64(net), num(*w), num(*t), num(*rel));
                }
            } else {
                out = render(cli, json!({ "classes": j, "explicit": explicit.into_iter().collect::<Vec<_>>() }))?;
            }
        }
        Command::Sweep => {
            let space = p.space()?;
            let asg = p.assignment(&space)?;
            let family = match cli.family {
                FamilyArg::Crn => VFamily::Crn {
                    spec: p.spec.clone(),
                    space: space.clone(),
                    assignment: asg,
                    x_mode: cli.x_mode.into(),
                },
                FamilyArg::Synthetic => {
                    let lim = build_limit_generator(&p.spec, &space, &asg)?.generator;
                    let mut e = p.generator(&space)?.q().clone();
                    // The mesoscopic graph must match the limit graph.
                    for i in 0..e.nrows() {
                        for j in 0..e.ncols() {
                            if i != j && lim.rate(i, j) == 0.0 {
                                e[(i, j)] = 0.0;
                            }
                        }
                        e[(i, i)] = 0.0;
                        let row: f64 = e.row(i).iter().sum();
                        e[(i, i)] = -row;
                    }
                    VFamily::synthetic(lim, e)?
                }
            };
            let cycles = p.cycles(&family.limit()?)?;
            let table = v_sweep(&family, &cycles, &cli.v_list, Some(p.spec.n_reactions()))?;
            if csv {
                out.push_str(&report::sweep_csv(&table));
            } else {
                out = render(cli, &table)?;
            }
        }
        Command::Simulate => {
            let (_, gen, exact) = p.fluxes()?;
            let seeds: Vec<u64> = (0..cli.replicas as u64).map(|k| cli.seed.wrapping_add(k)).collect();
            let opts = CountOptions { batches: cli.batches, burn_in: cli.burn_in };
            if let Some(path) = &cli.trajectory {
                let traj = gillespie(&gen, cli.init, cli.t_end, cli.seed)?;
                traj.write_jsonl(std::io::BufWriter::new(std::fs::File::create(path)?))?;
            }
            let counts = simulate_replicas(&gen, cli.init, cli.t_end, &seeds, opts)?;
            let mut rows = Vec::new();
            for r in &exact.records {
                rows.push((r.cycle.id(), counts.estimate(&r.cycle.states), Some(r.omega)));
            }
            for k in counts.counts.keys() {
                if !exact.records.iter().any(|r| &r.cycle.states == k) {
                    let id = k.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("-");
                    rows.push((id, counts.estimate(k), None));
                }
            }
            if csv {
                out.push_str("cycle_id,count,t,estimate,stderr,seed,exact,z\n");
                for (id, e, w) in &rows {
                    let (exact, z) = match w {
                        Some(w) => (num(*w), num((e.estimate - w) / e.stderr)),
                        None => (String::new(), String::new()),
                    };
                    let _ = writeln!(
                        out,
                        "{id},{},{},{},{},{},{exact},{z}",
                        e.count,
                        num(counts.t),
                        num(e.estimate),
                        num(e.stderr),
                        cli.seed
                    );
                }
            } else {
                let rows: Vec<_> = rows
                    .iter()
                    .map(|(id, e, w)| json!({ "cycle_id": id, "empirical": e, "exact": w }))
                    .collect();
                out = render(cli, json!({ "t": counts.t, "seeds": counts.seeds, "rng": RNG_NAME, "rows": rows }))?;
            }
        }
    }
    Ok(Outcome { status, output: out })
}

/// Runs and writes to `--out` or standard output, returning the exit
/// status. Errors produce a single JSON line on standard error.
pub fn main_with(cli: Cli) -> i32 {
    let outcome = match rayon::ThreadPoolBuilder::new().num_threads(cli.parallel).build() {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(Error::Invalid(e.to_string())),
    };
    let written = outcome.and_then(|o| {
        match &cli.out {
            Some(p) => std::fs::write(p, &o.output)?,
            None => print!("{}", o.output),
        }
        Ok(o.status)
    });
    match written {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            EXIT_RUNTIME
        }
    }
}
