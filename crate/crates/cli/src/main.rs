//! `jumprep`: catalog inspection, single checks, the `verify-all` suite and
//! figure data.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails or a
//! computation errors, 2 for usage errors (bad flags, unknown names, malformed
//! descriptors).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use jumprep_core::catalog::{density_by_name, jump_pairs, list_entries, CatalogEntry, EntryDescriptor};
use jumprep_core::cuntz::{
    check_alternative_embedding, check_cuntz_relations, check_embedding, sample_expr, standard_test_functions,
    CuntzConfig, OperatorExpr, OperatorWord, RelationReport, TestFunction,
};
use jumprep_core::descriptor::MapDescriptor;
use jumprep_core::grid::xy_csv;
use jumprep_core::interval_dynamics::Interval;
use jumprep_core::jump::{check_jump_equals, jump_with_time, JumpSpec};
use jumprep_core::measure::{
    birkhoff_histogram, l1_to_cells, transport_density, ulam_density, Density, OrbitConfig, UlamConfig,
};
use jumprep_core::samples::{float_samples, midpoints, rational_samples};
use jumprep_core::scalar::{format_rational, parse_rational, rational_to_f64};
use jumprep_core::suite::{
    emit_figure, figure_of, invariance_check, run_verify_all, Backend, BranchOverride, RunConfig, SAMPLE_DENOMINATOR,
};
use jumprep_core::{Error, Rational};

#[derive(Parser, Debug)]
#[command(name = "jumprep", version, about = "Jump transformations, branching systems and their Cuntz representations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Arithmetic backend.
    #[arg(long, global = true, default_value = "exact", value_parser = parse_backend)]
    backend: Backend,
    /// Quadrature grid size M.
    #[arg(long, global = true, env = "JUMPREP_GRID", default_value_t = 4096)]
    grid: usize,
    /// Truncation K of countable systems.
    #[arg(long, global = true, env = "JUMPREP_TRUNCATION", default_value_t = 64)]
    truncation: u64,
    /// Iteration cap for first entry times.
    #[arg(long, global = true, default_value_t = 100_000)]
    entry_cap: u64,
    #[arg(long, global = true, default_value_t = jumprep_core::samples::DEFAULT_SEED)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Built-in maps.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// First entry times and jump transformations.
    #[command(subcommand)]
    Jump(JumpCmd),
    /// Isometries and Cuntz relations.
    #[command(subcommand)]
    Cuntz(CuntzCmd),
    /// Transfer operators and invariant densities.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Every check on the three catalog jump pairs.
    VerifyAll {
        /// Jump-equivalence samples per pair.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Replace a branch before checking: `name:i:a,b,c,d`.
        #[arg(long = "override", value_parser = parse_override)]
        overrides: Vec<BranchOverride>,
    },
    /// `(x, T(x))` samples of a catalog map as CSV.
    Figure { name: String },
}

#[derive(Subcommand, Debug)]
enum CatalogCmd {
    List,
    Show {
        name: String,
        #[arg(long, value_enum, default_value = "json")]
        emit: Emit,
    },
}

#[derive(Subcommand, Debug)]
enum JumpCmd {
    /// `e(x)` and `J(x)` by iterating the map.
    Apply {
        #[arg(long)]
        map: String,
        /// Target set `lo,hi`; defaults to the range of the first branch.
        #[arg(long)]
        set: Option<String>,
        #[arg(long, value_parser = parse_rational_arg)]
        x: Rational,
    },
    /// Jump by iteration against the closed form of another map.
    Verify {
        #[arg(long)]
        map: String,
        #[arg(long)]
        against: String,
        #[arg(long)]
        set: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

#[derive(Subcommand, Debug)]
enum CuntzCmd {
    /// Cuntz relations on the five standard test functions.
    Check {
        #[arg(long)]
        map: String,
        /// Truncation of a countable system; overrides `--truncation`.
        #[arg(long)]
        depth: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        emit: Emit,
    },
    /// `S_2^{n-1} S_1` against the generators of the jump system.
    Embed {
        #[arg(long)]
        map: String,
        /// Jump system; defaults to the catalog partner of `--map`.
        #[arg(long)]
        against: Option<String>,
        #[arg(long, default_value_t = 20)]
        nmax: usize,
    },
    /// `s_n* s_m = δ_nm` for the alternative embedding words.
    Alternative {
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 8)]
        nmax: usize,
    },
    /// A word applied to a test function, sampled at grid midpoints as CSV.
    Apply {
        #[arg(long)]
        map: String,
        /// Letters such as `S2 S1*`.
        #[arg(long)]
        word: String,
        /// One of `1`, `x`, `x^2`, `chi[0,1/2)`, `1/(x+1)`.
        #[arg(long, default_value = "1")]
        function: String,
        #[arg(long, default_value_t = 1024)]
        points: usize,
    },
}

#[derive(Subcommand, Debug)]
enum MeasureCmd {
    /// Fixed-point residual of the transfer operator.
    Invariance {
        #[arg(long)]
        map: String,
        /// Density name; defaults to the entry's invariant density.
        #[arg(long)]
        density: Option<String>,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
    /// `|f_1'| φ∘f_1`, up to a constant.
    Transport {
        #[arg(long)]
        map: String,
        #[arg(long)]
        density: Option<String>,
    },
    /// Ulam approximation of the invariant density.
    Ulam {
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 4096)]
        cells: usize,
        /// Compare against this density (L1 over cells).
        #[arg(long)]
        density: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        emit: Emit,
    },
    /// Orbit occupation histogram.
    Orbit {
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        #[arg(long, value_parser = parse_rational_arg)]
        start: Option<Rational>,
        #[arg(long)]
        density: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        emit: Emit,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Emit {
    Json,
    Csv,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_override(s: &str) -> Result<BranchOverride, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// A finished command: what to print and whether its checks passed.
struct Outcome {
    text: String,
    passed: bool,
}

impl Outcome {
    fn info(text: String) -> Self {
        Outcome { text, passed: true }
    }

    fn json(value: &Value, passed: bool) -> Result<Self, Error> {
        Ok(Outcome { text: serde_json::to_string_pretty(value)? + "\n", passed })
    }
}

fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::UnknownEntry(_)
            | Error::InvalidConfig(_)
            | Error::ParseRational(_)
            | Error::Descriptor(_)
            | Error::Json(_)
            | Error::Io(_)
            | Error::InvalidInterval { .. }
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = RunConfig {
        backend: cli.common.backend,
        grid: cli.common.grid,
        truncation: cli.common.truncation,
        entry_cap: cli.common.entry_cap,
        seed: cli.common.seed,
        ..RunConfig::default()
    };
    let result = cfg.validate().and_then(|_| run(cli.command, cfg)).and_then(|out| {
        match &cli.common.output {
            Some(path) => fs::write(path, &out.text)?,
            None => print!("{}", out.text),
        }
        Ok(out.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}

fn run(command: Command, mut cfg: RunConfig) -> Result<Outcome, Error> {
    match command {
        Command::Catalog(CatalogCmd::List) => {
            let mut text = String::new();
            for name in list_entries() {
                let e = cfg.entry(name)?;
                text.push_str(&format!("{name}\t{}\n", e.description));
            }
            Ok(Outcome::info(text))
        }
        Command::Catalog(CatalogCmd::Show { name, emit }) => {
            let e = load_entry(&name, &cfg)?;
            match emit {
                Emit::Json => Outcome::json(&serde_json::to_value(e.to_descriptor())?, true),
                Emit::Csv => Ok(Outcome::info(xy_csv(&figure_of(&e.map)?))),
            }
        }
        Command::Jump(cmd) => jump(cmd, &cfg),
        Command::Cuntz(cmd) => cuntz(cmd, &mut cfg),
        Command::Measure(cmd) => measure(cmd, &cfg),
        Command::VerifyAll { samples, overrides } => {
            cfg.samples = samples;
            cfg.overrides = overrides;
            let report = run_verify_all(&cfg)?;
            if let Some(first) = &report.first_failure {
                eprintln!("FAILED: {first} ({} failing checks)", report.failures.len());
            }
            Ok(Outcome { text: report.to_json()? + "\n", passed: report.passed })
        }
        Command::Figure { name } => Ok(Outcome::info(xy_csv(&emit_figure(&name, &cfg)?))),
    }
}

/// A catalog name, or a JSON file holding an entry or a bare map descriptor.
fn load_entry(spec: &str, cfg: &RunConfig) -> Result<CatalogEntry, Error> {
    let path = Path::new(spec);
    if !spec.ends_with(".json") && !path.is_file() {
        return cfg.entry(spec);
    }
    let value: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    if value.get("branch_system").is_some() {
        let d: EntryDescriptor = serde_json::from_value(value)?;
        return CatalogEntry::from_descriptor(&d);
    }
    let d: MapDescriptor = serde_json::from_value(value)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    CatalogEntry::from_map(name, d.build()?)
}

fn parse_set(text: &str) -> Result<Interval, Error> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| Error::InvalidConfig(format!("set `{text}` is not of the form lo,hi")))?;
    Interval::new(parse_rational(lo)?, parse_rational(hi)?)
}

fn target_of(e: &CatalogEntry, set: Option<&str>) -> Result<Interval, Error> {
    match set {
        Some(s) => parse_set(s),
        None => e.branch_system.range(1),
    }
}

fn density_for(e: &CatalogEntry, name: Option<&str>) -> Result<Density, Error> {
    match name {
        Some(n) => density_by_name(n),
        None => e
            .invariant_density
            .clone()
            .ok_or_else(|| Error::InvalidConfig(format!("{} has no invariant density; pass --density", e.name))),
    }
}

fn jump(cmd: JumpCmd, cfg: &RunConfig) -> Result<Outcome, Error> {
    match cmd {
        JumpCmd::Apply { map, set, x } => {
            let e = load_entry(&map, cfg)?;
            let spec = JumpSpec::new(e.map.clone(), target_of(&e, set.as_deref())?, cfg.entry_cap)?;
            let (y, k) = match cfg.backend {
                Backend::Exact => {
                    let (y, k) = jump_with_time(&spec, &x)?;
                    (json!(format_rational(&y)), k)
                }
                Backend::Float => {
                    let (y, k) = jump_with_time(&spec, &rational_to_f64(&x))?;
                    (json!(y), k)
                }
            };
            Outcome::json(
                &json!({ "map": e.name, "set": spec.target().to_string(), "x": format_rational(&x), "entry_time": k, "jump": y }),
                true,
            )
        }
        JumpCmd::Verify { map, against, set, samples } => {
            let base = load_entry(&map, cfg)?;
            let closed = load_entry(&against, cfg)?;
            let spec = JumpSpec::new(base.map.clone(), target_of(&base, set.as_deref())?, cfg.entry_cap)?;
            let r = match cfg.backend {
                Backend::Exact => {
                    let xs = rational_samples(base.map.ambient(), samples, SAMPLE_DENOMINATOR, cfg.seed);
                    check_jump_equals(&spec, &closed.map, &xs)
                }
                Backend::Float => check_jump_equals(&spec, &closed.map, &float_samples(1e-3, 1.0, samples, cfg.seed)),
            };
            let passed = r.compared > 0
                && r.excluded.is_empty()
                && match cfg.backend {
                    Backend::Exact => r.exact_zero,
                    Backend::Float => r.max_deviation <= 1e-9,
                };
            Outcome::json(&serde_json::to_value(&r)?, passed)
        }
    }
}

fn cuntz(cmd: CuntzCmd, cfg: &mut RunConfig) -> Result<Outcome, Error> {
    let tests = standard_test_functions();
    let ccfg = CuntzConfig { grid: cfg.grid, ..CuntzConfig::default() };
    match cmd {
        CuntzCmd::Check { map, depth, emit } => {
            if let Some(k) = depth {
                cfg.truncation = k;
                cfg.validate()?;
            }
            let rep = load_entry(&map, cfg)?.representation()?;
            let r = match cfg.backend {
                Backend::Exact => check_cuntz_relations::<Rational>(&rep, &tests, &ccfg)?,
                Backend::Float => check_cuntz_relations::<f64>(&rep, &tests, &ccfg)?,
            };
            match emit {
                Emit::Json => Outcome::json(&serde_json::to_value(&r)?, r.passed),
                Emit::Csv => Ok(Outcome { text: relations_csv(&r), passed: r.passed }),
            }
        }
        CuntzCmd::Embed { map, against, nmax } => {
            let base = load_entry(&map, cfg)?;
            let partner = match against {
                Some(a) => a,
                None => jump_pairs()
                    .iter()
                    .find(|(b, _)| *b == base.name)
                    .map(|(_, j)| j.to_string())
                    .ok_or_else(|| Error::InvalidConfig(format!("{} has no catalog jump partner; pass --against", base.name)))?,
            };
            let jump = load_entry(&partner, cfg)?;
            let (b, j) = (base.representation()?, jump.representation()?);
            let r = match cfg.backend {
                Backend::Exact => check_embedding::<Rational>(&b, &j, nmax, &tests, &ccfg)?,
                Backend::Float => check_embedding::<f64>(&b, &j, nmax, &tests, &ccfg)?,
            };
            Outcome::json(&serde_json::to_value(&r)?, r.passed)
        }
        CuntzCmd::Alternative { map, nmax } => {
            let rep = load_entry(&map, cfg)?.representation()?;
            let r = match cfg.backend {
                Backend::Exact => check_alternative_embedding::<Rational>(&rep, nmax, &tests, &ccfg)?,
                Backend::Float => check_alternative_embedding::<f64>(&rep, nmax, &tests, &ccfg)?,
            };
            Outcome::json(&serde_json::to_value(&r)?, r.passed)
        }
        CuntzCmd::Apply { map, word, function, points } => {
            let rep = load_entry(&map, cfg)?.representation()?;
            let w: OperatorWord = word.parse()?;
            let phi = find_function(&tests, &function)?;
            if points < 1 {
                return Err(Error::InvalidConfig("need at least one point".into()));
            }
            Ok(Outcome::info(xy_csv(&sample_expr(&rep, &OperatorExpr::from(w), phi, points)?)))
        }
    }
}

fn find_function<'a>(tests: &'a [TestFunction], name: &str) -> Result<&'a TestFunction, Error> {
    tests.iter().find(|t| t.to_string() == name).ok_or_else(|| {
        let known: Vec<String> = tests.iter().map(|t| t.to_string()).collect();
        Error::InvalidConfig(format!("unknown test function `{name}`; expected one of {}", known.join(", ")))
    })
}

fn relations_csv(r: &RelationReport) -> String {
    let mut out = String::from("relation,function,max_deviation,exact_zero,checked\n");
    for (name, d) in [("isometry", &r.isometry), ("projection", &r.projection)] {
        out.push_str(&format!("{name},all,{},{},{}\n", d.max, d.exact_zero, d.checked));
    }
    if let Some(d) = &r.completeness.pointwise {
        out.push_str(&format!("completeness,all,{},{},{}\n", d.max, d.exact_zero, d.checked));
    }
    for c in &r.completeness.entries {
        out.push_str(&format!("completeness_residual_sq,{},{},,\n", c.function, c.residual_sq));
    }
    out
}

fn measure(cmd: MeasureCmd, cfg: &RunConfig) -> Result<Outcome, Error> {
    match cmd {
        MeasureCmd::Invariance { map, density, points } => {
            let e = load_entry(&map, cfg)?;
            let phi = density_for(&e, density.as_deref())?;
            let xs = midpoints(e.map.ambient(), points);
            let (passed, mut detail) = match cfg.backend {
                Backend::Exact => invariance_check::<Rational>(&e.branch_system, &phi, &xs)?,
                Backend::Float => invariance_check::<f64>(&e.branch_system, &phi, &xs)?,
            };
            detail["density"] = json!(phi.formula());
            Outcome::json(&detail, passed)
        }
        MeasureCmd::Transport { map, density } => {
            let e = load_entry(&map, cfg)?;
            let phi = density_for(&e, density.as_deref())?;
            let psi = transport_density(&e.branch_system, &phi)?;
            Outcome::json(&json!({ "map": e.name, "from": phi.formula(), "transported": psi.formula() }), true)
        }
        MeasureCmd::Ulam { map, cells, density, emit } => {
            let e = load_entry(&map, cfg)?;
            let r = ulam_density(&e.map, &UlamConfig::new(cells))?;
            match emit {
                Emit::Csv => {
                    let g = r.density(&e.map)?;
                    let rows: Vec<(f64, f64)> =
                        g.nodes().iter().map(rational_to_f64).zip(g.values().iter().copied()).collect();
                    Ok(Outcome::info(xy_csv(&rows)))
                }
                Emit::Json => {
                    let l1 = match density.as_deref() {
                        Some(d) => Some(l1_to_cells(&r.masses, &e.map, &density_by_name(d)?)?),
                        None => None,
                    };
                    Outcome::json(
                        &json!({
                            "map": e.name,
                            "cells": cells,
                            "iterations": r.iterations,
                            "change": r.change,
                            "pieces_used": r.pieces_used,
                            "l1_to_density": l1,
                        }),
                        true,
                    )
                }
            }
        }
        MeasureCmd::Orbit { map, steps, bins, start, density, emit } => {
            let e = load_entry(&map, cfg)?;
            if bins < 1 {
                return Err(Error::InvalidConfig("need at least one bin".into()));
            }
            let h = birkhoff_histogram(&e.map, &OrbitConfig { steps, bins, seed: cfg.seed, start })?;
            match emit {
                Emit::Csv => {
                    let (lo, hi) = e.map.ambient().to_f64();
                    let w = (hi - lo) / bins as f64;
                    let rows: Vec<(f64, f64)> =
                        h.frequencies.iter().enumerate().map(|(j, f)| (lo + (j as f64 + 0.5) * w, f / w)).collect();
                    Ok(Outcome::info(xy_csv(&rows)))
                }
                Emit::Json => {
                    let l1 = match density.as_deref() {
                        Some(d) => Some(l1_to_cells(&h.frequencies, &e.map, &density_by_name(d)?)?),
                        None => None,
                    };
                    Outcome::json(
                        &json!({
                            "map": e.name,
                            "steps": steps,
                            "bins": bins,
                            "start": h.start,
                            "exact_orbit": h.exact_orbit,
                            "counts": h.counts,
                            "l1_to_density": l1,
                        }),
                        true,
                    )
                }
            }
        }
    }
}
