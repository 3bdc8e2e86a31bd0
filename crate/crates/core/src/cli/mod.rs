//! Command-line driver: presets, expression input and the solve, wkb, tau and
//! verify stages with their artifacts.
//!
//! Exit codes: 0 success, 1 failed check, 2 configuration or parse error,
//! 3 window exhausted.

pub mod expr;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::rhsolver::preset::{c1_data, c1_seed, check_cnm_tables, vacuum};
use crate::rhsolver::{run, verify_seed, Config, DressingTriple, RhData, RhError, Seed, TripleDto};
use crate::scalars::Rat;
use crate::symbols::Truncation;
use crate::tau::{difference_check, extract_v, genus_parity_check, integrate_f, BernoulliTable, TauDto, TauGradient};
use crate::verify::verify_all;
use crate::wkb::{exp_to_wkb, exp_to_wkb_bar, WkbDto};
use expr::{compile_expr, compile_scalar, parse_expr, ExprError};

#[derive(Parser, Debug)]
#[command(name = "toda-hbar", version, about = "Exact hbar-expansion of the Toda hierarchy")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the Riemann-Hilbert problem order by order.
    Solve(RunArgs),
    /// WKB phases of the dressing operators.
    Wkb(RunArgs),
    /// Tau function expansion.
    Tau(RunArgs),
    /// Lax, canonical, Riemann-Hilbert and oracle checks.
    Verify(RunArgs),
    /// Every stage.
    Run(RunArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// `c1-string` or `vacuum`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub fbar: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gbar: Option<String>,
    #[arg(long = "seed-x0", allow_hyphen_values = true)]
    pub seed_x0: Option<String>,
    #[arg(long = "seed-xbar0", allow_hyphen_values = true)]
    pub seed_xbar0: Option<String>,
    #[arg(long = "seed-phi0", allow_hyphen_values = true)]
    pub seed_phi0: Option<String>,
    /// Read the dressing triple from a `triple.json` instead of solving.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long = "hbar-order", default_value_t = 1)]
    pub hbar_order: u32,
    /// Defaults to `-xi_hi`.
    #[arg(long = "xi-lo", allow_hyphen_values = true)]
    pub xi_lo: Option<i64>,
    #[arg(long = "xi-hi", default_value_t = 4)]
    pub xi_hi: i64,
    #[arg(long = "t-deg", default_value_t = 2)]
    pub t_deg: u8,
    #[arg(long = "tbar-deg", default_value_t = 0)]
    pub tbar_deg: u8,
    /// Number of Lax flows checked on each side.
    #[arg(long, default_value_t = 2)]
    pub flows: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Artifact directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("--{flag}: {err}")]
    Expr { flag: &'static str, err: ExprError },
    #[error(transparent)]
    Rh(#[from] RhError),
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Expr { .. } => 2,
            CliError::Rh(RhError::Config(_) | RhError::InvalidData(_)) => 2,
            CliError::Rh(RhError::WindowExhausted { .. }) => 3,
            CliError::Rh(_) | CliError::Check(_) => 1,
        }
    }
}

fn check<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Check(e.to_string())
}

/// What a stage produced: text for stdout and named artifacts.
#[derive(Default)]
struct Output {
    text: String,
    json: Vec<(&'static str, serde_json::Value)>,
    files: Vec<(&'static str, String)>,
    failed: bool,
}

struct Problem {
    data: RhData,
    seed: Seed,
    c1: bool,
}

impl RunArgs {
    fn config(&self) -> Result<Config, CliError> {
        Ok(Config::new(self.hbar_order, self.xi_lo.unwrap_or(-self.xi_hi), self.xi_hi, self.t_deg, self.tbar_deg)?)
    }

    fn expressions(&self) -> [(&'static str, &Option<String>); 7] {
        [
            ("f", &self.f),
            ("g", &self.g),
            ("fbar", &self.fbar),
            ("gbar", &self.gbar),
            ("seed-x0", &self.seed_x0),
            ("seed-xbar0", &self.seed_xbar0),
            ("seed-phi0", &self.seed_phi0),
        ]
    }

    fn problem(&self, t: Truncation) -> Result<Option<Problem>, CliError> {
        let given = self.expressions().iter().filter(|(_, v)| v.is_some()).count();
        match (&self.preset, given) {
            (Some(_), n) if n > 0 => Err(CliError::Config("give either --preset or expressions, not both".into())),
            (Some(name), _) => {
                let (data, seed, c1) = match name.as_str() {
                    "c1-string" => (c1_data(t, &Rat::default()), c1_seed(t, &Rat::default()), true),
                    "vacuum" => {
                        let (d, s) = vacuum(t);
                        (d, s, false)
                    }
                    other => return Err(CliError::Config(format!("unknown preset '{other}'"))),
                };
                let cmp = verify_seed(&data, &seed, t)?;
                if !cmp.ok() {
                    return Err(CliError::Check(format!(
                        "preset {name} failed its seed self-test: {:?}",
                        cmp.mismatches
                    )));
                }
                Ok(Some(Problem { data, seed, c1 }))
            }
            (None, 0) => Ok(None),
            (None, 7) => {
                let parse = |flag: &'static str, src: &str| parse_expr(src).map_err(|err| CliError::Expr { flag, err });
                let [f, g, fbar, gbar, x0, xbar0, phi0] =
                    self.expressions().map(|(flag, v)| (flag, v.clone().unwrap()));
                let mut syms = Vec::new();
                for (flag, src) in [f, g, fbar, gbar] {
                    syms.push(compile_expr(&parse(flag, &src)?, t).map_err(|err| CliError::Expr { flag, err })?);
                }
                let t0 = t.with_n_hbar(0);
                let mut seeds = Vec::new();
                for (flag, src) in [x0, xbar0] {
                    let e = parse(flag, &src)?;
                    if e.contains_hbar() {
                        return Err(CliError::Config(format!("--{flag} must not contain hbar")));
                    }
                    seeds.push(compile_expr(&e, t0).map_err(|err| CliError::Expr { flag, err })?);
                }
                let phi0 = compile_scalar(&parse(phi0.0, &phi0.1)?, t)
                    .map_err(|err| CliError::Expr { flag: "seed-phi0", err })?;
                let [f, g, fbar, gbar]: [_; 4] = syms.try_into().expect("four symbols");
                let [x0, xbar0]: [_; 2] = seeds.try_into().expect("two seeds");
                Ok(Some(Problem { data: RhData::new(f, g, fbar, gbar)?, seed: Seed { x0, xbar0, phi0 }, c1: false }))
            }
            (None, _) => Err(CliError::Config(
                "expressions need all of --f --g --fbar --gbar --seed-x0 --seed-xbar0 --seed-phi0".into(),
            )),
        }
    }
}

fn read_triple(path: &Path) -> Result<DressingTriple, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let dto: TripleDto =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    DressingTriple::from_dto(&dto).ok_or_else(|| CliError::Config(format!("{}: inconsistent triple", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("artifacts serialize")
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stage {
    Solve,
    Wkb,
    Tau,
    Verify,
}

fn execute(args: &RunArgs, stages: &[Stage]) -> Result<Output, CliError> {
    let cfg = args.config()?;
    let problem = args.problem(cfg.working_trunc())?;
    let mut out = Output::default();
    let triple = match (&args.input, &problem) {
        (Some(path), _) => read_triple(path)?,
        (None, Some(p)) => {
            let sol = run(&cfg, &p.data, &p.seed)?;
            if stages.contains(&Stage::Solve) {
                let _ = writeln!(out.text, "solved to order {} on xi^{}..xi^{}", cfg.n_hbar, cfg.xi_lo, cfg.xi_hi);
                for n in 0..=cfg.n_hbar {
                    let _ = writeln!(out.text, "X_{n} = {}", sol.triple.x_n(n));
                    let _ = writeln!(out.text, "Xbar_{n} = {}", sol.triple.xbar_n(n));
                    let _ = writeln!(out.text, "phi_{n} = {}", sol.triple.phi[n as usize]);
                }
                let _ = writeln!(
                    out.text,
                    "residual: {} coefficients, {} mismatches",
                    sol.residual.checked,
                    sol.residual.mismatches.len()
                );
                if p.c1 {
                    let report = check_cnm_tables(&sol.triple, cfg.n_hbar);
                    out.files.push(("cnm.txt", report.render()));
                }
            }
            sol.triple
        }
        (None, None) => return Err(CliError::Config("give --preset, expressions or --input".into())),
    };
    if stages.contains(&Stage::Solve) {
        out.json.push(("triple.json", to_json(&triple.to_dto())));
    }
    let needs_phases = stages.iter().any(|s| matches!(s, Stage::Wkb | Stage::Tau));
    if needs_phases {
        let s = exp_to_wkb(&triple.x).map_err(check)?;
        let sbar = exp_to_wkb_bar(&triple.xbar, &triple.phi).map_err(check)?;
        for (name, p) in [("S", &s), ("Sbar", &sbar)] {
            if !p.invariants.ok() {
                out.failed = true;
                let _ = writeln!(out.text, "{name} invariant violations: {:?}", p.invariants.violations);
            }
        }
        if stages.contains(&Stage::Wkb) {
            for n in 0..=s.n_hbar() {
                let _ = writeln!(out.text, "S_{n} = {}", s.s.sym_h(n));
                let _ = writeln!(out.text, "Sbar_{n} = {}", sbar.s.sym_h(n));
            }
            let _ = writeln!(
                out.text,
                "wkb invariants: {} + {} checked, {} violations",
                s.invariants.checked,
                sbar.invariants.checked,
                s.invariants.violations.len() + sbar.invariants.violations.len()
            );
            #[derive(Serialize)]
            struct Phases {
                schema: u32,
                s: WkbDto,
                sbar: WkbDto,
            }
            out.json.push(("wkb.json", to_json(&Phases { schema: 1, s: s.to_dto(), sbar: sbar.to_dto() })));
        }
        if stages.contains(&Stage::Tau) {
            let tables = extract_v(&s, &sbar).map_err(check)?;
            let grad = TauGradient::from_tables(&tables, &BernoulliTable::new(tables.n_hbar() as usize + 1));
            let tau = integrate_f(&grad).map_err(check)?;
            let diff = difference_check(&tau.f, &tables.phi);
            let genus = genus_parity_check(&grad);
            for (n, f) in tau.f.iter().enumerate() {
                let _ = writeln!(out.text, "F_{n} = {f}");
            }
            out.text.push_str(&tau.report.render());
            out.text.push_str(&diff.render());
            out.text.push_str(&genus.render());
            out.failed |= !tau.report.ok() || !diff.ok();
            out.json.push(("tau.json", to_json(&TauDto::new(&tables, &tau, &genus))));
        }
    }
    if stages.contains(&Stage::Verify) {
        let p = problem.as_ref().ok_or_else(|| CliError::Config("verify needs --preset or expressions".into()))?;
        let report = verify_all(&p.data, &triple, args.flows, 1).map_err(check)?;
        out.failed |= !report.ok();
        let text = report.render();
        out.text.push_str(&text);
        out.files.push(("verify.txt", text));
    }
    Ok(out)
}

fn emit(args: &RunArgs, out: &Output) -> Result<(), CliError> {
    match args.format {
        Format::Text => print!("{}", out.text),
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> =
                out.json.iter().map(|(k, v)| (k.trim_end_matches(".json").to_string(), v.clone())).collect();
            println!("{}", serde_json::to_string_pretty(&map).expect("json"));
        }
    }
    if let Some(dir) = &args.out {
        let io = |e: std::io::Error| CliError::Config(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        for (name, v) in &out.json {
            fs::write(dir.join(name), serde_json::to_string_pretty(v).expect("json") + "\n").map_err(io)?;
        }
        for (name, text) in &out.files {
            fs::write(dir.join(name), text).map_err(io)?;
        }
    }
    Ok(())
}

/// Runs the command line and returns the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (args, stages): (&RunArgs, &[Stage]) = match &cli.command {
        Command::Solve(a) => (a, &[Stage::Solve]),
        Command::Wkb(a) => (a, &[Stage::Wkb]),
        Command::Tau(a) => (a, &[Stage::Tau]),
        Command::Verify(a) => (a, &[Stage::Verify]),
        Command::Run(a) => (a, &[Stage::Solve, Stage::Wkb, Stage::Tau, Stage::Verify]),
    };
    let result = execute(args, stages).and_then(|out| emit(args, &out).map(|_| out.failed));
    match result {
        Ok(false) => 0,
        Ok(true) => {
            eprintln!("error: some checks failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
