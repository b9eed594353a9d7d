//! `entsum`: entropic sumset tools on the command line.
//!
//! Every subcommand prints a JSON report (or writes it to `--json-out`).
//! Exit status: 0 when every checked inequality holds, 2 when one is
//! violated, 1 on usage or I/O errors.

mod hom;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use entsum::coupling::{solve_three_marginal, DEFAULT_LP_CAP};
use entsum::decompose::{decompose, verify_decomposition};
use entsum::dist::l1_distance;
use entsum::io::{parse_law_file, parse_set_file, report_emit};
use entsum::metrics::{metric_report, BOUND_TOLERANCE};
use entsum::structure::{
    brute_pfr_oracle, brute_pfr_oracle_pair, extract_structured_set, localize_subgroup, pfr_cover_from_entropy,
    projection_inequality_audit, LocalizeConfig,
};
use entsum::{
    AlgoConfig, Algorithm, BoundCheck, CouplingOutcome, CouplingProblem, DStarConfig, FinDist, FuzzConfig,
    GroupSet, Suite,
};

#[derive(Parser)]
#[command(name = "entsum", version, about = "Entropic sumset metrics, couplings and decompositions")]
struct Cli {
    /// Seed for randomized commands (fuzz).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Slack allowed when judging an inequality.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    json_out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Entropy, doubling constants, energy and Ruzsa distance of a law.
    Metrics {
        /// Set file (uniform law) or distribution file.
        file: PathBuf,
        /// Second law for the distance fields; defaults to the first.
        #[arg(long)]
        other: Option<PathBuf>,
        /// Also compute d* by Frank-Wolfe.
        #[arg(long)]
        d_star: bool,
    },
    /// Couple X ~ p1, Y ~ p2 so that X - Y ~ p3, or certify that no such
    /// coupling exists.
    Couple {
        #[arg(long)]
        p1: PathBuf,
        #[arg(long)]
        p2: PathBuf,
        #[arg(long)]
        p3: PathBuf,
        /// Largest |supp p1| * |supp p2| accepted.
        #[arg(long, default_value_t = DEFAULT_LP_CAP)]
        lp_cap: usize,
    },
    /// KL-threshold extraction of a structured set.
    Extract {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 4.0)]
        c: f64,
        /// Also check the distance bound for d*(U_S, Y).
        #[arg(long)]
        d_star: bool,
    },
    /// A finite subgroup close to both X and Y when d(X, Y) is small.
    Localize {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        subgroup_cap: Option<usize>,
    },
    /// Both sides of the fiber inequality for a homomorphism.
    AuditProjection {
        #[arg(long)]
        x1: PathBuf,
        #[arg(long)]
        x2: PathBuf,
        /// e.g. mod2, coord:0, double, quotient:110,011, or stages joined by '|'.
        #[arg(long)]
        pi: String,
    },
    /// Exhaustive search for the subspace of F2^D nearest to X (and Y).
    PfrOracle {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: Option<PathBuf>,
        /// Treat X as a set and report the covering by translates.
        #[arg(long)]
        cover: bool,
        #[arg(long, default_value_t = 5)]
        cap: usize,
    },
    /// Large A' in A, B' in B of bounded dimension.
    Decompose {
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// JSON object overriding algorithm constants.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Re-derive every bound from the inputs with the exact oracles.
        #[arg(long)]
        verify: bool,
    },
    /// Evaluate the inequality suites on seeded random instances.
    Fuzz {
        /// JSON object overriding fuzz settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated suite names; all suites by default.
        #[arg(long, value_delimiter = ',')]
        suites: Vec<Suite>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct Pair {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
}

impl Pair {
    fn load(&self) -> Result<(FinDist, FinDist)> {
        Ok((law(&self.x)?, law(&self.y)?))
    }
}

fn law(path: &Path) -> Result<FinDist> {
    parse_law_file(path).with_context(|| format!("reading {}", path.display()))
}

fn set(path: &Path) -> Result<GroupSet> {
    parse_set_file(path).with_context(|| format!("reading {}", path.display()))
}

fn json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Whether every checked inequality held.
#[derive(Debug, PartialEq, Eq)]
enum Status {
    Clean,
    Violation,
}

impl Status {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Clean
        } else {
            Status::Violation
        }
    }
}

#[derive(Serialize)]
struct CoupleReport {
    #[serde(flatten)]
    outcome: CouplingOutcome,
    checks: Vec<BoundCheck>,
}

#[derive(Serialize)]
struct PfrReport {
    subgroup: GroupSet,
    rank: usize,
    d_x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_y: Option<f64>,
}

#[derive(Serialize)]
struct Verified<'a, T> {
    #[serde(flatten)]
    result: &'a T,
    verification: Vec<BoundCheck>,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    report_emit(value, out).context("writing the report")
}

fn checks_hold(checks: &[BoundCheck]) -> bool {
    checks.iter().all(|c| c.holds)
}

fn run(cli: Cli) -> Result<Status> {
    let tol = cli.tolerance.unwrap_or(BOUND_TOLERANCE);
    if !(tol >= 0.0) {
        anyhow::bail!("--tolerance must be non-negative");
    }
    let out = cli.json_out.as_deref();
    match cli.cmd {
        Cmd::Metrics { file, other, d_star } => {
            let p = law(&file)?;
            let q = other.as_deref().map(law).transpose()?;
            let cfg = DStarConfig::default();
            let r = metric_report(&p, q.as_ref(), d_star.then_some(&cfg))?;
            emit(&r, out)?;
            Ok(Status::from_ok(r.all_hold()))
        }
        Cmd::Couple { p1, p2, p3, lp_cap } => {
            let prob = CouplingProblem::new(law(&p1)?, law(&p2)?, law(&p3)?)?;
            let outcome = solve_three_marginal(&prob, lp_cap)?;
            let checks = coupling_checks(&prob, &outcome, tol)?;
            let ok = checks_hold(&checks);
            emit(&CoupleReport { outcome, checks }, out)?;
            Ok(Status::from_ok(ok))
        }
        Cmd::Extract { pair, c, d_star } => {
            let (x, y) = pair.load()?;
            let cfg = DStarConfig::default();
            let r = extract_structured_set(&x, &y, c, d_star.then_some(&cfg))?;
            emit(&r, out)?;
            Ok(Status::from_ok(r.all_hold()))
        }
        Cmd::Localize {
            pair,
            eps0,
            subgroup_cap,
        } => {
            let (x, y) = pair.load()?;
            let mut cfg = LocalizeConfig::default();
            if let Some(e) = eps0 {
                cfg.eps0 = e;
            }
            if let Some(c) = subgroup_cap {
                cfg.subgroup_cap = c;
            }
            let r = localize_subgroup(&x, &y, &cfg)?;
            emit(&r, out)?;
            Ok(Status::from_ok(r.found().map_or(true, |l| l.holds)))
        }
        Cmd::AuditProjection { x1, x2, pi } => {
            let pi = hom::parse(&pi)?;
            let r = projection_inequality_audit(&law(&x1)?, &law(&x2)?, &pi)?;
            emit(&r, out)?;
            Ok(Status::from_ok(r.inequality_holds && r.identity_holds))
        }
        Cmd::PfrOracle { x, y, cover, cap } => {
            if cover {
                let r = pfr_cover_from_entropy(&set(&x)?, cap)?;
                emit(&r, out)?;
                return Ok(Status::Clean);
            }
            let px = law(&x)?;
            let py = y.as_deref().map(law).transpose()?;
            let h = match &py {
                Some(py) => brute_pfr_oracle_pair(&px, py, cap)?,
                None => brute_pfr_oracle(&px, cap)?,
            };
            let hs = h.to_set();
            let r = PfrReport {
                rank: h.rank(),
                d_x: entsum::metrics::d_ent_subgroup(&px, &hs)?,
                d_y: py.as_ref().map(|p| entsum::metrics::d_ent_subgroup(p, &hs)).transpose()?,
                subgroup: hs,
            };
            emit(&r, out)?;
            Ok(Status::Clean)
        }
        Cmd::Decompose {
            algo,
            a,
            b,
            config,
            verify,
        } => {
            let (a, b) = (set(&a)?, set(&b)?);
            let cfg: AlgoConfig = config.as_deref().map(json_file).transpose()?.unwrap_or_default();
            let r = decompose(algo, &a, &b, &cfg)?;
            if verify {
                let verification = verify_decomposition(&a, &b, &cfg, &r, tol)?;
                let ok = r.all_hold() && checks_hold(&verification);
                emit(&Verified { result: &r, verification }, out)?;
                Ok(Status::from_ok(ok))
            } else {
                emit(&r, out)?;
                Ok(Status::from_ok(r.all_hold()))
            }
        }
        Cmd::Fuzz {
            config,
            trials,
            suites,
            threads,
        } => {
            let mut cfg: FuzzConfig = config.as_deref().map(json_file).transpose()?.unwrap_or_default();
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(t) = cli.tolerance {
                cfg.tolerance = t;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if !suites.is_empty() {
                cfg.suites = suites;
            }
            cfg.threads = threads;
            let r = entsum::fuzz::run_fuzz(&cfg)?;
            emit(&r, out)?;
            for s in r.suites.iter().filter(|s| s.failures > 0) {
                eprintln!("{}: {} of {} trials violated a bound", s.suite.name(), s.failures, s.trials);
            }
            Ok(Status::from_ok(r.failures() == 0))
        }
    }
}

/// Marginal errors of a coupling, or the two defining properties of a
/// certificate on supp p1 × supp p2.
fn coupling_checks(prob: &CouplingProblem, outcome: &CouplingOutcome, tol: f64) -> Result<Vec<BoundCheck>> {
    Ok(match outcome {
        CouplingOutcome::Feasible { coupling } => vec![
            BoundCheck::with_tolerance("|p_X - p1|_1", l1_distance(&coupling.marginal_x(), &prob.p1), 0.0, tol),
            BoundCheck::with_tolerance("|p_Y - p2|_1", l1_distance(&coupling.marginal_y(), &prob.p2), 0.0, tol),
            BoundCheck::with_tolerance(
                "|p_(X-Y) - p3|_1",
                l1_distance(&coupling.difference_law()?, &prob.p3),
                0.0,
                tol,
            ),
        ],
        CouplingOutcome::Infeasible { certificate } => {
            let xs: Vec<_> = prob.p1.masses().keys().cloned().collect();
            let ys: Vec<_> = prob.p2.masses().keys().cloned().collect();
            let lo = certificate.min_pointwise(prob.ctx(), &xs, &ys)?;
            vec![
                BoundCheck::with_tolerance("-min f1(x)+f2(y)+f3(x-y)", -lo, 0.0, tol),
                BoundCheck::with_tolerance("pairing < 0", certificate.pairing_with(prob), -tol, 0.0),
            ]
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::Violation) => {
            eprintln!("entsum: an inequality check failed; see the report");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("entsum: {e:#}");
            ExitCode::from(1)
        }
    }
}
