//! The `sorites` command line.
//!
//! Exit codes: 0 for the expected outcome, 1 when an assumption or premise
//! fails, 2 for input errors, 3 when an output file cannot be written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assumptions::{
    check_conditional_qm_agreement, check_hidden_autonomy, check_improved_predictions, check_outcome_independence,
    check_parameter_independence, check_qm_agreement, check_surface_locality, check_weak_hidden_autonomy,
    check_weak_surface_autonomy, AssumptionVerdict, HiddenModel, DEFAULT_MAX_HIDDEN,
};
use crate::chain::{
    build_chain, mismatch_probability, qm_surface_model, simplified_mismatch, xy_cells, Angle, ChainSpec, LinkKind,
    SettingPair, SurfaceModel,
};
use crate::files::{LoadedModel, ModelFile, NumberMode, ReportBody, ReportFile, SimulationReport, StrategyReport};
use crate::ghz::{
    check_ghz_correlations, check_no_sorites_ghz, check_three_party_locality, enumerate_ghz_assignments,
    ghz_qm_surface_model,
};
use crate::models;
use crate::montecarlo::{frequency_test, sample_runs, Statistic, MIN_TRIALS};
use crate::prob::{Probability, Tolerance};
use crate::strategies::{local_min_total_failure, qm_expected_failures};
use crate::theorems::{run_bell_corollary, run_stronger_theorem, Conclusion, DerivationReport};

/// Witnesses printed per verdict; reports written with `--out` keep all.
const SHOWN_WITNESSES: usize = 8;

#[derive(Parser, Debug)]
#[command(
    name = "sorites",
    version,
    about = "Chained Bell experiments and hidden-variable assumption checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mismatch curve (0..90 degrees) and chain summary as CSV.
    ChainReport {
        n: i64,
        #[arg(long, value_enum, default_value_t = SurfaceKind::Full)]
        mode: SurfaceKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check assumptions against a model file.
    Check {
        model: PathBuf,
        /// Comma-separated list, e.g. `pi,weak-ha`.
        #[arg(long, value_delimiter = ',', required = true)]
        assumptions: Vec<AssumptionName>,
        /// Reference surface for `qm-agreement`.
        #[arg(long, value_enum, default_value_t = SurfaceKind::Simplified)]
        reference: SurfaceKind,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Stronger Theorem or the Bell corollary on a model file.
    Theorem {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Which::Stronger)]
        which: Which,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive deterministic-strategy scan of a chain.
    Strategies {
        n: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// GHZ checks.
    Ghz {
        #[command(subcommand)]
        sub: GhzCommand,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Sample one experiment of a model file.
    Simulate {
        model: PathBuf,
        /// Setting pair in degrees, `(alice,bob)`.
        pair: String,
        trials: u64,
        #[arg(conflicts_with = "seed")]
        seed_arg: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Threshold for the mismatch frequency test.
        #[arg(long, default_value_t = 5.0)]
        sigmas: f64,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in model as a model file.
    Model {
        #[arg(value_enum)]
        kind: ModelKind,
        #[arg(long, default_value_t = 3)]
        n: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Comparison tolerance; 0 compares exactly.
    #[arg(long, default_value_t = 0.0)]
    pub tolerance: f64,
    /// `exact` rejects decimal weights, `float` converts every weight.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Largest accepted hidden-variable domain.
    #[arg(long, default_value_t = DEFAULT_MAX_HIDDEN)]
    pub max_hidden: usize,
}

#[derive(Subcommand, Debug, Clone, Copy)]
pub enum GhzCommand {
    /// GHZ correlations and three-party locality of the quantum model.
    Verify,
    /// Count deterministic assignments meeting all four correlations.
    Enumerate,
    /// The model with P(X=1|A=1) = 1 and no Sorites chain.
    Counterexample,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Simplified,
    Full,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Exact,
    Float,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Stronger,
    Bell,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssumptionName {
    WeakSurfaceAutonomy,
    SurfaceLocality,
    WeakHa,
    Ha,
    Pi,
    Oi,
    ImprovedPredictions,
    QmAgreement,
    ConditionalQm,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Simplified,
    Full,
    TrivialLift,
    LocalFloor,
    Signaling,
    Product,
    WeakHaNotHa,
    IpNotOi,
}

/// A failed command: exit code and message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn input(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: 3,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn write_report(out: Option<&Path>, body: ReportBody) -> Result<(), Failure> {
    match out {
        Some(p) => write_file(p, &ReportFile::new(body).to_json()),
        None => Ok(()),
    }
}

fn status(ok: bool) -> u8 {
    if ok {
        0
    } else {
        1
    }
}

fn number_mode(mode: Option<ModeArg>) -> NumberMode {
    match mode {
        None => NumberMode::Auto,
        Some(ModeArg::Exact) => NumberMode::Exact,
        Some(ModeArg::Float) => NumberMode::Float,
    }
}

fn load(path: &Path, mode: NumberMode, max_hidden: usize) -> Result<LoadedModel, Failure> {
    let source = fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    let at = |e: crate::files::InputError| input(format!("{}: {e}", path.display()));
    ModelFile::parse(&source, mode)
        .and_then(|m| m.into_model(max_hidden))
        .map_err(at)
}

fn parse_chain(n: i64) -> Result<ChainSpec, Failure> {
    build_chain(n).map_err(input)
}

/// `(30,0)` or `30,0`, in degrees.
pub fn parse_pair_degrees(s: &str) -> Option<(f64, f64)> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    let (a, b) = inner.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn print_verdict(out: &mut String, v: &AssumptionVerdict) {
    let _ = writeln!(out, "{v}");
    for w in v.witnesses.iter().take(SHOWN_WITNESSES) {
        let _ = writeln!(out, "  witness: {w}");
    }
    if v.witnesses.len() > SHOWN_WITNESSES {
        let _ = writeln!(out, "  ({} more witnesses)", v.witnesses.len() - SHOWN_WITNESSES);
    }
    if let Some(e) = v.evidence.first() {
        let _ = writeln!(out, "  evidence: {e}");
    }
}

/// Probability that a link fails its required (anti-)correlation.
fn link_failure(surface: &SurfaceModel, pair: SettingPair, kind: LinkKind) -> Probability {
    let c = xy_cells(surface.outcome_table(pair).expect("every chain experiment has a table"));
    match kind {
        LinkKind::Solid => c[1].clone() + c[2].clone(),
        LinkKind::Dashed => c[0].clone() + c[3].clone(),
    }
}

/// The mismatch curve and summary block written by `chain-report`.
pub fn chain_report_csv(chain: &ChainSpec, kind: SurfaceKind) -> String {
    let mut s = String::from("delta_theta_degrees,qm_mismatch,simplified_mismatch\n");
    for d in 0..=90 {
        let a = Angle::from_degrees(d);
        let qm = mismatch_probability(a).expect("0..=90 degrees");
        let simple = simplified_mismatch(a).expect("0..=90 degrees");
        let _ = writeln!(s, "{d},{:?},{:?}", qm.to_f64(), simple.to_f64());
    }
    let surface = qm_surface_model(chain, kind == SurfaceKind::Simplified);
    let failures: Vec<Probability> = chain
        .links()
        .iter()
        .map(|l| link_failure(&surface, l.pair, l.kind))
        .collect();
    let none_broken = failures.iter().fold(Probability::one(), |acc, f| acc * f.complement());
    let expected: Probability = failures.iter().sum();
    let mode = match kind {
        SurfaceKind::Simplified => "simplified",
        SurfaceKind::Full => "full",
    };
    s.push('\n');
    s += "key,value\n";
    let _ = writeln!(s, "mode,{mode}");
    let _ = writeln!(s, "n,{}", chain.n_links());
    let _ = writeln!(s, "delta_theta_degrees,{}", chain.delta_theta().degrees_exact());
    let _ = writeln!(s, "experiments,{}", chain.experiment_count());
    let _ = writeln!(s, "prob_no_link_broken,{none_broken}");
    let _ = writeln!(s, "qm_expected_failures,{expected}");
    let _ = writeln!(s, "local_floor,1");
    s
}

fn chain_report(n: i64, kind: SurfaceKind, out: &Path) -> Result<(String, u8), Failure> {
    let chain = parse_chain(n)?;
    write_file(out, &chain_report_csv(&chain, kind))?;
    Ok((format!("wrote {}\n", out.display()), 0))
}

/// Checks one named assumption; hidden-variable assumptions need a model
/// with a `lambda` variable.
pub fn verdict_for(
    name: AssumptionName,
    model: &LoadedModel,
    reference: SurfaceKind,
    tol: Tolerance,
) -> Result<AssumptionVerdict, Failure> {
    let hidden = || {
        model.hidden().ok_or_else(|| {
            input(format!(
                "`{name:?}` needs a hidden-variable model (a `lambda` variable)"
            ))
        })
    };
    let v = match name {
        AssumptionName::WeakSurfaceAutonomy => check_weak_surface_autonomy(model.surface()),
        AssumptionName::SurfaceLocality => check_surface_locality(model.surface(), tol).map_err(input)?,
        AssumptionName::QmAgreement => {
            let r = qm_surface_model(model.chain(), reference == SurfaceKind::Simplified);
            check_qm_agreement(model.surface(), &r, tol).map_err(input)?
        }
        AssumptionName::WeakHa => check_weak_hidden_autonomy(hidden()?),
        AssumptionName::Ha => check_hidden_autonomy(hidden()?, tol).map_err(input)?,
        AssumptionName::Pi => check_parameter_independence(hidden()?, tol),
        AssumptionName::Oi => check_outcome_independence(hidden()?, tol),
        AssumptionName::ImprovedPredictions => check_improved_predictions(hidden()?, tol).map_err(input)?,
        AssumptionName::ConditionalQm => check_conditional_qm_agreement(hidden()?, tol),
    };
    Ok(v)
}

fn tolerance(v: f64) -> Result<Tolerance, Failure> {
    Tolerance::new(v).map_err(input)
}

fn check(
    path: &Path,
    names: &[AssumptionName],
    reference: SurfaceKind,
    args: &InputArgs,
    out: Option<&Path>,
) -> Result<(String, u8), Failure> {
    let tol = tolerance(args.tolerance)?;
    let model = load(path, number_mode(args.mode), args.max_hidden)?;
    let verdicts = names
        .iter()
        .map(|n| verdict_for(*n, &model, reference, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let mut text = String::new();
    for v in &verdicts {
        print_verdict(&mut text, v);
    }
    let ok = verdicts.iter().all(|v| v.holds);
    write_report(out, ReportBody::Verdicts(verdicts))?;
    Ok((text, status(ok)))
}

fn render_derivation(r: &DerivationReport) -> String {
    let mut text = String::new();
    for step in &r.trace {
        let _ = writeln!(text, "{step}");
    }
    let _ = writeln!(text, "conclusion: {}", r.conclusion);
    text
}

fn theorem(path: &Path, which: Which, args: &InputArgs, out: Option<&Path>) -> Result<(String, u8), Failure> {
    let tol = tolerance(args.tolerance)?;
    let model = match load(path, number_mode(args.mode), args.max_hidden)? {
        LoadedModel::Hidden(h) => h,
        LoadedModel::Surface(s) => HiddenModel::lift(&s),
    };
    let report = match which {
        Which::Stronger => run_stronger_theorem(&model, tol),
        Which::Bell => run_bell_corollary(&model, tol),
    }
    .map_err(input)?;
    let text = render_derivation(&report);
    let ok = report.conclusion == Conclusion::ContradictionEstablished;
    write_report(out, ReportBody::Derivation(report))?;
    Ok((text, status(ok)))
}

fn strategies(n: i64, out: Option<&Path>) -> Result<(String, u8), Failure> {
    let chain = parse_chain(n)?;
    let min = local_min_total_failure(&chain).map_err(input)?;
    let report = StrategyReport {
        n_links: chain.n_links(),
        strategies: 1u64 << (chain.n_links() + 1),
        min_broken: min,
        qm_expected_failures: qm_expected_failures(&chain),
    };
    let text = format!(
        "strategies,{}\nmin_broken,{}\nqm_expected_failures,{}\n",
        report.strategies, report.min_broken, report.qm_expected_failures
    );
    let ok = report.min_broken.is_one();
    write_report(out, ReportBody::Strategies(report))?;
    Ok((text, status(ok)))
}

fn ghz(sub: GhzCommand, out: Option<&Path>) -> Result<(String, u8), Failure> {
    let mut text = String::new();
    match sub {
        GhzCommand::Verify => {
            let m = ghz_qm_surface_model();
            let corr = check_ghz_correlations(&m);
            let loc = check_three_party_locality(&m, Tolerance::EXACT);
            print_verdict(&mut text, &corr);
            print_verdict(&mut text, &loc);
            let ok = corr.holds && loc.holds;
            write_report(out, ReportBody::GhzVerify(corr))?;
            Ok((text, status(ok)))
        }
        GhzCommand::Enumerate => {
            let e = enumerate_ghz_assignments();
            let _ = writeln!(text, "satisfying,{}\ntotal,{}", e.satisfying, e.total);
            let ok = e.satisfying == 0;
            write_report(out, ReportBody::GhzEnumerate(e))?;
            Ok((text, status(ok)))
        }
        GhzCommand::Counterexample => {
            let r = check_no_sorites_ghz().map_err(input)?;
            print_verdict(&mut text, &r.correlations);
            print_verdict(&mut text, &r.locality);
            let _ = writeln!(text, "P(X=1|A=1),{}\nP(X=1|A=2),{}", r.x_marginals[0], r.x_marginals[1]);
            for m in &r.residual {
                let _ = writeln!(text, "residual {},{}", m.label, m.value);
            }
            let _ = writeln!(text, "residual_matches_model,{}", r.residual_matches_model);
            let _ = writeln!(text, "photon_contrast_infeasible,{}", r.photon_contrast_infeasible);
            let _ = writeln!(text, "no_sorites,{}", r.no_sorites);
            let ok = r.no_sorites;
            write_report(out, ReportBody::GhzCounterexample(r))?;
            Ok((text, status(ok)))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    path: &Path,
    pair: &str,
    trials: u64,
    seed: u64,
    sigmas: f64,
    mode: Option<ModeArg>,
    out: Option<&Path>,
) -> Result<(String, u8), Failure> {
    let model = load(path, number_mode(mode), DEFAULT_MAX_HIDDEN)?;
    let (a, b) = parse_pair_degrees(pair).ok_or_else(|| {
        input(format!(
            "cannot parse setting pair `{pair}`; expected (alice,bob) in degrees"
        ))
    })?;
    let chain = model.chain();
    let pair = chain.pair_from_degrees(a, b).ok_or_else(|| {
        input(format!(
            "({a},{b}) is not an experiment of the N={} chain",
            chain.n_links()
        ))
    })?;
    let surface = model.surface();
    let summary = sample_runs(surface, pair, trials, seed).map_err(input)?;
    let expected =
        Statistic::Mismatch.probability(&xy_cells(surface.outcome_table(pair).expect("pair is in the chain")));
    let test = if trials >= MIN_TRIALS {
        Some(frequency_test(&summary, Statistic::Mismatch, &expected, sigmas).map_err(input)?)
    } else {
        None
    };
    let mut text = String::new();
    let _ = writeln!(text, "pair,\"{pair}\"\nseed,{seed}\ntrials,{}", summary.trials);
    let _ = writeln!(text, "matches,{}\nmismatches,{}", summary.matches, summary.mismatches);
    for (name, c) in ["n00", "n01", "n10", "n11"].iter().zip(summary.cells) {
        let _ = writeln!(text, "{name},{c}");
    }
    let _ = writeln!(text, "expected_mismatch,{expected}");
    let ok = match &test {
        Some(t) => {
            let z = t.z.map_or("inf".to_string(), |z| format!("{z:?}"));
            let _ = writeln!(text, "z,{z}\npassed,{}", t.passed);
            t.passed
        }
        None => true,
    };
    write_report(
        out,
        ReportBody::Simulation(SimulationReport {
            summary,
            mismatch_test: test,
        }),
    )?;
    Ok((text, status(ok)))
}

fn model_file(kind: ModelKind, n: i64, out: Option<&Path>) -> Result<(String, u8), Failure> {
    let chain = parse_chain(n)?;
    let file = match kind {
        ModelKind::Simplified => ModelFile::from_surface(&qm_surface_model(&chain, true), "simplified QM surface"),
        ModelKind::Full => ModelFile::from_surface(&qm_surface_model(&chain, false), "full QM surface"),
        ModelKind::TrivialLift => ModelFile::from_hidden(&models::trivial_lift(&chain), "trivial lift"),
        ModelKind::LocalFloor => ModelFile::from_hidden(&models::local_floor_model(&chain), "one-break local mixture"),
        ModelKind::Signaling => ModelFile::from_hidden(&models::signaling_model(&chain), "signaling"),
        ModelKind::Product => ModelFile::from_hidden(&models::product_model(&chain), "product"),
        ModelKind::WeakHaNotHa => ModelFile::from_hidden(&models::weak_ha_not_ha(&chain), "weak H.A. without H.A."),
        ModelKind::IpNotOi => ModelFile::from_hidden(&models::ip_not_oi(&chain), "improved predictions without O.I."),
    };
    let json = file.to_json();
    match out {
        Some(p) => {
            write_file(p, &json)?;
            Ok((String::new(), 0))
        }
        None => Ok((json, 0)),
    }
}

/// Runs a parsed command, returning its standard output and exit code.
pub fn execute(cli: &Cli) -> Result<(String, u8), Failure> {
    match &cli.command {
        Command::ChainReport { n, mode, out } => chain_report(*n, *mode, out),
        Command::Check {
            model,
            assumptions,
            reference,
            input,
            out,
        } => check(model, assumptions, *reference, input, out.as_deref()),
        Command::Theorem {
            model,
            which,
            input,
            out,
        } => theorem(model, *which, input, out.as_deref()),
        Command::Strategies { n, out } => strategies(*n, out.as_deref()),
        Command::Ghz { sub, out } => ghz(*sub, out.as_deref()),
        Command::Simulate {
            model,
            pair,
            trials,
            seed_arg,
            seed,
            sigmas,
            mode,
            out,
        } => {
            let seed = seed.or(*seed_arg).unwrap_or(0);
            simulate(model, pair, *trials, seed, *sigmas, *mode, out.as_deref())
        }
        Command::Model { kind, n, out } => model_file(*kind, *n, out.as_deref()),
    }
}

pub fn main_with(cli: &Cli) -> ExitCode {
    match execute(cli) {
        Ok((text, code)) => {
            print!("{text}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
