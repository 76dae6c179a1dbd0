use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use eprb_core::consistency::{
    base_inequalities, chsh_facets, lhv_membership, ConsistencyInequality, CorrelationSet,
    Derivation, MembershipResult,
};
use eprb_core::harness::{
    estimate_dir, run_experiment, shot_files_in, ExperimentConfig, SettingAngles, Source,
};
use eprb_core::lhv::deterministic_assignments;
use eprb_core::report::{
    InequalityResult, ReportBundle, Status, EXIT_ERROR, EXIT_SATISFIED, EXIT_VIOLATED,
};
use eprb_core::Pair;

#[derive(Debug, Parser)]
#[command(
    name = "eprb",
    version,
    about = "Simulate and analyse EPRB correlation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate shot files and a summary for every configured setting pair
    Simulate(SimulateArgs),
    /// Estimate correlations from shot files and check every inequality
    Analyze {
        /// Directory holding shots_*.jsonl files
        dir: PathBuf,
        /// Print the full report as JSON
        #[arg(long)]
        json: bool,
    },
    /// List the 16 consistency inequalities and the 8 CHSH facets
    Facets {
        #[arg(long)]
        json: bool,
    },
    /// Test whether four correlations lie in the local polytope
    Membership(MembershipArgs),
    /// Write report.json and report.csv for a directory of shot files
    Report {
        dir: PathBuf,
        /// Output directory (defaults to the shot directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON experiment config; without it a Bell-state run at the --angles is used
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for shot files and summary.json
    #[arg(long)]
    out: PathBuf,
    /// Shots per setting pair (overrides the config)
    #[arg(long)]
    shots: Option<u64>,
    /// Random seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Analyzer angles θA,θA′,θB,θB′ in radians (switches the source to the Bell state)
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true)]
    angles: Option<SettingAngles>,
    /// Print the summary as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct MembershipArgs {
    /// ⟨AB⟩
    #[arg(allow_negative_numbers = true)]
    ab: f64,
    /// ⟨AB′⟩
    #[arg(allow_negative_numbers = true)]
    ab_prime: f64,
    /// ⟨A′B⟩
    #[arg(allow_negative_numbers = true)]
    a_prime_b: f64,
    /// ⟨A′B′⟩
    #[arg(allow_negative_numbers = true)]
    a_prime_b_prime: f64,
    #[arg(long)]
    json: bool,
}

const DEFAULT_SHOTS: u64 = 100_000;

fn parse_angles(s: &str) -> Result<SettingAngles, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!(
            "expected 4 comma-separated angles, got {}",
            parts.len()
        ));
    }
    let mut a = [0.0f64; 4];
    for (slot, p) in a.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|e| format!("angle {p:?}: {e}"))?;
        if !slot.is_finite() {
            return Err(format!("angle {p:?} is not finite"));
        }
    }
    Ok(SettingAngles::from_array(a))
}

fn main() -> ExitCode {
    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(move |info| {
        default_hook(info);
        std::process::exit(1);
    }));

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn run(command: Command) -> anyhow::Result<i32> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Analyze { dir, json } => analyze(&dir, json),
        Command::Facets { json } => facets(json),
        Command::Membership(args) => membership(args),
        Command::Report { dir, out } => report(&dir, out.as_deref()),
    }
}

fn simulate(args: SimulateArgs) -> anyhow::Result<i32> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::qm(
            args.angles.unwrap_or_else(SettingAngles::tsirelson),
            DEFAULT_SHOTS,
            0,
        ),
    };
    if let Some(angles) = args.angles {
        config.source = Source::Qm { angles };
    }
    if let Some(n) = args.shots {
        config.shots_per_pair = n;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let output = run_experiment(&config, &args.out)?;
    if args.json {
        println!("{}", output.summary.to_json()?);
        return Ok(EXIT_SATISFIED);
    }
    println!("{:<6} {:>10} {:>10} {:>10}", "pair", "E", "SE", "N");
    for (pair, s) in &output.summary.pairs {
        println!(
            "{:<6} {:>10.6} {:>10.6} {:>10}",
            pair.pretty(),
            s.correlation,
            s.std_error,
            s.n
        );
    }
    println!(
        "wrote {} shot file(s) and {} to {}",
        output.shot_files.len(),
        eprb_core::harness::SUMMARY_FILE,
        args.out.display()
    );
    Ok(EXIT_SATISFIED)
}

fn load_report(dir: &Path) -> anyhow::Result<ReportBundle> {
    if !dir.is_dir() {
        bail!("{}: not a directory", dir.display());
    }
    if shot_files_in(dir)?.is_empty() {
        bail!("{}: no shot files (*.jsonl)", dir.display());
    }
    let correlations = estimate_dir(dir)?;
    Ok(ReportBundle::build(correlations)?)
}

fn analyze(dir: &Path, json: bool) -> anyhow::Result<i32> {
    let report = load_report(dir)?;
    if json {
        println!("{}", report.to_json()?);
    } else {
        print_report(&report);
    }
    Ok(report.exit_code())
}

fn report(dir: &Path, out: Option<&Path>) -> anyhow::Result<i32> {
    let report = load_report(dir)?;
    let out = out.unwrap_or(dir);
    std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
    let json_path = out.join("report.json");
    let csv_path = out.join("report.csv");
    std::fs::write(&json_path, report.to_json()? + "\n")
        .with_context(|| json_path.display().to_string())?;
    std::fs::write(&csv_path, report.to_csv()?).with_context(|| csv_path.display().to_string())?;
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    print_verdict(&report);
    Ok(report.exit_code())
}

fn fmt6(x: f64) -> String {
    format!("{:.6}", x + 0.0)
}

fn print_correlations(c: &CorrelationSet) {
    println!("correlations");
    for pair in Pair::ALL {
        match c.entry(pair) {
            Some(e) => match e.std_error {
                Some(se) => println!(
                    "  {:<5} {:>10} ± {}",
                    pair.pretty(),
                    fmt6(e.value),
                    fmt6(se)
                ),
                None => println!("  {:<5} {:>10}", pair.pretty(), fmt6(e.value)),
            },
            None if pair.is_measured() => println!("  {:<5} {:>10}", pair.pretty(), "missing"),
            None => println!("  {:<5} {:>10}", pair.pretty(), "unmeasured"),
        }
    }
}

fn print_result(r: &InequalityResult) {
    let slack = match r.slack {
        Some(s) => format!("slack {:>10}", fmt6(s)),
        None => format!("{:<16}", ""),
    };
    let status = match (&r.status, &r.note) {
        (Status::NotEvaluable, Some(note)) => format!("not evaluable ({note})"),
        (s, _) => s.as_str().replace('_', " "),
    };
    println!("  {:<11} {:<32} {slack}  {status}", r.name, r.display);
}

fn print_membership(m: &MembershipResult) {
    let verdict = if m.is_member { "member" } else { "non-member" };
    let boundary = if m.boundary { " (on the boundary)" } else { "" };
    println!(
        "membership: {verdict}{boundary}, min facet slack {}",
        fmt6(m.min_facet_slack)
    );
    if let Some(v) = &m.violated {
        println!(
            "  violated facet {}: {}  slack {}",
            v.facet,
            v.display,
            fmt6(v.slack)
        );
    }
    if let Some(w) = &m.weights {
        println!("  certificate (weights over deterministic strategies A,A′,B,B′):");
        for (s, w) in deterministic_assignments().iter().zip(w) {
            if *w > 0.0 {
                let signs: String = s
                    .values
                    .iter()
                    .map(|o| if o.value() > 0 { '+' } else { '-' })
                    .collect();
                println!("    {signs}  {}", fmt6(*w));
            }
        }
    }
}

fn print_verdict(r: &ReportBundle) {
    let violated: Vec<&str> = r.violations().map(|v| v.name.as_str()).collect();
    if violated.is_empty() {
        println!("no inequality violated");
    } else {
        println!("violated: {}", violated.join(", "));
    }
}

fn print_report(r: &ReportBundle) {
    print_correlations(&r.correlations);
    match r.chsh.s {
        Some(s) => println!(
            "CHSH: S = {}  via {}  (bound {})  {}",
            fmt6(s),
            r.chsh.form.map(|f| f.expression()).unwrap_or_default(),
            r.chsh.bound,
            r.chsh.status.as_str()
        ),
        None => println!(
            "CHSH: not evaluable ({})",
            r.chsh.note.as_deref().unwrap_or("missing correlations")
        ),
    }
    println!("CHSH facets");
    for f in r.inequality_results.iter().filter(|f| f.bound == -2) {
        print_result(f);
    }
    println!("consistency inequalities");
    for b in r.inequality_results.iter().filter(|f| f.bound != -2) {
        print_result(b);
    }
    if let Some(m) = &r.membership {
        print_membership(m);
    }
    print_verdict(r);
}

fn provenance(ineq: &ConsistencyInequality) -> String {
    match &ineq.derivation {
        Derivation::Base { events, .. } => {
            format!("events ({},{})", events[0].symbol(), events[1].symbol())
        }
        Derivation::ChshFacet { parents, .. } => {
            let base = base_inequalities();
            let combos: Vec<String> = parents
                .iter()
                .map(|[i, j]| {
                    let cancelled = [Pair::BBPrime, Pair::AAPrime]
                        .into_iter()
                        .find(|p| base[*i].coefficient(*p) != 0)
                        .expect("base inequality has an unmeasured term");
                    format!(
                        "eliminating {}: {} + {}",
                        cancelled.pretty(),
                        base[*i].name,
                        base[*j].name
                    )
                })
                .collect();
            combos.join("; ")
        }
    }
}

fn facets(json: bool) -> anyhow::Result<i32> {
    let all: Vec<&ConsistencyInequality> =
        base_inequalities().iter().chain(chsh_facets()).collect();
    if json {
        println!("{}", serde_json::to_string_pretty(&all)?);
        return Ok(EXIT_SATISFIED);
    }
    for ineq in all {
        println!(
            "{:<11} {:<32} {}",
            ineq.name,
            ineq.to_string(),
            provenance(ineq)
        );
    }
    Ok(EXIT_SATISFIED)
}

fn membership(args: MembershipArgs) -> anyhow::Result<i32> {
    let c = CorrelationSet::from_measured([
        args.ab,
        args.ab_prime,
        args.a_prime_b,
        args.a_prime_b_prime,
    ])?;
    let result = lhv_membership(&c)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&result)?);
    } else {
        print_membership(&result);
    }
    Ok(if result.is_member {
        EXIT_SATISFIED
    } else {
        EXIT_VIOLATED
    })
}
