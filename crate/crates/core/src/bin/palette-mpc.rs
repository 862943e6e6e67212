//! Command-line front end: generate instances, run the coloring engine,
//! verify colorings, and summarize reports.
//!
//! Exit codes: 0 success (for `run`/`verify`: the independent verifier
//! accepted), 1 run/verification failure, 2 file, parse, or config errors.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use palette_mpc::coloring::{parse_coloring, verify_coloring, Verdict};
use palette_mpc::config::RunConfig;
use palette_mpc::generate::{generate, graph_text, palette_text, GenKind, GenSpec, PaletteMode};
use palette_mpc::instance::load_instance;
use palette_mpc::pipeline::run_pipeline;
use palette_mpc::report::summarize;

#[derive(Parser)]
#[command(
    name = "palette-mpc",
    about = "Deterministic (degree+1)-list-coloring on a simulated low-space MPC substrate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Color an instance and verify the result.
    Run(RunArgs),
    /// Emit a reproducible test instance.
    Generate(GenArgs),
    /// Check a coloring file against an instance.
    Verify(VerifyArgs),
    /// Summarize a previously written run report.
    Report(ReportArgs),
}

/// Config-file keys, one flag each (kebab-case); flags override the file.
#[derive(Args, Default)]
struct ConfigFlags {
    #[arg(long, value_name = "derandomized|randomized")]
    mode: Option<String>,
    #[arg(long, value_name = "N")]
    entropy_seed: Option<String>,
    #[arg(long, value_name = "P/Q")]
    phi: Option<String>,
    #[arg(long, value_name = "P/Q")]
    delta: Option<String>,
    #[arg(long, value_name = "WORDS|auto")]
    local_space_words: Option<String>,
    #[arg(long, value_name = "N|auto")]
    machine_count: Option<String>,
    #[arg(long, value_name = "N")]
    seed_budget: Option<String>,
    #[arg(long, value_name = "K")]
    independence: Option<String>,
    #[arg(long, value_name = "BITS")]
    max_seed_bits: Option<String>,
    #[arg(long, value_name = "seeded|oracle")]
    source: Option<String>,
    #[arg(long, value_name = "N")]
    oracle_entropy: Option<String>,
    #[arg(long, value_name = "D|auto")]
    low_degree_threshold: Option<String>,
    #[arg(long, value_name = "P/Q")]
    gs_gamma: Option<String>,
    #[arg(long, value_name = "P/Q")]
    pa_cp: Option<String>,
    #[arg(long, value_name = "N")]
    synch_ct: Option<String>,
    #[arg(long, value_name = "P/Q")]
    eps_ac: Option<String>,
    #[arg(long, value_name = "P/Q")]
    eps_sp: Option<String>,
    #[arg(long, value_name = "P/Q")]
    eps1: Option<String>,
    #[arg(long, value_name = "P/Q")]
    eps2: Option<String>,
    #[arg(long, value_name = "P/Q")]
    eps3: Option<String>,
    #[arg(long, value_name = "P/Q")]
    eps4: Option<String>,
    #[arg(long, value_name = "P/Q")]
    eps5: Option<String>,
    #[arg(long, value_name = "P/Q")]
    heavy_threshold: Option<String>,
    #[arg(long, value_name = "P/Q")]
    kappa: Option<String>,
    #[arg(long, value_name = "N")]
    trc_rounds: Option<String>,
    #[arg(long, value_name = "N")]
    max_levels: Option<String>,
    /// Skip the degree partition; run the mid-degree stage directly.
    #[arg(long)]
    no_partition: bool,
}

impl ConfigFlags {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), String> {
        let pairs: [(&str, &Option<String>); 26] = [
            ("mode", &self.mode),
            ("entropy_seed", &self.entropy_seed),
            ("phi", &self.phi),
            ("delta", &self.delta),
            ("local_space_words", &self.local_space_words),
            ("machine_count", &self.machine_count),
            ("seed_budget", &self.seed_budget),
            ("independence", &self.independence),
            ("max_seed_bits", &self.max_seed_bits),
            ("source", &self.source),
            ("oracle_entropy", &self.oracle_entropy),
            ("low_degree_threshold", &self.low_degree_threshold),
            ("gs_gamma", &self.gs_gamma),
            ("pa_cp", &self.pa_cp),
            ("synch_ct", &self.synch_ct),
            ("eps_ac", &self.eps_ac),
            ("eps_sp", &self.eps_sp),
            ("eps1", &self.eps1),
            ("eps2", &self.eps2),
            ("eps3", &self.eps3),
            ("eps4", &self.eps4),
            ("eps5", &self.eps5),
            ("heavy_threshold", &self.heavy_threshold),
            ("kappa", &self.kappa),
            ("trc_rounds", &self.trc_rounds),
            ("max_levels", &self.max_levels),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|e| e.to_string())?;
            }
        }
        if self.no_partition {
            cfg.no_partition = true;
        }
        cfg.validate().map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct RunArgs {
    /// Edge-list file: `u v` per line, `#` comments, `# nodes: N` header.
    #[arg(long, value_name = "FILE")]
    graph: String,
    /// Palette file `v: c1 c2 ...`; absent nodes get [0, d(v)].
    #[arg(long, value_name = "FILE")]
    palettes: Option<String>,
    /// Flat `key = value` config file applied before the flags.
    #[arg(long, value_name = "FILE")]
    config: Option<String>,
    /// Write the coloring (`v: c` lines) here.
    #[arg(long, value_name = "FILE")]
    coloring_out: Option<String>,
    /// Write the full report here.
    #[arg(long, value_name = "FILE")]
    report_out: Option<String>,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Args)]
struct GenArgs {
    /// gnp | planted | hypercube | star-forest
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// gnp: node count.
    #[arg(long)]
    nodes: Option<usize>,
    /// gnp: edge probability.
    #[arg(long)]
    p: Option<f64>,
    /// gnp: expected degree, alternative to --p (p = avg/n).
    #[arg(long)]
    avg_degree: Option<f64>,
    /// planted: members per clique.
    #[arg(long)]
    clique_size: Option<usize>,
    /// planted: number of cliques.
    #[arg(long)]
    count: Option<usize>,
    /// planted: cross-clique edge probability.
    #[arg(long, default_value_t = 0.0)]
    bridge_p: f64,
    /// hypercube: dimension (2^dim nodes).
    #[arg(long)]
    dim: Option<u32>,
    /// star-forest: star count.
    #[arg(long)]
    centers: Option<usize>,
    /// star-forest: leaves per star.
    #[arg(long)]
    leaves: Option<usize>,
    /// default | random
    #[arg(long, default_value = "default")]
    palette_mode: String,
    /// random palettes: colors beyond degree+1.
    #[arg(long, default_value_t = 0)]
    palette_extra: usize,
    #[arg(long, value_name = "FILE")]
    out_graph: String,
    /// Required for random palettes; optional (explicit defaults) otherwise.
    #[arg(long, value_name = "FILE")]
    out_palettes: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_name = "FILE")]
    graph: String,
    #[arg(long, value_name = "FILE")]
    palettes: Option<String>,
    #[arg(long, value_name = "FILE")]
    coloring: String,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, value_name = "FILE")]
    report: String,
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn read(path: &str) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))
}

fn write(path: &str, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("cannot write {path}: {e}"))
}

fn usage_err(msg: String) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn cmd_run(args: &RunArgs) -> ExitCode {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = match read(path) {
            Ok(t) => t,
            Err(e) => return usage_err(e),
        };
        if let Err(e) = cfg.apply_text(&text) {
            return usage_err(e.to_string());
        }
    }
    if let Err(e) = args.flags.apply(&mut cfg) {
        return usage_err(e);
    }
    if let Some(p) = &args.coloring_out {
        cfg.coloring_path = p.clone();
    }
    if let Some(p) = &args.report_out {
        cfg.report_path = p.clone();
    }

    let graph_text = match read(&args.graph) {
        Ok(t) => t,
        Err(e) => return usage_err(e),
    };
    let palette_text = match &args.palettes {
        Some(p) => match read(p) {
            Ok(t) => Some(t),
            Err(e) => return usage_err(e),
        },
        None => None,
    };
    let inst = match load_instance(&graph_text, palette_text.as_deref()) {
        Ok(i) => i,
        Err(e) => return usage_err(format!("bad instance: {e}")),
    };

    let outcome = match run_pipeline(&inst, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("run failed: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    if !cfg.coloring_path.is_empty() {
        if let Err(e) = write(&cfg.coloring_path, &outcome.coloring_text) {
            return usage_err(e);
        }
    }
    let rendered = outcome.report.render();
    if !cfg.report_path.is_empty() {
        if let Err(e) = write(&cfg.report_path, &rendered) {
            return usage_err(e);
        }
    }
    print!("{}", summarize(&rendered));
    if outcome.is_valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn gen_spec(args: &GenArgs) -> Result<GenSpec, String> {
    let need = |name: &str, v: Option<usize>| v.ok_or(format!("--kind {} needs --{name}", args.kind));
    let kind = match args.kind.as_str() {
        "gnp" => {
            let n = need("nodes", args.nodes)?;
            let p = match (args.p, args.avg_degree) {
                (Some(p), None) => p,
                (None, Some(d)) => d / n.max(1) as f64,
                (None, None) => return Err("gnp needs --p or --avg-degree".into()),
                (Some(_), Some(_)) => return Err("give --p or --avg-degree, not both".into()),
            };
            GenKind::Gnp { n, p }
        }
        "planted" => GenKind::Planted {
            clique_size: need("clique-size", args.clique_size)?,
            count: need("count", args.count)?,
            bridge_p: args.bridge_p,
        },
        "hypercube" => GenKind::Hypercube {
            dim: args.dim.ok_or("--kind hypercube needs --dim")?,
        },
        "star-forest" => GenKind::StarForest {
            centers: need("centers", args.centers)?,
            leaves: need("leaves", args.leaves)?,
        },
        other => return Err(format!("unknown kind {other:?}")),
    };
    let palette = match args.palette_mode.as_str() {
        "default" => PaletteMode::Default,
        "random" => PaletteMode::Random {
            extra: args.palette_extra,
        },
        other => return Err(format!("unknown palette mode {other:?}")),
    };
    Ok(GenSpec {
        kind,
        seed: args.seed,
        palette,
    })
}

fn cmd_generate(args: &GenArgs) -> ExitCode {
    let spec = match gen_spec(args) {
        Ok(s) => s,
        Err(e) => return usage_err(e),
    };
    if matches!(spec.palette, PaletteMode::Random { .. }) && args.out_palettes.is_none() {
        return usage_err("random palettes need --out-palettes".into());
    }
    let inst = match generate(&spec) {
        Ok(i) => i,
        Err(e) => return usage_err(e.to_string()),
    };
    if let Err(e) = write(&args.out_graph, &graph_text(&inst.graph)) {
        return usage_err(e);
    }
    if let Some(path) = &args.out_palettes {
        if let Err(e) = write(path, &palette_text(&inst)) {
            return usage_err(e);
        }
    }
    println!(
        "generated {} nodes, {} edges, max degree {}",
        inst.n(),
        inst.graph.m(),
        inst.graph.max_degree()
    );
    ExitCode::SUCCESS
}

fn cmd_verify(args: &VerifyArgs) -> ExitCode {
    let graph_text = match read(&args.graph) {
        Ok(t) => t,
        Err(e) => return usage_err(e),
    };
    let palette_text = match &args.palettes {
        Some(p) => match read(p) {
            Ok(t) => Some(t),
            Err(e) => return usage_err(e),
        },
        None => None,
    };
    let inst = match load_instance(&graph_text, palette_text.as_deref()) {
        Ok(i) => i,
        Err(e) => return usage_err(format!("bad instance: {e}")),
    };
    let coloring_text = match read(&args.coloring) {
        Ok(t) => t,
        Err(e) => return usage_err(e),
    };
    let state = match parse_coloring(&coloring_text, inst.n()) {
        Ok(s) => s,
        Err(e) => return usage_err(format!("bad coloring: {e}")),
    };
    match verify_coloring(&inst, &state) {
        Verdict::Valid => {
            println!("valid");
            ExitCode::SUCCESS
        }
        Verdict::Invalid(v) => {
            println!("invalid: {v}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn cmd_report(args: &ReportArgs) -> ExitCode {
    match read(&args.report) {
        Ok(text) => {
            print!("{}", summarize(&text));
            ExitCode::SUCCESS
        }
        Err(e) => usage_err(e),
    }
}

fn main() -> ExitCode {
    if let Ok(raw) = std::env::var("PALETTE_MPC_THREADS") {
        match raw.parse::<usize>() {
            Ok(t) if t > 0 => {
                // Affects speed only; every output is deterministic in the
                // inputs regardless of the pool size.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            _ => return usage_err(format!("PALETTE_MPC_THREADS={raw:?} is not a thread count")),
        }
    }
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Report(a) => cmd_report(a),
    }
}
