//! `ring-snake`: trace, classify, and verify bifurcation branches of
//! localized steady states on bistable ring lattices.
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 numerical
//! failure, 3 verification found a law outside tolerance.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use ring_snake::config::resolve_model;
use ring_snake::export::{diagram_from_json, diagram_to_csv, diagram_to_json, DiagramDoc};
use ring_snake::outio::write_atomic;
use ring_snake::svg::render;
use ring_snake::verify::{verify_all_to_all, verify_sparse};
use ring_snake_core::continuation::{
    trace_bidirectional, ContinuationOptions, MuSide, SteadySystem, StopRule,
};
use ring_snake_core::diagram::{
    auto_mode, build_diagram, Diagram, DiagramMode, DiagramOptions, DiagramSummary, GammaMatch,
};
use ring_snake_core::model::RingModel;
use ring_snake_core::patterns::{label_valid, make_pattern, PatternLabel};
use ring_snake_core::reduction::SymmetryReduction;

#[derive(Parser)]
#[command(
    name = "ring-snake",
    about = "Snaking bifurcation diagrams of bistable ring lattices",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace one solution branch from a pattern seed.
    Branch(BranchArgs),
    /// Assemble and classify a full bifurcation diagram.
    Diagram(DiagramArgs),
    /// Sweep the coupling strength and verify the fold/branch-point laws.
    Verify(VerifyArgs),
    /// Render an exported diagram JSON file to SVG.
    Plot(PlotArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model configuration file (JSON); flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Node count.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Interaction range (m = N/2 is all-to-all).
    #[arg(short, long)]
    m: Option<usize>,
    /// Coupling strength.
    #[arg(short, long)]
    d: Option<f64>,
    /// cubic-quintic | normal-cubic | normal-fold | poly:<c3,c5,...>
    #[arg(long)]
    nonlinearity: Option<String>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<RingModel> {
        resolve_model(
            self.config.as_deref(),
            self.n,
            self.m,
            self.d,
            self.nonlinearity.as_deref(),
        )
    }
}

#[derive(Args, Clone)]
struct TraceArgs {
    /// Initial pseudo-arclength step.
    #[arg(long)]
    ds: Option<f64>,
    /// Largest pseudo-arclength step.
    #[arg(long)]
    ds_max: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Parameter window "lo,hi".
    #[arg(long)]
    mu_window: Option<String>,
    /// Stop at the exceptional configurations near mu = 0, 1 (on|off).
    #[arg(long, default_value = "on")]
    stop_on_exceptional: String,
    /// Newton residual tolerance (max-norm).
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Newton iteration cap.
    #[arg(long)]
    newton_iters: Option<usize>,
}

impl TraceArgs {
    fn apply(&self, base: &mut ContinuationOptions) -> Result<()> {
        if let Some(ds) = self.ds {
            base.ds_init = ds;
        }
        if let Some(ds_max) = self.ds_max {
            base.ds_max = ds_max;
        }
        if let Some(steps) = self.max_steps {
            base.max_steps = steps;
        }
        if let Some(win) = &self.mu_window {
            let (lo, hi) = win
                .split_once(',')
                .ok_or_else(|| anyhow!("--mu-window expects 'lo,hi'"))?;
            base.mu_window = (
                lo.trim().parse().context("parsing mu window low end")?,
                hi.trim().parse().context("parsing mu window high end")?,
            );
        }
        if let Some(tol) = self.newton_tol {
            base.newton.tol_residual = tol;
        }
        if let Some(iters) = self.newton_iters {
            base.newton.max_iters = iters;
        }
        match self.stop_on_exceptional.as_str() {
            "on" | "off" => Ok(()),
            other => bail!("--stop-on-exceptional expects on|off, got '{other}'"),
        }
    }

    fn stops_enabled(&self) -> bool {
        self.stop_on_exceptional == "on"
    }
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Emit the JSON artifact (all formats are emitted when none of
    /// --json/--csv/--svg is given).
    #[arg(long)]
    json: bool,
    /// Emit the CSV artifact.
    #[arg(long)]
    csv: bool,
    /// Emit the SVG artifact.
    #[arg(long)]
    svg: bool,
}

impl OutputArgs {
    fn wants(&self) -> (bool, bool, bool) {
        if !self.json && !self.csv && !self.svg {
            (true, true, true)
        } else {
            (self.json, self.csv, self.svg)
        }
    }
}

#[derive(Args)]
struct BranchArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Seed pattern label (grammar: U:k, V:k, W23, W24+, W24-, W3-,
    /// A+:k, A-:k, B:k, C+:k, C-:k, D:k, hom-, hom+, zero).
    #[arg(long, default_value = "U:1")]
    seed: String,
    /// Parameter value the branch is seeded at.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    /// full | kappa | twoblock:<k> (default inferred from the seed).
    #[arg(long)]
    symmetry: Option<String>,
    #[command(flatten)]
    trace: TraceArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DiagramArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// auto | sparse | 6-2 | 8-3 | alltoall | generic
    #[arg(long, default_value = "auto")]
    mode: String,
    /// Block size for the all-to-all mode.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Seed parameter value.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[command(flatten)]
    trace: TraceArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated coupling strengths (at least 3, spanning a decade).
    #[arg(long)]
    d_sweep: String,
    /// Verify the all-to-all laws instead of the sparse fold laws.
    #[arg(long)]
    alltoall: bool,
    /// Block size for all-to-all verification.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Tolerance on fitted exponents.
    #[arg(long, default_value_t = 0.02)]
    exp_tol: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Diagram JSON produced by the diagram or branch commands.
    #[arg(long)]
    input: PathBuf,
    /// Output SVG path.
    #[arg(long, default_value = "out/diagram.svg")]
    out: PathBuf,
}

/// Failures after configuration is pinned are numerical (exit 2).
enum CmdError {
    Config(anyhow::Error),
    Numeric(anyhow::Error),
}

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> Self {
        CmdError::Config(e)
    }
}

fn infer_symmetry(model: &RingModel, label: PatternLabel) -> Result<SymmetryReduction> {
    match label {
        PatternLabel::APlus(k)
        | PatternLabel::AMinus(k)
        | PatternLabel::B(k)
        | PatternLabel::CPlus(k)
        | PatternLabel::CMinus(k)
        | PatternLabel::D(k) => SymmetryReduction::two_block(model, k).map_err(|e| anyhow!("{e}")),
        _ => Ok(SymmetryReduction::kappa(model)),
    }
}

fn parse_symmetry(model: &RingModel, s: &str) -> Result<SymmetryReduction> {
    if s == "full" {
        return Ok(SymmetryReduction::full(model));
    }
    if s == "kappa" {
        return Ok(SymmetryReduction::kappa(model));
    }
    if let Some(rest) = s.strip_prefix("twoblock:") {
        let k: usize = rest.parse().context("parsing two-block size")?;
        return SymmetryReduction::two_block(model, k).map_err(|e| anyhow!("{e}"));
    }
    bail!("unknown symmetry '{s}' (expected full, kappa, or twoblock:<k>)")
}

fn cmd_branch(args: &BranchArgs) -> Result<(), CmdError> {
    let model = args.model.resolve()?;
    let n = model.node_count();
    let label: PatternLabel = args
        .seed
        .parse()
        .map_err(|e| anyhow!("{e}; see --help for the label grammar"))?;
    if !label_valid(&label, &model) {
        let half = n / 2;
        return Err(CmdError::Config(anyhow!(
            "seed {label} is not valid for N={n}, m={}: plateau labels U:k/V:k need k in 1..={}, two-block labels need k in 1..={half} under all-to-all coupling, W labels need (N,m)=(6,2) or (8,3)",
            model.range(),
            half + 1
        )));
    }

    let reduction = match &args.symmetry {
        Some(s) => parse_symmetry(&model, s)?,
        None => infer_symmetry(&model, label)?,
    };

    let mut copts = ContinuationOptions::default();
    args.trace.apply(&mut copts)?;
    if args.trace.stops_enabled() {
        copts.stop_labels = vec![
            StopRule {
                label: PatternLabel::V(1),
                side: MuSide::NearZero,
            },
            StopRule {
                label: PatternLabel::V(n / 2 + 1),
                side: MuSide::NearOne,
            },
        ];
    }

    let seed_full =
        make_pattern(label, &model, args.mu).map_err(|e| CmdError::Config(anyhow!("{e}")))?;
    let seed = reduction.project(&seed_full);
    let system = SteadySystem::new(&model, reduction);
    let branch = trace_bidirectional(&system, &seed, args.mu, &copts)
        .map_err(|e| CmdError::Numeric(anyhow!("{e}")))?;

    let fold_count = branch.fold_count();
    let closed = !branch
        .events_of(ring_snake_core::continuation::EventKind::Closure)
        .is_empty();
    let bp_count = branch
        .events_of(ring_snake_core::continuation::EventKind::BranchPoint)
        .len();
    let label_sequence = branch.label_sequence();
    let diagram = Diagram {
        model: model.clone(),
        mode: DiagramMode::GenericM,
        branches: vec![branch],
        summary: DiagramSummary {
            fold_count,
            branch_point_count: bp_count,
            closed,
            label_sequence,
            gamma_match: Some(GammaMatch::None),
            note: None,
        },
    };

    let doc = DiagramDoc::from_diagram(&diagram);
    let (json, csv, _svg) = args.output.wants();
    if json {
        write_atomic(&args.output.out.join("branch.json"), &diagram_to_json(&doc))?;
    }
    if csv {
        write_atomic(&args.output.out.join("branch.csv"), &diagram_to_csv(&doc))?;
    }
    println!(
        "branch: {} points, {} folds, events: {}",
        doc.branches[0].points.len(),
        doc.summary.fold_count,
        doc.branches[0]
            .events
            .iter()
            .map(|e| format!("{}@{:.5}", e.kind, e.mu))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

fn parse_mode(model: &RingModel, mode: &str, k: usize) -> Result<DiagramMode> {
    Ok(match mode {
        "auto" => match auto_mode(model) {
            DiagramMode::AllToAll(_) => DiagramMode::AllToAll(k),
            other => other,
        },
        "sparse" => DiagramMode::SparseSnake,
        "6-2" | "special62" => DiagramMode::Special62,
        "8-3" | "special83" => DiagramMode::Special83,
        "alltoall" | "all-to-all" => DiagramMode::AllToAll(k),
        "generic" => DiagramMode::GenericM,
        other => bail!("unknown mode '{other}'"),
    })
}

fn summary_text(diagram: &Diagram) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let model = &diagram.model;
    let _ = writeln!(
        s,
        "ring-snake diagram: N={} m={} d={}",
        model.node_count(),
        model.range(),
        model.d
    );
    let _ = writeln!(s, "mode: {}", diagram.mode);
    let _ = writeln!(s, "fold count: {}", diagram.summary.fold_count);
    let _ = writeln!(
        s,
        "branch point count: {}",
        diagram.summary.branch_point_count
    );
    let _ = writeln!(s, "closed curve: {}", diagram.summary.closed);
    let _ = writeln!(s, "gamma match: {}", diagram.summary.gamma());
    let labels = diagram
        .summary
        .label_sequence
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(" -> ");
    let _ = writeln!(s, "label sequence: {labels}");
    if let Some(note) = &diagram.summary.note {
        let _ = writeln!(s, "note: {note}");
    }
    for (i, b) in diagram.branches.iter().enumerate() {
        let events = b
            .events
            .iter()
            .map(|e| format!("{}@mu={:.6}", e.kind, e.mu))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(
            s,
            "branch {i}{}: {} points; events: {events}",
            if b.homogeneous { " (homogeneous)" } else { "" },
            b.points.len()
        );
    }
    s
}

fn cmd_diagram(args: &DiagramArgs) -> Result<(), CmdError> {
    let model = args.model.resolve()?;
    let mode = parse_mode(&model, &args.mode, args.k)?;
    let mut opts = DiagramOptions {
        seed_mu: args.mu,
        ..DiagramOptions::default()
    };
    args.trace.apply(&mut opts.continuation)?;
    if !args.trace.stops_enabled() {
        // Disable exceptional stops by shrinking the guarded zone away.
        opts.continuation.delta_star = -1.0;
    }
    let diagram = build_diagram(&model, mode, &opts).map_err(|e| match e {
        ring_snake_core::diagram::DiagramError::ModeMismatch { .. } => {
            CmdError::Config(anyhow!("{e}"))
        }
        other => CmdError::Numeric(anyhow!("{other}")),
    })?;
    let doc = DiagramDoc::from_diagram(&diagram);
    let (json, csv, svg) = args.output.wants();
    let dir = &args.output.out;
    if json {
        write_atomic(&dir.join("diagram.json"), &diagram_to_json(&doc))?;
    }
    if csv {
        write_atomic(&dir.join("diagram.csv"), &diagram_to_csv(&doc))?;
    }
    if svg {
        write_atomic(&dir.join("diagram.svg"), &render(&doc))?;
    }
    let text = summary_text(&diagram);
    write_atomic(&dir.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32, CmdError> {
    let model = args.model.resolve()?;
    let ds: Vec<f64> = args
        .d_sweep
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad d value '{t}' in sweep"))
        })
        .collect::<Result<_>>()?;
    if ds.len() < 3 {
        return Err(CmdError::Config(anyhow!(
            "need at least 3 d values in --d-sweep, got {}",
            ds.len()
        )));
    }
    let all_to_all = args.alltoall || model.is_all_to_all();
    if !all_to_all && model.range() > 2 {
        return Err(CmdError::Config(anyhow!(
            "fold-law verification covers interaction ranges m = 1, 2 and the all-to-all case"
        )));
    }
    let report = if all_to_all {
        verify_all_to_all(model.node_count(), args.k, &ds, args.exp_tol)
            .map_err(CmdError::Numeric)?
    } else {
        verify_sparse(
            model.node_count(),
            model.range(),
            &model.nonlinearity,
            &ds,
            args.exp_tol,
        )
        .map_err(CmdError::Numeric)?
    };
    write_atomic(&args.out.join("verify_report.json"), &report.to_json())?;
    for e in &report.entries {
        let (a, p) = e
            .fit
            .as_ref()
            .map(|f| (f.amplitude, f.exponent))
            .unwrap_or((f64::NAN, f64::NAN));
        println!(
            "{:<24} frame={:<18} expected A={:.5} p={:.4}  fitted A={:.5} p={:.4}  max_rel_err={:.3e}  exponent_ok={:?}",
            e.law.name,
            e.law.frame.to_string(),
            e.law.amplitude(),
            e.law.exponent(),
            a,
            p,
            e.max_rel_err,
            e.exponent_ok
        );
    }
    if report.all_gating_exponents_ok() {
        Ok(0)
    } else {
        println!("one or more fitted exponents outside tolerance (report written)");
        Ok(3)
    }
}

fn cmd_plot(args: &PlotArgs) -> Result<(), CmdError> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))
        .map_err(CmdError::Config)?;
    let doc = diagram_from_json(&text).map_err(CmdError::Config)?;
    write_atomic(Path::new(&args.out), &render(&doc))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let outcome: Result<i32, CmdError> = match &cli.command {
        Command::Branch(args) => cmd_branch(args).map(|()| 0),
        Command::Diagram(args) => cmd_diagram(args).map(|()| 0),
        Command::Verify(args) => cmd_verify(args),
        Command::Plot(args) => cmd_plot(args).map(|()| 0),
    };
    let code = match outcome {
        Ok(code) => code,
        Err(CmdError::Config(e)) => {
            eprintln!("error: {e:#}");
            1
        }
        Err(CmdError::Numeric(e)) => {
            eprintln!("numerical failure: {e:#}");
            2
        }
    };
    std::process::exit(code);
}
