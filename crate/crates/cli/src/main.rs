//! `cdaglab`: build cDAGs, compute exact LoI profiles, compare them with the
//! reference closed forms, run perturbation trials and the acceptance suite.
//!
//! Exit codes: 0 success, 1 failed check or runtime error, 2 usage error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdaglab::arch::{
    figures, ArchSpec, ConvPoolSpec, ExplicitPattern, Family, ParseTree, PoolValuation, Pooling,
    SparsitySource,
};
use cdaglab::cdag::{from_json, DotOptions};
use cdaglab::eval::{EncoderSpec, ReadoutSpec, SpanKind, SpanProcessorSpec};
use cdaglab::loi::{compare_to_closed_form, complexity_profile, path_histograms, symbolic_beta};
use cdaglab::rational::{display, parse_positive, parse_rational};
use cdaglab::sensitivity::{run_trials, TrialConfig};
use cdaglab::separability::{check_assumption_coverage, enumerate_parts, AnnotatedItem};
use cdaglab::{verify, CDag, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "cdaglab",
    version,
    about = "Computation-DAG locus-of-influence toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a cDAG and print it as JSON or DOT.
    Build {
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Per-source absolute and relative LoI with structural statistics.
    Analyze {
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        io: IoArgs,
        /// Per-argument Lipschitz constant, e.g. `2` or `3/2`.
        #[arg(long, default_value = "2")]
        c: String,
        /// Also print δ and β as expressions in c.
        #[arg(long)]
        symbolic: bool,
    },
    /// Enumerated LoI against the reference closed form, one row per L.
    Compare {
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value = "2")]
        c: String,
    },
    /// Single-token perturbation trials against the LoI sensitivity bound.
    Perturb {
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value = "2")]
        c: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Embedding dimension.
        #[arg(long, default_value_t = 8)]
        dim: usize,
        /// Readout Lipschitz constant.
        #[arg(long, default_value = "1")]
        gamma: String,
        #[arg(long, default_value_t = 32)]
        vocab: usize,
        /// Span processor: linear-mean, tanh-linear or padded.
        #[arg(long, default_value = "linear-mean")]
        kind: String,
        /// Write the per-trial CSV log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Cleanly separable parts of an out-degree-one cDAG, or an
    /// annotated-dataset coverage check.
    Parts {
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        io: IoArgs,
        /// Annotated dataset; the first item is the test item, the rest
        /// the training set.
        #[arg(long, conflicts_with = "cdag")]
        dataset: Option<PathBuf>,
    },
    /// Write the built-in named graphs as JSON and DOT into a directory.
    Export {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
    /// Run the acceptance checks.
    Suite {
        /// Only the listed check ids (e.g. `1 8a 11`).
        #[arg(long, num_args = 1..)]
        only: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Args)]
struct ArchArgs {
    /// Family (flat, unirnn, birnn, balancedtree, parsetree, convpool,
    /// transformer, sparse, decoder) or a named graph (example1,
    /// example1-reshaped, example2, parts-left, parts-right, sparse-example).
    #[arg(long)]
    arch: Option<String>,
    /// Sequence length; `a..b` sweeps inclusively (compare only).
    #[arg(long)]
    len: Option<String>,
    /// Transformer blocks M.
    #[arg(long)]
    blocks: Option<usize>,
    /// Attended-set size K.
    #[arg(long)]
    k: Option<usize>,
    /// Sparsity source: adversarial, seed:<n>, or a JSON pattern file.
    #[arg(long, default_value = "adversarial")]
    sparsity: String,
    /// Convolution window w.
    #[arg(long)]
    conv: Option<usize>,
    /// Pooling window p.
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long, default_value = "avg")]
    pooling: String,
    /// Requested number of sinks.
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long)]
    padding: bool,
    #[arg(long)]
    strict: bool,
    /// Comma-separated per-token scalars deciding max/min pooling.
    #[arg(long)]
    valuation: Option<String>,
    /// Binary parse tree such as `((1,2),3)`.
    #[arg(long)]
    tree: Option<String>,
    /// Architecture given as ArchSpec JSON.
    #[arg(long, conflicts_with = "arch")]
    spec: Option<PathBuf>,
    /// A cDAG JSON file instead of an architecture.
    #[arg(long, conflicts_with_all = ["arch", "spec"])]
    cdag: Option<PathBuf>,
}

#[derive(Args)]
struct IoArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Table,
    Csv,
}

enum Failure {
    Usage(String),
    Runtime(String),
    Checks(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Arch(_) | Error::Parse(_) | Error::NonPositiveC(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn parse_lens(text: &str) -> CliResult<Vec<usize>> {
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Failure::Usage(format!("invalid --len {text:?}")))
    };
    match text.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return usage(format!("empty --len range {text}"));
            }
            Ok((a..=b).collect())
        }
        None => Ok(vec![num(text)?]),
    }
}

fn named_graph(name: &str) -> Option<CDag> {
    Some(match name {
        "example1" => figures::example1(),
        "example1-reshaped" => figures::example1_reshaped(),
        "example2" => figures::example2(),
        "parts-left" => figures::parts_left(),
        "parts-right" => figures::parts_right(),
        "sparse-example" => figures::sparse_example(),
        _ => return None,
    })
}

const NAMED: [&str; 6] = [
    "example1",
    "example1-reshaped",
    "example2",
    "parts-left",
    "parts-right",
    "sparse-example",
];

/// What the architecture flags describe.
enum Target {
    Graph(String, CDag),
    Specs(Vec<ArchSpec>),
}

impl ArchArgs {
    fn need<T: Copy>(&self, v: Option<T>, flag: &str, family: Family) -> CliResult<T> {
        v.ok_or_else(|| Failure::Usage(format!("--arch {family} requires --{flag}")))
    }

    fn sparsity(&self) -> CliResult<SparsitySource> {
        let s = self.sparsity.trim();
        if s == "adversarial" {
            return Ok(SparsitySource::Adversarial);
        }
        if let Some(seed) = s.strip_prefix("seed:") {
            return seed
                .parse()
                .map(|seed| SparsitySource::SeededRandom { seed })
                .map_err(|_| Failure::Usage(format!("invalid --sparsity {s:?}")));
        }
        let pattern: ExplicitPattern = serde_json::from_str(&read(Path::new(s))?)
            .map_err(|e| Failure::Usage(format!("{s}: {e}")))?;
        Ok(SparsitySource::Explicit(pattern))
    }

    fn spec_for(&self, family: Family, len: usize) -> CliResult<ArchSpec> {
        Ok(match family {
            Family::Flat => ArchSpec::Flat { len },
            Family::UniRnn => ArchSpec::UniRnn { len },
            Family::BiRnn => ArchSpec::BiRnn { len },
            Family::BalancedTree => ArchSpec::BalancedTree { len },
            Family::ParseTree => unreachable!("parse trees carry their own length"),
            Family::ConvPool => ArchSpec::ConvPool(
                ConvPoolSpec::new(
                    len,
                    self.need(self.conv, "conv", family)?,
                    self.need(self.pool, "pool", family)?,
                    self.m,
                    self.pooling.parse::<Pooling>()?,
                )
                .padded(self.padding)
                .strict(self.strict),
            ),
            Family::Transformer => ArchSpec::Transformer {
                len,
                blocks: self.need(self.blocks, "blocks", family)?,
            },
            Family::DecoderTransformer => ArchSpec::DecoderTransformer {
                len,
                blocks: self.need(self.blocks, "blocks", family)?,
            },
            Family::SparseTransformer => ArchSpec::SparseTransformer {
                len,
                blocks: self.need(self.blocks, "blocks", family)?,
                k: self.need(self.k, "k", family)?,
                sparsity: self.sparsity()?,
            },
        })
    }

    fn target(&self) -> CliResult<Target> {
        if let Some(path) = &self.cdag {
            let dag = from_json(&read(path)?).map_err(|e| Failure::Runtime(e.to_string()))?;
            return Ok(Target::Graph(path.display().to_string(), dag));
        }
        if let Some(path) = &self.spec {
            let spec: ArchSpec = serde_json::from_str(&read(path)?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            return Ok(Target::Specs(vec![spec]));
        }
        let Some(name) = self.arch.as_deref() else {
            return usage("one of --arch, --spec or --cdag is required");
        };
        if let Some(dag) = named_graph(name) {
            return Ok(Target::Graph(name.to_string(), dag));
        }
        let family: Family = name.parse()?;
        if family == Family::ParseTree {
            let Some(tree) = &self.tree else {
                return usage("--arch parsetree requires --tree");
            };
            let tree: ParseTree = tree.parse()?;
            return Ok(Target::Specs(vec![ArchSpec::ParseTree { tree }]));
        }
        let Some(len) = &self.len else {
            return usage(format!("--arch {family} requires --len"));
        };
        let specs = parse_lens(len)?
            .into_iter()
            .map(|l| self.spec_for(family, l))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Target::Specs(specs))
    }

    fn valuation(&self) -> CliResult<Option<PoolValuation>> {
        let Some(text) = &self.valuation else {
            return Ok(None);
        };
        let v = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| Failure::Usage(format!("invalid --valuation {text:?}")))?;
        Ok(Some(PoolValuation::Scalars(v)))
    }

    fn build(&self, spec: &ArchSpec) -> CliResult<CDag> {
        let selective = matches!(spec, ArchSpec::ConvPool(s) if s.pooling.is_selective());
        let valuation = self.valuation()?;
        if selective && valuation.is_none() {
            return usage("max/min pooling needs --valuation");
        }
        Ok(spec.build_with(valuation.as_ref())?)
    }

    /// Exactly one graph.
    fn single(&self) -> CliResult<(String, CDag)> {
        match self.target()? {
            Target::Graph(name, dag) => Ok((name, dag)),
            Target::Specs(specs) => match specs.as_slice() {
                [spec] => Ok((spec.to_string(), self.build(spec)?)),
                _ => usage("this command takes a single --len, not a range"),
            },
        }
    }
}

fn emit(io: &IoArgs, text: &str) -> CliResult<()> {
    match &io.out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn format_or(io: &IoArgs, default: Format, allowed: &[Format]) -> CliResult<Format> {
    let f = io.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        usage("unsupported --format for this command")
    }
}

fn cmd_build(arch: &ArchArgs, io: &IoArgs) -> CliResult<()> {
    let (_, dag) = arch.single()?;
    let text = match format_or(io, Format::Json, &[Format::Json, Format::Dot])? {
        Format::Dot => dag.to_dot(&DotOptions::default()),
        _ => {
            let mut s = dag.to_json();
            s.push('\n');
            s
        }
    };
    emit(io, &text)
}

fn cmd_analyze(arch: &ArchArgs, io: &IoArgs, c: &str, symbolic: bool) -> CliResult<()> {
    let c = parse_positive(c)?;
    let (name, dag) = arch.single()?;
    let p = complexity_profile(&dag, &c)?;
    let hs = path_histograms(&dag);
    let format = format_or(
        io,
        Format::Table,
        &[Format::Table, Format::Json, Format::Csv],
    )?;
    let mut out = String::new();
    match format {
        Format::Json => out = json(&p),
        Format::Csv => {
            out.push_str("source,delta,beta,delta_symbolic,beta_symbolic\n");
            for i in 0..p.delta.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    i + 1,
                    display(&p.delta[i]),
                    display(&p.beta[i]),
                    hs[i].polynomial(),
                    symbolic_beta(&hs, i)
                );
            }
        }
        _ => {
            let _ = writeln!(out, "{name}");
            let _ = writeln!(
                out,
                "k={} q={} m={} depth={} c={}",
                p.k,
                p.q,
                p.m,
                p.depth,
                display(&c)
            );
            for i in 0..p.delta.len() {
                let _ = write!(
                    out,
                    "source {:>3}  delta {:>14}  beta {:>12}",
                    i + 1,
                    display(&p.delta[i]),
                    display(&p.beta[i])
                );
                if symbolic {
                    let _ = write!(
                        out,
                        "  delta(c) {}  beta(c) {}",
                        hs[i].polynomial(),
                        symbolic_beta(&hs, i)
                    );
                }
                out.push('\n');
            }
            let _ = writeln!(
                out,
                "delta_max {} (sources {:?})  beta_max {}",
                display(&p.delta_max),
                p.argmax_delta(),
                display(&p.beta_max)
            );
        }
    }
    emit(io, &out)
}

fn opt(r: Option<String>) -> String {
    r.unwrap_or_else(|| "-".into())
}

fn cmd_compare(arch: &ArchArgs, io: &IoArgs, c: &str) -> CliResult<()> {
    let c = parse_positive(c)?;
    let Target::Specs(specs) = arch.target()? else {
        return usage("compare needs an architecture family, not a named graph");
    };
    let rows = specs
        .iter()
        .map(|s| compare_to_closed_form(s, &c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::new();
    match format_or(
        io,
        Format::Table,
        &[Format::Table, Format::Json, Format::Csv],
    )? {
        Format::Json => out = json(&rows),
        Format::Csv => {
            out.push_str(
                "arch,c,delta_enumerated,delta_predicted,delta_match,beta_enumerated,beta_predicted,beta_match,delta_enumerated_symbolic,delta_predicted_symbolic\n",
            );
            for r in &rows {
                let _ = writeln!(
                    out,
                    "\"{}\",{},{},{},{},{},{},{},{},{}",
                    r.arch,
                    display(&r.c),
                    display(&r.delta.enumerated),
                    opt(r.delta.predicted.as_ref().map(display)),
                    r.delta.exact_match,
                    display(&r.beta.enumerated),
                    opt(r.beta.predicted.as_ref().map(display)),
                    r.beta.exact_match,
                    r.delta_enumerated_symbolic,
                    r.delta_predicted_symbolic
                );
            }
        }
        _ => {
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{:<28} delta {} vs {} ({})  beta {} vs {} ({})  [{} vs {}]",
                    r.arch,
                    display(&r.delta.enumerated),
                    opt(r.delta.predicted.as_ref().map(display)),
                    if r.delta.exact_match {
                        "exact"
                    } else {
                        "differs"
                    },
                    display(&r.beta.enumerated),
                    opt(r.beta.predicted.as_ref().map(display)),
                    if r.beta.exact_match {
                        "exact"
                    } else {
                        "differs"
                    },
                    r.delta_enumerated_symbolic,
                    r.delta_predicted_symbolic
                );
                if !r.note.is_empty() {
                    let _ = writeln!(out, "    note: {}", r.note);
                }
            }
        }
    }
    emit(io, &out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_perturb(
    arch: &ArchArgs,
    io: &IoArgs,
    c: &str,
    trials: usize,
    seed: u64,
    dim: usize,
    gamma: &str,
    vocab: usize,
    kind: &str,
    log: Option<&Path>,
) -> CliResult<()> {
    let Target::Specs(specs) = arch.target()? else {
        return usage("perturb needs an architecture family");
    };
    let [spec] = specs.as_slice() else {
        return usage("perturb takes a single --len");
    };
    let c = parse_rational(c)?;
    let gamma = parse_rational(gamma)?;
    let cfg = TrialConfig {
        arch: spec.clone(),
        encoder: EncoderSpec::new(vocab, dim, seed),
        span: SpanProcessorSpec::new(kind.parse::<SpanKind>()?, c, 1, seed.wrapping_add(1)),
        readout: ReadoutSpec::new(gamma, 1, seed.wrapping_add(2)),
        trials,
        seed,
        evaluate_changed: false,
    };
    let report = run_trials(&cfg)?;
    if let Some(path) = log {
        std::fs::write(path, report.to_csv()).map_err(|e| io_err(path, e))?;
    }
    let text = match format_or(io, Format::Json, &[Format::Json, Format::Csv])? {
        Format::Csv => report.to_csv(),
        _ => json(&report),
    };
    emit(io, &text)?;
    if report.summary.violations > 0 {
        return Err(Failure::Checks(format!(
            "{} bound violations",
            report.summary.violations
        )));
    }
    Ok(())
}

fn cmd_parts(arch: &ArchArgs, io: &IoArgs, dataset: Option<&Path>) -> CliResult<()> {
    let text = if let Some(path) = dataset {
        let items: Vec<AnnotatedItem> = serde_json::from_str(&read(path)?)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        let Some((test, train)) = items.split_first() else {
            return usage("the dataset needs at least the test item");
        };
        json(&check_assumption_coverage(test, train)?)
    } else {
        let (_, dag) = arch.single()?;
        json(&enumerate_parts(&dag))
    };
    emit(io, &text)
}

fn cmd_export(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for name in NAMED {
        let dag = named_graph(name).expect("listed name");
        for (ext, body) in [
            ("json", format!("{}\n", dag.to_json())),
            ("dot", dag.to_dot(&DotOptions::default())),
        ] {
            let path = dir.join(format!("{name}.{ext}"));
            std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        }
    }
    eprintln!("wrote {} graphs to {}", NAMED.len(), dir.display());
    Ok(())
}

fn cmd_suite(only: &[String], format: Format) -> CliResult<()> {
    let mut results = Vec::new();
    for (id, check) in verify::CHECKS {
        if only.is_empty() || only.iter().any(|o| o == id) {
            results.push(check());
        }
    }
    if results.is_empty() {
        return usage("no check matches --only");
    }
    if format == Format::Json {
        print!("{}", json(&results));
    } else {
        for r in &results {
            println!("{r}");
        }
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        return Err(Failure::Checks(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Build { arch, io } => cmd_build(&arch, &io),
        Command::Analyze {
            arch,
            io,
            c,
            symbolic,
        } => cmd_analyze(&arch, &io, &c, symbolic),
        Command::Compare { arch, io, c } => cmd_compare(&arch, &io, &c),
        Command::Perturb {
            arch,
            io,
            c,
            trials,
            seed,
            dim,
            gamma,
            vocab,
            kind,
            log,
        } => cmd_perturb(
            &arch,
            &io,
            &c,
            trials,
            seed,
            dim,
            &gamma,
            vocab,
            &kind,
            log.as_deref(),
        ),
        Command::Parts { arch, io, dataset } => cmd_parts(&arch, &io, dataset.as_deref()),
        Command::Export { dir } => cmd_export(&dir),
        Command::Suite { only, format } => cmd_suite(&only, format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) | Err(Failure::Checks(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
