use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cocluster::io::{self, Format};
use cocluster::models::{self, DirectedGraph, PlantedModel};
use cocluster::report::{self, AnalysisConfig};
use cocluster::{ContingencyTable, Error, ErrorKind, KMeansConfig};

#[derive(Parser)]
#[command(name = "cocluster", version, about = "Spectral co-clustering of contingency tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full report: spectrum, clusters, cut, regularity and bound checks.
    Analyze(Options),
    /// Spectrum and row/column clusters.
    Bicluster(Options),
    /// Pairwise volume regularity of the clusters.
    Regularity(Options),
    /// Global discrepancy, mixing and cut-norm checks.
    Discrepancy(Options),
    /// Normalized two-way cut at the clusters, and its exact minimum with --exhaustive.
    Cuts(Options),
    /// Draw a planted-block binary table in triplet format.
    Generate(Generate),
    /// Cluster-sorted heatmap (PGM) with a CSV sidecar.
    Heatmap(Options),
    /// Treat a square zero-diagonal table as a directed graph.
    Directed(Options),
}

#[derive(Args)]
struct Options {
    #[arg(long)]
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    k: Option<usize>,
    /// Count singular values above this threshold to choose k.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Run brute-force oracles.
    #[arg(long)]
    exhaustive: bool,
    /// Override enumeration budgets.
    #[arg(long)]
    force: bool,
    /// Output path; standard output when omitted (required for heatmap).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Generate {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long)]
    p_in: f64,
    #[arg(long)]
    p_out: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Zero the diagonal, for use with `directed`.
    #[arg(long)]
    directed: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Options {
    fn config(&self) -> AnalysisConfig {
        AnalysisConfig {
            k: self.k,
            epsilon: self.epsilon,
            kmeans: KMeansConfig { seed: self.seed, restarts: self.restarts, ..KMeansConfig::default() },
            exhaustive: self.exhaustive,
            force: self.force,
            ..AnalysisConfig::default()
        }
    }

    fn table(&self) -> cocluster::Result<ContingencyTable> {
        let format = self.format.unwrap_or_else(|| guess_format(&self.input));
        io::read_table(&self.input, format)
    }
}

fn guess_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("mtx") => Format::MatrixMarket,
        Some("txt" | "tsv" | "triplets") => Format::Triplets,
        _ => Format::Csv,
    }
}

fn emit(text: &str, out: Option<&Path>) -> cocluster::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn square_graph(table: &ContingencyTable) -> cocluster::Result<DirectedGraph> {
    if table.n_rows() != table.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "a directed graph needs a square table, got {}x{}",
            table.n_rows(),
            table.n_cols()
        )));
    }
    DirectedGraph::new(table.n_rows(), table.to_dense_values())
}

fn generate(g: &Generate) -> cocluster::Result<String> {
    let model = PlantedModel::diagonal(g.k, g.rows, g.cols, g.p_in, g.p_out, g.seed)?;
    let join = |labels: &[usize]| labels.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
    let mut comments = vec![format!(
        "planted {}x{} k={} p_in={} p_out={} seed={}{}",
        g.rows,
        g.cols,
        g.k,
        g.p_in,
        g.p_out,
        g.seed,
        if g.directed { " directed" } else { "" }
    )];
    let table = if g.directed {
        let (graph, _, _) = models::generate_directed_planted(&model)?;
        ContingencyTable::from_dense(graph.n(), graph.n(), graph.weights().to_vec())?
    } else {
        models::generate_planted(&model)?.counts
    };
    comments.push(format!("row_truth {}", join(&model.row_truth())));
    comments.push(format!("col_truth {}", join(&model.col_truth())));
    Ok(io::format_triplets(&table, &comments))
}

fn run(cli: Cli) -> cocluster::Result<()> {
    match cli.command {
        Command::Analyze(o) => emit(&io::to_document(&report::analyze(&o.table()?, &o.config())?)?, o.out.as_deref()),
        Command::Bicluster(o) => {
            emit(&io::to_document(&report::bicluster_document(&o.table()?, &o.config())?)?, o.out.as_deref())
        }
        Command::Regularity(o) => {
            emit(&io::to_document(&report::regularity_document(&o.table()?, &o.config())?)?, o.out.as_deref())
        }
        Command::Discrepancy(o) => {
            emit(&io::to_document(&report::discrepancy_document(&o.table()?, &o.config())?)?, o.out.as_deref())
        }
        Command::Cuts(o) => emit(&io::to_document(&report::cuts_document(&o.table()?, &o.config())?)?, o.out.as_deref()),
        Command::Generate(g) => emit(&generate(&g)?, g.out.as_deref()),
        Command::Heatmap(o) => {
            let out = o.out.as_deref().ok_or_else(|| Error::DimensionMismatch("heatmap needs --out".into()))?;
            let table = o.table()?;
            let doc = report::bicluster_document(&table, &o.config())?;
            let sidecar = io::write_heatmap(&table, &doc.assignment, out)?;
            println!("{}", sidecar.display());
            Ok(())
        }
        Command::Directed(o) => {
            let graph = square_graph(&o.table()?)?;
            emit(&io::to_document(&report::directed_document(&graph, &o.config())?)?, o.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Budget => 3,
                ErrorKind::Numerical => 4,
                ErrorKind::Io => 2,
            })
        }
    }
}
