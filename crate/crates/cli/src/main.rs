use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use seismic_core::eval::{self, ip_preservation, mass_curve, mean_accuracy, norm_ratio_cdf};
use seismic_core::io::{load_collection, read_results_tsv, save_collection, write_results_tsv};
use seismic_core::synth::{zipf_dataset, ZipfSpec};
use seismic_core::{
    ground_truth, BuildParams, Error, GroundTruth, KnnGraph, ResultList, SearchParams, Searcher,
    SeismicIndex, VectorSetF32,
};

#[derive(Parser)]
#[command(
    name = "seismic",
    version,
    about = "Approximate top-k inner product search over sparse vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from a CSR collection.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        seed: u64,
        /// Store block summaries as raw f32 instead of 8-bit codes.
        #[arg(long)]
        no_quantize: bool,
    },
    /// Build the κ-NN graph of an indexed collection.
    KnnGraph {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        kappa: u32,
        #[arg(long)]
        output: PathBuf,
        /// Brute force instead of searching the index.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 0.8)]
        alpha_q: f64,
        #[arg(long, default_value_t = 0.9)]
        heap_factor: f64,
    },
    /// Run a batch of queries and write ranked results as TSV.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        alpha_q: f64,
        #[arg(long)]
        heap_factor: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Exhaustive top-k for every query.
    GroundTruth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        output: PathBuf,
    },
    /// Mean accuracy@k of a results TSV against ground truth.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        k: u32,
    },
    /// Collection statistics as TSV.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: StatsMode,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha_q: f64,
        #[arg(long, default_value_t = 10)]
        k_far: u32,
    },
    /// Single-threaded query latency.
    Bench {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        alpha_q: f64,
        #[arg(long)]
        heap_factor: f64,
        #[arg(long, default_value_t = 3)]
        reps: u32,
    },
    /// Write a synthetic collection and query set.
    Generate {
        #[arg(long)]
        docs: usize,
        #[arg(long)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        dim: u32,
        #[arg(long)]
        docs_output: PathBuf,
        #[arg(long)]
        queries_output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsMode {
    Mass,
    Ip,
    NormRatio,
}

/// Pairs sampled for the inner-product preservation statistic.
const IP_SAMPLE: usize = 10_000;
/// Largest prefix reported by the mass curve.
const MASS_MAX_KEEP: usize = 1000;

fn load_set(path: &Path) -> Result<VectorSetF32> {
    load_collection(path).with_context(|| format!("reading collection {}", path.display()))
}

fn load_index(path: &Path) -> Result<SeismicIndex> {
    SeismicIndex::load(path).with_context(|| format!("reading index {}", path.display()))
}

fn load_graph(path: Option<&Path>, index: &SeismicIndex) -> Result<Option<KnnGraph>> {
    let Some(path) = path else { return Ok(None) };
    let g = KnnGraph::load(path).with_context(|| format!("reading graph {}", path.display()))?;
    if g.len() != index.len() {
        bail!(
            "graph has {} points but the index has {}",
            g.len(),
            index.len()
        );
    }
    Ok(Some(g))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn positive_k(k: u32) -> Result<usize> {
    if k == 0 {
        bail!("--k must be at least 1");
    }
    Ok(k as usize)
}

fn run_queries(
    searcher: &Searcher,
    queries: &VectorSetF32,
    params: &SearchParams,
) -> Result<Vec<ResultList>> {
    let mut scratch = searcher.scratch();
    queries
        .iter()
        .enumerate()
        .map(
            |(i, q)| match searcher.search_with(q, params, &mut scratch) {
                Ok(out) => Ok(out.results),
                // an empty query matches nothing
                Err(Error::ZeroVector) => Ok(Vec::new()),
                Err(e) => Err(e).with_context(|| format!("query {i}")),
            },
        )
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Build {
            input,
            output,
            alpha,
            beta,
            gamma,
            seed,
            no_quantize,
        } => {
            let set = load_set(&input)?;
            let params = BuildParams {
                alpha,
                beta,
                gamma,
                quantize: !no_quantize,
                seed,
            };
            let index = SeismicIndex::build(&set, params).context("building index")?;
            index
                .save(&output)
                .with_context(|| format!("writing {}", output.display()))?;
            eprintln!(
                "indexed {} vectors: {} blocks, {} postings, {} summary entries",
                index.len(),
                index.num_blocks(),
                index.num_postings(),
                index.summary_entries()
            );
        }
        Command::KnnGraph {
            index,
            kappa,
            output,
            exact,
            alpha_q,
            heap_factor,
        } => {
            let index = load_index(&index)?;
            let graph = if exact {
                KnnGraph::exact(index.forward(), kappa)
            } else {
                KnnGraph::approximate(&index, kappa, alpha_q, heap_factor)
                    .context("building graph")?
            };
            graph
                .save(&output)
                .with_context(|| format!("writing {}", output.display()))?;
        }
        Command::Search {
            index,
            graph,
            queries,
            k,
            alpha_q,
            heap_factor,
            output,
        } => {
            let index = load_index(&index)?;
            let graph = load_graph(graph.as_deref(), &index)?;
            let queries = load_set(&queries)?;
            let params =
                SearchParams::new(positive_k(k)?, alpha_q, heap_factor).with_graph(graph.is_some());
            params.validate()?;
            let runs = run_queries(&Searcher::new(&index, graph.as_ref()), &queries, &params)?;
            let mut w = create(&output)?;
            write_results_tsv(&mut w, &runs)?;
            w.flush()?;
        }
        Command::GroundTruth {
            input,
            queries,
            k,
            output,
        } => {
            let set = load_set(&input)?;
            let queries = load_set(&queries)?;
            let gt = ground_truth(&set, &queries, positive_k(k)?)?;
            gt.save(&output)
                .with_context(|| format!("writing {}", output.display()))?;
        }
        Command::Evaluate { run, gt, k } => {
            let truth = GroundTruth::load(&gt)
                .with_context(|| format!("reading ground truth {}", gt.display()))?;
            let file =
                File::open(&run).with_context(|| format!("reading results {}", run.display()))?;
            let runs = read_results_tsv(file)?;
            if runs.len() > truth.rows.len() {
                bail!(
                    "results cover {} queries, ground truth only {}",
                    runs.len(),
                    truth.rows.len()
                );
            }
            writeln!(out, "{:.6}", mean_accuracy(&truth, &runs, positive_k(k)?)?)?;
        }
        Command::Stats {
            input,
            queries,
            mode,
            alpha,
            alpha_q,
            k_far,
        } => {
            let set = load_set(&input)?;
            let need_queries = || -> Result<VectorSetF32> {
                match &queries {
                    Some(p) => load_set(p),
                    None => bail!("this mode needs --queries"),
                }
            };
            match mode {
                StatsMode::Mass => {
                    let longest = set.iter().map(|v| v.len()).max().unwrap_or(0);
                    writeln!(out, "kept\tmass_fraction")?;
                    for (j, m) in mass_curve(&set, longest.min(MASS_MAX_KEEP))?
                        .iter()
                        .enumerate()
                    {
                        writeln!(out, "{}\t{m:.6}", j + 1)?;
                    }
                }
                StatsMode::Ip => {
                    let queries = need_queries()?;
                    let r = ip_preservation(&set, &queries, alpha, alpha_q, IP_SAMPLE, 0)?;
                    writeln!(out, "alpha\talpha_q\tmean\tci_low\tci_high\tpairs")?;
                    writeln!(
                        out,
                        "{alpha}\t{alpha_q}\t{:.6}\t{:.6}\t{:.6}\t{}",
                        r.mean, r.ci_low, r.ci_high, r.pairs
                    )?;
                }
                StatsMode::NormRatio => {
                    let queries = need_queries()?;
                    let ratios = norm_ratio_cdf(&set, &queries, k_far as usize)?;
                    writeln!(out, "ratio\tcdf")?;
                    for (i, r) in ratios.iter().enumerate() {
                        writeln!(out, "{r:.6}\t{:.6}", (i + 1) as f64 / ratios.len() as f64)?;
                    }
                }
            }
        }
        Command::Bench {
            index,
            graph,
            queries,
            k,
            alpha_q,
            heap_factor,
            reps,
        } => {
            let index = load_index(&index)?;
            let graph = load_graph(graph.as_deref(), &index)?;
            let queries = load_set(&queries)?;
            let nonempty: Vec<_> = queries.iter().filter(|q| !q.is_empty()).cloned().collect();
            let queries = VectorSetF32::new(queries.dim(), nonempty)?;
            let params =
                SearchParams::new(positive_k(k)?, alpha_q, heap_factor).with_graph(graph.is_some());
            let report = eval::bench(
                &Searcher::new(&index, graph.as_ref()),
                &queries,
                &params,
                reps as usize,
            )?;
            writeln!(out, "queries\t{}", report.per_query_us.len())?;
            writeln!(out, "mean_us\t{:.1}", report.mean_us)?;
            writeln!(out, "median_us\t{:.1}", report.median_us)?;
            writeln!(out, "p95_us\t{:.1}", report.p95_us)?;
        }
        Command::Generate {
            docs,
            queries,
            seed,
            dim,
            docs_output,
            queries_output,
        } => {
            if dim == 0 {
                bail!("--dim must be positive");
            }
            let (d, q) = zipf_dataset(
                ZipfSpec {
                    dim,
                    ..ZipfSpec::default()
                },
                docs,
                queries,
                seed,
            );
            save_collection(&d, &docs_output)
                .with_context(|| format!("writing {}", docs_output.display()))?;
            save_collection(&q, &queries_output)
                .with_context(|| format!("writing {}", queries_output.display()))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>().map(io::Error::kind) == Some(io::ErrorKind::BrokenPipe)
            || matches!(c.downcast_ref::<Error>(), Some(Error::Io(io)) if io.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // downstream closed early, as in `seismic stats ... | head`
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
