//! `gspmv` command-line interface.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::csr::{dense_oracle, CsrMatrix, DENSE_ORACLE_MAX_CELLS};
use crate::format::{BlockedMatrix, BuildParams};
use crate::matio::{out_degrees, parse_input, transpose, DegreeVector, EdgeList, FormatTag, RowRange};
use crate::metrics::{self, bits_per_edge, MetricsRecord, CSV_HEADER};
use crate::pagerank::{pagerank, write_scores, PageRankConfig};
use crate::synth::random_vector;

#[derive(Parser, Debug)]
#[command(name = "gspmv", version, about = "Compressed sparse Boolean matrices: SpMV and PageRank")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatSel {
    Csr,
    K2,
    Re32,
    Reiv,
    Refcopy,
    All,
}

impl FormatSel {
    fn tags(self) -> Vec<FormatTag> {
        match self {
            FormatSel::Csr => vec![FormatTag::Csr],
            FormatSel::K2 => vec![FormatTag::K2],
            FormatSel::Re32 => vec![FormatTag::Gr32],
            FormatSel::Reiv => vec![FormatTag::GrIv],
            FormatSel::Refcopy => vec![FormatTag::RefCopy],
            FormatSel::All => FormatTag::ALL.to_vec(),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct BuildArgs {
    /// k²-tree arity.
    #[arg(long, default_value_t = crate::k2tree::DEFAULT_K)]
    pub k: u32,
    /// Reference window for refcopy.
    #[arg(long, default_value_t = crate::refcopy::DEFAULT_WINDOW)]
    pub window: usize,
}

impl BuildArgs {
    fn params(&self) -> Result<BuildParams> {
        if !(2..=255).contains(&self.k) {
            bail!("--k must be in 2..=255, got {}", self.k);
        }
        Ok(BuildParams {
            k: self.k,
            window: self.window,
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct RankArgs {
    /// Teleport probability.
    #[arg(long, default_value_t = 0.15)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Stop early once the L1 change between iterates drops below this.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl RankArgs {
    fn config(&self) -> Result<PageRankConfig> {
        let cfg = PageRankConfig {
            alpha: self.alpha,
            max_iters: self.iters,
            tol: self.tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Transpose and compress an edge list or MatrixMarket file.
    Compress {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: FormatSel,
        /// Number of row blocks (one per PageRank thread).
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[command(flatten)]
        build: BuildArgs,
        /// Container path; with `--format all`, a prefix for `<out>.<format>`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Describe a container.
    Stats { container: PathBuf },
    /// Run PageRank on a compressed transposed matrix.
    Pagerank {
        container: PathBuf,
        /// Out-degree sidecar; defaults to `<container>.deg`.
        #[arg(long)]
        degrees: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[command(flatten)]
        rank: RankArgs,
        /// Write scores here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Append the metrics row here instead of printing it.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<String>,
        /// Print an external profiler command for this run and exit.
        #[arg(long)]
        perf_hint: bool,
    },
    /// Sweep formats and thread counts, recompressing per thread count.
    Bench {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        format: FormatSel,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        threads: Vec<usize>,
        #[command(flatten)]
        rank: RankArgs,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Check every format's roundtrip and SpMV against a reference.
    Verify {
        input: PathBuf,
        /// Also check these containers against the transposed input.
        #[arg(long)]
        container: Vec<PathBuf>,
        /// Row blocks used for the blocked checks.
        #[arg(long, default_value_t = 4)]
        threads: usize,
        #[command(flatten)]
        build: BuildArgs,
        /// Seed for the random test vectors.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> Result<u8>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            e.print()?;
            return Ok(code);
        }
    };
    match cli.command {
        Command::Compress { input, format, threads, build, out } => {
            cmd_compress(&input, format, threads, &build, &out)?;
            Ok(0)
        }
        Command::Stats { container } => {
            cmd_stats(&container)?;
            Ok(0)
        }
        Command::Pagerank { container, degrees, threads, rank, out, csv, dataset, perf_hint } => {
            if perf_hint {
                let args: Vec<String> = std::env::args().filter(|a| a != "--perf-hint").collect();
                println!("{}", metrics::perf_invocation(&args));
                return Ok(0);
            }
            cmd_pagerank(&container, degrees.as_deref(), threads, &rank, out.as_deref(), csv.as_deref(), dataset)?;
            Ok(0)
        }
        Command::Bench { input, format, threads, rank, build, csv, dataset } => {
            cmd_bench(&input, format, &threads, &rank, &build, csv.as_deref(), dataset)?;
            Ok(0)
        }
        Command::Verify { input, container, threads, build, seed } => {
            let ok = cmd_verify(&input, &container, threads, &build, seed)?;
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn load_matrix(path: &Path) -> Result<EdgeList> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_input(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn dataset_name(explicit: Option<String>, path: &Path) -> String {
    explicit.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn check_threads(t: usize) -> Result<()> {
    if t == 0 {
        bail!("--threads must be at least 1");
    }
    Ok(())
}

fn bpe_or_nan(bytes: usize, m: u64) -> f64 {
    bits_per_edge(bytes as u64, m).unwrap_or(f64::NAN)
}

pub fn cmd_compress(input: &Path, format: FormatSel, threads: usize, build: &BuildArgs, out: &Path) -> Result<()> {
    check_threads(threads)?;
    let params = build.params()?;
    let a = load_matrix(input)?;
    let at = transpose(&a);
    let degrees = out_degrees(&a);
    for tag in format.tags() {
        let path = if format == FormatSel::All {
            with_suffix(out, &format!(".{}", tag.name()))
        } else {
            out.to_path_buf()
        };
        let bm = BlockedMatrix::build(&at, tag, params, threads)?;
        let bytes = bm.to_bytes();
        fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        let deg_path = with_suffix(&path, ".deg");
        let mut deg = Vec::new();
        degrees.write_to(&mut deg)?;
        fs::write(&deg_path, deg).with_context(|| format!("writing {}", deg_path.display()))?;
        let bpe = bpe_or_nan(bytes.len(), a.m() as u64);
        println!(
            "{} format={} blocks={} bytes={} bits_per_edge={:.4}",
            path.display(),
            tag,
            threads,
            bytes.len(),
            bpe
        );
    }
    Ok(())
}

fn load_container(path: &Path) -> Result<(BlockedMatrix, usize)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let bm = BlockedMatrix::from_bytes(&bytes).with_context(|| format!("loading {}", path.display()))?;
    Ok((bm, bytes.len()))
}

pub fn cmd_stats(container: &Path) -> Result<()> {
    let (bm, len) = load_container(container)?;
    println!("format {}", bm.tag());
    println!("rows {}", bm.n_rows());
    println!("cols {}", bm.n_cols());
    println!("nnz {}", bm.nnz());
    println!("blocks {}", bm.blocks().len());
    println!("bytes {len}");
    println!("bits_per_edge {:.4}", bpe_or_nan(len, bm.nnz()));
    Ok(())
}

fn write_csv(csv: Option<&Path>, rows: &[MetricsRecord]) -> Result<()> {
    match csv {
        Some(p) => {
            let fresh = fs::metadata(p).map(|m| m.len() == 0).unwrap_or(true);
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .with_context(|| format!("opening {}", p.display()))?;
            if fresh {
                writeln!(f, "{CSV_HEADER}")?;
            }
            for r in rows {
                writeln!(f, "{}", r.csv_row())?;
            }
        }
        None => {
            println!("{CSV_HEADER}");
            for r in rows {
                println!("{}", r.csv_row());
            }
        }
    }
    Ok(())
}

pub fn cmd_pagerank(
    container: &Path,
    degrees: Option<&Path>,
    threads: usize,
    rank: &RankArgs,
    out: Option<&Path>,
    csv: Option<&Path>,
    dataset: Option<String>,
) -> Result<()> {
    check_threads(threads)?;
    let cfg = rank.config()?;
    let deg_path = degrees.map(Path::to_path_buf).unwrap_or_else(|| with_suffix(container, ".deg"));
    if !deg_path.exists() {
        bail!("degree sidecar {} not found (pass --degrees)", deg_path.display());
    }
    let (bm, len) = load_container(container)?;
    let deg = DegreeVector::read_from(
        fs::File::open(&deg_path).with_context(|| format!("opening {}", deg_path.display()))?,
    )
    .with_context(|| format!("reading {}", deg_path.display()))?;
    let (res, m) = metrics::measure(|| pagerank(&bm, &deg, &cfg, threads));
    let res = res?;
    if let Some(p) = out {
        fs::write(p, write_scores(&res.pi)).with_context(|| format!("writing {}", p.display()))?;
    }
    let rec = MetricsRecord {
        dataset: dataset_name(dataset, container),
        format: bm.tag().name().into(),
        threads,
        iterations: res.iters,
        wall_time: m.wall_time,
        peak_rss: m.peak_rss,
        bits_per_edge: bpe_or_nan(len, bm.nnz()),
        energy_uj: m.energy_uj,
    };
    write_csv(csv, &[rec])
}

pub fn cmd_bench(
    input: &Path,
    format: FormatSel,
    threads: &[usize],
    rank: &RankArgs,
    build: &BuildArgs,
    csv: Option<&Path>,
    dataset: Option<String>,
) -> Result<()> {
    if threads.is_empty() {
        bail!("--threads needs at least one value");
    }
    for &t in threads {
        check_threads(t)?;
    }
    let cfg = rank.config()?;
    let params = build.params()?;
    let a = load_matrix(input)?;
    let at = transpose(&a);
    let deg = out_degrees(&a);
    let name = dataset_name(dataset, input);
    let mut rows = Vec::new();
    for tag in format.tags() {
        for &t in threads {
            let bm = BlockedMatrix::build(&at, tag, params, t)?;
            let len = bm.to_bytes().len();
            let (res, m) = metrics::measure(|| pagerank(&bm, &deg, &cfg, t));
            let res = res?;
            rows.push(MetricsRecord {
                dataset: name.clone(),
                format: tag.name().into(),
                threads: t,
                iterations: res.iters,
                wall_time: m.wall_time,
                peak_rss: m.peak_rss,
                bits_per_edge: bpe_or_nan(len, a.m() as u64),
                energy_uj: m.energy_uj,
            });
        }
    }
    write_csv(csv, &rows)
}

/// Reference `A x`: the dense oracle when it fits, CSR otherwise.
fn reference_product(a: &EdgeList, x: &[f64]) -> Vec<f64> {
    if a.n_rows() as u128 * a.n_cols() as u128 <= DENSE_ORACLE_MAX_CELLS {
        dense_oracle(a, x).expect("dimensions checked")
    } else {
        CsrMatrix::build(a).spmv(x, RowRange::full(a.n_rows()))
    }
}

fn close(got: &[f64], want: &[f64], rel: f64) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("length {} vs {}", got.len(), want.len()));
    }
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        if (g - w).abs() > rel * w.abs() {
            return Err(format!("row {i}: {g} vs {w}"));
        }
    }
    Ok(())
}

fn tolerance(tag: FormatTag) -> f64 {
    match tag {
        FormatTag::Csr | FormatTag::K2 => 1e-12,
        _ => 1e-9,
    }
}

fn check_matrix(bm: &BlockedMatrix, a: &EdgeList, x: &[f64], want: &[f64]) -> Result<(), String> {
    let back = bm.to_edge_list().map_err(|e| format!("expand: {e}"))?;
    if &back != a {
        return Err(format!("roundtrip differs ({} vs {} nonzeros)", back.m(), a.m()));
    }
    close(&bm.spmv(x), want, tolerance(bm.tag())).map_err(|e| format!("spmv: {e}"))
}

pub fn cmd_verify(input: &Path, containers: &[PathBuf], threads: usize, build: &BuildArgs, seed: u64) -> Result<bool> {
    check_threads(threads)?;
    let params = build.params()?;
    let a = load_matrix(input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_vector(&mut rng, a.n_cols());
    let want = reference_product(&a, &x);
    let mut ok = true;
    let mut report = |label: String, res: Result<(), String>| match res {
        Ok(()) => println!("PASS {label}"),
        Err(e) => {
            ok = false;
            println!("FAIL {label}: {e}");
        }
    };
    for tag in FormatTag::ALL {
        for blocks in [1, threads] {
            let res = BlockedMatrix::build(&a, tag, params, blocks)
                .map_err(|e| e.to_string())
                .and_then(|bm| {
                    let back = BlockedMatrix::from_bytes(&bm.to_bytes()).map_err(|e| format!("reload: {e}"))?;
                    if back != bm {
                        return Err("reload differs".into());
                    }
                    check_matrix(&back, &a, &x, &want)
                });
            report(format!("{tag} blocks={blocks}"), res);
        }
    }
    if !containers.is_empty() {
        let at = transpose(&a);
        let xt = random_vector(&mut rng, at.n_cols());
        let want_t = reference_product(&at, &xt);
        for path in containers {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            let tag = bytes
                .get(8)
                .and_then(|&b| FormatTag::from_u8(b))
                .map_or_else(|| "unknown".to_string(), |t| t.name().to_string());
            let res = BlockedMatrix::from_bytes(&bytes)
                .map_err(|e| e.to_string())
                .and_then(|bm| check_matrix(&bm, &at, &xt, &want_t));
            report(format!("{tag} container {}", path.display()), res);
        }
    }
    Ok(ok)
}
