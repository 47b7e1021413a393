//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Every reference value here is computed independently of the library:
//! dense products, a dense PageRank iteration, and raw byte counts.

use std::fs;
use std::io::Write as _;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use gspmv_core::grammar::{repair, vs_encode, PackedGrammar, Variant};
use gspmv_core::matio::{out_degrees, parse_input, transpose};
use gspmv_core::pagerank::pagerank_observed;
use gspmv_core::synth::{clustered_edges, random_edges};
use gspmv_core::{pagerank, BlockedMatrix, BuildParams, EdgeList, FormatTag, PageRankConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;
type Criterion = (&'static str, Box<dyn FnOnce() -> Outcome>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dense(a: &EdgeList) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; a.n_cols()]; a.n_rows()];
    for &(r, c) in a.edges() {
        d[r as usize][c as usize] = 1.0;
    }
    d
}

fn dense_product(a: &EdgeList, x: &[f64]) -> Vec<f64> {
    dense(a)
        .iter()
        .map(|row| row.iter().zip(x).map(|(v, xi)| v * xi).sum())
        .collect()
}

fn positive_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.25..4.0)).collect()
}

fn rel_check(got: &[f64], want: &[f64], rel: f64) -> Result<(), String> {
    ensure(got.len() == want.len(), || format!("length {} vs {}", got.len(), want.len()))?;
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        ensure((g - w).abs() <= rel * w.abs(), || format!("component {i}: {g} vs {w}"))?;
    }
    Ok(())
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_corpus() -> Vec<EdgeList> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..200)
        .map(|i| {
            let r = rng.random_range(1..=256);
            let c = rng.random_range(1..=256);
            let d = rng.random_range(0.0..=0.1);
            if i % 4 == 3 {
                let templates = rng.random_range(1..8);
                clustered_edges(&mut rng, r, c, templates, d)
            } else {
                random_edges(&mut rng, r, c, d)
            }
        })
        .collect()
}

fn full(r: usize, c: usize) -> EdgeList {
    let edges = (0..r as u32).flat_map(|i| (0..c as u32).map(move |j| (i, j))).collect();
    EdgeList::from_sorted(r, c, edges).unwrap()
}

fn edge_cases() -> Vec<(&'static str, EdgeList)> {
    vec![
        ("empty 0x0", EdgeList::empty(0, 0)),
        ("empty 9x5", EdgeList::empty(9, 5)),
        ("identity 1", EdgeList::identity(1)),
        ("identity 64", EdgeList::identity(64)),
        ("identity 100", EdgeList::identity(100)),
        ("full 16x16", full(16, 16)),
        ("full 7x13", full(7, 13)),
        ("single row", full(1, 200)),
        ("single column", full(200, 1)),
        ("sparse single row", EdgeList::from_edges(1, 300, vec![(0, 0), (0, 17), (0, 299)]).unwrap()),
        ("sparse single column", EdgeList::from_edges(300, 1, vec![(3, 0), (150, 0)]).unwrap()),
    ]
}

fn corpus() -> Vec<(String, EdgeList)> {
    let mut out: Vec<_> = random_corpus()
        .into_iter()
        .enumerate()
        .map(|(i, a)| (format!("random #{i}"), a))
        .collect();
    out.extend(edge_cases().into_iter().map(|(n, a)| (n.to_string(), a)));
    out
}

fn build(a: &EdgeList, tag: FormatTag, blocks: usize) -> Result<BlockedMatrix, String> {
    BlockedMatrix::build(a, tag, BuildParams::default(), blocks).map_err(|e| format!("{tag}: build: {e}"))
}

fn oracle_equivalence() -> Check {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for (i, a) in random_corpus().iter().enumerate() {
        let x = positive_vector(&mut rng, a.n_cols());
        let want = dense_product(a, &x);
        for tag in FormatTag::ALL {
            let rel = match tag {
                FormatTag::Csr | FormatTag::K2 => 1e-12,
                _ => 1e-9,
            };
            let got = build(a, tag, 1)?.spmv(&x);
            rel_check(&got, &want, rel).map_err(|e| format!("matrix {i}, {tag}: {e}"))?;
            checked += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{checked} products in {secs:.2}s"))
}

fn roundtrip() -> Check {
    let mut checked = 0;
    for (name, a) in corpus() {
        for tag in FormatTag::ALL {
            let bm = build(&a, tag, 1)?;
            let back = BlockedMatrix::from_bytes(&bm.to_bytes())
                .map_err(|e| format!("{name}, {tag}: reload: {e}"))?
                .to_edge_list()
                .map_err(|e| format!("{name}, {tag}: expand: {e}"))?;
            ensure(back == a, || format!("{name}, {tag}: edges differ"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} exact roundtrips"))
}

fn grammar_well_formed() -> Check {
    for (name, a) in corpus() {
        let s = vs_encode(&a);
        let g = repair(&s);
        let e = g.expand().map_err(|e| format!("{name}: {e}"))?;
        ensure(e == s, || format!("{name}: expansion differs"))?;
        let first = g.first_nonterminal();
        for (i, rule) in g.rules().iter().enumerate() {
            for &sym in rule {
                let ok = (sym as u64) < first + i as u64 && sym != 0;
                ensure(ok, || format!("{name}: rule {i} uses symbol {sym}"))?;
            }
        }
    }
    let edges = (0..8u32).flat_map(|r| (0..16u32).map(move |c| (r, c))).collect();
    let a = EdgeList::from_edges(8, 16, edges).unwrap();
    let s = vs_encode(&a);
    let g = repair(&s);
    let size = 2 * g.rules().len() + g.top().len();
    ensure(size < s.len(), || format!("8x16 ones: 2|R|+|C| = {size}, |S| = {}", s.len()))?;
    Ok(format!("8x16 ones: 2|R|+|C| = {size} < |S| = {}", s.len()))
}

/// Power iteration written directly from the definition on a dense matrix.
fn dense_pagerank(n: usize, edges: &[(u32, u32)], alpha: f64, iters: usize) -> Vec<f64> {
    let mut adj = vec![vec![0.0; n]; n];
    let mut deg = vec![0.0; n];
    for &(u, v) in edges {
        if adj[u as usize][v as usize] == 0.0 {
            adj[u as usize][v as usize] = 1.0;
            deg[u as usize] += 1.0;
        }
    }
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..iters {
        let mut next = vec![0.0; n];
        for (i, slot) in next.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..n {
                if deg[j] == 0.0 {
                    s += pi[j] / n as f64;
                } else {
                    s += adj[j][i] * pi[j] / deg[j];
                }
            }
            *slot = alpha / n as f64 + (1.0 - alpha) * s;
        }
        pi = next;
    }
    pi
}

fn pagerank_graphs() -> Vec<(String, EdgeList)> {
    let mut out = vec![(
        "chain".to_string(),
        EdgeList::from_edges(4, 4, vec![(0, 1), (1, 2), (2, 3)]).unwrap(),
    )];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..10 {
        let n = rng.random_range(2..=128);
        let d = rng.random_range(0.01..0.15);
        let a = random_edges(&mut rng, n, n, d);
        let dangling: Vec<bool> = (0..n).map(|_| rng.random_bool(0.2)).collect();
        let mut edges: Vec<_> = a.edges().iter().copied().filter(|&(u, _)| !dangling[u as usize]).collect();
        if !dangling.iter().any(|&d| d) {
            edges.retain(|&(u, _)| u != 0);
        }
        out.push((format!("random #{i}"), EdgeList::from_edges(n, n, edges).unwrap()));
    }
    out
}

fn run_pagerank(a: &EdgeList, tag: FormatTag, blocks: usize, threads: usize, cfg: &PageRankConfig) -> Result<Vec<f64>, String> {
    let at = build(&transpose(a), tag, blocks)?;
    pagerank(&at, &out_degrees(a), cfg, threads)
        .map(|r| r.pi)
        .map_err(|e| format!("{tag}: {e}"))
}

fn pagerank_correctness() -> Check {
    let cfg = PageRankConfig {
        alpha: 0.15,
        max_iters: 100,
        tol: None,
    };
    let mut worst = 0.0f64;
    for (name, a) in pagerank_graphs() {
        let dangling = (0..a.n_rows()).filter(|&r| a.row(r).next().is_none()).count();
        ensure(dangling > 0, || format!("{name}: no dangling vertex"))?;
        let want = dense_pagerank(a.n_rows(), a.edges(), 0.15, 100);
        let mut all = Vec::new();
        for tag in FormatTag::ALL {
            let pi = run_pagerank(&a, tag, 3, 2, &cfg)?;
            let d = linf(&pi, &want);
            worst = worst.max(d);
            ensure(d <= 1e-10, || format!("{name}, {tag}: L-inf {d:e} from dense"))?;
            all.push((tag, pi));
        }
        for (i, (ta, pa)) in all.iter().enumerate() {
            for (tb, pb) in &all[i + 1..] {
                let d = linf(pa, pb);
                ensure(d <= 1e-9, || format!("{name}: {ta} vs {tb} L-inf {d:e}"))?;
            }
        }
    }
    Ok(format!("11 graphs x 5 formats, worst L-inf {worst:.1e}"))
}

fn mass_conservation() -> Check {
    let cfg = PageRankConfig::default();
    let graphs = pagerank_graphs();
    let mut worst = 0.0f64;
    let mut runs = 0;
    for (name, a) in &graphs {
        let deg = out_degrees(a);
        for tag in FormatTag::ALL {
            for threads in [1, 2, 4, 8] {
                let at = build(&transpose(a), tag, threads)?;
                let mut bad = None;
                let res = pagerank_observed(&at, &deg, &cfg, threads, |it, pi| {
                    let s: f64 = pi.iter().sum();
                    worst = worst.max((s - 1.0).abs());
                    if !(1.0 - 1e-9..=1.0 + 1e-9).contains(&s) && bad.is_none() {
                        bad = Some((it, s));
                    }
                })
                .map_err(|e| format!("{name}, {tag}: {e}"))?;
                if let Some((it, s)) = bad {
                    return Err(format!("{name}, {tag}, {threads} threads: sum {s} after iteration {it}"));
                }
                ensure(res.iters == 100, || format!("{name}, {tag}: {} iterations", res.iters))?;
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs x 100 iterations, worst |sum-1| {worst:.1e}"))
}

fn determinism() -> Check {
    let cfg = PageRankConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_edges(&mut rng, 300, 300, 0.03);
    let mut graphs = pagerank_graphs();
    graphs.push(("random 300".into(), a));
    for (name, a) in &graphs {
        for tag in FormatTag::ALL {
            let at = build(&transpose(a), tag, 8)?;
            let deg = out_degrees(a);
            let base = pagerank(&at, &deg, &cfg, 1).map_err(|e| e.to_string())?.pi;
            for threads in [2, 4, 8] {
                let pi = pagerank(&at, &deg, &cfg, threads).map_err(|e| e.to_string())?.pi;
                let same = pi.iter().zip(&base).all(|(x, y)| x.to_bits() == y.to_bits());
                ensure(same, || format!("{name}, {tag}: {threads} threads differ from 1"))?;
            }
        }
    }
    Ok(format!("{} graphs x 5 formats, 8 blocks, threads 1/2/4/8", graphs.len()))
}

fn packing_order() -> Check {
    let mut checked = 0;
    for (name, a) in corpus() {
        let g = repair(&vs_encode(&a));
        let n_max = g.rules().iter().flatten().chain(g.top()).copied().max().unwrap_or(0);
        let re32 = PackedGrammar::pack(&g, Variant::Re32);
        let reiv = PackedGrammar::pack(&g, Variant::Reiv);
        let (mut b32, mut biv) = (Vec::new(), Vec::new());
        re32.write_payload(&mut b32);
        reiv.write_payload(&mut biv);
        ensure(biv.len() <= b32.len(), || format!("{name}: reiv {} > re32 {} bytes", biv.len(), b32.len()))?;
        let fb32 = build(&a, FormatTag::Gr32, 1)?.to_bytes().len();
        let fbiv = build(&a, FormatTag::GrIv, 1)?.to_bytes().len();
        ensure(fbiv <= fb32, || format!("{name}: reiv file {fbiv} > re32 file {fb32}"))?;
        let want = if n_max == 0 { 1 } else { 1 + n_max.ilog2() as u8 };
        let got = reiv.bit_width();
        ensure(got == Some(want), || format!("{name}: width {got:?}, N_max {n_max}"))?;
        checked += 1;
    }
    Ok(format!("{checked} matrices"))
}

fn mkfifo(path: &Path) {
    let c = std::ffi::CString::new(path.as_os_str().as_encoded_bytes()).unwrap();
    // SAFETY: c is a valid NUL-terminated path.
    let rc = unsafe { libc::mkfifo(c.as_ptr(), 0o600) };
    assert_eq!(rc, 0, "mkfifo {}", path.display());
}

/// Serves `values` through the FIFO at `path`, one per reader open.
fn serve_counter(path: PathBuf, values: Vec<u64>, served: Arc<AtomicUsize>) {
    std::thread::spawn(move || {
        for v in values {
            let mut f = fs::OpenOptions::new().write(true).open(&path).unwrap();
            served.fetch_add(1, Ordering::SeqCst);
            writeln!(f, "{v}").unwrap();
            drop(f);
            // Let the reader hit EOF before the next open, or it would see
            // two values in one read.
            std::thread::sleep(Duration::from_millis(50));
        }
    });
}

fn bench_csv(root: &Path, input: &Path) -> Result<Vec<Vec<String>>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gspmv"))
        .args(["bench", "--format", "csr", "--threads", "1,2", "--iters", "5", "--dataset", "fixture"])
        .arg(input)
        .env("GSPMV_RAPL_ROOT", root)
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    ensure(out.status.success(), || {
        format!("bench failed: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    let mut lines = stdout.lines();
    let header = lines.next().unwrap_or_default();
    ensure(
        header == "dataset,format,threads,iterations,wall_s,peak_rss_bytes,bits_per_edge,energy_j",
        || format!("header {header:?}"),
    )?;
    Ok(lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

fn energy_plumbing() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = tmp.path().join("g.txt");
    fs::write(&input, "0 1\n1 2\n2 0\n2 3\n").unwrap();

    let root = tmp.path().join("powercap");
    let mut served = Vec::new();
    // Two packages, one wrapping during the second run; a platform domain
    // and a core subdomain that must both be ignored.
    let sockets: [(&str, u64, Vec<u64>); 2] = [
        ("intel-rapl:0", 1 << 40, vec![1000, 4000, 4000, 4500]),
        ("intel-rapl:1", 100_000, vec![99_000, 99_990, 99_990, 5]),
    ];
    for (dir, max, values) in sockets {
        let d = root.join(dir);
        fs::create_dir_all(&d).unwrap();
        fs::write(d.join("name"), "package-0\n").unwrap();
        fs::write(d.join("max_energy_range_uj"), format!("{max}\n")).unwrap();
        mkfifo(&d.join("energy_uj"));
        let n = values.len();
        let counter = Arc::new(AtomicUsize::new(0));
        serve_counter(d.join("energy_uj"), values, counter.clone());
        served.push((counter, n));
    }
    for (dir, name) in [("intel-rapl:2", "psys"), ("intel-rapl:0:0", "core")] {
        let d = root.join(dir);
        fs::create_dir_all(&d).unwrap();
        fs::write(d.join("name"), format!("{name}\n")).unwrap();
        fs::write(d.join("energy_uj"), "123456789\n").unwrap();
        fs::write(d.join("max_energy_range_uj"), "999999999\n").unwrap();
    }

    let rows = bench_csv(&root, &input)?;
    for (counter, n) in &served {
        let got = counter.load(Ordering::SeqCst);
        ensure(got == *n, || format!("{got} of {n} counter reads"))?;
    }
    ensure(rows.len() == 2, || format!("{} rows", rows.len()))?;
    // 3000 + 990, then 500 + (5 + 100000 - 99990).
    let expected = [("1", 3990u64, "0.00399"), ("2", 515, "0.000515")];
    for (row, (threads, uj, text)) in rows.iter().zip(expected) {
        ensure(row.len() == 8, || format!("row {row:?}"))?;
        ensure(row[2] == threads, || format!("threads {}", row[2]))?;
        let j: f64 = row[7].parse().map_err(|_| format!("energy {:?}", row[7]))?;
        let want = uj as f64 * 1e-6;
        ensure((j - want).abs() <= 1e-15 && row[7] == text, || {
            format!("threads {threads}: energy {} J, expected {text} J", row[7])
        })?;
    }

    let empty = tmp.path().join("no-counters");
    fs::create_dir_all(&empty).unwrap();
    let missing = tmp.path().join("does-not-exist");
    for root in [&empty, &missing] {
        let rows = bench_csv(root, &input)?;
        ensure(rows.len() == 2, || format!("{} rows", rows.len()))?;
        for row in &rows {
            ensure(row.len() == 8 && row[7].is_empty(), || format!("no counters: row {row:?}"))?;
        }
    }
    Ok("0.00399 J and 0.000515 J, wrap included; empty without counters".into())
}

fn eu2005_path() -> Option<PathBuf> {
    let mut candidates: Vec<PathBuf> = std::env::var_os("GSPMV_EU2005").map(PathBuf::from).into_iter().collect();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for rel in ["data/eu-2005.mtx", "data/eu-2005/eu-2005.mtx"] {
        candidates.push(root.join(rel));
    }
    candidates.into_iter().find(|p| p.is_file())
}

fn dataset_band() -> Outcome {
    let Some(path) = eu2005_path() else {
        return Outcome::Skip("eu-2005 not found (set GSPMV_EU2005 to its .mtx)".into());
    };
    let res = (|| -> Check {
        let bytes = fs::read(&path).map_err(|e| e.to_string())?;
        let at = transpose(&parse_input(&bytes).map_err(|e| e.to_string())?);
        let m = at.m() as f64;
        let bpe = |tag| build(&at, tag, 1).map(|b| 8.0 * b.to_bytes().len() as f64 / m);
        let k2 = bpe(FormatTag::K2)?;
        let re32 = bpe(FormatTag::Gr32)?;
        ensure((2.0..=8.0).contains(&k2), || format!("k2 {k2:.3} bits/edge"))?;
        ensure((5.0..=20.0).contains(&re32), || format!("re32 {re32:.3} bits/edge"))?;
        Ok(format!("k2 {k2:.3}, re32 {re32:.3} bits/edge"))
    })();
    match res {
        Ok(s) => Outcome::Pass(s),
        Err(e) => Outcome::Fail(e),
    }
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Outcome::Fail(format!("panic: {msg}"))
    });
    let secs = t0.elapsed().as_secs_f64();
    let (label, detail, ok) = match outcome {
        Outcome::Pass(d) => ("PASS", d, true),
        Outcome::Fail(d) => ("FAIL", d, false),
        Outcome::Skip(d) => ("SKIP", d, true),
    };
    println!("{label} {name}: {detail} [{secs:.2}s]");
    ok
}

fn checked(f: fn() -> Check) -> impl FnOnce() -> Outcome {
    move || match f() {
        Ok(s) => Outcome::Pass(s),
        Err(e) => Outcome::Fail(e),
    }
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 9] = [
        ("oracle_equivalence", Box::new(checked(oracle_equivalence))),
        ("roundtrip", Box::new(checked(roundtrip))),
        ("grammar_well_formed", Box::new(checked(grammar_well_formed))),
        ("pagerank_correctness", Box::new(checked(pagerank_correctness))),
        ("mass_conservation", Box::new(checked(mass_conservation))),
        ("determinism", Box::new(checked(determinism))),
        ("packing_order", Box::new(checked(packing_order))),
        ("energy_plumbing", Box::new(checked(energy_plumbing))),
        ("dataset_band", Box::new(dataset_band)),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        if !run(name, f) {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
