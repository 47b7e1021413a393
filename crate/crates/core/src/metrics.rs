//! Time, memory, space and energy instrumentation.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};

/// Overrides the powercap root, mainly for tests.
pub const RAPL_ROOT_ENV: &str = "GSPMV_RAPL_ROOT";
pub const DEFAULT_RAPL_ROOT: &str = "/sys/class/powercap";

pub const CSV_HEADER: &str = "dataset,format,threads,iterations,wall_s,peak_rss_bytes,bits_per_edge,energy_j";

/// `8 * payload_bytes / m`.
pub fn bits_per_edge(payload_bytes: u64, m: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("bits per edge undefined for an empty matrix".into()));
    }
    Ok(8.0 * payload_bytes as f64 / m as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub dataset: String,
    pub format: String,
    pub threads: usize,
    pub iterations: usize,
    pub wall_time: f64,
    pub peak_rss: u64,
    /// NaN for an empty matrix.
    pub bits_per_edge: f64,
    pub energy_uj: Option<u64>,
}

impl MetricsRecord {
    /// One CSV line matching [`CSV_HEADER`], without the newline. Energy is
    /// left empty when no counters were available.
    pub fn csv_row(&self) -> String {
        let energy = self.energy_uj.map(|uj| format!("{}", uj as f64 / 1e6)).unwrap_or_default();
        let bpe = if self.bits_per_edge.is_finite() {
            format!("{:.4}", self.bits_per_edge)
        } else {
            String::new()
        };
        format!(
            "{},{},{},{},{:.6},{},{},{}",
            self.dataset, self.format, self.threads, self.iterations, self.wall_time, self.peak_rss, bpe, energy
        )
    }
}

/// Cumulative counter of one package domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnergyDomain {
    pub name: String,
    pub energy_uj: u64,
    pub max_range_uj: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnergyReading {
    pub domains: Vec<EnergyDomain>,
}

/// Counter delta, corrected for one wraparound.
pub fn counter_delta(before: u64, after: u64, max_range: u64) -> u64 {
    if after >= before {
        after - before
    } else {
        (after + max_range).saturating_sub(before)
    }
}

impl EnergyReading {
    pub fn total_uj(&self) -> u64 {
        self.domains.iter().map(|d| d.energy_uj).sum()
    }

    /// Energy spent between `self` and `later`, summed over domains.
    pub fn delta_uj(&self, later: &EnergyReading) -> Option<u64> {
        if self.domains.len() != later.domains.len() {
            return None;
        }
        self.domains
            .iter()
            .zip(&later.domains)
            .map(|(a, b)| (a.name == b.name).then(|| counter_delta(a.energy_uj, b.energy_uj, a.max_range_uj)))
            .sum()
    }
}

pub fn rapl_root() -> PathBuf {
    std::env::var_os(RAPL_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_RAPL_ROOT))
}

fn read_u64(p: &Path) -> Option<u64> {
    fs::read_to_string(p).ok()?.trim().parse().ok()
}

/// `intel-rapl:<socket>` exactly, no subdomain suffix.
fn is_package_dir(name: &str) -> bool {
    name.strip_prefix("intel-rapl:")
        .is_some_and(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
}

/// Package-level RAPL counters under `root`, or `None` when there are none
/// or any of them is unreadable.
pub fn read_energy_at(root: &Path) -> Option<EnergyReading> {
    let mut dirs: Vec<(u32, PathBuf)> = fs::read_dir(root)
        .ok()?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            if !is_package_dir(&name) {
                return None;
            }
            let idx = name["intel-rapl:".len()..].parse().ok()?;
            Some((idx, e.path()))
        })
        .collect();
    if dirs.is_empty() {
        let nested = root.join("intel-rapl");
        return if nested.is_dir() { read_energy_at(&nested) } else { None };
    }
    dirs.sort();
    let mut domains = Vec::with_capacity(dirs.len());
    for (idx, dir) in dirs {
        let label = fs::read_to_string(dir.join("name")).unwrap_or_default();
        // Platform ("psys") domains overlap the packages.
        if !label.is_empty() && !label.trim().starts_with("package") {
            continue;
        }
        domains.push(EnergyDomain {
            name: format!("intel-rapl:{idx}"),
            energy_uj: read_u64(&dir.join("energy_uj"))?,
            max_range_uj: read_u64(&dir.join("max_energy_range_uj"))?,
        });
    }
    (!domains.is_empty()).then_some(EnergyReading { domains })
}

/// [`read_energy_at`] on [`rapl_root`].
pub fn read_energy() -> Option<EnergyReading> {
    read_energy_at(&rapl_root())
}

/// Peak resident set size of this process in bytes.
pub fn peak_rss_bytes() -> u64 {
    // SAFETY: getrusage only writes into the zeroed struct we pass.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let rc = unsafe { libc::getrusage(libc::RUSAGE_SELF, &mut usage) };
    if rc != 0 {
        return 0;
    }
    let max = usage.ru_maxrss.max(0) as u64;
    if cfg!(target_os = "macos") {
        max
    } else {
        max * 1024
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub wall_time: f64,
    pub peak_rss: u64,
    pub energy_uj: Option<u64>,
}

/// Runs `task` bracketed by a monotonic clock and energy counters from `root`.
pub fn measure_at<T>(root: &Path, task: impl FnOnce() -> T) -> (T, Measurement) {
    let e0 = read_energy_at(root);
    let t0 = Instant::now();
    let out = task();
    let wall_time = t0.elapsed().as_secs_f64();
    let e1 = read_energy_at(root);
    let energy_uj = match (e0, e1) {
        (Some(a), Some(b)) => a.delta_uj(&b),
        _ => None,
    };
    (
        out,
        Measurement {
            wall_time,
            peak_rss: peak_rss_bytes(),
            energy_uj,
        },
    )
}

pub fn measure<T>(task: impl FnOnce() -> T) -> (T, Measurement) {
    measure_at(&rapl_root(), task)
}

/// Command an operator can wrap around a run to collect hardware counters.
pub fn perf_invocation(args: &[String]) -> String {
    format!(
        "perf stat -a -e power/energy-pkg/,cycles,instructions,L1-dcache-load-misses,LLC-load-misses -- {}",
        args.join(" ")
    )
}
