use std::io::{Read, Write};
use std::time::{Duration, Instant};

use aro_core::adjustable::solve_adjustable_with;
use aro_core::affine::solve_optimal_affine_with;
use aro_core::fastaffine::solve_fast_affine_with;
use aro_core::instances::{gen_lot_sizing, generate, Family, GenSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::record::{lp_options, secs3, sig9};

/// One `(family, m)` cell. Means run over the seeds that solved under both
/// methods; the rest are listed in `error` as `seed:code`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub family: String,
    pub m: usize,
    #[serde(rename = "T_aff_s")]
    pub t_aff_s: Option<f64>,
    #[serde(rename = "T_alg_s")]
    pub t_alg_s: Option<f64>,
    pub ratio_mean: Option<f64>,
    pub ratio_max: Option<f64>,
    pub seeds: usize,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub families: Vec<Family>,
    pub ms: Vec<usize>,
    pub seeds: usize,
    /// Seed `index` of a cell is `base_seed + index`.
    pub base_seed: u64,
    pub time_cap: Option<Duration>,
}

struct SeedRun {
    t_aff: f64,
    t_alg: f64,
    ratio: f64,
}

fn run_seed(family: Family, m: usize, seed: u64, cap: Option<Duration>) -> aro_core::Result<SeedRun> {
    let (inst, u) = generate(&GenSpec::new(family, m, seed))?;
    let start = Instant::now();
    let aff = solve_optimal_affine_with(&inst, &u, &lp_options(cap))?;
    let t_aff = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let alg = solve_fast_affine_with(&inst, &u, &lp_options(cap))?;
    let t_alg = start.elapsed().as_secs_f64();
    Ok(SeedRun { t_aff, t_alg, ratio: alg.objective / aff.objective })
}

pub fn bench_cell(family: Family, m: usize, cfg: &BenchConfig) -> BenchRow {
    let mut runs = Vec::new();
    let mut errors = Vec::new();
    for k in 0..cfg.seeds {
        let seed = cfg.base_seed + k as u64;
        match run_seed(family, m, seed, cfg.time_cap) {
            Ok(r) => runs.push(r),
            Err(e) => {
                log::warn!("{family} m={m} seed={seed}: {e}");
                errors.push(format!("{seed}:{}", e.code()));
            }
        }
    }
    let n = runs.len();
    let mean = |f: fn(&SeedRun) -> f64| (n > 0).then(|| runs.iter().map(f).sum::<f64>() / n as f64);
    let t_aff_s = mean(|r| r.t_aff).map(|t| secs3(Duration::from_secs_f64(t)));
    let t_alg_s = mean(|r| r.t_alg).map(|t| secs3(Duration::from_secs_f64(t)));
    let ratio_mean = mean(|r| r.ratio).map(sig9);
    let ratio_max = runs.iter().map(|r| r.ratio).reduce(f64::max).map(sig9);
    log::info!("{family} m={m}: {n}/{} seeds, ratio_mean {ratio_mean:?}", cfg.seeds);
    BenchRow { family: family.to_string(), m, t_aff_s, t_alg_s, ratio_mean, ratio_max, seeds: n, error: errors.join(";") }
}

/// Cells run on the current rayon pool; rows come back in `(family, m)` order.
pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchRow> {
    let cells: Vec<(Family, usize)> = cfg.families.iter().flat_map(|&f| cfg.ms.iter().map(move |&m| (f, m))).collect();
    cells.par_iter().map(|&(f, m)| bench_cell(f, m, cfg)).collect()
}

pub fn write_csv<T: Serialize>(rows: &[T], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(input: impl Read) -> csv::Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Adjustable versus affine optimum on the lot-sizing family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub m: usize,
    pub z_ar: Option<f64>,
    pub z_aff: Option<f64>,
    /// `m/2 − 1`.
    pub z_aff_expected: f64,
    #[serde(rename = "T_ar_s")]
    pub t_ar_s: Option<f64>,
    #[serde(rename = "T_aff_s")]
    pub t_aff_s: Option<f64>,
    pub error: String,
}

pub fn gap_row(m: usize, cap: Option<Duration>) -> GapRow {
    let mut row =
        GapRow { m, z_ar: None, z_aff: None, z_aff_expected: m as f64 / 2.0 - 1.0, t_ar_s: None, t_aff_s: None, error: String::new() };
    let (inst, u) = match gen_lot_sizing(m) {
        Ok(p) => p,
        Err(e) => {
            row.error = e.code().into();
            return row;
        }
    };
    let mut errors = Vec::new();
    let start = Instant::now();
    match solve_adjustable_with(&inst, &u, &lp_options(cap)) {
        Ok(s) => {
            row.z_ar = Some(sig9(s.objective));
            row.t_ar_s = Some(secs3(start.elapsed()));
        }
        Err(e) => errors.push(format!("adjustable:{}", e.code())),
    }
    let start = Instant::now();
    match solve_optimal_affine_with(&inst, &u, &lp_options(cap)) {
        Ok(s) => {
            row.z_aff = Some(sig9(s.objective));
            row.t_aff_s = Some(secs3(start.elapsed()));
        }
        Err(e) => errors.push(format!("affine:{}", e.code())),
    }
    row.error = errors.join(";");
    row
}

pub fn run_gap_demo(ms: &[usize], cap: Option<Duration>) -> Vec<GapRow> {
    ms.par_iter().map(|&m| gap_row(m, cap)).collect()
}
