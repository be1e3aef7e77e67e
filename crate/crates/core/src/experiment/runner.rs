use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::descent::{complexity, enumerate_landscape, sample_with_engine, EnumerationOptions};
use crate::effective::{lambda_grid, low_manifold, select_lambda, CouplingTable};
use crate::embedding::{density_peak_cluster, mean_intercluster_distance, tsne};
use crate::quantum::FidelityEngine;
use crate::seeds::derive_seed;
use crate::stats::{
    dos, excitations, hamming_matrix, order_parameters, pairwise_histogram, DosOrigin, Histogram,
};

use super::emit::emit_all;
use super::{ser, ExperimentConfig, ExperimentError};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep grid points whose directory already holds a finished cell.
    pub resume: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Reused,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: String,
    pub duration: f64,
    pub bangs: usize,
    /// Flip order for descent cells; absent for landscape cells.
    pub k: Option<usize>,
    pub status: CellStatus,
    pub error: Option<String>,
    pub seeds: BTreeMap<String, u64>,
    pub fidelity_evaluations: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub master_seed: u64,
    pub config: String,
    pub wall_seconds: f64,
    pub cells: Vec<CellRecord>,
    pub files: Vec<FileEntry>,
}

enum CellKind {
    /// Needs the full cost table: DOS, couplings, fits.
    Landscape,
    /// SD_k sampling and everything derived from it.
    Descent(usize),
}

struct Cell {
    id: String,
    duration: f64,
    bangs: usize,
    kind: CellKind,
}

fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let a = &cfg.analysis;
    let landscape = a.dos.is_some() || a.couplings || a.fits.is_some();
    let descent = a.needs_samples() || a.complexity.is_some();
    let mut out = Vec::new();
    for &n in &cfg.sweep.bangs {
        for t in cfg.sweep.durations.values() {
            if landscape {
                out.push(Cell {
                    id: format!("landscape_N{n}_T{t:.4}"),
                    duration: t,
                    bangs: n,
                    kind: CellKind::Landscape,
                });
            }
            if descent {
                for &k in &cfg.sweep.flips {
                    out.push(Cell {
                        id: format!("descent_N{n}_T{t:.4}_k{k}"),
                        duration: t,
                        bangs: n,
                        kind: CellKind::Descent(k),
                    });
                }
            }
        }
    }
    out
}

/// Runs every grid point and writes the artifact directory.
///
/// Each grid point is built in a scratch directory and renamed into
/// `cells/` when complete. Failures are recorded per point; the run fails
/// only if every point fails.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    options: &RunOptions,
) -> Result<Manifest, ExperimentError> {
    cfg.validate()?;
    let start = Instant::now();
    let root = &cfg.output;
    fs::create_dir_all(root.join("cells"))?;
    let config_text = cfg.to_toml()?;
    write_atomic(&root.join("config.toml"), config_text.as_bytes())?;

    let grid = cells(cfg);
    let work =
        || -> Vec<CellRecord> { grid.par_iter().map(|c| run_cell(cfg, c, options)).collect() };
    let records = if cfg.limits.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.limits.workers)
            .build()
            .map_err(ser)?
            .install(work)
    } else {
        work()
    };

    let failed = records
        .iter()
        .filter(|r| r.status == CellStatus::Failed)
        .count();
    for r in records.iter().filter(|r| r.status == CellStatus::Failed) {
        log::error!(
            "grid point {} failed: {}",
            r.id,
            r.error.as_deref().unwrap_or("")
        );
    }
    if !records.is_empty() && failed < records.len() {
        emit_all(root)?;
    }

    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: cfg.seed,
        config: config_text,
        wall_seconds: start.elapsed().as_secs_f64(),
        cells: records,
        files: Vec::new(),
    };
    manifest.files = list_files(root)?;
    let text = serde_json::to_string_pretty(&manifest).map_err(ser)?;
    write_atomic(&root.join("manifest.json"), text.as_bytes())?;

    if !manifest.cells.is_empty() && failed == manifest.cells.len() {
        return Err(ExperimentError::AllCellsFailed(failed));
    }
    Ok(manifest)
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell, options: &RunOptions) -> CellRecord {
    let start = Instant::now();
    let final_dir = cfg.output.join("cells").join(&cell.id);
    let mut record = CellRecord {
        id: cell.id.clone(),
        duration: cell.duration,
        bangs: cell.bangs,
        k: match cell.kind {
            CellKind::Landscape => None,
            CellKind::Descent(k) => Some(k),
        },
        status: CellStatus::Ok,
        error: None,
        seeds: BTreeMap::new(),
        fidelity_evaluations: 0,
        wall_seconds: 0.0,
    };
    if options.resume {
        if let Ok(text) = fs::read_to_string(final_dir.join("cell.json")) {
            if let Ok(mut old) = serde_json::from_str::<CellRecord>(&text) {
                old.status = CellStatus::Reused;
                return old;
            }
        }
    }

    let scratch = cfg
        .output
        .join("cells")
        .join(format!(".partial-{}", cell.id));
    let outcome = (|| -> Result<(), ExperimentError> {
        if scratch.exists() {
            fs::remove_dir_all(&scratch)?;
        }
        fs::create_dir_all(&scratch)?;
        match cell.kind {
            CellKind::Landscape => landscape_cell(cfg, cell, &scratch, &mut record),
            CellKind::Descent(k) => descent_cell(cfg, cell, k, &scratch, &mut record),
        }?;
        record.wall_seconds = start.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&record).map_err(ser)?;
        fs::write(scratch.join("cell.json"), text)?;
        if final_dir.exists() {
            fs::remove_dir_all(&final_dir)?;
        }
        fs::rename(&scratch, &final_dir)?;
        Ok(())
    })();
    if let Err(e) = outcome {
        let _ = fs::remove_dir_all(&scratch);
        record.status = CellStatus::Failed;
        record.error = Some(e.to_string());
        record.wall_seconds = start.elapsed().as_secs_f64();
    }
    record
}

fn seed(cfg: &ExperimentConfig, record: &mut CellRecord, purpose: &str, index: u64) -> u64 {
    let label = format!("{purpose}/{}", record.id);
    let s = derive_seed(cfg.seed, &label, index);
    record.seeds.insert(purpose.to_string(), s);
    s
}

fn landscape_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    dir: &Path,
    record: &mut CellRecord,
) -> Result<(), ExperimentError> {
    let problem = cfg.problem.problem(cell.duration, cell.bangs);
    let engine = FidelityEngine::new(&problem).map_err(ser)?;
    let table = enumerate_landscape(
        &engine,
        EnumerationOptions {
            cap: cfg.limits.enumeration_cap,
            keep_table: true,
        },
    )
    .map_err(ser)?;
    record.fidelity_evaluations += 1u64 << cell.bangs;
    let costs = table.costs().expect("table kept");
    let a = &cfg.analysis;

    let summary = serde_json::json!({
        "best_protocol": table.best_protocol.to_string(),
        "best_fidelity": table.best_fidelity,
        "best_cost": table.best_cost,
        "protocols": costs.len(),
    });
    write_json(&dir.join("landscape.json"), &summary)?;

    if let Some(opts) = &a.dos {
        let d = dos(&costs, opts.bins, DosOrigin::Enumeration).map_err(ser)?;
        write_histogram(&dir.join("dos.csv"), &d.histogram)?;
        let ex =
            excitations(&engine, &table.best_protocol, &opts.excitation_orders).map_err(ser)?;
        record.fidelity_evaluations += ex.len() as u64;
        let mut w = csv::Writer::from_path(dir.join("excitations.csv")).map_err(ser)?;
        w.write_record(["order", "flips", "magnetization", "cost", "delta_cost"])
            .map_err(ser)?;
        for e in &ex {
            let flips: Vec<String> = e.flips.iter().map(|f| f.to_string()).collect();
            w.write_record([
                e.flips.len().to_string(),
                flips.join(" "),
                e.magnetization.to_string(),
                e.cost.to_string(),
                e.delta_cost.to_string(),
            ])
            .map_err(ser)?;
        }
        w.flush()?;
    }

    if a.couplings || a.fits.is_some() {
        let tab = CouplingTable::from_costs(&costs).map_err(ser)?;
        if a.couplings {
            let orders: Vec<usize> = (0..=cell.bangs.min(3)).collect();
            let errors: Vec<(usize, f64)> = orders
                .iter()
                .map(|&o| Ok((o, tab.truncation_error(&costs, &orders[..=o])?)))
                .collect::<Result<_, crate::effective::EffectiveError>>()
                .map_err(ser)?;
            let frustration: Vec<(Vec<usize>, Option<f64>)> = [vec![1], vec![1, 2], vec![1, 2, 3]]
                .into_iter()
                .filter(|o| o.iter().all(|&x| x <= cell.bangs))
                .map(|o| {
                    let phi = tab.frustration(&o).ok();
                    (o, phi)
                })
                .collect();
            let out = serde_json::json!({
                "c0": tab.c0,
                "g": tab.g,
                "j": tab.j,
                "k": tab.k,
                "truncation_error": errors,
                "frustration": frustration,
                "three_body_locality": tab.three_body_locality(),
            });
            write_json(&dir.join("couplings.json"), &out)?;
        }
        if let Some(f) = &a.fits {
            let records = low_manifold(&costs, f.records.min(costs.len())).map_err(ser)?;
            let split = seed(cfg, record, "split", 0);
            let grid = lambda_grid(f.lambda_points);
            let fits = f
                .regularizers
                .iter()
                .map(|&r| select_lambda(&records, &f.orders, r, &grid, split))
                .collect::<Result<Vec<_>, _>>()
                .map_err(ser)?;
            write_json(&dir.join("fits.json"), &fits)?;
        }
    }
    Ok(())
}

fn descent_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    k: usize,
    dir: &Path,
    record: &mut CellRecord,
) -> Result<(), ExperimentError> {
    let problem = cfg.problem.problem(cell.duration, cell.bangs);
    let engine = FidelityEngine::new(&problem).map_err(ser)?;
    let a = &cfg.analysis;

    if a.needs_samples() {
        let s = seed(cfg, record, "sample", 0);
        let set = sample_with_engine(&engine, k, cfg.sweep.samples, s).map_err(ser)?;
        record.fidelity_evaluations += set.total_n_eval();
        fs::write(dir.join("samples.json"), set.to_json().map_err(ser)?)?;
        set.write_csv(fs::File::create(dir.join("samples.csv"))?)
            .map_err(ser)?;

        if a.order_parameters {
            let op = order_parameters(&set, a.fidelity_filter).map_err(ser)?;
            let best = set.best().map(|r| r.fidelity).unwrap_or(0.0);
            let out = serde_json::json!({
                "q": op.q,
                "f": op.f,
                "m": op.m,
                "m_star": op.m_star,
                "fidelity_filter": op.fidelity_filter,
                "best_fidelity": best,
                "mean_n_eval": set.mean_n_eval(),
            });
            write_json(&dir.join("order.json"), &out)?;
        }
        if a.hamming.is_some() || a.embedding.is_some() {
            let hm = hamming_matrix(&set.protocols()).map_err(ser)?;
            if let Some(h) = &a.hamming {
                if set.m() >= 2 {
                    write_histogram(
                        &dir.join("hamming.csv"),
                        &pairwise_histogram(&hm, h.bins).map_err(ser)?,
                    )?;
                }
            }
            if let Some(e) = &a.embedding {
                let mut tc = e.tsne.clone();
                tc.seed = seed(cfg, record, "tsne", e.tsne.seed);
                let emb = tsne(&hm, &tc).map_err(ser)?;
                let clusters = density_peak_cluster(&emb.distances(), &e.cluster).map_err(ser)?;
                let between = mean_intercluster_distance(&clusters.labels, &hm).map_err(ser)?;
                let mut w = csv::Writer::from_path(dir.join("embedding.csv")).map_err(ser)?;
                w.write_record(["index", "x", "y", "label", "rho", "delta", "fidelity"])
                    .map_err(ser)?;
                for (i, c) in emb.coordinates.iter().enumerate() {
                    w.write_record([
                        i.to_string(),
                        c[0].to_string(),
                        c[1].to_string(),
                        clusters.labels[i].to_string(),
                        clusters.rho[i].to_string(),
                        clusters.delta[i].to_string(),
                        set.records[i].fidelity.to_string(),
                    ])
                    .map_err(ser)?;
                }
                w.flush()?;
                let out = serde_json::json!({
                    "config": tc,
                    "kl": emb.kl,
                    "kl_trace": emb.kl_trace,
                    "rejected_steps": emb.rejected_steps,
                    "collapsed": emb.collapsed,
                    "cutoff": clusters.cutoff,
                    "centers": clusters.centers,
                    "cluster_distances": between,
                });
                write_json(&dir.join("embedding.json"), &out)?;
            }
        }
    }

    if let Some(c) = &a.complexity {
        let opt = enumerate_landscape(
            &engine,
            EnumerationOptions {
                cap: cfg.limits.enumeration_cap,
                keep_table: false,
            },
        )
        .map_err(ser)?;
        let s = seed(cfg, record, "complexity", 0);
        let est = complexity(&engine, k, c.runs, s, &opt).map_err(ser)?;
        record.fidelity_evaluations += (est.mean_n_eval * est.n_runs as f64).round() as u64;
        write_json(&dir.join("complexity.json"), &est)?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let text = serde_json::to_string_pretty(value).map_err(ser)?;
    fs::write(path, text)?;
    Ok(())
}

fn write_histogram(path: &Path, h: &Histogram) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(ser)?;
    w.write_record(["bin_lo", "bin_hi", "count", "density"])
        .map_err(ser)?;
    for b in 0..h.bins() {
        w.write_record([
            h.edges[b].to_string(),
            h.edges[b + 1].to_string(),
            h.counts[b].to_string(),
            h.density[b].to_string(),
        ])
        .map_err(ser)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes through a temporary sibling and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn list_files(root: &Path) -> Result<Vec<FileEntry>, ExperimentError> {
    let mut paths = Vec::new();
    collect(root, &mut paths)?;
    paths.sort();
    paths
        .into_iter()
        .filter(|p| p != &root.join("manifest.json"))
        .map(|p| {
            let bytes = fs::read(&p)?;
            Ok(FileEntry {
                path: p
                    .strip_prefix(root)
                    .unwrap_or(&p)
                    .to_string_lossy()
                    .replace('\\', "/"),
                sha256: hex::encode(Sha256::digest(&bytes)),
                bytes: bytes.len() as u64,
            })
        })
        .collect()
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let hidden = path
            .file_name()
            .is_some_and(|n| n.to_string_lossy().starts_with('.'));
        if hidden {
            continue;
        }
        if path.is_dir() {
            collect(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}
