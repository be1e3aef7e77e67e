use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;

use super::runner::{write_atomic, CellRecord, CellStatus};
use super::{ser, ExperimentError};

/// Tidy tables that can be regenerated from a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    PhaseDiagram,
    ComplexityScaling,
    HammingHist,
    DosExcitations,
    CouplingMaps,
    EmbeddingMap,
}

impl PlotKind {
    pub const ALL: [PlotKind; 6] = [
        PlotKind::PhaseDiagram,
        PlotKind::ComplexityScaling,
        PlotKind::HammingHist,
        PlotKind::DosExcitations,
        PlotKind::CouplingMaps,
        PlotKind::EmbeddingMap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::PhaseDiagram => "phase_diagram",
            PlotKind::ComplexityScaling => "complexity_scaling",
            PlotKind::HammingHist => "hamming_hist",
            PlotKind::DosExcitations => "dos_excitations",
            PlotKind::CouplingMaps => "coupling_maps",
            PlotKind::EmbeddingMap => "embedding_map",
        }
    }

    /// Config switch that produces the input of this table.
    pub fn toggle(self) -> &'static str {
        match self {
            PlotKind::PhaseDiagram => "analysis.order_parameters",
            PlotKind::ComplexityScaling => "analysis.complexity",
            PlotKind::HammingHist => "analysis.hamming",
            PlotKind::DosExcitations => "analysis.dos",
            PlotKind::CouplingMaps => "analysis.couplings",
            PlotKind::EmbeddingMap => "analysis.embedding",
        }
    }

    fn source(self) -> &'static str {
        match self {
            PlotKind::PhaseDiagram => "order.json",
            PlotKind::ComplexityScaling => "complexity.json",
            PlotKind::HammingHist => "hamming.csv",
            PlotKind::DosExcitations => "dos.csv",
            PlotKind::CouplingMaps => "couplings.json",
            PlotKind::EmbeddingMap => "embedding.csv",
        }
    }

    pub fn header(self) -> &'static [&'static str] {
        match self {
            PlotKind::PhaseDiagram => &["T", "k", "q", "f", "best_fidelity", "M", "M_star", "N_T"],
            PlotKind::ComplexityScaling => &[
                "N_T",
                "T",
                "k",
                "mean_n_eval",
                "p_opt",
                "complexity",
                "stderr",
            ],
            PlotKind::HammingHist => &["N_T", "T", "k", "bin_lo", "bin_hi", "count", "density"],
            PlotKind::DosExcitations => &[
                "N_T",
                "T",
                "record",
                "bin_lo",
                "bin_hi",
                "density",
                "order",
                "flips",
                "M_h",
                "group",
                "cost",
                "delta_cost",
            ],
            PlotKind::CouplingMaps => &["N_T", "T", "order", "i", "j", "k", "value"],
            PlotKind::EmbeddingMap => &[
                "N_T", "T", "k", "index", "x", "y", "label", "rho", "delta", "fidelity",
            ],
        }
    }
}

impl FromStr for PlotKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::UnknownKind(s.to_string()))
    }
}

struct FinishedCell {
    dir: PathBuf,
    record: CellRecord,
}

fn finished_cells(root: &Path) -> Result<Vec<FinishedCell>, ExperimentError> {
    let mut out = Vec::new();
    let cells = root.join("cells");
    if !cells.is_dir() {
        return Ok(out);
    }
    for entry in fs::read_dir(&cells)? {
        let dir = entry?.path();
        let Ok(text) = fs::read_to_string(dir.join("cell.json")) else {
            continue;
        };
        let record: CellRecord = serde_json::from_str(&text).map_err(ser)?;
        if record.status != CellStatus::Failed {
            out.push(FinishedCell { dir, record });
        }
    }
    out.sort_by(|a, b| {
        let (a, b) = (&a.record, &b.record);
        a.bangs
            .cmp(&b.bangs)
            .then(a.duration.total_cmp(&b.duration))
            .then(a.k.cmp(&b.k))
    });
    Ok(out)
}

fn read_json(path: &Path) -> Result<Value, ExperimentError> {
    serde_json::from_str(&fs::read_to_string(path)?).map_err(ser)
}

fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(ser)?;
    r.records()
        .map(|row| {
            row.map(|r| r.iter().map(str::to_string).collect())
                .map_err(ser)
        })
        .collect()
}

fn num(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn rows_for(kind: PlotKind, cell: &FinishedCell) -> Result<Vec<Vec<String>>, ExperimentError> {
    let r = &cell.record;
    let n = r.bangs.to_string();
    let t = r.duration.to_string();
    let k = r.k.map(|k| k.to_string()).unwrap_or_default();
    let src = cell.dir.join(kind.source());
    let mut rows = Vec::new();
    match kind {
        PlotKind::PhaseDiagram => {
            let v = read_json(&src)?;
            rows.push(vec![
                t,
                k,
                num(&v["q"]),
                num(&v["f"]),
                num(&v["best_fidelity"]),
                num(&v["m"]),
                num(&v["m_star"]),
                n,
            ]);
        }
        PlotKind::ComplexityScaling => {
            let v = read_json(&src)?;
            rows.push(vec![
                n,
                t,
                k,
                num(&v["mean_n_eval"]),
                num(&v["p_opt"]),
                num(&v["complexity"]),
                num(&v["complexity_stderr"]),
            ]);
        }
        PlotKind::HammingHist | PlotKind::EmbeddingMap => {
            for row in read_csv(&src)? {
                let mut out = vec![n.clone(), t.clone(), k.clone()];
                out.extend(row);
                rows.push(out);
            }
        }
        PlotKind::DosExcitations => {
            for row in read_csv(&src)? {
                let mut out = vec![n.clone(), t.clone(), "dos".into()];
                out.extend([row[0].clone(), row[1].clone(), row[3].clone()]);
                out.extend(std::iter::repeat_n(String::new(), 6));
                rows.push(out);
            }
            let ex = cell.dir.join("excitations.csv");
            for row in read_csv(&ex)? {
                let m: i64 = row[2].parse().map_err(ser)?;
                let mut out = vec![n.clone(), t.clone(), "excitation".into()];
                out.extend(std::iter::repeat_n(String::new(), 3));
                // |Σ σ*| over the flipped bangs
                let group = (m.abs() / 2).to_string();
                out.extend([
                    row[0].clone(),
                    row[1].clone(),
                    row[2].clone(),
                    group,
                    row[3].clone(),
                    row[4].clone(),
                ]);
                rows.push(out);
            }
        }
        PlotKind::CouplingMaps => {
            let v = read_json(&src)?;
            let bangs = r.bangs;
            let cell_row = |order: usize, idx: [Option<usize>; 3], value: &Value| {
                let mut out = vec![n.clone(), t.clone(), order.to_string()];
                out.extend(
                    idx.iter()
                        .map(|i| i.map(|i| i.to_string()).unwrap_or_default()),
                );
                out.push(num(value));
                out
            };
            rows.push(cell_row(0, [None; 3], &v["c0"]));
            for i in 0..bangs {
                rows.push(cell_row(1, [Some(i), None, None], &v["g"][i]));
            }
            for i in 0..bangs {
                for j in i + 1..bangs {
                    rows.push(cell_row(
                        2,
                        [Some(i), Some(j), None],
                        &v["j"][i * bangs + j],
                    ));
                }
            }
            for i in 0..bangs {
                for j in i + 1..bangs {
                    for l in j + 1..bangs {
                        let idx = (i * bangs + j) * bangs + l;
                        rows.push(cell_row(3, [Some(i), Some(j), Some(l)], &v["k"][idx]));
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Writes `plots/<kind>.csv` from the finished grid points under `root`.
pub fn emit_plot_data(root: &Path, kind: PlotKind) -> Result<PathBuf, ExperimentError> {
    let cells: Vec<FinishedCell> = finished_cells(root)?
        .into_iter()
        .filter(|c| c.dir.join(kind.source()).is_file())
        .collect();
    if cells.is_empty() {
        return Err(ExperimentError::MissingResults {
            kind: kind.name(),
            toggle: kind.toggle(),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(kind.header()).map_err(ser)?;
    for c in &cells {
        for row in rows_for(kind, c)? {
            w.write_record(&row).map_err(ser)?;
        }
    }
    let bytes = w.into_inner().map_err(ser)?;
    let dir = root.join("plots");
    fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{}.csv", kind.name()));
    write_atomic(&path, &bytes)?;
    Ok(path)
}

/// Emits every table whose inputs exist and skips the rest.
pub fn emit_all(root: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut out = Vec::new();
    for kind in PlotKind::ALL {
        match emit_plot_data(root, kind) {
            Ok(p) => out.push(p),
            Err(ExperimentError::MissingResults { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
