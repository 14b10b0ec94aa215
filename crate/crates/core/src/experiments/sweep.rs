//! Ratio sweeps over reconstruction methods and label-selection strategies.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;

use super::{label_count, pearson, random_labels, relative_l2};
use crate::active::{select_recursive_bisection, select_rrqr, SelectionMethod};
use crate::error::{Error, Result};
use crate::graph::FlowNetwork;
use crate::spectral::SpectralBasis;
use crate::ssl::{LabelSet, Method, SslConfig};

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    pub selections: Vec<SelectionMethod>,
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
    pub ssl: SslConfig,
    /// Embedding dimension for recursive bisection.
    pub embed_dim: usize,
    /// Correlate over unlabeled edges only instead of all edges.
    pub unlabeled_only: bool,
    /// Record wall-clock time per cell. Off by default so that output is
    /// reproducible byte for byte.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            selections: vec![SelectionMethod::Random],
            ratios: (1..=9).map(|k| k as f64 / 10.0).collect(),
            seeds: (1..=20).collect(),
            ssl: SslConfig::default(),
            embed_dim: 2,
            unlabeled_only: false,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub selection: SelectionMethod,
    pub ratio: f64,
    pub seed: u64,
    /// `None` when the cell failed, see `error`.
    pub rho: Option<f64>,
    pub rel_l2: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub method: Method,
    pub selection: SelectionMethod,
    pub ratio: f64,
    /// Successful trials.
    pub n: usize,
    pub failed: usize,
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / √n).
    pub stderr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<SweepRow>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| x.to_string())
}

impl ExperimentResult {
    /// Writes `method,selection,ratio,seed,rho,runtime_ms`, plus `rel_l2`
    /// when requested. Failed cells carry `nan`; `runtime_ms` is empty when
    /// timing was off.
    pub fn write_csv<W: Write>(&self, w: W, with_rel_l2: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Parse { line: 0, msg: e.to_string() };
        let mut header = vec!["method", "selection", "ratio", "seed", "rho", "runtime_ms"];
        if with_rel_l2 {
            header.push("rel_l2");
        }
        out.write_record(&header).map_err(io)?;
        for r in &self.rows {
            let mut rec = vec![
                r.method.name().to_string(),
                r.selection.name().to_string(),
                r.ratio.to_string(),
                r.seed.to_string(),
                fmt_opt(r.rho),
                r.runtime_ms.map_or_else(String::new, |t| format!("{t:.3}")),
            ];
            if with_rel_l2 {
                rec.push(fmt_opt(r.rel_l2));
            }
            out.write_record(&rec).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Parse { line: 0, msg: e.to_string() })
    }

    /// Mean ± standard error of ρ per (method, selection, ratio), in the
    /// order cells first appear.
    pub fn summarize(&self) -> Vec<CellSummary> {
        let mut order = Vec::new();
        let mut groups: HashMap<(Method, SelectionMethod, u64), Vec<&SweepRow>> = HashMap::new();
        for r in &self.rows {
            let key = (r.method, r.selection, r.ratio.to_bits());
            groups
                .entry(key)
                .or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                })
                .push(r);
        }
        order
            .into_iter()
            .map(|key| {
                let rows = &groups[&key];
                let vals: Vec<f64> = rows.iter().filter_map(|r| r.rho).collect();
                let n = vals.len();
                let mean = if n > 0 { vals.iter().sum::<f64>() / n as f64 } else { f64::NAN };
                let stderr = if n > 1 {
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                    (var / n as f64).sqrt()
                } else {
                    0.0
                };
                CellSummary {
                    method: key.0,
                    selection: key.1,
                    ratio: f64::from_bits(key.2),
                    n,
                    failed: rows.len() - n,
                    mean,
                    stderr,
                }
            })
            .collect()
    }
}

/// Runs every (method, selection, ratio, seed) cell and returns the rows in
/// that nested order. Deterministic selections are computed once and shared
/// across seeds. A failing cell is recorded and the sweep continues.
pub fn run_sweep(
    net: &FlowNetwork,
    truth: &[f64],
    basis: Option<&SpectralBasis>,
    cfg: &SweepConfig,
) -> Result<ExperimentResult> {
    net.check_flow(truth)?;
    for &r in &cfg.ratios {
        label_count(net.m(), r)?;
    }
    let m = net.m();
    let max_k = cfg.ratios.iter().map(|&r| label_count(m, r).unwrap()).max().unwrap_or(0);

    // Greedy selections are prefix-consistent, so one run at the largest
    // budget serves every ratio.
    let mut owned_basis = None;
    let mut orders: HashMap<SelectionMethod, std::result::Result<Vec<usize>, String>> = HashMap::new();
    for &sel in &cfg.selections {
        let order = match sel {
            SelectionMethod::Random => continue,
            SelectionMethod::Rrqr => {
                let b = match basis {
                    Some(b) => b,
                    None => &*owned_basis.get_or_insert_with(|| SpectralBasis::compute(net)),
                };
                if b.n_cycle() == 0 {
                    warn!("no cycle space; RRQR cells fall back to per-seed random labels");
                    continue;
                }
                select_rrqr(b, max_k, 0).map(|s| s.edges)
            }
            SelectionMethod::RecursiveBisection => {
                select_recursive_bisection(net, max_k, cfg.embed_dim).map(|s| s.edges)
            }
        };
        orders.insert(sel, order.map_err(|e| e.to_string()));
    }

    let mut cells = Vec::new();
    for &method in &cfg.methods {
        for &selection in &cfg.selections {
            for &ratio in &cfg.ratios {
                for &seed in &cfg.seeds {
                    cells.push((method, selection, ratio, seed));
                }
            }
        }
    }

    let rows = cells
        .par_iter()
        .map(|&(method, selection, ratio, seed)| {
            let start = Instant::now();
            let outcome = run_cell(net, truth, cfg, &orders, method, selection, ratio, seed);
            let runtime_ms = cfg.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
            match outcome {
                Ok((rho, rel)) => SweepRow {
                    method,
                    selection,
                    ratio,
                    seed,
                    rho: Some(rho),
                    rel_l2: Some(rel),
                    runtime_ms,
                    error: None,
                },
                Err(e) => SweepRow {
                    method,
                    selection,
                    ratio,
                    seed,
                    rho: None,
                    rel_l2: None,
                    runtime_ms,
                    error: Some(e),
                },
            }
        })
        .collect();
    Ok(ExperimentResult { rows })
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    net: &FlowNetwork,
    truth: &[f64],
    cfg: &SweepConfig,
    orders: &HashMap<SelectionMethod, std::result::Result<Vec<usize>, String>>,
    method: Method,
    selection: SelectionMethod,
    ratio: f64,
    seed: u64,
) -> std::result::Result<(f64, f64), String> {
    let m = net.m();
    let k = label_count(m, ratio).map_err(|e| e.to_string())?;
    let idx = match orders.get(&selection) {
        Some(Ok(order)) => order[..k].to_vec(),
        Some(Err(e)) => return Err(e.clone()),
        None => random_labels(m, ratio, seed).map_err(|e| e.to_string())?,
    };
    let labels = LabelSet::from_flow(truth, idx).map_err(|e| e.to_string())?;
    let est = method.infer(net, &labels, &cfg.ssl).map_err(|e| e.to_string())?;
    let rel = relative_l2(&est, truth).map_err(|e| e.to_string())?;
    let rho = if cfg.unlabeled_only {
        let u = labels.unlabeled();
        let a: Vec<f64> = u.iter().map(|&r| est[r]).collect();
        let b: Vec<f64> = u.iter().map(|&r| truth[r]).collect();
        pearson(&a, &b)
    } else {
        pearson(&est, truth)
    };
    Ok((rho.map_err(|e| e.to_string())?, rel))
}
