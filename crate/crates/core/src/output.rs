//! CSV and JSON writers for traces, regret and consensus reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{ConsensusCurve, RegretLedger};
use crate::error::Result;
use crate::trace::Trace;

/// `<root>/<experiment>/<stamp>`, created if missing.
pub fn run_dir(root: &Path, experiment: &str, stamp: &str) -> Result<PathBuf> {
    let dir = root.join(experiment).join(stamp);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Columns `t, agent, x0.., global_cost, spread, x_star0..`.
pub fn write_trace_csv<W: Write>(trace: &Trace, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string(), "agent".into()];
    header.extend((0..trace.dim).map(|k| format!("x{k}")));
    header.extend(["global_cost".into(), "spread".into()]);
    if trace.has_minimizer() {
        header.extend((0..trace.dim).map(|k| format!("x_star{k}")));
    }
    out.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for t in 0..trace.len() {
        for i in 0..trace.n_agents {
            row.clear();
            row.push(t.to_string());
            row.push(i.to_string());
            row.extend(trace.x(t, i).iter().map(f64::to_string));
            row.push(trace.global_cost(t, i).to_string());
            row.push(trace.spread()[t].to_string());
            if let Some(xs) = trace.x_star(t) {
                row.extend(xs.iter().map(f64::to_string));
            }
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Columns `t, offline_cost, R_0..R_{N-1}, mean_R_over_t`.
pub fn write_regret_csv<W: Write>(ledger: &RegretLedger, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let n = ledger.n_agents;
    let mut header = vec!["t".to_string(), "offline_cost".into()];
    header.extend((0..n).map(|i| format!("R_{i}")));
    header.push("mean_R_over_t".into());
    out.write_record(&header)?;
    for t in 0..=ledger.horizon() {
        let mut row = vec![t.to_string(), ledger.offline_cost(t).to_string()];
        row.extend((0..n).map(|i| ledger.regret_at(t, i).to_string()));
        row.push(ledger.mean_time_averaged(t).to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `t, spread, augmented_deviation`.
pub fn write_consensus_csv<W: Write>(curve: &ConsensusCurve, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "spread", "augmented_deviation"])?;
    for (t, (s, a)) in curve.spread.iter().zip(&curve.augmented_deviation).enumerate() {
        out.write_record([t.to_string(), s.to_string(), a.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `t, <label>..` from equally long series.
pub fn write_series_csv<W: Write>(labels: &[String], series: &[Vec<f64>], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(labels.iter().cloned());
    out.write_record(&header)?;
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    for t in 0..len {
        let mut row = vec![t.to_string()];
        row.extend(series.iter().map(|s| s[t].to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn write_csv_file(path: &Path, body: impl FnOnce(fs::File) -> Result<()>) -> Result<()> {
    body(fs::File::create(path)?)
}

/// Matplotlib script that renders the figures from the CSVs beside it.
pub const PLOT_SCRIPT: &str = r#"# Renders figures from the CSV files in the directory given as argv[1].
import csv, glob, os, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

d = sys.argv[1] if len(sys.argv) > 1 else "."

def read(path):
    with open(path) as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}

tr = os.path.join(d, "trajectory.csv")
if os.path.exists(tr):
    cols = read(tr)
    agents = sorted(set(int(a) for a in cols["agent"]))
    for a in agents:
        idx = [k for k, v in enumerate(cols["agent"]) if int(v) == a]
        plt.plot([cols["t"][k] for k in idx], [cols["x0"][k] for k in idx], lw=0.8)
    if "x_star0" in cols:
        idx = [k for k, v in enumerate(cols["agent"]) if int(v) == 0]
        plt.plot([cols["t"][k] for k in idx], [cols["x_star0"][k] for k in idx], "k--", lw=1)
    plt.xlabel("t"); plt.ylabel("x_i(t)"); plt.savefig(os.path.join(d, "trajectories.png")); plt.clf()

rg = os.path.join(d, "regret.csv")
if os.path.exists(rg):
    cols = read(rg)
    for k in cols:
        if k.startswith("R_"):
            plt.plot(cols["t"][1:], [r / t for r, t in zip(cols[k][1:], cols["t"][1:])], lw=0.8)
    plt.xlabel("t"); plt.ylabel("R_i(t)/t"); plt.savefig(os.path.join(d, "regret.png")); plt.clf()

for path in sorted(glob.glob(os.path.join(d, "fig4_n*.csv"))):
    cols = read(path)
    plt.plot(cols["t"][1:], cols["mean_R_over_t"][1:], label=os.path.basename(path)[5:-4])
if glob.glob(os.path.join(d, "fig4_n*.csv")):
    plt.xlabel("t"); plt.ylabel("mean R_i(t)/t"); plt.legend(); plt.savefig(os.path.join(d, "fig4.png"))
"#;

pub fn write_plot_script(dir: &Path) -> Result<()> {
    fs::write(dir.join("plot.py"), PLOT_SCRIPT)?;
    Ok(())
}
