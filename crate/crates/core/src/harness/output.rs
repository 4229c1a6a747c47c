//! CSV result files.
//!
//! Every file starts with the experiment config echoed as `# key=value`
//! lines, followed by a header row and comma-separated records. Floats use
//! 17 significant digits so identical runs produce identical bytes.
//!
//! * `rounds.csv`: `round,mode,seed,accuracy,micro_f1,macro_f1,mean_ce,mean_con`
//!   then one `sim_k<k>_c<c>` column per (client, class), 0-based.
//! * `summary.csv`: `method,seed,mu,accuracy,micro_f1,macro_f1`.
//! * `provenance.csv`: `round,mode,seed,class,source_client`; round 0 rows
//!   carry `init` (anchors taken from the initial global classifier).

use std::fmt::Write as _;
use std::path::Path;

use crate::data::fmt_f64;
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::experiment::{ComparisonRow, ExperimentResult};
use crate::server::SelectionMode;

fn config_echo(cfg: &ExperimentConfig) -> String {
    cfg.to_kv().lines().map(|l| format!("# {l}\n")).collect()
}

pub fn rounds_csv(cfg: &ExperimentConfig, runs: &[ExperimentResult]) -> String {
    let mut out = config_echo(cfg);
    out.push_str("round,mode,seed,accuracy,micro_f1,macro_f1,mean_ce,mean_con");
    let (k, c) = (cfg.clients, cfg.classes);
    for ki in 0..k {
        for ci in 0..c {
            let _ = write!(out, ",sim_k{ki}_c{ci}");
        }
    }
    out.push('\n');
    for run in runs {
        for r in &run.rounds {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.round,
                run.config.mode,
                run.config.seed,
                fmt_f64(r.eval.accuracy),
                fmt_f64(r.eval.micro_f1),
                fmt_f64(r.eval.macro_f1),
                fmt_f64(r.mean_ce),
                fmt_f64(r.mean_con),
            );
            for &s in r.similarity.local.as_slice() {
                let _ = write!(out, ",{}", fmt_f64(s));
            }
            out.push('\n');
        }
    }
    out
}

pub fn summary_csv(cfg: &ExperimentConfig, rows: &[ComparisonRow]) -> String {
    let mut out = config_echo(cfg);
    out.push_str("method,seed,mu,accuracy,micro_f1,macro_f1\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method,
            r.seed,
            fmt_f64(r.mu),
            fmt_f64(r.eval.accuracy),
            fmt_f64(r.eval.micro_f1),
            fmt_f64(r.eval.macro_f1)
        );
    }
    out
}

pub fn provenance_csv(cfg: &ExperimentConfig, runs: &[ExperimentResult]) -> String {
    let mut out = config_echo(cfg);
    out.push_str("round,mode,seed,class,source_client\n");
    for run in runs {
        if run.config.mode == SelectionMode::None {
            continue;
        }
        let (mode, seed) = (run.config.mode, run.config.seed);
        for class in 0..run.config.classes {
            let _ = writeln!(out, "0,{mode},{seed},{class},init");
        }
        for r in &run.rounds {
            for (class, src) in r.provenance.iter().enumerate() {
                let _ = writeln!(out, "{},{mode},{seed},{class},{src}", r.round);
            }
        }
    }
    out
}

/// Writes `rounds.csv`, `summary.csv` and `provenance.csv` into `dir`.
pub fn write_outputs(
    dir: impl AsRef<Path>,
    cfg: &ExperimentConfig,
    runs: &[ExperimentResult],
    extra_rows: &[ComparisonRow],
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let rows: Vec<ComparisonRow> = runs
        .iter()
        .map(|r| ComparisonRow {
            method: r.config.mode.to_string(),
            seed: r.config.seed,
            mu: r.config.effective_mu(),
            eval: r.final_eval.clone(),
        })
        .chain(extra_rows.iter().cloned())
        .collect();
    std::fs::write(dir.join("rounds.csv"), rounds_csv(cfg, runs))?;
    std::fs::write(dir.join("summary.csv"), summary_csv(cfg, &rows))?;
    std::fs::write(dir.join("provenance.csv"), provenance_csv(cfg, runs))?;
    Ok(())
}

/// One parsed `rounds.csv` record.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRow {
    pub round: usize,
    pub mode: SelectionMode,
    pub seed: u64,
    pub accuracy: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub mean_ce: f64,
    pub mean_con: f64,
    /// Row-major K×C similarities.
    pub similarities: Vec<f64>,
}

pub fn parse_rounds_csv(text: &str) -> Result<Vec<RoundRow>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !header_seen {
            if !line.starts_with("round,mode,seed,") {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "missing rounds.csv header".into(),
                });
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 8 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected at least 8 fields, got {}", f.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad number {s:?}"),
            })
        };
        rows.push(RoundRow {
            round: num(f[0])? as usize,
            mode: f[1].parse().map_err(|e: Error| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?,
            seed: f[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad seed {:?}", f[2]),
            })?,
            accuracy: num(f[3])?,
            micro_f1: num(f[4])?,
            macro_f1: num(f[5])?,
            mean_ce: num(f[6])?,
            mean_con: num(f[7])?,
            similarities: f[8..].iter().map(|s| num(s)).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}
