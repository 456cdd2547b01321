//! Seeded Monte-Carlo studies and their summary tables.
//!
//! Every row of a table has its own trial-seed stream derived from
//! `(master_seed, row, trial)`, so tables are bit-identical for any thread count.

mod config;
mod summary;
pub mod tables;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use config::ExperimentConfig;
pub use summary::{Study, SummaryRow, SummaryTable};
pub use tables::TableOptions;

use crate::adversarial::sharpness_sweep;
use crate::cca::{cca_study, CcaSetting};
use crate::clustering::{clustering_study, ClusterSetting};
use crate::denoising::{denoising_risk, DenoisingSetting, NoiseKind};
use crate::montecarlo::{Estimate, Trials};
use crate::{Error, Result};

pub fn denoising_row(setting: &DenoisingSetting, trials: &Trials) -> Result<SummaryRow> {
    let risk = denoising_risk(setting, trials)?;
    Ok(SummaryRow {
        params: vec![setting.p1 as f64, setting.p2 as f64, setting.r as f64, setting.t],
        reps: trials.reps,
        seed: trials.master_seed,
        metrics: vec![risk.u_sp, risk.v_sp, risk.u_fro, risk.v_fro],
        reference: vec![risk.theoretical_u, risk.theoretical_v],
    })
}

pub fn clustering_rows(setting: &ClusterSetting, n_list: &[usize], trials: &Trials) -> Result<Vec<SummaryRow>> {
    Ok(clustering_study(setting, n_list, trials)?
        .into_iter()
        .map(|row| SummaryRow {
            params: vec![setting.p as f64, setting.t, setting.rho, row.n as f64],
            reps: trials.reps,
            seed: trials.master_seed,
            metrics: vec![row.misclassification],
            reference: vec![],
        })
        .collect())
}

pub fn cca_row(setting: &CcaSetting, trials: &Trials) -> Result<SummaryRow> {
    let s = cca_study(setting, trials)?;
    Ok(SummaryRow {
        params: vec![setting.p1 as f64, setting.p2 as f64, setting.r as f64, setting.n as f64, setting.t],
        reps: trials.reps,
        seed: trials.master_seed,
        metrics: vec![s.u_sp, s.u_fro, s.v_sp, s.v_fro, s.lf_procrustes],
        reference: vec![],
    })
}

pub fn sharpness_row(p1: usize, p2: usize, r: usize, trials: &Trials) -> Result<SummaryRow> {
    let ratios: Vec<f64> = sharpness_sweep(p1, p2, r, trials)?.iter().map(|s| s.ratio).collect();
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SummaryRow {
        params: vec![p1 as f64, p2 as f64, r as f64],
        reps: trials.reps,
        seed: trials.master_seed,
        metrics: vec![Estimate::from_samples(&ratios)],
        reference: vec![min, max],
    })
}

/// Runs the study described by `config`.
///
/// Study parameters:
///
/// * denoising: `p1`, `p2`, `r`, `t`, optional `noise` (`gaussian` or `rademacher`)
/// * clustering: `p`, `t`, `rho`, `n` (comma-separated list), optional `fix_mu`
/// * cca: `p1`, `p2`, `r`, `n`, `t`, optional `squared`
/// * sharpness: `p1`, `p2`, `r`
pub fn run_experiment(config: &ExperimentConfig) -> Result<SummaryTable> {
    let trials = Trials::new(config.reps, config.master_seed).threads(config.threads);
    let c = config;
    let rows = match config.study {
        Study::Denoising => {
            let noise = NoiseKind::parse(&c.get_or("noise", "gaussian".to_string())?)?;
            let s = DenoisingSetting::new(c.get("p1")?, c.get("p2")?, c.get("r")?, c.get("t")?).with_noise(noise);
            vec![denoising_row(&s, &trials)?]
        }
        Study::Clustering => {
            let mut s = ClusterSetting::new(c.get("p")?, c.get("t")?, c.get("rho")?);
            s.fix_mu = c.get_or("fix_mu", false)?;
            clustering_rows(&s, &c.get_list::<usize>("n")?, &trials)?
        }
        Study::Cca => {
            let mut s = CcaSetting::new(c.get("p1")?, c.get("p2")?, c.get("r")?, c.get("n")?, c.get("t")?);
            s.squared = c.get_or("squared", false)?;
            vec![cca_row(&s, &trials)?]
        }
        Study::Sharpness => vec![sharpness_row(c.get("p1")?, c.get("p2")?, c.get("r")?, &trials)?],
    };
    Ok(SummaryTable { study: config.study, rows })
}

/// Re-runs one of the three published grids with `reps` trials per row.
pub fn reproduce_table(table_id: u8, reps: usize, master_seed: u64, options: &TableOptions) -> Result<SummaryTable> {
    let trials = Trials::new(reps, master_seed).threads(options.threads);
    match table_id {
        1 => {
            let mut table = SummaryTable::new(Study::Denoising);
            for (i, ((p1, p2, r, t), _)) in tables::TABLE1.iter().enumerate() {
                let p2 = if options.table1_p2_100 && *p2 == 200 { 100 } else { *p2 };
                let s = DenoisingSetting::new(*p1, p2, *r, *t);
                table.rows.push(denoising_row(&s, &trials.row(i as u64))?);
            }
            Ok(table)
        }
        2 => {
            let mut table = SummaryTable::new(Study::Clustering);
            let per_row = tables::TABLE2_N.len() as u64;
            for (i, ((p, t, rho), _)) in tables::TABLE2.iter().enumerate() {
                let mut s = ClusterSetting::new(*p, *t, *rho);
                s.fix_mu = options.fix_mu;
                table.rows.extend(clustering_rows(&s, &tables::TABLE2_N, &trials.row(i as u64 * per_row))?);
            }
            Ok(table)
        }
        3 => {
            let mut table = SummaryTable::new(Study::Cca);
            for (i, ((p1, p2, n, t), _)) in tables::TABLE3.iter().enumerate() {
                let mut s = CcaSetting::new(*p1, *p2, options.cca_rank, *n, *t);
                s.squared = options.squared;
                table.rows.push(cca_row(&s, &trials.row(i as u64))?);
            }
            Ok(table)
        }
        other => Err(Error::invalid(format!("table id must be 1, 2 or 3, got {other}"))),
    }
}

/// Output encodings for [`export`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

pub fn write_table<W: Write>(table: &SummaryTable, format: ExportFormat, mut out: W) -> Result<()> {
    match format {
        ExportFormat::Csv => table.write_csv(out),
        ExportFormat::Json => {
            writeln!(out, "{}", table.to_json_string()).map_err(|e| Error::Parse(format!("json output: {e}")))
        }
    }
}

/// Writes `table` to the file at `destination`.
pub fn export(table: &SummaryTable, format: ExportFormat, destination: impl AsRef<Path>) -> Result<()> {
    let path = destination.as_ref();
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    match format {
        ExportFormat::Csv => table.write_csv(&mut w)?,
        ExportFormat::Json => writeln!(w, "{}", table.to_json_string()).map_err(io)?,
    }
    w.flush().map_err(io)
}

/// Reads a table previously written by [`export`].
pub fn import(study: Study, format: ExportFormat, source: impl AsRef<Path>) -> Result<SummaryTable> {
    let path = source.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    match format {
        ExportFormat::Csv => SummaryTable::read_csv(study, file),
        ExportFormat::Json => SummaryTable::read_json(study, file),
    }
}
