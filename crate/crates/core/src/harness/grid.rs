//! Grid driver and the versioned efficiency CSV.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::cell::{run_cell, CalibrationSettings, CellSettings, DesignPoint, EfficiencyRecord};
use super::config::Config;
use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::models::SuperpopulationModel;
use crate::par::Jobs;
use crate::rng::combine;

pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 26] = [
    "schema_version",
    "model",
    "k",
    "m",
    "n",
    "rho_target",
    "sigma_proxy",
    "rho_clamped",
    "p_cens",
    "level",
    "t",
    "s_true",
    "mean_s_rss",
    "mean_s_srs",
    "v_rss_mc",
    "v_srs_mc",
    "mean_gw_rss",
    "mean_gw_srs",
    "re_true",
    "re_mc",
    "re_gw",
    "b_mc",
    "b_true",
    "n_degenerate",
    "seed",
    "calibration_seed",
];

#[derive(Debug, Clone, Copy, Default)]
pub struct GridOptions {
    /// Overrides the config seed.
    pub seed: Option<u64>,
    pub jobs: Jobs,
    /// Full-scale replicate counts.
    pub full: bool,
}

/// Cells in output order: `p_cens`, then `k`, `m`, `rho`.
pub fn design_points(config: &Config) -> Vec<DesignPoint> {
    let model = config.superpopulation();
    let mut cells = Vec::new();
    for &p_cens in &config.p_cens {
        for &k in &config.k {
            for &m in &config.m {
                for &rho_target in &config.rho {
                    cells.push(DesignPoint {
                        model,
                        k,
                        m,
                        rho_target,
                        p_cens,
                        eval_levels: config.levels.clone(),
                    });
                }
            }
        }
    }
    cells
}

pub fn cell_settings(config: &Config, jobs: Jobs) -> CellSettings {
    CellSettings {
        b_mc: config.b_mc,
        b_true: config.b_true,
        calibration: CalibrationSettings {
            draws: config.calibration_draws,
            tol: config.calibration_tol,
            seed: config.calibration_seed,
        },
        mixing_sets: config.mixing_sets,
        jobs,
    }
}

/// Runs every cell; cell `i` uses seed `combine(config.seed, i)`.
pub fn run_config(config: &Config, jobs: Jobs) -> Result<Vec<EfficiencyRecord>> {
    let settings = cell_settings(config, jobs);
    let mut records = Vec::new();
    for (i, design) in design_points(config).iter().enumerate() {
        records.extend(run_cell(design, &settings, combine(config.seed, i as u64))?);
    }
    Ok(records)
}

fn model_name(model: &SuperpopulationModel) -> &'static str {
    match model {
        SuperpopulationModel::Aft(_) => "aft",
        SuperpopulationModel::Weibull(_) => "weibull",
    }
}

pub fn write_records<W: Write>(records: &[EfficiencyRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        let d = &r.design;
        w.write_record([
            SCHEMA_VERSION.to_string(),
            model_name(&d.model).to_string(),
            d.k.to_string(),
            d.m.to_string(),
            (d.k * d.m).to_string(),
            sig6(d.rho_target),
            sig6(r.sigma_proxy),
            u8::from(r.rho_clamped).to_string(),
            sig6(d.p_cens),
            sig6(r.level),
            sig6(r.t),
            sig6(r.s_true),
            sig6(r.mean_s_rss),
            sig6(r.mean_s_srs),
            sig6(r.v_rss_mc),
            sig6(r.v_srs_mc),
            sig6(r.mean_gw_rss),
            sig6(r.mean_gw_srs),
            sig6(r.re_true),
            sig6(r.re_mc),
            sig6(r.re_gw),
            r.b_mc.to_string(),
            r.b_true.to_string(),
            r.n_degenerate.to_string(),
            r.seed.to_string(),
            r.calibration_seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Loads `config_path`, runs the grid and writes the CSV to `output` (or the
/// config's `output`). Returns the path written.
pub fn run_grid(
    config_path: &Path,
    output: Option<&Path>,
    options: GridOptions,
) -> Result<PathBuf> {
    let mut config = Config::load(config_path)?;
    if options.full {
        config = config.full();
    }
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    let output = match (output, &config.output) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.clone(),
        (None, None) => {
            return Err(Error::Config {
                path: config_path.to_path_buf(),
                message: "field `output`: no output path in config or on the command line".into(),
            })
        }
    };
    let records = run_config(&config, options.jobs)?;
    let file = std::fs::File::create(&output).map_err(|source| Error::Io {
        path: output.clone(),
        source,
    })?;
    write_records(&records, std::io::BufWriter::new(file)).map_err(|source| Error::Csv {
        path: output.clone(),
        source,
    })?;
    Ok(output)
}
