//! One cell of the efficiency study: a fixed design, `b_mc` paired RSS/SRS
//! replicates, and the three relative-efficiency summaries per evaluation time.

use crate::error::{Error, Result};
use crate::models::{
    asymptotic_km_variance, calibrate_aft_concomitant, censoring_for_fraction, dell_clutter_sigma,
    estimate_mixing_matrix, rss_asymptotic_variance, RankLaw, SuperpopulationModel,
};
use crate::par::{self, Jobs};
use crate::rng::{combine, RngStream};
use crate::rss::rss_kaplan_meier;
use crate::sampling::{draw_balanced_rss, draw_srs};
use crate::survival::kaplan_meier;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    /// Superpopulation; its ranking noise is set from `rho_target` by the cell.
    pub model: SuperpopulationModel,
    pub k: usize,
    pub m: usize,
    pub rho_target: f64,
    pub p_cens: f64,
    pub eval_levels: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSettings {
    pub draws: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            draws: 1_000_000,
            tol: 0.005,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSettings {
    pub b_mc: usize,
    /// Replicates of the secondary AFT run behind `re_true`; `0` disables it.
    pub b_true: usize,
    pub calibration: CalibrationSettings,
    /// Candidate sets used to estimate judged-rank mixing (Weibull `re_true`).
    pub mixing_sets: usize,
    pub jobs: Jobs,
}

impl Default for CellSettings {
    fn default() -> Self {
        Self {
            b_mc: 2000,
            b_true: 1000,
            calibration: CalibrationSettings::default(),
            mixing_sets: 1_000_000,
            jobs: Jobs::default(),
        }
    }
}

/// Monte-Carlo summary of one cell at one evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRecord {
    pub design: DesignPoint,
    pub level: f64,
    pub t: f64,
    pub s_true: f64,
    /// Ranking-noise standard deviation actually used.
    pub sigma_proxy: f64,
    /// `rho_target` exceeded the attainable correlation and the noiseless
    /// concomitant was used instead.
    pub rho_clamped: bool,
    pub mean_s_rss: f64,
    pub mean_s_srs: f64,
    pub v_rss_mc: f64,
    pub v_srs_mc: f64,
    pub mean_gw_rss: f64,
    pub mean_gw_srs: f64,
    pub re_true: f64,
    pub re_mc: f64,
    pub re_gw: f64,
    pub b_mc: usize,
    pub b_true: usize,
    /// Replicate evaluations (RSS or SRS) that fell on an exhausted risk set.
    pub n_degenerate: usize,
    pub seed: u64,
    pub calibration_seed: u64,
}

/// Evaluation times at which the population survival equals each level.
pub fn eval_times_from_levels(model: &SuperpopulationModel, levels: &[f64]) -> Result<Vec<f64>> {
    levels.iter().map(|&l| model.time_at_survival(l)).collect()
}

/// Sets the ranking noise for `rho_target`. Returns the model, the noise
/// standard deviation, and whether the target had to be clamped.
pub fn ranked_model(
    model: &SuperpopulationModel,
    rho_target: f64,
    calibration: &CalibrationSettings,
) -> Result<(SuperpopulationModel, f64, bool)> {
    let (sigma, clamped) = match model {
        SuperpopulationModel::Aft(aft) => {
            let rng = RngStream::new(calibration.seed, 0);
            match calibrate_aft_concomitant(
                aft,
                rho_target,
                calibration.draws,
                calibration.tol,
                rng,
            ) {
                Ok(s) => (s, false),
                Err(Error::Calibration { .. }) => (0.0, true),
                Err(e) => return Err(e),
            }
        }
        SuperpopulationModel::Weibull(_) => (
            dell_clutter_sigma(model.variance(), rho_target)?.sqrt(),
            false,
        ),
    };
    Ok((model.with_ranking_noise(sigma), sigma, clamped))
}

/// Per-replicate values at each evaluation time.
#[derive(Debug, Clone, Copy, Default)]
struct Replicate {
    s_rss: f64,
    s_srs: f64,
    gw_rss: f64,
    gw_srs: f64,
    degenerate: usize,
}

const MAIN_RUN: u64 = 0x6d61_696e;
const TRUE_RUN: u64 = 0x7472_7565;
const MIXING: u64 = 0x6d69_7878;

fn simulate(
    model: &SuperpopulationModel,
    design: &DesignPoint,
    censoring: &crate::models::CensoringLaw,
    times: &[f64],
    reps: usize,
    seed: u64,
    jobs: Jobs,
) -> Result<Vec<Vec<Replicate>>> {
    let n = design.k * design.m;
    par::map_indexed(reps, jobs, |b| -> Result<Vec<Replicate>> {
        let stream = RngStream::new(seed, b as u64);
        let rss = draw_balanced_rss(model, design.k, design.m, censoring, stream.substream(0))?;
        let srs = draw_srs(model, n, censoring, stream.substream(1))?;
        let est = rss_kaplan_meier(&rss)?;
        let km = kaplan_meier(srs.observations())?;
        Ok(times
            .iter()
            .map(|&t| {
                let p = km.evaluate(t);
                Replicate {
                    s_rss: est.survival_at(t),
                    s_srs: p.survival,
                    gw_rss: est.greenwood_at(t),
                    gw_srs: p.greenwood_var,
                    degenerate: usize::from(est.any_degenerate_at(t)) + usize::from(p.degenerate),
                }
            })
            .collect())
    })
    .into_iter()
    .collect()
}

fn column(reps: &[Vec<Replicate>], i: usize, f: impl Fn(&Replicate) -> f64) -> Vec<f64> {
    reps.iter().map(|r| f(&r[i])).collect()
}

/// Runs one cell with replicate streams `(seed, b)`.
pub fn run_cell(
    design: &DesignPoint,
    settings: &CellSettings,
    seed: u64,
) -> Result<Vec<EfficiencyRecord>> {
    design.model.validate()?;
    if design.k == 0 || design.m == 0 {
        return Err(Error::EmptyDesign {
            k: design.k,
            m: design.m,
        });
    }
    if settings.b_mc < 2 {
        return Err(Error::parameter("b_mc", "need at least 2 replicates"));
    }
    if settings.b_true == 1 {
        return Err(Error::parameter("b_true", "must be 0 or at least 2"));
    }
    let times = eval_times_from_levels(&design.model, &design.eval_levels)?;
    let censoring = censoring_for_fraction(&design.model, design.p_cens)?;
    let (model, sigma, clamped) =
        ranked_model(&design.model, design.rho_target, &settings.calibration)?;

    let main = simulate(
        &model,
        design,
        &censoring,
        &times,
        settings.b_mc,
        combine(seed, MAIN_RUN),
        settings.jobs,
    )?;

    let re_true: Vec<f64> = match design.model {
        SuperpopulationModel::Aft(_) if settings.b_true >= 2 => {
            let sec = simulate(
                &model,
                design,
                &censoring,
                &times,
                settings.b_true,
                combine(seed, TRUE_RUN),
                settings.jobs,
            )?;
            (0..times.len())
                .map(|i| {
                    let (_, v_rss) = par::mean_var(&column(&sec, i, |r| r.s_rss));
                    let (_, v_srs) = par::mean_var(&column(&sec, i, |r| r.s_srs));
                    v_srs / v_rss
                })
                .collect()
        }
        SuperpopulationModel::Aft(_) => vec![f64::NAN; times.len()],
        SuperpopulationModel::Weibull(_) => {
            let mixing = estimate_mixing_matrix(
                &model,
                design.k,
                settings.mixing_sets,
                RngStream::new(combine(seed, MIXING), 0),
                settings.jobs,
            )?;
            times
                .iter()
                .map(|&t| {
                    let v_srs = asymptotic_km_variance(&model, &censoring, RankLaw::Population, t)?;
                    let v_rss =
                        rss_asymptotic_variance(&model, &censoring, design.k, Some(&mixing), t)?;
                    Ok(v_srs / v_rss)
                })
                .collect::<Result<_>>()?
        }
    };

    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let (mean_s_rss, v_rss_mc) = par::mean_var(&column(&main, i, |r| r.s_rss));
            let (mean_s_srs, v_srs_mc) = par::mean_var(&column(&main, i, |r| r.s_srs));
            let (mean_gw_rss, _) = par::mean_var(&column(&main, i, |r| r.gw_rss));
            let (mean_gw_srs, _) = par::mean_var(&column(&main, i, |r| r.gw_srs));
            EfficiencyRecord {
                design: design.clone(),
                level: design.eval_levels[i],
                t,
                s_true: design.model.survival_unchecked(t),
                sigma_proxy: sigma,
                rho_clamped: clamped,
                mean_s_rss,
                mean_s_srs,
                v_rss_mc,
                v_srs_mc,
                mean_gw_rss,
                mean_gw_srs,
                re_true: re_true[i],
                re_mc: v_srs_mc / v_rss_mc,
                re_gw: mean_gw_srs / mean_gw_rss,
                b_mc: settings.b_mc,
                b_true: settings.b_true,
                n_degenerate: main.iter().map(|r| r[i].degenerate).sum(),
                seed,
                calibration_seed: settings.calibration.seed,
            }
        })
        .collect())
}
