//! Analytic per-observation variance table for the Weibull design.

use std::io::Write;

use super::cell::eval_times_from_levels;
use super::config::{Config, ModelKind};
use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::models::{
    asymptotic_km_variance, censoring_for_fraction, dell_clutter_sigma, estimate_mixing_matrix,
    rss_asymptotic_variance, RankLaw,
};
use crate::par::Jobs;
use crate::rng::{combine, RngStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelRow {
    pub k: usize,
    pub rho: f64,
    pub p_cens: f64,
    pub level: f64,
    pub t: f64,
    pub v_srs: f64,
    pub v_perf: f64,
    pub v_judg: f64,
    pub re_perf: f64,
    pub re_judg: f64,
}

pub const KERNEL_COLUMNS: [&str; 10] = [
    "k", "rho", "p_cens", "level", "t", "v_srs", "v_perf", "v_judg", "re_perf", "re_judg",
];

/// One row per `(k, rho, p_cens, level)`; judged kernels use a mixing matrix
/// estimated from `config.mixing_sets` candidate sets.
pub fn kernel_table(config: &Config, jobs: Jobs) -> Result<Vec<KernelRow>> {
    if config.model != ModelKind::Weibull {
        return Err(Error::parameter(
            "model",
            "analytic kernels need the weibull model",
        ));
    }
    let model = config.superpopulation();
    let times = eval_times_from_levels(&model, &config.levels)?;
    let mut rows = Vec::new();
    for (ki, &k) in config.k.iter().enumerate() {
        for (ri, &rho) in config.rho.iter().enumerate() {
            let judged =
                model.with_ranking_noise(dell_clutter_sigma(model.variance(), rho)?.sqrt());
            let seed = combine(combine(config.seed, ki as u64), ri as u64);
            let mixing = estimate_mixing_matrix(
                &judged,
                k,
                config.mixing_sets,
                RngStream::new(seed, 0),
                jobs,
            )?;
            for &p_cens in &config.p_cens {
                let censoring = censoring_for_fraction(&model, p_cens)?;
                for (&level, &t) in config.levels.iter().zip(&times) {
                    let v_srs = asymptotic_km_variance(&model, &censoring, RankLaw::Population, t)?;
                    let v_perf = rss_asymptotic_variance(&model, &censoring, k, None, t)?;
                    let v_judg = rss_asymptotic_variance(&model, &censoring, k, Some(&mixing), t)?;
                    rows.push(KernelRow {
                        k,
                        rho,
                        p_cens,
                        level,
                        t,
                        v_srs,
                        v_perf,
                        v_judg,
                        re_perf: v_srs / v_perf,
                        re_judg: v_srs / v_judg,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_kernel_table<W: Write>(rows: &[KernelRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(KERNEL_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            sig6(r.rho),
            sig6(r.p_cens),
            sig6(r.level),
            sig6(r.t),
            sig6(r.v_srs),
            sig6(r.v_perf),
            sig6(r.v_judg),
            sig6(r.re_perf),
            sig6(r.re_judg),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_shape() {
        let config = Config {
            model: ModelKind::Weibull,
            k: vec![2, 4],
            rho: vec![0.5, 1.0],
            p_cens: vec![0.0, 0.3],
            levels: vec![0.75, 0.5, 0.25],
            mixing_sets: 50_000,
            ..Config::default()
        };
        let rows = kernel_table(&config, Jobs::SEQUENTIAL).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2 * 3);
        for r in &rows {
            assert!(
                r.v_perf <= r.v_judg * (1.0 + 1e-9) && r.v_judg <= r.v_srs,
                "{r:?}"
            );
            assert!(r.re_perf >= 1.0);
        }
        let mut buf = Vec::new();
        write_kernel_table(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            rows.len() + 1
        );
    }

    #[test]
    fn aft_is_rejected() {
        assert!(kernel_table(&Config::default(), Jobs::SEQUENTIAL).is_err());
    }
}
