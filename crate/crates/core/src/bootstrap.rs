//! Rank-wise multiplier (perturbation) bootstrap for the RSS product-limit
//! estimator.
//!
//! Each replicate reweights the observed counting and risk processes within
//! rank, `dN*_r(u) = sum_j W_rj dN_rj(u)` and `R*_r(u) = sum_j W_rj I(Y_rj >= u)`,
//! with i.i.d. nonnegative mean-one multipliers, and averages the weighted
//! product-limit curves over ranks. No subjects are redrawn.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::par::{self, Jobs};
use crate::rng::RngStream;
use crate::rss::{rss_kaplan_meier, RankedSetSample};
use crate::survival::CensoredObservation;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MultiplierLaw {
    /// `Exp(1)`: mean 1, variance 1.
    #[default]
    UnitExponential,
    /// `Gamma(shape, scale = 1/shape)`: mean 1, variance `1/shape`.
    Gamma { shape: f64 },
    /// Always 1. Test-only: every replicate reproduces the point estimate.
    DegenerateOne,
}

impl MultiplierLaw {
    pub fn variance(&self) -> f64 {
        match *self {
            MultiplierLaw::UnitExponential => 1.0,
            MultiplierLaw::Gamma { shape } => 1.0 / shape,
            MultiplierLaw::DegenerateOne => 0.0,
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        Ok(match *self {
            MultiplierLaw::UnitExponential => Sampler::Exp,
            MultiplierLaw::Gamma { shape } => {
                Sampler::Gamma(Gamma::new(shape, 1.0 / shape).map_err(|e| {
                    Error::parameter("shape", format!("invalid gamma multiplier: {e}"))
                })?)
            }
            MultiplierLaw::DegenerateOne => Sampler::One,
        })
    }
}

enum Sampler {
    Exp,
    Gamma(Gamma<f64>),
    One,
}

impl Sampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Exp => Exp1.sample(rng),
            Sampler::Gamma(g) => g.sample(rng),
            Sampler::One => 1.0,
        }
    }
}

/// Weighted product-limit curve `prod (1 - dN*/R*)` at event times.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCurve {
    pub jump_times: Vec<f64>,
    pub survival: Vec<f64>,
    /// First event time at which the weighted risk set was empty.
    pub exhausted_at: Option<f64>,
}

impl WeightedCurve {
    pub fn survival_at(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&u| u <= t) {
            0 => 1.0,
            n => self.survival[n - 1],
        }
    }

    /// False when the weighted risk set vanished at some event time `<= t`.
    pub fn usable_at(&self, t: f64) -> bool {
        self.exhausted_at.is_none_or(|u| u > t)
    }
}

/// One rank's observations sorted by time (deaths first), ready for reweighting.
struct RankLayout {
    /// Index into the weight vector for each sorted position.
    order: Vec<usize>,
    times: Vec<f64>,
    events: Vec<bool>,
}

impl RankLayout {
    fn new(obs: &[(usize, CensoredObservation)]) -> Self {
        let mut sorted: Vec<_> = obs.to_vec();
        sorted.sort_by(|a, b| {
            a.1.time
                .total_cmp(&b.1.time)
                .then(b.1.event.cmp(&a.1.event))
        });
        Self {
            order: sorted.iter().map(|(i, _)| *i).collect(),
            times: sorted.iter().map(|(_, o)| o.time).collect(),
            events: sorted.iter().map(|(_, o)| o.event).collect(),
        }
    }

    fn curve(&self, weights: &[f64]) -> WeightedCurve {
        let n = self.times.len();
        // suffix sums give R*(u) = sum of weights with Y >= u
        let mut at_risk = vec![0.0; n + 1];
        for i in (0..n).rev() {
            at_risk[i] = at_risk[i + 1] + weights[self.order[i]];
        }
        let mut curve = WeightedCurve {
            jump_times: Vec::new(),
            survival: Vec::new(),
            exhausted_at: None,
        };
        let mut s = 1.0;
        let mut i = 0;
        while i < n {
            let u = self.times[i];
            let r = at_risk[i];
            let mut d = 0.0;
            let mut any_event = false;
            let mut j = i;
            while j < n && self.times[j] == u {
                if self.events[j] {
                    d += weights[self.order[j]];
                    any_event = true;
                }
                j += 1;
            }
            i = j;
            if !any_event {
                continue;
            }
            if r <= 0.0 {
                curve.exhausted_at.get_or_insert(u);
            } else {
                s *= ((r - d) / r).max(0.0);
            }
            curve.jump_times.push(u);
            curve.survival.push(s);
        }
        curve
    }
}

/// Weighted product-limit curve of `obs` with per-observation `weights`.
pub fn weighted_kaplan_meier(
    obs: &[CensoredObservation],
    weights: &[f64],
) -> Result<WeightedCurve> {
    crate::survival::validate_sample(obs)?;
    if weights.len() != obs.len() {
        return Err(Error::parameter(
            "weights",
            format!("{} weights for {} observations", weights.len(), obs.len()),
        ));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::parameter(
            "weights",
            "must be nonnegative and finite",
        ));
    }
    let indexed: Vec<_> = obs.iter().copied().enumerate().collect();
    Ok(RankLayout::new(&indexed).curve(weights))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub t_grid: Vec<f64>,
    pub point_estimate: Vec<f64>,
    pub greenwood_var: Vec<f64>,
    /// Across-replicate variance (n-1 divisor) rescaled by the multiplier
    /// variance; NaN when fewer than two replicates are usable at `t`.
    pub bootstrap_var: Vec<f64>,
    pub n_excluded: Vec<usize>,
    /// `replicates[b][i]` is replicate `b` at `t_grid[i]`; NaN when excluded.
    pub replicates: Vec<Vec<f64>>,
}

impl BootstrapResult {
    /// Columns `t,point_estimate,greenwood_var,bootstrap_var,n_excluded_reps`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t",
            "point_estimate",
            "greenwood_var",
            "bootstrap_var",
            "n_excluded_reps",
        ])?;
        for i in 0..self.t_grid.len() {
            w.write_record([
                sig6(self.t_grid[i]),
                sig6(self.point_estimate[i]),
                sig6(self.greenwood_var[i]),
                sig6(self.bootstrap_var[i]),
                self.n_excluded[i].to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Multiplier bootstrap of the RSS estimate at each time in `t_grid`.
///
/// Replicate `b` draws its multipliers from `rng.substream(b)`, so results do
/// not depend on `jobs`. A replicate is excluded at `t` when some rank's
/// weighted risk set was empty at an event time `<= t`.
pub fn multiplier_bootstrap(
    sample: &RankedSetSample,
    t_grid: &[f64],
    n_reps: usize,
    law: MultiplierLaw,
    rng: RngStream,
    jobs: Jobs,
) -> Result<BootstrapResult> {
    if t_grid.is_empty() {
        return Err(Error::parameter("t_grid", "empty grid"));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::parameter(
            "t_grid",
            format!("times must be nonnegative, got {t}"),
        ));
    }
    if n_reps < 2 {
        return Err(Error::parameter(
            "n_reps",
            format!("need at least 2 replicates, got {n_reps}"),
        ));
    }
    let sampler = law.sampler()?;

    let estimate = rss_kaplan_meier(sample)?;
    let k = sample.k();
    let layouts: Vec<RankLayout> = (1..=k)
        .map(|r| {
            let obs: Vec<_> = sample
                .observations()
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, o)| o.rank == r)
                .collect();
            RankLayout::new(&obs)
        })
        .collect();
    let n = sample.n();

    let replicates: Vec<Vec<f64>> = par::map_indexed(n_reps, jobs, |b| {
        let mut r = rng.substream(b as u64).rng();
        let weights: Vec<f64> = (0..n).map(|_| sampler.draw(&mut r)).collect();
        let curves: Vec<WeightedCurve> = layouts.iter().map(|l| l.curve(&weights)).collect();
        t_grid
            .iter()
            .map(|&t| {
                if curves.iter().all(|c| c.usable_at(t)) {
                    curves.iter().map(|c| c.survival_at(t)).sum::<f64>() / k as f64
                } else {
                    f64::NAN
                }
            })
            .collect()
    });

    let scale = law.variance();
    let mut bootstrap_var = Vec::with_capacity(t_grid.len());
    let mut n_excluded = Vec::with_capacity(t_grid.len());
    for i in 0..t_grid.len() {
        let usable: Vec<f64> = replicates
            .iter()
            .map(|rep| rep[i])
            .filter(|v| !v.is_nan())
            .collect();
        n_excluded.push(n_reps - usable.len());
        let (_, var) = par::mean_var(&usable);
        bootstrap_var.push(if scale > 0.0 { var / scale } else { var });
    }

    Ok(BootstrapResult {
        t_grid: t_grid.to_vec(),
        point_estimate: t_grid.iter().map(|&t| estimate.survival_at(t)).collect(),
        greenwood_var: t_grid.iter().map(|&t| estimate.greenwood_at(t)).collect(),
        bootstrap_var,
        n_excluded,
        replicates,
    })
}
