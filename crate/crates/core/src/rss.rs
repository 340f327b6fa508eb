//! Rank-wise estimation on balanced ranked-set samples.
//!
//! The RSS survival estimate is the equal-weight average of the `k` within-rank
//! product-limit curves; its plug-in variance is the sum of the rank Greenwood
//! variances over `k^2`. For thin tails a pooled (rank-ignoring) Greenwood is
//! also available, along with a step-rule blend of the two.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::survival::{kaplan_meier, validate_sample, CensoredObservation, StepSurvivalCurve};

/// Balanced `k x m` ranked-set sample: exactly `m` observations per rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSetSample {
    k: usize,
    m: usize,
    observations: Vec<CensoredObservation>,
}

impl RankedSetSample {
    pub fn new(k: usize, m: usize, observations: Vec<CensoredObservation>) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::EmptyDesign { k, m });
        }
        validate_sample(&observations)?;
        let mut per_rank = vec![0usize; k];
        for (index, o) in observations.iter().enumerate() {
            if o.rank > k || o.cycle > m {
                return Err(Error::InvalidObservation {
                    index,
                    reason: format!(
                        "rank {} / cycle {} outside the {k}x{m} design",
                        o.rank, o.cycle
                    ),
                });
            }
            per_rank[o.rank - 1] += 1;
        }
        if let Some((r, &found)) = per_rank.iter().enumerate().find(|(_, &c)| c != m) {
            return Err(Error::UnbalancedDesign {
                rank: r + 1,
                found,
                expected: m,
            });
        }
        Ok(Self { k, m, observations })
    }

    /// Infers `k` and `m` from the largest rank and cycle labels.
    pub fn from_observations(observations: Vec<CensoredObservation>) -> Result<Self> {
        let k = observations.iter().map(|o| o.rank).max().unwrap_or(0);
        let m = observations.iter().map(|o| o.cycle).max().unwrap_or(0);
        if observations.is_empty() {
            return Err(Error::EmptySample);
        }
        Self::new(k, m, observations)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn observations(&self) -> &[CensoredObservation] {
        &self.observations
    }

    /// Observations of rank `r` (1-based), in storage order.
    pub fn rank_observations(&self, r: usize) -> Vec<CensoredObservation> {
        self.observations
            .iter()
            .copied()
            .filter(|o| o.rank == r)
            .collect()
    }

    /// `R_r(t) = #{Y >= t}` within rank `r`.
    pub fn at_risk(&self, r: usize, t: f64) -> usize {
        self.observations
            .iter()
            .filter(|o| o.rank == r && o.time >= t)
            .count()
    }

    pub fn min_at_risk(&self, t: f64) -> usize {
        let mut counts = vec![0usize; self.k];
        for o in self.observations.iter().filter(|o| o.time >= t) {
            counts[o.rank - 1] += 1;
        }
        counts.into_iter().min().unwrap_or(0)
    }

    /// Columns `cycle,rank,time,event` (event as 0/1).
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cycle", "rank", "time", "event"])?;
        for o in &self.observations {
            w.write_record([
                o.cycle.to_string(),
                o.rank.to_string(),
                format!("{:?}", o.time),
                u8::from(o.event).to_string(),
            ])?;
        }
        w.flush()
    }

    /// Reads the `cycle,rank,time,event` layout; `event` accepts 0/1 or true/false.
    pub fn read_csv<R: Read>(input: R, path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let headers = reader.headers().map_err(csv_err)?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Input {
                    path: path.to_path_buf(),
                    message: format!("missing column `{name}`"),
                })
        };
        let (ci, ri, ti, ei) = (
            column("cycle")?,
            column("rank")?,
            column("time")?,
            column("event")?,
        );
        let mut observations = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let field = |i: usize, name: &str| -> Result<&str> {
                record.get(i).ok_or_else(|| Error::Input {
                    path: path.to_path_buf(),
                    message: format!("row {}: missing `{name}`", line + 1),
                })
            };
            let bad = |name: &str, value: &str| Error::Input {
                path: path.to_path_buf(),
                message: format!("row {}: cannot parse `{name}` from {value:?}", line + 1),
            };
            let cycle = field(ci, "cycle")?;
            let rank = field(ri, "rank")?;
            let time = field(ti, "time")?;
            let event = field(ei, "event")?;
            observations.push(CensoredObservation {
                cycle: cycle.parse().map_err(|_| bad("cycle", cycle))?,
                rank: rank.parse().map_err(|_| bad("rank", rank))?,
                time: time.parse().map_err(|_| bad("time", time))?,
                event: match event {
                    "1" | "true" | "TRUE" => true,
                    "0" | "false" | "FALSE" => false,
                    _ => return Err(bad("event", event)),
                },
            });
        }
        Self::from_observations(observations)
    }
}

/// Rank curves plus the equal-weight average on the union of rank event times.
#[derive(Debug, Clone, PartialEq)]
pub struct RssSurvivalEstimate {
    pub rank_curves: Vec<StepSurvivalCurve>,
    pub grid: Vec<f64>,
    pub rss_survival: Vec<f64>,
    pub rss_greenwood: Vec<f64>,
    pub rss_cum_hazard: Vec<f64>,
    pub rss_hazard_var: Vec<f64>,
    /// Product-limit curve of all `n` observations with ranks ignored.
    pub pooled: StepSurvivalCurve,
    pub pooled_greenwood: Vec<f64>,
}

impl RssSurvivalEstimate {
    pub fn k(&self) -> usize {
        self.rank_curves.len()
    }

    /// `(1/k) sum_r S_r(t)`, each rank evaluated right-continuously.
    pub fn survival_at(&self, t: f64) -> f64 {
        let sum: f64 = self
            .rank_curves
            .iter()
            .map(|c| c.evaluate(t).survival)
            .sum();
        sum / self.k() as f64
    }

    /// `(1/k^2) sum_r Greenwood_r(t)`.
    pub fn greenwood_at(&self, t: f64) -> f64 {
        let sum: f64 = self
            .rank_curves
            .iter()
            .map(|c| c.evaluate(t).greenwood_var)
            .sum();
        sum / (self.k() * self.k()) as f64
    }

    pub fn cum_hazard_at(&self, t: f64) -> f64 {
        let sum: f64 = self
            .rank_curves
            .iter()
            .map(|c| c.evaluate(t).cum_hazard)
            .sum();
        sum / self.k() as f64
    }

    pub fn hazard_var_at(&self, t: f64) -> f64 {
        let sum: f64 = self
            .rank_curves
            .iter()
            .map(|c| c.evaluate(t).hazard_var)
            .sum();
        sum / (self.k() * self.k()) as f64
    }

    pub fn pooled_greenwood_at(&self, t: f64) -> f64 {
        self.pooled.evaluate(t).greenwood_var
    }

    /// True when any rank curve has exhausted its risk set by `t`.
    pub fn any_degenerate_at(&self, t: f64) -> bool {
        self.rank_curves.iter().any(|c| c.evaluate(t).degenerate)
    }

    /// Rows `rank,time,survival,greenwood_var,cum_hazard,hazard_var,pooled_greenwood,shrunk_greenwood`.
    ///
    /// Per-rank rows carry the rank number and leave the last two columns
    /// empty; rows labelled `rss` hold the averaged estimate on the union grid.
    pub fn write_csv<W: Write>(
        &self,
        sample: &RankedSetSample,
        shrinkage: ShrinkageRule,
        out: W,
    ) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "rank",
            "time",
            "survival",
            "greenwood_var",
            "cum_hazard",
            "hazard_var",
            "pooled_greenwood",
            "shrunk_greenwood",
        ])?;
        for (r, c) in self.rank_curves.iter().enumerate() {
            for i in 0..c.len() {
                w.write_record([
                    (r + 1).to_string(),
                    sig6(c.jump_times()[i]),
                    sig6(c.survival()[i]),
                    sig6(c.greenwood_var()[i]),
                    sig6(c.cum_hazard()[i]),
                    sig6(c.hazard_var()[i]),
                    String::new(),
                    String::new(),
                ])?;
            }
        }
        for (i, &t) in self.grid.iter().enumerate() {
            let shrunk = shrinkage.apply(
                self.rss_greenwood[i],
                self.pooled_greenwood[i],
                sample.min_at_risk(t),
            );
            w.write_record([
                "rss".to_string(),
                sig6(t),
                sig6(self.rss_survival[i]),
                sig6(self.rss_greenwood[i]),
                sig6(self.rss_cum_hazard[i]),
                sig6(self.rss_hazard_var[i]),
                sig6(self.pooled_greenwood[i]),
                sig6(shrunk),
            ])?;
        }
        w.flush()
    }
}

/// Rank-wise product-limit curves and their equal-weight average.
///
/// A rank without events contributes the constant 1.
pub fn rss_kaplan_meier(sample: &RankedSetSample) -> Result<RssSurvivalEstimate> {
    let k = sample.k();
    let rank_curves = (1..=k)
        .map(|r| kaplan_meier(&sample.rank_observations(r)))
        .collect::<Result<Vec<_>>>()?;
    let pooled = kaplan_meier(sample.observations())?;

    let mut grid: Vec<f64> = rank_curves
        .iter()
        .flat_map(|c| c.jump_times().iter().copied())
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut est = RssSurvivalEstimate {
        rank_curves,
        rss_survival: Vec::with_capacity(grid.len()),
        rss_greenwood: Vec::with_capacity(grid.len()),
        rss_cum_hazard: Vec::with_capacity(grid.len()),
        rss_hazard_var: Vec::with_capacity(grid.len()),
        pooled_greenwood: Vec::with_capacity(grid.len()),
        grid: Vec::new(),
        pooled,
    };
    for &t in &grid {
        est.rss_survival.push(est.survival_at(t));
        est.rss_greenwood.push(est.greenwood_at(t));
        est.rss_cum_hazard.push(est.cum_hazard_at(t));
        est.rss_hazard_var.push(est.hazard_var_at(t));
        est.pooled_greenwood.push(est.pooled_greenwood_at(t));
    }
    est.grid = grid;
    Ok(est)
}

/// `(1/k^2) sum_r Greenwood_r(t)`.
pub fn rss_greenwood(estimate: &RssSurvivalEstimate, t: f64) -> f64 {
    estimate.greenwood_at(t)
}

/// Greenwood variance at `t` of the product-limit curve of all observations,
/// ranks discarded.
pub fn pooled_greenwood(sample: &RankedSetSample, t: f64) -> Result<f64> {
    Ok(kaplan_meier(sample.observations())?.greenwood_at(t))
}

/// Returns `rank_avg_var` when every rank still has at least `threshold`
/// units at risk, and `(1-weight) rank_avg_var + weight pooled_var` otherwise.
pub fn shrunk_variance(
    rank_avg_var: f64,
    pooled_var: f64,
    min_at_risk: usize,
    threshold: usize,
    weight: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::parameter(
            "weight",
            format!("must lie in [0,1], got {weight}"),
        ));
    }
    if !(rank_avg_var >= 0.0) || !(pooled_var >= 0.0) {
        return Err(Error::parameter(
            "variance",
            "variances must be nonnegative",
        ));
    }
    Ok(if min_at_risk >= threshold {
        rank_avg_var
    } else {
        (1.0 - weight) * rank_avg_var + weight * pooled_var
    })
}

/// Step rule for blending the rank-average Greenwood toward the pooled one
/// when some rank's risk set falls below `threshold`.
///
/// The defaults (5 at risk, weight 0.5) are a placeholder schedule; tune them
/// per application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkageRule {
    pub threshold: usize,
    pub weight: f64,
}

impl Default for ShrinkageRule {
    fn default() -> Self {
        Self {
            threshold: 5,
            weight: 0.5,
        }
    }
}

impl ShrinkageRule {
    pub fn new(threshold: usize, weight: f64) -> Result<Self> {
        shrunk_variance(0.0, 0.0, 0, threshold, weight)?;
        Ok(Self { threshold, weight })
    }

    fn apply(&self, rank_avg: f64, pooled: f64, min_at_risk: usize) -> f64 {
        if min_at_risk >= self.threshold {
            rank_avg
        } else {
            (1.0 - self.weight) * rank_avg + self.weight * pooled
        }
    }

    /// Blended variance at `t` for an estimate computed from `sample`.
    pub fn variance_at(
        &self,
        estimate: &RssSurvivalEstimate,
        sample: &RankedSetSample,
        t: f64,
    ) -> f64 {
        self.apply(
            estimate.greenwood_at(t),
            estimate.pooled_greenwood_at(t),
            sample.min_at_risk(t),
        )
    }
}
