//! Product-limit (Kaplan–Meier) and Nelson–Aalen estimation on right-censored data.
//!
//! Both estimators are built from the same counting-process summaries: at each
//! distinct event time `u` the number of deaths `dN(u)` and the number still
//! under observation `R(u) = #{Y >= u}`. A [`StepSurvivalCurve`] stores those
//! summaries together with the derived survival, cumulative hazard and their
//! plug-in variances, one entry per event time.
//!
//! Tie rule: deaths and censorings recorded at the same time are both counted
//! in `R(u)`, i.e. deaths are processed first.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One follow-up record: observed time `min(X, C)`, the event indicator, and
/// the (judged) rank and cycle it was measured in. SRS data use rank 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoredObservation {
    pub time: f64,
    pub event: bool,
    pub rank: usize,
    pub cycle: usize,
}

impl CensoredObservation {
    pub fn new(time: f64, event: bool) -> Self {
        Self {
            time,
            event,
            rank: 1,
            cycle: 1,
        }
    }

    pub fn ranked(time: f64, event: bool, rank: usize, cycle: usize) -> Self {
        Self {
            time,
            event,
            rank,
            cycle,
        }
    }

    pub(crate) fn validate(&self, index: usize) -> Result<()> {
        let reason = if !self.time.is_finite() {
            "time is not finite"
        } else if self.time < 0.0 {
            "time is negative"
        } else if self.rank == 0 {
            "rank must be >= 1"
        } else if self.cycle == 0 {
            "cycle must be >= 1"
        } else {
            return Ok(());
        };
        Err(Error::InvalidObservation {
            index,
            reason: reason.to_string(),
        })
    }
}

/// Right-continuous step estimate of the survival function and cumulative
/// hazard, stored at event times only.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSurvivalCurve {
    jump_times: Vec<f64>,
    survival: Vec<f64>,
    cum_hazard: Vec<f64>,
    hazard_var: Vec<f64>,
    greenwood_var: Vec<f64>,
    at_risk: Vec<usize>,
    deaths: Vec<usize>,
    n_at_risk_initial: usize,
    last_time: f64,
    degenerate_from: Option<usize>,
}

/// Value of a [`StepSurvivalCurve`] at a single time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub survival: f64,
    pub greenwood_var: f64,
    pub cum_hazard: f64,
    pub hazard_var: f64,
    /// The last risk set died out at or before `t`; the Greenwood value is a
    /// reported zero, not an estimate.
    pub degenerate: bool,
    /// `t` lies beyond the largest observed time.
    pub extrapolated: bool,
}

impl StepSurvivalCurve {
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    pub fn cum_hazard(&self) -> &[f64] {
        &self.cum_hazard
    }

    pub fn hazard_var(&self) -> &[f64] {
        &self.hazard_var
    }

    pub fn greenwood_var(&self) -> &[f64] {
        &self.greenwood_var
    }

    /// `R(u)` at each jump.
    pub fn at_risk(&self) -> &[usize] {
        &self.at_risk
    }

    /// `dN(u)` at each jump.
    pub fn deaths(&self) -> &[usize] {
        &self.deaths
    }

    pub fn n_at_risk_initial(&self) -> usize {
        self.n_at_risk_initial
    }

    /// Largest observed time, event or censored.
    pub fn last_time(&self) -> f64 {
        self.last_time
    }

    /// Index of the jump at which the risk set was exhausted, if any.
    pub fn degenerate_from(&self) -> Option<usize> {
        self.degenerate_from
    }

    pub fn is_empty(&self) -> bool {
        self.jump_times.is_empty()
    }

    pub fn len(&self) -> usize {
        self.jump_times.len()
    }

    /// Number of jumps at or before `t`.
    fn jumps_through(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&u| u <= t)
    }

    /// Right-continuous lookup.
    pub fn evaluate(&self, t: f64) -> CurvePoint {
        let extrapolated = t > self.last_time;
        match self.jumps_through(t) {
            0 => CurvePoint {
                survival: 1.0,
                greenwood_var: 0.0,
                cum_hazard: 0.0,
                hazard_var: 0.0,
                degenerate: false,
                extrapolated,
            },
            n => {
                let i = n - 1;
                CurvePoint {
                    survival: self.survival[i],
                    greenwood_var: self.greenwood_var[i],
                    cum_hazard: self.cum_hazard[i],
                    hazard_var: self.hazard_var[i],
                    degenerate: self.degenerate_from.is_some_and(|d| i >= d),
                    extrapolated,
                }
            }
        }
    }

    pub fn survival_at(&self, t: f64) -> f64 {
        self.evaluate(t).survival
    }

    pub fn greenwood_at(&self, t: f64) -> f64 {
        self.evaluate(t).greenwood_var
    }

    /// Writes `time,survival,greenwood_var,cum_hazard,hazard_var`, one row per jump.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "time",
            "survival",
            "greenwood_var",
            "cum_hazard",
            "hazard_var",
        ])?;
        for i in 0..self.len() {
            w.write_record([
                crate::fmt::sig6(self.jump_times[i]),
                crate::fmt::sig6(self.survival[i]),
                crate::fmt::sig6(self.greenwood_var[i]),
                crate::fmt::sig6(self.cum_hazard[i]),
                crate::fmt::sig6(self.hazard_var[i]),
            ])?;
        }
        w.flush()
    }
}

pub(crate) fn validate_sample(obs: &[CensoredObservation]) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::EmptySample);
    }
    obs.iter().enumerate().try_for_each(|(i, o)| o.validate(i))
}

/// Nelson–Aalen cumulative hazard with variance `sum dN/R^2`.
///
/// The returned curve carries the product-limit columns too; both come out
/// of the same pass over the risk sets.
pub fn nelson_aalen(obs: &[CensoredObservation]) -> Result<StepSurvivalCurve> {
    fit(obs)
}

/// Kaplan–Meier product-limit estimate with the ties-aware Greenwood variance
/// `S(t)^2 sum dN / (R (R - dN))`.
///
/// When the last risk set dies out (`R = dN`) the survival drops to exactly
/// zero and Greenwood is reported as zero from that jump on, with
/// [`CurvePoint::degenerate`] set.
pub fn kaplan_meier(obs: &[CensoredObservation]) -> Result<StepSurvivalCurve> {
    fit(obs)
}

fn fit(obs: &[CensoredObservation]) -> Result<StepSurvivalCurve> {
    validate_sample(obs)?;

    let mut sorted: Vec<(f64, bool)> = obs.iter().map(|o| (o.time, o.event)).collect();
    // deaths before censorings at equal times
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));

    let n = sorted.len();
    let mut curve = StepSurvivalCurve {
        jump_times: Vec::new(),
        survival: Vec::new(),
        cum_hazard: Vec::new(),
        hazard_var: Vec::new(),
        greenwood_var: Vec::new(),
        at_risk: Vec::new(),
        deaths: Vec::new(),
        n_at_risk_initial: n,
        last_time: sorted[n - 1].0,
        degenerate_from: None,
    };

    let mut s = 1.0;
    let mut lambda = 0.0;
    let mut lambda_var = 0.0;
    let mut gw_sum = 0.0;
    let mut i = 0;
    while i < n {
        let u = sorted[i].0;
        let at_risk = n - i;
        let mut deaths = 0;
        let mut j = i;
        while j < n && sorted[j].0 == u {
            if sorted[j].1 {
                deaths += 1;
            }
            j += 1;
        }
        i = j;
        if deaths == 0 {
            continue;
        }

        let r = at_risk as f64;
        let d = deaths as f64;
        lambda += d / r;
        lambda_var += d / (r * r);
        let gw = if deaths == at_risk {
            s = 0.0;
            curve.degenerate_from.get_or_insert(curve.jump_times.len());
            0.0
        } else {
            s *= (r - d) / r;
            gw_sum += d / (r * (r - d));
            s * s * gw_sum
        };

        curve.jump_times.push(u);
        curve.survival.push(s);
        curve.cum_hazard.push(lambda);
        curve.hazard_var.push(lambda_var);
        curve.greenwood_var.push(gw);
        curve.at_risk.push(at_risk);
        curve.deaths.push(deaths);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn obs(data: &[(f64, bool)]) -> Vec<CensoredObservation> {
        data.iter()
            .map(|&(t, e)| CensoredObservation::new(t, e))
            .collect()
    }

    #[test]
    fn single_death() {
        let c = nelson_aalen(&obs(&[(1.0, true)])).unwrap();
        assert_eq!(c.jump_times(), &[1.0]);
        assert_eq!(c.cum_hazard(), &[1.0]);
        assert_eq!(c.hazard_var(), &[1.0]);
        assert_eq!(c.survival_at(0.999), 1.0);
        assert_eq!(c.survival_at(1.0), 0.0);
        assert_eq!(c.survival_at(5.0), 0.0);
    }

    #[test]
    fn all_censored_has_no_jumps() {
        let c = nelson_aalen(&obs(&[(1.0, false), (2.0, false)])).unwrap();
        assert!(c.is_empty());
        let p = c.evaluate(1.5);
        assert_eq!(p.cum_hazard, 0.0);
        assert_eq!(p.survival, 1.0);
    }

    #[test]
    fn three_point_hand_values() {
        let c = kaplan_meier(&obs(&[(1.0, true), (2.0, false), (3.0, true)])).unwrap();
        assert_eq!(c.jump_times(), &[1.0, 3.0]);
        assert_relative_eq!(c.cum_hazard()[1], 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(c.hazard_var()[1], 10.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(c.survival()[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(c.greenwood_var()[0], 2.0 / 27.0, max_relative = 1e-15);
        assert_eq!(c.survival()[1], 0.0);
        assert_eq!(c.degenerate_from(), Some(1));
    }

    #[test]
    fn evaluate_flags() {
        let c = kaplan_meier(&obs(&[(1.0, true)])).unwrap();
        let p = c.evaluate(0.5);
        assert_eq!(
            (p.survival, p.greenwood_var, p.degenerate),
            (1.0, 0.0, false)
        );
        let p = c.evaluate(1.0);
        assert_eq!(
            (p.survival, p.greenwood_var, p.degenerate),
            (0.0, 0.0, true)
        );
        assert!(!p.extrapolated);
        assert!(c.evaluate(1.5).extrapolated);

        let c = kaplan_meier(&obs(&[(1.0, true), (2.0, false), (3.0, true)])).unwrap();
        let p = c.evaluate(2.5);
        assert_relative_eq!(p.survival, 2.0 / 3.0);
        assert_relative_eq!(p.greenwood_var, 2.0 / 27.0);
        assert!(!p.degenerate);
    }

    #[test]
    fn errors() {
        assert!(matches!(kaplan_meier(&[]), Err(Error::EmptySample)));
        assert!(matches!(
            nelson_aalen(&obs(&[(1.0, true), (-0.5, false)])),
            Err(Error::InvalidObservation { index: 1, .. })
        ));
        assert!(matches!(
            kaplan_meier(&obs(&[(f64::NAN, true)])),
            Err(Error::InvalidObservation { index: 0, .. })
        ));
    }

    #[test]
    fn tied_death_and_censoring_share_the_risk_set() {
        // R(1) = 3 includes the censored unit at 1
        let c = kaplan_meier(&obs(&[(1.0, true), (1.0, false), (2.0, true)])).unwrap();
        assert_eq!(c.at_risk(), &[3, 1]);
        assert_relative_eq!(c.survival()[0], 2.0 / 3.0);
    }

    /// Brute-force empirical survival and binomial variance for uncensored samples.
    #[test]
    fn uncensored_collapse_brute_force() {
        let base = [0.3, 1.1, 0.7, 2.5, 1.1, 0.05];
        for n in 1..=6 {
            let times = &base[..n];
            let c =
                kaplan_meier(&obs(&times.iter().map(|&t| (t, true)).collect::<Vec<_>>())).unwrap();
            for (i, &u) in c.jump_times().iter().enumerate() {
                let above = times.iter().filter(|&&x| x > u).count() as f64;
                let s_emp = above / n as f64;
                assert_relative_eq!(c.survival()[i], s_emp, epsilon = 1e-15);
                let gw = s_emp * (1.0 - s_emp) / n as f64;
                assert_relative_eq!(c.greenwood_var()[i], gw, epsilon = 1e-15);
            }
        }
    }

    fn sample_strategy() -> impl Strategy<Value = Vec<(f64, bool)>> {
        prop::collection::vec(
            ((0u32..40).prop_map(|x| x as f64 * 0.25), any::<bool>()),
            1..60,
        )
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(data in sample_strategy()) {
            let c = kaplan_meier(&obs(&data)).unwrap();
            let mut prev = (1.0, 0.0, 0.0);
            for i in 0..c.len() {
                let s = c.survival()[i];
                prop_assert!((0.0..=1.0).contains(&s));
                prop_assert!(s <= prev.0);
                prop_assert!(c.cum_hazard()[i] >= prev.1);
                prop_assert!(c.hazard_var()[i] >= prev.2);
                prop_assert!(c.greenwood_var()[i] >= 0.0);
                prev = (s, c.cum_hazard()[i], c.hazard_var()[i]);
            }
            for w in c.jump_times().windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }

        #[test]
        fn order_of_input_is_irrelevant(mut data in sample_strategy()) {
            let a = kaplan_meier(&obs(&data)).unwrap();
            data.reverse();
            let b = kaplan_meier(&obs(&data)).unwrap();
            prop_assert_eq!(a, b);
        }

        /// Two deaths at u give exactly the same curve as a single dN(u)=2 step,
        /// checked against a hand-rolled grouped product.
        #[test]
        fn ties_match_grouped_counts(data in sample_strategy()) {
            let c = kaplan_meier(&obs(&data)).unwrap();
            let mut times: Vec<f64> = data.iter().filter(|d| d.1).map(|d| d.0).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let mut s = 1.0;
            for (i, &u) in times.iter().enumerate() {
                let r = data.iter().filter(|d| d.0 >= u).count() as f64;
                let d = data.iter().filter(|x| x.1 && x.0 == u).count() as f64;
                s *= (r - d) / r;
                prop_assert_eq!(c.jump_times()[i], u);
                prop_assert_eq!(c.survival()[i], s);
            }
        }

        /// |log S + Lambda| <= sum (dN/R)^2 when all increments are small.
        #[test]
        fn log_linearization_bound(times in prop::collection::vec(0.0f64..100.0, 10..80),
                                   cens in prop::collection::vec(any::<bool>(), 200)) {
            // pad with late censorings so every R(u) >= 10
            let mut data: Vec<(f64, bool)> = times.iter().zip(&cens).map(|(&t, &e)| (t, e)).collect();
            data.extend((0..10).map(|i| (200.0 + i as f64, false)));
            let c = kaplan_meier(&obs(&data)).unwrap();
            let ratios: Vec<f64> = c.deaths().iter().zip(c.at_risk())
                .map(|(&d, &r)| d as f64 / r as f64).collect();
            prop_assume!(ratios.iter().all(|&x| x <= 0.1));
            let bound: f64 = ratios.iter().map(|x| x * x).sum();
            for i in 0..c.len() {
                let gap = (c.survival()[i].ln() + c.cum_hazard()[i]).abs();
                prop_assert!(gap <= bound + 1e-14, "gap {} > bound {}", gap, bound);
            }
        }
    }
}
