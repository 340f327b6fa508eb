//! Balanced RSS and SRS generation with concomitant ranking and independent
//! censoring.
//!
//! Each sample draws from three substreams of the supplied [`RngStream`]:
//! lifetimes, ranking noise and censoring. Censoring therefore never shifts
//! the lifetime sequence, and a `k = 1` RSS sample is bit-identical to an SRS
//! sample drawn from the same stream.

use crate::error::{Error, Result};
use crate::models::{CensoringLaw, SuperpopulationModel, Unit};
use crate::rng::RngStream;
use crate::rss::RankedSetSample;
use crate::survival::CensoredObservation;

const LIFETIME: u64 = 0;
const PROXY: u64 = 1;
const CENSORING: u64 = 2;

fn censor(x: f64, c: f64, rank: usize, cycle: usize) -> CensoredObservation {
    CensoredObservation {
        time: x.min(c),
        event: x <= c,
        rank,
        cycle,
    }
}

/// Lifetime of the unit with the `r`-th smallest proxy (1-based `r`), ties
/// broken by candidate order.
fn judged(units: &mut [Unit], r: usize) -> f64 {
    // stable sort keeps candidate order among equal proxies
    units.sort_by(|a, b| a.proxy.total_cmp(&b.proxy));
    units[r - 1].lifetime
}

/// Balanced RSS: for every cycle and judged rank `r`, draw `k` candidates,
/// rank them by concomitant and measure the `r`-th.
///
/// Observations are stored cycle-major, rank-minor.
pub fn draw_balanced_rss(
    model: &SuperpopulationModel,
    k: usize,
    m: usize,
    censoring: &CensoringLaw,
    rng: RngStream,
) -> Result<RankedSetSample> {
    model.validate_for_sampling()?;
    if k == 0 || m == 0 {
        return Err(Error::EmptyDesign { k, m });
    }
    let mut life = rng.substream(LIFETIME).rng();
    let mut noise = rng.substream(PROXY).rng();
    let mut cens = rng.substream(CENSORING).rng();

    let mut units = Vec::with_capacity(k);
    let mut observations = Vec::with_capacity(k * m);
    for cycle in 1..=m {
        for rank in 1..=k {
            units.clear();
            units.extend((0..k).map(|_| model.draw_unit(&mut life, &mut noise)));
            let x = judged(&mut units, rank);
            let c = censoring.draw(&mut cens);
            observations.push(censor(x, c, rank, cycle));
        }
    }
    RankedSetSample::new(k, m, observations)
}

/// Simple random sample of size `n`, stored as a `k = 1`, `m = n` design.
pub fn draw_srs(
    model: &SuperpopulationModel,
    n: usize,
    censoring: &CensoringLaw,
    rng: RngStream,
) -> Result<RankedSetSample> {
    model.validate()?;
    if n == 0 {
        return Err(Error::EmptyDesign { k: 1, m: 0 });
    }
    let mut life = rng.substream(LIFETIME).rng();
    let mut cens = rng.substream(CENSORING).rng();
    let observations = (1..=n)
        .map(|cycle| {
            let x = model.draw_lifetime(&mut life);
            let c = censoring.draw(&mut cens);
            censor(x, c, 1, cycle)
        })
        .collect();
    RankedSetSample::new(1, n, observations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{censoring_for_fraction, order_statistic_survival, AftModel, WeibullModel};

    fn expo() -> SuperpopulationModel {
        SuperpopulationModel::Weibull(WeibullModel::new(1.0, 1.0))
    }

    #[test]
    fn k1_rss_is_srs() {
        let aft = SuperpopulationModel::Aft(AftModel {
            sigma_u: Some(0.7),
            ..AftModel::new(0.0, 1.5, 0.4)
        });
        let c = censoring_for_fraction(&aft, 0.3).unwrap();
        let s = RngStream::new(99, 5);
        for model in [aft, expo()] {
            assert_eq!(
                draw_balanced_rss(&model, 1, 40, &c, s).unwrap(),
                draw_srs(&model, 40, &c, s).unwrap()
            );
        }
    }

    #[test]
    fn deterministic_per_stream() {
        let s = RngStream::new(1, 2);
        let a = draw_balanced_rss(&expo(), 3, 10, &CensoringLaw::None, s).unwrap();
        let b = draw_balanced_rss(&expo(), 3, 10, &CensoringLaw::None, s).unwrap();
        assert_eq!(a, b);
        let c =
            draw_balanced_rss(&expo(), 3, 10, &CensoringLaw::None, RngStream::new(1, 3)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn censoring_does_not_move_lifetimes() {
        let s = RngStream::new(8, 0);
        let plain = draw_balanced_rss(&expo(), 3, 50, &CensoringLaw::None, s).unwrap();
        let law = censoring_for_fraction(&expo(), 0.5).unwrap();
        let censored = draw_balanced_rss(&expo(), 3, 50, &law, s).unwrap();
        for (a, b) in plain.observations().iter().zip(censored.observations()) {
            assert!(a.event);
            if b.event {
                assert_eq!(a.time, b.time);
            } else {
                assert!(b.time < a.time);
            }
        }
    }

    #[test]
    fn uncalibrated_aft_is_rejected() {
        let m = SuperpopulationModel::Aft(AftModel::new(0.0, 1.5, 0.4));
        assert!(draw_balanced_rss(&m, 2, 2, &CensoringLaw::None, RngStream::new(0, 0)).is_err());
        assert!(
            draw_balanced_rss(&expo(), 0, 2, &CensoringLaw::None, RngStream::new(0, 0)).is_err()
        );
    }

    #[test]
    fn perfect_ranking_rank1_is_minimum() {
        // E[min of two Exp(1)] = 1/2, sd 1/2
        let m = 100_000;
        let s =
            draw_balanced_rss(&expo(), 2, m, &CensoringLaw::None, RngStream::new(3, 0)).unwrap();
        let mean = s.rank_observations(1).iter().map(|o| o.time).sum::<f64>() / m as f64;
        assert!((mean - 0.5).abs() < 3.0 * 0.5 / (m as f64).sqrt(), "{mean}");
    }

    #[test]
    fn rank_marginals_match_order_statistics() {
        let (k, m) = (3, 100_000);
        let s =
            draw_balanced_rss(&expo(), k, m, &CensoringLaw::None, RngStream::new(4, 0)).unwrap();
        for r in 1..=k {
            let mut xs: Vec<f64> = s.rank_observations(r).iter().map(|o| o.time).collect();
            xs.sort_by(f64::total_cmp);
            let mut d: f64 = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let cdf = 1.0 - order_statistic_survival((-x).exp(), k, r).unwrap();
                d = d
                    .max((cdf - i as f64 / m as f64).abs())
                    .max((cdf - (i + 1) as f64 / m as f64).abs());
            }
            assert!(d <= 0.01, "rank {r}: KS {d}");
        }
    }

    #[test]
    fn censored_fraction() {
        let law = censoring_for_fraction(&expo(), 0.3).unwrap();
        let s = draw_balanced_rss(&expo(), 4, 10_000, &law, RngStream::new(6, 0)).unwrap();
        let frac = s.observations().iter().filter(|o| !o.event).count() as f64 / s.n() as f64;
        assert!((frac - 0.3).abs() < 0.01, "{frac}");

        let law = censoring_for_fraction(&expo(), 0.1).unwrap();
        let s = draw_srs(&expo(), 100_000, &law, RngStream::new(7, 0)).unwrap();
        let delta = s.observations().iter().filter(|o| o.event).count() as f64 / s.n() as f64;
        assert!((delta - 0.9).abs() < 0.01, "{delta}");
    }

    #[test]
    fn srs_median() {
        let aft = SuperpopulationModel::Aft(AftModel::new(0.0, 1.5, 0.4));
        let s = draw_srs(&aft, 100_000, &CensoringLaw::None, RngStream::new(2, 0)).unwrap();
        let above = s.observations().iter().filter(|o| o.time > 1.0).count() as f64 / 1e5;
        assert!((above - 0.5).abs() < 0.005);
        let one = draw_srs(&aft, 1, &CensoringLaw::None, RngStream::new(2, 0)).unwrap();
        assert!(one.observations()[0].event);
    }
}
