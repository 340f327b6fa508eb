use std::path::Path;

use rss_survival::models::censoring_for_fraction;
use rss_survival::rss::pooled_greenwood;
use rss_survival::{
    draw_balanced_rss, kaplan_meier, rss_kaplan_meier, CensoredObservation, RankedSetSample,
    RngStream, ShrinkageRule, SuperpopulationModel, WeibullModel,
};

fn sample() -> RankedSetSample {
    let model = SuperpopulationModel::Weibull(WeibullModel::new(1.3, 2.0));
    let cens = censoring_for_fraction(&model, 0.25).unwrap();
    draw_balanced_rss(&model, 3, 15, &cens, RngStream::new(17, 0)).unwrap()
}

#[test]
fn sample_csv_round_trip_is_exact() {
    let s = sample();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let back = RankedSetSample::read_csv(buf.as_slice(), Path::new("mem.csv")).unwrap();
    assert_eq!(back, s);
}

#[test]
fn shuffled_rows_give_the_same_estimate() {
    let s = sample();
    let mut rows = s.observations().to_vec();
    rows.reverse();
    let shuffled = RankedSetSample::from_observations(rows).unwrap();
    let a = rss_kaplan_meier(&s).unwrap();
    let b = rss_kaplan_meier(&shuffled).unwrap();
    assert_eq!(a.grid, b.grid);
    assert_eq!(a.rss_survival, b.rss_survival);
}

#[test]
fn curve_csv_has_rank_and_average_rows() {
    let s = sample();
    let est = rss_kaplan_meier(&s).unwrap();
    let mut buf = Vec::new();
    est.write_csv(&s, ShrinkageRule::default(), &mut buf)
        .unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rss_rows = text.lines().filter(|l| l.starts_with("rss,")).count();
    assert_eq!(rss_rows, est.grid.len());
    let events = s.observations().iter().filter(|o| o.event).count();
    let rank_rows = text.lines().skip(1).count() - rss_rows;
    assert!(rank_rows <= events);
}

#[test]
fn hand_example() {
    // rank 1: 1, 3+ ; rank 2: 2, 4
    let obs = vec![
        CensoredObservation::ranked(1.0, true, 1, 1),
        CensoredObservation::ranked(2.0, true, 2, 1),
        CensoredObservation::ranked(3.0, false, 1, 2),
        CensoredObservation::ranked(4.0, true, 2, 2),
    ];
    let s = RankedSetSample::new(2, 2, obs.clone()).unwrap();
    let est = rss_kaplan_meier(&s).unwrap();
    assert_eq!(est.grid, vec![1.0, 2.0, 4.0]);
    assert_eq!(est.survival_at(1.5), 0.75);
    assert_eq!(est.survival_at(2.0), 0.5);
    assert_eq!(est.survival_at(4.0), 0.25);
    // rank 1 Greenwood at 1: 0.25 * 1/(2*1) = 0.125; rank 2 at 2: 0.25 * 1/2 = 0.125
    assert!((est.greenwood_at(2.5) - (0.125 + 0.125) / 4.0).abs() < 1e-15);

    let pooled = kaplan_meier(&obs).unwrap();
    assert!((pooled.survival_at(2.0) - 0.5).abs() < 1e-15);
    assert!((pooled_greenwood(&s, 2.0).unwrap() - pooled.greenwood_at(2.0)).abs() < 1e-15);
}

#[test]
fn malformed_input_names_the_problem() {
    let err =
        RankedSetSample::read_csv("cycle,rank,time\n1,1,2.0\n".as_bytes(), Path::new("a.csv"))
            .unwrap_err();
    assert!(err.to_string().contains("event"), "{err}");
    let err = RankedSetSample::read_csv(
        "cycle,rank,time,event\n1,1,-2.0,1\n".as_bytes(),
        Path::new("a.csv"),
    )
    .unwrap_err();
    assert_eq!(err.kind(), "invalid_observation");
    let err = RankedSetSample::read_csv(
        "cycle,rank,time,event\n1,1,2.0,1\n1,2,1.0,1\n2,1,3.0,0\n".as_bytes(),
        Path::new("a.csv"),
    )
    .unwrap_err();
    assert_eq!(err.kind(), "unbalanced_design");
}
