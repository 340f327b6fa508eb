//! Superpopulation laws, order-statistic and judged-rank distributions,
//! ranking-noise calibration, censoring construction, and the asymptotic
//! variance kernels of the product-limit estimator.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::{erf, gamma::gamma};

use crate::error::{Error, Result};
use crate::par::{self, Jobs};
use crate::quadrature;
use crate::rng::RngStream;

/// Log-normal accelerated failure time law `X = exp(mu - beta Z + eps)`,
/// ranked through the concomitant `Z + U`, `U ~ N(0, sigma_u^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AftModel {
    pub mu: f64,
    pub beta: f64,
    pub sigma_eps: f64,
    /// `None` until calibrated.
    pub sigma_u: Option<f64>,
}

impl AftModel {
    pub fn new(mu: f64, beta: f64, sigma_eps: f64) -> Self {
        Self {
            mu,
            beta,
            sigma_eps,
            sigma_u: None,
        }
    }

    /// Standard deviation of `log X`.
    pub fn log_sd(&self) -> f64 {
        (self.beta * self.beta + self.sigma_eps * self.sigma_eps).sqrt()
    }
}

/// Weibull law `S(t) = exp(-(t/scale)^shape)`, ranked through `X + Z`,
/// `Z ~ N(0, sigma_z^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullModel {
    pub shape: f64,
    pub scale: f64,
    pub sigma_z: f64,
}

impl WeibullModel {
    pub fn new(shape: f64, scale: f64) -> Self {
        Self {
            shape,
            scale,
            sigma_z: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SuperpopulationModel {
    Aft(AftModel),
    Weibull(WeibullModel),
}

/// One candidate unit: its lifetime and the concomitant used to rank it.
///
/// The concomitant is oriented so that larger values go with longer
/// lifetimes; for the AFT law this is `-(Z + U)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unit {
    pub lifetime: f64,
    pub proxy: f64,
}

fn std_normal_sf(z: f64) -> f64 {
    0.5 * erf::erfc(z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::parameter(
            name,
            format!("must be positive and finite, got {x}"),
        ))
    }
}

fn check_nonnegative(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::parameter(
            name,
            format!("must be nonnegative and finite, got {x}"),
        ))
    }
}

impl SuperpopulationModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            SuperpopulationModel::Aft(m) => {
                if !m.mu.is_finite() || !m.beta.is_finite() {
                    return Err(Error::parameter("mu/beta", "must be finite"));
                }
                check_positive("sigma_eps", m.sigma_eps)?;
                if let Some(s) = m.sigma_u {
                    check_nonnegative("sigma_u", s)?;
                }
                Ok(())
            }
            SuperpopulationModel::Weibull(m) => {
                check_positive("shape", m.shape)?;
                check_positive("scale", m.scale)?;
                check_nonnegative("sigma_z", m.sigma_z)
            }
        }
    }

    /// Sampling needs the ranking noise to be fixed.
    pub(crate) fn validate_for_sampling(&self) -> Result<()> {
        self.validate()?;
        if let SuperpopulationModel::Aft(AftModel { sigma_u: None, .. }) = self {
            return Err(Error::parameter(
                "sigma_u",
                "AFT concomitant noise is uncalibrated",
            ));
        }
        Ok(())
    }

    /// `P(X > t)`, without argument checks.
    pub fn survival_unchecked(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self {
            SuperpopulationModel::Aft(m) => std_normal_sf((t.ln() - m.mu) / m.log_sd()),
            SuperpopulationModel::Weibull(m) => (-(t / m.scale).powf(m.shape)).exp(),
        }
    }

    /// `P(X > t)`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::parameter(
                "t",
                format!("must be nonnegative, got {t}"),
            ));
        }
        Ok(self.survival_unchecked(t))
    }

    pub fn density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return match self {
                SuperpopulationModel::Weibull(m) if m.shape == 1.0 => 1.0 / m.scale,
                _ => 0.0,
            };
        }
        match self {
            SuperpopulationModel::Aft(m) => {
                let s = m.log_sd();
                std_normal_pdf((t.ln() - m.mu) / s) / (t * s)
            }
            SuperpopulationModel::Weibull(m) => {
                let z = t / m.scale;
                m.shape / m.scale * z.powf(m.shape - 1.0) * (-z.powf(m.shape)).exp()
            }
        }
    }

    /// The time at which `S(t) = level`.
    pub fn time_at_survival(&self, level: f64) -> Result<f64> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::parameter(
                "level",
                format!("must lie in (0,1), got {level}"),
            ));
        }
        Ok(match self {
            SuperpopulationModel::Aft(m) => {
                let z = Normal::standard().inverse_cdf(1.0 - level);
                (m.mu + m.log_sd() * z).exp()
            }
            SuperpopulationModel::Weibull(m) => m.scale * (-level.ln()).powf(1.0 / m.shape),
        })
    }

    pub fn mean(&self) -> f64 {
        match self {
            SuperpopulationModel::Aft(m) => (m.mu + 0.5 * m.log_sd().powi(2)).exp(),
            SuperpopulationModel::Weibull(m) => m.scale * gamma(1.0 + 1.0 / m.shape),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            SuperpopulationModel::Aft(m) => {
                let s2 = m.log_sd().powi(2);
                (s2.exp() - 1.0) * (2.0 * m.mu + s2).exp()
            }
            SuperpopulationModel::Weibull(m) => {
                let g1 = gamma(1.0 + 1.0 / m.shape);
                m.scale * m.scale * (gamma(1.0 + 2.0 / m.shape) - g1 * g1)
            }
        }
    }

    /// Lifetime only; consumes exactly the lifetime draws that
    /// [`draw_unit`](Self::draw_unit) consumes from `life`.
    pub fn draw_lifetime<R: Rng>(&self, life: &mut R) -> f64 {
        match self {
            SuperpopulationModel::Aft(m) => {
                let z: f64 = life.sample(StandardNormal);
                let e: f64 = life.sample(StandardNormal);
                (m.mu - m.beta * z + m.sigma_eps * e).exp()
            }
            SuperpopulationModel::Weibull(m) => {
                let u: f64 = life.random();
                m.scale * (-(1.0 - u).ln()).powf(1.0 / m.shape)
            }
        }
    }

    /// Lifetime from `life`, ranking noise from `proxy`.
    pub fn draw_unit<R: Rng, Q: Rng>(&self, life: &mut R, proxy: &mut Q) -> Unit {
        match self {
            SuperpopulationModel::Aft(m) => {
                let z: f64 = life.sample(StandardNormal);
                let e: f64 = life.sample(StandardNormal);
                let u: f64 = proxy.sample(StandardNormal);
                Unit {
                    lifetime: (m.mu - m.beta * z + m.sigma_eps * e).exp(),
                    proxy: -(z + m.sigma_u.unwrap_or(0.0) * u),
                }
            }
            SuperpopulationModel::Weibull(m) => {
                let x = self.draw_lifetime(life);
                let noise: f64 = proxy.sample(StandardNormal);
                Unit {
                    lifetime: x,
                    proxy: x + m.sigma_z * noise,
                }
            }
        }
    }

    /// Copy with the ranking-noise standard deviation replaced.
    pub fn with_ranking_noise(&self, sigma: f64) -> Self {
        match *self {
            SuperpopulationModel::Aft(m) => SuperpopulationModel::Aft(AftModel {
                sigma_u: Some(sigma),
                ..m
            }),
            SuperpopulationModel::Weibull(m) => SuperpopulationModel::Weibull(WeibullModel {
                sigma_z: sigma,
                ..m
            }),
        }
    }

    pub fn ranking_noise(&self) -> Option<f64> {
        match self {
            SuperpopulationModel::Aft(m) => m.sigma_u,
            SuperpopulationModel::Weibull(m) => Some(m.sigma_z),
        }
    }
}

/// Analytic survival of the model at `t`.
pub fn population_survival(model: &SuperpopulationModel, t: f64) -> Result<f64> {
    model.survival(t)
}

// ---------------------------------------------------------------------------
// Censoring
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CensoringLaw {
    None,
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
}

impl CensoringLaw {
    /// `K(u) = P(C > u)`.
    pub fn survival(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 1.0;
        }
        match *self {
            CensoringLaw::None => 1.0,
            CensoringLaw::Exponential { rate } => (-rate * u).exp(),
            CensoringLaw::Weibull { shape, scale } => (-(u / scale).powf(shape)).exp(),
        }
    }

    /// A censoring time; `+inf` when there is no censoring.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            CensoringLaw::None => f64::INFINITY,
            CensoringLaw::Exponential { rate } => {
                let u: f64 = rng.random();
                -(1.0 - u).ln() / rate
            }
            CensoringLaw::Weibull { shape, scale } => {
                let u: f64 = rng.random();
                scale * (-(1.0 - u).ln()).powf(1.0 / shape)
            }
        }
    }

    /// Hazard rate when the law is exponential (including Weibull shape 1).
    fn exponential_rate(&self) -> Option<f64> {
        match *self {
            CensoringLaw::None => Some(0.0),
            CensoringLaw::Exponential { rate } => Some(rate),
            CensoringLaw::Weibull { shape: 1.0, scale } => Some(1.0 / scale),
            CensoringLaw::Weibull { .. } => None,
        }
    }
}

/// Censoring law that censors a fraction `p_cens` of lifetimes.
///
/// AFT: exponential with rate `-log(1-p)/E[X]`, `E[X]` the log-normal mean.
/// Weibull: same shape, scale `scale * ((1-p)/p)^(1/shape)`, which censors
/// exactly `p`.
pub fn censoring_for_fraction(model: &SuperpopulationModel, p_cens: f64) -> Result<CensoringLaw> {
    if !(0.0..1.0).contains(&p_cens) {
        return Err(Error::parameter(
            "p_cens",
            format!("must lie in [0,1), got {p_cens}"),
        ));
    }
    if p_cens == 0.0 {
        return Ok(CensoringLaw::None);
    }
    Ok(match model {
        SuperpopulationModel::Aft(_) => CensoringLaw::Exponential {
            rate: -(1.0 - p_cens).ln() / model.mean(),
        },
        SuperpopulationModel::Weibull(m) => CensoringLaw::Weibull {
            shape: m.shape,
            scale: m.scale * ((1.0 - p_cens) / p_cens).powf(1.0 / m.shape),
        },
    })
}

// ---------------------------------------------------------------------------
// Order statistics and judged-rank mixtures
// ---------------------------------------------------------------------------

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_rank(k: usize, r: usize) -> Result<()> {
    if k == 0 || r == 0 || r > k {
        return Err(Error::parameter("r", format!("rank {r} outside 1..={k}")));
    }
    Ok(())
}

/// `P(X_(r) > t)` for the `r`-th smallest of `k` draws, given `S(t)`:
/// `sum_{i<r} C(k,i) F^i S^(k-i)`.
pub fn order_statistic_survival(survival: f64, k: usize, r: usize) -> Result<f64> {
    check_rank(k, r)?;
    Ok(os_survival(survival, k, r))
}

fn os_survival(s: f64, k: usize, r: usize) -> f64 {
    let f = 1.0 - s;
    (0..r)
        .map(|i| binomial(k, i) * f.powi(i as i32) * s.powi((k - i) as i32))
        .sum()
}

/// Density multiplier: `f_(r)(t) = factor * f(t)`.
fn os_density_factor(s: f64, k: usize, r: usize) -> f64 {
    let f = 1.0 - s;
    k as f64 * binomial(k - 1, r - 1) * f.powi(r as i32 - 1) * s.powi((k - r) as i32)
}

/// `w[r][j] = P(true rank j | judged rank r)`, stored row-major, 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingMatrix {
    k: usize,
    weights: Vec<f64>,
    /// Number of candidate sets behind the estimate; `0` for exact matrices.
    n_sets: usize,
}

impl MixingMatrix {
    pub fn identity(k: usize) -> Self {
        let mut weights = vec![0.0; k * k];
        for r in 0..k {
            weights[r * k + r] = 1.0;
        }
        Self {
            k,
            weights,
            n_sets: 0,
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::parameter(
                "rows",
                "mixing matrix must be square and nonempty",
            ));
        }
        for row in &rows {
            if row.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::parameter("rows", "entries must lie in [0,1]"));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::parameter("rows", "rows must sum to 1"));
            }
        }
        Ok(Self {
            k,
            weights: rows.into_iter().flatten().collect(),
            n_sets: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_sets(&self) -> usize {
        self.n_sets
    }

    /// 0-based judged rank `r`, true rank `j`.
    pub fn get(&self, r: usize, j: usize) -> f64 {
        self.weights[r * self.k + j]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.k..(r + 1) * self.k]
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).iter().sum()
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.k).map(|r| self.get(r, j)).sum()
    }

    /// Monte-Carlo standard error of an entry (zero for exact matrices).
    pub fn standard_error(&self, r: usize, j: usize) -> f64 {
        if self.n_sets == 0 {
            return 0.0;
        }
        let w = self.get(r, j);
        (w * (1.0 - w) / self.n_sets as f64).sqrt()
    }

    /// `P(T = j)` under equal judged-rank frequencies: column sums over `k`.
    pub fn true_rank_masses(&self) -> Vec<f64> {
        (0..self.k)
            .map(|j| self.column_sum(j) / self.k as f64)
            .collect()
    }
}

const MIXING_BLOCK: usize = 1 << 14;

/// Tallies `P(T = j | J = r)` over `n_sets` simulated candidate sets of size
/// `k`, using every judged position of every set.
///
/// Work is split into fixed blocks, each on its own substream, so the result
/// does not depend on `jobs`.
pub fn estimate_mixing_matrix(
    model: &SuperpopulationModel,
    k: usize,
    n_sets: usize,
    rng: RngStream,
    jobs: Jobs,
) -> Result<MixingMatrix> {
    model.validate_for_sampling()?;
    if k == 0 {
        return Err(Error::parameter("k", "must be >= 1"));
    }
    if n_sets == 0 {
        return Err(Error::parameter("n_sets", "must be >= 1"));
    }
    let n_blocks = n_sets.div_ceil(MIXING_BLOCK);
    let blocks = par::map_indexed(n_blocks, jobs, |b| {
        let sets = MIXING_BLOCK.min(n_sets - b * MIXING_BLOCK);
        let stream = rng.substream(b as u64);
        let mut life = stream.substream(0).rng();
        let mut noise = stream.substream(1).rng();
        let mut counts = vec![0u64; k * k];
        let mut units = Vec::with_capacity(k);
        let mut by_proxy: Vec<usize> = Vec::with_capacity(k);
        let mut true_rank = vec![0usize; k];
        let mut by_life: Vec<usize> = Vec::with_capacity(k);
        for _ in 0..sets {
            units.clear();
            units.extend((0..k).map(|_| model.draw_unit(&mut life, &mut noise)));
            by_life.clear();
            by_life.extend(0..k);
            by_life.sort_by(|&a, &b| {
                units[a]
                    .lifetime
                    .total_cmp(&units[b].lifetime)
                    .then(a.cmp(&b))
            });
            for (pos, &i) in by_life.iter().enumerate() {
                true_rank[i] = pos;
            }
            by_proxy.clear();
            by_proxy.extend(0..k);
            by_proxy.sort_by(|&a, &b| units[a].proxy.total_cmp(&units[b].proxy).then(a.cmp(&b)));
            for (r, &i) in by_proxy.iter().enumerate() {
                counts[r * k + true_rank[i]] += 1;
            }
        }
        counts
    });
    let mut totals = vec![0u64; k * k];
    for block in blocks {
        for (t, c) in totals.iter_mut().zip(block) {
            *t += c;
        }
    }
    Ok(MixingMatrix {
        k,
        weights: totals
            .into_iter()
            .map(|c| c as f64 / n_sets as f64)
            .collect(),
        n_sets,
    })
}

// ---------------------------------------------------------------------------
// Ranking-noise calibration
// ---------------------------------------------------------------------------

/// Dell–Clutter noise variance `var_x (rho^-2 - 1)` for a proxy `X + Z`.
pub fn dell_clutter_sigma(var_x: f64, rho: f64) -> Result<f64> {
    check_positive("var_x", var_x)?;
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::parameter(
            "rho",
            format!("must lie in (0,1], got {rho}"),
        ));
    }
    Ok(var_x * (rho.powi(-2) - 1.0))
}

/// Sample moments of `(Z, U, X)` needed to evaluate `corr(Z + s U, X)` for any `s`.
struct ConcomitantMoments {
    var_z: f64,
    var_u: f64,
    var_x: f64,
    cov_zu: f64,
    cov_zx: f64,
    cov_ux: f64,
}

impl ConcomitantMoments {
    fn correlation(&self, s: f64) -> f64 {
        let cov = self.cov_zx + s * self.cov_ux;
        let var_p = self.var_z + 2.0 * s * self.cov_zu + s * s * self.var_u;
        (cov / (var_p * self.var_x).sqrt()).abs()
    }
}

fn aft_moments(m: &AftModel, n: usize, rng: RngStream) -> ConcomitantMoments {
    let mut r = rng.rng();
    let mut sum = [0.0f64; 3];
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = r.sample(StandardNormal);
        let e: f64 = r.sample(StandardNormal);
        let u: f64 = r.sample(StandardNormal);
        let x = (m.mu - m.beta * z + m.sigma_eps * e).exp();
        sum[0] += z;
        sum[1] += u;
        sum[2] += x;
        draws.push([z, u, x]);
    }
    let nf = n as f64;
    let mean = sum.map(|s| s / nf);
    let mut c = [0.0f64; 6];
    for d in &draws {
        let (dz, du, dx) = (d[0] - mean[0], d[1] - mean[1], d[2] - mean[2]);
        c[0] += dz * dz;
        c[1] += du * du;
        c[2] += dx * dx;
        c[3] += dz * du;
        c[4] += dz * dx;
        c[5] += du * dx;
    }
    let c = c.map(|v| v / (nf - 1.0));
    ConcomitantMoments {
        var_z: c[0],
        var_u: c[1],
        var_x: c[2],
        cov_zu: c[3],
        cov_zx: c[4],
        cov_ux: c[5],
    }
}

/// Chooses `sigma_u` so that `|corr(Z + U, X)|` is within `tol` of
/// `rho_target`, estimated from `n_cal` common draws and solved by bisection
/// (the bracket is doubled until it contains the target).
pub fn calibrate_aft_concomitant(
    model: &AftModel,
    rho_target: f64,
    n_cal: usize,
    tol: f64,
    rng: RngStream,
) -> Result<f64> {
    SuperpopulationModel::Aft(*model).validate()?;
    if !(rho_target > 0.0 && rho_target <= 1.0) {
        return Err(Error::parameter(
            "rho_target",
            format!("must lie in (0,1], got {rho_target}"),
        ));
    }
    if n_cal < 3 {
        return Err(Error::parameter("n_cal", "need at least 3 draws"));
    }
    check_positive("tol", tol)?;

    let moments = aft_moments(model, n_cal, rng);
    let ceiling = moments.correlation(0.0);
    if rho_target > ceiling + tol {
        return Err(Error::Calibration {
            target: rho_target,
            ceiling,
        });
    }
    if rho_target >= ceiling - tol {
        return Ok(0.0);
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    while moments.correlation(hi) > rho_target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Calibration {
                target: rho_target,
                ceiling,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let c = moments.correlation(mid);
        if (c - rho_target).abs() <= tol * 1e-3 {
            return Ok(mid);
        }
        if c > rho_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Monte-Carlo `|corr(proxy, X)|` over `n` fresh units.
pub fn concomitant_correlation(
    model: &SuperpopulationModel,
    n: usize,
    rng: RngStream,
) -> Result<f64> {
    model.validate_for_sampling()?;
    let mut life = rng.substream(0).rng();
    let mut noise = rng.substream(1).rng();
    let units: Vec<Unit> = (0..n)
        .map(|_| model.draw_unit(&mut life, &mut noise))
        .collect();
    let nf = n as f64;
    let mx = units.iter().map(|u| u.lifetime).sum::<f64>() / nf;
    let mp = units.iter().map(|u| u.proxy).sum::<f64>() / nf;
    let (mut sxx, mut spp, mut sxp) = (0.0, 0.0, 0.0);
    for u in &units {
        let (dx, dp) = (u.lifetime - mx, u.proxy - mp);
        sxx += dx * dx;
        spp += dp * dp;
        sxp += dx * dp;
    }
    Ok((sxp / (sxx * spp).sqrt()).abs())
}

// ---------------------------------------------------------------------------
// Asymptotic variance kernels
// ---------------------------------------------------------------------------

/// Which lifetime law the kernel is evaluated under.
#[derive(Debug, Clone, Copy)]
pub enum RankLaw<'a> {
    Population,
    /// Perfect ranking: the `r`-th (1-based) order statistic of `k`.
    TrueRank {
        k: usize,
        r: usize,
    },
    /// Judged rank `r` (1-based): mixture of order statistics with row `r` of `mixing`.
    Judged {
        mixing: &'a MixingMatrix,
        r: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    /// Closed form when available, quadrature otherwise.
    Auto,
    ClosedForm,
    Quadrature,
}

const KERNEL_REL_TOL: f64 = 1e-11;

impl RankLaw<'_> {
    fn validate(&self) -> Result<()> {
        match *self {
            RankLaw::Population => Ok(()),
            RankLaw::TrueRank { k, r } => check_rank(k, r),
            RankLaw::Judged { mixing, r } => check_rank(mixing.k(), r),
        }
    }

    /// `(S_law(t), f_law(t) / f(t))` from the population survival `s`.
    fn survival_and_density_factor(&self, s: f64) -> (f64, f64) {
        match *self {
            RankLaw::Population => (s, 1.0),
            RankLaw::TrueRank { k, r } => (os_survival(s, k, r), os_density_factor(s, k, r)),
            RankLaw::Judged { mixing, r } => {
                let k = mixing.k();
                mixing
                    .row(r - 1)
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .fold((0.0, 0.0), |(sv, dv), (j, &w)| {
                        (
                            sv + w * os_survival(s, k, j + 1),
                            dv + w * os_density_factor(s, k, j + 1),
                        )
                    })
            }
        }
    }
}

/// Asymptotic variance kernel `V(t) = S(t)^2 int_0^t dH1(u) / S_Y(u)^2` of
/// `sqrt(m) (S_hat - S)` for `m` i.i.d. draws from `law`, where
/// `dH1 = K dF_law` and `S_Y = S_law K`.
pub fn asymptotic_km_variance(
    model: &SuperpopulationModel,
    censoring: &CensoringLaw,
    law: RankLaw<'_>,
    t: f64,
) -> Result<f64> {
    asymptotic_km_variance_with(model, censoring, law, t, KernelMethod::Auto)
}

pub fn asymptotic_km_variance_with(
    model: &SuperpopulationModel,
    censoring: &CensoringLaw,
    law: RankLaw<'_>,
    t: f64,
    method: KernelMethod,
) -> Result<f64> {
    model.validate()?;
    law.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::parameter(
            "t",
            format!("must be nonnegative and finite, got {t}"),
        ));
    }
    let (s_t, _) = law.survival_and_density_factor(model.survival_unchecked(t));
    let observed = s_t * censoring.survival(t);
    if !(observed > 0.0) {
        return Err(Error::OutsideWindow {
            t,
            observed_survival: observed,
        });
    }

    let closed = closed_form_kernel(model, censoring, &law, t);
    match (method, closed) {
        (KernelMethod::ClosedForm, None) => Err(Error::NoClosedForm(
            "requires exponential lifetimes, exponential-type censoring and the population law",
        )),
        (KernelMethod::ClosedForm | KernelMethod::Auto, Some(v)) => Ok(v),
        _ => {
            let integrand = |u: f64| {
                let s = model.survival_unchecked(u);
                let (sl, factor) = law.survival_and_density_factor(s);
                factor * model.density(u) / (sl * sl * censoring.survival(u))
            };
            let integral = quadrature::integrate(integrand, 0.0, t, KERNEL_REL_TOL, 0.0)?;
            Ok(s_t * s_t * integral)
        }
    }
}

/// Exponential lifetimes (rate `a`) with exponential censoring (rate `c`):
/// `V(t) = e^{-2at} a (e^{(a+c)t} - 1) / (a + c)`.
fn closed_form_kernel(
    model: &SuperpopulationModel,
    censoring: &CensoringLaw,
    law: &RankLaw<'_>,
    t: f64,
) -> Option<f64> {
    let SuperpopulationModel::Weibull(m) = model else {
        return None;
    };
    if m.shape != 1.0 || !matches!(law, RankLaw::Population) {
        return None;
    }
    let a = 1.0 / m.scale;
    let c = censoring.exponential_rate()?;
    Some((-2.0 * a * t).exp() * a * ((a + c) * t).exp_m1() / (a + c))
}

/// Per-observation asymptotic variance of the equal-weight RSS estimator,
/// `n Var(S_RSS(t)) -> (1/k) sum_r V_r(t)`, directly comparable with the
/// population kernel. `mixing = None` means perfect ranking.
pub fn rss_asymptotic_variance(
    model: &SuperpopulationModel,
    censoring: &CensoringLaw,
    k: usize,
    mixing: Option<&MixingMatrix>,
    t: f64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::parameter("k", "must be >= 1"));
    }
    if let Some(w) = mixing {
        if w.k() != k {
            return Err(Error::parameter(
                "mixing",
                format!("matrix is {}x{}, k={k}", w.k(), w.k()),
            ));
        }
    }
    let mut total = 0.0;
    for r in 1..=k {
        let law = match mixing {
            None => RankLaw::TrueRank { k, r },
            Some(mixing) => RankLaw::Judged { mixing, r },
        };
        total += asymptotic_km_variance(model, censoring, law, t)?;
    }
    Ok(total / k as f64)
}
