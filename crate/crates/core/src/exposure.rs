//! Monte Carlo exposure engine.
//!
//! Rates follow a zero-mean Ornstein-Uhlenbeck factor that shifts every
//! forward zero rate in parallel, with a convexity term so that expected
//! bond prices stay on the initial curve. FX pairs follow driftless
//! lognormal diffusions around their curve-implied forwards.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path)`, and
//! paths are reduced in fixed-size blocks in path order, so the output is a
//! pure function of the inputs whatever the thread count.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruments::{InstrumentPortfolio, MarketState, PortfolioPricer};
use crate::market_data::{split_pair, MarketShock, MarketSnapshot};

pub const DEFAULT_MEAN_REVERSION: f64 = 0.03;
pub const DEFAULT_NORMAL_VOL: f64 = 0.008;
pub const DEFAULT_FX_VOL: f64 = 0.15;

/// Paths per reduction block. Fixed so the summation order never depends on
/// scheduling.
const BLOCK: usize = 256;

/// Simulation dates, strictly increasing and starting after zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Domain("time grid is empty".into()));
        }
        if !(times[0] > 0.0) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain(
                "time grid must start after 0 and be finite".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(
                "time grid must be strictly increasing".into(),
            ));
        }
        Ok(Self(times))
    }

    /// Buckets of width `step` up to and including `horizon`.
    pub fn uniform(step: f64, horizon: f64) -> Result<Self> {
        if !(step > 0.0) || !(horizon > 0.0) {
            return Err(Error::Domain("grid step and horizon must be > 0".into()));
        }
        let n = (horizon / step - 1e-9).ceil() as usize;
        let mut times: Vec<f64> = (1..=n).map(|i| (i as f64 * step).min(horizon)).collect();
        times.dedup();
        Self::new(times)
    }

    pub fn quarterly(horizon: f64) -> Result<Self> {
        Self::uniform(0.25, horizon)
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Bucket widths, the first measured from zero.
    pub fn widths(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.0
            .iter()
            .map(|&t| {
                let w = t - prev;
                prev = t;
                w
            })
            .collect()
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub mean_reversion: f64,
    pub normal_vol: f64,
}

impl Default for RateModel {
    fn default() -> Self {
        Self {
            mean_reversion: DEFAULT_MEAN_REVERSION,
            normal_vol: DEFAULT_NORMAL_VOL,
        }
    }
}

impl RateModel {
    /// Variance of the factor at `t`.
    pub fn variance(&self, t: f64) -> f64 {
        let (a, s) = (self.mean_reversion, self.normal_vol);
        if a.abs() < 1e-12 {
            s * s * t
        } else {
            s * s * -(-2.0 * a * t).exp_m1() / (2.0 * a)
        }
    }

    /// (decay, conditional std dev) of one exact OU step of length `dt`.
    fn step(&self, dt: f64) -> (f64, f64) {
        let decay = (-self.mean_reversion * dt).exp();
        (decay, self.variance(dt).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FxModel {
    pub lognormal_vol: f64,
}

impl Default for FxModel {
    fn default() -> Self {
        Self {
            lognormal_vol: DEFAULT_FX_VOL,
        }
    }
}

/// How the path loop is scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub grid: TimeGrid,
    #[serde(default)]
    pub rate_model: RateModel,
    #[serde(default)]
    pub fx_model: FxModel,
    #[serde(skip)]
    pub execution: Execution,
}

impl SimConfig {
    /// Default models on a quarterly grid to `horizon`.
    pub fn new(n_paths: usize, seed: u64, horizon: f64) -> Result<Self> {
        Ok(Self {
            n_paths,
            seed,
            grid: TimeGrid::quarterly(horizon)?,
            rate_model: RateModel::default(),
            fx_model: FxModel::default(),
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Domain("n_paths must be >= 1".into()));
        }
        let (a, s, f) = (
            self.rate_model.mean_reversion,
            self.rate_model.normal_vol,
            self.fx_model.lognormal_vol,
        );
        if !(s >= 0.0) || !(f >= 0.0) || !s.is_finite() || !f.is_finite() {
            return Err(Error::Domain("volatilities must be finite and >= 0".into()));
        }
        if !a.is_finite() || a < 0.0 {
            return Err(Error::Domain(
                "mean reversion must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Drives one path's factors forward across the grid.
struct PathGenerator {
    times: Vec<f64>,
    rate_steps: Vec<(f64, f64)>,
    shift_variance: Vec<f64>,
    fx_spot: Vec<f64>,
    /// log of forward / spot at each grid time, per pair
    fx_log_carry: Vec<Vec<f64>>,
    fx_vol: f64,
    seed: u64,
}

impl PathGenerator {
    fn new(snapshot: &MarketSnapshot, cfg: &SimConfig, pairs: &[String]) -> Result<Self> {
        cfg.validate()?;
        let times = cfg.grid.times().to_vec();
        let rate_steps = cfg
            .grid
            .widths()
            .iter()
            .map(|&dt| cfg.rate_model.step(dt))
            .collect();
        let shift_variance = times.iter().map(|&t| cfg.rate_model.variance(t)).collect();
        let mut fx_spot = Vec::with_capacity(pairs.len());
        let mut fx_log_carry = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let (internal, external) = split_pair(pair)?;
            let int_curve = snapshot.discount_curve(internal)?;
            let ext_curve = snapshot.discount_curve(external)?;
            fx_spot.push(snapshot.fx_spot(pair)?.rate());
            fx_log_carry.push(
                times
                    .iter()
                    .map(|&t| (int_curve.df(t) / ext_curve.df(t)).ln())
                    .collect(),
            );
        }
        Ok(Self {
            times,
            rate_steps,
            shift_variance,
            fx_spot,
            fx_log_carry,
            fx_vol: cfg.fx_model.lognormal_vol,
            seed: cfg.seed,
        })
    }

    fn rng(&self, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path as u64);
        rng
    }

    /// Calls `visit(bucket, state)` at every grid time of `path`.
    fn walk(&self, path: usize, mut visit: impl FnMut(usize, &MarketState)) {
        let mut rng = self.rng(path);
        let n_fx = self.fx_spot.len();
        let mut x = 0.0;
        let mut w = vec![0.0; n_fx];
        let mut state = MarketState::new(0.0, 0.0, self.fx_spot.clone());
        let mut prev_t = 0.0;
        for (i, &t) in self.times.iter().enumerate() {
            let (decay, sd) = self.rate_steps[i];
            let z: f64 = StandardNormal.sample(&mut rng);
            x = x * decay + sd * z;
            let sqrt_dt = (t - prev_t).sqrt();
            let v = self.fx_vol;
            for (k, wk) in w.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *wk += sqrt_dt * z;
                state.fx_rates[k] =
                    self.fx_spot[k] * (self.fx_log_carry[k][i] + v * *wk - 0.5 * v * v * t).exp();
            }
            state.rate_shift = x;
            state.shift_variance = self.shift_variance[i];
            visit(i, &state);
            prev_t = t;
        }
    }
}

/// Simulated market states on every (path, grid time).
#[derive(Debug, Clone, PartialEq)]
pub struct StateCube {
    times: Vec<f64>,
    fx_pairs: Vec<String>,
    n_paths: usize,
    shift_variance: Vec<f64>,
    rate_shift: Vec<f64>,
    fx: Vec<f64>,
}

impl StateCube {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn fx_pairs(&self) -> &[String] {
        &self.fx_pairs
    }

    pub fn rate_shift(&self, path: usize, bucket: usize) -> f64 {
        self.rate_shift[path * self.times.len() + bucket]
    }

    pub fn fx_rate(&self, path: usize, bucket: usize, pair: usize) -> f64 {
        self.fx[(path * self.times.len() + bucket) * self.fx_pairs.len() + pair]
    }

    pub fn state(&self, path: usize, bucket: usize) -> MarketState {
        let n_fx = self.fx_pairs.len();
        let base = (path * self.times.len() + bucket) * n_fx;
        MarketState::new(
            self.rate_shift(path, bucket),
            self.shift_variance[bucket],
            self.fx[base..base + n_fx].to_vec(),
        )
    }
}

/// Simulates every FX pair in the snapshot (in key order) alongside the rate
/// factor.
pub fn simulate_states(snapshot: &MarketSnapshot, cfg: &SimConfig) -> Result<StateCube> {
    let pairs: Vec<String> = snapshot.fx_spots.keys().cloned().collect();
    let gen = PathGenerator::new(snapshot, cfg, &pairs)?;
    let n_t = gen.times.len();
    let n_fx = pairs.len();
    let mut rate_shift = vec![0.0; cfg.n_paths * n_t];
    let mut fx = vec![0.0; cfg.n_paths * n_t * n_fx];
    let fill = |path: usize, rates: &mut [f64], fxs: &mut [f64]| {
        gen.walk(path, |i, s| {
            rates[i] = s.rate_shift;
            fxs[i * n_fx..(i + 1) * n_fx].copy_from_slice(&s.fx_rates);
        });
    };
    match cfg.execution {
        Execution::Sequential => {
            for (p, (r, f)) in rate_shift
                .chunks_mut(n_t)
                .zip(
                    fx.chunks_mut((n_t * n_fx).max(1))
                        .chain(std::iter::repeat_with(|| &mut [][..])),
                )
                .enumerate()
            {
                fill(p, r, f);
            }
        }
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            if n_fx == 0 {
                rate_shift
                    .par_chunks_mut(n_t)
                    .enumerate()
                    .for_each(|(p, r)| fill(p, r, &mut []));
            } else {
                rate_shift
                    .par_chunks_mut(n_t)
                    .zip(fx.par_chunks_mut(n_t * n_fx))
                    .enumerate()
                    .for_each(|(p, (r, f))| fill(p, r, f));
            }
        }
    }
    Ok(StateCube {
        times: gen.times.clone(),
        fx_pairs: pairs,
        n_paths: cfg.n_paths,
        shift_variance: gen.shift_variance.clone(),
        rate_shift,
        fx,
    })
}

/// Expected exposures per bucket, discounted to t = 0 and expressed per unit
/// of the portfolio's reference notional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureProfile {
    pub times: Vec<f64>,
    pub epe: Vec<f64>,
    pub ene: Vec<f64>,
    pub ee: Vec<f64>,
    pub epe_stderr: Vec<f64>,
    pub ene_stderr: Vec<f64>,
    pub ee_stderr: Vec<f64>,
    pub n_paths: usize,
}

impl ExposureProfile {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Standard error of the EPE estimate per bucket.
    pub fn mc_standard_error(&self) -> &[f64] {
        &self.epe_stderr
    }

    pub fn same_grid(&self, other: &ExposureProfile) -> Result<()> {
        if self.times != other.times {
            return Err(Error::Shape(format!(
                "profiles are on different grids ({} vs {} buckets)",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }

    /// Largest |epe - ene - ee| measured in units of the combined standard
    /// error of the three estimates.
    pub fn parity_violation(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let gap = (self.epe[i] - self.ene[i] - self.ee[i]).abs();
                let se = self.epe_stderr[i] + self.ene_stderr[i] + self.ee_stderr[i];
                if gap == 0.0 {
                    0.0
                } else if se == 0.0 {
                    gap / f64::EPSILON
                } else {
                    gap / se
                }
            })
            .fold(0.0, f64::max)
    }

    /// Writes `t, ee, epe, ene, epe_stderr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "ee", "epe", "ene", "epe_stderr"])?;
        for i in 0..self.len() {
            w.write_record([
                self.times[i].to_string(),
                self.ee[i].to_string(),
                self.epe[i].to_string(),
                self.ene[i].to_string(),
                self.epe_stderr[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Moments {
    sum_v: Vec<f64>,
    sum_v2: Vec<f64>,
    sum_pos: Vec<f64>,
    sum_pos2: Vec<f64>,
    sum_neg: Vec<f64>,
    sum_neg2: Vec<f64>,
}

impl Moments {
    fn zeros(n: usize) -> Self {
        Self {
            sum_v: vec![0.0; n],
            sum_v2: vec![0.0; n],
            sum_pos: vec![0.0; n],
            sum_pos2: vec![0.0; n],
            sum_neg: vec![0.0; n],
            sum_neg2: vec![0.0; n],
        }
    }

    fn add(&mut self, i: usize, v: f64, pos: f64, neg: f64) {
        self.sum_v[i] += v;
        self.sum_v2[i] += v * v;
        self.sum_pos[i] += pos;
        self.sum_pos2[i] += pos * pos;
        self.sum_neg[i] += neg;
        self.sum_neg2[i] += neg * neg;
    }

    fn merge(&mut self, o: &Moments) {
        let pairs = [
            (&mut self.sum_v, &o.sum_v),
            (&mut self.sum_v2, &o.sum_v2),
            (&mut self.sum_pos, &o.sum_pos),
            (&mut self.sum_pos2, &o.sum_pos2),
            (&mut self.sum_neg, &o.sum_neg),
            (&mut self.sum_neg2, &o.sum_neg2),
        ];
        for (a, b) in pairs {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

fn mean_and_stderr(sum: f64, sum2: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Simulates the portfolio under `snapshot` and returns its exposure profile.
/// Buckets past the last maturity carry zero exposure.
pub fn exposure_profile(
    portfolio: &InstrumentPortfolio,
    snapshot: &MarketSnapshot,
    cfg: &SimConfig,
) -> Result<ExposureProfile> {
    let pricer = PortfolioPricer::new(portfolio, snapshot)?;
    let gen = PathGenerator::new(snapshot, cfg, pricer.fx_pairs())?;
    let base_curve = snapshot.discount_curve(&portfolio.base_currency)?;
    let n_t = gen.times.len();
    let scale: Vec<f64> = gen
        .times
        .iter()
        .map(|&t| base_curve.df(t) / pricer.reference_notional())
        .collect();

    let run_block = |block: usize| -> Moments {
        let mut m = Moments::zeros(n_t);
        let mut per_trade = Vec::with_capacity(pricer.trade_count());
        let start = block * BLOCK;
        for path in start..(start + BLOCK).min(cfg.n_paths) {
            gen.walk(path, |i, state| {
                let t = gen.times[i];
                if pricer.netting() {
                    let v = pricer.value(state, t) * scale[i];
                    m.add(i, v, v.max(0.0), (-v).max(0.0));
                } else {
                    pricer.trade_values(state, t, &mut per_trade);
                    let v: f64 = per_trade.iter().sum::<f64>() * scale[i];
                    let pos: f64 = per_trade.iter().map(|x| x.max(0.0)).sum::<f64>() * scale[i];
                    let neg: f64 = per_trade.iter().map(|x| (-x).max(0.0)).sum::<f64>() * scale[i];
                    m.add(i, v, pos, neg);
                }
            });
        }
        m
    };

    let n_blocks = cfg.n_paths.div_ceil(BLOCK);
    let blocks: Vec<Moments> = match cfg.execution {
        Execution::Sequential => (0..n_blocks).map(run_block).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n_blocks).into_par_iter().map(run_block).collect()
        }
    };
    let mut total = Moments::zeros(n_t);
    for b in &blocks {
        total.merge(b);
    }

    let n = cfg.n_paths;
    let mut profile = ExposureProfile {
        times: gen.times.clone(),
        epe: Vec::with_capacity(n_t),
        ene: Vec::with_capacity(n_t),
        ee: Vec::with_capacity(n_t),
        epe_stderr: Vec::with_capacity(n_t),
        ene_stderr: Vec::with_capacity(n_t),
        ee_stderr: Vec::with_capacity(n_t),
        n_paths: n,
    };
    for i in 0..n_t {
        let (epe, epe_se) = mean_and_stderr(total.sum_pos[i], total.sum_pos2[i], n);
        let (ene, ene_se) = mean_and_stderr(total.sum_neg[i], total.sum_neg2[i], n);
        let (ee, ee_se) = mean_and_stderr(total.sum_v[i], total.sum_v2[i], n);
        profile.epe.push(epe);
        profile.ene.push(ene);
        profile.ee.push(ee);
        profile.epe_stderr.push(epe_se);
        profile.ene_stderr.push(ene_se);
        profile.ee_stderr.push(ee_se);
    }
    Ok(profile)
}

/// Exposure after shocking the time-zero market and re-simulating with the
/// same seed.
pub fn stressed_exposure_profile(
    portfolio: &InstrumentPortfolio,
    snapshot: &MarketSnapshot,
    shock: &MarketShock,
    cfg: &SimConfig,
) -> Result<ExposureProfile> {
    let stressed = snapshot.apply_shock(shock)?;
    exposure_profile(portfolio, &stressed, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instruments::{par_rate, InterestRateSwap, SwapDirection, Trade};
    use crate::market_data::{DiscountCurve, FundingSpreadCurve, FxSpot};

    fn market() -> MarketSnapshot {
        MarketSnapshot::new(FundingSpreadCurve::flat(0.01).unwrap())
            .with_discount_curve("EUR", DiscountCurve::flat(0.02).unwrap())
            .with_discount_curve("USD", DiscountCurve::flat(0.01).unwrap())
            .with_fx_spot(FxSpot::from_pair("EUR/USD", 1.3).unwrap())
    }

    fn swap(direction: SwapDirection, offset: f64) -> InstrumentPortfolio {
        let mut s = InterestRateSwap {
            notional: 1.0,
            direction,
            fixed_rate: 0.0,
            maturity: 10.0,
            payment_frequency: 4,
            currency: "EUR".into(),
        };
        s.fixed_rate = par_rate(&s, &market()).unwrap() + offset;
        InstrumentPortfolio::new("EUR", vec![Trade::Irs(s)])
    }

    fn cfg(n: usize) -> SimConfig {
        SimConfig::new(n, 7, 10.0).unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = TimeGrid::quarterly(10.0).unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g.last(), 10.0);
        let g = TimeGrid::uniform(0.3, 1.0).unwrap();
        assert_eq!(g.times(), &[0.3, 0.6, 0.8999999999999999, 1.0]);
        assert!(TimeGrid::new(vec![0.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(10);
        c.n_paths = 0;
        assert!(c.validate().is_err());
        let mut c = cfg(10);
        c.rate_model.normal_vol = -0.01;
        assert!(c.validate().is_err());
        let mut c = cfg(10);
        c.fx_model.lognormal_vol = f64::NAN;
        assert!(c.validate().is_err());
    }

    #[test]
    fn same_seed_same_cube() {
        let a = simulate_states(&market(), &cfg(300)).unwrap();
        let b = simulate_states(&market(), &cfg(300)).unwrap();
        assert_eq!(a, b);
        let seq =
            simulate_states(&market(), &cfg(300).with_execution(Execution::Sequential)).unwrap();
        assert_eq!(a, seq);
        let mut other = cfg(300);
        other.seed = 8;
        assert_ne!(a, simulate_states(&market(), &other).unwrap());
    }

    #[test]
    fn rate_factor_is_driftless() {
        let n = 20_000;
        let c = cfg(n);
        let cube = simulate_states(&market(), &c).unwrap();
        for (i, &t) in cube.times().iter().enumerate() {
            let mean = (0..n).map(|p| cube.rate_shift(p, i)).sum::<f64>() / n as f64;
            let sd = c.rate_model.variance(t).sqrt();
            assert!(
                mean.abs() < 3.0 * sd / (n as f64).sqrt() + 1e-15,
                "t={t} mean={mean}"
            );
        }
    }

    #[test]
    fn fx_is_forward_consistent() {
        let n = 20_000;
        let cube = simulate_states(&market(), &cfg(n)).unwrap();
        let i = cube.times().len() - 1;
        let t = cube.times()[i];
        let fwd = 1.3 * ((-0.02f64 * t).exp() / (-0.01f64 * t).exp());
        let samples: Vec<f64> = (0..n).map(|p| cube.fx_rate(p, i, 0)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - fwd).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn degenerate_diffusion_gives_forward_state() {
        let mut c = cfg(5);
        c.rate_model.normal_vol = 0.0;
        c.fx_model.lognormal_vol = 0.0;
        let cube = simulate_states(&market(), &c).unwrap();
        for p in 0..5 {
            for i in 0..cube.times().len() {
                assert_eq!(cube.rate_shift(p, i), 0.0);
            }
        }
        let prof = exposure_profile(&swap(SwapDirection::Payer, 0.001), &market(), &c).unwrap();
        for i in 0..prof.len() {
            assert_eq!(prof.epe[i], prof.ee[i].max(0.0));
            assert_eq!(prof.epe_stderr[i], 0.0);
        }
    }

    #[test]
    fn parity_and_positivity() {
        let prof =
            exposure_profile(&swap(SwapDirection::Payer, 0.0), &market(), &cfg(4000)).unwrap();
        assert!(prof.parity_violation() <= 3.0);
        for i in 0..prof.len() {
            assert!(prof.epe[i] >= 0.0 && prof.ene[i] >= 0.0);
            assert!(prof.epe[i] >= prof.ee[i]);
        }
    }

    #[test]
    fn at_market_swap_short_horizon_symmetry() {
        let prof =
            exposure_profile(&swap(SwapDirection::Payer, 0.0), &market(), &cfg(20_000)).unwrap();
        // flat curve: drift-free first bucket, exposure small and two-sided
        let (epe, ene) = (prof.epe[0], prof.ene[0]);
        assert!(epe < 0.5 * prof.epe[12] && ene < 0.5 * prof.ene[12]);
        assert!((epe - ene).abs() < 3.0 * (prof.epe_stderr[0] + prof.ene_stderr[0]) + 2e-4);
        assert!(prof.epe[0] < prof.epe[8]);
        assert_eq!(*prof.epe.last().unwrap(), 0.0);
    }

    #[test]
    fn deep_itm_receiver_is_intrinsic() {
        let mut c = cfg(2000);
        c.rate_model.normal_vol = 0.001;
        let prof = exposure_profile(&swap(SwapDirection::Receiver, 0.05), &market(), &c).unwrap();
        for i in 0..prof.len() - 1 {
            assert!(prof.ene[i] < 1e-12);
            assert!((prof.epe[i] - prof.ee[i]).abs() < 1e-12);
            assert!(prof.ee[i] > 0.0);
        }
    }

    #[test]
    fn trailing_buckets_are_zero() {
        let mut c = cfg(500);
        c.grid = TimeGrid::quarterly(12.0).unwrap();
        let prof = exposure_profile(&swap(SwapDirection::Payer, 0.0), &market(), &c).unwrap();
        for i in 0..prof.len() {
            if prof.times[i] >= 10.0 {
                assert_eq!(prof.epe[i], 0.0);
                assert_eq!(prof.ene[i], 0.0);
            }
        }
    }

    #[test]
    fn zero_shock_is_bit_identical() {
        let p = swap(SwapDirection::Payer, 0.0);
        let c = cfg(1000);
        let base = exposure_profile(&p, &market(), &c).unwrap();
        let stressed =
            stressed_exposure_profile(&p, &market(), &MarketShock::default(), &c).unwrap();
        assert_eq!(base, stressed);
    }

    #[test]
    fn up_shock_raises_payer_lowers_receiver() {
        let c = cfg(2000);
        let shock = MarketShock::rate_shift("EUR", 0.05);
        let payer = swap(SwapDirection::Payer, 0.0);
        let receiver = swap(SwapDirection::Receiver, 0.0);
        let pb = exposure_profile(&payer, &market(), &c).unwrap();
        let ps = stressed_exposure_profile(&payer, &market(), &shock, &c).unwrap();
        let rb = exposure_profile(&receiver, &market(), &c).unwrap();
        let rs = stressed_exposure_profile(&receiver, &market(), &shock, &c).unwrap();
        for i in 0..pb.len() - 1 {
            assert!(ps.epe[i] > pb.epe[i]);
            assert!(rs.epe[i] < rb.epe[i]);
        }
    }

    #[test]
    fn unnetted_exposure_dominates_netted() {
        let mut s = swap(SwapDirection::Payer, 0.0);
        let mut r = swap(SwapDirection::Receiver, 0.0);
        s.trades.append(&mut r.trades);
        let c = cfg(500);
        let netted = exposure_profile(&s, &market(), &c).unwrap();
        s.netting = false;
        let gross = exposure_profile(&s, &market(), &c).unwrap();
        for i in 0..netted.len() - 1 {
            assert!(netted.epe[i].abs() < 1e-15);
            assert!(gross.epe[i] > 0.0);
            assert!((gross.ee[i] - netted.ee[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_has_expected_columns() {
        let prof = exposure_profile(&swap(SwapDirection::Payer, 0.0), &market(), &cfg(50)).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,ee,epe,ene,epe_stderr\n"));
        assert_eq!(text.lines().count(), prof.len() + 1);
    }
}
