//! Interest-rate and cross-currency swaps, valued single-curve off a market
//! state: the time-zero curves moved by a common parallel rate factor, plus
//! the prevailing FX levels.
//!
//! A [`PortfolioPricer`] compiles a portfolio against a snapshot once (payment
//! schedules, time-zero discount factors, FX pair slots) so that repricing on
//! every simulated path is cheap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{pair_id, DiscountCurve, MarketSnapshot};

const ALLOWED_FREQUENCIES: [u32; 4] = [1, 2, 4, 12];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwapDirection {
    /// Pays fixed, receives floating.
    Payer,
    Receiver,
}

impl SwapDirection {
    fn sign(self) -> f64 {
        match self {
            SwapDirection::Payer => 1.0,
            SwapDirection::Receiver => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SwapDirection::Payer => SwapDirection::Receiver,
            SwapDirection::Receiver => SwapDirection::Payer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterestRateSwap {
    pub notional: f64,
    pub direction: SwapDirection,
    pub fixed_rate: f64,
    pub maturity: f64,
    #[serde(default = "default_frequency")]
    pub payment_frequency: u32,
    pub currency: String,
}

fn default_frequency() -> u32 {
    4
}

impl InterestRateSwap {
    pub fn validate(&self) -> Result<()> {
        if !(self.notional > 0.0) {
            return Err(Error::Domain(format!(
                "IRS notional must be > 0, got {}",
                self.notional
            )));
        }
        if !self.fixed_rate.is_finite() {
            return Err(Error::Domain("IRS fixed rate is not finite".into()));
        }
        payment_count(self.maturity, self.payment_frequency)?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<Vec<f64>> {
        payment_times(self.maturity, self.payment_frequency)
    }
}

/// Floating-for-floating cross-currency swap with a final exchange of
/// notionals: the holder receives the external (hard) currency notional and
/// pays the internal currency notional. Both legs pay floating plus an
/// optional spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCurrencySwap {
    pub notional_external: f64,
    pub notional_internal: f64,
    /// `INTERNAL/EXTERNAL`, e.g. `BRL/USD`.
    pub fx_pair: String,
    pub maturity: f64,
    #[serde(default = "default_frequency")]
    pub payment_frequency: u32,
    #[serde(default)]
    pub external_spread: f64,
    #[serde(default)]
    pub internal_spread: f64,
}

impl CrossCurrencySwap {
    pub fn validate(&self) -> Result<()> {
        if !(self.notional_external > 0.0) || !(self.notional_internal > 0.0) {
            return Err(Error::Domain("CCS notionals must both be > 0".into()));
        }
        if !self.external_spread.is_finite() || !self.internal_spread.is_finite() {
            return Err(Error::Domain("CCS spreads must be finite".into()));
        }
        crate::market_data::split_pair(&self.fx_pair)?;
        payment_count(self.maturity, self.payment_frequency)?;
        Ok(())
    }

    pub fn currencies(&self) -> (&str, &str) {
        // validated on construction paths; fall back to the raw id otherwise
        self.fx_pair
            .split_once('/')
            .unwrap_or((self.fx_pair.as_str(), self.fx_pair.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Trade {
    Irs(InterestRateSwap),
    Ccs(CrossCurrencySwap),
}

impl Trade {
    pub fn maturity(&self) -> f64 {
        match self {
            Trade::Irs(s) => s.maturity,
            Trade::Ccs(s) => s.maturity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Trade::Irs(s) => s.validate(),
            Trade::Ccs(s) => s.validate(),
        }
    }
}

/// One netting set, valued in `base_currency`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentPortfolio {
    pub base_currency: String,
    pub trades: Vec<Trade>,
    #[serde(default = "default_netting")]
    pub netting: bool,
}

fn default_netting() -> bool {
    true
}

impl InstrumentPortfolio {
    pub fn new(base_currency: impl Into<String>, trades: Vec<Trade>) -> Self {
        Self {
            base_currency: base_currency.into(),
            trades,
            netting: true,
        }
    }

    pub fn max_maturity(&self) -> f64 {
        self.trades.iter().map(Trade::maturity).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trades.is_empty() {
            return Err(Error::Domain("portfolio has no trades".into()));
        }
        self.trades.iter().try_for_each(Trade::validate)
    }
}

fn payment_count(maturity: f64, frequency: u32) -> Result<usize> {
    if !ALLOWED_FREQUENCIES.contains(&frequency) {
        return Err(Error::Domain(format!(
            "payment frequency must be one of {ALLOWED_FREQUENCIES:?}, got {frequency}"
        )));
    }
    if !(maturity > 0.0) || !maturity.is_finite() {
        return Err(Error::Domain(format!(
            "maturity must be > 0, got {maturity}"
        )));
    }
    let n = maturity * f64::from(frequency);
    let rounded = n.round();
    if (n - rounded).abs() > 1e-9 || rounded < 1.0 {
        return Err(Error::Domain(format!(
            "maturity {maturity} is not a whole number of {frequency}-per-year periods"
        )));
    }
    Ok(rounded as usize)
}

fn payment_times(maturity: f64, frequency: u32) -> Result<Vec<f64>> {
    let n = payment_count(maturity, frequency)?;
    let f = f64::from(frequency);
    Ok((1..=n).map(|j| j as f64 / f).collect())
}

/// Fixed rate that prices the swap at zero at t = 0.
pub fn par_rate(swap: &InterestRateSwap, snapshot: &MarketSnapshot) -> Result<f64> {
    let curve = snapshot.discount_curve(&swap.currency)?;
    let times = swap.schedule()?;
    let mut prev = 0.0;
    let mut annuity = 0.0;
    for &t in &times {
        annuity += (t - prev) * curve.df(t);
        prev = t;
    }
    if !(annuity.abs() > 0.0) {
        return Err(Error::Numerical("swap annuity is zero".into()));
    }
    Ok((1.0 - curve.df(prev)) / annuity)
}

/// Market levels prevailing at some time `t` on one path.
///
/// `rate_shift` moves every forward zero rate of every currency in parallel;
/// `shift_variance` is the variance of that factor at `t`, used for the
/// convexity term that keeps expected bond prices on the initial curve.
/// `fx_rates` line up with [`PortfolioPricer::fx_pairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub rate_shift: f64,
    pub shift_variance: f64,
    pub fx_rates: Vec<f64>,
}

impl MarketState {
    pub fn new(rate_shift: f64, shift_variance: f64, fx_rates: Vec<f64>) -> Self {
        Self {
            rate_shift,
            shift_variance,
            fx_rates,
        }
    }
}

#[derive(Debug, Clone)]
struct Schedule {
    curve: DiscountCurve,
    times: Vec<f64>,
    accruals: Vec<f64>,
    /// Time-zero discount factors to each payment date.
    dfs: Vec<f64>,
    /// Time-zero discount factors to each accrual start.
    start_dfs: Vec<f64>,
}

/// Per-path pricing quantities shared by every schedule at one (state, t).
#[derive(Clone, Copy)]
struct Horizon {
    t: f64,
    x: f64,
    half_var: f64,
}

impl Schedule {
    fn new(curve: &DiscountCurve, times: Vec<f64>) -> Self {
        let mut accruals = Vec::with_capacity(times.len());
        let mut start_dfs = Vec::with_capacity(times.len());
        let mut prev = 0.0;
        for &t in &times {
            accruals.push(t - prev);
            start_dfs.push(curve.df(prev));
            prev = t;
        }
        let dfs = times.iter().map(|&t| curve.df(t)).collect();
        Self {
            curve: curve.clone(),
            times,
            accruals,
            dfs,
            start_dfs,
        }
    }

    fn first_live(&self, t: f64) -> Option<usize> {
        let j = self.times.partition_point(|&p| p <= t);
        (j < self.times.len()).then_some(j)
    }

    #[inline]
    fn fwd_bond(&self, h: Horizon, df_t: f64, df_end: f64, end: f64) -> f64 {
        let tau = end - h.t;
        df_end / df_t * (-h.x * tau - h.half_var * tau * tau).exp()
    }

    /// Returns (value of the running float coupon plus all later float
    /// coupons and the final principal, remaining annuity, final bond).
    fn legs(&self, h: Horizon, j0: usize) -> (f64, f64, f64) {
        let df_t = self.curve.df(h.t);
        let mut annuity = 0.0;
        let mut bond = 0.0;
        for j in j0..self.times.len() {
            bond = self.fwd_bond(h, df_t, self.dfs[j], self.times[j]);
            annuity += self.accruals[j] * bond;
        }
        // Coupon for the running period is fixed off the current state.
        let delta = self.accruals[j0];
        let fixing_bond =
            self.dfs[j0] / self.start_dfs[j0] * (-h.x * delta - h.half_var * delta * delta).exp();
        let first_bond = self.fwd_bond(h, df_t, self.dfs[j0], self.times[j0]);
        (first_bond / fixing_bond, annuity, bond)
    }
}

#[derive(Debug, Clone)]
enum CompiledTrade {
    Irs {
        schedule: Schedule,
        notional: f64,
        fixed_rate: f64,
        sign: f64,
        fx_slot: Option<usize>,
    },
    Ccs {
        external: Schedule,
        internal: Schedule,
        notional_external: f64,
        notional_internal: f64,
        external_spread: f64,
        internal_spread: f64,
        fx_slot: usize,
    },
}

impl CompiledTrade {
    fn value(&self, state: &MarketState, h: Horizon) -> f64 {
        match self {
            CompiledTrade::Irs {
                schedule,
                notional,
                fixed_rate,
                sign,
                fx_slot,
            } => {
                let Some(j0) = schedule.first_live(h.t) else {
                    return 0.0;
                };
                let (float_and_principal, annuity, bond) = schedule.legs(h, j0);
                let v = sign * notional * (float_and_principal - bond - fixed_rate * annuity);
                match fx_slot {
                    Some(k) => v * state.fx_rates[*k],
                    None => v,
                }
            }
            CompiledTrade::Ccs {
                external,
                internal,
                notional_external,
                notional_internal,
                external_spread,
                internal_spread,
                fx_slot,
            } => {
                let Some(j0) = external.first_live(h.t) else {
                    return 0.0;
                };
                let (ext_float, ext_annuity, _) = external.legs(h, j0);
                let (int_float, int_annuity, _) = internal.legs(h, j0);
                let receive = notional_external * (ext_float + external_spread * ext_annuity);
                let pay = notional_internal * (int_float + internal_spread * int_annuity);
                receive - state.fx_rates[*fx_slot] * pay
            }
        }
    }
}

/// A portfolio compiled against one market snapshot.
#[derive(Debug, Clone)]
pub struct PortfolioPricer {
    trades: Vec<CompiledTrade>,
    fx_pairs: Vec<String>,
    spot_rates: Vec<f64>,
    reference_notional: f64,
    max_maturity: f64,
    netting: bool,
}

impl PortfolioPricer {
    pub fn new(portfolio: &InstrumentPortfolio, snapshot: &MarketSnapshot) -> Result<Self> {
        portfolio.validate()?;
        let base = portfolio.base_currency.as_str();
        let mut fx = FxSlots::default();

        let mut trades = Vec::with_capacity(portfolio.trades.len());
        let mut reference_notional = 0.0;
        for trade in &portfolio.trades {
            match trade {
                Trade::Irs(swap) => {
                    let curve = snapshot.discount_curve(&swap.currency)?;
                    let fx_slot = if swap.currency == base {
                        None
                    } else {
                        Some(fx.slot(snapshot, pair_id(&swap.currency, base))?)
                    };
                    let to_base = fx_slot.map_or(1.0, |k| fx.rates[k]);
                    reference_notional += swap.notional * to_base;
                    trades.push(CompiledTrade::Irs {
                        schedule: Schedule::new(curve, swap.schedule()?),
                        notional: swap.notional,
                        fixed_rate: swap.fixed_rate,
                        sign: swap.direction.sign(),
                        fx_slot,
                    });
                }
                Trade::Ccs(swap) => {
                    let (internal_ccy, external_ccy) = swap.currencies();
                    if external_ccy != base {
                        return Err(Error::Config(format!(
                            "CCS external currency {external_ccy} must be the base currency {base}"
                        )));
                    }
                    let times = payment_times(swap.maturity, swap.payment_frequency)?;
                    let fx_slot = fx.slot(snapshot, swap.fx_pair.clone())?;
                    reference_notional += swap.notional_external;
                    trades.push(CompiledTrade::Ccs {
                        external: Schedule::new(
                            snapshot.discount_curve(external_ccy)?,
                            times.clone(),
                        ),
                        internal: Schedule::new(snapshot.discount_curve(internal_ccy)?, times),
                        notional_external: swap.notional_external,
                        notional_internal: swap.notional_internal,
                        external_spread: swap.external_spread,
                        internal_spread: swap.internal_spread,
                        fx_slot,
                    });
                }
            }
        }
        Ok(Self {
            trades,
            fx_pairs: fx.pairs,
            spot_rates: fx.rates,
            reference_notional,
            max_maturity: portfolio.max_maturity(),
            netting: portfolio.netting,
        })
    }

    /// FX pairs the portfolio depends on, in state-slot order.
    pub fn fx_pairs(&self) -> &[String] {
        &self.fx_pairs
    }

    pub fn spot_rates(&self) -> &[f64] {
        &self.spot_rates
    }

    /// Sum of trade notionals in base currency at spot; exposures are
    /// reported per unit of this amount.
    pub fn reference_notional(&self) -> f64 {
        self.reference_notional
    }

    pub fn max_maturity(&self) -> f64 {
        self.max_maturity
    }

    pub fn netting(&self) -> bool {
        self.netting
    }

    pub fn trade_count(&self) -> usize {
        self.trades.len()
    }

    /// The unshocked state at t = 0.
    pub fn initial_state(&self) -> MarketState {
        MarketState::new(0.0, 0.0, self.spot_rates.clone())
    }

    fn horizon(state: &MarketState, t: f64) -> Horizon {
        Horizon {
            t,
            x: state.rate_shift,
            half_var: 0.5 * state.shift_variance,
        }
    }

    /// Netted portfolio value at `t` in base currency, in time-`t` money.
    pub fn value(&self, state: &MarketState, t: f64) -> f64 {
        let h = Self::horizon(state, t);
        self.trades.iter().map(|tr| tr.value(state, h)).sum()
    }

    /// Per-trade values at `t`, written into `out`.
    pub fn trade_values(&self, state: &MarketState, t: f64, out: &mut Vec<f64>) {
        let h = Self::horizon(state, t);
        out.clear();
        out.extend(self.trades.iter().map(|tr| tr.value(state, h)));
    }
}

#[derive(Default)]
struct FxSlots {
    pairs: Vec<String>,
    rates: Vec<f64>,
}

impl FxSlots {
    fn slot(&mut self, snapshot: &MarketSnapshot, pair: String) -> Result<usize> {
        if let Some(k) = self.pairs.iter().position(|p| *p == pair) {
            return Ok(k);
        }
        self.rates.push(snapshot.fx_spot(&pair)?.rate());
        self.pairs.push(pair);
        Ok(self.pairs.len() - 1)
    }
}

/// Values a portfolio at `t` under `state`. Compiles the portfolio on every
/// call; use [`PortfolioPricer`] in loops.
pub fn price_portfolio(
    portfolio: &InstrumentPortfolio,
    snapshot: &MarketSnapshot,
    state: &MarketState,
    t: f64,
) -> Result<f64> {
    let pricer = PortfolioPricer::new(portfolio, snapshot)?;
    if state.fx_rates.len() != pricer.fx_pairs.len() {
        return Err(Error::Shape(format!(
            "state carries {} FX rates, portfolio needs {}",
            state.fx_rates.len(),
            pricer.fx_pairs.len()
        )));
    }
    Ok(pricer.value(state, t))
}
