//! Curves, flat CDS credit curves, FX spots and funding spreads, plus
//! deterministic stress shocks applied to a whole market snapshot.
//!
//! All times are ACT/365 year fractions. Rates are continuously compounded
//! decimals. Everything here is immutable once built; shocks return a new
//! snapshot.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Recovery assumed for any credit curve whose recovery is not configured.
pub const DEFAULT_RECOVERY: f64 = 0.40;

/// Piecewise-linear interpolation with flat extrapolation on both sides.
pub(crate) fn interp_flat(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    // first index with xs[i] > x; 1..=last by the guards above
    let i = xs.partition_point(|&p| p <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = (x - x0) / (x1 - x0);
    ys[i - 1] + w * (ys[i] - ys[i - 1])
}

fn check_pillars(what: &str, times: &[f64], values: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Domain(format!(
            "{what}: at least one pillar required"
        )));
    }
    if times.len() != values.len() {
        return Err(Error::Domain(format!(
            "{what}: {} pillars but {} values",
            times.len(),
            values.len()
        )));
    }
    if !(times[0] > 0.0) {
        return Err(Error::Domain(format!("{what}: first pillar must be > 0")));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!(
            "{what}: pillars must be strictly increasing"
        )));
    }
    if times.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{what}: non-finite input")));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

/// Zero curve, linear in zero rate between pillars, flat outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurve {
    pillar_times: Vec<f64>,
    zero_rates: Vec<f64>,
}

impl DiscountCurve {
    pub fn new(pillar_times: Vec<f64>, zero_rates: Vec<f64>) -> Result<Self> {
        check_pillars("discount curve", &pillar_times, &zero_rates)?;
        Ok(Self {
            pillar_times,
            zero_rates,
        })
    }

    pub fn flat(rate: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![rate])
    }

    pub fn pillar_times(&self) -> &[f64] {
        &self.pillar_times
    }

    pub fn zero_rates(&self) -> &[f64] {
        &self.zero_rates
    }

    pub fn zero_rate(&self, t: f64) -> f64 {
        interp_flat(&self.pillar_times, &self.zero_rates, t)
    }

    pub fn discount_factor(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.df(t))
    }

    /// Unchecked discount factor for internal callers that already hold t >= 0.
    #[inline]
    pub(crate) fn df(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 1.0;
        }
        (-self.zero_rate(t) * t).exp()
    }

    /// Same curve with every zero rate moved by `shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            pillar_times: self.pillar_times.clone(),
            zero_rates: self.zero_rates.iter().map(|z| z + shift).collect(),
        }
    }
}

/// Flat-hazard credit curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreditCurve {
    hazard_rate: f64,
    recovery: f64,
}

impl CreditCurve {
    pub fn new(hazard_rate: f64, recovery: f64) -> Result<Self> {
        if !(hazard_rate >= 0.0) || !hazard_rate.is_finite() {
            return Err(Error::Domain(format!(
                "hazard rate must be >= 0, got {hazard_rate}"
            )));
        }
        check_recovery(recovery)?;
        Ok(Self {
            hazard_rate,
            recovery,
        })
    }

    pub fn hazard_rate(&self) -> f64 {
        self.hazard_rate
    }

    pub fn recovery(&self) -> f64 {
        self.recovery
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.surv(t))
    }

    #[inline]
    pub(crate) fn surv(&self, t: f64) -> f64 {
        (-self.hazard_rate * t).exp()
    }

    /// Cumulative default probability to `t`.
    pub fn default_prob(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.pd(t))
    }

    #[inline]
    pub(crate) fn pd(&self, t: f64) -> f64 {
        -(-self.hazard_rate * t).exp_m1()
    }

    /// Flat CDS spread implied back through the credit triangle.
    pub fn implied_spread(&self) -> f64 {
        self.hazard_rate * (1.0 - self.recovery)
    }
}

fn check_recovery(recovery: f64) -> Result<()> {
    if !(0.0..1.0).contains(&recovery) {
        return Err(Error::Domain(format!(
            "recovery must be in [0,1), got {recovery}"
        )));
    }
    Ok(())
}

/// Flat hazard from a flat CDS spread via the credit triangle `h = s / (1 - R)`.
pub fn bootstrap_flat_cds(spread: f64, recovery: f64) -> Result<CreditCurve> {
    check_recovery(recovery)?;
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::Domain(format!(
            "CDS spread must be >= 0, got {spread}"
        )));
    }
    CreditCurve::new(spread / (1.0 - recovery), recovery)
}

/// Spot rate quoted as units of the external (hard) currency per unit of the
/// internal currency, e.g. USD per BRL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FxSpot {
    pub internal: String,
    pub external: String,
    rate: f64,
}

impl FxSpot {
    pub fn new(
        internal: impl Into<String>,
        external: impl Into<String>,
        rate: f64,
    ) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Domain(format!("FX rate must be > 0, got {rate}")));
        }
        Ok(Self {
            internal: internal.into(),
            external: external.into(),
            rate,
        })
    }

    /// Parses `"BRL/USD"` style identifiers.
    pub fn from_pair(pair: &str, rate: f64) -> Result<Self> {
        let (internal, external) = split_pair(pair)?;
        Self::new(internal, external, rate)
    }

    pub fn pair(&self) -> String {
        pair_id(&self.internal, &self.external)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

pub fn pair_id(internal: &str, external: &str) -> String {
    format!("{internal}/{external}")
}

pub(crate) fn split_pair(pair: &str) -> Result<(&str, &str)> {
    match pair.split_once('/') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() && a != b => Ok((a, b)),
        _ => Err(Error::Config(format!(
            "FX pair '{pair}' must look like INTERNAL/EXTERNAL"
        ))),
    }
}

/// The institution's funding spread term structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundingSpreadCurve {
    pillar_times: Vec<f64>,
    spreads: Vec<f64>,
}

impl FundingSpreadCurve {
    pub fn new(pillar_times: Vec<f64>, spreads: Vec<f64>) -> Result<Self> {
        check_pillars("funding curve", &pillar_times, &spreads)?;
        Ok(Self {
            pillar_times,
            spreads,
        })
    }

    pub fn flat(spread: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![spread])
    }

    pub fn spread(&self, t: f64) -> f64 {
        interp_flat(&self.pillar_times, &self.spreads, t)
    }

    pub fn pillar_times(&self) -> &[f64] {
        &self.pillar_times
    }

    pub fn spreads(&self) -> &[f64] {
        &self.spreads
    }

    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            pillar_times: self.pillar_times.clone(),
            spreads: self.spreads.iter().map(|s| s + shift).collect(),
        }
    }
}

/// A complete market state at time zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSnapshot {
    pub discount_curves: BTreeMap<String, DiscountCurve>,
    pub credit_curves: BTreeMap<String, CreditCurve>,
    /// Keyed by `INTERNAL/EXTERNAL`.
    pub fx_spots: BTreeMap<String, FxSpot>,
    pub funding_curve: FundingSpreadCurve,
}

impl MarketSnapshot {
    pub fn new(funding_curve: FundingSpreadCurve) -> Self {
        Self {
            discount_curves: BTreeMap::new(),
            credit_curves: BTreeMap::new(),
            fx_spots: BTreeMap::new(),
            funding_curve,
        }
    }

    pub fn with_discount_curve(mut self, ccy: impl Into<String>, curve: DiscountCurve) -> Self {
        self.discount_curves.insert(ccy.into(), curve);
        self
    }

    pub fn with_credit_curve(mut self, entity: impl Into<String>, curve: CreditCurve) -> Self {
        self.credit_curves.insert(entity.into(), curve);
        self
    }

    pub fn with_fx_spot(mut self, spot: FxSpot) -> Self {
        self.fx_spots.insert(spot.pair(), spot);
        self
    }

    pub fn discount_curve(&self, ccy: &str) -> Result<&DiscountCurve> {
        self.discount_curves
            .get(ccy)
            .ok_or_else(|| Error::Config(format!("no discount curve for currency '{ccy}'")))
    }

    pub fn credit_curve(&self, entity: &str) -> Result<&CreditCurve> {
        self.credit_curves
            .get(entity)
            .ok_or_else(|| Error::Config(format!("no credit curve for entity '{entity}'")))
    }

    pub fn fx_spot(&self, pair: &str) -> Result<&FxSpot> {
        self.fx_spots
            .get(pair)
            .ok_or_else(|| Error::Config(format!("no FX spot for pair '{pair}'")))
    }

    /// Applies a deterministic shock and returns the shocked twin. `self` is
    /// left untouched.
    pub fn apply_shock(&self, shock: &MarketShock) -> Result<MarketSnapshot> {
        shock.validate()?;
        let mut out = self.clone();
        for (ccy, shift) in &shock.parallel_rate_shift {
            let curve = out.discount_curves.get_mut(ccy).ok_or_else(|| {
                Error::Config(format!("shock references unknown currency '{ccy}'"))
            })?;
            *curve = curve.shifted(*shift);
        }
        for (pair, devaluation) in &shock.fx_devaluation {
            let spot = out.fx_spots.get_mut(pair).ok_or_else(|| {
                Error::Config(format!("shock references unknown FX pair '{pair}'"))
            })?;
            spot.rate *= 1.0 - devaluation;
        }
        if let Some(shift) = shock.funding_spread_shift {
            out.funding_curve = out.funding_curve.shifted(shift);
        }
        Ok(out)
    }
}

/// Deterministic stress applied at time zero.
///
/// A devaluation `d` on `INT/EXT` multiplies the external-currency value of
/// one unit of the internal currency by `1 - d`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketShock {
    #[serde(default)]
    pub parallel_rate_shift: BTreeMap<String, f64>,
    #[serde(default)]
    pub fx_devaluation: BTreeMap<String, f64>,
    #[serde(default)]
    pub funding_spread_shift: Option<f64>,
}

impl MarketShock {
    pub fn rate_shift(ccy: impl Into<String>, shift: f64) -> Self {
        Self {
            parallel_rate_shift: BTreeMap::from([(ccy.into(), shift)]),
            ..Self::default()
        }
    }

    pub fn devaluation(pair: impl Into<String>, fraction: f64) -> Self {
        Self {
            fx_devaluation: BTreeMap::from([(pair.into(), fraction)]),
            ..Self::default()
        }
    }

    pub fn with_funding_shift(mut self, shift: f64) -> Self {
        self.funding_spread_shift = Some(shift);
        self
    }

    pub fn is_identity(&self) -> bool {
        self.parallel_rate_shift.values().all(|s| *s == 0.0)
            && self.fx_devaluation.values().all(|d| *d == 0.0)
            && self.funding_spread_shift.unwrap_or(0.0) == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (ccy, s) in &self.parallel_rate_shift {
            if !s.is_finite() {
                return Err(Error::Domain(format!(
                    "rate shift for '{ccy}' is not finite"
                )));
            }
        }
        for (pair, d) in &self.fx_devaluation {
            if !(0.0..1.0).contains(d) {
                return Err(Error::Domain(format!(
                    "devaluation for '{pair}' must be in [0,1), got {d}"
                )));
            }
        }
        if let Some(s) = self.funding_spread_shift {
            if !s.is_finite() {
                return Err(Error::Domain("funding spread shift is not finite".into()));
            }
        }
        Ok(())
    }
}
