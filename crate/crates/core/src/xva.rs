//! CVA and FVA over exposure profiles, their WWR-adjusted variants, and the
//! sovereign-CDS hedge implied by the overlay.
//!
//! Profiles are already discounted to t = 0, so the integrals below need no
//! further discounting. Sums use the right-point rule: the exposure at bucket
//! end `t_i` is paired with the default mass (or accrual) over
//! `[t_{i-1}, t_i]`, with `t_0 = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::ExposureProfile;
use crate::market_data::{CreditCurve, DiscountCurve, FundingSpreadCurve, MarketSnapshot};
use crate::wwr_overlay::{epe_wwr_single, stressed_epe_interp, StressScenario, WwrProfile};

/// Anything that carries an EPE per grid time.
pub trait EpeProfile {
    fn times(&self) -> &[f64];
    fn epe(&self) -> &[f64];
    fn label(&self) -> &str;
}

impl EpeProfile for ExposureProfile {
    fn times(&self) -> &[f64] {
        &self.times
    }
    fn epe(&self) -> &[f64] {
        &self.epe
    }
    fn label(&self) -> &str {
        "base"
    }
}

impl EpeProfile for WwrProfile {
    fn times(&self) -> &[f64] {
        &self.times
    }
    fn epe(&self) -> &[f64] {
        &self.epe
    }
    fn label(&self) -> &str {
        "wwr"
    }
}

/// A bare `(times, epe)` pair, e.g. for brute-force checks.
#[derive(Debug, Clone, PartialEq)]
pub struct EpeCurve {
    pub times: Vec<f64>,
    pub epe: Vec<f64>,
}

impl EpeProfile for EpeCurve {
    fn times(&self) -> &[f64] {
        &self.times
    }
    fn epe(&self) -> &[f64] {
        &self.epe
    }
    fn label(&self) -> &str {
        "curve"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvaResult {
    /// Fraction of notional.
    pub upfront: f64,
    pub running_bps: f64,
    pub risky_annuity: f64,
    pub profile_used: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FvaResult {
    /// Fraction of notional; negative is a funding cost.
    pub value: f64,
    pub upfront_bps: f64,
    pub running_bps: f64,
    pub stressed: bool,
}

fn widths(times: &[f64]) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(Error::Domain("profile is empty".into()));
    }
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let w = t - prev;
            if !(w > 0.0) {
                return Err(Error::Domain(
                    "profile grid must be strictly increasing from 0".into(),
                ));
            }
            prev = t;
            Ok(w)
        })
        .collect()
}

/// Counterparty-risky annuity `sum dt_i D(t_i) S(t_i)`.
pub fn risky_annuity(times: &[f64], cpty: &CreditCurve, discount: &DiscountCurve) -> Result<f64> {
    let w = widths(times)?;
    Ok(times
        .iter()
        .zip(&w)
        .map(|(&t, &dt)| dt * discount.df(t) * cpty.surv(t))
        .sum())
}

/// Riskless annuity `sum dt_i D(t_i)`.
pub fn annuity(times: &[f64], discount: &DiscountCurve) -> Result<f64> {
    let w = widths(times)?;
    Ok(times
        .iter()
        .zip(&w)
        .map(|(&t, &dt)| dt * discount.df(t))
        .sum())
}

/// Unilateral CVA: `(1 - R) sum EPE(t_i) [S(t_{i-1}) - S(t_i)]`.
pub fn cva(
    profile: &impl EpeProfile,
    cpty: &CreditCurve,
    discount: &DiscountCurve,
) -> Result<CvaResult> {
    let times = profile.times();
    let epe = profile.epe();
    if times.len() != epe.len() {
        return Err(Error::Shape("EPE and grid lengths differ".into()));
    }
    widths(times)?;
    let mut prev_surv = 1.0;
    let mut loss = 0.0;
    for (&t, &e) in times.iter().zip(epe) {
        let s = cpty.surv(t);
        loss += e * (prev_surv - s);
        prev_surv = s;
    }
    let upfront = (1.0 - cpty.recovery()) * loss;
    let ann = risky_annuity(times, cpty, discount)?;
    if !(ann > 0.0) {
        return Err(Error::Numerical("risky annuity is not positive".into()));
    }
    Ok(CvaResult {
        upfront,
        running_bps: upfront / ann * 1e4,
        risky_annuity: ann,
        profile_used: profile.label().to_string(),
    })
}

/// CVA on the overlay-adjusted EPE of one scenario.
pub fn cva_wwr(
    base: &ExposureProfile,
    stressed: &ExposureProfile,
    scenario: &StressScenario,
    snapshot: &MarketSnapshot,
    cpty: &CreditCurve,
    discount: &DiscountCurve,
) -> Result<CvaResult> {
    let wwr = epe_wwr_single(base, stressed, scenario, snapshot)?;
    cva(&wwr, cpty, discount)
}

fn fva_sum(times: &[f64], mtm: &[f64], funding: &FundingSpreadCurve) -> Result<f64> {
    if times.len() != mtm.len() {
        return Err(Error::Shape("MtM and grid lengths differ".into()));
    }
    let w = widths(times)?;
    Ok(times
        .iter()
        .zip(&w)
        .zip(mtm)
        .map(|((&t, &dt), &m)| dt * -(funding.spread(t) * m))
        .sum())
}

fn fva_result(
    value: f64,
    times: &[f64],
    discount: &DiscountCurve,
    stressed: bool,
) -> Result<FvaResult> {
    let ann = annuity(times, discount)?;
    Ok(FvaResult {
        value,
        upfront_bps: value * 1e4,
        running_bps: value / ann * 1e4,
        stressed,
    })
}

/// Symmetric FVA `sum dt_i (-FS(t_i) MtM(t_i))` on the expected discounted
/// MtM (the profile's EE).
pub fn fva(
    mtm: &ExposureProfile,
    funding: &FundingSpreadCurve,
    discount: &DiscountCurve,
) -> Result<FvaResult> {
    let value = fva_sum(&mtm.times, &mtm.ee, funding)?;
    fva_result(value, &mtm.times, discount, false)
}

/// FVA with the tail-event correction
/// `- lambda sum dt_i P(t_i) (FS_s MtM_s - FS MtM) IF(t_i)`.
#[allow(clippy::too_many_arguments)]
pub fn fva_wwr(
    mtm: &ExposureProfile,
    stressed_mtm: &ExposureProfile,
    funding: &FundingSpreadCurve,
    stressed_funding: &FundingSpreadCurve,
    scenario: &StressScenario,
    snapshot: &MarketSnapshot,
    discount: &DiscountCurve,
) -> Result<FvaResult> {
    mtm.same_grid(stressed_mtm)?;
    scenario.validate_static()?;
    let base = fva_sum(&mtm.times, &mtm.ee, funding)?;
    let w = widths(&mtm.times)?;
    let probs = scenario.probabilities_on(snapshot, &mtm.times)?;
    let lambda = scenario.coupling_lambda;
    let mut correction = 0.0;
    for i in 0..mtm.len() {
        let t = mtm.times[i];
        let (p, p_th) = probs[i];
        if lambda * p > 1.0 {
            return Err(Error::Validation(format!(
                "scenario '{}': lambda * P = {} > 1 at t = {t}",
                scenario.id,
                lambda * p
            )));
        }
        let factor = crate::wwr_overlay::interpolation_factor(p, p_th)?;
        let gap = stressed_funding.spread(t) * stressed_mtm.ee[i] - funding.spread(t) * mtm.ee[i];
        correction += w[i] * p * gap * factor;
    }
    fva_result(base - lambda * correction, &mtm.times, discount, true)
}

/// Stressed EPE interpolated between base and absolute stress by the
/// scenario's tanh weight, per bucket.
pub fn relative_stressed_epe(
    base: &ExposureProfile,
    stressed: &ExposureProfile,
    scenario: &StressScenario,
    snapshot: &MarketSnapshot,
) -> Result<Vec<f64>> {
    base.same_grid(stressed)?;
    let probs = scenario.probabilities_on(snapshot, &base.times)?;
    (0..base.len())
        .map(|i| stressed_epe_interp(base.epe[i], stressed.epe[i], probs[i].0, probs[i].1))
        .collect()
}

/// How the per-bucket stress gap collapses to one number per counterparty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HedgeAggregation {
    /// Time-weighted mean of the gap over the grid up to the horizon.
    #[default]
    TimeAverage,
    /// Gap at the last grid time not after the horizon.
    HorizonPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeInput {
    pub name: String,
    pub lambda: f64,
    pub cpty: CreditCurve,
    pub times: Vec<f64>,
    pub epe: Vec<f64>,
    pub stressed_epe: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeLine {
    pub name: String,
    pub lambda: f64,
    pub p_cpty: f64,
    pub gap: f64,
    pub term: f64,
    /// `lambda P gap(t_i)` on every bucket.
    pub per_bucket: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeReport {
    pub horizon: f64,
    pub aggregation: HedgeAggregation,
    pub lines: Vec<HedgeLine>,
    pub total: f64,
}

/// Sovereign-CDS hedge notional, proportional to
/// `sum_i lambda_i P_i(cpty) (EPE_i^stressed - EPE_i)`.
pub fn hedge_notional(
    inputs: &[HedgeInput],
    horizon: f64,
    aggregation: HedgeAggregation,
) -> Result<HedgeReport> {
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!(
            "hedge horizon must be > 0, got {horizon}"
        )));
    }
    let mut lines = Vec::with_capacity(inputs.len());
    for input in inputs {
        let n = input.times.len();
        if input.epe.len() != n || input.stressed_epe.len() != n {
            return Err(Error::Shape(format!(
                "hedge input '{}' has mismatched lengths",
                input.name
            )));
        }
        let w = widths(&input.times)?;
        let p = input.cpty.pd(horizon);
        let gaps: Vec<f64> = input
            .stressed_epe
            .iter()
            .zip(&input.epe)
            .map(|(s, b)| s - b)
            .collect();
        let live = input.times.partition_point(|&t| t <= horizon);
        let gap = match aggregation {
            HedgeAggregation::TimeAverage => {
                let span: f64 = w[..live].iter().sum();
                if span > 0.0 {
                    w[..live]
                        .iter()
                        .zip(&gaps)
                        .map(|(dt, g)| dt * g)
                        .sum::<f64>()
                        / span
                } else {
                    0.0
                }
            }
            HedgeAggregation::HorizonPoint => {
                if live == 0 {
                    0.0
                } else {
                    gaps[live - 1]
                }
            }
        };
        lines.push(HedgeLine {
            name: input.name.clone(),
            lambda: input.lambda,
            p_cpty: p,
            gap,
            term: input.lambda * p * gap,
            per_bucket: gaps.iter().map(|g| input.lambda * p * g).collect(),
        });
    }
    let total = lines.iter().map(|l| l.term).sum();
    Ok(HedgeReport {
        horizon,
        aggregation,
        lines,
        total,
    })
}
