//! Tail-event wrong-way-risk overlay.
//!
//! A stress scenario carries a market shock, a probability for the tail
//! event, a coupling `lambda` between the counterparty's default and that
//! event, and a threshold probability at which the stress is considered
//! already priced in. The overlay blends the base EPE with the EPE simulated
//! under the shocked market:
//!
//! ```text
//! EPE_wwr = EPE + lambda * P * (EPE_stress - EPE) * (1 - tanh(P / P_threshold))
//! ```
//!
//! which is the same number as the conditional-probability mixture
//! `lambda P * EPE_stressed + (1 - lambda P) * EPE` with `EPE_stressed` the
//! tanh interpolation between the two profiles. Several scenarios add their
//! corrections independently.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::{ExposureProfile, TimeGrid};
use crate::market_data::{interp_flat, MarketShock, MarketSnapshot, DEFAULT_RECOVERY};

/// Default soft cap on the summed coupled probability of all scenarios.
pub const DEFAULT_SOFT_CAP: f64 = 0.25;

/// Broad WWR classes for counterparties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WwrRating {
    Low,
    Medium,
    High,
}

pub fn rating_to_lambda(rating: WwrRating) -> f64 {
    match rating {
        WwrRating::Low => 1.0,
        WwrRating::Medium => 10.0,
        WwrRating::High => 100.0,
    }
}

impl std::fmt::Display for WwrRating {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WwrRating::Low => "low",
            WwrRating::Medium => "medium",
            WwrRating::High => "high",
        })
    }
}

/// Piecewise-linear probability schedule over time, flat outside its points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySchedule {
    pub times: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl ProbabilitySchedule {
    pub fn constant(p: f64) -> Self {
        Self {
            times: vec![0.0],
            probabilities: vec![p],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.probabilities.len() {
            return Err(Error::Config(
                "probability schedule needs matching, non-empty times and probabilities".into(),
            ));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "probability schedule times must be strictly increasing".into(),
            ));
        }
        if self.probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config(
                "scheduled probabilities must lie in [0,1]".into(),
            ));
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> f64 {
        interp_flat(&self.times, &self.probabilities, t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbabilitySource {
    /// Cumulative default probability of `entity` from its credit curve.
    CdsImplied {
        entity: String,
    },
    Fixed(ProbabilitySchedule),
}

/// The near-default level at which the stress counts as priced in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Probability(f64),
    /// A CDS spread (decimal), mapped to a probability through the credit
    /// triangle and the scenario's probability horizon.
    CdsSpread(f64),
}

/// Which horizon the scenario probability (and a spread threshold) refers to.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityMode {
    /// Cumulative probability to each bucket time.
    #[default]
    TermStructure,
    /// A single probability, cumulative to the given horizon, on every bucket.
    Horizon(f64),
}

impl ProbabilityMode {
    fn horizon(self, t: f64) -> f64 {
        match self {
            ProbabilityMode::TermStructure => t,
            ProbabilityMode::Horizon(h) => h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressScenario {
    pub id: String,
    pub shock: MarketShock,
    pub probability_source: ProbabilitySource,
    pub coupling_lambda: f64,
    pub threshold: Threshold,
    #[serde(default)]
    pub probability_mode: ProbabilityMode,
}

impl StressScenario {
    pub fn validate_static(&self) -> Result<()> {
        if !(self.coupling_lambda >= 0.0) || !self.coupling_lambda.is_finite() {
            return Err(Error::Config(format!(
                "scenario '{}': lambda must be finite and >= 0",
                self.id
            )));
        }
        match self.threshold {
            Threshold::Probability(p) if !(p > 0.0 && p < 1.0) => {
                return Err(Error::Config(format!(
                    "scenario '{}': threshold probability must be in (0,1)",
                    self.id
                )))
            }
            Threshold::CdsSpread(s) if !(s > 0.0) || !s.is_finite() => {
                return Err(Error::Config(format!(
                    "scenario '{}': threshold spread must be > 0",
                    self.id
                )))
            }
            _ => {}
        }
        if let ProbabilityMode::Horizon(h) = self.probability_mode {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::Config(format!(
                    "scenario '{}': horizon must be > 0",
                    self.id
                )));
            }
        }
        if let ProbabilitySource::Fixed(s) = &self.probability_source {
            s.validate()?;
        }
        self.shock.validate()
    }

    /// Probability of the tail event by `t`.
    pub fn probability(&self, snapshot: &MarketSnapshot, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("time must be >= 0, got {t}")));
        }
        let h = self.probability_mode.horizon(t);
        match &self.probability_source {
            ProbabilitySource::CdsImplied { entity } => {
                snapshot.credit_curve(entity)?.default_prob(h)
            }
            ProbabilitySource::Fixed(schedule) => Ok(schedule.at(h)),
        }
    }

    /// Threshold probability on the same horizon as [`Self::probability`].
    pub fn p_threshold(&self, snapshot: &MarketSnapshot, t: f64) -> Result<f64> {
        match self.threshold {
            Threshold::Probability(p) => Ok(p),
            Threshold::CdsSpread(spread) => {
                let recovery = match &self.probability_source {
                    ProbabilitySource::CdsImplied { entity } => {
                        snapshot.credit_curve(entity)?.recovery()
                    }
                    ProbabilitySource::Fixed(_) => DEFAULT_RECOVERY,
                };
                let hazard = spread / (1.0 - recovery);
                Ok(-(-hazard * self.probability_mode.horizon(t)).exp_m1())
            }
        }
    }

    /// `(P(t), P_threshold(t))` on every grid time.
    pub fn probabilities_on(
        &self,
        snapshot: &MarketSnapshot,
        times: &[f64],
    ) -> Result<Vec<(f64, f64)>> {
        times
            .iter()
            .map(|&t| {
                Ok((
                    self.probability(snapshot, t)?,
                    self.p_threshold(snapshot, t)?,
                ))
            })
            .collect()
    }
}

pub fn scenario_probability(
    scenario: &StressScenario,
    snapshot: &MarketSnapshot,
    t: f64,
) -> Result<f64> {
    scenario.probability(snapshot, t)
}

/// `1 - tanh(p / p_threshold)`: one when unstressed, vanishing once the
/// stress is priced in.
pub fn interpolation_factor(p: f64, p_threshold: f64) -> Result<f64> {
    if !(p_threshold > 0.0) {
        return Err(Error::Domain(format!(
            "threshold probability must be > 0, got {p_threshold}"
        )));
    }
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("probability must be >= 0, got {p}")));
    }
    Ok(1.0 - (p / p_threshold).tanh())
}

/// Stressed EPE interpolated between the current-market EPE and the EPE
/// under absolute stress.
pub fn stressed_epe_interp(epe: f64, epe_abs_stress: f64, p: f64, p_threshold: f64) -> Result<f64> {
    let w = (p / p_threshold).tanh();
    interpolation_factor(p, p_threshold)?;
    Ok(epe * w + epe_abs_stress * (1.0 - w))
}

/// Mixture of stressed and base EPE weighted by the conditional probability
/// of the tail event given the counterparty's default.
pub fn probabilistic_sum(conditional_p: f64, epe_stressed: f64, epe: f64) -> f64 {
    conditional_p * epe_stressed + (1.0 - conditional_p) * epe
}

/// Single-bucket WWR correction `lambda P (EPE_stress - EPE) IF`.
pub fn wwr_correction(
    epe: f64,
    epe_abs_stress: f64,
    lambda: f64,
    p: f64,
    p_threshold: f64,
) -> Result<f64> {
    let factor = interpolation_factor(p, p_threshold)?;
    Ok(lambda * p * (epe_abs_stress - epe) * factor)
}

/// EPE after the WWR overlay, with the per-scenario corrections kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WwrProfile {
    pub scenario_ids: Vec<String>,
    pub times: Vec<f64>,
    pub epe: Vec<f64>,
    /// One correction vector per scenario, in `scenario_ids` order.
    pub corrections: Vec<Vec<f64>>,
}

fn coupled_check(scenario: &StressScenario, lambda_p: f64, t: f64) -> Result<()> {
    if lambda_p > 1.0 {
        return Err(Error::Validation(format!(
            "scenario '{}': lambda * P = {lambda_p:.6} > 1 at t = {t}",
            scenario.id
        )));
    }
    Ok(())
}

fn scenario_corrections(
    base: &ExposureProfile,
    stressed: &ExposureProfile,
    scenario: &StressScenario,
    snapshot: &MarketSnapshot,
) -> Result<Vec<f64>> {
    base.same_grid(stressed)?;
    scenario.validate_static()?;
    let probs = scenario.probabilities_on(snapshot, &base.times)?;
    let lambda = scenario.coupling_lambda;
    base.times
        .iter()
        .zip(&probs)
        .enumerate()
        .map(|(i, (&t, &(p, p_th)))| {
            coupled_check(scenario, lambda * p, t)?;
            wwr_correction(base.epe[i], stressed.epe[i], lambda, p, p_th)
        })
        .collect()
}

pub fn epe_wwr_single(
    base: &ExposureProfile,
    stressed: &ExposureProfile,
    scenario: &StressScenario,
    snapshot: &MarketSnapshot,
) -> Result<WwrProfile> {
    epe_wwr_multi(
        base,
        std::slice::from_ref(stressed),
        std::slice::from_ref(scenario),
        snapshot,
    )
}

/// Sums independent scenario corrections onto the base EPE.
pub fn epe_wwr_multi(
    base: &ExposureProfile,
    stressed: &[ExposureProfile],
    scenarios: &[StressScenario],
    snapshot: &MarketSnapshot,
) -> Result<WwrProfile> {
    if stressed.len() != scenarios.len() {
        return Err(Error::Shape(format!(
            "{} stressed profiles for {} scenarios",
            stressed.len(),
            scenarios.len()
        )));
    }
    // hard bound only; soft-cap warnings belong to the caller's own check
    validate_scenarios(scenarios, snapshot, &base.times, f64::INFINITY)?;
    let corrections = stressed
        .iter()
        .zip(scenarios)
        .map(|(s, sc)| scenario_corrections(base, s, sc, snapshot))
        .collect::<Result<Vec<_>>>()?;
    let epe = (0..base.len())
        .map(|i| corrections.iter().fold(base.epe[i], |acc, c| acc + c[i]))
        .collect();
    Ok(WwrProfile {
        scenario_ids: scenarios.iter().map(|s| s.id.clone()).collect(),
        times: base.times.clone(),
        epe,
        corrections,
    })
}

/// Outcome of a scenario-set check that did not hit the hard bound.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioCheck {
    /// Largest summed `lambda_k P_k(t)` over the grid.
    pub max_total: f64,
    pub max_total_at: f64,
    pub warnings: Vec<String>,
}

impl ScenarioCheck {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Checks that the summed coupled probability of all scenarios stays at or
/// below one on every grid time (hard) and below `soft_cap` (warning).
pub fn validate_scenarios(
    scenarios: &[StressScenario],
    snapshot: &MarketSnapshot,
    grid: &[f64],
    soft_cap: f64,
) -> Result<ScenarioCheck> {
    let mut check = ScenarioCheck::default();
    for s in scenarios {
        s.validate_static()?;
    }
    for &t in grid {
        let mut total = 0.0;
        for s in scenarios {
            total += s.coupling_lambda * s.probability(snapshot, t)?;
        }
        if total > check.max_total {
            check.max_total = total;
            check.max_total_at = t;
        }
    }
    if check.max_total > 1.0 {
        return Err(Error::Validation(format!(
            "sum of lambda * P over scenarios reaches {:.6} > 1 at t = {}",
            check.max_total, check.max_total_at
        )));
    }
    if check.max_total > soft_cap {
        let msg = format!(
            "sum of lambda * P over scenarios reaches {:.4} at t = {}, above the soft cap {soft_cap}",
            check.max_total, check.max_total_at
        );
        warn!("{msg}");
        check.warnings.push(msg);
    }
    Ok(check)
}

/// Convenience for grids held as [`TimeGrid`].
pub fn validate_scenarios_on_grid(
    scenarios: &[StressScenario],
    snapshot: &MarketSnapshot,
    grid: &TimeGrid,
) -> Result<ScenarioCheck> {
    validate_scenarios(scenarios, snapshot, grid.times(), DEFAULT_SOFT_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{bootstrap_flat_cds, FundingSpreadCurve};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn snapshot() -> MarketSnapshot {
        MarketSnapshot::new(FundingSpreadCurve::flat(0.01).unwrap())
            .with_credit_curve("SOV", bootstrap_flat_cds(0.02, 0.4).unwrap())
            .with_credit_curve("SOV_WIDE", bootstrap_flat_cds(0.09, 0.4).unwrap())
    }

    fn scenario(lambda: f64, source: ProbabilitySource, threshold: Threshold) -> StressScenario {
        StressScenario {
            id: "sov".into(),
            shock: MarketShock::default(),
            probability_source: source,
            coupling_lambda: lambda,
            threshold,
            probability_mode: ProbabilityMode::TermStructure,
        }
    }

    fn fixed(lambda: f64, p: f64, p_th: f64) -> StressScenario {
        scenario(
            lambda,
            ProbabilitySource::Fixed(ProbabilitySchedule::constant(p)),
            Threshold::Probability(p_th),
        )
    }

    fn flat_profile(times: &[f64], epe: f64) -> ExposureProfile {
        let n = times.len();
        ExposureProfile {
            times: times.to_vec(),
            epe: vec![epe; n],
            ene: vec![0.0; n],
            ee: vec![epe; n],
            epe_stderr: vec![0.0; n],
            ene_stderr: vec![0.0; n],
            ee_stderr: vec![0.0; n],
            n_paths: 1,
        }
    }

    #[test]
    fn ratings_ladder() {
        assert_eq!(rating_to_lambda(WwrRating::Low), 1.0);
        assert_eq!(rating_to_lambda(WwrRating::Medium), 10.0);
        assert_eq!(rating_to_lambda(WwrRating::High), 100.0);
    }

    #[test]
    fn cds_implied_probability() {
        let s = scenario(
            1.0,
            ProbabilitySource::CdsImplied {
                entity: "SOV".into(),
            },
            Threshold::CdsSpread(0.10),
        );
        let m = snapshot();
        assert_relative_eq!(s.probability(&m, 10.0).unwrap(), 0.28347, epsilon = 1e-5);
        assert_relative_eq!(
            s.probability(&m, 10.0).unwrap(),
            1.0 - (-1.0f64 / 3.0).exp(),
            epsilon = 1e-15
        );
        assert_eq!(s.probability(&m, 0.0).unwrap(), 0.0);
        // threshold on the same horizon: 1000bp at 40% recovery
        assert_relative_eq!(
            s.p_threshold(&m, 1.0).unwrap(),
            1.0 - (-1.0f64 / 6.0).exp(),
            epsilon = 1e-15
        );

        let mut at_horizon = s.clone();
        at_horizon.probability_mode = ProbabilityMode::Horizon(10.0);
        assert_eq!(
            at_horizon.probability(&m, 0.5).unwrap(),
            s.probability(&m, 10.0).unwrap()
        );

        let missing = scenario(
            1.0,
            ProbabilitySource::CdsImplied {
                entity: "XX".into(),
            },
            Threshold::Probability(0.1),
        );
        assert!(matches!(
            missing.probability(&m, 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fixed_probability_passthrough() {
        let s = fixed(1.0, 0.05, 0.2);
        for t in [0.0, 0.5, 3.0, 30.0] {
            assert_eq!(scenario_probability(&s, &snapshot(), t).unwrap(), 0.05);
        }
    }

    #[test]
    fn interpolation_factor_values() {
        assert_eq!(interpolation_factor(0.0, 0.1).unwrap(), 1.0);
        assert_relative_eq!(
            interpolation_factor(0.1, 0.1).unwrap(),
            0.238405844044,
            epsilon = 1e-12
        );
        assert!(interpolation_factor(1.0, 0.1).unwrap() <= 5e-9);
        assert!(interpolation_factor(0.1, 0.0).is_err());
        assert!(interpolation_factor(0.1, -1.0).is_err());
    }

    #[test]
    fn interpolated_stress_limits() {
        assert_eq!(stressed_epe_interp(1.0, 3.0, 0.0, 0.2).unwrap(), 3.0);
        assert_relative_eq!(
            stressed_epe_interp(1.0, 3.0, 20.0, 0.2).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            stressed_epe_interp(1.0, 3.0, 0.1, 0.2).unwrap(),
            2.075766,
            epsilon = 1e-6
        );
        assert!(stressed_epe_interp(1.0, 3.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn single_scenario_overlay() {
        let times = [1.0, 2.0];
        let base = flat_profile(&times, 1.0);
        let stressed = flat_profile(&times, 3.0);
        let out = epe_wwr_single(&base, &stressed, &fixed(1.0, 0.1, 0.2), &snapshot()).unwrap();
        for v in &out.epe {
            assert_relative_eq!(*v, 1.1075766, epsilon = 1e-7);
            let composed =
                probabilistic_sum(0.1, stressed_epe_interp(1.0, 3.0, 0.1, 0.2).unwrap(), 1.0);
            assert_relative_eq!(*v, composed, max_relative = 1e-12);
        }
        assert_eq!(out.scenario_ids, vec!["sov".to_string()]);

        let decoupled =
            epe_wwr_single(&base, &stressed, &fixed(0.0, 0.1, 0.2), &snapshot()).unwrap();
        assert_eq!(decoupled.epe, base.epe);
        let no_impact = epe_wwr_single(&base, &base, &fixed(1.0, 0.1, 0.2), &snapshot()).unwrap();
        assert_eq!(no_impact.epe, base.epe);
    }

    #[test]
    fn overlay_errors() {
        let base = flat_profile(&[1.0, 2.0], 1.0);
        let other = flat_profile(&[1.0, 3.0], 1.0);
        assert!(matches!(
            epe_wwr_single(&base, &other, &fixed(1.0, 0.1, 0.2), &snapshot()),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            epe_wwr_single(&base, &base, &fixed(20.0, 0.1, 0.2), &snapshot()),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            epe_wwr_single(&base, &base, &fixed(1.0, 0.1, 1.0), &snapshot()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn multi_scenario_is_additive() {
        let times = [0.5, 1.0, 1.5];
        let base = flat_profile(&times, 1.0);
        let s1 = flat_profile(&times, 2.5);
        let s2 = flat_profile(&times, 0.2);
        let a = fixed(1.0, 0.05, 0.2);
        let mut b = scenario(
            2.0,
            ProbabilitySource::CdsImplied {
                entity: "SOV".into(),
            },
            Threshold::CdsSpread(0.10),
        );
        b.id = "second".into();
        let m = snapshot();
        let both = epe_wwr_multi(
            &base,
            &[s1.clone(), s2.clone()],
            &[a.clone(), b.clone()],
            &m,
        )
        .unwrap();
        for (i, &t) in times.iter().enumerate() {
            let c1 = 1.0 * 0.05 * (2.5 - 1.0) * (1.0 - (0.05f64 / 0.2).tanh());
            let p = 1.0 - (-t / 30.0f64).exp();
            let p_th = 1.0 - (-t / 6.0f64).exp();
            let c2 = 2.0 * p * (0.2 - 1.0) * (1.0 - (p / p_th).tanh());
            assert_relative_eq!(both.epe[i], 1.0 + c1 + c2, epsilon = 1e-14);
        }
        let single = epe_wwr_single(&base, &s1, &a, &m).unwrap();
        let multi_one = epe_wwr_multi(&base, &[s1], &[a], &m).unwrap();
        assert_eq!(single, multi_one);
        let empty = epe_wwr_multi(&base, &[], &[], &m).unwrap();
        assert_eq!(empty.epe, base.epe);
    }

    #[test]
    fn validation_bounds() {
        let m = snapshot();
        let grid = [5.0, 10.0];
        assert!(matches!(
            validate_scenarios(&[fixed(10.0, 0.15, 0.2)], &m, &grid, DEFAULT_SOFT_CAP),
            Err(Error::Validation(_))
        ));
        let sov = scenario(
            1.0,
            ProbabilitySource::CdsImplied {
                entity: "SOV".into(),
            },
            Threshold::CdsSpread(0.10),
        );
        let check = validate_scenarios(&[sov], &m, &grid, DEFAULT_SOFT_CAP).unwrap();
        assert_relative_eq!(check.max_total, 0.28347, epsilon = 1e-5);
        assert_eq!(check.max_total_at, 10.0);
        assert_eq!(check.warnings.len(), 1);
        let ok = validate_scenarios(&[], &m, &grid, DEFAULT_SOFT_CAP).unwrap();
        assert!(ok.is_clean());
        // two scenarios individually fine but jointly above one
        assert!(validate_scenarios(
            &[fixed(6.0, 0.1, 0.2), fixed(6.0, 0.1, 0.2)],
            &m,
            &grid,
            DEFAULT_SOFT_CAP
        )
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn closed_form_matches_composition(
            epe in 0.0f64..1.0, abs in 0.0f64..1.0, p in 0.0f64..1.0, p_th in 1e-4f64..1.0, u in 0.0f64..=1.0
        ) {
            let lambda = if p > 0.0 { u / p } else { u * 100.0 };
            let closed = epe + wwr_correction(epe, abs, lambda, p, p_th).unwrap();
            let composed = probabilistic_sum(lambda * p, stressed_epe_interp(epe, abs, p, p_th).unwrap(), epe);
            let scale = closed.abs().max(f64::MIN_POSITIVE);
            prop_assert!((closed - composed).abs() <= 1e-12 * scale.max(epe.max(abs) * 1e-3));
        }

        #[test]
        fn sign_law_and_bounds(
            epe in 0.0f64..1.0, abs in 0.0f64..1.0, p in 1e-6f64..0.5, p_th in 1e-3f64..0.9, lambda in 0.0f64..1.0
        ) {
            let wwr = epe + wwr_correction(epe, abs, lambda, p, p_th).unwrap();
            let full = epe + lambda * p * (abs - epe);
            let (lo, hi) = if full < epe { (full, epe) } else { (epe, full) };
            prop_assert!(wwr >= lo - 1e-15 && wwr <= hi + 1e-15);
            let strict = lambda * p * interpolation_factor(p, p_th).unwrap() * (abs - epe).abs() > 1e-12;
            if abs > epe && strict {
                prop_assert!(wwr > epe);
            }
            if abs < epe && strict {
                prop_assert!(wwr < epe);
            }
        }

        #[test]
        fn affine_in_lambda(epe in 0.0f64..1.0, abs in 0.0f64..1.0, p in 1e-6f64..0.3, p_th in 1e-3f64..0.9, l1 in 0.0f64..1.0, l2 in 0.0f64..1.0) {
            let f = |l: f64| epe + wwr_correction(epe, abs, l, p, p_th).unwrap();
            let mid = f(0.5 * (l1 + l2));
            prop_assert!((mid - 0.5 * (f(l1) + f(l2))).abs() < 1e-14);
            if l2 > l1 {
                prop_assert!((f(l2) - f(l1)) * (abs - epe) >= 0.0);
            }
        }
    }
}
