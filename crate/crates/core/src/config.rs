//! File formats for market, portfolio, scenario and run configs.
//!
//! All files are JSON. A run file (`.cfg`) bundles the other three, either
//! inline or as paths relative to the run file, plus simulation and report
//! settings. Converting a file into engine types records every value the
//! engine filled in on the caller's behalf in a [`Defaults`] list.
//!
//! Units: spreads in the market file are in basis points; shocks are decimal
//! (`0.05` is +500bp, `0.4` is a 40% devaluation).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::{
    FxModel, RateModel, SimConfig, TimeGrid, DEFAULT_FX_VOL, DEFAULT_MEAN_REVERSION,
    DEFAULT_NORMAL_VOL,
};
use crate::instruments::{
    par_rate, CrossCurrencySwap, InstrumentPortfolio, InterestRateSwap, SwapDirection, Trade,
};
use crate::market_data::{
    bootstrap_flat_cds, DiscountCurve, FundingSpreadCurve, FxSpot, MarketShock, MarketSnapshot,
    DEFAULT_RECOVERY,
};
use crate::wwr_overlay::{
    rating_to_lambda, ProbabilityMode, ProbabilitySource, StressScenario, Threshold, WwrRating,
    DEFAULT_SOFT_CAP,
};
use crate::xva::HedgeAggregation;

pub const DEFAULT_N_PATHS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_GRID_STEP: f64 = 0.25;

/// One value the engine chose because the input left it out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilledDefault {
    pub field: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Defaults(pub Vec<FilledDefault>);

impl Defaults {
    pub fn record(&mut self, field: impl Into<String>, value: impl Serialize) {
        self.0.push(FilledDefault {
            field: field.into(),
            value: serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        });
    }

    pub fn iter(&self) -> impl Iterator<Item = &FilledDefault> {
        self.0.iter()
    }

    pub fn contains(&self, field: &str) -> bool {
        self.0.iter().any(|d| d.field == field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CurveSpec {
    Flat {
        flat: f64,
    },
    Pillars {
        pillars: Vec<f64>,
        zero_rates: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreditSpec {
    pub spread_bps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum FundingSpec {
    Flat {
        flat_bps: f64,
    },
    Pillars {
        pillars: Vec<f64>,
        spreads_bps: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketFile {
    pub discount_curves: BTreeMap<String, CurveSpec>,
    #[serde(default)]
    pub credit_curves: BTreeMap<String, CreditSpec>,
    /// `"INT/EXT"` to units of EXT per unit of INT.
    #[serde(default)]
    pub fx_spots: BTreeMap<String, f64>,
    pub funding_curve: FundingSpec,
}

impl MarketFile {
    pub fn build(&self, defaults: &mut Defaults) -> Result<MarketSnapshot> {
        let funding = match &self.funding_curve {
            FundingSpec::Flat { flat_bps } => FundingSpreadCurve::flat(flat_bps * 1e-4)?,
            FundingSpec::Pillars {
                pillars,
                spreads_bps,
            } => FundingSpreadCurve::new(
                pillars.clone(),
                spreads_bps.iter().map(|s| s * 1e-4).collect(),
            )?,
        };
        let mut snapshot = MarketSnapshot::new(funding);
        for (ccy, spec) in &self.discount_curves {
            let curve = match spec {
                CurveSpec::Flat { flat } => DiscountCurve::flat(*flat)?,
                CurveSpec::Pillars {
                    pillars,
                    zero_rates,
                } => DiscountCurve::new(pillars.clone(), zero_rates.clone())?,
            };
            snapshot = snapshot.with_discount_curve(ccy.clone(), curve);
        }
        for (entity, spec) in &self.credit_curves {
            let recovery = spec.recovery.unwrap_or_else(|| {
                defaults.record(format!("credit_curves.{entity}.recovery"), DEFAULT_RECOVERY);
                DEFAULT_RECOVERY
            });
            if !(spec.spread_bps >= 0.0) {
                return Err(Error::Config(format!(
                    "credit curve '{entity}': spread_bps must be >= 0"
                )));
            }
            snapshot = snapshot.with_credit_curve(
                entity.clone(),
                bootstrap_flat_cds(spec.spread_bps * 1e-4, recovery)?,
            );
        }
        for (pair, rate) in &self.fx_spots {
            snapshot = snapshot.with_fx_spot(FxSpot::from_pair(pair, *rate)?);
        }
        Ok(snapshot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum TradeSpec {
    Irs {
        notional: f64,
        direction: SwapDirection,
        /// Omitted means par at inception plus `par_offset_bps`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fixed_rate: Option<f64>,
        #[serde(default)]
        par_offset_bps: f64,
        maturity: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        payment_frequency: Option<u32>,
        currency: String,
    },
    Ccs {
        notional_external: f64,
        /// Omitted means `notional_external / spot`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        notional_internal: Option<f64>,
        fx_pair: String,
        maturity: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        payment_frequency: Option<u32>,
        #[serde(default)]
        external_spread_bps: f64,
        #[serde(default)]
        internal_spread_bps: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioFile {
    /// Credit-curve entity of the counterparty facing this netting set.
    pub counterparty: String,
    pub base_currency: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub netting: Option<bool>,
    pub trades: Vec<TradeSpec>,
}

fn frequency(f: Option<u32>, field: String, defaults: &mut Defaults) -> u32 {
    f.unwrap_or_else(|| {
        defaults.record(field, 4);
        4
    })
}

impl PortfolioFile {
    pub fn build(
        &self,
        snapshot: &MarketSnapshot,
        defaults: &mut Defaults,
    ) -> Result<InstrumentPortfolio> {
        snapshot.credit_curve(&self.counterparty)?;
        let mut trades = Vec::with_capacity(self.trades.len());
        for (i, spec) in self.trades.iter().enumerate() {
            let trade = match spec {
                TradeSpec::Irs {
                    notional,
                    direction,
                    fixed_rate,
                    par_offset_bps,
                    maturity,
                    payment_frequency,
                    currency,
                } => {
                    let mut swap = InterestRateSwap {
                        notional: *notional,
                        direction: *direction,
                        fixed_rate: 0.0,
                        maturity: *maturity,
                        payment_frequency: frequency(
                            *payment_frequency,
                            format!("trades[{i}].payment_frequency"),
                            defaults,
                        ),
                        currency: currency.clone(),
                    };
                    swap.fixed_rate = match fixed_rate {
                        Some(k) => *k,
                        None => {
                            let k = par_rate(&swap, snapshot)? + par_offset_bps * 1e-4;
                            defaults.record(format!("trades[{i}].fixed_rate"), k);
                            k
                        }
                    };
                    Trade::Irs(swap)
                }
                TradeSpec::Ccs {
                    notional_external,
                    notional_internal,
                    fx_pair,
                    maturity,
                    payment_frequency,
                    external_spread_bps,
                    internal_spread_bps,
                } => {
                    let internal = match notional_internal {
                        Some(n) => *n,
                        None => {
                            let n = notional_external / snapshot.fx_spot(fx_pair)?.rate();
                            defaults.record(format!("trades[{i}].notional_internal"), n);
                            n
                        }
                    };
                    Trade::Ccs(CrossCurrencySwap {
                        notional_external: *notional_external,
                        notional_internal: internal,
                        fx_pair: fx_pair.clone(),
                        maturity: *maturity,
                        payment_frequency: frequency(
                            *payment_frequency,
                            format!("trades[{i}].payment_frequency"),
                            defaults,
                        ),
                        external_spread: external_spread_bps * 1e-4,
                        internal_spread: internal_spread_bps * 1e-4,
                    })
                }
            };
            trades.push(trade);
        }
        let mut portfolio = InstrumentPortfolio::new(self.base_currency.clone(), trades);
        portfolio.netting = self.netting.unwrap_or_else(|| {
            defaults.record("portfolio.netting", true);
            true
        });
        portfolio.validate()?;
        Ok(portfolio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    #[serde(default)]
    pub shock: MarketShock,
    pub probability_source: ProbabilitySource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<WwrRating>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_threshold_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability_mode: Option<ProbabilityMode>,
}

impl ScenarioSpec {
    pub fn build(&self, defaults: &mut Defaults) -> Result<StressScenario> {
        let lambda = match (self.lambda, self.rating) {
            (Some(l), None) => l,
            (None, Some(r)) => rating_to_lambda(r),
            _ => {
                return Err(Error::Config(format!(
                    "scenario '{}': give exactly one of lambda or rating",
                    self.id
                )))
            }
        };
        let threshold = match (self.p_threshold_bps, self.p_threshold) {
            (Some(bps), None) => Threshold::CdsSpread(bps * 1e-4),
            (None, Some(p)) => Threshold::Probability(p),
            _ => {
                return Err(Error::Config(format!(
                    "scenario '{}': give exactly one of p_threshold_bps or p_threshold",
                    self.id
                )))
            }
        };
        let mode = self.probability_mode.unwrap_or_else(|| {
            defaults.record(
                format!("scenarios.{}.probability_mode", self.id),
                ProbabilityMode::default(),
            );
            ProbabilityMode::default()
        });
        let scenario = StressScenario {
            id: self.id.clone(),
            shock: self.shock.clone(),
            probability_source: self.probability_source.clone(),
            coupling_lambda: lambda,
            threshold,
            probability_mode: mode,
        };
        scenario.validate_static()?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    /// Defaults to the longest trade maturity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_reversion: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_vol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fx_vol: Option<f64>,
}

fn or_default<T: Serialize + Copy>(
    v: Option<T>,
    field: &str,
    fallback: T,
    defaults: &mut Defaults,
) -> T {
    v.unwrap_or_else(|| {
        defaults.record(field, fallback);
        fallback
    })
}

impl SimulationSpec {
    pub fn build(&self, max_maturity: f64, defaults: &mut Defaults) -> Result<SimConfig> {
        let n_paths = or_default(
            self.n_paths,
            "simulation.n_paths",
            DEFAULT_N_PATHS,
            defaults,
        );
        let seed = or_default(self.seed, "simulation.seed", DEFAULT_SEED, defaults);
        let step = or_default(
            self.grid_step,
            "simulation.grid_step",
            DEFAULT_GRID_STEP,
            defaults,
        );
        let horizon = or_default(self.horizon, "simulation.horizon", max_maturity, defaults);
        let rate_model = RateModel {
            mean_reversion: or_default(
                self.mean_reversion,
                "simulation.mean_reversion",
                DEFAULT_MEAN_REVERSION,
                defaults,
            ),
            normal_vol: or_default(
                self.normal_vol,
                "simulation.normal_vol",
                DEFAULT_NORMAL_VOL,
                defaults,
            ),
        };
        let fx_model = FxModel {
            lognormal_vol: or_default(self.fx_vol, "simulation.fx_vol", DEFAULT_FX_VOL, defaults),
        };
        let cfg = SimConfig {
            n_paths,
            seed,
            grid: TimeGrid::uniform(step, horizon)?,
            rate_model,
            fx_model,
            execution: Default::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hedge_aggregation: Option<HedgeAggregation>,
    /// Defaults to the simulation horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hedge_horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_cap: Option<f64>,
}

/// Either an inline object or a path to a JSON file holding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    fn resolve(&self, base_dir: &Path) -> Result<T> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::Path(p) => read_json(&base_dir.join(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub market: Source<MarketFile>,
    pub portfolio: Source<PortfolioFile>,
    pub scenarios: Source<Vec<ScenarioSpec>>,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub report: ReportSpec,
}

/// All inputs of one run with file references replaced by their contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRun {
    pub market: MarketFile,
    pub portfolio: PortfolioFile,
    pub scenarios: Vec<ScenarioSpec>,
    pub simulation: SimulationSpec,
    pub report: ReportSpec,
}

/// Engine-ready inputs of one run.
#[derive(Debug, Clone)]
pub struct RunInputs {
    pub snapshot: MarketSnapshot,
    pub portfolio: InstrumentPortfolio,
    pub counterparty: String,
    pub scenarios: Vec<StressScenario>,
    pub sim: SimConfig,
    pub hedge_aggregation: HedgeAggregation,
    pub hedge_horizon: f64,
    pub soft_cap: f64,
    pub defaults: Defaults,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read '{}': {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("'{}': {e}", path.display())))
}

impl RunFile {
    pub fn load(path: &Path) -> Result<ResolvedRun> {
        let run: RunFile = read_json(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Ok(ResolvedRun {
            market: run.market.resolve(dir)?,
            portfolio: run.portfolio.resolve(dir)?,
            scenarios: run.scenarios.resolve(dir)?,
            simulation: run.simulation,
            report: run.report,
        })
    }
}

impl ResolvedRun {
    pub fn from_parts(market: &Path, portfolio: &Path, scenarios: &Path) -> Result<Self> {
        Ok(Self {
            market: read_json(market)?,
            portfolio: read_json(portfolio)?,
            scenarios: read_json(scenarios)?,
            simulation: SimulationSpec::default(),
            report: ReportSpec::default(),
        })
    }

    pub fn build(&self) -> Result<RunInputs> {
        let mut defaults = Defaults::default();
        let snapshot = self.market.build(&mut defaults)?;
        let portfolio = self.portfolio.build(&snapshot, &mut defaults)?;
        let mut ids = std::collections::BTreeSet::new();
        let mut scenarios = Vec::with_capacity(self.scenarios.len());
        for spec in &self.scenarios {
            if !ids.insert(spec.id.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate scenario id '{}'",
                    spec.id
                )));
            }
            scenarios.push(spec.build(&mut defaults)?);
        }
        let sim = self
            .simulation
            .build(portfolio.max_maturity(), &mut defaults)?;
        let hedge_aggregation = or_default(
            self.report.hedge_aggregation,
            "report.hedge_aggregation",
            HedgeAggregation::default(),
            &mut defaults,
        );
        let hedge_horizon = or_default(
            self.report.hedge_horizon,
            "report.hedge_horizon",
            sim.grid.last(),
            &mut defaults,
        );
        let soft_cap = or_default(
            self.report.soft_cap,
            "report.soft_cap",
            DEFAULT_SOFT_CAP,
            &mut defaults,
        );
        Ok(RunInputs {
            snapshot,
            portfolio,
            counterparty: self.portfolio.counterparty.clone(),
            scenarios,
            sim,
            hedge_aggregation,
            hedge_horizon,
            soft_cap,
            defaults,
        })
    }
}
