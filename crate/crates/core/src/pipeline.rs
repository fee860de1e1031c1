//! One pricing run for one netting set: base and stressed exposure, the WWR
//! overlay, CVA/FVA with and without it, and the sovereign hedge.

use std::io::Write;

use log::info;
use serde::{Deserialize, Serialize};

use crate::config::RunInputs;
use crate::error::{Error, Result};
use crate::exposure::{exposure_profile, ExposureProfile};
use crate::wwr_overlay::{epe_wwr_multi, validate_scenarios, ScenarioCheck, WwrProfile};
use crate::xva::{
    cva, fva, fva_wwr, hedge_notional, relative_stressed_epe, HedgeInput, HedgeReport,
};

/// Per-scenario view, each scenario applied alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub id: String,
    pub lambda: f64,
    pub max_lambda_p: f64,
    pub cva_wwr_upfront: f64,
    pub cva_wwr_running_bps: f64,
    pub fva_wwr_bps: f64,
    pub fva_wwr_running_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XvaReport {
    pub counterparty: String,
    pub base_currency: String,
    pub n_paths: usize,
    pub seed: u64,
    pub cva_upfront: f64,
    pub cva_running_bps: f64,
    pub cva_wwr_upfront: f64,
    pub cva_wwr_running_bps: f64,
    /// Upfront, in bps of the reference notional.
    pub fva_bps: f64,
    pub fva_running_bps: f64,
    pub fva_wwr_bps: f64,
    pub fva_wwr_running_bps: f64,
    pub hedge_total: f64,
    pub risky_annuity: f64,
    pub scenarios: Vec<ScenarioReport>,
    pub scenario_check: ScenarioCheck,
    pub hedge: HedgeReport,
    pub max_parity_violation: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub base: ExposureProfile,
    pub stressed: Vec<ExposureProfile>,
    pub relative: Vec<Vec<f64>>,
    pub wwr: WwrProfile,
    pub report: XvaReport,
}

pub fn run(inputs: &RunInputs) -> Result<RunOutput> {
    let snapshot = &inputs.snapshot;
    let times = inputs.sim.grid.times();
    let check = validate_scenarios(&inputs.scenarios, snapshot, times, inputs.soft_cap)?;
    let cpty = snapshot.credit_curve(&inputs.counterparty)?;
    let discount = snapshot.discount_curve(&inputs.portfolio.base_currency)?;

    info!(
        "base exposure: {} paths, {} buckets",
        inputs.sim.n_paths,
        times.len()
    );
    let base = exposure_profile(&inputs.portfolio, snapshot, &inputs.sim)?;
    let mut stressed = Vec::with_capacity(inputs.scenarios.len());
    let mut shocked_markets = Vec::with_capacity(inputs.scenarios.len());
    for s in &inputs.scenarios {
        info!("stressed exposure for scenario '{}'", s.id);
        let shocked = snapshot.apply_shock(&s.shock)?;
        stressed.push(exposure_profile(&inputs.portfolio, &shocked, &inputs.sim)?);
        shocked_markets.push(shocked);
    }

    let wwr = epe_wwr_multi(&base, &stressed, &inputs.scenarios, snapshot)?;
    let base_cva = cva(&base, cpty, discount)?;
    let wwr_cva = cva(&wwr, cpty, discount)?;
    let base_fva = fva(&base, &snapshot.funding_curve, discount)?;

    let mut scenario_reports = Vec::with_capacity(inputs.scenarios.len());
    let mut relative = Vec::with_capacity(inputs.scenarios.len());
    let mut hedge_inputs = Vec::with_capacity(inputs.scenarios.len());
    let (mut fva_shift, mut fva_running_shift) = (0.0, 0.0);
    for (k, s) in inputs.scenarios.iter().enumerate() {
        let single = epe_wwr_multi(
            &base,
            std::slice::from_ref(&stressed[k]),
            std::slice::from_ref(s),
            snapshot,
        )?;
        let single_cva = cva(&single, cpty, discount)?;
        let single_fva = fva_wwr(
            &base,
            &stressed[k],
            &snapshot.funding_curve,
            &shocked_markets[k].funding_curve,
            s,
            snapshot,
            discount,
        )?;
        fva_shift += single_fva.value - base_fva.value;
        fva_running_shift += single_fva.running_bps - base_fva.running_bps;
        let max_lambda_p = times
            .iter()
            .map(|&t| s.probability(snapshot, t).map(|p| s.coupling_lambda * p))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        scenario_reports.push(ScenarioReport {
            id: s.id.clone(),
            lambda: s.coupling_lambda,
            max_lambda_p,
            cva_wwr_upfront: single_cva.upfront,
            cva_wwr_running_bps: single_cva.running_bps,
            fva_wwr_bps: single_fva.upfront_bps,
            fva_wwr_running_bps: single_fva.running_bps,
        });
        let rel = relative_stressed_epe(&base, &stressed[k], s, snapshot)?;
        hedge_inputs.push(HedgeInput {
            name: format!("{}:{}", inputs.counterparty, s.id),
            lambda: s.coupling_lambda,
            cpty: *cpty,
            times: base.times.clone(),
            epe: base.epe.clone(),
            stressed_epe: rel.clone(),
        });
        relative.push(rel);
    }
    let hedge = hedge_notional(
        &hedge_inputs,
        inputs.hedge_horizon,
        inputs.hedge_aggregation,
    )?;

    let numbers = [
        base_cva.upfront,
        wwr_cva.upfront,
        base_fva.value,
        fva_shift,
        hedge.total,
    ];
    if numbers.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite XVA result".into()));
    }

    let report = XvaReport {
        counterparty: inputs.counterparty.clone(),
        base_currency: inputs.portfolio.base_currency.clone(),
        n_paths: inputs.sim.n_paths,
        seed: inputs.sim.seed,
        cva_upfront: base_cva.upfront,
        cva_running_bps: base_cva.running_bps,
        cva_wwr_upfront: wwr_cva.upfront,
        cva_wwr_running_bps: wwr_cva.running_bps,
        fva_bps: base_fva.upfront_bps,
        fva_running_bps: base_fva.running_bps,
        fva_wwr_bps: (base_fva.value + fva_shift) * 1e4,
        fva_wwr_running_bps: base_fva.running_bps + fva_running_shift,
        hedge_total: hedge.total,
        risky_annuity: base_cva.risky_annuity,
        scenarios: scenario_reports,
        scenario_check: check,
        hedge,
        max_parity_violation: std::iter::once(&base)
            .chain(&stressed)
            .map(ExposureProfile::parity_violation)
            .fold(0.0, f64::max),
    };
    Ok(RunOutput {
        base,
        stressed,
        relative,
        wwr,
        report,
    })
}

impl RunOutput {
    /// Profile table: base columns, then absolute and interpolated stress
    /// per scenario, then the overlay EPE.
    pub fn write_profiles_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["t", "ee", "epe", "ene", "epe_stderr"]
            .map(String::from)
            .to_vec();
        for id in &self.wwr.scenario_ids {
            header.push(format!("epe_abs_stress_{id}"));
        }
        for id in &self.wwr.scenario_ids {
            header.push(format!("epe_rel_stress_{id}"));
        }
        header.push("epe_wwr".into());
        w.write_record(&header)?;
        let b = &self.base;
        for i in 0..b.len() {
            let mut row = vec![
                b.times[i].to_string(),
                b.ee[i].to_string(),
                b.epe[i].to_string(),
                b.ene[i].to_string(),
                b.epe_stderr[i].to_string(),
            ];
            row.extend(self.stressed.iter().map(|s| s.epe[i].to_string()));
            row.extend(self.relative.iter().map(|r| r[i].to_string()));
            row.push(self.wwr.epe[i].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
