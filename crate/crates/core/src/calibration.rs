//! Historical estimate of the coupling between a counterparty and its
//! sovereign from CDS spread histories, and the mapping onto WWR ratings.
//!
//! A day counts as a (proxy) default day for an entity when its spread is
//! strictly above the entity's threshold. On the inner join of the two date
//! sets:
//!
//! ```text
//! lambda = P(cpty | sov) / P(cpty) = P(sov | cpty) / P(sov)
//! ```

use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wwr_overlay::WwrRating;

/// Daily CDS spreads for one entity, dates strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CdsSeries {
    dates: Vec<NaiveDate>,
    spreads_bps: Vec<f64>,
}

impl CdsSeries {
    pub fn new(dates: Vec<NaiveDate>, spreads_bps: Vec<f64>) -> Result<Self> {
        if dates.len() != spreads_bps.len() {
            return Err(Error::Domain("dates and spreads differ in length".into()));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "series dates must be strictly increasing".into(),
            ));
        }
        if let Some(s) = spreads_bps.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::Domain(format!(
                "spreads must be finite and >= 0, got {s}"
            )));
        }
        Ok(Self { dates, spreads_bps })
    }

    /// Sorts by date; duplicate dates are an error.
    pub fn from_unsorted(mut points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        points.sort_by_key(|p| p.0);
        let (dates, spreads) = points.into_iter().unzip();
        Self::new(dates, spreads)
    }

    /// Reads a two-column `date,spread_bps` CSV with a header row. Dates are
    /// ISO `YYYY-MM-DD`; rows may come in any order.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            date: NaiveDate,
            spread_bps: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut points = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            points.push((row.date, row.spread_bps));
        }
        Self::from_unsorted(points)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn spreads_bps(&self) -> &[f64] {
        &self.spreads_bps
    }
}

/// Two series restricted to their common dates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSeries {
    pub dates: Vec<NaiveDate>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub dropped_first: usize,
    pub dropped_second: usize,
}

pub fn align(first: &CdsSeries, second: &CdsSeries) -> AlignedSeries {
    let mut out = AlignedSeries {
        dates: Vec::new(),
        first: Vec::new(),
        second: Vec::new(),
        dropped_first: 0,
        dropped_second: 0,
    };
    let (mut i, mut j) = (0, 0);
    while i < first.len() && j < second.len() {
        match first.dates[i].cmp(&second.dates[j]) {
            std::cmp::Ordering::Less => {
                out.dropped_first += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.dropped_second += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.dates.push(first.dates[i]);
                out.first.push(first.spreads_bps[i]);
                out.second.push(second.spreads_bps[j]);
                i += 1;
                j += 1;
            }
        }
    }
    out.dropped_first += first.len() - i;
    out.dropped_second += second.len() - j;
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceedanceCounts {
    pub days: usize,
    pub cpty: usize,
    pub sov: usize,
    pub joint: usize,
    pub dropped_cpty: usize,
    pub dropped_sov: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    /// `P(cpty | sov) / P(cpty)`.
    pub lambda: f64,
    /// `P(sov | cpty) / P(sov)`; equal to `lambda` on the same sample.
    pub dual_lambda: f64,
    pub p_cpty: f64,
    pub p_sov: f64,
    pub p_cpty_given_sov: f64,
    pub p_sov_given_cpty: f64,
    pub counts: ExceedanceCounts,
}

pub fn estimate_lambda(
    cpty: &CdsSeries,
    sov: &CdsSeries,
    cpty_threshold_bps: f64,
    sov_threshold_bps: f64,
) -> Result<LambdaEstimate> {
    let aligned = align(cpty, sov);
    let mut counts = ExceedanceCounts {
        days: aligned.dates.len(),
        cpty: 0,
        sov: 0,
        joint: 0,
        dropped_cpty: aligned.dropped_first,
        dropped_sov: aligned.dropped_second,
    };
    for (c, s) in aligned.first.iter().zip(&aligned.second) {
        let (ce, se) = (*c > cpty_threshold_bps, *s > sov_threshold_bps);
        counts.cpty += usize::from(ce);
        counts.sov += usize::from(se);
        counts.joint += usize::from(ce && se);
    }
    let fail = |message: &str| Error::Estimation {
        message: message.to_string(),
        days: counts.days,
        cpty_exceed: counts.cpty,
        sov_exceed: counts.sov,
        joint_exceed: counts.joint,
    };
    if counts.days == 0 {
        return Err(fail("series share no dates"));
    }
    if counts.cpty == 0 {
        return Err(fail(
            "counterparty never exceeds its threshold, P(cpty) = 0",
        ));
    }
    if counts.sov == 0 {
        return Err(fail(
            "sovereign never exceeds its threshold, P(cpty | sov) undefined",
        ));
    }
    let n = counts.days as f64;
    let p_cpty = counts.cpty as f64 / n;
    let p_sov = counts.sov as f64 / n;
    let p_cpty_given_sov = counts.joint as f64 / counts.sov as f64;
    let p_sov_given_cpty = counts.joint as f64 / counts.cpty as f64;
    // joint * days / (cpty * sov) evaluated on integers first
    let lambda = (counts.joint as f64 * n) / (counts.cpty as f64 * counts.sov as f64);
    Ok(LambdaEstimate {
        lambda,
        dual_lambda: p_sov_given_cpty / p_sov,
        p_cpty,
        p_sov,
        p_cpty_given_sov,
        p_sov_given_cpty,
        counts,
    })
}

/// Ratings split at the geometric midpoints of the 1 / 10 / 100 ladder.
pub fn classify_wwr(lambda: f64) -> Result<WwrRating> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(if lambda < 10f64.sqrt() {
        WwrRating::Low
    } else if lambda < 1000f64.sqrt() {
        WwrRating::Medium
    } else {
        WwrRating::High
    })
}
