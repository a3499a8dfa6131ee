//! Convergence tables and observed orders.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive levels.
pub fn successive_rates(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Least-squares slope of `log e` against `log h` over the last `last` levels.
pub fn fitted_rate(h: &[f64], e: &[f64], last: usize) -> Option<f64> {
    let n = h.len().min(e.len());
    let take = last.min(n);
    if take < 2 {
        return None;
    }
    let xs: Vec<f64> = h[n - take..n].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e[n - take..n].iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / take as f64;
    let my = ys.iter().sum::<f64>() / take as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 || !sxy.is_finite() {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Levels used by the reported fitted rate.
pub const FIT_LEVELS: usize = 3;

/// One level of a study.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub family: String,
    pub scheme: String,
    /// Refinement parameter (N, or J for the interface family).
    pub n: usize,
    pub h: f64,
    pub k: Option<f64>,
    pub t: f64,
    pub err_l2: Option<f64>,
    pub err_h1: Option<f64>,
    pub probe: Option<f64>,
    pub rate_l2: Option<f64>,
    pub rate_h1: Option<f64>,
    pub rate_probe: Option<f64>,
    pub seconds: f64,
    /// Set when the level failed; the value columns are then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Additional per-level quantities, for example a stability ratio.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

/// Which step size the rates are taken against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateAxis {
    Space,
    Time,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FittedRates {
    pub l2: Option<f64>,
    pub h1: Option<f64>,
    pub probe: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub axis: RateAxis,
    pub rows: Vec<ConvergenceRow>,
    pub fitted: FittedRates,
}

fn column(rows: &[ConvergenceRow], f: impl Fn(&ConvergenceRow) -> Option<f64>) -> Option<Vec<f64>> {
    rows.iter().map(f).collect()
}

impl ConvergenceTable {
    /// Sorts the rows from coarse to fine along `axis` and fills in the
    /// rate columns; the row order given does not matter.
    pub fn new(axis: RateAxis, mut rows: Vec<ConvergenceRow>) -> ConvergenceTable {
        let key = |r: &ConvergenceRow| match axis {
            RateAxis::Space => r.h,
            RateAxis::Time => r.k.unwrap_or(f64::NAN),
        };
        rows.sort_by(|a, b| key(b).total_cmp(&key(a)));
        let steps: Vec<f64> = rows.iter().map(key).collect();
        let fill = |rows: &mut [ConvergenceRow],
                    get: fn(&ConvergenceRow) -> Option<f64>,
                    set: fn(&mut ConvergenceRow, Option<f64>)| {
            rows.iter_mut().for_each(|r| set(r, None));
            let e = column(rows, get)?;
            for (i, rate) in successive_rates(&steps, &e).into_iter().enumerate() {
                set(&mut rows[i], Some(rate));
            }
            fitted_rate(&steps, &e, FIT_LEVELS)
        };
        let fitted = FittedRates {
            l2: fill(&mut rows, |r| r.err_l2, |r, v| r.rate_l2 = v),
            h1: fill(&mut rows, |r| r.err_h1, |r, v| r.rate_h1 = v),
            probe: fill(&mut rows, |r| r.probe, |r, v| r.rate_probe = v),
        };
        ConvergenceTable { axis, rows, fitted }
    }

    pub fn steps(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match self.axis {
                RateAxis::Space => r.h,
                RateAxis::Time => r.k.unwrap_or(f64::NAN),
            })
            .collect()
    }

    /// Successive rates of an arbitrary per-row quantity.
    pub fn rates_of(&self, f: impl Fn(&ConvergenceRow) -> Option<f64>) -> Option<Vec<f64>> {
        column(&self.rows, f).map(|e| successive_rates(&self.steps(), &e))
    }

    /// Fitted rate of an arbitrary per-row quantity.
    pub fn fitted_rate_of(&self, f: impl Fn(&ConvergenceRow) -> Option<f64>) -> Option<f64> {
        column(&self.rows, f).and_then(|e| fitted_rate(&self.steps(), &e, FIT_LEVELS))
    }
}
