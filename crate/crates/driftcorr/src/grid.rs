//! Simulation time grid with marker times.
//!
//! The grid is a uniform Euler mesh with extra times merged in: quadrature
//! node times (where path states are recorded for the correction integrand)
//! and payoff fixing times. Markers that land on an existing grid point snap
//! to it instead of creating a near-duplicate step.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct TimeGrid {
    pub times: Vec<f64>,
    /// Indices into `times` where the correction integrand is evaluated,
    /// in the order the record times were supplied.
    pub record_idx: Vec<usize>,
    /// Indices of payoff fixing times, ascending.
    pub fixing_idx: Vec<usize>,
    /// Uniform base step; this is the monitoring interval for barriers.
    pub base_dt: f64,
    pub maturity: f64,
}

impl TimeGrid {
    pub fn build(maturity: f64, dt: f64, record: &[f64], fixings: &[f64]) -> Result<Self> {
        if !(maturity > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidParam("maturity and dt must be positive".into()));
        }
        for &t in record.iter().chain(fixings) {
            if !(0.0..=maturity).contains(&t) {
                return Err(Error::InvalidParam(format!(
                    "marker time {t} outside [0, {maturity}]"
                )));
            }
        }
        let n = (maturity / dt).round().max(1.0) as usize;
        let h = maturity / n as f64;
        let tol = 1e-10 * maturity.max(1.0);

        let mut times: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
        times[n] = maturity;
        let mut markers: Vec<f64> = record.iter().chain(fixings).copied().collect();
        markers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &m in &markers {
            let pos = times.partition_point(|&t| t < m);
            let near_prev = pos > 0 && (m - times[pos - 1]).abs() <= tol;
            let near_next = pos < times.len() && (times[pos] - m).abs() <= tol;
            if !near_prev && !near_next {
                times.insert(pos, m);
            }
        }

        let locate = |t: f64, times: &[f64]| -> Result<usize> {
            let pos = times.partition_point(|&x| x < t - tol);
            if pos < times.len() && (times[pos] - t).abs() <= tol {
                Ok(pos)
            } else {
                Err(Error::Numerics(format!("marker time {t} lost during merge")))
            }
        };
        let record_idx = record
            .iter()
            .map(|&t| locate(t, &times))
            .collect::<Result<Vec<_>>>()?;
        let mut fixing_idx = fixings
            .iter()
            .map(|&t| locate(t, &times))
            .collect::<Result<Vec<_>>>()?;
        fixing_idx.sort_unstable();
        fixing_idx.dedup();

        Ok(Self {
            times,
            record_idx,
            fixing_idx,
            base_dt: h,
            maturity,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }
}
