//! Filter-count planning.
//!
//! `m_min` is the smallest cluster size whose per-pass latency fits the
//! per-channel budget `T_audio / N`; `m_opt` is found by walking up from
//! `m_min` until energy first increases. Energy is
//! `(p_static + m * p_per_filter) * latency(m)`: the accelerator is gated off
//! once the pass completes.

use std::io::Write;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheduler::{assign_priorities, simulate, CostModel, PriorityQueue};
use crate::sparsity::StridePlan;

pub const DEFAULT_T_AUDIO: f64 = 32e-3;
pub const DEFAULT_M_MAX: u32 = 30;
/// Serial work of the fitted `W / m + c` curve.
pub const DEFAULT_SERIAL_S: f64 = 11.49e-3;
pub const DEFAULT_OVERHEAD_S: f64 = 0.48e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub p_static: f64,
    pub p_per_filter: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_static: 5.6e-3,
            p_per_filter: 0.6e-3,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_static >= 0.0 && self.p_per_filter > 0.0) {
            return Err(Error::invalid("power model needs p_static >= 0 and p_per_filter > 0"));
        }
        Ok(())
    }

    pub fn power(&self, m: u32) -> f64 {
        self.p_static + m as f64 * self.p_per_filter
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LatencyModel {
    /// `latency(m) = serial / m + overhead`.
    Analytic { serial_s: f64, overhead_s: f64 },
    /// Latency from simulating the cluster on a concrete task queue.
    Simulated { queue: PriorityQueue, cost: CostModel },
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::Analytic {
            serial_s: DEFAULT_SERIAL_S,
            overhead_s: DEFAULT_OVERHEAD_S,
        }
    }
}

impl LatencyModel {
    pub fn simulated(plan: &StridePlan, cost: CostModel) -> Self {
        LatencyModel::Simulated {
            queue: assign_priorities(plan),
            cost,
        }
    }

    /// Least-squares fit of `serial / m + overhead` to `(m, seconds)` points.
    pub fn fit_analytic(points: &[(u32, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("need at least two points to fit"));
        }
        let n = points.len() as f64;
        let xs: Vec<f64> = points.iter().map(|&(m, _)| 1.0 / m as f64).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::invalid("fit points need distinct filter counts"));
        }
        let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
        let serial_s = sxy / sxx;
        Ok(LatencyModel::Analytic {
            serial_s,
            overhead_s: my - serial_s * mx,
        })
    }

    pub fn latency(&self, m: u32) -> Result<f64> {
        if m == 0 {
            return Err(Error::invalid("need at least one filter"));
        }
        match self {
            LatencyModel::Analytic {
                serial_s,
                overhead_s,
            } => Ok(serial_s / m as f64 + overhead_s),
            LatencyModel::Simulated { queue, cost } => {
                let trace = simulate(queue, m as usize, cost)?;
                Ok(cost.seconds(cost.prologue_cycles(queue.n_samples) + trace.makespan))
            }
        }
    }
}

pub fn energy_of(m: u32, lat: &LatencyModel, pow: &PowerModel) -> Result<f64> {
    Ok(pow.power(m) * lat.latency(m)?)
}

/// Smallest `m <= m_max` with `latency(m) <= t_audio / channels`.
pub fn find_m_min(channels: u32, t_audio: f64, m_max: u32, lat: &LatencyModel) -> Result<u32> {
    if channels == 0 || !(t_audio > 0.0) {
        return Err(Error::invalid("need at least one channel and a positive budget"));
    }
    let budget = t_audio / channels as f64;
    for m in 1..=m_max {
        if lat.latency(m)? <= budget {
            return Ok(m);
        }
    }
    Err(Error::Infeasible {
        m_max,
        budget_s: budget,
    })
}

/// Walks up from `m_min` and stops before the first energy increase; `m_max`
/// if energy never increases.
pub fn find_m_opt(m_min: u32, m_max: u32, lat: &LatencyModel, pow: &PowerModel) -> Result<u32> {
    if m_min == 0 || m_min > m_max {
        return Err(Error::invalid(format!("bad search range {m_min}..={m_max}")));
    }
    let mut prev = energy_of(m_min, lat, pow)?;
    for j in m_min + 1..=m_max {
        let e = energy_of(j, lat, pow)?;
        if e > prev {
            return Ok(j - 1);
        }
        prev = e;
    }
    Ok(m_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DppResult {
    pub channels: u32,
    pub m_max: u32,
    pub budget_s: f64,
    pub feasible: bool,
    pub m_min: Option<u32>,
    pub m_opt: Option<u32>,
    pub latency_s: Option<f64>,
    pub energy_j: Option<f64>,
}

pub fn plan_filters(
    channels: u32,
    t_audio: f64,
    m_max: u32,
    lat: &LatencyModel,
    pow: &PowerModel,
) -> Result<DppResult> {
    pow.validate()?;
    let mut out = DppResult {
        channels,
        m_max,
        budget_s: t_audio / channels.max(1) as f64,
        feasible: false,
        m_min: None,
        m_opt: None,
        latency_s: None,
        energy_j: None,
    };
    let m_min = match find_m_min(channels, t_audio, m_max, lat) {
        Ok(m) => m,
        Err(Error::Infeasible { .. }) => return Ok(out),
        Err(e) => return Err(e),
    };
    let m_opt = find_m_opt(m_min, m_max, lat, pow)?;
    out.feasible = true;
    out.m_min = Some(m_min);
    out.m_opt = Some(m_opt);
    out.latency_s = Some(lat.latency(m_opt)?);
    out.energy_j = Some(energy_of(m_opt, lat, pow)?);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: u32,
    pub latency_s: f64,
    pub power_w: f64,
    pub energy_j: f64,
}

pub fn sweep(range: RangeInclusive<u32>, lat: &LatencyModel, pow: &PowerModel) -> Result<Vec<SweepRow>> {
    if range.is_empty() || *range.start() == 0 {
        return Err(Error::invalid("sweep range must be non-empty and start at 1 or above"));
    }
    range
        .map(|m| {
            let latency_s = lat.latency(m)?;
            Ok(SweepRow {
                m,
                latency_s,
                power_w: pow.power(m),
                energy_j: pow.power(m) * latency_s,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "m,latency_ms,power_mw,energy_uj")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.m,
            r.latency_s * 1e3,
            r.power_w * 1e3,
            r.energy_j * 1e6
        )?;
    }
    Ok(())
}
