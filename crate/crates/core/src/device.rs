//! Device classes: per-slot feasible sets, convex hulls, affine state
//! dynamics, state-band constraints, and cost functions.
//!
//! Device-local power convention: HVAC and battery powers are consumptions
//! (kW, positive when drawing), PV powers are injections (kW, positive when
//! generating). The negation to grid injections happens once, at nodal
//! aggregation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// PV inverter parameters. Feasible set per slot:
/// `0 <= p <= p_avail`, `p^2 + q^2 <= eta^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PvParams {
    /// Available active power per slot (kW, >= 0).
    pub p_avail: Vec<f64>,
    /// Rated apparent capacity (kVA).
    pub eta: f64,
    /// Curtailment cost weight ($/kW^2).
    pub c_p: f64,
    /// Reactive power cost weight ($/kvar^2).
    pub c_q: f64,
}

/// Thermostatic load parameters. Room temperature evolves by
/// `x' = (1 - zeta1) x + zeta2 (t_out + p)` per slot, with `p` the
/// consumption (kW); `zeta2 < 0` so running the unit cools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HvacParams {
    pub zeta1: f64,
    pub zeta2: f64,
    /// Consumption when on (kW, > 0).
    pub p_on: f64,
    /// Ambient drive per slot.
    pub t_out: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_nom: f64,
    /// Discomfort cost weight ($/degF^2).
    pub c_t: f64,
}

/// Battery parameters. Normalized SOC evolves by
/// `soc' = soc + p * slot_hours / capacity_kwh` with `p` the charge power
/// (kW, negative when discharging).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryParams {
    pub capacity_kwh: f64,
    /// Finite set of charge rates (kW); contains 0.
    pub rates: Vec<f64>,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_nom: f64,
    /// SOC deviation cost weight.
    pub c_b: f64,
    pub slot_hours: f64,
}

impl BatteryParams {
    /// SOC change per kW of charge power over one slot.
    pub fn kappa(&self) -> f64 {
        self.slot_hours / self.capacity_kwh
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DeviceParams {
    Pv(PvParams),
    Hvac(HvacParams),
    Battery(BatteryParams),
}

impl DeviceParams {
    pub fn is_discrete(&self) -> bool {
        !matches!(self, DeviceParams::Pv(_))
    }

    /// Sorted discrete setpoints (consumption kW) for discrete devices.
    pub fn discrete_set(&self) -> Option<Vec<f64>> {
        match self {
            DeviceParams::Pv(_) => None,
            DeviceParams::Hvac(h) => {
                let mut s = vec![0.0, h.p_on];
                s.sort_by(|a, b| a.partial_cmp(b).unwrap());
                Some(s)
            }
            DeviceParams::Battery(b) => {
                let mut s = b.rates.clone();
                s.sort_by(|a, b| a.partial_cmp(b).unwrap());
                Some(s)
            }
        }
    }
}

/// Scalar device state (temperature or SOC) at a timeslot. PV carries none.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeviceState {
    pub value: f64,
    pub slot: usize,
}

/// Per-slot interval hull of the device's active-power set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullInterval {
    pub lo: f64,
    pub hi: f64,
}

impl HullInterval {
    pub fn contains(&self, p: f64, tol: f64) -> bool {
        p >= self.lo - tol && p <= self.hi + tol
    }

    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.lo, self.hi)
    }
}

/// Projects a PV setpoint into its feasible set: clamp `p` into
/// `[0, min(p_avail, eta)]`, then shrink `q` onto the capacity disk if
/// needed. Exact for the box face; the composition is a feasibility map,
/// not a Euclidean projection, near the disk corner.
pub fn pv_feasible_project(params: &PvParams, slot: usize, p: f64, q: f64) -> (f64, f64) {
    let p_cap = params.p_avail[slot].min(params.eta).max(0.0);
    let p1 = p.clamp(0.0, p_cap);
    let rad2 = params.eta * params.eta - p1 * p1;
    if p1 * p1 + q * q > params.eta * params.eta {
        let qmax = rad2.max(0.0).sqrt();
        (p1, q.signum() * qmax)
    } else {
        (p1, q)
    }
}

/// Propagates the room temperature `m` steps ahead under the per-slot
/// consumptions. Closed form equals the single-step recursion exactly.
pub fn hvac_propagate(params: &HvacParams, x_t: f64, powers: &[f64], m: usize) -> Result<f64> {
    if m == 0 {
        return Ok(x_t);
    }
    if powers.len() < m || params.t_out.len() < m {
        return Err(CoreError::HorizonExceeded {
            m,
            window: powers.len().min(params.t_out.len()),
        });
    }
    let decay = 1.0 - params.zeta1;
    let mut x = decay.powi(m as i32) * x_t;
    for tau in 0..m {
        x += decay.powi((m - 1 - tau) as i32) * params.zeta2 * (params.t_out[tau] + powers[tau]);
    }
    Ok(x)
}

/// Propagates the normalized SOC `m` steps ahead under the per-slot charge
/// powers (kW).
pub fn battery_propagate(params: &BatteryParams, soc_t: f64, powers: &[f64], m: usize) -> f64 {
    let kappa = params.kappa();
    soc_t + powers.iter().take(m).sum::<f64>() * kappa
}

/// Interval hull of the device's active-power set at a slot.
pub fn hull(params: &DeviceParams, slot: usize) -> HullInterval {
    match params {
        DeviceParams::Pv(pv) => HullInterval {
            lo: 0.0,
            hi: pv.p_avail[slot].min(pv.eta).max(0.0),
        },
        DeviceParams::Hvac(h) => HullInterval {
            lo: 0.0_f64.min(h.p_on),
            hi: 0.0_f64.max(h.p_on),
        },
        DeviceParams::Battery(b) => {
            let lo = b.rates.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = b.rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            HullInterval { lo, hi }
        }
    }
}

/// State band for a stateful device, constant across slots.
pub fn state_band(params: &DeviceParams) -> Option<(f64, f64)> {
    match params {
        DeviceParams::Pv(_) => None,
        DeviceParams::Hvac(h) => Some((h.t_min, h.t_max)),
        DeviceParams::Battery(b) => Some((b.soc_min, b.soc_max)),
    }
}

/// Stacked band residuals `[x - upper; lower - x]` per slot of the state
/// trajectory; all entries nonpositive iff the band is satisfied. PV yields
/// an empty vector.
pub fn state_constraint_residual(params: &DeviceParams, x_traj: &[f64]) -> Vec<f64> {
    match state_band(params) {
        None => Vec::new(),
        Some((lower, upper)) => {
            let mut out = Vec::with_capacity(2 * x_traj.len());
            for &x in x_traj {
                out.push(x - upper);
            }
            for &x in x_traj {
                out.push(lower - x);
            }
            out
        }
    }
}

/// Affine map from the window's power decision to the propagated state
/// trajectory: `x = J p + b`, with states one step ahead of each decision
/// slot (slot j's power feeds states j+1 onward).
#[derive(Debug, Clone)]
pub struct StateMap {
    pub j: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl StateMap {
    pub fn states(&self, powers: &DVector<f64>) -> DVector<f64> {
        &self.j * powers + &self.b
    }
}

/// Builds the window state map for a stateful device. `slots` is the number
/// of decision slots (w+1); the returned trajectory has the same length,
/// covering the states after each decision slot. Returns `None` for PV.
pub fn state_map(params: &DeviceParams, x0: f64, slots: usize) -> Option<StateMap> {
    match params {
        DeviceParams::Pv(_) => None,
        DeviceParams::Hvac(h) => {
            let decay = 1.0 - h.zeta1;
            let mut j = DMatrix::zeros(slots, slots);
            let mut b = DVector::zeros(slots);
            for m in 1..=slots {
                let row = m - 1;
                b[row] = decay.powi(m as i32) * x0;
                for tau in 0..m {
                    let w = decay.powi((m - 1 - tau) as i32) * h.zeta2;
                    j[(row, tau)] = w;
                    b[row] += w * h.t_out[tau];
                }
            }
            Some(StateMap { j, b })
        }
        DeviceParams::Battery(bat) => {
            let kappa = bat.kappa();
            let mut j = DMatrix::zeros(slots, slots);
            let b = DVector::from_element(slots, x0);
            for m in 1..=slots {
                for tau in 0..m {
                    j[(m - 1, tau)] = kappa;
                }
            }
            Some(StateMap { j, b })
        }
    }
}

/// Decision trajectory gradient, matching the decision layout: active power
/// per slot, plus reactive power per slot for PV.
#[derive(Debug, Clone)]
pub struct CostGradient {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Device cost over the window and its gradient w.r.t. the per-slot powers.
///
/// PV: sum of `c_p (p_avail - p)^2 + c_q q^2` per slot.
/// HVAC: `c_t ||x - t_nom||^2` with `x` the propagated trajectory.
/// Battery: `c_b ||soc - soc_nom||^2`.
pub fn device_cost(
    params: &DeviceParams,
    p: &[f64],
    q: &[f64],
    x0: Option<DeviceState>,
) -> (f64, CostGradient) {
    match params {
        DeviceParams::Pv(pv) => {
            let mut cost = 0.0;
            let mut gp = vec![0.0; p.len()];
            let mut gq = vec![0.0; q.len()];
            for tau in 0..p.len() {
                let dp = pv.p_avail[tau] - p[tau];
                cost += pv.c_p * dp * dp + pv.c_q * q[tau] * q[tau];
                gp[tau] = -2.0 * pv.c_p * dp;
                gq[tau] = 2.0 * pv.c_q * q[tau];
            }
            (cost, CostGradient { p: gp, q: gq })
        }
        DeviceParams::Hvac(_) | DeviceParams::Battery(_) => {
            let (weight, nominal) = match params {
                DeviceParams::Hvac(h) => (h.c_t, h.t_nom),
                DeviceParams::Battery(b) => (b.c_b, b.soc_nom),
                DeviceParams::Pv(_) => unreachable!(),
            };
            let x0 = x0.map(|s| s.value).unwrap_or(nominal);
            let map = state_map(params, x0, p.len()).expect("stateful device");
            let pw = DVector::from_column_slice(p);
            let dev = map.states(&pw) - DVector::from_element(p.len(), nominal);
            let cost = weight * dev.norm_squared();
            let grad = map.j.transpose() * dev * (2.0 * weight);
            (
                cost,
                CostGradient {
                    p: grad.iter().cloned().collect(),
                    q: vec![0.0; q.len()],
                },
            )
        }
    }
}
