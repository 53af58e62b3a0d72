//! Linearized network map, nodal power aggregation, and the operational
//! constraint function with its Jacobian.
//!
//! The electrical state vector `y` collects squared voltage magnitudes in
//! p.u.; the sensitivity matrices map nodal injections (p.u.) to that state.
//! All functions here are pure over immutable model data.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};

/// Sensitivity triple mapping nodal injections to the electrical state:
/// `y = A p + B q + c`.
#[derive(Debug, Clone)]
pub struct LinearGridModel {
    pub node_count: usize,
    /// State sensitivity to active injections (N x N).
    pub a: DMatrix<f64>,
    /// State sensitivity to reactive injections (N x N).
    pub b: DMatrix<f64>,
    /// No-injection baseline state.
    pub c: DVector<f64>,
}

impl LinearGridModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        let n = c.len();
        if a.nrows() != n || a.ncols() != n {
            return Err(CoreError::DimensionMismatch {
                context: "grid model A",
                expected: n,
                got: a.nrows(),
            });
        }
        if b.nrows() != n || b.ncols() != n {
            return Err(CoreError::DimensionMismatch {
                context: "grid model B",
                expected: n,
                got: b.nrows(),
            });
        }
        Ok(Self {
            node_count: n,
            a,
            b,
            c,
        })
    }
}

/// Operational state bounds. When tightened bounds are present they replace
/// the originals in every constraint evaluation.
#[derive(Debug, Clone)]
pub struct ConstraintSpec {
    pub v_upper: DVector<f64>,
    pub v_lower: DVector<f64>,
    pub v_upper_tight: Option<DVector<f64>>,
    pub v_lower_tight: Option<DVector<f64>>,
}

impl ConstraintSpec {
    pub fn new(v_lower: DVector<f64>, v_upper: DVector<f64>) -> Self {
        Self {
            v_upper,
            v_lower,
            v_upper_tight: None,
            v_lower_tight: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.v_upper.len()
    }

    /// Bounds actually enforced: tightened when present, original otherwise.
    pub fn effective_bounds(&self) -> (&DVector<f64>, &DVector<f64>) {
        (
            self.v_lower_tight.as_ref().unwrap_or(&self.v_lower),
            self.v_upper_tight.as_ref().unwrap_or(&self.v_upper),
        )
    }
}

/// Aggregate nodal injections for one timeslot, in p.u.
#[derive(Debug, Clone)]
pub struct NodalInjection {
    pub p: DVector<f64>,
    pub q: DVector<f64>,
    pub slot: usize,
}

impl NodalInjection {
    pub fn zeros(node_count: usize, slot: usize) -> Self {
        Self {
            p: DVector::zeros(node_count),
            q: DVector::zeros(node_count),
            slot,
        }
    }
}

/// Per-device contribution to a node's injection, already converted to p.u.
/// with the injection sign convention (generation positive).
#[derive(Debug, Clone, Copy)]
pub struct DeviceInjection {
    pub device: usize,
    pub node: usize,
    pub p: f64,
    pub q: f64,
}

/// Sums device injections into the baseline, node by node.
///
/// Contributions are accumulated in ascending (node, device) order so the
/// result is bit-identical regardless of input ordering.
pub fn aggregate_node_power(
    baseline: &NodalInjection,
    device_setpoints: &[DeviceInjection],
) -> Result<NodalInjection> {
    let n = baseline.p.len();
    for d in device_setpoints {
        if d.node >= n {
            return Err(CoreError::InvalidNode {
                device: d.device,
                node: d.node,
                node_count: n,
            });
        }
    }
    let mut order: Vec<usize> = (0..device_setpoints.len()).collect();
    order.sort_by_key(|&i| (device_setpoints[i].node, device_setpoints[i].device));

    let mut out = baseline.clone();
    for i in order {
        let d = &device_setpoints[i];
        out.p[d.node] += d.p;
        out.q[d.node] += d.q;
    }
    Ok(out)
}

/// Evaluates the linear state map `y = A p + B q + c`.
pub fn linearized_state(model: &LinearGridModel, inj: &NodalInjection) -> Result<DVector<f64>> {
    if inj.p.len() != model.node_count || inj.q.len() != model.node_count {
        return Err(CoreError::DimensionMismatch {
            context: "linearized_state injection",
            expected: model.node_count,
            got: inj.p.len(),
        });
    }
    Ok(&model.a * &inj.p + &model.b * &inj.q + &model.c)
}

/// Stacked two-sided bound residuals: `g = [y - upper; lower - y]`.
/// All entries nonpositive iff the state is within bounds.
pub fn constraint_value(spec: &ConstraintSpec, y: &DVector<f64>) -> Result<DVector<f64>> {
    let n = spec.node_count();
    if y.len() != n {
        return Err(CoreError::DimensionMismatch {
            context: "constraint_value state",
            expected: n,
            got: y.len(),
        });
    }
    let (lower, upper) = spec.effective_bounds();
    let mut g = DVector::zeros(2 * n);
    for i in 0..n {
        g[i] = y[i] - upper[i];
        g[n + i] = lower[i] - y[i];
    }
    Ok(g)
}

/// Constant Jacobian of the stacked constraint w.r.t. nodal injections:
/// `dg/dp = [A; -A]`, `dg/dq = [B; -B]`.
pub fn constraint_jacobian(
    _spec: &ConstraintSpec,
    model: &LinearGridModel,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = model.node_count;
    let mut jp = DMatrix::zeros(2 * n, n);
    let mut jq = DMatrix::zeros(2 * n, n);
    jp.view_mut((0, 0), (n, n)).copy_from(&model.a);
    jp.view_mut((n, 0), (n, n)).copy_from(&(-&model.a));
    jq.view_mut((0, 0), (n, n)).copy_from(&model.b);
    jq.view_mut((n, 0), (n, n)).copy_from(&(-&model.b));
    (jp, jq)
}
