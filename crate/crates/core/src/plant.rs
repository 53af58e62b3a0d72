//! Nonlinear ground-truth feeder: branch-flow fixed point on the radial
//! tree, synthesis of the linear sensitivity model from the same physical
//! data, and seeded measurement with optional bounded noise.

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::{LinearGridModel, NodalInjection};

/// Radial feeder: node 0 is the substation; nodes 1..=N carry load.
/// Line impedances are stored in p.u. on the feeder base.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeederPhysical {
    /// parent[i] is the upstream node of node i+1 (0-based over load nodes).
    pub parent: Vec<usize>,
    /// r_pu[i], x_pu[i]: impedance of the line feeding node i+1.
    pub r_pu: Vec<f64>,
    pub x_pu: Vec<f64>,
    /// Substation voltage magnitude (p.u.).
    pub v0: f64,
    pub base_kva: f64,
    pub base_kv: f64,
}

impl FeederPhysical {
    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    /// Children of each node, indexed 0..=N with 0 the substation.
    fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.node_count() + 1];
        for (i, &p) in self.parent.iter().enumerate() {
            ch[p].push(i + 1);
        }
        ch
    }

    /// Nodes ordered so every parent precedes its children.
    fn topo_order(&self) -> Vec<usize> {
        let ch = self.children();
        let mut order = Vec::with_capacity(self.node_count());
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            if n > 0 {
                order.push(n);
            }
            for &c in &ch[n] {
                stack.push(c);
            }
        }
        order
    }
}

/// State sample from the nonlinear solve.
#[derive(Debug, Clone)]
pub struct Measurement {
    /// Voltage magnitudes (p.u.), noise included.
    pub v: DVector<f64>,
    pub slot: usize,
    pub noise_amplitude: f64,
}

impl Measurement {
    /// Squared-magnitude state vector, the space the linear model lives in.
    pub fn state(&self) -> DVector<f64> {
        self.v.map(|x| x * x)
    }
}

const MAX_SWEEPS: usize = 200;

/// Branch-flow fixed point on the radial tree: backward sweep of received
/// branch powers with loss terms, forward sweep of squared voltage drops,
/// iterated until the voltage magnitudes settle. Returns magnitudes (p.u.).
pub fn solve_ac(feeder: &FeederPhysical, inj: &NodalInjection, tol: f64) -> Result<DVector<f64>> {
    let n = feeder.node_count();
    if inj.p.len() != n {
        return Err(CoreError::DimensionMismatch {
            context: "solve_ac injection",
            expected: n,
            got: inj.p.len(),
        });
    }
    let children = feeder.children();
    let order = feeder.topo_order();

    // squared voltages, node 0 fixed
    let mut v2 = vec![feeder.v0 * feeder.v0; n + 1];
    let mut p_recv = vec![0.0; n + 1];
    let mut q_recv = vec![0.0; n + 1];
    let mut ell = vec![0.0; n + 1];

    let mut residual = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        // backward: received branch power at each node
        for &node in order.iter().rev() {
            let mut p = -inj.p[node - 1];
            let mut q = -inj.q[node - 1];
            for &c in &children[node] {
                p += p_recv[c] + feeder.r_pu[c - 1] * ell[c];
                q += q_recv[c] + feeder.x_pu[c - 1] * ell[c];
            }
            p_recv[node] = p;
            q_recv[node] = q;
            ell[node] = (p * p + q * q) / v2[node];
        }
        // forward: squared-voltage drops from the substation down
        residual = 0.0;
        for &node in &order {
            let i = feeder.parent[node - 1];
            let r = feeder.r_pu[node - 1];
            let x = feeder.x_pu[node - 1];
            let next = v2[i] - 2.0 * r * p_recv[node] - 2.0 * x * q_recv[node]
                - (r * r + x * x) * ell[node];
            residual = residual.max((next.max(0.0).sqrt() - v2[node].max(0.0).sqrt()).abs());
            v2[node] = next;
        }
        if !residual.is_finite() || v2.iter().any(|&u| u <= 0.0) {
            return Err(CoreError::PowerFlowDivergence {
                sweeps: MAX_SWEEPS,
                residual: if residual.is_finite() {
                    residual
                } else {
                    f64::MAX
                },
            });
        }
        if residual <= tol {
            return Ok(DVector::from_fn(n, |i, _| v2[i + 1].sqrt()));
        }
    }
    Err(CoreError::PowerFlowDivergence {
        sweeps: MAX_SWEEPS,
        residual,
    })
}

/// Builds the linear sensitivity model from the tree: entries of `A` are
/// twice the summed resistance on the common root path of the two nodes,
/// `B` likewise from reactances, and `c` the flat no-load squared-voltage
/// profile. The state predicted by the model is squared voltage magnitude.
pub fn linearize(feeder: &FeederPhysical) -> LinearGridModel {
    let n = feeder.node_count();
    // path of each node as a set of branch ids (branch i feeds node i+1)
    let paths: Vec<Vec<usize>> = (1..=n)
        .map(|mut node| {
            let mut path = Vec::new();
            while node != 0 {
                path.push(node - 1);
                node = feeder.parent[node - 1];
            }
            path
        })
        .collect();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut rs = 0.0;
            let mut xs = 0.0;
            for e in &paths[i] {
                if paths[j].contains(e) {
                    rs += feeder.r_pu[*e];
                    xs += feeder.x_pu[*e];
                }
            }
            a[(i, j)] = 2.0 * rs;
            a[(j, i)] = 2.0 * rs;
            b[(i, j)] = 2.0 * xs;
            b[(j, i)] = 2.0 * xs;
        }
    }
    let c = DVector::from_element(n, feeder.v0 * feeder.v0);
    LinearGridModel::new(a, b, c).expect("square by construction")
}

/// Nonlinear solve plus optional zero-mean uniform magnitude noise,
/// deterministic in the seed.
pub fn measure(
    feeder: &FeederPhysical,
    inj: &NodalInjection,
    noise_amplitude: f64,
    noise_seed: u64,
) -> Result<Measurement> {
    let mut v = solve_ac(feeder, inj, 1e-12)?;
    if noise_amplitude > 0.0 {
        let mut rng = StdRng::seed_from_u64(noise_seed);
        for i in 0..v.len() {
            v[i] += rng.gen_range(-noise_amplitude..=noise_amplitude);
        }
    }
    Ok(Measurement {
        v,
        slot: inj.slot,
        noise_amplitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linearized_state;
    use approx::assert_abs_diff_eq;

    fn single_line() -> FeederPhysical {
        FeederPhysical {
            parent: vec![0],
            r_pu: vec![0.01],
            x_pu: vec![0.01],
            v0: 1.0,
            base_kva: 1000.0,
            base_kv: 4.8,
        }
    }

    fn chain(n: usize, r: f64, x: f64) -> FeederPhysical {
        FeederPhysical {
            parent: (0..n).collect(),
            r_pu: vec![r; n],
            x_pu: vec![x; n],
            v0: 1.0,
            base_kva: 1000.0,
            base_kv: 4.8,
        }
    }

    #[test]
    fn no_load_gives_flat_profile() {
        let feeder = chain(5, 0.01, 0.02);
        let v = solve_ac(&feeder, &NodalInjection::zeros(5, 0), 1e-12).unwrap();
        for i in 0..5 {
            assert_abs_diff_eq!(v[i], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn two_node_matches_quadratic_closed_form() {
        let feeder = single_line();
        let (p_load, q_load) = (0.3, 0.1);
        let inj = NodalInjection {
            p: DVector::from_element(1, -p_load),
            q: DVector::from_element(1, -q_load),
            slot: 0,
        };
        let v = solve_ac(&feeder, &inj, 1e-14).unwrap();

        let (r, x) = (0.01, 0.01);
        let beta = 1.0 - 2.0 * r * p_load - 2.0 * x * q_load;
        let gamma = (r * r + x * x) * (p_load * p_load + q_load * q_load);
        let u = 0.5 * (beta + (beta * beta - 4.0 * gamma).sqrt());
        assert_abs_diff_eq!(v[0], u.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn linearize_single_line() {
        let model = linearize(&single_line());
        assert_abs_diff_eq!(model.a[(0, 0)], 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(model.b[(0, 0)], 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(model.c[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sensitivity_matrices_symmetric_positive_definite() {
        let feeder = FeederPhysical {
            parent: vec![0, 1, 1, 0, 4],
            r_pu: vec![0.01, 0.02, 0.015, 0.01, 0.03],
            x_pu: vec![0.02, 0.01, 0.025, 0.02, 0.01],
            v0: 1.0,
            base_kva: 1000.0,
            base_kv: 4.8,
        };
        let model = linearize(&feeder);
        for m in [&model.a, &model.b] {
            assert_eq!(m, &m.transpose());
            let eig = m.clone().symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&l| l > 0.0));
        }
    }

    #[test]
    fn linear_and_nonlinear_agree_at_no_load() {
        let feeder = chain(4, 0.01, 0.02);
        let model = linearize(&feeder);
        let inj = NodalInjection::zeros(4, 0);
        let y = linearized_state(&model, &inj).unwrap();
        let v = solve_ac(&feeder, &inj, 1e-14).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(y[i], v[i] * v[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn voltage_decreases_along_path_under_uniform_consumption() {
        let feeder = chain(6, 0.01, 0.01);
        let inj = NodalInjection {
            p: DVector::from_element(6, -0.05),
            q: DVector::from_element(6, -0.02),
            slot: 0,
        };
        let v = solve_ac(&feeder, &inj, 1e-12).unwrap();
        for i in 1..6 {
            assert!(v[i] < v[i - 1], "profile must fall along the chain");
        }
        assert!(v[0] < 1.0);
    }

    #[test]
    fn linearization_residual_small_at_moderate_load() {
        let feeder = chain(4, 0.01, 0.02);
        let model = linearize(&feeder);
        let inj = NodalInjection {
            p: DVector::from_vec(vec![-0.03, 0.02, -0.04, 0.01]),
            q: DVector::from_vec(vec![-0.01, 0.0, -0.02, 0.01]),
            slot: 0,
        };
        let y_lin = linearized_state(&model, &inj).unwrap();
        let v = solve_ac(&feeder, &inj, 1e-14).unwrap();
        for i in 0..4 {
            assert!((y_lin[i] - v[i] * v[i]).abs() < 1e-4);
        }
    }

    #[test]
    fn measurement_noise_is_bounded_and_deterministic() {
        let feeder = chain(3, 0.01, 0.01);
        let inj = NodalInjection {
            p: DVector::from_element(3, -0.02),
            q: DVector::zeros(3),
            slot: 7,
        };
        let clean = measure(&feeder, &inj, 0.0, 1).unwrap();
        let exact = solve_ac(&feeder, &inj, 1e-12).unwrap();
        assert_eq!(clean.v, exact);

        let noisy1 = measure(&feeder, &inj, 0.005, 42).unwrap();
        let noisy2 = measure(&feeder, &inj, 0.005, 42).unwrap();
        assert_eq!(noisy1.v, noisy2.v);
        for i in 0..3 {
            assert!((noisy1.v[i] - exact[i]).abs() <= 0.005);
        }
    }
}
