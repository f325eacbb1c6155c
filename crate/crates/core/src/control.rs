//! Gradient-flow control: error vector, stacked and per-agent control inputs,
//! and the interaction-matrix form of the closed loop.
//!
//! The stacked law is `u = -R_W^T K e` with a diagonal gain matrix `K`
//! (per-constraint-kind gains on the errors, both 1 by default). With unit
//! gains the same vector field factors as `-(E(p) (x) I_d) p` for a symmetric
//! interaction matrix `E(p)` with zero row sums.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::graph::{sensing_graph, Configuration, FrameworkSpec};
use crate::rigidity::{angle_blocks, dot3, point_of, sub3};
use crate::{Error, Result};

/// Proportional gains applied to the error entries: `gain_dist` on squared
/// distance errors, `gain_angle` on cosine errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub dist: f64,
    pub angle: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Gains { dist: 1.0, angle: 1.0 }
    }
}

impl Gains {
    pub const UNIT: Gains = Gains { dist: 1.0, angle: 1.0 };

    pub fn new(dist: f64, angle: f64) -> Self {
        Gains { dist, angle }
    }

    pub fn min(&self) -> f64 {
        self.dist.min(self.angle)
    }
}

/// Error vector `e = [d_c(p); c_c(p)] - [d_c*; c_c*]`: squared-length errors
/// for edges, cosine errors for angles, ordered like the weak rigidity matrix
/// rows.
pub fn error_vector(spec: &FrameworkSpec, cfg: &Configuration) -> Result<DVector<f64>> {
    cfg.check_domain_default(spec)?;
    let coords = cfg.coords();
    let d = cfg.d();
    let mut e = DVector::zeros(spec.constraint_count());
    for (g, (&(i, j), &target)) in spec.edges().iter().zip(spec.edge_targets()).enumerate() {
        let z = sub3(point_of(coords, d, i), point_of(coords, d, j));
        e[g] = dot3(z, z) - target;
    }
    let m = spec.edge_count();
    for (h, (&(k, i, j), &target)) in spec.angles().iter().zip(spec.angle_targets()).enumerate()
    {
        let pk = point_of(coords, d, k);
        let z_ki = sub3(pk, point_of(coords, d, i));
        let z_kj = sub3(pk, point_of(coords, d, j));
        e[m + h] = dot3(z_ki, z_kj) / (dot3(z_ki, z_ki).sqrt() * dot3(z_kj, z_kj).sqrt()) - target;
    }
    Ok(e)
}

/// Stacked control input `u = -R_W^T (K e)`, assembled constraint by
/// constraint without forming the rigidity matrix.
pub fn control_input(
    spec: &FrameworkSpec,
    cfg: &Configuration,
    gains: Gains,
) -> Result<DVector<f64>> {
    cfg.check_domain_default(spec)?;
    let mut u = DVector::zeros(cfg.d() * cfg.n());
    accumulate_control(spec, cfg.coords(), gains, u.as_mut_slice());
    Ok(u)
}

/// In-place version of [`control_input`] for the integrator hot loop; the
/// caller is responsible for the domain check.
pub(crate) fn accumulate_control(spec: &FrameworkSpec, coords: &[f64], gains: Gains, u: &mut [f64]) {
    let d = spec.d();
    u.fill(0.0);
    for (g, &(i, j)) in spec.edges().iter().enumerate() {
        let z = sub3(point_of(coords, d, i), point_of(coords, d, j));
        let scale = gains.dist * (dot3(z, z) - spec.edge_targets()[g]);
        for c in 0..d {
            u[i * d + c] -= 2.0 * scale * z[c];
            u[j * d + c] += 2.0 * scale * z[c];
        }
    }
    for (h, &(k, i, j)) in spec.angles().iter().enumerate() {
        let pk = point_of(coords, d, k);
        let z_ki = sub3(pk, point_of(coords, d, i));
        let z_kj = sub3(pk, point_of(coords, d, j));
        let blocks = angle_blocks(z_ki, z_kj);
        let scale = gains.angle * (blocks.cosine - spec.angle_targets()[h]);
        for c in 0..d {
            u[k * d + c] -= scale * blocks.apex[c];
            u[i * d + c] -= scale * blocks.leg_i[c];
            u[j * d + c] -= scale * blocks.leg_j[c];
        }
    }
}

/// Control input of agent `k` computed from its own relative-position
/// measurements `z_kj = p_k - p_j`, `j` in the sensing neighborhood. Stacking
/// these over all agents reproduces [`control_input`] exactly.
pub fn agent_control_input(
    spec: &FrameworkSpec,
    cfg: &Configuration,
    k: usize,
    gains: Gains,
) -> Result<DVector<f64>> {
    if k >= cfg.n() {
        return Err(Error::InvalidArgument(format!(
            "agent index {k} out of range for n = {}",
            cfg.n()
        )));
    }
    cfg.check_domain_default(spec)?;
    let graph = sensing_graph(spec)?;
    let mut measured = BTreeMap::new();
    for &j in graph.neighbors(k) {
        measured.insert(j, cfg.rel(k, j));
    }
    agent_control_from_relative(spec, k, &measured, gains)
}

/// Per-agent controller evaluated on an explicit measurement set; the entry
/// for `j` must hold `z_kj` expressed in agent `k`'s own frame. The result is
/// in that same frame, which is what makes the law implementable without a
/// shared coordinate system.
pub fn agent_control_from_relative(
    spec: &FrameworkSpec,
    k: usize,
    measured: &BTreeMap<usize, DVector<f64>>,
    gains: Gains,
) -> Result<DVector<f64>> {
    let d = spec.d();
    let fetch = |j: usize| -> Result<[f64; 3]> {
        let z = measured.get(&j).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "missing relative position of agent {} required by agent {}",
                j + 1,
                k + 1
            ))
        })?;
        let mut out = [0.0; 3];
        out[..d].copy_from_slice(z.as_slice());
        Ok(out)
    };

    let mut u = [0.0; 3];
    for (g, &(i, j)) in spec.edges().iter().enumerate() {
        if i != k && j != k {
            continue;
        }
        let other = if i == k { j } else { i };
        let z = fetch(other)?;
        let scale = gains.dist * (dot3(z, z) - spec.edge_targets()[g]);
        for c in 0..d {
            u[c] -= 2.0 * scale * z[c];
        }
    }
    for (h, &(a, i, j)) in spec.angles().iter().enumerate() {
        if a != k && i != k && j != k {
            continue;
        }
        // Reconstruct the two apex rays from k's own measurements:
        // z_ax = z_kx - z_ka for any x it senses.
        let (z_ai, z_aj) = if a == k {
            (fetch(i)?, fetch(j)?)
        } else {
            let z_ka = fetch(a)?;
            let from_apex = |x: usize| -> Result<[f64; 3]> {
                if x == k {
                    Ok([-z_ka[0], -z_ka[1], -z_ka[2]])
                } else {
                    Ok(sub3(fetch(x)?, z_ka))
                }
            };
            (from_apex(i)?, from_apex(j)?)
        };
        let blocks = angle_blocks(z_ai, z_aj);
        let grad = if a == k {
            blocks.apex
        } else if i == k {
            blocks.leg_i
        } else {
            blocks.leg_j
        };
        let scale = gains.angle * (blocks.cosine - spec.angle_targets()[h]);
        for c in 0..d {
            u[c] -= scale * grad[c];
        }
    }
    Ok(DVector::from_column_slice(&u[..d]))
}

/// Assemble the interaction matrix `E(p)` of the unit-gain law, the symmetric
/// `n x n` matrix with `R_W^T e = (E(p) (x) I_d) p`. Each edge with error `e`
/// adds `+2e` on the two diagonal entries and `-2e` off-diagonal; each angle
/// adds the nine position coefficients of its three gradient blocks scaled by
/// its error.
pub fn interaction_matrix(spec: &FrameworkSpec, cfg: &Configuration) -> Result<DMatrix<f64>> {
    cfg.check_domain_default(spec)?;
    let coords = cfg.coords();
    let d = cfg.d();
    let n = cfg.n();
    let mut e_mat = DMatrix::zeros(n, n);
    for (g, &(i, j)) in spec.edges().iter().enumerate() {
        let z = sub3(point_of(coords, d, i), point_of(coords, d, j));
        let err = dot3(z, z) - spec.edge_targets()[g];
        e_mat[(i, i)] += 2.0 * err;
        e_mat[(j, j)] += 2.0 * err;
        e_mat[(i, j)] -= 2.0 * err;
        e_mat[(j, i)] -= 2.0 * err;
    }
    for (h, &(k, i, j)) in spec.angles().iter().enumerate() {
        let pk = point_of(coords, d, k);
        let z_ki = sub3(pk, point_of(coords, d, i));
        let z_kj = sub3(pk, point_of(coords, d, j));
        let a = dot3(z_ki, z_ki).sqrt();
        let b = dot3(z_kj, z_kj).sqrt();
        let inv_ab = 1.0 / (a * b);
        let cos = dot3(z_ki, z_kj) * inv_ab;
        let err = cos - spec.angle_targets()[h];

        // Position coefficients of the apex gradient (alpha), leg-i gradient
        // (beta) and leg-j gradient (gamma); rows of E share them through the
        // symmetry identities alpha_pi = beta_pk etc.
        let alpha_pk = 2.0 * inv_ab - cos * (1.0 / (a * a) + 1.0 / (b * b));
        let alpha_pi = -inv_ab + cos / (a * a);
        let alpha_pj = -inv_ab + cos / (b * b);
        let beta_pi = -cos / (a * a);
        let beta_pj = inv_ab;
        let gamma_pj = -cos / (b * b);

        e_mat[(k, k)] += err * alpha_pk;
        e_mat[(k, i)] += err * alpha_pi;
        e_mat[(k, j)] += err * alpha_pj;
        e_mat[(i, k)] += err * alpha_pi;
        e_mat[(i, i)] += err * beta_pi;
        e_mat[(i, j)] += err * beta_pj;
        e_mat[(j, k)] += err * alpha_pj;
        e_mat[(j, i)] += err * beta_pj;
        e_mat[(j, j)] += err * gamma_pj;
    }
    Ok(e_mat)
}
