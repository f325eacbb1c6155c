//! Fixed-step integration of the gradient flow with invariant monitors.
//!
//! The continuous flow conserves the centroid always and the scale whenever no
//! distance constraint is present; the rank of the position matrix and (for
//! minimally rigid frameworks with n = d+1 agents started off any hyperplane)
//! the rank of the weak rigidity matrix are preserved along trajectories.
//! Every recorded step carries these monitors so drift is observable rather
//! than assumed.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::control::{accumulate_control, error_vector, Gains};
use crate::graph::{Configuration, FrameworkSpec};
use crate::rigidity::{numerical_rank, weak_rigidity_matrix, RankTolerance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    Rk4,
}

/// Simulation parameters. `record_every` decimates the kept snapshots; the
/// initial and terminal states are always recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_max: f64,
    pub err_tol: f64,
    pub integrator: Integrator,
    pub record_every: usize,
    pub gains: Gains,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            t_max: 10.0,
            err_tol: 1e-8,
            integrator: Integrator::Rk4,
            record_every: 1,
            gains: Gains::UNIT,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt.is_nan() || self.dt <= 0.0 {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_max.is_nan() || self.t_max <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if self.err_tol.is_nan() || self.err_tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "err_tol must be positive, got {}",
                self.err_tol
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalFlag {
    /// Error norm fell below the tolerance.
    Converged,
    /// Time horizon reached first.
    Horizon,
    /// A constrained pair collapsed below the separation guard; the trace
    /// holds everything recorded up to the last valid state.
    Degenerate,
}

/// Per-snapshot invariant monitors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub centroid: Vec<f64>,
    pub scale: f64,
    /// Rank of the centered position matrix (affine-span dimension).
    pub cp_rank: usize,
    /// Rank of the raw position matrix.
    pub cp_rank_raw: usize,
    pub rw_rank: usize,
    pub min_pair_dist: f64,
}

/// Time series produced by [`simulate`]: aligned snapshots of positions,
/// errors and monitors.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub d: usize,
    pub n: usize,
    pub e_empty: bool,
    pub times: Vec<f64>,
    pub positions: Vec<DVector<f64>>,
    pub errors: Vec<DVector<f64>>,
    pub monitors: Vec<MonitorRecord>,
    pub flag: TerminalFlag,
    pub steps_taken: usize,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trace holds at least the initial state")
    }

    pub fn final_configuration(&self) -> Configuration {
        Configuration::new(self.d, self.positions.last().expect("non-empty trace").clone())
            .expect("trace positions are consistent")
    }

    pub fn err_norms(&self) -> Vec<f64> {
        self.errors.iter().map(|e| e.norm()).collect()
    }

    pub fn final_err_norm(&self) -> f64 {
        self.errors.last().expect("non-empty trace").norm()
    }
}

fn record(
    spec: &FrameworkSpec,
    cfg: &Configuration,
    t: f64,
    e: &DVector<f64>,
    trace: &mut SimulationTrace,
) {
    let rw = weak_rigidity_matrix(spec, cfg).expect("recorded states passed the domain check");
    let (rw_rank, _) = numerical_rank(&rw, RankTolerance::Relative);
    let (cp_rank, _) = numerical_rank(&cfg.centered_matrix(), RankTolerance::Relative);
    let (cp_rank_raw, _) = numerical_rank(&cfg.position_matrix(), RankTolerance::Relative);
    trace.times.push(t);
    trace.positions.push(cfg.positions().clone());
    trace.errors.push(e.clone());
    trace.monitors.push(MonitorRecord {
        centroid: cfg.centroid().as_slice().to_vec(),
        scale: cfg.scale(),
        cp_rank,
        cp_rank_raw,
        rw_rank,
        min_pair_dist: cfg.min_pair_distance(),
    });
}

/// Integrate `pdot = -R_W^T K e` from `cfg0` until the error norm drops below
/// `err_tol`, the horizon is reached, or a constrained pair degenerates
/// (which yields a trace flagged [`TerminalFlag::Degenerate`] rather than an
/// error, since collapse is a studied outcome).
pub fn simulate(
    spec: &FrameworkSpec,
    cfg0: &Configuration,
    sim: &SimConfig,
) -> Result<SimulationTrace> {
    spec.ensure_valid()?;
    sim.validate()?;
    cfg0.check_domain_default(spec)?;

    let dn = spec.d() * spec.n();
    let mut cfg = cfg0.clone();
    let mut trace = SimulationTrace {
        d: spec.d(),
        n: spec.n(),
        e_empty: spec.e_empty(),
        times: Vec::new(),
        positions: Vec::new(),
        errors: Vec::new(),
        monitors: Vec::new(),
        flag: TerminalFlag::Horizon,
        steps_taken: 0,
    };

    // Stage buffers reused across steps.
    let mut k1 = vec![0.0; dn];
    let mut k2 = vec![0.0; dn];
    let mut k3 = vec![0.0; dn];
    let mut k4 = vec![0.0; dn];
    let mut stage = vec![0.0; dn];

    let max_steps = (sim.t_max / sim.dt).ceil() as usize;
    let mut step = 0;
    loop {
        let t = step as f64 * sim.dt;
        if cfg.check_domain_default(spec).is_err() {
            trace.flag = TerminalFlag::Degenerate;
            break;
        }
        let e = error_vector(spec, &cfg)?;
        let done_converged = e.norm() < sim.err_tol;
        let done_horizon = step >= max_steps;
        if done_converged || done_horizon || step % sim.record_every == 0 {
            record(spec, &cfg, t, &e, &mut trace);
        }
        if done_converged {
            trace.flag = TerminalFlag::Converged;
            break;
        }
        if done_horizon {
            trace.flag = TerminalFlag::Horizon;
            break;
        }

        let p = cfg.positions_mut().as_mut_slice();
        match sim.integrator {
            Integrator::Euler => {
                accumulate_control(spec, p, sim.gains, &mut k1);
                for c in 0..dn {
                    p[c] += sim.dt * k1[c];
                }
            }
            Integrator::Rk4 => {
                let h = sim.dt;
                accumulate_control(spec, p, sim.gains, &mut k1);
                for c in 0..dn {
                    stage[c] = p[c] + 0.5 * h * k1[c];
                }
                accumulate_control(spec, &stage, sim.gains, &mut k2);
                for c in 0..dn {
                    stage[c] = p[c] + 0.5 * h * k2[c];
                }
                accumulate_control(spec, &stage, sim.gains, &mut k3);
                for c in 0..dn {
                    stage[c] = p[c] + h * k3[c];
                }
                accumulate_control(spec, &stage, sim.gains, &mut k4);
                for c in 0..dn {
                    p[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
                }
            }
        }
        step += 1;
        trace.steps_taken = step;
    }
    Ok(trace)
}

/// Maximum centroid drift `max_t |p^o(t) - p^o(0)|` over the kept snapshots.
pub fn monitor_centroid(trace: &SimulationTrace) -> f64 {
    let first = DVector::from_column_slice(&trace.monitors[0].centroid);
    trace
        .monitors
        .iter()
        .map(|m| (DVector::from_column_slice(&m.centroid) - &first).norm())
        .fold(0.0, f64::max)
}

/// Maximum scale drift `max_t |p^s(t) - p^s(0)|`. Only meaningful without
/// distance constraints; otherwise the scale is genuinely driven and the
/// monitor refuses.
pub fn monitor_scale(trace: &SimulationTrace) -> Result<f64> {
    if !trace.e_empty {
        return Err(Error::InvalidPrecondition(
            "scale is conserved only for frameworks without distance constraints".into(),
        ));
    }
    let first = trace.monitors[0].scale;
    Ok(trace.monitors.iter().map(|m| (m.scale - first).abs()).fold(0.0, f64::max))
}

/// Whether the rank of the centered position matrix is constant across the
/// kept snapshots.
pub fn monitor_cp_rank(trace: &SimulationTrace) -> bool {
    let first = trace.monitors[0].cp_rank;
    trace.monitors.iter().all(|m| m.cp_rank == first)
}

/// Evaluate the conservative collision certificate: true iff for every pair
/// `(i, j)` of the desired configuration
/// `|p*_i - p*_j| - sqrt(n) |p(0) - 1 (x) p^o| - sum_l |p^o - p*_l| > zeta`,
/// with `p^o` the (conserved) centroid of the initial configuration. When it
/// holds, the run can never bring a pair closer than `zeta`.
pub fn collision_certificate(
    spec: &FrameworkSpec,
    cfg0: &Configuration,
    desired: &Configuration,
    zeta: f64,
) -> Result<bool> {
    if cfg0.d() != desired.d() || cfg0.n() != desired.n() {
        return Err(Error::InvalidArgument(
            "initial and desired configurations must have matching shape".into(),
        ));
    }
    if cfg0.d() != spec.d() || cfg0.n() != spec.n() {
        return Err(Error::InvalidArgument("configuration does not match the spec".into()));
    }
    let n = cfg0.n();
    let centroid = cfg0.centroid();
    // |p(0) - 1 (x) p^o| = sqrt(n) * p^s(0), and the bound scales it by
    // another sqrt(n).
    let spread = n as f64 * cfg0.scale();
    let offset: f64 = (0..n).map(|l| (&centroid - desired.point(l)).norm()).sum();
    for i in 0..n {
        for j in (i + 1)..n {
            let lhs = (desired.point(i) - desired.point(j)).norm() - spread - offset;
            if lhs.is_nan() || lhs <= zeta {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Recover the base distance `|z_21|` of a scale-invariant run from the
/// conserved quantity `|p(0) - 1 (x) p^o(0)|` and the measured relative
/// positions `v = [z_31, ..., z_n1]`, expressed in a frame where `z_21` lies
/// on the positive x-axis.
///
/// Writing the conserved squared norm in terms of `x = |z_21|` gives the
/// quadratic `(1 - 1/n) x^2 - (2 w_x / n) x + (K - |w|^2/n - S^2) = 0` with
/// `w` the sum and `K` the squared-norm sum of the measured entries.
pub fn recover_base_distance(
    invariant_norm: f64,
    n: usize,
    v: &[DVector<f64>],
) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("base-distance recovery needs n >= 2".into()));
    }
    if v.len() != n - 2 {
        return Err(Error::InvalidArgument(format!(
            "expected {} relative positions, got {}",
            n - 2,
            v.len()
        )));
    }
    let nf = n as f64;
    let mut k_sum = 0.0;
    let mut w_x = 0.0;
    let mut w_sq = 0.0;
    if let Some(first) = v.first() {
        let mut w = DVector::zeros(first.len());
        for z in v {
            k_sum += z.norm_squared();
            w += z;
        }
        w_x = w[0];
        w_sq = w.norm_squared();
    }
    let a = 1.0 - 1.0 / nf;
    let b = -2.0 * w_x / nf;
    let c = k_sum - w_sq / nf - invariant_norm * invariant_norm;

    let disc = b * b - 4.0 * a * c;
    let disc_scale = (b * b).max((4.0 * a * c).abs()).max(1.0);
    if disc < -1e-12 * disc_scale {
        return Err(Error::NoRealRoot(disc));
    }
    let sqrt_disc = disc.max(0.0).sqrt();
    let r_low = (-b - sqrt_disc) / (2.0 * a);
    let r_high = (-b + sqrt_disc) / (2.0 * a);
    let tol = 1e-9 * (1.0 + r_high.abs());
    let mut roots: Vec<f64> = [r_low, r_high]
        .into_iter()
        .filter(|r| *r >= -tol)
        .map(|r| r.max(0.0))
        .collect();
    roots.dedup_by(|a, b| (*a - *b).abs() <= tol);
    match roots.len() {
        0 => Err(Error::NoRealRoot(disc)),
        1 => Ok(roots[0]),
        _ => Err(Error::AmbiguousRoot(roots[0], roots[1])),
    }
}

/// Least-squares fit of `ln |e(t)|` against `t` over the kept snapshots with
/// a positive error norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDecayFit {
    pub slope: f64,
    pub r_squared: f64,
    pub samples: usize,
}

pub fn log_err_decay(trace: &SimulationTrace) -> Option<LogDecayFit> {
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(trace.errors.iter())
        .filter_map(|(&t, e)| {
            let norm = e.norm();
            (norm > 0.0).then(|| (t, norm.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for &(t, y) in &pts {
        stt += (t - mean_t) * (t - mean_t);
        sty += (t - mean_t) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let r_squared = if syy == 0.0 { 1.0 } else { (sty * sty) / (stt * syy) };
    Some(LogDecayFit { slope, r_squared, samples: pts.len() })
}

/// Largest relative increase of `V = (1/2) e^T K e` between consecutive kept
/// snapshots; anything noticeably positive flags a step size too large for
/// the gradient flow.
pub fn lyapunov_max_relative_increase(trace: &SimulationTrace, gains: Gains, m: usize) -> f64 {
    let potential = |e: &DVector<f64>| -> f64 {
        e.iter()
            .enumerate()
            .map(|(idx, err)| {
                let g = if idx < m { gains.dist } else { gains.angle };
                0.5 * g * err * err
            })
            .sum()
    };
    let mut worst: f64 = 0.0;
    for pair in trace.errors.windows(2) {
        let v0 = potential(&pair[0]);
        let v1 = potential(&pair[1]);
        if v1 > v0 {
            worst = worst.max((v1 - v0) / v0.max(f64::MIN_POSITIVE));
        }
    }
    worst
}
