//! Equilibrium detection and classification for the gradient flow.
//!
//! Equilibria split into the desired set (`e = 0`) and the incorrect set
//! (`R_W^T e = 0, e != 0`). For three agents in the plane the incorrect set is
//! collinear, the interaction matrix there has a negative eigenvalue, and the
//! linearization is unstable; Monte-Carlo sweeps over non-collinear starts
//! probe the almost-global convergence claim at desk scale.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{accumulate_control, control_input, error_vector, interaction_matrix, Gains};
use crate::dynamics::{simulate, SimConfig, TerminalFlag};
use crate::graph::{Configuration, FrameworkSpec};
use crate::rigidity::{classify, sample_configuration};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Desired,
    Incorrect,
    NotEquilibrium,
}

/// Decision thresholds: `err` separates desired from incorrect, `grad`
/// decides equilibrium membership at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumTolerances {
    pub err: f64,
    pub grad: f64,
}

impl Default for EquilibriumTolerances {
    fn default() -> Self {
        EquilibriumTolerances { err: 1e-6, grad: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    /// `|R_W^T e|` with unit gains.
    pub grad_norm: f64,
    pub err_norm: f64,
    /// Smallest singular value of the centered position matrix; zero means
    /// the agents lie on a hyperplane (a line in 2D).
    pub collinearity: f64,
    /// Eigenvalues of the symmetrized finite-difference Hessian of
    /// `V = (1/2) e^T e`, ascending.
    pub hessian_spectrum: Vec<f64>,
    pub min_eig: f64,
    pub e_matrix_min_eig: f64,
    pub hessian_symmetry_residual: f64,
}

/// Central finite-difference Hessian of the potential, i.e. the negative
/// Jacobian of the unit-gain vector field, symmetrized after recording the
/// raw symmetry residual. Step `1e-5 * (1 + |p|_inf)`.
pub fn hessian_fd(spec: &FrameworkSpec, cfg: &Configuration) -> Result<(DMatrix<f64>, f64)> {
    cfg.check_domain_default(spec)?;
    let p = cfg.positions();
    let dn = p.len();
    let h = 1e-5 * (1.0 + p.amax());
    let mut jac = DMatrix::zeros(dn, dn);
    for c in 0..dn {
        let mut plus = p.clone();
        plus[c] += h;
        let mut minus = p.clone();
        minus[c] -= h;
        let u_plus = control_input(spec, &Configuration::new(cfg.d(), plus)?, Gains::UNIT)?;
        let u_minus = control_input(spec, &Configuration::new(cfg.d(), minus)?, Gains::UNIT)?;
        // J = -du/dp.
        jac.set_column(c, &((u_minus - u_plus) / (2.0 * h)));
    }
    let residual = (jac.transpose() - &jac).amax();
    let sym = (&jac + jac.transpose()) / 2.0;
    Ok((sym, residual))
}

fn sorted_eigenvalues(mat: &DMatrix<f64>) -> Vec<f64> {
    let mut eigs: Vec<f64> = mat.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eigs
}

/// Classify a configuration against the equilibrium sets of the unit-gain
/// flow and report the local spectra.
pub fn classify_equilibrium(
    spec: &FrameworkSpec,
    cfg: &Configuration,
    tols: EquilibriumTolerances,
) -> Result<EquilibriumReport> {
    spec.ensure_valid()?;
    let e = error_vector(spec, cfg)?;
    let grad = control_input(spec, cfg, Gains::UNIT)?;
    let err_norm = e.norm();
    let grad_norm = grad.norm();
    let kind = if err_norm < tols.err {
        EquilibriumKind::Desired
    } else if grad_norm < tols.grad {
        EquilibriumKind::Incorrect
    } else {
        EquilibriumKind::NotEquilibrium
    };
    let centered = cfg.centered_matrix();
    let sv = centered.svd(false, false).singular_values;
    let collinearity = sv[sv.len() - 1];

    let (hessian, hessian_symmetry_residual) = hessian_fd(spec, cfg)?;
    let hessian_spectrum = sorted_eigenvalues(&hessian);
    let min_eig = hessian_spectrum[0];
    let e_matrix_min_eig = sorted_eigenvalues(&interaction_matrix(spec, cfg)?)[0];

    Ok(EquilibriumReport {
        kind,
        grad_norm,
        err_norm,
        collinearity,
        hessian_spectrum,
        min_eig,
        e_matrix_min_eig,
        hessian_symmetry_residual,
    })
}

fn is_minimal_three_agent_class(spec: &FrameworkSpec) -> bool {
    matches!(
        (spec.edge_count(), spec.angle_count()),
        (2, 1) | (1, 2) | (0, 2)
    )
}

/// For the three 3-agent minimally rigid constraint classes, check that an
/// incorrect equilibrium is collinear: returns true unless the configuration
/// classifies as incorrect with an off-line residual above `tol_col`.
pub fn collinear_equilibrium_check(
    spec: &FrameworkSpec,
    cfg: &Configuration,
    tols: EquilibriumTolerances,
    tol_col: f64,
) -> Result<bool> {
    if spec.n() != 3 || spec.d() != 2 {
        return Err(Error::InvalidPrecondition(
            "collinearity analysis applies to 3-agent frameworks in 2D".into(),
        ));
    }
    if !is_minimal_three_agent_class(spec) {
        return Err(Error::InvalidPrecondition(
            "spec is not one of the minimally rigid 3-agent constraint classes".into(),
        ));
    }
    let report = classify_equilibrium(spec, cfg, tols)?;
    Ok(report.kind != EquilibriumKind::Incorrect || report.collinearity <= tol_col)
}

/// Residuals of the coordinate-permuted Hessian at a collinear configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockStructureResidual {
    /// Largest off-diagonal-block entry after grouping all x coordinates
    /// before all y coordinates.
    pub off_diag_max: f64,
    /// `|J_yy - E(p)|_max`: the y-block of the permuted Hessian against the
    /// interaction matrix.
    pub y_block_vs_interaction: f64,
    /// Scale reference `|J|_max`.
    pub hessian_amax: f64,
}

/// Align a collinear 2D configuration with the x-axis, compute the Hessian
/// there and check its block-diagonal structure: the y-block must equal the
/// interaction matrix.
pub fn block_structure_check(
    spec: &FrameworkSpec,
    cfg: &Configuration,
) -> Result<BlockStructureResidual> {
    if spec.d() != 2 || cfg.d() != 2 {
        return Err(Error::InvalidPrecondition(
            "block-structure analysis applies to 2D frameworks".into(),
        ));
    }
    let centered = cfg.centered_matrix();
    let svd = centered.clone().svd(true, false);
    let sv = &svd.singular_values;
    let off_line = sv[sv.len() - 1];
    if off_line > 1e-6 * sv[0].max(1.0) {
        return Err(Error::NotCollinear(off_line));
    }
    let u = svd.u.as_ref().expect("svd requested u");
    let dir = Vector2::new(u[(0, 0)], u[(1, 0)]);
    // Rows [dir; dir_perp] rotate the line direction onto the x-axis.
    let rot = Matrix2::new(dir[0], dir[1], -dir[1], dir[0]);
    let n = cfg.n();
    let centroid = cfg.centroid();
    let mut aligned = DVector::zeros(2 * n);
    for i in 0..n {
        let q = rot * (cfg.point(i) - &centroid);
        aligned[2 * i] = q[0];
        aligned[2 * i + 1] = q[1];
    }
    let aligned_cfg = Configuration::new(2, aligned)?;

    let (hessian, _residual) = hessian_fd(spec, &aligned_cfg)?;
    // Group coordinates as [x_1..x_n, y_1..y_n].
    let perm: Vec<usize> =
        (0..n).map(|i| 2 * i).chain((0..n).map(|i| 2 * i + 1)).collect();
    let mut permuted = DMatrix::zeros(2 * n, 2 * n);
    for (r_new, &r_old) in perm.iter().enumerate() {
        for (c_new, &c_old) in perm.iter().enumerate() {
            permuted[(r_new, c_new)] = hessian[(r_old, c_old)];
        }
    }
    let mut off_diag_max: f64 = 0.0;
    for r in 0..n {
        for c in n..2 * n {
            off_diag_max = off_diag_max.max(permuted[(r, c)].abs());
            off_diag_max = off_diag_max.max(permuted[(c, r)].abs());
        }
    }
    let e_mat = interaction_matrix(spec, &aligned_cfg)?;
    let y_block = permuted.view((n, n), (n, n)).clone_owned();
    Ok(BlockStructureResidual {
        off_diag_max,
        y_block_vs_interaction: (y_block - e_mat).amax(),
        hessian_amax: hessian.amax(),
    })
}

/// Integrate the unit-gain flow from a collinear start until the gradient
/// norm falls below `grad_tol`; the landing point is an incorrect equilibrium
/// when the error stays bounded away from zero.
pub fn harvest_equilibrium(
    spec: &FrameworkSpec,
    cfg0: &Configuration,
    dt: f64,
    t_max: f64,
    grad_tol: f64,
) -> Result<Configuration> {
    spec.ensure_valid()?;
    cfg0.check_domain_default(spec)?;
    let dn = spec.d() * spec.n();
    let mut cfg = cfg0.clone();
    let mut k1 = vec![0.0; dn];
    let mut k2 = vec![0.0; dn];
    let mut k3 = vec![0.0; dn];
    let mut k4 = vec![0.0; dn];
    let mut stage = vec![0.0; dn];
    let steps = (t_max / dt).ceil() as usize;
    for _ in 0..steps {
        cfg.check_domain_default(spec)?;
        let p = cfg.positions_mut().as_mut_slice();
        accumulate_control(spec, p, Gains::UNIT, &mut k1);
        let grad_sq: f64 = k1.iter().map(|x| x * x).sum();
        if grad_sq.sqrt() < grad_tol {
            return Ok(cfg);
        }
        for c in 0..dn {
            stage[c] = p[c] + 0.5 * dt * k1[c];
        }
        accumulate_control(spec, &stage, Gains::UNIT, &mut k2);
        for c in 0..dn {
            stage[c] = p[c] + 0.5 * dt * k2[c];
        }
        accumulate_control(spec, &stage, Gains::UNIT, &mut k3);
        for c in 0..dn {
            stage[c] = p[c] + dt * k3[c];
        }
        accumulate_control(spec, &stage, Gains::UNIT, &mut k4);
        for c in 0..dn {
            p[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    let final_grad = control_input(spec, &cfg, Gains::UNIT)?.norm();
    Err(Error::InvalidPrecondition(format!(
        "flow did not reach an equilibrium within t_max (gradient norm {final_grad:.3e})"
    )))
}

/// Initial-condition sampling mode for basin studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasinSampling {
    /// Uniform in the box, redrawing anything collinear within tolerance.
    NonCollinear,
    /// Axis-aligned collinear starts; the flow keeps them exactly collinear.
    ForcedCollinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Desired,
    Incorrect,
    Horizon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub outcome: TrialOutcome,
    pub t_end: f64,
    pub final_err: f64,
    /// Gradient norm of the simulated (gain-weighted) field at the end state.
    pub final_grad: f64,
    pub final_positions: DVector<f64>,
}

/// Collinearity threshold below which a sampled start is redrawn.
pub const DEFAULT_COLLINEARITY_TOL: f64 = 0.5;

fn sample_noncollinear<R: Rng>(rng: &mut R, n: usize, box_half: f64, tol_col: f64) -> Configuration {
    loop {
        let p = DVector::from_fn(2 * n, |_, _| rng.random_range(-box_half..box_half));
        let cfg = Configuration::new(2, p).expect("even length");
        let sv = cfg.centered_matrix().svd(false, false).singular_values;
        if sv[sv.len() - 1] > tol_col {
            return cfg;
        }
    }
}

fn sample_collinear<R: Rng>(rng: &mut R, n: usize, box_half: f64) -> Configuration {
    // Horizontal lines keep the y-components of the field exactly zero in
    // floating point, so the trajectory stays collinear bit-for-bit.
    loop {
        let y = rng.random_range(-box_half..box_half);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-box_half..box_half)).collect();
        let mut separated = true;
        for i in 0..n {
            for j in (i + 1)..n {
                if (xs[i] - xs[j]).abs() < 1e-2 * box_half {
                    separated = false;
                }
            }
        }
        if !separated {
            continue;
        }
        let mut p = DVector::zeros(2 * n);
        for (i, &x) in xs.iter().enumerate() {
            p[2 * i] = x;
            p[2 * i + 1] = y;
        }
        return Configuration::new(2, p).expect("even length");
    }
}

fn trial_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Run independent seeded trials of the flow from sampled starts. Trials are
/// data-parallel; results come back in trial order, so the outcome is
/// reproducible bit-for-bit for a given seed.
pub fn run_basin_trials(
    spec: &FrameworkSpec,
    trials: usize,
    seed: u64,
    sim: &SimConfig,
    sampling: BasinSampling,
    box_half: f64,
    tol_col: f64,
) -> Result<Vec<TrialResult>> {
    if spec.n() != 3 || spec.d() != 2 {
        return Err(Error::InvalidPrecondition(
            "basin studies are defined for 3-agent frameworks in 2D".into(),
        ));
    }
    spec.ensure_valid()?;
    {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, u64::MAX));
        let probe = sample_configuration(spec, &mut rng, box_half);
        let report = classify(spec, &probe)?;
        if !report.is_minimal {
            return Err(Error::InvalidPrecondition(format!(
                "spec is not minimally rigid at a generic configuration (rank {} of {})",
                report.rank, report.threshold
            )));
        }
    }

    let run_one = |i: usize| -> Result<TrialResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, i as u64));
        let cfg0 = match sampling {
            BasinSampling::NonCollinear => sample_noncollinear(&mut rng, 3, box_half, tol_col),
            BasinSampling::ForcedCollinear => sample_collinear(&mut rng, 3, box_half),
        };
        let trace = simulate(spec, &cfg0, sim)?;
        let final_cfg = trace.final_configuration();
        let final_err = trace.final_err_norm();
        let final_grad = control_input(spec, &final_cfg, sim.gains)
            .map(|u| u.norm())
            .unwrap_or(f64::INFINITY);
        let outcome = match trace.flag {
            TerminalFlag::Converged => TrialOutcome::Desired,
            // Degenerate collapse counts as a horizon outcome for the stats.
            TerminalFlag::Horizon | TerminalFlag::Degenerate => {
                if final_grad < 1e-8 && final_err >= 1e-6 {
                    TrialOutcome::Incorrect
                } else {
                    TrialOutcome::Horizon
                }
            }
        };
        Ok(TrialResult {
            outcome,
            t_end: trace.final_time(),
            final_err,
            final_grad,
            final_positions: final_cfg.positions().clone(),
        })
    };

    #[cfg(feature = "parallel")]
    {
        (0..trials).into_par_iter().map(run_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(run_one).collect()
    }
}

/// Aggregate basin statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinStats {
    pub trials: usize,
    pub seed: u64,
    pub n_desired: usize,
    pub n_incorrect: usize,
    pub n_horizon: usize,
    pub mean_convergence_time: Option<f64>,
    #[serde(rename = "box")]
    pub box_half: f64,
}

/// Monte-Carlo basin study over non-collinear starts: sample, simulate,
/// count outcomes.
pub fn monte_carlo_basin(
    spec: &FrameworkSpec,
    trials: usize,
    seed: u64,
    sim: &SimConfig,
    sampling: BasinSampling,
    box_half: f64,
) -> Result<BasinStats> {
    let results =
        run_basin_trials(spec, trials, seed, sim, sampling, box_half, DEFAULT_COLLINEARITY_TOL)?;
    let n_desired = results.iter().filter(|r| r.outcome == TrialOutcome::Desired).count();
    let n_incorrect = results.iter().filter(|r| r.outcome == TrialOutcome::Incorrect).count();
    let n_horizon = results.iter().filter(|r| r.outcome == TrialOutcome::Horizon).count();
    let mean_convergence_time = if n_desired > 0 {
        Some(
            results
                .iter()
                .filter(|r| r.outcome == TrialOutcome::Desired)
                .map(|r| r.t_end)
                .sum::<f64>()
                / n_desired as f64,
        )
    } else {
        None
    };
    Ok(BasinStats {
        trials,
        seed,
        n_desired,
        n_incorrect,
        n_horizon,
        mean_convergence_time,
        box_half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::monitor_cp_rank;

    fn triangle_spec() -> FrameworkSpec {
        FrameworkSpec::from_one_based(
            3,
            2,
            &[(1, 2)],
            &[100.0],
            &[(1, 2, 3), (3, 1, 2)],
            &[0.5, 0.5],
        )
    }

    fn equilateral(side: f64) -> Configuration {
        Configuration::from_points(
            2,
            &[
                vec![0.0, 0.0],
                vec![side, 0.0],
                vec![side / 2.0, side * 3.0f64.sqrt() / 2.0],
            ],
        )
        .unwrap()
    }

    fn collinear_start() -> Configuration {
        Configuration::from_points(2, &[vec![-12.0, 3.0], vec![-3.0, 3.0], vec![9.0, 3.0]])
            .unwrap()
    }

    fn harvested() -> Configuration {
        harvest_equilibrium(&triangle_spec(), &collinear_start(), 2e-4, 60.0, 1e-11).unwrap()
    }

    #[test]
    fn desired_realization_classifies_as_desired() {
        let report = classify_equilibrium(
            &triangle_spec(),
            &equilateral(10.0),
            EquilibriumTolerances::default(),
        )
        .unwrap();
        assert_eq!(report.kind, EquilibriumKind::Desired);
        let eig_scale = report.hessian_spectrum.last().unwrap().abs().max(1.0);
        assert!(report.hessian_symmetry_residual <= 1e-6 * eig_scale);
        // Three trivial directions (translations + rotation) carry zero
        // eigenvalues; the remaining three are positive.
        let spectrum = &report.hessian_spectrum;
        assert_eq!(spectrum.len(), 6);
        for &eig in &spectrum[..3] {
            assert!(eig.abs() <= 1e-6, "trivial eigenvalue too large: {eig}");
        }
        for &eig in &spectrum[3..] {
            assert!(eig > 1e-6, "non-trivial eigenvalue not positive: {eig}");
        }
    }

    #[test]
    fn harvested_collinear_equilibrium_is_incorrect_and_unstable() {
        let eq = harvested();
        let report =
            classify_equilibrium(&triangle_spec(), &eq, EquilibriumTolerances::default()).unwrap();
        assert_eq!(report.kind, EquilibriumKind::Incorrect);
        assert!(report.min_eig < 0.0);
        assert!(report.e_matrix_min_eig < 0.0);
        assert!(
            collinear_equilibrium_check(
                &triangle_spec(),
                &eq,
                EquilibriumTolerances::default(),
                1e-6
            )
            .unwrap()
        );
    }

    #[test]
    fn random_configuration_is_not_an_equilibrium() {
        let cfg = Configuration::from_points(
            2,
            &[vec![0.3, -1.0], vec![4.0, 2.0], vec![-2.0, 5.0]],
        )
        .unwrap();
        let report =
            classify_equilibrium(&triangle_spec(), &cfg, EquilibriumTolerances::default())
                .unwrap();
        assert_eq!(report.kind, EquilibriumKind::NotEquilibrium);
    }

    #[test]
    fn collinear_check_rejects_wrong_shape() {
        let spec = FrameworkSpec::from_one_based(
            4,
            2,
            &[(1, 2)],
            &[1.0],
            &[(1, 2, 3), (4, 2, 3)],
            &[0.3, 0.3],
        );
        let cfg = Configuration::from_points(
            2,
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 1.0], vec![2.0, 2.0]],
        )
        .unwrap();
        assert!(matches!(
            collinear_equilibrium_check(&spec, &cfg, EquilibriumTolerances::default(), 1e-6),
            Err(Error::InvalidPrecondition(_))
        ));
    }

    #[test]
    fn block_structure_at_harvested_equilibrium() {
        let eq = harvested();
        let res = block_structure_check(&triangle_spec(), &eq).unwrap();
        assert!(res.off_diag_max <= 1e-6 * res.hessian_amax.max(1.0));
        assert!(res.y_block_vs_interaction <= 1e-6 * res.hessian_amax.max(1.0));
    }

    #[test]
    fn closed_form_collinear_equilibrium() {
        // On a line the cosine gradients vanish identically, so collinear
        // configurations satisfying the distance targets are exact incorrect
        // equilibria; no root finding is needed for this constraint class.
        let spec = triangle_spec();
        let eq = Configuration::from_points(
            2,
            &[vec![0.0, 0.0], vec![10.0, 0.0], vec![17.3, 0.0]],
        )
        .unwrap();
        let grad = control_input(&spec, &eq, Gains::UNIT).unwrap();
        assert!(grad.amax() < 1e-14);
        let report =
            classify_equilibrium(&spec, &eq, EquilibriumTolerances::default()).unwrap();
        assert_eq!(report.kind, EquilibriumKind::Incorrect);
        assert_eq!(report.collinearity, 0.0);
        let res = block_structure_check(&spec, &eq).unwrap();
        assert!(res.off_diag_max <= 1e-7 * res.hessian_amax.max(1.0));
        assert!(res.y_block_vs_interaction <= 1e-7 * res.hessian_amax.max(1.0));
    }

    #[test]
    fn pure_angle_desired_equilibrium_has_four_trivial_directions() {
        // Without distance constraints the scaling direction joins the
        // trivial motions: 2 translations + 1 rotation + 1 scaling.
        let spec =
            FrameworkSpec::from_one_based(3, 2, &[], &[], &[(1, 2, 3), (3, 1, 2)], &[0.5, 0.5]);
        let report = classify_equilibrium(
            &spec,
            &equilateral(8.0),
            EquilibriumTolerances::default(),
        )
        .unwrap();
        assert_eq!(report.kind, EquilibriumKind::Desired);
        let spectrum = &report.hessian_spectrum;
        for &eig in &spectrum[..4] {
            assert!(eig.abs() <= 1e-6, "trivial eigenvalue {eig}");
        }
        for &eig in &spectrum[4..] {
            assert!(eig > 1e-6, "constrained eigenvalue {eig}");
        }
    }

    #[test]
    fn block_structure_rejects_generic_configuration() {
        assert!(matches!(
            block_structure_check(&triangle_spec(), &equilateral(10.0)),
            Err(Error::NotCollinear(_))
        ));
    }

    #[test]
    fn zero_trials_give_empty_stats() {
        let sim = SimConfig { t_max: 1.0, ..SimConfig::default() };
        let stats = monte_carlo_basin(
            &triangle_spec(),
            0,
            1,
            &sim,
            BasinSampling::NonCollinear,
            20.0,
        )
        .unwrap();
        assert_eq!(stats.n_desired + stats.n_incorrect + stats.n_horizon, 0);
        assert!(stats.mean_convergence_time.is_none());
    }

    #[test]
    fn forced_collinear_trials_stay_collinear_and_miss_the_target() {
        let spec = triangle_spec();
        let sim = SimConfig {
            dt: 2e-4,
            t_max: 30.0,
            err_tol: 1e-8,
            record_every: 2000,
            ..SimConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let cfg0 = sample_collinear(&mut rng, 3, 15.0);
        let trace = simulate(&spec, &cfg0, &sim).unwrap();
        assert!(monitor_cp_rank(&trace));
        assert_eq!(trace.monitors[0].cp_rank, 1);
        assert_ne!(trace.flag, TerminalFlag::Converged);
        assert!(trace.final_err_norm() > 1e-2);
    }

    #[test]
    fn basin_trials_are_seed_reproducible() {
        let spec = triangle_spec();
        let sim = SimConfig {
            dt: 1e-3,
            t_max: 600.0,
            err_tol: 1e-6,
            record_every: 100_000,
            gains: Gains::new(0.05, 20.0),
            ..SimConfig::default()
        };
        let a = run_basin_trials(&spec, 4, 11, &sim, BasinSampling::NonCollinear, 20.0, 0.5)
            .unwrap();
        let b = run_basin_trials(&spec, 4, 11, &sim, BasinSampling::NonCollinear, 20.0, 0.5)
            .unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.outcome == TrialOutcome::Desired));
    }
}
