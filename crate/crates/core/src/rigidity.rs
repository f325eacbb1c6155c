//! Constraint map, weak rigidity matrix and rank-based rigidity analysis.
//!
//! The constraint map stacks squared edge lengths followed by angle cosines.
//! Its Jacobian with respect to the stacked positions is the weak rigidity
//! matrix: rigid-body translations and rotations (and uniform scaling when no
//! distance constraint exists) always lie in its null space, so the framework
//! pins its shape exactly when the rank reaches the corresponding threshold.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::graph::{Configuration, FrameworkSpec};
use crate::{Error, Result};

// Small fixed-size vector helpers; d is 2 or 3 and the third component stays
// zero in 2D, which keeps the inner simulation loop free of heap traffic.
#[inline]
pub(crate) fn point_of(coords: &[f64], d: usize, i: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    out[..d].copy_from_slice(&coords[i * d..(i + 1) * d]);
    out
}

#[inline]
pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub(crate) fn cosine_of(z_ki: [f64; 3], z_kj: [f64; 3]) -> f64 {
    dot3(z_ki, z_kj) / (norm3(z_ki) * norm3(z_kj))
}

/// Gradient blocks of one angle cosine with respect to the apex and the two
/// leg positions. With `a = |z_ki|`, `b = |z_kj|` and `A` the cosine:
///
/// - apex block: `(z_ki + z_kj)/(ab) - A (z_ki/a^2 + z_kj/b^2)`
/// - leg-i block: `-z_kj/(ab) + A z_ki/a^2`
/// - leg-j block: `-z_ki/(ab) + A z_kj/b^2`
///
/// These are the projection-matrix rows written out; the three blocks sum to
/// zero, which is what makes translations trivial motions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AngleBlocks {
    pub apex: [f64; 3],
    pub leg_i: [f64; 3],
    pub leg_j: [f64; 3],
    pub cosine: f64,
}

#[inline]
pub(crate) fn angle_blocks(z_ki: [f64; 3], z_kj: [f64; 3]) -> AngleBlocks {
    let a = norm3(z_ki);
    let b = norm3(z_kj);
    let inv_ab = 1.0 / (a * b);
    let cosine = dot3(z_ki, z_kj) * inv_ab;
    let ca = cosine / (a * a);
    let cb = cosine / (b * b);
    let mut apex = [0.0; 3];
    let mut leg_i = [0.0; 3];
    let mut leg_j = [0.0; 3];
    for c in 0..3 {
        apex[c] = (z_ki[c] + z_kj[c]) * inv_ab - ca * z_ki[c] - cb * z_kj[c];
        leg_i[c] = -z_kj[c] * inv_ab + ca * z_ki[c];
        leg_j[c] = -z_ki[c] * inv_ab + cb * z_kj[c];
    }
    AngleBlocks { apex, leg_i, leg_j, cosine }
}

/// Evaluate the constraint map: the first `m` entries are squared edge
/// lengths, the last `w` are angle cosines.
pub fn eval_fw(spec: &FrameworkSpec, cfg: &Configuration) -> Result<DVector<f64>> {
    cfg.check_domain_default(spec)?;
    let coords = cfg.coords();
    let d = cfg.d();
    let mut out = DVector::zeros(spec.constraint_count());
    for (g, &(i, j)) in spec.edges().iter().enumerate() {
        let z = sub3(point_of(coords, d, i), point_of(coords, d, j));
        out[g] = dot3(z, z);
    }
    let m = spec.edge_count();
    for (h, &(k, i, j)) in spec.angles().iter().enumerate() {
        let pk = point_of(coords, d, k);
        let z_ki = sub3(pk, point_of(coords, d, i));
        let z_kj = sub3(pk, point_of(coords, d, j));
        out[m + h] = cosine_of(z_ki, z_kj);
    }
    Ok(out)
}

/// Assemble the weak rigidity matrix, the analytic Jacobian of [`eval_fw`]:
/// one row per constraint (edges in listed order, then angles), `d` columns
/// per agent. The distance row for edge `(i, j)` carries `2 z_ij^T` in block
/// `i` and its negative in block `j`; angle rows carry the apex and leg
/// gradients.
pub fn weak_rigidity_matrix(spec: &FrameworkSpec, cfg: &Configuration) -> Result<DMatrix<f64>> {
    cfg.check_domain_default(spec)?;
    let coords = cfg.coords();
    let d = cfg.d();
    let mut mat = DMatrix::zeros(spec.constraint_count(), d * cfg.n());
    for (g, &(i, j)) in spec.edges().iter().enumerate() {
        let z = sub3(point_of(coords, d, i), point_of(coords, d, j));
        for c in 0..d {
            mat[(g, i * d + c)] = 2.0 * z[c];
            mat[(g, j * d + c)] = -2.0 * z[c];
        }
    }
    let m = spec.edge_count();
    for (h, &(k, i, j)) in spec.angles().iter().enumerate() {
        let pk = point_of(coords, d, k);
        let z_ki = sub3(pk, point_of(coords, d, i));
        let z_kj = sub3(pk, point_of(coords, d, j));
        let blocks = angle_blocks(z_ki, z_kj);
        for c in 0..d {
            mat[(m + h, k * d + c)] = blocks.apex[c];
            mat[(m + h, i * d + c)] = blocks.leg_i[c];
            mat[(m + h, j * d + c)] = blocks.leg_j[c];
        }
    }
    Ok(mat)
}

/// Central-difference Jacobian of [`eval_fw`], the independent oracle for the
/// analytic assembly. Step `1e-6 * max(1, |p|_inf)`.
pub fn finite_difference_jacobian(
    spec: &FrameworkSpec,
    cfg: &Configuration,
) -> Result<DMatrix<f64>> {
    let p = cfg.positions();
    let h = 1e-6 * p.amax().max(1.0);
    let dn = p.len();
    let mut jac = DMatrix::zeros(spec.constraint_count(), dn);
    for c in 0..dn {
        let mut plus = p.clone();
        plus[c] += h;
        let mut minus = p.clone();
        minus[c] -= h;
        let f_plus = eval_fw(spec, &Configuration::new(cfg.d(), plus)?)?;
        let f_minus = eval_fw(spec, &Configuration::new(cfg.d(), minus)?)?;
        jac.set_column(c, &((f_plus - f_minus) / (2.0 * h)));
    }
    Ok(jac)
}

/// Rotation generators whose quadratic form vanishes identically
/// (`x^T J x = 0`): one in 2D, three in 3D.
pub fn rotation_generators(d: usize) -> Vec<DMatrix<f64>> {
    match d {
        2 => vec![DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])],
        3 => vec![
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]),
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        ],
        _ => panic!("rotation generators defined only for d = 2, 3"),
    }
}

/// Basis of trivial infinitesimal motions as columns of a `dn x b` matrix:
/// `d` translations, the rotational directions `(I_n (x) J) p`, and `p`
/// itself when `include_scaling` is set. `b = d(d+1)/2 (+1)`.
pub fn trivial_motion_basis(cfg: &Configuration, include_scaling: bool) -> DMatrix<f64> {
    let d = cfg.d();
    let n = cfg.n();
    let dn = d * n;
    let rots = rotation_generators(d);
    let b = d + rots.len() + usize::from(include_scaling);
    let mut basis = DMatrix::zeros(dn, b);
    for c in 0..d {
        for i in 0..n {
            basis[(i * d + c, c)] = 1.0;
        }
    }
    for (r, gen) in rots.iter().enumerate() {
        for i in 0..n {
            let rotated = gen * cfg.point(i);
            for c in 0..d {
                basis[(i * d + c, d + r)] = rotated[c];
            }
        }
    }
    if include_scaling {
        basis.set_column(b - 1, cfg.positions());
    }
    basis
}

/// Singular-value cutoff policy for numerical rank decisions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RankTolerance {
    /// `tau = max(rows, cols) * eps_machine * sigma_max`, the standard choice.
    #[default]
    Relative,
    /// Fixed absolute cutoff.
    Absolute(f64),
}

/// Numerical rank and the full set of singular values (descending).
pub fn numerical_rank(matrix: &DMatrix<f64>, tol: RankTolerance) -> (usize, Vec<f64>) {
    let svd = matrix.clone().svd(false, false);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let tau = match tol {
        RankTolerance::Relative => {
            matrix.nrows().max(matrix.ncols()) as f64 * f64::EPSILON * sigma_max
        }
        RankTolerance::Absolute(t) => t,
    };
    let rank = sv.iter().filter(|&&s| s > tau).count();
    (rank, sv)
}

/// Rank analysis of a framework at a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub rank: usize,
    pub threshold: usize,
    pub is_giwr: bool,
    pub is_minimal: bool,
    pub singular_values: Vec<f64>,
    /// Max over trivial-motion basis columns v of |R_W v| / |v|.
    pub trivial_basis_residual: f64,
    pub e_empty: bool,
    /// Rank of the centered position matrix: the dimension of the affine
    /// span, reported alongside the classification rather than folded into
    /// `is_giwr`.
    pub affine_span_rank: usize,
}

/// Classify a framework with the default rank tolerance.
pub fn classify(spec: &FrameworkSpec, cfg: &Configuration) -> Result<RigidityReport> {
    classify_with_tol(spec, cfg, RankTolerance::Relative)
}

/// Classify a framework: GIWR iff the weak rigidity matrix attains the rank
/// threshold, minimal iff additionally no single constraint can be dropped
/// without the remaining rows falling below that threshold.
pub fn classify_with_tol(
    spec: &FrameworkSpec,
    cfg: &Configuration,
    tol: RankTolerance,
) -> Result<RigidityReport> {
    spec.ensure_valid()?;
    let rw = weak_rigidity_matrix(spec, cfg)?;
    let (rank, singular_values) = numerical_rank(&rw, tol);
    let threshold = spec.rank_threshold();
    let is_giwr = rank == threshold;

    let is_minimal = is_giwr
        && (0..rw.nrows()).all(|r| {
            let reduced = rw.clone().remove_row(r);
            numerical_rank(&reduced, tol).0 < threshold
        });

    let basis = trivial_motion_basis(cfg, spec.e_empty());
    let mut trivial_basis_residual: f64 = 0.0;
    for col in basis.column_iter() {
        let v: DVector<f64> = col.into();
        trivial_basis_residual = trivial_basis_residual.max((&rw * &v).norm() / v.norm());
    }

    let (affine_span_rank, _) = numerical_rank(&cfg.centered_matrix(), RankTolerance::Relative);

    Ok(RigidityReport {
        rank,
        threshold,
        is_giwr,
        is_minimal,
        singular_values,
        trivial_basis_residual,
        e_empty: spec.e_empty(),
        affine_span_rank,
    })
}

/// Outcome of the distance-rigidity spot check: infinitesimal distance
/// rigidity of a pure-distance framework must carry over to GIWR once angle
/// constraints are added.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRigidityImplication {
    /// Premise: `rank(R_D) = dn - d(d+1)/2` for the distance-only framework.
    pub distance_rigid: bool,
    /// Conclusion: extended framework classifies as GIWR.
    pub giwr_with_angles: bool,
}

impl DistanceRigidityImplication {
    pub fn holds(&self) -> bool {
        !self.distance_rigid || self.giwr_with_angles
    }
}

/// Check the implication on a distance-only spec extended by `added_angles`
/// (0-based triples); targets for the added angles are taken from the
/// configuration itself.
pub fn check_distance_rigidity_implication(
    spec: &FrameworkSpec,
    cfg: &Configuration,
    added_angles: &[(usize, usize, usize)],
) -> Result<DistanceRigidityImplication> {
    if spec.angle_count() != 0 {
        return Err(Error::InvalidPrecondition(
            "distance-rigidity check requires a framework without angle constraints".into(),
        ));
    }
    spec.ensure_valid()?;
    // R_D = (1/2) dD/dp; halving does not change the rank, so reuse the rows.
    let rd = weak_rigidity_matrix(spec, cfg)? / 2.0;
    let (rank_d, _) = numerical_rank(&rd, RankTolerance::Relative);
    let d = spec.d();
    let distance_rigid = rank_d == spec.d() * spec.n() - d * (d + 1) / 2;

    let extended = extend_with_measured_angles(spec, cfg, added_angles)?;
    let giwr_with_angles = classify(&extended, cfg)?.is_giwr;
    Ok(DistanceRigidityImplication { distance_rigid, giwr_with_angles })
}

fn extend_with_measured_angles(
    spec: &FrameworkSpec,
    cfg: &Configuration,
    triples: &[(usize, usize, usize)],
) -> Result<FrameworkSpec> {
    let coords = cfg.coords();
    let d = cfg.d();
    let mut angles: Vec<(usize, usize, usize)> = spec.angles().to_vec();
    let mut targets: Vec<f64> = spec.angle_targets().to_vec();
    for &(k, i, j) in triples {
        let pk = point_of(coords, d, k);
        let z_ki = sub3(pk, point_of(coords, d, i));
        let z_kj = sub3(pk, point_of(coords, d, j));
        angles.push((k, i, j));
        targets.push(cosine_of(z_ki, z_kj));
    }
    Ok(FrameworkSpec::new(
        spec.n(),
        spec.d(),
        spec.edges().to_vec(),
        spec.edge_targets().to_vec(),
        angles,
        targets,
    ))
}

/// Draw a configuration uniformly from `[-half_width, half_width]^{dn}`,
/// redrawing until all constrained pairs are separated by a margin.
pub fn sample_configuration<R: Rng>(
    spec: &FrameworkSpec,
    rng: &mut R,
    half_width: f64,
) -> Configuration {
    let dn = spec.d() * spec.n();
    loop {
        let p = DVector::from_fn(dn, |_, _| rng.random_range(-half_width..half_width));
        let cfg = Configuration::new(spec.d(), p).expect("dn is a multiple of d");
        if cfg.check_domain(spec, 1e-3 * half_width.max(1.0)).is_ok() {
            return cfg;
        }
    }
}

/// Decide whether `cfg` is a regular point: whether the weak rigidity matrix
/// attains the maximum rank observed over `samples` random configurations.
pub fn is_regular_point(
    spec: &FrameworkSpec,
    cfg: &Configuration,
    samples: usize,
    seed: u64,
) -> Result<bool> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "regular-point sampling requires at least one sample".into(),
        ));
    }
    spec.ensure_valid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rank = 0;
    for _ in 0..samples {
        let sample = sample_configuration(spec, &mut rng, 10.0);
        let rw = weak_rigidity_matrix(spec, &sample)?;
        max_rank = max_rank.max(numerical_rank(&rw, RankTolerance::Relative).0);
    }
    let rw = weak_rigidity_matrix(spec, cfg)?;
    Ok(numerical_rank(&rw, RankTolerance::Relative).0 == max_rank)
}

/// Split of the constraint list into a minimally GIWR core and the remainder.
/// Indices refer to the combined ordering (distances then angles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPartition {
    pub minimal: Vec<usize>,
    pub remainder: Vec<usize>,
}

/// Greedy selection, in listed constraint order, of rows that raise the rank
/// of the accumulated submatrix. For a GIWR framework the selected rows form
/// a minimally GIWR sub-framework of size equal to the rank threshold.
pub fn partition_constraints(
    spec: &FrameworkSpec,
    cfg: &Configuration,
) -> Result<ConstraintPartition> {
    let report = classify(spec, cfg)?;
    if !report.is_giwr {
        return Err(Error::NotGiwr { rank: report.rank, threshold: report.threshold });
    }
    let rw = weak_rigidity_matrix(spec, cfg)?;
    let mut minimal = Vec::new();
    let mut remainder = Vec::new();
    let mut kept = DMatrix::<f64>::zeros(0, rw.ncols());
    let mut current_rank = 0;
    for r in 0..rw.nrows() {
        let candidate = kept.clone().insert_row(kept.nrows(), 0.0);
        let mut candidate = candidate;
        candidate.row_mut(kept.nrows()).copy_from(&rw.row(r));
        let (rank, _) = numerical_rank(&candidate, RankTolerance::Relative);
        if rank > current_rank {
            current_rank = rank;
            kept = candidate;
            minimal.push(r);
        } else {
            remainder.push(r);
        }
    }
    Ok(ConstraintPartition { minimal, remainder })
}
