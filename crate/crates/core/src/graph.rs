//! Framework specification and validation: agents, distance edges, angle
//! triples, their target values, and the sensing topology they induce.
//!
//! Externally (scenario files, figures, CLI output) vertices are numbered
//! 1..=n; internally everything is 0-based. Edges are unordered, so pairs are
//! canonicalized to `i < j` at construction; angle triples `(k, i, j)` keep the
//! apex `k` first and canonicalize the legs to `i < j` since the subtended
//! angle has no direction or sign.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, DEFAULT_EPS_SEP};

/// Out-of-range marker produced when converting an external index of 0;
/// always fails the range check in [`validate`].
const BAD_INDEX: usize = usize::MAX;

fn to_internal(external: usize) -> usize {
    external.checked_sub(1).unwrap_or(BAD_INDEX)
}

/// A framework specification: vertex count, ambient dimension, distance
/// constraints with target squared lengths, and angle constraints with target
/// cosines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameworkSpec {
    n: usize,
    d: usize,
    edges: Vec<(usize, usize)>,
    angles: Vec<(usize, usize, usize)>,
    edge_targets: Vec<f64>,
    angle_targets: Vec<f64>,
}

impl FrameworkSpec {
    /// Build a spec from 0-based vertex indices. Pairs and triple legs are
    /// canonicalized; duplicates are kept so [`validate`] can report them.
    pub fn new(
        n: usize,
        d: usize,
        edges: Vec<(usize, usize)>,
        edge_targets: Vec<f64>,
        angles: Vec<(usize, usize, usize)>,
        angle_targets: Vec<f64>,
    ) -> Self {
        let edges = edges
            .into_iter()
            .map(|(i, j)| (i.min(j), i.max(j)))
            .collect();
        let angles = angles
            .into_iter()
            .map(|(k, i, j)| (k, i.min(j), i.max(j)))
            .collect();
        FrameworkSpec { n, d, edges, angles, edge_targets, angle_targets }
    }

    /// Build a spec from 1-based vertex indices as printed in figures and
    /// scenario files. An external index of 0 is preserved as an out-of-range
    /// value for [`validate`] to flag.
    pub fn from_one_based(
        n: usize,
        d: usize,
        edges: &[(usize, usize)],
        edge_targets: &[f64],
        angles: &[(usize, usize, usize)],
        angle_targets: &[f64],
    ) -> Self {
        Self::new(
            n,
            d,
            edges.iter().map(|&(i, j)| (to_internal(i), to_internal(j))).collect(),
            edge_targets.to_vec(),
            angles
                .iter()
                .map(|&(k, i, j)| (to_internal(k), to_internal(i), to_internal(j)))
                .collect(),
            angle_targets.to_vec(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Distance constraints, canonicalized, 0-based, in listed order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Angle constraints `(apex, i, j)`, legs canonicalized, 0-based, in
    /// listed order.
    pub fn angles(&self) -> &[(usize, usize, usize)] {
        &self.angles
    }

    /// Target squared lengths, aligned with [`Self::edges`].
    pub fn edge_targets(&self) -> &[f64] {
        &self.edge_targets
    }

    /// Target cosines, aligned with [`Self::angles`].
    pub fn angle_targets(&self) -> &[f64] {
        &self.angle_targets
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn angle_count(&self) -> usize {
        self.angles.len()
    }

    /// Total constraint count `m + w`.
    pub fn constraint_count(&self) -> usize {
        self.edges.len() + self.angles.len()
    }

    pub fn e_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Rank a weak rigidity matrix must attain for the framework to be GIWR:
    /// `dn - d(d+1)/2` with distance constraints present, `dn - (d²+d+2)/2`
    /// without (the scaling direction joins the trivial motions).
    pub fn rank_threshold(&self) -> usize {
        let dn = self.d * self.n;
        if self.e_empty() {
            dn - (self.d * self.d + self.d + 2) / 2
        } else {
            dn - self.d * (self.d + 1) / 2
        }
    }

    /// All vertex pairs that appear in some constraint (all three pairs of
    /// every angle triple), deduplicated and sorted.
    pub fn constrained_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for &(i, j) in &self.edges {
            pairs.push((i.min(j), i.max(j)));
        }
        for &(k, i, j) in &self.angles {
            pairs.push((k.min(i), k.max(i)));
            pairs.push((k.min(j), k.max(j)));
            pairs.push((i.min(j), i.max(j)));
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Spec for a sub-framework keeping only the constraints at the given
    /// positions in the combined (distances then angles) ordering.
    pub fn sub_framework(&self, constraint_indices: &[usize]) -> FrameworkSpec {
        let m = self.edges.len();
        let mut edges = Vec::new();
        let mut edge_targets = Vec::new();
        let mut angles = Vec::new();
        let mut angle_targets = Vec::new();
        for &c in constraint_indices {
            if c < m {
                edges.push(self.edges[c]);
                edge_targets.push(self.edge_targets[c]);
            } else {
                angles.push(self.angles[c - m]);
                angle_targets.push(self.angle_targets[c - m]);
            }
        }
        FrameworkSpec { n: self.n, d: self.d, edges, angles, edge_targets, angle_targets }
    }

    /// Require the spec to be well-formed, turning a non-empty validation
    /// report into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate(self);
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(report))
        }
    }
}

/// A single well-formedness violation, reported with 1-based indices and the
/// position of the offending entry in its constraint list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    VertexCountTooSmall { n: usize },
    UnsupportedDimension { d: usize },
    NoConstraints,
    EdgeIndexOutOfRange { pos: usize },
    EdgeSelfLoop { pos: usize },
    DuplicateEdge { pos: usize, first: usize },
    EdgeTargetNotPositive { pos: usize, value: f64 },
    AngleIndexOutOfRange { pos: usize },
    AngleVerticesNotDistinct { pos: usize },
    DuplicateAngle { pos: usize, first: usize },
    AngleTargetOutOfRange { pos: usize, value: f64 },
    TargetCountMismatch { kind: &'static str, constraints: usize, targets: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexCountTooSmall { n } => {
                write!(f, "vertex count {n} is below the minimum of 3")
            }
            Violation::UnsupportedDimension { d } => {
                write!(f, "dimension {d} is not supported (must be 2 or 3)")
            }
            Violation::NoConstraints => write!(f, "spec has no constraints"),
            Violation::EdgeIndexOutOfRange { pos } => {
                write!(f, "edge #{} has a vertex index outside 1..=n", pos + 1)
            }
            Violation::EdgeSelfLoop { pos } => write!(f, "edge #{} is a self-loop", pos + 1),
            Violation::DuplicateEdge { pos, first } => {
                write!(f, "edge #{} duplicates edge #{}", pos + 1, first + 1)
            }
            Violation::EdgeTargetNotPositive { pos, value } => {
                write!(f, "edge #{} target squared length {value} is not positive", pos + 1)
            }
            Violation::AngleIndexOutOfRange { pos } => {
                write!(f, "angle #{} has a vertex index outside 1..=n", pos + 1)
            }
            Violation::AngleVerticesNotDistinct { pos } => {
                write!(f, "angle #{} does not have three distinct vertices", pos + 1)
            }
            Violation::DuplicateAngle { pos, first } => {
                write!(f, "angle #{} duplicates angle #{}", pos + 1, first + 1)
            }
            Violation::AngleTargetOutOfRange { pos, value } => {
                write!(
                    f,
                    "angle #{} target cosine {value} is outside the open interval (-1, 1)",
                    pos + 1
                )
            }
            Violation::TargetCountMismatch { kind, constraints, targets } => {
                write!(f, "{kind} targets ({targets}) do not match constraints ({constraints})")
            }
        }
    }
}

/// Outcome of [`validate`]; empty means well-formed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (idx, v) in self.violations.iter().enumerate() {
            if idx > 0 {
                writeln!(f)?;
            }
            write!(f, "- {v}")?;
        }
        Ok(())
    }
}

/// Check a spec for structural violations. Report-style: never fails, returns
/// the (possibly empty) list of problems.
///
/// Cosine targets of exactly ±1 are rejected: they force collinear desired
/// shapes, which are degenerate equilibria of the control law.
pub fn validate(spec: &FrameworkSpec) -> ValidationReport {
    let mut violations = Vec::new();
    if spec.n < 3 {
        violations.push(Violation::VertexCountTooSmall { n: spec.n });
    }
    if spec.d != 2 && spec.d != 3 {
        violations.push(Violation::UnsupportedDimension { d: spec.d });
    }
    if spec.constraint_count() == 0 {
        violations.push(Violation::NoConstraints);
    }

    for (pos, &(i, j)) in spec.edges.iter().enumerate() {
        if i >= spec.n || j >= spec.n {
            violations.push(Violation::EdgeIndexOutOfRange { pos });
        } else if i == j {
            violations.push(Violation::EdgeSelfLoop { pos });
        } else if let Some(first) = spec.edges[..pos].iter().position(|&e| e == (i, j)) {
            violations.push(Violation::DuplicateEdge { pos, first });
        }
    }
    for (pos, &(k, i, j)) in spec.angles.iter().enumerate() {
        if k >= spec.n || i >= spec.n || j >= spec.n {
            violations.push(Violation::AngleIndexOutOfRange { pos });
        } else if k == i || k == j || i == j {
            violations.push(Violation::AngleVerticesNotDistinct { pos });
        } else if let Some(first) = spec.angles[..pos].iter().position(|&a| a == (k, i, j)) {
            violations.push(Violation::DuplicateAngle { pos, first });
        }
    }

    if spec.edge_targets.len() != spec.edges.len() {
        violations.push(Violation::TargetCountMismatch {
            kind: "edge",
            constraints: spec.edges.len(),
            targets: spec.edge_targets.len(),
        });
    } else {
        for (pos, &t) in spec.edge_targets.iter().enumerate() {
            if t.is_nan() || t <= 0.0 {
                violations.push(Violation::EdgeTargetNotPositive { pos, value: t });
            }
        }
    }
    if spec.angle_targets.len() != spec.angles.len() {
        violations.push(Violation::TargetCountMismatch {
            kind: "angle",
            constraints: spec.angles.len(),
            targets: spec.angle_targets.len(),
        });
    } else {
        for (pos, &t) in spec.angle_targets.iter().enumerate() {
            if t.is_nan() || t <= -1.0 || t >= 1.0 {
                violations.push(Violation::AngleTargetOutOfRange { pos, value: t });
            }
        }
    }

    ValidationReport { violations }
}

/// A configuration: `n` stacked positions in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    d: usize,
    n: usize,
    p: DVector<f64>,
}

impl Configuration {
    pub fn new(d: usize, p: DVector<f64>) -> Result<Self> {
        if d == 0 || !p.len().is_multiple_of(d) {
            return Err(Error::InvalidArgument(format!(
                "position vector length {} is not a multiple of dimension {d}",
                p.len()
            )));
        }
        let n = p.len() / d;
        Ok(Configuration { d, n, p })
    }

    /// Build from per-agent coordinate rows.
    pub fn from_points(d: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut flat = Vec::with_capacity(points.len() * d);
        for (idx, pt) in points.iter().enumerate() {
            if pt.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "agent {} has {} coordinates, expected {d}",
                    idx + 1,
                    pt.len()
                )));
            }
            flat.extend_from_slice(pt);
        }
        Configuration::new(d, DVector::from_vec(flat))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn positions(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn positions_mut(&mut self) -> &mut DVector<f64> {
        &mut self.p
    }

    pub fn coords(&self) -> &[f64] {
        self.p.as_slice()
    }

    /// Position of agent `i` (0-based).
    pub fn point(&self, i: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.coords()[i * self.d..(i + 1) * self.d])
    }

    /// Relative position `z_ij = p_i - p_j`.
    pub fn rel(&self, i: usize, j: usize) -> DVector<f64> {
        self.point(i) - self.point(j)
    }

    pub fn centroid(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.d);
        for i in 0..self.n {
            c += self.point(i);
        }
        c / self.n as f64
    }

    /// Scale `p^s = sqrt(mean of squared distances to the centroid)`;
    /// conserved by the gradient flow when no distance constraint is present.
    pub fn scale(&self) -> f64 {
        let c = self.centroid();
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += (self.point(i) - &c).norm_squared();
        }
        (acc / self.n as f64).sqrt()
    }

    /// Position matrix `C_p = [p_1 ... p_n]` (d x n).
    pub fn position_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.d, self.n, self.coords())
    }

    /// Columns `p_i - centroid`; its rank is the dimension of the affine span.
    pub fn centered_matrix(&self) -> DMatrix<f64> {
        let c = self.centroid();
        let mut m = self.position_matrix();
        for mut col in m.column_iter_mut() {
            col -= &c;
        }
        m
    }

    pub fn min_pair_distance(&self) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                min = min.min(self.rel(i, j).norm());
            }
        }
        min
    }

    /// Check that every constrained pair is separated by more than `eps` and
    /// all coordinates are finite; this is the domain on which the constraint
    /// map is defined.
    pub fn check_domain(&self, spec: &FrameworkSpec, eps: f64) -> Result<()> {
        if self.d != spec.d() || self.n != spec.n() {
            return Err(Error::InvalidArgument(format!(
                "configuration is {} agents in {}D but the spec expects {} in {}D",
                self.n,
                self.d,
                spec.n(),
                spec.d()
            )));
        }
        if !self.coords().iter().all(|x| x.is_finite()) {
            return Err(Error::DegenerateConfiguration { i: 0, j: 0, dist: f64::NAN, eps });
        }
        for (i, j) in spec.constrained_pairs() {
            let dist = self.rel(i, j).norm();
            if dist.is_nan() || dist <= eps {
                return Err(Error::DegenerateConfiguration { i: i + 1, j: j + 1, dist, eps });
            }
        }
        Ok(())
    }

    pub fn check_domain_default(&self, spec: &FrameworkSpec) -> Result<()> {
        self.check_domain(spec, DEFAULT_EPS_SEP)
    }
}

/// Sensing topology induced by the constraints: agents must measure relative
/// positions of every agent they share a constraint with, including the two
/// legs of any angle at a third apex.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    distance_neighbors: Vec<Vec<usize>>,
    apex_leg_neighbors: Vec<Vec<usize>>,
}

impl SensingGraph {
    /// Sensing edges `E_s`, canonicalized and sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sensing neighbors `N^s_k` of agent `k` (0-based), sorted.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    /// Distance-constraint neighbors `N^d_k`.
    pub fn distance_neighbors(&self, k: usize) -> &[usize] {
        &self.distance_neighbors[k]
    }

    /// Leg vertices of angles whose apex is `k` (`N^a_k`).
    pub fn apex_leg_neighbors(&self, k: usize) -> &[usize] {
        &self.apex_leg_neighbors[k]
    }
}

/// Expand constraints into the sensing graph. Idempotent and independent of
/// the listing order of constraints.
pub fn sensing_graph(spec: &FrameworkSpec) -> Result<SensingGraph> {
    spec.ensure_valid()?;
    let n = spec.n();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let push = |a: usize, b: usize, edges: &mut Vec<(usize, usize)>| {
        edges.push((a.min(b), a.max(b)));
    };
    for &(i, j) in spec.edges() {
        push(i, j, &mut edges);
    }
    for &(k, i, j) in spec.angles() {
        push(k, i, &mut edges);
        push(k, j, &mut edges);
        push(i, j, &mut edges);
    }
    edges.sort_unstable();
    edges.dedup();

    let mut neighbors = vec![Vec::new(); n];
    for &(i, j) in &edges {
        neighbors[i].push(j);
        neighbors[j].push(i);
    }
    let mut distance_neighbors = vec![Vec::new(); n];
    for &(i, j) in spec.edges() {
        distance_neighbors[i].push(j);
        distance_neighbors[j].push(i);
    }
    let mut apex_leg_neighbors = vec![Vec::new(); n];
    for &(k, i, j) in spec.angles() {
        apex_leg_neighbors[k].push(i);
        apex_leg_neighbors[k].push(j);
    }
    for lists in [&mut neighbors, &mut distance_neighbors, &mut apex_leg_neighbors] {
        for l in lists.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
    }

    Ok(SensingGraph { n, edges, neighbors, distance_neighbors, apex_leg_neighbors })
}
