//! Shared fixtures for the integration suites: seeded random frameworks with
//! realizable targets, reference frameworks, and small geometry
//! helpers.
//!
//! Each test target compiles its own copy, so not every helper is used
//! everywhere.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use weakrig::graph::{validate, Configuration, FrameworkSpec};
use weakrig::rigidity::{eval_fw, sample_configuration};

/// Draw a valid random framework: 3..=6 vertices, a mix of edge and angle
/// constraints (about a third with no edges at all), targets taken from an
/// independently sampled realization so they are always admissible.
pub fn random_framework<R: Rng>(rng: &mut R, d: usize) -> (FrameworkSpec, Configuration) {
    loop {
        let n = rng.random_range(3..=6);
        let e_empty = rng.random_range(0..3) == 0;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        if !e_empty {
            let m = rng.random_range(1..=4usize.min(n * (n - 1) / 2));
            while edges.len() < m {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i == j {
                    continue;
                }
                let e = (i.min(j), i.max(j));
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
        let w = rng.random_range(1..=5);
        let mut angles: Vec<(usize, usize, usize)> = Vec::new();
        let mut guard = 0;
        while angles.len() < w && guard < 200 {
            guard += 1;
            let k = rng.random_range(0..n);
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if k == i || k == j || i == j {
                continue;
            }
            let a = (k, i.min(j), i.max(j));
            if !angles.contains(&a) {
                angles.push(a);
            }
        }
        if angles.is_empty() {
            continue;
        }

        let proto = FrameworkSpec::new(
            n,
            d,
            edges.clone(),
            vec![1.0; edges.len()],
            angles.clone(),
            vec![0.0; angles.len()],
        );
        if !validate(&proto).is_ok() {
            continue;
        }
        let (edge_targets, angle_targets) = loop {
            let target_cfg = sample_configuration(&proto, rng, 10.0);
            let f = eval_fw(&proto, &target_cfg).expect("sampled configuration is in the domain");
            let m = edges.len();
            let et: Vec<f64> = (0..m).map(|g| f[g]).collect();
            let at: Vec<f64> = (m..f.len()).map(|h| f[h]).collect();
            if at.iter().all(|c| c.abs() < 0.99) {
                break (et, at);
            }
        };
        let spec = FrameworkSpec::new(n, d, edges, edge_targets, angles, angle_targets);
        let cfg = sample_configuration(&spec, rng, 10.0);
        return (spec, cfg);
    }
}

/// 3-agent framework with one distance constraint (squared length 100) and
/// two 60-degree base angles.
pub fn shared_edge_triangle_spec() -> FrameworkSpec {
    FrameworkSpec::from_one_based(
        3,
        2,
        &[(1, 2)],
        &[100.0],
        &[(1, 2, 3), (3, 1, 2)],
        &[0.5, 0.5],
    )
}

/// 6-agent framework: one distance constraint and eight angles whose targets
/// are realized by a regular hexagon of side sqrt(20).
pub fn hexagon_spec() -> FrameworkSpec {
    let c30 = (30.0f64).to_radians().cos();
    FrameworkSpec::from_one_based(
        6,
        2,
        &[(1, 2)],
        &[20.0],
        &[
            (1, 2, 6),
            (3, 2, 4),
            (5, 4, 6),
            (2, 4, 6),
            (6, 2, 4),
            (2, 1, 6),
            (4, 2, 3),
            (4, 5, 6),
        ],
        &[-0.5, -0.5, -0.5, 0.5, 0.5, c30, c30, c30],
    )
}

/// Regular hexagon realizing [`hexagon_spec`], vertex 1 on the x-axis.
pub fn hexagon_realization() -> Configuration {
    let r = 20.0f64.sqrt();
    let pts: Vec<Vec<f64>> = (0..6)
        .map(|i| {
            let phi = (60.0 * i as f64).to_radians();
            vec![r * phi.cos(), r * phi.sin()]
        })
        .collect();
    Configuration::from_points(2, &pts).expect("hexagon coordinates")
}

/// 5-agent pure-angle framework in 3D: eight 60-degree constraints realized
/// by a triangular bipyramid with all nine edges equal.
pub fn bipyramid_spec() -> FrameworkSpec {
    FrameworkSpec::from_one_based(
        5,
        3,
        &[],
        &[],
        &[
            (1, 2, 3),
            (2, 1, 3),
            (1, 3, 4),
            (3, 1, 4),
            (2, 3, 5),
            (5, 2, 4),
            (5, 3, 4),
            (4, 3, 5),
        ],
        &[0.5; 8],
    )
}

/// Bipyramid realization of side `s`, apexes 1 and 5.
pub fn bipyramid_realization(s: f64) -> Configuration {
    let r = s / 3.0f64.sqrt();
    let h = s * (2.0f64 / 3.0).sqrt();
    let ang = |deg: f64| deg.to_radians();
    Configuration::from_points(
        3,
        &[
            vec![0.0, 0.0, h],
            vec![r * ang(90.0).cos(), r * ang(90.0).sin(), 0.0],
            vec![r * ang(210.0).cos(), r * ang(210.0).sin(), 0.0],
            vec![r * ang(330.0).cos(), r * ang(330.0).sin(), 0.0],
            vec![0.0, 0.0, -h],
        ],
    )
    .expect("bipyramid coordinates")
}

/// Path of a bundled scenario file.
pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

/// Rotation matrix whose first row is the direction of `v`, so that
/// `R v = (|v|, 0, ...)`.
pub fn align_first_axis(v: &DVector<f64>) -> DMatrix<f64> {
    let d = v.len();
    let a = v / v.norm();
    match d {
        2 => DMatrix::from_row_slice(2, 2, &[a[0], a[1], -a[1], a[0]]),
        3 => {
            // Any unit vector not parallel to `a` seeds the orthonormal frame.
            let pick = if a[0].abs() < 0.9 {
                DVector::from_column_slice(&[1.0, 0.0, 0.0])
            } else {
                DVector::from_column_slice(&[0.0, 1.0, 0.0])
            };
            let mut b = &pick - &a * a.dot(&pick);
            b /= b.norm();
            let c = DVector::from_column_slice(&[
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ]);
            DMatrix::from_row_slice(
                3,
                3,
                &[a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2]],
            )
        }
        _ => panic!("alignment defined for d = 2, 3"),
    }
}

/// Uniform per-coordinate perturbation of a configuration.
pub fn perturb<R: Rng>(cfg: &Configuration, rng: &mut R, amplitude: f64) -> Configuration {
    let mut p = cfg.positions().clone();
    for c in 0..p.len() {
        p[c] += rng.random_range(-amplitude..amplitude);
    }
    Configuration::new(cfg.d(), p).expect("same shape")
}
