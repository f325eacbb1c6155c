//! Trace serialization: CSV emission for positions, errors and monitors, the
//! run summary, and extraction of gnuplot-ready data files.
//!
//! Floats are emitted with 17 significant digits so that written traces
//! round-trip bit-exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{SimulationTrace, TerminalFlag};
use crate::{Error, Result};

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const POSITIONS_FILE: &str = "positions.csv";
pub const ERRORS_FILE: &str = "errors.csv";
pub const MONITORS_FILE: &str = "monitors.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Long-format positions: one row per (snapshot, agent), agents 1-based.
pub fn write_positions_csv<W: Write>(trace: &SimulationTrace, mut out: W) -> Result<()> {
    let header = match trace.d {
        2 => "t,agent,x,y",
        _ => "t,agent,x,y,z",
    };
    writeln!(out, "{header}")?;
    for (t, p) in trace.times.iter().zip(&trace.positions) {
        for agent in 0..trace.n {
            let mut row = format!("{},{}", fmt_f64(*t), agent + 1);
            for c in 0..trace.d {
                row.push(',');
                row.push_str(&fmt_f64(p[agent * trace.d + c]));
            }
            writeln!(out, "{row}")?;
        }
    }
    Ok(())
}

/// Per-constraint error series; constraint ids are 1-based in combined order
/// (distances then angles).
pub fn write_errors_csv<W: Write>(trace: &SimulationTrace, mut out: W) -> Result<()> {
    writeln!(out, "t,constraint_id,error")?;
    for (t, e) in trace.times.iter().zip(&trace.errors) {
        for (idx, value) in e.iter().enumerate() {
            writeln!(out, "{},{},{}", fmt_f64(*t), idx + 1, fmt_f64(*value))?;
        }
    }
    Ok(())
}

pub fn write_monitors_csv<W: Write>(trace: &SimulationTrace, mut out: W) -> Result<()> {
    let centroid_cols = match trace.d {
        2 => "centroid_x,centroid_y",
        _ => "centroid_x,centroid_y,centroid_z",
    };
    writeln!(out, "t,{centroid_cols},scale,cp_rank,cp_rank_raw,rw_rank,min_pair_dist")?;
    for (t, m) in trace.times.iter().zip(&trace.monitors) {
        let mut row = fmt_f64(*t);
        for c in &m.centroid {
            row.push(',');
            row.push_str(&fmt_f64(*c));
        }
        writeln!(
            out,
            "{row},{},{},{},{},{}",
            fmt_f64(m.scale),
            m.cp_rank,
            m.cp_rank_raw,
            m.rw_rank,
            fmt_f64(m.min_pair_dist)
        )?;
    }
    Ok(())
}

/// Machine-readable run summary written next to the trace CSVs. Everything
/// except `wall_time` is deterministic for a given scenario and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub flag: TerminalFlag,
    pub final_err: f64,
    pub t_end: f64,
    pub steps: usize,
    pub slope_log_err: Option<f64>,
    pub r_squared: Option<f64>,
    pub wall_time: f64,
}

/// Write the three trace CSVs into `dir`, creating it if needed.
pub fn write_trace_dir(trace: &SimulationTrace, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_positions_csv(trace, fs::File::create(dir.join(POSITIONS_FILE))?)?;
    write_errors_csv(trace, fs::File::create(dir.join(ERRORS_FILE))?)?;
    write_monitors_csv(trace, fs::File::create(dir.join(MONITORS_FILE))?)?;
    Ok(())
}

fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    field.parse().map_err(|_| {
        Error::Parse(format!("{}:{}: expected a float, got `{field}`", path.display(), line))
    })
}

/// Per-agent trajectories read back from a positions CSV, in file order.
pub struct PositionSeries {
    pub d: usize,
    /// `series[agent]` is the list of (t, coords) rows for that agent.
    pub series: Vec<Vec<(f64, Vec<f64>)>>,
}

pub fn read_positions_csv(path: &Path) -> Result<PositionSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let d = header.split(',').count() - 2;
    if !(d == 2 || d == 3) {
        return Err(Error::Parse(format!(
            "{}: unexpected header `{header}`",
            path.display()
        )));
    }
    let mut series: Vec<Vec<(f64, Vec<f64>)>> = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 2 {
            return Err(Error::Parse(format!(
                "{}:{}: expected {} fields, got {}",
                path.display(),
                line_no + 1,
                d + 2,
                fields.len()
            )));
        }
        let t = parse_f64(fields[0], path, line_no + 1)?;
        let agent: usize = fields[1].parse().map_err(|_| {
            Error::Parse(format!("{}:{}: bad agent id `{}`", path.display(), line_no + 1, fields[1]))
        })?;
        let coords = fields[2..]
            .iter()
            .map(|f| parse_f64(f, path, line_no + 1))
            .collect::<Result<Vec<f64>>>()?;
        while series.len() < agent {
            series.push(Vec::new());
        }
        series[agent - 1].push((t, coords));
    }
    Ok(PositionSeries { d, series })
}

/// Per-constraint error series read back from an errors CSV.
pub fn read_errors_csv(path: &Path) -> Result<Vec<Vec<(f64, f64)>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut series: Vec<Vec<(f64, f64)>> = Vec::new();
    for (line_no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "{}:{}: expected 3 fields, got {}",
                path.display(),
                line_no + 1,
                fields.len()
            )));
        }
        let t = parse_f64(fields[0], path, line_no + 1)?;
        let id: usize = fields[1].parse().map_err(|_| {
            Error::Parse(format!(
                "{}:{}: bad constraint id `{}`",
                path.display(),
                line_no + 1,
                fields[1]
            ))
        })?;
        let value = parse_f64(fields[2], path, line_no + 1)?;
        while series.len() < id {
            series.push(Vec::new());
        }
        series[id - 1].push((t, value));
    }
    Ok(series)
}

/// Files produced by [`plotdata`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub trajectory_files: Vec<PathBuf>,
    pub error_files: Vec<PathBuf>,
    pub script: PathBuf,
}

/// Turn a trace directory into gnuplot-ready data: one trajectory file per
/// agent (`t x y [z]`), one error series per constraint (`t error |error|`),
/// and a driver script.
pub fn plotdata(trace_dir: &Path, out_dir: &Path) -> Result<PlotData> {
    let positions_path = trace_dir.join(POSITIONS_FILE);
    let errors_path = trace_dir.join(ERRORS_FILE);
    if !positions_path.exists() || !errors_path.exists() {
        return Err(Error::Io(format!(
            "trace files not found under {}",
            trace_dir.display()
        )));
    }
    let positions = read_positions_csv(&positions_path)?;
    let errors = read_errors_csv(&errors_path)?;
    fs::create_dir_all(out_dir)?;

    let mut trajectory_files = Vec::new();
    for (agent, rows) in positions.series.iter().enumerate() {
        let file = out_dir.join(format!("agent_{}.dat", agent + 1));
        let mut out = fs::File::create(&file)?;
        for (t, coords) in rows {
            let mut row = fmt_f64(*t);
            for c in coords {
                row.push(' ');
                row.push_str(&fmt_f64(*c));
            }
            writeln!(out, "{row}")?;
        }
        trajectory_files.push(file);
    }

    let mut error_files = Vec::new();
    for (id, rows) in errors.iter().enumerate() {
        let file = out_dir.join(format!("error_{}.dat", id + 1));
        let mut out = fs::File::create(&file)?;
        for (t, value) in rows {
            writeln!(out, "{} {} {}", fmt_f64(*t), fmt_f64(*value), fmt_f64(value.abs()))?;
        }
        error_files.push(file);
    }

    let script = out_dir.join("plot.gp");
    let mut out = fs::File::create(&script)?;
    writeln!(out, "# gnuplot driver for trajectory and error plots")?;
    writeln!(out, "set terminal pngcairo size 900,700")?;
    writeln!(out, "set output 'trajectories.png'")?;
    writeln!(out, "set size ratio -1")?;
    let traj_plots: Vec<String> = (0..trajectory_files.len())
        .map(|a| format!("'agent_{}.dat' using 2:3 with lines title 'agent {}'", a + 1, a + 1))
        .collect();
    writeln!(out, "plot {}", traj_plots.join(", \\\n     "))?;
    writeln!(out, "set output 'errors.png'")?;
    writeln!(out, "set logscale y")?;
    writeln!(out, "set size noratio")?;
    let err_plots: Vec<String> = (0..error_files.len())
        .map(|i| format!("'error_{}.dat' using 1:3 with lines title 'e_{}'", i + 1, i + 1))
        .collect();
    writeln!(out, "plot {}", err_plots.join(", \\\n     "))?;

    Ok(PlotData { trajectory_files, error_files, script })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, SimConfig};
    use crate::graph::{Configuration, FrameworkSpec};

    fn short_trace() -> SimulationTrace {
        let spec = FrameworkSpec::from_one_based(
            3,
            2,
            &[(1, 2)],
            &[100.0],
            &[(1, 2, 3), (3, 1, 2)],
            &[0.5, 0.5],
        );
        let cfg0 = Configuration::from_points(
            2,
            &[vec![-3.0, 1.0], vec![7.5, -2.0], vec![2.0, 9.0]],
        )
        .unwrap();
        let sim = SimConfig { dt: 1e-3, t_max: 0.05, record_every: 10, ..SimConfig::default() };
        simulate(&spec, &cfg0, &sim).unwrap()
    }

    #[test]
    fn floats_round_trip_through_formatting() {
        for &x in &[1.0, -0.1, 1.0 / 3.0, 6.02e23, -2.2250738585072014e-308, 0.0] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s}");
        }
    }

    #[test]
    fn csv_round_trip_and_plotdata() {
        let trace = short_trace();
        let dir = tempfile::tempdir().unwrap();
        write_trace_dir(&trace, dir.path()).unwrap();

        let positions = read_positions_csv(&dir.path().join(POSITIONS_FILE)).unwrap();
        assert_eq!(positions.d, 2);
        assert_eq!(positions.series.len(), 3);
        assert_eq!(positions.series[0].len(), trace.len());
        assert_eq!(positions.series[2][0].1[0], trace.positions[0][4]);

        let errors = read_errors_csv(&dir.path().join(ERRORS_FILE)).unwrap();
        assert_eq!(errors.len(), 3);
        assert_eq!(errors[1][0].1, trace.errors[0][1]);

        let out = dir.path().join("plot");
        let plot = plotdata(dir.path(), &out).unwrap();
        assert_eq!(plot.trajectory_files.len(), 3);
        assert_eq!(plot.error_files.len(), 3);
        assert!(plot.script.exists());
    }

    #[test]
    fn plotdata_requires_trace_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            plotdata(dir.path(), &dir.path().join("out")),
            Err(Error::Io(_))
        ));
    }
}
