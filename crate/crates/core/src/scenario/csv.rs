//! Trajectory files: one row per particle per grid time, and a summary file
//! with one row per grid time.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::ScenarioError;
use crate::ot::ParticleCloud;
use crate::trajectory::{StageCost, TrajectoryRecord};

/// 17 significant digits: enough to round-trip any `f64`.
pub(crate) fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// `dir/name.csv` → `dir/name_summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
    path.with_file_name(format!("{stem}_summary.csv"))
}

fn write(path: &Path, text: &str) -> Result<(), ScenarioError> {
    fs::write(path, text).map_err(|e| ScenarioError::io(path, e))
}

/// Writes the particle file at `path` and the summary next to it.
pub fn emit_trajectory(traj: &TrajectoryRecord<f64>, path: &Path) -> Result<(), ScenarioError> {
    let dim = traj.dim();
    let mut out = String::from("t,particle_id");
    for d in 1..=dim {
        write!(out, ",x{d}").unwrap();
    }
    for d in 1..=dim {
        write!(out, ",v{d}").unwrap();
    }
    out.push_str(",weight\n");
    for ((&t, cloud), v) in traj.times().iter().zip(traj.clouds()).zip(traj.velocities()) {
        let t = fmt(t);
        for (i, (x, w)) in cloud.iter().enumerate() {
            write!(out, "{t},{i}").unwrap();
            for &c in x.iter().chain(&v[i * dim..(i + 1) * dim]) {
                write!(out, ",{}", fmt(c)).unwrap();
            }
            writeln!(out, ",{}", fmt(w)).unwrap();
        }
    }
    write(path, &out)?;

    let mut summary = String::from("t,assignment_cost,motion_cost,cumulative_cost\n");
    for ((&t, s), c) in traj.times().iter().zip(traj.stage_costs()).zip(traj.cumulative_costs()) {
        writeln!(summary, "{},{},{},{}", fmt(t), fmt(s.assignment), fmt(s.motion), fmt(c)).unwrap();
    }
    write(&summary_path(path), &summary)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        column: 0,
        message: format!("{}: {}", path.display(), message.into()),
    }
}

/// Header fields and numbered data rows.
type Table = (Vec<String>, Vec<(usize, Vec<f64>)>);

fn read_rows(path: &Path) -> Result<Table, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?
        .1
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| parse_err(path, n + 1, e.to_string()))?;
        if values.len() != header.len() {
            return Err(parse_err(
                path,
                n + 1,
                format!("expected {} fields, found {}", header.len(), values.len()),
            ));
        }
        rows.push((n + 1, values));
    }
    Ok((header, rows))
}

/// Reads back a trajectory written by [`emit_trajectory`].
pub fn read_trajectory(path: &Path) -> Result<TrajectoryRecord<f64>, ScenarioError> {
    let (header, rows) = read_rows(path)?;
    let dim = header.iter().filter(|h| h.starts_with('x')).count();
    if dim == 0 || header.len() != 3 + 2 * dim {
        return Err(parse_err(path, 1, "unrecognized particle header"));
    }
    let mut times: Vec<f64> = Vec::new();
    let mut clouds = Vec::new();
    let mut velocities = Vec::new();
    let mut points = Vec::new();
    let mut vel = Vec::new();
    let mut weights = Vec::new();
    let mut flush = |points: &mut Vec<f64>, vel: &mut Vec<f64>, weights: &mut Vec<f64>| {
        clouds.push(ParticleCloud::new(dim, std::mem::take(points), std::mem::take(weights)));
        velocities.push(std::mem::take(vel));
    };
    for (line, row) in &rows {
        let t = row[0];
        if times.last() != Some(&t) {
            if !times.is_empty() {
                flush(&mut points, &mut vel, &mut weights);
            }
            times.push(t);
        }
        if row[1] as usize != weights.len() {
            return Err(parse_err(
                path,
                *line,
                "particle ids must run 0, 1, 2, … within each time",
            ));
        }
        points.extend_from_slice(&row[2..2 + dim]);
        vel.extend_from_slice(&row[2 + dim..2 + 2 * dim]);
        weights.push(row[2 + 2 * dim]);
    }
    if !times.is_empty() {
        flush(&mut points, &mut vel, &mut weights);
    }
    let clouds = clouds.into_iter().collect::<Result<Vec<_>, _>>()?;

    let summary = summary_path(path);
    let (sheader, srows) = read_rows(&summary)?;
    if sheader.len() != 4 {
        return Err(parse_err(&summary, 1, "unrecognized summary header"));
    }
    if srows.len() != times.len() {
        return Err(parse_err(
            &summary,
            1,
            format!("{} summary rows for {} grid times", srows.len(), times.len()),
        ));
    }
    let stage_costs = srows
        .iter()
        .map(|(_, r)| StageCost {
            assignment: r[1],
            motion: r[2],
        })
        .collect();
    Ok(TrajectoryRecord::new(times, clouds, velocities, stage_costs)?)
}
