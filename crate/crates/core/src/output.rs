//! Result files: norm series, field snapshots, the norm table and the
//! convergence bound summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::simulation::{FieldState, NormRecord, SimulationResult};
use crate::stability::StabilityReport;

/// Rounds away the accumulated error of `step * dt` before printing a time.
fn clean_time(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_t{}.csv", clean_time(t))
}

/// `t,norm_u,norm_v`, one row per time level.
pub fn write_norms_csv<W: Write>(series: &[NormRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,norm_u,norm_v")?;
    for r in series {
        writeln!(
            out,
            "{},{:.16e},{:.16e}",
            clean_time(r.t),
            r.norm_u,
            r.norm_v
        )?;
    }
    out.flush()
}

/// `x,y,u,v`, one row per node.
pub fn write_snapshot_csv<W: Write>(
    cloud: &PointCloud,
    state: &FieldState,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "x,y,u,v")?;
    for (j, node) in cloud.nodes().iter().enumerate() {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            node.x, node.y, state.u[j], state.v[j]
        )?;
    }
    out.flush()
}

/// Norm table with one column per report time, followed by the same values
/// with one row per report time. Missing times print as `-`.
pub fn write_report<W: Write>(
    title: &str,
    rows: &[(f64, Option<NormRecord>)],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{title}")?;
    writeln!(out)?;
    write!(out, "{:<10}", "T(t)")?;
    for (t, _) in rows {
        write!(out, " {:>12}", clean_time(*t))?;
    }
    writeln!(out)?;
    let cell = |r: &Option<NormRecord>, pick: fn(&NormRecord) -> f64| match r {
        Some(r) => format!("{:.4e}", pick(r)),
        None => "-".to_string(),
    };
    for (label, pick) in [
        (
            "||U-1||",
            (|r: &NormRecord| r.norm_u) as fn(&NormRecord) -> f64,
        ),
        ("||V-1||", |r: &NormRecord| r.norm_v),
    ] {
        write!(out, "{label:<10}")?;
        for (_, r) in rows {
            write!(out, " {:>12}", cell(r, pick))?;
        }
        writeln!(out)?;
    }
    writeln!(out)?;
    writeln!(out, "{:>10} {:>12} {:>12}", "t", "||U-1||", "||V-1||")?;
    for (t, r) in rows {
        writeln!(
            out,
            "{:>10} {:>12} {:>12}",
            clean_time(*t),
            cell(r, |r| r.norm_u),
            cell(r, |r| r.norm_v)
        )?;
    }
    out.flush()
}

/// Global bound, the worst node and whether `dt` satisfies the bound.
pub fn write_stability_summary<W: Write>(
    report: &StabilityReport,
    dt: f64,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "global_bound = {:.6e}", report.global_bound)?;
    writeln!(out, "worst_node = {}", report.worst_node)?;
    writeln!(out, "dt = {dt}")?;
    writeln!(out, "satisfied = {}", report.admits(dt))?;
    out.flush()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_file<F>(path: PathBuf, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(&path)?;
    body(&mut w).map_err(|e| Error::io(&path, e))
}

/// Writes `norms.csv`, one snapshot file per snapshot, `report.txt` and,
/// when a bound was computed, `stability.txt`.
pub fn write_run_outputs(
    dir: &Path,
    title: &str,
    cloud: &PointCloud,
    result: &SimulationResult,
    report_times: &[f64],
    dt: f64,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir.join("norms.csv"), |w| {
        write_norms_csv(&result.series, w)
    })?;
    for snap in &result.snapshots {
        write_file(dir.join(snapshot_file_name(snap.time)), |w| {
            write_snapshot_csv(cloud, &snap.state, w)
        })?;
    }
    let rows: Vec<(f64, Option<NormRecord>)> = report_times
        .iter()
        .map(|&t| (t, result.record_at(t, dt)))
        .collect();
    write_file(dir.join("report.txt"), |w| write_report(title, &rows, w))?;
    if let Some(report) = &result.initial_stability {
        write_file(dir.join("stability.txt"), |w| {
            writeln!(w, "convergence bound at t = 0")?;
            write_stability_summary(report, dt, w)
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{generate_regular_cloud, Domain};

    fn rec(step: usize, t: f64, u: f64, v: f64) -> NormRecord {
        NormRecord {
            step,
            t,
            norm_u: u,
            norm_v: v,
        }
    }

    #[test]
    fn norms_csv_schema() {
        let mut buf = Vec::new();
        write_norms_csv(
            &[rec(0, 0.0, 1.0, 0.5), rec(1, 3.0 * 0.001, 0.25, 0.125)],
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,norm_u,norm_v");
        assert_eq!(lines[1], "0,1.0000000000000000e0,5.0000000000000000e-1");
        assert!(lines[2].starts_with("0.003,"));
    }

    #[test]
    fn snapshot_schema_and_name() {
        let c = generate_regular_cloud(3, 3, Domain::unit_square()).unwrap();
        let st = FieldState {
            u: vec![1.0; 9],
            v: vec![2.0; 9],
            time: 0.0,
            step: 0,
        };
        let mut buf = Vec::new();
        write_snapshot_csv(&c, &st, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert_eq!(text.lines().next(), Some("x,y,u,v"));
        assert_eq!(snapshot_file_name(0.05), "snapshot_t0.05.csv");
        assert_eq!(snapshot_file_name(5.0), "snapshot_t5.csv");
    }

    #[test]
    fn report_layout() {
        let times = [0.05, 0.1, 0.5, 1.0, 5.0];
        let rows: Vec<_> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                (
                    t,
                    if i < 4 {
                        Some(rec(i, t, 0.1, 0.2))
                    } else {
                        None
                    },
                )
            })
            .collect();
        let mut buf = Vec::new();
        write_report("example1", &rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().find(|l| l.starts_with("T(t)")).unwrap();
        assert_eq!(header.split_whitespace().count(), 6);
        let u_row = text.lines().find(|l| l.starts_with("||U-1||")).unwrap();
        assert_eq!(u_row.split_whitespace().last(), Some("-"));
        let per_time = text
            .lines()
            .skip_while(|l| !l.trim_start().starts_with("t "))
            .skip(1)
            .count();
        assert_eq!(per_time, 5);
    }
}
