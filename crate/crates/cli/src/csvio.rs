//! CSV emission and control-file playback.
//!
//! Every numeric column is printed as `{:.16e}` — 17 significant digits,
//! enough to round-trip an `f64` exactly — with `\n` line endings and a
//! header row.  The files are plain enough that no quoting can ever be
//! needed; the same rigidity is what makes byte-for-byte reproducibility
//! checks meaningful.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use banach_oc::dynamics::{ControlTrajectory, TimeGrid};
use banach_oc::systems::ControlVector;

/// Lossless float formatting for CSV cells.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a header plus pre-rendered rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::with_capacity(64 + rows.len() * (header.len() * 25 + 1));
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Column labels for a control with `m` channels: the constant channel
/// first, then cosine/sine pairs per spatial frequency.
pub fn channel_labels(m: usize) -> Vec<String> {
    (0..m)
        .map(|j| {
            if j == 0 {
                "u0".to_string()
            } else if j % 2 == 1 {
                format!("u{}c", j.div_ceil(2))
            } else {
                format!("u{}s", j / 2)
            }
        })
        .collect()
}

/// Read a stored `control.csv` back onto the run's time grid.
///
/// The file must carry exactly one row per time step whose time column
/// matches the grid node, so a control can only be played back against the
/// `T`/`steps` it was produced with; mismatches are reported with the
/// offending line.
pub fn read_control(path: &Path, grid: TimeGrid, channels: usize) -> Result<ControlTrajectory> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read control file {}", path.display()))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate();

    let Some((_, header)) = lines.next() else {
        bail!("{name}:1: empty control file");
    };
    let head: Vec<&str> = header.split(',').map(str::trim).collect();
    if head.first() != Some(&"t") {
        bail!("{name}:1: expected a header row starting with `t`, got `{header}`");
    }
    if head.len() != channels + 1 {
        bail!(
            "{name}:1: expected 1 + {channels} columns for this system, got {}",
            head.len()
        );
    }

    let mut values: Vec<ControlVector> = Vec::with_capacity(grid.steps());
    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != channels + 1 {
            bail!(
                "{name}:{lineno}: expected 1 + {channels} fields, got {}",
                fields.len()
            );
        }
        let step = values.len();
        if step >= grid.steps() {
            bail!(
                "{name}:{lineno}: more control rows than the {} time steps of this run",
                grid.steps()
            );
        }
        let t: f64 = fields[0]
            .parse()
            .map_err(|_| anyhow!("{name}:{lineno}: `{}` is not a time value", fields[0]))?;
        let expect = grid.node(step);
        if (t - expect).abs() > 1e-9 * expect.abs().max(1.0) {
            bail!(
                "{name}:{lineno}: time {t} does not match grid node {expect} \
                 (row {step}); the control was produced on a different T/steps grid"
            );
        }
        let mut u = Vec::with_capacity(channels);
        for field in &fields[1..] {
            let v: f64 = field
                .parse()
                .map_err(|_| anyhow!("{name}:{lineno}: `{field}` is not a control value"))?;
            if !v.is_finite() {
                bail!("{name}:{lineno}: non-finite control value `{field}`");
            }
            u.push(v);
        }
        values.push(ControlVector(u));
    }
    if values.len() != grid.steps() {
        bail!(
            "{name}: control file has {} data rows, need exactly {} (one per time step)",
            values.len(),
            grid.steps()
        );
    }
    Ok(ControlTrajectory::new(grid, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn formatted_floats_round_trip_exactly() {
        for &v in &[
            0.1,
            -1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            -4.9e-324, // smallest subnormal
            0.0,
            1234.5678901234567,
        ] {
            let s = fmt(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s} -> {back}");
        }
        assert_eq!(fmt(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn channel_labels_follow_constant_cosine_sine_layout() {
        assert_eq!(channel_labels(1), vec!["u0"]);
        assert_eq!(
            channel_labels(7),
            vec!["u0", "u1c", "u1s", "u2c", "u2s", "u3c", "u3s"]
        );
    }

    #[test]
    fn written_control_reads_back_bit_identically() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("control.csv");
        let grid = TimeGrid::new(1.5, 6).unwrap();
        let values: Vec<ControlVector> = (0..6)
            .map(|i| ControlVector(vec![0.1 * i as f64 - 0.25, (i as f64).sin()]))
            .collect();
        let u = ControlTrajectory::new(grid, values).unwrap();

        let labels = channel_labels(2);
        let mut header = vec!["t".to_string()];
        header.extend(labels);
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = (0..6)
            .map(|i| {
                let mut row = vec![fmt(grid.node(i))];
                row.extend(u.at(i).0.iter().map(|v| fmt(*v)));
                row
            })
            .collect();
        write_csv(&path, &header_refs, &rows).unwrap();

        let back = read_control(&path, grid, 2).unwrap();
        assert_eq!(back.sup_distance(&u), 0.0);
    }

    #[test]
    fn reader_reports_line_numbers_for_malformed_rows() {
        let dir = tempdir().unwrap();
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let path = dir.path().join("c.csv");

        fs::write(&path, "t,u0\n0.0e0,1.0e0\n0.5e0\n").unwrap();
        let err = read_control(&path, grid, 1).unwrap_err().to_string();
        assert!(err.contains(":3") && err.contains("fields"), "got: {err}");

        fs::write(&path, "t,u0\n0.0e0,abc\n").unwrap();
        let err = read_control(&path, grid, 1).unwrap_err().to_string();
        assert!(err.contains(":2") && err.contains("abc"), "got: {err}");

        fs::write(&path, "t,u0\n1.0e-1,1.0e0\n").unwrap();
        let err = read_control(&path, grid, 1).unwrap_err().to_string();
        assert!(err.contains("grid node"), "got: {err}");

        fs::write(&path, "t,u0\n0.0e0,1.0e0\n").unwrap();
        let err = read_control(&path, grid, 1).unwrap_err().to_string();
        assert!(err.contains("need exactly 2"), "got: {err}");

        fs::write(&path, "t,u0,u1c\n").unwrap();
        let err = read_control(&path, grid, 1).unwrap_err().to_string();
        assert!(err.contains(":1") && err.contains("columns"), "got: {err}");

        fs::write(&path, "theta,u0\n").unwrap();
        let err = read_control(&path, grid, 1).unwrap_err().to_string();
        assert!(err.contains("starting with `t`"), "got: {err}");
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let err = read_control(Path::new("/no/such/control.csv"), grid, 1)
            .unwrap_err()
            .to_string();
        assert!(err.contains("/no/such/control.csv"), "got: {err}");
    }
}
