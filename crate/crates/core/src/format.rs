//! Plain-text formats: waypoint and sample CSV files, fixed-precision numbers.

use crate::error::{Error, Result};
use crate::spline::{InitialTrajectory, PathSample, WaypointPath};

pub const SIG_DIGITS: usize = 9;
pub const SAMPLE_HEADER: &str = "x,y,theta,kappa";

/// Formats `x` with nine significant digits, trailing zeros dropped.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if !(-5..15).contains(&exp) {
        return sci;
    }
    let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
    let mut s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Numeric rows of a CSV with their 1-based line numbers. Blank lines and `#`
/// comments are skipped. A first line that does not parse as numbers is taken as a
/// header; when `header` is given it must match exactly.
pub fn parse_rows(text: &str, header: Option<&str>) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("non-finite value {v}"),
                    });
                }
                rows.push((line_no, vals));
            }
            Err(e) if seen_content => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: e.to_string(),
                })
            }
            Err(e) => {
                if let Some(h) = header {
                    if line != h {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("expected header `{h}`, found `{line}` ({e})"),
                        });
                    }
                }
            }
        }
        seen_content = true;
    }
    if let Some(first) = rows.first() {
        let width = first.1.len();
        if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != width) {
            return Err(Error::Parse {
                line: *line,
                msg: format!("expected {width} columns, found {}", r.len()),
            });
        }
    }
    Ok(rows)
}

/// What a path CSV holds, decided by its column count.
#[derive(Debug, Clone, PartialEq)]
pub enum PathInput {
    Waypoints(WaypointPath),
    Samples(InitialTrajectory),
}

/// Reads `x,y` waypoints.
pub fn read_waypoints(text: &str) -> Result<WaypointPath> {
    match read_path(text)? {
        PathInput::Waypoints(w) => Ok(w),
        PathInput::Samples(_) => Err(Error::InvalidInput("expected 2 columns (x,y)".into())),
    }
}

/// Two columns are waypoints; four or more are `x,y,theta,kappa` samples.
pub fn read_path(text: &str) -> Result<PathInput> {
    let rows = parse_rows(text, None)?;
    let width = rows.first().map_or(0, |r| r.1.len());
    match width {
        0 => Err(Error::InvalidInput("no data rows".into())),
        2 => WaypointPath::new(rows.into_iter().map(|(_, r)| [r[0], r[1]]).collect()).map(PathInput::Waypoints),
        w if w >= 4 => {
            let samples = rows
                .into_iter()
                .map(|(_, r)| PathSample {
                    x: r[0],
                    y: r[1],
                    theta: r[2],
                    kappa: r[3],
                })
                .collect();
            // pre-sampled input carries no parameter spacing of its own
            InitialTrajectory::new(samples, 0.0).map(PathInput::Samples)
        }
        w => Err(Error::InvalidInput(format!(
            "expected 2 (x,y) or at least 4 (x,y,theta,kappa) columns, found {w}"
        ))),
    }
}

pub fn samples_to_csv(traj: &InitialTrajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 48);
    out.push_str(SAMPLE_HEADER);
    out.push('\n');
    for s in &traj.samples {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(s.x),
            fmt_sig(s.y),
            fmt_sig(s.theta),
            fmt_sig(s.kappa)
        ));
    }
    out
}
