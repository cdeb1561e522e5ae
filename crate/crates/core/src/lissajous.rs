//! The reference Lissajous test curve, sampled analytically in time.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::spline::{InitialTrajectory, PathSample};

/// Length of one period, seconds.
pub const PERIOD: f64 = 100.0;

const AX: f64 = 10.0;
const AY: f64 = 2.0;
const WX: f64 = 3.0 * PI / 50.0;
const WY: f64 = 2.0 * PI / 50.0;

/// Position, velocity and acceleration at time `t`.
pub fn lissajous_derivatives(t: f64) -> [[f64; 2]; 3] {
    let px = WX * t + FRAC_PI_4;
    let py = WY * t;
    [
        [AX * (FRAC_PI_4.cos() - px.cos()), AY * (1.0 - py.cos())],
        [AX * WX * px.sin(), AY * WY * py.sin()],
        [AX * WX * WX * px.cos(), AY * WY * WY * py.cos()],
    ]
}

pub fn lissajous_point(t: f64) -> [f64; 2] {
    lissajous_derivatives(t)[0]
}

/// Samples one period every `resolution` seconds with analytic heading and curvature.
pub fn lissajous_samples(resolution: f64) -> Result<InitialTrajectory> {
    if !(resolution > 0.0 && resolution < PERIOD) {
        return Err(Error::InvalidInput(format!(
            "resolution {resolution} must lie in (0, {PERIOD})"
        )));
    }
    let n = (PERIOD / resolution + 1e-9).floor() as usize + 1;
    let samples = (0..n)
        .map(|i| {
            let t = (i as f64 * resolution).min(PERIOD);
            let [p, d1, d2] = lissajous_derivatives(t);
            let speed2 = d1[0] * d1[0] + d1[1] * d1[1];
            PathSample {
                x: p[0],
                y: p[1],
                theta: d1[1].atan2(d1[0]),
                kappa: (d1[0] * d2[1] - d1[1] * d2[0]).abs() / speed2.powf(1.5),
            }
        })
        .collect();
    InitialTrajectory::new(samples, resolution)
}

/// Chord length over parameter step for each segment of a sampled path.
pub fn chord_speeds(traj: &InitialTrajectory) -> Vec<f64> {
    traj.samples
        .windows(2)
        .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y) / traj.resolution)
        .collect()
}
