//! Synthetic demonstrations: piecewise minimum-jerk waypoint trajectories.
//!
//! These stand in for recorded joystick demonstrations; each segment is a
//! rest-to-rest minimum-jerk polynomial, so interior waypoints are
//! equilibrium points with zero velocity.

use crate::learning::Demonstration;

/// Minimum-jerk interpolation between rest states: position, velocity and
/// acceleration at normalized time s in [0, 1].
pub fn min_jerk_scalar(y0: f64, y1: f64, s: f64) -> (f64, f64, f64) {
    let s = s.clamp(0.0, 1.0);
    let d = y1 - y0;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let pos = y0 + d * (10.0 * s3 - 15.0 * s4 + 6.0 * s5);
    let vel = d * (30.0 * s2 - 60.0 * s3 + 30.0 * s4);
    let acc = d * (60.0 * s - 180.0 * s2 + 120.0 * s3);
    (pos, vel, acc)
}

/// Single-DOF minimum-jerk demonstration from `y0` to `y1` over
/// `duration` seconds.
pub fn min_jerk_demo(y0: f64, y1: f64, duration: f64, dt: f64) -> Demonstration {
    waypoint_demo(&[(0.0, vec![y0]), (duration, vec![y1])], &["y"], dt)
}

/// Multi-DOF demonstration through waypoints `(time, positions)`. Each
/// inter-waypoint segment is minimum-jerk per DOF; time derivatives are
/// scaled by the segment duration.
pub fn waypoint_demo(waypoints: &[(f64, Vec<f64>)], dof_names: &[&str], dt: f64) -> Demonstration {
    assert!(waypoints.len() >= 2, "need at least two waypoints");
    let n_dofs = dof_names.len();
    let t_end = waypoints.last().unwrap().0;
    let n = (t_end / dt).floor() as usize + 1;
    let mut y = vec![Vec::with_capacity(n); n_dofs];
    let mut ydot = vec![Vec::with_capacity(n); n_dofs];
    let mut yddot = vec![Vec::with_capacity(n); n_dofs];
    for k in 0..n {
        let t = k as f64 * dt;
        let seg = waypoints
            .windows(2)
            .position(|w| t <= w[1].0)
            .unwrap_or(waypoints.len() - 2);
        let (t0, ref p0) = waypoints[seg];
        let (t1, ref p1) = waypoints[seg + 1];
        let dur = t1 - t0;
        let s = ((t - t0) / dur).clamp(0.0, 1.0);
        for d in 0..n_dofs {
            let (p, v, a) = min_jerk_scalar(p0[d], p1[d], s);
            y[d].push(p);
            ydot[d].push(v / dur);
            yddot[d].push(a / (dur * dur));
        }
    }
    Demonstration {
        dt,
        dof_names: dof_names.iter().map(|s| s.to_string()).collect(),
        y,
        ydot: Some(ydot),
        yddot: Some(yddot),
    }
}
