//! Uniformly sampled multi-DOF trajectories.

use crate::error::{Error, Result};

/// A uniformly sampled multi-DOF time series of position, velocity and
/// acceleration. Sample `k` is at time `k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Sample interval in seconds.
    pub dt: f64,
    /// One label per DOF.
    pub dof_names: Vec<String>,
    /// Positions, indexed `[dof][sample]`.
    pub y: Vec<Vec<f64>>,
    /// Velocities, indexed `[dof][sample]`.
    pub ydot: Vec<Vec<f64>>,
    /// Accelerations, indexed `[dof][sample]`.
    pub yddot: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn empty(dt: f64, dof_names: Vec<String>) -> Self {
        let n = dof_names.len();
        Trajectory {
            dt,
            dof_names,
            y: vec![Vec::new(); n],
            ydot: vec![Vec::new(); n],
            yddot: vec![Vec::new(); n],
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_names.len()
    }

    /// Number of samples (taken from the first DOF).
    pub fn len(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, sample: usize) -> f64 {
        sample as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        if self.len() < 2 {
            0.0
        } else {
            (self.len() - 1) as f64 * self.dt
        }
    }

    /// Append one sample of (y, ydot, yddot) across all DOFs.
    pub fn push(&mut self, y: &[f64], ydot: &[f64], yddot: &[f64]) {
        for d in 0..self.n_dofs() {
            self.y[d].push(y[d]);
            self.ydot[d].push(ydot[d]);
            self.yddot[d].push(yddot[d]);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 {
            return Err(Error::InvalidTrajectory(format!("dt = {} must be > 0", self.dt)));
        }
        let n = self.len();
        if n < 2 {
            return Err(Error::InvalidTrajectory(format!(
                "{} samples; at least 2 required",
                n
            )));
        }
        for arrays in [&self.y, &self.ydot, &self.yddot] {
            if arrays.len() != self.n_dofs() {
                return Err(Error::InvalidTrajectory(
                    "per-DOF array count does not match dof_names".into(),
                ));
            }
            for col in arrays.iter() {
                if col.len() != n {
                    return Err(Error::LengthMismatch(col.len(), n));
                }
                if col.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("trajectory sample"));
                }
            }
        }
        Ok(())
    }

    pub fn dof_index(&self, name: &str) -> Option<usize> {
        self.dof_names.iter().position(|n| n == name)
    }

    /// Linearly interpolated position of one DOF at time `t` (clamped to
    /// the sampled range).
    pub fn sample_position(&self, dof: usize, t: f64) -> f64 {
        interp(&self.y[dof], self.dt, t)
    }

    pub fn sample_velocity(&self, dof: usize, t: f64) -> f64 {
        interp(&self.ydot[dof], self.dt, t)
    }

    /// Peak-to-peak range of one DOF.
    pub fn range(&self, dof: usize) -> f64 {
        let col = &self.y[dof];
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// RMS of the position difference against another trajectory, per DOF.
    /// Compares over the shorter of the two lengths.
    pub fn rms_position_error(&self, other: &Trajectory) -> Vec<f64> {
        let n = self.len().min(other.len());
        (0..self.n_dofs())
            .map(|d| {
                let s: f64 = (0..n)
                    .map(|k| {
                        let e = self.y[d][k] - other.y[d][k];
                        e * e
                    })
                    .sum();
                (s / n as f64).sqrt()
            })
            .collect()
    }
}

fn interp(col: &[f64], dt: f64, t: f64) -> f64 {
    if col.is_empty() {
        return f64::NAN;
    }
    let s = t / dt;
    if s <= 0.0 {
        return col[0];
    }
    let last = col.len() - 1;
    if s >= last as f64 {
        return col[last];
    }
    let k = s.floor() as usize;
    let frac = s - k as f64;
    col[k] * (1.0 - frac) + col[k + 1] * frac
}
