//! Weight extraction from demonstrations and demonstration segmentation.

use crate::dmp::{Phase, PrimitiveKind, PrimitiveParams};
use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::trajectory::Trajectory;

/// Minimum number of demonstration samples.
pub const MIN_SAMPLES: usize = 10;

/// Regularizer scale for the per-basis weighted regression.
pub const REG_SCALE: f64 = 1e-8;

/// A recorded demonstration: positions mandatory, derivatives optional.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub dt: f64,
    pub dof_names: Vec<String>,
    /// Positions, indexed `[dof][sample]`.
    pub y: Vec<Vec<f64>>,
    pub ydot: Option<Vec<Vec<f64>>>,
    pub yddot: Option<Vec<Vec<f64>>>,
}

impl Demonstration {
    pub fn from_positions(dt: f64, dof_names: Vec<String>, y: Vec<Vec<f64>>) -> Self {
        Demonstration {
            dt,
            dof_names,
            y,
            ydot: None,
            yddot: None,
        }
    }

    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Demonstration {
            dt: traj.dt,
            dof_names: traj.dof_names.clone(),
            y: traj.y.clone(),
            ydot: Some(traj.ydot.clone()),
            yddot: Some(traj.yddot.clone()),
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_names.len()
    }

    pub fn len(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        (self.len().saturating_sub(1)) as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 {
            return Err(Error::InvalidTrajectory(format!("dt = {} must be > 0", self.dt)));
        }
        let n = self.len();
        if n < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                len: n,
                min: MIN_SAMPLES,
            });
        }
        for col in &self.y {
            if col.len() != n {
                return Err(Error::LengthMismatch(col.len(), n));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("demonstration"));
            }
        }
        Ok(())
    }

    /// Convert to a full trajectory; derivatives must be present.
    pub fn to_trajectory(&self) -> Result<Trajectory> {
        let ydot = self
            .ydot
            .clone()
            .ok_or_else(|| Error::InvalidTrajectory("missing velocities".into()))?;
        let yddot = self
            .yddot
            .clone()
            .ok_or_else(|| Error::InvalidTrajectory("missing accelerations".into()))?;
        let t = Trajectory {
            dt: self.dt,
            dof_names: self.dof_names.clone(),
            y: self.y.clone(),
            ydot,
            yddot,
        };
        t.validate()?;
        Ok(t)
    }

    /// Resample to a new uniform dt by linear interpolation.
    pub fn resampled(&self, dt: f64) -> Demonstration {
        let duration = self.duration();
        let n_new = (duration / dt).floor() as usize + 1;
        let interp = |col: &[f64]| -> Vec<f64> {
            (0..n_new)
                .map(|k| {
                    let s = (k as f64 * dt) / self.dt;
                    let i = (s.floor() as usize).min(col.len() - 1);
                    if i + 1 >= col.len() {
                        col[col.len() - 1]
                    } else {
                        let frac = s - i as f64;
                        col[i] * (1.0 - frac) + col[i + 1] * frac
                    }
                })
                .collect()
        };
        Demonstration {
            dt,
            dof_names: self.dof_names.clone(),
            y: self.y.iter().map(|c| interp(c)).collect(),
            ydot: self
                .ydot
                .as_ref()
                .map(|a| a.iter().map(|c| interp(c)).collect()),
            yddot: self
                .yddot
                .as_ref()
                .map(|a| a.iter().map(|c| interp(c)).collect()),
        }
    }
}

/// Two segments of a demonstration sharing one boundary sample.
#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub split_index: usize,
    pub first: Demonstration,
    pub second: Demonstration,
}

/// Fill missing velocities and accelerations by central differences
/// (one-sided at the ends). Idempotent when derivatives are present.
pub fn differentiate(demo: &Demonstration) -> Result<Demonstration> {
    demo.validate()?;
    if demo.ydot.is_some() && demo.yddot.is_some() {
        return Ok(demo.clone());
    }
    let n = demo.len();
    let dt = demo.dt;
    let diff = |col: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        out[0] = (col[1] - col[0]) / dt;
        out[n - 1] = (col[n - 1] - col[n - 2]) / dt;
        for k in 1..n - 1 {
            out[k] = (col[k + 1] - col[k - 1]) / (2.0 * dt);
        }
        out
    };
    let ydot: Vec<Vec<f64>> = match &demo.ydot {
        Some(v) => v.clone(),
        None => demo.y.iter().map(|c| diff(c)).collect(),
    };
    let yddot: Vec<Vec<f64>> = match &demo.yddot {
        Some(v) => v.clone(),
        None => ydot.iter().map(|c| diff(c)).collect(),
    };
    Ok(Demonstration {
        dt: demo.dt,
        dof_names: demo.dof_names.clone(),
        y: demo.y.clone(),
        ydot: Some(ydot),
        yddot: Some(yddot),
    })
}

/// Per-sample target forcing values, one row per DOF.
///
/// Integrates the z-subsystem driven by the demonstrated position and
/// returns f_target(t) = tau * ydot_demo(t) - z(t). For the filtered kind
/// the cascade is inverted in closed form instead.
pub fn compute_f_target(demo: &Demonstration, params: &PrimitiveParams) -> Result<Vec<Vec<f64>>> {
    demo.validate()?;
    let ydot = demo
        .ydot
        .as_ref()
        .ok_or_else(|| Error::InvalidTrajectory("demonstration has no velocities".into()))?;
    if demo.n_dofs() != params.n_dofs() {
        return Err(Error::LengthMismatch(demo.n_dofs(), params.n_dofs()));
    }
    let n = demo.len();
    let dt = demo.dt;
    let tau = params.tau;
    let mut out = Vec::with_capacity(demo.n_dofs());
    for d in 0..demo.n_dofs() {
        if ydot[d].len() != n {
            return Err(Error::LengthMismatch(ydot[d].len(), n));
        }
        match params.kind {
            PrimitiveKind::Filtered => {
                // tau^2 yddot + tau (a1+a2) ydot + a1 a2 y = g + f
                let yddot = demo
                    .yddot
                    .as_ref()
                    .ok_or_else(|| Error::InvalidTrajectory("demonstration has no accelerations".into()))?;
                let col: Vec<f64> = (0..n)
                    .map(|k| {
                        tau * tau * yddot[d][k]
                            + tau * (params.a1 + params.a2) * ydot[d][k]
                            + params.a1 * params.a2 * demo.y[d][k]
                            - params.goals[d]
                    })
                    .collect();
                out.push(col);
            }
            PrimitiveKind::Discrete | PrimitiveKind::Rhythmic => {
                let goal = params.goals[d];
                // z-subsystem driven by the demonstrated position; the
                // drive is interpolated with a cubic Hermite so the RK4
                // midpoint stays accurate.
                let y_at = |t: f64| -> f64 {
                    let s = t / dt;
                    let k = (s.floor() as usize).min(n - 2);
                    let u = s - k as f64;
                    let (y0, y1) = (demo.y[d][k], demo.y[d][k + 1]);
                    let (m0, m1) = (ydot[d][k] * dt, ydot[d][k + 1] * dt);
                    let u2 = u * u;
                    let u3 = u2 * u;
                    (2.0 * u3 - 3.0 * u2 + 1.0) * y0
                        + (u3 - 2.0 * u2 + u) * m0
                        + (-2.0 * u3 + 3.0 * u2) * y1
                        + (u3 - u2) * m1
                };
                let zdot = |t: f64, z: f64| -> f64 {
                    params.alpha_z * (params.beta_z * (goal - y_at(t)) - z) / tau
                };
                let integrate = |z0: f64| -> Vec<f64> {
                    let mut z = vec![0.0; n];
                    z[0] = z0;
                    let mut s = [z0];
                    for k in 0..n - 1 {
                        let t = k as f64 * dt;
                        rk4_step(|tt, s, dd| dd[0] = zdot(tt, s[0]), t, &mut s, dt);
                        z[k + 1] = s[0];
                    }
                    z
                };
                let z0 = tau * ydot[d][0];
                let z = if params.kind == PrimitiveKind::Rhythmic {
                    // warm start: one pass through the (periodic) demo
                    // removes the unknown initial forcing transient
                    let warm = integrate(z0);
                    integrate(warm[n - 1])
                } else {
                    integrate(z0)
                };
                out.push((0..n).map(|k| tau * ydot[d][k] - z[k]).collect());
            }
        }
    }
    Ok(out)
}

/// Per-basis locally weighted least squares.
///
/// Discrete/filtered: w_i = sum_t psi_i v f / (sum_t psi_i v^2 + reg).
/// Rhythmic: the same scheme with the 2-vector regressor [r cos, r sin].
/// `f_target` must already be normalized by the spatial amplitude for
/// goal-scaled kinds (the caller divides by g).
pub fn fit_weights(
    f_target: &[f64],
    phase_trace: &[Phase],
    params: &PrimitiveParams,
) -> Result<Vec<f64>> {
    if f_target.len() != phase_trace.len() {
        return Err(Error::LengthMismatch(f_target.len(), phase_trace.len()));
    }
    let n_basis = params.basis.len();
    let activations: Vec<Vec<f64>> = phase_trace
        .iter()
        .map(|p| params.basis_activation(p))
        .collect::<Result<_>>()?;
    match params.kind {
        PrimitiveKind::Discrete | PrimitiveKind::Filtered => {
            let v: Vec<f64> = phase_trace
                .iter()
                .map(|p| match p {
                    Phase::Discrete(c) => c.v,
                    _ => f64::NAN,
                })
                .collect();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParams(
                    "phase trace kind does not match primitive kind".into(),
                ));
            }
            let scale: f64 = v.iter().map(|x| x * x).sum();
            let reg = REG_SCALE * scale.max(f64::MIN_POSITIVE);
            let mut w = vec![0.0; n_basis];
            for i in 0..n_basis {
                let mut num = 0.0;
                let mut den = 0.0;
                for t in 0..f_target.len() {
                    let psi = activations[t][i];
                    num += psi * v[t] * f_target[t];
                    den += psi * v[t] * v[t];
                }
                w[i] = num / (den + reg);
            }
            Ok(w)
        }
        PrimitiveKind::Rhythmic => {
            let scale: f64 = phase_trace
                .iter()
                .map(|p| match p {
                    Phase::Rhythmic(c) => c.r * c.r,
                    _ => f64::NAN,
                })
                .sum();
            if !scale.is_finite() {
                return Err(Error::InvalidParams(
                    "phase trace kind does not match primitive kind".into(),
                ));
            }
            let reg = REG_SCALE * scale.max(f64::MIN_POSITIVE);
            let mut w = vec![0.0; 2 * n_basis];
            for i in 0..n_basis {
                // 2x2 normal equations per basis
                let (mut m11, mut m12, mut m22) = (0.0, 0.0, 0.0);
                let (mut b1, mut b2) = (0.0, 0.0);
                for (t, p) in phase_trace.iter().enumerate() {
                    let c = match p {
                        Phase::Rhythmic(c) => c,
                        _ => unreachable!(),
                    };
                    let (vc, vs) = (c.r * c.phi.cos(), c.r * c.phi.sin());
                    let psi = activations[t][i];
                    m11 += psi * vc * vc;
                    m12 += psi * vc * vs;
                    m22 += psi * vs * vs;
                    b1 += psi * vc * f_target[t];
                    b2 += psi * vs * f_target[t];
                }
                let det = (m11 + reg) * (m22 + reg) - m12 * m12;
                w[2 * i] = ((m22 + reg) * b1 - m12 * b2) / det;
                w[2 * i + 1] = ((m11 + reg) * b2 - m12 * b1) / det;
            }
            Ok(w)
        }
    }
}

/// Learn a primitive from a demonstration: differentiate, invert the
/// transformation system, and fit the basis weights.
///
/// The temporal scale is set from the demonstration duration (discrete:
/// tau = duration; rhythmic: tau = duration / 2pi, treating the
/// demonstration as one period). Goals come from the final sample
/// (discrete) or the per-DOF mean (rhythmic).
pub fn learn(demo: &Demonstration, n_basis: usize, kind: PrimitiveKind) -> Result<PrimitiveParams> {
    let demo = differentiate(demo)?;
    let n = demo.len();
    let duration = demo.duration();
    let mut params = PrimitiveParams::new(kind, demo.dof_names.clone(), n_basis);
    match kind {
        PrimitiveKind::Discrete => {
            params.tau = duration;
            for d in 0..demo.n_dofs() {
                params.goals[d] = demo.y[d][n - 1];
            }
        }
        PrimitiveKind::Rhythmic => {
            params.tau = duration / (2.0 * std::f64::consts::PI);
            let mut amp_sum = 0.0;
            for d in 0..demo.n_dofs() {
                let mean = demo.y[d].iter().sum::<f64>() / n as f64;
                params.goals[d] = mean;
                let amp = demo.y[d]
                    .iter()
                    .map(|y| (y - mean).abs())
                    .fold(0.0f64, f64::max);
                amp_sum += amp;
            }
            params.r0 = (amp_sum / demo.n_dofs() as f64).max(1e-6);
        }
        PrimitiveKind::Filtered => {
            params.tau = duration;
            for d in 0..demo.n_dofs() {
                // steady state of the cascade is g/(a1 a2)
                params.goals[d] = params.a1 * params.a2 * demo.y[d][n - 1];
            }
        }
    }
    for d in 0..demo.n_dofs() {
        params.y_start[d] = demo.y[d][0];
        if matches!(kind, PrimitiveKind::Discrete | PrimitiveKind::Filtered)
            && params.goals[d] == 0.0
        {
            return Err(Error::GoalZero);
        }
    }
    let f_target = compute_f_target(&demo, &params)?;
    let phase_trace = params.canonical_rollout(demo.dt, n)?;
    for d in 0..demo.n_dofs() {
        let target: Vec<f64> = match kind {
            // normalize by the spatial amplitude so weights are
            // goal-invariant
            PrimitiveKind::Discrete | PrimitiveKind::Filtered => f_target[d]
                .iter()
                .map(|f| f / params.goals[d])
                .collect(),
            PrimitiveKind::Rhythmic => f_target[d].clone(),
        };
        params.weights[d] = fit_weights(&target, &phase_trace, &params)?;
    }
    params.validate()?;
    Ok(params)
}

/// Reproduction RMS of a learned primitive against its demonstration,
/// per DOF, normalized by the demonstration range where nonzero.
pub fn reproduction_rms(params: &PrimitiveParams, demo: &Demonstration) -> Result<Vec<f64>> {
    let y0: Vec<f64> = demo.y.iter().map(|c| c[0]).collect();
    let demo_diff = differentiate(demo)?;
    let ydot0: Vec<f64> = demo_diff.ydot.as_ref().unwrap().iter().map(|c| c[0]).collect();
    let roll = params.rollout(&y0, &ydot0, demo.dt, demo.duration())?;
    let n = roll.len().min(demo.len());
    let mut out = Vec::with_capacity(demo.n_dofs());
    for d in 0..demo.n_dofs() {
        let mse: f64 = (0..n)
            .map(|k| {
                let e = roll.y[d][k] - demo.y[d][k];
                e * e
            })
            .sum::<f64>()
            / n as f64;
        let max = demo.y[d].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = demo.y[d].iter().cloned().fold(f64::INFINITY, f64::min);
        let range = max - min;
        out.push(if range > 0.0 { mse.sqrt() / range } else { mse.sqrt() });
    }
    Ok(out)
}

/// Split a demonstration at the global interior maximum of one DOF.
/// Ties break toward the earliest index; a boundary maximum is an error.
pub fn segment_at_peak(demo: &Demonstration, dof: usize) -> Result<SegmentationResult> {
    demo.validate()?;
    let col = &demo.y[dof];
    let n = col.len();
    let mut best = 0usize;
    for (k, v) in col.iter().enumerate() {
        if *v > col[best] {
            best = k;
        }
    }
    if best == 0 || best == n - 1 {
        return Err(Error::BoundaryPeak { dof, index: best });
    }
    let slice = |arrays: &Option<Vec<Vec<f64>>>, lo: usize, hi: usize| {
        arrays
            .as_ref()
            .map(|a| a.iter().map(|c| c[lo..=hi].to_vec()).collect())
    };
    let first = Demonstration {
        dt: demo.dt,
        dof_names: demo.dof_names.clone(),
        y: demo.y.iter().map(|c| c[0..=best].to_vec()).collect(),
        ydot: slice(&demo.ydot, 0, best),
        yddot: slice(&demo.yddot, 0, best),
    };
    let second = Demonstration {
        dt: demo.dt,
        dof_names: demo.dof_names.clone(),
        y: demo.y.iter().map(|c| c[best..n].to_vec()).collect(),
        ydot: slice(&demo.ydot, best, n - 1),
        yddot: slice(&demo.yddot, best, n - 1),
    };
    Ok(SegmentationResult {
        split_index: best,
        first,
        second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::min_jerk_demo;
    use approx::assert_abs_diff_eq;

    fn demo_1dof(dt: f64, y: Vec<f64>) -> Demonstration {
        Demonstration::from_positions(dt, vec!["y".into()], vec![y])
    }

    #[test]
    fn differentiate_constant() {
        let demo = demo_1dof(0.1, vec![2.0; 20]);
        let d = differentiate(&demo).unwrap();
        assert!(d.ydot.unwrap()[0].iter().all(|v| v.abs() < 1e-12));
        assert!(d.yddot.unwrap()[0].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn differentiate_linear_exact_interior() {
        let y: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let d = differentiate(&demo_1dof(0.1, y)).unwrap();
        let ydot = d.ydot.unwrap();
        for k in 1..19 {
            assert_abs_diff_eq!(ydot[0][k], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn differentiate_quadratic_acceleration_exact() {
        let y: Vec<f64> = (0..30).map(|k| {
            let t = k as f64 * 0.1;
            t * t
        }).collect();
        let d = differentiate(&demo_1dof(0.1, y)).unwrap();
        let yddot = d.yddot.unwrap();
        for k in 2..28 {
            assert_abs_diff_eq!(yddot[0][k], 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn differentiate_idempotent() {
        let demo = min_jerk_demo(0.0, 1.0, 1.0, 1e-3);
        let once = differentiate(&demo).unwrap();
        let twice = differentiate(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn differentiate_too_few_samples() {
        let demo = demo_1dof(0.1, vec![0.0, 1.0, 2.0]);
        assert!(matches!(
            differentiate(&demo),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn f_target_zero_for_unforced_rollout() {
        let p = PrimitiveParams::discrete(vec!["y".into()], 10);
        let roll = p.rollout(&[0.0], &[0.0], 1e-3, 2.0).unwrap();
        let demo = Demonstration::from_trajectory(&roll);
        let mut learn_p = p.clone();
        learn_p.tau = p.tau;
        learn_p.goals[0] = *roll.y[0].last().unwrap();
        let ft = compute_f_target(&demo, &learn_p).unwrap();
        let max = ft[0].iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert!(max < 1e-4, "max |f_target| = {}", max);
    }

    #[test]
    fn f_target_constant_demo_is_zero() {
        let mut p = PrimitiveParams::discrete(vec!["y".into()], 10);
        p.goals[0] = 2.0;
        let demo = Demonstration {
            dt: 1e-2,
            dof_names: vec!["y".into()],
            y: vec![vec![2.0; 50]],
            ydot: Some(vec![vec![0.0; 50]]),
            yddot: Some(vec![vec![0.0; 50]]),
        };
        let ft = compute_f_target(&demo, &p).unwrap();
        assert!(ft[0].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn f_target_roundtrip_matches_forcing() {
        // demo produced by a known-weight rollout: f_target must match the
        // forcing evaluated along the same rollout
        let mut p = PrimitiveParams::discrete(vec!["y".into()], 12);
        for (i, w) in p.weights[0].iter_mut().enumerate() {
            *w = ((i as f64) * 0.8).sin() * 3.0;
        }
        let dt = 1e-3;
        let roll = p.rollout(&[0.0], &[0.0], dt, 1.0).unwrap();
        let demo = Demonstration::from_trajectory(&roll);
        let ft = compute_f_target(&demo, &p).unwrap();
        let phases = p.canonical_rollout(dt, roll.len()).unwrap();
        let mut se = 0.0;
        for (k, ph) in phases.iter().enumerate() {
            let f = p.forcing_term(ph, 0).unwrap();
            let e = ft[0][k] - f;
            se += e * e;
        }
        let rms = (se / phases.len() as f64).sqrt();
        assert!(rms < 1e-4, "rms = {}", rms);
    }

    #[test]
    fn fit_weights_zero_target() {
        let p = PrimitiveParams::discrete(vec!["y".into()], 8);
        let phases = p.canonical_rollout(1e-3, 1000).unwrap();
        let w = fit_weights(&vec![0.0; 1000], &phases, &p).unwrap();
        assert!(w.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn fit_weights_single_basis_closed_form() {
        // f_target = 2 v with two very wide bases: both recover w = 2
        let mut p = PrimitiveParams::discrete(vec!["y".into()], 2);
        p.basis.widths = vec![1e-6, 1e-6];
        let phases = p.canonical_rollout(1e-3, 2000).unwrap();
        let target: Vec<f64> = phases
            .iter()
            .map(|ph| match ph {
                Phase::Discrete(c) => 2.0 * c.v,
                _ => unreachable!(),
            })
            .collect();
        let w = fit_weights(&target, &phases, &p).unwrap();
        assert_abs_diff_eq!(w[0], 2.0, epsilon = 1e-4);
        assert_abs_diff_eq!(w[1], 2.0, epsilon = 1e-4);
    }

    #[test]
    fn fit_weights_recovers_constant_weights_exactly() {
        // with constant generator weights the normalized basis mixture is
        // the constant itself, so the per-basis regression is unbiased
        let mut p = PrimitiveParams::discrete(vec!["y".into()], 15);
        let w_star = vec![6.0; 15];
        p.weights[0] = w_star.clone();
        let dt = 1e-3;
        let roll = p.rollout(&[0.0], &[0.0], dt, 1.0).unwrap();
        let demo = Demonstration::from_trajectory(&roll);
        let ft = compute_f_target(&demo, &p).unwrap();
        let phases = p.canonical_rollout(dt, roll.len()).unwrap();
        let target: Vec<f64> = ft[0].iter().map(|f| f / p.goals[0]).collect();
        let w = fit_weights(&target, &phases, &p).unwrap();
        for i in 0..15 {
            assert_abs_diff_eq!(w[i], 6.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn fit_weights_reconstructs_varying_forcing() {
        // per-basis weighted regression is biased where the weights vary
        // across overlapping bases, so individual weights are not
        // recovered; the reconstructed forcing function still is
        let mut p = PrimitiveParams::discrete(vec!["y".into()], 15);
        let w_star: Vec<f64> = (0..15).map(|i| ((i as f64) * 0.5).sin() * 5.0 + 6.0).collect();
        p.weights[0] = w_star.clone();
        let dt = 1e-3;
        let roll = p.rollout(&[0.0], &[0.0], dt, 1.0).unwrap();
        let demo = Demonstration::from_trajectory(&roll);
        let ft = compute_f_target(&demo, &p).unwrap();
        let phases = p.canonical_rollout(dt, roll.len()).unwrap();
        let target: Vec<f64> = ft[0].iter().map(|f| f / p.goals[0]).collect();
        let mut q = p.clone();
        q.weights[0] = fit_weights(&target, &phases, &p).unwrap();
        let mut sq = 0.0;
        let mut peak = 0.0f64;
        for ph in &phases {
            let truth = p.forcing_term(ph, 0).unwrap();
            let fitted = q.forcing_term(ph, 0).unwrap();
            sq += (truth - fitted) * (truth - fitted);
            peak = peak.max(truth.abs());
        }
        let rel = (sq / phases.len() as f64).sqrt() / peak;
        assert!(rel < 0.03, "forcing reconstruction rel rms = {}", rel);
    }

    #[test]
    fn fit_weights_is_the_minimizer() {
        let mut p = PrimitiveParams::discrete(vec!["y".into()], 10);
        for (i, w) in p.weights[0].iter_mut().enumerate() {
            *w = (i as f64).cos() * 2.0;
        }
        let dt = 1e-3;
        let roll = p.rollout(&[0.0], &[0.0], dt, 1.0).unwrap();
        let demo = Demonstration::from_trajectory(&roll);
        let ft = compute_f_target(&demo, &p).unwrap();
        let phases = p.canonical_rollout(dt, roll.len()).unwrap();
        let target: Vec<f64> = ft[0].iter().map(|f| f / p.goals[0]).collect();
        let w = fit_weights(&target, &phases, &p).unwrap();
        let scale: f64 = phases
            .iter()
            .map(|ph| match ph {
                Phase::Discrete(c) => c.v * c.v,
                _ => 0.0,
            })
            .sum();
        let reg = REG_SCALE * scale;
        let cost = |i: usize, wi: f64| -> f64 {
            let mut c = 0.0;
            for (k, ph) in phases.iter().enumerate() {
                let psi = p.basis_activation(ph).unwrap()[i];
                let v = match ph {
                    Phase::Discrete(c) => c.v,
                    _ => 0.0,
                };
                let e = target[k] - wi * v;
                c += psi * e * e;
            }
            c + reg * wi * wi
        };
        for i in 0..10 {
            let c0 = cost(i, w[i]);
            assert!(cost(i, w[i] + 1e-3) >= c0);
            assert!(cost(i, w[i] - 1e-3) >= c0);
        }
    }

    #[test]
    fn learn_min_jerk_reproduces() {
        let demo = min_jerk_demo(0.0, 1.0, 1.0, 1e-3);
        let p = learn(&demo, 50, PrimitiveKind::Discrete).unwrap();
        let rms = reproduction_rms(&p, &demo).unwrap();
        assert!(rms[0] < 0.02, "relative rms = {}", rms[0]);
    }

    #[test]
    fn learn_sine_rhythmic_reproduces() {
        let dt = 1e-3;
        let n = (2.0 * std::f64::consts::PI / dt) as usize + 1;
        let y: Vec<f64> = (0..n).map(|k| (k as f64 * dt).sin()).collect();
        let demo = demo_1dof(dt, y);
        let p = learn(&demo, 50, PrimitiveKind::Rhythmic).unwrap();
        let rms = reproduction_rms(&p, &demo).unwrap();
        assert!(rms[0] < 0.02, "relative rms = {}", rms[0]);
    }

    #[test]
    fn learn_smooth_ramp_reproduces_tightly() {
        // seventh-order rest-to-rest ramp (zero velocity and acceleration
        // at both ends, like a proper demonstration but a different shape
        // from the minimum-jerk demos used elsewhere)
        let dt = 1e-3;
        let n = 1001;
        let y: Vec<f64> = (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                0.5 + s * s * s * s * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s * s * s)
            })
            .collect();
        let demo = demo_1dof(dt, y);
        let p = learn(&demo, 50, PrimitiveKind::Discrete).unwrap();
        let rms = reproduction_rms(&p, &demo).unwrap();
        assert!(rms[0] < 0.02, "relative rms = {}", rms[0]);
    }

    #[test]
    fn learned_primitive_scales_with_goal() {
        let demo = min_jerk_demo(0.0, 2.0, 1.0, 1e-3);
        let p = learn(&demo, 30, PrimitiveKind::Discrete).unwrap();
        let base = p.rollout(&[0.0], &[0.0], 1e-3, 1.0).unwrap();
        let mut p2 = p.clone();
        p2.goals[0] = 3.0; // retarget from 2 to 3
        let scaled = p2.rollout(&[0.0], &[0.0], 1e-3, 1.0).unwrap();
        for k in (0..base.len()).step_by(101) {
            let rel = (scaled.y[0][k] - 1.5 * base.y[0][k]).abs() / (1.0 + base.y[0][k].abs());
            assert!(rel < 1e-6);
        }
    }

    #[test]
    fn segment_symmetric_peak() {
        let n = 101;
        let y: Vec<f64> = (0..n)
            .map(|k| (std::f64::consts::PI * k as f64 / (n - 1) as f64).sin())
            .collect();
        let demo = demo_1dof(0.01, y);
        let seg = segment_at_peak(&demo, 0).unwrap();
        assert_eq!(seg.split_index, 50);
        assert_eq!(seg.first.len(), 51);
        assert_eq!(seg.second.len(), 51);
    }

    #[test]
    fn segment_monotone_errors() {
        let y: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let demo = demo_1dof(0.1, y);
        assert!(matches!(
            segment_at_peak(&demo, 0),
            Err(Error::BoundaryPeak { .. })
        ));
    }

    #[test]
    fn segment_ties_break_early() {
        // brute-force oracle: scan all samples, earliest maximum
        let mut y = vec![0.0; 30];
        y[10] = 5.0;
        y[20] = 5.0;
        let demo = demo_1dof(0.1, y.clone());
        let seg = segment_at_peak(&demo, 0).unwrap();
        let oracle = y
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
                if *v > bv {
                    (i, *v)
                } else {
                    (bi, bv)
                }
            })
            .0;
        assert_eq!(seg.split_index, oracle);
        assert_eq!(seg.split_index, 10);
    }

    #[test]
    fn segments_concatenate_to_original() {
        let demo = min_jerk_demo(0.0, 1.0, 1.0, 1e-2);
        // make an interior peak
        let mut y = demo.y[0].clone();
        let n = y.len();
        for (k, v) in y.iter_mut().enumerate() {
            *v = (std::f64::consts::PI * k as f64 / (n - 1) as f64).sin() * 2.0;
        }
        let demo = demo_1dof(1e-2, y.clone());
        let seg = segment_at_peak(&demo, 0).unwrap();
        let mut rebuilt = seg.first.y[0].clone();
        rebuilt.extend_from_slice(&seg.second.y[0][1..]);
        assert_eq!(rebuilt, y);
    }

}
