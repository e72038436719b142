//! Discrete, rhythmic and filtered movement-primitive dynamics.
//!
//! A primitive is a second-order transformation system per DOF, driven by
//! a shared canonical system through a learned forcing term. The discrete
//! canonical system is integrated in normalized form (goal 1), so its
//! position is exactly the normalized phase x/g used by the basis
//! functions; the per-DOF goal enters the forcing as a spatial amplitude,
//! which is what makes goal retargeting a pure rescaling.

use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};

/// Floor on the basis activation normalizer.
pub const NORMALIZER_FLOOR: f64 = 1e-10;

/// Default number of basis functions.
pub const DEFAULT_N_BASIS: usize = 50;

/// Default integration step in seconds.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    /// Point-to-point movement with a monotone canonical phase.
    Discrete,
    /// Periodic movement with an oscillator phase.
    Rhythmic,
    /// Cascade of two first-order filters driven by the discrete phase.
    Filtered,
}

/// Gaussian (discrete) or von-Mises-like (rhythmic) basis functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    /// Phase locations: normalized phase for discrete, radians for rhythmic.
    pub centers: Vec<f64>,
    /// Positive concentration parameters.
    pub widths: Vec<f64>,
}

impl BasisSet {
    /// Centers equally spaced in [0, 1]; width 1/(c_{i+1}-c_i)^2, the last
    /// copying its neighbor.
    pub fn discrete(n: usize) -> Self {
        assert!(n >= 2, "basis count must be >= 2");
        let centers: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let dc = centers[1] - centers[0];
        let w = 1.0 / (dc * dc);
        BasisSet {
            centers,
            widths: vec![w; n],
        }
    }

    /// Centers equally spaced in [0, 2pi); widths chosen so adjacent bases
    /// intersect at activation 0.5.
    pub fn rhythmic(n: usize) -> Self {
        assert!(n >= 2, "basis count must be >= 2");
        let centers: Vec<f64> = (0..n)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64)
            .collect();
        let dc = centers[1] - centers[0];
        // exp(h (cos(dc/2) - 1)) = 0.5
        let h = std::f64::consts::LN_2 / (1.0 - (dc / 2.0).cos());
        BasisSet {
            centers,
            widths: vec![h; n],
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    fn validate(&self, kind: PrimitiveKind) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::InvalidParams(format!(
                "basis count {} < 2",
                self.len()
            )));
        }
        if self.widths.len() != self.centers.len() {
            return Err(Error::InvalidParams(
                "basis widths/centers length mismatch".into(),
            ));
        }
        if self.widths.iter().any(|h| *h <= 0.0 || !h.is_finite()) {
            return Err(Error::InvalidParams("basis widths must be > 0".into()));
        }
        if kind != PrimitiveKind::Rhythmic {
            if self.centers.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParams(
                    "discrete basis centers must be strictly ordered".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Discrete canonical state, integrated in normalized form: x runs from 0
/// toward 1, so `x` is directly the normalized phase x/g.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalStateDiscrete {
    pub x: f64,
    pub v: f64,
}

/// Rhythmic canonical state: phase angle and amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalStateRhythmic {
    pub phi: f64,
    pub r: f64,
}

/// Canonical state of either kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    Discrete(CanonicalStateDiscrete),
    Rhythmic(CanonicalStateRhythmic),
}

impl Phase {
    /// Normalized progress used for coupling activation: x for discrete
    /// phases, phi/(2 pi) for rhythmic ones.
    pub fn progress(&self) -> f64 {
        match self {
            Phase::Discrete(c) => c.x,
            Phase::Rhythmic(c) => c.phi / (2.0 * std::f64::consts::PI),
        }
    }
}

/// Per-DOF transformation state. For the filtered kind `z` holds the
/// internal filter state x of the cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformState {
    pub y: f64,
    pub z: f64,
}

/// Full integration state of a primitive: one canonical phase plus one
/// transformation state per DOF.
#[derive(Debug, Clone, PartialEq)]
pub struct DmpState {
    pub phase: Phase,
    pub dofs: Vec<TransformState>,
}

/// A learned movement primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveParams {
    pub kind: PrimitiveKind,
    /// Transformation gains (1/s).
    pub alpha_z: f64,
    pub beta_z: f64,
    /// Canonical gains (1/s).
    pub alpha_v: f64,
    pub beta_v: f64,
    /// Temporal scale (s).
    pub tau: f64,
    /// Per-DOF goal g (discrete/filtered) or baseline y_m (rhythmic).
    pub goals: Vec<f64>,
    /// Rhythmic amplitude gain (1/s).
    pub mu: f64,
    /// Rhythmic limit amplitude.
    pub r0: f64,
    /// Filter constants of the filtered kind.
    pub a1: f64,
    pub a2: f64,
    /// Per-DOF weights: N entries for discrete/filtered, 2N for rhythmic
    /// (interleaved [cos, sin] components per basis).
    pub weights: Vec<Vec<f64>>,
    /// Nominal start position per DOF (set when learning from a
    /// demonstration; used by concatenation).
    pub y_start: Vec<f64>,
    pub dof_names: Vec<String>,
    /// Kept last so the serialized document emits plain values before the
    /// basis table.
    pub basis: BasisSet,
}

impl PrimitiveParams {
    pub fn new(kind: PrimitiveKind, dof_names: Vec<String>, n_basis: usize) -> Self {
        let n_dofs = dof_names.len();
        let basis = match kind {
            PrimitiveKind::Rhythmic => BasisSet::rhythmic(n_basis),
            _ => BasisSet::discrete(n_basis),
        };
        let wlen = match kind {
            PrimitiveKind::Rhythmic => 2 * n_basis,
            _ => n_basis,
        };
        PrimitiveParams {
            kind,
            alpha_z: 25.0,
            beta_z: 6.25,
            alpha_v: 25.0,
            beta_v: 6.25,
            tau: 1.0,
            goals: vec![1.0; n_dofs],
            mu: 1.0,
            r0: 1.0,
            a1: 1.0,
            a2: 1.0,
            basis,
            weights: vec![vec![0.0; wlen]; n_dofs],
            y_start: vec![0.0; n_dofs],
            dof_names,
        }
    }

    pub fn discrete(dof_names: Vec<String>, n_basis: usize) -> Self {
        Self::new(PrimitiveKind::Discrete, dof_names, n_basis)
    }

    pub fn rhythmic(dof_names: Vec<String>, n_basis: usize) -> Self {
        Self::new(PrimitiveKind::Rhythmic, dof_names, n_basis)
    }

    pub fn filtered(dof_names: Vec<String>, n_basis: usize) -> Self {
        Self::new(PrimitiveKind::Filtered, dof_names, n_basis)
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_names.len()
    }

    fn weights_per_dof(&self) -> usize {
        match self.kind {
            PrimitiveKind::Rhythmic => 2 * self.basis.len(),
            _ => self.basis.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 {
            return Err(Error::InvalidParams(format!("tau = {} must be > 0", self.tau)));
        }
        for (name, v) in [
            ("alpha_z", self.alpha_z),
            ("beta_z", self.beta_z),
            ("alpha_v", self.alpha_v),
            ("beta_v", self.beta_v),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{} = {} must be > 0", name, v)));
            }
        }
        match self.kind {
            PrimitiveKind::Discrete => {
                if self.goals.iter().any(|g| *g == 0.0) {
                    return Err(Error::GoalZero);
                }
            }
            PrimitiveKind::Rhythmic => {
                if self.mu <= 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "mu = {} must be > 0 for rhythmic primitives",
                        self.mu
                    )));
                }
                if self.r0 < 0.0 {
                    return Err(Error::InvalidParams(format!("r0 = {} must be >= 0", self.r0)));
                }
            }
            PrimitiveKind::Filtered => {
                if self.a1 <= 0.0 || self.a2 <= 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "filter constants a1 = {}, a2 = {} must be > 0",
                        self.a1, self.a2
                    )));
                }
                if self.goals.iter().any(|g| *g == 0.0) {
                    return Err(Error::GoalZero);
                }
            }
        }
        self.basis.validate(self.kind)?;
        if self.goals.len() != self.n_dofs() || self.weights.len() != self.n_dofs() {
            return Err(Error::InvalidParams(
                "goals/weights must have one entry per DOF".into(),
            ));
        }
        let wlen = self.weights_per_dof();
        for w in &self.weights {
            if w.len() != wlen {
                return Err(Error::BasisMismatch(w.len(), wlen));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("weights"));
            }
        }
        Ok(())
    }

    /// Initial canonical state for a nominal rollout.
    pub fn initial_phase(&self) -> Phase {
        match self.kind {
            PrimitiveKind::Rhythmic => Phase::Rhythmic(CanonicalStateRhythmic {
                phi: 0.0,
                r: self.r0,
            }),
            _ => Phase::Discrete(CanonicalStateDiscrete { x: 0.0, v: 0.0 }),
        }
    }

    /// Initial state consistent with the given start position and velocity:
    /// the per-DOF internal state is set so that the evaluated initial
    /// velocity equals `ydot0`.
    pub fn initial_state(&self, y0: &[f64], ydot0: &[f64]) -> Result<DmpState> {
        if y0.len() != self.n_dofs() || ydot0.len() != self.n_dofs() {
            return Err(Error::LengthMismatch(y0.len(), self.n_dofs()));
        }
        let phase = self.initial_phase();
        let mut dofs = Vec::with_capacity(self.n_dofs());
        for d in 0..self.n_dofs() {
            let z = match self.kind {
                // tau ydot = z + f  =>  z = tau ydot - f
                PrimitiveKind::Discrete | PrimitiveKind::Rhythmic => {
                    self.tau * ydot0[d] - self.forcing_term(&phase, d)?
                }
                // tau ydot = x_f - a1 y  =>  x_f = tau ydot + a1 y
                PrimitiveKind::Filtered => self.tau * ydot0[d] + self.a1 * y0[d],
            };
            dofs.push(TransformState { y: y0[d], z });
        }
        Ok(DmpState { phase, dofs })
    }

    /// Basis activations at the given canonical state. Each entry lies in
    /// (0, 1] and equals 1 exactly at its center.
    pub fn basis_activation(&self, phase: &Phase) -> Result<Vec<f64>> {
        match (self.kind, phase) {
            (PrimitiveKind::Discrete | PrimitiveKind::Filtered, Phase::Discrete(c)) => {
                if self.goals.iter().any(|g| *g == 0.0) {
                    return Err(Error::GoalZero);
                }
                Ok(self
                    .basis
                    .centers
                    .iter()
                    .zip(&self.basis.widths)
                    .map(|(ci, hi)| (-hi * (c.x - ci) * (c.x - ci)).exp())
                    .collect())
            }
            (PrimitiveKind::Rhythmic, Phase::Rhythmic(c)) => Ok(self
                .basis
                .centers
                .iter()
                .zip(&self.basis.widths)
                .map(|(ci, hi)| (hi * ((c.phi - ci).cos() - 1.0)).exp())
                .collect()),
            _ => Err(Error::InvalidParams(
                "canonical state kind does not match primitive kind".into(),
            )),
        }
    }

    /// Forcing term for one DOF at the given canonical state.
    pub fn forcing_term(&self, phase: &Phase, dof: usize) -> Result<f64> {
        let psi = self.basis_activation(phase)?;
        let sum: f64 = psi.iter().sum();
        if sum <= NORMALIZER_FLOOR {
            return Err(Error::DegenerateNormalizer {
                sum,
                floor: NORMALIZER_FLOOR,
            });
        }
        let w = &self.weights[dof];
        match (self.kind, phase) {
            (PrimitiveKind::Discrete | PrimitiveKind::Filtered, Phase::Discrete(c)) => {
                let num: f64 = psi.iter().zip(w).map(|(p, wi)| p * wi).sum();
                Ok(self.goals[dof] * num / sum * c.v)
            }
            (PrimitiveKind::Rhythmic, Phase::Rhythmic(c)) => {
                let (vc, vs) = (c.r * c.phi.cos(), c.r * c.phi.sin());
                let num: f64 = psi
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p * (w[2 * i] * vc + w[2 * i + 1] * vs))
                    .sum();
                Ok(num / sum)
            }
            _ => Err(Error::InvalidParams(
                "canonical state kind does not match primitive kind".into(),
            )),
        }
    }

    /// Time derivative of the forcing term along the canonical flow,
    /// used to report accelerations without numerical differencing.
    pub fn forcing_rate(&self, phase: &Phase, dof: usize) -> Result<f64> {
        let psi = self.basis_activation(phase)?;
        let sum: f64 = psi.iter().sum();
        if sum <= NORMALIZER_FLOOR {
            return Err(Error::DegenerateNormalizer {
                sum,
                floor: NORMALIZER_FLOOR,
            });
        }
        let w = &self.weights[dof];
        match (self.kind, phase) {
            (PrimitiveKind::Discrete | PrimitiveKind::Filtered, Phase::Discrete(c)) => {
                // f = g * W(x) * v with W = sum(psi w)/sum(psi)
                let num: f64 = psi.iter().zip(w).map(|(p, wi)| p * wi).sum();
                let dpsi: Vec<f64> = psi
                    .iter()
                    .zip(self.basis.centers.iter().zip(&self.basis.widths))
                    .map(|(p, (ci, hi))| -2.0 * hi * (c.x - ci) * p)
                    .collect();
                let dnum: f64 = dpsi.iter().zip(w).map(|(p, wi)| p * wi).sum();
                let dsum: f64 = dpsi.iter().sum();
                let wfun = num / sum;
                let dwdx = (dnum * sum - num * dsum) / (sum * sum);
                let xdot = c.v / self.tau;
                let vdot = self.alpha_v * (self.beta_v * (1.0 - c.x) - c.v) / self.tau;
                Ok(self.goals[dof] * (dwdx * xdot * c.v + wfun * vdot))
            }
            (PrimitiveKind::Rhythmic, Phase::Rhythmic(c)) => {
                let (cosp, sinp) = (c.phi.cos(), c.phi.sin());
                let mut num = 0.0;
                let mut dnum_dphi = 0.0;
                let mut dnum_dr = 0.0;
                let mut dsum = 0.0;
                for (i, p) in psi.iter().enumerate() {
                    let wc = w[2 * i];
                    let ws = w[2 * i + 1];
                    let proj = wc * c.r * cosp + ws * c.r * sinp;
                    let dpsi = -self.basis.widths[i] * (c.phi - self.basis.centers[i]).sin() * p;
                    num += p * proj;
                    dnum_dphi += dpsi * proj + p * (-wc * c.r * sinp + ws * c.r * cosp);
                    dnum_dr += p * (wc * cosp + ws * sinp);
                    dsum += dpsi;
                }
                let df_dphi = (dnum_dphi * sum - num * dsum) / (sum * sum);
                let df_dr = dnum_dr / sum;
                let phidot = 1.0 / self.tau;
                let rdot = -self.mu * (c.r - self.r0) / self.tau;
                Ok(df_dphi * phidot + df_dr * rdot)
            }
            _ => Err(Error::InvalidParams(
                "canonical state kind does not match primitive kind".into(),
            )),
        }
    }

    /// One RK4 step of the canonical system alone.
    fn phase_rk4(&self, phase: &Phase, dt: f64) -> Phase {
        match phase {
            Phase::Discrete(c) => {
                let mut s = [c.x, c.v];
                rk4_step(
                    |_, s, d| {
                        d[0] = s[1] / self.tau;
                        d[1] = self.alpha_v * (self.beta_v * (1.0 - s[0]) - s[1]) / self.tau;
                    },
                    0.0,
                    &mut s,
                    dt,
                );
                Phase::Discrete(CanonicalStateDiscrete { x: s[0], v: s[1] })
            }
            Phase::Rhythmic(c) => {
                let mut s = [c.phi, c.r];
                rk4_step(
                    |_, s, d| {
                        d[0] = 1.0 / self.tau;
                        d[1] = -self.mu * (s[1] - self.r0) / self.tau;
                    },
                    0.0,
                    &mut s,
                    dt,
                );
                Phase::Rhythmic(CanonicalStateRhythmic { phi: s[0], r: s[1] })
            }
        }
    }

    /// Advance the canonical system by `dt` as two RK4 half steps,
    /// returning (midpoint, endpoint). The transformation system consumes
    /// the midpoint; the canonical trace itself is independent of whether
    /// a transformation system is integrated alongside.
    pub fn phase_step(&self, phase: &Phase, dt: f64) -> (Phase, Phase) {
        let mid = self.phase_rk4(phase, 0.5 * dt);
        let end = self.phase_rk4(&mid, 0.5 * dt);
        (mid, end)
    }

    fn check_step(&self, dt: f64) -> Result<()> {
        let limit = self.tau / 10.0;
        if dt <= 0.0 {
            return Err(Error::InvalidParams(format!("dt = {} must be > 0", dt)));
        }
        if dt > limit {
            return Err(Error::StepTooLarge { dt, limit });
        }
        Ok(())
    }

    /// Per-DOF transformation derivative given a frozen canonical state.
    fn dof_deriv(&self, s: &TransformState, phase: &Phase, dof: usize) -> Result<(f64, f64)> {
        let f = self.forcing_term(phase, dof)?;
        Ok(match self.kind {
            PrimitiveKind::Discrete | PrimitiveKind::Rhythmic => {
                let ydot = (s.z + f) / self.tau;
                let zdot = self.alpha_z * (self.beta_z * (self.goals[dof] - s.y) - s.z) / self.tau;
                (ydot, zdot)
            }
            PrimitiveKind::Filtered => {
                // z holds the cascade state x_f
                let ydot = (s.z - self.a1 * s.y) / self.tau;
                let zdot = (self.goals[dof] + f - self.a2 * s.z) / self.tau;
                (ydot, zdot)
            }
        })
    }

    /// Advance the full primitive one fixed step. The canonical system is
    /// advanced independently of the transformation system (hierarchy).
    pub fn step(&self, state: &DmpState, dt: f64) -> Result<DmpState> {
        self.check_step(dt)?;
        let (mid, end) = self.phase_step(&state.phase, dt);
        let mut dofs = Vec::with_capacity(state.dofs.len());
        for (d, s) in state.dofs.iter().enumerate() {
            // RK4 with the canonical state frozen at (start, mid, end)
            let (k1y, k1z) = self.dof_deriv(s, &state.phase, d)?;
            let s2 = TransformState {
                y: s.y + 0.5 * dt * k1y,
                z: s.z + 0.5 * dt * k1z,
            };
            let (k2y, k2z) = self.dof_deriv(&s2, &mid, d)?;
            let s3 = TransformState {
                y: s.y + 0.5 * dt * k2y,
                z: s.z + 0.5 * dt * k2z,
            };
            let (k3y, k3z) = self.dof_deriv(&s3, &mid, d)?;
            let s4 = TransformState {
                y: s.y + dt * k3y,
                z: s.z + dt * k3z,
            };
            let (k4y, k4z) = self.dof_deriv(&s4, &end, d)?;
            dofs.push(TransformState {
                y: s.y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
                z: s.z + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z),
            });
        }
        Ok(DmpState { phase: end, dofs })
    }

    /// Advance the filtered cascade one step for a single DOF, returning
    /// the new (y, filter state) pair together with the advanced phase.
    pub fn step_filtered(
        &self,
        y: f64,
        x_filter: f64,
        phase: &Phase,
        dof: usize,
        dt: f64,
    ) -> Result<(f64, f64, Phase)> {
        if self.kind != PrimitiveKind::Filtered {
            return Err(Error::InvalidParams(
                "step_filtered requires a filtered primitive".into(),
            ));
        }
        let mut dofs = vec![TransformState { y: 0.0, z: 0.0 }; self.n_dofs()];
        dofs[dof] = TransformState { y, z: x_filter };
        let state = DmpState {
            phase: *phase,
            dofs,
        };
        let next = self.step(&state, dt)?;
        Ok((next.dofs[dof].y, next.dofs[dof].z, next.phase))
    }

    /// Evaluated (velocity, acceleration) of one DOF, derived from the
    /// vector field rather than by differencing.
    pub fn output_derivatives(&self, state: &DmpState, dof: usize) -> Result<(f64, f64)> {
        let s = &state.dofs[dof];
        match self.kind {
            PrimitiveKind::Discrete | PrimitiveKind::Rhythmic => {
                let f = self.forcing_term(&state.phase, dof)?;
                let ydot = (s.z + f) / self.tau;
                let zdot = self.alpha_z * (self.beta_z * (self.goals[dof] - s.y) - s.z) / self.tau;
                let fdot = self.forcing_rate(&state.phase, dof)?;
                Ok((ydot, (zdot + fdot) / self.tau))
            }
            PrimitiveKind::Filtered => {
                let f = self.forcing_term(&state.phase, dof)?;
                let ydot = (s.z - self.a1 * s.y) / self.tau;
                let xfdot = (self.goals[dof] + f - self.a2 * s.z) / self.tau;
                Ok((ydot, (xfdot - self.a1 * ydot) / self.tau))
            }
        }
    }

    /// Integrate the primitive from the given start, producing
    /// floor(duration/dt)+1 samples.
    pub fn rollout(&self, y0: &[f64], ydot0: &[f64], dt: f64, duration: f64) -> Result<Trajectory> {
        self.validate()?;
        self.check_step(dt)?;
        if duration < dt {
            return Err(Error::InvalidParams(format!(
                "duration {} s must be >= dt {} s",
                duration, dt
            )));
        }
        let steps = (duration / dt).floor() as usize;
        let mut state = self.initial_state(y0, ydot0)?;
        let mut traj = Trajectory::empty(dt, self.dof_names.clone());
        let n_dofs = self.n_dofs();
        let mut ybuf = vec![0.0; n_dofs];
        let mut vbuf = vec![0.0; n_dofs];
        let mut abuf = vec![0.0; n_dofs];
        for k in 0..=steps {
            for d in 0..n_dofs {
                let (v, a) = self.output_derivatives(&state, d)?;
                ybuf[d] = state.dofs[d].y;
                vbuf[d] = v;
                abuf[d] = a;
            }
            traj.push(&ybuf, &vbuf, &abuf);
            if k < steps {
                state = self.step(&state, dt)?;
            }
        }
        Ok(traj)
    }

    /// Canonical states along a nominal rollout grid (sample 0 is the
    /// initial phase). Bit-identical to the phases seen by `rollout`.
    pub fn canonical_rollout(&self, dt: f64, n_samples: usize) -> Result<Vec<Phase>> {
        self.check_step(dt)?;
        let mut out = Vec::with_capacity(n_samples);
        let mut phase = self.initial_phase();
        for k in 0..n_samples {
            out.push(phase);
            if k + 1 < n_samples {
                let (_, end) = self.phase_step(&phase, dt);
                phase = end;
            }
        }
        Ok(out)
    }
}
