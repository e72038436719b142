//! 3DOF bench helicopter: rigid-body dynamics in travel/pitch/roll and a
//! cascaded feedback-linearization tracking controller.
//!
//! The travel equation has no control authority at level roll (both thrust
//! terms carry sin(phi)), so exact linearization of psi is singular there.
//! The controller instead linearizes pitch through the collective and runs
//! an outer travel loop that commands a bounded desired roll, realized by
//! an inner roll loop through the cyclic.

use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};

/// Divergence abort threshold on any state component.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

/// Physical constants. The defaults are plausible bench-helicopter
/// magnitudes chosen for a well-conditioned simulation, not measurements;
/// all are overridable through the scenario config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeliParams {
    /// Moments of inertia about roll, pitch, travel axes (kg m^2).
    pub j_xx: f64,
    pub j_yy: f64,
    pub j_zz: f64,
    /// Total assembly mass (kg).
    pub m_total: f64,
    /// Rotor-assembly mass (kg).
    pub m_rotor: f64,
    /// Main beam length (m).
    pub l_beam: f64,
    /// Rotor-pivot-to-propeller distance (m).
    pub l_h: f64,
    /// Pitch and roll gravity moment arms (m).
    pub l_theta: f64,
    pub l_phi: f64,
    /// Pitch offset (rad).
    pub theta_0: f64,
    /// Drag coefficient times reference area, constant and roll-dependent
    /// parts (m^2).
    pub s0: f64,
    pub s0p: f64,
    /// Air density (kg/m^3).
    pub rho: f64,
    /// Thrust saturation (N) on both collective and cyclic.
    pub t_max: f64,
    /// Gravitational acceleration (m/s^2).
    pub g_grav: f64,
}

impl Default for HeliParams {
    fn default() -> Self {
        HeliParams {
            j_xx: 0.0364,
            j_yy: 0.91,
            j_zz: 0.91,
            m_total: 3.57,
            m_rotor: 1.15,
            l_beam: 0.66,
            l_h: 0.177,
            l_theta: 0.004,
            l_phi: 0.002,
            theta_0: 0.3,
            s0: 0.01,
            s0p: 0.005,
            rho: 1.225,
            t_max: 20.0,
            g_grav: 9.81,
        }
    }
}

impl HeliParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("j_xx", self.j_xx),
            ("j_yy", self.j_yy),
            ("j_zz", self.j_zz),
            ("m_total", self.m_total),
            ("m_rotor", self.m_rotor),
            ("l_beam", self.l_beam),
            ("l_h", self.l_h),
            ("l_theta", self.l_theta),
            ("l_phi", self.l_phi),
            ("rho", self.rho),
            ("t_max", self.t_max),
            ("g_grav", self.g_grav),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{} = {} must be > 0", name, v)));
            }
        }
        if self.s0 < 0.0 || self.s0p < 0.0 {
            return Err(Error::InvalidParams(
                "drag areas s0, s0p must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Travel, pitch, roll angles and rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeliState {
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
    pub psi_dot: f64,
    pub theta_dot: f64,
    pub phi_dot: f64,
}

impl HeliState {
    pub fn to_array(self) -> [f64; 6] {
        [
            self.psi,
            self.theta,
            self.phi,
            self.psi_dot,
            self.theta_dot,
            self.phi_dot,
        ]
    }

    fn from_array(a: &[f64]) -> Self {
        HeliState {
            psi: a[0],
            theta: a[1],
            phi: a[2],
            psi_dot: a[3],
            theta_dot: a[4],
            phi_dot: a[5],
        }
    }

    fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Collective (T_L + T_R) and cyclic (T_L - T_R) thrusts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub t_col: f64,
    pub t_cyc: f64,
}

impl ControlInput {
    pub fn saturated(t_col: f64, t_cyc: f64, t_max: f64) -> Self {
        ControlInput {
            t_col: t_col.clamp(-t_max, t_max),
            t_cyc: t_cyc.clamp(-t_max, t_max),
        }
    }
}

/// Controller gains for both cascaded loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlGains {
    /// Pitch loop proportional and derivative gains (1/s^2, 1/s).
    pub k_p: f64,
    pub k_d: f64,
    /// Outer travel loop gains. These must stay soft: the travel channel
    /// only has the roll-tilted thrust component to work with, so a stiff
    /// loop immediately rails the desired roll at its clamp.
    pub k_p_travel: f64,
    pub k_d_travel: f64,
    /// Inner roll loop gains.
    pub k_p_roll: f64,
    pub k_d_roll: f64,
    /// Desired-roll clamp (rad).
    pub roll_clamp: f64,
    /// Distance from pi/2 at which the collective inversion aborts (rad).
    pub roll_guard: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        ControlGains {
            k_p: 16.0,
            k_d: 8.0,
            k_p_travel: 0.49,
            k_d_travel: 1.4,
            k_p_roll: 16.0,
            k_d_roll: 8.0,
            roll_clamp: 0.6,
            roll_guard: 0.1,
        }
    }
}

/// Reference point for the tracked DOFs: value, rate and acceleration of
/// travel and pitch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingRef {
    pub psi: f64,
    pub psi_dot: f64,
    pub psi_ddot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub theta_ddot: f64,
}

/// Signed aerodynamic travel drag. The magnitude is
/// rho/2 (psi_dot L)^2 (S0 + S0' sin phi) L; the sign always opposes the
/// travel rate so the drag is dissipative in both directions.
pub fn drag(state: &HeliState, p: &HeliParams) -> f64 {
    let v = state.psi_dot * p.l_beam;
    let area = p.s0 + p.s0p * state.phi.sin();
    0.5 * p.rho * v * v * area * p.l_beam * state.psi_dot.signum()
}

/// Angular accelerations (psi, theta, phi) from the equations of motion.
pub fn accelerations(state: &HeliState, u: &ControlInput, p: &HeliParams) -> (f64, f64, f64) {
    let (s_phi, c_phi) = state.phi.sin_cos();
    let (s_theta, c_theta) = state.theta.sin_cos();
    let psi_ddot = (u.t_col * p.l_beam * c_theta * s_phi - u.t_cyc * p.l_h * s_theta * s_phi
        - drag(state, p))
        / p.j_zz;
    let theta_ddot = (-p.m_total * p.g_grav * p.l_theta * (state.theta + p.theta_0).sin()
        + u.t_col * p.l_beam * c_phi)
        / p.j_yy;
    let phi_ddot = (-p.m_rotor * p.g_grav * p.l_phi * s_phi + u.t_cyc * p.l_h) / p.j_xx;
    (psi_ddot, theta_ddot, phi_ddot)
}

/// Full state derivative.
pub fn dynamics(state: &HeliState, u: &ControlInput, p: &HeliParams) -> HeliState {
    let (psi_dd, theta_dd, phi_dd) = accelerations(state, u, p);
    HeliState {
        psi: state.psi_dot,
        theta: state.theta_dot,
        phi: state.phi_dot,
        psi_dot: psi_dd,
        theta_dot: theta_dd,
        phi_dot: phi_dd,
    }
}

/// Collective thrust holding pitch in equilibrium at level roll.
pub fn hover_collective(theta: f64, p: &HeliParams) -> f64 {
    p.m_total * p.g_grav * p.l_theta * (theta + p.theta_0).sin() / p.l_beam
}

/// Cascaded tracking controller: collective linearizes pitch; the outer
/// travel loop inverts the travel equation into a bounded desired roll
/// which the inner loop realizes through the cyclic.
pub fn controller(
    state: &HeliState,
    r: &TrackingRef,
    p: &HeliParams,
    gains: &ControlGains,
) -> Result<ControlInput> {
    let guard = std::f64::consts::FRAC_PI_2 - gains.roll_guard;
    if state.phi.abs() >= guard {
        return Err(Error::RollGuard {
            phi: state.phi,
            guard,
        });
    }
    // pitch feedback linearization through the collective
    let theta_cmd =
        r.theta_ddot + gains.k_d * (r.theta_dot - state.theta_dot) + gains.k_p * (r.theta - state.theta);
    let t_col_raw = (p.j_yy * theta_cmd
        + p.m_total * p.g_grav * p.l_theta * (state.theta + p.theta_0).sin())
        / (p.l_beam * state.phi.cos());

    // outer travel loop: required roll for the commanded travel acceleration
    let psi_cmd = r.psi_ddot
        + gains.k_d_travel * (r.psi_dot - state.psi_dot)
        + gains.k_p_travel * (r.psi - state.psi);
    let denom = t_col_raw * p.l_beam * state.theta.cos();
    let phi_d = if denom.abs() < 1e-6 {
        0.0
    } else {
        let arg = ((p.j_zz * psi_cmd + drag(state, p)) / denom).clamp(-1.0, 1.0);
        arg.asin().clamp(-gains.roll_clamp, gains.roll_clamp)
    };

    // inner roll loop through the cyclic (desired roll rate zero)
    let roll_cmd = gains.k_d_roll * (-state.phi_dot) + gains.k_p_roll * (phi_d - state.phi);
    let t_cyc_raw = (p.j_xx * roll_cmd + p.m_rotor * p.g_grav * p.l_phi * state.phi.sin()) / p.l_h;

    Ok(ControlInput::saturated(t_col_raw, t_cyc_raw, p.t_max))
}

/// Advance the helicopter one RK4 step under a held control input.
pub fn step(state: &HeliState, u: &ControlInput, p: &HeliParams, dt: f64) -> HeliState {
    let mut s = state.to_array();
    rk4_step(
        |_, s, d| {
            let deriv = dynamics(&HeliState::from_array(s), u, p);
            let da = deriv.to_array();
            d.copy_from_slice(&da);
        },
        0.0,
        &mut s,
        dt,
    );
    HeliState::from_array(&s)
}

/// Total mechanical energy of the conservative part of the dynamics
/// (thrust and drag zero); conserved by the exact flow.
pub fn mechanical_energy(state: &HeliState, p: &HeliParams) -> f64 {
    0.5 * p.j_zz * state.psi_dot * state.psi_dot
        + 0.5 * p.j_yy * state.theta_dot * state.theta_dot
        + 0.5 * p.j_xx * state.phi_dot * state.phi_dot
        - p.m_total * p.g_grav * p.l_theta * (state.theta + p.theta_0).cos()
        - p.m_rotor * p.g_grav * p.l_phi * state.phi.cos()
}

/// Closed-loop simulation tracking the psi/theta reference. Returns the
/// full state history (including the uncommanded roll) and the RMS
/// tracking errors for psi and theta.
pub fn simulate_tracking(
    reference: &Trajectory,
    p: &HeliParams,
    gains: &ControlGains,
    dt: f64,
) -> Result<(Trajectory, Vec<f64>)> {
    p.validate()?;
    reference.validate()?;
    let psi_dof = reference.dof_index("psi").unwrap_or(0);
    let theta_dof = reference.dof_index("theta").unwrap_or(1);
    if reference.n_dofs() < 2 {
        return Err(Error::InvalidTrajectory(
            "tracking reference needs psi and theta DOFs".into(),
        ));
    }
    let duration = reference.duration();
    let steps = (duration / dt).floor() as usize;

    let mut state = HeliState {
        psi: reference.y[psi_dof][0],
        theta: reference.y[theta_dof][0],
        phi: 0.0,
        psi_dot: reference.ydot[psi_dof][0],
        theta_dot: reference.ydot[theta_dof][0],
        phi_dot: 0.0,
    };

    let mut out = Trajectory::empty(
        dt,
        vec!["psi".into(), "theta".into(), "phi".into()],
    );
    let mut se_psi = 0.0;
    let mut se_theta = 0.0;

    let ref_at = |t: f64| TrackingRef {
        psi: reference.sample_position(psi_dof, t),
        psi_dot: reference.sample_velocity(psi_dof, t),
        psi_ddot: interp_col(&reference.yddot[psi_dof], reference.dt, t),
        theta: reference.sample_position(theta_dof, t),
        theta_dot: reference.sample_velocity(theta_dof, t),
        theta_ddot: interp_col(&reference.yddot[theta_dof], reference.dt, t),
    };

    for k in 0..=steps {
        let t = k as f64 * dt;
        if state.max_abs() > DIVERGENCE_LIMIT {
            return Err(Error::Diverged {
                t,
                limit: DIVERGENCE_LIMIT,
            });
        }
        let r = ref_at(t);
        let u = controller(&state, &r, p, gains)?;
        let (psi_dd, theta_dd, phi_dd) = accelerations(&state, &u, p);
        out.push(
            &[state.psi, state.theta, state.phi],
            &[state.psi_dot, state.theta_dot, state.phi_dot],
            &[psi_dd, theta_dd, phi_dd],
        );
        let e_psi = state.psi - r.psi;
        let e_theta = state.theta - r.theta;
        se_psi += e_psi * e_psi;
        se_theta += e_theta * e_theta;
        if k < steps {
            state = step(&state, &u, p, dt);
        }
    }
    let n = (steps + 1) as f64;
    Ok((out, vec![(se_psi / n).sqrt(), (se_theta / n).sqrt()]))
}

fn interp_col(col: &[f64], dt: f64, t: f64) -> f64 {
    if col.is_empty() {
        return 0.0;
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

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn rest_equilibrium() {
        let p = HeliParams::default();
        let state = HeliState {
            theta: -p.theta_0,
            ..Default::default()
        };
        let u = ControlInput {
            t_col: 0.0,
            t_cyc: 0.0,
        };
        let (a, b, c) = accelerations(&state, &u, &p);
        assert_abs_diff_eq!(a, 0.0);
        assert_abs_diff_eq!(b, 0.0);
        assert_abs_diff_eq!(c, 0.0);
    }

    #[test]
    fn hover_thrust_balances_pitch() {
        let p = HeliParams::default();
        let expect = p.m_total * p.g_grav * p.l_theta * p.theta_0.sin() / p.l_beam;
        assert_abs_diff_eq!(hover_collective(0.0, &p), expect, epsilon = 1e-15);
        let state = HeliState::default();
        let u = ControlInput {
            t_col: expect,
            t_cyc: 0.0,
        };
        let (_, theta_dd, _) = accelerations(&state, &u, &p);
        assert_abs_diff_eq!(theta_dd, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn drag_hand_value() {
        // psi_dot = 1, phi = 0: drag = 0.5 * 1.225 * 0.66^2 * 0.01 * 0.66
        let p = HeliParams::default();
        let state = HeliState {
            psi_dot: 1.0,
            ..Default::default()
        };
        let expect = 0.5 * 1.225 * 0.66 * 0.66 * 0.01 * 0.66;
        assert_abs_diff_eq!(drag(&state, &p), expect, epsilon = 1e-15);
    }

    #[test]
    fn drag_opposes_motion_both_directions() {
        let p = HeliParams::default();
        for psi_dot in [-3.0, -0.5, 0.5, 3.0] {
            for phi in [-0.5, 0.0, 0.5] {
                let state = HeliState {
                    psi_dot,
                    phi,
                    ..Default::default()
                };
                assert!(drag(&state, &p) * psi_dot >= 0.0);
            }
        }
    }

    #[test]
    fn travel_kinetic_energy_nonincreasing_under_drag() {
        let p = HeliParams::default();
        let u = ControlInput {
            t_col: 0.0,
            t_cyc: 0.0,
        };
        for psi_dot0 in [-4.0, -1.0, 0.5, 2.0, 5.0] {
            let mut state = HeliState {
                psi_dot: psi_dot0,
                theta: -p.theta_0, // keep pitch/roll at rest
                ..Default::default()
            };
            let mut prev = 0.5 * p.j_zz * state.psi_dot * state.psi_dot;
            for _ in 0..5000 {
                state = step(&state, &u, &p, 1e-3);
                let e = 0.5 * p.j_zz * state.psi_dot * state.psi_dot;
                assert!(e <= prev + 1e-12, "travel KE grew: {} -> {}", prev, e);
                prev = e;
            }
        }
    }

    #[test]
    fn conservative_energy_drift_small() {
        let mut p = HeliParams::default();
        p.s0 = 0.0;
        p.s0p = 0.0;
        let u = ControlInput {
            t_col: 0.0,
            t_cyc: 0.0,
        };
        let state0 = HeliState {
            theta: 0.4,
            phi: 0.3,
            psi_dot: 1.0,
            ..Default::default()
        };
        let e0 = mechanical_energy(&state0, &p);
        let mut state = state0;
        let scale = e0.abs().max(1e-3);
        for _ in 0..10_000 {
            state = step(&state, &u, &p, 1e-3);
        }
        let drift = (mechanical_energy(&state, &p) - e0).abs() / scale;
        assert!(drift < 1e-6, "relative drift {}", drift);
    }

    #[test]
    fn dynamics_affine_in_control() {
        let p = HeliParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let state = HeliState {
                psi: rng.gen_range(-3.0..3.0),
                theta: rng.gen_range(-1.0..1.0),
                phi: rng.gen_range(-1.0..1.0),
                psi_dot: rng.gen_range(-2.0..2.0),
                theta_dot: rng.gen_range(-2.0..2.0),
                phi_dot: rng.gen_range(-2.0..2.0),
            };
            // sensitivity to each input is input-independent
            let probe = |col: f64, cyc: f64| {
                let u = ControlInput {
                    t_col: col,
                    t_cyc: cyc,
                };
                accelerations(&state, &u, &p)
            };
            let base = probe(0.0, 0.0);
            let at = |u: (f64, f64)| probe(u.0, u.1);
            for (du_col, du_cyc) in [(1.0, 0.0), (0.0, 1.0)] {
                let lo = at((du_col, du_cyc));
                let hi = at((5.0 * du_col, 5.0 * du_cyc));
                // (f(5u) - f(0)) must equal 5 (f(u) - f(0)) exactly for affine maps
                for i in 0..3 {
                    let a = [lo.0 - base.0, lo.1 - base.1, lo.2 - base.2][i];
                    let b = [hi.0 - base.0, hi.1 - base.1, hi.2 - base.2][i];
                    assert_abs_diff_eq!(b, 5.0 * a, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn pitch_step_response_settles() {
        let p = HeliParams::default();
        let gains = ControlGains::default();
        let dt = 1e-3;
        // constant pitch reference step of 0.1 rad from rest
        let mut reference = Trajectory::empty(dt, vec!["psi".into(), "theta".into()]);
        let n = 5000;
        for _ in 0..n {
            reference.push(&[0.0, 0.1], &[0.0, 0.0], &[0.0, 0.0]);
        }
        let mut state = HeliState::default();
        let r = TrackingRef {
            theta: 0.1,
            ..Default::default()
        };
        for _ in 0..n {
            let u = controller(&state, &r, &p, &gains).unwrap();
            assert!(u.t_col.abs() <= p.t_max && u.t_cyc.abs() <= p.t_max);
            state = step(&state, &u, &p, dt);
        }
        assert_abs_diff_eq!(state.theta, 0.1, epsilon = 2e-3);
    }

    #[test]
    fn hover_reference_zero_cyclic() {
        let p = HeliParams::default();
        let gains = ControlGains::default();
        let state = HeliState::default();
        let r = TrackingRef::default();
        let u = controller(&state, &r, &p, &gains).unwrap();
        assert_abs_diff_eq!(u.t_col, hover_collective(0.0, &p), epsilon = 1e-12);
        assert_abs_diff_eq!(u.t_cyc, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn roll_guard_triggers() {
        let p = HeliParams::default();
        let gains = ControlGains::default();
        let state = HeliState {
            phi: std::f64::consts::FRAC_PI_2 - 0.05,
            ..Default::default()
        };
        let r = TrackingRef::default();
        assert!(matches!(
            controller(&state, &r, &p, &gains),
            Err(Error::RollGuard { .. })
        ));
    }

    #[test]
    fn constant_hover_tracking_rms_tiny() {
        let p = HeliParams::default();
        let gains = ControlGains::default();
        let dt = 1e-3;
        let mut reference = Trajectory::empty(dt, vec!["psi".into(), "theta".into()]);
        for _ in 0..3000 {
            reference.push(&[0.5, 0.2], &[0.0, 0.0], &[0.0, 0.0]);
        }
        // start exactly on the reference
        let (actual, rms) = simulate_tracking(&reference, &p, &gains, dt).unwrap();
        assert_eq!(actual.n_dofs(), 3);
        assert!(rms[1] < 1e-6, "theta rms {}", rms[1]);
    }
}
