//! Combining primitives: one-way convergence, two-way synchronization,
//! concatenation, and linear weight blending.
//!
//! For coupling, a primitive's transformation system is viewed in
//! (y, ydot) coordinates as a stable linear companion system
//! x' = A x + b(t), where the drive b collects the goal and forcing terms
//! u = g + f. One-way coupling replaces the follower's drive with the
//! leader's (the coupling terms u(leader) - u(follower) cancel the
//! follower's own drive): the leader's trajectory becomes a particular
//! solution of the coupled system, the gap contracts with the leader's A,
//! and position/velocity stay continuous across activation because only
//! the acceleration channel switches. Two-way coupling exchanges drives
//! symmetrically and adds a diffusive term K (x_j - x_i).

use crate::dmp::{Phase, PrimitiveKind, PrimitiveParams};
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    OneWay,
    TwoWay,
}

/// How and when to couple two primitives.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub mode: CouplingMode,
    /// Two-way coupling gain K (1/s, >= 0).
    pub gain: f64,
    /// Normalized phase in [0, 1] at which one-way coupling switches on;
    /// 1 disables coupling entirely.
    pub activation_phase: f64,
}

impl CouplingSpec {
    pub fn one_way(activation_phase: f64) -> Self {
        CouplingSpec {
            mode: CouplingMode::OneWay,
            gain: 0.0,
            activation_phase,
        }
    }

    pub fn two_way(gain: f64) -> Self {
        CouplingSpec {
            mode: CouplingMode::TwoWay,
            gain,
            activation_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.activation_phase) {
            return Err(Error::Config(format!(
                "activation phase {} outside [0, 1]",
                self.activation_phase
            )));
        }
        if self.gain < 0.0 {
            return Err(Error::Config(format!(
                "coupling gain {} must be >= 0",
                self.gain
            )));
        }
        Ok(())
    }
}

/// Result of a coupled integration.
#[derive(Debug, Clone)]
pub struct CoupledRollout {
    pub leader: Trajectory,
    pub follower: Trajectory,
    /// Per-sample max over DOFs of |y_follower - y_leader|.
    pub gap: Vec<f64>,
    /// Sample index at which one-way coupling became active, if it did.
    pub activation_index: Option<usize>,
}

/// Concatenation output: the merged trajectory plus the junction sample
/// (first sample produced under the second primitive's lead).
#[derive(Debug, Clone)]
pub struct Concatenation {
    pub trajectory: Trajectory,
    pub junction_index: usize,
    /// Whether coupling actually engaged (false for activation_phase = 1
    /// or an unreachable threshold, in which case the rollouts were
    /// appended raw).
    pub coupled: bool,
}

/// Per-DOF coupled integration state in (y, ydot) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Yv {
    y: f64,
    v: f64,
}

/// Linear part of the (y, ydot) companion form shared by discrete and
/// rhythmic transformation systems:
/// [[0, 1], [-alpha_z beta_z / tau^2, -alpha_z / tau]].
pub fn linear_part(p: &PrimitiveParams) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(
        2,
        2,
        &[
            0.0,
            1.0,
            -p.alpha_z * p.beta_z / (p.tau * p.tau),
            -p.alpha_z / p.tau,
        ],
    )
}

/// Acceleration drive of one DOF: the inhomogeneous part of the companion
/// form, (alpha_z beta_z g + alpha_z f + tau f') / tau^2.
fn drive(p: &PrimitiveParams, phase: &Phase, dof: usize) -> Result<f64> {
    let f = p.forcing_term(phase, dof)?;
    let fdot = p.forcing_rate(phase, dof)?;
    Ok((p.alpha_z * p.beta_z * p.goals[dof] + p.alpha_z * f + p.tau * fdot) / (p.tau * p.tau))
}

/// Homogeneous acceleration of the companion form.
fn homogeneous(p: &PrimitiveParams, s: &Yv) -> f64 {
    (-p.alpha_z * p.beta_z * s.y - p.alpha_z * p.tau * s.v) / (p.tau * p.tau)
}

fn check_pair(a: &PrimitiveParams, b: &PrimitiveParams) -> Result<()> {
    a.validate()?;
    b.validate()?;
    if a.kind == PrimitiveKind::Filtered || b.kind == PrimitiveKind::Filtered {
        return Err(Error::InvalidParams(
            "coupling is defined for discrete and rhythmic primitives".into(),
        ));
    }
    if a.n_dofs() != b.n_dofs() {
        return Err(Error::LengthMismatch(a.n_dofs(), b.n_dofs()));
    }
    Ok(())
}

/// RK4 step of a flat (y, v) state vector; `deriv(stage, state, out)`
/// fills per-entry (ydot, vdot), with stage 0..3 mapping to the
/// (start, mid, mid, end) evaluation points.
fn rk4_yv<F>(state: &[Yv], dt: f64, deriv: F) -> Result<Vec<Yv>>
where
    F: Fn(usize, &[Yv], &mut [(f64, f64)]) -> Result<()>,
{
    let n = state.len();
    let mut k = vec![(0.0, 0.0); n];
    let mut acc = state.to_vec();
    let mut sum = vec![(0.0, 0.0); n];
    let offsets = [0.5 * dt, 0.5 * dt, dt];
    for stage in 0..4 {
        deriv(stage, &acc, &mut k)?;
        let w = if stage == 0 || stage == 3 { 1.0 } else { 2.0 };
        for i in 0..n {
            sum[i].0 += w * k[i].0;
            sum[i].1 += w * k[i].1;
        }
        if stage < 3 {
            let h = offsets[stage];
            for i in 0..n {
                acc[i] = Yv {
                    y: state[i].y + h * k[i].0,
                    v: state[i].v + h * k[i].1,
                };
            }
        }
    }
    Ok((0..n)
        .map(|i| Yv {
            y: state[i].y + dt / 6.0 * sum[i].0,
            v: state[i].v + dt / 6.0 * sum[i].1,
        })
        .collect())
}

/// Native integration state with per-sample (y, v, a) reporting.
struct NativeRun {
    params: PrimitiveParams,
    state: crate::dmp::DmpState,
}

impl NativeRun {
    fn new(p: &PrimitiveParams) -> Result<Self> {
        let zeros = vec![0.0; p.n_dofs()];
        Ok(NativeRun {
            params: p.clone(),
            state: p.initial_state(&p.y_start, &zeros)?,
        })
    }

    fn sample(&self) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.params.n_dofs();
        let mut y = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut a = vec![0.0; n];
        for d in 0..n {
            let (vd, ad) = self.params.output_derivatives(&self.state, d)?;
            y[d] = self.state.dofs[d].y;
            v[d] = vd;
            a[d] = ad;
        }
        Ok((y, v, a))
    }

    fn step(&mut self, dt: f64) -> Result<()> {
        self.state = self.params.step(&self.state, dt)?;
        Ok(())
    }

    /// Convert to (y, ydot) coordinates; the evaluated output velocity is
    /// continuous across this change of variables.
    fn to_yv(&self) -> Result<Vec<Yv>> {
        let (y, v, _) = self.sample()?;
        Ok(y.iter().zip(&v).map(|(y, v)| Yv { y: *y, v: *v }).collect())
    }
}

/// Run the follower's own dynamics until its normalized phase reaches the
/// activation threshold, then replace its drive with the leader's.
pub fn one_way_rollout(
    leader: &PrimitiveParams,
    follower: &PrimitiveParams,
    spec: &CouplingSpec,
    dt: f64,
    duration: f64,
) -> Result<CoupledRollout> {
    if spec.mode != CouplingMode::OneWay {
        return Err(Error::Config("one_way_rollout requires one_way mode".into()));
    }
    spec.validate()?;
    check_pair(leader, follower)?;

    let n_dofs = leader.n_dofs();
    let steps = (duration / dt).floor() as usize;
    let mut lead = NativeRun::new(leader)?;
    let mut foll_native = Some(NativeRun::new(follower)?);
    let mut foll_coupled: Vec<Yv> = Vec::new();

    let mut out_l = Trajectory::empty(dt, leader.dof_names.clone());
    let mut out_f = Trajectory::empty(dt, follower.dof_names.clone());
    let mut gap = Vec::with_capacity(steps + 1);
    let mut activation_index = None;

    for k in 0..=steps {
        if let Some(native) = &foll_native {
            if spec.activation_phase < 1.0
                && native.state.phase.progress() >= spec.activation_phase
            {
                foll_coupled = native.to_yv()?;
                foll_native = None;
                activation_index = Some(k);
            }
        }
        let (ly, lv, la) = lead.sample()?;
        out_l.push(&ly, &lv, &la);
        match &foll_native {
            Some(native) => {
                let (fy, fv, fa) = native.sample()?;
                out_f.push(&fy, &fv, &fa);
                gap.push(max_abs_diff(&fy, &ly));
            }
            None => {
                let mut fy = vec![0.0; n_dofs];
                let mut fv = vec![0.0; n_dofs];
                let mut fa = vec![0.0; n_dofs];
                for d in 0..n_dofs {
                    fy[d] = foll_coupled[d].y;
                    fv[d] = foll_coupled[d].v;
                    fa[d] = homogeneous(leader, &foll_coupled[d])
                        + drive(leader, &lead.state.phase, d)?;
                }
                out_f.push(&fy, &fv, &fa);
                gap.push(max_abs_diff(&fy, &ly));
            }
        }
        if k == steps {
            break;
        }
        // advance: the leader always natively; the follower natively
        // before activation, in companion coordinates after
        let (l_start, l_mid_end) = (lead.state.phase, leader.phase_step(&lead.state.phase, dt));
        let (l_mid, l_end) = l_mid_end;
        if let Some(native) = &mut foll_native {
            native.step(dt)?;
        } else {
            let phases = [l_start, l_mid, l_mid, l_end];
            foll_coupled = rk4_yv(&foll_coupled, dt, |stage, s, out| {
                let ph = &phases[stage];
                for d in 0..n_dofs {
                    out[d] = (
                        s[d].v,
                        homogeneous(leader, &s[d]) + drive(leader, ph, d)?,
                    );
                }
                Ok(())
            })?;
        }
        lead.step(dt)?;
    }
    Ok(CoupledRollout {
        leader: out_l,
        follower: out_f,
        gap,
        activation_index,
    })
}

/// Symmetric two-way synchronization: each system follows the averaged
/// drive plus a diffusive term K (x_other - x_own).
pub fn two_way_rollout(
    p1: &PrimitiveParams,
    p2: &PrimitiveParams,
    spec: &CouplingSpec,
    dt: f64,
    duration: f64,
) -> Result<CoupledRollout> {
    if spec.mode != CouplingMode::TwoWay {
        return Err(Error::Config("two_way_rollout requires two_way mode".into()));
    }
    spec.validate()?;
    check_pair(p1, p2)?;
    let n_dofs = p1.n_dofs();
    let zeros = vec![0.0; n_dofs];

    if spec.gain == 0.0 {
        // decoupled limit: two independent native rollouts
        let t1 = p1.rollout(&p1.y_start, &zeros, dt, duration)?;
        let t2 = p2.rollout(&p2.y_start, &zeros, dt, duration)?;
        let gap = (0..t1.len())
            .map(|k| {
                (0..n_dofs)
                    .map(|d| (t2.y[d][k] - t1.y[d][k]).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        return Ok(CoupledRollout {
            leader: t1,
            follower: t2,
            gap,
            activation_index: None,
        });
    }

    let k_gain = spec.gain;
    let steps = (duration / dt).floor() as usize;
    let mut ph1 = p1.initial_phase();
    let mut ph2 = p2.initial_phase();
    let mut s1: Vec<Yv> = p1.y_start.iter().map(|y| Yv { y: *y, v: 0.0 }).collect();
    let mut s2: Vec<Yv> = p2.y_start.iter().map(|y| Yv { y: *y, v: 0.0 }).collect();

    let mut out1 = Trajectory::empty(dt, p1.dof_names.clone());
    let mut out2 = Trajectory::empty(dt, p2.dof_names.clone());
    let mut gap = Vec::with_capacity(steps + 1);

    let accel = |own_p: &PrimitiveParams,
                 other_p: &PrimitiveParams,
                 d: usize,
                 own: &Yv,
                 other: &Yv,
                 ph_own: &Phase,
                 ph_other: &Phase|
     -> Result<(f64, f64)> {
        let b = 0.5 * (drive(own_p, ph_own, d)? + drive(other_p, ph_other, d)?);
        Ok((
            own.v + k_gain * (other.y - own.y),
            homogeneous(own_p, own) + b + k_gain * (other.v - own.v),
        ))
    };

    let mut ybuf1 = vec![0.0; n_dofs];
    let mut vbuf1 = vec![0.0; n_dofs];
    let mut abuf1 = vec![0.0; n_dofs];
    let mut ybuf2 = vec![0.0; n_dofs];
    let mut vbuf2 = vec![0.0; n_dofs];
    let mut abuf2 = vec![0.0; n_dofs];
    for k in 0..=steps {
        for d in 0..n_dofs {
            let (yd1, vd1) = accel(p1, p2, d, &s1[d], &s2[d], &ph1, &ph2)?;
            let (yd2, vd2) = accel(p2, p1, d, &s2[d], &s1[d], &ph2, &ph1)?;
            ybuf1[d] = s1[d].y;
            vbuf1[d] = yd1;
            abuf1[d] = vd1;
            ybuf2[d] = s2[d].y;
            vbuf2[d] = yd2;
            abuf2[d] = vd2;
        }
        out1.push(&ybuf1, &vbuf1, &abuf1);
        out2.push(&ybuf2, &vbuf2, &abuf2);
        gap.push(
            (0..n_dofs)
                .map(|d| (s2[d].y - s1[d].y).abs())
                .fold(0.0, f64::max),
        );
        if k == steps {
            break;
        }
        let (m1, e1) = p1.phase_step(&ph1, dt);
        let (m2, e2) = p2.phase_step(&ph2, dt);
        let phases = [(ph1, ph2), (m1, m2), (m1, m2), (e1, e2)];
        // joint state: first n_dofs entries system 1, then system 2
        let joint: Vec<Yv> = s1.iter().chain(s2.iter()).copied().collect();
        let next = rk4_yv(&joint, dt, |stage, s, out| {
            let (pa, pb) = &phases[stage];
            for d in 0..n_dofs {
                let (a, b) = (&s[d], &s[n_dofs + d]);
                out[d] = accel(p1, p2, d, a, b, pa, pb)?;
                out[n_dofs + d] = accel(p2, p1, d, b, a, pb, pa)?;
            }
            Ok(())
        })?;
        s1 = next[..n_dofs].to_vec();
        s2 = next[n_dofs..].to_vec();
        ph1 = e1;
        ph2 = e2;
    }
    Ok(CoupledRollout {
        leader: out1,
        follower: out2,
        gap,
        activation_index: Some(0),
    })
}

/// Element-wise alpha * w_a + beta * w_b.
pub fn blend_weights(w_a: &[f64], w_b: &[f64], alpha: f64, beta: f64) -> Result<Vec<f64>> {
    if w_a.len() != w_b.len() {
        return Err(Error::BasisMismatch(w_a.len(), w_b.len()));
    }
    Ok(w_a
        .iter()
        .zip(w_b)
        .map(|(a, b)| alpha * a + beta * b)
        .collect())
}

/// Blend two primitives sharing the same basis and canonical parameters:
/// weights, goals and nominal starts are combined linearly.
pub fn blend(
    p_a: &PrimitiveParams,
    p_b: &PrimitiveParams,
    alpha: f64,
    beta: f64,
) -> Result<PrimitiveParams> {
    p_a.validate()?;
    p_b.validate()?;
    if p_a.kind != p_b.kind || p_a.basis != p_b.basis {
        return Err(Error::BasisMismatch(p_a.basis.len(), p_b.basis.len()));
    }
    if p_a.n_dofs() != p_b.n_dofs() {
        return Err(Error::LengthMismatch(p_a.n_dofs(), p_b.n_dofs()));
    }
    let mut out = p_a.clone();
    for d in 0..out.n_dofs() {
        out.weights[d] = blend_weights(&p_a.weights[d], &p_b.weights[d], alpha, beta)?;
        out.goals[d] = alpha * p_a.goals[d] + beta * p_b.goals[d];
        out.y_start[d] = alpha * p_a.y_start[d] + beta * p_b.y_start[d];
    }
    if matches!(out.kind, PrimitiveKind::Discrete | PrimitiveKind::Filtered)
        && out.goals.iter().any(|g| *g == 0.0)
    {
        return Err(Error::GoalZero);
    }
    Ok(out)
}

/// Run the first primitive, then couple one-way toward the second from
/// the activation phase onward, emitting one continuous trajectory.
///
/// The second primitive's canonical phase starts at activation time. If
/// the activation phase is 1 (or numerically unreachable) the two nominal
/// rollouts are appended raw, preserving whatever junction discontinuity
/// exists.
pub fn concatenate(
    first: &PrimitiveParams,
    second: &PrimitiveParams,
    spec: &CouplingSpec,
    dt: f64,
) -> Result<Concatenation> {
    if spec.mode != CouplingMode::OneWay {
        return Err(Error::Config("concatenate requires one_way mode".into()));
    }
    spec.validate()?;
    check_pair(first, second)?;
    let n_dofs = first.n_dofs();
    let zeros = vec![0.0; n_dofs];
    let settle = 1.5; // tail after each nominal duration, in units of tau

    let raw_append = |out: &mut Trajectory| -> Result<usize> {
        let junction = out.len();
        let b = second.rollout(&second.y_start, &zeros, dt, second.tau * settle)?;
        for d in 0..n_dofs {
            out.y[d].extend_from_slice(&b.y[d]);
            out.ydot[d].extend_from_slice(&b.ydot[d]);
            out.yddot[d].extend_from_slice(&b.yddot[d]);
        }
        Ok(junction)
    };

    if spec.activation_phase >= 1.0 {
        let mut out = first.rollout(&first.y_start, &zeros, dt, first.tau * settle)?;
        let junction = raw_append(&mut out)?;
        return Ok(Concatenation {
            trajectory: out,
            junction_index: junction,
            coupled: false,
        });
    }

    // phase A: the first primitive alone, until its phase reaches s_on
    let mut out = Trajectory::empty(dt, first.dof_names.clone());
    let mut run = NativeRun::new(first)?;
    let cap = (3.0 * first.tau / dt).ceil() as usize;
    let mut reached = false;
    for _ in 0..cap {
        if run.state.phase.progress() >= spec.activation_phase {
            reached = true;
            break;
        }
        let (y, v, a) = run.sample()?;
        out.push(&y, &v, &a);
        run.step(dt)?;
    }
    if !reached {
        let junction = raw_append(&mut out)?;
        return Ok(Concatenation {
            trajectory: out,
            junction_index: junction,
            coupled: false,
        });
    }

    // phase B: leader = second primitive from its own start; the first
    // primitive's state continues under the leader's drive
    let junction = out.len();
    let mut foll = run.to_yv()?;
    let mut lead = NativeRun::new(second)?;
    let steps = (second.tau * settle / dt).ceil() as usize;
    for k in 0..=steps {
        let mut y = vec![0.0; n_dofs];
        let mut v = vec![0.0; n_dofs];
        let mut a = vec![0.0; n_dofs];
        for d in 0..n_dofs {
            y[d] = foll[d].y;
            v[d] = foll[d].v;
            a[d] = homogeneous(second, &foll[d]) + drive(second, &lead.state.phase, d)?;
        }
        out.push(&y, &v, &a);
        if k == steps {
            break;
        }
        let (mid, end) = second.phase_step(&lead.state.phase, dt);
        let phases = [lead.state.phase, mid, mid, end];
        foll = rk4_yv(&foll, dt, |stage, s, outk| {
            let ph = &phases[stage];
            for d in 0..n_dofs {
                outk[d] = (s[d].v, homogeneous(second, &s[d]) + drive(second, ph, d)?);
            }
            Ok(())
        })?;
        lead.step(dt)?;
    }
    Ok(Concatenation {
        trajectory: out,
        junction_index: junction,
        coupled: true,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
