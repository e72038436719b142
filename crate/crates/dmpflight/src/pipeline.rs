//! End-to-end obstacle-maneuver pipeline: synthetic demonstration ->
//! segmentation -> learning -> goal retargeting -> coupled concatenation
//! -> closed-loop tracking simulation -> contraction certificates.
//!
//! Every artifact is written without timestamps so identical scenario
//! files produce byte-identical output directories.

use crate::contraction;
use crate::coupling::{self, CouplingMode, CouplingSpec};
use crate::dmp::{PrimitiveKind, PrimitiveParams, DEFAULT_DT, DEFAULT_N_BASIS};
use crate::error::{Error, Result};
use crate::heli::{ControlGains, HeliParams};
use crate::io;
use crate::learning::{self, Demonstration};
use crate::trajectory::Trajectory;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Scenario file contents. Angles in the scenario (waypoints, goal
/// overrides) are degrees; everything internal is radians.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub format_version: u32,
    /// Integration and sampling step (s).
    pub dt: f64,
    pub n_basis: usize,
    pub dof_names: Vec<String>,
    /// DOF whose interior peak splits the demonstration.
    pub segment_dof: String,
    /// Optional demonstration CSV (degrees); otherwise the built-in
    /// waypoint maneuver below is synthesized.
    pub demo_file: Option<String>,
    /// Waypoint rows [t_s, dof values in degrees...], piecewise
    /// minimum-jerk between rows.
    pub waypoints_deg: Vec<Vec<f64>>,
    pub coupling: CouplingSpec,
    /// Goal overrides in degrees, keyed by DOF name.
    pub goals_first_deg: BTreeMap<String, f64>,
    pub goals_second_deg: BTreeMap<String, f64>,
    pub heli: HeliParams,
    pub gains: ControlGains,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            format_version: io::FORMAT_VERSION,
            dt: DEFAULT_DT,
            n_basis: DEFAULT_N_BASIS,
            dof_names: vec!["psi".into(), "theta".into()],
            segment_dof: "theta".into(),
            demo_file: None,
            waypoints_deg: vec![
                vec![0.0, 0.0, 0.0],
                vec![35.0, 220.0, 60.0],
                vec![95.0, 317.0, 28.0],
            ],
            coupling: CouplingSpec::one_way(0.9999),
            goals_first_deg: [("psi".to_string(), 150.0), ("theta".to_string(), 50.0)]
                .into_iter()
                .collect(),
            goals_second_deg: [("psi".to_string(), 300.0)].into_iter().collect(),
            heli: HeliParams::default(),
            gains: ControlGains::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != io::FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported scenario format_version {}",
                self.format_version
            )));
        }
        if self.dt <= 0.0 {
            return Err(Error::Config(format!("dt = {} must be > 0", self.dt)));
        }
        if self.dof_names.len() < 2 {
            return Err(Error::Config(
                "scenario needs at least two DOFs (psi, theta)".into(),
            ));
        }
        if !self.dof_names.contains(&self.segment_dof) {
            return Err(Error::Config(format!(
                "segment_dof {:?} is not a declared DOF",
                self.segment_dof
            )));
        }
        for map in [&self.goals_first_deg, &self.goals_second_deg] {
            for name in map.keys() {
                if !self.dof_names.contains(name) {
                    return Err(Error::Config(format!(
                        "goal override references undeclared DOF {:?}",
                        name
                    )));
                }
            }
        }
        if self.demo_file.is_none() {
            if self.waypoints_deg.len() < 2 {
                return Err(Error::Config("need at least two waypoints".into()));
            }
            for row in &self.waypoints_deg {
                if row.len() != self.dof_names.len() + 1 {
                    return Err(Error::Config(format!(
                        "waypoint row {:?} must have 1 + {} entries",
                        row,
                        self.dof_names.len()
                    )));
                }
            }
        }
        self.heli.validate()?;
        Ok(())
    }
}

/// Deterministic run summary; thresholds quoted here are artifact-defined
/// (the source material states only qualitative expectations).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub format_version: u32,
    pub split_index: usize,
    /// Per-DOF reproduction RMS of each learned primitive, normalized by
    /// the demonstrated range.
    pub reproduction_rms_first: Vec<f64>,
    pub reproduction_rms_second: Vec<f64>,
    /// Whether one-way coupling actually engaged at the junction.
    pub coupled: bool,
    pub junction_index: usize,
    /// Max over DOFs of the position/velocity step across the junction.
    pub junction_jump_rad: f64,
    pub junction_jump_rad_s: f64,
    /// Closed-loop tracking RMS for psi and theta, degrees.
    pub tracking_rms_deg: Vec<f64>,
    /// Certificate for the coupled follower dynamics (leader's linear
    /// part minus K I) under its Lyapunov metric.
    pub coupling_contracting: bool,
    pub coupling_sup_lambda: f64,
    /// Canonical-over-transformation hierarchy certificate.
    pub hierarchy_contracting: bool,
    pub hierarchy_interconnection_bound: f64,
}

/// Intermediate products, exposed for tests.
pub struct PipelineRun {
    pub demo: Demonstration,
    pub first: PrimitiveParams,
    pub second: PrimitiveParams,
    pub merged: Trajectory,
    pub actual: Trajectory,
    pub summary: PipelineSummary,
}

const DEG: f64 = 180.0 / std::f64::consts::PI;

fn scale_trajectory(traj: &Trajectory, factor: f64) -> Trajectory {
    let mut out = traj.clone();
    for arrays in [&mut out.y, &mut out.ydot, &mut out.yddot] {
        for col in arrays.iter_mut() {
            for v in col.iter_mut() {
                *v *= factor;
            }
        }
    }
    out
}

fn build_demo(cfg: &ScenarioConfig) -> Result<Demonstration> {
    if let Some(file) = &cfg.demo_file {
        let traj = io::read_trajectory_csv(Path::new(file))?;
        let traj = scale_trajectory(&traj, 1.0 / DEG);
        let demo = Demonstration::from_trajectory(&traj);
        return Ok(demo.resampled(cfg.dt));
    }
    let waypoints: Vec<(f64, Vec<f64>)> = cfg
        .waypoints_deg
        .iter()
        .map(|row| (row[0], row[1..].iter().map(|v| v / DEG).collect()))
        .collect();
    let names: Vec<&str> = cfg.dof_names.iter().map(String::as_str).collect();
    Ok(crate::synth::waypoint_demo(&waypoints, &names, cfg.dt))
}

fn apply_goal_overrides(
    p: &mut PrimitiveParams,
    overrides: &BTreeMap<String, f64>,
) -> Result<()> {
    for (name, deg) in overrides {
        let idx = p
            .dof_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("goal override for unknown DOF {:?}", name)))?;
        p.goals[idx] = deg / DEG;
    }
    Ok(())
}

/// Contraction certificate for the coupled follower: linear part of the
/// leading primitive minus K I, checked under its own Lyapunov metric
/// (the identity metric cannot certify companion forms).
fn coupling_certificate(
    leader: &PrimitiveParams,
    gain: f64,
) -> Result<(bool, f64)> {
    let a = coupling::linear_part(leader) - DMatrix::identity(2, 2) * gain;
    let metric = match contraction::lyapunov_metric(&a) {
        Ok(m) => m,
        // not even Hurwitz: report non-contracting outright
        Err(Error::NonHurwitz) => return Ok((false, f64::INFINITY)),
        Err(e) => return Err(e),
    };
    let field = move |_t: f64, x: &DVector<f64>| &a * x;
    let samples: Vec<(f64, DVector<f64>)> = (0..5)
        .map(|k| (k as f64, DVector::from_vec(vec![0.3 * k as f64, -0.1])))
        .collect();
    let report = contraction::check_trajectory(field, &metric, &samples, 1e-6)?;
    Ok((report.verdict, report.sup_lambda_max()))
}

/// Hierarchy certificate on the leading primitive: canonical block over
/// the stacked per-DOF transformation blocks, sampled along its nominal
/// rollout.
fn hierarchy_certificate(p: &PrimitiveParams, dt: f64) -> Result<(bool, f64)> {
    let n_dofs = p.n_dofs();
    let tau = p.tau;
    let (av, bv) = (p.alpha_v, p.beta_v);
    let (az, bz) = (p.alpha_z, p.beta_z);
    let goals = p.goals.clone();
    let pf = p.clone();

    // canonical (x, v) block
    let f_top = move |_t: f64, x: &DVector<f64>| {
        DVector::from_vec(vec![x[1] / tau, av * (bv * (1.0 - x[0]) - x[1]) / tau])
    };
    // stacked (y, z) blocks driven by the canonical state
    let f_bottom = move |_t: f64, top: &DVector<f64>, bot: &DVector<f64>| {
        let phase = crate::dmp::Phase::Discrete(crate::dmp::CanonicalStateDiscrete {
            x: top[0],
            v: top[1],
        });
        let mut out = DVector::zeros(2 * n_dofs);
        for d in 0..n_dofs {
            let f = pf.forcing_term(&phase, d).unwrap_or(0.0);
            let (y, z) = (bot[2 * d], bot[2 * d + 1]);
            out[2 * d] = (z + f) / tau;
            out[2 * d + 1] = az * (bz * (goals[d] - y) - z) / tau;
        }
        out
    };

    let a_top = DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / tau, -av * bv / tau, -av / tau]);
    let mut a_bot = DMatrix::zeros(2 * n_dofs, 2 * n_dofs);
    for d in 0..n_dofs {
        a_bot[(2 * d, 2 * d + 1)] = 1.0 / tau;
        a_bot[(2 * d + 1, 2 * d)] = -az * bz / tau;
        a_bot[(2 * d + 1, 2 * d + 1)] = -az / tau;
    }
    let m_top = contraction::lyapunov_metric(&a_top)?;
    let m_bot = contraction::lyapunov_metric(&a_bot)?;

    // sample the hierarchy along the nominal rollout
    let zeros = vec![0.0; n_dofs];
    let mut state = p.initial_state(&p.y_start, &zeros)?;
    let steps = (p.tau / dt).floor() as usize;
    let stride = (steps / 40).max(1);
    let mut samples = Vec::new();
    for k in 0..=steps {
        if k % stride == 0 {
            let (x, v) = match state.phase {
                crate::dmp::Phase::Discrete(c) => (c.x, c.v),
                _ => unreachable!("pipeline primitives are discrete"),
            };
            let mut bot = DVector::zeros(2 * n_dofs);
            for d in 0..n_dofs {
                bot[2 * d] = state.dofs[d].y;
                bot[2 * d + 1] = state.dofs[d].z;
            }
            samples.push((k as f64 * dt, DVector::from_vec(vec![x, v]), bot));
        }
        if k < steps {
            state = p.step(&state, dt)?;
        }
    }
    let report = contraction::check_hierarchy(f_top, f_bottom, &m_top, &m_bot, &samples, 1e-6)?;
    Ok((report.verdict(), report.interconnection_bound))
}

/// Execute the full scenario, writing artifacts into `out_dir`.
pub fn run_pipeline(cfg: &ScenarioConfig, out_dir: &Path) -> Result<PipelineRun> {
    cfg.validate().map_err(|e| Error::stage("config", e))?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::stage("config", Error::io(out_dir.display().to_string(), e)))?;

    let demo = build_demo(cfg).map_err(|e| Error::stage("demo", e))?;
    let seg_dof = cfg
        .dof_names
        .iter()
        .position(|n| *n == cfg.segment_dof)
        .expect("validated");
    let seg = learning::segment_at_peak(&demo, seg_dof).map_err(|e| Error::stage("segment", e))?;

    let mut first = learning::learn(&seg.first, cfg.n_basis, PrimitiveKind::Discrete)
        .map_err(|e| Error::stage("learn", e))?;
    let mut second = learning::learn(&seg.second, cfg.n_basis, PrimitiveKind::Discrete)
        .map_err(|e| Error::stage("learn", e))?;
    let rms_first = learning::reproduction_rms(&first, &seg.first)
        .map_err(|e| Error::stage("learn", e))?;
    let rms_second = learning::reproduction_rms(&second, &seg.second)
        .map_err(|e| Error::stage("learn", e))?;

    apply_goal_overrides(&mut first, &cfg.goals_first_deg)
        .map_err(|e| Error::stage("retarget", e))?;
    apply_goal_overrides(&mut second, &cfg.goals_second_deg)
        .map_err(|e| Error::stage("retarget", e))?;
    // the end of the retargeted first trajectory becomes the second
    // primitive's initial condition
    second.y_start = first.goals.clone();

    // coupling gain below zero is kept for the certificate but not
    // integrated; the simulated coupling uses the clamped gain
    let mut run_spec = cfg.coupling;
    run_spec.gain = run_spec.gain.max(0.0);
    if run_spec.mode != CouplingMode::OneWay {
        return Err(Error::stage(
            "concatenate",
            Error::Config("pipeline concatenation requires one_way coupling".into()),
        ));
    }
    let concat = coupling::concatenate(&first, &second, &run_spec, cfg.dt)
        .map_err(|e| Error::stage("concatenate", e))?;
    let merged = concat.trajectory;
    let j = concat.junction_index;
    let (mut jump_pos, mut jump_vel) = (0.0f64, 0.0f64);
    if j > 0 && j < merged.len() {
        for d in 0..merged.n_dofs() {
            jump_pos = jump_pos.max((merged.y[d][j] - merged.y[d][j - 1]).abs());
            jump_vel = jump_vel.max((merged.ydot[d][j] - merged.ydot[d][j - 1]).abs());
        }
    }

    let (actual, rms_rad) = crate::heli::simulate_tracking(&merged, &cfg.heli, &cfg.gains, cfg.dt)
        .map_err(|e| Error::stage("simulate", e))?;

    let (coupling_ok, sup_lambda) = coupling_certificate(&second, cfg.coupling.gain)
        .map_err(|e| Error::stage("check", e))?;
    let (hierarchy_ok, interconnection) =
        hierarchy_certificate(&second, cfg.dt).map_err(|e| Error::stage("check", e))?;

    let summary = PipelineSummary {
        format_version: io::FORMAT_VERSION,
        split_index: seg.split_index,
        reproduction_rms_first: rms_first,
        reproduction_rms_second: rms_second,
        coupled: concat.coupled,
        junction_index: j,
        junction_jump_rad: jump_pos,
        junction_jump_rad_s: jump_vel,
        tracking_rms_deg: rms_rad.iter().map(|r| r * DEG).collect(),
        coupling_contracting: coupling_ok,
        coupling_sup_lambda: sup_lambda,
        hierarchy_contracting: hierarchy_ok,
        hierarchy_interconnection_bound: interconnection,
    };

    // artifacts, all in degrees at the file boundary
    let demo_traj = demo.to_trajectory().map_err(|e| Error::stage("demo", e))?;
    io::write_trajectory_csv(&scale_trajectory(&demo_traj, DEG), &out_dir.join("demo.csv"))
        .map_err(|e| Error::stage("write", e))?;
    io::write_params(&first, &out_dir.join("primitive_first.params"))
        .map_err(|e| Error::stage("write", e))?;
    io::write_params(&second, &out_dir.join("primitive_second.params"))
        .map_err(|e| Error::stage("write", e))?;
    io::write_trajectory_csv(&scale_trajectory(&merged, DEG), &out_dir.join("merged.csv"))
        .map_err(|e| Error::stage("write", e))?;
    io::write_trajectory_csv(&scale_trajectory(&actual, DEG), &out_dir.join("tracking.csv"))
        .map_err(|e| Error::stage("write", e))?;
    let summary_text = toml::to_string(&summary)
        .map_err(|e| Error::stage("write", Error::Config(format!("serialize summary: {}", e))))?;
    std::fs::write(out_dir.join("summary.toml"), summary_text)
        .map_err(|e| Error::stage("write", Error::io("summary.toml", e)))?;

    Ok(PipelineRun {
        demo,
        first,
        second,
        merged,
        actual,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_scenario() -> ScenarioConfig {
        // small, fast variant of the bundled maneuver
        ScenarioConfig {
            waypoints_deg: vec![
                vec![0.0, 0.0, 0.0],
                vec![18.0, 110.0, 30.0],
                vec![30.0, 160.0, 14.0],
            ],
            goals_first_deg: [("psi".to_string(), 75.0), ("theta".to_string(), 25.0)]
                .into_iter()
                .collect(),
            goals_second_deg: [("psi".to_string(), 150.0)].into_iter().collect(),
            dt: 2e-3,
            n_basis: 30,
            ..Default::default()
        }
    }

    #[test]
    fn validate_catches_bad_references() {
        let mut cfg = quick_scenario();
        cfg.segment_dof = "nope".into();
        assert!(cfg.validate().is_err());
        let mut cfg = quick_scenario();
        cfg.goals_first_deg.insert("rho".into(), 1.0);
        assert!(cfg.validate().is_err());
        let mut cfg = quick_scenario();
        cfg.waypoints_deg[0] = vec![0.0, 0.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scenario_toml_round_trip() {
        let cfg = quick_scenario();
        let text = toml::to_string(&cfg).unwrap();
        let back: ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.dof_names, cfg.dof_names);
        assert_eq!(back.waypoints_deg, cfg.waypoints_deg);
        assert_eq!(back.goals_first_deg, cfg.goals_first_deg);
    }

    #[test]
    fn pipeline_runs_and_is_deterministic() {
        let cfg = quick_scenario();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let run_a = run_pipeline(&cfg, dir_a.path()).unwrap();
        let _run_b = run_pipeline(&cfg, dir_b.path()).unwrap();
        assert!(run_a.summary.coupled);
        assert!(run_a.summary.hierarchy_contracting);
        assert!(run_a.summary.coupling_contracting);
        assert!(run_a.summary.junction_jump_rad < 1e-3);
        assert!(run_a.summary.junction_jump_rad_s < 1e-2);
        for name in [
            "demo.csv",
            "merged.csv",
            "tracking.csv",
            "primitive_first.params",
            "primitive_second.params",
            "summary.toml",
        ] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "artifact {} differs between runs", name);
        }
    }

    #[test]
    fn disabled_coupling_stops_at_junction() {
        // with coupling off the primitives are appended after settling:
        // no jump, but the vehicle comes to a full stop at the junction
        // instead of flowing through it
        let mut cfg = quick_scenario();
        cfg.coupling.activation_phase = 1.0;
        let dir = tempfile::tempdir().unwrap();
        let run = run_pipeline(&cfg, dir.path()).unwrap();
        assert!(!run.summary.coupled);
        let j = run.summary.junction_index;
        let stalled: f64 = (0..run.merged.n_dofs())
            .map(|d| run.merged.ydot[d][j].abs())
            .fold(0.0, f64::max);
        assert!(stalled < 1e-3, "junction speed {} rad/s", stalled);

        let coupled = run_pipeline(&quick_scenario(), dir.path()).unwrap();
        let jc = coupled.summary.junction_index;
        let moving: f64 = (0..coupled.merged.n_dofs())
            .map(|d| coupled.merged.ydot[d][jc].abs())
            .fold(0.0, f64::max);
        assert!(moving > 1e-2, "coupled junction speed {} rad/s", moving);
    }

    #[test]
    fn negative_gain_flags_non_contracting() {
        let mut cfg = quick_scenario();
        cfg.coupling.gain = -2.0;
        let dir = tempfile::tempdir().unwrap();
        let run = run_pipeline(&cfg, dir.path()).unwrap();
        assert!(!run.summary.coupling_contracting);
    }

    #[test]
    fn stage_errors_carry_stage_names() {
        let mut cfg = quick_scenario();
        // monotone segment DOF: the peak sits on the boundary
        cfg.waypoints_deg = vec![
            vec![0.0, 0.0, 0.0],
            vec![15.0, 60.0, 20.0],
            vec![30.0, 120.0, 40.0],
        ];
        let dir = tempfile::tempdir().unwrap();
        match run_pipeline(&cfg, dir.path()) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "segment"),
            other => panic!("expected segment stage error, got {:?}", other.map(|_| ())),
        }
    }
}
