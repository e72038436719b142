//! Command-line front end for the dmpflight library.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/configuration error,
//! 3 numerical failure.

use clap::{Parser, Subcommand, ValueEnum};
use dmpflight::contraction;
use dmpflight::coupling::{self, CouplingSpec};
use dmpflight::dmp::{PrimitiveKind, DEFAULT_DT, DEFAULT_N_BASIS};
use dmpflight::error::Error;
use dmpflight::io;
use dmpflight::learning::{self, Demonstration};
use dmpflight::pipeline::{self, ScenarioConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dmpflight", version, about = "Movement-primitive toolkit for 3DOF helicopter maneuvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Discrete,
    Rhythmic,
    Filtered,
}

impl From<KindArg> for PrimitiveKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Discrete => PrimitiveKind::Discrete,
            KindArg::Rhythmic => PrimitiveKind::Rhythmic,
            KindArg::Filtered => PrimitiveKind::Filtered,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit primitive weights to a demonstration CSV.
    Learn {
        /// Demonstration trajectory CSV.
        input: PathBuf,
        /// Output parameter file (TOML).
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "discrete")]
        kind: KindArg,
        #[arg(long, default_value_t = DEFAULT_N_BASIS)]
        n_basis: usize,
    },
    /// Integrate a primitive and write the trajectory CSV.
    Rollout {
        /// Parameter file.
        params: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Duration in seconds (default: the primitive's time constant,
        /// or one period for rhythmic primitives).
        #[arg(long)]
        duration: Option<f64>,
        /// Override the goal for every DOF, comma-separated.
        #[arg(long, value_delimiter = ',')]
        goal: Option<Vec<f64>>,
        /// Override the time constant.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Split a demonstration at the interior peak of one DOF.
    Segment {
        input: PathBuf,
        /// DOF name to segment on.
        #[arg(long)]
        dof: String,
        /// Output directory (receives first.csv and second.csv).
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Run two primitives with one-way or two-way coupling.
    Couple {
        leader: PathBuf,
        follower: PathBuf,
        #[arg(short, long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        #[arg(long)]
        duration: Option<f64>,
        /// Two-way diffusive gain; omit for one-way coupling.
        #[arg(long)]
        gain: Option<f64>,
        /// One-way activation threshold on the normalized phase.
        #[arg(long, default_value_t = 0.85)]
        activation: f64,
    },
    /// Superpose two primitives of the same kind.
    Blend {
        first: PathBuf,
        second: PathBuf,
        /// Output parameter file for the blended primitive.
        #[arg(short, long)]
        out: PathBuf,
        /// Weight on the first primitive, in [0, 1].
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Also write a rollout CSV of the blended primitive.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Rollout duration for --csv (default: one period or tau).
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Contraction certificate for a primitive's transformation system.
    Check {
        params: PathBuf,
    },
    /// Track a reference trajectory CSV (degrees) with the helicopter model.
    Simulate {
        reference: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Optional TOML with [heli] and [gains] overrides.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Full obstacle-maneuver pipeline from a scenario file.
    Pipeline {
        /// Scenario TOML; omit for the built-in maneuver.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
}

const DEG: f64 = 180.0 / std::f64::consts::PI;

#[derive(Debug, Default, serde::Deserialize)]
#[serde(default)]
struct SimulateConfig {
    heli: dmpflight::heli::HeliParams,
    gains: dmpflight::heli::ControlGains,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Learn {
            input,
            out,
            kind,
            n_basis,
        } => {
            let demo = Demonstration::from_trajectory(&io::read_trajectory_csv(&input)?);
            let params = learning::learn(&demo, n_basis, kind.into())?;
            let rms = learning::reproduction_rms(&params, &demo)?;
            io::write_params(&params, &out)?;
            let demo_traj = demo.to_trajectory()?;
            for (name, r) in params.dof_names.iter().zip(&rms) {
                let range =
                    demo_traj.range(demo.dof_names.iter().position(|n| n == name).unwrap());
                let pct = if range > 0.0 { 100.0 * r / range } else { 0.0 };
                println!("{}: reproduction RMS {:.6e} ({:.3}% of range)", name, r, pct);
                if pct > 5.0 {
                    eprintln!(
                        "warning: {} reproduction above 5% of range; consider more basis functions",
                        name
                    );
                }
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Rollout {
            params,
            out,
            dt,
            duration,
            goal,
            tau,
        } => {
            let mut p = io::read_params(&params)?;
            if let Some(goals) = goal {
                if goals.len() != p.n_dofs() {
                    return Err(Error::Config(format!(
                        "--goal needs {} values, got {}",
                        p.n_dofs(),
                        goals.len()
                    )));
                }
                p.goals = goals;
            }
            if let Some(t) = tau {
                if t <= 0.0 {
                    return Err(Error::Config(format!("--tau {} must be > 0", t)));
                }
                p.tau = t;
            }
            p.validate()?;
            let dur = duration.unwrap_or(match p.kind {
                PrimitiveKind::Rhythmic => p.tau * 2.0 * std::f64::consts::PI,
                _ => p.tau,
            });
            let zeros = vec![0.0; p.n_dofs()];
            let traj = p.rollout(&p.y_start, &zeros, dt, dur)?;
            io::write_trajectory_csv(&traj, &out)?;
            println!("wrote {} ({} samples)", out.display(), traj.len());
            Ok(())
        }
        Command::Segment { input, dof, out_dir } => {
            let demo = Demonstration::from_trajectory(&io::read_trajectory_csv(&input)?);
            let idx = demo
                .dof_names
                .iter()
                .position(|n| *n == dof)
                .ok_or_else(|| Error::Config(format!("unknown DOF {:?}", dof)))?;
            let seg = learning::segment_at_peak(&demo, idx)?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
            io::write_trajectory_csv(&seg.first.to_trajectory()?, &out_dir.join("first.csv"))?;
            io::write_trajectory_csv(&seg.second.to_trajectory()?, &out_dir.join("second.csv"))?;
            println!(
                "split at sample {} (t = {:.4} s)",
                seg.split_index,
                seg.split_index as f64 * demo.dt
            );
            Ok(())
        }
        Command::Couple {
            leader,
            follower,
            out_dir,
            dt,
            duration,
            gain,
            activation,
        } => {
            let p1 = io::read_params(&leader)?;
            let p2 = io::read_params(&follower)?;
            let spec = match gain {
                Some(k) => CouplingSpec::two_way(k),
                None => CouplingSpec::one_way(activation),
            };
            let dur = duration.unwrap_or(p1.tau.max(p2.tau) * 1.5);
            let run = match spec.mode {
                coupling::CouplingMode::OneWay => {
                    coupling::one_way_rollout(&p1, &p2, &spec, dt, dur)?
                }
                coupling::CouplingMode::TwoWay => {
                    coupling::two_way_rollout(&p1, &p2, &spec, dt, dur)?
                }
            };
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
            io::write_trajectory_csv(&run.leader, &out_dir.join("leader.csv"))?;
            io::write_trajectory_csv(&run.follower, &out_dir.join("follower.csv"))?;
            let final_gap = run.gap.last().copied().unwrap_or(0.0);
            println!("final gap {:.6e}", final_gap);
            if let Some(i) = run.activation_index {
                println!("coupling engaged at t = {:.4} s", i as f64 * dt);
            }
            Ok(())
        }
        Command::Blend {
            first,
            second,
            out,
            alpha,
            csv,
            dt,
            duration,
        } => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::Config(format!("--alpha {} must be in [0, 1]", alpha)));
            }
            let p1 = io::read_params(&first)?;
            let p2 = io::read_params(&second)?;
            let blended = coupling::blend(&p1, &p2, alpha, 1.0 - alpha)?;
            io::write_params(&blended, &out)?;
            println!("wrote {}", out.display());
            if let Some(csv_path) = csv {
                let dur = duration.unwrap_or(match blended.kind {
                    PrimitiveKind::Rhythmic => blended.tau * 2.0 * std::f64::consts::PI,
                    _ => blended.tau,
                });
                let zeros = vec![0.0; blended.n_dofs()];
                let traj = blended.rollout(&blended.y_start, &zeros, dt, dur)?;
                io::write_trajectory_csv(&traj, &csv_path)?;
                println!("wrote {} ({} samples)", csv_path.display(), traj.len());
            }
            Ok(())
        }
        Command::Check { params } => {
            let p = io::read_params(&params)?;
            let a = coupling::linear_part(&p);
            let metric = contraction::lyapunov_metric(&a)?;
            let field = |_t: f64, x: &nalgebra::DVector<f64>| &a * x;
            let samples: Vec<(f64, nalgebra::DVector<f64>)> = (0..5)
                .map(|k| {
                    (
                        k as f64,
                        nalgebra::DVector::from_vec(vec![0.5 * k as f64, -0.2]),
                    )
                })
                .collect();
            let report =
                contraction::check_trajectory(field, &metric, &samples, contraction::DEFAULT_MARGIN)?;
            println!(
                "contracting: {} (sup lambda_max = {:.6e}, rate = {:.4})",
                report.verdict,
                report.sup_lambda_max(),
                report.rate
            );
            if report.verdict {
                Ok(())
            } else {
                Err(Error::NonHurwitz)
            }
        }
        Command::Simulate {
            reference,
            out,
            dt,
            config,
        } => {
            let cfg: SimulateConfig = match config {
                Some(path) => io::read_toml(&path)?,
                None => SimulateConfig::default(),
            };
            let reference_deg = io::read_trajectory_csv(&reference)?;
            let mut reference_rad = reference_deg.clone();
            for arrays in [
                &mut reference_rad.y,
                &mut reference_rad.ydot,
                &mut reference_rad.yddot,
            ] {
                for col in arrays.iter_mut() {
                    for v in col.iter_mut() {
                        *v /= DEG;
                    }
                }
            }
            let (actual, rms) =
                dmpflight::heli::simulate_tracking(&reference_rad, &cfg.heli, &cfg.gains, dt)?;
            let mut actual_deg = actual;
            for arrays in [
                &mut actual_deg.y,
                &mut actual_deg.ydot,
                &mut actual_deg.yddot,
            ] {
                for col in arrays.iter_mut() {
                    for v in col.iter_mut() {
                        *v *= DEG;
                    }
                }
            }
            io::write_trajectory_csv(&actual_deg, &out)?;
            println!(
                "tracking RMS: psi {:.4} deg, theta {:.4} deg",
                rms[0] * DEG,
                rms[1] * DEG
            );
            Ok(())
        }
        Command::Pipeline { config, out_dir } => {
            let cfg: ScenarioConfig = match config {
                Some(path) => io::read_toml(&path)?,
                None => ScenarioConfig::default(),
            };
            let run = pipeline::run_pipeline(&cfg, &out_dir)?;
            let s = &run.summary;
            println!("split index: {}", s.split_index);
            println!(
                "junction jump: {:.3e} rad, {:.3e} rad/s (coupled: {})",
                s.junction_jump_rad, s.junction_jump_rad_s, s.coupled
            );
            println!(
                "tracking RMS: psi {:.4} deg, theta {:.4} deg",
                s.tracking_rms_deg[0], s.tracking_rms_deg[1]
            );
            println!(
                "coupling certificate: {} (sup lambda {:.4e})",
                s.coupling_contracting, s.coupling_sup_lambda
            );
            println!(
                "hierarchy certificate: {} (interconnection bound {:.4e})",
                s.hierarchy_contracting, s.hierarchy_interconnection_bound
            );
            println!("artifacts in {}", out_dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes; anything else is a
            // usage error (exit 1, not clap's default 2)
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
