//! Regenerates the bundled assets under `assets/` deterministically.
//!
//! Run from the workspace root:
//!
//! ```text
//! cargo run -p dmpflight --example gen_assets
//! ```

use dmpflight::dmp::PrimitiveKind;
use dmpflight::io;
use dmpflight::learning::{self, Demonstration};
use dmpflight::pipeline::ScenarioConfig;
use std::path::Path;

fn main() {
    let out_dir = Path::new("assets");
    std::fs::create_dir_all(out_dir).expect("create assets dir");

    // one full period of unit sine and cosine, learned as rhythmic
    // primitives; both amplitudes are pinned to exactly 1 so blending the
    // pair superposes without a residual amplitude mismatch
    let dt = 1e-3;
    let n = (2.0 * std::f64::consts::PI / dt) as usize + 1;
    let sine: Vec<f64> = (0..n).map(|k| (k as f64 * dt).sin()).collect();
    let cosine: Vec<f64> = (0..n).map(|k| (k as f64 * dt).cos()).collect();
    for (name, wave) in [("sine", sine), ("cosine", cosine)] {
        let demo = Demonstration::from_positions(dt, vec!["y".into()], vec![wave]);
        let mut p = learning::learn(&demo, 50, PrimitiveKind::Rhythmic).expect("learn");
        p.r0 = 1.0;
        io::write_params(&p, &out_dir.join(format!("{}.params", name))).expect("write params");
        println!("wrote assets/{}.params", name);
    }

    // obstacle-avoidance maneuver scenario: the library default, with a
    // commented header explaining the conventions
    let cfg = ScenarioConfig::default();
    let body = toml::to_string(&cfg).expect("serialize scenario");
    let header = "\
# Obstacle-avoidance maneuver for the 3DOF helicopter pipeline.
#
# The demonstration climbs to the obstacle top (psi = 220 deg, theta =
# 60 deg), then continues to the stop point. Published accounts of this
# maneuver are inconsistent about the stop point: one passage reports it
# as psi = 28 deg / theta = 317 deg while another treats 317 deg as the
# travel goal. 317 deg is far outside any plausible pitch range for the
# bench vehicle, so this file takes 317 deg as the travel (psi) endpoint
# and 28 deg as pitch.
#
# Goal overrides retarget the learned primitives without relearning:
# first primitive psi 220 -> 150 deg and theta 60 -> 50 deg, second
# primitive psi 317 -> 300 deg.
#
# All angles in this file are degrees; trajectories and parameter files
# produced by the pipeline keep internal state in radians.
";
    std::fs::write(out_dir.join("obstacle.scenario"), format!("{}\n{}", header, body))
        .expect("write scenario");
    println!("wrote assets/obstacle.scenario");
}
