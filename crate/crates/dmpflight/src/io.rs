//! File formats: trajectory CSV and primitive-parameter documents.
//!
//! Trajectory CSV carries a `t,<dof>,<dof>_dot,<dof>_ddot,...` header,
//! values with 12 significant digits and LF line endings; no timestamps
//! anywhere, so identical inputs produce byte-identical files.

use crate::dmp::PrimitiveParams;
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

/// Format a value with 12 significant digits. Plain decimal for moderate
/// magnitudes, scientific notation outside that range.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        trim_zeros(&s)
    } else {
        format!("{:.11e}", x)
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// Serialize a trajectory to CSV text.
pub fn trajectory_to_csv(traj: &Trajectory) -> Result<String> {
    traj.validate()?;
    let mut out = String::new();
    out.push('t');
    for name in &traj.dof_names {
        let _ = write!(out, ",{},{}_dot,{}_ddot", name, name, name);
    }
    out.push('\n');
    for k in 0..traj.len() {
        let _ = write!(out, "{}", format_sig(traj.time(k)));
        for d in 0..traj.n_dofs() {
            let _ = write!(
                out,
                ",{},{},{}",
                format_sig(traj.y[d][k]),
                format_sig(traj.ydot[d][k]),
                format_sig(traj.yddot[d][k])
            );
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let text = trajectory_to_csv(traj)?;
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parse a trajectory CSV. The header must carry a `t` column followed by
/// (`<dof>`, `<dof>_dot`, `<dof>_ddot`) triplets.
pub fn parse_trajectory_csv(text: &str, path: &Path) -> Result<Trajectory> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| perr(1, "empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") || cols.len() < 4 || (cols.len() - 1) % 3 != 0 {
        return Err(perr(
            1,
            format!("header must be t,<dof>,<dof>_dot,<dof>_ddot,...; got {:?}", header),
        ));
    }
    let n_dofs = (cols.len() - 1) / 3;
    let mut dof_names = Vec::with_capacity(n_dofs);
    for d in 0..n_dofs {
        let name = cols[1 + 3 * d];
        let want_dot = format!("{}_dot", name);
        let want_ddot = format!("{}_ddot", name);
        if cols[2 + 3 * d] != want_dot || cols[3 + 3 * d] != want_ddot {
            return Err(perr(
                1,
                format!("columns for DOF {} must be {},{},{}", name, name, want_dot, want_ddot),
            ));
        }
        dof_names.push(name.to_string());
    }

    let mut times: Vec<f64> = Vec::new();
    let mut traj = Trajectory::empty(0.0, dof_names);
    let mut ybuf = vec![0.0; n_dofs];
    let mut vbuf = vec![0.0; n_dofs];
    let mut abuf = vec![0.0; n_dofs];
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(perr(
                lineno,
                format!("{} fields, expected {}", fields.len(), cols.len()),
            ));
        }
        let mut parsed = Vec::with_capacity(fields.len());
        for f in &fields {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|e| perr(lineno, format!("bad number {:?}: {}", f, e)))?;
            parsed.push(v);
        }
        times.push(parsed[0]);
        for d in 0..n_dofs {
            ybuf[d] = parsed[1 + 3 * d];
            vbuf[d] = parsed[2 + 3 * d];
            abuf[d] = parsed[3 + 3 * d];
        }
        traj.push(&ybuf, &vbuf, &abuf);
    }
    if times.len() < 2 {
        return Err(perr(times.len() + 1, "need at least 2 samples".into()));
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return Err(perr(3, format!("non-increasing time column, dt = {}", dt)));
    }
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * (1.0 + dt) {
            return Err(perr(k + 3, "time column is not uniformly sampled".into()));
        }
    }
    traj.dt = dt;
    traj.validate()?;
    Ok(traj)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_trajectory_csv(&text, path)
}

/// On-disk primitive parameter document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub params: PrimitiveParams,
}

pub fn params_to_string(params: &PrimitiveParams) -> Result<String> {
    params.validate()?;
    let doc = ParamsFile {
        format_version: FORMAT_VERSION,
        params: params.clone(),
    };
    toml::to_string(&doc).map_err(|e| Error::Config(format!("serialize params: {}", e)))
}

pub fn write_params(params: &PrimitiveParams, path: &Path) -> Result<()> {
    let text = params_to_string(params)?;
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn parse_params(text: &str, path: &Path) -> Result<PrimitiveParams> {
    let doc: ParamsFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e
            .span()
            .map(|s| text[..s.start].lines().count())
            .unwrap_or(0),
        msg: e.message().to_string(),
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Config(format!(
            "unsupported format_version {} (expected {})",
            doc.format_version, FORMAT_VERSION
        )));
    }
    doc.params.validate()?;
    Ok(doc.params)
}

pub fn read_params(path: &Path) -> Result<PrimitiveParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_params(&text, path)
}

/// Read any TOML-backed config document.
pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e
            .span()
            .map(|s| text[..s.start].lines().count())
            .unwrap_or(0),
        msg: e.message().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmp::PrimitiveKind;

    #[test]
    fn format_sig_cases() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(0.5), "0.5");
        assert_eq!(format_sig(-2.25), "-2.25");
        // 12 significant digits retained
        assert_eq!(format_sig(1.23456789012345), "1.23456789012");
        assert_eq!(format_sig(123456.789012345), "123456.789012");
        // extreme magnitudes fall back to scientific notation
        assert!(format_sig(1e-7).contains('e'));
        let round: f64 = format_sig(std::f64::consts::PI).parse().unwrap();
        assert!((round - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn csv_round_trip() {
        let mut traj = Trajectory::empty(1e-2, vec!["psi".into(), "theta".into()]);
        for k in 0..50 {
            let t = k as f64 * 1e-2;
            traj.push(
                &[t.sin(), t.cos()],
                &[t.cos(), -t.sin()],
                &[-t.sin(), -t.cos()],
            );
        }
        let text = trajectory_to_csv(&traj).unwrap();
        assert!(text.starts_with("t,psi,psi_dot,psi_ddot,theta,theta_dot,theta_ddot\n"));
        assert!(!text.contains('\r'));
        let back = parse_trajectory_csv(&text, Path::new("mem.csv")).unwrap();
        assert_eq!(back.dof_names, traj.dof_names);
        assert!((back.dt - traj.dt).abs() < 1e-12);
        for k in 0..traj.len() {
            assert!((back.y[0][k] - traj.y[0][k]).abs() < 1e-11);
        }
        // determinism: serializing again is byte-identical
        assert_eq!(text, trajectory_to_csv(&back).unwrap());
    }

    #[test]
    fn csv_parse_errors_carry_line_numbers() {
        let text = "t,y,y_dot,y_ddot\n0,0,0,0\n0.001,oops,0,0\n";
        let err = parse_trajectory_csv(text, Path::new("bad.csv")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {:?}", other),
        }
        let empty = parse_trajectory_csv("", Path::new("empty.csv")).unwrap_err();
        assert!(matches!(empty, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn csv_rejects_bad_header_and_ragged_rows() {
        assert!(parse_trajectory_csv("time,y\n", Path::new("h.csv")).is_err());
        let ragged = "t,y,y_dot,y_ddot\n0,0,0,0\n0.001,1,1\n";
        assert!(parse_trajectory_csv(ragged, Path::new("r.csv")).is_err());
        let nonuniform = "t,y,y_dot,y_ddot\n0,0,0,0\n0.001,1,0,0\n0.5,2,0,0\n";
        assert!(parse_trajectory_csv(nonuniform, Path::new("n.csv")).is_err());
    }

    #[test]
    fn params_round_trip_field_by_field() {
        let mut p = PrimitiveParams::new(PrimitiveKind::Rhythmic, vec!["a".into(), "b".into()], 8);
        for dof in &mut p.weights {
            for (i, w) in dof.iter_mut().enumerate() {
                *w = (i as f64 * 0.37).sin() * 2.5;
            }
        }
        p.tau = 2.5;
        p.goals = vec![0.3, -0.8];
        p.r0 = 1.7;
        let text = params_to_string(&p).unwrap();
        assert!(text.contains("format_version = 1"));
        let back = parse_params(&text, Path::new("p.toml")).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn params_version_and_validation_enforced() {
        let p = PrimitiveParams::discrete(vec!["y".into()], 4);
        let text = params_to_string(&p).unwrap();
        let bumped = text.replace("format_version = 1", "format_version = 9");
        assert!(parse_params(&bumped, Path::new("v.toml")).is_err());
        let broken = text.replace("tau = 1.0", "tau = -1.0");
        assert!(parse_params(&broken, Path::new("t.toml")).is_err());
    }

    #[test]
    fn params_file_io() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prim.params");
        let p = PrimitiveParams::discrete(vec!["y".into()], 6);
        write_params(&p, &path).unwrap();
        let back = read_params(&path).unwrap();
        assert_eq!(back, p);
    }
}
