//! CSV files with fixed schemas. Floats carry 17 significant digits.

use std::fs::File;
use std::io;
use std::path::Path;

use crate::harness::{ProfileRow, ReportRow, ScalingTable};

pub const PROFILES_HEADER: [&str; 13] =
    ["N", "theta", "kappa", "alpha", "beta", "gamma", "kernel", "t", "x", "rho_mc", "rho_stderr", "rho_ode", "rho_pde"];
pub const CORRELATIONS_HEADER: [&str; 6] = ["t", "x", "y", "phi_mc", "phi_stderr", "phi_ode"];
pub const SPECTRUM_HEADER: [&str; 3] = ["n", "lambda", "residual"];
pub const REPORT_HEADER: [&str; 12] =
    ["experiment", "param-hash", "norm", "value", "tol", "pass", "N", "theta", "t", "stderr", "seed", "replicas"];

/// Round-trip exact: 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), fmt17)
}

fn writer(path: &Path, header: &[&str]) -> io::Result<csv::Writer<File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

pub fn write_profiles(path: &Path, rows: &[ProfileRow]) -> io::Result<()> {
    let mut w = writer(path, &PROFILES_HEADER)?;
    for r in rows {
        let p = &r.params;
        w.write_record([
            p.n.to_string(),
            fmt17(p.theta),
            fmt17(p.kappa),
            fmt17(p.alpha),
            fmt17(p.beta),
            opt(p.kernel.gamma()),
            p.kernel.label().to_string(),
            fmt17(r.t),
            r.x.to_string(),
            fmt17(r.rho_mc),
            fmt17(r.rho_stderr),
            opt(r.rho_ode),
            opt(r.rho_pde),
        ])?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub t: f64,
    pub x: usize,
    pub y: usize,
    pub phi_mc: f64,
    pub phi_stderr: f64,
    pub phi_ode: Option<f64>,
}

pub fn write_correlations(path: &Path, rows: &[CorrelationRow]) -> io::Result<()> {
    let mut w = writer(path, &CORRELATIONS_HEADER)?;
    for r in rows {
        w.write_record([fmt17(r.t), r.x.to_string(), r.y.to_string(), fmt17(r.phi_mc), fmt17(r.phi_stderr), opt(r.phi_ode)])?;
    }
    w.flush()
}

pub fn write_spectrum(path: &Path, modes: &[exh_core::pde::RobinMode]) -> io::Result<()> {
    let mut w = writer(path, &SPECTRUM_HEADER)?;
    for (i, m) in modes.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt17(m.lambda), fmt17(m.residual)])?;
    }
    w.flush()
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> io::Result<()> {
    let mut w = writer(path, &REPORT_HEADER)?;
    for r in rows {
        let pass = match r.pass {
            Some(true) => "true",
            Some(false) => "false",
            None => "na",
        };
        w.write_record([
            r.experiment.clone(),
            r.param_hash.clone(),
            r.norm.clone(),
            fmt17(r.value),
            fmt17(r.tol),
            pass.to_string(),
            r.n.to_string(),
            fmt17(r.theta),
            fmt17(r.t),
            fmt17(r.stderr),
            r.seed.to_string(),
            r.replicas.to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_scaling(path: &Path, table: &ScalingTable) -> io::Result<()> {
    let mut w = writer(path, &["theta", "N", "max_abs_phi"])?;
    for r in &table.rows {
        w.write_record([fmt17(r.theta), r.n.to_string(), fmt17(r.max_abs_phi)])?;
    }
    w.flush()
}

/// Arbitrary numeric table with the given header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    let mut w = writer(path, header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| fmt17(*v)))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(fmt17(f64::NAN), "nan");
    }

    #[test]
    fn spectrum_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("spectrum.csv");
        let modes = exh_core::pde::robin_eigenvalues(0.0, 2, 1e-15).unwrap();
        write_spectrum(&p, &modes).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "n,lambda,residual");
        assert!(lines.next().unwrap().starts_with("1,9.8696044010893"));
    }
}
