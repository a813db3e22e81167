//! Routing a formula to an external DIMACS solver binary, for differential
//! testing. The binary is taken from `STITCH_EXTERNAL_SOLVER` and is run as
//! `<binary> <file.cnf>`; the verdict is read from the SAT-competition
//! `s ...` line or, failing that, the 10/20 exit code convention.

use std::io::Write;
use std::process::Command;

use crate::cnf::Cnf;
use crate::dimacs::export_dimacs;

pub const EXTERNAL_SOLVER_ENV: &str = "STITCH_EXTERNAL_SOLVER";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExternalVerdict {
    Sat,
    Unsat,
    Unknown,
}

pub fn external_solver_from_env() -> Option<String> {
    std::env::var(EXTERNAL_SOLVER_ENV)
        .ok()
        .filter(|s| !s.trim().is_empty())
}

pub fn solve_external(cnf: &Cnf, binary: &str) -> std::io::Result<ExternalVerdict> {
    let dir = std::env::temp_dir();
    let path = dir.join(format!(
        "stitch-{}-{}.cnf",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    ));
    {
        let mut f = std::fs::File::create(&path)?;
        f.write_all(export_dimacs(cnf).as_bytes())?;
    }
    let out = Command::new(binary).arg(&path).output();
    let _ = std::fs::remove_file(&path);
    let out = out?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    for line in stdout.lines() {
        let t = line.trim();
        if t == "s SATISFIABLE" {
            return Ok(ExternalVerdict::Sat);
        }
        if t == "s UNSATISFIABLE" {
            return Ok(ExternalVerdict::Unsat);
        }
    }
    Ok(match out.status.code() {
        Some(10) => ExternalVerdict::Sat,
        Some(20) => ExternalVerdict::Unsat,
        _ => ExternalVerdict::Unknown,
    })
}
