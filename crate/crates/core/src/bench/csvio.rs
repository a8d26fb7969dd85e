use std::io::{Read, Write};

use super::profile::ProfileCurve;
use super::BenchRecord;
use crate::error::{Error, Result};
use crate::solvers::RunResult;

pub const TRACE_HEADER: [&str; 14] = [
    "iter",
    "f",
    "gnorm",
    "step",
    "ys",
    "trace_B",
    "logdet_B",
    "trace_L",
    "logdet_L",
    "cond2_residual",
    "psi",
    "powell_ratio",
    "nfev",
    "branch",
];
const BENCH_HEADER: [&str; 8] = ["problem", "solver", "status", "iters", "fevals", "time_s", "f_final", "gnorm_final"];
const PROFILE_HEADER: [&str; 3] = ["solver", "tau", "rho"];

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse { offset: p.byte() as usize, msg: e.to_string() },
        None => Error::Io(e.to_string()),
    }
}

/// Shortest round-trip text, switching to exponent form for very large or
/// very small magnitudes.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One row per iteration, preceded by an `iter = 0` row for x_0.
pub fn write_trace<W: Write>(w: W, r: &RunResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER).map_err(csv_err)?;
    let first = [
        "0".to_string(),
        num(r.f0),
        num(r.gnorm0),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        "1".to_string(),
        String::new(),
    ];
    out.write_record(&first).map_err(csv_err)?;
    for it in &r.iterations {
        out.write_record(&[
            it.k.to_string(),
            num(it.f),
            num(it.gnorm),
            num(it.step),
            num(it.ys),
            opt(it.trace_b),
            opt(it.logdet_b),
            opt(it.trace_l),
            opt(it.logdet_l),
            opt(it.cond2_residual),
            opt(it.psi),
            opt(it.powell_ratio),
            it.n_fev.to_string(),
            it.branch.map(|b| b.as_str().to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_bench<W: Write>(w: W, records: &[BenchRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BENCH_HEADER).map_err(csv_err)?;
    for r in records {
        out.write_record(&[
            r.problem.clone(),
            r.solver.clone(),
            r.status.as_str().to_string(),
            r.iters.to_string(),
            r.fevals.to_string(),
            num(r.wall_time_s),
            num(r.f_final),
            num(r.gnorm_final),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn check_header(got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    if got.iter().ne(want.iter().copied()) {
        return Err(Error::Parse {
            offset: 0,
            msg: format!("expected header `{}`, got `{}`", want.join(","), got.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let offset = rec.position().map_or(0, |p| p.byte() as usize);
    let raw = rec.get(i).ok_or_else(|| Error::Parse { offset, msg: format!("missing column {name}") })?;
    raw.trim().parse().map_err(|_| Error::Parse { offset, msg: format!("bad {name} value `{raw}`") })
}

pub fn read_bench<R: Read>(r: R) -> Result<Vec<BenchRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    check_header(rd.headers().map_err(csv_err)?, &BENCH_HEADER)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let status: String = field(&rec, 2, "status")?;
        out.push(BenchRecord {
            problem: field(&rec, 0, "problem")?,
            solver: field(&rec, 1, "solver")?,
            status: status.parse().map_err(|_| Error::Parse {
                offset: rec.position().map_or(0, |p| p.byte() as usize),
                msg: format!("unknown status `{status}`"),
            })?,
            iters: field(&rec, 3, "iters")?,
            fevals: field(&rec, 4, "fevals")?,
            wall_time_s: field(&rec, 5, "time_s")?,
            f_final: field(&rec, 6, "f_final")?,
            gnorm_final: field(&rec, 7, "gnorm_final")?,
        });
    }
    Ok(out)
}

pub fn write_profile<W: Write>(w: W, curves: &[ProfileCurve]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PROFILE_HEADER).map_err(csv_err)?;
    for c in curves {
        for (tau, rho) in &c.points {
            out.write_record(&[c.solver.clone(), num(*tau), num(*rho)]).map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Curves in order of first appearance.
pub fn read_profile<R: Read>(r: R) -> Result<Vec<ProfileCurve>> {
    let mut rd = csv::Reader::from_reader(r);
    check_header(rd.headers().map_err(csv_err)?, &PROFILE_HEADER)?;
    let mut curves: Vec<ProfileCurve> = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let solver: String = field(&rec, 0, "solver")?;
        let point = (field(&rec, 1, "tau")?, field(&rec, 2, "rho")?);
        match curves.iter_mut().find(|c| c.solver == solver) {
            Some(c) => c.points.push(point),
            None => curves.push(ProfileCurve { solver, points: vec![point] }),
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, 0.1, 1e-20, 123456.789, -3.5e17, f64::INFINITY, 2.0f64.sqrt()] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert!(num(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn bench_header_is_checked() {
        let bad = "problem,solver\nA,b\n";
        assert!(matches!(read_bench(bad.as_bytes()), Err(Error::Parse { .. })));
    }
}
