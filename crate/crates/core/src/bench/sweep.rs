use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use super::runs::{DataSource, ProblemSpec, RunSpec};
use super::BenchRecord;
use crate::error::{Error, Result};
use crate::solvers::{LineSearchKind, Method, SolverConfig, Strategy, Variant};

const KEYS: &[&str] = &[
    "problem",
    "dim",
    "cond",
    "seed",
    "rank",
    "rows",
    "cols",
    "data_rank",
    "noise",
    "data_seed",
    "idx_images",
    "idx_labels",
    "class",
    "solver",
    "phi",
    "scaled",
    "variant",
    "strategy",
    "toll_rel",
    "lbfgs_memory",
    "stop_tol",
    "max_iters",
    "max_fevals",
    "rel_func_tol",
    "ls_ftol",
    "ls_gtol",
    "ls_xtol",
    "ls_stpmin",
    "ls_stpmax",
    "ls_maxfev",
    "exact_ls",
];

fn invalid(msg: String) -> Error {
    Error::InvalidArgument(msg)
}

fn get<T: FromStr>(m: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match m.get(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| invalid(format!("bad value `{v}` for {key}"))),
    }
}

fn get_bool(m: &BTreeMap<String, String>, key: &str) -> Result<bool> {
    match m.get(key).map(|v| v.to_ascii_lowercase()) {
        None => Ok(false),
        Some(v) => match v.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(invalid(format!("bad boolean `{v}` for {key}"))),
        },
    }
}

impl RunSpec {
    /// Builds a run from `key = value` settings (the sweep-file keys).
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<Self> {
        let mut m = BTreeMap::new();
        for (k, v) in pairs {
            let k = k.as_ref().trim().to_ascii_lowercase();
            if !KEYS.contains(&k.as_str()) {
                return Err(invalid(format!("unknown key `{k}`")));
            }
            m.insert(k, v.as_ref().trim().to_string());
        }
        Self::from_map(&m)
    }

    fn from_map(m: &BTreeMap<String, String>) -> Result<Self> {
        let seed: u64 = get(m, "seed")?.unwrap_or(0);
        let pname = m.get("problem").ok_or_else(|| invalid("missing key `problem`".into()))?;
        let problem = match pname.to_ascii_lowercase().as_str() {
            "quad" => ProblemSpec::Quadratic {
                n: get(m, "dim")?.ok_or_else(|| invalid("quad needs `dim`".into()))?,
                cond: get(m, "cond")?.unwrap_or(100.0),
                seed,
            },
            "lowrank" => {
                let data = match m.get("idx_images") {
                    Some(path) => DataSource::Idx {
                        images: PathBuf::from(path),
                        labels: m.get("idx_labels").map(PathBuf::from),
                        class: get(m, "class")?,
                    },
                    None => DataSource::Synthetic {
                        rows: get(m, "rows")?.unwrap_or(200),
                        cols: get(m, "cols")?.unwrap_or(100),
                        rank: get(m, "data_rank")?.unwrap_or(10),
                        noise: get(m, "noise")?.unwrap_or(1e-2),
                        seed: get(m, "data_seed")?.unwrap_or(seed),
                    },
                };
                ProblemSpec::LowRank { data, k: get(m, "rank")?.unwrap_or(8), seed }
            }
            _ => ProblemSpec::Named {
                name: pname.clone(),
                n: get(m, "dim")?.ok_or_else(|| invalid(format!("{pname} needs `dim`")))?,
            },
        };

        let method: Method = m.get("solver").ok_or_else(|| invalid("missing key `solver`".into()))?.parse()?;
        let mut c = SolverConfig::for_method(method);
        if let Some(v) = get(m, "phi")? {
            c.phi = v;
        }
        c.scaled = get_bool(m, "scaled")?;
        if let Some(v) = m.get("variant") {
            c.variant = match v.to_ascii_lowercase().as_str() {
                "s" | "secant" => Variant::Secant,
                "ns" | "non-secant" => Variant::NonSecant,
                _ => return Err(invalid(format!("unknown variant `{v}` (s, ns)"))),
            };
        }
        if let Some(v) = m.get("strategy") {
            c.strategy = match v.to_ascii_lowercase().as_str() {
                "adaptive" => Strategy::Adaptive,
                "dense" => Strategy::Dense,
                _ => return Err(invalid(format!("unknown strategy `{v}` (adaptive, dense)"))),
            };
        }
        macro_rules! set {
            ($key:literal, $field:expr) => {
                if let Some(v) = get(m, $key)? {
                    $field = v;
                }
            };
        }
        set!("toll_rel", c.toll_rel);
        set!("lbfgs_memory", c.lbfgs_memory);
        set!("stop_tol", c.stop_tol);
        set!("max_iters", c.max_iters);
        set!("max_fevals", c.max_fevals);
        set!("rel_func_tol", c.rel_func_tol);
        set!("ls_ftol", c.ls.ftol);
        set!("ls_gtol", c.ls.gtol);
        set!("ls_xtol", c.ls.xtol);
        set!("ls_stpmin", c.ls.stpmin);
        set!("ls_stpmax", c.ls.stpmax);
        set!("ls_maxfev", c.ls.maxfev);
        if get_bool(m, "exact_ls")? {
            c.line_search = LineSearchKind::Exact;
        }
        c.validate()?;
        Ok(RunSpec { problem, config: c })
    }
}

/// Parses a sweep file: `[defaults]` and `[run]` sections of `key = value`
/// lines, `#` comments. Each `[run]` section, merged over the defaults,
/// expands into the product of its comma-separated values.
pub fn parse_sweep_config(text: &str) -> Result<Vec<RunSpec>> {
    enum Section {
        None,
        Defaults,
        Run(usize),
    }
    let mut defaults: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut runs: Vec<(usize, BTreeMap<String, Vec<String>>)> = Vec::new();
    let mut section = Section::None;
    let mut offset = 0;
    for (lineno, raw) in text.split_inclusive('\n').enumerate() {
        let line_offset = offset;
        offset += raw.len();
        let perr = |msg: String| Error::Parse { offset: line_offset, msg: format!("line {}: {msg}", lineno + 1) };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name.trim() {
                "defaults" => Section::Defaults,
                "run" => {
                    runs.push((line_offset, BTreeMap::new()));
                    Section::Run(runs.len() - 1)
                }
                other => return Err(perr(format!("unknown section `[{other}]`"))),
            };
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(perr(format!("expected `key = value`, got `{line}`")));
        };
        let key = k.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(perr(format!("unknown key `{key}`")));
        }
        let values: Vec<String> = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        if values.is_empty() {
            return Err(perr(format!("empty value for `{key}`")));
        }
        let target = match section {
            Section::None => return Err(perr("setting outside a section".into())),
            Section::Defaults => &mut defaults,
            Section::Run(i) => &mut runs[i].1,
        };
        if target.insert(key.clone(), values).is_some() {
            return Err(perr(format!("duplicate key `{key}`")));
        }
    }

    let mut specs = Vec::new();
    for (at, run) in runs {
        let mut merged = defaults.clone();
        merged.extend(run);
        let mut combos: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
        for (k, vals) in &merged {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    vals.iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert(k.clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        for c in combos {
            specs.push(RunSpec::from_map(&c).map_err(|e| Error::Parse { offset: at, msg: e.to_string() })?);
        }
    }
    Ok(specs)
}

/// Runs every `RunSpec` on the rayon pool. Records come back sorted by
/// (problem, solver); runs that error out are recorded as failures.
pub fn run_sweep(specs: &[RunSpec]) -> Vec<BenchRecord> {
    let mut records: Vec<BenchRecord> = specs
        .par_iter()
        .map(|spec| {
            let (problem, solver) = (spec.problem.label(), spec.solver_label());
            match spec.execute() {
                Ok((_, r)) => BenchRecord::from_run(problem, solver, &r),
                Err(_) => BenchRecord::failed(problem, solver),
            }
        })
        .collect();
    records.sort_by(|a, b| (&a.problem, &a.solver).cmp(&(&b.problem, &b.solver)));
    records
}
