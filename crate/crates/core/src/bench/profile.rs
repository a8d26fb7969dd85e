use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::BenchRecord;
use crate::error::{Error, Result};

/// Cost used to compare solvers on a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Iters,
    Fevals,
    Time,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Iters => "iters",
            Metric::Fevals => "fevals",
            Metric::Time => "time",
        }
    }

    /// Counts are floored at one unit and times at a nanosecond so that a
    /// zero cost cannot produce 0/0 ratios.
    fn cost(self, r: &BenchRecord) -> f64 {
        match self {
            Metric::Iters => (r.iters as f64).max(1.0),
            Metric::Fevals => (r.fevals as f64).max(1.0),
            Metric::Time => r.wall_time_s.max(1e-9),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iters" => Ok(Metric::Iters),
            "fevals" => Ok(Metric::Fevals),
            "time" => Ok(Metric::Time),
            _ => Err(Error::InvalidArgument(format!("unknown metric `{s}` (iters, fevals, time)"))),
        }
    }
}

/// ρ_s(τ) as a right-continuous step function through `points`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub solver: String,
    /// (τ, ρ(τ)) with τ strictly increasing from 1.
    pub points: Vec<(f64, f64)>,
}

impl ProfileCurve {
    pub fn rho(&self, tau: f64) -> f64 {
        self.points.iter().take_while(|(t, _)| *t <= tau).last().map_or(0.0, |p| p.1)
    }

    /// ρ(τ → ∞).
    pub fn limit(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub metric: Metric,
    pub curves: Vec<ProfileCurve>,
    pub warnings: Vec<String>,
}

impl Profile {
    pub fn curve(&self, solver: &str) -> Option<&ProfileCurve> {
        self.curves.iter().find(|c| c.solver == solver)
    }
}

/// Dolan–Moré profiles. r_{p,s} = cost_{p,s}/min over successful solvers,
/// failures count as ∞, and ρ_s(τ) = |{p : r_{p,s} ≤ τ}|/|P| with a
/// breakpoint at τ = 1 and at every distinct finite ratio of s.
pub fn performance_profile(records: &[BenchRecord], metric: Metric) -> Result<Profile> {
    let problems: BTreeSet<&str> = records.iter().map(|r| r.problem.as_str()).collect();
    let solvers: BTreeSet<&str> = records.iter().map(|r| r.solver.as_str()).collect();
    if problems.is_empty() {
        return Err(Error::InvalidArgument("performance profile needs at least one problem".into()));
    }
    if solvers.len() < 2 {
        return Err(Error::InvalidArgument("performance profile needs at least two solvers".into()));
    }
    let mut cost: BTreeMap<(&str, &str), Option<f64>> = BTreeMap::new();
    for r in records {
        let c = r.solved().then(|| metric.cost(r));
        if cost.insert((r.problem.as_str(), r.solver.as_str()), c).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate record for ({}, {})", r.problem, r.solver)));
        }
    }
    for p in &problems {
        for s in &solvers {
            if !cost.contains_key(&(*p, *s)) {
                return Err(Error::InvalidArgument(format!("missing record for ({p}, {s})")));
            }
        }
    }

    let mut warnings = Vec::new();
    let mut ratios: BTreeMap<&str, Vec<f64>> = solvers.iter().map(|s| (*s, Vec::new())).collect();
    for p in &problems {
        let best = solvers.iter().filter_map(|s| cost[&(*p, *s)]).fold(f64::INFINITY, f64::min);
        if best.is_infinite() {
            warnings.push(format!("no solver succeeded on {p}"));
        }
        for s in &solvers {
            let r = match cost[&(*p, *s)] {
                Some(c) if best.is_finite() => c / best,
                _ => f64::INFINITY,
            };
            ratios.get_mut(s).expect("solver key").push(r);
        }
    }

    let np = problems.len() as f64;
    let curves = ratios
        .into_iter()
        .map(|(solver, mut r)| {
            r.sort_by(f64::total_cmp);
            let mut taus: Vec<f64> = vec![1.0];
            taus.extend(r.iter().copied().filter(|t| t.is_finite() && *t > 1.0));
            taus.dedup();
            let points =
                taus.into_iter().map(|tau| (tau, r.iter().filter(|x| **x <= tau).count() as f64 / np)).collect();
            ProfileCurve { solver: solver.to_string(), points }
        })
        .collect();
    Ok(Profile { metric, curves, warnings })
}

/// τ starts at 1 and increases strictly; ρ is nondecreasing within [0, 1].
pub fn check_curve(c: &ProfileCurve) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidArgument(format!("curve {}: {m}", c.solver)));
    let Some(first) = c.points.first() else {
        return bad("no points".into());
    };
    if first.0 != 1.0 {
        return bad(format!("first τ = {} ≠ 1", first.0));
    }
    for (t, r) in &c.points {
        if !(0.0..=1.0).contains(r) {
            return bad(format!("ρ({t}) = {r} outside [0, 1]"));
        }
    }
    for w in c.points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return bad(format!("τ not increasing at {}", w[1].0));
        }
        if w[1].1 < w[0].1 {
            return bad(format!("ρ decreases at τ = {}", w[1].0));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::RunStatus;

    fn rec(p: &str, s: &str, iters: Option<usize>) -> BenchRecord {
        let mut r = BenchRecord::failed(p, s);
        if let Some(i) = iters {
            r.status = RunStatus::Converged;
            r.iters = i;
        }
        r
    }

    #[test]
    fn hand_enumerated_two_by_two() {
        let recs =
            [rec("p1", "s1", Some(1)), rec("p1", "s2", Some(2)), rec("p2", "s1", None), rec("p2", "s2", Some(1))];
        let prof = performance_profile(&recs, Metric::Iters).unwrap();
        assert_eq!(prof.curve("s1").unwrap().points, vec![(1.0, 0.5)]);
        assert_eq!(prof.curve("s2").unwrap().points, vec![(1.0, 0.5), (2.0, 1.0)]);
        assert!(prof.warnings.is_empty());
    }

    #[test]
    fn all_fail_warns() {
        let recs = [rec("p", "a", None), rec("p", "b", None)];
        let prof = performance_profile(&recs, Metric::Fevals).unwrap();
        assert!(prof.curves.iter().all(|c| c.limit() == 0.0));
        assert_eq!(prof.warnings.len(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(performance_profile(&[rec("p", "a", Some(1))], Metric::Iters).is_err());
        let dup = [rec("p", "a", Some(1)), rec("p", "a", Some(2)), rec("p", "b", Some(1))];
        assert!(performance_profile(&dup, Metric::Iters).is_err());
        let missing = [rec("p", "a", Some(1)), rec("q", "b", Some(1))];
        assert!(performance_profile(&missing, Metric::Iters).is_err());
    }
}
