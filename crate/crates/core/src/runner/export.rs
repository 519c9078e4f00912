//! CSV export and import.
//!
//! Values are written with 17 significant digits (`{:.16e}`), which is
//! enough for every `f64` to survive a round trip unchanged. Lines end in
//! `\n`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::engine::{Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::graph::AgentId;
use crate::model::HypothesisId;

pub const TRAJECTORY_HEADER: &str = "t,agent,hypothesis,log_belief";
pub const METRICS_HEADER: &str = "t,agent,hypothesis,rate";

/// Format a float so that parsing it back yields the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// One row per recorded `(t, agent, hypothesis)` of the public beliefs.
pub fn write_trajectory<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (idx, &t) in traj.rounds().iter().enumerate() {
        for i in 0..traj.n_agents() {
            for (h, &v) in traj.public_log(idx, i).iter().enumerate() {
                writeln!(w, "{t},{i},{h},{}", fmt_f64(v))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_file(traj: &Trajectory, path: &Path) -> Result<()> {
    write_trajectory(traj, create(path)?)
}

/// Local beliefs in the trajectory schema; `false` when they were not recorded.
pub fn write_local_file(traj: &Trajectory, path: &Path) -> Result<bool> {
    if traj.local_log(0, 0).is_none() {
        return Ok(false);
    }
    let mut w = create(path)?;
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (idx, &t) in traj.rounds().iter().enumerate() {
        for i in 0..traj.n_agents() {
            for (h, &v) in traj.local_log(idx, i).unwrap_or_default().iter().enumerate() {
                writeln!(w, "{t},{i},{h},{}", fmt_f64(v))?;
            }
        }
    }
    w.flush()?;
    Ok(true)
}

/// Stored neighbor estimates as `t,agent,neighbor,hypothesis,log_belief`.
pub fn write_estimates_file(traj: &Trajectory, path: &Path) -> Result<bool> {
    if traj.estimates(0, 0).is_none() {
        return Ok(false);
    }
    let mut w = create(path)?;
    writeln!(w, "t,agent,neighbor,hypothesis,log_belief")?;
    for (idx, &t) in traj.rounds().iter().enumerate() {
        for i in 0..traj.n_agents() {
            for (j, est) in traj.estimates(idx, i).into_iter().flatten() {
                for (h, &v) in est.log_probs().iter().enumerate() {
                    writeln!(w, "{t},{i},{j},{h},{}", fmt_f64(v))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(true)
}

/// Shared hypotheses as `t,agent,hypothesis` (agent is the sender).
pub fn write_tau_file(traj: &Trajectory, path: &Path) -> Result<bool> {
    if traj.taus(0).is_none() {
        return Ok(false);
    }
    let mut w = create(path)?;
    writeln!(w, "t,agent,hypothesis")?;
    for (idx, &t) in traj.rounds().iter().enumerate() {
        for (j, h) in traj.taus(idx).unwrap_or_default().iter().enumerate() {
            writeln!(w, "{t},{j},{}", h.0)?;
        }
    }
    w.flush()?;
    Ok(true)
}

/// Rejection rates `-log β / t` for every false hypothesis at every recorded `t >= 1`.
pub fn write_metrics<W: Write>(traj: &Trajectory, h_true: HypothesisId, mut w: W) -> Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for (idx, &t) in traj.rounds().iter().enumerate().filter(|(_, &t)| t >= 1) {
        for i in 0..traj.n_agents() {
            for (h, &v) in traj.public_log(idx, i).iter().enumerate() {
                if h != h_true.0 {
                    writeln!(w, "{t},{i},{h},{}", fmt_f64(-v / t as f64))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_file(traj: &Trajectory, h_true: HypothesisId, path: &Path) -> Result<()> {
    write_metrics(traj, h_true, create(path)?)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path)?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn check_header(rdr: &mut csv::Reader<File>, expected: &str, path: &Path) -> Result<csv::StringRecord> {
    let headers = rdr.headers().map_err(|e| data(path, e))?.clone();
    let got = headers.iter().collect::<Vec<_>>().join(",");
    if !expected.is_empty() && got != expected {
        return Err(Error::Data(format!("{}: header `{got}`, expected `{expected}`", path.display())));
    }
    Ok(headers)
}

fn data(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, path: &Path) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(k).ok_or_else(|| data(path, format!("line {line}: missing column {}", k + 1)))?;
    raw.parse().map_err(|_| data(path, format!("line {line}: cannot parse `{raw}`")))
}

/// Rebuild a trajectory of public beliefs from a trajectory CSV.
///
/// Rows must cover a full `round x agent x hypothesis` grid in the order
/// written by [`write_trajectory`].
pub fn read_trajectory_file(path: &Path) -> Result<Trajectory> {
    let mut rdr = reader(path)?;
    check_header(&mut rdr, TRAJECTORY_HEADER, path)?;
    let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data(path, e))?;
        rows.push((field(&rec, 0, path)?, field(&rec, 1, path)?, field(&rec, 2, path)?, field(&rec, 3, path)?));
    }
    let n_agents = rows.iter().map(|r| r.1).max().map_or(0, |a| a + 1);
    let n_hyp = rows.iter().map(|r| r.2).max().map_or(0, |h| h + 1);
    let mut rounds: Vec<usize> = rows.iter().map(|r| r.0).collect();
    rounds.dedup();
    let per_round = n_agents * n_hyp;
    if rows.len() != rounds.len() * per_round {
        return Err(data(path, format!("{} rows do not form a full grid", rows.len())));
    }
    for (k, &(t, i, h, _)) in rows.iter().enumerate() {
        let expect = (rounds[k / per_round], (k % per_round) / n_hyp, k % n_hyp);
        if (t, i, h) != expect {
            return Err(data(path, format!("row {} is ({t},{i},{h}), expected {expect:?}", k + 2)));
        }
    }
    let meta = TrajectoryMeta {
        config_digest: String::new(),
        master_seed: 0,
        h_true: HypothesisId(0),
        mode: String::new(),
        tau_mode: String::new(),
        horizon: rounds.last().copied().unwrap_or(0),
        wall_time_secs: 0.0,
    };
    let public = rows.into_iter().map(|r| r.3).collect();
    Trajectory::from_public(n_agents, n_hyp, rounds, public, meta)
}

/// Metrics CSV rows as `(t, agent, hypothesis, rate)`.
pub fn read_metrics_file(path: &Path) -> Result<Vec<(usize, AgentId, HypothesisId, f64)>> {
    let mut rdr = reader(path)?;
    check_header(&mut rdr, METRICS_HEADER, path)?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| data(path, e))?;
            Ok((
                field(&rec, 0, path)?,
                field(&rec, 1, path)?,
                HypothesisId(field(&rec, 2, path)?),
                field(&rec, 3, path)?,
            ))
        })
        .collect()
}

/// One mode's series for every agent in a comparison file.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRows {
    pub mode: String,
    pub rounds: Vec<usize>,
    /// `[round][agent]` log-belief on the true hypothesis.
    pub log_true: Vec<Vec<f64>>,
    /// `[round][agent]` log-belief on the plotted false hypothesis.
    pub log_plot: Vec<Vec<f64>>,
}

/// Parsed comparison file.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub h_true: HypothesisId,
    pub h_plot: HypothesisId,
    pub n_agents: usize,
    pub modes: Vec<CompareRows>,
}

impl CompareTable {
    /// Build from per-mode trajectories sharing one instance.
    pub fn from_trajectories(runs: &[(String, &Trajectory)], h_true: HypothesisId, h_plot: HypothesisId) -> Self {
        let n_agents = runs.first().map_or(0, |r| r.1.n_agents());
        let modes = runs
            .iter()
            .map(|(mode, traj)| {
                let per_round = |h: HypothesisId| -> Vec<Vec<f64>> {
                    (0..traj.n_recorded())
                        .map(|idx| (0..n_agents).map(|i| traj.log_belief(idx, i, h)).collect())
                        .collect()
                };
                CompareRows {
                    mode: mode.clone(),
                    rounds: traj.rounds().to_vec(),
                    log_true: per_round(h_true),
                    log_plot: per_round(h_plot),
                }
            })
            .collect();
        Self { h_true, h_plot, n_agents, modes }
    }

    pub fn header(&self) -> String {
        format!("mode,t,agent,log_belief_h{},log_belief_h{}", self.h_true.0, self.h_plot.0)
    }

    /// Rows are `modes x rounds x agents`.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        for m in &self.modes {
            for (idx, &t) in m.rounds.iter().enumerate() {
                for i in 0..self.n_agents {
                    writeln!(w, "{},{t},{i},{},{}", m.mode, fmt_f64(m.log_true[idx][i]), fmt_f64(m.log_plot[idx][i]))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        self.write(create(path)?)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let mut rdr = reader(path)?;
        let headers = check_header(&mut rdr, "", path)?;
        let cols: Vec<&str> = headers.iter().collect();
        let hyp = |c: Option<&&str>| -> Result<HypothesisId> {
            c.and_then(|s| s.strip_prefix("log_belief_h"))
                .and_then(|s| s.parse().ok())
                .map(HypothesisId)
                .ok_or_else(|| data(path, format!("unexpected header `{}`", cols.join(","))))
        };
        if cols.len() != 5 || cols[..3] != ["mode", "t", "agent"] {
            return Err(data(path, format!("unexpected header `{}`", cols.join(","))));
        }
        let (h_true, h_plot) = (hyp(cols.get(3))?, hyp(cols.get(4))?);
        let mut modes: Vec<CompareRows> = Vec::new();
        let mut n_agents = 0;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| data(path, e))?;
            let mode = rec.get(0).unwrap_or_default();
            let (t, i): (usize, usize) = (field(&rec, 1, path)?, field(&rec, 2, path)?);
            let (lt, lp): (f64, f64) = (field(&rec, 3, path)?, field(&rec, 4, path)?);
            if modes.last().is_none_or(|m| m.mode != mode) {
                modes.push(CompareRows { mode: mode.to_string(), rounds: vec![], log_true: vec![], log_plot: vec![] });
            }
            let m = modes.last_mut().expect("just pushed");
            if m.rounds.last() != Some(&t) {
                m.rounds.push(t);
                m.log_true.push(Vec::new());
                m.log_plot.push(Vec::new());
            }
            let (a, b) = (m.log_true.last_mut().expect("row"), m.log_plot.last_mut().expect("row"));
            if a.len() != i {
                return Err(data(path, format!("mode {mode}, t={t}: agent {i} out of order")));
            }
            a.push(lt);
            b.push(lp);
            n_agents = n_agents.max(i + 1);
        }
        for m in &modes {
            if m.log_true.iter().any(|r| r.len() != n_agents) {
                return Err(data(path, format!("mode {}: incomplete rounds", m.mode)));
            }
        }
        Ok(Self { h_true, h_plot, n_agents, modes })
    }
}
