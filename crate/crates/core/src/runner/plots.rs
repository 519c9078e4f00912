//! Belief-evolution and rejection-rate charts for a mode comparison.

use super::export::CompareTable;
use super::svg::LinePlot;
use crate::graph::AgentId;

/// `β_{agent,t}(h_true)` per mode on a log axis.
pub fn belief_plot(table: &CompareTable, agent: AgentId, seed: u64) -> LinePlot {
    let mut plot = LinePlot::new(
        format!("Belief on true hypothesis h{}, agent {agent}, seed {seed}", table.h_true.0),
        "round t",
        format!("belief on h{}", table.h_true.0),
    )
    .log_y();
    for m in &table.modes {
        let pts = m.rounds.iter().zip(&m.log_true).map(|(&t, row)| (t as f64, row[agent].exp())).collect();
        plot = plot.series(&m.mode, pts);
    }
    plot
}

/// `r_{agent,t}(h_plot)` per mode with the network-wide bound as a dashed line.
pub fn rate_plot(table: &CompareTable, agent: AgentId, bound: f64, seed: u64) -> LinePlot {
    let h = table.h_plot.0;
    let mut plot = LinePlot::new(
        format!("Rejection rate of h{h}, agent {agent}, seed {seed}"),
        "round t",
        format!("-ln belief(h{h}) / t  [nats/round]"),
    );
    for m in &table.modes {
        let pts = m
            .rounds
            .iter()
            .zip(&m.log_plot)
            .filter(|(&t, _)| t >= 1)
            .map(|(&t, row)| (t as f64, -row[agent] / t as f64))
            .collect();
        plot = plot.series(&m.mode, pts);
    }
    plot.reference(format!("max KL bound {bound:.4}"), bound)
}
