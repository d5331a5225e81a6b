//! Stepwise fit of a synthetic balance-of-payments panel and the tracking
//! centralities of the resulting network.

use econet::mlr::{fit_gbopn, tracking_centrality, FitCriteria, RowStatus};
use econet::synth::{synth_panel, PanelSpec};

fn main() {
    let spec = PanelSpec {
        noise_rows: 2,
        planted: 28,
        ..PanelSpec::default()
    };
    let (panel, truth) = synth_panel(&spec, 1).expect("valid spec");
    let net = fit_gbopn(&panel, &FitCriteria::default(), false).expect("valid criteria");

    let s = net.summary();
    println!(
        "{} rows: {} accepted, {} rejected, {} unfittable; mean error {:.4}",
        s.total,
        s.accepted,
        s.rejected,
        s.unfittable,
        s.mean_error.unwrap_or(f64::NAN)
    );

    println!("\nplanted vs fitted (first 8):");
    for rel in truth.relations.iter().take(8) {
        let row = net.row(&rel.regressand).expect("row exists");
        let fitted = match row.regressors.as_slice() {
            [g] => format!("{} beta {:.4}", g.indicator, g.beta),
            regs => format!("{} regressors", regs.len()),
        };
        println!(
            "  {} <- {} beta {:.4}  | {}",
            rel.regressand, rel.regressor, rel.beta, fitted
        );
    }
    for id in &truth.noise_rows {
        let row = net.row(id).expect("row exists");
        let status = if row.status == RowStatus::Accepted {
            "accepted"
        } else {
            "rejected"
        };
        println!("noise row {id}: {status} ({})", row.reason.as_deref().unwrap_or("-"));
    }

    let tracking = tracking_centrality(&net, &panel.sizes()).expect("sizes cover all rows");
    let mut nodes = tracking.nodes.clone();
    nodes.sort_by(|a, b| b.tracking.total_cmp(&a.tracking));
    println!("\nhighest tracking centrality:");
    for n in nodes.iter().take(5) {
        println!(
            "  {:<18} T = {:>10.1}  S = {:>8.1}",
            n.indicator.to_string(),
            n.tracking,
            n.size
        );
    }
}
