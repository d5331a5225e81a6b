//! Tracking paths through a fitted indicator network.

use econet::mlr::{fit_gbopn, path_track, FitCriteria, PathResult};
use econet::synth::{synth_panel, PanelSpec};

fn main() {
    let (panel, truth) = synth_panel(&PanelSpec::default(), 2).expect("valid spec");
    let net = fit_gbopn(&panel, &FitCriteria::default(), false).expect("valid criteria");
    for rel in truth.relations.iter().take(3) {
        match path_track(&net, &rel.regressor, &rel.regressand).expect("known ids") {
            PathResult::Found { path, error_bound } => {
                let hops: Vec<String> = path.iter().map(ToString::to_string).collect();
                println!("{}  (error bound {:.2e})", hops.join(" -> "), error_bound);
            }
            PathResult::NoPath => println!("{} cannot reach {}", rel.regressor, rel.regressand),
        }
    }
    let (a, b) = (&truth.relations[0].regressand, &truth.drivers[0]);
    let found = matches!(path_track(&net, a, b).expect("known ids"), PathResult::Found { .. });
    println!("{a} -> {b}: {}", if found { "path found" } else { "no path" });
}
