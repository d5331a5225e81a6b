//! One-year forecast of a held-out panel year with the fitted coefficient
//! matrix as evolution operator.

use econet::mlr::{fit_gbopn, forecast, FitCriteria};
use econet::synth::{synth_panel, PanelSpec};

fn main() {
    for noise in [0.0, 0.01, 0.05] {
        let spec = PanelSpec {
            years: 11,
            noise,
            ..PanelSpec::default()
        };
        let (panel, _) = synth_panel(&spec, 3).expect("valid spec");
        let net = fit_gbopn(&panel, &FitCriteria::default(), true).expect("enough years");
        let from = net.fit_last_year;
        let f = forecast(&net, &panel, from).expect("year in panel");
        println!(
            "noise {:>4.1}%: forecast {} indicators for {}, median relative error {:.3e}",
            100.0 * noise,
            f.entries.len(),
            from + 1,
            f.median_error().unwrap_or(f64::NAN)
        );
    }
}
