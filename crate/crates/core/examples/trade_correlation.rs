//! Correlation of GDP growth with gate-keeping potential, imports and
//! exports on synthetic trade networks.

use econet::gkp::{correlation_report, GdpChange};
use econet::synth::{synth_trade, TradeSpec};

fn main() {
    let data = synth_trade(&TradeSpec::default(), 4).expect("valid spec");
    println!("hub {} gkp by year:", data.truth.hub);
    for (y, g) in &data.truth.hub_gkp {
        println!("  {y} {g:.4}");
    }
    let fmt = |x: Option<f64>| x.map_or("   -   ".to_string(), |v| format!("{v:+.4}"));
    println!("\ncountry  corr_gkp  corr_imp  corr_exp");
    for row in correlation_report(&data.networks, &data.gdp, GdpChange::Percentage).expect("aligned data") {
        println!(
            "{:<8} {:>8}  {:>8}  {:>8}",
            row.country,
            fmt(row.corr_gkp),
            fmt(row.corr_imports),
            fmt(row.corr_exports)
        );
    }
}
