//! Gate-keeping potential of a small trade configuration, and how it falls
//! as a bypassing flow grows.

use econet::gkp::{gkp_all, gkp_series};
use econet::graph::{EdgeRecord, FlowNetwork};

fn network(bypass: f64, year: i32) -> FlowNetwork {
    let edges = [
        ("B", "A", 1.0),
        ("C", "A", 1.0),
        ("A", "D", 1.0),
        ("A", "E", 1.0),
        ("B", "D", bypass),
    ];
    FlowNetwork::from_records(edges.iter().map(|(s, t, w)| EdgeRecord::new(*s, *t, *w)))
        .expect("valid edges")
        .network
        .with_year(year)
}

fn main() {
    println!("node  gkp");
    for (node, g) in gkp_all(&network(1.0, 2010)) {
        println!("{node:<5} {g:.6}");
    }

    let years: Vec<FlowNetwork> = (0..5).map(|k| network(1.0 + 0.5 * k as f64, 2010 + k)).collect();
    let series = gkp_series(&years, &["A".to_string()]).expect("A present every year");
    println!("\nyear  gkp(A) with a growing B -> D bypass");
    for (y, g) in series.years.iter().zip(&series.values["A"]) {
        println!("{y}  {g:.6}");
    }
}
