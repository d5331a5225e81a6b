//! Threshold sweep of a two-scale network and its percolation point.

use econet::graph::{detect_percolation_point, percolation_sweep, ThresholdGrid};
use econet::synth::planted_two_scale;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // heavy core in [100, 1e4], periphery attached at weight 10
    let net = planted_two_scale(&mut rng, 20, 60, 0.25, 1.0);
    let grid = ThresholdGrid::log(1.0, 1000.0, 10);
    let profile = percolation_sweep(&net, &grid).expect("valid grid");

    println!("{:>10} {:>6} {:>6} {:>9}", "threshold", "nodes", "edges", "density");
    for e in &profile.entries {
        println!(
            "{:>10.3} {:>6} {:>6} {:>9.5}",
            e.threshold, e.scc_nodes, e.scc_edges, e.scc_density
        );
    }
    let point = detect_percolation_point(&profile).expect("component shrinks");
    println!("\npercolation point: {point:.3}");
}
