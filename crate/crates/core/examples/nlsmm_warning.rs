//! Density of yearly holdings networks, a memory-model fit of a derivative
//! series, and the warning signal against a GDP-based cap.

use econet::pin::{
    annual_reference, build_density_series, nlsmm_fit, resample_density, warning_signal, NlsmmOptions, WarningConfig,
};
use econet::synth::{synth_pin, PinSpec};

fn main() {
    let spec = PinSpec::default();
    let data = synth_pin(&spec, 11).expect("valid spec");
    let annual =
        build_density_series(&data.networks, 50.0 * spec.unit, Some(spec.first_year)).expect("component survives");
    let density = resample_density(&annual).expect("several years");
    for p in &annual.points {
        println!("{}  rho {:.5}  rho_bar {:.4}", p.time, p.rho, p.rho_bar);
    }

    let target = &data.derivatives[0];
    let opts = NlsmmOptions {
        v_ref: Some(spec.v_ref),
        ..NlsmmOptions::default()
    };
    let fit = nlsmm_fit(&density, target, &opts).expect("enough overlap");
    println!(
        "\n{} {}: a_r {:.3} gamma1 {:.2} gamma2 {:.2} m {} delta_t {:+} p_r {:.5} -> {:?}",
        fit.kind.as_str(),
        fit.label,
        fit.a_r,
        fit.gamma1,
        fit.gamma2,
        fit.m.map_or("-".to_string(), |m| format!("{m:.2}")),
        fit.delta_t,
        fit.p_r,
        fit.verdict
    );

    let model: Vec<_> = fit.points.iter().map(|p| (p.time, p.model)).collect();
    for f_max in [0.5, 1.0, 2.0] {
        let cfg = WarningConfig {
            rv: annual_reference(&data.gdp),
            f_max,
        };
        let r = warning_signal(&model, &cfg).expect("overlapping ranges");
        println!(
            "f_max {f_max}: {} warnings, first {}",
            r.warnings.len(),
            r.first_warning.map_or("none".to_string(), |t| t.to_string())
        );
    }
}
