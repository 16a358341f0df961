use num_complex::Complex64;
use relcm_core::asym;
use relcm_core::eigen::{EigenEvaluator, EvalSettings, GridSpec};
use relcm_core::kernels::KernelContext;
use relcm_core::params::Params;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ev_with(lift3: f64, grid: GridSpec) -> EigenEvaluator {
    let ctx = KernelContext::new(Params::new(1.0, 1.0).unwrap(), c64(1.0, 0.0)).unwrap();
    EigenEvaluator::new(
        ctx,
        EvalSettings {
            tolerance: 1e-6,
            grid: Some(grid),
            lifts: Some(vec![0.0, 0.0, 0.0, lift3]),
            ..EvalSettings::default()
        },
    )
}

#[test]
#[ignore]
fn probe() {
    let x = [c64(0.4, 0.0), c64(-0.1, 0.0), c64(-0.35, 0.0)];
    let y = [2.0, 0.0, -2.0];
    let grid = GridSpec {
        truncation: 6.65,
        panels: 41,
        nodes_per_panel: 16,
    };
    let ctx = KernelContext::new(Params::new(1.0, 1.0).unwrap(), c64(1.0, 0.0)).unwrap();
    let eas = asym::e_as(&ctx, &x, &y, asym::AsymptoticMode::UProduct).unwrap();
    println!("E_as = {eas} (|.| = {:.4})", eas.norm());
    for lift in [0.0, 0.02, 0.0847, 0.2] {
        let ev = ev_with(lift, grid.clone());
        let e = ev.e(&x, &y).unwrap();
        let j = ev.e_via_j(&x, &y).unwrap();
        println!(
            "lift {lift}: E = {} (est {:.1e}), via J = {}",
            e.value(),
            e.error_estimate,
            j.value()
        );
    }
}
