use num_complex::Complex64;
use relcm_core::eigen::{EigenEvaluator, EvalSettings};
use relcm_core::kernels::KernelContext;
use relcm_core::params::Params;
use relcm_core::residue;
use std::time::Instant;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
#[ignore]
fn probe_lemma_large_separation() {
    let ctx = KernelContext::new(Params::new(1.0, 1.0).unwrap(), c64(0.95, 0.0)).unwrap();
    let ev = EigenEvaluator::new(
        ctx,
        EvalSettings {
            tolerance: 1e-6,
            ..EvalSettings::default()
        },
    );
    let x = [c64(0.437, 0.0), c64(-0.112, 0.0), c64(-0.296, 0.0)];
    for d in [2.0, 4.0, 6.0] {
        let y = [1.065 * d, 0.0, -0.935 * d];
        let t0 = Instant::now();
        let plan = ev.plan(3, &x, &y).unwrap();
        println!(
            "d={d}: grid T={:.2} panels={} n/axis={} lifts={:?}",
            plan.grid.truncation,
            plan.grid.panels,
            plan.grid.nodes_per_axis(),
            plan.lifts
        );
        let direct = ev.e(&x, &y).unwrap();
        let t_direct = t0.elapsed();
        let t0 = Instant::now();
        let rhs = residue::lemma_rhs(&ev, &x, &y, 0.7).unwrap();
        let rel = (rhs.value() - direct.value()).norm() / direct.value().norm();
        println!(
            "  |E3|={:.3e} err_est={:.2e} rel(lemma)={:.3e}  direct {:?} rhs {:?}",
            direct.value().norm(),
            direct.error_estimate,
            rel,
            t_direct,
            t0.elapsed()
        );
    }
}
