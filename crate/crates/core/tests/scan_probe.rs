use num_complex::Complex64;
use relcm_core::asym;
use relcm_core::eigen::{EigenEvaluator, EvalSettings};
use relcm_core::kernels::KernelContext;
use relcm_core::params::Params;
use relcm_core::residue;
use std::time::Instant;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ev(b: f64, tol: f64, maxl: usize) -> EigenEvaluator {
    let ctx = KernelContext::new(Params::new(1.0, 1.0).unwrap(), c64(b, 0.0)).unwrap();
    EigenEvaluator::new(
        ctx,
        EvalSettings {
            tolerance: tol,
            max_level: maxl,
            ..EvalSettings::default()
        },
    )
}

#[test]
#[ignore]
fn probe_scan_n3() {
    for b in [0.5, 0.9, 1.3] {
        let e = ev(b, 1e-9, 3);
        let x = [c64(0.41, 0.0), c64(-0.07, 0.0), c64(-0.33, 0.0)];
        let ts: Vec<f64> = (0..8).map(|k| 0.7 + 0.25 * k as f64).collect();
        let t0 = Instant::now();
        let samples = asym::scan_ray(&e, &x, &ts).unwrap();
        match asym::fit_decay(&samples) {
            Ok(fit) => {
                let s = asym::summarize_fit(e.context(), &fit);
                println!(
                    "N=3 b={b}: rate={:.4} thr={:.4} r2={:.6} pass={} in {:?}",
                    s.fitted_rate, s.threshold, fit.r_squared, s.pass, t0.elapsed()
                );
            }
            Err(err) => println!("N=3 b={b}: fit failed: {err} in {:?}", t0.elapsed()),
        }
    }
}

#[test]
#[ignore]
fn probe_n4() {
    let e = ev(0.75, 1e-3, 4);
    let x = [c64(0.42, 0.0), c64(0.13, 0.0), c64(-0.17, 0.0), c64(-0.38, 0.0)];
    let d = 0.25;
    let y = [1.55 * d, 0.48 * d, -0.51 * d, -1.52 * d];
    let t0 = Instant::now();
    let plan = e.plan(4, &x, &y).unwrap();
    println!(
        "N=4 plan: T={:.2} n/axis={} lifts={:?}",
        plan.grid.truncation,
        plan.grid.nodes_per_axis(),
        plan.lifts
    );
    let direct = e.e(&x, &y).unwrap();
    println!(
        "E4 = {} est {:.2e} in {:?}",
        direct.value(),
        direct.error_estimate,
        t0.elapsed()
    );
    let t0 = Instant::now();
    let rhs = residue::lemma_rhs(&e, &x, &y, 0.7).unwrap();
    let rel = (rhs.value() - direct.value()).norm() / direct.value().norm();
    println!("lemma N=4 rel = {rel:.3e} in {:?}", t0.elapsed());
}
