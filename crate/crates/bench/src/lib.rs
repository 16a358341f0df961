//! Shared builders for the benchmark targets.

use num_complex::Complex64;
use relcm_core::eigen::{EigenEvaluator, EvalSettings};
use relcm_core::kernels::KernelContext;
use relcm_core::params::Params;

pub fn evaluator(tol: f64, cache: bool) -> EigenEvaluator {
    let ctx = KernelContext::new(Params::new(1.0, 0.8).unwrap(), Complex64::new(0.6, 0.0)).unwrap();
    EigenEvaluator::new(
        ctx,
        EvalSettings {
            tolerance: tol,
            use_table_cache: cache,
            ..EvalSettings::default()
        },
    )
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
