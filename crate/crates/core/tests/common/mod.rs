//! Shared helpers for integration tests: engine builders and the
//! independent brute-force quadrature oracle.

use num_complex::Complex64;
use relcm_core::eigen::{EigenEvaluator, EvalSettings};
use relcm_core::kernels::KernelContext;
use relcm_core::params::Params;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn evaluator(ap: f64, am: f64, b: Complex64, tol: f64) -> EigenEvaluator {
    let ctx = KernelContext::new(Params::new(ap, am).unwrap(), b).unwrap();
    EigenEvaluator::new(
        ctx,
        EvalSettings {
            tolerance: tol,
            ..EvalSettings::default()
        },
    )
}

/// Independent brute-force oracle for the level-2 function by composite
/// trapezoid with fixed step T/2000: J_2 = e^{i alpha y_2 (x_1 + x_2)}
/// int_R c(b; z - x_1 - ia + ib/2) c(b; z - x_2 - ia + ib/2) e^{i alpha z (y_1 - y_2)} dz.
pub fn trapezoid_j2(
    ap: f64,
    am: f64,
    b: Complex64,
    x: [Complex64; 2],
    y: [f64; 2],
    t: f64,
) -> Complex64 {
    let params = Params::new(ap, am).unwrap();
    let ctx = KernelContext::new(params, b).unwrap();
    let alpha = params.alpha();
    let a = params.a();
    let shift = -I * a + I * b / 2.0;
    let yh = y[0] - y[1];
    let steps = 4000usize;
    let h = t / 2000.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=steps {
        let z = c64(-t + i as f64 * h, 0.0);
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let f = (ctx.ln_c(z - x[0] + shift).unwrap() + ctx.ln_c(z - x[1] + shift).unwrap()).exp()
            * (I * alpha * z * yh).exp();
        acc += w * f;
    }
    acc *= h;
    (I * alpha * y[1] * (x[0] + x[1])).exp() * acc
}

/// E_2 from the trapezoid J_2 and the explicit prefactors.
pub fn trapezoid_e2(
    ap: f64,
    am: f64,
    b: Complex64,
    x: [Complex64; 2],
    y: [f64; 2],
    t: f64,
) -> Complex64 {
    let params = Params::new(ap, am).unwrap();
    let ctx = KernelContext::new(params, b).unwrap();
    let j2 = trapezoid_j2(ap, am, b, x, y, t);
    let ln_pref = ctx.ln_phi() + ctx.ln_script_g().unwrap()
        - ctx.ln_cn(&x).unwrap()
        - ctx
            .ln_c_dual(Complex64::new(y[0] - y[1], 0.0))
            .unwrap();
    ln_pref.exp() * j2
}
