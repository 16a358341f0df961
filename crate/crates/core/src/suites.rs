//! Seeded verification suites: each check measures a quantity, compares it
//! to its pinned threshold, and reports pass/fail. The CLI drives these;
//! the acceptance tests reuse them with full sample counts.

use crate::asym::{self, AsymptoticMode};
use crate::bounds::{self, ClaimId, PolynomialSpec};
use crate::eigen::{EigenEvaluator, EvalSettings};
use crate::error::{Error, Result};
use crate::gamma::{GammaEngine, Tail};
use crate::kernels::KernelContext;
use crate::params::Params;
use crate::residue;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckReport {
    fn le(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            pass: measured <= threshold && measured.is_finite(),
        }
    }

    fn ge(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            pass: measured >= threshold && measured.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(suite: &str, seed: u64, checks: Vec<CheckReport>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            suite: suite.into(),
            seed,
            checks,
            pass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gamma,
    Kernels,
    Symmetry,
    Lemma,
    Asymptotics,
    Bounds,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(Self::Gamma),
            "kernels" => Ok(Self::Kernels),
            "symmetry" => Ok(Self::Symmetry),
            "lemma" => Ok(Self::Lemma),
            "asymptotics" => Ok(Self::Asymptotics),
            "bounds" => Ok(Self::Bounds),
            "all" => Ok(Self::All),
            other => Err(Error::Parameter(format!("unknown suite '{other}'"))),
        }
    }
}

/// Suite configuration: parameters, coupling, sample budget.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub params: Params,
    pub b: Complex64,
    pub seed: u64,
    /// Shrinks sample counts for interactive runs.
    pub quick: bool,
    pub tolerance: f64,
}

impl SuiteConfig {
    pub fn new(params: Params, b: Complex64, seed: u64) -> Self {
        Self {
            params,
            b,
            seed,
            quick: true,
            tolerance: 1e-8,
        }
    }

    fn engine(&self) -> GammaEngine {
        GammaEngine::new(self.params)
    }

    fn ctx(&self) -> Result<KernelContext> {
        KernelContext::new(self.params, self.b)
    }

    fn evaluator(&self, tol: f64) -> Result<EigenEvaluator> {
        Ok(EigenEvaluator::new(
            self.ctx()?,
            EvalSettings {
                tolerance: tol,
                ..EvalSettings::default()
            },
        ))
    }
}

pub fn run(config: &SuiteConfig, suite: Suite) -> Result<Vec<SuiteReport>> {
    let mut out = Vec::new();
    match suite {
        Suite::Gamma => out.push(gamma_suite(config)?),
        Suite::Kernels => out.push(kernels_suite(config)?),
        Suite::Symmetry => out.push(symmetry_suite(config)?),
        Suite::Lemma => out.push(lemma_suite(config)?),
        Suite::Asymptotics => out.push(asymptotics_suite(config)?),
        Suite::Bounds => out.push(bounds_suite(config)?),
        Suite::All => {
            out.push(gamma_suite(config)?);
            out.push(kernels_suite(config)?);
            out.push(symmetry_suite(config)?);
            out.push(lemma_suite(config)?);
            out.push(asymptotics_suite(config)?);
            out.push(bounds_suite(config)?);
        }
    }
    Ok(out)
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Reflection, conjugation, modular swap, shift consistency, zero, residue,
/// scattering-function identities and the decay of the c-function model.
pub fn gamma_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let g = config.engine();
    let p = config.params;
    let a = p.a();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let samples = if config.quick { 1000 } else { 10_000 };
    let mut checks = Vec::new();

    let mut worst_refl: f64 = 0.0;
    let mut worst_conj: f64 = 0.0;
    for _ in 0..samples {
        let z = c64(
            rng.gen_range(-10.0 * a..10.0 * a),
            rng.gen_range(-0.99 * a..0.99 * a),
        );
        let prod = g.gamma(z)? * g.gamma(-z)?;
        worst_refl = worst_refl.max((prod - 1.0).norm());
        let zr = c64(z.re, 0.0);
        worst_conj = worst_conj.max((g.gamma(zr)?.conj() - g.gamma(-zr)?).norm());
    }
    checks.push(CheckReport::le("reflection G(z)G(-z)=1", worst_refl, 1e-11));
    checks.push(CheckReport::le("conjugation conj G(z)=G(-z), real z", worst_conj, 1e-11));

    let swapped = GammaEngine::new(Params::new(p.a_minus(), p.a_plus())?);
    let mut worst_swap: f64 = 0.0;
    for _ in 0..(samples / 10).max(20) {
        let z = c64(
            rng.gen_range(-6.0 * a..6.0 * a),
            rng.gen_range(-0.9 * a..0.9 * a),
        );
        let va = g.gamma(z)?;
        worst_swap = worst_swap.max((va - swapped.gamma(z)?).norm() / va.norm().max(1e-300));
    }
    checks.push(CheckReport::le("modular period swap", worst_swap, 1e-11));

    // one difference-equation step across the strip seam
    let mut worst_shift: f64 = 0.0;
    for _ in 0..(samples / 20).max(10) {
        let w = c64(
            rng.gen_range(-4.0 * a..4.0 * a),
            rng.gen_range(-0.3 * a..0.3 * a),
        );
        let lhs = g.gamma(w + I * p.a_plus() / 2.0)?;
        let rhs = 2.0 * (std::f64::consts::PI * w / p.a_minus()).cosh()
            * g.gamma(w - I * p.a_plus() / 2.0)?;
        worst_shift = worst_shift.max((lhs / rhs - 1.0).norm());
    }
    checks.push(CheckReport::le("shift consistency", worst_shift, 1e-10));

    checks.push(CheckReport::le(
        "zero |G(ia)|",
        g.gamma(I * a)?.norm(),
        1e-10,
    ));

    let data = g.pole_zero_data();
    let res = |eps: f64| -> Result<Complex64> {
        let z = c64(eps, -a);
        Ok((-z - I * a) * g.gamma(z)?)
    };
    let extrap = (10.0 * res(1e-4)? - res(1e-3)?) / 9.0;
    checks.push(CheckReport::le(
        "residue extrapolation at -ia",
        (extrap - data.residue_at_minus_ia).norm() / data.residue_at_minus_ia.norm(),
        1e-6,
    ));

    // c-model deviation at 30 a_l
    let b = config.b;
    let rho = 0.6 * p.a_s();
    let model = g.asymptotic_envelope_c(b, rho, Tail::Plus)?;
    let z30 = c64(30.0 * p.a_l(), 0.0);
    checks.push(CheckReport::le(
        "c-model deviation at 30 a_l",
        (model(z30) * g.c_func(b, z30)? - 1.0).norm(),
        1e-8,
    ));
    // u-model deviation at 30 a_l
    let phi = g.phi(b);
    checks.push(CheckReport::le(
        "u-model deviation at 30 a_l",
        (g.u_func(b, z30)? / (phi * phi) + 1.0).norm(),
        1e-8,
    ));

    // scattering identities on the real line
    let mut worst_uu: f64 = 0.0;
    let mut worst_mod: f64 = 0.0;
    for _ in 0..samples {
        let br = c64(rng.gen_range(0.05..1.95) * a, 0.0);
        let z = c64(rng.gen_range(-8.0 * a..8.0 * a), 0.0);
        let u = g.u_func(br, z)?;
        worst_uu = worst_uu.max((u * g.u_func(br, -z)? - 1.0).norm());
        worst_mod = worst_mod.max((u.norm() - 1.0).abs());
    }
    checks.push(CheckReport::le("u(z)u(-z)=1, real b and z", worst_uu, 1e-10));
    checks.push(CheckReport::le("| |u| - 1 |, real b and z", worst_mod, 1e-10));
    checks.push(CheckReport::le(
        "u at the origin (limit of -c(z)/c(-z) is +1)",
        (g.u_func(b, c64(0.0, 0.0))? - 1.0).norm(),
        1e-12,
    ));

    Ok(SuiteReport::new("gamma", config.seed, checks))
}

/// Algebraic identities of the kernel algebra: both kernel forms, the
/// pair-product factorization, and both asymptotic-sum modes.
pub fn kernels_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let ctx = config.ctx()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x2b);
    let mut checks = Vec::new();
    let reps = if config.quick { 4 } else { 12 };

    let mut worst_sform: f64 = 0.0;
    for _ in 0..reps {
        let x: Vec<Complex64> = (0..3).map(|_| c64(rng.gen_range(-1.5..1.5), 0.0)).collect();
        let z: Vec<Complex64> = (0..2).map(|_| c64(rng.gen_range(-1.5..1.5), 0.0)).collect();
        let a = ctx.s_sharp(&x, &z)?;
        let b = ctx.s_sharp_g_form(&x, &z)?;
        worst_sform = worst_sform.max((a - b).norm() / a.norm());
    }
    checks.push(CheckReport::le("kernel two-form agreement", worst_sform, 1e-11));

    let mut worst_fact: f64 = 0.0;
    for n in 2..=5usize {
        for _ in 0..reps {
            let x: Vec<Complex64> = (0..n).map(|_| c64(rng.gen_range(-2.0..2.0), 0.0)).collect();
            let l = rng.gen_range(1..n);
            let mut pool: Vec<usize> = (0..n).collect();
            for i in 0..l {
                let j = rng.gen_range(i..n);
                pool.swap(i, j);
            }
            let mut nu = pool[..l].to_vec();
            nu.sort_unstable();
            let lhs = ctx.c_n(&x)?;
            let rhs = ctx.cn_factorization_rhs(&x, &nu)?;
            worst_fact = worst_fact.max((lhs - rhs).norm() / lhs.norm());
        }
    }
    checks.push(CheckReport::le(
        "pair-product factorization, n <= 5",
        worst_fact,
        1e-10,
    ));

    let mut worst_modes: f64 = 0.0;
    for n in 2..=5usize {
        for _ in 0..2.max(reps / 2) {
            let x: Vec<Complex64> = (0..n).map(|_| c64(rng.gen_range(-1.5..1.5), 0.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let ua = asym::e_as(&ctx, &x, &y, AsymptoticMode::UProduct)?;
            let ca = asym::e_as(&ctx, &x, &y, AsymptoticMode::CRatio)?;
            worst_modes = worst_modes.max((ua - ca).norm() / ua.norm().max(1.0));
        }
    }
    checks.push(CheckReport::le(
        "asymptotic-sum mode agreement, n <= 5",
        worst_modes,
        1e-10,
    ));

    Ok(SuiteReport::new("kernels", config.seed, checks))
}

fn random_config(
    rng: &mut ChaCha8Rng,
    n: usize,
    gap_lo: f64,
    gap_hi: f64,
) -> (Vec<Complex64>, Vec<f64>) {
    let x: Vec<Complex64> = (0..n).map(|_| c64(rng.gen_range(-1.0..1.0), 0.0)).collect();
    let mut y = Vec::with_capacity(n);
    let mut cur = 0.0;
    for _ in 0..n {
        y.push(cur);
        cur -= rng.gen_range(gap_lo..gap_hi);
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    (x, y.iter().map(|v| v - mean).collect())
}

/// Representation agreements plus the permutation, translation and parity
/// identities for two and three particles.
pub fn symmetry_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5);
    let mut checks = Vec::new();
    let tol = if config.quick {
        config.tolerance.max(1e-7)
    } else {
        config.tolerance
    };
    let ev = config.evaluator(tol)?;
    let ctx = ev.context();
    let alpha = config.params.alpha();
    let reps = if config.quick { 2 } else { 10 };

    for n in [2usize, 3] {
        let tol_rep = if n == 2 { 1e-7 } else { 1e-6 };
        let mut worst_alt: f64 = 0.0;
        let mut worst_routes: f64 = 0.0;
        for _ in 0..reps {
            let (x, y) = random_config(&mut rng, n, 0.3, 1.0);
            let j = ev.j(&x, &y)?.value();
            let ja = ev.j_alt(&x, &y)?.value();
            worst_alt = worst_alt.max((j - ja).norm() / j.norm());
            let e = ev.e(&x, &y)?.value();
            let ej = ev.e_via_j(&x, &y)?.value();
            worst_routes = worst_routes.max((e - ej).norm() / e.norm());
        }
        checks.push(CheckReport::le(
            format!("center-of-mass representation agreement, n = {n}"),
            worst_alt,
            tol_rep,
        ));
        checks.push(CheckReport::le(
            format!("normalized-function route agreement, n = {n}"),
            worst_routes,
            tol_rep,
        ));
    }

    // permutation invariance of J and covariance of E at n = 3
    let (x, y) = random_config(&mut rng, 3, 0.4, 0.9);
    let j_base = ev.j(&x, &y)?.value();
    let e_base = ev.e(&x, &y)?.value();
    let perms: [[usize; 3]; 5] = [
        [1, 0, 2],
        [0, 2, 1],
        [2, 1, 0],
        [1, 2, 0],
        [2, 0, 1],
    ];
    let mut worst_jp: f64 = 0.0;
    let mut worst_ep: f64 = 0.0;
    for sigma in perms {
        let xs: Vec<Complex64> = sigma.iter().map(|&s| x[s]).collect();
        worst_jp = worst_jp.max((ev.j(&xs, &y)?.value() - j_base).norm() / j_base.norm());
        let mut inv = [0usize; 3];
        for (pos, &s) in sigma.iter().enumerate() {
            inv[s] = pos;
        }
        let mut factor = c64(1.0, 0.0);
        for jj in 0..3 {
            for kk in jj + 1..3 {
                if inv[jj] > inv[kk] {
                    factor *= -ctx.u(x[jj] - x[kk])?;
                }
            }
        }
        worst_ep = worst_ep
            .max((ev.e(&xs, &y)?.value() - e_base * factor).norm() / e_base.norm());
    }
    checks.push(CheckReport::le("permutation invariance of J, n = 3", worst_jp, 1e-6));
    checks.push(CheckReport::le(
        "permutation covariance of E, n = 3",
        worst_ep,
        1e-6,
    ));

    // translation identity with the compensating phase
    let eta = 0.37;
    let xs: Vec<Complex64> = x.iter().map(|&v| v + eta).collect();
    let ysum: f64 = y.iter().sum();
    let phase = (I * alpha * eta * ysum).exp();
    let jt = ev.j(&xs, &y)?.value();
    checks.push(CheckReport::le(
        "translation identity of J, n = 3",
        (jt - j_base * phase).norm() / j_base.norm(),
        1e-7,
    ));
    let et = ev.e(&xs, &y)?.value();
    checks.push(CheckReport::le(
        "translation identity of E, n = 3",
        (et - e_base * phase).norm() / e_base.norm(),
        1e-7,
    ));

    // parity: J(-x,-y) = J(x,y); E picks up both scattering products
    let xm: Vec<Complex64> = x.iter().map(|&v| -v).collect();
    let ym: Vec<f64> = y.iter().map(|&v| -v).collect();
    let jm = ev.j(&xm, &ym)?.value();
    checks.push(CheckReport::le(
        "parity of J, n = 3",
        (jm - j_base).norm() / j_base.norm(),
        1e-7,
    ));
    let mut parity_factor = c64(1.0, 0.0);
    for jj in 0..3 {
        for kk in jj + 1..3 {
            parity_factor *= ctx.u(x[jj] - x[kk])?;
            parity_factor *= ctx.u_dual(c64(y[jj] - y[kk], 0.0))?;
        }
    }
    let em = ev.e(&xm, &ym)?.value();
    checks.push(CheckReport::le(
        "parity of E, n = 3 (dual coupling on rapidities)",
        (em - e_base * parity_factor).norm() / e_base.norm(),
        1e-6,
    ));

    // vanishing at coinciding positions
    let e_coin = ev.e(&[c64(0.4, 0.0), c64(0.4, 0.0)], &[0.7, -0.7])?.value();
    checks.push(CheckReport::le(
        "vanishing at coinciding positions, n = 2",
        e_coin.norm(),
        1e-8,
    ));

    Ok(SuiteReport::new("symmetry", config.seed, checks))
}

/// The contour-shift identity at n = 3 (and the n = 2 degenerate case).
pub fn lemma_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x11);
    let mut checks = Vec::new();
    let ev = config.evaluator(1e-6)?;
    let r = 0.75 * config.params.a_s();
    let configs = if config.quick { 2 } else { 10 };
    let mut worst: f64 = 0.0;
    for i in 0..configs {
        // separations spread over [0.6, 2.2] a
        let scale = config.params.a() * (0.6 + 1.6 * i as f64 / configs.max(2) as f64);
        let (x, y) = random_config(&mut rng, 3, 0.8 * scale, 1.2 * scale);
        let direct = ev.e(&x, &y)?.value();
        let rhs = residue::lemma_rhs(&ev, &x, &y, r)?;
        worst = worst.max((rhs.value() - direct).norm() / direct.norm());
    }
    checks.push(CheckReport::le(
        format!("contour-shift identity, n = 3 ({configs} seeded configs)"),
        worst,
        1e-4,
    ));

    let (x2, y2) = random_config(&mut rng, 2, 0.8, 1.4);
    let direct2 = ev.e(&x2, &y2)?.value();
    let rhs2 = residue::lemma_rhs(&ev, &x2, &y2, r)?;
    checks.push(CheckReport::le(
        "contour-shift identity, n = 2",
        (rhs2.value() - direct2).norm() / direct2.norm(),
        1e-6,
    ));

    Ok(SuiteReport::new("lemma", config.seed, checks))
}

/// Remainder decay along the uniform ray at n = 2.
pub fn asymptotics_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let ev = config.evaluator(1e-10)?;
    let x = [c64(0.5, 0.0), c64(-0.5, 0.0)];
    let ts: Vec<f64> = (0..9).map(|k| 0.6 + 0.3 * k as f64).collect();
    let samples = asym::scan_ray(&ev, &x, &ts)?;
    let fit = asym::fit_decay(&samples)?;
    let summary = asym::summarize_fit(ev.context(), &fit);
    checks.push(CheckReport::ge(
        "fitted decay rate vs alpha a_s/2, n = 2",
        summary.fitted_rate,
        summary.threshold,
    ));
    checks.push(CheckReport::ge("fit quality r^2, n = 2", fit.r_squared, 0.99));
    Ok(SuiteReport::new("asymptotics", config.seed, checks))
}

/// Appendix machinery and registered envelope claims.
pub fn bounds_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x77);
    let mut checks = Vec::new();
    let samples = if config.quick { 20_000 } else { 100_000 };

    let mut violations = 0u64;
    for _ in 0..samples {
        let l = rng.gen_range(1..=4usize);
        let u: Vec<f64> = (0..=l).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let z: Vec<f64> = (0..l).map(|_| rng.gen_range(-10.0..10.0)).collect();
        if bounds::f_l(&u, &z)? > 0.0 {
            violations += 1;
        }
    }
    checks.push(CheckReport::le(
        format!("pair-exponent nonpositivity violations over {samples} samples"),
        violations as f64,
        0.0,
    ));

    let one = PolynomialSpec::constant(1, 1.0);
    let got = bounds::i_pl(&[1.3, -0.4], &one, 1e-10)?;
    checks.push(CheckReport::le(
        "weighted integral closed form (constant weight)",
        (got - (1.7 + 1.0)).abs(),
        1e-8,
    ));
    let absz = PolynomialSpec {
        variables: 1,
        terms: vec![(vec![1], 1.0)],
    };
    let got = bounds::i_pl(&[1.0, -1.0], &absz, 1e-10)?;
    checks.push(CheckReport::le(
        "weighted integral closed form (|z| weight)",
        (got - 2.5).abs(),
        1e-8,
    ));

    let scales = [2.0, 3.0, 4.5, 6.75, 10.0];
    for (l, poly, u0) in [
        (1usize, PolynomialSpec::constant(1, 1.0), vec![1.0, -1.0]),
        (
            1,
            PolynomialSpec {
                variables: 1,
                terms: vec![(vec![2], 1.0)],
            },
            vec![1.0, -1.0],
        ),
        (
            2,
            PolynomialSpec {
                variables: 2,
                terms: vec![(vec![1, 0], 0.5), (vec![0, 1], 0.5)],
            },
            vec![1.0, 0.0, -1.0],
        ),
    ] {
        let fit = bounds::verify_polynomial_bound(l, &poly, &u0, &scales)?;
        let bound = poly.degree() as f64 + l as f64 + 0.1;
        checks.push(CheckReport::le(
            format!("growth slope L={l} M={}", poly.degree()),
            fit.fitted_rate,
            bound,
        ));
    }

    let ev = config.evaluator(1e-7)?;
    for claim in ClaimId::all() {
        let (fit, _) = bounds::fit_envelope(&ev, claim)?;
        checks.push(CheckReport {
            name: format!("envelope claim '{}' (constant {:.4e})", fit.claim, fit.fitted_constant),
            measured: fit.fitted_constant,
            threshold: f64::INFINITY,
            pass: fit.pass,
        });
    }

    Ok(SuiteReport::new("bounds", config.seed, checks))
}
