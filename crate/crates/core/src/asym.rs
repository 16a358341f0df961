//! The factorized asymptotic form: a finite sum over permutations of plane
//! waves weighted by two-body scattering factors, the remainder against the
//! full function, and decay-rate fitting along rapidity rays.

use crate::eigen::EigenEvaluator;
use crate::error::{Error, Result};
use crate::kernels::KernelContext;
use crate::params::d_n;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// How the permutation sum weights each term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AsymptoticMode {
    /// Product of -u(x_k - x_j) over the inversions of the permutation.
    UProduct,
    /// Ratio C_N(x_sigma)/C_N(x).
    CRatio,
}

/// All permutations of 0..n in a deterministic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    heap(&mut cur, n, &mut out);
    out
}

fn heap(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(cur.clone());
        return;
    }
    for i in 0..k {
        heap(cur, k - 1, out);
        if k % 2 == 0 {
            cur.swap(i, k - 1);
        } else {
            cur.swap(0, k - 1);
        }
    }
}

/// Inversion pairs (j, k), j < k with sigma^{-1}(j) > sigma^{-1}(k).
fn inversion_pairs(sigma: &[usize]) -> Vec<(usize, usize)> {
    let n = sigma.len();
    let mut inv = vec![0usize; n];
    for (pos, &s) in sigma.iter().enumerate() {
        inv[s] = pos;
    }
    let mut pairs = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            if inv[j] > inv[k] {
                pairs.push((j, k));
            }
        }
    }
    pairs
}

/// The factorized asymptotic form of the normalized eigenfunction: an exact
/// finite sum over the N! orderings.
pub fn e_as(
    ctx: &KernelContext,
    x: &[Complex64],
    y: &[f64],
    mode: AsymptoticMode,
) -> Result<Complex64> {
    let n = x.len();
    if n == 0 || y.len() != n {
        return Err(Error::Dimension("positions/rapidities length mismatch".into()));
    }
    let alpha = ctx.params().alpha();
    let mut total = Complex64::new(0.0, 0.0);
    let ln_cn_x = if mode == AsymptoticMode::CRatio {
        ctx.ln_cn(x)?
    } else {
        Complex64::new(0.0, 0.0)
    };
    for sigma in permutations(n) {
        let phase: Complex64 = (0..n)
            .map(|j| I * alpha * x[sigma[j]] * y[j])
            .sum::<Complex64>()
            .exp();
        let weight = match mode {
            AsymptoticMode::UProduct => {
                let mut w = Complex64::new(1.0, 0.0);
                for (j, k) in inversion_pairs(&sigma) {
                    w *= -ctx.u(x[k] - x[j])?;
                }
                w
            }
            AsymptoticMode::CRatio => {
                let xs: Vec<Complex64> = sigma.iter().map(|&s| x[s]).collect();
                (ctx.ln_cn(&xs)? - ln_cn_x).exp()
            }
        };
        total += weight * phase;
    }
    Ok(total)
}

/// E(x, y) - E_as(x, y), with the full function's error estimate attached.
pub fn remainder(
    evaluator: &EigenEvaluator,
    x: &[Complex64],
    y: &[f64],
) -> Result<(Complex64, Complex64, f64)> {
    let full = evaluator.e(x, y)?;
    let asymptotic = e_as(evaluator.context(), x, y, AsymptoticMode::UProduct)?;
    Ok((full.value() - asymptotic, asymptotic, full.error_estimate))
}

/// Roundoff floor of the remainder at one ray point: machine epsilon,
/// amplified by the residual cancellation the evaluation plan tolerates.
fn noise_floor(evaluator: &EigenEvaluator, x: &[Complex64], y: &[f64], scale: f64) -> Result<f64> {
    let plan = evaluator.plan(x.len(), x, y)?;
    Ok(2e-14 * plan.eps_res_max.exp() * scale.max(1.0))
}

/// Uniform-gap rapidity ray y(t) = t (N-1, N-3, ..., -(N-1))/2, so that the
/// minimal gap equals t.
pub fn default_ray(n: usize, t: f64) -> Vec<f64> {
    (0..n)
        .map(|j| 0.5 * t * (n as f64 - 1.0 - 2.0 * j as f64))
        .collect()
}

/// One point of a decay scan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RaySample {
    pub t: f64,
    pub d: f64,
    pub remainder_re: f64,
    pub remainder_im: f64,
    pub abs_remainder: f64,
    pub abs_e_as: f64,
    /// Quadrature error estimate of the full function at this point.
    pub floor: f64,
}

/// Evaluate the remainder along a rapidity ray.
pub fn scan_ray(
    evaluator: &EigenEvaluator,
    x: &[Complex64],
    ts: &[f64],
) -> Result<Vec<RaySample>> {
    let n = x.len();
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        let y = default_ray(n, t);
        let (rem, easv, _est) = remainder(evaluator, x, &y)?;
        let floor = noise_floor(evaluator, x, &y, easv.norm())?;
        out.push(RaySample {
            t,
            d: d_n(&y)?,
            remainder_re: rem.re,
            remainder_im: rem.im,
            abs_remainder: rem.norm(),
            abs_e_as: easv.norm(),
            floor,
        });
    }
    Ok(out)
}

/// Least-squares fit of log |remainder| against the separation d_N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub separations: Vec<f64>,
    pub residual_logs: Vec<f64>,
    pub fitted_rate: f64,
    pub fitted_intercept: f64,
    pub r_squared: f64,
}

/// Fit the exponential decay rate on the linear window: points past the
/// onset |remainder| < 0.1 |E_as| and at least two decades above the
/// quadrature floor.
pub fn fit_decay(samples: &[RaySample]) -> Result<DecayFit> {
    let usable: Vec<&RaySample> = samples
        .iter()
        .filter(|s| {
            s.abs_remainder < 0.1 * s.abs_e_as && s.abs_remainder > 100.0 * s.floor.max(1e-300)
        })
        .collect();
    if usable.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} of {} samples in the fit window; remainders at the quadrature floor -- rescan with smaller separations",
            usable.len(),
            samples.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|s| s.d).collect();
    let ys: Vec<f64> = usable.iter().map(|s| s.abs_remainder.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(u, v)| (u - mx) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all separations equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(u, v)| {
            let p = slope * u + intercept;
            (v - p) * (v - p)
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|v| (v - my) * (v - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(DecayFit {
        separations: xs,
        residual_logs: ys,
        fitted_rate: -slope,
        fitted_intercept: intercept,
        r_squared: r2,
    })
}

/// CSV block of a decay scan: t, d_N, remainder parts and magnitude.
pub fn write_fit_csv<W: Write>(samples: &[RaySample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "d_N", "re_remainder", "im_remainder", "abs_remainder"])
        .map_err(csv_err)?;
    for s in samples {
        w.write_record([
            s.t.to_string(),
            s.d.to_string(),
            s.remainder_re.to_string(),
            s.remainder_im.to_string(),
            s.abs_remainder.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(())
}

/// JSON summary of a fit against the guaranteed half-rate threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub fitted_rate: f64,
    pub threshold: f64,
    pub r_squared: f64,
    pub pass: bool,
}

pub fn summarize_fit(ctx: &KernelContext, fit: &DecayFit) -> FitSummary {
    let threshold = 0.5 * ctx.params().alpha() * ctx.params().a_s();
    FitSummary {
        fitted_rate: fit.fitted_rate,
        threshold,
        r_squared: fit.r_squared,
        pass: fit.fitted_rate >= threshold && fit.r_squared >= 0.99,
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parameter(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn ctx(ap: f64, am: f64, b: f64) -> KernelContext {
        KernelContext::new(Params::new(ap, am).unwrap(), Complex64::new(b, 0.0)).unwrap()
    }

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_particle_is_plane_wave() {
        let k = ctx(1.0, 1.0, 0.6);
        let v = e_as(&k, &[c64(0.4, 0.0)], &[1.3], AsymptoticMode::UProduct).unwrap();
        let want = (I * k.params().alpha() * 0.4 * 1.3).exp();
        assert!((v - want).norm() < 1e-15);
    }

    #[test]
    fn two_particle_expansion() {
        let k = ctx(1.0, 0.8, 0.7);
        let alpha = k.params().alpha();
        let x = [c64(0.5, 0.0), c64(-0.2, 0.0)];
        let y = [0.9, -0.4];
        let got = e_as(&k, &x, &y, AsymptoticMode::UProduct).unwrap();
        let direct = (I * alpha * (x[0] * y[0] + x[1] * y[1])).exp()
            - k.u(x[1] - x[0]).unwrap() * (I * alpha * (x[1] * y[0] + x[0] * y[1])).exp();
        assert!((got - direct).norm() < 1e-12);
    }

    #[test]
    fn modes_agree_up_to_five_particles() {
        let mut rng = StdRng::seed_from_u64(17);
        let k = ctx(1.0, 0.8, 0.6);
        for n in 2..=5usize {
            for _ in 0..4 {
                let x: Vec<Complex64> = (0..n).map(|_| c64(rng.gen_range(-1.5..1.5), 0.0)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let a = e_as(&k, &x, &y, AsymptoticMode::UProduct).unwrap();
                let b = e_as(&k, &x, &y, AsymptoticMode::CRatio).unwrap();
                assert!(
                    (a - b).norm() < 1e-10 * a.norm().max(1.0),
                    "n={n}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn permutation_covariance_of_the_sum() {
        let mut rng = StdRng::seed_from_u64(23);
        let k = ctx(1.0, 1.0, 0.8);
        let n = 3;
        let x: Vec<Complex64> = (0..n).map(|_| c64(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let y: Vec<f64> = vec![1.1, 0.2, -0.8];
        let base = e_as(&k, &x, &y, AsymptoticMode::UProduct).unwrap();
        for sigma in permutations(n) {
            let xs: Vec<Complex64> = sigma.iter().map(|&s| x[s]).collect();
            let permuted = e_as(&k, &xs, &y, AsymptoticMode::UProduct).unwrap();
            let mut factor = Complex64::new(1.0, 0.0);
            for (j, kk) in inversion_pairs(&sigma) {
                factor *= -k.u(x[j] - x[kk]).unwrap();
            }
            assert!(
                (permuted - base * factor).norm() < 1e-10 * base.norm(),
                "sigma {sigma:?}"
            );
        }
    }

    #[test]
    fn translation_moves_into_a_phase() {
        let k = ctx(1.0, 0.8, 0.9);
        let alpha = k.params().alpha();
        let x = [c64(0.3, 0.0), c64(-0.5, 0.0), c64(0.9, 0.0)];
        let y = [1.0, 0.0, -1.0];
        let shift = 0.37;
        let ys: Vec<f64> = y.iter().map(|v| v + shift).collect();
        let base = e_as(&k, &x, &y, AsymptoticMode::UProduct).unwrap();
        let moved = e_as(&k, &x, &ys, AsymptoticMode::UProduct).unwrap();
        let xsum: Complex64 = x.iter().sum();
        let phase = (I * alpha * shift * xsum).exp();
        assert!((moved - base * phase).norm() < 1e-12 * base.norm());
    }

    #[test]
    fn ray_has_unit_gap_scaling() {
        let y = default_ray(4, 0.7);
        assert_eq!(y.len(), 4);
        assert!((d_n(&y).unwrap() - 0.7).abs() < 1e-15);
        let s: f64 = y.iter().sum();
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_synthetic_rate() {
        let samples: Vec<RaySample> = (1..=8)
            .map(|i| {
                let d = 0.5 * i as f64;
                let r = 3.0 * (-2.2 * d).exp();
                RaySample {
                    t: d,
                    d,
                    remainder_re: r,
                    remainder_im: 0.0,
                    abs_remainder: r,
                    abs_e_as: 1.0,
                    floor: 1e-14,
                }
            })
            .collect();
        let fit = fit_decay(&samples).unwrap();
        assert!((fit.fitted_rate - 2.2).abs() < 1e-10);
        assert!(fit.r_squared > 0.999999);
        // all samples at the floor: degenerate
        let dead: Vec<RaySample> = samples
            .iter()
            .map(|s| RaySample {
                abs_remainder: 1e-16,
                ..*s
            })
            .collect();
        assert!(matches!(fit_decay(&dead), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn csv_block_shape() {
        let samples = vec![RaySample {
            t: 1.0,
            d: 1.0,
            remainder_re: 0.1,
            remainder_im: -0.2,
            abs_remainder: 0.223,
            abs_e_as: 1.5,
            floor: 1e-12,
        }];
        let mut buf = Vec::new();
        write_fit_csv(&samples, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,d_N,re_remainder,im_remainder,abs_remainder"
        );
        assert_eq!(lines.count(), 1);
    }
}
