//! The shifted-contour representation: main integral over the lifted
//! contour past the kernel poles, the residue correction terms indexed by
//! increasing subsets, and the boundary sum of lower-level functions.
//! Together they reproduce the direct evaluation; verifying that equality
//! is this module's purpose.

use crate::eigen::{EigenEvaluator, Form, GridSpec};
use crate::error::{Error, Result};
use crate::kernels::{HatY, KernelContext};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One residue-term index set: L omitted entries nu_1 < ... < nu_L and the
/// contour shift r above the kernel pole line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueTermSpec {
    pub l: usize,
    /// Zero-based, strictly increasing.
    pub nu: Vec<usize>,
    pub r: f64,
}

impl ResidueTermSpec {
    pub fn validate(&self, ctx: &KernelContext, n: usize) -> Result<()> {
        if self.l == 0 || self.l > n.saturating_sub(2) {
            return Err(Error::Parameter(format!(
                "residue order {} outside 1..={}",
                self.l,
                n.saturating_sub(2)
            )));
        }
        if self.nu.len() != self.l
            || self.nu.windows(2).any(|w| w[0] >= w[1])
            || self.nu.iter().any(|&v| v >= n)
        {
            return Err(Error::Parameter("index set must be strictly increasing and in range".into()));
        }
        check_shift(ctx, self.r)?;
        Ok(())
    }
}

fn check_shift(ctx: &KernelContext, r: f64) -> Result<()> {
    let a_s = ctx.params().a_s();
    if !(r > 0.0 && r < a_s) {
        return Err(Error::Contour(format!(
            "shift r = {r} outside the pole-free band (0, {a_s})"
        )));
    }
    Ok(())
}

/// Scattering-factor product over the entries below each omitted index:
/// prod_l prod_{j < nu_l, j not among earlier nu} (-u(x_{nu_l} - x_j)).
pub fn u_factor(ctx: &KernelContext, x: &[Complex64], nu: &[usize]) -> Result<Complex64> {
    let mut value = Complex64::new(1.0, 0.0);
    for (l, &nl) in nu.iter().enumerate() {
        for j in 0..nl {
            if nu[..l].contains(&j) {
                continue;
            }
            value *= -ctx.u(x[nl] - x[j])?;
        }
    }
    Ok(value)
}

/// Kernel poles in each integration variable: z = x_j + ia - ib/2.
pub fn pole_positions(ctx: &KernelContext, x: &[Complex64]) -> Vec<Complex64> {
    let shift = I * ctx.params().a() - I * ctx.b() / 2.0;
    x.iter().map(|&xj| xj + shift).collect()
}

/// Distance of the shifted contour to the nearest pole line, with a flag
/// when the shift sits within 1e-3 of a crossing.
pub fn contour_clearance(ctx: &KernelContext, r: f64) -> (f64, bool) {
    let a_s = ctx.params().a_s();
    let clearance = r.min(a_s - r);
    (clearance, clearance < 1e-3)
}

/// Pointwise residue-term integrand: the reduced kernel on the surviving
/// entries times the lower-level function with the omitted entries moved to
/// their pole positions.
pub fn i_hat(
    evaluator: &EigenEvaluator,
    nu: &[usize],
    x: &[Complex64],
    y: &[f64],
    z_tail: &[Complex64],
) -> Result<Complex64> {
    let ctx = evaluator.context();
    let n = x.len();
    let l = nu.len();
    if z_tail.len() != n - 1 - l {
        return Err(Error::Dimension(format!(
            "tail length {} != {}",
            z_tail.len(),
            n - 1 - l
        )));
    }
    let hat = HatY::from_rapidities(y)?.0;
    let rest: Vec<Complex64> = (0..n).filter(|j| !nu.contains(j)).map(|j| x[j]).collect();
    let kernel = ctx.k_sharp(&rest, z_tail)?;
    let shift = I * ctx.params().a() - I * ctx.b() / 2.0;
    let mut args: Vec<Complex64> = nu.iter().map(|&v| x[v] + shift).collect();
    args.extend_from_slice(z_tail);
    let inner = evaluator.e(&args, &hat)?;
    Ok(kernel * inner.value())
}

/// Magnitude and error estimate of one assembled term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaTerm {
    /// 0 marks the main shifted integral, n-1 the boundary sum.
    pub l: usize,
    pub nu: Vec<usize>,
    pub value_re: f64,
    pub value_im: f64,
    pub magnitude: f64,
    pub error_estimate: f64,
}

/// Assembled right-hand side, directly comparable to the direct evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub value_re: f64,
    pub value_im: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
    pub terms: Vec<LemmaTerm>,
}

impl LemmaReport {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

fn combinations(n: usize, l: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(l);
    fn rec(start: usize, n: usize, l: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == l {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, l, cur, out);
            cur.pop();
        }
    }
    rec(0, n, l, &mut cur, &mut out);
    out
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

struct TermValue {
    value: Complex64,
    evaluations: u64,
}

/// The full right-hand side on one grid resolution.
#[allow(clippy::too_many_arguments)]
fn rhs_once(
    evaluator: &EigenEvaluator,
    x: &[Complex64],
    y: &[f64],
    r: f64,
    spec: &GridSpec,
    lifts: &[f64],
    terms_out: &mut Vec<(usize, Vec<usize>, Complex64)>,
) -> Result<TermValue> {
    let ctx = evaluator.context();
    let n = x.len();
    let alpha = ctx.params().alpha();
    let a_f = ctx.params().a() - 0.5 * ctx.b().re;
    let h_main = a_f + r;
    let hat = HatY::from_rapidities(y)?.0;
    let hat_sum: f64 = hat.iter().sum();
    let grid = spec.build();
    let mut evals = 0u64;

    let x_sum: Complex64 = x.iter().sum();
    // common outer factor M_N e^{i alpha y_N sum x}, split so that 1/rho_N
    // cancels against the contour extraction analytically:
    // M_N / rho_N = phi^{N-1} / prod c(2a-b; yhat)
    let mut ln_m_over_rho = (n - 1) as f64 * ctx.ln_phi() + I * alpha * y[n - 1] * x_sum;
    for &hv in &hat {
        ln_m_over_rho -= ctx.ln_c_dual(Complex64::new(hv, 0.0))?;
    }
    let ln_script_g = ctx.ln_script_g()?;

    // main term: G^{N-1}/(N-1)! int over the lifted contour of K# E_{N-1}
    let tab = evaluator.tabulate(Form::E, n - 1, &[], 0.0, &hat, &grid, spec, lifts, &mut evals)?;
    let raw = evaluator.raw_integral(
        Form::E,
        x,
        n - 1,
        &tab,
        h_main,
        hat_sum,
        &grid,
        spec,
        &mut evals,
    )?;
    let ln_main = ln_m_over_rho + (n - 1) as f64 * ln_script_g
        - ln_factorial(n - 1)
        - ctx.ln_cn(x)?
        + raw.ln_extraction;
    let main_value = ln_main.exp() * raw.grid_sum;
    terms_out.push((0, Vec::new(), main_value));
    let mut total = main_value;

    // residue terms: for each omitted subset, the reduced kernel against
    // the lower level with heads parked at the pole positions
    let head_shift = I * ctx.params().a() - I * ctx.b() / 2.0;
    let s_center = a_f + 0.5 * r;
    for l in 1..=n.saturating_sub(2) {
        for nu in combinations(n, l) {
            let rest: Vec<Complex64> = (0..n).filter(|j| !nu.contains(j)).map(|j| x[j]).collect();
            let heads: Vec<Complex64> = nu
                .iter()
                .map(|&v| x[v] + head_shift - I * s_center)
                .collect();
            // inner levels of the head tabulation left unlifted: the heads
            // shrink the pole-free band
            let mut lifts_inner = lifts.to_vec();
            if lifts_inner.len() > n - 1 {
                lifts_inner[n - 1] = 0.0;
            }
            let tab_nu = evaluator.tabulate(
                Form::E,
                n - 1,
                &heads,
                0.5 * r,
                &hat,
                &grid,
                spec,
                &lifts_inner,
                &mut evals,
            )?;
            let raw_nu = evaluator.raw_integral(
                Form::E,
                &rest,
                n - 1 - l,
                &tab_nu,
                h_main,
                0.0,
                &grid,
                spec,
                &mut evals,
            )?;
            let ufac = u_factor(ctx, x, &nu)?;
            let ln_term = ln_m_over_rho + (n - 1 - l) as f64 * ln_script_g
                - ln_factorial(n - 1 - l)
                - ctx.ln_cn(&rest)?
                - alpha * s_center * hat_sum;
            let value = ln_term.exp() * ufac * raw_nu.grid_sum;
            terms_out.push((l, nu.clone(), value));
            total += value;
        }
    }

    // boundary sum: sum_nu C_N(x(nu), x_nu)/C_N(x) E_{N-1}(x(nu), yhat),
    // carrying the plain M_N prefactor
    let ln_m = ctx.ln_m_n(y)? + I * alpha * y[n - 1] * x_sum;
    let ln_cn_x = ctx.ln_cn(x)?;
    let mut boundary = Complex64::new(0.0, 0.0);
    for nu in 0..n {
        let mut reordered: Vec<Complex64> =
            (0..n).filter(|&j| j != nu).map(|j| x[j]).collect();
        let rest = reordered.clone();
        reordered.push(x[nu]);
        let ratio = (ctx.ln_cn(&reordered)? - ln_cn_x).exp();
        let inner = evaluator.e(&rest, &hat)?;
        evals += inner.evaluations;
        boundary += ratio * inner.value();
    }
    let boundary_value = ln_m.exp() * boundary;
    terms_out.push((n - 1, (0..n).collect(), boundary_value));
    total += boundary_value;

    Ok(TermValue {
        value: total,
        evaluations: evals,
    })
}

/// Assemble the shifted-contour right-hand side for the level-n function at
/// real positions x and rapidities y, with contour shift r. The result is
/// directly comparable to the direct evaluation.
pub fn lemma_rhs(
    evaluator: &EigenEvaluator,
    x: &[Complex64],
    y: &[f64],
    r: f64,
) -> Result<LemmaReport> {
    let ctx = evaluator.context();
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Dimension(format!(
            "need n >= 2 equal lengths, got {} and {}",
            n,
            y.len()
        )));
    }
    if !ctx.coupling().in_s_l() {
        return Err(Error::Precondition(format!(
            "coupling Re b = {} outside the narrow strip (0, {}]",
            ctx.b().re,
            ctx.params().a_l()
        )));
    }
    if x.iter().any(|v| v.im != 0.0) {
        return Err(Error::Precondition("positions must be real".into()));
    }
    for j in 0..n {
        for k in j + 1..n {
            if x[j] == x[k] {
                return Err(Error::Precondition(format!(
                    "positions must be pairwise distinct (entries {j} and {k} coincide)"
                )));
            }
        }
    }
    check_shift(ctx, r)?;

    // grid: the shifted contours demand clearance-driven node density
    let plan = evaluator.plan(n, x, y)?;
    let a_s = ctx.params().a_s();
    let a_f = ctx.params().a() - 0.5 * ctx.b().re;
    let clearance = r.min(a_s - r).min(a_f - 0.5 * r).max(1e-9);
    let spec = {
        let base = plan.grid.clone();
        let per_unit_clear = 3.0 / clearance;
        let base_per_unit = base.nodes_per_axis() as f64 / (2.0 * base.truncation);
        if per_unit_clear > base_per_unit {
            let panels = ((2.0 * base.truncation * per_unit_clear
                / base.nodes_per_panel as f64)
                .ceil() as usize)
                .max(base.panels);
            GridSpec { panels, ..base }
        } else {
            base
        }
    };

    let mut terms_fine = Vec::new();
    let fine = rhs_once(evaluator, x, y, r, &spec, &plan.lifts, &mut terms_fine)?;
    let mut terms_coarse = Vec::new();
    let coarse_spec = GridSpec {
        nodes_per_panel: (spec.nodes_per_panel / 2).max(2),
        ..spec.clone()
    };
    let coarse = rhs_once(evaluator, x, y, r, &coarse_spec, &plan.lifts, &mut terms_coarse)?;

    let terms = terms_fine
        .iter()
        .zip(&terms_coarse)
        .map(|((l, nu, v), (_, _, vc))| LemmaTerm {
            l: *l,
            nu: nu.iter().map(|&i| i + 1).collect(),
            value_re: v.re,
            value_im: v.im,
            magnitude: v.norm(),
            error_estimate: (v - vc).norm(),
        })
        .collect();
    Ok(LemmaReport {
        value_re: fine.value.re,
        value_im: fine.value.im,
        error_estimate: (fine.value - coarse.value).norm(),
        evaluations: fine.evaluations + coarse.evaluations,
        terms,
    })
}

/// CSV report: one row per term (L, nu, magnitude, error estimate) plus a
/// totals row.
pub fn write_term_csv<W: Write>(report: &LemmaReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["L", "nu", "re", "im", "magnitude", "error_estimate"])
        .map_err(|e| Error::Parameter(e.to_string()))?;
    for t in &report.terms {
        let nu = t
            .nu
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        w.write_record([
            t.l.to_string(),
            nu,
            t.value_re.to_string(),
            t.value_im.to_string(),
            t.magnitude.to_string(),
            t.error_estimate.to_string(),
        ])
        .map_err(|e| Error::Parameter(e.to_string()))?;
    }
    w.write_record([
        "total".to_string(),
        String::new(),
        report.value_re.to_string(),
        report.value_im.to_string(),
        report.value().norm().to_string(),
        report.error_estimate.to_string(),
    ])
    .map_err(|e| Error::Parameter(e.to_string()))?;
    w.flush().map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::EvalSettings;
    use crate::params::Params;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn evaluator(ap: f64, am: f64, b: f64, tol: f64) -> EigenEvaluator {
        let ctx = KernelContext::new(Params::new(ap, am).unwrap(), c64(b, 0.0)).unwrap();
        EigenEvaluator::new(
            ctx,
            EvalSettings {
                tolerance: tol,
                ..EvalSettings::default()
            },
        )
    }

    #[test]
    fn u_factor_unrolls() {
        let ev = evaluator(1.0, 0.8, 0.6, 1e-6);
        let ctx = ev.context();
        let x = [c64(0.4, 0.0), c64(-0.3, 0.0), c64(0.1, 0.0)];
        assert_eq!(u_factor(ctx, &x, &[0]).unwrap(), c64(1.0, 0.0));
        let v1 = u_factor(ctx, &x, &[1]).unwrap();
        assert!((v1 + ctx.u(x[1] - x[0]).unwrap()).norm() < 1e-14);
        let v2 = u_factor(ctx, &x, &[2]).unwrap();
        let want = ctx.u(x[2] - x[0]).unwrap() * ctx.u(x[2] - x[1]).unwrap();
        assert!((v2 - want).norm() < 1e-14);
        // unimodular for real coupling and positions
        for nu in [vec![0], vec![1], vec![2], vec![0, 1]] {
            let v = u_factor(ctx, &x, &nu).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-10, "nu = {nu:?}");
        }
    }

    #[test]
    fn pole_enumeration_and_clearance() {
        let ev = evaluator(1.0, 1.0, 0.5, 1e-6);
        let ctx = ev.context();
        let x = [c64(0.3, 0.0), c64(-0.4, 0.0)];
        let poles = pole_positions(ctx, &x);
        assert_eq!(poles.len(), 2);
        assert!((poles[0] - c64(0.3, 0.75)).norm() < 1e-14);
        assert!((poles[1] - c64(-0.4, 0.75)).norm() < 1e-14);
        let (_, flagged) = contour_clearance(ctx, 0.0005);
        assert!(flagged);
        let (cl, flagged) = contour_clearance(ctx, 0.6);
        assert!(!flagged);
        assert!((cl - 0.4).abs() < 1e-14);
    }

    #[test]
    fn two_particle_identity() {
        // the L-sum is empty at n = 2: shifted main integral plus boundary
        let ev = evaluator(1.0, 0.8, 0.6, 1e-8);
        let x = [c64(0.4, 0.0), c64(-0.3, 0.0)];
        let y = [1.3, -0.9];
        let direct = ev.e(&x, &y).unwrap();
        let rhs = lemma_rhs(&ev, &x, &y, 0.6).unwrap();
        let rel = (rhs.value() - direct.value()).norm() / direct.value().norm();
        assert!(rel < 1e-8, "rel = {rel:.3e}");
        assert_eq!(rhs.terms.len(), 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let ev = evaluator(1.0, 1.0, 0.5, 1e-6);
        let x = [c64(0.4, 0.0), c64(0.4, 0.0), c64(0.1, 0.0)];
        let y = [1.0, 0.0, -1.0];
        assert!(matches!(
            lemma_rhs(&ev, &x, &y, 0.5),
            Err(Error::Precondition(_))
        ));
        let x = [c64(0.4, 0.0), c64(-0.2, 0.0), c64(0.1, 0.0)];
        assert!(matches!(
            lemma_rhs(&ev, &x, &y, 1.5),
            Err(Error::Contour(_))
        ));
        let spec = ResidueTermSpec {
            l: 1,
            nu: vec![2],
            r: 0.75,
        };
        assert!(spec.validate(ev.context(), 3).is_ok());
        let bad = ResidueTermSpec {
            l: 2,
            nu: vec![2, 1],
            r: 0.75,
        };
        assert!(bad.validate(ev.context(), 3).is_err());
    }
}
