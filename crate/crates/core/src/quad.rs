//! Contour-aware tensor-product quadrature over shifted real lines.
//!
//! Axis k integrates over R + i*offset_k, truncated to [-T, T] and split
//! into equal panels carrying a fixed-order Gauss-Legendre rule. The error
//! estimate comes from re-evaluating with half the nodes per panel.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Truncation, panelization and per-axis imaginary offsets of one
/// multidimensional contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub dims: usize,
    /// Imaginary part per axis; axis k runs over [-T, T] + i*offsets[k].
    pub offsets: Vec<f64>,
    pub truncation: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl ContourSpec {
    pub fn real_line(dims: usize, truncation: f64, panels: usize, nodes_per_panel: usize) -> Self {
        Self {
            dims,
            offsets: vec![0.0; dims],
            truncation,
            panels,
            nodes_per_panel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::Parameter("contour needs at least one axis".into()));
        }
        if !(self.truncation > 0.0) || !self.truncation.is_finite() {
            return Err(Error::Parameter(format!(
                "truncation must be positive and finite, got {}",
                self.truncation
            )));
        }
        if self.panels == 0 || self.nodes_per_panel == 0 {
            return Err(Error::Parameter("panels and nodes_per_panel must be >= 1".into()));
        }
        if self.offsets.len() != self.dims {
            return Err(Error::Parameter(format!(
                "got {} offsets for {} axes",
                self.offsets.len(),
                self.dims
            )));
        }
        if self.offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::Parameter("offsets must be finite".into()));
        }
        Ok(())
    }

    /// Nodes per axis at full resolution.
    pub fn nodes_per_axis(&self) -> usize {
        self.panels * self.nodes_per_panel
    }

    /// Total integrand evaluations of one full-resolution pass,
    /// reported before execution.
    pub fn total_nodes(&self) -> u64 {
        (self.nodes_per_axis() as u64).pow(self.dims as u32)
    }
}

/// Quadrature outcome: estimate, node-halving error estimate, work count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value_re: f64,
    pub value_im: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
}

impl EvalResult {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }

    pub(crate) fn from_value(value: Complex64, error_estimate: f64, evaluations: u64) -> Self {
        Self {
            value_re: value.re,
            value_im: value.im,
            error_estimate,
            evaluations,
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial from the Chebyshev initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // evaluate P_n and P_n' by upward recurrence
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // weight 2 / ((1-x^2) P_n'(x)^2)
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// One axis of a tensor contour: complex nodes and real weights.
#[derive(Debug, Clone)]
pub struct Axis {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
}

/// Build the panelized Gauss-Legendre grid of a given axis of `spec`.
pub fn axis_grid(spec: &ContourSpec, axis: usize) -> Axis {
    let (xg, wg) = gauss_legendre(spec.nodes_per_panel);
    let t = spec.truncation;
    let p = spec.panels;
    let width = 2.0 * t / p as f64;
    let half = 0.5 * width;
    let offset = spec.offsets[axis];
    let mut nodes = Vec::with_capacity(p * spec.nodes_per_panel);
    let mut weights = Vec::with_capacity(p * spec.nodes_per_panel);
    for panel in 0..p {
        let center = -t + (panel as f64 + 0.5) * width;
        for (&x, &w) in xg.iter().zip(&wg) {
            nodes.push(Complex64::new(center + half * x, offset));
            weights.push(half * w);
        }
    }
    Axis { nodes, weights }
}

fn tensor_pass<F>(f: &F, spec: &ContourSpec, nodes_per_panel: usize) -> Result<(Complex64, u64)>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    let coarse = ContourSpec {
        nodes_per_panel,
        ..spec.clone()
    };
    let axes: Vec<Axis> = (0..spec.dims).map(|k| axis_grid(&coarse, k)).collect();
    let n = coarse.nodes_per_axis();
    let total = (n as u64).pow(spec.dims as u32) as usize;
    let dims = spec.dims;

    let values: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = flat;
            let mut pt = vec![Complex64::new(0.0, 0.0); dims];
            let mut w = 1.0;
            for ax in (0..dims).rev() {
                let i = idx % n;
                idx /= n;
                pt[ax] = axes[ax].nodes[i];
                w *= axes[ax].weights[i];
            }
            f(&pt) * w
        })
        .collect();

    for (i, v) in values.iter().enumerate() {
        if !v.re.is_finite() || !v.im.is_finite() {
            let mut idx = i;
            let mut pt = vec![Complex64::new(0.0, 0.0); dims];
            for ax in (0..dims).rev() {
                pt[ax] = axes[ax].nodes[idx % n];
                idx /= n;
            }
            return Err(Error::NonFinite(format!(
                "integrand non-finite at node {:?}",
                pt
            )));
        }
    }
    Ok((tree_sum(&values), total as u64))
}

/// Fixed-order pairwise tree sum; deterministic for any thread count.
pub(crate) fn tree_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            tree_sum(lo) + tree_sum(hi)
        }
    }
}

/// Tensor-product Gauss-Legendre estimate of the integral of `f` over the
/// contour described by `spec`, with error estimated by halving the
/// per-panel node count.
pub fn integrate<F>(f: F, spec: &ContourSpec) -> Result<EvalResult>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    spec.validate()?;
    let (fine, n_fine) = tensor_pass(&f, spec, spec.nodes_per_panel)?;
    let half = (spec.nodes_per_panel / 2).max(1);
    let (coarse, n_coarse) = tensor_pass(&f, spec, half)?;
    Ok(EvalResult::from_value(
        fine,
        (fine - coarse).norm(),
        n_fine + n_coarse,
    ))
}

/// Choose truncation and node density from the integrand's exponential
/// decay rate, its oscillation rate (radians per unit length), the target
/// tolerance, and the spread of the configuration (added to the truncation).
pub fn recommend_spec(
    decay_rate: f64,
    oscillation_rate: f64,
    tol: f64,
    dims: usize,
    spread: f64,
) -> Result<ContourSpec> {
    if !(decay_rate > 0.0) {
        return Err(Error::Parameter(format!(
            "decay_rate must be positive, got {decay_rate}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tol must be positive, got {tol}")));
    }
    let t = (1.0 / tol).ln() / decay_rate + spread.max(0.0);
    // at least 4 nodes per oscillation period 2*pi/oscillation_rate,
    // with a floor for the non-oscillatory structure
    let per_unit = (4.0 * oscillation_rate / (2.0 * std::f64::consts::PI)).max(4.0);
    let nodes_per_panel = 16;
    let panels = ((2.0 * t * per_unit / nodes_per_panel as f64).ceil() as usize).max(4);
    Ok(ContourSpec::real_line(dims, t, panels, nodes_per_panel).with_offsets(vec![0.0; dims]))
}

impl ContourSpec {
    fn with_offsets(mut self, offsets: Vec<f64>) -> Self {
        self.offsets = offsets;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gauss_rule_basics() {
        let (x, w) = gauss_legendre(5);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
        // integrates x^8 exactly with 5 nodes
        let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert_relative_eq!(got, 2.0 / 9.0, max_relative = 1e-13);
    }

    #[test]
    fn gaussian_integral() {
        let spec = ContourSpec::real_line(1, 8.0, 4, 32);
        let r = integrate(|z| (-z[0] * z[0]).exp(), &spec).unwrap();
        assert_relative_eq!(r.value().re, PI.sqrt(), max_relative = 1e-12);
        assert!(r.value().im.abs() < 1e-14);
    }

    #[test]
    fn oscillatory_gaussian() {
        // int e^{-z^2 + i w z} dz = sqrt(pi) e^{-w^2/4}, w = 3
        let spec = ContourSpec::real_line(1, 8.0, 8, 24);
        let r = integrate(
            |z| (-z[0] * z[0] + Complex64::new(0.0, 3.0) * z[0]).exp(),
            &spec,
        )
        .unwrap();
        let want = PI.sqrt() * (-9.0f64 / 4.0).exp();
        assert_relative_eq!(r.value().re, want, max_relative = 1e-10);
        assert!(r.value().im.abs() < 1e-13);
    }

    #[test]
    fn offset_invariance_for_entire_decaying_integrand() {
        let spec = ContourSpec {
            dims: 1,
            offsets: vec![0.3],
            truncation: 8.0,
            panels: 4,
            nodes_per_panel: 32,
        };
        let r = integrate(|z| (-z[0] * z[0]).exp(), &spec).unwrap();
        assert_relative_eq!(r.value().re, PI.sqrt(), max_relative = 1e-10);
        assert!(r.value().im.abs() < 1e-10);
    }

    #[test]
    fn node_doubling_spectral_convergence() {
        let spec_lo = ContourSpec::real_line(1, 8.0, 4, 32);
        let spec_hi = ContourSpec::real_line(1, 8.0, 4, 64);
        let f = |z: &[Complex64]| (-z[0] * z[0]).exp();
        let lo = integrate(f, &spec_lo).unwrap().value();
        let hi = integrate(f, &spec_hi).unwrap().value();
        assert!((lo - hi).norm() < 1e-13);
    }

    #[test]
    fn linearity() {
        let spec = ContourSpec::real_line(1, 7.0, 4, 24);
        let f = |z: &[Complex64]| (-z[0] * z[0]).exp();
        let g = |z: &[Complex64]| (-(z[0] - 0.5) * (z[0] - 0.5) * 2.0).exp();
        let sum = integrate(|z| f(z) + g(z), &spec).unwrap().value();
        let parts = integrate(f, &spec).unwrap().value() + integrate(g, &spec).unwrap().value();
        assert!((sum - parts).norm() < 1e-12);
    }

    #[test]
    fn axis_permutation_symmetry() {
        let spec = ContourSpec::real_line(2, 6.0, 3, 12);
        let f = |z: &[Complex64]| (-(z[0] * z[0] + z[1] * z[1]) - z[0] * z[1] * 0.3).exp();
        let g = |z: &[Complex64]| (-(z[1] * z[1] + z[0] * z[0]) - z[1] * z[0] * 0.3).exp();
        let a = integrate(f, &spec).unwrap().value();
        let b = integrate(g, &spec).unwrap().value();
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn non_finite_integrand_is_diagnosed() {
        let spec = ContourSpec::real_line(1, 2.0, 2, 8);
        let err = integrate(|z| 1.0 / (z[0] - z[0]), &spec).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn recommend_spec_examples() {
        // decay alpha*a_s/2 = pi at unit lengths, tol 1e-8 -> T >= 18.42/pi
        let s = recommend_spec(PI, 0.0, 1e-8, 1, 0.0).unwrap();
        assert!(s.truncation >= 5.86 && s.truncation < 6.0);
        // oscillation 2*pi*4 rad/unit -> >= 16 nodes per unit
        let s = recommend_spec(PI, 8.0 * PI, 1e-8, 2, 0.0).unwrap();
        let per_unit = s.nodes_per_axis() as f64 / (2.0 * s.truncation);
        assert!(per_unit >= 16.0);
        assert_eq!(s.total_nodes(), (s.nodes_per_axis() as u64).pow(2));
        assert!(recommend_spec(PI, 1.0, -1.0, 1, 0.0).is_err());
        assert!(recommend_spec(0.0, 1.0, 1e-8, 1, 0.0).is_err());
    }

    #[test]
    fn trapezoid_oracle_agreement() {
        // independent brute-force check of the Gaussian values above
        let t = 8.0;
        let n = 16000;
        let h = 2.0 * t / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let x = -t + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * (-x * x).exp();
        }
        acc *= h;
        assert_relative_eq!(acc, PI.sqrt(), max_relative = 1e-12);
    }
}
