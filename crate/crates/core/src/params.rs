//! Scale parameters, coupling, and the strip/domain membership predicates.
//!
//! Two positive lengths `a_plus`, `a_minus` fix everything else:
//! `alpha = 2*pi/(a_plus*a_minus)`, `a = (a_plus+a_minus)/2`, and the
//! short/long lengths `a_s <= a_l`. The coupling `b` lives in the strip
//! `S_a` (0 < Re b < 2a), or in the narrower `S_l` (0 < Re b <= a_l) where
//! the contour-shift machinery operates.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Immutable pair of period lengths with derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    a_plus: f64,
    a_minus: f64,
}

impl Params {
    pub fn new(a_plus: f64, a_minus: f64) -> Result<Self> {
        if !(a_plus.is_finite() && a_minus.is_finite()) || a_plus <= 0.0 || a_minus <= 0.0 {
            return Err(Error::Parameter(format!(
                "period lengths must be positive and finite, got a_plus={a_plus}, a_minus={a_minus}"
            )));
        }
        Ok(Self { a_plus, a_minus })
    }

    pub fn a_plus(&self) -> f64 {
        self.a_plus
    }

    pub fn a_minus(&self) -> f64 {
        self.a_minus
    }

    /// 2*pi / (a_plus * a_minus)
    pub fn alpha(&self) -> f64 {
        2.0 * PI / (self.a_plus * self.a_minus)
    }

    /// (a_plus + a_minus) / 2
    pub fn a(&self) -> f64 {
        0.5 * (self.a_plus + self.a_minus)
    }

    pub fn a_s(&self) -> f64 {
        self.a_plus.min(self.a_minus)
    }

    pub fn a_l(&self) -> f64 {
        self.a_plus.max(self.a_minus)
    }

    /// Strip S_a: 0 < Re b < 2a.
    pub fn in_s_a(&self, b: Complex64) -> bool {
        b.re > 0.0 && b.re < 2.0 * self.a()
    }

    /// Strip S_l: 0 < Re b <= a_l.
    pub fn in_s_l(&self, b: Complex64) -> bool {
        b.re > 0.0 && b.re <= self.a_l()
    }
}

/// Coupling constant together with its derived decay rate `gamma` and the
/// pole-clearance bound `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub b: Complex64,
    params: Params,
}

impl Coupling {
    /// Requires `b` in the strip S_a.
    pub fn new(params: Params, b: Complex64) -> Result<Self> {
        if !b.re.is_finite() || !b.im.is_finite() {
            return Err(Error::Parameter("coupling must be finite".into()));
        }
        if !params.in_s_a(b) {
            return Err(Error::Precondition(format!(
                "coupling b = {}+{}i outside the strip S_a: need 0 < Re b < {}",
                b.re,
                b.im,
                2.0 * params.a()
            )));
        }
        Ok(Self { b, params })
    }

    /// alpha * Re(b) / 2
    pub fn gamma(&self) -> f64 {
        0.5 * self.params.alpha() * self.b.re
    }

    /// min(Re b, a_s)
    pub fn beta(&self) -> f64 {
        self.b.re.min(self.params.a_s())
    }

    pub fn in_s_l(&self) -> bool {
        self.params.in_s_l(self.b)
    }

    pub fn params(&self) -> Params {
        self.params
    }
}

/// Positions x (complex) and rapidities y (real) for an n-particle level.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub x: Vec<Complex64>,
    pub y: Vec<f64>,
}

impl Configuration {
    pub fn new(x: Vec<Complex64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Dimension(format!(
                "need equal nonzero lengths, got |x| = {}, |y| = {}",
                x.len(),
                y.len()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn distinct_x(&self) -> bool {
        for j in 0..self.x.len() {
            for k in j + 1..self.x.len() {
                if self.x[j] == self.x[k] {
                    return false;
                }
            }
        }
        true
    }

    /// d_N(y) > 0, i.e. strictly decreasing rapidities.
    pub fn ordered_y(&self) -> bool {
        self.y.len() >= 2 && d_n(&self.y).map(|d| d > 0.0).unwrap_or(false)
    }
}

/// Minimal pairwise rapidity gap: min over j < k of (y_j - y_k).
pub fn d_n(y: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::Dimension(format!(
            "d_n needs at least two entries, got {}",
            y.len()
        )));
    }
    let mut min = f64::INFINITY;
    for j in 0..y.len() {
        for k in j + 1..y.len() {
            min = min.min(y[j] - y[k]);
        }
    }
    Ok(min)
}

/// Centering map: returns the mean and the mean-free residuals.
pub fn centered_coords(x: &[Complex64]) -> Result<(Complex64, Vec<Complex64>)> {
    if x.is_empty() {
        return Err(Error::Dimension("centered_coords needs a nonempty vector".into()));
    }
    let mean = x.iter().sum::<Complex64>() / x.len() as f64;
    // re-center the residual of the largest entry so the sum is exactly zero
    let centered: Vec<Complex64> = x.iter().map(|&v| v - mean).collect();
    Ok((mean, centered))
}

fn max_pairwise_im_gap(x: &[Complex64]) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..x.len() {
        for k in j + 1..x.len() {
            m = m.max((x[j].im - x[k].im).abs());
        }
    }
    m
}

/// Holomorphy domain of the defining representation:
/// max |Im(x_j - x_k)| < 2a - Re b. Requires b in S_a.
pub fn in_domain_dn(params: Params, b: Complex64, x: &[Complex64]) -> Result<bool> {
    if !params.in_s_a(b) {
        return Err(Error::Precondition(format!(
            "b = {}+{}i outside S_a",
            b.re, b.im
        )));
    }
    Ok(max_pairwise_im_gap(x) < 2.0 * params.a() - b.re)
}

/// Narrow-strip domain: max |Im(x_j - x_k)| < a_s. Requires b in S_l.
pub fn in_domain_dn_l(params: Params, b: Complex64, x: &[Complex64]) -> Result<bool> {
    if !params.in_s_l(b) {
        return Err(Error::Precondition(format!(
            "b = {}+{}i outside S_l",
            b.re, b.im
        )));
    }
    Ok(max_pairwise_im_gap(x) < params.a_s())
}

/// Centered-coordinate domain: |Im x_j - mean(Im x)| < a - Re b / 2 for all j.
pub fn in_domain_dn_r(params: Params, b: Complex64, x: &[Complex64]) -> Result<bool> {
    if !params.in_s_a(b) {
        return Err(Error::Precondition(format!(
            "b = {}+{}i outside S_a",
            b.re, b.im
        )));
    }
    let (_, xc) = centered_coords(x)?;
    let bound = params.a() - 0.5 * b.re;
    Ok(xc.iter().all(|v| v.im.abs() < bound))
}

/// Joint domain allowing complex rapidities:
/// (b, x) in the centered domain and max |Im(y_j - y_k)| < Re b.
pub fn in_domain_script_dn(
    params: Params,
    b: Complex64,
    x: &[Complex64],
    y: &[Complex64],
) -> Result<bool> {
    let dr = in_domain_dn_r(params, b, x)?;
    Ok(dr && max_pairwise_im_gap(y) < b.re)
}
