//! The hyperbolic gamma function G(a_plus, a_minus; z) and the scalar
//! functions built from it: the generalized Harish-Chandra function
//! c(b; z) = G(z + ia - ib)/G(z + ia), the scattering function
//! u(b; z) = -c(b; z)/c(b; -z), and the phase phi(b).
//!
//! Construction: in the strip |Im z| <= a_s/2,
//!
//!   ln G(z) = i * int_0^inf dy/y [ sin(2yz) / (2 sh(a+ y) sh(a- y)) - z/(a+ a- y) ],
//!
//! evaluated by panel Gauss-Legendre on [0, Y0] (series expansion of the
//! integrand near y = 0), plus an analytic tail: 1/(2 sh sh) expands into
//! exponentials whose integrals against sin(2yz)/y are exponential
//! integrals E_1 of complex argument. Outside the strip, the value is
//! continued with the first-order difference equation
//!
//!   G(z) = 2 cosh(pi (z - i a_s/2)/a_l) * G(z - i a_s),
//!
//! accumulating the cosh factors in log space. Zeros sit at
//! ia + i(m a+ + n a-), poles at the mirror lattice, and
//! lim_{z -> -ia} (-z - ia) G(z) = sqrt(a+ a-)/(2 pi i).

use crate::error::{Error, Result};
use crate::params::Params;
use crate::quad::gauss_legendre;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Zero/pole lattice description and the residue constant at -ia.
#[derive(Debug, Clone, Copy)]
pub struct PoleZeroData {
    pub params: Params,
    /// sqrt(a+ a-) / (2 pi i)
    pub residue_at_minus_ia: Complex64,
}

impl PoleZeroData {
    /// Zero at i(a + m a+ + n a-).
    pub fn zero_at(&self, m: u32, n: u32) -> Complex64 {
        Complex64::new(
            0.0,
            self.params.a() + m as f64 * self.params.a_plus() + n as f64 * self.params.a_minus(),
        )
    }

    /// Pole at -i(a + m a+ + n a-); the pole lattice mirrors the zeros.
    pub fn pole_at(&self, m: u32, n: u32) -> Complex64 {
        -self.zero_at(m, n)
    }

    /// Nearest lattice point of the given family and its distance.
    fn nearest_on(&self, z: Complex64, sign: f64) -> (Complex64, f64) {
        let ap = self.params.a_plus();
        let am = self.params.a_minus();
        let depth = (z.im.abs() / self.params.a_s()).ceil() as i64 + 2;
        let mut best = (self.zero_at(0, 0) * sign, f64::INFINITY);
        for m in 0..=depth as u32 {
            if (m as f64) * ap > z.im.abs() + ap + am {
                break;
            }
            for n in 0..=depth as u32 {
                let p = Complex64::new(0.0, sign * (self.params.a() + m as f64 * ap + n as f64 * am));
                let d = (z - p).norm();
                if d < best.1 {
                    best = (p, d);
                }
                if (n as f64) * am > z.im.abs() + ap + am {
                    break;
                }
            }
        }
        best
    }

    pub fn nearest_pole(&self, z: Complex64) -> (Complex64, f64) {
        self.nearest_on(z, -1.0)
    }

    pub fn nearest_zero(&self, z: Complex64) -> (Complex64, f64) {
        self.nearest_on(z, 1.0)
    }
}

/// Which end of the real axis an asymptotic model describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    Plus,
    Minus,
}

/// Evaluation counters, cheap enough to keep always-on.
#[derive(Debug, Default)]
pub struct GammaCounters {
    pub ln_gamma_calls: AtomicU64,
    pub integrand_evals: AtomicU64,
}

#[derive(Debug, Clone, Copy)]
pub struct GammaStats {
    pub ln_gamma_calls: u64,
    pub integrand_evals: u64,
}

/// Evaluator for G and its derived functions at fixed period lengths.
#[derive(Debug)]
pub struct GammaEngine {
    params: Params,
    /// Extra margin (fraction of a_s/2) before the strip reduction engages.
    pub strip_tolerance: f64,
    /// Truncation of the 1-D integral, in units of 1/min(a_s, 1).
    pub tail_cutoff: f64,
    /// Cap on integrand evaluations per ln_gamma call.
    pub node_budget: usize,
    /// Arguments closer than this to the pole lattice are rejected.
    pub pole_exclusion: f64,
    counters: GammaCounters,
    rule: (Vec<f64>, Vec<f64>),
}

const RULE_NODES: usize = 16;
const MAX_STRIP_STEPS: i64 = 64;

impl GammaEngine {
    pub fn new(params: Params) -> Self {
        Self {
            params,
            strip_tolerance: 0.0,
            tail_cutoff: 8.0,
            node_budget: 1 << 21,
            pole_exclusion: 1e-8 * params.a_s(),
            counters: GammaCounters::default(),
            rule: gauss_legendre(RULE_NODES),
        }
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn pole_zero_data(&self) -> PoleZeroData {
        let root = (self.params.a_plus() * self.params.a_minus()).sqrt();
        PoleZeroData {
            params: self.params,
            residue_at_minus_ia: root / (2.0 * PI * I),
        }
    }

    pub fn stats(&self) -> GammaStats {
        GammaStats {
            ln_gamma_calls: self.counters.ln_gamma_calls.load(Ordering::Relaxed),
            integrand_evals: self.counters.integrand_evals.load(Ordering::Relaxed),
        }
    }

    /// Integrand of the strip representation, series branch near y = 0.
    fn integrand(&self, z: Complex64, y: f64) -> Complex64 {
        let ap = self.params.a_plus();
        let am = self.params.a_minus();
        let a = self.params.a();
        let yc = 0.05 / (1.0f64).max(z.norm()).max(2.0 * a);
        if y > yc {
            let s = (2.0 * y * z).sin();
            let denom = 2.0 * (ap * y).sinh() * (am * y).sinh();
            return (s / denom - z / (ap * am * y)) / y;
        }
        // num(y) = a+ a- y sin(2yz) - z (ch(2ay) - ch((a+ - a-) y)); the k = 0
        // term cancels the subtraction, so sum from k = 1
        let dl = ap - am;
        let two_z = 2.0 * z;
        let mut num = Complex64::new(0.0, 0.0);
        let mut f2k1 = 6.0; // (2k+1)! at k = 1
        let mut f2k2 = 24.0; // (2k+2)! at k = 1
        let mut zpow = two_z * two_z * two_z; // (2z)^{2k+1}
        let mut apow = (2.0 * a).powi(4); // (2a)^{2k+2}
        let mut dpow = dl.powi(4);
        let mut ypow = y.powi(4); // y^{2k+2}
        let mut sign = -1.0;
        for k in 1..14u32 {
            let coef = ap * am * sign * zpow / f2k1 - z * (apow - dpow) / f2k2;
            num += coef * ypow;
            sign = -sign;
            zpow *= two_z * two_z;
            apow *= (2.0 * a) * (2.0 * a);
            dpow *= dl * dl;
            ypow *= y * y;
            let k2 = (2 * k + 2) as f64;
            let k3 = (2 * k + 3) as f64;
            let k4 = (2 * k + 4) as f64;
            f2k1 *= k2 * k3;
            f2k2 *= k3 * k4;
        }
        num / (ap * am * y * y * 2.0 * (ap * y).sinh() * (am * y).sinh())
    }

    /// ln G inside the reduced strip |Im z| <= a_s/2 (plus tolerance).
    fn ln_gamma_strip(&self, z: Complex64) -> Result<Complex64> {
        let ap = self.params.a_plus();
        let am = self.params.a_minus();
        let a = self.params.a();
        let y0 = self.tail_cutoff / self.params.a_s().min(1.0);
        // resolve both the sin oscillation (2|Re z| rad/unit) and the sinh
        // structure (scale 1/a_l)
        let per_unit = 0.8 * (2.0 * z.re.abs() + self.params.a_l() + 2.0) / PI + 0.75;
        let npanels = ((y0 * per_unit).ceil() as usize).max(12);
        if npanels * RULE_NODES > self.node_budget {
            return Err(Error::Parameter(format!(
                "node budget exceeded: {} nodes needed, budget {}",
                npanels * RULE_NODES,
                self.node_budget
            )));
        }
        let (xg, wg) = &self.rule;
        let width = y0 / npanels as f64;
        let half = 0.5 * width;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..npanels {
            let center = (p as f64 + 0.5) * width;
            let mut panel = Complex64::new(0.0, 0.0);
            for (x, w) in xg.iter().zip(wg) {
                panel += *w * self.integrand(z, center + half * x);
            }
            acc += half * panel;
        }
        self.counters
            .integrand_evals
            .fetch_add((npanels * RULE_NODES) as u64, Ordering::Relaxed);
        // analytic tail: 1/(2 sh sh) = 2 sum e^{-lam y}, lam = 2a + 2m a+ + 2n a-
        let mut tail = Complex64::new(0.0, 0.0);
        let mut m = 0u32;
        while 2.0 * m as f64 * ap * y0 < 42.0 {
            let mut n = 0u32;
            while 2.0 * (m as f64 * ap + n as f64 * am) * y0 < 42.0 {
                let lam = 2.0 * a + 2.0 * m as f64 * ap + 2.0 * n as f64 * am;
                let wm = (Complex64::new(lam, 0.0) - 2.0 * I * z) * y0;
                let wp = (Complex64::new(lam, 0.0) + 2.0 * I * z) * y0;
                tail += 2.0 * (exp_e1(wm) - exp_e1(wp)) / (2.0 * I);
                n += 1;
            }
            m += 1;
        }
        acc += tail - z / (ap * am * y0);
        Ok(I * acc)
    }

    /// ln G(z). The value is exact modulo 2 pi i (branch bookkeeping from the
    /// strip continuation is not unwound); every consumer exponentiates.
    pub fn ln_gamma(&self, z: Complex64) -> Result<Complex64> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite(format!("ln_gamma argument {z}")));
        }
        self.counters.ln_gamma_calls.fetch_add(1, Ordering::Relaxed);
        let data = self.pole_zero_data();
        let (pole, dist) = data.nearest_pole(z);
        if dist <= self.pole_exclusion {
            return Err(Error::Singularity {
                at: z,
                nearest: pole,
                distance: dist,
                context: "gamma pole".into(),
            });
        }
        let a_s = self.params.a_s();
        let a_l = self.params.a_l();
        let k = (z.im / a_s).round() as i64;
        if k.abs() > MAX_STRIP_STEPS {
            return Err(Error::Parameter(format!(
                "strip continuation needs {} steps (cap {MAX_STRIP_STEPS})",
                k.abs()
            )));
        }
        let z0 = z - I * (k as f64) * a_s;
        let mut res = self.ln_gamma_strip(z0)?;
        if k > 0 {
            for j in 1..=k {
                let w = PI * (z - I * (j as f64 - 0.5) * a_s) / a_l;
                res += ln_2cosh(w);
            }
        } else {
            for j in 1..=(-k) {
                let w = PI * (z + I * (j as f64 - 0.5) * a_s) / a_l;
                res -= ln_2cosh(w);
            }
        }
        Ok(res)
    }

    pub fn gamma(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.ln_gamma(z)?.exp())
    }

    /// ln c(b; z) = ln G(z + ia - ib) - ln G(z + ia).
    pub fn ln_c(&self, b: Complex64, z: Complex64) -> Result<Complex64> {
        let ia = I * self.params.a();
        let num = self.ln_gamma(z + ia - I * b).map_err(|e| annotate(e, "numerator"))?;
        let den = self.ln_gamma(z + ia).map_err(|e| annotate(e, "denominator"))?;
        Ok(num - den)
    }

    pub fn c_func(&self, b: Complex64, z: Complex64) -> Result<Complex64> {
        Ok(self.ln_c(b, z)?.exp())
    }

    /// u(b; z) = -c(b; z)/c(b; -z). At z = 0 the c-poles cancel; the limit
    /// is +1 and is returned exactly.
    pub fn u_func(&self, b: Complex64, z: Complex64) -> Result<Complex64> {
        if z.im != 0.0 {
            let lo = -(b.re.min(2.0 * self.params.a() - b.re));
            if z.im <= lo || z.im >= self.params.a_s() {
                return Err(Error::Precondition(format!(
                    "u(b; z) regularity needs Im z in ({lo}, {}), got {}",
                    self.params.a_s(),
                    z.im
                )));
            }
        }
        if z.norm() == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(-(self.ln_c(b, z)? - self.ln_c(b, -z)?).exp())
    }

    /// phi(b) = exp(i alpha b (b - 2a)/4); satisfies phi(2a - b) = phi(b).
    pub fn phi(&self, b: Complex64) -> Complex64 {
        (I * self.params.alpha() * b * (b - 2.0 * self.params.a()) / 4.0).exp()
    }

    /// Model phi(b)^{-1} e^{+alpha b z/2} (tail +) or phi(b) e^{-alpha b z/2}
    /// (tail -); multiplied by c(b; z) it tends to 1 with rate
    /// alpha*rho, rho in [a_s/2, a_s).
    pub fn asymptotic_envelope_c(
        &self,
        b: Complex64,
        rho: f64,
        tail: Tail,
    ) -> Result<impl Fn(Complex64) -> Complex64 + '_> {
        let a_s = self.params.a_s();
        if !(rho >= 0.5 * a_s && rho < a_s) {
            return Err(Error::Parameter(format!(
                "decay rate rho = {rho} outside [{}, {})",
                0.5 * a_s,
                a_s
            )));
        }
        let alpha = self.params.alpha();
        let phi = self.phi(b);
        Ok(move |z: Complex64| match tail {
            Tail::Plus => (alpha * b * z / 2.0).exp() / phi,
            Tail::Minus => (-alpha * b * z / 2.0).exp() * phi,
        })
    }
}

/// log(2 cosh w), stable for large |Re w|.
fn ln_2cosh(w: Complex64) -> Complex64 {
    let s = if w.re >= 0.0 { 1.0 } else { -1.0 };
    s * w + (1.0 + (-2.0 * s * w).exp()).ln()
}

/// Exponential integral E_1(w) for Re w > 0 via the modified Lentz
/// continued fraction. Accurate for the |w| >= a_l * Y0 arguments used by
/// the tail; falls back to the power series for small |w|.
pub(crate) fn exp_e1(w: Complex64) -> Complex64 {
    if w.norm() < 4.0 {
        // E_1(w) = -gamma - ln w + sum_{k>=1} (-1)^{k+1} w^k / (k k!)
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 1..60 {
            term *= -w / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.norm() < 1e-18 * (sum.norm() + 1e-30) {
                break;
            }
        }
        return -EULER_GAMMA - w.ln() + sum;
    }
    // E_1(w) = e^{-w} / (w + 1 - 1/(w + 3 - 4/(w + 5 - 9/(...)))), modified Lentz
    let tiny = Complex64::new(1e-300, 0.0);
    let mut f = w + 1.0;
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for k in 1..400u32 {
        let ak = Complex64::new(-((k * k) as f64), 0.0);
        let bk = w + (2 * k + 1) as f64;
        d = bk + ak * d;
        if d.norm() < 1e-300 {
            d = tiny;
        }
        c = bk + ak / c;
        if c.norm() < 1e-300 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-17 {
            break;
        }
    }
    (-w).exp() / f
}

fn annotate(e: Error, which: &str) -> Error {
    match e {
        Error::Singularity {
            at,
            nearest,
            distance,
            context,
        } => Error::Singularity {
            at,
            nearest,
            distance,
            context: format!("{context} in c-function {which}"),
        },
        other => other,
    }
}
