//! The multivariate function algebra on top of the scalar c-function:
//! pair products C_N, the weight W_N, the level-coupling kernels S# and K#,
//! and the rapidity-side normalizers M_N, rho_N.
//!
//! Products are accumulated in log space and exponentiated once; the
//! c-factors decay exponentially in the real separations, so direct
//! products under- and overflow already at moderate N.

use crate::error::{Error, Result};
use crate::gamma::GammaEngine;
use crate::params::{Coupling, Params};
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rapidity differences relative to the last entry:
/// (y_1 - y_N, ..., y_{N-1} - y_N).
#[derive(Debug, Clone, PartialEq)]
pub struct HatY(pub Vec<f64>);

impl HatY {
    pub fn from_rapidities(y: &[f64]) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::Dimension(format!(
                "hat map needs at least two rapidities, got {}",
                y.len()
            )));
        }
        let last = y[y.len() - 1];
        Ok(HatY(y[..y.len() - 1].iter().map(|v| v - last).collect()))
    }
}

/// G(ib - ia)/sqrt(a+ a-), the constant produced by each picked-up residue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GConstant {
    pub script_g: Complex64,
}

/// Gamma engine plus coupling; home of all b-dependent kernel formulas.
#[derive(Debug)]
pub struct KernelContext {
    gamma: GammaEngine,
    coupling: Coupling,
}

impl KernelContext {
    pub fn new(params: Params, b: Complex64) -> Result<Self> {
        let coupling = Coupling::new(params, b)?;
        Ok(Self {
            gamma: GammaEngine::new(params),
            coupling,
        })
    }

    pub fn gamma(&self) -> &GammaEngine {
        &self.gamma
    }

    pub fn params(&self) -> Params {
        self.coupling.params()
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn b(&self) -> Complex64 {
        self.coupling.b
    }

    /// The dual coupling 2a - b carried by the rapidity-side c-factors.
    pub fn b_dual(&self) -> Complex64 {
        2.0 * self.params().a() - self.coupling.b
    }

    pub fn phi(&self) -> Complex64 {
        self.gamma.phi(self.coupling.b)
    }

    /// ln of phi(b); exact expression, no branch ambiguity.
    pub fn ln_phi(&self) -> Complex64 {
        let b = self.coupling.b;
        I * self.params().alpha() * b * (b - 2.0 * self.params().a()) / 4.0
    }

    pub fn script_g(&self) -> Result<GConstant> {
        let p = self.params();
        let v = self.gamma.gamma(I * self.coupling.b - I * p.a())?
            / (p.a_plus() * p.a_minus()).sqrt();
        Ok(GConstant { script_g: v })
    }

    pub fn ln_script_g(&self) -> Result<Complex64> {
        let p = self.params();
        Ok(self.gamma.ln_gamma(I * self.coupling.b - I * p.a())?
            - 0.5 * (p.a_plus() * p.a_minus()).ln())
    }

    pub fn ln_c(&self, z: Complex64) -> Result<Complex64> {
        self.gamma.ln_c(self.coupling.b, z)
    }

    pub fn ln_c_dual(&self, z: Complex64) -> Result<Complex64> {
        self.gamma.ln_c(self.b_dual(), z)
    }

    pub fn u(&self, z: Complex64) -> Result<Complex64> {
        self.gamma.u_func(self.coupling.b, z)
    }

    pub fn u_dual(&self, z: Complex64) -> Result<Complex64> {
        self.gamma.u_func(self.b_dual(), z)
    }

    /// ln C_N(bb; x) = sum_{j<k} ln c(bb; x_j - x_k); empty and singleton
    /// vectors give the empty product.
    pub fn ln_cn_with(&self, bb: Complex64, x: &[Complex64]) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..x.len() {
            for k in j + 1..x.len() {
                acc += self.gamma.ln_c(bb, x[j] - x[k])?;
            }
        }
        Ok(acc)
    }

    pub fn ln_cn(&self, x: &[Complex64]) -> Result<Complex64> {
        self.ln_cn_with(self.coupling.b, x)
    }

    pub fn c_n(&self, x: &[Complex64]) -> Result<Complex64> {
        Ok(self.ln_cn(x)?.exp())
    }

    pub fn c_n_dual(&self, x: &[Complex64]) -> Result<Complex64> {
        Ok(self.ln_cn_with(self.b_dual(), x)?.exp())
    }

    /// W_N(z) = 1/(C_N(z) C_N(-z)); a singleton gives 1.
    pub fn w_n(&self, z: &[Complex64]) -> Result<Complex64> {
        let neg: Vec<Complex64> = z.iter().map(|v| -v).collect();
        let ln = self.ln_cn(z)? + self.ln_cn(&neg)?;
        let v = (-ln).exp();
        if !v.is_finite() {
            return Err(Error::Singularity {
                at: z[0],
                nearest: z[0],
                distance: 0.0,
                context: "weight function denominator vanished".into(),
            });
        }
        Ok(v)
    }

    /// ln S#(x, z) = sum_{j,k} ln c(b; z_k - x_j - ia + ib/2).
    pub fn ln_s_sharp(&self, x: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
        let shift = -I * self.params().a() + I * self.coupling.b / 2.0;
        let mut acc = Complex64::new(0.0, 0.0);
        for &zk in z {
            for &xj in x {
                acc += self.ln_c(zk - xj + shift).map_err(|e| pair_context(e, xj, zk))?;
            }
        }
        Ok(acc)
    }

    pub fn s_sharp(&self, x: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
        Ok(self.ln_s_sharp(x, z)?.exp())
    }

    /// The same kernel as a double product of G-ratios,
    /// prod_{j,k} G(z_k - x_j - ib/2)/G(z_k - x_j + ib/2).
    pub fn s_sharp_g_form(&self, x: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
        let hb = I * self.coupling.b / 2.0;
        let mut acc = Complex64::new(0.0, 0.0);
        for &zk in z {
            for &xj in x {
                acc += self.gamma.ln_gamma(zk - xj - hb)? - self.gamma.ln_gamma(zk - xj + hb)?;
            }
        }
        Ok(acc.exp())
    }

    /// K#(x, z) = S#(x, z) / (C_N(x) C_{N-1}(-z)), x of length N, z of N-1.
    pub fn k_sharp(&self, x: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
        let neg: Vec<Complex64> = z.iter().map(|v| -v).collect();
        let ln = self.ln_s_sharp(x, z)? - self.ln_cn(x)? - self.ln_cn(&neg)?;
        let v = ln.exp();
        if !v.is_finite() {
            return Err(Error::Singularity {
                at: x[0],
                nearest: x[0],
                distance: 0.0,
                context: "kernel normalization vanished (C_N(x) or C_{N-1}(-z) zero)".into(),
            });
        }
        Ok(v)
    }

    /// ln rho_N(y) = -alpha (a - b/2) sum_n (y_n - y_N).
    pub fn ln_rho_n(&self, y: &[f64]) -> Result<Complex64> {
        let hat = HatY::from_rapidities(y)?;
        let s: f64 = hat.0.iter().sum();
        Ok(-self.params().alpha() * (self.params().a() - self.coupling.b / 2.0) * s)
    }

    pub fn rho_n(&self, y: &[f64]) -> Result<Complex64> {
        Ok(self.ln_rho_n(y)?.exp())
    }

    /// ln M_N(y) = (N-1) ln phi + ln rho_N - sum_n ln c(2a-b; y_n - y_N).
    pub fn ln_m_n(&self, y: &[f64]) -> Result<Complex64> {
        let hat = HatY::from_rapidities(y)?;
        let mut acc = (y.len() - 1) as f64 * self.ln_phi() + self.ln_rho_n(y)?;
        for &d in &hat.0 {
            acc -= self.ln_c_dual(Complex64::new(d, 0.0))?;
        }
        Ok(acc)
    }

    pub fn m_n(&self, y: &[f64]) -> Result<Complex64> {
        Ok(self.ln_m_n(y)?.exp())
    }

    /// Right-hand side of the pair-product factorization of C_N over a
    /// subset nu (strictly increasing, zero-based): C_L(x_nu) *
    /// C_{N-L}(x(nu)) * cross factors keeping the original orientation.
    pub fn cn_factorization_rhs(&self, x: &[Complex64], nu: &[usize]) -> Result<Complex64> {
        let n = x.len();
        if nu.windows(2).any(|w| w[0] >= w[1]) || nu.iter().any(|&v| v >= n) {
            return Err(Error::Parameter("subset must be strictly increasing and in range".into()));
        }
        let sel: Vec<Complex64> = nu.iter().map(|&v| x[v]).collect();
        let rest: Vec<Complex64> = (0..n).filter(|j| !nu.contains(j)).map(|j| x[j]).collect();
        let mut ln = self.ln_cn(&sel)? + self.ln_cn(&rest)?;
        for (l, &nl) in nu.iter().enumerate() {
            for j in 0..n {
                if nu[..l].contains(&j) || nu[l..].contains(&j) {
                    continue;
                }
                ln += if j < nl {
                    self.ln_c(x[j] - x[nl])?
                } else {
                    self.ln_c(x[nl] - x[j])?
                };
            }
        }
        Ok(ln.exp())
    }
}

fn pair_context(e: Error, xj: Complex64, zk: Complex64) -> Error {
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
            context: format!("{context} (kernel factor x = {xj}, z = {zk})"),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn ctx(ap: f64, am: f64, b: f64) -> KernelContext {
        KernelContext::new(Params::new(ap, am).unwrap(), Complex64::new(b, 0.0)).unwrap()
    }

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_reals(rng: &mut StdRng, n: usize, lo: f64, hi: f64) -> Vec<Complex64> {
        (0..n).map(|_| c64(rng.gen_range(lo..hi), 0.0)).collect()
    }

    #[test]
    fn c_n_base_cases() {
        let k = ctx(1.0, 1.0, 0.7);
        assert_eq!(k.c_n(&[]).unwrap(), c64(1.0, 0.0));
        assert_eq!(k.c_n(&[c64(0.3, 0.0)]).unwrap(), c64(1.0, 0.0));
        let x = [c64(0.4, 0.0), c64(-0.1, 0.0)];
        let single = k.gamma().c_func(k.b(), x[0] - x[1]).unwrap();
        assert!((k.c_n(&x).unwrap() - single).norm() < 1e-13);
    }

    #[test]
    fn c_n_vanishes_at_coupling_separation() {
        // x_1 - x_2 = ib is the first zero of the pair factor
        let k = ctx(1.0, 1.0, 0.7);
        let x = [c64(0.0, 0.7), c64(0.0, 0.0)];
        assert!(k.c_n(&x).unwrap().norm() < 1e-8);
    }

    #[test]
    fn w_n_reality_and_permutation() {
        let k = ctx(1.0, 0.8, 0.6);
        assert_eq!(k.w_n(&[c64(0.2, 0.0)]).unwrap(), c64(1.0, 0.0));
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let z = rand_reals(&mut rng, 3, -2.0, 2.0);
            let w = k.w_n(&z).unwrap();
            // real b, real z: W = 1/|C_N(z)|^2 > 0
            assert!(w.im.abs() < 1e-10 * w.re.abs());
            assert!(w.re > 0.0);
            let cn = k.c_n(&z).unwrap();
            assert!((w.re - 1.0 / cn.norm_sqr()).abs() < 1e-10 * w.re);
            let perm = [z[2], z[0], z[1]];
            let wp = k.w_n(&perm).unwrap();
            assert!((w - wp).norm() < 1e-12 * w.norm());
        }
    }

    #[test]
    fn s_sharp_two_forms_agree() {
        let k = ctx(1.0, 0.8, 0.55);
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..10 {
            let x = rand_reals(&mut rng, 3, -1.5, 1.5);
            let z = rand_reals(&mut rng, 2, -1.5, 1.5);
            let a = k.s_sharp(&x, &z).unwrap();
            let b = k.s_sharp_g_form(&x, &z).unwrap();
            assert!((a - b).norm() < 1e-11 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn s_sharp_symmetry_and_n2_form() {
        let k = ctx(1.0, 1.0, 0.5);
        let x = [c64(0.3, 0.0), c64(-0.2, 0.0)];
        let z = [c64(0.7, 0.0)];
        let ia = c64(0.0, 1.0);
        let direct = k.gamma().c_func(k.b(), z[0] - x[0] - ia + c64(0.0, 0.25)).unwrap()
            * k.gamma().c_func(k.b(), z[0] - x[1] - ia + c64(0.0, 0.25)).unwrap();
        assert!((k.s_sharp(&x, &z).unwrap() - direct).norm() < 1e-12 * direct.norm());

        let mut rng = StdRng::seed_from_u64(3);
        let x = rand_reals(&mut rng, 3, -1.0, 1.0);
        let z = rand_reals(&mut rng, 2, -1.0, 1.0);
        let base = k.s_sharp(&x, &z).unwrap();
        let xp = [x[1], x[2], x[0]];
        let zp = [z[1], z[0]];
        assert!((k.s_sharp(&xp, &z).unwrap() - base).norm() < 1e-12 * base.norm());
        assert!((k.s_sharp(&x, &zp).unwrap() - base).norm() < 1e-12 * base.norm());
    }

    #[test]
    fn k_sharp_definition_and_finiteness() {
        let k = ctx(1.0, 0.8, 0.9);
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let x = rand_reals(&mut rng, 3, -2.0, 2.0);
            let z = rand_reals(&mut rng, 2, -2.0, 2.0);
            let ks = k.k_sharp(&x, &z).unwrap();
            assert!(ks.is_finite());
            let neg: Vec<Complex64> = z.iter().map(|v| -v).collect();
            let recon = ks * k.c_n(&x).unwrap() * k.c_n(&neg).unwrap();
            let ss = k.s_sharp(&x, &z).unwrap();
            assert!((recon - ss).norm() < 1e-11 * ss.norm());
        }
        // N=2: K# = S#_2 / c(x1 - x2)
        let x = [c64(0.4, 0.0), c64(-0.3, 0.0)];
        let z = [c64(0.2, 0.0)];
        let want = k.s_sharp(&x, &z).unwrap() / k.gamma().c_func(k.b(), x[0] - x[1]).unwrap();
        assert!((k.k_sharp(&x, &z).unwrap() - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn rho_and_m_basics() {
        let k = ctx(1.0, 1.0, 0.8);
        // equal rapidities: empty exponent
        assert!((k.rho_n(&[0.3, 0.3, 0.3]).unwrap() - 1.0).norm() < 1e-15);
        // invariance under common shifts
        let y = [1.2, 0.1, -0.9];
        let ys: Vec<f64> = y.iter().map(|v| v + 0.77).collect();
        let m0 = k.m_n(&y).unwrap();
        let m1 = k.m_n(&ys).unwrap();
        assert!((m0 - m1).norm() < 1e-12 * m0.norm());
        // |M_N - 1| small at large separation: d_N(y) = 10a
        let y = [20.0, 10.0, 0.0];
        assert!((k.m_n(&y).unwrap() - 1.0).norm() < 1e-8);
    }

    #[test]
    fn cn_factorization() {
        let mut rng = StdRng::seed_from_u64(42);
        let k = ctx(1.0, 0.8, 0.6);
        for n in 2..=5usize {
            for _ in 0..8 {
                let x = rand_reals(&mut rng, n, -2.0, 2.0);
                let l = rng.gen_range(1..=n - 1);
                let mut idx: Vec<usize> = (0..n).collect();
                for i in 0..l {
                    let j = rng.gen_range(i..n);
                    idx.swap(i, j);
                }
                let mut nu: Vec<usize> = idx[..l].to_vec();
                nu.sort_unstable();
                let lhs = k.c_n(&x).unwrap();
                let rhs = k.cn_factorization_rhs(&x, &nu).unwrap();
                assert!(
                    (lhs - rhs).norm() < 1e-10 * lhs.norm(),
                    "n={n} nu={nu:?}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn c_envelope_is_bounded_on_shifted_lines() {
        // |c(b; p + ir)| e^{gamma |p|} stays bounded; the bound is attained
        // either within |p| <= 5a or at the asymptotic plateau |phi|^{+-1},
        // which the grid tails approach from below
        let k = ctx(1.0, 0.8, 0.6);
        let gam = k.coupling().gamma();
        let a = k.params().a();
        let phi = k.phi().norm();
        let plateau = phi.max(1.0 / phi);
        for frac in [0.25, 0.5, 0.75] {
            let r = frac * k.params().a_s();
            let mut grid_max: f64 = 0.0;
            let mut central_max: f64 = 0.0;
            let mut p = -20.0 * a;
            while p <= 20.0 * a {
                let v = k.gamma().c_func(k.b(), c64(p, r)).unwrap().norm() * (gam * p.abs()).exp();
                grid_max = grid_max.max(v);
                if p.abs() <= 5.0 * a {
                    central_max = central_max.max(v);
                }
                p += 0.25;
            }
            assert!(grid_max.is_finite());
            assert!(
                grid_max <= central_max.max(plateau) * (1.0 + 1e-9),
                "r = {r}: grid max {grid_max} vs central {central_max}, plateau {plateau}"
            );
        }
    }

    #[test]
    fn inverse_c_sinh_channel_is_bounded() {
        // |1/c(b;z)| / |sinh(gamma z)| bounded on the real grid, finite through 0
        let k = ctx(1.0, 0.8, 0.6);
        let gam = k.coupling().gamma();
        let mut max_ratio: f64 = 0.0;
        let mut near_zero = Vec::new();
        for i in -160..=160i32 {
            let z = 0.125 * i as f64 * k.params().a();
            if z == 0.0 {
                continue;
            }
            let inv_c = 1.0 / k.gamma().c_func(k.b(), c64(z, 0.0)).unwrap().norm();
            let ratio = inv_c / (gam * z).sinh().abs();
            max_ratio = max_ratio.max(ratio);
            if z.abs() < 0.3 {
                near_zero.push(ratio);
            }
        }
        assert!(max_ratio.is_finite() && max_ratio < 1e3);
        // continuity through zero: near-zero ratios within a factor 1.5
        let lo = near_zero.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = near_zero.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo < 1.5, "ratio jump through 0: {lo} .. {hi}");
    }

    #[test]
    fn hat_map() {
        assert_eq!(HatY::from_rapidities(&[3.0, 1.0, 0.5]).unwrap().0, vec![2.5, 0.5]);
        assert!(HatY::from_rapidities(&[1.0]).is_err());
    }
}
