//! Recursive evaluation of the joint eigenfunctions J_N and E_N.
//!
//! Each level N >= 2 is an (N-1)-dimensional integral of a kernel times the
//! level-(N-1) function at shifted rapidities; the base level is a plane
//! wave. All levels of one evaluation share a single panelized
//! Gauss-Legendre grid so that every c-factor argument is a grid
//! difference, cached once per (panel offset, node, node) triple. The inner
//! function is tabulated on the grid and reused across outer nodes.
//!
//! Contours may be lifted off the real axis inside the pole-free band
//! |Im| < a - Re b/2. A common lift h across the axes of one level leaves
//! every pairwise difference real and multiplies the inner function by the
//! translation phase exp(-alpha h sum(yhat)); that factor is combined with
//! the prefactors in log space. Lifting trades the oscillatory cancellation
//! exp(-alpha (a - Re b/2) sum(yhat)) of the real-line integral for an
//! explicit exponential, which is what keeps large rapidity separations
//! inside f64 range.

use crate::error::{Error, Result};
use crate::kernels::{HatY, KernelContext};
use crate::params::centered_coords;
use crate::quad::gauss_legendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Form {
    J,
    E,
}

/// Shared 1-D grid description: [-T, T] split into `panels` panels of
/// `nodes_per_panel` Gauss-Legendre nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub truncation: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl GridSpec {
    pub(crate) fn build(&self) -> Grid1D {
        let (xg, wg) = gauss_legendre(self.nodes_per_panel);
        let width = 2.0 * self.truncation / self.panels as f64;
        let half = 0.5 * width;
        let mut nodes = Vec::with_capacity(self.panels * self.nodes_per_panel);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for p in 0..self.panels {
            let center = -self.truncation + (p as f64 + 0.5) * width;
            for (x, w) in xg.iter().zip(&wg) {
                nodes.push(center + half * x);
                weights.push(half * w);
            }
        }
        Grid1D {
            panels: self.panels,
            k: self.nodes_per_panel,
            width,
            half,
            xg,
            nodes,
            weights,
        }
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.panels * self.nodes_per_panel
    }

    fn halved(&self) -> GridSpec {
        GridSpec {
            truncation: self.truncation,
            panels: self.panels,
            nodes_per_panel: (self.nodes_per_panel / 2).max(2),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Grid1D {
    panels: usize,
    k: usize,
    width: f64,
    half: f64,
    xg: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid1D {
    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Difference node(p2, i) - node(p1, j) computed from indices, so equal
    /// differences are bit-identical across panel pairs.
    fn diff(&self, dp: i64, i: usize, j: usize) -> f64 {
        dp as f64 * self.width + self.half * (self.xg[i] - self.xg[j])
    }

}

/// ln c values (or any complex function of a grid difference) indexed by
/// (panel offset, node, node).
struct DiffTable {
    pm1: i64,
    k: usize,
    data: Vec<Complex64>,
}

impl DiffTable {
    fn build<F>(grid: &Grid1D, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<Complex64> + Sync,
    {
        let pm1 = grid.panels as i64 - 1;
        let k = grid.k;
        let total = (2 * grid.panels - 1) * k * k;
        let data: Vec<Result<Complex64>> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let dp = (flat / (k * k)) as i64 - pm1;
                let i = (flat / k) % k;
                let j = flat % k;
                f(grid.diff(dp, i, j))
            })
            .collect();
        let mut vals = Vec::with_capacity(total);
        for v in data {
            vals.push(v?);
        }
        Ok(Self { pm1, k, data: vals })
    }

    /// Value at node2 - node1, both flat grid indices.
    #[inline]
    fn at(&self, flat2: usize, flat1: usize) -> Complex64 {
        let (p2, i) = ((flat2 / self.k) as i64, flat2 % self.k);
        let (p1, j) = ((flat1 / self.k) as i64, flat1 % self.k);
        let dp = (p2 - p1 + self.pm1) as usize;
        self.data[(dp * self.k + i) * self.k + j]
    }
}

/// Evaluation controls. Either give a full grid/lift plan or let the
/// planner derive one from the tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSettings {
    pub tolerance: f64,
    /// Shared 1-D grid override.
    pub grid: Option<GridSpec>,
    /// Per-level contour lifts, indexed by level (entry m applies to the
    /// integral producing level m). Entries 0 and 1 are ignored.
    pub lifts: Option<Vec<f64>>,
    /// Engage contour lifts automatically when the rapidity spread makes
    /// the real-line integral lose more digits than the tolerance affords.
    pub auto_lift: bool,
    pub max_level: usize,
    /// Reuse tabulated inner levels across evaluations.
    pub use_table_cache: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            grid: None,
            lifts: None,
            auto_lift: true,
            max_level: 4,
            use_table_cache: true,
        }
    }
}

/// Result of one evaluation: value, node-halving error estimate, work and
/// cache statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub value_re: f64,
    pub value_im: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
    pub table_hits: u64,
    pub table_misses: u64,
}

impl EvalOutcome {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct TableKey {
    form: Form,
    level: usize,
    heads: Vec<(u64, u64)>,
    tail_lift: u64,
    yhat: Vec<u64>,
    grid: (u64, usize, usize),
    lifts: Vec<u64>,
}

/// Raw contour integral of one recursion step, before prefactors:
/// grid_sum * exp(ln_extraction) equals
/// int_{(R + ih)^{N-1}} S#(x, z)/C_{N-1}(-z) * F_{N-1}(z, yhat) dz
/// with F the inner J or E level.
#[derive(Debug, Clone, Copy)]
pub struct RawIntegral {
    pub grid_sum: Complex64,
    pub ln_extraction: Complex64,
    pub evaluations: u64,
}

/// Evaluator for the recursion; immutable after construction apart from
/// the internal tabulation caches.
pub struct EigenEvaluator {
    ctx: KernelContext,
    pub settings: EvalSettings,
    tables: Mutex<TableStore>,
    diff_tables: Mutex<HashMap<(u64, usize, usize, u64, u64), Arc<DiffTable>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

struct TableStore {
    map: HashMap<TableKey, Arc<Vec<Complex64>>>,
    order: Vec<TableKey>,
    capacity: usize,
}

impl TableStore {
    fn new(capacity: usize) -> Self {
        Self {
            map: HashMap::new(),
            order: Vec::new(),
            capacity,
        }
    }

    fn insert(&mut self, key: TableKey, value: Arc<Vec<Complex64>>) {
        if self.map.len() >= self.capacity {
            // FIFO eviction; correctness is unaffected, only reuse
            if let Some(old) = self.order.first().cloned() {
                self.map.remove(&old);
                self.order.remove(0);
            }
        }
        self.order.push(key.clone());
        self.map.insert(key, value);
    }
}

fn table_cache_capacity() -> usize {
    std::env::var("RELCM_TABLE_CACHE")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(32)
}

fn bits(v: f64) -> u64 {
    v.to_bits()
}

fn cbits(v: Complex64) -> (u64, u64) {
    (v.re.to_bits(), v.im.to_bits())
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Internal plan: one shared grid plus per-level lifts.
#[derive(Debug, Clone)]
pub struct Plan {
    pub grid: GridSpec,
    pub lifts: Vec<f64>,
    /// Largest residual oscillatory-cancellation exponent left after the
    /// lifts; exp of this times machine epsilon bounds the noise floor.
    pub eps_res_max: f64,
}

impl EigenEvaluator {
    pub fn new(ctx: KernelContext, settings: EvalSettings) -> Self {
        Self {
            ctx,
            settings,
            tables: Mutex::new(TableStore::new(table_cache_capacity())),
            diff_tables: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn context(&self) -> &KernelContext {
        &self.ctx
    }

    /// ln c(b; grid difference + offset) table, cached per (grid, offset).
    fn ln_diff_table(
        &self,
        grid: &Grid1D,
        spec: &GridSpec,
        offset: Complex64,
    ) -> Result<Arc<DiffTable>> {
        let key = (
            bits(spec.truncation),
            spec.panels,
            spec.nodes_per_panel,
            bits(offset.re),
            bits(offset.im),
        );
        if let Some(t) = self.diff_tables.lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let table = Arc::new(DiffTable::build(grid, |dv| self.ctx.ln_c(dv + offset))?);
        self.diff_tables
            .lock()
            .unwrap()
            .insert(key, table.clone());
        Ok(table)
    }

    /// exp of minus the pair factor of the given form, materialized as a
    /// full matrix: entry [q*n + p] couples first-axis node p with
    /// second-axis node q. Built from the collapsed ln c difference table.
    fn pair_exp_table(
        &self,
        form: Form,
        grid: &Grid1D,
        spec: &GridSpec,
    ) -> Result<Vec<Complex64>> {
        let tbl = self.ln_diff_table(grid, spec, ZERO)?;
        let n = grid.len();
        let data: Vec<Complex64> = (0..n * n)
            .into_par_iter()
            .map(|flat| {
                let (q, p) = (flat / n, flat % n);
                match form {
                    // C_{m-1}(-w): ordered pair contributes c(w_q - w_p)
                    Form::E => (-tbl.at(q, p)).exp(),
                    // W_{m-1}: both orientations
                    Form::J => (-tbl.at(q, p) - tbl.at(p, q)).exp(),
                }
            })
            .collect();
        Ok(data)
    }

    /// Pole-free half-band width for real arguments: a - Re b / 2.
    fn band(&self) -> f64 {
        self.ctx.params().a() - 0.5 * self.ctx.b().re
    }

    /// Derive grid and lifts for a level-`n` evaluation at positions with
    /// the given imaginary spread and rapidities `y`. Deterministic.
    pub fn plan(&self, n: usize, x: &[Complex64], y: &[f64]) -> Result<Plan> {
        if let (Some(grid), Some(lifts)) = (&self.settings.grid, &self.settings.lifts) {
            return Ok(Plan {
                grid: grid.clone(),
                lifts: lifts.clone(),
                eps_res_max: 0.0,
            });
        }
        let p = self.ctx.params();
        let alpha = p.alpha();
        let gam = self.ctx.coupling().gamma();
        let tol = self.settings.tolerance.clamp(1e-13, 1e-1);
        let max_im = x.iter().map(|v| v.im.abs()).fold(0.0f64, f64::max);
        let band_free = (self.band() - max_im).max(1e-3 * p.a_s());

        // residual oscillatory-cancellation exponent the grid must absorb;
        // beyond it the contour is lifted
        let eps_budget = (0.85 * ((1e14 * tol).ln())).clamp(2.0, 16.0);

        // per-level hat vectors drive oscillation density and lifts
        let mut lifts = vec![0.0; n + 1];
        let mut yv: Vec<f64> = y.to_vec();
        let mut min_clearance = band_free;
        let mut per_unit: f64 = 2.5;
        let mut eps_max: f64 = 0.0;
        for m in (2..=n).rev() {
            let hat = HatY::from_rapidities(&yv)?.0;
            let ymax = hat.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let s: f64 = hat.iter().sum();
            let cancel = alpha * band_free * s.abs();
            let mut eps_res = cancel;
            if self.settings.auto_lift && cancel > eps_budget {
                let frac = (1.0 - eps_budget / cancel).min(0.92);
                lifts[m] = s.signum() * frac * band_free;
                min_clearance = min_clearance.min(band_free - lifts[m].abs());
                eps_res = cancel * (1.0 - frac);
            }
            eps_max = eps_max.max(eps_res);
            let digits = ((1.0 / tol).ln() + eps_res + 6.0) / std::f64::consts::LN_10;
            let nodes_per_period = 3.2 + 0.42 * digits;
            let freq = alpha * ymax + 2.0 * gam;
            per_unit = per_unit.max(freq * nodes_per_period / (2.0 * std::f64::consts::PI));
            yv = hat;
        }
        if let Some(explicit) = &self.settings.lifts {
            lifts = explicit.clone();
            for &h in explicit.iter() {
                if h.abs() > 0.0 {
                    min_clearance = min_clearance.min(band_free - h.abs());
                }
            }
        }
        if min_clearance <= 0.0 {
            return Err(Error::Contour(format!(
                "lift exceeds the pole-free band (width {band_free:.4})"
            )));
        }

        let grid = if let Some(g) = &self.settings.grid {
            g.clone()
        } else {
            let spread = x.iter().map(|v| v.re.abs()).fold(0.0f64, f64::max);
            let t = ((1.0 / tol).ln() + eps_max + 6.0) / (2.0 * gam) + spread + 0.6 * p.a();
            per_unit = per_unit
                .max(3.0 / min_clearance)
                .max(3.0 / p.a_s());
            let nodes_per_panel = 16;
            let panels = ((2.0 * t * per_unit / nodes_per_panel as f64).ceil() as usize).max(4);
            GridSpec {
                truncation: t,
                panels,
                nodes_per_panel,
            }
        };
        Ok(Plan {
            grid,
            lifts,
            eps_res_max: eps_max,
        })
    }

    fn table_stats(&self) -> (u64, u64) {
        (
            self.hits.load(Ordering::Relaxed),
            self.misses.load(Ordering::Relaxed),
        )
    }

    /// Tabulate the level-`m` function over `d = m - heads.len()` tail axes
    /// running over the grid nodes shifted by i*tail_lift. Row-major, the
    /// first tail axis slowest.
    pub(crate) fn tabulate(
        &self,
        form: Form,
        m: usize,
        heads: &[Complex64],
        tail_lift: f64,
        yv: &[f64],
        grid: &Grid1D,
        spec: &GridSpec,
        lifts: &[f64],
        evals: &mut u64,
    ) -> Result<Arc<Vec<Complex64>>> {
        assert_eq!(yv.len(), m);
        let d = m - heads.len();
        let alpha = self.ctx.params().alpha();

        let key = TableKey {
            form,
            level: m,
            heads: heads.iter().map(|&h| cbits(h)).collect(),
            tail_lift: bits(tail_lift),
            yhat: yv.iter().map(|&v| bits(v)).collect(),
            grid: (bits(spec.truncation), spec.panels, spec.nodes_per_panel),
            lifts: lifts.iter().map(|&v| bits(v)).collect(),
        };
        if self.settings.use_table_cache {
            if let Some(t) = self.tables.lock().unwrap().map.get(&key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(t.clone());
            }
            self.misses.fetch_add(1, Ordering::Relaxed);
        }

        let out: Vec<Complex64> = if m == 1 {
            if d == 0 {
                vec![(I * alpha * heads[0] * yv[0]).exp()]
            } else {
                grid.nodes
                    .iter()
                    .map(|&t| (I * alpha * Complex64::new(t, tail_lift) * yv[0]).exp())
                    .collect()
            }
        } else {
            self.tabulate_step(form, m, heads, tail_lift, yv, grid, spec, lifts, evals)?
        };
        let arc = Arc::new(out);
        if self.settings.use_table_cache {
            self.tables.lock().unwrap().insert(key, arc.clone());
        }
        Ok(arc)
    }

    /// One recursion step of `tabulate` for m >= 2.
    #[allow(clippy::too_many_arguments)]
    fn tabulate_step(
        &self,
        form: Form,
        m: usize,
        heads: &[Complex64],
        tail_lift: f64,
        yv: &[f64],
        grid: &Grid1D,
        spec: &GridSpec,
        lifts: &[f64],
        evals: &mut u64,
    ) -> Result<Vec<Complex64>> {
        let d = m - heads.len();
        let n = grid.len();
        let mi = m - 1; // inner integration axes
        let alpha = self.ctx.params().alpha();
        let h = lifts.get(m).copied().unwrap_or(0.0);
        let shift = -I * self.ctx.params().a() + I * self.ctx.b() / 2.0;

        let hat = HatY::from_rapidities(yv)?.0;
        let inner = self.tabulate(form, mi, &[], 0.0, &hat, grid, spec, lifts, evals)?;
        let hat_sum: f64 = hat.iter().sum();

        // S-factor of each head at every inner node w_i = node_i + ih
        let mut sfac_heads = vec![ZERO; n];
        for &head in heads {
            for (i, &r) in grid.nodes.iter().enumerate() {
                sfac_heads[i] += self.ctx.ln_c(Complex64::new(r, h) - head + shift)?;
            }
        }
        // S-factor between an inner node and a tail-grid argument
        let s_tail = if d > 0 {
            let off = Complex64::new(0.0, h - tail_lift) + shift;
            Some(self.ln_diff_table(grid, spec, off)?)
        } else {
            None
        };
        // pairwise ln c on real grid differences: inner C_{m-1}(-w) factors,
        // the J-form weight, and (E-form) tail-tail pairs of C_m(args)
        let pair_ln = if mi >= 2 || (form == Form::E && d >= 2) {
            Some(self.ln_diff_table(grid, spec, ZERO)?)
        } else {
            None
        };
        // exp of minus the pair factor, per form
        let pair_exp: Option<Vec<Complex64>> = if mi >= 2 {
            Some(self.pair_exp_table(form, grid, spec)?)
        } else {
            None
        };
        // E-form: head-tail and head-head parts of ln C_m(args)
        let (lncm_heads, lncm_head_tail) = if form == Form::E {
            let mut hh = ZERO;
            for a1 in 0..heads.len() {
                for a2 in a1 + 1..heads.len() {
                    hh += self.ctx.ln_c(heads[a1] - heads[a2])?;
                }
            }
            let mut ht = vec![ZERO; n];
            if d > 0 {
                for (t, &r) in grid.nodes.iter().enumerate() {
                    let tail = Complex64::new(r, tail_lift);
                    for &head in heads {
                        ht[t] += self.ctx.ln_c(head - tail)?;
                    }
                }
            }
            (hh, ht)
        } else {
            (ZERO, vec![ZERO; n])
        };

        // constant part of the per-entry log prefactor
        let mut ln_pref = -Complex64::new(ln_factorial(mi), 0.0)
            - alpha * h * hat_sum * Complex64::new(1.0, 0.0);
        if form == Form::E {
            ln_pref += mi as f64 * (self.ctx.ln_phi() + self.ctx.ln_script_g()?);
            for &hv in &hat {
                ln_pref -= self.ctx.ln_c_dual(Complex64::new(hv, 0.0))?;
            }
            ln_pref -= lncm_heads;
        }
        let head_sum: Complex64 = heads.iter().sum();
        let y_last = yv[m - 1];

        // per-inner-node combined factor exp(sfac_heads) * weight
        let base_axis: Vec<Complex64> = (0..n)
            .map(|i| sfac_heads[i].exp() * grid.weights[i])
            .collect();
        // exp of the tail S-factor, per (inner node, tail node)
        let s_tail_exp: Option<Vec<Complex64>> = s_tail.as_ref().map(|tbl| {
            (0..n * n)
                .map(|flat| tbl.at(flat / n, flat % n).exp())
                .collect()
        });

        let entries = n.pow(d as u32);
        *evals += (entries as u64) * (n.pow(mi as u32) as u64);
        let inner_ref: &[Complex64] = &inner;
        let values: Vec<Complex64> = (0..entries)
            .into_par_iter()
            .map_init(
                || vec![ZERO; n],
                |axis, flat| {
                    // tail node indices of this entry
                    let mut idx = [0usize; 4];
                    let mut rem = flat;
                    for ax in (0..d).rev() {
                        idx[ax] = rem % n;
                        rem /= n;
                    }
                    let tails = &idx[..d];
                    // E vanishes at coinciding arguments; C_m has a pole
                    // there and the assembled value is exp(-inf) * finite
                    if form == Form::E && d >= 2 {
                        for a1 in 0..d {
                            for a2 in a1 + 1..d {
                                if tails[a1] == tails[a2] {
                                    return ZERO;
                                }
                            }
                        }
                    }
                    // per-axis vector: base * tail couplings
                    match s_tail_exp.as_ref() {
                        Some(se) => {
                            for i in 0..n {
                                let mut v = base_axis[i];
                                for &t in tails {
                                    v *= se[i * n + t];
                                }
                                axis[i] = v;
                            }
                        }
                        None => axis.copy_from_slice(&base_axis),
                    }
                    let sum = inner_sum(mi, axis, pair_exp.as_deref(), inner_ref, n);
                    // entry prefactor
                    let mut lp = ln_pref;
                    let mut args_sum = head_sum;
                    for &t in tails {
                        args_sum += Complex64::new(grid.nodes[t], tail_lift);
                    }
                    lp += I * alpha * y_last * args_sum;
                    if form == Form::E {
                        for (a1, &t1) in tails.iter().enumerate() {
                            lp -= lncm_head_tail[t1];
                            for &t2 in &tails[a1 + 1..] {
                                // ln c(tail_{a1} - tail_{a2}) over real diffs
                                lp -= pair_ln.as_ref().unwrap().at(t1, t2);
                            }
                        }
                    }
                    lp.exp() * sum
                },
            )
            .collect();
        Ok(values)
    }

    /// Level-n contour integral against the tabulated inner level:
    /// sum over the (n-1)-axis grid of S#(x, .)/C(-.) [or W] times the
    /// inner table, with the common lift extracted analytically.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn raw_integral(
        &self,
        form: Form,
        sources: &[Complex64],
        dims: usize,
        tab: &[Complex64],
        h: f64,
        hat_sum: f64,
        grid: &Grid1D,
        spec: &GridSpec,
        evals: &mut u64,
    ) -> Result<RawIntegral> {
        let n = grid.len();
        let shift = -I * self.ctx.params().a() + I * self.ctx.b() / 2.0;
        let alpha = self.ctx.params().alpha();
        let mut sfac = vec![ZERO; n];
        for &src in sources {
            for (i, &r) in grid.nodes.iter().enumerate() {
                sfac[i] += self.ctx.ln_c(Complex64::new(r, h) - src + shift)?;
            }
        }
        let axis: Vec<Complex64> = (0..n)
            .map(|i| sfac[i].exp() * grid.weights[i])
            .collect();
        let pair_exp: Option<Vec<Complex64>> = if dims >= 2 {
            Some(self.pair_exp_table(form, grid, spec)?)
        } else {
            None
        };
        *evals += n.pow(dims as u32) as u64;
        let grid_sum = parallel_inner_sum(dims, &axis, pair_exp.as_deref(), tab, n);
        Ok(RawIntegral {
            grid_sum,
            ln_extraction: Complex64::new(-alpha * h * hat_sum, 0.0),
            evaluations: n.pow(dims as u32) as u64,
        })
    }

    fn eval_once(
        &self,
        form: Form,
        x: &[Complex64],
        y: &[f64],
        spec: &GridSpec,
        lifts: &[f64],
    ) -> Result<(Complex64, u64)> {
        let n = x.len();
        let alpha = self.ctx.params().alpha();
        if n == 1 {
            return Ok(((I * alpha * x[0] * y[0]).exp(), 1));
        }
        let grid = spec.build();
        let mut evals = 0u64;
        let hat = HatY::from_rapidities(y)?.0;
        let hat_sum: f64 = hat.iter().sum();
        let tab = self.tabulate(form, n - 1, &[], 0.0, &hat, &grid, spec, lifts, &mut evals)?;
        let h = lifts.get(n).copied().unwrap_or(0.0);
        let raw = self.raw_integral(form, x, n - 1, &tab, h, hat_sum, &grid, spec, &mut evals)?;
        let x_sum: Complex64 = x.iter().sum();
        let mut ln_pref =
            I * alpha * y[n - 1] * x_sum - ln_factorial(n - 1) + raw.ln_extraction;
        if form == Form::E {
            ln_pref += (n - 1) as f64 * (self.ctx.ln_phi() + self.ctx.ln_script_g()?);
            for &hv in &hat {
                ln_pref -= self.ctx.ln_c_dual(Complex64::new(hv, 0.0))?;
            }
            ln_pref -= self.ctx.ln_cn(x)?;
        }
        let value = ln_pref.exp() * raw.grid_sum;
        if !value.is_finite() {
            return Err(Error::NonFinite(format!(
                "level-{n} evaluation produced a non-finite value"
            )));
        }
        Ok((value, evals))
    }

    /// Validate and center complex positions; returns (centered x, the ln
    /// of the translation factor restoring the original arguments).
    fn center_x(&self, x: &[Complex64], y: &[f64]) -> Result<(Vec<Complex64>, Complex64)> {
        let hi = x.iter().map(|v| v.im).fold(f64::NEG_INFINITY, f64::max);
        let lo = x.iter().map(|v| v.im).fold(f64::INFINITY, f64::min);
        if hi == lo && hi == 0.0 {
            return Ok((x.to_vec(), ZERO));
        }
        let mid = 0.5 * (hi + lo);
        let centered: Vec<Complex64> = x.iter().map(|&v| v - I * mid).collect();
        let max_im = 0.5 * (hi - lo);
        if max_im >= self.band() {
            return Err(Error::Precondition(format!(
                "imaginary spread {:.4} of the positions exceeds the pole-free band {:.4}",
                2.0 * max_im,
                2.0 * self.band()
            )));
        }
        // translation identity: F(x) = exp(i alpha eta sum y) F(x - eta), eta = i*mid
        let ysum: f64 = y.iter().sum();
        let ln_shift = I * self.ctx.params().alpha() * (I * mid) * ysum;
        Ok((centered, ln_shift))
    }

    fn run(&self, form: Form, x: &[Complex64], y: &[f64]) -> Result<EvalOutcome> {
        let n = x.len();
        if n == 0 || y.len() != n {
            return Err(Error::Dimension(format!(
                "positions and rapidities must have equal nonzero length, got {} and {}",
                n,
                y.len()
            )));
        }
        if n > self.settings.max_level {
            return Err(Error::Parameter(format!(
                "level {n} exceeds the configured maximum {}",
                self.settings.max_level
            )));
        }
        for v in x {
            if !v.is_finite() {
                return Err(Error::NonFinite("position".into()));
            }
        }
        let (xc, ln_shift) = self.center_x(x, y)?;
        let plan = self.plan(n, &xc, y)?;
        let (h0, m0) = self.table_stats();
        let (fine, ev1) = self.eval_once(form, &xc, y, &plan.grid, &plan.lifts)?;
        let (coarse, ev2) = self.eval_once(form, &xc, y, &plan.grid.halved(), &plan.lifts)?;
        let (h1, m1) = self.table_stats();
        let shift = ln_shift.exp();
        let value = fine * shift;
        Ok(EvalOutcome {
            value_re: value.re,
            value_im: value.im,
            error_estimate: ((fine - coarse) * shift).norm(),
            evaluations: ev1 + ev2,
            table_hits: h1 - h0,
            table_misses: m1 - m0,
        })
    }

    /// J_N by the defining representation (plane wave at level 1).
    pub fn j(&self, x: &[Complex64], y: &[f64]) -> Result<EvalOutcome> {
        self.run(Form::J, x, y)
    }

    /// J_N through the center-of-mass split: exp(N i alpha X Y) J(x - X, y).
    pub fn j_alt(&self, x: &[Complex64], y: &[f64]) -> Result<EvalOutcome> {
        let n = x.len();
        if n == 0 || y.len() != n {
            return Err(Error::Dimension("empty configuration".into()));
        }
        let (xbar, xc) = centered_coords(x)?;
        let ybar = y.iter().sum::<f64>() / n as f64;
        let mut out = self.run(Form::J, &xc, y)?;
        let phase = (I * self.ctx.params().alpha() * n as f64 * xbar * ybar).exp();
        let v = out.value() * phase;
        out.value_re = v.re;
        out.value_im = v.im;
        out.error_estimate *= phase.norm();
        Ok(out)
    }

    /// E_N by the normalized representation (kernel K#, inner level E).
    pub fn e(&self, x: &[Complex64], y: &[f64]) -> Result<EvalOutcome> {
        self.run(Form::E, x, y)
    }

    /// E_N assembled from J_N and the explicit c-function prefactors.
    pub fn e_via_j(&self, x: &[Complex64], y: &[f64]) -> Result<EvalOutcome> {
        let n = x.len();
        let mut out = self.j(x, y)?;
        let yc: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let pairs = (n * (n - 1) / 2) as f64;
        let ln_pref = pairs * (self.ctx.ln_phi() + self.ctx.ln_script_g()?)
            - self.ctx.ln_cn(x)?
            - self.ctx.ln_cn_with(self.ctx.b_dual(), &yc)?;
        let factor = ln_pref.exp();
        let v = out.value() * factor;
        out.value_re = v.re;
        out.value_im = v.im;
        out.error_estimate *= factor.norm();
        if !v.is_finite() {
            return Err(Error::NonFinite("prefactor overflow in e_via_j".into()));
        }
        Ok(out)
    }

    /// Tabulate E_{level} over `level` grid axes (the memoized inner table
    /// of an enclosing integral).
    pub fn e_on_grid(
        &self,
        level: usize,
        spec: &GridSpec,
        yhat: &[f64],
    ) -> Result<Arc<Vec<Complex64>>> {
        if yhat.len() != level {
            return Err(Error::Dimension(format!(
                "need {} rapidities for level {}, got {}",
                level,
                level,
                yhat.len()
            )));
        }
        let grid = spec.build();
        let mut evals = 0;
        let lifts = vec![0.0; level + 1];
        self.tabulate(Form::E, level, &[], 0.0, yhat, &grid, spec, &lifts, &mut evals)
    }
}

/// Sum over the `dims`-fold tensor grid of per-axis factors, pair factors
/// and the inner table. Sequential, fixed order.
fn inner_sum(
    dims: usize,
    axis: &[Complex64],
    pairs: Option<&[Complex64]>,
    tab: &[Complex64],
    n: usize,
) -> Complex64 {
    match dims {
        1 => {
            let mut acc = ZERO;
            for i in 0..n {
                acc += axis[i] * tab[i];
            }
            acc
        }
        2 => {
            let p = pairs.expect("pair table needed for dims >= 2");
            let mut acc = ZERO;
            for i in 0..n {
                let ai = axis[i];
                if ai == ZERO {
                    continue;
                }
                let row = &tab[i * n..(i + 1) * n];
                let mut inner = ZERO;
                for j in 0..n {
                    // pair (axis 1, axis 2): factor for nodes (i, j)
                    inner += axis[j] * p[j * n + i] * row[j];
                }
                acc += ai * inner;
            }
            acc
        }
        3 => {
            let p = pairs.expect("pair table needed for dims >= 2");
            let mut acc = ZERO;
            for i in 0..n {
                let ai = axis[i];
                if ai == ZERO {
                    continue;
                }
                for j in 0..n {
                    let aj = axis[j] * p[j * n + i];
                    if aj == ZERO {
                        continue;
                    }
                    let row = &tab[(i * n + j) * n..(i * n + j + 1) * n];
                    let mut inner = ZERO;
                    for l in 0..n {
                        inner += axis[l] * p[l * n + i] * p[l * n + j] * row[l];
                    }
                    acc += ai * aj * inner;
                }
            }
            acc
        }
        _ => unreachable!("recursion depth limited to 4 levels"),
    }
}


/// Parallel variant with deterministic pairwise reduction over the first axis.
fn parallel_inner_sum(
    dims: usize,
    axis: &[Complex64],
    pairs: Option<&[Complex64]>,
    tab: &[Complex64],
    n: usize,
) -> Complex64 {
    if dims == 1 {
        return inner_sum(1, axis, pairs, tab, n);
    }
    let partials: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ai = axis[i];
            if ai == ZERO {
                return ZERO;
            }
            let p = pairs.expect("pair table needed for dims >= 2");
            match dims {
                2 => {
                    let row = &tab[i * n..(i + 1) * n];
                    let mut inner = ZERO;
                    for j in 0..n {
                        inner += axis[j] * p[j * n + i] * row[j];
                    }
                    ai * inner
                }
                3 => {
                    let mut acc = ZERO;
                    for j in 0..n {
                        let aj = axis[j] * p[j * n + i];
                        if aj == ZERO {
                            continue;
                        }
                        let row = &tab[(i * n + j) * n..(i * n + j + 1) * n];
                        let mut inner = ZERO;
                        for l in 0..n {
                            inner += axis[l] * p[l * n + i] * p[l * n + j] * row[l];
                        }
                        acc += aj * inner;
                    }
                    ai * acc
                }
                _ => unreachable!(),
            }
        })
        .collect();
    crate::quad::tree_sum(&partials)
}
