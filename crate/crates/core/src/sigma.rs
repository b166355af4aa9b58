//! The limit construction `σ^p_ℓ`: on each cell `I_δ(j)` the representation
//! `π^p_ℓ` is replaced by `π⁰` at the orbit point of `ℓ` frozen at `R_j`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_param, Error, Result};
use crate::grid::{DualGrid, TimeGrid};
use crate::group::{orbit_action, DualVector, GroupContext};
use crate::kernel::{induced_kernel, operator_norm, KernelOperator};
use crate::symbols::{lipschitz_envelope, EnvelopeSampling, FourierProfile};

/// `ε_δ`, `r(δ)`, breakpoints `R_j = j/ε_δ` and the active `j`-range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalScheme {
    pub delta: f64,
    pub epsilon: f64,
    pub r: f64,
    pub j_min: i64,
    pub j_max: i64,
}

impl IntervalScheme {
    pub fn new(delta: f64, epsilon: f64, r: f64, j_min: i64, j_max: i64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Domain(format!("delta = {delta} outside (0, 1]")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite() && r > 0.0 && r.is_finite()) {
            return Err(Error::Domain("epsilon and r must be positive and finite".into()));
        }
        // equality happens for the default scheme at δ = 1
        if r * epsilon > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("r = {r} exceeds the cell length {}", 1.0 / epsilon)));
        }
        if j_min > j_max {
            return Err(Error::Domain("empty cell range".into()));
        }
        Ok(Self { delta, epsilon, r, j_min, j_max })
    }

    #[inline]
    pub fn breakpoint(&self, j: i64) -> f64 {
        j as f64 / self.epsilon
    }

    /// `δ/ε_δ`.
    pub fn ratio(&self) -> f64 {
        self.delta / self.epsilon
    }

    /// The `j` with `R_j ≤ s < R_{j+1}`.
    pub fn cell_of(&self, s: f64) -> i64 {
        let mut j = (s * self.epsilon).floor() as i64;
        while s < self.breakpoint(j) {
            j -= 1;
        }
        while s >= self.breakpoint(j + 1) {
            j += 1;
        }
        j
    }

    fn check_j(&self, j: i64) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::Domain(format!("cell {j} outside {}..={}", self.j_min, self.j_max)));
        }
        Ok(())
    }

    fn covers(&self, grid: &TimeGrid) -> Result<()> {
        let pts = grid.points();
        let (a, b) = (self.cell_of(pts[0]), self.cell_of(pts[pts.len() - 1]));
        if a < self.j_min || b > self.j_max {
            return Err(Error::Precondition(format!(
                "cells {a}..={b} are active but the scheme stops at {}..={}",
                self.j_min, self.j_max
            )));
        }
        Ok(())
    }
}

/// `ε = √δ`, `r = δ^{-1/4}`, cells meeting `[-T - r, T + r]`.
pub fn scheme_default(delta: f64, grid: &TimeGrid) -> Result<IntervalScheme> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, 1]")));
    }
    let epsilon = delta.sqrt();
    let r = delta.powf(-0.25);
    let reach = grid.half_width() + r;
    let j_min = (-reach * epsilon).floor() as i64;
    let j_max = (reach * epsilon).floor() as i64;
    IntervalScheme::new(delta, epsilon, r, j_min, j_max)
}

/// Diagonal 0/1 multiplication operator on grid functions.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskOperator {
    indicator: Vec<bool>,
}

impl MaskOperator {
    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn count(&self) -> usize {
        self.indicator.iter().filter(|b| **b).count()
    }

    pub fn product(&self, other: &Self) -> Self {
        Self { indicator: self.indicator.iter().zip(&other.indicator).map(|(a, b)| *a && *b).collect() }
    }

    pub fn apply(&self, xi: &[Complex64]) -> Vec<Complex64> {
        xi.iter().zip(&self.indicator).map(|(x, m)| if *m { *x } else { Complex64::new(0.0, 0.0) }).collect()
    }

    /// `M ∘ K ∘ N` for diagonal masks.
    pub fn sandwich(&self, k: &KernelOperator, right: &Self) -> Result<KernelOperator> {
        let mut m = k.kernel().clone();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if !(self.indicator[i] && right.indicator[j]) {
                    m[(i, j)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        KernelOperator::new(k.grid().clone(), m)
    }
}

/// Indicator of `I_δ(j) = [R_j, R_{j+1})`.
pub fn mask_m(scheme: &IntervalScheme, j: i64, grid: &TimeGrid) -> Result<MaskOperator> {
    scheme.check_j(j)?;
    let (a, b) = (scheme.breakpoint(j), scheme.breakpoint(j + 1));
    Ok(MaskOperator { indicator: grid.points().iter().map(|&s| s >= a && s < b).collect() })
}

/// Indicator of `J_δ(j) = [R_j - r, R_{j+1} + r]`.
pub fn mask_n(scheme: &IntervalScheme, j: i64, grid: &TimeGrid) -> Result<MaskOperator> {
    scheme.check_j(j)?;
    let (a, b) = (scheme.breakpoint(j) - scheme.r, scheme.breakpoint(j + 1) + scheme.r);
    Ok(MaskOperator { indicator: grid.points().iter().map(|&s| s >= a && s <= b).collect() })
}

/// Dual point used on cell `j`: the orbit of `ℓ` at real time `R_j`, with the
/// sign fixed by the kernel convention.
pub fn cell_dual(ctx: &GroupContext, p: f64, scheme: &IntervalScheme, j: i64, l: &DualVector) -> DualVector {
    let shift = ctx.convention().orbit_sign() * scheme.breakpoint(j);
    orbit_action(ctx, p, Complex64::new(shift, 0.0), l)
}

/// `Σⱼ M_j ∘ F(j, ℓ_j) ∘ N_j` over cells holding grid points, where
/// `F(j, ℓ_j)` supplies the `p = 0` kernel at the cell dual.
pub fn sigma_from_fibers<F>(
    ctx: &GroupContext,
    p: f64,
    l: &DualVector,
    time_radius: f64,
    scheme: &IntervalScheme,
    grid: &TimeGrid,
    mut fiber: F,
) -> Result<KernelOperator>
where
    F: FnMut(i64, &DualVector) -> Result<KernelOperator>,
{
    ensure_param(p)?;
    if time_radius > scheme.r {
        return Err(Error::Precondition(format!(
            "time support radius {time_radius} exceeds r(delta) = {}",
            scheme.r
        )));
    }
    scheme.covers(grid)?;
    let pts = grid.points();
    let (first, last) = (scheme.cell_of(pts[0]), scheme.cell_of(pts[pts.len() - 1]));
    let mut total = KernelOperator::zero(grid.clone());
    let mut acc = total.kernel().clone();
    for j in first..=last {
        let m = mask_m(scheme, j, grid)?;
        if m.count() == 0 {
            continue;
        }
        let k = fiber(j, &cell_dual(ctx, p, scheme, j, l))?;
        acc += m.sandwich(&k, &mask_n(scheme, j, grid)?)?.kernel();
    }
    total = KernelOperator::new(grid.clone(), acc)?;
    Ok(total)
}

pub fn sigma_operator(
    ctx: &GroupContext,
    p: f64,
    l: &DualVector,
    a: &FourierProfile,
    scheme: &IntervalScheme,
    grid: &TimeGrid,
) -> Result<KernelOperator> {
    sigma_from_fibers(ctx, p, l, a.time_radius(), scheme, grid, |_, lj| induced_kernel(ctx, 0.0, lj, a, grid))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaBoundReport {
    pub sigma_norm: f64,
    /// `sup_j ‖π⁰_{ℓ_j}(A)‖` over the active cells.
    pub fiber_sup: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// `‖σ^p_ℓ(A)‖ ≤ 3 sup_j ‖π⁰_{ℓ_j}(A)‖ + tolerance`.
pub fn sigma_bound_check(
    ctx: &GroupContext,
    p: f64,
    l: &DualVector,
    a: &FourierProfile,
    scheme: &IntervalScheme,
    grid: &TimeGrid,
) -> Result<SigmaBoundReport> {
    let mut fiber_sup = 0.0f64;
    let sigma = sigma_from_fibers(ctx, p, l, a.time_radius(), scheme, grid, |_, lj| {
        let k = induced_kernel(ctx, 0.0, lj, a, grid)?;
        fiber_sup = fiber_sup.max(operator_norm(&k));
        Ok(k)
    })?;
    let sigma_norm = operator_norm(&sigma);
    let tolerance = 1e-8;
    Ok(SigmaBoundReport { sigma_norm, fiber_sup, tolerance, holds: sigma_norm <= 3.0 * fiber_sup + tolerance })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport {
    pub measured: f64,
    pub majorant: f64,
}

/// `sup_{t ∈ I_δ(j)} |orbit(p, R_j, ℓ) - orbit(p, t, ℓ)|₁` against
/// `(e^{|p|/ε} - 1)(e^{pR_j}|ℓ₁| + e^{-pR_j}|ℓ₂|)`.
pub fn orbit_drift_bound(ctx: &GroupContext, scheme: &IntervalScheme, p: f64, l: &DualVector, j: i64) -> Result<DriftReport> {
    ensure_param(p)?;
    let rj = scheme.breakpoint(j);
    let anchor = orbit_action(ctx, p, Complex64::new(rj, 0.0), l);
    let samples = 2000;
    let width = 1.0 / scheme.epsilon;
    let measured = (0..=samples)
        .map(|k| {
            let t = rj + width * k as f64 / samples as f64;
            anchor.distance(&orbit_action(ctx, p, Complex64::new(t, 0.0), l))
        })
        .fold(0.0, f64::max);
    let majorant = ((p.abs() / scheme.epsilon).exp() - 1.0) * ((p * rj).exp() * l.l1.norm() + (-p * rj).exp() * l.l2.norm());
    if measured > majorant * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::Certification(format!("orbit drift {measured:e} exceeds the majorant {majorant:e}")));
    }
    Ok(DriftReport { measured, majorant })
}

/// `‖σ^p_ℓ(A) - π^p_ℓ(A)‖`.
pub fn sigma_defect(
    ctx: &GroupContext,
    p: f64,
    l: &DualVector,
    a: &FourierProfile,
    scheme: &IntervalScheme,
    grid: &TimeGrid,
) -> Result<f64> {
    let sigma = sigma_operator(ctx, p, l, a, scheme, grid)?;
    let pi = induced_kernel(ctx, p, l, a, grid)?;
    Ok(operator_norm(&sigma.sub(&pi)?))
}

/// Which parameters are sampled for a given `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PRule {
    /// `p = δ`.
    Equal,
    /// `p = ±δ`.
    Symmetric,
    /// `count` evenly spaced samples of `[-δ, δ]`.
    Uniform { count: usize },
}

impl PRule {
    pub fn samples(&self, delta: f64) -> Vec<f64> {
        match *self {
            PRule::Equal => vec![delta],
            PRule::Symmetric => vec![-delta, delta],
            PRule::Uniform { count } if count <= 1 => vec![delta],
            PRule::Uniform { count } => (0..count).map(|k| -delta + 2.0 * delta * k as f64 / (count - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub epsilon: f64,
    pub r: f64,
    pub ratio: f64,
    pub p: f64,
    pub l: DualVector,
    /// `None` when the cell failed; the reason is in [`SweepTable::errors`].
    pub defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSummary {
    pub delta: f64,
    pub epsilon: f64,
    pub r: f64,
    pub ratio: f64,
    pub max_defect: f64,
    /// `3 K C_F (δ/ε) ‖φ‖₁` when the symbol has an analytic envelope.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellError {
    pub delta: f64,
    pub p: f64,
    pub l: DualVector,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<DeltaSummary>,
    pub errors: Vec<CellError>,
    /// Least-squares slope of `log D` against `log(δ/ε)`; `None` when some
    /// `D(δ)` is zero or fewer than two `δ` remain.
    pub slope: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `D(δ) = max_{p, ℓ} ‖σ^p_ℓ(A) - π^p_ℓ(A)‖` along a decreasing schedule.
///
/// Cells run on the current rayon pool; rows come back in schedule order
/// (δ, then p, then ℓ) whatever the thread count.
pub fn defect_sweep(
    ctx: &GroupContext,
    a: &FourierProfile,
    schedule: &[f64],
    rule: PRule,
    duals: &DualGrid,
    grid: &TimeGrid,
) -> Result<SweepTable> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("delta schedule must be non-empty and strictly decreasing".into()));
    }
    let envelope = lipschitz_envelope(a, EnvelopeSampling::default()).ok();
    let mut cells = Vec::new();
    for &delta in schedule {
        let scheme = scheme_default(delta, grid).map_err(|e| e.to_string());
        for p in rule.samples(delta) {
            for l in duals.points() {
                cells.push((delta, scheme.clone(), p, *l));
            }
        }
    }
    let results: Vec<(SweepRow, Option<CellError>)> = cells
        .par_iter()
        .map(|(delta, scheme, p, l)| {
            let outcome = scheme
                .clone()
                .and_then(|s| sigma_defect(ctx, *p, l, a, &s, grid).map_err(|e| e.to_string()));
            let (epsilon, r) = (delta.sqrt(), delta.powf(-0.25));
            let row = |defect| SweepRow { delta: *delta, epsilon, r, ratio: delta / epsilon, p: *p, l: *l, defect };
            match outcome {
                Ok(d) => (row(Some(d)), None),
                Err(message) => (row(None), Some(CellError { delta: *delta, p: *p, l: *l, message })),
            }
        })
        .collect();
    let (rows, errors): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let errors: Vec<CellError> = errors.into_iter().flatten().collect();

    let summaries: Vec<DeltaSummary> = schedule
        .iter()
        .map(|&delta| {
            let epsilon = delta.sqrt();
            let max_defect = rows.iter().filter(|r| r.delta == delta).filter_map(|r| r.defect).fold(0.0, f64::max);
            DeltaSummary {
                delta,
                epsilon,
                r: delta.powf(-0.25),
                ratio: delta / epsilon,
                max_defect,
                bound: envelope.as_ref().map(|e| e.defect_bound(delta / epsilon)),
            }
        })
        .collect();
    let slope = loglog_slope(
        &summaries.iter().map(|s| s.ratio).collect::<Vec<_>>(),
        &summaries.iter().map(|s| s.max_defect).collect::<Vec<_>>(),
    );
    Ok(SweepTable { rows, summaries, errors, slope })
}

/// `‖π^p_ℓ(A) - π^{p₀}_ℓ(A)‖` for `p₀ ≠ 0`.
pub fn continuity_defect(ctx: &GroupContext, p0: f64, p: f64, l: &DualVector, a: &FourierProfile, grid: &TimeGrid) -> Result<f64> {
    if p0 == 0.0 {
        return Err(Error::Domain("continuity is measured away from p = 0".into()));
    }
    let k0 = induced_kernel(ctx, p0, l, a, grid)?;
    let k = induced_kernel(ctx, p, l, a, grid)?;
    Ok(operator_norm(&k.sub(&k0)?))
}
