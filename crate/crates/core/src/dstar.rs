//! Sampled operator fields `Φ(p, ℓ)` over `[-1, 1] × C²` and the membership
//! test for the field algebra: strong continuity, the σ-limit at `p = 0`,
//! norm continuity at `p₀ ≠ 0`, and the same checks on the adjoint field.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DualGrid, TimeGrid};
use crate::group::{DualVector, GroupContext};
use crate::kernel::{adjoint, induced_kernel, operator_norm, KernelOperator};
use crate::sigma::{cell_dual, mask_m, scheme_default, sigma_from_fibers, IntervalScheme};
use crate::symbols::ProfileFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    FromSymbol,
    Synthetic,
    Perturbed,
}

/// Which parameters a field is sampled at.
///
/// `zero_approach` are offsets `p → 0⁺` (strictly decreasing); for every
/// anchor `p₀ ≠ 0` the field also holds `p₀ + o` for each `anchor_offsets`
/// entry `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPlan {
    pub zero_approach: Vec<f64>,
    pub anchors: Vec<f64>,
    pub anchor_offsets: Vec<f64>,
}

impl Default for FieldPlan {
    fn default() -> Self {
        Self {
            zero_approach: (1..=14).map(|k| 2f64.powi(-2 * k)).collect(),
            anchors: vec![0.5],
            anchor_offsets: (3..=13).map(|k| 2f64.powi(-k)).collect(),
        }
    }
}

fn strictly_decreasing_positive(v: &[f64]) -> bool {
    v.iter().all(|x| *x > 0.0 && x.is_finite()) && v.windows(2).all(|w| w[1] < w[0])
}

impl FieldPlan {
    pub fn validate(&self) -> Result<()> {
        if self.zero_approach.len() < 3 || !strictly_decreasing_positive(&self.zero_approach) || self.zero_approach[0] > 1.0 {
            return Err(Error::Domain("zero approach needs at least 3 strictly decreasing offsets in (0, 1]".into()));
        }
        if !self.anchors.is_empty() && (self.anchor_offsets.len() < 3 || !strictly_decreasing_positive(&self.anchor_offsets)) {
            return Err(Error::Domain("anchor offsets need at least 3 strictly decreasing positive entries".into()));
        }
        for &a in &self.anchors {
            if a == 0.0 || !a.is_finite() || a.abs() > 1.0 || self.anchor_offsets.iter().any(|o| (a + o).abs() > 1.0) {
                return Err(Error::Domain(format!("anchor {a} must be nonzero with all offsets inside [-1, 1]")));
            }
        }
        Ok(())
    }

    /// Sorted parameter samples, `0` included.
    pub fn p_grid(&self) -> Vec<f64> {
        let mut all = vec![0.0];
        all.extend(&self.zero_approach);
        for &a in &self.anchors {
            all.push(a);
            all.extend(self.anchor_offsets.iter().map(|o| a + o));
        }
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| a.to_bits() == b.to_bits());
        all
    }
}

type FiberKey = (u64, [u64; 4]);

fn key(p: f64, l: &DualVector) -> FiberKey {
    // adding 0.0 folds -0.0 into 0.0
    ((p + 0.0).to_bits(), l.reals().map(|x| (x + 0.0).to_bits()))
}

fn unkey(k: &FiberKey) -> (f64, DualVector) {
    (f64::from_bits(k.0), DualVector::from_reals(k.1.map(f64::from_bits)))
}

#[derive(Debug, Clone)]
pub struct OperatorField {
    ctx: GroupContext,
    grid: TimeGrid,
    plan: FieldPlan,
    duals: Vec<DualVector>,
    fibers: BTreeMap<FiberKey, KernelOperator>,
    band: f64,
    provenance: Provenance,
}

/// Every `(p, ℓ)` a field built for `plan` holds: the main samples plus the
/// `p = 0` fibers at orbit-translated duals that σ consumes.
pub fn required_samples(ctx: &GroupContext, plan: &FieldPlan, grid: &TimeGrid, duals: &[DualVector]) -> Result<Vec<(f64, DualVector)>> {
    plan.validate()?;
    let mut keys = BTreeSet::new();
    let mut out = Vec::new();
    let mut push = |p: f64, l: DualVector, out: &mut Vec<(f64, DualVector)>| {
        if keys.insert(key(p, &l)) {
            out.push((p, l));
        }
    };
    for p in plan.p_grid() {
        for l in duals {
            push(p, *l, &mut out);
        }
    }
    for &p in &plan.zero_approach {
        let scheme = scheme_default(p, grid)?;
        for l in duals {
            for j in active_cells(&scheme, grid)? {
                push(0.0, cell_dual(ctx, p, &scheme, j, l), &mut out);
            }
        }
    }
    Ok(out)
}

fn active_cells(scheme: &IntervalScheme, grid: &TimeGrid) -> Result<Vec<i64>> {
    let pts = grid.points();
    let (a, b) = (scheme.cell_of(pts[0]), scheme.cell_of(pts[pts.len() - 1]));
    let mut cells = Vec::new();
    for j in a.max(scheme.j_min)..=b.min(scheme.j_max) {
        if mask_m(scheme, j, grid)?.count() > 0 {
            cells.push(j);
        }
    }
    Ok(cells)
}

fn band_radius(grid: &TimeGrid, k: &KernelOperator) -> f64 {
    let pts = grid.points();
    let m = k.kernel();
    let mut r = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != Complex64::new(0.0, 0.0) {
                r = r.max((pts[i] - pts[j]).abs());
            }
        }
    }
    r
}

impl OperatorField {
    pub fn from_parts(
        ctx: GroupContext,
        grid: TimeGrid,
        plan: FieldPlan,
        duals: Vec<DualVector>,
        fibers: Vec<(f64, DualVector, KernelOperator)>,
        provenance: Provenance,
    ) -> Result<Self> {
        plan.validate()?;
        if duals.is_empty() {
            return Err(Error::Domain("a field needs at least one dual sample".into()));
        }
        let mut map = BTreeMap::new();
        for (p, l, k) in fibers {
            if k.grid() != &grid {
                return Err(Error::Domain(format!("fiber at p = {p} lives on a different time grid")));
            }
            map.insert(key(p, &l), k);
        }
        for p in plan.p_grid() {
            for l in &duals {
                if !map.contains_key(&key(p, l)) {
                    return Err(Error::Domain(format!("field is missing the fiber at p = {p}, l = {:?}", l.reals())));
                }
            }
        }
        let band = map.values().map(|k| band_radius(&grid, k)).fold(0.0, f64::max);
        Ok(Self { ctx, grid, plan, duals, fibers: map, band, provenance })
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn plan(&self) -> &FieldPlan {
        &self.plan
    }

    pub fn duals(&self) -> &[DualVector] {
        &self.duals
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn p_grid(&self) -> Vec<f64> {
        self.plan.p_grid()
    }

    /// Largest `|s - t|` over nonzero kernel entries of all fibers.
    pub fn band(&self) -> f64 {
        self.band
    }

    pub fn fiber(&self, p: f64, l: &DualVector) -> Option<&KernelOperator> {
        self.fibers.get(&key(p, l))
    }

    pub fn len(&self) -> usize {
        self.fibers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fibers.is_empty()
    }

    /// All stored fibers in key order.
    pub fn entries(&self) -> impl Iterator<Item = (f64, DualVector, &KernelOperator)> {
        self.fibers.iter().map(|(k, v)| {
            let (p, l) = unkey(k);
            (p, l, v)
        })
    }

    /// `sup_{p, ℓ} ‖Φ(p, ℓ)‖`.
    pub fn sup_norm(&self) -> f64 {
        let fibers: Vec<&KernelOperator> = self.fibers.values().collect();
        fibers.par_iter().map(|k| operator_norm(k)).reduce(|| 0.0, f64::max)
    }

    pub fn map_fibers<F>(&self, provenance: Provenance, f: F) -> Self
    where
        F: Fn(f64, &KernelOperator) -> KernelOperator,
    {
        let fibers: BTreeMap<FiberKey, KernelOperator> = self.fibers.iter().map(|(k, v)| (*k, f(f64::from_bits(k.0), v))).collect();
        let band = fibers.values().map(|k| band_radius(&self.grid, k)).fold(0.0, f64::max);
        Self { fibers, band, provenance, ..self.clone_shell() }
    }

    fn clone_shell(&self) -> Self {
        Self {
            ctx: self.ctx,
            grid: self.grid.clone(),
            plan: self.plan.clone(),
            duals: self.duals.clone(),
            fibers: BTreeMap::new(),
            band: 0.0,
            provenance: self.provenance,
        }
    }

    /// `Φ*(p, ℓ) = Φ(p, ℓ)*`.
    pub fn adjoint_field(&self) -> Self {
        self.map_fibers(self.provenance, |_, k| adjoint(k))
    }

    /// Replaces the main slice at `p` (one fiber per dual sample, in order).
    pub fn replace_slice(&self, p: f64, slice: Vec<KernelOperator>) -> Result<Self> {
        if slice.len() != self.duals.len() {
            return Err(Error::Domain(format!("slice has {} fibers, field has {} duals", slice.len(), self.duals.len())));
        }
        if self.fiber(p, &self.duals[0]).is_none() {
            return Err(Error::Domain(format!("p = {p} is not on the parameter grid")));
        }
        let mut out = self.clone();
        for (l, k) in self.duals.iter().zip(slice) {
            if k.grid() != &self.grid {
                return Err(Error::Domain("replacement fiber lives on a different grid".into()));
            }
            out.fibers.insert(key(p, l), k);
        }
        out.band = out.fibers.values().map(|k| band_radius(&out.grid, k)).fold(0.0, f64::max);
        out.provenance = Provenance::Synthetic;
        Ok(out)
    }

    /// The field with every `p = 0` fiber (main and orbit-translated) set to
    /// zero: continuous away from `0`, with a jump at `0`.
    pub fn jump_at_zero(&self) -> Self {
        self.map_fibers(Provenance::Perturbed, |p, k| if p == 0.0 { KernelOperator::zero(k.grid().clone()) } else { k.clone() })
    }
}

/// `Φ(p, ℓ) = π^p_ℓ(A(p))` on every sample the plan requires.
pub fn field_from_symbol<F: ProfileFamily>(
    ctx: &GroupContext,
    family: &F,
    grid: &TimeGrid,
    duals: &DualGrid,
    plan: &FieldPlan,
) -> Result<OperatorField> {
    let samples = required_samples(ctx, plan, grid, duals.points())?;
    let fibers = samples
        .par_iter()
        .map(|(p, l)| induced_kernel(ctx, *p, l, &family.at(*p), grid).map(|k| (*p, *l, k)))
        .collect::<Result<Vec<_>>>()?;
    OperatorField::from_parts(*ctx, grid.clone(), plan.clone(), duals.points().to_vec(), fibers, Provenance::FromSymbol)
}

/// The main slice `ℓ ↦ Φ(p, ℓ)` at a sampled `p`.
pub fn evaluate_at_p(field: &OperatorField, p: f64) -> Result<Vec<KernelOperator>> {
    field
        .duals
        .iter()
        .map(|l| {
            field
                .fiber(p, l)
                .cloned()
                .ok_or_else(|| Error::Domain(format!("p = {p} is not on the parameter grid")))
        })
        .collect()
}

/// `σ^p_ℓ(Φ)` assembled from the field's own `p = 0` fibers.
pub fn field_sigma(field: &OperatorField, p: f64, l: &DualVector, scheme: &IntervalScheme) -> Result<KernelOperator> {
    let missing: Vec<[f64; 4]> = active_cells(scheme, &field.grid)?
        .into_iter()
        .map(|j| cell_dual(&field.ctx, p, scheme, j, l))
        .filter(|lj| field.fiber(0.0, lj).is_none())
        .map(|lj| lj.reals())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Precondition(format!("sigma needs p = 0 fibers at {missing:?}")));
    }
    sigma_from_fibers(&field.ctx, p, l, field.band, scheme, &field.grid, |_, lj| {
        Ok(field.fiber(0.0, lj).expect("checked above").clone())
    })
}

/// `ξ ↦ φ(p) Φ(p, ℓ) ξ`.
pub fn multiplier_apply<F: Fn(f64) -> Complex64>(phi: F, field: &OperatorField) -> Result<OperatorField> {
    let values: BTreeMap<u64, Complex64> = field.fibers.keys().map(|k| (k.0, phi(f64::from_bits(k.0)))).collect();
    if values.values().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Domain("multiplier is not finite on the parameter grid".into()));
    }
    let provenance = field.provenance;
    Ok(field.map_fibers(provenance, |p, k| k.scale(values[&(p + 0.0).to_bits()])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Limit checks pass below `relative · sup ‖Φ‖`.
    pub relative: f64,
    pub probes: usize,
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { relative: 1e-3, probes: 6, seed: 7 }
    }
}

/// Values of a quantity along samples approaching `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitTrace {
    pub label: String,
    pub target: f64,
    pub samples: Vec<f64>,
    pub values: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Finest value within `tolerance` and non-increasing over the last three.
pub fn limit_passes(values: &[f64], tolerance: f64) -> bool {
    let n = values.len();
    if n < 3 || values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    values[n - 1] <= tolerance && values[n - 3] >= values[n - 2] && values[n - 2] >= values[n - 1]
}

impl LimitTrace {
    fn new(label: String, target: f64, samples: Vec<f64>, values: Vec<f64>, tolerance: f64) -> Self {
        let passed = limit_passes(&values, tolerance);
        Self { label, target, samples, values, tolerance, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub p: f64,
    pub p_next: f64,
    pub dual_index: usize,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongContinuityReport {
    pub table: Vec<ModulusRow>,
    pub traces: Vec<LimitTrace>,
    pub passed: bool,
}

fn probe_vectors(n: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count.max(1))
        .map(|_| (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect()
}

fn probe_modulus(a: &KernelOperator, b: &KernelOperator, probes: &[Vec<Complex64>]) -> f64 {
    let d = a.sub(b).expect("fibers share a grid");
    probes
        .iter()
        .map(|xi| d.grid().norm(&d.apply(xi).expect("probe length")) / d.grid().norm(xi))
        .fold(0.0, f64::max)
}

fn slice_pairs(field: &OperatorField, p: f64, q: f64) -> Vec<(&KernelOperator, &KernelOperator)> {
    field
        .duals
        .iter()
        .map(|l| (field.fiber(p, l).expect("on grid"), field.fiber(q, l).expect("on grid")))
        .collect()
}

/// Probe-vector modulus `max_ξ ‖(Φ(p,ℓ) - Φ(p',ℓ))ξ‖ / ‖ξ‖` between adjacent
/// samples, and its traces toward `0` and toward each anchor.
pub fn check_strong_continuity(field: &OperatorField, tol: &Tolerances, tolerance: f64) -> StrongContinuityReport {
    let probes = probe_vectors(field.grid.len(), tol.probes, tol.seed);
    let grid = field.p_grid();
    let jobs: Vec<(f64, f64, usize)> = grid
        .windows(2)
        .flat_map(|w| (0..field.duals.len()).map(move |i| (w[0], w[1], i)))
        .collect();
    let table: Vec<ModulusRow> = jobs
        .par_iter()
        .map(|&(p, q, i)| {
            let l = &field.duals[i];
            let modulus = probe_modulus(field.fiber(p, l).expect("on grid"), field.fiber(q, l).expect("on grid"), &probes);
            ModulusRow { p, p_next: q, dual_index: i, modulus }
        })
        .collect();
    let trace_to = |label: String, target: f64, samples: Vec<f64>| {
        let values: Vec<f64> = samples
            .par_iter()
            .map(|&p| slice_pairs(field, p, target).iter().map(|(a, b)| probe_modulus(a, b, &probes)).fold(0.0, f64::max))
            .collect();
        LimitTrace::new(label, target, samples, values, tolerance)
    };
    let mut traces = vec![trace_to("strong continuity at 0".into(), 0.0, field.plan.zero_approach.clone())];
    for &a in &field.plan.anchors {
        traces.push(trace_to(format!("strong continuity at {a}"), a, field.plan.anchor_offsets.iter().map(|o| a + o).collect()));
    }
    let passed = traces.iter().all(|t| t.passed);
    StrongContinuityReport { table, traces, passed }
}

/// `sup_ℓ ‖σ^p_ℓ(Φ) - Φ(p, ℓ)‖` along `p → 0⁺`, with `δ = p`.
pub fn check_condition_sigma(field: &OperatorField, tolerance: f64) -> Result<LimitTrace> {
    let samples = field.plan.zero_approach.clone();
    let values = samples
        .par_iter()
        .map(|&p| {
            let scheme = scheme_default(p, &field.grid)?;
            field.duals.iter().try_fold(0.0f64, |m, l| {
                let s = field_sigma(field, p, l, &scheme)?;
                let d = operator_norm(&s.sub(field.fiber(p, l).expect("on grid"))?);
                Ok(m.max(d))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(LimitTrace::new("sigma limit at 0".into(), 0.0, samples, values, tolerance))
}

/// `sup_ℓ ‖Φ(p, ℓ) - Φ(p₀, ℓ)‖` along `p → p₀` for every anchor.
pub fn check_condition_continuity(field: &OperatorField, tolerance: f64) -> Vec<LimitTrace> {
    field
        .plan
        .anchors
        .iter()
        .map(|&a| {
            let samples: Vec<f64> = field.plan.anchor_offsets.iter().map(|o| a + o).collect();
            let values = samples
                .par_iter()
                .map(|&p| {
                    slice_pairs(field, p, a)
                        .iter()
                        .map(|(x, y)| operator_norm(&x.sub(y).expect("shared grid")))
                        .fold(0.0, f64::max)
                })
                .collect();
            LimitTrace::new(format!("norm continuity at {a}"), a, samples, values, tolerance)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub passed: bool,
    pub note: String,
    pub traces: Vec<LimitTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ConditionReport {
    fn from_traces(name: &str, note: &str, traces: Vec<LimitTrace>) -> Self {
        let passed = traces.iter().all(|t| t.passed);
        Self { name: name.into(), passed, note: note.into(), traces, error: None }
    }

    fn failed(name: &str, note: &str, e: Error) -> Self {
        Self { name: name.into(), passed: false, note: note.into(), traces: vec![], error: Some(e.to_string()) }
    }
}

const NOTE_PARTIAL: &str = "partial: strong continuity and finite fiber norms are necessary conditions only";

fn run_conditions(field: &OperatorField, tol: &Tolerances, tolerance: f64, finite: bool) -> (ConditionReport, ConditionReport, ConditionReport, Vec<ModulusRow>) {
    let strong = check_strong_continuity(field, tol, tolerance);
    let mut c1 = ConditionReport::from_traces("condition 1", NOTE_PARTIAL, strong.traces);
    if !finite {
        c1.passed = false;
        c1.error = Some("field sup-norm is not finite".into());
    }
    let c2 = match check_condition_sigma(field, tolerance) {
        Ok(t) => ConditionReport::from_traces("condition 2", "sigma defect as p -> 0", vec![t]),
        Err(e) => ConditionReport::failed("condition 2", "sigma defect as p -> 0", e),
    };
    let c3 = ConditionReport::from_traces("condition 3", "norm continuity at nonzero p", check_condition_continuity(field, tolerance));
    (c1, c2, c3, strong.table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointReport {
    pub strong: ConditionReport,
    pub sigma: ConditionReport,
    pub continuity: ConditionReport,
    pub passed: bool,
}

/// Conditions 1 to 3 re-run on `Φ*`.
pub fn check_adjoint_conditions(field: &OperatorField, tol: &Tolerances) -> AdjointReport {
    let adj = field.adjoint_field();
    let sup = adj.sup_norm();
    let (strong, sigma, continuity, _) = run_conditions(&adj, tol, tol.relative * sup, sup.is_finite());
    let passed = strong.passed && sigma.passed && continuity.passed;
    AdjointReport { strong, sigma, continuity, passed }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub provenance: Provenance,
    pub passed: bool,
    pub sup_norm: f64,
    pub tolerance: f64,
    pub conditions: Vec<ConditionReport>,
    #[serde(skip)]
    pub moduli: Vec<ModulusRow>,
}

impl CertificationReport {
    /// Condition `k` in `1..=4`.
    pub fn condition(&self, k: usize) -> &ConditionReport {
        &self.conditions[k - 1]
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_moduli_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "p,p_next,dual_index,modulus")?;
        for r in &self.moduli {
            writeln!(out, "{},{},{},{:e}", r.p, r.p_next, r.dual_index, r.modulus)?;
        }
        Ok(())
    }
}

pub fn certify(field: &OperatorField, tol: &Tolerances) -> CertificationReport {
    let sup_norm = field.sup_norm();
    let tolerance = tol.relative * sup_norm;
    let (c1, c2, c3, moduli) = run_conditions(field, tol, tolerance, sup_norm.is_finite());
    let adj = check_adjoint_conditions(field, tol);
    let mut traces = adj.strong.traces.clone();
    traces.extend(adj.sigma.traces.iter().cloned());
    traces.extend(adj.continuity.traces.iter().cloned());
    let errors: Vec<String> = [&adj.strong, &adj.sigma, &adj.continuity].iter().filter_map(|c| c.error.clone()).collect();
    let c4 = ConditionReport {
        name: "condition 4".into(),
        passed: adj.passed,
        note: "conditions 1 to 3 on the adjoint field".into(),
        traces,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
    };
    let passed = c1.passed && c2.passed && c3.passed && c4.passed;
    CertificationReport { provenance: field.provenance, passed, sup_norm, tolerance, conditions: vec![c1, c2, c3, c4], moduli }
}
