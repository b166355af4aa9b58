//! Induced representations `π^p_ℓ` discretized as integral-kernel operators on
//! a time grid.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure_param, Error, Result};
use crate::grid::{DualGrid, GridKind, TimeGrid};
use crate::group::{automorphism_alpha, dual_action, pairing, DualVector, GroupContext, GroupElement, KernelConvention};
use crate::symbols::{convolve_symbols, make_bump_profile, ConvolutionRule, FourierProfile};

/// Below this size the operator norm comes from a dense SVD.
pub const DENSE_NORM_LIMIT: usize = 512;

/// `(Kξ)(sᵢ) = Σⱼ wⱼ K(sᵢ, tⱼ) ξ(tⱼ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    grid: TimeGrid,
    kernel: DMatrix<Complex64>,
}

impl KernelOperator {
    pub fn new(grid: TimeGrid, kernel: DMatrix<Complex64>) -> Result<Self> {
        let n = grid.len();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::Domain(format!("kernel is {}x{}, grid has {n} points", kernel.nrows(), kernel.ncols())));
        }
        if kernel.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("kernel has non-finite entries".into()));
        }
        Ok(Self { grid, kernel })
    }

    pub fn zero(grid: TimeGrid) -> Self {
        let n = grid.len();
        Self { grid, kernel: DMatrix::zeros(n, n) }
    }

    /// Kernel `δ_{ij}/wⱼ`, the exact identity on grid functions.
    pub fn identity(grid: TimeGrid) -> Self {
        let n = grid.len();
        let kernel = DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0 / grid.weights()[j], 0.0) } else { Complex64::new(0.0, 0.0) });
        Self { grid, kernel }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &DMatrix<Complex64> {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn apply(&self, xi: &[Complex64]) -> Result<Vec<Complex64>> {
        if xi.len() != self.len() {
            return Err(Error::Domain(format!("vector has {} entries, grid has {}", xi.len(), self.len())));
        }
        let v = DVector::from_iterator(xi.len(), xi.iter().zip(self.grid.weights()).map(|(x, w)| x * *w));
        Ok((&self.kernel * v).iter().copied().collect())
    }

    /// `W^{1/2} K W^{1/2}`: the matrix whose spectral norm is the operator norm
    /// on weighted `L²`.
    pub fn symmetrized(&self) -> DMatrix<Complex64> {
        let r: Vec<f64> = self.grid.weights().iter().map(|w| w.sqrt()).collect();
        DMatrix::from_fn(self.len(), self.len(), |i, j| self.kernel[(i, j)] * (r[i] * r[j]))
    }

    /// Keeps rows with `keep(sᵢ)` and zeroes the rest.
    pub fn restrict_rows<F: Fn(f64) -> bool>(&self, keep: F) -> Self {
        let mut kernel = self.kernel.clone();
        for (i, &s) in self.grid.points().iter().enumerate() {
            if !keep(s) {
                kernel.row_mut(i).fill(Complex64::new(0.0, 0.0));
            }
        }
        Self { grid: self.grid.clone(), kernel }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_grid(self, other)?;
        Ok(Self { grid: self.grid.clone(), kernel: &self.kernel - &other.kernel })
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self { grid: self.grid.clone(), kernel: &self.kernel * k }
    }

    /// Rows `s-index,t-index,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "s_index,t_index,re,im")?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                let z = self.kernel[(i, j)];
                writeln!(out, "{i},{j},{:e},{:e}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

fn same_grid(a: &KernelOperator, b: &KernelOperator) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::Precondition("kernels live on different grids".into()));
    }
    Ok(())
}

/// `K(s, t) = Â(s - t, dual_action(p, τ, ℓ))` with `τ` fixed by the context's
/// kernel convention (`τ = -s` for the canonical one).
pub fn induced_kernel(ctx: &GroupContext, p: f64, l: &DualVector, a: &FourierProfile, grid: &TimeGrid) -> Result<KernelOperator> {
    ensure_param(p)?;
    if grid.half_width() < a.time_radius() {
        return Err(Error::Precondition(format!(
            "grid half-width {} is smaller than the time support radius {}",
            grid.half_width(),
            a.time_radius()
        )));
    }
    let n = grid.len();
    let pts = grid.points();
    let (lo, hi) = a.time_interval();
    let conv = ctx.convention();
    let mut kernel = DMatrix::zeros(n, n);
    if a.is_zero() {
        return Ok(KernelOperator { grid: grid.clone(), kernel });
    }
    let mut cache: Option<(f64, DualVector)> = None;
    for i in 0..n {
        let s = pts[i];
        for j in 0..n {
            let u = s - pts[j];
            if u < lo || u > hi {
                continue;
            }
            let tau = conv.dual_time(s, pts[j]);
            let lt = match cache {
                Some((t0, v)) if t0 == tau => v,
                _ => {
                    let v = dual_action(ctx, p, tau, l);
                    cache = Some((tau, v));
                    v
                }
            };
            kernel[(i, j)] = a.eval(u, &lt);
        }
    }
    Ok(KernelOperator { grid: grid.clone(), kernel })
}

/// `ξ(s) ↦ e^{i⟨α_p(-s) c_m, ℓ⟩} ξ(s - t_m)` with periodic wraparound.
///
/// Under the input-point convention the printed phase `α_p(t_m - s)` is used.
pub fn group_element_operator(ctx: &GroupContext, p: f64, l: &DualVector, m: &GroupElement, grid: &TimeGrid) -> Result<KernelOperator> {
    ensure_param(p)?;
    if grid.kind() != GridKind::Periodic {
        return Err(Error::Precondition("group elements act by wraparound and need a periodic grid".into()));
    }
    let k = grid
        .aligned_steps(m.t)
        .ok_or_else(|| Error::Precondition(format!("time shift {} is not a multiple of the spacing {}", m.t, grid.spacing())))?;
    let n = grid.len();
    let c = m.fiber();
    let mut kernel = DMatrix::zeros(n, n);
    for (i, &s) in grid.points().iter().enumerate() {
        let tau = match ctx.convention() {
            KernelConvention::OutputPoint => -s,
            KernelConvention::InputPoint => m.t - s,
        };
        let phase = Complex64::new(0.0, pairing(&automorphism_alpha(ctx, p, tau, c), l)).exp();
        let j = (i as i64 - k).rem_euclid(n as i64) as usize;
        kernel[(i, j)] = phase / grid.weights()[j];
    }
    Ok(KernelOperator { grid: grid.clone(), kernel })
}

/// Largest singular value of `W^{1/2} K W^{1/2}`.
pub fn operator_norm(k: &KernelOperator) -> f64 {
    let m = k.symmetrized();
    if k.len() < DENSE_NORM_LIMIT {
        dense_norm(&m)
    } else {
        power_norm(&m, 1e-13, 20_000)
    }
}

pub(crate) fn dense_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    m.singular_values().max()
}

/// Power iteration on `M* M` from a deterministic start.
pub(crate) fn power_norm(m: &DMatrix<Complex64>, tol: f64, max_iter: usize) -> f64 {
    let n = m.ncols();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0, 0.1 * ((i * 104_729) % 13) as f64));
    let norm0 = v.norm();
    if norm0 == 0.0 {
        return 0.0;
    }
    v /= Complex64::new(norm0, 0.0);
    let mh = m.adjoint();
    let mut lambda = 0.0f64;
    for _ in 0..max_iter {
        let w = &mh * (m * &v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / Complex64::new(nw, 0.0);
        let done = (nw - lambda).abs() <= tol * nw;
        lambda = nw;
        if done {
            break;
        }
    }
    (m * &v).norm()
}

/// `K''(s, u) = Σₜ wₜ K(s, t) K'(t, u)`.
pub fn compose(k: &KernelOperator, kp: &KernelOperator) -> Result<KernelOperator> {
    same_grid(k, kp)?;
    let w = DMatrix::from_diagonal(&DVector::from_iterator(k.len(), k.grid.weights().iter().map(|w| Complex64::new(*w, 0.0))));
    Ok(KernelOperator { grid: k.grid.clone(), kernel: &k.kernel * w * &kp.kernel })
}

/// `K*(s, t) = conj K(t, s)`.
pub fn adjoint(k: &KernelOperator) -> KernelOperator {
    KernelOperator { grid: k.grid.clone(), kernel: k.kernel.adjoint() }
}

/// `max_ℓ ‖π^p_ℓ(A)‖` over the dual grid samples.
pub fn cstar_norm_estimate(ctx: &GroupContext, p: f64, a: &FourierProfile, duals: &DualGrid, grid: &TimeGrid) -> Result<f64> {
    ensure_param(p)?;
    let needed = a.dual_radius() * (p.abs() * grid.half_width()).exp();
    if duals.half_width() < needed {
        return Err(Error::Precondition(format!("dual grid half-width {} must be at least {needed}", duals.half_width())));
    }
    if a.is_zero() {
        return Ok(0.0);
    }
    let norms = duals
        .points()
        .par_iter()
        .map(|l| induced_kernel(ctx, p, l, a, grid).map(|k| operator_norm(&k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}

/// `‖π(A ∗ B) - π(A)π(B)‖` restricted to rows `|s| ≤ T - C_time(A)`, where the
/// discrete product sees the whole support of `A`.
pub fn multiplicativity_defect(
    ctx: &GroupContext,
    p: f64,
    l: &DualVector,
    a: &FourierProfile,
    b: &FourierProfile,
    grid: &TimeGrid,
) -> Result<f64> {
    let ab = convolve_symbols(ctx, p, a, b, ConvolutionRule::default());
    let lhs = induced_kernel(ctx, p, l, &ab, grid)?;
    let rhs = compose(&induced_kernel(ctx, p, l, a, grid)?, &induced_kernel(ctx, p, l, b, grid)?)?;
    let limit = grid.half_width() - a.time_radius();
    Ok(operator_norm(&lhs.sub(&rhs)?.restrict_rows(|s| s.abs() <= limit + 1e-12)))
}

/// Relative multiplicativity defect on a fixed small instance; rejects the
/// context if it exceeds `0.05`.
pub fn verify_convention(ctx: &GroupContext) -> Result<f64> {
    let grid = TimeGrid::periodic(4.0, 96)?;
    let c = |re, im| Complex64::new(re, im);
    let a = make_bump_profile(0.3, 1.0, DualVector::new(c(0.2, 0.1), c(-0.1, 0.3)), 1.2, c(1.0, 0.2))?;
    let b = make_bump_profile(-0.2, 0.9, DualVector::new(c(-0.1, 0.0), c(0.2, -0.2)), 1.4, c(0.8, -0.5))?;
    let p = 0.6;
    let l = DualVector::new(c(0.5, -0.3), c(0.2, 0.4));
    let reference = operator_norm(&compose(&induced_kernel(ctx, p, &l, &a, &grid)?, &induced_kernel(ctx, p, &l, &b, &grid)?)?);
    let rel = multiplicativity_defect(ctx, p, &l, &a, &b, &grid)? / reference;
    if rel > 0.05 {
        return Err(Error::Precondition(format!(
            "kernel convention {:?} is not multiplicative (relative defect {rel:.3})",
            ctx.convention()
        )));
    }
    Ok(rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::involution;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bump() -> FourierProfile {
        make_bump_profile(0.2, 1.0, DualVector::new(c(0.3, 0.0), c(0.0, -0.2)), 1.5, c(1.0, -0.4)).unwrap()
    }

    fn random_matrix(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn zero_symbol_zero_operator() {
        let ctx = GroupContext::default();
        let g = TimeGrid::closed(3.0, 31).unwrap();
        let k = induced_kernel(&ctx, 0.3, &DualVector::zero(), &FourierProfile::zero(), &g).unwrap();
        assert_eq!(operator_norm(&k), 0.0);
        assert!(matches!(induced_kernel(&ctx, 0.3, &DualVector::zero(), &bump(), &TimeGrid::closed(1.0, 11).unwrap()), Err(Error::Precondition(_))));
    }

    #[test]
    fn kernel_is_banded() {
        let ctx = GroupContext::default();
        let g = TimeGrid::closed(4.0, 81).unwrap();
        let a = bump();
        let k = induced_kernel(&ctx, 0.5, &DualVector::new(c(0.1, 0.2), c(0.3, 0.0)), &a, &g).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                if (g.points()[i] - g.points()[j]).abs() > a.time_radius() {
                    assert_eq!(k.kernel()[(i, j)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn zero_dual_is_a_convolution() {
        let ctx = GroupContext::default();
        let g = TimeGrid::closed(20.0, 801).unwrap();
        let a = make_bump_profile(0.0, 1.0, DualVector::zero(), 1.0, c(1.0, 0.0)).unwrap();
        let k = induced_kernel(&ctx, 0.7, &DualVector::zero(), &a, &g).unwrap();
        // the multiplier ω ↦ ∫ Â(u, 0) e^{-iωu} du peaks at ω = 0 for a positive bump
        let peak = (0..=400)
            .map(|k| {
                let w = k as f64 * 0.01;
                (0..2001)
                    .map(|i| {
                        let u = -1.0 + i as f64 * 1e-3;
                        a.eval(u, &DualVector::zero()) * c(0.0, -w * u).exp() * 1e-3
                    })
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max);
        let nrm = operator_norm(&k);
        assert!((nrm - peak).abs() < 1e-2 * peak, "{nrm} vs {peak}");
    }

    #[test]
    fn rotation_orbit_invariance_at_zero() {
        let ctx = GroupContext::default();
        let g = TimeGrid::closed(12.0, 481).unwrap();
        let a = bump();
        let l = DualVector::new(c(1.0, 0.0), c(0.0, 1.0));
        let base = operator_norm(&induced_kernel(&ctx, 0.0, &l, &a, &g).unwrap());
        for steps in [5, 17, 40] {
            let t0 = steps as f64 * g.spacing();
            let moved = dual_action(&ctx, 0.0, t0, &l);
            let n = operator_norm(&induced_kernel(&ctx, 0.0, &moved, &a, &g).unwrap());
            assert!((n - base).abs() < 1e-2 * base, "{n} vs {base}");
        }
    }

    #[test]
    fn group_element_operator_properties() {
        let ctx = GroupContext::default();
        let g = TimeGrid::periodic(4.0, 64).unwrap();
        let l = DualVector::new(c(0.4, -0.2), c(0.1, 0.3));
        let id = group_element_operator(&ctx, 0.5, &l, &GroupElement::identity(), &g).unwrap();
        assert!((id.kernel() - KernelOperator::identity(g.clone()).kernel()).norm() < 1e-15);
        let m = GroupElement::new(3.0 * g.spacing(), c(0.2, 0.5), c(-0.3, 0.1));
        let op = group_element_operator(&ctx, 0.5, &l, &m, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xi: Vec<Complex64> = (0..64).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        assert!((g.norm(&op.apply(&xi).unwrap()) - g.norm(&xi)).abs() < 1e-13);
        let bad = GroupElement::new(0.3 * g.spacing(), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(group_element_operator(&ctx, 0.5, &l, &bad, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn group_element_operator_is_multiplicative() {
        // wraparound rows carry the phase of the wrapped point; compare rows
        // where neither factor wraps
        let ctx = GroupContext::default();
        let g = TimeGrid::periodic(4.0, 80).unwrap();
        let h = g.spacing();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = rng.gen_range(-1.0..1.0);
            let l = DualVector::from_reals([0; 4].map(|_| rng.gen_range(-1.0..1.0)));
            let mut el = || GroupElement::new(rng.gen_range(-6i32..=6) as f64 * h, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let (m, mp) = (el(), el());
            let lhs = compose(&group_element_operator(&ctx, p, &l, &m, &g).unwrap(), &group_element_operator(&ctx, p, &l, &mp, &g).unwrap()).unwrap();
            let prod = crate::group::multiply(&ctx, p, &m, &mp).unwrap();
            let rhs = group_element_operator(&ctx, p, &l, &prod, &g).unwrap();
            for (i, &s) in g.points().iter().enumerate() {
                let inside = |x: f64| x >= -4.0 && x < 4.0 - 1e-12;
                if !(inside(s - m.t) && inside(s - m.t - mp.t)) {
                    continue;
                }
                for j in 0..g.len() {
                    let d = (lhs.kernel()[(i, j)] - rhs.kernel()[(i, j)]).norm() * h;
                    assert!(d < 1e-10, "row {i} col {j}: {d}");
                }
            }
        }
    }

    #[test]
    fn norm_oracles() {
        let g = TimeGrid::closed(2.0, 41).unwrap();
        assert_eq!(operator_norm(&KernelOperator::zero(g.clone())), 0.0);
        // rank one kernel ξ(s) conj η(t)
        let xi: Vec<Complex64> = g.points().iter().map(|s| c(s.cos(), 0.3 * s)).collect();
        let eta: Vec<Complex64> = g.points().iter().map(|s| c(1.0 - s * s / 4.0, s.sin())).collect();
        let k = KernelOperator::new(g.clone(), DMatrix::from_fn(41, 41, |i, j| xi[i] * eta[j].conj())).unwrap();
        let exact = g.norm(&xi) * g.norm(&eta);
        assert!((operator_norm(&k) - exact).abs() < 1e-10 * exact);
        // power iteration against the dense SVD
        let m = random_matrix(120, 6);
        let dense = dense_norm(&m);
        let power = power_norm(&m, 1e-14, 100_000);
        assert!((dense - power).abs() < 1e-8 * dense, "{dense} vs {power}");
    }

    #[test]
    fn large_kernels_use_power_iteration() {
        let ctx = GroupContext::default();
        let g = TimeGrid::closed(8.0, 520).unwrap();
        let k = induced_kernel(&ctx, 0.4, &DualVector::new(c(0.2, 0.1), c(0.0, 0.3)), &bump(), &g).unwrap();
        let dense = dense_norm(&k.symmetrized());
        assert!((operator_norm(&k) - dense).abs() < 1e-8 * dense);
    }

    #[test]
    fn compose_and_adjoint() {
        let g = TimeGrid::closed(1.0, 30).unwrap();
        let mk = |seed| KernelOperator::new(g.clone(), random_matrix(30, seed)).unwrap();
        let (a, b, cc) = (mk(1), mk(2), mk(3));
        let zero = KernelOperator::zero(g.clone());
        assert_eq!(compose(&a, &zero).unwrap(), zero);
        let l = compose(&compose(&a, &b).unwrap(), &cc).unwrap();
        let r = compose(&a, &compose(&b, &cc).unwrap()).unwrap();
        assert!((l.kernel() - r.kernel()).norm() < 1e-12 * l.kernel().norm());
        assert_eq!(adjoint(&adjoint(&a)), a);
        assert!((operator_norm(&adjoint(&a)) - operator_norm(&a)).abs() < 1e-10 * operator_norm(&a));
        let other = KernelOperator::zero(TimeGrid::closed(1.0, 31).unwrap());
        assert!(compose(&a, &other).is_err());
    }

    #[test]
    fn compose_with_delta_sequence() {
        let g = TimeGrid::periodic(6.0, 600).unwrap();
        let ctx = GroupContext::default();
        let k = induced_kernel(&ctx, 0.3, &DualVector::new(c(0.2, 0.0), c(0.1, 0.1)), &bump(), &g).unwrap();
        let eta = 0.05;
        let delta = KernelOperator::new(
            g.clone(),
            DMatrix::from_fn(600, 600, |i, j| {
                let d = g.points()[i] - g.points()[j];
                c((-d * d / (2.0 * eta * eta)).exp() / (eta * (2.0 * PI).sqrt()), 0.0)
            }),
        )
        .unwrap();
        let kd = compose(&k, &delta).unwrap().restrict_rows(|s| s.abs() < 4.0);
        let d = kd.sub(&k.restrict_rows(|s| s.abs() < 4.0)).unwrap();
        assert!(operator_norm(&d) < 2e-2 * operator_norm(&k));
    }

    #[test]
    fn adjoint_matches_involution() {
        let ctx = GroupContext::default();
        let g = TimeGrid::closed(3.0, 61).unwrap();
        let a = bump();
        let l = DualVector::new(c(0.5, -0.1), c(0.2, 0.2));
        let lhs = adjoint(&induced_kernel(&ctx, 0.6, &l, &a, &g).unwrap());
        let rhs = induced_kernel(&ctx, 0.6, &l, &involution(&ctx, 0.6, &a), &g).unwrap();
        assert!((lhs.kernel() - rhs.kernel()).norm() < 1e-13);
    }

    #[test]
    fn cstar_estimate_properties() {
        let ctx = GroupContext::default();
        let g = TimeGrid::closed(1.5, 31).unwrap();
        let a = make_bump_profile(0.0, 1.0, DualVector::zero(), 1.0, c(1.0, 0.0)).unwrap();
        let p = 0.2;
        let box_l = a.dual_radius() * (p * 1.5f64).exp();
        let duals = DualGrid::uniform(box_l, 3).unwrap();
        assert_eq!(cstar_norm_estimate(&ctx, p, &FourierProfile::zero(), &duals, &g).unwrap(), 0.0);
        let e1 = cstar_norm_estimate(&ctx, p, &a, &duals, &g).unwrap();
        let e2 = cstar_norm_estimate(&ctx, p, &a.scaled(c(2.0, 0.0)), &duals, &g).unwrap();
        assert_eq!(e2, 2.0 * e1);
        // Schur bound ∫ sup_ℓ |Â(s, ℓ)| ds
        let schur: f64 = (0..2001).map(|i| a.eval(-1.0 + i as f64 * 1e-3, &DualVector::zero()).norm() * 1e-3).sum();
        assert!(e1 <= schur * 1.01);
        assert!(matches!(cstar_norm_estimate(&ctx, p, &a, &DualGrid::uniform(1.0, 3).unwrap(), &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn canonical_convention_passes_oracle() {
        let ctx = GroupContext::default();
        let rel = verify_convention(&ctx).unwrap();
        assert!(rel < 0.05);
        let bad = ctx.with_convention(KernelConvention::InputPoint);
        assert!(matches!(verify_convention(&bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn multiplicativity_converges_at_second_order() {
        let ctx = GroupContext::default();
        let a = make_bump_profile(0.1, 1.0, DualVector::new(c(0.2, 0.1), c(0.0, 0.2)), 1.3, c(1.0, 0.0)).unwrap();
        let b = make_bump_profile(-0.1, 1.0, DualVector::new(c(0.0, -0.1), c(0.1, 0.0)), 1.1, c(0.5, 0.5)).unwrap();
        let l = DualVector::new(c(0.3, 0.2), c(-0.1, 0.4));
        let d: Vec<f64> = [32usize, 64]
            .iter()
            .map(|&n| multiplicativity_defect(&ctx, 0.4, &l, &a, &b, &TimeGrid::periodic(4.0, n).unwrap()).unwrap())
            .collect();
        assert!(d[1] < d[0] / 3.0, "{d:?}");
    }
}
