//! Group-algebra elements represented by their partial Fourier transform
//! `Â(s, ℓ) = ∫ A(s, c) e^{i⟨c,ℓ⟩} dc`.
//!
//! A [`FourierProfile`] is a small expression tree: separable bumps at the
//! leaves, with scaling, involution and convolution nodes on top. Every node
//! knows its exact time interval and dual radius.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Arc, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{dual_action, ComplexPair, DualVector, GroupContext};

/// Radial profile `w: [0, 1] → [0, 1]` with `w(0) = 1`, vanishing for `r ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Window {
    /// `exp(1 - 1/(1 - r²))`, infinitely smooth.
    SmoothBump,
    /// `(e^{-r²/2σ²} - e^{-1/2σ²}) / (1 - e^{-1/2σ²})`: continuous with a kink
    /// at the support edge.
    TruncatedGaussian { sigma: f64 },
}

impl Window {
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= 1.0 {
            return 0.0;
        }
        match *self {
            Window::SmoothBump => (1.0 - 1.0 / (1.0 - r * r)).exp(),
            Window::TruncatedGaussian { sigma } => {
                let floor = (-0.5 / (sigma * sigma)).exp();
                ((-0.5 * r * r / (sigma * sigma)).exp() - floor) / (1.0 - floor)
            }
        }
    }

    /// Upper bound for `|w'|` on `[0, 1)`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Window::SmoothBump => {
                static BUMP_LIP: OnceLock<f64> = OnceLock::new();
                *BUMP_LIP.get_or_init(|| {
                    let n = 200_000;
                    let d = |r: f64| {
                        let q = 1.0 - r * r;
                        (1.0 - 1.0 / q).exp() * 2.0 * r / (q * q)
                    };
                    let m = (1..n).map(|i| d(i as f64 / n as f64)).fold(0.0, f64::max);
                    m * (1.0 + 1e-6)
                })
            }
            Window::TruncatedGaussian { sigma } => {
                let s2 = sigma * sigma;
                let floor = (-0.5 / s2).exp();
                let r = sigma.min(1.0);
                r / s2 * (-0.5 * r * r / s2).exp() / (1.0 - floor)
            }
        }
    }

    /// `∫_{-1}^{1} w(|x|) dx`.
    pub fn integral(&self) -> f64 {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        let rule = RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(64).unwrap()));
        // the bump is flat at the edge; panels keep the kinked window accurate too
        let panels = 16;
        (0..panels)
            .map(|k| {
                let a = k as f64 / panels as f64;
                rule.integrate(a, a + 1.0 / panels as f64, |x| self.value(x))
            })
            .sum::<f64>()
            * 2.0
    }

    fn validate(&self) -> Result<()> {
        if let Window::TruncatedGaussian { sigma } = *self {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::Domain(format!("truncated gaussian needs sigma > 0, got {sigma}")));
            }
        }
        Ok(())
    }
}

/// `amplitude · w_t(|s - s₀|/a) · w_d(|ℓ₁ - c₁|/b) · w_d(|ℓ₂ - c₂|/b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableProfile {
    pub time_window: Window,
    pub dual_window: Window,
    pub center_s: f64,
    pub width_s: f64,
    pub center_l: DualVector,
    pub width_l: f64,
    pub amplitude: Complex64,
}

impl SeparableProfile {
    #[inline]
    pub fn time_factor(&self, s: f64) -> f64 {
        self.time_window.value((s - self.center_s) / self.width_s)
    }

    #[inline]
    pub fn dual_factor(&self, l: &DualVector) -> f64 {
        let a = self.dual_window.value((l.l1 - self.center_l.l1).norm() / self.width_l);
        if a == 0.0 {
            return 0.0;
        }
        a * self.dual_window.value((l.l2 - self.center_l.l2).norm() / self.width_l)
    }

    fn dual_radius(&self) -> f64 {
        self.center_l.max_modulus() + self.width_l
    }
}

/// Composite quadrature used by Fourier-side convolution.
#[derive(Debug, Clone)]
pub struct ConvolutionRule {
    panels: usize,
    rule: Arc<GaussLegendre>,
}

impl ConvolutionRule {
    pub fn new(panels: usize, order: usize) -> Result<Self> {
        let order = NonZeroUsize::new(order).ok_or_else(|| Error::Domain("quadrature order must be positive".into()))?;
        if panels == 0 {
            return Err(Error::Domain("quadrature needs at least one panel".into()));
        }
        Ok(Self { panels, rule: Arc::new(GaussLegendre::new(order)) })
    }

    fn integrate<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let h = (b - a) / self.panels as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..self.panels {
            let lo = a + k as f64 * h;
            let (mid, half) = (lo + 0.5 * h, 0.5 * h);
            for &(x, w) in self.rule.as_node_weight_pairs() {
                acc += f(mid + half * x) * (w * half);
            }
        }
        acc
    }
}

impl Default for ConvolutionRule {
    fn default() -> Self {
        Self::new(6, 24).expect("static rule")
    }
}

#[derive(Debug, Clone)]
enum Expr {
    Zero,
    Separable(SeparableProfile),
    Scaled(Complex64, Arc<FourierProfile>),
    Involution { ctx: GroupContext, p: f64, inner: Arc<FourierProfile> },
    Convolution { ctx: GroupContext, p: f64, a: Arc<FourierProfile>, b: Arc<FourierProfile>, rule: ConvolutionRule },
}

/// A compactly supported symbol `Â(s, ℓ)`.
#[derive(Debug, Clone)]
pub struct FourierProfile {
    expr: Expr,
    time_lo: f64,
    time_hi: f64,
    dual_radius: f64,
}

impl FourierProfile {
    pub fn zero() -> Self {
        Self { expr: Expr::Zero, time_lo: 0.0, time_hi: 0.0, dual_radius: 0.0 }
    }

    pub fn separable(profile: SeparableProfile) -> Result<Self> {
        profile.time_window.validate()?;
        profile.dual_window.validate()?;
        if !(profile.width_s > 0.0 && profile.width_l > 0.0) {
            return Err(Error::Domain(format!(
                "profile widths must be positive, got {} and {}",
                profile.width_s, profile.width_l
            )));
        }
        let finite = [profile.center_s, profile.width_s, profile.width_l, profile.amplitude.re, profile.amplitude.im]
            .iter()
            .all(|v| v.is_finite())
            && profile.center_l.is_finite();
        if !finite {
            return Err(Error::Domain("profile parameters must be finite".into()));
        }
        if profile.amplitude == Complex64::new(0.0, 0.0) {
            return Ok(Self::zero());
        }
        Ok(Self {
            expr: Expr::Separable(profile),
            time_lo: profile.center_s - profile.width_s,
            time_hi: profile.center_s + profile.width_s,
            dual_radius: profile.dual_radius(),
        })
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        if k == Complex64::new(0.0, 0.0) || self.is_zero() {
            return Self::zero();
        }
        Self { expr: Expr::Scaled(k, Arc::new(self.clone())), ..*self.shape() }
    }

    fn shape(&self) -> &Self {
        self
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.expr, Expr::Zero)
    }

    /// `C_time`: `Â(s, ·) = 0` whenever `|s| > C_time`.
    pub fn time_radius(&self) -> f64 {
        self.time_lo.abs().max(self.time_hi.abs())
    }

    /// Closed interval outside of which `Â(s, ·)` vanishes.
    pub fn time_interval(&self) -> (f64, f64) {
        (self.time_lo, self.time_hi)
    }

    /// `C_dual`: `Â(·, ℓ) = 0` whenever `max(|ℓ₁|, |ℓ₂|) > C_dual`.
    pub fn dual_radius(&self) -> f64 {
        self.dual_radius
    }

    pub fn as_separable(&self) -> Option<(Complex64, &SeparableProfile)> {
        match &self.expr {
            Expr::Separable(sp) => Some((Complex64::new(1.0, 0.0), sp)),
            Expr::Scaled(k, inner) => inner.as_separable().map(|(k2, sp)| (k * k2, sp)),
            _ => None,
        }
    }

    pub fn eval(&self, s: f64, l: &DualVector) -> Complex64 {
        if s < self.time_lo || s > self.time_hi || l.max_modulus() > self.dual_radius {
            return Complex64::new(0.0, 0.0);
        }
        match &self.expr {
            Expr::Zero => Complex64::new(0.0, 0.0),
            Expr::Separable(sp) => {
                let t = sp.time_factor(s);
                if t == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                sp.amplitude * (t * sp.dual_factor(l))
            }
            Expr::Scaled(k, inner) => k * inner.eval(s, l),
            Expr::Involution { ctx, p, inner } => inner.eval(-s, &dual_action(ctx, *p, s, l)).conj(),
            Expr::Convolution { ctx, p, a, b, rule } => {
                let (alo, ahi) = a.time_interval();
                let (blo, bhi) = b.time_interval();
                let lo = alo.max(s - bhi);
                let hi = ahi.min(s - blo);
                if hi <= lo {
                    return Complex64::new(0.0, 0.0);
                }
                rule.integrate(lo, hi, |v| {
                    let av = a.eval(v, l);
                    if av == Complex64::new(0.0, 0.0) {
                        return av;
                    }
                    av * b.eval(s - v, &dual_action(ctx, *p, v, l))
                })
            }
        }
    }

    pub fn sample(&self, points: &[(f64, DualVector)]) -> Vec<Complex64> {
        points.iter().map(|(s, l)| self.eval(*s, l)).collect()
    }
}

/// Smooth separable bump with the given centers, widths and amplitude.
pub fn make_bump_profile(
    center_s: f64,
    width_s: f64,
    center_l: DualVector,
    width_l: f64,
    amplitude: Complex64,
) -> Result<FourierProfile> {
    FourierProfile::separable(SeparableProfile {
        time_window: Window::SmoothBump,
        dual_window: Window::SmoothBump,
        center_s,
        width_s,
        center_l,
        width_l,
        amplitude,
    })
}

/// `(A ∗_p B)^(s, ℓ) = ∫ Â(v, ℓ) B̂(s - v, v ·_p ℓ) dv`, evaluated lazily with
/// `rule` on the exact overlap of the two time supports.
pub fn convolve_symbols(
    ctx: &GroupContext,
    p: f64,
    a: &FourierProfile,
    b: &FourierProfile,
    rule: ConvolutionRule,
) -> FourierProfile {
    if a.is_zero() || b.is_zero() {
        return FourierProfile::zero();
    }
    FourierProfile {
        expr: Expr::Convolution { ctx: *ctx, p, a: Arc::new(a.clone()), b: Arc::new(b.clone()), rule },
        time_lo: a.time_lo + b.time_lo,
        time_hi: a.time_hi + b.time_hi,
        dual_radius: a.dual_radius,
    }
}

/// `Â*(s, ℓ) = conj Â(-s, s ·_p ℓ)`.
pub fn involution(ctx: &GroupContext, p: f64, a: &FourierProfile) -> FourierProfile {
    if a.is_zero() {
        return FourierProfile::zero();
    }
    // an involuted involution evaluates back to the original at every point
    if let Expr::Involution { inner, p: q, .. } = &a.expr {
        if *q == p {
            return (**inner).clone();
        }
    }
    FourierProfile {
        expr: Expr::Involution { ctx: *ctx, p, inner: Arc::new(a.clone()) },
        time_lo: -a.time_hi,
        time_hi: -a.time_lo,
        dual_radius: a.dual_radius * (p.abs() * a.time_radius()).exp(),
    }
}

/// Lipschitz envelope `|Â(u,ℓ) - Â(u,ℓ')| ≤ φ(u) |ℓ - ℓ'|₁ ψ(ℓ,ℓ')` of a
/// separable profile, with `|ℓ|₁ = |ℓ₁| + |ℓ₂|`.
///
/// `φ` is the unit time window, `ψ` is the constant `|amplitude| · Lip(w_d)/b`
/// on pairs where at least one point lies in the dual support. The defect
/// constants are `C_F = 2 C_dual sup ψ` and `K = e²`, valid while
/// `|p|/ε ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    time: Option<(Window, f64, f64)>,
    psi_level: f64,
    dual_radius: f64,
    pub k: f64,
    pub c_f: f64,
    pub phi_l1: f64,
}

impl Envelope {
    pub fn phi(&self, u: f64) -> f64 {
        self.time.map_or(0.0, |(w, c, a)| w.value((u - c) / a))
    }

    pub fn psi(&self, l: &DualVector, lp: &DualVector) -> f64 {
        if l.max_modulus() <= self.dual_radius || lp.max_modulus() <= self.dual_radius {
            self.psi_level
        } else {
            0.0
        }
    }

    /// `3 K C_F (δ/ε) ‖φ‖₁`.
    pub fn defect_bound(&self, ratio: f64) -> f64 {
        3.0 * self.k * self.c_f * ratio * self.phi_l1
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnvelopeSampling {
    pub pairs: usize,
    pub seed: u64,
}

impl Default for EnvelopeSampling {
    fn default() -> Self {
        Self { pairs: 10_000, seed: 0x5eed }
    }
}

/// Builds the analytic envelope and validates it on random pairs.
pub fn lipschitz_envelope(a: &FourierProfile, sampling: EnvelopeSampling) -> Result<Envelope> {
    let env = if a.is_zero() {
        Envelope { time: None, psi_level: 0.0, dual_radius: 0.0, k: std::f64::consts::E.powi(2), c_f: 0.0, phi_l1: 0.0 }
    } else {
        let (k, sp) = a
            .as_separable()
            .ok_or_else(|| Error::Certification("no analytic envelope for composite profiles".into()))?;
        let amp = (k * sp.amplitude).norm();
        let psi_level = amp * sp.dual_window.lipschitz() / sp.width_l;
        Envelope {
            time: Some((sp.time_window, sp.center_s, sp.width_s)),
            psi_level,
            dual_radius: a.dual_radius(),
            k: std::f64::consts::E.powi(2),
            c_f: 2.0 * a.dual_radius() * psi_level,
            phi_l1: sp.width_s * sp.time_window.integral(),
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let (lo, hi) = a.time_interval();
    let box_l = a.dual_radius() + 1.0;
    for i in 0..sampling.pairs {
        let u = rng.gen_range(lo - 0.5..=hi + 0.5);
        let l = DualVector::from_reals([0; 4].map(|_| rng.gen_range(-box_l..=box_l)));
        let scale = if i % 2 == 0 { 1e-3 } else { 1.0 };
        let lp = DualVector::from_reals(l.reals().map(|x| x + scale * rng.gen_range(-1.0..=1.0)));
        let diff = (a.eval(u, &l) - a.eval(u, &lp)).norm();
        let bound = env.phi(u) * l.distance(&lp) * env.psi(&l, &lp);
        if diff > bound * (1.0 + 1e-9) + 1e-14 {
            return Err(Error::Certification(format!(
                "envelope violated at u = {u}, l = {l:?}, l' = {lp:?}: |diff| = {diff:e} > {bound:e}"
            )));
        }
    }
    Ok(env)
}

/// A family `p ↦ A(p)` of symbols, continuous in `p`.
pub trait ProfileFamily: Sync {
    fn at(&self, p: f64) -> FourierProfile;
}

#[derive(Debug, Clone)]
pub enum SymbolFamily {
    Zero,
    Constant(FourierProfile),
    /// `A(p) = p · A₀`.
    LinearInP(FourierProfile),
}

impl ProfileFamily for SymbolFamily {
    fn at(&self, p: f64) -> FourierProfile {
        match self {
            SymbolFamily::Zero => FourierProfile::zero(),
            SymbolFamily::Constant(a) => a.clone(),
            SymbolFamily::LinearInP(a) => a.scaled(Complex64::new(p, 0.0)),
        }
    }
}

impl SymbolFamily {
    /// Family of involutions `p ↦ A(p)*` taken in the group law at `p`.
    pub fn involuted(&self, ctx: &GroupContext) -> InvolutedFamily<'_> {
        InvolutedFamily { ctx: *ctx, inner: self }
    }

    pub fn time_radius(&self) -> f64 {
        match self {
            SymbolFamily::Zero => 0.0,
            SymbolFamily::Constant(a) | SymbolFamily::LinearInP(a) => a.time_radius(),
        }
    }
}

pub struct InvolutedFamily<'a> {
    ctx: GroupContext,
    inner: &'a SymbolFamily,
}

impl ProfileFamily for InvolutedFamily<'_> {
    fn at(&self, p: f64) -> FourierProfile {
        involution(&self.ctx, p, &self.inner.at(p))
    }
}

/// Space-side element `F(s, c)`; used only as an oracle.
#[derive(Clone)]
pub struct SpaceProfile {
    f: Arc<dyn Fn(f64, &ComplexPair) -> Complex64 + Send + Sync>,
    pub time_radius: f64,
    pub fiber_radius: f64,
}

impl std::fmt::Debug for SpaceProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpaceProfile")
            .field("time_radius", &self.time_radius)
            .field("fiber_radius", &self.fiber_radius)
            .finish()
    }
}

impl SpaceProfile {
    pub fn new<F>(time_radius: f64, fiber_radius: f64, f: F) -> Self
    where
        F: Fn(f64, &ComplexPair) -> Complex64 + Send + Sync + 'static,
    {
        Self { f: Arc::new(f), time_radius, fiber_radius }
    }

    pub fn eval(&self, s: f64, c: &ComplexPair) -> Complex64 {
        (self.f)(s, c)
    }
}

/// Closed trapezoid grid on `[-B, B]⁴` for the fiber variable `c`.
#[derive(Debug, Clone, Copy)]
pub struct FiberGrid {
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl FiberGrid {
    fn nodes(&self) -> Vec<(f64, f64)> {
        let n = self.points_per_axis;
        let h = 2.0 * self.half_width / (n - 1) as f64;
        (0..n)
            .map(|i| (-self.half_width + i as f64 * h, if i == 0 || i == n - 1 { 0.5 * h } else { h }))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PartialFourier {
    /// Row-major over `(s, ℓ)`.
    pub values: Vec<Complex64>,
    pub diagnostics: Vec<String>,
}

/// `F̂²(s, ℓ) ≈ Σ_c w_c F(s, c) e^{i⟨c,ℓ⟩}` on a 4-dimensional trapezoid grid.
pub fn partial_fourier(f: &SpaceProfile, s_points: &[f64], duals: &[DualVector], grid: FiberGrid) -> Result<PartialFourier> {
    if grid.points_per_axis < 2 || !(grid.half_width > 0.0) {
        return Err(Error::Domain("fiber grid needs >= 2 points per axis and positive width".into()));
    }
    let mut diagnostics = Vec::new();
    if grid.half_width < f.fiber_radius {
        diagnostics.push(format!(
            "fiber grid half-width {} does not cover the declared support radius {}",
            grid.half_width, f.fiber_radius
        ));
    }
    let nodes = grid.nodes();
    let h = nodes[1].0 - nodes[0].0;
    let max_freq = duals.iter().flat_map(|l| l.reals()).fold(0.0f64, |m, v| m.max(v.abs()));
    if h * max_freq > PI {
        diagnostics.push(format!("fiber spacing {h} under-resolves dual frequency {max_freq}"));
    }
    let n = nodes.len();
    let mut values = Vec::with_capacity(s_points.len() * duals.len());
    for &s in s_points {
        // samples of F(s, ·) are reused for every ℓ
        let mut samples = Vec::with_capacity(n.pow(4));
        for a in &nodes {
            for b in &nodes {
                for c in &nodes {
                    for d in &nodes {
                        let x = [Complex64::new(a.0, b.0), Complex64::new(c.0, d.0)];
                        samples.push(f.eval(s, &x) * (a.1 * b.1 * c.1 * d.1));
                    }
                }
            }
        }
        for l in duals {
            let om = l.reals();
            let phase: Vec<Vec<Complex64>> = om
                .iter()
                .map(|&w| nodes.iter().map(|x| Complex64::new(0.0, x.0 * w).exp()).collect())
                .collect();
            let mut acc = Complex64::new(0.0, 0.0);
            let mut idx = 0;
            for ia in 0..n {
                for ib in 0..n {
                    let pab = phase[0][ia] * phase[1][ib];
                    for ic in 0..n {
                        let pabc = pab * phase[2][ic];
                        for id in 0..n {
                            acc += samples[idx] * pabc * phase[3][id];
                            idx += 1;
                        }
                    }
                }
            }
            values.push(acc);
        }
    }
    Ok(PartialFourier { values, diagnostics })
}
