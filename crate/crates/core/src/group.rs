//! Arithmetic of the variable group `M_p = R ⋉_p C²`, its Lie algebra and the
//! dual actions on `(C²)* ≅ C²`.
//!
//! Elements are stored as `(t, z, w)`. The product is
//! `(t, c) ·_p (t', c') = (t + t', c + α_p(t) c')` with
//! `α_p(t)(z, w) = (e^{(p+i)t} z, e^{(-p+iθ)t} w)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_param, Error, Result};

pub type ComplexPair = [Complex64; 2];

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which time argument the dual action is evaluated at in the integral kernel
/// of an induced representation.
///
/// `OutputPoint` gives `K(s, t) = Â(s - t, dual_action(-s, ℓ))` and is the only
/// choice that makes `π(A ∗ B) = π(A) π(B)` hold under the associative group
/// law. `InputPoint` (`dual_action(t, ℓ)`) is kept so the startup oracle can be
/// shown to reject it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelConvention {
    #[default]
    OutputPoint,
    InputPoint,
}

impl KernelConvention {
    /// Time at which the dual action is applied for kernel entry `(s, t)`.
    #[inline]
    pub fn dual_time(self, s: f64, t: f64) -> f64 {
        match self {
            KernelConvention::OutputPoint => -s,
            KernelConvention::InputPoint => t,
        }
    }

    /// Sign of the real orbit shift `R_j` used when the limit construction
    /// replaces `π^p_ℓ` by `π^0` at an orbit-translated dual point.
    #[inline]
    pub fn orbit_sign(self) -> f64 {
        match self {
            KernelConvention::OutputPoint => -1.0,
            KernelConvention::InputPoint => 1.0,
        }
    }
}

/// Global parameters shared by every computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupContext {
    theta: f64,
    convention: KernelConvention,
    fourier_norm: f64,
}

impl Default for GroupContext {
    fn default() -> Self {
        Self {
            theta: std::f64::consts::SQRT_2,
            convention: KernelConvention::OutputPoint,
            fourier_norm: (2.0 * std::f64::consts::PI).powi(-4),
        }
    }
}

impl GroupContext {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta == 0.0 {
            return Err(Error::Domain(format!("theta must be finite and nonzero, got {theta}")));
        }
        Ok(Self { theta, ..Self::default() })
    }

    pub fn with_convention(mut self, convention: KernelConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn convention(&self) -> KernelConvention {
        self.convention
    }

    /// Plancherel constant `(2π)^{-4}` for the transform `∫ F(c) e^{i⟨c,ℓ⟩} dc`.
    pub fn fourier_norm(&self) -> f64 {
        self.fourier_norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupElement {
    pub t: f64,
    pub z: Complex64,
    pub w: Complex64,
}

impl GroupElement {
    pub fn new(t: f64, z: Complex64, w: Complex64) -> Self {
        Self { t, z, w }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn fiber(&self) -> ComplexPair {
        [self.z, self.w]
    }

    fn check(&self) -> Result<()> {
        ensure_finite("group element", &[self.t, self.z.re, self.z.im, self.w.re, self.w.im])
    }

    /// Largest coordinate distance, used for tolerance comparisons.
    pub fn max_distance(&self, other: &Self) -> f64 {
        (self.t - other.t)
            .abs()
            .max((self.z - other.z).norm())
            .max((self.w - other.w).norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualVector {
    pub l1: Complex64,
    pub l2: Complex64,
}

impl DualVector {
    pub fn new(l1: Complex64, l2: Complex64) -> Self {
        Self { l1, l2 }
    }

    pub fn from_reals(a: [f64; 4]) -> Self {
        Self::new(Complex64::new(a[0], a[1]), Complex64::new(a[2], a[3]))
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn as_pair(&self) -> ComplexPair {
        [self.l1, self.l2]
    }

    pub fn reals(&self) -> [f64; 4] {
        [self.l1.re, self.l1.im, self.l2.re, self.l2.im]
    }

    /// `max(|ℓ₁|, |ℓ₂|)`, the norm used for support radii.
    pub fn max_modulus(&self) -> f64 {
        self.l1.norm().max(self.l2.norm())
    }

    /// `|ℓ₁| + |ℓ₂|`, the norm used by Lipschitz envelopes.
    pub fn sum_modulus(&self) -> f64 {
        self.l1.norm() + self.l2.norm()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.l1 - other.l1).norm() + (self.l2 - other.l2).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.reals().iter().all(|v| v.is_finite())
    }
}

/// Coefficients of `τ T + u U + v V` in the Lie algebra.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LieVector {
    pub tau: f64,
    pub u: Complex64,
    pub v: Complex64,
}

impl LieVector {
    pub const T: LieVector = LieVector { tau: 1.0, u: Complex64::new(0.0, 0.0), v: Complex64::new(0.0, 0.0) };
    pub const U: LieVector = LieVector { tau: 0.0, u: Complex64::new(1.0, 0.0), v: Complex64::new(0.0, 0.0) };
    pub const V: LieVector = LieVector { tau: 0.0, u: Complex64::new(0.0, 0.0), v: Complex64::new(1.0, 0.0) };

    pub fn new(tau: f64, u: Complex64, v: Complex64) -> Self {
        Self { tau, u, v }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.tau + o.tau, self.u + o.u, self.v + o.v)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.tau * k, self.u * k, self.v * k)
    }

    pub fn norm(&self) -> f64 {
        self.tau.abs().max(self.u.norm()).max(self.v.norm())
    }
}

/// `α_p(t) c = (e^{(p+i)t} c₁, e^{(-p+iθ)t} c₂)`.
pub fn automorphism_alpha(ctx: &GroupContext, p: f64, t: f64, c: ComplexPair) -> ComplexPair {
    let a1 = Complex64::new(p, 1.0) * t;
    let a2 = Complex64::new(-p, ctx.theta) * t;
    [a1.exp() * c[0], a2.exp() * c[1]]
}

pub fn multiply(ctx: &GroupContext, p: f64, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    ensure_param(p)?;
    g.check()?;
    h.check()?;
    let [z, w] = automorphism_alpha(ctx, p, g.t, h.fiber());
    Ok(GroupElement::new(g.t + h.t, g.z + z, g.w + w))
}

pub fn inverse(ctx: &GroupContext, p: f64, g: &GroupElement) -> Result<GroupElement> {
    ensure_param(p)?;
    g.check()?;
    let [z, w] = automorphism_alpha(ctx, p, -g.t, g.fiber());
    Ok(GroupElement::new(-g.t, -z, -w))
}

/// Transpose of `α_p(t)` under [`pairing`]:
/// `t ·_p ℓ = (e^{(p-i)t} ℓ₁, e^{(-p-iθ)t} ℓ₂)`.
pub fn dual_action(ctx: &GroupContext, p: f64, t: f64, l: &DualVector) -> DualVector {
    let a1 = Complex64::new(p, -1.0) * t;
    let a2 = Complex64::new(-p, -ctx.theta) * t;
    DualVector::new(a1.exp() * l.l1, a2.exp() * l.l2)
}

/// `z ⊙_p ℓ = (e^{p Re z + i Im z} ℓ₁, e^{-p Re z + iθ Im z} ℓ₂)`.
pub fn orbit_action(ctx: &GroupContext, p: f64, zc: Complex64, l: &DualVector) -> DualVector {
    let a1 = Complex64::new(p * zc.re, zc.im);
    let a2 = Complex64::new(-p * zc.re, ctx.theta * zc.im);
    DualVector::new(a1.exp() * l.l1, a2.exp() * l.l2)
}

/// `⟨c, ℓ⟩ = Re(c₁ ℓ̄₁) + Re(c₂ ℓ̄₂)`.
#[inline]
pub fn pairing(c: &ComplexPair, l: &DualVector) -> f64 {
    (c[0] * l.l1.conj()).re + (c[1] * l.l2.conj()).re
}

/// Bilinear antisymmetric bracket with `[T,U] = (i+p)U`, `[T,V] = (iθ-p)V`,
/// `[U,V] = 0`.
pub fn lie_bracket(ctx: &GroupContext, p: f64, x: &LieVector, y: &LieVector) -> LieVector {
    let eu = I + p;
    let ev = Complex64::new(-p, ctx.theta);
    LieVector::new(
        0.0,
        eu * (y.u * x.tau - x.u * y.tau),
        ev * (y.v * x.tau - x.v * y.tau),
    )
}

/// Rescaling `(s, c) ↦ ((p₀/p) s, c)`.
///
/// Only the modulus flow `e^{±p s}` is intertwined by this map; the rotation
/// frequencies are not rescaled, so it is a group homomorphism
/// `M_{p₀} → M_p` only when `p₀ = p`. See [`iso_h_defect`].
pub fn iso_h(p0: f64, p: f64, g: &GroupElement) -> Result<GroupElement> {
    if p == 0.0 || p0 == 0.0 || !p.is_finite() || !p0.is_finite() {
        return Err(Error::Domain(format!("iso_h needs nonzero finite parameters, got p0 = {p0}, p = {p}")));
    }
    g.check()?;
    Ok(GroupElement::new(p0 / p * g.t, g.z, g.w))
}

/// `max-distance(h(g ·_{p₀} g'), h(g) ·_p h(g'))`.
pub fn iso_h_defect(ctx: &GroupContext, p0: f64, p: f64, g: &GroupElement, h: &GroupElement) -> Result<f64> {
    let lhs = iso_h(p0, p, &multiply(ctx, p0, g, h)?)?;
    let rhs = multiply(ctx, p, &iso_h(p0, p, g)?, &iso_h(p0, p, h)?)?;
    Ok(lhs.max_distance(&rhs))
}

/// Same comparison with the rotation phases stripped from both products,
/// i.e. in the quotient where only `|z|`, `|w|` and `t` are observed.
pub fn iso_h_modulus_defect(p0: f64, p: f64, g: &GroupElement, h: &GroupElement) -> Result<f64> {
    let strip = |p: f64, a: &GroupElement, b: &GroupElement| {
        let s = [(Complex64::new(p, 0.0) * a.t).exp() * b.z, (Complex64::new(-p, 0.0) * a.t).exp() * b.w];
        GroupElement::new(a.t + b.t, a.z + s[0], a.w + s[1])
    };
    let lhs = iso_h(p0, p, &strip(p0, g, h))?;
    let rhs = strip(p, &iso_h(p0, p, g)?, &iso_h(p0, p, h)?);
    Ok(lhs.max_distance(&rhs))
}

/// Result of integrating a fixed bump and its left/right translates on a
/// uniform 5-dimensional trapezoid grid.
#[derive(Debug, Clone, Copy)]
pub struct HaarCheck {
    pub exact: f64,
    pub plain: f64,
    pub left: f64,
    pub right: f64,
}

impl HaarCheck {
    /// Largest deviation of the translated integrals from the exact value.
    pub fn translate_error(&self) -> f64 {
        (self.left - self.exact).abs().max((self.right - self.exact).abs())
    }
}

/// Integrates `f(t,c) = (1 - t²)₊ · exp(-|c|²/(2σ²))` and its translates
/// `f(g·x)`, `f(x·g)` with `points` nodes per axis.
///
/// Time nodes span `[-2, 2]` and fiber nodes span `[-b, b]`; `g.t` must sit on
/// the time grid so that the kink of the tent stays on a node.
pub fn haar_translation_check(
    ctx: &GroupContext,
    p: f64,
    g: &GroupElement,
    points: usize,
    sigma: f64,
    fiber_half_width: f64,
) -> Result<HaarCheck> {
    ensure_param(p)?;
    g.check()?;
    if points < 3 {
        return Err(Error::Precondition("haar check needs at least 3 points per axis".into()));
    }
    let ht = 4.0 / (points - 1) as f64;
    let k = g.t / ht;
    if (k - k.round()).abs() > 1e-9 || g.t.abs() > 1.0 {
        return Err(Error::Precondition(format!("translate time {} must be a grid multiple of {ht} with |t| <= 1", g.t)));
    }
    let tent = |t: f64| (1.0 - t * t).max(0.0);
    let gauss = |c: &ComplexPair| (-(c[0].norm_sqr() + c[1].norm_sqr()) / (2.0 * sigma * sigma)).exp();
    let f = |t: f64, c: &ComplexPair| tent(t) * gauss(c);
    let hc = 2.0 * fiber_half_width / (points - 1) as f64;
    let node = |i: usize, h: f64, a: f64| -a + i as f64 * h;
    let w = |i: usize| if i == 0 || i == points - 1 { 0.5 } else { 1.0 };

    let mut plain = 0.0;
    let mut left = 0.0;
    let mut right = 0.0;
    for it in 0..points {
        let t = node(it, ht, 2.0);
        let wt = w(it) * ht;
        let lift = automorphism_alpha(ctx, p, t, g.fiber());
        for a in 0..points {
            for b in 0..points {
                for c in 0..points {
                    for d in 0..points {
                        let wc = w(a) * w(b) * w(c) * w(d) * hc.powi(4);
                        let x = [
                            Complex64::new(node(a, hc, fiber_half_width), node(b, hc, fiber_half_width)),
                            Complex64::new(node(c, hc, fiber_half_width), node(d, hc, fiber_half_width)),
                        ];
                        plain += wt * wc * f(t, &x);
                        // g·x = (t_g + t, c_g + α(t_g) c)
                        let ax = automorphism_alpha(ctx, p, g.t, x);
                        left += wt * wc * f(g.t + t, &[g.z + ax[0], g.w + ax[1]]);
                        // x·g = (t + t_g, c + α(t) c_g)
                        right += wt * wc * f(t + g.t, &[x[0] + lift[0], x[1] + lift[1]]);
                    }
                }
            }
        }
    }
    let exact = 4.0 / 3.0 * (2.0 * std::f64::consts::PI * sigma * sigma).powi(2);
    Ok(HaarCheck { exact, plain, left, right })
}
