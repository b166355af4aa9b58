//! Discrete check of `Λ^p = ∮ π^p_ℓ dℓ`: the regular representation paired
//! against the integral of induced representations over the dual variable.
//!
//! Test functions are separable, `ξ(s, c) = a(s) b₁(Re z) b₂(Im z) b₃(Re w) b₄(Im w)`,
//! which lets both sides be summed factor by factor.

use num_complex::Complex64;

use crate::error::{ensure_param, Error, Result};
use crate::grid::{GridKind, TimeGrid};
use crate::group::{automorphism_alpha, dual_action, DualVector, GroupContext, GroupElement};

/// Time grid times a periodic fiber grid `[-L, L)⁴` with `N` points per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MGrid {
    pub time: TimeGrid,
    pub fiber_half_width: f64,
    pub fiber_points: usize,
}

impl MGrid {
    pub fn new(time: TimeGrid, fiber_half_width: f64, fiber_points: usize) -> Result<Self> {
        if time.kind() != GridKind::Periodic {
            return Err(Error::Precondition("the regular representation needs a periodic time grid".into()));
        }
        if !(fiber_half_width > 0.0 && fiber_half_width.is_finite()) || fiber_points < 2 {
            return Err(Error::Domain("fiber grid needs L > 0 and at least 2 points".into()));
        }
        Ok(Self { time, fiber_half_width, fiber_points })
    }

    pub fn fiber_spacing(&self) -> f64 {
        2.0 * self.fiber_half_width / self.fiber_points as f64
    }

    pub fn fiber_nodes(&self) -> Vec<f64> {
        let h = self.fiber_spacing();
        (0..self.fiber_points).map(|i| -self.fiber_half_width + i as f64 * h).collect()
    }
}

/// Grid samples of a separable function on `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableFunction {
    pub time: Vec<Complex64>,
    /// `Re z`, `Im z`, `Re w`, `Im w`.
    pub axes: [Vec<Complex64>; 4],
}

impl SeparableFunction {
    pub fn sample<F, G>(grid: &MGrid, time: F, axes: [G; 4]) -> Self
    where
        F: Fn(f64) -> Complex64,
        G: Fn(f64) -> Complex64,
    {
        let nodes = grid.fiber_nodes();
        Self {
            time: grid.time.points().iter().map(|&s| time(s)).collect(),
            axes: axes.map(|f| nodes.iter().map(|&x| f(x)).collect()),
        }
    }

    fn check(&self, grid: &MGrid) -> Result<()> {
        if self.time.len() != grid.time.len() || self.axes.iter().any(|a| a.len() != grid.fiber_points) {
            return Err(Error::Domain("grid function does not match the grid".into()));
        }
        Ok(())
    }

    /// Largest `|x|` over nonzero fiber samples.
    fn fiber_radius(&self, grid: &MGrid) -> f64 {
        let nodes = grid.fiber_nodes();
        self.axes
            .iter()
            .flat_map(|a| a.iter().zip(&nodes).filter(|(v, _)| v.norm() > 0.0).map(|(_, x)| x.abs()))
            .fold(0.0, f64::max)
    }
}

/// Closed trapezoid rule on `[-L, L]` per real dual axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualBox {
    pub half_width: f64,
    pub points: usize,
}

impl DualBox {
    fn nodes(&self) -> Result<Vec<(f64, f64)>> {
        if self.points < 2 || !(self.half_width > 0.0) {
            return Err(Error::Domain("dual box needs L > 0 and at least 2 points".into()));
        }
        let h = 2.0 * self.half_width / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| (-self.half_width + i as f64 * h, if i == 0 || i + 1 == self.points { 0.5 * h } else { h }))
            .collect())
    }
}

/// `⟨Λ^p(m)ξ, η⟩` and `(2π)^{-4} ∫ ⟨π^p_ℓ(m) ξ̂(ℓ), η̂(ℓ)⟩ dℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlancherelSides {
    pub space: Complex64,
    pub spectral: Complex64,
}

impl PlancherelSides {
    pub fn defect(&self) -> f64 {
        (self.space - self.spectral).norm()
    }
}

fn interpolate(values: &[Complex64], x0: f64, h: f64, x: f64) -> Complex64 {
    let u = (x - x0) / h;
    if u < 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let i = u.floor() as usize;
    let f = u - i as f64;
    let at = |k: usize| values.get(k).copied().unwrap_or_default();
    at(i) * (1.0 - f) + at(i + 1) * f
}

/// `Σ_x h b(x) e^{i x ω}`.
fn axis_transform(values: &[Complex64], nodes: &[f64], h: f64, omega: f64) -> Complex64 {
    let step = Complex64::new(0.0, h * omega).exp();
    let mut e = Complex64::new(0.0, nodes[0] * omega).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    for v in values {
        acc += v * e;
        e *= step;
    }
    acc * h
}

/// Support and alignment checks of [`plancherel_sides`]; returns the time
/// shift of `m` in grid steps.
pub fn plancherel_preconditions(
    p: f64,
    m: &GroupElement,
    xi: &SeparableFunction,
    eta: &SeparableFunction,
    grid: &MGrid,
) -> Result<i64> {
    ensure_param(p)?;
    xi.check(grid)?;
    eta.check(grid)?;
    let n = grid.time.len();
    let k = grid
        .time
        .aligned_steps(m.t)
        .ok_or_else(|| Error::Precondition(format!("time shift {} is not grid-aligned", m.t)))?;
    for (j, v) in xi.time.iter().enumerate() {
        let moved = j as i64 + k;
        if v.norm() > 0.0 && !(0..n as i64).contains(&moved) {
            return Err(Error::Precondition("time support leaves the grid under the translation".into()));
        }
    }
    let h = grid.fiber_spacing();
    let stretch = (p * m.t).abs().exp() * std::f64::consts::SQRT_2;
    let shift = [m.z, m.w].iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max);
    if stretch * xi.fiber_radius(grid) + shift > grid.fiber_half_width - h {
        return Err(Error::Precondition("fiber support leaves the grid under the translation".into()));
    }
    Ok(k)
}

pub fn plancherel_sides(
    ctx: &GroupContext,
    p: f64,
    m: &GroupElement,
    xi: &SeparableFunction,
    eta: &SeparableFunction,
    grid: &MGrid,
    dual: DualBox,
) -> Result<PlancherelSides> {
    let k = plancherel_preconditions(p, m, xi, eta, grid)?;
    let n = grid.time.len();
    let h = grid.fiber_spacing();
    let nodes = grid.fiber_nodes();
    let x0 = nodes[0];
    let shifted = |j: usize| -> Complex64 {
        let src = j as i64 - k;
        if (0..n as i64).contains(&src) {
            xi.time[src as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let ts = grid.time.weights();

    // space side: ξ(m⁻¹x) = ξ(s - t_m, α(-t_m)(c - c_m))
    let time_part: Complex64 = (0..n).map(|j| shifted(j) * eta.time[j].conj() * ts[j]).sum();
    let mut fiber_part = Complex64::new(1.0, 0.0);
    for coord in 0..2 {
        let (ax, ay) = (&xi.axes[2 * coord], &xi.axes[2 * coord + 1]);
        let (ex, ey) = (&eta.axes[2 * coord], &eta.axes[2 * coord + 1]);
        let cm = if coord == 0 { m.z } else { m.w };
        let mut acc = Complex64::new(0.0, 0.0);
        for (ix, &x) in nodes.iter().enumerate() {
            if ex[ix].norm() == 0.0 {
                continue;
            }
            for (iy, &y) in nodes.iter().enumerate() {
                if ey[iy].norm() == 0.0 {
                    continue;
                }
                let c = Complex64::new(x, y) - cm;
                let pair = if coord == 0 { [c, Complex64::new(0.0, 0.0)] } else { [Complex64::new(0.0, 0.0), c] };
                let q = automorphism_alpha(ctx, p, -m.t, pair)[coord];
                let v = interpolate(ax, x0, h, q.re) * interpolate(ay, x0, h, q.im);
                acc += v * (ex[ix] * ey[iy]).conj();
            }
        }
        fiber_part *= acc * (h * h);
    }
    let space = time_part * fiber_part;

    // spectral side, one complex coordinate of ℓ at a time
    let dn = dual.nodes()?;
    let times = grid.time.points();
    let mut spectral = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let a = shifted(j) * eta.time[j].conj();
        if a.norm() == 0.0 {
            continue;
        }
        let s = times[j];
        let mut prod = Complex64::new(1.0, 0.0);
        for coord in 0..2 {
            let cm = if coord == 0 { m.z } else { m.w };
            let cpair = if coord == 0 { [cm, Complex64::new(0.0, 0.0)] } else { [Complex64::new(0.0, 0.0), cm] };
            let rot = automorphism_alpha(ctx, p, -s, cpair)[coord];
            let mut acc = Complex64::new(0.0, 0.0);
            for &(u, wu) in &dn {
                for &(v, wv) in &dn {
                    let lc = Complex64::new(u, v);
                    let l = if coord == 0 { DualVector::new(lc, Complex64::new(0.0, 0.0)) } else { DualVector::new(Complex64::new(0.0, 0.0), lc) };
                    let pick = |d: DualVector| if coord == 0 { d.l1 } else { d.l2 };
                    let lx = pick(dual_action(ctx, p, -(s - m.t), &l));
                    let le = pick(dual_action(ctx, p, -s, &l));
                    let fx = axis_transform(&xi.axes[2 * coord], &nodes, h, lx.re) * axis_transform(&xi.axes[2 * coord + 1], &nodes, h, lx.im);
                    let fe = axis_transform(&eta.axes[2 * coord], &nodes, h, le.re) * axis_transform(&eta.axes[2 * coord + 1], &nodes, h, le.im);
                    let phase = Complex64::new(0.0, (rot * lc.conj()).re).exp();
                    acc += phase * fx * fe.conj() * (wu * wv);
                }
            }
            prod *= acc;
        }
        spectral += a * prod * ts[j];
    }
    spectral *= ctx.fourier_norm();
    Ok(PlancherelSides { space, spectral })
}

/// `|⟨Λ^p(m)ξ, η⟩ - (2π)^{-4} ∫ ⟨π^p_ℓ(m) ξ̂(ℓ), η̂(ℓ)⟩ dℓ|`.
pub fn plancherel_defect(
    ctx: &GroupContext,
    p: f64,
    m: &GroupElement,
    xi: &SeparableFunction,
    eta: &SeparableFunction,
    grid: &MGrid,
    dual: DualBox,
) -> Result<f64> {
    plancherel_sides(ctx, p, m, xi, eta, grid, dual).map(|s| s.defect())
}
