//! Run configuration: one TOML file with a section per subcommand.
//!
//! Physical parameters carry no defaults; only `seed`, `workers` and `out`
//! may be omitted. [`RunConfig::validate`] builds every grid and symbol the
//! subcommands will use, so a config that loads does not fail a precondition
//! later (per-δ support failures in a sweep are recorded, not fatal).

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dstar::{FieldPlan, Tolerances};
use crate::error::{ensure_param, Error, Result};
use crate::grid::{DualGrid, GridKind, TimeGrid};
use crate::group::{DualVector, GroupContext, GroupElement, KernelConvention};
use crate::plancherel::{plancherel_preconditions, DualBox, MGrid, SeparableFunction};
use crate::sigma::{scheme_default, PRule};
use crate::symbols::{FourierProfile, SeparableProfile, SymbolFamily, Window};

/// Shipped default; used when no `--config` is given.
pub const DEFAULT_CONFIG: &str = include_str!("../fixtures/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub group: GroupSection,
    pub grid: GridSection,
    pub duals: DualSection,
    pub symbol: SymbolSection,
    pub kernel: KernelSection,
    pub sweep: SweepSection,
    pub certify: CertifySection,
    pub plancherel: PlancherelSection,
}

fn one() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub theta: f64,
    pub convention: KernelConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub points: usize,
    pub kind: GridKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSection {
    pub half_width: f64,
    /// Nodes per real axis; the grid has `points⁴` duals.
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Zero,
    Constant,
    LinearInP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Bump,
    TruncatedGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSection {
    pub family: FamilyKind,
    pub shape: Shape,
    pub center_s: f64,
    pub width_s: f64,
    /// `[Re ℓ₁, Im ℓ₁, Re ℓ₂, Im ℓ₂]`.
    pub center_l: [f64; 4],
    pub width_l: f64,
    /// `[re, im]`.
    pub amplitude: [f64; 2],
    /// Only for `truncated-gaussian`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub p: f64,
    pub l: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub deltas: Vec<f64>,
    pub p_rule: PRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    None,
    JumpAtZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub grid_kind: GridKind,
    pub dual_half_width: f64,
    pub dual_points: usize,
    pub zero_approach: Vec<f64>,
    pub anchors: Vec<f64>,
    pub anchor_offsets: Vec<f64>,
    pub relative_tolerance: f64,
    pub probes: usize,
    pub perturbation: Perturbation,
    /// Certify a field directory instead of building one from `[symbol]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
}

/// `ξ(s, c) = w(s - a₀) Πₖ g((xₖ - aₖ)/ρ)` with `w` the smooth bump and `g`
/// the truncated Gaussian window; `η` likewise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlancherelSection {
    pub p: f64,
    /// `[t, Re z, Im z, Re w, Im w]`.
    pub m: [f64; 5],
    pub time_half_width: f64,
    pub time_points: usize,
    pub fiber_half_width: f64,
    pub fiber_points: usize,
    pub dual_half_width: f64,
    pub dual_points: usize,
    pub window_sigma: f64,
    pub radius: f64,
    /// `[a₀, a₁, a₂, a₃, a₄]`.
    pub xi_center: [f64; 5],
    pub eta_center: [f64; 5],
    /// Pass threshold on the discrepancy, relative to the larger side.
    pub tolerance: f64,
}

fn config_err(section: &str, e: Error) -> Error {
    Error::Config(format!("[{section}] {e}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn default_config() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped default config is valid")
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.context()?;
        let grid = self.time_grid()?;
        self.dual_grid()?;
        let family = self.family()?;
        let radius = family.time_radius();
        if grid.half_width() < radius {
            return Err(Error::Config(format!(
                "[grid] half_width {} is below the symbol time radius {radius}; raise it",
                grid.half_width()
            )));
        }

        ensure_param(self.kernel.p).map_err(|e| config_err("kernel", e))?;
        self.kernel_dual()?;

        let s = &self.sweep;
        if s.deltas.is_empty() || s.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("[sweep] deltas must be non-empty and strictly decreasing".into()));
        }
        for &d in &s.deltas {
            scheme_default(d, &grid).map_err(|e| config_err("sweep", e))?;
        }
        if let PRule::Uniform { count: 0 } = s.p_rule {
            return Err(Error::Config("[sweep] uniform p rule needs count >= 1".into()));
        }

        let c = &self.certify;
        self.certify_grid()?;
        self.certify_duals()?;
        self.plan().validate().map_err(|e| config_err("certify", e))?;
        if self.certify_grid()?.half_width() < radius {
            return Err(Error::Config("[certify] grid_half_width is below the symbol time radius".into()));
        }
        if !(c.relative_tolerance > 0.0 && c.relative_tolerance.is_finite()) || c.probes == 0 {
            return Err(Error::Config("[certify] relative_tolerance must be positive and probes >= 1".into()));
        }

        let (grid, xi, eta) = self.plancherel_inputs()?;
        plancherel_preconditions(self.plancherel.p, &self.plancherel_element(), &xi, &eta, &grid)
            .map_err(|e| config_err("plancherel", e))?;
        Ok(())
    }

    pub fn context(&self) -> Result<GroupContext> {
        Ok(GroupContext::new(self.group.theta).map_err(|e| config_err("group", e))?.with_convention(self.group.convention))
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.half_width, self.grid.points, self.grid.kind).map_err(|e| config_err("grid", e))
    }

    pub fn dual_grid(&self) -> Result<DualGrid> {
        DualGrid::uniform(self.duals.half_width, self.duals.points).map_err(|e| config_err("duals", e))
    }

    pub fn kernel_dual(&self) -> Result<DualVector> {
        let l = DualVector::from_reals(self.kernel.l);
        if !l.is_finite() {
            return Err(Error::Config("[kernel] l must be finite".into()));
        }
        Ok(l)
    }

    /// The base symbol `A₀` described by `[symbol]`.
    pub fn profile(&self) -> Result<FourierProfile> {
        let s = &self.symbol;
        let window = match s.shape {
            Shape::Bump => {
                if s.sigma.is_some() {
                    return Err(Error::Config("[symbol] sigma only applies to truncated-gaussian".into()));
                }
                Window::SmoothBump
            }
            Shape::TruncatedGaussian => match s.sigma {
                Some(sigma) if sigma > 0.0 && sigma.is_finite() => Window::TruncatedGaussian { sigma },
                _ => return Err(Error::Config("[symbol] truncated-gaussian needs sigma > 0".into())),
            },
        };
        FourierProfile::separable(SeparableProfile {
            time_window: window,
            dual_window: window,
            center_s: s.center_s,
            width_s: s.width_s,
            center_l: DualVector::from_reals(s.center_l),
            width_l: s.width_l,
            amplitude: Complex64::new(s.amplitude[0], s.amplitude[1]),
        })
        .map_err(|e| config_err("symbol", e))
    }

    pub fn family(&self) -> Result<SymbolFamily> {
        let a = self.profile()?;
        Ok(match self.symbol.family {
            FamilyKind::Zero => SymbolFamily::Zero,
            FamilyKind::Constant => SymbolFamily::Constant(a),
            FamilyKind::LinearInP => SymbolFamily::LinearInP(a),
        })
    }

    pub fn certify_grid(&self) -> Result<TimeGrid> {
        let c = &self.certify;
        TimeGrid::new(c.grid_half_width, c.grid_points, c.grid_kind).map_err(|e| config_err("certify", e))
    }

    pub fn certify_duals(&self) -> Result<DualGrid> {
        DualGrid::uniform(self.certify.dual_half_width, self.certify.dual_points).map_err(|e| config_err("certify", e))
    }

    pub fn plan(&self) -> FieldPlan {
        let c = &self.certify;
        FieldPlan { zero_approach: c.zero_approach.clone(), anchors: c.anchors.clone(), anchor_offsets: c.anchor_offsets.clone() }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances { relative: self.certify.relative_tolerance, probes: self.certify.probes, seed: self.seed }
    }

    pub fn plancherel_element(&self) -> GroupElement {
        let m = self.plancherel.m;
        GroupElement::new(m[0], Complex64::new(m[1], m[2]), Complex64::new(m[3], m[4]))
    }

    pub fn plancherel_dual_box(&self) -> DualBox {
        DualBox { half_width: self.plancherel.dual_half_width, points: self.plancherel.dual_points }
    }

    /// Grid and the two test functions of `[plancherel]`.
    pub fn plancherel_inputs(&self) -> Result<(MGrid, SeparableFunction, SeparableFunction)> {
        let c = &self.plancherel;
        let err = |msg: &str| Error::Config(format!("[plancherel] {msg}"));
        if !(c.window_sigma > 0.0 && c.radius > 0.0 && c.tolerance > 0.0) {
            return Err(err("window_sigma, radius and tolerance must be positive"));
        }
        if !(c.dual_half_width > 0.0) || c.dual_points < 2 {
            return Err(err("dual box needs dual_half_width > 0 and dual_points >= 2"));
        }
        if !c.m.iter().chain(&c.xi_center).chain(&c.eta_center).all(|v| v.is_finite()) {
            return Err(err("m and centers must be finite"));
        }
        let time = TimeGrid::periodic(c.time_half_width, c.time_points).map_err(|e| config_err("plancherel", e))?;
        let grid = MGrid::new(time, c.fiber_half_width, c.fiber_points).map_err(|e| config_err("plancherel", e))?;
        let gauss = Window::TruncatedGaussian { sigma: c.window_sigma };
        let bump = Window::SmoothBump;
        let sample = |a: [f64; 5]| {
            let axis = |k: usize| move |x: f64| Complex64::new(gauss.value((x - a[k]) / c.radius), 0.0);
            SeparableFunction::sample(&grid, |s| Complex64::new(bump.value(s - a[0]), 0.0), [axis(1), axis(2), axis(3), axis(4)])
        };
        let xi = sample(c.xi_center);
        let eta = sample(c.eta_center);
        Ok((grid, xi, eta))
    }
}
