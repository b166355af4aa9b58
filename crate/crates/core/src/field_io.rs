//! Field directories: `manifest.toml` plus `fibers.bin`, the kernels as
//! little-endian `f64` pairs `(re, im)`, row-major, in manifest order.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dstar::{FieldPlan, OperatorField, Provenance};
use crate::error::{Error, Result};
use crate::grid::{GridKind, TimeGrid};
use crate::group::{DualVector, GroupContext, KernelConvention};
use crate::kernel::KernelOperator;

pub const MANIFEST: &str = "manifest.toml";
pub const FIBERS: &str = "fibers.bin";
const FORMAT: &str = "mautner-field";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct GridEntry {
    half_width: f64,
    points: usize,
    kind: GridKind,
}

#[derive(Debug, Serialize, Deserialize)]
struct FiberEntry {
    p: f64,
    l: [f64; 4],
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    theta: f64,
    convention: KernelConvention,
    provenance: Provenance,
    time_grid: GridEntry,
    plan: FieldPlan,
    duals: Vec<[f64; 4]>,
    fibers: Vec<FiberEntry>,
}

pub fn write_field(field: &OperatorField, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let grid = field.grid();
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        theta: field.ctx().theta(),
        convention: field.ctx().convention(),
        provenance: field.provenance(),
        time_grid: GridEntry { half_width: grid.half_width(), points: grid.len(), kind: grid.kind() },
        plan: field.plan().clone(),
        duals: field.duals().iter().map(|l| l.reals()).collect(),
        fibers: field.entries().map(|(p, l, _)| FiberEntry { p, l: l.reals() }).collect(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join(MANIFEST), text)?;
    let mut out = BufWriter::new(fs::File::create(dir.join(FIBERS))?);
    for (_, _, k) in field.entries() {
        let m = k.kernel();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.write_all(&m[(i, j)].re.to_le_bytes())?;
                out.write_all(&m[(i, j)].im.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_field(dir: &Path) -> Result<OperatorField> {
    let text = fs::read_to_string(dir.join(MANIFEST))
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", dir.join(MANIFEST).display())))?;
    let m: Manifest = toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    if m.format != FORMAT || m.version != VERSION {
        return Err(Error::Format(format!("unsupported field format {} v{}", m.format, m.version)));
    }
    let ctx = GroupContext::new(m.theta)?.with_convention(m.convention);
    let grid = TimeGrid::new(m.time_grid.half_width, m.time_grid.points, m.time_grid.kind)?;
    let n = grid.len();
    let mut bytes = Vec::new();
    fs::File::open(dir.join(FIBERS))
        .map_err(|e| Error::Format(format!("cannot open {}: {e}", dir.join(FIBERS).display())))?
        .read_to_end(&mut bytes)?;
    let per_fiber = n * n * 16;
    if bytes.len() != per_fiber * m.fibers.len() {
        return Err(Error::Format(format!(
            "{FIBERS} holds {} bytes, expected {} for {} fibers of size {n}",
            bytes.len(),
            per_fiber * m.fibers.len(),
            m.fibers.len()
        )));
    }
    let word = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8 bytes"));
    let mut fibers = Vec::with_capacity(m.fibers.len());
    for (idx, entry) in m.fibers.iter().enumerate() {
        let chunk = &bytes[idx * per_fiber..(idx + 1) * per_fiber];
        let kernel = DMatrix::from_fn(n, n, |i, j| {
            let o = (i * n + j) * 16;
            Complex64::new(word(&chunk[o..o + 8]), word(&chunk[o + 8..o + 16]))
        });
        let k = KernelOperator::new(grid.clone(), kernel).map_err(|e| Error::Format(format!("fiber {idx}: {e}")))?;
        fibers.push((entry.p, DualVector::from_reals(entry.l), k));
    }
    let duals = m.duals.into_iter().map(DualVector::from_reals).collect();
    OperatorField::from_parts(ctx, grid, m.plan, duals, fibers, m.provenance).map_err(|e| Error::Format(e.to_string()))
}
