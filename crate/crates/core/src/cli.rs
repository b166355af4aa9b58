//! Command-line front end. Every subcommand is a `cmd_*` function returning an
//! [`Outcome`]; [`run`] adds argument parsing, the worker pool and exit codes.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Perturbation, RunConfig};
use crate::dstar::{certify, field_from_symbol, OperatorField};
use crate::error::{Error, Result};
use crate::field_io::{read_field, write_field};
use crate::group::{
    automorphism_alpha, dual_action, haar_translation_check, inverse, iso_h_defect, multiply, pairing, DualVector,
    GroupElement,
};
use crate::kernel::{induced_kernel, operator_norm, verify_convention};
use crate::plancherel::plancherel_sides;
use crate::sigma::{defect_sweep, SweepTable};
use crate::symbols::ProfileFamily;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mautner", version, about = "Kernel operators, limit constructions and field certification for the variable Mautner group")]
pub struct Cli {
    /// TOML run configuration; the shipped default when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (overrides `workers`).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// RNG seed (overrides `seed`).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Group-law, Haar, duality, iso_h and kernel-convention checks.
    Selftest,
    /// Dump the kernel of π^p_ℓ(A(p)) and print its norm.
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        p: Option<f64>,
        /// `re1,im1,re2,im2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        l: Option<Vec<f64>>,
    },
    /// σ-defect sweep over the δ schedule.
    Sweep,
    /// Certify a field built from `[symbol]` or read from `[certify] field`.
    Certify {
        /// Field directory (overrides `[certify] field`).
        #[arg(long, value_name = "DIR")]
        field: Option<PathBuf>,
    },
    /// Both sides of the Plancherel pairing for `[plancherel]`.
    Plancherel,
    /// Write the field `certify` would check to `<out>/field`.
    ExportField,
}

/// Verdict plus the report lines a subcommand printed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, lines: vec![] }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.passed &= ok;
        self.lines.push(format!("{name}: {} ({detail})", if ok { "PASS" } else { "FAIL" }));
    }

    fn info(&mut self, line: String) {
        self.lines.push(line);
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

const PARAMS: [f64; 5] = [-1.0, -0.3, 0.0, 0.5, 1.0];

fn random_element(rng: &mut ChaCha8Rng) -> GroupElement {
    let mut c = || Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let (z, w) = (c(), c());
    GroupElement::new(rng.gen_range(-2.0..2.0), z, w)
}

pub fn cmd_group_selftest(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = cfg.context()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Outcome::new();
    let id = GroupElement::identity();

    let (mut assoc, mut inv) = (0.0f64, 0.0f64);
    for k in 0..1000 {
        let p = PARAMS[k % PARAMS.len()];
        let (g, h, q) = (random_element(&mut rng), random_element(&mut rng), random_element(&mut rng));
        let lhs = multiply(&ctx, p, &multiply(&ctx, p, &g, &h)?, &q)?;
        let rhs = multiply(&ctx, p, &g, &multiply(&ctx, p, &h, &q)?)?;
        assoc = assoc.max(lhs.max_distance(&rhs));
        let gi = inverse(&ctx, p, &g)?;
        inv = inv.max(multiply(&ctx, p, &g, &gi)?.max_distance(&id)).max(multiply(&ctx, p, &gi, &g)?.max_distance(&id));
    }
    out.check("associativity", assoc <= 1e-12, format!("max deviation {assoc:e}"));
    out.check("inverse", inv <= 1e-12, format!("max deviation {inv:e}"));

    // |det α_p(t)| = e^{2pt} e^{-2pt}, evaluated on the moduli of the flow
    let mut jac = 0.0f64;
    for k in 0..200 {
        let (p, t) = (PARAMS[k % PARAMS.len()], rng.gen_range(-3.0..3.0));
        let e1 = automorphism_alpha(&ctx, p, t, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])[0].norm();
        let e2 = automorphism_alpha(&ctx, p, t, [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])[1].norm();
        jac = jac.max(((e1 * e2).powi(2) - 1.0).abs());
    }
    out.check("unimodularity", jac <= 1e-12, format!("max |det - 1| {jac:e}"));
    let g = GroupElement::new(0.5, Complex64::new(0.3, -0.2), Complex64::new(0.1, 0.4));
    let haar = haar_translation_check(&ctx, 0.5, &g, 17, 1.0, 6.0)?;
    let rel = haar.translate_error() / haar.exact;
    out.check("haar translation", rel <= 0.05, format!("relative error {rel:e} on 17^5 nodes"));

    let mut dual = 0.0f64;
    for k in 0..200 {
        let (p, t) = (PARAMS[k % PARAMS.len()], rng.gen_range(-2.0..2.0));
        let c = random_element(&mut rng).fiber();
        let l = DualVector::from_reals([0; 4].map(|_| rng.gen_range(-2.0..2.0)));
        let lhs = pairing(&automorphism_alpha(&ctx, p, t, c), &l);
        let rhs = pairing(&c, &dual_action(&ctx, p, t, &l));
        dual = dual.max((lhs - rhs).abs());
    }
    out.check("duality", dual <= 1e-12, format!("max pairing deviation {dual:e}"));

    let mut iso = 0.0f64;
    for k in 0..200 {
        let p = [-0.7, -0.3, 0.5, 1.0][k % 4];
        let (g, h) = (random_element(&mut rng), random_element(&mut rng));
        iso = iso.max(iso_h_defect(&ctx, p, p, &g, &h)?);
    }
    out.check("iso_h at p0 = p", iso <= 1e-12, format!("max homomorphism defect {iso:e}"));

    match verify_convention(&ctx) {
        Ok(rel) => out.check("kernel convention", true, format!("relative multiplicativity defect {rel:e}")),
        Err(Error::Precondition(msg)) => out.check("kernel convention", false, msg),
        Err(e) => return Err(e),
    }
    Ok(out)
}

pub fn cmd_kernel(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = cfg.context()?;
    let grid = cfg.time_grid()?;
    let (p, l) = (cfg.kernel.p, cfg.kernel_dual()?);
    let k = induced_kernel(&ctx, p, &l, &cfg.family()?.at(p), &grid)?;
    let norm = operator_norm(&k);
    k.write_csv(create(&cfg.out.join("kernel.csv"))?)?;
    let mut w = create(&cfg.out.join("kernel_norm.csv"))?;
    writeln!(w, "p,l1_re,l1_im,l2_re,l2_im,norm")?;
    writeln!(w, "{p},{},{},{},{},{norm:e}", l.l1.re, l.l1.im, l.l2.re, l.l2.im)?;
    w.flush()?;
    let mut out = Outcome::new();
    out.info(format!("kernel: n = {}, p = {p}, operator norm = {norm:e}", grid.len()));
    Ok(out)
}

fn write_sweep(table: &SweepTable, dir: &Path) -> Result<()> {
    let mut w = create(&dir.join("sweep.csv"))?;
    writeln!(w, "delta,epsilon,r,ratio,p,l1_re,l1_im,l2_re,l2_im,defect")?;
    for r in &table.rows {
        let d = r.defect.map_or("nan".to_string(), |d| format!("{d:e}"));
        writeln!(w, "{},{},{},{},{},{},{},{},{},{d}", r.delta, r.epsilon, r.r, r.ratio, r.p, r.l.l1.re, r.l.l1.im, r.l.l2.re, r.l.l2.im)?;
    }
    w.flush()?;

    let mut w = create(&dir.join("sweep_max.csv"))?;
    writeln!(w, "delta,epsilon,r,ratio,max_defect,bound")?;
    for s in &table.summaries {
        let b = s.bound.map_or("nan".to_string(), |b| format!("{b:e}"));
        writeln!(w, "{},{},{},{},{:e},{b}", s.delta, s.epsilon, s.r, s.ratio, s.max_defect)?;
    }
    w.flush()?;

    let mut w = create(&dir.join("sweep_regression.csv"))?;
    writeln!(w, "quantity,value")?;
    writeln!(w, "slope,{}", table.slope.map_or("nan".to_string(), |s| format!("{s}")))?;
    writeln!(w, "deltas,{}", table.summaries.len())?;
    writeln!(w, "failed_cells,{}", table.errors.len())?;
    w.flush()?;

    let mut w = create(&dir.join("sweep_errors.csv"))?;
    writeln!(w, "delta,p,l1_re,l1_im,l2_re,l2_im,message")?;
    for e in &table.errors {
        writeln!(w, "{},{},{},{},{},{},\"{}\"", e.delta, e.p, e.l.l1.re, e.l.l1.im, e.l.l2.re, e.l.l2.im, e.message.replace('"', "'"))?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the sweep on the current rayon pool and writes the CSV files.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = cfg.context()?;
    let a = cfg.family()?.at(1.0);
    let table = defect_sweep(&ctx, &a, &cfg.sweep.deltas, cfg.sweep.p_rule, &cfg.dual_grid()?, &cfg.time_grid()?)?;
    write_sweep(&table, &cfg.out)?;
    let mut out = Outcome::new();
    for s in &table.summaries {
        let b = s.bound.map_or("no envelope".to_string(), |b| format!("bound {b:e}"));
        out.info(format!("delta {}: D = {:e}, {b}", s.delta, s.max_defect));
    }
    out.check("cells", table.errors.is_empty(), format!("{} of {} failed", table.errors.len(), table.rows.len()));
    let monotone = table.summaries.windows(2).all(|w| w[1].max_defect <= w[0].max_defect);
    out.check("monotone", monotone, "D(delta) along the schedule".into());
    let within = table.rows.iter().all(|r| {
        let s = table.summaries.iter().find(|s| s.delta == r.delta).expect("summary per delta");
        match (r.defect, s.bound) {
            (Some(d), Some(b)) => d <= b,
            _ => true,
        }
    });
    out.check("bound", within, "every cell below 3 K C_F (delta/epsilon) |phi|_1".into());
    out.info(format!("slope: {}", table.slope.map_or("undefined".to_string(), |s| format!("{s:.4}"))));
    Ok(out)
}

/// The field `certify` and `export-field` work on.
pub fn build_field(cfg: &RunConfig) -> Result<OperatorField> {
    if let Some(dir) = &cfg.certify.field {
        return read_field(dir);
    }
    let field = field_from_symbol(&cfg.context()?, &cfg.family()?, &cfg.certify_grid()?, &cfg.certify_duals()?, &cfg.plan())?;
    Ok(match cfg.certify.perturbation {
        Perturbation::None => field,
        Perturbation::JumpAtZero => field.jump_at_zero(),
    })
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<Outcome> {
    let field = build_field(cfg)?;
    let report = certify(&field, &cfg.tolerances());
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("report.toml"), report.to_toml()?)?;
    let mut w = create(&cfg.out.join("moduli.csv"))?;
    report.write_moduli_csv(&mut w)?;
    w.flush()?;
    let mut out = Outcome::new();
    out.info(format!("fibers: {}, sup norm {:e}, tolerance {:e}", field.len(), report.sup_norm, report.tolerance));
    for c in &report.conditions {
        let worst = c.traces.iter().filter_map(|t| t.values.last()).fold(0.0f64, |a, b| a.max(*b));
        let detail = c.error.clone().unwrap_or_else(|| format!("finest value {worst:e}"));
        out.check(&c.name, c.passed, detail);
    }
    out.passed = report.passed;
    Ok(out)
}

pub fn cmd_plancherel(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = cfg.context()?;
    let (grid, xi, eta) = cfg.plancherel_inputs()?;
    let sides = plancherel_sides(&ctx, cfg.plancherel.p, &cfg.plancherel_element(), &xi, &eta, &grid, cfg.plancherel_dual_box())?;
    let mut out = Outcome::new();
    out.info(format!("space side    {:e} {:+e}i", sides.space.re, sides.space.im));
    out.info(format!("spectral side {:e} {:+e}i", sides.spectral.re, sides.spectral.im));
    let d = sides.defect();
    let tol = cfg.plancherel.tolerance * sides.space.norm().max(sides.spectral.norm()).max(f64::MIN_POSITIVE);
    out.check("plancherel", d <= tol, format!("discrepancy {d:e}"));
    Ok(out)
}

pub fn cmd_export_field(cfg: &RunConfig) -> Result<Outcome> {
    let field = build_field(cfg)?;
    let dir = cfg.out.join("field");
    write_field(&field, &dir)?;
    let mut out = Outcome::new();
    out.info(format!("wrote {} fibers to {}", field.len(), dir.display()));
    Ok(out)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Format(_) | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn configure(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default_config(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Kernel { p, l } => {
            if let Some(p) = p {
                cfg.kernel.p = *p;
            }
            if let Some(l) = l {
                cfg.kernel.l = l
                    .as_slice()
                    .try_into()
                    .map_err(|_| Error::Config(format!("--l needs 4 comma-separated values, got {}", l.len())))?;
            }
        }
        Command::Certify { field: Some(dir) } => cfg.certify.field = Some(dir.clone()),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand inside a pool of `cfg.workers` threads.
pub fn execute(cfg: &RunConfig, command: &Command) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| match command {
        Command::Selftest => cmd_group_selftest(cfg),
        Command::Kernel { .. } => cmd_kernel(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Certify { .. } => cmd_certify(cfg),
        Command::Plancherel => cmd_plancherel(cfg),
        Command::ExportField => cmd_export_field(cfg),
    })
}

/// Full CLI: parse, configure, execute, print; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let cfg = match configure(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match execute(&cfg, &cli.command) {
        Ok(out) => {
            for line in &out.lines {
                println!("{line}");
            }
            if out.passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
