//! Subcommand implementations. Every CSV is written with 17 significant
//! digits and a fixed row order, so identical inputs give identical bytes.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qtensor::diagnostics::{
    holder_constant, holder_estimate, morrey_scan, nearest_node, nodes_within, physicality, PhysicalityReport, Verdict, HISTOGRAM_BINS, MORREY_MIN_RADIUS_CELLS,
};
use qtensor::field::{assemble_energy, make_defect_bc, EnergyModel, Grid2D, QField, Shape};
use qtensor::io::{fmt_num, load_field, save_field, write_diagnostics_header, write_diagnostics_row, write_trace};
use qtensor::minimizer::{harmonic_initial, minimize as run_minimize, SolveTrace, StopReason};
use qtensor::potential::{compute_b0, BulkModel, MaierSaupe};
use qtensor::replacement::{build_l_operator, disk_nodes, replace, Operator, ReplacementSpec};
use qtensor::tensor::DEFAULT_BOUNDARY_TOL;
use qtensor::{Error, QTensor};

use crate::config::{BcKind, ConfigError, DomainShape, OperatorName, RunConfig};

/// Lowest margin that counts as strictly physical in reports.
pub const PHYSICALITY_TOL: f64 = DEFAULT_BOUNDARY_TOL;
/// Random centre draws before giving up on fitting replacement disks.
const MAX_DISK_DRAWS: usize = 10_000;

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration, arguments, input files or domain requests.
    Config(String),
    /// A solver did not converge.
    Convergence(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Convergence(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Convergence(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConvergenceFailure { .. } | Error::Stalled(_) => Failure::Convergence(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quad_order: Option<usize>,
}

impl Overrides {
    fn load(&self, required: bool) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None if required => return Err(Failure::Config("--config is required".into())),
            None => RunConfig::parse_with_env("", std::env::vars())?,
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(q) = self.quad_order {
            cfg.bulk.quad_order = q;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.display().to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn setup_threads(threads: Option<usize>) -> Outcome {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Failure::Config("--threads must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(())
}

fn potential_for(cfg: &RunConfig, force_adaptive: bool) -> Result<MaierSaupe, Failure> {
    let p = MaierSaupe::with_order(cfg.bulk.quad_order)?;
    Ok(if cfg.bulk.adaptive || force_adaptive { p.adaptive() } else { p })
}

fn csv_out(dir: Option<&Path>, name: &str) -> Result<Box<dyn Write>, Failure> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Box::new(BufWriter::new(File::create(d.join(name))?)))
        }
        None => Ok(Box::new(BufWriter::new(std::io::stdout().lock()))),
    }
}

/// Point values, slices and simplex tables of `f_ms`. Solves raise the
/// quadrature order near the edge of the physical set.
pub fn potential(ov: &Overrides, at: Option<Vec<f64>>, slice: bool, s_max: f64, n: usize, b0: bool, kappa: f64) -> Outcome {
    let cfg = ov.load(false)?;
    let pot = potential_for(&cfg, true)?;
    let dir = ov.out.as_deref();
    if b0 {
        let params = compute_b0(kappa, &pot)?;
        let mut w = csv_out(None, "")?;
        writeln!(w, "kappa,b0")?;
        writeln!(w, "{},{}", fmt_num(kappa), fmt_num(params.b0))?;
        return Ok(());
    }
    if let Some(z) = at {
        let z: [f64; 5] = z.try_into().map_err(|_| Failure::Config("--at needs five values".into()))?;
        let q = QTensor::from_z(z)?;
        let ev = pot.solve(&q)?;
        let mut w = csv_out(None, "")?;
        writeln!(w, "value,margin,g1,g2,g3,g4,g5")?;
        let g: Vec<String> = ev.grad.iter().map(|v| fmt_num(*v)).collect();
        writeln!(w, "{},{},{}", fmt_num(ev.value), fmt_num(q.margin()), g.join(","))?;
        return Ok(());
    }
    if slice {
        if n < 2 || !(s_max > -0.5 && s_max < 1.0) {
            return Err(Failure::Config("uniaxial slice needs n >= 2 and s_max in (-1/2, 1)".into()));
        }
        let mut w = csv_out(dir, "potential_slice.csv")?;
        writeln!(w, "s,lambda2,lambda3,f_ms,margin")?;
        for k in 0..n {
            let s = s_max * k as f64 / (n - 1) as f64;
            let q = QTensor::uniaxial(s, [0.0, 0.0, 1.0])?;
            let ev = pot.solve(&q)?;
            writeln!(w, "{},{},{},{},{}", fmt_num(s), fmt_num(-s / 3.0), fmt_num(2.0 * s / 3.0), fmt_num(ev.value), fmt_num(q.margin()))?;
        }
        w.flush()?;
        return Ok(());
    }
    if n < 2 {
        return Err(Failure::Config("simplex table needs n >= 2".into()));
    }
    let mut w = csv_out(dir, "potential.csv")?;
    writeln!(w, "lambda2,lambda3,f_ms,margin")?;
    for i in 0..=n {
        for j in 0..=n {
            let l2 = -1.0 / 3.0 + i as f64 / n as f64;
            let l3 = -1.0 / 3.0 + j as f64 / n as f64;
            let q = QTensor::from_z([-l2 - l3, 0.0, 0.0, l2, 0.0])?;
            let m = q.margin();
            if m < 1e-3 {
                continue;
            }
            let ev = pot.solve(&q)?;
            writeln!(w, "{},{},{},{}", fmt_num(l2), fmt_num(l3), fmt_num(ev.value), fmt_num(m))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn build_grid(cfg: &RunConfig) -> Result<Grid2D, Failure> {
    let d = &cfg.domain;
    Ok(match d.shape {
        DomainShape::Disk => Grid2D::disk(d.n, d.radius)?,
        DomainShape::Rectangle => {
            let long = d.width.max(d.height);
            let h = long / (d.n - 1) as f64;
            let nx = (d.width / h).round() as usize + 1;
            let ny = (d.height / h).round() as usize + 1;
            Grid2D::rectangle(nx, ny, h)?
        }
    })
}

pub fn build_initial(cfg: &RunConfig, grid: Grid2D) -> Result<QField, Failure> {
    let bc = match cfg.bc.kind {
        BcKind::Defect => make_defect_bc(&grid, cfg.bc.s, cfg.bc.winding)?,
        BcKind::Constant => {
            let q = QTensor::uniaxial(cfg.bc.s, cfg.bc.director)?;
            vec![q.z(); grid.boundary().len()]
        }
    };
    Ok(harmonic_initial(&QField::new(grid, &bc)?)?)
}

pub fn build_model(cfg: &RunConfig) -> Result<EnergyModel, Failure> {
    let bulk = BulkModel::new(potential_for(cfg, false)?, cfg.bulk.kappa)?;
    Ok(EnergyModel::new(cfg.elastic.coefficients(), Some(bulk))?)
}

fn write_physicality(dir: &Path, field: &QField) -> Result<PhysicalityReport, Failure> {
    let rep = physicality(field, PHYSICALITY_TOL);
    let (i, j) = field.grid().ij(rep.argmin);
    let mut w = csv_out(Some(dir), "physicality.csv")?;
    writeln!(w, "min_margin,argmin_i,argmin_j,verdict,touching_nodes")?;
    let (verdict, touching) = match &rep.verdict {
        Verdict::StrictlyPhysical(_) => ("strictly_physical", 0),
        Verdict::BoundaryTouching(v) => ("boundary_touching", v.len()),
    };
    writeln!(w, "{},{i},{j},{verdict},{touching}", fmt_num(rep.min_margin))?;
    w.flush()?;
    let mut w = csv_out(Some(dir), "margin_histogram.csv")?;
    writeln!(w, "bin_lo,bin_hi,count")?;
    let width = 1.0 / (3.0 * HISTOGRAM_BINS as f64);
    for (b, c) in rep.histogram.iter().enumerate() {
        writeln!(w, "{},{},{c}", fmt_num(b as f64 * width), fmt_num((b + 1) as f64 * width))?;
    }
    w.flush()?;
    Ok(rep)
}

fn write_metadata(dir: &Path, cfg: &RunConfig, model: &EnergyModel, trace: &SolveTrace, field: &QField) -> Outcome {
    let e = assemble_energy(field, model)?;
    let params = model.bulk.as_ref().map(|b| b.params);
    let mut w = csv_out(Some(dir), "metadata.toml")?;
    writeln!(w, "version = \"{}\"", env!("CARGO_PKG_VERSION"))?;
    if let Some(p) = params {
        writeln!(w, "kappa = {}", fmt_num(p.kappa))?;
        writeln!(w, "b0 = {}", fmt_num(p.b0))?;
        writeln!(w, "bulk_argmin = [{}, {}, {}]", fmt_num(p.argmin[0]), fmt_num(p.argmin[1]), fmt_num(p.argmin[2]))?;
    }
    writeln!(w, "quad_order = {}", cfg.bulk.quad_order)?;
    writeln!(w, "iterations = {}", trace.iterations())?;
    writeln!(w, "stop = \"{:?}\"", trace.stop)?;
    writeln!(w, "energy_total = {}", fmt_num(e.total))?;
    writeln!(w, "energy_elastic = {}", fmt_num(e.elastic))?;
    writeln!(w, "energy_bulk = {}", fmt_num(e.bulk))?;
    writeln!(w, "min_margin = {}", fmt_num(field.min_margin()))?;
    w.flush()?;
    Ok(())
}

/// Writes `field.txt`, `trace.csv`, `physicality.csv`,
/// `margin_histogram.csv`, `config.toml` and `metadata.toml`.
pub fn minimize(ov: &Overrides) -> Outcome {
    let cfg = ov.load(true)?;
    let dir = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    let model = build_model(&cfg)?;
    let init = build_initial(&cfg, build_grid(&cfg)?)?;
    let (field, trace) = match run_minimize(init, &model, &cfg.solver.solve_config()) {
        Ok(r) => r,
        Err(Error::Stalled(stall)) => {
            write_trace(csv_out(Some(&dir), "trace.csv")?, &stall.trace)?;
            if let Some(f) = &stall.field {
                save_field(&dir.join("field.txt"), f)?;
            }
            return Err(Failure::Convergence("line search stalled".into()));
        }
        Err(e) => return Err(e.into()),
    };
    save_field(&dir.join("field.txt"), &field)?;
    let mut w = csv_out(Some(&dir), "trace.csv")?;
    write_trace(&mut w, &trace)?;
    w.flush()?;
    write_physicality(&dir, &field)?;
    write_metadata(&dir, &cfg, &model, &trace, &field)?;
    match trace.stop {
        StopReason::Converged | StopReason::PrecisionFloor => Ok(()),
        StopReason::MaxIters => Err(Failure::Convergence(format!("no convergence in {} iterations", trace.iterations()))),
    }
}

/// Writes `replacement.csv` and, when enabled, `morrey.csv`, `morrey_fit.csv`,
/// `holder.csv`, `holder_fit.csv` and the physicality reports.
pub fn diagnose(ov: &Overrides, field_path: &Path) -> Outcome {
    let cfg = ov.load(true)?;
    let field = load_field(field_path)?;
    let dir = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&dir)?;
    let model = build_model(&cfg)?;
    let diag = &cfg.diagnostics;
    let g = field.grid();
    let h = g.h();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = csv_out(Some(&dir), "replacement.csv")?;
    write_diagnostics_header(&mut w)?;
    let interior = g.interior();
    let mut done = 0;
    let mut draws = 0;
    while done < diag.replacement_disks {
        if draws >= MAX_DISK_DRAWS || interior.is_empty() {
            return Err(Failure::Config(format!("replacement disks of radius {} do not fit in the domain", diag.replacement_radius)));
        }
        draws += 1;
        let k = interior[rng.gen_range(0..interior.len())];
        let p = g.position(k);
        let center = [p[0] + rng.gen_range(-0.5..0.5) * h, p[1] + rng.gen_range(-0.5..0.5) * h];
        let operator = match diag.operator {
            OperatorName::Laplace => Operator::Laplace,
            OperatorName::LOperator => build_l_operator(&model.coeffs, &field.q(k))?.operator(),
        };
        let spec = ReplacementSpec { center, radius: diag.replacement_radius, operator };
        match disk_nodes(&field, &spec) {
            Ok(_) => {}
            Err(Error::Unsupported(_)) => continue,
            Err(e) => return Err(e.into()),
        }
        let (_, report) = replace(&field, &spec, Some(&model))?;
        write_diagnostics_row(&mut w, &spec, &report)?;
        done += 1;
    }
    w.flush()?;

    let center = nearest_node(&field, diag.morrey_center);
    let cpos = g.position(center);
    if diag.morrey {
        let radii = if diag.morrey_radii.is_empty() { auto_radii(&field, cpos)? } else { diag.morrey_radii.clone() };
        let morrey = morrey_scan(&field, center, &radii, model.bulk.as_ref())?;
        let mut w = csv_out(Some(&dir), "morrey.csv")?;
        writeln!(w, "radius,w")?;
        for (r, v) in morrey.radii.iter().zip(&morrey.w) {
            writeln!(w, "{},{}", fmt_num(*r), fmt_num(*v))?;
        }
        w.flush()?;
        let mut w = csv_out(Some(&dir), "morrey_fit.csv")?;
        writeln!(w, "center_x,center_y,fitted_sigma,fit_r2,fit_count")?;
        writeln!(w, "{},{},{},{},{}", fmt_num(cpos[0]), fmt_num(cpos[1]), fmt_num(morrey.fitted_sigma), fmt_num(morrey.fit_r2), morrey.fit_count)?;
        w.flush()?;
    }
    if diag.holder {
        let r = diag.holder_radius;
        let nodes = nodes_within(&field, cpos, r);
        let est = holder_estimate(&field, &nodes, &diag.holder_sigmas)?;
        let mut w = csv_out(Some(&dir), "holder.csv")?;
        writeln!(w, "sigma,seminorm")?;
        for (s, v) in est.sigmas.iter().zip(&est.seminorms) {
            writeln!(w, "{},{}", fmt_num(*s), fmt_num(*v))?;
        }
        w.flush()?;
        // energy on B_2r when the disk fits, otherwise the whole field
        let outer = [0.7, 0.8, 0.9, 1.0].map(|f| 2.0 * r * f);
        let energy = match morrey_scan(&field, center, &outer, model.bulk.as_ref()) {
            Ok(m) => m.w[m.w.len() - 1],
            Err(_) => assemble_energy(&field, &model)?.total,
        };
        let sigma = est.alpha.clamp(f64::MIN_POSITIVE, 1.0);
        let seminorm = holder_estimate(&field, &nodes, &[sigma])?.seminorms[0];
        let mut w = csv_out(Some(&dir), "holder_fit.csv")?;
        writeln!(w, "alpha,seminorm_at_alpha,energy,constant,pairs,exhaustive")?;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_num(est.alpha),
            fmt_num(seminorm),
            fmt_num(energy),
            fmt_num(holder_constant(seminorm, r, sigma, energy)),
            est.pairs,
            est.exhaustive
        )?;
        w.flush()?;
    }

    if diag.physicality {
        write_physicality(&dir, &field)?;
    }
    Ok(())
}

/// Eight geometric radii from `8h` to 0.9 of the distance to the edge.
fn auto_radii(field: &QField, c: [f64; 2]) -> Result<Vec<f64>, Failure> {
    let g = field.grid();
    let h = g.h();
    let edge = match g.shape() {
        Shape::Disk { center, radius } => radius - (c[0] - center[0]).hypot(c[1] - center[1]),
        Shape::Rectangle => {
            let o = g.origin();
            let (w, t) = ((g.nx() - 1) as f64 * h, (g.ny() - 1) as f64 * h);
            (c[0] - o[0]).min(o[0] + w - c[0]).min(c[1] - o[1]).min(o[1] + t - c[1])
        }
    };
    let (lo, hi) = (MORREY_MIN_RADIUS_CELLS * h, 0.9 * edge - h);
    if !(hi > lo * 1.5) {
        return Err(Failure::Config(format!("grid too coarse for a Morrey scan at ({}, {})", c[0], c[1])));
    }
    Ok((0..8).map(|i| lo * (hi / lo).powf(i as f64 / 7.0)).collect())
}

pub fn validate_config(ov: &Overrides) -> Outcome {
    ov.load(true)?;
    println!("ok");
    Ok(())
}
