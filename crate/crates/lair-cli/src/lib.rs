//! Experiment driver behind the `lair` command line: builds or loads a
//! system, runs the configured solver over a parameter sweep, and renders
//! the report rows as a table, CSV, or JSON lines.

use lair::diagnostics::{cycle_complexity, wpd};
use lair::error::{Error, Result};
use lair::hierarchy::{setup, InterpolationKind, RestrictionKind, SetupConfig};
use lair::krylov::{gmres, SolveConfig};
use lair::problems::{
    advection_diffusion_reaction, block_diag_scale, synthetic_block_advection, PdeSpec,
    ProblemMeta, ReactionField, VelocityField,
};
use lair::rng::random_guess;
use lair::sparse::{BlockLayout, SparseMatrix};
use lair::strength::{classical_soc, rs_first_pass, CfSplitting, Label};
use lair::transfer::{
    extract_z, lair_restriction, neumann_restriction, Distance, FidelitySetup, RestrictionConfig,
};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const DENSE_FIDELITY_CAP: usize = 6200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    /// Pure diffusion (kappa = 1 unless overridden).
    Poisson,
    /// Constant-velocity advection-diffusion-reaction.
    Adr,
    /// Divergence-free recirculating flow.
    Recirculating,
    /// Curved north-east flow with the piecewise-constant cross section.
    Curved,
    /// Curved flow expanded to dense k x k blocks per grid point.
    BlockAdvection,
}

impl ProblemKind {
    fn velocity(self) -> VelocityField {
        match self {
            ProblemKind::Poisson => VelocityField::None,
            ProblemKind::Adr => VelocityField::Constant {
                angle: std::f64::consts::FRAC_PI_6,
            },
            ProblemKind::Recirculating => VelocityField::Recirculating,
            ProblemKind::Curved | ProblemKind::BlockAdvection => VelocityField::CurvedNorthEast,
        }
    }

    fn reaction(self, sigma: Option<f64>) -> ReactionField {
        match self {
            ProblemKind::Curved | ProblemKind::BlockAdvection => match sigma {
                Some(s) => ReactionField::Constant(s),
                None => ReactionField::PiecewiseGamma,
            },
            _ => ReactionField::Constant(sigma.unwrap_or(0.0)),
        }
    }

    fn default_kappa(self) -> f64 {
        match self {
            ProblemKind::Poisson => 1.0,
            ProblemKind::Adr => 1e-4,
            ProblemKind::Recirculating => 1e-4,
            ProblemKind::Curved | ProblemKind::BlockAdvection => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum ProblemSource {
    Generated {
        kind: ProblemKind,
        dim: usize,
        n: usize,
        sigma: Option<f64>,
        block_size: usize,
    },
    Loaded(PathBuf),
}

/// The swept parameter: each entry produces one report row, in order.
#[derive(Clone, Debug)]
pub enum Sweep {
    /// One run at the given kappa (generators) or as-is (loaded files).
    Single {
        kappa: Option<f64>,
        dt: Option<f64>,
    },
    Kappa {
        values: Vec<f64>,
        dt: Option<f64>,
    },
    Dt {
        kappa: Option<f64>,
        values: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Lair1,
    Lair2,
    LairBlock,
    Neumann(usize),
    ClassicalPt,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolverOverrides {
    pub distance: Option<u8>,
    pub theta_c: Option<f64>,
    pub theta_r: Option<f64>,
    pub theta_d: Option<f64>,
    /// Interpolation choice for the lAIR/Neumann solvers (the classical-pt
    /// baseline always pairs with classical interpolation).
    pub interpolation: Option<InterpolationChoice>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpolationChoice {
    OnePoint,
    Classical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Csv,
    JsonLines,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub source: ProblemSource,
    pub sweep: Sweep,
    pub solver: SolverKind,
    pub overrides: SolverOverrides,
    pub solve: SolveConfig,
    pub emit_mtx: Option<PathBuf>,
    pub setup_report: bool,
}

/// One experiment row; `wpd` is +inf when the solve did not converge.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub param: f64,
    pub cf: f64,
    pub cc: f64,
    pub wpd: f64,
    pub iters: usize,
    pub converged: bool,
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    param: f64,
    cf: f64,
    cc: f64,
    /// None encodes +inf (JSON has no Infinity literal).
    wpd: Option<f64>,
    iters: usize,
    converged: bool,
}

impl From<&Row> for JsonRow {
    fn from(r: &Row) -> Self {
        JsonRow {
            param: r.param,
            cf: r.cf,
            cc: r.cc,
            wpd: if r.wpd.is_infinite() {
                None
            } else {
                Some(r.wpd)
            },
            iters: r.iters,
            converged: r.converged,
        }
    }
}

impl From<JsonRow> for Row {
    fn from(j: JsonRow) -> Self {
        Row {
            param: j.param,
            cf: j.cf,
            cc: j.cc,
            wpd: j.wpd.unwrap_or(f64::INFINITY),
            iters: j.iters,
            converged: j.converged,
        }
    }
}

fn solver_setup_config(
    solver: SolverKind,
    overrides: &SolverOverrides,
    block: Option<BlockLayout>,
) -> Result<SetupConfig> {
    let distance = match overrides.distance {
        Some(1) => Distance::One,
        Some(2) => Distance::Two,
        Some(d) => {
            return Err(Error::InvalidInput(format!(
                "distance {d} not supported (1 or 2)"
            )))
        }
        None => match solver {
            SolverKind::Lair1 => Distance::One,
            _ => Distance::Two,
        },
    };
    let mut cfg = match solver {
        SolverKind::Lair1 | SolverKind::Lair2 => SetupConfig::lair(distance),
        SolverKind::LairBlock => {
            let layout = block.ok_or_else(|| {
                Error::InvalidInput("lair-block needs a block-structured problem".into())
            })?;
            SetupConfig::lair(distance).with_block(layout)
        }
        SolverKind::Neumann(order) => {
            let mut c = SetupConfig::lair(distance);
            c.restriction = RestrictionKind::Neumann {
                order,
                theta_r: overrides.theta_r,
            };
            c
        }
        SolverKind::ClassicalPt => SetupConfig::classical_pt(),
    };
    if let RestrictionKind::Lair { theta_r, .. } = &mut cfg.restriction {
        *theta_r = overrides.theta_r;
    }
    if let Some(t) = overrides.theta_c {
        cfg.theta_c = t;
    }
    if let Some(t) = overrides.theta_d {
        cfg.theta_d = t;
    }
    if solver == SolverKind::ClassicalPt {
        cfg.interpolation = InterpolationKind::ClassicalModified;
    } else if let Some(choice) = overrides.interpolation {
        cfg.interpolation = match choice {
            InterpolationChoice::OnePoint => InterpolationKind::OnePoint,
            InterpolationChoice::Classical => InterpolationKind::ClassicalModified,
        };
    }
    Ok(cfg)
}

struct BuiltSystem {
    a: SparseMatrix,
    layout: Option<BlockLayout>,
    meta: Option<ProblemMeta>,
}

fn build_system(
    source: &ProblemSource,
    kappa: Option<f64>,
    dt: Option<f64>,
) -> Result<BuiltSystem> {
    match source {
        ProblemSource::Loaded(path) => {
            let a = lair::mmio::read_matrix_market_file(path)?;
            if a.n_rows() != a.n_cols() {
                return Err(Error::InvalidInput(format!(
                    "{} is not square",
                    path.display()
                )));
            }
            Ok(BuiltSystem {
                a,
                layout: None,
                meta: None,
            })
        }
        ProblemSource::Generated {
            kind,
            dim,
            n,
            sigma,
            block_size,
        } => {
            let spec = PdeSpec {
                dim: *dim,
                n: *n,
                kappa: kappa.unwrap_or(kind.default_kappa()),
                velocity: kind.velocity(),
                reaction: kind.reaction(*sigma),
                time_step: dt,
            };
            if *kind == ProblemKind::BlockAdvection {
                let layout = BlockLayout::new(*block_size);
                let (raw, meta) = synthetic_block_advection(&spec, layout)?;
                let (a, _factors) = block_diag_scale(&raw, layout)?;
                Ok(BuiltSystem {
                    a,
                    layout: Some(layout),
                    meta: Some(meta),
                })
            } else {
                let (a, meta) = advection_diffusion_reaction(&spec)?;
                Ok(BuiltSystem {
                    a,
                    layout: None,
                    meta: Some(meta),
                })
            }
        }
    }
}

/// Run the configured sweep; one row per parameter, in input order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let entries: Vec<(Option<f64>, Option<f64>, f64)> = match &cfg.sweep {
        Sweep::Single { kappa, dt } => {
            let effective_kappa = kappa.or(match &cfg.source {
                ProblemSource::Generated { kind, .. } => Some(kind.default_kappa()),
                ProblemSource::Loaded(_) => None,
            });
            let param = dt.or(effective_kappa).unwrap_or(0.0);
            vec![(*kappa, *dt, param)]
        }
        Sweep::Kappa { values, dt } => values.iter().map(|&k| (Some(k), *dt, k)).collect(),
        Sweep::Dt { kappa, values } => values.iter().map(|&d| (*kappa, Some(d), d)).collect(),
    };
    let mut rows = Vec::with_capacity(entries.len());
    for (kappa, dt, param) in entries {
        let built = build_system(&cfg.source, kappa, dt)?;
        if let Some(path) = &cfg.emit_mtx {
            emit_problem(path, &built, &cfg.source, kappa, dt)?;
        }
        let setup_cfg = solver_setup_config(cfg.solver, &cfg.overrides, built.layout)?;
        let h = setup(&built.a, &setup_cfg)?;
        if cfg.setup_report {
            eprint!("{}", h.report.to_table());
        }
        let x0 = random_guess(built.a.n_rows(), cfg.solve.seed);
        let b = vec![0.0; built.a.n_rows()];
        let (_, report) = gmres(&built.a, &b, &x0, &h, &cfg.solve)?;
        let cc = cycle_complexity(&h).cycle_complexity;
        let cf = report.measured_cf;
        let row_wpd = if report.converged && cf < 1.0 && cf > 0.0 {
            wpd(cc, cf)
        } else {
            f64::INFINITY
        };
        rows.push(Row {
            param,
            cf,
            cc,
            wpd: row_wpd,
            iters: report.iterations,
            converged: report.converged,
        });
    }
    Ok(rows)
}

fn emit_problem(
    path: &PathBuf,
    built: &BuiltSystem,
    source: &ProblemSource,
    kappa: Option<f64>,
    dt: Option<f64>,
) -> Result<()> {
    lair::mmio::write_matrix_market_file(path, &built.a)?;
    if let (
        Some(meta),
        ProblemSource::Generated {
            kind,
            dim,
            n,
            sigma,
            block_size,
        },
    ) = (&built.meta, source)
    {
        let sidecar = serde_json::json!({
            "problem": format!("{kind:?}"),
            "dim": dim,
            "n_per_axis": n,
            "ordering": "lexicographic, first axis fastest",
            "h": meta.h,
            "kappa": kappa.unwrap_or(kind.default_kappa()),
            "sigma": sigma,
            "dt": dt,
            "block_size": if *kind == ProblemKind::BlockAdvection { Some(block_size) } else { None },
            "n_rows": built.a.n_rows(),
            "nnz": built.a.nnz(),
        });
        let meta_path = path.with_extension("meta.json");
        std::fs::write(&meta_path, format!("{sidecar:#}\n"))?;
    }
    Ok(())
}

/// Render rows in the requested format. CSV and JSON lines round-trip
/// exactly through `parse_csv` / `parse_json_lines`.
pub fn render(rows: &[Row], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("param,cf,cc,wpd,iters,converged\n");
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.param, r.cf, r.cc, r.wpd, r.iters, r.converged
                ));
            }
            out
        }
        OutputFormat::JsonLines => {
            let mut out = String::new();
            for r in rows {
                out.push_str(&serde_json::to_string(&JsonRow::from(r)).unwrap());
                out.push('\n');
            }
            out
        }
        OutputFormat::Table => {
            let mut out = String::from(
                "      param          CF          CC         WPD   iters  converged\n",
            );
            for r in rows {
                let wpd_cell = if r.wpd.is_infinite() || !r.converged {
                    "DNC".to_string()
                } else {
                    format!("{:.2}", r.wpd)
                };
                out.push_str(&format!(
                    "{:>11.4e} {:>11.4} {:>11.2} {:>11} {:>7} {:>10}\n",
                    r.param, r.cf, r.cc, wpd_cell, r.iters, r.converged
                ));
            }
            out
        }
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != "param,cf,cc,wpd,iters,converged" {
                return Err(Error::Parse {
                    line: 1,
                    message: "unexpected CSV header".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let bad = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        rows.push(Row {
            param: fields[0].parse().map_err(|_| bad("bad param".into()))?,
            cf: fields[1].parse().map_err(|_| bad("bad cf".into()))?,
            cc: fields[2].parse().map_err(|_| bad("bad cc".into()))?,
            wpd: fields[3].parse().map_err(|_| bad("bad wpd".into()))?,
            iters: fields[4].parse().map_err(|_| bad("bad iters".into()))?,
            converged: fields[5].parse().map_err(|_| bad("bad converged".into()))?,
        });
    }
    Ok(rows)
}

pub fn parse_json_lines(text: &str) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let j: JsonRow = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        rows.push(Row::from(j));
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplittingKind {
    /// Classical strength + first-pass coloring at theta_C.
    Classical,
    /// Keep every other x-line fine (preserves F-F structure on grids).
    SemicoarsenX,
}

#[derive(Clone, Debug)]
pub struct FidelityConfig {
    pub source: ProblemSource,
    pub kappa: Option<f64>,
    pub splitting: SplittingKind,
    pub theta_c: f64,
    pub force_dense: bool,
    /// Also report the largest singular value of K^-1 in the projection-lemma
    /// configuration (Z = 0, W = -D_ff^-1 A_fc); informational only, no
    /// threshold is asserted.
    pub report_kinv: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityReport {
    pub n: usize,
    pub n_f: usize,
    /// Fidelity of Z = 0, by definition 1.
    pub zero_reference: f64,
    pub neumann1: f64,
    pub neumann2: f64,
    pub lair1: f64,
    pub lair2: f64,
    /// sigma_max(K^-1) in the projection-lemma configuration, when requested.
    pub k_inv_norm: Option<f64>,
}

impl FidelityReport {
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "n {}  n_f {}\n  Z=0   Neumann1  Neumann2  lAIR1   lAIR2\n{:>6.3} {:>9.3} {:>9.3} {:>7.3} {:>7.3}\n",
            self.n, self.n_f, self.zero_reference, self.neumann1, self.neumann2, self.lair1, self.lair2
        );
        if let Some(s) = self.k_inv_norm {
            out.push_str(&format!("sigma_max(K^-1) {s:.6e}\n"));
        }
        out
    }
}

/// Relative Frobenius error of each restriction variant against the exact
/// ideal operator, sharing one dense factorization.
pub fn fidelity_table(cfg: &FidelityConfig) -> Result<FidelityReport> {
    let built = build_system(&cfg.source, cfg.kappa, None)?;
    let a = built.a;
    if a.n_rows() > DENSE_FIDELITY_CAP && !cfg.force_dense {
        return Err(Error::InvalidInput(format!(
            "problem has {} unknowns; the fidelity table factors A_ff densely \
             (cap {DENSE_FIDELITY_CAP}). Pass --force-dense to override.",
            a.n_rows()
        )));
    }
    let split = match cfg.splitting {
        SplittingKind::Classical => rs_first_pass(&classical_soc(&a, cfg.theta_c)),
        SplittingKind::SemicoarsenX => {
            let n_axis = match &cfg.source {
                ProblemSource::Generated { n, dim, .. } if *dim == 2 => *n,
                _ => {
                    return Err(Error::InvalidInput(
                        "semicoarsened splitting needs a generated 2D problem".into(),
                    ))
                }
            };
            let labels: Vec<Label> = (0..a.n_rows())
                .map(|p| {
                    if (p % n_axis) % 2 == 0 {
                        Label::C
                    } else {
                        Label::F
                    }
                })
                .collect();
            CfSplitting::from_labels(&labels)
        }
    };
    if split.n_f() == 0 || split.n_c() == 0 {
        return Err(Error::InvalidInput("degenerate CF splitting".into()));
    }
    let k_inv_norm = if cfg.report_kinv {
        Some(lemma_k_inv_norm(&a, &split)?)
    } else {
        None
    };
    let fid = FidelitySetup::new(&a, &split)?;
    let zero = SparseMatrix::from_triplets(split.n_c(), split.n_f(), &[])?;
    let z_of = |r: SparseMatrix| extract_z(&r, &split);
    Ok(FidelityReport {
        n: a.n_rows(),
        n_f: split.n_f(),
        zero_reference: fid.fidelity(&zero),
        neumann1: fid.fidelity(&z_of(neumann_restriction(&a, &split, 1)?.r)),
        neumann2: fid.fidelity(&z_of(neumann_restriction(&a, &split, 2)?.r)),
        lair1: fid.fidelity(&z_of(
            lair_restriction(
                &a,
                &split,
                &classical_soc(&a, Distance::One.default_theta()),
                &RestrictionConfig::new(Distance::One),
            )
            .r,
        )),
        lair2: fid.fidelity(&z_of(
            lair_restriction(
                &a,
                &split,
                &classical_soc(&a, Distance::Two.default_theta()),
                &RestrictionConfig::new(Distance::Two),
            )
            .r,
        )),
        k_inv_norm,
    })
}

/// sigma_max(K^-1) = 1 / sigma_min(K) for K = A_cf W + A_cc with
/// W = -D_ff^-1 A_fc, the coarse operator of the projection lemma.
fn lemma_k_inv_norm(a: &SparseMatrix, split: &CfSplitting) -> Result<f64> {
    let blocks = a.extract_cf_blocks(split);
    let dinv: Vec<f64> = blocks
        .ff
        .diagonal()
        .iter()
        .map(|d| {
            if *d == 0.0 {
                Err(Error::Singular("zero F diagonal in lemma K".into()))
            } else {
                Ok(1.0 / d)
            }
        })
        .collect::<Result<_>>()?;
    let w = blocks.fc.scale_rows(&dinv).to_dense().scale(-1.0);
    let k = blocks.cf.to_dense().matmul(&w).add(&blocks.cc.to_dense());
    let singular_values = lair::diagnostics::singular_values(&k);
    let smin = singular_values.into_iter().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        return Err(Error::Singular(
            "lemma coarse operator K is singular".into(),
        ));
    }
    Ok(1.0 / smin)
}
