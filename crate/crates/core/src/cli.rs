//! Command-line front end.
//!
//! Exit codes: 0 when every spectrum is clean and every check passes, 1 when
//! a check fails or a spectrum is ambiguous, 2 on configuration or I/O errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{build_basis, minimum_resolution, multi_index::binomial};
use crate::geometry::{build_grid, ManifoldSpec};
use crate::invariants::{analyze_degrees, InvariantReport};
use crate::operators::{assemble, kernel_dim, QuadForm, TolerancePolicy};
use crate::oracles::{
    cross_certify, flat_killing_basis, residuals, sphere_ck_basis, torus_parallel_basis, torus_wedge_basis, Provenance,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Residual ceilings used by `verify`.
const FLAT_RESIDUAL_TOL: f64 = 1e-12;
const SPHERE_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "tachibana", version, about = "Betti, Tachibana, Killing and planarity numbers of model manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the numbers and all checks; write one report per degree.
    Invariants(JobArgs),
    /// Dump the generalized spectrum of one quadratic form as CSV.
    Spectrum {
        #[command(flatten)]
        job: JobArgs,
        /// hodge, tachibana, bochner, killing_sum, planarity_sum, exterior, codifferential
        #[arg(long, default_value = "tachibana")]
        which: String,
    },
    /// Run the analytic oracles and residual checks for a manifold.
    Verify(JobArgs),
    /// Summarize reports against the expected closed-form values.
    Table {
        /// Report files written by `invariants`.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct JobArgs {
    /// Manifold specification (JSON).
    #[arg(long)]
    manifold: PathBuf,
    /// Form degree; repeatable. Defaults to every degree 1..n-1.
    #[arg(long = "r")]
    degrees: Vec<usize>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    abs_tol: f64,
    #[arg(long, default_value_t = 1e3)]
    gap_min: f64,
    #[arg(long, default_value_t = 1e-7)]
    classify_tol: f64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub report_path: Option<PathBuf>,
    pub spectrum_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    pub manifold: ManifoldSpec,
    pub degrees: Vec<usize>,
    pub cutoff: usize,
    pub resolution: usize,
    pub tol_policy: TolerancePolicy,
    pub outputs: Outputs,
}

/// Default cutoff for a manifold: 2 on small tori, 1 on tori of dimension
/// four and up, 8 on the round sphere, 10 on a deformed sphere.
pub fn default_cutoff(spec: &ManifoldSpec) -> usize {
    match spec {
        ManifoldSpec::FlatTorus { dims, .. } if *dims >= 4 => 1,
        ManifoldSpec::FlatTorus { .. } => 2,
        ManifoldSpec::ConformalSphere { .. } if spec.is_deformed() => 10,
        ManifoldSpec::ConformalSphere { .. } => 8,
    }
}

pub fn default_resolution(spec: &ManifoldSpec, cutoff: usize) -> usize {
    let min = minimum_resolution(spec, cutoff);
    match spec {
        ManifoldSpec::FlatTorus { dims, .. } if *dims <= 2 => min.max(8),
        ManifoldSpec::FlatTorus { .. } => min,
        ManifoldSpec::ConformalSphere { .. } if spec.is_deformed() => (2 * cutoff + 20).max(min),
        ManifoldSpec::ConformalSphere { .. } => (3 * cutoff).max(min),
    }
}

pub fn load_manifold(path: &Path) -> Result<ManifoldSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read manifold file {}: {e}", path.display())))?;
    let spec: ManifoldSpec = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    spec.validate()?;
    Ok(spec)
}

impl JobConfig {
    pub fn new(manifold: ManifoldSpec, degrees: Vec<usize>, cutoff: Option<usize>, resolution: Option<usize>) -> Result<Self> {
        let n = manifold.dim();
        let degrees = if degrees.is_empty() { (1..n).collect() } else { degrees };
        let cutoff = cutoff.unwrap_or_else(|| default_cutoff(&manifold));
        let resolution = resolution.unwrap_or_else(|| default_resolution(&manifold, cutoff));
        let cfg = Self {
            manifold,
            degrees,
            cutoff,
            resolution,
            tol_policy: TolerancePolicy::default(),
            outputs: Outputs {
                report_path: None,
                spectrum_path: None,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.manifold.validate()?;
        let n = self.manifold.dim();
        if let Some(&r) = self.degrees.iter().find(|&&r| r < 1 || r >= n) {
            return Err(Error::Degree {
                degree: r,
                n,
                reason: "degrees must lie in 1..=n-1".into(),
            });
        }
        if self.cutoff < 1 {
            return Err(Error::Cutoff(self.cutoff));
        }
        let min = minimum_resolution(&self.manifold, self.cutoff);
        if self.resolution < min {
            return Err(Error::Resolution {
                given: self.resolution,
                minimum: min,
                reason: format!("cutoff {}", self.cutoff),
            });
        }
        let p = &self.tol_policy;
        if !(p.abs_tol > 0.0 && p.gap_min > 1.0 && p.classify_tol > 0.0) {
            return Err(Error::Config(format!("invalid tolerances {p:?}")));
        }
        Ok(())
    }

    fn from_args(a: &JobArgs) -> Result<Self> {
        let manifold = load_manifold(&a.manifold)?;
        let mut cfg = Self::new(manifold, a.degrees.clone(), a.cutoff, a.resolution)?;
        cfg.tol_policy = TolerancePolicy {
            abs_tol: a.abs_tol,
            gap_min: a.gap_min,
            classify_tol: a.classify_tol,
        };
        cfg.outputs.report_path = a.out.clone();
        cfg.outputs.spectrum_path = a.out.clone();
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::Json(_)
        | Error::Config(_)
        | Error::InvalidManifold(_)
        | Error::Resolution { .. }
        | Error::Degree { .. }
        | Error::Cutoff(_)
        | Error::CutoffMismatch(..)
        | Error::BasisMismatch(_) => EXIT_CONFIG,
        _ => EXIT_CHECK_FAILED,
    }
}

/// `<stem>_r<r>.<ext>` next to `path`.
pub fn degree_path(path: &Path, r: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_r{r}.{}", ext.to_string_lossy()),
        None => format!("{stem}_r{r}"),
    };
    path.with_file_name(name)
}

/// Runs every degree of the job; returns the reports without writing them.
pub fn cmd_invariants(cfg: &JobConfig) -> Result<Vec<InvariantReport>> {
    cfg.validate()?;
    let grid = build_grid(&cfg.manifold, cfg.resolution)?;
    Ok(analyze_degrees(&grid, &cfg.degrees, cfg.cutoff, &cfg.tol_policy)?
        .into_iter()
        .map(|run| run.report)
        .collect())
}

/// CSV of the full generalized spectrum of `which` at the first degree.
pub fn cmd_spectrum(cfg: &JobConfig, which: &str) -> Result<String> {
    cfg.validate()?;
    let which = QuadForm::parse(which).filter(|w| *w != QuadForm::Mass).ok_or_else(|| {
        Error::Config(format!(
            "unknown spectrum selector '{which}' (expected hodge, tachibana, bochner, killing_sum, planarity_sum, exterior or codifferential)"
        ))
    })?;
    let r = cfg.degrees[0];
    let grid = build_grid(&cfg.manifold, cfg.resolution)?;
    let basis = build_basis(&cfg.manifold, &grid, r, cfg.cutoff)?;
    let qf = assemble(&cfg.manifold, &grid, &basis)?;
    let spec = kernel_dim(&qf.matrix(which), &qf.mass, &cfg.tol_policy)?;
    let mut csv = String::from("index,eigenvalue\n");
    for (i, l) in spec.eigenvalues.iter().enumerate() {
        let _ = writeln!(csv, "{i},{l:.16e}");
    }
    Ok(csv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub check: String,
    pub value: String,
    pub pass: Option<bool>,
}

fn row(check: impl Into<String>, value: impl Into<String>, pass: Option<bool>) -> VerifyRow {
    VerifyRow {
        check: check.into(),
        value: value.into(),
        pass,
    }
}

/// Oracle residuals and cross-certification rows. Rows with `pass = None`
/// are informational.
pub fn cmd_verify(cfg: &JobConfig) -> Result<Vec<VerifyRow>> {
    cfg.validate()?;
    let spec = &cfg.manifold;
    let grid = build_grid(spec, cfg.resolution)?;
    let n = spec.dim();
    let mut rows = Vec::new();
    for &r in &cfg.degrees {
        let basis = build_basis(spec, &grid, r, cfg.cutoff)?;
        let qf = assemble(spec, &grid, &basis)?;
        let pol = &cfg.tol_policy;
        rows.push(row(
            format!("r={r} Q3 min eigenvalue / ||QB||"),
            format!("{:.3e}", qf.diagnostics.q3_min_eig / qf.diagnostics.qb_norm.max(f64::MIN_POSITIVE)),
            Some(true),
        ));
        match spec {
            ManifoldSpec::FlatTorus { .. } => {
                for f in torus_parallel_basis(n, r)? {
                    let res = residuals(&f, &grid)?;
                    let worst = res.ck.max(res.killing).max(res.closed_ck);
                    rows.push(row(format!("r={r} parallel {} residuals", f.description), format!("{worst:.3e}"), Some(worst < FLAT_RESIDUAL_TOL)));
                }
                for f in flat_killing_basis(n, r)? {
                    let res = residuals(&f, &grid)?;
                    rows.push(row(
                        format!("r={r} flat Killing {} residual", f.description),
                        format!("{:.3e}", res.killing),
                        Some(res.killing < FLAT_RESIDUAL_TOL),
                    ));
                }
                let par = cross_certify(&torus_parallel_basis(n, r)?, &qf, &basis, QuadForm::Bochner, pol)?;
                rows.push(row(
                    format!("r={r} parallel span vs c_r"),
                    format!("{} vs {}", par.span_dimension, par.kernel_dim),
                    Some(par.span_matches()),
                ));
                let fk = flat_killing_basis(n, r)?;
                let cert = cross_certify(&fk, &qf, &basis, QuadForm::KillingSum, pol)?;
                let expected_rejections = binomial(n, r + 1);
                rows.push(row(
                    format!("r={r} non-periodic Killing forms excluded"),
                    format!("{} of {}", cert.rejected(), expected_rejections),
                    Some(cert.rejected() == expected_rejections),
                ));
                rows.push(row(
                    format!("r={r} periodic Killing span vs k_r"),
                    format!("{} vs {}", cert.span_dimension, cert.kernel_dim),
                    Some(cert.span_matches()),
                ));
                let wedge = cross_certify(&torus_wedge_basis(n, r)?, &qf, &basis, QuadForm::Tachibana, pol)?;
                rows.push(row(
                    format!("r={r} wedge span vs t_r"),
                    format!("{} vs {}", wedge.span_dimension, wedge.kernel_dim),
                    Some(wedge.span_matches()),
                ));
            }
            ManifoldSpec::ConformalSphere { .. } => {
                let family = sphere_ck_basis();
                for f in &family {
                    let res = residuals(f, &grid)?;
                    rows.push(row(format!("{} conformal Killing residual", f.description), format!("{:.3e}", res.ck), Some(res.ck < SPHERE_RESIDUAL_TOL)));
                    let (label, value) = match f.provenance {
                        Provenance::SphereRotation => ("Killing", res.killing),
                        _ => ("closed conformal Killing", res.closed_ck),
                    };
                    // On a round sphere every member solves its own equation; a
                    // deformation can break all but the symmetric axis.
                    let pass = (!spec.is_deformed()).then_some(value < SPHERE_RESIDUAL_TOL);
                    rows.push(row(format!("{} {label} residual", f.description), format!("{value:.3e}"), pass));
                }
                for (which, name) in [
                    (QuadForm::Tachibana, "t_1"),
                    (QuadForm::KillingSum, "k_1"),
                    (QuadForm::PlanaritySum, "p_1"),
                ] {
                    let cert = cross_certify(&family, &qf, &basis, which, pol)?;
                    rows.push(row(
                        format!("analytic span vs {name}"),
                        format!("{} vs {}", cert.span_dimension, cert.kernel_dim),
                        Some(cert.span_matches()),
                    ));
                }
            }
        }
    }
    Ok(rows)
}

pub fn render_verify(rows: &[VerifyRow]) -> String {
    let w = rows.iter().map(|r| r.check.chars().count()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<w$}  {:>16}  {}\n", "check", "value", "status");
    for r in rows {
        let status = match r.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "info",
        };
        let pad = w - r.check.chars().count();
        let _ = writeln!(out, "{}{}  {:>16}  {status}", r.check, " ".repeat(pad), r.value);
    }
    out
}

/// Closed-form `(b, t, k, p, c)` where known: flat tori and the round sphere.
pub fn expected_numbers(spec: &ManifoldSpec, r: usize) -> Option<[usize; 5]> {
    match spec {
        ManifoldSpec::FlatTorus { dims, .. } => {
            let v = binomial(*dims, r);
            Some([v; 5])
        }
        ManifoldSpec::ConformalSphere { .. } if !spec.is_deformed() && r == 1 => Some([0, 6, 3, 3, 0]),
        ManifoldSpec::ConformalSphere { .. } => None,
    }
}

fn manifold_label(spec: &ManifoldSpec) -> String {
    match spec {
        ManifoldSpec::FlatTorus { dims, .. } => format!("T^{dims}"),
        ManifoldSpec::ConformalSphere { conformal_coeffs } if spec.is_deformed() => {
            let terms: Vec<String> = conformal_coeffs
                .iter()
                .map(|c| format!("{}Y{},{}", c.amp, c.l, c.m))
                .collect();
            format!("S^2[f={}]", terms.join("+"))
        }
        ManifoldSpec::ConformalSphere { .. } => "S^2".to_string(),
    }
}

/// Aligned comparison table; the flag is true when every cell is certified,
/// every check passes and every known expectation matches.
pub fn cmd_table(reports: &[InvariantReport]) -> (String, bool) {
    let mut ok = true;
    let mut lines = vec![[
        "manifold".to_string(),
        "r".into(),
        "b".into(),
        "t".into(),
        "k".into(),
        "p".into(),
        "c".into(),
        "expected".into(),
        "checks".into(),
    ]];
    for rep in reports {
        let nums = &rep.numbers;
        let cell = |x: &crate::invariants::Number| {
            if x.spectrum.is_clean() {
                x.value.to_string()
            } else {
                "?".to_string()
            }
        };
        let got = [&nums.b_r, &nums.t_r, &nums.k_r, &nums.p_r, &nums.c_r];
        let expected = expected_numbers(&rep.manifold, rep.r);
        let exp_cell = match expected {
            Some(e) => {
                let matches = got.iter().zip(e).all(|(g, v)| g.spectrum.is_clean() && g.value == v);
                ok &= matches;
                format!("{}/{}/{}/{}/{} {}", e[0], e[1], e[2], e[3], e[4], if matches { "ok" } else { "MISMATCH" })
            }
            None => "-".to_string(),
        };
        let failed = rep.failed_checks();
        ok &= failed.is_empty();
        lines.push([
            manifold_label(&rep.manifold),
            rep.r.to_string(),
            cell(got[0]),
            cell(got[1]),
            cell(got[2]),
            cell(got[3]),
            cell(got[4]),
            exp_cell,
            if failed.is_empty() { "pass".to_string() } else { failed.join(",") },
        ]);
    }
    let mut widths = [0usize; 9];
    for l in &lines {
        for (w, c) in widths.iter_mut().zip(l) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    (out, ok)
}

fn write_or_print(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_command(cmd: Command, stdout: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Invariants(args) => {
            let cfg = JobConfig::from_args(&args)?;
            let reports = cmd_invariants(&cfg)?;
            let mut code = EXIT_OK;
            let mut docs = Vec::new();
            for rep in &reports {
                let failed = rep.failed_checks();
                if !failed.is_empty() {
                    eprintln!("r={}: failed checks: {}", rep.r, failed.join(", "));
                    code = EXIT_CHECK_FAILED;
                }
                docs.push((rep.r, rep.to_json()?));
            }
            for (r, doc) in &docs {
                let path = cfg.outputs.report_path.as_deref().map(|p| {
                    if docs.len() == 1 {
                        p.to_path_buf()
                    } else {
                        degree_path(p, *r)
                    }
                });
                write_or_print(path.as_deref(), &format!("{doc}\n"), stdout)?;
            }
            Ok(code)
        }
        Command::Spectrum { job, which } => {
            let cfg = JobConfig::from_args(&job)?;
            let csv = cmd_spectrum(&cfg, &which)?;
            write_or_print(cfg.outputs.spectrum_path.as_deref(), &csv, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify(args) => {
            let cfg = JobConfig::from_args(&args)?;
            let rows = cmd_verify(&cfg)?;
            let text = render_verify(&rows);
            write_or_print(cfg.outputs.report_path.as_deref(), &text, stdout)?;
            Ok(if rows.iter().all(|r| r.pass != Some(false)) {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
        Command::Table { reports } => {
            let mut loaded = Vec::new();
            for p in &reports {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read report {}: {e}", p.display())))?;
                loaded.push(
                    InvariantReport::from_json(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
                );
            }
            let (text, ok) = cmd_table(&loaded);
            stdout.write_all(text.as_bytes())?;
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_command(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock())
}
