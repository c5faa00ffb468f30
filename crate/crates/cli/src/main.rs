//! Batch command surface: pencil config ingestion, computation
//! orchestration, table emission for external plotting.

mod output;
mod parse;

use std::f64::consts::PI;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rayon::prelude::*;
use serde_json::json;

use output::{complex_pair, num, render, Format, Hasher, Table};
use qpencil::asympt::{self, DecayOutcome, SectorRay, SolutionKind};
use qpencil::generator::{random_pencil, RandomPencilParams};
use qpencil::pencil::config::{pencil_from_json, pencil_to_json};
use qpencil::spectra;
use qpencil::uniqueness::{check_identities, PencilPair};
use qpencil::{fundamental, FailureClass, IntegrationSettings, Pencil};

#[derive(Parser)]
#[command(
    name = "qpencil",
    about = "Spectral analysis of matrix quadratic differential pencils on [0, pi]",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Pencil configuration (JSON)
    #[arg(long, global = true)]
    pencil: Option<String>,

    /// Second pencil for pair commands
    #[arg(long, global = true)]
    pencil2: Option<String>,

    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<String>,

    /// Output format: csv or json
    #[arg(long, global = true, default_value = "csv")]
    format: Format,

    /// Relative tolerance of the integrator
    #[arg(long, global = true)]
    rtol: Option<f64>,

    /// Absolute tolerance of the integrator
    #[arg(long, global = true)]
    atol: Option<f64>,

    /// Output grid density for trajectories
    #[arg(long, global = true)]
    grid_points: Option<usize>,

    /// Worker threads for rho sweeps
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Seed for the built-in random pencil generator
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Check the admissibility conditions and report violations
    Validate,
    /// C/S/phi/psi/Phi trajectories at the given rho values
    Solve {
        /// Comma-separated complex values, e.g. "1.5,2-0.3i"
        #[arg(long)]
        rho_list: String,
        /// Subset of c,s,phi,psi,weyl
        #[arg(long, default_value = "c,s,phi,psi,weyl")]
        kinds: String,
    },
    /// Weyl matrix over a rho list, both routes plus discrepancy
    Weyl {
        #[arg(long)]
        rho_list: String,
    },
    /// Eigenvalues and multiplicities inside a rectangle, or the bare
    /// argument-principle count over a circle
    Spectrum {
        /// x0,x1,y0,y1
        #[arg(long, conflicts_with = "contour")]
        region: Option<String>,
        /// c_re,c_im,r[,N]: count zeros inside this circle instead
        #[arg(long)]
        contour: Option<String>,
    },
    /// Residue matrices of M at the eigenvalues inside a rectangle
    Residues {
        #[arg(long)]
        region: String,
        #[arg(long, default_value_t = 0.2)]
        radius: f64,
    },
    /// Leading-order prediction remainders and their decay fit along a ray
    Asympt {
        /// c|s|phi|psi|weyl|m|phi-star|psi-star|weyl-star
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        nu: u8,
        /// Evaluation point in (0, pi)
        #[arg(long, default_value_t = PI / 2.0)]
        x: f64,
        /// sign,delta,arg,m1,m2,... (defaults to the central Theta+ ray)
        #[arg(long)]
        ray: Option<String>,
    },
    /// Pair identity report (requires --pencil2)
    Uniq {
        /// rho samples for the pointwise identities
        #[arg(long, default_value = "2.3+0.4i,5.1-0.6i")]
        rho_list: String,
        /// x samples for the pointwise identities
        #[arg(long, default_value = "0.8,1.6,2.4")]
        x_list: String,
    },
    /// Emit a random admissible pencil configuration for --seed
    Gen {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 1.5)]
        q1_norm: f64,
        #[arg(long, default_value_t = 0.4)]
        h1_norm: f64,
    },
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<qpencil::Error> for CliError {
    fn from(e: qpencil::Error) -> Self {
        let code = match e.class() {
            FailureClass::Validation => 2,
            FailureClass::Numerical => 3,
        };
        CliError {
            message: e.to_string(),
            code,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            message: e.to_string(),
            code: 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            // machine-readable error record
            eprintln!("{}", json!({"error": e.message, "exit_code": e.code}));
            ExitCode::from(e.code)
        }
    }
}

fn settings(common: &Common) -> IntegrationSettings {
    let mut s = IntegrationSettings::default();
    if let Some(rtol) = common.rtol {
        s.rtol = rtol;
    }
    if let Some(atol) = common.atol {
        s.atol = atol;
    }
    if let Some(n) = common.grid_points {
        s.grid_points = n.max(2);
    }
    s
}

fn load_pencil(path: &Option<String>, which: &str) -> Result<(Pencil, Vec<u8>), CliError> {
    let path = path
        .as_ref()
        .ok_or_else(|| CliError::usage(format!("missing --{which}")))?;
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let pencil = pencil_from_json(&text)?;
    Ok((pencil, bytes))
}

fn config_hash(cli: &Cli, pencil_bytes: &[u8], pencil2_bytes: &[u8]) -> String {
    let mut h = Hasher::new();
    h.update(
        std::env::args()
            .skip(1)
            .collect::<Vec<_>>()
            .join("\x1f")
            .as_bytes(),
    );
    h.update(pencil_bytes);
    h.update(pencil2_bytes);
    h.update(&cli.common.seed.to_le_bytes());
    h.hex()
}

fn matrix_columns(prefix: &str, m: usize) -> Vec<String> {
    let mut cols = Vec::new();
    for j in 0..m {
        for k in 0..m {
            cols.push(format!("{prefix}_{}{}_re", j + 1, k + 1));
            cols.push(format!("{prefix}_{}{}_im", j + 1, k + 1));
        }
    }
    cols
}

fn push_matrix(row: &mut Vec<serde_json::Value>, a: &qpencil::CMatrix) {
    for j in 0..a.nrows() {
        for k in 0..a.ncols() {
            let [re, im] = complex_pair(a[(j, k)]);
            row.push(re);
            row.push(im);
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    // --jobs bounds every sweep, including the contour evaluations inside
    // the library; rayon would otherwise default to all cores
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.jobs.max(1))
        .build_global();
    let s = settings(&cli.common);
    s.validate()?;

    match &cli.command {
        Command::Gen {
            m,
            q1_norm,
            h1_norm,
        } => {
            let params = RandomPencilParams::default()
                .with_m(*m)
                .with_q1_norm(*q1_norm)
                .with_h1_norm(*h1_norm);
            let pencil = random_pencil(cli.common.seed, &params);
            let text = pencil_to_json(&pencil) + "\n";
            output::emit(&text, cli.common.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Validate => {
            let (pencil, bytes) = load_pencil(&cli.common.pencil, "pencil")?;
            let hash = config_hash(cli, &bytes, &[]);
            let report = pencil.validate();
            let mut table = Table::new(vec!["violation"]);
            for v in &report.violations {
                table.push(vec![json!(v)]);
            }
            let text = render(&table, "validate", &hash, cli.common.format);
            output::emit(&text, cli.common.out.as_deref())?;
            Ok(if report.is_valid() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }

        Command::Solve { rho_list, kinds } => {
            let (pencil, bytes) = load_pencil(&cli.common.pencil, "pencil")?;
            let hash = config_hash(cli, &bytes, &[]);
            let rhos = parse::parse_complex_list(rho_list).map_err(CliError::usage)?;
            let kinds: Vec<String> = kinds
                .split(',')
                .map(|k| k.trim().to_ascii_lowercase())
                .filter(|k| !k.is_empty())
                .collect();
            for k in &kinds {
                if !matches!(k.as_str(), "c" | "s" | "phi" | "psi" | "weyl") {
                    return Err(CliError::usage(format!("unknown solve kind '{k}'")));
                }
            }
            let m = pencil.dim();
            let mut cols = vec![
                "kind".to_string(),
                "rho_re".into(),
                "rho_im".into(),
                "x".into(),
            ];
            cols.extend(matrix_columns("y", m));
            cols.extend(matrix_columns("dy", m));
            let mut table = Table::new(cols);

            let results: Result<Vec<_>, qpencil::Error> = rhos
                .par_iter()
                .map(|&rho| {
                    let mut rows = Vec::new();
                    for kind in &kinds {
                        let traj = match kind.as_str() {
                            "c" => fundamental::fundamental_cs(&pencil, rho, &s)?.0,
                            "s" => fundamental::fundamental_cs(&pencil, rho, &s)?.1,
                            "phi" => fundamental::solution_phi(&pencil, rho, &s)?,
                            "psi" => fundamental::solution_psi(&pencil, rho, &s)?,
                            _ => fundamental::weyl_solution(&pencil, rho, &s)?,
                        };
                        for (i, &x) in traj.grid().iter().enumerate() {
                            let mut row = vec![json!(kind), num(rho.re), num(rho.im), num(x)];
                            push_matrix(&mut row, &traj.values()[i]);
                            push_matrix(&mut row, &traj.derivs()[i]);
                            rows.push(row);
                        }
                    }
                    Ok(rows)
                })
                .collect();
            for rows in results? {
                for row in rows {
                    table.push(row);
                }
            }
            let text = render(&table, "solve", &hash, cli.common.format);
            output::emit(&text, cli.common.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Weyl { rho_list } => {
            let (pencil, bytes) = load_pencil(&cli.common.pencil, "pencil")?;
            let hash = config_hash(cli, &bytes, &[]);
            let rhos = parse::parse_complex_list(rho_list).map_err(CliError::usage)?;
            let m = pencil.dim();
            let mut cols = vec!["rho_re".to_string(), "rho_im".into()];
            cols.extend(matrix_columns("m_psi", m));
            cols.extend(matrix_columns("m_phi", m));
            cols.push("discrepancy".into());
            cols.push("cond_u_psi".into());
            cols.push("cond_v_phi".into());
            let mut table = Table::new(cols);

            let evals: Result<Vec<_>, qpencil::Error> = rhos
                .par_iter()
                .map(|&rho| fundamental::weyl_matrix(&pencil, rho, &s))
                .collect();
            for w in evals? {
                let mut row = vec![num(w.rho.re), num(w.rho.im)];
                push_matrix(&mut row, &w.m_via_psi);
                push_matrix(&mut row, &w.m_via_phi);
                row.push(num(w.discrepancy));
                row.push(num(w.cond_u_psi));
                row.push(num(w.cond_v_phi));
                table.push(row);
            }
            let text = render(&table, "weyl", &hash, cli.common.format);
            output::emit(&text, cli.common.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Spectrum { region, contour } => {
            let (pencil, bytes) = load_pencil(&cli.common.pencil, "pencil")?;
            let hash = config_hash(cli, &bytes, &[]);
            if let Some(circle) = contour {
                let (center, radius, nodes) =
                    parse::parse_circle(circle).map_err(CliError::usage)?;
                let mut c = spectra::Contour::circle(center, radius)?;
                if let Some(n) = nodes {
                    c = c.with_nodes(n);
                }
                let count = spectra::count_zeros(&pencil, &c, &s)?;
                let mut table = Table::new(vec!["center_re", "center_im", "radius", "count"]);
                table.push(vec![
                    num(center.re),
                    num(center.im),
                    num(radius),
                    json!(count),
                ]);
                let text = render(&table, "spectrum", &hash, cli.common.format);
                output::emit(&text, cli.common.out.as_deref())?;
                return Ok(ExitCode::SUCCESS);
            }
            let region = region
                .as_ref()
                .ok_or_else(|| CliError::usage("spectrum needs --region or --contour"))?;
            let region = parse::parse_region(region).map_err(CliError::usage)?;
            let records = spectra::locate_eigenvalues(&pencil, region, &s)?;
            let mut table = Table::new(vec!["rho_re", "rho_im", "multiplicity", "delta_residual"]);
            for r in &records {
                table.push(vec![
                    num(r.rho.re),
                    num(r.rho.im),
                    json!(r.multiplicity),
                    num(r.delta_residual),
                ]);
            }
            let text = render(&table, "spectrum", &hash, cli.common.format);
            output::emit(&text, cli.common.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Residues { region, radius } => {
            let (pencil, bytes) = load_pencil(&cli.common.pencil, "pencil")?;
            let hash = config_hash(cli, &bytes, &[]);
            let region = parse::parse_region(region).map_err(CliError::usage)?;
            let records = spectra::locate_eigenvalues(&pencil, region, &s)?;
            let m = pencil.dim();
            let mut cols = vec![
                "rho_re".to_string(),
                "rho_im".into(),
                "multiplicity".into(),
                "nu".into(),
            ];
            cols.extend(matrix_columns("res", m));
            let mut table = Table::new(cols);
            for r in &records {
                let residues =
                    spectra::residue_matrices(&pencil, r.rho, r.multiplicity, *radius, &s)?;
                for (nu, res) in residues.iter().enumerate() {
                    let mut row = vec![
                        num(r.rho.re),
                        num(r.rho.im),
                        json!(r.multiplicity),
                        json!(nu + 1),
                    ];
                    push_matrix(&mut row, res);
                    table.push(row);
                }
            }
            let text = render(&table, "residues", &hash, cli.common.format);
            output::emit(&text, cli.common.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Asympt { kind, nu, x, ray } => {
            let (pencil, bytes) = load_pencil(&cli.common.pencil, "pencil")?;
            let hash = config_hash(cli, &bytes, &[]);
            let kind = match kind.to_ascii_lowercase().as_str() {
                "c" => SolutionKind::C,
                "s" => SolutionKind::S,
                "phi" => SolutionKind::Phi,
                "psi" => SolutionKind::Psi,
                "weyl" => SolutionKind::Weyl,
                "m" => SolutionKind::WeylM,
                "phi-star" => SolutionKind::PhiStar,
                "psi-star" => SolutionKind::PsiStar,
                "weyl-star" => SolutionKind::WeylStar,
                other => return Err(CliError::usage(format!("unknown kind '{other}'"))),
            };
            let ray = match ray {
                Some(text) => parse::parse_ray(text).map_err(CliError::usage)?,
                None => SectorRay::default_ray(qpencil::asympt::SectorSign::Plus),
            };
            let outcome = asympt::residual_decay(kind, &pencil, *x, *nu, &ray, &s)?;
            let mut table = Table::new(vec![
                "modulus",
                "remainder",
                "slope",
                "intercept",
                "fit_residual",
                "exact_to_precision",
            ]);
            match &outcome {
                DecayOutcome::Fit(fit) => {
                    for &(r, v) in &fit.samples {
                        table.push(vec![
                            num(r),
                            num(v),
                            num(fit.slope),
                            num(fit.intercept),
                            num(fit.fit_residual),
                            json!(false),
                        ]);
                    }
                }
                DecayOutcome::ExactToPrecision { max_remainder } => {
                    table.push(vec![
                        num(f64::NAN),
                        num(*max_remainder),
                        json!(null),
                        json!(null),
                        json!(null),
                        json!(true),
                    ]);
                }
            }
            let text = render(&table, "asympt", &hash, cli.common.format);
            output::emit(&text, cli.common.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Uniq { rho_list, x_list } => {
            let (pencil, bytes) = load_pencil(&cli.common.pencil, "pencil")?;
            let (pencil2, bytes2) = load_pencil(&cli.common.pencil2, "pencil2")?;
            let hash = config_hash(cli, &bytes, &bytes2);
            let rhos = parse::parse_complex_list(rho_list).map_err(CliError::usage)?;
            let xs = parse::parse_f64_list(x_list).map_err(CliError::usage)?;
            let pair = PencilPair::new(pencil, pencil2, &s)?;
            let report = check_identities(&pair, &rhos, &xs, &s)?;
            let mut table = Table::new(vec!["check", "value"]);
            for (name, value) in report.rows() {
                table.push(vec![json!(name), num(value)]);
            }
            table.push(vec![
                json!("distinguishable"),
                json!(report.distinguishable),
            ]);
            let text = render(&table, "uniq", &hash, cli.common.format);
            output::emit(&text, cli.common.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
