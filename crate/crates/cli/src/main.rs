mod input;
mod suite;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use l2torsion::abelian::{abelian_fk_det_operator, Symbol};
use l2torsion::chain::{self, Convention, HodgeOptions, ZetaGrid};
use l2torsion::error::{Error, Result};
use l2torsion::fk::{self, Method, Verdict};
use l2torsion::torsion::{self, elementary_subdivide};
use serde::Serialize;
use serde_json::{json, Value};

use input::{DetInput, Target};

const FORMAT_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "l2torsion", version, about = "Fuglede-Kadison determinants and L² torsion of finite complexes")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Run the built-in fixture suite.
    #[arg(long)]
    fixtures: bool,
    /// Determinant route: spectral, path or polar.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Points per axis for the abelian backend.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Spectral values below this (relative to the largest) count as kernel.
    #[arg(long, global = true, allow_hyphen_values = true)]
    kernel_tol: Option<f64>,
    /// chain (homology, the default) or cochain (cohomology)
    #[arg(long, global = true)]
    convention: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// FK determinant: `det DOC`, `det MODULE OPERATOR` or `det SYMBOL`.
    Det {
        #[arg(required = true, num_args = 1..=2)]
        inputs: Vec<String>,
    },
    /// L² Betti numbers.
    Betti { complex: String, representation: Option<String> },
    /// Full torsion report.
    Torsion { complex: String, representation: Option<String> },
    /// Torsion of K against an elementary subdivision K'.
    Invariance { complex: String, representation: String, subdivision: Option<String> },
    /// Heat-kernel zeta functions of the Laplacians.
    Zeta { complex: String, representation: Option<String> },
    /// Determinant-class verdict per degree.
    Classcheck { complex: String, representation: Option<String> },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Det { .. } => "det",
            Command::Betti { .. } => "betti",
            Command::Torsion { .. } => "torsion",
            Command::Invariance { .. } => "invariance",
            Command::Zeta { .. } => "zeta",
            Command::Classcheck { .. } => "classcheck",
        }
    }
}

struct Options {
    method: Option<Method>,
    grid: Option<usize>,
    kernel_tol: Option<f64>,
    convention: Option<Convention>,
}

impl Options {
    fn from_cli(cli: &Cli) -> Result<Self> {
        if let Some(t) = cli.kernel_tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Validation { location: "--kernel-tol".into(), detail: "must be positive".into() });
            }
        }
        if cli.grid == Some(0) {
            return Err(Error::Validation { location: "--grid".into(), detail: "must be positive".into() });
        }
        Ok(Self {
            method: cli.method.as_deref().map(str::parse).transpose()?,
            grid: cli.grid,
            kernel_tol: cli.kernel_tol,
            convention: cli.convention.as_deref().map(str::parse).transpose()?,
        })
    }

    fn hodge(&self) -> HodgeOptions {
        let mut h = HodgeOptions::default();
        if let Some(t) = self.kernel_tol {
            h.kernel_tol = t;
        }
        h
    }
}

/// A command's result: the machine-readable body, a text rendering, and
/// whether it amounts to a refusal (a failed verdict reported as data).
struct Outcome {
    result: Value,
    text: String,
    refused: bool,
}

impl Outcome {
    fn ok(result: Value, text: String) -> Self {
        Self { result, text, refused: false }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" ")
}

fn det(inputs: &[String], o: &Options) -> Result<Outcome> {
    match input::det_input(inputs)? {
        DetInput::Operator { module, operator, method } => {
            let method = match (o.method, method) {
                (Some(m), _) => m,
                (None, Some(m)) => m.parse()?,
                (None, None) => Method::Spectral,
            };
            let gram = module.reference_gram();
            let r = match (method, o.kernel_tol) {
                (Method::Spectral, Some(tol)) => {
                    let ata = operator.adjoint_wrt(gram)?.compose(&operator);
                    let d = fk::fk_det_spectral_with(&module, &ata, gram, tol)?;
                    fk::DeterminantResult::from_log(0.5 * d.log_value, Method::Spectral, d.convergence)
                }
                _ => fk::fk_det_by(&module, &operator, gram, method)?,
            };
            let text = format!(
                "Det = {:.15}\nlog Det = {:.15}\nmethod: {:?}\nconvergence: {:?} ({})",
                r.value, r.log_value, r.method, r.convergence.verdict, r.convergence.detail
            );
            Ok(Outcome::ok(to_value(&r), text))
        }
        DetInput::Symbol(f) => {
            let grid = input::grid(f.rank(), o.grid)?;
            let r = abelian_fk_det_operator(&f, grid)?;
            let text = format!(
                "Det = {:.15}\nlog Det = {:.15}\ngrid: {} points per axis\nconvergence: {:?} ({})",
                r.value, r.log_value, grid.resolution, r.convergence.verdict, r.convergence.detail
            );
            Ok(Outcome::ok(json!({"determinant": to_value(&r), "grid": to_value(&grid)}), text))
        }
    }
}

fn betti(complex: &str, rep: Option<&str>, o: &Options) -> Result<Outcome> {
    let b = match input::target(complex, rep, o.convention)? {
        Target::Cells { complex, rho, .. } => {
            chain::hodge_with(&torsion::assemble_coefficients(&complex, &rho)?, &o.hodge())?.betti_numbers()
        }
        Target::Hilbertian(c) => chain::hodge_with(&c, &o.hodge())?.betti_numbers(),
        Target::Abelian(c) => c.betti_numbers(input::grid(c.rank(), o.grid)?)?,
    };
    Ok(Outcome::ok(json!({ "betti": b }), format!("b = {}", fmt_list(&b))))
}

fn torsion_cmd(complex: &str, rep: Option<&str>, o: &Options) -> Result<Outcome> {
    match input::target(complex, rep, o.convention)? {
        Target::Cells { complex, rho, .. } => {
            let r = torsion::torsion(&complex, &rho)?;
            let text = format!(
                "torsion coordinate = {:.15}\nlog = {:.15}\nexact-sequence route = {:.15} (relative discrepancy {:.3e})\n\
                 euler characteristic = {}\nbetti = {}\nconvention: {:?}\nunimodular: {}",
                r.coordinate,
                r.log_coordinate,
                r.coordinate_exact_route,
                r.route_discrepancy,
                r.euler_characteristic,
                fmt_list(&r.betti),
                r.convention,
                r.unimodularity.pass
            );
            Ok(Outcome::ok(to_value(&r), text))
        }
        Target::Hilbertian(c) => {
            let h = chain::hodge_with(&c, &o.hodge())?;
            let lap = chain::phi_from_hodge(&c, &h);
            let exact = chain::phi_via_exact_sequences(&c)?;
            let discrepancy = (lap.coordinate - exact.coordinate).abs() / lap.coordinate;
            let betti = h.betti_numbers();
            let text = format!(
                "torsion coordinate = {:.15}\nexact-sequence route = {:.15} (relative discrepancy {:.3e})\n\
                 euler characteristic = {}\nbetti = {}\nconvention: {:?}",
                lap.coordinate,
                exact.coordinate,
                discrepancy,
                c.euler_characteristic(),
                fmt_list(&betti),
                c.convention()
            );
            let result = json!({
                "coordinate": lap.coordinate,
                "log_coordinate": lap.coordinate.ln(),
                "coordinate_exact_route": exact.coordinate,
                "route_discrepancy": discrepancy,
                "euler_characteristic": c.euler_characteristic(),
                "betti": betti,
                "convention": c.convention(),
                "laplacian_route": to_value(&lap),
                "exact_route": to_value(&exact),
            });
            Ok(Outcome::ok(result, text))
        }
        Target::Abelian(c) => {
            let r = c.torsion(input::grid(c.rank(), o.grid)?)?;
            let text = format!(
                "torsion coordinate = {:.15}\npointwise route = {:.15} (relative discrepancy {:.3e})\n\
                 euler characteristic = {}\nbetti = {}\ngrid: {} points per axis",
                r.coordinate,
                r.coordinate_pointwise,
                r.route_discrepancy,
                r.euler_characteristic,
                fmt_list(&r.betti),
                r.grid.resolution
            );
            Ok(Outcome::ok(to_value(&r), text))
        }
    }
}

fn invariance(complex: &str, rep: &str, subdivision: Option<&str>, o: &Options) -> Result<Outcome> {
    let Target::Cells { complex: k, rho, name } = input::target(complex, Some(rep), o.convention)? else {
        unreachable!("a representation was given")
    };
    let data = input::subdivision(subdivision, &k, name.as_deref())?;
    let (k2, psi) = elementary_subdivide(&k, &data)?;
    let r = torsion::invariance_check(&k, &k2, &psi, &rho)?;
    let text = format!(
        "torsion of K = {:.15}\ntorsion of K' = {:.15}\nhomology factor = {:.15}\npushed forward = {:.15}\n\
         relative discrepancy = {:.3e}\ncells of K' = {:?}",
        r.source, r.target, r.homology_factor, r.pushed, r.discrepancy, k2.cells
    );
    Ok(Outcome::ok(json!({"comparison": to_value(&r), "subdivided_cells": k2.cells}), text))
}

fn zeta(complex: &str, rep: Option<&str>, o: &Options) -> Result<Outcome> {
    let c = match input::target(complex, rep, o.convention)? {
        Target::Cells { complex, rho, .. } => torsion::assemble_coefficients(&complex, &rho)?,
        Target::Hilbertian(c) => c,
        Target::Abelian(c) => {
            c.zeta()?;
            unreachable!("the abelian backend has no zeta functions")
        }
    };
    let r = chain::zeta_suite(&c, &ZetaGrid::default())?;
    let mut text = format!(
        "zeta'(0,0) = {:.15}\nexp(zeta'(0,0)/2) = {:.15}\nlaplacian product = {:.15}\nrelative discrepancy = {:.3e}\n\
         largest Mellin error = {:.3e}",
        r.zeta_prime, r.factor, r.laplacian_product, r.relative_discrepancy, r.mellin_max_error
    );
    for d in &r.degrees {
        text.push_str(&format!("\ndegree {}: zeta_j'(0) = {:.12} (Mellin {:.12})", d.degree, d.zeta_prime, d.zeta_prime_mellin));
    }
    Ok(Outcome::ok(to_value(&r), text))
}

fn classcheck(complex: &str, rep: Option<&str>, o: &Options) -> Result<Outcome> {
    let (result, verdicts): (Value, Vec<(usize, Verdict, String)>) = match input::target(complex, rep, o.convention)? {
        Target::Cells { complex, rho, .. } => {
            let v = chain::determinant_class_check(&torsion::assemble_coefficients(&complex, &rho)?)?;
            let summary = v.iter().map(|x| (x.degree, x.convergence.verdict, x.convergence.detail.clone())).collect();
            (to_value(&v), summary)
        }
        Target::Hilbertian(c) => {
            let v = chain::determinant_class_check(&c)?;
            let summary = v.iter().map(|x| (x.degree, x.convergence.verdict, x.convergence.detail.clone())).collect();
            (to_value(&v), summary)
        }
        Target::Abelian(c) => {
            let v = c.determinant_class_check(input::grid(c.rank(), o.grid)?)?;
            let summary = v
                .iter()
                .map(|x| (x.degree, x.quadrature.convergence.verdict, x.quadrature.convergence.detail.clone()))
                .collect();
            (to_value(&v), summary)
        }
    };
    let refused = verdicts.iter().any(|v| v.1 != Verdict::Pass);
    let text = verdicts
        .iter()
        .map(|(d, v, detail)| format!("degree {d}: {v:?} ({detail})"))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Outcome { result: json!({ "verdicts": result }), text, refused })
}

fn run(command: &Command, o: &Options) -> Result<Outcome> {
    match command {
        Command::Det { inputs } => det(inputs, o),
        Command::Betti { complex, representation } => betti(complex, representation.as_deref(), o),
        Command::Torsion { complex, representation } => torsion_cmd(complex, representation.as_deref(), o),
        Command::Invariance { complex, representation, subdivision } => {
            invariance(complex, representation, subdivision.as_deref(), o)
        }
        Command::Zeta { complex, representation } => zeta(complex, representation.as_deref(), o),
        Command::Classcheck { complex, representation } => classcheck(complex, representation.as_deref(), o),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_refusal() {
        2
    } else {
        1
    }
}

fn emit(format: Format, command: &str, outcome: Result<Outcome>) -> ExitCode {
    match outcome {
        Ok(out) => {
            match format {
                Format::Text => println!("{}", out.text),
                Format::Structured => {
                    let doc = json!({"version": FORMAT_VERSION, "command": command, "result": out.result});
                    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
                }
            }
            ExitCode::from(if out.refused { 2 } else { 0 })
        }
        Err(e) => {
            match format {
                Format::Text => eprintln!("{}: {e}", e.kind()),
                Format::Structured => {
                    let doc = json!({
                        "version": FORMAT_VERSION,
                        "command": command,
                        "error": {"kind": e.kind(), "refusal": e.is_refusal(), "message": e.to_string()},
                    });
                    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
                }
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn main() -> ExitCode {
    // Usage errors are input errors (exit 1); code 2 is reserved for refusals.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let options = match Options::from_cli(&cli) {
        Ok(o) => o,
        Err(e) => return emit(cli.format, cli.command.as_ref().map_or("fixtures", Command::name), Err(e)),
    };
    if cli.fixtures {
        let checks = suite::run(&options);
        let failed = checks.iter().filter(|c| !c.pass).count();
        let text = checks.iter().map(suite::Check::line).collect::<Vec<_>>().join("\n")
            + &format!("\n{} checks, {} failed", checks.len(), failed);
        let out = Outcome { result: json!({ "checks": to_value(&checks) }), text, refused: false };
        let code = emit(cli.format, "fixtures", Ok(out));
        return if failed > 0 { ExitCode::from(1) } else { code };
    }
    let Some(command) = &cli.command else {
        eprintln!("nothing to do: give a subcommand or --fixtures (see --help)");
        return ExitCode::from(1);
    };
    emit(cli.format, command.name(), run(command, &options))
}
