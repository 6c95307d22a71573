//! Command-line driver: verify closure, section to PDEs, check prolongation
//! connections, extract bracket constraints, audit Jacobi identities, and
//! verify conservation laws and Backlund transformations from a system file.
//!
//! Exit codes: 0 verified, 1 failed, 2 parse or usage error, 3 ambiguous
//! (a verdict the assumptions cannot decide).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num::BigRational;

use eds::backlund::{compatibility_residual, verify_potential_equation, BacklundSystem};
use eds::conserve::{build_theta, check_exact, check_potential};
use eds::exterior::{check_closed, eliminate, section};
use eds::liealg::jacobi_audit;
use eds::numeric::random_identity_check;
use eds::parse::{parse, SystemFile};
use eds::prolong::{curvature_residual, extract_constraints, pde_form_check};
use eds::report::{
    CertificateReport, ConstraintReport, NumericSummary, Report, ResidualReport, Verdict,
    ViolationReport,
};
use eds::scalar::{Coordinate, Direction};
use eds::EdsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Parser)]
#[command(name = "eds", version, about = "exterior differential system workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// system file to load
    file: PathBuf,
    /// output format
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    /// extra assumption clause appended before parsing (repeatable),
    /// e.g. --assume "n - 1 != 0"
    #[arg(long)]
    assume: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify d(alpha) lies in the ideal for every generator, with
    /// re-checkable multiplier certificates
    Close {
        #[command(flatten)]
        common: Common,
    },
    /// Pull the generators back along the standard section du -> u_x dx + u_t dt
    Section {
        #[command(flatten)]
        common: Common,
        /// substitute the triangular fibre definitions to obtain a single PDE
        #[arg(long)]
        eliminate: bool,
    },
    /// Check a named connection: curvature residual modulo the ideal, plus an
    /// independent multiplier-solve flatness check; or extract bracket
    /// constraints grouped by powers of a coordinate
    Prolong {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        connection: String,
        /// extract bracket constraints instead of checking flatness
        #[arg(long)]
        extract: bool,
        /// named case whose assumptions apply during extraction
        #[arg(long = "assume-case")]
        case: Option<String>,
        /// coordinate whose powers group the constraints
        #[arg(long, default_value = "u")]
        power_coord: String,
        /// bracket table to use
        #[arg(long, default_value = "standing")]
        table: String,
    },
    /// Verify a conservation candidate: d(theta) = 0 and, when a potential
    /// omega is declared, d(omega) = theta
    Conserve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        candidate: String,
    },
    /// Check a Backlund pair (F, G): the compatibility residual
    /// D_t F - D_x G must be a multiple of the section PDE
    Backlund {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        system: String,
        /// also compare D_t F - D_x G against multiplier * PDE numerically
        #[arg(long)]
        numeric: bool,
        /// verify the closed-form potential equation at these integer
        /// parameter values (requires all four)
        #[arg(long)]
        n: Option<i64>,
        #[arg(long)]
        m: Option<i64>,
        #[arg(long)]
        gamma: Option<i64>,
        #[arg(long)]
        alpha: Option<i64>,
        #[arg(long, default_value_t = 20)]
        trials: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Audit the Jacobi identity on every generator triple of a bracket table
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        table: String,
    },
}

fn load(common: &Common) -> Result<SystemFile, String> {
    let mut src = std::fs::read_to_string(&common.file)
        .map_err(|e| format!("cannot read {}: {}", common.file.display(), e))?;
    for a in &common.assume {
        src.push_str("\nassume ");
        src.push_str(a);
        src.push('\n');
    }
    parse(&src).map_err(|e| format!("parse error: {}", e))
}

fn emit(report: &Report, format: Format) -> ExitCode {
    use std::fmt::Write as _;
    let mut out = String::new();
    match format {
        Format::Machine => {
            let _ = writeln!(out, "{}", report.to_json());
        }
        Format::Human => {
            let _ = writeln!(out, "{} {}: {:?}", report.command, report.system, report.verdict);
            for c in &report.certificates {
                let _ = writeln!(out, "  certificate {}: residual {}", c.name, c.residual);
                for (i, m) in c.multipliers.iter().enumerate() {
                    if m != "0" {
                        let _ = writeln!(out, "    sigma_{} = {}", i + 1, m);
                    }
                }
            }
            for r in &report.residuals {
                let _ = writeln!(out, "  {} = {}", r.name, r.value);
            }
            for c in &report.constraints {
                let _ = writeln!(out, "  power {}: {} = 0", c.exponent, c.value);
            }
            for v in &report.violations {
                let _ = writeln!(
                    out,
                    "  Jacobi violation on ({}, {}, {}): residual {}",
                    v.triple[0], v.triple[1], v.triple[2], v.residual
                );
            }
            if let Some(n) = &report.numeric {
                let _ = writeln!(
                    out,
                    "  numeric: {} trials, seed {}, tol {:e}, worst {:e}, pass {}",
                    n.trials, n.seed, n.tol, n.worst_residual, n.pass
                );
            }
            for n in &report.notes {
                let _ = writeln!(out, "  note: {}", n);
            }
        }
    }
    // tolerate a closed pipe (e.g. when piped into `head`)
    use std::io::Write as _;
    let _ = std::io::stdout().write_all(out.as_bytes());
    ExitCode::from(u8::try_from(report.verdict.exit_code()).unwrap_or(1))
}

fn run(cmd: &Cmd) -> Result<(Report, Format), String> {
    match cmd {
        Cmd::Close { common } => {
            let file = load(common)?;
            let sys = &file.system;
            let mut report = Report::new("close", &sys.name, Verdict::Verified);
            match check_closed(sys) {
                Ok(certs) => {
                    for (name, cert) in certs {
                        report.certificates.push(CertificateReport {
                            name,
                            multipliers: cert
                                .multipliers
                                .iter()
                                .map(|m| m.render(&sys.chart))
                                .collect(),
                            residual: "0".to_string(),
                        });
                    }
                }
                Err(EdsError::NotInIdeal(r)) => {
                    report.verdict = Verdict::Failed;
                    report.notes.push(r);
                }
                Err(e) => return Err(e.to_string()),
            }
            Ok((report, common.format))
        }
        Cmd::Section { common, eliminate: elim } => {
            let file = load(common)?;
            let sys = &file.system;
            let residuals = section(sys, &sys.chart.standard_section()).map_err(|e| e.to_string())?;
            let mut report = Report::new("section", &sys.name, Verdict::Verified);
            if *elim {
                let pde =
                    eliminate(&residuals, &file.definitions).map_err(|e| e.to_string())?;
                report.residuals.push(ResidualReport {
                    name: "pde".to_string(),
                    value: pde.to_string(),
                });
            } else {
                for ((name, _), r) in sys.generators.iter().zip(&residuals) {
                    report.residuals.push(ResidualReport {
                        name: name.clone(),
                        value: r.to_string(),
                    });
                }
            }
            Ok((report, common.format))
        }
        Cmd::Prolong { common, connection, extract, case, power_coord, table } => {
            let file = load(common)?;
            let sys = &file.system;
            let conn = file
                .connections
                .get(connection)
                .ok_or_else(|| format!("no connection named {}", connection))?;
            let tbl = file
                .tables
                .get(table)
                .ok_or_else(|| format!("no table named {}", table))?;
            if *extract {
                let empty = eds::scalar::AssumptionSet::empty();
                let assume = match case {
                    Some(c) => file.cases.get(c).ok_or_else(|| format!("no case named {}", c))?,
                    None => &empty,
                };
                let mut report = Report::new("prolong --extract", &sys.name, Verdict::Verified);
                match extract_constraints(conn, sys, tbl, assume, &Coordinate::fibre(power_coord)) {
                    Ok(cs) => {
                        for c in cs.constraints {
                            report.constraints.push(ConstraintReport {
                                exponent: c.exponent.to_string(),
                                value: c.value.to_string(),
                            });
                        }
                    }
                    Err(EdsError::CaseSplit { difference }) => {
                        report.verdict = Verdict::Ambiguous;
                        report.notes.push(format!(
                            "cannot decide whether {} vanishes; add an assumption",
                            difference
                        ));
                    }
                    Err(e) => return Err(e.to_string()),
                }
                Ok((report, common.format))
            } else {
                let curv = curvature_residual(conn, sys, tbl).map_err(|e| e.to_string())?;
                let pde = pde_form_check(conn, sys, tbl).map_err(|e| e.to_string())?;
                let flat = curv.is_flat();
                let agree = pde.pass();
                let verdict = if flat && agree { Verdict::Verified } else { Verdict::Failed };
                let mut report = Report::new("prolong", &sys.name, verdict);
                for c in &curv.components {
                    report.residuals.push(ResidualReport {
                        name: format!("curvature[{}]", c.basis),
                        value: c.residual.render(&sys.chart),
                    });
                }
                report.notes.push(format!(
                    "ideal reduction flat: {}; independent multiplier solve flat: {}",
                    flat, agree
                ));
                Ok((report, common.format))
            }
        }
        Cmd::Conserve { common, candidate } => {
            let file = load(common)?;
            let sys = &file.system;
            let cand = file
                .conservations
                .get(candidate)
                .ok_or_else(|| format!("no conservation candidate named {}", candidate))?;
            let theta = build_theta(&cand.multipliers, sys).map_err(|e| e.to_string())?;
            let exact = check_exact(&theta, &sys.chart).map_err(|e| e.to_string())?;
            let mut pass = exact.residual.is_zero();
            let mut report = Report::new("conserve", &sys.name, Verdict::Verified);
            report.residuals.push(ResidualReport {
                name: "d(theta)".to_string(),
                value: exact.residual.render(&sys.chart),
            });
            if let Some(omega) = &cand.omega {
                let pot = check_potential(omega, &theta, &sys.chart).map_err(|e| e.to_string())?;
                pass &= pot.residual.is_zero();
                report.residuals.push(ResidualReport {
                    name: "d(omega) - theta".to_string(),
                    value: pot.residual.render(&sys.chart),
                });
            }
            if !pass {
                report.verdict = Verdict::Failed;
            }
            Ok((report, common.format))
        }
        Cmd::Backlund { common, system, numeric, n, m, gamma, alpha, trials, seed, tol } => {
            let file = load(common)?;
            let sys = &file.system;
            let (f, g) = file
                .backlunds
                .get(system)
                .ok_or_else(|| format!("no backlund system named {}", system))?
                .clone();
            let residuals = section(sys, &sys.chart.standard_section()).map_err(|e| e.to_string())?;
            let pde = eliminate(&residuals, &file.definitions).map_err(|e| e.to_string())?;
            let b = BacklundSystem { name: system.clone(), f, g, pde };
            let rep = compatibility_residual(&b).map_err(|e| e.to_string())?;
            let mut pass = rep.pass();
            let mut report = Report::new("backlund", &sys.name, Verdict::Verified);
            report.seed = Some(*seed);
            report.residuals.push(ResidualReport {
                name: "multiplier".to_string(),
                value: rep.multiplier.to_string(),
            });
            report.residuals.push(ResidualReport {
                name: "remainder".to_string(),
                value: rep.remainder.to_string(),
            });
            if let (Some(n), Some(m), Some(gamma), Some(alpha)) = (n, m, gamma, alpha) {
                let big = |k: i64| BigRational::from_integer(k.into());
                let pot = verify_potential_equation(
                    &b,
                    &big(*n),
                    &big(*m),
                    &big(*gamma),
                    &big(*alpha),
                    *trials,
                    *seed,
                    *tol,
                    false,
                )
                .map_err(|e| e.to_string())?;
                pass &= pot.pass;
                report.numeric = Some(NumericSummary {
                    trials: pot.trials,
                    seed: pot.seed,
                    tol: pot.tol,
                    worst_residual: pot.worst_residual,
                    pass: pot.pass,
                });
                report
                    .notes
                    .push("numeric check of the closed-form potential equation".to_string());
            } else if *numeric {
                let lhs = b
                    .f
                    .total_diff(Direction::T)
                    .and_then(|ft| Ok(ft.sub(&b.g.total_diff(Direction::X)?)))
                    .map_err(|e| e.to_string())?;
                let rhs = rep.multiplier.mul(&b.pde);
                let check = random_identity_check(
                    &lhs,
                    &rhs,
                    &sys.parameters,
                    &sys.assumptions,
                    *trials,
                    *seed,
                    *tol,
                )
                .map_err(|e| e.to_string())?;
                pass &= check.pass;
                report.numeric = Some(NumericSummary {
                    trials: check.trials,
                    seed: check.seed,
                    tol: check.tol,
                    worst_residual: check.worst_residual,
                    pass: check.pass,
                });
                report
                    .notes
                    .push("numeric comparison of D_t F - D_x G with multiplier * pde".to_string());
            }
            if !pass {
                report.verdict = Verdict::Failed;
            }
            Ok((report, common.format))
        }
        Cmd::Audit { common, table } => {
            let file = load(common)?;
            let sys = &file.system;
            let tbl = file
                .tables
                .get(table)
                .ok_or_else(|| format!("no table named {}", table))?;
            let audit = jacobi_audit(tbl, &sys.assumptions);
            let verdict = if !audit.violations.is_empty() {
                Verdict::Failed
            } else if !audit.undecidable.is_empty() {
                Verdict::Ambiguous
            } else {
                Verdict::Verified
            };
            let mut report = Report::new("audit", &sys.name, verdict);
            for v in &audit.violations {
                report.violations.push(ViolationReport {
                    triple: [v.triple.0.clone(), v.triple.1.clone(), v.triple.2.clone()],
                    residual: v.residual.to_string(),
                });
            }
            for v in &audit.undecidable {
                report.notes.push(format!(
                    "undecidable Jacobi residual on ({}, {}, {}): {}",
                    v.triple.0, v.triple.1, v.triple.2, v.residual
                ));
            }
            report
                .notes
                .push(format!("{} triples checked", audit.triples_checked));
            Ok((report, common.format))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok((report, format)) => emit(&report, format),
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
