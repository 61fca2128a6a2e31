//! Command-line front end. Every subcommand validates its flags fully
//! before computing anything, prints deterministically ordered output, and
//! keeps to the exit-code contract: 0 success or pass, 1 verification
//! failure, 2 usage or input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use rspin_core::correlators::{
    load_table, save_table, seed_genus0_wk, verify_change_of_variables, CorrelatorTable, TableMode,
};
use rspin_core::descent::{descent_closed_form, TypeTuple};
use rspin_core::hierarchy::{
    build_lax, consistency_grid, default_depth, evolution_equations, flow_standard, flow_tilde,
    FlowResult,
};
use rspin_core::Error;

#[derive(Parser)]
#[command(name = "rspin", version, about = "Exact hierarchy flows and descendant calculus")]
struct Cli {
    /// Output rendering: plain text or a single JSON document.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Expand the r-th root of the Lax operator to the given depth.
    Root {
        #[arg(long)]
        r: u32,
        /// Number of certified coefficient orders; defaults to r + 6.
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Print the evolution equations of one flow.
    Flow {
        #[arg(long)]
        r: u32,
        /// Flow labelled by a single raised index (ar + m).
        #[arg(long = "tilde-index", conflicts_with_all = ["a", "m"])]
        tilde_index: Option<u32>,
        /// Flow labelled by a psi power a and a type m, in the standard
        /// normalization.
        #[arg(long, requires = "m")]
        a: Option<u32>,
        #[arg(long, requires = "a")]
        m: Option<u32>,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Compare the two flow normalizations over a grid of indices.
    CheckFlows {
        #[arg(long)]
        r: u32,
        #[arg(long = "max-a", default_value_t = 2)]
        max_a: u32,
    },
    /// Reduce raised indices to base types with their exact coefficients.
    Descent {
        #[arg(long)]
        r: u32,
        /// Comma-separated raised indices, one per insertion.
        #[arg(long, value_delimiter = ',', required = true)]
        mtilde: Vec<u32>,
        #[arg(long, default_value_t = 0)]
        genus: u32,
    },
    /// Evaluate the virtual degree of a type tuple.
    Degree {
        #[arg(long)]
        r: u32,
        #[arg(long, default_value_t = 0)]
        genus: u32,
        /// Comma-separated types; -1 marks the single allowed negative slot.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        m: Vec<i64>,
    },
    /// Verify that the two generating potentials agree after the change of
    /// variables, over a table file or over formal symbols.
    PotentialCheck {
        #[arg(long)]
        r: u32,
        #[arg(long, default_value_t = 6)]
        order: u32,
        #[arg(long, conflicts_with = "formal")]
        table: Option<PathBuf>,
        /// Run with symbolic correlator values instead of a table.
        #[arg(long)]
        formal: bool,
    },
    /// Compute a genus-zero table (r = 2 only) and write it out.
    SeedTable {
        #[arg(long, default_value_t = 2)]
        r: u32,
        #[arg(long = "max-points", default_value_t = 6)]
        max_points: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn flow_lines(flow: &FlowResult) -> Vec<String> {
    evolution_equations(flow)
}

fn run(cli: &Cli) -> Result<u8, Error> {
    match &cli.command {
        Command::Root { r, depth } => {
            let depth = depth.unwrap_or_else(|| default_depth(*r));
            let q = build_lax(*r)?;
            let root = q.op().rth_root(depth)?;
            match cli.format {
                Format::Text => println!("{root}"),
                Format::Structured => print_doc(json!({
                    "command": "root",
                    "r": r,
                    "depth": depth,
                    "root": root.to_string(),
                })),
            }
            Ok(0)
        }
        Command::Flow {
            r,
            tilde_index,
            a,
            m,
            depth,
        } => {
            let q = build_lax(*r)?;
            let (flow, label) = match (tilde_index, a, m) {
                (Some(k), None, None) => {
                    let depth = depth.unwrap_or_else(|| default_depth(*r).max(k + 1));
                    (flow_tilde(&q, *k, depth)?, json!({ "tilde": k }))
                }
                (None, Some(a), Some(m)) => {
                    let depth =
                        depth.unwrap_or_else(|| default_depth(*r).max(a * r + m + 1));
                    (flow_standard(&q, *a, *m, depth)?, json!({ "a": a, "m": m }))
                }
                _ => {
                    return Err(Error::BadKey(
                        "pass either --tilde-index or both --a and --m".into(),
                    ))
                }
            };
            let lines = flow_lines(&flow);
            match cli.format {
                Format::Text => {
                    for line in &lines {
                        println!("{line}");
                    }
                }
                Format::Structured => print_doc(json!({
                    "command": "flow",
                    "r": r,
                    "index": label,
                    "prefactor": flow.prefactor.to_string(),
                    "equations": lines,
                })),
            }
            Ok(0)
        }
        Command::CheckFlows { r, max_a } => {
            let grid = consistency_grid(*r, *max_a)?;
            let passed = grid.iter().filter(|l| l.pass).count();
            let pass = passed == grid.len();
            match cli.format {
                Format::Text => {
                    for line in &grid {
                        println!("{line}");
                    }
                    println!(
                        "{}: {passed} of {} flow pairs agree",
                        if pass { "PASS" } else { "FAIL" },
                        grid.len()
                    );
                }
                Format::Structured => print_doc(json!({
                    "command": "check-flows",
                    "r": r,
                    "max_a": max_a,
                    "lines": grid
                        .iter()
                        .map(|l| json!({
                            "a": l.a,
                            "m": l.m,
                            "pass": l.pass,
                        }))
                        .collect::<Vec<_>>(),
                    "pass": pass,
                })),
            }
            Ok(if pass { 0 } else { 1 })
        }
        Command::Descent { r, mtilde, genus } => {
            let tuple = TypeTuple::new(
                *r,
                *genus,
                mtilde.iter().map(|e| i64::from(*e)).collect(),
            )?;
            let (factors, base) = descent_closed_form(&tuple)?;
            let mut product = rspin_core::num::BigRational::from_integer(1.into());
            for f in &factors {
                product *= f.scalar.clone();
            }
            let base_list = base
                .entries()
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            match cli.format {
                Format::Text => {
                    for (i, f) in factors.iter().enumerate() {
                        let note = if f.base < 0 { " (vanishing)" } else { "" };
                        println!(
                            "insertion {i}: mtilde={}, psi power {}, scalar {}, base type {}{note}",
                            mtilde[i], f.psi_power, f.scalar, f.base
                        );
                    }
                    println!("base tuple: ({base_list})");
                    println!("scalar product: {product}");
                }
                Format::Structured => print_doc(json!({
                    "command": "descent",
                    "r": r,
                    "genus": genus,
                    "factors": factors
                        .iter()
                        .zip(mtilde)
                        .map(|(f, mt)| json!({
                            "mtilde": mt,
                            "psi_power": f.psi_power,
                            "scalar": f.scalar.to_string(),
                            "base": f.base,
                            "vanishing": f.base < 0,
                        }))
                        .collect::<Vec<_>>(),
                    "base_tuple": base.entries(),
                    "scalar_product": product.to_string(),
                })),
            }
            Ok(0)
        }
        Command::Degree { r, genus, m } => {
            let tuple = TypeTuple::new(*r, *genus, m.clone())?;
            let degree = tuple.virtual_degree();
            let integral = degree.is_integer();
            match cli.format {
                Format::Text => {
                    if integral {
                        println!("D = {degree}");
                    } else {
                        println!("D = {degree} (non-integral)");
                    }
                }
                Format::Structured => print_doc(json!({
                    "command": "degree",
                    "r": r,
                    "genus": genus,
                    "m": m,
                    "degree": degree.to_string(),
                    "integral": integral,
                })),
            }
            Ok(0)
        }
        Command::PotentialCheck {
            r,
            order,
            table,
            formal,
        } => {
            let table = match (table, formal) {
                (Some(path), false) => {
                    let t = load_table(path)?;
                    if t.r() != *r {
                        return Err(Error::BadTable(format!(
                            "table at {} is for r={}, not r={r}",
                            path.display(),
                            t.r()
                        )));
                    }
                    t
                }
                (None, true) => CorrelatorTable::new(*r, TableMode::Formal)?,
                _ => {
                    return Err(Error::BadTable(
                        "pass exactly one of --table PATH or --formal".into(),
                    ))
                }
            };
            let report = verify_change_of_variables(&table, *order)?;
            match cli.format {
                Format::Text => println!("{report}"),
                Format::Structured => print_doc(json!({
                    "command": "potential-check",
                    "r": r,
                    "order": order,
                    "mode": if *formal { "formal" } else { "numeric" },
                    "genus_cap": report.genus_cap,
                    "pass": report.pass,
                    "mismatches": report
                        .mismatches
                        .iter()
                        .map(|m| json!({
                            "genus": m.genus,
                            "monomial": m.monomial,
                            "direct": m.direct,
                            "substituted": m.substituted,
                        }))
                        .collect::<Vec<_>>(),
                })),
            }
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::SeedTable { r, max_points, out } => {
            let mut table = CorrelatorTable::new(*r, TableMode::Numeric)?;
            seed_genus0_wk(&mut table, *max_points)?;
            save_table(&table, out)?;
            match cli.format {
                Format::Text => {
                    println!("wrote {} entries to {}", table.len(), out.display())
                }
                Format::Structured => print_doc(json!({
                    "command": "seed-table",
                    "r": r,
                    "max_points": max_points,
                    "entries": table.len(),
                    "path": out.display().to_string(),
                })),
            }
            Ok(0)
        }
    }
}

fn print_doc(doc: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&doc).expect("plain document"));
}
