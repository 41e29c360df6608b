//! `motdt`: command-line front end for the motivic DT engine.
//!
//! Every command prints one JSON document on stdout carrying a `version`
//! field.  Errors go to stderr as a single JSON line; the exit code is 2 for
//! malformed input (bad flags, unreadable files, schema violations) and 1
//! for errors raised by the computation itself.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use motdt::coeffring::parse_rational;
use motdt::dt::{dt_invariants, DtEngine, Eigenvalues, GlobalFactorTable, Weights};
use motdt::gammaring::{GammaIndex, Truncation};
use motdt::kacmoody::{
    is_root, nonempty_conn, nonempty_conn_ss, nonempty_higgs_ss, rho_of_gamma, RootKind, StarGraph,
};
use motdt::symfunc::macdonald_modified;
use motdt::verify::{oracle_grid, run_suite, OracleCase, Suite};
use motdt::{Error, MotScalar, Partition, Rational};
use serde_json::{json, Value};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "motdt", version, about = "Exact motivic DT invariants and motivic classes of parabolic moduli stacks on P^1")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Table of DT invariants B_gamma over a truncation window.
    Dt {
        /// Number of parabolic points (labelled 0..n-1).
        #[arg(long)]
        points: u32,
        /// Maximal rank.
        #[arg(long = "rank-max")]
        rank_max: u32,
        /// Minimal degree (a nonpositive integer).
        #[arg(long = "deg-min", allow_negative_numbers = true)]
        deg_min: i64,
        /// Global factor table for positive genus (JSON); genus 0 if omitted.
        #[arg(long = "genus-table")]
        genus_table: Option<PathBuf>,
        /// Maximal flag depth (defaults to the maximal rank).
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Modified Macdonald polynomial of a partition.
    Macdonald {
        /// Partition as comma-separated parts, e.g. `2,1`.
        #[arg(long)]
        lambda: String,
    },
    /// Motivic class of semistable parabolic Higgs bundles with prescribed residues.
    HiggsClass {
        /// Class gamma (JSON).
        #[arg(long)]
        gamma: PathBuf,
        /// Residue eigenvalues zeta (JSON).
        #[arg(long)]
        zeta: PathBuf,
        /// Parabolic weights sigma (JSON).
        #[arg(long)]
        sigma: PathBuf,
        /// Global factor table for positive genus (JSON).
        #[arg(long = "genus-table")]
        genus_table: Option<PathBuf>,
    },
    /// Motivic class of parabolic connections, optionally (kappa, sigma)-semistable.
    ConnClass {
        /// Class gamma (JSON).
        #[arg(long)]
        gamma: PathBuf,
        /// Residue eigenvalues zeta (JSON).
        #[arg(long)]
        zeta: PathBuf,
        /// Stability parameter kappa (rational, e.g. `1` or `1/2`).
        #[arg(long)]
        kappa: Option<String>,
        /// Parabolic weights sigma (JSON).
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// Global factor table for positive genus (JSON).
        #[arg(long = "genus-table")]
        genus_table: Option<PathBuf>,
    },
    /// Decide non-emptiness of a moduli stack and print a root decomposition.
    Nonempty {
        /// Which moduli stack.
        #[arg(long, value_enum)]
        kind: Kind,
        /// Class gamma (JSON).
        #[arg(long)]
        gamma: PathBuf,
        /// Residue eigenvalues zeta (JSON).
        #[arg(long)]
        zeta: PathBuf,
        /// Parabolic weights sigma (JSON).
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// Stability parameter kappa (rational).
        #[arg(long)]
        kappa: Option<String>,
        /// Genus of the curve.
        #[arg(long)]
        genus: u32,
    },
    /// Compare brute-force finite-field counts against the engine.
    Oracle {
        /// Grid of cases (JSON list or `{"cases": [...]}`).
        #[arg(long)]
        grid: PathBuf,
    },
    /// Run built-in verification suites.
    Verify {
        /// Suite to run.
        #[arg(long, default_value = "all", value_parser = ["macdonald", "plethysm", "kernel", "oracle", "nonempty", "classes", "all"])]
        suite: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Conn,
    Higgs,
    ConnSs,
}

/// A failed run: exit code plus a one-line message.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Parse(_) => (2, "parse"),
            Error::Schema(_) => (2, "schema"),
            _ => (1, "domain"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

fn schema(message: String) -> Failure {
    Failure {
        code: 2,
        kind: "schema",
        message,
    }
}

/// Outcome of a command: the JSON document and whether all checks passed.
type Outcome = Result<(Value, bool), Failure>;

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        kind: "io",
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    serde_json::from_str(&text).map_err(|e| Failure {
        code: 2,
        kind: "parse",
        message: format!("{}: invalid JSON: {e}", path.display()),
    })
}

fn read_table(path: Option<&Path>) -> Result<GlobalFactorTable, Failure> {
    match path {
        None => Ok(GlobalFactorTable::Genus0),
        Some(p) => Ok(GlobalFactorTable::from_json(&read_json(p)?)?),
    }
}

fn read_gamma(path: &Path) -> Result<GammaIndex, Failure> {
    Ok(GammaIndex::from_json(&read_json(path)?)?)
}

fn read_zeta(path: &Path) -> Result<Eigenvalues, Failure> {
    Ok(Eigenvalues::from_json(&read_json(path)?)?)
}

fn read_weights(kappa: Option<&str>, sigma: Option<&Path>) -> Result<Weights, Failure> {
    let kappa = match kappa {
        Some(k) => parse_rational(k)?,
        None => Rational::from_integer(1.into()),
    };
    let sigma = match sigma {
        Some(p) => Weights::sigma_from_json(&read_json(p)?)?,
        None => Default::default(),
    };
    Ok(Weights::new(kappa, sigma)?)
}

fn scalar_json(c: &MotScalar) -> Value {
    json!({"display": c.to_string(), "text": c.to_text(), "value": c.to_json()})
}

fn engine_for(g: &GammaIndex, table: GlobalFactorTable) -> Result<DtEngine, Failure> {
    Ok(DtEngine::new(g.points().collect(), table)?)
}

fn run_dt(points: u32, rank_max: u32, deg_min: i64, table: Option<&Path>, depth: Option<u32>) -> Outcome {
    if deg_min > 0 {
        return Err(schema(format!("--deg-min must be nonpositive, got {deg_min}")));
    }
    if rank_max == 0 {
        return Err(schema("--rank-max must be at least 1".into()));
    }
    let table = read_table(table)?;
    let depth = depth.unwrap_or(rank_max);
    let trunc = Truncation::new((0..points).collect(), rank_max, depth, deg_min.unsigned_abs() as u32)?;
    let rows: Vec<Value> = dt_invariants(&trunc, &table)?
        .iter()
        .map(|(g, c)| json!({"gamma": g.to_json(), "B": scalar_json(c)}))
        .collect();
    Ok((
        json!({
            "version": VERSION,
            "command": "dt",
            "points": points,
            "rank_max": rank_max,
            "deg_min": deg_min,
            "depth": depth,
            "genus": table.genus(),
            "invariants": rows,
        }),
        true,
    ))
}

fn run_macdonald(lambda: &str) -> Outcome {
    let lambda: Partition = lambda.parse()?;
    let h = macdonald_modified(&lambda)?;
    Ok((
        json!({
            "version": VERSION,
            "command": "macdonald",
            "lambda": lambda.to_string(),
            "symfun": h.to_json(),
        }),
        true,
    ))
}

fn run_higgs(gamma: &Path, zeta: &Path, sigma: &Path, table: Option<&Path>) -> Outcome {
    let g = read_gamma(gamma)?;
    let z = read_zeta(zeta)?;
    let w = read_weights(None, Some(sigma))?;
    let c = engine_for(&g, read_table(table)?)?.higgs_ss_class(&g, &z, &w)?;
    Ok((
        json!({"version": VERSION, "command": "higgs-class", "gamma": g.to_json(), "class": scalar_json(&c)}),
        true,
    ))
}

fn run_conn(gamma: &Path, zeta: &Path, kappa: Option<&str>, sigma: Option<&Path>, table: Option<&Path>) -> Outcome {
    let g = read_gamma(gamma)?;
    let z = read_zeta(zeta)?;
    let e = engine_for(&g, read_table(table)?)?;
    let c = if kappa.is_none() && sigma.is_none() {
        e.conn_class(&g, &z)?
    } else {
        e.conn_ss_class(&g, &z, &read_weights(kappa, sigma)?)?
    };
    Ok((
        json!({"version": VERSION, "command": "conn-class", "gamma": g.to_json(), "class": scalar_json(&c)}),
        true,
    ))
}

fn root_kind_name(k: RootKind) -> &'static str {
    match k {
        RootKind::RealRoot => "real",
        RootKind::ImaginaryRoot => "imaginary",
        RootKind::NotARoot => "not-a-root",
    }
}

fn run_nonempty(
    kind: Kind,
    gamma: &Path,
    zeta: &Path,
    sigma: Option<&Path>,
    kappa: Option<&str>,
    genus: u32,
) -> Outcome {
    let g = read_gamma(gamma)?;
    let z = read_zeta(zeta)?;
    let (name, res) = match kind {
        Kind::Conn => ("conn", nonempty_conn(&g, &z, genus)?),
        Kind::Higgs => ("higgs", nonempty_higgs_ss(&g, &z, &read_weights(None, sigma)?, genus)?),
        Kind::ConnSs => ("conn-ss", nonempty_conn_ss(&g, &z, &read_weights(kappa, sigma)?, genus)?),
    };
    let graph = StarGraph::for_gamma(&g);
    let mut witness = vec![];
    for h in &res.witness {
        let rho = rho_of_gamma(h, &graph)?;
        witness.push(json!({
            "gamma": h.to_json(),
            "root": rho.to_json(&graph),
            "root_kind": root_kind_name(is_root(&rho, &graph)),
        }));
    }
    Ok((
        json!({
            "version": VERSION,
            "command": "nonempty",
            "kind": name,
            "genus": genus,
            "gamma": g.to_json(),
            "nonempty": if res.nonempty { "yes" } else { "no" },
            "witness": witness,
        }),
        true,
    ))
}

fn run_oracle(grid: &Path) -> Outcome {
    let v = read_json(grid)?;
    let list = match &v {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("cases")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("oracle grid: expected a list or {\"cases\": [...]}".into()))?,
        _ => return Err(schema("oracle grid: expected a list or {\"cases\": [...]}".into())),
    };
    let cases = list.iter().map(OracleCase::from_json).collect::<Result<Vec<_>, _>>()?;
    let (check, rows) = oracle_grid(&cases)?;
    let reports: Vec<Value> = rows
        .iter()
        .map(|(case, count, formula)| {
            json!({
                "case": case.to_json(),
                "weighted_count": motdt::coeffring::format_rational(count),
                "formula": motdt::coeffring::format_rational(formula),
                "agree": count == formula,
            })
        })
        .collect();
    Ok((
        json!({
            "version": VERSION,
            "command": "oracle",
            "passed": check.passed,
            "cases": check.cases,
            "reports": reports,
        }),
        check.passed,
    ))
}

fn run_verify(suite: &str) -> Outcome {
    let suite: Suite = suite.parse()?;
    let reports = run_suite(suite)?;
    let passed = reports.iter().all(|r| r.passed());
    Ok((
        json!({
            "version": VERSION,
            "command": "verify",
            "suite": suite.to_string(),
            "passed": passed,
            "suites": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        }),
        passed,
    ))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Dt {
            points,
            rank_max,
            deg_min,
            genus_table,
            depth,
        } => run_dt(points, rank_max, deg_min, genus_table.as_deref(), depth),
        Command::Macdonald { lambda } => run_macdonald(&lambda),
        Command::HiggsClass {
            gamma,
            zeta,
            sigma,
            genus_table,
        } => run_higgs(&gamma, &zeta, &sigma, genus_table.as_deref()),
        Command::ConnClass {
            gamma,
            zeta,
            kappa,
            sigma,
            genus_table,
        } => run_conn(&gamma, &zeta, kappa.as_deref(), sigma.as_deref(), genus_table.as_deref()),
        Command::Nonempty {
            kind,
            gamma,
            zeta,
            sigma,
            kappa,
            genus,
        } => run_nonempty(kind, &gamma, &zeta, sigma.as_deref(), kappa.as_deref(), genus),
        Command::Oracle { grid } => run_oracle(&grid),
        Command::Verify { suite } => run_verify(&suite),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((doc, passed)) => {
            let text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
            // A closed stdout (e.g. piping into `head`) is not an error of ours.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            let line = json!({"version": VERSION, "error": {"kind": f.kind, "message": f.message}});
            eprintln!("{line}");
            ExitCode::from(f.code)
        }
    }
}
