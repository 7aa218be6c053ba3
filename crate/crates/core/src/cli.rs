//! Command-line front end: `ring`, `eval`, `check` and `witness`.
//!
//! Exit codes: 0 success, 1 check failure, 2 input error, 3 resource cap.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::evaluator::{EvalError, Evaluator, Limits};
use crate::formula::{Formula, ParseError};
use crate::group_model::{Group, GroupError, QCertificate, QEvidence, SKind, DEFAULT_SCAN_BOUND};
use crate::harness::{run_suite, HarnessError, Mutation, SuiteConfig, SuiteReport};
use crate::k0ring::K0Element;
use crate::numtheory::{crt_solve, find_prime_in_ap, is_fermat_prime, PrimeSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    CheckFailed = 1,
    Input = 2,
    Resource = 3,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Suite(#[from] HarnessError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("no prime below {0} in the progression")]
    SearchExhausted(u64),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Eval(e) if e.is_resource_cap() => ExitCode::Resource,
            CliError::Group(GroupError::ScanBoundExhausted { .. })
            | CliError::SearchExhausted(_) => ExitCode::Resource,
            CliError::Suite(HarnessError::Eval(e)) if e.is_resource_cap() => ExitCode::Resource,
            _ => ExitCode::Input,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "k0group",
    version,
    about = "Grothendieck ring values over subgroups of Q"
)]
pub struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GroupArg {
    /// Group descriptor JSON.
    #[arg(long)]
    pub group: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Torsion parameter and candidate ring of a group.
    Ring(GroupArg),
    /// Value of a quantifier-free formula.
    Eval {
        #[command(flatten)]
        group: GroupArg,
        /// Formula text; use --file to read it from disk.
        #[arg(required_unless_present = "file", conflicts_with = "file")]
        formula: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value_t = Limits::default().max_tuples, value_parser = clap::value_parser!(u64).range(1..))]
        max_tuples: u64,
        #[arg(long, default_value_t = Limits::default().max_cells, value_parser = positive_usize)]
        max_cells: usize,
        /// Print the evaluation trace.
        #[arg(long)]
        trace: bool,
    },
    /// Run a property suite.
    Check {
        /// Suite config JSON; the reference suite when omitted.
        #[arg(long)]
        suite: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fault injection for testing the suite itself.
        #[arg(long, value_enum)]
        mutation: Option<MutationArg>,
    },
    /// Prime Q with Q ≡ -1 (mod n) and Q ≡ 2 (mod q).
    Witness {
        n: u64,
        q: u64,
        #[arg(long, default_value_t = 10_000_000)]
        bound: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MutationArg {
    CorruptRing,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

/// What a command printed and how it exits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: ExitCode,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RingReport {
    pub group: String,
    pub q: u64,
    pub certificate: QCertificate,
    pub verified: bool,
    pub trivial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clause: Option<String>,
}

pub fn cmd_ring(group: &Group) -> Result<RingReport, CliError> {
    let certificate = group.compute_q(DEFAULT_SCAN_BOUND)?;
    let q = certificate.q;
    let clause = match group.kind() {
        SKind::Finite => Some("S contains only finitely many primes".to_string()),
        SKind::Cofinite => {
            let fermat: Vec<String> = group
                .listed_primes()
                .filter(|&p| is_fermat_prime(p))
                .map(|p| p.to_string())
                .collect();
            if !fermat.is_empty() {
                Some(format!(
                    "Fermat prime missing from S: {}",
                    fermat.join(", ")
                ))
            } else if q == 1 {
                Some("no odd prime divides p - 1 for every p outside S".to_string())
            } else {
                None
            }
        }
    };
    Ok(RingReport {
        group: group.to_string(),
        q,
        verified: certificate.verify(group),
        certificate,
        trivial: q == 1,
        clause,
    })
}

impl RingReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("group: {}\nq = {}\n", self.group, self.q);
        match &self.certificate.evidence {
            QEvidence::ExactGcd {
                complement_primes,
                gcd_trace,
            } => out += &format!(
                "evidence: exact-gcd over complement {complement_primes:?}, running gcd {gcd_trace:?}\n"
            ),
            QEvidence::DirichletWitnesses { base_prime, witnesses } => {
                out += &format!("evidence: dirichlet-witnesses from base prime {base_prime}\n");
                for w in witnesses {
                    out += &format!("  {} does not divide {} - 1\n", w.odd_prime, w.prime);
                }
            }
        }
        out += &format!("certificate verified: {}\n", self.verified);
        if self.trivial {
            out += "candidate ring: trivial\n";
        } else {
            out += &format!("candidate ring: (Z/{}Z)[X]/(X^2+X)\n", self.q);
        }
        if let Some(c) = &self.clause {
            out += &format!("clause: {c}\n");
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub formula: String,
    pub value: K0Element,
    #[serde(rename = "L")]
    pub l: u64,
    pub tuples: usize,
    pub surviving_tuples: usize,
    pub cells: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<serde_json::Value>,
}

pub fn cmd_eval(
    group: &Group,
    formula: &str,
    limits: Limits,
    trace: bool,
) -> Result<EvalReport, CliError> {
    let f = Formula::parse(formula)?;
    let ev = Evaluator::for_group(group)?.with_limits(limits);
    let t = ev.trace_in(&f, f.arity())?;
    Ok(EvalReport {
        formula: f.to_string(),
        value: t.total,
        l: t.l,
        tuples: t.tuples.len(),
        surviving_tuples: t.surviving_tuples(),
        cells: t.cell_count(),
        trace: trace.then(|| serde_json::to_value(&*t).expect("trace serializes")),
    })
}

impl EvalReport {
    pub fn to_text(&self, trace: bool) -> String {
        let mut out = format!("{}\n", self.value);
        if trace {
            out += &format!(
                "L = {}, tuples = {} ({} kept), cells = {}\n",
                self.l, self.tuples, self.surviving_tuples, self.cells
            );
        }
        out
    }
}

pub fn cmd_check(cfg: &SuiteConfig) -> Result<SuiteReport, CliError> {
    Ok(run_suite(cfg)?)
}

fn suite_text(report: &SuiteReport) -> String {
    let mut out = String::new();
    for g in &report.groups {
        out += &format!("{} (q = {})\n", g.group, g.q);
        for c in &g.checks {
            let status = match (&c.skipped, c.passed()) {
                (Some(_), _) => "SKIP",
                (None, true) => "ok",
                (None, false) => "FAIL",
            };
            out += &format!(
                "  {:<16} {:>5} trials  {:>4} failures  {:.2}s  {status}\n",
                c.name,
                c.trials,
                c.failures.len(),
                c.elapsed.as_secs_f64()
            );
            for f in c.failures.iter().take(5) {
                match f.seed {
                    Some(s) => out += &format!("    seed {s}: {}\n", f.message),
                    None => out += &format!("    {}\n", f.message),
                }
            }
        }
    }
    out += if report.passed() {
        "all checks passed\n"
    } else {
        "some checks failed\n"
    };
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub n: u64,
    pub q: u64,
    pub residue: u64,
    pub modulus: u64,
    pub prime: u64,
}

pub fn cmd_witness(n: u64, q: u64, bound: u64) -> Result<WitnessReport, CliError> {
    if n == 0 || q.is_multiple_of(2) {
        return Err(CliError::Usage(format!(
            "need n >= 1 and q odd, got n = {n}, q = {q}"
        )));
    }
    if n.gcd(&q) != 1 {
        return Err(CliError::Usage(format!(
            "n = {n} and q = {q} are not coprime"
        )));
    }
    let overflow = || CliError::Usage("modulus too large".into());
    let (residue, modulus) = crt_solve(&[(-1, n), (2, q)])
        .map_err(|_| overflow())?
        .expect("coprime moduli always have a solution");
    let a = i64::try_from(residue).map_err(|_| overflow())?;
    match find_prime_in_ap(a, modulus, bound).map_err(|_| overflow())? {
        PrimeSearch::Found(prime) => Ok(WitnessReport {
            n,
            q,
            residue,
            modulus,
            prime,
        }),
        PrimeSearch::NotFoundBelow(b) => Err(CliError::SearchExhausted(b)),
        PrimeSearch::NoneExists => Err(CliError::Usage("the progression holds no primes".into())),
    }
}

impl WitnessReport {
    pub fn to_text(&self) -> String {
        format!(
            "Q ≡ {} (mod {}); smallest prime {}\n{} ≡ -1 (mod {}), {} ≡ 2 (mod {}), so {} does not divide Q - 1\n",
            self.residue,
            self.modulus,
            self.prime,
            self.prime,
            self.n,
            self.prime,
            self.q,
            self.q
        )
    }
}

fn render<T: Serialize>(format: Format, value: &T, text: impl FnOnce(&T) -> String) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(value).expect("report serializes") + "\n",
        Format::Text => text(value),
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })
}

fn load_group(arg: &GroupArg) -> Result<Group, CliError> {
    let text = read(&arg.group)?;
    Ok(crate::group_model::GroupDescriptor::from_json(&text)?.validate()?)
}

fn execute(cli: &Cli) -> Result<(ExitCode, String), CliError> {
    let fmt = cli.format;
    match &cli.command {
        Command::Ring(g) => {
            let report = cmd_ring(&load_group(g)?)?;
            Ok((ExitCode::Ok, render(fmt, &report, RingReport::to_text)))
        }
        Command::Eval {
            group,
            formula,
            file,
            max_tuples,
            max_cells,
            trace,
        } => {
            let group = load_group(group)?;
            let text = match (formula, file) {
                (Some(f), _) => f.clone(),
                (None, Some(p)) => read(p)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let limits = Limits {
                max_tuples: *max_tuples,
                max_cells: *max_cells,
                ..Limits::default()
            };
            let report = cmd_eval(&group, text.trim(), limits, *trace)?;
            Ok((ExitCode::Ok, render(fmt, &report, |r| r.to_text(*trace))))
        }
        Command::Check {
            suite,
            seed,
            mutation,
        } => {
            let mut cfg = match suite {
                Some(p) => SuiteConfig::from_json(&read(p)?)?,
                None => SuiteConfig::reference(),
            };
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            if mutation.is_some() {
                cfg.mutation = Some(Mutation::CorruptRing);
            }
            let report = cmd_check(&cfg)?;
            let code = if report.passed() {
                ExitCode::Ok
            } else {
                ExitCode::CheckFailed
            };
            Ok((code, render(fmt, &report, suite_text)))
        }
        Command::Witness { n, q, bound } => {
            let report = cmd_witness(*n, *q, *bound)?;
            Ok((ExitCode::Ok, render(fmt, &report, WitnessReport::to_text)))
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::Input
            } else {
                ExitCode::Ok
            };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match execute(&cli) {
        Ok((code, stdout)) => Outcome {
            code,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_model::GroupDescriptor;

    #[test]
    fn ring_reports() {
        let g = GroupDescriptor::cofinite(&[7]).validate().unwrap();
        let r = cmd_ring(&g).unwrap();
        assert_eq!(r.q, 3);
        assert!(r.verified && !r.trivial && r.clause.is_none());
        assert!(r.to_text().contains("running gcd [6]"));

        let g = GroupDescriptor::cofinite(&[3]).validate().unwrap();
        let r = cmd_ring(&g).unwrap();
        assert_eq!(r.q, 1);
        assert!(r.clause.unwrap().contains("Fermat prime missing from S: 3"));

        let g = GroupDescriptor::finite(&[2, 3, 5]).validate().unwrap();
        let r = cmd_ring(&g).unwrap();
        assert!(r.trivial && r.verified);
        assert!(r.to_text().contains("3 does not divide 11 - 1"));
    }

    #[test]
    fn witness_examples() {
        let w = cmd_witness(7, 3, 1000).unwrap();
        assert_eq!((w.residue, w.modulus, w.prime), (20, 21, 41));
        assert_eq!(cmd_witness(2, 3, 1000).unwrap().prime, 5);
        let e = cmd_witness(3, 3, 1000).unwrap_err();
        assert_eq!(e.exit_code(), ExitCode::Input);
        let e = cmd_witness(7, 3, 30).unwrap_err();
        assert_eq!(e.exit_code(), ExitCode::Resource);
    }

    #[test]
    fn eval_text() {
        let g = GroupDescriptor::cofinite(&[7]).validate().unwrap();
        let run = |s: &str| {
            cmd_eval(&g, s, Limits::default(), false)
                .unwrap()
                .to_text(false)
        };
        assert_eq!(run("0 < x0 and x0 < 1"), "2 + 0*X (mod 3)\n");
        assert_eq!(run("0 < x0"), "0 + 1*X (mod 3)\n");
        assert_eq!(run("x0 = x0"), "1 + 2*X (mod 3)\n");
        let r = cmd_eval(&g, "div(7, x0)", Limits::default(), true).unwrap();
        assert_eq!((r.l, r.tuples, r.surviving_tuples), (7, 7, 1));
        assert!(r.trace.is_some());
    }

    #[test]
    fn parse_failures_exit_2() {
        let out = run(["k0group", "witness", "7"]);
        assert_eq!(out.code, ExitCode::Input);
        let out = run(["k0group", "--help"]);
        assert_eq!(out.code, ExitCode::Ok);
        assert!(out.stdout.contains("witness"));
        let out = run(["k0group", "check", "--suite", "/nonexistent/suite.json"]);
        assert_eq!(out.code, ExitCode::Input);
    }
}
