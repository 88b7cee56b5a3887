use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use suq2_core::qcore::Tolerances;
use suq2_core::suites::{run, Format, Report, RunConfig, Suite};
use suq2_core::{Error, C64};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

/// Verification suites for the truncated spectral triple on quantum SU(2).
#[derive(Debug, Parser)]
#[command(name = "suq2", version)]
struct Cli {
    /// Deformation parameter, 0 < q < 1.
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Highest level 2j kept in the truncation.
    #[arg(long = "max-two-j", default_value_t = 16)]
    max_two_j: u32,
    /// Levels below the cutoff excluded from identity checks.
    #[arg(long, default_value_t = 4)]
    guard: u32,
    #[arg(long = "tol-relation", default_value_t = Tolerances::default().relation_tol)]
    tol_relation: f64,
    #[arg(long = "tol-residue", default_value_t = Tolerances::default().residue_tol)]
    tol_residue: f64,
    #[arg(long = "tol-decay", default_value_t = Tolerances::default().decay_tol)]
    tol_decay: f64,
    /// Suite to run; repeat for several. All suites when omitted.
    #[arg(long = "suite", value_name = "SUITE")]
    suites: Vec<Suite>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// json or csv.
    #[arg(long, default_value = "json")]
    format: Format,
}

impl Cli {
    fn config(self) -> RunConfig {
        RunConfig {
            q: self.q,
            max_two_j: self.max_two_j,
            guard: self.guard,
            tolerances: Tolerances {
                relation_tol: self.tol_relation,
                residue_tol: self.tol_residue,
                decay_tol: self.tol_decay,
            },
            suites: if self.suites.is_empty() {
                Suite::ALL.to_vec()
            } else {
                self.suites
            },
            output: self.output,
            format: self.format,
        }
    }
}

fn complex_cell(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn render_csv(report: &Report) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let residues_only = report.config.suites.iter().all(|s| *s == Suite::Residues);
    if residues_only {
        w.write_record(["T", "k", "analytic", "numeric", "discrepancy"])?;
        for r in &report.residue_rows {
            w.write_record([
                r.term.clone(),
                r.k.to_string(),
                complex_cell(r.analytic),
                complex_cell(r.numeric),
                format!("{:e}", r.discrepancy),
            ])?;
        }
    } else {
        w.write_record(["name", "anchor", "expected", "computed", "provenance", "pass"])?;
        for c in &report.checks {
            w.write_record([
                c.name.clone(),
                c.anchor.clone(),
                c.expected.to_string(),
                c.computed.to_string(),
                serde_json::to_value(c.provenance)?.as_str().unwrap_or_default().to_string(),
                c.pass.to_string(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn emit(report: &Report) -> anyhow::Result<()> {
    let text = match report.config.format {
        Format::Json => report.to_json()?,
        Format::Csv => render_csv(report)?,
    };
    match &report.config.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let config = Cli::parse().config();
    let report = match run(&config) {
        Ok(r) => r,
        Err(e @ (Error::InvalidQ(_) | Error::InvalidTolerance { .. } | Error::InvalidTruncation(_) | Error::InvalidConfig(_))) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    if let Err(e) = emit(&report) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_IO);
    }
    let s = &report.summary;
    eprintln!("{} of {} checks passed", s.passed, s.total);
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: expected {}, computed {}", c.name, c.expected, c.computed);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}
