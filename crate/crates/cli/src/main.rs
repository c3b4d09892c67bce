use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use varrcwa::harness::{
    parse_grid, parse_methods, report_summary, run_sweep, write_smatrix_csv, write_sweep_csv,
    SweepConfig, DEFAULT_ORACLE_SECTIONS,
};
use varrcwa::solver::DEFAULT_MAX_DEPTH;
use varrcwa::validate::{check_names, run_checks, Fault};
use varrcwa::{parse_structure, solve_adaptive, solve_uniform, Error, Order, ReferenceRule, SolveReport, SolverConfig, StructureSpec};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "varrcwa", version, about = "Adaptive first-order scattering-matrix solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reference {
    Midpoint,
    Endpoint,
}

impl From<Reference> for ReferenceRule {
    fn from(r: Reference) -> Self {
        match r {
            Reference::Midpoint => ReferenceRule::Midpoint,
            Reference::Endpoint => ReferenceRule::Endpoint,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InjectedFault {
    TmSign,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptive solve to a target accuracy
    Solve {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "midpoint")]
        reference: Reference,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
        order: u8,
        /// Children per subdivision; defaults to 3 for midpoint, 2 for endpoint
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        subdivisions: Option<u8>,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
        /// Scattering-matrix CSV destination; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary destination; printed when absent
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fixed number of equal sections
    Uniform {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        sections: u64,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        order: u8,
        #[arg(long, value_enum, default_value = "midpoint")]
        reference: Reference,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Error and cost of each method over a knob grid against a fine reference cascade
    Sweep {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, default_value = "uniform0,uniform1,adaptive")]
        methods: String,
        /// Section counts for uniform methods (also alphas when --alpha-grid is absent)
        #[arg(long)]
        grid: String,
        /// Alphas for the adaptive method
        #[arg(long)]
        alpha_grid: Option<String>,
        #[arg(long, default_value_t = DEFAULT_ORACLE_SECTIONS)]
        oracle_sections: usize,
        #[arg(long, value_enum, default_value = "midpoint")]
        reference: Reference,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in analytic checks
    Validate {
        #[arg(long)]
        list: bool,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<InjectedFault>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERIC };
        Failure { code, message: e.to_string() }
    }
}

fn input_failure(message: String) -> Failure {
    Failure { code: EXIT_INPUT, message }
}

fn load_structure(path: &Path) -> Result<StructureSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_failure(format!("cannot read structure file {}: {e}", path.display())))?;
    parse_structure(&text).map_err(|e| {
        let f = Failure::from(e);
        Failure { code: f.code, message: format!("{}: {}", path.display(), f.message) }
    })
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => {
            let f = File::create(p)
                .map_err(|e| input_failure(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn emit_report(report: &SolveReport, out: &Option<PathBuf>, dest: &Option<PathBuf>) -> Result<(), Failure> {
    write_smatrix_csv(open_out(out)?, &report.smat)?;
    let summary = serde_json::to_string_pretty(&report_summary(report)).expect("summary serializes");
    match (dest, out) {
        (Some(p), _) => std::fs::write(p, summary + "\n")
            .map_err(|e| input_failure(format!("cannot write {}: {e}", p.display())))?,
        (None, Some(_)) => println!("{summary}"),
        // the matrix went to stdout, so keep the summary separate
        (None, None) => eprintln!("{summary}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { structure, alpha, reference, order, subdivisions, max_depth, out, report } => {
            let spec = load_structure(&structure)?;
            let rule = ReferenceRule::from(reference);
            let mut cfg = SolverConfig::with_rule(alpha, rule);
            if let Some(m) = subdivisions {
                cfg.subdivision_m = m as usize;
            }
            cfg.max_depth = max_depth;
            cfg.order = Order::from_index(order).expect("range-checked by clap");
            let rep = solve_adaptive(&spec, &cfg)?;
            emit_report(&rep, &out, &report)
        }
        Command::Uniform { structure, sections, order, reference, out, report } => {
            let spec = load_structure(&structure)?;
            let order = Order::from_index(order).expect("range-checked by clap");
            let rep = solve_uniform(&spec, sections as usize, order, reference.into())?;
            emit_report(&rep, &out, &report)
        }
        Command::Sweep { structure, methods, grid, alpha_grid, oracle_sections, reference, out } => {
            let methods = parse_methods(&methods)?;
            let grid = parse_grid(&grid)?;
            let alpha_grid = alpha_grid.as_deref().map(parse_grid).transpose()?;
            let spec = load_structure(&structure)?;
            let cfg = SweepConfig { methods, grid, alpha_grid, oracle_sections, reference_rule: reference.into() };
            let rows = run_sweep(&spec, &cfg)?;
            write_sweep_csv(open_out(&out)?, &rows)?;
            Ok(())
        }
        Command::Validate { list, inject_fault } => {
            if list {
                for name in check_names() {
                    println!("{name}");
                }
                return Ok(());
            }
            let fault = match inject_fault {
                None => Fault::None,
                Some(InjectedFault::TmSign) => Fault::TmSignFlip,
            };
            let results = run_checks(fault);
            let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
            for r in &results {
                println!("{:width$}  {}  {}", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail);
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(Failure { code: EXIT_NUMERIC, message: format!("{failed} check(s) failed") });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
