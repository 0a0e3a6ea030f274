//! Command-line frontend: reads a JSON run configuration, dispatches to the
//! library and writes a CSV table preceded by `# key: value` metadata.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use sha2::{Digest, Sha256};

pub mod commands;
pub mod config;

pub use commands::{dispatch, Output, COMMANDS};
pub use config::{Loaded, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn in_config(self, path: &Path) -> Self {
        let p = path.display();
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{p}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("{p}: {m}")),
        }
    }
}

impl From<superhedge::Error> for CliError {
    fn from(e: superhedge::Error) -> Self {
        use superhedge::Error::*;
        match e {
            InvalidInput(_) | DegenerateGrid(_) | SingularVolatility | InfeasibleControl { .. } | Range(_) | Io(_) | Table(_) => {
                CliError::Validation(e.to_string())
            }
            DensityOverflow { .. }
            | Stability { .. }
            | Scheme(_)
            | Iteration { .. }
            | Accuracy { .. }
            | Conditioning { .. }
            | Rejection { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "superhedge", version, about = "Constrained and risk-based option pricing")]
pub struct Args {
    /// One of: price-bs, price-exchange, facelift, pde-linear, pde-constrained,
    /// pde-bsb, quantile, shortfall, dual-bound, hedge-sim, gamma-exp,
    /// liquidate, convergence.
    pub command: String,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides `mc.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub quiet: bool,
}

/// Parses the file and applies the seed override.
pub fn load(path: &Path, seed: Option<u64>) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read config: {e}")))?;
    let mut config: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("bad config: {e}")))?;
    if let Some(s) = seed {
        config.mc.get_or_insert_with(Default::default).seed = Some(s);
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

/// Hex SHA-256 of the effective configuration.
pub fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Renders the metadata block and the table.
pub fn render(command: &str, cfg: &Loaded, out: &Output) -> String {
    let mut meta = vec![
        ("command".to_string(), command.to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("seed".to_string(), cfg.seed().to_string()),
        ("config_hash".to_string(), config_hash(&cfg.config)),
    ];
    meta.extend(out.meta.iter().cloned());
    let mut buf = Vec::new();
    let headers: Vec<&str> = out.headers.iter().map(String::as_str).collect();
    superhedge::io::write_table(&mut buf, &meta, &headers, &out.rows).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Runs one command and returns the file written.
pub fn execute(args: &Args) -> Result<PathBuf, CliError> {
    let cfg = load(&args.config, args.seed).map_err(|e| e.in_config(&args.config))?;
    if !COMMANDS.contains(&args.command.as_str()) {
        return Err(CliError::Validation(format!("unknown command {:?}; expected one of {}", args.command, COMMANDS.join(", "))));
    }
    if let Some(c) = &cfg.config.command {
        if c != &args.command {
            return Err(CliError::Validation(format!("config is for {c:?}, not {:?}", args.command)).in_config(&args.config));
        }
    }
    let out = dispatch(&args.command, &cfg).map_err(|e| e.in_config(&args.config))?;
    let text = render(&args.command, &cfg, &out);
    fs::create_dir_all(&args.out).map_err(|e| CliError::Validation(format!("{}: {e}", args.out.display())))?;
    let name = cfg.config.output.clone().unwrap_or_else(|| format!("{}.csv", args.command));
    let path = args.out.join(name);
    fs::write(&path, text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if !args.quiet {
        let headline = out.meta.iter().find(|(k, _)| k == "price" || k == "y_star" || k == "best_bound" || k == "log_log_slope");
        match headline {
            Some((k, v)) => println!("{}: {k} = {v}", path.display()),
            None => println!("{}", path.display()),
        }
    }
    Ok(path)
}

/// Entry point shared by the binary: parses arguments and maps errors to
/// exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
