use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};

use twr_core::harness::{is_acceptable_status, run_preset, write_csv, ExperimentPreset, Overrides, Preset};
use twr_core::model::ConfigFile;
use twr_core::sca::Algorithm;

/// Monte Carlo sweeps of the FD, TF and HD two-way relay optimizers.
///
/// Either pick a named preset or describe a single scenario with --k, --m
/// and --nr. Explicit flags override the matching preset fields. The CSV
/// goes to --out, or to stdout.
#[derive(Debug, Parser)]
#[command(name = "twr", version)]
#[command(group(ArgGroup::new("sweep").required(true).multiple(true).args(["preset", "k"])))]
struct Cli {
    /// fig3_minrate_k2, fig4_minrate_k3, fig5_ee_k2, fig6_sumrate_k2,
    /// fig7_power_k2, fig8_ee_k3 or table_iters
    #[arg(long)]
    preset: Option<Preset>,

    /// Number of user pairs
    #[arg(long)]
    k: Option<usize>,

    /// Number of relays (with --nr)
    #[arg(long, requires = "nr")]
    m: Option<usize>,

    /// Antennas per FD relay (with --m)
    #[arg(long, requires = "m")]
    nr: Option<usize>,

    /// Self-interference levels in dB, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    si_db: Option<Vec<f64>>,

    /// Algorithms, comma separated, e.g. fd_maximin,tf_ee,hd_ee
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm)]
    algo: Option<Vec<Algorithm>>,

    /// Channel realizations per point (default 100)
    #[arg(long)]
    realizations: Option<usize>,

    /// Master seed; realization r uses seed + r
    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    out: Option<PathBuf>,

    /// JSON file with model overrides
    #[arg(long)]
    config: Option<PathBuf>,

    /// Write 0 in runtime_ms so identical runs give identical files
    #[arg(long)]
    no_timing: bool,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    Algorithm::from_label(s).map_err(|e| e.to_string())
}

fn plan(cli: &Cli) -> Result<(ExperimentPreset, Overrides), String> {
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Some(serde_json::from_str::<ConfigFile>(&text).map_err(|e| format!("{}: {e}", path.display()))?)
        }
        None => None,
    };
    let file = config.clone().unwrap_or_default();
    let k = cli.k.or(file.k);
    let scenario = match (cli.m.or(file.m), cli.nr.or(file.n_r)) {
        (Some(m), Some(n_r)) => Some((m, n_r)),
        (None, None) => None,
        _ => return Err("relay count and antenna count must be given together".into()),
    };
    let file_si = file.si_db.or(file.si_lin.map(|v| 10.0 * v.log10()));
    let si_db = cli.si_db.clone().or(file_si.map(|v| vec![v]));
    let base = match cli.preset {
        Some(p) => ExperimentPreset::new(p),
        None => ExperimentPreset::custom(
            k.ok_or("--k is required without --preset")?,
            scenario.map_or(1, |s| s.0),
            scenario.map_or(1, |s| s.1),
            si_db.clone().unwrap_or_else(|| twr_core::harness::SI_SWEEP_DB.to_vec()),
            Algorithm::ALL.to_vec(),
        ),
    };
    let ov = Overrides {
        ks: k.map(|k| vec![k]),
        scenarios: scenario.map(|s| vec![s]),
        si_db,
        algorithms: cli.algo.clone(),
        realizations: cli.realizations,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        config,
        timing: !cli.no_timing,
    };
    if ov.ks.as_ref().is_some_and(|v| v.contains(&0)) || ov.realizations == Some(0) {
        return Err("--k and --realizations must be positive".into());
    }
    Ok((base, ov))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (preset, ov) = match plan(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("twr: {e}");
            return ExitCode::from(2);
        }
    };
    let rows = match run_preset(&preset, &ov) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("twr: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &cli.out {
        Some(path) => File::create(path).map_err(Into::into).and_then(|f| write_csv(&rows, BufWriter::new(f))),
        None => write_csv(&rows, io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("twr: {e}");
        return ExitCode::from(2);
    }
    let _ = io::stdout().flush();
    let bad = rows.iter().filter(|r| !is_acceptable_status(&r.status)).count();
    if bad > 0 {
        eprintln!("twr: {bad} of {} rows did not converge", rows.len());
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
