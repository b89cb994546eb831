//! Monte Carlo sweeps over the reference scenarios and their CSV output.
//!
//! A sweep visits `(K, (M, N_R), σ_SI², realization, algorithm)` in that
//! order. Channels depend only on the realization seed, so all algorithms
//! and SI levels of one realization share them. The TF and HD models do not
//! contain the SI level; their runs are computed once per realization and
//! repeated across the SI sweep.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{generate_channels, ChannelSet, ConfigFile, Mode, NetworkConfig};
use crate::oracle::{grid_beamformer, grid_search_tiny, GridSpec};
use crate::physics::Couplings;
use crate::sca::{
    run_fd_ee, run_fd_maximin, run_hd_baseline, run_tf_ee, run_tf_maximin, Algorithm, Objective, RunRecord, RunStatus,
};

pub const SCENARIOS: [(usize, usize); 3] = [(1, 8), (2, 4), (4, 2)];
pub const SI_SWEEP_DB: [f64; 5] = [-150.0, -140.0, -130.0, -120.0, -110.0];
pub const DEFAULT_REALIZATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Fig3MinrateK2,
    Fig4MinrateK3,
    Fig5EeK2,
    Fig6SumrateK2,
    Fig7PowerK2,
    Fig8EeK3,
    TableIters,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Fig3MinrateK2,
        Preset::Fig4MinrateK3,
        Preset::Fig5EeK2,
        Preset::Fig6SumrateK2,
        Preset::Fig7PowerK2,
        Preset::Fig8EeK3,
        Preset::TableIters,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3MinrateK2 => "fig3_minrate_k2",
            Preset::Fig4MinrateK3 => "fig4_minrate_k3",
            Preset::Fig5EeK2 => "fig5_ee_k2",
            Preset::Fig6SumrateK2 => "fig6_sumrate_k2",
            Preset::Fig7PowerK2 => "fig7_power_k2",
            Preset::Fig8EeK3 => "fig8_ee_k3",
            Preset::TableIters => "table_iters",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}

/// One sweep: every combination of pair count, scenario and SI level, each
/// averaged over `realizations` channel draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub ks: Vec<usize>,
    pub scenarios: Vec<(usize, usize)>,
    pub si_db: Vec<f64>,
    pub realizations: usize,
    pub algorithms: Vec<Algorithm>,
}

impl ExperimentPreset {
    pub fn new(preset: Preset) -> Self {
        use Algorithm::*;
        let (ks, algorithms) = match preset {
            Preset::Fig3MinrateK2 => (vec![2], vec![FdMaximin, TfMaximin, HdMaximin]),
            Preset::Fig4MinrateK3 => (vec![3], vec![FdMaximin, TfMaximin, HdMaximin]),
            Preset::Fig5EeK2 | Preset::Fig6SumrateK2 | Preset::Fig7PowerK2 => (vec![2], vec![FdEe, TfEe, HdEe]),
            Preset::Fig8EeK3 => (vec![3], vec![FdEe, TfEe, HdEe]),
            Preset::TableIters => (vec![2, 3], vec![FdMaximin, TfMaximin, FdEe, TfEe]),
        };
        ExperimentPreset {
            name: preset.name().into(),
            ks,
            scenarios: SCENARIOS.to_vec(),
            si_db: SI_SWEEP_DB.to_vec(),
            realizations: DEFAULT_REALIZATIONS,
            algorithms,
        }
    }

    /// A single-scenario sweep assembled from command-line values.
    pub fn custom(k: usize, m: usize, n_r: usize, si_db: Vec<f64>, algorithms: Vec<Algorithm>) -> Self {
        ExperimentPreset {
            name: "custom".into(),
            ks: vec![k],
            scenarios: vec![(m, n_r)],
            si_db,
            realizations: DEFAULT_REALIZATIONS,
            algorithms,
        }
    }

    pub fn row_count(&self) -> usize {
        self.ks.len() * self.scenarios.len() * self.si_db.len() * self.realizations * self.algorithms.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overrides {
    pub ks: Option<Vec<usize>>,
    pub scenarios: Option<Vec<(usize, usize)>>,
    pub si_db: Option<Vec<f64>>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub realizations: Option<usize>,
    pub seed: u64,
    /// Model overrides applied on top of each scenario's reference settings.
    pub config: Option<ConfigFile>,
    /// Record wall-clock time per run; without it `runtime_ms` is zero and
    /// the CSV is byte-for-byte reproducible.
    pub timing: bool,
}

impl Default for Overrides {
    fn default() -> Self {
        Overrides { ks: None, scenarios: None, si_db: None, algorithms: None, realizations: None, seed: 0, config: None, timing: true }
    }
}

impl Overrides {
    pub fn apply(&self, preset: &ExperimentPreset) -> ExperimentPreset {
        let mut p = preset.clone();
        if let Some(v) = &self.ks {
            p.ks = v.clone();
        }
        if let Some(v) = &self.scenarios {
            p.scenarios = v.clone();
        }
        if let Some(v) = &self.si_db {
            p.si_db = v.clone();
        }
        if let Some(v) = &self.algorithms {
            p.algorithms = v.clone();
        }
        if let Some(v) = self.realizations {
            p.realizations = v;
        }
        p
    }
}

/// One CSV line. Rates are in nats per channel use (bits alongside), powers
/// in watts and energy efficiency in nats per joule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub preset: String,
    pub realization: String,
    pub seed: u64,
    pub algorithm: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N_R")]
    pub n_r: usize,
    pub si_db: f64,
    pub iterations: f64,
    pub objective_nats: f64,
    pub objective_bits: f64,
    pub sum_rate_nats: f64,
    pub total_tx_power_w: f64,
    pub physical_ee: f64,
    pub tau: Option<f64>,
    pub status: String,
    pub runtime_ms: f64,
}

pub const CSV_HEADER: [&str; 17] = [
    "preset",
    "realization",
    "seed",
    "algorithm",
    "K",
    "M",
    "N_R",
    "si_db",
    "iterations",
    "objective_nats",
    "objective_bits",
    "sum_rate_nats",
    "total_tx_power_w",
    "physical_ee",
    "tau",
    "status",
    "runtime_ms",
];

/// Statuses that count as a successful run for the exit code.
pub fn is_acceptable_status(s: &str) -> bool {
    s == RunStatus::Converged.label() || s == RunStatus::QosInfeasible.label() || s.starts_with("converged_fraction=")
}

const BASELINE_FAILURE: &str = "baseline_failure";

/// Seed of realization `r` under master seed `master`.
pub fn realization_seed(master: u64, r: usize) -> u64 {
    master.wrapping_add(r as u64)
}

/// `r_k = ½ · min-pair throughput of the HD maximin baseline` for every pair.
pub fn derive_qos_thresholds(ch: &ChannelSet, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    qos_from(&run_hd_baseline(ch, cfg, Objective::Maximin, &[]), cfg)
}

fn qos_from(base: &RunRecord, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    let v = base.objective();
    if base.status == RunStatus::SubproblemFailure || !(v.is_finite() && v >= 0.0) {
        return Err(Error::Solver(format!(
            "HD baseline ended with {} ({})",
            base.status.label(),
            base.diagnostics.failure.as_deref().unwrap_or("no objective")
        )));
    }
    Ok(vec![0.5 * v; cfg.k])
}

struct Context<'a> {
    preset: &'a str,
    seed: u64,
    realization: usize,
    k: usize,
    m: usize,
    n_r: usize,
    si_db: f64,
    timing: bool,
}

impl Context<'_> {
    fn row(&self, algorithm: &str) -> ResultRow {
        ResultRow {
            preset: self.preset.into(),
            realization: self.realization.to_string(),
            seed: self.seed,
            algorithm: algorithm.into(),
            k: self.k,
            m: self.m,
            n_r: self.n_r,
            si_db: self.si_db,
            iterations: 0.0,
            objective_nats: f64::NAN,
            objective_bits: f64::NAN,
            sum_rate_nats: f64::NAN,
            total_tx_power_w: f64::NAN,
            physical_ee: f64::NAN,
            tau: None,
            status: String::new(),
            runtime_ms: 0.0,
        }
    }

    fn record_row(&self, r: &RunRecord) -> ResultRow {
        let obj = r.objective();
        ResultRow {
            iterations: r.iterations as f64,
            objective_nats: obj,
            objective_bits: obj / std::f64::consts::LN_2,
            sum_rate_nats: r.sum_rate(),
            total_tx_power_w: r.total_tx_power,
            physical_ee: r.physical_ee,
            tau: r.tau(),
            status: r.status.label().into(),
            runtime_ms: if self.timing { r.wall_time.as_secs_f64() * 1e3 } else { 0.0 },
            ..self.row(r.algorithm.label())
        }
    }
}

/// Grid-search reference for the single-pair scenario, reported as an
/// extra row named `<algorithm>_grid`.
fn oracle_row(ctx: &Context<'_>, algorithm: Algorithm, ch: &ChannelSet, cfg: &NetworkConfig, qos: &[f64]) -> ResultRow {
    let mode = algorithm.mode();
    let obj = algorithm.objective();
    let mut spec = match (mode, obj) {
        (Mode::Tf, Objective::Ee) => GridSpec::with_points(mode, obj, cfg, 60, 25),
        _ => GridSpec::default_for(mode, obj, cfg),
    };
    spec.min_rate = qos.first().copied().unwrap_or(0.0);
    let name = format!("{}_grid", algorithm.label());
    let start = std::time::Instant::now();
    let found = grid_search_tiny(ch, cfg, &spec).and_then(|g| {
        let w = grid_beamformer(ch, g.argmax.w);
        let c = Couplings::new(&w, ch)?;
        Ok((g, w, c))
    });
    let mut row = ctx.row(&name);
    match found {
        Ok((g, _, c)) => {
            let p = g.argmax.p;
            let (rates, tx) = match g.argmax.tau {
                None => (c.pair_rates_fd(&p, ch, cfg), p.iter().sum::<f64>() + c.relay_power_fd(&p, cfg, 0)),
                Some(t) => (
                    c.pair_rates_tf(&p, cfg, t),
                    t * p.iter().sum::<f64>() + (1.0 - t) * c.relay_power_tf(&p, cfg, t, 0),
                ),
            };
            let consumption = match g.argmax.tau {
                None => c.consumption_fd(&p, cfg),
                Some(t) => c.consumption_tf(&p, cfg, t),
            };
            row.objective_nats = g.best;
            row.objective_bits = g.best / std::f64::consts::LN_2;
            row.sum_rate_nats = rates.iter().sum();
            row.total_tx_power_w = tx;
            row.physical_ee = row.sum_rate_nats / consumption;
            row.tau = g.argmax.tau;
            row.status = RunStatus::Converged.label().into();
        }
        Err(Error::Infeasible(_)) => row.status = RunStatus::QosInfeasible.label().into(),
        Err(e) => row.status = format!("oracle_error: {e}"),
    }
    if ctx.timing {
        row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    row
}

fn scenario_config(base: &Option<ConfigFile>, k: usize, m: usize, n_r: usize, si_db: f64, seed: u64) -> Result<NetworkConfig> {
    let mut cfg = NetworkConfig::experiment(k, m, n_r, si_db);
    if let Some(file) = base {
        let mut file = file.clone();
        file.k = None;
        file.m = None;
        file.n_r = None;
        file.si_db = None;
        file.si_lin = None;
        file.seed = None;
        cfg = file.apply_to(&cfg)?;
    }
    cfg.seed = seed;
    Ok(cfg)
}

/// Runs the sweep and returns every row, per-run rows first and the
/// per-point averages (`realization = "avg"`) after them.
pub fn run_preset(preset: &ExperimentPreset, ov: &Overrides) -> Result<Vec<ResultRow>> {
    let plan = ov.apply(preset);
    if plan.realizations == 0 || plan.algorithms.is_empty() || plan.si_db.is_empty() {
        return Err(Error::Config("sweep has no realizations, algorithms or SI levels".into()));
    }
    let mut rows = Vec::with_capacity(plan.row_count());
    for &k in &plan.ks {
        for &(m, n_r) in &plan.scenarios {
            // SI-free runs and thresholds, keyed by realization
            let mut tf_cache: HashMap<(usize, Algorithm), ResultRow> = HashMap::new();
            let mut qos_cache: HashMap<usize, std::result::Result<Vec<f64>, String>> = HashMap::new();
            for &si_db in &plan.si_db {
                for r in 0..plan.realizations {
                    let seed = realization_seed(ov.seed, r);
                    let cfg = scenario_config(&ov.config, k, m, n_r, si_db, seed)?;
                    let ctx = Context { preset: &plan.name, seed, realization: r, k, m, n_r, si_db, timing: ov.timing };
                    let needs_tf = plan.algorithms.iter().any(|a| a.mode() == Mode::Tf || a.objective() == Objective::Ee);
                    let tf_ch = needs_tf.then(|| generate_channels(&cfg, Mode::Tf, seed));
                    let needs_fd = plan.algorithms.iter().any(|a| a.mode() == Mode::Fd);
                    let fd_ch = needs_fd.then(|| generate_channels(&cfg, Mode::Fd, seed));
                    for &alg in &plan.algorithms {
                        let qos = if alg.objective() == Objective::Ee {
                            let ch = tf_ch.as_ref().expect("TF channels drawn for EE runs");
                            qos_cache
                                .entry(r)
                                .or_insert_with(|| derive_qos_thresholds(ch, &cfg).map_err(|e| e.to_string()))
                                .clone()
                        } else {
                            Ok(Vec::new())
                        };
                        let qos = match qos {
                            Ok(q) => q,
                            Err(_) => {
                                let mut row = ctx.row(alg.label());
                                row.status = BASELINE_FAILURE.into();
                                rows.push(row);
                                continue;
                            }
                        };
                        let row = match alg.mode() {
                            Mode::Fd => {
                                let ch = fd_ch.as_ref().expect("FD channels drawn for FD runs");
                                let rec = match alg {
                                    Algorithm::FdMaximin => run_fd_maximin(ch, &cfg),
                                    _ => run_fd_ee(ch, &cfg, &qos),
                                };
                                ctx.record_row(&rec)
                            }
                            Mode::Tf => {
                                let ch = tf_ch.as_ref().expect("TF channels drawn for TF runs");
                                let cached = tf_cache.entry((r, alg)).or_insert_with(|| {
                                    let rec = match alg {
                                        Algorithm::TfMaximin => run_tf_maximin(ch, &cfg),
                                        Algorithm::TfEe => run_tf_ee(ch, &cfg, &qos),
                                        Algorithm::HdMaximin => run_hd_baseline(ch, &cfg, Objective::Maximin, &[]),
                                        _ => run_hd_baseline(ch, &cfg, Objective::Ee, &qos),
                                    };
                                    ctx.record_row(&rec)
                                });
                                ResultRow { si_db, ..cached.clone() }
                            }
                        };
                        rows.push(row);
                        let scalar = k == 1 && m == 1 && n_r == 1;
                        if scalar && matches!(alg, Algorithm::FdMaximin | Algorithm::FdEe | Algorithm::TfMaximin | Algorithm::TfEe) {
                            let ch = match alg.mode() {
                                Mode::Fd => fd_ch.as_ref(),
                                Mode::Tf => tf_ch.as_ref(),
                            };
                            rows.push(oracle_row(&ctx, alg, ch.expect("channels drawn"), &cfg, &qos));
                        }
                    }
                }
            }
        }
    }
    let avg = averages(&rows, ov.seed);
    rows.extend(avg);
    Ok(rows)
}

/// Per-point means over converged rows, one per `(K, M, N_R, σ_SI², algorithm)`
/// in first-appearance order. The status column carries the converged fraction.
pub fn averages(rows: &[ResultRow], master_seed: u64) -> Vec<ResultRow> {
    let mut order: Vec<(usize, usize, usize, u64, String)> = Vec::new();
    let mut groups: HashMap<(usize, usize, usize, u64, String), Vec<&ResultRow>> = HashMap::new();
    for row in rows.iter().filter(|r| r.realization != "avg") {
        let key = (row.k, row.m, row.n_r, row.si_db.to_bits(), row.algorithm.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(row);
    }
    order
        .into_iter()
        .map(|key| {
            let all = &groups[&key];
            let ok: Vec<&&ResultRow> = all.iter().filter(|r| r.status == RunStatus::Converged.label()).collect();
            let n = ok.len() as f64;
            let mean = |f: &dyn Fn(&ResultRow) -> f64| if ok.is_empty() { f64::NAN } else { ok.iter().map(|r| f(r)).sum::<f64>() / n };
            let first = all[0];
            let tau = if first.tau.is_some() { Some(mean(&|r| r.tau.unwrap_or(f64::NAN))) } else { None };
            ResultRow {
                preset: first.preset.clone(),
                realization: "avg".into(),
                seed: master_seed,
                algorithm: first.algorithm.clone(),
                k: first.k,
                m: first.m,
                n_r: first.n_r,
                si_db: first.si_db,
                iterations: mean(&|r| r.iterations),
                objective_nats: mean(&|r| r.objective_nats),
                objective_bits: mean(&|r| r.objective_bits),
                sum_rate_nats: mean(&|r| r.sum_rate_nats),
                total_tx_power_w: mean(&|r| r.total_tx_power_w),
                physical_ee: mean(&|r| r.physical_ee),
                tau,
                status: format!("converged_fraction={:.4}", n / all.len() as f64),
                runtime_ms: mean(&|r| r.runtime_ms),
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
