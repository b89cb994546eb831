//! Path-following drivers for the FD and TF problems, their lifted
//! variables, initialisation and recovery, and the frozen-τ HD baseline.
//!
//! Every driver alternates between building a conic inner approximation at
//! the incumbent ([`program`]), solving it, and re-tightening the slack
//! variables that the subproblem leaves loose. Tightening never lowers the
//! tracked objective, so the traces ascend.

mod drivers;
pub mod program;
pub mod subspace;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ChannelSet, Mode, NetworkConfig};
use crate::physics::{check_feasibility, BeamformerSet, Couplings, PowerAllocation};
use crate::surrogates::{fd_pi, tf_pi};
use crate::Complex64;

pub use drivers::{
    run_fd_ee, run_fd_maximin, run_hd_baseline, run_tf_ee, run_tf_maximin, step_fd_ee, step_fd_maximin,
    step_tf_ee, step_tf_maximin, polish_fd, polish_tf, Objective, Step,
};

/// Lifted FD variables: `β_k = 1/p_k²` and denominator slacks `α_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdIterate {
    pub w: BeamformerSet,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Lifted TF variables with the time-fraction couplings `t₁ ≥ 1/τ²` and
/// `t₂ ≥ 1/(1 − τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIterate {
    pub w: BeamformerSet,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub t1: f64,
    pub t2: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    IterationLimit,
    SubproblemFailure,
    QosInfeasible,
}

impl RunStatus {
    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::IterationLimit => "iteration_limit",
            RunStatus::SubproblemFailure => "subproblem_failure",
            RunStatus::QosInfeasible => "qos_infeasible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    FdMaximin,
    FdEe,
    TfMaximin,
    TfEe,
    HdMaximin,
    HdEe,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::FdMaximin,
        Algorithm::TfMaximin,
        Algorithm::HdMaximin,
        Algorithm::FdEe,
        Algorithm::TfEe,
        Algorithm::HdEe,
    ];

    pub fn from_label(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }

    pub fn objective(self) -> Objective {
        match self {
            Algorithm::FdMaximin | Algorithm::TfMaximin | Algorithm::HdMaximin => Objective::Maximin,
            _ => Objective::Ee,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::FdMaximin => "fd_maximin",
            Algorithm::FdEe => "fd_ee",
            Algorithm::TfMaximin => "tf_maximin",
            Algorithm::TfEe => "tf_ee",
            Algorithm::HdMaximin => "hd_maximin",
            Algorithm::HdEe => "hd_ee",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Algorithm::FdMaximin | Algorithm::FdEe => Mode::Fd,
            _ => Mode::Tf,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Maximin steps spent reaching the QoS thresholds (EE drivers only).
    pub warmup_iterations: usize,
    /// Subproblem solutions discarded because the tracked objective fell.
    pub rejected_steps: usize,
    /// Interior-point iterations summed over all subproblems.
    pub solver_iterations: usize,
    /// Worst relative excess over any power limit among the initial point
    /// and every accepted iterate.
    pub max_violation: f64,
    /// Message of the error that ended the run, if any.
    pub failure: Option<String>,
}

/// Outcome of one driver run on one channel realisation.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    /// Tracked objective after initialisation and after every accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub status: RunStatus,
    pub power: PowerAllocation,
    pub w: BeamformerSet,
    /// Physical exchange throughput of each pair, nats per channel use.
    pub pair_rates: Vec<f64>,
    pub physical_ee: f64,
    /// UE plus relay transmit power, watts.
    pub total_tx_power: f64,
    pub wall_time: std::time::Duration,
    pub diagnostics: Diagnostics,
}

impl RunRecord {
    pub fn objective(&self) -> f64 {
        self.trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn min_rate(&self) -> f64 {
        self.pair_rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum_rate(&self) -> f64 {
        self.pair_rates.iter().sum()
    }

    pub fn tau(&self) -> Option<f64> {
        self.power.tau
    }
}

fn positive_powers(p: &[f64]) -> Result<()> {
    match p.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(v) => Err(Error::Domain(format!("UE power {v} must be positive to lift"))),
        None => Ok(()),
    }
}

/// `α_k = D_k²`, the value that makes the FD denominator constraint tight.
pub fn tight_alpha_fd(p: &[f64], w: &BeamformerSet, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    let c = Couplings::new(w, ch)?;
    Ok((0..ch.users()).map(|k| c.denominator_fd(p, ch, cfg, k).powi(2)).collect())
}

/// `α_k = D_k²` with the TF denominator, whose noise term is `σ_k²/τ`.
pub fn tight_alpha_tf(p: &[f64], w: &BeamformerSet, tau: f64, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    let c = Couplings::new(w, ch)?;
    Ok((0..ch.users()).map(|k| c.denominator_tf(p, cfg, tau, k).powi(2)).collect())
}

pub fn lift_fd(p: &[f64], w: &BeamformerSet, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<FdIterate> {
    positive_powers(p)?;
    let rep = check_feasibility(Mode::Fd, &PowerAllocation::fd(p.to_vec()), w, cfg, ch, 1e-9)?;
    if !rep.feasible {
        return Err(Error::Infeasible(format!("cannot lift: worst violation {:.3e}", rep.worst_violation)));
    }
    Ok(FdIterate {
        w: w.clone(),
        alpha: tight_alpha_fd(p, w, ch, cfg)?,
        beta: p.iter().map(|v| 1.0 / (v * v)).collect(),
    })
}

pub fn recover_fd(it: &FdIterate) -> (PowerAllocation, BeamformerSet) {
    (PowerAllocation::fd(it.beta.iter().map(|b| 1.0 / b.sqrt()).collect()), it.w.clone())
}

pub fn lift_tf(p: &[f64], w: &BeamformerSet, tau: f64, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<TfIterate> {
    positive_powers(p)?;
    let rep = check_feasibility(Mode::Tf, &PowerAllocation::tf(p.to_vec(), tau), w, cfg, ch, 1e-9)?;
    if !rep.feasible {
        return Err(Error::Infeasible(format!("cannot lift: worst violation {:.3e}", rep.worst_violation)));
    }
    Ok(TfIterate {
        w: w.clone(),
        alpha: tight_alpha_tf(p, w, tau, ch, cfg)?,
        beta: p.iter().map(|v| 1.0 / (v * v)).collect(),
        t1: 1.0 / (tau * tau),
        t2: 1.0 / (1.0 - tau),
        tau,
    })
}

pub fn recover_tf(it: &TfIterate) -> (PowerAllocation, BeamformerSet) {
    (PowerAllocation::tf(it.beta.iter().map(|b| 1.0 / b.sqrt()).collect(), it.tau), it.w.clone())
}

/// `ln(1 + |L_{k,a(k)}|²/√(α_k β_{a(k)}))` for every directed link.
pub fn lifted_logs(w: &BeamformerSet, alpha: &[f64], beta: &[f64], ch: &ChannelSet, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    let c = Couplings::new(w, ch)?;
    let pm = cfg.pairing();
    Ok((0..ch.users())
        .map(|k| {
            let a = pm.partner(k);
            (c.l[k][a].norm_sqr() / (alpha[k] * beta[a]).sqrt()).ln_1p()
        })
        .collect())
}

fn pair_sums(logs: &[f64], k: usize) -> Vec<f64> {
    (0..k).map(|i| logs[i] + logs[i + k]).collect()
}

/// Lifted pair throughputs of the FD problem; equal to the physical pair
/// rates when `α` is tight.
pub fn fd_lifted_pair_rates(it: &FdIterate, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    Ok(pair_sums(&lifted_logs(&it.w, &it.alpha, &it.beta, ch, cfg)?, cfg.k))
}

/// Lifted TF pair throughputs `(1/t₂)[…]`.
pub fn tf_lifted_pair_rates(it: &TfIterate, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    let logs = lifted_logs(&it.w, &it.alpha, &it.beta, ch, cfg)?;
    Ok(pair_sums(&logs, cfg.k).into_iter().map(|r| r / it.t2).collect())
}

pub fn fd_objective(obj: Objective, it: &FdIterate, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<f64> {
    let rates = fd_lifted_pair_rates(it, ch, cfg)?;
    Ok(match obj {
        Objective::Maximin => rates.iter().copied().fold(f64::INFINITY, f64::min),
        Objective::Ee => rates.iter().sum::<f64>() / fd_pi(&it.beta, &it.w, ch, cfg)?,
    })
}

pub fn tf_objective(obj: Objective, it: &TfIterate, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<f64> {
    let rates = tf_lifted_pair_rates(it, ch, cfg)?;
    Ok(match obj {
        Objective::Maximin => rates.iter().copied().fold(f64::INFINITY, f64::min),
        Objective::Ee => rates.iter().sum::<f64>() / tf_pi(&it.beta, &it.w, it.t1, ch, cfg)?,
    })
}

const MIN_COUPLING: f64 = 1e-9;

/// Matched beamformers `W_m = Σ_k e^{iθ_{k,m}} f_{m,k} h_{a(k),m}ᴴ`; all
/// phases are zero on the first attempt and random afterwards.
fn matched_beamformers(ch: &ChannelSet, cfg: &NetworkConfig, seed: u64) -> Result<BeamformerSet> {
    let n = ch.antennas();
    let users = ch.users();
    let pm = cfg.pairing();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for attempt in 0..16 {
        let mut w = BeamformerSet::zeros(ch.relays(), n);
        for m in 0..ch.relays() {
            for k in 0..users {
                let phase = if attempt == 0 { 0.0 } else { rng.random_range(0.0..std::f64::consts::TAU) };
                let c = Complex64::from_polar(1.0, phase);
                w.w[m] += (&ch.f[m][k] * ch.h[pm.partner(k)][m].adjoint()) * c;
            }
        }
        let c = Couplings::new(&w, ch)?;
        let scale = w.w.iter().map(|m| m.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            break;
        }
        if (0..users).all(|k| c.l[k][pm.partner(k)].norm() >= MIN_COUPLING * scale) {
            return Ok(w);
        }
    }
    Err(Error::Degenerate("no beamformer with nonzero pair couplings (all-zero channels?)".into()))
}

/// Scales `w` so the binding relay constraint sits at 90% of its limit.
fn scale_to_budget(w: &mut BeamformerSet, brackets: &[f64], per_relay: f64, sum_cap: f64, mult: f64, sum_mult: f64) {
    let load_m = brackets.iter().map(|b| mult * b / per_relay).fold(0.0, f64::max);
    let load_s = sum_mult * brackets.iter().sum::<f64>() / sum_cap;
    let load = load_m.max(load_s);
    w.scale((0.9 / load).sqrt());
}

/// Feasible FD starting point: uniform powers at 90% of the binding UE cap
/// and matched beamformers scaled to 90% of the binding relay budget.
pub fn init_fd(ch: &ChannelSet, cfg: &NetworkConfig, seed: u64) -> Result<FdIterate> {
    let users = cfg.users();
    let p0 = 0.9 * cfg.p_ue_max.min(cfg.p_ue_sum_max / users as f64);
    let p = vec![p0; users];
    let mut w = matched_beamformers(ch, cfg, seed)?;
    let c = Couplings::new(&w, ch)?;
    let brackets: Vec<f64> = (0..ch.relays()).map(|m| c.relay_bracket(&p, cfg.sigma_r2, m)).collect();
    let f = 1.0 / (1.0 - cfg.si_lin);
    scale_to_budget(&mut w, &brackets, cfg.p_relay_max, cfg.p_relay_sum_max, f, f);
    Ok(FdIterate { alpha: tight_alpha_fd(&p, &w, ch, cfg)?, beta: vec![1.0 / (p0 * p0); users], w })
}

/// TF starting point at `τ = ½` (so `t₁ = 4`, `t₂ = 2`).
pub fn init_tf(ch: &ChannelSet, cfg: &NetworkConfig, seed: u64) -> Result<TfIterate> {
    let users = cfg.users();
    let tau = 0.5;
    let p0 = 0.9 * cfg.bar_p_ue.min(cfg.p_ue_sum_max / (users as f64 * tau));
    let p = vec![p0; users];
    let mut w = matched_beamformers(ch, cfg, seed)?;
    let c = Couplings::new(&w, ch)?;
    let brackets: Vec<f64> = (0..ch.relays()).map(|m| c.relay_bracket(&p, cfg.sigma_r2, m)).collect();
    scale_to_budget(&mut w, &brackets, cfg.bar_p_r, cfg.p_relay_sum_max, tau, tau * (1.0 - tau));
    Ok(TfIterate {
        alpha: tight_alpha_tf(&p, &w, tau, ch, cfg)?,
        beta: vec![1.0 / (p0 * p0); users],
        w,
        t1: 1.0 / (tau * tau),
        t2: 1.0 / (1.0 - tau),
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_channels;
    use crate::physics::pair_rate_fd;

    #[test]
    fn init_fd_is_feasible_and_tight() {
        let cfg = NetworkConfig::experiment(2, 2, 4, -120.0);
        for seed in 0..20 {
            let ch = generate_channels(&cfg, Mode::Fd, seed);
            let it = init_fd(&ch, &cfg, seed).unwrap();
            let (alloc, w) = recover_fd(&it);
            let rep = check_feasibility(Mode::Fd, &alloc, &w, &cfg, &ch, 1e-8).unwrap();
            assert!(rep.feasible, "{:?}", rep.failures().collect::<Vec<_>>());
            let c = Couplings::new(&w, &ch).unwrap();
            let powers: Vec<f64> = (0..2).map(|m| c.relay_power_fd(&alloc.p, &cfg, m)).collect();
            let load = (powers.iter().fold(0.0f64, |a, b| a.max(*b)) / cfg.p_relay_max)
                .max(powers.iter().sum::<f64>() / cfg.p_relay_sum_max);
            assert!((load - 0.9).abs() < 1e-6);
        }
    }

    #[test]
    fn init_tf_starts_at_half() {
        let cfg = NetworkConfig::experiment(3, 4, 2, -120.0);
        let ch = generate_channels(&cfg, Mode::Tf, 3);
        let it = init_tf(&ch, &cfg, 0).unwrap();
        assert_eq!((it.tau, it.t1, it.t2), (0.5, 4.0, 2.0));
        let (alloc, w) = recover_tf(&it);
        assert!(check_feasibility(Mode::Tf, &alloc, &w, &cfg, &ch, 1e-8).unwrap().feasible);
    }

    #[test]
    fn lift_round_trip() {
        let cfg = NetworkConfig::experiment(2, 2, 4, -130.0);
        let ch = generate_channels(&cfg, Mode::Fd, 11);
        let it0 = init_fd(&ch, &cfg, 0).unwrap();
        let p = vec![cfg.p_ue_max, 0.3, 1.7, 2.2];
        let it = lift_fd(&p, &it0.w, &ch, &cfg).unwrap();
        assert_eq!(it.beta[0], 1.0 / (cfg.p_ue_max * cfg.p_ue_max));
        let (back, _) = recover_fd(&it);
        for (a, b) in back.p.iter().zip(&p) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
        let lifted = fd_lifted_pair_rates(&it, &ch, &cfg).unwrap();
        for k in 0..2 {
            let direct = pair_rate_fd(&p, &it.w, &ch, &cfg, k).unwrap();
            assert!((lifted[k] - direct).abs() <= 1e-9 * direct.max(1.0));
        }
        let too_much = vec![2.0 * cfg.p_ue_max; 4];
        assert!(lift_fd(&too_much, &it0.w, &ch, &cfg).is_err());
    }

    #[test]
    fn zero_channels_are_degenerate() {
        let cfg = NetworkConfig::experiment(1, 1, 2, -130.0);
        let mut ch = generate_channels(&cfg, Mode::Fd, 1);
        for row in ch.h.iter_mut() {
            for v in row.iter_mut() {
                v.fill(Complex64::new(0.0, 0.0));
            }
        }
        assert!(matches!(init_fd(&ch, &cfg, 0), Err(Error::Degenerate(_))));
    }
}
