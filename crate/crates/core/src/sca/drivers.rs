use std::time::{Duration, Instant};

use serde::Serialize;

use crate::conic::{solve, SolverSettings};
use crate::error::{Error, Result};
use crate::model::{ChannelSet, Mode, NetworkConfig};
use crate::physics::{check_feasibility, BeamformerSet, Couplings, PowerAllocation};

use super::program::{fd_subproblem, tf_subproblem, Goal, Subproblem, TimeShare};
use super::{
    fd_lifted_pair_rates, fd_objective, init_fd, init_tf, recover_fd, recover_tf, tf_lifted_pair_rates,
    tf_objective, tight_alpha_fd, tight_alpha_tf, Algorithm, Diagnostics, FdIterate, RunRecord, RunStatus,
    TfIterate,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Maximin,
    Ee,
}

/// Result of one path-following step.
#[derive(Debug, Clone)]
pub struct Step<T> {
    pub iterate: T,
    /// Subproblem objective at its optimum, a lower bound on the tracked
    /// objective at the raw (unpolished) solution.
    pub surrogate_value: f64,
    pub solver_iterations: usize,
}

fn solve_sub(sub: &Subproblem) -> Result<(Vec<f64>, f64, usize)> {
    let out = solve(&sub.program, &SolverSettings::default())?;
    if !out.is_solved() {
        return Err(Error::Solver(format!("{:?} after {} interior-point iterations", out.status, out.iterations)));
    }
    Ok((out.x, out.objective, out.iterations))
}

/// Relay load relative to the tightest relay budget.
fn relay_load(powers: &[f64], per_relay: f64, sum_cap: f64) -> f64 {
    let peak = powers.iter().fold(0.0f64, |a, b| a.max(*b)) / per_relay;
    peak.max(powers.iter().sum::<f64>() / sum_cap)
}

/// Removes solver round-off from an FD point and re-tightens `α`.
pub fn polish_fd(it: &FdIterate, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<FdIterate> {
    let mut p: Vec<f64> = it.beta.iter().map(|b| (1.0 / b.sqrt()).min(cfg.p_ue_max)).collect();
    let total: f64 = p.iter().sum();
    if total > cfg.p_ue_sum_max {
        p.iter_mut().for_each(|v| *v *= cfg.p_ue_sum_max / total);
    }
    let mut w = it.w.clone();
    let c = Couplings::new(&w, ch)?;
    let powers: Vec<f64> = (0..ch.relays()).map(|m| c.relay_power_fd(&p, cfg, m)).collect();
    let load = relay_load(&powers, cfg.p_relay_max, cfg.p_relay_sum_max);
    if load > 1.0 {
        w.scale(load.sqrt().recip());
    }
    Ok(FdIterate { alpha: tight_alpha_fd(&p, &w, ch, cfg)?, beta: p.iter().map(|v| 1.0 / (v * v)).collect(), w })
}

/// TF counterpart of [`polish_fd`]; also resets `t₂ = 1/(1−τ)` and `t₁ = 1/τ²`.
pub fn polish_tf(it: &TfIterate, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<TfIterate> {
    let tau = it.tau;
    let mut p: Vec<f64> = it.beta.iter().map(|b| (1.0 / b.sqrt()).min(cfg.bar_p_ue)).collect();
    let total: f64 = tau * p.iter().sum::<f64>();
    if total > cfg.p_ue_sum_max {
        p.iter_mut().for_each(|v| *v *= cfg.p_ue_sum_max / total);
    }
    let mut w = it.w.clone();
    let c = Couplings::new(&w, ch)?;
    let powers: Vec<f64> = (0..ch.relays()).map(|m| c.relay_power_tf(&p, cfg, tau, m)).collect();
    let load = relay_load(&powers, cfg.bar_p_r, cfg.p_relay_sum_max / (1.0 - tau));
    if load > 1.0 {
        w.scale(load.sqrt().recip());
    }
    Ok(TfIterate {
        alpha: tight_alpha_tf(&p, &w, tau, ch, cfg)?,
        beta: p.iter().map(|v| 1.0 / (v * v)).collect(),
        w,
        t1: 1.0 / (tau * tau),
        t2: 1.0 / (1.0 - tau),
        tau,
    })
}

fn fd_step(it: &FdIterate, ch: &ChannelSet, cfg: &NetworkConfig, goal: &Goal) -> Result<Step<FdIterate>> {
    let sub = fd_subproblem(it, ch, cfg, goal)?;
    let (x, value, iters) = solve_sub(&sub)?;
    Ok(Step { iterate: polish_fd(&sub.recover_fd(&x)?, ch, cfg)?, surrogate_value: value, solver_iterations: iters })
}

fn tf_step(
    it: &TfIterate,
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    goal: &Goal,
    time: TimeShare,
) -> Result<Step<TfIterate>> {
    let sub = tf_subproblem(it, ch, cfg, goal, time)?;
    let (x, value, iters) = solve_sub(&sub)?;
    Ok(Step {
        iterate: polish_tf(&sub.recover_tf(&x)?, ch, cfg)?,
        surrogate_value: value,
        solver_iterations: iters,
    })
}

pub fn step_fd_maximin(it: &FdIterate, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<Step<FdIterate>> {
    fd_step(it, ch, cfg, &Goal::Maximin)
}

pub fn step_fd_ee(it: &FdIterate, ch: &ChannelSet, cfg: &NetworkConfig, qos: &[f64]) -> Result<Step<FdIterate>> {
    fd_step(it, ch, cfg, &Goal::Ee { qos: qos.to_vec() })
}

pub fn step_tf_maximin(it: &TfIterate, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<Step<TfIterate>> {
    tf_step(it, ch, cfg, &Goal::Maximin, TimeShare::Free)
}

pub fn step_tf_ee(it: &TfIterate, ch: &ChannelSet, cfg: &NetworkConfig, qos: &[f64]) -> Result<Step<TfIterate>> {
    tf_step(it, ch, cfg, &Goal::Ee { qos: qos.to_vec() }, TimeShare::Free)
}

enum End {
    Converged,
    Limit,
    Failure,
    Target,
}

/// Runs steps until the relative improvement drops to `ε`, the budget is
/// spent, a step fails, or `target` holds at the incumbent.
fn ascend<T>(
    it: &mut T,
    trace: &mut Vec<f64>,
    diag: &mut Diagnostics,
    cfg: &NetworkConfig,
    value: impl Fn(&T) -> Result<f64>,
    step: impl Fn(&T) -> Result<Step<T>>,
    violation: &dyn Fn(&T) -> f64,
    target: Option<&dyn Fn(&T) -> bool>,
) -> (End, usize) {
    let mut r0 = match value(it) {
        Ok(v) => v,
        Err(e) => {
            diag.failure = Some(e.to_string());
            return (End::Failure, 0);
        }
    };
    if trace.is_empty() {
        trace.push(r0);
        diag.max_violation = diag.max_violation.max(violation(it));
    }
    if target.is_some_and(|t| t(it)) {
        return (End::Target, 0);
    }
    for n in 1..=cfg.max_iters {
        let next = step(it).and_then(|s| value(&s.iterate).map(|v| (s, v)));
        let (s, r1) = match next {
            Ok(x) => x,
            Err(e) => {
                diag.failure = Some(e.to_string());
                return (End::Failure, n);
            }
        };
        diag.solver_iterations += s.solver_iterations;
        if !(r1 >= r0) {
            diag.rejected_steps += 1;
            return (End::Converged, n);
        }
        *it = s.iterate;
        trace.push(r1);
        diag.max_violation = diag.max_violation.max(violation(it));
        if target.is_some_and(|t| t(it)) {
            return (End::Target, n);
        }
        if (r1 - r0) / r0.abs().max(f64::MIN_POSITIVE) <= cfg.epsilon {
            return (End::Converged, n);
        }
        r0 = r1;
    }
    (End::Limit, cfg.max_iters)
}

fn status_of(end: End) -> RunStatus {
    match end {
        End::Converged | End::Target => RunStatus::Converged,
        End::Limit => RunStatus::IterationLimit,
        End::Failure => RunStatus::SubproblemFailure,
    }
}

struct Outcome<T> {
    it: Option<T>,
    trace: Vec<f64>,
    iterations: usize,
    status: RunStatus,
    diag: Diagnostics,
}

fn maximin_run<T>(
    init: Result<T>,
    cfg: &NetworkConfig,
    violation: &dyn Fn(&T) -> f64,
    value: impl Fn(&T) -> Result<f64>,
    step: impl Fn(&T) -> Result<Step<T>>,
) -> Outcome<T> {
    let mut diag = Diagnostics::default();
    let mut it = match init {
        Ok(it) => it,
        Err(e) => {
            diag.failure = Some(e.to_string());
            return Outcome { it: None, trace: Vec::new(), iterations: 0, status: RunStatus::SubproblemFailure, diag };
        }
    };
    let mut trace = Vec::new();
    let (end, n) = ascend(&mut it, &mut trace, &mut diag, cfg, value, step, violation, None);
    Outcome { it: Some(it), trace, iterations: n, status: status_of(end), diag }
}

/// Maximin warm-up until every pair meets its threshold, then EE ascent.
#[allow(clippy::too_many_arguments)]
fn ee_run<T>(
    init: Result<T>,
    cfg: &NetworkConfig,
    qos: &[f64],
    violation: &dyn Fn(&T) -> f64,
    rates: impl Fn(&T) -> Result<Vec<f64>>,
    warm_value: impl Fn(&T) -> Result<f64>,
    warm_step: impl Fn(&T) -> Result<Step<T>>,
    value: impl Fn(&T) -> Result<f64>,
    step: impl Fn(&T) -> Result<Step<T>>,
) -> Outcome<T> {
    let mut diag = Diagnostics::default();
    let mut it = match init {
        Ok(it) => it,
        Err(e) => {
            diag.failure = Some(e.to_string());
            return Outcome { it: None, trace: Vec::new(), iterations: 0, status: RunStatus::SubproblemFailure, diag };
        }
    };
    let met = |it: &T| match rates(it) {
        Ok(r) => r.iter().zip(qos).all(|(r, q)| *r >= *q),
        Err(_) => false,
    };
    let mut warm_trace = Vec::new();
    let (end, n) = ascend(&mut it, &mut warm_trace, &mut diag, cfg, warm_value, warm_step, violation, Some(&met));
    diag.warmup_iterations = n;
    let mut trace = Vec::new();
    match end {
        End::Target => {}
        End::Failure => {
            return Outcome { it: Some(it), trace, iterations: 0, status: RunStatus::SubproblemFailure, diag };
        }
        End::Converged | End::Limit => {
            if let Ok(v) = value(&it) {
                trace.push(v);
            }
            return Outcome { it: Some(it), trace, iterations: 0, status: RunStatus::QosInfeasible, diag };
        }
    }
    let (end, n) = ascend(&mut it, &mut trace, &mut diag, cfg, value, step, violation, None);
    Outcome { it: Some(it), trace, iterations: n, status: status_of(end), diag }
}

/// Largest relative excess over the physical limits, infinite when the
/// point cannot be evaluated.
fn fd_violation(it: &FdIterate, ch: &ChannelSet, cfg: &NetworkConfig) -> f64 {
    let (power, w) = recover_fd(it);
    relative_excess(check_feasibility(Mode::Fd, &power, &w, cfg, ch, 0.0))
}

fn tf_violation(it: &TfIterate, ch: &ChannelSet, cfg: &NetworkConfig) -> f64 {
    let (power, w) = recover_tf(it);
    relative_excess(check_feasibility(Mode::Tf, &power, &w, cfg, ch, 0.0))
}

fn relative_excess(rep: Result<crate::physics::FeasibilityReport>) -> f64 {
    match rep {
        Ok(rep) => rep.checks.iter().map(|c| c.violation / c.limit.abs().max(1.0)).fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    }
}

fn empty_record(algorithm: Algorithm, ch: &ChannelSet, cfg: &NetworkConfig, out: Outcome<()>, t: Duration) -> RunRecord {
    let users = cfg.users();
    let power = match algorithm.mode() {
        Mode::Fd => PowerAllocation::fd(vec![0.0; users]),
        Mode::Tf => PowerAllocation::tf(vec![0.0; users], 0.5),
    };
    RunRecord {
        algorithm,
        trace: out.trace,
        iterations: out.iterations,
        status: out.status,
        power,
        w: BeamformerSet::zeros(ch.relays(), ch.antennas()),
        pair_rates: vec![0.0; cfg.k],
        physical_ee: 0.0,
        total_tx_power: 0.0,
        wall_time: t,
        diagnostics: out.diag,
    }
}

fn split<T>(out: Outcome<T>) -> (Option<T>, Outcome<()>) {
    let Outcome { it, trace, iterations, status, diag } = out;
    (it, Outcome { it: None, trace, iterations, status, diag })
}

fn fd_record(algorithm: Algorithm, ch: &ChannelSet, cfg: &NetworkConfig, out: Outcome<FdIterate>, start: Instant) -> RunRecord {
    let (it, rest) = split(out);
    let Some(it) = it else { return empty_record(algorithm, ch, cfg, rest, start.elapsed()) };
    let (power, w) = recover_fd(&it);
    let Ok(c) = Couplings::new(&w, ch) else { return empty_record(algorithm, ch, cfg, rest, start.elapsed()) };
    let pair_rates = c.pair_rates_fd(&power.p, ch, cfg);
    let relays: f64 = (0..ch.relays()).map(|m| c.relay_power_fd(&power.p, cfg, m)).sum();
    RunRecord {
        algorithm,
        physical_ee: pair_rates.iter().sum::<f64>() / c.consumption_fd(&power.p, cfg),
        total_tx_power: power.p.iter().sum::<f64>() + relays,
        pair_rates,
        power,
        w,
        trace: rest.trace,
        iterations: rest.iterations,
        status: rest.status,
        wall_time: start.elapsed(),
        diagnostics: rest.diag,
    }
}

fn tf_record(algorithm: Algorithm, ch: &ChannelSet, cfg: &NetworkConfig, out: Outcome<TfIterate>, start: Instant) -> RunRecord {
    let (it, rest) = split(out);
    let Some(it) = it else { return empty_record(algorithm, ch, cfg, rest, start.elapsed()) };
    let (power, w) = recover_tf(&it);
    let Ok(c) = Couplings::new(&w, ch) else { return empty_record(algorithm, ch, cfg, rest, start.elapsed()) };
    let tau = it.tau;
    let pair_rates = c.pair_rates_tf(&power.p, cfg, tau);
    let relays: f64 = (0..ch.relays()).map(|m| c.relay_power_tf(&power.p, cfg, tau, m)).sum();
    RunRecord {
        algorithm,
        physical_ee: pair_rates.iter().sum::<f64>() / c.consumption_tf(&power.p, cfg, tau),
        total_tx_power: tau * power.p.iter().sum::<f64>() + (1.0 - tau) * relays,
        pair_rates,
        power,
        w,
        trace: rest.trace,
        iterations: rest.iterations,
        status: rest.status,
        wall_time: start.elapsed(),
        diagnostics: rest.diag,
    }
}

pub fn run_fd_maximin(ch: &ChannelSet, cfg: &NetworkConfig) -> RunRecord {
    let start = Instant::now();
    let out = maximin_run(
        init_fd(ch, cfg, cfg.seed),
        cfg,
        &|it| fd_violation(it, ch, cfg),
        |it| fd_objective(Objective::Maximin, it, ch, cfg),
        |it| step_fd_maximin(it, ch, cfg),
    );
    fd_record(Algorithm::FdMaximin, ch, cfg, out, start)
}

pub fn run_fd_ee(ch: &ChannelSet, cfg: &NetworkConfig, qos: &[f64]) -> RunRecord {
    let start = Instant::now();
    let out = ee_run(
        init_fd(ch, cfg, cfg.seed),
        cfg,
        qos,
        &|it| fd_violation(it, ch, cfg),
        |it| fd_lifted_pair_rates(it, ch, cfg),
        |it| fd_objective(Objective::Maximin, it, ch, cfg),
        |it| step_fd_maximin(it, ch, cfg),
        |it| fd_objective(Objective::Ee, it, ch, cfg),
        |it| step_fd_ee(it, ch, cfg, qos),
    );
    fd_record(Algorithm::FdEe, ch, cfg, out, start)
}

fn tf_maximin(ch: &ChannelSet, cfg: &NetworkConfig, time: TimeShare, algorithm: Algorithm) -> RunRecord {
    let start = Instant::now();
    let out = maximin_run(
        init_tf(ch, cfg, cfg.seed),
        cfg,
        &|it| tf_violation(it, ch, cfg),
        |it| tf_objective(Objective::Maximin, it, ch, cfg),
        |it| tf_step(it, ch, cfg, &Goal::Maximin, time),
    );
    tf_record(algorithm, ch, cfg, out, start)
}

fn tf_ee(ch: &ChannelSet, cfg: &NetworkConfig, qos: &[f64], time: TimeShare, algorithm: Algorithm) -> RunRecord {
    let start = Instant::now();
    let goal = Goal::Ee { qos: qos.to_vec() };
    let out = ee_run(
        init_tf(ch, cfg, cfg.seed),
        cfg,
        qos,
        &|it| tf_violation(it, ch, cfg),
        |it| tf_lifted_pair_rates(it, ch, cfg),
        |it| tf_objective(Objective::Maximin, it, ch, cfg),
        |it| tf_step(it, ch, cfg, &Goal::Maximin, time),
        |it| tf_objective(Objective::Ee, it, ch, cfg),
        |it| tf_step(it, ch, cfg, &goal, time),
    );
    tf_record(algorithm, ch, cfg, out, start)
}

pub fn run_tf_maximin(ch: &ChannelSet, cfg: &NetworkConfig) -> RunRecord {
    tf_maximin(ch, cfg, TimeShare::Free, Algorithm::TfMaximin)
}

pub fn run_tf_ee(ch: &ChannelSet, cfg: &NetworkConfig, qos: &[f64]) -> RunRecord {
    tf_ee(ch, cfg, qos, TimeShare::Free, Algorithm::TfEe)
}

/// Half-duplex baseline: the TF drivers with `τ` frozen at ½. `qos` is
/// only read for the EE objective.
pub fn run_hd_baseline(ch: &ChannelSet, cfg: &NetworkConfig, objective: Objective, qos: &[f64]) -> RunRecord {
    match objective {
        Objective::Maximin => tf_maximin(ch, cfg, TimeShare::Frozen(0.5), Algorithm::HdMaximin),
        Objective::Ee => tf_ee(ch, cfg, qos, TimeShare::Frozen(0.5), Algorithm::HdEe),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_channels;
    use crate::physics::check_feasibility;

    fn small() -> NetworkConfig {
        let mut cfg = NetworkConfig::experiment(2, 2, 2, -130.0);
        cfg.max_iters = 12;
        cfg
    }

    #[test]
    fn fd_steps_ascend_and_stay_feasible() {
        let cfg = small();
        let ch = generate_channels(&cfg, Mode::Fd, 4);
        let mut it = init_fd(&ch, &cfg, 0).unwrap();
        for _ in 0..6 {
            let now = fd_objective(Objective::Maximin, &it, &ch, &cfg).unwrap();
            let sub = fd_subproblem(&it, &ch, &cfg, &Goal::Maximin).unwrap();
            assert!((sub.incumbent_value() - now).abs() <= 1e-7 * now.abs().max(1.0));
            let s = step_fd_maximin(&it, &ch, &cfg).unwrap();
            let next = fd_objective(Objective::Maximin, &s.iterate, &ch, &cfg).unwrap();
            assert!(next + 1e-7 >= s.surrogate_value, "{next} < {}", s.surrogate_value);
            assert!(s.surrogate_value + 1e-7 >= now);
            let (alloc, w) = recover_fd(&s.iterate);
            assert!(check_feasibility(Mode::Fd, &alloc, &w, &cfg, &ch, 1e-6).unwrap().feasible);
            it = s.iterate;
        }
    }

    #[test]
    fn tf_ee_steps_ascend_and_keep_qos() {
        let cfg = small();
        let ch = generate_channels(&cfg, Mode::Tf, 6);
        let mut it = init_tf(&ch, &cfg, 0).unwrap();
        let qos: Vec<f64> = tf_lifted_pair_rates(&it, &ch, &cfg).unwrap().iter().map(|r| 0.5 * r).collect();
        for _ in 0..6 {
            let now = tf_objective(Objective::Ee, &it, &ch, &cfg).unwrap();
            let s = step_tf_ee(&it, &ch, &cfg, &qos).unwrap();
            let next = tf_objective(Objective::Ee, &s.iterate, &ch, &cfg).unwrap();
            assert!(next + 1e-7 >= s.surrogate_value && s.surrogate_value + 1e-7 >= now);
            assert!((s.iterate.t1 * s.iterate.tau * s.iterate.tau - 1.0).abs() < 1e-12);
            let rates = tf_lifted_pair_rates(&s.iterate, &ch, &cfg).unwrap();
            assert!(rates.iter().zip(&qos).all(|(r, q)| *r >= q - 1e-6));
            it = s.iterate;
        }
    }

    #[test]
    fn every_driver_traces_upward() {
        let cfg = small();
        let fd = generate_channels(&cfg, Mode::Fd, 2);
        let tf = generate_channels(&cfg, Mode::Tf, 2);
        let hd = run_hd_baseline(&tf, &cfg, Objective::Maximin, &[]);
        let qos = vec![0.5 * hd.objective(); cfg.k];
        let runs = [
            run_fd_maximin(&fd, &cfg),
            run_fd_ee(&fd, &cfg, &qos),
            run_tf_maximin(&tf, &cfg),
            run_tf_ee(&tf, &cfg, &qos),
            hd.clone(),
            run_hd_baseline(&tf, &cfg, Objective::Ee, &qos),
        ];
        for r in &runs {
            assert!(r.diagnostics.failure.is_none(), "{:?}: {:?}", r.algorithm, r.diagnostics.failure);
            assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-7), "{:?}", r.algorithm);
            let rep = check_feasibility(r.algorithm.mode(), &r.power, &r.w, &cfg, if r.algorithm.mode() == Mode::Fd { &fd } else { &tf }, 1e-6).unwrap();
            assert!(rep.feasible, "{:?}", r.algorithm);
        }
        assert_eq!(runs[4].tau(), Some(0.5));
        assert!(runs[2].objective() >= hd.objective() - 1e-9);
        for r in &runs[3..4] {
            assert!(r.pair_rates.iter().zip(&qos).all(|(a, q)| *a >= q - 1e-6));
        }
    }

    #[test]
    fn zero_thresholds_skip_the_warm_up() {
        let cfg = small();
        let ch = generate_channels(&cfg, Mode::Fd, 1);
        let r = run_fd_ee(&ch, &cfg, &[0.0, 0.0]);
        assert_eq!(r.diagnostics.warmup_iterations, 0);
    }
}
