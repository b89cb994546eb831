//! Brute-force and finite-difference checks that do not share code paths
//! with the solvers: an exhaustive grid over the single-pair, single-relay
//! scenario, a Hessian probe for convexity claims, and a random sampler for
//! the scalar lower bounds.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ChannelSet, Mode, NetworkConfig};
use crate::physics::{BeamformerSet, Couplings};
use crate::sca::Objective;
use crate::surrogates::{ine1_rhs, ine1p_rhs, ine2_rhs};
use crate::{CMatrix, Complex64};

/// Evenly spaced points on `[lo, hi]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Axis { lo, hi, points }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.points == 1 {
            return self.lo;
        }
        self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
    }
}

/// Search grid for [`grid_search_tiny`].
///
/// The `|w|` axis is given as fractions of the largest modulus the relay
/// budgets allow at each `(p₁, p₂, τ)`, so every grid point is feasible
/// for the relay and the top of the axis sits on the budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub mode: Mode,
    pub objective: Objective,
    pub p1: Axis,
    pub p2: Axis,
    pub w: Axis,
    /// Time-fraction axis; ignored in FD mode.
    pub tau: Axis,
    /// Pair-throughput floor for the EE objective (nats); points below it
    /// are skipped.
    pub min_rate: f64,
}

impl GridSpec {
    /// 200 points per power and modulus axis, 99 values of `τ` in [0.01, 0.99].
    pub fn default_for(mode: Mode, objective: Objective, cfg: &NetworkConfig) -> Self {
        GridSpec::with_points(mode, objective, cfg, 200, 99)
    }

    pub fn with_points(mode: Mode, objective: Objective, cfg: &NetworkConfig, n: usize, n_tau: usize) -> Self {
        let cap = match mode {
            Mode::Fd => cfg.p_ue_max,
            Mode::Tf => cfg.bar_p_ue,
        };
        GridSpec {
            mode,
            objective,
            p1: Axis::new(0.0, cap, n),
            p2: Axis::new(0.0, cap, n),
            w: Axis::new(0.0, 1.0, n),
            tau: Axis::new(0.01, 0.99, n_tau),
            min_rate: 0.0,
        }
    }

    fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        let axes = [("p1", self.p1), ("p2", self.p2), ("w", self.w), ("tau", self.tau)];
        for (name, a) in axes {
            if a.points < 2 {
                return Err(Error::Config(format!("grid axis {name} needs at least 2 points")));
            }
            if !(a.lo >= 0.0 && a.hi >= a.lo && a.hi.is_finite()) {
                return Err(Error::Config(format!("grid axis {name} has an invalid range")));
            }
        }
        let cap = match self.mode {
            Mode::Fd => cfg.p_ue_max,
            Mode::Tf => cfg.bar_p_ue,
        };
        if self.p1.hi > cap || self.p2.hi > cap || self.w.hi > 1.0 {
            return Err(Error::Config("grid range exceeds the physical caps".into()));
        }
        if self.mode == Mode::Tf && !(self.tau.lo > 0.0 && self.tau.hi < 1.0) {
            return Err(Error::Config("tau axis must lie inside (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub p: [f64; 2],
    /// Beamformer modulus `|w|` (Frobenius norm of `W`).
    pub w: f64,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub best: f64,
    pub argmax: GridPoint,
    pub evaluated: usize,
}

/// Fixed unit-norm beam direction: the scalar one in FD mode, the matched
/// filter `f₁h₂ᴴ + f₂h₁ᴴ` for the two-antenna TF relay.
fn base_direction(ch: &ChannelSet) -> BeamformerSet {
    let n = ch.antennas();
    let mut w = CMatrix::zeros(n, n);
    if n == 1 {
        w[(0, 0)] = Complex64::new(1.0, 0.0);
    } else {
        w += &ch.f[0][0] * ch.h[1][0].adjoint() + &ch.f[0][1] * ch.h[0][0].adjoint();
        let s = w.norm();
        if s > 0.0 {
            w /= Complex64::new(s, 0.0);
        } else {
            w = CMatrix::identity(n, n) / Complex64::new((n as f64).sqrt(), 0.0);
        }
    }
    BeamformerSet { w: vec![w] }
}

/// Beamformer of a grid point: the fixed direction scaled to modulus `w`.
pub fn grid_beamformer(ch: &ChannelSet, w: f64) -> BeamformerSet {
    let mut b = base_direction(ch);
    b.scale(w);
    b
}

/// Couplings of `√r2 · W₀` from those of `W₀`.
fn scale_into(base: &Couplings, r2: f64, out: &mut Couplings) {
    let s = r2.sqrt();
    for (o, b) in out.l.iter_mut().zip(&base.l) {
        for (x, y) in o.iter_mut().zip(b) {
            *x = y * s;
        }
    }
    for (o, b) in out.row.iter_mut().zip(&base.row) {
        *o = b * r2;
    }
    for (o, b) in out.wh[0].iter_mut().zip(&base.wh[0]) {
        *o = b * r2;
    }
    out.wf[0] = base.wf[0] * r2;
}

fn evaluate(c: &Couplings, p: &[f64], tau: Option<f64>, obj: Objective, ch: &ChannelSet, cfg: &NetworkConfig) -> f64 {
    match (tau, obj) {
        (None, Objective::Maximin) => c.pair_rates_fd(p, ch, cfg)[0],
        (None, Objective::Ee) => c.pair_rates_fd(p, ch, cfg)[0] / c.consumption_fd(p, cfg),
        (Some(t), Objective::Maximin) => c.pair_rates_tf(p, cfg, t)[0],
        (Some(t), Objective::Ee) => c.pair_rates_tf(p, cfg, t)[0] / tf_energy_model(c, p, t, cfg),
    }
}

/// Consumption as the TF EE driver models it: `τΣp` for the users and
/// `(1−τ)(Σ_k w_k p_k + τσ²‖W‖²)` for the relay.
fn tf_energy_model(c: &Couplings, p: &[f64], tau: f64, cfg: &NetworkConfig) -> f64 {
    let signal: f64 = c.wh[0].iter().zip(p).map(|(w, p)| w * p).sum();
    let relay = signal + tau * cfg.sigma_r2 * c.wf[0];
    cfg.zeta * (tau * p.iter().sum::<f64>() + (1.0 - tau) * relay) + cfg.circuit_power(Mode::Tf)
}

fn pair_rate(c: &Couplings, p: &[f64], tau: Option<f64>, ch: &ChannelSet, cfg: &NetworkConfig) -> f64 {
    match tau {
        None => c.pair_rates_fd(p, ch, cfg)[0],
        Some(t) => c.pair_rates_tf(p, cfg, t)[0],
    }
}

/// Exhaustive search over the single-pair, single-relay scenario.
///
/// For the maximin objective both SINRs have the form `xa/(xb + c)` in
/// `x = |w|²` with `c > 0`, so only the top of the modulus axis can win and
/// the other modulus points are skipped. Ties keep the first point in
/// lexicographic `(p₁, p₂, τ, |w|)` order.
pub fn grid_search_tiny(ch: &ChannelSet, cfg: &NetworkConfig, spec: &GridSpec) -> Result<GridResult> {
    if cfg.k != 1 || ch.relays() != 1 || cfg.n_r != 1 {
        return Err(Error::NotScalar { k: cfg.k, m: ch.relays(), n_r: cfg.n_r });
    }
    if ch.antennas() != cfg.antennas(spec.mode) {
        return Err(Error::Dimension("channel set does not match the grid mode".into()));
    }
    spec.validate(cfg)?;
    let w0 = base_direction(ch);
    let base = Couplings::new(&w0, ch)?;
    phase_check(&w0, ch, cfg, spec)?;

    let taus: Vec<Option<f64>> = match spec.mode {
        Mode::Fd => vec![None],
        Mode::Tf => (0..spec.tau.points).map(|i| Some(spec.tau.value(i))).collect(),
    };
    let w_range: Vec<usize> = match spec.objective {
        Objective::Maximin => vec![spec.w.points - 1],
        Objective::Ee => (0..spec.w.points).collect(),
    };
    let mut scratch = base.clone();
    let mut best = GridResult { best: f64::NEG_INFINITY, argmax: GridPoint { p: [0.0; 2], w: 0.0, tau: None }, evaluated: 0 };
    let mut p = [0.0; 2];
    for i in 0..spec.p1.points {
        p[0] = spec.p1.value(i);
        for j in 0..spec.p2.points {
            p[1] = spec.p2.value(j);
            for &tau in &taus {
                let Some(r2_max) = modulus_cap(&base, &p, tau, cfg) else { continue };
                for &l in &w_range {
                    let r2 = spec.w.value(l).powi(2) * r2_max;
                    scale_into(&base, r2, &mut scratch);
                    if spec.min_rate > 0.0 && pair_rate(&scratch, &p, tau, ch, cfg) < spec.min_rate {
                        continue;
                    }
                    let v = evaluate(&scratch, &p, tau, spec.objective, ch, cfg);
                    best.evaluated += 1;
                    if v > best.best {
                        best.best = v;
                        best.argmax = GridPoint { p, w: r2.sqrt(), tau };
                    }
                }
            }
        }
    }
    if best.evaluated == 0 {
        return Err(Error::Infeasible("no grid point meets the UE budgets and the throughput floor".into()));
    }
    Ok(best)
}

/// Largest `|w|²` meeting the relay budgets at powers `p`, or `None` when the
/// UE budgets already fail.
fn modulus_cap(base: &Couplings, p: &[f64; 2], tau: Option<f64>, cfg: &NetworkConfig) -> Option<f64> {
    let bracket = base.relay_bracket(p, cfg.sigma_r2, 0);
    let sum: f64 = p.iter().sum();
    match tau {
        None => {
            if sum > cfg.p_ue_sum_max * (1.0 + 1e-12) {
                return None;
            }
            let cap = cfg.p_relay_max.min(cfg.p_relay_sum_max) * (1.0 - cfg.si_lin);
            Some(cap / bracket)
        }
        Some(t) => {
            if t * sum > cfg.p_ue_sum_max * (1.0 + 1e-12) {
                return None;
            }
            let cap = (cfg.bar_p_r / t).min(cfg.p_relay_sum_max / (t * (1.0 - t)));
            Some(cap / bracket)
        }
    }
}

/// The objective depends on `w` only through `|w|`; a random global phase
/// must leave it unchanged.
fn phase_check(w0: &BeamformerSet, ch: &ChannelSet, cfg: &NetworkConfig, spec: &GridSpec) -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(0x9a5e);
    let p = [spec.p1.value(spec.p1.points / 2), spec.p2.value(spec.p2.points / 2)];
    let tau = match spec.mode {
        Mode::Fd => None,
        Mode::Tf => Some(spec.tau.value(spec.tau.points / 2)),
    };
    let reference = evaluate(&Couplings::new(w0, ch)?, &p, tau, spec.objective, ch, cfg);
    for _ in 0..4 {
        let mut w = w0.clone();
        let z = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        w.w[0] *= z;
        let v = evaluate(&Couplings::new(&w, ch)?, &p, tau, spec.objective, ch, cfg);
        if (v - reference).abs() > 1e-12 * reference.abs().max(1.0) {
            return Err(Error::Degenerate(format!("objective changed with the beam phase: {reference} vs {v}")));
        }
    }
    Ok(())
}

/// Smallest eigenvalue of the fourth-order central-difference Hessian of
/// `f` at `point`. The stencil reaches `±2h`, so every coordinate must
/// exceed `2h`.
pub fn convexity_probe(f: impl Fn(&[f64]) -> f64, point: &[f64], h: f64) -> Result<f64> {
    if let Some(v) = point.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("probe point coordinate {v} must be positive")));
    }
    if !(h > 0.0) || point.iter().any(|x| x + h == *x || x - h == *x) {
        return Err(Error::Domain(format!("difference step {h} underflows at the probe point")));
    }
    if let Some(v) = point.iter().find(|v| **v <= 2.0 * h) {
        return Err(Error::Domain(format!("difference step {h} leaves the positive orthant at {v}")));
    }
    let n = point.len();
    let mut x = point.to_vec();
    let mut at = |i: usize, a: f64, j: usize, b: f64| {
        let (xi, xj) = (x[i], x[j]);
        x[i] += a * h;
        x[j] += b * h;
        let v = f(&x);
        x[i] = xi;
        x[j] = xj;
        v
    };
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let d = |at: &mut dyn FnMut(usize, f64, usize, f64) -> f64, s: f64| at(i, s, i, 0.0);
        hess[(i, i)] = (-d(&mut at, 2.0) + 16.0 * d(&mut at, 1.0) - 30.0 * d(&mut at, 0.0) + 16.0 * d(&mut at, -1.0)
            - d(&mut at, -2.0))
            / (12.0 * h * h);
        for j in 0..i {
            let mut g = |a: f64, b: f64| at(i, a, j, b);
            let v = (8.0 * (g(1.0, -2.0) + g(2.0, -1.0) + g(-2.0, 1.0) + g(-1.0, 2.0))
                - 8.0 * (g(-1.0, -2.0) + g(-2.0, -1.0) + g(1.0, 2.0) + g(2.0, 1.0))
                - (g(2.0, -2.0) + g(-2.0, 2.0) - g(-2.0, -2.0) - g(2.0, 2.0))
                + 64.0 * (g(-1.0, -1.0) + g(1.0, 1.0) - g(1.0, -1.0) - g(-1.0, 1.0)))
                / (144.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().any(|v: &f64| !v.is_finite()) {
        return Err(Error::Domain("function is not finite near the probe point".into()));
    }
    Ok(SymmetricEigen::new(hess).eigenvalues.min())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    Ine1,
    Ine1p,
    Ine2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub which: Inequality,
    pub samples: usize,
    /// Largest `(RHS − LHS)/max(|LHS|, |RHS|)` over the samples.
    pub max_violation: f64,
    /// Largest relative `|RHS − LHS|` with the sample at its expansion point.
    pub max_equality_error: f64,
    /// Samples whose relative violation exceeds `1e-9`.
    pub violations: usize,
}

fn log_uniform(rng: &mut ChaCha20Rng) -> f64 {
    10f64.powf(rng.random_range(-3.0..=3.0))
}

fn relative(rhs: f64, lhs: f64) -> f64 {
    (rhs - lhs) / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE)
}

/// Samples `n` random points and expansion points log-uniformly in
/// `[1e-3, 1e3]` per coordinate and compares each bound to its left side.
pub fn inequality_fuzzer(which: Inequality, n: usize, seed: u64) -> Result<ViolationReport> {
    if n == 0 {
        return Err(Error::Config("the fuzzer needs at least one sample".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rep = ViolationReport { which, samples: n, max_violation: f64::NEG_INFINITY, max_equality_error: 0.0, violations: 0 };
    let lhs = |v: &[f64; 4]| {
        let l = (1.0 / (v[0] * v[1])).ln_1p();
        match which {
            Inequality::Ine1 => l / v[2],
            Inequality::Ine1p => l,
            Inequality::Ine2 => l / (v[2] * v[3]),
        }
    };
    let rhs = |v: &[f64; 4], b: &[f64; 4]| match which {
        Inequality::Ine1 => ine1_rhs(v[0], v[1], v[2], b[0], b[1], b[2]),
        Inequality::Ine1p => ine1p_rhs(v[0], v[1], b[0], b[1]),
        Inequality::Ine2 => ine2_rhs(v[0], v[1], v[2], v[3], b[0], b[1], b[2], b[3]),
    };
    for _ in 0..n {
        let v: [f64; 4] = std::array::from_fn(|_| log_uniform(&mut rng));
        let b: [f64; 4] = std::array::from_fn(|_| log_uniform(&mut rng));
        let gap = relative(rhs(&v, &b)?, lhs(&v));
        if gap > 1e-9 {
            rep.violations += 1;
        }
        rep.max_violation = rep.max_violation.max(gap);
        rep.max_equality_error = rep.max_equality_error.max(relative(rhs(&b, &b)?, lhs(&b)).abs());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_channels;

    #[test]
    fn axis_hits_both_ends() {
        let a = Axis::new(0.01, 0.99, 99);
        assert_eq!(a.value(0), 0.01);
        assert!((a.value(98) - 0.99).abs() < 1e-15);
        assert!((a.value(49) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_channels_give_zero() {
        let cfg = NetworkConfig::experiment(1, 1, 1, -130.0);
        let mut ch = generate_channels(&cfg, Mode::Fd, 0);
        for v in ch.h.iter_mut().flatten().chain(ch.g.iter_mut().flatten()).chain(ch.f.iter_mut().flatten()) {
            v.fill(Complex64::new(0.0, 0.0));
        }
        let spec = GridSpec::with_points(Mode::Fd, Objective::Maximin, &cfg, 20, 5);
        assert_eq!(grid_search_tiny(&ch, &cfg, &spec).unwrap().best, 0.0);
    }

    #[test]
    fn rejects_larger_scenarios() {
        let cfg = NetworkConfig::experiment(2, 1, 1, -130.0);
        let ch = generate_channels(&cfg, Mode::Fd, 0);
        let spec = GridSpec::default_for(Mode::Fd, Objective::Maximin, &cfg);
        assert!(grid_search_tiny(&ch, &cfg, &spec).is_err());
    }

    #[test]
    fn maximin_shortcut_matches_the_full_sweep() {
        let cfg = NetworkConfig::experiment(1, 1, 1, -120.0);
        for mode in [Mode::Fd, Mode::Tf] {
            let ch = generate_channels(&cfg, mode, 3);
            let spec = GridSpec::with_points(mode, Objective::Maximin, &cfg, 25, 7);
            let fast = grid_search_tiny(&ch, &cfg, &spec).unwrap();
            let w0 = base_direction(&ch);
            let base = Couplings::new(&w0, &ch).unwrap();
            let mut scratch = base.clone();
            let mut best = f64::NEG_INFINITY;
            for i in 0..25 {
                for j in 0..25 {
                    let p = [spec.p1.value(i), spec.p2.value(j)];
                    let taus: Vec<Option<f64>> = match mode {
                        Mode::Fd => vec![None],
                        Mode::Tf => (0..7).map(|t| Some(spec.tau.value(t))).collect(),
                    };
                    for tau in taus {
                        let Some(cap) = modulus_cap(&base, &p, tau, &cfg) else { continue };
                        for l in 0..25 {
                            scale_into(&base, spec.w.value(l).powi(2) * cap, &mut scratch);
                            best = best.max(evaluate(&scratch, &p, tau, Objective::Maximin, &ch, &cfg));
                        }
                    }
                }
            }
            assert_eq!(fast.best, best);
        }
    }

    #[test]
    fn grid_argmax_is_feasible() {
        let cfg = NetworkConfig::experiment(1, 1, 1, -130.0);
        let ch = generate_channels(&cfg, Mode::Tf, 8);
        let r = grid_search_tiny(&ch, &cfg, &GridSpec::with_points(Mode::Tf, Objective::Maximin, &cfg, 30, 9)).unwrap();
        let tau = r.argmax.tau.unwrap();
        let mut w = base_direction(&ch);
        w.scale(r.argmax.w);
        let alloc = crate::physics::PowerAllocation::tf(r.argmax.p.to_vec(), tau);
        let rep = crate::physics::check_feasibility(Mode::Tf, &alloc, &w, &cfg, &ch, 1e-9).unwrap();
        assert!(rep.feasible, "{:?}", rep.failures().collect::<Vec<_>>());
        let direct = crate::physics::pair_rate_tf(tau, &alloc.p, &w, &ch, &cfg, 0).unwrap();
        assert!((direct - r.best).abs() < 1e-12 * r.best);
    }

    #[test]
    fn probe_recovers_quadratic_hessian() {
        // f = x² + 3y² + xy has Hessian [[2, 1], [1, 6]]
        let f = |v: &[f64]| v[0] * v[0] + 3.0 * v[1] * v[1] + v[0] * v[1];
        let min = convexity_probe(f, &[1.3, 0.4], 1e-3).unwrap();
        assert!((min - (4.0 - 5f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn probe_flags_a_saddle() {
        assert!(convexity_probe(|v| v[0] * v[1], &[1.0, 2.0], 1e-4).unwrap() < -0.9);
    }

    #[test]
    fn probe_rejects_bad_input() {
        assert!(convexity_probe(|v| v[0], &[0.0], 1e-4).is_err());
        assert!(convexity_probe(|v| v[0], &[1e20], 1e-4).is_err());
    }

    #[test]
    fn fuzzer_is_reproducible() {
        let a = inequality_fuzzer(Inequality::Ine2, 500, 3).unwrap();
        let b = inequality_fuzzer(Inequality::Ine2, 500, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
    }
}
