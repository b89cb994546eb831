//! Conic inner approximations solved at each path-following step.
//!
//! Variables are normalised by their values at the incumbent so that every
//! scalar is of order one: `α_k = α_k^κ ã_k`, `β_k = β_k^κ b̃_k`,
//! `W_m = s_W U_m X̃_m V_mᴴ`, and power epigraphs are measured in units of
//! their budget. Denominator constraints are multiplied through by `√α_k`,
//! which turns `Σ T/√α ≤ 1` into `Σ T ≤ d`, `d² ≤ α`.
//!
//! Every auxiliary variable carries a hint equal to its tight value at the
//! incumbent, so `program.hint()` is a feasible point whose objective equals
//! the tracked objective there.

use crate::conic::{encode_inverse, AffExpr, ComplexAffExpr, ConicProgram};
use crate::error::{Error, Result};
use crate::model::{ChannelSet, Mode, NetworkConfig};
use crate::physics::Couplings;
use crate::surrogates::{ExpansionPoint, TRUST_MARGIN};
use crate::{CMatrix, Complex64};

use super::subspace::Subspace;
use super::{FdIterate, TfIterate};

/// What the subproblem maximises.
#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    Maximin,
    /// Energy efficiency subject to per-pair throughput floors (nats).
    Ee { qos: Vec<f64> },
}

/// How the TF time fraction enters the subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeShare {
    Free,
    Frozen(f64),
}

#[derive(Debug, Clone)]
pub struct Subproblem {
    pub program: ConicProgram,
    mode: Mode,
    sub: Subspace,
    x_base: Vec<usize>,
    s_w: f64,
    a: usize,
    b: usize,
    alpha_k: Vec<f64>,
    beta_k: Vec<f64>,
    tau: Option<usize>,
    t2: Option<usize>,
    tau_k: f64,
    frozen_tau: Option<f64>,
}

impl Subproblem {
    pub fn hint(&self) -> &[f64] {
        self.program.hint()
    }

    /// Subproblem objective at the incumbent.
    pub fn incumbent_value(&self) -> f64 {
        self.program.objective_value(self.program.hint())
    }

    fn beamformers(&self, x: &[f64]) -> crate::physics::BeamformerSet {
        let xs: Vec<CMatrix> = (0..self.sub.relays())
            .map(|m| {
                let (r, c) = self.sub.shape(m);
                CMatrix::from_fn(r, c, |i, j| {
                    let k = self.x_base[m] + 2 * (i * c + j);
                    Complex64::new(x[k], x[k + 1]) * self.s_w
                })
            })
            .collect();
        self.sub.expand(&xs)
    }

    fn scaled(&self, x: &[f64], base: usize, refv: &[f64]) -> Vec<f64> {
        refv.iter().enumerate().map(|(k, r)| r * x[base + k].max(1e-12)).collect()
    }

    /// Lifted FD point read from a solution vector; slacks are left as the
    /// solver returned them.
    pub fn recover_fd(&self, x: &[f64]) -> Result<FdIterate> {
        if self.mode != Mode::Fd {
            return Err(Error::Program("recover_fd on a TF subproblem".into()));
        }
        Ok(FdIterate {
            w: self.beamformers(x),
            alpha: self.scaled(x, self.a, &self.alpha_k),
            beta: self.scaled(x, self.b, &self.beta_k),
        })
    }

    pub fn recover_tf(&self, x: &[f64]) -> Result<TfIterate> {
        if self.mode != Mode::Tf {
            return Err(Error::Program("recover_tf on an FD subproblem".into()));
        }
        let tau = match (self.tau, self.frozen_tau) {
            (Some(i), _) => (self.tau_k * x[i]).clamp(1e-12, 1.0 - 1e-12),
            (None, Some(t)) => t,
            (None, None) => unreachable!("TF subproblem without a time fraction"),
        };
        let t2 = self.t2.map_or(1.0 / (1.0 - tau), |i| x[i]);
        Ok(TfIterate {
            w: self.beamformers(x),
            alpha: self.scaled(x, self.a, &self.alpha_k),
            beta: self.scaled(x, self.b, &self.beta_k),
            t1: 1.0 / (tau * tau),
            t2,
            tau,
        })
    }
}

struct Builder {
    prog: ConicProgram,
    sub: Subspace,
    x_base: Vec<usize>,
    xk: Vec<CMatrix>,
    s_w: f64,
}

impl Builder {
    fn new(e: &ExpansionPoint) -> Self {
        let sub = Subspace::new(e.ch);
        let xk = sub.reduce(&e.w);
        let entries: usize = (0..sub.relays()).map(|m| sub.shape(m).0 * sub.shape(m).1).sum();
        let fro = xk.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
        let s_w = if fro > 0.0 { fro / (entries.max(1) as f64).sqrt() } else { 1.0 };
        let mut prog = ConicProgram::new();
        let mut x_base = Vec::new();
        for (m, xm) in xk.iter().enumerate() {
            let (r, c) = sub.shape(m);
            let base = prog.add_vars(&format!("W[{m}]"), 2 * r * c);
            for i in 0..r {
                for j in 0..c {
                    let v = xm[(i, j)] / s_w;
                    prog.set_hint(base + 2 * (i * c + j), v.re);
                    prog.set_hint(base + 2 * (i * c + j) + 1, v.im);
                }
            }
            x_base.push(base);
        }
        Builder { prog, sub, x_base, xk, s_w }
    }

    fn xvar(&self, m: usize, i: usize, j: usize) -> usize {
        self.x_base[m] + 2 * (i * self.sub.shape(m).1 + j)
    }

    fn vars(&mut self, name: &str, hints: &[f64]) -> usize {
        let base = self.prog.add_vars(name, hints.len());
        for (i, h) in hints.iter().enumerate() {
            self.prog.set_hint(base + i, *h);
        }
        base
    }

    /// Epigraph `v ≥ ‖tail‖²/y` of a quadratic-over-linear term whose value
    /// at the incumbent is `value`; the variable is stored in units of
    /// `value` so that its hint is one.
    fn epigraph(&mut self, name: &str, value: f64, y: AffExpr, tail: Vec<AffExpr>) -> AffExpr {
        let unit = if value > 1e-200 { value } else { 1.0 };
        let idx = self.vars(name, &[value / unit]);
        let inv = unit.sqrt().recip();
        self.prog.add_rsoc(var(idx) * 0.5, y, tail.into_iter().map(|t| t * inv).collect());
        var(idx) * unit
    }

    /// `L_{k,ℓ}(X̃) = Σ_m f̂_{m,k}ᴴ X̃_m ĥ_{ℓ,m}` (physical value is `s_W` times this).
    fn coupling(&self, k: usize, l: usize) -> ComplexAffExpr {
        let mut z = ComplexAffExpr::zero();
        for m in 0..self.sub.relays() {
            let (r, c) = self.sub.shape(m);
            for i in 0..r {
                let fi = self.sub.f[m][k][i].conj();
                for j in 0..c {
                    z.add_complex_var(self.xvar(m, i, j), fi * self.sub.h[m][l][j]);
                }
            }
        }
        z
    }

    /// Real and imaginary rows of `f̂_{m,k}ᴴ X̃_m`, scaled by `scale`.
    fn row_tail(&self, m: usize, k: usize, scale: f64, out: &mut Vec<AffExpr>) -> Result<()> {
        let (r, c) = self.sub.shape(m);
        for j in 0..c {
            let mut z = ComplexAffExpr::zero();
            for i in 0..r {
                z.add_complex_var(self.xvar(m, i, j), self.sub.f[m][k][i].conj());
            }
            push_complex(&z, scale, out)?;
        }
        Ok(())
    }

    /// Real and imaginary rows of `X̃_m ĥ_{ℓ,m}`, scaled by `scale`.
    fn col_tail(&self, m: usize, l: usize, scale: f64) -> Result<Vec<AffExpr>> {
        let (r, c) = self.sub.shape(m);
        let mut out = Vec::with_capacity(2 * r);
        for i in 0..r {
            let mut z = ComplexAffExpr::zero();
            for j in 0..c {
                z.add_complex_var(self.xvar(m, i, j), self.sub.h[m][l][j]);
            }
            push_complex(&z, scale, &mut out)?;
        }
        Ok(out)
    }

    /// Upper bound `x y ≤ (ȳ/x̄ x² + x̄/ȳ y²)/2` for nonnegative `y`, exact at
    /// `(x̄, ȳ)`. A constant `x` needs no bound.
    fn product_ub(&mut self, name: &str, x: AffExpr, xk: f64, y: AffExpr, yk: f64) -> AffExpr {
        if x.terms.is_empty() {
            return y * x.constant;
        }
        if yk <= 1e-300 || xk <= 1e-300 {
            // degenerate incumbent: fall back to a unit scale
            let idx = self.vars(name, &[1.0]);
            self.prog.add_rsoc(var(idx), AffExpr::constant(1.0), vec![x, y]);
            return var(idx);
        }
        let idx = self.vars(name, &[1.0]);
        self.prog.add_rsoc(var(idx), AffExpr::constant(1.0), vec![x * (1.0 / xk), y * (1.0 / yk)]);
        var(idx) * (xk * yk)
    }

    fn entries_tail(&self, m: usize, scale: f64) -> Vec<AffExpr> {
        let (r, c) = self.sub.shape(m);
        (0..2 * r * c).map(|t| AffExpr::term(self.x_base[m] + t, scale)).collect()
    }
}

/// Drops coefficients that are round-off from the basis change; they are
/// structurally zero and only hurt the conditioning of the solve.
fn prune(e: AffExpr) -> AffExpr {
    let big = e.terms.iter().fold(0.0f64, |m, t| m.max(t.1.abs()));
    AffExpr { terms: e.terms.into_iter().filter(|t| t.1.abs() > 1e-13 * big).collect(), constant: e.constant }
}

fn lift(z: &ComplexAffExpr) -> Result<(AffExpr, AffExpr)> {
    let (re, im) = crate::conic::lift_complex(z)?;
    Ok((prune(re), prune(im)))
}

fn push_complex(z: &ComplexAffExpr, scale: f64, out: &mut Vec<AffExpr>) -> Result<()> {
    let (re, im) = lift(z)?;
    out.push(re * scale);
    out.push(im * scale);
    Ok(())
}

fn var(i: usize) -> AffExpr {
    AffExpr::var(i)
}

fn sum_vars(idx: impl IntoIterator<Item = usize>, c: f64) -> AffExpr {
    let mut e = AffExpr::zero();
    for i in idx {
        e.add_term(i, c);
    }
    e
}

/// Inner approximation for an FD step at `it`.
pub fn fd_subproblem(it: &FdIterate, ch: &ChannelSet, cfg: &NetworkConfig, goal: &Goal) -> Result<Subproblem> {
    let e = ExpansionPoint::fd(it, ch, cfg)?;
    build(&e, goal, None)
}

/// Inner approximation for a TF step at `it`; `TimeShare::Frozen` gives the
/// HD baseline with `τ`, `t₁`, `t₂` held at the supplied fraction.
pub fn tf_subproblem(
    it: &TfIterate,
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    goal: &Goal,
    time: TimeShare,
) -> Result<Subproblem> {
    let e = ExpansionPoint::tf(it, ch, cfg)?;
    build(&e, goal, Some(time))
}

fn build(e: &ExpansionPoint, goal: &Goal, time: Option<TimeShare>) -> Result<Subproblem> {
    let cfg = e.cfg;
    let ch = e.ch;
    let users = cfg.users();
    let kp = cfg.k;
    let pm = cfg.pairing();
    let mode = e.mode;
    let relays = ch.relays();
    if let Goal::Ee { qos } = goal {
        if qos.len() != kp {
            return Err(Error::Dimension(format!("{} QoS thresholds for {kp} pairs", qos.len())));
        }
    }

    let mut bld = Builder::new(e);
    let s_w = bld.s_w;
    let ek = Couplings::new(&bld.sub.expand(&bld.xk), ch)?;
    let p_k: Vec<f64> = e.beta.iter().map(|b| 1.0 / b.sqrt()).collect();
    let s_k: Vec<f64> = e.alpha.iter().map(|a| a.sqrt()).collect();
    let (cap_ue, relay_cap) = match mode {
        Mode::Fd => (cfg.p_ue_max, (1.0 - cfg.si_lin) * cfg.p_relay_max),
        Mode::Tf => (cfg.bar_p_ue, cfg.bar_p_r),
    };
    let sr2 = cfg.sigma_r2;

    let a = bld.vars("alpha~", &vec![1.0; users]);
    let b = bld.vars("beta~", &vec![1.0; users]);
    let g = bld.vars("sqrt_beta~", &vec![1.0; users]);
    let u = bld.vars("power~", &vec![1.0; users]);
    let d = bld.vars("sqrt_alpha~", &vec![1.0; users]);
    for k in 0..users {
        bld.prog.add_rsoc(var(b + k) * 0.5, AffExpr::constant(1.0), vec![var(g + k)]);
        encode_inverse(&mut bld.prog, var(u + k), var(g + k), 1.0);
        bld.prog.add_rsoc(var(a + k) * 0.5, AffExpr::constant(1.0), vec![var(d + k)]);
        bld.prog.add_ge(var(b + k) - AffExpr::constant(1.0 / (cap_ue * cap_ue * e.beta[k])));
    }

    // time-fraction quantities as affine expressions (constants when frozen)
    let (q_e, t2_e, tau_idx, t2_idx, tau_k) = match time {
        None => (AffExpr::zero(), AffExpr::zero(), None, None, 0.0),
        Some(TimeShare::Frozen(t)) => (
            AffExpr::constant(1.0 / t),
            AffExpr::constant(1.0 / (1.0 - t)),
            None,
            None,
            t,
        ),
        Some(TimeShare::Free) => {
            // τ = τ^κ τ̃ and 1/τ ≤ q = q̃/τ^κ keep both near one
            let tk = e.tau;
            let tau = bld.vars("tau~", &[1.0]);
            let q = bld.vars("inv_tau~", &[1.0]);
            let t2 = bld.vars("t2", &[e.t2]);
            encode_inverse(&mut bld.prog, var(q), var(tau), 1.0);
            encode_inverse(&mut bld.prog, var(t2), AffExpr::constant(1.0) - var(tau) * tk, 1.0);
            (var(q) * (1.0 / tk), var(t2), Some(tau), Some(t2), tk)
        }
    };

    // Φ epigraphs, relay noise ‖W_m‖², shared by denominators and budgets
    let mut phi: Vec<Vec<AffExpr>> = vec![Vec::with_capacity(users); relays];
    let mut nu = Vec::with_capacity(relays);
    for m in 0..relays {
        for l in 0..users {
            let tail = bld.col_tail(m, l, (p_k[l] * s_w * s_w / relay_cap).sqrt())?;
            let v = bld.epigraph(&format!("phi[{l},{m}]"), p_k[l] * ek.wh[m][l] / relay_cap, var(g + l), tail);
            phi[m].push(v);
        }
        let tail = bld.entries_tail(m, (sr2 * s_w * s_w / relay_cap).sqrt());
        nu.push(bld.epigraph(&format!("nu[{m}]"), sr2 * ek.wf[m] / relay_cap, AffExpr::constant(1.0), tail));
    }
    let relay_load = |m: usize| phi[m].iter().fold(nu[m].clone(), |acc, v| acc + v.clone());

    // denominator constraints
    for k in 0..users {
        let ak = pm.partner(k);
        let mut lhs = AffExpr::zero();
        for l in (0..users).filter(|&l| l != k && l != ak) {
            let value = ek.l[k][l].norm_sqr() * p_k[l] / s_k[k];
            let mut tail = Vec::new();
            push_complex(&bld.coupling(k, l), (s_w * s_w * p_k[l] / s_k[k]).sqrt(), &mut tail)?;
            lhs += bld.epigraph(&format!("psi[{k},{l}]"), value, var(g + l), tail);
        }
        let mut tail = Vec::new();
        for m in 0..relays {
            bld.row_tail(m, k, (sr2 * s_w * s_w / s_k[k]).sqrt(), &mut tail)?;
        }
        lhs += bld.epigraph(&format!("upsilon[{k}]"), sr2 * ek.row[k] / s_k[k], AffExpr::constant(1.0), tail);
        match mode {
            Mode::Fd => {
                for eta in pm.same_side(k) {
                    lhs.add_term(u + eta, ch.chi[eta][k].norm_sqr() * p_k[eta] / s_k[k]);
                }
                let si = cfg.si_factor();
                for m in 0..relays {
                    lhs += relay_load(m) * (si * ek.g2[m][k] * relay_cap / s_k[k]);
                }
                lhs.constant += cfg.sigma_u2 / s_k[k];
            }
            Mode::Tf => lhs += q_e.clone() * (cfg.sigma_u2 / s_k[k]),
        }
        bld.prog.add_ge(var(d + k) - lhs);
    }

    // power budgets
    let ue_sum = sum_vars([], 0.0) + {
        let mut s = AffExpr::zero();
        for k in 0..users {
            s.add_term(u + k, p_k[k] / cfg.p_ue_sum_max);
        }
        s
    };
    let mut relay_total = AffExpr::zero();
    for m in 0..relays {
        relay_total += relay_load(m) * (relay_cap / cfg.p_relay_sum_max);
    }
    match mode {
        Mode::Fd => {
            bld.prog.add_ge(AffExpr::constant(1.0) - ue_sum);
            for m in 0..relays {
                bld.prog.add_ge(AffExpr::constant(1.0) - relay_load(m));
            }
            bld.prog.add_ge(AffExpr::constant(1.0 - cfg.si_lin) - relay_total);
        }
        Mode::Tf => {
            // 1/τ and 1/(τ(1−τ)) replaced by their tangents, which lie below;
            // rows are divided by the value of the tangent at τ^κ
            let t = tau_k;
            let gv = 1.0 / (t * (1.0 - t));
            let (inv, inv2) = match tau_idx {
                Some(i) => {
                    let gd = -(1.0 - 2.0 * t) / (1.0 - t);
                    (AffExpr::constant(2.0) - var(i), AffExpr::constant(1.0 - gd) + var(i) * gd)
                }
                None => (AffExpr::constant(1.0), AffExpr::constant(1.0)),
            };
            bld.prog.add_ge(inv.clone() - ue_sum * t);
            for m in 0..relays {
                bld.prog.add_ge(inv.clone() - relay_load(m) * t);
            }
            bld.prog.add_ge(inv2 - relay_total * (1.0 / gv));
        }
    }

    // trust regions and inverse-coupling epigraphs
    let h = bld.vars("inv_coupling", &vec![1.0; users]);
    for k in 0..users {
        let lk = e.terms[k].coupling;
        let l2 = lk.norm_sqr();
        let (re, _) = lift(&bld.coupling(k, pm.partner(k)).scale(lk.conj()))?;
        let lin = re * (2.0 * s_w / l2) - AffExpr::constant(1.0);
        bld.prog.add_ge(lin.clone() - AffExpr::constant(TRUST_MARGIN));
        encode_inverse(&mut bld.prog, var(h + k), lin, 1.0);
    }
    let bracket =
        |k: usize| AffExpr::constant(2.0) - var(h + k) - var(a + k) * 0.5 - var(b + pm.partner(k)) * 0.5;
    let rate_lb = |k: usize| bracket(k) * e.terms[k].slope + AffExpr::constant(e.terms[k].log);

    // consumption expressions used by the EE objectives
    let circuit = cfg.circuit_power(mode);
    let objective = match (mode, goal) {
        (Mode::Fd, Goal::Maximin) | (Mode::Tf, Goal::Maximin) => {
            let pair = |k: usize| -> AffExpr {
                match mode {
                    Mode::Fd => rate_lb(k) + rate_lb(k + kp),
                    Mode::Tf => {
                        let gam = |j: usize| {
                            let (c, dd, ee) = e.tf_rate_coefficients(j);
                            AffExpr::constant(c) + bracket(j) * dd - t2_e.clone() * ee
                        };
                        gam(k) + gam(k + kp)
                    }
                }
            };
            let hint = (0..kp).map(|k| bld.prog.hint_of(&pair(k))).fold(f64::INFINITY, f64::min);
            let t = bld.vars("epigraph", &[hint]);
            for k in 0..kp {
                bld.prog.add_ge(pair(k) - var(t));
            }
            var(t)
        }
        (Mode::Fd, Goal::Ee { qos }) => {
            let mut pi = AffExpr::constant(circuit);
            for k in 0..users {
                pi.add_term(u + k, cfg.zeta * p_k[k]);
            }
            for m in 0..relays {
                pi += relay_load(m) * (cfg.zeta * relay_cap / (1.0 - cfg.si_lin));
            }
            for (k, r) in qos.iter().enumerate() {
                bld.prog.add_ge(rate_lb(k) + rate_lb(k + kp) - AffExpr::constant(*r));
            }
            let mut obj = AffExpr::zero();
            for k in 0..users {
                let (p, q, r) = e.fd_ee_coefficients(k);
                obj += AffExpr::constant(p) + bracket(k) * q - pi.clone() * r;
            }
            obj
        }
        (Mode::Tf, Goal::Ee { qos }) => {
            // π at t₁ = 1/τ²: ζ[τ Σp + (1−τ) A + τ(1−τ) σ²‖W‖²] + circuit,
            // each product bounded above by a quadratic that is tight at κ
            let t = tau_k;
            let tau = match tau_idx {
                Some(i) => var(i) * t,
                None => AffExpr::constant(t),
            };
            let mut ue = AffExpr::zero();
            for k in 0..users {
                ue.add_term(u + k, p_k[k]);
            }
            let mut sig = AffExpr::zero();
            let mut noise = AffExpr::zero();
            for m in 0..relays {
                for v in &phi[m] {
                    sig += v.clone() * relay_cap;
                }
                noise += nu[m].clone() * relay_cap;
            }
            let share = AffExpr::constant(t * (1.0 - t)) + (tau.clone() - AffExpr::constant(t)) * (1.0 - 2.0 * t);
            let mut inner = bld.product_ub("ue_energy", tau.clone(), t, ue, p_k.iter().sum());
            let a_k = bld.prog.hint_of(&sig);
            inner += bld.product_ub("relay_energy", AffExpr::constant(1.0) - tau, 1.0 - t, sig, a_k);
            let n_k = bld.prog.hint_of(&noise);
            inner += bld.product_ub("noise_energy", share, t * (1.0 - t), noise, n_k);
            let pi = inner * cfg.zeta + AffExpr::constant(circuit);
            for (k, r) in qos.iter().enumerate() {
                bld.prog.add_ge(rate_lb(k) + rate_lb(k + kp) - t2_e.clone() * *r);
            }
            let mut obj = AffExpr::zero();
            for k in 0..users {
                let (p, q, r, s) = e.tf_ee_coefficients(k);
                obj += AffExpr::constant(p) + bracket(k) * q - t2_e.clone() * r - pi.clone() * s;
            }
            obj
        }
    };
    bld.prog.maximize(objective);

    let frozen_tau = match time {
        Some(TimeShare::Frozen(t)) => Some(t),
        _ => None,
    };
    Ok(Subproblem {
        program: bld.prog,
        mode,
        sub: bld.sub,
        x_base: bld.x_base,
        s_w,
        a,
        b,
        alpha_k: e.alpha.clone(),
        beta_k: e.beta.clone(),
        tau: tau_idx,
        t2: t2_idx,
        tau_k: e.tau,
        frozen_tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_channels;
    use crate::sca::{fd_objective, init_fd, init_tf, tf_objective, Objective};

    fn check(sub: &Subproblem, truth: f64) {
        let viol = sub.program.max_violation(sub.hint());
        assert!(viol < 1e-9, "hint violates the program by {viol:.3e}");
        let v = sub.incumbent_value();
        assert!((v - truth).abs() <= 1e-8 * truth.abs().max(1e-12), "{v} vs {truth}");
    }

    #[test]
    fn fd_hint_is_feasible_and_tight() {
        let cfg = NetworkConfig::experiment(2, 2, 4, -130.0);
        for seed in 0..5 {
            let ch = generate_channels(&cfg, Mode::Fd, seed);
            let it = init_fd(&ch, &cfg, 0).unwrap();
            let mm = fd_objective(Objective::Maximin, &it, &ch, &cfg).unwrap();
            check(&fd_subproblem(&it, &ch, &cfg, &Goal::Maximin).unwrap(), mm);
            let ee = fd_objective(Objective::Ee, &it, &ch, &cfg).unwrap();
            let goal = Goal::Ee { qos: vec![0.5 * mm; 2] };
            check(&fd_subproblem(&it, &ch, &cfg, &goal).unwrap(), ee);
        }
    }

    #[test]
    fn tf_hint_is_feasible_and_tight() {
        let cfg = NetworkConfig::experiment(3, 4, 2, -130.0);
        for seed in 0..5 {
            let ch = generate_channels(&cfg, Mode::Tf, seed);
            let it = init_tf(&ch, &cfg, 0).unwrap();
            let mm = tf_objective(Objective::Maximin, &it, &ch, &cfg).unwrap();
            let ee = tf_objective(Objective::Ee, &it, &ch, &cfg).unwrap();
            let goal = Goal::Ee { qos: vec![0.5 * mm; 3] };
            for time in [TimeShare::Free, TimeShare::Frozen(0.5)] {
                check(&tf_subproblem(&it, &ch, &cfg, &Goal::Maximin, time).unwrap(), mm);
                check(&tf_subproblem(&it, &ch, &cfg, &goal, time).unwrap(), ee);
            }
        }
    }

    #[test]
    fn recovery_reads_back_the_hint() {
        let cfg = NetworkConfig::experiment(2, 1, 8, -130.0);
        let ch = generate_channels(&cfg, Mode::Fd, 2);
        let it = init_fd(&ch, &cfg, 0).unwrap();
        let sub = fd_subproblem(&it, &ch, &cfg, &Goal::Maximin).unwrap();
        let back = sub.recover_fd(sub.hint()).unwrap();
        for (a, b) in back.alpha.iter().zip(&it.alpha) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
        assert!((&back.w.w[0] - &it.w.w[0]).norm() <= 1e-10 * it.w.w[0].norm());
        assert!(sub.recover_tf(sub.hint()).is_err());
    }
}
