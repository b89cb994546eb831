//! Closed-form evaluators: couplings, convex atoms, SINR, rates, powers and
//! feasibility checks for both duplexing modes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ChannelSet, Mode, NetworkConfig};
use crate::{CMatrix, CVector, Complex64};

/// One beamforming matrix per relay.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<CMatrix>,
}

impl BeamformerSet {
    pub fn zeros(relays: usize, n: usize) -> Self {
        BeamformerSet { w: vec![CMatrix::zeros(n, n); relays] }
    }

    pub fn relays(&self) -> usize {
        self.w.len()
    }

    pub fn scale(&mut self, c: f64) {
        for w in &mut self.w {
            *w *= Complex64::new(c, 0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|w| w.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }
}

/// UE powers in watts, plus the uplink time fraction in TF mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
    pub tau: Option<f64>,
}

impl PowerAllocation {
    pub fn fd(p: Vec<f64>) -> Self {
        PowerAllocation { p, tau: None }
    }

    pub fn tf(p: Vec<f64>, tau: f64) -> Self {
        PowerAllocation { p, tau: Some(tau) }
    }
}

fn check_dims(w: &BeamformerSet, ch: &ChannelSet) -> Result<()> {
    let n = ch.antennas();
    if w.relays() != ch.relays() {
        return Err(Error::Dimension(format!(
            "{} beamformers for {} relays",
            w.relays(),
            ch.relays()
        )));
    }
    if let Some(bad) = w.w.iter().find(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::Dimension(format!(
            "beamformer is {}x{}, channels have {} antennas",
            bad.nrows(),
            bad.ncols(),
            n
        )));
    }
    Ok(())
}

fn check_user(ch: &ChannelSet, k: usize) -> Result<()> {
    if k >= ch.users() {
        return Err(Error::Dimension(format!("UE index {k} out of range 0..{}", ch.users())));
    }
    Ok(())
}

/// `f^H W h` without conjugating `f` twice.
fn bilinear(f: &CVector, w: &CMatrix, h: &CVector) -> Complex64 {
    let wh = w * h;
    f.iter().zip(wh.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn coupling(w: &BeamformerSet, ch: &ChannelSet, k: usize, l: usize) -> Result<Complex64> {
    check_dims(w, ch)?;
    check_user(ch, k)?;
    check_user(ch, l)?;
    Ok((0..ch.relays()).map(|m| bilinear(&ch.f[m][k], &w.w[m], &ch.h[l][m])).sum())
}

/// `‖L_k(W)‖²`, the squared norm of the stacked row `[f_{1,k}^H W_1, …]`.
pub fn coupling_row_norm_sqr(w: &BeamformerSet, ch: &ChannelSet, k: usize) -> Result<f64> {
    check_dims(w, ch)?;
    check_user(ch, k)?;
    Ok((0..ch.relays()).map(|m| row_norm_sqr(&ch.f[m][k], &w.w[m])).sum())
}

fn row_norm_sqr(f: &CVector, w: &CMatrix) -> f64 {
    (w.adjoint() * f).norm_squared()
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} must be positive")))
    }
}

/// `Ψ_{k,ℓ} = |L_{k,ℓ}(W)|² / √(αβ)`.
pub fn psi(w: &BeamformerSet, ch: &ChannelSet, alpha: f64, beta: f64, k: usize, l: usize) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    Ok(coupling(w, ch, k, l)?.norm_sqr() / (alpha * beta).sqrt())
}

/// `Υ_k = ‖L_k(W)‖² / √α`.
pub fn upsilon(w: &BeamformerSet, ch: &ChannelSet, alpha: f64, k: usize) -> Result<f64> {
    check_positive("alpha", alpha)?;
    Ok(coupling_row_norm_sqr(w, ch, k)? / alpha.sqrt())
}

/// `Φ = ‖W_m h‖² / √(αβ)`, the amplified-signal power of one uplink stream.
pub fn phi(w_m: &CMatrix, h: &CVector, alpha: f64, beta: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    if w_m.ncols() != h.len() {
        return Err(Error::Dimension(format!("W has {} columns, h has {}", w_m.ncols(), h.len())));
    }
    Ok((w_m * h).norm_squared() / (alpha * beta).sqrt())
}

/// Every channel-dependent quantity needed by the SINR and power formulas,
/// evaluated once for a fixed beamformer.
#[derive(Debug, Clone)]
pub struct Couplings {
    /// `l[k][ℓ] = L_{k,ℓ}(W)`.
    pub l: Vec<Vec<Complex64>>,
    /// `row[k] = ‖L_k(W)‖²`.
    pub row: Vec<f64>,
    /// `wh[m][ℓ] = ‖W_m h_{ℓ,m}‖²`.
    pub wh: Vec<Vec<f64>>,
    /// `wf[m] = ‖W_m‖_F²`.
    pub wf: Vec<f64>,
    /// `g2[m][k] = ‖g_{m,k}‖²`.
    pub g2: Vec<Vec<f64>>,
}

impl Couplings {
    pub fn new(w: &BeamformerSet, ch: &ChannelSet) -> Result<Self> {
        check_dims(w, ch)?;
        let users = ch.users();
        let relays = ch.relays();
        let whs: Vec<Vec<CVector>> =
            (0..relays).map(|m| (0..users).map(|l| &w.w[m] * &ch.h[l][m]).collect()).collect();
        let l = (0..users)
            .map(|k| {
                (0..users)
                    .map(|j| {
                        (0..relays)
                            .map(|m| {
                                ch.f[m][k]
                                    .iter()
                                    .zip(whs[m][j].iter())
                                    .map(|(a, b)| a.conj() * b)
                                    .sum::<Complex64>()
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let row = (0..users)
            .map(|k| (0..relays).map(|m| row_norm_sqr(&ch.f[m][k], &w.w[m])).sum())
            .collect();
        let wh = whs.iter().map(|r| r.iter().map(|v| v.norm_squared()).collect()).collect();
        let wf = w.w.iter().map(|m| m.norm_squared()).collect();
        let g2 = ch.g.iter().map(|r| r.iter().map(|v| v.norm_squared()).collect()).collect();
        Ok(Couplings { l, row, wh, wf, g2 })
    }

    pub fn users(&self) -> usize {
        self.l.len()
    }

    /// Relay `m`'s bracket `Σ_ℓ p_ℓ‖W_m h_ℓ‖² + σ_R²‖W_m‖²`.
    pub fn relay_bracket(&self, p: &[f64], sigma_r2: f64, m: usize) -> f64 {
        self.wh[m].iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + sigma_r2 * self.wf[m]
    }

    /// Denominator of the FD SINR at UE `k`.
    pub fn denominator_fd(&self, p: &[f64], ch: &ChannelSet, cfg: &NetworkConfig, k: usize) -> f64 {
        let pm = cfg.pairing();
        let a = pm.partner(k);
        let mut d = 0.0;
        for (l, pl) in p.iter().enumerate() {
            if l != k && l != a {
                d += pl * self.l[k][l].norm_sqr();
            }
        }
        d += cfg.sigma_r2 * self.row[k];
        let si = cfg.si_factor();
        for m in 0..self.wf.len() {
            d += si * self.g2[m][k] * self.relay_bracket(p, cfg.sigma_r2, m);
        }
        for eta in pm.same_side(k) {
            d += ch.chi[eta][k].norm_sqr() * p[eta];
        }
        d + cfg.sigma_u2
    }

    /// Denominator of the TF SINR at UE `k`.
    pub fn denominator_tf(&self, p: &[f64], cfg: &NetworkConfig, tau: f64, k: usize) -> f64 {
        let a = cfg.pairing().partner(k);
        let mut d = 0.0;
        for (l, pl) in p.iter().enumerate() {
            if l != k && l != a {
                d += pl * self.l[k][l].norm_sqr();
            }
        }
        d + cfg.sigma_r2 * self.row[k] + cfg.sigma_u2 / tau
    }

    pub fn sinr_fd(&self, p: &[f64], ch: &ChannelSet, cfg: &NetworkConfig, k: usize) -> f64 {
        let a = cfg.pairing().partner(k);
        p[a] * self.l[k][a].norm_sqr() / self.denominator_fd(p, ch, cfg, k)
    }

    pub fn sinr_tf(&self, p: &[f64], cfg: &NetworkConfig, tau: f64, k: usize) -> f64 {
        let a = cfg.pairing().partner(k);
        p[a] * self.l[k][a].norm_sqr() / self.denominator_tf(p, cfg, tau, k)
    }

    pub fn pair_rates_fd(&self, p: &[f64], ch: &ChannelSet, cfg: &NetworkConfig) -> Vec<f64> {
        (0..cfg.k)
            .map(|k| {
                let a = k + cfg.k;
                self.sinr_fd(p, ch, cfg, k).ln_1p() + self.sinr_fd(p, ch, cfg, a).ln_1p()
            })
            .collect()
    }

    pub fn pair_rates_tf(&self, p: &[f64], cfg: &NetworkConfig, tau: f64) -> Vec<f64> {
        (0..cfg.k)
            .map(|k| {
                let a = k + cfg.k;
                (1.0 - tau) * (self.sinr_tf(p, cfg, tau, k).ln_1p() + self.sinr_tf(p, cfg, tau, a).ln_1p())
            })
            .collect()
    }

    pub fn relay_power_fd(&self, p: &[f64], cfg: &NetworkConfig, m: usize) -> f64 {
        self.relay_bracket(p, cfg.sigma_r2, m) / (1.0 - cfg.si_lin)
    }

    pub fn relay_power_tf(&self, p: &[f64], cfg: &NetworkConfig, tau: f64, m: usize) -> f64 {
        tau * self.relay_bracket(p, cfg.sigma_r2, m)
    }

    /// Total consumption `ζ(P^U_sum + P^R_sum) + M P^R + 2K P^U` in FD mode.
    pub fn consumption_fd(&self, p: &[f64], cfg: &NetworkConfig) -> f64 {
        let relays: f64 = (0..self.wf.len()).map(|m| self.relay_power_fd(p, cfg, m)).sum();
        cfg.zeta * (p.iter().sum::<f64>() + relays) + cfg.circuit_power(Mode::Fd)
    }

    /// Total consumption with `P^U_sum = τΣp` and `P^R_sum = (1−τ)Σ P^A_m`.
    pub fn consumption_tf(&self, p: &[f64], cfg: &NetworkConfig, tau: f64) -> f64 {
        let relays: f64 =
            (0..self.wf.len()).map(|m| self.relay_power_tf(p, cfg, tau, m)).sum::<f64>() * (1.0 - tau);
        cfg.zeta * (tau * p.iter().sum::<f64>() + relays) + cfg.circuit_power(Mode::Tf)
    }
}

fn check_powers(p: &[f64], ch: &ChannelSet) -> Result<()> {
    if p.len() != ch.users() {
        return Err(Error::Dimension(format!("{} powers for {} UEs", p.len(), ch.users())));
    }
    if let Some(v) = p.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("UE power {v} must be nonnegative")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("time fraction {tau} must lie in (0, 1)")))
    }
}

fn check_si(cfg: &NetworkConfig) -> Result<()> {
    if cfg.si_lin < 1.0 && cfg.si_lin >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("si_lin = {} must lie in [0, 1)", cfg.si_lin)))
    }
}

pub fn relay_power_fd(
    p: &[f64],
    w: &BeamformerSet,
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    m: usize,
) -> Result<f64> {
    check_si(cfg)?;
    check_powers(p, ch)?;
    Ok(Couplings::new(w, ch)?.relay_power_fd(p, cfg, m))
}

pub fn sinr_fd(p: &[f64], w: &BeamformerSet, ch: &ChannelSet, cfg: &NetworkConfig, k: usize) -> Result<f64> {
    check_si(cfg)?;
    check_powers(p, ch)?;
    check_user(ch, k)?;
    Ok(Couplings::new(w, ch)?.sinr_fd(p, ch, cfg, k))
}

/// `R_k = ln(1+γ_k) + ln(1+γ_{a(k)})` for pair `k < K`, in nats.
pub fn pair_rate_fd(p: &[f64], w: &BeamformerSet, ch: &ChannelSet, cfg: &NetworkConfig, k: usize) -> Result<f64> {
    check_si(cfg)?;
    check_powers(p, ch)?;
    if k >= cfg.k {
        return Err(Error::Dimension(format!("pair index {k} out of range 0..{}", cfg.k)));
    }
    Ok(Couplings::new(w, ch)?.pair_rates_fd(p, ch, cfg)[k])
}

pub fn ee_fd(p: &[f64], w: &BeamformerSet, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<f64> {
    check_si(cfg)?;
    check_powers(p, ch)?;
    let c = Couplings::new(w, ch)?;
    Ok(c.pair_rates_fd(p, ch, cfg).iter().sum::<f64>() / c.consumption_fd(p, cfg))
}

pub fn relay_power_tf(
    p: &[f64],
    w: &BeamformerSet,
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    tau: f64,
    m: usize,
) -> Result<f64> {
    check_tau(tau)?;
    check_powers(p, ch)?;
    Ok(Couplings::new(w, ch)?.relay_power_tf(p, cfg, tau, m))
}

pub fn relay_sum_power_tf(
    p: &[f64],
    w: &BeamformerSet,
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    tau: f64,
) -> Result<f64> {
    check_tau(tau)?;
    check_powers(p, ch)?;
    let c = Couplings::new(w, ch)?;
    Ok((1.0 - tau) * (0..ch.relays()).map(|m| c.relay_power_tf(p, cfg, tau, m)).sum::<f64>())
}

pub fn sinr_tf(
    p: &[f64],
    w: &BeamformerSet,
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    tau: f64,
    k: usize,
) -> Result<f64> {
    check_tau(tau)?;
    check_powers(p, ch)?;
    check_user(ch, k)?;
    Ok(Couplings::new(w, ch)?.sinr_tf(p, cfg, tau, k))
}

/// `(1−τ)[ln(1+γ_k) + ln(1+γ_{a(k)})]` for pair `k < K`, in nats.
pub fn pair_rate_tf(
    tau: f64,
    p: &[f64],
    w: &BeamformerSet,
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    k: usize,
) -> Result<f64> {
    check_tau(tau)?;
    check_powers(p, ch)?;
    if k >= cfg.k {
        return Err(Error::Dimension(format!("pair index {k} out of range 0..{}", cfg.k)));
    }
    Ok(Couplings::new(w, ch)?.pair_rates_tf(p, cfg, tau)[k])
}

pub fn ee_tf(tau: f64, p: &[f64], w: &BeamformerSet, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<f64> {
    check_tau(tau)?;
    check_powers(p, ch)?;
    let c = Couplings::new(w, ch)?;
    Ok(c.pair_rates_tf(p, cfg, tau).iter().sum::<f64>() / c.consumption_tf(p, cfg, tau))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `max(0, value − limit)`.
    pub violation: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub checks: Vec<ConstraintCheck>,
    pub feasible: bool,
    pub worst_violation: f64,
}

impl FeasibilityReport {
    fn push(&mut self, name: String, value: f64, limit: f64, tol: f64) {
        let violation = if value.is_nan() { f64::INFINITY } else { (value - limit).max(0.0) };
        let satisfied = violation <= tol * limit.abs().max(1.0);
        self.feasible &= satisfied;
        self.worst_violation = self.worst_violation.max(violation);
        self.checks.push(ConstraintCheck { name, value, limit, violation, satisfied });
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }
}

/// Checks every physical power limit of the given mode. A constraint passes
/// when its excess is at most `tol · max(1, |limit|)`.
pub fn check_feasibility(
    mode: Mode,
    alloc: &PowerAllocation,
    w: &BeamformerSet,
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    tol: f64,
) -> Result<FeasibilityReport> {
    let couplings = Couplings::new(w, ch)?;
    if alloc.p.len() != ch.users() {
        return Err(Error::Dimension(format!("{} powers for {} UEs", alloc.p.len(), ch.users())));
    }
    let p = &alloc.p;
    let mut rep = FeasibilityReport { checks: Vec::new(), feasible: true, worst_violation: 0.0 };
    for (k, pk) in p.iter().enumerate() {
        rep.push(format!("p[{k}] >= 0"), -pk, 0.0, tol);
    }
    match mode {
        Mode::Fd => {
            for (k, pk) in p.iter().enumerate() {
                rep.push(format!("p[{k}] <= p_ue_max"), *pk, cfg.p_ue_max, tol);
            }
            rep.push("sum p <= p_ue_sum_max".into(), p.iter().sum(), cfg.p_ue_sum_max, tol);
            let mut total = 0.0;
            for m in 0..ch.relays() {
                let pa = couplings.relay_power_fd(p, cfg, m);
                total += pa;
                rep.push(format!("relay[{m}] <= p_relay_max"), pa, cfg.p_relay_max, tol);
            }
            rep.push("relay sum <= p_relay_sum_max".into(), total, cfg.p_relay_sum_max, tol);
        }
        Mode::Tf => {
            let tau = alloc.tau.unwrap_or(f64::NAN);
            rep.push("tau > 0".into(), -tau, 0.0, 0.0);
            rep.push("tau < 1".into(), tau, 1.0, 0.0);
            if !(tau > 0.0 && tau < 1.0) {
                rep.feasible = false;
                return Ok(rep);
            }
            for (k, pk) in p.iter().enumerate() {
                rep.push(format!("p[{k}] <= bar_p_ue"), *pk, cfg.bar_p_ue, tol);
            }
            rep.push("tau sum p <= p_ue_sum_max".into(), tau * p.iter().sum::<f64>(), cfg.p_ue_sum_max, tol);
            let mut total = 0.0;
            for m in 0..ch.relays() {
                let pa = couplings.relay_power_tf(p, cfg, tau, m);
                total += pa;
                rep.push(format!("relay[{m}] <= bar_p_r"), pa, cfg.bar_p_r, tol);
            }
            rep.push("(1 - tau) relay sum <= p_relay_sum_max".into(), (1.0 - tau) * total, cfg.p_relay_sum_max, tol);
        }
    }
    Ok(rep)
}
