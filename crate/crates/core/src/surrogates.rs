//! Inner-approximation bounds for the path-following steps.
//!
//! The scalar bounds [`ine1_rhs`], [`ine1p_rhs`] and [`ine2_rhs`] minorise
//! `ln(1 + 1/(xy))` divided by one or two positive scalars. The iterate-level
//! surrogates compose them with the substitutions `x = 1/|L(W)|²`,
//! `y = √(αβ)` and two further upper bounds that keep every step conic:
//!
//! * `1/|L(W)|² ≤ 1/(2Re{L(W) L(W^κ)*} − |L(W^κ)|²)` on the trust region;
//! * `√(αβ)/√(ᾱβ̄) ≤ ½(α/ᾱ + β/β̄)` ([`sqrt_prod_tangent`]).
//!
//! Both are tight at the expansion point, so every surrogate is too.

use crate::error::{Error, Result};
use crate::model::{ChannelSet, Mode, NetworkConfig};
use crate::physics::{BeamformerSet, Couplings};
use crate::sca::{FdIterate, TfIterate};
use crate::{CMatrix, CVector, Complex64};

/// Relative trust-region margin: the linearised coupling must stay above
/// this fraction of `|L(W^κ)|²`.
pub const TRUST_MARGIN: f64 = 1e-3;

fn positive(args: &[(&str, f64)]) -> Result<()> {
    for (name, v) in args {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} = {v} must be positive")));
        }
    }
    Ok(())
}

pub fn sqrt_prod_tangent(alpha: f64, beta: f64, alpha_bar: f64, beta_bar: f64) -> Result<f64> {
    positive(&[("alpha", alpha), ("beta", beta), ("alpha_bar", alpha_bar), ("beta_bar", beta_bar)])?;
    Ok(0.5 * (alpha / alpha_bar + beta / beta_bar))
}

/// Lower bound on `ln(1 + 1/(xy)) / t`, tight at `(x̄, ȳ, t̄)`.
pub fn ine1_rhs(x: f64, y: f64, t: f64, xb: f64, yb: f64, tb: f64) -> Result<f64> {
    positive(&[("x", x), ("y", y), ("t", t), ("x_bar", xb), ("y_bar", yb), ("t_bar", tb)])?;
    let l = (1.0 / (xb * yb)).ln_1p();
    Ok(2.0 * l / tb + (2.0 - x / xb - y / yb) / ((xb * yb + 1.0) * tb) - l / (tb * tb) * t)
}

/// Lower bound on `ln(1 + 1/(xy))`, tight at `(x̄, ȳ)`.
pub fn ine1p_rhs(x: f64, y: f64, xb: f64, yb: f64) -> Result<f64> {
    positive(&[("x", x), ("y", y), ("x_bar", xb), ("y_bar", yb)])?;
    let l = (1.0 / (xb * yb)).ln_1p();
    Ok(l + (2.0 - x / xb - y / yb) / (xb * yb + 1.0))
}

/// Lower bound on `ln(1 + 1/(xy)) / (zt)`, tight at `(x̄, ȳ, z̄, t̄)`.
#[allow(clippy::too_many_arguments)]
pub fn ine2_rhs(x: f64, y: f64, z: f64, t: f64, xb: f64, yb: f64, zb: f64, tb: f64) -> Result<f64> {
    positive(&[
        ("x", x),
        ("y", y),
        ("z", z),
        ("t", t),
        ("x_bar", xb),
        ("y_bar", yb),
        ("z_bar", zb),
        ("t_bar", tb),
    ])?;
    let l = (1.0 / (xb * yb)).ln_1p();
    Ok(3.0 * l / (zb * tb) + (2.0 - x / xb - y / yb) / ((xb * yb + 1.0) * zb * tb)
        - l / (zb * zb * tb) * z
        - l / (zb * tb * tb) * t)
}

/// `2Re{L · conj(L^κ)} − |L^κ|²` for scalar couplings.
pub fn linearized_coupling(l: Complex64, l_exp: Complex64) -> f64 {
    2.0 * (l * l_exp.conj()).re - l_exp.norm_sqr()
}

/// `π(β, W)`: lifted FD consumption, equal to the physical consumption when
/// `β = 1/p²`.
pub fn fd_pi(beta: &[f64], w: &BeamformerSet, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<f64> {
    positive(&beta.iter().map(|b| ("beta", *b)).collect::<Vec<_>>())?;
    let c = Couplings::new(w, ch)?;
    Ok(fd_pi_from(beta, &c, cfg))
}

fn fd_pi_from(beta: &[f64], c: &Couplings, cfg: &NetworkConfig) -> f64 {
    let ue: f64 = beta.iter().map(|b| 1.0 / b.sqrt()).sum();
    let relay: f64 = (0..c.wf.len())
        .map(|m| {
            c.wh[m].iter().zip(beta).map(|(wh, b)| wh / b.sqrt()).sum::<f64>() + cfg.sigma_r2 * c.wf[m]
        })
        .sum();
    cfg.zeta * (ue + relay / (1.0 - cfg.si_lin)) + cfg.circuit_power(Mode::Fd)
}

/// `π(β, W, t₁)` of the TF energy-efficiency reformulation, evaluated as
/// printed: the relay signal terms carry `(1 − 1/√t₁)` and the relay noise
/// term a further `1/√t₁`.
pub fn tf_pi(beta: &[f64], w: &BeamformerSet, t1: f64, ch: &ChannelSet, cfg: &NetworkConfig) -> Result<f64> {
    positive(&[("t1", t1)])?;
    positive(&beta.iter().map(|b| ("beta", *b)).collect::<Vec<_>>())?;
    let c = Couplings::new(w, ch)?;
    Ok(tf_pi_from(beta, &c, t1, cfg))
}

fn tf_pi_from(beta: &[f64], c: &Couplings, t1: f64, cfg: &NetworkConfig) -> f64 {
    let st = t1.sqrt();
    let ue: f64 = beta.iter().map(|b| 1.0 / (b * t1).sqrt()).sum();
    let relay: f64 = (0..c.wf.len())
        .map(|m| {
            c.wh[m].iter().zip(beta).map(|(wh, b)| wh / b.sqrt()).sum::<f64>() + cfg.sigma_r2 * c.wf[m] / st
        })
        .sum();
    cfg.zeta * (ue + (1.0 - 1.0 / st) * relay) + cfg.circuit_power(Mode::Tf)
}

/// Coefficients of one directed surrogate term. Every field is strictly
/// positive at a valid expansion point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedTerm {
    /// `L_{k,a(k)}(W^κ)`.
    pub coupling: Complex64,
    /// `x^κ = |L^κ|² / √(α_k^κ β_{a(k)}^κ)`.
    pub x: f64,
    /// `ln(1 + x^κ)`.
    pub log: f64,
    /// `x^κ / (x^κ + 1)`.
    pub slope: f64,
}

/// An iterate together with every cached quantity the surrogates need.
#[derive(Debug, Clone)]
pub struct ExpansionPoint<'a> {
    pub mode: Mode,
    pub ch: &'a ChannelSet,
    pub cfg: &'a NetworkConfig,
    pub w: BeamformerSet,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub t1: f64,
    pub t2: f64,
    pub tau: f64,
    pub terms: Vec<DirectedTerm>,
    pub couplings: Couplings,
    /// FD consumption `π(β^κ, W^κ)`; zero in TF mode.
    pub t_fd: f64,
    /// TF consumption `π(β^κ, W^κ, t₁^κ)`; zero in FD mode.
    pub t_tf: f64,
    wh: Vec<Vec<CVector>>,
}

impl<'a> ExpansionPoint<'a> {
    pub fn fd(it: &FdIterate, ch: &'a ChannelSet, cfg: &'a NetworkConfig) -> Result<Self> {
        let mut e = Self::build(Mode::Fd, &it.w, &it.alpha, &it.beta, 1.0, 1.0, 1.0, ch, cfg)?;
        e.t_fd = fd_pi_from(&e.beta, &e.couplings, cfg);
        Ok(e)
    }

    pub fn tf(it: &TfIterate, ch: &'a ChannelSet, cfg: &'a NetworkConfig) -> Result<Self> {
        positive(&[("t1", it.t1), ("t2", it.t2), ("tau", it.tau)])?;
        let mut e = Self::build(Mode::Tf, &it.w, &it.alpha, &it.beta, it.t1, it.t2, it.tau, ch, cfg)?;
        e.t_tf = tf_pi_from(&e.beta, &e.couplings, it.t1, cfg);
        Ok(e)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        mode: Mode,
        w: &BeamformerSet,
        alpha: &[f64],
        beta: &[f64],
        t1: f64,
        t2: f64,
        tau: f64,
        ch: &'a ChannelSet,
        cfg: &'a NetworkConfig,
    ) -> Result<Self> {
        let users = cfg.users();
        if alpha.len() != users || beta.len() != users {
            return Err(Error::Dimension(format!("expected {users} entries in alpha and beta")));
        }
        positive(&alpha.iter().chain(beta).map(|v| ("alpha/beta", *v)).collect::<Vec<_>>())?;
        let couplings = Couplings::new(w, ch)?;
        let pm = cfg.pairing();
        let mut terms = Vec::with_capacity(users);
        for k in 0..users {
            let a = pm.partner(k);
            let l = couplings.l[k][a];
            if l.norm_sqr() == 0.0 || !l.norm_sqr().is_finite() {
                return Err(Error::Degenerate(format!("zero coupling L[{k}][{a}] at the expansion point")));
            }
            let x = l.norm_sqr() / (alpha[k] * beta[a]).sqrt();
            terms.push(DirectedTerm { coupling: l, x, log: x.ln_1p(), slope: x / (x + 1.0) });
        }
        let wh = (0..ch.relays()).map(|m| (0..users).map(|l| &w.w[m] * &ch.h[l][m]).collect()).collect();
        Ok(ExpansionPoint {
            mode,
            ch,
            cfg,
            w: w.clone(),
            alpha: alpha.to_vec(),
            beta: beta.to_vec(),
            t1,
            t2,
            tau,
            terms,
            couplings,
            t_fd: 0.0,
            t_tf: 0.0,
            wh,
        })
    }

    pub fn partner(&self, k: usize) -> usize {
        self.cfg.pairing().partner(k)
    }

    /// `2Re{L_{k,a(k)}(W) conj(L^κ)} − |L^κ|²`; linear in `W`.
    pub fn trust_region_lhs(&self, w: &BeamformerSet, k: usize) -> Result<f64> {
        let l = crate::physics::coupling(w, self.ch, k, self.partner(k))?;
        Ok(linearized_coupling(l, self.terms[k].coupling))
    }

    /// Shared bracket `2 − |L^κ|²/trust − ½(α/α^κ + β/β^κ)`.
    fn bracket(&self, w: &BeamformerSet, alpha_k: f64, beta_a: f64, k: usize) -> Result<f64> {
        let a = self.partner(k);
        let lin = self.trust_region_lhs(w, k)?;
        let l2 = self.terms[k].coupling.norm_sqr();
        if lin < TRUST_MARGIN * l2 {
            return Err(Error::TrustRegion(lin));
        }
        let tangent = sqrt_prod_tangent(alpha_k, beta_a, self.alpha[k], self.beta[a])?;
        Ok(2.0 - l2 / lin - tangent)
    }

    /// `f^κ`: lower bound on `ln(1 + |L_{k,a(k)}|²/√(α_k β_{a(k)}))`.
    pub fn fd_rate_surrogate(&self, w: &BeamformerSet, alpha_k: f64, beta_a: f64, k: usize) -> Result<f64> {
        let t = &self.terms[k];
        Ok(t.log + t.slope * self.bracket(w, alpha_k, beta_a, k)?)
    }

    /// `(p, q, r)` of the FD energy-efficiency surrogate for direction `k`.
    pub fn fd_ee_coefficients(&self, k: usize) -> (f64, f64, f64) {
        let t = &self.terms[k];
        let tk = self.t_fd;
        (2.0 * t.log / tk, t.slope / tk, t.log / (tk * tk))
    }

    /// `F^κ`: lower bound on `ln(1 + |L|²/√(αβ)) / π(β, W)`.
    pub fn fd_ee_surrogate(&self, w: &BeamformerSet, alpha_k: f64, beta: &[f64], k: usize) -> Result<f64> {
        let (p, q, r) = self.fd_ee_coefficients(k);
        let bracket = self.bracket(w, alpha_k, beta[self.partner(k)], k)?;
        Ok(p + q * bracket - r * fd_pi(beta, w, self.ch, self.cfg)?)
    }

    /// `(c, d, e)` of the TF rate surrogate for direction `k`.
    pub fn tf_rate_coefficients(&self, k: usize) -> (f64, f64, f64) {
        let t = &self.terms[k];
        (2.0 * t.log / self.t2, t.slope / self.t2, t.log / (self.t2 * self.t2))
    }

    /// `Γ^κ`: lower bound on `(1/t₂) ln(1 + |L|²/√(αβ))`.
    pub fn tf_rate_surrogate(&self, w: &BeamformerSet, alpha_k: f64, beta_a: f64, t2: f64, k: usize) -> Result<f64> {
        positive(&[("t2", t2)])?;
        let (c, d, e) = self.tf_rate_coefficients(k);
        Ok(c + d * self.bracket(w, alpha_k, beta_a, k)? - e * t2)
    }

    /// `(p, q, r, s)` of the TF energy-efficiency surrogate for direction `k`.
    pub fn tf_ee_coefficients(&self, k: usize) -> (f64, f64, f64, f64) {
        let t = &self.terms[k];
        let (t2, tk) = (self.t2, self.t_tf);
        (
            3.0 * t.log / (t2 * tk),
            t.slope / (t2 * tk),
            t.log / (t2 * t2 * tk),
            t.log / (t2 * tk * tk),
        )
    }

    /// Convex majorant `π^κ(β, W, t₁) ≥ π(β, W, t₁)`, obtained by replacing
    /// the subtracted convex terms `Φ/√t₁` and `‖W‖²/t₁` with their tangents.
    pub fn tf_pi_majorant(&self, beta: &[f64], w: &BeamformerSet, t1: f64) -> Result<f64> {
        positive(&[("t1", t1)])?;
        positive(&beta.iter().map(|b| ("beta", *b)).collect::<Vec<_>>())?;
        let cfg = self.cfg;
        let c = Couplings::new(w, self.ch)?;
        let st = t1.sqrt();
        let mut inner: f64 = beta.iter().map(|b| 1.0 / (b * t1).sqrt()).sum();
        for m in 0..c.wf.len() {
            for l in 0..beta.len() {
                inner += c.wh[m][l] / beta[l].sqrt();
                inner -= self.phi_tangent(w, beta[l], t1, m, l);
            }
            inner += cfg.sigma_r2 * c.wf[m] / st;
            inner -= cfg.sigma_r2 * self.norm_tangent(&w.w[m], t1, m);
        }
        Ok(cfg.zeta * inner + cfg.circuit_power(Mode::Tf))
    }

    /// Tangent of `‖W_m h_ℓ‖² / √(β_ℓ t₁)` at the expansion point.
    pub fn phi_tangent(&self, w: &BeamformerSet, beta_l: f64, t1: f64, m: usize, l: usize) -> f64 {
        let bk = self.beta[l];
        let tk = self.t1;
        let scale = 1.0 / (bk * tk).sqrt();
        let base = self.wh[m][l].norm_squared() * scale;
        let delta = (&w.w[m] - &self.w.w[m]) * &self.ch.h[l][m];
        let lin: f64 = self.wh[m][l].iter().zip(delta.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        base + 2.0 * scale * lin - base / (2.0 * bk) * (beta_l - bk) - base / (2.0 * tk) * (t1 - tk)
    }

    /// Tangent of `‖W_m‖² / t₁` at the expansion point.
    pub fn norm_tangent(&self, w_m: &CMatrix, t1: f64, m: usize) -> f64 {
        let wk = &self.w.w[m];
        let tk = self.t1;
        let n2 = wk.norm_squared();
        let inner: f64 = wk.iter().zip((w_m - wk).iter()).map(|(a, b)| (a.conj() * b).re).sum();
        n2 / tk + 2.0 * inner / tk - n2 / (tk * tk) * (t1 - tk)
    }

    /// `F̃^κ`: lower bound on `ln(1 + |L|²/√(αβ)) / (t₂ π(β, W, t₁))`.
    pub fn tf_ee_surrogate(
        &self,
        w: &BeamformerSet,
        alpha_k: f64,
        beta: &[f64],
        t1: f64,
        t2: f64,
        k: usize,
    ) -> Result<f64> {
        positive(&[("t2", t2)])?;
        let (p, q, r, s) = self.tf_ee_coefficients(k);
        let bracket = self.bracket(w, alpha_k, beta[self.partner(k)], k)?;
        Ok(p + q * bracket - r * t2 - s * self.tf_pi_majorant(beta, w, t1)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_channels;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lhs(x: f64, y: f64) -> f64 {
        (1.0 / (x * y)).ln_1p()
    }

    #[test]
    fn tangent_examples() {
        assert_eq!(sqrt_prod_tangent(2.0, 3.0, 2.0, 3.0).unwrap(), 1.0);
        assert_eq!(sqrt_prod_tangent(4.0, 1.0, 1.0, 1.0).unwrap(), 2.5);
        assert!(sqrt_prod_tangent(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn scalar_bounds_tight_at_expansion() {
        let (x, y, z, t) = (0.3, 2.0, 1.7, 0.9);
        assert!((ine1_rhs(x, y, t, x, y, t).unwrap() - lhs(x, y) / t).abs() < 1e-15);
        assert!((ine1p_rhs(x, y, x, y).unwrap() - lhs(x, y)).abs() < 1e-15);
        assert!((ine2_rhs(x, y, z, t, x, y, z, t).unwrap() - lhs(x, y) / (z * t)).abs() < 1e-15);
        assert!(ine1_rhs(2.0, 2.0, 2.0, 1.0, 1.0, 1.0).unwrap() < 1.25f64.ln());
        assert!(ine1_rhs(-1.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ine2_collapses_to_ine1() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let v: Vec<f64> = (0..6).map(|_| rng.random_range(0.05..5.0)).collect();
            let a = ine2_rhs(v[0], v[1], 1.0, v[2], v[3], v[4], 1.0, v[5]).unwrap();
            let b = ine1_rhs(v[0], v[1], v[2], v[3], v[4], v[5]).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn linearized_coupling_examples() {
        let lk = Complex64::new(0.3, -1.2);
        assert!((linearized_coupling(lk, lk) - lk.norm_sqr()).abs() < 1e-15);
        assert_eq!(linearized_coupling(Complex64::new(0.0, 0.0), lk), -lk.norm_sqr());
    }

    fn fd_point(seed: u64) -> (ChannelSet, NetworkConfig) {
        let cfg = NetworkConfig::experiment(2, 2, 2, -120.0);
        (generate_channels(&cfg, Mode::Fd, seed), cfg)
    }

    #[test]
    fn expansion_tightness() {
        let (ch, cfg) = fd_point(4);
        let it = crate::sca::init_fd(&ch, &cfg, 0).unwrap();
        let e = ExpansionPoint::fd(&it, &ch, &cfg).unwrap();
        for k in 0..4 {
            let a = e.partner(k);
            let f = e.fd_rate_surrogate(&it.w, it.alpha[k], it.beta[a], k).unwrap();
            assert!((f - e.terms[k].log).abs() < 1e-12);
            let fe = e.fd_ee_surrogate(&it.w, it.alpha[k], &it.beta, k).unwrap();
            assert!((fe - e.terms[k].log / e.t_fd).abs() < 1e-12 * fe.abs());
            let (p, q, r) = e.fd_ee_coefficients(k);
            assert!(p > 0.0 && q > 0.0 && r > 0.0);
        }
    }

    #[test]
    fn zero_coupling_is_rejected() {
        let (ch, cfg) = fd_point(4);
        let it = FdIterate { w: BeamformerSet::zeros(2, 2), alpha: vec![1.0; 4], beta: vec![1.0; 4] };
        assert!(matches!(ExpansionPoint::fd(&it, &ch, &cfg), Err(Error::Degenerate(_))));
    }

    #[test]
    fn tf_pi_at_zero_beamformer() {
        let cfg = NetworkConfig::experiment(2, 2, 2, -120.0);
        let ch = generate_channels(&cfg, Mode::Tf, 2);
        let beta = [0.5, 1.0, 2.0, 4.0];
        let t1 = 3.0;
        let got = tf_pi(&beta, &BeamformerSet::zeros(2, 4), t1, &ch, &cfg).unwrap();
        let want = cfg.zeta * beta.iter().map(|b| 1.0 / (b * t1).sqrt()).sum::<f64>() + cfg.circuit_power(Mode::Tf);
        assert!((got - want).abs() < 1e-12);
    }
}
