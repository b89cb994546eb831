//! Scenario configuration, unit conversion and seeded channel draws.
//!
//! UE indices are zero-based throughout the crate: UEs `0..K` form one side of
//! the pairs and `K..2K` the other, so the partner of `k` is `k ± K`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CVector, Complex64};

/// Duplexing mode. FD relays use `N_R` antennas per direction, TF relays use
/// all `2 N_R` antennas in each time fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fd,
    Tf,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Fd => "fd",
            Mode::Tf => "tf",
        }
    }
}

pub fn dbw_to_watts(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

pub fn db_to_linear(x: f64) -> f64 {
    dbw_to_watts(x)
}

/// Scenario parameters. Powers are in watts and ratios are linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub k: usize,
    pub m: usize,
    pub n_r: usize,
    pub p_ue_max: f64,
    pub p_ue_sum_max: f64,
    pub p_relay_max: f64,
    pub p_relay_sum_max: f64,
    pub bar_p_ue: f64,
    pub bar_p_r: f64,
    pub si_lin: f64,
    pub sigma_r2: f64,
    pub sigma_u2: f64,
    pub zeta: f64,
    /// Circuit power of one relay (all `2 N_R` antennas).
    pub circuit_relay: f64,
    /// Circuit power of one FD UE (two antennas).
    pub circuit_ue: f64,
    /// Circuit power of one TF UE (a single antenna).
    pub circuit_ue_tf: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub seed: u64,
}

/// Per-antenna circuit powers of the reference setup, in dBW.
pub const RELAY_ANTENNA_CIRCUIT_DBW: f64 = 0.97;
pub const UE_ANTENNA_CIRCUIT_DBW: f64 = -13.0;
pub const DEFAULT_P_UE_MAX_DBW: f64 = 10.0;
pub const DEFAULT_P_RELAY_SUM_DBW: f64 = 15.0;
pub const DRAIN_EFFICIENCY: f64 = 0.4;

/// Budget subset derived from the reference dBW settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgets {
    pub p_ue_max: f64,
    pub p_ue_sum_max: f64,
    pub p_relay_max: f64,
    pub p_relay_sum_max: f64,
}

pub fn derive_experiment_budgets(
    k: usize,
    m: usize,
    p_ue_max_dbw: f64,
    p_relay_sum_max_dbw: f64,
) -> Budgets {
    let p_ue_max = dbw_to_watts(p_ue_max_dbw);
    let p_relay_sum_max = dbw_to_watts(p_relay_sum_max_dbw);
    Budgets {
        p_ue_max,
        p_ue_sum_max: k as f64 * p_ue_max,
        p_relay_max: 2.0 * p_relay_sum_max / m as f64,
        p_relay_sum_max,
    }
}

impl NetworkConfig {
    /// Reference experiment settings for `K` pairs, `M` relays with `N_R`
    /// antennas per direction and the given SI attenuation in dB.
    pub fn experiment(k: usize, m: usize, n_r: usize, si_db: f64) -> Self {
        Self::with_budgets(k, m, n_r, si_db, DEFAULT_P_UE_MAX_DBW, DEFAULT_P_RELAY_SUM_DBW)
    }

    pub fn with_budgets(
        k: usize,
        m: usize,
        n_r: usize,
        si_db: f64,
        p_ue_max_dbw: f64,
        p_relay_sum_max_dbw: f64,
    ) -> Self {
        let b = derive_experiment_budgets(k, m, p_ue_max_dbw, p_relay_sum_max_dbw);
        let relay_antenna = dbw_to_watts(RELAY_ANTENNA_CIRCUIT_DBW);
        let ue_antenna = dbw_to_watts(UE_ANTENNA_CIRCUIT_DBW);
        NetworkConfig {
            k,
            m,
            n_r,
            p_ue_max: b.p_ue_max,
            p_ue_sum_max: b.p_ue_sum_max,
            p_relay_max: b.p_relay_max,
            p_relay_sum_max: b.p_relay_sum_max,
            bar_p_ue: 3.0 * b.p_ue_max,
            bar_p_r: 3.0 * b.p_relay_max,
            si_lin: db_to_linear(si_db),
            sigma_r2: 1.0,
            sigma_u2: 1.0,
            zeta: 1.0 / DRAIN_EFFICIENCY,
            circuit_relay: 2.0 * n_r as f64 * relay_antenna,
            circuit_ue: 2.0 * ue_antenna,
            circuit_ue_tf: ue_antenna,
            epsilon: 1e-4,
            max_iters: 200,
            seed: 0,
        }
    }

    pub fn users(&self) -> usize {
        2 * self.k
    }

    pub fn antennas(&self, mode: Mode) -> usize {
        match mode {
            Mode::Fd => self.n_r,
            Mode::Tf => 2 * self.n_r,
        }
    }

    pub fn pairing(&self) -> PairingMap {
        PairingMap { k: self.k }
    }

    /// Fixed circuit consumption `M P^R + 2K P^U` for the given mode.
    pub fn circuit_power(&self, mode: Mode) -> f64 {
        let ue = match mode {
            Mode::Fd => self.circuit_ue,
            Mode::Tf => self.circuit_ue_tf,
        };
        self.m as f64 * self.circuit_relay + self.users() as f64 * ue
    }

    /// `σ_SI² / (1 − σ_SI²)`, the relay-SI weight in the FD SINR.
    pub fn si_factor(&self) -> f64 {
        self.si_lin / (1.0 - self.si_lin)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 || self.n_r == 0 {
            return Err(Error::Config("K, M and N_R must be at least 1".into()));
        }
        if !(self.si_lin > 0.0 && self.si_lin < 1.0) {
            return Err(Error::Config(format!("si_lin = {} must lie in (0, 1)", self.si_lin)));
        }
        let powers = [
            ("p_ue_max", self.p_ue_max),
            ("p_ue_sum_max", self.p_ue_sum_max),
            ("p_relay_max", self.p_relay_max),
            ("p_relay_sum_max", self.p_relay_sum_max),
            ("bar_p_ue", self.bar_p_ue),
            ("bar_p_r", self.bar_p_r),
            ("sigma_r2", self.sigma_r2),
            ("sigma_u2", self.sigma_u2),
            ("zeta", self.zeta),
            ("circuit_relay", self.circuit_relay),
            ("circuit_ue", self.circuit_ue),
            ("circuit_ue_tf", self.circuit_ue_tf),
        ];
        for (name, v) in powers {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(s)?;
        file.into_config()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// JSON overrides. Field names mirror [`NetworkConfig`]; quantities given in
/// decibels carry a `_dbw` or `_db` suffix and are converted on load. Unset
/// fields keep the reference experiment value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub n_r: Option<usize>,
    pub p_ue_max_dbw: Option<f64>,
    pub p_relay_sum_max_dbw: Option<f64>,
    pub si_db: Option<f64>,
    pub p_ue_max: Option<f64>,
    pub p_ue_sum_max: Option<f64>,
    pub p_relay_max: Option<f64>,
    pub p_relay_sum_max: Option<f64>,
    pub bar_p_ue: Option<f64>,
    pub bar_p_r: Option<f64>,
    pub si_lin: Option<f64>,
    pub sigma_r2: Option<f64>,
    pub sigma_u2: Option<f64>,
    pub zeta: Option<f64>,
    pub circuit_relay: Option<f64>,
    pub circuit_ue: Option<f64>,
    pub circuit_ue_tf: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn into_config(self) -> Result<NetworkConfig> {
        self.apply_to(&NetworkConfig::experiment(2, 2, 4, -130.0))
    }

    /// Applies the overrides on top of `base`. Structural or dB fields rebuild
    /// the derived budgets first; explicit watt values win over derived ones.
    pub fn apply_to(&self, base: &NetworkConfig) -> Result<NetworkConfig> {
        let k = self.k.unwrap_or(base.k);
        let m = self.m.unwrap_or(base.m);
        let n_r = self.n_r.unwrap_or(base.n_r);
        let rebuild = self.k.is_some()
            || self.m.is_some()
            || self.n_r.is_some()
            || self.p_ue_max_dbw.is_some()
            || self.p_relay_sum_max_dbw.is_some();
        let mut cfg = if rebuild {
            let mut c = NetworkConfig::with_budgets(
                k,
                m,
                n_r,
                0.0,
                self.p_ue_max_dbw.unwrap_or(DEFAULT_P_UE_MAX_DBW),
                self.p_relay_sum_max_dbw.unwrap_or(DEFAULT_P_RELAY_SUM_DBW),
            );
            c.si_lin = base.si_lin;
            c.sigma_r2 = base.sigma_r2;
            c.sigma_u2 = base.sigma_u2;
            c.zeta = base.zeta;
            c.epsilon = base.epsilon;
            c.max_iters = base.max_iters;
            c.seed = base.seed;
            c
        } else {
            base.clone()
        };
        if let Some(db) = self.si_db {
            cfg.si_lin = db_to_linear(db);
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        set!(
            p_ue_max, p_ue_sum_max, p_relay_max, p_relay_sum_max, si_lin, sigma_r2, sigma_u2, zeta,
            circuit_relay, circuit_ue, circuit_ue_tf, epsilon, max_iters, seed
        );
        cfg.bar_p_ue = self.bar_p_ue.unwrap_or(3.0 * cfg.p_ue_max);
        cfg.bar_p_r = self.bar_p_r.unwrap_or(3.0 * cfg.p_relay_max);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The pairing involution `a(k)` and same-side sets `U(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairingMap {
    pub k: usize,
}

impl PairingMap {
    pub fn new(k: usize) -> Self {
        PairingMap { k }
    }

    pub fn users(&self) -> usize {
        2 * self.k
    }

    pub fn partner(&self, u: usize) -> usize {
        if u < self.k {
            u + self.k
        } else {
            u - self.k
        }
    }

    /// UEs on the same side as `u`, including `u` itself.
    pub fn same_side(&self, u: usize) -> std::ops::Range<usize> {
        if u < self.k {
            0..self.k
        } else {
            self.k..2 * self.k
        }
    }

    pub fn is_same_side(&self, u: usize, v: usize) -> bool {
        (u < self.k) == (v < self.k)
    }
}

/// One channel realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub mode: Mode,
    /// `h[l][m]`: uplink from UE `l` to relay `m`.
    pub h: Vec<Vec<CVector>>,
    /// `g[m][k]`: downlink from relay `m` to UE `k`.
    pub g: Vec<Vec<CVector>>,
    /// `f[m][k] = conj(g[m][k])`.
    pub f: Vec<Vec<CVector>>,
    /// `chi[eta][k]`: UE-to-UE channel, FD only (empty in TF mode).
    pub chi: Vec<Vec<Complex64>>,
}

impl ChannelSet {
    pub fn users(&self) -> usize {
        self.h.len()
    }

    pub fn relays(&self) -> usize {
        self.g.len()
    }

    pub fn antennas(&self) -> usize {
        self.h.first().and_then(|r| r.first()).map_or(0, |v| v.len())
    }

    /// Builds a channel set from explicit uplink/downlink vectors, deriving
    /// `f` from `g`. Used by tests and hand-built scenarios.
    pub fn from_parts(
        mode: Mode,
        h: Vec<Vec<CVector>>,
        g: Vec<Vec<CVector>>,
        chi: Vec<Vec<Complex64>>,
    ) -> Self {
        let f = g.iter().map(|row| row.iter().map(|v| v.map(|c| c.conj())).collect()).collect();
        ChannelSet { mode, h, g, f, chi }
    }
}

fn cn01<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Draws one Rayleigh realisation with ChaCha20 seeded from `seed`.
///
/// Draw order: `h` by `(l, m)` then entries, `g` by `(m, k)` then entries,
/// then off-diagonal `χ` by `(η, k)` (FD only). Diagonal `χ_kk = √si_lin`.
pub fn generate_channels(cfg: &NetworkConfig, mode: Mode, seed: u64) -> ChannelSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = cfg.antennas(mode);
    let users = cfg.users();
    let draw_vec = |rng: &mut ChaCha20Rng| CVector::from_fn(n, |_, _| cn01(rng));

    let h: Vec<Vec<CVector>> =
        (0..users).map(|_| (0..cfg.m).map(|_| draw_vec(&mut rng)).collect()).collect();
    let g: Vec<Vec<CVector>> =
        (0..cfg.m).map(|_| (0..users).map(|_| draw_vec(&mut rng)).collect()).collect();
    let chi = match mode {
        Mode::Fd => {
            let diag = Complex64::new(cfg.si_lin.sqrt(), 0.0);
            (0..users)
                .map(|eta| {
                    (0..users).map(|k| if eta == k { diag } else { cn01(&mut rng) }).collect()
                })
                .collect()
        }
        Mode::Tf => Vec::new(),
    };
    ChannelSet::from_parts(mode, h, g, chi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbw_examples() {
        assert_eq!(dbw_to_watts(10.0), 10.0);
        assert_eq!(dbw_to_watts(0.0), 1.0);
        assert!((dbw_to_watts(15.0) - 31.6228).abs() < 1e-4);
    }

    #[test]
    fn budget_examples() {
        let b = derive_experiment_budgets(2, 2, 10.0, 15.0);
        assert!((b.p_ue_sum_max - 20.0).abs() < 1e-12);
        assert!((b.p_relay_max - 31.6228).abs() < 1e-4);

        let b = derive_experiment_budgets(1, 2, 0.0, 0.0);
        assert!((b.p_ue_sum_max - 1.0).abs() < 1e-12);
        assert!((b.p_relay_max - 1.0).abs() < 1e-12);

        let b = derive_experiment_budgets(3, 4, 10.0, 15.0);
        assert!((b.p_relay_max - 15.8114).abs() < 1e-4);
    }

    #[test]
    fn hardware_caps_default_to_three_times() {
        let cfg = NetworkConfig::experiment(2, 2, 4, -130.0);
        assert_eq!(cfg.bar_p_ue, 3.0 * cfg.p_ue_max);
        assert_eq!(cfg.bar_p_r, 3.0 * cfg.p_relay_max);
        cfg.validate().unwrap();
    }

    #[test]
    fn pairing_is_an_involution() {
        let pm = PairingMap::new(3);
        for u in 0..6 {
            assert_eq!(pm.partner(pm.partner(u)), u);
            assert_eq!(pm.same_side(u).len(), 3);
            assert!(pm.same_side(u).contains(&u));
            assert!(!pm.same_side(u).contains(&pm.partner(u)));
        }
    }

    #[test]
    fn channel_shapes_and_invariants() {
        let cfg = NetworkConfig::experiment(2, 2, 4, -120.0);
        let ch = generate_channels(&cfg, Mode::Fd, 11);
        assert_eq!(ch.h.len(), 4);
        assert!(ch.h.iter().all(|r| r.len() == 2 && r.iter().all(|v| v.len() == 4)));
        for m in 0..2 {
            for k in 0..4 {
                assert_eq!(ch.f[m][k], ch.g[m][k].map(|c| c.conj()));
            }
        }
        for k in 0..4 {
            assert!((ch.chi[k][k].norm_sqr() - cfg.si_lin).abs() < 1e-18);
        }
        let tf = generate_channels(&cfg, Mode::Tf, 11);
        assert_eq!(tf.antennas(), 8);
        assert!(tf.chi.is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = NetworkConfig::experiment(2, 2, 4, -120.0);
        assert_eq!(generate_channels(&cfg, Mode::Fd, 5), generate_channels(&cfg, Mode::Fd, 5));
        assert_ne!(generate_channels(&cfg, Mode::Fd, 5), generate_channels(&cfg, Mode::Fd, 6));
    }

    #[test]
    fn json_overrides() {
        let cfg = NetworkConfig::from_json_str(r#"{"k": 3, "m": 4, "n_r": 2, "si_db": -110}"#)
            .unwrap();
        assert_eq!(cfg.k, 3);
        assert!((cfg.p_relay_max - 15.8114).abs() < 1e-4);
        assert!((cfg.si_lin - 1e-11).abs() < 1e-24);
        assert_eq!(cfg.circuit_relay, 4.0 * dbw_to_watts(0.97));

        let cfg = NetworkConfig::from_json_str(r#"{"p_ue_max": 2.0}"#).unwrap();
        assert_eq!(cfg.bar_p_ue, 6.0);
        assert!(NetworkConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
        assert!(NetworkConfig::from_json_str(r#"{"si_lin": 1.5}"#).is_err());
    }
}
