//! Experiment configuration: every scalar parameter of the system, loaded
//! from a TOML file and validated up front.
//!
//! Power-like quantities may be given in dBm in the file (`p_max_dbm`,
//! `sigma2_dbm`); everything is stored in watts internally.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("field {field}: both {a} and {b} given; specify exactly one")]
    DuplicateUnit { field: &'static str, a: &'static str, b: &'static str },
    #[error("field {0} missing")]
    Missing(&'static str),
}

/// Multiple-access scheme under test. SDMA and NOMA are degenerate cases of
/// the rate-splitting design (see `opt::StreamLayout`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rsma,
    Sdma,
    Noma,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Rsma => write!(f, "rsma"),
            Scheme::Sdma => write!(f, "sdma"),
            Scheme::Noma => write!(f, "noma"),
        }
    }
}

/// Constants of the logistic (non-linear) energy-harvesting curve
///
/// ```text
///   harvested(p) = phi / (k1p * (1 + exp(-b0 * (p - b1)))) - k2p
/// ```
///
/// The saturation level is `phi / k1p - k2p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EhConstants {
    pub phi: f64,
    pub k1p: f64,
    pub k2p: f64,
    pub b0: f64,
    pub b1: f64,
}

impl EhConstants {
    /// Normalized harvester: picks `k1p`/`k2p` so the curve passes through
    /// the origin and saturates exactly at `saturation_w`.
    pub fn from_saturation(saturation_w: f64, b0: f64, b1: f64) -> Self {
        let omega0 = 1.0 / (1.0 + (b0 * b1).exp());
        let k1p = 1.0 - omega0;
        let phi = saturation_w;
        let k2p = phi * omega0 / k1p;
        Self { phi, k1p, k2p, b0, b1 }
    }

    /// Maximum harvestable power, `phi / k1p - k2p`.
    pub fn saturation(&self) -> f64 {
        self.phi / self.k1p - self.k2p
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("eh.phi", self.phi),
            ("eh.k1p", self.k1p),
            ("eh.k2p", self.k2p),
            ("eh.b0", self.b0),
            ("eh.b1", self.b1),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::Invariant(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if self.phi / self.k1p <= self.k2p {
            return Err(ConfigError::Invariant(format!(
                "eh: phi/k1p must exceed k2p (saturation {} not positive)",
                self.saturation()
            )));
        }
        Ok(())
    }
}

impl Default for EhConstants {
    /// 24 mW-class harvester; the curve passes through the origin.
    fn default() -> Self {
        EhConstants::from_saturation(0.024, 150.0, 0.014)
    }
}

/// Node placement: everything lives on a flat plane except the UAV-mounted
/// RIS, which hovers at `uav_height_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs_xy: [f64; 2],
    pub uav_xy: [f64; 2],
    pub uav_height_m: f64,
    pub user_xy: Vec<[f64; 2]>,
    pub uehr_xy: Vec<[f64; 2]>,
}

impl Geometry {
    /// 3-D distance from the UAV to a ground point.
    pub fn uav_distance_to(&self, xy: [f64; 2]) -> f64 {
        let dx = self.uav_xy[0] - xy[0];
        let dy = self.uav_xy[1] - xy[1];
        (dx * dx + dy * dy + self.uav_height_m * self.uav_height_m).sqrt()
    }

    fn validate(&self, k_users: usize, j_uehrs: usize) -> Result<(), ConfigError> {
        if !(self.uav_height_m > 0.0) {
            return Err(ConfigError::Invariant(format!(
                "geometry.uav_height_m must be > 0, got {}",
                self.uav_height_m
            )));
        }
        let all = self
            .user_xy
            .iter()
            .chain(self.uehr_xy.iter())
            .chain([&self.bs_xy, &self.uav_xy])
            .flatten();
        for v in all {
            if !v.is_finite() {
                return Err(ConfigError::Invariant("geometry coordinates must be finite".into()));
            }
        }
        if self.user_xy.len() != k_users {
            return Err(ConfigError::Invariant(format!(
                "geometry.user_xy has {} entries but k_users = {k_users}",
                self.user_xy.len()
            )));
        }
        if self.uehr_xy.len() != j_uehrs {
            return Err(ConfigError::Invariant(format!(
                "geometry.uehr_xy has {} entries but j_uehrs = {j_uehrs}",
                self.uehr_xy.len()
            )));
        }
        Ok(())
    }
}

/// Fully validated experiment configuration. Immutable after load; shared
/// read-only across parallel trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antenna count.
    pub n_t: usize,
    /// RIS element count.
    pub m_ris: usize,
    /// Legitimate user count.
    pub k_users: usize,
    /// Untrusted energy-harvester count.
    pub j_uehrs: usize,
    /// Transmit power budget, watts.
    pub p_max_w: f64,
    /// Circuit power, watts.
    pub p0_w: f64,
    /// Reciprocal of the power-amplifier drain efficiency.
    pub varrho: f64,
    /// Noise power, watts.
    pub sigma2_w: f64,
    /// Minimum harvested energy, joules (per unit time).
    pub e_h_joule: f64,
    /// Minimum common-stream rate, bits/s/Hz.
    pub r_c_min: f64,
    /// Common path-loss exponent for all air-to-ground links.
    pub alpha: f64,
    /// Rician K-factor for every RIS-to-ground (and BS-to-RIS) link.
    pub rician_k_ris_link: f64,
    /// Rician K-factor for the direct BS-to-UEHR link (0 = Rayleigh).
    pub rician_k_direct: f64,
    pub eh: EhConstants,
    pub geometry: Geometry,
    /// Convergence tolerance of the two inner loops.
    pub tol_inner: f64,
    /// Convergence tolerance of the alternating (outer) loop.
    pub tol_outer: f64,
    pub max_iters_inner: usize,
    pub max_iters_outer: usize,
    /// Initial unit-modulus penalty weight (scaled by the first iterate).
    pub penalty_c0: f64,
    /// Multiplicative penalty escalation factor.
    pub penalty_growth: f64,
    pub scheme: Scheme,
    pub master_seed: u64,
}

/// Raw file schema before unit resolution and validation.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_t: usize,
    m_ris: usize,
    k_users: usize,
    j_uehrs: usize,
    p_max_w: Option<f64>,
    p_max_dbm: Option<f64>,
    p0_w: f64,
    varrho: Option<f64>,
    sigma2_w: Option<f64>,
    sigma2_dbm: Option<f64>,
    e_h_joule: f64,
    r_c_min: f64,
    alpha: f64,
    rician_k_ris_link: Option<f64>,
    rician_k_direct: Option<f64>,
    eh: Option<RawEh>,
    geometry: Geometry,
    tol_inner: Option<f64>,
    tol_outer: Option<f64>,
    max_iters_inner: Option<usize>,
    max_iters_outer: Option<usize>,
    penalty_c0: Option<f64>,
    penalty_growth: Option<f64>,
    scheme: Option<Scheme>,
    master_seed: Option<u64>,
}

/// EH block: either the five raw constants or a normalized
/// `(saturation_w, b0, b1)` triple.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEh {
    saturation_w: Option<f64>,
    phi: Option<f64>,
    k1p: Option<f64>,
    k2p: Option<f64>,
    b0: f64,
    b1: f64,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

fn resolve_power(
    field: &'static str,
    watts: Option<f64>,
    dbm: Option<f64>,
    a: &'static str,
    b: &'static str,
) -> Result<f64, ConfigError> {
    match (watts, dbm) {
        (Some(_), Some(_)) => Err(ConfigError::DuplicateUnit { field, a, b }),
        (Some(w), None) => Ok(w),
        (None, Some(d)) => Ok(dbm_to_watts(d)),
        (None, None) => Err(ConfigError::Missing(field)),
    }
}

/// Loads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<SystemConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    let eh = match raw.eh {
        None => EhConstants::default(),
        Some(r) => match (r.saturation_w, r.phi, r.k1p, r.k2p) {
            (Some(sat), None, None, None) => EhConstants::from_saturation(sat, r.b0, r.b1),
            (None, Some(phi), Some(k1p), Some(k2p)) => {
                EhConstants { phi, k1p, k2p, b0: r.b0, b1: r.b1 }
            }
            _ => {
                return Err(ConfigError::Invariant(
                    "eh block must give either saturation_w or all of phi/k1p/k2p".into(),
                ))
            }
        },
    };
    let cfg = SystemConfig {
        n_t: raw.n_t,
        m_ris: raw.m_ris,
        k_users: raw.k_users,
        j_uehrs: raw.j_uehrs,
        p_max_w: resolve_power("p_max", raw.p_max_w, raw.p_max_dbm, "p_max_w", "p_max_dbm")?,
        p0_w: raw.p0_w,
        varrho: raw.varrho.unwrap_or(1.0),
        sigma2_w: resolve_power("sigma2", raw.sigma2_w, raw.sigma2_dbm, "sigma2_w", "sigma2_dbm")?,
        e_h_joule: raw.e_h_joule,
        r_c_min: raw.r_c_min,
        alpha: raw.alpha,
        rician_k_ris_link: raw.rician_k_ris_link.unwrap_or(3.0),
        rician_k_direct: raw.rician_k_direct.unwrap_or(0.0),
        eh,
        geometry: raw.geometry,
        tol_inner: raw.tol_inner.unwrap_or(0.01),
        tol_outer: raw.tol_outer.unwrap_or(0.01),
        max_iters_inner: raw.max_iters_inner.unwrap_or(20),
        max_iters_outer: raw.max_iters_outer.unwrap_or(15),
        penalty_c0: raw.penalty_c0.unwrap_or(100.0),
        penalty_growth: raw.penalty_growth.unwrap_or(10.0),
        scheme: raw.scheme.unwrap_or(Scheme::Rsma),
        master_seed: raw.master_seed.unwrap_or(0),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("p_max_w", self.p_max_w),
            ("sigma2_w", self.sigma2_w),
            ("tol_inner", self.tol_inner),
            ("tol_outer", self.tol_outer),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(ConfigError::Invariant(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.p0_w < 0.0 {
            return Err(ConfigError::Invariant(format!("p0_w must be >= 0, got {}", self.p0_w)));
        }
        if self.varrho < 0.0 {
            return Err(ConfigError::Invariant(format!("varrho must be >= 0, got {}", self.varrho)));
        }
        if self.alpha < 2.0 {
            return Err(ConfigError::Invariant(format!("alpha >= 2 violated: got {}", self.alpha)));
        }
        for (name, v) in [
            ("n_t", self.n_t),
            ("m_ris", self.m_ris),
            ("k_users", self.k_users),
            ("j_uehrs", self.j_uehrs),
            ("max_iters_inner", self.max_iters_inner),
            ("max_iters_outer", self.max_iters_outer),
        ] {
            if v < 1 {
                return Err(ConfigError::Invariant(format!("{name} must be >= 1")));
            }
        }
        if self.rician_k_ris_link < 0.0 || self.rician_k_direct < 0.0 {
            return Err(ConfigError::Invariant("Rician K-factors must be >= 0".into()));
        }
        if !(self.penalty_growth > 1.0) {
            return Err(ConfigError::Invariant(format!(
                "penalty_growth must be > 1, got {}",
                self.penalty_growth
            )));
        }
        if self.r_c_min < 0.0 {
            return Err(ConfigError::Invariant(format!("r_c_min must be >= 0, got {}", self.r_c_min)));
        }
        self.eh.validate()?;
        if self.e_h_joule < 0.0 || self.e_h_joule >= self.eh.saturation() {
            return Err(ConfigError::Invariant(format!(
                "e_h_joule = {} must lie in [0, EH saturation = {}); the EH inverse is undefined otherwise",
                self.e_h_joule,
                self.eh.saturation()
            )));
        }
        self.geometry.validate(self.k_users, self.j_uehrs)?;
        Ok(())
    }

    /// Desk-scale default scenario used by the test harness: 4 antennas,
    /// 16 RIS elements, two users, two harvesters, 10 dBm budget. Distances
    /// are in normalized units so link gains are O(1) against 0 dBm noise.
    pub fn desk_scale() -> Self {
        let cfg = SystemConfig {
            n_t: 4,
            m_ris: 16,
            k_users: 2,
            j_uehrs: 2,
            p_max_w: dbm_to_watts(10.0),
            p0_w: 1.0,
            varrho: 1.0,
            sigma2_w: dbm_to_watts(0.0),
            e_h_joule: 1e-6,
            r_c_min: 0.5,
            alpha: 2.5,
            rician_k_ris_link: 3.0,
            rician_k_direct: 0.0,
            eh: EhConstants::default(),
            geometry: Geometry {
                bs_xy: [0.0, 0.0],
                uav_xy: [1.0, 0.0],
                uav_height_m: 1.0,
                user_xy: vec![[0.5, 0.6], [0.5, -0.6]],
                uehr_xy: vec![[2.0, 1.5], [2.0, -1.5]],
            },
            tol_inner: 0.01,
            tol_outer: 0.01,
            max_iters_inner: 20,
            max_iters_outer: 15,
            penalty_c0: 100.0,
            penalty_growth: 10.0,
            scheme: Scheme::Rsma,
            master_seed: 0,
        };
        cfg.validate().expect("desk-scale defaults are valid");
        cfg
    }
}

const SEED_GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SEED_GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed. splitmix64 is a bijection of its input, so
/// distinct trial indices under one master seed never collide.
pub fn derive_trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(trial_index))
}
