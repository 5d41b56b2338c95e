//! Ground-truth physical-layer evaluators: SINRs, secrecy rates, harvested
//! power, and the secrecy-energy-efficiency objective.
//!
//! Everything here is a pure function of `(channels, phases, precoders,
//! allocation, config)`. The optimizers are verified against these
//! evaluators, never the other way around.
//!
//! Tie-breaking in the `min` over users and `max` over eavesdroppers is
//! first-index-wins.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::channels::{combined_uehr_channel, effective_user_channel, ChannelSet, RisPhases};
use crate::config::{EhConstants, SystemConfig};

/// Common and private transmit precoders.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub p_c: DVector<Complex64>,
    pub p_p: Vec<DVector<Complex64>>,
}

impl PrecoderSet {
    pub fn zeros(n_t: usize, k_users: usize) -> Self {
        Self {
            p_c: DVector::from_element(n_t, Complex64::new(0.0, 0.0)),
            p_p: vec![DVector::from_element(n_t, Complex64::new(0.0, 0.0)); k_users],
        }
    }

    /// Total transmit power `tr(P P^H)`.
    pub fn total_power(&self) -> f64 {
        self.p_c.norm_squared() + self.p_p.iter().map(|p| p.norm_squared()).sum::<f64>()
    }

    /// Scales every precoder by `factor` (amplitude, not power).
    pub fn scale(&mut self, factor: f64) {
        self.p_c *= Complex64::from(factor);
        for p in &mut self.p_p {
            *p *= Complex64::from(factor);
        }
    }
}

/// Fractions of the common message assigned to each user; sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAllocation {
    pub a: Vec<f64>,
}

impl RateAllocation {
    pub fn uniform(k_users: usize) -> Self {
        Self { a: vec![1.0 / k_users as f64; k_users] }
    }

    pub fn is_valid(&self) -> bool {
        let sum: f64 = self.a.iter().sum();
        (sum - 1.0).abs() <= 1e-9 && self.a.iter().all(|&a| (-1e-12..=1.0 + 1e-12).contains(&a))
    }
}

/// All SINRs and rates at one design point.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub gamma_c: Vec<f64>,
    pub gamma_c_eve: Vec<f64>,
    pub gamma_p: Vec<f64>,
    /// `gamma_p_eve[j][k]`: UEHR j decoding user k's private stream.
    pub gamma_p_eve: Vec<Vec<f64>>,
    /// Common-stream secrecy rate, bits/s/Hz, clamped at zero.
    pub r_c_sec: f64,
    /// Private secrecy rate per user, clamped at zero.
    pub r_p_sec: Vec<f64>,
    /// Per-user secrecy rate `a_k * r_c_sec + r_p_sec[k]`.
    pub r_sec: Vec<f64>,
    pub r_sec_min: f64,
    /// Secrecy energy efficiency, bits/joule (per Hz).
    pub see: f64,
}

/// Received and harvested power at the UEHRs.
#[derive(Debug, Clone)]
pub struct EhReport {
    pub p_eh: Vec<f64>,
    pub p_eh_sum: f64,
    /// Harvested power through the logistic curve, evaluated at the sum.
    pub harvested: f64,
    pub meets_eh: bool,
}

#[derive(Debug, Error)]
pub enum EhError {
    #[error("EH inverse undefined: {x} outside [0, saturation {saturation})")]
    Domain { x: f64, saturation: f64 },
}

fn first_min(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut best = f64::INFINITY;
    for v in values {
        if v < best {
            best = v;
        }
    }
    best
}

fn first_max(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for v in values {
        if v > best {
            best = v;
        }
    }
    best
}

fn abs2(z: Complex64) -> f64 {
    z.norm_sqr()
}

/// SINR of the common stream at user `k`.
pub fn sinr_common_user(ch: &ChannelSet, s: &RisPhases, prec: &PrecoderSet, k: usize, sigma2: f64) -> f64 {
    let v = effective_user_channel(ch, s, k);
    let num = abs2(v.dotc(&prec.p_c));
    let den: f64 = prec.p_p.iter().map(|p| abs2(v.dotc(p))).sum::<f64>() + sigma2;
    num / den
}

/// SINR of the common stream at eavesdropping UEHR `j`.
pub fn sinr_common_eve(ch: &ChannelSet, s: &RisPhases, prec: &PrecoderSet, j: usize, sigma2: f64) -> f64 {
    let u = combined_uehr_channel(ch, s, j);
    let num = abs2(u.dotc(&prec.p_c));
    let den: f64 = prec.p_p.iter().map(|p| abs2(u.dotc(p))).sum::<f64>() + sigma2;
    num / den
}

/// SINR of user `k` decoding its own private stream (common stream already
/// removed by successive decoding).
pub fn sinr_private_user(ch: &ChannelSet, s: &RisPhases, prec: &PrecoderSet, k: usize, sigma2: f64) -> f64 {
    let v = effective_user_channel(ch, s, k);
    let num = abs2(v.dotc(&prec.p_p[k]));
    let den: f64 = prec
        .p_p
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != k)
        .map(|(_, p)| abs2(v.dotc(p)))
        .sum::<f64>()
        + sigma2;
    num / den
}

/// SINR of UEHR `j` attempting to decode user `k`'s private stream; the
/// common stream remains as interference.
pub fn sinr_private_eve(
    ch: &ChannelSet,
    s: &RisPhases,
    prec: &PrecoderSet,
    j: usize,
    k: usize,
    sigma2: f64,
) -> f64 {
    let u = combined_uehr_channel(ch, s, j);
    let num = abs2(u.dotc(&prec.p_p[k]));
    let den: f64 = abs2(u.dotc(&prec.p_c))
        + prec
            .p_p
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != k)
            .map(|(_, p)| abs2(u.dotc(p)))
            .sum::<f64>()
        + sigma2;
    num / den
}

/// Full rate/secrecy report at a design point, including the SEE objective.
pub fn secrecy_report(
    ch: &ChannelSet,
    s: &RisPhases,
    prec: &PrecoderSet,
    alloc: &RateAllocation,
    cfg: &SystemConfig,
) -> RateReport {
    let sigma2 = cfg.sigma2_w;
    let k_users = ch.g_user.len();
    let j_uehrs = ch.h_uehr.len();

    let gamma_c: Vec<f64> = (0..k_users).map(|k| sinr_common_user(ch, s, prec, k, sigma2)).collect();
    let gamma_c_eve: Vec<f64> =
        (0..j_uehrs).map(|j| sinr_common_eve(ch, s, prec, j, sigma2)).collect();
    let gamma_p: Vec<f64> = (0..k_users).map(|k| sinr_private_user(ch, s, prec, k, sigma2)).collect();
    let gamma_p_eve: Vec<Vec<f64>> = (0..j_uehrs)
        .map(|j| (0..k_users).map(|k| sinr_private_eve(ch, s, prec, j, k, sigma2)).collect())
        .collect();

    let gamma_c_min = first_min(gamma_c.iter().copied());
    let gamma_ce_max = first_max(gamma_c_eve.iter().copied());
    let r_c_sec = ((1.0 + gamma_c_min).log2() - (1.0 + gamma_ce_max).log2()).max(0.0);

    let r_p_sec: Vec<f64> = (0..k_users)
        .map(|k| {
            let gamma_pe_max = first_max(gamma_p_eve.iter().map(|row| row[k]));
            ((1.0 + gamma_p[k]).log2() - (1.0 + gamma_pe_max).log2()).max(0.0)
        })
        .collect();

    let r_sec: Vec<f64> =
        (0..k_users).map(|k| alloc.a[k] * r_c_sec + r_p_sec[k]).collect();
    let r_sec_min = first_min(r_sec.iter().copied());
    let see = r_sec_min / (cfg.varrho * prec.total_power() + cfg.p0_w);

    RateReport {
        gamma_c,
        gamma_c_eve,
        gamma_p,
        gamma_p_eve,
        r_c_sec,
        r_p_sec,
        r_sec,
        r_sec_min,
        see,
    }
}

/// Logistic harvesting curve.
pub fn eh_omega(p_in: f64, eh: &EhConstants) -> f64 {
    eh.phi / (eh.k1p * (1.0 + (-eh.b0 * (p_in - eh.b1)).exp())) - eh.k2p
}

/// Inverse of the harvesting curve on `[0, saturation)`.
pub fn eh_inverse(x: f64, eh: &EhConstants) -> Result<f64, EhError> {
    let saturation = eh.saturation();
    if !(0.0..saturation).contains(&x) {
        return Err(EhError::Domain { x, saturation });
    }
    Ok(eh.b1 - (eh.phi / (eh.k1p * (x + eh.k2p)) - 1.0).ln() / eh.b0)
}

/// Received power at each UEHR plus the harvested total and the feasibility
/// flag against the configured minimum.
pub fn eh_report(ch: &ChannelSet, s: &RisPhases, prec: &PrecoderSet, cfg: &SystemConfig) -> EhReport {
    let p_eh: Vec<f64> = (0..ch.h_uehr.len())
        .map(|j| {
            let u = combined_uehr_channel(ch, s, j);
            abs2(u.dotc(&prec.p_c)) + prec.p_p.iter().map(|p| abs2(u.dotc(p))).sum::<f64>()
        })
        .collect();
    let p_eh_sum: f64 = p_eh.iter().sum();
    let harvested = eh_omega(p_eh_sum, &cfg.eh);
    let meets_eh = match eh_inverse(cfg.e_h_joule, &cfg.eh) {
        Ok(threshold) => p_eh_sum >= threshold * (1.0 - 1e-9),
        Err(_) => false,
    };
    EhReport { p_eh, p_eh_sum, harvested, meets_eh }
}
