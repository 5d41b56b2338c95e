//! Rician channel generation and the composed effective channels.
//!
//! One [`ChannelSet`] is a single statistical realization of every link in
//! the system, deterministic given `(config, seed)`. Small-scale fading is
//! Rician with a half-wavelength uniform-linear-array line-of-sight response;
//! large-scale attenuation is `d^(-alpha/2)` on amplitudes.
//!
//! RNG draw order is fixed: `G_b`, then users `g_1..g_K`, then RIS-to-UEHR
//! `h_1..h_J`, then direct BS-to-UEHR `h_b1..h_bJ`. Seeds therefore
//! reproduce bit-identically across runs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;

/// RIS phase configuration: `s[m] = exp(j theta_m)` at construction from
/// angles; arbitrary near-unit vectors are allowed while optimizing.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPhases {
    pub s: DVector<Complex64>,
}

impl RisPhases {
    pub fn from_theta(theta: &[f64]) -> Self {
        let s = DVector::from_iterator(
            theta.len(),
            theta.iter().map(|&t| Complex64::new(t.cos(), t.sin())),
        );
        Self { s }
    }

    pub fn from_vector(s: DVector<Complex64>) -> Self {
        Self { s }
    }

    pub fn all_ones(m: usize) -> Self {
        Self { s: DVector::from_element(m, Complex64::new(1.0, 0.0)) }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Largest deviation of any element modulus from 1.
    pub fn max_modulus_error(&self) -> f64 {
        self.s.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Radially projects every element onto the unit circle. Zero elements
    /// map to +1.
    pub fn project_unit_modulus(&mut self) {
        for z in self.s.iter_mut() {
            let n = z.norm();
            *z = if n > 0.0 { *z / n } else { Complex64::new(1.0, 0.0) };
        }
    }
}

/// One realization of all channels plus the geometry-derived distances.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS-to-RIS matrix, M x N_t.
    pub g_bs_ris: DMatrix<Complex64>,
    /// RIS-to-user vectors, length M each.
    pub g_user: Vec<DVector<Complex64>>,
    /// RIS-to-UEHR vectors, length M each.
    pub h_uehr: Vec<DVector<Complex64>>,
    /// Direct BS-to-UEHR vectors, length N_t each.
    pub h_direct: Vec<DVector<Complex64>>,
    pub d_user: Vec<f64>,
    pub d_uehr: Vec<f64>,
    pub d_bs: f64,
}

fn steering(len: usize, azimuth: f64) -> DVector<Complex64> {
    let phase = std::f64::consts::PI * azimuth.sin();
    DVector::from_iterator(
        len,
        (0..len).map(|m| Complex64::from_polar(1.0, phase * m as f64)),
    )
}

fn azimuth(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

fn draw_cn(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    // CN(0, 1) entries: each quadrature component has variance 1/2.
    let comp = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    DVector::from_iterator(
        n,
        (0..n).map(|_| Complex64::new(comp.sample(rng), comp.sample(rng))),
    )
}

fn rician_vector(
    rng: &mut ChaCha8Rng,
    los: &DVector<Complex64>,
    k_factor: f64,
    dist: f64,
    alpha: f64,
) -> DVector<Complex64> {
    let nlos = draw_cn(rng, los.len());
    let w_los = (k_factor / (k_factor + 1.0)).sqrt();
    let w_nlos = (1.0 / (k_factor + 1.0)).sqrt();
    let pl = dist.powf(-alpha / 2.0);
    (los * Complex64::from(w_los) + nlos * Complex64::from(w_nlos)) * Complex64::from(pl)
}

/// Generates one channel realization. Pure in `(cfg, seed)`.
pub fn generate_channels(cfg: &SystemConfig, seed: u64) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geo = &cfg.geometry;
    let (m, n_t) = (cfg.m_ris, cfg.n_t);

    let d_bs = geo.uav_distance_to(geo.bs_xy);
    let d_user: Vec<f64> = geo.user_xy.iter().map(|&w| geo.uav_distance_to(w)).collect();
    let d_uehr: Vec<f64> = geo.uehr_xy.iter().map(|&w| geo.uav_distance_to(w)).collect();

    // G_b: rank-1 LoS (RIS steering toward the BS times BS steering toward
    // the UAV) plus i.i.d. NLoS, same Rician K as the other RIS links.
    let a_ris = steering(m, azimuth(geo.uav_xy, geo.bs_xy));
    let a_bs = steering(n_t, azimuth(geo.bs_xy, geo.uav_xy));
    let los_gb = DMatrix::from_fn(m, n_t, |r, c| a_ris[r] * a_bs[c].conj());
    let k_ris = cfg.rician_k_ris_link;
    let w_los = (k_ris / (k_ris + 1.0)).sqrt();
    let w_nlos = (1.0 / (k_ris + 1.0)).sqrt();
    let nlos_flat = draw_cn(&mut rng, m * n_t);
    let nlos_gb = DMatrix::from_fn(m, n_t, |r, c| nlos_flat[c * m + r]);
    let pl_b = d_bs.powf(-cfg.alpha / 2.0);
    let g_bs_ris = (los_gb * Complex64::from(w_los) + nlos_gb * Complex64::from(w_nlos))
        * Complex64::from(pl_b);

    let g_user: Vec<_> = (0..cfg.k_users)
        .map(|k| {
            let los = steering(m, azimuth(geo.uav_xy, geo.user_xy[k]));
            rician_vector(&mut rng, &los, k_ris, d_user[k], cfg.alpha)
        })
        .collect();
    let h_uehr: Vec<_> = (0..cfg.j_uehrs)
        .map(|j| {
            let los = steering(m, azimuth(geo.uav_xy, geo.uehr_xy[j]));
            rician_vector(&mut rng, &los, k_ris, d_uehr[j], cfg.alpha)
        })
        .collect();
    let h_direct: Vec<_> = (0..cfg.j_uehrs)
        .map(|j| {
            let los = steering(n_t, azimuth(geo.bs_xy, geo.uehr_xy[j]));
            let dx = geo.bs_xy[0] - geo.uehr_xy[j][0];
            let dy = geo.bs_xy[1] - geo.uehr_xy[j][1];
            let d = (dx * dx + dy * dy).sqrt().max(1.0);
            rician_vector(&mut rng, &los, cfg.rician_k_direct, d, cfg.alpha)
        })
        .collect();

    ChannelSet { g_bs_ris, g_user, h_uehr, h_direct, d_user, d_uehr, d_bs }
}

/// Effective BS-to-user-k channel `v_k` with `v_k^H = g_k^H diag(s) G_b`.
pub fn effective_user_channel(ch: &ChannelSet, s: &RisPhases, k: usize) -> DVector<Complex64> {
    assert!(k < ch.g_user.len(), "user index {k} out of range");
    reflected(&ch.g_user[k], &ch.g_bs_ris, s)
}

/// Combined BS-to-UEHR-j channel `u_j` with
/// `u_j^H = h_bj^H + h_j^H diag(s) G_b`.
pub fn combined_uehr_channel(ch: &ChannelSet, s: &RisPhases, j: usize) -> DVector<Complex64> {
    assert!(j < ch.h_uehr.len(), "UEHR index {j} out of range");
    &ch.h_direct[j] + reflected(&ch.h_uehr[j], &ch.g_bs_ris, s)
}

fn reflected(
    terminal: &DVector<Complex64>,
    g_b: &DMatrix<Complex64>,
    s: &RisPhases,
) -> DVector<Complex64> {
    // (v^H diag(s) G_b)^H = G_b^H (conj(s) .* v)
    let scaled = DVector::from_iterator(
        terminal.len(),
        terminal.iter().zip(s.s.iter()).map(|(v, sm)| sm.conj() * v),
    );
    g_b.adjoint() * scaled
}

/// The vector `t = (diag(v^H) G_b w)^*` satisfying
/// `t^H s = v^H diag(s) G_b w` for every phase vector `s`.
pub fn t_vector(
    ch_vec: &DVector<Complex64>,
    g_b: &DMatrix<Complex64>,
    w: &DVector<Complex64>,
) -> DVector<Complex64> {
    assert_eq!(ch_vec.len(), g_b.nrows(), "channel/RIS dimension mismatch");
    assert_eq!(w.len(), g_b.ncols(), "precoder/BS dimension mismatch");
    let y = g_b * w;
    DVector::from_iterator(
        ch_vec.len(),
        ch_vec.iter().zip(y.iter()).map(|(v, ym)| v * ym.conj()),
    )
}

/// Flat-array dump of a [`ChannelSet`] for cross-implementation regression.
/// Matrices are column-major; each complex array is `[re, im, re, im, ...]`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ChannelDump {
    pub m_ris: usize,
    pub n_t: usize,
    pub g_bs_ris: Vec<f64>,
    pub g_user: Vec<Vec<f64>>,
    pub h_uehr: Vec<Vec<f64>>,
    pub h_direct: Vec<Vec<f64>>,
    pub d_user: Vec<f64>,
    pub d_uehr: Vec<f64>,
    pub d_bs: f64,
}

fn interleave(v: impl Iterator<Item = Complex64>) -> Vec<f64> {
    v.flat_map(|z| [z.re, z.im]).collect()
}

fn deinterleave(v: &[f64]) -> Vec<Complex64> {
    v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

impl ChannelSet {
    pub fn to_dump(&self) -> ChannelDump {
        ChannelDump {
            m_ris: self.g_bs_ris.nrows(),
            n_t: self.g_bs_ris.ncols(),
            g_bs_ris: interleave(self.g_bs_ris.iter().copied()),
            g_user: self.g_user.iter().map(|v| interleave(v.iter().copied())).collect(),
            h_uehr: self.h_uehr.iter().map(|v| interleave(v.iter().copied())).collect(),
            h_direct: self.h_direct.iter().map(|v| interleave(v.iter().copied())).collect(),
            d_user: self.d_user.clone(),
            d_uehr: self.d_uehr.clone(),
            d_bs: self.d_bs,
        }
    }

    pub fn from_dump(d: &ChannelDump) -> Self {
        ChannelSet {
            g_bs_ris: DMatrix::from_vec(d.m_ris, d.n_t, deinterleave(&d.g_bs_ris)),
            g_user: d.g_user.iter().map(|v| DVector::from_vec(deinterleave(v))).collect(),
            h_uehr: d.h_uehr.iter().map(|v| DVector::from_vec(deinterleave(v))).collect(),
            h_direct: d.h_direct.iter().map(|v| DVector::from_vec(deinterleave(v))).collect(),
            d_user: d.d_user.clone(),
            d_uehr: d.d_uehr.clone(),
            d_bs: d.d_bs,
        }
    }
}
