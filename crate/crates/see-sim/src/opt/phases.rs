//! RIS phase block: penalty-based SCA over the reflection vector at fixed
//! precoders and allocation.
//!
//! Every SINR numerator and interference term becomes `|c + t^H s|^2` for a
//! per-stream scalar `c` (the direct path) and cascade vector `t`; the
//! surrogates then convexify the rows exactly as in the precoder block, with
//! a linearized unit-modulus penalty pulling the solution onto the circle.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channels::{t_vector, ChannelSet, RisPhases};
use crate::config::SystemConfig;
use crate::conic::{ComplexVec, ConicProgram, LinExpr, SolveResult, SolveStatus};
use crate::phy::{self, PrecoderSet};
use crate::taylor::{ProductBound, QuadOverLinBound, ShiftedQuadBound};

use super::coupling::RateVars;
use super::{DesignState, OptError, StreamLayout, SurrogateAnchors};

/// How far any element modulus may sit below one before the penalty weight
/// is escalated.
const MODULUS_TOL: f64 = 1e-3;
const MAX_ESCALATIONS: usize = 5;
/// Random unit-modulus draws screened before the SCA; the best feasible one
/// seeds a second SCA run so the block does not stall in a poor local
/// optimum of the nonconvex phase landscape.
const N_PROBES: usize = 512;
/// Best feasible draws that get their own SCA refinement pass.
const N_REFINED: usize = 3;
/// Angle grid and pass budget for the element-wise polish of the winner.
const POLISH_GRID: usize = 32;
const MAX_POLISH_PASSES: usize = 6;

/// Per-stream cascade vectors and direct-path scalars at fixed precoders.
pub struct PhaseData {
    /// `t` for user k receiving the common stream.
    t_kc: Vec<DVector<Complex64>>,
    /// `t` for user k receiving private stream l.
    t_kp: Vec<Vec<DVector<Complex64>>>,
    /// Direct scalar and `t` for UEHR j receiving the common stream.
    c_jc: Vec<Complex64>,
    t_jc: Vec<DVector<Complex64>>,
    /// Direct scalar and `t` for UEHR j receiving private stream l.
    c_jp: Vec<Vec<Complex64>>,
    t_jp: Vec<Vec<DVector<Complex64>>>,
}

impl PhaseData {
    pub fn new(ch: &ChannelSet, prec: &PrecoderSet) -> Self {
        let k_users = ch.g_user.len();
        let j_uehrs = ch.h_uehr.len();
        let t_kc =
            (0..k_users).map(|k| t_vector(&ch.g_user[k], &ch.g_bs_ris, &prec.p_c)).collect();
        let t_kp = (0..k_users)
            .map(|k| {
                prec.p_p.iter().map(|pl| t_vector(&ch.g_user[k], &ch.g_bs_ris, pl)).collect()
            })
            .collect();
        let c_jc = (0..j_uehrs).map(|j| ch.h_direct[j].dotc(&prec.p_c)).collect();
        let t_jc =
            (0..j_uehrs).map(|j| t_vector(&ch.h_uehr[j], &ch.g_bs_ris, &prec.p_c)).collect();
        let c_jp = (0..j_uehrs)
            .map(|j| prec.p_p.iter().map(|pl| ch.h_direct[j].dotc(pl)).collect())
            .collect();
        let t_jp = (0..j_uehrs)
            .map(|j| {
                prec.p_p.iter().map(|pl| t_vector(&ch.h_uehr[j], &ch.g_bs_ris, pl)).collect()
            })
            .collect();
        Self { t_kc, t_kp, c_jc, t_jc, c_jp, t_jp }
    }

    fn received(&self, j: usize, l: usize, s: &DVector<Complex64>) -> f64 {
        (self.c_jp[j][l] + self.t_jp[j][l].dotc(s)).norm_sqr()
    }

    fn received_common(&self, j: usize, s: &DVector<Complex64>) -> f64 {
        (self.c_jc[j] + self.t_jc[j].dotc(s)).norm_sqr()
    }
}

pub struct PhaseSubproblem {
    pub program: ConicProgram,
    s: ComplexVec,
    rate: RateVars,
    xi_c: Vec<Option<usize>>,
    xi_p: Vec<Vec<Option<usize>>>,
    anchors: SurrogateAnchors,
    xi_c0: Vec<f64>,
    xi_p0: Vec<Vec<f64>>,
    s0: DVector<Complex64>,
    alloc: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
impl PhaseSubproblem {
    pub fn build(
        data: &PhaseData,
        s0: &DVector<Complex64>,
        anchors: &SurrogateAnchors,
        alloc: &[f64],
        layout: &StreamLayout,
        cfg: &SystemConfig,
        penalty: f64,
        e_min: f64,
    ) -> Self {
        let m = s0.len();
        let j_uehrs = data.t_jc.len();
        let sigma2 = cfg.sigma2_w;
        let mut p = ConicProgram::new();
        let s = p.complex_vec("s", m);
        let rate = RateVars::declare(&mut p, layout);
        rate.couple(&mut p, anchors, alloc, cfg.r_c_min);
        let xi_c: Vec<Option<usize>> = (0..j_uehrs)
            .map(|j| layout.common.then(|| p.scalar(&format!("xi_c{j}"))))
            .collect();
        let xi_p: Vec<Vec<Option<usize>>> = (0..j_uehrs)
            .map(|j| {
                layout
                    .private
                    .iter()
                    .enumerate()
                    .map(|(k, &on)| on.then(|| p.scalar(&format!("xi_p{j}_{k}"))))
                    .collect()
            })
            .collect();

        // eavesdropper denominator anchors at the expansion phases
        let xi_c0: Vec<f64> = (0..j_uehrs)
            .map(|j| {
                layout.active_private().map(|l| data.received(j, l, s0)).sum::<f64>() + sigma2
            })
            .collect();
        let xi_p0: Vec<Vec<f64>> = (0..j_uehrs)
            .map(|j| {
                (0..cfg.k_users)
                    .map(|k| {
                        let common = if layout.common { data.received_common(j, s0) } else { 0.0 };
                        common
                            + layout
                                .active_private()
                                .filter(|&l| l != k)
                                .map(|l| data.received(j, l, s0))
                                .sum::<f64>()
                            + sigma2
                    })
                    .collect()
            })
            .collect();

        // user-side SINR floors
        if let Some(cv) = &rate.common {
            for (k, tkc) in data.t_kc.iter().enumerate() {
                let bnd = QuadOverLinBound::new(tkc, s0, anchors.rho_c)
                    .expect("anchor SINR is floored positive");
                let rhs = s.re_inner(&bnd.w).push(cv.rho_c, bnd.x_coeff).offset(-sigma2);
                let mut quad = Vec::new();
                for l in layout.active_private() {
                    let (re, im) = s.inner_with(&data.t_kp[k][l]);
                    quad.push(re);
                    quad.push(im);
                }
                p.quad_le_affine(quad, rhs);
            }
        }
        for (k, uvars) in rate.users.iter().enumerate() {
            let Some(uv) = uvars else { continue };
            let bnd = QuadOverLinBound::new(&data.t_kp[k][k], s0, anchors.rho_p[k])
                .expect("anchor SINR is floored positive");
            let rhs = s.re_inner(&bnd.w).push(uv.rho_p, bnd.x_coeff).offset(-sigma2);
            let mut quad = Vec::new();
            for l in layout.active_private().filter(|&l| l != k) {
                let (re, im) = s.inner_with(&data.t_kp[k][l]);
                quad.push(re);
                quad.push(im);
            }
            p.quad_le_affine(quad, rhs);
        }

        // eavesdropper-side caps through the bilinear lower bound on
        // SINR-times-denominator, plus tangent floors on the denominators
        for j in 0..j_uehrs {
            if let (Some(xi), Some(cv)) = (&xi_c[j], &rate.common) {
                let pb = ProductBound::new(xi_c0[j], anchors.rho_ec);
                let (re, im) = s.inner_with(&data.t_jc[j]);
                let quad = vec![
                    re.offset(data.c_jc[j].re),
                    im.offset(data.c_jc[j].im),
                    LinExpr::term(*xi, 0.5).push(cv.rho_ec, -0.5),
                ];
                let rhs = LinExpr::term(*xi, pb.sum_coeff)
                    .push(cv.rho_ec, pb.sum_coeff)
                    .offset(pb.constant);
                p.quad_le_affine(quad, rhs);
                let mut floor = LinExpr::constant(sigma2).push(*xi, -1.0);
                for l in layout.active_private() {
                    let th = ShiftedQuadBound::new(data.c_jp[j][l], &data.t_jp[j][l], s0);
                    floor = floor.plus(&s.re_inner(&th.w).offset(th.constant));
                }
                p.nonneg(floor);
            }
            for (k, uvars) in rate.users.iter().enumerate() {
                let (Some(uv), Some(xi)) = (uvars, &xi_p[j][k]) else { continue };
                let pb = ProductBound::new(xi_p0[j][k], anchors.rho_ep[k]);
                let (re, im) = s.inner_with(&data.t_jp[j][k]);
                let quad = vec![
                    re.offset(data.c_jp[j][k].re),
                    im.offset(data.c_jp[j][k].im),
                    LinExpr::term(*xi, 0.5).push(uv.rho_ep, -0.5),
                ];
                let rhs = LinExpr::term(*xi, pb.sum_coeff)
                    .push(uv.rho_ep, pb.sum_coeff)
                    .offset(pb.constant);
                p.quad_le_affine(quad, rhs);
                let mut floor = LinExpr::constant(sigma2).push(*xi, -1.0);
                if layout.common {
                    let th = ShiftedQuadBound::new(data.c_jc[j], &data.t_jc[j], s0);
                    floor = floor.plus(&s.re_inner(&th.w).offset(th.constant));
                }
                for l in layout.active_private().filter(|&l| l != k) {
                    let th = ShiftedQuadBound::new(data.c_jp[j][l], &data.t_jp[j][l], s0);
                    floor = floor.plus(&s.re_inner(&th.w).offset(th.constant));
                }
                p.nonneg(floor);
            }
        }

        // harvested-power floor, with headroom for the solver tolerance
        let mut sum = LinExpr::constant(-e_min * (1.0 + 1e-5));
        for j in 0..j_uehrs {
            if layout.common {
                let th = ShiftedQuadBound::new(data.c_jc[j], &data.t_jc[j], s0);
                sum = sum.plus(&s.re_inner(&th.w).offset(th.constant));
            }
            for l in layout.active_private() {
                let th = ShiftedQuadBound::new(data.c_jp[j][l], &data.t_jp[j][l], s0);
                sum = sum.plus(&s.re_inner(&th.w).offset(th.constant));
            }
        }
        p.nonneg(sum);

        // relaxed modulus box
        for i in 0..m {
            p.quad_le_affine(
                vec![LinExpr::var(s.re_var(i)), LinExpr::var(s.im_var(i))],
                LinExpr::constant(1.0),
            );
        }

        // objective with linearized modulus reward
        let reward = s0 * Complex64::from(2.0 * penalty);
        let obj = LinExpr::var(rate.zeta)
            .plus(&s.re_inner(&reward))
            .offset(-penalty * (m as f64 + s0.norm_squared()));
        p.set_objective(obj);

        Self {
            program: p,
            s,
            rate,
            xi_c,
            xi_p,
            anchors: anchors.clone(),
            xi_c0,
            xi_p0,
            s0: s0.clone(),
            alloc: alloc.to_vec(),
        }
    }

    pub fn expansion_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.program.n_vars()];
        for i in 0..self.s.len() {
            x[self.s.re_var(i)] = self.s0[i].re;
            x[self.s.im_var(i)] = self.s0[i].im;
        }
        for (j, xi) in self.xi_c.iter().enumerate() {
            if let Some(xi) = xi {
                x[*xi] = self.xi_c0[j];
            }
        }
        for (j, row) in self.xi_p.iter().enumerate() {
            for (k, xi) in row.iter().enumerate() {
                if let Some(xi) = xi {
                    x[*xi] = self.xi_p0[j][k];
                }
            }
        }
        self.rate.anchor_assignment(&mut x, &self.anchors, &self.alloc);
        x
    }

    pub fn extract(&self, r: &SolveResult) -> (DVector<Complex64>, SurrogateAnchors, f64) {
        let s = r.complex_value(&self.s);
        let anchors = self.rate.extract_anchors(&r.x, &self.anchors);
        (s, anchors, r.x[self.rate.zeta])
    }
}

#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub phases: RisPhases,
    /// Ground-truth minimum secrecy rate after the final projection.
    pub zeta: f64,
    pub iterations: usize,
    pub penalty: f64,
}

/// Penalty-SCA loop with escalation until the relaxed solution sits on the
/// unit circle, then a radial projection.
fn penalty_sca(
    data: &PhaseData,
    start: &RisPhases,
    state: &DesignState,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    layout: &StreamLayout,
    e_min: f64,
) -> Result<PhaseOutcome, OptError> {
    let report = phy::secrecy_report(ch, start, &state.prec, &state.alloc, cfg);
    let mut anchors = SurrogateAnchors::from_report(&report, cfg);
    let mut s0 = start.s.clone();
    let mut penalty = cfg.penalty_c0 * report.r_sec_min.abs().max(0.01);
    let mut iterations = 0;
    let mut solved_once = false;

    for _escalation in 0..=MAX_ESCALATIONS {
        let mut zeta_prev = f64::NEG_INFINITY;
        for _ in 0..cfg.max_iters_inner {
            let sub = PhaseSubproblem::build(
                data, &s0, &anchors, &state.alloc.a, layout, cfg, penalty, e_min,
            );
            let r = sub.program.solve();
            if r.status != SolveStatus::Optimal {
                if !solved_once {
                    return Err(OptError::Infeasible(
                        "phase subproblem infeasible at the expansion point".into(),
                    ));
                }
                break;
            }
            solved_once = true;
            iterations += 1;
            let (s_new, anchors_new, zeta) = sub.extract(&r);
            s0 = s_new;
            anchors = anchors_new;
            if (zeta - zeta_prev).abs() <= cfg.tol_inner {
                break;
            }
            zeta_prev = zeta;
        }
        let worst = RisPhases::from_vector(s0.clone()).max_modulus_error();
        if worst <= MODULUS_TOL {
            break;
        }
        penalty *= cfg.penalty_growth;
    }

    let mut phases = RisPhases::from_vector(s0);
    phases.project_unit_modulus();
    let report = phy::secrecy_report(ch, &phases, &state.prec, &state.alloc, cfg);
    Ok(PhaseOutcome { phases, zeta: report.r_sec_min, iterations, penalty })
}

/// Whether a candidate phase vector keeps the coupling constraints that do
/// not involve the precoders: the harvesting floor and the common-rate
/// bracket.
fn probe_feasible(
    report: &phy::RateReport,
    eh_sum: f64,
    e_min: f64,
    layout: &StreamLayout,
    cfg: &SystemConfig,
) -> bool {
    if eh_sum < e_min {
        return false;
    }
    if layout.common {
        let gamma_c_min = report.gamma_c.iter().cloned().fold(f64::INFINITY, f64::min);
        if (1.0 + gamma_c_min).log2() < cfg.r_c_min {
            return false;
        }
    }
    true
}

/// Multi-start phase block: screen random unit-modulus draws, then run the
/// penalty SCA from the incumbent and from the best feasible draw, keeping
/// whichever lands highest in the true objective.
pub fn optimize_phases(
    state: &DesignState,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    layout: &StreamLayout,
) -> Result<PhaseOutcome, OptError> {
    use rand::{Rng, SeedableRng};

    let data = PhaseData::new(ch, &state.prec);
    let e_min = phy::eh_inverse(cfg.e_h_joule, &cfg.eh)?;

    let mut rng =
        rand_chacha::ChaCha8Rng::seed_from_u64(cfg.master_seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut probes: Vec<(f64, RisPhases)> = Vec::new();
    for _ in 0..N_PROBES {
        let theta: Vec<f64> =
            (0..cfg.m_ris).map(|_| rng.gen::<f64>() * std::f64::consts::TAU).collect();
        let cand = RisPhases::from_theta(&theta);
        let rep = phy::secrecy_report(ch, &cand, &state.prec, &state.alloc, cfg);
        let eh = phy::eh_report(ch, &cand, &state.prec, cfg);
        if !probe_feasible(&rep, eh.p_eh_sum, e_min, layout, cfg) {
            continue;
        }
        probes.push((rep.r_sec_min, cand));
    }
    probes.sort_by(|a, b| b.0.total_cmp(&a.0));
    probes.truncate(N_REFINED);

    let incumbent = penalty_sca(&data, &state.phases, state, ch, cfg, layout, e_min);
    let mut candidates: Vec<PhaseOutcome> = Vec::new();
    match incumbent {
        Ok(out) => candidates.push(out),
        Err(e) if probes.is_empty() => return Err(e),
        Err(_) => {}
    }
    for (zeta, probe) in probes {
        if let Ok(out) = penalty_sca(&data, &probe, state, ch, cfg, layout, e_min) {
            candidates.push(out);
        }
        // the raw draw is itself a feasible fallback
        candidates.push(PhaseOutcome { phases: probe, zeta, iterations: 0, penalty: 0.0 });
    }
    let mut best = candidates
        .into_iter()
        .max_by(|a, b| a.zeta.total_cmp(&b.zeta))
        .ok_or_else(|| OptError::Infeasible("phase block found no feasible start".into()))?;

    // cyclic single-element descent on the true objective; only feasible
    // improvements are committed, so this can never undo the SCA result
    for _ in 0..MAX_POLISH_PASSES {
        let mut improved = false;
        for m in 0..best.phases.len() {
            let saved = best.phases.s[m];
            let mut winner = None;
            for g in 0..POLISH_GRID {
                let theta = std::f64::consts::TAU * g as f64 / POLISH_GRID as f64;
                best.phases.s[m] = Complex64::from_polar(1.0, theta);
                let rep = phy::secrecy_report(ch, &best.phases, &state.prec, &state.alloc, cfg);
                let eh = phy::eh_report(ch, &best.phases, &state.prec, cfg);
                if probe_feasible(&rep, eh.p_eh_sum, e_min, layout, cfg)
                    && rep.r_sec_min > best.zeta + 1e-12
                {
                    best.zeta = rep.r_sec_min;
                    winner = Some(best.phases.s[m]);
                }
            }
            match winner {
                Some(s) => {
                    best.phases.s[m] = s;
                    improved = true;
                }
                None => best.phases.s[m] = saved,
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}
