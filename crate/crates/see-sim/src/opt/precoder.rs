//! Precoder block: Dinkelbach fractional programming with SCA-convexified
//! secrecy and harvesting constraints, at fixed phases and allocation.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channels::{effective_user_channel, ChannelSet};
use crate::config::SystemConfig;
use crate::conic::{ComplexVec, ConicProgram, LinExpr, SolveResult, SolveStatus};
use crate::phy::{self, PrecoderSet};
use crate::taylor::{QuadBound, QuadOverLinBound};

use super::coupling::RateVars;
use super::{uehr_channels, DesignState, OptError, StreamLayout, SurrogateAnchors};

/// Relative headroom on the power budget and harvesting floor, an order of
/// magnitude above the interior-point feasibility tolerance.
const SOLVER_MARGIN: f64 = 1e-5;

/// One convexified precoder subproblem, kept around so tests can probe the
/// expansion point against the lowered constraint set.
pub struct PrecoderSubproblem {
    pub program: ConicProgram,
    pc: Option<ComplexVec>,
    pp: Vec<Option<ComplexVec>>,
    rate: RateVars,
    tau: usize,
    anchors: SurrogateAnchors,
    prec0: PrecoderSet,
    alloc: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
impl PrecoderSubproblem {
    pub fn build(
        prec0: &PrecoderSet,
        anchors: &SurrogateAnchors,
        v: &[DVector<Complex64>],
        u: &[DVector<Complex64>],
        alloc: &[f64],
        layout: &StreamLayout,
        cfg: &SystemConfig,
        lambda: f64,
        e_min: f64,
        include_eh: bool,
    ) -> Self {
        let mut p = ConicProgram::new();
        let pc = layout.common.then(|| p.complex_vec("p_c", cfg.n_t));
        let pp: Vec<Option<ComplexVec>> = layout
            .private
            .iter()
            .enumerate()
            .map(|(k, &on)| on.then(|| p.complex_vec(&format!("p_p{k}"), cfg.n_t)))
            .collect();
        let tau = p.scalar("tau");
        let rate = RateVars::declare(&mut p, layout);
        rate.couple(&mut p, anchors, alloc, cfg.r_c_min);
        let sigma2 = cfg.sigma2_w;

        // user-side SINR floors: interference power below the linearized
        // signal-over-SINR surrogate
        if let (Some(pcv), Some(cv)) = (&pc, &rate.common) {
            for (k, vk) in v.iter().enumerate() {
                let bnd = QuadOverLinBound::new(vk, &prec0.p_c, anchors.rho_c)
                    .expect("anchor SINR is floored positive");
                let rhs = pcv.re_inner(&bnd.w).push(cv.rho_c, bnd.x_coeff).offset(-sigma2);
                let mut quad = Vec::new();
                for ppl in pp.iter().flatten() {
                    let (re, im) = ppl.inner_with(vk);
                    quad.push(re);
                    quad.push(im);
                }
                p.quad_le_affine(quad, rhs);
                let _ = k;
            }
        }
        for (k, uvars) in rate.users.iter().enumerate() {
            let (Some(uv), Some(ppk)) = (uvars, &pp[k]) else { continue };
            let bnd = QuadOverLinBound::new(&v[k], &prec0.p_p[k], anchors.rho_p[k])
                .expect("anchor SINR is floored positive");
            let rhs = ppk.re_inner(&bnd.w).push(uv.rho_p, bnd.x_coeff).offset(-sigma2);
            let mut quad = Vec::new();
            for (l, ppl) in pp.iter().enumerate() {
                if l == k {
                    continue;
                }
                if let Some(ppl) = ppl {
                    let (re, im) = ppl.inner_with(&v[k]);
                    quad.push(re);
                    quad.push(im);
                }
            }
            p.quad_le_affine(quad, rhs);
        }

        // eavesdropper-side SINR caps, interference lower-bounded by tangents
        for uj in u {
            if let (Some(pcv), Some(cv)) = (&pc, &rate.common) {
                let mut bound = LinExpr::constant(sigma2);
                for (l, ppl) in pp.iter().enumerate() {
                    if let Some(ppl) = ppl {
                        let qb = QuadBound::new(uj, &prec0.p_p[l]);
                        bound = bound.plus(&ppl.re_inner(&qb.w).offset(qb.constant));
                    }
                }
                let (re, im) = pcv.inner_with(uj);
                p.quad_over_var(vec![re, im], LinExpr::var(cv.rho_ec), bound)
                    .expect("variable denominator");
            }
            for (k, uvars) in rate.users.iter().enumerate() {
                let (Some(uv), Some(ppk)) = (uvars, &pp[k]) else { continue };
                let mut bound = LinExpr::constant(sigma2);
                if let Some(pcv) = &pc {
                    let qb = QuadBound::new(uj, &prec0.p_c);
                    bound = bound.plus(&pcv.re_inner(&qb.w).offset(qb.constant));
                }
                for (l, ppl) in pp.iter().enumerate() {
                    if l == k {
                        continue;
                    }
                    if let Some(ppl) = ppl {
                        let qb = QuadBound::new(uj, &prec0.p_p[l]);
                        bound = bound.plus(&ppl.re_inner(&qb.w).offset(qb.constant));
                    }
                }
                let (re, im) = ppk.inner_with(uj);
                p.quad_over_var(vec![re, im], LinExpr::var(uv.rho_ep), bound)
                    .expect("variable denominator");
            }
        }

        // harvested-power floor through the tangents of the received powers;
        // the small relative margin swallows the interior-point feasibility
        // tolerance so returned designs satisfy the true floor
        if include_eh {
            let mut sum = LinExpr::constant(-e_min * (1.0 + SOLVER_MARGIN));
            for uj in u {
                if let Some(pcv) = &pc {
                    let qb = QuadBound::new(uj, &prec0.p_c);
                    sum = sum.plus(&pcv.re_inner(&qb.w).offset(qb.constant));
                }
                for (l, ppl) in pp.iter().enumerate() {
                    if let Some(ppl) = ppl {
                        let qb = QuadBound::new(uj, &prec0.p_p[l]);
                        sum = sum.plus(&ppl.re_inner(&qb.w).offset(qb.constant));
                    }
                }
            }
            p.nonneg(sum);
        }

        // power epigraph and budget
        let mut quad = Vec::new();
        let push_all = |cv: &ComplexVec, quad: &mut Vec<LinExpr>| {
            for i in 0..cv.len() {
                quad.push(LinExpr::var(cv.re_var(i)));
                quad.push(LinExpr::var(cv.im_var(i)));
            }
        };
        if let Some(pcv) = &pc {
            push_all(pcv, &mut quad);
        }
        for ppl in pp.iter().flatten() {
            push_all(ppl, &mut quad);
        }
        p.quad_le_affine(quad, LinExpr::var(tau));
        p.le(LinExpr::var(tau), LinExpr::constant(cfg.p_max_w * (1.0 - SOLVER_MARGIN)));

        p.set_objective(
            LinExpr::var(rate.zeta)
                .push(tau, -lambda * cfg.varrho)
                .offset(-lambda * cfg.p0_w),
        );

        Self {
            program: p,
            pc,
            pp,
            rate,
            tau,
            anchors: anchors.clone(),
            prec0: prec0.clone(),
            alloc: alloc.to_vec(),
        }
    }

    /// Assignment vector representing the expansion point itself.
    pub fn expansion_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.program.n_vars()];
        let fill = |x: &mut [f64], cv: &ComplexVec, p: &DVector<Complex64>| {
            for i in 0..cv.len() {
                x[cv.re_var(i)] = p[i].re;
                x[cv.im_var(i)] = p[i].im;
            }
        };
        if let Some(pcv) = &self.pc {
            fill(&mut x, pcv, &self.prec0.p_c);
        }
        for (l, ppl) in self.pp.iter().enumerate() {
            if let Some(ppl) = ppl {
                fill(&mut x, ppl, &self.prec0.p_p[l]);
            }
        }
        x[self.tau] = self.prec0.total_power();
        self.rate.anchor_assignment(&mut x, &self.anchors, &self.alloc);
        x
    }

    pub fn extract(&self, r: &SolveResult, n_t: usize) -> (PrecoderSet, SurrogateAnchors, f64) {
        let zero = DVector::from_element(n_t, Complex64::new(0.0, 0.0));
        let p_c = self.pc.as_ref().map(|v| r.complex_value(v)).unwrap_or_else(|| zero.clone());
        let p_p = self
            .pp
            .iter()
            .map(|ppl| ppl.as_ref().map(|v| r.complex_value(v)).unwrap_or_else(|| zero.clone()))
            .collect();
        let anchors = self.rate.extract_anchors(&r.x, &self.anchors);
        (PrecoderSet { p_c, p_p }, anchors, r.x[self.rate.zeta])
    }
}

#[derive(Debug, Clone)]
pub struct PrecoderOutcome {
    pub prec: PrecoderSet,
    /// Surrogate objective at the last solve.
    pub zeta: f64,
    pub lambda_trace: Vec<f64>,
    pub iterations: usize,
}

/// Alternates a fractional-parameter update with one convexified solve until
/// the surrogate objective settles.
pub fn dinkelbach_precoders(
    state: &DesignState,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    layout: &StreamLayout,
) -> Result<PrecoderOutcome, OptError> {
    let v: Vec<DVector<Complex64>> =
        (0..cfg.k_users).map(|k| effective_user_channel(ch, &state.phases, k)).collect();
    let u = uehr_channels(ch, &state.phases);
    let e_min = phy::eh_inverse(cfg.e_h_joule, &cfg.eh)?;

    let report = phy::secrecy_report(ch, &state.phases, &state.prec, &state.alloc, cfg);
    let mut anchors = SurrogateAnchors::from_report(&report, cfg);
    let mut prec = state.prec.clone();
    let mut lambda = 0.0;
    let mut lambda_trace = Vec::new();
    let mut zeta = f64::NEG_INFINITY;
    let mut iterations = 0;

    for it in 0..cfg.max_iters_inner {
        let sub = PrecoderSubproblem::build(
            &prec, &anchors, &v, &u, &state.alloc.a, layout, cfg, lambda, e_min, true,
        );
        let r = sub.program.solve();
        match r.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible if it == 0 => {
                let relaxed = PrecoderSubproblem::build(
                    &prec, &anchors, &v, &u, &state.alloc.a, layout, cfg, lambda, e_min, false,
                );
                let reason = if relaxed.program.solve().status == SolveStatus::Optimal {
                    "harvesting floor conflicts with the power budget and secrecy rows"
                } else {
                    "secrecy rows infeasible at the expansion point"
                };
                return Err(OptError::Infeasible(reason.to_string()));
            }
            _ => break, // keep the last feasible iterate
        }
        iterations = it + 1;
        let (new_prec, new_anchors, zeta_new) = sub.extract(&r, cfg.n_t);
        prec = new_prec;
        anchors = new_anchors;
        lambda = zeta_new / (cfg.varrho * prec.total_power() + cfg.p0_w);
        lambda_trace.push(lambda);
        let converged = (zeta_new - zeta).abs() <= cfg.tol_inner;
        zeta = zeta_new;
        if converged {
            break;
        }
    }

    if iterations == 0 {
        return Err(OptError::Solver("precoder subproblem never solved".into()));
    }
    Ok(PrecoderOutcome { prec, zeta, lambda_trace, iterations })
}
