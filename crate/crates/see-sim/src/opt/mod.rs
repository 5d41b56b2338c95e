//! The three optimization blocks and the alternating driver.
//!
//! * [`allocation`]: common-message split across users (LP + closed form).
//! * [`precoder`]: Dinkelbach fractional programming over the transmit
//!   precoders with SCA-convexified secrecy/EH constraints.
//! * [`phases`]: penalty-based SCA over the RIS phase vector.
//! * [`alternating_optimize`]: the outer loop tying them together with the
//!   monotone safeguard on the SEE value.

pub mod allocation;
mod coupling;
pub mod phases;
pub mod precoder;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channels::{combined_uehr_channel, effective_user_channel, ChannelSet, RisPhases};
use crate::config::{Scheme, SystemConfig};
use crate::phy::{self, PrecoderSet, RateAllocation, RateReport};

#[derive(Debug, Error)]
pub enum OptError {
    #[error("subproblem infeasible: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("initialization failed: {0}")]
    Initialization(String),
    #[error(transparent)]
    Eh(#[from] phy::EhError),
}

/// Which streams exist under the active scheme.
///
/// SDMA drops the common stream entirely; NOMA carries the whole message of
/// the weakest user on the common stream and disables that user's private
/// stream.
#[derive(Debug, Clone)]
pub struct StreamLayout {
    pub common: bool,
    pub private: Vec<bool>,
    /// Allocation is free for RSMA, fixed for SDMA/NOMA.
    pub fixed_alloc: Option<RateAllocation>,
}

impl StreamLayout {
    pub fn rsma(k_users: usize) -> Self {
        Self { common: true, private: vec![true; k_users], fixed_alloc: None }
    }

    /// Scheme-specific layout; the weakest user (NOMA) is chosen by smallest
    /// effective-channel norm at the given phases.
    pub fn for_scheme(scheme: Scheme, ch: &ChannelSet, s: &RisPhases) -> Self {
        let k_users = ch.g_user.len();
        match scheme {
            Scheme::Rsma => Self::rsma(k_users),
            Scheme::Sdma => Self {
                common: false,
                private: vec![true; k_users],
                fixed_alloc: Some(RateAllocation::uniform(k_users)),
            },
            Scheme::Noma => {
                let weakest = (0..k_users)
                    .min_by(|&a, &b| {
                        let na = effective_user_channel(ch, s, a).norm_squared();
                        let nb = effective_user_channel(ch, s, b).norm_squared();
                        na.partial_cmp(&nb).unwrap()
                    })
                    .unwrap();
                let mut private = vec![true; k_users];
                private[weakest] = false;
                let mut a = vec![0.0; k_users];
                a[weakest] = 1.0;
                Self { common: true, private, fixed_alloc: Some(RateAllocation { a }) }
            }
        }
    }

    pub fn active_private(&self) -> impl Iterator<Item = usize> + '_ {
        self.private.iter().enumerate().filter(|(_, &on)| on).map(|(k, _)| k)
    }
}

/// Expansion-point values shared by both SCA subproblems, taken from the
/// ground-truth metrics at the current iterate. SINR anchors are floored so
/// quadratic-over-linear expansions stay well defined.
#[derive(Debug, Clone)]
pub struct SurrogateAnchors {
    pub rho_c: f64,
    pub rho_p: Vec<f64>,
    pub rho_ec: f64,
    pub rho_ep: Vec<f64>,
    pub f_ec: f64,
    pub f_ep: Vec<f64>,
    pub r_c: f64,
}

pub(crate) const SINR_FLOOR: f64 = 1e-9;

impl SurrogateAnchors {
    pub fn from_report(report: &RateReport, cfg: &SystemConfig) -> Self {
        let rho_c = report.gamma_c.iter().cloned().fold(f64::INFINITY, f64::min).max(SINR_FLOOR);
        let rho_p: Vec<f64> = report.gamma_p.iter().map(|&g| g.max(SINR_FLOOR)).collect();
        let rho_ec =
            report.gamma_c_eve.iter().cloned().fold(0.0f64, f64::max).max(SINR_FLOOR);
        let k_users = report.gamma_p.len();
        let rho_ep: Vec<f64> = (0..k_users)
            .map(|k| {
                report
                    .gamma_p_eve
                    .iter()
                    .map(|row| row[k])
                    .fold(0.0f64, f64::max)
                    .max(SINR_FLOOR)
            })
            .collect();
        let f_ec = (1.0 + rho_ec).log2();
        let f_ep: Vec<f64> = rho_ep.iter().map(|&r| (1.0 + r).log2()).collect();
        // keep the common-rate anchor inside its bracket when possible
        let upper = (1.0 + rho_c).log2();
        let lower = cfg.r_c_min.max(f_ec);
        let r_c = if lower <= upper { lower } else { upper.max(cfg.r_c_min) };
        Self { rho_c, rho_p, rho_ec, rho_ep, f_ec, f_ep, r_c }
    }
}

/// The optimization triple plus the scalars the loops track.
#[derive(Debug, Clone)]
pub struct DesignState {
    pub alloc: RateAllocation,
    pub prec: PrecoderSet,
    pub phases: RisPhases,
    /// Ground-truth minimum per-user secrecy rate at this state.
    pub zeta: f64,
    /// Dinkelbach parameter at the last precoder solve.
    pub lambda: f64,
    /// SEE value `zeta / (varrho * tr(PP^H) + P_0)`.
    pub eta: f64,
}

impl DesignState {
    pub fn evaluate(&mut self, ch: &ChannelSet, cfg: &SystemConfig) -> RateReport {
        let report = phy::secrecy_report(ch, &self.phases, &self.prec, &self.alloc, cfg);
        self.zeta = report.r_sec_min;
        self.eta = report.see;
        report
    }
}

/// One structured record of the convergence trace.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TraceRecord {
    pub outer_iter: usize,
    pub stage: &'static str,
    pub zeta: f64,
    pub lambda: f64,
    pub eta: f64,
    pub max_residual: f64,
}

/// Outcome of one full alternating optimization run.
#[derive(Debug, Clone)]
pub struct AoOutcome {
    pub state: DesignState,
    pub report: RateReport,
    pub eh: phy::EhReport,
    pub trace: Vec<TraceRecord>,
    /// Dinkelbach parameter sequence of each outer iteration's precoder run.
    pub lambda_traces: Vec<Vec<f64>>,
    pub outer_iterations: usize,
}

/// Test hook: mutate the phase block right after the phase optimizer at a
/// given outer iteration, to exercise the monotone safeguard.
pub type PhaseHook<'a> = dyn Fn(usize, &mut RisPhases) + 'a;

const INIT_RETRIES: usize = 20;
const INIT_POWER_FRACTION: f64 = 0.9;

/// Maximum-ratio initialization at random phases, scaled up toward `P_max`
/// until the energy-harvesting requirement is met; retries with fresh random
/// phases when it cannot be.
pub fn initialize(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    layout: &StreamLayout,
    seed: u64,
) -> Result<DesignState, OptError> {
    let e_min = phy::eh_inverse(cfg.e_h_joule, &cfg.eh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA0A0_5050_1234_9876);
    for _attempt in 0..INIT_RETRIES {
        let theta: Vec<f64> =
            (0..cfg.m_ris).map(|_| rng.gen::<f64>() * std::f64::consts::TAU).collect();
        let phases = RisPhases::from_theta(&theta);
        let mut prec = mrt_precoders(ch, cfg, layout, &phases);
        // scale up to the full budget if the EH row needs it
        let received = |p: &PrecoderSet| phy::eh_report(ch, &phases, p, cfg).p_eh_sum;
        if received(&prec) < e_min {
            let headroom = (cfg.p_max_w / prec.total_power()).sqrt();
            prec.scale(headroom.min((1.0 / INIT_POWER_FRACTION).sqrt()));
        }
        if received(&prec) >= e_min {
            let alloc = layout
                .fixed_alloc
                .clone()
                .unwrap_or_else(|| RateAllocation::uniform(cfg.k_users));
            let mut state =
                DesignState { alloc, prec, phases, zeta: 0.0, lambda: 0.0, eta: 0.0 };
            state.evaluate(ch, cfg);
            return Ok(state);
        }
    }
    Err(OptError::Initialization(format!(
        "energy-harvesting requirement (sum received power >= {e_min:.3e} W) unreachable at P_max after {INIT_RETRIES} random phase draws"
    )))
}

fn mrt_precoders(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    layout: &StreamLayout,
    phases: &RisPhases,
) -> PrecoderSet {
    let n_streams = layout.common as usize + layout.active_private().count();
    let per_stream = INIT_POWER_FRACTION * cfg.p_max_w / n_streams.max(1) as f64;
    let v: Vec<DVector<Complex64>> =
        (0..cfg.k_users).map(|k| effective_user_channel(ch, phases, k)).collect();
    let unit = |d: &DVector<Complex64>| {
        let n = d.norm();
        if n > 0.0 {
            d * Complex64::from(per_stream.sqrt() / n)
        } else {
            DVector::from_element(d.len(), Complex64::from((per_stream / d.len() as f64).sqrt()))
        }
    };
    let p_c = if layout.common {
        let sum = v.iter().fold(DVector::from_element(cfg.n_t, Complex64::new(0.0, 0.0)), |acc, vk| {
            acc + vk
        });
        unit(&sum)
    } else {
        DVector::from_element(cfg.n_t, Complex64::new(0.0, 0.0))
    };
    let p_p = (0..cfg.k_users)
        .map(|k| {
            if layout.private[k] {
                unit(&v[k])
            } else {
                DVector::from_element(cfg.n_t, Complex64::new(0.0, 0.0))
            }
        })
        .collect();
    PrecoderSet { p_c, p_p }
}

/// Combined channels `u_j` at fixed phases, used by the precoder block.
pub fn uehr_channels(ch: &ChannelSet, s: &RisPhases) -> Vec<DVector<Complex64>> {
    (0..ch.h_uehr.len()).map(|j| combined_uehr_channel(ch, s, j)).collect()
}

/// Algorithm driver: allocation, precoders, phases, with the revert
/// safeguard on the SEE value and a bounded outer iteration count.
pub fn alternating_optimize(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    seed: u64,
) -> Result<AoOutcome, OptError> {
    alternating_optimize_with_hook(ch, cfg, seed, None)
}

pub fn alternating_optimize_with_hook(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    seed: u64,
    hook: Option<&PhaseHook<'_>>,
) -> Result<AoOutcome, OptError> {
    let initial_phases = RisPhases::all_ones(cfg.m_ris);
    let layout = StreamLayout::for_scheme(cfg.scheme, ch, &initial_phases);
    // a hostile random start can leave the first convexified program
    // infeasible even when the instance is fine; restart from fresh phases
    let mut state = initialize(ch, cfg, &layout, seed)?;
    let mut last_err = None;
    for restart in 0..5u64 {
        let cand = if restart == 0 {
            state.clone()
        } else {
            initialize(ch, cfg, &layout, seed ^ (0xC0FFEE << restart))?
        };
        match precoder::dinkelbach_precoders(&cand, ch, cfg, &layout) {
            Ok(_) => {
                state = cand;
                last_err = None;
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    if let Some(e) = last_err {
        return Err(e);
    }
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut lambda_traces: Vec<Vec<f64>> = Vec::new();
    let mut eta_prev = state.eta;
    let mut outer = 0usize;

    while outer < cfg.max_iters_outer {
        outer += 1;

        // block 1: allocation
        if layout.fixed_alloc.is_none() {
            let report = phy::secrecy_report(ch, &state.phases, &state.prec, &state.alloc, cfg);
            state.alloc = allocation::solve_allocation(report.r_c_sec, &report.r_p_sec);
        }
        state.evaluate(ch, cfg);
        trace.push(TraceRecord {
            outer_iter: outer,
            stage: "allocation",
            zeta: state.zeta,
            lambda: state.lambda,
            eta: state.eta,
            max_residual: 0.0,
        });

        // block 2: precoders (Dinkelbach + SCA)
        match precoder::dinkelbach_precoders(&state, ch, cfg, &layout) {
            Ok(out) => {
                state.prec = out.prec;
                state.lambda = *out.lambda_trace.last().unwrap_or(&state.lambda);
                lambda_traces.push(out.lambda_trace);
                state.evaluate(ch, cfg);
            }
            Err(e) if outer == 1 => return Err(e),
            Err(_) => {} // keep last feasible precoders
        }
        trace.push(TraceRecord {
            outer_iter: outer,
            stage: "precoder",
            zeta: state.zeta,
            lambda: state.lambda,
            eta: state.eta,
            max_residual: 0.0,
        });

        // block 3: RIS phases, guarded by the revert rule
        let phases_before = state.phases.clone();
        let eta_before_phases = state.eta;
        if let Ok(out) = phases::optimize_phases(&state, ch, cfg, &layout) {
            state.phases = out.phases;
        }
        if let Some(h) = hook {
            h(outer, &mut state.phases);
        }
        state.evaluate(ch, cfg);
        if state.eta < eta_before_phases {
            state.phases = phases_before;
            state.evaluate(ch, cfg);
        }
        trace.push(TraceRecord {
            outer_iter: outer,
            stage: "phases",
            zeta: state.zeta,
            lambda: state.lambda,
            eta: state.eta,
            max_residual: 0.0,
        });

        if (state.eta - eta_prev).abs() <= cfg.tol_outer {
            break;
        }
        eta_prev = state.eta;
    }

    let report = phy::secrecy_report(ch, &state.phases, &state.prec, &state.alloc, cfg);
    let eh = phy::eh_report(ch, &state.phases, &state.prec, cfg);
    Ok(AoOutcome { state, report, eh, trace, lambda_traces, outer_iterations: outer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::generate_channels;
    use crate::config::SystemConfig;

    #[test]
    fn driver_smoke_constraints_hold_at_the_end() {
        let cfg = SystemConfig::desk_scale();
        let ch = generate_channels(&cfg, 70);
        let out = alternating_optimize(&ch, &cfg, 70).expect("AO run succeeds");
        let state = &out.state;
        assert!(state.prec.total_power() <= cfg.p_max_w * (1.0 + 1e-6));
        assert!(state.phases.max_modulus_error() <= 1e-12);
        assert!(state.alloc.is_valid());
        assert!(out.eh.meets_eh, "EH unmet: sum {}", out.eh.p_eh_sum);
        assert!(state.eta.is_finite() && state.eta >= 0.0);
        // lambda is monotone within every precoder run
        for lt in &out.lambda_traces {
            for w in lt.windows(2) {
                assert!(w[1] >= w[0] - 1e-6, "{lt:?}");
            }
        }
    }

    #[test]
    fn phase_stage_never_degrades_the_objective() {
        let cfg = SystemConfig::desk_scale();
        let ch = generate_channels(&cfg, 71);
        let out = alternating_optimize(&ch, &cfg, 71).expect("AO run succeeds");
        for pair in out.trace.windows(2) {
            if pair[1].stage == "phases" {
                assert!(
                    pair[1].eta >= pair[0].eta - 1e-9,
                    "phase stage dropped eta: {pair:?}"
                );
            }
        }
    }

    #[test]
    fn safeguard_reverts_an_injected_perturbation() {
        let cfg = SystemConfig::desk_scale();
        let ch = generate_channels(&cfg, 72);
        // scramble the phases after every phase solve; the revert rule must
        // still keep the objective from dropping across the stage
        let hook: Box<PhaseHook<'_>> = Box::new(|_, phases: &mut RisPhases| {
            let m = phases.len();
            *phases = RisPhases::from_theta(&vec![1.234; m]);
        });
        let out = alternating_optimize_with_hook(&ch, &cfg, 72, Some(&hook)).expect("runs");
        for pair in out.trace.windows(2) {
            if pair[1].stage == "phases" {
                assert!(pair[1].eta >= pair[0].eta - 1e-9, "{pair:?}");
            }
        }
    }

    #[test]
    fn unreachable_harvest_demand_is_reported_infeasible() {
        let mut cfg = SystemConfig::desk_scale();
        // demand more harvested energy than the budget can possibly deliver
        cfg.e_h_joule = 1.0;
        let ch = generate_channels(&cfg, 74);
        assert!(matches!(
            alternating_optimize(&ch, &cfg, 74),
            Err(OptError::Infeasible(_) | OptError::Initialization(_) | OptError::Eh(_))
        ));
    }

    #[test]
    fn dinkelbach_terminates_at_a_fixed_point() {
        let cfg = SystemConfig::desk_scale();
        let ch = generate_channels(&cfg, 75);
        let out = alternating_optimize(&ch, &cfg, 75).expect("AO run succeeds");
        // at convergence zeta - lambda (varrho tr + P0) vanishes; compare at
        // the last precoder stage, before the phase block moves zeta again
        let rec = out.trace.iter().rev().find(|r| r.stage == "precoder").unwrap();
        let denom = cfg.varrho * out.state.prec.total_power() + cfg.p0_w;
        let gap = rec.zeta - rec.lambda * denom;
        assert!(
            gap.abs() <= 10.0 * cfg.tol_inner,
            "fixed-point gap {gap} (lambda {}, denom {denom})",
            rec.lambda
        );
    }

    #[test]
    fn initialization_is_reproducible() {
        let cfg = SystemConfig::desk_scale();
        let ch = generate_channels(&cfg, 73);
        let layout = StreamLayout::rsma(cfg.k_users);
        let a = initialize(&ch, &cfg, &layout, 5).unwrap();
        let b = initialize(&ch, &cfg, &layout, 5).unwrap();
        assert_eq!(a.phases, b.phases);
        assert_eq!(a.prec, b.prec);
    }
}
