//! Rate-side variables and rows shared by both SCA subproblems.
//!
//! Both the precoder and the phase subproblem carry the same auxiliary rate
//! structure: per-stream SINR lower bounds for the users, SINR upper bounds
//! for the eavesdropping UEHRs, log hypographs, secrecy-difference rows, and
//! the common-rate bracket. Only the SINR-defining rows differ between the
//! two blocks, so everything else lives here.

use crate::conic::{ConicProgram, LinExpr};
use crate::taylor::Exp2Bound;

use super::{StreamLayout, SurrogateAnchors, SINR_FLOOR};

#[derive(Debug, Clone, Copy)]
pub(crate) struct CommonVars {
    pub rho_c: usize,
    pub w_c: usize,
    pub rho_ec: usize,
    pub f_ec: usize,
    pub r_c: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct UserVars {
    pub rho_p: usize,
    pub w_p: usize,
    pub rho_ep: usize,
    pub f_ep: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct RateVars {
    pub zeta: usize,
    pub common: Option<CommonVars>,
    pub users: Vec<Option<UserVars>>,
}

impl RateVars {
    pub fn declare(p: &mut ConicProgram, layout: &StreamLayout) -> Self {
        let zeta = p.scalar("zeta");
        let common = layout.common.then(|| CommonVars {
            rho_c: p.scalar("rho_c"),
            w_c: p.scalar("w_c"),
            rho_ec: p.scalar("rho_ec"),
            f_ec: p.scalar("f_ec"),
            r_c: p.scalar("r_c"),
        });
        let users = layout
            .private
            .iter()
            .enumerate()
            .map(|(k, &on)| {
                on.then(|| UserVars {
                    rho_p: p.scalar(&format!("rho_p{k}")),
                    w_p: p.scalar(&format!("w_p{k}")),
                    rho_ep: p.scalar(&format!("rho_ep{k}")),
                    f_ep: p.scalar(&format!("f_ep{k}")),
                })
            })
            .collect();
        Self { zeta, common, users }
    }

    /// All rows that do not mention the design variables: hypographs,
    /// secrecy differences, eavesdropper-rate tangents, and the common-rate
    /// bracket.
    pub fn couple(
        &self,
        p: &mut ConicProgram,
        anchors: &SurrogateAnchors,
        alloc: &[f64],
        r_c_min: f64,
    ) {
        if let Some(c) = &self.common {
            p.nonneg(LinExpr::var(c.rho_c));
            p.nonneg(LinExpr::var(c.rho_ec));
            p.nonneg(LinExpr::var(c.f_ec));
            p.log2_hypograph(c.w_c, LinExpr::var(c.rho_c));
            // common secrecy stays nonnegative
            p.nonneg(LinExpr::var(c.w_c).minus(&LinExpr::var(c.f_ec)));
            // tangent of the eavesdropper common rate
            let g = Exp2Bound::new(anchors.f_ec);
            p.nonneg(
                LinExpr::term(c.f_ec, g.slope)
                    .offset(g.constant - 1.0)
                    .push(c.rho_ec, -1.0),
            );
            // common-rate bracket and its eavesdropper-side tangent
            p.nonneg(LinExpr::var(c.r_c).offset(-r_c_min));
            p.nonneg(LinExpr::var(c.w_c).minus(&LinExpr::var(c.r_c)));
            let gr = Exp2Bound::new(anchors.r_c);
            p.nonneg(
                LinExpr::term(c.r_c, gr.slope)
                    .offset(gr.constant - 1.0)
                    .push(c.rho_ec, -1.0),
            );
        }
        for (k, uv) in self.users.iter().enumerate() {
            let Some(u) = uv else { continue };
            p.nonneg(LinExpr::var(u.rho_p));
            p.nonneg(LinExpr::var(u.rho_ep));
            p.nonneg(LinExpr::var(u.f_ep));
            p.log2_hypograph(u.w_p, LinExpr::var(u.rho_p));
            p.nonneg(LinExpr::var(u.w_p).minus(&LinExpr::var(u.f_ep)));
            let g = Exp2Bound::new(anchors.f_ep[k]);
            p.nonneg(
                LinExpr::term(u.f_ep, g.slope)
                    .offset(g.constant - 1.0)
                    .push(u.rho_ep, -1.0),
            );
        }
        // per-user floor on the objective variable
        for (k, uv) in self.users.iter().enumerate() {
            let mut rhs = LinExpr::default();
            if let Some(c) = &self.common {
                rhs = rhs.push(c.w_c, alloc[k]).push(c.f_ec, -alloc[k]);
            }
            if let Some(u) = uv {
                rhs = rhs.push(u.w_p, 1.0).push(u.f_ep, -1.0);
            }
            p.le(LinExpr::var(self.zeta), rhs);
        }
    }

    /// Fills the auxiliary-variable entries of an assignment with their
    /// anchor values; returns the objective value those anchors support.
    pub fn anchor_assignment(&self, x: &mut [f64], anchors: &SurrogateAnchors, alloc: &[f64]) -> f64 {
        if let Some(c) = &self.common {
            x[c.rho_c] = anchors.rho_c;
            x[c.w_c] = (1.0 + anchors.rho_c).log2();
            x[c.rho_ec] = anchors.rho_ec;
            x[c.f_ec] = anchors.f_ec;
            x[c.r_c] = anchors.r_c;
        }
        for (k, uv) in self.users.iter().enumerate() {
            if let Some(u) = uv {
                x[u.rho_p] = anchors.rho_p[k];
                x[u.w_p] = (1.0 + anchors.rho_p[k]).log2();
                x[u.rho_ep] = anchors.rho_ep[k];
                x[u.f_ep] = anchors.f_ep[k];
            }
        }
        let zeta = self.zeta_at(anchors, alloc);
        x[self.zeta] = zeta;
        zeta
    }

    /// The objective floor implied by a set of anchors.
    pub fn zeta_at(&self, anchors: &SurrogateAnchors, alloc: &[f64]) -> f64 {
        let common_rate = if self.common.is_some() {
            (1.0 + anchors.rho_c).log2() - anchors.f_ec
        } else {
            0.0
        };
        self.users
            .iter()
            .enumerate()
            .map(|(k, uv)| {
                let private = uv
                    .map(|_| (1.0 + anchors.rho_p[k]).log2() - anchors.f_ep[k])
                    .unwrap_or(0.0);
                let common = if self.common.is_some() { alloc[k] * common_rate } else { 0.0 };
                common + private
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Reads the next expansion point out of a solution vector.
    pub fn extract_anchors(&self, x: &[f64], previous: &SurrogateAnchors) -> SurrogateAnchors {
        let mut a = previous.clone();
        if let Some(c) = &self.common {
            a.rho_c = x[c.rho_c].max(SINR_FLOOR);
            a.rho_ec = x[c.rho_ec].max(SINR_FLOOR);
            a.f_ec = x[c.f_ec].max(0.0);
            a.r_c = x[c.r_c];
        }
        for (k, uv) in self.users.iter().enumerate() {
            if let Some(u) = uv {
                a.rho_p[k] = x[u.rho_p].max(SINR_FLOOR);
                a.rho_ep[k] = x[u.rho_ep].max(SINR_FLOOR);
                a.f_ep[k] = x[u.f_ep].max(0.0);
            }
        }
        a
    }
}
