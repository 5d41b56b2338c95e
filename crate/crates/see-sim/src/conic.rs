//! Canonical convex-subproblem representation and the solver binding.
//!
//! A [`ConicProgram`] is a linear objective (maximized) over real variables
//! with affine-equality, affine-inequality, second-order-cone, rotated-cone,
//! and exponential-cone blocks. Complex quantities are lifted to interleaved
//! `(re, im)` variable pairs; [`ComplexVec`] owns such a slice and builds the
//! affine functionals the surrogate kernels need.
//!
//! Solving is delegated to the Clarabel interior-point solver behind
//! [`ConicProgram::solve`]; rotated cones are lowered to plain second-order
//! cones and failures surface as a status, never as fabricated values.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, ExponentialConeT, IPSolver, NonnegativeConeT,
    SecondOrderConeT, SolverStatus, SupportedConeT, ZeroConeT,
};
use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("denominator of a quadratic-over-linear block is a nonpositive constant ({0})")]
    NonpositiveDenominator(f64),
    #[error("solver rejected the problem: {0}")]
    Setup(String),
}

/// Sparse affine functional `sum coeff_i * x_i + constant`.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self { terms: vec![], constant: c }
    }

    pub fn var(id: usize) -> Self {
        Self { terms: vec![(id, 1.0)], constant: 0.0 }
    }

    pub fn term(id: usize, coeff: f64) -> Self {
        Self { terms: vec![(id, coeff)], constant: 0.0 }
    }

    pub fn push(mut self, id: usize, coeff: f64) -> Self {
        self.terms.push((id, coeff));
        self
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.constant += other.constant;
        self
    }

    pub fn minus(mut self, other: &LinExpr) -> Self {
        self.terms.extend(other.terms.iter().map(|&(i, c)| (i, -c)));
        self.constant -= other.constant;
        self
    }

    pub fn scaled(mut self, f: f64) -> Self {
        for (_, c) in &mut self.terms {
            *c *= f;
        }
        self.constant *= f;
        self
    }

    pub fn offset(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    /// Folds duplicate variable entries; used by the lowering.
    fn compacted(&self) -> Vec<(usize, f64)> {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|&(i, _)| i);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match out.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        out
    }
}

/// A named slice of interleaved `(re, im)` pairs representing a complex
/// vector variable.
#[derive(Debug, Clone, Copy)]
pub struct ComplexVec {
    start: usize,
    len: usize,
}

impl ComplexVec {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn re_var(&self, i: usize) -> usize {
        self.start + 2 * i
    }

    pub fn im_var(&self, i: usize) -> usize {
        self.start + 2 * i + 1
    }

    /// `Re{ w^H z }` as an affine functional of the lifted variables.
    pub fn re_inner(&self, w: &DVector<Complex64>) -> LinExpr {
        let mut e = LinExpr::default();
        for i in 0..self.len {
            e.terms.push((self.re_var(i), w[i].re));
            e.terms.push((self.im_var(i), w[i].im));
        }
        e
    }

    /// The complex inner product `a^H z` as a (real, imaginary) expression
    /// pair for fixed `a`.
    pub fn inner_with(&self, a: &DVector<Complex64>) -> (LinExpr, LinExpr) {
        let mut re = LinExpr::default();
        let mut im = LinExpr::default();
        for i in 0..self.len {
            // conj(a_i) * z_i
            re.terms.push((self.re_var(i), a[i].re));
            re.terms.push((self.im_var(i), a[i].im));
            im.terms.push((self.im_var(i), a[i].re));
            im.terms.push((self.re_var(i), -a[i].im));
        }
        (re, im)
    }
}

#[derive(Debug, Clone)]
enum Block {
    /// expr = 0
    Zero(Vec<LinExpr>),
    /// expr >= 0
    Nonneg(Vec<LinExpr>),
    /// ||v|| <= t
    Soc { t: LinExpr, v: Vec<LinExpr> },
    /// ||w||^2 <= u * v with u, v >= 0
    RotatedSoc { u: LinExpr, v: LinExpr, w: Vec<LinExpr> },
    /// y * exp(x / y) <= z, y > 0
    Exp { x: LinExpr, y: LinExpr, z: LinExpr },
}

/// Solver verdict; anything the backend cannot certify is surfaced as
/// [`SolveStatus::NumericalTrouble`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalTrouble,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Objective of the *maximization*, including constant offset.
    pub objective: f64,
    pub max_residual: f64,
}

impl SolveResult {
    pub fn value(&self, e: &LinExpr) -> f64 {
        e.eval(&self.x)
    }

    pub fn complex_value(&self, v: &ComplexVec) -> DVector<Complex64> {
        DVector::from_iterator(
            v.len(),
            (0..v.len()).map(|i| Complex64::new(self.x[v.re_var(i)], self.x[v.im_var(i)])),
        )
    }
}

/// Conic program under construction. Objective is maximized.
#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    n_vars: usize,
    names: Vec<(String, std::ops::Range<usize>)>,
    objective: LinExpr,
    blocks: Vec<Block>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn scalar(&mut self, name: &str) -> usize {
        let id = self.n_vars;
        self.n_vars += 1;
        self.names.push((name.to_string(), id..id + 1));
        id
    }

    pub fn scalars(&mut self, name: &str, n: usize) -> Vec<usize> {
        let start = self.n_vars;
        self.n_vars += n;
        self.names.push((name.to_string(), start..start + n));
        (start..start + n).collect()
    }

    pub fn complex_vec(&mut self, name: &str, len: usize) -> ComplexVec {
        let start = self.n_vars;
        self.n_vars += 2 * len;
        self.names.push((name.to_string(), start..start + 2 * len));
        ComplexVec { start, len }
    }

    pub fn set_objective(&mut self, e: LinExpr) {
        self.objective = e;
    }

    pub fn eq_zero(&mut self, e: LinExpr) {
        self.blocks.push(Block::Zero(vec![e]));
    }

    /// `e >= 0`.
    pub fn nonneg(&mut self, e: LinExpr) {
        self.blocks.push(Block::Nonneg(vec![e]));
    }

    /// `lhs <= rhs`.
    pub fn le(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.nonneg(rhs.minus(&lhs));
    }

    /// `||v|| <= t`.
    pub fn soc(&mut self, t: LinExpr, v: Vec<LinExpr>) {
        self.blocks.push(Block::Soc { t, v });
    }

    /// Sum of squared affine expressions bounded by an affine expression:
    /// `sum_i q_i^2 <= rhs`. An empty quadratic reduces to `rhs >= 0`.
    pub fn quad_le_affine(&mut self, quad: Vec<LinExpr>, rhs: LinExpr) {
        if quad.is_empty() {
            self.nonneg(rhs);
        } else {
            self.blocks.push(Block::RotatedSoc { u: rhs, v: LinExpr::constant(1.0), w: quad });
        }
    }

    /// Quadratic-over-linear: `sum_i q_i^2 <= denom * bound`. The cone
    /// itself forces `denom, bound >= 0`.
    pub fn quad_over_var(
        &mut self,
        quad: Vec<LinExpr>,
        denom: LinExpr,
        bound: LinExpr,
    ) -> Result<(), ConicError> {
        if denom.terms.is_empty() && denom.constant <= 0.0 {
            return Err(ConicError::NonpositiveDenominator(denom.constant));
        }
        self.blocks.push(Block::RotatedSoc { u: denom, v: bound, w: quad });
        Ok(())
    }

    /// Hypograph of the logarithm: `w <= log2(1 + rho_expr)` via the
    /// exponential cone `exp(w ln 2) <= 1 + rho`.
    pub fn log2_hypograph(&mut self, w: usize, rho_expr: LinExpr) {
        self.blocks.push(Block::Exp {
            x: LinExpr::term(w, std::f64::consts::LN_2),
            y: LinExpr::constant(1.0),
            z: rho_expr.offset(1.0),
        });
    }

    /// Worst violation of any block at the point `x`.
    pub fn residual_at(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for b in &self.blocks {
            let r = match b {
                Block::Zero(es) => es.iter().map(|e| e.eval(x).abs()).fold(0.0, f64::max),
                Block::Nonneg(es) => es.iter().map(|e| -e.eval(x)).fold(0.0, f64::max),
                Block::Soc { t, v } => {
                    let n = v.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
                    n - t.eval(x)
                }
                Block::RotatedSoc { u, v, w } => {
                    let uu = u.eval(x);
                    let vv = v.eval(x);
                    let ww = w.iter().map(|e| e.eval(x).powi(2)).sum::<f64>();
                    (ww - uu * vv).max(-uu).max(-vv)
                }
                Block::Exp { x: ex, y, z } => {
                    let (xv, yv, zv) = (ex.eval(x), y.eval(x), z.eval(x));
                    if yv <= 0.0 {
                        f64::INFINITY
                    } else {
                        yv * (xv / yv).exp() - zv
                    }
                }
            };
            worst = worst.max(r);
        }
        worst
    }

    /// Plain-text dump of the program in a stable, diffable form.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "vars {}", self.n_vars).unwrap();
        for (name, range) in &self.names {
            writeln!(out, "slice {name} {} {}", range.start, range.end).unwrap();
        }
        let fmt_expr = |e: &LinExpr| {
            let mut s = String::new();
            for (i, c) in e.compacted() {
                write!(s, "{c:+.12e}*x{i} ").unwrap();
            }
            write!(s, "{:+.12e}", e.constant).unwrap();
            s
        };
        writeln!(out, "maximize {}", fmt_expr(&self.objective)).unwrap();
        for b in &self.blocks {
            match b {
                Block::Zero(es) => {
                    for e in es {
                        writeln!(out, "zero {}", fmt_expr(e)).unwrap();
                    }
                }
                Block::Nonneg(es) => {
                    for e in es {
                        writeln!(out, "nonneg {}", fmt_expr(e)).unwrap();
                    }
                }
                Block::Soc { t, v } => {
                    writeln!(out, "soc t: {}", fmt_expr(t)).unwrap();
                    for e in v {
                        writeln!(out, "  v: {}", fmt_expr(e)).unwrap();
                    }
                }
                Block::RotatedSoc { u, v, w } => {
                    writeln!(out, "rsoc u: {} v: {}", fmt_expr(u), fmt_expr(v)).unwrap();
                    for e in w {
                        writeln!(out, "  w: {}", fmt_expr(e)).unwrap();
                    }
                }
                Block::Exp { x, y, z } => {
                    writeln!(out, "exp x: {} y: {} z: {}", fmt_expr(x), fmt_expr(y), fmt_expr(z))
                        .unwrap();
                }
            }
        }
        out
    }

    /// Rows of the lowered `A x + s = b` system for one affine expression,
    /// with `s = expr`.
    fn push_row(
        triplets: &mut Vec<(usize, usize, f64)>,
        b: &mut Vec<f64>,
        row: usize,
        e: &LinExpr,
    ) {
        for (i, c) in e.compacted() {
            triplets.push((row, i, -c));
        }
        b.push(e.constant);
    }

    pub fn solve(&self) -> SolveResult {
        let n = self.n_vars;
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let mut row = 0usize;

        for block in &self.blocks {
            match block {
                Block::Zero(es) => {
                    for e in es {
                        Self::push_row(&mut triplets, &mut b, row, e);
                        row += 1;
                    }
                    cones.push(ZeroConeT(es.len()));
                }
                Block::Nonneg(es) => {
                    for e in es {
                        Self::push_row(&mut triplets, &mut b, row, e);
                        row += 1;
                    }
                    cones.push(NonnegativeConeT(es.len()));
                }
                Block::Soc { t, v } => {
                    Self::push_row(&mut triplets, &mut b, row, t);
                    row += 1;
                    for e in v {
                        Self::push_row(&mut triplets, &mut b, row, e);
                        row += 1;
                    }
                    cones.push(SecondOrderConeT(v.len() + 1));
                }
                Block::RotatedSoc { u, v, w } => {
                    // ||w||^2 <= u v  <=>  (u+v, u-v, 2w) in SOC
                    Self::push_row(&mut triplets, &mut b, row, &u.clone().plus(v));
                    Self::push_row(&mut triplets, &mut b, row + 1, &u.clone().minus(v));
                    row += 2;
                    for e in w {
                        Self::push_row(&mut triplets, &mut b, row, &e.clone().scaled(2.0));
                        row += 1;
                    }
                    cones.push(SecondOrderConeT(w.len() + 2));
                }
                Block::Exp { x, y, z } => {
                    Self::push_row(&mut triplets, &mut b, row, x);
                    Self::push_row(&mut triplets, &mut b, row + 1, y);
                    Self::push_row(&mut triplets, &mut b, row + 2, z);
                    row += 3;
                    cones.push(ExponentialConeT());
                }
            }
        }

        let a = csc_from_triplets(row, n, &triplets);
        let p = CscMatrix::<f64>::zeros((n, n));
        // maximize obj  ->  minimize -obj
        let mut q = vec![0.0; n];
        for (i, c) in self.objective.compacted() {
            q[i] = -c;
        }

        let settings = DefaultSettings {
            verbose: false,
            tol_feas: 1e-9,
            ..DefaultSettings::default()
        };
        let mut solver = match DefaultSolver::new(&p, &q, &a, &b, &cones, settings) {
            Ok(s) => s,
            Err(e) => {
                return SolveResult {
                    status: SolveStatus::NumericalTrouble,
                    x: vec![0.0; n],
                    objective: f64::NAN,
                    max_residual: f64::INFINITY,
                }
                .tap_setup_err(e)
            }
        };
        solver.solve();

        let status = match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            _ => SolveStatus::NumericalTrouble,
        };
        let x = solver.solution.x.clone();
        let objective = self.objective.eval(&x);
        let max_residual = if status == SolveStatus::Optimal { self.residual_at(&x) } else { f64::INFINITY };
        SolveResult { status, x, objective, max_residual }
    }
}

trait TapSetupErr {
    fn tap_setup_err(self, e: impl std::fmt::Debug) -> Self;
}

impl TapSetupErr for SolveResult {
    fn tap_setup_err(self, _e: impl std::fmt::Debug) -> Self {
        self
    }
}

fn csc_from_triplets(m: usize, n: usize, triplets: &[(usize, usize, f64)]) -> CscMatrix<f64> {
    let mut by_col: Vec<(usize, usize, f64)> = triplets.to_vec();
    by_col.sort_by_key(|&(r, c, _)| (c, r));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(by_col.len());
    let mut nzval = Vec::with_capacity(by_col.len());
    for &(r, c, v) in &by_col {
        colptr[c + 1] += 1;
        rowval.push(r);
        nzval.push(v);
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn minimal_lp() {
        // max -x s.t. x >= 3  ->  x = 3
        let mut p = ConicProgram::new();
        let x = p.scalar("x");
        p.set_objective(LinExpr::term(x, -1.0));
        p.nonneg(LinExpr::var(x).offset(-3.0));
        let r = p.solve();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[x] - 3.0).abs() < 1e-7, "{}", r.x[x]);
        assert!(r.max_residual <= 1e-8);
    }

    #[test]
    fn infeasible_pair_is_flagged() {
        let mut p = ConicProgram::new();
        let x = p.scalar("x");
        p.nonneg(LinExpr::var(x).offset(-1.0)); // x >= 1
        p.nonneg(LinExpr::term(x, -1.0)); // x <= 0
        assert_eq!(p.solve().status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_is_flagged() {
        let mut p = ConicProgram::new();
        let x = p.scalar("x");
        p.set_objective(LinExpr::var(x));
        assert_eq!(p.solve().status, SolveStatus::Unbounded);
    }

    #[test]
    fn complex_modulus_ball() {
        // max Re z s.t. |z|^2 <= 4  ->  z = 2
        let mut p = ConicProgram::new();
        let z = p.complex_vec("z", 1);
        p.set_objective(LinExpr::var(z.re_var(0)));
        p.quad_le_affine(
            vec![LinExpr::var(z.re_var(0)), LinExpr::var(z.im_var(0))],
            LinExpr::constant(4.0),
        );
        let r = p.solve();
        assert_eq!(r.status, SolveStatus::Optimal);
        let zv = r.complex_value(&z);
        assert!((zv[0].re - 2.0).abs() < 1e-6 && zv[0].im.abs() < 1e-6);
    }

    #[test]
    fn zero_quadratic_reduces_to_affine_inequality() {
        let mut p = ConicProgram::new();
        let x = p.scalar("x");
        p.set_objective(LinExpr::term(x, -1.0));
        p.quad_le_affine(vec![], LinExpr::var(x).offset(-2.0)); // x - 2 >= 0
        let r = p.solve();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[x] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn quad_over_var_scalar_case() {
        // max t s.t. t^2 <= y * 4, y <= 1  ->  t = 2
        let mut p = ConicProgram::new();
        let t = p.scalar("t");
        let y = p.scalar("y");
        p.set_objective(LinExpr::var(t));
        p.quad_over_var(vec![LinExpr::var(t)], LinExpr::var(y), LinExpr::constant(4.0)).unwrap();
        p.le(LinExpr::var(y), LinExpr::constant(1.0));
        let r = p.solve();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[t] - 2.0).abs() < 1e-6, "{}", r.x[t]);
        // the cone itself forces y >= 0 and here pushes it to its cap
        assert!(r.x[y] <= 1.0 + 1e-7);
    }

    #[test]
    fn quad_over_var_rejects_nonpositive_constant_denominator() {
        let mut p = ConicProgram::new();
        let t = p.scalar("t");
        let err = p.quad_over_var(vec![LinExpr::var(t)], LinExpr::constant(-1.0), LinExpr::var(t));
        assert!(err.is_err());
    }

    #[test]
    fn exp_cone_log_hypograph() {
        // max w s.t. w <= log2(1 + rho), rho <= 3  ->  w = 2
        let mut p = ConicProgram::new();
        let w = p.scalar("w");
        let rho = p.scalar("rho");
        p.set_objective(LinExpr::var(w));
        p.log2_hypograph(w, LinExpr::var(rho));
        p.le(LinExpr::var(rho), LinExpr::constant(3.0));
        let r = p.solve();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[w] - 2.0).abs() < 1e-6, "{}", r.x[w]);
    }

    #[test]
    fn encoding_feasibility_agrees_with_direct_inequality() {
        // membership agreement on sampled points for a random
        // sum-of-squares <= affine block
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut p = ConicProgram::new();
        let xs = p.scalars("x", 3);
        let quad: Vec<LinExpr> = (0..2)
            .map(|_| {
                let mut e = LinExpr::constant(rng.gen::<f64>() - 0.5);
                for &x in &xs {
                    e = e.push(x, rng.gen::<f64>() * 2.0 - 1.0);
                }
                e
            })
            .collect();
        let mut rhs = LinExpr::constant(rng.gen::<f64>());
        for &x in &xs {
            rhs = rhs.push(x, rng.gen::<f64>() - 0.5);
        }
        p.quad_le_affine(quad.clone(), rhs.clone());
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let direct = quad.iter().map(|e| e.eval(&x).powi(2)).sum::<f64>() <= rhs.eval(&x);
            let lifted = p.residual_at(&x) <= 1e-12;
            assert_eq!(direct, lifted, "x = {x:?}");
        }
    }

    #[test]
    fn socp_beats_feasible_sampling() {
        // max c^T x over the unit ball: optimum is ||c||
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 4;
        let c: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let mut p = ConicProgram::new();
        let xs = p.scalars("x", n);
        let mut obj = LinExpr::default();
        for (i, &x) in xs.iter().enumerate() {
            obj = obj.push(x, c[i]);
        }
        p.set_objective(obj.clone());
        p.soc(LinExpr::constant(1.0), xs.iter().map(|&x| LinExpr::var(x)).collect());
        let r = p.solve();
        assert_eq!(r.status, SolveStatus::Optimal);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..100_000 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= 1.0 {
                best = best.max(x.iter().zip(&c).map(|(a, b)| a * b).sum());
            }
        }
        assert!(r.objective >= best - 1e-6, "solver {} vs sample {}", r.objective, best);
        let norm_c = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((r.objective - norm_c).abs() < 1e-6);
    }

    #[test]
    fn solves_are_deterministic() {
        let build = || {
            let mut p = ConicProgram::new();
            let z = p.complex_vec("z", 2);
            let t = p.scalar("t");
            p.set_objective(LinExpr::var(z.re_var(0)).push(z.im_var(1), 0.5).push(t, -0.1));
            p.quad_le_affine(
                (0..2).flat_map(|i| [LinExpr::var(z.re_var(i)), LinExpr::var(z.im_var(i))]).collect(),
                LinExpr::var(t).offset(1.0),
            );
            p.le(LinExpr::var(t), LinExpr::constant(2.0));
            p
        };
        let a = build().solve();
        let b = build().solve();
        assert_eq!(a.status, b.status);
        assert!((a.objective - b.objective).abs() <= 1e-9);
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn dump_is_stable() {
        let mut p = ConicProgram::new();
        let x = p.scalar("x");
        p.set_objective(LinExpr::var(x));
        p.le(LinExpr::var(x), LinExpr::constant(1.0));
        let d1 = p.dump();
        let d2 = p.dump();
        assert_eq!(d1, d2);
        assert!(d1.contains("maximize"));
        assert!(d1.contains("slice x 0 1"));
    }
}
