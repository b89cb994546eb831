//! Solver-agnostic conic modelling layer.
//!
//! A [`ConicProgram`] is a maximisation of an affine objective over affine
//! equalities, affine inequalities (`expr ≥ 0`) and second-order cones, the
//! latter either plain (`‖z‖ ≤ t`) or rotated (`‖z‖² ≤ 2xy`, `x, y ≥ 0`).
//! Complex beamformer entries are stored as adjacent `(re, im)` real pairs.
//!
//! Each variable may carry a *hint* value. Encoders derive hints for the
//! auxiliary variables they introduce, which lets callers evaluate the
//! program at a known point (for instance the current SCA iterate) without
//! reconstructing the auxiliaries by hand.

pub mod ipm;
pub mod soc;

use std::fmt::Write as _;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::Complex64;

pub use ipm::{IpmStatus, Settings as IpmSettings};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn var(i: usize) -> Self {
        AffExpr { terms: vec![(i, 1.0)], constant: 0.0 }
    }

    pub fn term(i: usize, c: f64) -> Self {
        AffExpr { terms: vec![(i, c)], constant: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        AffExpr { terms: Vec::new(), constant: c }
    }

    pub fn add_term(&mut self, i: usize, c: f64) {
        if c != 0.0 {
            self.terms.push((i, c));
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    /// Terms merged by index and sorted, zero coefficients dropped.
    pub fn canonical(&self) -> Vec<(usize, f64)> {
        let mut t = self.terms.clone();
        t.sort_by_key(|&(i, _)| i);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
        for (i, c) in t {
            match out.last_mut() {
                Some((j, d)) if *j == i => *d += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        out
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }
}

impl From<f64> for AffExpr {
    fn from(c: f64) -> Self {
        AffExpr::constant(c)
    }
}

impl Add for AffExpr {
    type Output = AffExpr;
    fn add(mut self, rhs: AffExpr) -> AffExpr {
        self += rhs;
        self
    }
}

impl AddAssign for AffExpr {
    fn add_assign(&mut self, rhs: AffExpr) {
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
    }
}

impl Sub for AffExpr {
    type Output = AffExpr;
    fn sub(self, rhs: AffExpr) -> AffExpr {
        self + (-rhs)
    }
}

impl Neg for AffExpr {
    type Output = AffExpr;
    fn neg(self) -> AffExpr {
        self * -1.0
    }
}

impl Mul<f64> for AffExpr {
    type Output = AffExpr;
    fn mul(mut self, c: f64) -> AffExpr {
        for t in &mut self.terms {
            t.1 *= c;
        }
        self.constant *= c;
        self
    }
}

/// A complex-valued form `Σ c_j x_j + c₀` over *real* variables `x_j` with
/// complex coefficients. A complex variable stored at `(re, re + 1)` is the
/// form `x_re + i·x_{re+1}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexAffExpr {
    pub terms: Vec<(usize, Complex64)>,
    pub constant: Complex64,
}

impl ComplexAffExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        ComplexAffExpr { terms: Vec::new(), constant: c }
    }

    /// The complex variable whose real part is stored at `re`.
    pub fn complex_var(re: usize) -> Self {
        ComplexAffExpr {
            terms: vec![(re, Complex64::new(1.0, 0.0)), (re + 1, Complex64::new(0.0, 1.0))],
            constant: Complex64::new(0.0, 0.0),
        }
    }

    /// Adds `c · z` where `z` is the complex variable stored at `re`.
    pub fn add_complex_var(&mut self, re: usize, c: Complex64) {
        self.terms.push((re, c));
        self.terms.push((re + 1, c * Complex64::new(0.0, 1.0)));
    }

    pub fn conj(&self) -> Self {
        ComplexAffExpr {
            terms: self.terms.iter().map(|&(i, c)| (i, c.conj())).collect(),
            constant: self.constant.conj(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        ComplexAffExpr {
            terms: self.terms.iter().map(|&(i, d)| (i, d * c)).collect(),
            constant: self.constant * c,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<Complex64>() + self.constant
    }
}

impl Add for ComplexAffExpr {
    type Output = ComplexAffExpr;
    fn add(mut self, rhs: ComplexAffExpr) -> ComplexAffExpr {
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
        self
    }
}

/// Real and imaginary parts of a complex form as two real affine rows.
pub fn lift_complex(form: &ComplexAffExpr) -> Result<(AffExpr, AffExpr)> {
    let finite = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
    if !form.terms.iter().all(|(_, c)| finite(c)) || !finite(&form.constant) {
        return Err(Error::Program("complex form has non-finite coefficients".into()));
    }
    let mut re = AffExpr::constant(form.constant.re);
    let mut im = AffExpr::constant(form.constant.im);
    for &(i, c) in &form.terms {
        re.add_term(i, c.re);
        im.add_term(i, c.im);
    }
    Ok((re, im))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    /// `‖tail‖ ≤ head`.
    SecondOrder { head: AffExpr, tail: Vec<AffExpr> },
    /// `‖tail‖² ≤ 2xy` with `x, y ≥ 0`.
    Rotated { x: AffExpr, y: AffExpr, tail: Vec<AffExpr> },
}

impl Cone {
    /// Rows of the equivalent plain second-order cone, head first.
    fn rows(&self) -> Vec<AffExpr> {
        match self {
            Cone::SecondOrder { head, tail } => {
                let mut r = vec![head.clone()];
                r.extend(tail.iter().cloned());
                r
            }
            Cone::Rotated { x, y, tail } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let mut r = vec![(x.clone() + y.clone()) * s, (x.clone() - y.clone()) * s];
                r.extend(tail.iter().cloned());
                r
            }
        }
    }

    /// `‖tail‖ − head` of the equivalent plain cone; nonpositive when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let r = self.rows();
        let head = r[0].eval(x);
        let tail: f64 = r[1..].iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
        tail - head
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarBlock {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    n_vars: usize,
    blocks: Vec<VarBlock>,
    objective: AffExpr,
    equalities: Vec<AffExpr>,
    inequalities: Vec<AffExpr>,
    cones: Vec<Cone>,
    hint: Vec<f64>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn add_vars(&mut self, name: &str, len: usize) -> usize {
        let start = self.n_vars;
        self.blocks.push(VarBlock { name: name.to_string(), start, len });
        self.n_vars += len;
        self.hint.resize(self.n_vars, f64::NAN);
        start
    }

    pub fn add_var(&mut self, name: &str) -> usize {
        self.add_vars(name, 1)
    }

    pub fn add_var_hinted(&mut self, name: &str, hint: f64) -> usize {
        let i = self.add_var(name);
        self.hint[i] = hint;
        i
    }

    pub fn set_hint(&mut self, i: usize, v: f64) {
        self.hint[i] = v;
    }

    pub fn hint(&self) -> &[f64] {
        &self.hint
    }

    pub fn hint_of(&self, e: &AffExpr) -> f64 {
        e.eval(&self.hint)
    }

    pub fn var_blocks(&self) -> &[VarBlock] {
        &self.blocks
    }

    pub fn lookup(&self, name: &str) -> Option<&VarBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn maximize(&mut self, objective: AffExpr) {
        self.objective = objective;
    }

    pub fn objective(&self) -> &AffExpr {
        &self.objective
    }

    pub fn equalities(&self) -> &[AffExpr] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[AffExpr] {
        &self.inequalities
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    /// `expr = 0`.
    pub fn add_eq(&mut self, expr: AffExpr) {
        self.equalities.push(expr);
    }

    /// `expr ≥ 0`.
    pub fn add_ge(&mut self, expr: AffExpr) {
        self.inequalities.push(expr);
    }

    /// `lhs ≤ rhs`.
    pub fn add_le(&mut self, lhs: AffExpr, rhs: AffExpr) {
        self.inequalities.push(rhs - lhs);
    }

    pub fn add_soc(&mut self, head: AffExpr, tail: Vec<AffExpr>) {
        self.cones.push(Cone::SecondOrder { head, tail });
    }

    pub fn add_rsoc(&mut self, x: AffExpr, y: AffExpr, tail: Vec<AffExpr>) {
        self.cones.push(Cone::Rotated { x, y, tail });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Largest violation over all rows and cones at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self.equalities.iter().map(|e| e.eval(x).abs());
        let ge = self.inequalities.iter().map(|e| (-e.eval(x)).max(0.0));
        let cones = self.cones.iter().map(|c| c.violation(x).max(0.0));
        eq.chain(ge).chain(cones).fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_vars;
        let check = |e: &AffExpr, what: &str| -> Result<()> {
            if !e.constant.is_finite() {
                return Err(Error::Program(format!("{what}: non-finite constant")));
            }
            for &(i, c) in &e.terms {
                if i >= n {
                    return Err(Error::Program(format!("{what}: variable {i} out of range (n = {n})")));
                }
                if !c.is_finite() {
                    return Err(Error::Program(format!("{what}: non-finite coefficient on x{i}")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for e in &self.equalities {
            check(e, "equality")?;
        }
        for e in &self.inequalities {
            check(e, "inequality")?;
        }
        for c in &self.cones {
            for e in c.rows() {
                check(&e, "cone")?;
            }
        }
        Ok(())
    }

    fn standard_form(&self) -> ipm::StandardForm {
        let n = self.n_vars;
        let mut c = vec![0.0; n];
        for (i, v) in self.objective.canonical() {
            c[i] -= v;
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        for e in &self.equalities {
            let t = e.canonical();
            a.push(ipm::SparseRow { idx: t.iter().map(|p| p.0).collect(), val: t.iter().map(|p| p.1).collect() });
            b.push(-e.constant);
        }
        let mut blocks = Vec::new();
        let mut push_block = |rows: Vec<AffExpr>| {
            let canon: Vec<Vec<(usize, f64)>> = rows.iter().map(|r| r.canonical()).collect();
            let mut cols: Vec<usize> = canon.iter().flatten().map(|p| p.0).collect();
            cols.sort_unstable();
            cols.dedup();
            let nc = cols.len();
            let mut g = vec![0.0; rows.len() * nc];
            for (r, terms) in canon.iter().enumerate() {
                for &(i, v) in terms {
                    let j = cols.binary_search(&i).unwrap();
                    g[r * nc + j] = -v;
                }
            }
            let h = rows.iter().map(|r| r.constant).collect();
            blocks.push(ipm::Block { dim: rows.len(), cols, g, h });
        };
        for e in &self.inequalities {
            push_block(vec![e.clone()]);
        }
        for cone in &self.cones {
            push_block(cone.rows());
        }
        ipm::StandardForm { n, c, a, b, blocks }
    }

    /// Plain-text listing with a stable layout, for debugging and golden tests.
    pub fn dump(&self) -> String {
        fn expr(e: &AffExpr) -> String {
            let mut s = String::new();
            for (i, c) in e.canonical() {
                let _ = write!(s, "{c:+.6e}*x{i} ");
            }
            let _ = write!(s, "{:+.6e}", e.constant);
            s
        }
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.n_vars);
        for b in &self.blocks {
            let _ = writeln!(out, "  {} [{}..{})", b.name, b.start, b.start + b.len);
        }
        let _ = writeln!(out, "maximize {}", expr(&self.objective));
        for (k, e) in self.equalities.iter().enumerate() {
            let _ = writeln!(out, "eq {k}: {} = 0", expr(e));
        }
        for (k, e) in self.inequalities.iter().enumerate() {
            let _ = writeln!(out, "ge {k}: {} >= 0", expr(e));
        }
        for (k, c) in self.cones.iter().enumerate() {
            match c {
                Cone::SecondOrder { head, tail } => {
                    let _ = writeln!(out, "soc {k}: head {}", expr(head));
                    for t in tail {
                        let _ = writeln!(out, "    | {}", expr(t));
                    }
                }
                Cone::Rotated { x, y, tail } => {
                    let _ = writeln!(out, "rsoc {k}: x {} ; y {}", expr(x), expr(y));
                    for t in tail {
                        let _ = writeln!(out, "    | {}", expr(t));
                    }
                }
            }
        }
        out
    }
}

// Encoders. Each returns the auxiliary variable it introduces, if any, and
// sets that variable's hint to its tightest value when the inputs are hinted.

/// `u · x ≥ c` for a constant `c > 0` (and `u, x ≥ 0`).
pub fn encode_inverse(prog: &mut ConicProgram, u: AffExpr, x: AffExpr, c: f64) {
    prog.add_rsoc(u, x, vec![AffExpr::constant((2.0 * c).sqrt())]);
}

/// `h · L ≥ c`: with `h` entering an objective negatively this makes
/// `h = c / L` at the optimum.
pub fn encode_hypograph_inverse(prog: &mut ConicProgram, h: AffExpr, l: AffExpr, c: f64) {
    encode_inverse(prog, h, l, c);
}

/// `u ≥ 1/√β`, through `v² ≤ β` and `u · v ≥ 1`. Returns `v`.
pub fn encode_inv_sqrt(prog: &mut ConicProgram, u: AffExpr, beta: AffExpr) -> usize {
    let hint = prog.hint_of(&beta).sqrt();
    let v = prog.add_var_hinted("inv_sqrt_aux", hint);
    prog.add_rsoc(beta * 0.5, AffExpr::constant(1.0), vec![AffExpr::var(v)]);
    encode_inverse(prog, u, AffExpr::var(v), 1.0);
    v
}

/// `t ≥ ‖z‖² / x` with `x ≥ 0`.
pub fn encode_quad_over_lin(prog: &mut ConicProgram, t: AffExpr, z: Vec<AffExpr>, x: AffExpr) {
    prog.add_rsoc(t * 0.5, x, z);
}

/// `t ≥ ‖z‖² / √(xy)`, through `g² ≤ xy` and `‖z‖² ≤ t g`. Returns `g`.
/// Any feasible `g` satisfies `g ≤ √(xy)`, and the bound on `t` only
/// weakens as `g` shrinks, so the projection onto `(t, z, x, y)` is exact.
pub fn encode_quad_over_geomean(
    prog: &mut ConicProgram,
    t: AffExpr,
    z: Vec<AffExpr>,
    x: AffExpr,
    y: AffExpr,
) -> usize {
    let hint = (prog.hint_of(&x) * prog.hint_of(&y)).sqrt();
    let g = prog.add_var_hinted("geomean_aux", hint);
    prog.add_rsoc(x * 0.5, y, vec![AffExpr::var(g)]);
    prog.add_rsoc(t * 0.5, AffExpr::var(g), z);
    g
}

/// `1/τ ≤ √t₁` and `1/(1 − τ) ≤ t₂`, via `q τ ≥ 1`, `q² ≤ t₁` and
/// `t₂ (1 − τ) ≥ 1`. Together they imply `1/√t₁ + 1/t₂ ≤ 1`. Returns `q`.
pub fn encode_tau_couplings(prog: &mut ConicProgram, tau: AffExpr, t1: AffExpr, t2: AffExpr) -> usize {
    let hint = 1.0 / prog.hint_of(&tau);
    let q = prog.add_var_hinted("tau_inverse", hint);
    encode_inverse(prog, AffExpr::var(q), tau.clone(), 1.0);
    prog.add_rsoc(t1 * 0.5, AffExpr::constant(1.0), vec![AffExpr::var(q)]);
    encode_inverse(prog, t2, AffExpr::constant(1.0) - tau, 1.0);
    q
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { feas_tol: 1e-8, gap_tol: 1e-7, max_iter: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// The solver stalled short of the requested tolerances but within
    /// `1e-6` on residuals and gap.
    ReducedAccuracy,
    Infeasible,
    Unbounded,
    NumericalFailure,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl SolveOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn is_solved(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::ReducedAccuracy)
    }
}

/// Solves `prog` with the built-in interior-point method. Errors only for
/// malformed programs; solver outcomes are reported through the status.
pub fn solve(prog: &ConicProgram, settings: &SolverSettings) -> Result<SolveOutcome> {
    prog.validate()?;
    let form = prog.standard_form();
    let st = IpmSettings {
        feas_tol: settings.feas_tol,
        gap_tol: settings.gap_tol,
        max_iter: settings.max_iter,
        ..IpmSettings::default()
    };
    let r = ipm::solve(&form, &st);
    let status = match r.status {
        IpmStatus::Optimal => SolveStatus::Optimal,
        IpmStatus::ReducedAccuracy => SolveStatus::ReducedAccuracy,
        IpmStatus::PrimalInfeasible => SolveStatus::Infeasible,
        IpmStatus::DualInfeasible => SolveStatus::Unbounded,
        IpmStatus::NumericalFailure => SolveStatus::NumericalFailure,
        IpmStatus::IterationLimit => SolveStatus::IterationLimit,
    };
    let objective = match status {
        SolveStatus::Optimal | SolveStatus::ReducedAccuracy => prog.objective_value(&r.x),
        SolveStatus::Infeasible => f64::NEG_INFINITY,
        SolveStatus::Unbounded => f64::INFINITY,
        _ => f64::NAN,
    };
    Ok(SolveOutcome {
        status,
        x: r.x,
        objective,
        primal_residual: r.pres,
        dual_residual: r.dres,
        gap: r.gap,
        iterations: r.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn lift_examples() {
        let (re, im) = lift_complex(&ComplexAffExpr::constant(Complex64::new(0.0, 1.0))).unwrap();
        assert_eq!((re.constant, im.constant), (0.0, 1.0));
        let z = ComplexAffExpr::complex_var(0).scale(Complex64::new(2.0, -1.0));
        let (_, im1) = lift_complex(&z).unwrap();
        let (_, im2) = lift_complex(&z.conj()).unwrap();
        let x = [0.3, -0.8];
        assert!((im1.eval(&x) + im2.eval(&x)).abs() < 1e-15);
        let bad = ComplexAffExpr::constant(Complex64::new(f64::NAN, 0.0));
        assert!(lift_complex(&bad).is_err());
    }

    #[test]
    fn maximize_bounded_variable() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x");
        p.add_le(AffExpr::var(x), AffExpr::constant(1.0));
        p.maximize(AffExpr::var(x));
        let out = solve(&p, &settings()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x");
        p.add_le(AffExpr::var(x), AffExpr::constant(0.0));
        p.add_ge(AffExpr::var(x) - AffExpr::constant(1.0));
        p.maximize(AffExpr::var(x));
        assert_eq!(solve(&p, &settings()).unwrap().status, SolveStatus::Infeasible);

        let mut p = ConicProgram::new();
        let x = p.add_var("x");
        p.add_ge(AffExpr::var(x));
        p.maximize(AffExpr::var(x));
        assert_eq!(solve(&p, &settings()).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn rotated_cone_min_norm() {
        // minimise x + y subject to x y ≥ 2 (so x = y = √2, value 2√2)
        let mut p = ConicProgram::new();
        let x = p.add_var("x");
        let y = p.add_var("y");
        encode_inverse(&mut p, AffExpr::var(x), AffExpr::var(y), 2.0);
        p.maximize(-(AffExpr::var(x) + AffExpr::var(y)));
        let out = solve(&p, &settings()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective + 2.0 * 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn equality_constrained_socp() {
        // minimise t subject to ‖(x1, x2)‖ ≤ t, x1 + x2 = 2 (optimum √2)
        let mut p = ConicProgram::new();
        let t = p.add_var("t");
        let x = p.add_vars("x", 2);
        p.add_soc(AffExpr::var(t), vec![AffExpr::var(x), AffExpr::var(x + 1)]);
        p.add_eq(AffExpr::var(x) + AffExpr::var(x + 1) - AffExpr::constant(2.0));
        p.maximize(-AffExpr::var(t));
        let out = solve(&p, &settings()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective + 2f64.sqrt()).abs() < 1e-7);
        assert!((out.x[x] - 1.0).abs() < 1e-6);
    }

    fn minimise_u(beta: f64) -> f64 {
        let mut p = ConicProgram::new();
        let u = p.add_var("u");
        encode_inv_sqrt(&mut p, AffExpr::var(u), AffExpr::constant(beta));
        p.maximize(-AffExpr::var(u));
        let out = solve(&p, &settings()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        out.x[u]
    }

    #[test]
    fn inv_sqrt_examples() {
        assert!((minimise_u(4.0) - 0.5).abs() < 1e-7);
        assert!((minimise_u(1.0) - 1.0).abs() < 1e-7);
        assert!((minimise_u(0.37) - 1.0 / 0.37f64.sqrt()).abs() < 1e-7);
    }

    fn minimise_t(z: f64, x: f64, y: f64) -> f64 {
        let mut p = ConicProgram::new();
        let t = p.add_var("t");
        encode_quad_over_geomean(
            &mut p,
            AffExpr::var(t),
            vec![AffExpr::constant(z)],
            AffExpr::constant(x),
            AffExpr::constant(y),
        );
        p.maximize(-AffExpr::var(t));
        let out = solve(&p, &settings()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        out.x[t]
    }

    #[test]
    fn quad_over_geomean_examples() {
        assert!((minimise_t(2.0, 1.0, 1.0) - 4.0).abs() < 1e-6);
        assert!((minimise_t(2.0, 4.0, 1.0) - 2.0).abs() < 1e-6);
        assert!(minimise_t(0.0, 1.0, 1.0).abs() < 1e-6);
    }

    #[test]
    fn hypograph_examples() {
        for (l, c, want) in [(1.0, 1.0, 1.0), (2.0, 1.0, 0.5)] {
            let mut p = ConicProgram::new();
            let h = p.add_var("h");
            encode_hypograph_inverse(&mut p, AffExpr::var(h), AffExpr::constant(l), c);
            p.maximize(-AffExpr::var(h));
            let out = solve(&p, &settings()).unwrap();
            assert!((out.x[h] - want).abs() < 1e-7);
        }
    }

    #[test]
    fn tau_coupling_examples() {
        for (tau, t1_min, t2_min) in [(0.5, 4.0, 2.0), (0.25, 16.0, 4.0 / 3.0)] {
            let mut p = ConicProgram::new();
            let t1 = p.add_var("t1");
            let t2 = p.add_var("t2");
            encode_tau_couplings(&mut p, AffExpr::constant(tau), AffExpr::var(t1), AffExpr::var(t2));
            p.maximize(-(AffExpr::var(t1) + AffExpr::var(t2)));
            let out = solve(&p, &settings()).unwrap();
            assert_eq!(out.status, SolveStatus::Optimal);
            assert!((out.x[t1] - t1_min).abs() < 1e-6 * t1_min);
            assert!((out.x[t2] - t2_min).abs() < 1e-6 * t2_min);
            assert!(1.0 / out.x[t1].sqrt() + 1.0 / out.x[t2] <= 1.0 + 1e-7);
        }
    }

    #[test]
    fn hints_flow_through_encoders() {
        let mut p = ConicProgram::new();
        let t = p.add_var_hinted("t", 2.0);
        let g = encode_quad_over_geomean(
            &mut p,
            AffExpr::var(t),
            vec![AffExpr::constant(2.0)],
            AffExpr::constant(4.0),
            AffExpr::constant(1.0),
        );
        assert_eq!(p.hint()[g], 2.0);
        assert!(p.max_violation(p.hint()) < 1e-12);
    }

    #[test]
    fn malformed_program_is_rejected() {
        let mut p = ConicProgram::new();
        p.add_var("x");
        p.add_ge(AffExpr::var(3));
        assert!(solve(&p, &settings()).is_err());
    }

    #[test]
    fn dump_is_stable() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x");
        let y = p.add_var("y");
        encode_inverse(&mut p, AffExpr::var(y), AffExpr::var(x), 0.5);
        p.add_le(AffExpr::var(x), AffExpr::constant(1.0));
        p.maximize(AffExpr::var(x) * 2.0 - AffExpr::var(y));
        let text = p.dump();
        assert_eq!(text, p.clone().dump());
        let expected = "vars 2\n  x [0..1)\n  y [1..2)\n\
maximize +2.000000e0*x0 -1.000000e0*x1 +0.000000e0\n\
ge 0: -1.000000e0*x0 +1.000000e0 >= 0\n\
rsoc 0: x +1.000000e0*x1 +0.000000e0 ; y +1.000000e0*x0 +0.000000e0\n    | +1.000000e0\n";
        assert_eq!(text, expected);
    }
}
