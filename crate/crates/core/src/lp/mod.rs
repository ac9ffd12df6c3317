//! Linear feasibility and optimization with Farkas infeasibility certificates.
//!
//! Problems are stated as rows `Σ_j a_ij x_j (≤ | = | ≥) b_i` over variables
//! with lower bounds (default 0, `-inf` for free variables). The embedded
//! solver is a dense two-phase simplex; when phase 1 ends with positive
//! artificial mass, the phase-1 duals are lifted to a certificate
//!
//! ```text
//! u_i ≥ 0 on ≥ rows,  u_i ≤ 0 on ≤ rows,  u_i free on = rows,
//! z_j ≥ 0 on the bound rows x_j ≥ l_j,
//! Aᵀu + z = 0,   uᵀb + zᵀl > 0
//! ```
//!
//! which is checked by [`verify_certificate`] before any caller sees it.
//!
//! # Text dump
//!
//! [`LinearProgram::to_text`] writes a line-oriented format for cross-checking
//! with external solvers:
//!
//! ```text
//! fullnn-lp 1
//! vars <n>
//! lower <j> <value>          # only for bounds other than 0; -inf for free
//! objective <c_0> ... <c_n-1> # optional, maximized
//! row <label> <le|eq|ge> <rhs> <j>:<a_ij> <j>:<a_ij> ...
//! ```
//!
//! Floats are written at 17 significant digits.

mod presolve;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::format_f64_17;

/// Feasibility tolerance on scaled row residuals.
pub const TOL_FEAS: f64 = 1e-8;
/// Relative tolerance on `‖Aᵀy‖∞` accepted by [`verify_certificate`].
pub const TOL_CERT: f64 = 1e-7;
/// Relative margin required on `yᵀb` by [`verify_certificate`].
pub const TOL_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn as_str(self) -> &'static str {
        match self {
            Relation::Le => "le",
            Relation::Eq => "eq",
            Relation::Ge => "ge",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: String,
    /// Sparse coefficients, one entry per variable, sorted by variable.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    rows: Vec<Row>,
    objective: Option<Vec<f64>>,
    lower_bounds: Vec<f64>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            rows: Vec::new(),
            objective: None,
            lower_bounds: vec![0.0; num_vars],
        }
    }

    /// Appends a row and returns its index. Repeated variables are summed and
    /// exact zeros dropped.
    pub fn add_row(
        &mut self,
        label: impl Into<String>,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let mut c: Vec<(usize, f64)> = coeffs.into_iter().collect();
        c.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(c.len());
        for (j, a) in c {
            match merged.last_mut() {
                Some((k, b)) if *k == j => *b += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Row { label: label.into(), coeffs: merged, relation, rhs });
        self.rows.len() - 1
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        self.objective = Some(objective);
    }

    pub fn set_lower_bound(&mut self, var: usize, bound: f64) {
        self.lower_bounds[var] = bound;
    }

    pub fn set_rhs(&mut self, row: usize, rhs: f64) {
        self.rows[row].rhs = rhs;
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> Option<&[f64]> {
        self.objective.as_deref()
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower_bounds
    }

    pub fn find_row(&self, label: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.label == label)
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(Error::MalformedLp(format!("row {} has non-finite rhs", r.label)));
            }
            for &(j, a) in &r.coeffs {
                if j >= self.num_vars {
                    return Err(Error::MalformedLp(format!(
                        "row {} references variable {} of {}",
                        r.label, j, self.num_vars
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::MalformedLp(format!("row {} has a non-finite coefficient", r.label)));
                }
            }
        }
        if let Some(c) = &self.objective {
            if c.len() != self.num_vars || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::MalformedLp("objective length or values invalid".into()));
            }
        }
        if self.lower_bounds.iter().any(|&l| l.is_nan() || l == f64::INFINITY) {
            return Err(Error::MalformedLp("invalid lower bound".into()));
        }
        Ok(())
    }

    pub fn activity(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest constraint violation, each row divided by `max(1, ‖a_i‖∞)`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, r) in self.rows.iter().enumerate() {
            let act = self.activity(i, x);
            let v = match r.relation {
                Relation::Le => act - r.rhs,
                Relation::Ge => r.rhs - act,
                Relation::Eq => (act - r.rhs).abs(),
            };
            let scale = r.coeffs.iter().fold(1.0_f64, |m, &(_, a)| m.max(a.abs()));
            worst = worst.max(v / scale);
        }
        for (j, &l) in self.lower_bounds.iter().enumerate() {
            if l.is_finite() {
                worst = worst.max(l - x[j]);
            }
        }
        worst
    }

    /// Copy with every row (coefficients and rhs) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> LinearProgram {
        let mut lp = self.clone();
        for r in &mut lp.rows {
            r.coeffs.iter_mut().for_each(|(_, a)| *a *= factor);
            r.rhs *= factor;
            if factor < 0.0 {
                r.relation = match r.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        lp
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("fullnn-lp 1\n");
        out.push_str(&format!("vars {}\n", self.num_vars));
        for (j, &l) in self.lower_bounds.iter().enumerate() {
            if l == f64::NEG_INFINITY {
                out.push_str(&format!("lower {j} -inf\n"));
            } else if l != 0.0 {
                out.push_str(&format!("lower {j} {}\n", format_f64_17(l)));
            }
        }
        if let Some(c) = &self.objective {
            out.push_str("objective");
            for v in c {
                out.push(' ');
                out.push_str(&format_f64_17(*v));
            }
            out.push('\n');
        }
        for r in &self.rows {
            out.push_str(&format!(
                "row {} {} {}",
                r.label,
                r.relation.as_str(),
                format_f64_17(r.rhs)
            ));
            for &(j, a) in &r.coeffs {
                out.push_str(&format!(" {}:{}", j, format_f64_17(a)));
            }
            out.push('\n');
        }
        out
    }
}

/// Dual vector proving infeasibility: one multiplier per row and one per
/// variable lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    pub row_multipliers: Vec<f64>,
    pub bound_multipliers: Vec<f64>,
}

impl FarkasCertificate {
    /// `uᵀb + zᵀl` (finite bounds only).
    pub fn value(&self, lp: &LinearProgram) -> f64 {
        let rows: f64 = self
            .row_multipliers
            .iter()
            .zip(lp.rows())
            .map(|(u, r)| u * r.rhs)
            .sum();
        let bounds: f64 = self
            .bound_multipliers
            .iter()
            .zip(lp.lower_bounds())
            .filter(|(_, l)| l.is_finite())
            .map(|(z, l)| z * l)
            .sum();
        rows + bounds
    }

    /// `Aᵀu + z`, one entry per variable.
    pub fn residual(&self, lp: &LinearProgram) -> Vec<f64> {
        let mut g = self.bound_multipliers.clone();
        for (u, r) in self.row_multipliers.iter().zip(lp.rows()) {
            if *u != 0.0 {
                for &(j, a) in &r.coeffs {
                    g[j] += u * a;
                }
            }
        }
        g
    }

    fn norms(&self) -> (f64, f64) {
        let all = self.row_multipliers.iter().chain(&self.bound_multipliers);
        all.fold((0.0_f64, 0.0_f64), |(inf, one), v| (inf.max(v.abs()), one + v.abs()))
    }
}

/// Checks signs, `‖Aᵀu + z‖∞ ≤ TOL_CERT·‖y‖∞·max|A|` and
/// `uᵀb + zᵀl ≥ TOL_MARGIN·‖y‖₁·max|b|` with a strictly positive left side.
pub fn verify_certificate(lp: &LinearProgram, cert: &FarkasCertificate) -> bool {
    if cert.row_multipliers.len() != lp.rows().len() || cert.bound_multipliers.len() != lp.num_vars() {
        return false;
    }
    if cert.row_multipliers.iter().chain(&cert.bound_multipliers).any(|v| !v.is_finite()) {
        return false;
    }
    for (u, r) in cert.row_multipliers.iter().zip(lp.rows()) {
        let ok = match r.relation {
            Relation::Ge => *u >= 0.0,
            Relation::Le => *u <= 0.0,
            Relation::Eq => true,
        };
        if !ok {
            return false;
        }
    }
    let mut max_a: f64 = 0.0;
    let mut max_b: f64 = 0.0;
    for (z, &l) in cert.bound_multipliers.iter().zip(lp.lower_bounds()) {
        if l.is_finite() {
            if *z < 0.0 {
                return false;
            }
            max_a = max_a.max(1.0);
            max_b = max_b.max(l.abs());
        } else if *z != 0.0 {
            return false;
        }
    }
    for r in lp.rows() {
        max_b = max_b.max(r.rhs.abs());
        for &(_, a) in &r.coeffs {
            max_a = max_a.max(a.abs());
        }
    }
    let (y_inf, y_one) = cert.norms();
    if y_inf == 0.0 {
        return false;
    }
    let res = cert.residual(lp).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if res > TOL_CERT * y_inf * max_a {
        return false;
    }
    let value = cert.value(lp);
    value > 0.0 && value >= TOL_MARGIN * y_one * max_b
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Feasible(Vec<f64>),
    Infeasible(FarkasCertificate),
    /// Neither a point within [`TOL_FEAS`] nor a verified certificate.
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    pub iterations: usize,
    /// Scaled max violation of the best primal point found.
    pub residual: f64,
    /// Phase-1 artificial mass at termination.
    pub infeasibility: f64,
}

impl SolveResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, Status::Feasible(_))
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self.status, Status::Infeasible(_))
    }

    pub fn certificate(&self) -> Option<&FarkasCertificate> {
        match &self.status {
            Status::Infeasible(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub value: f64,
    pub solution: Vec<f64>,
}

/// Back end for feasibility and optimization. [`DenseSimplex`] is the
/// reference implementation.
pub trait LpSolver {
    fn solve_feasibility(&self, lp: &LinearProgram) -> Result<SolveResult>;
    fn maximize(&self, lp: &LinearProgram, objective: &[f64]) -> Result<Optimum>;
}

/// Dense two-phase tableau simplex. Devex pricing with a Harris ratio test,
/// switching to Bland's rule after a run of degenerate pivots.
#[derive(Debug, Clone)]
pub struct DenseSimplex {
    /// Consecutive degenerate pivots tolerated before switching to Bland.
    pub degenerate_limit: usize,
    /// Hard iteration cap; `None` means `50·(rows + columns)`.
    pub max_iterations: Option<usize>,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex { degenerate_limit: 50, max_iterations: None }
    }
}

impl LpSolver for DenseSimplex {
    fn solve_feasibility(&self, lp: &LinearProgram) -> Result<SolveResult> {
        lp.validate()?;
        simplex::feasibility(self, lp)
    }

    fn maximize(&self, lp: &LinearProgram, objective: &[f64]) -> Result<Optimum> {
        lp.validate()?;
        if objective.len() != lp.num_vars() {
            return Err(Error::MalformedLp("objective length differs from variable count".into()));
        }
        simplex::maximize(self, lp, objective)
    }
}

pub fn solve_feasibility(lp: &LinearProgram) -> Result<SolveResult> {
    DenseSimplex::default().solve_feasibility(lp)
}

/// Maximizes `objective · x`; falls back to the LP's stored objective when
/// `objective` is `None`.
pub fn maximize(lp: &LinearProgram, objective: Option<&[f64]>) -> Result<Optimum> {
    let c = match objective.or(lp.objective()) {
        Some(c) => c.to_vec(),
        None => return Err(Error::MalformedLp("no objective given".into())),
    };
    DenseSimplex::default().maximize(lp, &c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(lo: f64, hi: f64) -> LinearProgram {
        let mut lp = LinearProgram::new(1);
        lp.add_row("lo", [(0, 1.0)], Relation::Ge, lo);
        lp.add_row("hi", [(0, 1.0)], Relation::Le, hi);
        lp
    }

    #[test]
    fn unit_interval_is_feasible() {
        let res = solve_feasibility(&interval(0.0, 1.0)).unwrap();
        assert!(res.is_feasible());
        assert!(res.residual <= TOL_FEAS);
    }

    #[test]
    fn empty_interval_gives_certificate() {
        let lp = interval(1.0, 0.0);
        let res = solve_feasibility(&lp).unwrap();
        let cert = res.certificate().expect("infeasible");
        assert!(verify_certificate(&lp, cert));
        // ratios of the two row multipliers: y = (1, 1) on (x ≥ 1, −x ≥ 0)
        let u = &cert.row_multipliers;
        assert!(u[0] > 0.0 && u[1] < 0.0);
        assert!((u[0] + u[1]).abs() < 1e-12 * u[0].abs() + cert.bound_multipliers[0]);
    }

    #[test]
    fn textbook_certificate_verifies() {
        // rows: x ≥ 1, −x ≥ 0
        let mut lp = LinearProgram::new(1);
        lp.add_row("a", [(0, 1.0)], Relation::Ge, 1.0);
        lp.add_row("b", [(0, -1.0)], Relation::Ge, 0.0);
        let cert = FarkasCertificate { row_multipliers: vec![1.0, 1.0], bound_multipliers: vec![0.0] };
        assert!(verify_certificate(&lp, &cert));
        let zero = FarkasCertificate { row_multipliers: vec![0.0, 0.0], bound_multipliers: vec![0.0] };
        assert!(!verify_certificate(&lp, &zero));
        let wrong_sign = FarkasCertificate { row_multipliers: vec![-1.0, -1.0], bound_multipliers: vec![0.0] };
        assert!(!verify_certificate(&lp, &wrong_sign));
    }

    #[test]
    fn maximize_on_interval() {
        let lp = interval(0.0, 1.0);
        let opt = maximize(&lp, Some(&[1.0])).unwrap();
        assert!((opt.value - 1.0).abs() < 1e-12);
        assert!(lp.max_violation(&opt.solution) <= TOL_FEAS);
    }

    #[test]
    fn maximize_reports_unbounded_and_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.add_row("lo", [(0, 1.0)], Relation::Ge, 0.0);
        assert!(matches!(maximize(&lp, Some(&[1.0])), Err(Error::Unbounded)));
        assert!(matches!(maximize(&interval(1.0, 0.0), Some(&[1.0])), Err(Error::Infeasible)));
    }

    #[test]
    fn free_and_shifted_variables() {
        // x free, y ≥ 2: maximize −x − y s.t. x + y ≥ 1, x ≥ −3 as a row
        let mut lp = LinearProgram::new(2);
        lp.set_lower_bound(0, f64::NEG_INFINITY);
        lp.set_lower_bound(1, 2.0);
        lp.add_row("sum", [(0, 1.0), (1, 1.0)], Relation::Ge, 1.0);
        lp.add_row("xlo", [(0, 1.0)], Relation::Ge, -3.0);
        let opt = maximize(&lp, Some(&[-1.0, -1.0])).unwrap();
        assert!((opt.value + 1.0).abs() < 1e-9, "{}", opt.value);
        // infeasible with a bound: y ≥ 2 and y ≤ 1
        lp.add_row("yhi", [(1, 1.0)], Relation::Le, 1.0);
        let res = solve_feasibility(&lp).unwrap();
        let cert = res.certificate().expect("infeasible");
        assert!(verify_certificate(&lp, cert));
        assert!(cert.bound_multipliers[1] > 0.0);
    }

    #[test]
    fn merged_variables_lift_certificates() {
        // x0 = x1 (merge), x1 = x2 (merge), x0 + x2 = 1, x0 ≥ 0.6 → infeasible
        let mut lp = LinearProgram::new(3);
        lp.add_row("m01", [(0, 1.0), (1, -1.0)], Relation::Eq, 0.0);
        lp.add_row("m12", [(1, 1.0), (2, -1.0)], Relation::Eq, 0.0);
        lp.add_row("sum", [(0, 1.0), (2, 1.0)], Relation::Eq, 1.0);
        lp.add_row("lo", [(0, 1.0)], Relation::Ge, 0.6);
        let res = solve_feasibility(&lp).unwrap();
        let cert = res.certificate().expect("infeasible");
        assert!(verify_certificate(&lp, cert));

        let mut ok = lp.clone();
        ok.set_rhs(3, 0.4);
        let res = solve_feasibility(&ok).unwrap();
        match res.status {
            Status::Feasible(x) => {
                assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12 && (x[2] - 0.5).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_duplicate_rows() {
        let mut lp = LinearProgram::new(2);
        lp.add_row("r1", [(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_row("r2", [(0, 1.0), (1, 1.0)], Relation::Eq, 2.0);
        let res = solve_feasibility(&lp).unwrap();
        assert!(verify_certificate(&lp, res.certificate().unwrap()));
    }

    #[test]
    fn text_dump_lists_rows() {
        let lp = interval(0.0, 1.0);
        let text = lp.to_text();
        assert!(text.starts_with("fullnn-lp 1\nvars 1\n"));
        assert!(text.contains("row hi le 1.0000000000000000e0 0:1.0000000000000000e0"));
    }

    #[test]
    fn malformed_lp_is_rejected() {
        let mut lp = LinearProgram::new(1);
        lp.add_row("bad", [(3, 1.0)], Relation::Eq, 1.0);
        assert!(matches!(solve_feasibility(&lp), Err(Error::MalformedLp(_))));
    }
}
