//! Dense two-phase tableau simplex on the presolved program.

use super::presolve::{presolve, Presolved, Reduced};
use super::{
    verify_certificate, DenseSimplex, FarkasCertificate, LinearProgram, Optimum, Relation, SolveResult, Status,
    TOL_FEAS,
};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-7;
const HARRIS_TOL: f64 = 1e-9;
/// Devex weights are reset to 1 once one exceeds this.
const DEVEX_RESET: f64 = 1e6;
const COST_TOL: f64 = 1e-10;
const DROP_TOL: f64 = 1e-14;

/// How a reduced variable is represented by tableau columns.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    Shifted(usize, f64),
    Split(usize, usize),
}

struct Tableau {
    m: usize,
    ncols: usize,
    width: usize,
    a: Vec<f64>,
    /// Reduced costs; the last entry holds minus the objective value.
    d: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
    artificial: Vec<bool>,
    /// Column that was the unit vector of each row at the start.
    id_col: Vec<usize>,
    /// Row scale and sign applied when building the row.
    row_scale: Vec<f64>,
    vars: Vec<ColMap>,
    num_struct: usize,
    iterations: usize,
    /// Devex reference weights.
    weights: Vec<f64>,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn build(red: &Reduced) -> Tableau {
        let mut vars = Vec::with_capacity(red.num_vars);
        let mut next = 0;
        for &l in &red.lower {
            if l.is_finite() {
                vars.push(ColMap::Shifted(next, l));
                next += 1;
            } else {
                vars.push(ColMap::Split(next, next + 1));
                next += 2;
            }
        }
        let num_struct = next;
        let m = red.rows.len();
        let num_slack = red.rows.iter().filter(|r| r.relation != Relation::Eq).count();

        // Decide row signs first so artificial columns can be counted.
        let mut prepared = Vec::with_capacity(m);
        let mut num_art = 0;
        for r in &red.rows {
            let mut rhs = r.rhs;
            for &(k, a) in &r.coeffs {
                if let ColMap::Shifted(_, l) = vars[k] {
                    rhs -= a * l;
                }
            }
            let s = 1.0 / r.coeffs.iter().fold(0.0_f64, |mx, &(_, a)| mx.max(a.abs()));
            let sigma = if rhs < 0.0 { -1.0 } else { 1.0 };
            let slack = match r.relation {
                Relation::Le => Some(sigma),
                Relation::Ge => Some(-sigma),
                Relation::Eq => None,
            };
            let needs_art = slack != Some(1.0);
            if needs_art {
                num_art += 1;
            }
            prepared.push((rhs * s * sigma, s * sigma, slack, needs_art));
        }

        let ncols = num_struct + num_slack + num_art;
        let width = ncols + 1;
        let mut a = vec![0.0; m * width];
        let mut artificial = vec![false; ncols];
        let mut basis = vec![0; m];
        let mut id_col = vec![0; m];
        let mut row_scale = vec![0.0; m];
        let mut d = vec![0.0; width];
        let mut slack_col = num_struct;
        let mut art_col = num_struct + num_slack;
        for (i, (r, &(rhs, scale, slack, needs_art))) in red.rows.iter().zip(&prepared).enumerate() {
            let row = &mut a[i * width..(i + 1) * width];
            for &(k, v) in &r.coeffs {
                match vars[k] {
                    ColMap::Shifted(c, _) => row[c] += v * scale,
                    ColMap::Split(p, q) => {
                        row[p] += v * scale;
                        row[q] -= v * scale;
                    }
                }
            }
            if let Some(sv) = slack {
                row[slack_col] = sv;
                if !needs_art {
                    basis[i] = slack_col;
                }
                slack_col += 1;
            }
            if needs_art {
                row[art_col] = 1.0;
                artificial[art_col] = true;
                basis[i] = art_col;
                art_col += 1;
            }
            row[ncols] = rhs;
            id_col[i] = basis[i];
            row_scale[i] = scale;
            if needs_art {
                for (dj, &v) in d.iter_mut().zip(row.iter()) {
                    *dj -= v;
                }
            }
        }
        for j in 0..ncols {
            if artificial[j] {
                d[j] = 0.0;
            }
        }

        Tableau {
            m,
            ncols,
            width,
            a,
            d,
            basis,
            active: vec![true; m],
            artificial,
            id_col,
            row_scale,
            vars,
            num_struct,
            iterations: 0,
            weights: vec![1.0; ncols],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.ncols)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let p = self.a[r * w + q];
        let mut nz = Vec::new();
        let mut vals = Vec::new();
        {
            let row = &mut self.a[r * w..(r + 1) * w];
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v /= p;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        nz.push(j);
                        vals.push(*v);
                    }
                }
            }
            row[q] = 1.0;
        }
        for i in 0..self.m {
            if i == r || !self.active[i] {
                continue;
            }
            let f = self.a[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * w..(i + 1) * w];
            for (&j, &v) in nz.iter().zip(&vals) {
                row[j] -= f * v;
            }
            row[q] = 0.0;
        }
        let wq = self.weights[q];
        let mut reset = false;
        for (&j, &v) in nz.iter().zip(&vals) {
            let w = v * v * wq;
            if j < self.ncols && w > self.weights[j] {
                self.weights[j] = w;
                reset |= w > DEVEX_RESET;
            }
        }
        if reset {
            self.weights.iter_mut().for_each(|w| *w = 1.0);
        }
        let f = self.d[q];
        if f != 0.0 {
            for (&j, &v) in nz.iter().zip(&vals) {
                self.d[j] -= f * v;
            }
            self.d[q] = 0.0;
        }
        self.basis[r] = q;
        self.iterations += 1;
    }

    /// Artificial columns never enter; once one leaves the basis it stays out.
    fn run(&mut self, opts: &DenseSimplex, limit: usize) -> Outcome {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= limit {
                return Outcome::IterationLimit;
            }
            let bland = degenerate >= opts.degenerate_limit;
            let mut q = usize::MAX;
            let mut best = 0.0;
            for j in 0..self.ncols {
                let dj = self.d[j];
                if dj >= -COST_TOL || self.artificial[j] {
                    continue;
                }
                if bland {
                    q = j;
                    break;
                }
                let score = dj * dj / self.weights[j];
                if score > best {
                    q = j;
                    best = score;
                }
            }
            if q == usize::MAX {
                return Outcome::Optimal;
            }

            // Harris ratio test: bound the step with slightly relaxed rows,
            // then take the largest pivot among rows within that bound.
            let mut bound = f64::INFINITY;
            for i in 0..self.m {
                let aiq = self.at(i, q);
                if self.active[i] && aiq > PIVOT_TOL {
                    bound = bound.min((self.rhs(i).max(0.0) + HARRIS_TOL) / aiq);
                }
            }
            let mut r = usize::MAX;
            let mut ratio = f64::INFINITY;
            let mut piv = 0.0;
            for i in 0..self.m {
                let aiq = self.at(i, q);
                if !self.active[i] || aiq <= PIVOT_TOL {
                    continue;
                }
                let t = self.rhs(i).max(0.0) / aiq;
                if t > bound {
                    continue;
                }
                let better = r == usize::MAX
                    || if bland { self.basis[i] < self.basis[r] } else { aiq > piv };
                if better {
                    r = i;
                    ratio = t;
                    piv = aiq;
                }
            }
            if r == usize::MAX {
                return Outcome::Unbounded;
            }
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, q);
        }
    }

    fn objective_value(&self) -> f64 {
        -self.d[self.ncols]
    }

    fn reduced_point(&self, red: &Reduced) -> Vec<f64> {
        let mut col = vec![0.0; self.num_struct];
        for i in 0..self.m {
            let b = self.basis[i];
            if self.active[i] && b < self.num_struct {
                col[b] = self.rhs(i).max(0.0);
            }
        }
        (0..red.num_vars)
            .map(|k| match self.vars[k] {
                ColMap::Shifted(c, l) => l + col[c],
                ColMap::Split(p, q) => col[p] - col[q],
            })
            .collect()
    }

    /// Phase-1 duals mapped onto original rows.
    fn phase1_multipliers(&self, red: &Reduced, n_rows: usize) -> Vec<f64> {
        let mut u = vec![0.0; n_rows];
        for i in 0..self.m {
            let c = self.id_col[i];
            let cost = if self.artificial[c] { 1.0 } else { 0.0 };
            let y = cost - self.d[c];
            u[red.rows[i].orig] = y * self.row_scale[i];
        }
        u
    }

    /// Pivots basic artificials out after a successful phase 1. Rows whose
    /// artificial cannot leave are redundant and get deactivated.
    fn drive_out_artificials(&mut self) {
        for i in 0..self.m {
            if !self.artificial[self.basis[i]] {
                continue;
            }
            let mut best = usize::MAX;
            let mut mag = PIVOT_TOL;
            for j in 0..self.ncols {
                if self.artificial[j] {
                    continue;
                }
                let v = self.at(i, j).abs();
                if v > mag {
                    mag = v;
                    best = j;
                }
            }
            if best == usize::MAX {
                self.active[i] = false;
            } else {
                self.pivot(i, best);
            }
        }
    }

    fn set_cost(&mut self, cost: &[f64]) {
        self.d.iter_mut().for_each(|v| *v = 0.0);
        self.d[..cost.len()].copy_from_slice(cost);
        for i in 0..self.m {
            if !self.active[i] {
                continue;
            }
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * self.width..(i + 1) * self.width];
            for (dj, &v) in self.d.iter_mut().zip(row) {
                *dj -= cb * v;
            }
        }
        for i in 0..self.m {
            if self.active[i] {
                self.d[self.basis[i]] = 0.0;
            }
        }
    }
}

fn iteration_limit(opts: &DenseSimplex, red: &Reduced) -> usize {
    opts.max_iterations.unwrap_or(50 * (red.rows.len() + red.num_vars + 1))
}

fn trivial_certificate(lp: &LinearProgram, red: &Reduced, row: usize, mult: f64) -> FarkasCertificate {
    let mut u = vec![0.0; lp.rows().len()];
    u[row] = mult;
    red.lift_certificate(lp, u)
}

pub(crate) fn feasibility(opts: &DenseSimplex, lp: &LinearProgram) -> Result<SolveResult> {
    let red = match presolve(lp, None) {
        Presolved::Trivial(red, row, mult) => {
            let cert = trivial_certificate(lp, &red, row, mult);
            let status = if verify_certificate(lp, &cert) { Status::Infeasible(cert) } else { Status::Ambiguous };
            return Ok(SolveResult { status, iterations: 0, residual: f64::INFINITY, infeasibility: f64::INFINITY });
        }
        Presolved::Reduced(red) => red,
    };
    let mut tab = Tableau::build(&red);
    let limit = iteration_limit(opts, &red);
    tab.run(opts, limit);
    let x = red.lift_solution(&tab.reduced_point(&red));
    let residual = lp.max_violation(&x);
    let infeasibility = tab.objective_value();
    let status = if residual <= TOL_FEAS {
        Status::Feasible(x)
    } else {
        let cert = red.lift_certificate(lp, tab.phase1_multipliers(&red, lp.rows().len()));
        if verify_certificate(lp, &cert) {
            Status::Infeasible(cert)
        } else {
            Status::Ambiguous
        }
    };
    Ok(SolveResult { status, iterations: tab.iterations, residual, infeasibility })
}

pub(crate) fn maximize(opts: &DenseSimplex, lp: &LinearProgram, objective: &[f64]) -> Result<Optimum> {
    let red = match presolve(lp, Some(objective)) {
        Presolved::Trivial(..) => return Err(Error::Infeasible),
        Presolved::Reduced(red) => red,
    };
    let mut tab = Tableau::build(&red);
    let limit = iteration_limit(opts, &red);
    if let Outcome::IterationLimit = tab.run(opts, limit) {
        return Err(Error::Ambiguous("iteration limit in phase 1".into()));
    }
    let x = red.lift_solution(&tab.reduced_point(&red));
    if lp.max_violation(&x) > TOL_FEAS {
        return Err(Error::Infeasible);
    }
    tab.drive_out_artificials();

    let red_obj = red.objective.as_ref().expect("objective passed to presolve");
    let mut cost = vec![0.0; tab.num_struct];
    for (k, &c) in red_obj.iter().enumerate() {
        match tab.vars[k] {
            ColMap::Shifted(col, _) => cost[col] = -c,
            ColMap::Split(p, q) => {
                cost[p] = -c;
                cost[q] = c;
            }
        }
    }
    tab.set_cost(&cost);
    match tab.run(opts, limit + tab.iterations) {
        Outcome::Optimal => {}
        Outcome::Unbounded => return Err(Error::Unbounded),
        Outcome::IterationLimit => return Err(Error::Ambiguous("iteration limit in phase 2".into())),
    }
    let x = red.lift_solution(&tab.reduced_point(&red));
    let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(Optimum { value, solution: x })
}
