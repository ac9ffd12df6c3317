//! Row and column reductions applied before the simplex.
//!
//! * `x_u − x_v = 0` rows (nonnegative `x_u`, `x_v`) merge the two variables.
//! * Rows left empty are dropped, or prove infeasibility on their own.
//! * Exact duplicate rows are dropped, and so are equality rows that are a
//!   consistent linear combination of earlier ones.
//!
//! Dual information on the reduced problem is lifted back so that the
//! resulting certificate refers to every row of the original program.

use std::collections::{BTreeMap, HashMap};

use super::{FarkasCertificate, LinearProgram, Relation};

#[derive(Debug, Clone)]
pub(crate) struct ReducedRow {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    /// Index of the row in the original program.
    pub orig: usize,
}

#[derive(Debug, Clone, Copy)]
struct MergeEdge {
    row: usize,
    u: usize,
    v: usize,
    cu: f64,
    cv: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub num_vars: usize,
    /// Original variable → reduced variable.
    pub col_of: Vec<usize>,
    pub lower: Vec<f64>,
    pub rows: Vec<ReducedRow>,
    pub objective: Option<Vec<f64>>,
    /// Reduced variable → its union-find root among the original variables.
    root_of: Vec<usize>,
    edges: Vec<MergeEdge>,
}

pub(crate) enum Presolved {
    Reduced(Reduced),
    /// A single reduced row is inconsistent on its own: `(row, multiplier)`.
    Trivial(Reduced, usize, f64),
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

pub(crate) fn presolve(lp: &LinearProgram, objective: Option<&[f64]>) -> Presolved {
    let n = lp.num_vars();
    let lower = lp.lower_bounds();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut edges = Vec::new();
    let mut is_merge = vec![false; lp.rows().len()];

    for (i, r) in lp.rows().iter().enumerate() {
        if r.relation != Relation::Eq || r.rhs != 0.0 || r.coeffs.len() != 2 {
            continue;
        }
        let (u, cu) = r.coeffs[0];
        let (v, cv) = r.coeffs[1];
        if cu != -cv || lower[u] != 0.0 || lower[v] != 0.0 {
            continue;
        }
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            continue;
        }
        parent[rv] = ru;
        edges.push(MergeEdge { row: i, u, v, cu, cv });
        is_merge[i] = true;
    }

    let mut col_of = vec![usize::MAX; n];
    let mut root_of = Vec::new();
    for j in 0..n {
        let r = find(&mut parent, j);
        if col_of[r] == usize::MAX {
            col_of[r] = root_of.len();
            root_of.push(r);
        }
        col_of[j] = col_of[r];
    }
    let num_vars = root_of.len();
    let red_lower: Vec<f64> = root_of.iter().map(|&r| lower[r]).collect();
    let red_objective = objective.map(|c| {
        let mut out = vec![0.0; num_vars];
        for (j, &cj) in c.iter().enumerate() {
            out[col_of[j]] += cj;
        }
        out
    });

    let mut rows = Vec::new();
    let mut seen: HashMap<(Relation, u64, Vec<(usize, u64)>), usize> = HashMap::new();
    let mut trivial = None;
    for (i, r) in lp.rows().iter().enumerate() {
        if is_merge[i] {
            continue;
        }
        let row_max = r.coeffs.iter().fold(0.0_f64, |m, &(_, a)| m.max(a.abs()));
        let mut acc: Vec<(usize, f64)> = r.coeffs.iter().map(|&(j, a)| (col_of[j], a)).collect();
        acc.sort_by_key(|&(j, _)| j);
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(acc.len());
        for (j, a) in acc {
            match coeffs.last_mut() {
                Some((k, b)) if *k == j => *b += a,
                _ => coeffs.push((j, a)),
            }
        }
        coeffs.retain(|&(_, a)| a.abs() > 1e-15 * row_max);

        if coeffs.is_empty() {
            let bad = match r.relation {
                Relation::Eq => r.rhs.abs() > 1e-12,
                Relation::Le => r.rhs < -1e-12,
                Relation::Ge => r.rhs > 1e-12,
            };
            if bad && trivial.is_none() {
                let mult = match r.relation {
                    Relation::Eq => r.rhs.signum(),
                    Relation::Le => -1.0,
                    Relation::Ge => 1.0,
                };
                trivial = Some((i, mult));
            }
            continue;
        }
        let key = (
            r.relation,
            r.rhs.to_bits(),
            coeffs.iter().map(|&(j, a)| (j, a.to_bits())).collect::<Vec<_>>(),
        );
        if seen.contains_key(&key) {
            continue;
        }
        seen.insert(key, i);
        rows.push(ReducedRow { coeffs, relation: r.relation, rhs: r.rhs, orig: i });
    }

    drop_dependent_rows(&mut rows);

    let reduced = Reduced {
        num_vars,
        col_of,
        lower: red_lower,
        rows,
        objective: red_objective,
        root_of,
        edges,
    };
    match trivial {
        Some((row, mult)) => Presolved::Trivial(reduced, row, mult),
        None => Presolved::Reduced(reduced),
    }
}

/// Entries below this (relative to the row) count as zero during elimination.
const ELIM_TOL: f64 = 1e-10;

/// Sparse row echelon elimination over the equality rows, in order. A row
/// that reduces to zero is dropped when its right-hand side reduces to zero
/// as well; an inconsistent one is kept so that the simplex reports it.
fn drop_dependent_rows(rows: &mut Vec<ReducedRow>) {
    // pivot column -> (row entries with the pivot scaled to 1, rhs)
    let mut echelon: HashMap<usize, (Vec<(usize, f64)>, f64)> = HashMap::new();
    let mut keep = vec![true; rows.len()];
    for (i, r) in rows.iter().enumerate() {
        if r.relation != Relation::Eq {
            continue;
        }
        let scale = r.coeffs.iter().fold(0.0_f64, |m, &(_, a)| m.max(a.abs()));
        let mut v: BTreeMap<usize, f64> = r.coeffs.iter().map(|&(j, a)| (j, a / scale)).collect();
        let mut rhs = r.rhs / scale;
        let pivot = loop {
            let Some((&c, &val)) = v.iter().next() else { break None };
            if val.abs() <= ELIM_TOL {
                v.remove(&c);
                continue;
            }
            let Some((brow, brhs)) = echelon.get(&c) else { break Some(c) };
            for &(j, a) in brow {
                *v.entry(j).or_insert(0.0) -= val * a;
            }
            rhs -= val * brhs;
            v.remove(&c);
        };
        match pivot {
            Some(c) => {
                let p = v[&c];
                let entries = v.iter().filter(|(_, a)| a.abs() > ELIM_TOL).map(|(&j, &a)| (j, a / p)).collect();
                echelon.insert(c, (entries, rhs / p));
            }
            None => keep[i] = rhs.abs() > ELIM_TOL,
        }
    }
    let mut k = keep.iter();
    rows.retain(|_| *k.next().unwrap());
}

impl Reduced {
    pub fn lift_solution(&self, x: &[f64]) -> Vec<f64> {
        self.col_of.iter().map(|&c| x[c]).collect()
    }

    /// Builds a certificate on the original program from multipliers `u` on
    /// original rows that are already set for every non-merge row. Merge-row
    /// multipliers are chosen so that every non-root variable of a merged
    /// component has a zero column sum; bound multipliers absorb the rest.
    pub fn lift_certificate(&self, lp: &LinearProgram, mut u: Vec<f64>) -> FarkasCertificate {
        let n = lp.num_vars();
        let mut g = vec![0.0; n];
        for (ui, r) in u.iter().zip(lp.rows()) {
            if *ui != 0.0 {
                for &(j, a) in &r.coeffs {
                    g[j] += ui * a;
                }
            }
        }

        if !self.edges.is_empty() {
            let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
            for (e, edge) in self.edges.iter().enumerate() {
                adj.entry(edge.u).or_default().push(e);
                adj.entry(edge.v).or_default().push(e);
            }
            let coef = |e: &MergeEdge, w: usize| if e.u == w { e.cu } else { e.cv };
            let other = |e: &MergeEdge, w: usize| if e.u == w { e.v } else { e.u };
            for &root in &self.root_of {
                if !adj.contains_key(&root) {
                    continue;
                }
                // breadth-first order with parent edges
                let mut order = vec![(root, usize::MAX)];
                let mut head = 0;
                while head < order.len() {
                    let (w, pe) = order[head];
                    head += 1;
                    for &e in &adj[&w] {
                        if e != pe {
                            order.push((other(&self.edges[e], w), e));
                        }
                    }
                }
                for &(w, pe) in order.iter().rev() {
                    if pe == usize::MAX {
                        continue;
                    }
                    let edge = &self.edges[pe];
                    let mult = -g[w] / coef(edge, w);
                    u[edge.row] = mult;
                    g[w] += mult * coef(edge, w);
                    let parent = other(edge, w);
                    g[parent] += mult * coef(edge, parent);
                }
            }
        }

        for (ui, r) in u.iter_mut().zip(lp.rows()) {
            let wrong = match r.relation {
                Relation::Ge => *ui < 0.0,
                Relation::Le => *ui > 0.0,
                Relation::Eq => false,
            };
            if wrong {
                *ui = 0.0;
            }
        }
        // recompute column sums after sign cleanup
        let mut g = vec![0.0; n];
        for (ui, r) in u.iter().zip(lp.rows()) {
            if *ui != 0.0 {
                for &(j, a) in &r.coeffs {
                    g[j] += ui * a;
                }
            }
        }
        let bound_multipliers = g
            .iter()
            .zip(lp.lower_bounds())
            .map(|(gj, l)| if l.is_finite() { (-gj).max(0.0) } else { 0.0 })
            .collect();
        FarkasCertificate { row_multipliers: u, bound_multipliers }
    }
}
