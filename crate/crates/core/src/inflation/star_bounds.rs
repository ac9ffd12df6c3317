//! Bounds on the two grouped expressions of the three-star argument, over
//! the no-signaling set of parties `A¹`, `A²` (binary in/out) and `B` (one
//! input, three output bits), and the resulting bound on `S₃`.

use crate::error::Result;
use crate::lp::{self, LinearProgram, Relation};

/// `T₁ = |Σ ⟨B₁A¹A²⟩| + |Σ (−1)^{x₁+x₂} ⟨B₄A¹A²⟩|`,
/// `T₂ = |Σ (−1)^{x₁} ⟨B₂A¹A²⟩| + |Σ (−1)^{x₂} ⟨B₃A¹A²⟩|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsExpression {
    T1,
    T2,
}

impl NsExpression {
    /// `(t, x₁ sign, x₂ sign)` for the two absolute values; `t` selects the
    /// center's sign string `(1, t₁, t₂)`.
    fn parts(self) -> [(usize, usize, usize); 2] {
        match self {
            NsExpression::T1 => [(0, 0, 0), (3, 1, 1)],
            NsExpression::T2 => [(1, 1, 0), (2, 0, 1)],
        }
    }
}

/// One LP per sign combination of the two absolute values.
#[derive(Debug, Clone)]
pub struct NsProgram {
    pub expr: NsExpression,
    pub programs: Vec<([f64; 2], LinearProgram)>,
}

const NB: usize = 8;

fn var(a1: usize, a2: usize, b: usize, x1: usize, x2: usize) -> usize {
    (((x1 * 2 + x2) * 2 + a1) * 2 + a2) * NB + b
}

fn parity(v: usize) -> usize {
    (v.count_ones() & 1) as usize
}

fn sign(e: usize) -> f64 {
    if e & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Positivity, normalization and no-signaling for the 128 unknowns
/// `p(a₁,a₂,b|x₁,x₂)`; the factorization of the `A¹A²` marginal is not
/// imposed.
fn ns_polytope() -> LinearProgram {
    let mut lp = LinearProgram::new(4 * 4 * NB);
    for x1 in 0..2 {
        for x2 in 0..2 {
            let coeffs: Vec<_> = (0..4 * NB).map(|k| (var(k / (2 * NB), (k / NB) % 2, k % NB, x1, x2), 1.0)).collect();
            lp.add_row(format!("norm x1={x1} x2={x2}"), coeffs, Relation::Eq, 1.0);
        }
    }
    for x2 in 0..2 {
        for a2 in 0..2 {
            for b in 0..NB {
                let coeffs: Vec<_> = (0..2).flat_map(|a1| [(var(a1, a2, b, 0, x2), 1.0), (var(a1, a2, b, 1, x2), -1.0)]).collect();
                lp.add_row(format!("ns-A1 x2={x2} a2={a2} b={b}"), coeffs, Relation::Eq, 0.0);
            }
        }
    }
    for x1 in 0..2 {
        for a1 in 0..2 {
            for b in 0..NB {
                let coeffs: Vec<_> = (0..2).flat_map(|a2| [(var(a1, a2, b, x1, 0), 1.0), (var(a1, a2, b, x1, 1), -1.0)]).collect();
                lp.add_row(format!("ns-A2 x1={x1} a1={a1} b={b}"), coeffs, Relation::Eq, 0.0);
            }
        }
    }
    lp
}

fn objective(expr: NsExpression, signs: [f64; 2]) -> Vec<f64> {
    let mut c = vec![0.0; 4 * 4 * NB];
    for (&(t, s1, s2), sg) in expr.parts().iter().zip(signs) {
        let tilde = 0b100 | t;
        for x1 in 0..2 {
            for x2 in 0..2 {
                for a1 in 0..2 {
                    for a2 in 0..2 {
                        for b in 0..NB {
                            let e = a1 + a2 + parity(tilde & b) + s1 * x1 + s2 * x2;
                            c[var(a1, a2, b, x1, x2)] += sg * sign(e);
                        }
                    }
                }
            }
        }
    }
    c
}

pub fn ns_polytope_program(expr: NsExpression) -> NsProgram {
    let base = ns_polytope();
    let programs = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
        .into_iter()
        .map(|signs| {
            let mut lp = base.clone();
            lp.set_objective(objective(expr, signs));
            (signs, lp)
        })
        .collect();
    NsProgram { expr, programs }
}

/// Maximum of the expression over the no-signaling set.
pub fn max_ns_expression(expr: NsExpression) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for (_, lp) in &ns_polytope_program(expr).programs {
        best = best.max(lp::maximize(lp, None)?.value);
    }
    Ok(best)
}

/// `max ½ Σ|I_i|^{1/3}` subject to `Σ|I_i| ≤ 1`, on a grid of step 1/100 in
/// the first three values (the maximum lies on the simplex `Σ|I_i| = 1`).
pub fn s3_composition_bound() -> f64 {
    const N: usize = 100;
    let f = |k: usize| (k as f64 / N as f64).cbrt();
    let mut best = 0.0f64;
    for i in 0..=N {
        for j in 0..=N - i {
            for k in 0..=N - i - j {
                best = best.max(0.5 * (f(i) + f(j) + f(k) + f(N - i - j - k)));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polytope_shape() {
        let p = ns_polytope_program(NsExpression::T1);
        assert_eq!(p.programs.len(), 4);
        assert_eq!(p.programs[0].1.num_vars(), 128);
    }

    #[test]
    fn uniform_point_is_admissible() {
        let lp = ns_polytope();
        assert!(lp.max_violation(&vec![1.0 / 32.0; 128]) < 1e-15);
    }
}
