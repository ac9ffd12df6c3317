//! Simulation with a classical Bob–Charlie source `λ` (uniform over four
//! values, Charlie answers `c = m[λ][z]`) and a general no-signaling box
//! `p(a, b | x, λ)` between Alice and Bob.

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, Relation, SolveResult, Status};
use crate::quantum::ejm_correlations;
use crate::scenario::{Behavior, Scenario};
use crate::strategies::TETRA;

const NX: usize = 3;
const NA: usize = 2;
const NB: usize = 4;
const NL: usize = 4;

fn var(a: usize, b: usize, x: usize, l: usize) -> usize {
    ((a * NB + b) * NX + x) * NL + l
}

fn charlie_sign(c: usize) -> i8 {
    if c == 0 {
        1
    } else {
        -1
    }
}

/// LP over the 96 unknowns `p(a,b|x,λ)` reproducing `target` exactly.
/// Besides normalization and Bob's marginal being independent of `x`, Alice's
/// marginal is required to be independent of `λ` (she has no access to it).
pub fn build_simulation_lp(target: &Behavior) -> Result<LinearProgram> {
    if !target.scenario().same_shape(&Scenario::ejm()) {
        return Err(Error::ScenarioMismatch("simulation LP needs the three-input, four-outcome scenario".into()));
    }
    let mut lp = LinearProgram::new(NA * NB * NX * NL);
    for x in 0..NX {
        for l in 0..NL {
            let coeffs: Vec<_> = (0..NA).flat_map(|a| (0..NB).map(move |b| (var(a, b, x, l), 1.0))).collect();
            lp.add_row(format!("norm x={x} l={l}"), coeffs, Relation::Eq, 1.0);
        }
    }
    for b in 0..NB {
        for l in 0..NL {
            for x in 0..NX - 1 {
                let coeffs: Vec<_> =
                    (0..NA).flat_map(|a| [(var(a, b, x, l), 1.0), (var(a, b, x + 1, l), -1.0)]).collect();
                lp.add_row(format!("ns-B b={b} l={l} x={x}"), coeffs, Relation::Eq, 0.0);
            }
        }
    }
    for a in 0..NA {
        for x in 0..NX {
            for l in 0..NL - 1 {
                let coeffs: Vec<_> =
                    (0..NB).flat_map(|b| [(var(a, b, x, l), 1.0), (var(a, b, x, l + 1), -1.0)]).collect();
                lp.add_row(format!("ns-A a={a} x={x} l={l}"), coeffs, Relation::Eq, 0.0);
            }
        }
    }
    for x in 0..NX {
        for z in 0..NX {
            for a in 0..NA {
                for b in 0..NB {
                    for c in 0..2 {
                        let coeffs: Vec<_> = (0..NL)
                            .filter(|&l| TETRA[l][z] == charlie_sign(c))
                            .map(|l| (var(a, b, x, l), 1.0 / NL as f64))
                            .collect();
                        lp.add_row(
                            format!("match x={x} z={z} a={a} b={b} c={c}"),
                            coeffs,
                            Relation::Eq,
                            target.prob(&[x, 0, z], &[a, b, c]),
                        );
                    }
                }
            }
        }
    }
    Ok(lp)
}

pub fn simulation_feasible(theta: f64, v: f64) -> Result<SolveResult> {
    lp::solve_feasibility(&build_simulation_lp(&ejm_correlations(theta, v)?)?)
}

fn feasible_at(theta: f64, v: f64) -> Result<bool> {
    match simulation_feasible(theta, v)?.status {
        Status::Feasible(_) => Ok(true),
        Status::Infeasible(_) => Ok(false),
        Status::Ambiguous => Err(Error::Ambiguous(format!("simulation LP at theta={theta}, v={v}"))),
    }
}

/// Largest visibility at which the correlations at `theta` are simulable,
/// by bisection to width `tol`. Feasibility is first sampled at 11 equally
/// spaced visibilities and must switch from feasible to infeasible at most
/// once. Inside the bisection an ambiguous solve counts as not feasible, so
/// the result is always a visibility with a verified feasible point.
pub fn max_visibility_simulable(theta: f64, tol: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::OutOfRange(format!("theta {theta} outside [0, pi/2]")));
    }
    if !(tol > 0.0) {
        return Err(Error::OutOfRange(format!("tolerance {tol} must be positive")));
    }
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let flags = grid.iter().map(|&v| feasible_at(theta, v)).collect::<Result<Vec<_>>>()?;
    let switch = flags.iter().position(|f| !f).unwrap_or(flags.len());
    if flags[switch..].iter().any(|&f| f) {
        return Err(Error::NonMonotone(format!("theta={theta}: feasibility on v-grid {flags:?}")));
    }
    if switch == flags.len() {
        return Ok(1.0);
    }
    if switch == 0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (grid[switch - 1], grid[switch]);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let feasible = match simulation_feasible(theta, mid)?.status {
            Status::Feasible(_) => true,
            Status::Infeasible(_) | Status::Ambiguous => false,
        };
        if feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulation_lp_has_96_unknowns() {
        let lp = build_simulation_lp(&ejm_correlations(0.3, 1.0).unwrap()).unwrap();
        assert_eq!(lp.num_vars(), 96);
    }

    #[test]
    fn rejects_wrong_scenario() {
        assert!(build_simulation_lp(&Behavior::uniform(Scenario::bilocal_binary())).is_err());
        assert!(max_visibility_simulable(2.0, 1e-3).is_err());
    }
}
