//! Explicit hybrid models: PR-box constructions for bilocal and star
//! networks, the two-bit tetrahedron strategy and the two exact simulations
//! of the joint-measurement correlations.
//!
//! Bob's four outcomes in the bilocal scenario are the bit pairs `(b0, b1)`
//! with index `2·b0 + b1`. The star center's outcome bits `(b1, …, bn)` are
//! written most significant first.

use crate::error::{Error, Result};
use crate::scenario::{Behavior, Scenario};

/// Rows of the tetrahedron sign matrix; row `λ` gives Bob's triple bits and
/// Charlie's deterministic answers in the simulations.
pub const TETRA: [[i8; 3]; 4] = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]];

/// `p(o1, o2 | i1, i2) = 1/2` if `o1 ⊕ o2 = i1·i2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PRBox;

impl PRBox {
    pub fn prob(&self, o1: usize, o2: usize, i1: usize, i2: usize) -> f64 {
        if (o1 ^ o2) == (i1 & i2) {
            0.5
        } else {
            0.0
        }
    }

    /// The box as a two-party behavior.
    pub fn behavior(&self) -> Behavior {
        let parties = vec![
            crate::scenario::Party { name: "A".into(), inputs: 2, outputs: 2 },
            crate::scenario::Party { name: "B".into(), inputs: 2, outputs: 2 },
        ];
        let sources = vec![crate::scenario::Source {
            parties: vec![0, 1],
            nature: crate::scenario::SourceNature::NoSignaling,
        }];
        let sc = Scenario::new(parties, sources).expect("two-party scenario");
        Behavior::from_fn(sc, |x, o| self.prob(o[0], o[1], x[0], x[1])).expect("PR box is normalized")
    }
}

/// A distribution over a finite local-variable alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStrategy {
    weights: Vec<f64>,
}

impl LocalStrategy {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::OutOfRange("local-variable weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange(format!("local-variable weights sum to {total}")));
        }
        Ok(LocalStrategy { weights })
    }

    pub fn uniform(size: usize) -> Self {
        LocalStrategy { weights: vec![1.0 / size as f64; size] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `p(outputs | inputs) = Σ_λ q(λ) · response(λ, inputs, outputs)`.
    pub fn behavior<F>(&self, scenario: Scenario, response: F) -> Result<Behavior>
    where
        F: Fn(usize, &[usize], &[usize]) -> f64,
    {
        Behavior::from_fn(scenario, |xs, os| {
            self.weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(l, w)| w * response(l, xs, os))
                .sum()
        })
    }
}

/// Per-party, per-input XOR masks applied to outputs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Flips {
    pub masks: Vec<Vec<usize>>,
}

impl Flips {
    pub fn none(scenario: &Scenario) -> Self {
        Flips { masks: scenario.parties().iter().map(|p| vec![0; p.inputs]).collect() }
    }

    pub fn apply(&self, b: &Behavior) -> Result<Behavior> {
        let sc = b.scenario();
        if self.masks.len() != sc.num_parties()
            || self.masks.iter().zip(sc.parties()).any(|(m, p)| m.len() != p.inputs || m.iter().any(|&v| v >= p.outputs))
        {
            return Err(Error::ScenarioMismatch("flip masks do not fit the scenario".into()));
        }
        if sc.parties().iter().any(|p| !p.outputs.is_power_of_two()) {
            return Err(Error::ScenarioMismatch("flips need power-of-two output counts".into()));
        }
        let mut src = vec![0; sc.num_parties()];
        Behavior::from_fn(sc.clone(), |xs, os| {
            for k in 0..os.len() {
                src[k] = os[k] ^ self.masks[k][xs[k]];
            }
            b.prob(xs, &src)
        })
    }
}

fn bit(v: bool) -> usize {
    v as usize
}

/// `λ ∈ {0,1}` with `P(λ=1) = p_lambda` shared by Alice and Bob, `a = x·λ`;
/// Bob feeds `λ` into a PR box shared with Charlie and outputs `b0 = b1 = b'`.
fn bilocal_pr_core(p_lambda: f64) -> Result<Behavior> {
    let q = LocalStrategy::new(vec![1.0 - p_lambda, p_lambda])?;
    q.behavior(Scenario::bilocal_binary(), |l, xs, os| {
        let (x, z) = (xs[0], xs[2]);
        let (a, b, c) = (os[0], os[1], os[2]);
        if a != x * l || (b != 0 && b != 3) {
            return 0.0;
        }
        PRBox.prob(b & 1, c, l, z)
    })
}

/// Single PR box between Bob and Charlie, uniform classical bit between Alice
/// and Bob.
pub fn bilocal_pr_strategy() -> Behavior {
    bilocal_pr_core(0.5).expect("valid weights")
}

/// The same construction with `P(λ=1) = p_lambda` and output flips; `(I0, I1)`
/// equals `(1 − p, p)` before flipping.
pub fn bilocal_pr_family(p_lambda: f64, flips: &Flips) -> Result<Behavior> {
    if !(0.0..=1.0).contains(&p_lambda) {
        return Err(Error::OutOfRange(format!("p_lambda {p_lambda} outside [0, 1]")));
    }
    flips.apply(&bilocal_pr_core(p_lambda)?)
}

/// `n`-star with one PR box between the center and branch 1 and uniform
/// classical bits `λ_k` on the other branches (`a_k = x_k·λ_k`). The center
/// inputs `⊕λ_k` into the box and reports `b1 = b'`, all other bits 0.
pub fn star_single_pr_strategy(n: usize) -> Result<Behavior> {
    if n < 2 {
        return Err(Error::OutOfRange("star network needs n ≥ 2".into()));
    }
    let others = n - 1;
    let q = LocalStrategy::uniform(1 << others);
    q.behavior(Scenario::star(n), |l, xs, os| {
        let mut parity = 0;
        for k in 1..n {
            let lk = (l >> (others - k)) & 1;
            if os[k] != xs[k] * lk {
                return 0.0;
            }
            parity ^= lk;
        }
        let b = os[n];
        if b & !(1 << (n - 1)) != 0 {
            return 0.0;
        }
        PRBox.prob(os[0], b >> (n - 1), xs[0], parity)
    })
}

/// Three-star strategy with `λ = (λ1, λ2)` (index `2λ1 + λ2`) distributed by
/// `p_lambda`: the center feeds `λ1`, `λ2` into PR boxes with branches 1 and
/// 2, outputs `b1 = b'_1 ⊕ b'_2`, `b2 = b3 = 0`; branch 3 answers
/// `(λ1 ⊕ λ2)·x3`.
pub fn three_star_tetra_strategy(p_lambda: &[f64; 4], flips: &Flips) -> Result<Behavior> {
    let q = LocalStrategy::new(p_lambda.to_vec())?;
    let base = q.behavior(Scenario::star(3), |l, xs, os| {
        let (l1, l2) = (l >> 1, l & 1);
        if os[2] != xs[2] * (l1 ^ l2) {
            return 0.0;
        }
        let b = os[3];
        if b & 0b011 != 0 {
            return 0.0;
        }
        let b1 = b >> 2;
        // sum over the two box outputs with b'_1 ⊕ b'_2 = b1
        (0..2)
            .map(|p1| PRBox.prob(os[0], p1, xs[0], l1) * PRBox.prob(os[1], p1 ^ b1, xs[1], l2))
            .sum::<f64>()
    })?;
    flips.apply(&base)
}

fn pm(bitv: usize) -> i8 {
    if bitv == 0 {
        1
    } else {
        -1
    }
}

/// Exact model of the θ = 0, v = 1 joint-measurement correlations with a
/// classical Bob–Charlie source: `λ` uniform over four values, `c = m[λ][z]`,
/// and `p(a,b|x,λ) = 1/8` if `a = m[λ][x]`, `1/2` if `a ≠ m[λ][x]` and `b = λ`.
pub fn simulate_theta0() -> Behavior {
    LocalStrategy::uniform(4)
        .behavior(Scenario::ejm(), |l, xs, os| {
            let (x, z) = (xs[0], xs[2]);
            let (a, b, c) = (os[0], os[1], os[2]);
            if pm(c) != TETRA[l][z] {
                return 0.0;
            }
            if pm(a) == TETRA[l][x] {
                0.125
            } else if b == l {
                0.5
            } else {
                0.0
            }
        })
        .expect("simulation tables are normalized")
}

/// Exact model of the θ = π/2, v = 1 correlations. With bits `b = (b0, b1)`
/// and `λ = (λ0, λ1)`, Alice's answer satisfies, each with probability 1/4
/// per admissible `(a, b)`:
/// `x=1: a⊕b1 = λ0⊕λ1⊕1`, `x=2: a⊕b0⊕b1 = λ0⊕1`, `x=3: a⊕b0 = λ1⊕1`.
pub fn simulate_theta_pi2() -> Behavior {
    LocalStrategy::uniform(4)
        .behavior(Scenario::ejm(), |l, xs, os| {
            let (x, z) = (xs[0], xs[2]);
            let (a, b, c) = (os[0], os[1], os[2]);
            if pm(c) != TETRA[l][z] {
                return 0.0;
            }
            let (l0, l1) = (l >> 1, l & 1);
            let (b0, b1) = (b >> 1, b & 1);
            let ok = match x {
                0 => (a ^ b1) == (l0 ^ l1 ^ 1),
                1 => (a ^ b0 ^ b1) == (l0 ^ 1),
                _ => (a ^ b0) == (l1 ^ 1),
            };
            0.25 * bit(ok) as f64
        })
        .expect("simulation tables are normalized")
}
