//! Network Bell quantities and full-network-nonlocality witnesses.
//!
//! Binary outputs map to signs as `0 → +1`, `1 → −1`. In the bilocal scenario
//! Bob's four outcomes are either the bit pairs `(b0, b1)` (index `2·b0 + b1`)
//! or, for the joint-measurement witnesses, rows of the tetrahedron matrix
//! (see [`crate::strategies::TETRA`]).

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Behavior, CorrelatorSpec, PartyTerm, Scenario};
use crate::strategies::TETRA;

fn sign(bit: usize) -> f64 {
    if bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_bilocal_binary(sc: &Scenario) -> Result<()> {
    let p = sc.parties();
    let ok = p.len() == 3
        && p[0].inputs == 2
        && p[0].outputs == 2
        && p[1].inputs == 1
        && p[1].outputs == 4
        && p[2].inputs == 2
        && p[2].outputs == 2;
    if ok {
        Ok(())
    } else {
        Err(Error::ScenarioMismatch("expected binary Alice/Charlie and a four-outcome Bob".into()))
    }
}

/// `I_t = 1/4 Σ (−1)^{a + b_t + c + t(x+z)} p(a,b,c|x,z)` with `b_0`, `b_1`
/// the high and low bits of Bob's outcome.
pub fn bilocal_i(b: &Behavior, t: usize) -> Result<f64> {
    check_bilocal_binary(b.scenario())?;
    if t > 1 {
        return Err(Error::OutOfRange(format!("bilocal index t = {t}")));
    }
    let mut total = 0.0;
    for x in 0..2 {
        for z in 0..2 {
            let block = b.block(&[x, 0, z]);
            let mut s = 0.0;
            for (o, p) in block.iter().enumerate() {
                let (a, bob, c) = (o / 8, (o / 2) % 4, o % 2);
                let bt = if t == 0 { bob >> 1 } else { bob & 1 };
                s += sign(a + bt + c) * p;
            }
            total += sign(t * (x + z)) * s;
        }
    }
    Ok(total / 4.0)
}

/// `√|I_0| + √|I_1|`; at most 1 for bilocal models.
pub fn s2(b: &Behavior) -> Result<f64> {
    Ok(bilocal_i(b, 0)?.abs().sqrt() + bilocal_i(b, 1)?.abs().sqrt())
}

/// Index `t` of the star quantities, reduced modulo `2^{n−1}`; `t1` is the
/// most significant of the `n−1` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarIndex {
    pub n: usize,
    pub t: usize,
}

impl StarIndex {
    pub fn new(n: usize, t: usize) -> Self {
        StarIndex { n, t: t % (1 << (n - 1)) }
    }

    fn bits(&self) -> Vec<usize> {
        (0..self.n - 1).map(|k| (self.t >> (self.n - 2 - k)) & 1).collect()
    }

    /// `(1, t1, …, t_{n−1})`.
    pub fn tilde(&self) -> Vec<usize> {
        let mut v = vec![1];
        v.extend(self.bits());
        v
    }

    /// `(⊕ t_k, t1, …, t_{n−1})`.
    pub fn hat(&self) -> Vec<usize> {
        let bits = self.bits();
        let mut v = vec![bits.iter().fold(0, |a, b| a ^ b)];
        v.extend(bits);
        v
    }
}

/// Number of branches of a star scenario.
pub fn star_size(sc: &Scenario) -> Result<usize> {
    let p = sc.parties();
    let n = p.len().saturating_sub(1);
    let ok = n >= 2
        && p[..n].iter().all(|q| q.inputs == 2 && q.outputs == 2)
        && p[n].inputs == 1
        && p[n].outputs == 1 << n;
    if ok {
        Ok(n)
    } else {
        Err(Error::ScenarioMismatch("expected a star scenario".into()))
    }
}

/// `I_t = 2^{−n} Σ (−1)^{Σa_k + t̃·b + t̂·x} p(a, b | x)`.
pub fn star_i(b: &Behavior, idx: &StarIndex) -> Result<f64> {
    let n = star_size(b.scenario())?;
    if n != idx.n {
        return Err(Error::ScenarioMismatch(format!("index for n = {}, behavior has n = {n}", idx.n)));
    }
    let tt = idx.tilde();
    let th = idx.hat();
    let dot = |u: &[usize], v: usize| (0..n).map(|k| u[k] & (v >> (n - 1 - k))).sum::<usize>();
    let nb = 1usize << n;
    let mut total = 0.0;
    for x in 0..nb {
        let xs: Vec<usize> = (0..n).map(|k| (x >> (n - 1 - k)) & 1).chain([0]).collect();
        let block = b.block(&xs);
        let mut s = 0.0;
        // outputs: a_1..a_n then the center outcome, MSB first
        for (o, p) in block.iter().enumerate() {
            let a = o >> n;
            let bo = o & (nb - 1);
            s += sign(a.count_ones() as usize + dot(&tt, bo)) * p;
        }
        total += sign(dot(&th, x)) * s;
    }
    Ok(total / nb as f64)
}

/// `S_n = 2^{−(n−2)} Σ_t |I_t|^{1/n}`; at most 1 for star-local models.
pub fn sn(b: &Behavior) -> Result<f64> {
    let n = star_size(b.scenario())?;
    let mut s = 0.0;
    for t in 0..1 << (n - 1) {
        s += star_i(b, &StarIndex::new(n, t))?.abs().powf(1.0 / n as f64);
    }
    Ok(s / (1usize << (n - 2)) as f64)
}

/// Rewrites a binary bilocal behavior as a two-branch star behavior with
/// center bits `(β1, β2) = (b0, b0 ⊕ b1)`.
pub fn bilocal_as_star(b: &Behavior) -> Result<Behavior> {
    check_bilocal_binary(b.scenario())?;
    Behavior::from_fn(Scenario::star(2), |xs, os| {
        let (b1, b2) = (os[2] >> 1, os[2] & 1);
        let bob = (b1 << 1) | (b1 ^ b2);
        b.prob(&[xs[0], 0, xs[1]], &[os[0], bob, os[1]])
    })
}

/// Bound on `S_3` for correlations that are not fully network nonlocal.
pub fn full_nn_bound_s3() -> f64 {
    2f64.powf(1.0 / 3.0)
}

/// Bound on `S_4` for correlations that are not fully network nonlocal.
pub fn full_nn_bound_s4() -> f64 {
    2f64.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessTerm {
    pub coef: f64,
    /// Correlators multiplied together; all evaluated on the same behavior.
    pub factors: Vec<CorrelatorSpec>,
}

/// `Σ coef · Π ⟨factor⟩ (≤ | ≥) bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessExpr {
    /// Party names, in scenario order.
    pub parties: Vec<String>,
    pub terms: Vec<WitnessTerm>,
    pub bound: f64,
    pub direction: Direction,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    coef: f64,
    factors: Vec<BTreeMap<String, (usize, Vec<i8>)>>,
}

#[derive(Serialize, Deserialize)]
struct ExprJson {
    parties: Vec<String>,
    terms: Vec<TermJson>,
    bound: f64,
    dir: Direction,
}

impl WitnessExpr {
    pub fn new(scenario: &Scenario, bound: f64, direction: Direction) -> Self {
        WitnessExpr {
            parties: scenario.parties().iter().map(|p| p.name.clone()).collect(),
            terms: Vec::new(),
            bound,
            direction,
        }
    }

    pub fn add(&mut self, coef: f64, factors: Vec<CorrelatorSpec>) -> &mut Self {
        self.terms.push(WitnessTerm { coef, factors });
        self
    }

    pub fn check(&self, scenario: &Scenario) -> Result<()> {
        let names: Vec<&str> = scenario.parties().iter().map(|p| p.name.as_str()).collect();
        if names != self.parties.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::ScenarioMismatch(format!(
                "witness parties {:?} differ from behavior parties {names:?}",
                self.parties
            )));
        }
        for t in &self.terms {
            if t.factors.is_empty() {
                return Err(Error::ScenarioMismatch("witness term without factors".into()));
            }
            for f in &t.factors {
                f.check(scenario)?;
            }
        }
        Ok(())
    }

    pub fn eval(&self, b: &Behavior) -> Result<f64> {
        self.check(b.scenario())?;
        let mut total = 0.0;
        for t in &self.terms {
            let mut prod = t.coef;
            for f in &t.factors {
                prod *= b.correlator(f)?;
            }
            total += prod;
        }
        Ok(total)
    }

    pub fn is_violated(&self, value: f64) -> bool {
        match self.direction {
            Direction::Le => value > self.bound,
            Direction::Ge => value < self.bound,
        }
    }

    pub fn to_json(&self) -> String {
        let terms = self
            .terms
            .iter()
            .map(|t| TermJson {
                coef: t.coef,
                factors: t
                    .factors
                    .iter()
                    .map(|f| {
                        f.terms
                            .iter()
                            .zip(&self.parties)
                            .filter_map(|(term, name)| match term {
                                PartyTerm::Marginal => None,
                                PartyTerm::Measured { input, signs } => Some((name.clone(), (*input, signs.clone()))),
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        let j = ExprJson { parties: self.parties.clone(), terms, bound: self.bound, dir: self.direction };
        serde_json::to_string_pretty(&j).expect("witness serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: ExprJson = serde_json::from_str(text)?;
        let mut terms = Vec::with_capacity(j.terms.len());
        for t in j.terms {
            let mut factors = Vec::with_capacity(t.factors.len());
            for f in t.factors {
                let mut spec = CorrelatorSpec::marginal(j.parties.len());
                for (name, (input, signs)) in f {
                    let k = j
                        .parties
                        .iter()
                        .position(|p| *p == name)
                        .ok_or_else(|| Error::ScenarioMismatch(format!("unknown party {name} in witness")))?;
                    spec = spec.with(k, input, signs);
                }
                factors.push(spec);
            }
            terms.push(WitnessTerm { coef: t.coef, factors });
        }
        Ok(WitnessExpr { parties: j.parties, terms, bound: j.bound, direction: j.dir })
    }
}

/// Correlator builder over the three bilocal parties; `None` marginalizes.
fn corr3(a: Option<(usize, Vec<i8>)>, b: Option<(usize, Vec<i8>)>, c: Option<(usize, Vec<i8>)>) -> CorrelatorSpec {
    let mut s = CorrelatorSpec::marginal(3);
    for (k, t) in [a, b, c].into_iter().enumerate() {
        if let Some((input, signs)) = t {
            s = s.with(k, input, signs);
        }
    }
    s
}

fn pm() -> Vec<i8> {
    vec![1, -1]
}

/// Bob's `b_y` for `y ∈ {1, 2, 3}` under the tetrahedron encoding.
fn tetra_bit(y: usize) -> Vec<i8> {
    TETRA.iter().map(|row| row[y - 1]).collect()
}

fn ax(x: usize) -> Option<(usize, Vec<i8>)> {
    Some((x - 1, pm()))
}

fn by(y: usize) -> Option<(usize, Vec<i8>)> {
    Some((0, tetra_bit(y)))
}

/// `−⟨A1B2C3⟩ − ⟨A2B2⟩ + ⟨C3⟩[⟨A1B2⟩ + ⟨A2B2C3⟩ + ⟨C3⟩] ≤ 1`; violated only if
/// the correlations cannot come from a classical Alice–Bob source.
pub fn ejm_witness_1() -> WitnessExpr {
    let mut w = WitnessExpr::new(&Scenario::ejm(), 1.0, Direction::Le);
    let c3 = || corr3(None, None, ax(3));
    w.add(-1.0, vec![corr3(ax(1), by(2), ax(3))])
        .add(-1.0, vec![corr3(ax(2), by(2), None)])
        .add(1.0, vec![c3(), corr3(ax(1), by(2), None)])
        .add(1.0, vec![c3(), corr3(ax(2), by(2), ax(3))])
        .add(1.0, vec![c3(), c3()]);
    w
}

/// `−⟨A1B2C3⟩ + ⟨B2C2⟩ + ⟨A1⟩[⟨B2C3⟩ − ⟨A1B2C2⟩ + ⟨A1⟩] ≤ 1`; the mirrored
/// witness for a classical Bob–Charlie source.
pub fn ejm_witness_2() -> WitnessExpr {
    let mut w = WitnessExpr::new(&Scenario::ejm(), 1.0, Direction::Le);
    let a1 = || corr3(ax(1), None, None);
    w.add(-1.0, vec![corr3(ax(1), by(2), ax(3))])
        .add(1.0, vec![corr3(None, by(2), ax(2))])
        .add(1.0, vec![a1(), corr3(None, by(2), ax(3))])
        .add(-1.0, vec![a1(), corr3(ax(1), by(2), ax(2))])
        .add(1.0, vec![a1(), a1()]);
    w
}

/// Visibility at which `½v(v + v sinθ + cosθ) = 1`.
pub fn v_crit(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    4.0 / (c + (8.0 + 8.0 * s + c * c).sqrt())
}

/// Measurement parameter minimizing the visibility needed at `v`.
pub fn best_theta_for_visibility(v: f64) -> f64 {
    v.atan().clamp(0.0, FRAC_PI_2)
}

/// `(R_C-NS, R_NS-C)` witnesses for binary Alice/Charlie and ternary Bob,
/// both bounded by 3. Bob's maps are `B0 = (1, 1, −1)`, `B1 = (1, −1, 0)`.
pub fn bsm_witness_exprs() -> (WitnessExpr, WitnessExpr) {
    let sc = Scenario::bilocal_ternary_bob();
    let a = |x: usize| Some((x, pm()));
    let c = |z: usize| Some((z, pm()));
    let b0 = || Some((0, vec![1, 1, -1]));
    let b1 = || Some((0, vec![1, -1, 0]));

    let mut rc = WitnessExpr::new(&sc, 3.0, Direction::Le);
    rc.add(2.0, vec![corr3(a(0), b1(), c(0))])
        .add(-2.0, vec![corr3(a(0), b1(), c(1))])
        .add(2.0, vec![corr3(a(1), b0(), c(0))])
        .add(1.0, vec![corr3(a(1), b0(), c(1))])
        .add(-1.0, vec![corr3(None, b0(), None)])
        .add(1.0, vec![corr3(a(1), b0(), None), corr3(None, None, c(1))])
        .add(1.0, vec![corr3(None, b0(), c(0)), corr3(None, None, c(1))])
        .add(-1.0, vec![corr3(None, None, c(0)), corr3(None, None, c(1))]);

    let mut rn = WitnessExpr::new(&sc, 3.0, Direction::Le);
    let a1 = || corr3(a(1), None, None);
    rn.add(2.0, vec![corr3(a(0), b1(), c(0))])
        .add(-2.0, vec![corr3(a(0), b1(), c(1))])
        .add(1.0, vec![corr3(a(1), b0(), c(0))])
        .add(2.0, vec![corr3(a(1), b0(), c(1))])
        .add(-1.0, vec![corr3(None, b0(), None)])
        .add(1.0, vec![a1(), corr3(a(1), b0(), None)])
        .add(1.0, vec![a1(), corr3(None, b0(), c(1))])
        .add(1.0, vec![a1(), corr3(None, None, c(0))])
        .add(-1.0, vec![a1(), corr3(None, None, c(1))])
        .add(-1.0, vec![a1(), a1()]);
    (rc, rn)
}

pub fn bsm_witnesses(b: &Behavior) -> Result<(f64, f64)> {
    let (rc, rn) = bsm_witness_exprs();
    Ok((rc.eval(b)?, rn.eval(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_zero() -> Behavior {
        Behavior::from_fn(Scenario::bilocal_binary(), |_, o| if o.iter().all(|&v| v == 0) { 1.0 } else { 0.0 })
            .unwrap()
    }

    #[test]
    fn deterministic_and_uniform_values() {
        let z = all_zero();
        assert_eq!(bilocal_i(&z, 0).unwrap(), 1.0);
        assert_eq!(bilocal_i(&z, 1).unwrap(), 0.0);
        assert_eq!(s2(&z).unwrap(), 1.0);
        let u = Behavior::uniform(Scenario::bilocal_binary());
        assert!(s2(&u).unwrap().abs() < 1e-15);
        assert!(bilocal_i(&Behavior::uniform(Scenario::ejm()), 0).is_err());
    }

    #[test]
    fn star_index_strings() {
        let idx = StarIndex::new(3, 2);
        assert_eq!(idx.tilde(), vec![1, 1, 0]);
        assert_eq!(idx.hat(), vec![1, 1, 0]);
        let idx = StarIndex::new(3, 7);
        assert_eq!(idx.t, 3);
        assert_eq!(idx.hat(), vec![0, 1, 1]);
    }

    #[test]
    fn star_two_matches_bilocal() {
        let z = all_zero();
        let s = bilocal_as_star(&z).unwrap();
        assert!((sn(&s).unwrap() - s2(&z).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn v_crit_endpoints() {
        assert!((v_crit(0.0) - 1.0).abs() < 1e-15);
        assert!((v_crit(FRAC_PI_2) - 1.0).abs() < 1e-15);
        assert!((best_theta_for_visibility(1.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(best_theta_for_visibility(0.0), 0.0);
    }

    #[test]
    fn witness_json_round_trip() {
        let w = ejm_witness_1();
        let back = WitnessExpr::from_json(&w.to_json()).unwrap();
        assert_eq!(w, back);
        let u = Behavior::uniform(Scenario::ejm());
        let v = w.eval(&u).unwrap();
        assert!(v.abs() < 1e-15 && !w.is_violated(v));
        assert!(w.eval(&Behavior::uniform(Scenario::bilocal_binary())).is_err());
    }

    #[test]
    fn bsm_witnesses_on_uniform() {
        // only −⟨B0⟩ survives, and ⟨B0⟩ = (1 + 1 − 1)/3
        let (a, b) = bsm_witnesses(&Behavior::uniform(Scenario::bilocal_ternary_bob())).unwrap();
        assert!((a + 1.0 / 3.0).abs() < 1e-15 && (b + 1.0 / 3.0).abs() < 1e-15);
    }
}
