//! Network scenarios, behaviors and correlators.
//!
//! A [`Behavior`] is a dense table `p(outputs | inputs)`. The storage order is
//! inputs-major, then outputs, each block in the party order of the
//! [`Scenario`]:
//!
//! ```text
//! idx = ((..((x1·|X2| + x2)..)·|A1| + a1)..)·|An| + an
//! ```
//!
//! Outputs are stored as plain integers `0..k`. Every ±1 convention is
//! expressed through the sign maps of a [`CorrelatorSpec`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Entries below `-NEG_TOL` are rejected.
pub const NEG_TOL: f64 = 1e-12;
/// Allowed deviation of each conditional distribution from unit mass.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceNature {
    Classical,
    NoSignaling,
    Quantum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Party {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub parties: Vec<usize>,
    pub nature: SourceNature,
}

/// Parties with their input/output cardinalities and the sources linking them.
///
/// A party with a single input has a fixed measurement. An empty source list
/// means the network topology was not recorded (e.g. a file written by another
/// tool); the coverage check is skipped in that case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    parties: Vec<Party>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    sources: Vec<Source>,
}

impl Scenario {
    pub fn new(parties: Vec<Party>, sources: Vec<Source>) -> Result<Self> {
        let s = Scenario { parties, sources };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.parties.is_empty() {
            return Err(Error::InvalidScenario("no parties".into()));
        }
        for p in &self.parties {
            if p.inputs == 0 || p.outputs == 0 {
                return Err(Error::InvalidScenario(format!(
                    "party {} has a zero cardinality",
                    p.name
                )));
            }
        }
        for (i, p) in self.parties.iter().enumerate() {
            if self.parties[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::InvalidScenario(format!("duplicate party name {}", p.name)));
            }
        }
        for src in &self.sources {
            if src.parties.iter().any(|&k| k >= self.parties.len()) {
                return Err(Error::InvalidScenario("source references unknown party".into()));
            }
        }
        if !self.sources.is_empty() {
            for k in 0..self.parties.len() {
                if !self.sources.iter().any(|s| s.parties.contains(&k)) {
                    return Err(Error::InvalidScenario(format!(
                        "party {} is not attached to any source",
                        self.parties[k].name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Three parties A, B, C with sources A–B and B–C; Bob has a fixed input.
    pub fn bilocal(alice: (usize, usize), bob_outputs: usize, charlie: (usize, usize)) -> Self {
        let parties = vec![
            Party { name: "A".into(), inputs: alice.0, outputs: alice.1 },
            Party { name: "B".into(), inputs: 1, outputs: bob_outputs },
            Party { name: "C".into(), inputs: charlie.0, outputs: charlie.1 },
        ];
        let sources = vec![
            Source { parties: vec![0, 1], nature: SourceNature::Quantum },
            Source { parties: vec![1, 2], nature: SourceNature::Quantum },
        ];
        Scenario::new(parties, sources).expect("bilocal scenario is well formed")
    }

    /// Binary inputs/outputs for Alice and Charlie, four outcomes for Bob.
    pub fn bilocal_binary() -> Self {
        Self::bilocal((2, 2), 4, (2, 2))
    }

    /// Ternary inputs for Alice and Charlie, four outcomes for Bob.
    pub fn ejm() -> Self {
        Self::bilocal((3, 2), 4, (3, 2))
    }

    /// Binary inputs/outputs for Alice and Charlie, ternary Bob.
    pub fn bilocal_ternary_bob() -> Self {
        Self::bilocal((2, 2), 3, (2, 2))
    }

    /// `n` binary branch parties `A1..An` linked to a central party `B` with
    /// `2^n` outcomes. The central party is last.
    pub fn star(n: usize) -> Self {
        let mut parties: Vec<Party> = (1..=n)
            .map(|k| Party { name: format!("A{k}"), inputs: 2, outputs: 2 })
            .collect();
        parties.push(Party { name: "B".into(), inputs: 1, outputs: 1 << n });
        let sources = (0..n)
            .map(|k| Source { parties: vec![k, n], nature: SourceNature::Quantum })
            .collect();
        Scenario::new(parties, sources).expect("star scenario is well formed")
    }

    pub fn with_natures(mut self, natures: &[SourceNature]) -> Self {
        for (s, &n) in self.sources.iter_mut().zip(natures) {
            s.nature = n;
        }
        self
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn num_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn party_index(&self, name: &str) -> Option<usize> {
        self.parties.iter().position(|p| p.name == name)
    }

    pub fn input_radices(&self) -> Vec<usize> {
        self.parties.iter().map(|p| p.inputs).collect()
    }

    pub fn output_radices(&self) -> Vec<usize> {
        self.parties.iter().map(|p| p.outputs).collect()
    }

    pub fn num_input_settings(&self) -> usize {
        self.parties.iter().map(|p| p.inputs).product()
    }

    pub fn num_output_settings(&self) -> usize {
        self.parties.iter().map(|p| p.outputs).product()
    }

    pub fn data_len(&self) -> usize {
        self.num_input_settings() * self.num_output_settings()
    }

    /// Same parties and cardinalities; sources are descriptive and ignored.
    pub fn same_shape(&self, other: &Scenario) -> bool {
        self.parties == other.parties
    }

    /// True for three parties where the middle one has a single input.
    pub fn is_bilocal(&self) -> bool {
        self.parties.len() == 3 && self.parties[1].inputs == 1
    }
}

/// Mixed-radix encoding of tuples, most significant digit first.
pub(crate) fn encode(radices: &[usize], digits: &[usize]) -> usize {
    radices.iter().zip(digits).fold(0, |acc, (&r, &d)| acc * r + d)
}

pub(crate) fn decode(radices: &[usize], mut idx: usize, out: &mut [usize]) {
    for k in (0..radices.len()).rev() {
        out[k] = idx % radices[k];
        idx /= radices[k];
    }
}

/// A validated conditional probability table over a [`Scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    data: Vec<f64>,
}

impl Behavior {
    pub fn new(scenario: Scenario, data: Vec<f64>) -> Result<Self> {
        let expected = scenario.data_len();
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: data.len() });
        }
        let n_out = scenario.num_output_settings();
        for (index, &value) in data.iter().enumerate() {
            if !value.is_finite() || value < -NEG_TOL {
                return Err(Error::NegativeEntry { index, value });
            }
        }
        for (input, block) in data.chunks(n_out).enumerate() {
            let sum: f64 = block.iter().sum();
            if (sum - 1.0).abs() > NORM_TOL {
                return Err(Error::Normalization { input, sum });
            }
        }
        Ok(Behavior { scenario, data })
    }

    /// Builds the table by calling `f(inputs, outputs)` for every entry in
    /// storage order.
    pub fn from_fn<F>(scenario: Scenario, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize], &[usize]) -> f64,
    {
        let in_r = scenario.input_radices();
        let out_r = scenario.output_radices();
        let n_in = scenario.num_input_settings();
        let n_out = scenario.num_output_settings();
        let mut xs = vec![0; in_r.len()];
        let mut os = vec![0; out_r.len()];
        let mut data = Vec::with_capacity(n_in * n_out);
        for xi in 0..n_in {
            decode(&in_r, xi, &mut xs);
            for oi in 0..n_out {
                decode(&out_r, oi, &mut os);
                data.push(f(&xs, &os));
            }
        }
        Behavior::new(scenario, data)
    }

    /// Uniformly random outputs for every input.
    pub fn uniform(scenario: Scenario) -> Self {
        let w = 1.0 / scenario.num_output_settings() as f64;
        let data = vec![w; scenario.data_len()];
        Behavior::new(scenario, data).expect("uniform behavior is normalized")
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn index(&self, inputs: &[usize], outputs: &[usize]) -> usize {
        let xi = encode(&self.scenario.input_radices(), inputs);
        let oi = encode(&self.scenario.output_radices(), outputs);
        xi * self.scenario.num_output_settings() + oi
    }

    pub fn prob(&self, inputs: &[usize], outputs: &[usize]) -> f64 {
        self.data[self.index(inputs, outputs)]
    }

    /// Conditional distribution of the outputs for one joint input.
    pub fn block(&self, inputs: &[usize]) -> &[f64] {
        let n_out = self.scenario.num_output_settings();
        let xi = encode(&self.scenario.input_radices(), inputs);
        &self.data[xi * n_out..(xi + 1) * n_out]
    }

    /// Marginal `p(o_k | x_k)` of one party, with every other party at input 0.
    pub fn party_marginal(&self, party: usize, input: usize) -> Vec<f64> {
        let sc = &self.scenario;
        let mut xs = vec![0; sc.num_parties()];
        xs[party] = input;
        let out_r = sc.output_radices();
        let mut os = vec![0; out_r.len()];
        let mut m = vec![0.0; out_r[party]];
        for (oi, &p) in self.block(&xs).iter().enumerate() {
            decode(&out_r, oi, &mut os);
            m[os[party]] += p;
        }
        m
    }

    /// True iff, for every party, the distribution of the remaining parties
    /// does not depend on that party's input (within `tol`).
    pub fn is_no_signaling(&self, tol: f64) -> bool {
        let sc = &self.scenario;
        let in_r = sc.input_radices();
        let out_r = sc.output_radices();
        let n_in = sc.num_input_settings();
        let n_out = sc.num_output_settings();
        let mut xs = vec![0; in_r.len()];
        let mut os = vec![0; out_r.len()];
        for k in 0..sc.num_parties() {
            if in_r[k] == 1 {
                continue;
            }
            let rest = n_out / out_r[k];
            // marginal[x][rest-index] of the other parties with party k summed out
            let mut marg = vec![0.0; n_in * rest];
            for xi in 0..n_in {
                for oi in 0..n_out {
                    decode(&out_r, oi, &mut os);
                    os[k] = 0;
                    let ri = compress_index(&out_r, k, encode(&out_r, &os));
                    marg[xi * rest + ri] += self.data[xi * n_out + oi];
                }
            }
            for xi in 0..n_in {
                decode(&in_r, xi, &mut xs);
                if xs[k] == 0 {
                    continue;
                }
                let x_k = xs[k];
                xs[k] = 0;
                let x0 = encode(&in_r, &xs);
                xs[k] = x_k;
                for r in 0..rest {
                    if (marg[xi * rest + r] - marg[x0 * rest + r]).abs() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `Σ_outputs Π_k w_k(o_k) · p(o | x)` at the inputs named in `spec`.
    pub fn correlator(&self, spec: &CorrelatorSpec) -> Result<f64> {
        spec.check(&self.scenario)?;
        let sc = &self.scenario;
        let out_r = sc.output_radices();
        let inputs: Vec<usize> = spec
            .terms
            .iter()
            .map(|t| match t {
                PartyTerm::Marginal => 0,
                PartyTerm::Measured { input, .. } => *input,
            })
            .collect();
        let mut os = vec![0; out_r.len()];
        let mut acc = 0.0;
        for (oi, &p) in self.block(&inputs).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            decode(&out_r, oi, &mut os);
            let mut w = 1.0;
            for (k, t) in spec.terms.iter().enumerate() {
                if let PartyTerm::Measured { signs, .. } = t {
                    w *= f64::from(signs[os[k]]);
                    if w == 0.0 {
                        break;
                    }
                }
            }
            acc += w * p;
        }
        Ok(acc)
    }

    /// Largest absolute entrywise difference; `None` if the shapes differ.
    pub fn max_abs_diff(&self, other: &Behavior) -> Option<f64> {
        if !self.scenario.same_shape(&other.scenario) {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// `α·self + (1−α)·other`.
    pub fn mix(&self, other: &Behavior, alpha: f64) -> Result<Behavior> {
        if !self.scenario.same_shape(&other.scenario) {
            return Err(Error::ScenarioMismatch("cannot mix behaviors of different shape".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        Behavior::new(self.scenario.clone(), data)
    }

    /// SHA-256 of the little-endian bytes of the data array, hex encoded.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.data {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// JSON with every float written at 17 significant digits.
    pub fn to_json(&self) -> String {
        let scenario = serde_json::to_string(&self.scenario).expect("scenario serializes");
        let data: Vec<String> = self.data.iter().map(|v| format_f64_17(*v)).collect();
        format!("{{\"scenario\":{},\"data\":[{}]}}\n", scenario, data.join(","))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            scenario: Scenario,
            data: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        raw.scenario.validate()?;
        Behavior::new(raw.scenario, raw.data)
    }
}

/// Drops digit `k` from a mixed-radix index whose digit `k` is zero.
fn compress_index(radices: &[usize], k: usize, idx: usize) -> usize {
    let tail: usize = radices[k + 1..].iter().product();
    let head = idx / (tail * radices[k]);
    let low = idx % tail;
    head * tail + low
}

pub(crate) fn format_f64_17(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of negative zero out of files
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

/// What a correlator does with one party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartyTerm {
    /// Sum the party out (evaluated at input 0).
    Marginal,
    /// Weight each output by a value in {+1, −1, 0} at a fixed input.
    Measured { input: usize, signs: Vec<i8> },
}

/// One term per party of the scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelatorSpec {
    pub terms: Vec<PartyTerm>,
}

impl CorrelatorSpec {
    /// Every party marginalized; evaluates to 1 on a normalized behavior.
    pub fn marginal(num_parties: usize) -> Self {
        CorrelatorSpec { terms: vec![PartyTerm::Marginal; num_parties] }
    }

    pub fn with(mut self, party: usize, input: usize, signs: Vec<i8>) -> Self {
        self.terms[party] = PartyTerm::Measured { input, signs };
        self
    }

    /// Binary ±1 map `(+1, −1)` on party `party` at `input`.
    pub fn with_pm(self, party: usize, input: usize) -> Self {
        self.with(party, input, vec![1, -1])
    }

    pub fn check(&self, scenario: &Scenario) -> Result<()> {
        if self.terms.len() != scenario.num_parties() {
            return Err(Error::ScenarioMismatch(format!(
                "correlator has {} party terms, scenario has {} parties",
                self.terms.len(),
                scenario.num_parties()
            )));
        }
        for (t, p) in self.terms.iter().zip(scenario.parties()) {
            if let PartyTerm::Measured { input, signs } = t {
                if *input >= p.inputs {
                    return Err(Error::ScenarioMismatch(format!(
                        "input {} out of range for party {} ({} inputs)",
                        input, p.name, p.inputs
                    )));
                }
                if signs.len() != p.outputs {
                    return Err(Error::ScenarioMismatch(format!(
                        "sign map of length {} for party {} with {} outputs",
                        signs.len(),
                        p.name,
                        p.outputs
                    )));
                }
                if signs.iter().any(|s| !(-1..=1).contains(s)) {
                    return Err(Error::ScenarioMismatch("sign map values must be in {-1,0,1}".into()));
                }
            }
        }
        Ok(())
    }
}
