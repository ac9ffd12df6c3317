//! Infeasibility certificates as files and as witnesses.
//!
//! Only normalization and marginal rows carry a nonzero right-hand side, so
//! `y·b(p) = Σ_norm y + Σ_marg y · p(s,b,d|x,z) · p(d'|z')`. Each indicator
//! is expanded in a per-party basis of output maps, which turns every
//! product of probabilities into a sum of products of two correlators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ClassicalSide, InflationLp, InflationSpec, RhsTerm};
use crate::error::{Error, Result};
use crate::lp::{FarkasCertificate, TOL_CERT};
use crate::scenario::{Behavior, CorrelatorSpec, Scenario};
use crate::strategies::TETRA;
use crate::witness::{Direction, WitnessExpr};

/// Output maps spanning all functions of one party's outcome, with
/// `1_{o=i} = Σ_j coef[i][j] · maps[j]`.
struct Basis {
    maps: Vec<Vec<i8>>,
    coef: Vec<Vec<f64>>,
    constant: Option<usize>,
}

impl Basis {
    fn for_outputs(k: usize) -> Self {
        match k {
            2 => Basis {
                maps: vec![vec![1, 1], vec![1, -1]],
                coef: vec![vec![0.5, 0.5], vec![0.5, -0.5]],
                constant: Some(0),
            },
            4 => {
                let h: Vec<Vec<i8>> = TETRA.iter().map(|r| vec![1, r[0], r[1], r[2]]).collect();
                let maps = (0..4).map(|j| (0..4).map(|o| h[o][j]).collect()).collect();
                let coef = h.iter().map(|r| r.iter().map(|&v| 0.25 * f64::from(v)).collect()).collect();
                Basis { maps, coef, constant: Some(0) }
            }
            _ => Basis {
                maps: (0..k).map(|j| (0..k).map(|o| i8::from(o == j)).collect()).collect(),
                coef: (0..k).map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect()).collect(),
                constant: None,
            },
        }
    }
}

/// Converts a certificate of the orientation's LP into `E(p) ≤ bound` with
/// `E(p) − bound = y·b(p)`; every behavior of that orientation's hybrid
/// model satisfies it.
pub fn certificate_to_witness(cert: &FarkasCertificate, inf: &InflationLp) -> Result<WitnessExpr> {
    check_structure(cert, inf)?;
    let sc = &inf.spec.scenario;
    let bases: Vec<Basis> = sc.parties().iter().map(|p| Basis::for_outputs(p.outputs)).collect();

    // key: (inputs, basis index per party) of the joint factor, (party, input, index) of the single one
    type Key = (Vec<usize>, Vec<usize>, usize, usize, usize);
    let mut acc: BTreeMap<Key, f64> = BTreeMap::new();
    let mut constant = 0.0;
    for (t, &u) in inf.rhs.iter().zip(&cert.row_multipliers) {
        if u == 0.0 {
            continue;
        }
        match t {
            RhsTerm::Zero => {}
            RhsTerm::One => constant += u,
            RhsTerm::Product { inputs, outputs, party, input, output } => {
                let single = &bases[*party].coef[*output];
                let per_party: Vec<&Vec<f64>> = bases.iter().zip(outputs).map(|(bs, &o)| &bs.coef[o]).collect();
                let mut idx = vec![0; per_party.len()];
                'joint: loop {
                    let cj: f64 = idx.iter().zip(&per_party).map(|(&j, c)| c[j]).product();
                    if cj != 0.0 {
                        for (k, &cs) in single.iter().enumerate() {
                            if cs != 0.0 {
                                *acc.entry((inputs.clone(), idx.clone(), *party, *input, k)).or_default() += u * cj * cs;
                            }
                        }
                    }
                    for p in (0..idx.len()).rev() {
                        idx[p] += 1;
                        if idx[p] < per_party[p].len() {
                            continue 'joint;
                        }
                        idx[p] = 0;
                    }
                    break;
                }
            }
        }
    }

    let mut w = WitnessExpr::new(sc, 0.0, Direction::Le);
    for ((inputs, idx, party, input, k), c) in acc {
        if c == 0.0 {
            continue;
        }
        let joint_const = idx.iter().zip(&bases).all(|(&j, b)| b.constant == Some(j));
        let single_const = bases[party].constant == Some(k);
        let mut factors = Vec::new();
        if !joint_const {
            let mut f = CorrelatorSpec::marginal(idx.len());
            for (p, (&j, b)) in idx.iter().zip(&bases).enumerate() {
                f = f.with(p, inputs[p], b.maps[j].clone());
            }
            factors.push(f);
        }
        if !single_const {
            factors.push(CorrelatorSpec::marginal(idx.len()).with(party, input, bases[party].maps[k].clone()));
        }
        if factors.is_empty() {
            constant += c;
        } else {
            w.add(c, factors);
        }
    }
    w.bound = -constant;
    Ok(w)
}

/// A nonzero certificate whose row combination cancels against the bound
/// multipliers; the part of verification that does not depend on `p`.
fn check_structure(cert: &FarkasCertificate, inf: &InflationLp) -> Result<()> {
    let lp = &inf.lp;
    if cert.row_multipliers.len() != lp.rows().len() || cert.bound_multipliers.len() != lp.num_vars() {
        return Err(Error::BadCertificate("multiplier counts do not match the inflation LP".into()));
    }
    let y_inf = cert.row_multipliers.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if y_inf == 0.0 {
        return Err(Error::BadCertificate("certificate is zero".into()));
    }
    if cert.bound_multipliers.iter().any(|z| *z < 0.0) {
        return Err(Error::BadCertificate("negative bound multiplier".into()));
    }
    let res = cert.residual(lp).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if res > TOL_CERT * y_inf {
        return Err(Error::BadCertificate(format!("row combination does not cancel (residual {res:e})")));
    }
    Ok(())
}

/// Serialized certificate; multipliers are keyed by row label so that the
/// file can be checked without this crate's row ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub version: String,
    pub orientation: ClassicalSide,
    pub scenario: Scenario,
    pub behavior_checksum: String,
    /// `y·b(p)` on the behavior the certificate was computed for.
    pub value: f64,
    pub multipliers: BTreeMap<String, f64>,
    /// Nonzero multipliers of the bounds `x_j ≥ 0`, by variable index.
    pub bound_multipliers: BTreeMap<usize, f64>,
}

impl CertificateFile {
    pub fn new(cert: &FarkasCertificate, inf: &InflationLp, b: &Behavior) -> Self {
        let multipliers = inf
            .lp
            .rows()
            .iter()
            .zip(&cert.row_multipliers)
            .filter(|(_, u)| **u != 0.0)
            .map(|(r, u)| (r.label.clone(), *u))
            .collect();
        let bound_multipliers =
            cert.bound_multipliers.iter().enumerate().filter(|(_, z)| **z != 0.0).map(|(j, z)| (j, *z)).collect();
        CertificateFile {
            version: env!("CARGO_PKG_VERSION").into(),
            orientation: inf.spec.side,
            scenario: inf.spec.scenario.clone(),
            behavior_checksum: b.checksum(),
            value: inf.certificate_value(cert, b),
            multipliers,
            bound_multipliers,
        }
    }

    /// Rebuilds the symbolic LP and the dense certificate.
    pub fn resolve(&self) -> Result<(FarkasCertificate, InflationLp)> {
        let inf = InflationLp::symbolic(InflationSpec { scenario: self.scenario.clone(), side: self.orientation })?;
        let mut rows = vec![0.0; inf.lp.rows().len()];
        for (label, u) in &self.multipliers {
            let i = inf
                .lp
                .find_row(label)
                .ok_or_else(|| Error::ScenarioMismatch(format!("no row labelled {label:?} in the inflation LP")))?;
            rows[i] = *u;
        }
        let mut bounds = vec![0.0; inf.lp.num_vars()];
        for (&j, &z) in &self.bound_multipliers {
            *bounds
                .get_mut(j)
                .ok_or_else(|| Error::ScenarioMismatch(format!("bound multiplier for variable {j} out of range")))? = z;
        }
        Ok((FarkasCertificate { row_multipliers: rows, bound_multipliers: bounds }, inf))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
