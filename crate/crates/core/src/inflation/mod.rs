//! Hybrid inflation of the bilocal network, the one-nonlocal-source
//! simulation LP, the no-signaling programs behind the three-star bound, and
//! conversion of infeasibility certificates into witnesses.
//!
//! The inflation keeps one source classical and treats the other as an
//! arbitrary no-signaling resource. The party on the no-signaling side only
//! ("duplicated party") is copied together with Bob and that source; the
//! classical variable is cloned so that the remaining party ("solo party")
//! talks to both copies of Bob:
//!
//! ```text
//! p_inf(s, b1, b2, d1, d2 | sx, dz1, dz2) ≥ 0
//! Σ p_inf = 1                                           (per input triple)
//! Σ_s p_inf independent of sx, Σ_d1 of dz1, Σ_d2 of dz2   (no signaling)
//! p_inf(s,b1,b2,d1,d2|sx,dz1,dz2) = p_inf(s,b2,b1,d2,d1|sx,dz2,dz1)
//! Σ_b2 p_inf(s,b1,b2,d1,d2|sx,dz1,dz2) = p(s,b1,d1|sx,dz1) · p(d2|dz2)
//! ```
//!
//! With a classical Alice–Bob source the solo party is Alice and Charlie is
//! duplicated; with a classical Bob–Charlie source the roles swap.

mod star_bounds;
mod certificate;
mod simulation;

pub use star_bounds::{max_ns_expression, ns_polytope_program, s3_composition_bound, NsExpression, NsProgram};
pub use certificate::{certificate_to_witness, CertificateFile};
pub use simulation::{build_simulation_lp, max_visibility_simulable, simulation_feasible};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, FarkasCertificate, LinearProgram, Relation, Status};
use crate::scenario::{encode, Behavior, Scenario};

/// Tolerance for refusing signaling input behaviors.
pub const NS_INPUT_TOL: f64 = 1e-9;

/// Which source is classical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalSide {
    AliceBob,
    BobCharlie,
}

impl ClassicalSide {
    pub const BOTH: [ClassicalSide; 2] = [ClassicalSide::AliceBob, ClassicalSide::BobCharlie];

    /// `(solo, duplicated)` party indices in the bilocal scenario.
    fn roles(self) -> (usize, usize) {
        match self {
            ClassicalSide::AliceBob => (0, 2),
            ClassicalSide::BobCharlie => (2, 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassicalSide::AliceBob => "alice-bob",
            ClassicalSide::BobCharlie => "bob-charlie",
        }
    }
}

/// The inflation applied to a bilocal base scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InflationSpec {
    pub scenario: Scenario,
    pub side: ClassicalSide,
}

/// Dependence of one row's right-hand side on the target behavior.
#[derive(Debug, Clone, PartialEq)]
pub enum RhsTerm {
    Zero,
    One,
    /// `p(outputs | inputs) · p_party(output | input)` in base-scenario order;
    /// the single-party factor is read with the other parties at input 0.
    Product { inputs: Vec<usize>, outputs: Vec<usize>, party: usize, input: usize, output: usize },
}

/// An inflation LP with its right-hand side kept symbolic.
#[derive(Debug, Clone)]
pub struct InflationLp {
    pub spec: InflationSpec,
    pub lp: LinearProgram,
    pub rhs: Vec<RhsTerm>,
}

fn check_bilocal(sc: &Scenario) -> Result<()> {
    if sc.is_bilocal() {
        Ok(())
    } else {
        Err(Error::ScenarioMismatch("inflation needs a bilocal scenario".into()))
    }
}

/// Evaluates a right-hand-side term on `b`.
pub fn rhs_value(term: &RhsTerm, b: &Behavior) -> f64 {
    match term {
        RhsTerm::Zero => 0.0,
        RhsTerm::One => 1.0,
        RhsTerm::Product { inputs, outputs, party, input, output } => {
            b.prob(inputs, outputs) * b.party_marginal(*party, *input)[*output]
        }
    }
}

impl InflationLp {
    /// Structure of the LP for `spec`, independent of any behavior.
    pub fn symbolic(spec: InflationSpec) -> Result<Self> {
        check_bilocal(&spec.scenario)?;
        let parties = spec.scenario.parties();
        let (si, di) = spec.side.roles();
        let (sn, so) = (parties[si].inputs, parties[si].outputs);
        let (dn, dout) = (parties[di].inputs, parties[di].outputs);
        let nb = parties[1].outputs;
        let sname = &parties[si].name;
        let dname = &parties[di].name;

        let in_r = [sn, dn, dn];
        let out_r = [so, nb, nb, dout, dout];
        let n_out: usize = out_r.iter().product();
        let n_in: usize = in_r.iter().product();
        let var = |ins: [usize; 3], outs: [usize; 5]| encode(&in_r, &ins) * n_out + encode(&out_r, &outs);

        let mut lp = LinearProgram::new(n_in * n_out);
        let mut rhs = Vec::new();
        let all_outs = || {
            (0..so).flat_map(move |s| {
                (0..nb).flat_map(move |b1| {
                    (0..nb).flat_map(move |b2| (0..dout).flat_map(move |d1| (0..dout).map(move |d2| [s, b1, b2, d1, d2])))
                })
            })
        };
        let all_ins = || (0..sn).flat_map(move |x| (0..dn).flat_map(move |z1| (0..dn).map(move |z2| [x, z1, z2])));

        for ins in all_ins() {
            let coeffs: Vec<(usize, f64)> = all_outs().map(|o| (var(ins, o), 1.0)).collect();
            lp.add_row(format!("norm {sname}x={} {dname}z1={} {dname}z2={}", ins[0], ins[1], ins[2]), coeffs, Relation::Eq, 1.0);
            rhs.push(RhsTerm::One);
        }

        // no signaling from the solo party's input
        for o in all_outs().filter(|o| o[0] == 0) {
            for z1 in 0..dn {
                for z2 in 0..dn {
                    for x in 0..sn.saturating_sub(1) {
                        let mut coeffs = Vec::with_capacity(2 * so);
                        for s in 0..so {
                            let oo = [s, o[1], o[2], o[3], o[4]];
                            coeffs.push((var([x, z1, z2], oo), 1.0));
                            coeffs.push((var([x + 1, z1, z2], oo), -1.0));
                        }
                        lp.add_row(
                            format!("ns-{sname} b1={} b2={} d1={} d2={} z1={z1} z2={z2} x={x}", o[1], o[2], o[3], o[4]),
                            coeffs,
                            Relation::Eq,
                            0.0,
                        );
                        rhs.push(RhsTerm::Zero);
                    }
                }
            }
        }
        // no signaling from either copy of the duplicated party
        for copy in 0..2 {
            let slot = 3 + copy;
            for o in all_outs().filter(|o| o[slot] == 0) {
                for x in 0..sn {
                    for other in 0..dn {
                        for z in 0..dn.saturating_sub(1) {
                            let ins = |zz: usize| if copy == 0 { [x, zz, other] } else { [x, other, zz] };
                            let mut coeffs = Vec::with_capacity(2 * dout);
                            for d in 0..dout {
                                let mut oo = o;
                                oo[slot] = d;
                                coeffs.push((var(ins(z), oo), 1.0));
                                coeffs.push((var(ins(z + 1), oo), -1.0));
                            }
                            lp.add_row(
                                format!(
                                    "ns-{dname}{} s={} b1={} b2={} d{}={} x={x} z{}={other} z={z}",
                                    copy + 1,
                                    o[0],
                                    o[1],
                                    o[2],
                                    2 - copy,
                                    o[4 - copy],
                                    2 - copy
                                ),
                                coeffs,
                                Relation::Eq,
                                0.0,
                            );
                            rhs.push(RhsTerm::Zero);
                        }
                    }
                }
            }
        }
        // copy symmetry
        for ins in all_ins() {
            for o in all_outs() {
                let i = var(ins, o);
                let j = var([ins[0], ins[2], ins[1]], [o[0], o[2], o[1], o[4], o[3]]);
                if i < j {
                    lp.add_row(format!("sym {i} {j}"), [(i, 1.0), (j, -1.0)], Relation::Eq, 0.0);
                    rhs.push(RhsTerm::Zero);
                }
            }
        }
        // marginal matching
        for x in 0..sn {
            for z1 in 0..dn {
                for z2 in 0..dn {
                    for s in 0..so {
                        for b1 in 0..nb {
                            for d1 in 0..dout {
                                for d2 in 0..dout {
                                    let coeffs: Vec<(usize, f64)> =
                                        (0..nb).map(|b2| (var([x, z1, z2], [s, b1, b2, d1, d2]), 1.0)).collect();
                                    lp.add_row(
                                        format!("marg s={s} b1={b1} d1={d1} d2={d2} x={x} z1={z1} z2={z2}"),
                                        coeffs,
                                        Relation::Eq,
                                        0.0,
                                    );
                                    let mut inputs = vec![0; 3];
                                    let mut outputs = vec![0; 3];
                                    inputs[si] = x;
                                    inputs[di] = z1;
                                    outputs[si] = s;
                                    outputs[1] = b1;
                                    outputs[di] = d1;
                                    rhs.push(RhsTerm::Product { inputs, outputs, party: di, input: z2, output: d2 });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(InflationLp { spec, lp, rhs })
    }

    /// The LP with its right-hand side evaluated on `b`.
    pub fn instantiate(&self, b: &Behavior) -> Result<LinearProgram> {
        if !b.scenario().same_shape(&self.spec.scenario) {
            return Err(Error::ScenarioMismatch("behavior does not match the inflation's base scenario".into()));
        }
        let mut lp = self.lp.clone();
        for (i, t) in self.rhs.iter().enumerate() {
            if let RhsTerm::Product { .. } = t {
                lp.set_rhs(i, rhs_value(t, b));
            }
        }
        Ok(lp)
    }

    /// `y·b(p)`: the certificate's value as a function of the behavior.
    pub fn certificate_value(&self, cert: &FarkasCertificate, b: &Behavior) -> f64 {
        // bound multipliers contribute zᵀl = 0 for zero lower bounds
        self.rhs.iter().zip(&cert.row_multipliers).map(|(t, u)| if *u == 0.0 { 0.0 } else { u * rhs_value(t, b) }).sum()
    }
}

/// Inflation LP for `b` with the classical source on `side`.
pub fn build_bilocal_inflation_lp(b: &Behavior, side: ClassicalSide) -> Result<LinearProgram> {
    check_bilocal(b.scenario())?;
    if !b.is_no_signaling(NS_INPUT_TOL) {
        return Err(Error::Signaling);
    }
    InflationLp::symbolic(InflationSpec { scenario: b.scenario().clone(), side })?.instantiate(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationStatus {
    Feasible,
    Infeasible,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    FullNnCertified,
    NotCertified,
    Ambiguous,
}

impl Verdict {
    pub fn describe(self) -> &'static str {
        match self {
            Verdict::FullNnCertified => "full-NN certified",
            Verdict::NotCertified => "not certified",
            Verdict::Ambiguous => "ambiguous",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrientationReport {
    pub side: ClassicalSide,
    pub status: OrientationStatus,
    pub certificate: Option<FarkasCertificate>,
    /// `y·b(p)` re-evaluated from the symbolic right-hand side.
    pub certificate_value: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct FullNNReport {
    pub orientations: Vec<OrientationReport>,
    pub verdict: Verdict,
}

fn solve_orientation(b: &Behavior, side: ClassicalSide, min_value: f64) -> Result<(OrientationReport, InflationLp)> {
    let start = std::time::Instant::now();
    let sym = InflationLp::symbolic(InflationSpec { scenario: b.scenario().clone(), side })?;
    let lp = sym.instantiate(b)?;
    let res = lp::solve_feasibility(&lp)?;
    let (status, certificate, value) = match res.status {
        Status::Feasible(_) => (OrientationStatus::Feasible, None, None),
        Status::Infeasible(cert) => {
            let v = sym.certificate_value(&cert, b);
            // a certificate that does not re-validate symbolically is not trusted
            if lp::verify_certificate(&lp, &cert) && v > min_value {
                (OrientationStatus::Infeasible, Some(cert), Some(v))
            } else {
                (OrientationStatus::Ambiguous, Some(cert), Some(v))
            }
        }
        Status::Ambiguous => (OrientationStatus::Ambiguous, None, None),
    };
    let report = OrientationReport {
        side,
        status,
        certificate,
        certificate_value: value,
        iterations: res.iterations,
        residual: res.residual,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((report, sym))
}

/// Runs both orientations; certified only if both are infeasible with
/// verified certificates.
pub fn certify_full_nn(b: &Behavior) -> Result<FullNNReport> {
    Ok(certify_full_nn_with_lps(b, 0.0)?.0)
}

/// [`certify_full_nn`] that also returns the symbolic LPs, in orientation
/// order. A certificate counts only if `y·b(p) > min_value`.
pub fn certify_full_nn_with_lps(b: &Behavior, min_value: f64) -> Result<(FullNNReport, Vec<InflationLp>)> {
    check_bilocal(b.scenario())?;
    if !b.is_no_signaling(NS_INPUT_TOL) {
        return Err(Error::Signaling);
    }
    let (r1, r2) = rayon::join(
        || solve_orientation(b, ClassicalSide::AliceBob, min_value),
        || solve_orientation(b, ClassicalSide::BobCharlie, min_value),
    );
    let (r1, l1) = r1?;
    let (r2, l2) = r2?;
    let statuses = [r1.status, r2.status];
    let verdict = if statuses.iter().all(|s| *s == OrientationStatus::Infeasible) {
        Verdict::FullNnCertified
    } else if statuses.contains(&OrientationStatus::Feasible) {
        Verdict::NotCertified
    } else {
        Verdict::Ambiguous
    };
    Ok((FullNNReport { orientations: vec![r1, r2], verdict }, vec![l1, l2]))
}
