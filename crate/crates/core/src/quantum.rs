//! Small complex-matrix kernel: states, measurements and Born-rule behaviors
//! for bilocal and star networks.
//!
//! Bilocal tensor order is `A ⊗ B1 ⊗ B2 ⊗ C`: Bob's measurement acts on the
//! second qubit of the A–B source and the first qubit of the B–C source.
//! Star sources are ordered `(branch_k, center_k)` and reshuffled internally
//! to `(branch_1..branch_n, center_1..center_n)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::{Behavior, Scenario};

pub type CMatrix = DMatrix<Complex64>;

const HERM_TOL: f64 = 1e-12;
const MEAS_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn projector(v: &[Complex64]) -> CMatrix {
    let col = CMatrix::from_column_slice(v.len(), 1, v);
    &col * col.adjoint()
}

/// Real part of `Tr(a·b)` without forming the product.
fn trace_prod(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s.re
}

/// A density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    matrix: CMatrix,
}

impl StateMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidQuantum("state matrix is not square".into()));
        }
        if hermiticity_error(&matrix) > HERM_TOL {
            return Err(Error::InvalidQuantum("state matrix is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > HERM_TOL || tr.im.abs() > HERM_TOL {
            return Err(Error::InvalidQuantum(format!("state trace is {tr}")));
        }
        if min_eigenvalue(&matrix) < -MEAS_TOL {
            return Err(Error::InvalidQuantum("state matrix is not positive semidefinite".into()));
        }
        Ok(StateMatrix { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        StateMatrix { matrix: identity(dim) * c(1.0 / dim as f64, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        trace_prod(&self.matrix, &self.matrix)
    }

    /// `Tr(ρ·O)` for an operator of matching dimension.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        trace_prod(&self.matrix, op)
    }

    pub fn tensor(&self, other: &StateMatrix) -> StateMatrix {
        StateMatrix { matrix: kron(&self.matrix, &other.matrix) }
    }
}

/// `(|01⟩ − |10⟩)/√2` as a projector.
pub fn singlet() -> StateMatrix {
    let r = FRAC_1_SQRT_2;
    StateMatrix { matrix: projector(&[c(0.0, 0.0), c(r, 0.0), c(-r, 0.0), c(0.0, 0.0)]) }
}

/// `v·ψ⁻ + (1−v)/4·𝟙`.
pub fn werner(v: f64) -> Result<StateMatrix> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(format!("visibility {v} outside [0, 1]")));
    }
    let m = singlet().matrix * c(v, 0.0) + identity(4) * c((1.0 - v) / 4.0, 0.0);
    Ok(StateMatrix { matrix: m })
}

/// A POVM.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    elements: Vec<CMatrix>,
}

impl Measurement {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidQuantum("measurement has no elements".into()));
        };
        let dim = first.nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for e in &elements {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::InvalidQuantum("measurement elements differ in dimension".into()));
            }
            if hermiticity_error(e) > MEAS_TOL || min_eigenvalue(e) < -MEAS_TOL {
                return Err(Error::InvalidQuantum("measurement element is not positive".into()));
            }
            sum += e;
        }
        if max_abs(&(sum - identity(dim))) > MEAS_TOL {
            return Err(Error::InvalidQuantum("measurement elements do not sum to identity".into()));
        }
        Ok(Measurement { elements })
    }

    /// Rank-one projectors onto the given orthonormal vectors.
    pub fn from_basis(vectors: &[Vec<Complex64>]) -> Result<Self> {
        Measurement::new(vectors.iter().map(|v| projector(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Basis vectors of the joint measurement family parametrized by `θ ∈ [0, π/2]`,
/// in the computational basis `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn ejm_vectors(theta: f64) -> Result<Vec<Vec<Complex64>>> {
    if !(0.0..=PI / 2.0).contains(&theta) {
        return Err(Error::OutOfRange(format!("theta {theta} outside [0, pi/2]")));
    }
    let phase = Complex64::from_polar(1.0, theta);
    let rp = (c(1.0, 0.0) + phase) * FRAC_1_SQRT_2;
    let rm = (c(1.0, 0.0) - phase) * FRAC_1_SQRT_2;
    let e = |k: f64| Complex64::from_polar(1.0, PI * k / 4.0);
    let raw = [
        [e(-1.0), -rp, -rm, e(-3.0)],
        [e(1.0), rm, rp, e(3.0)],
        [e(-3.0), rm, rp, e(-1.0)],
        [e(3.0), -rp, -rm, e(1.0)],
    ];
    Ok(raw.iter().map(|v| v.iter().map(|z| z * 0.5).collect()).collect())
}

pub fn ejm_basis(theta: f64) -> Result<Measurement> {
    Measurement::from_basis(&ejm_vectors(theta)?)
}

/// Vectors `|GHZ_b⟩ = (|0, b2..bn⟩ + (−1)^{b1} |1, ¬b2..¬bn⟩)/√2`, with `b1`
/// the most significant bit of the outcome index.
pub fn ghz_vectors(n: usize) -> Vec<Vec<Complex64>> {
    let dim = 1usize << n;
    let low = (1usize << (n - 1)) - 1;
    (0..dim)
        .map(|b| {
            let b1 = b >> (n - 1);
            let rest = b & low;
            let mut v = vec![c(0.0, 0.0); dim];
            v[rest] = c(FRAC_1_SQRT_2, 0.0);
            let sign = if b1 == 0 { 1.0 } else { -1.0 };
            v[(1 << (n - 1)) | (!rest & low)] = c(sign * FRAC_1_SQRT_2, 0.0);
            v
        })
        .collect()
}

pub fn ghz_basis(n: usize) -> Result<Measurement> {
    if n < 2 {
        return Err(Error::OutOfRange("GHZ basis needs at least two qubits".into()));
    }
    Measurement::from_basis(&ghz_vectors(n))
}

/// Bell basis ordered `φ⁺, φ⁻, ψ⁻, ψ⁺`.
pub fn bell_basis() -> Measurement {
    let g = ghz_vectors(2);
    Measurement::from_basis(&[g[0].clone(), g[2].clone(), g[3].clone(), g[1].clone()]).expect("Bell basis is complete")
}

/// `{φ⁺, φ⁻, 𝟙 − φ⁺ − φ⁻}`.
pub fn partial_bsm() -> Measurement {
    let g = ghz_vectors(2);
    let pp = projector(&g[0]);
    let pm = projector(&g[2]);
    let rest = identity(4) - &pp - &pm;
    Measurement::new(vec![pp, pm, rest]).expect("partial Bell measurement is complete")
}

/// A ±1-valued Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || hermiticity_error(&matrix) > MEAS_TOL {
            return Err(Error::InvalidQuantum("observable is not Hermitian".into()));
        }
        let dim = matrix.nrows();
        if max_abs(&(&matrix * &matrix - identity(dim))) > MEAS_TOL {
            return Err(Error::InvalidQuantum("observable does not square to identity".into()));
        }
        Ok(Observable { matrix })
    }

    /// `n·σ` for a unit Bloch vector `n`.
    pub fn from_bloch(n: [f64; 3]) -> Result<Self> {
        let m = pauli_matrix(1) * c(n[0], 0.0) + pauli_matrix(2) * c(n[1], 0.0) + pauli_matrix(3) * c(n[2], 0.0);
        Observable::new(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `(𝟙 + (−1)^outcome O)/2`: outcome 0 is the +1 eigenspace.
    pub fn projector(&self, outcome: usize) -> CMatrix {
        let s = if outcome == 0 { 0.5 } else { -0.5 };
        identity(self.dim()) * c(0.5, 0.0) + &self.matrix * c(s, 0.0)
    }
}

fn pauli_matrix(k: usize) -> CMatrix {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match k {
        1 => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("Pauli index must be 1, 2 or 3"),
    }
}

/// `σ_1 = X`, `σ_2 = Y`, `σ_3 = Z`.
pub fn pauli(k: usize) -> Result<Observable> {
    if !(1..=3).contains(&k) {
        return Err(Error::OutOfRange(format!("Pauli index {k}")));
    }
    Ok(Observable { matrix: pauli_matrix(k) })
}

/// Settings of the partial-Bell-measurement protocol: Alice `(X, Z)`,
/// Charlie `((Z+X)/√2, (Z−X)/√2)`.
pub fn bsm_protocol_observables() -> (Vec<Observable>, Vec<Observable>) {
    let r = FRAC_1_SQRT_2;
    let alice = vec![pauli(1).unwrap(), pauli(3).unwrap()];
    let charlie = vec![
        Observable::from_bloch([r, 0.0, r]).unwrap(),
        Observable::from_bloch([-r, 0.0, r]).unwrap(),
    ];
    (alice, charlie)
}

/// Born-rule behavior of the bilocal network.
pub fn bilocal_behavior(
    rho_ab: &StateMatrix,
    rho_bc: &StateMatrix,
    alice: &[Observable],
    bob: &Measurement,
    charlie: &[Observable],
) -> Result<Behavior> {
    for (name, d) in [("rho_AB", rho_ab.dim()), ("rho_BC", rho_bc.dim()), ("bob", bob.dim())] {
        if d != 4 {
            return Err(Error::InvalidQuantum(format!("{name} must act on two qubits, has dimension {d}")));
        }
    }
    if alice.is_empty() || charlie.is_empty() {
        return Err(Error::InvalidQuantum("Alice and Charlie need at least one observable".into()));
    }
    if alice.iter().chain(charlie).any(|o| o.dim() != 2) {
        return Err(Error::InvalidQuantum("Alice and Charlie observables must be qubit observables".into()));
    }
    let rho = kron(rho_ab.matrix(), rho_bc.matrix());
    let pa: Vec<Vec<CMatrix>> = alice.iter().map(|o| vec![o.projector(0), o.projector(1)]).collect();
    let pc: Vec<Vec<CMatrix>> = charlie.iter().map(|o| vec![o.projector(0), o.projector(1)]).collect();
    // Bob-conditioned operators on A⊗C would be cheaper, but 16×16 is tiny.
    let mut ops = std::collections::HashMap::new();
    let scenario = Scenario::bilocal((alice.len(), 2), bob.len(), (charlie.len(), 2));
    Behavior::from_fn(scenario, |xs, os| {
        let (x, z) = (xs[0], xs[2]);
        let (a, b, cc) = (os[0], os[1], os[2]);
        let op = ops
            .entry((x, a, b, z, cc))
            .or_insert_with(|| kron(&kron(&pa[x][a], &bob.elements()[b]), &pc[z][cc]));
        trace_prod(op, &rho).max(0.0)
    })
}

/// Werner sources of visibility `v`, Pauli settings for Alice and Charlie and
/// the joint measurement of parameter `θ` for Bob.
pub fn ejm_correlations(theta: f64, v: f64) -> Result<Behavior> {
    let bob = ejm_basis(theta)?;
    let rho = werner(v)?;
    let paulis: Vec<Observable> = (1..=3).map(|k| pauli(k).unwrap()).collect();
    bilocal_behavior(&rho, &rho, &paulis, &bob, &paulis)
}

/// Partial Bell measurement for Bob with Werner sources.
pub fn bsm_protocol_behavior(v: f64) -> Result<Behavior> {
    let rho = werner(v)?;
    let (alice, charlie) = bsm_protocol_observables();
    bilocal_behavior(&rho, &rho, &alice, &partial_bsm(), &charlie)
}

/// Born-rule behavior of the `n`-star network. `states[k]` is ordered
/// `(branch_k, center_k)`; `central` acts on `center_1 ⊗ … ⊗ center_n`.
pub fn star_behavior(
    n: usize,
    states: &[StateMatrix],
    branch_obs: &[Vec<Observable>],
    central: &Measurement,
) -> Result<Behavior> {
    if n < 2 {
        return Err(Error::OutOfRange("star network needs n ≥ 2".into()));
    }
    if states.len() != n || branch_obs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: states.len().min(branch_obs.len()) });
    }
    if states.iter().any(|s| s.dim() != 4) {
        return Err(Error::InvalidQuantum("star sources must be two-qubit states".into()));
    }
    let half = 1usize << n;
    if central.dim() != half || central.len() != half {
        return Err(Error::InvalidQuantum(format!("central measurement must have {half} outcomes on {n} qubits")));
    }
    if branch_obs.iter().any(|o| o.len() != 2 || o.iter().any(|m| m.dim() != 2)) {
        return Err(Error::InvalidQuantum("each branch needs two qubit observables".into()));
    }

    let mut rho = states[0].matrix().clone();
    for s in &states[1..] {
        rho = kron(&rho, s.matrix());
    }
    // qubit 2k is branch k, 2k+1 is center k (MSB first); move to branches then centers
    let dim = half * half;
    let perm: Vec<usize> = (0..dim)
        .map(|i| {
            let mut j = 0;
            for k in 0..n {
                let br = (i >> (2 * n - 1 - 2 * k)) & 1;
                let ce = (i >> (2 * n - 2 - 2 * k)) & 1;
                j |= br << (2 * n - 1 - k);
                j |= ce << (n - 1 - k);
            }
            j
        })
        .collect();
    let mut shuffled = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            shuffled[(perm[i], perm[j])] = rho[(i, j)];
        }
    }

    // σ_b = Tr_center[(𝟙 ⊗ M_b) ρ] on the branch qubits
    let sigma: Vec<CMatrix> = central
        .elements()
        .iter()
        .map(|m| {
            let mut s = CMatrix::zeros(half, half);
            for r in 0..half {
                for cc in 0..half {
                    let mut acc = c(0.0, 0.0);
                    for u in 0..half {
                        for w in 0..half {
                            acc += m[(u, w)] * shuffled[(cc * half + w, r * half + u)];
                        }
                    }
                    // acc = Σ M_{uw} ρ_{(c,w),(r,u)} = (Tr_center[(𝟙⊗M)ρ])_{c,r}
                    s[(cc, r)] = acc;
                }
            }
            s
        })
        .collect();

    let proj: Vec<Vec<Vec<CMatrix>>> = branch_obs
        .iter()
        .map(|obs| obs.iter().map(|o| vec![o.projector(0), o.projector(1)]).collect())
        .collect();
    let mut cache = std::collections::HashMap::new();
    Behavior::from_fn(Scenario::star(n), |xs, os| {
        let key: Vec<usize> = xs[..n].iter().chain(&os[..n]).copied().collect();
        let op = cache.entry(key).or_insert_with(|| {
            let mut op = proj[0][xs[0]][os[0]].clone();
            for k in 1..n {
                op = kron(&op, &proj[k][xs[k]][os[k]]);
            }
            op
        });
        trace_prod(op, &sigma[os[n]]).max(0.0)
    })
}

/// Branch observables `(X+Y)/√2`, `(X−Y)/√2`.
pub fn star_branch_observables() -> Vec<Observable> {
    let r = FRAC_1_SQRT_2;
    vec![Observable::from_bloch([r, r, 0.0]).unwrap(), Observable::from_bloch([r, -r, 0.0]).unwrap()]
}

/// Werner sources of visibility `v`, GHZ-basis central measurement and
/// [`star_branch_observables`] on every branch.
pub fn star_protocol(n: usize, v: f64) -> Result<Behavior> {
    let obs = star_branch_observables();
    star_protocol_with(n, v, &vec![obs; n])
}

pub fn star_protocol_with(n: usize, v: f64, branch_obs: &[Vec<Observable>]) -> Result<Behavior> {
    let rho = werner(v)?;
    star_behavior(n, &vec![rho; n], branch_obs, &ghz_basis(n)?)
}

/// Observable on the Bloch sphere at polar angle `t`, azimuth `f`.
pub fn bloch_observable(t: f64, f: f64) -> Observable {
    Observable::from_bloch([t.sin() * f.cos(), t.sin() * f.sin(), t.cos()]).expect("unit Bloch vector")
}

/// Nelder–Mead minimization of `f` from `start` with initial step `step`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: f64,
    max_evals: usize,
    ftol: f64,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= ftol * (1.0 + vals[0].abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let xc = if fr < vals[n] { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            evals += 1;
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    for j in 0..n {
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    }
                    vals[i] = f(&simplex[i]);
                }
                evals += n;
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (simplex[best].clone(), vals[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singlet_properties() {
        let s = singlet();
        assert!((s.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!((s.purity() - 1.0).abs() < 1e-12);
        let zz = kron(&pauli_matrix(3), &pauli_matrix(3));
        assert!((s.expectation(&zz) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn werner_limits() {
        assert!(max_abs(&(werner(1.0).unwrap().matrix() - singlet().matrix())) < 1e-15);
        assert!(max_abs(&(werner(0.0).unwrap().matrix() - identity(4) * c(0.25, 0.0))) < 1e-15);
        assert!((werner(0.5).unwrap().purity() - 0.4375).abs() < 1e-12);
        assert!(werner(1.5).is_err());
    }

    #[test]
    fn ejm_vectors_are_orthonormal() {
        for theta in [0.0, 0.3, PI / 4.0, PI / 2.0] {
            let v = ejm_vectors(theta).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let ip: Complex64 = v[i].iter().zip(&v[j]).map(|(a, b)| a.conj() * b).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - c(want, 0.0)).norm() < 1e-12, "{theta} {i} {j}");
                }
            }
        }
        assert!(ejm_basis(2.0).is_err());
    }

    #[test]
    fn ejm_marginals_form_tetrahedron_at_zero() {
        let m = ejm_basis(0.0).unwrap();
        let mut sum = [0.0; 3];
        let mut norms = Vec::new();
        for e in m.elements() {
            // Bloch vector of the first qubit's reduced state
            let mut r = [0.0; 3];
            for (k, rk) in r.iter_mut().enumerate() {
                let op = kron(&pauli_matrix(k + 1), &identity(2));
                *rk = trace_prod(e, &op);
            }
            norms.push((r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt());
            for k in 0..3 {
                sum[k] += r[k];
            }
        }
        assert!(sum.iter().all(|s| s.abs() < 1e-10));
        assert!(norms.iter().all(|n| (n - norms[0]).abs() < 1e-10 && *n > 0.1));
    }

    #[test]
    fn ejm_at_right_angle_is_maximally_entangled() {
        // every element has maximally mixed single-qubit marginals, like a Bell basis
        let e = ejm_basis(PI / 2.0).unwrap();
        for p in e.elements() {
            for k in 1..=3 {
                assert!(trace_prod(p, &kron(&pauli_matrix(k), &identity(2))).abs() < 1e-12);
                assert!(trace_prod(p, &kron(&identity(2), &pauli_matrix(k))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn observables_and_paulis() {
        let x = pauli(1).unwrap();
        assert!(max_abs(&(x.matrix() * x.matrix() - identity(2))) < 1e-15);
        assert!(trace_prod(pauli(1).unwrap().matrix(), pauli(2).unwrap().matrix()).abs() < 1e-15);
        let (_, ch) = bsm_protocol_observables();
        let ev = (ch[0].matrix().clone()).symmetric_eigenvalues();
        let mut ev: Vec<f64> = ev.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        assert!(Observable::new(identity(2) * c(2.0, 0.0)).is_err());
        assert!(pauli(4).is_err());
    }

    #[test]
    fn partial_bsm_shape() {
        let m = partial_bsm();
        assert_eq!(m.len(), 3);
        let ev = m.elements()[2].clone().symmetric_eigenvalues();
        assert_eq!(ev.iter().filter(|&&l| l > 0.5).count(), 2);
    }

    #[test]
    fn ghz_basis_is_complete() {
        for n in 2..=4 {
            assert_eq!(ghz_basis(n).unwrap().len(), 1 << n);
        }
    }

    #[test]
    fn mixed_star_sources_give_flat_behavior() {
        let n = 3;
        let mixed = vec![StateMatrix::maximally_mixed(4); n];
        let obs = vec![star_branch_observables(); n];
        let b = star_behavior(n, &mixed, &obs, &ghz_basis(n).unwrap()).unwrap();
        let flat = 1.0 / b.scenario().num_output_settings() as f64;
        assert!(b.data().iter().all(|p| (p - flat).abs() < 1e-12));
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let (x, v) = nelder_mead(|p| (p[0] - 1.0).powi(2) + (p[1] + 2.0).powi(2), &[0.0, 0.0], 0.5, 5000, 1e-16);
        assert!(v < 1e-12 && (x[0] - 1.0).abs() < 1e-5 && (x[1] + 2.0).abs() < 1e-5);
    }
}
