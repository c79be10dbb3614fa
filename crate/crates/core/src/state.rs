//! Small-dimension complex linear algebra for polarization qubits.
//!
//! Basis convention: the k-th label of a state is the k-th most significant
//! bit of the basis index, with H = 0 and V = 1. So for labels `[a, b]` the
//! basis order is `HH, HV, VH, VV` and `kron` is the ordinary Kronecker
//! product.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Absolute tolerance for exact-arithmetic paths.
pub const TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)])
}

/// `{1, σx, σy, σz}` in that order.
pub fn pauli_basis() -> [CMatrix; 4] {
    [identity(2), sigma_x(), sigma_y(), sigma_z()]
}

/// Single-qubit polarization kets.
pub mod ket {
    use super::{c, CVector};
    use std::f64::consts::FRAC_1_SQRT_2 as S;

    pub fn h() -> CVector {
        CVector::from_vec(vec![c(1., 0.), c(0., 0.)])
    }
    pub fn v() -> CVector {
        CVector::from_vec(vec![c(0., 0.), c(1., 0.)])
    }
    /// +45° linear polarization.
    pub fn plus() -> CVector {
        CVector::from_vec(vec![c(S, 0.), c(S, 0.)])
    }
    /// −45° linear polarization.
    pub fn minus() -> CVector {
        CVector::from_vec(vec![c(S, 0.), c(-S, 0.)])
    }
    /// Right circular, (|H⟩ + i|V⟩)/√2.
    pub fn r() -> CVector {
        CVector::from_vec(vec![c(S, 0.), c(0., S)])
    }
    pub fn l() -> CVector {
        CVector::from_vec(vec![c(S, 0.), c(0., -S)])
    }
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Sum of singular values. Hermitian inputs go through the eigenvalues.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "trace norm needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if is_hermitian(m, TOL) {
        Ok(hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum())
    } else {
        Ok(m.clone().singular_values().iter().sum())
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn owned_labels(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

fn label_index(labels: &[String], label: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

fn join_labels(a: &[String], b: &[String]) -> Result<Vec<String>> {
    let mut out = a.to_vec();
    out.extend_from_slice(b);
    check_labels(&out)?;
    Ok(out)
}

/// Bit of qubit `k` (0 = first label) in basis index `idx` for an `n`-qubit register.
#[inline]
fn bit(idx: usize, k: usize, n: usize) -> usize {
    (idx >> (n - 1 - k)) & 1
}

/// Embeds an operator acting on the qubits `targets` (in that order) into the
/// full register described by `labels`.
pub fn embed_operator(op: &CMatrix, targets: &[&str], labels: &[String]) -> Result<CMatrix> {
    let n = labels.len();
    let t = targets.len();
    if op.nrows() != 1 << t || op.ncols() != 1 << t {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but acts on {} qubits",
            op.nrows(),
            op.ncols(),
            t
        )));
    }
    let pos: Vec<usize> = targets
        .iter()
        .map(|l| label_index(labels, l))
        .collect::<Result<_>>()?;
    check_labels(&owned_labels(targets))?;
    let mut target_mask = 0usize;
    for &p in &pos {
        target_mask |= 1 << (n - 1 - p);
    }
    let sub = |idx: usize| -> usize {
        pos.iter()
            .fold(0usize, |acc, &p| (acc << 1) | bit(idx, p, n))
    };
    let dim = 1 << n;
    let mut full = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for col in 0..dim {
            if r & !target_mask == col & !target_mask {
                full[(r, col)] = op[(sub(r), sub(col))];
            }
        }
    }
    Ok(full)
}

/// Normalized state vector over labelled qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
    labels: Vec<String>,
}

impl PureState {
    pub fn new(amplitudes: CVector, labels: &[&str]) -> Result<Self> {
        Self::from_owned(amplitudes, owned_labels(labels))
    }

    fn from_owned(amplitudes: CVector, labels: Vec<String>) -> Result<Self> {
        check_labels(&labels)?;
        if amplitudes.len() != 1 << labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {} qubits",
                amplitudes.len(),
                labels.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, labels })
    }

    /// Normalizes `amplitudes` before validation.
    pub fn normalized(amplitudes: CVector, labels: &[&str]) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(amplitudes / c(norm, 0.), labels)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn kron(&self, other: &PureState) -> Result<PureState> {
        Ok(PureState {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
            labels: join_labels(&self.labels, &other.labels)?,
        })
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "inner product of {}- and {}-dimensional states",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            entries: &self.amplitudes * self.amplitudes.adjoint(),
            labels: self.labels.clone(),
        }
    }

    pub fn relabel(&self, labels: &[&str]) -> Result<PureState> {
        PureState::new(self.amplitudes.clone(), labels)
    }
}

/// Hermitian, unit-trace matrix over labelled qubits.
///
/// States built with [`DensityMatrix::new`] are also positive semidefinite;
/// [`DensityMatrix::from_hermitian`] skips that check for estimators such as
/// linear inversion that can leave the physical set.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    labels: Vec<String>,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix, labels: &[&str]) -> Result<Self> {
        let rho = Self::from_hermitian(entries, labels)?;
        let min = rho.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    pub fn from_hermitian(entries: CMatrix, labels: &[&str]) -> Result<Self> {
        Self::validated(entries, owned_labels(labels))
    }

    fn validated(entries: CMatrix, labels: Vec<String>) -> Result<Self> {
        check_labels(&labels)?;
        let dim = 1 << labels.len();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for {} qubits",
                entries.nrows(),
                entries.ncols(),
                labels.len()
            )));
        }
        if !is_hermitian(&entries, TOL) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        Ok(Self { entries, labels })
    }

    /// Normalizes a positive (possibly unnormalized) operator by its trace.
    pub fn from_unnormalized(entries: CMatrix, labels: &[&str]) -> Result<Self> {
        let tr = entries.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState(format!("non-positive trace {tr}")));
        }
        let hermitian = (&entries + entries.adjoint()) * c(0.5 / tr, 0.);
        Self::new(hermitian, labels)
    }

    pub fn maximally_mixed(labels: &[&str]) -> Result<Self> {
        let dim = 1 << labels.len();
        Self::new(identity(dim) / c(dim as f64, 0.), labels)
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_refs(&self) -> Vec<&str> {
        self.labels.iter().map(String::as_str).collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.entries)
            .first()
            .copied()
            .unwrap_or(0.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            entries: self.entries.kronecker(&other.entries),
            labels: join_labels(&self.labels, &other.labels)?,
        })
    }

    /// Traces out every qubit not in `keep`. The result keeps the original
    /// label order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix> {
        for l in keep {
            label_index(&self.labels, l)?;
        }
        check_labels(&owned_labels(keep))?;
        let n = self.num_qubits();
        let kept: Vec<usize> = (0..n)
            .filter(|&k| keep.contains(&self.labels[k].as_str()))
            .collect();
        let traced: Vec<usize> = (0..n).filter(|k| !kept.contains(k)).collect();

        let compose = |kept_bits: usize, traced_bits: usize| -> usize {
            let mut idx = 0usize;
            for (j, &k) in kept.iter().enumerate() {
                let b = (kept_bits >> (kept.len() - 1 - j)) & 1;
                idx |= b << (n - 1 - k);
            }
            for (j, &k) in traced.iter().enumerate() {
                let b = (traced_bits >> (traced.len() - 1 - j)) & 1;
                idx |= b << (n - 1 - k);
            }
            idx
        };

        let kdim = 1 << kept.len();
        let tdim = 1 << traced.len();
        let mut out = CMatrix::zeros(kdim, kdim);
        for i in 0..kdim {
            for j in 0..kdim {
                out[(i, j)] = (0..tdim)
                    .map(|t| self.entries[(compose(i, t), compose(j, t))])
                    .sum();
            }
        }
        Ok(DensityMatrix {
            entries: out,
            labels: kept.iter().map(|&k| self.labels[k].clone()).collect(),
        })
    }

    /// Returns the same state with its qubits listed in `order`.
    pub fn reorder(&self, order: &[&str]) -> Result<DensityMatrix> {
        if order.len() != self.num_qubits() {
            return Err(Error::DimensionMismatch(format!(
                "reorder needs all {} labels, got {}",
                self.num_qubits(),
                order.len()
            )));
        }
        let n = order.len();
        let src: Vec<usize> = order
            .iter()
            .map(|l| label_index(&self.labels, l))
            .collect::<Result<_>>()?;
        check_labels(&owned_labels(order))?;
        // new index bit j == old index bit src[j]
        let map = |new_idx: usize| -> usize {
            (0..n).fold(0usize, |acc, j| {
                acc | (bit(new_idx, j, n) << (n - 1 - src[j]))
            })
        };
        let dim = self.dim();
        let perm: Vec<usize> = (0..dim).map(map).collect();
        let entries = CMatrix::from_fn(dim, dim, |i, j| self.entries[(perm[i], perm[j])]);
        Ok(DensityMatrix {
            entries,
            labels: owned_labels(order),
        })
    }

    pub fn relabel(&self, labels: &[&str]) -> Result<DensityMatrix> {
        if labels.len() != self.num_qubits() {
            return Err(Error::DimensionMismatch(
                "relabel changes qubit count".into(),
            ));
        }
        let labels = owned_labels(labels);
        check_labels(&labels)?;
        Ok(DensityMatrix {
            entries: self.entries.clone(),
            labels,
        })
    }

    /// `U ρ U†` with `U` acting on `targets`.
    pub fn conjugate(&self, unitary: &CMatrix, targets: &[&str]) -> Result<DensityMatrix> {
        let u = embed_operator(unitary, targets, &self.labels)?;
        let entries = &u * &self.entries * u.adjoint();
        Ok(DensityMatrix {
            entries: (&entries + entries.adjoint()) * c(0.5, 0.),
            labels: self.labels.clone(),
        })
    }

    /// Partial transpose over the qubit `label`.
    pub fn partial_transpose(&self, label: &str) -> Result<CMatrix> {
        let n = self.num_qubits();
        let k = label_index(&self.labels, label)?;
        let mask = 1 << (n - 1 - k);
        let dim = self.dim();
        Ok(CMatrix::from_fn(dim, dim, |i, j| {
            if (i & mask) == (j & mask) {
                self.entries[(i, j)]
            } else {
                // swap the bit of qubit k between row and column
                self.entries[(i ^ mask, j ^ mask)]
            }
        }))
    }

    pub fn fidelity_to_pure(&self, target: &PureState) -> Result<f64> {
        if target.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "fidelity of {}-dim state against {}-dim target",
                self.dim(),
                target.dim()
            )));
        }
        let psi = target.amplitudes();
        Ok((psi.adjoint() * &self.entries * psi)[(0, 0)].re)
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("trace distance".into()));
        }
        Ok(0.5 * trace_norm(&(&self.entries - &other.entries))?)
    }
}

/// Either kind of state, for operations that accept both.
#[derive(Debug, Clone, PartialEq)]
pub enum QState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

/// Tensor product of two states of the same kind.
pub fn kron(a: &QState, b: &QState) -> Result<QState> {
    match (a, b) {
        (QState::Pure(x), QState::Pure(y)) => Ok(QState::Pure(x.kron(y)?)),
        (QState::Mixed(x), QState::Mixed(y)) => Ok(QState::Mixed(x.kron(y)?)),
        _ => Err(Error::KindMismatch),
    }
}

/// Hermitian operator over labelled qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    entries: CMatrix,
    labels: Vec<String>,
}

impl Observable {
    pub fn new(entries: CMatrix, labels: &[&str]) -> Result<Self> {
        let labels = owned_labels(labels);
        check_labels(&labels)?;
        if entries.nrows() != 1 << labels.len() || !entries.is_square() {
            return Err(Error::DimensionMismatch("observable size".into()));
        }
        if !is_hermitian(&entries, TOL) {
            return Err(Error::InvalidState("observable is not Hermitian".into()));
        }
        Ok(Self { entries, labels })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Product observable on disjoint qubits.
    pub fn tensor(&self, other: &Observable) -> Result<Observable> {
        Ok(Observable {
            entries: self.entries.kronecker(&other.entries),
            labels: join_labels(&self.labels, &other.labels)?,
        })
    }

    pub fn relabel(&self, labels: &[&str]) -> Result<Observable> {
        Observable::new(self.entries.clone(), labels)
    }
}

/// ±1-valued observable for a linear polarizer at `theta_deg`:
/// `cos 2θ σz + sin 2θ σx`.
pub fn analyzer_observable(theta_deg: f64, label: &str) -> Observable {
    let t = 2.0 * theta_deg.to_radians();
    let m = sigma_z() * c(t.cos(), 0.) + sigma_x() * c(t.sin(), 0.);
    Observable {
        entries: m,
        labels: vec![label.to_string()],
    }
}

/// `Tr[ρ O]`, where the observable's labels select the qubits it acts on.
pub fn expectation(rho: &DensityMatrix, obs: &Observable) -> Result<f64> {
    let targets: Vec<&str> = obs.labels.iter().map(String::as_str).collect();
    let full = embed_operator(&obs.entries, &targets, &rho.labels)?;
    let v = (&rho.entries * full).trace();
    if v.im.abs() > 1e-8 {
        return Err(Error::InvalidState(format!(
            "expectation has imaginary part {:e}",
            v.im
        )));
    }
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn phi_plus(labels: &[&str]) -> PureState {
        let s = FRAC_1_SQRT_2;
        PureState::new(
            CVector::from_vec(vec![c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)]),
            labels,
        )
        .unwrap()
    }

    #[test]
    fn kron_basis_states() {
        let h1 = PureState::new(ket::h(), &["a"]).unwrap();
        let h2 = PureState::new(ket::h(), &["b"]).unwrap();
        let hh = h1.kron(&h2).unwrap();
        let expected = [1.0, 0.0, 0.0, 0.0];
        for (z, e) in hh.amplitudes().iter().zip(expected) {
            assert!((z - c(e, 0.)).norm() < 1e-15);
        }
        assert_eq!(hh.labels(), ["a", "b"]);
    }

    #[test]
    fn kron_two_bell_pairs() {
        let p = phi_plus(&["a", "b"]).kron(&phi_plus(&["c", "d"])).unwrap();
        for (i, z) in p.amplitudes().iter().enumerate() {
            let expected = if [0b0000, 0b0011, 0b1100, 0b1111].contains(&i) {
                0.5
            } else {
                0.0
            };
            assert!((z - c(expected, 0.)).norm() < 1e-15, "index {i}");
        }
    }

    #[test]
    fn kron_mixed_identity() {
        let a = DensityMatrix::maximally_mixed(&["a"]).unwrap();
        let b = DensityMatrix::maximally_mixed(&["b"]).unwrap();
        let ab = a.kron(&b).unwrap();
        assert!(max_abs_diff(ab.entries(), &(identity(4) * c(0.25, 0.))) < 1e-15);
    }

    #[test]
    fn kron_kind_mismatch() {
        let p = QState::Pure(PureState::new(ket::h(), &["a"]).unwrap());
        let m = QState::Mixed(DensityMatrix::maximally_mixed(&["b"]).unwrap());
        assert!(matches!(kron(&p, &m), Err(Error::KindMismatch)));
        assert!(kron(&p, &p).is_err(), "duplicate labels");
    }

    #[test]
    fn partial_trace_examples() {
        let bell = phi_plus(&["a", "b"]).to_density();
        let ra = bell.partial_trace(&["a"]).unwrap();
        assert!(max_abs_diff(ra.entries(), &(identity(2) * c(0.5, 0.))) < TOL);

        let hv = PureState::new(ket::h(), &["a"])
            .unwrap()
            .kron(&PureState::new(ket::v(), &["b"]).unwrap())
            .unwrap()
            .to_density();
        let rb = hv.partial_trace(&["b"]).unwrap();
        let vv = &ket::v() * ket::v().adjoint();
        assert!(max_abs_diff(rb.entries(), &vv) < TOL);
        assert_eq!(rb.labels(), ["b"]);

        assert!(matches!(
            bell.partial_trace(&["z"]),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn partial_trace_werner_marginal() {
        // Werner p = 0.5: 0.5 |φ+><φ+| + 0.5 I/4, written out entry by entry.
        let mut m = CMatrix::zeros(4, 4);
        for i in 0..4 {
            m[(i, i)] = c(0.125, 0.);
        }
        m[(0, 0)] += c(0.25, 0.);
        m[(3, 3)] += c(0.25, 0.);
        m[(0, 3)] = c(0.25, 0.);
        m[(3, 0)] = c(0.25, 0.);
        let w = DensityMatrix::new(m, &["a", "b"]).unwrap();
        let ra = w.partial_trace(&["a"]).unwrap();
        assert!(max_abs_diff(ra.entries(), &(identity(2) * c(0.5, 0.))) < TOL);
    }

    #[test]
    fn analyzer_examples() {
        let z = analyzer_observable(0.0, "a");
        assert!(max_abs_diff(z.entries(), &sigma_z()) < 1e-15);
        let x = analyzer_observable(-45.0, "a");
        assert!(max_abs_diff(x.entries(), &(-sigma_x())) < 1e-15);
        let d = analyzer_observable(-22.5, "a");
        let expected = (sigma_z() - sigma_x()) * c(FRAC_1_SQRT_2, 0.);
        assert!(max_abs_diff(d.entries(), &expected) < 1e-15);
    }

    #[test]
    fn expectation_examples() {
        let bell = phi_plus(&["a", "b"]).to_density();
        let zz = analyzer_observable(0.0, "a")
            .tensor(&analyzer_observable(0.0, "b"))
            .unwrap();
        assert!((expectation(&bell, &zz).unwrap() - 1.0).abs() < TOL);

        let mixed = DensityMatrix::maximally_mixed(&["a", "b"]).unwrap();
        let prod = analyzer_observable(13.0, "a")
            .tensor(&analyzer_observable(-71.0, "b"))
            .unwrap();
        assert!(expectation(&mixed, &prod).unwrap().abs() < TOL);

        // single-qubit observable on the second qubit only
        let zb = analyzer_observable(0.0, "b");
        assert!(expectation(&bell, &zb).unwrap().abs() < TOL);
    }

    #[test]
    fn expectation_tilde_bell_zx() {
        // |φ̃+> = (|HH> + |HV> + |VH> - |VV>)/2; brute-force <σz ⊗ σx>.
        let psi = CVector::from_vec(vec![c(0.5, 0.), c(0.5, 0.), c(0.5, 0.), c(-0.5, 0.)]);
        let zx = sigma_z().kronecker(&sigma_x());
        let mut brute = c(0., 0.);
        for i in 0..4 {
            for j in 0..4 {
                brute += psi[i].conj() * zx[(i, j)] * psi[j];
            }
        }
        let rho = PureState::new(psi, &["a", "b"]).unwrap().to_density();
        let obs = Observable::new(zx, &["a", "b"]).unwrap();
        assert!((expectation(&rho, &obs).unwrap() - brute.re).abs() < TOL);
        // φ̃+ = (1 ⊗ Had)φ+, so ⟨σz ⊗ σx⟩ reduces to ⟨σz ⊗ σz⟩ on φ+
        assert!((brute.re - 1.0).abs() < TOL);
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm(&identity(2)).unwrap() - 2.0).abs() < TOL);
        assert!((trace_norm(&sigma_z()).unwrap() - 2.0).abs() < TOL);
        let pt = phi_plus(&["a", "b"])
            .to_density()
            .partial_transpose("b")
            .unwrap();
        let ev = hermitian_eigenvalues(&pt);
        assert!((ev[0] + 0.5).abs() < TOL);
        assert!((trace_norm(&pt).unwrap() - 2.0).abs() < TOL);
        assert!(trace_norm(&CMatrix::zeros(2, 3)).is_err());
        // non-Hermitian path
        let m = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(2., 0.), c(0., 0.), c(0., 0.)]);
        assert!((trace_norm(&m).unwrap() - 2.0).abs() < TOL);
    }

    #[test]
    fn reorder_and_embed_agree() {
        let hv = PureState::new(ket::h(), &["a"])
            .unwrap()
            .kron(&PureState::new(ket::v(), &["b"]).unwrap())
            .unwrap()
            .to_density();
        let vh = hv.reorder(&["b", "a"]).unwrap();
        assert!((vh.entries()[(2, 2)].re - 1.0).abs() < 1e-15);
        let x_on_b = hv.conjugate(&sigma_x(), &["b"]).unwrap();
        assert!((x_on_b.entries()[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_validation() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.)]);
        assert!(DensityMatrix::new(bad.clone(), &["a"]).is_err());
        assert!(DensityMatrix::from_hermitian(bad, &["a"]).is_ok());
        let not_herm =
            CMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0.1, 0.), c(0., 0.), c(0.5, 0.)]);
        assert!(DensityMatrix::new(not_herm, &["a"]).is_err());
    }
}
