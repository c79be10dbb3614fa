//! Pauli-basis state tomography (linear inversion and maximum likelihood)
//! and single-qubit process tomography.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::state::{
    c, identity, is_hermitian, ket, pauli_basis, CMatrix, CVector, DensityMatrix, TOL,
};

/// Analyzer basis for one qubit: H/V, +/−, R/L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
    Y,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Z, Basis::X, Basis::Y];

    pub fn letter(self) -> char {
        match self {
            Basis::Z => 'Z',
            Basis::X => 'X',
            Basis::Y => 'Y',
        }
    }

    fn from_letter(ch: char) -> Option<Basis> {
        match ch {
            'Z' => Some(Basis::Z),
            'X' => Some(Basis::X),
            'Y' => Some(Basis::Y),
            _ => None,
        }
    }

    /// Eigenvector for outcome `+1` (`plus`) or `−1`.
    pub fn ket(self, plus: bool) -> CVector {
        match (self, plus) {
            (Basis::Z, true) => ket::h(),
            (Basis::Z, false) => ket::v(),
            (Basis::X, true) => ket::plus(),
            (Basis::X, false) => ket::minus(),
            (Basis::Y, true) => ket::r(),
            (Basis::Y, false) => ket::l(),
        }
    }

    /// Index into [`pauli_basis`].
    fn pauli_index(self) -> usize {
        match self {
            Basis::X => 1,
            Basis::Y => 2,
            Basis::Z => 3,
        }
    }
}

/// One analyzer basis per qubit. Outcomes are ±1 per qubit and are written
/// as strings such as `"+-"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasurementSetting {
    bases: Vec<Basis>,
}

impl MeasurementSetting {
    pub fn new(bases: Vec<Basis>) -> Self {
        Self { bases }
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn num_qubits(&self) -> usize {
        self.bases.len()
    }

    pub fn id(&self) -> String {
        self.bases.iter().map(|b| b.letter()).collect()
    }

    pub fn parse(id: &str) -> Option<Self> {
        id.chars()
            .map(Basis::from_letter)
            .collect::<Option<Vec<_>>>()
            .map(Self::new)
    }

    /// Outcome labels in lexicographic order, `+` before `-`.
    pub fn outcomes(&self) -> Vec<String> {
        let n = self.num_qubits();
        (0..1usize << n)
            .map(|idx| {
                (0..n)
                    .map(|k| {
                        if (idx >> (n - 1 - k)) & 1 == 0 {
                            '+'
                        } else {
                            '-'
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn projector(&self, outcome: &str) -> Result<CMatrix> {
        if outcome.chars().count() != self.num_qubits() {
            return Err(Error::Tomography(format!(
                "outcome `{outcome}` does not match setting {}",
                self.id()
            )));
        }
        let mut psi = CVector::from_element(1, c(1., 0.));
        for (b, ch) in self.bases.iter().zip(outcome.chars()) {
            let plus = match ch {
                '+' => true,
                '-' => false,
                _ => return Err(Error::Tomography(format!("bad outcome symbol `{ch}`"))),
            };
            psi = psi.kronecker(&b.ket(plus));
        }
        Ok(&psi * psi.adjoint())
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// All `3^n` Pauli basis combinations.
pub fn settings(n: usize) -> Vec<MeasurementSetting> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                Basis::ALL.into_iter().map(move |b| {
                    let mut p = prefix.clone();
                    p.push(b);
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(MeasurementSetting::new).collect()
}

pub fn settings_1q() -> Vec<MeasurementSetting> {
    settings(1)
}

pub fn settings_2q() -> Vec<MeasurementSetting> {
    settings(2)
}

/// Outcome labels paired with a probability or frequency.
pub type OutcomeDistribution = Vec<(String, f64)>;

/// Born-rule probabilities for every setting, outcomes in
/// [`MeasurementSetting::outcomes`] order.
pub fn outcome_probabilities(
    rho: &DensityMatrix,
) -> Vec<(MeasurementSetting, OutcomeDistribution)> {
    settings(rho.num_qubits())
        .into_iter()
        .map(|s| {
            let probs = s
                .outcomes()
                .into_iter()
                .map(|o| {
                    let p = (rho.entries() * s.projector(&o).expect("valid outcome"))
                        .trace()
                        .re
                        .max(0.0);
                    (o, p)
                })
                .collect();
            (s, probs)
        })
        .collect()
}

/// Relative frequencies per setting, validated for completeness.
fn frequencies(
    counts: &CountTable,
    n: usize,
) -> Result<Vec<(MeasurementSetting, OutcomeDistribution)>> {
    let table = counts.by_setting();
    settings(n)
        .into_iter()
        .map(|s| {
            let id = s.id();
            let row = table
                .get(id.as_str())
                .ok_or_else(|| Error::Tomography(format!("missing setting {id}")))?;
            let total: f64 = row.values().sum();
            if total <= 0.0 {
                return Err(Error::Tomography(format!("no counts in setting {id}")));
            }
            let freqs = s
                .outcomes()
                .into_iter()
                .map(|o| {
                    let f = row.get(o.as_str()).copied().unwrap_or(0.0) / total;
                    (o, f)
                })
                .collect();
            Ok((s, freqs))
        })
        .collect()
}

fn check_labels(n: usize, labels: &[&str]) -> Result<()> {
    if labels.len() != n || n == 0 {
        return Err(Error::Tomography(format!(
            "{} labels for {n}-qubit tomography",
            labels.len()
        )));
    }
    Ok(())
}

/// Stokes reconstruction `ρ = 2^{-n} Σ ⟨P⟩ P`. Each Pauli expectation is the
/// mean over every setting whose bases agree on the non-identity factors.
/// The result is Hermitian with unit trace but can have negative eigenvalues.
pub fn linear_inversion(counts: &CountTable, labels: &[&str]) -> Result<DensityMatrix> {
    let n = labels.len();
    check_labels(n, labels)?;
    let freqs = frequencies(counts, n)?;
    let paulis = pauli_basis();
    let dim = 1usize << n;
    let mut rho = CMatrix::zeros(dim, dim);

    // Pauli strings encoded base-4 (0 = identity, 1..3 = X, Y, Z)
    for code in 0..(1usize << (2 * n)) {
        let string: Vec<usize> = (0..n).map(|k| (code >> (2 * (n - 1 - k))) & 3).collect();
        let mut sum = 0.0;
        let mut matches = 0usize;
        for (setting, fs) in &freqs {
            let compatible = string
                .iter()
                .zip(setting.bases())
                .all(|(&p, b)| p == 0 || p == b.pauli_index());
            if !compatible {
                continue;
            }
            matches += 1;
            for (outcome, f) in fs {
                let sign: f64 = string
                    .iter()
                    .zip(outcome.chars())
                    .filter(|(&p, _)| p != 0)
                    .map(|(_, ch)| if ch == '+' { 1.0 } else { -1.0 })
                    .product();
                sum += sign * f;
            }
        }
        let expectation = sum / matches as f64;
        let op = string
            .iter()
            .fold(CMatrix::from_element(1, 1, c(1., 0.)), |acc, &p| {
                acc.kronecker(&paulis[p])
            });
        rho += op * c(expectation / dim as f64, 0.);
    }
    let rho = (&rho + rho.adjoint()) * c(0.5, 0.);
    DensityMatrix::from_hermitian(rho, labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    /// Stop when the per-count log-likelihood gains less than this.
    pub tolerance: f64,
    /// Stop when the gradient norm drops below this.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            gradient_tolerance: 1e-7,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub state: DensityMatrix,
    /// Mean log-likelihood per count, `Σ f log p`.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Log-likelihood after every accepted step, starting from the initial point.
    pub history: Vec<f64>,
}

/// Likelihood objective over the lower-triangular factor `T`, `ρ = T†T / Tr`.
struct Likelihood {
    dim: usize,
    /// (projector, weight = count / total count)
    terms: Vec<(CMatrix, f64)>,
}

impl Likelihood {
    fn num_params(&self) -> usize {
        self.dim * self.dim
    }

    fn factor(&self, x: &DVector<f64>) -> CMatrix {
        let d = self.dim;
        let mut t = CMatrix::zeros(d, d);
        let mut k = 0;
        for i in 0..d {
            t[(i, i)] = c(x[k], 0.);
            k += 1;
        }
        for i in 0..d {
            for j in 0..i {
                t[(i, j)] = c(x[k], x[k + 1]);
                k += 2;
            }
        }
        t
    }

    fn rho(&self, x: &DVector<f64>) -> Option<(CMatrix, CMatrix, f64)> {
        let t = self.factor(x);
        let a = t.adjoint() * &t;
        let tr = a.trace().re;
        (tr > 0.0 && tr.is_finite()).then(|| (a.clone() / c(tr, 0.), t, tr))
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let Some((rho, _, _)) = self.rho(x) else {
            return f64::NEG_INFINITY;
        };
        let mut ll = 0.0;
        for (proj, w) in &self.terms {
            let p = (&rho * proj).trace().re;
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ll += w * p.ln();
        }
        ll
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        let (rho, t, tr) = self.rho(x).expect("gradient at a finite point");
        let mut r = CMatrix::zeros(d, d);
        for (proj, w) in &self.terms {
            let p = (&rho * proj).trace().re;
            r += proj * c(w / p, 0.);
        }
        let norm = (&r * &rho).trace().re;
        let g = r - identity(d) * c(norm, 0.);
        // dL = 2 Re Tr[G T† dT] / Tr A
        let gt = &g * t.adjoint();
        let scale = 2.0 / tr;
        let mut grad = DVector::zeros(self.num_params());
        let mut k = 0;
        for i in 0..d {
            grad[k] = scale * gt[(i, i)].re;
            k += 1;
        }
        for i in 0..d {
            for j in 0..i {
                let z = gt[(j, i)];
                grad[k] = scale * z.re;
                grad[k + 1] = -scale * z.im;
                k += 2;
            }
        }
        grad
    }
}

/// Maximum-likelihood state under the multinomial model, starting from the
/// maximally mixed state. Maximized with BFGS and a backtracking line search,
/// so the log-likelihood never decreases between iterations.
pub fn mle_fit_detailed(
    counts: &CountTable,
    labels: &[&str],
    options: &MleOptions,
) -> Result<MleFit> {
    let n = labels.len();
    check_labels(n, labels)?;
    frequencies(counts, n)?;
    let total = counts.total_corrected();
    let mut terms = Vec::new();
    for (setting_id, outcomes) in counts.by_setting() {
        let setting = MeasurementSetting::parse(setting_id)
            .filter(|s| s.num_qubits() == n)
            .ok_or_else(|| Error::Tomography(format!("unknown setting `{setting_id}`")))?;
        for (outcome, count) in outcomes {
            if count > 0.0 {
                terms.push((setting.projector(outcome)?, count / total));
            }
        }
    }
    let objective = Likelihood { dim: 1 << n, terms };

    let np = objective.num_params();
    let d = objective.dim;
    let mut x = DVector::zeros(np);
    for i in 0..d {
        x[i] = 1.0 / (d as f64).sqrt();
    }
    let mut f = objective.value(&x);
    let mut g = objective.gradient(&x);
    let mut h_inv = nalgebra::DMatrix::<f64>::identity(np, np);
    let mut history = vec![f];

    let finish =
        |x: &DVector<f64>, f: f64, iterations: usize, history: Vec<f64>| -> Result<MleFit> {
            let (rho, _, _) = objective.rho(x).expect("accepted iterate is finite");
            let state = DensityMatrix::from_unnormalized(rho, labels)?;
            Ok(MleFit {
                state,
                log_likelihood: f,
                iterations,
                history,
            })
        };

    for iter in 1..=options.max_iterations {
        if g.norm() < options.gradient_tolerance {
            return finish(&x, f, iter - 1, history);
        }
        // ascent direction
        let mut dir = &h_inv * &g;
        if dir.dot(&g) <= 0.0 {
            h_inv = nalgebra::DMatrix::identity(np, np);
            dir = g.clone();
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-20 {
            let trial = &x + &dir * step;
            let ft = objective.value(&trial);
            if ft.is_finite() && ft >= f + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // no ascent possible along any tried step: at the optimum to
            // numerical precision
            return finish(&x, f, iter - 1, history);
        };
        let g_new = objective.gradient(&x_new);
        let s = &x_new - &x;
        let y = &g - &g_new; // gradient of the minimized objective −L
        let sy = s.dot(&y);
        if sy > 1e-18 {
            let rho_k = 1.0 / sy;
            let i = nalgebra::DMatrix::<f64>::identity(np, np);
            let left = &i - &s * y.transpose() * rho_k;
            let right = &i - &y * s.transpose() * rho_k;
            h_inv = &left * &h_inv * &right + &s * s.transpose() * rho_k;
        }
        let improvement = f_new - f;
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        if improvement < options.tolerance && iter > 1 {
            return finish(&x, f, iter, history);
        }
    }
    let fit = finish(&x, f, options.max_iterations, history)?;
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        best: Box::new(fit.state),
    })
}

/// Maximum-likelihood state with default stopping rules.
pub fn mle_fit(counts: &CountTable, labels: &[&str]) -> Result<DensityMatrix> {
    mle_fit_detailed(counts, labels, &MleOptions::default()).map(|f| f.state)
}

/// Single-qubit channel `E(ρ) = Σ M_mn σ_m ρ σ_n` over `{1, σx, σy, σz}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    entries: CMatrix,
}

impl ProcessMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.shape() != (4, 4) {
            return Err(Error::DimensionMismatch(
                "process matrix must be 4x4".into(),
            ));
        }
        if !is_hermitian(&entries, TOL) {
            return Err(Error::InvalidState(
                "process matrix is not Hermitian".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// The identity channel: a single `(1, 1)` entry.
    pub fn identity_channel() -> Self {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1., 0.);
        Self { entries: m }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// The process matrix is unitarily related to the Choi operator, so its
    /// smallest eigenvalue decides complete positivity.
    pub fn min_eigenvalue(&self) -> f64 {
        crate::state::hermitian_eigenvalues(&self.entries)[0]
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let p = pauli_basis();
        let mut out = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                out += &p[m] * rho * &p[n] * self.entries[(m, n)];
            }
        }
        out
    }
}

/// Column-major vectorization.
fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Reconstructs the process matrix from input/output pairs whose inputs span
/// the qubit operator space. Linear solve, then Hermitian symmetrization.
pub fn process_tomo(pairs: &[(DensityMatrix, DensityMatrix)]) -> Result<ProcessMatrix> {
    if pairs.len() < 4 {
        return Err(Error::Tomography(format!(
            "process tomography needs 4 input states, got {}",
            pairs.len()
        )));
    }
    for (i, o) in pairs {
        if i.num_qubits() != 1 || o.num_qubits() != 1 {
            return Err(Error::DimensionMismatch(
                "process tomography is single-qubit".into(),
            ));
        }
    }
    let ins = CMatrix::from_columns(
        &pairs
            .iter()
            .map(|(i, _)| vec_of(i.entries()))
            .collect::<Vec<_>>(),
    );
    let outs = CMatrix::from_columns(
        &pairs
            .iter()
            .map(|(_, o)| vec_of(o.entries()))
            .collect::<Vec<_>>(),
    );
    let sv = ins.clone().singular_values();
    if sv.iter().filter(|s| **s > 1e-10).count() < 4 {
        return Err(Error::Tomography(
            "input states do not span the operator space".into(),
        ));
    }
    // superoperator S with vec(E(ρ)) = S vec(ρ), least squares over all pairs
    let pinv = ins
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Tomography(e.to_string()))?;
    let superop = &outs * pinv;

    // vec(σm ρ σn) = (σnᵀ ⊗ σm) vec(ρ)
    let p = pauli_basis();
    let mut basis = CMatrix::zeros(16, 16);
    for m in 0..4 {
        for n in 0..4 {
            let col = p[n].transpose().kronecker(&p[m]);
            basis.set_column(4 * m + n, &vec_of(&col));
        }
    }
    let coeffs = basis
        .lu()
        .solve(&vec_of(&superop))
        .ok_or_else(|| Error::Tomography("Pauli basis solve failed".into()))?;
    let m = CMatrix::from_fn(4, 4, |i, j| coeffs[4 * i + j]);
    let m = (&m + m.adjoint()) * c(0.5, 0.);
    ProcessMatrix::new(m)
}

/// `Re Tr[M_theo M_exp]`.
pub fn process_fidelity(exp: &ProcessMatrix, theo: &ProcessMatrix) -> f64 {
    (theo.entries() * exp.entries()).trace().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::CountRow;
    use crate::sources::{make_input, tomographic_input_set, InputSpec};
    use crate::state::{max_abs_diff, sigma_x, PureState};

    /// Exact probabilities as fractional "counts".
    pub(crate) fn exact_counts(rho: &DensityMatrix, scale: f64) -> CountTable {
        let mut t = CountTable::new();
        for (s, probs) in outcome_probabilities(rho) {
            for (o, p) in probs {
                let mut row = CountRow::new(s.id(), o, 0, 1.0).unwrap();
                row.corrected = p * scale;
                t.push(row);
            }
        }
        t
    }

    #[test]
    fn setting_counts() {
        let s1: Vec<String> = settings_1q().iter().map(|s| s.id()).collect();
        assert_eq!(s1, ["Z", "X", "Y"]);
        let s2 = settings_2q();
        assert_eq!(s2.len(), 9);
        assert_eq!(s2.iter().map(|s| s.outcomes().len()).sum::<usize>(), 36);
        for s in s2 {
            let sum = s
                .outcomes()
                .iter()
                .fold(CMatrix::zeros(4, 4), |acc, o| acc + s.projector(o).unwrap());
            assert!(max_abs_diff(&sum, &identity(4)) < 1e-12);
        }
    }

    #[test]
    fn linear_inversion_exact_h() {
        let h = make_input(&InputSpec::pure(crate::sources::InputState::H), "a").unwrap();
        let rec = linear_inversion(&exact_counts(&h, 1.0), &["a"]).unwrap();
        assert!(max_abs_diff(rec.entries(), h.entries()) < 1e-12);
    }

    #[test]
    fn linear_inversion_exact_tilde_bell() {
        let s = crate::protocols::tilde_bell(crate::protocols::TildeBell::PhiPlus, ["a", "d"])
            .to_density();
        let rec = linear_inversion(&exact_counts(&s, 1.0), &["a", "d"]).unwrap();
        assert!(max_abs_diff(rec.entries(), s.entries()) < 1e-12);
    }

    #[test]
    fn linear_inversion_errors() {
        let mut t = CountTable::new();
        t.push(CountRow::new("Z", "+", 5, 1.0).unwrap());
        assert!(linear_inversion(&t, &["a"]).is_err(), "missing settings");
        t.push(CountRow::new("X", "+", 0, 1.0).unwrap());
        t.push(CountRow::new("X", "-", 0, 1.0).unwrap());
        t.push(CountRow::new("Y", "+", 5, 1.0).unwrap());
        assert!(linear_inversion(&t, &["a"]).is_err(), "empty setting");
    }

    #[test]
    fn mle_all_zero_outcome_still_physical() {
        // +/− basis never fires on "+" and Z is lopsided: no physical state
        // reproduces these exactly
        let rows = vec![
            CountRow::new("Z", "+", 100, 1.0).unwrap(),
            CountRow::new("Z", "-", 0, 1.0).unwrap(),
            CountRow::new("X", "+", 0, 1.0).unwrap(),
            CountRow::new("X", "-", 100, 1.0).unwrap(),
            CountRow::new("Y", "+", 50, 1.0).unwrap(),
            CountRow::new("Y", "-", 50, 1.0).unwrap(),
        ];
        let t = CountTable::from_rows(rows);
        let lin = linear_inversion(&t, &["a"]).unwrap();
        assert!(!lin.is_physical());
        let fit = mle_fit(&t, &["a"]).unwrap();
        assert!(fit.is_physical());
        assert!((fit.entries().trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mle_recovers_exact_state() {
        let v = make_input(&InputSpec::pure(crate::sources::InputState::V), "a").unwrap();
        let fit = mle_fit_detailed(&exact_counts(&v, 1e6), &["a"], &MleOptions::default()).unwrap();
        let f = fit
            .state
            .fidelity_to_pure(&PureState::new(ket::v(), &["a"]).unwrap())
            .unwrap();
        assert!(f > 0.999, "fidelity {f}");
        for w in fit.history.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    fn channel_outputs<F: Fn(&CMatrix) -> CMatrix>(f: F) -> Vec<(DensityMatrix, DensityMatrix)> {
        tomographic_input_set()
            .iter()
            .map(|s| {
                let input = make_input(&InputSpec::pure(*s), "c").unwrap();
                let out = DensityMatrix::new(f(input.entries()), &["a"]).unwrap();
                (input, out)
            })
            .collect()
    }

    #[test]
    fn process_identity() {
        let m = process_tomo(&channel_outputs(|r| r.clone())).unwrap();
        assert!(max_abs_diff(m.entries(), ProcessMatrix::identity_channel().entries()) < 1e-10);
        assert!((process_fidelity(&m, &ProcessMatrix::identity_channel()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn process_bit_flip() {
        let x = sigma_x();
        let m = process_tomo(&channel_outputs(|r| &x * r * &x)).unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        expected[(1, 1)] = c(1., 0.);
        assert!(max_abs_diff(m.entries(), &expected) < 1e-10);
    }

    #[test]
    fn process_depolarizing() {
        let m = process_tomo(&channel_outputs(|_| identity(2) * c(0.5, 0.))).unwrap();
        assert!(max_abs_diff(m.entries(), &(identity(4) * c(0.25, 0.))) < 1e-10);
        let f = process_fidelity(&m, &ProcessMatrix::identity_channel());
        assert!((f - 0.25).abs() < 1e-10);
    }

    #[test]
    fn process_rank_deficient_inputs() {
        let h = make_input(&InputSpec::pure(crate::sources::InputState::H), "c").unwrap();
        let pairs = vec![(h.clone(), h.clone()); 4];
        assert!(process_tomo(&pairs).is_err());
    }
}
