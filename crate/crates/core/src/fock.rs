//! Two-photon Fock-space model of the three-PDBS CPHASE gate.
//!
//! Photons carry a spatial port, a polarization and a two-level internal
//! label standing in for the spectral/temporal wavepacket. The gate photon
//! from input port 0 is always in internal state 0; the one from input port 1
//! has overlap `v` with it. Post-selecting one photon per output port and
//! tracing out the internal labels gives a Kraus set on the polarization
//! qubits.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::state::{c, CMatrix, CVector, DensityMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    /// Spatial mode 0 or 1.
    Mode(u8),
    /// Loss sink fed by the attenuator on output mode `k`.
    Sink(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }

    pub fn from_index(i: usize) -> Pol {
        if i == 0 {
            Pol::H
        } else {
            Pol::V
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhotonMode {
    pub port: Port,
    pub pol: Pol,
    pub internal: u8,
}

impl PhotonMode {
    pub fn new(port: Port, pol: Pol, internal: u8) -> Self {
        Self {
            port,
            pol,
            internal,
        }
    }
}

/// Amplitudes over occupation-number basis states. Each key is the sorted
/// multiset of occupied photon modes; values are amplitudes of the
/// normalized Fock states `Π (a†)^n / √n! |0⟩`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockState {
    terms: BTreeMap<Vec<PhotonMode>, C64>,
}

fn factorial_weight(modes: &[PhotonMode]) -> f64 {
    // √(Π n_i!) over repeated modes in a sorted multiset
    let mut w = 1.0;
    let mut run = 1usize;
    for i in 1..=modes.len() {
        if i < modes.len() && modes[i] == modes[i - 1] {
            run += 1;
        } else {
            for k in 2..=run {
                w *= k as f64;
            }
            run = 1;
        }
    }
    w.sqrt()
}

impl FockState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `amp` to the normalized basis state with the given photons.
    pub fn add(&mut self, mut modes: Vec<PhotonMode>, amp: C64) {
        modes.sort();
        *self.terms.entry(modes).or_insert(c(0., 0.)) += amp;
    }

    /// Adds `coef · Π a†` (a creation-operator monomial applied to vacuum).
    fn add_monomial(&mut self, mut modes: Vec<PhotonMode>, coef: C64) {
        modes.sort();
        let w = factorial_weight(&modes);
        *self.terms.entry(modes).or_insert(c(0., 0.)) += coef * w;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[PhotonMode], C64)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn amplitude(&self, modes: &[PhotonMode]) -> C64 {
        let mut key = modes.to_vec();
        key.sort();
        self.terms.get(&key).copied().unwrap_or(c(0., 0.))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|z| z.norm_sqr()).sum()
    }

    pub fn photon_number(&self) -> Option<usize> {
        let mut counts = self.terms.keys().map(Vec::len);
        let first = counts.next()?;
        counts.all(|n| n == first).then_some(first)
    }

    /// Substitutes every creation operator by a linear combination of
    /// output creation operators and re-expands.
    fn transform<F>(&self, map: F) -> FockState
    where
        F: Fn(PhotonMode) -> Vec<(PhotonMode, C64)>,
    {
        let mut out = FockState::new();
        for (modes, amp) in &self.terms {
            let coef = *amp / factorial_weight(modes);
            let images: Vec<Vec<(PhotonMode, C64)>> = modes.iter().map(|m| map(*m)).collect();
            let mut partial: Vec<(Vec<PhotonMode>, C64)> = vec![(Vec::new(), coef)];
            for image in &images {
                let mut next = Vec::with_capacity(partial.len() * image.len());
                for (prefix, z) in &partial {
                    for (m, w) in image {
                        let mut p = prefix.clone();
                        p.push(*m);
                        next.push((p, z * w));
                    }
                }
                partial = next;
            }
            for (m, z) in partial {
                out.add_monomial(m, z);
            }
        }
        out.terms.retain(|_, z| z.norm() > 1e-300);
        out
    }
}

/// Polarization-dependent beam splitter: intensity transmissions for H and V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdbsSpec {
    t_h: f64,
    t_v: f64,
}

impl PdbsSpec {
    pub fn new(t_h: f64, t_v: f64) -> Result<Self> {
        for (name, t) in [("T_H", t_h), ("T_V", t_v)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::OutOfRange(format!("{name} = {t} outside [0, 1]")));
            }
        }
        Ok(Self { t_h, t_v })
    }

    /// Central element: H fully transmitted, V transmitted with 1/3.
    pub fn central() -> Self {
        Self {
            t_h: 1.0,
            t_v: 1.0 / 3.0,
        }
    }

    /// Output equalizers: reversed ratios.
    pub fn equalizer() -> Self {
        Self {
            t_h: 1.0 / 3.0,
            t_v: 1.0,
        }
    }

    pub fn transmission(&self, pol: Pol) -> f64 {
        match pol {
            Pol::H => self.t_h,
            Pol::V => self.t_v,
        }
    }
}

/// Interferes spatial modes 0 and 1: transmission is real, reflection picks
/// up a factor `i`.
pub fn pdbs_apply(state: &FockState, spec: &PdbsSpec) -> Result<FockState> {
    if state
        .terms
        .keys()
        .flatten()
        .any(|m| matches!(m.port, Port::Sink(_)))
    {
        return Err(Error::PhotonInSink);
    }
    Ok(state.transform(|m| {
        let Port::Mode(k) = m.port else {
            unreachable!("sinks rejected above")
        };
        let t = spec.transmission(m.pol);
        let same = PhotonMode::new(Port::Mode(k), m.pol, m.internal);
        let other = PhotonMode::new(Port::Mode(1 - k), m.pol, m.internal);
        vec![(same, c(t.sqrt(), 0.)), (other, c(0., (1.0 - t).sqrt()))]
    }))
}

/// Attenuates each photon by `√T_p`; the reflected part goes to the sink of
/// its output mode. Photons already in a sink stay there.
pub fn output_attenuators(state: &FockState, spec: &PdbsSpec) -> FockState {
    state.transform(|m| match m.port {
        Port::Mode(k) => {
            let t = spec.transmission(m.pol);
            vec![
                (m, c(t.sqrt(), 0.)),
                (
                    PhotonMode::new(Port::Sink(k), m.pol, m.internal),
                    c(0., (1.0 - t).sqrt()),
                ),
            ]
        }
        Port::Sink(_) => vec![(m, c(1., 0.))],
    })
}

/// Coincidence amplitudes grouped by the internal labels of the photons in
/// output modes 0 and 1. Each entry holds amplitudes indexed by output
/// polarization `2·pol₀ + pol₁`.
pub type CoincidenceBlock = BTreeMap<(u8, u8), [C64; 4]>;

/// Keeps only terms with exactly one photon in each spatial output mode.
pub fn coincidence_block(state: &FockState) -> CoincidenceBlock {
    let mut block = CoincidenceBlock::new();
    for (modes, amp) in &state.terms {
        let [first, second] = modes.as_slice() else {
            continue;
        };
        let (m0, m1) = match (first.port, second.port) {
            (Port::Mode(0), Port::Mode(1)) => (first, second),
            (Port::Mode(1), Port::Mode(0)) => (second, first),
            _ => continue,
        };
        let row = 2 * m0.pol.index() + m1.pol.index();
        block
            .entry((m0.internal, m1.internal))
            .or_insert([c(0., 0.); 4])[row] += *amp;
    }
    block
}

/// Mode overlap between the two gate photons' internal wavepackets.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Overlap(f64);

impl Overlap {
    pub fn new(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(Error::OutOfRange(format!("overlap v = {v} outside [0, 1]")));
        }
        Ok(Self(v))
    }

    pub fn ideal() -> Self {
        Self(1.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Builds the two-photon input for polarization amplitudes `psi` (order
/// HH, HV, VH, VV over the photons entering ports 0 and 1).
pub fn gate_input(psi: &CVector, v: Overlap) -> FockState {
    assert_eq!(psi.len(), 4, "two-qubit amplitude vector expected");
    let parallel = v.value();
    let orthogonal = (1.0 - parallel * parallel).max(0.0).sqrt();
    let mut state = FockState::new();
    for (idx, amp) in psi.iter().enumerate() {
        let pb = Pol::from_index(idx >> 1);
        let pc = Pol::from_index(idx & 1);
        let b = PhotonMode::new(Port::Mode(0), pb, 0);
        for (internal, w) in [(0u8, parallel), (1u8, orthogonal)] {
            if w > 0.0 {
                state.add(
                    vec![b, PhotonMode::new(Port::Mode(1), pc, internal)],
                    amp * w,
                );
            }
        }
    }
    state
}

/// Propagates a gate input through the central PDBS and both equalizers.
pub fn propagate_gate(input: &FockState) -> Result<FockState> {
    let mixed = pdbs_apply(input, &PdbsSpec::central())?;
    Ok(output_attenuators(&mixed, &PdbsSpec::equalizer()))
}

/// Probability of each output polarization pattern (HH, HV, VH, VV) on
/// coincidence, summed over internal labels.
pub fn coincidence_distribution(state: &FockState) -> [f64; 4] {
    let mut probs = [0.0; 4];
    for amps in coincidence_block(state).values() {
        for (p, a) in probs.iter_mut().zip(amps) {
            *p += a.norm_sqr();
        }
    }
    probs
}

/// Post-selected gate as a trace-decreasing CP map on (b, c) polarizations.
#[derive(Debug, Clone, PartialEq)]
pub struct GateChannel {
    overlap: Overlap,
    kraus: Vec<CMatrix>,
}

impl GateChannel {
    pub fn from_kraus(overlap: Overlap, kraus: Vec<CMatrix>) -> Self {
        Self { overlap, kraus }
    }

    pub fn overlap(&self) -> Overlap {
        self.overlap
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `Σ K†K`; success probability of ρ is `Tr[ρ Σ K†K]`.
    pub fn effect(&self) -> CMatrix {
        self.kraus
            .iter()
            .fold(CMatrix::zeros(4, 4), |acc, k| acc + k.adjoint() * k)
    }

    /// `Σ K ρ K†` without normalization.
    pub fn apply_unnormalized(&self, rho: &CMatrix) -> CMatrix {
        self.kraus
            .iter()
            .fold(CMatrix::zeros(4, 4), |acc, k| acc + k * rho * k.adjoint())
    }

    pub fn success_probability(&self, rho: &DensityMatrix) -> f64 {
        (rho.entries() * self.effect()).trace().re
    }
}

/// Extracts the Kraus set of the post-selected gate by propagating each
/// computational basis input through the Fock model.
pub fn gate_channel(v: Overlap) -> Result<GateChannel> {
    let mut columns: BTreeMap<(u8, u8), CMatrix> = BTreeMap::new();
    for input in 0..4 {
        let mut psi = CVector::zeros(4);
        psi[input] = c(1., 0.);
        let out = propagate_gate(&gate_input(&psi, v))?;
        for (config, amps) in coincidence_block(&out) {
            let k = columns
                .entry(config)
                .or_insert_with(|| CMatrix::zeros(4, 4));
            for (row, a) in amps.iter().enumerate() {
                k[(row, input)] = *a;
            }
        }
    }
    let kraus = columns.into_values().filter(|k| k.norm() > 1e-14).collect();
    Ok(GateChannel { overlap: v, kraus })
}

/// Applies the post-selected gate and renormalizes.
pub fn apply_channel(rho: &DensityMatrix, channel: &GateChannel) -> Result<(DensityMatrix, f64)> {
    if rho.num_qubits() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "gate acts on 2 qubits, state has {}",
            rho.num_qubits()
        )));
    }
    let out = channel.apply_unnormalized(rho.entries());
    let p = out.trace().re;
    if p < 1e-15 {
        return Err(Error::NoSuccess(p));
    }
    let labels = rho.label_refs();
    Ok((DensityMatrix::from_unnormalized(out, &labels)?, p))
}

/// `diag(1, 1, 1, −1)`.
pub fn cphase_matrix() -> CMatrix {
    let mut m = CMatrix::identity(4, 4);
    m[(3, 3)] = c(-1., 0.);
    m
}

/// Input basis states and their ideal CPHASE images with the common success
/// probability, for printing the gate truth table.
pub fn truth_table(v: Overlap) -> Result<Vec<TruthRow>> {
    let channel = gate_channel(v)?;
    let names = ["HH", "HV", "VH", "VV"];
    let mut rows = Vec::with_capacity(4);
    for (idx, name) in names.iter().enumerate() {
        let mut psi = CVector::zeros(4);
        psi[idx] = c(1., 0.);
        let rho = &psi * psi.adjoint();
        let out = channel.apply_unnormalized(&rho);
        let success = out.trace().re;
        // amplitude of the coherent (first) Kraus operator on the same basis state
        let amplitude = channel
            .kraus_ops()
            .first()
            .map(|k| k[(idx, idx)])
            .unwrap_or(c(0., 0.));
        rows.push(TruthRow {
            input: name.to_string(),
            output: name.to_string(),
            amplitude,
            success_probability: success,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub input: String,
    pub output: String,
    pub amplitude: C64,
    pub success_probability: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{max_abs_diff, PureState, TOL};

    fn photon(port: u8, pol: Pol, internal: u8) -> PhotonMode {
        PhotonMode::new(Port::Mode(port), pol, internal)
    }

    #[test]
    fn h_photon_fully_transmitted() {
        let mut s = FockState::new();
        s.add(vec![photon(0, Pol::H, 0)], c(1., 0.));
        let out = pdbs_apply(&s, &PdbsSpec::central()).unwrap();
        assert!((out.amplitude(&[photon(0, Pol::H, 0)]) - c(1., 0.)).norm() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vv_coincidence_amplitude_is_minus_one_third() {
        let mut s = FockState::new();
        s.add(vec![photon(0, Pol::V, 0), photon(1, Pol::V, 0)], c(1., 0.));
        let out = pdbs_apply(&s, &PdbsSpec::central()).unwrap();
        let amp = out.amplitude(&[photon(0, Pol::V, 0), photon(1, Pol::V, 0)]);
        assert!((amp - c(-1. / 3., 0.)).norm() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vv_distinguishable_coincidence_is_five_ninths() {
        let mut s = FockState::new();
        s.add(vec![photon(0, Pol::V, 0), photon(1, Pol::V, 1)], c(1., 0.));
        let out = pdbs_apply(&s, &PdbsSpec::central()).unwrap();
        let p: f64 = coincidence_block(&out)
            .values()
            .map(|a| a[3].norm_sqr())
            .sum();
        assert!((p - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn attenuator_bookkeeping() {
        let eq = PdbsSpec::equalizer();
        let mut hh = FockState::new();
        hh.add(vec![photon(0, Pol::H, 0), photon(1, Pol::H, 0)], c(1., 0.));
        let out = output_attenuators(&hh, &eq);
        let amp = out.amplitude(&[photon(0, Pol::H, 0), photon(1, Pol::H, 0)]);
        assert!((amp - c(1. / 3., 0.)).norm() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);

        let mut vv = FockState::new();
        vv.add(
            vec![photon(0, Pol::V, 0), photon(1, Pol::V, 0)],
            c(-1. / 3., 0.),
        );
        let out = output_attenuators(&vv, &eq);
        let amp = out.amplitude(&[photon(0, Pol::V, 0), photon(1, Pol::V, 0)]);
        assert!((amp - c(-1. / 3., 0.)).norm() < 1e-15);

        let mut hv = FockState::new();
        hv.add(
            vec![photon(0, Pol::H, 0), photon(1, Pol::V, 0)],
            c((1.0f64 / 3.0).sqrt(), 0.),
        );
        let out = output_attenuators(&hv, &eq);
        let amp = out.amplitude(&[photon(0, Pol::H, 0), photon(1, Pol::V, 0)]);
        assert!((amp - c(1. / 3., 0.)).norm() < 1e-15);
    }

    #[test]
    fn sink_photons_are_rejected() {
        let mut s = FockState::new();
        s.add(vec![PhotonMode::new(Port::Sink(0), Pol::H, 0)], c(1., 0.));
        assert!(matches!(
            pdbs_apply(&s, &PdbsSpec::central()),
            Err(Error::PhotonInSink)
        ));
    }

    #[test]
    fn bunched_photons_keep_norm() {
        // HOM-style check on a balanced splitter: |1,1> -> (|2,0> + |0,2>) i/√2
        let bs = PdbsSpec::new(0.5, 0.5).unwrap();
        let mut s = FockState::new();
        s.add(vec![photon(0, Pol::H, 0), photon(1, Pol::H, 0)], c(1., 0.));
        let out = pdbs_apply(&s, &bs).unwrap();
        assert!(
            out.amplitude(&[photon(0, Pol::H, 0), photon(1, Pol::H, 0)])
                .norm()
                < 1e-15
        );
        let p20 = out
            .amplitude(&[photon(0, Pol::H, 0), photon(0, Pol::H, 0)])
            .norm_sqr();
        assert!((p20 - 0.5).abs() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coincidence_block_ideal_diagonal() {
        for (idx, expected) in [(0usize, 1. / 3.), (3usize, -1. / 3.)] {
            let mut psi = CVector::zeros(4);
            psi[idx] = c(1., 0.);
            let out = propagate_gate(&gate_input(&psi, Overlap::ideal())).unwrap();
            let block = coincidence_block(&out);
            assert_eq!(block.len(), 1);
            let amps = block[&(0, 0)];
            assert!((amps[idx] - c(expected, 0.)).norm() < 1e-15);
        }
    }

    #[test]
    fn coincidence_block_distinguishable_vv() {
        let mut psi = CVector::zeros(4);
        psi[3] = c(1., 0.);
        let out = propagate_gate(&gate_input(&psi, Overlap::new(0.0).unwrap())).unwrap();
        let block = coincidence_block(&out);
        assert_eq!(block.len(), 2);
        let total: f64 = block.values().map(|a| a[3].norm_sqr()).sum();
        assert!((total - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn ideal_channel_single_operator() {
        let ch = gate_channel(Overlap::ideal()).unwrap();
        assert_eq!(ch.kraus_ops().len(), 1);
        let expected = cphase_matrix() * c(1. / 3., 0.);
        assert!(max_abs_diff(&ch.kraus_ops()[0], &expected) < 1e-15);
    }

    #[test]
    fn overlap_out_of_range() {
        assert!(Overlap::new(1.2).is_err());
        assert!(Overlap::new(-0.1).is_err());
        assert!(PdbsSpec::new(1.1, 0.0).is_err());
    }

    fn product(a: &CVector, b: &CVector) -> DensityMatrix {
        let psi = a.kronecker(b);
        PureState::new(psi, &["b", "c"]).unwrap().to_density()
    }

    #[test]
    fn apply_channel_examples() {
        use crate::state::ket;
        let ideal = gate_channel(Overlap::ideal()).unwrap();

        let hv = product(&ket::h(), &ket::v());
        let (out, p) = apply_channel(&hv, &ideal).unwrap();
        assert!((p - 1. / 9.).abs() < 1e-15);
        assert!(max_abs_diff(out.entries(), hv.entries()) < TOL);

        let pp = product(&ket::plus(), &ket::plus());
        let (out, p) = apply_channel(&pp, &ideal).unwrap();
        assert!((p - 1. / 9.).abs() < 1e-15);
        let tilde = PureState::new(
            CVector::from_vec(vec![c(0.5, 0.), c(0.5, 0.), c(0.5, 0.), c(-0.5, 0.)]),
            &["b", "c"],
        )
        .unwrap();
        assert!((out.fidelity_to_pure(&tilde).unwrap() - 1.0).abs() < TOL);

        let distinguishable = gate_channel(Overlap::new(0.0).unwrap()).unwrap();
        let (out, _) = apply_channel(&pp, &distinguishable).unwrap();
        assert!(out.fidelity_to_pure(&tilde).unwrap() < 1.0 - 1e-3);
    }

    #[test]
    fn vv_success_enhanced_without_overlap() {
        let vv = product(&crate::state::ket::v(), &crate::state::ket::v());
        let ch = gate_channel(Overlap::new(0.0).unwrap()).unwrap();
        let (out, p) = apply_channel(&vv, &ch).unwrap();
        assert!((p - 5. / 9.).abs() < 1e-12);
        assert!(max_abs_diff(out.entries(), vv.entries()) < TOL);
    }

    #[test]
    fn truth_table_signs() {
        let rows = truth_table(Overlap::ideal()).unwrap();
        let signs: Vec<f64> = rows.iter().map(|r| r.amplitude.re.signum()).collect();
        assert_eq!(signs, [1.0, 1.0, 1.0, -1.0]);
        for r in rows {
            assert!((r.success_probability - 1. / 9.).abs() < 1e-15);
        }
    }
}
