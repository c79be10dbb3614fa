//! Bell-state analysis with the post-selected CPHASE gate, teleportation and
//! entanglement swapping at the density-matrix level.
//!
//! The gate maps the tilde Bell states `CZ|±±⟩` onto the product states
//! `|±±⟩`, so reading both gate outputs in the ±45° basis resolves all four
//! Bell states:
//!
//! | readout | Bell state                      |
//! |---------|---------------------------------|
//! | `++`    | `φ̃+ = (|H+⟩ + |V−⟩)/√2`         |
//! | `+−`    | `ψ̃+ = (|H−⟩ + |V+⟩)/√2`         |
//! | `−+`    | `φ̃− = (|H+⟩ − |V−⟩)/√2`         |
//! | `−−`    | `ψ̃− = (|H−⟩ − |V+⟩)/√2`         |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{cphase_matrix, GateChannel};
use crate::state::{
    c, hadamard, identity, ket, sigma_x, sigma_y, sigma_z, CMatrix, CVector, DensityMatrix,
    PureState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TildeBell {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl TildeBell {
    /// In readout order `++, +−, −+, −−`.
    pub const ALL: [TildeBell; 4] = [
        TildeBell::PhiPlus,
        TildeBell::PsiPlus,
        TildeBell::PhiMinus,
        TildeBell::PsiMinus,
    ];

    pub fn readout(self) -> ProductResult {
        match self {
            TildeBell::PhiPlus => ProductResult::PlusPlus,
            TildeBell::PsiPlus => ProductResult::PlusMinus,
            TildeBell::PhiMinus => ProductResult::MinusPlus,
            TildeBell::PsiMinus => ProductResult::MinusMinus,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TildeBell::PhiPlus => "phi+",
            TildeBell::PsiPlus => "psi+",
            TildeBell::PhiMinus => "phi-",
            TildeBell::PsiMinus => "psi-",
        }
    }
}

impl fmt::Display for TildeBell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TildeBell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi+" => Ok(TildeBell::PhiPlus),
            "psi+" => Ok(TildeBell::PsiPlus),
            "phi-" => Ok(TildeBell::PhiMinus),
            "psi-" => Ok(TildeBell::PsiMinus),
            other => Err(Error::InvalidState(format!("unknown Bell label `{other}`"))),
        }
    }
}

/// ±45° readout of the two gate outputs (first symbol: mode b).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProductResult {
    #[serde(rename = "++")]
    PlusPlus,
    #[serde(rename = "+-")]
    PlusMinus,
    #[serde(rename = "-+")]
    MinusPlus,
    #[serde(rename = "--")]
    MinusMinus,
}

impl ProductResult {
    pub fn signs(self) -> (bool, bool) {
        match self {
            ProductResult::PlusPlus => (true, true),
            ProductResult::PlusMinus => (true, false),
            ProductResult::MinusPlus => (false, true),
            ProductResult::MinusMinus => (false, false),
        }
    }

    pub fn ket(self) -> CVector {
        let pick = |plus: bool| if plus { ket::plus() } else { ket::minus() };
        let (b, c) = self.signs();
        pick(b).kronecker(&pick(c))
    }

    pub fn name(self) -> &'static str {
        match self {
            ProductResult::PlusPlus => "++",
            ProductResult::PlusMinus => "+-",
            ProductResult::MinusPlus => "-+",
            ProductResult::MinusMinus => "--",
        }
    }
}

/// `CZ|±±⟩` on the given two modes; the first mode carries the H/V component.
pub fn tilde_bell(label: TildeBell, labels: [&str; 2]) -> PureState {
    let amps = cphase_matrix() * label.readout().ket();
    PureState::new(amps, &labels).expect("CZ preserves the norm")
}

/// Outcome of one readout pattern of the analyzer.
#[derive(Debug, Clone, PartialEq)]
pub struct BsaOutcome {
    pub product: ProductResult,
    pub bell: TildeBell,
    /// Joint probability of gate success and this readout.
    pub probability: f64,
    /// Normalized state of the remaining modes; `None` when the outcome
    /// cannot occur.
    pub conditional: Option<DensityMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsaResult {
    pub outcomes: Vec<BsaOutcome>,
    /// Probability mass of gate failure (no coincidence).
    pub failure_probability: f64,
}

impl BsaResult {
    pub fn success_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    pub fn outcome(&self, bell: TildeBell) -> &BsaOutcome {
        self.outcomes
            .iter()
            .find(|o| o.bell == bell)
            .expect("all four outcomes are always reported")
    }
}

const MIN_PROBABILITY: f64 = 1e-15;

/// Runs the gate on `modes` (b, c) of `rho`, reads both outputs in the ±45°
/// basis and returns every outcome with the conditional state of the other
/// modes.
pub fn bsa(rho: &DensityMatrix, modes: [&str; 2], channel: &GateChannel) -> Result<BsaResult> {
    let spectators: Vec<String> = rho
        .labels()
        .iter()
        .filter(|l| !modes.contains(&l.as_str()))
        .cloned()
        .collect();
    let mut order: Vec<&str> = modes.to_vec();
    order.extend(spectators.iter().map(String::as_str));
    let ordered = rho.reorder(&order)?;

    let ds = 1usize << spectators.len();
    let lift = |k: &CMatrix| k.kronecker(&identity(ds));
    let after_gate = channel
        .kraus_ops()
        .iter()
        .map(lift)
        .fold(CMatrix::zeros(4 * ds, 4 * ds), |acc, k| {
            acc + &k * ordered.entries() * k.adjoint()
        });

    let spectator_refs: Vec<&str> = spectators.iter().map(String::as_str).collect();
    let mut outcomes = Vec::with_capacity(4);
    for bell in TildeBell::ALL {
        let product = bell.readout();
        let proj = product.ket();
        // (⟨s| ⊗ 1) ρ' (|s⟩ ⊗ 1)
        let block = CMatrix::from_fn(ds, ds, |i, j| {
            let mut acc = c(0., 0.);
            for x in 0..4 {
                for y in 0..4 {
                    acc += proj[x].conj() * after_gate[(x * ds + i, y * ds + j)] * proj[y];
                }
            }
            acc
        });
        let probability = block.trace().re.max(0.0);
        let conditional = if probability > MIN_PROBABILITY {
            Some(DensityMatrix::from_unnormalized(block, &spectator_refs)?)
        } else {
            None
        };
        outcomes.push(BsaOutcome {
            product,
            bell,
            probability,
            conditional,
        });
    }
    let success: f64 = outcomes.iter().map(|o| o.probability).sum();
    if success < MIN_PROBABILITY {
        return Err(Error::NoSuccess(success));
    }
    Ok(BsaResult {
        outcomes,
        failure_probability: 1.0 - success,
    })
}

/// Outcome-dependent unitary applied to the teleported qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Correction {
    #[serde(rename = "1")]
    Identity,
    #[serde(rename = "x")]
    SigmaX,
    #[serde(rename = "z")]
    SigmaZ,
    #[serde(rename = "iy")]
    ISigmaY,
}

impl Correction {
    pub const ALL: [Correction; 4] = [
        Correction::Identity,
        Correction::SigmaX,
        Correction::SigmaZ,
        Correction::ISigmaY,
    ];

    pub fn matrix(self) -> CMatrix {
        match self {
            Correction::Identity => identity(2),
            Correction::SigmaX => sigma_x(),
            Correction::SigmaZ => sigma_z(),
            Correction::ISigmaY => sigma_y() * c(0., 1.),
        }
    }
}

/// Correction per readout for a `|φ+⟩` pair, derived by exhaustive search
/// (see `tests::correction_table_is_derived`).
pub const TELEPORT_CORRECTIONS: [(TildeBell, Correction); 4] = [
    (TildeBell::PhiPlus, Correction::Identity),
    (TildeBell::PsiPlus, Correction::SigmaZ),
    (TildeBell::PhiMinus, Correction::SigmaX),
    (TildeBell::PsiMinus, Correction::ISigmaY),
];

pub fn correction_for(bell: TildeBell) -> Correction {
    TELEPORT_CORRECTIONS
        .iter()
        .find(|(b, _)| *b == bell)
        .map(|(_, c)| *c)
        .expect("table covers every outcome")
}

/// Fixed analysis frame on the teleported mode. The ±45° readout projects
/// onto Bell states rotated by a Hadamard on one qubit, which the receiver
/// undoes with a half-wave plate at 22.5°.
pub fn receiver_frame() -> CMatrix {
    hadamard()
}

/// Full correction for one readout: frame rotation, then the Pauli.
pub fn correction_unitary(bell: TildeBell) -> CMatrix {
    correction_for(bell).matrix() * receiver_frame()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub bell: TildeBell,
    pub product: ProductResult,
    pub probability: f64,
    pub state: Option<DensityMatrix>,
    pub correction: Option<Correction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub outcomes: Vec<ProtocolOutcome>,
    pub failure_probability: f64,
}

impl ProtocolResult {
    pub fn success_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    pub fn outcome(&self, bell: TildeBell) -> &ProtocolOutcome {
        self.outcomes
            .iter()
            .find(|o| o.bell == bell)
            .expect("all four outcomes are always reported")
    }

    /// Success-conditioned state pooled over all readouts (each weighted by
    /// its probability).
    pub fn pooled_state(&self) -> Result<DensityMatrix> {
        let first = self
            .outcomes
            .iter()
            .find_map(|o| o.state.as_ref())
            .ok_or(Error::NoSuccess(0.0))?;
        let dim = first.dim();
        let labels = first.label_refs();
        let sum = self
            .outcomes
            .iter()
            .filter_map(|o| o.state.as_ref().map(|s| s.entries() * c(o.probability, 0.)))
            .fold(CMatrix::zeros(dim, dim), |acc, m| acc + m);
        DensityMatrix::from_unnormalized(sum, &labels)
    }

    /// Conditional probability of each readout given gate success.
    pub fn conditional_probabilities(&self) -> Vec<(TildeBell, f64)> {
        let total = self.success_probability();
        self.outcomes
            .iter()
            .map(|o| (o.bell, o.probability / total))
            .collect()
    }
}

/// Teleports the qubit in `input` (mode c) onto mode a of `pair` (modes a, b).
/// With `correct`, each conditional state is rotated by the receiver frame and
/// the outcome's Pauli correction.
pub fn teleport(
    input: &DensityMatrix,
    pair: &DensityMatrix,
    channel: &GateChannel,
    correct: bool,
) -> Result<ProtocolResult> {
    if input.num_qubits() != 1 || pair.num_qubits() != 2 {
        return Err(Error::DimensionMismatch(
            "teleport needs a 1-qubit input and a 2-qubit pair".into(),
        ));
    }
    let pair_labels = pair.label_refs();
    let (receiver, sender) = (pair_labels[0], pair_labels[1]);
    let joint = pair.kron(input)?;
    let analysed = bsa(&joint, [sender, &input.labels()[0]], channel)?;

    let outcomes = analysed
        .outcomes
        .into_iter()
        .map(|o| {
            let correction = correct.then(|| correction_for(o.bell));
            let state = match (o.conditional, correct) {
                (Some(s), true) => Some(s.conjugate(&correction_unitary(o.bell), &[receiver])?),
                (s, _) => s,
            };
            Ok(ProtocolOutcome {
                bell: o.bell,
                product: o.product,
                probability: o.probability,
                state,
                correction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolResult {
        outcomes,
        failure_probability: analysed.failure_probability,
    })
}

/// Entanglement swapping: analyses modes b and c of `pair_ab ⊗ pair_cd` and
/// returns the conditional states of (a, d).
pub fn swap(
    pair_ab: &DensityMatrix,
    pair_cd: &DensityMatrix,
    channel: &GateChannel,
) -> Result<ProtocolResult> {
    if pair_ab.num_qubits() != 2 || pair_cd.num_qubits() != 2 {
        return Err(Error::DimensionMismatch(
            "swap needs two 2-qubit pairs".into(),
        ));
    }
    let ab = pair_ab.label_refs();
    let cd = pair_cd.label_refs();
    let joint = pair_ab.kron(pair_cd)?;
    let analysed = bsa(&joint, [ab[1], cd[0]], channel)?;
    let outcomes = analysed
        .outcomes
        .into_iter()
        .map(|o| {
            let state = o
                .conditional
                .map(|s| s.reorder(&[ab[0], cd[1]]))
                .transpose()?;
            Ok(ProtocolOutcome {
                bell: o.bell,
                product: o.product,
                probability: o.probability,
                state,
                correction: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolResult {
        outcomes,
        failure_probability: analysed.failure_probability,
    })
}
