//! Config-driven runs: simulated coincidence counts, reconstruction and
//! figures of merit for teleportation, entanglement swapping and the bare gate,
//! plus a grid calibration of the noise parameters against target values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::{CountRow, CountTable};
use crate::error::{Error, Result};
use crate::fock::{apply_channel, cphase_matrix, gate_channel, GateChannel, Overlap};
use crate::metrics::{
    bootstrap_many, chsh, chsh_variant_for, fidelity_pure, log_negativity, ChshSpec, ChshVariant,
};
use crate::protocols::{swap, teleport, tilde_bell, Correction, ProtocolResult, TildeBell};
use crate::sources::{
    make_input, make_pair, tomographic_input_set, Bell, InputSpec, InputState, PairSpec,
};
use crate::state::{CMatrix, DensityMatrix, PureState};
use crate::tomography::{
    mle_fit, outcome_probabilities, process_fidelity, process_tomo, ProcessMatrix,
};

/// Detectors behind the output analyzers: `a`, `d` in the protocols, `b`, `c`
/// directly behind the gate.
const MODES: [&str; 4] = ["a", "b", "c", "d"];

/// Offsets the bootstrap streams from the count simulation.
const BOOTSTRAP_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Teleport,
    Swap,
    GateOnly,
}

fn one() -> f64 {
    1.0
}

fn default_resamples() -> usize {
    200
}

fn default_inputs() -> Vec<InputState> {
    tomographic_input_set().to_vec()
}

fn default_gate_input() -> [InputState; 2] {
    [InputState::V, InputState::V]
}

/// Run description, read from TOML. See the README for an annotated example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    /// Wavepacket overlap `v` of the two photons meeting at the gate.
    #[serde(default = "one")]
    pub overlap: f64,
    /// White-noise weight of every entangled pair.
    #[serde(default)]
    pub pair_mixedness: f64,
    /// White-noise weight of single-photon inputs.
    #[serde(default)]
    pub input_mixedness: f64,
    /// Teleport and swap: post-selected events per analyzer setting, pooled
    /// over the four readouts. Gate-only: input pairs per setting.
    pub counts_per_setting: u64,
    /// Relative detector efficiencies keyed by mode and analyzer port,
    /// e.g. `"a+"`, `"a-"`. Missing detectors count as 1.
    #[serde(default)]
    pub efficiencies: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    /// States teleported in a teleport run.
    #[serde(default = "default_inputs")]
    pub inputs: Vec<InputState>,
    /// Polarizations of photons b and c in a gate-only run.
    #[serde(default = "default_gate_input")]
    pub gate_input: [InputState; 2],
    #[serde(default)]
    pub calibration: CalibrationConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |field: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::Config(format!("{field}: {x} outside [0, 1]")))
            }
        };
        unit("overlap", self.overlap)?;
        unit("pair_mixedness", self.pair_mixedness)?;
        unit("input_mixedness", self.input_mixedness)?;
        if self.counts_per_setting == 0 {
            return Err(Error::Config("counts_per_setting: must be positive".into()));
        }
        if self.bootstrap_resamples < 100 {
            return Err(Error::Config(format!(
                "bootstrap_resamples: {} is below 100",
                self.bootstrap_resamples
            )));
        }
        Efficiencies::new(self.efficiencies.clone())?;
        for (i, s) in self.inputs.iter().chain(&self.gate_input).enumerate() {
            s.ket().map_err(|e| {
                let field = if i < self.inputs.len() {
                    format!("inputs[{i}]")
                } else {
                    format!("gate_input[{}]", i - self.inputs.len())
                };
                Error::Config(format!("{field}: {e}"))
            })?;
        }
        if self.protocol == Protocol::Teleport && self.inputs.is_empty() {
            return Err(Error::Config("inputs: empty".into()));
        }
        self.calibration.validate()
    }
}

/// Detector efficiencies; absent detectors are ideal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Efficiencies(BTreeMap<String, f64>);

impl Efficiencies {
    pub fn new(map: BTreeMap<String, f64>) -> Result<Self> {
        for (key, &eta) in &map {
            let valid_key =
                key.len() == 2 && MODES.contains(&&key[..1]) && matches!(&key[1..], "+" | "-");
            if !valid_key {
                return Err(Error::Config(format!(
                    "efficiencies.\"{key}\": expected a mode a-d followed by + or -"
                )));
            }
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Config(format!(
                    "efficiencies.\"{key}\": {eta} outside (0, 1]"
                )));
            }
        }
        Ok(Self(map))
    }

    pub fn detector(&self, mode: &str, plus: bool) -> f64 {
        let key = format!("{mode}{}", if plus { '+' } else { '-' });
        self.0.get(&key).copied().unwrap_or(1.0)
    }

    /// Product of the detector efficiencies that register `outcome`.
    pub fn outcome(&self, modes: &[&str], outcome: &str) -> f64 {
        modes
            .iter()
            .zip(outcome.chars())
            .map(|(m, ch)| self.detector(m, ch == '+'))
            .product()
    }
}

/// Outcome distribution of one analyzer setting. `weight` scales the
/// requested number of events (a readout's share of the post-selected data).
#[derive(Debug, Clone, PartialEq)]
pub struct SettingDistribution {
    pub setting: String,
    pub weight: f64,
    pub outcomes: Vec<(String, f64)>,
}

/// Raw counts `~ Poisson(n · weight · p · η)` with efficiency-corrected
/// companions. Deterministic for a given seed.
pub fn simulate_counts(
    distributions: &[SettingDistribution],
    n: u64,
    modes: &[&str],
    efficiencies: &Efficiencies,
    seed: u64,
) -> Result<CountTable> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut table = CountTable::new();
    for d in distributions {
        let total: f64 = d.outcomes.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 || d.outcomes.iter().any(|(_, p)| *p < -1e-12) {
            return Err(Error::InvalidState(format!(
                "setting {} has probabilities summing to {total}",
                d.setting
            )));
        }
        if d.weight.is_nan() || d.weight < 0.0 {
            return Err(Error::OutOfRange(format!(
                "weight {} of setting {}",
                d.weight, d.setting
            )));
        }
        for (outcome, p) in &d.outcomes {
            let eta = efficiencies.outcome(modes, outcome);
            let mean = n as f64 * d.weight * p.max(0.0) * eta;
            let raw = if mean > 0.0 {
                Poisson::new(mean)
                    .map_err(|e| Error::OutOfRange(e.to_string()))?
                    .sample(&mut rng) as u64
            } else {
                0
            };
            table.push(CountRow::new(d.setting.clone(), outcome.clone(), raw, eta)?);
        }
    }
    Ok(table)
}

/// Tomography distributions of `rho` with every setting id prefixed.
fn tomography_distributions(
    rho: &DensityMatrix,
    prefix: &str,
    weight: f64,
) -> Vec<SettingDistribution> {
    outcome_probabilities(rho)
        .into_iter()
        .map(|(s, probs)| {
            let total: f64 = probs.iter().map(|(_, p)| p).sum();
            SettingDistribution {
                setting: format!("{prefix}{}", s.id()),
                weight,
                outcomes: probs.into_iter().map(|(o, p)| (o, p / total)).collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl From<(f64, f64)> for Estimate {
    fn from((value, stderr): (f64, f64)) -> Self {
        Self { value, stderr }
    }
}

/// Complex matrix as separate real and imaginary row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixReport {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixReport {
    fn from(m: &CMatrix) -> Self {
        let rows = |f: fn(&crate::state::C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub metadata: Metadata,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub teleport: Option<TeleportReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swap: Option<SwapReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeleportOutcomeReport {
    pub bell: String,
    pub product: String,
    pub correction: Option<Correction>,
    /// Probability of this readout given gate success (exact model).
    pub conditional_probability: f64,
    pub raw_counts: u64,
    pub state: MatrixReport,
    pub fidelity: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeleportInputReport {
    pub input: String,
    pub success_probability: f64,
    /// Fidelity of the state reconstructed from all readouts together.
    pub fidelity: Estimate,
    pub exact_fidelity: f64,
    pub outcomes: Vec<TeleportOutcomeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessReport {
    pub matrix: MatrixReport,
    pub fidelity: Estimate,
    pub exact_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeleportReport {
    pub inputs: Vec<TeleportInputReport>,
    pub average_fidelity: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapOutcomeReport {
    pub bell: String,
    pub product: String,
    pub conditional_probability: f64,
    pub raw_counts: u64,
    pub state: MatrixReport,
    pub fidelity: Estimate,
    pub exact_fidelity: f64,
    pub log_negativity: Estimate,
    pub chsh_variant: ChshVariant,
    /// Signed S value.
    pub chsh: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapReport {
    pub success_probability: f64,
    pub outcomes: Vec<SwapOutcomeReport>,
    pub average_fidelity: Estimate,
    pub average_log_negativity: Estimate,
    pub average_abs_chsh: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub input: [String; 2],
    /// Coincidences per input pair, corrected for efficiencies.
    pub success_probability: Estimate,
    pub exact_success_probability: f64,
    pub state: MatrixReport,
    /// Against the ideal CPHASE image of the input.
    pub fidelity: Estimate,
}

/// Report plus the simulated count table it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Report,
    pub counts: CountTable,
}

fn channel_for(v: f64) -> Result<GateChannel> {
    gate_channel(Overlap::new(v)?)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let channel = channel_for(config.overlap)?;
    let efficiencies = Efficiencies::new(config.efficiencies.clone())?;
    let metadata = Metadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config: config.clone(),
    };
    let mut report = Report {
        metadata,
        teleport: None,
        swap: None,
        gate: None,
    };
    let counts = match config.protocol {
        Protocol::Teleport => {
            let (r, counts) = run_teleport(config, &channel, &efficiencies)?;
            report.teleport = Some(r);
            counts
        }
        Protocol::Swap => {
            let (r, counts) = run_swap(config, &channel, &efficiencies)?;
            report.swap = Some(r);
            counts
        }
        Protocol::GateOnly => {
            let (r, counts) = run_gate(config, &channel, &efficiencies)?;
            report.gate = Some(r);
            counts
        }
    };
    Ok(RunOutput { report, counts })
}

fn bootstrap_seed(seed: u64) -> u64 {
    seed ^ BOOTSTRAP_SEED_MIX
}

fn group_prefix(parts: &[&str]) -> String {
    parts.iter().map(|p| format!("{p}/")).collect()
}

/// Readouts that occur with non-zero probability.
fn observed(result: &ProtocolResult) -> Vec<(TildeBell, f64)> {
    result
        .conditional_probabilities()
        .into_iter()
        .filter(|(b, q)| *q > 1e-12 && result.outcome(*b).state.is_some())
        .collect()
}

struct TeleportPlan {
    inputs: Vec<InputState>,
    readouts: Vec<Vec<TildeBell>>,
    process: bool,
}

struct TeleportEstimate {
    /// Per input: per-readout states and the pooled state.
    states: Vec<(Vec<DensityMatrix>, DensityMatrix)>,
    process: Option<ProcessMatrix>,
    values: Vec<f64>,
}

impl TeleportPlan {
    fn estimate(&self, counts: &CountTable) -> Result<TeleportEstimate> {
        let mut values = Vec::new();
        let mut states = Vec::new();
        let mut fidelities = Vec::new();
        for (input, readouts) in self.inputs.iter().zip(&self.readouts) {
            let target = input.pure("a")?;
            let input_counts = counts.strip_prefix(&group_prefix(&[&input.name()]));
            let mut per_readout = Vec::new();
            let mut tables = Vec::new();
            for bell in readouts {
                let t = input_counts.strip_prefix(&group_prefix(&[bell.name()]));
                let rho = mle_fit(&t, &["a"])?;
                values.push(fidelity_pure(&rho, &target, None)?);
                per_readout.push(rho);
                tables.push(t);
            }
            let pooled = mle_fit(&CountTable::pooled(&tables)?, &["a"])?;
            let f = fidelity_pure(&pooled, &target, None)?;
            values.push(f);
            fidelities.push(f);
            states.push((per_readout, pooled));
        }
        values.push(fidelities.iter().sum::<f64>() / fidelities.len() as f64);
        let process = if self.process {
            let m = process_from_outputs(&self.inputs, states.iter().map(|(_, p)| p))?;
            values.push(process_fidelity(&m, &ProcessMatrix::identity_channel()));
            Some(m)
        } else {
            None
        };
        Ok(TeleportEstimate {
            states,
            process,
            values,
        })
    }
}

fn process_from_outputs<'a>(
    inputs: &[InputState],
    outputs: impl Iterator<Item = &'a DensityMatrix>,
) -> Result<ProcessMatrix> {
    let pairs = inputs
        .iter()
        .zip(outputs)
        .map(|(s, out)| Ok((make_input(&InputSpec::pure(*s), "a")?, out.clone())))
        .collect::<Result<Vec<_>>>()?;
    process_tomo(&pairs)
}

fn run_teleport(
    config: &ExperimentConfig,
    channel: &GateChannel,
    efficiencies: &Efficiencies,
) -> Result<(TeleportReport, CountTable)> {
    let pair = make_pair(
        &PairSpec::new(Bell::PhiPlus, config.pair_mixedness)?,
        ["a", "b"],
    )?;
    let mut results = Vec::new();
    let mut distributions = Vec::new();
    let mut readouts = Vec::new();
    for input in &config.inputs {
        let rho_in = make_input(&InputSpec::new(*input, config.input_mixedness)?, "c")?;
        let result = teleport(&rho_in, &pair, channel, true)?;
        let obs = observed(&result);
        for (bell, q) in &obs {
            let state = result
                .outcome(*bell)
                .state
                .as_ref()
                .expect("observed readout");
            let prefix = group_prefix(&[&input.name(), bell.name()]);
            distributions.extend(tomography_distributions(state, &prefix, *q));
        }
        readouts.push(obs.iter().map(|(b, _)| *b).collect::<Vec<_>>());
        results.push((obs, result));
    }
    // process tomography needs inputs spanning the operator space
    let exact_outputs = results
        .iter()
        .map(|(_, r)| r.pooled_state())
        .collect::<Result<Vec<_>>>()?;
    let exact_process = process_from_outputs(&config.inputs, exact_outputs.iter()).ok();

    let counts = simulate_counts(
        &distributions,
        config.counts_per_setting,
        &["a"],
        efficiencies,
        config.seed,
    )?;
    let plan = TeleportPlan {
        inputs: config.inputs.clone(),
        readouts,
        process: exact_process.is_some(),
    };
    let estimate = plan.estimate(&counts)?;
    let errors = bootstrap_many(
        &counts,
        |t| plan.estimate(t).map(|e| e.values),
        config.bootstrap_resamples,
        bootstrap_seed(config.seed),
    )?;
    let mut errors = errors.into_iter().map(Estimate::from);

    let mut inputs = Vec::new();
    for ((input, (obs, result)), (per_readout, _)) in
        config.inputs.iter().zip(&results).zip(&estimate.states)
    {
        let input_counts = counts.strip_prefix(&group_prefix(&[&input.name()]));
        let mut outcomes = Vec::new();
        for ((bell, q), rho) in obs.iter().zip(per_readout) {
            let o = result.outcome(*bell);
            outcomes.push(TeleportOutcomeReport {
                bell: bell.name().into(),
                product: o.product.name().into(),
                correction: o.correction,
                conditional_probability: *q,
                raw_counts: input_counts
                    .strip_prefix(&group_prefix(&[bell.name()]))
                    .total_raw(),
                state: rho.entries().into(),
                fidelity: errors.next().expect("one estimate per quantity"),
            });
        }
        let exact = fidelity_pure(&result.pooled_state()?, &input.pure("a")?, None)?;
        inputs.push(TeleportInputReport {
            input: input.name(),
            success_probability: result.success_probability(),
            fidelity: errors.next().expect("one estimate per quantity"),
            exact_fidelity: exact,
            outcomes,
        });
    }
    let average_fidelity = errors.next().expect("average fidelity");
    let process = match (estimate.process, exact_process) {
        (Some(m), Some(exact)) => Some(ProcessReport {
            matrix: m.entries().into(),
            fidelity: errors.next().expect("process fidelity"),
            exact_fidelity: process_fidelity(&exact, &ProcessMatrix::identity_channel()),
        }),
        _ => None,
    };
    Ok((
        TeleportReport {
            inputs,
            average_fidelity,
            process,
        },
        counts,
    ))
}

struct SwapPlan {
    readouts: Vec<TildeBell>,
}

impl SwapPlan {
    /// Per readout: fidelity, log-negativity, S; then the three averages.
    fn estimate(&self, counts: &CountTable) -> Result<(Vec<DensityMatrix>, Vec<f64>)> {
        let mut values = Vec::new();
        let mut states = Vec::new();
        let mut sums = [0.0; 3];
        for bell in &self.readouts {
            let t = counts.strip_prefix(&group_prefix(&[bell.name()]));
            let rho = mle_fit(&t, &["a", "d"])?;
            let f = fidelity_pure(&rho, &tilde_bell(*bell, ["a", "d"]), None)?;
            let n = log_negativity(&rho)?;
            let s = chsh(&rho, &ChshSpec::standard(chsh_variant_for(*bell)))?;
            values.extend([f, n, s]);
            sums[0] += f;
            sums[1] += n;
            sums[2] += s.abs();
            states.push(rho);
        }
        let k = self.readouts.len() as f64;
        values.extend(sums.map(|x| x / k));
        Ok((states, values))
    }
}

fn run_swap(
    config: &ExperimentConfig,
    channel: &GateChannel,
    efficiencies: &Efficiencies,
) -> Result<(SwapReport, CountTable)> {
    let spec = PairSpec::new(Bell::PhiPlus, config.pair_mixedness)?;
    let result = swap(
        &make_pair(&spec, ["a", "b"])?,
        &make_pair(&spec, ["c", "d"])?,
        channel,
    )?;
    let obs = observed(&result);
    let mut distributions = Vec::new();
    for (bell, q) in &obs {
        let state = result
            .outcome(*bell)
            .state
            .as_ref()
            .expect("observed readout");
        distributions.extend(tomography_distributions(
            state,
            &group_prefix(&[bell.name()]),
            *q,
        ));
    }
    let counts = simulate_counts(
        &distributions,
        config.counts_per_setting,
        &["a", "d"],
        efficiencies,
        config.seed,
    )?;
    let plan = SwapPlan {
        readouts: obs.iter().map(|(b, _)| *b).collect(),
    };
    let (states, _) = plan.estimate(&counts)?;
    let errors: Vec<Estimate> = bootstrap_many(
        &counts,
        |t| plan.estimate(t).map(|(_, v)| v),
        config.bootstrap_resamples,
        bootstrap_seed(config.seed),
    )?
    .into_iter()
    .map(Estimate::from)
    .collect();

    let mut outcomes = Vec::new();
    for (i, ((bell, q), rho)) in obs.iter().zip(&states).enumerate() {
        let exact = result
            .outcome(*bell)
            .state
            .as_ref()
            .expect("observed readout");
        outcomes.push(SwapOutcomeReport {
            bell: bell.name().into(),
            product: bell.readout().name().into(),
            conditional_probability: *q,
            raw_counts: counts
                .strip_prefix(&group_prefix(&[bell.name()]))
                .total_raw(),
            state: rho.entries().into(),
            fidelity: errors[3 * i],
            exact_fidelity: fidelity_pure(exact, &tilde_bell(*bell, ["a", "d"]), None)?,
            log_negativity: errors[3 * i + 1],
            chsh_variant: chsh_variant_for(*bell),
            chsh: errors[3 * i + 2],
        });
    }
    let k = 3 * obs.len();
    Ok((
        SwapReport {
            success_probability: result.success_probability(),
            outcomes,
            average_fidelity: errors[k],
            average_log_negativity: errors[k + 1],
            average_abs_chsh: errors[k + 2],
        },
        counts,
    ))
}

fn run_gate(
    config: &ExperimentConfig,
    channel: &GateChannel,
    efficiencies: &Efficiencies,
) -> Result<(GateReport, CountTable)> {
    let [first, second] = config.gate_input;
    let b = make_input(&InputSpec::new(first, config.input_mixedness)?, "b")?;
    let c = make_input(&InputSpec::new(second, config.input_mixedness)?, "c")?;
    let (out, p) = apply_channel(&b.kron(&c)?, channel)?;
    let ideal_in = first.pure("b")?.kron(&second.pure("c")?)?;
    let ideal = PureState::new(cphase_matrix() * ideal_in.amplitudes(), &["b", "c"])?;

    let distributions = tomography_distributions(&out, "", p);
    let counts = simulate_counts(
        &distributions,
        config.counts_per_setting,
        &["b", "c"],
        efficiencies,
        config.seed,
    )?;
    let trials = (config.counts_per_setting * distributions.len() as u64) as f64;
    let estimate = |t: &CountTable| -> Result<(DensityMatrix, Vec<f64>)> {
        let rho = mle_fit(t, &["b", "c"])?;
        let f = fidelity_pure(&rho, &ideal, None)?;
        Ok((rho, vec![t.total_corrected() / trials, f]))
    };
    let (rho, _) = estimate(&counts)?;
    let errors = bootstrap_many(
        &counts,
        |t| estimate(t).map(|(_, v)| v),
        config.bootstrap_resamples,
        bootstrap_seed(config.seed),
    )?;
    Ok((
        GateReport {
            input: [first.name(), second.name()],
            success_probability: errors[0].into(),
            exact_success_probability: p,
            state: rho.entries().into(),
            fidelity: errors[1].into(),
        },
        counts,
    ))
}

/// Evenly spaced grid axis; `steps = 1` pins the value to `from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn fixed(x: f64) -> Self {
        Self {
            from: x,
            to: x,
            steps: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.from];
        }
        let h = (self.to - self.from) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.from + h * i as f64).collect()
    }

    fn validate(&self, field: &str) -> Result<()> {
        let ok =
            self.steps > 0 && (0.0..=1.0).contains(&self.from) && (0.0..=1.0).contains(&self.to);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "calibration.{field}: needs steps > 0 and bounds in [0, 1]"
            )))
        }
    }
}

/// Values to fit. Only the fields that are present enter the residual.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTargets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process_fidelity: Option<f64>,
    /// Mean fidelity of the four swapped states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap_fidelity: Option<f64>,
    /// Mean `|S|` of the four swapped states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap_chsh: Option<f64>,
}

impl CalibrationTargets {
    /// Reference teleportation and swapping figures from a laboratory run.
    pub fn reference() -> Self {
        Self {
            fidelity_h: Some(0.93),
            fidelity_v: Some(0.75),
            fidelity_plus: Some(0.79),
            fidelity_r: Some(0.84),
            process_fidelity: Some(0.75),
            swap_fidelity: Some(0.773),
            swap_chsh: Some(2.14),
        }
    }

    fn needs_swap(&self) -> bool {
        self.swap_fidelity.is_some() || self.swap_chsh.is_some()
    }

    /// Sum of squared deviations. `|S|` is measured in units of `2√2` so all
    /// terms share the fidelity scale.
    pub fn residual(&self, p: &Prediction) -> f64 {
        let tsirelson = 2.0 * std::f64::consts::SQRT_2;
        let terms = [
            (self.fidelity_h, p.fidelity_h, 1.0),
            (self.fidelity_v, p.fidelity_v, 1.0),
            (self.fidelity_plus, p.fidelity_plus, 1.0),
            (self.fidelity_r, p.fidelity_r, 1.0),
            (self.process_fidelity, p.process_fidelity, 1.0),
            (self.swap_fidelity, p.swap_fidelity, 1.0),
            (self.swap_chsh, p.swap_chsh, tsirelson),
        ];
        terms
            .iter()
            .filter_map(|(t, x, scale)| t.map(|t| ((x - t) / scale).powi(2)))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    #[serde(default = "default_overlap_axis")]
    pub overlap: GridAxis,
    #[serde(default = "default_noise_axis")]
    pub pair_mixedness: GridAxis,
    #[serde(default = "default_noise_axis")]
    pub input_mixedness: GridAxis,
    #[serde(default = "CalibrationTargets::reference")]
    pub targets: CalibrationTargets,
}

fn default_overlap_axis() -> GridAxis {
    GridAxis {
        from: 0.8,
        to: 1.0,
        steps: 21,
    }
}

fn default_noise_axis() -> GridAxis {
    GridAxis {
        from: 0.0,
        to: 0.2,
        steps: 21,
    }
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            overlap: default_overlap_axis(),
            pair_mixedness: default_noise_axis(),
            input_mixedness: default_noise_axis(),
            targets: CalibrationTargets::reference(),
        }
    }
}

impl CalibrationConfig {
    fn validate(&self) -> Result<()> {
        self.overlap.validate("overlap")?;
        self.pair_mixedness.validate("pair_mixedness")?;
        self.input_mixedness.validate("input_mixedness")
    }
}

/// Exact (count-free) figures of merit at one noise setting. Teleport
/// fidelities are for the success-conditioned output pooled over readouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub fidelity_h: f64,
    pub fidelity_v: f64,
    pub fidelity_plus: f64,
    pub fidelity_r: f64,
    pub process_fidelity: f64,
    pub swap_fidelity: f64,
    pub swap_chsh: f64,
}

/// Teleport fidelities for `H, V, +, R` and the process fidelity.
pub fn teleport_exact(
    channel: &GateChannel,
    pair_mixedness: f64,
    input_mixedness: f64,
) -> Result<([f64; 4], f64)> {
    let pair = make_pair(&PairSpec::new(Bell::PhiPlus, pair_mixedness)?, ["a", "b"])?;
    let inputs = tomographic_input_set();
    let mut fidelities = [0.0; 4];
    let mut outputs = Vec::with_capacity(4);
    for (f, s) in fidelities.iter_mut().zip(&inputs) {
        let rho_in = make_input(&InputSpec::new(*s, input_mixedness)?, "c")?;
        let out = teleport(&rho_in, &pair, channel, true)?.pooled_state()?;
        *f = fidelity_pure(&out, &s.pure("a")?, None)?;
        outputs.push(out);
    }
    let m = process_from_outputs(&inputs, outputs.iter())?;
    Ok((
        fidelities,
        process_fidelity(&m, &ProcessMatrix::identity_channel()),
    ))
}

/// Mean fidelity and mean `|S|` (per-state variant) of the swapped states.
pub fn swap_exact(channel: &GateChannel, pair_mixedness: f64) -> Result<(f64, f64)> {
    let spec = PairSpec::new(Bell::PhiPlus, pair_mixedness)?;
    let result = swap(
        &make_pair(&spec, ["a", "b"])?,
        &make_pair(&spec, ["c", "d"])?,
        channel,
    )?;
    let obs = observed(&result);
    let (mut f, mut s) = (0.0, 0.0);
    for (bell, _) in &obs {
        let rho = result
            .outcome(*bell)
            .state
            .as_ref()
            .expect("observed readout");
        f += fidelity_pure(rho, &tilde_bell(*bell, ["a", "d"]), None)?;
        s += chsh(rho, &ChshSpec::standard(chsh_variant_for(*bell)))?.abs();
    }
    let k = obs.len() as f64;
    Ok((f / k, s / k))
}

pub fn predict(
    channel: &GateChannel,
    pair_mixedness: f64,
    input_mixedness: f64,
) -> Result<Prediction> {
    let (f, fp) = teleport_exact(channel, pair_mixedness, input_mixedness)?;
    let (sf, ss) = swap_exact(channel, pair_mixedness)?;
    Ok(Prediction {
        fidelity_h: f[0],
        fidelity_v: f[1],
        fidelity_plus: f[2],
        fidelity_r: f[3],
        process_fidelity: fp,
        swap_fidelity: sf,
        swap_chsh: ss,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub overlap: f64,
    pub pair_mixedness: f64,
    pub input_mixedness: f64,
    pub residual: f64,
    #[serde(flatten)]
    pub prediction: Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub best: GridPoint,
    pub targets: CalibrationTargets,
    pub grid_points: usize,
    #[serde(skip)]
    pub grid: Vec<GridPoint>,
}

/// Exhaustive search over the grid. Ties go to the first point in
/// (overlap, pair, input) order.
pub fn calibrate(config: &CalibrationConfig) -> Result<Calibration> {
    config.validate()?;
    let targets = config.targets;
    let overlaps = config.overlap.values();
    let pairs = config.pair_mixedness.values();
    let inputs = config.input_mixedness.values();

    let rows: Vec<Vec<GridPoint>> = overlaps
        .par_iter()
        .flat_map_iter(|&v| pairs.iter().map(move |&lp| (v, lp)))
        .map(|(v, lp)| {
            let channel = channel_for(v)?;
            let (sf, ss) = if targets.needs_swap() {
                swap_exact(&channel, lp)?
            } else {
                (f64::NAN, f64::NAN)
            };
            inputs
                .iter()
                .map(|&li| {
                    let (f, fp) = teleport_exact(&channel, lp, li)?;
                    let prediction = Prediction {
                        fidelity_h: f[0],
                        fidelity_v: f[1],
                        fidelity_plus: f[2],
                        fidelity_r: f[3],
                        process_fidelity: fp,
                        swap_fidelity: sf,
                        swap_chsh: ss,
                    };
                    Ok(GridPoint {
                        overlap: v,
                        pair_mixedness: lp,
                        input_mixedness: li,
                        residual: targets.residual(&prediction),
                        prediction,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let grid: Vec<GridPoint> = rows.into_iter().flatten().collect();
    let best = grid
        .iter()
        .fold(None::<&GridPoint>, |best, p| match best {
            Some(b) if b.residual <= p.residual => Some(b),
            _ => Some(p),
        })
        .copied()
        .ok_or_else(|| Error::Config("calibration grid is empty".into()))?;
    // fill in swap values for reporting even when they were not fitted
    let best = if targets.needs_swap() {
        best
    } else {
        let (sf, ss) = swap_exact(&channel_for(best.overlap)?, best.pair_mixedness)?;
        GridPoint {
            prediction: Prediction {
                swap_fidelity: sf,
                swap_chsh: ss,
                ..best.prediction
            },
            ..best
        }
    };
    Ok(Calibration {
        best,
        targets,
        grid_points: grid.len(),
        grid,
    })
}
