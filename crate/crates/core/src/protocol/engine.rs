use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::prep::{InputStatePrep, DATA_QUBITS};
use crate::noise::{dephase_pair, leaky_cnot, phase_flip, werner, Channel, NoiseConfig};
use crate::quantum::linalg::{self, CMatrix, CVector};
use crate::quantum::{BasisKet, DensityMatrix, Gate, PureState, Register};
use crate::{Error, Result};

pub const REGISTER: [&str; 4] = ["q1", "q2", "q3", "q4"];
pub const EPR_QUBITS: [&str; 2] = ["q2", "q3"];

/// Branch probabilities at or below this are reported as undefined.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// Bob's X-basis result on `q3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum XSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl XSign {
    pub fn bit(self) -> u8 {
        match self {
            XSign::Plus => 0,
            XSign::Minus => 1,
        }
    }

    fn ket(self) -> BasisKet {
        match self {
            XSign::Plus => BasisKet::Plus,
            XSign::Minus => BasisKet::Minus,
        }
    }
}

/// Joint result of Alice's Z measurement on `q2` and Bob's X measurement on `q3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub m2: u8,
    pub m3: XSign,
}

impl Outcome {
    /// Ordered as `(0,+), (0,-), (1,+), (1,-)`.
    pub const ALL: [Outcome; 4] = [
        Outcome { m2: 0, m3: XSign::Plus },
        Outcome { m2: 0, m3: XSign::Minus },
        Outcome { m2: 1, m3: XSign::Plus },
        Outcome { m2: 1, m3: XSign::Minus },
    ];

    pub fn index(self) -> usize {
        2 * self.m2 as usize + self.m3.bit() as usize
    }

    /// Projector onto this outcome over `(q2, q3)`.
    fn projector(self) -> CMatrix {
        let z = if self.m2 == 0 { BasisKet::Zero } else { BasisKet::One };
        z.projector().kronecker(&self.m3.ket().projector())
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.m3 {
            XSign::Plus => '+',
            XSign::Minus => '-',
        };
        write!(f, "{}{}", self.m2, s)
    }
}

/// Pauli correction `phase · Z1^z1 · X4^x4`; the phase is bookkeeping only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub z1: bool,
    pub x4: bool,
    pub phase: i8,
}

impl Correction {
    pub fn label(&self) -> String {
        let mut s = String::new();
        if self.phase < 0 {
            s.push('-');
        }
        if self.z1 {
            s.push_str("Z1");
        }
        if self.x4 {
            s.push_str("X4");
        }
        if !self.z1 && !self.x4 {
            s.push('I');
        }
        s
    }

    /// The correction operator on `(q1, q4)` without its phase.
    pub fn gate(&self) -> Gate {
        let z = if self.z1 { Gate::z("q1") } else { Gate::identity("q1") };
        let x = if self.x4 { Gate::x("q4") } else { Gate::identity("q4") };
        z.then(&x).expect("disjoint data qubits")
    }

    pub fn matrix(&self) -> CMatrix {
        self.gate().matrix().clone()
    }
}

/// `(0,+) -> I`, `(0,-) -> Z1`, `(1,+) -> X4`, `(1,-) -> -Z1 X4`.
pub fn correction_for(outcome: Outcome) -> Correction {
    let z1 = outcome.m3 == XSign::Minus;
    let x4 = outcome.m2 == 1;
    Correction {
        z1,
        x4,
        phase: if z1 && x4 { -1 } else { 1 },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitMeaning {
    ZOutcome,
    XOutcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub sender: Party,
    pub bit: u8,
    pub meaning: BitMeaning,
}

/// The two messages exchanged for one outcome.
pub fn messages_for(outcome: Outcome) -> [ClassicalMessage; 2] {
    [
        ClassicalMessage {
            sender: Party::Alice,
            bit: outcome.m2,
            meaning: BitMeaning::ZOutcome,
        },
        ClassicalMessage {
            sender: Party::Bob,
            bit: outcome.m3.bit(),
            meaning: BitMeaning::XOutcome,
        },
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub enum EprKind {
    Ideal,
    Noisy(NoiseConfig),
    Custom,
}

/// Shared entangled pair on `q2`, `q3`.
#[derive(Clone, Debug, PartialEq)]
pub struct EprResource {
    state: DensityMatrix,
    kind: EprKind,
}

impl EprResource {
    pub fn ideal() -> Self {
        Self {
            state: werner(1.0).expect("p = 1 in range"),
            kind: EprKind::Ideal,
        }
    }

    /// Werner mixing followed by source dephasing.
    pub fn from_noise(cfg: &NoiseConfig) -> Result<Self> {
        let rho = werner(cfg.werner_p)?;
        let rho = dephase_pair(cfg.visibility_v, EPR_QUBITS)?.apply(&rho)?;
        Ok(Self {
            state: rho,
            kind: EprKind::Noisy(*cfg),
        })
    }

    pub fn custom(state: DensityMatrix) -> Result<Self> {
        if state.labels() != EPR_QUBITS {
            return Err(Error::InvalidState(format!(
                "EPR resource must be on {EPR_QUBITS:?}, got {:?}",
                state.labels()
            )));
        }
        Ok(Self {
            state,
            kind: EprKind::Custom,
        })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn kind(&self) -> &EprKind {
        &self.kind
    }
}

/// Control/target orientation of a local CNOT. `Forward` means `q1 -> q2`
/// for `C12` and `q3 -> q4` for `C34`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Forward,
    Reverse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalGate {
    C12,
    C34,
}

impl LocalGate {
    pub fn pair(self, orientation: Orientation) -> (&'static str, &'static str) {
        let (a, b) = match self {
            LocalGate::C12 => ("q1", "q2"),
            LocalGate::C34 => ("q3", "q4"),
        };
        match orientation {
            Orientation::Forward => (a, b),
            Orientation::Reverse => (b, a),
        }
    }
}

/// The local gate stage of the protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalGates {
    pub c12: Orientation,
    pub c34: Orientation,
    pub extinction_eps: f64,
    pub gate_dephasing: f64,
}

impl Default for LocalGates {
    fn default() -> Self {
        Self::ideal()
    }
}

impl LocalGates {
    pub fn ideal() -> Self {
        Self {
            c12: Orientation::Forward,
            c34: Orientation::Forward,
            extinction_eps: 0.0,
            gate_dephasing: 0.0,
        }
    }

    pub fn from_noise(cfg: &NoiseConfig) -> Self {
        Self {
            extinction_eps: cfg.extinction_eps,
            gate_dephasing: cfg.gate_dephasing,
            ..Self::ideal()
        }
    }

    pub fn with_orientation(c12: Orientation, c34: Orientation) -> Self {
        Self {
            c12,
            c34,
            ..Self::ideal()
        }
    }

    pub fn is_unitary(&self) -> bool {
        self.extinction_eps == 0.0 && self.gate_dephasing == 0.0
    }

    /// Noisy channel for one local gate. The phase error sits on `q4` after `C34`.
    pub fn channel(&self, which: LocalGate) -> Result<Channel> {
        let orientation = match which {
            LocalGate::C12 => self.c12,
            LocalGate::C34 => self.c34,
        };
        let (control, target) = which.pair(orientation);
        let ch = leaky_cnot(self.extinction_eps, control, target)?;
        match which {
            LocalGate::C12 => Ok(ch),
            LocalGate::C34 => ch.then(&phase_flip(self.gate_dephasing, "q4")?),
        }
    }

    fn unitary(&self, which: LocalGate) -> Result<Gate> {
        let orientation = match which {
            LocalGate::C12 => self.c12,
            LocalGate::C34 => self.c34,
        };
        let (control, target) = which.pair(orientation);
        Gate::cnot(control, target)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchSelection {
    All,
    Sampled(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum BranchState {
    Defined(DensityMatrix),
    /// Zero-probability branch; no state is defined.
    Undefined,
}

impl BranchState {
    pub fn defined(&self) -> Option<&DensityMatrix> {
        match self {
            BranchState::Defined(rho) => Some(rho),
            BranchState::Undefined => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub outcome: Outcome,
    pub probability: f64,
    pub correction: Correction,
    /// Normalized state of `(q1, q4)` before correction.
    pub uncorrected: BranchState,
    /// Normalized state of `(q1, q4)` after correction.
    pub corrected: BranchState,
}

impl Branch {
    pub fn messages(&self) -> [ClassicalMessage; 2] {
        messages_for(self.outcome)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolRun {
    pub input: String,
    pub branches: Vec<Branch>,
}

impl ProtocolRun {
    pub fn branch(&self, outcome: Outcome) -> Option<&Branch> {
        self.branches.iter().find(|b| b.outcome == outcome)
    }

    /// Probability-weighted mixture of the corrected branch states.
    pub fn output_state(&self) -> Result<DensityMatrix> {
        let mut acc = CMatrix::zeros(4, 4);
        let mut total = 0.0;
        for b in &self.branches {
            if let BranchState::Defined(rho) = &b.corrected {
                acc += rho.matrix().scale(b.probability);
                total += b.probability;
            }
        }
        if total <= 0.0 {
            return Err(Error::AbortedRun);
        }
        DensityMatrix::from_approximate(&acc.unscale(total), data_labels())
    }
}

fn data_labels() -> Vec<String> {
    DATA_QUBITS.iter().map(|s| s.to_string()).collect()
}

fn register_labels() -> Vec<String> {
    REGISTER.iter().map(|s| s.to_string()).collect()
}

/// Two classical bits per completed run.
pub fn classical_cost(run: &ProtocolRun) -> Result<usize> {
    let completed = run
        .branches
        .iter()
        .any(|b| matches!(b.corrected, BranchState::Defined(_)));
    if !completed {
        return Err(Error::AbortedRun);
    }
    Ok(messages_for(run.branches[0].outcome).len())
}

/// Bits needed when the gate is instead performed by teleporting both data
/// qubits to one node and one back, each state teleportation sending the two
/// bits of a Bell measurement.
pub fn state_teleportation_baseline_cost() -> usize {
    const TELEPORTATIONS: usize = 2;
    const BITS_PER_BELL_MEASUREMENT: usize = 2;
    TELEPORTATIONS * BITS_PER_BELL_MEASUREMENT
}

/// The protocol with a fixed local-gate stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Protocol {
    pub gates: LocalGates,
}

impl Protocol {
    pub fn new(gates: LocalGates) -> Self {
        Self { gates }
    }

    pub fn from_noise(cfg: &NoiseConfig) -> Self {
        Self::new(LocalGates::from_noise(cfg))
    }

    /// `ρ_14 ⊗ ρ_23` reordered to `(q1, q2, q3, q4)`.
    pub fn build_joint_state(
        &self,
        prep: &InputStatePrep,
        epr: &EprResource,
    ) -> Result<DensityMatrix> {
        let joint = joint_matrix(prep.state().to_density().matrix(), epr.state().matrix());
        DensityMatrix::new(joint, register_labels())
    }

    /// Unnormalized, uncorrected branch operators on `(q1, q4)` for a raw
    /// (not necessarily Hermitian) input operator. Linear in `rho14`.
    pub fn branch_operators(&self, rho14: &CMatrix, epr: &CMatrix) -> Result<[CMatrix; 4]> {
        let labels = register_labels();
        let mut rho = joint_matrix(rho14, epr);
        rho = self.gates.channel(LocalGate::C12)?.apply_matrix(&rho, &labels)?;
        rho = self.gates.channel(LocalGate::C34)?.apply_matrix(&rho, &labels)?;
        Ok(Outcome::ALL.map(|o| {
            let p = linalg::embed(&o.projector(), &[1, 2], 4);
            linalg::partial_trace(&(&p * &rho * &p), &[0, 3], 4)
        }))
    }

    /// Choi matrix of the corrected map on `(q1, q4)` with all four branches
    /// kept: `J = Σ_ij |i><j| ⊗ Σ_b C_b B_b(|i><j|) C_b†`, input factor first.
    pub fn teleported_choi(&self, epr: &EprResource) -> Result<CMatrix> {
        let corrections: Vec<CMatrix> = Outcome::ALL
            .iter()
            .map(|&o| correction_for(o).matrix())
            .collect();
        let mut j = CMatrix::zeros(16, 16);
        for i in 0..4 {
            for k in 0..4 {
                let mut unit = CMatrix::zeros(4, 4);
                unit[(i, k)] = linalg::ONE;
                let ops = self.branch_operators(&unit, epr.state().matrix())?;
                let mut image = CMatrix::zeros(4, 4);
                for (op, c) in ops.iter().zip(&corrections) {
                    image += c * op * c.adjoint();
                }
                j.view_mut((4 * i, 4 * k), (4, 4)).copy_from(&image);
            }
        }
        Ok(j)
    }

    /// Runs the protocol in density-matrix mode.
    pub fn run(
        &self,
        prep: &InputStatePrep,
        epr: &EprResource,
        selection: BranchSelection,
    ) -> Result<ProtocolRun> {
        let rho14 = prep.state().to_density();
        let ops = self.branch_operators(rho14.matrix(), epr.state().matrix())?;
        let mut branches: Vec<Branch> = Outcome::ALL
            .iter()
            .zip(ops)
            .map(|(&outcome, op)| make_branch(outcome, op))
            .collect::<Result<_>>()?;
        if let BranchSelection::Sampled(seed) = selection {
            let pick = sample_outcome(&branches, seed);
            branches.retain(|b| b.outcome == pick);
        }
        Ok(ProtocolRun {
            input: prep.token(),
            branches,
        })
    }

    /// State-vector mode with an ideal EPR pair and unitary local gates.
    /// Returns the unnormalized, uncorrected branch vectors on `(q1, q4)`,
    /// indexed like [`Outcome::ALL`].
    pub fn run_pure(&self, psi14: &PureState) -> Result<[CVector; 4]> {
        if !self.gates.is_unitary() {
            return Err(Error::InvalidState(
                "state-vector mode needs noiseless local gates".into(),
            ));
        }
        if psi14.labels() != DATA_QUBITS {
            return Err(Error::InvalidState(format!(
                "input must be on {DATA_QUBITS:?}"
            )));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = PureState::new(
            &[linalg::real(h), linalg::ZERO, linalg::ZERO, linalg::real(h)],
            &EPR_QUBITS,
        )?;
        let joint = {
            use crate::quantum::Tensor;
            psi14.tensor(&phi)?.reordered(&REGISTER)?
        };
        let joint = self.gates.unitary(LocalGate::C12)?.apply(&joint)?;
        let joint = self.gates.unitary(LocalGate::C34)?.apply(&joint)?;
        let amps = joint.amplitudes();
        Ok(Outcome::ALL.map(|o| {
            let z = if o.m2 == 0 { BasisKet::Zero } else { BasisKet::One };
            let bra = z.vector().kronecker(&o.m3.ket().vector());
            // contract q2, q3 with the outcome bra
            CVector::from_fn(4, |r, _| {
                let (a, d) = (r >> 1, r & 1);
                (0..4)
                    .map(|k| {
                        let (b, c) = (k >> 1, k & 1);
                        let idx = (a << 3) | (b << 2) | (c << 1) | d;
                        bra[k].conj() * amps[idx]
                    })
                    .sum()
            })
        }))
    }
}

/// Ideal-gate convenience wrapper around [`Protocol::run`].
pub fn run_protocol(
    prep: &InputStatePrep,
    epr: &EprResource,
    selection: BranchSelection,
) -> Result<ProtocolRun> {
    Protocol::default().run(prep, epr, selection)
}

fn joint_matrix(rho14: &CMatrix, epr: &CMatrix) -> CMatrix {
    // (q1, q4, q2, q3) -> (q1, q2, q3, q4)
    linalg::permute_matrix(&rho14.kronecker(epr), &[0, 2, 3, 1])
}

fn make_branch(outcome: Outcome, op: CMatrix) -> Result<Branch> {
    let correction = correction_for(outcome);
    let probability = linalg::trace(&op).re;
    if probability <= ZERO_PROBABILITY {
        return Ok(Branch {
            outcome,
            probability: probability.max(0.0),
            correction,
            uncorrected: BranchState::Undefined,
            corrected: BranchState::Undefined,
        });
    }
    let raw = op.unscale(probability);
    let c = correction.matrix();
    let fixed = &c * &raw * c.adjoint();
    Ok(Branch {
        outcome,
        probability,
        correction,
        uncorrected: BranchState::Defined(DensityMatrix::from_approximate(&raw, data_labels())?),
        corrected: BranchState::Defined(DensityMatrix::from_approximate(&fixed, data_labels())?),
    })
}

/// Measures `q2` first, then `q3` conditioned on it.
fn sample_outcome(branches: &[Branch], seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = |o: Outcome| {
        branches
            .iter()
            .find(|b| b.outcome == o)
            .map_or(0.0, |b| b.probability)
    };
    let [a, b, c, d] = Outcome::ALL;
    let p_m2_zero = p(a) + p(b);
    let total = p_m2_zero + p(c) + p(d);
    let u2: f64 = rng.random::<f64>() * total;
    let (plus, minus) = if u2 < p_m2_zero { (a, b) } else { (c, d) };
    let u3: f64 = rng.random::<f64>() * (p(plus) + p(minus));
    if u3 < p(plus) {
        plus
    } else {
        minus
    }
}
