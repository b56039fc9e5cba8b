//! Projective measurement, the two-qubit communication protocol and
//! entanglement entropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, partial_trace, tensor_all, BasisLabel, ComplexMatrix, StateVector, C64, ZERO,
};
use crate::network::{abcd_coefficients, network_eigensystem, NetworkSystem};
use crate::qubit::QubitParams;

/// Outcomes below this probability cannot be collapsed onto.
pub const MIN_PROBABILITY: f64 = 1e-14;
/// Reduced-density eigenvalues below this are dropped from the entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    pub matrix: ComplexMatrix,
    pub label: String,
}

impl Projector {
    pub fn new(matrix: ComplexMatrix, label: impl Into<String>) -> Self {
        Self {
            matrix,
            label: label.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `max|P² − P|`.
    pub fn idempotency_deviation(&self) -> f64 {
        (&self.matrix * &self.matrix).max_abs_diff(&self.matrix)
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(ComplexMatrix::identity(dim), "identity")
    }
}

fn on_qubit1(block: &ComplexMatrix, label: String) -> Projector {
    let i2 = ComplexMatrix::identity(2);
    Projector::new(tensor_all(&[&i2, block, &i2]), label)
}

fn on_qubit2(block: &ComplexMatrix, label: String) -> Projector {
    let i2 = ComplexMatrix::identity(2);
    Projector::new(tensor_all(&[&i2, &i2, block]), label)
}

fn level_block(excited: bool) -> ComplexMatrix {
    let k = usize::from(excited);
    ComplexMatrix::from_fn(2, 2, |i, j| {
        if i == k && j == k {
            C64::new(1.0, 0.0)
        } else {
            ZERO
        }
    })
}

/// `I ⊗ |e₁⟩⟨e₁| ⊗ I` (or the ground analog) in the network energy basis.
pub fn projector_qubit1_energy(excited: bool) -> Projector {
    let name = if excited {
        "qubit1 excited"
    } else {
        "qubit1 ground"
    };
    on_qubit1(&level_block(excited), name.into())
}

/// Qubit-2 analog of [`projector_qubit1_energy`].
pub fn projector_qubit2_energy(excited: bool) -> Projector {
    let name = if excited {
        "qubit2 excited"
    } else {
        "qubit2 ground"
    };
    on_qubit2(&level_block(excited), name.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    X1,
    X2,
}

/// `I ⊗ |x_node⟩⟨x_node| ⊗ I` written in the network energy basis.
pub fn projector_qubit1_position(node: Node, p: &QubitParams, t: f64) -> Result<Projector> {
    let k = abcd_coefficients(p, t, ZERO)?;
    // components ⟨g|x⟩, ⟨e|x⟩
    let w = match node {
        Node::X1 => [k.a.conj(), k.c.conj()],
        Node::X2 => [k.b.conj(), k.d.conj()],
    };
    let name = match node {
        Node::X1 => "qubit1 at x1",
        Node::X2 => "qubit1 at x2",
    };
    Ok(on_qubit1(&ComplexMatrix::outer(&w, &w), name.into()))
}

/// Born probability `⟨ψ|P|ψ⟩` and the collapsed state `Pψ/‖Pψ‖`.
pub fn measure(state: &StateVector, p: &Projector) -> Result<(f64, StateVector)> {
    if p.dim() != state.dim() {
        return Err(Error::DimMismatch {
            expected: p.dim(),
            found: state.dim(),
        });
    }
    let projected = p.matrix.mul_slice(state.amplitudes());
    let prob = crate::linalg::norm_sqr(&projected);
    if prob < MIN_PROBABILITY {
        return Err(Error::ZeroProbability(prob));
    }
    let collapsed = StateVector::normalized(projected, state.basis())?;
    Ok((prob, collapsed))
}

/// `⟨ψ|P|ψ⟩` without collapsing.
pub fn probability(state: &StateVector, p: &Projector) -> Result<f64> {
    if p.dim() != state.dim() {
        return Err(Error::DimMismatch {
            expected: p.dim(),
            found: state.dim(),
        });
    }
    Ok(crate::linalg::norm_sqr(
        &p.matrix.mul_slice(state.amplitudes()),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub enum PreparedState {
    E2,
    E3,
    /// Amplitudes in the network energy basis.
    Custom(Vec<C64>),
}

impl PreparedState {
    pub fn resolve(&self, sys: &NetworkSystem) -> Result<StateVector> {
        match self {
            PreparedState::E2 => Ok(network_eigensystem(sys, 0.0)?.vectors[1].clone()),
            PreparedState::E3 => Ok(network_eigensystem(sys, 0.0)?.vectors[2].clone()),
            PreparedState::Custom(c) => {
                if c.len() != 8 {
                    return Err(Error::DimMismatch {
                        expected: 8,
                        found: c.len(),
                    });
                }
                StateVector::new(c.clone(), BasisLabel::NetworkEnergy)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Ground,
    Excited,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Ground => "ground",
            Outcome::Excited => "excited",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShotRecord {
    pub shot: u64,
    pub outcome: Outcome,
    /// Born probability of the observed outcome.
    pub p_outcome: f64,
    /// Qubit-2 ground-state probability after the collapse.
    pub q2_ground_prob: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct ProtocolStats {
    pub shots: Vec<ShotRecord>,
    pub excited_count: usize,
    /// Shots whose collapsed state still has qubit 2 excited with
    /// probability above 1e-12 after a qubit-1 excited outcome.
    pub joint_excited_count: usize,
}

impl ProtocolStats {
    pub fn excited_frequency(&self) -> f64 {
        self.excited_count as f64 / self.shots.len() as f64
    }
}

/// Per-shot generator: ChaCha8 seeded with `seed`, stream `shot`.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

struct Branch {
    prob: f64,
    q2_ground: f64,
}

fn branch(state: &StateVector, excited: bool) -> Result<Option<Branch>> {
    let p = projector_qubit1_energy(excited);
    let prob = probability(state, &p)?;
    if prob < MIN_PROBABILITY {
        return Ok(None);
    }
    let (_, collapsed) = measure(state, &p)?;
    let q2_ground = probability(&collapsed, &projector_qubit2_energy(false))?;
    Ok(Some(Branch { prob, q2_ground }))
}

/// Repeated qubit-1 energy measurement on a freshly prepared state.
///
/// Outcomes are drawn by inverse CDF over `[ground, excited]` from one
/// uniform deviate per shot.
pub fn communication_protocol(
    sys: &NetworkSystem,
    prepared: &PreparedState,
    shots: u64,
    seed: u64,
) -> Result<ProtocolStats> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let state = prepared.resolve(sys)?;
    let ground = branch(&state, false)?;
    let excited = branch(&state, true)?;
    let p_ground = ground.as_ref().map_or(0.0, |b| b.prob);
    let records: Vec<ShotRecord> = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let u: f64 = shot_rng(seed, shot).gen();
            let (outcome, b) = match (&ground, &excited) {
                (Some(g), _) if u < p_ground => (Outcome::Ground, g),
                (_, Some(e)) => (Outcome::Excited, e),
                (Some(g), None) => (Outcome::Ground, g),
                (None, None) => unreachable!("probabilities sum to one"),
            };
            ShotRecord {
                shot,
                outcome,
                p_outcome: b.prob,
                q2_ground_prob: b.q2_ground,
                seed,
            }
        })
        .collect();
    let excited_count = records
        .iter()
        .filter(|r| r.outcome == Outcome::Excited)
        .count();
    let joint_excited_count = records
        .iter()
        .filter(|r| r.outcome == Outcome::Excited && 1.0 - r.q2_ground_prob > 1e-12)
        .count();
    Ok(ProtocolStats {
        shots: records,
        excited_count,
        joint_excited_count,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EntropyUnit {
    #[default]
    Nats,
    Bits,
}

/// Von Neumann entropy of subsystem `keep` of a pure state.
pub fn von_neumann_entropy(
    state: &StateVector,
    dims: &[usize],
    keep: usize,
    unit: EntropyUnit,
) -> Result<f64> {
    let total: usize = dims.iter().product();
    if total != state.dim() {
        return Err(Error::DimMismatch {
            expected: total,
            found: state.dim(),
        });
    }
    let rho = partial_trace(&state.density_matrix(), dims, keep)?;
    let eig = hermitian_eig(&rho)?;
    let nats: f64 = eig
        .values
        .iter()
        .filter(|&&l| l > ENTROPY_CUTOFF)
        .map(|&l| -l * l.ln())
        .sum();
    let s = nats.max(0.0);
    Ok(match unit {
        EntropyUnit::Nats => s,
        EntropyUnit::Bits => s / std::f64::consts::LN_2,
    })
}

/// Network subsystem dimensions `[cavity, qubit 1, qubit 2]`.
pub const NETWORK_DIMS: [usize; 3] = [2, 2, 2];
