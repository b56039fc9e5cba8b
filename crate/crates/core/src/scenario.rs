//! Scenario files and experiment dispatch.
//!
//! A scenario file is TOML holding a list of `[[scenario]]` tables:
//!
//! ```toml
//! [[scenario]]
//! name = "resonant"
//! operation = "evolve"          # eig | evolve | fig3 | protocol | entropy
//! initial = "qubit_excited"
//! time = { t0 = 0.0, t1 = 10.0, samples = 201 }
//!
//! [scenario.system]
//! kind = "jc"                   # qubit | jc | network
//! e_phi1 = 1.0
//! e_phi2 = 2.0
//! e_g = 0.0
//! detuning = "0.1 + cosine(amplitude=2, omega=20)"
//! g = 1.0
//! ```
//!
//! Time-dependent parameters accept a number or a signal expression.

use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jc::{
    energy_transfer_coefficient, excitation_from_amplitudes, jc_eigensystem, jc_propagator,
    time_grid, CoupledSystem, JcMode, QubitLevels,
};
use crate::linalg::{BasisLabel, StateVector};
use crate::measure::{
    communication_protocol, von_neumann_entropy, EntropyUnit, PreparedState, NETWORK_DIMS,
};
use crate::network::{
    network_eigensystem, network_propagator, NetworkForm, NetworkMode, NetworkSystem,
};
use crate::output::{Cell, RunRecord};
use crate::qubit::{
    occupancy, qubit_eigensystem, qubit_propagator, OccupancyBasis, PropagatorMode, QubitParams,
};
use crate::signal::DriveSignal;

mod signal_text {
    use super::DriveSignal;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &DriveSignal, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&s.to_string())
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Integer(i64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DriveSignal, D::Error> {
        match Raw::deserialize(de)? {
            Raw::Number(x) => Ok(DriveSignal::constant(x)),
            Raw::Integer(n) => Ok(DriveSignal::constant(n as f64)),
            Raw::Text(t) => t
                .parse()
                .map_err(|e| serde::de::Error::custom(format!("bad signal `{t}`: {e}"))),
        }
    }

    pub mod option {
        use super::*;
        use serde::Serialize;

        pub fn serialize<S: Serializer>(
            s: &Option<DriveSignal>,
            ser: S,
        ) -> Result<S::Ok, S::Error> {
            s.as_ref().map(|x| x.to_string()).serialize(ser)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            de: D,
        ) -> Result<Option<DriveSignal>, D::Error> {
            super::deserialize(de).map(Some)
        }
    }
}

fn zero() -> DriveSignal {
    DriveSignal::constant(0.0)
}

fn one() -> DriveSignal {
    DriveSignal::constant(1.0)
}

fn unit_speed() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Eig,
    Evolve,
    Fig3,
    Protocol,
    Entropy,
}

impl Operation {
    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Eig => "eig",
            Operation::Evolve => "evolve",
            Operation::Fig3 => "fig3",
            Operation::Protocol => "protocol",
            Operation::Entropy => "entropy",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Analytic,
    Stepped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSpec {
    #[serde(with = "signal_text")]
    pub ep1: DriveSignal,
    #[serde(with = "signal_text")]
    pub ep2: DriveSignal,
    #[serde(with = "signal_text")]
    pub ts_mag: DriveSignal,
    #[serde(with = "signal_text", default = "zero")]
    pub ts_phase: DriveSignal,
}

impl QubitSpec {
    pub fn params(&self) -> QubitParams {
        QubitParams {
            ep1: self.ep1.clone(),
            ep2: self.ep2.clone(),
            ts_mag: self.ts_mag.clone(),
            ts_phase: self.ts_phase.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JcSpec {
    pub e_phi1: f64,
    pub e_phi2: f64,
    #[serde(with = "signal_text", default = "zero")]
    pub e_g: DriveSignal,
    /// Excited level; exclusive with `detuning`.
    #[serde(
        with = "signal_text::option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub e_e: Option<DriveSignal>,
    /// `Δ_q − Δ_EC`; sets `E_e = E_g + (Eφ2 − Eφ1) + Δ`.
    #[serde(
        with = "signal_text::option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub detuning: Option<DriveSignal>,
    #[serde(with = "signal_text")]
    pub g: DriveSignal,
    #[serde(default)]
    pub g_phase: f64,
}

impl JcSpec {
    pub fn system(&self) -> std::result::Result<CoupledSystem, String> {
        let e_e = match (&self.e_e, &self.detuning) {
            (Some(e), None) => e.clone(),
            (None, Some(d)) => {
                let gap = DriveSignal::constant(self.e_phi2 - self.e_phi1).plus(d);
                if self.e_g == zero() {
                    gap
                } else {
                    self.e_g.plus(&gap)
                }
            }
            (None, None) => return Err("jc system needs `e_e` or `detuning`".into()),
            (Some(_), Some(_)) => {
                return Err("jc system takes only one of `e_e` and `detuning`".into())
            }
        };
        Ok(CoupledSystem {
            qubit: QubitLevels::Direct {
                e_g: self.e_g.clone(),
                e_e,
            },
            cavity: (self.e_phi1, self.e_phi2),
            coupling: self.g.clone(),
            coupling_phase: self.g_phase,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSpec {
    #[default]
    Simplified,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub e_g: f64,
    pub g1: f64,
    pub g2: f64,
    #[serde(with = "signal_text", default = "zero")]
    pub d1: DriveSignal,
    #[serde(with = "signal_text", default = "zero")]
    pub d2: DriveSignal,
    #[serde(with = "signal_text", default = "one")]
    pub f1: DriveSignal,
    #[serde(default)]
    pub waveguide_length: f64,
    #[serde(default = "unit_speed")]
    pub signal_speed: f64,
    #[serde(default)]
    pub form: FormSpec,
}

impl NetworkSpec {
    pub fn system(&self) -> Result<NetworkSystem> {
        let mut sys = NetworkSystem::simplified(self.e_g, self.g1, self.g2, 0.0, 0.0)?;
        sys.d1 = self.d1.clone();
        sys.d2 = self.d2.clone();
        sys.f1 = self.f1.clone();
        sys.waveguide_length = self.waveguide_length;
        sys.signal_speed = self.signal_speed;
        sys.validate()?;
        Ok(sys)
    }

    pub fn form(&self) -> NetworkForm {
        match self.form {
            FormSpec::Simplified => NetworkForm::Simplified,
            FormSpec::General => NetworkForm::General,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Qubit(QubitSpec),
    Jc(JcSpec),
    Network(NetworkSpec),
}

impl SystemSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemSpec::Qubit(_) => "qubit",
            SystemSpec::Jc(_) => "jc",
            SystemSpec::Network(_) => "network",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub operation: Operation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub time: TimeGrid,
    pub system: SystemSpec,
}

impl Scenario {
    /// Output file name, `<name>.csv` unless set.
    pub fn output_file(&self) -> String {
        self.output
            .clone()
            .unwrap_or_else(|| format!("{}.csv", self.name))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub scenario: Vec<Scenario>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: missing key `{key}`")]
    MissingKey {
        key: String,
        line: usize,
        column: usize,
    },
    #[error("scenario `{scenario}`: {message}")]
    Validation { scenario: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// One-based line and column of a byte offset.
pub fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn invalid(s: &Scenario, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        scenario: s.name.clone(),
        message: message.into(),
    }
}

/// Parses and validates a scenario file.
pub fn parse_scenario_file(text: &str) -> std::result::Result<Vec<Scenario>, ConfigError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        let message = e.message().trim().to_string();
        match message
            .strip_prefix("missing field `")
            .and_then(|r| r.split('`').next())
        {
            Some(key) => ConfigError::MissingKey {
                key: key.to_string(),
                line,
                column,
            },
            None => ConfigError::Parse {
                line,
                column,
                message,
            },
        }
    })?;
    let mut seen = HashSet::new();
    for s in &file.scenario {
        if !seen.insert(s.name.as_str()) {
            return Err(invalid(s, "duplicate scenario name"));
        }
        validate_scenario(s)?;
    }
    Ok(file.scenario)
}

pub fn to_toml(scenarios: &[Scenario]) -> String {
    toml::to_string(&ScenarioFile {
        scenario: scenarios.to_vec(),
    })
    .expect("scenarios serialize to TOML")
}

pub fn validate_scenario(s: &Scenario) -> std::result::Result<(), ConfigError> {
    if s.name.trim().is_empty() {
        return Err(invalid(s, "name must not be empty"));
    }
    let TimeGrid { t0, t1, samples } = s.time;
    if samples < 2 {
        return Err(invalid(
            s,
            format!("time.samples must be at least 2 (got {samples})"),
        ));
    }
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(invalid(
            s,
            format!("time grid needs t1 > t0 (got {t0}, {t1})"),
        ));
    }
    if let Some(dt) = s.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(s, format!("dt must be positive (got {dt})")));
        }
    }
    let kind = s.system.kind();
    let allowed = match s.operation {
        Operation::Eig | Operation::Evolve => true,
        Operation::Fig3 => kind == "jc",
        Operation::Protocol => kind == "network",
        Operation::Entropy => kind != "qubit",
    };
    if !allowed {
        return Err(invalid(
            s,
            format!(
                "operation `{}` does not apply to a {kind} system",
                s.operation.as_str()
            ),
        ));
    }
    if s.operation == Operation::Evolve && s.initial.is_none() {
        return Err(invalid(s, "missing key `initial` for evolve"));
    }
    if s.operation == Operation::Protocol && s.shots.is_none() {
        return Err(invalid(s, "missing key `shots` for protocol"));
    }
    if s.shots == Some(0) {
        return Err(invalid(s, "shots must be at least 1"));
    }
    let system_check: Result<()> = match &s.system {
        SystemSpec::Qubit(q) => q.params().validate(t0, t1),
        SystemSpec::Jc(j) => {
            let sys = j.system().map_err(|m| invalid(s, m))?;
            if !(j.e_phi2 > j.e_phi1) {
                return Err(invalid(s, "cavity energies must satisfy e_phi2 > e_phi1"));
            }
            sys.coupling.validate().and_then(|_| match &sys.qubit {
                QubitLevels::Direct { e_g, e_e } => e_g.validate().and_then(|_| e_e.validate()),
                QubitLevels::FromQubit(p) => p.validate(t0, t1),
            })
        }
        SystemSpec::Network(n) => n.system().map(|_| ()),
    };
    system_check.map_err(|e| invalid(s, e.to_string()))?;
    if let Some(init) = &s.initial {
        if s.operation == Operation::Evolve || s.operation == Operation::Protocol {
            check_initial(kind, init).map_err(|m| invalid(s, m))?;
        }
    }
    Ok(())
}

fn check_initial(kind: &str, init: &str) -> std::result::Result<(), String> {
    let ok = match kind {
        "qubit" => matches!(init, "x1" | "x2" | "ground" | "excited"),
        "jc" => matches!(
            init,
            "ground" | "qubit_excited" | "cavity_excited" | "both_excited"
        ),
        _ => parse_network_initial(init).is_some(),
    };
    if ok {
        Ok(())
    } else {
        Err(format!(
            "unknown initial state `{init}` for a {kind} system"
        ))
    }
}

enum NetworkInitial {
    Eigen(usize),
    Basis(usize),
}

fn parse_network_initial(init: &str) -> Option<NetworkInitial> {
    let idx = |s: &str| s.parse::<usize>().ok();
    if let Some(k) = init.strip_prefix('e').and_then(idx) {
        return (1..=8).contains(&k).then_some(NetworkInitial::Eigen(k - 1));
    }
    if let Some(k) = init.strip_prefix("basis").and_then(idx) {
        return (k < 8).then_some(NetworkInitial::Basis(k));
    }
    None
}

/// Runtime overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, s: &Scenario) -> Scenario {
        let mut s = s.clone();
        if let Some(seed) = self.seed {
            s.seed = Some(seed);
        }
        if let Some(n) = self.samples {
            s.time.samples = n;
        }
        s
    }
}

/// Runs one validated scenario.
pub fn run_experiment(s: &Scenario) -> Result<RunRecord> {
    let start = Instant::now();
    let grid = time_grid(s.time.t0, s.time.t1, s.time.samples);
    let mut record = match (&s.system, s.operation) {
        (SystemSpec::Qubit(q), Operation::Eig) => qubit_eig(&q.params(), &grid)?,
        (SystemSpec::Qubit(q), Operation::Evolve) => qubit_evolve(s, &q.params(), &grid)?,
        (SystemSpec::Jc(j), op) => {
            let sys = j.system().map_err(Error::InvalidParameter)?;
            match op {
                Operation::Eig => jc_eig(&sys, &grid)?,
                Operation::Evolve => jc_evolve(s, &sys, &grid)?,
                Operation::Fig3 => jc_transfer(&sys, &grid)?,
                Operation::Entropy => jc_entropy(&sys, s.time.t0)?,
                Operation::Protocol => return Err(unsupported(s)),
            }
        }
        (SystemSpec::Network(n), op) => {
            let sys = n.system()?;
            match op {
                Operation::Eig => network_eig(&sys, s.time.t0)?,
                Operation::Evolve => network_evolve_series(s, n, &sys, &grid)?,
                Operation::Protocol => network_protocol(s, &sys)?,
                Operation::Entropy => network_entropy(&sys, s.time.t0)?,
                Operation::Fig3 => return Err(unsupported(s)),
            }
        }
        _ => return Err(unsupported(s)),
    };
    record.name = s.name.clone();
    record.elapsed = start.elapsed();
    Ok(record)
}

fn unsupported(s: &Scenario) -> Error {
    Error::InvalidParameter(format!(
        "operation `{}` does not apply to a {} system",
        s.operation.as_str(),
        s.system.kind()
    ))
}

fn qubit_eig(p: &QubitParams, grid: &[f64]) -> Result<RunRecord> {
    let mut r = RunRecord::new("", &["t", "e1", "e2"]);
    for &t in grid {
        let eig = qubit_eigensystem(p, t)?;
        r.push(vec![t.into(), eig.e1.into(), eig.e2.into()]);
    }
    Ok(r)
}

fn qubit_evolve(s: &Scenario, p: &QubitParams, grid: &[f64]) -> Result<RunRecord> {
    let t0 = s.time.t0;
    let psi0 = match s.initial.as_deref().unwrap_or("x1") {
        "x1" => StateVector::basis_state(2, 0, BasisLabel::QubitPosition),
        "x2" => StateVector::basis_state(2, 1, BasisLabel::QubitPosition),
        "ground" => qubit_eigensystem(p, t0)?.v1,
        _ => qubit_eigensystem(p, t0)?.v2,
    };
    let mut r = RunRecord::new("", &["t", "p_x1", "p_x2", "p_ground", "p_excited"]);
    let mut psi = psi0.clone();
    let mut prev = t0;
    for &t in grid {
        psi = match s.method {
            Method::Analytic => psi0.evolved(&qubit_propagator(
                p,
                t0,
                t,
                PropagatorMode::Adiabatic,
                None,
            )?)?,
            Method::Stepped => psi.evolved(&qubit_propagator(
                p,
                prev,
                t,
                PropagatorMode::Stepped,
                s.dt,
            )?)?,
        };
        prev = t;
        let (x1, x2) = occupancy(&psi, OccupancyBasis::Position, p, t)?;
        let (g, e) = occupancy(&psi, OccupancyBasis::Energy, p, t)?;
        r.push(vec![t.into(), x1.into(), x2.into(), g.into(), e.into()]);
    }
    Ok(r)
}

fn jc_eig(sys: &CoupledSystem, grid: &[f64]) -> Result<RunRecord> {
    let mut r = RunRecord::new("", &["t", "e1", "e2", "e3", "e4"]);
    for &t in grid {
        let e = jc_eigensystem(sys, t)?.energies;
        r.push(vec![
            t.into(),
            e[0].into(),
            e[1].into(),
            e[2].into(),
            e[3].into(),
        ]);
    }
    Ok(r)
}

fn jc_evolve(s: &Scenario, sys: &CoupledSystem, grid: &[f64]) -> Result<RunRecord> {
    let index = match s.initial.as_deref().unwrap_or("qubit_excited") {
        "ground" => 0,
        "qubit_excited" => 1,
        "cavity_excited" => 2,
        _ => 3,
    };
    let psi0 = StateVector::basis_state(4, index, BasisLabel::CavityQubitEnergy);
    let t0 = s.time.t0;
    let mut r = RunRecord::new("", &["t", "p_qubit_excited", "p_cavity_excited"]);
    let mut psi = psi0.clone();
    let mut prev = t0;
    for &t in grid {
        psi = match s.method {
            Method::Analytic => {
                psi0.evolved(&jc_propagator(sys, t0, t, JcMode::ClosedForm, None)?)?
            }
            Method::Stepped => psi.evolved(&jc_propagator(sys, prev, t, JcMode::Stepped, s.dt)?)?,
        };
        prev = t;
        let (q, c) = excitation_from_amplitudes(&psi)?;
        r.push(vec![t.into(), q.into(), c.into()]);
    }
    Ok(r)
}

fn jc_transfer(sys: &CoupledSystem, grid: &[f64]) -> Result<RunRecord> {
    let mut r = RunRecord::new("", &["t", "coefficient"]);
    let t0 = grid[0];
    for &t in grid {
        r.push(vec![
            t.into(),
            energy_transfer_coefficient(sys, t0, t)?.into(),
        ]);
    }
    Ok(r)
}

fn jc_entropy(sys: &CoupledSystem, t: f64) -> Result<RunRecord> {
    let eig = jc_eigensystem(sys, t)?;
    let mut r = RunRecord::new("", &["state", "energy", "entropy"]);
    for k in 0..4 {
        let s = von_neumann_entropy(&eig.vectors[k], &[2, 2], 1, EntropyUnit::Nats)?;
        r.push(vec![
            format!("E{}", k + 1).into(),
            eig.energies[k].into(),
            s.into(),
        ]);
    }
    Ok(r)
}

fn network_eig(sys: &NetworkSystem, t: f64) -> Result<RunRecord> {
    let eig = network_eigensystem(sys, t)?;
    let mut r = RunRecord::new("", &["state", "energy", "norm", "product"]);
    for k in 0..8 {
        r.push(vec![
            format!("E{}", k + 1).into(),
            eig.energies[k].into(),
            eig.norms[k].into(),
            eig.product[k].into(),
        ]);
    }
    Ok(r)
}

fn network_evolve_series(
    s: &Scenario,
    spec: &NetworkSpec,
    sys: &NetworkSystem,
    grid: &[f64],
) -> Result<RunRecord> {
    let t0 = s.time.t0;
    let psi0 = match parse_network_initial(s.initial.as_deref().unwrap_or("e2")) {
        Some(NetworkInitial::Eigen(k)) => network_eigensystem(sys, t0)?.vectors[k].clone(),
        Some(NetworkInitial::Basis(k)) => StateVector::basis_state(8, k, BasisLabel::NetworkEnergy),
        None => {
            return Err(Error::InvalidParameter(
                "unknown initial network state".into(),
            ))
        }
    };
    let columns: Vec<String> = std::iter::once("t".to_string())
        .chain((0..8).map(|k| format!("p_{k}")))
        .collect();
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut r = RunRecord::new("", &cols);
    let mut psi = psi0.clone();
    let mut prev = t0;
    for &t in grid {
        psi = match s.method {
            Method::Analytic => psi0.evolved(&network_propagator(
                sys,
                t0,
                t,
                spec.form(),
                NetworkMode::Eigen,
                None,
            )?)?,
            Method::Stepped => psi.evolved(&network_propagator(
                sys,
                prev,
                t,
                spec.form(),
                NetworkMode::Stepped,
                s.dt,
            )?)?,
        };
        prev = t;
        let mut row: Vec<Cell> = vec![t.into()];
        row.extend(psi.probabilities().into_iter().map(Cell::from));
        r.push(row);
    }
    Ok(r)
}

fn network_protocol(s: &Scenario, sys: &NetworkSystem) -> Result<RunRecord> {
    let prepared = match s.initial.as_deref().unwrap_or("e2") {
        "e2" => PreparedState::E2,
        "e3" => PreparedState::E3,
        other => match parse_network_initial(other) {
            Some(NetworkInitial::Eigen(k)) => PreparedState::Custom(
                network_eigensystem(sys, 0.0)?.vectors[k]
                    .amplitudes()
                    .to_vec(),
            ),
            Some(NetworkInitial::Basis(k)) => PreparedState::Custom(
                StateVector::basis_state(8, k, BasisLabel::NetworkEnergy)
                    .amplitudes()
                    .to_vec(),
            ),
            None => {
                return Err(Error::InvalidParameter(format!(
                    "unknown prepared state `{other}`"
                )))
            }
        },
    };
    let stats = communication_protocol(sys, &prepared, s.shots.unwrap_or(1), s.seed.unwrap_or(0))?;
    let mut r = RunRecord::new("", &["shot", "outcome", "p_outcome", "q2_ground_prob"]);
    for rec in stats.shots {
        r.push(vec![
            rec.shot.into(),
            rec.outcome.as_str().into(),
            rec.p_outcome.into(),
            rec.q2_ground_prob.into(),
        ]);
    }
    Ok(r)
}

fn network_entropy(sys: &NetworkSystem, t: f64) -> Result<RunRecord> {
    let eig = network_eigensystem(sys, t)?;
    let mut r = RunRecord::new("", &["state", "energy", "s_cavity", "s_qubit1", "s_qubit2"]);
    for k in 0..8 {
        let mut row: Vec<Cell> = vec![format!("E{}", k + 1).into(), eig.energies[k].into()];
        for keep in 0..3 {
            row.push(
                von_neumann_entropy(&eig.vectors[k], &NETWORK_DIMS, keep, EntropyUnit::Nats)?
                    .into(),
            );
        }
        r.push(row);
    }
    Ok(r)
}

/// Combined transfer table of `fig3` runs: `scenario,t,coefficient`.
pub fn fig3_table(records: &[RunRecord]) -> RunRecord {
    let mut out = RunRecord::new("fig3", &["scenario", "t", "coefficient"]);
    for rec in records {
        for row in &rec.rows {
            out.push(vec![
                rec.name.clone().into(),
                row[0].clone(),
                row[1].clone(),
            ]);
        }
    }
    out
}

/// Bundled preset files as `(name, text)`.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig3", include_str!("../presets/fig3.toml")),
    ("jc", include_str!("../presets/jc.toml")),
    ("network", include_str!("../presets/network.toml")),
    ("qubit", include_str!("../presets/qubit.toml")),
];

/// Preset texts from `dir` (every `*.toml`, sorted by name) or the bundled
/// set when `dir` is `None`.
pub fn load_presets(dir: Option<&Path>) -> std::result::Result<Vec<(String, String)>, ConfigError> {
    let Some(dir) = dir else {
        return Ok(PRESETS
            .iter()
            .map(|(n, t)| (n.to_string(), t.to_string()))
            .collect());
    };
    let io = |e| ConfigError::Io {
        path: dir.display().to_string(),
        source: e,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            std::fs::read_to_string(&p)
                .map(|t| (name, t))
                .map_err(|e| ConfigError::Io {
                    path: p.display().to_string(),
                    source: e,
                })
        })
        .collect()
}
