//! Circuit representation, noise locations and fault configurations.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::pauli::Pauli1;

/// A gate acting on 0-based qubit indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    PrepZ(usize),
    H(usize),
    /// Noiseless Hadamard used as a basis relabeling; never a noise location.
    IdealH(usize),
    Cnot(usize, usize),
    MeasZ(usize),
    MeasX(usize),
}

impl Gate {
    pub fn qubits(&self) -> ([usize; 2], usize) {
        match *self {
            Gate::Cnot(c, t) => ([c, t], 2),
            Gate::PrepZ(q) | Gate::H(q) | Gate::IdealH(q) | Gate::MeasZ(q) | Gate::MeasX(q) => {
                ([q, 0], 1)
            }
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::MeasZ(_) | Gate::MeasX(_))
    }

    pub fn noise_class(&self) -> Option<NoiseClass> {
        match self {
            Gate::PrepZ(_) | Gate::H(_) => Some(NoiseClass::C1),
            Gate::Cnot(..) => Some(NoiseClass::C2),
            Gate::MeasZ(_) | Gate::MeasX(_) => Some(NoiseClass::C3),
            Gate::IdealH(_) => None,
        }
    }

    fn max_qubit(&self) -> usize {
        let (qs, k) = self.qubits();
        qs[..k].iter().copied().max().unwrap_or(0)
    }
}

/// Noise class of a location: 1-qubit gates and preparations, CNOTs, measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NoiseClass {
    C1,
    C2,
    C3,
}

/// A fault injected right after the gate of a location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fault {
    Pauli1(Pauli1),
    /// Pauli on (first, second) qubit of a CNOT, i.e. (control, target).
    Pauli2(Pauli1, Pauli1),
    Flip,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::Pauli1(p) => write!(f, "{}", p.symbol()),
            Fault::Pauli2(a, b) => write!(f, "{}{}", a.symbol(), b.symbol()),
            Fault::Flip => write!(f, "flip"),
        }
    }
}

/// The 15 non-identity two-qubit Paulis, ordered lexicographically with I < X < Y < Z.
pub fn two_qubit_alphabet() -> impl Iterator<Item = Fault> {
    (1..16).map(|k| Fault::Pauli2(Pauli1::ALL[k / 4], Pauli1::ALL[k % 4]))
}

/// Full fault alphabet of a gate (empty for noiseless gates).
pub fn alphabet(gate: &Gate) -> Vec<Fault> {
    match gate {
        Gate::PrepZ(_) => vec![Fault::Pauli1(Pauli1::X)],
        Gate::H(_) => [Pauli1::X, Pauli1::Y, Pauli1::Z]
            .map(Fault::Pauli1)
            .to_vec(),
        Gate::Cnot(..) => two_qubit_alphabet().collect(),
        Gate::MeasZ(_) | Gate::MeasX(_) => vec![Fault::Flip],
        Gate::IdealH(_) => Vec::new(),
    }
}

fn in_alphabet(gate: &Gate, fault: &Fault) -> bool {
    match (gate, fault) {
        (Gate::PrepZ(_), Fault::Pauli1(p)) => *p == Pauli1::X,
        (Gate::H(_), Fault::Pauli1(p)) => *p != Pauli1::I,
        (Gate::Cnot(..), Fault::Pauli2(a, b)) => !(*a == Pauli1::I && *b == Pauli1::I),
        (Gate::MeasZ(_) | Gate::MeasX(_), Fault::Flip) => true,
        _ => false,
    }
}

/// A noise location: one noisy gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Location {
    pub id: usize,
    pub gate: usize,
    pub class: NoiseClass,
}

/// Location counts per class; `n1_prep` of the `n1` class-1 locations are preparations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Census {
    pub n1: usize,
    pub n1_prep: usize,
    pub n2: usize,
    pub n3: usize,
}

impl Census {
    pub fn total(&self) -> usize {
        self.n1 + self.n2 + self.n3
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.n1, self.n2, self.n3]
    }
}

/// Number of faults per class, `(w1, w2, w3)`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct SubsetIndex {
    pub w1: usize,
    pub w2: usize,
    pub w3: usize,
}

impl SubsetIndex {
    pub fn new(w1: usize, w2: usize, w3: usize) -> Self {
        SubsetIndex { w1, w2, w3 }
    }

    pub fn total(&self) -> usize {
        self.w1 + self.w2 + self.w3
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.w1, self.w2, self.w3]
    }

    pub(crate) fn check(&self, census: &Census) -> Result<(), Error> {
        for (class, (w, n)) in self.as_array().into_iter().zip(census.counts()).enumerate() {
            if w > n {
                return Err(Error::SubsetTooLarge {
                    class: class + 1,
                    weight: w,
                    available: n,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.w1, self.w2, self.w3)
    }
}

/// Faults keyed by location id, kept sorted by location.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FaultConfig {
    faults: Vec<(usize, Fault)>,
}

impl FaultConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a configuration; later entries for the same location replace earlier ones.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, Fault)>) -> Self {
        let mut faults: Vec<(usize, Fault)> = pairs.into_iter().collect();
        faults.sort_by_key(|&(l, _)| l);
        let mut out: Vec<(usize, Fault)> = Vec::with_capacity(faults.len());
        for (l, f) in faults {
            match out.last_mut() {
                Some(last) if last.0 == l => last.1 = f,
                _ => out.push((l, f)),
            }
        }
        FaultConfig { faults: out }
    }

    pub fn insert(&mut self, location: usize, fault: Fault) {
        match self.faults.binary_search_by_key(&location, |&(l, _)| l) {
            Ok(i) => self.faults[i].1 = fault,
            Err(i) => self.faults.insert(i, (location, fault)),
        }
    }

    pub fn get(&self, location: usize) -> Option<Fault> {
        self.faults
            .binary_search_by_key(&location, |&(l, _)| l)
            .ok()
            .map(|i| self.faults[i].1)
    }

    pub fn len(&self) -> usize {
        self.faults.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faults.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, Fault)> {
        self.faults.iter()
    }

    pub fn as_slice(&self) -> &[(usize, Fault)] {
        &self.faults
    }

    /// Union with a configuration on disjoint locations.
    pub fn union(&self, other: &FaultConfig) -> FaultConfig {
        FaultConfig::from_pairs(self.faults.iter().chain(other.faults.iter()).copied())
    }
}

/// An ordered gate list with measurement labels and enumerated noise locations.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    labels: Vec<String>,
    label_index: HashMap<String, usize>,
    locations: Vec<Location>,
    /// Number of locations among gates `0..g`, for `g` in `0..=gates.len()`.
    loc_prefix: Vec<usize>,
    /// Number of measurements among gates `0..g`.
    meas_prefix: Vec<usize>,
    census: Census,
    class_members: [Vec<usize>; 3],
}

impl Circuit {
    pub fn new() -> Self {
        Circuit {
            loc_prefix: vec![0],
            meas_prefix: vec![0],
            ..Default::default()
        }
    }

    /// Appends a gate. Measurements require a label unique within the circuit.
    pub fn push(&mut self, gate: Gate, label: Option<&str>) -> Result<(), Error> {
        if let Gate::Cnot(c, t) = gate {
            if c == t {
                return Err(Error::InvalidGate(format!("CNOT {c} {t}")));
            }
        }
        if gate.is_measurement() {
            let label =
                label.ok_or_else(|| Error::InvalidGate("measurement without label".into()))?;
            if self.label_index.contains_key(label) {
                return Err(Error::DuplicateLabel(label.to_string()));
            }
            self.label_index
                .insert(label.to_string(), self.labels.len());
            self.labels.push(label.to_string());
        } else if label.is_some() {
            return Err(Error::InvalidGate("label on a non-measurement gate".into()));
        }
        let g = self.gates.len();
        self.num_qubits = self.num_qubits.max(gate.max_qubit() + 1);
        if let Some(class) = gate.noise_class() {
            let id = self.locations.len();
            self.locations.push(Location { id, gate: g, class });
            self.class_members[class as usize].push(id);
            match class {
                NoiseClass::C1 => {
                    self.census.n1 += 1;
                    if matches!(gate, Gate::PrepZ(_)) {
                        self.census.n1_prep += 1;
                    }
                }
                NoiseClass::C2 => self.census.n2 += 1,
                NoiseClass::C3 => self.census.n3 += 1,
            }
        }
        self.gates.push(gate);
        self.loc_prefix.push(self.locations.len());
        self.meas_prefix.push(self.labels.len());
        Ok(())
    }

    pub fn prep_z(&mut self, q: usize) {
        self.gates_unchecked(Gate::PrepZ(q), None);
    }

    pub fn h(&mut self, q: usize) {
        self.gates_unchecked(Gate::H(q), None);
    }

    pub fn ideal_h(&mut self, q: usize) {
        self.gates_unchecked(Gate::IdealH(q), None);
    }

    pub fn cnot(&mut self, c: usize, t: usize) -> Result<(), Error> {
        self.push(Gate::Cnot(c, t), None)
    }

    pub fn meas_z(&mut self, q: usize, label: &str) -> Result<(), Error> {
        self.push(Gate::MeasZ(q), Some(label))
    }

    pub fn meas_x(&mut self, q: usize, label: &str) -> Result<(), Error> {
        self.push(Gate::MeasX(q), Some(label))
    }

    fn gates_unchecked(&mut self, gate: Gate, label: Option<&str>) {
        self.push(gate, label)
            .expect("single-qubit gate without label");
    }

    /// Appends every gate of `other`, shifting its qubits by `offset` and prefixing its labels.
    pub fn append(&mut self, other: &Circuit, offset: usize, prefix: &str) -> Result<(), Error> {
        let mut m = 0;
        for gate in &other.gates {
            let shifted = match *gate {
                Gate::PrepZ(q) => Gate::PrepZ(q + offset),
                Gate::H(q) => Gate::H(q + offset),
                Gate::IdealH(q) => Gate::IdealH(q + offset),
                Gate::Cnot(c, t) => Gate::Cnot(c + offset, t + offset),
                Gate::MeasZ(q) => Gate::MeasZ(q + offset),
                Gate::MeasX(q) => Gate::MeasX(q + offset),
            };
            if gate.is_measurement() {
                let label = format!("{prefix}{}", other.labels[m]);
                m += 1;
                self.push(shifted, Some(&label))?;
            } else {
                self.push(shifted, None)?;
            }
        }
        Ok(())
    }

    /// Makes the circuit span at least `n` qubits.
    pub fn reserve_qubits(&mut self, n: usize) {
        self.num_qubits = self.num_qubits.max(n);
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    /// Location ids of one class, in circuit order.
    pub fn class_locations(&self, class: NoiseClass) -> &[usize] {
        &self.class_members[class as usize]
    }

    pub fn census(&self) -> Census {
        self.census
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_measurements(&self) -> usize {
        self.labels.len()
    }

    /// Index of a labeled measurement in the outcome record.
    pub fn label_index(&self, label: &str) -> Result<usize, Error> {
        self.label_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn cnot_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Cnot(..)))
            .count()
    }

    /// Number of noise locations among the first `gate` gates.
    pub fn locations_before(&self, gate: usize) -> usize {
        self.loc_prefix[gate]
    }

    /// Number of measurements among the first `gate` gates.
    pub fn measurements_before(&self, gate: usize) -> usize {
        self.meas_prefix[gate]
    }

    /// Checks that every fault sits on an existing location and matches its alphabet.
    pub fn validate(&self, faults: &FaultConfig) -> Result<(), Error> {
        for &(l, f) in faults.iter() {
            let loc = self.locations.get(l).ok_or(Error::UnknownLocation(l))?;
            if !in_alphabet(&self.gates[loc.gate], &f) {
                return Err(Error::FaultMismatch {
                    location: l,
                    fault: f.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn gate_at_location(&self, location: usize) -> Result<Gate, Error> {
        self.locations
            .get(location)
            .map(|l| self.gates[l.gate])
            .ok_or(Error::UnknownLocation(location))
    }
}

/// Per-class location counts.
pub fn location_census(circuit: &Circuit) -> Census {
    circuit.census()
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Number of distinct fault configurations in subset `w` (saturating).
pub fn subset_cardinality(census: &Census, w: &SubsetIndex) -> Result<u128, Error> {
    w.check(census)?;
    let unitary = census.n1 - census.n1_prep;
    let mut c1: u128 = 0;
    for preps in 0..=w.w1.min(census.n1_prep) {
        let rest = w.w1 - preps;
        if rest > unitary {
            continue;
        }
        let term = binomial_u128(census.n1_prep, preps)
            .saturating_mul(binomial_u128(unitary, rest))
            .saturating_mul(3u128.saturating_pow(rest as u32));
        c1 = c1.saturating_add(term);
    }
    Ok(c1
        .saturating_mul(binomial_u128(census.n2, w.w2))
        .saturating_mul(15u128.saturating_pow(w.w2 as u32))
        .saturating_mul(binomial_u128(census.n3, w.w3)))
}

/// Draws `w_i` distinct locations per class uniformly, then a fault uniformly from each alphabet.
pub fn sample_fault_config<R: Rng + ?Sized>(
    circuit: &Circuit,
    w: &SubsetIndex,
    rng: &mut R,
) -> Result<FaultConfig, Error> {
    w.check(&circuit.census)?;
    let mut pairs = Vec::with_capacity(w.total());
    for (class, k) in [NoiseClass::C1, NoiseClass::C2, NoiseClass::C3]
        .into_iter()
        .zip(w.as_array())
    {
        let members = circuit.class_locations(class);
        for i in sample(rng, members.len(), k) {
            let l = members[i];
            let fault = match circuit.gates[circuit.locations[l].gate] {
                Gate::PrepZ(_) => Fault::Pauli1(Pauli1::X),
                Gate::H(_) => Fault::Pauli1(Pauli1::ALL[rng.gen_range(1..4)]),
                Gate::Cnot(..) => {
                    let k = rng.gen_range(1..16);
                    Fault::Pauli2(Pauli1::ALL[k / 4], Pauli1::ALL[k % 4])
                }
                _ => Fault::Flip,
            };
            pairs.push((l, fault));
        }
    }
    Ok(FaultConfig::from_pairs(pairs))
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = 0;
        for gate in &self.gates {
            match *gate {
                Gate::PrepZ(q) => writeln!(f, "PREPZ {q}")?,
                Gate::H(q) => writeln!(f, "H {q}")?,
                Gate::IdealH(q) => writeln!(f, "IDEAL_H {q}")?,
                Gate::Cnot(c, t) => writeln!(f, "CNOT {c} {t}")?,
                Gate::MeasZ(q) => {
                    writeln!(f, "MEASZ {q} {}", self.labels[m])?;
                    m += 1;
                }
                Gate::MeasX(q) => {
                    writeln!(f, "MEASX {q} {}", self.labels[m])?;
                    m += 1;
                }
            }
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self, Error> {
        let mut circuit = Circuit::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parts: Vec<&str> = content.split_whitespace().collect();
            let err = |message: &str| Error::Parse {
                line,
                message: message.to_string(),
            };
            let qubit = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(&format!("bad qubit {s:?}")))
            };
            let (gate, label) = match (parts[0].to_ascii_uppercase().as_str(), parts.len()) {
                ("PREPZ", 2) => (Gate::PrepZ(qubit(parts[1])?), None),
                ("H", 2) => (Gate::H(qubit(parts[1])?), None),
                ("IDEAL_H", 2) => (Gate::IdealH(qubit(parts[1])?), None),
                ("CNOT", 3) => (Gate::Cnot(qubit(parts[1])?, qubit(parts[2])?), None),
                ("MEASZ", 3) => (Gate::MeasZ(qubit(parts[1])?), Some(parts[2])),
                ("MEASX", 3) => (Gate::MeasX(qubit(parts[1])?), Some(parts[2])),
                _ => return Err(err(&format!("unrecognized gate line {content:?}"))),
            };
            circuit.push(gate, label).map_err(|e| err(&e.to_string()))?;
        }
        Ok(circuit)
    }
}
