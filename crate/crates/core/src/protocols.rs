//! Error-correction cycle drivers and derived metrics.
//!
//! Every protocol can run on three executors that must agree: a stabilizer tableau,
//! a Pauli frame, and a precomputed linear fault-effect table used for sampling.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bacon_shor::{
    default_verification_pairs, frame_patterns, ghz_prep_circuit, ideal_correct_and_readout,
    push_shor_round, residual_logical_error, steane_cycle_circuit, CodeLayout, GhzSpec,
    LogicalState,
};
use crate::circuit::{Circuit, Fault, FaultConfig, Gate};
use crate::error::Error;
use crate::pauli::Pauli1;
use crate::sampler::{
    enumerate_subsets, estimate_all, subset_probability, wilson_interval, NoiseParams, RunOutcome,
    Runner, SamplerSettings, SubsetEstimate,
};
use crate::sim::{run_gates, Backend, PauliFrame, TableauBackend};
use crate::tableau::StabilizerState;

/// Syndrome-extraction method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Steane,
    ShorWeak,
    ShorStrong,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "steane" => Ok(Method::Steane),
            "shor-weak" | "shor_weak" => Ok(Method::ShorWeak),
            "shor-strong" | "shor_strong" => Ok(Method::ShorStrong),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Steane => "steane",
            Method::ShorWeak => "shor-weak",
            Method::ShorStrong => "shor-strong",
        })
    }
}

/// Flavor of the adaptive repetition rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    Weak,
    Strong,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub d: usize,
    pub method: Method,
    /// Checks per GHZ state; only meaningful for Steane.
    pub v: usize,
    pub init: LogicalState,
}

impl ProtocolSpec {
    pub fn steane(d: usize, v: usize, init: LogicalState) -> Self {
        ProtocolSpec {
            d,
            method: Method::Steane,
            v,
            init,
        }
    }

    pub fn shor(d: usize, flavor: Flavor, init: LogicalState) -> Self {
        let method = match flavor {
            Flavor::Weak => Method::ShorWeak,
            Flavor::Strong => Method::ShorStrong,
        };
        ProtocolSpec {
            d,
            method,
            v: 0,
            init,
        }
    }

    pub fn flavor(&self) -> Option<Flavor> {
        match self.method {
            Method::Steane => None,
            Method::ShorWeak => Some(Flavor::Weak),
            Method::ShorStrong => Some(Flavor::Strong),
        }
    }
}

/// Minimum and maximum number of rounds of the adaptive rule for `t` correctable errors.
pub fn round_bounds(t: usize, flavor: Flavor) -> (usize, usize) {
    let top = (t + 3) * (t + 3) / 4;
    match flavor {
        Flavor::Weak => (t, top - 2),
        Flavor::Strong => (t + 1, top - 1),
    }
}

/// Syndrome history of an adaptive Shor run.
///
/// Two rounds with different syndromes imply a fault in one of them, so a fault explains
/// at most two consecutive changes. The weak rule prepends the noiseless all-zero
/// syndrome as a virtual round 0; a nonzero input error plays the role of its fault.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptiveState {
    flavor: Flavor,
    /// Recorded syndromes, preceded by the virtual round for the weak rule.
    seq: Vec<u32>,
}

impl AdaptiveState {
    pub fn new(flavor: Flavor) -> Self {
        let seq = match flavor {
            Flavor::Weak => vec![0],
            Flavor::Strong => Vec::new(),
        };
        AdaptiveState { flavor, seq }
    }

    pub fn push(&mut self, syndrome: u32) {
        self.seq.push(syndrome);
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn rounds(&self) -> usize {
        self.seq.len() - usize::from(self.flavor == Flavor::Weak)
    }

    pub fn history(&self) -> &[u32] {
        &self.seq[self.seq.len() - self.rounds()..]
    }

    /// Fewest faults explaining the changes between positions `lo - 1` and `hi`.
    fn faults_between(&self, lo: usize, hi: usize) -> usize {
        let (mut n, mut j) = (0, lo.max(1));
        while j <= hi && j < self.seq.len() {
            if self.seq[j] != self.seq[j - 1] {
                n += 1;
                j += 2;
            } else {
                j += 1;
            }
        }
        n
    }

    /// Lower bound on the number of faults implied by the history.
    pub fn changes(&self) -> usize {
        self.faults_between(1, self.seq.len())
    }

    /// Length of the trailing run of identical syndromes (including the virtual round).
    pub fn trailing_run(&self) -> usize {
        match self.seq.last() {
            Some(&s) => self.seq.iter().rev().take_while(|&&x| x == s).count(),
            None => 0,
        }
    }

    pub fn last(&self) -> Option<u32> {
        self.history().last().copied()
    }

    /// Syndrome that is safe to decode when at most `t` faults occurred, if any.
    ///
    /// A run of `k` equal syndromes can only be wrong throughout if each of its rounds is
    /// faulty. Adding the faults needed to explain the changes strictly before and after
    /// the run, more than `t` faults would be required, so some round of the run saw the
    /// true syndrome. The latest such run wins.
    pub fn decision(&self, t: usize) -> Option<u32> {
        if self.rounds() == 0 {
            return None;
        }
        let len = self.seq.len();
        let mut end = len;
        while end > 0 {
            let s = self.seq[end - 1];
            let start = self.seq[..end]
                .iter()
                .rposition(|&x| x != s)
                .map_or(0, |j| j + 1);
            let before = if start > 1 {
                self.faults_between(1, start - 1)
            } else {
                0
            };
            let after = self.faults_between(end + 1, len - 1);
            if end - start + before + after > t {
                return Some(s);
            }
            end = start;
        }
        None
    }
}

/// Whether an adaptive run with `t` correctable errors stops after the recorded rounds.
///
/// The run stops as soon as some run of equal syndromes is safe to decode, or at the
/// round cap.
pub fn adaptive_stop(state: &AdaptiveState, t: usize) -> bool {
    let r = state.rounds();
    r > 0 && (r >= round_bounds(t, state.flavor).1 || state.decision(t).is_some())
}

/// Adaptive time decoder for a round syndrome holding `bits` X-type bits followed by
/// as many Z-type bits.
///
/// Each half keeps its own history and is frozen at the first round where it has a safe
/// syndrome, so later faults on the other half cannot corrupt it. The run ends once both
/// halves are frozen or the round cap is reached; an unfrozen half then uses its latest
/// syndrome.
#[derive(Clone, Debug)]
pub struct TimeDecoder {
    t: usize,
    bits: usize,
    halves: [AdaptiveState; 2],
    frozen: [Option<u32>; 2],
}

impl TimeDecoder {
    pub fn new(flavor: Flavor, t: usize, bits: usize) -> Self {
        TimeDecoder {
            t,
            bits,
            halves: [AdaptiveState::new(flavor), AdaptiveState::new(flavor)],
            frozen: [None, None],
        }
    }

    /// Records one round and reports whether the run is over.
    pub fn push(&mut self, syndrome: u32) -> bool {
        let mask = (1u32 << self.bits) - 1;
        let parts = [syndrome & mask, syndrome >> self.bits & mask];
        for (k, part) in parts.into_iter().enumerate() {
            if self.frozen[k].is_none() {
                self.halves[k].push(part);
                self.frozen[k] = self.halves[k].decision(self.t);
            }
        }
        let r = self.rounds();
        self.frozen.iter().all(Option::is_some)
            || r >= round_bounds(self.t, self.halves[0].flavor()).1
    }

    pub fn rounds(&self) -> usize {
        self.halves[0].rounds().max(self.halves[1].rounds())
    }

    /// The X-type and Z-type syndromes to decode.
    pub fn syndromes(&self) -> (u32, u32) {
        let pick = |k: usize| self.frozen[k].or(self.halves[k].last()).unwrap_or(0);
        (pick(0), pick(1))
    }
}

/// Per-fault contribution to a Steane cycle: check flips and packed syndromes/patterns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct SteaneEffect {
    checks: u128,
    /// Bits 0..16: X-syndrome flips, 16..32: Z-syndrome flips, 32..48: row X parity,
    /// 48..64: column Z parity.
    data: u64,
}

/// Per-fault contribution to one Shor round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct ShorEffect {
    round: u32,
    flips: u32,
    rows: u32,
    cols: u32,
}

#[derive(Clone, Debug)]
enum Kind {
    Steane {
        checks: Vec<usize>,
        a: Vec<usize>,
        b: Vec<usize>,
        effects: Vec<Vec<SteaneEffect>>,
    },
    Shor {
        flavor: Flavor,
        cap: usize,
        round_start: Vec<usize>,
        effects: Vec<Vec<ShorEffect>>,
    },
}

/// A built protocol: its circuit (the maximal unrolled one for Shor) and decoders.
#[derive(Clone, Debug)]
pub struct Protocol {
    spec: ProtocolSpec,
    layout: CodeLayout,
    circuit: Circuit,
    kind: Kind,
}

/// Index of a fault within its location's alphabet.
fn fault_index(fault: Fault) -> usize {
    match fault {
        Fault::Pauli1(Pauli1::X) | Fault::Flip => 0,
        Fault::Pauli1(p) => p as usize - 1,
        Fault::Pauli2(a, b) => 4 * a as usize + b as usize - 1,
    }
}

fn location_faults(gate: &Gate) -> Vec<Fault> {
    match gate {
        Gate::PrepZ(_) => vec![Fault::Pauli1(Pauli1::X)],
        Gate::H(_) => [Pauli1::X, Pauli1::Y, Pauli1::Z]
            .map(Fault::Pauli1)
            .to_vec(),
        Gate::Cnot(..) => (1..16)
            .map(|k| Fault::Pauli2(Pauli1::ALL[k / 4], Pauli1::ALL[k % 4]))
            .collect(),
        _ => vec![Fault::Flip],
    }
}

fn parity(bits: &[bool], idx: impl Iterator<Item = usize>) -> bool {
    idx.fold(false, |acc, q| acc ^ bits[q])
}

/// Runs a single fault from its gate up to `end` on a fresh frame.
fn single_fault_frame(
    circuit: &Circuit,
    loc: usize,
    fault: Fault,
    end: usize,
) -> (Vec<bool>, PauliFrame, usize) {
    let gate = circuit.locations()[loc].gate;
    let mut frame = PauliFrame::new(circuit.num_qubits());
    let mut out = Vec::new();
    run_gates(
        circuit,
        gate..end,
        &FaultConfig::from_pairs([(loc, fault)]),
        &mut frame,
        &mut out,
    );
    (out, frame, circuit.measurements_before(gate))
}

trait DataBackend: Backend {
    fn prepare(&mut self, layout: &CodeLayout, init: LogicalState);
    fn readout(&mut self, layout: &CodeLayout, init: LogicalState) -> Result<bool, Error>;
}

impl DataBackend for PauliFrame {
    fn prepare(&mut self, _: &CodeLayout, _: LogicalState) {
        self.clear();
    }

    fn readout(&mut self, layout: &CodeLayout, init: LogicalState) -> Result<bool, Error> {
        let (rows, cols) = frame_patterns(self, layout);
        Ok(residual_logical_error(layout, rows, cols, init))
    }
}

impl<R: Rng + ?Sized> DataBackend for TableauBackend<'_, R> {
    fn prepare(&mut self, layout: &CodeLayout, init: LogicalState) {
        let d = layout.distance();
        for k in 0..d {
            let chain = match init {
                LogicalState::Plus => layout.column(k),
                LogicalState::Zero => layout.row(k),
            };
            self.hadamard(chain[0]);
            for w in chain.windows(2) {
                self.cnot(w[0], w[1]);
            }
        }
        if init == LogicalState::Zero {
            for q in 0..layout.num_data() {
                self.hadamard(q);
            }
        }
    }

    fn readout(&mut self, layout: &CodeLayout, init: LogicalState) -> Result<bool, Error> {
        ideal_correct_and_readout(self.state, layout, init)
    }
}

impl Protocol {
    pub fn new(spec: ProtocolSpec) -> Result<Self, Error> {
        let layout = CodeLayout::new(spec.d)?;
        match spec.flavor() {
            None => Self::steane(spec, layout),
            Some(flavor) => {
                if spec.v != 0 {
                    return Err(Error::Unsupported {
                        d: spec.d,
                        v: spec.v,
                    });
                }
                Self::shor(spec, layout, flavor)
            }
        }
    }

    fn steane(spec: ProtocolSpec, layout: CodeLayout) -> Result<Self, Error> {
        if spec.d > 15 || 2 * spec.d * spec.v > 128 {
            return Err(Error::Unsupported {
                d: spec.d,
                v: spec.v,
            });
        }
        let circuit = steane_cycle_circuit(&layout, spec.v)?;
        let n = layout.num_data();
        let checks: Vec<usize> = circuit
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.starts_with("A.") || l.starts_with("B."))
            .map(|(i, _)| i)
            .collect();
        let a = (0..n)
            .map(|q| circuit.label_index(&format!("a{q}")))
            .collect::<Result<Vec<_>, _>>()?;
        let b = (0..n)
            .map(|q| circuit.label_index(&format!("b{q}")))
            .collect::<Result<Vec<_>, _>>()?;
        let d = layout.distance();
        let effects = circuit
            .locations()
            .iter()
            .map(|loc| {
                location_faults(&circuit.gates()[loc.gate])
                    .into_iter()
                    .map(|f| {
                        let (out, frame, offset) =
                            single_fault_frame(&circuit, loc.id, f, circuit.len());
                        let full = |i: usize| if i >= offset { out[i - offset] } else { false };
                        let mut e = SteaneEffect::default();
                        for (k, &m) in checks.iter().enumerate() {
                            e.checks |= (full(m) as u128) << k;
                        }
                        let a_bits: Vec<bool> = a.iter().map(|&m| full(m)).collect();
                        let b_bits: Vec<bool> = b.iter().map(|&m| full(m)).collect();
                        for j in 0..d - 1 {
                            let sx = parity(&a_bits, layout.x_stab_support(j).into_iter());
                            let sz = parity(&b_bits, layout.z_stab_support(j).into_iter());
                            e.data |= (sx as u64) << j | (sz as u64) << (16 + j);
                        }
                        let (rows, cols) = frame_patterns(&frame, &layout);
                        e.data |= (rows as u64) << 32 | (cols as u64) << 48;
                        e
                    })
                    .collect()
            })
            .collect();
        Ok(Protocol {
            spec,
            layout,
            circuit,
            kind: Kind::Steane {
                checks,
                a,
                b,
                effects,
            },
        })
    }

    fn shor(spec: ProtocolSpec, layout: CodeLayout, flavor: Flavor) -> Result<Self, Error> {
        if spec.d > 15 {
            return Err(Error::Unsupported {
                d: spec.d,
                v: spec.v,
            });
        }
        let (_, cap) = round_bounds(layout.t(), flavor);
        let n = layout.num_data();
        let per_round = 2 * (layout.distance() - 1);
        let mut circuit = Circuit::new();
        circuit.reserve_qubits(n);
        let mut round_start = vec![0];
        for r in 0..cap {
            push_shor_round(&mut circuit, &layout, n + r * per_round, r)?;
            round_start.push(circuit.len());
        }
        let effects = circuit
            .locations()
            .iter()
            .map(|loc| {
                let round = round_start.partition_point(|&s| s <= loc.gate) - 1;
                location_faults(&circuit.gates()[loc.gate])
                    .into_iter()
                    .map(|f| {
                        let (out, frame, offset) =
                            single_fault_frame(&circuit, loc.id, f, round_start[round + 1]);
                        let skip = offset - round * per_round;
                        let mut flips = 0u32;
                        for (k, &bit) in out.iter().enumerate() {
                            flips |= (bit as u32) << (skip + k);
                        }
                        let (rows, cols) = frame_patterns(&frame, &layout);
                        ShorEffect {
                            round: round as u32,
                            flips,
                            rows,
                            cols,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Protocol {
            spec,
            layout,
            circuit,
            kind: Kind::Shor {
                flavor,
                cap,
                round_start,
                effects,
            },
        })
    }

    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }

    /// Steane: the full cycle. Shor: all rounds up to the cap, unrolled.
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// Gate range of each Shor round; a single range for Steane.
    pub fn rounds(&self) -> Vec<std::ops::Range<usize>> {
        match &self.kind {
            Kind::Steane { .. } => std::iter::once(0..self.circuit.len()).collect(),
            Kind::Shor { round_start, .. } => round_start.windows(2).map(|w| w[0]..w[1]).collect(),
        }
    }

    fn decode_patterns(&self, sx: u32, sz: u32, rows: u32, cols: u32) -> bool {
        let l = &self.layout;
        let cols = cols ^ l.decode_pattern(sx);
        let rows = rows ^ l.decode_pattern(sz);
        residual_logical_error(l, rows, cols, self.spec.init)
    }

    fn run_on<B: DataBackend>(
        &self,
        faults: &FaultConfig,
        backend: &mut B,
    ) -> Result<RunOutcome, Error> {
        self.circuit.validate(faults)?;
        let l = &self.layout;
        let d = l.distance();
        backend.prepare(l, self.spec.init);
        let mut out = Vec::with_capacity(self.circuit.num_measurements());
        let (sx, sz, rounds_used) = match &self.kind {
            Kind::Steane { checks, a, b, .. } => {
                run_gates(
                    &self.circuit,
                    0..self.circuit.len(),
                    faults,
                    backend,
                    &mut out,
                );
                let failures = checks.iter().filter(|&&m| out[m]).count();
                if failures > 0 {
                    return Ok(RunOutcome {
                        accepted: false,
                        logical_error: false,
                        rounds_used: 0,
                        verification_failures: failures,
                    });
                }
                let a_bits: Vec<bool> = a.iter().map(|&m| out[m]).collect();
                let b_bits: Vec<bool> = b.iter().map(|&m| out[m]).collect();
                let (mut sx, mut sz) = (0u32, 0u32);
                for j in 0..d - 1 {
                    sx |= (parity(&a_bits, l.x_stab_support(j).into_iter()) as u32) << j;
                    sz |= (parity(&b_bits, l.z_stab_support(j).into_iter()) as u32) << j;
                }
                (sx, sz, 0)
            }
            Kind::Shor {
                flavor,
                cap,
                round_start,
                ..
            } => {
                let mut decoder = TimeDecoder::new(*flavor, l.t(), d - 1);
                let per_round = 2 * (d - 1);
                for r in 0..*cap {
                    run_gates(
                        &self.circuit,
                        round_start[r]..round_start[r + 1],
                        faults,
                        backend,
                        &mut out,
                    );
                    let bits = &out[r * per_round..(r + 1) * per_round];
                    let s = bits
                        .iter()
                        .enumerate()
                        .fold(0u32, |acc, (k, &b)| acc | (b as u32) << k);
                    if decoder.push(s) {
                        break;
                    }
                }
                let (sx, sz) = decoder.syndromes();
                (sx, sz, decoder.rounds())
            }
        };
        for c in 0..d {
            if l.decode_pattern(sx) >> c & 1 == 1 {
                backend.pauli(l.qubit(0, c), Pauli1::Z);
            }
            if l.decode_pattern(sz) >> c & 1 == 1 {
                backend.pauli(l.qubit(c, 0), Pauli1::X);
            }
        }
        Ok(RunOutcome {
            accepted: true,
            logical_error: backend.readout(l, self.spec.init)?,
            rounds_used,
            verification_failures: 0,
        })
    }

    /// Reference execution on a stabilizer tableau.
    pub fn run_tableau<R: Rng + ?Sized>(
        &self,
        faults: &FaultConfig,
        rng: &mut R,
    ) -> Result<RunOutcome, Error> {
        let mut state = StabilizerState::new(self.circuit.num_qubits())?;
        let mut backend = TableauBackend {
            state: &mut state,
            rng,
        };
        self.run_on(faults, &mut backend)
    }

    /// Execution on a Pauli frame relative to the noiseless run.
    pub fn run_frame(&self, faults: &FaultConfig) -> Result<RunOutcome, Error> {
        let mut frame = PauliFrame::new(self.circuit.num_qubits());
        self.run_on(faults, &mut frame)
    }

    /// Execution from the precomputed single-fault effects.
    pub fn run_fast(&self, faults: &[(usize, Fault)]) -> RunOutcome {
        let l = &self.layout;
        let d = l.distance();
        match &self.kind {
            Kind::Steane { effects, .. } => {
                let mut acc = SteaneEffect::default();
                for &(loc, f) in faults {
                    let e = effects[loc][fault_index(f)];
                    acc.checks ^= e.checks;
                    acc.data ^= e.data;
                }
                if acc.checks != 0 {
                    return RunOutcome {
                        accepted: false,
                        verification_failures: acc.checks.count_ones() as usize,
                        ..Default::default()
                    };
                }
                let field = |k: u32| (acc.data >> (16 * k) & 0xffff) as u32;
                RunOutcome {
                    accepted: true,
                    logical_error: self.decode_patterns(field(0), field(1), field(2), field(3)),
                    ..Default::default()
                }
            }
            Kind::Shor {
                flavor,
                cap,
                effects,
                ..
            } => {
                let mut decoder = TimeDecoder::new(*flavor, l.t(), d - 1);
                let (mut rows, mut cols) = (0u32, 0u32);
                let mut fi = 0;
                for r in 0..*cap {
                    let (mut flips, mut dr, mut dc) = (0u32, 0u32, 0u32);
                    while fi < faults.len() {
                        let e = effects[faults[fi].0][fault_index(faults[fi].1)];
                        if e.round as usize != r {
                            break;
                        }
                        flips ^= e.flips;
                        dr ^= e.rows;
                        dc ^= e.cols;
                        fi += 1;
                    }
                    let ideal = l.pattern_syndrome(cols) | l.pattern_syndrome(rows) << (d - 1);
                    rows ^= dr;
                    cols ^= dc;
                    if decoder.push(flips ^ ideal) {
                        break;
                    }
                }
                let (sx, sz) = decoder.syndromes();
                RunOutcome {
                    accepted: true,
                    logical_error: self.decode_patterns(sx, sz, rows, cols),
                    rounds_used: decoder.rounds(),
                    verification_failures: 0,
                }
            }
        }
    }
}

impl Runner for Protocol {
    fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    fn run(&self, faults: &[(usize, Fault)]) -> RunOutcome {
        self.run_fast(faults)
    }
}

/// One Steane cycle on a tableau.
pub fn run_steane<R: Rng + ?Sized>(
    spec: &ProtocolSpec,
    faults: &FaultConfig,
    rng: &mut R,
) -> Result<RunOutcome, Error> {
    if spec.method != Method::Steane {
        return Err(Error::InvalidParameter(format!(
            "{} is not a Steane protocol",
            spec.method
        )));
    }
    Protocol::new(*spec)?.run_tableau(faults, rng)
}

/// One adaptive Shor cycle on a tableau.
pub fn run_shor<R: Rng + ?Sized>(
    spec: &ProtocolSpec,
    faults: &FaultConfig,
    rng: &mut R,
) -> Result<RunOutcome, Error> {
    if spec.method == Method::Steane {
        return Err(Error::InvalidParameter(
            "steane is not a Shor protocol".into(),
        ));
    }
    Protocol::new(*spec)?.run_tableau(faults, rng)
}

/// A verified GHZ preparation; a run "fails" when any check fires.
#[derive(Clone, Debug)]
pub struct GhzRunner {
    circuit: Circuit,
    effects: Vec<Vec<u128>>,
}

impl GhzRunner {
    pub fn new(spec: &GhzSpec) -> Result<Self, Error> {
        if spec.v() > 128 {
            return Err(Error::Unsupported {
                d: spec.d,
                v: spec.v(),
            });
        }
        let circuit = ghz_prep_circuit(spec)?;
        let effects = circuit
            .locations()
            .iter()
            .map(|loc| {
                location_faults(&circuit.gates()[loc.gate])
                    .into_iter()
                    .map(|f| {
                        let (out, _, offset) =
                            single_fault_frame(&circuit, loc.id, f, circuit.len());
                        out.iter()
                            .enumerate()
                            .fold(0u128, |acc, (k, &b)| acc | (b as u128) << (offset + k))
                    })
                    .collect()
            })
            .collect();
        Ok(GhzRunner { circuit, effects })
    }
}

impl Runner for GhzRunner {
    fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    fn run(&self, faults: &[(usize, Fault)]) -> RunOutcome {
        let mask = faults
            .iter()
            .fold(0u128, |acc, &(l, f)| acc ^ self.effects[l][fault_index(f)]);
        RunOutcome {
            accepted: true,
            logical_error: mask != 0,
            rounds_used: 0,
            verification_failures: mask.count_ones() as usize,
        }
    }
}

/// Rejection probability of one verified GHZ preparation at one noise point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionPoint {
    pub p: f64,
    pub q: f64,
    pub lower: f64,
    pub upper: f64,
    /// Upper end with 95% Wilson intervals on every sampled subset.
    pub upper95: f64,
}

/// Probability that a verified GHZ preparation is discarded, over a list of noise points.
pub fn ghz_rejection_probability(
    d: usize,
    v: usize,
    params: &[NoiseParams],
    w_max: usize,
    settings: &SamplerSettings,
    seed: u64,
) -> Result<Vec<RejectionPoint>, Error> {
    let runner = GhzRunner::new(&GhzSpec::new(d, default_verification_pairs(d, v)?)?)?;
    let estimates = estimate_all(&runner, w_max, settings, seed)?;
    rejection_curve(&estimates, &runner.circuit().census(), params)
}

/// Rejection bounds from existing GHZ estimates.
pub fn rejection_curve(
    estimates: &[SubsetEstimate],
    census: &crate::circuit::Census,
    params: &[NoiseParams],
) -> Result<Vec<RejectionPoint>, Error> {
    params
        .iter()
        .map(|pt| {
            let (mut mass, mut lower, mut wide) = (0.0, 0.0, 0.0);
            for e in estimates {
                let a = subset_probability(census, &e.w, pt)?;
                mass += a;
                lower += a * e.conditional_rate();
                wide += a * if e.exhaustive {
                    e.conditional_rate()
                } else {
                    wilson_interval(e.errors, e.accepted, 1.96).1
                };
            }
            let unsampled = (1.0 - mass).max(0.0);
            Ok(RejectionPoint {
                p: pt.p,
                q: pt.q,
                lower,
                upper: (lower + unsampled).min(1.0),
                upper95: (wide + unsampled).min(1.0),
            })
        })
        .collect()
}

/// Logical error rate bounds at one noise point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p: f64,
    pub q: f64,
    pub pl_lower: f64,
    pub pl_upper: f64,
    pub acceptance: f64,
}

/// Bounds over a grid of noise points.
pub fn evaluate_curve(
    estimates: &[SubsetEstimate],
    census: &crate::circuit::Census,
    params: &[NoiseParams],
    mode: crate::sampler::BoundMode,
) -> Result<Vec<CurvePoint>, Error> {
    params
        .iter()
        .map(|pt| {
            let (pl_lower, pl_upper) =
                crate::sampler::logical_rate_bounds(estimates, census, pt, mode)?;
            Ok(CurvePoint {
                p: pt.p,
                q: pt.q,
                pl_lower,
                pl_upper,
                acceptance: crate::sampler::acceptance_probability(estimates, census, pt)?,
            })
        })
        .collect()
}

/// Ratio of Shor to Steane logical error rates; `None` where the Steane rate vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub p: f64,
    pub q: f64,
    pub rate: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

pub fn improvement_rate(
    shor: &[CurvePoint],
    steane: &[CurvePoint],
) -> Result<Vec<RatePoint>, Error> {
    if shor.len() != steane.len()
        || shor
            .iter()
            .zip(steane)
            .any(|(a, b)| a.p != b.p || a.q != b.q)
    {
        return Err(Error::InvalidParameter(
            "curves are on different grids".into(),
        ));
    }
    let div = |a: f64, b: f64| if b > 0.0 { Some(a / b) } else { None };
    Ok(shor
        .iter()
        .zip(steane)
        .map(|(a, b)| RatePoint {
            p: a.p,
            q: a.q,
            rate: div(a.pl_lower, b.pl_lower),
            lower: div(a.pl_lower, b.pl_upper),
            upper: div(a.pl_upper, b.pl_lower),
        })
        .collect())
}

fn log_interp(curve: &[(f64, f64)], x: f64) -> f64 {
    let i = curve
        .partition_point(|&(p, _)| p < x)
        .clamp(1, curve.len() - 1);
    let (x0, y0) = (curve[i - 1].0.ln(), curve[i - 1].1.ln());
    let (x1, y1) = (curve[i].0.ln(), curve[i].1.ln());
    y0 + (y1 - y0) * (x.ln() - x0) / (x1 - x0)
}

/// Crossing point of two curves `(p, p_L)` under log-log linear interpolation.
pub fn pseudo_threshold(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64, Error> {
    for c in [a, b] {
        if c.len() < 2
            || c.iter().any(|&(p, y)| p <= 0.0 || y <= 0.0)
            || c.windows(2).any(|w| w[0].0 >= w[1].0)
        {
            return Err(Error::InvalidParameter(
                "curves need at least two points with increasing positive p and positive values"
                    .into(),
            ));
        }
    }
    let lo = a[0].0.max(b[0].0);
    let hi = a[a.len() - 1].0.min(b[b.len() - 1].0);
    if lo >= hi {
        return Err(Error::NoCrossing);
    }
    let f = |x: f64| log_interp(a, x) - log_interp(b, x);
    let mut grid: Vec<f64> = a
        .iter()
        .chain(b)
        .map(|&(p, _)| p)
        .filter(|&p| p >= lo && p <= hi)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    for w in grid.windows(2) {
        let (mut x0, mut x1) = (w[0], w[1]);
        let (f0, f1) = (f(x0), f(x1));
        if f0 == 0.0 {
            return Ok(x0);
        }
        if f0.signum() == f1.signum() && f1 != 0.0 {
            continue;
        }
        while (x1 - x0) / x0 > 1e-3 {
            let mid = (x0 * x1).sqrt();
            if f(mid).signum() == f0.signum() {
                x0 = mid;
            } else {
                x1 = mid;
            }
        }
        return Ok((x0 * x1).sqrt());
    }
    Err(Error::NoCrossing)
}

/// Leading-order curve `c p^k` sampled on a log grid.
pub fn power_curve(c: f64, k: i32, p_min: f64, p_max: f64, points: usize) -> Vec<(f64, f64)> {
    log_grid(p_min, p_max, points)
        .into_iter()
        .map(|p| (p, c * p.powi(k)))
        .collect()
}

/// `points` logarithmically spaced values from `min` to `max`.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![min];
    }
    let (a, b) = (min.ln(), max.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Subsets the sampler covers for a given protocol and weight cutoff.
pub fn subsets_for(protocol: &Protocol, w_max: usize) -> usize {
    enumerate_subsets(&protocol.circuit().census(), w_max).len()
}
