//! Fault-injecting circuit execution on interchangeable backends.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::Rng;

use crate::circuit::{Circuit, Fault, FaultConfig, Gate};
use crate::error::Error;
use crate::pauli::{words_for, Pauli1, PauliString};
use crate::tableau::{Basis, StabilizerState};

/// Something that can run the circuit gate set.
pub trait Backend {
    fn prep_z(&mut self, q: usize);
    fn hadamard(&mut self, q: usize);
    fn cnot(&mut self, control: usize, target: usize);
    fn measure(&mut self, q: usize, basis: Basis) -> bool;
    fn pauli(&mut self, q: usize, op: Pauli1);
}

/// Full state-vector-free simulation on a tableau.
pub struct TableauBackend<'a, R: Rng + ?Sized> {
    pub state: &'a mut StabilizerState,
    pub rng: &'a mut R,
}

impl<R: Rng + ?Sized> Backend for TableauBackend<'_, R> {
    fn prep_z(&mut self, q: usize) {
        self.state.reset(q, self.rng).expect("qubit checked");
    }

    fn hadamard(&mut self, q: usize) {
        self.state.apply_hadamard(q).expect("qubit checked");
    }

    fn cnot(&mut self, control: usize, target: usize) {
        self.state
            .apply_cnot(control, target)
            .expect("qubits checked");
    }

    fn measure(&mut self, q: usize, basis: Basis) -> bool {
        self.state
            .measure(q, basis, self.rng)
            .expect("qubit checked")
            .0
    }

    fn pauli(&mut self, q: usize, op: Pauli1) {
        self.state.apply_pauli1(q, op).expect("qubit checked");
    }
}

/// Pauli frame: the difference between a faulty run and the noiseless reference run.
///
/// Measurement results are flips relative to the reference outcome. Measured
/// qubits are assumed not to be reused without a fresh preparation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliFrame {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

impl PauliFrame {
    pub fn new(n: usize) -> Self {
        let w = words_for(n).max(1);
        PauliFrame {
            n,
            x: vec![0; w],
            z: vec![0; w],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn clear(&mut self) {
        self.x.fill(0);
        self.z.fill(0);
    }

    #[inline]
    pub fn x_bit(&self, q: usize) -> bool {
        self.x[q >> 6] >> (q & 63) & 1 == 1
    }

    #[inline]
    pub fn z_bit(&self, q: usize) -> bool {
        self.z[q >> 6] >> (q & 63) & 1 == 1
    }

    #[inline]
    pub fn flip_x(&mut self, q: usize) {
        self.x[q >> 6] ^= 1 << (q & 63);
    }

    #[inline]
    pub fn flip_z(&mut self, q: usize) {
        self.z[q >> 6] ^= 1 << (q & 63);
    }

    pub fn apply(&mut self, p: &PauliString) {
        for q in p.x_support() {
            self.flip_x(q);
        }
        for q in p.z_support() {
            self.flip_z(q);
        }
    }

    /// Frame restricted to qubits `start..start + len`, as an unsigned Pauli string.
    pub fn to_pauli(&self, start: usize, len: usize) -> PauliString {
        let mut p = PauliString::identity(len);
        for q in 0..len {
            p.set(
                q,
                Pauli1::from_bits(self.x_bit(start + q), self.z_bit(start + q)),
            );
        }
        p
    }
}

impl Backend for PauliFrame {
    #[inline]
    fn prep_z(&mut self, q: usize) {
        let m = !(1u64 << (q & 63));
        self.x[q >> 6] &= m;
        self.z[q >> 6] &= m;
    }

    #[inline]
    fn hadamard(&mut self, q: usize) {
        let (w, b) = (q >> 6, 1u64 << (q & 63));
        let (xv, zv) = (self.x[w] & b, self.z[w] & b);
        self.x[w] = (self.x[w] & !b) | zv;
        self.z[w] = (self.z[w] & !b) | xv;
    }

    #[inline]
    fn cnot(&mut self, control: usize, target: usize) {
        if self.x_bit(control) {
            self.flip_x(target);
        }
        if self.z_bit(target) {
            self.flip_z(control);
        }
    }

    #[inline]
    fn measure(&mut self, q: usize, basis: Basis) -> bool {
        match basis {
            Basis::Z => self.x_bit(q),
            Basis::X => self.z_bit(q),
        }
    }

    #[inline]
    fn pauli(&mut self, q: usize, op: Pauli1) {
        if op.has_x() {
            self.flip_x(q);
        }
        if op.has_z() {
            self.flip_z(q);
        }
    }
}

/// Runs gates `range` of `circuit` with the faults of `faults` that fall inside the range,
/// appending measurement results to `outcomes`. `faults` must already be validated.
pub fn run_gates<B: Backend + ?Sized>(
    circuit: &Circuit,
    range: Range<usize>,
    faults: &FaultConfig,
    backend: &mut B,
    outcomes: &mut Vec<bool>,
) {
    let slice = faults.as_slice();
    let mut loc = circuit.locations_before(range.start);
    let mut fi = slice.partition_point(|&(l, _)| l < loc);
    for gate in &circuit.gates()[range] {
        match *gate {
            Gate::PrepZ(q) => backend.prep_z(q),
            Gate::H(q) | Gate::IdealH(q) => backend.hadamard(q),
            Gate::Cnot(c, t) => backend.cnot(c, t),
            Gate::MeasZ(q) => outcomes.push(backend.measure(q, Basis::Z)),
            Gate::MeasX(q) => outcomes.push(backend.measure(q, Basis::X)),
        }
        if matches!(gate, Gate::IdealH(_)) {
            continue;
        }
        if fi < slice.len() && slice[fi].0 == loc {
            match (slice[fi].1, *gate) {
                (Fault::Pauli1(p), _) => backend.pauli(gate.qubits().0[0], p),
                (Fault::Pauli2(a, b), Gate::Cnot(c, t)) => {
                    backend.pauli(c, a);
                    backend.pauli(t, b);
                }
                (Fault::Flip, _) => {
                    let last = outcomes.last_mut().expect("flip follows a measurement");
                    *last ^= true;
                }
                _ => unreachable!("faults are validated against their gates"),
            }
            fi += 1;
        }
        loc += 1;
    }
}

/// Labeled measurement record of one execution.
#[derive(Clone, Debug)]
pub struct Outcomes<'c> {
    circuit: &'c Circuit,
    bits: Vec<bool>,
}

impl<'c> Outcomes<'c> {
    pub fn get(&self, label: &str) -> Result<bool, Error> {
        Ok(self.bits[self.circuit.label_index(label)?])
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn to_map(&self) -> BTreeMap<String, bool> {
        self.circuit
            .labels()
            .iter()
            .cloned()
            .zip(self.bits.iter().copied())
            .collect()
    }
}

/// Executes the whole circuit on a tableau; outcomes are actual measurement bits.
pub fn execute<'c, R: Rng + ?Sized>(
    circuit: &'c Circuit,
    faults: &FaultConfig,
    state: &mut StabilizerState,
    rng: &mut R,
) -> Result<Outcomes<'c>, Error> {
    circuit.validate(faults)?;
    if circuit.num_qubits() > state.num_qubits() {
        return Err(Error::QubitOutOfRange {
            qubit: circuit.num_qubits() - 1,
            n: state.num_qubits(),
        });
    }
    let mut bits = Vec::with_capacity(circuit.num_measurements());
    let mut backend = TableauBackend { state, rng };
    run_gates(circuit, 0..circuit.len(), faults, &mut backend, &mut bits);
    Ok(Outcomes { circuit, bits })
}

/// Executes the whole circuit on a fresh Pauli frame; outcomes are flips.
pub fn execute_frame<'c>(
    circuit: &'c Circuit,
    faults: &FaultConfig,
) -> Result<(Outcomes<'c>, PauliFrame), Error> {
    circuit.validate(faults)?;
    let mut frame = PauliFrame::new(circuit.num_qubits());
    let mut bits = Vec::with_capacity(circuit.num_measurements());
    run_gates(circuit, 0..circuit.len(), faults, &mut frame, &mut bits);
    Ok((Outcomes { circuit, bits }, frame))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{sample_fault_config, SubsetIndex};
    use crate::tableau::Expectation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// 5-qubit GHZ ladder with a Z2Z4 check on qubit 5.
    fn verified_ghz() -> Circuit {
        let mut c = Circuit::new();
        for q in 0..5 {
            c.prep_z(q);
        }
        c.h(0);
        for q in 0..4 {
            c.cnot(q, q + 1).unwrap();
        }
        c.prep_z(5);
        c.cnot(1, 5).unwrap();
        c.cnot(3, 5).unwrap();
        c.meas_z(5, "v").unwrap();
        c
    }

    fn run(c: &Circuit, f: &FaultConfig, seed: u64) -> (Vec<bool>, StabilizerState) {
        let mut state = StabilizerState::new(c.num_qubits()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = execute(c, f, &mut state, &mut rng).unwrap().bits().to_vec();
        (bits, state)
    }

    #[test]
    fn noiseless_verification_accepts() {
        let c = verified_ghz();
        let (bits, mut state) = run(&c, &FaultConfig::new(), 0);
        assert_eq!(bits, [false]);
        for s in ["ZZIIII", "IZZIII", "IIZZII", "IIIZZI", "XXXXXI"] {
            assert_eq!(
                state.expectation_of_pauli(&s.parse().unwrap()),
                Expectation::Plus
            );
        }
    }

    #[test]
    fn x_before_check_is_detected() {
        // X on the target of CNOT(1, 2) spreads to qubits 2..5, so the 1-3 check sees one X.
        let c = verified_ghz();
        let loc = 7;
        assert_eq!(c.gate_at_location(loc).unwrap(), Gate::Cnot(1, 2));
        let f = FaultConfig::from_pairs([(loc, Fault::Pauli2(Pauli1::I, Pauli1::X))]);
        let (bits, _) = run(&c, &f, 1);
        assert_eq!(bits, [true]);
    }

    #[test]
    fn measurement_flip_leaves_state_alone() {
        let c = verified_ghz();
        let flip_loc = c.locations().len() - 1;
        let f = FaultConfig::from_pairs([(flip_loc, Fault::Flip)]);
        let (bits, mut state) = run(&c, &f, 2);
        assert_eq!(bits, [true]);
        assert_eq!(
            state.expectation_of_pauli(&"ZZIIII".parse().unwrap()),
            Expectation::Plus
        );
        assert_eq!(
            state.expectation_of_pauli(&"XXXXXI".parse().unwrap()),
            Expectation::Plus
        );
    }

    #[test]
    fn execution_errors() {
        let c = verified_ghz();
        let mut small = StabilizerState::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(execute(&c, &FaultConfig::new(), &mut small, &mut rng).is_err());
        let bad = FaultConfig::from_pairs([(0, Fault::Flip)]);
        assert!(execute_frame(&c, &bad).is_err());
    }

    #[test]
    fn labeled_outcomes() {
        let c = verified_ghz();
        let (out, _) = execute_frame(&c, &FaultConfig::new()).unwrap();
        assert!(!out.get("v").unwrap());
        assert!(out.get("w").is_err());
        assert_eq!(out.to_map().len(), 1);
    }

    #[test]
    fn zz_fault_on_ladder_never_flips_check() {
        let c = verified_ghz();
        for loc in 6..10 {
            let f = FaultConfig::from_pairs([(loc, Fault::Pauli2(Pauli1::Z, Pauli1::Z))]);
            let (bits, _) = run(&c, &f, loc as u64);
            assert_eq!(bits, [false]);
        }
    }

    #[test]
    fn disjoint_fault_sets_compose() {
        let c = verified_ghz();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = sample_fault_config(&c, &SubsetIndex::new(1, 1, 0), &mut rng).unwrap();
            let b = sample_fault_config(&c, &SubsetIndex::new(0, 0, 1), &mut rng).unwrap();
            let (ab, frame_ab) = execute_frame(&c, &a.union(&b)).unwrap();
            let mut frame = PauliFrame::new(c.num_qubits());
            let mut bits = Vec::new();
            let both = a.union(&b);
            run_gates(&c, 0..4, &both, &mut frame, &mut bits);
            run_gates(&c, 4..c.len(), &both, &mut frame, &mut bits);
            assert_eq!(ab.bits(), &bits[..]);
            assert_eq!(frame, frame_ab);
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let c = verified_ghz();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = sample_fault_config(&c, &SubsetIndex::new(2, 2, 1), &mut rng).unwrap();
        let mut c2 = c.clone();
        for q in 0..5 {
            c2.meas_z(q, &format!("m{q}")).unwrap();
        }
        let (a, _) = run(&c2, &f, 77);
        let (b, _) = run(&c2, &f, 77);
        assert_eq!(a, b);
    }

    #[test]
    fn frame_matches_tableau_on_deterministic_checks() {
        let c = verified_ghz();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..500 {
            let w = SubsetIndex::new(
                rng.gen_range(0..3),
                rng.gen_range(0..3),
                rng.gen_range(0..2),
            );
            let f = sample_fault_config(&c, &w, &mut rng).unwrap();
            let (bits, mut state) = run(&c, &f, i);
            let (flips, frame) = execute_frame(&c, &f).unwrap();
            assert_eq!(bits, flips.bits());
            let residual = frame.to_pauli(0, 5);
            for s in ["ZZIII", "IZZII", "IIZZI", "IIIZZ", "XXXXX"] {
                let g: PauliString = s.parse().unwrap();
                let expected = if residual.commutes_with(&g) {
                    Expectation::Plus
                } else {
                    Expectation::Minus
                };
                assert_eq!(state.expectation_of_pauli(&g.embed(6, 0)), expected);
            }
        }
    }
}
