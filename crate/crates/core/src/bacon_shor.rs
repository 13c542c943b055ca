//! Square Bacon-Shor codes: geometry, state preparation, syndrome extraction and decoding.
//!
//! Data qubits are numbered row-major. The public API uses 0-based indices
//! `q = row * d + col`; printed labels are 1-based (`q + 1`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::Error;
use crate::pauli::{Pauli1, PauliString};
use crate::sim::PauliFrame;
use crate::tableau::{Basis, Expectation, StabilizerState};

/// Logical basis state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogicalState {
    Zero,
    Plus,
}

impl FromStr for LogicalState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "zero" | "0" => Ok(LogicalState::Zero),
            "plus" | "+" => Ok(LogicalState::Plus),
            _ => Err(Error::InvalidParameter(format!(
                "unknown logical state {s:?}"
            ))),
        }
    }
}

impl fmt::Display for LogicalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogicalState::Zero => "zero",
            LogicalState::Plus => "plus",
        })
    }
}

/// Geometry of the `d x d` Bacon-Shor code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CodeLayout {
    d: usize,
}

impl CodeLayout {
    pub fn new(d: usize) -> Result<Self, Error> {
        if d < 3 || d.is_multiple_of(2) || d > 31 {
            return Err(Error::InvalidDistance(d));
        }
        Ok(CodeLayout { d })
    }

    pub fn distance(&self) -> usize {
        self.d
    }

    /// Number of correctable errors, `(d - 1) / 2`.
    pub fn t(&self) -> usize {
        (self.d - 1) / 2
    }

    pub fn num_data(&self) -> usize {
        self.d * self.d
    }

    /// 0-based qubit of (row, col), both 0-based.
    pub fn qubit(&self, row: usize, col: usize) -> usize {
        row * self.d + col
    }

    /// 0-based qubit of the 1-based (row, col) position.
    pub fn index(&self, row: usize, col: usize) -> usize {
        (row - 1) * self.d + col - 1
    }

    pub fn column(&self, col: usize) -> Vec<usize> {
        (0..self.d).map(|r| self.qubit(r, col)).collect()
    }

    pub fn row(&self, row: usize) -> Vec<usize> {
        (0..self.d).map(|c| self.qubit(row, c)).collect()
    }

    /// Support of X stabilizer `j`: columns `j` and `j + 1`.
    pub fn x_stab_support(&self, j: usize) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .column(j)
            .into_iter()
            .chain(self.column(j + 1))
            .collect();
        s.sort_unstable();
        s
    }

    /// Support of Z stabilizer `i`: rows `i` and `i + 1`.
    pub fn z_stab_support(&self, i: usize) -> Vec<usize> {
        self.row(i).into_iter().chain(self.row(i + 1)).collect()
    }

    pub fn x_stabs(&self) -> Vec<PauliString> {
        (0..self.d - 1)
            .map(|j| PauliString::x_on(self.num_data(), &self.x_stab_support(j)))
            .collect()
    }

    pub fn z_stabs(&self) -> Vec<PauliString> {
        (0..self.d - 1)
            .map(|i| PauliString::z_on(self.num_data(), &self.z_stab_support(i)))
            .collect()
    }

    /// Horizontal XX gauge pairs, row by row.
    pub fn x_gauges(&self) -> Vec<PauliString> {
        let mut out = Vec::new();
        for r in 0..self.d {
            for c in 0..self.d - 1 {
                out.push(PauliString::x_on(
                    self.num_data(),
                    &[self.qubit(r, c), self.qubit(r, c + 1)],
                ));
            }
        }
        out
    }

    /// Vertical ZZ gauge pairs, column by column.
    pub fn z_gauges(&self) -> Vec<PauliString> {
        let mut out = Vec::new();
        for c in 0..self.d {
            for r in 0..self.d - 1 {
                out.push(PauliString::z_on(
                    self.num_data(),
                    &[self.qubit(r, c), self.qubit(r + 1, c)],
                ));
            }
        }
        out
    }

    /// X on the first column.
    pub fn x_logical(&self) -> PauliString {
        PauliString::x_on(self.num_data(), &self.column(0))
    }

    /// Z on the first row.
    pub fn z_logical(&self) -> PauliString {
        PauliString::z_on(self.num_data(), &self.row(0))
    }

    /// Bitmask of rows with odd X parity (bit r) and columns with odd Z parity (bit c).
    pub fn parity_patterns(&self, error: &PauliString) -> (u32, u32) {
        let (mut rows, mut cols) = (0u32, 0u32);
        for q in error.x_support() {
            rows ^= 1 << (q / self.d);
        }
        for q in error.z_support() {
            cols ^= 1 << (q % self.d);
        }
        (rows, cols)
    }

    /// Minimal weight over the error's stabilizer-and-gauge equivalence class.
    pub fn gauge_weight(&self, error: &PauliString) -> usize {
        let (rows, cols) = self.parity_patterns(error);
        rows.count_ones().max(cols.count_ones()) as usize
    }

    /// Syndrome bits (bit `j` = generator `j`) of a row or column parity pattern.
    pub fn pattern_syndrome(&self, pattern: u32) -> u32 {
        (pattern ^ (pattern >> 1)) & ((1 << (self.d - 1)) - 1)
    }

    /// Minimum-weight row/column pattern with the given syndrome.
    pub fn decode_pattern(&self, syndrome: u32) -> u32 {
        let mut e = 0u32;
        let mut bit = 0u32;
        for k in 0..self.d - 1 {
            bit ^= (syndrome >> k) & 1;
            e |= bit << (k + 1);
        }
        let full = (1u32 << self.d) - 1;
        debug_assert_ne!(e.count_ones() as usize * 2, self.d);
        if e.count_ones() as usize > self.d / 2 {
            e ^ full
        } else {
            e
        }
    }
}

/// Weight-2 Z checks on a GHZ chain; pairs are 1-based with `i < j <= d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GhzSpec {
    pub d: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl GhzSpec {
    pub fn new(d: usize, pairs: Vec<(usize, usize)>) -> Result<Self, Error> {
        if d < 2 {
            return Err(Error::InvalidDistance(d));
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if i == 0 || i >= j || j > d || pairs[..k].contains(&(i, j)) {
                return Err(Error::InvalidPair(i, j));
            }
        }
        Ok(GhzSpec { d, pairs })
    }

    pub fn v(&self) -> usize {
        self.pairs.len()
    }
}

/// The verification pairs drawn for each supported `(d, v)`.
pub fn default_verification_pairs(d: usize, v: usize) -> Result<Vec<(usize, usize)>, Error> {
    Ok(match (d, v) {
        (3, 0) | (5, 0) => vec![],
        (5, 1) => vec![(2, 4)],
        (7, 2) => vec![(2, 5), (3, 6)],
        (7, 3) => vec![(2, 5), (2, 6), (4, 6)],
        (9, 3) => vec![(2, 7), (3, 8), (5, 8)],
        (9, 4) => vec![(2, 5), (3, 8), (4, 6), (5, 8)],
        _ => return Err(Error::Unsupported { d, v }),
    })
}

/// Appends a GHZ ladder on `chain` plus one check per pair, each on its own ancilla.
fn push_ghz(
    circuit: &mut Circuit,
    chain: &[usize],
    ancillas: &[usize],
    pairs: &[(usize, usize)],
    prefix: &str,
) -> Result<(), Error> {
    for &q in chain {
        circuit.prep_z(q);
    }
    circuit.h(chain[0]);
    for w in chain.windows(2) {
        circuit.cnot(w[0], w[1])?;
    }
    for (k, (&(i, j), &a)) in pairs.iter().zip(ancillas).enumerate() {
        circuit.prep_z(a);
        circuit.cnot(chain[i - 1], a)?;
        circuit.cnot(chain[j - 1], a)?;
        circuit.meas_z(a, &format!("{prefix}v{k}"))?;
    }
    Ok(())
}

/// GHZ preparation on qubits `0..d`, checks on ancillas `d..d + v` labeled `v0, v1, ...`.
pub fn ghz_prep_circuit(spec: &GhzSpec) -> Result<Circuit, Error> {
    let spec = GhzSpec::new(spec.d, spec.pairs.clone())?;
    let chain: Vec<usize> = (0..spec.d).collect();
    let ancillas: Vec<usize> = (spec.d..spec.d + spec.v()).collect();
    let mut c = Circuit::new();
    push_ghz(&mut c, &chain, &ancillas, &spec.pairs, "")?;
    Ok(c)
}

/// Logical `|0>` or `|+>` on data qubits `0..d^2`, with check ancillas `d^2..d^2 + d v`.
///
/// `|+>` is a Z-basis GHZ state on every column. `|0>` is a Z-basis GHZ state on every row
/// followed by a noiseless Hadamard relabeling of the data. Checks are labeled `g{chain}v{k}`.
pub fn logical_prep_circuit(
    layout: &CodeLayout,
    v: usize,
    which: LogicalState,
) -> Result<Circuit, Error> {
    let d = layout.distance();
    let pairs = default_verification_pairs(d, v)?;
    let n = layout.num_data();
    let mut c = Circuit::new();
    c.reserve_qubits(n + d * v);
    for k in 0..d {
        let chain = match which {
            LogicalState::Plus => layout.column(k),
            LogicalState::Zero => layout.row(k),
        };
        let ancillas: Vec<usize> = (n + k * v..n + (k + 1) * v).collect();
        push_ghz(&mut c, &chain, &ancillas, &pairs, &format!("g{k}"))?;
    }
    if which == LogicalState::Zero {
        for q in 0..n {
            c.ideal_h(q);
        }
    }
    Ok(c)
}

/// Qubit registers of the Steane cycle circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SteaneRegisters {
    /// First qubit of the `|0>` ancilla block (measured in X).
    pub a: usize,
    /// First qubit of the `|+>` ancilla block (measured in Z).
    pub b: usize,
}

impl SteaneRegisters {
    pub fn new(layout: &CodeLayout, v: usize) -> Self {
        let n = layout.num_data();
        let d = layout.distance();
        SteaneRegisters {
            a: n,
            b: 2 * n + d * v,
        }
    }
}

/// One Steane cycle on data qubits `0..d^2`.
///
/// Block A: `|0>` preparation, transversal CNOT A -> data, transversal X measurement
/// (labels `a{q}`). Block B: `|+>` preparation, transversal CNOT data -> B, transversal
/// Z measurement (labels `b{q}`). Check labels carry an `A.` or `B.` prefix.
pub fn steane_cycle_circuit(layout: &CodeLayout, v: usize) -> Result<Circuit, Error> {
    let n = layout.num_data();
    let regs = SteaneRegisters::new(layout, v);
    let mut c = Circuit::new();
    c.reserve_qubits(n);
    c.append(
        &logical_prep_circuit(layout, v, LogicalState::Zero)?,
        regs.a,
        "A.",
    )?;
    for q in 0..n {
        c.cnot(regs.a + q, q)?;
    }
    for q in 0..n {
        c.meas_x(regs.a + q, &format!("a{q}"))?;
    }
    c.append(
        &logical_prep_circuit(layout, v, LogicalState::Plus)?,
        regs.b,
        "B.",
    )?;
    for q in 0..n {
        c.cnot(q, regs.b + q)?;
    }
    for q in 0..n {
        c.meas_z(regs.b + q, &format!("b{q}"))?;
    }
    Ok(c)
}

/// Appends one round of bare-ancilla stabilizer measurements using ancillas
/// `anc_base..anc_base + 2(d - 1)`; labels are `r{round}x{j}` and `r{round}z{i}`.
pub fn push_shor_round(
    circuit: &mut Circuit,
    layout: &CodeLayout,
    anc_base: usize,
    round: usize,
) -> Result<(), Error> {
    let d = layout.distance();
    for j in 0..d - 1 {
        let a = anc_base + j;
        circuit.prep_z(a);
        circuit.h(a);
        for r in 0..d {
            circuit.cnot(a, layout.qubit(r, j))?;
            circuit.cnot(a, layout.qubit(r, j + 1))?;
        }
        circuit.meas_x(a, &format!("r{round}x{j}"))?;
    }
    for i in 0..d - 1 {
        let a = anc_base + d - 1 + i;
        circuit.prep_z(a);
        for col in 0..d {
            circuit.cnot(layout.qubit(i, col), a)?;
            circuit.cnot(layout.qubit(i + 1, col), a)?;
        }
        circuit.meas_z(a, &format!("r{round}z{i}"))?;
    }
    Ok(())
}

/// A single round of stabilizer measurements with ancillas after the data block.
pub fn shor_round_circuit(layout: &CodeLayout) -> Circuit {
    let mut c = Circuit::new();
    c.reserve_qubits(layout.num_data());
    push_shor_round(&mut c, layout, layout.num_data(), 0).expect("distinct qubits");
    c
}

/// Stabilizer parities of a transversal readout (bit `j` of the result = generator `j`).
pub fn syndrome_from_transversal(
    outcomes: &[bool],
    layout: &CodeLayout,
    basis: Basis,
) -> Result<Vec<bool>, Error> {
    let n = layout.num_data();
    if outcomes.len() != n {
        return Err(Error::OutcomeCount {
            expected: n,
            got: outcomes.len(),
        });
    }
    let d = layout.distance();
    Ok((0..d - 1)
        .map(|k| {
            let support = match basis {
                Basis::X => layout.x_stab_support(k),
                Basis::Z => layout.z_stab_support(k),
            };
            support.iter().fold(false, |acc, &q| acc ^ outcomes[q])
        })
        .collect())
}

/// Packs syndrome bits into an integer, generator `j` at bit `j`.
pub fn pack_syndrome(bits: &[bool]) -> u32 {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (j, &b)| acc | (b as u32) << j)
}

/// Syndrome-indexed corrections for one error type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LookupTable {
    layout: CodeLayout,
    error_type: Pauli1,
    /// Corrected rows (X type) or columns (Z type), as a bitmask, indexed by packed syndrome.
    patterns: Vec<u32>,
}

/// Decoder for `error_type` errors: Z errors are read from X-stabilizer syndromes and
/// corrected on row 1; X errors from Z-stabilizer syndromes and corrected on column 1.
pub fn build_lookup_table(layout: &CodeLayout, error_type: Pauli1) -> Result<LookupTable, Error> {
    if !matches!(error_type, Pauli1::X | Pauli1::Z) {
        return Err(Error::InvalidParameter(format!(
            "lookup tables exist for X or Z errors, not {}",
            error_type.symbol()
        )));
    }
    let patterns = (0..1u32 << (layout.distance() - 1))
        .map(|s| layout.decode_pattern(s))
        .collect();
    Ok(LookupTable {
        layout: *layout,
        error_type,
        patterns,
    })
}

impl LookupTable {
    pub fn error_type(&self) -> Pauli1 {
        self.error_type
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Corrected rows or columns for a packed syndrome.
    pub fn pattern(&self, syndrome: u32) -> u32 {
        self.patterns[syndrome as usize]
    }

    /// 0-based qubits of the correction for a packed syndrome, ascending.
    pub fn correction_qubits(&self, syndrome: u32) -> Vec<usize> {
        let pattern = self.pattern(syndrome);
        (0..self.layout.distance())
            .filter(|k| pattern >> k & 1 == 1)
            .map(|k| match self.error_type {
                Pauli1::Z => self.layout.qubit(0, k),
                _ => self.layout.qubit(k, 0),
            })
            .collect()
    }

    pub fn correction(&self, syndrome: &[bool]) -> PauliString {
        let qubits = self.correction_qubits(pack_syndrome(syndrome));
        let n = self.layout.num_data();
        match self.error_type {
            Pauli1::Z => PauliString::z_on(n, &qubits),
            _ => PauliString::x_on(n, &qubits),
        }
    }

    /// Correction in label notation, e.g. `Z2`, `X6 X16`, or `I`.
    pub fn format_correction(&self, syndrome: u32) -> String {
        let qubits = self.correction_qubits(syndrome);
        if qubits.is_empty() {
            return "I".to_string();
        }
        qubits
            .iter()
            .map(|q| format!("{}{}", self.error_type.symbol(), q + 1))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Syndrome as printed: first generator leftmost.
    pub fn format_syndrome(&self, syndrome: u32) -> String {
        (0..self.layout.distance() - 1)
            .map(|j| if syndrome >> j & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// Rows in the order of the syndrome read as a binary number, first generator most significant.
    pub fn to_csv(&self) -> String {
        let bits = self.layout.distance() - 1;
        let mut out = String::from("syndrome_bits,correction\n");
        for value in 0..self.patterns.len() as u32 {
            let packed = (0..bits).fold(0u32, |acc, j| acc | ((value >> (bits - 1 - j)) & 1) << j);
            out.push_str(&format!(
                "{},{}\n",
                self.format_syndrome(packed),
                self.format_correction(packed)
            ));
        }
        out
    }
}

fn stabilizer_syndrome(
    state: &mut StabilizerState,
    generators: &[PauliString],
) -> Result<Vec<bool>, Error> {
    generators
        .iter()
        .enumerate()
        .map(|(k, g)| match state.expectation_of_pauli(g) {
            Expectation::Plus => Ok(false),
            Expectation::Minus => Ok(true),
            Expectation::Indeterminate => Err(Error::IndeterminateSyndrome(k)),
        })
        .collect()
}

/// Noiseless syndrome measurement, lookup correction and logical readout on the data
/// block `0..d^2` of `state`. Returns whether the logical value was flipped.
pub fn ideal_correct_and_readout(
    state: &mut StabilizerState,
    layout: &CodeLayout,
    init: LogicalState,
) -> Result<bool, Error> {
    let sx = stabilizer_syndrome(state, &layout.x_stabs())?;
    let sz = stabilizer_syndrome(state, &layout.z_stabs())?;
    state.apply_pauli(&build_lookup_table(layout, Pauli1::Z)?.correction(&sx))?;
    state.apply_pauli(&build_lookup_table(layout, Pauli1::X)?.correction(&sz))?;
    let logical = match init {
        LogicalState::Plus => layout.x_logical(),
        LogicalState::Zero => layout.z_logical(),
    };
    match state.expectation_of_pauli(&logical) {
        Expectation::Plus => Ok(false),
        Expectation::Minus => Ok(true),
        Expectation::Indeterminate => Err(Error::GaugeEntanglement),
    }
}

/// Logical flip caused by residual row/column parity patterns after ideal correction.
pub fn residual_logical_error(
    layout: &CodeLayout,
    rows: u32,
    cols: u32,
    init: LogicalState,
) -> bool {
    let pattern = match init {
        LogicalState::Plus => cols,
        LogicalState::Zero => rows,
    };
    let corrected = pattern ^ layout.decode_pattern(layout.pattern_syndrome(pattern));
    corrected & 1 == 1
}

/// Row X-parity and column Z-parity patterns of the data block of a frame.
pub fn frame_patterns(frame: &PauliFrame, layout: &CodeLayout) -> (u32, u32) {
    let d = layout.distance();
    let (mut rows, mut cols) = (0u32, 0u32);
    for r in 0..d {
        for c in 0..d {
            let q = layout.qubit(r, c);
            rows ^= (frame.x_bit(q) as u32) << r;
            cols ^= (frame.z_bit(q) as u32) << c;
        }
    }
    (rows, cols)
}
