//! Pauli strings over `n` qubits stored as packed X/Z bit masks.
//!
//! A string represents `i^phase * P_0 ⊗ P_1 ⊗ ...` where each single-qubit
//! factor is encoded by its `(x, z)` bits and `(1, 1)` stands for `Y` itself
//! (not `XZ`). Products track the phase exactly, so multiplication is
//! associative and Hermitian strings always carry a sign of ±1.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// A single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli1 {
    I,
    X,
    Y,
    Z,
}

impl Pauli1 {
    pub const ALL: [Pauli1; 4] = [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli1::I,
            (true, false) => Pauli1::X,
            (true, true) => Pauli1::Y,
            (false, true) => Pauli1::Z,
        }
    }

    #[inline]
    pub fn has_x(self) -> bool {
        matches!(self, Pauli1::X | Pauli1::Y)
    }

    #[inline]
    pub fn has_z(self) -> bool {
        matches!(self, Pauli1::Z | Pauli1::Y)
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli1::I => 'I',
            Pauli1::X => 'X',
            Pauli1::Y => 'Y',
            Pauli1::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' | '_' => Some(Pauli1::I),
            'X' => Some(Pauli1::X),
            'Y' => Some(Pauli1::Y),
            'Z' => Some(Pauli1::Z),
            _ => None,
        }
    }
}

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

/// Phase exponent (mod 4) picked up when multiplying `(x1, z1) * (x2, z2)`
/// word-wise, following the Aaronson-Gottesman `g` function.
#[inline]
pub(crate) fn product_phase(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> u32 {
    let mut pos = 0u32;
    let mut neg = 0u32;
    for i in 0..x1.len() {
        let (a, b, c, d) = (x1[i], z1[i], x2[i], z2[i]);
        let y1 = a & b;
        let xo = a & !b;
        let zo = !a & b;
        // Y*Z, X*Y, Z*X contribute +1; Y*X, X*Z, Z*Y contribute -1.
        let p = (y1 & !c & d) | (xo & c & d) | (zo & c & !d);
        let m = (y1 & c & !d) | (xo & !c & d) | (zo & c & d);
        pos += p.count_ones();
        neg += m.count_ones();
    }
    (pos + 4 * neg - neg) % 4
}

/// An `n`-qubit Pauli string with exact phase.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        PauliString {
            n,
            x: vec![0; w],
            z: vec![0; w],
            phase: 0,
        }
    }

    /// Builds a string from `(qubit, pauli)` pairs; later entries overwrite earlier ones.
    pub fn from_sparse(n: usize, ops: &[(usize, Pauli1)]) -> Result<Self, Error> {
        let mut p = PauliString::identity(n);
        for &(q, op) in ops {
            p.check(q)?;
            p.set(q, op);
        }
        Ok(p)
    }

    /// `X` on every listed qubit.
    pub fn x_on(n: usize, qubits: &[usize]) -> Self {
        let mut p = PauliString::identity(n);
        for &q in qubits {
            p.set(q, Pauli1::X);
        }
        p
    }

    /// `Z` on every listed qubit.
    pub fn z_on(n: usize, qubits: &[usize]) -> Self {
        let mut p = PauliString::identity(n);
        for &q in qubits {
            p.set(q, Pauli1::Z);
        }
        p
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    fn check(&self, q: usize) -> Result<(), Error> {
        if q >= self.n {
            Err(Error::QubitOutOfRange {
                qubit: q,
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    #[inline]
    pub fn x_bit(&self, q: usize) -> bool {
        (self.x[q >> 6] >> (q & 63)) & 1 == 1
    }

    #[inline]
    pub fn z_bit(&self, q: usize) -> bool {
        (self.z[q >> 6] >> (q & 63)) & 1 == 1
    }

    #[inline]
    pub fn get(&self, q: usize) -> Pauli1 {
        Pauli1::from_bits(self.x_bit(q), self.z_bit(q))
    }

    #[inline]
    pub fn set(&mut self, q: usize, op: Pauli1) {
        let (w, b) = (q >> 6, 1u64 << (q & 63));
        if op.has_x() {
            self.x[w] |= b;
        } else {
            self.x[w] &= !b;
        }
        if op.has_z() {
            self.z[w] |= b;
        } else {
            self.z[w] &= !b;
        }
    }

    #[inline]
    pub(crate) fn flip_x(&mut self, q: usize) {
        self.x[q >> 6] ^= 1u64 << (q & 63);
    }

    #[inline]
    pub(crate) fn flip_z(&mut self, q: usize) {
        self.z[q >> 6] ^= 1u64 << (q & 63);
    }

    /// Multiplies a single-qubit Pauli into position `q`, ignoring phase.
    /// This is the frame update used for fault injection.
    #[inline]
    pub fn xor_pauli(&mut self, q: usize, op: Pauli1) {
        if op.has_x() {
            self.flip_x(q);
        }
        if op.has_z() {
            self.flip_z(q);
        }
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    /// Phase as a power of `i`.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn set_phase(&mut self, phase: u8) {
        self.phase = phase % 4;
    }

    /// `+1` or `-1` for Hermitian strings, `None` when the phase is `±i`.
    pub fn sign(&self) -> Option<i8> {
        match self.phase {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) % 4;
    }

    pub fn negated(mut self) -> Self {
        self.negate();
        self
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(self.z.iter()).all(|&w| w == 0)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn x_weight(&self) -> usize {
        self.x.iter().map(|a| a.count_ones() as usize).sum()
    }

    pub fn z_weight(&self) -> usize {
        self.z.iter().map(|a| a.count_ones() as usize).sum()
    }

    /// Qubits carrying an X component (X or Y).
    pub fn x_support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q)).collect()
    }

    /// Qubits carrying a Z component (Z or Y).
    pub fn z_support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.z_bit(q)).collect()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        debug_assert_eq!(self.n, other.n);
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones() & 1;
        }
        acc == 0
    }

    /// In-place right multiplication `self = self * rhs`.
    pub fn mul_assign_right(&mut self, rhs: &PauliString) {
        debug_assert_eq!(self.n, rhs.n);
        let extra = product_phase(&self.x, &self.z, &rhs.x, &rhs.z);
        self.phase = ((self.phase as u32 + rhs.phase as u32 + extra) % 4) as u8;
        for i in 0..self.x.len() {
            self.x[i] ^= rhs.x[i];
            self.z[i] ^= rhs.z[i];
        }
    }

    /// Product ignoring phase (XOR of the masks).
    pub fn xor_assign(&mut self, rhs: &PauliString) {
        for i in 0..self.x.len() {
            self.x[i] ^= rhs.x[i];
            self.z[i] ^= rhs.z[i];
        }
    }

    /// Restriction to the qubits `start..start + len`, re-indexed from 0.
    pub fn slice(&self, start: usize, len: usize) -> PauliString {
        let mut out = PauliString::identity(len);
        for q in 0..len {
            out.set(q, self.get(start + q));
        }
        out
    }

    /// Embeds `self` into a larger register starting at `offset`.
    pub fn embed(&self, n: usize, offset: usize) -> PauliString {
        let mut out = PauliString::identity(n);
        for q in 0..self.n {
            out.set(offset + q, self.get(q));
        }
        out.phase = self.phase;
        out
    }

    /// Conjugation by a Hadamard on `q`: X <-> Z, Y -> -Y.
    pub fn conjugate_h(&mut self, q: usize) {
        let (x, z) = (self.x_bit(q), self.z_bit(q));
        if x && z {
            self.negate();
        }
        if x != z {
            self.flip_x(q);
            self.flip_z(q);
        }
    }

    /// Conjugation by a CNOT with control `c` and target `t`.
    pub fn conjugate_cnot(&mut self, c: usize, t: usize) {
        let (xc, zc, xt, zt) = (self.x_bit(c), self.z_bit(c), self.x_bit(t), self.z_bit(t));
        if xc && zt && (xt == zc) {
            self.negate();
        }
        if xc {
            self.flip_x(t);
        }
        if zt {
            self.flip_z(c);
        }
    }
}

impl std::ops::Mul for &PauliString {
    type Output = PauliString;

    fn mul(self, rhs: &PauliString) -> PauliString {
        let mut out = self.clone();
        out.mul_assign_right(rhs);
        out
    }
}

impl fmt::Display for PauliString {
    /// Dense form with a leading phase, e.g. `+XIZY`, `-iZZ`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["+", "+i", "-", "-i"][self.phase as usize];
        f.write_str(prefix)?;
        for q in 0..self.n {
            write!(f, "{}", self.get(q).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (0, rest)
        } else {
            (0, s)
        };
        let chars: Vec<char> = body.chars().collect();
        let mut p = PauliString::identity(chars.len());
        for (q, c) in chars.into_iter().enumerate() {
            let op = Pauli1::from_symbol(c).ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("invalid Pauli symbol {c:?}"),
            })?;
            p.set(q, op);
        }
        p.phase = phase;
        Ok(p)
    }
}

/// The two Clifford gates that conjugate Pauli strings in this crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clifford {
    H(usize),
    Cnot(usize, usize),
}

/// Returns `U P U†` for a Hadamard or CNOT `U`.
pub fn conjugate_pauli(gate: Clifford, p: &PauliString) -> Result<PauliString, Error> {
    let mut out = p.clone();
    match gate {
        Clifford::H(q) => {
            out.check(q)?;
            out.conjugate_h(q);
        }
        Clifford::Cnot(c, t) => {
            out.check(c)?;
            out.check(t)?;
            if c == t {
                return Err(Error::InvalidGate(format!(
                    "CNOT control equals target ({c})"
                )));
            }
            out.conjugate_cnot(c, t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(&ps("X") * &ps("Y"), ps("+iZ"));
        assert_eq!(&ps("Y") * &ps("X"), ps("-iZ"));
        assert_eq!(&ps("Z") * &ps("X"), ps("+iY"));
        assert_eq!(&ps("Y") * &ps("Y"), ps("I"));
        assert_eq!(&ps("XX") * &ps("ZZ"), ps("-YY"));
    }

    #[test]
    fn cnot_conjugation_examples() {
        let xc = ps("XI");
        assert_eq!(
            conjugate_pauli(Clifford::Cnot(0, 1), &xc).unwrap(),
            ps("XX")
        );
        assert_eq!(
            conjugate_pauli(Clifford::Cnot(0, 1), &ps("IZ")).unwrap(),
            ps("ZZ")
        );
        assert_eq!(
            conjugate_pauli(Clifford::Cnot(0, 1), &ps("ZI")).unwrap(),
            ps("ZI")
        );
        assert_eq!(conjugate_pauli(Clifford::H(0), &ps("X")).unwrap(), ps("Z"));
        assert_eq!(conjugate_pauli(Clifford::H(0), &ps("Y")).unwrap(), ps("-Y"));
    }

    #[test]
    fn conjugation_rejects_bad_gates() {
        assert!(conjugate_pauli(Clifford::Cnot(1, 1), &ps("XX")).is_err());
        assert!(conjugate_pauli(Clifford::H(3), &ps("XX")).is_err());
    }

    #[test]
    fn display_round_trip() {
        for s in ["+XIZY", "-iZZ", "+iI", "-YXXI"] {
            assert_eq!(ps(s).to_string(), s);
        }
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
        (proptest::collection::vec(0u8..4, n), 0u8..4).prop_map(move |(ops, ph)| {
            let mut p = PauliString::identity(n);
            for (q, o) in ops.into_iter().enumerate() {
                p.set(q, Pauli1::ALL[o as usize]);
            }
            p.set_phase(ph);
            p
        })
    }

    proptest! {
        #[test]
        fn multiplication_is_associative(a in arb_pauli(70), b in arb_pauli(70), c in arb_pauli(70)) {
            let left = &(&a * &b) * &c;
            let right = &a * &(&b * &c);
            prop_assert_eq!(left, right);
        }

        #[test]
        fn commutation_matches_products(a in arb_pauli(9), b in arb_pauli(9)) {
            let ab = &a * &b;
            let ba = &b * &a;
            if a.commutes_with(&b) {
                prop_assert_eq!(ab, ba);
            } else {
                prop_assert_eq!(ab, ba.negated());
            }
        }

        #[test]
        fn conjugation_is_a_homomorphism(a in arb_pauli(5), b in arb_pauli(5), c in 0usize..5, t in 0usize..5) {
            prop_assume!(c != t);
            let g = Clifford::Cnot(c, t);
            let lhs = conjugate_pauli(g, &(&a * &b)).unwrap();
            let rhs = &conjugate_pauli(g, &a).unwrap() * &conjugate_pauli(g, &b).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
