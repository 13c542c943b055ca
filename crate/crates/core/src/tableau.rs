//! CHP-style stabilizer tableau (Aaronson & Gottesman) with packed rows.

use rand::Rng;

use crate::error::Error;
use crate::pauli::{product_phase, words_for, Pauli1, PauliString};

/// Measurement basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Basis {
    Z,
    X,
}

/// Value of a Pauli observable on a stabilizer state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    Plus,
    Minus,
    Indeterminate,
}

/// An `n`-qubit stabilizer state: rows `0..n` are destabilizers, `n..2n`
/// stabilizers, row `2n` is scratch space.
#[derive(Clone, Debug)]
pub struct StabilizerState {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

impl StabilizerState {
    /// `|0…0⟩` on `n` qubits.
    pub fn new(n: usize) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::EmptyState);
        }
        let words = words_for(n);
        let rows = 2 * n + 1;
        let mut s = StabilizerState {
            n,
            words,
            x: vec![0; rows * words],
            z: vec![0; rows * words],
            r: vec![false; rows],
        };
        for q in 0..n {
            s.x[q * words + (q >> 6)] |= 1 << (q & 63);
            s.z[(n + q) * words + (q >> 6)] |= 1 << (q & 63);
        }
        Ok(s)
    }

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
    fn xb(&self, row: usize, q: usize) -> bool {
        (self.x[row * self.words + (q >> 6)] >> (q & 63)) & 1 == 1
    }

    #[inline]
    fn zb(&self, row: usize, q: usize) -> bool {
        (self.z[row * self.words + (q >> 6)] >> (q & 63)) & 1 == 1
    }

    fn row(&self, row: usize) -> PauliString {
        let mut p = PauliString::identity(self.n);
        for q in 0..self.n {
            p.set(q, Pauli1::from_bits(self.xb(row, q), self.zb(row, q)));
        }
        if self.r[row] {
            p.negate();
        }
        p
    }

    pub fn stabilizers(&self) -> Vec<PauliString> {
        (self.n..2 * self.n).map(|i| self.row(i)).collect()
    }

    pub fn destabilizers(&self) -> Vec<PauliString> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    /// `row[h] <- row[i] * row[h]`, tracking the sign.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.words;
        let (hs, is) = (h * w, i * w);
        let g = product_phase(
            &self.x[is..is + w],
            &self.z[is..is + w],
            &self.x[hs..hs + w],
            &self.z[hs..hs + w],
        );
        let total = (2 * self.r[h] as u32 + 2 * self.r[i] as u32 + g) % 4;
        self.r[h] = total == 2;
        for k in 0..w {
            let (xi, zi) = (self.x[is + k], self.z[is + k]);
            self.x[hs + k] ^= xi;
            self.z[hs + k] ^= zi;
        }
    }

    fn anticommutes_row(&self, row: usize, p: &PauliString) -> bool {
        let w = self.words;
        let (px, pz) = (p.x_words(), p.z_words());
        let mut acc = 0u32;
        for k in 0..w {
            acc ^= ((self.x[row * w + k] & pz[k]) ^ (self.z[row * w + k] & px[k])).count_ones();
        }
        acc & 1 == 1
    }

    pub fn apply_hadamard(&mut self, q: usize) -> Result<(), Error> {
        self.check(q)?;
        let (wq, b) = (q >> 6, 1u64 << (q & 63));
        for row in 0..2 * self.n {
            let k = row * self.words + wq;
            let (xv, zv) = (self.x[k] & b, self.z[k] & b);
            if xv != 0 && zv != 0 {
                self.r[row] ^= true;
            }
            self.x[k] = (self.x[k] & !b) | zv;
            self.z[k] = (self.z[k] & !b) | xv;
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), Error> {
        self.check(control)?;
        self.check(target)?;
        if control == target {
            return Err(Error::InvalidGate(format!(
                "CNOT control equals target ({control})"
            )));
        }
        for row in 0..2 * self.n {
            let (xc, zc) = (self.xb(row, control), self.zb(row, control));
            let (xt, zt) = (self.xb(row, target), self.zb(row, target));
            if xc && zt && xt == zc {
                self.r[row] ^= true;
            }
            let base = row * self.words;
            if xc {
                self.x[base + (target >> 6)] ^= 1 << (target & 63);
            }
            if zt {
                self.z[base + (control >> 6)] ^= 1 << (control & 63);
            }
        }
        Ok(())
    }

    /// Conjugates the state by a Pauli: flips the sign of every row that anticommutes with it.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<(), Error> {
        if p.num_qubits() > self.n {
            return Err(Error::QubitOutOfRange {
                qubit: p.num_qubits() - 1,
                n: self.n,
            });
        }
        let p = self.widen(p);
        for row in 0..2 * self.n {
            if self.anticommutes_row(row, &p) {
                self.r[row] ^= true;
            }
        }
        Ok(())
    }

    /// Single-qubit Pauli on `q`.
    pub fn apply_pauli1(&mut self, q: usize, op: Pauli1) -> Result<(), Error> {
        self.check(q)?;
        let (wq, b) = (q >> 6, 1u64 << (q & 63));
        for row in 0..2 * self.n {
            let k = row * self.words + wq;
            let anti = (op.has_x() && self.z[k] & b != 0) ^ (op.has_z() && self.x[k] & b != 0);
            if anti {
                self.r[row] ^= true;
            }
        }
        Ok(())
    }

    fn widen<'a>(&self, p: &'a PauliString) -> std::borrow::Cow<'a, PauliString> {
        if p.num_qubits() == self.n {
            std::borrow::Cow::Borrowed(p)
        } else {
            std::borrow::Cow::Owned(p.embed(self.n, 0))
        }
    }

    fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> (bool, bool) {
        let n = self.n;
        let w = self.words;
        if let Some(p) = (n..2 * n).find(|&i| self.xb(i, q)) {
            for i in 0..2 * n {
                if i != p && self.xb(i, q) {
                    self.rowsum(i, p);
                }
            }
            let (src, dst) = (p * w, (p - n) * w);
            self.x.copy_within(src..src + w, dst);
            self.z.copy_within(src..src + w, dst);
            self.r[p - n] = self.r[p];
            self.x[src..src + w].fill(0);
            self.z[src..src + w].fill(0);
            self.z[src + (q >> 6)] |= 1 << (q & 63);
            let outcome: bool = rng.gen();
            self.r[p] = outcome;
            (outcome, false)
        } else {
            let s = 2 * n;
            self.x[s * w..(s + 1) * w].fill(0);
            self.z[s * w..(s + 1) * w].fill(0);
            self.r[s] = false;
            for i in 0..n {
                if self.xb(i, q) {
                    self.rowsum(s, i + n);
                }
            }
            (self.r[s], true)
        }
    }

    /// Measures qubit `q`; returns `(outcome, deterministic)`. `true` means the −1 eigenvalue.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        q: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<(bool, bool), Error> {
        self.check(q)?;
        Ok(match basis {
            Basis::Z => self.measure_z(q, rng),
            Basis::X => {
                self.apply_hadamard(q)?;
                let out = self.measure_z(q, rng);
                self.apply_hadamard(q)?;
                out
            }
        })
    }

    /// Resets `q` to `|0⟩`.
    pub fn reset<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<(), Error> {
        let (bit, _) = self.measure(q, Basis::Z, rng)?;
        if bit {
            self.apply_pauli1(q, Pauli1::X)?;
        }
        Ok(())
    }

    /// `+1`/`−1` iff `±P` is in the stabilizer group, otherwise indeterminate.
    pub fn expectation_of_pauli(&mut self, p: &PauliString) -> Expectation {
        if p.num_qubits() > self.n {
            return Expectation::Indeterminate;
        }
        let p = self.widen(p).into_owned();
        let n = self.n;
        if (n..2 * n).any(|i| self.anticommutes_row(i, &p)) {
            return Expectation::Indeterminate;
        }
        let w = self.words;
        let s = 2 * n;
        self.x[s * w..(s + 1) * w].fill(0);
        self.z[s * w..(s + 1) * w].fill(0);
        self.r[s] = false;
        for i in 0..n {
            if self.anticommutes_row(i, &p) {
                self.rowsum(s, i + n);
            }
        }
        debug_assert!(self.x[s * w..(s + 1) * w] == *p.x_words());
        let negative_p = p.phase() == 2;
        if self.r[s] == negative_p {
            Expectation::Plus
        } else {
            Expectation::Minus
        }
    }
}
