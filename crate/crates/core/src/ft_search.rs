//! Fault-propagation checker for verified GHZ preparations and the search over
//! weight-2 Z verification pairs.
//!
//! Faults are drawn from an X-only alphabet: Z components never flip a Z-basis check and
//! any Z pattern on a GHZ state is equivalent to weight at most one.

use rayon::prelude::*;
use serde::Serialize;

use crate::bacon_shor::{ghz_prep_circuit, GhzSpec};
use crate::circuit::{Circuit, Fault, Gate};
use crate::error::Error;
use crate::pauli::{conjugate_pauli, Clifford, Pauli1, PauliString};
use crate::sampler::combinations;

/// Result of pushing a fault set through a GHZ preparation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Propagation {
    /// Check outcome flips, in measurement order.
    pub outcomes: Vec<bool>,
    /// Accumulated Pauli on the GHZ qubits after the last gate.
    pub residual: PauliString,
}

/// Pushes every fault through the rest of the circuit by conjugation.
///
/// Preparations discard whatever was on their qubit. Only the first `data` qubits
/// are kept in the residual.
pub fn propagate(
    circuit: &Circuit,
    faults: &[(usize, Fault)],
    data: usize,
) -> Result<Propagation, Error> {
    let locations = circuit.locations();
    for &(l, _) in faults {
        if l >= locations.len() {
            return Err(Error::UnknownLocation(l));
        }
    }
    let mut p = PauliString::identity(circuit.num_qubits());
    let mut outcomes = Vec::new();
    for (g, gate) in circuit.gates().iter().enumerate() {
        match *gate {
            Gate::PrepZ(q) => p.set(q, Pauli1::I),
            Gate::H(q) | Gate::IdealH(q) => p = conjugate_pauli(Clifford::H(q), &p)?,
            Gate::Cnot(c, t) => p = conjugate_pauli(Clifford::Cnot(c, t), &p)?,
            Gate::MeasZ(q) => outcomes.push(p.x_bit(q)),
            Gate::MeasX(q) => outcomes.push(p.z_bit(q)),
        }
        if matches!(gate, Gate::IdealH(_)) {
            continue;
        }
        let loc = circuit.locations_before(g);
        for &(_, f) in faults.iter().filter(|&&(l, _)| l == loc) {
            match (f, *gate) {
                (Fault::Pauli1(a), Gate::PrepZ(q) | Gate::H(q)) => p.xor_pauli(q, a),
                (Fault::Pauli2(a, b), Gate::Cnot(c, t)) => {
                    p.xor_pauli(c, a);
                    p.xor_pauli(t, b);
                }
                (Fault::Flip, Gate::MeasZ(_) | Gate::MeasX(_)) => {
                    let last = outcomes.last_mut().expect("measurement recorded");
                    *last = !*last;
                }
                _ => {
                    return Err(Error::FaultMismatch {
                        location: loc,
                        fault: f.to_string(),
                    })
                }
            }
        }
    }
    let residual = p.slice(0, data.min(circuit.num_qubits()));
    Ok(Propagation { outcomes, residual })
}

/// X weight of a GHZ residual up to the all-X stabilizer.
pub fn reduce_x_weight(residual: &PauliString, d: usize) -> usize {
    let w = residual.x_weight();
    w.min(d.saturating_sub(w))
}

/// Faults considered at a location.
pub fn restricted_alphabet(gate: &Gate) -> Vec<Fault> {
    match gate {
        Gate::PrepZ(_) | Gate::H(_) => vec![Fault::Pauli1(Pauli1::X)],
        Gate::Cnot(..) => vec![
            Fault::Pauli2(Pauli1::X, Pauli1::I),
            Fault::Pauli2(Pauli1::I, Pauli1::X),
            Fault::Pauli2(Pauli1::X, Pauli1::X),
        ],
        Gate::MeasZ(_) | Gate::MeasX(_) => vec![Fault::Flip],
        Gate::IdealH(_) => vec![],
    }
}

/// GHZ length plus verification pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub d: usize,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub faults: Vec<(usize, Fault)>,
    pub reduced_weight: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ft,
    NotFt(Counterexample),
}

impl Verdict {
    pub fn is_ft(&self) -> bool {
        matches!(self, Verdict::Ft)
    }
}

/// Single-fault effects packed as bitmasks (check flips, residual X support).
struct EffectTable {
    effects: Vec<Vec<(Fault, u64, u64)>>,
}

impl EffectTable {
    fn new(circuit: &Circuit, d: usize) -> Result<Self, Error> {
        let pack = |bits: &mut dyn Iterator<Item = bool>| {
            bits.enumerate()
                .fold(0u64, |acc, (i, b)| acc | (b as u64) << i)
        };
        let effects = circuit
            .locations()
            .iter()
            .map(|loc| {
                restricted_alphabet(&circuit.gates()[loc.gate])
                    .into_iter()
                    .map(|f| {
                        let pr = propagate(circuit, &[(loc.id, f)], d)?;
                        let checks = pack(&mut pr.outcomes.iter().copied());
                        let xs = pack(&mut (0..d).map(|q| pr.residual.x_bit(q)));
                        Ok((f, checks, xs))
                    })
                    .collect::<Result<Vec<_>, Error>>()
            })
            .collect::<Result<Vec<_>, Error>>()?;
        Ok(EffectTable { effects })
    }

    /// First failing assignment over the locations `locs`, choices in alphabet order.
    fn first_failure(&self, locs: &[usize], d: usize) -> Option<Counterexample> {
        let sizes: Vec<usize> = locs.iter().map(|&l| self.effects[l].len()).collect();
        if sizes.contains(&0) {
            return None;
        }
        let mut choice = vec![0; locs.len()];
        loop {
            let (mut checks, mut xs) = (0u64, 0u64);
            for (&l, &c) in locs.iter().zip(&choice) {
                checks ^= self.effects[l][c].1;
                xs ^= self.effects[l][c].2;
            }
            let w = xs.count_ones() as usize;
            let reduced = w.min(d - w);
            if checks == 0 && reduced > locs.len() {
                return Some(Counterexample {
                    faults: locs
                        .iter()
                        .zip(&choice)
                        .map(|(&l, &c)| (l, self.effects[l][c].0))
                        .collect(),
                    reduced_weight: reduced,
                });
            }
            let mut i = locs.len();
            loop {
                if i == 0 {
                    return None;
                }
                i -= 1;
                choice[i] += 1;
                if choice[i] < sizes[i] {
                    break;
                }
                choice[i] = 0;
            }
        }
    }
}

/// Preparation circuit of a candidate with checks in the given pair order.
pub fn candidate_circuit(candidate: &Candidate) -> Result<Circuit, Error> {
    ghz_prep_circuit(&GhzSpec::new(candidate.d, candidate.pairs.clone())?)
}

fn effect_table(candidate: &Candidate) -> Result<(EffectTable, usize), Error> {
    let circuit = candidate_circuit(candidate)?;
    if circuit.num_measurements() > 64 || candidate.d > 64 {
        return Err(Error::Unsupported {
            d: candidate.d,
            v: candidate.pairs.len(),
        });
    }
    Ok((
        EffectTable::new(&circuit, candidate.d)?,
        circuit.locations().len(),
    ))
}

/// Smallest accepted set of exactly `s` faults whose reduced X weight exceeds `s`.
pub fn counterexample_of_order(
    candidate: &Candidate,
    s: usize,
) -> Result<Option<Counterexample>, Error> {
    let (table, n) = effect_table(candidate)?;
    Ok(combinations(n, s)
        .into_iter()
        .find_map(|locs| table.first_failure(&locs, candidate.d)))
}

/// Checks that every accepted set of `s <= s_max` faults leaves an X residual of weight at
/// most `s`. Returns the counterexample with fewest faults, then smallest locations.
pub fn check_ft(candidate: &Candidate, s_max: usize) -> Result<Verdict, Error> {
    let (table, n) = effect_table(candidate)?;
    for s in 1..=s_max {
        for locs in combinations(n, s) {
            if let Some(c) = table.first_failure(&locs, candidate.d) {
                return Ok(Verdict::NotFt(c));
            }
        }
    }
    Ok(Verdict::Ft)
}

/// One line of search output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CandidateReport {
    pub pairs: Vec<(usize, usize)>,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<FaultRecord>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaultRecord {
    pub location: usize,
    pub fault: String,
}

impl CandidateReport {
    pub fn new(candidate: &Candidate, verdict: &Verdict) -> Self {
        CandidateReport {
            pairs: candidate.pairs.clone(),
            verdict: if verdict.is_ft() { "ft" } else { "not_ft" },
            counterexample: match verdict {
                Verdict::Ft => None,
                Verdict::NotFt(c) => Some(
                    c.faults
                        .iter()
                        .map(|&(location, f)| FaultRecord {
                            location,
                            fault: f.to_string(),
                        })
                        .collect(),
                ),
            },
        }
    }
}

/// All `v`-subsets of the pairs `i < j <= d`, in lexicographic order.
pub fn candidates(d: usize, v: usize) -> Vec<Candidate> {
    let all: Vec<(usize, usize)> = (1..=d)
        .flat_map(|i| (i + 1..=d).map(move |j| (i, j)))
        .collect();
    combinations(all.len(), v)
        .into_iter()
        .map(|idx| Candidate {
            d,
            pairs: idx.into_iter().map(|k| all[k]).collect(),
        })
        .collect()
}

/// Verdicts for every candidate with `v` checks, in enumeration order.
pub fn search_all(d: usize, v: usize, s_max: usize) -> Result<Vec<(Candidate, Verdict)>, Error> {
    if v == 0 {
        return Err(Error::InvalidParameter(
            "at least one verification pair is required".into(),
        ));
    }
    candidates(d, v)
        .into_par_iter()
        .map(|c| check_ft(&c, s_max).map(|v| (c, v)))
        .collect()
}

/// Candidates that pass `check_ft`.
pub fn search(d: usize, v: usize, s_max: usize) -> Result<Vec<Candidate>, Error> {
    Ok(search_all(d, v, s_max)?
        .into_iter()
        .filter(|(_, v)| v.is_ft())
        .map(|(c, _)| c)
        .collect())
}
