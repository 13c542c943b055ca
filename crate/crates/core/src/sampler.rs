//! Subset (stratified) importance sampling over fault-count classes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    alphabet, sample_fault_config, subset_cardinality, Census, Circuit, Fault, NoiseClass,
    SubsetIndex,
};
use crate::error::Error;

/// Verdict of one protocol execution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub accepted: bool,
    pub logical_error: bool,
    pub rounds_used: usize,
    pub verification_failures: usize,
}

/// A circuit together with the rule that turns one faulty execution into a verdict.
pub trait Runner: Sync {
    fn circuit(&self) -> &Circuit;

    /// `faults` are sorted by location and belong to the circuit's alphabets.
    fn run(&self, faults: &[(usize, Fault)]) -> RunOutcome;
}

/// Physical error rates. Classes 1 and 2 fail with `p`, measurements with `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p: f64,
    pub q: f64,
}

impl NoiseParams {
    pub fn coupled(p: f64) -> Result<Self, Error> {
        Self::independent(p, p)
    }

    pub fn independent(p: f64, q: f64) -> Result<Self, Error> {
        for (name, x) in [("p", p), ("q", q)] {
            if !(0.0..1.0).contains(&x) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {x} outside [0, 1)"
                )));
            }
        }
        Ok(NoiseParams { p, q })
    }

    pub fn is_coupled(&self) -> bool {
        self.p == self.q
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn class_term(n: usize, w: usize, p: f64) -> f64 {
    binomial(n, w) * p.powi(w as i32) * (1.0 - p).powi((n - w) as i32)
}

/// Probability that exactly `w_i` locations of each class fail.
pub fn subset_probability(
    census: &Census,
    w: &SubsetIndex,
    params: &NoiseParams,
) -> Result<f64, Error> {
    w.check(census)?;
    Ok(class_term(census.n1, w.w1, params.p)
        * class_term(census.n2, w.w2, params.p)
        * class_term(census.n3, w.w3, params.q))
}

/// All subsets with total weight at most `w_max`, by total weight, then by decreasing
/// class-1 and class-2 weight.
pub fn enumerate_subsets(census: &Census, w_max: usize) -> Vec<SubsetIndex> {
    let mut out = Vec::new();
    for total in 0..=w_max {
        for w1 in (0..=total.min(census.n1)).rev() {
            for w2 in (0..=(total - w1).min(census.n2)).rev() {
                let w3 = total - w1 - w2;
                if w3 <= census.n3 {
                    out.push(SubsetIndex::new(w1, w2, w3));
                }
            }
        }
    }
    out
}

/// Monte Carlo or exhaustive statistics of one subset.
///
/// Exhaustive counts weight each configuration by `3^k`, `k` the number of faulty
/// preparations, so that every count is an integer draw frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetEstimate {
    pub w: SubsetIndex,
    pub samples: u64,
    pub accepted: u64,
    pub errors: u64,
    pub exhaustive: bool,
}

impl SubsetEstimate {
    /// Logical error rate among accepted runs.
    pub fn conditional_rate(&self) -> f64 {
        if self.accepted == 0 {
            0.0
        } else {
            self.errors as f64 / self.accepted as f64
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.samples.max(1) as f64
    }

    /// Joint rate of accepted runs with a logical error.
    pub fn error_rate(&self) -> f64 {
        self.errors as f64 / self.samples.max(1) as f64
    }

    /// One-sigma uncertainty of the joint error rate (zero when exhaustive).
    pub fn error_stderr(&self) -> f64 {
        if self.exhaustive || self.samples == 0 {
            0.0
        } else {
            let (lo, hi) = wilson_interval(self.errors, self.samples, 1.0);
            (hi - lo) / 2.0
        }
    }

    /// One-sigma uncertainty of the conditional rate (zero when exhaustive).
    pub fn conditional_stderr(&self) -> f64 {
        if self.exhaustive || self.accepted == 0 {
            0.0
        } else {
            let (lo, hi) = wilson_interval(self.errors, self.accepted, 1.0);
            (hi - lo) / 2.0
        }
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Sampling budget rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSettings {
    /// Monte Carlo samples per subset before any extension.
    pub samples: u64,
    /// Subsets with at most this many configurations are enumerated.
    pub exhaustive_cap: u128,
    /// Extend the budget when fewer errors than this were observed.
    pub extend_below_errors: u64,
    /// Extended budget as a fraction of the subset cardinality.
    pub extension_fraction: f64,
    /// Largest budget any subset may receive.
    pub ceiling: u64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            samples: 20_000,
            exhaustive_cap: 1_000_000,
            extend_below_errors: 10,
            extension_fraction: 0.05,
            ceiling: 1_000_000,
        }
    }
}

const BLOCK: u64 = 256;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sample block `block` of subset `w`; independent of scheduling.
pub fn block_seed(master_seed: u64, w: &SubsetIndex, block: u64) -> u64 {
    let mut h = mix(master_seed);
    for x in [w.w1 as u64, w.w2 as u64, w.w3 as u64, block] {
        h = mix(h ^ x);
    }
    h
}

#[derive(Clone, Copy, Default)]
struct Tally {
    samples: u64,
    accepted: u64,
    errors: u64,
}

impl Tally {
    fn add(mut self, o: Tally) -> Tally {
        self.samples += o.samples;
        self.accepted += o.accepted;
        self.errors += o.errors;
        self
    }

    fn record(&mut self, out: RunOutcome, weight: u64) {
        self.samples += weight;
        if out.accepted {
            self.accepted += weight;
            if out.logical_error {
                self.errors += weight;
            }
        }
    }
}

fn monte_carlo<R: Runner + ?Sized>(
    runner: &R,
    w: &SubsetIndex,
    range: std::ops::Range<u64>,
    seed: u64,
) -> Tally {
    let circuit = runner.circuit();
    let first = range.start / BLOCK;
    let last = range.end.div_ceil(BLOCK);
    (first..last)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(block_seed(seed, w, block));
            let lo = (block * BLOCK).max(range.start);
            let hi = ((block + 1) * BLOCK).min(range.end);
            // Skip the draws of indices before `lo` in this block so indices map to fixed draws.
            let mut tally = Tally::default();
            for i in block * BLOCK..hi {
                let faults = sample_fault_config(circuit, w, &mut rng).expect("subset checked");
                if i >= lo {
                    tally.record(runner.run(faults.as_slice()), 1);
                }
            }
            tally
        })
        .reduce(Tally::default, Tally::add)
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 && idx[0] == n - k {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn exhaustive<R: Runner + ?Sized>(runner: &R, w: &SubsetIndex) -> Tally {
    let circuit = runner.circuit();
    let classes = [NoiseClass::C1, NoiseClass::C2, NoiseClass::C3];
    let combos: Vec<Vec<Vec<usize>>> = classes
        .iter()
        .zip(w.as_array())
        .map(|(&c, k)| {
            let members = circuit.class_locations(c);
            combinations(members.len(), k)
                .into_iter()
                .map(|combo| combo.into_iter().map(|i| members[i]).collect())
                .collect()
        })
        .collect();
    let sizes = [combos[0].len(), combos[1].len(), combos[2].len()];
    let total = sizes[0] * sizes[1] * sizes[2];
    (0..total)
        .into_par_iter()
        .map(|k| {
            let (i1, rest) = (k % sizes[0], k / sizes[0]);
            let (i2, i3) = (rest % sizes[1], rest / sizes[1]);
            let mut locs: Vec<usize> = combos[0][i1]
                .iter()
                .chain(&combos[1][i2])
                .chain(&combos[2][i3])
                .copied()
                .collect();
            locs.sort_unstable();
            let alphabets: Vec<Vec<Fault>> = locs
                .iter()
                .map(|&l| alphabet(&circuit.gates()[circuit.locations()[l].gate]))
                .collect();
            let preps = alphabets
                .iter()
                .zip(&locs)
                .filter(|(a, &l)| a.len() == 1 && circuit.locations()[l].class == NoiseClass::C1)
                .count();
            let weight = 3u64.pow(preps as u32);
            let mut tally = Tally::default();
            let mut digits = vec![0usize; locs.len()];
            let mut faults: Vec<(usize, Fault)> =
                locs.iter().map(|&l| (l, alphabets[0][0])).collect();
            loop {
                for (j, f) in faults.iter_mut().enumerate() {
                    f.1 = alphabets[j][digits[j]];
                }
                tally.record(runner.run(&faults), weight);
                let mut j = 0;
                loop {
                    if j == digits.len() {
                        return tally;
                    }
                    digits[j] += 1;
                    if digits[j] < alphabets[j].len() {
                        break;
                    }
                    digits[j] = 0;
                    j += 1;
                }
            }
        })
        .reduce(Tally::default, Tally::add)
}

/// Estimates one subset, exhaustively when small enough, else by seeded Monte Carlo.
pub fn estimate_subset<R: Runner + ?Sized>(
    runner: &R,
    w: &SubsetIndex,
    settings: &SamplerSettings,
    master_seed: u64,
) -> Result<SubsetEstimate, Error> {
    let census = runner.circuit().census();
    let cardinality = subset_cardinality(&census, w)?;
    if cardinality <= settings.exhaustive_cap {
        let t = exhaustive(runner, w);
        return Ok(SubsetEstimate {
            w: *w,
            samples: t.samples,
            accepted: t.accepted,
            errors: t.errors,
            exhaustive: true,
        });
    }
    if settings.samples == 0 {
        return Err(Error::InvalidParameter(
            "sample budget must be at least 1".into(),
        ));
    }
    let base = settings.samples.min(settings.ceiling.max(1));
    let mut t = monte_carlo(runner, w, 0..base, master_seed);
    if t.errors < settings.extend_below_errors {
        let wanted = (settings.extension_fraction * cardinality as f64).ceil();
        let extended = (wanted.min(settings.ceiling as f64) as u64).max(base);
        if extended > base {
            t = t.add(monte_carlo(runner, w, base..extended, master_seed));
        }
    }
    Ok(SubsetEstimate {
        w: *w,
        samples: t.samples,
        accepted: t.accepted,
        errors: t.errors,
        exhaustive: false,
    })
}

/// Estimates every subset of total weight at most `w_max`.
pub fn estimate_all<R: Runner + ?Sized>(
    runner: &R,
    w_max: usize,
    settings: &SamplerSettings,
    master_seed: u64,
) -> Result<Vec<SubsetEstimate>, Error> {
    enumerate_subsets(&runner.circuit().census(), w_max)
        .iter()
        .map(|w| estimate_subset(runner, w, settings, master_seed))
        .collect()
}

/// How estimates from different subsets are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// Logical error rate conditioned on acceptance, over all subsets jointly.
    #[default]
    Global,
    /// Sum of per-subset conditional rates weighted by subset probability.
    Raw,
}

/// Lower and upper bounds on the logical error rate at `params`.
pub fn logical_rate_bounds(
    estimates: &[SubsetEstimate],
    census: &Census,
    params: &NoiseParams,
    mode: BoundMode,
) -> Result<(f64, f64), Error> {
    if estimates.is_empty() {
        return Err(Error::EmptyEstimates);
    }
    let mut mass = 0.0;
    let mut errors = 0.0;
    let mut accepted = 0.0;
    let mut raw = 0.0;
    for e in estimates {
        let a = subset_probability(census, &e.w, params)?;
        mass += a;
        errors += a * e.error_rate();
        accepted += a * e.acceptance_rate();
        raw += a * e.conditional_rate();
    }
    let unsampled = (1.0 - mass).max(0.0);
    Ok(match mode {
        BoundMode::Raw => (raw, (raw + unsampled).min(1.0)),
        BoundMode::Global => {
            let denom = accepted + unsampled;
            if denom <= 0.0 {
                (0.0, 1.0)
            } else {
                (errors / denom, ((errors + unsampled) / denom).min(1.0))
            }
        }
    })
}

/// Probability mass of accepted runs, with unsampled subsets counted as accepted.
pub fn acceptance_probability(
    estimates: &[SubsetEstimate],
    census: &Census,
    params: &NoiseParams,
) -> Result<f64, Error> {
    let mut mass = 0.0;
    let mut accepted = 0.0;
    for e in estimates {
        let a = subset_probability(census, &e.w, params)?;
        mass += a;
        accepted += a * e.acceptance_rate();
    }
    Ok(accepted + (1.0 - mass).max(0.0))
}

type RateFn = fn(&SubsetEstimate) -> f64;

/// One polynomial coefficient and its one-sigma uncertainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub order: usize,
    pub value: f64,
    pub stderr: f64,
}

/// Coefficients `c_l` of the expansion `p_L(p) = sum_l c_l p^l` (with `q = p`) for
/// `l = 0..=max_order`, matching the lower bound of `mode`.
///
/// In global mode each subset contributes its joint error and acceptance rates to two
/// polynomials in `p`; `p_L` is their quotient, expanded as a power series. Raw mode
/// expands the weighted sum of per-subset conditional rates. Without post-selection
/// both agree.
pub fn extract_coefficients(
    estimates: &[SubsetEstimate],
    census: &Census,
    max_order: usize,
    mode: BoundMode,
) -> Result<Vec<Coefficient>, Error> {
    if estimates.is_empty() {
        return Err(Error::EmptyEstimates);
    }
    for w in enumerate_subsets(census, max_order) {
        if !estimates.iter().any(|e| e.w == w) {
            return Err(Error::CoverageGap(w.to_string()));
        }
    }
    let n = census.total();
    let used: Vec<&SubsetEstimate> = estimates
        .iter()
        .filter(|e| e.w.total() <= max_order)
        .collect();
    // weight[i][l]: coefficient of p^l in the probability of subset i.
    let weight: Vec<Vec<f64>> = used
        .iter()
        .map(|e| {
            let base = binomial(census.n1, e.w.w1)
                * binomial(census.n2, e.w.w2)
                * binomial(census.n3, e.w.w3);
            (0..=max_order)
                .map(|l| match l.checked_sub(e.w.total()) {
                    Some(r) => {
                        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                        sign * base * binomial(n - e.w.total(), r)
                    }
                    None => 0.0,
                })
                .collect()
        })
        .collect();
    let series = |rate: &dyn Fn(&SubsetEstimate) -> f64| -> Vec<f64> {
        (0..=max_order)
            .map(|l| used.iter().zip(&weight).map(|(e, m)| m[l] * rate(e)).sum())
            .collect()
    };
    let (rate, stderr): (RateFn, RateFn) = match mode {
        BoundMode::Global => (SubsetEstimate::error_rate, SubsetEstimate::error_stderr),
        BoundMode::Raw => (
            SubsetEstimate::conditional_rate,
            SubsetEstimate::conditional_stderr,
        ),
    };
    let errors = series(&rate);
    let accepted = match mode {
        BoundMode::Global => series(&|e| e.acceptance_rate()),
        BoundMode::Raw => (0..=max_order)
            .map(|l| if l == 0 { 1.0 } else { 0.0 })
            .collect(),
    };
    if accepted[0] <= 0.0 {
        return Err(Error::NoAcceptedRuns);
    }
    let mut inverse = vec![0.0; max_order + 1];
    inverse[0] = 1.0 / accepted[0];
    for l in 1..=max_order {
        let s: f64 = (1..=l).map(|k| accepted[k] * inverse[l - k]).sum();
        inverse[l] = -s / accepted[0];
    }
    let mut out = Vec::with_capacity(max_order + 1);
    for l in 0..=max_order {
        let value = (0..=l).map(|k| errors[k] * inverse[l - k]).sum();
        let var: f64 = used
            .iter()
            .zip(&weight)
            .map(|(e, m)| {
                let grad: f64 = (0..=l).map(|k| m[k] * inverse[l - k]).sum();
                (grad * stderr(e)).powi(2)
            })
            .sum();
        out.push(Coefficient {
            order: l,
            value,
            stderr: var.sqrt(),
        });
    }
    Ok(out)
}
