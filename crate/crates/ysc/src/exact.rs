//! Brute-force maximum-likelihood decoding by exhaustive enumeration of the
//! stabilizer group. Exponential in the stabilizer count, so capped at
//! d <= 3; serves as the ground-truth oracle for the tensor-network decoder.

use thiserror::Error;

use crate::code::{CodeError, LogicalClass, SurfaceCode, Syndrome};
use crate::noise::PauliChannel;
use crate::pauli::PauliOperator;

/// Largest distance the exhaustive decoder accepts (4096 group elements on
/// 13 qubits at d = 3).
pub const MAX_EXACT_DISTANCE: usize = 3;

/// Classes whose log-values agree to within this are treated as exact ties
/// and resolved by the fixed order I < X < Y < Z. Lattice symmetries produce
/// algebraically equal coset pairs; the slack keeps the decision identical
/// across summation orders and decoders.
const TIE_LOG_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("distance {0} exceeds the exhaustive-enumeration cutoff {MAX_EXACT_DISTANCE}; use the MPS decoder")]
    DistanceTooLarge(usize),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("all four coset probabilities are zero or nonfinite")]
    DecoderFailure,
}

/// Unnormalized coset probabilities of the four logical classes, stored in
/// log space (minus infinity encodes an exactly zero coset).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosetProbabilities {
    log_values: [f64; 4],
}

impl CosetProbabilities {
    pub fn from_log_values(log_values: [f64; 4]) -> Self {
        CosetProbabilities { log_values }
    }

    pub fn from_linear_values(values: [f64; 4]) -> Self {
        CosetProbabilities {
            log_values: values.map(f64::ln),
        }
    }

    /// Natural log of the coset probability; minus infinity for zero.
    pub fn log(&self, class: LogicalClass) -> f64 {
        self.log_values[class.index()]
    }

    pub fn log_values(&self) -> [f64; 4] {
        self.log_values
    }

    /// Linear-scale value; underflows to zero for very negative logs.
    pub fn linear(&self, class: LogicalClass) -> f64 {
        self.log_values[class.index()].exp()
    }

    /// Total probability of the syndrome: the sum of the four cosets.
    pub fn total(&self) -> f64 {
        self.log_values.iter().map(|l| l.exp()).sum()
    }

    /// Most likely class, ties broken by the order I < X < Y < Z; `None`
    /// when every class is zero or any value is NaN.
    pub fn argmax(&self) -> Option<LogicalClass> {
        if self.log_values.iter().any(|v| v.is_nan()) {
            return None;
        }
        let max = self.log_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return None;
        }
        LogicalClass::ALL
            .into_iter()
            .find(|c| max - self.log_values[c.index()] <= TIE_LOG_TOL)
    }
}

/// Exact coset probabilities for the syndrome `s`, summing the pattern
/// probability of `rep * l_L * g` over every stabilizer group element `g`.
///
/// Enumeration walks generator subsets in Gray-code order; terms are summed
/// in sorted order with Kahan compensation so that algebraically equal
/// cosets produce bit-identical values.
pub fn coset_probabilities_exact(
    code: &SurfaceCode,
    ch: &PauliChannel,
    s: &Syndrome,
) -> Result<CosetProbabilities, ExactError> {
    let rep = check_and_representative(code, s)?;
    Ok(coset_probabilities_from_representative(code, ch, &rep))
}

/// Same enumeration accumulated in log space (log-sum-exp) instead of
/// linear space; used to cross-check the accumulation route.
pub fn coset_probabilities_exact_log(
    code: &SurfaceCode,
    ch: &PauliChannel,
    s: &Syndrome,
) -> Result<CosetProbabilities, ExactError> {
    let rep = check_and_representative(code, s)?;
    Ok(enumerate(code, ch, &rep, Accumulation::Log))
}

/// Exact coset probabilities relative to an explicit coset representative.
pub fn coset_probabilities_from_representative(
    code: &SurfaceCode,
    ch: &PauliChannel,
    rep: &PauliOperator,
) -> CosetProbabilities {
    enumerate(code, ch, rep, Accumulation::Linear)
}

/// Maximum-likelihood class for the syndrome, with the coset probabilities.
pub fn decode_exact(
    code: &SurfaceCode,
    ch: &PauliChannel,
    s: &Syndrome,
) -> Result<(LogicalClass, CosetProbabilities), ExactError> {
    let probs = coset_probabilities_exact(code, ch, s)?;
    let class = probs.argmax().ok_or(ExactError::DecoderFailure)?;
    Ok((class, probs))
}

fn check_and_representative(
    code: &SurfaceCode,
    s: &Syndrome,
) -> Result<PauliOperator, ExactError> {
    if code.d() > MAX_EXACT_DISTANCE {
        return Err(ExactError::DistanceTooLarge(code.d()));
    }
    Ok(code.pure_error(s)?)
}

enum Accumulation {
    Linear,
    Log,
}

fn enumerate(
    code: &SurfaceCode,
    ch: &PauliChannel,
    rep: &PauliOperator,
    mode: Accumulation,
) -> CosetProbabilities {
    // Probability table indexed by the symplectic code x + 2z.
    let table = [ch.p_i, ch.p_x, ch.p_z, ch.p_y];
    let gens = code.stabilizers();
    let count = 1usize << gens.len();

    let mut log_values = [0.0f64; 4];
    for class in LogicalClass::ALL {
        let mut current = rep.multiply(&code.class_representative(class)).unwrap();
        let mut terms = Vec::with_capacity(count);
        terms.push(pattern_probability(&current, &table));
        for k in 1..count {
            // Gray code: element k differs from k-1 by one generator.
            let flip = k.trailing_zeros() as usize;
            current.multiply_assign_unchecked(&gens[flip]);
            terms.push(pattern_probability(&current, &table));
        }
        log_values[class.index()] = match mode {
            Accumulation::Linear => sorted_kahan_sum(&mut terms).ln(),
            Accumulation::Log => {
                let mut logs: Vec<f64> =
                    terms.into_iter().filter(|&t| t > 0.0).map(f64::ln).collect();
                log_sum_exp(&mut logs)
            }
        };
    }
    CosetProbabilities::from_log_values(log_values)
}

#[inline]
fn pattern_probability(op: &PauliOperator, table: &[f64; 4]) -> f64 {
    let mut prod = 1.0;
    for q in 0..op.len() {
        let p = op.get(q);
        let (x, z) = p.bits();
        prod *= table[usize::from(x) | usize::from(z) << 1];
    }
    prod
}

/// Kahan-compensated sum over ascending-sorted terms; deterministic for a
/// given multiset of values.
fn sorted_kahan_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &t in terms.iter() {
        let y = t - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    sum
}

fn log_sum_exp(logs: &mut [f64]) -> f64 {
    if logs.is_empty() {
        return f64::NEG_INFINITY;
    }
    logs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max = *logs.last().unwrap();
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &l in logs.iter() {
        let y = (l - max).exp() - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    max + sum.ln()
}
