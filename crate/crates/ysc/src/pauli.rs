//! Symplectic (binary) representation of n-qubit Pauli operators modulo
//! global phase.
//!
//! Qubit `q` of an operator carries I, X, Y or Z according to the bit pair
//! `(x[q], z[q])` = (0,0), (1,0), (1,1), (0,1). Dropping the phase makes
//! multiplication a pair of XORs and commutation a symplectic inner product,
//! which is all that maximum-likelihood decoding needs: it compares
//! probabilities of Pauli patterns, never phases.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bits::BitVec;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("operator length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid Pauli character {0:?} (expected one of I, X, Y, Z)")]
    InvalidCharacter(char),
}

/// A single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SinglePauli {
    I,
    X,
    Y,
    Z,
}

impl SinglePauli {
    #[inline]
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => SinglePauli::I,
            (true, false) => SinglePauli::X,
            (true, true) => SinglePauli::Y,
            (false, true) => SinglePauli::Z,
        }
    }

    #[inline]
    pub fn bits(self) -> (bool, bool) {
        match self {
            SinglePauli::I => (false, false),
            SinglePauli::X => (true, false),
            SinglePauli::Y => (true, true),
            SinglePauli::Z => (false, true),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            SinglePauli::I => 'I',
            SinglePauli::X => 'X',
            SinglePauli::Y => 'Y',
            SinglePauli::Z => 'Z',
        }
    }
}

/// An n-qubit Pauli operator modulo global phase, stored as paired X/Z bit
/// vectors.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    x: BitVec,
    z: BitVec,
}

impl PauliOperator {
    /// The identity on `n` qubits.
    pub fn identity(n: usize) -> Self {
        PauliOperator {
            x: BitVec::zeros(n),
            z: BitVec::zeros(n),
        }
    }

    /// Builds an operator from (qubit, Pauli) pairs on `n` qubits; later
    /// entries for the same qubit multiply in.
    pub fn from_sparse(n: usize, terms: &[(usize, SinglePauli)]) -> Self {
        let mut op = PauliOperator::identity(n);
        for &(q, p) in terms {
            let (x, z) = p.bits();
            if x {
                op.x.flip(q);
            }
            if z {
                op.z.flip(q);
            }
        }
        op
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    #[inline]
    pub fn get(&self, q: usize) -> SinglePauli {
        SinglePauli::from_bits(self.x.get(q), self.z.get(q))
    }

    pub fn set(&mut self, q: usize, p: SinglePauli) {
        let (x, z) = p.bits();
        self.x.set(q, x);
        self.z.set(q, z);
    }

    /// Group product with the global phase discarded: componentwise XOR of
    /// the X and Z bit vectors.
    pub fn multiply(&self, other: &PauliOperator) -> Result<PauliOperator, PauliError> {
        if self.len() != other.len() {
            return Err(PauliError::LengthMismatch(self.len(), other.len()));
        }
        let mut out = self.clone();
        out.multiply_assign_unchecked(other);
        Ok(out)
    }

    /// In-place product; lengths must already agree.
    pub(crate) fn multiply_assign_unchecked(&mut self, other: &PauliOperator) {
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    /// True iff the symplectic inner product
    /// `sum_q (a.x[q] b.z[q] + a.z[q] b.x[q])` is even.
    pub fn commutes(&self, other: &PauliOperator) -> Result<bool, PauliError> {
        if self.len() != other.len() {
            return Err(PauliError::LengthMismatch(self.len(), other.len()));
        }
        Ok(!self.anticommutes_unchecked(other))
    }

    #[inline]
    pub(crate) fn anticommutes_unchecked(&self, other: &PauliOperator) -> bool {
        self.x.and_parity(&other.z) ^ self.z.and_parity(&other.x)
    }

    /// Number of qubits with a non-identity Pauli.
    pub fn weight(&self) -> usize {
        self.x.or_count(&self.z)
    }

    /// Relabels Y and Z on every qubit, leaving I and X fixed.
    ///
    /// In symplectic form this is the linear map (x, z) -> (x XOR z, z),
    /// which exchanges (1,1) and (0,1).
    pub fn swap_yz(&self) -> PauliOperator {
        let mut out = self.clone();
        out.x.xor_assign(&self.z);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = SinglePauli> + '_ {
        (0..self.len()).map(move |q| self.get(q))
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses a string over {I, X, Y, Z} (case-insensitive), the exact inverse
/// of `Display`.
impl FromStr for PauliOperator {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut op = PauliOperator::identity(s.chars().count());
        for (q, c) in s.chars().enumerate() {
            let p = match c.to_ascii_uppercase() {
                'I' => SinglePauli::I,
                'X' => SinglePauli::X,
                'Y' => SinglePauli::Y,
                'Z' => SinglePauli::Z,
                other => return Err(PauliError::InvalidCharacter(other)),
            };
            op.set(q, p);
        }
        Ok(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn op(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn multiply_single_qubit() {
        // XZ = -iY with the phase dropped.
        assert_eq!(op("X").multiply(&op("Z")).unwrap(), op("Y"));
        assert_eq!(op("X").multiply(&op("Y")).unwrap(), op("Z"));
        assert_eq!(op("Y").multiply(&op("Z")).unwrap(), op("X"));
    }

    #[test]
    fn multiply_is_involution() {
        for s in ["IXYZ", "YYYY", "IIII", "ZXIY"] {
            let e = op(s);
            assert!(e.multiply(&e).unwrap().is_identity());
        }
    }

    #[test]
    fn multiply_disjoint_support() {
        assert_eq!(op("XI").multiply(&op("IY")).unwrap(), op("XY"));
    }

    #[test]
    fn multiply_length_mismatch() {
        assert_eq!(
            op("XI").multiply(&op("X")),
            Err(PauliError::LengthMismatch(2, 1))
        );
        assert!(op("XI").commutes(&op("X")).is_err());
    }

    #[test]
    fn single_qubit_commutation() {
        assert!(!op("X").commutes(&op("Z")).unwrap());
        assert!(op("Y").commutes(&op("Y")).unwrap());
        assert!(!op("Y").commutes(&op("Z")).unwrap());
        assert!(op("I").commutes(&op("Z")).unwrap());
    }

    #[test]
    fn commutation_symmetric_on_all_two_qubit_pairs() {
        let singles = ["I", "X", "Y", "Z"];
        for a0 in singles {
            for a1 in singles {
                for b0 in singles {
                    for b1 in singles {
                        let a = op(&format!("{a0}{a1}"));
                        let b = op(&format!("{b0}{b1}"));
                        assert_eq!(a.commutes(&b).unwrap(), b.commutes(&a).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn weight_counts_support() {
        assert_eq!(op("IIIII").weight(), 0);
        assert_eq!(op("IYIIZ").weight(), 2);
        assert_eq!(op("ZZZZZ").weight(), 5);
    }

    #[test]
    fn swap_yz_relabels() {
        assert_eq!(op("IXYZ").swap_yz(), op("IXZY"));
        // Relabeling is an automorphism: swap(ab) == swap(a) swap(b).
        let a = op("XYZI");
        let b = op("YYIZ");
        assert_eq!(
            a.multiply(&b).unwrap().swap_yz(),
            a.swap_yz().multiply(&b.swap_yz()).unwrap()
        );
    }

    #[test]
    fn parse_display_round_trip() {
        let s = "IIYZI";
        assert_eq!(op(s).to_string(), s);
        assert!("IXQZ".parse::<PauliOperator>().is_err());
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
        proptest::collection::vec(0u8..4, n).prop_map(move |labels| {
            let mut op = PauliOperator::identity(n);
            for (q, l) in labels.iter().enumerate() {
                op.set(
                    q,
                    match l {
                        0 => SinglePauli::I,
                        1 => SinglePauli::X,
                        2 => SinglePauli::Y,
                        _ => SinglePauli::Z,
                    },
                );
            }
            op
        })
    }

    proptest! {
        // The symplectic form is bilinear: the anticommutation parity of ab
        // with c is the XOR of the parities of a and b with c.
        #[test]
        fn symplectic_form_bilinear(
            a in arb_pauli(17), b in arb_pauli(17), c in arb_pauli(17)
        ) {
            let ab = a.multiply(&b).unwrap();
            let anti = |p: &PauliOperator, q: &PauliOperator| !p.commutes(q).unwrap();
            prop_assert_eq!(anti(&ab, &c), anti(&a, &c) ^ anti(&b, &c));
        }

        #[test]
        fn multiply_commutative_and_associative(
            a in arb_pauli(9), b in arb_pauli(9), c in arb_pauli(9)
        ) {
            prop_assert_eq!(a.multiply(&b).unwrap(), b.multiply(&a).unwrap());
            prop_assert_eq!(
                a.multiply(&b).unwrap().multiply(&c).unwrap(),
                a.multiply(&b.multiply(&c).unwrap()).unwrap()
            );
            prop_assert_eq!(a.multiply(&PauliOperator::identity(9)).unwrap(), a);
        }

        #[test]
        fn display_parse_round_trip(a in arb_pauli(13)) {
            prop_assert_eq!(a.to_string().parse::<PauliOperator>().unwrap(), a);
        }
    }
}
