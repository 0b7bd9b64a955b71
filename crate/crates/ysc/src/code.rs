//! Construction of the distance-d surface code tailored to biased Z noise:
//! X-type vertex stabilizers and Y-type plaquette stabilizers on a square
//! lattice, with a standard (Z-plaquette) variant used to test the Y/Z
//! exchange symmetry.
//!
//! # Lattice convention
//!
//! Qubits sit at grid points (i, j) with 0 <= i, j <= 2d-2 and i, j of equal
//! parity; n = d^2 + (d-1)^2. Stabilizer centers occupy the remaining grid
//! points: vertices at (even i, odd j) act with X on all in-range neighbors,
//! plaquettes at (odd i, even j) act with Y (or Z in the standard variant).
//! Bulk stabilizers have weight 4, boundary stabilizers weight 3. Logical
//! operators run along the lattice edges: a Y-string (Z-string in the
//! standard variant) across the top row and an X-string down the left
//! column. Qubits and stabilizers are indexed row-major over the grid.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bits::BitVec;
use crate::pauli::{PauliOperator, SinglePauli};

#[derive(Debug, Error, PartialEq)]
pub enum CodeError {
    #[error("code distance must be at least 2, got {0}")]
    DistanceTooSmall(usize),
    #[error("operator acts on {0} qubits but the code has {1}")]
    QubitCountMismatch(usize, usize),
    #[error("syndrome has {0} bits but the code has {1} stabilizers")]
    SyndromeLengthMismatch(usize, usize),
    #[error("operator has a nonzero syndrome; logical class is defined only on the stabilizer centralizer")]
    NonzeroSyndrome,
    #[error("cannot parse syndrome from {0:?} (expected a 0/1 string)")]
    SyndromeParse(String),
}

/// Which plaquette type the code uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeVariant {
    /// Y-type plaquettes (tailored for biased Z noise).
    Tailored,
    /// Z-type plaquettes (the usual CSS surface code).
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilizerKind {
    Vertex,
    Plaquette,
}

/// What occupies a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Qubit(usize),
    Stabilizer(usize),
}

/// Logical error class of a syndrome-free operator.
///
/// The ordering I < X < Y < Z is the fixed tie-break order used by both
/// decoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum LogicalClass {
    I,
    X,
    Y,
    Z,
}

impl LogicalClass {
    pub const ALL: [LogicalClass; 4] = [
        LogicalClass::I,
        LogicalClass::X,
        LogicalClass::Y,
        LogicalClass::Z,
    ];

    pub fn index(self) -> usize {
        match self {
            LogicalClass::I => 0,
            LogicalClass::X => 1,
            LogicalClass::Y => 2,
            LogicalClass::Z => 3,
        }
    }
}

impl fmt::Display for LogicalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Stabilizer measurement outcome: bit i is set iff the error anticommutes
/// with stabilizer i.
#[derive(Clone, PartialEq, Eq)]
pub struct Syndrome {
    bits: BitVec,
}

impl Syndrome {
    pub fn zeros(len: usize) -> Self {
        Syndrome {
            bits: BitVec::zeros(len),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits.get(i)
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.bits.set(i, v)
    }

    pub fn is_zero(&self) -> bool {
        self.bits.is_zero()
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn xor_assign(&mut self, other: &Syndrome) {
        self.bits.xor_assign(&other.bits)
    }
}

impl fmt::Display for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Syndrome {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Syndrome::zeros(s.chars().count());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => out.set(i, true),
                _ => return Err(CodeError::SyndromeParse(s.to_string())),
            }
        }
        Ok(out)
    }
}

/// A distance-d surface code instance with precomputed stabilizers,
/// destabilizers and logical operators. Immutable after construction.
#[derive(Debug)]
pub struct SurfaceCode {
    d: usize,
    n: usize,
    variant: CodeVariant,
    span: usize,
    cells: Vec<Cell>,
    qubit_coords: Vec<(usize, usize)>,
    stab_coords: Vec<(usize, usize)>,
    stabilizers: Vec<PauliOperator>,
    kinds: Vec<StabilizerKind>,
    destabilizers: Vec<PauliOperator>,
    logical_x: PauliOperator,
    logical_y: PauliOperator,
}

/// Builds the tailored (Y-plaquette) code of distance `d`.
pub fn build_code(d: usize) -> Result<SurfaceCode, CodeError> {
    SurfaceCode::build(d, CodeVariant::Tailored)
}

impl SurfaceCode {
    pub fn build(d: usize, variant: CodeVariant) -> Result<Self, CodeError> {
        if d < 2 {
            return Err(CodeError::DistanceTooSmall(d));
        }
        let span = 2 * d - 1;
        let plaquette_pauli = match variant {
            CodeVariant::Tailored => SinglePauli::Y,
            CodeVariant::Standard => SinglePauli::Z,
        };

        let mut cells = vec![Cell::Qubit(usize::MAX); span * span];
        let mut qubit_coords = Vec::new();
        let mut stab_coords = Vec::new();
        let mut kinds = Vec::new();
        for i in 0..span {
            for j in 0..span {
                if (i + j) % 2 == 0 {
                    cells[i * span + j] = Cell::Qubit(qubit_coords.len());
                    qubit_coords.push((i, j));
                } else {
                    cells[i * span + j] = Cell::Stabilizer(stab_coords.len());
                    stab_coords.push((i, j));
                    kinds.push(if i % 2 == 0 {
                        StabilizerKind::Vertex
                    } else {
                        StabilizerKind::Plaquette
                    });
                }
            }
        }
        let n = qubit_coords.len();
        debug_assert_eq!(n, d * d + (d - 1) * (d - 1));
        debug_assert_eq!(stab_coords.len(), n - 1);

        let qubit_index = |i: usize, j: usize| match cells[i * span + j] {
            Cell::Qubit(q) => q,
            Cell::Stabilizer(_) => unreachable!("parity mismatch"),
        };

        let mut stabilizers = Vec::with_capacity(n - 1);
        for (s, &(i, j)) in stab_coords.iter().enumerate() {
            let pauli = match kinds[s] {
                StabilizerKind::Vertex => SinglePauli::X,
                StabilizerKind::Plaquette => plaquette_pauli,
            };
            let mut op = PauliOperator::identity(n);
            for (ni, nj) in neighbors(i, j, span) {
                op.set(qubit_index(ni, nj), pauli);
            }
            stabilizers.push(op);
        }

        // Destabilizers: for each stabilizer a fixed chain anticommuting with
        // it alone. Vertex syndromes terminate on the left edge with a chain
        // of the plaquette-transparent Pauli (Y here, Z in the standard
        // variant); plaquette syndromes terminate on the top edge with an
        // X chain.
        let mut destabilizers = Vec::with_capacity(n - 1);
        for (s, &(i, j)) in stab_coords.iter().enumerate() {
            let mut op = PauliOperator::identity(n);
            match kinds[s] {
                StabilizerKind::Vertex => {
                    for jj in (0..j).step_by(2) {
                        op.set(qubit_index(i, jj), plaquette_pauli);
                    }
                }
                StabilizerKind::Plaquette => {
                    for ii in (0..i).step_by(2) {
                        op.set(qubit_index(ii, j), SinglePauli::X);
                    }
                }
            }
            destabilizers.push(op);
        }

        let mut logical_x = PauliOperator::identity(n);
        for i in (0..span).step_by(2) {
            logical_x.set(qubit_index(i, 0), SinglePauli::X);
        }
        let mut logical_y = PauliOperator::identity(n);
        for j in (0..span).step_by(2) {
            logical_y.set(qubit_index(0, j), plaquette_pauli);
        }

        Ok(SurfaceCode {
            d,
            n,
            variant,
            span,
            cells,
            qubit_coords,
            stab_coords,
            stabilizers,
            kinds,
            destabilizers,
            logical_x,
            logical_y,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> CodeVariant {
        self.variant
    }

    /// Grid side length 2d - 1.
    pub fn span(&self) -> usize {
        self.span
    }

    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.cells[i * self.span + j]
    }

    pub fn num_stabilizers(&self) -> usize {
        self.stabilizers.len()
    }

    pub fn stabilizer(&self, s: usize) -> &PauliOperator {
        &self.stabilizers[s]
    }

    pub fn stabilizers(&self) -> &[PauliOperator] {
        &self.stabilizers
    }

    pub fn stabilizer_kind(&self, s: usize) -> StabilizerKind {
        self.kinds[s]
    }

    pub fn stabilizer_coord(&self, s: usize) -> (usize, usize) {
        self.stab_coords[s]
    }

    pub fn qubit_coord(&self, q: usize) -> (usize, usize) {
        self.qubit_coords[q]
    }

    pub fn destabilizer(&self, s: usize) -> &PauliOperator {
        &self.destabilizers[s]
    }

    /// The X-string logical operator down the left column.
    pub fn logical_x(&self) -> &PauliOperator {
        &self.logical_x
    }

    /// The top-row logical operator: a Y-string, or a Z-string in the
    /// standard variant.
    pub fn logical_y(&self) -> &PauliOperator {
        &self.logical_y
    }

    /// Symplectic bits of stabilizer `s` restricted to any qubit in its
    /// support.
    pub fn stabilizer_pauli_bits(&self, s: usize) -> (bool, bool) {
        match self.kinds[s] {
            StabilizerKind::Vertex => (true, false),
            StabilizerKind::Plaquette => self.plaquette_pauli_bits(),
        }
    }

    /// Symplectic bits of the plaquette Pauli: Y for the tailored code,
    /// Z for the standard variant.
    pub fn plaquette_pauli_bits(&self) -> (bool, bool) {
        match self.variant {
            CodeVariant::Tailored => (true, true),
            CodeVariant::Standard => (false, true),
        }
    }

    /// Representative of a logical class: I, logical_x, logical_x*logical_y
    /// or logical_y for I, X, Y, Z respectively.
    pub fn class_representative(&self, class: LogicalClass) -> PauliOperator {
        match class {
            LogicalClass::I => PauliOperator::identity(self.n),
            LogicalClass::X => self.logical_x.clone(),
            LogicalClass::Y => self.logical_x.multiply(&self.logical_y).unwrap(),
            LogicalClass::Z => self.logical_y.clone(),
        }
    }

    /// Measures all stabilizers against `error`.
    pub fn syndrome(&self, error: &PauliOperator) -> Result<Syndrome, CodeError> {
        if error.len() != self.n {
            return Err(CodeError::QubitCountMismatch(error.len(), self.n));
        }
        let mut s = Syndrome::zeros(self.stabilizers.len());
        for (i, stab) in self.stabilizers.iter().enumerate() {
            if stab.anticommutes_unchecked(error) {
                s.set(i, true);
            }
        }
        Ok(s)
    }

    /// Deterministic operator with syndrome `s`, linear in `s`: the product
    /// of the destabilizers of the set bits.
    pub fn pure_error(&self, s: &Syndrome) -> Result<PauliOperator, CodeError> {
        if s.len() != self.stabilizers.len() {
            return Err(CodeError::SyndromeLengthMismatch(
                s.len(),
                self.stabilizers.len(),
            ));
        }
        let mut op = PauliOperator::identity(self.n);
        for i in 0..s.len() {
            if s.get(i) {
                op.multiply_assign_unchecked(&self.destabilizers[i]);
            }
        }
        Ok(op)
    }

    /// Logical class of a syndrome-free operator, read off from its
    /// anticommutation with the two logical strings: the top-row string
    /// detects logical X, the left-column string detects logical Z.
    pub fn logical_class(&self, residual: &PauliOperator) -> Result<LogicalClass, CodeError> {
        if residual.len() != self.n {
            return Err(CodeError::QubitCountMismatch(residual.len(), self.n));
        }
        if !self.syndrome(residual)?.is_zero() {
            return Err(CodeError::NonzeroSyndrome);
        }
        let anti_y = self.logical_y.anticommutes_unchecked(residual);
        let anti_x = self.logical_x.anticommutes_unchecked(residual);
        Ok(match (anti_y, anti_x) {
            (false, false) => LogicalClass::I,
            (true, false) => LogicalClass::X,
            (false, true) => LogicalClass::Z,
            (true, true) => LogicalClass::Y,
        })
    }
}

fn neighbors(i: usize, j: usize, span: usize) -> impl Iterator<Item = (usize, usize)> {
    [
        (i.wrapping_sub(1), j),
        (i + 1, j),
        (i, j.wrapping_sub(1)),
        (i, j + 1),
    ]
    .into_iter()
    .filter(move |&(a, b)| a < span && b < span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// All 2^(n-1) stabilizer group elements (small d only).
    fn stabilizer_group(code: &SurfaceCode) -> Vec<PauliOperator> {
        let gens = code.stabilizers();
        let mut out = vec![PauliOperator::identity(code.n())];
        for g in gens {
            let mut next = Vec::with_capacity(out.len() * 2);
            for e in &out {
                next.push(e.clone());
                next.push(e.multiply(g).unwrap());
            }
            out = next;
        }
        out
    }

    fn random_syndrome<R: Rng>(len: usize, rng: &mut R) -> Syndrome {
        let mut s = Syndrome::zeros(len);
        for i in 0..len {
            s.set(i, rng.gen());
        }
        s
    }

    #[test]
    fn distance_three_counts() {
        let code = build_code(3).unwrap();
        assert_eq!(code.n(), 13);
        assert_eq!(code.num_stabilizers(), 12);
        assert_eq!(code.logical_x().weight(), 3);
        assert_eq!(code.logical_y().weight(), 3);
    }

    #[test]
    fn distance_two_counts() {
        let code = build_code(2).unwrap();
        assert_eq!(code.n(), 5);
        assert_eq!(code.num_stabilizers(), 4);
    }

    #[test]
    fn rejects_small_distance() {
        assert_eq!(build_code(1).unwrap_err(), CodeError::DistanceTooSmall(1));
        assert_eq!(build_code(0).unwrap_err(), CodeError::DistanceTooSmall(0));
    }

    #[test]
    fn code_invariants_small_distances() {
        for d in 2..=5 {
            for variant in [CodeVariant::Tailored, CodeVariant::Standard] {
                let code = SurfaceCode::build(d, variant).unwrap();
                assert_eq!(code.n(), d * d + (d - 1) * (d - 1));
                assert_eq!(code.num_stabilizers(), code.n() - 1);

                // All stabilizers pairwise commute and have weight 3 or 4.
                for a in 0..code.num_stabilizers() {
                    let sa = code.stabilizer(a);
                    let w = sa.weight();
                    assert!(w == 3 || w == 4, "stabilizer weight {w}");
                    for b in (a + 1)..code.num_stabilizers() {
                        assert!(
                            sa.commutes(code.stabilizer(b)).unwrap(),
                            "stabilizers {a} and {b} anticommute (d={d})"
                        );
                    }
                }

                // Logical operators commute with every stabilizer,
                // anticommute with each other, and have weight d.
                for s in code.stabilizers() {
                    assert!(code.logical_x().commutes(s).unwrap());
                    assert!(code.logical_y().commutes(s).unwrap());
                }
                assert!(!code.logical_x().commutes(code.logical_y()).unwrap());
                assert_eq!(code.logical_x().weight(), d);
                assert_eq!(code.logical_y().weight(), d);

                // Destabilizer defining property: t_s anticommutes with
                // stabilizer s and commutes with all others.
                for s in 0..code.num_stabilizers() {
                    let t = code.destabilizer(s);
                    for o in 0..code.num_stabilizers() {
                        assert_eq!(
                            code.stabilizer(o).commutes(t).unwrap(),
                            o != s,
                            "destabilizer {s} vs stabilizer {o} (d={d})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn logicals_outside_stabilizer_group_small_d() {
        for d in [2, 3] {
            let code = build_code(d).unwrap();
            let group = stabilizer_group(&code);
            for class in [LogicalClass::X, LogicalClass::Y, LogicalClass::Z] {
                let rep = code.class_representative(class);
                assert!(
                    group.iter().all(|g| *g != rep),
                    "class {class} representative is a stabilizer product (d={d})"
                );
            }
        }
    }

    #[test]
    fn minimum_coset_weight_equals_distance() {
        // The code distance is the minimum weight over all nonidentity
        // logical cosets; the X and Z strings realize it, while the Y class
        // (a product of both strings) sits strictly higher.
        for d in [2, 3] {
            let code = build_code(d).unwrap();
            let group = stabilizer_group(&code);
            let mut overall = usize::MAX;
            for class in [LogicalClass::X, LogicalClass::Y, LogicalClass::Z] {
                let rep = code.class_representative(class);
                let min_w = group
                    .iter()
                    .map(|g| rep.multiply(g).unwrap().weight())
                    .min()
                    .unwrap();
                assert!(min_w >= d, "class {class} at d={d} has weight {min_w}");
                overall = overall.min(min_w);
            }
            assert_eq!(overall, d);
        }
    }

    #[test]
    fn syndrome_of_identity_and_stabilizers_is_zero() {
        let code = build_code(3).unwrap();
        let id = PauliOperator::identity(code.n());
        assert!(code.syndrome(&id).unwrap().is_zero());
        for s in code.stabilizers() {
            assert!(code.syndrome(s).unwrap().is_zero());
        }
    }

    #[test]
    fn center_z_error_lights_four_bits_tailored_two_standard() {
        let d = 3;
        let tailored = build_code(d).unwrap();
        let standard = SurfaceCode::build(d, CodeVariant::Standard).unwrap();
        // Center of the 5x5 grid is the qubit at (2, 2).
        let center = (0..tailored.n())
            .find(|&q| tailored.qubit_coord(q) == (2, 2))
            .unwrap();
        let mut err = PauliOperator::identity(tailored.n());
        err.set(center, SinglePauli::Z);
        let st = tailored.syndrome(&err).unwrap();
        assert_eq!(st.weight(), 4);
        // Two vertex and two plaquette neighbors flagged.
        let mut by_kind = [0usize; 2];
        for i in 0..st.len() {
            if st.get(i) {
                by_kind[match tailored.stabilizer_kind(i) {
                    StabilizerKind::Vertex => 0,
                    StabilizerKind::Plaquette => 1,
                }] += 1;
            }
        }
        assert_eq!(by_kind, [2, 2]);
        assert_eq!(standard.syndrome(&err).unwrap().weight(), 2);
    }

    #[test]
    fn single_z_errors_more_informative_than_standard() {
        for d in [3, 5] {
            let tailored = build_code(d).unwrap();
            let standard = SurfaceCode::build(d, CodeVariant::Standard).unwrap();
            let mut total_tailored = 0;
            let mut total_standard = 0;
            for q in 0..tailored.n() {
                let mut err = PauliOperator::identity(tailored.n());
                err.set(q, SinglePauli::Z);
                let w = tailored.syndrome(&err).unwrap().weight();
                assert!((2..=4).contains(&w), "qubit {q} lights {w} bits");
                total_tailored += w;
                total_standard += standard.syndrome(&err).unwrap().weight();
            }
            assert!(total_tailored > total_standard);
        }
    }

    #[test]
    fn pure_error_of_zero_syndrome_is_identity() {
        let code = build_code(3).unwrap();
        let s = Syndrome::zeros(code.num_stabilizers());
        assert!(code.pure_error(&s).unwrap().is_identity());
    }

    #[test]
    fn pure_error_round_trip_random_syndromes() {
        let code = build_code(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let s = random_syndrome(code.num_stabilizers(), &mut rng);
            let f = code.pure_error(&s).unwrap();
            assert_eq!(code.syndrome(&f).unwrap(), s);
        }
    }

    #[test]
    fn pure_error_linear_in_syndrome() {
        let code = build_code(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let a = random_syndrome(code.num_stabilizers(), &mut rng);
            let b = random_syndrome(code.num_stabilizers(), &mut rng);
            let mut ab = a.clone();
            ab.xor_assign(&b);
            let lhs = code.pure_error(&ab).unwrap();
            let rhs = code
                .pure_error(&a)
                .unwrap()
                .multiply(&code.pure_error(&b).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn logical_class_examples() {
        let code = build_code(3).unwrap();
        let id = PauliOperator::identity(code.n());
        assert_eq!(code.logical_class(&id).unwrap(), LogicalClass::I);
        assert_eq!(
            code.logical_class(code.logical_x()).unwrap(),
            LogicalClass::X
        );
        assert_eq!(
            code.logical_class(code.logical_y()).unwrap(),
            LogicalClass::Z
        );
        let lxy = code.class_representative(LogicalClass::Y);
        assert_eq!(code.logical_class(&lxy).unwrap(), LogicalClass::Y);
        // Multiplying by a stabilizer preserves the class.
        let moved = code.logical_x().multiply(code.stabilizer(5)).unwrap();
        assert_eq!(code.logical_class(&moved).unwrap(), LogicalClass::X);
    }

    #[test]
    fn logical_class_rejects_nonzero_syndrome() {
        let code = build_code(3).unwrap();
        let mut err = PauliOperator::identity(code.n());
        err.set(0, SinglePauli::Z);
        assert_eq!(
            code.logical_class(&err).unwrap_err(),
            CodeError::NonzeroSyndrome
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // logical_class is constant on stabilizer cosets.
        #[test]
        fn class_constant_on_cosets(mask in 0u32..(1 << 12), class_i in 0usize..4) {
            let code = build_code(3).unwrap();
            let mut op = code.class_representative(LogicalClass::ALL[class_i]);
            for (s, stab) in code.stabilizers().iter().enumerate() {
                if mask >> s & 1 == 1 {
                    op = op.multiply(stab).unwrap();
                }
            }
            prop_assert_eq!(code.logical_class(&op).unwrap(), LogicalClass::ALL[class_i]);
        }
    }
}
