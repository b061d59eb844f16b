use std::fmt;
use std::str::FromStr;

use super::StabilizerError;

/// Single-qubit Pauli operator. `Y = iXZ` throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn has_x(self) -> bool {
        self.bits().0
    }

    pub fn has_z(self) -> bool {
        self.bits().1
    }

    /// Product up to phase.
    pub fn compose(self, other: Pauli) -> Pauli {
        let (x1, z1) = self.bits();
        let (x2, z2) = other.bits();
        Pauli::from_bits(x1 ^ x2, z1 ^ z2)
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

/// Counts of qubits contributing `+i` and `-i` to the word-wise product
/// `left * right` (Aaronson–Gottesman phase function, 64 qubits at a time).
#[inline]
pub(crate) fn phase_counts(x1: u64, z1: u64, x2: u64, z2: u64) -> (u32, u32) {
    let y1 = x1 & z1;
    let xo = x1 & !z1;
    let zo = !x1 & z1;
    let plus = (y1 & z2 & !x2) | (xo & x2 & z2) | (zo & x2 & !z2);
    let minus = (y1 & x2 & !z2) | (xo & !x2 & z2) | (zo & x2 & z2);
    (plus.count_ones(), minus.count_ones())
}

/// Exponent of `i` (mod 4) picked up by the qubit-wise product `left * right`
/// of the Hermitian Pauli strings given as packed x/z words.
pub(crate) fn product_phase(lx: &[u64], lz: &[u64], rx: &[u64], rz: &[u64]) -> u32 {
    let mut plus = 0u32;
    let mut minus = 0u32;
    for w in 0..lx.len() {
        let (p, m) = phase_counts(lx[w], lz[w], rx[w], rz[w]);
        plus += p;
        minus += m;
    }
    (plus + 4 * lx.len() as u32 * 64 - minus) % 4
}

/// A Hermitian Pauli string `±P_1 ⊗ … ⊗ P_n` stored as packed x/z bit rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    pub(crate) xs: Vec<u64>,
    pub(crate) zs: Vec<u64>,
    negative: bool,
}

/// Result of multiplying two Pauli strings: `factor * pauli` with
/// `factor ∈ {1, i}` (the ±1 part lives in `pauli`'s sign).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliProduct {
    pub pauli: PauliString,
    pub imaginary: bool,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        Self {
            n,
            xs: vec![0; w],
            zs: vec![0; w],
            negative: false,
        }
    }

    pub fn single(n: usize, qubit: usize, pauli: Pauli) -> Self {
        let mut p = Self::identity(n);
        p.set(qubit, pauli);
        p
    }

    /// Builds a string from `(qubit, pauli)` pairs; unlisted qubits are identity.
    pub fn from_sparse(n: usize, terms: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        let mut p = Self::identity(n);
        for (q, op) in terms {
            p.set(q, op);
        }
        p
    }

    pub(crate) fn from_words(n: usize, xs: Vec<u64>, zs: Vec<u64>, negative: bool) -> Self {
        Self { n, xs, zs, negative }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// `+1` or `-1`.
    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn set_negative(&mut self, negative: bool) {
        self.negative = negative;
    }

    pub fn negated(mut self) -> Self {
        self.negative = !self.negative;
        self
    }

    pub fn get(&self, q: usize) -> Pauli {
        let (w, b) = (q / 64, q % 64);
        Pauli::from_bits((self.xs[w] >> b) & 1 == 1, (self.zs[w] >> b) & 1 == 1)
    }

    pub fn set(&mut self, q: usize, pauli: Pauli) {
        assert!(q < self.n, "qubit {q} out of range for length {}", self.n);
        let (w, b) = (q / 64, q % 64);
        let (x, z) = pauli.bits();
        self.xs[w] = (self.xs[w] & !(1 << b)) | ((x as u64) << b);
        self.zs[w] = (self.zs[w] & !(1 << b)) | ((z as u64) << b);
    }

    pub fn weight(&self) -> usize {
        self.xs
            .iter()
            .zip(&self.zs)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        debug_assert_eq!(self.n, other.n);
        let mut parity = 0u32;
        for w in 0..self.xs.len() {
            parity ^= ((self.xs[w] & other.zs[w]) ^ (self.zs[w] & other.xs[w])).count_ones();
        }
        parity & 1 == 0
    }

    /// Group product `self * rhs` with full phase tracking.
    pub fn mul(&self, rhs: &PauliString) -> PauliProduct {
        assert_eq!(self.n, rhs.n, "pauli length mismatch");
        let mut e = product_phase(&self.xs, &self.zs, &rhs.xs, &rhs.zs);
        e += 2 * (self.negative as u32 + rhs.negative as u32);
        e %= 4;
        let xs = self.xs.iter().zip(&rhs.xs).map(|(a, b)| a ^ b).collect();
        let zs = self.zs.iter().zip(&rhs.zs).map(|(a, b)| a ^ b).collect();
        PauliProduct {
            pauli: PauliString::from_words(self.n, xs, zs, e >= 2),
            imaginary: e % 2 == 1,
        }
    }

    /// Concatenation `self ⊗ rhs`.
    pub fn tensor(&self, rhs: &PauliString) -> PauliString {
        let mut out = PauliString::identity(self.n + rhs.n);
        for q in 0..self.n {
            out.set(q, self.get(q));
        }
        for q in 0..rhs.n {
            out.set(self.n + q, rhs.get(q));
        }
        out.negative = self.negative ^ rhs.negative;
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = Pauli> + '_ {
        (0..self.n).map(|q| self.get(q))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.negative { '-' } else { '+' })?;
        for p in self.iter() {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PauliString {
    type Err = StabilizerError;

    /// Parses strings such as `"+XXI"`, `"-ZZ"` or `"YY"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let mut p = PauliString::identity(body.len());
        for (q, c) in body.chars().enumerate() {
            let op = match c {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => return Err(StabilizerError::Parse(other)),
            };
            p.set(q, op);
        }
        p.negative = negative;
        Ok(p)
    }
}
