use rand::Rng;

use super::pauli::{phase_counts, words_for, Pauli, PauliString};
use super::StabilizerError;

/// Aaronson–Gottesman tableau with destabilizers.
///
/// Rows `0..n` are destabilizers, rows `n..2n` stabilizers. Each row is a
/// packed x/z bit string plus a sign bit; destabilizer signs carry no meaning.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Tableau {
    n: usize,
    words: usize,
    xs: Vec<u64>,
    zs: Vec<u64>,
    signs: Vec<bool>,
}

/// Outcome of a projective Pauli measurement. `outcome == true` means the
/// observable was found in its `-1` eigenspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureResult {
    pub outcome: bool,
    pub random: bool,
}

#[inline]
fn mask(q: usize) -> (usize, u64) {
    (q / 64, 1u64 << (q % 64))
}

impl Tableau {
    /// |0…0⟩: destabilizers `+X_i`, stabilizers `+Z_i`.
    pub fn new(n: usize) -> Self {
        let words = words_for(n);
        let mut t = Self {
            n,
            words,
            xs: vec![0; 2 * n * words],
            zs: vec![0; 2 * n * words],
            signs: vec![false; 2 * n],
        };
        for q in 0..n {
            let (w, m) = mask(q);
            t.xs[q * words + w] |= m;
            t.zs[(n + q) * words + w] |= m;
        }
        t
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn xbit(&self, row: usize, q: usize) -> bool {
        let (w, m) = mask(q);
        self.xs[row * self.words + w] & m != 0
    }

    #[inline]
    fn zbit(&self, row: usize, q: usize) -> bool {
        let (w, m) = mask(q);
        self.zs[row * self.words + w] & m != 0
    }

    pub fn h(&mut self, q: usize) {
        let (w, m) = mask(q);
        for r in 0..2 * self.n {
            let i = r * self.words + w;
            let (x, z) = (self.xs[i] & m, self.zs[i] & m);
            if x != 0 && z != 0 {
                self.signs[r] ^= true;
            }
            self.xs[i] = (self.xs[i] & !m) | z;
            self.zs[i] = (self.zs[i] & !m) | x;
        }
    }

    pub fn s(&mut self, q: usize) {
        let (w, m) = mask(q);
        for r in 0..2 * self.n {
            let i = r * self.words + w;
            let x = self.xs[i] & m;
            if x != 0 && self.zs[i] & m != 0 {
                self.signs[r] ^= true;
            }
            self.zs[i] ^= x;
        }
    }

    /// Conjugation by a Pauli only flips signs of anticommuting rows.
    pub fn pauli(&mut self, q: usize, p: Pauli) {
        let (w, m) = mask(q);
        for r in 0..2 * self.n {
            let i = r * self.words + w;
            let (x, z) = (self.xs[i] & m != 0, self.zs[i] & m != 0);
            let flip = match p {
                Pauli::I => false,
                Pauli::X => z,
                Pauli::Z => x,
                Pauli::Y => x ^ z,
            };
            self.signs[r] ^= flip;
        }
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        let (wc, mc) = mask(control);
        let (wt, mt) = mask(target);
        for r in 0..2 * self.n {
            let base = r * self.words;
            let xc = self.xs[base + wc] & mc != 0;
            let zc = self.zs[base + wc] & mc != 0;
            let xt = self.xs[base + wt] & mt != 0;
            let zt = self.zs[base + wt] & mt != 0;
            if xc && zt && !(xt ^ zc) {
                self.signs[r] ^= true;
            }
            if xc {
                self.xs[base + wt] ^= mt;
            }
            if zt {
                self.zs[base + wc] ^= mc;
            }
        }
    }

    /// `row[target] := row[source] * row[target]`.
    fn row_mul(&mut self, target: usize, source: usize) {
        let (so, to) = (source * self.words, target * self.words);
        let (mut plus, mut minus) = (0u32, 0u32);
        for k in 0..self.words {
            let (x1, z1) = (self.xs[so + k], self.zs[so + k]);
            let (x2, z2) = (self.xs[to + k], self.zs[to + k]);
            let (p, m) = phase_counts(x1, z1, x2, z2);
            plus += p;
            minus += m;
            self.xs[to + k] = x1 ^ x2;
            self.zs[to + k] = z1 ^ z2;
        }
        let e = (plus + 256 * self.words as u32 - minus
            + 2 * (self.signs[source] as u32 + self.signs[target] as u32))
            % 4;
        self.signs[target] = e >= 2;
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        let w = self.words;
        self.xs.copy_within(src * w..(src + 1) * w, dst * w);
        self.zs.copy_within(src * w..(src + 1) * w, dst * w);
        self.signs[dst] = self.signs[src];
    }

    fn set_row(&mut self, row: usize, p: &PauliString) {
        let w = self.words;
        self.xs[row * w..(row + 1) * w].copy_from_slice(&p.xs);
        self.zs[row * w..(row + 1) * w].copy_from_slice(&p.zs);
        self.signs[row] = p.is_negative();
    }

    fn row_commutes(&self, row: usize, p: &PauliString) -> bool {
        let base = row * self.words;
        let mut parity = 0u32;
        for k in 0..self.words {
            parity ^= ((self.xs[base + k] & p.zs[k]) ^ (self.zs[base + k] & p.xs[k])).count_ones();
        }
        parity & 1 == 0
    }

    fn row_pauli(&self, row: usize) -> PauliString {
        let w = self.words;
        PauliString::from_words(
            self.n,
            self.xs[row * w..(row + 1) * w].to_vec(),
            self.zs[row * w..(row + 1) * w].to_vec(),
            self.signs[row],
        )
    }

    pub fn stabilizer(&self, i: usize) -> PauliString {
        self.row_pauli(self.n + i)
    }

    pub fn destabilizer(&self, i: usize) -> PauliString {
        self.row_pauli(i)
    }

    pub fn stabilizers(&self) -> Vec<PauliString> {
        (0..self.n).map(|i| self.stabilizer(i)).collect()
    }

    fn check_len(&self, obs: &PauliString) -> Result<(), StabilizerError> {
        if obs.len() != self.n {
            return Err(StabilizerError::LengthMismatch {
                expected: self.n,
                got: obs.len(),
            });
        }
        Ok(())
    }

    /// Sign (`true` = negative) of the stabilizer-group element proportional
    /// to `obs`, assuming `obs` commutes with every stabilizer.
    fn group_sign(&self, obs: &PauliString) -> bool {
        let w = self.words;
        let mut sx = vec![0u64; w];
        let mut sz = vec![0u64; w];
        let mut e = 0u32;
        for i in 0..self.n {
            if self.row_commutes(i, obs) {
                continue;
            }
            let row = (self.n + i) * w;
            let (mut plus, mut minus) = (0, 0);
            for k in 0..w {
                let (p, m) = phase_counts(self.xs[row + k], self.zs[row + k], sx[k], sz[k]);
                plus += p;
                minus += m;
                sx[k] ^= self.xs[row + k];
                sz[k] ^= self.zs[row + k];
            }
            e = (e + plus + 256 * w as u32 - minus + 2 * self.signs[self.n + i] as u32) % 4;
        }
        debug_assert!(sx == obs.xs && sz == obs.zs, "observable not in stabilizer group");
        e >= 2
    }

    /// Expectation of a Hermitian Pauli observable: ±1 if ±obs is a
    /// stabilizer, 0 otherwise. Never mutates the state.
    pub fn peek(&self, obs: &PauliString) -> Result<i8, StabilizerError> {
        self.check_len(obs)?;
        if (self.n..2 * self.n).any(|r| !self.row_commutes(r, obs)) {
            return Ok(0);
        }
        let negative = self.group_sign(obs) ^ obs.is_negative();
        Ok(if negative { -1 } else { 1 })
    }

    /// Projective measurement of `obs`. A random outcome is drawn from `rng`
    /// unless `forced` is given; forcing an impossible outcome is an error.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        obs: &PauliString,
        forced: Option<bool>,
        rng: &mut R,
    ) -> Result<MeasureResult, StabilizerError> {
        self.check_len(obs)?;
        let n = self.n;
        match (n..2 * n).find(|&r| !self.row_commutes(r, obs)) {
            Some(p) => {
                for r in 0..2 * n {
                    if r != p && !self.row_commutes(r, obs) {
                        self.row_mul(r, p);
                    }
                }
                self.copy_row(p - n, p);
                let outcome = forced.unwrap_or_else(|| rng.random::<bool>());
                self.set_row(p, obs);
                self.signs[p] = obs.is_negative() ^ outcome;
                Ok(MeasureResult {
                    outcome,
                    random: true,
                })
            }
            None => {
                let outcome = self.group_sign(obs) ^ obs.is_negative();
                if forced.is_some_and(|f| f != outcome) {
                    return Err(StabilizerError::ImpossibleOutcome);
                }
                Ok(MeasureResult {
                    outcome,
                    random: false,
                })
            }
        }
    }

    /// Removes qubit `q`, which must be in a Z eigenstate, and returns `true`
    /// if it was |1⟩. The remaining qubits keep their relative order.
    pub fn remove_z_qubit(&mut self, q: usize) -> Result<bool, StabilizerError> {
        let n = self.n;
        if q >= n {
            return Err(StabilizerError::IndexOutOfRange { index: q, n });
        }
        if (n..2 * n).any(|r| self.xbit(r, q)) {
            return Err(StabilizerError::NotProduct(q));
        }
        // Z_q is the product of the stabilizers whose destabilizers have x_q set.
        let support: Vec<usize> = (0..n).filter(|&i| self.xbit(i, q)).collect();
        let Some((&p, rest)) = support.split_first() else {
            return Err(StabilizerError::NotProduct(q));
        };
        for &i in rest {
            self.row_mul(n + p, n + i);
            self.row_mul(i, p);
        }
        for k in n..2 * n {
            if k != n + p && self.zbit(k, q) {
                self.row_mul(k, n + p);
                self.row_mul(p, k - n);
            }
        }
        debug_assert_eq!(self.row_pauli(n + p).weight(), 1);
        let (w, m) = mask(q);
        for i in 0..n {
            if i != p {
                self.zs[i * self.words + w] &= !m;
            }
        }
        let outcome = self.signs[n + p];

        let mut out = Tableau::new(n - 1);
        let mut dst = 0;
        for r in 0..2 * n {
            if r == p || r == n + p {
                continue;
            }
            let (xs, zs) = {
                let w = self.words;
                (
                    drop_bit(&self.xs[r * w..(r + 1) * w], q, n),
                    drop_bit(&self.zs[r * w..(r + 1) * w], q, n),
                )
            };
            let ow = out.words;
            out.xs[dst * ow..(dst + 1) * ow].copy_from_slice(&xs[..ow]);
            out.zs[dst * ow..(dst + 1) * ow].copy_from_slice(&zs[..ow]);
            out.signs[dst] = self.signs[r];
            dst += 1;
        }
        *self = out;
        Ok(outcome)
    }

    /// Tensor product `self ⊗ other`; `other`'s qubits follow `self`'s.
    pub fn tensor(&self, other: &Tableau) -> Tableau {
        let (a, b) = (self.n, other.n);
        let n = a + b;
        let mut out = Tableau::new(n);
        out.xs.iter_mut().for_each(|v| *v = 0);
        out.zs.iter_mut().for_each(|v| *v = 0);
        let place = |out: &mut Tableau, dst: usize, src: &Tableau, row: usize, offset: usize| {
            for q in 0..src.n {
                let (w, m) = mask(offset + q);
                if src.xbit(row, q) {
                    out.xs[dst * out.words + w] |= m;
                }
                if src.zbit(row, q) {
                    out.zs[dst * out.words + w] |= m;
                }
            }
            out.signs[dst] = src.signs[row];
        };
        for i in 0..a {
            place(&mut out, i, self, i, 0);
            place(&mut out, n + i, self, a + i, 0);
        }
        for i in 0..b {
            place(&mut out, a + i, other, i, a);
            place(&mut out, n + a + i, other, b + i, a);
        }
        out
    }

    /// Checks the symplectic structure: stabilizers commute pairwise,
    /// destabilizers commute pairwise, and destabilizer i anticommutes with
    /// stabilizer j exactly when i == j.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.n;
        let rows: Vec<PauliString> = (0..2 * n).map(|r| self.row_pauli(r)).collect();
        for r in 0..2 * n {
            for s in r + 1..2 * n {
                let should_anticommute = r < n && s == r + n;
                if rows[r].commutes_with(&rows[s]) == should_anticommute {
                    return Err(format!(
                        "rows {r} ({}) and {s} ({}) have wrong commutation",
                        rows[r], rows[s]
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Returns the `n - 1` bit string obtained by deleting bit `q` from `bits`.
fn drop_bit(bits: &[u64], q: usize, n: usize) -> Vec<u64> {
    let mut out = vec![0u64; words_for(n)];
    let mut dst = 0;
    for src in 0..n {
        if src == q {
            continue;
        }
        if bits[src / 64] >> (src % 64) & 1 == 1 {
            out[dst / 64] |= 1 << (dst % 64);
        }
        dst += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn bell_state_tableau() {
        let mut t = Tableau::new(2);
        t.h(0);
        t.cnot(0, 1);
        assert_eq!(t.peek(&ps("XX")).unwrap(), 1);
        assert_eq!(t.peek(&ps("ZZ")).unwrap(), 1);
        assert_eq!(t.peek(&ps("YY")).unwrap(), -1);
        assert_eq!(t.peek(&ps("ZI")).unwrap(), 0);
        t.validate().unwrap();
    }

    #[test]
    fn s_gate_maps_x_to_y() {
        let mut t = Tableau::new(1);
        t.h(0);
        t.s(0);
        assert_eq!(t.peek(&ps("Y")).unwrap(), 1);
        t.s(0);
        assert_eq!(t.peek(&ps("X")).unwrap(), -1);
    }

    #[test]
    fn measurement_collapses_partner() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut t = Tableau::new(2);
            t.h(0);
            t.cnot(0, 1);
            let m = t.measure(&ps("ZI"), None, &mut rng).unwrap();
            assert!(m.random);
            let again = t.measure(&ps("IZ"), None, &mut rng).unwrap();
            assert!(!again.random);
            assert_eq!(again.outcome, m.outcome);
            t.validate().unwrap();
        }
    }

    #[test]
    fn forcing_an_impossible_outcome_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = Tableau::new(1);
        assert_eq!(
            t.measure(&ps("Z"), Some(true), &mut rng),
            Err(StabilizerError::ImpossibleOutcome)
        );
    }

    #[test]
    fn removing_a_measured_qubit_keeps_the_rest() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // GHZ on 3 qubits, measure qubit 1 and remove it
        let mut t = Tableau::new(3);
        t.h(0);
        t.cnot(0, 1);
        t.cnot(1, 2);
        let m = t.measure(&ps("IZI"), None, &mut rng).unwrap();
        let bit = t.remove_z_qubit(1).unwrap();
        assert_eq!(bit, m.outcome);
        assert_eq!(t.num_qubits(), 2);
        t.validate().unwrap();
        let zz = if bit { "-ZI" } else { "ZI" };
        assert_eq!(t.peek(&ps(zz)).unwrap(), 1);
        assert_eq!(t.peek(&ps("ZZ")).unwrap(), 1);
    }

    #[test]
    fn removal_requires_product_qubit() {
        let mut t = Tableau::new(2);
        t.h(0);
        t.cnot(0, 1);
        assert_eq!(t.remove_z_qubit(0), Err(StabilizerError::NotProduct(0)));
    }

    #[test]
    fn tensor_places_blocks() {
        let mut a = Tableau::new(2);
        a.h(0);
        a.cnot(0, 1);
        let mut b = Tableau::new(1);
        b.pauli(0, Pauli::X);
        let t = a.tensor(&b);
        t.validate().unwrap();
        assert_eq!(t.peek(&ps("XXI")).unwrap(), 1);
        assert_eq!(t.peek(&ps("IIZ")).unwrap(), -1);
        assert_eq!(t.peek(&ps("ZZZ")).unwrap(), -1);
    }

    #[test]
    fn multiword_tableau() {
        let n = 70;
        let mut t = Tableau::new(n);
        t.h(0);
        for q in 1..n {
            t.cnot(q - 1, q);
        }
        t.validate().unwrap();
        let mut all_x = PauliString::identity(n);
        for q in 0..n {
            all_x.set(q, Pauli::X);
        }
        assert_eq!(t.peek(&all_x).unwrap(), 1);
        let zz = PauliString::from_sparse(n, [(3, Pauli::Z), (68, Pauli::Z)]);
        assert_eq!(t.peek(&zz).unwrap(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = t.measure(&PauliString::single(n, 69, Pauli::Z), None, &mut rng).unwrap();
        let bit = t.remove_z_qubit(69).unwrap();
        assert_eq!(bit, m.outcome);
        t.validate().unwrap();
        let z0 = PauliString::single(n - 1, 0, Pauli::Z);
        assert_eq!(t.peek(&z0).unwrap(), if bit { -1 } else { 1 });
    }
}
