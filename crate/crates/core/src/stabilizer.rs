//! Phase-exact stabilizer states.
//!
//! A state is stored as its stabilizer generators together with a witness:
//! one computational-basis string `pivot` in the support and the exact
//! amplitude `⟨pivot|ψ⟩`. Every other amplitude follows from the group, so
//! the witness fixes the global phase and the norm. Unnormalized states
//! (results of projections) simply carry a smaller witness amplitude.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::dense::{basis_index, C};
use crate::exact::{ExactScalar, RingSum};
use crate::gates::{conjugate_local, GateKind};
use crate::pauli::{mask, PauliOperator, MAX_QUBITS};
use crate::StabError;

/// Default qubit limit for [`StabilizerState::to_dense`].
pub const DENSE_LIMIT: usize = 14;

/// Generators kept inline up to this many qubits.
const INLINE: usize = 8;
type Gens = SmallVec<[PauliOperator; INLINE]>;

/// Row echelon form of the generators' X parts.
#[derive(Clone, Debug)]
struct XEchelon {
    /// (reduced x mask, generator combination, pivot bit)
    rows: SmallVec<[(u64, u64, u32); INLINE]>,
}

impl XEchelon {
    fn build(gens: &[PauliOperator]) -> Self {
        let mut rows: SmallVec<[(u64, u64, u32); INLINE]> = SmallVec::new();
        for (i, g) in gens.iter().enumerate() {
            let mut v = g.x_bits();
            let mut combo = 1u64 << i;
            for &(rx, rc, b) in &rows {
                if (v >> b) & 1 == 1 {
                    v ^= rx;
                    combo ^= rc;
                }
            }
            if v != 0 {
                rows.push((v, combo, v.trailing_zeros()));
            }
        }
        XEchelon { rows }
    }

    /// Generator combination whose X part equals `target`.
    fn solve(&self, mut target: u64) -> Option<u64> {
        let mut combo = 0u64;
        for &(rx, rc, b) in &self.rows {
            if (target >> b) & 1 == 1 {
                target ^= rx;
                combo ^= rc;
            }
        }
        (target == 0).then_some(combo)
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Clone, Debug)]
pub struct StabilizerState {
    n: usize,
    gens: Gens,
    pivot: u64,
    amp: ExactScalar,
    echelon: OnceLock<XEchelon>,
}

impl StabilizerState {
    fn from_parts(n: usize, gens: Gens, pivot: u64, amp: ExactScalar) -> Self {
        StabilizerState {
            n,
            gens,
            pivot,
            amp,
            echelon: OnceLock::new(),
        }
    }

    /// `|bits⟩` with bit `q` of `bits` giving qubit `q`.
    pub fn basis(n: usize, bits: u64) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        let bits = bits & mask(n);
        let gens = (0..n)
            .map(|q| {
                let z = PauliOperator::z_on(n, q);
                if (bits >> q) & 1 == 1 {
                    z.negate()
                } else {
                    z
                }
            })
            .collect();
        Self::from_parts(n, gens, bits, ExactScalar::ONE)
    }

    /// `|0…0⟩`.
    pub fn zero_state(n: usize) -> Self {
        Self::basis(n, 0)
    }

    /// Parse a bitstring such as `"101"` (character `q` is qubit `q`).
    pub fn basis_state(bits: &str) -> Result<Self, StabError> {
        let bits = parse_bitstring(bits)?;
        Ok(Self::basis(bits.1, bits.0))
    }

    /// The stabilizer state fixed by `gens` whose amplitude at `pivot` is
    /// real and positive, normalized. Fails if the generators are not a
    /// valid independent commuting set or `pivot` is outside the support.
    pub fn from_generators(gens: &[PauliOperator], pivot: u64) -> Result<Self, StabError> {
        let n = gens.first().map_or(0, |g| g.num_qubits());
        if gens.len() != n || gens.iter().any(|g| g.num_qubits() != n) {
            return Err(StabError::InvalidState(format!(
                "need exactly {n} generators on {n} qubits"
            )));
        }
        Self::from_parts(n, Gens::from_slice(gens), pivot, ExactScalar::ONE).check_invariants()?;
        let mut s = Self::basis(n, pivot);
        for g in gens {
            s = s.project_pauli(g, 1)?;
            if s.is_zero() {
                return Err(StabError::InvalidState(
                    "pivot string is outside the support of the generators".into(),
                ));
            }
        }
        let amp = s.normalized().amplitude(pivot).magnitude();
        Ok(Self::from_parts(n, Gens::from_slice(gens), pivot & mask(n), amp))
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.gens
    }

    pub fn pivot(&self) -> u64 {
        self.pivot
    }

    pub fn pivot_amplitude(&self) -> ExactScalar {
        self.amp
    }

    pub fn is_zero(&self) -> bool {
        self.amp.is_zero()
    }

    fn echelon(&self) -> &XEchelon {
        self.echelon.get_or_init(|| XEchelon::build(&self.gens))
    }

    /// Dimension of the span of the generators' X parts; the support has
    /// `2^rank` strings.
    pub fn support_rank(&self) -> usize {
        self.echelon().rank()
    }

    /// The norm as an exact non-negative scalar (`|scalar|` of the state).
    pub fn norm(&self) -> ExactScalar {
        if self.is_zero() {
            return ExactScalar::ZERO;
        }
        self.amp.magnitude().scale_sqrt2(-(self.support_rank() as i32))
    }

    /// Exact prefactor relative to the unit ket with a positive amplitude at
    /// the pivot: its magnitude is the norm and its phase is the witness phase.
    pub fn scalar(&self) -> ExactScalar {
        if self.is_zero() {
            return ExactScalar::ZERO;
        }
        ExactScalar::new(self.amp.phase() as i32, 0) * self.norm()
    }

    /// Multiply the state by an exact scalar.
    pub fn scaled(&self, s: ExactScalar) -> Self {
        let mut out = self.clone();
        out.amp = self.amp * s;
        out
    }

    /// Same ray, unit norm, same phase at the pivot.
    pub fn normalized(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scaled(self.norm().inv())
    }

    /// Exact amplitude `⟨y|ψ⟩`.
    pub fn amplitude(&self, y: u64) -> ExactScalar {
        if self.is_zero() {
            return ExactScalar::ZERO;
        }
        let y = y & mask(self.n);
        let Some(combo) = self.echelon().solve(y ^ self.pivot) else {
            return ExactScalar::ZERO;
        };
        let g = self.group_element(combo);
        let (a, w) = g.apply_to_basis(self.pivot);
        debug_assert_eq!(w, y);
        a * self.amp
    }

    fn group_element(&self, combo: u64) -> PauliOperator {
        let mut g = PauliOperator::identity(self.n);
        let mut c = combo;
        while c != 0 {
            let i = c.trailing_zeros() as usize;
            g = g * self.gens[i];
            c &= c - 1;
        }
        g
    }

    /// Apply a Clifford gate. Exact including global phase.
    pub fn apply_clifford(&self, gate: GateKind, qubits: &[usize]) -> Result<Self, StabError> {
        if !gate.is_clifford() {
            return Err(StabError::NotClifford(gate.name().to_string()));
        }
        check_qubits(self.n, gate.arity(), qubits)?;
        if self.is_zero() {
            return Ok(self.clone());
        }
        let gens = self
            .gens
            .iter()
            .map(|g| {
                let local = g.gather(qubits).with_phase(0);
                g.replace_on(qubits, &conjugate_local(gate, &local))
            })
            .collect();

        let k = qubits.len();
        let d = 1usize << k;
        let matrix = gate.exact_matrix().expect("Clifford gates have exact matrices");
        let with_local = |base: u64, local: usize| -> u64 {
            let mut y = base;
            for (j, &q) in qubits.iter().enumerate() {
                let bit = ((local >> (k - 1 - j)) & 1) as u64;
                y = (y & !(1u64 << q)) | (bit << q);
            }
            y
        };
        let old: Vec<ExactScalar> = (0..d).map(|l| self.amplitude(with_local(self.pivot, l))).collect();
        let current = qubits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &q)| acc | ((((self.pivot >> q) & 1) as usize) << (k - 1 - j)));
        for r in (0..d).map(|i| (i + current) % d) {
            let mut sum = RingSum::zero();
            for (l, &a) in old.iter().enumerate() {
                sum.add_exact(matrix[r * d + l] * a);
            }
            let amp = sum.to_exact().expect("Clifford amplitudes stay in the exact ring");
            if !amp.is_zero() {
                return Ok(Self::from_parts(self.n, gens, with_local(self.pivot, r), amp));
            }
        }
        unreachable!("a unitary image of a nonzero state has a nonzero amplitude on the gate block")
    }

    /// Apply a word of Clifford gates in order.
    pub fn apply_word(&self, word: &[(GateKind, Vec<usize>)]) -> Result<Self, StabError> {
        let mut s = self.clone();
        for (g, qs) in word {
            s = s.apply_clifford(*g, qs)?;
        }
        Ok(s)
    }

    /// Apply `G†`. Exact including global phase.
    pub fn apply_clifford_inverse(&self, gate: GateKind, qubits: &[usize]) -> Result<Self, StabError> {
        let (word, phase) = inverse_word(gate)?;
        check_qubits(self.n, gate.arity(), qubits)?;
        let mut s = self.clone();
        for (g, local) in word {
            let qs: Vec<usize> = local.iter().map(|&j| qubits[j]).collect();
            s = s.apply_clifford(g, &qs)?;
        }
        Ok(s.scaled(phase))
    }

    /// Relabel qubits: qubit `j` of the result is qubit `perm[j]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let gens = self.gens.iter().map(|g| g.gather(perm)).collect();
        let mut pivot = 0u64;
        for (j, &q) in perm.iter().enumerate() {
            pivot |= ((self.pivot >> q) & 1) << j;
        }
        Self::from_parts(self.n, gens, pivot, self.amp)
    }

    /// `((I + sign·P)/2)|ψ⟩`.
    pub fn project_pauli(&self, p: &PauliOperator, sign: i8) -> Result<Self, StabError> {
        if p.num_qubits() != self.n {
            return Err(StabError::DimensionMismatch(self.n, p.num_qubits()));
        }
        if !p.is_hermitian() {
            return Err(StabError::NonHermitian(p.to_string()));
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        let q = if sign < 0 { p.negate() } else { *p };
        if q.is_identity() {
            return Ok(if q.phase() == 0 { self.clone() } else { self.annihilated() });
        }
        let mut anti = 0u64;
        for (i, g) in self.gens.iter().enumerate() {
            if !g.commutes(&q) {
                anti |= 1 << i;
            }
        }
        if anti == 0 {
            // ±q is in the group: eigenvalue λ = ⟨pivot|q|ψ⟩ / ⟨pivot|ψ⟩
            let src = self.pivot ^ q.x_bits();
            let (a, _) = q.apply_to_basis(src);
            let lambda = a * self.amplitude(src) / self.amp;
            return Ok(if lambda == ExactScalar::ONE {
                self.clone()
            } else {
                self.annihilated()
            });
        }
        let j = anti.trailing_zeros() as usize;
        let gj = self.gens[j];
        // ψ = g_j ψ fixes the amplitude one g_j-step away from the pivot
        let (step, _) = gj.apply_to_basis(self.pivot);
        let known = |y: u64| -> Option<ExactScalar> {
            if y == self.pivot {
                Some(self.amp)
            } else if y == self.pivot ^ gj.x_bits() {
                Some(step * self.amp)
            } else {
                None
            }
        };
        let amp_at = |y: u64| known(y).unwrap_or_else(|| self.amplitude(y));
        let projected_amp = |y: u64| -> ExactScalar {
            let src = y ^ q.x_bits();
            let (a, _) = q.apply_to_basis(src);
            let mut sum = RingSum::zero();
            sum.add_exact(amp_at(y));
            sum.add_exact(a * amp_at(src));
            sum.to_exact()
                .expect("projected stabilizer amplitudes stay in the exact ring")
                .scale_sqrt2(2)
        };
        let mut pivot = self.pivot;
        let mut amp = projected_amp(pivot);
        if amp.is_zero() {
            pivot = self.pivot ^ gj.x_bits();
            amp = projected_amp(pivot);
        }
        debug_assert!(!amp.is_zero());

        let mut gens = self.gens.clone();
        let mut rest = anti & (anti - 1);
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            gens[i] = gens[i] * gj;
            rest &= rest - 1;
        }
        gens[j] = q;
        Ok(Self::from_parts(self.n, gens, pivot, amp))
    }

    fn annihilated(&self) -> Self {
        Self::from_parts(self.n, self.gens.clone(), self.pivot, ExactScalar::ZERO)
    }

    /// `(|target⟩⟨target| ⊗ I)|ψ⟩` with `target` living on `qubits`.
    pub fn project_subsystem(&self, target: &StabilizerState, qubits: &[usize]) -> Result<Self, StabError> {
        check_qubits(self.n, target.n, qubits)?;
        if target.is_zero() {
            return Ok(self.annihilated());
        }
        let mut s = self.clone();
        for g in &target.gens {
            s = s.project_pauli(&g.scatter(qubits, self.n), 1)?;
            if s.is_zero() {
                break;
            }
        }
        // the projector scales with |target|^2 when target is unnormalized
        Ok(s.scaled(target.norm().norm_sqr()))
    }

    /// Exact `⟨bra|ket⟩`, both scalars included.
    pub fn inner_product(bra: &StabilizerState, ket: &StabilizerState) -> Result<ExactScalar, StabError> {
        if bra.n != ket.n {
            return Err(StabError::DimensionMismatch(bra.n, ket.n));
        }
        if bra.is_zero() || ket.is_zero() {
            return Ok(ExactScalar::ZERO);
        }
        let mut k = ket.clone();
        for g in &bra.gens {
            k = k.project_pauli(g, 1)?;
            if k.is_zero() {
                return Ok(ExactScalar::ZERO);
            }
        }
        // k = |b⟩⟨b|ket⟩ with b the unit ket of bra; bra = s_b|b⟩
        let y = bra.pivot;
        let nb = bra.norm();
        Ok(k.amplitude(y) / bra.amp * nb * nb)
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &StabilizerState) -> Result<ExactScalar, StabError> {
        Self::inner_product(self, other)
    }

    /// Tensor product with `self` on the low qubit indices.
    pub fn tensor(&self, other: &StabilizerState) -> Self {
        let n = self.n + other.n;
        let a: Vec<usize> = (0..self.n).collect();
        let b: Vec<usize> = (self.n..n).collect();
        Self::embed_parts(&[(self, &a), (other, &b)], n)
    }

    /// Tensor product of states placed on disjoint qubit lists; qubits not
    /// covered are left in `|0⟩`.
    pub fn embed_parts(parts: &[(&StabilizerState, &[usize])], n: usize) -> Self {
        assert!(n <= MAX_QUBITS);
        let mut covered = 0u64;
        let mut gens = Gens::new();
        let mut pivot = 0u64;
        let mut amp = ExactScalar::ONE;
        for (s, qs) in parts {
            assert_eq!(s.n, qs.len(), "part width mismatch");
            for &q in qs.iter() {
                assert!(q < n && (covered >> q) & 1 == 0, "bad placement");
                covered |= 1 << q;
            }
            gens.extend(s.gens.iter().map(|g| g.scatter(qs, n)));
            for (j, &q) in qs.iter().enumerate() {
                pivot |= ((s.pivot >> j) & 1) << q;
            }
            amp = amp * s.amp;
        }
        for q in 0..n {
            if (covered >> q) & 1 == 0 {
                gens.push(PauliOperator::z_on(n, q));
            }
        }
        Self::from_parts(n, gens, pivot, amp)
    }

    /// Dense big-endian amplitudes (including the scalar).
    pub fn to_dense(&self) -> Result<Vec<Complex64>, StabError> {
        self.to_dense_with_limit(DENSE_LIMIT)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> Result<Vec<Complex64>, StabError> {
        if self.n > limit {
            return Err(StabError::TooLarge {
                n: self.n,
                limit,
            });
        }
        let mut v = vec![C::new(0.0, 0.0); 1 << self.n];
        if self.is_zero() {
            return Ok(v);
        }
        let basis: Vec<u64> = self.echelon().rows.iter().map(|r| r.0).collect();
        for sel in 0u64..(1 << basis.len()) {
            let mut y = self.pivot;
            for (i, &b) in basis.iter().enumerate() {
                if (sel >> i) & 1 == 1 {
                    y ^= b;
                }
            }
            v[basis_index(y, self.n)] = self.amplitude(y).to_complex();
        }
        Ok(v)
    }

    /// Generators commute, are Hermitian, independent and exclude `-I`.
    pub fn check_invariants(&self) -> Result<(), StabError> {
        let bad = |m: &str| Err(StabError::InvalidState(m.to_string()));
        if self.gens.len() != self.n {
            return bad("generator count differs from qubit count");
        }
        for (i, g) in self.gens.iter().enumerate() {
            if !g.is_hermitian() {
                return bad("non-Hermitian generator");
            }
            if g.is_minus_identity() {
                return bad("-I in the stabilizer group");
            }
            for h in &self.gens[i + 1..] {
                if !g.commutes(h) {
                    return bad("generators do not commute");
                }
            }
        }
        if symplectic_rank(&self.gens) != self.n {
            return bad("generators are not independent");
        }
        Ok(())
    }

    /// Deterministic pseudo-random state from a word of `2n² + 4n` gates drawn
    /// from {H, S, CX}.
    pub fn random(n: usize, seed: u64) -> Self {
        assert!(n >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Self::zero_state(n);
        for _ in 0..(2 * n * n + 4 * n) {
            let pick = if n > 1 { rng.gen_range(0..3) } else { rng.gen_range(0..2) };
            s = match pick {
                0 => s.apply_clifford(GateKind::H, &[rng.gen_range(0..n)]),
                1 => s.apply_clifford(GateKind::S, &[rng.gen_range(0..n)]),
                _ => {
                    let a = rng.gen_range(0..n);
                    let b = (a + rng.gen_range(1..n)) % n;
                    s.apply_clifford(GateKind::Cx, &[a, b])
                }
            }
            .expect("valid random gate");
        }
        s
    }
}

/// Equal as vectors; all zero states of equal width compare equal.
impl PartialEq for StabilizerState {
    fn eq(&self, other: &Self) -> bool {
        if self.n != other.n {
            return false;
        }
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return true,
            (false, false) => {}
            _ => return false,
        }
        for g in &other.gens {
            if self.gens.iter().any(|h| !h.commutes(g)) {
                return false;
            }
            let src = self.pivot ^ g.x_bits();
            let (a, _) = g.apply_to_basis(src);
            if a * self.amplitude(src) != self.amp {
                return false;
            }
        }
        other.amplitude(self.pivot) == self.amp
    }
}

/// `G†` as a word on local qubits times an exact phase.
fn inverse_word(gate: GateKind) -> Result<(Vec<(GateKind, Vec<usize>)>, ExactScalar), StabError> {
    use GateKind::*;
    let one = ExactScalar::ONE;
    let w = match gate {
        H | X | Y | Z | Cx | Cz | Swap => (vec![(gate, vec![0, 1][..gate.arity()].to_vec())], one),
        S => (vec![(Sdg, vec![0])], one),
        Sdg => (vec![(S, vec![0])], one),
        // sx† = i·X·sx, sy† = i·Y·sy
        SqrtX => (vec![(SqrtX, vec![0]), (X, vec![0])], ExactScalar::i_pow(1)),
        SqrtY => (vec![(SqrtY, vec![0]), (Y, vec![0])], ExactScalar::i_pow(1)),
        // iswap† = iswap·(Z⊗Z)
        ISwap => (vec![(Z, vec![0]), (Z, vec![1]), (ISwap, vec![0, 1])], one),
        _ => return Err(StabError::NotClifford(gate.name().to_string())),
    };
    Ok(w)
}

fn symplectic_rank(gens: &[PauliOperator]) -> usize {
    let mut rows: Vec<u128> = gens
        .iter()
        .map(|g| g.x_bits() as u128 | ((g.z_bits() as u128) << 64))
        .collect();
    let mut rank = 0;
    for bit in 0..128 {
        let Some(pos) = (rank..rows.len()).find(|&r| (rows[r] >> bit) & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pos);
        let pivot_row = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && (*row >> bit) & 1 == 1 {
                *row ^= pivot_row;
            }
        }
        rank += 1;
    }
    rank
}

pub(crate) fn check_qubits(n: usize, arity: usize, qubits: &[usize]) -> Result<(), StabError> {
    if qubits.len() != arity {
        return Err(StabError::ArityMismatch {
            expected: arity,
            got: qubits.len(),
        });
    }
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n {
            return Err(StabError::QubitOutOfRange { qubit: q, n });
        }
        if qubits[..i].contains(&q) {
            return Err(StabError::DuplicateQubit(q));
        }
    }
    Ok(())
}

/// Parse `"0110"` into (bits, width); character `q` is qubit `q`.
pub fn parse_bitstring(s: &str) -> Result<(u64, usize), StabError> {
    let s = s.trim();
    if s.len() > MAX_QUBITS {
        return Err(StabError::Parse(format!("bitstring longer than {MAX_QUBITS}")));
    }
    let mut bits = 0u64;
    for (q, ch) in s.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => bits |= 1 << q,
            _ => return Err(StabError::Parse(format!("bad bitstring '{s}'"))),
        }
    }
    Ok((bits, s.len()))
}

pub fn format_bitstring(bits: u64, n: usize) -> String {
    (0..n).map(|q| if (bits >> q) & 1 == 1 { '1' } else { '0' }).collect()
}
