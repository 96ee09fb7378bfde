//! Phase-tracked Pauli operators on up to 64 qubits.

use std::fmt;
use std::str::FromStr;

use crate::exact::ExactScalar;
use crate::StabError;

/// Largest supported qubit count for stabilizer-side objects.
pub const MAX_QUBITS: usize = 64;

/// `i^phase · ⊗_j σ(x_j, z_j)` where `σ(1,0)=X`, `σ(1,1)=Y`, `σ(0,1)=Z`.
///
/// With `Y` stored as its own symbol, Hermitian operators are exactly the
/// ones with `phase ∈ {0, 2}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: u64,
    z: u64,
    phase: u8,
}

pub(crate) fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliOperator {
    pub fn new(n: usize, x: u64, z: u64, phase: u8) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        let m = mask(n);
        PauliOperator {
            n,
            x: x & m,
            z: z & m,
            phase: phase % 4,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, 0, 0, 0)
    }

    /// `Z` on one qubit.
    pub fn z_on(n: usize, q: usize) -> Self {
        Self::new(n, 0, 1 << q, 0)
    }

    /// `X` on one qubit.
    pub fn x_on(n: usize, q: usize) -> Self {
        Self::new(n, 1 << q, 0, 0)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    /// True for `-I`.
    pub fn is_minus_identity(&self) -> bool {
        self.is_identity() && self.phase == 2
    }

    pub fn negate(mut self) -> Self {
        self.phase = (self.phase + 2) % 4;
        self
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase % 4;
        self
    }

    pub fn commutes(&self, other: &PauliOperator) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// `P|v⟩ = amp · |v'⟩`; returns `(amp, v')`.
    pub fn apply_to_basis(&self, v: u64) -> (ExactScalar, u64) {
        let k = self.phase as i32
            + (self.x & self.z).count_ones() as i32
            + 2 * (self.z & v).count_ones() as i32;
        (ExactScalar::i_pow(k), v ^ self.x)
    }

    /// Restrict to a sub-register: qubit `qubits[j]` of `self` becomes qubit
    /// `j` of the result. Phase is kept.
    pub fn gather(&self, qubits: &[usize]) -> PauliOperator {
        let mut x = 0;
        let mut z = 0;
        for (j, &q) in qubits.iter().enumerate() {
            x |= ((self.x >> q) & 1) << j;
            z |= ((self.z >> q) & 1) << j;
        }
        PauliOperator::new(qubits.len(), x, z, self.phase)
    }

    /// Embed into `n` qubits: local qubit `j` lands on `qubits[j]`.
    pub fn scatter(&self, qubits: &[usize], n: usize) -> PauliOperator {
        let mut x = 0;
        let mut z = 0;
        for (j, &q) in qubits.iter().enumerate() {
            x |= ((self.x >> j) & 1) << q;
            z |= ((self.z >> j) & 1) << q;
        }
        PauliOperator::new(n, x, z, self.phase)
    }

    /// Replace the action on `qubits` with `local`, multiplying phases.
    pub(crate) fn replace_on(&self, qubits: &[usize], local: &PauliOperator) -> PauliOperator {
        let mut clear = 0u64;
        for &q in qubits {
            clear |= 1 << q;
        }
        let emb = local.scatter(qubits, self.n);
        PauliOperator::new(
            self.n,
            (self.x & !clear) | emb.x,
            (self.z & !clear) | emb.z,
            self.phase + local.phase,
        )
    }
}

impl std::ops::Mul for PauliOperator {
    type Output = PauliOperator;

    fn mul(self, rhs: PauliOperator) -> PauliOperator {
        assert_eq!(self.n, rhs.n, "Pauli width mismatch");
        let (x1, z1, x2, z2) = (self.x, self.z, rhs.x, rhs.z);
        let xa = x1 & !z1;
        let ya = x1 & z1;
        let za = !x1 & z1;
        let xb = x2 & !z2;
        let yb = x2 & z2;
        let zb = !x2 & z2;
        // XY = iZ, YZ = iX, ZX = iY and the reversed orders give -i
        let plus = (xa & yb) | (ya & zb) | (za & xb);
        let minus = (xa & zb) | (ya & xb) | (za & yb);
        let phase = self.phase as i64 + rhs.phase as i64 + plus.count_ones() as i64
            - minus.count_ones() as i64;
        PauliOperator::new(self.n, x1 ^ x2, z1 ^ z2, phase.rem_euclid(4) as u8)
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["+", "+i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}")?;
        for q in 0..self.n {
            let c = match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PauliOperator {
    type Err = StabError;

    /// Parses strings like `+XZ`, `-YI`, `+iZ`, `XX` (character `j` is qubit `j`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || StabError::Parse(format!("bad Pauli string '{s}'"));
        let (phase, body) = if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = s.strip_prefix('-').or_else(|| s.strip_prefix('\u{2212}')) {
            (2, r)
        } else {
            (0, s)
        };
        if body.is_empty() || body.chars().count() > MAX_QUBITS {
            return Err(bad());
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, c) in body.chars().enumerate() {
            match c {
                'I' => {}
                'X' => x |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q
                }
                'Z' => z |= 1 << q,
                _ => return Err(bad()),
            }
        }
        Ok(PauliOperator::new(body.chars().count(), x, z, phase))
    }
}
