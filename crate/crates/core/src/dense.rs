//! Small dense complex linear algebra used by the oracle engine, the
//! decomposition verifier and tests.
//!
//! Dense vectors are big-endian: qubit 0 is the most significant bit of the
//! vector index, so `kron(A_q0, A_q1, ...)` acts qubit-wise in list order.
//! Bit masks elsewhere in the crate use bit `q` for qubit `q`;
//! [`basis_index`] converts between the two.

use num_complex::Complex64;

use crate::pauli::PauliOperator;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Dense-vector index of the basis string whose bit `q` is qubit `q`.
pub fn basis_index(bits: u64, n: usize) -> usize {
    let mut idx = 0usize;
    for q in 0..n {
        if (bits >> q) & 1 == 1 {
            idx |= 1 << (n - 1 - q);
        }
    }
    idx
}

/// Inverse of [`basis_index`].
pub fn index_bits(idx: usize, n: usize) -> u64 {
    let mut bits = 0u64;
    for q in 0..n {
        if (idx >> (n - 1 - q)) & 1 == 1 {
            bits |= 1 << q;
        }
    }
    bits
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m.set(i, i, C::new(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C>]) -> Self {
        let r = rows.len();
        let cl = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * cl);
        for row in rows {
            assert_eq!(row.len(), cl, "ragged matrix");
            data.extend_from_slice(row);
        }
        CMatrix { rows: r, cols: cl, data }
    }

    pub fn diagonal(d: &[C]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C) {
        self.data[r * self.cols + c] = v;
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == C::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, a * other.get(k, l));
                    }
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn scale(&self, s: C) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).norm() <= tol))
    }

    pub fn diag(&self) -> Vec<C> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[C]) -> CMatrix {
        let d = v.len();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, v[i] * v[j].conj());
            }
        }
        m
    }

    /// Conjugate by the qubit permutation: local qubit `j` of the result is
    /// qubit `perm[j]` of `self`. Square matrices on `k` qubits only.
    pub fn permute_qubits(&self, perm: &[usize]) -> CMatrix {
        let k = perm.len();
        assert_eq!(self.rows, 1 << k);
        let map = |idx: usize| {
            let bits = index_bits(idx, k);
            let mut src = 0u64;
            for (j, &p) in perm.iter().enumerate() {
                src |= ((bits >> j) & 1) << p;
            }
            basis_index(src, k)
        };
        let mut out = CMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(map(i), map(j)));
            }
        }
        out
    }
}

/// Dense matrix of a Pauli operator.
pub fn pauli_matrix(p: &PauliOperator) -> CMatrix {
    let n = p.num_qubits();
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    for col in 0..d {
        let v = index_bits(col, n);
        let (amp, w) = p.apply_to_basis(v);
        m.set(basis_index(w, n), col, amp.to_complex());
    }
    m
}

/// Apply a `k`-qubit matrix (textbook order over `qubits`) to a big-endian
/// state vector on `n` qubits, in place.
pub fn apply_to_state(state: &mut [C], n: usize, gate: &CMatrix, qubits: &[usize]) {
    let k = qubits.len();
    let d = 1usize << k;
    assert_eq!(gate.rows, d);
    assert_eq!(state.len(), 1 << n);
    let shifts: Vec<usize> = qubits.iter().map(|&q| n - 1 - q).collect();
    let gate_mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
    let offset = |local: usize| -> usize {
        let mut o = 0;
        for (j, &s) in shifts.iter().enumerate() {
            if (local >> (k - 1 - j)) & 1 == 1 {
                o |= 1 << s;
            }
        }
        o
    };
    let offsets: Vec<usize> = (0..d).map(offset).collect();
    let mut buf = vec![C::new(0.0, 0.0); d];
    for base in 0..state.len() {
        if base & gate_mask != 0 {
            continue;
        }
        for (l, &o) in offsets.iter().enumerate() {
            buf[l] = state[base | o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            let mut acc = C::new(0.0, 0.0);
            for (l, &b) in buf.iter().enumerate() {
                acc += gate.get(r, l) * b;
            }
            state[base | o] = acc;
        }
    }
}

/// Full `2^n × 2^n` matrix of a gate acting on `qubits`.
pub fn embed(gate: &CMatrix, qubits: &[usize], n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut out = CMatrix::zeros(d, d);
    for col in 0..d {
        let mut v = vec![C::new(0.0, 0.0); d];
        v[col] = C::new(1.0, 0.0);
        apply_to_state(&mut v, n, gate, qubits);
        for (row, x) in v.into_iter().enumerate() {
            out.set(row, col, x);
        }
    }
    out
}
