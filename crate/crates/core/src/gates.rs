//! The supported gate set and its matrices.
//!
//! Two-qubit matrices are written in textbook order: the first listed qubit
//! is the most significant bit of the row/column index.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::dense::{c, pauli_matrix, CMatrix, C};
use crate::exact::ExactScalar;
use crate::pauli::PauliOperator;
use crate::StabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    SqrtX,
    SqrtY,
    Cx,
    Cz,
    Swap,
    ISwap,
    T,
    Tdg,
    Cs,
    SqrtW,
    FSim,
}

pub const CLIFFORD_GATES: [GateKind; 12] = [
    GateKind::H,
    GateKind::S,
    GateKind::Sdg,
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::SqrtX,
    GateKind::SqrtY,
    GateKind::Cx,
    GateKind::Cz,
    GateKind::Swap,
    GateKind::ISwap,
];

pub const ALL_GATES: [GateKind; 17] = [
    GateKind::H,
    GateKind::S,
    GateKind::Sdg,
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::SqrtX,
    GateKind::SqrtY,
    GateKind::Cx,
    GateKind::Cz,
    GateKind::Swap,
    GateKind::ISwap,
    GateKind::T,
    GateKind::Tdg,
    GateKind::Cs,
    GateKind::SqrtW,
    GateKind::FSim,
];

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::SqrtX => "sx",
            GateKind::SqrtY => "sy",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::ISwap => "iswap",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Cs => "cs",
            GateKind::SqrtW => "w",
            GateKind::FSim => "fsim",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Swap | GateKind::ISwap | GateKind::Cs | GateKind::FSim => 2,
            _ => 1,
        }
    }

    pub fn is_clifford(self) -> bool {
        CLIFFORD_GATES.contains(&self)
    }

    pub fn is_diagonal(self) -> bool {
        matches!(
            self,
            GateKind::S | GateKind::Sdg | GateKind::Z | GateKind::Cz | GateKind::T | GateKind::Tdg | GateKind::Cs
        )
    }

    /// Matrix entries as exact scalars. `None` for non-Clifford gates.
    pub fn exact_matrix(self) -> Option<Vec<ExactScalar>> {
        let z = ExactScalar::ZERO;
        let one = ExactScalar::ONE;
        let i = ExactScalar::i_pow(1);
        let mi = ExactScalar::i_pow(3);
        let m1 = -one;
        let h = ExactScalar::new(0, 1);
        let mh = -h;
        let mih = ExactScalar::new(6, 1);
        let m = match self {
            GateKind::H => vec![h, h, h, mh],
            GateKind::S => vec![one, z, z, i],
            GateKind::Sdg => vec![one, z, z, mi],
            GateKind::X => vec![z, one, one, z],
            GateKind::Y => vec![z, mi, i, z],
            GateKind::Z => vec![one, z, z, m1],
            GateKind::SqrtX => vec![h, mih, mih, h],
            GateKind::SqrtY => vec![h, mh, h, h],
            GateKind::Cx => vec![
                one, z, z, z, //
                z, one, z, z, //
                z, z, z, one, //
                z, z, one, z,
            ],
            GateKind::Cz => vec![
                one, z, z, z, //
                z, one, z, z, //
                z, z, one, z, //
                z, z, z, m1,
            ],
            GateKind::Swap => vec![
                one, z, z, z, //
                z, z, one, z, //
                z, one, z, z, //
                z, z, z, one,
            ],
            GateKind::ISwap => vec![
                one, z, z, z, //
                z, z, i, z, //
                z, i, z, z, //
                z, z, z, one,
            ],
            _ => return None,
        };
        Some(m)
    }

    pub fn matrix(self) -> CMatrix {
        if let Some(m) = self.exact_matrix() {
            let d = 1usize << self.arity();
            return CMatrix {
                rows: d,
                cols: d,
                data: m.into_iter().map(|v| v.to_complex()).collect(),
            };
        }
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let w = C::from_polar(1.0, PI / 4.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            GateKind::T => CMatrix::diagonal(&[one, w]),
            GateKind::Tdg => CMatrix::diagonal(&[one, w.conj()]),
            GateKind::Cs => CMatrix::diagonal(&[one, one, one, c(0.0, 1.0)]),
            // (1/√2) [[1, -√i], [√(-i), 1]]
            GateKind::SqrtW => CMatrix::from_rows(&[
                vec![c(r, 0.0), -C::from_polar(r, PI / 4.0)],
                vec![C::from_polar(r, -PI / 4.0), c(r, 0.0)],
            ]),
            // fSim(π/2, π/6) with the |11⟩ phase e^{iπ/6}
            GateKind::FSim => CMatrix::from_rows(&[
                vec![one, zero, zero, zero],
                vec![zero, zero, c(0.0, -1.0), zero],
                vec![zero, c(0.0, -1.0), zero, zero],
                vec![zero, zero, zero, C::from_polar(1.0, PI / 6.0)],
            ]),
            _ => unreachable!(),
        }
    }

    /// Images `G X_j G†`, `G Z_j G†` for each local qubit `j`, laid out as
    /// `[X_0, Z_0, X_1, Z_1]`. Clifford gates only.
    pub(crate) fn conjugation_table(self) -> &'static [PauliOperator] {
        static TABLES: [OnceLock<Vec<PauliOperator>>; 12] = [const { OnceLock::new() }; 12];
        let idx = CLIFFORD_GATES
            .iter()
            .position(|&g| g == self)
            .expect("conjugation table requested for a non-Clifford gate");
        TABLES[idx].get_or_init(|| build_conjugation_table(self))
    }
}

fn build_conjugation_table(g: GateKind) -> Vec<PauliOperator> {
    let k = g.arity();
    let u = g.matrix();
    let ud = u.adjoint();
    let mut out = Vec::with_capacity(2 * k);
    for j in 0..k {
        for p in [PauliOperator::x_on(k, j), PauliOperator::z_on(k, j)] {
            let img = u.matmul(&pauli_matrix(&p)).matmul(&ud);
            out.push(identify_pauli(&img, k).expect("Clifford image is a Pauli"));
        }
    }
    out
}

fn identify_pauli(m: &CMatrix, k: usize) -> Option<PauliOperator> {
    for x in 0..(1u64 << k) {
        for z in 0..(1u64 << k) {
            for ph in 0..4 {
                let p = PauliOperator::new(k, x, z, ph);
                if pauli_matrix(&p).max_abs_diff(m) < 1e-9 {
                    return Some(p);
                }
            }
        }
    }
    None
}

/// `G P G†` for a Pauli `P` acting on the gate's local qubits.
pub(crate) fn conjugate_local(g: GateKind, local: &PauliOperator) -> PauliOperator {
    let k = g.arity();
    let table = g.conjugation_table();
    // ⊗σ(x_j,z_j) = i^{|x&z|} Π_j X_j^{x_j} Z_j^{z_j}
    let lead = (local.phase() as u32 + (local.x_bits() & local.z_bits()).count_ones()) % 4;
    let mut acc = PauliOperator::new(k, 0, 0, lead as u8);
    for j in 0..k {
        if (local.x_bits() >> j) & 1 == 1 {
            acc = acc * table[2 * j];
        }
        if (local.z_bits() >> j) & 1 == 1 {
            acc = acc * table[2 * j + 1];
        }
    }
    acc
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = StabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_GATES
            .iter()
            .copied()
            .find(|g| g.name() == s)
            .ok_or_else(|| StabError::UnknownGate(s.to_string()))
    }
}
