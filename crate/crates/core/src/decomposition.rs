//! Stabilizer projector decompositions `U = Σ c_i |φ_i⟩⟨φ_i|`.
//!
//! The built-in database lives in `data/decompositions.db` and is verified
//! against the dense gate matrices the first time it is loaded.

use std::fmt;
use std::sync::{Arc, OnceLock};

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::dense::{c, index_bits, CMatrix, C};
use crate::exact::ExactScalar;
use crate::gates::GateKind;
use crate::pauli::PauliOperator;
use crate::stabilizer::{format_bitstring, parse_bitstring, StabilizerState};
use crate::StabError;

/// Largest arity for which dense reconstruction is attempted.
pub const VERIFY_ARITY_LIMIT: usize = 6;

/// Residual below which a least-squares fit counts as exact.
pub const FIT_TOL: f64 = 1e-9;

const DB_HEADER: &str = "stabsim-decompositions v1";
static BUILTIN_DB: &str = include_str!("../data/decompositions.db");

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorTerm {
    pub coefficient: C,
    pub state: StabilizerState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Builtin,
    Diagonal,
    Padded,
    Tensor,
    Refit,
    Searched,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Builtin => "builtin",
            Source::Diagonal => "diagonal",
            Source::Padded => "padded",
            Source::Tensor => "tensor",
            Source::Refit => "refit",
            Source::Searched => "searched",
        }
    }

    fn parse(s: &str) -> Option<Source> {
        [
            Source::Builtin,
            Source::Diagonal,
            Source::Padded,
            Source::Tensor,
            Source::Refit,
            Source::Searched,
        ]
        .into_iter()
        .find(|x| x.as_str() == s)
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorDecomposition {
    pub name: String,
    pub arity: usize,
    pub terms: Vec<ProjectorTerm>,
    pub source: Source,
    /// Reconstruction tolerance this entry is certified at.
    pub tol: f64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub max_error: f64,
    pub kappa: usize,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct RefitReport {
    pub decomposition: ProjectorDecomposition,
    pub residual: f64,
    pub rank_deficient: bool,
    /// False when the support could not reproduce the target and the input
    /// was returned unchanged.
    pub applied: bool,
}

impl ProjectorDecomposition {
    pub fn new(name: &str, arity: usize, terms: Vec<ProjectorTerm>, source: Source) -> Self {
        ProjectorDecomposition {
            name: name.to_string(),
            arity,
            terms,
            source,
            tol: 1e-12,
            notes: Vec::new(),
        }
    }

    /// κ.
    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// `Σ c_i |φ_i⟩⟨φ_i|` as a dense matrix.
    pub fn to_dense(&self) -> Result<CMatrix, StabError> {
        if self.arity > VERIFY_ARITY_LIMIT {
            return Err(StabError::TooLarge {
                n: self.arity,
                limit: VERIFY_ARITY_LIMIT,
            });
        }
        let d = 1usize << self.arity;
        let mut m = CMatrix::zeros(d, d);
        for t in &self.terms {
            let v = t.state.to_dense()?;
            m = m.add(&CMatrix::outer(&v).scale(t.coefficient));
        }
        Ok(m)
    }

    /// Same operator on relabelled qubits: qubit `j` of the result is qubit
    /// `perm[j]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.state = t.state.permuted(perm);
        }
        out
    }

    /// Text block in the database format.
    pub fn to_db_block(&self) -> String {
        let mut s = format!(
            "gate {} arity {} source {} tol {:e}\n",
            self.name, self.arity, self.source, self.tol
        );
        for n in &self.notes {
            s.push_str(&format!("note {n}\n"));
        }
        for t in &self.terms {
            let gens = t.state.generators().iter().map(|g| g.to_string()).join(" ");
            s.push_str(&format!(
                "term {} {} | {} @ {}\n",
                fmt_coef(t.coefficient.re),
                fmt_coef(t.coefficient.im),
                gens,
                format_bitstring(t.state.pivot(), self.arity)
            ));
        }
        s
    }
}

fn fmt_coef(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Dense matrix each database name must reproduce.
pub fn target_matrix(name: &str) -> Option<CMatrix> {
    use GateKind::*;
    let i2 = CMatrix::identity(2);
    let w = SqrtW.matrix();
    let m = match name {
        "fsim" => FSim.matrix(),
        "ww" | "ww_d" | "ww_e" => w.kron(&w),
        "fsim_w1w2" => FSim.matrix().matmul(&w.kron(&w)),
        "fsim_w1" => FSim.matrix().matmul(&w.kron(&i2)),
        "w2_iswap_cz_w1" => i2
            .kron(&w)
            .matmul(&ISwap.matrix())
            .matmul(&Cz.matrix())
            .matmul(&w.kron(&i2)),
        _ => name.parse::<GateKind>().ok()?.matrix(),
    };
    Some(m)
}

/// Entrywise comparison of the reconstruction against `target`.
pub fn verify_decomposition(
    decomp: &ProjectorDecomposition,
    target: &CMatrix,
    tol: f64,
) -> Result<VerifyReport, StabError> {
    let m = decomp.to_dense()?;
    if (m.rows, m.cols) != (target.rows, target.cols) {
        return Err(StabError::DimensionMismatch(decomp.arity, target.rows.trailing_zeros() as usize));
    }
    let max_error = m.max_abs_diff(target);
    Ok(VerifyReport {
        max_error,
        kappa: decomp.rank(),
        pass: max_error <= tol,
    })
}

#[derive(Clone, Debug)]
pub struct FitReport {
    pub coefficients: Vec<C>,
    /// Largest entry of `|Σ c_i v_i v_i† − target|`.
    pub residual: f64,
    /// Rank of the vectorized projector set.
    pub rank: usize,
}

/// Least-squares coefficients for `Σ c_i |v_i⟩⟨v_i| ≈ target`, one column per
/// vectorized projector.
pub fn fit_projectors(vectors: &[Vec<C>], target: &CMatrix) -> FitReport {
    let d = target.rows;
    let cols: Vec<CMatrix> = vectors.iter().map(|v| CMatrix::outer(v)).collect();
    let a = DMatrix::<C>::from_fn(d * d, cols.len(), |r, j| cols[j].data[r]);
    let b = DVector::<C>::from_iterator(d * d, target.data.iter().copied());
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = svd.rank(1e-10 * smax.max(1e-300));
    let x = svd
        .solve(&b, 1e-12 * smax.max(1e-300))
        .unwrap_or_else(|_| DVector::zeros(cols.len()));
    let r = &a * &x - &b;
    let residual = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    FitReport {
        coefficients: x.iter().copied().collect(),
        residual,
        rank,
    }
}

/// Re-solve the coefficients on the fixed projector support.
pub fn refit_coefficients(decomp: &ProjectorDecomposition, target: &CMatrix) -> Result<RefitReport, StabError> {
    if decomp.arity > 4 {
        return Err(StabError::TooLarge {
            n: decomp.arity,
            limit: 4,
        });
    }
    let vectors = decomp
        .terms
        .iter()
        .map(|t| t.state.to_dense())
        .collect::<Result<Vec<_>, _>>()?;
    let fit = fit_projectors(&vectors, target);
    let rank_deficient = fit.rank < decomp.rank();
    if rank_deficient && fit.residual > FIT_TOL {
        return Ok(RefitReport {
            decomposition: decomp.clone(),
            residual: fit.residual,
            rank_deficient,
            applied: false,
        });
    }
    let mut out = decomp.clone();
    for (t, &cf) in out.terms.iter_mut().zip(&fit.coefficients) {
        t.coefficient = cf;
    }
    out.source = Source::Refit;
    Ok(RefitReport {
        decomposition: out,
        residual: fit.residual,
        rank_deficient,
        applied: true,
    })
}

/// `Σ_i d_i |i⟩⟨i|` with `i` in textbook (big-endian) order.
pub fn diagonal_decomposition(entries: &[C]) -> Result<ProjectorDecomposition, StabError> {
    let len = entries.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(StabError::InvalidDecomposition(format!(
            "diagonal length {len} is not a power of two >= 2"
        )));
    }
    let k = len.trailing_zeros() as usize;
    let terms = entries
        .iter()
        .enumerate()
        .map(|(i, &d)| ProjectorTerm {
            coefficient: d,
            state: StabilizerState::basis(k, index_bits(i, k)),
        })
        .collect();
    Ok(ProjectorDecomposition::new("diagonal", k, terms, Source::Diagonal))
}

/// `a ⊗ b` with `a` on the low qubit indices; term `i·κ_b + j` is
/// `(a_i, b_j)`.
pub fn tensor(a: &ProjectorDecomposition, b: &ProjectorDecomposition) -> ProjectorDecomposition {
    let mut terms = Vec::with_capacity(a.rank() * b.rank());
    for ta in &a.terms {
        for tb in &b.terms {
            terms.push(ProjectorTerm {
                coefficient: ta.coefficient * tb.coefficient,
                state: ta.state.tensor(&tb.state),
            });
        }
    }
    let mut out = ProjectorDecomposition::new(
        &format!("{}*{}", a.name, b.name),
        a.arity + b.arity,
        terms,
        Source::Tensor,
    );
    out.tol = a.tol.max(b.tol);
    out
}

/// Full-width decomposition of a layer; qubits without a placement get the
/// identity `|0⟩⟨0| + |1⟩⟨1|`.
pub fn pad_layer(
    placements: &[(&ProjectorDecomposition, Vec<usize>)],
    n: usize,
) -> Result<ProjectorDecomposition, StabError> {
    let layer = FactoredLayer::new(
        n,
        placements
            .iter()
            .map(|(d, q)| (LayerFactor::Terms(Arc::new((*d).clone())), q.clone()))
            .collect(),
    )?;
    let kappa = layer
        .kappa()
        .ok_or_else(|| StabError::InvalidDecomposition("padded rank overflows".into()))?;
    let terms = (0..kappa)
        .map(|i| {
            let (c, s) = layer.term(i);
            ProjectorTerm {
                coefficient: c,
                state: s,
            }
        })
        .collect();
    let mut out = ProjectorDecomposition::new("layer", n, terms, Source::Padded);
    out.tol = placements.iter().map(|(d, _)| d.tol).fold(1e-12, f64::max);
    Ok(out)
}

/// Diagonal operator given as a product of diagonal parts, evaluated lazily.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalFactor {
    pub arity: usize,
    /// Diagonal entries (textbook order) and the local qubits they act on.
    pub parts: Vec<(Vec<C>, Vec<usize>)>,
}

impl DiagonalFactor {
    pub fn identity(arity: usize) -> Self {
        DiagonalFactor {
            arity,
            parts: Vec::new(),
        }
    }

    /// Diagonal entry at the local basis string `bits`.
    pub fn entry(&self, bits: u64) -> C {
        let mut v = c(1.0, 0.0);
        for (diag, qs) in &self.parts {
            let k = qs.len();
            let idx = qs
                .iter()
                .enumerate()
                .fold(0usize, |acc, (j, &q)| acc | ((((bits >> q) & 1) as usize) << (k - 1 - j)));
            v *= diag[idx];
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerFactor {
    Terms(Arc<ProjectorDecomposition>),
    Diagonal(DiagonalFactor),
}

impl LayerFactor {
    pub fn arity(&self) -> usize {
        match self {
            LayerFactor::Terms(d) => d.arity,
            LayerFactor::Diagonal(d) => d.arity,
        }
    }

    pub fn rank(&self) -> Option<usize> {
        match self {
            LayerFactor::Terms(d) => Some(d.rank()),
            LayerFactor::Diagonal(d) => 1usize.checked_shl(d.arity as u32).filter(|_| d.arity < 63),
        }
    }

    pub fn rank_log2(&self) -> f64 {
        match self {
            LayerFactor::Terms(d) => (d.rank() as f64).log2(),
            LayerFactor::Diagonal(d) => d.arity as f64,
        }
    }

    fn term(&self, j: usize) -> (C, StabilizerState) {
        match self {
            LayerFactor::Terms(d) => {
                let t = &d.terms[j];
                (t.coefficient, t.state.clone())
            }
            LayerFactor::Diagonal(d) => {
                let bits = index_bits(j, d.arity);
                (d.entry(bits), StabilizerState::basis(d.arity, bits))
            }
        }
    }
}

/// A full-width non-Clifford layer kept as a product of factors placed on
/// disjoint qubits. Terms are enumerated in mixed radix with the first factor
/// most significant; uncovered qubits are padded with identity factors in
/// ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredLayer {
    pub n: usize,
    pub factors: Vec<(LayerFactor, Vec<usize>)>,
}

impl FactoredLayer {
    pub fn new(n: usize, mut factors: Vec<(LayerFactor, Vec<usize>)>) -> Result<Self, StabError> {
        let mut covered = vec![false; n];
        for (f, qs) in &factors {
            if f.arity() != qs.len() {
                return Err(StabError::ArityMismatch {
                    expected: f.arity(),
                    got: qs.len(),
                });
            }
            for &q in qs {
                if q >= n {
                    return Err(StabError::QubitOutOfRange { qubit: q, n });
                }
                if covered[q] {
                    return Err(StabError::InvalidDecomposition(format!(
                        "overlapping placements on qubit {q}"
                    )));
                }
                covered[q] = true;
            }
        }
        for (q, _) in covered.iter().enumerate().filter(|(_, c)| !**c) {
            factors.push((LayerFactor::Diagonal(DiagonalFactor::identity(1)), vec![q]));
        }
        Ok(FactoredLayer { n, factors })
    }

    /// κ, or `None` if it does not fit in `usize`.
    pub fn kappa(&self) -> Option<usize> {
        self.factors
            .iter()
            .try_fold(1usize, |acc, (f, _)| acc.checked_mul(f.rank()?))
    }

    pub fn kappa_log2(&self) -> f64 {
        self.factors.iter().map(|(f, _)| f.rank_log2()).sum()
    }

    /// True when every factor is diagonal, so every term is a basis projector.
    pub fn is_basis(&self) -> bool {
        self.factors.iter().all(|(f, _)| matches!(f, LayerFactor::Diagonal(_)))
    }

    fn digits(&self, mut i: usize) -> Vec<usize> {
        let mut digits = vec![0usize; self.factors.len()];
        for (d, (f, _)) in digits.iter_mut().zip(&self.factors).rev() {
            let r = f.rank().expect("layer rank fits in usize");
            *d = i % r;
            i /= r;
        }
        digits
    }

    /// Term `i` of a basis layer as (coefficient, basis string); same order
    /// as [`FactoredLayer::term`].
    pub fn basis_term(&self, i: usize) -> (C, u64) {
        let mut coef = c(1.0, 0.0);
        let mut bits = 0u64;
        for ((f, qs), j) in self.factors.iter().zip(self.digits(i)) {
            let LayerFactor::Diagonal(d) = f else {
                panic!("basis_term on a layer with non-diagonal factors");
            };
            let local = index_bits(j, d.arity);
            coef *= d.entry(local);
            for (l, &q) in qs.iter().enumerate() {
                bits |= ((local >> l) & 1) << q;
            }
        }
        (coef, bits)
    }

    /// Term `i` in canonical order: (coefficient, full-width projector state).
    pub fn term(&self, i: usize) -> (C, StabilizerState) {
        let digits = self.digits(i);
        let mut coef = c(1.0, 0.0);
        let mut parts = Vec::with_capacity(self.factors.len());
        for ((f, qs), &j) in self.factors.iter().zip(&digits) {
            let (cf, s) = f.term(j);
            coef *= cf;
            parts.push((s, qs.as_slice()));
        }
        let refs: Vec<(&StabilizerState, &[usize])> = parts.iter().map(|(s, q)| (s, *q)).collect();
        (coef, StabilizerState::embed_parts(&refs, self.n))
    }
}

/// One factor term lifted to the full register: its projector generators
/// and `|φ|² / φ(y)` for every local basis string `y` in its support.
struct LiftedTerm {
    coef: C,
    gens: Vec<PauliOperator>,
    weight: Vec<ExactScalar>,
}

/// Overlaps `⟨φ_i|ψ⟩` against every term of a [`FactoredLayer`], computed
/// depth first over the factors: a projected prefix is shared by all terms
/// below it and a prefix that annihilates every input prunes its subtree.
pub struct LayerProjector {
    factors: Vec<(Vec<LiftedTerm>, Vec<usize>)>,
}

type Kets = SmallVec<[StabilizerState; 2]>;

impl LayerProjector {
    pub fn new(layer: &FactoredLayer) -> Self {
        let n = layer.n;
        let factors = layer
            .factors
            .iter()
            .map(|(f, qs)| {
                let r = f.rank().expect("factor rank fits in usize");
                let terms = (0..r)
                    .map(|j| {
                        let (coef, s) = f.term(j);
                        let nsq = s.norm().norm_sqr();
                        let weight = (0..1u64 << qs.len())
                            .map(|y| {
                                let a = s.amplitude(y);
                                if a.is_zero() {
                                    ExactScalar::ZERO
                                } else {
                                    nsq / a
                                }
                            })
                            .collect();
                        LiftedTerm {
                            coef,
                            gens: s.generators().iter().map(|g| g.scatter(qs, n)).collect(),
                            weight,
                        }
                    })
                    .collect();
                (terms, qs.clone())
            })
            .collect();
        LayerProjector { factors }
    }

    /// Calls `visit(i, c_i, [⟨φ_i|ψ⟩ for ψ in kets])` for every term where no
    /// overlap vanishes, in ascending term order.
    pub fn visit(
        &self,
        kets: &[StabilizerState],
        mut visit: impl FnMut(usize, C, &[ExactScalar]),
    ) -> Result<(), StabError> {
        if kets.iter().any(|k| k.is_zero()) {
            return Ok(());
        }
        let mut path = Vec::with_capacity(self.factors.len());
        self.descend(0, c(1.0, 0.0), &mut path, kets, &mut visit)
    }

    fn descend(
        &self,
        index: usize,
        coef: C,
        path: &mut Vec<usize>,
        kets: &[StabilizerState],
        visit: &mut impl FnMut(usize, C, &[ExactScalar]),
    ) -> Result<(), StabError> {
        let t = path.len();
        if t == self.factors.len() {
            // each ket is now φ_i times its overlap
            let ov: SmallVec<[ExactScalar; 2]> = kets
                .iter()
                .map(|k| {
                    let y = k.pivot();
                    path.iter().zip(&self.factors).fold(k.pivot_amplitude(), |acc, (&j, (terms, qs))| {
                        let local = qs.iter().enumerate().fold(0u64, |l, (b, &q)| l | ((y >> q) & 1) << b);
                        acc * terms[j].weight[local as usize]
                    })
                })
                .collect();
            visit(index, coef, &ov);
            return Ok(());
        }
        let terms = &self.factors[t].0;
        let r = terms.len();
        'terms: for (j, lt) in terms.iter().enumerate() {
            let mut next = Kets::with_capacity(kets.len());
            for k in kets {
                let mut s: Option<StabilizerState> = None;
                for g in &lt.gens {
                    let p = s.as_ref().unwrap_or(k).project_pauli(g, 1)?;
                    if p.is_zero() {
                        continue 'terms;
                    }
                    s = Some(p);
                }
                next.push(s.unwrap_or_else(|| k.clone()));
            }
            path.push(j);
            self.descend(index * r + j, coef * lt.coef, path, &next, visit)?;
            path.pop();
        }
        Ok(())
    }
}

/// The 6 one-qubit or 60 two-qubit stabilizer states (unit norm, one per
/// ray). Products come first, in label order `z z̄ x x̄ y ȳ`.
pub fn stabilizer_states(k: usize) -> &'static [StabilizerState] {
    static ONE: OnceLock<Vec<StabilizerState>> = OnceLock::new();
    static TWO: OnceLock<Vec<StabilizerState>> = OnceLock::new();
    match k {
        1 => ONE.get_or_init(|| {
            ["+Z", "-Z", "+X", "-X", "+Y", "-Y"]
                .iter()
                .map(|g| {
                    let p: PauliOperator = g.parse().unwrap();
                    StabilizerState::from_generators(&[p], if g == &"-Z" { 1 } else { 0 }).unwrap()
                })
                .collect()
        }),
        2 => TWO.get_or_init(|| {
            let one = stabilizer_states(1);
            let mut out: Vec<StabilizerState> = Vec::with_capacity(60);
            for a in one {
                for b in one {
                    out.push(a.tensor(b));
                }
            }
            let paulis: Vec<PauliOperator> = (0..4u64)
                .cartesian_product(0..4u64)
                .filter(|&(x, z)| x | z != 0)
                .flat_map(|(x, z)| [0u8, 2].map(|ph| PauliOperator::new(2, x, z, ph)))
                .collect();
            for (g1, g2) in paulis.iter().tuple_combinations() {
                if !g1.commutes(g2) || g1.x_bits() == g2.x_bits() && g1.z_bits() == g2.z_bits() {
                    continue;
                }
                let Some(s) = (0..4).find_map(|y| StabilizerState::from_generators(&[*g1, *g2], y).ok()) else {
                    continue;
                };
                if !out.iter().any(|t| same_ray(t, &s)) {
                    out.push(s);
                }
            }
            out
        }),
        _ => panic!("stabilizer state tables exist for 1 and 2 qubits only"),
    }
}

fn same_ray(a: &StabilizerState, b: &StabilizerState) -> bool {
    let ip = StabilizerState::inner_product(a, b).unwrap();
    !ip.is_zero() && ip.sqrt2_exponent() == 0
}

/// Find a projector decomposition of a 1- or 2-qubit target with at most
/// `max_rank` terms. Supports of each size are scanned exhaustively in
/// lexicographic order when `C(N, k) ≤ budget`, otherwise by up to
/// [`SEARCH_RESTARTS`] seeded random restarts with single-swap descent.
/// `budget` caps the total number of least-squares solves.
pub fn search_decomposition(
    target: &CMatrix,
    max_rank: usize,
    budget: usize,
    seed: u64,
) -> Result<Option<ProjectorDecomposition>, StabError> {
    let lo = matrix_rank(target).max(1);
    search_ranks(target, lo, max_rank, budget, seed)
}

/// Like [`search_decomposition`] but only supports of exactly `rank` states,
/// all with non-zero coefficients.
pub fn search_fixed_rank(
    target: &CMatrix,
    rank: usize,
    budget: usize,
    seed: u64,
) -> Result<Option<ProjectorDecomposition>, StabError> {
    search_ranks(target, rank, rank, budget, seed)
}

fn search_ranks(
    target: &CMatrix,
    lo: usize,
    max_rank: usize,
    budget: usize,
    seed: u64,
) -> Result<Option<ProjectorDecomposition>, StabError> {
    let k = match target.rows {
        2 => 1,
        4 => 2,
        _ => {
            return Err(StabError::InvalidDecomposition(
                "search supports 1- and 2-qubit targets only".into(),
            ))
        }
    };
    if max_rank > 16 {
        return Err(StabError::InvalidDecomposition("max_rank must be at most 16".into()));
    }
    let states = stabilizer_states(k);
    let vectors: Vec<Vec<C>> = states.iter().map(|s| s.to_dense().unwrap()).collect();
    let mut spent = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = |ids: &[usize]| {
        let v: Vec<Vec<C>> = ids.iter().map(|&i| vectors[i].clone()).collect();
        fit_projectors(&v, target)
    };
    // a sum of r rank-one operators has matrix rank at most r, so sizes below
    // the target's rank are skipped
    for r in lo.max(matrix_rank(target)).max(1)..=max_rank.min(states.len()) {
        let found = if binomial(states.len(), r) <= (budget - spent) as f64 {
            let mut hit = None;
            for ids in (0..states.len()).combinations(r) {
                spent += 1;
                let f = fit(&ids);
                if is_hit(&f) {
                    hit = Some((ids, f));
                    break;
                }
            }
            hit
        } else {
            local_search(states.len(), r, &fit, budget, &mut spent, &mut rng, SEARCH_RESTARTS)
        };
        if let Some((ids, f)) = found {
            let terms = ids
                .iter()
                .zip(&f.coefficients)
                .map(|(&i, &cf)| ProjectorTerm {
                    coefficient: cf,
                    state: states[i].clone(),
                })
                .collect();
            let mut d = ProjectorDecomposition::new("searched", k, terms, Source::Searched);
            d.tol = FIT_TOL;
            return Ok(Some(d));
        }
        if spent >= budget {
            break;
        }
    }
    Ok(None)
}

fn is_hit(f: &FitReport) -> bool {
    f.residual <= FIT_TOL && f.coefficients.iter().all(|c| c.norm() > FIT_TOL)
}

/// Random restarts per support size before moving on to the next size.
pub const SEARCH_RESTARTS: usize = 64;

type Hit = (Vec<usize>, FitReport);

fn local_search(
    pool: usize,
    r: usize,
    fit: &dyn Fn(&[usize]) -> FitReport,
    budget: usize,
    spent: &mut usize,
    rng: &mut ChaCha8Rng,
    restarts: usize,
) -> Option<Hit> {
    for _ in 0..restarts {
        if *spent >= budget {
            return None;
        }
        let mut ids: Vec<usize> = sample(rng, pool, r).into_vec();
        ids.sort_unstable();
        *spent += 1;
        let mut cur = fit(&ids);
        loop {
            if is_hit(&cur) {
                return Some((ids, cur));
            }
            let mut improved = false;
            let start_pos = rng.gen_range(0..r);
            let start_j = rng.gen_range(0..pool);
            'scan: for dp in 0..r {
                let pos = (start_pos + dp) % r;
                for dj in 0..pool {
                    let j = (start_j + dj) % pool;
                    if ids.contains(&j) {
                        continue;
                    }
                    if *spent >= budget {
                        return None;
                    }
                    let mut trial = ids.clone();
                    trial[pos] = j;
                    trial.sort_unstable();
                    *spent += 1;
                    let f = fit(&trial);
                    if f.residual < cur.residual - 1e-12 {
                        ids = trial;
                        cur = f;
                        improved = true;
                        break 'scan;
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    None
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn matrix_rank(m: &CMatrix) -> usize {
    let a = DMatrix::<C>::from_row_slice(m.rows, m.cols, &m.data);
    let svd = a.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count()
}

/// Parsed decomposition database.
#[derive(Clone, Debug, Default)]
pub struct Database {
    entries: Vec<Arc<ProjectorDecomposition>>,
}

impl Database {
    /// Parse the text format and verify every entry against its target.
    pub fn parse(text: &str) -> Result<Self, StabError> {
        let mut entries: Vec<ProjectorDecomposition> = Vec::new();
        let mut seen_header = false;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| StabError::Parse(format!("database line {}: {m}", ln + 1));
            if !seen_header {
                if line != DB_HEADER {
                    return Err(err(&format!("expected header '{DB_HEADER}'")));
                }
                seen_header = true;
                continue;
            }
            let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match kw {
                "gate" => {
                    let f: Vec<&str> = rest.split_whitespace().collect();
                    if f.len() != 7 || f[1] != "arity" || f[3] != "source" || f[5] != "tol" {
                        return Err(err("expected 'gate <name> arity <k> source <tag> tol <x>'"));
                    }
                    let arity: usize = f[2].parse().map_err(|_| err("bad arity"))?;
                    let source = Source::parse(f[4]).ok_or_else(|| err("unknown source tag"))?;
                    let tol: f64 = f[6].parse().map_err(|_| err("bad tolerance"))?;
                    let mut d = ProjectorDecomposition::new(f[0], arity, Vec::new(), source);
                    d.tol = tol;
                    entries.push(d);
                }
                "note" => {
                    let d = entries.last_mut().ok_or_else(|| err("note before gate"))?;
                    d.notes.push(rest.trim().to_string());
                }
                "term" => {
                    let d = entries.last_mut().ok_or_else(|| err("term before gate"))?;
                    let (coef, rest) = rest.split_once('|').ok_or_else(|| err("missing '|'"))?;
                    let (gens, pivot) = rest.split_once('@').ok_or_else(|| err("missing '@'"))?;
                    let cf: Vec<f64> = coef
                        .split_whitespace()
                        .map(|x| x.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| err("bad coefficient"))?;
                    if cf.len() != 2 {
                        return Err(err("coefficient must be '<re> <im>'"));
                    }
                    let gens: Vec<PauliOperator> = gens
                        .split_whitespace()
                        .map(|g| g.parse::<PauliOperator>())
                        .collect::<Result<_, StabError>>()
                        .map_err(|e| err(&e.to_string()))?;
                    let (bits, width) = parse_bitstring(pivot).map_err(|e| err(&e.to_string()))?;
                    if width != d.arity || gens.len() != d.arity || gens.iter().any(|g| g.num_qubits() != d.arity) {
                        return Err(err("term width does not match gate arity"));
                    }
                    let state =
                        StabilizerState::from_generators(&gens, bits).map_err(|e| err(&e.to_string()))?;
                    d.terms.push(ProjectorTerm {
                        coefficient: c(cf[0], cf[1]),
                        state,
                    });
                }
                _ => return Err(err(&format!("unknown keyword '{kw}'"))),
            }
        }
        if !seen_header {
            return Err(StabError::Parse("empty decomposition database".into()));
        }
        for d in &entries {
            let target = target_matrix(&d.name)
                .ok_or_else(|| StabError::Parse(format!("database entry '{}' has no known target", d.name)))?;
            let report = verify_decomposition(d, &target, d.tol)?;
            if !report.pass {
                return Err(StabError::Verification {
                    name: d.name.clone(),
                    error: report.max_error,
                    tol: d.tol,
                });
            }
        }
        Ok(Database {
            entries: entries.into_iter().map(Arc::new).collect(),
        })
    }

    pub fn load_file(path: &std::path::Path) -> Result<Self, StabError> {
        let text = std::fs::read_to_string(path).map_err(|e| StabError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The database compiled into the crate.
    pub fn builtin() -> &'static Database {
        static DB: OnceLock<Database> = OnceLock::new();
        DB.get_or_init(|| Database::parse(BUILTIN_DB).expect("built-in decomposition database failed verification"))
    }

    pub fn entries(&self) -> &[Arc<ProjectorDecomposition>] {
        &self.entries
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|d| d.name.as_str()).collect()
    }

    /// Look up by name; `ww` resolves to `ww_e`.
    pub fn get(&self, name: &str) -> Result<Arc<ProjectorDecomposition>, StabError> {
        let key = if name == "ww" { "ww_e" } else { name };
        self.entries
            .iter()
            .find(|d| d.name == key)
            .cloned()
            .ok_or_else(|| StabError::UnknownDecomposition(name.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{DB_HEADER}\n");
        for d in &self.entries {
            s.push('\n');
            s.push_str(&d.to_db_block());
        }
        s
    }
}

/// Entry of the built-in database.
pub fn builtin_decomposition(name: &str) -> Result<ProjectorDecomposition, StabError> {
    Database::builtin().get(name).map(|d| (*d).clone())
}

/// One term `a_j K_j` of a Sum-over-Clifford expansion. The word is applied
/// left to right on the gate's local qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordSumTerm {
    pub coefficient: C,
    pub word: Vec<(GateKind, Vec<usize>)>,
}

impl CliffordSumTerm {
    fn new(coefficient: C, word: &[(GateKind, &[usize])]) -> Self {
        CliffordSumTerm {
            coefficient,
            word: word.iter().map(|(g, q)| (*g, q.to_vec())).collect(),
        }
    }
}

/// Sum-over-Clifford expansion of `t`, `tdg`, `w`, `fsim`, `cs` or `diag_pi6`.
pub fn sum_over_clifford(name: &str) -> Result<Vec<CliffordSumTerm>, StabError> {
    use std::f64::consts::PI;
    use GateKind::*;
    let a = C::from_polar(1.0, PI / 8.0) / (2.0 * (PI / 8.0).cos());
    let ab = a.conj();
    // diag(1,1,1,e^{iφ}) = e^{iφ/2}(cos(φ/2) I − i sin(φ/2) CZ)
    let cphase = |phi: f64| {
        let g = C::from_polar(1.0, phi / 2.0);
        (g * (phi / 2.0).cos(), g * c(0.0, -(phi / 2.0).sin()))
    };
    let t = match name {
        "t" => vec![CliffordSumTerm::new(a, &[]), CliffordSumTerm::new(ab, &[(S, &[0])])],
        "tdg" => vec![CliffordSumTerm::new(ab, &[]), CliffordSumTerm::new(a, &[(Sdg, &[0])])],
        // w = T·sx·T†
        "w" => vec![
            CliffordSumTerm::new(ab * a, &[(SqrtX, &[0])]),
            CliffordSumTerm::new(a * a, &[(Sdg, &[0]), (SqrtX, &[0])]),
            CliffordSumTerm::new(ab * ab, &[(SqrtX, &[0]), (S, &[0])]),
            CliffordSumTerm::new(a * ab, &[(Sdg, &[0]), (SqrtX, &[0]), (S, &[0])]),
        ],
        "cs" => {
            let (p, q) = cphase(PI / 2.0);
            vec![CliffordSumTerm::new(p, &[]), CliffordSumTerm::new(q, &[(Cz, &[0, 1])])]
        }
        "diag_pi6" => {
            let (p, q) = cphase(PI / 6.0);
            vec![CliffordSumTerm::new(p, &[]), CliffordSumTerm::new(q, &[(Cz, &[0, 1])])]
        }
        // fsim = iswap† · diag_pi6 and iswap† = iswap·(Z⊗Z)
        "fsim" => {
            let (p, q) = cphase(PI / 6.0);
            let tail: [(GateKind, &[usize]); 3] = [(Z, &[0]), (Z, &[1]), (ISwap, &[0, 1])];
            let mut with_cz = vec![(Cz, &[0usize, 1][..])];
            with_cz.extend_from_slice(&tail);
            vec![CliffordSumTerm::new(p, &tail), CliffordSumTerm::new(q, &with_cz)]
        }
        _ => return Err(StabError::UnknownGate(name.to_string())),
    };
    Ok(t)
}

/// `Σ a_j K_j` as a dense matrix on `arity` qubits.
pub fn soc_to_dense(terms: &[CliffordSumTerm], arity: usize) -> CMatrix {
    let d = 1usize << arity;
    let mut acc = CMatrix::zeros(d, d);
    for t in terms {
        let mut m = CMatrix::identity(d);
        for (g, qs) in &t.word {
            m = crate::dense::embed(&g.matrix(), qs, arity).matmul(&m);
        }
        acc = acc.add(&m.scale(t.coefficient));
    }
    acc
}
