//! Amplitude engines: dense statevector oracle, SPIR (recursive path
//! integral over projector layers), SPC (projector contraction), SPC seeded
//! by a Sum-over-Clifford prefix, and two-patch CZ cutting on top of SPC.
//!
//! Every sum of complex doubles runs in a fixed order (term index ascending,
//! left branch before right), and parallel branches are collected before they
//! are reduced, so results are bit-identical for any thread count.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::circuit::{layerize_ops, CliffordLayer, Circuit, FusePolicy, LayeredCircuit, NonCliffordLayer, Op};
use crate::decomposition::{sum_over_clifford, CliffordSumTerm, Database, FactoredLayer, LayerProjector};
use crate::dense::{apply_to_state, basis_index, c, C};
use crate::gates::GateKind;
use crate::stabilizer::{parse_bitstring, StabilizerState, DENSE_LIMIT};
use crate::StabError;

/// Coefficients below this magnitude are dropped when pruning is on.
pub const PRUNE_TOL: f64 = 1e-12;

/// Where SPIR splits a sub-problem of depth `d ≥ 2` (1-based layer index).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SplitRule {
    /// ⌈d/2⌉ everywhere.
    #[default]
    Middle,
    /// Always the first layer.
    First,
    /// Always the last layer.
    Last,
    /// Layer `i` (1-based) at the top level, middle below.
    At(usize),
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub threads: usize,
    /// Largest number of live terms SPC may hold.
    pub mem_cap: Option<usize>,
    pub prune: bool,
    pub split: SplitRule,
    /// Skip the right branch when the left one is exactly zero.
    pub short_circuit: bool,
    /// SPIR stops with [`StabError::Budget`] once it has evaluated more
    /// inner products than this.
    pub max_inner_products: Option<u64>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            threads: 1,
            mem_cap: None,
            prune: false,
            split: SplitRule::Middle,
            short_circuit: true,
            max_inner_products: None,
        }
    }
}

impl EngineOptions {
    fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        if self.threads <= 1 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(self.threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }

    /// Map over `0..len` and collect in index order, in parallel when
    /// more than one thread is configured.
    fn map_indexed<T: Send>(&self, len: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        if self.threads <= 1 {
            (0..len).map(f).collect()
        } else {
            (0..len).into_par_iter().map(f).collect()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExecutionTrace {
    pub inner_product_count: u64,
    pub leaf_count: u64,
    pub max_live_terms: usize,
    pub wall_time: Duration,
    /// SPIR: sub-problems entered at each recursion level.
    pub branch_counts: Vec<u64>,
    /// SPC: live terms after each non-Clifford layer.
    pub live_terms: Vec<usize>,
    /// SPC-SoC: Clifford-sum term count after each layer handled in
    /// Sum-over-Clifford mode.
    pub soc_terms: Vec<usize>,
    /// SPC-SoC: layer where the projector step took over, and the term count
    /// the Sum-over-Clifford expansion would have reached there.
    pub switch_layer: Option<usize>,
    pub switch_would_be: Option<usize>,
    /// Cutting: patched configurations enumerated.
    pub configurations: usize,
    /// Rough peak bytes of live stabilizer terms.
    pub peak_bytes: usize,
}

impl ExecutionTrace {
    fn absorb(&mut self, o: &ExecutionTrace) {
        self.inner_product_count += o.inner_product_count;
        self.leaf_count += o.leaf_count;
        self.max_live_terms = self.max_live_terms.max(o.max_live_terms);
        self.peak_bytes = self.peak_bytes.max(o.peak_bytes);
        if self.branch_counts.len() < o.branch_counts.len() {
            self.branch_counts.resize(o.branch_counts.len(), 0);
        }
        for (a, b) in self.branch_counts.iter_mut().zip(&o.branch_counts) {
            *a += b;
        }
    }
}

fn state_bytes(n: usize) -> usize {
    std::mem::size_of::<StabilizerState>() + n * std::mem::size_of::<crate::PauliOperator>()
}

fn target_bits(n: usize, x: &str) -> Result<u64, StabError> {
    let (bits, width) = parse_bitstring(x)?;
    if width != n {
        return Err(StabError::Usage(format!("bitstring '{x}' has {width} bits, circuit has {n} qubits")));
    }
    Ok(bits)
}

/// `U|0^n⟩` by statevector evolution.
pub fn statevector(circuit: &Circuit) -> Result<Vec<C>, StabError> {
    let n = circuit.n;
    if n > DENSE_LIMIT {
        return Err(StabError::TooLarge { n, limit: DENSE_LIMIT });
    }
    let mut psi = vec![c(0.0, 0.0); 1 << n];
    psi[0] = c(1.0, 0.0);
    for g in &circuit.gates {
        apply_to_state(&mut psi, n, &g.matrix(), &g.qubits);
    }
    Ok(psi)
}

/// `⟨x|U|0^n⟩` by statevector evolution.
pub fn amplitude_dense(circuit: &Circuit, x: &str) -> Result<C, StabError> {
    let bits = target_bits(circuit.n, x)?;
    Ok(statevector(circuit)?[basis_index(bits, circuit.n)])
}

fn check_kappa(layered: &LayeredCircuit) -> Result<(), StabError> {
    for (j, l) in layered.layers.iter().enumerate() {
        if l.kappa().is_none() {
            return Err(StabError::Capacity {
                layer: j,
                kappa: format!("2^{:.2}", l.kappa_log2()),
                cap: usize::MAX,
            });
        }
    }
    Ok(())
}

struct Spir<'a> {
    lc: &'a LayeredCircuit,
    opts: &'a EngineOptions,
    projectors: Vec<LayerProjector>,
    spent: AtomicU64,
}

impl Spir<'_> {
    fn charge(&self, k: u64) -> Result<(), StabError> {
        if let Some(cap) = self.opts.max_inner_products {
            let used = self.spent.fetch_add(k, Ordering::Relaxed) + k;
            if used > cap {
                return Err(StabError::Budget { cap });
            }
        }
        Ok(())
    }

    fn split(&self, d: usize, level: usize) -> usize {
        match self.opts.split {
            SplitRule::Middle => d.div_ceil(2),
            SplitRule::First => 1,
            SplitRule::Last => d,
            SplitRule::At(i) if level == 0 => i.clamp(1, d),
            SplitRule::At(_) => d.div_ceil(2),
        }
    }

    /// `⟨β| C_b N_{b-1} … N_a C_a |α⟩`.
    fn solve(
        &self,
        beta: &StabilizerState,
        alpha: &StabilizerState,
        a: usize,
        b: usize,
        level: usize,
        tr: &mut ExecutionTrace,
    ) -> Result<C, StabError> {
        if tr.branch_counts.len() <= level {
            tr.branch_counts.push(0);
        }
        tr.branch_counts[level] += 1;
        let cl = &self.lc.cliffords;
        match b - a {
            0 => {
                self.charge(1)?;
                tr.leaf_count += 1;
                tr.inner_product_count += 1;
                let ap = cl[a].apply(alpha)?;
                Ok(StabilizerState::inner_product(beta, &ap)?.to_complex())
            }
            1 => {
                tr.leaf_count += 1;
                let ap = cl[a].apply(alpha)?;
                let bp = cl[a + 1].apply_adjoint(beta)?;
                self.base(a, &bp, &ap, tr)
            }
            d => {
                let j = a + self.split(d, level) - 1;
                let layer = &self.lc.layers[j].decomposition;
                let kappa = layer.kappa().unwrap();
                let branch = |i: usize| -> Result<(C, ExecutionTrace), StabError> {
                    let mut t = ExecutionTrace::default();
                    t.branch_counts.resize(level + 1, 0);
                    let (ci, phi) = layer.term(i);
                    let left = self.solve(&phi, alpha, a, j, level + 1, &mut t)?;
                    if self.opts.short_circuit && left == c(0.0, 0.0) {
                        return Ok((c(0.0, 0.0), t));
                    }
                    let right = self.solve(beta, &phi, j + 1, b, level + 1, &mut t)?;
                    Ok((ci * left * right, t))
                };
                let mut acc = c(0.0, 0.0);
                if level == 0 {
                    for r in self.opts.map_indexed(kappa, branch) {
                        let (v, t) = r?;
                        acc += v;
                        tr.absorb(&t);
                    }
                } else {
                    for i in 0..kappa {
                        let (v, t) = branch(i)?;
                        acc += v;
                        tr.absorb(&t);
                    }
                }
                Ok(acc)
            }
        }
    }

    /// `Σ_i c_i ⟨β'|φ_i⟩⟨φ_i|α'⟩`, one inner-product evaluation per term.
    fn base(
        &self,
        layer_index: usize,
        bp: &StabilizerState,
        ap: &StabilizerState,
        tr: &mut ExecutionTrace,
    ) -> Result<C, StabError> {
        let dec = &self.lc.layers[layer_index].decomposition;
        let kappa = dec.kappa().unwrap();
        self.charge(kappa as u64)?;
        tr.inner_product_count += kappa as u64;
        let mut acc = c(0.0, 0.0);
        if dec.is_basis() {
            for i in 0..kappa {
                let (ci, y) = dec.basis_term(i);
                let r = ap.amplitude(y);
                if r.is_zero() {
                    continue;
                }
                let l = bp.amplitude(y).conj();
                acc += ci * l.to_complex() * r.to_complex();
            }
        } else {
            let proj = &self.projectors[layer_index];
            proj.visit(&[ap.clone(), bp.clone()], |_, ci, ov| {
                acc += ci * ov[1].conj().to_complex() * ov[0].to_complex();
            })?;
        }
        Ok(acc)
    }
}

/// `⟨x|U|0^n⟩` by recursion over the non-Clifford layers.
pub fn amplitude_spir(layered: &LayeredCircuit, x: &str, opts: &EngineOptions) -> Result<(C, ExecutionTrace), StabError> {
    let start = Instant::now();
    let n = layered.n;
    let bits = target_bits(n, x)?;
    check_kappa(layered)?;
    let spir = Spir {
        lc: layered,
        opts,
        projectors: layered.layers.iter().map(|l| LayerProjector::new(&l.decomposition)).collect(),
        spent: AtomicU64::new(0),
    };
    let mut tr = ExecutionTrace::default();
    let beta = StabilizerState::basis(n, bits);
    let alpha = StabilizerState::zero_state(n);
    let v = opts.run(|| spir.solve(&beta, &alpha, 0, layered.d_nc(), 0, &mut tr))?;
    tr.max_live_terms = layered.d_nc().max(1);
    tr.peak_bytes = (2 + layered.d_nc()) * state_bytes(n);
    tr.wall_time = start.elapsed();
    Ok((v, tr))
}

/// Weighted sum of stabilizer states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StabilizerSum {
    pub n: usize,
    pub terms: Vec<(C, StabilizerState)>,
}

impl StabilizerSum {
    pub fn amplitude(&self, bits: u64) -> C {
        self.terms
            .iter()
            .map(|(a, s)| *a * s.amplitude(bits).to_complex())
            .fold(c(0.0, 0.0), |acc, v| acc + v)
    }

    /// `Σ_ij conj(c_i) c_j ⟨φ_i|φ_j⟩`, the squared norm.
    pub fn gram_sum(&self) -> Result<C, StabError> {
        let mut acc = c(0.0, 0.0);
        for (ci, si) in &self.terms {
            for (cj, sj) in &self.terms {
                acc += ci.conj() * *cj * StabilizerState::inner_product(si, sj)?.to_complex();
            }
        }
        Ok(acc)
    }

    pub fn to_dense(&self) -> Result<Vec<C>, StabError> {
        let mut out = vec![c(0.0, 0.0); 1 << self.n];
        for (a, s) in &self.terms {
            for (o, v) in out.iter_mut().zip(s.to_dense()?) {
                *o += *a * v;
            }
        }
        Ok(out)
    }
}

/// `c_i Σ_k a_k ⟨φ_i|ψ_k⟩` for every term of a factored layer. The input
/// terms are split into a fixed number of blocks, so the summation order does
/// not depend on the thread count.
fn projected_coefficients(
    sum: &StabilizerSum,
    dec: &FactoredLayer,
    kappa: usize,
    opts: &EngineOptions,
) -> Result<Vec<C>, StabError> {
    const BLOCKS: usize = 8;
    let proj = LayerProjector::new(dec);
    let size = sum.terms.len().div_ceil(BLOCKS).max(1);
    let blocks = sum.terms.len().div_ceil(size);
    let partial = opts.map_indexed(blocks, |b| -> Result<Vec<C>, StabError> {
        let mut acc = vec![c(0.0, 0.0); kappa];
        for (a, psi) in &sum.terms[b * size..((b + 1) * size).min(sum.terms.len())] {
            proj.visit(std::slice::from_ref(psi), |i, ci, ov| acc[i] += ci * *a * ov[0].to_complex())?;
        }
        Ok(acc)
    });
    let mut total = vec![c(0.0, 0.0); kappa];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p?) {
            *t += v;
        }
    }
    Ok(total)
}

/// Project a sum onto one non-Clifford layer: term i becomes
/// `c_i Σ_k a_k ⟨φ_i|ψ_k⟩ |φ_i⟩`, then `next` is applied to it.
fn projector_step(
    sum: &StabilizerSum,
    layer: &NonCliffordLayer,
    next: &CliffordLayer,
    j: usize,
    opts: &EngineOptions,
    tr: &mut ExecutionTrace,
) -> Result<StabilizerSum, StabError> {
    let dec = &layer.decomposition;
    let kappa = dec.kappa().ok_or_else(|| StabError::Capacity {
        layer: j,
        kappa: format!("2^{:.2}", dec.kappa_log2()),
        cap: opts.mem_cap.unwrap_or(usize::MAX),
    })?;
    if let Some(cap) = opts.mem_cap {
        if kappa > cap {
            return Err(StabError::Capacity {
                layer: j,
                kappa: kappa.to_string(),
                cap,
            });
        }
    }
    let coefs = if dec.is_basis() {
        opts.map_indexed(kappa, |i| {
            let (ci, y) = dec.basis_term(i);
            let mut acc = c(0.0, 0.0);
            for (a, psi) in &sum.terms {
                let ip = psi.amplitude(y);
                if !ip.is_zero() {
                    acc += *a * ip.to_complex();
                }
            }
            ci * acc
        })
    } else {
        projected_coefficients(sum, dec, kappa, opts)?
    };
    let keep: Vec<usize> = (0..kappa)
        .filter(|&i| !opts.prune || coefs[i].norm() >= PRUNE_TOL)
        .collect();
    let terms = opts.map_indexed(keep.len(), |t| -> Result<(C, StabilizerState), StabError> {
        let i = keep[t];
        let phi = if dec.is_basis() {
            StabilizerState::basis(sum.n, dec.basis_term(i).1)
        } else {
            dec.term(i).1
        };
        Ok((coefs[i], next.apply(&phi)?))
    });
    tr.inner_product_count += (kappa * sum.terms.len()) as u64;
    let terms: Vec<(C, StabilizerState)> = terms.into_iter().collect::<Result<_, _>>()?;
    tr.live_terms.push(terms.len());
    tr.max_live_terms = tr.max_live_terms.max(terms.len());
    tr.peak_bytes = tr.peak_bytes.max((terms.len() + sum.terms.len()) * state_bytes(sum.n));
    Ok(StabilizerSum { n: sum.n, terms })
}

fn spc_from(
    layered: &LayeredCircuit,
    mut sum: StabilizerSum,
    first: usize,
    opts: &EngineOptions,
    tr: &mut ExecutionTrace,
) -> Result<StabilizerSum, StabError> {
    for j in first..layered.d_nc() {
        sum = projector_step(&sum, &layered.layers[j], &layered.cliffords[j + 1], j, opts, tr)?;
    }
    Ok(sum)
}

/// Evolve `|0^n⟩` through the layered circuit as a sum of κ_j stabilizer
/// states per layer.
pub fn evolve_spc(layered: &LayeredCircuit, opts: &EngineOptions) -> Result<(StabilizerSum, ExecutionTrace), StabError> {
    let start = Instant::now();
    let n = layered.n;
    let mut tr = ExecutionTrace::default();
    let psi0 = layered.cliffords[0].apply(&StabilizerState::zero_state(n))?;
    let sum = StabilizerSum {
        n,
        terms: vec![(c(1.0, 0.0), psi0)],
    };
    tr.max_live_terms = 1;
    let out = opts.run(|| spc_from(layered, sum, 0, opts, &mut tr))?;
    tr.wall_time = start.elapsed();
    Ok((out, tr))
}

pub fn amplitude_spc(layered: &LayeredCircuit, x: &str, opts: &EngineOptions) -> Result<(C, ExecutionTrace), StabError> {
    let bits = target_bits(layered.n, x)?;
    let (sum, mut tr) = evolve_spc(layered, opts)?;
    tr.inner_product_count += sum.terms.len() as u64;
    Ok((sum.amplitude(bits), tr))
}

/// Expand one layer in Sum-over-Clifford form: every non-Clifford part gate
/// multiplies the term count by its expansion rank.
fn soc_layer(
    sum: &StabilizerSum,
    layer: &NonCliffordLayer,
    next: &CliffordLayer,
    expansions: &[Vec<(Vec<CliffordSumTerm>, Vec<usize>)>],
) -> Result<StabilizerSum, StabError> {
    let mut terms = sum.terms.clone();
    for (g, exps) in layer.gates.iter().zip(expansions) {
        for (part, (exp, qs)) in g.parts.iter().zip(exps) {
            if part.is_clifford() {
                terms = terms
                    .into_iter()
                    .map(|(a, s)| Ok((a, s.apply_clifford(part.kind, &part.qubits)?)))
                    .collect::<Result<_, StabError>>()?;
                continue;
            }
            let mut out = Vec::with_capacity(terms.len() * exp.len());
            for (a, s) in &terms {
                for t in exp {
                    let word: Vec<(GateKind, Vec<usize>)> =
                        t.word.iter().map(|(k, l)| (*k, l.iter().map(|&i| qs[i]).collect())).collect();
                    out.push((*a * t.coefficient, s.apply_word(&word)?));
                }
            }
            terms = out;
        }
    }
    let terms = terms
        .into_iter()
        .map(|(a, s)| Ok((a, next.apply(&s)?)))
        .collect::<Result<_, StabError>>()?;
    Ok(StabilizerSum { n: sum.n, terms })
}

/// Sum-over-Clifford evolution until the term count would exceed the next
/// layer's κ, then projector contraction for the remaining layers.
pub fn amplitude_spc_soc(layered: &LayeredCircuit, x: &str, opts: &EngineOptions) -> Result<(C, ExecutionTrace), StabError> {
    let start = Instant::now();
    let n = layered.n;
    let bits = target_bits(n, x)?;
    let mut tr = ExecutionTrace::default();
    let psi0 = layered.cliffords[0].apply(&StabilizerState::zero_state(n))?;
    let mut sum = StabilizerSum {
        n,
        terms: vec![(c(1.0, 0.0), psi0)],
    };
    tr.max_live_terms = 1;
    let mut j = 0;
    while j < layered.d_nc() {
        let layer = &layered.layers[j];
        let mut exps = Vec::with_capacity(layer.gates.len());
        let mut grow: usize = 1;
        for g in &layer.gates {
            let mut e = Vec::with_capacity(g.parts.len());
            for p in &g.parts {
                if p.is_clifford() {
                    e.push((Vec::new(), p.qubits.clone()));
                } else {
                    let exp = sum_over_clifford(p.name())?;
                    grow = grow.saturating_mul(exp.len());
                    e.push((exp, p.qubits.clone()));
                }
            }
            exps.push(e);
        }
        let would_be = sum.terms.len().saturating_mul(grow);
        let kappa = layer.kappa().unwrap_or(usize::MAX);
        if would_be > kappa {
            tr.switch_layer = Some(j);
            tr.switch_would_be = Some(would_be);
            break;
        }
        if let Some(cap) = opts.mem_cap {
            if would_be > cap {
                return Err(StabError::Capacity {
                    layer: j,
                    kappa: would_be.to_string(),
                    cap,
                });
            }
        }
        sum = soc_layer(&sum, layer, &layered.cliffords[j + 1], &exps)?;
        tr.soc_terms.push(sum.terms.len());
        tr.max_live_terms = tr.max_live_terms.max(sum.terms.len());
        j += 1;
    }
    let sum = opts.run(|| spc_from(layered, sum, j, opts, &mut tr))?;
    tr.inner_product_count += sum.terms.len() as u64;
    tr.wall_time = start.elapsed();
    Ok((sum.amplitude(bits), tr))
}

/// Two-patch partition with the cross-patch CZ gates to cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutPlan {
    /// `true` for qubits in patch A.
    pub in_a: Vec<bool>,
    /// Indices into the circuit's gate list.
    pub cut_gates: Vec<usize>,
}

impl CutPlan {
    pub fn cut_count(&self) -> usize {
        self.cut_gates.len()
    }

    /// Patch A is qubits `0..k`; every cross gate is cut.
    pub fn contiguous(circuit: &Circuit, k: usize) -> Self {
        let in_a: Vec<bool> = (0..circuit.n).map(|q| q < k).collect();
        let cut_gates = circuit
            .gates
            .iter()
            .enumerate()
            .filter(|(_, g)| crossing(&in_a, &g.qubits))
            .map(|(i, _)| i)
            .collect();
        CutPlan { in_a, cut_gates }
    }

    /// Contiguous split with both patches non-empty and every cross gate a
    /// CZ, minimizing the cut count (ties to the most balanced split).
    pub fn best_contiguous(circuit: &Circuit) -> Option<Self> {
        let n = circuit.n;
        (1..n)
            .map(|k| CutPlan::contiguous(circuit, k))
            .filter(|p| p.cut_gates.iter().all(|&i| circuit.gates[i].kind == GateKind::Cz))
            .min_by_key(|p| {
                let a = p.in_a.iter().filter(|&&b| b).count();
                (p.cut_count(), a.abs_diff(n - a))
            })
    }

    pub fn validate(&self, circuit: &Circuit) -> Result<(), StabError> {
        if self.in_a.len() != circuit.n {
            return Err(StabError::Usage(format!(
                "partition covers {} qubits, circuit has {}",
                self.in_a.len(),
                circuit.n
            )));
        }
        if self.in_a.iter().all(|&b| b) || self.in_a.iter().all(|&b| !b) {
            return Err(StabError::Usage("both patches must be non-empty".into()));
        }
        let mut seen = vec![false; circuit.gates.len()];
        for &i in &self.cut_gates {
            let g = circuit
                .gates
                .get(i)
                .ok_or_else(|| StabError::Usage(format!("cut gate index {i} out of range")))?;
            if seen[i] {
                return Err(StabError::Usage(format!("cut gate {i} listed twice")));
            }
            seen[i] = true;
            if g.kind != GateKind::Cz || !crossing(&self.in_a, &g.qubits) {
                return Err(StabError::Unsupported(format!("gate {i} ({g}) is not a cross-patch cz")));
            }
        }
        for (i, g) in circuit.gates.iter().enumerate() {
            if crossing(&self.in_a, &g.qubits) && !seen[i] {
                return Err(StabError::Unsupported(format!("cross-patch gate {i} ({g}) is not in the cut list")));
            }
        }
        Ok(())
    }
}

fn crossing(in_a: &[bool], qubits: &[usize]) -> bool {
    qubits.iter().any(|&q| in_a[q]) && qubits.iter().any(|&q| !in_a[q])
}

/// Amplitude as a sum over the 2^x cut assignments of products of patch
/// amplitudes, each patch evaluated with SPC. Assignments run in
/// lexicographic order, first cut gate most significant.
pub fn amplitude_cut_hybrid(
    circuit: &Circuit,
    plan: &CutPlan,
    x: &str,
    opts: &EngineOptions,
) -> Result<(C, ExecutionTrace), StabError> {
    amplitude_cut_hybrid_with(circuit, plan, x, opts, Database::builtin())
}

/// [`amplitude_cut_hybrid`] with patch layers resolved against `db`.
pub fn amplitude_cut_hybrid_with(
    circuit: &Circuit,
    plan: &CutPlan,
    x: &str,
    opts: &EngineOptions,
    db: &Database,
) -> Result<(C, ExecutionTrace), StabError> {
    let start = Instant::now();
    plan.validate(circuit)?;
    let bits = target_bits(circuit.n, x)?;
    let cuts = plan.cut_count();
    if cuts >= 63 {
        return Err(StabError::Usage(format!("{cuts} cut gates is too many")));
    }
    let mut local = vec![0usize; circuit.n];
    let (mut na, mut nb) = (0, 0);
    let mut xa = String::new();
    let mut xb = String::new();
    for q in 0..circuit.n {
        let ch = if (bits >> q) & 1 == 1 { '1' } else { '0' };
        if plan.in_a[q] {
            local[q] = na;
            na += 1;
            xa.push(ch);
        } else {
            local[q] = nb;
            nb += 1;
            xb.push(ch);
        }
    }
    let mut tr = ExecutionTrace::default();
    let mut acc = c(0.0, 0.0);
    for assignment in 0..(1u64 << cuts) {
        let mut ops_a = Vec::new();
        let mut ops_b = Vec::new();
        let mut k = 0;
        for (i, g) in circuit.gates.iter().enumerate() {
            if plan.cut_gates.contains(&i) {
                let b = ((assignment >> (cuts - 1 - k)) & 1) as u8;
                k += 1;
                let (qa, qb) = if plan.in_a[g.qubits[0]] {
                    (g.qubits[0], g.qubits[1])
                } else {
                    (g.qubits[1], g.qubits[0])
                };
                ops_a.push(Op::Project(local[qa], b));
                if b == 1 {
                    ops_b.push(Op::Gate(crate::circuit::Gate::new(GateKind::Z, vec![local[qb]])));
                }
                continue;
            }
            let mapped = crate::circuit::Gate::new(g.kind, g.qubits.iter().map(|&q| local[q]).collect());
            if plan.in_a[g.qubits[0]] {
                ops_a.push(Op::Gate(mapped));
            } else {
                ops_b.push(Op::Gate(mapped));
            }
        }
        let la = layerize_ops(na, &ops_a, FusePolicy::Composite, db)?;
        let lb = layerize_ops(nb, &ops_b, FusePolicy::Composite, db)?;
        let (va, ta) = amplitude_spc(&la, &xa, opts)?;
        let (vb, tb) = amplitude_spc(&lb, &xb, opts)?;
        tr.absorb(&ta);
        tr.absorb(&tb);
        tr.configurations += 1;
        acc += va * vb;
    }
    tr.wall_time = start.elapsed();
    Ok((acc, tr))
}
