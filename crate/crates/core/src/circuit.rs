//! Circuits, the `.sqc` text format, Clifford/non-Clifford layering and the
//! random ensembles.
//!
//! Ensembles draw from `ChaCha8Rng` (rand_chacha), seeded with
//! `seed_from_u64(seed)`; qubit `q` uses stream `q`. Integer draws are made
//! over `u32` ranges so the sequence does not depend on the platform's
//! pointer width.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::{
    search_decomposition, target_matrix, Database, DiagonalFactor, FactoredLayer, LayerFactor,
    ProjectorDecomposition,
};
use crate::dense::{embed, CMatrix};
use crate::gates::GateKind;
use crate::pauli::PauliOperator;
use crate::stabilizer::{check_qubits, StabilizerState};
use crate::StabError;

/// Tolerance for matching a fused matrix against database targets.
const MATCH_TOL: f64 = 1e-10;
/// Least-squares budget for the runtime search fallback.
const FALLBACK_BUDGET: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Self {
        Gate { kind, qubits }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn is_clifford(&self) -> bool {
        self.kind.is_clifford()
    }

    pub fn is_diagonal(&self) -> bool {
        self.kind.is_diagonal()
    }

    /// Fixed parameters: fsim carries (θ, φ) = (π/2, π/6), the rest none.
    pub fn params(&self) -> &'static [f64] {
        const FSIM: [f64; 2] = [std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_6];
        match self.kind {
            GateKind::FSim => &FSIM,
            _ => &[],
        }
    }

    pub fn matrix(&self) -> CMatrix {
        self.kind.matrix()
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

/// An `n`-qubit gate list. `barriers` holds gate indices before which a layer
/// boundary is forced (sorted, may repeat).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<Gate>,
    pub barriers: Vec<usize>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit {
            n,
            gates: Vec::new(),
            barriers: Vec::new(),
        }
    }

    pub fn push(&mut self, kind: GateKind, qubits: &[usize]) -> Result<(), StabError> {
        check_qubits(self.n, kind.arity(), qubits)?;
        self.gates.push(Gate::new(kind, qubits.to_vec()));
        Ok(())
    }

    pub fn barrier(&mut self) {
        self.barriers.push(self.gates.len());
    }

    pub fn t_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.is_clifford()).count()
    }

    fn ops(&self) -> Vec<Op> {
        let mut out = Vec::with_capacity(self.gates.len() + self.barriers.len());
        let mut b = self.barriers.iter().peekable();
        for (i, g) in self.gates.iter().enumerate() {
            while b.next_if(|&&j| j == i).is_some() {
                out.push(Op::Barrier);
            }
            out.push(Op::Gate(g.clone()));
        }
        out.extend(b.map(|_| Op::Barrier));
        out
    }
}

/// Parse the `.sqc` format.
pub fn parse(text: &str) -> Result<Circuit, StabError> {
    let mut circ: Option<Circuit> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| StabError::Parse(format!("line {}: {m}", ln + 1));
        let mut f = line.split_whitespace();
        let kw = f.next().unwrap();
        match (kw, circ.as_mut()) {
            ("qubits", None) => {
                let n: usize = f
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("expected 'qubits <N>'".into()))?;
                if f.next().is_some() {
                    return Err(err("trailing tokens after qubit count".into()));
                }
                if n == 0 || n > crate::pauli::MAX_QUBITS {
                    return Err(err(format!("qubit count {n} outside 1..={}", crate::pauli::MAX_QUBITS)));
                }
                circ = Some(Circuit::new(n));
            }
            ("qubits", Some(_)) => return Err(err("duplicate 'qubits' header".into())),
            (_, None) => return Err(err("expected 'qubits <N>' header first".into())),
            ("gate", Some(c)) => {
                let name = f.next().ok_or_else(|| err("missing gate name".into()))?;
                let kind: GateKind = name.parse().map_err(|e: StabError| err(e.to_string()))?;
                let qubits: Vec<usize> = f
                    .map(|s| s.parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err("qubit indices must be non-negative integers".into()))?;
                c.push(kind, &qubits).map_err(|e| err(e.to_string()))?;
            }
            ("barrier", Some(c)) => {
                if f.next().is_some() {
                    return Err(err("'barrier' takes no arguments".into()));
                }
                c.barrier();
            }
            (other, Some(_)) => return Err(err(format!("unknown keyword '{other}'"))),
        }
    }
    circ.ok_or_else(|| StabError::Parse("missing 'qubits <N>' header".into()))
}

pub fn serialize(circuit: &Circuit) -> String {
    let mut s = format!("qubits {}\n", circuit.n);
    for op in circuit.ops() {
        match op {
            Op::Gate(g) => s.push_str(&format!("gate {g}\n")),
            Op::Barrier => s.push_str("barrier\n"),
            Op::Project(..) => unreachable!(),
        }
    }
    s
}

impl FromStr for Circuit {
    type Err = StabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Layering input: circuit gates, barriers, and the computational-basis
/// projections that circuit cutting inserts.
#[derive(Clone, Debug)]
pub(crate) enum Op {
    Gate(Gate),
    Project(usize, u8),
    Barrier,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CliffordOp {
    Gate(Gate),
    /// `|bit⟩⟨bit|` on one qubit.
    Project { qubit: usize, bit: u8 },
}

impl CliffordOp {
    pub fn qubits(&self) -> &[usize] {
        match self {
            CliffordOp::Gate(g) => &g.qubits,
            CliffordOp::Project { qubit, .. } => std::slice::from_ref(qubit),
        }
    }

    fn apply(&self, s: &StabilizerState) -> Result<StabilizerState, StabError> {
        match self {
            CliffordOp::Gate(g) => s.apply_clifford(g.kind, &g.qubits),
            CliffordOp::Project { qubit, bit } => {
                s.project_pauli(&PauliOperator::z_on(s.num_qubits(), *qubit), if *bit == 0 { 1 } else { -1 })
            }
        }
    }

    fn apply_inverse(&self, s: &StabilizerState) -> Result<StabilizerState, StabError> {
        match self {
            CliffordOp::Gate(g) => s.apply_clifford_inverse(g.kind, &g.qubits),
            CliffordOp::Project { .. } => self.apply(s),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CliffordLayer {
    pub ops: Vec<CliffordOp>,
}

impl CliffordLayer {
    pub fn apply(&self, s: &StabilizerState) -> Result<StabilizerState, StabError> {
        let mut out = s.clone();
        for op in &self.ops {
            out = op.apply(&out)?;
        }
        Ok(out)
    }

    /// `C† |s⟩`.
    pub fn apply_adjoint(&self, s: &StabilizerState) -> Result<StabilizerState, StabError> {
        let mut out = s.clone();
        for op in self.ops.iter().rev() {
            out = op.apply_inverse(&out)?;
        }
        Ok(out)
    }
}

/// Fused non-Clifford gate: `parts` in time order acting on `qubits`, whose
/// order is the local qubit order of `factor`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeGate {
    pub qubits: Vec<usize>,
    pub parts: Vec<Gate>,
    pub factor: LayerFactor,
}

impl CompositeGate {
    pub fn is_diagonal(&self) -> bool {
        self.parts.iter().all(|g| g.is_diagonal())
    }

    /// Product of the parts on the local qubits.
    pub fn matrix(&self) -> CMatrix {
        composite_matrix(&self.qubits, &self.parts)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonCliffordLayer {
    pub gates: Vec<CompositeGate>,
    pub decomposition: FactoredLayer,
}

impl NonCliffordLayer {
    fn new(n: usize, gates: Vec<CompositeGate>) -> Result<Self, StabError> {
        let decomposition = FactoredLayer::new(n, gates.iter().map(|g| (g.factor.clone(), g.qubits.clone())).collect())?;
        Ok(NonCliffordLayer { gates, decomposition })
    }

    pub fn kappa(&self) -> Option<usize> {
        self.decomposition.kappa()
    }

    pub fn kappa_log2(&self) -> f64 {
        self.decomposition.kappa_log2()
    }

    pub fn is_diagonal(&self) -> bool {
        self.gates.iter().all(|g| g.is_diagonal())
    }
}

/// `cliffords[0] layers[0] cliffords[1] ... layers[d-1] cliffords[d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredCircuit {
    pub n: usize,
    pub cliffords: Vec<CliffordLayer>,
    pub layers: Vec<NonCliffordLayer>,
}

impl LayeredCircuit {
    pub fn d_nc(&self) -> usize {
        self.layers.len()
    }

    /// Per-layer κ; `None` where it overflows `usize`.
    pub fn kappas(&self) -> Vec<Option<usize>> {
        self.layers.iter().map(|l| l.kappa()).collect()
    }

    /// Gates in layer order, with cut projections kept as ops.
    pub fn flatten(&self) -> Vec<CliffordOpOrGate> {
        let mut out = Vec::new();
        for (i, c) in self.cliffords.iter().enumerate() {
            if i > 0 {
                for g in &self.layers[i - 1].gates {
                    out.extend(g.parts.iter().cloned().map(CliffordOpOrGate::Gate));
                }
            }
            for op in &c.ops {
                out.push(match op {
                    CliffordOp::Gate(g) => CliffordOpOrGate::Gate(g.clone()),
                    CliffordOp::Project { qubit, bit } => CliffordOpOrGate::Project(*qubit, *bit),
                });
            }
        }
        out
    }

    /// Dense operator of the layered circuit (n ≤ 10).
    pub fn to_dense(&self) -> Result<CMatrix, StabError> {
        if self.n > 10 {
            return Err(StabError::TooLarge { n: self.n, limit: 10 });
        }
        let mut u = CMatrix::identity(1 << self.n);
        for (i, c) in self.cliffords.iter().enumerate() {
            if i > 0 {
                for g in &self.layers[i - 1].gates {
                    u = embed(&g.matrix(), &g.qubits, self.n).matmul(&u);
                }
            }
            for op in &c.ops {
                let m = match op {
                    CliffordOp::Gate(g) => embed(&g.matrix(), &g.qubits, self.n),
                    CliffordOp::Project { qubit, bit } => {
                        let mut p = CMatrix::zeros(2, 2);
                        p.set(*bit as usize, *bit as usize, crate::dense::c(1.0, 0.0));
                        embed(&p, &[*qubit], self.n)
                    }
                };
                u = m.matmul(&u);
            }
        }
        Ok(u)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CliffordOpOrGate {
    Gate(Gate),
    Project(usize, u8),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FusePolicy {
    /// Every non-Clifford gate is its own composite.
    Separate,
    /// Overlapping gates of one step fuse when the product is diagonal or has
    /// a database entry.
    #[default]
    Composite,
}

fn composite_matrix(qubits: &[usize], parts: &[Gate]) -> CMatrix {
    let k = qubits.len();
    let mut u = CMatrix::identity(1 << k);
    for g in parts {
        let local: Vec<usize> = g
            .qubits
            .iter()
            .map(|q| qubits.iter().position(|x| x == q).expect("part outside composite"))
            .collect();
        u = embed(&g.matrix(), &local, k).matmul(&u);
    }
    u
}

struct Resolver {
    targets: Vec<(Arc<ProjectorDecomposition>, CMatrix)>,
    searched: HashMap<String, Arc<ProjectorDecomposition>>,
}

impl Resolver {
    fn new(db: &Database) -> Self {
        let targets = db
            .entries()
            .iter()
            .filter_map(|d| target_matrix(&d.name).map(|m| (d.clone(), m)))
            .collect();
        Resolver {
            targets,
            searched: HashMap::new(),
        }
    }

    /// Database entry for `m` on `k` qubits; `true` if it matches with the
    /// two qubits swapped.
    fn lookup(&self, m: &CMatrix, k: usize) -> Option<(Arc<ProjectorDecomposition>, bool)> {
        for (d, t) in &self.targets {
            if d.arity != k {
                continue;
            }
            if t.max_abs_diff(m) <= MATCH_TOL {
                return Some((d.clone(), false));
            }
            if k == 2 && t.max_abs_diff(&m.permute_qubits(&[1, 0])) <= MATCH_TOL {
                return Some((d.clone(), true));
            }
        }
        None
    }

    fn can_fuse(&self, qubits: &[usize], parts: &[Gate]) -> bool {
        parts.iter().all(|g| g.is_diagonal())
            || (qubits.len() <= 2 && self.lookup(&composite_matrix(qubits, parts), qubits.len()).is_some())
    }

    fn resolve(&mut self, mut qubits: Vec<usize>, parts: Vec<Gate>) -> Result<CompositeGate, StabError> {
        qubits.sort_unstable();
        if parts.iter().all(|g| g.is_diagonal()) {
            let factor = DiagonalFactor {
                arity: qubits.len(),
                parts: parts
                    .iter()
                    .map(|g| {
                        let local = g.qubits.iter().map(|q| qubits.binary_search(q).unwrap()).collect();
                        (g.matrix().diag(), local)
                    })
                    .collect(),
            };
            return Ok(CompositeGate {
                qubits,
                parts,
                factor: LayerFactor::Diagonal(factor),
            });
        }
        let m = composite_matrix(&qubits, &parts);
        let k = qubits.len();
        if let Some((d, swapped)) = self.lookup(&m, k) {
            if swapped {
                qubits.reverse();
            }
            return Ok(CompositeGate {
                qubits,
                parts,
                factor: LayerFactor::Terms(d),
            });
        }
        if m.is_diagonal(1e-12) {
            let factor = DiagonalFactor {
                arity: k,
                parts: vec![(m.diag(), (0..k).collect())],
            };
            return Ok(CompositeGate {
                qubits,
                parts,
                factor: LayerFactor::Diagonal(factor),
            });
        }
        let names: Vec<String> = parts.iter().map(|g| g.to_string()).collect();
        if k > 2 {
            return Err(StabError::Unsupported(format!(
                "no decomposition for non-diagonal {k}-qubit composite [{}]",
                names.join(", ")
            )));
        }
        let key = format!("{:?}|{}", qubits, names.join(";"));
        if let Some(d) = self.searched.get(&key) {
            return Ok(CompositeGate {
                qubits,
                parts,
                factor: LayerFactor::Terms(d.clone()),
            });
        }
        let found = search_decomposition(&m, 16, FALLBACK_BUDGET, 0)?.ok_or_else(|| {
            StabError::Unsupported(format!("search found no decomposition for [{}]", names.join(", ")))
        })?;
        let d = Arc::new(found);
        self.searched.insert(key, d.clone());
        Ok(CompositeGate {
            qubits,
            parts,
            factor: LayerFactor::Terms(d),
        })
    }
}

/// Split into alternating Clifford and non-Clifford layers using the
/// built-in decomposition database.
pub fn layerize(circuit: &Circuit, fuse: FusePolicy) -> Result<LayeredCircuit, StabError> {
    layerize_with(circuit, fuse, Database::builtin())
}

pub fn layerize_with(circuit: &Circuit, fuse: FusePolicy, db: &Database) -> Result<LayeredCircuit, StabError> {
    layerize_ops(circuit.n, &circuit.ops(), fuse, db)
}

struct Open {
    qubits: Vec<usize>,
    parts: Vec<(usize, Gate)>,
}

/// Greedy placement: position `2j` is Clifford layer `j`, `2j+1` is
/// non-Clifford layer `j`. Each op goes to the earliest position of its kind
/// after everything already placed on its qubits.
pub(crate) fn layerize_ops(n: usize, ops: &[Op], fuse: FusePolicy, db: &Database) -> Result<LayeredCircuit, StabError> {
    let mut resolver = Resolver::new(db);
    let mut cliff: Vec<Vec<CliffordOp>> = vec![Vec::new()];
    let mut nc: Vec<Vec<Open>> = Vec::new();
    let mut last = vec![0usize; n];
    let mut floor = 0usize;

    for (idx, op) in ops.iter().enumerate() {
        let (cop, gate) = match op {
            Op::Barrier => {
                floor = last.iter().copied().max().unwrap_or(0).max(floor);
                if floor % 2 == 1 {
                    floor += 1;
                }
                continue;
            }
            Op::Project(q, b) => {
                check_qubits(n, 1, &[*q])?;
                (Some(CliffordOp::Project { qubit: *q, bit: *b }), None)
            }
            Op::Gate(g) => {
                check_qubits(n, g.kind.arity(), &g.qubits)?;
                if g.is_clifford() {
                    (Some(CliffordOp::Gate(g.clone())), None)
                } else {
                    (None, Some(g))
                }
            }
        };
        let qs: Vec<usize> = match (&cop, gate) {
            (Some(c), _) => c.qubits().to_vec(),
            (None, Some(g)) => g.qubits.clone(),
            _ => unreachable!(),
        };
        let m = qs.iter().map(|&q| last[q]).max().unwrap_or(0).max(floor);
        if let Some(c) = cop {
            let p = m + m % 2;
            while cliff.len() <= p / 2 {
                cliff.push(Vec::new());
            }
            cliff[p / 2].push(c);
            for &q in &qs {
                last[q] = p;
            }
            continue;
        }
        let g = gate.unwrap();
        let mut p = if m % 2 == 1 { m } else { m + 1 };
        loop {
            let j = (p - 1) / 2;
            while nc.len() <= j {
                nc.push(Vec::new());
            }
            let layer = &mut nc[j];
            let hits: Vec<usize> = (0..layer.len())
                .filter(|&i| layer[i].qubits.iter().any(|q| qs.contains(q)))
                .collect();
            if hits.is_empty() {
                layer.push(Open {
                    qubits: qs.clone(),
                    parts: vec![(idx, g.clone())],
                });
                break;
            }
            if fuse == FusePolicy::Composite {
                let mut uq: Vec<usize> = qs.clone();
                let mut parts: Vec<(usize, Gate)> = vec![(idx, g.clone())];
                for &i in &hits {
                    uq.extend(layer[i].qubits.iter().copied());
                    parts.extend(layer[i].parts.iter().cloned());
                }
                uq.sort_unstable();
                uq.dedup();
                parts.sort_by_key(|(i, _)| *i);
                let plain: Vec<Gate> = parts.iter().map(|(_, g)| g.clone()).collect();
                if resolver.can_fuse(&uq, &plain) {
                    for &i in hits.iter().rev() {
                        layer.remove(i);
                    }
                    layer.push(Open { qubits: uq, parts });
                    break;
                }
            }
            p += 2;
        }
        for &q in &qs {
            last[q] = p;
        }
    }

    while cliff.len() < nc.len() + 1 {
        cliff.push(Vec::new());
    }
    let mut cliffords = vec![CliffordLayer { ops: cliff[0].clone() }];
    let mut layers = Vec::new();
    for (j, opens) in nc.into_iter().enumerate() {
        let next = std::mem::take(&mut cliff[j + 1]);
        if opens.is_empty() {
            cliffords.last_mut().unwrap().ops.extend(next);
            continue;
        }
        let mut gates = Vec::with_capacity(opens.len());
        for o in opens {
            gates.push(resolver.resolve(o.qubits, o.parts.into_iter().map(|(_, g)| g).collect())?);
        }
        layers.push(NonCliffordLayer::new(n, gates)?);
        cliffords.push(CliffordLayer { ops: next });
    }
    Ok(LayeredCircuit { n, cliffords, layers })
}

/// Merge adjacent all-diagonal non-Clifford layers. Diagonal Clifford gates
/// between them are absorbed; other Clifford ops between them are moved past
/// the later layer when they act on qubits it does not touch.
pub fn compress_diagonal_layers(layered: &LayeredCircuit) -> LayeredCircuit {
    let mut out = layered.clone();
    let mut k = 0;
    while k + 1 < out.layers.len() {
        match try_merge(&out, k) {
            Some((merged, pushed)) => {
                out.layers[k] = merged;
                out.layers.remove(k + 1);
                out.cliffords.remove(k + 1);
                let next = &mut out.cliffords[k + 1].ops;
                let rest = std::mem::take(next);
                *next = pushed;
                next.extend(rest);
            }
            None => k += 1,
        }
    }
    out
}

fn try_merge(lc: &LayeredCircuit, k: usize) -> Option<(NonCliffordLayer, Vec<CliffordOp>)> {
    let (a, b) = (&lc.layers[k], &lc.layers[k + 1]);
    if !a.is_diagonal() || !b.is_diagonal() {
        return None;
    }
    let touched: Vec<usize> = b.gates.iter().flat_map(|g| g.qubits.iter().copied()).collect();
    let mut blocked: Vec<usize> = Vec::new();
    let mut absorbed = Vec::new();
    let mut pushed = Vec::new();
    for op in &lc.cliffords[k + 1].ops {
        let qs = op.qubits();
        let hits_blocked = qs.iter().any(|q| blocked.contains(q));
        match op {
            CliffordOp::Gate(g) if g.is_diagonal() && !hits_blocked => absorbed.push(g.clone()),
            _ if !qs.iter().any(|q| touched.contains(q)) => {
                blocked.extend_from_slice(qs);
                pushed.push(op.clone());
            }
            _ => return None,
        }
    }
    let parts: Vec<Gate> = a
        .gates
        .iter()
        .flat_map(|g| g.parts.iter().cloned())
        .chain(absorbed)
        .chain(b.gates.iter().flat_map(|g| g.parts.iter().cloned()))
        .collect();
    // connected components of qubits linked by a shared part
    let n = lc.n;
    let mut root: Vec<usize> = (0..n).collect();
    fn find(r: &mut [usize], mut x: usize) -> usize {
        while r[x] != x {
            r[x] = r[r[x]];
            x = r[x];
        }
        x
    }
    for g in &parts {
        for w in g.qubits.windows(2) {
            let (x, y) = (find(&mut root, w[0]), find(&mut root, w[1]));
            root[x.max(y)] = x.min(y);
        }
    }
    let mut groups: Vec<(usize, Vec<Gate>)> = Vec::new();
    for g in parts {
        let r = find(&mut root, g.qubits[0]);
        match groups.iter_mut().find(|(x, _)| *x == r) {
            Some((_, v)) => v.push(g),
            None => groups.push((r, vec![g])),
        }
    }
    let mut gates = Vec::with_capacity(groups.len());
    for (_, ps) in groups {
        let mut qubits: Vec<usize> = ps.iter().flat_map(|g| g.qubits.iter().copied()).collect();
        qubits.sort_unstable();
        qubits.dedup();
        let factor = DiagonalFactor {
            arity: qubits.len(),
            parts: ps
                .iter()
                .map(|g| {
                    let local = g.qubits.iter().map(|q| qubits.binary_search(q).unwrap()).collect();
                    (g.matrix().diag(), local)
                })
                .collect(),
        };
        gates.push(CompositeGate {
            qubits,
            parts: ps,
            factor: LayerFactor::Diagonal(factor),
        });
    }
    let layer = NonCliffordLayer::new(n, gates).ok()?;
    Some((layer, pushed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Cz,
    Cs,
    SupremacyLike,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Cz => "cz",
            Family::Cs => "cs",
            Family::SupremacyLike => "supremacy_like",
        }
    }
}

impl FromStr for Family {
    type Err = StabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cz" => Ok(Family::Cz),
            "cs" => Ok(Family::Cs),
            "supremacy_like" | "supremacy" => Ok(Family::SupremacyLike),
            _ => Err(StabError::Parse(format!("unknown family '{s}' (cz, cs, supremacy_like)"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const CLIFFORD_POOL: [GateKind; 4] = [GateKind::H, GateKind::S, GateKind::SqrtX, GateKind::SqrtY];
const SUPREMACY_POOL: [GateKind; 3] = [GateKind::SqrtX, GateKind::SqrtY, GateKind::SqrtW];

fn qubit_rngs(n: usize, seed: u64) -> Vec<ChaCha8Rng> {
    (0..n)
        .map(|q| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(q as u64);
            r
        })
        .collect()
}

/// Brickwork pairs: (0,1),(2,3),… on even cycles, (1,2),(3,4),… on odd ones.
pub fn brickwork_pairs(n: usize, cycle: usize) -> Vec<(usize, usize)> {
    (cycle % 2..n.saturating_sub(1)).step_by(2).map(|a| (a, a + 1)).collect()
}

/// Random circuit of `cycles` cycles, each a single-qubit round followed by a
/// two-qubit brickwork round. `p` is ignored for `supremacy_like`.
pub fn ensemble_generate(family: Family, n: usize, cycles: usize, p: f64, seed: u64) -> Result<Circuit, StabError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(StabError::Parse(format!("probability {p} outside [0, 1]")));
    }
    if n == 0 || n > crate::pauli::MAX_QUBITS {
        return Err(StabError::Parse(format!("qubit count {n} outside 1..={}", crate::pauli::MAX_QUBITS)));
    }
    let mut rngs = qubit_rngs(n, seed);
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let mut c = Circuit::new(n);
    for cycle in 0..cycles {
        for (q, rng) in rngs.iter_mut().enumerate() {
            let g = match family {
                Family::SupremacyLike => {
                    let i = match prev[q] {
                        None => rng.gen_range(0u32..3) as usize,
                        Some(pi) => {
                            let j = rng.gen_range(0u32..2) as usize;
                            if j >= pi {
                                j + 1
                            } else {
                                j
                            }
                        }
                    };
                    prev[q] = Some(i);
                    SUPREMACY_POOL[i]
                }
                _ => {
                    if rng.gen_bool(p) {
                        GateKind::T
                    } else {
                        CLIFFORD_POOL[rng.gen_range(0u32..4) as usize]
                    }
                }
            };
            c.push(g, &[q])?;
        }
        let two = match family {
            Family::Cz => GateKind::Cz,
            Family::Cs => GateKind::Cs,
            Family::SupremacyLike => GateKind::FSim,
        };
        for (a, b) in brickwork_pairs(n, cycle) {
            c.push(two, &[a, b])?;
        }
    }
    Ok(c)
}

/// IQP circuit `H^n D_1 … D_k H^n`; each `D_i` is a round of random
/// single-qubit diagonal gates (t, tdg, s, z) followed by cz/cs on a
/// brickwork round.
pub fn iqp_generate(n: usize, rounds: usize, seed: u64) -> Result<Circuit, StabError> {
    const SINGLE: [GateKind; 4] = [GateKind::T, GateKind::Tdg, GateKind::S, GateKind::Z];
    const PAIR: [GateKind; 2] = [GateKind::Cz, GateKind::Cs];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.push(GateKind::H, &[q])?;
    }
    for r in 0..rounds {
        for q in 0..n {
            c.push(SINGLE[rng.gen_range(0u32..4) as usize], &[q])?;
        }
        for (a, b) in brickwork_pairs(n, r) {
            c.push(PAIR[rng.gen_range(0u32..2) as usize], &[a, b])?;
        }
    }
    for q in 0..n {
        c.push(GateKind::H, &[q])?;
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitStats {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub d_nc: usize,
    pub t: usize,
    pub kappas: Vec<f64>,
    pub kappa_log2: Vec<f64>,
    /// log2 of the SPIR inner-product count times n³.
    pub log2_spir_cost: f64,
    /// log2 of Σ_j κ_{j-1}κ_j inner products times n³.
    pub log2_spc_cost: f64,
}

pub fn stats(layered: &LayeredCircuit) -> CircuitStats {
    let n = layered.n;
    let ops = layered.flatten();
    let mut level = vec![0usize; n];
    let mut m = 0;
    let mut t = 0;
    for op in &ops {
        let qs: &[usize] = match op {
            CliffordOpOrGate::Gate(g) => {
                m += 1;
                if !g.is_clifford() {
                    t += 1;
                }
                &g.qubits
            }
            CliffordOpOrGate::Project(q, _) => std::slice::from_ref(q),
        };
        let l = qs.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
        for &q in qs {
            level[q] = l;
        }
    }
    let kappa_log2: Vec<f64> = layered.layers.iter().map(|l| l.kappa_log2()).collect();
    let kappas = layered
        .layers
        .iter()
        .map(|l| {
            l.decomposition
                .factors
                .iter()
                .map(|(f, _)| f.rank().map_or(f.rank_log2().exp2(), |r| r as f64))
                .product()
        })
        .collect();
    let poly = 3.0 * (n.max(1) as f64).log2();
    CircuitStats {
        n,
        m,
        d: level.into_iter().max().unwrap_or(0),
        d_nc: layered.d_nc(),
        t,
        kappas,
        log2_spir_cost: crate::cost::spir_inner_products_log2(&kappa_log2) + poly,
        log2_spc_cost: crate::cost::spc_inner_products_log2(&kappa_log2) + poly,
        kappa_log2,
    }
}
