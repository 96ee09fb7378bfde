use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stabsim_core::circuit::{ensemble_generate, layerize, layerize_with, parse, Circuit, Family, FusePolicy};
use stabsim_core::decomposition::Database;
use stabsim_core::engines::*;
use stabsim_core::gates::GateKind;

fn no_short_circuit() -> EngineOptions {
    EngineOptions {
        short_circuit: false,
        ..EngineOptions::default()
    }
}

/// I(0) = 1, I(1) = κ, I(d) = κ (I(m-1) + I(d-m)) with m = ⌈d/2⌉.
fn spir_count(d: usize, kappa: u64) -> u64 {
    match d {
        0 => 1,
        1 => kappa,
        _ => {
            let m = d.div_ceil(2);
            kappa * (spir_count(m - 1, kappa) + spir_count(d - m, kappa))
        }
    }
}

/// `d` layers of T⊗T separated by Hadamards: every layer has κ = 4.
fn uniform_t_layers(d: usize) -> Circuit {
    let mut text = String::from("qubits 2\n");
    for j in 0..d {
        if j > 0 {
            text.push_str("gate h 0\ngate h 1\n");
        }
        text.push_str("gate t 0\ngate t 1\n");
    }
    parse(&text).unwrap()
}

#[test]
fn spir_inner_products_follow_the_recursion() {
    for d in [1, 2, 4, 8] {
        let l = layerize(&uniform_t_layers(d), FusePolicy::Composite).unwrap();
        assert_eq!(l.d_nc(), d);
        assert!(l.kappas().iter().all(|k| *k == Some(4)));
        let (_, tr) = amplitude_spir(&l, "01", &no_short_circuit()).unwrap();
        assert_eq!(tr.inner_product_count, spir_count(d, 4), "d = {d}");
    }
    assert_eq!([1, 2, 4, 8].map(|d| spir_count(d, 4)), [4, 20, 96, 512]);
}

#[test]
fn spir_split_point_is_free() {
    for seed in 0..6 {
        let fam = [Family::Cz, Family::Cs, Family::SupremacyLike][seed as usize % 3];
        let circ = ensemble_generate(fam, 4, 3, 0.6, seed).unwrap();
        let l = layerize(&circ, FusePolicy::Composite).unwrap();
        let (mid, _) = amplitude_spir(&l, "0110", &EngineOptions::default()).unwrap();
        let d = l.d_nc();
        let mut rules = vec![SplitRule::First, SplitRule::Last];
        rules.extend((1..=d).map(SplitRule::At));
        for split in rules {
            let o = EngineOptions {
                split,
                ..EngineOptions::default()
            };
            let (v, _) = amplitude_spir(&l, "0110", &o).unwrap();
            assert!((v - mid).norm() <= 1e-9, "seed {seed} {split:?}: {v} vs {mid}");
        }
    }
}

/// Builtin database with the term lines of every entry shuffled.
fn shuffled_db(seed: u64) -> Database {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut terms: Vec<String> = Vec::new();
    for line in Database::builtin().to_text().lines() {
        if line.starts_with("term ") {
            terms.push(line.to_string());
            continue;
        }
        terms.shuffle(&mut rng);
        out.append(&mut terms);
        out.push(line.to_string());
    }
    terms.shuffle(&mut rng);
    out.append(&mut terms);
    Database::parse(&out.join("\n")).unwrap()
}

#[test]
fn permuting_decomposition_terms_leaves_amplitudes() {
    let db = shuffled_db(3);
    for seed in 0..4 {
        let circ = ensemble_generate(Family::SupremacyLike, 4, 2, 0.5, seed).unwrap();
        let a = layerize(&circ, FusePolicy::Composite).unwrap();
        let b = layerize_with(&circ, FusePolicy::Composite, &db).unwrap();
        let o = EngineOptions::default();
        for x in ["0000", "1011"] {
            let (pa, _) = amplitude_spc(&a, x, &o).unwrap();
            let (pb, _) = amplitude_spc(&b, x, &o).unwrap();
            assert!((pa - pb).norm() <= 1e-12, "spc seed {seed}: {pa} vs {pb}");
            let (ra, _) = amplitude_spir(&a, x, &o).unwrap();
            let (rb, _) = amplitude_spir(&b, x, &o).unwrap();
            assert!((ra - rb).norm() <= 1e-12, "spir seed {seed}: {ra} vs {rb}");
        }
    }
}

#[test]
fn spc_term_count_and_normalization() {
    for seed in 0..8 {
        let fam = [Family::Cz, Family::Cs, Family::SupremacyLike][seed as usize % 3];
        let n = 3 + seed as usize % 4;
        let circ = ensemble_generate(fam, n, 2, 0.5, seed).unwrap();
        let l = layerize(&circ, FusePolicy::Composite).unwrap();
        if l.d_nc() > 3 {
            continue;
        }
        let (sum, tr) = evolve_spc(&l, &EngineOptions::default()).unwrap();
        let kappas: Vec<usize> = l.kappas().into_iter().map(Option::unwrap).collect();
        assert_eq!(tr.live_terms, kappas, "seed {seed}");
        if let Some(&last) = kappas.last() {
            assert_eq!(sum.terms.len(), last);
        }
        let g = sum.gram_sum().unwrap();
        assert!((g - C::new(1.0, 0.0)).norm() <= 1e-9, "seed {seed}: gram {g}");
    }
}

#[test]
fn pruning_only_drops_negligible_terms() {
    let circ = ensemble_generate(Family::Cz, 5, 3, 0.7, 11).unwrap();
    let l = layerize(&circ, FusePolicy::Composite).unwrap();
    let pruned = EngineOptions {
        prune: true,
        ..EngineOptions::default()
    };
    let (full, _) = evolve_spc(&l, &EngineOptions::default()).unwrap();
    let (kept, _) = evolve_spc(&l, &pruned).unwrap();
    assert!(kept.terms.len() <= full.terms.len());
    let (a, b) = (full.to_dense().unwrap(), kept.to_dense().unwrap());
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).norm() < 1e-10);
    }
}

#[test]
fn thread_count_does_not_change_bits() {
    let one = EngineOptions::default();
    let four = EngineOptions {
        threads: 4,
        ..EngineOptions::default()
    };
    for seed in 0..6 {
        let fam = [Family::Cz, Family::Cs, Family::SupremacyLike][seed as usize % 3];
        let circ = ensemble_generate(fam, 5, 3, 0.5, seed).unwrap();
        let l = layerize(&circ, FusePolicy::Composite).unwrap();
        let x = "10110";
        let bits = |v: C| (v.re.to_bits(), v.im.to_bits());
        for engine in [amplitude_spir, amplitude_spc, amplitude_spc_soc] {
            let (a, _) = engine(&l, x, &one).unwrap();
            let (b, _) = engine(&l, x, &four).unwrap();
            assert_eq!(bits(a), bits(b), "seed {seed}");
        }
        if let Some(plan) = CutPlan::best_contiguous(&circ) {
            let (a, _) = amplitude_cut_hybrid(&circ, &plan, x, &one).unwrap();
            let (b, _) = amplitude_cut_hybrid(&circ, &plan, x, &four).unwrap();
            assert_eq!(bits(a), bits(b), "cut seed {seed}");
        }
    }
}

#[test]
fn spir_budget_stops_the_recursion() {
    let l = layerize(&uniform_t_layers(4), FusePolicy::Composite).unwrap();
    let o = EngineOptions {
        max_inner_products: Some(50),
        ..no_short_circuit()
    };
    assert!(matches!(
        amplitude_spir(&l, "00", &o),
        Err(stabsim_core::StabError::Budget { cap: 50 })
    ));
    let o = EngineOptions {
        max_inner_products: Some(96),
        ..no_short_circuit()
    };
    assert!(amplitude_spir(&l, "00", &o).is_ok());
}

const POOL: [GateKind; 12] = [
    GateKind::H,
    GateKind::S,
    GateKind::SqrtX,
    GateKind::T,
    GateKind::Tdg,
    GateKind::SqrtW,
    GateKind::Cx,
    GateKind::Cz,
    GateKind::Cs,
    GateKind::FSim,
    GateKind::ISwap,
    GateKind::T,
];

fn circuit_strategy() -> impl Strategy<Value = (Circuit, String)> {
    (2usize..=4).prop_flat_map(|n| {
        (
            prop::collection::vec((0..POOL.len(), 0..n, 1..n), 1..10),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(gates, x)| {
                let mut c = Circuit::new(n);
                for (g, q, off) in gates {
                    let kind = POOL[g];
                    let qs = if kind.arity() == 1 { vec![q] } else { vec![q, (q + off) % n] };
                    c.push(kind, &qs).unwrap();
                }
                let x = x.iter().map(|&b| if b { '1' } else { '0' }).collect();
                (c, x)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engines_match_dense((circ, x) in circuit_strategy()) {
        let l = layerize(&circ, FusePolicy::Composite).unwrap();
        let o = EngineOptions::default();
        let d = amplitude_dense(&circ, &x).unwrap();
        let (spir, _) = amplitude_spir(&l, &x, &o).unwrap();
        let (spc, _) = amplitude_spc(&l, &x, &o).unwrap();
        let (soc, _) = amplitude_spc_soc(&l, &x, &o).unwrap();
        prop_assert!((spir - d).norm() <= 1e-8, "spir {} dense {}", spir, d);
        prop_assert!((spc - d).norm() <= 1e-8, "spc {} dense {}", spc, d);
        prop_assert!((soc - d).norm() <= 1e-8, "soc {} dense {}", soc, d);
    }

    #[test]
    fn separate_and_composite_layering_agree((circ, x) in circuit_strategy()) {
        let a = layerize(&circ, FusePolicy::Composite).unwrap();
        let b = layerize(&circ, FusePolicy::Separate).unwrap();
        let o = EngineOptions::default();
        let (va, _) = amplitude_spc(&a, &x, &o).unwrap();
        let (vb, _) = amplitude_spc(&b, &x, &o).unwrap();
        prop_assert!((va - vb).norm() <= 1e-8);
    }
}
