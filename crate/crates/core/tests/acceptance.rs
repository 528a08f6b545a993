//! Acceptance suite: one PASS/FAIL line per criterion, each under its time budget.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qmn_core::cumulants::{clique_support_from, cumulant, expand, SupportSelection};
use qmn_core::decompose::{
    classify, coarse_grain_model, first_noncommuting_pair, theorem4_decompose, ClassVerdict, DecomposeOptions,
};
use qmn_core::generators::{
    alternate_composite, cluster_chain, five_site_cell, cell_tiling, northeast_merge, random_commuting_model,
    ring4_generators, stabilizer_graph, surface_patch_generators, triangle_free_graphs, triangle_free_model, xxzz_chain,
};
use qmn_core::graphs::{spanning_shield_partitions, Partition};
use qmn_core::io::{model_to_json, parse_model};
use qmn_core::markov::{cmi, gibbs, is_markov_network, stabilizer_state, DensityMatrix, MarkovOptions};
use qmn_core::model::{ModelInstance, DEFAULT_DENSE_CAP};
use qmn_core::pauli::PauliSum;
use qmn_core::tensor::random::{random_density, random_diagonal_density, random_hermitian, random_state, rng};
use qmn_core::tensor::{expm_herm, kron, logm_herm, op_schmidt, schmidt_reconstruct, ComplexMatrix, SiteSpace, SupportedOperator, C64};
use qmn_core::QmnError;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Dense Pauli word built from scratch; `word[k]` acts on site `k + 1`.
fn dense_word(word: &str) -> ComplexMatrix {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    word.chars()
        .map(|c| match c {
            'I' => ComplexMatrix::from_vec(2, 2, vec![l, o, o, l]),
            'X' => ComplexMatrix::from_vec(2, 2, vec![o, l, l, o]),
            'Y' => ComplexMatrix::from_vec(2, 2, vec![o, -i, i, o]),
            'Z' => ComplexMatrix::from_vec(2, 2, vec![l, o, o, -l]),
            _ => unreachable!(),
        })
        .map(|m| m.unwrap())
        .reduce(|a, b| kron(&a, &b))
        .unwrap()
}

fn sum(p: &[&PauliSum]) -> PauliSum {
    p.iter().fold(PauliSum::zero(), |acc, x| acc.add(x))
}

fn counterexample() -> Check {
    let m = five_site_cell();
    let p = m.pauli_terms().ok_or("cell terms are not symbolic")?;
    let (down, left, up, right) = (p[0], p[1], p[2], p[3]);
    ensure(sum(&[down, right]).commutator(&sum(&[left, up])).is_zero(), || "[down+right, left+up] != 0".into())?;
    ensure(sum(&[down, left]).commutator(&sum(&[right, up])).is_zero(), || "[down+left, right+up] != 0".into())?;

    let (d, l) = (dense_word("ZZIIY"), dense_word("IZZIX"));
    let comm = &d.matmul(&l) - &l.matmul(&d);
    let expected = dense_word("ZIZIZ").scale(C64::new(0.0, -2.0));
    ensure(comm.distance(&expected) <= 1e-12, || format!("[down, left] differs from -2i Z1Z3Z5 by {:.2e}", comm.distance(&expected)))?;
    ensure(comm.frobenius_norm() > 1.0, || "commutator norm not above 1".into())?;
    let symbolic: PauliSum = "-2i * Z1 Z3 Z5".parse().map_err(err)?;
    ensure(down.commutator(left).sub(&symbolic).is_zero(), || "symbolic [down, left] mismatch".into())?;

    let mut parts = spanning_shield_partitions(&m.graph).map_err(err)?;
    parts.sort();
    let expected = vec![Partition::new([1], [2, 4, 5], [3]), Partition::new([2], [1, 3, 5], [4])];
    ensure(parts == expected, || format!("spanning partitions {parts:?}"))?;
    let rho = gibbs(&m).map_err(err)?;
    let mut worst = 0.0f64;
    for q in &parts {
        let a: Vec<u32> = q.a.iter().copied().collect();
        let b: Vec<u32> = q.b.iter().copied().collect();
        let c: Vec<u32> = q.c.iter().copied().collect();
        worst = worst.max(cmi(&rho, &a, &b, &c).map_err(err)?);
    }
    ensure(worst <= 1e-9, || format!("max CMI {worst:.2e}"))?;

    let cls = classify(&m, 1e-10, DEFAULT_DENSE_CAP, &MarkovOptions::default()).map_err(err)?;
    let pair = cls.noncommuting_pair.as_ref().map(|p| (p.first, p.second));
    ensure(cls.verdict == ClassVerdict::ShieldCommutingOnly && pair == Some((0, 1)), || format!("classify {:?} {pair:?}", cls.verdict))?;
    match theorem4_decompose(&rho, &m.graph, &DecomposeOptions::default()) {
        Err(QmnError::NotTriangleFree(_)) => {}
        other => return Err(format!("decomposition not rejected: {:?}", other.map(|_| ()))),
    }
    Ok(format!("|[down,left]|_F = {:.3}, max CMI {worst:.1e}", comm.frobenius_norm()))
}

fn commuting_models() -> Vec<ModelInstance> {
    let mut r = rng(31);
    let mut models: Vec<ModelInstance> =
        (0..20).map(|i| random_commuting_model(&mut r, 3 + i % 5, 0.5, 0.5).expect("random commuting model")).collect();
    models.push(cluster_chain(5));
    models
}

fn commuting_markov(models: &[(ModelInstance, DensityMatrix)]) -> Check {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (k, (m, rho)) in models.iter().enumerate() {
        ensure(first_noncommuting_pair(m, 1e-10).map_err(err)?.is_none(), || format!("model {k} has non-commuting terms"))?;
        let rep = is_markov_network(rho, &m.graph, &MarkovOptions { tol: 1e-8, ..Default::default() }).map_err(err)?;
        count += rep.partitions.len();
        worst = worst.max(rep.max_cmi);
        ensure(rep.verdict.is_pass(), || format!("model {k}: CMI {:.2e}", rep.max_cmi))?;
    }
    Ok(format!("{} models, {count} partitions, max CMI {worst:.1e}", models.len()))
}

fn cumulant_support(models: &[(ModelInstance, DensityMatrix)]) -> Check {
    let mut gap = 0.0f64;
    let mut pair_max = 0.0f64;
    let mut pairs = 0;
    for (k, (m, rho)) in models.iter().enumerate() {
        let h = logm_herm(&rho.matrix).map_err(err)?;
        let e = expand(&h, &m.space, SupportSelection::None).map_err(err)?;
        let rep = clique_support_from(&e, &m.graph, 1e-6);
        gap = gap.max(rep.relative_gap);
        ensure(rep.pass, || format!("model {k}: relative gap {:.2e}", rep.relative_gap))?;
        let sites = m.space.sites();
        for i in 0..sites.len() {
            for j in i + 1..sites.len() {
                if m.graph.has_edge(sites[i], sites[j]) {
                    continue;
                }
                let n = cumulant(&h, &m.space, &[sites[i], sites[j]]).map_err(err)?.frobenius_norm();
                pairs += 1;
                pair_max = pair_max.max(n);
                ensure(n <= 1e-8, || format!("model {k}: cumulant on {{{},{}}} has norm {n:.2e}", sites[i], sites[j]))?;
            }
        }
    }
    Ok(format!("max relative gap {gap:.1e}, {pairs} non-clique pairs, max norm {pair_max:.1e}"))
}

fn decomposition() -> Check {
    let mut r = rng(2024);
    let mut lines = Vec::new();
    for (name, g) in triangle_free_graphs() {
        let m = triangle_free_model(&mut r, &g, &alternate_composite(&g), 0.4).map_err(err)?;
        let rho = gibbs(&m).map_err(err)?;
        let d = theorem4_decompose(&rho, &g, &DecomposeOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        ensure(d.residual <= 1e-8 && d.max_commutator <= 1e-8, || {
            format!("{name}: residual {:.2e}, commutator {:.2e}", d.residual, d.max_commutator)
        })?;
        let back = parse_model(&model_to_json(&d.to_model().map_err(err)?)).map_err(err)?;
        let cls = classify(&back, 1e-10, DEFAULT_DENSE_CAP, &MarkovOptions::default()).map_err(err)?;
        ensure(cls.verdict == ClassVerdict::LocalCommuting, || format!("{name}: re-ingested model is {:?}", cls.verdict))?;
        lines.push(format!("{name} {:.0e}", d.residual.max(d.max_commutator)));
    }
    Ok(lines.join(", "))
}

/// I(1:3|2) of exp(X1X2 + Z2Z3)/Z, natural log, from scipy.linalg.expm/logm.
const XXZZ_CMI: f64 = 0.052051695401092224;

fn negative_control() -> Check {
    let m = xxzz_chain(3);
    let rho = gibbs(&m).map_err(err)?;
    let v = cmi(&rho, &[1], &[2], &[3]).map_err(err)?;
    ensure(v > 1e-3 && (v - XXZZ_CMI).abs() <= 1e-10, || format!("I(1:3|2) = {v:.17}"))?;
    let rep = is_markov_network(&rho, &m.graph, &MarkovOptions::default()).map_err(err)?;
    ensure(!rep.verdict.is_pass(), || "chain reported Markov".into())?;
    Ok(format!("I(1:3|2) = {v:.12}"))
}

fn shannon(p: &[f64], n: usize, sites: &[u32]) -> f64 {
    let mut marg: BTreeMap<usize, f64> = BTreeMap::new();
    for (idx, &pi) in p.iter().enumerate() {
        let key = sites.iter().fold(0, |acc, &s| (acc << 1) | ((idx >> (n - s as usize)) & 1));
        *marg.entry(key).or_default() += pi;
    }
    marg.values().filter(|&&q| q > 0.0).map(|&q| -q * q.ln()).sum()
}

fn classical_cmi(p: &[f64], n: usize, a: &[u32], b: &[u32], c: &[u32]) -> f64 {
    let cat = |x: &[&[u32]]| -> Vec<u32> {
        let mut v: Vec<u32> = x.concat();
        v.sort();
        v
    };
    shannon(p, n, &cat(&[a, b])) + shannon(p, n, &cat(&[b, c])) - shannon(p, n, &cat(&[a, b, c])) - shannon(p, n, b)
}

fn information_theory() -> Check {
    let mut r = rng(77);
    let (mut min_cmi, mut min_mono, mut diag_err) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    let mut diag_count = 0;
    for k in 0..500 {
        let n = 3 + k % 2;
        let d = 1 << n;
        let space = SiteSpace::qubits(1..=n as u32).map_err(err)?;
        let matrix = match k % 5 {
            0 | 1 => random_diagonal_density(&mut r, d),
            2 => DensityMatrix::pure(&random_state(&mut r, d), space.clone()).map_err(err)?.matrix,
            _ => random_density(&mut r, d),
        };
        let rho = DensityMatrix::new(matrix, space).map_err(err)?;
        let triples: Vec<(Vec<u32>, Vec<u32>, Vec<u32>)> = if n == 3 {
            vec![(vec![1], vec![2], vec![3]), (vec![2], vec![1], vec![3]), (vec![1], vec![3], vec![2])]
        } else {
            vec![(vec![1], vec![2], vec![3]), (vec![1, 4], vec![2], vec![3]), (vec![1], vec![2], vec![3, 4]), (vec![1], vec![2, 3], vec![4])]
        };
        let mut values = Vec::new();
        for (a, b, c) in &triples {
            let v = cmi(&rho, a, b, c).map_err(err)?;
            min_cmi = min_cmi.min(v);
            ensure(v >= -1e-9, || format!("state {k}: I({a:?}:{c:?}|{b:?}) = {v:.2e}"))?;
            values.push(v);
        }
        if n == 4 {
            for big in [values[1], values[2]] {
                min_mono = min_mono.min(big - values[0]);
                ensure(big >= values[0] - 1e-9, || format!("state {k}: monotonicity {big:.3e} < {:.3e}", values[0]))?;
            }
        }
        if k % 5 < 2 {
            let p: Vec<f64> = rho.matrix.diagonal().iter().map(|z| z.re).collect();
            for ((a, b, c), v) in triples.iter().zip(&values) {
                let e = (v - classical_cmi(&p, n, a, b, c)).abs();
                diag_err = diag_err.max(e);
                ensure(e <= 1e-10, || format!("state {k}: diagonal CMI off by {e:.2e}"))?;
            }
            diag_count += 1;
        }
    }
    Ok(format!("min CMI {min_cmi:.1e}, min monotonicity slack {min_mono:.1e}, {diag_count} diagonal states max error {diag_err:.1e}"))
}

fn stabilizers() -> Check {
    let mut out = Vec::new();
    for (name, gens, n) in [("ring4", ring4_generators(), 4u32), ("surface patch", surface_patch_generators(), 8)] {
        let space = SiteSpace::qubits(1..=n).map_err(err)?;
        let g = stabilizer_graph(&gens, 1..=n).map_err(err)?;
        let rho = stabilizer_state(&gens, &space).map_err(err)?;
        let rep = is_markov_network(&rho, &g, &MarkovOptions::default()).map_err(err)?;
        ensure(rep.max_cmi <= 1e-9, || format!("{name}: max CMI {:.2e}", rep.max_cmi))?;
        out.push(format!("{name} {} partitions max {:.1e}", rep.partitions.len(), rep.max_cmi));
    }
    Ok(out.join(", "))
}

fn pairs_failing(m: &ModelInstance) -> (usize, usize) {
    let p = m.pauli_terms().expect("symbolic terms");
    let mut bad = 0;
    let mut total = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            total += 1;
            bad += usize::from(!p[i].commutator(p[j]).is_zero());
        }
    }
    (bad, total)
}

fn coarse_graining() -> Check {
    let cell = coarse_grain_model(&five_site_cell(), &BTreeMap::from([(5, 1)]), false).map_err(err)?;
    let (bad, _) = pairs_failing(&cell);
    ensure(cell.terms.len() == 2 && bad == 0, || format!("cell merge: {} terms, {bad} failing pairs", cell.terms.len()))?;
    let tiling = cell_tiling(5, 5);
    let (before, _) = pairs_failing(&tiling);
    let merged = coarse_grain_model(&tiling, &northeast_merge(5, 5), false).map_err(err)?;
    let (bad, total) = pairs_failing(&merged);
    ensure(before > 0 && bad == 0, || format!("5x5 tiling: {bad} of {total} grouped pairs fail"))?;
    Ok(format!("cell 0 of 1, 5x5 tiling {bad} of {total} grouped pairs fail ({before} before merging)"))
}

fn numerics() -> Check {
    let mut r = rng(9);
    let mut worst = 0.0f64;
    for d in [2, 4, 8, 16, 32, 64] {
        let h = random_hermitian(&mut r, d).scale_real(1.0 / (d as f64).sqrt());
        let back = logm_herm(&expm_herm(&h).map_err(err)?).map_err(err)?;
        let rho = random_density(&mut r, d);
        let again = expm_herm(&logm_herm(&rho).map_err(err)?).map_err(err)?;
        let e = back.distance(&h).max(again.distance(&rho));
        worst = worst.max(e);
        ensure(e <= 1e-10, || format!("dim {d}: roundtrip error {e:.2e}"))?;
    }
    for dims in [vec![2], vec![2, 2, 2], vec![3, 5], vec![2, 3, 4, 2]] {
        let space = SiteSpace::new(dims.iter().enumerate().map(|(i, &d)| (i as u32 + 1, d))).map_err(err)?;
        let d = space.total_dim() as f64;
        let s = DensityMatrix::maximally_mixed(space).entropy().map_err(err)?;
        ensure((s - d.ln()).abs() <= 1e-12, || format!("S(I/{d}) = {s}"))?;
    }
    let mut schmidt = 0.0f64;
    for (dims, left) in [(vec![2, 3, 2], vec![1]), (vec![2, 2, 2, 2], vec![1, 3]), (vec![4, 2], vec![2])] {
        let n: usize = dims.iter().product();
        let support: Vec<u32> = (1..=dims.len() as u32).collect();
        let op = SupportedOperator::new(support, dims, random_hermitian(&mut r, n)).map_err(err)?;
        let rec = schmidt_reconstruct(&op_schmidt(&op, &left).map_err(err)?).map_err(err)?.ok_or("empty Schmidt decomposition")?;
        let e = rec.matrix.distance(&op.canonical().matrix);
        schmidt = schmidt.max(e);
        ensure(e <= 1e-10, || format!("Schmidt reconstruction error {e:.2e}"))?;
    }
    Ok(format!("exp/log roundtrip {worst:.1e}, Schmidt {schmidt:.1e}"))
}

fn main() -> ExitCode {
    let models: Vec<(ModelInstance, DensityMatrix)> = commuting_models()
        .into_iter()
        .map(|m| {
            let rho = gibbs(&m).expect("gibbs state");
            (m, rho)
        })
        .collect();
    type Criterion<'a> = (&'static str, u64, Box<dyn Fn() -> Check + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("1 counterexample", 1, Box::new(counterexample)),
        ("2 commuting models are Markov", 60, Box::new(|| commuting_markov(&models))),
        ("3 cumulants sit on cliques", 30, Box::new(|| cumulant_support(&models))),
        ("4 triangle-free decomposition", 120, Box::new(decomposition)),
        ("5 negative control", 5, Box::new(negative_control)),
        ("6 information inequalities", 60, Box::new(information_theory)),
        ("7 stabilizer states", 10, Box::new(stabilizers)),
        ("8 coarse-graining", 10, Box::new(coarse_graining)),
        ("9 numerics", 10, Box::new(numerics)),
    ];
    let mut failed = 0;
    for (name, limit, run) in &criteria {
        let t = Instant::now();
        let result = run();
        let took = t.elapsed();
        let result = result.and_then(|s| {
            if took <= Duration::from_secs(*limit) {
                Ok(s)
            } else {
                Err(format!("took {took:.2?}, limit {limit} s"))
            }
        });
        match result {
            Ok(s) => println!("PASS  {name}: {s} [{took:.2?}]"),
            Err(s) => {
                failed += 1;
                println!("FAIL  {name}: {s} [{took:.2?}]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
