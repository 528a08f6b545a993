use std::collections::BTreeMap;

use anyhow::{bail, Result};
use clap::Subcommand;

use qmn_core::cumulants::{expand, SupportSelection};
use qmn_core::decompose::{classify, coarse_grain_model, split_shield, theorem4_decompose, ClassVerdict, DecomposeOptions};
use qmn_core::generators::{five_site_cell, cell_tiling, northeast_merge};
use qmn_core::graphs::{spanning_shield_partitions, Partition};
use qmn_core::markov::{gibbs_capped, is_markov_network, MarkovOptions};
use qmn_core::model::ModelInstance;
use qmn_core::pauli::PauliSum;
use qmn_core::QmnError;

#[derive(Subcommand)]
pub enum DemoArg {
    /// Shield-commuting model whose terms do not commute.
    Counterexample,
    /// Merging the cell center into a corner yields commuting grouped terms.
    CoarseGrain,
    /// Symbolic commutation check of a tiling before and after the northeast merge.
    Tiling {
        /// Cells as ROWSxCOLS, e.g. 3x3.
        size: String,
    },
}

struct Claims(bool);

impl Claims {
    fn check(&mut self, ok: bool, what: impl AsRef<str>) {
        println!("{}  {}", if ok { "PASS" } else { "FAIL" }, what.as_ref());
        self.0 &= ok;
    }
}

fn sum_of(model: &ModelInstance, idx: &[usize]) -> PauliSum {
    let p = model.pauli_terms().expect("symbolic model");
    idx.iter().fold(PauliSum::zero(), |acc, &i| acc.add(p[i]))
}

fn fmt_set(s: &std::collections::BTreeSet<u32>) -> String {
    format!("{{{}}}", s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

pub fn run(which: DemoArg, cap: usize) -> Result<bool> {
    match which {
        DemoArg::Counterexample => counterexample(cap),
        DemoArg::CoarseGrain => coarse(),
        DemoArg::Tiling { size } => {
            let Some((r, c)) = size.split_once(['x', 'X']) else {
                bail!("tiling size must look like 3x3");
            };
            tiling(r.trim().parse()?, c.trim().parse()?)
        }
    }
}

fn counterexample(cap: usize) -> Result<bool> {
    let m = five_site_cell();
    let mut claims = Claims(true);
    println!("five-site cell at beta = {}", m.beta);
    println!("terms:");
    for (i, t) in m.terms.iter().enumerate() {
        println!("  {:<6} {}", m.label(i), t.as_pauli().expect("symbolic"));
    }
    println!("pairwise commutators:");
    for i in 0..m.terms.len() {
        for j in i + 1..m.terms.len() {
            let c = sum_of(&m, &[i]).commutator(&sum_of(&m, &[j]));
            let text = if c.is_zero() { "0".to_string() } else { c.to_string() };
            println!("  [{}, {}] = {text}", m.label(i), m.label(j));
        }
    }
    let (down, left, up, right) = (0, 1, 2, 3);
    let c = sum_of(&m, &[down, right]).commutator(&sum_of(&m, &[left, up]));
    claims.check(c.is_zero(), "[down+right, left+up] = 0");
    let c = sum_of(&m, &[down, left]).commutator(&sum_of(&m, &[right, up]));
    claims.check(c.is_zero(), "[down+left, right+up] = 0");

    let parts = spanning_shield_partitions(&m.graph)?;
    let expected = [Partition::new([1], [2, 4, 5], [3]), Partition::new([2], [1, 3, 5], [4])];
    let mut sorted = parts.clone();
    sorted.sort();
    claims.check(sorted == expected, format!("exactly {} spanning shielding partitions", parts.len()));

    let h = m.hamiltonian(cap)?.scale_real(m.beta);
    let e = expand(&h, &m.space, SupportSelection::None)?;
    let rho = gibbs_capped(&m, cap)?;
    let report = is_markov_network(&rho, &m.graph, &MarkovOptions { tol: 1e-9, ..Default::default() })?;
    for (p, rec) in parts.iter().zip(&report.partitions) {
        let s = split_shield(&e, &m.graph, p, 1e-10)?;
        claims.check(
            rec.cmi <= 1e-9 && s.commutator_norm <= 1e-12,
            format!(
                "A={} B={} C={}: I(A:C|B) = {:.2e}, |[H_AB, H_BC]| = {:.2e}",
                fmt_set(&p.a),
                fmt_set(&p.b),
                fmt_set(&p.c),
                rec.cmi,
                s.commutator_norm
            ),
        );
    }
    claims.check(report.verdict.is_pass(), format!("Markov network, max CMI {:.2e}", report.max_cmi));

    let cls = classify(&m, 1e-10, cap, &MarkovOptions::default())?;
    let pair = cls.noncommuting_pair.as_ref().map(|p| p.labels.join(", ")).unwrap_or_default();
    claims.check(cls.verdict == ClassVerdict::ShieldCommutingOnly, format!("classified {:?} (witness {pair})", cls.verdict));

    match theorem4_decompose(&rho, &m.graph, &DecomposeOptions::default()) {
        Err(QmnError::NotTriangleFree(t)) => claims.check(true, format!("two-body decomposition rejected: triangle {t:?}")),
        other => claims.check(false, format!("two-body decomposition should be rejected, got {:?}", other.map(|_| ()))),
    }
    Ok(claims.0)
}

fn coarse() -> Result<bool> {
    let m = five_site_cell();
    let mut claims = Claims(true);
    for (name, target) in [("center into top-left corner", 1), ("center into top-right (northeast) corner", 2)] {
        let merged = coarse_grain_model(&m, &BTreeMap::from([(5, target)]), false)?;
        println!("{name}: sites {:?}", merged.space.sites());
        for (i, t) in merged.terms.iter().enumerate() {
            println!("  {:<12} on {:?}: {}", merged.label(i), t.support, t.as_pauli().expect("symbolic"));
        }
        let p = merged.pauli_terms().expect("symbolic");
        let zero = (0..p.len()).all(|i| (i + 1..p.len()).all(|j| p[i].commutator(p[j]).is_zero()));
        claims.check(zero && merged.terms.len() == 2, format!("{name}: grouped terms commute"));
    }
    Ok(claims.0)
}

fn noncommuting_pairs(m: &ModelInstance) -> (usize, usize) {
    let p = m.pauli_terms().expect("symbolic");
    let mut bad = 0;
    let mut total = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            total += 1;
            if !p[i].commutator(p[j]).is_zero() {
                bad += 1;
            }
        }
    }
    (bad, total)
}

fn tiling(rows: usize, cols: usize) -> Result<bool> {
    if rows == 0 || cols == 0 {
        bail!("tiling needs at least one cell");
    }
    let m = cell_tiling(rows, cols);
    let mut claims = Claims(true);
    let (bad, total) = noncommuting_pairs(&m);
    println!("{rows}x{cols} tiling: {} qubits, {} terms", m.space.len(), m.terms.len());
    claims.check(bad > 0, format!("original terms: {bad} of {total} pairs do not commute"));
    let merged = coarse_grain_model(&m, &northeast_merge(rows, cols), false)?;
    let (bad, total) = noncommuting_pairs(&merged);
    println!("after the northeast merge: {} sites, {} grouped terms", merged.space.len(), merged.terms.len());
    claims.check(bad == 0, format!("grouped terms: {bad} of {total} pairs do not commute"));
    Ok(claims.0)
}
