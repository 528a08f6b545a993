use std::collections::{BTreeMap, BTreeSet};

use crate::error::Result;
use crate::graphs::coarse_grain;
use crate::model::{ModelInstance, ModelTerm, TermBody};
use crate::pauli::PauliSum;
use crate::tensor::{ComplexMatrix, SiteSpace};
use crate::SiteId;

struct Group {
    support: Vec<SiteId>,
    terms: Vec<usize>,
}

/// Re-supports a model on the quotient graph of `merge` (source → target).
///
/// A merged site holds its members in ascending order. Terms whose merged supports are
/// equal are summed. A term whose support shrank joins the first term whose merged
/// support strictly contains its own, preferring one that also touched a merged-away
/// site of the shrunk term. Pauli bodies keep their qubit labels.
pub fn coarse_grain_model(model: &ModelInstance, merge: &BTreeMap<SiteId, SiteId>, allow_nonadjacent: bool) -> Result<ModelInstance> {
    let (graph, map) = coarse_grain(&model.graph, merge, allow_nonadjacent)?;
    if map.iter().all(|(s, t)| s == t) {
        return Ok(model.clone());
    }
    let mut members: BTreeMap<SiteId, Vec<SiteId>> = BTreeMap::new();
    for (&s, &t) in &map {
        members.entry(t).or_default().push(s);
    }
    let dims = members
        .iter()
        .map(|(&t, ms)| Ok((t, ms.iter().map(|&s| model.space.dim_of(s)).product::<Result<usize>>()?)))
        .collect::<Result<Vec<_>>>()?;
    let space = SiteSpace::new(dims)?;
    let old_layout = model.qubit_layout();
    let layout: BTreeMap<SiteId, Vec<SiteId>> = members
        .iter()
        .filter(|(_, ms)| ms.iter().all(|s| old_layout.contains_key(s)))
        .map(|(&t, ms)| (t, ms.iter().flat_map(|s| old_layout[s].iter().copied()).collect()))
        .collect();

    let merged: Vec<Vec<SiteId>> =
        model.terms.iter().map(|t| t.support.iter().map(|s| map[s]).collect::<BTreeSet<_>>().into_iter().collect()).collect();
    let moved = |i: usize| -> BTreeSet<SiteId> { model.terms[i].support.iter().copied().filter(|s| map[s] != *s).collect() };

    let mut groups: Vec<Group> = Vec::new();
    for (i, s) in merged.iter().enumerate() {
        match groups.iter_mut().find(|g| &g.support == s) {
            Some(g) => g.terms.push(i),
            None => groups.push(Group { support: s.clone(), terms: vec![i] }),
        }
    }
    let mut parent: Vec<usize> = (0..groups.len()).collect();
    for gi in 0..groups.len() {
        let shrunk: Vec<usize> =
            groups[gi].terms.iter().copied().filter(|&i| merged[i].len() < model.terms[i].support.len()).collect();
        if shrunk.is_empty() {
            continue;
        }
        let gone: BTreeSet<SiteId> = shrunk.iter().flat_map(|&i| moved(i)).collect();
        let sup: BTreeSet<SiteId> = groups[gi].support.iter().copied().collect();
        let containers: Vec<usize> = (0..groups.len())
            .filter(|&h| {
                let hs: BTreeSet<SiteId> = groups[h].support.iter().copied().collect();
                h != gi && hs.len() > sup.len() && sup.is_subset(&hs)
            })
            .collect();
        let touches = |h: &usize| groups[*h].terms.iter().any(|&i| model.terms[i].support.iter().any(|s| gone.contains(s)));
        if let Some(&h) = containers.iter().find(|h| touches(h)).or(containers.first()) {
            parent[gi] = h;
        }
    }
    let root = |mut g: usize| {
        while parent[g] != g {
            g = parent[g];
        }
        g
    };
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (gi, group) in groups.iter().enumerate() {
        buckets.entry(root(gi)).or_default().extend(group.terms.iter().copied());
    }
    let mut ordered: Vec<(usize, Vec<usize>)> = buckets.into_iter().collect();
    for (_, ts) in ordered.iter_mut() {
        ts.sort_unstable();
    }
    ordered.sort_by_key(|(_, ts)| ts[0]);

    let mut terms = Vec::with_capacity(ordered.len());
    for (r, ts) in ordered {
        let support = groups[r].support.clone();
        let label = ts.iter().map(|&i| model.label(i)).collect::<Vec<_>>().join("+");
        let paulis: Option<Vec<&PauliSum>> = ts.iter().map(|&i| model.terms[i].as_pauli()).collect();
        let body = match paulis {
            Some(ps) if support.iter().all(|t| layout.contains_key(t)) => {
                TermBody::Pauli(ps.into_iter().fold(PauliSum::zero(), |acc, p| acc.add(p)))
            }
            _ => {
                let order: Vec<SiteId> = support.iter().flat_map(|t| members[t].iter().copied()).collect();
                let sub = model.space.subspace(&order)?;
                let n = sub.total_dim();
                let mut m = ComplexMatrix::zeros(n, n);
                for &i in &ts {
                    m += &model.term_operator(i)?.extend_to(&sub)?.permuted(&order)?.matrix;
                }
                TermBody::Dense(m)
            }
        };
        terms.push(ModelTerm { label: Some(label), support, body });
    }
    ModelInstance::with_layout(space, graph, terms, model.beta, layout)
}
