//! Interaction graphs: cliques, shielding, spanning partitions and coarse-graining.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use rand::Rng;

use crate::error::{QmnError, Result};
use crate::SiteId;

/// Largest vertex count accepted by partition enumeration.
pub const PARTITION_CAP: usize = 14;

pub type VertexSet = BTreeSet<SiteId>;

/// Simple undirected graph on site ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    adj: BTreeMap<SiteId, VertexSet>,
}

impl Graph {
    /// Duplicate edges collapse; self-loops and unknown endpoints are errors.
    pub fn new(vertices: impl IntoIterator<Item = SiteId>, edges: impl IntoIterator<Item = (SiteId, SiteId)>) -> Result<Self> {
        let mut adj: BTreeMap<SiteId, VertexSet> = vertices.into_iter().map(|v| (v, VertexSet::new())).collect();
        for (a, b) in edges {
            if a == b {
                return Err(QmnError::InvalidGraph(format!("self-loop on {a}")));
            }
            for v in [a, b] {
                if !adj.contains_key(&v) {
                    return Err(QmnError::InvalidGraph(format!("edge ({a}, {b}) uses unknown vertex {v}")));
                }
            }
            adj.get_mut(&a).expect("checked").insert(b);
            adj.get_mut(&b).expect("checked").insert(a);
        }
        Ok(Self { adj })
    }

    /// Graph whose vertices are exactly the edge endpoints.
    pub fn from_edges(edges: &[(SiteId, SiteId)]) -> Result<Self> {
        let vs: VertexSet = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        Self::new(vs, edges.iter().copied())
    }

    pub fn path(n: usize) -> Self {
        let n = n as SiteId;
        Self::new(1..=n, (1..n).map(|i| (i, i + 1))).expect("valid path")
    }

    pub fn cycle(n: usize) -> Self {
        let n = n as SiteId;
        Self::new(1..=n, (1..=n).map(|i| (i, i % n + 1))).expect("valid cycle")
    }

    pub fn complete(n: usize) -> Self {
        let n = n as SiteId;
        Self::new(1..=n, (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j)))).expect("valid complete graph")
    }

    /// `K_{1,k}` with center 1 and leaves `2..=k+1`.
    pub fn star(k: usize) -> Self {
        let n = k as SiteId + 1;
        Self::new(1..=n, (2..=n).map(|j| (1, j))).expect("valid star")
    }

    /// `rows × cols` grid; vertex `(r, c)` has id `r·cols + c + 1`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let id = |r: usize, c: usize| (r * cols + c + 1) as SiteId;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c)));
                }
            }
        }
        Self::new(1..=(rows * cols) as SiteId, edges).expect("valid grid")
    }

    /// Erdős–Rényi graph on `1..=n` with edge probability `p`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Self {
        let n = n as SiteId;
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                if rng.gen::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Self::new(1..=n, edges).expect("valid random graph")
    }

    pub fn vertices(&self) -> impl Iterator<Item = SiteId> + '_ {
        self.adj.keys().copied()
    }

    pub fn vertex_set(&self) -> VertexSet {
        self.adj.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn contains(&self, v: SiteId) -> bool {
        self.adj.contains_key(&v)
    }

    /// Edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(SiteId, SiteId)> {
        self.adj.iter().flat_map(|(&a, ns)| ns.range(a + 1..).map(move |&b| (a, b))).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: SiteId) -> Result<&VertexSet> {
        self.adj.get(&v).ok_or(QmnError::UnknownSite(v))
    }

    pub fn has_edge(&self, a: SiteId, b: SiteId) -> bool {
        self.adj.get(&a).is_some_and(|n| n.contains(&b))
    }

    pub fn max_degree(&self) -> usize {
        self.adj.values().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn is_clique(&self, set: &[SiteId]) -> bool {
        set.iter().enumerate().all(|(i, &a)| set[i + 1..].iter().all(|&b| self.has_edge(a, b)))
    }

    /// Connected components after deleting `removed`, each sorted, ordered by smallest vertex.
    pub fn components_without(&self, removed: &VertexSet) -> Vec<VertexSet> {
        let mut seen = removed.clone();
        let mut out = Vec::new();
        for &start in self.adj.keys() {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = VertexSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &self.adj[&v] {
                    if seen.insert(w) {
                        comp.insert(w);
                        queue.push_back(w);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Graphviz DOT text, optionally coloring a partition.
    pub fn to_dot(&self, partition: Option<&Partition>) -> String {
        let mut s = String::from("graph G {\n");
        for v in self.vertices() {
            let color = partition.and_then(|p| {
                if p.a.contains(&v) {
                    Some("lightblue")
                } else if p.b.contains(&v) {
                    Some("lightgray")
                } else if p.c.contains(&v) {
                    Some("lightsalmon")
                } else {
                    None
                }
            });
            match color {
                Some(c) => writeln!(s, "  {v} [style=filled, fillcolor={c}];").expect("string write"),
                None => writeln!(s, "  {v};").expect("string write"),
            }
        }
        for (a, b) in self.edges() {
            writeln!(s, "  {a} -- {b};").expect("string write");
        }
        s.push_str("}\n");
        s
    }
}

/// Three disjoint vertex sets; `A` and `C` non-empty, `B` possibly empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    pub a: VertexSet,
    pub b: VertexSet,
    pub c: VertexSet,
}

impl Partition {
    pub fn new(
        a: impl IntoIterator<Item = SiteId>,
        b: impl IntoIterator<Item = SiteId>,
        c: impl IntoIterator<Item = SiteId>,
    ) -> Self {
        Self { a: a.into_iter().collect(), b: b.into_iter().collect(), c: c.into_iter().collect() }
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.a.is_empty() || self.c.is_empty() {
            return Err(QmnError::InvalidPartition("A and C must be non-empty".into()));
        }
        if !self.a.is_disjoint(&self.b) || !self.a.is_disjoint(&self.c) || !self.b.is_disjoint(&self.c) {
            return Err(QmnError::InvalidPartition("regions overlap".into()));
        }
        for &v in self.a.iter().chain(&self.b).chain(&self.c) {
            if !g.contains(v) {
                return Err(QmnError::UnknownSite(v));
            }
        }
        Ok(())
    }

    pub fn union(&self) -> VertexSet {
        self.a.iter().chain(&self.b).chain(&self.c).copied().collect()
    }

    pub fn is_spanning(&self, g: &Graph) -> bool {
        self.a.len() + self.b.len() + self.c.len() == g.len()
    }

    /// Orientation with `A` holding the smallest vertex of `A ∪ C`.
    pub fn canonical(self) -> Self {
        if self.c.first() < self.a.first() {
            Self { a: self.c, b: self.b, c: self.a }
        } else {
            self
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |s: &VertexSet| s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "A={{{}}} B={{{}}} C={{{}}}", set(&self.a), set(&self.b), set(&self.c))
    }
}

/// All complete subgraphs with `1..=max_size` vertices, ordered by size then lexicographically.
pub fn cliques(g: &Graph, max_size: usize) -> Vec<Vec<SiteId>> {
    let mut out: Vec<Vec<SiteId>> = Vec::new();
    let mut layer: Vec<Vec<SiteId>> = g.vertices().map(|v| vec![v]).collect();
    let max_size = max_size.min(g.max_degree() + 1);
    for _ in 0..max_size {
        if layer.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for c in &layer {
            let last = *c.last().expect("non-empty clique");
            for &w in g.adj[&last].range(last + 1..) {
                if c.iter().all(|&u| g.has_edge(u, w)) {
                    let mut e = c.clone();
                    e.push(w);
                    next.push(e);
                }
            }
        }
        out.append(&mut layer);
        layer = next;
    }
    out
}

/// First triangle in lexicographic order, if any.
pub fn find_triangle(g: &Graph) -> Option<[SiteId; 3]> {
    for (a, b) in g.edges() {
        if let Some(&c) = g.adj[&a].intersection(&g.adj[&b]).find(|&&c| c > b) {
            return Some([a, b, c]);
        }
    }
    None
}

pub fn is_triangle_free(g: &Graph) -> bool {
    find_triangle(g).is_none()
}

/// Whether every path from `A` to `C` passes through `B`.
pub fn shields(g: &Graph, p: &Partition) -> Result<bool> {
    p.validate(g)?;
    Ok(g.components_without(&p.b).iter().all(|comp| comp.is_disjoint(&p.a) || comp.is_disjoint(&p.c)))
}

fn check_cap(g: &Graph, cap: usize) -> Result<()> {
    if g.len() > cap {
        return Err(QmnError::CapExceeded { what: "vertex count", value: g.len(), cap });
    }
    Ok(())
}

/// Every spanning partition `(A, B, C)` in which `B` shields `A` from `C`, one per
/// `{(A,B,C), (C,B,A)}` pair. Ordered by `B` (as a bit mask over sorted vertices), then by
/// the assignment of the remaining components.
pub fn spanning_shield_partitions(g: &Graph) -> Result<Vec<Partition>> {
    check_cap(g, PARTITION_CAP)?;
    let verts: Vec<SiteId> = g.vertices().collect();
    let n = verts.len();
    let mut out = Vec::new();
    for bmask in 0u32..(1 << n) {
        let b: VertexSet = (0..n).filter(|i| bmask >> i & 1 == 1).map(|i| verts[i]).collect();
        let comps = g.components_without(&b);
        let k = comps.len();
        if k < 2 {
            continue;
        }
        // comps[0] holds the smallest free vertex and always goes to A
        for assign in 0u32..(1 << (k - 1)) {
            if assign == (1 << (k - 1)) - 1 {
                continue;
            }
            let mut a = comps[0].clone();
            let mut c = VertexSet::new();
            for (j, comp) in comps.iter().enumerate().skip(1) {
                if assign >> (j - 1) & 1 == 1 {
                    a.extend(comp);
                } else {
                    c.extend(comp);
                }
            }
            out.push(Partition { a, b: b.clone(), c });
        }
    }
    Ok(out)
}

/// Every shielding partition (not necessarily spanning), canonically oriented.
pub fn all_shield_partitions(g: &Graph, cap: usize) -> Result<Vec<Partition>> {
    check_cap(g, cap)?;
    let verts: Vec<SiteId> = g.vertices().collect();
    let n = verts.len();
    let mut out = Vec::new();
    let total = 4usize.pow(n as u32);
    for code in 0..total {
        let mut p = Partition::new([], [], []);
        let mut x = code;
        for &v in &verts {
            match x % 4 {
                1 => p.a.insert(v),
                2 => p.b.insert(v),
                3 => p.c.insert(v),
                _ => false,
            };
            x /= 4;
        }
        if p.a.is_empty() || p.c.is_empty() || p.c.first() < p.a.first() {
            continue;
        }
        if shields(g, &p)? {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Grows `A` and `C` to cover the whole graph while keeping `B` a shield. Components of
/// `G − B` touching `A` join `A`, those touching `C` join `C`, and the remaining islands join `A`.
pub fn expand_to_spanning(g: &Graph, p: &Partition) -> Result<Partition> {
    if !shields(g, p)? {
        return Err(QmnError::NotShielding);
    }
    if p.is_spanning(g) {
        return Err(QmnError::InvalidPartition("partition already spans the graph".into()));
    }
    let mut out = p.clone();
    for comp in g.components_without(&p.b) {
        if comp.is_disjoint(&p.c) {
            out.a.extend(comp);
        } else {
            out.c.extend(comp);
        }
    }
    Ok(out)
}

/// Quotient of `g` under `merge` (source → target). Returns the new graph and the site map
/// for every vertex of `g`. Unless `allow_nonadjacent`, each source must neighbor its target.
pub fn coarse_grain(
    g: &Graph,
    merge: &BTreeMap<SiteId, SiteId>,
    allow_nonadjacent: bool,
) -> Result<(Graph, BTreeMap<SiteId, SiteId>)> {
    for (&s, &t) in merge {
        if !g.contains(s) {
            return Err(QmnError::UnknownSite(s));
        }
        if !g.contains(t) {
            return Err(QmnError::UnknownSite(t));
        }
        if s != t && merge.get(&t).is_some_and(|&tt| tt != t) {
            return Err(QmnError::InvalidMerge(format!("{s} -> {t} is not idempotent ({t} -> {})", merge[&t])));
        }
        if s != t && !allow_nonadjacent && !g.has_edge(s, t) {
            return Err(QmnError::InvalidMerge(format!("{s} and {t} are not adjacent")));
        }
    }
    let map: BTreeMap<SiteId, SiteId> = g.vertices().map(|v| (v, merge.get(&v).copied().unwrap_or(v))).collect();
    let verts: VertexSet = map.values().copied().collect();
    let edges = g.edges().into_iter().map(|(a, b)| (map[&a], map[&b])).filter(|(a, b)| a != b);
    Ok((Graph::new(verts, edges)?, map))
}
