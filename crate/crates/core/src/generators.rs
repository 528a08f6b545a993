//! Built-in model families.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::Result;
use crate::graphs::{cliques, Graph};
use crate::model::{ModelInstance, ModelTerm};
use crate::pauli::{Pauli, PauliSum, PauliTerm};
use crate::tensor::random::{random_hermitian, random_real_diagonal, random_unitary};
use crate::tensor::{embed, kron, ComplexMatrix, SiteSpace, SupportedOperator};
use crate::SiteId;

/// Labels of the four triangle terms of the five-site cell, in term order.
pub const CELL_LABELS: [&str; 4] = ["down", "left", "up", "right"];

fn pauli(s: &str) -> PauliSum {
    s.parse().expect("static Pauli string")
}

fn labelled(label: String, sum: PauliSum) -> ModelTerm {
    ModelTerm::pauli(sum).with_label(label)
}

/// Five-site cell: corners 1 (top left), 2 (top right), 3 (bottom right), 4 (bottom left)
/// and center 5, with the four triangle terms `Z1Z2Y5`, `Z2Z3X5`, `Z3Z4Y5`, `Z4Z1X5`.
pub fn five_site_cell() -> ModelInstance {
    let mut edges = Vec::new();
    let mut terms = Vec::new();
    cell(&mut edges, &mut terms, [1, 2, 3, 4], 5, "");
    let graph = Graph::new(1..=5, edges).expect("cell graph");
    ModelInstance::new(SiteSpace::qubits(1..=5).expect("qubit sites"), graph, terms, 1.0).expect("cell model")
}

/// Edges and triangle terms of one cell with corners in clockwise order from the top left.
fn cell(edges: &mut Vec<(SiteId, SiteId)>, terms: &mut Vec<ModelTerm>, k: [SiteId; 4], ctr: SiteId, suffix: &str) {
    let letters = [Pauli::Y, Pauli::X, Pauli::Y, Pauli::X];
    for i in 0..4 {
        edges.push((k[i], k[(i + 1) % 4]));
        edges.push((k[i], ctr));
        let t = PauliTerm::real(1.0, [(k[i], Pauli::Z), (k[(i + 1) % 4], Pauli::Z), (ctr, letters[i])]);
        terms.push(labelled(format!("{}{suffix}", CELL_LABELS[i]), PauliSum::from_terms([t])));
    }
}

/// Corner id of lattice point `(r, c)` in a tiling with `cols` cells per row.
pub fn tiling_corner(cols: usize, r: usize, c: usize) -> SiteId {
    (r * (cols + 1) + c + 1) as SiteId
}

/// Center id of cell `(r, c)` in an `rows × cols` tiling.
pub fn tiling_center(rows: usize, cols: usize, r: usize, c: usize) -> SiteId {
    ((rows + 1) * (cols + 1) + r * cols + c + 1) as SiteId
}

/// `rows × cols` cells sharing corners; each cell carries the four triangle terms.
/// Row 0 is the northern edge.
pub fn cell_tiling(rows: usize, cols: usize) -> ModelInstance {
    let mut edges = Vec::new();
    let mut terms = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let k = [
                tiling_corner(cols, r, c),
                tiling_corner(cols, r, c + 1),
                tiling_corner(cols, r + 1, c + 1),
                tiling_corner(cols, r + 1, c),
            ];
            cell(&mut edges, &mut terms, k, tiling_center(rows, cols, r, c), &format!("[{r},{c}]"));
        }
    }
    let n = ((rows + 1) * (cols + 1) + rows * cols) as SiteId;
    let graph = Graph::new(1..=n, edges).expect("tiling graph");
    ModelInstance::new(SiteSpace::qubits(1..=n).expect("qubit sites"), graph, terms, 1.0).expect("tiling model")
}

/// Merges every cell center into its top-right corner.
pub fn northeast_merge(rows: usize, cols: usize) -> BTreeMap<SiteId, SiteId> {
    let mut m = BTreeMap::new();
    for r in 0..rows {
        for c in 0..cols {
            m.insert(tiling_center(rows, cols, r, c), tiling_corner(cols, r, c + 1));
        }
    }
    m
}

/// `Σ j Z_i Z_{i+1} + Σ h Z_i` on an open chain.
pub fn ising_chain(n: usize, j: f64, h: f64) -> ModelInstance {
    let mut terms = Vec::new();
    for i in 1..n as SiteId {
        terms.push(labelled(format!("zz{i}"), PauliSum::from_terms([PauliTerm::real(j, [(i, Pauli::Z), (i + 1, Pauli::Z)])])));
    }
    for i in 1..=n as SiteId {
        terms.push(labelled(format!("z{i}"), PauliSum::from_terms([PauliTerm::real(h, [(i, Pauli::Z)])])));
    }
    let space = SiteSpace::qubits(1..=n as SiteId).expect("qubit sites");
    ModelInstance::new(space, Graph::path(n), terms, 1.0).expect("chain model")
}

/// Open chain with alternating `X_i X_{i+1}` and `Z_i Z_{i+1}` bonds.
pub fn xxzz_chain(n: usize) -> ModelInstance {
    let mut terms = Vec::new();
    for i in 1..n as SiteId {
        let p = if i % 2 == 1 { Pauli::X } else { Pauli::Z };
        let name = if i % 2 == 1 { "xx" } else { "zz" };
        terms.push(labelled(format!("{name}{i}"), PauliSum::from_terms([PauliTerm::real(1.0, [(i, p), (i + 1, p)])])));
    }
    let space = SiteSpace::qubits(1..=n as SiteId).expect("qubit sites");
    ModelInstance::new(space, Graph::path(n), terms, 1.0).expect("chain model")
}

/// Cluster-state chain `Σ Z_{i-1} X_i Z_{i+1}` (boundary terms truncated) on the
/// graph joining each qubit to its two nearest neighbors on either side.
pub fn cluster_chain(n: usize) -> ModelInstance {
    let n32 = n as SiteId;
    let mut edges = Vec::new();
    for i in 1..=n32 {
        for j in [i + 1, i + 2] {
            if j <= n32 {
                edges.push((i, j));
            }
        }
    }
    let mut terms = Vec::new();
    for i in 1..=n32 {
        let mut letters = vec![(i, Pauli::X)];
        if i > 1 {
            letters.push((i - 1, Pauli::Z));
        }
        if i < n32 {
            letters.push((i + 1, Pauli::Z));
        }
        terms.push(labelled(format!("k{i}"), PauliSum::from_terms([PauliTerm::real(1.0, letters)])));
    }
    let graph = Graph::new(1..=n32, edges).expect("cluster graph");
    ModelInstance::new(SiteSpace::qubits(1..=n32).expect("qubit sites"), graph, terms, 1.0).expect("cluster model")
}

/// Random locally commuting model: diagonal terms on the vertices, edges and triangles
/// of a random graph, all conjugated by one random product unitary.
pub fn random_commuting_model<R: Rng + ?Sized>(rng: &mut R, n: usize, edge_prob: f64, scale: f64) -> Result<ModelInstance> {
    let graph = Graph::random(rng, n, edge_prob);
    let space = SiteSpace::qubits(1..=n as SiteId)?;
    let us: BTreeMap<SiteId, ComplexMatrix> = (1..=n as SiteId).map(|s| (s, random_unitary(rng, 2))).collect();
    let mut terms = Vec::new();
    for q in cliques(&graph, 3) {
        let d = 1usize << q.len();
        let diag = random_real_diagonal(rng, d).scale_real(scale);
        let u = q.iter().skip(1).fold(us[&q[0]].clone(), |acc, s| kron(&acc, &us[s]));
        let m = u.matmul(&diag).matmul(&u.adjoint());
        terms.push(ModelTerm::dense(&SupportedOperator::on(&space, q, m)?));
    }
    ModelInstance::new(space, graph, terms, 1.0)
}

/// Stabilizer generators `Z1Z2, Z2Z3, Z3Z4` on a four-qubit ring.
pub fn ring4_generators() -> Vec<PauliSum> {
    ["Z1 Z2", "Z2 Z3", "Z3 Z4"].iter().map(|s| pauli(s)).collect()
}

/// Qubit id of row `r`, column `c` of the 2×4 patch.
pub fn patch_qubit(r: u32, c: u32) -> SiteId {
    r * 4 + c + 1
}

/// A 2×4 toy surface-code patch: plaquettes `Z□0, X□1, Z□2` over column pairs
/// (0,1), (1,2), (2,3), boundary checks `X` on the outer columns and `Z` on the inner top pair.
pub fn surface_patch_generators() -> Vec<PauliSum> {
    let plaquette = |c: u32, p: Pauli| {
        PauliSum::from_terms([PauliTerm::real(
            1.0,
            [(patch_qubit(0, c), p), (patch_qubit(0, c + 1), p), (patch_qubit(1, c), p), (patch_qubit(1, c + 1), p)],
        )])
    };
    let pair = |a: SiteId, b: SiteId, p: Pauli| PauliSum::from_terms([PauliTerm::real(1.0, [(a, p), (b, p)])]);
    vec![
        plaquette(0, Pauli::Z),
        plaquette(1, Pauli::X),
        plaquette(2, Pauli::Z),
        pair(patch_qubit(0, 0), patch_qubit(1, 0), Pauli::X),
        pair(patch_qubit(0, 3), patch_qubit(1, 3), Pauli::X),
        pair(patch_qubit(0, 1), patch_qubit(0, 2), Pauli::Z),
    ]
}

/// Graph on `sites` in which the support of every generator is a clique.
pub fn stabilizer_graph(generators: &[PauliSum], sites: impl IntoIterator<Item = SiteId>) -> Result<Graph> {
    let mut edges = BTreeSet::new();
    for g in generators {
        let s = g.support();
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                edges.insert((s[i], s[j]));
            }
        }
    }
    Graph::new(sites, edges)
}

/// How an edge term acts on one endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// Arbitrary operators on a factor owned by this edge.
    Exclusive(usize),
    /// Functions of the rotated computational basis of a factor shared with other edges.
    Shared(usize),
}

struct SiteLayout {
    factors: usize,
    /// Rotation of every non-exclusive factor.
    rotations: Vec<ComplexMatrix>,
    sides: BTreeMap<SiteId, Side>,
    exclusive: BTreeSet<usize>,
}

impl SiteLayout {
    fn dim(&self) -> usize {
        1 << self.factors
    }

    /// `op` on factor `f`, identity elsewhere.
    fn lift(&self, f: usize, op: &ComplexMatrix) -> ComplexMatrix {
        let left = ComplexMatrix::identity(1 << f);
        let right = ComplexMatrix::identity(1 << (self.factors - f - 1));
        kron(&kron(&left, op), &right)
    }

    fn projector(&self, f: usize, b: usize) -> ComplexMatrix {
        let u = &self.rotations[f];
        let mut p = ComplexMatrix::zeros(2, 2);
        p[(b, b)] = crate::tensor::matrix::ONE;
        self.lift(f, &u.matmul(&p).matmul(&u.adjoint()))
    }
}

/// Locally commuting model on a triangle-free graph whose sites in `composite` are pairs
/// of qubit factors (dimension 4).
///
/// Each edge owns a factor of an endpoint exclusively or acts on a shared factor through
/// a fixed rotated basis. Edge terms may carry endpoint-local cross-factor pieces, and
/// vertex terms are diagonal in the rotated bases of non-exclusive factors.
pub fn triangle_free_model<R: Rng + ?Sized>(rng: &mut R, graph: &Graph, composite: &BTreeSet<SiteId>, scale: f64) -> Result<ModelInstance> {
    let mut layouts: BTreeMap<SiteId, SiteLayout> = BTreeMap::new();
    for v in graph.vertices() {
        let factors = if composite.contains(&v) { 2 } else { 1 };
        let nbrs: Vec<SiteId> = graph.neighbors(v)?.iter().copied().collect();
        let mut sides = BTreeMap::new();
        let mut exclusive = BTreeSet::new();
        match (factors, nbrs.len()) {
            (_, 0) => {}
            (1, 1) => {
                sides.insert(nbrs[0], Side::Exclusive(0));
                exclusive.insert(0);
            }
            (1, _) => {
                for &w in &nbrs {
                    sides.insert(w, Side::Shared(0));
                }
            }
            _ => {
                sides.insert(nbrs[0], Side::Exclusive(0));
                exclusive.insert(0);
                for &w in &nbrs[1..] {
                    sides.insert(w, Side::Shared(1));
                }
            }
        }
        let rotations = (0..factors).map(|_| random_unitary(rng, 2)).collect();
        layouts.insert(v, SiteLayout { factors, rotations, sides, exclusive });
    }
    let space = SiteSpace::new(layouts.iter().map(|(&v, l)| (v, l.dim())))?;
    let mut terms = Vec::new();

    for (u, v) in graph.edges() {
        let (lu, lv) = (&layouts[&u], &layouts[&v]);
        let ops_u = side_ops(rng, lu, lu.sides[&v], scale);
        let ops_v = side_ops(rng, lv, lv.sides[&u], scale);
        let mut m = ComplexMatrix::zeros(lu.dim() * lv.dim(), lu.dim() * lv.dim());
        for a in &ops_u {
            for b in &ops_v {
                m += &kron(a, b).scale_real(rng.gen_range(-1.0..1.0));
            }
        }
        // endpoint-local piece that does not commute with the rest of this term
        for (l, side, first) in [(lu, lu.sides[&v], true), (lv, lv.sides[&u], false)] {
            if let (Side::Exclusive(f), 2) = (side, l.factors) {
                let other = 1 - f;
                let local = l.lift(f, &random_hermitian(rng, 2)).matmul(&l.projector(other, 0)).scale_real(scale);
                let id = ComplexMatrix::identity(if first { lv.dim() } else { lu.dim() });
                m += &if first { kron(&local, &id) } else { kron(&id, &local) };
            }
        }
        let op = SupportedOperator::new(vec![u, v], vec![lu.dim(), lv.dim()], m.hermitian_part())?;
        terms.push(ModelTerm::dense(&op).with_label(format!("h_{u}_{v}")));
    }
    for (&v, l) in &layouts {
        let free: Vec<usize> = (0..l.factors).filter(|f| !l.exclusive.contains(f)).collect();
        if free.is_empty() {
            continue;
        }
        let mut m = ComplexMatrix::zeros(l.dim(), l.dim());
        for &f in &free {
            m += &l.projector(f, 0).scale_real(scale * rng.gen_range(-1.0..1.0));
        }
        if free.len() == 2 {
            m += &l.projector(0, 0).matmul(&l.projector(1, 1)).scale_real(scale * rng.gen_range(-1.0..1.0));
        }
        let op = SupportedOperator::new(vec![v], vec![l.dim()], m)?;
        terms.push(ModelTerm::dense(&op).with_label(format!("h_{v}")));
    }
    ModelInstance::new(space, graph.clone(), terms, 1.0)
}

/// Site operators an edge may use on one endpoint.
fn side_ops<R: Rng + ?Sized>(rng: &mut R, l: &SiteLayout, side: Side, scale: f64) -> Vec<ComplexMatrix> {
    match side {
        Side::Exclusive(f) => (0..2).map(|_| l.lift(f, &random_hermitian(rng, 2)).scale_real(scale)).collect(),
        Side::Shared(f) => (0..2).map(|b| l.projector(f, b)).collect(),
    }
}

/// The triangle-free graphs of the decomposition corpus, with alternate sites composite.
pub fn triangle_free_graphs() -> Vec<(String, Graph)> {
    vec![
        ("path4".into(), Graph::path(4)),
        ("path5".into(), Graph::path(5)),
        ("cycle4".into(), Graph::cycle(4)),
        ("cycle6".into(), Graph::cycle(6)),
        ("star3".into(), Graph::star(3)),
        ("grid2x3".into(), Graph::grid(2, 3)),
    ]
}

/// Odd site ids are composite.
pub fn alternate_composite(g: &Graph) -> BTreeSet<SiteId> {
    g.vertices().filter(|v| v % 2 == 1).collect()
}

/// `Σ terms` restricted to the union support of the given term indices.
pub fn partial_hamiltonian(model: &ModelInstance, idx: &[usize]) -> Result<SupportedOperator> {
    let sites: BTreeSet<SiteId> = idx.iter().flat_map(|&i| model.terms[i].support.iter().copied()).collect();
    let sites: Vec<SiteId> = sites.into_iter().collect();
    let sub = model.space.subspace(&sites)?;
    let n = sub.total_dim();
    let mut m = ComplexMatrix::zeros(n, n);
    for &i in idx {
        m += &embed(&model.term_operator(i)?, &sub)?;
    }
    SupportedOperator::new(sites, sub.dims().to_vec(), m)
}
