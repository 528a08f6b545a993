//! Symbolic algebra of multi-qubit Pauli words.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{QmnError, Result};
use crate::tensor::matrix::{kron, paulis, ComplexMatrix, C64, ONE, ZERO};
use crate::tensor::space::{SiteSpace, SupportedOperator};
use crate::SiteId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::X => paulis::x(),
            Pauli::Y => paulis::y(),
            Pauli::Z => paulis::z(),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Option<Pauli>> {
        match c.to_ascii_uppercase() {
            'I' => Some(None),
            'X' => Some(Some(Pauli::X)),
            'Y' => Some(Some(Pauli::Y)),
            'Z' => Some(Some(Pauli::Z)),
            _ => None,
        }
    }

    /// `a · b = i^k · c`, with `c = None` for the identity.
    fn product(a: Pauli, b: Pauli) -> (u8, Option<Pauli>) {
        use Pauli::*;
        match (a, b) {
            _ if a == b => (0, None),
            (X, Y) => (1, Some(Z)),
            (Y, Z) => (1, Some(X)),
            (Z, X) => (1, Some(Y)),
            (Y, X) => (3, Some(Z)),
            (Z, Y) => (3, Some(X)),
            (X, Z) => (3, Some(Y)),
            _ => unreachable!(),
        }
    }
}

/// Letters on sites, sorted by site id, identities omitted.
pub type PauliWord = Vec<(SiteId, Pauli)>;

/// Multiplies by `i^k` exactly.
fn times_i_pow(c: C64, k: u8) -> C64 {
    match k % 4 {
        0 => c,
        1 => C64::new(-c.im, c.re),
        2 => C64::new(-c.re, -c.im),
        _ => C64::new(c.im, -c.re),
    }
}

/// Product of two words: `a · b = i^k · w`.
pub fn word_product(a: &[(SiteId, Pauli)], b: &[(SiteId, Pauli)]) -> (u8, PauliWord) {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut k = 0u8;
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push(b[j]);
            j += 1;
        } else {
            let (p, c) = Pauli::product(a[i].1, b[j].1);
            k = (k + p) % 4;
            if let Some(c) = c {
                out.push((a[i].0, c));
            }
            i += 1;
            j += 1;
        }
    }
    (k, out)
}

/// Whether two words commute: an even number of sites carry different non-identity letters.
pub fn words_commute(a: &[(SiteId, Pauli)], b: &[(SiteId, Pauli)]) -> bool {
    let (mut i, mut j, mut clashes) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if a[i].1 != b[j].1 {
                    clashes += 1;
                }
                i += 1;
                j += 1;
            }
        }
    }
    clashes % 2 == 0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coeff: C64,
    word: PauliWord,
}

impl PauliTerm {
    /// Builds a term from `(site, letter)` pairs in any order. Repeated sites are multiplied out.
    pub fn new(coeff: C64, letters: impl IntoIterator<Item = (SiteId, Pauli)>) -> Self {
        let mut t = Self { coeff, word: Vec::new() };
        for (s, p) in letters {
            t = t.multiply(&Self { coeff: ONE, word: vec![(s, p)] });
        }
        t
    }

    pub fn real(coeff: f64, letters: impl IntoIterator<Item = (SiteId, Pauli)>) -> Self {
        Self::new(C64::new(coeff, 0.0), letters)
    }

    pub fn identity(coeff: C64) -> Self {
        Self { coeff, word: Vec::new() }
    }

    pub fn word(&self) -> &[(SiteId, Pauli)] {
        &self.word
    }

    pub fn support(&self) -> Vec<SiteId> {
        self.word.iter().map(|p| p.0).collect()
    }

    pub fn letter_at(&self, site: SiteId) -> Option<Pauli> {
        self.word.iter().find(|p| p.0 == site).map(|p| p.1)
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }

    pub fn multiply(&self, other: &Self) -> Self {
        let (k, word) = word_product(&self.word, &other.word);
        Self { coeff: times_i_pow(self.coeff * other.coeff, k), word }
    }

    pub fn commutes(&self, other: &Self) -> bool {
        words_commute(&self.word, &other.word)
    }

    /// `[P, Q]`: zero when the words commute, `2PQ` otherwise.
    pub fn commutator(&self, other: &Self) -> PauliSum {
        if self.commutes(other) {
            return PauliSum::zero();
        }
        let mut p = self.multiply(other);
        p.coeff *= 2.0;
        PauliSum::from_terms([p])
    }

    pub fn adjoint(&self) -> Self {
        Self { coeff: self.coeff.conj(), word: self.word.clone() }
    }

    /// Relabels sites through `f`; the map must be injective on the support.
    pub fn relabel(&self, f: impl Fn(SiteId) -> SiteId) -> Self {
        Self::new(self.coeff, self.word.iter().map(|&(s, p)| (f(s), p)))
    }

    /// Dense matrix on the ascending support.
    pub fn word_matrix(&self) -> ComplexMatrix {
        self.word.iter().fold(ComplexMatrix::identity(1), |acc, &(_, p)| kron(&acc, &p.matrix()))
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_coeff(f, self.coeff)?;
        if self.word.is_empty() {
            return write!(f, " * I");
        }
        write!(f, " *")?;
        for (s, p) in &self.word {
            write!(f, " {}{}", p.letter(), s)?;
        }
        Ok(())
    }
}

fn write_coeff(f: &mut fmt::Formatter<'_>, c: C64) -> fmt::Result {
    if c.im == 0.0 {
        write!(f, "{:?}", c.re)
    } else if c.re == 0.0 {
        write!(f, "{:?}i", c.im)
    } else {
        let sign = if c.im < 0.0 { '-' } else { '+' };
        write!(f, "({:?}{}{:?}i)", c.re, sign, c.im.abs())
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (optionally in parentheses).
pub fn parse_complex(s: &str) -> Result<C64> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')').trim();
    let err = || QmnError::Parse(format!("invalid coefficient '{s}'"));
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| err());
    };
    // split at the last sign that is not part of an exponent and not leading
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let imag = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| err()),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].trim().parse::<f64>().map_err(|_| err())?;
            Ok(C64::new(re, imag(body[k..].trim())?))
        }
        None => Ok(C64::new(0.0, imag(body.trim())?)),
    }
}

impl FromStr for PauliTerm {
    type Err = QmnError;

    /// `"1.0 * Z1 Z2 Y5"`, `"(0.5-2i) * X3"`, `"Z1 Z2"`, `"-2 * I"`.
    fn from_str(s: &str) -> Result<Self> {
        let (coeff, word) = match s.split_once('*') {
            Some((c, w)) => (parse_complex(c)?, w),
            None => (ONE, s),
        };
        let mut letters = Vec::new();
        for tok in word.split_whitespace() {
            let mut chars = tok.chars();
            let c = chars.next().expect("non-empty token");
            let letter = Pauli::from_letter(c).ok_or_else(|| QmnError::Parse(format!("invalid Pauli token '{tok}'")))?;
            let rest = chars.as_str();
            if rest.is_empty() && letter.is_none() {
                continue;
            }
            let site: SiteId = rest.parse().map_err(|_| QmnError::Parse(format!("invalid site in token '{tok}'")))?;
            if let Some(p) = letter {
                letters.push((site, p));
            }
        }
        Ok(Self::new(coeff, letters))
    }
}

/// Linear combination of distinct Pauli words, kept in canonical (site, letter) order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PauliSum {
    terms: BTreeMap<PauliWord, C64>,
}

impl PauliSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = PauliTerm>) -> Self {
        let mut s = Self::zero();
        for t in terms {
            s.add_term(t);
        }
        s
    }

    pub fn add_term(&mut self, t: PauliTerm) {
        if t.coeff == ZERO {
            return;
        }
        let e = self.terms.entry(t.word.clone()).or_insert(ZERO);
        *e += t.coeff;
        if *e == ZERO {
            self.terms.remove(&t.word);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = PauliTerm> + '_ {
        self.terms.iter().map(|(w, &c)| PauliTerm { coeff: c, word: w.clone() })
    }

    /// Union support, ascending.
    pub fn support(&self) -> Vec<SiteId> {
        let mut s: Vec<SiteId> = self.terms.keys().flat_map(|w| w.iter().map(|p| p.0)).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_terms(self.terms().map(|mut t| {
            t.coeff *= c;
            t
        }))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut s = self.clone();
        for t in other.terms() {
            s.add_term(t);
        }
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn multiply(&self, other: &Self) -> Self {
        let mut s = Self::zero();
        for a in self.terms() {
            for b in other.terms() {
                s.add_term(a.multiply(&b));
            }
        }
        s
    }

    /// Exact `PQ - QP`.
    pub fn commutator(&self, other: &Self) -> Self {
        let mut s = Self::zero();
        for a in self.terms() {
            for b in other.terms() {
                if !a.commutes(&b) {
                    let mut p = a.multiply(&b);
                    p.coeff *= 2.0;
                    s.add_term(p);
                }
            }
        }
        s
    }

    /// Drops terms with `|c| <= tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self::from_terms(self.terms().filter(|t| t.coeff.norm() > tol))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_terms(self.terms().map(|t| t.adjoint()))
    }

    pub fn is_hermitian(&self) -> bool {
        self.terms.values().all(|c| c.im == 0.0)
    }

    /// `Σ |c|²`; the Frobenius norm squared on `n` qubits is `2^n` times this.
    pub fn coefficient_norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn relabel(&self, f: impl Fn(SiteId) -> SiteId) -> Self {
        Self::from_terms(self.terms().map(|t| t.relabel(&f)))
    }

    /// Dense operator on the union support (ascending). Every site must be a qubit of `space`.
    pub fn to_dense(&self, space: &SiteSpace) -> Result<SupportedOperator> {
        let support = self.support();
        self.to_dense_on(space, &support)
    }

    /// Dense operator on a chosen ascending support containing the union support.
    pub fn to_dense_on(&self, space: &SiteSpace, support: &[SiteId]) -> Result<SupportedOperator> {
        for &s in support {
            if space.dim_of(s)? != 2 {
                return Err(QmnError::NonQubitSite(s));
            }
        }
        let mut support = support.to_vec();
        support.sort_unstable();
        support.dedup();
        for s in self.support() {
            if support.binary_search(&s).is_err() {
                return Err(QmnError::UnknownSite(s));
            }
        }
        let n = 1usize << support.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for t in self.terms() {
            add_word_dense(&mut m, &support, t.word(), t.coeff);
        }
        SupportedOperator::new(support.clone(), vec![2; support.len()], m)
    }
}

/// Adds `c · word` to a dense matrix on `support` (qubits, ascending).
/// A Pauli word is a signed, phased permutation matrix, so this is O(2^n).
fn add_word_dense(m: &mut ComplexMatrix, support: &[SiteId], word: &[(SiteId, Pauli)], c: C64) {
    let n = support.len();
    let mut flip = 0usize;
    let mut zmask = 0usize;
    let mut ny = 0u8;
    for &(s, p) in word {
        let pos = support.binary_search(&s).expect("checked");
        let bit = 1usize << (n - 1 - pos);
        match p {
            Pauli::X => flip |= bit,
            Pauli::Y => {
                flip |= bit;
                zmask |= bit;
                ny += 1;
            }
            Pauli::Z => zmask |= bit,
        }
    }
    // Y = i X Z, so a word equals i^{#Y} X^flip Z^zmask; <r| X^f Z^z |col> with col = r ^ f
    let base = times_i_pow(c, ny % 4);
    for r in 0..1usize << n {
        let col = r ^ flip;
        let sign = if (col & zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m[(r, col)] += base * sign;
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, t) in self.terms().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliSum {
    type Err = QmnError;

    /// Terms separated by `;`, newlines, or a free-standing ` + ` / ` - `
    /// (the form written by `Display`).
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Self::zero();
        for part in s.split([';', '\n']) {
            for (negate, piece) in split_signed(part) {
                let t: PauliTerm = piece.parse()?;
                out.add_term(if negate { PauliTerm::new(-t.coeff, t.word) } else { t });
            }
        }
        Ok(out)
    }
}

/// Splits at `+`/`-` that sit outside parentheses with whitespace on both sides.
fn split_signed(s: &str) -> Vec<(bool, &str)> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let (mut depth, mut start, mut negate) = (0i32, 0usize, false);
    for k in 0..b.len() {
        match b[k] {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' | b'-' if depth == 0 && k > 0 && k + 1 < b.len() && b[k - 1].is_ascii_whitespace() && b[k + 1].is_ascii_whitespace() => {
                out.push((negate, &s[start..k]));
                negate = b[k] == b'-';
                start = k + 1;
            }
            _ => {}
        }
    }
    out.push((negate, &s[start..]));
    out.into_iter().map(|(n, p)| (n, p.trim())).filter(|(_, p)| !p.is_empty()).collect()
}

impl From<PauliTerm> for PauliSum {
    fn from(t: PauliTerm) -> Self {
        Self::from_terms([t])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::embed;
    use proptest::prelude::*;

    fn t(s: &str) -> PauliTerm {
        s.parse().unwrap()
    }

    fn dense(p: &PauliTerm, n: u32) -> ComplexMatrix {
        let space = SiteSpace::qubits(1..=n).unwrap();
        let op = PauliSum::from(p.clone()).to_dense(&space).unwrap();
        embed(&op, &space).unwrap()
    }

    /// Kronecker-composition oracle, independent of `add_word_dense`.
    fn kron_oracle(p: &PauliTerm, n: u32) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(1);
        for s in 1..=n {
            let f = p.letter_at(s).map(Pauli::matrix).unwrap_or_else(|| ComplexMatrix::identity(2));
            m = kron(&m, &f);
        }
        m.scale(p.coeff)
    }

    #[test]
    fn single_site_products() {
        assert_eq!(t("X1").multiply(&t("Y1")), PauliTerm::new(crate::tensor::matrix::I, [(1, Pauli::Z)]));
        let zz = t("Z1").multiply(&t("Z1"));
        assert!(zz.is_identity());
        assert_eq!(zz.coeff, ONE);
    }

    #[test]
    fn counterexample_product_and_commutator() {
        let down = t("Z1 Z2 Y5");
        let left = t("Z2 Z3 X5");
        let p = down.multiply(&left);
        assert_eq!(p, PauliTerm::new(C64::new(0.0, -1.0), [(1, Pauli::Z), (3, Pauli::Z), (5, Pauli::Z)]));
        assert!(dense(&p, 5).max_abs_diff(&dense(&down, 5).matmul(&dense(&left, 5))) < 1e-15);
        let c = PauliSum::from(down.clone()).commutator(&left.clone().into());
        assert_eq!(c.to_string(), "-2.0i * Z1 Z3 Z5");
        assert!(!down.commutes(&left));
        assert!(down.commutes(&t("Z3 Z4 Y5")));
        assert!(down.commutes(&down));
    }

    #[test]
    fn grouped_terms_commute() {
        let h: Vec<PauliSum> = ["Z1 Z2 Y5", "Z2 Z3 X5", "Z3 Z4 Y5", "Z4 Z1 X5"].iter().map(|s| s.parse().unwrap()).collect();
        assert!(h[0].add(&h[3]).commutator(&h[1].add(&h[2])).is_zero());
        assert!(h[0].add(&h[1]).commutator(&h[3].add(&h[2])).is_zero());
        assert!(h[0].commutator(&PauliSum::from(PauliTerm::identity(ONE))).is_zero());
    }

    #[test]
    fn dense_forms() {
        let space = SiteSpace::qubits([1]).unwrap();
        let z = PauliSum::from(t("Z1")).to_dense(&space).unwrap();
        assert_eq!(z.matrix, ComplexMatrix::from_real_diagonal(&[1.0, -1.0]));
        let h = t("Z1 Z2 Y5");
        assert!(dense(&h, 5).max_abs_diff(&kron_oracle(&h, 5)) == 0.0);
        let zero = PauliSum::zero().to_dense_on(&space, &[1]).unwrap();
        assert!(zero.is_zero(0.0));
        let qutrit = SiteSpace::new([(1, 3)]).unwrap();
        assert_eq!(PauliSum::from(t("X1")).to_dense(&qutrit).unwrap_err(), QmnError::NonQubitSite(1));
    }

    #[test]
    fn text_roundtrip() {
        for s in ["1.0 * Z1 Z2 Y5", "(0.5-2.0i) * X3", "-2.0 * I", "3.0i * Y1"] {
            assert_eq!(t(s).to_string(), s);
        }
        assert_eq!(t("Z1 Z2"), PauliTerm::real(1.0, [(1, Pauli::Z), (2, Pauli::Z)]));
        assert_eq!(parse_complex("1e-3-2e+1i").unwrap(), C64::new(1e-3, -20.0));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert!("1.0 * Q1".parse::<PauliTerm>().is_err());
        assert!("1.0 * Zx".parse::<PauliTerm>().is_err());
        let s: PauliSum = "1 * X1; 1 * X1; -2 * X1; Z2".parse().unwrap();
        assert_eq!(s.to_string(), "1.0 * Z2");
        let sum: PauliSum = "0.5 * Z2 Z3 + X2 - (1.0-2.0i) * Y1 + -3.0 * Z1".parse().unwrap();
        assert_eq!(sum.len(), 4);
        assert_eq!(sum.to_string().parse::<PauliSum>().unwrap(), sum);
        assert!(sum.terms().any(|t| t.coeff == C64::new(-1.0, 2.0)));
    }

    fn arb_term(n: u32) -> impl Strategy<Value = PauliTerm> {
        (prop::collection::vec(0u8..4, n as usize), -3i32..4, 0u8..4).prop_map(move |(letters, c, ph)| {
            let word = letters.iter().enumerate().filter_map(|(i, &l)| {
                let p = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)][l as usize]?;
                Some((i as SiteId + 1, p))
            });
            PauliTerm::new(times_i_pow(C64::new(c as f64 + 0.5, 0.0), ph), word)
        })
    }

    proptest! {
        #[test]
        fn commutation_agrees_with_dense(p in arb_term(4), q in arb_term(4)) {
            let sym = PauliSum::from(p.clone()).commutator(&q.clone().into());
            let (a, b) = (dense(&p, 4), dense(&q, 4));
            let dn = a.commutator(&b).frobenius_norm();
            prop_assert_eq!(p.commutes(&q), sym.is_zero());
            prop_assert_eq!(p.commutes(&q), dn <= 1e-12);
            let space = SiteSpace::qubits(1..=4).unwrap();
            let sd = sym.to_dense_on(&space, &[1, 2, 3, 4]).unwrap();
            prop_assert!(sd.matrix.max_abs_diff(&a.commutator(&b)) < 1e-12);
        }

        #[test]
        fn multiply_is_associative_and_exact(p in arb_term(4), q in arb_term(4), r in arb_term(4)) {
            let lhs = p.multiply(&q).multiply(&r);
            let rhs = p.multiply(&q.multiply(&r));
            prop_assert_eq!(&lhs, &rhs);
            prop_assert!((lhs.coeff.norm() - p.coeff.norm() * q.coeff.norm() * r.coeff.norm()).abs() < 1e-12);
            prop_assert!(dense(&lhs, 4).max_abs_diff(&kron_oracle(&p, 4).matmul(&kron_oracle(&q, 4)).matmul(&kron_oracle(&r, 4))) < 1e-12);
        }
    }
}
