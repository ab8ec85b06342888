//! Built-in finitely generated groups with canonical normal forms.
//!
//! Five families are supported: the lattices ℤᵏ, free groups F_r, the
//! discrete Heisenberg group, the lamplighter group ℤ₂ ≀ ℤ, and the solvable
//! Baumslag–Solitar group BS(1,2) = ⟨a,b | aba⁻¹ = b²⟩. Each element is held
//! in a unique normal form, so equality, hashing and ordering of
//! [`GroupElement`] values coincide with group-element identity, and the
//! byte-level [`GroupElement::canonical_key`] is stable across runs.
//!
//! Normal forms:
//! - lattice(k): integer k-vector;
//! - free(r): freely reduced word (no adjacent letter–inverse pair);
//! - heisenberg: integer triple (x,y,z) with the law
//!   (x,y,z)(x',y',z') = (x+x', y+y', z+z'+x·y'), matching upper-triangular
//!   3×3 integer matrices;
//! - lamplighter: (finite sorted set of lit lamp positions, cursor), where
//!   the toggle `s` acts at the cursor and `t` moves the cursor right;
//! - bs12: (q, m) with q an exact dyadic rational (odd numerator × 2^exp)
//!   and the law (q,m)(q',m') = (q + 2^m q', m+m').
//!
//! The torsion-free abelianization π : G → ℤᵏ is hand-coded per family:
//! identity on lattices, letter-count exponent vectors on free groups, (x,y)
//! on Heisenberg, the cursor on the lamplighter (lamp states are torsion),
//! and the a-exponent on BS(1,2) (b dies: it is conjugate to its square).

use num_bigint::{BigInt, Sign};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("group family mismatch: expected {expected}, found {found}")]
    FamilyMismatch { expected: String, found: String },
    #[error("lattice/free rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("unknown generator symbol `{symbol}`")]
    UnknownSymbol { symbol: String },
    #[error("invalid group descriptor: {reason}")]
    InvalidDescriptor { reason: String },
    #[error("malformed canonical key: {reason}")]
    MalformedKey { reason: String },
}

/// Which group to build, plus its parameters. The generator alphabet and
/// the abelianization rank are determined by the family.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupDescriptor {
    Lattice { rank: usize },
    Free { rank: usize },
    Heisenberg,
    Lamplighter,
    BaumslagSolitar12,
}

/// A named generator (or formal inverse) together with its element.
#[derive(Clone, Debug)]
pub struct Symbol {
    pub name: String,
    pub element: GroupElement,
}

const FREE_RANK_MAX: usize = 26;

impl GroupDescriptor {
    pub fn lattice(rank: usize) -> Result<Self, GroupError> {
        if rank == 0 {
            return Err(GroupError::InvalidDescriptor {
                reason: "lattice rank must be >= 1".into(),
            });
        }
        Ok(GroupDescriptor::Lattice { rank })
    }

    pub fn free(rank: usize) -> Result<Self, GroupError> {
        if !(2..=FREE_RANK_MAX).contains(&rank) {
            return Err(GroupError::InvalidDescriptor {
                reason: format!("free rank must be in 2..={FREE_RANK_MAX}"),
            });
        }
        Ok(GroupDescriptor::Free { rank })
    }

    pub fn heisenberg() -> Self {
        GroupDescriptor::Heisenberg
    }

    pub fn lamplighter() -> Self {
        GroupDescriptor::Lamplighter
    }

    pub fn bs12() -> Self {
        GroupDescriptor::BaumslagSolitar12
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            GroupDescriptor::Lattice { .. } => "lattice",
            GroupDescriptor::Free { .. } => "free",
            GroupDescriptor::Heisenberg => "heisenberg",
            GroupDescriptor::Lamplighter => "lamplighter",
            GroupDescriptor::BaumslagSolitar12 => "bs12",
        }
    }

    /// Stable one-line form used in cache headers and reports.
    pub fn canonical_name(&self) -> String {
        match self {
            GroupDescriptor::Lattice { rank } => format!("lattice(k={rank})"),
            GroupDescriptor::Free { rank } => format!("free(r={rank})"),
            other => other.family_name().to_string(),
        }
    }

    /// Rank k of the torsion-free abelianization Ḡ ≅ ℤᵏ.
    pub fn abelianization_rank(&self) -> usize {
        match self {
            GroupDescriptor::Lattice { rank } => *rank,
            GroupDescriptor::Free { rank } => *rank,
            GroupDescriptor::Heisenberg => 2,
            GroupDescriptor::Lamplighter => 1,
            GroupDescriptor::BaumslagSolitar12 => 1,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupDescriptor::Lattice { rank } => GroupElement::Lattice(vec![0; *rank]),
            GroupDescriptor::Free { rank } => GroupElement::Free {
                rank: *rank as u8,
                word: Vec::new(),
            },
            GroupDescriptor::Heisenberg => GroupElement::Heisenberg { x: 0, y: 0, z: 0 },
            GroupDescriptor::Lamplighter => GroupElement::Lamplighter {
                lamps: Vec::new(),
                cursor: 0,
            },
            GroupDescriptor::BaumslagSolitar12 => {
                GroupElement::BaumslagSolitar(Box::new(DyadicShift {
                    num: BigInt::from(0),
                    exp: 0,
                    shift: 0,
                }))
            }
        }
    }

    /// Standard generators, without formal inverses.
    pub fn standard_generators(&self) -> Vec<Symbol> {
        match self {
            GroupDescriptor::Lattice { rank } => (0..*rank)
                .map(|i| {
                    let mut v = vec![0; *rank];
                    v[i] = 1;
                    Symbol {
                        name: format!("x{}", i + 1),
                        element: GroupElement::Lattice(v),
                    }
                })
                .collect(),
            GroupDescriptor::Free { rank } => (0..*rank)
                .map(|i| Symbol {
                    name: ((b'a' + i as u8) as char).to_string(),
                    element: GroupElement::Free {
                        rank: *rank as u8,
                        word: vec![i as i8 + 1],
                    },
                })
                .collect(),
            GroupDescriptor::Heisenberg => vec![
                Symbol {
                    name: "a".into(),
                    element: GroupElement::Heisenberg { x: 1, y: 0, z: 0 },
                },
                Symbol {
                    name: "b".into(),
                    element: GroupElement::Heisenberg { x: 0, y: 1, z: 0 },
                },
            ],
            GroupDescriptor::Lamplighter => vec![
                Symbol {
                    name: "s".into(),
                    element: GroupElement::Lamplighter {
                        lamps: vec![0],
                        cursor: 0,
                    },
                },
                Symbol {
                    name: "t".into(),
                    element: GroupElement::Lamplighter {
                        lamps: Vec::new(),
                        cursor: 1,
                    },
                },
            ],
            GroupDescriptor::BaumslagSolitar12 => vec![
                Symbol {
                    name: "a".into(),
                    element: GroupElement::BaumslagSolitar(Box::new(DyadicShift {
                        num: BigInt::from(0),
                        exp: 0,
                        shift: 1,
                    })),
                },
                Symbol {
                    name: "b".into(),
                    element: GroupElement::BaumslagSolitar(Box::new(DyadicShift {
                        num: BigInt::from(1),
                        exp: 0,
                        shift: 0,
                    })),
                },
            ],
        }
    }

    /// The full ordered generator alphabet: each standard generator followed
    /// by its formal inverse, except involutions (the lamplighter toggle `s`
    /// is its own inverse and appears once).
    pub fn alphabet(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        for sym in self.standard_generators() {
            let inv = sym.element.inverse();
            let involution = inv == sym.element;
            out.push(sym.clone());
            if !involution {
                out.push(Symbol {
                    name: format!("{}-", sym.name),
                    element: inv,
                });
            }
        }
        out
    }

    /// Resolves one token of the word grammar: a generator name with an
    /// optional trailing `-` for the inverse (`a-` is a⁻¹).
    pub fn symbol(&self, token: &str) -> Result<GroupElement, GroupError> {
        let (base, invert) = match token.strip_suffix('-') {
            Some(b) => (b, true),
            None => (token, false),
        };
        for sym in self.standard_generators() {
            if sym.name == base {
                return Ok(if invert {
                    sym.element.inverse()
                } else {
                    sym.element
                });
            }
        }
        Err(GroupError::UnknownSymbol {
            symbol: token.to_string(),
        })
    }

    /// Left-to-right product of a whitespace-separated word over the
    /// alphabet, in normal form. The empty word is the identity.
    pub fn evaluate_word(&self, word: &str) -> Result<GroupElement, GroupError> {
        let mut acc = self.identity();
        for token in word.split_whitespace() {
            let g = self.symbol(token)?;
            acc = acc.multiply(&g)?;
        }
        Ok(acc)
    }

    /// Whether an element belongs to this group (same family and rank).
    pub fn contains(&self, e: &GroupElement) -> bool {
        match (self, e) {
            (GroupDescriptor::Lattice { rank }, GroupElement::Lattice(v)) => v.len() == *rank,
            (GroupDescriptor::Free { rank }, GroupElement::Free { rank: r, .. }) => {
                *r as usize == *rank
            }
            (GroupDescriptor::Heisenberg, GroupElement::Heisenberg { .. }) => true,
            (GroupDescriptor::Lamplighter, GroupElement::Lamplighter { .. }) => true,
            (GroupDescriptor::BaumslagSolitar12, GroupElement::BaumslagSolitar(_)) => true,
            _ => false,
        }
    }
}

/// BS(1,2) normal form b^q a^m: q = num·2^exp with num odd (or num = 0 and
/// exp = 0), m the a-exponent. Kept boxed to keep `GroupElement` small.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicShift {
    pub num: BigInt,
    pub exp: i64,
    pub shift: i64,
}

/// A group element in canonical normal form. Immutable; all operations are
/// pure, so values are safe to share across threads.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Lattice(Vec<i64>),
    Free { rank: u8, word: Vec<i8> },
    Heisenberg { x: i64, y: i64, z: i64 },
    Lamplighter { lamps: Vec<i64>, cursor: i64 },
    BaumslagSolitar(Box<DyadicShift>),
}

/// (num, exp) of n1·2^e1 + n2·2^e2, renormalized to an odd numerator.
fn dyadic_add(n1: &BigInt, e1: i64, n2: &BigInt, e2: i64) -> (BigInt, i64) {
    let zero = BigInt::from(0);
    if n1 == &zero {
        return (n2.clone(), if n2 == &zero { 0 } else { e2 });
    }
    if n2 == &zero {
        return (n1.clone(), e1);
    }
    let e = e1.min(e2);
    let sum = (n1 << (e1 - e) as u64) + (n2 << (e2 - e) as u64);
    normalize_dyadic(sum, e)
}

fn normalize_dyadic(mut num: BigInt, mut exp: i64) -> (BigInt, i64) {
    let zero = BigInt::from(0);
    if num == zero {
        return (zero, 0);
    }
    while !num.bit(0) {
        num >>= 1;
        exp += 1;
    }
    (num, exp)
}

/// Symmetric difference of two sorted lamp sets, the second shifted.
fn lamp_sym_diff(a: &[i64], b: &[i64], shift: i64) -> Vec<i64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut i = 0;
    let mut j = 0;
    while i < a.len() && j < b.len() {
        let bj = b[j] + shift;
        match a[i].cmp(&bj) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(bj);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend(b[j..].iter().map(|p| p + shift));
    out
}

impl GroupElement {
    /// Canonical product; multiplying elements of different groups is a
    /// caller error and reported as such.
    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        match (self, other) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                if a.len() != b.len() {
                    return Err(GroupError::RankMismatch {
                        expected: a.len(),
                        found: b.len(),
                    });
                }
                Ok(GroupElement::Lattice(
                    a.iter().zip(b).map(|(x, y)| x + y).collect(),
                ))
            }
            (
                GroupElement::Free { rank: ra, word: a },
                GroupElement::Free { rank: rb, word: b },
            ) => {
                if ra != rb {
                    return Err(GroupError::RankMismatch {
                        expected: *ra as usize,
                        found: *rb as usize,
                    });
                }
                let mut out = a.clone();
                for &letter in b {
                    if out.last() == Some(&-letter) {
                        out.pop();
                    } else {
                        out.push(letter);
                    }
                }
                Ok(GroupElement::Free {
                    rank: *ra,
                    word: out,
                })
            }
            (
                GroupElement::Heisenberg { x, y, z },
                GroupElement::Heisenberg {
                    x: x2,
                    y: y2,
                    z: z2,
                },
            ) => Ok(GroupElement::Heisenberg {
                x: x + x2,
                y: y + y2,
                z: z + z2 + x * y2,
            }),
            (
                GroupElement::Lamplighter { lamps, cursor },
                GroupElement::Lamplighter {
                    lamps: lamps2,
                    cursor: cursor2,
                },
            ) => Ok(GroupElement::Lamplighter {
                lamps: lamp_sym_diff(lamps, lamps2, *cursor),
                cursor: cursor + cursor2,
            }),
            (GroupElement::BaumslagSolitar(p), GroupElement::BaumslagSolitar(q)) => {
                let (num, exp) = dyadic_add(&p.num, p.exp, &q.num, q.exp + p.shift);
                Ok(GroupElement::BaumslagSolitar(Box::new(DyadicShift {
                    num,
                    exp,
                    shift: p.shift + q.shift,
                })))
            }
            _ => Err(GroupError::FamilyMismatch {
                expected: self.family_name().to_string(),
                found: other.family_name().to_string(),
            }),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        match self {
            GroupElement::Lattice(v) => GroupElement::Lattice(v.iter().map(|x| -x).collect()),
            GroupElement::Free { rank, word } => GroupElement::Free {
                rank: *rank,
                word: word.iter().rev().map(|l| -l).collect(),
            },
            GroupElement::Heisenberg { x, y, z } => GroupElement::Heisenberg {
                x: -x,
                y: -y,
                z: x * y - z,
            },
            GroupElement::Lamplighter { lamps, cursor } => GroupElement::Lamplighter {
                lamps: lamps.iter().map(|p| p - cursor).collect(),
                cursor: -cursor,
            },
            GroupElement::BaumslagSolitar(p) => {
                let (num, exp) = normalize_dyadic(-&p.num, p.exp - p.shift);
                GroupElement::BaumslagSolitar(Box::new(DyadicShift {
                    num,
                    exp,
                    shift: -p.shift,
                }))
            }
        }
    }

    /// Image under the torsion-free abelianization π : G → ℤᵏ.
    pub fn project(&self) -> Vec<i64> {
        match self {
            GroupElement::Lattice(v) => v.clone(),
            GroupElement::Free { rank, word } => {
                let mut counts = vec![0i64; *rank as usize];
                for &l in word {
                    if l > 0 {
                        counts[(l - 1) as usize] += 1;
                    } else {
                        counts[(-l - 1) as usize] -= 1;
                    }
                }
                counts
            }
            GroupElement::Heisenberg { x, y, .. } => vec![*x, *y],
            GroupElement::Lamplighter { cursor, .. } => vec![*cursor],
            GroupElement::BaumslagSolitar(p) => vec![p.shift],
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::Lattice(v) => v.iter().all(|&x| x == 0),
            GroupElement::Free { word, .. } => word.is_empty(),
            GroupElement::Heisenberg { x, y, z } => *x == 0 && *y == 0 && *z == 0,
            GroupElement::Lamplighter { lamps, cursor } => lamps.is_empty() && *cursor == 0,
            GroupElement::BaumslagSolitar(p) => p.num == BigInt::from(0) && p.shift == 0,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            GroupElement::Lattice(_) => "lattice",
            GroupElement::Free { .. } => "free",
            GroupElement::Heisenberg { .. } => "heisenberg",
            GroupElement::Lamplighter { .. } => "lamplighter",
            GroupElement::BaumslagSolitar(_) => "bs12",
        }
    }

    /// Deterministic family-tagged byte serialization of the normal form.
    /// Equal elements produce byte-identical keys; the encoding is stable
    /// across runs and platforms and is what cache files store (as hex).
    ///
    /// Layout (all integers big-endian):
    /// - lattice: `01 | k:u32 | coord:i64 ×k`
    /// - free:    `02 | rank:u8 | len:u32 | letter:u8 ×len` with letter
    ///   `2i` for generator i and `2i+1` for its inverse
    /// - heisenberg: `03 | x:i64 | y:i64 | z:i64`
    /// - lamplighter: `04 | cursor:i64 | count:u32 | lamp:i64 ×count`
    /// - bs12: `05 | exp:i64 | shift:i64 | sign:u8 | maglen:u32 | magnitude`
    pub fn canonical_key(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            GroupElement::Lattice(v) => {
                out.push(1);
                out.extend_from_slice(&(v.len() as u32).to_be_bytes());
                for &c in v {
                    out.extend_from_slice(&c.to_be_bytes());
                }
            }
            GroupElement::Free { rank, word } => {
                out.push(2);
                out.push(*rank);
                out.extend_from_slice(&(word.len() as u32).to_be_bytes());
                for &l in word {
                    let code = if l > 0 {
                        2 * (l as u8 - 1)
                    } else {
                        2 * ((-l) as u8 - 1) + 1
                    };
                    out.push(code);
                }
            }
            GroupElement::Heisenberg { x, y, z } => {
                out.push(3);
                out.extend_from_slice(&x.to_be_bytes());
                out.extend_from_slice(&y.to_be_bytes());
                out.extend_from_slice(&z.to_be_bytes());
            }
            GroupElement::Lamplighter { lamps, cursor } => {
                out.push(4);
                out.extend_from_slice(&cursor.to_be_bytes());
                out.extend_from_slice(&(lamps.len() as u32).to_be_bytes());
                for &p in lamps {
                    out.extend_from_slice(&p.to_be_bytes());
                }
            }
            GroupElement::BaumslagSolitar(p) => {
                out.push(5);
                out.extend_from_slice(&p.exp.to_be_bytes());
                out.extend_from_slice(&p.shift.to_be_bytes());
                let (sign, mag) = p.num.to_bytes_be();
                let sign_byte = match sign {
                    Sign::NoSign => 0u8,
                    Sign::Plus => 1,
                    Sign::Minus => 2,
                };
                out.push(sign_byte);
                out.extend_from_slice(&(mag.len() as u32).to_be_bytes());
                out.extend_from_slice(&mag);
            }
        }
        out
    }

    /// Rebuilds an element from its canonical key (cache loads).
    pub fn from_canonical_key(bytes: &[u8]) -> Result<GroupElement, GroupError> {
        let err = |reason: &str| GroupError::MalformedKey {
            reason: reason.to_string(),
        };
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8], GroupError> {
            if *pos + n > bytes.len() {
                return Err(err("truncated"));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let take_i64 = |pos: &mut usize| -> Result<i64, GroupError> {
            Ok(i64::from_be_bytes(take(pos, 8)?.try_into().unwrap()))
        };
        let take_u32 = |pos: &mut usize| -> Result<u32, GroupError> {
            Ok(u32::from_be_bytes(take(pos, 4)?.try_into().unwrap()))
        };

        let tag = *take(&mut pos, 1)?.first().unwrap();
        let element = match tag {
            1 => {
                let k = take_u32(&mut pos)? as usize;
                let mut v = Vec::with_capacity(k);
                for _ in 0..k {
                    v.push(take_i64(&mut pos)?);
                }
                GroupElement::Lattice(v)
            }
            2 => {
                let rank = *take(&mut pos, 1)?.first().unwrap();
                let len = take_u32(&mut pos)? as usize;
                let mut word = Vec::with_capacity(len);
                for _ in 0..len {
                    let code = *take(&mut pos, 1)?.first().unwrap();
                    let gen = (code / 2) as i8 + 1;
                    word.push(if code % 2 == 0 { gen } else { -gen });
                }
                GroupElement::Free { rank, word }
            }
            3 => GroupElement::Heisenberg {
                x: take_i64(&mut pos)?,
                y: take_i64(&mut pos)?,
                z: take_i64(&mut pos)?,
            },
            4 => {
                let cursor = take_i64(&mut pos)?;
                let count = take_u32(&mut pos)? as usize;
                let mut lamps = Vec::with_capacity(count);
                for _ in 0..count {
                    lamps.push(take_i64(&mut pos)?);
                }
                GroupElement::Lamplighter { lamps, cursor }
            }
            5 => {
                let exp = take_i64(&mut pos)?;
                let shift = take_i64(&mut pos)?;
                let sign_byte = *take(&mut pos, 1)?.first().unwrap();
                let maglen = take_u32(&mut pos)? as usize;
                let mag = take(&mut pos, maglen)?;
                let sign = match sign_byte {
                    0 => Sign::NoSign,
                    1 => Sign::Plus,
                    2 => Sign::Minus,
                    _ => return Err(err("bad sign byte")),
                };
                GroupElement::BaumslagSolitar(Box::new(DyadicShift {
                    num: BigInt::from_bytes_be(sign, mag),
                    exp,
                    shift,
                }))
            }
            _ => return Err(err("unknown family tag")),
        };
        if pos != bytes.len() {
            return Err(err("trailing bytes"));
        }
        Ok(element)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn descriptors() -> Vec<GroupDescriptor> {
        vec![
            GroupDescriptor::lattice(2).unwrap(),
            GroupDescriptor::free(2).unwrap(),
            GroupDescriptor::heisenberg(),
            GroupDescriptor::lamplighter(),
            GroupDescriptor::bs12(),
        ]
    }

    #[test]
    fn identities_per_family() {
        assert_eq!(
            GroupDescriptor::lattice(2).unwrap().identity(),
            GroupElement::Lattice(vec![0, 0])
        );
        assert_eq!(
            GroupDescriptor::heisenberg().identity(),
            GroupElement::Heisenberg { x: 0, y: 0, z: 0 }
        );
        assert_eq!(
            GroupDescriptor::lamplighter().identity(),
            GroupElement::Lamplighter {
                lamps: vec![],
                cursor: 0
            }
        );
        for desc in descriptors() {
            let e = desc.identity();
            assert!(e.is_identity());
            for sym in desc.alphabet() {
                assert_eq!(e.multiply(&sym.element).unwrap(), sym.element);
                assert_eq!(sym.element.multiply(&e).unwrap(), sym.element);
            }
        }
    }

    /// Independent oracle for the Heisenberg law: (x,y,z) as the
    /// upper-triangular matrix [[1,x,z],[0,1,y],[0,0,1]].
    fn heis_matrix(e: &GroupElement) -> [[i64; 3]; 3] {
        if let GroupElement::Heisenberg { x, y, z } = e {
            [[1, *x, *z], [0, 1, *y], [0, 0, 1]]
        } else {
            panic!("not heisenberg")
        }
    }

    fn mat_mul(a: [[i64; 3]; 3], b: [[i64; 3]; 3]) -> [[i64; 3]; 3] {
        let mut c = [[0i64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
            }
        }
        c
    }

    #[test]
    fn heisenberg_law_matches_matrix_oracle() {
        let a = GroupElement::Heisenberg { x: 1, y: 0, z: 0 };
        let b = GroupElement::Heisenberg { x: 0, y: 1, z: 0 };
        assert_eq!(
            a.multiply(&b).unwrap(),
            GroupElement::Heisenberg { x: 1, y: 1, z: 1 }
        );
        // Random-ish triples against the matrix product.
        let samples = [
            GroupElement::Heisenberg { x: 3, y: -2, z: 7 },
            GroupElement::Heisenberg { x: -1, y: 5, z: 0 },
            GroupElement::Heisenberg { x: 2, y: 2, z: -4 },
        ];
        for p in &samples {
            for q in &samples {
                let prod = p.multiply(q).unwrap();
                assert_eq!(heis_matrix(&prod), mat_mul(heis_matrix(p), heis_matrix(q)));
            }
        }
    }

    #[test]
    fn heisenberg_inverse_closed_form() {
        let g = GroupElement::Heisenberg { x: 3, y: -2, z: 7 };
        let inv = g.inverse();
        assert_eq!(
            inv,
            GroupElement::Heisenberg {
                x: -3,
                y: 2,
                z: -6 - 7
            }
        );
        assert!(g.multiply(&inv).unwrap().is_identity());
        assert!(inv.multiply(&g).unwrap().is_identity());
    }

    #[test]
    fn free_reduction() {
        let desc = GroupDescriptor::free(2).unwrap();
        assert!(desc.evaluate_word("a a-").unwrap().is_identity());
        let w = desc.evaluate_word("a b a-").unwrap();
        if let GroupElement::Free { word, .. } = &w {
            assert_eq!(word.len(), 3);
        } else {
            panic!();
        }
        // Inserting a cancelling pair does not change the normal form.
        let w2 = desc.evaluate_word("a b b- b a-").unwrap();
        assert_eq!(w.canonical_key(), w2.canonical_key());
    }

    #[test]
    fn lattice_words() {
        let desc = GroupDescriptor::lattice(1).unwrap();
        assert_eq!(
            desc.evaluate_word("x1 x1 x1-").unwrap(),
            GroupElement::Lattice(vec![1])
        );
        assert_eq!(
            GroupElement::Lattice(vec![3, -1]).inverse(),
            GroupElement::Lattice(vec![-3, 1])
        );
    }

    #[test]
    fn lamplighter_conjugation_shifts_lamp() {
        let desc = GroupDescriptor::lamplighter();
        let g = desc.evaluate_word("t s t-").unwrap();
        assert_eq!(
            g,
            GroupElement::Lamplighter {
                lamps: vec![1],
                cursor: 0
            }
        );
        let h = GroupElement::Lamplighter {
            lamps: vec![0],
            cursor: 1,
        };
        assert_eq!(
            h.inverse(),
            GroupElement::Lamplighter {
                lamps: vec![-1],
                cursor: -1
            }
        );
        // s is an involution and appears once in the alphabet.
        assert_eq!(desc.alphabet().len(), 3);
        assert_eq!(desc.symbol("s").unwrap(), desc.symbol("s-").unwrap());
    }

    /// BS(1,2) oracle: (q, m) acts on dyadic rationals as x ↦ 2^m·x + q and
    /// the group law is composition. Exact in f64 for short words.
    fn bs_affine(e: &GroupElement) -> (f64, f64) {
        if let GroupElement::BaumslagSolitar(p) = e {
            let num: f64 = match p.num.to_string().parse::<f64>() {
                Ok(v) => v,
                Err(_) => panic!("numerator too large for oracle"),
            };
            ((p.shift as f64).exp2(), num * (p.exp as f64).exp2())
        } else {
            panic!("not bs12")
        }
    }

    #[test]
    fn bs12_law_matches_affine_oracle() {
        let desc = GroupDescriptor::bs12();
        // Defining relation: a b a- = b b.
        assert_eq!(
            desc.evaluate_word("a b a-").unwrap(),
            desc.evaluate_word("b b").unwrap()
        );
        let words = ["a", "b", "a-", "b-", "a b", "b a-", "a- b a", "b a b-"];
        for w1 in &words {
            for w2 in &words {
                let g = desc.evaluate_word(w1).unwrap();
                let h = desc.evaluate_word(w2).unwrap();
                let gh = g.multiply(&h).unwrap();
                let (sg, tg) = bs_affine(&g);
                let (sh, th) = bs_affine(&h);
                let (sp, tp) = bs_affine(&gh);
                // (g∘h)(x) = sg·(sh·x + th) + tg
                assert_eq!(sp, sg * sh);
                assert_eq!(tp, sg * th + tg);
            }
        }
        // Normal form invariant: odd numerator or (0, 0).
        let g = desc.evaluate_word("b b a b- b-").unwrap();
        if let GroupElement::BaumslagSolitar(p) = &g {
            assert!(p.num.bit(0) || (p.num == BigInt::from(0) && p.exp == 0));
        }
    }

    #[test]
    fn projection_is_a_homomorphism_and_kills_commutators() {
        for desc in descriptors() {
            let k = desc.abelianization_rank();
            assert_eq!(desc.identity().project(), vec![0i64; k]);
            let gens = desc.standard_generators();
            for g in &gens {
                for h in &gens {
                    let prod = g.element.multiply(&h.element).unwrap();
                    let sum: Vec<i64> = g
                        .element
                        .project()
                        .iter()
                        .zip(h.element.project())
                        .map(|(a, b)| a + b)
                        .collect();
                    assert_eq!(prod.project(), sum);
                    // commutator g h g⁻¹ h⁻¹ projects to 0
                    let comm = prod
                        .multiply(&g.element.inverse())
                        .unwrap()
                        .multiply(&h.element.inverse())
                        .unwrap();
                    assert_eq!(comm.project(), vec![0i64; k]);
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        assert_eq!(
            GroupElement::Heisenberg { x: 3, y: -2, z: 7 }.project(),
            vec![3, -2]
        );
        assert_eq!(
            GroupElement::Lamplighter {
                lamps: vec![0, 3],
                cursor: 2
            }
            .project(),
            vec![2]
        );
        let heis = GroupDescriptor::heisenberg();
        assert_eq!(
            heis.evaluate_word("a b a- b-").unwrap(),
            GroupElement::Heisenberg { x: 0, y: 0, z: 1 }
        );
        // b is killed in BS(1,2): it is the commutator image under aba⁻¹=b².
        let bs = GroupDescriptor::bs12();
        assert_eq!(bs.evaluate_word("b").unwrap().project(), vec![0]);
        assert_eq!(bs.evaluate_word("a b").unwrap().project(), vec![1]);
    }

    #[test]
    fn generator_images_span_the_abelianization() {
        use crate::linalg::integer_span_is_full;
        for desc in descriptors() {
            let k = desc.abelianization_rank();
            let points: Vec<Vec<i64>> = desc
                .standard_generators()
                .iter()
                .map(|s| s.element.project())
                .collect();
            assert!(integer_span_is_full(&points, k), "{}", desc.family_name());
        }
    }

    #[test]
    fn canonical_key_round_trips() {
        for desc in descriptors() {
            for word in ["", "a", "a b", "a b- a"] {
                // remap letters for families with other generator names
                let word = match desc {
                    GroupDescriptor::Lattice { .. } => word.replace('a', "x1").replace('b', "x2"),
                    GroupDescriptor::Lamplighter => word.replace('a', "s").replace('b', "t"),
                    _ => word.to_string(),
                };
                let g = desc.evaluate_word(&word).unwrap();
                let key = g.canonical_key();
                assert_eq!(GroupElement::from_canonical_key(&key).unwrap(), g);
            }
        }
        assert!(GroupElement::from_canonical_key(&[9, 9]).is_err());
        assert!(GroupElement::from_canonical_key(&[]).is_err());
    }

    #[test]
    fn unknown_symbol_is_reported() {
        let desc = GroupDescriptor::free(2).unwrap();
        match desc.evaluate_word("a q") {
            Err(GroupError::UnknownSymbol { symbol }) => assert_eq!(symbol, "q"),
            other => panic!("expected unknown symbol, got {other:?}"),
        }
    }

    #[test]
    fn family_mismatch_is_reported() {
        let a = GroupDescriptor::free(2).unwrap().identity();
        let b = GroupDescriptor::heisenberg().identity();
        assert!(matches!(
            a.multiply(&b),
            Err(GroupError::FamilyMismatch { .. })
        ));
    }
}
