//! Ambient groups, their elements, homomorphisms between them, and subspaces
//! of 𝔽₂^D.
//!
//! Elements are plain coordinate vectors ([`Elem`]); the group they live in is
//! carried by the containing set or distribution as a [`GroupContext`]. Every
//! element handed out by a context is in canonical form, so equality and
//! hashing are coordinate-wise.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest ambient dimension accepted by [`enumerate_subgroups`] unless the
/// caller raises it.
pub const DEFAULT_SUBGROUP_CAP: usize = 5;

/// Largest finite group that [`GroupContext::elements`] will list.
pub const ELEMENT_LIST_CAP: usize = 1 << 16;

/// A group element in canonical coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Elem(pub SmallVec<[i64; 4]>);

impl Elem {
    pub fn new(coords: &[i64]) -> Self {
        Elem(SmallVec::from_slice(coords))
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Debug for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl From<Vec<i64>> for Elem {
    fn from(v: Vec<i64>) -> Self {
        Elem(SmallVec::from_vec(v))
    }
}

impl<const N: usize> From<[i64; N]> for Elem {
    fn from(v: [i64; N]) -> Self {
        Elem::new(&v)
    }
}

/// Whether a binary operation adds or subtracts its second argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// The ambient abelian group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "group")]
pub enum GroupContext {
    /// ℤ^D with unreduced 64-bit coordinates.
    #[serde(rename = "Z")]
    ZLattice {
        #[serde(rename = "D")]
        dim: usize,
    },
    /// 𝔽₂^D, coordinates in {0, 1}.
    #[serde(rename = "F2")]
    F2Vec {
        #[serde(rename = "D")]
        dim: usize,
    },
    /// ℤ/m₁ × ⋯ × ℤ/m_D, coordinates in [0, mᵢ).
    #[serde(rename = "Zmod")]
    ZModProduct { moduli: Vec<i64> },
    /// 𝔽₂^D / H, elements are echelon-reduced coset representatives.
    #[serde(rename = "F2quot")]
    QuotientF2 {
        #[serde(rename = "D")]
        dim: usize,
        sub: SubgroupF2,
    },
}

impl GroupContext {
    pub fn z(dim: usize) -> Self {
        GroupContext::ZLattice { dim }
    }

    pub fn f2(dim: usize) -> Self {
        GroupContext::F2Vec { dim }
    }

    pub fn zmod(moduli: &[i64]) -> Result<Self> {
        if let Some(m) = moduli.iter().find(|&&m| m < 2) {
            return Err(Error::Domain(format!("modulus {m} is below 2")));
        }
        Ok(GroupContext::ZModProduct {
            moduli: moduli.to_vec(),
        })
    }

    pub fn quotient(sub: SubgroupF2) -> Self {
        GroupContext::QuotientF2 { dim: sub.dim, sub }
    }

    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        match self {
            GroupContext::ZLattice { dim }
            | GroupContext::F2Vec { dim }
            | GroupContext::QuotientF2 { dim, .. } => *dim,
            GroupContext::ZModProduct { moduli } => moduli.len(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            GroupContext::ZLattice { dim } => *dim == 0,
            _ => true,
        }
    }

    /// Group order, `None` for infinite groups or orders beyond `u128`.
    pub fn order(&self) -> Option<u128> {
        match self {
            GroupContext::ZLattice { dim } => (*dim == 0).then_some(1),
            GroupContext::F2Vec { dim } => 1u128.checked_shl(*dim as u32),
            GroupContext::ZModProduct { moduli } => moduli
                .iter()
                .try_fold(1u128, |acc, &m| acc.checked_mul(m as u128)),
            GroupContext::QuotientF2 { dim, sub } => 1u128.checked_shl((*dim - sub.rank()) as u32),
        }
    }

    pub fn is_torsion_free(&self) -> bool {
        matches!(self, GroupContext::ZLattice { .. })
    }

    pub fn zero(&self) -> Elem {
        Elem(SmallVec::from_elem(0, self.dim()))
    }

    pub(crate) fn check_same(&self, other: &GroupContext) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ContextMismatch(format!("{self} vs {other}")))
        }
    }

    /// Reduces raw coordinates to the canonical representative.
    pub fn canonicalize(&self, coords: &[i64]) -> Result<Elem> {
        if coords.len() != self.dim() {
            return Err(Error::Domain(format!(
                "element has {} coordinates, group {self} has {}",
                coords.len(),
                self.dim()
            )));
        }
        Ok(match self {
            GroupContext::ZLattice { .. } => Elem::new(coords),
            GroupContext::F2Vec { .. } => {
                Elem(coords.iter().map(|c| c.rem_euclid(2)).collect())
            }
            GroupContext::ZModProduct { moduli } => Elem(
                coords
                    .iter()
                    .zip(moduli)
                    .map(|(c, m)| c.rem_euclid(*m))
                    .collect(),
            ),
            GroupContext::QuotientF2 { dim, sub } => {
                let bits = bits_of_coords(coords.iter().map(|c| c.rem_euclid(2)));
                coords_of_bits(sub.reduce(bits), *dim)
            }
        })
    }

    /// True when `x` has the right length and is already canonical.
    pub fn contains(&self, x: &Elem) -> bool {
        matches!(self.canonicalize(x.coords()), Ok(c) if &c == x)
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Result<Elem> {
        self.combine(a, b, Sign::Plus)
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Result<Elem> {
        self.combine(a, b, Sign::Minus)
    }

    /// `a + b` or `a - b` depending on `sign`.
    pub fn combine(&self, a: &Elem, b: &Elem, sign: Sign) -> Result<Elem> {
        debug_assert_eq!(a.dim(), self.dim());
        debug_assert_eq!(b.dim(), self.dim());
        match self {
            GroupContext::ZLattice { .. } => {
                let mut out = SmallVec::with_capacity(a.dim());
                for (x, y) in a.0.iter().zip(&b.0) {
                    let v = match sign {
                        Sign::Plus => x.checked_add(*y),
                        Sign::Minus => x.checked_sub(*y),
                    };
                    out.push(v.ok_or(Error::Overflow)?);
                }
                Ok(Elem(out))
            }
            GroupContext::F2Vec { .. } => Ok(Elem(a.0.iter().zip(&b.0).map(|(x, y)| x ^ y).collect())),
            GroupContext::ZModProduct { moduli } => Ok(Elem(
                a.0.iter()
                    .zip(&b.0)
                    .zip(moduli)
                    .map(|((x, y), m)| match sign {
                        Sign::Plus => (x + y).rem_euclid(*m),
                        Sign::Minus => (x - y).rem_euclid(*m),
                    })
                    .collect(),
            )),
            GroupContext::QuotientF2 { dim, sub } => {
                let bits = bits_of(a) ^ bits_of(b);
                Ok(coords_of_bits(sub.reduce(bits), *dim))
            }
        }
    }

    pub fn neg(&self, a: &Elem) -> Result<Elem> {
        self.sub(&self.zero(), a)
    }

    /// `n · a`.
    pub fn scale(&self, n: i64, a: &Elem) -> Result<Elem> {
        match self {
            GroupContext::ZLattice { .. } => a
                .0
                .iter()
                .map(|x| x.checked_mul(n).ok_or(Error::Overflow))
                .collect::<Result<_>>()
                .map(Elem),
            _ => {
                let raw: Vec<i64> = a
                    .0
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let m = match self {
                            GroupContext::ZModProduct { moduli } => moduli[i] as i128,
                            _ => 2,
                        };
                        (*x as i128 * n as i128).rem_euclid(m) as i64
                    })
                    .collect();
                self.canonicalize(&raw)
            }
        }
    }

    /// Lists every element of a finite group in lexicographic order.
    pub fn elements(&self) -> Result<Vec<Elem>> {
        let order = self
            .order()
            .filter(|_| self.is_finite())
            .ok_or_else(|| Error::Domain(format!("{self} is infinite")))?;
        if order > ELEMENT_LIST_CAP as u128 {
            return Err(Error::Capacity {
                what: "group element listing",
                limit: ELEMENT_LIST_CAP,
                got: order.min(usize::MAX as u128) as usize,
            });
        }
        match self {
            GroupContext::QuotientF2 { dim, sub } => {
                let mut reps: BTreeSet<Elem> = BTreeSet::new();
                for bits in 0..(1u64 << dim) {
                    reps.insert(coords_of_bits(sub.reduce(bits), *dim));
                }
                Ok(reps.into_iter().collect())
            }
            _ => {
                let radices: Vec<i64> = match self {
                    GroupContext::F2Vec { dim } => vec![2; *dim],
                    GroupContext::ZModProduct { moduli } => moduli.clone(),
                    _ => Vec::new(),
                };
                let mut out = Vec::with_capacity(order as usize);
                let mut cur = vec![0i64; radices.len()];
                loop {
                    out.push(Elem::new(&cur));
                    let mut i = radices.len();
                    loop {
                        if i == 0 {
                            return Ok(out);
                        }
                        i -= 1;
                        cur[i] += 1;
                        if cur[i] < radices[i] {
                            break;
                        }
                        cur[i] = 0;
                    }
                }
            }
        }
    }
}

impl fmt::Display for GroupContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupContext::ZLattice { dim } => write!(f, "Z^{dim}"),
            GroupContext::F2Vec { dim } => write!(f, "F2^{dim}"),
            GroupContext::ZModProduct { moduli } => {
                let parts: Vec<String> = moduli.iter().map(|m| format!("Z/{m}")).collect();
                write!(f, "{}", parts.join(" x "))
            }
            GroupContext::QuotientF2 { dim, sub } => write!(f, "F2^{dim}/<rank {}>", sub.rank()),
        }
    }
}

pub(crate) fn bits_of_coords(coords: impl Iterator<Item = i64>) -> u64 {
    coords
        .enumerate()
        .fold(0u64, |acc, (i, c)| if c & 1 == 1 { acc | (1 << i) } else { acc })
}

/// Packs an 𝔽₂ element into a bitmask (coordinate `i` is bit `i`).
pub fn bits_of(x: &Elem) -> u64 {
    bits_of_coords(x.0.iter().copied())
}

/// Inverse of [`bits_of`].
pub fn coords_of_bits(bits: u64, dim: usize) -> Elem {
    Elem((0..dim).map(|i| ((bits >> i) & 1) as i64).collect())
}

/// A subspace H ≤ 𝔽₂^D stored as a reduced row-echelon basis.
///
/// Each basis vector has a distinct pivot (its highest set bit), no other
/// basis vector has that bit set, and vectors are sorted by decreasing pivot.
/// That makes the basis unique for the subspace.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubgroupF2 {
    dim: usize,
    basis: Vec<u64>,
}

impl SubgroupF2 {
    pub fn trivial(dim: usize) -> Self {
        SubgroupF2 {
            dim,
            basis: Vec::new(),
        }
    }

    pub fn full(dim: usize) -> Self {
        Self::span_bits(dim, (0..dim).map(|i| 1u64 << i))
    }

    /// Span of the given generators.
    pub fn span(dim: usize, gens: &[Elem]) -> Result<Self> {
        if dim > 63 {
            return Err(Error::Capacity {
                what: "F2 dimension",
                limit: 63,
                got: dim,
            });
        }
        if let Some(g) = gens.iter().find(|g| g.dim() != dim) {
            return Err(Error::Domain(format!(
                "generator {g:?} does not have {dim} coordinates"
            )));
        }
        Ok(Self::span_bits(dim, gens.iter().map(|g| bits_of(g))))
    }

    pub(crate) fn span_bits(dim: usize, gens: impl IntoIterator<Item = u64>) -> Self {
        let mut basis: Vec<u64> = Vec::new();
        for g in gens {
            let mut v = g & mask(dim);
            for b in &basis {
                if v & pivot_bit(*b) != 0 {
                    v ^= b;
                }
            }
            if v == 0 {
                continue;
            }
            let p = pivot_bit(v);
            for b in basis.iter_mut() {
                if *b & p != 0 {
                    *b ^= v;
                }
            }
            basis.push(v);
        }
        basis.sort_unstable_by(|a, b| b.cmp(a));
        SubgroupF2 { dim, basis }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// |H| = 2^rank.
    pub fn order(&self) -> u64 {
        1u64 << self.rank()
    }

    pub fn basis_bits(&self) -> &[u64] {
        &self.basis
    }

    pub fn basis(&self) -> Vec<Elem> {
        self.basis.iter().map(|b| coords_of_bits(*b, self.dim)).collect()
    }

    /// Canonical coset representative: clears every pivot position.
    pub fn reduce(&self, mut v: u64) -> u64 {
        for b in &self.basis {
            if v & pivot_bit(*b) != 0 {
                v ^= b;
            }
        }
        v
    }

    pub fn contains_bits(&self, v: u64) -> bool {
        self.reduce(v) == 0
    }

    pub fn contains(&self, x: &Elem) -> bool {
        x.dim() == self.dim && self.contains_bits(bits_of(x))
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.dim
    }

    pub fn is_subgroup_of(&self, other: &SubgroupF2) -> bool {
        self.dim == other.dim && self.basis.iter().all(|b| other.contains_bits(*b))
    }

    pub fn join(&self, other: &SubgroupF2) -> SubgroupF2 {
        Self::span_bits(self.dim, self.basis.iter().chain(&other.basis).copied())
    }

    /// All 2^rank elements as bitmasks, ascending.
    pub fn element_bits(&self) -> Vec<u64> {
        let mut out: Vec<u64> = (0u64..self.order())
            .map(|sel| {
                self.basis
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| sel >> i & 1 == 1)
                    .fold(0u64, |acc, (_, b)| acc ^ b)
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// The subgroup as a set of 𝔽₂^D elements.
    pub fn to_set(&self) -> GroupSet {
        GroupSet::from_canonical(
            GroupContext::f2(self.dim),
            self.element_bits().into_iter().map(|b| coords_of_bits(b, self.dim)),
        )
    }
}

fn mask(dim: usize) -> u64 {
    if dim >= 64 {
        u64::MAX
    } else {
        (1u64 << dim) - 1
    }
}

fn pivot_bit(v: u64) -> u64 {
    debug_assert!(v != 0);
    1u64 << (63 - v.leading_zeros())
}

#[derive(Serialize, Deserialize)]
struct SubgroupRepr {
    #[serde(rename = "D")]
    dim: usize,
    basis: Vec<Vec<i64>>,
}

impl Serialize for SubgroupF2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SubgroupRepr {
            dim: self.dim,
            basis: self.basis().into_iter().map(|e| e.0.to_vec()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SubgroupF2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SubgroupRepr::deserialize(d)?;
        let gens: Vec<Elem> = repr.basis.into_iter().map(Elem::from).collect();
        SubgroupF2::span(repr.dim, &gens).map_err(serde::de::Error::custom)
    }
}

/// Every subspace of 𝔽₂^D, ordered by rank and then by basis.
pub fn enumerate_subgroups(dim: usize, cap: usize) -> Result<Vec<SubgroupF2>> {
    if dim > cap {
        return Err(Error::Capacity {
            what: "subgroup enumeration dimension",
            limit: cap,
            got: dim,
        });
    }
    let mut layers: Vec<Vec<SubgroupF2>> = vec![vec![SubgroupF2::trivial(dim)]];
    for _ in 0..dim {
        let prev = layers.last().expect("non-empty");
        let mut next: BTreeSet<SubgroupF2> = BTreeSet::new();
        for h in prev {
            for v in 1u64..(1u64 << dim) {
                if !h.contains_bits(v) {
                    next.insert(SubgroupF2::span_bits(dim, h.basis.iter().copied().chain([v])));
                }
            }
        }
        layers.push(next.into_iter().collect());
    }
    Ok(layers.into_iter().flatten().collect())
}

/// Subspaces of 𝔽₂^D containing `base`, in the same order as
/// [`enumerate_subgroups`].
pub fn enumerate_supergroups(base: &SubgroupF2, cap: usize) -> Result<Vec<SubgroupF2>> {
    Ok(enumerate_subgroups(base.dim, cap)?
        .into_iter()
        .filter(|h| base.is_subgroup_of(h))
        .collect())
}

/// A homomorphism between the groups above.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Homomorphism {
    /// Projection onto one coordinate: ℤ^D → ℤ (also 𝔽₂^D → 𝔽₂, and a
    /// factor of a ℤ/m product).
    CoordProject(usize),
    /// Reduction ℤ^D → 𝔽₂^D.
    Mod2,
    /// Quotient 𝔽₂^D → 𝔽₂^D/H (or a coarser quotient of an existing one).
    QuotientBy(SubgroupF2),
    /// x ↦ 2x.
    Double,
    /// Applied left to right.
    Compose(Vec<Homomorphism>),
}

impl Homomorphism {
    /// The codomain when applied to elements of `dom`.
    pub fn codomain(&self, dom: &GroupContext) -> Result<GroupContext> {
        use GroupContext::*;
        match (self, dom) {
            (Homomorphism::CoordProject(i), ctx) if *i >= ctx.dim() => Err(Error::Domain(format!(
                "coordinate {i} out of range for {ctx}"
            ))),
            (Homomorphism::CoordProject(_), ZLattice { .. }) => Ok(ZLattice { dim: 1 }),
            (Homomorphism::CoordProject(_), F2Vec { .. }) => Ok(F2Vec { dim: 1 }),
            (Homomorphism::CoordProject(i), ZModProduct { moduli }) => Ok(ZModProduct {
                moduli: vec![moduli[*i]],
            }),
            (Homomorphism::Mod2, ZLattice { dim }) => Ok(F2Vec { dim: *dim }),
            (Homomorphism::QuotientBy(h), F2Vec { dim }) if h.dim == *dim => {
                Ok(GroupContext::quotient(h.clone()))
            }
            (Homomorphism::QuotientBy(h), QuotientF2 { dim, sub })
                if h.dim == *dim && sub.is_subgroup_of(h) =>
            {
                Ok(GroupContext::quotient(h.clone()))
            }
            (Homomorphism::Double, ctx) => Ok(ctx.clone()),
            (Homomorphism::Compose(parts), ctx) => parts
                .iter()
                .try_fold(ctx.clone(), |c, h| h.codomain(&c)),
            (h, ctx) => Err(Error::ContextMismatch(format!("{h:?} cannot act on {ctx}"))),
        }
    }

    /// π(x), in canonical form.
    pub fn apply(&self, dom: &GroupContext, x: &Elem) -> Result<Elem> {
        if !dom.contains(x) {
            return Err(Error::ContextMismatch(format!("{x:?} is not an element of {dom}")));
        }
        self.apply_unchecked(dom, x)
    }

    fn apply_unchecked(&self, dom: &GroupContext, x: &Elem) -> Result<Elem> {
        let cod = self.codomain(dom)?;
        match self {
            Homomorphism::CoordProject(i) => Ok(Elem::new(&[x.0[*i]])),
            Homomorphism::Mod2 | Homomorphism::QuotientBy(_) => cod.canonicalize(x.coords()),
            Homomorphism::Double => dom.scale(2, x),
            Homomorphism::Compose(parts) => {
                let mut ctx = dom.clone();
                let mut cur = x.clone();
                for h in parts {
                    cur = h.apply_unchecked(&ctx, &cur)?;
                    ctx = h.codomain(&ctx)?;
                }
                Ok(cur)
            }
        }
    }

    pub fn then(self, next: Homomorphism) -> Homomorphism {
        match self {
            Homomorphism::Compose(mut parts) => {
                parts.push(next);
                Homomorphism::Compose(parts)
            }
            h => Homomorphism::Compose(vec![h, next]),
        }
    }
}

/// A finite set of elements of one group.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GroupSet {
    ctx: GroupContext,
    elems: BTreeSet<Elem>,
}

impl fmt::Debug for GroupSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.ctx, self.elems)
    }
}

impl GroupSet {
    /// Builds a set from raw coordinates, canonicalizing each one. Repeated
    /// elements collapse.
    pub fn new<I, C>(ctx: GroupContext, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[i64]>,
    {
        let elems = items
            .into_iter()
            .map(|c| ctx.canonicalize(c.as_ref()))
            .collect::<Result<_>>()?;
        Ok(GroupSet { ctx, elems })
    }

    pub(crate) fn from_canonical(ctx: GroupContext, elems: impl IntoIterator<Item = Elem>) -> Self {
        GroupSet {
            ctx,
            elems: elems.into_iter().collect(),
        }
    }

    /// Every element of a finite group.
    pub fn whole(ctx: &GroupContext) -> Result<Self> {
        Ok(GroupSet::from_canonical(ctx.clone(), ctx.elements()?))
    }

    pub fn singleton(ctx: GroupContext, x: Elem) -> Result<Self> {
        if !ctx.contains(&x) {
            return Err(Error::ContextMismatch(format!("{x:?} is not an element of {ctx}")));
        }
        Ok(GroupSet::from_canonical(ctx, [x]))
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Elem> + '_ {
        self.elems.iter()
    }

    pub fn elems(&self) -> &BTreeSet<Elem> {
        &self.elems
    }

    pub fn contains(&self, x: &Elem) -> bool {
        self.elems.contains(x)
    }

    pub fn first(&self) -> Option<&Elem> {
        self.elems.iter().next()
    }

    pub fn is_subset(&self, other: &GroupSet) -> bool {
        self.ctx == other.ctx && self.elems.is_subset(&other.elems)
    }

    /// {a ± b : a ∈ self, b ∈ other}.
    pub fn sumset(&self, other: &GroupSet, sign: Sign) -> Result<GroupSet> {
        self.ctx.check_same(&other.ctx)?;
        let mut out = BTreeSet::new();
        for a in &self.elems {
            for b in &other.elems {
                out.insert(self.ctx.combine(a, b, sign)?);
            }
        }
        Ok(GroupSet::from_canonical(self.ctx.clone(), out))
    }

    /// |A + A| / |A|.
    pub fn doubling(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Empty("set"));
        }
        Ok(self.sumset(self, Sign::Plus)?.len() as f64 / self.len() as f64)
    }

    pub fn translate(&self, t: &Elem) -> Result<GroupSet> {
        let elems = self
            .elems
            .iter()
            .map(|a| self.ctx.add(a, t))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(GroupSet::from_canonical(self.ctx.clone(), elems))
    }

    pub fn negate(&self) -> Result<GroupSet> {
        let elems = self
            .elems
            .iter()
            .map(|a| self.ctx.neg(a))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(GroupSet::from_canonical(self.ctx.clone(), elems))
    }

    pub fn intersection(&self, other: &GroupSet) -> Result<GroupSet> {
        self.ctx.check_same(&other.ctx)?;
        Ok(GroupSet::from_canonical(
            self.ctx.clone(),
            self.elems.intersection(&other.elems).cloned(),
        ))
    }

    /// Image under a homomorphism.
    pub fn image(&self, h: &Homomorphism) -> Result<GroupSet> {
        let cod = h.codomain(&self.ctx)?;
        let elems = self
            .elems
            .iter()
            .map(|a| h.apply(&self.ctx, a))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(GroupSet::from_canonical(cod, elems))
    }

    /// Non-empty fibers A ∩ π⁻¹(y), keyed by y.
    pub fn fibers(&self, h: &Homomorphism) -> Result<BTreeMap<Elem, GroupSet>> {
        let mut out: BTreeMap<Elem, BTreeSet<Elem>> = BTreeMap::new();
        for a in &self.elems {
            out.entry(h.apply(&self.ctx, a)?).or_default().insert(a.clone());
        }
        Ok(out
            .into_iter()
            .map(|(y, elems)| (y, GroupSet::from_canonical(self.ctx.clone(), elems)))
            .collect())
    }

    /// Contains zero, and closed under subtraction.
    pub fn is_subgroup(&self) -> bool {
        if !self.contains(&self.ctx.zero()) {
            return false;
        }
        self.elems.iter().all(|a| {
            self.elems
                .iter()
                .all(|b| matches!(self.ctx.sub(a, b), Ok(d) if self.contains(&d)))
        })
    }

    /// Canonical coset representative of `x + H` for a finite subgroup `self`:
    /// the smallest element of the coset.
    pub fn coset_rep(&self, x: &Elem) -> Result<Elem> {
        self.elems
            .iter()
            .map(|h| self.ctx.add(x, h))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().min().unwrap_or_else(|| x.clone()))
    }

    /// Converts a subgroup of 𝔽₂^D into its echelon form.
    pub fn as_f2_subgroup(&self) -> Result<SubgroupF2> {
        let GroupContext::F2Vec { dim } = self.ctx else {
            return Err(Error::Domain(format!("{} is not F2^D", self.ctx)));
        };
        let h = SubgroupF2::span(dim, &self.elems.iter().cloned().collect::<Vec<_>>())?;
        if h.order() as usize != self.len() {
            return Err(Error::Domain("set is not a subgroup".into()));
        }
        Ok(h)
    }

    /// Canonical key used for memoization.
    pub(crate) fn key(&self) -> Vec<Elem> {
        self.elems.iter().cloned().collect()
    }
}

/// Distinct elements; used by the set-file loader to reject duplicates.
pub(crate) fn first_duplicate(elems: &[Elem]) -> Option<usize> {
    let mut seen = HashSet::new();
    elems.iter().position(|e| !seen.insert(e.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(c: &[i64]) -> Elem {
        Elem::new(c)
    }

    #[test]
    fn hom_examples() {
        let z2 = GroupContext::z(2);
        assert_eq!(Homomorphism::Mod2.apply(&z2, &e(&[3, -2])).unwrap(), e(&[1, 0]));
        let z3 = GroupContext::z(3);
        assert_eq!(
            Homomorphism::CoordProject(0).apply(&z3, &e(&[2, -1, 7])).unwrap(),
            e(&[2])
        );
        let z1 = GroupContext::z(1);
        assert_eq!(Homomorphism::Double.apply(&z1, &e(&[1])).unwrap(), e(&[2]));
    }

    #[test]
    fn hom_domain_errors() {
        let f2 = GroupContext::f2(2);
        assert!(matches!(
            Homomorphism::Mod2.apply(&f2, &e(&[1, 0])),
            Err(Error::ContextMismatch(_))
        ));
        let z2 = GroupContext::z(2);
        assert!(Homomorphism::CoordProject(2).apply(&z2, &e(&[0, 0])).is_err());
        assert!(Homomorphism::Mod2.apply(&z2, &e(&[0, 0, 0])).is_err());
    }

    #[test]
    fn overflow_is_an_error() {
        let z1 = GroupContext::z(1);
        assert_eq!(z1.add(&e(&[i64::MAX]), &e(&[1])), Err(Error::Overflow));
        assert_eq!(
            Homomorphism::Double.apply(&z1, &e(&[i64::MAX / 2 + 1])),
            Err(Error::Overflow)
        );
    }

    #[test]
    fn span_examples() {
        let h = SubgroupF2::span(3, &[e(&[1, 0, 0]), e(&[0, 1, 0])]).unwrap();
        assert_eq!((h.rank(), h.order()), (2, 4));
        let h = SubgroupF2::span(2, &[e(&[1, 1]), e(&[0, 1]), e(&[1, 0])]).unwrap();
        assert!(h.is_full());
        let h = SubgroupF2::span(2, &[]).unwrap();
        assert_eq!((h.rank(), h.order()), (0, 1));
    }

    #[test]
    fn span_is_canonical() {
        let a = SubgroupF2::span(3, &[e(&[1, 1, 0]), e(&[0, 1, 1])]).unwrap();
        let b = SubgroupF2::span(3, &[e(&[1, 0, 1]), e(&[1, 1, 0])]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subgroup_counts() {
        // Gaussian binomial sums.
        let counts: Vec<usize> = (0..=5)
            .map(|d| enumerate_subgroups(d, DEFAULT_SUBGROUP_CAP).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 2, 5, 16, 67, 374]);
        assert!(matches!(
            enumerate_subgroups(6, DEFAULT_SUBGROUP_CAP),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn subgroup_enumeration_is_ordered_and_unique() {
        let subs = enumerate_subgroups(4, 5).unwrap();
        for w in subs.windows(2) {
            assert!((w[0].rank(), &w[0].basis) < (w[1].rank(), &w[1].basis));
        }
    }

    #[test]
    fn subgroup_closure_exhaustive() {
        for h in enumerate_subgroups(4, 5).unwrap() {
            let elems = h.element_bits();
            assert_eq!(elems.len() as u64, h.order());
            for &x in &elems {
                for &y in &elems {
                    assert!(h.contains_bits(x ^ y));
                }
            }
        }
    }

    #[test]
    fn sumset_examples() {
        let z1 = GroupContext::z(1);
        let a = GroupSet::new(z1.clone(), [[0], [1], [2]]).unwrap();
        let s = a.sumset(&a, Sign::Plus).unwrap();
        assert_eq!(s, GroupSet::new(z1.clone(), (0..5).map(|i| [i])).unwrap());

        let f2 = GroupContext::f2(2);
        let s = GroupSet::new(f2.clone(), [[0, 0], [0, 1], [1, 0]]).unwrap();
        assert_eq!(s.sumset(&s, Sign::Minus).unwrap().len(), 4);

        let zero = GroupSet::new(z1.clone(), [[0]]).unwrap();
        let b = GroupSet::new(z1.clone(), [[3], [-7]]).unwrap();
        assert_eq!(zero.sumset(&b, Sign::Plus).unwrap(), b);
    }

    #[test]
    fn difference_set_equality_iff_coset() {
        for dim in 1..=3usize {
            let ctx = GroupContext::f2(dim);
            let subs = enumerate_subgroups(dim, 5).unwrap();
            let n = 1u64 << dim;
            for mask in 1u64..(1u64 << n) {
                let set = GroupSet::from_canonical(
                    ctx.clone(),
                    (0..n).filter(|v| mask >> v & 1 == 1).map(|v| coords_of_bits(v, dim)),
                );
                let diff = set.sumset(&set, Sign::Minus).unwrap();
                assert!(diff.len() >= set.len());
                let x0 = bits_of(set.first().unwrap());
                let is_coset = subs.iter().any(|h| {
                    h.order() as usize == set.len()
                        && set.iter().all(|a| h.contains_bits(bits_of(a) ^ x0))
                });
                assert_eq!(diff.len() == set.len(), is_coset, "{set:?}");
            }
        }
    }

    fn random_elem(rng: &mut ChaCha8Rng, ctx: &GroupContext) -> Elem {
        let raw: Vec<i64> = (0..ctx.dim()).map(|_| rng.random_range(-50..50)).collect();
        ctx.canonicalize(&raw).unwrap()
    }

    #[test]
    fn homomorphism_property_seeded() {
        let q = SubgroupF2::span(3, &[e(&[1, 1, 0])]).unwrap();
        let cases: Vec<(GroupContext, Homomorphism)> = vec![
            (GroupContext::z(3), Homomorphism::CoordProject(1)),
            (GroupContext::z(3), Homomorphism::Mod2),
            (GroupContext::f2(3), Homomorphism::QuotientBy(q.clone())),
            (GroupContext::zmod(&[12, 5]).unwrap(), Homomorphism::Double),
            (GroupContext::z(2), Homomorphism::Double),
            (
                GroupContext::z(3),
                Homomorphism::Mod2.then(Homomorphism::QuotientBy(q)),
            ),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (ctx, h) in cases {
            let cod = h.codomain(&ctx).unwrap();
            for _ in 0..1000 {
                let a = random_elem(&mut rng, &ctx);
                let b = random_elem(&mut rng, &ctx);
                let lhs = h.apply(&ctx, &ctx.add(&a, &b).unwrap()).unwrap();
                let rhs = cod
                    .add(&h.apply(&ctx, &a).unwrap(), &h.apply(&ctx, &b).unwrap())
                    .unwrap();
                assert_eq!(lhs, rhs, "{h:?} on {ctx}");
                assert!(cod.contains(&lhs));
            }
        }
    }

    #[test]
    fn group_axioms_seeded() {
        let ctxs = [
            GroupContext::z(2),
            GroupContext::f2(3),
            GroupContext::zmod(&[12]).unwrap(),
            GroupContext::quotient(SubgroupF2::span(3, &[e(&[0, 1, 1])]).unwrap()),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for ctx in &ctxs {
            for _ in 0..300 {
                let a = random_elem(&mut rng, ctx);
                let b = random_elem(&mut rng, ctx);
                let c = random_elem(&mut rng, ctx);
                let ab = ctx.add(&a, &b).unwrap();
                assert_eq!(ab, ctx.add(&b, &a).unwrap());
                assert_eq!(
                    ctx.add(&ab, &c).unwrap(),
                    ctx.add(&a, &ctx.add(&b, &c).unwrap()).unwrap()
                );
                assert_eq!(ctx.add(&a, &ctx.neg(&a).unwrap()).unwrap(), ctx.zero());
                assert_eq!(ctx.add(&a, &ctx.zero()).unwrap(), a);
            }
        }
    }

    #[test]
    fn quotient_elements() {
        let h = SubgroupF2::span(3, &[e(&[1, 0, 0])]).unwrap();
        let ctx = GroupContext::quotient(h);
        assert_eq!(ctx.elements().unwrap().len(), 4);
        assert_eq!(ctx.order(), Some(4));
    }

    #[test]
    fn subgroup_serde_roundtrip() {
        let h = SubgroupF2::span(3, &[e(&[1, 1, 0]), e(&[0, 0, 1])]).unwrap();
        let s = serde_json::to_string(&h).unwrap();
        let back: SubgroupF2 = serde_json::from_str(&s).unwrap();
        assert_eq!(h, back);
    }
}
