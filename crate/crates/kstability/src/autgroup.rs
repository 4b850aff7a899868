//! The symmetry group acting on the lattice and the slice: a direct product
//! of the even-shift integers, a congruence group of twist matrices, and the
//! automorphisms of the underlying surface.
//!
//! The twist factor is generated by two lattice automorphisms: the spherical
//! half-twist `alpha = H_O : (c, d, r) ↦ (c, d, r - 3d)` and the line-bundle
//! twist `beta = - ⊗ O(1) : (c, d, r) ↦ (c + d + r, d + r, r)`.  Both fix
//! the point class, so they act on the `(d, r)`-plane through 2×2 blocks
//!
//! ```text
//! alpha ↦ [[1, 0], [-3, 1]],    beta ↦ [[1, 1], [0, 1]],
//! ```
//!
//! which generate the congruence group `Gamma_1(3) ⊂ SL_2(Z)` (unit upper
//! triangular mod 3).  The product `x = alpha·beta` has order three and
//! `y = beta` has infinite order; `Gamma_1(3) = ⟨x⟩ * ⟨y⟩ ≅ Z/3 * Z` is a
//! free product, so every word in the generators has a *syllable normal
//! form*, computed here by pure rewriting with no matrix arithmetic.  Two
//! words agree in the group exactly when their normal forms agree; the
//! faithful lattice representation provides an independent cross-check.
//!
//! The shift factor is generated by the −Id involution of the lattice (the
//! even shift `[2]` acts trivially, so only a sign survives).  The surface
//! factor `S_3 ⋉ (C*)³` permutes and rescales the three components of the
//! degenerate surface; it acts trivially on the lattice, and an element
//! descends to the smoothing base exactly when its three scalars multiply
//! to 1.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fmt;



use crate::ktheory::{euler_p2, skew_pairing, KClass, KMatrix};
use crate::rat::RatComplex;

/// Errors from group-element bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    /// The matrix negates the point class: an odd shift factor is present,
    /// so there is no congruence-block image.
    #[error("matrix does not fix the point class: an odd shift is present")]
    ShiftPresent,
    /// The matrix fixes the point class but its `(d, r)` block fails the
    /// congruence conditions.
    #[error("(d, r) block {0:?} is not in Gamma_1(3)")]
    NotGamma13([[i64; 2]; 2]),
    /// Half-twists are only defined along exceptional classes.
    #[error("class {0} is not exceptional")]
    NotExceptional(KClass),
    #[error("{0:?} is not a permutation of the three components")]
    BadPermutation([usize; 3]),
    #[error("scalar for component {0} must be nonzero")]
    ZeroScalar(usize),
    #[error("unknown word token `{0}` (expected a, a^-1, b, b^-1)")]
    BadToken(String),
}

/// Generators of the twist-word alphabet, in canonical search order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwistGen {
    Alpha,
    AlphaInv,
    Beta,
    BetaInv,
}

pub const TWIST_GENERATORS: [TwistGen; 4] =
    [TwistGen::Alpha, TwistGen::AlphaInv, TwistGen::Beta, TwistGen::BetaInv];

impl TwistGen {
    pub fn matrix(&self) -> KMatrix {
        match self {
            TwistGen::Alpha => matrix_alpha(),
            TwistGen::AlphaInv => KMatrix([[1, 0, 0], [0, 1, 0], [0, 3, 1]]),
            TwistGen::Beta => matrix_beta(),
            TwistGen::BetaInv => KMatrix([[1, -1, 0], [0, 1, -1], [0, 0, 1]]),
        }
    }

    pub fn inverse(&self) -> TwistGen {
        match self {
            TwistGen::Alpha => TwistGen::AlphaInv,
            TwistGen::AlphaInv => TwistGen::Alpha,
            TwistGen::Beta => TwistGen::BetaInv,
            TwistGen::BetaInv => TwistGen::Beta,
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            TwistGen::Alpha => "a",
            TwistGen::AlphaInv => "a^-1",
            TwistGen::Beta => "b",
            TwistGen::BetaInv => "b^-1",
        }
    }

    pub fn from_token(s: &str) -> Result<TwistGen, GroupError> {
        match s {
            "a" => Ok(TwistGen::Alpha),
            "a^-1" => Ok(TwistGen::AlphaInv),
            "b" => Ok(TwistGen::Beta),
            "b^-1" => Ok(TwistGen::BetaInv),
            other => Err(GroupError::BadToken(other.to_string())),
        }
    }
}

impl fmt::Display for TwistGen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The half-twist along `O`: `(c, d, r) ↦ (c, d, r - 3d)`.
pub fn matrix_alpha() -> KMatrix {
    KMatrix([[1, 0, 0], [0, 1, 0], [0, -3, 1]])
}

/// The line-bundle twist `- ⊗ O(1)`: `(c, d, r) ↦ (c + d + r, d + r, r)`.
pub fn matrix_beta() -> KMatrix {
    KMatrix([[1, 1, 1], [0, 1, 1], [0, 0, 1]])
}

/// The odd shift `[1]`: minus the identity on the lattice.
pub fn matrix_shift() -> KMatrix {
    KMatrix([[-1, 0, 0], [0, -1, 0], [0, 0, -1]])
}

/// The half-twist along an exceptional class `e`:
/// `v ↦ v - ⟨e, v⟩ e` with `⟨ , ⟩` the skew pairing.  Fixes the point class
/// and preserves the skew pairing.
pub fn matrix_half_twist(e: &KClass) -> Result<KMatrix, GroupError> {
    if e.r <= 0 || euler_p2(e, e) != 1 {
        return Err(GroupError::NotExceptional(*e));
    }
    let mut m = [[0i64; 3]; 3];
    let basis = [KClass::point(), KClass::line(), KClass::new(0, 0, 1)];
    for (j, v) in basis.iter().enumerate() {
        let w = *v - e.scaled(skew_pairing(e, v));
        m[0][j] = w.c;
        m[1][j] = w.d;
        m[2][j] = w.r;
    }
    Ok(KMatrix(m))
}

/// Product matrix of a word, letters acting left to right on the right:
/// `M(g_1 … g_k) = M(g_1) · … · M(g_k)`.
pub fn word_matrix(word: &[TwistGen]) -> KMatrix {
    word.iter()
        .fold(KMatrix::identity(), |acc, g| acc.mul(&g.matrix()))
}

/// Free reduction: cancel adjacent inverse letters (repeatedly).
pub fn reduce_word(word: &[TwistGen]) -> Vec<TwistGen> {
    let mut out: Vec<TwistGen> = Vec::with_capacity(word.len());
    for &g in word {
        if out.last() == Some(&g.inverse()) {
            out.pop();
        } else {
            out.push(g);
        }
    }
    out
}

/// Parse a whitespace-separated word in the tokens `a`, `a^-1`, `b`, `b^-1`.
pub fn parse_word(s: &str) -> Result<Vec<TwistGen>, GroupError> {
    s.split_whitespace().map(TwistGen::from_token).collect()
}

/// The defining relation of the twist pair: `(alpha·beta)^3 = 1`.
pub fn verify_braid_relation() -> bool {
    let x = matrix_alpha().mul(&matrix_beta());
    let x3 = x.mul(&x).mul(&x);
    x3 == KMatrix::identity() && x != KMatrix::identity()
}

/// Project a twist matrix to its `(d, r)` block in `Gamma_1(3)`.
///
/// Requires the matrix to fix the point class outright (first column
/// `(1,0,0)`); a sign there means an odd shift was mixed in.  The block is
/// then validated: determinant 1 and unit upper triangular mod 3.
pub fn gamma13_image(m: &KMatrix) -> Result<[[i64; 2]; 2], GroupError> {
    let col0 = [m.0[0][0], m.0[1][0], m.0[2][0]];
    if col0 == [-1, 0, 0] {
        return Err(GroupError::ShiftPresent);
    }
    let block = [[m.0[1][1], m.0[1][2]], [m.0[2][1], m.0[2][2]]];
    let det = block[0][0] * block[1][1] - block[0][1] * block[1][0];
    let ok = col0 == [1, 0, 0]
        && det == 1
        && block[0][0].rem_euclid(3) == 1
        && block[1][1].rem_euclid(3) == 1
        && block[1][0].rem_euclid(3) == 0;
    if !ok {
        return Err(GroupError::NotGamma13(block));
    }
    Ok(block)
}

/// Shortest word in the canonical alphabet whose matrix is `target`, or
/// `None` if no word of length at most `max_len` works.  Breadth-first
/// search with free reduction and first-visit memoisation, so the returned
/// word is the lexicographically earliest among the shortest.
pub fn express_twist_as_word(target: &KMatrix, max_len: usize) -> Option<Vec<TwistGen>> {
    if *target == KMatrix::identity() {
        return Some(Vec::new());
    }
    let mut seen: HashMap<KMatrix, ()> = HashMap::new();
    seen.insert(KMatrix::identity(), ());
    let mut queue: VecDeque<(KMatrix, Vec<TwistGen>)> = VecDeque::new();
    queue.push_back((KMatrix::identity(), Vec::new()));
    while let Some((m, word)) = queue.pop_front() {
        if word.len() == max_len {
            continue;
        }
        for g in TWIST_GENERATORS {
            if word.last() == Some(&g.inverse()) {
                continue;
            }
            let next = m.mul(&g.matrix());
            if seen.contains_key(&next) {
                continue;
            }
            let mut next_word = word.clone();
            next_word.push(g);
            if next == *target {
                return Some(next_word);
            }
            seen.insert(next, ());
            queue.push_back((next, next_word));
        }
    }
    None
}

/// A syllable of the free-product normal form `Z/3 * Z`, with `x = alpha·beta`
/// (order three) and `y = beta` (infinite order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Syllable {
    /// `x^e` with `e ∈ {1, 2}`.
    X(u8),
    /// `y^k` with `k ≠ 0`.
    Y(i64),
}

/// Normal form of a twist word in the free product `⟨x⟩ * ⟨y⟩`.
///
/// Letters decompose as `alpha = x·y^{-1}`, `alpha^{-1} = y·x^{-1}`,
/// `beta = y`; syllables are then merged and cancelled by pure rewriting.
/// Two words are equal in the group if and only if their normal forms are
/// equal.  (The braid relation is absorbed structurally: `(alpha·beta)^3`
/// rewrites to `x^3`, which cancels.)
pub fn gamma13_normal_form(word: &[TwistGen]) -> Vec<Syllable> {
    let mut stack: Vec<Syllable> = Vec::new();
    let push = |stack: &mut Vec<Syllable>, s: Syllable| {
        match (stack.last_mut(), s) {
            (Some(Syllable::X(e)), Syllable::X(f)) => {
                let sum = (*e + f) % 3;
                if sum == 0 {
                    stack.pop();
                } else {
                    *e = sum;
                }
            }
            (Some(Syllable::Y(k)), Syllable::Y(l)) => {
                let sum = *k + l;
                if sum == 0 {
                    stack.pop();
                } else {
                    *k = sum;
                }
            }
            _ => stack.push(s),
        }
    };
    for g in word {
        match g {
            TwistGen::Alpha => {
                push(&mut stack, Syllable::X(1));
                push(&mut stack, Syllable::Y(-1));
            }
            TwistGen::AlphaInv => {
                push(&mut stack, Syllable::Y(1));
                push(&mut stack, Syllable::X(2));
            }
            TwistGen::Beta => push(&mut stack, Syllable::Y(1)),
            TwistGen::BetaInv => push(&mut stack, Syllable::Y(-1)),
        }
    }
    stack
}

/// Group-level equality of two twist words.
pub fn words_equivalent(w1: &[TwistGen], w2: &[TwistGen]) -> bool {
    gamma13_normal_form(w1) == gamma13_normal_form(w2)
}

/// An automorphism of the degenerate surface: a permutation `sigma` of the
/// three components together with a scaling `lambda ∈ (C*)³`, recorded with
/// exact Gaussian-rational scalars.  Acts trivially on the lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutXElement {
    perm: [usize; 3],
    scalars: [RatComplex; 3],
}

impl AutXElement {
    /// `perm[i]` is the image of component `i`; scalars must be nonzero.
    pub fn new(perm: [usize; 3], scalars: [RatComplex; 3]) -> Result<Self, GroupError> {
        let mut hit = [false; 3];
        for &p in &perm {
            if p > 2 || hit[p] {
                return Err(GroupError::BadPermutation(perm));
            }
            hit[p] = true;
        }
        for (i, s) in scalars.iter().enumerate() {
            if s.is_zero() {
                return Err(GroupError::ZeroScalar(i));
            }
        }
        Ok(AutXElement { perm, scalars })
    }

    pub fn identity() -> Self {
        AutXElement {
            perm: [0, 1, 2],
            scalars: [RatComplex::one(), RatComplex::one(), RatComplex::one()],
        }
    }

    pub fn perm(&self) -> [usize; 3] {
        self.perm
    }

    pub fn scalars(&self) -> &[RatComplex; 3] {
        &self.scalars
    }

    /// Composition `(sigma, lambda)·(tau, mu) = (sigma∘tau, lambda ⊙ sigma(mu))`,
    /// where `sigma(mu)` permutes the tuple: component `sigma(i)` receives
    /// `mu_i`.
    pub fn compose(&self, other: &AutXElement) -> AutXElement {
        let mut perm = [0usize; 3];
        let mut scalars = [RatComplex::one(), RatComplex::one(), RatComplex::one()];
        for i in 0..3 {
            perm[i] = self.perm[other.perm[i]];
        }
        for i in 0..3 {
            // sigma(mu)_{sigma(i)} = mu_i.
            scalars[self.perm[i]] = &self.scalars[self.perm[i]] * &other.scalars[i];
        }
        AutXElement { perm, scalars }
    }

    pub fn inverse(&self) -> AutXElement {
        let mut perm = [0usize; 3];
        let mut scalars = [RatComplex::one(), RatComplex::one(), RatComplex::one()];
        for i in 0..3 {
            perm[self.perm[i]] = i;
        }
        for i in 0..3 {
            // (sigma^{-1}(lambda^{-1}))_{sigma^{-1}(c)} = lambda_c^{-1}.
            scalars[i] = self.scalars[self.perm[i]]
                .inv()
                .expect("scalars are nonzero by construction");
        }
        AutXElement { perm, scalars }
    }

    /// Whether the automorphism extends over the smoothing base: the three
    /// scalars must multiply to 1.
    pub fn extends_over_base(&self) -> bool {
        let product = &(&self.scalars[0] * &self.scalars[1]) * &self.scalars[2];
        product == RatComplex::one()
    }
}

/// An element of the full symmetry group, split along the direct-product
/// decomposition: an integer shift power, a twist word, and a surface
/// automorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutElement {
    pub shift: i64,
    pub gamma: Vec<TwistGen>,
    pub autx: AutXElement,
}

impl AutElement {
    pub fn identity() -> Self {
        AutElement { shift: 0, gamma: Vec::new(), autx: AutXElement::identity() }
    }

    /// Action on the lattice: the twist-word matrix, negated for odd shifts.
    /// The surface factor acts trivially.
    pub fn k_matrix(&self) -> KMatrix {
        let m = word_matrix(&self.gamma);
        if self.shift.rem_euclid(2) == 1 {
            matrix_shift().mul(&m)
        } else {
            m
        }
    }
}

/// Compose in the direct product: shifts add, twist words concatenate (and
/// freely reduce), surface automorphisms compose.
pub fn group_compose(g1: &AutElement, g2: &AutElement) -> AutElement {
    let mut gamma = g1.gamma.clone();
    gamma.extend_from_slice(&g2.gamma);
    AutElement {
        shift: g1.shift + g2.shift,
        gamma: reduce_word(&gamma),
        autx: g1.autx.compose(&g2.autx),
    }
}
