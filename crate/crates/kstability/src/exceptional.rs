//! Exceptional classes on the plane, generated by mutation.
//!
//! An exceptional class is a `v` with `euler_p2(v, v) = 1` that is realised
//! by an exceptional bundle.  Rather than the closed-form dyadic slope
//! parametrisation, this module generates them the way they arise: starting
//! from line bundles and mutating adjacent pairs.  Numerically a mutation of
//! an adjacent pair `(e1, e2)` (slopes `mu(e1) < mu(e2)`) is
//!
//! * left:  `chi(e1, e2) · v1 - v2`
//! * right: `chi(e1, e2) · v2 - v1`
//!
//! with the result sign-normalised to positive rank.  Inside one period the
//! classes organise into a Farey-like binary tree: the interval between two
//! adjacent slopes contains a unique exceptional class of minimal rank (its
//! "middle"), and the middles of the two sub-intervals are again mutations:
//!
//! ```text
//!   interval (A, B) with middle M:
//!     middle of (A, M) = left mutation of (M, B)
//!     middle of (M, B) = right mutation of (A, M)
//! ```
//!
//! The rank triples `(r_A, r_M, r_B)` of the tree are exactly Markov
//! triples, `r_A² + r_M² + r_B² = 3 r_A r_M r_B`, so ranks are Markov
//! numbers (1, 2, 5, 13, 29, 34, ...) and middles strictly dominate their
//! interval endpoints in rank, which makes pruning by a rank bound sound.
//! Slopes of exceptional classes are always reduced fractions whose
//! denominator equals the rank.

use crate::ktheory::{euler_p2, KClass};
use crate::rat::{rat, Rat};
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

/// Which mutation of an adjacent pair to perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Errors from the mutation calculus.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExcError {
    /// The numerical mutation did not produce an exceptional class of
    /// positive rank; the inputs were not an adjacent exceptional pair.
    #[error("mutation of {0} and {1} degenerates: {2}")]
    DegenerateMutation(KClass, KClass, String),
}

/// An exceptional class together with its position in the mutation tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalClass {
    pub class: KClass,
    /// Mutation generation: 0 for the seed line bundles.
    pub depth: u32,
    /// Slopes of the two tree neighbours this class mediates between
    /// (`None` for seeds).
    pub parents: Option<(KClass, KClass)>,
}

impl ExceptionalClass {
    fn seed(class: KClass) -> Self {
        ExceptionalClass { class, depth: 0, parents: None }
    }

    pub fn rank(&self) -> i64 {
        self.class.r
    }

    pub fn slope(&self) -> Rat {
        rat(self.class.d, self.class.r)
    }

    pub fn delta(&self) -> Rat {
        self.class
            .discriminant()
            .expect("exceptional classes have positive rank")
    }

    /// Translate by the line-bundle twist `- ⊗ O(n)`:
    /// `(c, d, r) ↦ (c + n d + n(n+1)/2 · r, d + n r, r)`.
    pub fn twisted(&self, n: i64) -> Self {
        ExceptionalClass {
            class: twist_class(&self.class, n),
            depth: self.depth,
            parents: self
                .parents
                .map(|(a, b)| (twist_class(&a, n), twist_class(&b, n))),
        }
    }
}

/// Class of `E ⊗ O(n)` for `E` of class `v`.
pub fn twist_class(v: &KClass, n: i64) -> KClass {
    KClass::new(
        v.c + n * v.d + n * (n + 1) / 2 * v.r,
        v.d + n * v.r,
        v.r,
    )
}

/// The seed collection `([O(-1)], [O], [O(1)])`.
pub fn seed_collection() -> [ExceptionalClass; 3] {
    [
        ExceptionalClass::seed(KClass::line_bundle(-1)),
        ExceptionalClass::seed(KClass::line_bundle(0)),
        ExceptionalClass::seed(KClass::line_bundle(1)),
    ]
}

/// Mutate an adjacent exceptional pair.  `Left` forms `chi·v1 - v2` and
/// `Right` forms `chi·v2 - v1` with `chi = euler_p2(v1, v2)`, sign-normalised
/// to positive rank.  The result must again be exceptional; if not, the
/// inputs were not an adjacent pair and `DegenerateMutation` is returned.
pub fn mutate(
    e1: &ExceptionalClass,
    e2: &ExceptionalClass,
    side: Side,
) -> Result<ExceptionalClass, ExcError> {
    let (v1, v2) = (e1.class, e2.class);
    if e1.slope() >= e2.slope() {
        return Err(ExcError::DegenerateMutation(
            v1,
            v2,
            "pair is not slope-ordered".to_string(),
        ));
    }
    let chi = euler_p2(&v1, &v2);
    let mut w = match side {
        Side::Left => v1.scaled(chi) - v2,
        Side::Right => v2.scaled(chi) - v1,
    };
    if w.r == 0 {
        return Err(ExcError::DegenerateMutation(
            v1,
            v2,
            "mutated class has rank zero".to_string(),
        ));
    }
    if w.r < 0 {
        w = -w;
    }
    if euler_p2(&w, &w) != 1 {
        return Err(ExcError::DegenerateMutation(
            v1,
            v2,
            format!("mutated class {w} is not exceptional"),
        ));
    }
    Ok(ExceptionalClass {
        class: w,
        depth: e1.depth.max(e2.depth) + 1,
        parents: Some((v1, v2)),
    })
}

/// Everything `enumerate` knows about one run of the mutation tree.
#[derive(Debug, Clone)]
pub struct Enumeration {
    /// All exceptional classes with slope in `[0, 1)` and rank at most the
    /// bound, ordered by `(rank, slope)`.
    pub classes: Vec<ExceptionalClass>,
    /// Rank triples `(r_A, r_M, r_B)` of every materialised tree triple, in
    /// breadth-first discovery order, starting with the seed `(1, 1, 1)`.
    pub rank_triples: Vec<[i64; 3]>,
}

/// Generate all exceptional classes with slope in `[0, 1)` and rank
/// `<= max_rank` by breadth-first mutation, together with the Markov rank
/// triples encountered.  Deterministic: the result is sorted by
/// `(rank, slope)` and the triples follow BFS order.
pub fn enumerate_full(max_rank: i64) -> Enumeration {
    let mut classes: BTreeMap<Rat, ExceptionalClass> = BTreeMap::new();
    let mut rank_triples = Vec::new();
    if max_rank < 1 {
        return Enumeration { classes: Vec::new(), rank_triples };
    }
    let [om1, o, o1] = seed_collection();
    rank_triples.push([om1.rank(), o.rank(), o1.rank()]);
    classes.insert(o.slope(), o.clone());

    // Root middle of the interval (0, 1): reflect [O(-1)] across [O].
    let root = mutate(&om1, &o, Side::Right).expect("seed mutation is non-degenerate");
    debug_assert_eq!(root.class, KClass::new(0, 1, 2));

    // BFS over triples (A, M, B); every queued middle already passed the
    // rank bound and is recorded.
    let mut queue: VecDeque<(ExceptionalClass, ExceptionalClass, ExceptionalClass)> =
        VecDeque::new();
    if root.rank() <= max_rank {
        rank_triples.push([o.rank(), root.rank(), o1.rank()]);
        classes.insert(root.slope(), root.clone());
        queue.push_back((o, root, o1));
    }
    while let Some((a, m, b)) = queue.pop_front() {
        let left = mutate(&m, &b, Side::Left).expect("tree mutation is non-degenerate");
        if left.rank() <= max_rank {
            debug_assert!(a.slope() < left.slope() && left.slope() < m.slope());
            rank_triples.push([a.rank(), left.rank(), m.rank()]);
            let prev = classes.insert(left.slope(), left.clone());
            debug_assert!(prev.is_none(), "duplicate slope in mutation tree");
            queue.push_back((a.clone(), left, m.clone()));
        }
        let right = mutate(&a, &m, Side::Right).expect("tree mutation is non-degenerate");
        if right.rank() <= max_rank {
            debug_assert!(m.slope() < right.slope() && right.slope() < b.slope());
            rank_triples.push([m.rank(), right.rank(), b.rank()]);
            let prev = classes.insert(right.slope(), right.clone());
            debug_assert!(prev.is_none(), "duplicate slope in mutation tree");
            queue.push_back((m, right, b));
        }
    }

    let mut list: Vec<ExceptionalClass> = classes.into_values().collect();
    list.sort_by(|x, y| (x.rank(), x.slope()).cmp(&(y.rank(), y.slope())));
    Enumeration { classes: list, rank_triples }
}

/// Exceptional classes with slope in `[0, 1)` and rank `<= max_rank`,
/// ordered by `(rank, slope)`.
pub fn enumerate(max_rank: i64) -> Vec<ExceptionalClass> {
    enumerate_full(max_rank).classes
}

/// All integer translates of the fundamental-domain classes whose slopes lie
/// in the closed window `[lo, hi]`, ordered by `(rank, slope)`.
pub fn enumerate_in_window(max_rank: i64, lo: &Rat, hi: &Rat) -> Vec<ExceptionalClass> {
    let base = enumerate(max_rank);
    let mut out = Vec::new();
    if lo > hi {
        return out;
    }
    let n_lo = lo.floor().to_integer().to_i64().expect("window bound out of range");
    let n_hi = hi.ceil().to_integer().to_i64().expect("window bound out of range");
    for n in n_lo..=n_hi {
        for e in &base {
            let t = e.twisted(n);
            let s = t.slope();
            if &s >= lo && &s <= hi {
                out.push(t);
            }
        }
    }
    out.sort_by(|x, y| (x.rank(), x.slope()).cmp(&(y.rank(), y.slope())));
    out
}

/// Look up the unique enumerated exceptional class of the given slope, if
/// any.  The slope is reduced into `[0, 1)` and the match twisted back, so
/// any rational slope is accepted.  Returns `None` when no class of rank
/// `<= max_rank` has this slope; since slope denominators equal ranks, a
/// denominator above the bound can never match.
pub fn exceptional_at_slope(q: &Rat, max_rank: i64) -> Option<ExceptionalClass> {
    let den = q.denom();
    if den > &num_bigint::BigInt::from(max_rank.max(0)) {
        return None;
    }
    let n = q.floor().to_integer().to_i64()?;
    let q0 = q - rat(n, 1);
    debug_assert!(!q0.is_negative() && q0 < rat(1, 1));
    enumerate(max_rank)
        .into_iter()
        .find(|e| e.slope() == q0)
        .map(|e| e.twisted(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;

    #[test]
    fn seeds_are_line_bundles() {
        let [a, b, c] = seed_collection();
        assert_eq!(a.class, KClass::new(0, -1, 1));
        assert_eq!(b.class, KClass::new(0, 0, 1));
        assert_eq!(c.class, KClass::new(1, 1, 1));
        assert!(seed_collection().iter().all(|e| e.depth == 0));
    }

    #[test]
    fn mutation_worked_example() {
        let [_, o, o1] = seed_collection();
        let left = mutate(&o, &o1, Side::Left).unwrap();
        assert_eq!(left.class, KClass::new(-1, -1, 2));
        assert_eq!(left.slope(), rat(-1, 2));
        assert_eq!(left.delta(), rat(3, 8));
        assert_eq!(left.depth, 1);
        let right = mutate(&o, &o1, Side::Right).unwrap();
        assert_eq!(right.class, KClass::new(3, 3, 2));
        assert_eq!(right.slope(), rat(3, 2));
    }

    #[test]
    fn mutation_rejects_unordered_pairs() {
        let [_, o, o1] = seed_collection();
        assert!(matches!(
            mutate(&o1, &o, Side::Left),
            Err(ExcError::DegenerateMutation(_, _, _))
        ));
        assert!(mutate(&o, &o, Side::Right).is_err());
    }

    #[test]
    fn enumerate_rank_one_and_two() {
        let ranks1 = enumerate(1);
        assert_eq!(ranks1.len(), 1);
        assert_eq!(ranks1[0].class, KClass::new(0, 0, 1));

        let ranks2 = enumerate(2);
        assert_eq!(ranks2.len(), 2);
        assert_eq!(ranks2[1].class, KClass::new(0, 1, 2));
        assert_eq!(ranks2[1].slope(), rat(1, 2));
        assert_eq!(ranks2[1].delta(), rat(3, 8));
    }

    #[test]
    fn enumerate_small_tree_slopes() {
        // Ranks <= 13 inside [0,1): slopes 0, 1/2, 2/5, 3/5, 5/13, 8/13.
        let got: Vec<(i64, Rat)> = enumerate(13).iter().map(|e| (e.rank(), e.slope())).collect();
        let want = vec![
            (1, rat_int(0)),
            (2, rat(1, 2)),
            (5, rat(2, 5)),
            (5, rat(3, 5)),
            (13, rat(5, 13)),
            (13, rat(8, 13)),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn every_enumerated_class_is_exceptional() {
        for e in enumerate(62) {
            assert_eq!(euler_p2(&e.class, &e.class), 1, "class {}", e.class);
            // Slope denominator equals rank (the fraction d/r is reduced).
            assert_eq!(e.slope().denom(), &num_bigint::BigInt::from(e.rank()));
            // Discriminant (1 - 1/r²)/2.
            let r = rat_int(e.rank());
            assert_eq!(e.delta(), (rat_int(1) - rat_int(1) / (&r * &r)) / rat_int(2));
        }
    }

    #[test]
    fn markov_property_of_rank_triples() {
        let en = enumerate_full(34);
        assert!(!en.rank_triples.is_empty());
        assert_eq!(en.rank_triples[0], [1, 1, 1]);
        for [a, b, c] in &en.rank_triples {
            assert_eq!(a * a + b * b + c * c, 3 * a * b * c, "triple ({a},{b},{c})");
        }
        let mut sorted: Vec<[i64; 3]> = en
            .rank_triples
            .iter()
            .map(|t| {
                let mut t = *t;
                t.sort();
                t
            })
            .collect();
        sorted.dedup();
        assert!(sorted.contains(&[1, 1, 2]));
        assert!(sorted.contains(&[1, 2, 5]));
        assert!(sorted.contains(&[2, 5, 29]));
    }

    #[test]
    fn window_translates() {
        let w = enumerate_in_window(2, &rat(-3, 2), &rat(3, 2));
        let slopes: Vec<Rat> = w.iter().map(|e| e.slope()).collect();
        assert_eq!(
            slopes,
            vec![
                rat_int(-1),
                rat_int(0),
                rat_int(1),
                rat(-3, 2),
                rat(-1, 2),
                rat(1, 2),
                rat(3, 2)
            ]
        );
        for e in &w {
            assert_eq!(euler_p2(&e.class, &e.class), 1);
        }
    }

    #[test]
    fn at_slope_lookup() {
        let e = exceptional_at_slope(&rat(1, 2), 34).unwrap();
        assert_eq!(e.class, KClass::new(0, 1, 2));
        // 1/4 is not an exceptional slope: 4 is not a rank of any
        // enumerated exceptional class.
        assert!(exceptional_at_slope(&rat(1, 4), 34).is_none());
        // Translates resolve through the period map.
        let e2 = exceptional_at_slope(&rat(-1, 2), 34).unwrap();
        assert_eq!(e2.class, KClass::new(-1, -1, 2));
        let e3 = exceptional_at_slope(&rat_int(2), 34).unwrap();
        assert_eq!(e3.class, KClass::line_bundle(2));
        // Denominator exceeding the rank bound short-circuits.
        assert!(exceptional_at_slope(&rat(5, 13), 5).is_none());
        assert!(exceptional_at_slope(&rat(5, 13), 13).is_some());
    }
}
