//! Wall bands, crossings along paths in the slice, and transport back into
//! the geometric region.
//!
//! Over each exceptional slope `mu_E` the boundary of the geometric region
//! contains a vertical *wall band*: the points with `B = mu_E` and
//! `Delta_E < g < 1 - Delta_E` (the upper endpoint is the envelope value
//! `delta(mu_E)`, the lower one the vertex of `E`).  On the band the charge
//! takes a negative real value on `E`, so `E` and its companions become
//! semistable of the limiting phase; which one degenerates to a subobject
//! depends on the side from which the band is approached:
//!
//! * approaching with `B` increasing (`B < mu_E` before the wall), the
//!   *plus* shape appears: subobject class `r·[E]`, quotient class
//!   `r·[E] - [O_x]` in homological degree 1;
//! * approaching with `B` decreasing, the *minus* shape: subobject class
//!   `[O_x] - r·[E]`, quotient class `r·[E]` in degree 2.
//!
//! Either way the signed classes sum to the point class `[O_x]`.
//!
//! A path is a piecewise-linear curve through slice points.  Along each
//! segment the function `Im b(t) + mu_E · Im a(t)` is linear and vanishes
//! exactly where `B(t) = mu_E`, so crossings are found by exact linear
//! solves; `B` itself is monotone per segment, which bounds the slopes that
//! can be met.  A transversal pass through the open band is reported with
//! its side; an exact hit of a band endpoint, a tangential touch, or a path
//! endpoint sitting on a band is reported as a `Boundary` record; a segment
//! that runs *along* a band for a positive-length interval is an error, as
//! no transversal crossing data makes sense there.
//!
//! For a minus crossing the half-twist along `E` transports the stability
//! parameters to the matching presentation on the far bank; the transported
//! point (same `(B, g)`, shifted `Re a`) is recorded as a witness.  More
//! generally `normalize_to_geometric` searches words in half-twists along
//! low-rank exceptional classes to bring an arbitrary charge back over the
//! closure of the geometric region.

use std::collections::{HashMap, VecDeque};

use num_traits::{One, Signed, Zero};

use crate::autgroup::matrix_half_twist;
use crate::chamber::{normalize, CentralCharge, ChamberError, Normalized, SlicePoint};
use crate::dlp::EnvelopeModel;
use crate::exceptional::{enumerate_in_window, exceptional_at_slope, ExceptionalClass};
use crate::ktheory::{KClass, KMatrix};
use crate::rat::{rat, rat_int, Rat};

/// Errors from wall analysis.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WallError {
    /// A path needs at least two distinct consecutive waypoints.
    #[error("path needs at least two waypoints, with consecutive waypoints distinct")]
    DegeneratePath,
    /// A segment lies inside the closed wall band of `exceptional` for a
    /// positive-length parameter interval.
    #[error("segment {segment} runs along the wall band of {exceptional}")]
    WallGraze { segment: usize, exceptional: KClass },
    /// No twist word within the length budget reaches the geometric region.
    #[error("no twist word of length <= {budget} transports the charge into the geometric region")]
    BudgetExhausted { budget: usize },
    /// The class is not in the exceptional family.
    #[error("class {0} is not exceptional")]
    NotExceptional(KClass),
    #[error(transparent)]
    Chamber(#[from] ChamberError),
}

/// Validate a class against the exceptional family itself (not just the
/// numerical equation `chi(v,v) = 1`, which has spurious solutions at
/// non-exceptional ranks).
pub fn require_exceptional(e: &KClass) -> Result<ExceptionalClass, WallError> {
    if e.r > 0 {
        let mu = rat(e.d, e.r);
        if let Some(ec) = exceptional_at_slope(&mu, e.r) {
            if ec.class == *e {
                return Ok(ec);
            }
        }
    }
    Err(WallError::NotExceptional(*e))
}

/// Whether a slice point lies on the open wall band of `e`.
pub fn on_wall_locus(p: &SlicePoint, e: &KClass) -> Result<bool, WallError> {
    let ec = require_exceptional(e)?;
    let (bb, g) = p.projection_f();
    let delta = ec.delta();
    Ok(bb == ec.slope() && g > delta && g < rat_int(1) - delta)
}

/// One factor of a two-step degeneration, as a class with a homological
/// shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JhPiece {
    pub class: KClass,
    pub shift: u8,
}

/// The two-step filtration of the point class at a wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JhFiltration {
    pub sub: JhPiece,
    pub quot: JhPiece,
}

impl JhFiltration {
    /// Alternating sum `(-1)^shift · class` over the pieces.
    pub fn signed_sum(&self) -> KClass {
        let mut total = KClass::zero();
        for piece in [&self.sub, &self.quot] {
            let signed = if piece.shift % 2 == 0 {
                piece.class
            } else {
                -piece.class
            };
            total = total + signed;
        }
        total
    }
}

/// Degeneration shape on the plus side (`B` increasing through `mu_E`):
/// subobject `r·[E]`, quotient `r·[E] - [O_x]` in degree 1.
pub fn jh_classes(e: &KClass) -> Result<JhFiltration, WallError> {
    let ec = require_exceptional(e)?;
    let re = ec.class.scaled(ec.rank());
    Ok(JhFiltration {
        sub: JhPiece { class: re, shift: 0 },
        quot: JhPiece { class: re - KClass::point(), shift: 1 },
    })
}

/// Degeneration shape on the minus side (`B` decreasing through `mu_E`):
/// subobject `[O_x] - r·[E]`, quotient `r·[E]` in degree 2.
pub fn jh_classes_minus(e: &KClass) -> Result<JhFiltration, WallError> {
    let ec = require_exceptional(e)?;
    let re = ec.class.scaled(ec.rank());
    Ok(JhFiltration {
        sub: JhPiece { class: KClass::point() - re, shift: 0 },
        quot: JhPiece { class: re, shift: 2 },
    })
}

/// Which bank of the wall the path approaches from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallSide {
    /// `B` increasing through the wall slope.
    Plus,
    /// `B` decreasing through the wall slope.
    Minus,
    /// An endpoint hit, tangential touch, or a path endpoint on the band:
    /// no transversal side.
    Boundary,
}

impl WallSide {
    pub fn label(&self) -> &'static str {
        match self {
            WallSide::Plus => "plus",
            WallSide::Minus => "minus",
            WallSide::Boundary => "boundary",
        }
    }
}

/// A wall event along a path.
#[derive(Debug, Clone)]
pub struct Crossing {
    /// Segment index (waypoint `segment` to `segment + 1`).
    pub segment: usize,
    /// Parameter within the segment, in `[0, 1]`.
    pub t: Rat,
    pub exceptional: ExceptionalClass,
    /// The path point at the event.
    pub point: SlicePoint,
    /// `B` at the event (the wall slope).
    pub b: Rat,
    /// Band height at the event.
    pub g: Rat,
    pub side: WallSide,
    /// Degeneration shape, for transversal crossings.
    pub jh: Option<JhFiltration>,
    /// For minus crossings: the half-twist transport of the event point.
    pub witness: Option<SlicePoint>,
}

fn lerp(z0: &crate::rat::RatComplex, z1: &crate::rat::RatComplex, t: &Rat) -> crate::rat::RatComplex {
    let s = rat_int(1) - t;
    z0.scale(&s) + z1.scale(t)
}

fn point_at(p0: &SlicePoint, p1: &SlicePoint, t: &Rat) -> SlicePoint {
    SlicePoint::new(lerp(p0.a(), p1.a(), t), lerp(p0.b(), p1.b(), t))
        .expect("segments between slice points stay in the upper half plane")
}

#[derive(Debug)]
enum ZeroItem {
    Point { seg: usize, t: Rat },
    Interval { first: usize, last: usize },
}

/// Find all wall events along a piecewise-linear path, with the band family
/// truncated at contributor rank `max_rank`.
pub fn detect_crossings(
    path: &[SlicePoint],
    max_rank: i64,
) -> Result<Vec<Crossing>, WallError> {
    if path.len() < 2 || path.windows(2).any(|w| w[0] == w[1]) {
        return Err(WallError::DegeneratePath);
    }
    let nseg = path.len() - 1;

    // B is monotone on each segment, so waypoint values bound the whole
    // range of slopes the path can meet.
    let bvals: Vec<Rat> = path.iter().map(|p| p.projection_f().0).collect();
    let bmin = bvals.iter().min().unwrap().clone();
    let bmax = bvals.iter().max().unwrap().clone();
    let contributors = enumerate_in_window(max_rank, &bmin, &bmax);

    let mut crossings: Vec<Crossing> = Vec::new();
    for e in &contributors {
        let mu = e.slope();
        let bottom = e.delta();
        let top = rat_int(1) - &bottom;

        // h(t) = Im b(t) + mu · Im a(t) vanishes exactly on B(t) = mu.
        let h: Vec<Rat> = path
            .iter()
            .map(|p| &p.b().im + &mu * &p.a().im)
            .collect();

        // Collect zeros of h: isolated parameters and whole-segment runs.
        let mut items: Vec<ZeroItem> = Vec::new();
        let mut seg = 0usize;
        while seg < nseg {
            let (h0, h1) = (&h[seg], &h[seg + 1]);
            if h0.is_zero() && h1.is_zero() {
                let first = seg;
                while seg < nseg && h[seg].is_zero() && h[seg + 1].is_zero() {
                    seg += 1;
                }
                items.push(ZeroItem::Interval { first, last: seg - 1 });
                continue;
            }
            if h0.is_zero() {
                let after_interval = matches!(
                    items.last(),
                    Some(ZeroItem::Interval { last, .. }) if last + 1 == seg
                );
                if !after_interval {
                    items.push(ZeroItem::Point { seg, t: rat_int(0) });
                }
            } else if h1.is_zero() {
                if seg == nseg - 1 {
                    items.push(ZeroItem::Point { seg, t: rat_int(1) });
                }
                // Otherwise the next segment reports the shared waypoint.
            } else if h0.is_positive() != h1.is_positive() {
                let t = h0 / (h0 - h1);
                items.push(ZeroItem::Point { seg, t });
            }
            seg += 1;
        }

        let sign = |r: &Rat| -> i8 {
            if r.is_positive() {
                1
            } else if r.is_negative() {
                -1
            } else {
                0
            }
        };

        // Dedup key for boundary touches at shared waypoints.
        let canon = |seg: usize, t: &Rat| -> (usize, Rat) {
            if t == &rat_int(1) && seg + 1 < nseg {
                (seg + 1, rat_int(0))
            } else {
                (seg, t.clone())
            }
        };
        let mut touched: Vec<(usize, Rat)> = Vec::new();

        for item in items {
            match item {
                ZeroItem::Point { seg, t } => {
                    let point = point_at(&path[seg], &path[seg + 1], &t);
                    let (bb, g) = point.projection_f();
                    debug_assert_eq!(bb, mu);
                    let before = if t.is_zero() {
                        if seg == 0 { None } else { Some(sign(&h[seg - 1])) }
                    } else {
                        Some(sign(&h[seg]))
                    };
                    let after = if t.is_one() {
                        None
                    } else {
                        Some(sign(&h[seg + 1]))
                    };
                    if g > bottom && g < top {
                        let side = match (before, after) {
                            (Some(sb), Some(sa)) if sb != sa => {
                                if sb > 0 { WallSide::Plus } else { WallSide::Minus }
                            }
                            _ => WallSide::Boundary,
                        };
                        let (jh, witness) = match side {
                            WallSide::Plus => (Some(jh_classes(&e.class)?), None),
                            WallSide::Minus => {
                                let m = matrix_half_twist(&e.class)
                                    .expect("contributors are exceptional");
                                let transported = point.charge().transported(&m);
                                let w = normalize(&transported)?;
                                (Some(jh_classes_minus(&e.class)?), Some(w.point))
                            }
                            WallSide::Boundary => (None, None),
                        };
                        crossings.push(Crossing {
                            segment: seg,
                            t,
                            exceptional: e.clone(),
                            point,
                            b: mu.clone(),
                            g,
                            side,
                            jh,
                            witness,
                        });
                    } else if g == bottom || g == top {
                        let key = canon(seg, &t);
                        if !touched.contains(&key) {
                            touched.push(key);
                            crossings.push(Crossing {
                                segment: seg,
                                t,
                                exceptional: e.clone(),
                                point,
                                b: mu.clone(),
                                g,
                                side: WallSide::Boundary,
                                jh: None,
                                witness: None,
                            });
                        }
                    }
                }
                ZeroItem::Interval { first, last } => {
                    for s in first..=last {
                        let g0 = path[s].projection_f().1;
                        let g1 = path[s + 1].projection_f().1;
                        let (lo, hi) = if g0 <= g1 {
                            (g0.clone(), g1.clone())
                        } else {
                            (g1.clone(), g0.clone())
                        };
                        if lo == hi {
                            // Constant height while riding the wall line.
                            if lo >= bottom && lo <= top {
                                return Err(WallError::WallGraze {
                                    segment: s,
                                    exceptional: e.class,
                                });
                            }
                            continue;
                        }
                        let ov_lo = if lo > bottom { lo.clone() } else { bottom.clone() };
                        let ov_hi = if hi < top { hi.clone() } else { top.clone() };
                        if ov_lo < ov_hi {
                            return Err(WallError::WallGraze {
                                segment: s,
                                exceptional: e.class,
                            });
                        }
                        if ov_lo == ov_hi {
                            // Isolated touch of a band endpoint.
                            let t = (&g0 - &ov_lo) / (&g0 - &g1);
                            let key = canon(s, &t);
                            if !touched.contains(&key) {
                                touched.push(key);
                                let point = point_at(&path[s], &path[s + 1], &t);
                                crossings.push(Crossing {
                                    segment: s,
                                    t,
                                    exceptional: e.clone(),
                                    point,
                                    b: mu.clone(),
                                    g: ov_lo,
                                    side: WallSide::Boundary,
                                    jh: None,
                                    witness: None,
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    crossings.sort_by(|x, y| {
        (x.segment, &x.t, &x.b).cmp(&(y.segment, &y.t, &y.b))
    });
    Ok(crossings)
}

/// One applied half-twist: `H_class^{power}` with `power ∈ {1, -1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwistStep {
    pub class: KClass,
    pub power: i64,
}

/// Result of `normalize_to_geometric`.
#[derive(Debug, Clone)]
pub struct GeometricPresentation {
    /// Half-twist word, applied left to right.
    pub word: Vec<TwistStep>,
    /// Product matrix of the word.
    pub matrix: KMatrix,
    /// The transported charge, normalised onto the slice.
    pub normalized: Normalized,
}

/// Search for a word in half-twists (along exceptional classes of rank at
/// most `gen_rank` and slope in `[0, 1)`, with inverses) of length at most
/// `budget` whose transport takes the charge onto the closure of the
/// geometric region: the normalised point must satisfy `g <= delta(B)` for
/// the envelope of order `max_rank`.
///
/// Breadth-first by word length with first-visit memoisation on the product
/// matrix, so the result is the canonically first among the shortest words;
/// in particular a charge already over the closure returns the empty word.
pub fn normalize_to_geometric(
    z: &CentralCharge,
    max_rank: i64,
    gen_rank: i64,
    budget: usize,
) -> Result<GeometricPresentation, WallError> {
    if z.is_degenerate() {
        return Err(WallError::Chamber(ChamberError::DegenerateCharge));
    }

    // Signed generator list, canonically ordered by (rank, slope, power).
    let mut base = enumerate_in_window(gen_rank, &rat_int(0), &rat_int(1));
    base.retain(|e| e.slope() < rat_int(1));
    base.sort_by_key(|e| (e.rank(), e.slope()));
    let mut gens: Vec<(TwistStep, KMatrix)> = Vec::new();
    for e in &base {
        let m = matrix_half_twist(&e.class).expect("enumerated classes are exceptional");
        gens.push((TwistStep { class: e.class, power: 1 }, m));
        gens.push((
            TwistStep { class: e.class, power: -1 },
            m.inverse().expect("half-twists are unimodular"),
        ));
    }

    let mut delta_memo: HashMap<Rat, Rat> = HashMap::new();
    let mut in_closure = |zt: &CentralCharge| -> Result<Option<Normalized>, WallError> {
        let n = match normalize(zt) {
            Ok(n) => n,
            Err(ChamberError::NotUpperHalfPlane(_)) => return Ok(None),
            Err(err) => return Err(err.into()),
        };
        let (bb, g) = n.point.projection_f();
        let delta = match delta_memo.get(&bb) {
            Some(d) => d.clone(),
            None => {
                let model = EnvelopeModel::around(max_rank, &bb)
                    .map_err(ChamberError::from)?;
                let d = model.delta_at(&bb).map_err(ChamberError::from)?;
                delta_memo.insert(bb.clone(), d.clone());
                d
            }
        };
        Ok(if g <= delta { Some(n) } else { None })
    };

    let mut seen: HashMap<KMatrix, ()> = HashMap::new();
    seen.insert(KMatrix::identity(), ());
    let mut queue: VecDeque<(KMatrix, Vec<TwistStep>)> = VecDeque::new();
    queue.push_back((KMatrix::identity(), Vec::new()));

    while let Some((m, word)) = queue.pop_front() {
        let transported = z.transported(&m);
        if let Some(normalized) = in_closure(&transported)? {
            return Ok(GeometricPresentation { word, matrix: m, normalized });
        }
        if word.len() == budget {
            continue;
        }
        for (step, gm) in &gens {
            let next = m.mul(gm);
            if seen.contains_key(&next) {
                continue;
            }
            seen.insert(next, ());
            let mut next_word = word.clone();
            next_word.push(*step);
            queue.push_back((next, next_word));
        }
    }
    Err(WallError::BudgetExhausted { budget })
}
