//! The distinguished slice of stability parameters and the geometric
//! chamber test.
//!
//! A slice point is a pair of complex parameters `(a, b)` with `Im a > 0`,
//! giving the central charge `Z_{a,b}(v) = -ch2(v) + a·d(v) + b·r(v)`.  We
//! store a charge by its values on the lattice basis:
//!
//! ```text
//! zc = Z([O_x]) = -1,    zd = Z([O_l]) = a + 1/2,    zr = Z([O_Z]) = b.
//! ```
//!
//! The projection `f(a, b) = (B, g)`, with `B = -Im b / Im a` and
//! `g = -Re b - B·Re a + B²/2`, captures exactly where the charge can
//! degenerate on rank-positive classes: a rank-`r`, slope-`mu` class has
//! `Im Z = r · Im a · (mu - B)`, and on the vertical locus `mu = B` the
//! shifted value is real with `Re Z(v[1]) = r (g - Delta(v))`.  So `Z` kills
//! a class of slope `B` and discriminant `g` and nothing else; the slice
//! point is geometric exactly when `(B, g)` stays strictly below the
//! envelope curve and off the closed wall bands over exceptional slopes.
//!
//! Verdicts computed from exact rational input are never `Indeterminate`;
//! that verdict is reserved for the floating-point fast path when a value
//! lands within tolerance of a boundary tie.

use num_traits::Zero;

use crate::dlp::{CurvePosition, DlpError, EnvelopeModel};
use crate::exceptional::ExceptionalClass;
use crate::ktheory::{KClass, KMatrix};
use crate::rat::{rat, rat_f64, Rat, RatComplex};

/// Errors from slice and charge computations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChamberError {
    /// Slice points require `Im a > 0`.
    #[error("slice point requires Im a > 0, got a = {0}")]
    NotUpperHalfPlane(String),
    /// The charge vanishes on the point class, so it cannot be normalised
    /// onto the slice.
    #[error("degenerate central charge: it vanishes on the point class")]
    DegenerateCharge,
    /// A zero charge value has no phase or mass.
    #[error("zero central charge value has no phase")]
    ZeroCharge,
    #[error(transparent)]
    Envelope(#[from] DlpError),
}

/// A point `(a, b)` of the slice, with `Im a > 0` enforced at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlicePoint {
    a: RatComplex,
    b: RatComplex,
}

impl SlicePoint {
    pub fn new(a: RatComplex, b: RatComplex) -> Result<Self, ChamberError> {
        if a.im <= Rat::zero() {
            return Err(ChamberError::NotUpperHalfPlane(a.to_string()));
        }
        Ok(SlicePoint { a, b })
    }

    pub fn a(&self) -> &RatComplex {
        &self.a
    }

    pub fn b(&self) -> &RatComplex {
        &self.b
    }

    /// The central charge of this slice point, by basis values.
    pub fn charge(&self) -> CentralCharge {
        CentralCharge {
            zc: -&RatComplex::one(),
            zd: &self.a + &RatComplex::from_rat(rat(1, 2)),
            zr: self.b.clone(),
        }
    }

    /// The projection `f(a, b) = (B, g)`.
    pub fn projection_f(&self) -> (Rat, Rat) {
        let bb = -(&self.b.im / &self.a.im);
        let g = -&self.b.re - &bb * &self.a.re + (&bb * &bb) / rat(2, 1);
        (bb, g)
    }
}

/// A central charge, stored by its values on the basis
/// `([O_x], [O_l], [O_Z])`.  Not every charge lies on the slice; `normalize`
/// recovers the slice point and the rescaling when one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CentralCharge {
    pub zc: RatComplex,
    pub zd: RatComplex,
    pub zr: RatComplex,
}

impl CentralCharge {
    pub fn new(zc: RatComplex, zd: RatComplex, zr: RatComplex) -> Self {
        CentralCharge { zc, zd, zr }
    }

    /// Evaluate on a lattice class.
    pub fn evaluate(&self, v: &KClass) -> RatComplex {
        self.zc.scale(&Rat::from_integer(v.c.into()))
            + self.zd.scale(&Rat::from_integer(v.d.into()))
            + self.zr.scale(&Rat::from_integer(v.r.into()))
    }

    /// Whether the charge vanishes on the point class.
    pub fn is_degenerate(&self) -> bool {
        self.zc.is_zero()
    }

    /// Pull back along a lattice automorphism: `(Z ∘ M)(v) = Z(M v)`.
    pub fn transported(&self, m: &KMatrix) -> CentralCharge {
        let col = |j: usize| -> RatComplex {
            self.zc.scale(&Rat::from_integer(m.0[0][j].into()))
                + self.zd.scale(&Rat::from_integer(m.0[1][j].into()))
                + self.zr.scale(&Rat::from_integer(m.0[2][j].into()))
        };
        CentralCharge { zc: col(0), zd: col(1), zr: col(2) }
    }
}

/// Result of `normalize`: the slice point together with the complex
/// parameter `lambda` of the rescaling, so that the input charge equals
/// `e^{-i·pi·lambda} · Z_{a,b}`.  The slice point is exact; `lambda` is
/// reported in floating point with `Re lambda ∈ (-1, 1]` (a charge equal to
/// minus a slice charge normalises with `lambda = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub point: SlicePoint,
    pub lambda: (f64, f64),
}

/// Normalise a charge onto the slice.
///
/// The ratios `-zd/zc - 1/2` and `-zr/zc` are invariant under rescaling and
/// recover `(a, b)` exactly; the scalar `s = -zc` then satisfies
/// `Z = s · Z_{a,b}`, and `lambda` solves `e^{-i·pi·lambda} = s`.
pub fn normalize(z: &CentralCharge) -> Result<Normalized, ChamberError> {
    if z.is_degenerate() {
        return Err(ChamberError::DegenerateCharge);
    }
    let inv_zc = z.zc.inv().expect("nonzero by the degeneracy check");
    let a = -&(&z.zd * &inv_zc) - RatComplex::from_rat(rat(1, 2));
    let b = -&(&z.zr * &inv_zc);
    let point = SlicePoint::new(a, b)?;
    let s = -&z.zc;
    let (s_re, s_im) = s.to_f64_pair();
    let mut theta = s_im.atan2(s_re);
    if theta >= std::f64::consts::PI {
        theta = -std::f64::consts::PI;
    }
    let lambda_re = -theta / std::f64::consts::PI;
    let lambda_im = s.abs_f64().ln() / std::f64::consts::PI;
    Ok(Normalized {
        point,
        lambda: (lambda_re + 0.0, lambda_im + 0.0),
    })
}

/// Phase in `(0, 1]` (argument over pi, folded modulo 1) and mass `|z|` of a
/// nonzero charge value.  Negative reals sit at phase 1.
pub fn phase_and_mass(z: &RatComplex) -> Result<(f64, f64), ChamberError> {
    if z.is_zero() {
        return Err(ChamberError::ZeroCharge);
    }
    let mut phase = z.arg_f64() / std::f64::consts::PI;
    if phase <= 0.0 {
        phase += 1.0;
    }
    Ok((phase, z.abs_f64()))
}

/// Verdict of the geometric chamber test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChamberVerdict {
    /// Strictly below the envelope and off every closed wall band.
    Inside,
    /// On the open wall band over the slope of the recorded exceptional
    /// class: `B = mu_E` and `Delta_E < g < delta(mu_E)`.
    OnWallBand(ExceptionalClass),
    /// On or above the envelope, or pinned on a band endpoint.
    Outside,
    /// Floating-point path only: within tolerance of a boundary tie.
    Indeterminate,
}

/// Exact geometric chamber test, with the envelope truncated at contributor
/// rank `max_rank`.
///
/// Band endpoints are excluded from `OnWallBand`: the bottom vertex
/// `g = Delta_E` is the numerical class of `E` itself and the top `g =
/// delta(mu_E)` lies on the envelope, and both report `Outside`.
pub fn in_geometric_chamber(
    p: &SlicePoint,
    max_rank: i64,
) -> Result<ChamberVerdict, ChamberError> {
    let (bb, g) = p.projection_f();
    let model = EnvelopeModel::around(max_rank, &bb)?;
    Ok(match model.strictly_below(&bb, &g)? {
        CurvePosition::Below => ChamberVerdict::Inside,
        CurvePosition::OnOrAboveCurve => ChamberVerdict::Outside,
        CurvePosition::AtExceptionalViolation(e) => {
            if g > e.delta() {
                ChamberVerdict::OnWallBand(e)
            } else {
                // The band bottom is the vertex of E: boundary, not band.
                ChamberVerdict::Outside
            }
        }
    })
}

/// Absolute tolerance for value comparisons on the floating-point path.
pub const F64_VALUE_TOL: f64 = 1e-9;
/// Tolerance for deciding that `B` ties an exceptional slope.
pub const F64_SLOPE_TOL: f64 = 1e-12;

/// Floating-point chamber test.  Same geometry as `in_geometric_chamber`,
/// but comparisons within `F64_VALUE_TOL` of a tie (and band membership when
/// `B` sits within `F64_SLOPE_TOL` of an exceptional slope without clearing
/// the vertex by the tolerance) return `Indeterminate` instead of guessing.
pub fn in_geometric_chamber_f64(
    a: (f64, f64),
    b: (f64, f64),
    max_rank: i64,
) -> Result<ChamberVerdict, ChamberError> {
    if !(a.1 > 0.0) {
        return Err(ChamberError::NotUpperHalfPlane(format!("{}+{}i", a.0, a.1)));
    }
    let bb = -b.1 / a.1;
    let g = -b.0 - bb * a.0 + bb * bb / 2.0;

    let center = Rat::from_float(bb).ok_or(ChamberError::DegenerateCharge)?;
    let model = EnvelopeModel::around(max_rank, &center)?;

    let mut delta = f64::NEG_INFINITY;
    let mut nearest: Option<(&ExceptionalClass, f64)> = None;
    for e in model.contributors() {
        let mu = rat_f64(&e.slope());
        let gap = (bb - mu).abs();
        if gap <= 1.5 {
            let value = (gap - 1.0) * (gap - 2.0) / 2.0 - rat_f64(&e.delta());
            delta = delta.max(value);
        }
        if nearest.map_or(true, |(_, best)| gap < best) {
            nearest = Some((e, gap));
        }
    }

    if g >= delta - F64_VALUE_TOL {
        return Ok(if g > delta + F64_VALUE_TOL {
            ChamberVerdict::Outside
        } else {
            ChamberVerdict::Indeterminate
        });
    }
    if let Some((e, gap)) = nearest {
        if gap <= F64_SLOPE_TOL {
            let vertex = rat_f64(&e.delta());
            if g > vertex + F64_VALUE_TOL {
                return Ok(ChamberVerdict::OnWallBand(e.clone()));
            }
            if g >= vertex - F64_VALUE_TOL {
                return Ok(ChamberVerdict::Indeterminate);
            }
        } else if gap <= F64_VALUE_TOL {
            // Close enough to a band that float cannot tell on from off.
            let vertex = rat_f64(&e.delta());
            if g >= vertex - F64_VALUE_TOL {
                return Ok(ChamberVerdict::Indeterminate);
            }
        }
    }
    Ok(ChamberVerdict::Inside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;

    fn sp(a: RatComplex, b: RatComplex) -> SlicePoint {
        SlicePoint::new(a, b).unwrap()
    }

    fn im_unit() -> RatComplex {
        RatComplex::from_ints(0, 1)
    }

    #[test]
    fn slice_point_requires_upper_half_plane() {
        assert!(SlicePoint::new(RatComplex::from_ints(1, 0), RatComplex::zero()).is_err());
        assert!(SlicePoint::new(RatComplex::from_ints(0, -1), RatComplex::zero()).is_err());
        assert!(SlicePoint::new(im_unit(), RatComplex::zero()).is_ok());
    }

    #[test]
    fn charge_basis_values_and_evaluation() {
        let p = sp(im_unit(), RatComplex::from_rat(rat(1, 4)));
        let z = p.charge();
        assert_eq!(z.evaluate(&KClass::point()), RatComplex::from_ints(-1, 0));
        assert_eq!(z.evaluate(&KClass::line()), RatComplex::new(rat(1, 2), rat_int(1)));
        assert_eq!(
            z.evaluate(&KClass::line_bundle(0)),
            RatComplex::from_rat(rat(1, 4))
        );
        // O(1) = (1, 1, 1): -1 + (1/2 + i) + 1/4.
        assert_eq!(
            z.evaluate(&KClass::line_bundle(1)),
            RatComplex::new(rat(-1, 4), rat_int(1))
        );
    }

    #[test]
    fn projection_matches_worked_points() {
        let p1 = sp(im_unit(), RatComplex::from_rat(rat(1, 4)));
        assert_eq!(p1.projection_f(), (rat_int(0), rat(-1, 4)));

        let p2 = sp(im_unit(), RatComplex::from_rat(rat(-1, 4)));
        assert_eq!(p2.projection_f(), (rat_int(0), rat(1, 4)));

        let p3 = sp(im_unit(), RatComplex::new(rat_int(0), rat(-1, 4)));
        assert_eq!(p3.projection_f(), (rat(1, 4), rat(1, 32)));
    }

    #[test]
    fn imaginary_part_vanishes_exactly_on_slope_b() {
        // Im Z(v) = Im a · r · (mu - B) for positive-rank classes.
        let p = sp(
            RatComplex::new(rat(1, 3), rat(2, 1)),
            RatComplex::new(rat(-1, 7), rat(-1, 1)),
        );
        let (bb, _) = p.projection_f();
        let z = p.charge();
        for v in [
            KClass::line_bundle(0),
            KClass::line_bundle(-2),
            KClass::new(0, 1, 2),
            KClass::new(-3, 2, 5),
        ] {
            let expected = &p.a().im * &(rat_int(v.d) - &bb * &rat_int(v.r));
            assert_eq!(z.evaluate(&v).im, expected);
        }
    }

    #[test]
    fn shifted_real_part_reads_g_minus_delta_on_the_wall() {
        // At B = 1/2 the class (0,1,2) has Re Z(v[1]) = r (g - Delta).
        let a = RatComplex::new(rat(1, 4), rat_int(1));
        let b = RatComplex::new(rat(-1, 50), rat(-1, 2));
        let p = sp(a, b);
        let (bb, g) = p.projection_f();
        assert_eq!(bb, rat(1, 2));
        let v = KClass::new(0, 1, 2);
        let zv = p.charge().evaluate(&v);
        assert!(zv.im.is_zero());
        let delta = v.discriminant().unwrap();
        assert_eq!(-&zv.re, rat_int(2) * (&g - &delta));
    }

    #[test]
    fn chamber_verdicts_on_worked_points() {
        let inside = sp(im_unit(), RatComplex::from_rat(rat(1, 4)));
        assert_eq!(in_geometric_chamber(&inside, 34).unwrap(), ChamberVerdict::Inside);

        let banded = sp(im_unit(), RatComplex::from_rat(rat(-1, 4)));
        match in_geometric_chamber(&banded, 34).unwrap() {
            ChamberVerdict::OnWallBand(e) => {
                assert_eq!(e.class, KClass::line_bundle(0));
            }
            other => panic!("expected wall band, got {other:?}"),
        }

        let tilted = sp(im_unit(), RatComplex::new(rat_int(0), rat(-1, 4)));
        assert_eq!(in_geometric_chamber(&tilted, 34).unwrap(), ChamberVerdict::Inside);
    }

    #[test]
    fn band_endpoints_are_outside() {
        // g = 0 = Delta_O: the vertex of O.
        let vertex = sp(im_unit(), RatComplex::zero());
        assert_eq!(in_geometric_chamber(&vertex, 34).unwrap(), ChamberVerdict::Outside);
        // g = 1 = delta(0): on the envelope.
        let top = sp(im_unit(), RatComplex::from_ints(-1, 0));
        assert_eq!(in_geometric_chamber(&top, 34).unwrap(), ChamberVerdict::Outside);
        // Just under the top: still the band.
        let under = sp(im_unit(), RatComplex::from_rat(rat(-99, 100)));
        assert!(matches!(
            in_geometric_chamber(&under, 34).unwrap(),
            ChamberVerdict::OnWallBand(_)
        ));
        // Above the curve.
        let above = sp(im_unit(), RatComplex::from_ints(-2, 0));
        assert_eq!(in_geometric_chamber(&above, 34).unwrap(), ChamberVerdict::Outside);
    }

    #[test]
    fn normalize_recovers_slice_point_and_scale() {
        let p = sp(im_unit(), RatComplex::from_rat(rat(1, 4)));
        let z = p.charge();

        let n = normalize(&z).unwrap();
        assert_eq!(n.point, p);
        assert_eq!(n.lambda, (0.0, 0.0));

        // Rescaled by i: lambda = -1/2.
        let zi = CentralCharge::new(
            &z.zc * &RatComplex::from_ints(0, 1),
            &z.zd * &RatComplex::from_ints(0, 1),
            &z.zr * &RatComplex::from_ints(0, 1),
        );
        let ni = normalize(&zi).unwrap();
        assert_eq!(ni.point, p);
        assert!((ni.lambda.0 + 0.5).abs() < 1e-15);
        assert!(ni.lambda.1.abs() < 1e-15);

        // Negated: lambda = 1 by the Re lambda ∈ (-1, 1] convention.
        let zneg = CentralCharge::new(-&z.zc, -&z.zd, -&z.zr);
        let nn = normalize(&zneg).unwrap();
        assert_eq!(nn.point, p);
        assert_eq!(nn.lambda, (1.0, 0.0));

        // Scaled by 2: lambda purely imaginary, Im = ln 2 / pi.
        let z2 = CentralCharge::new(
            z.zc.scale(&rat_int(2)),
            z.zd.scale(&rat_int(2)),
            z.zr.scale(&rat_int(2)),
        );
        let n2 = normalize(&z2).unwrap();
        assert_eq!(n2.point, p);
        assert!(n2.lambda.0.abs() < 1e-15);
        assert!((n2.lambda.1 - 2f64.ln() / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_degenerate_and_off_slice_charges() {
        let degenerate = CentralCharge::new(
            RatComplex::zero(),
            RatComplex::from_ints(1, 0),
            RatComplex::from_ints(0, 1),
        );
        assert_eq!(normalize(&degenerate), Err(ChamberError::DegenerateCharge));

        // a = -i: not in the upper half plane.
        let off = CentralCharge::new(
            -&RatComplex::one(),
            RatComplex::new(rat(1, 2), rat_int(-1)),
            RatComplex::zero(),
        );
        assert!(matches!(
            normalize(&off),
            Err(ChamberError::NotUpperHalfPlane(_))
        ));
    }

    #[test]
    fn phase_folds_into_unit_interval() {
        let (ph, m) = phase_and_mass(&RatComplex::from_ints(0, 1)).unwrap();
        assert_eq!((ph, m), (0.5, 1.0));

        let (ph, m) = phase_and_mass(&RatComplex::from_ints(-1, 0)).unwrap();
        assert_eq!((ph, m), (1.0, 1.0));

        let (ph, _) = phase_and_mass(&RatComplex::from_ints(1, 0)).unwrap();
        assert_eq!(ph, 1.0);

        let (ph, m) = phase_and_mass(&RatComplex::from_ints(-1, -1)).unwrap();
        assert!((ph - 0.25).abs() < 1e-15);
        assert!((m - 2f64.sqrt()).abs() < 1e-15);

        assert_eq!(
            phase_and_mass(&RatComplex::zero()),
            Err(ChamberError::ZeroCharge)
        );
    }

    #[test]
    fn transport_composes_with_matrix_action() {
        let p = sp(im_unit(), RatComplex::from_rat(rat(1, 4)));
        let z = p.charge();
        let m = KMatrix([[1, 0, 0], [0, 1, 0], [0, -3, 1]]);
        let zt = z.transported(&m);
        for v in [KClass::line_bundle(1), KClass::new(2, -1, 3)] {
            assert_eq!(zt.evaluate(&v), z.evaluate(&m.apply(&v)));
        }
    }

    #[test]
    fn float_path_matches_exact_on_clear_points() {
        assert_eq!(
            in_geometric_chamber_f64((0.0, 1.0), (0.25, 0.0), 34).unwrap(),
            ChamberVerdict::Inside
        );
        assert!(matches!(
            in_geometric_chamber_f64((0.0, 1.0), (-0.25, 0.0), 34).unwrap(),
            ChamberVerdict::OnWallBand(_)
        ));
        assert_eq!(
            in_geometric_chamber_f64((0.0, 1.0), (-2.0, 0.0), 34).unwrap(),
            ChamberVerdict::Outside
        );
        // Exactly on the envelope: a tie the float path must not call.
        assert_eq!(
            in_geometric_chamber_f64((0.0, 1.0), (-1.0, 0.0), 34).unwrap(),
            ChamberVerdict::Indeterminate
        );
        assert!(in_geometric_chamber_f64((0.0, -1.0), (0.0, 0.0), 34).is_err());
    }
}
