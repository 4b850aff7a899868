//! Line bundles on the degenerate surface, by gluing data.
//!
//! The surface is a cycle of three plane components meeting along double
//! lines.  A line bundle is specified by its degree on each component
//! together with a nonzero gluing scalar over each double line, in cyclic
//! order: `phi_21` (component 1 to 2), `phi_32`, `phi_13`.  Rescaling the
//! trivialisation on component `i` by `c_i` changes the scalars to
//! `c_2 phi_21 c_1^{-1}`, `c_3 phi_32 c_2^{-1}`, `c_1 phi_13 c_3^{-1}`,
//! which moves any two of them anywhere but preserves the cyclic product
//! `phi_21 · phi_32 · phi_13`.  The degree triple together with that
//! *holonomy* is therefore a complete isomorphism invariant, realised here
//! as the normal form with gluing scalars `(holonomy, 1, 1)`.
//!
//! Restricting to the cycle of double lines negates the component degrees
//! (the double lines carry the conormal convention) and remembers the
//! holonomy as the monodromy of the restricted bundle.  A plane bundle of
//! degree `m` glues across the degeneration exactly against the data with
//! degrees `(-m, -m, -m)` and trivial holonomy.
//!
//! Scalars are exact Gaussian rationals.

use crate::rat::RatComplex;

/// Errors from gluing-data bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PicError {
    /// Gluing scalars must be invertible.
    #[error("gluing scalar over double line {0} must be nonzero")]
    ZeroGluing(usize),
}

/// A line bundle on the degenerate surface: degrees on the three
/// components and gluing scalars over the three double lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluingData {
    degrees: [i64; 3],
    gluings: [RatComplex; 3],
}

/// The isomorphism invariant: degrees and holonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm {
    pub degrees: [i64; 3],
    pub holonomy: RatComplex,
}

/// Restriction to the cycle of double lines: line degrees and the
/// monodromy scalar around the cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleBundle {
    pub degrees: [i64; 3],
    pub monodromy: RatComplex,
}

impl GluingData {
    pub fn new(degrees: [i64; 3], gluings: [RatComplex; 3]) -> Result<Self, PicError> {
        for (i, s) in gluings.iter().enumerate() {
            if s.is_zero() {
                return Err(PicError::ZeroGluing(i));
            }
        }
        Ok(GluingData { degrees, gluings })
    }

    /// The bundle `O(m, m, m)` with trivial gluings.
    pub fn uniform(m: i64) -> Self {
        GluingData {
            degrees: [m, m, m],
            gluings: [RatComplex::one(), RatComplex::one(), RatComplex::one()],
        }
    }

    pub fn degrees(&self) -> [i64; 3] {
        self.degrees
    }

    pub fn gluings(&self) -> &[RatComplex; 3] {
        &self.gluings
    }

    /// The holonomy `phi_21 · phi_32 · phi_13`.
    pub fn holonomy(&self) -> RatComplex {
        &(&self.gluings[0] * &self.gluings[1]) * &self.gluings[2]
    }

    /// The complete isomorphism invariant.
    pub fn normal_form(&self) -> NormalForm {
        NormalForm { degrees: self.degrees, holonomy: self.holonomy() }
    }

    /// Whether two data describe isomorphic bundles.
    pub fn is_isomorphic(&self, other: &GluingData) -> bool {
        self.normal_form() == other.normal_form()
    }

    /// Rescale the trivialisation on each component: the action that normal
    /// forms quotient out.
    pub fn retrivialize(&self, c: &[RatComplex; 3]) -> Result<GluingData, PicError> {
        for (i, s) in c.iter().enumerate() {
            if s.is_zero() {
                return Err(PicError::ZeroGluing(i));
            }
        }
        let inv = [
            c[0].inv().unwrap(),
            c[1].inv().unwrap(),
            c[2].inv().unwrap(),
        ];
        Ok(GluingData {
            degrees: self.degrees,
            gluings: [
                &(&c[1] * &self.gluings[0]) * &inv[0],
                &(&c[2] * &self.gluings[1]) * &inv[1],
                &(&c[0] * &self.gluings[2]) * &inv[2],
            ],
        })
    }

    /// Tensor product: degrees add, gluings multiply.
    pub fn tensor(&self, other: &GluingData) -> GluingData {
        GluingData {
            degrees: [
                self.degrees[0] + other.degrees[0],
                self.degrees[1] + other.degrees[1],
                self.degrees[2] + other.degrees[2],
            ],
            gluings: [
                &self.gluings[0] * &other.gluings[0],
                &self.gluings[1] * &other.gluings[1],
                &self.gluings[2] * &other.gluings[2],
            ],
        }
    }

    /// Dual bundle: degrees negate, gluings invert.
    pub fn dual(&self) -> GluingData {
        GluingData {
            degrees: [-self.degrees[0], -self.degrees[1], -self.degrees[2]],
            gluings: [
                self.gluings[0].inv().expect("gluings are nonzero"),
                self.gluings[1].inv().expect("gluings are nonzero"),
                self.gluings[2].inv().expect("gluings are nonzero"),
            ],
        }
    }

    /// Restrict to the cycle of double lines.
    pub fn restrict_to_cycle(&self) -> CycleBundle {
        CycleBundle {
            degrees: [-self.degrees[0], -self.degrees[1], -self.degrees[2]],
            monodromy: self.holonomy(),
        }
    }
}

/// Whether the plane bundle of degree `m` glues across the degeneration
/// against the given data: the degrees must all equal `-m` and the holonomy
/// must be trivial.  Returns the glued degree on success.
pub fn glue_on_x(m: i64, data: &GluingData) -> Option<i64> {
    if data.degrees == [-m, -m, -m] && data.holonomy() == RatComplex::one() {
        Some(m)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn ri(re: i64, im: i64) -> RatComplex {
        RatComplex::from_ints(re, im)
    }

    #[test]
    fn holonomy_is_the_retrivialization_invariant() {
        let g = GluingData::new([2, -1, 0], [ri(2, 0), ri(0, 1), ri(1, 1)]).unwrap();
        let c = [ri(3, 0), ri(0, -2), ri(1, 1)];
        let moved = g.retrivialize(&c).unwrap();
        assert_ne!(moved.gluings(), g.gluings());
        assert_eq!(moved.normal_form(), g.normal_form());
        assert!(moved.is_isomorphic(&g));
        // Holonomy: 2 · i · (1 + i) = -2 + 2i.
        assert_eq!(g.holonomy(), ri(-2, 2));
    }

    #[test]
    fn distinct_holonomies_are_distinct_bundles() {
        let g1 = GluingData::new([0, 0, 0], [ri(1, 0), ri(1, 0), ri(1, 0)]).unwrap();
        let g2 = GluingData::new([0, 0, 0], [ri(2, 0), ri(1, 0), ri(1, 0)]).unwrap();
        assert!(!g1.is_isomorphic(&g2));
        // Same holonomy through different scalars: isomorphic.
        let g3 = GluingData::new([0, 0, 0], [ri(1, 0), ri(2, 0), ri(1, 0)]).unwrap();
        assert!(g2.is_isomorphic(&g3));
    }

    #[test]
    fn tensor_and_dual() {
        let g = GluingData::new([1, 2, 3], [ri(2, 0), ri(0, 1), ri(1, 0)]).unwrap();
        let h = GluingData::new([-1, 0, 4], [ri(1, 0), ri(0, -1), ri(3, 0)]).unwrap();
        let t = g.tensor(&h);
        assert_eq!(t.degrees(), [0, 2, 7]);
        assert_eq!(t.holonomy(), &g.holonomy() * &h.holonomy());

        let d = g.dual();
        assert_eq!(d.degrees(), [-1, -2, -3]);
        assert_eq!(g.tensor(&d).normal_form(), GluingData::uniform(0).normal_form());

        // Dual gluing of i is -i.
        assert_eq!(d.gluings()[1], ri(0, -1));
    }

    #[test]
    fn restriction_to_the_cycle() {
        let g = GluingData::new([2, -1, 0], [ri(1, 0), ri(1, 0), ri(5, 0)]).unwrap();
        let r = g.restrict_to_cycle();
        assert_eq!(r.degrees, [-2, 1, 0]);
        assert_eq!(r.monodromy, ri(5, 0));
    }

    #[test]
    fn gluing_across_the_degeneration() {
        for m in -5..=5 {
            let data = GluingData::uniform(-m);
            assert_eq!(glue_on_x(m, &data), Some(m));
        }
        // Wrong degree pattern.
        let skew = GluingData::new([-1, -1, -2], [ri(1, 0), ri(1, 0), ri(1, 0)]).unwrap();
        assert_eq!(glue_on_x(1, &skew), None);
        // Nontrivial holonomy obstructs gluing.
        let twisted = GluingData::new([-1, -1, -1], [ri(1, 0), ri(1, 0), ri(2, 0)]).unwrap();
        assert_eq!(glue_on_x(1, &twisted), None);
        // Non-unit holonomy that is a root of unity still obstructs.
        let quarter = GluingData::new([0, 0, 0], [ri(0, 1), ri(1, 0), ri(1, 0)]).unwrap();
        assert_eq!(glue_on_x(0, &quarter), None);
    }

    #[test]
    fn zero_gluing_is_rejected() {
        assert_eq!(
            GluingData::new([0, 0, 0], [RatComplex::zero(), ri(1, 0), ri(1, 0)]),
            Err(PicError::ZeroGluing(0))
        );
        let g = GluingData::uniform(1);
        let fractional = g
            .retrivialize(&[
                RatComplex::from_rat(rat(1, 3)),
                ri(3, 0),
                ri(1, 0),
            ])
            .unwrap();
        assert_eq!(fractional.normal_form(), g.normal_form());
    }
}
