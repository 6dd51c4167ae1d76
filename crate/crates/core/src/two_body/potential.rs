use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `exp(-x^2)` is below 4e-18 past this many ranges; Gaussian terms are treated as zero there.
pub const GAUSSIAN_CUTOFF_RANGES: f64 = 6.324_555_320_336_759; // sqrt(40)

/// Constant `height` on `r_lo < r <= r_hi` (the origin belongs to shells with `r_lo == 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub r_lo: f64,
    pub r_hi: f64,
    pub height: f64,
}

impl Shell {
    pub fn contains(&self, r: f64) -> bool {
        (r > self.r_lo || (self.r_lo == 0.0 && r == 0.0)) && r <= self.r_hi
    }
}

/// `depth * exp(-r^2 / range^2)`; a negative depth is attractive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub depth: f64,
    pub range: f64,
}

impl GaussianTerm {
    pub fn value(&self, r: f64) -> f64 {
        let x = r / self.range;
        self.depth * (-x * x).exp()
    }

    pub fn cutoff(&self) -> f64 {
        GAUSSIAN_CUTOFF_RANGES * self.range
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawPotential {
    #[serde(default)]
    shells: Vec<Shell>,
    #[serde(default)]
    gaussians: Vec<GaussianTerm>,
    r_v: f64,
}

/// Central pair potential built from constant shells and Gaussian terms.
/// Overlapping shells add.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPotential", into = "RawPotential")]
pub struct RadialPotential {
    shells: Vec<Shell>,
    gaussians: Vec<GaussianTerm>,
    r_v: f64,
}

impl TryFrom<RawPotential> for RadialPotential {
    type Error = Error;

    fn try_from(raw: RawPotential) -> Result<Self> {
        RadialPotential::new(raw.shells, raw.gaussians, raw.r_v)
    }
}

impl From<RadialPotential> for RawPotential {
    fn from(p: RadialPotential) -> Self {
        RawPotential {
            shells: p.shells,
            gaussians: p.gaussians,
            r_v: p.r_v,
        }
    }
}

impl RadialPotential {
    pub fn new(shells: Vec<Shell>, gaussians: Vec<GaussianTerm>, r_v: f64) -> Result<Self> {
        if !(r_v > 0.0) || !r_v.is_finite() {
            return Err(Error::invalid(format!(
                "declared range r_V must be positive, got {r_v}"
            )));
        }
        for s in &shells {
            if !(s.r_lo >= 0.0 && s.r_lo < s.r_hi) || !s.r_hi.is_finite() || !s.height.is_finite() {
                return Err(Error::invalid(format!(
                    "shell needs 0 <= r_lo < r_hi and finite values, got {s:?}"
                )));
            }
        }
        for g in &gaussians {
            if !(g.range > 0.0) || !g.range.is_finite() || !g.depth.is_finite() {
                return Err(Error::invalid(format!(
                    "Gaussian term needs a positive range, got {g:?}"
                )));
            }
        }
        Ok(Self {
            shells,
            gaussians,
            r_v,
        })
    }

    /// Square well of the given (negative for attraction) height on `[0, range]`.
    pub fn square_well(height: f64, range: f64) -> Result<Self> {
        Self::new(
            vec![Shell {
                r_lo: 0.0,
                r_hi: range,
                height,
            }],
            Vec::new(),
            range,
        )
    }

    pub fn gaussian_well(depth: f64, range: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![GaussianTerm { depth, range }], range)
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    pub fn gaussians(&self) -> &[GaussianTerm] {
        &self.gaussians
    }

    pub fn r_v(&self) -> f64 {
        self.r_v
    }

    pub fn is_empty(&self) -> bool {
        self.shells.is_empty() && self.gaussians.is_empty()
    }

    pub fn value(&self, r: f64) -> f64 {
        let s: f64 = self
            .shells
            .iter()
            .filter(|s| s.contains(r))
            .map(|s| s.height)
            .sum();
        let g: f64 = self.gaussians.iter().map(|g| g.value(r)).sum();
        s + g
    }

    /// Radius beyond which the potential is zero (Gaussians: numerically zero).
    pub fn support_radius(&self) -> f64 {
        let s = self.shells.iter().map(|s| s.r_hi).fold(0.0, f64::max);
        let g = self
            .gaussians
            .iter()
            .map(GaussianTerm::cutoff)
            .fold(0.0, f64::max);
        s.max(g)
    }

    /// Sorted distinct radii where the potential may be discontinuous, plus the support edge.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        for s in &self.shells {
            pts.push(s.r_lo);
            pts.push(s.r_hi);
        }
        pts.push(self.support_radius());
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
        pts
    }

    /// Every term multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            shells: self
                .shells
                .iter()
                .map(|s| Shell {
                    height: s.height * alpha,
                    ..*s
                })
                .collect(),
            gaussians: self
                .gaussians
                .iter()
                .map(|g| GaussianTerm {
                    depth: g.depth * alpha,
                    ..*g
                })
                .collect(),
            r_v: self.r_v,
        }
    }

    /// Lengths multiplied by `s`, strengths by `1 / s^2`.
    pub fn length_scaled(&self, s: f64) -> Self {
        let k = 1.0 / (s * s);
        Self {
            shells: self
                .shells
                .iter()
                .map(|sh| Shell {
                    r_lo: sh.r_lo * s,
                    r_hi: sh.r_hi * s,
                    height: sh.height * k,
                })
                .collect(),
            gaussians: self
                .gaussians
                .iter()
                .map(|g| GaussianTerm {
                    depth: g.depth * k,
                    range: g.range * s,
                })
                .collect(),
            r_v: self.r_v * s,
        }
    }

    /// Sum of two potentials; keeps the declared range of `self`.
    pub fn plus(&self, other: &RadialPotential) -> Self {
        let mut out = self.clone();
        out.shells.extend_from_slice(&other.shells);
        out.gaussians.extend_from_slice(&other.gaussians);
        out
    }

    /// True when no term is repulsive.
    pub fn is_attractive(&self) -> bool {
        self.shells.iter().all(|s| s.height <= 0.0) && self.gaussians.iter().all(|g| g.depth <= 0.0)
    }
}

/// Couplings of the inner indicator `chi_R = 1[0, R]` and the shell indicator `eta_R = 1(R, 2R]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationShape {
    pub lambda: f64,
    pub b: f64,
    pub r: f64,
}

impl PerturbationShape {
    pub fn new(lambda: f64, b: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::invalid(format!(
                "perturbation radius R must be positive, got {r}"
            )));
        }
        Ok(Self { lambda, b, r })
    }

    pub fn chi(r: f64) -> Shell {
        Shell {
            r_lo: 0.0,
            r_hi: r,
            height: 1.0,
        }
    }

    pub fn eta(r: f64) -> Shell {
        Shell {
            r_lo: r,
            r_hi: 2.0 * r,
            height: 1.0,
        }
    }
}

/// `V0 + lambda * chi_R - B * eta_R`.
pub fn make_v_lambda(v0: &RadialPotential, pert: &PerturbationShape) -> Result<RadialPotential> {
    if !(pert.r > 0.0) {
        return Err(Error::invalid(format!(
            "perturbation radius R must be positive, got {}",
            pert.r
        )));
    }
    let mut out = v0.clone();
    if pert.lambda != 0.0 {
        out.shells.push(Shell {
            height: pert.lambda,
            ..PerturbationShape::chi(pert.r)
        });
    }
    if pert.b != 0.0 {
        out.shells.push(Shell {
            height: -pert.b,
            ..PerturbationShape::eta(pert.r)
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unperturbed_is_identity() {
        let v0 = RadialPotential::square_well(-2.0, 1.0).unwrap();
        let v = make_v_lambda(&v0, &PerturbationShape::new(0.0, 0.0, 3.0).unwrap()).unwrap();
        for i in 0..100 {
            let r = i as f64 * 0.07;
            assert_eq!(v.value(r), v0.value(r));
        }
    }

    #[test]
    fn pointwise_assembly() {
        let v0 = RadialPotential::square_well(-2.0, 1.0).unwrap();
        let b = 0.37;
        let v = make_v_lambda(
            &v0,
            &PerturbationShape {
                lambda: 0.1,
                b,
                r: 3.0,
            },
        )
        .unwrap();
        assert!((v.value(0.5) - (-1.9)).abs() < 1e-15);
        assert!((v.value(2.0) - 0.1).abs() < 1e-15);
        assert!((v.value(3.5) + b).abs() < 1e-15);
        assert_eq!(v.value(6.0 + 1e-9), 0.0);
        assert_eq!(v.value(1e3), 0.0);
    }

    #[test]
    fn negative_radius_rejected() {
        let v0 = RadialPotential::square_well(-2.0, 1.0).unwrap();
        assert!(PerturbationShape::new(0.1, 0.0, -1.0).is_err());
        assert!(make_v_lambda(
            &v0,
            &PerturbationShape {
                lambda: 0.1,
                b: 0.0,
                r: -1.0
            }
        )
        .is_err());
    }

    #[test]
    fn invalid_terms_rejected() {
        assert!(RadialPotential::square_well(-1.0, 0.0).is_err());
        assert!(RadialPotential::gaussian_well(-1.0, -1.0).is_err());
        assert!(RadialPotential::new(vec![], vec![], 0.0).is_err());
    }

    #[test]
    fn finite_support() {
        let v = RadialPotential::square_well(-3.0, 1.5).unwrap();
        assert_eq!(v.support_radius(), 1.5);
        assert_eq!(v.value(1.5 + 1e-12), 0.0);
        let g = RadialPotential::gaussian_well(-3.0, 1.0).unwrap();
        assert!(g.value(g.support_radius()).abs() < 1e-16);
    }

    #[test]
    fn serde_round_trip() {
        let v = RadialPotential::new(
            vec![Shell {
                r_lo: 0.0,
                r_hi: 1.0,
                height: -2.0,
            }],
            vec![GaussianTerm {
                depth: -1.0,
                range: 0.5,
            }],
            1.0,
        )
        .unwrap();
        let s = serde_json::to_string(&v).unwrap();
        let back: RadialPotential = serde_json::from_str(&s).unwrap();
        assert_eq!(v, back);
        assert!(serde_json::from_str::<RadialPotential>(
            r#"{"shells":[{"r_lo":2,"r_hi":1,"height":1}],"r_v":1}"#
        )
        .is_err());
    }
}
