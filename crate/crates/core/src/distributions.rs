//! Target-location distributions: normal, Cauchy, skew-normal and gamma.
//!
//! The skew-normal density carries the factor 2 in
//! `2/ϖ · φ((x−η)/ϖ) · Φ(ϱ(x−η)/ϖ)`, so that it is the derivative of the
//! CDF `Φ(h) − 2T(h, ϱ)`. Without the factor the density integrates to ½.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{check_finite, Error, Result};
use crate::special_fn::{
    ln_gamma_kernel, lower_gamma_kernel, owen_t_kernel, std_normal_cdf_kernel, std_normal_pdf,
};

const OWEN_T_TOL: f64 = 1e-13;
const GAMMA_MAX_TERMS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Normal { mean: f64, std_dev: f64 },
    /// `location` is the peak, `half_width` the half-width at half-maximum.
    Cauchy { location: f64, half_width: f64 },
    SkewNormal { location: f64, scale: f64, shape: f64 },
    /// Supported on [0, ∞).
    Gamma { shape: f64, scale: f64 },
}

impl DistributionSpec {
    pub fn normal(mean: f64, std_dev: f64) -> Result<Self> {
        let d = DistributionSpec::Normal { mean, std_dev };
        d.validate()?;
        Ok(d)
    }

    pub fn cauchy(location: f64, half_width: f64) -> Result<Self> {
        let d = DistributionSpec::Cauchy {
            location,
            half_width,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn skew_normal(location: f64, scale: f64, shape: f64) -> Result<Self> {
        let d = DistributionSpec::SkewNormal {
            location,
            scale,
            shape,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        let d = DistributionSpec::Gamma { shape, scale };
        d.validate()?;
        Ok(d)
    }

    /// Checks that every parameter is finite and every scale/shape that must
    /// be positive is.
    pub fn validate(&self) -> Result<()> {
        type Named = Vec<(&'static str, f64)>;
        let (free, positive): (Named, Named) = match *self {
            DistributionSpec::Normal { mean, std_dev } => {
                (vec![("mean", mean)], vec![("std_dev", std_dev)])
            }
            DistributionSpec::Cauchy {
                location,
                half_width,
            } => (vec![("location", location)], vec![("half_width", half_width)]),
            DistributionSpec::SkewNormal {
                location,
                scale,
                shape,
            } => (
                vec![("location", location), ("shape", shape)],
                vec![("scale", scale)],
            ),
            DistributionSpec::Gamma { shape, scale } => {
                (vec![], vec![("shape", shape), ("scale", scale)])
            }
        };
        for (name, v) in free {
            check_finite("DistributionSpec", name, v)?;
        }
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(
                    "DistributionSpec",
                    format!("{} parameter {name} = {v} must be positive", self.kind()),
                ));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DistributionSpec::Normal { .. } => "normal",
            DistributionSpec::Cauchy { .. } => "cauchy",
            DistributionSpec::SkewNormal { .. } => "skew-normal",
            DistributionSpec::Gamma { .. } => "gamma",
        }
    }

    /// Lower end of the support, `None` for the whole real line.
    pub fn support_min(&self) -> Option<f64> {
        match self {
            DistributionSpec::Gamma { .. } => Some(0.0),
            _ => None,
        }
    }

    /// Center of symmetry for the symmetric families.
    pub fn center(&self) -> Option<f64> {
        match *self {
            DistributionSpec::Normal { mean, .. } => Some(mean),
            DistributionSpec::Cauchy { location, .. } => Some(location),
            _ => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.center().is_some()
    }

    /// Characteristic length of the distribution (σ, c, ϖ or θ).
    pub fn scale(&self) -> f64 {
        match *self {
            DistributionSpec::Normal { std_dev, .. } => std_dev,
            DistributionSpec::Cauchy { half_width, .. } => half_width,
            DistributionSpec::SkewNormal { scale, .. } => scale,
            DistributionSpec::Gamma { scale, .. } => scale,
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_finite("pdf", "x", x)?;
        if let Some(lo) = self.support_min() {
            if x < lo {
                return Err(Error::domain(
                    "pdf",
                    format!("x = {x} is below the {} support [{lo}, inf)", self.kind()),
                ));
            }
        }
        Ok(self.pdf_raw(x))
    }

    /// CDF; the gamma CDF is 0 for x < 0.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_finite("cdf", "x", x)?;
        Ok(self.cdf_raw(x))
    }

    /// Density without argument checks; gamma returns 0 below its support.
    pub(crate) fn pdf_raw(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Normal { mean, std_dev } => {
                std_normal_pdf((x - mean) / std_dev) / std_dev
            }
            DistributionSpec::Cauchy {
                location,
                half_width,
            } => {
                let z = x - location;
                half_width / (PI * (half_width * half_width + z * z))
            }
            DistributionSpec::SkewNormal {
                location,
                scale,
                shape,
            } => {
                let z = (x - location) / scale;
                2.0 / scale * std_normal_pdf(z) * std_normal_cdf_kernel(shape * z)
            }
            DistributionSpec::Gamma { shape, scale } => {
                if x < 0.0 {
                    0.0
                } else if x == 0.0 {
                    match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Greater) => 0.0,
                        Some(std::cmp::Ordering::Equal) => 1.0 / scale,
                        _ => f64::INFINITY,
                    }
                } else {
                    ((shape - 1.0) * x.ln() - x / scale - ln_gamma_kernel(shape) - shape * scale.ln())
                        .exp()
                }
            }
        }
    }

    pub(crate) fn cdf_raw(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Normal { mean, std_dev } => std_normal_cdf_kernel((x - mean) / std_dev),
            DistributionSpec::Cauchy {
                location,
                half_width,
            } => ((x - location) / half_width).atan() / PI + 0.5,
            DistributionSpec::SkewNormal {
                location,
                scale,
                shape,
            } => {
                let z = (x - location) / scale;
                (std_normal_cdf_kernel(z) - 2.0 * owen_t_kernel(z, shape, OWEN_T_TOL)).clamp(0.0, 1.0)
            }
            DistributionSpec::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    lower_gamma_kernel(shape, x / scale, GAMMA_MAX_TERMS)
                }
            }
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistributionSpec::Normal { mean, std_dev } => {
                write!(f, "normal(mean={mean}, std_dev={std_dev})")
            }
            DistributionSpec::Cauchy {
                location,
                half_width,
            } => write!(f, "cauchy(location={location}, half_width={half_width})"),
            DistributionSpec::SkewNormal {
                location,
                scale,
                shape,
            } => write!(f, "skew-normal(location={location}, scale={scale}, shape={shape})"),
            DistributionSpec::Gamma { shape, scale } => {
                write!(f, "gamma(shape={shape}, scale={scale})")
            }
        }
    }
}
