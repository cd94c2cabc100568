//! The gapped search domain and distributions truncated to it.
//!
//! A [`TruncationLayout`] is the interval `[a, b]` with open gaps deleted on
//! either side of the origin. Left gaps are stored nearest-origin first, so
//! `left_gaps()[0]` is `(ϑ₁, ζ₁)`; right gaps likewise start with `(α₁, β₁)`.
//! The surviving closed pieces are the [`Segment`]s, indexed from the far
//! left (`a`) to the far right (`b`). The origin splits the middle piece
//! `[ζ₁, α₁]` into a left and a right segment.

use std::fmt;

use crate::distributions::DistributionSpec;
use crate::error::{check_finite, Error, Result};

/// Masses at or below this are treated as "everything was deleted".
pub const MIN_NORM: f64 = 1e-12;

/// An open deleted subinterval `(lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub lower: f64,
    pub upper: f64,
}

impl Gap {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Strict containment; gap endpoints belong to the search domain.
    pub fn contains(&self, x: f64) -> bool {
        self.lower < x && x < self.upper
    }
}

impl From<(f64, f64)> for Gap {
    fn from((lower, upper): (f64, f64)) -> Self {
        Gap::new(lower, upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TruncationClass {
    Symmetric,
    Commensurate,
    Uneven,
    HalfLine,
}

impl fmt::Display for TruncationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruncationClass::Symmetric => "symmetric",
            TruncationClass::Commensurate => "commensurate",
            TruncationClass::Uneven => "uneven",
            TruncationClass::HalfLine => "half-line",
        })
    }
}

/// A closed piece `Ω_m` of the search domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub side: Side,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationLayout {
    a: f64,
    b: f64,
    left: Vec<Gap>,
    right: Vec<Gap>,
}

impl TruncationLayout {
    /// Builds and validates a layout. `a == 0` with no left gaps gives a
    /// half-line layout.
    pub fn new(a: f64, b: f64, left_gaps: Vec<Gap>, right_gaps: Vec<Gap>) -> Result<Self> {
        let layout = Self {
            a,
            b,
            left: left_gaps,
            right: right_gaps,
        };
        layout.validate(false)?;
        Ok(layout)
    }

    /// Half-line layout on `[0, b]` with gaps only to the right of 0.
    pub fn half_line(b: f64, right_gaps: Vec<Gap>) -> Result<Self> {
        Self::new(0.0, b, Vec::new(), right_gaps)
    }

    /// Like [`TruncationLayout::new`], but a gap may have zero width
    /// (`lower == upper`). Used when sweeping mesh coordinates onto the
    /// diagonal of a contour grid.
    pub fn new_allowing_empty_gaps(
        a: f64,
        b: f64,
        left_gaps: Vec<Gap>,
        right_gaps: Vec<Gap>,
    ) -> Result<Self> {
        let layout = Self {
            a,
            b,
            left: left_gaps,
            right: right_gaps,
        };
        layout.validate(true)?;
        Ok(layout)
    }

    /// Skips ordering checks. Segment lengths and masses may come out
    /// negative; the closed-form sums stay defined, which the optimizer's
    /// finite-difference stencils rely on near the boundary.
    pub(crate) fn from_parts_unchecked(a: f64, b: f64, left: Vec<Gap>, right: Vec<Gap>) -> Self {
        Self { a, b, left, right }
    }

    /// Same endpoints and gap counts, new mesh points (see [`Self::mesh_points`]).
    pub fn with_mesh_points(&self, x: &[f64]) -> Result<Self> {
        let (m, n) = (self.left.len(), self.right.len());
        if x.len() != 2 * (m + n) {
            return Err(Error::Config(format!(
                "expected {} mesh coordinates, got {}",
                2 * (m + n),
                x.len()
            )));
        }
        let left = (0..m).map(|j| Gap::new(x[j], x[m + j])).collect();
        let right = (0..n)
            .map(|i| Gap::new(x[2 * m + i], x[2 * m + n + i]))
            .collect();
        Self::new(self.a, self.b, left, right)
    }

    /// Mesh coordinates `(ϑ₁..ϑ_M̃, ζ₁..ζ_M̃, α₁..α_N, β₁..β_N)`.
    pub fn mesh_points(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self.left.iter().map(|g| g.lower).collect();
        x.extend(self.left.iter().map(|g| g.upper));
        x.extend(self.right.iter().map(|g| g.lower));
        x.extend(self.right.iter().map(|g| g.upper));
        x
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn left_gaps(&self) -> &[Gap] {
        &self.left
    }

    pub fn right_gaps(&self) -> &[Gap] {
        &self.right
    }

    /// `M̃`, the number of gaps left of the origin.
    pub fn left_count(&self) -> usize {
        self.left.len()
    }

    /// `N`, the number of gaps right of the origin.
    pub fn right_count(&self) -> usize {
        self.right.len()
    }

    pub fn is_half_line(&self) -> bool {
        self.a == 0.0 && self.left.is_empty()
    }

    pub fn gap(&self, side: Side, index: usize) -> Option<Gap> {
        match side {
            Side::Left => self.left.get(index).copied(),
            Side::Right => self.right.get(index).copied(),
        }
    }

    fn validate(&self, allow_empty_gaps: bool) -> Result<()> {
        check_finite("TruncationLayout", "a", self.a)?;
        check_finite("TruncationLayout", "b", self.b)?;
        for g in self.left.iter().chain(&self.right) {
            check_finite("TruncationLayout", "gap endpoint", g.lower)?;
            check_finite("TruncationLayout", "gap endpoint", g.upper)?;
        }
        let half_line = self.is_half_line();
        // (label, value, strict-to-next)
        let mut chain: Vec<(String, f64, bool)> = Vec::new();
        if half_line {
            chain.push(("a".into(), self.a, false));
        } else {
            chain.push(("a".into(), self.a, true));
            for (j, g) in self.left.iter().enumerate().rev() {
                let k = j + 1;
                chain.push((format!("theta_{k} (left gap {k} lower)"), g.lower, !allow_empty_gaps));
                chain.push((format!("zeta_{k} (left gap {k} upper)"), g.upper, true));
            }
            chain.push(("origin".into(), 0.0, true));
        }
        for (i, g) in self.right.iter().enumerate() {
            let k = i + 1;
            chain.push((format!("alpha_{k} (right gap {k} lower)"), g.lower, !allow_empty_gaps));
            chain.push((format!("beta_{k} (right gap {k} upper)"), g.upper, true));
        }
        chain.push(("b".into(), self.b, true));

        for pair in chain.windows(2) {
            let (ref name_lo, lo, strict) = pair[0];
            let (ref name_hi, hi, _) = pair[1];
            let ok = if strict { lo < hi } else { lo <= hi };
            if !ok {
                let op = if strict { "<" } else { "<=" };
                return Err(Error::Layout(format!(
                    "{name_lo} = {lo} must be {op} {name_hi} = {hi}"
                )));
            }
        }
        if half_line && self.b <= 0.0 {
            return Err(Error::Layout(format!("b = {} must be > 0", self.b)));
        }
        Ok(())
    }

    /// Symmetric / commensurate / uneven / half-line, using exact equality
    /// for the mirror conditions.
    pub fn classify(&self) -> TruncationClass {
        if self.is_half_line() {
            return TruncationClass::HalfLine;
        }
        if self.left.len() != self.right.len() {
            return TruncationClass::Uneven;
        }
        if self.left.is_empty() {
            return TruncationClass::Commensurate;
        }
        let mirrored = self.b == -self.a
            && self
                .left
                .iter()
                .zip(&self.right)
                .all(|(l, r)| r.upper == -l.lower && r.lower == -l.upper);
        if mirrored {
            TruncationClass::Symmetric
        } else {
            TruncationClass::Commensurate
        }
    }

    /// The closed pieces of the domain, far left to far right.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::with_capacity(self.left.len() + self.right.len() + 2);
        let mut push = |lower: f64, upper: f64, side: Side| {
            let index = out.len();
            out.push(Segment {
                index,
                lower,
                upper,
                side,
            });
        };
        if !self.is_half_line() {
            let m = self.left.len();
            // Ω_j = [ζ_{M+1-j}, ϑ_{M-j}] with ζ_{M+1} = a, ϑ_0 = 0
            for j in 0..=m {
                let lower = if j == 0 { self.a } else { self.left[m - j].upper };
                let upper = if j == m { 0.0 } else { self.left[m - 1 - j].lower };
                push(lower, upper, Side::Left);
            }
        }
        let n = self.right.len();
        for i in 0..=n {
            let lower = if i == 0 { 0.0 } else { self.right[i - 1].upper };
            let upper = if i == n { self.b } else { self.right[i].lower };
            push(lower, upper, Side::Right);
        }
        out
    }

    /// Index of the segment that touches the origin from the right
    /// (`Ω_{M̃+1}`, or `Ω₀` on a half-line).
    pub fn first_right_segment(&self) -> usize {
        if self.is_half_line() {
            0
        } else {
            self.left.len() + 1
        }
    }

    /// Whether `x` lies in `[a, b]` and outside every open gap.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b && !self.left.iter().chain(&self.right).any(|g| g.contains(x))
    }

    /// Total gap length on one side.
    pub fn gap_length(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.left.iter().map(Gap::width).sum(),
            Side::Right => self.right.iter().map(Gap::width).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SegmentMass {
    segment: Segment,
    cdf_lower: f64,
    /// F(upper) − F(lower), not normalized.
    mass: f64,
    /// Surviving mass of all segments left of this one, not normalized.
    mass_before: f64,
}

/// A distribution restricted to the gapped domain of a layout and
/// renormalized by the surviving mass.
#[derive(Debug, Clone)]
pub struct TruncatedDistribution {
    dist: DistributionSpec,
    layout: TruncationLayout,
    norm: f64,
    segments: Vec<SegmentMass>,
    /// Deleted mass between `a` and the lower end of each segment.
    gap_mass_prefix: Vec<f64>,
}

/// Where a point falls relative to the segments.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Location {
    Below,
    Segment(usize),
    /// Inside the gap that follows the given segment.
    GapAfter(usize),
    Above,
}

impl TruncatedDistribution {
    pub fn new(dist: DistributionSpec, layout: TruncationLayout) -> Result<Self> {
        dist.validate()?;
        if dist.support_min().is_some() && !layout.is_half_line() {
            return Err(Error::Config(format!(
                "{} distribution needs a half-line layout (a = 0, no left gaps)",
                dist.kind()
            )));
        }
        let segs = layout.segments();
        let mut segments = Vec::with_capacity(segs.len());
        let mut gap_mass_prefix = Vec::with_capacity(segs.len());
        let mut mass_before = 0.0;
        let mut deleted = 0.0;
        let mut prev_upper_cdf: Option<f64> = None;
        for segment in segs {
            let cdf_lower = dist.cdf_raw(segment.lower);
            let cdf_upper = dist.cdf_raw(segment.upper);
            if let Some(prev) = prev_upper_cdf {
                deleted += cdf_lower - prev;
            }
            gap_mass_prefix.push(deleted);
            let mass = cdf_upper - cdf_lower;
            segments.push(SegmentMass {
                segment,
                cdf_lower,
                mass,
                mass_before,
            });
            mass_before += mass;
            prev_upper_cdf = Some(cdf_upper);
        }
        let norm = mass_before;
        if !(norm > MIN_NORM) {
            return Err(Error::DegenerateTruncation { norm });
        }
        Ok(Self {
            dist,
            layout,
            norm,
            segments,
            gap_mass_prefix,
        })
    }

    pub fn distribution(&self) -> &DistributionSpec {
        &self.dist
    }

    pub fn layout(&self) -> &TruncationLayout {
        &self.layout
    }

    /// Surviving probability mass `𝒜` (or `𝒜_asy`, `𝒜_r`).
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segment(&self, m: usize) -> Result<Segment> {
        self.segments
            .get(m)
            .map(|s| s.segment)
            .ok_or(Error::Index {
                index: m,
                max: self.segments.len() - 1,
            })
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.segments.iter().map(|s| s.segment)
    }

    /// Deleted mass between `a` and the lower end of segment `m`.
    pub fn gap_mass_below(&self, m: usize) -> Result<f64> {
        self.gap_mass_prefix.get(m).copied().ok_or(Error::Index {
            index: m,
            max: self.segments.len() - 1,
        })
    }

    fn locate(&self, x: f64) -> Location {
        let first = &self.segments[0].segment;
        let last = &self.segments[self.segments.len() - 1].segment;
        if x < first.lower {
            return Location::Below;
        }
        if x > last.upper {
            return Location::Above;
        }
        for (k, s) in self.segments.iter().enumerate() {
            if x <= s.segment.upper {
                return if x >= s.segment.lower {
                    Location::Segment(k)
                } else {
                    Location::GapAfter(k - 1)
                };
            }
        }
        Location::Above
    }

    /// Truncated density: `f(x) / norm` on the domain, 0 elsewhere.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_finite("truncated_pdf", "x", x)?;
        Ok(match self.locate(x) {
            Location::Segment(_) => self.dist.pdf_raw(x) / self.norm,
            _ => 0.0,
        })
    }

    /// Truncated CDF, `(F(x) − F(a) − deleted mass below x) / norm`.
    ///
    /// Constant across each gap, 0 at or below `a` and 1 at or above `b`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_finite("truncated_cdf", "x", x)?;
        Ok(self.cdf_raw(x))
    }

    pub(crate) fn cdf_raw(&self, x: f64) -> f64 {
        match self.locate(x) {
            Location::Below => 0.0,
            Location::Above => 1.0,
            Location::GapAfter(k) => {
                let s = &self.segments[k];
                ((s.mass_before + s.mass) / self.norm).min(1.0)
            }
            Location::Segment(k) => {
                let s = &self.segments[k];
                if k == 0 && x <= s.segment.lower {
                    return 0.0;
                }
                if k == self.segments.len() - 1 && x >= s.segment.upper {
                    return 1.0;
                }
                let partial = self.dist.cdf_raw(x) - s.cdf_lower;
                ((s.mass_before + partial) / self.norm).clamp(0.0, 1.0)
            }
        }
    }

    /// Probability mass of segment `Ω_m`.
    pub fn segment_probability(&self, m: usize) -> Result<f64> {
        let s = self.segments.get(m).ok_or(Error::Index {
            index: m,
            max: self.segments.len() - 1,
        })?;
        Ok(s.mass / self.norm)
    }

    /// Inverse of [`Self::cdf`]. A `p` sitting exactly on a gap plateau
    /// maps to the lower end of the segment after the gap.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("quantile", format!("p = {p} is outside [0, 1]")));
        }
        let last = self.segments.len() - 1;
        if p >= 1.0 {
            return Ok(self.segments[last].segment.upper);
        }
        let target = p * self.norm;
        let k = self
            .segments
            .iter()
            .position(|s| target < s.mass_before + s.mass)
            .unwrap_or(last);
        let s = &self.segments[k];
        let want = (target - s.mass_before).max(0.0);
        if want == 0.0 {
            return Ok(s.segment.lower);
        }
        Ok(self.invert_within(s, want))
    }

    /// Solves `F(x) − F(lower) = want` on one segment: Newton steps kept
    /// inside a shrinking bisection bracket.
    fn invert_within(&self, s: &SegmentMass, want: f64) -> f64 {
        let (mut lo, mut hi) = (s.segment.lower, s.segment.upper);
        let residual = |x: f64| self.dist.cdf_raw(x) - s.cdf_lower - want;
        let mut x = lo + (hi - lo) * (want / s.mass).clamp(0.0, 1.0);
        for _ in 0..200 {
            let r = residual(x);
            if r == 0.0 {
                return x;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let density = self.dist.pdf_raw(x);
            let newton = x - r / density;
            let next = if density > 0.0 && newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 1e-12 * x.abs().max(1.0) || hi - lo <= 1e-12 {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Builds the truncated distribution, computing and caching its
/// normalization constant.
pub fn make_truncated(dist: DistributionSpec, layout: TruncationLayout) -> Result<TruncatedDistribution> {
    TruncatedDistribution::new(dist, layout)
}
