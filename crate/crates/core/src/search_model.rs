//! Elapsed and expected search times for two searchers leaving the origin
//! in opposite directions.
//!
//! Both searchers sweep surviving segments at `v1` and cross gaps at `v2`.
//! The expectation for index `m` weights each swept segment's full length
//! by that segment's own probability and adds the gap-crossing time; this
//! is the functional tabulated for the worked examples, not the mean
//! arrival time (see [`crate::montecarlo::simulate_arrival`] for that).
//!
//! Index conventions: on a two-sided layout `m` runs over the segments
//! `0..=M̃+N+1` (left branch `m ≤ M̃`); on a half-line it runs `1..=N+1`
//! and row `m` ends in segment `m − 1`.

use rayon::prelude::*;

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::piecewise::delta_gate;
use crate::truncation::{make_truncated, Gap, Side, TruncatedDistribution, TruncationLayout};

/// Sweep speed `v1` and gap-crossing speed `v2 > v1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpeeds {
    sweep: f64,
    gap: f64,
}

impl SearchSpeeds {
    pub fn new(sweep: f64, gap: f64) -> Result<Self> {
        if !(sweep.is_finite() && sweep > 0.0) {
            return Err(Error::domain("SearchSpeeds", format!("v1 = {sweep} must be positive")));
        }
        // infinite v2 is the "gaps cost nothing" limit
        if !(gap > sweep) || gap.is_nan() {
            return Err(Error::domain(
                "SearchSpeeds",
                format!("v2 = {gap} must exceed v1 = {sweep}"),
            ));
        }
        Ok(Self { sweep, gap })
    }

    pub fn sweep(&self) -> f64 {
        self.sweep
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }
}

impl Default for SearchSpeeds {
    /// `v1 = 1`, `v2 = 5`.
    fn default() -> Self {
        Self { sweep: 1.0, gap: 5.0 }
    }
}

/// Valid time indices for a layout.
pub fn time_indices(layout: &TruncationLayout) -> std::ops::RangeInclusive<usize> {
    if layout.is_half_line() {
        1..=layout.right_count() + 1
    } else {
        0..=layout.left_count() + layout.right_count() + 1
    }
}

fn check_index(layout: &TruncationLayout, m: usize) -> Result<()> {
    let range = time_indices(layout);
    if range.contains(&m) {
        Ok(())
    } else {
        Err(Error::Index {
            index: m,
            max: *range.end(),
        })
    }
}

/// Segments swept (origin outwards) and gaps crossed on the way to time
/// index `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPath {
    pub segments: Vec<usize>,
    pub gaps: Vec<Gap>,
    pub side: Side,
}

pub fn sweep_path(layout: &TruncationLayout, m: usize) -> Result<SweepPath> {
    check_index(layout, m)?;
    if layout.is_half_line() {
        return Ok(SweepPath {
            segments: (0..m).collect(),
            gaps: layout.right_gaps()[..m - 1].to_vec(),
            side: Side::Right,
        });
    }
    let big_m = layout.left_count();
    if m <= big_m {
        Ok(SweepPath {
            segments: (m..=big_m).rev().collect(),
            gaps: layout.left_gaps()[..big_m - m].to_vec(),
            side: Side::Left,
        })
    } else {
        let k = m - big_m;
        Ok(SweepPath {
            segments: (big_m + 1..=m).collect(),
            gaps: layout.right_gaps()[..k - 1].to_vec(),
            side: Side::Right,
        })
    }
}

/// `τ_m`: swept segment lengths over `v1` plus, when more than one segment
/// is swept, the crossed gap lengths over `v2`.
pub fn elapsed_time(layout: &TruncationLayout, speeds: &SearchSpeeds, m: usize) -> Result<f64> {
    check_index(layout, m)?;
    let (v1, v2) = (speeds.sweep(), speeds.gap());
    let theta = |j: usize| if j == 0 { 0.0 } else { layout.left_gaps()[j - 1].lower };
    let zeta = |j: usize| {
        if j == layout.left_count() + 1 {
            layout.a()
        } else {
            layout.left_gaps()[j - 1].upper
        }
    };
    let alpha = |i: usize| {
        if i == layout.right_count() + 1 {
            layout.b()
        } else {
            layout.right_gaps()[i - 1].lower
        }
    };
    let beta = |i: usize| if i == 0 { 0.0 } else { layout.right_gaps()[i - 1].upper };

    let right_branch = |k: usize| {
        let sweep: f64 = (1..=k).map(|l| alpha(l) - beta(l - 1)).sum();
        let gaps: f64 = (1..k).map(|l| beta(l) - alpha(l)).sum();
        sweep / v1 + delta_gate(k as i64) * gaps / v2
    };

    if layout.is_half_line() {
        return Ok(right_branch(m));
    }
    let big_m = layout.left_count();
    if m <= big_m {
        let k = big_m + 1 - m;
        let sweep: f64 = (1..=k).map(|l| theta(l - 1) - zeta(l)).sum();
        let gaps: f64 = (1..=big_m - m).map(|l| zeta(l) - theta(l)).sum();
        Ok(sweep / v1 + delta_gate(k as i64) * gaps / v2)
    } else {
        Ok(right_branch(m - big_m))
    }
}

/// `E(τ_m)`: each swept segment's length times its probability, over `v1`,
/// plus the gated gap time.
pub fn expected_time(t: &TruncatedDistribution, speeds: &SearchSpeeds, m: usize) -> Result<f64> {
    let path = sweep_path(t.layout(), m)?;
    let mut sweep = 0.0;
    for &k in &path.segments {
        sweep += t.segment(k)?.length() * t.segment_probability(k)?;
    }
    let gaps: f64 = path.gaps.iter().map(Gap::width).sum();
    let gate = delta_gate(path.segments.len() as i64);
    Ok(sweep / speeds.sweep() + gate * gaps / speeds.gap())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedTimeRow {
    pub m: usize,
    pub tau: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedTimeTable {
    pub scenario: Option<String>,
    pub rows: Vec<ExpectedTimeRow>,
}

impl ExpectedTimeTable {
    pub fn expected(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.expected).collect()
    }
}

pub fn expected_time_table(t: &TruncatedDistribution, speeds: &SearchSpeeds) -> Result<ExpectedTimeTable> {
    let rows = time_indices(t.layout())
        .map(|m| {
            Ok(ExpectedTimeRow {
                m,
                tau: elapsed_time(t.layout(), speeds, m)?,
                expected: expected_time(t, speeds, m)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpectedTimeTable {
        scenario: None,
        rows,
    })
}

/// Expected sweep time of one half of `[a, b]` with no gaps: half-length
/// over `v1` times the half's share of `F(b) − F(a)`.
pub fn baseline_expectation(
    d: &DistributionSpec,
    a: f64,
    b: f64,
    speeds: &SearchSpeeds,
    side: Side,
) -> Result<f64> {
    if !(a < 0.0 && b > 0.0) {
        return Err(Error::domain(
            "baseline_expectation",
            format!("need a < 0 < b, got a = {a}, b = {b}"),
        ));
    }
    let fa = d.cdf(a)?;
    let f0 = d.cdf(0.0)?;
    let fb = d.cdf(b)?;
    let total = fb - fa;
    if !(total > 0.0) {
        return Err(Error::DegenerateTruncation { norm: total });
    }
    let (length, mass) = match side {
        Side::Left => (-a, f0 - fa),
        Side::Right => (b, fb - f0),
    };
    Ok(length / speeds.sweep() * mass / total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || steps == 0 || (steps > 1 && !(end > start)) {
            return Err(Error::Config(format!(
                "grid axis needs finite start < end and steps >= 1, got [{start}, {end}] x {steps}"
            )));
        }
        Ok(Self { start, end, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.end - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.end } else { self.start + i as f64 * h })
            .collect()
    }
}

/// Expected times over a grid of the two mesh coordinates of one gap:
/// `(ϑ, ζ)` for [`Side::Left`], `(α, β)` for [`Side::Right`]. Nodes that
/// break the ordering are `None`; nodes with equal coordinates are
/// evaluated as a zero-width gap.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major, `values[iy * xs.len() + ix]`.
    pub values: Vec<Option<f64>>,
}

impl ContourGrid {
    pub fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        self.values[iy * self.xs.len() + ix]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, Option<f64>)> + '_ {
        self.ys.iter().enumerate().flat_map(move |(iy, &y)| {
            self.xs
                .iter()
                .enumerate()
                .map(move |(ix, &x)| (x, y, self.values[iy * self.xs.len() + ix]))
        })
    }
}

/// Evaluates [`expected_time`] with the single gap on `vary` moved to every
/// node of `x_axis × y_axis`. Runs on the current rayon pool.
pub fn contour_grid(
    d: &DistributionSpec,
    base: &TruncationLayout,
    speeds: &SearchSpeeds,
    target_m: usize,
    vary: Side,
    x_axis: GridAxis,
    y_axis: GridAxis,
) -> Result<ContourGrid> {
    let count = match vary {
        Side::Left => base.left_count(),
        Side::Right => base.right_count(),
    };
    if count != 1 {
        return Err(Error::Config(format!(
            "contour needs exactly one gap on the varied side, found {count}"
        )));
    }
    check_index(base, target_m)?;
    let xs = x_axis.values();
    let ys = y_axis.values();
    let nodes: Vec<(f64, f64)> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .collect();
    let values = nodes
        .par_iter()
        .map(|&(x, y)| {
            let gap = vec![Gap::new(x, y)];
            let layout = match vary {
                Side::Left => TruncationLayout::new_allowing_empty_gaps(
                    base.a(),
                    base.b(),
                    gap,
                    base.right_gaps().to_vec(),
                ),
                Side::Right => TruncationLayout::new_allowing_empty_gaps(
                    base.a(),
                    base.b(),
                    base.left_gaps().to_vec(),
                    gap,
                ),
            };
            let Ok(layout) = layout else {
                return Ok(None);
            };
            match make_truncated(*d, layout) {
                Ok(t) => expected_time(&t, speeds, target_m).map(Some),
                Err(Error::DegenerateTruncation { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContourGrid { xs, ys, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> TruncationLayout {
        TruncationLayout::new(
            -20.0,
            30.0,
            vec![Gap::new(-6.0, -4.0), Gap::new(-15.0, -10.0)],
            vec![Gap::new(2.0, 7.0), Gap::new(11.0, 17.0)],
        )
        .unwrap()
    }

    #[test]
    fn speeds_validation() {
        assert!(SearchSpeeds::new(1.0, 5.0).is_ok());
        assert!(SearchSpeeds::new(1.0, 1.0).is_err());
        assert!(SearchSpeeds::new(0.0, 5.0).is_err());
        assert!(SearchSpeeds::new(1.0, f64::INFINITY).is_ok());
        assert_eq!(SearchSpeeds::default(), SearchSpeeds::new(1.0, 5.0).unwrap());
    }

    #[test]
    fn elapsed_time_examples() {
        let s = SearchSpeeds::default();
        let layout = example1();
        assert!((elapsed_time(&layout, &s, 3).unwrap() - 2.0).abs() < 1e-15);
        assert!((elapsed_time(&layout, &s, 5).unwrap() - 21.2).abs() < 1e-13);
        assert!((elapsed_time(&layout, &s, 0).unwrap() - 14.4).abs() < 1e-13);
        assert!(elapsed_time(&layout, &s, 6).is_err());
    }

    #[test]
    fn half_line_indices() {
        let layout = TruncationLayout::half_line(30.0, vec![Gap::new(2.0, 7.0), Gap::new(11.0, 17.0)]).unwrap();
        assert_eq!(time_indices(&layout), 1..=3);
        let s = SearchSpeeds::default();
        assert!((elapsed_time(&layout, &s, 1).unwrap() - 2.0).abs() < 1e-15);
        assert!((elapsed_time(&layout, &s, 3).unwrap() - (2.0 + 4.0 + 13.0 + 11.0 / 5.0)).abs() < 1e-13);
        assert!(elapsed_time(&layout, &s, 0).is_err());
        let d = DistributionSpec::gamma(3.15, 1.27).unwrap();
        let t = make_truncated(d, layout).unwrap();
        assert_eq!(expected_time_table(&t, &s).unwrap().rows.len(), 3);
    }

    #[test]
    fn sweep_paths() {
        let layout = example1();
        let p = sweep_path(&layout, 0).unwrap();
        assert_eq!(p.segments, vec![2, 1, 0]);
        assert_eq!(p.gaps.len(), 2);
        let p = sweep_path(&layout, 3).unwrap();
        assert_eq!(p.segments, vec![3]);
        assert!(p.gaps.is_empty());
        assert_eq!(p.side, Side::Right);
    }

    #[test]
    fn infinite_gap_speed_drops_gap_term() {
        let d = DistributionSpec::normal(0.0, 4.53).unwrap();
        let t = make_truncated(d, example1()).unwrap();
        let fast = SearchSpeeds::new(1.0, f64::INFINITY).unwrap();
        let e = expected_time(&t, &fast, 0).unwrap();
        let sweep: f64 = [0usize, 1, 2]
            .iter()
            .map(|&k| t.segment(k).unwrap().length() * t.segment_probability(k).unwrap())
            .sum();
        assert!((e - sweep).abs() < 1e-15);
    }

    #[test]
    fn baseline_values_and_errors() {
        let s = SearchSpeeds::default();
        let d = DistributionSpec::normal(0.0, 4.53).unwrap();
        let right = baseline_expectation(&d, -20.0, 30.0, &s, Side::Right).unwrap();
        assert!((right - 15.0).abs() < 5e-3);
        assert!(baseline_expectation(&d, 0.0, 30.0, &s, Side::Left).is_err());
        assert!(baseline_expectation(&d, -20.0, -1.0, &s, Side::Left).is_err());
        // same thing through a gap-free truncated layout
        let t = make_truncated(d, TruncationLayout::new(-20.0, 30.0, vec![], vec![]).unwrap()).unwrap();
        let left = baseline_expectation(&d, -20.0, 30.0, &s, Side::Left).unwrap();
        assert!((expected_time(&t, &s, 0).unwrap() - left).abs() < 1e-13);
        assert!((expected_time(&t, &s, 1).unwrap() - right).abs() < 1e-13);
    }

    #[test]
    fn contour_rejects_bad_config() {
        let d = DistributionSpec::normal(0.0, 4.53).unwrap();
        let s = SearchSpeeds::default();
        let ax = GridAxis::new(1.0, 20.0, 5).unwrap();
        assert!(matches!(
            contour_grid(&d, &example1(), &s, 5, Side::Right, ax, ax),
            Err(Error::Config(_))
        ));
        assert!(GridAxis::new(3.0, 1.0, 5).is_err());
        assert!(GridAxis::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn contour_marks_infeasible_nodes() {
        let d = DistributionSpec::normal(0.0, 4.53).unwrap();
        let s = SearchSpeeds::default();
        let base = TruncationLayout::new(-20.0, 30.0, vec![Gap::new(-6.0, -4.0)], vec![Gap::new(2.0, 7.0)]).unwrap();
        let ax = GridAxis::new(1.0, 29.0, 15).unwrap();
        let grid = contour_grid(&d, &base, &s, 3, Side::Right, ax, ax).unwrap();
        for (x, y, v) in grid.nodes() {
            if x > y {
                assert!(v.is_none());
            } else {
                assert!(v.unwrap().is_finite());
            }
        }
    }
}
