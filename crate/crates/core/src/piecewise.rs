//! Term-by-term evaluation of the closed-form piecewise CDFs `G_m`, `H_m`,
//! `U_m` and of the segment-weighted expectation in its index form.
//!
//! Nothing here reuses the cached segment walk of
//! [`TruncatedDistribution`](crate::truncation::TruncatedDistribution); it
//! exists so the two routes can be checked against each other.
//!
//! Half-line formulas assume `F(0) = 0`, as for the gamma family.

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::search_model::SearchSpeeds;
use crate::truncation::TruncationLayout;

/// `δ_{k,1}`: 0 for `k ≤ 1`, 1 otherwise.
pub fn delta_gate(k: i64) -> f64 {
    if k > 1 {
        1.0
    } else {
        0.0
    }
}

/// Mesh accessors with the boundary conventions ϑ₀ = β₀ = 0,
/// ζ_{M̃+1} = a and α_{N+1} = b. Indices are 1-based as in the formulas.
struct Mesh<'a>(&'a TruncationLayout);

impl Mesh<'_> {
    fn m(&self) -> usize {
        self.0.left_count()
    }
    fn n(&self) -> usize {
        self.0.right_count()
    }
    fn theta(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.0.left_gaps()[j - 1].lower
        }
    }
    fn zeta(&self, j: usize) -> f64 {
        if j == self.m() + 1 {
            self.0.a()
        } else {
            self.0.left_gaps()[j - 1].upper
        }
    }
    fn alpha(&self, i: usize) -> f64 {
        if i == self.n() + 1 {
            self.0.b()
        } else {
            self.0.right_gaps()[i - 1].lower
        }
    }
    fn beta(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.0.right_gaps()[i - 1].upper
        }
    }
}

fn left_deleted(d: &DistributionSpec, mesh: &Mesh) -> f64 {
    (1..=mesh.m())
        .map(|j| d.cdf_raw(mesh.zeta(j)) - d.cdf_raw(mesh.theta(j)))
        .sum()
}

fn right_deleted_upto(d: &DistributionSpec, mesh: &Mesh, count: usize) -> f64 {
    (1..=count)
        .map(|i| d.cdf_raw(mesh.beta(i)) - d.cdf_raw(mesh.alpha(i)))
        .sum()
}

/// `𝒜 = F(b) − 𝒜⁻ − 𝒜⁺ − F(a)`, or `𝒜_r = F(b) − 𝒜_r⁺` on a half-line.
pub fn normalization(d: &DistributionSpec, layout: &TruncationLayout) -> f64 {
    let mesh = Mesh(layout);
    let right = right_deleted_upto(d, &mesh, mesh.n());
    if layout.is_half_line() {
        d.cdf_raw(layout.b()) - right
    } else {
        d.cdf_raw(layout.b()) - left_deleted(d, &mesh) - right - d.cdf_raw(layout.a())
    }
}

/// The piecewise CDF for segment `m`, evaluated literally at `x`.
pub fn segment_cdf(d: &DistributionSpec, layout: &TruncationLayout, m: usize, x: f64) -> Result<f64> {
    let mesh = Mesh(layout);
    let norm = normalization(d, layout);
    let fx = d.cdf_raw(x);
    if layout.is_half_line() {
        let n = mesh.n();
        if m > n {
            return Err(Error::Index { index: m, max: n });
        }
        return Ok((fx - right_deleted_upto(d, &mesh, m)) / norm);
    }
    let big_m = mesh.m();
    let last = big_m + mesh.n() + 1;
    if m > last {
        return Err(Error::Index { index: m, max: last });
    }
    let fa = d.cdf_raw(layout.a());
    let value = if m == 0 {
        (fx - fa) / norm
    } else if m < big_m {
        let removed: f64 = (0..m)
            .map(|j| d.cdf_raw(mesh.zeta(big_m - j)) - d.cdf_raw(mesh.theta(big_m - j)))
            .sum();
        (fx - removed - fa) / norm
    } else if m == big_m || m == big_m + 1 {
        (fx - left_deleted(d, &mesh) - fa) / norm
    } else {
        (fx - left_deleted(d, &mesh) - right_deleted_upto(d, &mesh, m - 1 - big_m) - fa) / norm
    };
    Ok(value)
}

/// Expected elapsed time in the literal index form: swept lengths weighted
/// by `G_k(upper) − G_k(lower)` plus the δ-gated gap traversal.
///
/// `m` ranges over `0..=M̃+N+1`, or `1..=N+1` on a half-line.
pub fn expected_time(
    d: &DistributionSpec,
    layout: &TruncationLayout,
    speeds: &SearchSpeeds,
    m: usize,
) -> Result<f64> {
    let mesh = Mesh(layout);
    let (v1, v2) = (speeds.sweep(), speeds.gap());
    let g = |k: usize, x: f64| segment_cdf(d, layout, k, x);
    if layout.is_half_line() {
        let n = mesh.n();
        if m < 1 || m > n + 1 {
            return Err(Error::Index { index: m, max: n + 1 });
        }
        let mut sweep = 0.0;
        for l in 1..=m {
            let p = g(l - 1, mesh.alpha(l))? - g(l - 1, mesh.beta(l - 1))?;
            sweep += (mesh.alpha(l) - mesh.beta(l - 1)) * p;
        }
        let gaps: f64 = (1..m).map(|l| mesh.beta(l) - mesh.alpha(l)).sum();
        return Ok(sweep / v1 + delta_gate(m as i64) * gaps / v2);
    }
    let big_m = mesh.m();
    let last = big_m + mesh.n() + 1;
    if m > last {
        return Err(Error::Index { index: m, max: last });
    }
    if m <= big_m {
        let k = big_m + 1 - m;
        let mut sweep = 0.0;
        for l in 1..=k {
            let seg = big_m + 1 - l;
            let p = g(seg, mesh.theta(l - 1))? - g(seg, mesh.zeta(l))?;
            sweep += (mesh.theta(l - 1) - mesh.zeta(l)) * p;
        }
        let gaps: f64 = (1..=big_m - m).map(|l| mesh.zeta(l) - mesh.theta(l)).sum();
        Ok(sweep / v1 + delta_gate(k as i64) * gaps / v2)
    } else {
        let k = m - big_m;
        let mut sweep = 0.0;
        for l in 1..=k {
            let seg = big_m + l;
            let p = g(seg, mesh.alpha(l))? - g(seg, mesh.beta(l - 1))?;
            sweep += (mesh.alpha(l) - mesh.beta(l - 1)) * p;
        }
        let gaps: f64 = (1..k).map(|l| mesh.beta(l) - mesh.alpha(l)).sum();
        Ok(sweep / v1 + delta_gate(k as i64) * gaps / v2)
    }
}
