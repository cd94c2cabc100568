//! Penalized expected-time objectives over the mesh points and a damped
//! Newton minimizer with finite-difference derivatives.
//!
//! The objectives add two penalty families to the terminal expectations
//! `E(τ₀)` (left) and `E(τ_Ň)` (right):
//!
//! * `(ε / v2²) · width²` for every gap, and
//! * `(ε̂ · upper² + ε̃ · lower²) / v1²` on the gap endpoints.
//!
//! Neither term keeps the mesh ordered, so [`newton_minimize`] halves steps
//! until the iterate stays strictly inside the feasible region.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::search_model::{expected_time, time_indices, SearchSpeeds};
use crate::truncation::{make_truncated, Gap, TruncationLayout};

/// Maximum step halvings while looking for a feasible iterate.
pub const MAX_HALVINGS: usize = 60;
/// Damping starts here once the undamped step is rejected, then doubles.
const FIRST_DAMPING: f64 = 1e-6;
const MAX_DAMPING_ROUNDS: usize = 120;

/// Penalty weights for one gap, each in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyTriple {
    /// Weight of the squared gap width (ε, ϵ).
    pub width: f64,
    /// Weight of the squared upper endpoint (ε̂ on ζ, ϵ̂ on β).
    pub upper: f64,
    /// Weight of the squared lower endpoint (ε̃ on ϑ, ϵ̃ on α).
    pub lower: f64,
}

impl PenaltyTriple {
    pub fn uniform(value: f64) -> Self {
        Self {
            width: value,
            upper: value,
            lower: value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyParams {
    pub left: Vec<PenaltyTriple>,
    pub right: Vec<PenaltyTriple>,
}

impl PenaltyParams {
    pub fn uniform(left_count: usize, right_count: usize, value: f64) -> Result<Self> {
        let p = Self {
            left: vec![PenaltyTriple::uniform(value); left_count],
            right: vec![PenaltyTriple::uniform(value); right_count],
        };
        p.validate()?;
        Ok(p)
    }

    /// The default weights (0.1 everywhere) sized for a layout.
    pub fn defaults_for(layout: &TruncationLayout) -> Self {
        Self {
            left: vec![PenaltyTriple::uniform(0.1); layout.left_count()],
            right: vec![PenaltyTriple::uniform(0.1); layout.right_count()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (side, list) in [("left", &self.left), ("right", &self.right)] {
            for (i, t) in list.iter().enumerate() {
                for (name, v) in [("width", t.width), ("upper", t.upper), ("lower", t.lower)] {
                    if !(v > 0.0 && v < 1.0) {
                        return Err(Error::Config(format!(
                            "{side} penalty {} {name} = {v} must lie in (0, 1)",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_counts(&self, layout: &TruncationLayout) -> Result<()> {
        if self.left.len() != layout.left_count() || self.right.len() != layout.right_count() {
            return Err(Error::Config(format!(
                "penalties cover {} left / {} right gaps but the layout has {} / {}",
                self.left.len(),
                self.right.len(),
                layout.left_count(),
                layout.right_count()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    LeftTail,
    RightTail,
    Total,
}

fn tail_penalty(gaps: &[Gap], weights: &[PenaltyTriple], speeds: &SearchSpeeds) -> f64 {
    let (v1, v2) = (speeds.sweep(), speeds.gap());
    let mut crossing = 0.0;
    let mut endpoints = 0.0;
    for (g, w) in gaps.iter().zip(weights) {
        let width = g.width();
        crossing += width + w.width / v2 * width * width;
        endpoints += w.upper * g.upper * g.upper + w.lower * g.lower * g.lower;
    }
    crossing / v2 + endpoints / (v1 * v1)
}

/// Swept part of a terminal expectation: segment lengths times segment
/// probabilities over `v1`, for every segment on one side.
fn tail_sweep(t: &crate::truncation::TruncatedDistribution, speeds: &SearchSpeeds, left: bool) -> Result<f64> {
    let first_right = t.layout().first_right_segment();
    let range = if left { 0..first_right } else { first_right..t.segment_count() };
    let mut sum = 0.0;
    for k in range {
        sum += t.segment(k)?.length() * t.segment_probability(k)?;
    }
    Ok(sum / speeds.sweep())
}

/// The penalized terminal expectations `Ê(τ₀)`, `Ê(τ_Ň)` or their sum.
///
/// The gap-crossing sums are not gated. A half-line layout has no left
/// tail, so `LeftTail` is 0 there.
pub fn modified_objective(
    d: &DistributionSpec,
    layout: &TruncationLayout,
    speeds: &SearchSpeeds,
    penalties: &PenaltyParams,
    which: ObjectiveKind,
) -> Result<f64> {
    penalties.check_counts(layout)?;
    let t = make_truncated(*d, layout.clone())?;
    let left = || -> Result<f64> {
        if layout.is_half_line() {
            return Ok(0.0);
        }
        Ok(tail_sweep(&t, speeds, true)? + tail_penalty(layout.left_gaps(), &penalties.left, speeds))
    };
    let right = || -> Result<f64> {
        Ok(tail_sweep(&t, speeds, false)? + tail_penalty(layout.right_gaps(), &penalties.right, speeds))
    };
    match which {
        ObjectiveKind::LeftTail => left(),
        ObjectiveKind::RightTail => right(),
        ObjectiveKind::Total => Ok(left()? + right()?),
    }
}

/// `E(τ₀) + E(τ_Ň)` without penalties (half-line: `E(τ_{N+1})`).
pub fn unpenalized_objective(d: &DistributionSpec, layout: &TruncationLayout, speeds: &SearchSpeeds) -> Result<f64> {
    let t = make_truncated(*d, layout.clone())?;
    let range = time_indices(layout);
    let last = expected_time(&t, speeds, *range.end())?;
    if layout.is_half_line() {
        Ok(last)
    } else {
        Ok(expected_time(&t, speeds, 0)? + last)
    }
}

/// Something [`newton_minimize`] can minimize.
pub trait Objective {
    /// Objective value; non-finite marks an unusable point.
    fn value(&self, x: &[f64]) -> f64;

    /// Strict feasibility of an iterate. Stencil points are not checked.
    fn is_feasible(&self, _x: &[f64]) -> bool {
        true
    }
}

/// Unconstrained objective from a closure.
pub struct FnObjective<F>(pub F);

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// Penalized objective over the mesh points of a template layout.
///
/// Stencil points may leave the ordered region; the formulas stay defined
/// there as long as some probability mass survives.
pub struct MeshObjective<'a> {
    pub dist: DistributionSpec,
    pub template: &'a TruncationLayout,
    pub speeds: SearchSpeeds,
    pub penalties: &'a PenaltyParams,
    pub which: ObjectiveKind,
}

impl MeshObjective<'_> {
    fn layout_unchecked(&self, x: &[f64]) -> TruncationLayout {
        let (m, n) = (self.template.left_count(), self.template.right_count());
        let left = (0..m).map(|j| Gap::new(x[j], x[m + j])).collect();
        let right = (0..n).map(|i| Gap::new(x[2 * m + i], x[2 * m + n + i])).collect();
        TruncationLayout::from_parts_unchecked(self.template.a(), self.template.b(), left, right)
    }
}

impl Objective for MeshObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let layout = self.layout_unchecked(x);
        modified_objective(&self.dist, &layout, &self.speeds, self.penalties, self.which)
            .unwrap_or(f64::NAN)
    }

    fn is_feasible(&self, x: &[f64]) -> bool {
        self.template.with_mesh_points(x).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    /// Relative finite-difference step; the absolute step is
    /// `fd_step · max(1, |x_i|)`.
    pub fd_step: f64,
    /// Relative step of the second differences. Central second differences
    /// are exact on quadratics at any step, so a coarse step mostly removes
    /// rounding noise, which grows like `1/h²`.
    pub hessian_step: f64,
    pub initial_damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            grad_tol: 1e-8,
            step_tol: 1e-10,
            fd_step: 1e-5,
            hessian_step: 1e-2,
            initial_damping: 0.0,
        }
    }
}

impl NewtonOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0
            || !(self.grad_tol > 0.0)
            || !(self.step_tol > 0.0)
            || !(self.fd_step > 0.0)
            || !(self.hessian_step > 0.0)
            || !(self.initial_damping >= 0.0)
        {
            return Err(Error::Config(format!("invalid Newton options {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    /// Damping used for the step that produced this iterate.
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub x_star: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

fn fd_steps(x: &[f64], rel: f64) -> Vec<f64> {
    x.iter().map(|v| rel * v.abs().max(1.0)).collect()
}

fn eval<Q: Objective + ?Sized>(q: &Q, x: &[f64]) -> Result<f64> {
    let v = q.value(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { point: x.to_vec() })
    }
}

/// Central-difference gradient with step `fd_step · max(1, |x_i|)`.
pub fn fd_gradient<Q: Objective + ?Sized>(q: &Q, x: &[f64], fd_step: f64) -> Result<Vec<f64>> {
    let h = fd_steps(x, fd_step);
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h[i];
        let up = eval(q, &probe)?;
        probe[i] = x[i] - h[i];
        let down = eval(q, &probe)?;
        probe[i] = x[i];
        g.push((up - down) / (2.0 * h[i]));
    }
    Ok(g)
}

/// Central second differences with step `step · max(1, |x_i|)`, row-major
/// `n × n`: three points on the diagonal, four for each mixed partial.
pub fn fd_hessian_raw<Q: Objective + ?Sized>(q: &Q, x: &[f64], step: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let h = fd_steps(x, step);
    let center = eval(q, x)?;
    let mut probe = x.to_vec();
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        probe[i] = x[i] + h[i];
        let up = eval(q, &probe)?;
        probe[i] = x[i] - h[i];
        let down = eval(q, &probe)?;
        probe[i] = x[i];
        hess[i * n + i] = (up - 2.0 * center + down) / (h[i] * h[i]);
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                probe[i] = x[i] + si * h[i];
                probe[j] = x[j] + sj * h[j];
                let v = eval(q, &probe);
                probe[i] = x[i];
                probe[j] = x[j];
                v
            };
            let mixed = corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?;
            hess[i * n + j] = mixed / (4.0 * h[i] * h[j]);
        }
    }
    Ok(hess)
}

/// Symmetrized finite-difference Hessian `(H + Hᵀ)/2`, row-major.
pub fn fd_hessian<Q: Objective + ?Sized>(q: &Q, x: &[f64], step: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let raw = fd_hessian_raw(q, x, step)?;
    let mut sym = raw.clone();
    for i in 0..n {
        for j in 0..n {
            sym[i * n + j] = 0.5 * (raw[i * n + j] + raw[j * n + i]);
        }
    }
    Ok(sym)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn solve_damped(hess: &[f64], grad: &[f64], damping: f64) -> Option<Vec<f64>> {
    let n = grad.len();
    let mut a = DMatrix::from_row_slice(n, n, hess);
    for i in 0..n {
        a[(i, i)] += damping;
    }
    let rhs = DVector::from_iterator(n, grad.iter().map(|g| -g));
    let s = a.lu().solve(&rhs)?;
    s.iter().all(|v| v.is_finite()).then(|| s.iter().copied().collect())
}

/// Damped Newton iteration.
///
/// Each iteration solves `(H + λI) s = −∇Q`. The undamped step is tried
/// first (or `initial_damping`); if the solve fails, no feasible point is
/// reached within [`MAX_HALVINGS`] halvings, or `Q` goes up, λ restarts at
/// 1e-6 and doubles. Stops when `‖∇Q‖ ≤ grad_tol` (converged), when the
/// accepted step is shorter than `step_tol`, or after `max_iterations`.
pub fn newton_minimize<Q: Objective + ?Sized>(
    q: &Q,
    x0: &[f64],
    opts: &NewtonOptions,
) -> Result<OptimizationResult> {
    opts.validate()?;
    if !q.is_feasible(x0) {
        return Err(Error::Infeasible(format!("{x0:?}")));
    }
    let mut x = x0.to_vec();
    let mut value = eval(q, &x)?;
    if x.is_empty() {
        return Ok(OptimizationResult {
            x_star: x,
            objective: value,
            grad_norm: 0.0,
            iterations: 0,
            converged: true,
            trace: vec![TraceRow {
                iteration: 0,
                objective: value,
                grad_norm: 0.0,
                damping: 0.0,
            }],
        });
    }
    let mut grad = fd_gradient(q, &x, opts.fd_step)?;
    let mut grad_norm = norm(&grad);
    let mut trace = vec![TraceRow {
        iteration: 0,
        objective: value,
        grad_norm,
        damping: 0.0,
    }];
    let mut iterations = 0;

    while iterations < opts.max_iterations && grad_norm > opts.grad_tol {
        let hess = fd_hessian(q, &x, opts.hessian_step)?;
        let mut damping = opts.initial_damping;
        let mut accepted: Option<(Vec<f64>, f64, f64)> = None;

        for _ in 0..MAX_DAMPING_ROUNDS {
            if let Some(mut step) = solve_damped(&hess, &grad, damping) {
                let mut halvings = 0;
                let mut candidate: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + s).collect();
                while !q.is_feasible(&candidate) && halvings < MAX_HALVINGS {
                    step.iter_mut().for_each(|s| *s *= 0.5);
                    candidate = x.iter().zip(&step).map(|(a, s)| a + s).collect();
                    halvings += 1;
                }
                if q.is_feasible(&candidate) {
                    let v = q.value(&candidate);
                    if v.is_finite() && v <= value {
                        accepted = Some((candidate, v, norm(&step)));
                        break;
                    }
                }
            }
            damping = if damping < FIRST_DAMPING { FIRST_DAMPING } else { 2.0 * damping };
        }

        let Some((next, next_value, step_norm)) = accepted else {
            return Err(Error::Stall {
                iteration: iterations + 1,
                halvings: MAX_HALVINGS,
                trace,
            });
        };
        iterations += 1;
        x = next;
        value = next_value;
        grad = fd_gradient(q, &x, opts.fd_step)?;
        grad_norm = norm(&grad);
        trace.push(TraceRow {
            iteration: iterations,
            objective: value,
            grad_norm,
            damping,
        });
        if step_norm <= opts.step_tol {
            break;
        }
    }

    Ok(OptimizationResult {
        converged: grad_norm <= opts.grad_tol,
        x_star: x,
        objective: value,
        grad_norm,
        iterations,
        trace,
    })
}

/// Outcome of [`optimize_layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutOptimum {
    pub layout: TruncationLayout,
    pub result: OptimizationResult,
    /// `E(τ₀) + E(τ_Ň)` at the optimized layout.
    pub unpenalized: f64,
    /// The same quantity at the template.
    pub unpenalized_start: f64,
}

/// Minimizes the penalized total objective over all mesh points of
/// `template`, starting from the template itself.
pub fn optimize_layout(
    d: &DistributionSpec,
    template: &TruncationLayout,
    speeds: &SearchSpeeds,
    penalties: &PenaltyParams,
    opts: &NewtonOptions,
) -> Result<LayoutOptimum> {
    penalties.validate()?;
    penalties.check_counts(template)?;
    let objective = MeshObjective {
        dist: *d,
        template,
        speeds: *speeds,
        penalties,
        which: ObjectiveKind::Total,
    };
    let result = newton_minimize(&objective, &template.mesh_points(), opts)?;
    let layout = template.with_mesh_points(&result.x_star)?;
    Ok(LayoutOptimum {
        unpenalized: unpenalized_objective(d, &layout, speeds)?,
        unpenalized_start: unpenalized_objective(d, template, speeds)?,
        layout,
        result,
    })
}

/// Writes `iteration,objective,grad_norm,damping` rows with a header.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration,objective,grad_norm,damping")?;
    for r in trace {
        writeln!(
            out,
            "{},{},{},{}",
            r.iteration,
            crate::format::sig(r.objective, 12),
            crate::format::sig(r.grad_norm, 6),
            crate::format::sig(r.damping, 6)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise;

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
    fn penalty_validation() {
        assert!(PenaltyParams::uniform(1, 1, 0.0).is_err());
        assert!(PenaltyParams::uniform(1, 1, 1.0).is_err());
        assert!(PenaltyParams::uniform(2, 2, 0.1).is_ok());
        let d = DistributionSpec::normal(0.0, 4.53).unwrap();
        let p = PenaltyParams::uniform(1, 2, 0.1).unwrap();
        let r = modified_objective(&d, &example1(), &SearchSpeeds::default(), &p, ObjectiveKind::Total);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn vanishing_penalties_recover_expectation() {
        let d = DistributionSpec::normal(0.0, 4.53).unwrap();
        let s = SearchSpeeds::default();
        let layout = example1();
        let p = PenaltyParams::uniform(2, 2, 1e-12).unwrap();
        let t = make_truncated(d, layout.clone()).unwrap();
        let left = modified_objective(&d, &layout, &s, &p, ObjectiveKind::LeftTail).unwrap();
        assert!((left - expected_time(&t, &s, 0).unwrap()).abs() < 1e-9);
        let right = modified_objective(&d, &layout, &s, &p, ObjectiveKind::RightTail).unwrap();
        assert!((right - expected_time(&t, &s, 5).unwrap()).abs() < 1e-9);
        let total = modified_objective(&d, &layout, &s, &p, ObjectiveKind::Total).unwrap();
        assert!((total - left - right).abs() < 1e-14);
    }

    #[test]
    fn objective_matches_term_by_term_sum() {
        let d = DistributionSpec::normal(0.0, 4.53).unwrap();
        let s = SearchSpeeds::default();
        let layout = example1();
        let p = PenaltyParams::uniform(2, 2, 0.1).unwrap();
        let value = modified_objective(&d, &layout, &s, &p, ObjectiveKind::Total).unwrap();
        // literal G-difference expectations plus hand-expanded penalties
        let e0 = piecewise::expected_time(&d, &layout, &s, 0).unwrap();
        let e5 = piecewise::expected_time(&d, &layout, &s, 5).unwrap();
        let widths = [2.0f64, 5.0, 5.0, 6.0];
        let endpoints = [-6.0f64, -4.0, -15.0, -10.0, 2.0, 7.0, 11.0, 17.0];
        let expected = e0
            + e5
            + widths.iter().map(|w| 0.1 * w * w / 25.0).sum::<f64>()
            + endpoints.iter().map(|e| 0.1 * e * e).sum::<f64>();
        assert!(value > 0.0);
        assert!((value - expected).abs() < 1e-12, "{value} vs {expected}");
    }

    #[test]
    fn zero_gap_objective_is_sweep_only() {
        let d = DistributionSpec::normal(0.0, 4.53).unwrap();
        let s = SearchSpeeds::default();
        let layout = TruncationLayout::new(-20.0, 30.0, vec![], vec![]).unwrap();
        let p = PenaltyParams::uniform(0, 0, 0.1).unwrap();
        let v = modified_objective(&d, &layout, &s, &p, ObjectiveKind::Total).unwrap();
        let base = crate::search_model::baseline_expectation(&d, -20.0, 30.0, &s, crate::truncation::Side::Left).unwrap()
            + crate::search_model::baseline_expectation(&d, -20.0, 30.0, &s, crate::truncation::Side::Right).unwrap();
        assert!((v - base).abs() < 1e-13);
    }

    #[test]
    fn quadratic_derivatives() {
        let q = FnObjective(|x: &[f64]| x.iter().map(|v| v * v).sum());
        let g = fd_gradient(&q, &[1.0, 2.0], 1e-5).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-6 && (g[1] - 4.0).abs() < 1e-6);
        let h = fd_hessian(&q, &[1.0, 2.0], NewtonOptions::default().hessian_step).unwrap();
        for (k, v) in h.iter().enumerate() {
            let want = if k % 3 == 0 { 2.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-6, "{h:?}");
        }
    }

    #[test]
    fn non_finite_stencil_is_reported() {
        let q = FnObjective(|x: &[f64]| if x[0] > 1.0 { f64::NAN } else { x[0] });
        match fd_gradient(&q, &[1.0], 1e-5) {
            Err(Error::Evaluation { point }) => assert!(point[0] > 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mesh_gradient_matches_forward_difference() {
        let d = DistributionSpec::normal(0.0, 4.53).unwrap();
        let layout = example1();
        let p = PenaltyParams::uniform(2, 2, 0.1).unwrap();
        let q = MeshObjective {
            dist: d,
            template: &layout,
            speeds: SearchSpeeds::default(),
            penalties: &p,
            which: ObjectiveKind::Total,
        };
        let x = layout.mesh_points();
        let g = fd_gradient(&q, &x, 1e-5).unwrap();
        let f0 = q.value(&x);
        for i in 0..x.len() {
            let mut probe = x.clone();
            let h = 1e-7 * x[i].abs().max(1.0);
            probe[i] += h;
            let forward = (q.value(&probe) - f0) / h;
            assert!((forward - g[i]).abs() <= 1e-4 * g[i].abs().max(1.0), "{i}: {forward} vs {}", g[i]);
        }
        let raw = fd_hessian_raw(&q, &x, 1e-2).unwrap();
        let n = x.len();
        let scale = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..n {
                assert!((raw[i * n + j] - raw[j * n + i]).abs() <= 1e-6 * (1.0 + scale));
            }
        }
    }

    #[test]
    fn newton_solves_quadratic_in_one_step() {
        let c = [3.0, -1.5, 0.25];
        let q = FnObjective(move |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum());
        let r = newton_minimize(&q, &[10.0, 10.0, -7.0], &NewtonOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        for (a, b) in r.x_star.iter().zip(&c) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn newton_handles_rosenbrock() {
        let q = FnObjective(|x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2));
        let r = newton_minimize(&q, &[-1.2, 1.0], &NewtonOptions::default()).unwrap();
        assert!(r.converged, "{:?}", r.trace.last());
        assert!(r.grad_norm <= 1e-8);
        assert!((r.x_star[0] - 1.0).abs() < 1e-6 && (r.x_star[1] - 1.0).abs() < 1e-6);
        assert!(r.trace.windows(2).all(|w| w[1].objective <= w[0].objective));
    }

    struct Boxed;
    impl Objective for Boxed {
        fn value(&self, x: &[f64]) -> f64 {
            (x[0] + 5.0).powi(2)
        }
        fn is_feasible(&self, x: &[f64]) -> bool {
            x[0] > 0.0
        }
    }

    #[test]
    fn newton_stays_feasible() {
        assert!(matches!(
            newton_minimize(&Boxed, &[-1.0], &NewtonOptions::default()),
            Err(Error::Infeasible(_))
        ));
        let opts = NewtonOptions {
            max_iterations: 30,
            ..NewtonOptions::default()
        };
        let r = newton_minimize(&Boxed, &[4.0], &opts).unwrap();
        assert!(!r.converged);
        assert!(r.x_star[0] > 0.0);
        assert!(r.trace.windows(2).all(|w| w[1].objective <= w[0].objective));
    }

    #[test]
    fn zero_gap_template_is_returned_unchanged() {
        let d = DistributionSpec::normal(0.0, 4.53).unwrap();
        let layout = TruncationLayout::new(-20.0, 30.0, vec![], vec![]).unwrap();
        let p = PenaltyParams::uniform(0, 0, 0.1).unwrap();
        let out = optimize_layout(&d, &layout, &SearchSpeeds::default(), &p, &NewtonOptions::default()).unwrap();
        assert_eq!(out.layout, layout);
        assert_eq!(out.result.iterations, 0);
    }

    #[test]
    fn trace_csv_layout() {
        let rows = [TraceRow {
            iteration: 0,
            objective: 1.5,
            grad_norm: 0.25,
            damping: 0.0,
        }];
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "iteration,objective,grad_norm,damping\n0,1.5,0.25,0\n");
    }
}
