//! Weak KAM objects and the finite-time convergence experiments.
//!
//! This module computes the unique forward weak KAM solution `u_plus`
//! (two independent routes), classifies initial data by the sign of
//! `min (phi - u_plus)`, extracts discrete Aubry sets, builds the two
//! initial-datum constructions whose backward evolution reaches a stationary
//! solution in finite time, evaluates the analytic reach-time bounds, and
//! measures reach times on computed traces.

use rayon::prelude::*;
use serde::Serialize;

use crate::action::{ActionField, PointDatum, RecordSpec};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid};
use crate::real::Real;
use crate::semigroup::{Direction, EvolutionTrace, Semigroup};

/// How to compute the forward weak KAM solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Iterate the forward semigroup from zero to its fixed point.
    FixedPoint,
    /// Iterate the backward semigroup of the dual Hamiltonian from zero and
    /// negate the fixed point.
    Duality,
}

/// Compute `u_plus` by the chosen route: iterate until the per-step sup
/// residual drops below `tol` (default `1e-8`), capped at `max_steps`.
pub fn compute_u_plus<R: Real>(
    sg: &Semigroup<R>,
    route: Route,
    tol: R,
    max_steps: usize,
) -> Result<GridFunction<R>> {
    match route {
        Route::FixedPoint => {
            let u = iterate_to_fixed_point(sg, Direction::Forward, tol, max_steps, "u_plus fixed-point route")?;
            Ok(u)
        }
        Route::Duality => {
            let dual = sg.hamiltonian().dual();
            let sg_dual = Semigroup::new(&dual, sg.grid(), *sg.params())?;
            let v = iterate_to_fixed_point(
                &sg_dual,
                Direction::Backward,
                tol,
                max_steps,
                "u_plus duality route",
            )?;
            Ok(v.map(|x| -x))
        }
    }
}

fn iterate_to_fixed_point<R: Real>(
    sg: &Semigroup<R>,
    dir: Direction,
    tol: R,
    max_steps: usize,
    op: &str,
) -> Result<GridFunction<R>> {
    let mut u = GridFunction::zero(sg.grid());
    let mut history = std::collections::VecDeque::with_capacity(8);
    for _step in 0..max_steps {
        let v = match dir {
            Direction::Forward => sg.step_forward(&u)?,
            Direction::Backward => sg.step_backward(&u)?,
        };
        let res = v.sup_distance(&u);
        if history.len() == 8 {
            history.pop_front();
        }
        history.push_back(res.to_f64_lossy());
        if res <= tol {
            return Ok(v);
        }
        u = v;
    }
    Err(Error::NoConvergence {
        op: op.to_string(),
        steps: max_steps,
        history: history.into_iter().collect(),
    })
}

/// Sign class of `min (phi - u_plus)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    /// Zero minimum gap: bounded evolution.
    A,
    /// Positive gap: blow-up to plus infinity.
    APlus,
    /// Negative gap: blow-up to minus infinity.
    AMinus,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Classification<R: Real> {
    pub label: ClassLabel,
    pub min_gap: R,
    pub tol_band: R,
}

/// Classify a datum against `u_plus`. The band defaults to
/// `3 dx Lip(phi)` and should be widened by the scheme error when
/// classifying evolved slices.
pub fn classify<R: Real>(
    phi: &GridFunction<R>,
    u_plus: &GridFunction<R>,
    tol_band: Option<R>,
) -> Classification<R> {
    let dx: R = phi.grid().dx();
    let band = tol_band.unwrap_or_else(|| R::lit(3.0) * dx * phi.lipschitz_estimate());
    let min_gap = phi.min_gap(u_plus);
    let label = if min_gap.abs() <= band {
        ClassLabel::A
    } else if min_gap > band {
        ClassLabel::APlus
    } else {
        ClassLabel::AMinus
    };
    Classification {
        label,
        min_gap,
        tol_band: band,
    }
}

/// Discrete Aubry set: the nodes where `phi - u_plus` sits at its minimum.
///
/// The default tolerance adapts to the contact geometry: it is the minimum
/// gap plus `3 dx` times the one-sided slope of the gap at its argmin (plus a
/// rounding floor), so a linear touch keeps an `O(dx)` detection radius while
/// a quadratic tangency keeps an `O(sqrt(dx^2)) = O(dx)` node set instead of
/// ballooning to `O(sqrt(dx))`.
pub fn aubry_set<R: Real>(
    phi: &GridFunction<R>,
    u_plus: &GridFunction<R>,
    tol: Option<R>,
) -> Result<Vec<usize>> {
    let cls = classify(phi, u_plus, None);
    if cls.label != ClassLabel::A {
        return Err(Error::Inconsistent(format!(
            "aubry set requested for a datum of class {:?} (min gap {})",
            cls.label,
            cls.min_gap.to_f64_lossy()
        )));
    }
    let n = phi.grid().len();
    let dx: R = phi.grid().dx();
    let gap: Vec<R> = (0..n).map(|i| phi.value(i) - u_plus.value(i)).collect();
    let (argmin, min_gap) = gap
        .iter()
        .enumerate()
        .fold((0usize, R::infinity()), |(bi, bv), (i, v)| {
            if *v < bv {
                (i, *v)
            } else {
                (bi, bv)
            }
        });

    let tol = tol.unwrap_or_else(|| {
        let prev = gap[(argmin + n - 1) % n];
        let next = gap[(argmin + 1) % n];
        let slope = ((next - min_gap).abs().max((prev - min_gap).abs())) / dx;
        let floor = R::lit(1e-12) * (R::one() + phi.sup_norm() + u_plus.sup_norm());
        min_gap + R::lit(3.0) * dx * slope + floor
    });

    let set: Vec<usize> = (0..n).filter(|i| gap[*i] <= tol).collect();
    if set.is_empty() {
        return Err(Error::Inconsistent(
            "empty discrete Aubry set for a class-A datum".into(),
        ));
    }
    Ok(set)
}

/// Circle distance from each node to a node set, in coordinate units.
fn distances_to_set<R: Real>(grid: PeriodicGrid, set: &[usize]) -> Vec<R> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            set.iter()
                .map(|a| grid.circle_distance::<R>(i, *a))
                .fold(R::infinity(), |acc, d| acc.min(d))
        })
        .collect()
}

/// Whether the contact set of `u` is contained in the contact set of `phi`
/// (both against `u_plus`), i.e. `phi` belongs to the class attached to `u`.
pub fn aubry_compatible<R: Real>(
    phi: &GridFunction<R>,
    u: &GridFunction<R>,
    u_plus: &GridFunction<R>,
) -> Result<bool> {
    let i_u = aubry_set(u, u_plus, None)?;
    let i_phi = aubry_set(phi, u_plus, None)?;
    let mut in_phi = vec![false; phi.grid().len()];
    for i in &i_phi {
        in_phi[*i] = true;
    }
    Ok(i_u.iter().all(|i| in_phi[*i]))
}

/// A datum pinned to a stationary solution near its Aubry set.
#[derive(Clone, Debug)]
pub struct PinnedDatum<R: Real> {
    pub datum: GridFunction<R>,
    /// Nodes of the pinned neighbourhood `O`.
    pub pinned_nodes: Vec<usize>,
    /// Neighbourhood radius `eps / max(Lip(phi), Lip(u))`.
    pub radius: R,
}

/// Build a perturbation of `phi` that equals the stationary solution `u` on a
/// neighbourhood of the Aubry set of `u`, stays strictly above `u_plus`
/// elsewhere, and stays within `eps` of `phi` in sup norm. The three clauses
/// are re-verified on the grid after construction.
pub fn construct_pinned_datum<R: Real>(
    u: &GridFunction<R>,
    phi: &GridFunction<R>,
    u_plus: &GridFunction<R>,
    eps: R,
) -> Result<PinnedDatum<R>> {
    if !(eps > R::zero()) {
        return Err(Error::InvalidParams("eps must be positive".into()));
    }
    if !aubry_compatible(phi, u, u_plus)? {
        return Err(Error::Inconsistent(
            "phi does not contain the contact set of u".into(),
        ));
    }
    let grid = phi.grid();
    let lip = phi.lipschitz_estimate().max(u.lipschitz_estimate()).max(R::lit(1e-12));
    let r = eps / lip;
    let i_u = aubry_set(u, u_plus, None)?;
    let dist = distances_to_set::<R>(grid, &i_u);

    let n = grid.len();
    let two_r = R::lit(2.0) * r;
    let mut values = Vec::with_capacity(n);
    let mut pinned = Vec::new();
    for i in 0..n {
        let d = dist[i];
        if d <= r {
            values.push(u.value(i));
            pinned.push(i);
        } else if d <= two_r {
            let s = (d - r) / r;
            let blend = u.value(i) + s * (phi.value(i) - u.value(i));
            values.push(phi.value(i).max(blend));
        } else {
            values.push(phi.value(i));
        }
    }
    let datum = GridFunction::new(grid, values)?;
    verify_pinned_clauses(&datum, u, phi, u_plus, eps, &pinned)?;
    Ok(PinnedDatum {
        datum,
        pinned_nodes: pinned,
        radius: r,
    })
}

/// Check the three pinned-datum clauses for any candidate (including the
/// closed-form profile shipped with the quadratic example). Returns the
/// pinned node set used for the check.
pub fn verify_pinned_datum<R: Real>(
    candidate: &GridFunction<R>,
    u: &GridFunction<R>,
    phi: &GridFunction<R>,
    u_plus: &GridFunction<R>,
    eps: R,
) -> Result<Vec<usize>> {
    let lip = phi.lipschitz_estimate().max(u.lipschitz_estimate()).max(R::lit(1e-12));
    let r = eps / lip;
    let i_u = aubry_set(u, u_plus, None)?;
    let dist = distances_to_set::<R>(candidate.grid(), &i_u);
    let pinned: Vec<usize> = (0..candidate.grid().len())
        .filter(|i| dist[*i] <= r)
        .collect();
    verify_pinned_clauses(candidate, u, phi, u_plus, eps, &pinned)?;
    Ok(pinned)
}

fn verify_pinned_clauses<R: Real>(
    candidate: &GridFunction<R>,
    u: &GridFunction<R>,
    phi: &GridFunction<R>,
    u_plus: &GridFunction<R>,
    eps: R,
    pinned: &[usize],
) -> Result<()> {
    let scale = R::one() + u.sup_norm();
    let tol_eq = R::lit(1e-12) * scale;
    for i in pinned {
        if (candidate.value(*i) - u.value(*i)).abs() > tol_eq {
            return Err(Error::Construction {
                clause: "i".into(),
                detail: format!(
                    "candidate differs from the stationary solution at pinned node {i}",
                    i = i
                ),
            });
        }
    }
    let mut in_pinned = vec![false; candidate.grid().len()];
    for i in pinned {
        in_pinned[*i] = true;
    }
    for i in 0..candidate.grid().len() {
        if !in_pinned[i] && candidate.value(i) <= u_plus.value(i) {
            return Err(Error::Construction {
                clause: "ii".into(),
                detail: format!(
                    "candidate fails to stay above the forward solution at node {i} ({} <= {})",
                    candidate.value(i).to_f64_lossy(),
                    u_plus.value(i).to_f64_lossy()
                ),
            });
        }
    }
    // the closed-form profile attains the bound exactly, so allow equality
    let dev = candidate.sup_distance(phi);
    if dev > eps * (R::one() + R::lit(1e-9)) {
        return Err(Error::Construction {
            clause: "iii".into(),
            detail: format!(
                "sup deviation {} exceeds eps = {}",
                dev.to_f64_lossy(),
                eps.to_f64_lossy()
            ),
        });
    }
    Ok(())
}

/// Clip a class-A datum into the `eps`-band above `u_plus`: keep `phi` where
/// `phi < u_plus + eps`, set `u_plus + eps` elsewhere. Returns the datum and
/// the node set where the original values survive.
pub fn construct_clipped_datum<R: Real>(
    phi: &GridFunction<R>,
    u_plus: &GridFunction<R>,
    eps: R,
) -> Result<(GridFunction<R>, Vec<usize>)> {
    if !(eps > R::zero()) {
        return Err(Error::InvalidParams("eps must be positive".into()));
    }
    let n = phi.grid().len();
    let mut nodes = Vec::new();
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let cap = u_plus.value(i) + eps;
        if phi.value(i) < cap {
            values.push(phi.value(i));
            nodes.push(i);
        } else {
            values.push(cap);
        }
    }
    Ok((GridFunction::new(phi.grid(), values)?, nodes))
}

/// Uniform bound on the backward evolution of class-A data at `t = 1`:
/// the max over sources `y` (every `stride`-th node, then refined near the
/// maximizer) of the point-field magnitude `|h_{y, u_plus(y)}(x, 1)|`,
/// together with `|u_plus|` itself. The default source stride is 8.
pub fn estimate_class_bound<R: Real>(
    sg: &Semigroup<R>,
    u_plus: &GridFunction<R>,
    stride: Option<usize>,
) -> Result<R> {
    let grid = sg.grid();
    let n = grid.len();
    let t = R::one();
    let stride = stride.unwrap_or(8).max(1);
    if sg.params().v_max * t < R::lit(0.5) {
        return Err(Error::InvalidParams(
            "v_max too small to cover the circle at t = 1".into(),
        ));
    }

    let field_max = |y: usize| -> Result<R> {
        let datum = PointDatum::at_node(y, u_plus.value(y));
        let field = ActionField::forward(sg, datum, t, &RecordSpec::FinalOnly)?;
        let slice = &field.slices[0];
        let mut m = R::zero();
        for i in 0..n {
            if !slice.is_masked(i) {
                m = m.max(slice.values.value(i).abs());
            }
        }
        Ok(m)
    };

    let coarse: Vec<usize> = (0..n).step_by(stride).collect();
    let coarse_max: Vec<(usize, R)> = coarse
        .par_iter()
        .map(|y| field_max(*y).map(|m| (*y, m)))
        .collect::<Result<Vec<_>>>()?;
    let (y_star, mut best) = coarse_max
        .iter()
        .fold((0usize, R::neg_infinity()), |(by, bv), (y, v)| {
            if *v > bv {
                (*y, *v)
            } else {
                (by, bv)
            }
        });

    let refine: Vec<usize> = (-7..=7)
        .map(|d| grid.wrap(y_star as isize + d))
        .filter(|y| y % stride != 0)
        .collect();
    let refined: Vec<R> = refine
        .par_iter()
        .map(|y| field_max(*y))
        .collect::<Result<Vec<_>>>()?;
    for m in refined {
        best = best.max(m);
    }
    Ok(best.max(u_plus.sup_norm()))
}

/// The uniform reach-time bound `max((1/k2) ln((c1 + 1 + |u_plus|)/eps), 1)`.
pub fn uniform_reach_bound<R: Real>(eps: R, k2: R, c1: R, u_plus_norm: R) -> R {
    let val = ((c1 + R::one() + u_plus_norm) / eps).ln() / k2;
    val.max(R::one())
}

/// Reach-time estimate for a pinned datum: with `r = eps / max(Lip phi,
/// Lip u)`, evaluate `f = min (u - u_plus)` over the nodes at circle distance
/// within `dx` of `r` from the Aubry set of `u`, and return
/// `(1/k2) ln((m0 + 1 + |u_plus|)/f)`.
pub fn reach_time_estimate<R: Real>(
    u: &GridFunction<R>,
    phi: &GridFunction<R>,
    u_plus: &GridFunction<R>,
    eps: R,
    m0: R,
    k2: R,
) -> Result<R> {
    let grid = u.grid();
    let dx: R = grid.dx();
    let lip = phi.lipschitz_estimate().max(u.lipschitz_estimate()).max(R::lit(1e-12));
    let r = eps / lip;
    let i_u = aubry_set(u, u_plus, None)?;
    let dist = distances_to_set::<R>(grid, &i_u);
    let mut f = R::infinity();
    for i in 0..grid.len() {
        if (dist[i] - r).abs() <= dx {
            f = f.min(u.value(i) - u_plus.value(i));
        }
    }
    if !f.is_finite() || f <= R::zero() {
        return Err(Error::Construction {
            clause: "ring".into(),
            detail: format!(
                "degenerate neighbourhood: min ring gap {}",
                f.to_f64_lossy()
            ),
        });
    }
    Ok(((m0 + R::one() + u_plus.sup_norm()) / f).ln() / k2)
}

/// Sup-norm bound over a family of verified stationary candidates.
pub fn sup_norm_bound<R: Real>(candidates: &[GridFunction<R>]) -> R {
    candidates
        .iter()
        .fold(R::zero(), |acc, c| acc.max(c.sup_norm()))
}

/// Check that a candidate is (numerically) a fixed point of the backward
/// semigroup over the probe horizon.
pub fn verify_stationary<R: Real>(
    sg: &Semigroup<R>,
    u: &GridFunction<R>,
    t_probe: R,
    tol: R,
) -> Result<bool> {
    let trace = sg.evolve(u, t_probe, Direction::Backward, usize::MAX)?;
    Ok(trace.final_slice().sup_distance(u) <= tol)
}

/// Measured first time a trace enters and stays within `tol` of a target.
#[derive(Clone, Debug, Serialize)]
pub struct ReachReport<R: Real> {
    pub target: String,
    pub tol: R,
    pub horizon: R,
    pub reached: bool,
    /// First recorded time from which every later recorded slice stays
    /// within `tol`; `None` when never reached.
    pub t_star: Option<R>,
    pub final_distance: R,
    pub epsilon: Option<R>,
    /// Reach-time estimate at the sharper decay rate observed for the
    /// worked profile.
    pub t0_analytic: Option<R>,
    /// Same estimate at the conservative rate from the monotonicity band.
    pub t0_analytic_alt: Option<R>,
    /// Uniform bound from the class-bound constant.
    pub uniform_bound: Option<R>,
}

/// Scan a trace for the first recorded time after which the sup distance to
/// `target` stays within `tol`.
pub fn measure_reach_time<R: Real>(
    trace: &EvolutionTrace<R>,
    target: &GridFunction<R>,
    target_id: impl Into<String>,
    tol: R,
) -> ReachReport<R> {
    let dists = trace.sup_distances_to(target);
    let mut first_ok: Option<usize> = None;
    for (i, d) in dists.iter().enumerate().rev() {
        if *d <= tol {
            first_ok = Some(i);
        } else {
            break;
        }
    }
    ReachReport {
        target: target_id.into(),
        tol,
        horizon: trace.final_time(),
        reached: first_ok.is_some(),
        t_star: first_ok.map(|i| trace.times[i]),
        final_distance: *dists.last().expect("trace is nonempty"),
        epsilon: None,
        t0_analytic: None,
        t0_analytic_alt: None,
        uniform_bound: None,
    }
}

/// Residuals of the restriction identity
/// `T^-_t datum = inf over sources y of h_{y, datum(y)}(., t)`
/// evaluated at probe nodes for a set of times. Probes the restricted
/// infimum cannot reach carry the masking sentinel, so residuals at times
/// below the identity's threshold come out huge rather than erroring.
#[derive(Clone, Debug, Serialize)]
pub struct RestrictionCheck<R: Real> {
    pub times: Vec<R>,
    pub probes: Vec<usize>,
    pub lhs: Vec<Vec<R>>,
    pub rhs: Vec<Vec<R>>,
    /// Max absolute difference per time.
    pub residuals: Vec<R>,
    /// Sources actually used after subsampling.
    pub sources: Vec<usize>,
}

impl<R: Real> RestrictionCheck<R> {
    /// Residual at the recorded time nearest `t`.
    pub fn residual_at(&self, t: R) -> R {
        let mut best = 0;
        let mut gap = R::infinity();
        for (i, ti) in self.times.iter().enumerate() {
            let d = (*ti - t).abs();
            if d < gap {
                gap = d;
                best = i;
            }
        }
        self.residuals[best]
    }

    /// Smallest recorded time from which the residual stays at or below
    /// `threshold`.
    pub fn threshold_time(&self, threshold: R) -> Option<R> {
        let mut first: Option<usize> = None;
        for (i, r) in self.residuals.iter().enumerate().rev() {
            if *r <= threshold {
                first = Some(i);
            } else {
                break;
            }
        }
        first.map(|i| self.times[i])
    }
}

/// Build a restriction check. The left side is the backward evolution of the
/// datum; the right side is the infimum of point fields over the source set,
/// which is subsampled to at most `max_sources` nodes (endpoints kept) since
/// the infimum is flat to first order around its minimizing source.
pub fn restriction_check<R: Real>(
    sg: &Semigroup<R>,
    datum: &GridFunction<R>,
    source_nodes: &[usize],
    times: &[R],
    probes: Option<Vec<usize>>,
    max_sources: usize,
) -> Result<RestrictionCheck<R>> {
    let grid = sg.grid();
    let n = grid.len();
    let dt = sg.params().dt;
    if source_nodes.is_empty() {
        return Err(Error::InvalidParams("empty source set".into()));
    }
    let mut times: Vec<R> = times.to_vec();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let three_dt = R::lit(3.0) * dt;
    if times.first().map(|t| *t < three_dt).unwrap_or(true) {
        return Err(Error::InvalidParams(
            "restriction check needs times at or above 3 dt".into(),
        ));
    }

    let probes = probes.unwrap_or_else(|| (0..n).step_by((n / 32).max(1)).collect());
    let sources = subsample(source_nodes, max_sources.max(2));

    // snap requested times to step counts
    let step_of: Vec<usize> = times
        .iter()
        .map(|t| (*t / dt).to_f64_lossy().round() as usize)
        .collect();
    let t_snapped: Vec<R> = step_of.iter().map(|s| dt * R::lit(*s as f64)).collect();
    let last_step = *step_of.last().expect("times nonempty");

    // left side: evolve the datum, grabbing probe values at requested steps
    let mut lhs: Vec<Vec<R>> = Vec::with_capacity(times.len());
    {
        let mut cur = datum.clone();
        let mut want = 0usize;
        if step_of[0] == 0 {
            return Err(Error::InvalidParams("times must be positive".into()));
        }
        for s in 1..=last_step {
            cur = sg.step_backward(&cur)?;
            while want < step_of.len() && step_of[want] == s {
                lhs.push(probes.iter().map(|p| cur.value(*p)).collect());
                want += 1;
            }
        }
    }

    // right side: min over point fields from the sources
    let t_max = *t_snapped.last().expect("times nonempty");
    let per_source: Vec<Vec<Vec<Option<R>>>> = sources
        .par_iter()
        .map(|y| -> Result<Vec<Vec<Option<R>>>> {
            let field = ActionField::forward(
                sg,
                PointDatum::at_node(*y, datum.value(*y)),
                t_max,
                &RecordSpec::Times(t_snapped.clone()),
            )?;
            let mut rows = Vec::with_capacity(t_snapped.len());
            for t in &t_snapped {
                let (slice, _) = field.slice_nearest(*t);
                rows.push(
                    probes
                        .iter()
                        .map(|p| {
                            if slice.is_masked(*p) {
                                None
                            } else {
                                Some(slice.values.value(*p))
                            }
                        })
                        .collect(),
                );
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;

    // probes outside every source's reachability cone keep the masking
    // sentinel: the restricted infimum is effectively infinite there, which
    // is exactly the early-time failure mode of the identity
    let mut rhs: Vec<Vec<R>> = Vec::with_capacity(times.len());
    for ti in 0..t_snapped.len() {
        let mut row = Vec::with_capacity(probes.len());
        for pi in 0..probes.len() {
            let mut best = R::infinity();
            for src in &per_source {
                if let Some(v) = src[ti][pi] {
                    best = best.min(v);
                }
            }
            if !best.is_finite() {
                best = R::lit(crate::action::MASK_BIG);
            }
            row.push(best);
        }
        rhs.push(row);
    }

    let residuals: Vec<R> = lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| {
            l.iter()
                .zip(r)
                .fold(R::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
        })
        .collect();

    Ok(RestrictionCheck {
        times: t_snapped,
        probes,
        lhs,
        rhs,
        residuals,
        sources,
    })
}

/// One-shot restriction residual at a single time.
pub fn restriction_residual<R: Real>(
    sg: &Semigroup<R>,
    datum: &GridFunction<R>,
    source_nodes: &[usize],
    t: R,
    max_sources: usize,
) -> Result<R> {
    let check = restriction_check(sg, datum, source_nodes, &[t], None, max_sources)?;
    Ok(check.residuals[0])
}

fn subsample(nodes: &[usize], max: usize) -> Vec<usize> {
    if nodes.len() <= max {
        return nodes.to_vec();
    }
    let stride = nodes.len().div_ceil(max);
    let mut out: Vec<usize> = nodes.iter().copied().step_by(stride).collect();
    let last = *nodes.last().expect("nonempty");
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}
