//! Backward and forward solution semigroups by semi-Lagrangian dynamic
//! programming.
//!
//! One backward step computes, at every node `x`,
//!
//! ```text
//! U'(x) = min_v  w(v),   w(v) = U(x - v dt) + dt L(x, w(v), v)
//! ```
//!
//! with the implicit scalar equation resolved per candidate velocity. The
//! forward step mirrors this with a max over `v` and
//! `w = U(x + v dt) - dt L(x, w, v)`. Because `|dL/du| <= k1` and the step
//! enforces `dt k1 < 1`, the scalar map is a contraction: for Lagrangians
//! affine in `u` (the whole built-in catalog) the fixed point is written in
//! closed form, otherwise it is iterated from `w0 = U(foot)`.
//!
//! Velocities are sampled uniformly on `[-v_max, v_max]` (an odd count, so
//! the resting velocity is always a candidate), scanned in order of
//! increasing `|v|` so argmin ties break toward smaller speeds, and the
//! discrete argmin is polished by a golden-section pass, the objective being
//! convex in `v`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, InterpOrder, PeriodicGrid};
use crate::model::{AffineNodeLag, ContactHamiltonian, ContactLagrangian};
use crate::real::Real;

/// Which solution semigroup a step belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `T^-`: infimum over arrival curves; evolves initial data forward in time.
    Backward,
    /// `T^+`: supremum over departure curves.
    Forward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemigroupParams<R: Real> {
    /// Time step; must satisfy `dt * k1 < 1`.
    pub dt: R,
    /// Velocity search radius; should dominate the characteristic speeds of
    /// the data actually evolved.
    pub v_max: R,
    /// Number of uniform velocity samples (odd, so `v = 0` is sampled).
    pub n_v: usize,
    /// Relative tolerance for the per-step fixed point.
    pub fp_tol: R,
    pub fp_max_iter: usize,
    pub interp: InterpOrder,
    /// Golden-section polish of the velocity argmin.
    pub refine: bool,
}

impl<R: Real> SemigroupParams<R> {
    /// Defaults for a Hamiltonian and grid at a chosen velocity radius:
    /// `dt = min(0.5 dx / v_max, 0.5 / k1)`, 129 velocity samples.
    pub fn suggested(ham: &ContactHamiltonian<R>, grid: PeriodicGrid, v_max: R) -> Self {
        let half = R::lit(0.5);
        let dx: R = grid.dx();
        let dt = (half * dx / v_max).min(half / ham.k1());
        Self {
            dt,
            v_max,
            n_v: 129,
            fp_tol: R::lit(1e-12),
            fp_max_iter: 60,
            interp: InterpOrder::Linear,
            refine: true,
        }
    }

    /// Defaults for point-datum action fields: the step is enlarged to
    /// `dx / v_max` so the extreme velocity samples advance the reachability
    /// front by exactly one cell per step and the discrete cone matches
    /// `|x - x0| <= v_max t`.
    pub fn for_point_data(ham: &ContactHamiltonian<R>, grid: PeriodicGrid, v_max: R) -> Self {
        let dx: R = grid.dx();
        let mut p = Self::suggested(ham, grid, v_max);
        p.dt = (dx / v_max).min(R::lit(0.5) / ham.k1());
        p
    }

    pub fn validate(&self, ham: &ContactHamiltonian<R>) -> Result<()> {
        if !(self.dt > R::zero()) {
            return Err(Error::InvalidParams("dt must be positive".into()));
        }
        if self.dt * ham.k1() >= R::one() {
            return Err(Error::InvalidParams(format!(
                "dt*k1 = {} >= 1 breaks the fixed-point contraction",
                (self.dt * ham.k1()).to_f64_lossy()
            )));
        }
        if !(self.v_max > R::zero()) {
            return Err(Error::InvalidParams("v_max must be positive".into()));
        }
        if self.n_v < 3 || self.n_v % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "n_v must be odd and at least 3, got {}",
                self.n_v
            )));
        }
        if !(self.fp_tol > R::zero()) || self.fp_max_iter == 0 {
            return Err(Error::InvalidParams(
                "fixed-point tolerance and iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Evolution of one initial slice under either semigroup.
///
/// Slices are recorded at a configured stride (plus the initial and final
/// slices); `times` carries the matching instants.
#[derive(Clone, Debug)]
pub struct EvolutionTrace<R: Real> {
    pub times: Vec<R>,
    pub slices: Vec<GridFunction<R>>,
    pub dt: R,
    pub params: Option<SemigroupParams<R>>,
    pub direction: Direction,
}

impl<R: Real> EvolutionTrace<R> {
    pub fn final_slice(&self) -> &GridFunction<R> {
        self.slices.last().expect("trace has at least one slice")
    }

    pub fn final_time(&self) -> R {
        *self.times.last().expect("trace has at least one slice")
    }

    /// Sup distance of every recorded slice to a target.
    pub fn sup_distances_to(&self, target: &GridFunction<R>) -> Vec<R> {
        self.slices.iter().map(|s| s.sup_distance(target)).collect()
    }

    /// Index of the recorded time nearest to `t`.
    pub fn nearest_index(&self, t: R) -> usize {
        let mut best = 0;
        let mut gap = R::infinity();
        for (i, ti) in self.times.iter().enumerate() {
            let d = (*ti - t).abs();
            if d < gap {
                gap = d;
                best = i;
            }
        }
        best
    }

    pub fn slice_nearest(&self, t: R) -> (&GridFunction<R>, R) {
        let i = self.nearest_index(t);
        (&self.slices[i], self.times[i])
    }

    /// Long-format CSV `t,x,value`.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        write!(w, "t,x,value\r\n")?;
        for (t, slice) in self.times.iter().zip(&self.slices) {
            let grid = slice.grid();
            for i in 0..grid.len() {
                let x: R = grid.node(i);
                write!(w, "{},{},{}\r\n", t, x, slice.value(i))?;
            }
        }
        Ok(())
    }

    /// JSON summary: recorded times with per-slice sup norm, min and max.
    pub fn write_summary_json(&self, mut w: impl std::io::Write) -> Result<()> {
        let times: Vec<f64> = self.times.iter().map(|t| t.to_f64_lossy()).collect();
        let sup: Vec<f64> = self.slices.iter().map(|s| s.sup_norm().to_f64_lossy()).collect();
        let min: Vec<f64> = self.slices.iter().map(|s| s.min_value().to_f64_lossy()).collect();
        let max: Vec<f64> = self.slices.iter().map(|s| s.max_value().to_f64_lossy()).collect();
        let doc = serde_json::json!({
            "times": times,
            "sup_norm": sup,
            "min": min,
            "max": max,
        });
        serde_json::to_writer(&mut w, &doc)
            .map_err(|e| Error::InvalidParams(format!("summary serialization: {e}")))?;
        Ok(())
    }
}

/// A Hamiltonian bound to a grid and step parameters; the stateless engine
/// behind both semigroups, the point-datum fields and the weak KAM module.
pub struct Semigroup<R: Real> {
    ham: ContactHamiltonian<R>,
    lag: ContactLagrangian<R>,
    grid: PeriodicGrid,
    params: SemigroupParams<R>,
}

impl<R: Real> Semigroup<R> {
    pub fn new(
        ham: &ContactHamiltonian<R>,
        grid: PeriodicGrid,
        params: SemigroupParams<R>,
    ) -> Result<Self> {
        params.validate(ham)?;
        Ok(Self {
            ham: ham.clone(),
            lag: ContactLagrangian::new(ham),
            grid,
            params,
        })
    }

    pub fn hamiltonian(&self) -> &ContactHamiltonian<R> {
        &self.ham
    }

    pub fn lagrangian(&self) -> &ContactLagrangian<R> {
        &self.lag
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn params(&self) -> &SemigroupParams<R> {
        &self.params
    }

    /// One backward step of length `params.dt`.
    pub fn step_backward(&self, u: &GridFunction<R>) -> Result<GridFunction<R>> {
        self.step(u, Direction::Backward)
    }

    /// One forward step of length `params.dt`.
    pub fn step_forward(&self, u: &GridFunction<R>) -> Result<GridFunction<R>> {
        self.step(u, Direction::Forward)
    }

    fn step(&self, u: &GridFunction<R>, dir: Direction) -> Result<GridFunction<R>> {
        assert_eq!(u.grid(), self.grid, "slice lives on a different grid");
        let kern = self.build_kernel(self.params.dt, dir)?;
        let mut out = vec![R::zero(); self.grid.len()];
        kern.step_raw(u.values(), None, &mut out, None, None)?;
        GridFunction::new(self.grid, out)
    }

    /// Iterate the one-step operator to `horizon`, recording every
    /// `stride`-th slice (plus the first and last). A fractional trailing
    /// step is shortened to land exactly on the horizon.
    pub fn evolve(
        &self,
        phi: &GridFunction<R>,
        horizon: R,
        dir: Direction,
        stride: usize,
    ) -> Result<EvolutionTrace<R>> {
        assert_eq!(phi.grid(), self.grid, "datum lives on a different grid");
        if horizon < R::zero() {
            return Err(Error::InvalidParams("horizon must be nonnegative".into()));
        }
        let stride = stride.max(1);
        let dt = self.params.dt;
        let ratio = (horizon / dt).to_f64_lossy();
        let full_steps = (ratio + 1e-9).floor() as usize;
        let rem = horizon - dt * R::lit(full_steps as f64);
        let has_rem = rem > dt * R::lit(1e-6);

        let mut times = vec![R::zero()];
        let mut slices = vec![phi.clone()];
        if full_steps == 0 && !has_rem {
            return Ok(EvolutionTrace {
                times,
                slices,
                dt,
                params: Some(self.params),
                direction: dir,
            });
        }

        let kern = self.build_kernel(dt, dir)?;
        let n = self.grid.len();
        let mut cur = phi.values().to_vec();
        let mut next = vec![R::zero(); n];
        for s in 1..=full_steps {
            kern.step_raw(&cur, None, &mut next, None, None)?;
            std::mem::swap(&mut cur, &mut next);
            if s % stride == 0 || (s == full_steps && !has_rem) {
                times.push(dt * R::lit(s as f64));
                slices.push(GridFunction::new(self.grid, cur.clone())?);
            }
        }
        if has_rem {
            let kern_rem = self.build_kernel(rem, dir)?;
            kern_rem.step_raw(&cur, None, &mut next, None, None)?;
            std::mem::swap(&mut cur, &mut next);
            times.push(horizon);
            slices.push(GridFunction::new(self.grid, cur.clone())?);
        }
        Ok(EvolutionTrace {
            times,
            slices,
            dt,
            params: Some(self.params),
            direction: dir,
        })
    }

    /// Resolve the implicit one-step value at a single node given the foot
    /// value and velocity. Used by audits that replay recorded curves.
    pub fn one_step_value(&self, node: usize, foot_value: R, v: R, dir: Direction) -> Result<R> {
        let kern = self.build_kernel(self.params.dt, dir)?;
        kern.resolve(node, foot_value, v)
    }

    pub(crate) fn build_kernel(&self, dt: R, dir: Direction) -> Result<Kernel<'_, R>> {
        if dt * self.ham.k1() >= R::one() {
            return Err(Error::InvalidParams(
                "step length breaks the fixed-point contraction".into(),
            ));
        }
        let p = &self.params;
        let n = self.grid.len();
        let n_v = p.n_v;
        let dx: R = self.grid.dx();
        let two = R::lit(2.0);

        let mut vs = Vec::with_capacity(n_v);
        for j in 0..n_v {
            let t = R::lit(j as f64 / (n_v - 1) as f64);
            vs.push(-p.v_max + two * p.v_max * t);
        }
        // exact zero at the center sample
        vs[n_v / 2] = R::zero();

        let sign = match dir {
            Direction::Backward => -R::one(),
            Direction::Forward => R::one(),
        };
        let feet: Vec<Foot<R>> = vs.iter().map(|v| Foot::new(sign * *v * dt / dx, n)).collect();

        let mut scan: Vec<u32> = (0..n_v as u32).collect();
        scan.sort_by(|&a, &b| {
            let va = vs[a as usize];
            let vb = vs[b as usize];
            va.abs()
                .partial_cmp(&vb.abs())
                .unwrap()
                .then(va.partial_cmp(&vb).unwrap())
        });

        let (lag, inv_denom) = match self.ham.node_affine_lagrangian(self.grid) {
            Some(aff) => {
                let denom = match dir {
                    Direction::Backward => R::one() - dt * aff.du,
                    Direction::Forward => R::one() + dt * aff.du,
                };
                let inv = R::one() / denom;
                (KernelLag::Affine(aff), inv)
            }
            None => (
                KernelLag::General {
                    xs: self.grid.nodes(),
                },
                R::zero(),
            ),
        };

        Ok(Kernel {
            sg: self,
            dir,
            dt,
            vs,
            feet,
            scan,
            lag,
            inv_denom,
            n,
        })
    }
}

#[derive(Clone, Copy)]
pub(crate) struct Foot<R: Real> {
    /// Node offset of the interpolation cell, already reduced mod n.
    base_mod: usize,
    frac: R,
}

impl<R: Real> Foot<R> {
    fn new(shift_cells: R, n: usize) -> Self {
        let base = shift_cells.floor();
        let mut frac = shift_cells - base;
        let snap = R::lit(1e-9);
        let mut base = base.to_f64_lossy() as isize;
        if frac < snap {
            frac = R::zero();
        } else if frac > R::one() - snap {
            base += 1;
            frac = R::zero();
        }
        Foot {
            base_mod: base.rem_euclid(n as isize) as usize,
            frac,
        }
    }
}

enum KernelLag<R: Real> {
    Affine(AffineNodeLag<R>),
    General { xs: Vec<R> },
}

/// Stepping engine for a fixed `(dt, direction)` pair: velocity samples,
/// foot offsets (node-independent on a uniform periodic grid) and the
/// Lagrangian access path are all precomputed.
pub(crate) struct Kernel<'a, R: Real> {
    sg: &'a Semigroup<R>,
    dir: Direction,
    dt: R,
    vs: Vec<R>,
    feet: Vec<Foot<R>>,
    scan: Vec<u32>,
    lag: KernelLag<R>,
    inv_denom: R,
    n: usize,
}

/// Outcome of one node's velocity scan.
#[derive(Clone, Copy)]
struct NodeOut<R: Real> {
    value: R,
    v: R,
    masked: bool,
}

impl<'a, R: Real> Kernel<'a, R> {
    #[inline]
    fn is_min(&self) -> bool {
        matches!(self.dir, Direction::Backward)
    }

    /// Resolve the implicit value at node `i` for foot value `y` and
    /// velocity `v`.
    #[inline]
    pub(crate) fn resolve(&self, i: usize, y: R, v: R) -> Result<R> {
        match &self.lag {
            KernelLag::Affine(aff) => {
                let base = aff.base(i, v);
                Ok(match self.dir {
                    Direction::Backward => (y + self.dt * base) * self.inv_denom,
                    Direction::Forward => (y - self.dt * base) * self.inv_denom,
                })
            }
            KernelLag::General { xs } => {
                let x = xs[i];
                let p = self.sg.params();
                let mut w = y;
                for _ in 0..p.fp_max_iter {
                    let l = self.sg.lag.eval(x, w, v)?;
                    let wn = match self.dir {
                        Direction::Backward => y + self.dt * l,
                        Direction::Forward => y - self.dt * l,
                    };
                    if (wn - w).abs() <= p.fp_tol * (R::one() + wn.abs()) {
                        return Ok(wn);
                    }
                    w = wn;
                }
                Err(Error::FixedPoint {
                    x: x.to_f64_lossy(),
                    v: v.to_f64_lossy(),
                    residual: f64::NAN,
                    iters: p.fp_max_iter,
                })
            }
        }
    }

    /// Interpolated previous-slice value at the foot of node `i`, or `None`
    /// when the interpolation stencil touches a masked node.
    #[inline]
    fn foot_value(&self, vals: &[R], mask: Option<&[bool]>, i: usize, foot: Foot<R>) -> Option<R> {
        let n = self.n;
        let mut j0 = i + foot.base_mod;
        if j0 >= n {
            j0 -= n;
        }
        if foot.frac == R::zero() {
            if let Some(m) = mask {
                if m[j0] {
                    return None;
                }
            }
            return Some(vals[j0]);
        }
        match self.sg.params.interp {
            InterpOrder::Linear => {
                let j1 = if j0 + 1 == n { 0 } else { j0 + 1 };
                if let Some(m) = mask {
                    if m[j0] || m[j1] {
                        return None;
                    }
                }
                Some(vals[j0] + foot.frac * (vals[j1] - vals[j0]))
            }
            InterpOrder::Cubic => {
                debug_assert!(mask.is_none(), "masked stepping requires linear interpolation");
                let jm = if j0 == 0 { n - 1 } else { j0 - 1 };
                let j1 = if j0 + 1 >= n { j0 + 1 - n } else { j0 + 1 };
                let j2 = if j0 + 2 >= n { j0 + 2 - n } else { j0 + 2 };
                let t = foot.frac;
                let (f0, f1, f2, f3) = (vals[jm], vals[j0], vals[j1], vals[j2]);
                let half = R::lit(0.5);
                Some(
                    f1 + half
                        * t
                        * ((f2 - f0)
                            + t * ((R::lit(2.0) * f0 - R::lit(5.0) * f1 + R::lit(4.0) * f2 - f3)
                                + t * (R::lit(3.0) * (f1 - f2) + f3 - f0))),
                )
            }
        }
    }

    /// Foot value for an arbitrary (refined) velocity.
    #[inline]
    fn foot_value_at(&self, vals: &[R], mask: Option<&[bool]>, i: usize, v: R) -> Option<R> {
        let sign = if self.is_min() { -R::one() } else { R::one() };
        let dx: R = self.sg.grid.dx();
        let foot = Foot::new(sign * v * self.dt / dx, self.n);
        self.foot_value(vals, mask, i, foot)
    }

    fn solve_node(&self, vals: &[R], mask: Option<&[bool]>, i: usize) -> Result<NodeOut<R>> {
        let is_min = self.is_min();
        let mut best_w = if is_min { R::infinity() } else { R::neg_infinity() };
        let mut best_j = usize::MAX;
        for &j in &self.scan {
            let j = j as usize;
            let Some(y) = self.foot_value(vals, mask, i, self.feet[j]) else {
                continue;
            };
            let w = self.resolve(i, y, self.vs[j])?;
            let better = if is_min { w < best_w } else { w > best_w };
            if better {
                best_w = w;
                best_j = j;
            }
        }
        if best_j == usize::MAX {
            return Ok(NodeOut {
                value: R::zero(),
                v: R::zero(),
                masked: true,
            });
        }
        let mut best_v = self.vs[best_j];

        if self.sg.params.refine && best_j > 0 && best_j + 1 < self.vs.len() {
            if let Some((v, w)) = self.refine_node(vals, mask, i, best_j)? {
                let better = if is_min { w < best_w } else { w > best_w };
                if better {
                    best_w = w;
                    best_v = v;
                }
            }
        }
        Ok(NodeOut {
            value: best_w,
            v: best_v,
            masked: false,
        })
    }

    /// Golden-section pass on the bracket around the discrete argmin.
    fn refine_node(
        &self,
        vals: &[R],
        mask: Option<&[bool]>,
        i: usize,
        j: usize,
    ) -> Result<Option<(R, R)>> {
        let is_min = self.is_min();
        let mut a = self.vs[j - 1];
        let mut b = self.vs[j + 1];
        let gold = R::lit(0.618_033_988_749_894_9);
        let tol = (b - a) * R::lit(1e-3);

        let eval = |v: R| -> Result<Option<(R, R)>> {
            match self.foot_value_at(vals, mask, i, v) {
                None => Ok(None),
                Some(y) => Ok(Some((v, self.resolve(i, y, v)?))),
            }
        };

        let mut c = b - gold * (b - a);
        let mut d = a + gold * (b - a);
        let Some(mut fc) = eval(c)? else { return Ok(None) };
        let Some(mut fd) = eval(d)? else { return Ok(None) };
        let mut best = if (is_min && fc.1 <= fd.1) || (!is_min && fc.1 >= fd.1) {
            fc
        } else {
            fd
        };
        for _ in 0..32 {
            if (b - a).abs() <= tol {
                break;
            }
            let c_better = if is_min { fc.1 < fd.1 } else { fc.1 > fd.1 };
            if c_better {
                b = d;
                d = c;
                fd = fc;
                c = b - gold * (b - a);
                match eval(c)? {
                    None => return Ok(Some(best)),
                    Some(f) => fc = f,
                }
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gold * (b - a);
                match eval(d)? {
                    None => return Ok(Some(best)),
                    Some(f) => fd = f,
                }
            }
            let cand = if (is_min && fc.1 <= fd.1) || (!is_min && fc.1 >= fd.1) {
                fc
            } else {
                fd
            };
            let better = if is_min {
                cand.1 < best.1
            } else {
                cand.1 > best.1
            };
            if better {
                best = cand;
            }
        }
        Ok(Some(best))
    }

    /// One step over a raw slice. `mask` marks nodes that do not participate
    /// (point-datum fields); `out_mask`, when given, receives the new mask.
    /// `argmin` receives the chosen velocity per node (`NaN` where masked).
    pub(crate) fn step_raw(
        &self,
        vals: &[R],
        mask: Option<&[bool]>,
        out: &mut [R],
        mut out_mask: Option<&mut Vec<bool>>,
        mut argmin: Option<&mut Vec<R>>,
    ) -> Result<()> {
        debug_assert_eq!(vals.len(), self.n);
        if mask.is_some() && self.sg.params.interp != InterpOrder::Linear {
            return Err(Error::InvalidParams(
                "point-datum stepping requires linear interpolation".into(),
            ));
        }

        let parallel = rayon::current_num_threads() > 1 && self.n * self.vs.len() >= 1 << 15;
        let outs: Vec<NodeOut<R>> = if parallel {
            (0..self.n)
                .into_par_iter()
                .map(|i| self.solve_node(vals, mask, i))
                .collect::<Result<Vec<_>>>()?
        } else {
            let mut v = Vec::with_capacity(self.n);
            for i in 0..self.n {
                v.push(self.solve_node(vals, mask, i)?);
            }
            v
        };

        let masked_fill = if self.is_min() {
            R::lit(crate::action::MASK_BIG)
        } else {
            R::lit(-crate::action::MASK_BIG)
        };
        for (i, o) in outs.iter().enumerate() {
            out[i] = if o.masked { masked_fill } else { o.value };
            if let Some(m) = out_mask.as_deref_mut() {
                m[i] = o.masked;
            }
            if let Some(a) = argmin.as_deref_mut() {
                a[i] = if o.masked { R::nan() } else { o.v };
            }
        }
        if mask.is_none() {
            debug_assert!(outs.iter().all(|o| !o.masked));
        }
        Ok(())
    }
}
