//! Implicit action functions with point initial data.
//!
//! The forward action `h_{x0,u0}(x, t)` is the value at `(x, t)` of the
//! backward semigroup started from a point datum: `u0` at the node `x0` and
//! masked everywhere else. Masked nodes never enter the per-step minimum, so
//! the field is finite exactly on the discrete reachable cone and grows one
//! cell per step at the extreme velocity samples. The backward action
//! `h^{x0,u0}` mirrors this through the forward semigroup.
//!
//! Masked entries are stored as `+/-MASK_BIG` alongside an explicit mask, so
//! serialized fields stay finite and auditable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid};
use crate::real::Real;
use crate::semigroup::{Direction, Semigroup};

/// Sentinel magnitude stored at masked nodes.
pub const MASK_BIG: f64 = 1e6;

/// Which action function a field represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    /// `h_{x0,u0}`: built with the backward (min) semigroup.
    Forward,
    /// `h^{x0,u0}`: built with the forward (max) semigroup.
    Backward,
}

impl ActionKind {
    fn direction(self) -> Direction {
        match self {
            ActionKind::Forward => Direction::Backward,
            ActionKind::Backward => Direction::Forward,
        }
    }
}

/// Point initial datum `(x0, u0)` with `x0` snapped to a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointDatum<R: Real> {
    pub node: usize,
    pub u0: R,
}

impl<R: Real> PointDatum<R> {
    pub fn new(grid: PeriodicGrid, x0: R, u0: R) -> Self {
        Self {
            node: grid.nearest_node(x0),
            u0,
        }
    }

    pub fn at_node(node: usize, u0: R) -> Self {
        Self { node, u0 }
    }

    pub fn x0(&self, grid: PeriodicGrid) -> R {
        grid.node(self.node)
    }
}

/// One time slice of a field: values plus the mask of unreachable nodes.
#[derive(Clone, Debug)]
pub struct MaskedSlice<R: Real> {
    pub values: GridFunction<R>,
    pub mask: Vec<bool>,
}

impl<R: Real> MaskedSlice<R> {
    pub fn point(grid: PeriodicGrid, datum: PointDatum<R>, kind: ActionKind) -> Self {
        let fill = match kind {
            ActionKind::Forward => R::lit(MASK_BIG),
            ActionKind::Backward => R::lit(-MASK_BIG),
        };
        let mut values = vec![fill; grid.len()];
        let mut mask = vec![true; grid.len()];
        values[datum.node] = datum.u0;
        mask[datum.node] = false;
        Self {
            values: GridFunction::new_unchecked(grid, values),
            mask,
        }
    }

    pub fn unmasked_count(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    pub fn is_masked(&self, i: usize) -> bool {
        self.mask[i]
    }
}

/// Advance a masked slice by one step of the given action kind.
pub fn step_point_field<R: Real>(
    sg: &Semigroup<R>,
    slice: &MaskedSlice<R>,
    kind: ActionKind,
) -> Result<MaskedSlice<R>> {
    let grid = sg.grid();
    let kern = sg.build_kernel(sg.params().dt, kind.direction())?;
    let mut out = vec![R::zero(); grid.len()];
    let mut out_mask = vec![true; grid.len()];
    kern.step_raw(
        slice.values.values(),
        Some(&slice.mask),
        &mut out,
        Some(&mut out_mask),
        None,
    )?;
    Ok(MaskedSlice {
        values: GridFunction::new_unchecked(grid, out),
        mask: out_mask,
    })
}

/// Which slices of a field to keep.
#[derive(Clone, Debug)]
pub enum RecordSpec<R: Real> {
    /// Every `k`-th step from step 3 on, plus the final slice.
    Stride(usize),
    /// The slices nearest the requested times (each must be `>= 3 dt`),
    /// plus the final slice.
    Times(Vec<R>),
    /// Only the final slice.
    FinalOnly,
}

/// Discretized implicit action for one point datum.
pub struct ActionField<R: Real> {
    pub datum: PointDatum<R>,
    pub kind: ActionKind,
    pub times: Vec<R>,
    pub slices: Vec<MaskedSlice<R>>,
    grid: PeriodicGrid,
    dt: R,
    /// Full history for backtracking: every slice plus per-step argmin
    /// velocities. Only kept by [`ActionField::forward_traced`].
    trace: Option<FieldTrace<R>>,
}

struct FieldTrace<R: Real> {
    all: Vec<MaskedSlice<R>>,
    argmin_v: Vec<Vec<R>>,
}

/// Discrete minimizing curve recovered from a traced field.
#[derive(Clone, Debug)]
pub struct DiscreteCurve<R: Real> {
    pub times: Vec<R>,
    pub nodes: Vec<usize>,
    /// Velocity chosen on each step, `velocities[k]` carrying the curve from
    /// `nodes[k]` to `nodes[k+1]`.
    pub velocities: Vec<R>,
}

impl<R: Real> DiscreteCurve<R> {
    pub fn write_csv(&self, mut w: impl std::io::Write, grid: PeriodicGrid) -> Result<()> {
        write!(w, "t,x,v\r\n")?;
        for k in 0..self.nodes.len() {
            let v = if k < self.velocities.len() {
                self.velocities[k]
            } else {
                R::zero()
            };
            let x: R = grid.node(self.nodes[k]);
            write!(w, "{},{},{}\r\n", self.times[k], x, v)?;
        }
        Ok(())
    }
}

impl<R: Real> ActionField<R> {
    /// Build `h_{x0,u0}(., t)` up to `t_max`.
    pub fn forward(
        sg: &Semigroup<R>,
        datum: PointDatum<R>,
        t_max: R,
        rec: &RecordSpec<R>,
    ) -> Result<Self> {
        Self::build(sg, datum, t_max, rec, ActionKind::Forward, false)
    }

    /// Build `h^{x0,u0}(., t)` up to `t_max`.
    pub fn backward(
        sg: &Semigroup<R>,
        datum: PointDatum<R>,
        t_max: R,
        rec: &RecordSpec<R>,
    ) -> Result<Self> {
        Self::build(sg, datum, t_max, rec, ActionKind::Backward, false)
    }

    /// Build the forward field keeping every slice and the argmin pointers;
    /// memory scales with `n * steps`, intended for curve extraction at
    /// modest sizes.
    pub fn forward_traced(sg: &Semigroup<R>, datum: PointDatum<R>, t_max: R) -> Result<Self> {
        Self::build(
            sg,
            datum,
            t_max,
            &RecordSpec::Stride(1),
            ActionKind::Forward,
            true,
        )
    }

    fn build(
        sg: &Semigroup<R>,
        datum: PointDatum<R>,
        t_max: R,
        rec: &RecordSpec<R>,
        kind: ActionKind,
        traced: bool,
    ) -> Result<Self> {
        let grid = sg.grid();
        let dt = sg.params().dt;
        let three = R::lit(3.0);
        if t_max < three * dt {
            return Err(Error::InvalidParams(format!(
                "t_max = {} is below 3 dt = {}",
                t_max.to_f64_lossy(),
                (three * dt).to_f64_lossy()
            )));
        }
        let steps = ((t_max / dt).to_f64_lossy() + 1e-9).floor() as usize;

        // steps at which to record, always including the last
        let mut record_at = vec![false; steps + 1];
        record_at[steps] = true;
        match rec {
            RecordSpec::Stride(k) => {
                let k = (*k).max(1);
                let mut s = 3;
                while s < steps {
                    record_at[s] = true;
                    s += k;
                }
            }
            RecordSpec::Times(ts) => {
                for t in ts {
                    if *t < three * dt {
                        return Err(Error::InvalidParams(format!(
                            "requested record time {} is below 3 dt",
                            t.to_f64_lossy()
                        )));
                    }
                    let s = ((*t / dt).to_f64_lossy().round() as usize).min(steps);
                    record_at[s] = true;
                }
            }
            RecordSpec::FinalOnly => {}
        }

        let kern = sg.build_kernel(dt, kind.direction())?;
        let mut cur = MaskedSlice::point(grid, datum, kind);
        let mut times = Vec::new();
        let mut slices = Vec::new();
        let mut trace = if traced {
            Some(FieldTrace {
                all: vec![cur.clone()],
                argmin_v: Vec::with_capacity(steps),
            })
        } else {
            None
        };

        let n = grid.len();
        let mut out = vec![R::zero(); n];
        let mut out_mask = vec![true; n];
        let mut argmin = if traced { vec![R::zero(); n] } else { Vec::new() };
        for s in 1..=steps {
            kern.step_raw(
                cur.values.values(),
                Some(&cur.mask),
                &mut out,
                Some(&mut out_mask),
                if traced { Some(&mut argmin) } else { None },
            )?;
            cur = MaskedSlice {
                values: GridFunction::new_unchecked(grid, out.clone()),
                mask: out_mask.clone(),
            };
            if let Some(tr) = trace.as_mut() {
                tr.all.push(cur.clone());
                tr.argmin_v.push(argmin.clone());
            }
            if record_at[s] {
                times.push(dt * R::lit(s as f64));
                slices.push(cur.clone());
            }
        }

        let last = slices.last().expect("final slice is always recorded");
        if last.unmasked_count() == 0 {
            return Err(Error::Unreachable(
                "field is fully masked at the final horizon".into(),
            ));
        }
        Ok(Self {
            datum,
            kind,
            times,
            slices,
            grid,
            dt,
            trace,
        })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn dt(&self) -> R {
        self.dt
    }

    /// Recorded slice nearest to `t`.
    pub fn slice_nearest(&self, t: R) -> (&MaskedSlice<R>, R) {
        let mut best = 0;
        let mut gap = R::infinity();
        for (i, ti) in self.times.iter().enumerate() {
            let d = (*ti - t).abs();
            if d < gap {
                gap = d;
                best = i;
            }
        }
        (&self.slices[best], self.times[best])
    }

    /// Field value at a node and recorded time; masked access is an error.
    pub fn value(&self, node: usize, t: R) -> Result<R> {
        let (slice, t_rec) = self.slice_nearest(t);
        if slice.is_masked(node) {
            return Err(Error::MaskedAccess {
                node,
                t: t_rec.to_f64_lossy(),
            });
        }
        Ok(slice.values.value(node))
    }

    /// Walk the argmin pointers from `(node, t)` back to the datum. Requires
    /// a traced field. The returned node path snaps each foot to its nearest
    /// node; the recorded velocities are the exact argmin values.
    pub fn backtrack(&self, node: usize, t: R) -> Result<DiscreteCurve<R>> {
        let trace = self.trace.as_ref().ok_or_else(|| {
            Error::InvalidParams("backtracking needs a field built with forward_traced".into())
        })?;
        let steps = trace.argmin_v.len();
        let k_end = ((t / self.dt).to_f64_lossy().round() as usize).min(steps);
        if k_end == 0 {
            return Err(Error::InvalidParams("backtrack needs t > 0".into()));
        }
        if trace.all[k_end].is_masked(node) {
            return Err(Error::MaskedAccess {
                node,
                t: t.to_f64_lossy(),
            });
        }
        let sign = match self.kind {
            ActionKind::Forward => -R::one(),
            ActionKind::Backward => R::one(),
        };
        let dx: R = self.grid.dx();
        let mut nodes = vec![node];
        let mut velocities = Vec::new();
        let mut cur = node;
        for k in (1..=k_end).rev() {
            let v = trace.argmin_v[k - 1][cur];
            if !v.is_finite() {
                return Err(Error::MaskedAccess {
                    node: cur,
                    t: (self.dt * R::lit(k as f64)).to_f64_lossy(),
                });
            }
            // foot of the arrival node under the chosen velocity
            let shift = (sign * v * self.dt / dx).to_f64_lossy().round() as isize;
            cur = self.grid.wrap(cur as isize + shift);
            velocities.push(v);
            nodes.push(cur);
        }
        nodes.reverse();
        velocities.reverse();
        let times = (0..=k_end).map(|k| self.dt * R::lit(k as f64)).collect();
        Ok(DiscreteCurve {
            times,
            nodes,
            velocities,
        })
    }

    /// Re-integrate the implicit per-step equation along a backtracked curve,
    /// reading feet off the stored slices, and return the final value. Agrees
    /// with the recorded field value up to fixed-point tolerance per step.
    pub fn replay(&self, sg: &Semigroup<R>, curve: &DiscreteCurve<R>) -> Result<R> {
        let trace = self.trace.as_ref().ok_or_else(|| {
            Error::InvalidParams("replay needs a field built with forward_traced".into())
        })?;
        let sign = match self.kind {
            ActionKind::Forward => -R::one(),
            ActionKind::Backward => R::one(),
        };
        let dir = self.kind.direction();
        let mut w = R::zero();
        for k in 0..curve.velocities.len() {
            let arrival = curve.nodes[k + 1];
            let v = curve.velocities[k];
            let x_arrival: R = self.grid.node(arrival);
            let foot_x = x_arrival + sign * v * self.dt;
            let prev = &trace.all[k];
            let (i0, frac) = self.grid.locate(foot_x);
            let i1 = self.grid.wrap(i0 as isize + 1);
            if prev.is_masked(i0) || (frac != R::zero() && prev.is_masked(i1)) {
                return Err(Error::MaskedAccess {
                    node: i0,
                    t: (self.dt * R::lit(k as f64)).to_f64_lossy(),
                });
            }
            let y = prev.values.interpolate(foot_x);
            w = sg.one_step_value(arrival, y, v, dir)?;
        }
        Ok(w)
    }

    /// CSV with mask flags: `t,x,value,masked`.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        write!(w, "t,x,value,masked\r\n")?;
        for (t, slice) in self.times.iter().zip(&self.slices) {
            for i in 0..self.grid.len() {
                let x: R = self.grid.node(i);
                write!(
                    w,
                    "{},{},{},{}\r\n",
                    t,
                    x,
                    slice.values.value(i),
                    u8::from(slice.mask[i])
                )?;
            }
        }
        Ok(())
    }
}

/// Inversion check: compute `u = h_{x0,u0}(x, t)`, then
/// `u0' = h^{x,u}(x0, t)`, and return `|u0' - u0|`. The two action functions
/// invert each other in the continuum, so the residual measures the combined
/// scheme error of the two fields.
pub fn check_inversion<R: Real>(
    sg: &Semigroup<R>,
    x0_node: usize,
    u0: R,
    x_node: usize,
    t: R,
) -> Result<R> {
    let fwd = ActionField::forward(
        sg,
        PointDatum::at_node(x0_node, u0),
        t,
        &RecordSpec::FinalOnly,
    )?;
    let u = fwd.value(x_node, t)?;
    let bwd = ActionField::backward(
        sg,
        PointDatum::at_node(x_node, u),
        t,
        &RecordSpec::FinalOnly,
    )?;
    let u0_back = bwd.value(x0_node, t)?;
    Ok((u0_back - u0).abs())
}
