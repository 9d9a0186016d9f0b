//! Contact characteristic flow and a grid-free shooting oracle for the
//! implicit action.
//!
//! The characteristic system is
//!
//! ```text
//! x' = dH/dp,    p' = -dH/dx - dH/du p,    u' = p dH/dp - H,
//! ```
//!
//! integrated with the classical fourth-order one-step method. Everything
//! here is pure ODE work, independent of the spatial grid, which makes
//! [`shoot_h`] an oracle for the dynamic-programming fields rather than a
//! second client of the same discretization.

use crate::error::{Error, Result};
use crate::model::ContactHamiltonian;
use crate::real::Real;

/// Point of the lifted phase space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactState<R: Real> {
    pub x: R,
    pub p: R,
    pub u: R,
}

/// Integrated characteristic: times and states of equal length, positions
/// wrapped to the circle.
#[derive(Clone, Debug)]
pub struct Trajectory<R: Real> {
    pub times: Vec<R>,
    pub states: Vec<ContactState<R>>,
}

impl<R: Real> Trajectory<R> {
    pub fn final_state(&self) -> ContactState<R> {
        *self.states.last().expect("trajectory is nonempty")
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        write!(w, "t,x,p,u\r\n")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(w, "{},{},{},{}\r\n", t, s.x, s.p, s.u)?;
        }
        Ok(())
    }
}

fn wrap_circle<R: Real>(x: R) -> R {
    let half = R::lit(0.5);
    let mut y = x + half;
    y = y - y.floor();
    y - half
}

#[derive(Clone, Copy)]
struct Deriv<R: Real> {
    dx: R,
    dp: R,
    du: R,
}

#[inline]
fn rhs<R: Real>(h: &ContactHamiltonian<R>, s: (R, R, R)) -> Deriv<R> {
    let (x, p, u) = s;
    let hp = h.d_p(x, u, p);
    Deriv {
        dx: hp,
        dp: -h.d_x(x, u, p) - h.d_u(x, u, p) * p,
        du: p * hp - h.eval(x, u, p),
    }
}

const DIVERGENCE_NORM: f64 = 1e9;

/// Integrate the characteristic system from `s0` over `horizon` (signed) with
/// step `dt_ode <= 1e-3`. States with norm beyond `1e9` abort with a
/// divergence error; this is the expected outcome for blow-up data.
pub fn flow<R: Real>(
    h: &ContactHamiltonian<R>,
    s0: ContactState<R>,
    horizon: R,
    dt_ode: R,
) -> Result<Trajectory<R>> {
    let (traj, _) = flow_unwrapped(h, s0, horizon, dt_ode)?;
    Ok(traj)
}

/// As [`flow`], also returning the final state with the position left
/// unwrapped (winding included).
pub fn flow_unwrapped<R: Real>(
    h: &ContactHamiltonian<R>,
    s0: ContactState<R>,
    horizon: R,
    dt_ode: R,
) -> Result<(Trajectory<R>, ContactState<R>)> {
    if !(dt_ode > R::zero()) || dt_ode > R::lit(1e-3) {
        return Err(Error::InvalidParams(
            "dt_ode must lie in (0, 1e-3]".into(),
        ));
    }
    let span = horizon.abs();
    let sign = if horizon < R::zero() { -R::one() } else { R::one() };
    let steps = ((span / dt_ode).to_f64_lossy() - 1e-9).ceil().max(0.0) as usize;

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut t = R::zero();
    let mut cur = (s0.x, s0.p, s0.u);
    times.push(t);
    states.push(ContactState {
        x: wrap_circle(cur.0),
        p: cur.1,
        u: cur.2,
    });

    for k in 0..steps {
        let remaining = span - t.abs();
        let dt_step = sign * dt_ode.min(remaining.max(R::zero()));
        cur = rk4(h, cur, dt_step);
        t = if k + 1 == steps { horizon } else { t + dt_step };
        let norm = cur.0.abs() + cur.1.abs() + cur.2.abs();
        if !norm.is_finite() || norm > R::lit(DIVERGENCE_NORM) {
            return Err(Error::Divergence {
                t: t.to_f64_lossy(),
                norm: norm.to_f64_lossy(),
            });
        }
        times.push(t);
        states.push(ContactState {
            x: wrap_circle(cur.0),
            p: cur.1,
            u: cur.2,
        });
    }
    let traj = Trajectory { times, states };
    let final_unwrapped = ContactState {
        x: cur.0,
        p: cur.1,
        u: cur.2,
    };
    Ok((traj, final_unwrapped))
}

#[inline]
fn rk4<R: Real>(h: &ContactHamiltonian<R>, s: (R, R, R), dt: R) -> (R, R, R) {
    let half = R::lit(0.5);
    let sixth = R::one() / R::lit(6.0);
    let two = R::lit(2.0);
    let k1 = rhs(h, s);
    let s2 = (
        s.0 + half * dt * k1.dx,
        s.1 + half * dt * k1.dp,
        s.2 + half * dt * k1.du,
    );
    let k2 = rhs(h, s2);
    let s3 = (
        s.0 + half * dt * k2.dx,
        s.1 + half * dt * k2.dp,
        s.2 + half * dt * k2.du,
    );
    let k3 = rhs(h, s3);
    let s4 = (s.0 + dt * k3.dx, s.1 + dt * k3.dp, s.2 + dt * k3.du);
    let k4 = rhs(h, s4);
    (
        s.0 + dt * sixth * (k1.dx + two * k2.dx + two * k3.dx + k4.dx),
        s.1 + dt * sixth * (k1.dp + two * k2.dp + two * k3.dp + k4.dp),
        s.2 + dt * sixth * (k1.du + two * k2.du + two * k3.du + k4.du),
    )
}

/// Shooting parameters.
#[derive(Clone, Copy, Debug)]
pub struct ShootParams<R: Real> {
    /// Log-spaced initial momentum magnitudes per sign (plus zero).
    pub n_starts: usize,
    pub dt_ode: R,
    /// Largest momentum magnitude tried before the dense fallback.
    pub p_hi: R,
}

impl<R: Real> Default for ShootParams<R> {
    fn default() -> Self {
        Self {
            n_starts: 24,
            dt_ode: R::lit(1e-3),
            p_hi: R::lit(64.0),
        }
    }
}

const POSITION_TOL: f64 = 1e-6;
const MAX_WINDING: i64 = 2;

/// Boundary-value oracle for the forward implicit action: search initial
/// momenta whose characteristic from `(x0, u0)` lands on `x_target`
/// (mod 1, windings up to 2) at time `t`, refine each hit by bisection on the
/// monotone endpoint map, and return the minimal terminal value.
pub fn shoot_h<R: Real>(
    h: &ContactHamiltonian<R>,
    x0: R,
    u0: R,
    x_target: R,
    t: R,
    params: &ShootParams<R>,
) -> Result<R> {
    if t < R::lit(0.05) {
        return Err(Error::InvalidParams(
            "shooting horizon must be at least 0.05".into(),
        ));
    }

    let displacement = |p0: R| -> Result<(R, R)> {
        let s0 = ContactState { x: x0, p: p0, u: u0 };
        let (_, fin) = flow_unwrapped(h, s0, t, params.dt_ode)?;
        Ok((fin.x - x0, fin.u))
    };

    // winding targets
    let mut base = x_target - x0;
    base = base - base.round();
    let targets: Vec<R> = (-MAX_WINDING..=MAX_WINDING)
        .map(|k| base + R::lit(k as f64))
        .collect();

    let starts = momentum_starts(params);
    let mut disps: Vec<(R, R, R)> = Vec::with_capacity(starts.len()); // (p0, disp, u_end)
    for p0 in &starts {
        match displacement(*p0) {
            Ok((d, u)) => disps.push((*p0, d, u)),
            Err(Error::Divergence { .. }) => continue,
            Err(e) => return Err(e),
        }
    }

    let mut hits: Vec<(R, R)> = Vec::new(); // (u_end, |p0|)
    let scan = |disps: &[(R, R, R)], hits: &mut Vec<(R, R)>| -> Result<()> {
        for target in &targets {
            for w in disps.windows(2) {
                let (pa, da, ua) = w[0];
                let (pb, db, _) = w[1];
                if da == *target {
                    hits.push((ua, pa.abs()));
                    continue;
                }
                if (da - *target) * (db - *target) < R::zero() {
                    if let Some((p_star, u_end)) =
                        bisect_hit(&displacement, pa, pb, *target)?
                    {
                        hits.push((u_end, p_star.abs()));
                    }
                }
            }
        }
        Ok(())
    };
    scan(&disps, &mut hits)?;

    if hits.is_empty() {
        // dense fallback over a wider momentum range
        let lo = -params.p_hi * R::lit(4.0);
        let hi = params.p_hi * R::lit(4.0);
        let m = 2001;
        let mut dense: Vec<(R, R, R)> = Vec::with_capacity(m);
        for i in 0..m {
            let p0 = lo + (hi - lo) * R::lit(i as f64 / (m - 1) as f64);
            match displacement(p0) {
                Ok((d, u)) => dense.push((p0, d, u)),
                Err(Error::Divergence { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        scan(&dense, &mut hits)?;
    }

    hits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    match hits.first() {
        Some((u, _)) => Ok(*u),
        None => Err(Error::Unreachable(format!(
            "no characteristic from x0={} reaches x={} at t={}",
            x0.to_f64_lossy(),
            x_target.to_f64_lossy(),
            t.to_f64_lossy()
        ))),
    }
}

fn momentum_starts<R: Real>(params: &ShootParams<R>) -> Vec<R> {
    let n = params.n_starts.max(4);
    let lo = 1e-4_f64;
    let hi = params.p_hi.to_f64_lossy();
    let mut out = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        let mag = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        out.push(R::lit(-mag));
    }
    out.push(R::zero());
    for i in 0..n {
        let mag = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        out.push(R::lit(mag));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

fn bisect_hit<R: Real>(
    displacement: &impl Fn(R) -> Result<(R, R)>,
    mut pa: R,
    mut pb: R,
    target: R,
) -> Result<Option<(R, R)>> {
    let (mut da, _) = displacement(pa)?;
    let (db, _) = displacement(pb)?;
    if (da - target) * (db - target) > R::zero() {
        return Ok(None);
    }
    let tol = R::lit(POSITION_TOL);
    for _ in 0..80 {
        let pm = (pa + pb) * R::lit(0.5);
        let (dm, um) = displacement(pm)?;
        if (dm - target).abs() <= tol {
            return Ok(Some((pm, um)));
        }
        if (da - target) * (dm - target) <= R::zero() {
            pb = pm;
        } else {
            pa = pm;
            da = dm;
        }
    }
    Ok(None)
}
