//! Contact Hamiltonians `H(x, u, p)`, their Lagrangians, the Legendre
//! transform linking the two, and the duality `F(x,u,p) = H(x,-u,-p)`.
//!
//! Structural requirements on every Hamiltonian handled here:
//! strict convexity in `p`, superlinear growth in `p`, and a uniform
//! monotonicity band `k2 <= -dH/du <= k1` with `0 < k2 <= k1`. The band
//! constants drive every contraction and separation estimate downstream, so
//! [`verify_assumptions`] checks all three properties on a finite sampling
//! box before a Hamiltonian is trusted.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::real::Real;

/// Central-difference step for synthesized partial derivatives.
const FD_STEP: f64 = 1e-5;

/// Finite box on which structural assumptions are sampled.
#[derive(Clone, Copy, Debug)]
pub struct WorkingBox<R: Real> {
    pub u: (R, R),
    pub p: (R, R),
}

impl<R: Real> WorkingBox<R> {
    /// Default desk-scale box: `|u| <= 4`, `|p| <= 8`, the whole circle in `x`.
    pub fn standard() -> Self {
        Self {
            u: (R::lit(-4.0), R::lit(4.0)),
            p: (R::lit(-8.0), R::lit(8.0)),
        }
    }
}

/// Coefficient `c0 + c_cos cos(2 pi x) + c_sin sin(2 pi x)`.
#[derive(Clone, Copy, Debug)]
pub struct Trig<R: Real> {
    pub c0: R,
    pub c_cos: R,
    pub c_sin: R,
}

impl<R: Real> Trig<R> {
    pub fn constant(c0: R) -> Self {
        Self {
            c0,
            c_cos: R::zero(),
            c_sin: R::zero(),
        }
    }

    #[inline]
    pub fn eval(&self, x: R) -> R {
        if self.c_cos == R::zero() && self.c_sin == R::zero() {
            return self.c0;
        }
        let t = R::lit(TAU) * x;
        self.c0 + self.c_cos * t.cos() + self.c_sin * t.sin()
    }

    #[inline]
    pub fn deriv(&self, x: R) -> R {
        if self.c_cos == R::zero() && self.c_sin == R::zero() {
            return R::zero();
        }
        let tau = R::lit(TAU);
        let t = tau * x;
        tau * (self.c_sin * t.cos() - self.c_cos * t.sin())
    }

    /// Sup of `|value|` over the circle.
    pub fn amplitude_bound(&self) -> R {
        self.c0.abs() + (self.c_cos * self.c_cos + self.c_sin * self.c_sin).sqrt()
    }

    /// Min of the value over the circle.
    pub fn min_value(&self) -> R {
        self.c0 - (self.c_cos * self.c_cos + self.c_sin * self.c_sin).sqrt()
    }
}

/// `H(x,u,p) = a(x) p^2 + b(x) p - lambda u + c(x)` with `a > 0`, `lambda > 0`.
#[derive(Clone, Debug)]
pub struct QuadraticInP<R: Real> {
    pub lambda: R,
    pub a: Trig<R>,
    pub b: Trig<R>,
    pub c: Trig<R>,
}

/// User-supplied Hamiltonian. Partials are optional; missing ones are
/// synthesized by central differences (analytic wins when both exist).
#[derive(Clone)]
pub struct Custom<R: Real> {
    pub eval: Arc<dyn Fn(R, R, R) -> R + Send + Sync>,
    pub d_x: Option<Arc<dyn Fn(R, R, R) -> R + Send + Sync>>,
    pub d_u: Option<Arc<dyn Fn(R, R, R) -> R + Send + Sync>>,
    pub d_p: Option<Arc<dyn Fn(R, R, R) -> R + Send + Sync>>,
    /// Optional closed-form Lagrangian; without it the semigroup falls back
    /// to a per-evaluation Legendre transform.
    pub lagrangian: Option<Arc<dyn Fn(R, R, R) -> R + Send + Sync>>,
    pub k1: R,
    pub k2: R,
    /// Momentum radius beyond which `H >= c|p|` for `|u|` in the working
    /// band; `None` falls back to a doubling search.
    pub superlinear_radius: Option<Arc<dyn Fn(R) -> R + Send + Sync>>,
}

#[derive(Clone)]
enum Kind<R: Real> {
    Quadratic(QuadraticInP<R>),
    Dual(Box<ContactHamiltonian<R>>),
    Custom(Custom<R>),
}

/// A contact Hamiltonian together with its monotonicity band constants.
#[derive(Clone)]
pub struct ContactHamiltonian<R: Real> {
    id: String,
    kind: Kind<R>,
}

impl<R: Real> std::fmt::Debug for ContactHamiltonian<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContactHamiltonian")
            .field("id", &self.id)
            .field("k1", &self.k1())
            .field("k2", &self.k2())
            .finish()
    }
}

impl<R: Real> ContactHamiltonian<R> {
    pub fn quadratic(id: impl Into<String>, q: QuadraticInP<R>) -> Result<Self> {
        if q.lambda <= R::zero() {
            return Err(Error::InvalidParams("lambda must be positive".into()));
        }
        if q.a.min_value() <= R::zero() {
            return Err(Error::InvalidParams(
                "quadratic coefficient a(x) must stay positive".into(),
            ));
        }
        Ok(Self {
            id: id.into(),
            kind: Kind::Quadratic(q),
        })
    }

    pub fn custom(id: impl Into<String>, c: Custom<R>) -> Result<Self> {
        if c.k2 <= R::zero() || c.k1 < c.k2 {
            return Err(Error::InvalidParams("need 0 < k2 <= k1".into()));
        }
        Ok(Self {
            id: id.into(),
            kind: Kind::Custom(c),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Upper monotonicity constant: `|dH/du| <= k1` on the working box.
    pub fn k1(&self) -> R {
        match &self.kind {
            Kind::Quadratic(q) => q.lambda,
            Kind::Dual(h) => h.k1(),
            Kind::Custom(c) => c.k1,
        }
    }

    /// Lower monotonicity constant: `|dH/du| >= k2 > 0`.
    pub fn k2(&self) -> R {
        match &self.kind {
            Kind::Quadratic(q) => q.lambda,
            Kind::Dual(h) => h.k2(),
            Kind::Custom(c) => c.k2,
        }
    }

    #[inline]
    pub fn eval(&self, x: R, u: R, p: R) -> R {
        match &self.kind {
            Kind::Quadratic(q) => q.a.eval(x) * p * p + q.b.eval(x) * p - q.lambda * u + q.c.eval(x),
            Kind::Dual(h) => h.eval(x, -u, -p),
            Kind::Custom(c) => (c.eval)(x, u, p),
        }
    }

    #[inline]
    pub fn d_p(&self, x: R, u: R, p: R) -> R {
        match &self.kind {
            Kind::Quadratic(q) => R::lit(2.0) * q.a.eval(x) * p + q.b.eval(x),
            Kind::Dual(h) => -h.d_p(x, -u, -p),
            Kind::Custom(c) => match &c.d_p {
                Some(f) => f(x, u, p),
                None => {
                    let h = R::lit(FD_STEP);
                    ((c.eval)(x, u, p + h) - (c.eval)(x, u, p - h)) / (R::lit(2.0) * h)
                }
            },
        }
    }

    #[inline]
    pub fn d_u(&self, x: R, u: R, p: R) -> R {
        match &self.kind {
            Kind::Quadratic(q) => -q.lambda,
            Kind::Dual(h) => -h.d_u(x, -u, -p),
            Kind::Custom(c) => match &c.d_u {
                Some(f) => f(x, u, p),
                None => {
                    let h = R::lit(FD_STEP);
                    ((c.eval)(x, u + h, p) - (c.eval)(x, u - h, p)) / (R::lit(2.0) * h)
                }
            },
        }
    }

    #[inline]
    pub fn d_x(&self, x: R, u: R, p: R) -> R {
        match &self.kind {
            Kind::Quadratic(q) => q.a.deriv(x) * p * p + q.b.deriv(x) * p + q.c.deriv(x),
            Kind::Dual(h) => h.d_x(x, -u, -p),
            Kind::Custom(c) => match &c.d_x {
                Some(f) => f(x, u, p),
                None => {
                    let h = R::lit(FD_STEP);
                    ((c.eval)(x + h, u, p) - (c.eval)(x - h, u, p)) / (R::lit(2.0) * h)
                }
            },
        }
    }

    /// Second difference in p, used by the convexity check.
    pub fn d2_pp(&self, x: R, u: R, p: R, h: R) -> R {
        (self.eval(x, u, p + h) - R::lit(2.0) * self.eval(x, u, p) + self.eval(x, u, p - h))
            / (h * h)
    }

    /// Whether analytic u- and p-derivatives are available (affects the
    /// noise floor of the assumption checks).
    pub fn has_analytic_partials(&self) -> bool {
        match &self.kind {
            Kind::Quadratic(_) => true,
            Kind::Dual(h) => h.has_analytic_partials(),
            Kind::Custom(c) => c.d_u.is_some() && c.d_p.is_some(),
        }
    }

    /// The dual Hamiltonian `F(x,u,p) = H(x,-u,-p)`. Applying it twice gives
    /// back the original pointwise (the wrapper is unwrapped).
    pub fn dual(&self) -> Self {
        match &self.kind {
            Kind::Dual(inner) => (**inner).clone(),
            _ => Self {
                id: format!("dual({})", self.id),
                kind: Kind::Dual(Box::new(self.clone())),
            },
        }
    }

    /// Momentum radius beyond which `H(x,u,p) >= c |p|` holds for `|u|` in
    /// the working band.
    pub fn superlinear_radius(&self, c: R, u_band: R) -> Result<R> {
        match &self.kind {
            Kind::Quadratic(q) => {
                let a_min = q.a.min_value();
                let b_max = q.b.amplitude_bound();
                let c_max = q.c.amplitude_bound();
                let s = c + b_max;
                let rad = (s * s + R::lit(4.0) * a_min * (q.lambda * u_band + c_max))
                    .max(R::zero())
                    .sqrt();
                Ok((s + rad) / (R::lit(2.0) * a_min))
            }
            Kind::Dual(h) => h.superlinear_radius(c, u_band),
            Kind::Custom(cu) => {
                if let Some(f) = &cu.superlinear_radius {
                    return Ok(f(c));
                }
                // doubling search validated on a coarse sample of (x, u, sign)
                let mut r = R::one();
                for _ in 0..60 {
                    if self.superlinear_holds_beyond(c, u_band, r) {
                        return Ok(r);
                    }
                    r = r * R::lit(2.0);
                }
                Err(Error::Unreachable(format!(
                    "no superlinearity radius found for `{}` below {:e}",
                    self.id,
                    r.to_f64_lossy()
                )))
            }
        }
    }

    fn superlinear_holds_beyond(&self, c: R, u_band: R, r: R) -> bool {
        let m = 9;
        for ix in 0..m {
            let x = R::lit(ix as f64 / m as f64 - 0.5);
            for iu in 0..m {
                let u = u_band * R::lit(2.0 * iu as f64 / (m - 1) as f64 - 1.0);
                for mult in [1.0, 1.5, 2.0, 4.0] {
                    for sign in [-1.0, 1.0] {
                        let p = r * R::lit(mult * sign);
                        if self.eval(x, u, p) < c * p.abs() {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Sampled sup of `|dH/dp|` over the box; used to pick velocity radii and
    /// artificial viscosity speeds.
    pub fn max_dp_abs(&self, bbox: &WorkingBox<R>, samples: usize) -> R {
        let mut best = R::zero();
        let m = samples.max(2);
        for ix in 0..m {
            let x = R::lit(ix as f64 / m as f64 - 0.5);
            for iu in 0..m {
                let t = R::lit(iu as f64 / (m - 1) as f64);
                let u = bbox.u.0 + t * (bbox.u.1 - bbox.u.0);
                for ip in 0..m {
                    let t = R::lit(ip as f64 / (m - 1) as f64);
                    let p = bbox.p.0 + t * (bbox.p.1 - bbox.p.0);
                    best = best.max(self.d_p(x, u, p).abs());
                }
            }
        }
        best
    }

    /// Per-node affine-in-u Lagrangian data, when the Hamiltonian admits one:
    /// `L(x_i, u, v) = (v - b_i)^2 * inv4a_i - c_i + du * u`.
    pub(crate) fn node_affine_lagrangian(&self, grid: PeriodicGrid) -> Option<AffineNodeLag<R>> {
        match &self.kind {
            Kind::Quadratic(q) => {
                let n = grid.len();
                let quarter = R::lit(0.25);
                let mut inv4a = Vec::with_capacity(n);
                let mut b = Vec::with_capacity(n);
                let mut c = Vec::with_capacity(n);
                for i in 0..n {
                    let x = grid.node(i);
                    inv4a.push(quarter / q.a.eval(x));
                    b.push(q.b.eval(x));
                    c.push(q.c.eval(x));
                }
                Some(AffineNodeLag {
                    inv4a,
                    b,
                    c,
                    du: q.lambda,
                })
            }
            Kind::Dual(h) => {
                // L_F(x, u, v) = L_H(x, -u, -v): flip b and the u-coefficient.
                let mut aff = h.node_affine_lagrangian(grid)?;
                for b in &mut aff.b {
                    *b = -*b;
                }
                aff.du = -aff.du;
                Some(aff)
            }
            Kind::Custom(_) => None,
        }
    }
}

/// Precomputed per-node affine Lagrangian.
#[derive(Clone)]
pub(crate) struct AffineNodeLag<R: Real> {
    pub inv4a: Vec<R>,
    pub b: Vec<R>,
    pub c: Vec<R>,
    pub du: R,
}

impl<R: Real> AffineNodeLag<R> {
    /// `L(x_i, 0, v)`: the u-independent part.
    #[inline]
    pub fn base(&self, i: usize, v: R) -> R {
        let d = v - self.b[i];
        d * d * self.inv4a[i] - self.c[i]
    }
}

/// Lagrangian side of a Hamiltonian; evaluation goes through the closed form
/// where one exists and through [`legendre`] otherwise.
#[derive(Clone)]
pub struct ContactLagrangian<R: Real> {
    ham: ContactHamiltonian<R>,
}

impl<R: Real> ContactLagrangian<R> {
    pub fn new(ham: &ContactHamiltonian<R>) -> Self {
        Self { ham: ham.clone() }
    }

    pub fn hamiltonian(&self) -> &ContactHamiltonian<R> {
        &self.ham
    }

    pub fn eval(&self, x: R, u: R, v: R) -> Result<R> {
        match &self.ham.kind {
            Kind::Quadratic(q) => {
                let d = v - q.b.eval(x);
                Ok(d * d / (R::lit(4.0) * q.a.eval(x)) - q.c.eval(x) + q.lambda * u)
            }
            Kind::Dual(h) => ContactLagrangian { ham: (**h).clone() }.eval(x, -u, -v),
            Kind::Custom(c) => {
                if let Some(l) = &c.lagrangian {
                    Ok(l(x, u, v))
                } else {
                    legendre(&self.ham, x, u, v).map(|(l, _)| l)
                }
            }
        }
    }

    /// `dL/du`; equals `-dH/du` at the matched momentum.
    pub fn d_u(&self, x: R, u: R, v: R) -> Result<R> {
        match &self.ham.kind {
            Kind::Quadratic(q) => Ok(q.lambda),
            Kind::Dual(h) => ContactLagrangian { ham: (**h).clone() }
                .d_u(x, -u, -v)
                .map(|d| -d),
            Kind::Custom(_) => {
                let h = R::lit(FD_STEP);
                let a = self.eval(x, u + h, v)?;
                let b = self.eval(x, u - h, v)?;
                Ok((a - b) / (R::lit(2.0) * h))
            }
        }
    }

    /// `dL/dv`, which is the matched momentum `p*`.
    pub fn d_v(&self, x: R, u: R, v: R) -> Result<R> {
        match &self.ham.kind {
            Kind::Quadratic(q) => Ok((v - q.b.eval(x)) / (R::lit(2.0) * q.a.eval(x))),
            Kind::Dual(h) => ContactLagrangian { ham: (**h).clone() }
                .d_v(x, -u, -v)
                .map(|p| -p),
            Kind::Custom(_) => legendre(&self.ham, x, u, v).map(|(_, p)| p),
        }
    }
}

/// Legendre transform in the momentum slot:
/// `L(x,u,v) = sup_p [p v - H(x,u,p)]`, returned with the maximizing `p*`.
///
/// Solved as the root of the increasing map `p -> dH/dp(x,u,p) - v` by
/// bisection-safeguarded Newton.
pub fn legendre<R: Real>(h: &ContactHamiltonian<R>, x: R, u: R, v: R) -> Result<(R, R)> {
    let err = || Error::Legendre {
        x: x.to_f64_lossy(),
        u: u.to_f64_lossy(),
        v: v.to_f64_lossy(),
    };
    let g = |p: R| h.d_p(x, u, p) - v;

    // expand a bracket [lo, hi] with g(lo) <= 0 <= g(hi)
    let mut radius = R::one() + v.abs();
    let (mut lo, mut hi) = (-radius, radius);
    let mut expansions = 0;
    while g(lo) > R::zero() || g(hi) < R::zero() {
        radius = radius * R::lit(2.0);
        lo = -radius;
        hi = radius;
        expansions += 1;
        if expansions > 60 {
            return Err(err());
        }
    }

    let tol = R::lit(1e-12) * (R::one() + v.abs());
    let mut p = (lo + hi) * R::lit(0.5);
    let fd = R::lit(1e-6);
    for _ in 0..200 {
        let gp = g(p);
        if gp.abs() <= tol {
            let l = p * v - h.eval(x, u, p);
            return Ok((l, p));
        }
        if gp > R::zero() {
            hi = p;
        } else {
            lo = p;
        }
        // Newton with second-difference slope, clipped back into the bracket
        let slope = (g(p + fd) - g(p - fd)) / (R::lit(2.0) * fd);
        let mut next = if slope > R::zero() { p - gp / slope } else { p };
        if !(next > lo && next < hi) {
            next = (lo + hi) * R::lit(0.5);
        }
        if (next - p).abs() <= R::lit(1e-15) * (R::one() + p.abs()) {
            let l = next * v - h.eval(x, u, next);
            return Ok((l, next));
        }
        p = next;
    }
    let gp = g(p);
    if gp.abs() <= tol * R::lit(100.0) {
        let l = p * v - h.eval(x, u, p);
        return Ok((l, p));
    }
    Err(err())
}

/// Which structural assumption a sample violated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionKind {
    ConvexityInP,
    MonotonicityBand,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionViolation {
    pub which: AssumptionKind,
    pub x: f64,
    pub u: f64,
    pub p: f64,
    pub value: f64,
}

/// Outcome of sampling the structural assumptions on a box.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub d2pp_min: f64,
    pub d2pp_max: f64,
    pub neg_du_min: f64,
    pub neg_du_max: f64,
    pub k1: f64,
    pub k2: f64,
    pub samples: usize,
    pub violations: Vec<AssumptionViolation>,
}

impl AssumptionReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    /// Promote the first violation to an error.
    pub fn into_result(self) -> Result<Self> {
        match self.violations.first() {
            None => Ok(self),
            Some(v) => Err(Error::Assumption {
                which: format!("{:?}", v.which),
                x: v.x,
                u: v.u,
                p: v.p,
                value: v.value,
            }),
        }
    }
}

/// Sample the box with `n_samples` points per axis and check convexity in `p`
/// (by second differences) and the monotonicity band on `-dH/du`.
///
/// The base tolerance is `1e-9`. When the u-derivative is synthesized by
/// finite differences the tolerance is widened by the rounding floor of the
/// difference quotient, otherwise values of size `|H| ~ 100` would trip the
/// check on noise alone.
pub fn verify_assumptions<R: Real>(
    h: &ContactHamiltonian<R>,
    bbox: &WorkingBox<R>,
    n_samples: usize,
) -> AssumptionReport {
    let m = n_samples.max(3);
    let k1 = h.k1().to_f64_lossy();
    let k2 = h.k2().to_f64_lossy();
    let analytic = h.has_analytic_partials();

    let mut report = AssumptionReport {
        d2pp_min: f64::INFINITY,
        d2pp_max: f64::NEG_INFINITY,
        neg_du_min: f64::INFINITY,
        neg_du_max: f64::NEG_INFINITY,
        k1,
        k2,
        samples: 0,
        violations: Vec::new(),
    };

    let h2 = R::lit(1e-4);
    for ix in 0..m {
        let x = R::lit(ix as f64 / m as f64 - 0.5);
        for iu in 0..m {
            let tu = R::lit(iu as f64 / (m - 1) as f64);
            let u = bbox.u.0 + tu * (bbox.u.1 - bbox.u.0);
            for ip in 0..m {
                let tp = R::lit(ip as f64 / (m - 1) as f64);
                let p = bbox.p.0 + tp * (bbox.p.1 - bbox.p.0);
                report.samples += 1;

                let habs = h.eval(x, u, p).abs().to_f64_lossy();
                let tol = if analytic {
                    1e-9
                } else {
                    1e-9 + 1e-10 * (1.0 + habs)
                };

                let d2 = h.d2_pp(x, u, p, h2).to_f64_lossy();
                report.d2pp_min = report.d2pp_min.min(d2);
                report.d2pp_max = report.d2pp_max.max(d2);
                if d2 <= tol {
                    push_violation(
                        &mut report,
                        AssumptionKind::ConvexityInP,
                        x,
                        u,
                        p,
                        d2,
                    );
                }

                let neg_du = (-h.d_u(x, u, p)).to_f64_lossy();
                report.neg_du_min = report.neg_du_min.min(neg_du);
                report.neg_du_max = report.neg_du_max.max(neg_du);
                if neg_du < k2 - tol || neg_du > k1 + tol {
                    push_violation(
                        &mut report,
                        AssumptionKind::MonotonicityBand,
                        x,
                        u,
                        p,
                        neg_du,
                    );
                }
            }
        }
    }
    report
}

fn push_violation<R: Real>(
    report: &mut AssumptionReport,
    which: AssumptionKind,
    x: R,
    u: R,
    p: R,
    value: f64,
) {
    if report.violations.len() < 8 {
        report.violations.push(AssumptionViolation {
            which,
            x: x.to_f64_lossy(),
            u: u.to_f64_lossy(),
            p: p.to_f64_lossy(),
            value,
        });
    }
}

/// Catalog entry: a Hamiltonian id plus named numeric parameters, as it
/// appears in scenario config files.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HamiltonianSpec {
    pub id: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl HamiltonianSpec {
    pub fn example() -> Self {
        Self {
            id: "example_quadratic".into(),
            params: BTreeMap::new(),
        }
    }
}

/// Build a Hamiltonian from the built-in catalog.
///
/// Known ids:
/// - `example_quadratic`: `H = p^2 - lambda u` (parameter `lambda`, default 2)
/// - `quadratic_trig`: `H = a(x) p^2 + b(x) p - lambda u + c(x)` with
///   trigonometric coefficients (`lambda`, `a0`, `a_cos`, `a_sin`, `b0`,
///   `b_cos`, `b_sin`, `c0`, `c_cos`, `c_sin`)
pub fn from_catalog<R: Real>(spec: &HamiltonianSpec) -> Result<ContactHamiltonian<R>> {
    let mut params = spec.params.clone();
    let mut take = |name: &str, default: f64| -> f64 {
        params.remove(name).unwrap_or(default)
    };
    let built = match spec.id.as_str() {
        "example_quadratic" => {
            let lambda = take("lambda", 2.0);
            let q = QuadraticInP {
                lambda: R::lit(lambda),
                a: Trig::constant(R::one()),
                b: Trig::constant(R::zero()),
                c: Trig::constant(R::zero()),
            };
            ContactHamiltonian::quadratic(spec.id.clone(), q)?
        }
        "quadratic_trig" => {
            let lambda = take("lambda", 1.0);
            let q = QuadraticInP {
                lambda: R::lit(lambda),
                a: Trig {
                    c0: R::lit(take("a0", 1.0)),
                    c_cos: R::lit(take("a_cos", 0.0)),
                    c_sin: R::lit(take("a_sin", 0.0)),
                },
                b: Trig {
                    c0: R::lit(take("b0", 0.0)),
                    c_cos: R::lit(take("b_cos", 0.0)),
                    c_sin: R::lit(take("b_sin", 0.0)),
                },
                c: Trig {
                    c0: R::lit(take("c0", 0.0)),
                    c_cos: R::lit(take("c_cos", 0.0)),
                    c_sin: R::lit(take("c_sin", 0.0)),
                },
            };
            ContactHamiltonian::quadratic(spec.id.clone(), q)?
        }
        other => return Err(Error::UnknownHamiltonian(other.to_string())),
    };
    if let Some(unknown) = params.keys().next() {
        return Err(Error::InvalidParams(format!(
            "unknown parameter `{unknown}` for hamiltonian `{}`",
            spec.id
        )));
    }
    Ok(built)
}

/// The built-in quadratic example `H = p^2 - 2u`.
pub fn example_hamiltonian<R: Real>() -> ContactHamiltonian<R> {
    from_catalog(&HamiltonianSpec::example()).expect("example catalog entry is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> ContactHamiltonian<f64> {
        example_hamiltonian()
    }

    /// Brute-force Legendre oracle: max of `p v - H` over a fine p-grid.
    fn legendre_bruteforce(h: &ContactHamiltonian<f64>, x: f64, u: f64, v: f64) -> (f64, f64) {
        let mut best = f64::NEG_INFINITY;
        let mut best_p = 0.0;
        let radius = 40.0;
        let n = 4_000_001_usize;
        for i in 0..n {
            let p = -radius + 2.0 * radius * i as f64 / (n - 1) as f64;
            let val = p * v - h.eval(x, u, p);
            if val > best {
                best = val;
                best_p = p;
            }
        }
        (best, best_p)
    }

    #[test]
    fn legendre_of_example_is_quadratic_in_v() {
        let h = example();
        for (x, u, v) in [(0.0, 0.3, 1.0), (-0.25, -1.0, -2.5), (0.4, 2.0, 0.0)] {
            let (l, p) = legendre(&h, x, u, v).unwrap();
            let expected_l = v * v / 4.0 + 2.0 * u;
            let expected_p = v / 2.0;
            assert!((l - expected_l).abs() < 1e-9, "L={l} vs {expected_l}");
            assert!((p - expected_p).abs() < 1e-9);
        }
    }

    #[test]
    fn legendre_matches_bruteforce_grid_search() {
        let h = example();
        let (x, u, v) = (0.1, -0.7, 1.7);
        let (l, _) = legendre(&h, x, u, v).unwrap();
        let (lb, pb) = legendre_bruteforce(&h, x, u, v);
        assert!((l - lb).abs() < 1e-8, "newton {l} vs brute {lb} (p={pb})");
    }

    #[test]
    fn lagrangian_closed_form_matches_legendre() {
        let h = example();
        let lag = ContactLagrangian::new(&h);
        for (x, u, v) in [(0.0, 0.0, 0.0), (0.2, 1.5, -3.0), (-0.4, -2.0, 0.7)] {
            let closed = lag.eval(x, u, v).unwrap();
            let (num, _) = legendre(&h, x, u, v).unwrap();
            assert!((closed - num).abs() < 1e-9);
        }
        // v = 0 special case: maximum of -p^2 + 2u at p = 0
        assert_eq!(lag.eval(0.3, 1.0, 0.0).unwrap(), 2.0);
        assert_eq!(lag.d_v(0.3, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lagrangian_is_convex_in_v_with_banded_u_derivative() {
        let h = example();
        let lag = ContactLagrangian::new(&h);
        let dv = 0.25;
        for (x, u) in [(0.0, 0.0), (0.2, -1.0), (-0.4, 1.5)] {
            for v in [-3.0, -0.5, 0.0, 1.0, 2.5] {
                let second = lag.eval(x, u, v + dv).unwrap() - 2.0 * lag.eval(x, u, v).unwrap()
                    + lag.eval(x, u, v - dv).unwrap();
                assert!(second >= -1e-12, "convexity defect {second} at v={v}");
                let du = lag.d_u(x, u, v).unwrap();
                assert!((h.k2()..=h.k1()).contains(&du), "dL/du {du} outside band");
            }
        }
    }

    #[test]
    fn fenchel_young_inequality_on_samples() {
        let h = example();
        let lag = ContactLagrangian::new(&h);
        for ((x, u), (v, p)) in [
            ((0.0, 0.5), (1.0, 2.0)),
            ((0.25, -1.0), (-2.0, 0.3)),
            ((-0.3, 2.0), (0.5, -1.5)),
        ] {
            let l = lag.eval(x, u, v).unwrap();
            assert!(l + h.eval(x, u, p) >= p * v - 1e-12);
            // equality at the matched pair
            let p_star = lag.d_v(x, u, v).unwrap();
            let slack = l + h.eval(x, u, p_star) - p_star * v;
            assert!(slack.abs() < 1e-9, "slack {slack}");
        }
    }

    #[test]
    fn legendre_round_trip_recovers_hamiltonian() {
        // H(p) = sup_v [p v - L(v)] within 1e-6 on samples
        let h = example();
        let lag = ContactLagrangian::new(&h);
        for (x, u, p) in [(0.0, 0.0, 1.0), (0.2, -1.0, -2.0), (-0.1, 0.8, 0.25)] {
            let mut best = f64::NEG_INFINITY;
            let n = 200_001;
            for i in 0..n {
                let v = -20.0 + 40.0 * i as f64 / (n - 1) as f64;
                best = best.max(p * v - lag.eval(x, u, v).unwrap());
            }
            assert!((best - h.eval(x, u, p)).abs() < 1e-6);
        }
    }

    #[test]
    fn dual_of_example() {
        let h = example();
        let f = h.dual();
        // F = 2u + p^2
        assert_eq!(f.eval(0.3, 1.0, 1.0), 3.0);
        for (x, u, p) in [(0.0, 0.7, -1.0), (0.4, -2.0, 3.0)] {
            assert_eq!(f.eval(x, u, p), h.eval(x, -u, -p));
            // involution is pointwise exact
            assert_eq!(f.dual().eval(x, u, p), h.eval(x, u, p));
        }
        // dual flips the sign band
        assert_eq!(f.d_u(0.1, 0.5, 0.2), 2.0);
        assert_eq!(h.d_u(0.1, 0.5, 0.2), -2.0);
    }

    #[test]
    fn assumptions_pass_for_example() {
        let h = example();
        let report = verify_assumptions(&h, &WorkingBox::standard(), 9);
        assert!(report.pass(), "violations: {:?}", report.violations);
        assert!((report.neg_du_min - 2.0).abs() < 1e-9);
        assert!((report.neg_du_max - 2.0).abs() < 1e-9);
        assert!((report.d2pp_min - 2.0).abs() < 1e-6);
        assert!((report.d2pp_max - 2.0).abs() < 1e-6);
    }

    #[test]
    fn wrong_monotonicity_sign_fails() {
        // H = +2u + p^2 has dH/du = +2, outside the band
        let c = Custom {
            eval: Arc::new(|_x, u: f64, p: f64| 2.0 * u + p * p),
            d_x: None,
            d_u: None,
            d_p: None,
            lagrangian: None,
            k1: 2.0,
            k2: 2.0,
            superlinear_radius: None,
        };
        let h = ContactHamiltonian::custom("bad_sign", c).unwrap();
        let report = verify_assumptions(&h, &WorkingBox::standard(), 5);
        assert!(!report.pass());
        assert!(report
            .violations
            .iter()
            .all(|v| v.which == AssumptionKind::MonotonicityBand));
        assert!(report.into_result().is_err());
    }

    #[test]
    fn nonconvex_in_p_fails_near_zero() {
        // H = -2u + p^4 - p^2: second derivative 12 p^2 - 2 < 0 at p = 0
        let c = Custom {
            eval: Arc::new(|_x, u: f64, p: f64| -2.0 * u + p.powi(4) - p * p),
            d_x: None,
            d_u: None,
            d_p: None,
            lagrangian: None,
            k1: 2.0,
            k2: 2.0,
            superlinear_radius: None,
        };
        let h = ContactHamiltonian::custom("nonconvex", c).unwrap();
        let bbox = WorkingBox {
            u: (-1.0, 1.0),
            p: (-0.5, 0.5),
        };
        let report = verify_assumptions(&h, &bbox, 9);
        assert!(report
            .violations
            .iter()
            .any(|v| v.which == AssumptionKind::ConvexityInP));
    }

    #[test]
    fn superlinear_radius_is_valid() {
        let h = example();
        let r = h.superlinear_radius(3.0, 4.0).unwrap();
        for sign in [-1.0, 1.0] {
            for mult in [1.0, 2.0, 10.0] {
                let p = sign * r * mult;
                for u in [-4.0, 0.0, 4.0] {
                    assert!(h.eval(0.0, u, p) >= 3.0 * p.abs());
                }
            }
        }
    }

    #[test]
    fn catalog_rejects_unknown_ids_and_params() {
        assert!(matches!(
            from_catalog::<f64>(&HamiltonianSpec {
                id: "nope".into(),
                params: BTreeMap::new()
            }),
            Err(Error::UnknownHamiltonian(_))
        ));
        let mut params = BTreeMap::new();
        params.insert("typo".to_string(), 1.0);
        assert!(from_catalog::<f64>(&HamiltonianSpec {
            id: "example_quadratic".into(),
            params
        })
        .is_err());
    }

    #[test]
    fn catalog_quadratic_trig_needs_positive_a() {
        let mut params = BTreeMap::new();
        params.insert("a0".to_string(), 0.5);
        params.insert("a_cos".to_string(), 0.6);
        assert!(from_catalog::<f64>(&HamiltonianSpec {
            id: "quadratic_trig".into(),
            params
        })
        .is_err());
    }
}
