//! Periodic spatial discretization of the circle `(-1/2, 1/2]` and grid
//! function algebra, including even periodic extensions of half-interval
//! profiles.

use std::io::Write;

use crate::error::{Error, Result};
use crate::real::Real;

/// Fractional offsets below this are snapped to the node, so node lookups are
/// exact despite the `1/N` spacing not being representable in binary.
const SNAP: f64 = 1e-9;

/// Uniform periodic grid with `n` nodes `x_i = -1/2 + i/n`, `i = 0..n`.
///
/// `x = -1/2` is identified with `x = 1/2`. The node count must be even so
/// that both `x = 0` and `x = 1/2` are on-grid: the built-in scenarios place
/// contact points and symmetry axes there.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicGrid {
    n: usize,
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidGrid(format!("need at least 16 nodes, got {n}")));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("node count must be even, got {n}")));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spacing `1/n`, always derived from the node count.
    #[inline]
    pub fn dx<R: Real>(&self) -> R {
        R::one() / R::lit(self.n as f64)
    }

    /// Coordinate of node `i`.
    #[inline]
    pub fn node<R: Real>(&self, i: usize) -> R {
        debug_assert!(i < self.n);
        R::lit(i as f64 / self.n as f64 - 0.5)
    }

    /// All node coordinates.
    pub fn nodes<R: Real>(&self) -> Vec<R> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    #[inline]
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    /// Locate `x` in index space: returns the base node and the fractional
    /// offset in `[0, 1)` toward the next node. Near-integer offsets snap to
    /// the node so that node coordinates resolve exactly.
    pub fn locate<R: Real>(&self, x: R) -> (usize, R) {
        let half = R::lit(0.5);
        let mut r = x + half;
        r = r - r.floor();
        if r >= R::one() {
            r = r - R::one();
        }
        let fi = r * R::lit(self.n as f64);
        let mut base = fi.floor();
        let mut frac = fi - base;
        let snap = R::lit(SNAP);
        if frac < snap {
            frac = R::zero();
        } else if frac > R::one() - snap {
            base = base + R::one();
            frac = R::zero();
        }
        let i = (base.to_f64_lossy() as isize).rem_euclid(self.n as isize) as usize;
        (i, frac)
    }

    pub fn nearest_node<R: Real>(&self, x: R) -> usize {
        let (i, frac) = self.locate(x);
        if frac.to_f64_lossy() < 0.5 {
            i
        } else {
            self.wrap(i as isize + 1)
        }
    }

    /// Circle distance between two nodes, in coordinate units.
    pub fn circle_distance<R: Real>(&self, i: usize, j: usize) -> R {
        let d = (i as isize - j as isize).rem_euclid(self.n as isize) as usize;
        let d = d.min(self.n - d);
        R::lit(d as f64) * self.dx()
    }
}

/// Interpolation rule used when grid functions are read off-node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpOrder {
    /// Piecewise linear; preserves the ordering the semigroup operators rely on.
    Linear,
    /// Periodic 4-point cubic; exact on quadratics, not monotone.
    Cubic,
}

/// Real values on the nodes of a [`PeriodicGrid`]. Immutable after
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<R: Real> {
    grid: PeriodicGrid,
    values: Vec<R>,
}

impl<R: Real> GridFunction<R> {
    /// Build from raw values; every entry must be finite.
    pub fn new(grid: PeriodicGrid, values: Vec<R>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Build from raw values without the finiteness check. Used by the point
    /// datum machinery, which stores large sentinel values at masked nodes.
    pub(crate) fn new_unchecked(grid: PeriodicGrid, values: Vec<R>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    /// Sample a closed-form expression at the nodes.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(R) -> R) -> Self {
        let values: Vec<R> = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self::new(grid, values).expect("sampled expression produced a non-finite value")
    }

    pub fn constant(grid: PeriodicGrid, c: R) -> Self {
        Self::new(grid, vec![c; grid.len()]).expect("constant must be finite")
    }

    pub fn zero(grid: PeriodicGrid) -> Self {
        Self::constant(grid, R::zero())
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[R] {
        &self.values
    }

    #[inline]
    pub fn value(&self, i: usize) -> R {
        self.values[i]
    }

    pub fn sup_norm(&self) -> R {
        self.values
            .iter()
            .fold(R::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &Self) -> R {
        self.assert_same_grid(other);
        self.values
            .iter()
            .zip(&other.values)
            .fold(R::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }

    pub fn min_value(&self) -> R {
        self.values.iter().fold(R::infinity(), |acc, v| acc.min(*v))
    }

    pub fn max_value(&self) -> R {
        self.values
            .iter()
            .fold(R::neg_infinity(), |acc, v| acc.max(*v))
    }

    /// `min_i (self_i - other_i)`.
    pub fn min_gap(&self, other: &Self) -> R {
        self.assert_same_grid(other);
        self.values
            .iter()
            .zip(&other.values)
            .fold(R::infinity(), |acc, (a, b)| acc.min(*a - *b))
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Self {
        let values = self.values.iter().map(|v| f(*v)).collect();
        Self::new(self.grid, values).expect("map produced a non-finite value")
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(R, R) -> R) -> Self {
        self.assert_same_grid(other);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Self::new(self.grid, values).expect("zip_with produced a non-finite value")
    }

    pub fn offset(&self, c: R) -> Self {
        self.map(|v| v + c)
    }

    /// Interpolate at an arbitrary point with the default (linear) rule.
    #[inline]
    pub fn interpolate(&self, x: R) -> R {
        self.interpolate_with(x, InterpOrder::Linear)
    }

    pub fn interpolate_with(&self, x: R, order: InterpOrder) -> R {
        let (i, frac) = self.grid.locate(x);
        if frac == R::zero() {
            return self.values[i];
        }
        match order {
            InterpOrder::Linear => {
                let j = self.grid.wrap(i as isize + 1);
                self.values[i] + frac * (self.values[j] - self.values[i])
            }
            InterpOrder::Cubic => {
                let im1 = self.grid.wrap(i as isize - 1);
                let ip1 = self.grid.wrap(i as isize + 1);
                let ip2 = self.grid.wrap(i as isize + 2);
                cubic_4pt(
                    self.values[im1],
                    self.values[i],
                    self.values[ip1],
                    self.values[ip2],
                    frac,
                )
            }
        }
    }

    /// Max forward difference quotient over adjacent node pairs (wrapping).
    pub fn lipschitz_estimate(&self) -> R {
        let n = self.grid.len();
        let dx: R = self.grid.dx();
        let mut best = R::zero();
        for i in 0..n {
            let j = if i + 1 == n { 0 } else { i + 1 };
            best = best.max((self.values[j] - self.values[i]).abs() / dx);
        }
        best
    }

    fn assert_same_grid(&self, other: &Self) {
        assert_eq!(
            self.grid, other.grid,
            "grid functions live on different grids"
        );
    }

    /// Two-column CSV `x,value`, one row per node.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        write!(w, "x,value\r\n")?;
        for i in 0..self.grid.len() {
            let x: R = self.grid.node(i);
            write!(w, "{},{}\r\n", x, self.values[i])?;
        }
        Ok(())
    }

    /// JSON object `{"n": ..., "values": [...]}` with 17-significant-digit
    /// decimals, so a read back is bit exact.
    pub fn write_json(&self, mut w: impl Write) -> Result<()> {
        write!(w, "{{\"n\":{},\"values\":[", self.grid.len())?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(w, ",")?;
            }
            write!(w, "{:.16e}", v)?;
        }
        write!(w, "]}}")?;
        Ok(())
    }

    pub fn read_json(r: impl std::io::Read) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Raw {
            n: usize,
            values: Vec<f64>,
        }
        let raw: Raw = serde_json::from_reader(r)
            .map_err(|e| Error::InvalidParams(format!("grid function JSON: {e}")))?;
        let grid = PeriodicGrid::new(raw.n)?;
        Self::new(grid, raw.values.into_iter().map(R::lit).collect())
    }
}

#[inline]
fn cubic_4pt<R: Real>(f0: R, f1: R, f2: R, f3: R, t: R) -> R {
    // 4-point periodic cubic with central-difference slopes.
    let half = R::lit(0.5);
    let two = R::lit(2.0);
    let three = R::lit(3.0);
    let four = R::lit(4.0);
    let five = R::lit(5.0);
    f1 + half
        * t
        * ((f2 - f0)
            + t * ((two * f0 - five * f1 + four * f2 - f3)
                + t * (three * (f1 - f2) + f3 - f0)))
}

/// Sample `profile(|x|)` at the nodes: the even 1-periodic extension of a
/// profile given on `[0, 1/2]`.
///
/// The argument `|x_i|` is computed from integer node arithmetic as
/// `|n - 2i| / (2n)`, so paired nodes receive bitwise-identical arguments
/// (plain `|i/n - 1/2|` rounds asymmetrically for node counts that are not
/// powers of two) and the endpoints `0` and `1/2` are exact.
pub fn even_periodic_extension<R: Real>(
    grid: PeriodicGrid,
    profile: impl Fn(R) -> R,
) -> GridFunction<R> {
    let n = grid.len();
    let values: Vec<R> = (0..n)
        .map(|i| {
            let m = (n as isize - 2 * i as isize).unsigned_abs();
            profile(R::lit(m as f64) / R::lit((2 * n) as f64))
        })
        .collect();
    GridFunction::new(grid, values).expect("profile produced a non-finite value")
}

/// The built-in three-piece pinned profile: equal to `x^2/2` on `[0, eps]`,
/// linear with slope `3eps/2 + 2` on `[eps, 2eps]`, and `x^2/2 + x` beyond,
/// extended evenly and periodically. Continuous at both knots.
pub fn phi_eps_example<R: Real>(grid: PeriodicGrid, eps: R) -> Result<GridFunction<R>> {
    let quarter = R::lit(0.25);
    if eps <= R::zero() || eps >= quarter {
        return Err(Error::InvalidParams(format!(
            "epsilon must lie in (0, 1/4), got {}",
            eps.to_f64_lossy()
        )));
    }
    let half = R::lit(0.5);
    let two = R::lit(2.0);
    let slope = R::lit(1.5) * eps + two;
    Ok(even_periodic_extension(grid, move |y| {
        if y <= eps {
            half * y * y
        } else if y <= two * eps {
            half * eps * eps + slope * (y - eps)
        } else {
            half * y * y + y
        }
    }))
}

/// Even periodic extension of `x^2/2`: the stationary profile of the built-in
/// quadratic scenario, with maximum `1/8` at `x = 1/2`.
pub fn u1_example<R: Real>(grid: PeriodicGrid) -> GridFunction<R> {
    let half = R::lit(0.5);
    even_periodic_extension(grid, move |y| half * y * y)
}

/// Even periodic extension of `x^2/2 + x`.
pub fn phi_example<R: Real>(grid: PeriodicGrid) -> GridFunction<R> {
    let half = R::lit(0.5);
    even_periodic_extension(grid, move |y| half * y * y + y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn rejects_bad_node_counts() {
        assert!(PeriodicGrid::new(8).is_err());
        assert!(PeriodicGrid::new(17).is_err());
        assert!(PeriodicGrid::new(16).is_ok());
    }

    #[test]
    fn special_points_are_on_grid() {
        let g = grid(64);
        let zero: f64 = g.node(32);
        let half: f64 = g.node(0);
        assert_eq!(zero, 0.0);
        assert_eq!(half, -0.5);
    }

    #[test]
    fn locate_is_exact_at_nodes() {
        let g = grid(1000);
        for i in [0usize, 1, 499, 500, 999] {
            let x: f64 = g.node(i);
            let (j, frac) = g.locate(x);
            assert_eq!(j, i);
            assert_eq!(frac, 0.0);
        }
    }

    #[test]
    fn interpolate_reproduces_nodes_and_affine_data() {
        let g = grid(100);
        let f = GridFunction::from_fn(g, |x: f64| 2.0 * x + 0.25);
        for i in 0..g.len() {
            assert_eq!(f.interpolate(g.node(i)), f.value(i));
        }
        // midpoint of a cell away from the wrap seam: affine reproduction
        let x = g.node::<f64>(10) + 0.5 * g.dx::<f64>();
        assert!((f.interpolate(x) - (2.0 * x + 0.25)).abs() < 1e-14);
    }

    #[test]
    fn interpolate_u1_matches_profile() {
        let g = grid(1000);
        let u1 = u1_example::<f64>(g);
        let err = (u1.interpolate(0.3) - 0.045).abs();
        let dx: f64 = g.dx();
        assert!(err <= dx * dx, "interp error {err:e}");
    }

    #[test]
    fn even_extension_values() {
        let g = grid(1000);
        let u1 = u1_example::<f64>(g);
        assert_eq!(u1.interpolate(0.0), 0.0);
        assert!((u1.interpolate(0.5) - 0.125).abs() < 1e-15);

        let phi = phi_example::<f64>(g);
        assert!((phi.interpolate(0.5) - 0.625).abs() < 1e-15);

        let zero = even_periodic_extension(g, |_: f64| 0.0);
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn even_extension_is_symmetric_bitwise() {
        let g = grid(64);
        let f = even_periodic_extension(g, |y: f64| (1.3 * y).sin() + y * y);
        for i in 0..g.len() {
            let j = g.wrap(-(i as isize));
            assert_eq!(f.value(i), f.value(j), "asymmetry at node {i}");
        }
    }

    #[test]
    fn pinned_profile_knots() {
        let g = grid(1000);
        let eps = 0.1_f64;
        let f = phi_eps_example(g, eps).unwrap();
        assert!((f.interpolate(eps) - eps * eps / 2.0).abs() < 1e-12);
        assert!((f.interpolate(2.0 * eps) - (2.0 * eps * eps + 2.0 * eps)).abs() < 1e-12);
        assert_eq!(f.interpolate(0.0), 0.0);
        assert!(phi_eps_example(g, 0.3_f64).is_err());
        assert!(phi_eps_example(g, 0.0_f64).is_err());
    }

    #[test]
    fn lipschitz_estimates() {
        let g = grid(1000);
        let dx: f64 = g.dx();
        let u1 = u1_example::<f64>(g);
        assert!((u1.lipschitz_estimate() - 0.5).abs() <= dx);
        let phi = phi_example::<f64>(g);
        assert!((phi.lipschitz_estimate() - 1.5).abs() <= dx);
        let c = GridFunction::constant(g, 3.0_f64);
        assert_eq!(c.lipschitz_estimate(), 0.0);
    }

    #[test]
    fn csv_has_two_columns() {
        let g = grid(16);
        let f = GridFunction::constant(g, 1.5_f64);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.split("\r\n");
        assert_eq!(lines.next(), Some("x,value"));
        assert_eq!(text.trim_end().split("\r\n").count(), 17);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let g = grid(32);
        let f = GridFunction::from_fn(g, |x: f64| (7.0 * x).sin() / 3.0 + 0.1);
        let mut buf = Vec::new();
        f.write_json(&mut buf).unwrap();
        let back = GridFunction::<f64>::read_json(buf.as_slice()).unwrap();
        assert_eq!(f.values(), back.values());
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = grid(16);
        let mut vals = vec![0.0_f64; 16];
        vals[3] = f64::NAN;
        assert!(GridFunction::new(g, vals).is_err());
    }
}
