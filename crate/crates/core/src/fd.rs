//! Monotone finite-difference solver for the Cauchy problem, used to
//! cross-validate the semi-Lagrangian semigroup.
//!
//! One step applies a central-difference gradient with explicit artificial
//! viscosity (global Lax-Friedrichs):
//!
//! ```text
//! W'_i = W_i - dt H(x_i, W_i, (W_{i+1} - W_{i-1}) / 2dx)
//!            + (alpha dt / 2dx) (W_{i+1} - 2 W_i + W_{i-1})
//! ```
//!
//! Monotonicity follows from `alpha >= sup |dH/dp|` together with the step
//! bound `dt (alpha/dx + k1) <= 1`; the strict decrease of `H` in `u` only
//! strengthens the diagonal term.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid};
use crate::model::ContactHamiltonian;
use crate::real::Real;
use crate::semigroup::{Direction, EvolutionTrace};

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct FdParams<R: Real> {
    /// Courant number in `(0, 0.9]`.
    pub cfl: R,
    /// Artificial viscosity speed; must dominate `|dH/dp|` on the values the
    /// run actually visits.
    pub alpha: R,
}

impl<R: Real> FdParams<R> {
    pub fn new(cfl: R, alpha: R) -> Self {
        Self { cfl, alpha }
    }
}

/// Viscosity speed suggestion: sup of `|dH/dp|` over the grid with momenta
/// up to the datum's Lipschitz estimate, padded by 25%.
pub fn suggest_alpha<R: Real>(
    ham: &ContactHamiltonian<R>,
    grid: PeriodicGrid,
    datum: &GridFunction<R>,
) -> R {
    let pad = R::lit(1.25);
    let p_max = pad * datum.lipschitz_estimate().max(R::one());
    let u_lo = datum.min_value() - R::one();
    let u_hi = datum.max_value() + R::one();
    let mut best = R::zero();
    for i in 0..grid.len() {
        let x = grid.node(i);
        for (u, p) in [
            (u_lo, p_max),
            (u_lo, -p_max),
            (u_hi, p_max),
            (u_hi, -p_max),
            (u_lo, R::zero()),
            (u_hi, R::zero()),
        ] {
            best = best.max(ham.d_p(x, u, p).abs());
        }
    }
    pad * best
}

pub struct FdSolver<R: Real> {
    ham: ContactHamiltonian<R>,
    grid: PeriodicGrid,
    params: FdParams<R>,
    dt: R,
    xs: Vec<R>,
}

impl<R: Real> FdSolver<R> {
    pub fn new(ham: &ContactHamiltonian<R>, grid: PeriodicGrid, params: FdParams<R>) -> Result<Self> {
        if !(params.cfl > R::zero()) || params.cfl > R::lit(0.9) {
            return Err(Error::InvalidParams(format!(
                "cfl must lie in (0, 0.9], got {}",
                params.cfl.to_f64_lossy()
            )));
        }
        if !(params.alpha > R::zero()) {
            return Err(Error::InvalidParams("alpha must be positive".into()));
        }
        let dx: R = grid.dx();
        let dt = params.cfl * dx / params.alpha;
        if dt * (params.alpha / dx + ham.k1()) > R::one() {
            return Err(Error::InvalidParams(format!(
                "dt (alpha/dx + k1) = {} > 1 breaks scheme monotonicity",
                (dt * (params.alpha / dx + ham.k1())).to_f64_lossy()
            )));
        }
        Ok(Self {
            ham: ham.clone(),
            grid,
            params,
            dt,
            xs: grid.nodes(),
        })
    }

    pub fn dt(&self) -> R {
        self.dt
    }

    pub fn params(&self) -> FdParams<R> {
        self.params
    }

    /// One Lax-Friedrichs step.
    pub fn lf_step(&self, w: &GridFunction<R>) -> GridFunction<R> {
        assert_eq!(w.grid(), self.grid, "slice lives on a different grid");
        let n = self.grid.len();
        let dx: R = self.grid.dx();
        let half = R::lit(0.5);
        let two = R::lit(2.0);
        let visc = self.params.alpha * self.dt * half / dx;
        let vals = w.values();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let im = if i == 0 { n - 1 } else { i - 1 };
            let ip = if i + 1 == n { 0 } else { i + 1 };
            let grad = (vals[ip] - vals[im]) * half / dx;
            let lap = vals[ip] - two * vals[i] + vals[im];
            out.push(vals[i] - self.dt * self.ham.eval(self.xs[i], vals[i], grad) + visc * lap);
        }
        GridFunction::new(self.grid, out).expect("finite step values")
    }

    /// Iterate [`FdSolver::lf_step`] to `horizon`, recording every
    /// `stride`-th slice. Aborts with a blow-up error when the sup norm
    /// exceeds `1e9`.
    pub fn solve_cp(
        &self,
        phi: &GridFunction<R>,
        horizon: R,
        stride: usize,
    ) -> Result<EvolutionTrace<R>> {
        assert_eq!(phi.grid(), self.grid, "datum lives on a different grid");
        if horizon < R::zero() {
            return Err(Error::InvalidParams("horizon must be nonnegative".into()));
        }
        let stride = stride.max(1);
        let steps = ((horizon / self.dt).to_f64_lossy() + 1e-9).floor() as usize;
        let mut times = vec![R::zero()];
        let mut slices = vec![phi.clone()];
        let mut cur = phi.clone();
        let guard = R::lit(1e9);
        for s in 1..=steps {
            cur = self.lf_step(&cur);
            if cur.sup_norm() > guard {
                return Err(Error::BlowUp {
                    t_estimate: (self.dt * R::lit(s as f64)).to_f64_lossy(),
                });
            }
            if s % stride == 0 || s == steps {
                times.push(self.dt * R::lit(s as f64));
                slices.push(cur.clone());
            }
        }
        Ok(EvolutionTrace {
            times,
            slices,
            dt: self.dt,
            params: None,
            direction: Direction::Backward,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::u1_example;
    use crate::model::example_hamiltonian;

    fn solver(n: usize, alpha: f64) -> FdSolver<f64> {
        let ham = example_hamiltonian::<f64>();
        let grid = PeriodicGrid::new(n).unwrap();
        FdSolver::new(&ham, grid, FdParams::new(0.9, alpha)).unwrap()
    }

    #[test]
    fn constants_follow_forward_euler() {
        let s = solver(64, 2.0);
        let c = 0.7;
        let w = GridFunction::constant(s.grid, c);
        let stepped = s.lf_step(&w);
        let expect = c + 2.0 * c * s.dt();
        for i in 0..64 {
            assert!((stepped.value(i) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn step_is_monotone_on_ordered_pairs() {
        use rand::prelude::*;
        // alpha must dominate |H_p| = 2|w_x| on the sampled data; the pairs
        // below have Lipschitz constant at most 0.3 (2 pi + 4 pi) < 5.7
        let s = solver(100, 12.0);
        let mut rng = StdRng::seed_from_u64(42);
        let tau = std::f64::consts::TAU;
        for _ in 0..100 {
            let (a, b, ph) = (
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(0.0..tau),
            );
            let gap = rng.gen_range(0.0..0.5);
            let lo = GridFunction::from_fn(s.grid, |x: f64| {
                a * (tau * x + ph).sin() + b * (2.0 * tau * x).cos()
            });
            let hi = lo.map(|v| v + gap);
            let slo = s.lf_step(&lo);
            let shi = s.lf_step(&hi);
            for i in 0..100 {
                assert!(slo.value(i) <= shi.value(i) + 1e-14);
            }
        }
    }

    #[test]
    fn stationary_residual_is_first_order() {
        let n = 1000;
        let s = solver(n, 2.0);
        let u1 = u1_example::<f64>(s.grid);
        let stepped = s.lf_step(&u1);
        let dt = s.dt();
        let dx: f64 = s.grid.dx();

        // kink nodes carry an O(dt) viscosity residual; beyond them the
        // residual is O(dt dx)
        let res = stepped.sup_distance(&u1);
        let kink_bound = dt * (0.25 + 0.5 * s.params().alpha) * 1.05;
        assert!(res <= kink_bound, "kink residual {res:e} vs {kink_bound:e}");

        let mut smooth_res = 0.0_f64;
        for i in 0..n {
            let near_kink = [0usize, n / 2]
                .iter()
                .any(|k| ((i as isize - *k as isize).rem_euclid(n as isize) as usize).min(
                    n - ((i as isize - *k as isize).rem_euclid(n as isize) as usize),
                ) <= 3);
            if !near_kink {
                smooth_res = smooth_res.max((stepped.value(i) - u1.value(i)).abs());
            }
        }
        let smooth_bound = 4.0 * s.params().alpha * dt * dx;
        assert!(
            smooth_res <= smooth_bound,
            "smooth residual {smooth_res:e} vs {smooth_bound:e}"
        );
    }

    #[test]
    fn constant_datum_tracks_the_exponential_law() {
        let s = solver(400, 2.0);
        let c = -0.3;
        let w = GridFunction::constant(s.grid, c);
        let trace = s.solve_cp(&w, 1.0, 1000).unwrap();
        let expect = c * (2.0_f64).exp();
        let got = trace.final_slice().value(0);
        assert!(
            ((got - expect) / expect).abs() < 0.02,
            "got {got}, expect {expect}"
        );
    }

    #[test]
    fn ordered_data_stay_ordered_along_the_run() {
        let s = solver(64, 3.0);
        let lo = GridFunction::from_fn(s.grid, |x: f64| (std::f64::consts::TAU * x).sin() * 0.2);
        let hi = lo.map(|v| v + 0.1);
        let tl = s.solve_cp(&lo, 0.5, 100).unwrap();
        let th = s.solve_cp(&hi, 0.5, 100).unwrap();
        for (a, b) in tl.slices.iter().zip(&th.slices) {
            assert!(b.min_gap(a) >= 0.0);
        }
    }

    #[test]
    fn blow_up_classes_diverge() {
        // data strictly above the forward solution blow up to +inf, below to -inf
        let s = solver(200, 2.0);
        let up = GridFunction::constant(s.grid, 1.0);
        let trace = s.solve_cp(&up, 2.0, 10_000).unwrap();
        assert!(trace.final_slice().min_value() >= 10.0);
        let down = GridFunction::constant(s.grid, -1.0);
        let trace = s.solve_cp(&down, 2.0, 10_000).unwrap();
        assert!(trace.final_slice().max_value() <= -10.0);
    }

    #[test]
    fn rejects_unstable_parameters() {
        let ham = example_hamiltonian::<f64>();
        let grid = PeriodicGrid::new(64).unwrap();
        assert!(FdSolver::new(&ham, grid, FdParams::new(1.2, 2.0)).is_err());
        assert!(FdSolver::new(&ham, grid, FdParams::new(0.5, -1.0)).is_err());
    }

    #[test]
    fn suggested_alpha_covers_the_example() {
        let ham = example_hamiltonian::<f64>();
        let grid = PeriodicGrid::new(200).unwrap();
        let u1 = u1_example::<f64>(grid);
        let alpha = suggest_alpha(&ham, grid, &u1);
        // |H_p| = 2|p| with |p| up to ~1.25: alpha about 2.5 after padding
        assert!(alpha >= 2.0 && alpha <= 5.0, "alpha {alpha}");
    }
}
