//! Equivariant n-vortex profiles.
//!
//! With `ψ = f(r) e^{inθ}` and `A = a(r) n ∇θ` the static Ginzburg–Landau
//! equations reduce to
//!
//! ```text
//! f'' + f'/r − n²(1−a)² f / r² + λ(1 − f²) f = 0
//! a'' − a'/r + (1 − a) f² = 0
//! ```
//!
//! with `f(0) = a(0) = 0` and `f, a → 1` as `r → ∞`. The solver works with
//! the deficits `g = 1 − f` and `u = 1 − a` so that the exponentially small
//! tails keep full relative precision, and runs a damped Newton iteration on
//! a second-order finite-difference discretization (block tridiagonal, 2×2
//! blocks). At `r_max` Robin conditions `g' = −m_λ g` and
//! `u'/u = −K₀(r)/K₁(r)` (the log-derivative of the linearized tail
//! `u ∝ r K₁(r)`) close the system.
//!
//! The magnetic field is `B = n a'/r`. Far from the core it solves
//! `(−Δ + 1) B = 0`, so `B(r) → n β K₀(r) = n β K₁(r)[1 − 1/(2r) + O(r⁻²)]`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::quadrature::trapezoid;
use crate::special;

/// Sup-norm tolerance for the discrete ODE residual of a returned profile.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
const MAX_NEWTON_ITERATIONS: usize = 200;
/// Default window for the far-field amplitude fit.
pub const DEFAULT_BETA_WINDOW: (f64, f64) = (8.0, 12.0);

/// `m_λ = min(√(2λ), 2)`, the decay rate of `1 − f`.
pub fn m_lambda(lambda: f64) -> f64 {
    (2.0 * lambda).sqrt().min(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub n: i32,
    pub lambda: f64,
    pub r_max: f64,
    pub num_points: usize,
}

impl ProfileParams {
    /// Parameters with a truncation radius and resolution suitable for lattice work.
    pub fn new(n: i32, lambda: f64) -> Self {
        let m = m_lambda(lambda.max(1e-12)).min(1.0);
        let r_max = (20.0 / m).max(30.0).ceil();
        Self {
            n,
            lambda,
            r_max,
            num_points: (r_max * 100.0) as usize + 1,
        }
    }

    pub fn with_grid(mut self, r_max: f64, num_points: usize) -> Self {
        self.r_max = r_max;
        self.num_points = num_points;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Parameter("vortex degree n must be nonzero".into()));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Parameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        let min_r = 20.0 / m_lambda(self.lambda).min(1.0);
        if !(self.r_max >= min_r * (1.0 - 1e-12)) {
            return Err(Error::Parameter(format!(
                "r_max = {} is below 20/min(m_lambda, 1) = {min_r:.3}",
                self.r_max
            )));
        }
        if self.num_points < 256 {
            return Err(Error::Parameter(format!("num_points = {} < 256", self.num_points)));
        }
        Ok(())
    }
}

/// Uniform radial grid `r_i = i·Δ`, `i = 0..N−1`, `r_{N−1} = r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn uniform(r_max: f64, num_points: usize) -> Self {
        let step = r_max / (num_points - 1) as f64;
        let mut nodes: Vec<f64> = (0..num_points).map(|i| i as f64 * step).collect();
        nodes[num_points - 1] = r_max;
        Self { nodes }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileScalars {
    pub energy: f64,
    pub gamma_n: f64,
    pub beta_n: f64,
    pub beta_fit_residual: f64,
    pub m_lambda: f64,
    pub fitted_rate_f: f64,
    #[serde(rename = "fitted_rate_B")]
    pub fitted_rate_b: f64,
}

/// Profile values at an arbitrary radius.
#[derive(Debug, Clone, Copy)]
pub struct ProfileSample {
    pub f: f64,
    pub df: f64,
    pub a: f64,
    pub da: f64,
    /// `a / r²`, finite at the origin.
    pub a_over_r2: f64,
    /// `f / r^{|n|}`, finite at the origin.
    pub f_over_rn: f64,
    /// `a' / r`, finite at the origin (`B = n a'/r`).
    pub da_over_r: f64,
}

#[derive(Debug, Clone)]
pub struct VortexProfile {
    pub params: ProfileParams,
    pub grid: RadialGrid,
    pub f: Vec<f64>,
    pub a: Vec<f64>,
    /// `1 − f`, kept separately for tail precision.
    pub f_deficit: Vec<f64>,
    /// `1 − a`.
    pub a_deficit: Vec<f64>,
    pub df: Vec<f64>,
    pub da: Vec<f64>,
    pub scalars: ProfileScalars,
}

fn derivative(values: &[f64], step: f64, end_slope: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step);
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * step);
    }
    d[n - 1] = end_slope;
    d
}

/// Discrete residuals of the deficit system at nodes `1..N−1` (interleaved F, G).
struct Discretization {
    n2: f64,
    lambda: f64,
    step: f64,
    r: Vec<f64>,
    kappa_g: f64,
    kappa_u: f64,
}

impl Discretization {
    fn new(params: &ProfileParams, grid: &RadialGrid) -> Self {
        let r_end = grid.r_max();
        Self {
            n2: (params.n as f64).powi(2),
            lambda: params.lambda,
            step: grid.spacing(),
            r: grid.nodes().to_vec(),
            kappa_g: m_lambda(params.lambda),
            kappa_u: special::k0_scaled(r_end) / special::k1_scaled(r_end),
        }
    }

    /// Neighbour values with the ghost node beyond `r_max` eliminated through the Robin conditions.
    fn neighbours(&self, g: &[f64], u: &[f64], i: usize) -> (f64, f64, f64, f64) {
        let last = self.r.len() - 1;
        if i < last {
            (g[i - 1], g[i + 1], u[i - 1], u[i + 1])
        } else {
            let h = self.step;
            (
                g[i - 1],
                g[i - 1] - 2.0 * h * self.kappa_g * g[i],
                u[i - 1],
                u[i - 1] - 2.0 * h * self.kappa_u * u[i],
            )
        }
    }

    fn residual(&self, g: &[f64], u: &[f64]) -> Vec<(f64, f64)> {
        let h2 = self.step * self.step;
        (1..self.r.len())
            .map(|i| {
                let r = self.r[i];
                let (gm, gp, um, up) = self.neighbours(g, u, i);
                let (gi, ui) = (g[i], u[i]);
                let fi = 1.0 - gi;
                let fr = -(gp - 2.0 * gi + gm) / h2 - (gp - gm) / (2.0 * self.step * r)
                    - self.n2 * ui * ui * fi / (r * r)
                    + self.lambda * gi * (2.0 - gi) * fi;
                let gr = -(up - 2.0 * ui + um) / h2 + (up - um) / (2.0 * self.step * r) + ui * fi * fi;
                (fr, gr)
            })
            .collect()
    }

    /// Jacobian blocks (lower, diagonal, upper) for unknown node `i`.
    fn blocks(&self, g: &[f64], u: &[f64], i: usize) -> ([[f64; 2]; 2], [[f64; 2]; 2], [[f64; 2]; 2]) {
        let h = self.step;
        let h2 = h * h;
        let r = self.r[i];
        let last = self.r.len() - 1;
        let (gi, ui) = (g[i], u[i]);
        let fi = 1.0 - gi;
        let cg = 1.0 / (2.0 * h * r);
        let mut lower = [[-1.0 / h2 + cg, 0.0], [0.0, -1.0 / h2 - cg]];
        let upper = [[-1.0 / h2 - cg, 0.0], [0.0, -1.0 / h2 + cg]];
        let mut diag = [
            [
                2.0 / h2 + self.n2 * ui * ui / (r * r) + self.lambda * (2.0 * fi * fi - gi * (2.0 - gi)),
                -2.0 * self.n2 * ui * fi / (r * r),
            ],
            [-2.0 * ui * fi, 2.0 / h2 + fi * fi],
        ];
        if i == last {
            // ghost = x_{i−1} − 2hκ x_i folded into the stencil
            lower[0][0] += upper[0][0];
            lower[1][1] += upper[1][1];
            diag[0][0] += upper[0][0] * (-2.0 * h * self.kappa_g);
            diag[1][1] += upper[1][1] * (-2.0 * h * self.kappa_u);
            return (lower, diag, [[0.0; 2]; 2]);
        }
        (lower, diag, upper)
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn mat_vec(a: &[[f64; 2]; 2], v: (f64, f64)) -> (f64, f64) {
    (a[0][0] * v.0 + a[0][1] * v.1, a[1][0] * v.0 + a[1][1] * v.1)
}

fn mat_inv(a: &[[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

/// Block Thomas algorithm for `J δ = rhs` on nodes `1..N−1`.
fn solve_block_tridiagonal(disc: &Discretization, g: &[f64], u: &[f64], rhs: &[(f64, f64)]) -> Option<Vec<(f64, f64)>> {
    let m = rhs.len();
    let mut c_prime: Vec<[[f64; 2]; 2]> = Vec::with_capacity(m);
    let mut d_prime: Vec<(f64, f64)> = Vec::with_capacity(m);
    for k in 0..m {
        let i = k + 1;
        let (lower, diag, upper) = disc.blocks(g, u, i);
        let (mut dd, mut rr) = (diag, rhs[k]);
        if k > 0 {
            let lc = mat_mul(&lower, &c_prime[k - 1]);
            for p in 0..2 {
                for q in 0..2 {
                    dd[p][q] -= lc[p][q];
                }
            }
            let ld = mat_vec(&lower, d_prime[k - 1]);
            rr = (rr.0 - ld.0, rr.1 - ld.1);
        }
        let inv = mat_inv(&dd)?;
        c_prime.push(mat_mul(&inv, &upper));
        d_prime.push(mat_vec(&inv, rr));
    }
    let mut x = vec![(0.0, 0.0); m];
    x[m - 1] = d_prime[m - 1];
    for k in (0..m - 1).rev() {
        let cx = mat_vec(&c_prime[k], x[k + 1]);
        x[k] = (d_prime[k].0 - cx.0, d_prime[k].1 - cx.1);
    }
    Some(x)
}

fn sup_norm(res: &[(f64, f64)]) -> f64 {
    res.iter().fold(0.0, |m, (a, b)| m.max(a.abs()).max(b.abs()))
}

/// Solves the n-vortex boundary-value problem.
pub fn solve_profile(params: ProfileParams) -> Result<VortexProfile> {
    params.validate()?;
    let grid = RadialGrid::uniform(params.r_max, params.num_points);
    let disc = Discretization::new(&params, &grid);
    let abs_n = params.n.unsigned_abs() as i32;

    let mut g: Vec<f64> = grid.nodes().iter().map(|&r| 1.0 - r.tanh().powi(abs_n)).collect();
    let mut u: Vec<f64> = grid.nodes().iter().map(|&r| (-r * r).exp()).collect();
    g[0] = 1.0;
    u[0] = 1.0;

    let mut res = disc.residual(&g, &u);
    let mut norm = sup_norm(&res);
    let mut iterations = 0;
    while norm > 1e-11 {
        if iterations >= MAX_NEWTON_ITERATIONS {
            break;
        }
        iterations += 1;
        let neg: Vec<(f64, f64)> = res.iter().map(|&(a, b)| (-a, b * -1.0)).collect();
        let delta = solve_block_tridiagonal(&disc, &g, &u, &neg).ok_or(Error::SolverFailure {
            iterations,
            residual: norm,
        })?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut g_try = g.clone();
            let mut u_try = u.clone();
            for (k, d) in delta.iter().enumerate() {
                g_try[k + 1] += step * d.0;
                u_try[k + 1] += step * d.1;
            }
            let res_try = disc.residual(&g_try, &u_try);
            let norm_try = sup_norm(&res_try);
            if norm_try.is_finite() && (norm_try < norm || norm_try < 1e-11) {
                g = g_try;
                u = u_try;
                res = res_try;
                norm = norm_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm > RESIDUAL_TOLERANCE {
        return Err(Error::SolverFailure { iterations, residual: norm });
    }

    let h = grid.spacing();
    let last = grid.len() - 1;
    let dg = derivative(&g, h, -disc.kappa_g * g[last]);
    let du = derivative(&u, h, -disc.kappa_u * u[last]);
    let profile = VortexProfile {
        params,
        f: g.iter().map(|v| 1.0 - v).collect(),
        a: u.iter().map(|v| 1.0 - v).collect(),
        df: dg.iter().map(|v| -v).collect(),
        da: du.iter().map(|v| -v).collect(),
        f_deficit: g,
        a_deficit: u,
        grid,
        scalars: ProfileScalars {
            energy: 0.0,
            gamma_n: 0.0,
            beta_n: 0.0,
            beta_fit_residual: 0.0,
            m_lambda: m_lambda(params.lambda),
            fitted_rate_f: 0.0,
            fitted_rate_b: 0.0,
        },
    };
    Ok(profile.with_scalars())
}

impl VortexProfile {
    /// Builds a profile from tabulated `f`, `a` on a uniform grid (e.g. a
    /// previously exported table). Derivatives are recomputed by finite differences.
    pub fn from_tabulated(n: i32, lambda: f64, r: &[f64], f: &[f64], a: &[f64]) -> Result<Self> {
        if r.len() < 4 || r.len() != f.len() || r.len() != a.len() {
            return Err(Error::Parameter("tabulated profile needs >= 4 matching samples".into()));
        }
        if r[0] != 0.0 {
            return Err(Error::Parameter("tabulated profile must start at r = 0".into()));
        }
        let grid = RadialGrid::uniform(*r.last().unwrap(), r.len());
        let h = grid.spacing();
        let g: Vec<f64> = f.iter().map(|v| 1.0 - v).collect();
        let u: Vec<f64> = a.iter().map(|v| 1.0 - v).collect();
        let last = r.len() - 1;
        let end = |v: &[f64]| (3.0 * v[last] - 4.0 * v[last - 1] + v[last - 2]) / (2.0 * h);
        let dg = derivative(&g, h, end(&g));
        let du = derivative(&u, h, end(&u));
        let params = ProfileParams {
            n,
            lambda,
            r_max: grid.r_max(),
            num_points: r.len(),
        };
        let p = Self {
            params,
            f: f.to_vec(),
            a: a.to_vec(),
            df: dg.iter().map(|v| -v).collect(),
            da: du.iter().map(|v| -v).collect(),
            f_deficit: g,
            a_deficit: u,
            grid,
            scalars: ProfileScalars {
                energy: 0.0,
                gamma_n: 0.0,
                beta_n: 0.0,
                beta_fit_residual: 0.0,
                m_lambda: m_lambda(lambda),
                fitted_rate_f: f64::NAN,
                fitted_rate_b: f64::NAN,
            },
        };
        Ok(p.with_scalars())
    }

    fn with_scalars(mut self) -> Self {
        self.scalars.energy = vortex_energy(&self);
        self.scalars.gamma_n = gamma_coefficient(&self);
        let (lo, hi) = DEFAULT_BETA_WINDOW;
        if let Ok((beta, resid)) = beta_coefficient(&self, (lo, hi)) {
            self.scalars.beta_n = beta;
            self.scalars.beta_fit_residual = resid;
        }
        if let Ok((rf, rb)) = decay_exponents(&self) {
            self.scalars.fitted_rate_f = rf;
            self.scalars.fitted_rate_b = rb;
        }
        self
    }

    pub fn degree(&self) -> i32 {
        self.params.n
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    /// Magnetic field `B(r) = n a'(r)/r` on the grid (limit `n a''(0)` at the origin).
    pub fn magnetic_field(&self) -> Vec<f64> {
        let n = self.params.n as f64;
        let r = self.grid.nodes();
        let h = self.grid.spacing();
        let mut b: Vec<f64> = r.iter().zip(&self.da).map(|(&ri, &d)| if ri > 0.0 { n * d / ri } else { 0.0 }).collect();
        // a ≈ c r² near 0, so a'/r → 2c = 2 a(h)/h²
        b[0] = n * 2.0 * self.a[1] / (h * h);
        b
    }

    /// Far-field source `s(r) = 2(1−a) f f' + a'(1 − f²)`, with `(−Δ+1)B = n s/r`.
    pub fn field_source(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                let g = self.f_deficit[i];
                2.0 * self.a_deficit[i] * self.f[i] * self.df[i] + self.da[i] * g * (2.0 - g)
            })
            .collect()
    }

    /// Cubic (four-point Lagrange) interpolation of the profile at radius `r`.
    /// Beyond `r_max` the deficits are continued along their asymptotic tails.
    pub fn sample(&self, r: f64) -> ProfileSample {
        let r = r.abs();
        let r_end = self.grid.r_max();
        let abs_n = self.params.n.unsigned_abs() as i32;
        if r >= r_end {
            let last = self.grid.len() - 1;
            let kg = m_lambda(self.params.lambda);
            let g = self.f_deficit[last] * (-kg * (r - r_end)).exp();
            let scale = (r * special::k1_scaled(r)) / (r_end * special::k1_scaled(r_end)) * (-(r - r_end)).exp();
            let u = self.a_deficit[last] * scale;
            let ku = special::k0_scaled(r) / special::k1_scaled(r);
            return ProfileSample {
                f: 1.0 - g,
                df: kg * g,
                a: 1.0 - u,
                da: ku * u,
                a_over_r2: (1.0 - u) / (r * r),
                f_over_rn: (1.0 - g) / r.powi(abs_n),
                da_over_r: ku * u / r,
            };
        }
        let h = self.grid.spacing();
        let x = r / h;
        let last = self.grid.len() - 1;
        let base = (x.floor() as usize).saturating_sub(1).min(last - 3);
        let t = x - base as f64;
        // Lagrange weights on nodes base..base+3 at local coordinate t
        let w = [
            -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
            t * (t - 2.0) * (t - 3.0) / 2.0,
            -t * (t - 1.0) * (t - 3.0) / 2.0,
            t * (t - 1.0) * (t - 2.0) / 6.0,
        ];
        let interp = |v: &[f64]| -> f64 { (0..4).map(|k| w[k] * v[base + k]).sum() };
        let g = interp(&self.f_deficit);
        let u = interp(&self.a_deficit);
        let df = interp(&self.df);
        let da = interp(&self.da);
        let f = 1.0 - g;
        let a = 1.0 - u;
        // Near the origin divide node values first, then interpolate the smooth ratios.
        let (a_over_r2, f_over_rn, da_over_r) = if r < 4.0 * h {
            let ar2: Vec<f64> = (0..6).map(|k| self.node_a_over_r2(k)).collect();
            let frn: Vec<f64> = (0..6).map(|k| self.node_f_over_rn(k)).collect();
            let dar: Vec<f64> = (0..6)
                .map(|k| if k == 0 { 2.0 * ar2[0] } else { self.da[k] / self.grid.nodes()[k] })
                .collect();
            let b0 = (x.floor() as usize).saturating_sub(1).min(2);
            let tt = x - b0 as f64;
            let ww = [
                -(tt - 1.0) * (tt - 2.0) * (tt - 3.0) / 6.0,
                tt * (tt - 2.0) * (tt - 3.0) / 2.0,
                -tt * (tt - 1.0) * (tt - 3.0) / 2.0,
                tt * (tt - 1.0) * (tt - 2.0) / 6.0,
            ];
            (
                (0..4).map(|k| ww[k] * ar2[b0 + k]).sum(),
                (0..4).map(|k| ww[k] * frn[b0 + k]).sum(),
                (0..4).map(|k| ww[k] * dar[b0 + k]).sum(),
            )
        } else {
            (a / (r * r), f / r.powi(abs_n), da / r)
        };
        ProfileSample {
            f,
            df,
            a,
            da,
            a_over_r2,
            f_over_rn,
            da_over_r,
        }
    }

    fn node_a_over_r2(&self, k: usize) -> f64 {
        let h = self.grid.spacing();
        if k == 0 {
            // a = c r² + d r⁴: extrapolate a/r² from nodes 1, 2
            let v1 = self.a[1] / (h * h);
            let v2 = self.a[2] / (4.0 * h * h);
            (4.0 * v1 - v2) / 3.0
        } else {
            let r = self.grid.nodes()[k];
            self.a[k] / (r * r)
        }
    }

    fn node_f_over_rn(&self, k: usize) -> f64 {
        let h = self.grid.spacing();
        let abs_n = self.params.n.unsigned_abs() as i32;
        if k == 0 {
            // f = c r^n (1 + d r²)
            let v1 = self.f[1] / h.powi(abs_n);
            let v2 = self.f[2] / (2.0 * h).powi(abs_n);
            (4.0 * v1 - v2) / 3.0
        } else {
            let r = self.grid.nodes()[k];
            self.f[k] / r.powi(abs_n)
        }
    }

    /// Sup norm of the discrete ODE residual.
    pub fn ode_residual(&self) -> f64 {
        let disc = Discretization::new(&self.params, &self.grid);
        sup_norm(&disc.residual(&self.f_deficit, &self.a_deficit))
    }

    /// Writes the `r, f, a, B` table.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,f,a,B")?;
        let b = self.magnetic_field();
        for i in 0..self.grid.len() {
            writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                self.grid.nodes()[i],
                self.f[i],
                self.a[i],
                b[i]
            )?;
        }
        Ok(())
    }

    /// Writes `<stem>.csv` and the `<stem>.json` sidecar holding parameters and scalars.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let csv = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        self.write_csv(std::io::BufWriter::new(csv))?;
        let sidecar = ProfileSidecar {
            params: self.params,
            scalars: self.scalars,
        };
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Reads a profile written by [`VortexProfile::save`].
    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let sidecar: ProfileSidecar = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let text = std::fs::read_to_string(dir.join(format!("{stem}.csv")))?;
        let (mut r, mut f, mut a) = (Vec::new(), Vec::new(), Vec::new());
        for (line_no, line) in text.lines().enumerate().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Format(format!("profile csv line {}: expected 4 columns", line_no + 1)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("profile csv line {}: {e}", line_no + 1)))
            };
            r.push(parse(cols[0])?);
            f.push(parse(cols[1])?);
            a.push(parse(cols[2])?);
        }
        let mut p = Self::from_tabulated(sidecar.params.n, sidecar.params.lambda, &r, &f, &a)?;
        p.scalars.fitted_rate_f = sidecar.scalars.fitted_rate_f;
        p.scalars.fitted_rate_b = sidecar.scalars.fitted_rate_b;
        Ok(p)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileSidecar {
    params: ProfileParams,
    scalars: ProfileScalars,
}

/// `E⁽ⁿ⁾ = π ∫ [f'² + n²(1−a)² f²/r² + n² a'²/r² + (λ/2)(f²−1)²] r dr`.
pub fn vortex_energy(profile: &VortexProfile) -> f64 {
    let n2 = (profile.params.n as f64).powi(2);
    let lambda = profile.params.lambda;
    let r = profile.grid.nodes();
    let integrand: Vec<f64> = (0..r.len())
        .map(|i| {
            if r[i] == 0.0 {
                return 0.0;
            }
            let (f, g, u, df, da) = (
                profile.f[i],
                profile.f_deficit[i],
                profile.a_deficit[i],
                profile.df[i],
                profile.da[i],
            );
            let pot = g * (2.0 - g);
            (df * df + n2 * u * u * f * f / (r[i] * r[i]) + n2 * da * da / (r[i] * r[i]) + 0.5 * lambda * pot * pot) * r[i]
        })
        .collect();
    PI * trapezoid(r, &integrand)
}

/// `γₙ = ½‖∇_A ψ‖² + ‖curl A‖² = π ∫ [f'² + n²(1−a)²f²/r²] r dr + 2π ∫ n² a'²/r dr`.
pub fn gamma_coefficient(profile: &VortexProfile) -> f64 {
    let n2 = (profile.params.n as f64).powi(2);
    let r = profile.grid.nodes();
    let covariant: Vec<f64> = (0..r.len())
        .map(|i| {
            if r[i] == 0.0 {
                return 0.0;
            }
            let (f, u, df) = (profile.f[i], profile.a_deficit[i], profile.df[i]);
            (df * df + n2 * u * u * f * f / (r[i] * r[i])) * r[i]
        })
        .collect();
    let magnetic: Vec<f64> = (0..r.len())
        .map(|i| if r[i] == 0.0 { 0.0 } else { n2 * profile.da[i] * profile.da[i] / r[i] })
        .collect();
    PI * trapezoid(r, &covariant) + 2.0 * PI * trapezoid(r, &magnetic)
}

/// Least-squares amplitude `c` of `values ≈ c·kernel(r)` over `window`;
/// returns `(c, relative rms residual)`.
pub fn fit_tail_amplitude(r: &[f64], values: &[f64], kernel: impl Fn(f64) -> f64, window: (f64, f64)) -> Result<(f64, f64)> {
    let ratios: Vec<f64> = r
        .iter()
        .zip(values)
        .filter(|(&ri, _)| ri >= window.0 && ri <= window.1)
        .map(|(&ri, &v)| v / kernel(ri))
        .collect();
    if ratios.len() < 2 {
        return Err(Error::Range(format!("fit window [{}, {}] holds fewer than 2 samples", window.0, window.1)));
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let rms = (ratios.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / ratios.len() as f64).sqrt();
    Ok((mean, rms / mean.abs()))
}

/// Far-field amplitude `βₙ` of `B(r) ≈ n βₙ K₁(r)[1 − 1/(2r) + …]`, fitted
/// against the exact linearized tail `n βₙ K₀(r)`. Returns `(βₙ, relative fit residual)`.
pub fn beta_coefficient(profile: &VortexProfile, fit_window: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = fit_window;
    if !(lo > 5.0 && hi < profile.grid.r_max() - 2.0 && lo < hi) {
        return Err(Error::Range(format!(
            "fit window [{lo}, {hi}] must lie inside (5, {})",
            profile.grid.r_max() - 2.0
        )));
    }
    let n = profile.params.n as f64;
    let b = profile.magnetic_field();
    fit_tail_amplitude(profile.grid.nodes(), &b, |r| n * special::k0(r), fit_window)
}

/// Log-linear decay rates of `1 − f` and `|B|` over `[r_max/2, r_max − 2]`.
pub fn decay_exponents(profile: &VortexProfile) -> Result<(f64, f64)> {
    let r_end = profile.grid.r_max();
    let window = (0.5 * r_end, r_end - 2.0);
    let b = profile.magnetic_field();
    let rate = |values: &[f64], what: &str| -> Result<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = profile
            .grid
            .nodes()
            .iter()
            .zip(values)
            .filter(|(&r, &v)| r >= window.0 && r <= window.1 && v.abs() > 1e-280)
            .map(|(&r, &v)| (r, v.abs().ln()))
            .unzip();
        if xs.len() < 8 {
            return Err(Error::Range(format!("{what} underflows on the decay window")));
        }
        let (slope, _) = fit::linear_fit(&xs, &ys)?;
        Ok(-slope)
    };
    Ok((rate(&profile.f_deficit, "1 - f")?, rate(&b, "B")?))
}

/// `∫₀^∞ s(r) I₀(r) dr` with an exponential tail continuation beyond `r_max`.
pub fn source_moment(profile: &VortexProfile) -> Result<f64> {
    let lambda = profile.params.lambda;
    if lambda <= 0.5 {
        return Err(Error::Divergent(format!(
            "plane-wave moment needs m_lambda > 1 (lambda > 1/2), got lambda = {lambda}"
        )));
    }
    let r = profile.grid.nodes();
    let s = profile.field_source();
    let integrand: Vec<f64> = r.iter().zip(&s).map(|(&ri, &si)| si * special::i0(ri)).collect();
    let body = trapezoid(r, &integrand);
    // tail: fit log(s I₀) over the last two length units and integrate the exponential
    let r_end = profile.grid.r_max();
    let (xs, ys): (Vec<f64>, Vec<f64>) = r
        .iter()
        .zip(&integrand)
        .filter(|(&ri, &v)| ri >= r_end - 4.0 && ri <= r_end - 1.0 && v > 0.0)
        .map(|(&ri, &v)| (ri, v.ln()))
        .unzip();
    let tail = if xs.len() >= 4 {
        let (slope, intercept) = fit::linear_fit(&xs, &ys)?;
        if slope < 0.0 {
            (intercept + slope * r_end).exp() / (-slope)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(body + tail)
}

/// Interaction coefficient `c_jk = (√(π/2) βⱼ / 2) · 2π ∫ s_k(r) I₀(r) dr`.
pub fn interaction_coefficient(profile_j: &VortexProfile, profile_k: &VortexProfile) -> Result<f64> {
    for p in [profile_j, profile_k] {
        if p.params.lambda <= 0.5 {
            return Err(Error::Divergent(format!(
                "interaction coefficient diverges for lambda = {} <= 1/2 (type-I regime)",
                p.params.lambda
            )));
        }
    }
    let beta_j = profile_j.scalars.beta_n;
    let moment = source_moment(profile_k)?;
    Ok(0.5 * (0.5 * PI).sqrt() * beta_j * 2.0 * PI * moment)
}
