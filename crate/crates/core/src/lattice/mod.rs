//! Gauge-covariant lattice discretization of `(ψ, A)` on a square `[−L, L]²`.
//!
//! Sites `x_{ij} = (−L + i h, −L + j h)` are stored row-major (`index = j N + i`).
//! The gauge potential is non-compact and lives on links: `ax[index(i, j)]`
//! is the x-link from site `(i, j)` to `(i+1, j)` and `ay[index(i, j)]` the
//! y-link to `(i, j+1)`. Entries for links leaving the lattice are padding
//! and stay zero. With the link phase `U = e^{−ihA}` the discrete energy is
//!
//! ```text
//! E = ½ Σ_links |U ψ_{x+μ} − ψ_x|² + ½ h² Σ_plaq B² + ½ h² Σ_sites (λ/2)(|ψ|² − 1)²
//! B = (A_x(i,j) + A_y(i+1,j) − A_x(i,j+1) − A_y(i,j)) / h
//! ```
//!
//! which is exactly invariant under `ψ → e^{iχ}ψ`, `A → A + ∇_h χ`.
//! Tangent vectors use the inner product `h² Σ Re(ψ̄ φ) + h² Σ_links A·E`, and
//! [`gl_gradient`] is the exact gradient of `E` in that inner product.

mod ansatz;
mod snapshot;

pub use ansatz::{
    build_momentum, build_multivortex, gauge_mode, interaction_gradient, momentum_for, profile_set,
    translational_mode, ProfileSet, VortexAnsatz,
};
pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_VERSION};


use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elements per parallel task in the vector kernels.
const VECTOR_CHUNK: usize = 8192;

/// Square lattice geometry with Dirichlet boundary frozen to the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    extent: f64,
    points_per_side: usize,
}

impl LatticeSpec {
    pub fn new(extent: f64, points_per_side: usize) -> Result<Self> {
        if points_per_side < 64 {
            return Err(Error::Parameter(format!("lattice needs N >= 64, got {points_per_side}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::Parameter(format!("lattice half-width must be positive, got {extent}")));
        }
        let spec = Self {
            extent,
            points_per_side,
        };
        if spec.spacing() > 0.25 + 1e-12 {
            return Err(Error::Parameter(format!("lattice spacing {} exceeds 0.25", spec.spacing())));
        }
        Ok(spec)
    }

    /// Lattice with spacing `h` and half-width at least `min_extent`. `N` is
    /// chosen even so that the origin and every point of `(h/2)(2ℤ+1)` lie at
    /// plaquette centres.
    pub fn with_spacing(spacing: f64, min_extent: f64) -> Result<Self> {
        let mut n = (2.0 * min_extent / spacing - 1e-9).ceil() as usize + 1;
        if n % 2 == 1 {
            n += 1;
        }
        Self::new(0.5 * (n - 1) as f64 * spacing, n)
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points_per_side(&self) -> usize {
        self.points_per_side
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / (self.points_per_side - 1) as f64
    }

    pub fn num_sites(&self) -> usize {
        self.points_per_side * self.points_per_side
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.points_per_side + i
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    pub fn site(&self, i: usize, j: usize) -> [f64; 2] {
        [self.coord(i), self.coord(j)]
    }

    pub fn is_boundary_site(&self, i: usize, j: usize) -> bool {
        let last = self.points_per_side - 1;
        i == 0 || j == 0 || i == last || j == last
    }

    /// Checks the margin of at least 8 length units between vortices and the boundary.
    pub fn check_placement(&self, positions: &[[f64; 2]]) -> Result<()> {
        for (index, p) in positions.iter().enumerate() {
            if p[0].hypot(p[1]) > self.extent - 8.0 + 1e-9 || !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::Placement {
                    index,
                    x: p[0],
                    y: p[1],
                });
            }
        }
        Ok(())
    }
}

/// A vector in the tangent space of field configurations: site values plus x- and y-link values.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    pub psi: Vec<Complex64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
}

impl FieldVector {
    pub fn zeros(num_sites: usize) -> Self {
        Self {
            psi: vec![Complex64::new(0.0, 0.0); num_sites],
            ax: vec![0.0; num_sites],
            ay: vec![0.0; num_sites],
        }
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// `self = base + alpha · dir`, reusing storage.
    pub fn assign_axpy(&mut self, base: &FieldVector, alpha: f64, dir: &FieldVector) {
        fn kernel<T: Copy + Send + Sync>(out: &mut [T], base: &[T], dir: &[T], op: impl Fn(T, T) -> T + Sync) {
            out.par_chunks_mut(VECTOR_CHUNK)
                .zip(base.par_chunks(VECTOR_CHUNK).zip(dir.par_chunks(VECTOR_CHUNK)))
                .for_each(|(o, (b, d))| {
                    for ((o, &b), &d) in o.iter_mut().zip(b).zip(d) {
                        *o = op(b, d);
                    }
                });
        }
        kernel(&mut self.psi, &base.psi, &dir.psi, |b, d| b + d * alpha);
        kernel(&mut self.ax, &base.ax, &dir.ax, |b, d| b + alpha * d);
        kernel(&mut self.ay, &base.ay, &dir.ay, |b, d| b + alpha * d);
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &FieldVector) {
        fn kernel<T: Copy + Send + Sync>(out: &mut [T], dir: &[T], op: impl Fn(T, T) -> T + Sync) {
            out.par_chunks_mut(VECTOR_CHUNK).zip(dir.par_chunks(VECTOR_CHUNK)).for_each(|(o, d)| {
                for (o, &d) in o.iter_mut().zip(d) {
                    *o = op(*o, d);
                }
            });
        }
        kernel(&mut self.psi, &other.psi, |a, b| a + b * alpha);
        kernel(&mut self.ax, &other.ax, |a, b| a + alpha * b);
        kernel(&mut self.ay, &other.ay, |a, b| a + alpha * b);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.psi.iter_mut().for_each(|a| *a *= alpha);
        self.ax.iter_mut().for_each(|a| *a *= alpha);
        self.ay.iter_mut().for_each(|a| *a *= alpha);
    }

    /// `h² Σ Re(ψ̄ φ) + h² Σ links`, summed in storage order.
    pub fn dot(&self, other: &FieldVector, spacing: f64) -> f64 {
        let sites: f64 = self.psi.iter().zip(&other.psi).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        let links: f64 = self.ax.iter().zip(&other.ax).map(|(a, b)| a * b).sum::<f64>()
            + self.ay.iter().zip(&other.ay).map(|(a, b)| a * b).sum::<f64>();
        spacing * spacing * (sites + links)
    }

    pub fn norm(&self, spacing: f64) -> f64 {
        self.dot(self, spacing).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.ax.iter().all(|v| v.is_finite())
            && self.ay.iter().all(|v| v.is_finite())
    }

    /// Zeroes every component held fixed by the Dirichlet boundary: boundary
    /// sites, x-links on the first and last rows, y-links on the first and last
    /// columns, and the padding entries.
    pub fn zero_frozen(&mut self, lattice: &LatticeSpec) {
        let n = lattice.points_per_side();
        let zero = Complex64::new(0.0, 0.0);
        for row in [0, n - 1] {
            for i in 0..n {
                let x = lattice.index(i, row);
                self.psi[x] = zero;
                self.ax[x] = 0.0;
                if row == n - 1 {
                    self.ay[x] = 0.0;
                }
            }
        }
        for j in 0..n {
            for col in [0, n - 1] {
                let x = lattice.index(col, j);
                self.psi[x] = zero;
                self.ay[x] = 0.0;
            }
            self.ax[lattice.index(n - 1, j)] = 0.0;
        }
    }
}

/// Order parameter on sites and gauge potential on links.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub lattice: LatticeSpec,
    pub lambda: f64,
    pub fields: FieldVector,
}

/// Conjugate momenta `(π, E) = (−∂_t ψ, −∂_t A)`; `fields.psi` holds π and
/// `fields.ax`, `fields.ay` hold the electric field on links.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    pub lattice: LatticeSpec,
    pub fields: FieldVector,
}

impl MomentumState {
    pub fn zeros(lattice: LatticeSpec) -> Self {
        Self {
            lattice,
            fields: FieldVector::zeros(lattice.num_sites()),
        }
    }
}

/// Real values on x- and y-links.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkValues {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FieldState {
    /// `ψ ≡ 1`, `A ≡ 0`.
    pub fn vacuum(lattice: LatticeSpec, lambda: f64) -> Self {
        let mut fields = FieldVector::zeros(lattice.num_sites());
        fields.psi.iter_mut().for_each(|z| *z = Complex64::new(1.0, 0.0));
        Self {
            lattice,
            lambda,
            fields,
        }
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.fields.psi
    }

    fn check_same_lattice(&self, other: &LatticeSpec) -> Result<()> {
        if self.lattice != *other {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.lattice, other)));
        }
        Ok(())
    }

    /// Plaquette fields `B(i, j)` for `i, j < N − 1` (row-major in a `N − 1` square).
    pub fn magnetic_field(&self) -> Vec<f64> {
        let n = self.lattice.points_per_side();
        let h = self.lattice.spacing();
        let (ax, ay) = (&self.fields.ax, &self.fields.ay);
        let mut b = vec![0.0; (n - 1) * (n - 1)];
        b.par_chunks_mut(n - 1).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                let x = j * n + i;
                *v = (ax[x] + ay[x + 1] - ax[x + n] - ay[x]) / h;
            }
        });
        b
    }
}

fn link_phase(h: f64, a: f64) -> Complex64 {
    Complex64::cis(-h * a)
}

/// Discrete Ginzburg–Landau energy.
pub fn energy(field: &FieldState) -> f64 {
    let n = field.lattice.points_per_side();
    let h = field.lattice.spacing();
    let h2 = h * h;
    let lambda = field.lambda;
    let (psi, ax, ay) = (&field.fields.psi, &field.fields.ax, &field.fields.ay);
    // per-row partial sums, then a fixed-order sum over rows
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (mut kinetic, mut magnetic, mut potential) = (0.0, 0.0, 0.0);
            for i in 0..n {
                let x = j * n + i;
                let p = psi[x];
                if i + 1 < n {
                    kinetic += (link_phase(h, ax[x]) * psi[x + 1] - p).norm_sqr();
                }
                if j + 1 < n {
                    kinetic += (link_phase(h, ay[x]) * psi[x + n] - p).norm_sqr();
                    if i + 1 < n {
                        let b = (ax[x] + ay[x + 1] - ax[x + n] - ay[x]) / h;
                        magnetic += b * b;
                    }
                }
                let q = p.norm_sqr() - 1.0;
                potential += q * q;
            }
            0.5 * kinetic + 0.5 * h2 * magnetic + 0.25 * lambda * h2 * potential
        })
        .collect();
    rows.iter().sum()
}

/// Scratch buffers reused across gradient evaluations.
#[derive(Debug, Clone, Default)]
pub struct GradientWorkspace {
    ux: Vec<Complex64>,
    uy: Vec<Complex64>,
    b: Vec<f64>,
}

/// Exact gradient `E′_GL` of [`energy`] with respect to the lattice inner product.
pub fn gl_gradient(field: &FieldState) -> FieldVector {
    let mut out = FieldVector::zeros(field.lattice.num_sites());
    gl_gradient_into(field, &mut GradientWorkspace::default(), &mut out);
    out
}

/// [`gl_gradient`] writing into preallocated storage.
pub fn gl_gradient_into(field: &FieldState, ws: &mut GradientWorkspace, grad: &mut FieldVector) {
    let n = field.lattice.points_per_side();
    let h = field.lattice.spacing();
    let inv_h = 1.0 / h;
    let inv_h2 = inv_h * inv_h;
    let lambda = field.lambda;
    let (psi, ax, ay) = (&field.fields.psi, &field.fields.ax, &field.fields.ay);
    ws.ux.resize(n * n, Complex64::new(0.0, 0.0));
    ws.uy.resize(n * n, Complex64::new(0.0, 0.0));
    ws.b.resize(n * n, 0.0);
    ws.ux.par_chunks_mut(n).zip(ax.par_chunks(n)).for_each(|(u, a)| {
        u.iter_mut().zip(a).for_each(|(u, &a)| *u = link_phase(h, a));
    });
    ws.uy.par_chunks_mut(n).zip(ay.par_chunks(n)).for_each(|(u, a)| {
        u.iter_mut().zip(a).for_each(|(u, &a)| *u = link_phase(h, a));
    });
    // b[j n + i] holds the plaquette field, zero outside the plaquette range
    ws.b.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            let x = j * n + i;
            *v = if i + 1 < n && j + 1 < n {
                (ax[x] + ay[x + 1] - ax[x + n] - ay[x]) * inv_h
            } else {
                0.0
            };
        }
    });
    let (ux, uy, b) = (&ws.ux, &ws.uy, &ws.b);

    grad.psi.resize(n * n, Complex64::new(0.0, 0.0));
    grad.ax.resize(n * n, 0.0);
    grad.ay.resize(n * n, 0.0);
    grad.psi.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, g) in row.iter_mut().enumerate() {
            let x = j * n + i;
            let p = psi[x];
            let mut s = Complex64::new(0.0, 0.0);
            if i + 1 < n {
                s -= ux[x] * psi[x + 1] - p;
            }
            if i > 0 {
                s += ux[x - 1].conj() * (ux[x - 1] * p - psi[x - 1]);
            }
            if j + 1 < n {
                s -= uy[x] * psi[x + n] - p;
            }
            if j > 0 {
                s += uy[x - n].conj() * (uy[x - n] * p - psi[x - n]);
            }
            *g = s * inv_h2 + p * (lambda * (p.norm_sqr() - 1.0));
        }
    });
    grad.ax.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, g) in row.iter_mut().enumerate() {
            let x = j * n + i;
            *g = if i + 1 < n {
                let current = (psi[x].conj() * ux[x] * psi[x + 1]).im;
                let below = if j > 0 { b[x - n] } else { 0.0 };
                (-current + b[x] - below) * inv_h
            } else {
                0.0
            };
        }
    });
    grad.ay.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, g) in row.iter_mut().enumerate() {
            let x = j * n + i;
            *g = if j + 1 < n {
                let current = (psi[x].conj() * uy[x] * psi[x + n]).im;
                let left = if i > 0 { b[x - 1] } else { 0.0 };
                (-current + left - b[x]) * inv_h
            } else {
                0.0
            };
        }
    });
}

/// Winding number of ψ around the outermost site loop.
pub fn degree(field: &FieldState) -> Result<i32> {
    let n = field.lattice.points_per_side();
    let lat = &field.lattice;
    let mut loop_sites = Vec::with_capacity(4 * n);
    loop_sites.extend((0..n - 1).map(|i| lat.index(i, 0)));
    loop_sites.extend((0..n - 1).map(|j| lat.index(n - 1, j)));
    loop_sites.extend((1..n).rev().map(|i| lat.index(i, n - 1)));
    loop_sites.extend((1..n).rev().map(|j| lat.index(0, j)));
    let psi = field.psi();
    let min_modulus = loop_sites.iter().map(|&x| psi[x].norm()).fold(f64::INFINITY, f64::min);
    if !(min_modulus > 0.5) {
        return Err(Error::UndefinedDegree { min_modulus });
    }
    let total: f64 = (0..loop_sites.len())
        .map(|k| {
            let a = psi[loop_sites[k]];
            let b = psi[loop_sites[(k + 1) % loop_sites.len()]];
            (a.conj() * b).arg()
        })
        .sum();
    Ok((total / (2.0 * std::f64::consts::PI)).round() as i32)
}

/// Total flux `h² Σ_plaq B`.
pub fn flux(field: &FieldState) -> f64 {
    let h = field.lattice.spacing();
    field.magnetic_field().iter().sum::<f64>() * h * h
}

/// Supercurrent `Im(ψ̄_x U ψ_{x+μ}) / h` on links.
pub fn supercurrent(field: &FieldState) -> LinkValues {
    let n = field.lattice.points_per_side();
    let h = field.lattice.spacing();
    let psi = field.psi();
    let mut x = vec![0.0; n * n];
    let mut y = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let s = j * n + i;
            if i + 1 < n {
                x[s] = (psi[s].conj() * link_phase(h, field.fields.ax[s]) * psi[s + 1]).im / h;
            }
            if j + 1 < n {
                y[s] = (psi[s].conj() * link_phase(h, field.fields.ay[s]) * psi[s + n]).im / h;
            }
        }
    }
    LinkValues { x, y }
}

/// Forward differences `(χ_{x+μ} − χ_x)/h` on links (padding entries zero).
pub fn discrete_gradient(lattice: &LatticeSpec, chi: &[f64]) -> LinkValues {
    let n = lattice.points_per_side();
    let h = lattice.spacing();
    let mut x = vec![0.0; n * n];
    let mut y = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let s = j * n + i;
            if i + 1 < n {
                x[s] = (chi[s + 1] - chi[s]) / h;
            }
            if j + 1 < n {
                y[s] = (chi[s + n] - chi[s]) / h;
            }
        }
    }
    LinkValues { x, y }
}

/// Backward-difference divergence, the negative adjoint of [`discrete_gradient`].
pub fn discrete_divergence(lattice: &LatticeSpec, ex: &[f64], ey: &[f64]) -> Vec<f64> {
    let n = lattice.points_per_side();
    let h = lattice.spacing();
    let mut div = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let s = j * n + i;
            let mut d = 0.0;
            if i + 1 < n {
                d += ex[s];
            }
            if i > 0 {
                d -= ex[s - 1];
            }
            if j + 1 < n {
                d += ey[s];
            }
            if j > 0 {
                d -= ey[s - n];
            }
            div[s] = d / h;
        }
    }
    div
}

/// `(−Δ_h + |ψ|²) ζ` with the Laplacian `Δ_h = div ∘ ∇_h`.
pub fn gauge_operator(field: &FieldState, zeta: &[f64]) -> Vec<f64> {
    let grad = discrete_gradient(&field.lattice, zeta);
    let lap = discrete_divergence(&field.lattice, &grad.x, &grad.y);
    lap.iter()
        .zip(zeta)
        .zip(field.psi())
        .map(|((l, z), p)| -l + p.norm_sqr() * z)
        .collect()
}

/// `(ψ, A) ↦ (e^{iχ} ψ, A + ∇_h χ)`.
pub fn gauge_transform(field: &FieldState, chi: &[f64]) -> Result<FieldState> {
    if chi.len() != field.lattice.num_sites() {
        return Err(Error::Shape(format!("gauge function has {} values", chi.len())));
    }
    let grad = discrete_gradient(&field.lattice, chi);
    let mut out = field.clone();
    out.fields.psi.iter_mut().zip(chi).for_each(|(p, c)| *p *= Complex64::cis(*c));
    out.fields.ax.iter_mut().zip(&grad.x).for_each(|(a, g)| *a += g);
    out.fields.ay.iter_mut().zip(&grad.y).for_each(|(a, g)| *a += g);
    Ok(out)
}

/// `H = E_GL + ½(‖π‖² + ‖E‖²)`.
pub fn hamiltonian(field: &FieldState, momentum: &MomentumState) -> Result<f64> {
    field.check_same_lattice(&momentum.lattice)?;
    let h = field.lattice.spacing();
    Ok(energy(field) + 0.5 * momentum.fields.dot(&momentum.fields, h))
}

/// Pointwise Gauss-law defect `div E − Im(ψ̄ π)` on interior sites (zero on the boundary).
///
/// Gauge invariance of the energy makes `⟨(π, E), G_γ⟩ = h² Σ γ (Im(ψ̄π) − div E)`
/// a constant of the Hamiltonian flow for every interior `γ`.
pub fn gauss_defect(field: &FieldState, momentum: &MomentumState) -> Result<Vec<f64>> {
    field.check_same_lattice(&momentum.lattice)?;
    let lat = &field.lattice;
    let n = lat.points_per_side();
    let div = discrete_divergence(lat, &momentum.fields.ax, &momentum.fields.ay);
    let mut out = vec![0.0; n * n];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let s = lat.index(i, j);
            out[s] = div[s] - (field.fields.psi[s].conj() * momentum.fields.psi[s]).im;
        }
    }
    Ok(out)
}

/// `L²` norm of [`gauss_defect`].
pub fn gauss_residual(field: &FieldState, momentum: &MomentumState) -> Result<f64> {
    let d = gauss_defect(field, momentum)?;
    Ok(field.lattice.spacing() * d.iter().map(|v| v * v).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests;
