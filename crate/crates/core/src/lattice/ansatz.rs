//! Glued multi-vortex configurations and their almost-zero modes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{discrete_gradient, gl_gradient, FieldState, FieldVector, LatticeSpec, MomentumState};
use crate::error::{Error, Result};
use crate::radial::{solve_profile, ProfileParams, VortexProfile};

/// Radial profiles keyed by degree, all at a common λ.
pub type ProfileSet = BTreeMap<i32, VortexProfile>;

/// Solves one profile per distinct degree.
pub fn profile_set(lambda: f64, degrees: &[i32]) -> Result<ProfileSet> {
    let mut set = ProfileSet::new();
    for &n in degrees {
        if !set.contains_key(&n) {
            set.insert(n, solve_profile(ProfileParams::new(n, lambda))?);
        }
    }
    Ok(set)
}

/// Vortex centres, degrees, gauge function and momentum parameters of a glued configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VortexAnsatz {
    pub positions: Vec<[f64; 2]>,
    pub degrees: Vec<i32>,
    /// Gauge function on sites; `None` means `χ ≡ 0`.
    #[serde(default)]
    pub chi: Option<Vec<f64>>,
    /// Momentum parameters `p_j`; empty means all zero.
    #[serde(default)]
    pub momenta_p: Vec<[f64; 2]>,
    /// Gauge momentum `ζ` on sites; `None` means `ζ ≡ 0`.
    #[serde(default)]
    pub momenta_zeta: Option<Vec<f64>>,
}

impl VortexAnsatz {
    pub fn new(positions: Vec<[f64; 2]>, degrees: Vec<i32>) -> Self {
        Self {
            positions,
            degrees,
            ..Self::default()
        }
    }

    pub fn with_momenta(mut self, momenta: Vec<[f64; 2]>) -> Self {
        self.momenta_p = momenta;
        self
    }

    /// `R(z̄) = min_{j≠k} |z_j − z_k|`, `None` for fewer than two vortices.
    pub fn min_separation(&self) -> Option<f64> {
        let z = &self.positions;
        (0..z.len())
            .flat_map(|j| (j + 1..z.len()).map(move |k| (j, k)))
            .map(|(j, k)| (z[j][0] - z[k][0]).hypot(z[j][1] - z[k][1]))
            .reduce(f64::min)
    }

    pub fn validate(&self, lattice: &LatticeSpec) -> Result<()> {
        if self.positions.len() != self.degrees.len() {
            return Err(Error::Configuration(format!(
                "{} positions but {} degrees",
                self.positions.len(),
                self.degrees.len()
            )));
        }
        if !self.momenta_p.is_empty() && self.momenta_p.len() != self.positions.len() {
            return Err(Error::Configuration("momenta_p must match the number of vortices".into()));
        }
        for field in [&self.chi, &self.momenta_zeta].into_iter().flatten() {
            if field.len() != lattice.num_sites() {
                return Err(Error::Shape(format!(
                    "site function has {} values, lattice has {}",
                    field.len(),
                    lattice.num_sites()
                )));
            }
        }
        if self.degrees.contains(&0) {
            return Err(Error::Configuration("vortex degrees must be nonzero".into()));
        }
        lattice.check_placement(&self.positions)?;
        if let Some(r) = self.min_separation() {
            if r <= 2.0 {
                return Err(Error::SeparationViolation { separation: r });
            }
        }
        Ok(())
    }
}

fn lookup(profiles: &ProfileSet, n: i32) -> Result<&VortexProfile> {
    profiles
        .get(&n)
        .ok_or_else(|| Error::Configuration(format!("no profile supplied for degree {n}")))
}

fn common_lambda(profiles: &ProfileSet, degrees: &[i32]) -> Result<f64> {
    let mut lambda = None;
    for &n in degrees {
        let l = lookup(profiles, n)?.lambda();
        match lambda {
            None => lambda = Some(l),
            Some(prev) if prev != l => {
                return Err(Error::Configuration(format!("profiles disagree on lambda: {prev} vs {l}")))
            }
            _ => {}
        }
    }
    Ok(lambda.unwrap_or_else(|| profiles.values().next().map_or(1.0, |p| p.lambda())))
}

/// One equivariant vortex evaluated at an offset from its centre.
struct VortexSample {
    psi: Complex64,
    /// Components of `∇_A ψ`.
    covariant: [Complex64; 2],
    potential: [f64; 2],
    field: f64,
}

fn sample_vortex(profile: &VortexProfile, offset: [f64; 2]) -> VortexSample {
    let n = profile.degree();
    let nf = n as f64;
    let r = offset[0].hypot(offset[1]);
    // atan2(0, 0) = 0 gives the correct limits of ∇_A ψ at the centre
    let theta = offset[1].atan2(offset[0]);
    let s = profile.sample(r);
    let phase = Complex64::cis(nf * theta);
    let f_over_r = s.f_over_rn * r.powi(n.abs() - 1);
    let (c, sn) = (theta.cos(), theta.sin());
    let radial = [c, sn];
    let angular = [-sn, c];
    let twist = nf * (1.0 - s.a) * f_over_r;
    let covariant = [0, 1].map(|k| phase * Complex64::new(s.df * radial[k], twist * angular[k]));
    VortexSample {
        psi: phase * s.f,
        covariant,
        potential: [-nf * s.a_over_r2 * offset[1], nf * s.a_over_r2 * offset[0]],
        field: nf * s.da_over_r,
    }
}

fn potential_at(profiles: &[&VortexProfile], positions: &[[f64; 2]], p: [f64; 2]) -> [f64; 2] {
    let mut a = [0.0, 0.0];
    for (prof, z) in profiles.iter().zip(positions) {
        let v = sample_vortex(prof, [p[0] - z[0], p[1] - z[1]]);
        a[0] += v.potential[0];
        a[1] += v.potential[1];
    }
    a
}

/// Glued configuration `ψ = e^{iχ} ∏ ψ⁽ⁿʲ⁾(x − z_j)`, `A = Σ A⁽ⁿʲ⁾(x − z_j) + ∇_h χ`,
/// with ψ at sites and A at link midpoints.
pub fn build_multivortex(profiles: &ProfileSet, ansatz: &VortexAnsatz, lattice: &LatticeSpec) -> Result<FieldState> {
    ansatz.validate(lattice)?;
    let lambda = common_lambda(profiles, &ansatz.degrees)?;
    let vortex_profiles: Vec<&VortexProfile> =
        ansatz.degrees.iter().map(|&n| lookup(profiles, n)).collect::<Result<_>>()?;
    let n = lattice.points_per_side();
    let h = lattice.spacing();
    let positions = &ansatz.positions;

    let mut fields = FieldVector::zeros(n * n);
    fields.psi.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, out) in row.iter_mut().enumerate() {
            let p = lattice.site(i, j);
            *out = vortex_profiles
                .iter()
                .zip(positions)
                .map(|(prof, z)| sample_vortex(prof, [p[0] - z[0], p[1] - z[1]]).psi)
                .fold(Complex64::new(1.0, 0.0), |acc, v| acc * v);
        }
    });
    fields.ax.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, out) in row.iter_mut().enumerate().take(n - 1) {
            let p = lattice.site(i, j);
            *out = potential_at(&vortex_profiles, positions, [p[0] + 0.5 * h, p[1]])[0];
        }
    });
    fields.ay.par_chunks_mut(n).enumerate().take(n - 1).for_each(|(j, row)| {
        for (i, out) in row.iter_mut().enumerate() {
            let p = lattice.site(i, j);
            *out = potential_at(&vortex_profiles, positions, [p[0], p[1] + 0.5 * h])[1];
        }
    });
    let mut state = FieldState {
        lattice: *lattice,
        lambda,
        fields,
    };
    if let Some(chi) = &ansatz.chi {
        state = super::gauge_transform(&state, chi)?;
    }
    Ok(state)
}

/// Translational almost-zero mode
/// `T_jk = −(e^{iχ} [∏_{l≠j} ψ_l] (∇_{A}ψ)_{j,k}, B_j e_k^⊥)` with
/// `e_1^⊥ = (0, 1)`, `e_2^⊥ = (−1, 0)`; `k ∈ {0, 1}` selects the coordinate.
pub fn translational_mode(
    profiles: &ProfileSet,
    ansatz: &VortexAnsatz,
    lattice: &LatticeSpec,
    j: usize,
    k: usize,
) -> Result<FieldVector> {
    ansatz.validate(lattice)?;
    if j >= ansatz.positions.len() || k > 1 {
        return Err(Error::Parameter(format!("no translational mode ({j}, {k})")));
    }
    let vortex_profiles: Vec<&VortexProfile> =
        ansatz.degrees.iter().map(|&n| lookup(profiles, n)).collect::<Result<_>>()?;
    let n = lattice.points_per_side();
    let h = lattice.spacing();
    let positions = &ansatz.positions;
    let perp = if k == 0 { [0.0, 1.0] } else { [-1.0, 0.0] };
    let zj = positions[j];

    let mut mode = FieldVector::zeros(n * n);
    mode.psi.par_chunks_mut(n).enumerate().for_each(|(row_j, row)| {
        for (i, out) in row.iter_mut().enumerate() {
            let p = lattice.site(i, row_j);
            let mut value = Complex64::new(1.0, 0.0);
            for (l, (prof, z)) in vortex_profiles.iter().zip(positions).enumerate() {
                let s = sample_vortex(prof, [p[0] - z[0], p[1] - z[1]]);
                value *= if l == j { s.covariant[k] } else { s.psi };
            }
            if let Some(chi) = &ansatz.chi {
                value *= Complex64::cis(chi[row_j * n + i]);
            }
            *out = -value;
        }
    });
    let field_at = |p: [f64; 2]| sample_vortex(vortex_profiles[j], [p[0] - zj[0], p[1] - zj[1]]).field;
    if perp[0] != 0.0 {
        mode.ax.par_chunks_mut(n).enumerate().for_each(|(row_j, row)| {
            for (i, out) in row.iter_mut().enumerate().take(n - 1) {
                let p = lattice.site(i, row_j);
                *out = -perp[0] * field_at([p[0] + 0.5 * h, p[1]]);
            }
        });
    }
    if perp[1] != 0.0 {
        mode.ay.par_chunks_mut(n).enumerate().take(n - 1).for_each(|(row_j, row)| {
            for (i, out) in row.iter_mut().enumerate() {
                let p = lattice.site(i, row_j);
                *out = -perp[1] * field_at([p[0], p[1] + 0.5 * h]);
            }
        });
    }
    Ok(mode)
}

/// Gauge mode `G_γ = (iγψ, ∇_h γ)`.
pub fn gauge_mode(field: &FieldState, gamma: &[f64]) -> Result<FieldVector> {
    if gamma.len() != field.lattice.num_sites() {
        return Err(Error::Shape(format!("gauge function has {} values", gamma.len())));
    }
    let grad = discrete_gradient(&field.lattice, gamma);
    Ok(FieldVector {
        psi: field
            .psi()
            .iter()
            .zip(gamma)
            .map(|(p, g)| Complex64::new(0.0, *g) * p)
            .collect(),
        ax: grad.x,
        ay: grad.y,
    })
}

/// Momentum `(π, E) = −Σ_j p_j · T_j + G_ζ` for the glued field `field`.
///
/// With `(π, E) = −∂_t(ψ, A)` this choice moves the centres with `ż_j = p_j`.
pub fn momentum_for(field: &FieldState, profiles: &ProfileSet, ansatz: &VortexAnsatz) -> Result<MomentumState> {
    let lattice = field.lattice;
    let mut momentum = MomentumState::zeros(lattice);
    for (j, p) in ansatz.momenta_p.iter().enumerate() {
        for (k, &pk) in p.iter().enumerate() {
            if pk != 0.0 {
                let t = translational_mode(profiles, ansatz, &lattice, j, k)?;
                momentum.fields.axpy(-pk, &t);
            }
        }
    }
    if let Some(zeta) = &ansatz.momenta_zeta {
        momentum.fields.axpy(1.0, &gauge_mode(field, zeta)?);
    }
    Ok(momentum)
}

/// Builds the glued field for `ansatz` and its momentum.
pub fn build_momentum(profiles: &ProfileSet, ansatz: &VortexAnsatz, lattice: &LatticeSpec) -> Result<MomentumState> {
    let field = build_multivortex(profiles, ansatz, lattice)?;
    momentum_for(&field, profiles, ansatz)
}

/// Interaction part of `E′_GL` for a glued configuration (with `χ ≡ 0`):
/// `E′(v) − (Σ_j [∏_{l≠j} ψ_l] E′_ψ(v_j), Σ_j E′_A(v_j))`, where `v_j` is vortex
/// `j` glued alone on the same lattice. Subtracting the single-vortex
/// gradients removes the lattice discretization floor and leaves the part
/// of the residual generated by the vortex tails. Frozen components are zeroed.
pub fn interaction_gradient(profiles: &ProfileSet, ansatz: &VortexAnsatz, lattice: &LatticeSpec) -> Result<FieldVector> {
    if ansatz.chi.is_some() {
        return Err(Error::Configuration("interaction gradient assumes chi = 0".into()));
    }
    let pair = build_multivortex(profiles, ansatz, lattice)?;
    let mut residual = gl_gradient(&pair);
    let singles: Vec<FieldState> = (0..ansatz.positions.len())
        .map(|j| {
            let single = VortexAnsatz::new(vec![ansatz.positions[j]], vec![ansatz.degrees[j]]);
            build_multivortex(profiles, &single, lattice)
        })
        .collect::<Result<_>>()?;
    for (j, single) in singles.iter().enumerate() {
        let g = gl_gradient(single);
        residual
            .psi
            .par_iter_mut()
            .enumerate()
            .for_each(|(x, r)| {
                let others = singles
                    .iter()
                    .enumerate()
                    .filter(|(l, _)| *l != j)
                    .fold(Complex64::new(1.0, 0.0), |acc, (_, s)| acc * s.fields.psi[x]);
                *r -= others * g.psi[x];
            });
        residual.ax.iter_mut().zip(&g.ax).for_each(|(r, v)| *r -= v);
        residual.ay.iter_mut().zip(&g.ay).for_each(|(r, v)| *r -= v);
    }
    residual.zero_frozen(lattice);
    Ok(residual)
}
