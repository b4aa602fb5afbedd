//! Reduced dynamics of well-separated vortex centres.
//!
//! The asymptotic interaction energy of centres `z_j` with degrees `n_j` is
//!
//! ```text
//! W(z̄) = Σ_{j≠k} n_j n_k c_jk e^{−d_jk} / √d_jk,   d_jk = |z_j − z_k|
//! ```
//!
//! summed over ordered pairs. Forces are the exact `−∇W`, so the
//! first-order law `γ_j ż_j = −∇_j W` is a gradient flow of `W` and the
//! second-order law `ż_j = p_j`, `γ_j ṗ_j = −∇_j W` conserves
//! `½ Σ γ_j |p_j|² + W`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    build_multivortex, energy, gl_gradient, translational_mode, LatticeSpec, ProfileSet, VortexAnsatz,
};
use crate::radial::{interaction_coefficient, VortexProfile};

/// Closest approach below which the effective laws are not applied.
pub const MIN_SEPARATION: f64 = 2.0;

/// Coefficients of the effective laws for a fixed list of degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub degrees: Vec<i32>,
    /// Per-vortex `γ_{n_j}`.
    pub gamma: Vec<f64>,
    /// `c_jk`, row-major `m × m`; the diagonal is unused.
    pub coefficients: Vec<Vec<f64>>,
    pub lambda: f64,
}

impl EffectiveParams {
    /// Takes `γ` and `c_jk` from the solved profiles.
    pub fn from_profiles(profiles: &ProfileSet, degrees: &[i32]) -> Result<Self> {
        let lookup = |n: i32| -> Result<&VortexProfile> {
            profiles
                .get(&n)
                .ok_or_else(|| Error::Configuration(format!("no profile for degree {n}")))
        };
        let lambda = match degrees.first() {
            Some(&n) => lookup(n)?.lambda(),
            None => return Err(Error::Configuration("no vortices".into())),
        };
        if lambda <= 0.5 {
            return Err(Error::TypeIUnsupported { lambda });
        }
        let gamma = degrees
            .iter()
            .map(|&n| lookup(n).map(|p| p.scalars.gamma_n))
            .collect::<Result<Vec<_>>>()?;
        let mut coefficients = vec![vec![0.0; degrees.len()]; degrees.len()];
        for (j, &nj) in degrees.iter().enumerate() {
            for (k, &nk) in degrees.iter().enumerate() {
                if j != k {
                    coefficients[j][k] = interaction_coefficient(lookup(nj)?, lookup(nk)?)?;
                }
            }
        }
        let params = Self {
            degrees: degrees.to_vec(),
            gamma,
            coefficients,
            lambda,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.degrees.len();
        if self.gamma.len() != m || self.coefficients.len() != m || self.coefficients.iter().any(|row| row.len() != m) {
            return Err(Error::Shape(format!("effective parameters for {m} vortices have inconsistent sizes")));
        }
        if let Some(g) = self.gamma.iter().find(|g| !(**g > 0.0)) {
            return Err(Error::Parameter(format!("gamma must be positive, got {g}")));
        }
        if self.lambda <= 0.5 {
            return Err(Error::TypeIUnsupported { lambda: self.lambda });
        }
        for (j, row) in self.coefficients.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                if j != k && !(*c > 0.0) {
                    return Err(Error::Parameter(format!("c[{j}][{k}] must be positive, got {c}")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }
}

/// Centres and momenta; momenta are zero for the first-order law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveState {
    pub positions: Vec<[f64; 2]>,
    pub momenta: Vec<[f64; 2]>,
}

impl EffectiveState {
    pub fn at_rest(positions: Vec<[f64; 2]>) -> Self {
        let momenta = vec![[0.0; 2]; positions.len()];
        Self { positions, momenta }
    }

    pub fn min_separation(&self) -> Option<f64> {
        let z = &self.positions;
        (0..z.len())
            .flat_map(|j| (j + 1..z.len()).map(move |k| (j, k)))
            .map(|(j, k)| distance(z[j], z[k]))
            .reduce(f64::min)
    }

    fn check(&self, params: &EffectiveParams) -> Result<()> {
        params.validate()?;
        if self.positions.len() != params.len() || self.momenta.len() != params.len() {
            return Err(Error::Shape(format!(
                "state has {} positions and {} momenta for {} vortices",
                self.positions.len(),
                self.momenta.len(),
                params.len()
            )));
        }
        match self.min_separation() {
            Some(separation) if !(separation > MIN_SEPARATION) => Err(Error::SeparationViolation { separation }),
            _ => Ok(()),
        }
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Asymptotic `W(z̄)`.
pub fn interaction_energy_asymptotic(state: &EffectiveState, params: &EffectiveParams) -> Result<f64> {
    state.check(params)?;
    let z = &state.positions;
    let mut total = 0.0;
    for j in 0..z.len() {
        for k in 0..z.len() {
            if j != k {
                let d = distance(z[j], z[k]);
                total += f64::from(params.degrees[j] * params.degrees[k]) * params.coefficients[j][k] * (-d).exp()
                    / d.sqrt();
            }
        }
    }
    Ok(total)
}

/// `−∇_{z_l} W` for every `l`, the exact gradient of [`interaction_energy_asymptotic`].
pub fn force(state: &EffectiveState, params: &EffectiveParams) -> Result<Vec<[f64; 2]>> {
    state.check(params)?;
    let z = &state.positions;
    let mut forces = vec![[0.0; 2]; z.len()];
    for l in 0..z.len() {
        for j in (0..z.len()).filter(|&j| j != l) {
            let d = distance(z[l], z[j]);
            // both ordered pairs (l, j) and (j, l) depend on d_lj
            let weight = f64::from(params.degrees[l] * params.degrees[j])
                * (params.coefficients[l][j] + params.coefficients[j][l]);
            // −d/dd (e^{−d}/√d) = e^{−d}/√d · (1 + 1/(2d))
            let magnitude = weight * (-d).exp() / d.sqrt() * (1.0 + 0.5 / d);
            for (c, f) in forces[l].iter_mut().enumerate() {
                *f += magnitude * (z[l][c] - z[j][c]) / d;
            }
        }
    }
    Ok(forces)
}

/// `½ Σ γ_j |p_j|² + W`.
pub fn effective_energy(state: &EffectiveState, params: &EffectiveParams) -> Result<f64> {
    let kinetic: f64 = state
        .momenta
        .iter()
        .zip(&params.gamma)
        .map(|(p, g)| 0.5 * g * (p[0] * p[0] + p[1] * p[1]))
        .sum();
    Ok(kinetic + interaction_energy_asymptotic(state, params)?)
}

/// `E(glued) − Σ_j E(vortex j glued alone)` with every term evaluated on `lattice`.
pub fn interaction_energy_direct(profiles: &ProfileSet, ansatz: &VortexAnsatz, lattice: &LatticeSpec) -> Result<f64> {
    let glued = energy(&build_multivortex(profiles, ansatz, lattice)?);
    let singles = ansatz
        .positions
        .iter()
        .zip(&ansatz.degrees)
        .map(|(&z, &n)| build_multivortex(profiles, &VortexAnsatz::new(vec![z], vec![n]), lattice).map(|f| energy(&f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(glued - singles.iter().sum::<f64>())
}

/// `−⟨E′(v), T_l⟩` for every centre `l`, where `T_l` are the translational modes.
pub fn force_direct(profiles: &ProfileSet, ansatz: &VortexAnsatz, lattice: &LatticeSpec) -> Result<Vec<[f64; 2]>> {
    let field = build_multivortex(profiles, ansatz, lattice)?;
    let mut gradient = gl_gradient(&field);
    gradient.zero_frozen(lattice);
    let h = lattice.spacing();
    (0..ansatz.positions.len())
        .map(|l| {
            let mut f = [0.0; 2];
            for (k, fk) in f.iter_mut().enumerate() {
                *fk = -gradient.dot(&translational_mode(profiles, ansatz, lattice, l, k)?, h);
            }
            Ok(f)
        })
        .collect()
}

fn offset(state: &EffectiveState, velocity: &[[f64; 2]], dt: f64) -> EffectiveState {
    EffectiveState {
        positions: state
            .positions
            .iter()
            .zip(velocity)
            .map(|(z, v)| [z[0] + dt * v[0], z[1] + dt * v[1]])
            .collect(),
        momenta: state.momenta.clone(),
    }
}

fn gradient_flow_velocity(state: &EffectiveState, params: &EffectiveParams) -> Result<Vec<[f64; 2]>> {
    Ok(force(state, params)?
        .iter()
        .zip(&params.gamma)
        .map(|(f, g)| [f[0] / g, f[1] / g])
        .collect())
}

/// One RK4 step of `γ_j ż_j = −∇_j W`. Momenta are carried unchanged.
pub fn step_effective_gf(state: &EffectiveState, params: &EffectiveParams, dt: f64) -> Result<EffectiveState> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let k1 = gradient_flow_velocity(state, params)?;
    let k2 = gradient_flow_velocity(&offset(state, &k1, 0.5 * dt), params)?;
    let k3 = gradient_flow_velocity(&offset(state, &k2, 0.5 * dt), params)?;
    let k4 = gradient_flow_velocity(&offset(state, &k3, dt), params)?;
    let combined: Vec<[f64; 2]> = (0..k1.len())
        .map(|j| {
            let mix = |c: usize| (k1[j][c] + 2.0 * k2[j][c] + 2.0 * k3[j][c] + k4[j][c]) / 6.0;
            [mix(0), mix(1)]
        })
        .collect();
    let next = offset(state, &combined, dt);
    next.check(params)?;
    Ok(next)
}

/// One velocity-Verlet step of `ż_j = p_j`, `γ_j ṗ_j = −∇_j W`.
pub fn step_effective_mh(state: &EffectiveState, params: &EffectiveParams, dt: f64) -> Result<EffectiveState> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let kick = |s: &mut EffectiveState, f: &[[f64; 2]]| {
        for ((p, f), g) in s.momenta.iter_mut().zip(f).zip(&params.gamma) {
            p[0] += 0.5 * dt * f[0] / g;
            p[1] += 0.5 * dt * f[1] / g;
        }
    };
    let mut next = state.clone();
    kick(&mut next, &force(state, params)?);
    let momenta = next.momenta.clone();
    next = offset(&next, &momenta, dt);
    let forces = force(&next, params)?;
    kick(&mut next, &forces);
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectiveLaw {
    GradientFlow,
    MaxwellHiggs,
}

/// Recorded states of an effective run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTrajectory {
    pub law: EffectiveLaw,
    pub times: Vec<f64>,
    pub states: Vec<EffectiveState>,
    pub interaction: Vec<f64>,
    pub energy: Vec<f64>,
    /// Centre velocities `ż_j` at each recorded time.
    pub velocities: Vec<Vec<[f64; 2]>>,
}

impl EffectiveTrajectory {
    /// Centres at time `t` by cubic Hermite interpolation between records.
    pub fn positions_at(&self, t: f64) -> Result<Vec<[f64; 2]>> {
        let (first, last) = match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::Range("empty effective trajectory".into())),
        };
        let slack = 1e-9 * (1.0 + last.abs());
        if t < first - slack || t > last + slack {
            return Err(Error::Range(format!("t = {t} outside [{first}, {last}]")));
        }
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len().max(2) - 1);
        if self.times.len() == 1 {
            return Ok(self.states[0].positions.clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let span = t1 - t0;
        let s = ((t - t0) / span).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        let (a, b) = (&self.states[k - 1].positions, &self.states[k].positions);
        let (va, vb) = (&self.velocities[k - 1], &self.velocities[k]);
        Ok((0..a.len())
            .map(|j| {
                let c = |i: usize| h00 * a[j][i] + h10 * span * va[j][i] + h01 * b[j][i] + h11 * span * vb[j][i];
                [c(0), c(1)]
            })
            .collect())
    }

    /// Centre velocities at time `t` by linear interpolation between records.
    pub fn velocities_at(&self, t: f64) -> Result<Vec<[f64; 2]>> {
        let (first, last) = match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::Range("empty effective trajectory".into())),
        };
        let slack = 1e-9 * (1.0 + last.abs());
        if t < first - slack || t > last + slack {
            return Err(Error::Range(format!("t = {t} outside [{first}, {last}]")));
        }
        if self.times.len() == 1 {
            return Ok(self.velocities[0].clone());
        }
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1);
        let s = ((t - self.times[k - 1]) / (self.times[k] - self.times[k - 1])).clamp(0.0, 1.0);
        let (a, b) = (&self.velocities[k - 1], &self.velocities[k]);
        Ok(a.iter()
            .zip(b)
            .map(|(a, b)| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
            .collect())
    }

    /// Columns `t, x_j, y_j, px_j, py_j` for every vortex `j`, then `W, effective_energy`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let m = self.states.first().map_or(0, |s| s.positions.len());
        let mut header = vec!["t".to_string()];
        for j in 0..m {
            header.extend([format!("x_{j}"), format!("y_{j}"), format!("px_{j}"), format!("py_{j}")]);
        }
        header.extend(["W".to_string(), "effective_energy".to_string()]);
        writeln!(out, "{}", header.join(","))?;
        for (i, state) in self.states.iter().enumerate() {
            let mut row = vec![format!("{:.17e}", self.times[i])];
            for (z, p) in state.positions.iter().zip(&state.momenta) {
                row.extend([z[0], z[1], p[0], p[1]].iter().map(|v| format!("{v:.17e}")));
            }
            row.push(format!("{:.17e}", self.interaction[i]));
            row.push(format!("{:.17e}", self.energy[i]));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Integrates `law` from `initial` to `t_end` with step `dt`, recording every
/// `record_every` steps and at the final time.
pub fn integrate_effective(
    initial: &EffectiveState,
    params: &EffectiveParams,
    law: EffectiveLaw,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<EffectiveTrajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0 && t_end.is_finite()) || record_every == 0 {
        return Err(Error::Configuration(format!(
            "invalid effective run: dt = {dt}, t_end = {t_end}, record_every = {record_every}"
        )));
    }
    initial.check(params)?;
    let mut state = initial.clone();
    if law == EffectiveLaw::GradientFlow {
        state.momenta.iter_mut().for_each(|p| *p = [0.0; 2]);
    }
    let mut trajectory = EffectiveTrajectory {
        law,
        times: Vec::new(),
        states: Vec::new(),
        interaction: Vec::new(),
        energy: Vec::new(),
        velocities: Vec::new(),
    };
    let record = |traj: &mut EffectiveTrajectory, t: f64, s: &EffectiveState| -> Result<()> {
        traj.times.push(t);
        traj.interaction.push(interaction_energy_asymptotic(s, params)?);
        traj.energy.push(effective_energy(s, params)?);
        traj.velocities.push(match law {
            EffectiveLaw::GradientFlow => gradient_flow_velocity(s, params)?,
            EffectiveLaw::MaxwellHiggs => s.momenta.clone(),
        });
        traj.states.push(s.clone());
        Ok(())
    };
    record(&mut trajectory, 0.0, &state)?;
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    for step in 1..=steps {
        let h = dt.min(t_end - (step - 1) as f64 * dt);
        state = match law {
            EffectiveLaw::GradientFlow => step_effective_gf(&state, params, h)?,
            EffectiveLaw::MaxwellHiggs => step_effective_mh(&state, params, h)?,
        };
        if step % record_every == 0 || step == steps {
            let t = if step == steps { t_end } else { step as f64 * dt };
            record(&mut trajectory, t, &state)?;
        }
    }
    Ok(trajectory)
}
