//! Comparison of tracked lattice vortices with the effective laws.

use glvx_core::effective::{force, EffectiveLaw, EffectiveParams, EffectiveState, EffectiveTrajectory};
use glvx_core::evolve::Trajectory;
use glvx_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Centre positions per snapshot, in a fixed vortex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSeries {
    pub times: Vec<f64>,
    /// `positions[k][j]` is vortex `j` at `times[k]`.
    pub positions: Vec<Vec<[f64; 2]>>,
}

impl TrackSeries {
    /// Orders the tracks of `trajectory` by nearest initial position to `reference`.
    pub fn from_trajectory(trajectory: &Trajectory, reference: &[[f64; 2]]) -> Result<Self> {
        let tracks = &trajectory.tracks.tracks;
        if tracks.len() != reference.len() {
            return Err(Error::Comparison(format!(
                "{} tracked vortices but {} expected",
                tracks.len(),
                reference.len()
            )));
        }
        let mut order = Vec::with_capacity(reference.len());
        for z in reference {
            let (best, distance) = tracks
                .iter()
                .enumerate()
                .filter(|(id, _)| !order.contains(id))
                .map(|(id, tr)| {
                    let p = tr.observations[0].position;
                    (id, (p[0] - z[0]).hypot(p[1] - z[1]))
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or_else(|| Error::Comparison("track matching exhausted".into()))?;
            if distance > 1.0 {
                return Err(Error::Comparison(format!("no track starts near ({}, {})", z[0], z[1])));
            }
            order.push(best);
        }
        let snapshots = trajectory.times.len();
        if order.iter().any(|&id| tracks[id].observations.len() != snapshots) {
            return Err(Error::Comparison("tracks do not cover every snapshot".into()));
        }
        Ok(Self {
            times: trajectory.times.clone(),
            positions: (0..snapshots)
                .map(|k| order.iter().map(|&id| tracks[id].observations[k].position).collect())
                .collect(),
        })
    }

    pub fn from_effective(trajectory: &EffectiveTrajectory) -> Self {
        Self {
            times: trajectory.times.clone(),
            positions: trajectory.states.iter().map(|s| s.positions.clone()).collect(),
        }
    }

    pub fn num_vortices(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    /// `min_{j<k} |z_j − z_k|` per snapshot.
    pub fn separations(&self) -> Vec<f64> {
        self.positions
            .iter()
            .map(|z| {
                (0..z.len())
                    .flat_map(|j| (j + 1..z.len()).map(move |k| (j, k)))
                    .map(|(j, k)| (z[j][0] - z[k][0]).hypot(z[j][1] - z[k][1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Centred-difference velocities at the interior snapshots `1..len−1`.
    fn velocities(&self) -> Vec<(f64, Vec<[f64; 2]>)> {
        (1..self.times.len().saturating_sub(1))
            .map(|k| {
                let span = self.times[k + 1] - self.times[k - 1];
                let v = self.positions[k + 1]
                    .iter()
                    .zip(&self.positions[k - 1])
                    .map(|(a, b)| [(a[0] - b[0]) / span, (a[1] - b[1]) / span])
                    .collect();
                (self.times[k], v)
            })
            .collect()
    }

    /// Second differences at interior snapshots.
    fn accelerations(&self) -> Vec<Vec<[f64; 2]>> {
        (1..self.times.len().saturating_sub(1))
            .map(|k| {
                let (dl, dr) = (self.times[k] - self.times[k - 1], self.times[k + 1] - self.times[k]);
                (0..self.num_vortices())
                    .map(|j| {
                        let (a, b, c) = (self.positions[k - 1][j], self.positions[k][j], self.positions[k + 1][j]);
                        let second = |i: usize| 2.0 * ((c[i] - b[i]) / dr - (b[i] - a[i]) / dl) / (dl + dr);
                        [second(0), second(1)]
                    })
                    .collect()
            })
            .collect()
    }
}

/// Thresholds for the verdicts, already in absolute units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub max_relative_law_residual: f64,
    pub max_velocity_mismatch: f64,
    pub max_deviation: f64,
    pub min_separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub law: EffectiveLaw,
    /// `e^{−R₀}/√R₀` for the initial separation `R₀`.
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// `max_j |z_j^PDE(t) − z_j^eff(t)|`.
    pub deviation: Vec<f64>,
    pub sup_deviation: f64,
    pub separation: Vec<f64>,
    /// Interior snapshot times where velocity-law residuals are evaluated.
    pub residual_times: Vec<f64>,
    /// Gradient flow: `max_j |γ ż_j + ∇_j W| / |∇_j W|`.
    pub relative_law_residual: Vec<f64>,
    /// Maxwell–Higgs: `max_j |ż_j − p_j|`.
    pub velocity_mismatch: Vec<f64>,
    /// Maxwell–Higgs: `max_j |γ z̈_j + ∇_j W|` with `p_j` identified with `ż_j`.
    pub momentum_residual: Vec<f64>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

fn sup(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

fn at_most(name: &str, value: f64, threshold: f64) -> Verdict {
    Verdict {
        name: name.into(),
        value,
        threshold,
        pass: value <= threshold,
    }
}

/// Compares `pde` with `effective` at the snapshot times of `pde`.
pub fn compare_trajectories(
    pde: &TrackSeries,
    effective: &EffectiveTrajectory,
    params: &EffectiveParams,
    thresholds: &Thresholds,
) -> Result<ComparisonReport> {
    let m = pde.num_vortices();
    if m != params.len() || effective.states.first().map_or(0, |s| s.positions.len()) != m {
        return Err(Error::Comparison(format!(
            "vortex counts differ: PDE {m}, effective {}, parameters {}",
            effective.states.first().map_or(0, |s| s.positions.len()),
            params.len()
        )));
    }
    if pde.times.len() < 3 {
        return Err(Error::Comparison("need at least three snapshots".into()));
    }
    let law = effective.law;
    let deviation = pde
        .times
        .iter()
        .zip(&pde.positions)
        .map(|(&t, z)| {
            let e = effective.positions_at(t)?;
            Ok(z.iter().zip(&e).map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1])).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let separation = pde.separations();
    let initial = &pde.positions[0];
    let r0 = EffectiveState::at_rest(initial.clone()).min_separation().unwrap_or(f64::INFINITY);
    let epsilon = (-r0).exp() / r0.sqrt();

    let velocities = pde.velocities();
    let residual_times: Vec<f64> = velocities.iter().map(|(t, _)| *t).collect();
    let mut relative_law_residual = Vec::new();
    let mut velocity_mismatch = Vec::new();
    let mut momentum_residual = Vec::new();
    let accelerations = pde.accelerations();
    for (k, (t, v)) in velocities.iter().enumerate() {
        let z = &pde.positions[k + 1];
        let f = force(&EffectiveState::at_rest(z.clone()), params)?;
        match law {
            EffectiveLaw::GradientFlow => {
                let worst = (0..m)
                    .map(|j| {
                        let g = params.gamma[j];
                        let r = (g * v[j][0] - f[j][0]).hypot(g * v[j][1] - f[j][1]);
                        r / f[j][0].hypot(f[j][1])
                    })
                    .fold(0.0, f64::max);
                relative_law_residual.push(worst);
            }
            EffectiveLaw::MaxwellHiggs => {
                let p = effective.velocities_at(*t)?;
                velocity_mismatch.push((0..m).map(|j| (v[j][0] - p[j][0]).hypot(v[j][1] - p[j][1])).fold(0.0, f64::max));
                let a = &accelerations[k];
                momentum_residual.push(
                    (0..m)
                        .map(|j| {
                            let g = params.gamma[j];
                            (g * a[j][0] - f[j][0]).hypot(g * a[j][1] - f[j][1])
                        })
                        .fold(0.0, f64::max),
                );
            }
        }
    }

    let sup_deviation = sup(&deviation);
    let mut verdicts = vec![at_most("sup_deviation", sup_deviation, thresholds.max_deviation)];
    match law {
        EffectiveLaw::GradientFlow => {
            verdicts.push(at_most(
                "relative_law_residual",
                sup(&relative_law_residual),
                thresholds.max_relative_law_residual,
            ));
            // positive when every step increases the separation
            let smallest_increase = separation.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            verdicts.push(Verdict {
                name: "separation_increasing".into(),
                value: smallest_increase,
                threshold: 0.0,
                pass: smallest_increase > 0.0,
            });
        }
        EffectiveLaw::MaxwellHiggs => {
            verdicts.push(at_most("velocity_mismatch", sup(&velocity_mismatch), thresholds.max_velocity_mismatch));
            let closest = separation.iter().copied().fold(f64::INFINITY, f64::min);
            verdicts.push(Verdict {
                name: "min_separation".into(),
                value: closest,
                threshold: thresholds.min_separation,
                pass: closest > thresholds.min_separation,
            });
        }
    }
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(ComparisonReport {
        law,
        epsilon,
        times: pde.times.clone(),
        deviation,
        sup_deviation,
        separation,
        residual_times,
        relative_law_residual,
        velocity_mismatch,
        momentum_residual,
        verdicts,
        pass,
    })
}
