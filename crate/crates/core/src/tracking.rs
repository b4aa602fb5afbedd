//! Vortex detection by plaquette winding and identification across snapshots.
//!
//! A plaquette carries charge `w` when the principal-value phase increments
//! of ψ around its corners sum to `2πw`. The sub-plaquette position is the
//! zero of the bilinear interpolant of the corner values after parallel
//! transport to one base corner (`ψ_{10} → U_x ψ_{10}` etc.), averaged over
//! the four base corners. Transport makes every corner value pick up the same
//! phase under a gauge transformation, so the located zero is gauge invariant.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::FieldState;

/// Plaquette hits closer than this many lattice spacings are merged into one core.
const CLUSTER_RADIUS_IN_SPACINGS: f64 = 2.0;
/// Largest displacement between snapshots accepted by [`match_step`].
pub const MATCHING_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexObservation {
    pub position: [f64; 2],
    pub charge: i32,
    /// `|ψ|` at the site nearest to `position`.
    pub core_value: f64,
}

fn winding(corners: &[Complex64; 4]) -> f64 {
    (0..4).map(|k| (corners[k].conj() * corners[(k + 1) % 4]).arg()).sum::<f64>() / (2.0 * PI)
}

/// Zero of `(1−s)(1−t) c00 + s(1−t) c10 + (1−s)t c01 + st c11` in the unit square by Newton's method.
fn bilinear_zero(c00: Complex64, c10: Complex64, c01: Complex64, c11: Complex64) -> Option<(f64, f64)> {
    let (mut s, mut t) = (0.5, 0.5);
    for _ in 0..50 {
        let value = (1.0 - s) * (1.0 - t) * c00 + s * (1.0 - t) * c10 + (1.0 - s) * t * c01 + s * t * c11;
        let ds = (1.0 - t) * (c10 - c00) + t * (c11 - c01);
        let dt = (1.0 - s) * (c01 - c00) + s * (c11 - c10);
        // solve [ds dt] [δs δt]ᵀ = −value as a real 2×2 system
        let det = ds.re * dt.im - dt.re * ds.im;
        if det.abs() < 1e-300 {
            return None;
        }
        let step_s = (-value.re * dt.im + dt.re * value.im) / det;
        let step_t = (-ds.re * value.im + value.re * ds.im) / det;
        s += step_s;
        t += step_t;
        if !(s.is_finite() && t.is_finite()) || s.abs() > 10.0 || t.abs() > 10.0 {
            return None;
        }
        if step_s.abs() + step_t.abs() < 1e-13 {
            let margin = 1e-6;
            return ((-margin..=1.0 + margin).contains(&s) && (-margin..=1.0 + margin).contains(&t)).then_some((s, t));
        }
    }
    None
}

/// Link phases around a plaquette in counter-clockwise corner order
/// `(0,0), (1,0), (1,1), (0,1)`: entry `k` transports corner `k+1` to corner `k`.
fn ring_links(h: f64, bottom: f64, right: f64, top: f64, left: f64) -> [Complex64; 4] {
    [
        Complex64::cis(-h * bottom),
        Complex64::cis(-h * right),
        Complex64::cis(h * top),
        Complex64::cis(h * left),
    ]
}

/// Plaquette coordinates of the zero, averaged over the four choices of base
/// corner so that the result respects the lattice symmetries.
fn transported_zero(corners: &[Complex64; 4], links: &[Complex64; 4]) -> (f64, f64) {
    let mut sum = (0.0, 0.0);
    let mut found = 0;
    for base in 0..4 {
        let at = |k: usize| (base + k) % 4;
        let mut values = [Complex64::new(0.0, 0.0); 4];
        values[at(0)] = corners[at(0)];
        values[at(1)] = links[at(0)] * corners[at(1)];
        values[at(3)] = links[at(3)].conj() * corners[at(3)];
        // average of the two transport paths to the opposite corner
        let forward = links[at(0)] * links[at(1)];
        let backward = (links[at(3)] * links[at(2)]).conj();
        values[at(2)] = 0.5 * (forward + backward) * corners[at(2)];
        if let Some((s, t)) = bilinear_zero(values[0], values[1], values[3], values[2]) {
            sum.0 += s;
            sum.1 += t;
            found += 1;
        }
    }
    if found == 0 {
        (0.5, 0.5)
    } else {
        (sum.0 / found as f64, sum.1 / found as f64)
    }
}

/// All vortex cores of `field`.
pub fn locate_vortices(field: &FieldState) -> Result<Vec<VortexObservation>> {
    let lat = &field.lattice;
    let n = lat.points_per_side();
    let h = lat.spacing();
    let psi = field.psi();
    let (ax, ay) = (&field.fields.ax, &field.fields.ay);
    let mut hits: Vec<([f64; 2], i32)> = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let x = lat.index(i, j);
            let corners = [psi[x], psi[x + 1], psi[x + n + 1], psi[x + n]];
            if corners.iter().all(|c| c.norm() < 1e-12) {
                return Err(Error::DegeneratePlaquette { i, j });
            }
            let w = winding(&corners);
            let charge = w.round();
            if charge == 0.0 || (w - charge).abs() > 1e-6 {
                continue;
            }
            let (s, t) = transported_zero(&corners, &ring_links(h, ax[x], ay[x + 1], ax[x + n], ay[x]));
            let origin = lat.site(i, j);
            hits.push(([origin[0] + s * h, origin[1] + t * h], charge as i32));
        }
    }

    // single-linkage clustering of neighbouring hits
    let radius = CLUSTER_RADIUS_IN_SPACINGS * h;
    let mut cluster_of: Vec<usize> = (0..hits.len()).collect();
    fn root(c: &mut [usize], mut k: usize) -> usize {
        while c[k] != k {
            c[k] = c[c[k]];
            k = c[k];
        }
        k
    }
    for a in 0..hits.len() {
        for b in a + 1..hits.len() {
            let d = (hits[a].0[0] - hits[b].0[0]).hypot(hits[a].0[1] - hits[b].0[1]);
            if d <= radius {
                let (ra, rb) = (root(&mut cluster_of, a), root(&mut cluster_of, b));
                cluster_of[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut observations = Vec::new();
    for k in 0..hits.len() {
        if root(&mut cluster_of, k) != k {
            continue;
        }
        let members: Vec<usize> = (0..hits.len()).filter(|&m| root(&mut cluster_of, m) == k).collect();
        let charge: i32 = members.iter().map(|&m| hits[m].1).sum();
        if charge == 0 {
            continue;
        }
        let count = members.len() as f64;
        let position = [
            members.iter().map(|&m| hits[m].0[0]).sum::<f64>() / count,
            members.iter().map(|&m| hits[m].0[1]).sum::<f64>() / count,
        ];
        let ni = (((position[0] + lat.extent()) / h).round() as usize).min(n - 1);
        let nj = (((position[1] + lat.extent()) / h).round() as usize).min(n - 1);
        observations.push(VortexObservation {
            position,
            charge,
            core_value: psi[lat.index(ni, nj)].norm(),
        });
    }
    Ok(observations)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: usize,
    pub charge: i32,
    pub times: Vec<f64>,
    pub observations: Vec<VortexObservation>,
}

impl Track {
    pub fn last_position(&self) -> [f64; 2] {
        self.observations.last().map(|o| o.position).unwrap_or([f64::NAN; 2])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub tracks: Vec<Track>,
}

impl TrackSet {
    /// Starts one track per observation.
    pub fn start(t: f64, observations: &[VortexObservation]) -> Self {
        Self {
            tracks: observations
                .iter()
                .enumerate()
                .map(|(id, o)| Track {
                    id,
                    charge: o.charge,
                    times: vec![t],
                    observations: vec![*o],
                })
                .collect(),
        }
    }

    /// Positions of all tracks at snapshot `k`.
    pub fn positions_at(&self, k: usize) -> Vec<[f64; 2]> {
        self.tracks.iter().map(|tr| tr.observations[k].position).collect()
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Writes the `t, vortex_id, charge, x, y, core_value` table.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,vortex_id,charge,x,y,core_value")?;
        let steps = self.tracks.first().map_or(0, |t| t.times.len());
        for k in 0..steps {
            for tr in &self.tracks {
                let o = &tr.observations[k];
                writeln!(
                    out,
                    "{:.10},{},{},{:.12e},{:.12e},{:.12e}",
                    tr.times[k], tr.id, tr.charge, o.position[0], o.position[1], o.core_value
                )?;
            }
        }
        Ok(())
    }
}

/// Extends every track by its nearest same-charge observation (greedy, closest pairs first).
pub fn match_step(prev: &TrackSet, t: f64, current: &[VortexObservation]) -> Result<TrackSet> {
    let charges = |mut v: Vec<i32>| {
        v.sort_unstable();
        v
    };
    let before = charges(prev.tracks.iter().map(|tr| tr.charge).collect());
    let after = charges(current.iter().map(|o| o.charge).collect());
    if before != after {
        return Err(Error::TopologyChange(format!("charges {before:?} became {after:?} at t = {t}")));
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (a, tr) in prev.tracks.iter().enumerate() {
        let p = tr.last_position();
        for (b, o) in current.iter().enumerate() {
            if o.charge == tr.charge {
                let d = (p[0] - o.position[0]).hypot(p[1] - o.position[1]);
                if d <= MATCHING_RADIUS {
                    candidates.push((d, a, b));
                }
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut track_used = vec![false; prev.tracks.len()];
    let mut obs_used = vec![false; current.len()];
    let mut next = prev.clone();
    for (_, a, b) in candidates {
        if track_used[a] || obs_used[b] {
            continue;
        }
        track_used[a] = true;
        obs_used[b] = true;
        next.tracks[a].times.push(t);
        next.tracks[a].observations.push(current[b]);
    }
    if let Some(a) = track_used.iter().position(|u| !u) {
        return Err(Error::TopologyChange(format!(
            "track {} (charge {}) has no observation within {MATCHING_RADIUS} at t = {t}",
            prev.tracks[a].id, prev.tracks[a].charge
        )));
    }
    Ok(next)
}
