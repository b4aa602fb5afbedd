//! Time stepping for the gradient flow `∂_t u = −E′(u)` and the
//! Maxwell–Higgs system written for `u = (ψ, A)` and `φ = (π, E) = −∂_t u`:
//!
//! ```text
//! ∂_t u = −φ,   ∂_t φ = E′(u)
//! ```
//!
//! Boundary sites and boundary links are frozen: every update direction is
//! projected with [`FieldVector::zero_frozen`] so they stay bit-identical.

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    energy, gauss_residual, gl_gradient_into, hamiltonian, write_snapshot, FieldState, FieldVector,
    GradientWorkspace, MomentumState,
};
use crate::tracking::{locate_vortices, match_step, TrackSet, VortexObservation};

/// RK4 on the diffusion-type stiffness `8/h²` is stable up to `dt ≈ 0.35 h²`.
pub const MAX_CFL_FACTOR: f64 = 0.2;
pub const MAX_COURANT_FACTOR: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GfRunConfig {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub cfl_factor: f64,
}

impl GfRunConfig {
    pub fn new(spacing: f64, cfl_factor: f64, t_end: f64, snapshot_every: usize) -> Result<Self> {
        let c = Self {
            dt: cfl_factor * spacing * spacing,
            t_end,
            snapshot_every,
            cfl_factor,
        };
        c.validate(spacing)?;
        Ok(c)
    }

    pub fn validate(&self, spacing: f64) -> Result<()> {
        if !(self.cfl_factor > 0.0 && self.cfl_factor <= MAX_CFL_FACTOR) {
            return Err(Error::Configuration(format!("cfl_factor {} outside (0, {MAX_CFL_FACTOR}]", self.cfl_factor)));
        }
        check_common(self.dt, self.cfl_factor * spacing * spacing, self.t_end, self.snapshot_every)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhRunConfig {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub courant_factor: f64,
}

impl MhRunConfig {
    pub fn new(spacing: f64, courant_factor: f64, t_end: f64, snapshot_every: usize) -> Result<Self> {
        let c = Self {
            dt: courant_factor * spacing,
            t_end,
            snapshot_every,
            courant_factor,
        };
        c.validate(spacing)?;
        Ok(c)
    }

    pub fn validate(&self, spacing: f64) -> Result<()> {
        if !(self.courant_factor > 0.0 && self.courant_factor <= MAX_COURANT_FACTOR) {
            return Err(Error::Configuration(format!(
                "courant_factor {} outside (0, {MAX_COURANT_FACTOR}]",
                self.courant_factor
            )));
        }
        check_common(self.dt, self.courant_factor * spacing, self.t_end, self.snapshot_every)
    }
}

fn check_common(dt: f64, expected_dt: f64, t_end: f64, snapshot_every: usize) -> Result<()> {
    if (dt - expected_dt).abs() > 1e-12 * expected_dt {
        return Err(Error::Configuration(format!("dt = {dt} does not match the stability factor ({expected_dt})")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Configuration(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    if snapshot_every == 0 {
        return Err(Error::Configuration("snapshot_every must be >= 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RunConfig {
    GradientFlow(GfRunConfig),
    MaxwellHiggs(MhRunConfig),
}

impl RunConfig {
    fn dt(&self) -> f64 {
        match self {
            RunConfig::GradientFlow(c) => c.dt,
            RunConfig::MaxwellHiggs(c) => c.dt,
        }
    }

    fn t_end(&self) -> f64 {
        match self {
            RunConfig::GradientFlow(c) => c.t_end,
            RunConfig::MaxwellHiggs(c) => c.t_end,
        }
    }

    fn snapshot_every(&self) -> usize {
        match self {
            RunConfig::GradientFlow(c) => c.snapshot_every,
            RunConfig::MaxwellHiggs(c) => c.snapshot_every,
        }
    }
}

fn check_finite(v: &FieldVector, step: usize) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::BlowUp { step })
    }
}

/// Classical RK4 for `u̇ = −E′(u)` with reusable stage storage.
#[derive(Debug, Clone, Default)]
pub struct GradientFlowStepper {
    workspace: GradientWorkspace,
    slope: Option<FieldVector>,
    stage: Option<FieldState>,
    next: Option<FieldVector>,
}

impl GradientFlowStepper {
    fn eval(&mut self, at_stage: bool, base: &FieldState) {
        let lattice = base.lattice;
        let slope = self.slope.get_or_insert_with(|| FieldVector::zeros(lattice.num_sites()));
        let point = if at_stage { self.stage.as_ref().unwrap() } else { base };
        gl_gradient_into(point, &mut self.workspace, slope);
        slope.zero_frozen(&lattice);
    }

    /// Advances `state` by one step. `step` is only used in error reports.
    pub fn step(&mut self, state: &mut FieldState, dt: f64, step: usize) -> Result<()> {
        if self.stage.as_ref().is_some_and(|s| s.lattice != state.lattice) {
            *self = Self::default();
        }
        let stage = self.stage.get_or_insert_with(|| state.clone());
        stage.lambda = state.lambda;
        self.next.get_or_insert_with(|| state.fields.clone());
        // weights of k1..k4 in the update and offsets of the following stage
        let weights = [dt / 6.0, dt / 3.0, dt / 3.0, dt / 6.0];
        let offsets = [0.5 * dt, 0.5 * dt, dt];
        for k in 0..4 {
            self.eval(k > 0, state);
            let slope = self.slope.as_ref().unwrap();
            let next = self.next.as_mut().unwrap();
            if k == 0 {
                next.assign_axpy(&state.fields, -weights[0], slope);
            } else {
                next.axpy(-weights[k], slope);
            }
            if k < 3 {
                self.stage.as_mut().unwrap().fields.assign_axpy(&state.fields, -offsets[k], slope);
            }
        }
        std::mem::swap(&mut state.fields, self.next.as_mut().unwrap());
        check_finite(&state.fields, step)
    }
}

/// One classical RK4 step of `u̇ = −E′(u)`. `step` is only used in error reports.
pub fn step_gradient_flow(state: &FieldState, dt: f64, step: usize) -> Result<FieldState> {
    let mut next = state.clone();
    GradientFlowStepper::default().step(&mut next, dt, step)?;
    Ok(next)
}

/// Störmer–Verlet (kick, drift, kick) with the force cached between steps.
#[derive(Debug, Clone, Default)]
pub struct MaxwellHiggsStepper {
    workspace: GradientWorkspace,
    force: Option<FieldVector>,
}

impl MaxwellHiggsStepper {
    pub fn step(&mut self, field: &mut FieldState, momentum: &mut MomentumState, dt: f64, step: usize) -> Result<()> {
        let lattice = field.lattice;
        if self.force.as_ref().is_some_and(|f| f.len() != lattice.num_sites()) {
            *self = Self::default();
        }
        let force = match self.force.as_mut() {
            Some(f) => f,
            None => {
                let mut f = FieldVector::zeros(lattice.num_sites());
                gl_gradient_into(field, &mut self.workspace, &mut f);
                f.zero_frozen(&lattice);
                self.force.insert(f)
            }
        };
        momentum.fields.axpy(0.5 * dt, force);
        momentum.fields.zero_frozen(&lattice);
        field.fields.axpy(-dt, &momentum.fields);
        gl_gradient_into(field, &mut self.workspace, force);
        force.zero_frozen(&lattice);
        momentum.fields.axpy(0.5 * dt, force);
        check_finite(&field.fields, step)?;
        check_finite(&momentum.fields, step)
    }

    /// Drops the cached force; required after modifying the field externally.
    pub fn reset(&mut self) {
        self.force = None;
    }
}

/// One Störmer–Verlet step (kick, drift, kick).
pub fn step_maxwell_higgs(
    field: &FieldState,
    momentum: &MomentumState,
    dt: f64,
    step: usize,
) -> Result<(FieldState, MomentumState)> {
    let (mut f, mut m) = (field.clone(), momentum.clone());
    MaxwellHiggsStepper::default().step(&mut f, &mut m, dt, step)?;
    Ok((f, m))
}

/// Diagnostics recorded at one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub step: usize,
    pub t: f64,
    /// `E_GL` for gradient flow, `H` for Maxwell–Higgs.
    pub energy: f64,
    pub gauss_residual: Option<f64>,
    /// Observations ordered by track id.
    pub vortices: Vec<VortexObservation>,
}

/// Receives every snapshot of a run.
pub trait TrajectorySink {
    fn record(&mut self, record: &SnapshotRecord, field: &FieldState, momentum: Option<&MomentumState>) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Streams `t, energy, gauss_residual, charge_0, x_0, y_0, …` rows.
pub struct DiagnosticsCsv<W: Write> {
    out: W,
    header_written: bool,
}

impl<W: Write> DiagnosticsCsv<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            header_written: false,
        }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TrajectorySink for DiagnosticsCsv<W> {
    fn record(&mut self, r: &SnapshotRecord, _: &FieldState, _: Option<&MomentumState>) -> Result<()> {
        if !self.header_written {
            write!(self.out, "t,energy,gauss_residual")?;
            for k in 0..r.vortices.len() {
                write!(self.out, ",charge_{k},x_{k},y_{k}")?;
            }
            writeln!(self.out)?;
            self.header_written = true;
        }
        let gauss = r.gauss_residual.map_or(String::from("nan"), |g| format!("{g:.17e}"));
        write!(self.out, "{:.10},{:.17e},{gauss}", r.t, r.energy)?;
        for v in &r.vortices {
            write!(self.out, ",{},{:.17e},{:.17e}", v.charge, v.position[0], v.position[1])?;
        }
        writeln!(self.out)?;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Writes a GLVX snapshot file per recorded step into a directory.
pub struct SnapshotDir {
    pub dir: PathBuf,
}

impl TrajectorySink for SnapshotDir {
    fn record(&mut self, r: &SnapshotRecord, field: &FieldState, momentum: Option<&MomentumState>) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let file = std::fs::File::create(self.dir.join(format!("snapshot_{:08}.glvx", r.step)))?;
        write_snapshot(std::io::BufWriter::new(file), field, momentum)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub vortex_tracks: Vec<Vec<VortexObservation>>,
    pub energy_series: Vec<f64>,
    pub gauss_series: Option<Vec<f64>>,
    pub tracks: TrackSet,
}

impl Trajectory {
    /// Position of track `id` at every snapshot.
    pub fn track_positions(&self, id: usize) -> Vec<[f64; 2]> {
        self.tracks.tracks[id].observations.iter().map(|o| o.position).collect()
    }
}

/// Result of [`evolve`]: diagnostics plus the final state.
#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub trajectory: Trajectory,
    pub field: FieldState,
    pub momentum: Option<MomentumState>,
}

struct Recorder<'a, 'b> {
    trajectory: Trajectory,
    sinks: &'a mut [&'b mut dyn TrajectorySink],
}

impl Recorder<'_, '_> {
    fn record(&mut self, step: usize, t: f64, field: &FieldState, momentum: Option<&MomentumState>) -> Result<()> {
        let observed = locate_vortices(field)?;
        let tracks = if self.trajectory.times.is_empty() {
            TrackSet::start(t, &observed)
        } else {
            match_step(&self.trajectory.tracks, t, &observed)?
        };
        let vortices: Vec<VortexObservation> = tracks.tracks.iter().map(|tr| *tr.observations.last().unwrap()).collect();
        let (energy_value, gauss) = match momentum {
            Some(m) => (hamiltonian(field, m)?, Some(gauss_residual(field, m)?)),
            None => (energy(field), None),
        };
        let record = SnapshotRecord {
            step,
            t,
            energy: energy_value,
            gauss_residual: gauss,
            vortices: vortices.clone(),
        };
        for sink in self.sinks.iter_mut() {
            sink.record(&record, field, momentum)?;
        }
        let tr = &mut self.trajectory;
        tr.times.push(t);
        tr.vortex_tracks.push(vortices);
        tr.energy_series.push(energy_value);
        if let Some(g) = gauss {
            tr.gauss_series.get_or_insert_with(Vec::new).push(g);
        }
        tr.tracks = tracks;
        Ok(())
    }
}

/// Runs the stepper selected by `config`, recording diagnostics every
/// `snapshot_every` steps and at the final time. A momentum must be given
/// exactly for Maxwell–Higgs runs.
pub fn evolve(
    initial: &FieldState,
    momentum: Option<&MomentumState>,
    config: RunConfig,
    sinks: &mut [&mut dyn TrajectorySink],
) -> Result<EvolveOutcome> {
    let h = initial.lattice.spacing();
    match (&config, momentum) {
        (RunConfig::GradientFlow(c), None) => c.validate(h)?,
        (RunConfig::MaxwellHiggs(c), Some(m)) => {
            c.validate(h)?;
            if m.lattice != initial.lattice {
                return Err(Error::Shape("momentum lattice differs from field lattice".into()));
            }
        }
        (RunConfig::GradientFlow(_), Some(_)) => {
            return Err(Error::Configuration("gradient flow takes no momentum".into()))
        }
        (RunConfig::MaxwellHiggs(_), None) => {
            return Err(Error::Configuration("Maxwell-Higgs evolution needs a momentum".into()))
        }
    }
    let dt = config.dt();
    let steps = (config.t_end() / dt).round() as usize;
    let every = config.snapshot_every();

    let mut field = initial.clone();
    let mut phi = momentum.cloned().map(|mut m| {
        m.fields.zero_frozen(&m.lattice);
        m
    });
    let mut recorder = Recorder {
        trajectory: Trajectory::default(),
        sinks,
    };
    recorder.record(0, 0.0, &field, phi.as_ref())?;
    let mut gf = GradientFlowStepper::default();
    let mut mh = MaxwellHiggsStepper::default();
    for step in 1..=steps {
        match (&config, phi.as_mut()) {
            (RunConfig::MaxwellHiggs(_), Some(m)) => mh.step(&mut field, m, dt, step)?,
            _ => gf.step(&mut field, dt, step)?,
        }
        if step % every == 0 || step == steps {
            recorder.record(step, step as f64 * dt, &field, phi.as_ref())?;
        }
    }
    for sink in recorder.sinks.iter_mut() {
        sink.finish()?;
    }
    Ok(EvolveOutcome {
        trajectory: recorder.trajectory,
        field,
        momentum: phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_multivortex, gl_gradient, momentum_for, profile_set, LatticeSpec, VortexAnsatz};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn masked_gradient(state: &FieldState) -> FieldVector {
        let mut g = gl_gradient(state);
        g.zero_frozen(&state.lattice);
        g
    }

    fn small_lattice() -> LatticeSpec {
        LatticeSpec::with_spacing(0.25, 10.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(GfRunConfig::new(0.125, 0.3, 1.0, 1).is_err());
        assert!(MhRunConfig::new(0.125, 0.5, 1.0, 1).is_err());
        assert!(GfRunConfig::new(0.125, 0.1, 1.0, 0).is_err());
        let mut c = GfRunConfig::new(0.125, 0.1, 1.0, 1).unwrap();
        c.dt *= 2.0;
        assert!(c.validate(0.125).is_err());
    }

    #[test]
    fn vacuum_is_fixed() {
        let lattice = small_lattice();
        let vac = FieldState::vacuum(lattice, 1.0);
        let next = step_gradient_flow(&vac, 0.1 * 0.0625, 1).unwrap();
        assert_eq!(next, vac);
        let zero = MomentumState::zeros(lattice);
        let (f, m) = step_maxwell_higgs(&vac, &zero, 0.25 * 0.25, 1).unwrap();
        assert_eq!(f, vac);
        assert_eq!(m, zero);
    }

    #[test]
    fn zero_horizon_records_initial_state() {
        let set = profile_set(1.0, &[1]).unwrap();
        let lattice = small_lattice();
        let f = build_multivortex(&set, &VortexAnsatz::new(vec![[0.0, 0.0]], vec![1]), &lattice).unwrap();
        let cfg = RunConfig::GradientFlow(GfRunConfig::new(lattice.spacing(), 0.1, 0.0, 5).unwrap());
        let out = evolve(&f, None, cfg, &mut []).unwrap();
        assert_eq!(out.trajectory.times, vec![0.0]);
        assert_eq!(out.trajectory.energy_series, vec![energy(&f)]);
        assert_eq!(out.field, f);
    }

    #[test]
    fn blow_up_is_reported() {
        let lattice = small_lattice();
        let mut f = FieldState::vacuum(lattice, 1.0);
        f.fields.psi[lattice.index(5, 5)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(step_gradient_flow(&f, 1e-3, 7), Err(Error::BlowUp { step: 7 })));
    }

    #[test]
    fn static_vortex_barely_moves() {
        let set = profile_set(1.0, &[1]).unwrap();
        let lattice = small_lattice();
        let f0 = build_multivortex(&set, &VortexAnsatz::new(vec![[0.0, 0.0]], vec![1]), &lattice).unwrap();
        let h = lattice.spacing();
        let g0 = masked_gradient(&f0).norm(h);
        let t_end = 5.0;
        let cfg = RunConfig::GradientFlow(GfRunConfig::new(h, 0.2, t_end, 1000).unwrap());
        let out = evolve(&f0, None, cfg, &mut []).unwrap();
        let mut diff = out.field.fields.clone();
        diff.axpy(-1.0, &f0.fields);
        assert!(diff.norm(h) <= 10.0 * g0 * t_end);
    }

    #[test]
    fn gradient_flow_dissipates_and_freezes_boundary() {
        let set = profile_set(1.0, &[1]).unwrap();
        let lattice = small_lattice();
        let mut f = build_multivortex(&set, &VortexAnsatz::new(vec![[0.3, -0.2]], vec![1]), &lattice).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = lattice.points_per_side();
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                f.fields.psi[lattice.index(i, j)] += Complex64::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
            }
        }
        let initial = f.clone();
        let dt = 0.1 * lattice.spacing().powi(2);
        let mut e = energy(&f);
        for step in 1..=200 {
            f = step_gradient_flow(&f, dt, step).unwrap();
            let e_next = energy(&f);
            assert!(e_next <= e * (1.0 + 1e-10), "step {step}: {e} -> {e_next}");
            e = e_next;
        }
        for j in 0..n {
            for i in 0..n {
                if lattice.is_boundary_site(i, j) {
                    assert_eq!(f.fields.psi[lattice.index(i, j)], initial.fields.psi[lattice.index(i, j)]);
                }
            }
        }
    }

    #[test]
    fn verlet_conserves_gauss_law_and_energy() {
        let set = profile_set(2.0, &[1]).unwrap();
        let lattice = LatticeSpec::with_spacing(0.25, 13.0).unwrap();
        let ansatz = VortexAnsatz::new(vec![[-2.5, 0.0], [2.5, 0.0]], vec![1, 1]).with_momenta(vec![[0.1, 0.0], [-0.1, 0.05]]);
        let f = build_multivortex(&set, &ansatz, &lattice).unwrap();
        let m = momentum_for(&f, &set, &ansatz).unwrap();
        let cfg = RunConfig::MaxwellHiggs(MhRunConfig::new(lattice.spacing(), 0.25, 2.0, 4).unwrap());
        let out = evolve(&f, Some(&m), cfg, &mut []).unwrap();
        let gauss = out.trajectory.gauss_series.unwrap();
        for g in &gauss {
            assert!((g - gauss[0]).abs() <= 1e-10 * (1.0 + gauss[0]));
        }
        let h0 = out.trajectory.energy_series[0];
        for e in &out.trajectory.energy_series {
            assert!(((e - h0) / h0).abs() < 1e-3);
        }
    }

    #[test]
    fn diagnostics_csv_layout() {
        let set = profile_set(1.0, &[1]).unwrap();
        let lattice = small_lattice();
        let f = build_multivortex(&set, &VortexAnsatz::new(vec![[0.0, 0.0]], vec![1]), &lattice).unwrap();
        let cfg = RunConfig::GradientFlow(GfRunConfig::new(lattice.spacing(), 0.1, 0.0625, 5).unwrap());
        let mut csv = DiagnosticsCsv::new(Vec::new());
        evolve(&f, None, cfg, &mut [&mut csv]).unwrap();
        let text = String::from_utf8(csv.into_inner()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,energy,gauss_residual,charge_0,x_0,y_0");
        assert_eq!(lines.len(), 1 + 2 + 1);
        assert!(lines[1].starts_with("0.0000000000,"));
    }
}
