use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::radial::VortexProfile;

fn random_state(seed: u64, lattice: LatticeSpec, lambda: f64) -> FieldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = FieldState::vacuum(lattice, lambda);
    for z in state.fields.psi.iter_mut() {
        *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let n = lattice.points_per_side();
    for j in 0..n {
        for i in 0..n {
            let x = lattice.index(i, j);
            if i + 1 < n {
                state.fields.ax[x] = rng.gen_range(-2.0..2.0);
            }
            if j + 1 < n {
                state.fields.ay[x] = rng.gen_range(-2.0..2.0);
            }
        }
    }
    state
}

fn random_direction(seed: u64, lattice: LatticeSpec) -> FieldVector {
    let mut v = random_state(seed, lattice, 1.0).fields;
    let h = lattice.spacing();
    let norm = v.norm(h);
    v.scale(1.0 / norm);
    v
}

fn smooth_gauge(lattice: &LatticeSpec, amp: f64, kx: f64, ky: f64) -> Vec<f64> {
    let n = lattice.points_per_side();
    let mut chi = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let [x, y] = lattice.site(i, j);
            chi[lattice.index(i, j)] = amp * (kx * x).sin() * (ky * y).cos() + 0.3 * amp * x;
        }
    }
    chi
}

/// Bump supported strictly inside the lattice.
fn interior_bump(lattice: &LatticeSpec, centre: [f64; 2], width: f64) -> Vec<f64> {
    let n = lattice.points_per_side();
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let [x, y] = lattice.site(i, j);
            let r2 = ((x - centre[0]).powi(2) + (y - centre[1]).powi(2)) / (width * width);
            if r2 < 1.0 {
                out[lattice.index(i, j)] = (-1.0 / (1.0 - r2)).exp();
            }
        }
    }
    out
}

fn single(set: &ProfileSet, n: i32, lattice: &LatticeSpec) -> FieldState {
    build_multivortex(set, &VortexAnsatz::new(vec![[0.0, 0.0]], vec![n]), lattice).unwrap()
}

#[test]
fn vacuum_diagnostics_vanish() {
    let lattice = LatticeSpec::new(10.0, 81).unwrap();
    let vac = FieldState::vacuum(lattice, 1.0);
    assert_eq!(energy(&vac), 0.0);
    let g = gl_gradient(&vac);
    assert!(g.psi.iter().all(|z| z.norm() == 0.0) && g.ax.iter().all(|&v| v == 0.0) && g.ay.iter().all(|&v| v == 0.0));
    assert_eq!(degree(&vac).unwrap(), 0);
    assert_eq!(flux(&vac), 0.0);
    let j = supercurrent(&vac);
    assert!(j.x.iter().chain(&j.y).all(|&v| v == 0.0));
    let built = build_multivortex(&ProfileSet::new(), &VortexAnsatz::default(), &lattice).unwrap();
    assert!(energy(&built) < 1e-10);
}

#[test]
fn lattice_validation() {
    assert!(LatticeSpec::new(10.0, 32).is_err());
    assert!(LatticeSpec::new(20.0, 64).is_err());
    let l = LatticeSpec::with_spacing(0.125, 12.0).unwrap();
    assert_eq!(l.points_per_side() % 2, 0);
    assert!(l.extent() >= 12.0 && (l.spacing() - 0.125).abs() < 1e-15);
}

#[test]
fn gradient_matches_central_differences() {
    let lattice = LatticeSpec::new(6.0, 64).unwrap();
    let state = random_state(7, lattice, 1.3);
    let grad = gl_gradient(&state);
    let h = lattice.spacing();
    let t = 1e-4;
    for seed in 0..10 {
        let dir = random_direction(100 + seed, lattice);
        let mut plus = state.clone();
        plus.fields.axpy(t, &dir);
        let mut minus = state.clone();
        minus.fields.axpy(-t, &dir);
        let fd = (energy(&plus) - energy(&minus)) / (2.0 * t);
        let exact = grad.dot(&dir, h);
        assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "seed {seed}: {fd} vs {exact}");
    }
}

#[test]
fn gauge_invariance() {
    let set = profile_set(1.0, &[1, -1]).unwrap();
    let lattice = LatticeSpec::with_spacing(0.2, 15.0).unwrap();
    let ansatz = VortexAnsatz::new(vec![[-3.0, 0.5], [3.0, -0.5]], vec![1, 1]);
    let field = build_multivortex(&set, &ansatz, &lattice).unwrap();
    let chi = smooth_gauge(&lattice, 0.7, 0.4, 0.3);
    let moved = gauge_transform(&field, &chi).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    assert!(rel(energy(&moved), energy(&field)) < 1e-10);
    assert!(rel(flux(&moved), flux(&field)) < 1e-10);
    assert_eq!(degree(&moved).unwrap(), degree(&field).unwrap());
    for (a, b) in moved.psi().iter().zip(field.psi()) {
        assert!((a.norm() - b.norm()).abs() < 1e-14);
    }
    let (j0, j1) = (supercurrent(&field), supercurrent(&moved));
    for (a, b) in j0.x.iter().chain(&j0.y).zip(j1.x.iter().chain(&j1.y)) {
        assert!((a - b).abs() < 1e-10);
    }
    // constant χ only rotates ψ
    let constant = vec![1.1; lattice.num_sites()];
    let rotated = gauge_transform(&field, &constant).unwrap();
    assert_eq!(rotated.fields.ax, field.fields.ax);
    assert!(rel(energy(&rotated), energy(&field)) < 1e-12);
    // χ = 0 is the identity
    assert_eq!(gauge_transform(&field, &vec![0.0; lattice.num_sites()]).unwrap(), field);
    // the gauge-transformed momentum of a boost keeps its Gauss defect
    let boosted = ansatz.clone().with_momenta(vec![[0.05, 0.0], [-0.05, 0.0]]);
    let p = momentum_for(&field, &set, &boosted).unwrap();
    let mut p_moved = p.clone();
    p_moved.fields.psi.iter_mut().zip(&chi).for_each(|(z, c)| *z *= Complex64::cis(*c));
    let (g0, g1) = (gauss_residual(&field, &p).unwrap(), gauss_residual(&moved, &p_moved).unwrap());
    assert!(rel(g1, g0) < 1e-10);
}

#[test]
fn degree_and_flux_quantization() {
    let set = profile_set(1.0, &[1, -1, 2]).unwrap();
    let lattice = LatticeSpec::with_spacing(0.125, 18.0).unwrap();
    let one = single(&set, 1, &lattice);
    assert_eq!(degree(&one).unwrap(), 1);
    assert!((flux(&one) - 2.0 * PI).abs() < 1e-3);
    let two = single(&set, 2, &lattice);
    assert_eq!(degree(&two).unwrap(), 2);
    assert!((flux(&two) - 4.0 * PI).abs() < 1e-3);
    let dipole = build_multivortex(&set, &VortexAnsatz::new(vec![[-4.0, 0.0], [4.0, 0.0]], vec![1, -1]), &lattice).unwrap();
    assert_eq!(degree(&dipole).unwrap(), 0);
    assert!(flux(&dipole).abs() < 1e-3);
    let triple = VortexAnsatz::new(vec![[-5.0, -3.0], [5.0, -3.0], [0.0, 5.0]], vec![1, 1, 1]);
    let t = build_multivortex(&set, &triple, &lattice).unwrap();
    assert_eq!(degree(&t).unwrap(), 3);
    assert!((flux(&t) - 6.0 * PI).abs() < 3e-3);
}

#[test]
fn bogomolny_energy_on_lattice() {
    let set = profile_set(0.5, &[1]).unwrap();
    let energies: Vec<f64> = [0.25, 0.125, 0.0625]
        .iter()
        .map(|&h| {
            let lattice = LatticeSpec::new(20.0, (40.0 / h) as usize + 1).unwrap();
            energy(&single(&set, 1, &lattice))
        })
        .collect();
    assert!(((energies[1] - PI) / PI).abs() < 0.01);
    let radial = set[&1].scalars.energy;
    let ratio = (energies[0] - radial) / (energies[1] - radial);
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn pair_energy_exceeds_separate_vortices() {
    let set = profile_set(2.0, &[1]).unwrap();
    let lattice = LatticeSpec::with_spacing(0.125, 14.0).unwrap();
    let pair = build_multivortex(&set, &VortexAnsatz::new(vec![[-6.0, 0.0], [6.0, 0.0]], vec![1, 1]), &lattice).unwrap();
    let separate: f64 = [[-6.0, 0.0], [6.0, 0.0]]
        .iter()
        .map(|&z| energy(&build_multivortex(&set, &VortexAnsatz::new(vec![z], vec![1]), &lattice).unwrap()))
        .sum();
    assert!(energy(&pair) - separate > 0.0);
}

#[test]
fn placement_and_configuration_errors() {
    let set = profile_set(1.0, &[1]).unwrap();
    let lattice = LatticeSpec::with_spacing(0.25, 12.0).unwrap();
    let far = VortexAnsatz::new(vec![[5.0, 0.0]], vec![1]);
    assert!(matches!(build_multivortex(&set, &far, &lattice), Err(Error::Placement { index: 0, .. })));
    let missing = VortexAnsatz::new(vec![[0.0, 0.0]], vec![3]);
    assert!(matches!(build_multivortex(&set, &missing, &lattice), Err(Error::Configuration(_))));
    let close = VortexAnsatz::new(vec![[0.0, 0.0], [1.5, 0.0]], vec![1, 1]);
    assert!(matches!(build_multivortex(&set, &close, &lattice), Err(Error::SeparationViolation { .. })));
}

#[test]
fn supercurrent_decays_like_penetration_depth() {
    let set = profile_set(1.0, &[1]).unwrap();
    let lattice = LatticeSpec::new(20.0, 321).unwrap();
    let field = single(&set, 1, &lattice);
    let j = supercurrent(&field);
    let centre = 160;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..lattice.points_per_side())
        .map(|i| (lattice.coord(i), j.y[lattice.index(i, centre)].abs()))
        .filter(|(x, _)| (6.0..=10.0).contains(x))
        .map(|(x, v)| (x, v.ln()))
        .unzip();
    let (slope, _) = crate::fit::linear_fit(&xs, &ys).unwrap();
    assert!((slope + 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn translational_modes_reproduce_gamma() {
    let set = profile_set(2.0, &[1]).unwrap();
    let gamma = set[&1].scalars.gamma_n;
    let lattice = LatticeSpec::with_spacing(0.125, 16.0).unwrap();
    let h = lattice.spacing();
    let ansatz = VortexAnsatz::new(vec![[0.0, 0.0]], vec![1]);
    let t0 = translational_mode(&set, &ansatz, &lattice, 0, 0).unwrap();
    let t1 = translational_mode(&set, &ansatz, &lattice, 0, 1).unwrap();
    assert!((t0.dot(&t0, h) - gamma).abs() < 0.01 * gamma);
    assert!((t1.dot(&t1, h) - gamma).abs() < 0.01 * gamma);
    assert!(t0.dot(&t1, h).abs() < 0.01 * gamma);

    let pair = VortexAnsatz::new(vec![[-6.0, 0.0], [6.0, 0.0]], vec![1, 1]);
    let lattice = LatticeSpec::with_spacing(0.125, 14.0).unwrap();
    for k in 0..2 {
        for m in 0..2 {
            let a = translational_mode(&set, &pair, &lattice, 0, k).unwrap();
            let b = translational_mode(&set, &pair, &lattice, 1, m).unwrap();
            assert!(a.dot(&b, h).abs() <= 0.05 * gamma);
        }
    }
}

#[test]
fn gauge_modes() {
    let set = profile_set(2.0, &[1]).unwrap();
    let lattice = LatticeSpec::with_spacing(0.125, 14.0).unwrap();
    let h = lattice.spacing();
    let field = build_multivortex(&set, &VortexAnsatz::new(vec![[-6.0, 0.0], [6.0, 0.0]], vec![1, 1]), &lattice).unwrap();
    let zero = gauge_mode(&field, &vec![0.0; lattice.num_sites()]).unwrap();
    assert!(zero.norm(h) == 0.0);

    let gamma = interior_bump(&lattice, [-1.0, 2.0], 5.0);
    let zeta: Vec<f64> = interior_bump(&lattice, [1.0, -1.0], 4.0).iter().map(|v| 2.0 * v).collect();
    let lhs = gauge_mode(&field, &gamma).unwrap().dot(&gauge_mode(&field, &zeta).unwrap(), h);
    let k_zeta = gauge_operator(&field, &zeta);
    let rhs = h * h * gamma.iter().zip(&k_zeta).map(|(a, b)| a * b).sum::<f64>();
    assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());

    let g_norm = h * gamma.iter().map(|v| v * v).sum::<f64>().sqrt();
    let pair = VortexAnsatz::new(vec![[-6.0, 0.0], [6.0, 0.0]], vec![1, 1]);
    let gm = gauge_mode(&field, &gamma).unwrap();
    for j in 0..2 {
        for k in 0..2 {
            let t = translational_mode(&set, &pair, &lattice, j, k).unwrap();
            assert!(t.dot(&gm, h).abs() <= 0.05 * set[&1].scalars.gamma_n * g_norm);
        }
    }
}

fn vortex_potential(profile: &VortexProfile, offset: [f64; 2]) -> [f64; 2] {
    let r = offset[0].hypot(offset[1]);
    let s = profile.sample(r);
    let n = profile.degree() as f64;
    [-n * s.a_over_r2 * offset[1], n * s.a_over_r2 * offset[0]]
}

#[test]
fn momentum_matches_finite_difference_boost() {
    let set = profile_set(2.0, &[1]).unwrap();
    let lattice = LatticeSpec::with_spacing(0.125, 12.0).unwrap();
    let h = lattice.spacing();
    let z = [0.25, -0.5];
    let v = [0.1, 0.05];
    let ansatz = VortexAnsatz::new(vec![z], vec![1]).with_momenta(vec![v]);
    let momentum = build_momentum(&set, &ansatz, &lattice).unwrap();

    let t = 1e-4;
    let base = build_multivortex(&set, &VortexAnsatz::new(vec![z], vec![1]), &lattice).unwrap();
    let moved = build_multivortex(&set, &VortexAnsatz::new(vec![[z[0] + t * v[0], z[1] + t * v[1]]], vec![1]), &lattice).unwrap();
    let mut boost = moved.fields.clone();
    boost.axpy(-1.0, &base.fields);
    boost.scale(-1.0 / t);
    // −∂_t v = −p·T + G_{p·A}; remove the gauge part
    let n = lattice.points_per_side();
    let mut gauge = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let [x, y] = lattice.site(i, j);
            let a = vortex_potential(&set[&1], [x - z[0], y - z[1]]);
            gauge[lattice.index(i, j)] = v[0] * a[0] + v[1] * a[1];
        }
    }
    boost.axpy(-1.0, &gauge_mode(&base, &gauge).unwrap());
    let mut diff = momentum.fields.clone();
    diff.axpy(-1.0, &boost);
    let rel = diff.norm(h) / momentum.fields.norm(h);
    assert!(rel < 0.02, "relative mismatch {rel}");
}

#[test]
fn pure_gauge_and_zero_momenta() {
    let set = profile_set(2.0, &[1]).unwrap();
    let lattice = LatticeSpec::with_spacing(0.125, 12.0).unwrap();
    let ansatz = VortexAnsatz::new(vec![[0.0, 0.0]], vec![1]);
    let field = build_multivortex(&set, &ansatz, &lattice).unwrap();
    let zero = build_momentum(&set, &ansatz, &lattice).unwrap();
    assert_eq!(zero, MomentumState::zeros(lattice));
    assert_eq!(gauss_residual(&field, &zero).unwrap(), 0.0);
    assert_eq!(hamiltonian(&field, &zero).unwrap(), energy(&field));

    let zeta = interior_bump(&lattice, [1.0, 0.5], 4.0);
    let mut gauge_ansatz = ansatz.clone();
    gauge_ansatz.momenta_zeta = Some(zeta.clone());
    let m = build_momentum(&set, &gauge_ansatz, &lattice).unwrap();
    assert_eq!(m.fields, gauge_mode(&field, &zeta).unwrap());
    // a pure gauge direction violates the temporal-gauge constraint by exactly (−Δ + |ψ|²)ζ
    let k_zeta = gauge_operator(&field, &zeta);
    let expected = lattice.spacing() * k_zeta.iter().map(|v| v * v).sum::<f64>().sqrt();
    let got = gauss_residual(&field, &m).unwrap();
    assert!((got - expected).abs() < 1e-12 * expected);
}

#[test]
fn hamiltonian_expansion() {
    let set = profile_set(2.0, &[1]).unwrap();
    let gamma = set[&1].scalars.gamma_n;
    let lattice = LatticeSpec::with_spacing(0.125, 14.0).unwrap();
    let positions = vec![[-5.0, 0.0], [5.0, 0.0]];
    let p = vec![[0.05, 0.02], [-0.03, 0.04]];
    let ansatz = VortexAnsatz::new(positions.clone(), vec![1, 1]).with_momenta(p.clone());
    let field = build_multivortex(&set, &ansatz, &lattice).unwrap();
    let momentum = momentum_for(&field, &set, &ansatz).unwrap();
    let h_total = hamiltonian(&field, &momentum).unwrap();
    let singles: f64 = positions
        .iter()
        .map(|&z| energy(&build_multivortex(&set, &VortexAnsatz::new(vec![z], vec![1]), &lattice).unwrap()))
        .sum();
    let w_direct = energy(&field) - singles;
    let kinetic: f64 = p.iter().map(|q| 0.5 * gamma * (q[0] * q[0] + q[1] * q[1])).sum();
    assert!((h_total - (singles + w_direct + kinetic)).abs() <= 0.1 * kinetic);
    assert!(matches!(
        hamiltonian(&field, &MomentumState::zeros(LatticeSpec::with_spacing(0.125, 15.0).unwrap())),
        Err(Error::Shape(_))
    ));
}

#[test]
fn interaction_gradient_decays_exponentially() {
    let set = profile_set(2.0, &[1]).unwrap();
    let norms: Vec<f64> = [8.0, 12.0]
        .iter()
        .map(|&r: &f64| {
            let lattice = LatticeSpec::with_spacing(0.125, r / 2.0 + 8.0).unwrap();
            let ansatz = VortexAnsatz::new(vec![[-r / 2.0, 0.0], [r / 2.0, 0.0]], vec![1, 1]);
            interaction_gradient(&set, &ansatz, &lattice).unwrap().norm(lattice.spacing())
        })
        .collect();
    let slope = (norms[1] / norms[0]).ln() / 4.0;
    assert!((slope + 1.0).abs() < 0.15, "slope {slope}");
}

#[test]
fn snapshot_round_trip() {
    let lattice = LatticeSpec::new(6.0, 64).unwrap();
    let field = random_state(3, lattice, 1.7);
    let momentum = MomentumState {
        lattice,
        fields: random_state(4, lattice, 1.0).fields,
    };
    let mut buf = Vec::new();
    write_snapshot(&mut buf, &field, Some(&momentum)).unwrap();
    assert_eq!(&buf[..4], b"GLVX");
    assert_eq!(buf.len(), 4 + 4 + 4 + 8 + 32 * 64 * 64 + 1 + 32 * 64 * 64);
    let (f, m) = read_snapshot(buf.as_slice(), 1.7).unwrap();
    assert_eq!(f, field);
    assert_eq!(m.unwrap(), momentum);

    let mut bare = Vec::new();
    write_snapshot(&mut bare, &field, None).unwrap();
    let (f, m) = read_snapshot(bare.as_slice(), 1.7).unwrap();
    assert_eq!(f, field);
    assert!(m.is_none());

    bare[0] = b'X';
    assert!(matches!(read_snapshot(bare.as_slice(), 1.7), Err(Error::Format(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn random_gauge_leaves_energy_invariant(seed in 0u64..1000, amp in -3.0f64..3.0, kx in 0.0f64..1.5, ky in 0.0f64..1.5) {
        let lattice = LatticeSpec::new(6.0, 64).unwrap();
        let state = random_state(seed, lattice, 0.8);
        let chi = smooth_gauge(&lattice, amp, kx, ky);
        let moved = gauge_transform(&state, &chi).unwrap();
        let (e0, e1) = (energy(&state), energy(&moved));
        prop_assert!((e0 - e1).abs() <= 1e-10 * e0);
        prop_assert!((flux(&state) - flux(&moved)).abs() <= 1e-10 * (1.0 + flux(&state).abs()));
    }

    #[test]
    fn gradient_is_directional_derivative(seed in 0u64..1000) {
        let lattice = LatticeSpec::new(6.0, 64).unwrap();
        let state = random_state(seed, lattice, 2.0);
        let dir = random_direction(seed + 5000, lattice);
        let t = 1e-4;
        let mut plus = state.clone();
        plus.fields.axpy(t, &dir);
        let mut minus = state.clone();
        minus.fields.axpy(-t, &dir);
        let fd = (energy(&plus) - energy(&minus)) / (2.0 * t);
        let exact = gl_gradient(&state).dot(&dir, lattice.spacing());
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
    }
}
