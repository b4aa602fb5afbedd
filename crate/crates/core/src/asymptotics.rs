//! Numerical checks of the two-centre integral estimates behind the
//! interaction asymptotics.
//!
//! Both integrals have the form `∫_{ℝ²} F(|x|) G(|x − a|) dx` with integrable
//! singularities at `0` and `a`. The plane is split by the perpendicular
//! bisector of `0` and `a`; each half is integrated in polar coordinates
//! about the centre it contains, with `r = s²` so that the polar weight
//! absorbs singularities up to `r^{−3/2}`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::quadrature::{integrate, Tolerance};
use crate::special::k1;

/// Discretization controls for the two-centre quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Integration radius around each centre beyond `|a|`, in units of the
    /// slowest combined decay length. The neglected tail is below `e^{−domain_radius}`.
    pub domain_radius: f64,
    /// Initial angular panels per half-plane.
    pub resolution: usize,
    /// Relative tolerance of the adaptive rules.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            domain_radius: 50.0,
            resolution: 8,
            tolerance: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-8) {
            return Err(Error::Parameter(format!("quadrature tolerance {} outside (0, 1e-8]", self.tolerance)));
        }
        if self.resolution == 0 || !(self.domain_radius >= 20.0) {
            return Err(Error::Parameter(format!(
                "need resolution >= 1 and domain_radius >= 20, got {} and {}",
                self.resolution, self.domain_radius
            )));
        }
        Ok(())
    }

    /// Same spec with twice the angular resolution.
    pub fn refined(&self) -> Self {
        Self {
            resolution: 2 * self.resolution,
            ..*self
        }
    }
}

/// `∫ F(|x|) G(|x − a|) dx`. `decay` is a lower bound on the combined
/// exponential rate of `F(r) G(r − |a|)` for large `r`.
fn two_centre_integral(
    near_origin: &dyn Fn(f64) -> f64,
    near_target: &dyn Fn(f64) -> f64,
    a: [f64; 2],
    decay: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let distance = a[0].hypot(a[1]);
    let cutoff = distance + spec.domain_radius / decay;
    let inner_tol = Tolerance::relative(0.1 * spec.tolerance);
    let outer_tol = Tolerance::relative(spec.tolerance);

    // half-plane about `centre`, bounded by the bisector towards `other`
    let half = |centre: [f64; 2], other: [f64; 2], own: &dyn Fn(f64) -> f64, far_fn: &dyn Fn(f64) -> f64| {
        let (ox, oy) = (other[0] - centre[0], other[1] - centre[1]);
        let facing = oy.atan2(ox);
        let radial = |phi: f64| -> Result<f64> {
            let cos = (phi - facing).cos();
            let limit = if cos > 0.0 { (0.5 * distance / cos).min(cutoff) } else { cutoff };
            let (ux, uy) = (phi.cos(), phi.sin());
            integrate(
                |s| {
                    let r = s * s;
                    let far = (r * ux - ox).hypot(r * uy - oy);
                    2.0 * s * r * own(r) * far_fn(far)
                },
                0.0,
                limit.sqrt(),
                inner_tol,
            )
        };
        let mut breaks: Vec<f64> = (0..=spec.resolution)
            .map(|k| facing - PI + 2.0 * PI * k as f64 / spec.resolution as f64)
            .collect();
        breaks.extend([facing - 0.5 * PI, facing, facing + 0.5 * PI]);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let mut failure = None;
            let part = integrate(
                |phi| match radial(phi) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                w[0],
                w[1],
                outer_tol,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            total += part;
        }
        Ok::<f64, Error>(total)
    };
    let origin_half = half([0.0, 0.0], a, near_origin, near_target)?;
    let target_half = half(a, [0.0, 0.0], near_target, near_origin)?;
    Ok(origin_half + target_half)
}

/// `∫ e^{−α|x|} e^{−β|x−a|} / (|x|^γ |x−a|^δ) dx`.
pub fn convolution_integral(
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    a: [f64; 2],
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
        return Err(Error::Parameter(format!("need 0 < alpha <= beta, got {alpha}, {beta}")));
    }
    if !((0.0..1.5).contains(&gamma) && (0.0..1.5).contains(&delta)) {
        return Err(Error::Parameter(format!("need 0 <= gamma, delta < 3/2, got {gamma}, {delta}")));
    }
    if !(a[0].hypot(a[1]) > 0.0) {
        return Err(Error::Parameter("the two centres must be distinct".into()));
    }
    let f = move |r: f64| (-alpha * r).exp() * r.powf(-gamma);
    let g = move |r: f64| (-beta * r).exp() * r.powf(-delta);
    two_centre_integral(&f, &g, a, alpha + beta, spec)
}

/// `2π ∫₀^∞ r e^{−m r} I₀(r) dr = 2π m / (m² − 1)^{3/2}` for `m > 1`.
pub fn source_moment_closed_form(m: f64) -> f64 {
    2.0 * PI * m / (m * m - 1.0).powf(1.5)
}

/// Numeric and asymptotic values of `∫ e^{−m|x|} K₁(|x − z|) dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapValues {
    pub numeric: f64,
    pub asymptotic: f64,
}

impl OverlapValues {
    pub fn ratio(&self) -> f64 {
        self.numeric / self.asymptotic
    }
}

/// The overlap integral and its leading asymptotic form
/// `√(π/2) e^{−|z|}/√|z| · 2π ∫ r e^{−mr} I₀(r) dr`.
pub fn localized_overlap(m: f64, z: [f64; 2], spec: &QuadratureSpec) -> Result<OverlapValues> {
    spec.validate()?;
    if !(m > 1.0 && m.is_finite()) {
        return Err(Error::Parameter(format!("localized weight needs decay m > 1, got {m}")));
    }
    let distance = z[0].hypot(z[1]);
    if !(distance >= 4.0) {
        return Err(Error::Range(format!("overlap asymptotics need |z| >= 4, got {distance}")));
    }
    let b = move |r: f64| (-m * r).exp();
    let e = |r: f64| if r > 0.0 { k1(r) } else { 0.0 };
    let numeric = two_centre_integral(&b, &e, z, 1.0, spec)?;
    let asymptotic = (0.5 * PI).sqrt() * (-distance).exp() / distance.sqrt() * source_moment_closed_form(m);
    Ok(OverlapValues { numeric, asymptotic })
}

/// Fitted scaling of `I(|a|)` from `log I = c − rate·|a| + power·log|a| + q/|a|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub rate: f64,
    pub power: f64,
}

/// Fits [`ScalingFit`] to samples `(|a|, I)`. The `1/|a|` term absorbs the
/// first correction to the leading prefactor so that `rate` and `power`
/// are not biased by it at moderate `|a|`.
pub fn fit_scaling(distances: &[f64], values: &[f64]) -> Result<ScalingFit> {
    if distances.len() != values.len() || distances.len() < 4 {
        return Err(Error::Shape(format!("need at least 4 samples, got {}", distances.len())));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Range(format!("scaling fit needs positive values, got {v}")));
    }
    let rows: Vec<Vec<f64>> = distances.iter().map(|&d| vec![1.0, -d, d.ln(), 1.0 / d]).collect();
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let coef = least_squares(&rows, &logs)?;
    Ok(ScalingFit {
        rate: coef[1],
        power: coef[2],
    })
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub parameters: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn within(check: &str, parameters: String, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            parameters,
            measured,
            expected,
            tolerance,
            pass: (measured - expected).abs() <= tolerance,
        }
    }
}

/// Separations used for the convolution scaling fits.
pub const CONVOLUTION_SEPARATIONS: [f64; 7] = [4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];

fn convolution_fit(alpha: f64, beta: f64, spec: &QuadratureSpec) -> Result<ScalingFit> {
    let values = CONVOLUTION_SEPARATIONS
        .iter()
        .map(|&d| convolution_integral(alpha, beta, 0.0, 0.0, [d, 0.0], spec))
        .collect::<Result<Vec<_>>>()?;
    fit_scaling(&CONVOLUTION_SEPARATIONS, &values)
}

/// Runs every check: convolution decay and prefactor power for `α = β = 2`,
/// decay for `α = 1 < β = 2`, the small-`|a|` limit, and the overlap ratio at
/// `|z| = 6, 12` for `m = 2` and at `|z| = 10` for `m = 4`.
pub fn verification_report(spec: &QuadratureSpec) -> Result<Vec<CheckRecord>> {
    let mut records = Vec::new();
    let equal = convolution_fit(2.0, 2.0, spec)?;
    let params = "alpha=2 beta=2 gamma=0 delta=0".to_string();
    records.push(CheckRecord::within("convolution_decay_rate", params.clone(), equal.rate, 2.0, 0.06));
    // the leading power for α = β is |a|^{2−γ−δ} · |a|^{−1/2}
    records.push(CheckRecord::within("convolution_prefactor_power", params, equal.power - 2.0, -0.5, 0.1));
    let unequal = convolution_fit(1.0, 2.0, spec)?;
    records.push(CheckRecord::within(
        "convolution_decay_rate",
        "alpha=1 beta=2 gamma=0 delta=0".into(),
        unequal.rate,
        1.0,
        0.05,
    ));
    let near = convolution_integral(2.0, 2.0, 0.0, 0.0, [1e-7, 0.0], spec)?;
    records.push(CheckRecord::within(
        "convolution_coincident_limit",
        "alpha=2 beta=2 |a|=1e-7".into(),
        near,
        PI / 8.0,
        1e-6 * PI / 8.0,
    ));
    let ratio6 = localized_overlap(2.0, [6.0, 0.0], spec)?.ratio();
    let ratio12 = localized_overlap(2.0, [12.0, 0.0], spec)?.ratio();
    records.push(CheckRecord::within("overlap_ratio", "m=2 |z|=6".into(), ratio6, 1.0, 0.15));
    records.push(CheckRecord::within("overlap_ratio", "m=2 |z|=12".into(), ratio12, 1.0, 0.15));
    records.push(CheckRecord {
        check: "overlap_ratio_improves".into(),
        parameters: "m=2 |z|=6->12".into(),
        measured: (ratio12 - 1.0).abs(),
        expected: 0.0,
        tolerance: (ratio6 - 1.0).abs(),
        pass: (ratio12 - 1.0).abs() < (ratio6 - 1.0).abs(),
    });
    let ratio_m4 = localized_overlap(4.0, [10.0, 0.0], spec)?.ratio();
    records.push(CheckRecord::within("overlap_ratio", "m=4 |z|=10".into(), ratio_m4, 1.0, 0.1));
    Ok(records)
}

/// Columns `check, parameters, measured, expected, tolerance, pass`.
pub fn write_report_csv<W: Write>(records: &[CheckRecord], mut out: W) -> Result<()> {
    writeln!(out, "check,parameters,measured,expected,tolerance,pass")?;
    for r in records {
        writeln!(
            out,
            "{},{},{:.12e},{:.12e},{:.3e},{}",
            r.check, r.parameters, r.measured, r.expected, r.tolerance, r.pass
        )?;
    }
    Ok(())
}
