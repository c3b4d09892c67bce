//! Structure descriptions: a periodic transverse line `[0, period_x]` carrying
//! material regions whose centre and width vary with `z`.
//!
//! Every cross-section is piecewise constant in `x`, so a [`PermittivitySlice`]
//! is an exact list of intervals rather than a sampled grid.

use std::f64::consts::PI;

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{c, C64};

/// Upper bound on the truncation order accepted from documents.
pub const MAX_TRUNCATION_ORDER: usize = 256;

const EXTENT_SAMPLES: usize = 256;
const EXTENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    TE,
    TM,
}

/// A scalar function of `z` over the structure span.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// Straight line from `start` at `z_min` to `end` at `z_max`.
    Linear {
        start: f64,
        end: f64,
    },
    /// `start + (end - start) * (exp(rate*t) - 1) / (exp(rate) - 1)` with
    /// `t = (z - z_min) / (z_max - z_min)`; `rate = 0` is the linear limit.
    Exponential {
        start: f64,
        end: f64,
        rate: f64,
    },
    /// `mean + amplitude * sin(2*pi*(z - z_min)/period + phase)`.
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        period: f64,
        phase: f64,
    },
    /// Linear interpolation between `(z, value)` breakpoints; constant beyond
    /// the first and last breakpoint.
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
}

impl Profile {
    pub fn kind(&self) -> &'static str {
        match self {
            Profile::Constant { .. } => "constant",
            Profile::Linear { .. } => "linear",
            Profile::Exponential { .. } => "exponential",
            Profile::Sinusoidal { .. } => "sinusoidal",
            Profile::PiecewiseLinear { .. } => "piecewise_linear",
        }
    }

    pub fn eval(&self, z: f64, z_min: f64, z_max: f64) -> f64 {
        let t = (z - z_min) / (z_max - z_min);
        match *self {
            Profile::Constant { value } => value,
            Profile::Linear { start, end } => start + (end - start) * t,
            Profile::Exponential { start, end, rate } => {
                if rate.abs() < 1e-12 {
                    start + (end - start) * t
                } else {
                    start + (end - start) * (rate * t).exp_m1() / rate.exp_m1()
                }
            }
            Profile::Sinusoidal {
                mean,
                amplitude,
                period,
                phase,
            } => mean + amplitude * (2.0 * PI * (z - z_min) / period + phase).sin(),
            Profile::PiecewiseLinear { ref points } => piecewise_eval(points, z),
        }
    }

    /// Positions inside `[z0, z1]` where the profile can attain an interior
    /// extremum or change slope.
    fn critical_points(&self, z0: f64, z1: f64, z_min: f64) -> Vec<f64> {
        match *self {
            Profile::PiecewiseLinear { ref points } => points
                .iter()
                .map(|p| p.0)
                .filter(|z| *z > z0 && *z < z1)
                .collect(),
            Profile::Sinusoidal { period, phase, .. } => {
                // argument = pi/2 + k*pi
                let arg = |z: f64| 2.0 * PI * (z - z_min) / period + phase;
                let k_lo = ((arg(z0) - PI / 2.0) / PI).ceil() as i64;
                let k_hi = ((arg(z1) - PI / 2.0) / PI).floor() as i64;
                (k_lo..=k_hi)
                    .map(|k| z_min + (PI / 2.0 + k as f64 * PI - phase) * period / (2.0 * PI))
                    .filter(|z| *z >= z0 && *z <= z1)
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Exact minimum and maximum over `[z_min, z_max]`.
    pub fn range(&self, z_min: f64, z_max: f64) -> (f64, f64) {
        let mut pts = vec![z_min, z_max];
        pts.extend(self.critical_points(z_min, z_max, z_min));
        pts.iter()
            .map(|&z| self.eval(z, z_min, z_max))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }

    fn params_finite(&self) -> bool {
        match *self {
            Profile::Constant { value } => value.is_finite(),
            Profile::Linear { start, end } => start.is_finite() && end.is_finite(),
            Profile::Exponential { start, end, rate } => {
                start.is_finite() && end.is_finite() && rate.is_finite() && rate.abs() < 700.0
            }
            Profile::Sinusoidal {
                mean,
                amplitude,
                period,
                phase,
            } => [mean, amplitude, period, phase].iter().all(|v| v.is_finite()),
            Profile::PiecewiseLinear { ref points } => {
                points.iter().all(|(z, v)| z.is_finite() && v.is_finite())
            }
        }
    }
}

fn piecewise_eval(points: &[(f64, f64)], z: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if z <= first.0 {
        return first.1;
    }
    if z >= last.0 {
        return last.1;
    }
    // breakpoints are strictly increasing
    let idx = points.partition_point(|p| p.0 <= z);
    let (z0, v0) = points[idx - 1];
    let (z1, v1) = points[idx];
    v0 + (v1 - v0) * (z - z0) / (z1 - z0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialRegion {
    pub eps: C64,
    pub center_x: Profile,
    pub width: Profile,
}

impl MaterialRegion {
    /// `(x_start, x_end)` of the region at `z`.
    pub fn extent_at(&self, z: f64, z_min: f64, z_max: f64) -> (f64, f64) {
        let cx = self.center_x.eval(z, z_min, z_max);
        let w = self.width.eval(z, z_min, z_max);
        (cx - 0.5 * w, cx + 0.5 * w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureSpec {
    pub wavelength_um: f64,
    pub polarization: Polarization,
    pub period_x_um: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// `M_t`; `2 M_t + 1` Fourier harmonics are retained.
    pub truncation_order: usize,
    pub background_eps: C64,
    /// Painted in order; later regions overwrite earlier ones.
    pub regions: Vec<MaterialRegion>,
}

impl StructureSpec {
    /// Vacuum wavenumber in rad/um.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength_um
    }

    pub fn harmonics(&self) -> usize {
        2 * self.truncation_order + 1
    }

    pub fn length(&self) -> f64 {
        self.z_max - self.z_min
    }

    pub fn validate(&self) -> Result<()> {
        let sem = |m: String| Err(Error::Semantic(m));
        if !(self.wavelength_um.is_finite() && self.wavelength_um > 0.0) {
            return sem(format!("wavelength_um must be positive, got {}", self.wavelength_um));
        }
        if !(self.period_x_um.is_finite() && self.period_x_um > 0.0) {
            return sem(format!("period_x_um must be positive, got {}", self.period_x_um));
        }
        if !(self.z_min.is_finite() && self.z_max.is_finite() && self.z_max > self.z_min) {
            return sem(format!(
                "z_range_um must satisfy min < max, got [{}, {}]",
                self.z_min, self.z_max
            ));
        }
        if self.truncation_order > MAX_TRUNCATION_ORDER {
            return sem(format!(
                "truncation_order {} exceeds the supported maximum {MAX_TRUNCATION_ORDER}",
                self.truncation_order
            ));
        }
        check_eps(self.background_eps, "background_eps")?;
        for (i, r) in self.regions.iter().enumerate() {
            check_eps(r.eps, &format!("regions[{i}].eps"))?;
            for (label, p) in [("center_x", &r.center_x), ("profile", &r.width)] {
                if !p.params_finite() {
                    return sem(format!("regions[{i}].{label} has non-finite parameters"));
                }
                match p {
                    Profile::Sinusoidal { period, .. } if *period <= 0.0 => {
                        return sem(format!("regions[{i}].{label}: sinusoidal period must be positive"));
                    }
                    Profile::PiecewiseLinear { points } => {
                        if points.is_empty() {
                            return sem(format!("regions[{i}].{label}: piecewise_linear needs at least one point"));
                        }
                        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                            return sem(format!(
                                "regions[{i}].{label}: piecewise_linear breakpoints must be strictly increasing in z"
                            ));
                        }
                    }
                    _ => {}
                }
            }
            let (w_lo, _) = r.width.range(self.z_min, self.z_max);
            if w_lo < 0.0 {
                return sem(format!("regions[{i}] has negative width {w_lo} inside the z range"));
            }
            self.check_extent(i, r)?;
        }
        Ok(())
    }

    fn check_extent(&self, i: usize, r: &MaterialRegion) -> Result<()> {
        let (z0, z1) = (self.z_min, self.z_max);
        let mut zs: Vec<f64> = (0..=EXTENT_SAMPLES)
            .map(|k| z0 + (z1 - z0) * k as f64 / EXTENT_SAMPLES as f64)
            .collect();
        zs.extend(r.width.critical_points(z0, z1, z0));
        zs.extend(r.center_x.critical_points(z0, z1, z0));
        let tol = EXTENT_TOL * self.period_x_um;
        for z in zs {
            let (a, b) = r.extent_at(z, z0, z1);
            if a < -tol || b > self.period_x_um + tol {
                return Err(Error::Semantic(format!(
                    "regions[{i}] spans [{a}, {b}] at z = {z}, outside the domain [0, {}]",
                    self.period_x_um
                )));
            }
        }
        Ok(())
    }
}

fn check_eps(eps: C64, label: &str) -> Result<()> {
    if !(eps.re.is_finite() && eps.im.is_finite()) {
        return Err(Error::Semantic(format!("{label} is not finite")));
    }
    if eps.im < 0.0 {
        return Err(Error::Semantic(format!(
            "{label} has negative imaginary part {}; only passive media are supported",
            eps.im
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub x_start: f64,
    pub x_end: f64,
    pub eps: C64,
}

/// Piecewise-constant permittivity of one cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivitySlice {
    pub z: f64,
    pub period: f64,
    /// Disjoint, sorted, covering `[0, period]`.
    pub intervals: Vec<Interval>,
}

impl PermittivitySlice {
    pub fn uniform(z: f64, period: f64, eps: C64) -> Self {
        PermittivitySlice {
            z,
            period,
            intervals: vec![Interval {
                x_start: 0.0,
                x_end: period,
                eps,
            }],
        }
    }

    /// Permittivity at `x`, wrapped into the period.
    pub fn eps_at(&self, x: f64) -> C64 {
        let x = x.rem_euclid(self.period);
        let idx = self
            .intervals
            .partition_point(|iv| iv.x_end <= x)
            .min(self.intervals.len() - 1);
        self.intervals[idx].eps
    }
}

pub fn slice_at(spec: &StructureSpec, z: f64) -> Result<PermittivitySlice> {
    if !(z >= spec.z_min && z <= spec.z_max) {
        return Err(Error::OutOfRange {
            z,
            z_min: spec.z_min,
            z_max: spec.z_max,
        });
    }
    let period = spec.period_x_um;
    let mut intervals = vec![Interval {
        x_start: 0.0,
        x_end: period,
        eps: spec.background_eps,
    }];
    for region in &spec.regions {
        let (a, b) = region.extent_at(z, spec.z_min, spec.z_max);
        let (a, b) = (a.max(0.0), b.min(period));
        if b <= a {
            continue;
        }
        let mut next = Vec::with_capacity(intervals.len() + 2);
        for iv in intervals {
            if iv.x_end <= a || iv.x_start >= b {
                next.push(iv);
                continue;
            }
            if iv.x_start < a {
                next.push(Interval { x_end: a, ..iv });
            }
            if iv.x_end > b {
                next.push(Interval { x_start: b, ..iv });
            }
        }
        next.push(Interval {
            x_start: a,
            x_end: b,
            eps: region.eps,
        });
        next.sort_by(|p, q| p.x_start.total_cmp(&q.x_start));
        intervals = next;
    }
    Ok(PermittivitySlice {
        z,
        period,
        intervals,
    })
}

// ---------------------------------------------------------------------------
// document parsing

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStructure {
    wavelength_um: f64,
    polarization: String,
    period_x_um: f64,
    z_range_um: [f64; 2],
    truncation_order: i64,
    #[serde(default = "vacuum")]
    background_eps: [f64; 2],
    regions: Vec<RawRegion>,
}

fn vacuum() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    eps: [f64; 2],
    center_x: RawScalar,
    profile: RawProfile,
    #[serde(default)]
    #[allow(dead_code)]
    name: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawScalar {
    Number(f64),
    Profile(RawProfile),
}

#[derive(Deserialize)]
struct RawProfile {
    kind: String,
    #[serde(flatten)]
    params: Map<String, Value>,
}

/// Parse and validate a structure document (JSON).
pub fn parse_structure(text: &str) -> Result<StructureSpec> {
    let raw: RawStructure = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let polarization = match raw.polarization.as_str() {
        "TE" | "te" => Polarization::TE,
        "TM" | "tm" => Polarization::TM,
        other => {
            return Err(Error::Semantic(format!(
                "unknown polarization {other:?} (expected TE or TM)"
            )))
        }
    };
    if raw.truncation_order < 0 {
        return Err(Error::Semantic(format!(
            "truncation_order must be >= 0, got {}",
            raw.truncation_order
        )));
    }
    let regions = raw
        .regions
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let center_x = match r.center_x {
                RawScalar::Number(v) => Profile::Constant { value: v },
                RawScalar::Profile(p) => convert_profile(p, &format!("regions[{i}].center_x"))?,
            };
            Ok(MaterialRegion {
                eps: c(r.eps[0], r.eps[1]),
                center_x,
                width: convert_profile(r.profile, &format!("regions[{i}].profile"))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let spec = StructureSpec {
        wavelength_um: raw.wavelength_um,
        polarization,
        period_x_um: raw.period_x_um,
        z_min: raw.z_range_um[0],
        z_max: raw.z_range_um[1],
        truncation_order: usize::try_from(raw.truncation_order).unwrap_or(usize::MAX),
        background_eps: c(raw.background_eps[0], raw.background_eps[1]),
        regions,
    };
    spec.validate()?;
    Ok(spec)
}

fn convert_profile(p: RawProfile, label: &str) -> Result<Profile> {
    let num = |key: &str| -> Result<f64> {
        match p.params.get(key) {
            Some(v) => v.as_f64().ok_or_else(|| {
                Error::Semantic(format!("{label}: parameter {key:?} must be a number"))
            }),
            None => Err(Error::Semantic(format!(
                "{label}: {} profile requires parameter {key:?}",
                p.kind
            ))),
        }
    };
    let opt_num = |key: &str, default: f64| -> Result<f64> {
        if p.params.contains_key(key) {
            num(key)
        } else {
            Ok(default)
        }
    };
    let allowed: &[&str] = match p.kind.as_str() {
        "constant" => &["value"],
        "linear" => &["start", "end"],
        "exponential" => &["start", "end", "rate"],
        "sinusoidal" => &["mean", "amplitude", "period_um", "phase"],
        "piecewise_linear" => &["points"],
        other => {
            return Err(Error::Semantic(format!(
                "{label}: unknown profile kind {other:?}"
            )))
        }
    };
    if let Some(extra) = p.params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Semantic(format!(
            "{label}: unexpected parameter {extra:?} for {} profile",
            p.kind
        )));
    }
    let profile = match p.kind.as_str() {
        "constant" => Profile::Constant { value: num("value")? },
        "linear" => Profile::Linear {
            start: num("start")?,
            end: num("end")?,
        },
        "exponential" => Profile::Exponential {
            start: num("start")?,
            end: num("end")?,
            rate: num("rate")?,
        },
        "sinusoidal" => Profile::Sinusoidal {
            mean: num("mean")?,
            amplitude: num("amplitude")?,
            period: num("period_um")?,
            phase: opt_num("phase", 0.0)?,
        },
        "piecewise_linear" => {
            let bad = || {
                Error::Semantic(format!(
                    "{label}: points must be a list of [z, value] pairs"
                ))
            };
            let arr = p.params.get("points").and_then(Value::as_array).ok_or_else(bad)?;
            let points = arr
                .iter()
                .map(|pt| {
                    let pair = pt.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
                    match (pair[0].as_f64(), pair[1].as_f64()) {
                        (Some(z), Some(v)) => Ok((z, v)),
                        _ => Err(bad()),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Profile::PiecewiseLinear { points }
        }
        _ => unreachable!(),
    };
    Ok(profile)
}
