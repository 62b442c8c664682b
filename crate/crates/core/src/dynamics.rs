//! Horizontal frame, rolling integrator and sampled horizontal paths.
//!
//! Rolling in the unit direction `cos(theta) X1 + sin(theta) X2` moves the
//! contact point on the unit sphere along a great circle at unit speed and the
//! contact point `r v` on the second sphere along its great circle at unit
//! speed as well, with both markers parallel transported:
//!
//! ```text
//! X1 = (a,      b / r,        -u, -v / r)
//! X2 = (u x a, -(v x b) / r,   0,  0    )
//! ```
//!
//! Tangent tuples are ordered `(du, dv, da, db)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotate, AxisAngle, RotationChain, UnitVec3, Vec3};
use crate::state::{act, transport_to_base, RawState};

/// Radius of the second sphere; the first has radius one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RadiusRatio(f64);

impl RadiusRatio {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_finite() && r > 0.0 {
            Ok(Self(r))
        } else {
            Err(Error::InvalidRadius(r))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RadiusRatio {
    type Error = Error;

    fn try_from(r: f64) -> Result<Self> {
        Self::new(r)
    }
}

impl From<RadiusRatio> for f64 {
    fn from(r: RadiusRatio) -> f64 {
        r.0
    }
}

/// Which vector fields drive the integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldConvention {
    /// `v` moves by `b / r` under the first field and by `-(v x b) / r` under
    /// the second. Preserves `v . b = 0` and gives
    /// the contact point `r v` unit speed.
    #[default]
    ArcLength,
    /// The fields without the `1/r` on the `v` rows. Agrees with
    /// `ArcLength` at `r = 1`; for other radii `v . b` drifts at rate
    /// `1 - 1/r` and the integrator's projection masks it.
    Unscaled,
}

/// One piece of a piecewise-constant control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub theta: f64,
}

/// Piecewise-constant heading `theta`, measured from `X1` towards `X2`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    segments: Vec<Segment>,
}

impl ControlSchedule {
    pub fn new(pieces: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let segments: Vec<Segment> = pieces
            .into_iter()
            .map(|(duration, theta)| Segment { duration, theta })
            .collect();
        for (k, s) in segments.iter().enumerate() {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(Error::InvalidSchedule(format!(
                    "segment {k} has non-positive duration {}",
                    s.duration
                )));
            }
            if !s.theta.is_finite() {
                return Err(Error::InvalidSchedule(format!("segment {k} has non-finite heading")));
            }
        }
        Ok(Self { segments })
    }

    pub fn constant(duration: f64, theta: f64) -> Result<Self> {
        Self::new([(duration, theta)])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Concatenation, `self` first.
    pub fn followed_by(&self, other: &Self) -> Self {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&other.segments);
        Self { segments }
    }
}

/// A tangent tuple `(du, dv, da, db)`.
pub type Tangent = [Vec3; 4];

fn frame_fields(u: &Vec3, v: &Vec3, a: &Vec3, b: &Vec3, r: f64, conv: FieldConvention) -> (Tangent, Tangent) {
    let scale = match conv {
        FieldConvention::ArcLength => 1.0 / r,
        FieldConvention::Unscaled => 1.0,
    };
    let x1 = [*a, b * scale, -u, -v / r];
    let x2 = [u.cross(a), -v.cross(b) * scale, Vec3::zeros(), Vec3::zeros()];
    (x1, x2)
}

/// The horizontal frame `(X1, X2)` at `s`.
pub fn frame(s: &RawState, r: RadiusRatio) -> (Tangent, Tangent) {
    frame_with(s, r, FieldConvention::ArcLength)
}

pub fn frame_with(s: &RawState, r: RadiusRatio, conv: FieldConvention) -> (Tangent, Tangent) {
    frame_fields(s.u(), s.v(), s.a(), s.b(), r.get(), conv)
}

/// Unprojected 12-vector used inside integrator stages.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stage {
    pub u: Vec3,
    pub v: Vec3,
    pub a: Vec3,
    pub b: Vec3,
}

impl Stage {
    pub(crate) fn from_state(s: &RawState) -> Self {
        Self {
            u: *s.u(),
            v: *s.v(),
            a: *s.a(),
            b: *s.b(),
        }
    }

    fn axpy(&self, h: f64, k: &Tangent) -> Self {
        Self {
            u: self.u + k[0] * h,
            v: self.v + k[1] * h,
            a: self.a + k[2] * h,
            b: self.b + k[3] * h,
        }
    }

    pub(crate) fn fields(&self, r: f64, conv: FieldConvention) -> (Tangent, Tangent) {
        frame_fields(&self.u, &self.v, &self.a, &self.b, r, conv)
    }
}

/// One classical RK4 step of size `h` (may be negative) followed by
/// projection back onto the invariant set.
///
/// `heading` returns `(cos theta, sin theta)` given the stage time offset
/// and the stage point.
pub(crate) fn rk4_step<F>(
    s: &RawState,
    h: f64,
    r: f64,
    conv: FieldConvention,
    mut heading: F,
) -> Result<RawState>
where
    F: FnMut(f64, &Stage) -> Result<(f64, f64)>,
{
    let mut velocity = |dt: f64, x: &Stage| -> Result<Tangent> {
        let (c, sn) = heading(dt, x)?;
        let (x1, x2) = x.fields(r, conv);
        Ok([
            x1[0] * c + x2[0] * sn,
            x1[1] * c + x2[1] * sn,
            x1[2] * c + x2[2] * sn,
            x1[3] * c + x2[3] * sn,
        ])
    };
    let x0 = Stage::from_state(s);
    let k1 = velocity(0.0, &x0)?;
    let k2 = velocity(0.5 * h, &x0.axpy(0.5 * h, &k1))?;
    let k3 = velocity(0.5 * h, &x0.axpy(0.5 * h, &k2))?;
    let k4 = velocity(h, &x0.axpy(h, &k3))?;
    let combine = |i: usize| (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
    RawState::project(
        x0.u + combine(0),
        x0.v + combine(1),
        x0.a + combine(2),
        x0.b + combine(3),
    )
}

/// How the heading between samples is reconstructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Steering {
    /// Heading constant between consecutive samples (control schedules).
    PiecewiseConstant,
    /// Heading varies smoothly; cubic interpolation through neighbouring
    /// samples (feedback-traced curves).
    Smooth,
}

/// One retained point of a path. `theta` is the heading in force on the
/// interval leaving the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: RawState,
    pub theta: f64,
}

/// A unit-speed horizontal path sampled at every integrator step.
#[derive(Debug, Clone)]
pub struct HorizontalPath {
    radius: RadiusRatio,
    samples: Vec<Sample>,
    controls: Option<ControlSchedule>,
    steering: Steering,
    step: f64,
    convention: FieldConvention,
    /// Break times of a bent path; the path is left-continuous at each.
    breaks: Vec<f64>,
}

impl HorizontalPath {
    pub(crate) fn from_parts(
        radius: RadiusRatio,
        samples: Vec<Sample>,
        controls: Option<ControlSchedule>,
        steering: Steering,
        step: f64,
        convention: FieldConvention,
    ) -> Self {
        Self {
            radius,
            samples,
            controls,
            steering,
            step,
            convention,
            breaks: Vec::new(),
        }
    }

    pub(crate) fn with_samples_and_breaks(&self, samples: Vec<Sample>, breaks: Vec<f64>) -> Self {
        Self {
            samples,
            breaks,
            controls: self.controls.clone(),
            ..*self
        }
    }

    pub fn radius(&self) -> RadiusRatio {
        self.radius
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn controls(&self) -> Option<&ControlSchedule> {
        self.controls.as_ref()
    }

    pub fn steering(&self) -> Steering {
        self.steering
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn convention(&self) -> FieldConvention {
        self.convention
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn start(&self) -> &RawState {
        &self.samples[0].state
    }

    pub fn end(&self) -> &RawState {
        &self.samples[self.samples.len() - 1].state
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// Largest invariant violation over all samples.
    pub fn max_invariant_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.state.invariant_defect())
            .fold(0.0, f64::max)
    }

    /// Index of the break interval containing `t`: 0 for `t <= t_1`, `j` for
    /// `t_j < t <= t_{j+1}`.
    fn piece_of(&self, t: f64) -> usize {
        self.breaks.iter().take_while(|&&b| b < t).count()
    }

    /// Heading at time `t` between samples, as used for re-integration.
    pub fn theta_at(&self, t: f64) -> f64 {
        let k = self.left_index(t);
        match self.steering {
            Steering::PiecewiseConstant => self.samples[k].theta,
            Steering::Smooth => self.interpolate_theta(k, t),
        }
    }

    /// Largest `k` with `samples[k].t <= t` (clamped to the range).
    fn left_index(&self, t: f64) -> usize {
        self.samples.partition_point(|s| s.t <= t).saturating_sub(1)
    }

    fn interpolate_theta(&self, k: usize, t: f64) -> f64 {
        let n = self.samples.len();
        if n == 1 {
            return self.samples[0].theta;
        }
        let lo = k.saturating_sub(1).min(n.saturating_sub(4));
        let hi = (lo + 4).min(n);
        let anchor = self.samples[k].theta;
        let mut value = 0.0;
        for i in lo..hi {
            let ti = self.samples[i].t;
            let theta_i = anchor + crate::sampling::wrap_angle(self.samples[i].theta - anchor);
            let weight: f64 = (lo..hi)
                .filter(|&j| j != i)
                .map(|j| {
                    let tj = self.samples[j].t;
                    (t - tj) / (ti - tj)
                })
                .product();
            value += weight * theta_i;
        }
        value
    }

    /// The state at an arbitrary time, re-integrated from the nearest
    /// retained sample in the same break interval.
    pub fn state_at(&self, t: f64) -> Result<RawState> {
        let end = self.end_time();
        if !(t >= 0.0 && t <= end) {
            return Err(Error::TimeOutOfRange { time: t, end });
        }
        let piece = self.piece_of(t);
        let k = self.left_index(t);
        if self.samples[k].t == t {
            return Ok(self.samples[k].state);
        }
        // candidates: k (left) and k + 1 (right); the left one is only
        // admissible when no break lies in (t_k, t)
        let right = k + 1;
        let left_ok = self.piece_of(self.samples[k].t) == piece;
        let right_ok = right < self.samples.len() && self.piece_of(self.samples[right].t) == piece;
        let from = match (left_ok, right_ok) {
            (true, true) => {
                if t - self.samples[k].t <= self.samples[right].t - t {
                    k
                } else {
                    right
                }
            }
            (true, false) => k,
            (false, true) => right,
            (false, false) => unreachable!("every break interval holds a sample"),
        };
        let origin = &self.samples[from];
        let dt = t - origin.t;
        let theta_const = match self.steering {
            Steering::PiecewiseConstant => Some(self.samples[k].theta),
            Steering::Smooth => None,
        };
        let r = self.radius.get();
        rk4_step(&origin.state, dt, r, self.convention, |offset, _| {
            let theta = theta_const.unwrap_or_else(|| self.interpolate_theta(k, origin.t + offset));
            Ok((theta.cos(), theta.sin()))
        })
    }

    /// Applies the symmetry action to every sample.
    pub fn act(&self, g1: &RotationChain, g2: &RotationChain) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                state: act(g1, g2, &s.state),
                ..*s
            })
            .collect();
        self.with_samples_and_breaks(samples, self.breaks.clone())
    }

    /// The copy of this path moved by the symmetry action so that its state
    /// at time `at` is the base tuple.
    pub fn transported_to_base(&self, at: f64) -> Result<Self> {
        let s = self.state_at(at)?;
        let (g1, g2) = transport_to_base(&s);
        Ok(self.act(&g1, &g2))
    }

    /// Restriction to `[0, until]`; `until` becomes a sample if it is not one.
    pub fn truncated(&self, until: f64) -> Result<Self> {
        let last = self.state_at(until)?;
        let theta = self.theta_at(until);
        let mut samples: Vec<Sample> = self.samples.iter().copied().take_while(|s| s.t < until).collect();
        samples.push(Sample { t: until, state: last, theta });
        let breaks = self.breaks.iter().copied().filter(|&b| b < until).collect();
        Ok(self.with_samples_and_breaks(samples, breaks))
    }
}

/// Integrates the rolling system under a control schedule.
pub fn roll(s0: &RawState, r: RadiusRatio, controls: &ControlSchedule, step: f64) -> Result<HorizontalPath> {
    roll_with(s0, r, controls, step, FieldConvention::ArcLength)
}

pub fn roll_with(
    s0: &RawState,
    r: RadiusRatio,
    controls: &ControlSchedule,
    step: f64,
    convention: FieldConvention,
) -> Result<HorizontalPath> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidStep(step));
    }
    let first_theta = controls.segments().first().map_or(0.0, |s| s.theta);
    let mut samples = vec![Sample {
        t: 0.0,
        state: *s0,
        theta: first_theta,
    }];
    let mut start = 0.0;
    let mut state = *s0;
    for seg in controls.segments() {
        let n = ((seg.duration / step) - 1e-9).ceil().max(1.0) as usize;
        let h = seg.duration / n as f64;
        let heading = (seg.theta.cos(), seg.theta.sin());
        for m in 1..=n {
            state = rk4_step(&state, h, r.get(), convention, |_, _| Ok(heading))?;
            let t = if m == n { start + seg.duration } else { start + m as f64 * h };
            samples.push(Sample {
                t,
                state,
                theta: seg.theta,
            });
        }
        start += seg.duration;
    }
    Ok(HorizontalPath::from_parts(
        r,
        samples,
        Some(controls.clone()),
        Steering::PiecewiseConstant,
        step,
        convention,
    ))
}

/// Closed-form constant-heading roll, used as the integrator oracle.
pub fn great_circle_roll(s0: &RawState, r: RadiusRatio, theta: f64, t: f64) -> RawState {
    let (u, v, a, b) = (s0.u(), s0.v(), s0.a(), s0.b());
    let (sn, c) = theta.sin_cos();
    let dir1 = a * c + u.cross(a) * sn;
    let dir2 = b * c - v.cross(b) * sn;
    let turn1 = AxisAngle {
        axis: UnitVec3::new_unchecked(u.cross(&dir1)),
        angle: t,
    };
    let turn2 = AxisAngle {
        axis: UnitVec3::new_unchecked(v.cross(&dir2)),
        angle: t / r.get(),
    };
    let rot = |q: &AxisAngle, x: &Vec3| UnitVec3::new_unchecked(rotate(q, x));
    RawState::from_units(rot(&turn1, u), rot(&turn2, v), rot(&turn1, a), rot(&turn2, b))
}

/// Length of a unit-speed path, i.e. its final time.
pub fn arc_length(p: &HorizontalPath) -> f64 {
    p.end_time()
}
