//! Geodesic integration, exponential map and parallel transport.
//!
//! All integration is classical fourth-order Runge-Kutta with a fixed step
//! count, so a trajectory is a smooth function of its initial data and runs
//! are bit-reproducible.

use nalgebra::SVector;

use crate::chart::{Chart, Point, Vec3};
use crate::error::{ChartError, GeodesicError};

pub const MIN_STEPS: usize = 16;
pub const DEFAULT_EXP_STEPS: usize = 64;
const UNIT_SPEED_TOL: f64 = 1e-10;

/// One record of an integrated arc: arclength, point, velocity.
#[derive(Debug, Clone, Copy)]
pub struct ArcSample {
    pub s: f64,
    pub point: Point,
    pub velocity: Vec3,
}

/// An arclength-parametrized geodesic with optional parallel frame.
#[derive(Debug, Clone)]
pub struct GeodesicArc {
    samples: Vec<ArcSample>,
    base_index: usize,
    half_length: f64,
    frame: Option<Vec<Vec3>>,
}

impl GeodesicArc {
    pub fn samples(&self) -> &[ArcSample] {
        &self.samples
    }

    /// Sample at s = 0 (the arc's basepoint).
    pub fn base(&self) -> &ArcSample {
        &self.samples[self.base_index]
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn endpoint(&self) -> &ArcSample {
        self.samples.last().expect("arc has samples")
    }

    pub fn frame(&self) -> Option<&[Vec3]> {
        self.frame.as_deref()
    }

    pub fn with_frame(mut self, frame: Vec<Vec3>) -> Self {
        assert_eq!(frame.len(), self.samples.len());
        self.frame = Some(frame);
        self
    }

    /// Max deviation of |p'(s)|_g from 1 over the samples.
    pub fn unit_speed_defect(&self, chart: &dyn Chart) -> Result<f64, ChartError> {
        let mut d: f64 = 0.0;
        for s in &self.samples {
            d = d.max((chart.norm(&s.point, &s.velocity)? - 1.0).abs());
        }
        Ok(d)
    }

    /// Max norm of p'' + Gamma(p')(p') under centered re-differentiation of
    /// the stored samples.
    pub fn residual_by_redifferentiation(&self, chart: &dyn Chart) -> Result<f64, ChartError> {
        let mut worst: f64 = 0.0;
        for i in 1..self.samples.len().saturating_sub(1) {
            let (a, b, c) = (&self.samples[i - 1], &self.samples[i], &self.samples[i + 1]);
            let h = 0.5 * (c.s - a.s);
            let acc = (c.point - 2.0 * b.point + a.point) / (h * h);
            let gamma = chart.christoffel(&b.point)?;
            let res = acc + gamma.contract(&b.velocity, &b.velocity);
            worst = worst.max(res.abs().max());
        }
        Ok(worst)
    }
}

type State6 = SVector<f64, 6>;
type State9 = SVector<f64, 9>;

fn pack6(p: &Point, v: &Vec3) -> State6 {
    State6::from([p.x, p.y, p.z, v.x, v.y, v.z])
}

fn unpack6(s: &State6) -> (Point, Vec3) {
    (
        Point::new(s[0], s[1], s[2]),
        Vec3::new(s[3], s[4], s[5]),
    )
}

fn geodesic_rhs(chart: &dyn Chart, s: &State6) -> Result<State6, ChartError> {
    let (p, v) = unpack6(s);
    let gamma = chart.christoffel(&p)?;
    let acc = -gamma.contract(&v, &v);
    Ok(State6::from([v.x, v.y, v.z, acc.x, acc.y, acc.z]))
}

fn transport_rhs(chart: &dyn Chart, s: &State9) -> Result<State9, ChartError> {
    let p = Point::new(s[0], s[1], s[2]);
    let v = Vec3::new(s[3], s[4], s[5]);
    let w = Vec3::new(s[6], s[7], s[8]);
    let gamma = chart.christoffel(&p)?;
    let acc = -gamma.contract(&v, &v);
    let wdot = -gamma.contract(&v, &w);
    Ok(State9::from([
        v.x, v.y, v.z, acc.x, acc.y, acc.z, wdot.x, wdot.y, wdot.z,
    ]))
}

fn rk4_step<const N: usize>(
    y: &SVector<f64, N>,
    h: f64,
    rhs: &mut impl FnMut(&SVector<f64, N>) -> Result<SVector<f64, N>, ChartError>,
) -> Result<SVector<f64, N>, ChartError> {
    let k1 = rhs(y)?;
    let k2 = rhs(&(y + k1 * (0.5 * h)))?;
    let k3 = rhs(&(y + k2 * (0.5 * h)))?;
    let k4 = rhs(&(y + k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

fn left_chart(err: ChartError, s: f64) -> GeodesicError {
    match err {
        ChartError::OutsideBox(..) => GeodesicError::LeftChart { exit_s: s },
        other => GeodesicError::Chart(other),
    }
}

/// Endpoint (point, velocity) of the geodesic from `(p, v)` after arclength
/// `length`, without sample recording. `v` must be unit.
pub fn flow_geodesic(
    chart: &dyn Chart,
    p: &Point,
    v: &Vec3,
    length: f64,
    steps: usize,
) -> Result<(Point, Vec3), GeodesicError> {
    if length == 0.0 {
        return Ok((*p, *v));
    }
    let h = length / steps as f64;
    let mut state = pack6(p, v);
    let mut rhs = |y: &State6| geodesic_rhs(chart, y);
    for i in 0..steps {
        let s = i as f64 * h;
        state = rk4_step(&state, h, &mut rhs).map_err(|e| left_chart(e, s))?;
        let (q, _) = unpack6(&state);
        if !chart.bounds().contains(&q) {
            return Err(GeodesicError::LeftChart { exit_s: s + h });
        }
    }
    Ok(unpack6(&state))
}

/// Like `flow_geodesic`, additionally transporting `w` parallelly along the
/// trajectory.
pub fn flow_with_transport(
    chart: &dyn Chart,
    p: &Point,
    v: &Vec3,
    w: &Vec3,
    length: f64,
    steps: usize,
) -> Result<(Point, Vec3, Vec3), GeodesicError> {
    if length == 0.0 {
        return Ok((*p, *v, *w));
    }
    let h = length / steps as f64;
    let mut state = State9::from([p.x, p.y, p.z, v.x, v.y, v.z, w.x, w.y, w.z]);
    let mut rhs = |y: &State9| transport_rhs(chart, y);
    for i in 0..steps {
        let s = i as f64 * h;
        state = rk4_step(&state, h, &mut rhs).map_err(|e| left_chart(e, s))?;
        let q = Point::new(state[0], state[1], state[2]);
        if !chart.bounds().contains(&q) {
            return Err(GeodesicError::LeftChart { exit_s: s + h });
        }
    }
    Ok((
        Point::new(state[0], state[1], state[2]),
        Vec3::new(state[3], state[4], state[5]),
        Vec3::new(state[6], state[7], state[8]),
    ))
}

/// Integrate the geodesic from `(p, v)` over `[0, length]`, recording every
/// step. `v` must be unit within 1e-10 and `steps >= 16`.
pub fn integrate_geodesic(
    chart: &dyn Chart,
    p: &Point,
    v: &Vec3,
    length: f64,
    steps: usize,
) -> Result<GeodesicArc, GeodesicError> {
    if steps < MIN_STEPS {
        return Err(GeodesicError::TooFewSteps(steps));
    }
    let speed = chart.norm(p, v)?;
    if (speed - 1.0).abs() > UNIT_SPEED_TOL {
        return Err(GeodesicError::NotUnitSpeed(speed));
    }
    let h = length / steps as f64;
    let mut state = pack6(p, v);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(ArcSample {
        s: 0.0,
        point: *p,
        velocity: *v,
    });
    let mut rhs = |y: &State6| geodesic_rhs(chart, y);
    for i in 0..steps {
        let s = i as f64 * h;
        state = rk4_step(&state, h, &mut rhs).map_err(|e| left_chart(e, s))?;
        let (q, u) = unpack6(&state);
        if !chart.bounds().contains(&q) {
            return Err(GeodesicError::LeftChart { exit_s: s + h });
        }
        samples.push(ArcSample {
            s: s + h,
            point: q,
            velocity: u,
        });
    }
    Ok(GeodesicArc {
        samples,
        base_index: 0,
        half_length: length,
        frame: None,
    })
}

/// Symmetric arc through `p`: s ranges over [-eps, eps] with `steps` per side.
pub fn geodesic_through(
    chart: &dyn Chart,
    p: &Point,
    v: &Vec3,
    eps: f64,
    steps: usize,
) -> Result<GeodesicArc, GeodesicError> {
    let forward = integrate_geodesic(chart, p, v, eps, steps)?;
    let backward = integrate_geodesic(chart, p, &(-*v), eps, steps)?;
    let mut samples: Vec<ArcSample> = backward.samples[1..]
        .iter()
        .rev()
        .map(|s| ArcSample {
            s: -s.s,
            point: s.point,
            velocity: -s.velocity,
        })
        .collect();
    let base_index = samples.len();
    samples.extend_from_slice(&forward.samples);
    Ok(GeodesicArc {
        samples,
        base_index,
        half_length: eps,
        frame: None,
    })
}

/// Endpoint of the unit-speed geodesic from `p` in direction `v / |v|_g`
/// after arclength `|v|_g`; `exp_map(p, 0) = p` exactly.
pub fn exp_map(chart: &dyn Chart, p: &Point, v: &Vec3) -> Result<Point, GeodesicError> {
    exp_map_with_steps(chart, p, v, DEFAULT_EXP_STEPS)
}

pub fn exp_map_with_steps(
    chart: &dyn Chart,
    p: &Point,
    v: &Vec3,
    steps: usize,
) -> Result<Point, GeodesicError> {
    let norm = chart.norm(p, v)?;
    if norm == 0.0 {
        return Ok(*p);
    }
    let dir = v / norm;
    let (q, _) = flow_geodesic(chart, p, &dir, norm, steps)?;
    Ok(q)
}

/// Parallel field along `arc` with value `w0` at the arc's basepoint
/// (the s = 0 sample). Returned vectors align with `arc.samples()`.
pub fn parallel_transport(
    chart: &dyn Chart,
    arc: &GeodesicArc,
    w0: &Vec3,
) -> Result<Vec<Vec3>, GeodesicError> {
    let n = arc.samples.len();
    let mut out = vec![Vec3::zeros(); n];
    out[arc.base_index] = *w0;
    let base = arc.base();

    // forward sweep
    let mut state = State9::from([
        base.point.x,
        base.point.y,
        base.point.z,
        base.velocity.x,
        base.velocity.y,
        base.velocity.z,
        w0.x,
        w0.y,
        w0.z,
    ]);
    let mut rhs = |y: &State9| transport_rhs(chart, y);
    for i in arc.base_index..n - 1 {
        let h = arc.samples[i + 1].s - arc.samples[i].s;
        state = rk4_step(&state, h, &mut rhs).map_err(|e| left_chart(e, arc.samples[i].s))?;
        out[i + 1] = Vec3::new(state[6], state[7], state[8]);
    }

    // backward sweep: reversed curve, same parallelism
    let mut state = State9::from([
        base.point.x,
        base.point.y,
        base.point.z,
        -base.velocity.x,
        -base.velocity.y,
        -base.velocity.z,
        w0.x,
        w0.y,
        w0.z,
    ]);
    for i in (1..=arc.base_index).rev() {
        let h = arc.samples[i].s - arc.samples[i - 1].s;
        state = rk4_step(&state, h, &mut rhs).map_err(|e| left_chart(e, arc.samples[i].s))?;
        out[i - 1] = Vec3::new(state[6], state[7], state[8]);
    }
    Ok(out)
}
