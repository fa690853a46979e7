//! Geometric multipath synthesis.
//!
//! A scene is a receiver position plus planar reflecting facets. Paths are
//! the line-of-sight ray and one specular bounce per facet, found with image
//! sources. The transmitter is an ideal omni whose radiated polarization
//! follows its (possibly tilted) antenna axis.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::waveform::TimingPlan;
use crate::SPEED_OF_LIGHT;

/// Planar reflector. Corners are given in order around the polygon.
///
/// The bounce maps an incident `(V, H)` Jones vector through
/// `[[gamma_v, cross], [cross, gamma_h]]`. Requiring
/// `max(|gamma_v|, |gamma_h|) + |cross| <= 1` keeps the map contractive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Facet {
    pub corners: Vec<[f64; 3]>,
    pub gamma_v: Complex64,
    pub gamma_h: Complex64,
    #[serde(default)]
    pub cross_coupling: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default)]
    pub reflectors: Vec<Facet>,
    pub rx_position: [f64; 3],
    /// Rotation of the array frame about +z relative to the world frame
    /// (world x = east, y = north), radians.
    #[serde(default)]
    pub rx_mounting_rotation: f64,
}

/// Facet with its plane and in-plane polygon precomputed.
struct FacetPlane {
    origin: Vector3<f64>,
    normal: Vector3<f64>,
    u: Vector3<f64>,
    v: Vector3<f64>,
    polygon: Vec<(f64, f64)>,
}

impl FacetPlane {
    fn new(index: usize, facet: &Facet) -> Result<Self> {
        let degenerate = |reason: &str| Error::DegenerateFacet {
            index,
            reason: reason.to_string(),
        };
        if facet.corners.len() < 3 {
            return Err(degenerate("needs at least three corners"));
        }
        let pts: Vec<Vector3<f64>> = facet.corners.iter().map(|c| Vector3::new(c[0], c[1], c[2])).collect();
        if pts.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(degenerate("non-finite corner"));
        }
        // Newell's method: |n| is twice the polygon area.
        let mut n = Vector3::zeros();
        for i in 0..pts.len() {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            n += Vector3::new(
                (a.y - b.y) * (a.z + b.z),
                (a.z - b.z) * (a.x + b.x),
                (a.x - b.x) * (a.y + b.y),
            );
        }
        let extent = pts.iter().map(|p| (p - pts[0]).norm()).fold(0.0, f64::max);
        let area = n.norm() / 2.0;
        if !(area > 1e-12 * extent.max(1.0).powi(2)) {
            return Err(degenerate("zero area"));
        }
        let normal = n / n.norm();
        let origin = pts[0];
        if pts
            .iter()
            .any(|p| (p - origin).dot(&normal).abs() > 1e-9 * extent.max(1.0))
        {
            return Err(degenerate("corners are not coplanar"));
        }
        for (name, g) in [("gamma_v", facet.gamma_v), ("gamma_h", facet.gamma_h)] {
            if !(g.norm() + facet.cross_coupling.norm() <= 1.0) {
                return Err(degenerate(&format!("|{name}| + |cross_coupling| exceeds 1")));
            }
        }
        let u = (pts[1] - origin).normalize();
        let v = normal.cross(&u);
        let polygon = pts
            .iter()
            .map(|p| ((p - origin).dot(&u), (p - origin).dot(&v)))
            .collect();
        Ok(FacetPlane {
            origin,
            normal,
            u,
            v,
            polygon,
        })
    }

    fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        (p - self.origin).dot(&self.normal)
    }

    fn contains(&self, p: &Vector3<f64>) -> bool {
        let x = (p - self.origin).dot(&self.u);
        let y = (p - self.origin).dot(&self.v);
        let poly = &self.polygon;
        let mut inside = false;
        let mut j = poly.len() - 1;
        for i in 0..poly.len() {
            let (xi, yi) = poly[i];
            let (xj, yj) = poly[j];
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

impl Scene {
    pub fn free_space(rx_position: [f64; 3]) -> Self {
        Scene {
            reflectors: Vec::new(),
            rx_position,
            rx_mounting_rotation: 0.0,
        }
    }

    pub fn rx(&self) -> Vector3<f64> {
        Vector3::from(self.rx_position)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rx_position.iter().all(|x| x.is_finite()) || !self.rx_mounting_rotation.is_finite() {
            return Err(Error::param("scene.rx_position", "must be finite"));
        }
        for (i, f) in self.reflectors.iter().enumerate() {
            FacetPlane::new(i, f)?;
        }
        Ok(())
    }

    /// Rotates a world-frame vector into the array frame.
    pub fn world_to_array(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let (s, c) = (-self.rx_mounting_rotation).sin_cos();
        Vector3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
    }

    pub fn array_to_world(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let (s, c) = self.rx_mounting_rotation.sin_cos();
        Vector3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
    }
}

/// Transmitter position and antenna axis (unit vector, +z when level).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TxPose {
    pub position: [f64; 3],
    pub axis: [f64; 3],
}

impl TxPose {
    pub fn level(position: Vector3<f64>) -> Self {
        TxPose {
            position: position.into(),
            axis: [0.0, 0.0, 1.0],
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    pub fn axis(&self) -> Vector3<f64> {
        Vector3::from(self.axis)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathComponent {
    /// Propagation delay to the array center, seconds.
    pub delay: f64,
    /// Field at the array center in the local (V, H) basis, excluding the
    /// receive pattern.
    pub jones_gain: [Complex64; 2],
    /// World-frame unit vector from the receiver toward the (image) source.
    pub arrival_direction: Vector3<f64>,
    pub bounce_count: u32,
    pub facet: Option<usize>,
}

impl PathComponent {
    pub fn amplitude(&self) -> f64 {
        (self.jones_gain[0].norm_sqr() + self.jones_gain[1].norm_sqr()).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSet {
    pub paths: Vec<PathComponent>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn los(&self) -> Option<&PathComponent> {
        self.paths.iter().find(|p| p.bounce_count == 0)
    }
}

/// Local polarization basis for a wave arriving from `d`:
/// `(e_el, e_az)`, elevation pointing up, azimuth counterclockwise.
pub fn polarization_basis(d: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let rho = d.x.hypot(d.y);
    let e_az = if rho > 1e-12 {
        Vector3::new(-d.y / rho, d.x / rho, 0.0)
    } else {
        Vector3::new(0.0, 1.0, 0.0)
    };
    let e_el = d.cross(&e_az);
    (e_el, e_az)
}

/// Unit-norm `(V, H)` Jones vector radiated by an omni along `axis` toward
/// a receiver that sees the wave arrive from `d`.
pub fn radiated_jones(axis: &Vector3<f64>, d: &Vector3<f64>) -> [Complex64; 2] {
    let transverse = axis - d * axis.dot(d);
    let (e_el, e_az) = polarization_basis(d);
    let norm = transverse.norm();
    if norm < 1e-12 {
        return [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    }
    let e = transverse / norm;
    [Complex64::new(e.dot(&e_el), 0.0), Complex64::new(e.dot(&e_az), 0.0)]
}

/// Line-of-sight plus single-bounce specular paths from `tx` to the scene's
/// receiver, sorted by delay.
pub fn synthesize_paths(scene: &Scene, tx: &TxPose, carrier_frequency: f64) -> Result<PathSet> {
    let rx = scene.rx();
    let txp = tx.position();
    let axis = tx.axis();
    let lambda = SPEED_OF_LIGHT / carrier_frequency;
    let los_vec = txp - rx;
    let d_los = los_vec.norm();
    if !(d_los > 0.0) {
        return Err(Error::CoincidentEndpoints);
    }

    let mut paths = Vec::with_capacity(1 + scene.reflectors.len());
    let dir = los_vec / d_los;
    let jones = radiated_jones(&axis, &dir);
    let amp = lambda / (4.0 * PI * d_los);
    paths.push(PathComponent {
        delay: d_los / SPEED_OF_LIGHT,
        jones_gain: [jones[0] * amp, jones[1] * amp],
        arrival_direction: dir,
        bounce_count: 0,
        facet: None,
    });

    for (index, facet) in scene.reflectors.iter().enumerate() {
        let plane = FacetPlane::new(index, facet)?;
        let s_tx = plane.signed_distance(&txp);
        let s_rx = plane.signed_distance(&rx);
        if s_tx == 0.0 {
            return Err(Error::OnFacetPlane {
                endpoint: "transmitter",
                index,
            });
        }
        if s_rx == 0.0 {
            return Err(Error::OnFacetPlane {
                endpoint: "receiver",
                index,
            });
        }
        if s_tx.signum() != s_rx.signum() {
            continue;
        }
        let image = txp - plane.normal * (2.0 * s_tx);
        let to_image = image - rx;
        let d_img = to_image.norm();
        // Specular point: where rx -> image crosses the plane.
        let t = s_rx / (s_rx - plane.signed_distance(&image));
        let specular = rx + to_image * t;
        if !plane.contains(&specular) {
            continue;
        }
        let dir = to_image / d_img;
        let incident = radiated_jones(&axis, &dir);
        let amp = lambda / (4.0 * PI * d_img);
        let out_v = facet.gamma_v * incident[0] + facet.cross_coupling * incident[1];
        let out_h = facet.cross_coupling * incident[0] + facet.gamma_h * incident[1];
        paths.push(PathComponent {
            delay: d_img / SPEED_OF_LIGHT,
            jones_gain: [out_v * amp, out_h * amp],
            arrival_direction: dir,
            bounce_count: 1,
            facet: Some(index),
        });
    }
    paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));
    Ok(PathSet { paths })
}

/// Hovering jitter: truncated AR(1) Gaussian offsets per hover index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Wobble {
    /// Per-axis position standard deviation, meters.
    pub sigma_pos: f64,
    /// Per-axis antenna tilt standard deviation, radians.
    pub sigma_angle: f64,
    /// AR(1) coefficient between consecutive hover indices.
    pub rho: f64,
    pub seed: u64,
}

impl Default for Wobble {
    fn default() -> Self {
        Wobble {
            sigma_pos: 0.02,
            sigma_angle: 1f64.to_radians(),
            rho: 0.9,
            seed: 1,
        }
    }
}

impl Wobble {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_pos >= 0.0) || !(self.sigma_angle >= 0.0) {
            return Err(Error::param("wobble.sigma", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::param("wobble.rho", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Position offset and antenna tilt `(about x, about y)` at `index`.
    pub fn state(&self, index: u64) -> (Vector3<f64>, (f64, f64)) {
        let draw = |channel: u64, sigma: f64| {
            if sigma == 0.0 {
                0.0
            } else {
                sigma * rng::ar1(self.seed, Domain::Wobble, channel, self.rho, index)
            }
        };
        let mut offset = Vector3::new(
            draw(0, self.sigma_pos),
            draw(1, self.sigma_pos),
            draw(2, self.sigma_pos),
        );
        let bound = 6.0 * self.sigma_pos;
        if offset.norm() > bound {
            offset *= bound / offset.norm();
        }
        let mut tilt = (draw(3, self.sigma_angle), draw(4, self.sigma_angle));
        let tilt_norm = tilt.0.hypot(tilt.1);
        let tilt_bound = 6.0 * self.sigma_angle;
        if tilt_norm > tilt_bound {
            tilt = (tilt.0 * tilt_bound / tilt_norm, tilt.1 * tilt_bound / tilt_norm);
        }
        (offset, tilt)
    }
}

/// Axis of a +z antenna after tilting about x then y.
pub fn tilted_axis(about_x: f64, about_y: f64) -> Vector3<f64> {
    let (sx, cx) = about_x.sin_cos();
    let (sy, cy) = about_y.sin_cos();
    Vector3::new(cx * sy, -sx, cx * cy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    NorthWest,
    NorthEast,
    SouthEast,
    SouthWest,
}

impl Corner {
    /// Order visited when walking the square: west to east along the north
    /// edge, then north to south, then east to west, then back north.
    const WALK: [Corner; 4] = [
        Corner::NorthWest,
        Corner::NorthEast,
        Corner::SouthEast,
        Corner::SouthWest,
    ];

    fn offset(self) -> (f64, f64) {
        match self {
            Corner::NorthWest => (-0.5, 0.5),
            Corner::NorthEast => (0.5, 0.5),
            Corner::SouthEast => (0.5, -0.5),
            Corner::SouthWest => (-0.5, -0.5),
        }
    }
}

fn default_start_corner() -> Corner {
    Corner::NorthWest
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    StaticPoint {
        position: [f64; 3],
    },
    Hover {
        position: [f64; 3],
        #[serde(default)]
        wobble: Wobble,
    },
    SquareRoute {
        /// Center of the square; its z is the flight height.
        center: [f64; 3],
        side: f64,
        speed: f64,
        #[serde(default = "default_start_corner")]
        start_corner: Corner,
    },
}

impl Trajectory {
    /// The measurement route: a 30 m square at 50 m, flown at 2 m/s from
    /// the north-west corner.
    pub fn default_route() -> Self {
        Trajectory::SquareRoute {
            center: [0.0, 0.0, 50.0],
            side: 30.0,
            speed: 2.0,
            start_corner: Corner::NorthWest,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Trajectory::StaticPoint { position } => finite3(position, "trajectory.position"),
            Trajectory::Hover { position, wobble } => {
                finite3(position, "trajectory.position")?;
                wobble.validate()
            }
            Trajectory::SquareRoute {
                center, side, speed, ..
            } => {
                finite3(center, "trajectory.center")?;
                if !(*side > 0.0) || !side.is_finite() {
                    return Err(Error::param("trajectory.side", "must be positive"));
                }
                if !(*speed > 0.0) || !speed.is_finite() {
                    return Err(Error::param("trajectory.speed", "must be positive"));
                }
                Ok(())
            }
        }
    }

    /// Whether the transmitter moves within a SIMO snapshot.
    pub fn moves_within_snapshot(&self) -> bool {
        matches!(self, Trajectory::SquareRoute { .. })
    }

    /// Hover process index for a time: `floor(t * burst_rate * simos_per_burst)`.
    pub fn hover_index(time: f64, timing: &TimingPlan) -> u64 {
        (time * timing.burst_rate * timing.simos_per_burst as f64).floor() as u64
    }

    pub fn tx_position_at(&self, time: f64, timing: &TimingPlan) -> Vector3<f64> {
        self.tx_pose_at(time, timing).position()
    }

    pub fn tx_pose_at(&self, time: f64, timing: &TimingPlan) -> TxPose {
        match self {
            Trajectory::StaticPoint { position } => TxPose::level(Vector3::from(*position)),
            Trajectory::Hover { position, wobble } => {
                let (offset, (tx, ty)) = wobble.state(Self::hover_index(time, timing));
                TxPose {
                    position: (Vector3::from(*position) + offset).into(),
                    axis: tilted_axis(tx, ty).into(),
                }
            }
            Trajectory::SquareRoute {
                center,
                side,
                speed,
                start_corner,
            } => {
                let start = Corner::WALK.iter().position(|c| c == start_corner).unwrap_or(0);
                let travelled = (speed * time.max(0.0)).rem_euclid(4.0 * side);
                let leg = ((travelled / side).floor() as usize).min(3);
                let along = (travelled - leg as f64 * side) / side;
                let a = Corner::WALK[(start + leg) % 4].offset();
                let b = Corner::WALK[(start + leg + 1) % 4].offset();
                let x = center[0] + side * (a.0 + (b.0 - a.0) * along);
                let y = center[1] + side * (a.1 + (b.1 - a.1) * along);
                TxPose::level(Vector3::new(x, y, center[2]))
            }
        }
    }
}

fn finite3(p: &[f64; 3], name: &'static str) -> Result<()> {
    if p.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite"))
    }
}
