//! Link geometry: receive-array layouts, free-space line-of-sight gains and a
//! single image-method wall reflection.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::channel::{db_to_amplitude, GainVector};
use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const UNIT_TOLERANCE: f64 = 1e-9;
const WALL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component of `self` orthogonal to the unit vector `axis`.
    pub fn reject(self, axis: Vec3) -> Vec3 {
        self - axis * self.dot(axis)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

fn check_unit(v: Vec3, what: &str) -> Result<()> {
    if !v.is_finite() || (v.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::InvalidGeometry(format!("{what} must be a unit vector")));
    }
    Ok(())
}

/// One receive element: position, dipole axis and element gain.
///
/// `gain_db` lumps the element's directive gain and any per-branch feed loss;
/// it multiplies every path arriving at the element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementPlacement {
    pub position: Vec3,
    pub polarization: Vec3,
    pub gain_db: f64,
}

impl ElementPlacement {
    pub fn new(position: Vec3, polarization: Vec3) -> Result<Self> {
        if !position.is_finite() {
            return Err(Error::InvalidGeometry("element position is not finite".into()));
        }
        check_unit(polarization, "element polarization")?;
        Ok(ElementPlacement {
            position,
            polarization,
            gain_db: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArrayKind {
    Ula,
    PiShape,
    Custom,
}

impl fmt::Display for ArrayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArrayKind::Ula => "ula",
            ArrayKind::PiShape => "pi",
            ArrayKind::Custom => "custom",
        })
    }
}

/// Receive elements in the order used for element indices 1..N.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    kind: ArrayKind,
    elements: Vec<ElementPlacement>,
}

impl ArrayLayout {
    pub fn new(kind: ArrayKind, elements: Vec<ElementPlacement>) -> Result<Self> {
        if elements.len() < 2 {
            return Err(Error::InvalidGeometry("an array needs at least two elements".into()));
        }
        for (i, e) in elements.iter().enumerate() {
            if !e.position.is_finite() || !e.gain_db.is_finite() {
                return Err(Error::InvalidGeometry(format!("element {} is not finite", i + 1)));
            }
            check_unit(e.polarization, "element polarization")?;
            for (j, other) in elements.iter().enumerate().skip(i + 1) {
                if e.position.distance(other.position) == 0.0 {
                    return Err(Error::InvalidGeometry(format!(
                        "elements {} and {} share a position",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if kind == ArrayKind::Ula {
            check_uniform_line(&elements)?;
        }
        Ok(ArrayLayout { kind, elements })
    }

    pub fn kind(&self) -> ArrayKind {
        self.kind
    }

    pub fn elements(&self) -> &[ElementPlacement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        let sum = self
            .elements
            .iter()
            .fold(Vec3::default(), |acc, e| acc + e.position);
        sum * (1.0 / self.elements.len() as f64)
    }

    /// Replaces the per-element gains; `gains_db` must have one entry per element.
    pub fn with_element_gains_db(mut self, gains_db: &[f64]) -> Result<Self> {
        if gains_db.len() != self.elements.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} element gains given for {} elements",
                gains_db.len(),
                self.elements.len()
            )));
        }
        if gains_db.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidGeometry("element gain is not finite".into()));
        }
        for (e, &g) in self.elements.iter_mut().zip(gains_db) {
            e.gain_db = g;
        }
        Ok(self)
    }
}

fn check_uniform_line(elements: &[ElementPlacement]) -> Result<()> {
    let first = elements[0].position;
    let step = elements[1].position - first;
    for (k, e) in elements.iter().enumerate() {
        let expected = first + step * k as f64;
        if e.position.distance(expected) > 1e-9 {
            return Err(Error::InvalidGeometry(
                "ULA elements must be collinear with uniform spacing".into(),
            ));
        }
    }
    Ok(())
}

/// Four-element uniform linear array stacked along z, centred on `centroid`.
/// Element 1 is the lowest.
pub fn build_ula(spacing_m: f64, centroid: Vec3, polarization: Vec3) -> Result<ArrayLayout> {
    if !(spacing_m.is_finite() && spacing_m > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "ULA spacing must be positive, got {spacing_m}"
        )));
    }
    let elements = (0..4)
        .map(|k| {
            let offset = (k as f64 - 1.5) * spacing_m;
            ElementPlacement::new(centroid + Vec3::Z * offset, polarization)
        })
        .collect::<Result<Vec<_>>>()?;
    ArrayLayout::new(ArrayKind::Ula, elements)
}

/// Π-shaped array in the x–z plane, centred on `centroid`.
///
/// Elements 2 and 3 sit at the ends of the top bar with their dipoles along
/// the bar (x, parallel to the default horizontal transmit dipole). Elements
/// 1 and 4 sit at the bottom of the legs with their dipoles along the legs
/// (z, cross-polarized). Adjacent elements are `leg_m`, `top_m`, `leg_m` apart.
pub fn build_pi(leg_m: f64, top_m: f64, centroid: Vec3) -> Result<ArrayLayout> {
    for (name, v) in [("leg", leg_m), ("top", top_m)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "Π {name} length must be positive, got {v}"
            )));
        }
    }
    let (hx, hz) = (top_m / 2.0, leg_m / 2.0);
    let place = |x: f64, z: f64, pol: Vec3| {
        ElementPlacement::new(centroid + Vec3::new(x, 0.0, z), pol)
    };
    let elements = vec![
        place(-hx, -hz, Vec3::Z)?,
        place(-hx, hz, Vec3::X)?,
        place(hx, hz, Vec3::X)?,
        place(hx, -hz, Vec3::Z)?,
    ];
    ArrayLayout::new(ArrayKind::PiShape, elements)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wall {
    XMin,
    XMax,
    YMin,
    YMax,
}

impl Wall {
    pub const ALL: [Wall; 4] = [Wall::XMin, Wall::XMax, Wall::YMin, Wall::YMax];

    pub fn name(self) -> &'static str {
        match self {
            Wall::XMin => "x_min",
            Wall::XMax => "x_max",
            Wall::YMin => "y_min",
            Wall::YMax => "y_max",
        }
    }

    pub fn from_name(s: &str) -> Option<Wall> {
        Wall::ALL.into_iter().find(|w| w.name() == s)
    }
}

/// Rectangular room with floor corner at the origin: x ∈ [0, width], y ∈ [0, length].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    pub width_m: f64,
    pub length_m: f64,
}

impl Room {
    fn wall_coordinate(&self, wall: Wall) -> f64 {
        match wall {
            Wall::XMin | Wall::YMin => 0.0,
            Wall::XMax => self.width_m,
            Wall::YMax => self.length_m,
        }
    }

    pub fn distance_to_wall(&self, p: Vec3, wall: Wall) -> f64 {
        match wall {
            Wall::XMin | Wall::XMax => (p.x - self.wall_coordinate(wall)).abs(),
            Wall::YMin | Wall::YMax => (p.y - self.wall_coordinate(wall)).abs(),
        }
    }

    pub fn nearest_wall(&self, p: Vec3) -> Wall {
        Wall::ALL
            .into_iter()
            .min_by(|&a, &b| {
                self.distance_to_wall(p, a)
                    .total_cmp(&self.distance_to_wall(p, b))
            })
            .expect("four walls")
    }

    /// Wall the point lies on, if any (within the wall's horizontal extent).
    pub fn wall_of(&self, p: Vec3) -> Option<Wall> {
        let inside_x = p.x >= -WALL_TOLERANCE && p.x <= self.width_m + WALL_TOLERANCE;
        let inside_y = p.y >= -WALL_TOLERANCE && p.y <= self.length_m + WALL_TOLERANCE;
        Wall::ALL.into_iter().find(|&w| {
            let on_plane = self.distance_to_wall(p, w) <= WALL_TOLERANCE;
            let within = match w {
                Wall::XMin | Wall::XMax => inside_y,
                Wall::YMin | Wall::YMax => inside_x,
            };
            on_plane && within
        })
    }

    /// Mirror image of `p` across `wall`.
    pub fn image(&self, p: Vec3, wall: Wall) -> Vec3 {
        let c = self.wall_coordinate(wall);
        match wall {
            Wall::XMin | Wall::XMax => Vec3::new(2.0 * c - p.x, p.y, p.z),
            Wall::YMin | Wall::YMax => Vec3::new(p.x, 2.0 * c - p.y, p.z),
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= 0.0 && p.x <= self.width_m && p.y >= 0.0 && p.y <= self.length_m
    }
}

/// Which wall the secondary replica reflects off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallChoice {
    /// The wall nearest receive element 1.
    NearestElement1,
    Fixed(Wall),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSpec {
    pub wall: WallChoice,
    pub reflection_coefficient: f64,
    /// 1-based element indices that the array geometry shadows from the replica.
    pub blocked_elements: BTreeSet<usize>,
}

impl Default for ReplicaSpec {
    fn default() -> Self {
        ReplicaSpec {
            wall: WallChoice::NearestElement1,
            reflection_coefficient: 0.5,
            blocked_elements: BTreeSet::new(),
        }
    }
}

/// Room, link endpoints and carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub room: Room,
    pub tx_position: Vec3,
    pub rx_centroid: Vec3,
    pub tx_polarization: Vec3,
    pub frequency_hz: f64,
    /// Floor on the polarization-match factor; models finite cross-pol isolation.
    pub polarization_leakage: f64,
    pub replica: ReplicaSpec,
}

impl Scenario {
    /// Link along the room's y axis: Tx at `link_center_y - d/2`, Rx centroid at
    /// `link_center_y + d/2`, both at `height_m` and lateral position `link_x`.
    #[allow(clippy::too_many_arguments)]
    pub fn along_room_axis(
        room: Room,
        distance_m: f64,
        height_m: f64,
        link_x_m: f64,
        link_center_y_m: f64,
        tx_polarization: Vec3,
        frequency_hz: f64,
        polarization_leakage: f64,
        replica: ReplicaSpec,
    ) -> Result<Self> {
        let tx = Vec3::new(link_x_m, link_center_y_m - distance_m / 2.0, height_m);
        let rx = Vec3::new(link_x_m, link_center_y_m + distance_m / 2.0, height_m);
        let s = Scenario {
            room,
            tx_position: tx,
            rx_centroid: rx,
            tx_polarization,
            frequency_hz,
            polarization_leakage,
            replica,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGeometry(m));
        if !(self.room.width_m > 0.0 && self.room.length_m > 0.0)
            || !self.room.width_m.is_finite()
            || !self.room.length_m.is_finite()
        {
            return bad("room dimensions must be positive".into());
        }
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return bad(format!("frequency must be positive, got {}", self.frequency_hz));
        }
        if !(0.0..=1.0).contains(&self.polarization_leakage) {
            return bad("polarization leakage must lie in [0, 1]".into());
        }
        if !self.tx_position.is_finite() || !self.rx_centroid.is_finite() {
            return bad("link endpoints must be finite".into());
        }
        if !self.room.contains(self.tx_position) || !self.room.contains(self.rx_centroid) {
            return bad("transmitter and receiver must lie inside the room".into());
        }
        if self.tx_position.distance(self.rx_centroid) == 0.0 {
            return bad("transmitter and receiver coincide".into());
        }
        check_unit(self.tx_polarization, "transmit polarization")?;
        let r = self.replica.reflection_coefficient;
        if !(r.is_finite() && r >= 0.0) {
            return bad(format!("reflection coefficient must be non-negative, got {r}"));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn tx_rx_distance_m(&self) -> f64 {
        self.tx_position.distance(self.rx_centroid)
    }

    fn match_factor(&self, element: &ElementPlacement, direction: Vec3) -> f64 {
        polarization_match(self.tx_polarization, element.polarization, direction)
            .max(self.polarization_leakage)
    }

    /// Wall the replica reflects off for this layout.
    pub fn replica_wall(&self, layout: &ArrayLayout) -> Wall {
        match self.replica.wall {
            WallChoice::Fixed(w) => w,
            WallChoice::NearestElement1 => self.room.nearest_wall(layout.elements()[0].position),
        }
    }

    /// Image-method replica ray for `layout`: the reflection point is where the
    /// line from the transmitter's image to the array centroid crosses the wall.
    pub fn replica_ray(&self, layout: &ArrayLayout) -> Result<RayPath> {
        let wall = self.replica_wall(layout);
        let image = self.room.image(self.tx_position, wall);
        let target = layout.centroid();
        let c = self.room.wall_coordinate(wall);
        let t = match wall {
            Wall::XMin | Wall::XMax => (c - image.x) / (target.x - image.x),
            Wall::YMin | Wall::YMax => (c - image.y) / (target.y - image.y),
        };
        if !t.is_finite() || !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidRay(format!(
                "no specular reflection off wall {} for this link",
                wall.name()
            )));
        }
        let point = image + (target - image) * t;
        Ok(RayPath {
            kind: RayKind::Replica,
            reflection_point: Some(point),
            amplitude_scale: self.replica.reflection_coefficient,
            blocked_elements: self.replica.blocked_elements.clone(),
        })
    }
}

/// |cos| of the angle between the transmit and receive dipole axes after both
/// are projected onto the plane transverse to `direction`.
pub fn polarization_match(tx_pol: Vec3, rx_pol: Vec3, direction: Vec3) -> f64 {
    let Some(u) = direction.normalized() else {
        return 0.0;
    };
    match (tx_pol.reject(u).normalized(), rx_pol.reject(u).normalized()) {
        (Some(a), Some(b)) => a.dot(b).abs().min(1.0),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayKind {
    LoS,
    Replica,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayPath {
    pub kind: RayKind,
    pub reflection_point: Option<Vec3>,
    pub amplitude_scale: f64,
    pub blocked_elements: BTreeSet<usize>,
}

/// Free-space voltage gain over `distance` with the carrier phase of the path.
fn free_space(distance: f64, wavelength: f64) -> Complex64 {
    let magnitude = wavelength / (4.0 * PI * distance);
    let cycles = (distance / wavelength).fract();
    Complex64::from_polar(magnitude, -2.0 * PI * cycles)
}

/// Line-of-sight gain of every element:
/// `λ/(4πd)·m·exp(−j2πd/λ)` times the element gain.
pub fn los_gains(scenario: &Scenario, layout: &ArrayLayout) -> Result<GainVector> {
    let lambda = scenario.wavelength_m();
    let gains = layout
        .elements()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let path = e.position - scenario.tx_position;
            let d = path.norm();
            if d == 0.0 {
                return Err(Error::SingularGeometry { element: i + 1 });
            }
            let m = scenario.match_factor(e, path);
            Ok(free_space(d, lambda) * (m * db_to_amplitude(e.gain_db)))
        })
        .collect::<Result<Vec<_>>>()?;
    GainVector::new(gains)
}

/// Gain of a single wall-reflected ray. Blocked elements receive exactly zero.
pub fn replica_gains(scenario: &Scenario, layout: &ArrayLayout, ray: &RayPath) -> Result<GainVector> {
    if ray.kind != RayKind::Replica {
        return Err(Error::InvalidRay("expected a replica ray".into()));
    }
    let point = ray
        .reflection_point
        .ok_or_else(|| Error::InvalidRay("replica ray has no reflection point".into()))?;
    if !point.is_finite() || scenario.room.wall_of(point).is_none() {
        return Err(Error::InvalidRay("reflection point does not lie on a room wall".into()));
    }
    if !(ray.amplitude_scale.is_finite() && ray.amplitude_scale >= 0.0) {
        return Err(Error::InvalidRay("amplitude scale must be non-negative".into()));
    }
    let lambda = scenario.wavelength_m();
    let first_leg = point.distance(scenario.tx_position);
    let gains = layout
        .elements()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if ray.blocked_elements.contains(&(i + 1)) || ray.amplitude_scale == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let arrival = e.position - point;
            let d = first_leg + arrival.norm();
            if d == 0.0 {
                return Err(Error::SingularGeometry { element: i + 1 });
            }
            let m = scenario.match_factor(e, arrival);
            Ok(free_space(d, lambda) * (ray.amplitude_scale * m * db_to_amplitude(e.gain_db)))
        })
        .collect::<Result<Vec<_>>>()?;
    GainVector::new(gains)
}
