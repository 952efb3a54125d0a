//! Object semantics in the style of VoxML voxemes: symmetry, habitats and
//! the behaviors each habitat affords.
//!
//! The knowledge base is data, loaded from a TOML file (see
//! `data/voxkb.toml` and `docs/formats.md`). A built-in copy of the shipped
//! file is available through [`VoxKb::builtin`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_between, up, Rotation, Vec3};

const BUILTIN: &str = include_str!("../../../data/voxkb.toml");

/// Angular slack allowed between a habitat's up axis and world-up.
pub const UP_TOLERANCE_RAD: f64 = 10.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Error)]
pub enum VoxKbError {
    #[error("unknown shape `{0}`")]
    UnknownShape(String),
    #[error("voxeme `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error("unsupported knowledge-base version {0}")]
    Version(u32),
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vec3 {
        let mut v = Vec3::zeros();
        v[self.index()] = 1.0;
        v
    }

    /// The two axes perpendicular to this one, in X, Y, Z order.
    pub fn others(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::X, Axis::Z),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedAxis {
    pub axis: Axis,
    pub positive: bool,
}

impl SignedAxis {
    pub fn vector(&self) -> Vec3 {
        if self.positive {
            self.axis.unit()
        } else {
            -self.axis.unit()
        }
    }
}

/// Orientation constraint a habitat places on the object relative to world-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpConstraint {
    /// The local axis must point up.
    Along(SignedAxis),
    /// The local axis must lie horizontal.
    Across(Axis),
    /// Any orientation (full rotational symmetry).
    Any,
}

impl UpConstraint {
    fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "any" {
            return Some(UpConstraint::Any);
        }
        if let Some(rest) = s.strip_prefix("across-") {
            return parse_axis(rest).map(UpConstraint::Across);
        }
        let (positive, rest) = match s.as_bytes().first()? {
            b'+' => (true, &s[1..]),
            b'-' => (false, &s[1..]),
            _ => (true, s.as_str()),
        };
        parse_axis(rest).map(|axis| UpConstraint::Along(SignedAxis { axis, positive }))
    }

    /// Angular deviation (radians) of `rotation` from satisfying the constraint.
    pub fn deviation(&self, rotation: &Rotation) -> f64 {
        match self {
            UpConstraint::Any => 0.0,
            UpConstraint::Along(sa) => angle_between(&(rotation * sa.vector()), &up()),
            UpConstraint::Across(axis) => {
                let a = angle_between(&(rotation * axis.unit()), &up());
                (a - std::f64::consts::FRAC_PI_2).abs()
            }
        }
    }

    /// Smallest correction of `rotation` that satisfies the constraint exactly.
    pub fn snap(&self, rotation: &Rotation) -> Rotation {
        match self {
            UpConstraint::Any => *rotation,
            UpConstraint::Along(sa) => {
                let current = rotation * sa.vector();
                correction(&current, &up()) * rotation
            }
            UpConstraint::Across(axis) => {
                let current = rotation * axis.unit();
                let mut flat = Vec3::new(current.x, 0.0, current.z);
                if flat.norm() < 1e-9 {
                    // axis points straight up or down; tip it over towards +X
                    flat = Vec3::x();
                }
                correction(&current, &flat) * rotation
            }
        }
    }

    /// Orientation satisfying the constraint reached from the identity.
    pub fn canonical(&self) -> Rotation {
        match self {
            UpConstraint::Any => Rotation::identity(),
            UpConstraint::Along(sa) => correction(&sa.vector(), &up()),
            UpConstraint::Across(axis) => {
                // roll the axis down onto the horizontal plane
                let v = axis.unit();
                if v.y.abs() < 1e-12 {
                    Rotation::identity()
                } else {
                    Rotation::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_2)
                }
            }
        }
    }

    /// The object-local axis that ends up vertical, when one is fixed.
    pub fn vertical_axis(&self) -> Option<Axis> {
        match self {
            UpConstraint::Along(sa) => Some(sa.axis),
            _ => None,
        }
    }
}

fn correction(from: &Vec3, to: &Vec3) -> Rotation {
    match Rotation::rotation_between(from, to) {
        Some(r) => r,
        // antiparallel: half turn about a horizontal axis
        None => Rotation::from_axis_angle(&Vec3::z_axis(), std::f64::consts::PI),
    }
}

fn parse_axis(s: &str) -> Option<Axis> {
    match s {
        "x" => Some(Axis::X),
        "y" => Some(Axis::Y),
        "z" => Some(Axis::Z),
        _ => None,
    }
}

impl fmt::Display for UpConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpConstraint::Any => write!(f, "any"),
            UpConstraint::Across(a) => write!(f, "across-{a:?}"),
            UpConstraint::Along(sa) => {
                write!(f, "{}{:?}", if sa.positive { "+" } else { "-" }, sa.axis)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FootprintShape {
    Rect,
    Disk,
}

/// Flat contact patch, expressed relative to the object's extents
/// perpendicular to its vertical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub shape: FootprintShape,
    pub scale: f64,
}

impl Footprint {
    /// Half-extents in metres for an object of full `extents` whose local
    /// `vertical` axis points up. A disk reports its radius on both axes.
    pub fn half_extents(&self, extents: &Vec3, vertical: Axis) -> (f64, f64) {
        let (a, b) = vertical.others();
        let ha = extents[a.index()] * 0.5 * self.scale;
        let hb = extents[b.index()] * 0.5 * self.scale;
        match self.shape {
            FootprintShape::Rect => (ha, hb),
            FootprintShape::Disk => {
                let r = ha.min(hb);
                (r, r)
            }
        }
    }
}

/// Coarse surface class, used for contact reasoning and as a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceClass {
    Flat,
    Round,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Surface {
    Flat(Footprint),
    Round,
    Point,
}

impl Surface {
    pub fn class(&self) -> SurfaceClass {
        match self {
            Surface::Flat(_) => SurfaceClass::Flat,
            Surface::Round => SurfaceClass::Round,
            Surface::Point => SurfaceClass::Point,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Roll,
    Slide,
    StackTarget,
    Stackable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Habitat {
    pub up: UpConstraint,
    /// Surface the object rests on in this habitat.
    pub support_surface: Surface,
    /// Surface the object offers to anything placed on it.
    pub top_surface: Surface,
    pub afforded: BTreeSet<Behavior>,
}

impl Habitat {
    /// Fallback for orientations that match no registered habitat: the
    /// object is balanced on an edge or corner.
    pub fn tipped() -> Self {
        Habitat {
            up: UpConstraint::Any,
            support_surface: Surface::Point,
            top_surface: Surface::Point,
            afforded: BTreeSet::new(),
        }
    }

    pub fn affords(&self, b: Behavior) -> bool {
        self.afforded.contains(&b)
    }

    /// Whether the object can come to rest on a flat floor in this habitat.
    pub fn can_rest(&self) -> bool {
        !matches!(self.support_surface, Surface::Point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntrinsicClass {
    Flat,
    Round,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Voxeme {
    pub name: String,
    pub symmetry_axes: BTreeSet<Axis>,
    pub habitats: Vec<Habitat>,
    pub intrinsic_class: IntrinsicClass,
}

impl Voxeme {
    fn validate(&self) -> Result<(), VoxKbError> {
        let invalid = |reason: &str| VoxKbError::Invalid {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.habitats.is_empty() {
            return Err(invalid("no habitats"));
        }
        if !self.habitats.iter().any(Habitat::can_rest) {
            return Err(invalid("no resting habitat"));
        }
        for h in &self.habitats {
            let flat_any = matches!(h.support_surface, Surface::Flat(_)) || matches!(h.top_surface, Surface::Flat(_));
            if flat_any && h.up.vertical_axis().is_none() {
                return Err(invalid("flat surfaces need a fixed vertical axis"));
            }
            match h.support_surface {
                Surface::Flat(fp) => {
                    if !h.affords(Behavior::StackTarget) {
                        return Err(invalid("flat habitat must afford stack_target"));
                    }
                    if !(fp.scale > 0.0) {
                        return Err(invalid("footprint scale must be positive"));
                    }
                }
                Surface::Round => {
                    if !h.affords(Behavior::Roll) || h.affords(Behavior::StackTarget) {
                        return Err(invalid("round habitat must afford roll and not stack_target"));
                    }
                }
                Surface::Point => {}
            }
        }
        if self.intrinsic_class == IntrinsicClass::Mixed {
            let classes: BTreeSet<_> = self.habitats.iter().map(|h| h.support_surface.class()).collect();
            if self.habitats.len() < 2 || classes.len() < 2 {
                return Err(invalid("mixed voxeme needs habitats with different support classes"));
            }
        }
        Ok(())
    }

    /// Index of the active habitat, or `None` for the tipped fallback.
    pub fn active_habitat_index(&self, rotation: &Rotation) -> Option<usize> {
        let deviations: Vec<f64> = self.habitats.iter().map(|h| h.up.deviation(rotation)).collect();
        let best_among = |pred: &dyn Fn(&Habitat, f64) -> bool| {
            let mut best: Option<(usize, f64)> = None;
            for (i, (h, &d)) in self.habitats.iter().zip(&deviations).enumerate() {
                if pred(h, d) && best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
            best.map(|(i, _)| i)
        };
        best_among(&|_, d| d <= UP_TOLERANCE_RAD)
            .or_else(|| best_among(&|h, _| matches!(h.support_surface, Surface::Round)))
    }

    /// Index of the resting habitat reached with the least reorientation.
    pub fn nearest_resting_index(&self, rotation: &Rotation) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, h) in self.habitats.iter().enumerate() {
            if !h.can_rest() {
                continue;
            }
            let d = h.up.deviation(rotation);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// The habitat in force for `voxeme` at `rotation`.
///
/// Registered habitats within [`UP_TOLERANCE_RAD`] win, smallest deviation
/// first. Otherwise the nearest round habitat applies, and objects without
/// one are treated as tipped onto an edge.
pub fn active_habitat(voxeme: &Voxeme, rotation: &Rotation) -> Habitat {
    match voxeme.active_habitat_index(rotation) {
        Some(i) => voxeme.habitats[i].clone(),
        None => Habitat::tipped(),
    }
}

/// Immutable shape library.
#[derive(Debug, Clone)]
pub struct VoxKb {
    pub version: u32,
    voxemes: BTreeMap<String, Voxeme>,
}

impl VoxKb {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN).expect("shipped voxeme file is valid")
    }

    pub fn load(path: &Path) -> Result<Self, VoxKbError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, VoxKbError> {
        let raw: raw::File = toml::from_str(text)?;
        if raw.version != 1 {
            return Err(VoxKbError::Version(raw.version));
        }
        let mut voxemes = BTreeMap::new();
        for rv in raw.voxeme {
            let v = rv.into_voxeme()?;
            v.validate()?;
            if voxemes.contains_key(&v.name) {
                return Err(VoxKbError::Invalid {
                    name: v.name,
                    reason: "duplicate name".into(),
                });
            }
            voxemes.insert(v.name.clone(), v);
        }
        Ok(VoxKb {
            version: raw.version,
            voxemes,
        })
    }

    pub fn lookup(&self, name: &str) -> Result<&Voxeme, VoxKbError> {
        self.voxemes
            .get(name)
            .ok_or_else(|| VoxKbError::UnknownShape(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.voxemes.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.voxemes.keys().map(String::as_str)
    }

    pub fn voxemes(&self) -> impl Iterator<Item = &Voxeme> {
        self.voxemes.values()
    }
}

mod raw {
    use super::*;

    #[derive(Deserialize)]
    pub struct File {
        pub version: u32,
        #[serde(default)]
        pub voxeme: Vec<RawVoxeme>,
    }

    #[derive(Deserialize)]
    pub struct RawVoxeme {
        pub name: String,
        pub class: IntrinsicClass,
        #[serde(default)]
        pub symmetry: Vec<Axis>,
        #[serde(default)]
        pub habitat: Vec<RawHabitat>,
    }

    #[derive(Deserialize)]
    pub struct RawHabitat {
        pub up: String,
        pub support: RawSurface,
        pub top: RawSurface,
        #[serde(default)]
        pub afforded: Vec<Behavior>,
    }

    #[derive(Deserialize)]
    pub struct RawSurface {
        pub kind: SurfaceClass,
        pub footprint: Option<FootprintShape>,
        pub scale: Option<f64>,
    }

    impl RawSurface {
        fn into_surface(self, name: &str) -> Result<Surface, VoxKbError> {
            Ok(match self.kind {
                SurfaceClass::Flat => Surface::Flat(Footprint {
                    shape: self.footprint.ok_or_else(|| VoxKbError::Invalid {
                        name: name.to_string(),
                        reason: "flat surface needs a footprint".into(),
                    })?,
                    scale: self.scale.unwrap_or(1.0),
                }),
                SurfaceClass::Round => Surface::Round,
                SurfaceClass::Point => Surface::Point,
            })
        }
    }

    impl RawVoxeme {
        pub fn into_voxeme(self) -> Result<Voxeme, VoxKbError> {
            let name = self.name;
            let mut habitats = Vec::with_capacity(self.habitat.len());
            for h in self.habitat {
                let up = UpConstraint::parse(&h.up).ok_or_else(|| VoxKbError::Invalid {
                    name: name.clone(),
                    reason: format!("bad up constraint `{}`", h.up),
                })?;
                habitats.push(Habitat {
                    up,
                    support_surface: h.support.into_surface(&name)?,
                    top_surface: h.top.into_surface(&name)?,
                    afforded: h.afforded.into_iter().collect(),
                });
            }
            Ok(Voxeme {
                name,
                symmetry_axes: self.symmetry.into_iter().collect(),
                habitats,
                intrinsic_class: self.class,
            })
        }
    }
}
