//! Semantic light-source tree construction and stochastic attribute assignment.
//!
//! Leaves are connected components of the light mask; groups collect leaves that
//! plausibly share attributes (the two front lights of one car, the windows of
//! one building floor, the heads of one traffic-light pole). Every leaf draws an
//! activation variable X ~ Bernoulli(y) with y ~ Uniform(a, b) from its
//! category's bounds row, a chromaticity from the illuminant database, and a
//! strength from a configured interval. All draws come from counter-based
//! streams keyed by stable leaf/group identifiers, so instantiation is
//! deterministic and independent of traversal order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::color::Chromaticity;
use crate::error::CoreError;
use crate::math::Vec3;
use crate::mesh::{Emission, TriangleMesh};
use crate::raster::IdMask;
use crate::rng::{fnv1a, fnv1a_extend, RngStream};

/// Prediction-level light-source categories plus the finer-grained vehicle
/// lamp and clock labels a mask may carry when the upstream segmentation
/// distinguishes them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LightCategory {
    WindowBuilding,
    WindowParked,
    WindowTransport,
    TrafficLight,
    StreetLightHt,
    StreetLightLt,
    FrontLight,
    RearLight,
    Advertisement,
    Inferred,
    MovingFront,
    ParkedFront,
    MovingRear,
    ParkedRear,
    Clock,
}

impl LightCategory {
    pub const ALL: [LightCategory; 15] = [
        LightCategory::WindowBuilding,
        LightCategory::WindowParked,
        LightCategory::WindowTransport,
        LightCategory::TrafficLight,
        LightCategory::StreetLightHt,
        LightCategory::StreetLightLt,
        LightCategory::FrontLight,
        LightCategory::RearLight,
        LightCategory::Advertisement,
        LightCategory::Inferred,
        LightCategory::MovingFront,
        LightCategory::ParkedFront,
        LightCategory::MovingRear,
        LightCategory::ParkedRear,
        LightCategory::Clock,
    ];

    /// Mask id; 0 is reserved for "no light source".
    pub fn id(self) -> u16 {
        Self::ALL.iter().position(|c| *c == self).unwrap() as u16 + 1
    }

    pub fn from_id(id: u16) -> Option<LightCategory> {
        if id == 0 {
            None
        } else {
            Self::ALL.get(id as usize - 1).copied()
        }
    }

    pub fn is_vehicle_lamp(self) -> bool {
        matches!(
            self,
            LightCategory::FrontLight
                | LightCategory::RearLight
                | LightCategory::MovingFront
                | LightCategory::ParkedFront
                | LightCategory::MovingRear
                | LightCategory::ParkedRear
        )
    }

    /// Row key in the activation bounds table. Vehicle lamps without a
    /// moving/parked distinction default to the parked rows.
    pub fn bounds_label(self, state: Option<TrafficState>) -> &'static str {
        match self {
            LightCategory::WindowBuilding => "window_building",
            LightCategory::WindowParked => "window_parked",
            LightCategory::WindowTransport => "window_transport",
            LightCategory::TrafficLight => match state {
                Some(TrafficState::Green) => "traffic_light_G",
                Some(TrafficState::Red) => "traffic_light_R",
                Some(TrafficState::Orange) | None => "traffic_light_O",
            },
            LightCategory::StreetLightHt => "street_light_HT",
            LightCategory::StreetLightLt => "street_light_LT",
            LightCategory::FrontLight | LightCategory::ParkedFront => "parked_front",
            LightCategory::MovingFront => "moving_front",
            LightCategory::RearLight | LightCategory::ParkedRear => "parked_rear",
            LightCategory::MovingRear => "moving_rear",
            LightCategory::Advertisement => "advertisement",
            LightCategory::Inferred => "inferred",
            LightCategory::Clock => "clock",
        }
    }

    /// Key into the illuminant database (the prediction-level taxonomy).
    pub fn illuminant_label(self, state: Option<TrafficState>) -> &'static str {
        match self {
            LightCategory::WindowBuilding => "window_building",
            LightCategory::WindowParked => "window_parked",
            LightCategory::WindowTransport => "window_transport",
            LightCategory::TrafficLight => match state {
                Some(TrafficState::Green) => "traffic_light_G",
                Some(TrafficState::Red) => "traffic_light_R",
                Some(TrafficState::Orange) | None => "traffic_light_O",
            },
            LightCategory::StreetLightHt => "street_light_HT",
            LightCategory::StreetLightLt => "street_light_LT",
            LightCategory::FrontLight | LightCategory::MovingFront | LightCategory::ParkedFront => {
                "front_light"
            }
            LightCategory::RearLight | LightCategory::MovingRear | LightCategory::ParkedRear => {
                "rear_light"
            }
            LightCategory::Advertisement => "advertisement",
            LightCategory::Inferred | LightCategory::Clock => "inferred",
        }
    }

    /// Key into the strength interval table (traffic sub-states share one row).
    pub fn strength_label(self) -> &'static str {
        match self {
            LightCategory::TrafficLight => "traffic_light",
            other => other.illuminant_label(None),
        }
    }
}

/// Sub-state of a traffic light, shared across all heads of one pole.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrafficState {
    Green,
    Red,
    Orange,
}

/// Per-pixel light-source annotation: category id plus light-instance id.
#[derive(Clone, Debug)]
pub struct LightMask {
    pub categories: IdMask,
    pub instances: IdMask,
}

impl LightMask {
    pub fn empty(width: usize, height: usize) -> Self {
        LightMask { categories: IdMask::new(width, height), instances: IdMask::new(width, height) }
    }
}

/// Semantic class of a panoptic instance, used to pick light-source groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceClass {
    Car,
    Bus,
    Tram,
    Truck,
    Motorcycle,
    Bicycle,
    Building,
    TrafficLight,
    Sky,
    Other,
}

impl InstanceClass {
    pub fn parse(s: &str) -> InstanceClass {
        match s {
            "car" => InstanceClass::Car,
            "bus" => InstanceClass::Bus,
            "tram" => InstanceClass::Tram,
            "truck" => InstanceClass::Truck,
            "motorcycle" => InstanceClass::Motorcycle,
            "bicycle" => InstanceClass::Bicycle,
            "building" => InstanceClass::Building,
            "traffic_light" => InstanceClass::TrafficLight,
            "sky" => InstanceClass::Sky,
            _ => InstanceClass::Other,
        }
    }

    pub fn vehicle_label(self) -> Option<&'static str> {
        match self {
            InstanceClass::Car => Some("car"),
            InstanceClass::Bus => Some("bus"),
            InstanceClass::Tram => Some("tram"),
            InstanceClass::Truck => Some("truck"),
            InstanceClass::Motorcycle => Some("motorcycle"),
            InstanceClass::Bicycle => Some("bicycle"),
            _ => None,
        }
    }
}

/// A light-source group node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupKind {
    /// Leaves with no enclosing instance hang off the root ("N/A" rows).
    Root,
    Vehicle { label: &'static str, instance: u16 },
    BuildingFloor { instance: u16, band: u16 },
    TrafficPole { instance: u16 },
}

impl GroupKind {
    pub fn bounds_label(&self) -> &'static str {
        match self {
            GroupKind::Root | GroupKind::TrafficPole { .. } => "N/A",
            GroupKind::Vehicle { label, .. } => label,
            GroupKind::BuildingFloor { .. } => "building_floor",
        }
    }

    /// Stable identifier folded into sampling streams.
    fn stream_key(&self) -> u64 {
        let (tag, a, b): (&str, u64, u64) = match self {
            GroupKind::Root => ("root", 0, 0),
            GroupKind::Vehicle { label, instance } => ("vehicle", fnv1a(label.as_bytes()), *instance as u64),
            GroupKind::BuildingFloor { instance, band } => ("floor", *instance as u64, *band as u64),
            GroupKind::TrafficPole { instance } => ("pole", *instance as u64, 0),
        };
        let h = fnv1a_extend(fnv1a(tag.as_bytes()), &a.to_le_bytes());
        fnv1a_extend(h, &b.to_le_bytes())
    }
}

/// Attributes resolved for one leaf by [`instantiate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedLight {
    /// Sampled Bernoulli parameter y.
    pub activation_param: f64,
    /// Realized activation X.
    pub active: bool,
    pub chromaticity: Chromaticity,
    pub strength: f64,
    /// XYZ emission with Y equal to the strength; zero when inactive.
    pub emission: Vec3,
    pub traffic_state: Option<TrafficState>,
}

#[derive(Clone, Debug)]
pub struct LightLeaf {
    /// Row-major index of the component's first pixel; stable across runs.
    pub id: u64,
    pub category: LightCategory,
    /// Instance id from the light mask.
    pub mask_instance: u16,
    /// Index into [`LightTree::groups`].
    pub group: usize,
    pub pixel_count: usize,
    pub centroid: (f64, f64),
    /// Mesh faces tagged with this leaf's (category, instance) pair.
    pub faces: Vec<u32>,
    pub resolved: Option<ResolvedLight>,
}

#[derive(Clone, Debug)]
pub struct LightTree {
    pub groups: Vec<GroupKind>,
    pub leaves: Vec<LightLeaf>,
}

impl LightTree {
    pub fn empty() -> Self {
        LightTree { groups: alloc::vec![GroupKind::Root], leaves: Vec::new() }
    }
}

/// One row of the activation bounds table: (group, category) -> Uniform(a, b).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsRow {
    pub group: String,
    pub category: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundsTable {
    pub rows: Vec<BoundsRow>,
}

impl BoundsTable {
    /// Exact (group, category) row, then the category's "N/A" row, then the
    /// first row carrying the category under any group.
    pub fn lookup(&self, group: &str, category: &str) -> Result<(f64, f64), CoreError> {
        let exact = self
            .rows
            .iter()
            .find(|r| r.group == group && r.category == category)
            .or_else(|| self.rows.iter().find(|r| r.group == "N/A" && r.category == category))
            .or_else(|| self.rows.iter().find(|r| r.category == category));
        match exact {
            Some(r) => Ok((r.lo, r.hi)),
            None => Err(CoreError::UncoveredCategory(String::from(category))),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.rows.iter().all(|r| 0.0 <= r.lo && r.lo <= r.hi && r.hi <= 1.0)
    }
}

/// Per-category chromaticity samples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IlluminantDb {
    pub samples: BTreeMap<String, Vec<Chromaticity>>,
}

impl IlluminantDb {
    pub fn samples_for(&self, category: &str) -> Result<&[Chromaticity], CoreError> {
        match self.samples.get(category) {
            Some(s) if !s.is_empty() => Ok(s),
            _ => Err(CoreError::MissingIlluminant(String::from(category))),
        }
    }

    pub fn is_physical(&self) -> bool {
        self.samples.values().flatten().all(|c| c.is_physical())
    }

    /// Checks that every category a bounds table can demand has samples.
    pub fn covers(&self, bounds: &BoundsTable) -> Result<(), CoreError> {
        for row in &bounds.rows {
            let label = bounds_to_illuminant_label(&row.category);
            self.samples_for(label)?;
        }
        Ok(())
    }
}

/// Maps a bounds-table category name onto the illuminant-database taxonomy.
pub fn bounds_to_illuminant_label(category: &str) -> &str {
    match category {
        "moving_front" | "parked_front" => "front_light",
        "moving_rear" | "parked_rear" => "rear_light",
        "clock" => "inferred",
        other => other,
    }
}

/// Uniform interval table for emission strengths, keyed by [`LightCategory::strength_label`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StrengthTable {
    pub intervals: BTreeMap<String, (f64, f64)>,
}

impl StrengthTable {
    pub fn lookup(&self, label: &str) -> Result<(f64, f64), CoreError> {
        self.intervals
            .get(label)
            .copied()
            .ok_or_else(|| CoreError::UncoveredCategory(String::from(label)))
    }
}

/// Draws the activation pair (y, X): y ~ Uniform(a, b), X ~ Bernoulli(y).
pub fn sample_activation(bounds: (f64, f64), rng: &mut RngStream) -> (f64, bool) {
    debug_assert!(0.0 <= bounds.0 && bounds.0 <= bounds.1 && bounds.1 <= 1.0);
    let y = rng.uniform(bounds.0, bounds.1);
    let x = rng.next_f64() < y;
    (y, x)
}

/// Uniform pick among the category's chromaticity samples.
pub fn sample_chromaticity(
    category: &str,
    db: &IlluminantDb,
    rng: &mut RngStream,
) -> Result<Chromaticity, CoreError> {
    let samples = db.samples_for(category)?;
    Ok(samples[rng.uniform_index(samples.len())])
}

/// Uniform draw from the category's strength interval.
pub fn sample_strength(interval: (f64, f64), rng: &mut RngStream) -> f64 {
    debug_assert!(0.0 < interval.0 && interval.0 <= interval.1);
    rng.uniform(interval.0, interval.1)
}

/// Builds the light tree from the masks and the tagged mesh.
///
/// Leaves are 4-connected components of equal (category, instance) in the
/// light mask. Each leaf joins the group suggested by the panoptic instance
/// covering it: a vehicle, a building floor (window leaves of one building
/// clustered by image-row bands of `floor_band_px`), a traffic-light pole, or
/// the root when no instance applies.
pub fn build_light_tree(
    light_mask: &LightMask,
    instance_mask: &IdMask,
    instance_classes: &BTreeMap<u16, InstanceClass>,
    mesh: &TriangleMesh,
    floor_band_px: usize,
) -> LightTree {
    let (w, h) = (light_mask.categories.width(), light_mask.categories.height());
    assert_eq!((instance_mask.width(), instance_mask.height()), (w, h));

    // Connected-component labeling; leaf_of[pixel] = leaf index + 1.
    let mut leaf_of = alloc::vec![0u32; w * h];
    let mut leaves: Vec<LightLeaf> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();

    for y0 in 0..h {
        for x0 in 0..w {
            if leaf_of[y0 * w + x0] != 0 {
                continue;
            }
            let cat_id = light_mask.categories.get(x0, y0);
            let Some(category) = LightCategory::from_id(cat_id) else {
                continue;
            };
            let inst = light_mask.instances.get(x0, y0);
            let leaf_index = leaves.len();
            leaf_of[y0 * w + x0] = leaf_index as u32 + 1;
            stack.push((x0, y0));

            let mut count = 0usize;
            let mut sum = (0.0f64, 0.0f64);
            // Majority parent instance over the component's pixels.
            let mut parent_votes: BTreeMap<u16, usize> = BTreeMap::new();
            while let Some((x, y)) = stack.pop() {
                count += 1;
                sum.0 += x as f64;
                sum.1 += y as f64;
                *parent_votes.entry(instance_mask.get(x, y)).or_insert(0) += 1;
                let neighbors = [
                    (x.wrapping_sub(1), y),
                    (x + 1, y),
                    (x, y.wrapping_sub(1)),
                    (x, y + 1),
                ];
                for (nx, ny) in neighbors {
                    if nx >= w || ny >= h {
                        continue;
                    }
                    if leaf_of[ny * w + nx] != 0 {
                        continue;
                    }
                    if light_mask.categories.get(nx, ny) == cat_id
                        && light_mask.instances.get(nx, ny) == inst
                    {
                        leaf_of[ny * w + nx] = leaf_index as u32 + 1;
                        stack.push((nx, ny));
                    }
                }
            }

            let parent_instance = parent_votes
                .iter()
                .max_by_key(|(id, n)| (**n, u16::MAX - **id))
                .map(|(id, _)| *id)
                .unwrap_or(0);
            leaves.push(LightLeaf {
                id: (y0 * w + x0) as u64,
                category,
                mask_instance: inst,
                group: usize::MAX, // resolved below
                pixel_count: count,
                centroid: (sum.0 / count as f64, sum.1 / count as f64),
                faces: Vec::new(),
                resolved: None,
            });
            // Stash the parent instance in the group slot temporarily.
            leaves[leaf_index].group = parent_instance as usize;
        }
    }

    // Resolve groups.
    let mut groups: Vec<GroupKind> = alloc::vec![GroupKind::Root];
    let group_index =
        |groups: &mut Vec<GroupKind>, kind: GroupKind| match groups.iter().position(|g| *g == kind) {
            Some(i) => i,
            None => {
                groups.push(kind);
                groups.len() - 1
            }
        };
    let band = floor_band_px.max(1);
    for leaf in &mut leaves {
        let parent_instance = leaf.group as u16;
        let class = instance_classes.get(&parent_instance).copied().unwrap_or(InstanceClass::Other);
        let kind = if leaf.category == LightCategory::TrafficLight && parent_instance != 0 {
            GroupKind::TrafficPole { instance: parent_instance }
        } else if let Some(label) = class.vehicle_label() {
            GroupKind::Vehicle { label, instance: parent_instance }
        } else if leaf.category == LightCategory::WindowBuilding
            && class == InstanceClass::Building
        {
            GroupKind::BuildingFloor {
                instance: parent_instance,
                band: (leaf.centroid.1 as usize / band) as u16,
            }
        } else {
            GroupKind::Root
        };
        leaf.group = group_index(&mut groups, kind);
    }

    // Assign tagged mesh faces to leaves by their source pixels.
    for (fi, attrs) in mesh.attributes.iter().enumerate() {
        let (Some(tag), Some(src)) = (attrs.light, attrs.source_pixels) else {
            continue;
        };
        let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
        for p in &src {
            let (x, y) = (p[0] as usize, p[1] as usize);
            let li = leaf_of[y * w + x];
            if li == 0 {
                continue;
            }
            let leaf = &leaves[li as usize - 1];
            if leaf.category == tag.category && leaf.mask_instance == tag.instance {
                *votes.entry(li - 1).or_insert(0) += 1;
            }
        }
        if let Some((&leaf_index, _)) = votes.iter().max_by_key(|(i, n)| (**n, u32::MAX - **i)) {
            leaves[leaf_index as usize].faces.push(fi as u32);
        }
    }

    LightTree { groups, leaves }
}

fn leaf_stream(seed: u64, tag: &str, key: u64) -> RngStream {
    RngStream::for_tag(seed, tag, key)
}

/// Assigns activation, chromaticity, and strength to every leaf.
///
/// Chromaticity and strength are shared per (group, category); the activation
/// pair is additionally shared by vehicle lamp pairs of one vehicle. Leaves
/// under the root sample everything individually. Traffic-light groups pick
/// one G/R/O sub-state each.
pub fn instantiate(
    tree: &LightTree,
    db: &IlluminantDb,
    bounds: &BoundsTable,
    strengths: &StrengthTable,
    seed: u64,
) -> Result<LightTree, CoreError> {
    let mut out = tree.clone();
    for leaf in &mut out.leaves {
        let group = &tree.groups[leaf.group];
        let grouped = *group != GroupKind::Root;
        let group_key = group.stream_key();

        let traffic_state = if leaf.category == LightCategory::TrafficLight {
            let key = if grouped { group_key } else { leaf.id };
            let mut rng = leaf_stream(seed, "traffic-state", key);
            Some(match rng.uniform_index(3) {
                0 => TrafficState::Green,
                1 => TrafficState::Red,
                _ => TrafficState::Orange,
            })
        } else {
            None
        };

        let bounds_label = leaf.category.bounds_label(traffic_state);
        let (lo, hi) = bounds.lookup(group.bounds_label(), bounds_label)?;
        let share_activation = grouped && leaf.category.is_vehicle_lamp();
        let act_key = if share_activation {
            fnv1a_extend(group_key, bounds_label.as_bytes())
        } else {
            leaf.id
        };
        let mut act_rng = leaf_stream(seed, "activation", act_key);
        let (y, active) = sample_activation((lo, hi), &mut act_rng);

        let illum_label = leaf.category.illuminant_label(traffic_state);
        let attr_key = if grouped {
            fnv1a_extend(group_key, illum_label.as_bytes())
        } else {
            leaf.id
        };
        let mut chroma_rng = leaf_stream(seed, "chromaticity", attr_key);
        let chromaticity = sample_chromaticity(illum_label, db, &mut chroma_rng)?;

        let interval = strengths.lookup(leaf.category.strength_label())?;
        let mut strength_rng = leaf_stream(seed, "strength", attr_key);
        let strength = sample_strength(interval, &mut strength_rng);

        let emission = if active { chromaticity.to_xyz(strength) } else { Vec3::ZERO };
        leaf.resolved = Some(ResolvedLight {
            activation_param: y,
            active,
            chromaticity,
            strength,
            emission,
            traffic_state,
        });
    }
    Ok(out)
}

/// Resolves every leaf as active with the given chromaticity and strength.
/// Used when light instantiation is ablated (white, always-on, uniform strength).
pub fn instantiate_uniform(tree: &LightTree, chromaticity: Chromaticity, strength: f64) -> LightTree {
    let mut out = tree.clone();
    for leaf in &mut out.leaves {
        leaf.resolved = Some(ResolvedLight {
            activation_param: 1.0,
            active: true,
            chromaticity,
            strength,
            emission: chromaticity.to_xyz(strength),
            traffic_state: None,
        });
    }
    out
}

/// Writes the resolved emissions onto the tagged mesh faces.
pub fn apply_light_tree(mesh: &mut TriangleMesh, tree: &LightTree) {
    for leaf in &tree.leaves {
        let Some(resolved) = &leaf.resolved else {
            continue;
        };
        for &fi in &leaf.faces {
            let attrs = &mut mesh.attributes[fi as usize];
            attrs.emission = if resolved.active {
                Some(Emission { radiance: resolved.emission, normal: attrs.normal })
            } else {
                None
            };
        }
    }
}

/// Ego-vehicle head light configuration (camera-frame meters).
#[derive(Clone, Copy, Debug)]
pub struct EgoHeadlights {
    pub enabled: bool,
    /// Offset of the right-hand light; the left is mirrored in x.
    pub offset: Vec3,
    pub width: f64,
    pub height: f64,
    pub strength: (f64, f64),
}

impl Default for EgoHeadlights {
    fn default() -> Self {
        EgoHeadlights {
            enabled: true,
            offset: Vec3::new(0.7, 0.6, -0.5),
            width: 0.18,
            height: 0.12,
            strength: (4.0, 8.0),
        }
    }
}

/// Adds two mirrored emissive area lights facing +z. Both share one
/// chromaticity sample (front-light category) and one strength draw. Pass a
/// uniform override to bypass sampling under the lights-instantiation ablation.
pub fn add_ego_headlights(
    mesh: &mut TriangleMesh,
    cfg: &EgoHeadlights,
    db: &IlluminantDb,
    seed: u64,
    uniform_override: Option<(Chromaticity, f64)>,
) -> Result<usize, CoreError> {
    if !cfg.enabled {
        return Ok(0);
    }
    let (chroma, strength) = match uniform_override {
        Some(pair) => pair,
        None => {
            let mut chroma_rng = RngStream::for_tag(seed, "ego-chroma", 0);
            let c = sample_chromaticity("front_light", db, &mut chroma_rng)?;
            let mut strength_rng = RngStream::for_tag(seed, "ego-strength", 0);
            (c, sample_strength(cfg.strength, &mut strength_rng))
        }
    };
    let radiance = chroma.to_xyz(strength);
    let normal = Vec3::new(0.0, 0.0, 1.0);
    for side in [1.0, -1.0] {
        let center = Vec3::new(side * cfg.offset.x, cfg.offset.y, cfg.offset.z);
        let (hw, hh) = (0.5 * cfg.width, 0.5 * cfg.height);
        let corners = [
            center + Vec3::new(-hw, -hh, 0.0),
            center + Vec3::new(hw, -hh, 0.0),
            center + Vec3::new(hw, hh, 0.0),
            center + Vec3::new(-hw, hh, 0.0),
        ];
        mesh.push_emissive_quad(corners, normal, radiance);
    }
    Ok(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Intrinsics;
    use crate::raster::Raster;

    fn tiny_db() -> IlluminantDb {
        let mut db = IlluminantDb::default();
        for label in [
            "window_building",
            "window_parked",
            "window_transport",
            "traffic_light_G",
            "traffic_light_R",
            "traffic_light_O",
            "street_light_HT",
            "street_light_LT",
            "front_light",
            "rear_light",
            "advertisement",
            "inferred",
        ] {
            db.samples
                .insert(String::from(label), alloc::vec![Chromaticity::new(0.4, 0.4)]);
        }
        db
    }

    fn tiny_bounds() -> BoundsTable {
        BoundsTable {
            rows: alloc::vec![
                BoundsRow { group: String::from("N/A"), category: String::from("street_light_HT"), lo: 1.0, hi: 1.0 },
                BoundsRow { group: String::from("N/A"), category: String::from("traffic_light_G"), lo: 1.0, hi: 1.0 },
                BoundsRow { group: String::from("N/A"), category: String::from("traffic_light_R"), lo: 1.0, hi: 1.0 },
                BoundsRow { group: String::from("N/A"), category: String::from("traffic_light_O"), lo: 1.0, hi: 1.0 },
                BoundsRow { group: String::from("car"), category: String::from("parked_front"), lo: 0.1, hi: 0.3 },
                BoundsRow { group: String::from("car"), category: String::from("moving_front"), lo: 0.95, hi: 1.0 },
                BoundsRow { group: String::from("car"), category: String::from("parked_rear"), lo: 0.1, hi: 0.3 },
                BoundsRow { group: String::from("N/A"), category: String::from("window_building"), lo: 0.3, hi: 0.6 },
            ],
        }
    }

    fn tiny_strengths() -> StrengthTable {
        let mut t = StrengthTable::default();
        for label in [
            "window_building",
            "window_parked",
            "window_transport",
            "traffic_light",
            "street_light_HT",
            "street_light_LT",
            "front_light",
            "rear_light",
            "advertisement",
            "inferred",
        ] {
            t.intervals.insert(String::from(label), (2.0, 2.0));
        }
        t
    }

    fn flat_mesh(w: usize, h: usize, lights: &LightMask, instances: &IdMask) -> TriangleMesh {
        let k = Intrinsics::new(w as f64 * 2.0, w as f64 * 2.0, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
        let depth = Raster::constant(w, h, 1, 3.0);
        let grid = crate::mesh::backproject(&depth, &k).unwrap();
        let mut mesh = crate::mesh::triangulate_grid(&grid);
        let albedo = Raster::constant(w, h, 3, 0.4);
        crate::mesh::attach_materials(&mut mesh, &albedo, lights, instances, None);
        mesh
    }

    fn two_front_lights_scene() -> (LightMask, IdMask, BTreeMap<u16, InstanceClass>, TriangleMesh) {
        let (w, h) = (12, 8);
        let mut lights = LightMask::empty(w, h);
        let mut instances = IdMask::new(w, h);
        // Car instance 5 covering the lower half, with two separate front lights.
        for y in 4..8 {
            for x in 0..12 {
                instances.set(x, y, 5);
            }
        }
        for y in 5..7 {
            for x in 1..3 {
                lights.categories.set(x, y, LightCategory::FrontLight.id());
                lights.instances.set(x, y, 1);
            }
            for x in 9..11 {
                lights.categories.set(x, y, LightCategory::FrontLight.id());
                lights.instances.set(x, y, 2);
            }
        }
        let mut classes = BTreeMap::new();
        classes.insert(5u16, InstanceClass::Car);
        let mesh = flat_mesh(w, h, &lights, &instances);
        (lights, instances, classes, mesh)
    }

    #[test]
    fn two_front_lights_share_one_car_group() {
        let (lights, instances, classes, mesh) = two_front_lights_scene();
        let tree = build_light_tree(&lights, &instances, &classes, &mesh, 32);
        assert_eq!(tree.leaves.len(), 2);
        assert_eq!(tree.leaves[0].group, tree.leaves[1].group);
        assert!(matches!(
            tree.groups[tree.leaves[0].group],
            GroupKind::Vehicle { label: "car", instance: 5 }
        ));
        for leaf in &tree.leaves {
            assert!(!leaf.faces.is_empty());
        }
    }

    #[test]
    fn no_light_pixels_build_root_only_tree() {
        let lights = LightMask::empty(6, 6);
        let instances = IdMask::new(6, 6);
        let mesh = flat_mesh(6, 6, &lights, &instances);
        let tree = build_light_tree(&lights, &instances, &BTreeMap::new(), &mesh, 32);
        assert_eq!(tree.groups.len(), 1);
        assert!(tree.leaves.is_empty());
    }

    #[test]
    fn street_light_without_instance_attaches_to_root() {
        let (w, h) = (8, 8);
        let mut lights = LightMask::empty(w, h);
        for y in 1..3 {
            for x in 3..5 {
                lights.categories.set(x, y, LightCategory::StreetLightHt.id());
            }
        }
        let instances = IdMask::new(w, h);
        let mesh = flat_mesh(w, h, &lights, &instances);
        let tree = build_light_tree(&lights, &instances, &BTreeMap::new(), &mesh, 32);
        assert_eq!(tree.leaves.len(), 1);
        assert_eq!(tree.groups[tree.leaves[0].group], GroupKind::Root);
    }

    #[test]
    fn building_windows_cluster_by_row_band() {
        let (w, h) = (10, 12);
        let mut lights = LightMask::empty(w, h);
        let mut instances = IdMask::new(w, h);
        for y in 0..12 {
            for x in 0..10 {
                instances.set(x, y, 3);
            }
        }
        // Two windows near the top, one near the bottom.
        for (x0, y0, inst) in [(1usize, 1usize, 1u16), (6, 1, 2), (4, 9, 3)] {
            for y in y0..y0 + 2 {
                for x in x0..x0 + 2 {
                    lights.categories.set(x, y, LightCategory::WindowBuilding.id());
                    lights.instances.set(x, y, inst);
                }
            }
        }
        let mut classes = BTreeMap::new();
        classes.insert(3u16, InstanceClass::Building);
        let mesh = flat_mesh(w, h, &lights, &instances);
        let tree = build_light_tree(&lights, &instances, &classes, &mesh, 4);
        assert_eq!(tree.leaves.len(), 3);
        assert_eq!(tree.leaves[0].group, tree.leaves[1].group);
        assert_ne!(tree.leaves[0].group, tree.leaves[2].group);
    }

    #[test]
    fn degenerate_bounds_are_deterministic() {
        let mut rng = RngStream::new(1, 1);
        for _ in 0..100 {
            let (y, x) = sample_activation((1.0, 1.0), &mut rng);
            assert_eq!(y, 1.0);
            assert!(x);
        }
        for _ in 0..100 {
            let (_, x) = sample_activation((0.0, 0.0), &mut rng);
            assert!(!x);
        }
    }

    /// Monte Carlo estimate of E[X] = E[Y] = (a + b) / 2.
    #[test]
    fn moving_front_activation_frequency() {
        let n = 100_000;
        let mut active = 0usize;
        for i in 0..n {
            let mut rng = RngStream::for_tag(99, "activation", i as u64);
            let (_, x) = sample_activation((0.95, 1.0), &mut rng);
            if x {
                active += 1;
            }
        }
        let freq = active as f64 / n as f64;
        assert!((freq - 0.975).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn singleton_chromaticity_is_always_picked() {
        let db = tiny_db();
        for i in 0..50 {
            let mut rng = RngStream::for_tag(5, "chromaticity", i);
            let c = sample_chromaticity("front_light", &db, &mut rng).unwrap();
            assert_eq!(c, Chromaticity::new(0.4, 0.4));
        }
    }

    #[test]
    fn missing_category_is_an_error() {
        let db = tiny_db();
        let mut rng = RngStream::new(0, 0);
        assert!(matches!(
            sample_chromaticity("searchlight", &db, &mut rng),
            Err(CoreError::MissingIlluminant(_))
        ));
    }

    /// Uniform pick frequencies over five samples.
    #[test]
    fn chromaticity_picks_are_uniform() {
        let mut db = IlluminantDb::default();
        let samples: Vec<Chromaticity> =
            (0..5).map(|i| Chromaticity::new(0.2 + 0.05 * i as f64, 0.3)).collect();
        db.samples.insert(String::from("advertisement"), samples.clone());
        let n = 100_000;
        let mut counts = [0usize; 5];
        for i in 0..n {
            let mut rng = RngStream::for_tag(7, "chromaticity", i as u64);
            let c = sample_chromaticity("advertisement", &db, &mut rng).unwrap();
            let idx = samples.iter().position(|s| *s == c).unwrap();
            counts[idx] += 1;
        }
        for c in counts {
            let freq = c as f64 / n as f64;
            assert!((freq - 0.2).abs() < 0.01, "freq {freq}");
        }
    }

    #[test]
    fn degenerate_strength_interval() {
        let mut rng = RngStream::new(2, 2);
        assert_eq!(sample_strength((3.5, 3.5), &mut rng), 3.5);
    }

    #[test]
    fn strength_mean_matches_interval_midpoint() {
        let n = 100_000;
        let mut sum = 0.0;
        for i in 0..n {
            let mut rng = RngStream::for_tag(11, "strength", i as u64);
            sum += sample_strength((1.0, 3.0), &mut rng);
        }
        let mean = sum / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn instantiation_is_deterministic_and_shares_group_attributes() {
        let (lights, instances, classes, mesh) = two_front_lights_scene();
        let tree = build_light_tree(&lights, &instances, &classes, &mesh, 32);
        let db = tiny_db();
        let bounds = tiny_bounds();
        let strengths = tiny_strengths();

        let a = instantiate(&tree, &db, &bounds, &strengths, 1234).unwrap();
        let b = instantiate(&tree, &db, &bounds, &strengths, 1234).unwrap();
        for (la, lb) in a.leaves.iter().zip(b.leaves.iter()) {
            assert_eq!(la.resolved, lb.resolved);
        }

        let r0 = a.leaves[0].resolved.unwrap();
        let r1 = a.leaves[1].resolved.unwrap();
        assert_eq!(r0.chromaticity, r1.chromaticity);
        assert_eq!(r0.strength, r1.strength);
        assert_eq!(r0.activation_param, r1.activation_param);
        assert_eq!(r0.active, r1.active);
    }

    #[test]
    fn equal_energy_chromaticity_gives_equal_xyz() {
        let c = Chromaticity::new(1.0 / 3.0, 1.0 / 3.0);
        let xyz = c.to_xyz(3.0);
        assert!((xyz.x - 3.0).abs() < 1e-12);
        assert_eq!(xyz.y, 3.0);
        assert!((xyz.z - 3.0).abs() < 1e-12);
    }

    #[test]
    fn emission_luminance_equals_strength_exactly() {
        let (lights, instances, classes, mesh) = two_front_lights_scene();
        let tree = build_light_tree(&lights, &instances, &classes, &mesh, 32);
        let resolved =
            instantiate(&tree, &tiny_db(), &tiny_bounds(), &tiny_strengths(), 77).unwrap();
        for leaf in &resolved.leaves {
            let r = leaf.resolved.unwrap();
            if r.active {
                assert_eq!(r.emission.y, r.strength);
            }
        }
    }

    #[test]
    fn ego_headlights_disabled_adds_nothing() {
        let mut mesh = flat_mesh(4, 4, &LightMask::empty(4, 4), &IdMask::new(4, 4));
        let faces = mesh.faces.len();
        let cfg = EgoHeadlights { enabled: false, ..EgoHeadlights::default() };
        let added = add_ego_headlights(&mut mesh, &cfg, &tiny_db(), 0, None).unwrap();
        assert_eq!(added, 0);
        assert_eq!(mesh.faces.len(), faces);
    }

    #[test]
    fn ego_headlights_are_mirrored_and_point_forward() {
        let mut mesh = flat_mesh(4, 4, &LightMask::empty(4, 4), &IdMask::new(4, 4));
        let before = mesh.faces.len();
        let added =
            add_ego_headlights(&mut mesh, &EgoHeadlights::default(), &tiny_db(), 3, None).unwrap();
        assert_eq!(added, 2);
        assert_eq!(mesh.faces.len(), before + 4);
        let new_faces = &mesh.attributes[before..];
        let mut centers = Vec::new();
        for (i, attrs) in new_faces.iter().enumerate() {
            let e = attrs.emission.expect("emissive");
            assert_eq!(e.normal, Vec3::new(0.0, 0.0, 1.0));
            let f = mesh.faces[before + i];
            let c = (mesh.vertices[f[0] as usize]
                + mesh.vertices[f[1] as usize]
                + mesh.vertices[f[2] as usize])
                / 3.0;
            centers.push(c.x);
        }
        assert!(centers.iter().any(|x| *x > 0.0));
        assert!(centers.iter().any(|x| *x < 0.0));

        // Directionality toward the scene center is positive for forward normals.
        let toward = Vec3::new(0.0, -0.05, 5.0).normalized();
        let g = crate::tracer::directionality_weight(toward, Vec3::new(0.0, 0.0, 1.0));
        assert!(g > 0.0);
    }

    #[test]
    fn bounds_lookup_falls_back_to_na_then_any() {
        let bounds = tiny_bounds();
        assert_eq!(bounds.lookup("car", "parked_front").unwrap(), (0.1, 0.3));
        // No bus row: falls back to the first group carrying the category.
        assert_eq!(bounds.lookup("bus", "parked_front").unwrap(), (0.1, 0.3));
        // Categories only under N/A resolve from anywhere.
        assert_eq!(bounds.lookup("car", "street_light_HT").unwrap(), (1.0, 1.0));
        assert!(bounds.lookup("car", "unknown_thing").is_err());
    }

    #[test]
    fn uniform_instantiation_turns_everything_on() {
        let (lights, instances, classes, mesh) = two_front_lights_scene();
        let tree = build_light_tree(&lights, &instances, &classes, &mesh, 32);
        let resolved = instantiate_uniform(&tree, Chromaticity::EQUAL_ENERGY, 2.5);
        for leaf in &resolved.leaves {
            let r = leaf.resolved.unwrap();
            assert!(r.active);
            assert_eq!(r.strength, 2.5);
            assert!((r.emission.x - 2.5).abs() < 1e-12);
        }
    }
}
