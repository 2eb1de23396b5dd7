//! Division of the myocardium into six segments and two annulus disks.
//!
//! The construction follows the label map only:
//!
//! 1. annulus points A, B where MYO meets LA (A2C/A4C), or LA and AO (ALAX);
//! 2. apex C, the LV pixel furthest (in mm) from the midpoint of A and B;
//! 3. the endocardial border (MYO pixels 4-adjacent to LV) is traced from A
//!    to C and from B to C and each side is split into thirds by arclength,
//!    giving D, E (left) and F, G (right);
//! 4. H..L are the outer-border pixels closest to C, D, E, F, G;
//! 5. the cut lines D–I, E–J, C–H, F–K, G–L split MYO into six segments;
//! 6. ellipses of a fixed radius in mm around A and B form the annulus
//!    regions;
//! 7. everything is clipped to the sector, and a region with more than half
//!    of its pixels outside the sector is flagged as excluded.
//!
//! Ties between equally near (or far) pixels go to the one nearer the LV
//! centroid, then to the side holding more LV, then row-major. Work that
//! belongs to the right-hand side of the heart uses the mirrored column
//! order, so that mirroring the input mirrors the output.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{read_file, write_file, Label, LabelMask, Mask, Spacing};

/// Default annulus disk radius in millimetres.
pub const ANNULUS_RADIUS_MM: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum View {
    #[serde(rename = "A2C")]
    A2c,
    #[serde(rename = "A4C")]
    A4c,
    #[serde(rename = "ALAX")]
    Alax,
}

impl View {
    pub fn as_str(self) -> &'static str {
        match self {
            View::A2c => "A2C",
            View::A4c => "A4C",
            View::Alax => "ALAX",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A2C" => Ok(View::A2c),
            "A4C" => Ok(View::A4c),
            "ALAX" | "PLAX_APICAL" => Ok(View::Alax),
            _ => Err(Error::InvalidInput(format!("unknown view {s:?}"))),
        }
    }
}

/// Pixel coordinate.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Point {
    pub row: usize,
    pub col: usize,
}

impl Point {
    pub const fn new(row: usize, col: usize) -> Self {
        Point { row, col }
    }

    #[inline]
    fn from_index(i: usize, width: usize) -> Self {
        Point {
            row: i / width,
            col: i % width,
        }
    }

    #[inline]
    fn index(self, width: usize) -> usize {
        self.row * width + self.col
    }

    #[inline]
    fn rc(self) -> (f64, f64) {
        (self.row as f64, self.col as f64)
    }

    pub fn mirrored(self, width: usize) -> Point {
        Point {
            row: self.row,
            col: width - 1 - self.col,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionId {
    BasalLeft,
    MidLeft,
    ApicalLeft,
    ApicalRight,
    MidRight,
    BasalRight,
    AnnulusLeft,
    AnnulusRight,
}

impl RegionId {
    pub const ALL: [RegionId; 8] = [
        RegionId::BasalLeft,
        RegionId::MidLeft,
        RegionId::ApicalLeft,
        RegionId::ApicalRight,
        RegionId::MidRight,
        RegionId::BasalRight,
        RegionId::AnnulusLeft,
        RegionId::AnnulusRight,
    ];

    /// Myocardial segments in border order (base left → apex → base right).
    pub const SEGMENTS: [RegionId; 6] = [
        RegionId::BasalLeft,
        RegionId::MidLeft,
        RegionId::ApicalLeft,
        RegionId::ApicalRight,
        RegionId::MidRight,
        RegionId::BasalRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionId::BasalLeft => "basal_left",
            RegionId::MidLeft => "mid_left",
            RegionId::ApicalLeft => "apical_left",
            RegionId::ApicalRight => "apical_right",
            RegionId::MidRight => "mid_right",
            RegionId::BasalRight => "basal_right",
            RegionId::AnnulusLeft => "annulus_left",
            RegionId::AnnulusRight => "annulus_right",
        }
    }

    /// The region that occupies the mirror image of this one.
    pub fn mirrored(self) -> RegionId {
        match self {
            RegionId::BasalLeft => RegionId::BasalRight,
            RegionId::MidLeft => RegionId::MidRight,
            RegionId::ApicalLeft => RegionId::ApicalRight,
            RegionId::ApicalRight => RegionId::ApicalLeft,
            RegionId::MidRight => RegionId::MidLeft,
            RegionId::BasalRight => RegionId::BasalLeft,
            RegionId::AnnulusLeft => RegionId::AnnulusRight,
            RegionId::AnnulusRight => RegionId::AnnulusLeft,
        }
    }

    pub fn is_segment(self) -> bool {
        !matches!(self, RegionId::AnnulusLeft | RegionId::AnnulusRight)
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegionId::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Format(format!("unknown region id {s:?}")))
    }
}

/// Anatomical landmarks of the region division.
///
/// `endo_left_thirds` is ordered from the left base towards the apex (D, E);
/// `endo_right_thirds` from the apex towards the right base (F, G);
/// `outer_matches` holds H, I, J, K, L, the outer-border matches of
/// C, D, E, F, G.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub base_left: Point,
    pub base_right: Point,
    pub apex: Point,
    pub endo_left_thirds: [Point; 2],
    pub endo_right_thirds: [Point; 2],
    pub outer_matches: [Point; 5],
}

impl LandmarkSet {
    /// Landmarks of the horizontally mirrored frame; left and right swap.
    pub fn mirrored(&self, width: usize) -> LandmarkSet {
        let m = |p: Point| p.mirrored(width);
        let [d, e] = self.endo_left_thirds;
        let [f, g] = self.endo_right_thirds;
        let [h, i, j, k, l] = self.outer_matches;
        LandmarkSet {
            base_left: m(self.base_right),
            base_right: m(self.base_left),
            apex: m(self.apex),
            endo_left_thirds: [m(g), m(f)],
            endo_right_thirds: [m(e), m(d)],
            outer_matches: [m(h), m(l), m(k), m(j), m(i)],
        }
    }

    fn all(&self) -> [Point; 12] {
        let [d, e] = self.endo_left_thirds;
        let [f, g] = self.endo_right_thirds;
        let [h, i, j, k, l] = self.outer_matches;
        [
            self.base_left,
            self.base_right,
            self.apex,
            d,
            e,
            f,
            g,
            h,
            i,
            j,
            k,
            l,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    /// Sector-clipped pixels.
    pub mask: Mask,
    pub excluded: bool,
    pub pre_clip_pixels: usize,
    pub outside_pixels: usize,
}

impl Region {
    /// Fraction of the pre-clipping pixels that fall outside the sector.
    pub fn outside_fraction(&self) -> f64 {
        if self.pre_clip_pixels == 0 {
            0.0
        } else {
            self.outside_pixels as f64 / self.pre_clip_pixels as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionSet {
    pub view: View,
    pub width: usize,
    pub height: usize,
    pub spacing: Spacing,
    pub landmarks: LandmarkSet,
    pub regions: BTreeMap<RegionId, Region>,
}

impl RegionSet {
    pub fn region(&self, id: RegionId) -> Option<&Region> {
        self.regions.get(&id)
    }

    /// Regions in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (RegionId, &Region)> {
        self.regions.iter().map(|(&id, r)| (id, r))
    }

    /// Mirror image of this region set, with left and right keys swapped.
    pub fn mirrored(&self) -> RegionSet {
        RegionSet {
            view: self.view,
            width: self.width,
            height: self.height,
            spacing: self.spacing,
            landmarks: self.landmarks.mirrored(self.width),
            regions: self
                .regions
                .iter()
                .map(|(&id, r)| {
                    (
                        id.mirrored(),
                        Region {
                            mask: r.mask.mirrored(),
                            ..r.clone()
                        },
                    )
                })
                .collect(),
        }
    }

    /// Checks that the six segments are pairwise disjoint and that their
    /// union is exactly the sector-clipped MYO of `mask`.
    pub fn check_partition(&self, mask: &LabelMask) -> Result<()> {
        let myo = mask.clipped_class_mask(Label::Myo);
        let mut owner: Vec<Option<RegionId>> = vec![None; myo.bits().len()];
        for id in RegionId::SEGMENTS {
            let region = self
                .region(id)
                .ok_or_else(|| Error::Invariant(format!("segment {id} missing")))?;
            region.mask.check_dims(myo.dims())?;
            for i in region.mask.indices() {
                if let Some(prev) = owner[i] {
                    return Err(Error::Invariant(format!(
                        "pixel {i} belongs to both {prev} and {id}"
                    )));
                }
                owner[i] = Some(id);
            }
        }
        for (i, (&in_myo, o)) in myo.bits().iter().zip(&owner).enumerate() {
            if in_myo != o.is_some() {
                return Err(Error::Invariant(format!(
                    "pixel {i}: myocardium {in_myo}, assigned {o:?}"
                )));
            }
        }
        Ok(())
    }
}

// ------------------------------------------------------------------ helpers

/// Which side of the heart a computation belongs to; decides the column
/// order used for tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Center,
    Right,
}

impl Side {
    #[inline]
    fn key(self, p: Point) -> (usize, isize) {
        match self {
            Side::Right => (p.row, -(p.col as isize)),
            Side::Left | Side::Center => (p.row, p.col as isize),
        }
    }

    fn col_steps(self) -> [isize; 3] {
        match self {
            Side::Right => [1, 0, -1],
            Side::Left | Side::Center => [-1, 0, 1],
        }
    }
}

fn neighbors(p: Point, width: usize, height: usize, eight: bool, side: Side) -> Vec<Point> {
    let mut out = Vec::with_capacity(8);
    for dr in [-1isize, 0, 1] {
        for dc in side.col_steps() {
            if (dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0) {
                continue;
            }
            let r = p.row as isize + dr;
            let c = p.col as isize + dc;
            if r >= 0 && c >= 0 && (r as usize) < height && (c as usize) < width {
                out.push(Point::new(r as usize, c as usize));
            }
        }
    }
    out
}

/// A point with rational coordinates `(sr / n, sc / n)`.
///
/// Distances to it are computed from integers scaled by `n`, so mirroring
/// the image only flips signs and every comparison comes out the same.
#[derive(Clone, Copy, Debug)]
struct Target {
    sr: i64,
    sc: i64,
    n: i64,
}

impl Target {
    fn at(p: Point) -> Target {
        Target {
            sr: p.row as i64,
            sc: p.col as i64,
            n: 1,
        }
    }

    fn midpoint(a: Point, b: Point) -> Target {
        Target {
            sr: (a.row + b.row) as i64,
            sc: (a.col + b.col) as i64,
            n: 2,
        }
    }

    fn centroid(points: &[Point]) -> Target {
        Target {
            sr: points.iter().map(|p| p.row as i64).sum(),
            sc: points.iter().map(|p| p.col as i64).sum(),
            n: points.len() as i64,
        }
    }

    /// Squared distance in mm, scaled by `n²`.
    fn dist2(&self, p: Point, spacing: Spacing) -> f64 {
        let dr = (self.n * p.row as i64 - self.sr) as f64;
        let dc = (self.n * p.col as i64 - self.sc) as f64;
        dr * dr * spacing.depth * spacing.depth + dc * dc * spacing.width * spacing.width
    }

    /// Compares column positions exactly.
    fn cmp_col(&self, other: &Target) -> Ordering {
        (self.sc * other.n).cmp(&(other.sc * self.n))
    }
}

/// How to choose among equally distant candidates.
#[derive(Clone, Copy, Debug)]
enum Tie<'a> {
    /// Row-major order.
    Left,
    /// Row-major with columns mirrored.
    Right,
    /// Closer to the centroid of `mass` first. Two candidates in the same
    /// row then go by which side of the column between them holds more of
    /// `mass`; otherwise row-major. Every step mirrors consistently.
    Toward { centroid: Target, mass: &'a [Point] },
}

impl Tie<'_> {
    fn cmp(self, a: Point, b: Point, spacing: Spacing) -> Ordering {
        match self {
            Tie::Left => a.cmp(&b),
            Tie::Right => (a.row, Reverse(a.col)).cmp(&(b.row, Reverse(b.col))),
            Tie::Toward { centroid, mass } => centroid
                .dist2(a, spacing)
                .total_cmp(&centroid.dist2(b, spacing))
                .then_with(|| {
                    if a.row == b.row && a.col != b.col {
                        side_balance(mass, a, b)
                    } else {
                        Ordering::Equal
                    }
                })
                .then(a.cmp(&b)),
        }
    }
}

/// `Less` when `a`'s side of the column halfway between `a` and `b` is
/// heavier: more points, then the larger sorted list of (row, distance
/// from the axis).
fn side_balance(mass: &[Point], a: Point, b: Point) -> Ordering {
    let axis2 = (a.col + b.col) as isize;
    let toward_a: isize = if a.col < b.col { -1 } else { 1 };
    let mut sides: [Vec<(usize, isize)>; 2] = Default::default();
    for p in mass {
        let off = (2 * p.col as isize - axis2) * toward_a;
        match off.cmp(&0) {
            Ordering::Greater => sides[0].push((p.row, off)),
            Ordering::Less => sides[1].push((p.row, -off)),
            Ordering::Equal => {}
        }
    }
    sides.iter_mut().for_each(|v| v.sort_unstable());
    (sides[1].len(), &sides[1]).cmp(&(sides[0].len(), &sides[0]))
}

/// Candidate closest to `target` in mm.
fn nearest(
    candidates: impl IntoIterator<Item = Point>,
    target: Target,
    spacing: Spacing,
    tie: Tie<'_>,
) -> Option<Point> {
    let candidates: Vec<Point> = candidates.into_iter().collect();
    let best = candidates
        .iter()
        .map(|&p| (target.dist2(p, spacing), p))
        .min_by(|(da, a), (db, b)| da.total_cmp(db).then_with(|| tie.cmp(*a, *b, spacing)))
        .map(|(_, p)| p)?;
    let Tie::Toward { mass, .. } = tie else {
        return Some(best);
    };
    match twin_axis(&candidates, best, target, spacing, mass) {
        Some(axis) => {
            let on_axis: Vec<Point> = candidates
                .into_iter()
                .filter(|p| axis.contains(&p.col))
                .collect();
            Some(nearest(on_axis, target, spacing, Tie::Left).unwrap_or(best))
        }
        None => Some(best),
    }
}

/// Columns on the vertical axis through `target` (one, or the two either
/// side of a half-integer axis) when `best` has a mirror twin across it that
/// nothing can tell apart: an equally distant candidate with `mass`
/// mirror-symmetric about the same axis.
fn twin_axis(
    candidates: &[Point],
    best: Point,
    target: Target,
    spacing: Spacing,
    mass: &[Point],
) -> Option<Vec<usize>> {
    if (2 * target.sc) % target.n != 0 {
        return None;
    }
    let axis2 = (2 * target.sc / target.n) as usize;
    let twin_col = axis2.checked_sub(best.col)?;
    if twin_col == best.col {
        return None;
    }
    let twin = Point::new(best.row, twin_col);
    let tied = candidates.contains(&twin)
        && target.dist2(twin, spacing) == target.dist2(best, spacing)
        && side_balance(mass, best, twin) == Ordering::Equal;
    let cols = if axis2.is_multiple_of(2) {
        vec![axis2 / 2]
    } else {
        vec![axis2 / 2, axis2 / 2 + 1]
    };
    tied.then_some(cols)
}

/// LV pixels, which steer centre-line tie-breaks.
fn lv_points(mask: &LabelMask) -> Result<(Target, Vec<Point>)> {
    let lv: Vec<Point> = points_of(&mask.class_mask(Label::Lv)).collect();
    if lv.is_empty() {
        return Err(Error::EmptyRegion("LV lumen is empty".into()));
    }
    Ok((Target::centroid(&lv), lv))
}

fn points_of(mask: &Mask) -> impl Iterator<Item = Point> + '_ {
    let w = mask.width();
    mask.indices().map(move |i| Point::from_index(i, w))
}

/// Pixels of class `from` that touch (8-connectivity) a pixel of class `to`.
fn contact_mask(mask: &LabelMask, from: Label, to: Label) -> Mask {
    let (w, h) = mask.dims();
    Mask::from_fn(w, h, |r, c| {
        mask.label(r, c) == from
            && neighbors(Point::new(r, c), w, h, true, Side::Center)
                .iter()
                .any(|q| mask.label(q.row, q.col) == to)
    })
}

/// 8-connected components, in row-major order of their first pixel.
fn clusters(mask: &Mask) -> Vec<Vec<Point>> {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for start in mask.indices() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![Point::from_index(start, w)];
        let mut comp = Vec::new();
        while let Some(p) = stack.pop() {
            comp.push(p);
            for q in neighbors(p, w, h, true, Side::Center) {
                let qi = q.index(w);
                if mask.bits()[qi] && !seen[qi] {
                    seen[qi] = true;
                    stack.push(q);
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out
}

fn largest(mut clusters: Vec<Vec<Point>>) -> Option<Vec<Point>> {
    // Stable sort keeps row-major discovery order among equal sizes.
    clusters.sort_by_key(|c| std::cmp::Reverse(c.len()));
    clusters.into_iter().next()
}

fn check_view(mask: &LabelMask, view: View) -> Result<()> {
    let has_ao = mask.contains(Label::Ao);
    match view {
        View::A2c | View::A4c if has_ao => Err(Error::Validation(format!(
            "AO label unexpected for view {view}"
        ))),
        View::Alax if !has_ao => Err(Error::Validation("AO label missing for view ALAX".into())),
        _ => Ok(()),
    }
}

// --------------------------------------------------------------- landmarks

/// Annulus points (left, right): where MYO meets LA, or LA and AO for ALAX.
///
/// Each contact cluster is reduced to its centroid, snapped to the nearest
/// MYO pixel.
pub fn extract_annulus_points(mask: &LabelMask, view: View) -> Result<(Point, Point)> {
    check_view(mask, view)?;
    if !mask.contains(Label::Myo) {
        return Err(Error::AnnulusNotFound("no MYO pixels".into()));
    }
    let pair: Vec<Vec<Point>> = match view {
        View::A2c | View::A4c => {
            let mut found = clusters(&contact_mask(mask, Label::Myo, Label::La));
            if found.len() < 2 {
                return Err(Error::AnnulusNotFound(format!(
                    "found {} MYO/LA contact cluster(s), need two",
                    found.len()
                )));
            }
            found.sort_by_key(|c| std::cmp::Reverse(c.len()));
            found.truncate(2);
            found
        }
        View::Alax => {
            let la = largest(clusters(&contact_mask(mask, Label::Myo, Label::La)))
                .ok_or_else(|| Error::AnnulusNotFound("MYO does not touch LA".into()))?;
            let ao = largest(clusters(&contact_mask(mask, Label::Myo, Label::Ao)))
                .ok_or_else(|| Error::AnnulusNotFound("MYO does not touch AO".into()))?;
            vec![la, ao]
        }
    };

    let mut centers: Vec<Target> = pair.iter().map(|c| Target::centroid(c)).collect();
    centers.sort_by(|a, b| a.cmp_col(b).then((a.sr * b.n).cmp(&(b.sr * a.n))));
    let myo = mask.class_mask(Label::Myo);
    let spacing = mask.spacing();
    let left = nearest(points_of(&myo), centers[0], spacing, Tie::Left);
    let right = nearest(points_of(&myo), centers[1], spacing, Tie::Right);
    match (left, right) {
        (Some(a), Some(b)) if a != b => Ok((a, b)),
        _ => Err(Error::AnnulusNotFound(
            "annulus contacts collapse onto one pixel".into(),
        )),
    }
}

/// LV pixel furthest (in mm) from the midpoint of the two base points.
///
/// Ties go to the pixel closer to the LV centroid, then to the smaller
/// row and column.
pub fn extract_apex(mask: &LabelMask, base: (Point, Point)) -> Result<Point> {
    let mid = Target::midpoint(base.0, base.1);
    let spacing = mask.spacing();
    let (centroid, lv) = lv_points(mask)?;
    let tie = Tie::Toward {
        centroid,
        mass: &lv,
    };
    let (_, best) = lv
        .iter()
        .copied()
        .map(|p| (mid.dist2(p, spacing), p))
        .max_by(|(da, a), (db, b)| da.total_cmp(db).then_with(|| tie.cmp(*b, *a, spacing)))
        .ok_or_else(|| Error::EmptyRegion("LV lumen is empty".into()))?;
    // A lumen mirror-symmetric about the base axis makes the farthest pixels
    // come in twins that no rule can order; fall back to the axis.
    if let Some(axis) = twin_axis(&lv, best, mid, spacing, &lv) {
        if let Some(&p) = lv
            .iter()
            .filter(|p| axis.contains(&p.col) && mid.dist2(**p, spacing) > 0.0)
            .max_by(|a, b| {
                mid.dist2(**a, spacing)
                    .total_cmp(&mid.dist2(**b, spacing))
                    .then(b.cmp(a))
            })
        {
            return Ok(p);
        }
    }
    Ok(best)
}

/// MYO pixels 4-adjacent to the LV.
pub fn endocardial_border(mask: &LabelMask) -> Mask {
    let (w, h) = mask.dims();
    Mask::from_fn(w, h, |r, c| {
        mask.label(r, c) == Label::Myo
            && neighbors(Point::new(r, c), w, h, false, Side::Center)
                .iter()
                .any(|q| mask.label(q.row, q.col) == Label::Lv)
    })
}

/// MYO pixels 4-adjacent to background or lying on the image edge.
pub fn outer_border(mask: &LabelMask) -> Mask {
    let (w, h) = mask.dims();
    Mask::from_fn(w, h, |r, c| {
        mask.label(r, c) == Label::Myo
            && (r == 0
                || c == 0
                || r + 1 == h
                || c + 1 == w
                || neighbors(Point::new(r, c), w, h, false, Side::Center)
                    .iter()
                    .any(|q| mask.label(q.row, q.col) == Label::Background))
    })
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    key: (usize, isize),
    index: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.key.cmp(&self.key))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn step_length(spacing: Spacing, a: Point, b: Point) -> f64 {
    let dr = if a.row == b.row { 0.0 } else { spacing.depth };
    let dc = if a.col == b.col { 0.0 } else { spacing.width };
    (dr * dr + dc * dc).sqrt()
}

/// Shortest 8-connected path through `allowed` from `from` to `to`, with
/// steps weighted by their physical length.
fn shortest_path(
    allowed: &Mask,
    from: Point,
    to: Point,
    spacing: Spacing,
    side: Side,
) -> Result<Vec<Point>> {
    let (w, h) = allowed.dims();
    if !allowed.get(from.row, from.col) || !allowed.get(to.row, to.col) {
        return Err(Error::InvalidInput(format!(
            "path endpoints {from} and {to} must lie on the border"
        )));
    }
    let mut dist = vec![f64::INFINITY; w * h];
    let mut prev = vec![usize::MAX; w * h];
    let mut done = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    let start = from.index(w);
    let goal = to.index(w);
    dist[start] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        key: side.key(from),
        index: start,
    });
    while let Some(HeapEntry { dist: d, index, .. }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        if index == goal {
            break;
        }
        let p = Point::from_index(index, w);
        for q in neighbors(p, w, h, true, side) {
            let qi = q.index(w);
            if !allowed.bits()[qi] || done[qi] {
                continue;
            }
            let nd = d + step_length(spacing, p, q);
            if nd < dist[qi] {
                dist[qi] = nd;
                prev[qi] = index;
                heap.push(HeapEntry {
                    dist: nd,
                    key: side.key(q),
                    index: qi,
                });
            }
        }
    }
    if !done[goal] {
        return Err(Error::InvalidInput(format!(
            "disconnected endocardial border between {from} and {to}"
        )));
    }
    let mut path = vec![to];
    let mut cur = goal;
    while cur != start {
        cur = prev[cur];
        path.push(Point::from_index(cur, w));
    }
    path.reverse();
    Ok(path)
}

/// Cumulative arclength (mm) along a pixel path.
pub fn arclength(path: &[Point], spacing: Spacing) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.len());
    let mut acc = 0.0;
    for (i, p) in path.iter().enumerate() {
        if i > 0 {
            acc += step_length(spacing, path[i - 1], *p);
        }
        out.push(acc);
    }
    out
}

/// Indices of the path pixels closest to 1/3 and 2/3 of the arclength,
/// measured from `path[0]`. Ties go to the earlier pixel.
pub fn split_thirds(path: &[Point], spacing: Spacing) -> [usize; 2] {
    let cum = arclength(path, spacing);
    let total = *cum.last().unwrap_or(&0.0);
    [1.0 / 3.0, 2.0 / 3.0].map(|frac| {
        let target = total * frac;
        cum.iter()
            .enumerate()
            .min_by(|(ia, a), (ib, b)| {
                (*a - target)
                    .abs()
                    .total_cmp(&(*b - target).abs())
                    .then(ia.cmp(ib))
            })
            .map(|(i, _)| i)
            .unwrap_or(0)
    })
}

/// Ordered endocardial border, split into thirds on each side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndocardialDivision {
    /// Border pixels from the left base up to the apex.
    pub left_path: Vec<Point>,
    /// Border pixels from the right base up to the apex.
    pub right_path: Vec<Point>,
    /// Indices into `left_path` of D and E.
    pub left_split: [usize; 2],
    /// Indices into `right_path` of G and F (measured from the right base).
    pub right_split: [usize; 2],
}

impl EndocardialDivision {
    /// D, E.
    pub fn left_thirds(&self) -> [Point; 2] {
        self.left_split.map(|i| self.left_path[i])
    }

    /// F, G (apex side first).
    pub fn right_thirds(&self) -> [Point; 2] {
        [
            self.right_path[self.right_split[1]],
            self.right_path[self.right_split[0]],
        ]
    }

    /// The full border in orientation base left → apex → base right.
    pub fn full_path(&self) -> Vec<Point> {
        let mut path = self.left_path.clone();
        path.extend(self.right_path.iter().rev().skip(1));
        path
    }
}

/// Traces the endocardial border from each base point to the apex and
/// divides both sides into three parts of equal arclength.
pub fn divide_endocardium(
    mask: &LabelMask,
    base_left: Point,
    base_right: Point,
    apex: Point,
) -> Result<EndocardialDivision> {
    let border = endocardial_border(mask);
    if border.is_empty() {
        return Err(Error::EmptyRegion("endocardial border is empty".into()));
    }
    let spacing = mask.spacing();
    let pts: Vec<Point> = points_of(&border).collect();
    let (centroid, lv) = lv_points(mask)?;
    let towards_lv = Tie::Toward {
        centroid,
        mass: &lv,
    };
    let start = nearest(
        pts.iter().copied(),
        Target::at(base_left),
        spacing,
        Tie::Left,
    )
    .unwrap();
    let end = nearest(
        pts.iter().copied(),
        Target::at(base_right),
        spacing,
        Tie::Right,
    )
    .unwrap();
    let top = nearest(pts.iter().copied(), Target::at(apex), spacing, towards_lv).unwrap();
    let left_path = shortest_path(&border, start, top, spacing, Side::Left)?;
    let right_path = shortest_path(&border, end, top, spacing, Side::Right)?;
    Ok(EndocardialDivision {
        left_split: split_thirds(&left_path, spacing),
        right_split: split_thirds(&right_path, spacing),
        left_path,
        right_path,
    })
}

/// Outer-border pixels closest to C, D, E, F, G (in that order).
///
/// The inner point itself is never its own match, so where the wall is one
/// pixel thick the match is a neighbouring border pixel and the cut line
/// keeps two distinct endpoints.
pub fn match_outer_border(mask: &LabelMask, inner: [Point; 5]) -> Result<[Point; 5]> {
    let border = outer_border(mask);
    if border.is_empty() {
        return Err(Error::EmptyRegion("outer MYO border is empty".into()));
    }
    let spacing = mask.spacing();
    let pts: Vec<Point> = points_of(&border).collect();
    let (centroid, lv) = lv_points(mask)?;
    let towards_lv = Tie::Toward {
        centroid,
        mass: &lv,
    };
    let ties = [towards_lv, Tie::Left, Tie::Left, Tie::Right, Tie::Right];
    let mut out = [Point::default(); 5];
    for ((o, p), tie) in out.iter_mut().zip(inner).zip(ties) {
        *o = nearest(
            pts.iter().copied().filter(|&q| q != p),
            Target::at(p),
            spacing,
            tie,
        )
        .ok_or_else(|| Error::EmptyRegion("outer MYO border is empty".into()))?;
    }
    Ok(out)
}

/// Runs landmark extraction (steps 1-4).
pub fn compute_landmarks(mask: &LabelMask, view: View) -> Result<LandmarkSet> {
    let (base_left, base_right) = extract_annulus_points(mask, view)?;
    let apex = extract_apex(mask, (base_left, base_right))?;
    let division = divide_endocardium(mask, base_left, base_right, apex)?;
    let [d, e] = division.left_thirds();
    let [f, g] = division.right_thirds();
    let outer_matches = match_outer_border(mask, [apex, d, e, f, g])?;
    Ok(LandmarkSet {
        base_left,
        base_right,
        apex,
        endo_left_thirds: [d, e],
        endo_right_thirds: [f, g],
        outer_matches,
    })
}

// ----------------------------------------------------------- partitioning

/// Pixels whose closed unit square touches the segment `a`–`b`.
///
/// Works on doubled integer coordinates so the test is exact and symmetric.
pub fn cut_line_pixels(a: Point, b: Point) -> Vec<Point> {
    let (ax, ay) = (2 * a.col as i64, 2 * a.row as i64);
    let (bx, by) = (2 * b.col as i64, 2 * b.row as i64);
    let (dx, dy) = (bx - ax, by - ay);
    let mut out = Vec::new();
    for r in a.row.min(b.row)..=a.row.max(b.row) {
        for c in a.col.min(b.col)..=a.col.max(b.col) {
            let (cx, cy) = (2 * c as i64, 2 * r as i64);
            let mut lo = i64::MAX;
            let mut hi = i64::MIN;
            for (ox, oy) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
                let s = dx * (cy + oy - ay) - dy * (cx + ox - ax);
                lo = lo.min(s);
                hi = hi.max(s);
            }
            if lo <= 0 && hi >= 0 {
                out.push(Point::new(r, c));
            }
        }
    }
    out
}

/// Apical rank of each segment index (0 apical, 2 basal).
const SEGMENT_RANK: [u8; 6] = [2, 1, 0, 0, 1, 2];
const LEFT_SEGMENTS: u8 = 0b000_111;
const RIGHT_SEGMENTS: u8 = 0b111_000;

fn cross(o: Point, a: Point, p: Point) -> i64 {
    let (ar, ac) = (a.row as i64 - o.row as i64, a.col as i64 - o.col as i64);
    let (pr, pc) = (p.row as i64 - o.row as i64, p.col as i64 - o.col as i64);
    ar * pc - ac * pr
}

/// Picks one segment out of a set of equally good candidates.
///
/// If both sides compete, the side of the apical cut line C–H decides. A
/// pixel on that line goes to the side whose competing segments are
/// currently smaller. Then the more apical segment wins.
struct Resolver {
    apex: Point,
    apex_outer: Point,
    left_sign: i64,
    sizes: [usize; 6],
    /// Side that takes pixels lying exactly on the C–H line when segment
    /// sizes tie.
    preferred: u8,
}

impl Resolver {
    fn new(landmarks: &LandmarkSet) -> Self {
        let apex = landmarks.apex;
        let apex_outer = landmarks.outer_matches[0];
        // The line may pass both base points on one side; the difference
        // still says which side is the left one, and mirrors consistently.
        let bl = cross(apex, apex_outer, landmarks.base_left);
        let br = cross(apex, apex_outer, landmarks.base_right);
        let left_sign = match (bl - br).signum() {
            0 => 1,
            s => s,
        };
        Resolver {
            apex,
            apex_outer,
            left_sign,
            sizes: [0; 6],
            preferred: LEFT_SEGMENTS,
        }
    }

    /// Refreshes segment sizes and the side preference from the current
    /// labelling. Each side is summarized by its pixel offsets from the
    /// apex column, measured away from the axis, so a mirrored input yields
    /// the mirrored preference.
    fn count(&mut self, labels: &[Option<u8>], width: usize) {
        self.sizes = [0; 6];
        let mut sig: [Vec<(usize, isize)>; 2] = Default::default();
        let axis = self.apex.col as isize;
        for (i, l) in labels.iter().enumerate() {
            let Some(l) = *l else { continue };
            self.sizes[l as usize] += 1;
            let p = Point::from_index(i, width);
            let c = p.col as isize;
            if LEFT_SEGMENTS & (1 << l) != 0 {
                sig[0].push((p.row, axis - c));
            } else {
                sig[1].push((p.row, c - axis));
            }
        }
        sig.iter_mut().for_each(|v| v.sort_unstable());
        let key = |k: usize| (sig[k].len(), &sig[k]);
        self.preferred = if key(1) < key(0) {
            RIGHT_SEGMENTS
        } else {
            LEFT_SEGMENTS
        };
    }

    fn pick(&self, candidates: u8, p: Point) -> u8 {
        let mut set = candidates;
        if set & LEFT_SEGMENTS != 0 && set & RIGHT_SEGMENTS != 0 {
            let s = cross(self.apex, self.apex_outer, p).signum();
            if s != 0 {
                set &= if s == self.left_sign {
                    LEFT_SEGMENTS
                } else {
                    RIGHT_SEGMENTS
                };
            } else {
                let size = |side: u8| -> usize {
                    (0..6)
                        .filter(|i| set & side & (1 << i) != 0)
                        .map(|i| self.sizes[i])
                        .sum()
                };
                set &= match size(LEFT_SEGMENTS).cmp(&size(RIGHT_SEGMENTS)) {
                    Ordering::Less => LEFT_SEGMENTS,
                    Ordering::Greater => RIGHT_SEGMENTS,
                    Ordering::Equal => self.preferred,
                };
            }
        }
        (0..6u8)
            .filter(|i| set & (1 << i) != 0)
            .min_by_key(|&i| (SEGMENT_RANK[i as usize], i))
            .expect("non-empty candidate set")
    }
}

/// Level-synchronous multi-source growth over `allowed` pixels (4-connected).
fn grow(
    labels: &mut [Option<u8>],
    allowed: &[bool],
    width: usize,
    height: usize,
    resolver: &Resolver,
) {
    let mut frontier: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.map(|_| i))
        .collect();
    while !frontier.is_empty() {
        let mut next: BTreeMap<usize, u8> = BTreeMap::new();
        for &i in &frontier {
            let label = labels[i].expect("frontier pixels are labelled");
            for q in neighbors(
                Point::from_index(i, width),
                width,
                height,
                false,
                Side::Center,
            ) {
                let qi = q.index(width);
                if allowed[qi] && labels[qi].is_none() {
                    *next.entry(qi).or_insert(0) |= 1 << label;
                }
            }
        }
        frontier = Vec::with_capacity(next.len());
        for (qi, cands) in next {
            labels[qi] = Some(resolver.pick(cands, Point::from_index(qi, width)));
            frontier.push(qi);
        }
    }
}

fn nearest_on_path(path: &[Point], p: Point, spacing: Spacing) -> usize {
    path.iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            spacing
                .dist2(a.rc(), p.rc())
                .total_cmp(&spacing.dist2(b.rc(), p.rc()))
                .then(ia.cmp(ib))
        })
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Assigns every MYO pixel (before sector clipping) to one of the six
/// segments; returns one label per pixel (`None` outside MYO).
fn partition_myocardium(mask: &LabelMask, landmarks: &LandmarkSet) -> Result<Vec<Option<u8>>> {
    let (w, h) = mask.dims();
    let spacing = mask.spacing();
    let myo = mask.class_mask(Label::Myo);
    let division = divide_endocardium(
        mask,
        landmarks.base_left,
        landmarks.base_right,
        landmarks.apex,
    )?;

    let [d, e] = landmarks.endo_left_thirds;
    let [f, g] = landmarks.endo_right_thirds;
    let [hh, i, j, k, l] = landmarks.outer_matches;
    let cuts = [(d, i), (e, j), (landmarks.apex, hh), (f, k), (g, l)];
    let mut on_cut = vec![false; w * h];
    for (a, b) in cuts {
        if a == b {
            return Err(Error::InvalidInput(format!(
                "degenerate cut line: coincident endpoints at {a}"
            )));
        }
        for p in cut_line_pixels(a, b) {
            on_cut[p.index(w)] = true;
        }
    }

    // Seeds: border pixels between consecutive split points.
    let mut seeds: Vec<Option<u8>> = vec![None; w * h];
    let mut conflict = vec![false; w * h];
    let mut seed = |p: Point, label: u8| {
        let pi = p.index(w);
        if on_cut[pi] || conflict[pi] {
            return;
        }
        match seeds[pi] {
            Some(l) if l != label => {
                seeds[pi] = None;
                conflict[pi] = true;
            }
            _ => seeds[pi] = Some(label),
        }
    };
    let ld = nearest_on_path(&division.left_path, d, spacing);
    let le = nearest_on_path(&division.left_path, e, spacing);
    let rg = nearest_on_path(&division.right_path, g, spacing);
    let rf = nearest_on_path(&division.right_path, f, spacing);
    let last_left = division.left_path.len() - 1;
    for (idx, &p) in division.left_path.iter().enumerate().take(last_left) {
        let label = match idx {
            x if x < ld => Some(0),
            x if x > ld && x < le => Some(1),
            x if x > le => Some(2),
            _ => None,
        };
        if let Some(label) = label {
            seed(p, label);
        }
    }
    let last_right = division.right_path.len() - 1;
    for (idx, &p) in division.right_path.iter().enumerate().take(last_right) {
        let label = match idx {
            x if x < rg => Some(5),
            x if x > rg && x < rf => Some(4),
            x if x > rf => Some(3),
            _ => None,
        };
        if let Some(label) = label {
            seed(p, label);
        }
    }

    let mut resolver = Resolver::new(landmarks);
    let mut labels = seeds;
    resolver.count(&labels, w);
    let inside_cuts: Vec<bool> = myo
        .bits()
        .iter()
        .zip(&on_cut)
        .map(|(&m, &c)| m && !c)
        .collect();
    grow(&mut labels, &inside_cuts, w, h, &resolver);
    resolver.count(&labels, w);
    grow(&mut labels, myo.bits(), w, h, &resolver);

    // MYO islands not connected to the border take the nearest label.
    let orphans: Vec<usize> = myo.indices().filter(|&i| labels[i].is_none()).collect();
    if !orphans.is_empty() {
        let labelled: Vec<(Point, u8)> = labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|l| (Point::from_index(i, w), l)))
            .collect();
        if labelled.is_empty() {
            return Err(Error::Invariant(
                "no myocardial pixel could be labelled".into(),
            ));
        }
        for oi in orphans {
            let p = Point::from_index(oi, w);
            let best = labelled
                .iter()
                .map(|(q, _)| spacing.dist2(q.rc(), p.rc()))
                .fold(f64::INFINITY, f64::min);
            let cands = labelled
                .iter()
                .filter(|(q, _)| spacing.dist2(q.rc(), p.rc()) == best)
                .fold(0u8, |acc, (_, l)| acc | (1 << l));
            labels[oi] = Some(resolver.pick(cands, p));
        }
    }
    Ok(labels)
}

/// Ellipse of `radius_mm` around `center` (circle in physical units).
fn annulus_disk(
    width: usize,
    height: usize,
    spacing: Spacing,
    center: Point,
    radius_mm: f64,
) -> Mask {
    let r2 = radius_mm * radius_mm;
    Mask::from_fn(width, height, |r, c| {
        spacing.dist2((r as f64, c as f64), center.rc()) <= r2
    })
}

fn clip(pre: Mask, sector: &Mask) -> Region {
    let pre_clip_pixels = pre.count();
    let mask = pre.and(sector);
    let outside_pixels = pre_clip_pixels - mask.count();
    Region {
        excluded: 2 * outside_pixels > pre_clip_pixels,
        mask,
        pre_clip_pixels,
        outside_pixels,
    }
}

/// Builds the eight regions from a complete landmark set (steps 5-7).
pub fn build_regions(
    mask: &LabelMask,
    view: View,
    landmarks: &LandmarkSet,
    annulus_radius_mm: f64,
) -> Result<RegionSet> {
    let (w, h) = mask.dims();
    if let Some(p) = landmarks.all().iter().find(|p| p.row >= h || p.col >= w) {
        return Err(Error::InvalidInput(format!(
            "landmark {p} outside the image"
        )));
    }
    if mask.label(landmarks.apex.row, landmarks.apex.col) != Label::Lv {
        return Err(Error::InvalidInput(format!(
            "apex {} is not inside the LV",
            landmarks.apex
        )));
    }
    if !(annulus_radius_mm.is_finite() && annulus_radius_mm > 0.0) {
        return Err(Error::InvalidInput(format!(
            "annulus radius must be positive, got {annulus_radius_mm}"
        )));
    }
    let labels = partition_myocardium(mask, landmarks)?;
    let spacing = mask.spacing();
    let sector = mask.sector();
    let mut regions = BTreeMap::new();
    for (k, id) in RegionId::SEGMENTS.into_iter().enumerate() {
        let pre = Mask::from_fn(w, h, |r, c| labels[r * w + c] == Some(k as u8));
        regions.insert(id, clip(pre, sector));
    }
    for (id, center) in [
        (RegionId::AnnulusLeft, landmarks.base_left),
        (RegionId::AnnulusRight, landmarks.base_right),
    ] {
        let pre = annulus_disk(w, h, spacing, center, annulus_radius_mm);
        regions.insert(id, clip(pre, sector));
    }
    Ok(RegionSet {
        view,
        width: w,
        height: h,
        spacing,
        landmarks: *landmarks,
        regions,
    })
}

/// Full region division of one label map.
pub fn divide_regions(mask: &LabelMask, view: View, annulus_radius_mm: f64) -> Result<RegionSet> {
    let landmarks = compute_landmarks(mask, view)?;
    build_regions(mask, view, &landmarks, annulus_radius_mm)
}

// --------------------------------------------------------------------- JSON

/// Schema tag written into every region file.
pub const REGIONS_FORMAT: &str = "echoiq-regions/1";

#[derive(Serialize, Deserialize)]
struct RegionsFile {
    format: String,
    view: View,
    width: usize,
    height: usize,
    spacing: Spacing,
    landmarks: LandmarkSet,
    regions: Vec<RegionEntry>,
}

#[derive(Serialize, Deserialize)]
struct RegionEntry {
    id: RegionId,
    excluded: bool,
    pixels: usize,
    pre_clip_pixels: usize,
    outside_pixels: usize,
    /// `[start, length]` runs of set pixels, row-major indices.
    runs: Vec<[usize; 2]>,
}

/// Run-length encoding of the set pixels of a mask.
pub fn encode_runs(mask: &Mask) -> Vec<[usize; 2]> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &b) in mask.bits().iter().enumerate() {
        match (b, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push([s, i - s]);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push([s, mask.bits().len() - s]);
    }
    runs
}

pub fn decode_runs(width: usize, height: usize, runs: &[[usize; 2]]) -> Result<Mask> {
    let n = width * height;
    let mut bits = vec![false; n];
    let mut last_end = 0;
    for &[start, len] in runs {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= n && len > 0 && start >= last_end)
            .ok_or_else(|| Error::Format(format!("invalid run [{start}, {len}]")))?;
        bits[start..end].fill(true);
        last_end = end;
    }
    Mask::new(width, height, bits)
}

impl RegionSet {
    pub fn to_json(&self) -> String {
        let file = RegionsFile {
            format: REGIONS_FORMAT.into(),
            view: self.view,
            width: self.width,
            height: self.height,
            spacing: self.spacing,
            landmarks: self.landmarks,
            regions: self
                .iter()
                .map(|(id, r)| RegionEntry {
                    id,
                    excluded: r.excluded,
                    pixels: r.mask.count(),
                    pre_clip_pixels: r.pre_clip_pixels,
                    outside_pixels: r.outside_pixels,
                    runs: encode_runs(&r.mask),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("region set serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<RegionSet> {
        let file: RegionsFile =
            serde_json::from_str(s).map_err(|e| Error::Format(format!("regions JSON: {e}")))?;
        if file.format != REGIONS_FORMAT {
            return Err(Error::Format(format!(
                "unsupported regions format {:?}",
                file.format
            )));
        }
        let mut regions = BTreeMap::new();
        for entry in file.regions {
            let mask = decode_runs(file.width, file.height, &entry.runs)?;
            if mask.count() != entry.pixels {
                return Err(Error::Format(format!(
                    "region {}: pixel count does not match runs",
                    entry.id
                )));
            }
            let region = Region {
                mask,
                excluded: entry.excluded,
                pre_clip_pixels: entry.pre_clip_pixels,
                outside_pixels: entry.outside_pixels,
            };
            if regions.insert(entry.id, region).is_some() {
                return Err(Error::Format(format!("region {} listed twice", entry.id)));
            }
        }
        Ok(RegionSet {
            view: file.view,
            width: file.width,
            height: file.height,
            spacing: file.spacing,
            landmarks: file.landmarks,
            regions,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_json().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RegionSet> {
        let path = path.as_ref();
        let data = read_file(path)?;
        let text = std::str::from_utf8(&data)
            .map_err(|_| Error::Format(format!("{}: not UTF-8", path.display())))?;
        RegionSet::from_json(text)
    }
}
