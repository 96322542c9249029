//! Resonance geometry: the shrinking interval ladder on the circle, the level
//! function measuring how resonant a lattice site is, and the basic/extended
//! region families on which each diagonalization step acts.
//!
//! The ladder radii are `beta^(s) = beta^{s / ln(s+1)}` with `beta^(0) := 1`
//! (the exponent is 0/0 at s = 0 and the step-0 interval is the whole
//! circle). A center `n` is active at step `s` for phase `x` when the shifted
//! phase `{x + omega . n}` falls in the step-`s` interval around the ladder
//! center; its basic region is then the l^1-ball of radius `s`. Extended
//! regions absorb every earlier-step extended region that meets the basic
//! ball, and the family produced at a given step must be pairwise disjoint —
//! overlap means the ladder base is too large for the frequency and is a hard
//! error, not a warning.

use crate::circle::{circle_dist, frac};
use crate::error::Error;
use crate::model::frequency::Frequency;
use crate::model::lattice::{l1_ball, l1_dist, LatticeBox, Site};
use crate::Result;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Open interval on the circle `R/Z`, possibly wrapping across 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusInterval {
    center: f64,
    radius: f64,
}

impl TorusInterval {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !center.is_finite() || !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "torus interval needs finite center and radius > 0, got ({center}, {radius})"
            )));
        }
        Ok(TorusInterval {
            center: frac(center),
            radius,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Mod-1 membership; a radius ≥ 1/2 covers every point.
    pub fn contains(&self, x: f64) -> bool {
        circle_dist(x, self.center) < self.radius
    }

    /// Same center, radius scaled by `factor` in (0, 1].
    pub fn shrink(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "shrink factor must lie in (0,1], got {factor}"
            )));
        }
        TorusInterval::new(self.center, self.radius * factor)
    }
}

/// Ladder radius `beta^(s) = beta^{s / ln(s+1)}`, with `beta^(0) = 1`.
pub fn beta_s(beta: f64, s: u32) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "ladder base must lie in (0,1), got {beta}"
        )));
    }
    if s == 0 {
        return Ok(1.0);
    }
    let exponent = f64::from(s) / f64::from(s + 1).ln();
    Ok(beta.powf(exponent))
}

/// Intervals `I_1 .. I_s_max` around `x0`, index `l-1` holding step `l`.
pub fn interval_ladder(beta: f64, x0: f64, s_max: u32) -> Result<Vec<TorusInterval>> {
    (1..=s_max)
        .map(|s| TorusInterval::new(x0, beta_s(beta, s)?))
        .collect()
}

/// Largest `l` with `2 ||n . omega|| <= beta^(l)`; 0 when even `l = 1` fails.
///
/// The ladder radii decrease to 0 while `||n . omega||` is a fixed positive
/// number for non-resonant frequencies, so the forward scan terminates; an
/// exact resonance (including `n = 0`) has no largest `l` and is an error.
pub fn level(n: &Site, freq: &Frequency, beta: f64) -> Result<u32> {
    let d = 2.0 * freq.dist(n);
    if d == 0.0 {
        return Err(Error::ResonantFrequency { n: n.clone() });
    }
    let mut l = 0u32;
    while d <= beta_s(beta, l + 1)? {
        l += 1;
    }
    Ok(l)
}

/// Basic region of center `n` at step `s`: the l^1-ball of radius `s` around
/// `n` when the shifted phase lies in `I_s = intervals[s-1]`, else empty.
pub fn basic_region(
    n: &Site,
    s: u32,
    x: f64,
    intervals: &[TorusInterval],
    freq: &Frequency,
) -> Result<Vec<Site>> {
    let interval = interval_for(intervals, s)?;
    if interval.contains(freq.phase(x, n)) {
        Ok(l1_ball(n, i64::from(s)))
    } else {
        Ok(Vec::new())
    }
}

fn interval_for(intervals: &[TorusInterval], s: u32) -> Result<&TorusInterval> {
    if s == 0 {
        return Err(Error::InvalidInput("step must be >= 1".into()));
    }
    intervals.get(s as usize - 1).ok_or_else(|| {
        Error::InvalidInput(format!(
            "interval ladder has {} levels, step {} requested",
            intervals.len(),
            s
        ))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Basic,
    Extended,
}

/// Disjoint family of site-sets indexed by their centers, at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionFamily {
    step: u32,
    kind: RegionKind,
    regions: BTreeMap<Site, BTreeSet<Site>>,
    /// True when some region lost sites to the ambient clip.
    clipped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionEntry {
    pub center: Site,
    pub sites: Vec<Site>,
}

/// JSON-friendly view (map keys are lattice sites, which JSON cannot key).
#[derive(Debug, Clone, Serialize)]
pub struct RegionExport {
    pub step: u32,
    pub kind: RegionKind,
    pub clipped: bool,
    pub regions: Vec<RegionEntry>,
}

impl RegionFamily {
    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn clipped(&self) -> bool {
        self.clipped
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn centers(&self) -> impl Iterator<Item = &Site> {
        self.regions.keys()
    }

    pub fn get(&self, center: &Site) -> Option<&BTreeSet<Site>> {
        self.regions.get(center)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, &BTreeSet<Site>)> {
        self.regions.iter()
    }

    /// Largest l^1-diameter over the family (0 for empty).
    pub fn max_diameter(&self) -> u32 {
        self.regions.values().map(|r| diameter_l1(r)).max().unwrap_or(0)
    }

    pub fn export(&self) -> RegionExport {
        RegionExport {
            step: self.step,
            kind: self.kind,
            clipped: self.clipped,
            regions: self
                .regions
                .iter()
                .map(|(center, sites)| RegionEntry {
                    center: center.clone(),
                    sites: sites.iter().cloned().collect(),
                })
                .collect(),
        }
    }
}

/// l^1-diameter of a site-set.
pub fn diameter_l1(sites: &BTreeSet<Site>) -> u32 {
    let v: Vec<&Site> = sites.iter().collect();
    let mut best = 0u32;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            best = best.max(l1_dist(v[i], v[j]) as u32);
        }
    }
    best
}

/// Extended regions at step `s` for phase `x`: each active basic ball plus
/// every lower-step extended region meeting it, built bottom-up so lower
/// steps are computed exactly once. Regions are clipped to the ambient box
/// after the overlap check (overlap is decided on the true sets).
pub fn extended_regions(
    s: u32,
    x: f64,
    intervals: &[TorusInterval],
    freq: &Frequency,
    ambient: &LatticeBox,
) -> Result<RegionFamily> {
    interval_for(intervals, s)?;
    let mut below: Vec<BTreeMap<Site, BTreeSet<Site>>> = Vec::new();
    for step in 1..=s {
        let mut family: BTreeMap<Site, BTreeSet<Site>> = BTreeMap::new();
        for center in ambient.sites() {
            let basic = basic_region(center, step, x, intervals, freq)?;
            if basic.is_empty() {
                continue;
            }
            let basic: BTreeSet<Site> = basic.into_iter().collect();
            let mut extended = basic.clone();
            for lower in &below {
                for region in lower.values() {
                    if !region.is_disjoint(&basic) {
                        extended.extend(region.iter().cloned());
                    }
                }
            }
            family.insert(center.clone(), extended);
        }
        check_disjoint(step, &family)?;
        below.push(family);
    }
    let mut regions = below.pop().unwrap_or_default();
    let mut clipped = false;
    for sites in regions.values_mut() {
        let before = sites.len();
        sites.retain(|m| ambient.contains(m));
        clipped |= sites.len() != before;
    }
    regions.retain(|_, sites| !sites.is_empty());
    Ok(RegionFamily {
        step: s,
        kind: RegionKind::Extended,
        regions,
        clipped,
    })
}

fn check_disjoint(step: u32, family: &BTreeMap<Site, BTreeSet<Site>>) -> Result<()> {
    let entries: Vec<(&Site, &BTreeSet<Site>)> = family.iter().collect();
    for i in 0..entries.len() {
        for j in (i + 1)..entries.len() {
            if !entries[i].1.is_disjoint(entries[j].1) {
                return Err(Error::RegionOverlap {
                    step,
                    center_a: entries[i].0.clone(),
                    center_b: entries[j].0.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Union of the step-`s` extended region of `n` over a phase grid of `I_s`
/// (midpoint grid, staying inside the open interval). The grid stands in for
/// the continuum union; `grid_points` = 64 is the reference resolution.
pub fn union_region(
    n: &Site,
    s: u32,
    intervals: &[TorusInterval],
    freq: &Frequency,
    ambient: &LatticeBox,
    grid_points: usize,
) -> Result<BTreeSet<Site>> {
    let interval = *interval_for(intervals, s)?;
    // The region of center n at phase x is nonempty only when {x + omega . n}
    // lies in I_s, so sweep that window: x = center - omega . n + offset.
    let window = TorusInterval::new(interval.center() - freq.dot(n), interval.radius())?;
    union_region_over(n, s, &window, intervals, freq, ambient, grid_points)
}

/// Union of the step-`s` extended region of `n` over a phase grid of an
/// arbitrary window (midpoint grid). Phases where the region is inactive
/// contribute nothing.
pub fn union_region_over(
    n: &Site,
    s: u32,
    window: &TorusInterval,
    intervals: &[TorusInterval],
    freq: &Frequency,
    ambient: &LatticeBox,
    grid_points: usize,
) -> Result<BTreeSet<Site>> {
    if grid_points == 0 {
        return Err(Error::InvalidInput("phase grid must be non-empty".into()));
    }
    let mut union = BTreeSet::new();
    for k in 0..grid_points {
        let offset = window.radius() * ((2 * k + 1) as f64 / grid_points as f64 - 1.0);
        let family = extended_regions(s, frac(window.center() + offset), intervals, freq, ambient)?;
        if let Some(region) = family.get(n) {
            union.extend(region.iter().cloned());
        }
    }
    Ok(union)
}

/// Support algebra for products of block operators: nodes are the sets of
/// both families, edges join intersecting sets, output is the union over each
/// connected component (ordered by smallest member site). Each family must be
/// internally disjoint; a product of operators supported on `familyA` then
/// `familyB` is supported on the composition.
pub fn compose_supports(
    family_a: &[BTreeSet<Site>],
    family_b: &[BTreeSet<Site>],
) -> Vec<BTreeSet<Site>> {
    let sets: Vec<&BTreeSet<Site>> = family_a.iter().chain(family_b.iter()).collect();
    let mut parent: Vec<usize> = (0..sets.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            if !sets[i].is_disjoint(sets[j]) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut components: BTreeMap<usize, BTreeSet<Site>> = BTreeMap::new();
    for i in 0..sets.len() {
        let root = find(&mut parent, i);
        components
            .entry(root)
            .or_default()
            .extend(sets[i].iter().cloned());
    }
    let mut out: Vec<BTreeSet<Site>> = components.into_values().collect();
    out.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
    out
}

/// One arithmetic near-collision found by [`separation_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct NearCollision {
    /// Center separation `k = |n - m|` (only the difference matters).
    pub separation: i64,
    /// Larger of the two steps.
    pub s: u32,
    /// Smaller of the two steps.
    pub l: u32,
    /// Required lower bound `ln(1/beta) * l^{1 + mu/2}` on `s`.
    pub required: f64,
}

impl NearCollision {
    pub fn margin(&self) -> f64 {
        f64::from(self.s) - self.required
    }
}

#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub ok: bool,
    pub pairs_checked: usize,
    pub near_collisions: Vec<NearCollision>,
    pub violations: Vec<NearCollision>,
}

/// Exhaustive scan (one-dimensional lattice) certifying that whenever basic
/// regions at steps `s >= l` around distinct centers can be simultaneously
/// active and approach within distance `10 s`, the larger step obeys
/// `s >= ln(1/beta) * l^{1 + mu/2}`.
///
/// Two balls of radii `s`, `l` at centers `n`, `m` co-activate at some phase
/// iff the two phase windows overlap, i.e. `||(n - m) . omega|| <
/// beta^(s) + beta^(l)`; their lattice distance is `|n - m| - s - l`. Only
/// the center difference enters either condition, so the scan runs over
/// differences `1 ..= 2 * n_max`, covering every pair with `|n|, |m| <=
/// n_max`.
pub fn separation_scan(
    freq: &Frequency,
    beta: f64,
    n_max: i64,
    s_max: u32,
) -> Result<SeparationReport> {
    if freq.dim() != 1 {
        return Err(Error::InvalidInput(
            "separation scan is defined for one-dimensional lattices".into(),
        ));
    }
    if n_max < 1 || s_max < 1 {
        return Err(Error::InvalidInput("scan range must be positive".into()));
    }
    let radii: Vec<f64> = (0..=s_max).map(|s| beta_s(beta, s)).collect::<Result<_>>()?;
    let mut near_collisions = Vec::new();
    let mut violations = Vec::new();
    let mut pairs_checked = 0usize;
    for k in 1..=(2 * n_max) {
        let dist = freq.dist(&vec![k]);
        if dist == 0.0 {
            return Err(Error::ResonantFrequency { n: vec![k] });
        }
        for s in 1..=s_max {
            for l in 1..=s {
                pairs_checked += 1;
                let co_active = dist < radii[s as usize] + radii[l as usize];
                let lattice_gap = k - i64::from(s) - i64::from(l);
                if co_active && lattice_gap <= 10 * i64::from(s) {
                    let required =
                        (1.0 / beta).ln() * f64::from(l).powf(1.0 + freq.mu() / 2.0);
                    let hit = NearCollision {
                        separation: k,
                        s,
                        l,
                        required,
                    };
                    if hit.margin() < 0.0 {
                        violations.push(hit.clone());
                    }
                    near_collisions.push(hit);
                }
            }
        }
    }
    Ok(SeparationReport {
        ok: violations.is_empty(),
        pairs_checked,
        near_collisions,
        violations,
    })
}
