//! Finite lattice boxes in `Z^d` with a stable lexicographic site order.

use crate::error::Error;
use crate::Result;
use std::collections::BTreeMap;

/// A lattice site in `Z^d`.
pub type Site = Vec<i64>;

/// `l^1` distance between two sites.
pub fn l1_dist(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `l^1` norm of a site.
pub fn l1_norm(a: &[i64]) -> i64 {
    a.iter().map(|x| x.abs()).sum()
}

/// All sites within `l^1` distance `radius` of `center`.
pub fn l1_ball(center: &[i64], radius: i64) -> Vec<Site> {
    let mut out = Vec::new();
    let mut site = center.to_vec();
    ball_rec(center, radius, 0, &mut site, &mut out);
    out.sort();
    out
}

fn ball_rec(center: &[i64], budget: i64, coord: usize, site: &mut Site, out: &mut Vec<Site>) {
    if coord == center.len() {
        out.push(site.clone());
        return;
    }
    for step in -budget..=budget {
        site[coord] = center[coord] + step;
        ball_rec(center, budget - step.abs(), coord + 1, site, out);
    }
    site[coord] = center[coord];
}

/// An ordered finite subset of `Z^d`.
///
/// Sites are stored sorted lexicographically; the index of a site is its
/// position in that order and is stable across identical constructions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    dim: usize,
    sites: Vec<Site>,
    index: BTreeMap<Site, usize>,
}

impl LatticeBox {
    /// Build from an explicit site list. Sites must be non-empty, of equal
    /// dimension and pairwise distinct.
    pub fn from_sites(mut sites: Vec<Site>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidBox("no sites".into()));
        }
        let dim = sites[0].len();
        if dim == 0 {
            return Err(Error::InvalidBox("zero-dimensional site".into()));
        }
        if sites.iter().any(|s| s.len() != dim) {
            return Err(Error::InvalidBox("mixed site dimensions".into()));
        }
        sites.sort();
        for w in sites.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidBox(format!("duplicate site {:?}", w[0])));
            }
        }
        let index = sites
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        Ok(LatticeBox { dim, sites, index })
    }

    /// One-dimensional interval `[lo, hi]`.
    pub fn interval(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidBox(format!("empty interval [{lo}, {hi}]")));
        }
        LatticeBox::from_sites((lo..=hi).map(|n| vec![n]).collect())
    }

    /// One-dimensional interval with exactly `count` sites, centered at the
    /// origin: `[-count/2, count - count/2 - 1]`.
    pub fn interval_sites(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidBox("zero site count".into()));
        }
        let lo = -((count / 2) as i64);
        LatticeBox::interval(lo, lo + count as i64 - 1)
    }

    /// Axis-aligned product box from per-coordinate inclusive ranges.
    pub fn rect(ranges: &[(i64, i64)]) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::InvalidBox("no ranges".into()));
        }
        let mut sites = vec![Vec::with_capacity(ranges.len())];
        for &(lo, hi) in ranges {
            if hi < lo {
                return Err(Error::InvalidBox(format!("empty range [{lo}, {hi}]")));
            }
            let mut next = Vec::with_capacity(sites.len() * (hi - lo + 1) as usize);
            for prefix in &sites {
                for c in lo..=hi {
                    let mut s = prefix.clone();
                    s.push(c);
                    next.push(s);
                }
            }
            sites = next;
        }
        LatticeBox::from_sites(sites)
    }

    /// `l^1` ball of the given radius around a center.
    pub fn ball(center: &[i64], radius: i64) -> Result<Self> {
        if radius < 0 {
            return Err(Error::InvalidBox(format!("negative radius {radius}")));
        }
        LatticeBox::from_sites(l1_ball(center, radius))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        self.index.get(site).copied()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        self.index.contains_key(site)
    }

    /// Translate every site by `shift`. Lexicographic order is preserved, so
    /// site indices are unchanged.
    pub fn translate(&self, shift: &[i64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::InvalidBox("shift dimension mismatch".into()));
        }
        let sites = self
            .sites
            .iter()
            .map(|s| s.iter().zip(shift).map(|(a, b)| a + b).collect())
            .collect();
        LatticeBox::from_sites(sites)
    }

    /// Largest `l^1` radius of the box as seen from the origin-most useful
    /// for interval/ball boxes centered at 0.
    pub fn radius_from_origin(&self) -> i64 {
        self.sites.iter().map(|s| l1_norm(s)).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_ordering_stable() {
        let b = LatticeBox::interval(-2, 2).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b.site(0), &vec![-2]);
        assert_eq!(b.index_of(&[0]), Some(2));
    }

    #[test]
    fn interval_sites_centering() {
        let b = LatticeBox::interval_sites(400).unwrap();
        assert_eq!(b.len(), 400);
        assert_eq!(b.site(0), &vec![-200]);
        assert_eq!(b.site(399), &vec![199]);
    }

    #[test]
    fn ball_d2_cross() {
        let b = LatticeBox::ball(&[0, 0], 1).unwrap();
        // l^1 unit ball in d = 2: center plus four neighbors.
        assert_eq!(b.len(), 5);
        assert!(b.contains(&[0, 1]));
        assert!(!b.contains(&[1, 1]));
    }

    #[test]
    fn ball_d1_size() {
        let b = LatticeBox::ball(&[0], 2).unwrap();
        assert_eq!(
            b.sites().to_vec(),
            vec![vec![-2], vec![-1], vec![0], vec![1], vec![2]]
        );
    }

    #[test]
    fn duplicates_rejected() {
        assert!(LatticeBox::from_sites(vec![vec![1], vec![1]]).is_err());
    }

    #[test]
    fn translate_preserves_indices() {
        let b = LatticeBox::rect(&[(0, 1), (0, 1)]).unwrap();
        let t = b.translate(&[5, -3]).unwrap();
        for i in 0..b.len() {
            let s = b.site(i);
            let expect: Site = vec![s[0] + 5, s[1] - 3];
            assert_eq!(t.site(i), &expect);
        }
    }
}
