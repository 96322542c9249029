//! Branch labeling: the unique numeration of finite-volume eigenvalues by
//! lattice sites such that eigenvalue order agrees with the circle order of
//! the site phases. Under this numeration each branch, viewed as a function
//! of the phase, is non-decreasing on its own continuity interval, which is
//! what makes the diagonal of the rotation scheme comparable to a genuine
//! eigenvalue branch.

use std::collections::BTreeSet;

use crate::circle::frac;
use crate::error::Error;
use crate::model::frequency::Frequency;
use crate::model::lattice::{LatticeBox, Site};
use crate::model::operator::SymOperator;
use crate::model::potential::PotentialSpec;
use crate::oracle::eig::{dense_eig, EigDecomposition};
use crate::regions::{union_region_over, TorusInterval};
use crate::Result;

/// Pairing between the sites of a box and the eigenvalues of the operator on
/// it, in the order-preserving numeration.
#[derive(Debug, Clone)]
pub struct BranchTable {
    eigen_of_site: Vec<usize>,
    values: Vec<f64>,
    phases: Vec<f64>,
    phase_ties: usize,
    eigen_ties: usize,
    min_phase_spacing: f64,
    min_eigen_spacing: f64,
}

impl BranchTable {
    /// Branch value at the box's `site_index`-th site.
    pub fn value(&self, site_index: usize) -> f64 {
        self.values[site_index]
    }

    /// All branch values in box site order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the eigenvalue column assigned to the site.
    pub fn eigen_index(&self, site_index: usize) -> usize {
        self.eigen_of_site[site_index]
    }

    /// Site phase used for the ordering.
    pub fn phase(&self, site_index: usize) -> f64 {
        self.phases[site_index]
    }

    /// True when neither the phases nor the eigenvalues had exact ties, so
    /// the numeration is the unique one.
    pub fn is_unique(&self) -> bool {
        self.phase_ties == 0 && self.eigen_ties == 0
    }

    pub fn min_phase_spacing(&self) -> f64 {
        self.min_phase_spacing
    }

    pub fn min_eigen_spacing(&self) -> f64 {
        self.min_eigen_spacing
    }

    /// Verify the defining equivalence on every pair of sites: branch values
    /// compare exactly as the phases do.
    pub fn check_ordering(&self) -> bool {
        let n = self.values.len();
        for i in 0..n {
            for j in 0..n {
                if (self.values[i] <= self.values[j]) != (self.phases[i] <= self.phases[j]) {
                    return false;
                }
            }
        }
        true
    }
}

/// Assign eigenvalues to sites by matching eigenvalue rank to the circle
/// rank of the site phases `{x + omega . n}`.
pub fn label_branches(op: &SymOperator, dec: &EigDecomposition) -> Result<BranchTable> {
    let boxed = op.lattice();
    let n = boxed.len();
    if dec.values.len() != n {
        return Err(Error::CardinalityMismatch {
            left: n,
            right: dec.values.len(),
        });
    }
    let freq_dot = |site: &Site| -> f64 {
        site.iter()
            .zip(op.omega())
            .map(|(&k, w)| k as f64 * w)
            .sum()
    };
    let phases: Vec<f64> = (0..n)
        .map(|i| frac(op.phase() + freq_dot(boxed.site(i))))
        .collect();
    let mut site_order: Vec<usize> = (0..n).collect();
    site_order.sort_by(|&a, &b| phases[a].partial_cmp(&phases[b]).unwrap());

    let mut phase_ties = 0usize;
    let mut min_phase_spacing = f64::INFINITY;
    for w in site_order.windows(2) {
        let d = phases[w[1]] - phases[w[0]];
        if d == 0.0 {
            phase_ties += 1;
        }
        min_phase_spacing = min_phase_spacing.min(d);
    }
    let mut eigen_ties = 0usize;
    let mut min_eigen_spacing = f64::INFINITY;
    for w in dec.values.windows(2) {
        let d = w[1] - w[0];
        if d == 0.0 || (w[0] == f64::NEG_INFINITY && w[1] == f64::NEG_INFINITY) {
            eigen_ties += 1;
        }
        if d.is_finite() {
            min_eigen_spacing = min_eigen_spacing.min(d);
        }
    }

    let mut eigen_of_site = vec![0usize; n];
    let mut values = vec![0.0f64; n];
    for (rank, &site) in site_order.iter().enumerate() {
        eigen_of_site[site] = rank;
        values[site] = dec.values[rank];
    }
    Ok(BranchTable {
        eigen_of_site,
        values,
        phases,
        phase_ties,
        eigen_ties,
        min_phase_spacing,
        min_eigen_spacing,
    })
}

/// Assemble, decompose, and return the labeled branch value at `site`.
pub fn branch_value(
    spec: &PotentialSpec,
    eps: f64,
    freq: &Frequency,
    x: f64,
    boxed: &LatticeBox,
    site: &Site,
    tol: f64,
) -> Result<f64> {
    let op = SymOperator::assemble(spec, eps, freq, x, boxed)?;
    let dec = dense_eig(&op, tol)?;
    let table = label_branches(&op, &dec)?;
    let idx = boxed.index_of(site).ok_or_else(|| {
        Error::InvalidInput(format!("site {site:?} is not in the box"))
    })?;
    Ok(table.value(idx))
}

/// Outcome of comparing an iteratively produced diagonal value against the
/// directly computed eigenvalue branch through the origin.
#[derive(Debug, Clone)]
pub struct BranchCheck {
    pub scheme_value: f64,
    pub oracle_value: f64,
    pub distance: f64,
    pub bound: f64,
    pub within: bool,
}

/// Compare `scheme_value` to the origin branch of the operator restricted to
/// `lambda` at phase `x`. The admissible distance is `max(bound, floor)`;
/// `floor` absorbs eigensolver noise when the analytic bound shrinks below
/// what finite precision can certify.
pub fn branch_distance_check(
    scheme_value: f64,
    bound: f64,
    floor: f64,
    spec: &PotentialSpec,
    eps: f64,
    freq: &Frequency,
    x: f64,
    lambda: &BTreeSet<Site>,
) -> Result<BranchCheck> {
    let origin = vec![0i64; freq.dim()];
    if !lambda.contains(&origin) {
        return Err(Error::DomainConditionViolated {
            reason: "restriction domain must contain the origin".into(),
        });
    }
    let boxed = LatticeBox::from_sites(lambda.iter().cloned().collect())?;
    let oracle_value = branch_value(spec, eps, freq, x, &boxed, &origin, 1e-11)?;
    let distance = (scheme_value - oracle_value).abs();
    let allowed = bound.max(floor);
    Ok(BranchCheck {
        scheme_value,
        oracle_value,
        distance,
        bound: allowed,
        within: distance <= allowed,
    })
}

/// The canonical comparison domain at step `s`: union of the origin's
/// step-`s` region over the phases of `I_s`. Always satisfies the domain
/// conditions by construction when the separation regime holds.
pub fn canonical_lambda(
    s: u32,
    intervals: &[TorusInterval],
    freq: &Frequency,
    ambient: &LatticeBox,
    grid_points: usize,
) -> Result<BTreeSet<Site>> {
    let origin = vec![0i64; freq.dim()];
    let mut lambda = crate::regions::union_region(&origin, s, intervals, freq, ambient, grid_points)?;
    // At phases where no region is active the union can come out empty; the
    // origin itself is always an admissible domain.
    lambda.insert(origin);
    Ok(lambda)
}

/// Check the two admissibility conditions for comparing the step-`s+1`
/// diagonal against the origin branch on an arbitrary domain `lambda`, with
/// the comparison phases ranging over `window`:
/// the domain must contain the origin's step-`s` union region and avoid every
/// other center's, and every nonzero site of the domain must keep
/// `|n . omega|` on the circle at least ten lengths of `I_s` away from zero.
pub fn check_domain_conditions(
    lambda: &BTreeSet<Site>,
    s: u32,
    window: &TorusInterval,
    intervals: &[TorusInterval],
    freq: &Frequency,
    ambient: &LatticeBox,
    grid_points: usize,
) -> Result<()> {
    let origin = vec![0i64; freq.dim()];
    if !lambda.contains(&origin) {
        return Err(Error::DomainConditionViolated {
            reason: "domain does not contain the origin".into(),
        });
    }
    let core = union_region_over(&origin, s, window, intervals, freq, ambient, grid_points)?;
    if !core.is_subset(lambda) {
        return Err(Error::DomainConditionViolated {
            reason: format!("domain does not contain the origin's step-{s} union region"),
        });
    }
    let interval_len = 2.0 * interval_radius(intervals, s)?;
    for site in lambda {
        if site == &origin {
            continue;
        }
        let dist = freq.dist(site);
        if dist < 10.0 * interval_len {
            return Err(Error::DomainConditionViolated {
                reason: format!(
                    "site {site:?} has circle distance {dist:.6} below ten interval lengths {:.6}",
                    10.0 * interval_len
                ),
            });
        }
    }
    for center in ambient.sites() {
        if center == &origin {
            continue;
        }
        let other = union_region_over(center, s, window, intervals, freq, ambient, grid_points)?;
        if other.iter().any(|site| lambda.contains(site)) {
            return Err(Error::DomainConditionViolated {
                reason: format!("domain intersects the step-{s} union region of {center:?}"),
            });
        }
    }
    Ok(())
}

fn interval_radius(intervals: &[TorusInterval], s: u32) -> Result<f64> {
    intervals
        .get(s as usize - 1)
        .map(|i| i.radius())
        .ok_or_else(|| Error::InvalidInput(format!("interval ladder too short for step {s}")))
}
