//! Driver for the iterative partial diagonalization: per-step plane-rotation
//! products built from the frozen current operator, covariant extension to
//! every active resonance center, and the accumulated orthogonal change of
//! basis from which the eigenvalue and eigenvector at the origin are read
//! off.

use std::collections::BTreeMap;

use crate::circle::frac;
use crate::error::Error;
use crate::mat::Mat;
use crate::model::frequency::Frequency;
use crate::model::lattice::{l1_ball, l1_norm, LatticeBox, Site};
use crate::model::operator::SymOperator;
use crate::model::potential::PotentialSpec;
use crate::regions::{self, TorusInterval};
use crate::scheme::rotation::{jacobi_rotation_2x2, PlaneRotation};
use crate::Result;

/// Parameters of one diagonalization run. No defaults are supplied for the
/// analytic knobs: callers state them explicitly so a run is reproducible
/// from its parameter record alone.
#[derive(Debug, Clone)]
pub struct SchemeParams {
    /// Hopping strength; the perturbative small parameter.
    pub eps: f64,
    /// Exponent-loss budget in `(0, 1)`.
    pub delta: f64,
    /// Base of the interval ladder, in `(0, 1)`.
    pub beta: f64,
    /// Magnitude base for the absorption inequality; large, chosen after
    /// `beta`.
    pub m: f64,
    /// Hölder exponent of the potential, `>= 1`.
    pub alpha: f64,
    /// Diophantine constants of the frequency.
    pub rho: f64,
    pub mu: f64,
    /// Step cap.
    pub s_max: u32,
    /// Relative diagonal-dominance margin: rotate only when
    /// `|h| <= (1 - margin) |b - a|`.
    pub dominance_margin: f64,
    /// Row-0 elimination target; also the bound the final residual against
    /// the original operator must meet.
    pub residual_target: f64,
    /// Points per interval for phase-grid monitors.
    pub interval_grid: usize,
    /// Abort on a convergence-rate breach instead of recording it.
    pub strict_tolerances: bool,
}

impl SchemeParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        eps: f64,
        delta: f64,
        beta: f64,
        m: f64,
        alpha: f64,
        rho: f64,
        mu: f64,
        s_max: u32,
    ) -> Result<Self> {
        let p = SchemeParams {
            eps,
            delta,
            beta,
            m,
            alpha,
            rho,
            mu,
            s_max,
            dominance_margin: 1e-3,
            residual_target: 1e-12,
            interval_grid: 64,
            strict_tolerances: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.eps >= 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in [0, 1), got {}", self.eps));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.m > 1.0) || !self.m.is_finite() {
            return bad(format!("magnitude base must be > 1, got {}", self.m));
        }
        if !(self.alpha >= 1.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be >= 1, got {}", self.alpha));
        }
        if !(self.rho > 0.0 && self.mu > 0.0) {
            return bad(format!(
                "Diophantine constants must be positive, got rho={}, mu={}",
                self.rho, self.mu
            ));
        }
        if self.s_max == 0 {
            return bad("s_max must be >= 1".into());
        }
        if !(self.dominance_margin > 0.0 && self.dominance_margin < 1.0) {
            return bad(format!(
                "dominance margin must lie in (0, 1), got {}",
                self.dominance_margin
            ));
        }
        if !(self.residual_target >= 0.0) {
            return bad(format!(
                "residual target must be >= 0, got {}",
                self.residual_target
            ));
        }
        if self.interval_grid < 2 {
            return bad("interval grid needs at least 2 points".into());
        }
        Ok(())
    }

    /// The combined exponent `gamma = (1 + 2/mu) * alpha` used by the
    /// magnitude ladder.
    pub fn gamma(&self) -> f64 {
        (1.0 + 2.0 / self.mu) * self.alpha
    }

    /// Convergence-rate bound on `||U^(s) - 1||` at step `s`.
    pub fn conv_bound(&self, s: u32) -> f64 {
        self.eps.powf(f64::from(s) * (1.0 - self.delta / 10.0))
    }
}

/// Per-step diagnostic record.
#[derive(Debug, Clone)]
pub struct StepDiag {
    /// Step index produced by this record (the state holds `H^(s)` after it).
    pub s: u32,
    pub active_centers: usize,
    pub rotations: usize,
    /// True when a rotation partner fell outside the ambient box and the
    /// corresponding factor was replaced by the identity.
    pub clipped: bool,
    /// `||U^(s) - 1||` (spectral-norm estimate of the step rotation product).
    pub u_dist: f64,
    /// The rate bound `eps^{s (1 - delta/10)}` it is measured against.
    pub conv_bound: f64,
    pub conv_ok: bool,
    /// Largest first-order angle among the step's rotations.
    pub max_tau: f64,
    /// Diagonal entry at the origin after the step.
    pub f0: f64,
    /// `|f^(s) - f^(s-1)|` at the origin.
    pub f0_drift: f64,
    /// `max_{n != 0} |H^(s)(0, n)|` after the step.
    pub row0_max: f64,
}

/// Mutable run state: the conjugated operator, the accumulated orthogonal
/// matrix, and the diagnostics trail.
#[derive(Debug, Clone)]
pub struct SchemeState {
    params: SchemeParams,
    freq: Frequency,
    /// Phase of the operator being diagonalized.
    x: f64,
    /// Center of the interval ladder (the phase whose eigenpair is tracked).
    x0: f64,
    h0: SymOperator,
    h: SymOperator,
    w: Mat,
    s: u32,
    intervals: Vec<TorusInterval>,
    origin: usize,
    f0_initial: f64,
    steps: Vec<StepDiag>,
}

impl SchemeState {
    /// State for diagonalizing the operator at phase `x` with the interval
    /// ladder centered at `x0` (monitors separate the two; plain runs use
    /// `x = x0`).
    pub fn new(
        params: &SchemeParams,
        spec: &PotentialSpec,
        freq: &Frequency,
        x: f64,
        x0: f64,
        ambient: &LatticeBox,
    ) -> Result<Self> {
        params.validate()?;
        if params.alpha != spec.alpha() {
            return Err(Error::InvalidInput(format!(
                "parameter alpha {} disagrees with the potential's exponent {}",
                params.alpha,
                spec.alpha()
            )));
        }
        let origin_site: Site = vec![0; ambient.dim()];
        let origin = ambient
            .index_of(&origin_site)
            .ok_or_else(|| Error::InvalidInput("ambient box must contain the origin".into()))?;
        let h0 = SymOperator::assemble(spec, params.eps, freq, x, ambient)?;
        let intervals = regions::interval_ladder(params.beta, x0, params.s_max + 1)?;
        let n = h0.len();
        let f0_initial = h0.diag()[origin];
        Ok(SchemeState {
            params: params.clone(),
            freq: freq.clone(),
            x: frac(x),
            x0: frac(x0),
            h: h0.clone(),
            h0,
            w: Mat::identity(n),
            s: 0,
            intervals,
            origin,
            f0_initial,
            steps: Vec::new(),
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn freq(&self) -> &Frequency {
        &self.freq
    }

    pub fn phase(&self) -> f64 {
        self.x
    }

    pub fn ladder_center(&self) -> f64 {
        self.x0
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn h(&self) -> &SymOperator {
        &self.h
    }

    pub fn h0(&self) -> &SymOperator {
        &self.h0
    }

    pub fn w(&self) -> &Mat {
        &self.w
    }

    pub fn intervals(&self) -> &[TorusInterval] {
        &self.intervals
    }

    pub fn origin_index(&self) -> usize {
        self.origin
    }

    pub fn steps(&self) -> &[StepDiag] {
        &self.steps
    }

    /// Diagonal entry at the origin after each completed step, preceded by
    /// the initial value: `history[s]` is `f^(s)` at the run's phase.
    pub fn f0_history(&self) -> Vec<f64> {
        std::iter::once(self.f0_initial)
            .chain(self.steps.iter().map(|d| d.f0))
            .collect()
    }

    /// `max_{n != 0} |H(0, n)|` over the stored sparse entries.
    pub fn row0_off_max(&self) -> f64 {
        self.h
            .off_entries()
            .filter(|&(i, j, _)| i == self.origin || j == self.origin)
            .fold(0.0_f64, |m, (_, _, v)| m.max(v.abs()))
    }

    /// l2 norm of the row-0 off-diagonal entries.  With `W` orthogonal and
    /// `H^(0) = W H^(s) W^T` this is exactly the eigenpair residual
    /// `|H^(0) psi - E psi|_2` for `psi = W e_0`, so the run loop stops on
    /// this quantity rather than on the max entry.
    pub fn row0_off_l2(&self) -> f64 {
        self.h
            .off_entries()
            .filter(|&(i, j, _)| i == self.origin || j == self.origin)
            .map(|(_, _, v)| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// `max |W^T W - 1|`: exact orthogonality bookkeeping of the accumulated
    /// rotations.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.w.rows();
        let mut g = self.w.tr_mul(&self.w);
        for i in 0..n {
            g[(i, i)] -= 1.0;
        }
        g.max_abs()
    }

    /// `max |(W^T H^(0) W - H^(s))| / max |H^(0)|`.
    ///
    /// With an infinite diagonal site present, only that diagonal entry and
    /// the corresponding row of the triple product are excluded: the product
    /// row is poisoned by `-inf * 0`, while the symmetric column side is
    /// finite and checked.  The site's couplings evolve covariantly like any
    /// other spectator entries; what stays exactly invariant is the infinite
    /// diagonal itself and the identity row/column of `W` there, both
    /// verified bitwise (violation reports as infinity).
    pub fn conjugation_residual(&self) -> f64 {
        let n = self.h.len();
        let pole = self.h0.pole_index();
        let dense0 = self.h0.to_dense();
        let conj = self.w.tr_mul(&dense0).mul(&self.w);
        let mut scale = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let v = dense0[(i, j)];
                if v.is_finite() {
                    scale = scale.max(v.abs());
                }
            }
        }
        let scale = scale.max(1e-300);
        let mut worst = 0.0_f64;
        for i in 0..n {
            if Some(i) == pole {
                continue;
            }
            for j in 0..n {
                worst = worst.max((conj[(i, j)] - self.h.entry(i, j)).abs());
            }
        }
        if let Some(p) = pole {
            if self.h.diag()[p] != f64::NEG_INFINITY {
                return f64::INFINITY;
            }
            for k in 0..n {
                let want = if k == p { 1.0 } else { 0.0 };
                if self.w[(p, k)] != want || self.w[(k, p)] != want {
                    return f64::INFINITY;
                }
            }
        }
        worst / scale
    }

    /// One diagonalization step `s -> s+1`.
    ///
    /// The rotation product is planned entirely from the frozen pre-step
    /// operator: for every active resonance center `n` (phase in the step
    /// interval) and every offset `0 < |m|_1 <= s+1` in lexicographic order,
    /// an exact 2x2 rotation for the block at `(n, n+m)`. Partners outside
    /// the ambient box contribute identity factors. The plan is then applied
    /// as one ordered sequence to `H`, `W`, and the step product `U`.
    pub fn step(&mut self) -> Result<&StepDiag> {
        let s1 = self.s + 1;
        if s1 as usize > self.intervals.len() {
            return Err(Error::InvalidInput(format!(
                "interval ladder exhausted at step {s1}"
            )));
        }
        let family = regions::extended_regions(
            s1,
            self.x,
            &self.intervals,
            &self.freq,
            self.h.lattice(),
        )?;
        let offsets = lex_offsets(self.freq.dim(), s1);
        let mut plan: Vec<(usize, usize, PlaneRotation)> = Vec::new();
        let mut clipped = false;
        let mut max_tau = 0.0_f64;
        for center in family.centers() {
            let Some(p) = self.h.lattice().index_of(center) else {
                clipped = true;
                continue;
            };
            for m in &offsets {
                let partner: Site = center.iter().zip(m).map(|(&c, &o)| c + o).collect();
                let Some(q) = self.h.lattice().index_of(&partner) else {
                    clipped = true;
                    continue;
                };
                let h_val = self.h.entry(p, q);
                if h_val == 0.0 {
                    continue;
                }
                let a = self.h.diag()[p];
                let b = self.h.diag()[q];
                let rot = jacobi_rotation_2x2(a, b, h_val, self.params.dominance_margin)?;
                if rot.is_identity() {
                    continue;
                }
                max_tau = max_tau.max(rot.tau.abs());
                plan.push((p, q, rot));
            }
        }
        let n = self.h.len();
        let mut u_step = Mat::identity(n);
        for &(p, q, rot) in &plan {
            self.h.apply_givens(p, q, rot.c, rot.s);
            self.w.apply_givens_right(p, q, rot.c, rot.s);
            u_step.apply_givens_right(p, q, rot.c, rot.s);
        }
        for i in 0..n {
            u_step[(i, i)] -= 1.0;
        }
        let u_dist = u_step.norm2_est();
        let conv_bound = self.params.conv_bound(s1);
        let conv_ok = u_dist <= conv_bound;
        let f0 = self.h.diag()[self.origin];
        let f0_prev = self
            .steps
            .last()
            .map(|d| d.f0)
            .unwrap_or(self.f0_initial);
        let diag = StepDiag {
            s: s1,
            active_centers: family.len(),
            rotations: plan.len(),
            clipped: clipped || family.clipped(),
            u_dist,
            conv_bound,
            conv_ok,
            max_tau,
            f0,
            f0_drift: (f0 - f0_prev).abs(),
            row0_max: 0.0,
        };
        self.s = s1;
        self.steps.push(diag);
        let row0 = self.row0_off_max();
        let rec = self.steps.last_mut().expect("just pushed");
        rec.row0_max = row0;
        if !conv_ok && self.params.strict_tolerances {
            return Err(Error::ToleranceBreach {
                step: s1,
                measured: u_dist,
                bound: conv_bound,
            });
        }
        Ok(self.steps.last().expect("just pushed"))
    }
}

/// All offsets `0 < |m|_1 <= r` in dimension `d`, lexicographically sorted.
pub fn lex_offsets(d: usize, r: u32) -> Vec<Site> {
    let center: Site = vec![0; d];
    let mut v: Vec<Site> = l1_ball(&center, i64::from(r))
        .into_iter()
        .filter(|m| l1_norm(m) > 0)
        .collect();
    v.sort();
    v
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Row-0 off-diagonal entries dropped below the residual target.
    ResidualMet { at_step: u32 },
    /// The step cap was reached first.
    SMaxReached,
}

/// Result of a full run: the eigenpair at the origin plus the evidence.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Eigenvalue: the origin diagonal entry of the final operator.
    pub e: f64,
    /// Normalized eigenvector on the ambient box.
    pub psi: Vec<f64>,
    /// `||H^(0) psi - E psi||_2` against the original operator.
    pub residual: f64,
    pub stop: StopReason,
    /// `|psi(0) - 1|` before normalization.
    pub psi_origin_dev: f64,
    /// Whether `|psi(0) - 1| < eps^{1 - delta}`.
    pub origin_dev_ok: bool,
    /// Whether `|psi(n)| <= eps^{(1 - delta)|n|}` held at every site.
    pub decay_ok: bool,
    pub state: SchemeState,
}

/// Run the scheme for the operator at phase `x0`, ladder centered there.
pub fn run_scheme(
    params: &SchemeParams,
    spec: &PotentialSpec,
    freq: &Frequency,
    x0: f64,
    ambient: &LatticeBox,
) -> Result<RunOutcome> {
    run_scheme_at(params, spec, freq, x0, x0, ambient)
}

/// Run with the operator phase and the ladder center decoupled; monitors use
/// this to trace the origin diagonal as a function of the phase while the
/// resonance intervals stay pinned.
pub fn run_scheme_at(
    params: &SchemeParams,
    spec: &PotentialSpec,
    freq: &Frequency,
    x: f64,
    x0: f64,
    ambient: &LatticeBox,
) -> Result<RunOutcome> {
    let needed = i64::from(3 * params.s_max + 2);
    let got = ambient.radius_from_origin();
    if got < needed {
        return Err(Error::AmbientTooSmall { needed, got });
    }
    let mut state = SchemeState::new(params, spec, freq, x, x0, ambient)?;
    let stop = loop {
        if state.row0_off_l2() < params.residual_target {
            break StopReason::ResidualMet { at_step: state.s };
        }
        if state.s >= params.s_max {
            break StopReason::SMaxReached;
        }
        state.step()?;
    };
    let raw = state.w.column(state.origin);
    let psi_origin_dev = (raw[state.origin] - 1.0).abs();
    let norm: f64 = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let psi: Vec<f64> = raw.iter().map(|v| v / norm).collect();
    let e = state.h.diag()[state.origin];
    let hv = state.h0.matvec(&psi);
    // A site with an infinite diagonal value decouples from the rest of the
    // box: the eigenproblem being solved is the compression of the operator
    // to its complement.  `psi` vanishes there exactly (rotations never touch
    // that plane), and the row the compression drops is excluded from the
    // residual -- its finite couplings into neighbouring sites are not part
    // of the compressed operator.
    let pole = state.h0.pole_index();
    let residual: f64 = hv
        .iter()
        .zip(&psi)
        .enumerate()
        .filter(|&(i, _)| Some(i) != pole)
        .map(|(_, (&a, &p))| (a - e * p).powi(2))
        .sum::<f64>()
        .sqrt();
    let eps = params.eps;
    let one_minus = 1.0 - params.delta;
    let origin_dev_ok = if eps > 0.0 {
        psi_origin_dev < eps.powf(one_minus)
    } else {
        psi_origin_dev == 0.0
    };
    let mut decay_ok = true;
    for (i, site) in state.h0.lattice().sites().iter().enumerate() {
        let dist = l1_norm(site) as f64;
        let bound = if eps > 0.0 {
            eps.powf(one_minus * dist)
        } else if dist == 0.0 {
            1.0
        } else {
            0.0
        };
        if psi[i].abs() > bound {
            decay_ok = false;
            break;
        }
    }
    if residual > params.residual_target {
        return Err(Error::NoConvergence {
            what: "scheme residual against the original operator".into(),
            achieved: residual,
            target: params.residual_target,
        });
    }
    Ok(RunOutcome {
        e,
        psi,
        residual,
        stop,
        psi_origin_dev,
        origin_dev_ok,
        decay_ok,
        state,
    })
}

/// One labeled member of the eigenbasis family.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub e: f64,
    pub psi: Vec<f64>,
    pub residual: f64,
}

/// Eigenpairs for a family of lattice labels: member `n` is the origin run
/// at the shifted phase `x0 - n . omega`, carried over by the covariance
/// translation `(T^n psi)(m) = psi(n + m)`.  Translating the shifted-phase
/// eigenvector this way (peak landing on `-n`) is exactly what turns it into
/// an eigenvector of the operator at `x0`; the opposite shift direction
/// would leave first-order tails uncancelled and the family visibly
/// non-orthogonal.
pub fn eigen_family(
    params: &SchemeParams,
    spec: &PotentialSpec,
    freq: &Frequency,
    x0: f64,
    ambient: &LatticeBox,
    sites: &[Site],
) -> Result<BTreeMap<Site, FamilyMember>> {
    let mut out = BTreeMap::new();
    for n in sites {
        if n.len() != ambient.dim() {
            return Err(Error::InvalidInput("family label dimension mismatch".into()));
        }
        let xn = frac(x0 - freq.dot(n));
        let run = run_scheme(params, spec, freq, xn, ambient)?;
        let mut psi = vec![0.0; ambient.len()];
        for (i, site) in ambient.sites().iter().enumerate() {
            let src: Site = site.iter().zip(n).map(|(&a, &b)| a + b).collect();
            if let Some(j) = run.state.h0.lattice().index_of(&src) {
                psi[i] = run.psi[j];
            }
        }
        out.insert(
            n.clone(),
            FamilyMember {
                e: run.e,
                psi,
                residual: run.residual,
            },
        );
    }
    Ok(out)
}

/// Largest deviation of the family's Gram matrix from the identity.
pub fn gram_max_dev(family: &BTreeMap<Site, FamilyMember>) -> f64 {
    let members: Vec<&FamilyMember> = family.values().collect();
    let mut worst = 0.0_f64;
    for (i, a) in members.iter().enumerate() {
        for (j, b) in members.iter().enumerate().skip(i) {
            let dot: f64 = a.psi.iter().zip(&b.psi).map(|(x, y)| x * y).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lattice::LatticeBox;

    fn golden() -> Frequency {
        Frequency::golden(2.0, 1.0)
    }

    fn reference_params() -> SchemeParams {
        SchemeParams::new(1e-3, 0.5, 0.05, 1e4, 1.0, 2.0, 1.0, 5).unwrap()
    }

    #[test]
    fn zero_coupling_is_a_fixed_point() {
        let params = SchemeParams::new(0.0, 0.5, 0.05, 1e4, 1.0, 2.0, 1.0, 3).unwrap();
        let spec = PotentialSpec::sawtooth();
        let ambient = LatticeBox::interval(-11, 11).unwrap();
        let run = run_scheme(&params, &spec, &golden(), 0.37, &ambient).unwrap();
        assert_eq!(run.stop, StopReason::ResidualMet { at_step: 0 });
        assert_eq!(run.e, spec.sample(0.37));
        let origin = run.state.origin_index();
        for (i, &v) in run.psi.iter().enumerate() {
            assert_eq!(v, if i == origin { 1.0 } else { 0.0 });
        }
        assert_eq!(run.residual, 0.0);
        assert!(run.origin_dev_ok && run.decay_ok);
    }

    #[test]
    fn two_site_step_zeroes_the_coupling() {
        // One active center, one in-box partner: the single exact rotation
        // must kill the (0, 1) entry to rounding.
        let params = reference_params();
        let spec = PotentialSpec::sawtooth();
        let freq = golden();
        let ambient = LatticeBox::interval(0, 1).unwrap();
        let mut state =
            SchemeState::new(&params, &spec, &freq, 0.37, 0.37, &ambient).unwrap();
        let before = state.h().entry(0, 1);
        assert_eq!(before, params.eps);
        let diag = state.step().unwrap();
        assert_eq!(diag.rotations, 1);
        assert!(diag.clipped, "partner at -1 must be clipped");
        assert!(state.h().entry(0, 1).abs() < 1e-16);
        assert!(state.orthogonality_residual() < 1e-15);
    }

    #[test]
    fn reference_run_converges_with_small_residual() {
        let params = reference_params();
        let spec = PotentialSpec::sawtooth();
        let ambient = LatticeBox::interval(-20, 20).unwrap();
        let run = run_scheme(&params, &spec, &golden(), 0.37, &ambient).unwrap();
        assert!(run.residual <= 1e-12, "residual {}", run.residual);
        assert!(matches!(run.stop, StopReason::ResidualMet { .. }));
        assert!(run.origin_dev_ok, "origin deviation {}", run.psi_origin_dev);
        assert!(run.decay_ok);
        let st = &run.state;
        assert!(st.orthogonality_residual() <= 1e-12);
        assert!(st.conjugation_residual() <= 1e-11);
        // Row-0 elimination after the final step.
        assert!(st.row0_off_max() < params.residual_target);
    }

    #[test]
    fn decay_bound_is_tight_per_site() {
        let params = reference_params();
        let spec = PotentialSpec::sawtooth();
        let ambient = LatticeBox::interval(-20, 20).unwrap();
        let run = run_scheme(&params, &spec, &golden(), 0.37, &ambient).unwrap();
        let boxed = run.state.h0().lattice().clone();
        for (i, site) in boxed.sites().iter().enumerate() {
            let n = l1_norm(site).unsigned_abs() as u32;
            if n > 0 && n <= 8 {
                let bound = params.eps.powf(0.5 * f64::from(n));
                assert!(
                    run.psi[i].abs() <= bound,
                    "site {site:?}: {} vs {bound}",
                    run.psi[i].abs()
                );
            }
        }
    }

    #[test]
    fn ambient_box_guard() {
        let params = reference_params();
        let spec = PotentialSpec::sawtooth();
        let ambient = LatticeBox::interval(-10, 10).unwrap();
        let err = run_scheme(&params, &spec, &golden(), 0.37, &ambient).unwrap_err();
        assert!(matches!(err, Error::AmbientTooSmall { needed: 17, got: 10 }));
    }

    #[test]
    fn pole_site_is_left_alone() {
        // Phase chosen so site 3 carries the pole: x + 3w = 0 mod 1.
        let params = reference_params();
        let spec = PotentialSpec::maryland();
        let freq = golden();
        let x0 = frac(1.0 - 3.0 * crate::GOLDEN_MEAN);
        let ambient = LatticeBox::interval(-20, 20).unwrap();
        let run = run_scheme(&params, &spec, &freq, x0, &ambient).unwrap();
        let pole = run.state.h0().pole_index().unwrap();
        assert_eq!(run.state.h0().lattice().site(pole), &vec![3]);
        assert_eq!(run.psi[pole], 0.0);
        assert!(run.residual <= params.residual_target);
        assert!(run.state.conjugation_residual() <= 1e-11);
    }

    #[test]
    fn eigen_family_is_orthonormal_with_matching_labels() {
        let params = reference_params();
        let spec = PotentialSpec::sawtooth();
        let freq = golden();
        let ambient = LatticeBox::interval(-20, 20).unwrap();
        let sites: Vec<Site> = (-4..=4).map(|k| vec![k]).collect();
        let family = eigen_family(&params, &spec, &freq, 0.37, &ambient, &sites).unwrap();
        assert_eq!(family.len(), 9);
        let gram = gram_max_dev(&family);
        assert!(gram <= 1e-10, "gram deviation {gram}");
        // Member 0 reproduces the plain run.
        let run = run_scheme(&params, &spec, &freq, 0.37, &ambient).unwrap();
        let zero = family.get(&vec![0]).unwrap();
        assert_eq!(zero.e, run.e);
        // And the label shift is a pure translation of the phase.
        let shifted = family.get(&vec![2]).unwrap();
        let direct = run_scheme(
            &params,
            &spec,
            &freq,
            frac(0.37 - 2.0 * crate::GOLDEN_MEAN),
            &ambient,
        )
        .unwrap();
        assert_eq!(shifted.e, direct.e);
    }

    #[test]
    fn lex_offsets_match_the_step_radius() {
        let offs = lex_offsets(1, 1);
        assert_eq!(offs, vec![vec![-1], vec![1]]);
        let offs2 = lex_offsets(2, 1);
        assert_eq!(
            offs2,
            vec![vec![-1, 0], vec![0, -1], vec![0, 1], vec![1, 0]]
        );
        assert_eq!(lex_offsets(1, 3).len(), 6);
    }

    #[test]
    fn conv_rate_recorded_per_step() {
        let params = reference_params();
        let spec = PotentialSpec::sawtooth();
        let ambient = LatticeBox::interval(-20, 20).unwrap();
        let run = run_scheme(&params, &spec, &golden(), 0.37, &ambient).unwrap();
        for d in run.state.steps() {
            assert_eq!(d.conv_bound, params.conv_bound(d.s));
            // Successive step rotations shrink fast.
            if d.s >= 2 {
                let prev = &run.state.steps()[(d.s - 2) as usize];
                if prev.u_dist > 0.0 && d.u_dist > 0.0 {
                    assert!(d.u_dist < prev.u_dist);
                }
            }
        }
    }
}
