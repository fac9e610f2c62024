//! Comparison functions `phi: [0,inf) -> [0,inf)`: normality, asymptotic
//! normality, the right upper-limit envelope `L+phi` and near right
//! admissibility.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::space::SLACK;
use crate::verdict::{Verdict, Witness};

/// Widths of the right neighbourhoods `[s, s+eps)` used by the envelope estimator.
pub const LADDER: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
pub const LADDER_SAMPLES: usize = 128;
pub const LADDER_CONVERGENCE: f64 = 1e-9;
/// Scan points closer than this to a declared exceptional point are skipped.
pub const Q_EXCLUSION: f64 = 1e-9;
/// Randomized sub-orbits per seed in the asymptotic-normality check.
pub const SUB_ORBITS: usize = 8;
pub const DEFAULT_RNG_SEED: u64 = 0x5eed_f1c5;

#[derive(Debug, Clone)]
pub struct ComparisonFunction {
    definition: Expression,
    source: String,
    exceptional: Vec<f64>,
    declared_monotone: Option<bool>,
}

impl ComparisonFunction {
    pub fn new(
        definition: Expression,
        exceptional: Vec<f64>,
        declared_monotone: Option<bool>,
    ) -> Result<Self> {
        if let Some(extra) = definition.variables().into_iter().find(|v| v != "t") {
            return Err(Error::InvalidPhi(format!("unexpected variable `{extra}`")));
        }
        let at_zero = definition.eval1("t", 0.0)?;
        if !at_zero.is_finite() {
            return Err(Error::InvalidPhi(format!("phi(0) = {at_zero} is not finite")));
        }
        for (i, &q) in exceptional.iter().enumerate() {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::InvalidPhi(format!("exceptional point {q} is not positive")));
            }
            if exceptional[..i].contains(&q) {
                return Err(Error::InvalidPhi(format!("exceptional point {q} is repeated")));
            }
        }
        Ok(Self {
            source: definition.to_string(),
            definition,
            exceptional,
            declared_monotone,
        })
    }

    pub fn parse(source: &str, exceptional: Vec<f64>, declared_monotone: Option<bool>) -> Result<Self> {
        let expr = Expression::parse(source, &["t"])?;
        let mut phi = Self::new(expr, exceptional, declared_monotone)?;
        phi.source = source.to_string();
        Ok(phi)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.definition.eval1("t", t)?)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn exceptional(&self) -> &[f64] {
        &self.exceptional
    }

    pub fn declared_monotone(&self) -> Option<bool> {
        self.declared_monotone
    }

    fn near_exceptional(&self, s: f64) -> bool {
        self.exceptional.iter().any(|q| (q - s).abs() <= Q_EXCLUSION)
    }
}

/// `n` logarithmically spaced points in `[lo, hi]`, endpoints included.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 2);
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == n {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

pub fn default_scan() -> Vec<f64> {
    log_spaced(1e-6, 1e3, 512)
}

/// Normality: `phi(0) = 0` and `phi(t) < t` at every sample.
pub fn check_normal(phi: &ComparisonFunction, samples: &[f64]) -> Result<Verdict> {
    if samples.is_empty() || samples.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Precondition("normality samples must be positive and non-empty".into()));
    }
    let mut verdict = Verdict::new("normal");
    let at_zero = phi.eval(0.0)?;
    verdict.checked_count = 1;
    if at_zero.abs() > SLACK {
        verdict.fail(Witness::new(vec![0.0], &[("phi(t)", at_zero)]));
    }
    let mut bad = Vec::new();
    for &t in samples {
        verdict.checked_count += 1;
        let v = phi.eval(t)?;
        if !(v < t) {
            bad.push((t, v));
        }
    }
    bad.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(&(t, v)) = bad.first() {
        verdict.fail(Witness::new(vec![t], &[("phi(t)", v), ("t", t)]));
    }
    verdict.bad_points = bad.into_iter().map(|(t, _)| t).collect();
    Ok(verdict)
}

/// Falsification check for asymptotic normality: the equality orbit
/// `r' = phi(r)` and [`SUB_ORBITS`] randomized orbits `r' = u * phi(r)`,
/// `u ~ U[0,1]`, must each fall below `tol` within `max_iters` steps.
pub fn check_asymptotic_normal(
    phi: &ComparisonFunction,
    seeds: &[f64],
    max_iters: usize,
    tol: f64,
    rng_seed: u64,
) -> Result<Verdict> {
    if seeds.is_empty() || seeds.iter().any(|&r| !(r > 0.0)) || !(tol > 0.0) {
        return Err(Error::Precondition("orbit seeds and tolerance must be positive".into()));
    }
    let mut verdict = Verdict::new("asymptotic_normal");
    verdict.seed = Some(rng_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for &r0 in seeds {
        for orbit in 0..=SUB_ORBITS {
            verdict.checked_count += 1;
            let mut r = r0;
            let mut steps = 0;
            while !(r < tol) && steps < max_iters {
                let next = phi.eval(r)?;
                r = if orbit == 0 {
                    next
                } else {
                    rng.gen_range(0.0..=1.0) * next
                };
                steps += 1;
            }
            if !(r < tol) {
                verdict.bad_points.push(r0);
                verdict.fail(Witness::new(
                    vec![r0],
                    &[
                        ("orbit", orbit as f64),
                        ("final_r", r),
                        ("iterations", steps as f64),
                    ],
                ));
            }
        }
    }
    verdict.bad_points.sort_by(f64::total_cmp);
    verdict.bad_points.dedup();
    if phi.declared_monotone() == Some(true) {
        verdict.notes.push(
            "phi declared non-decreasing: the equality orbit dominates every orbit with r' <= phi(r)"
                .into(),
        );
    }
    Ok(verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderRung {
    pub eps: f64,
    /// Sampled `sup phi([s, s+eps))`.
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimsupEstimate {
    pub s: f64,
    pub value: f64,
    pub ladder: Vec<LadderRung>,
    pub converged: bool,
}

/// Estimate `L+phi(s) = max{limsup_{t->s+} phi(t), phi(s)}` from sampled
/// suprema over the shrinking neighbourhoods `[s, s+eps)`.
///
/// Each rung takes the max over its own samples and over every finer rung,
/// so the sampled sets are nested and the ladder is exactly non-increasing.
pub fn estimate_l_plus(phi: &ComparisonFunction, s: f64) -> Result<LimsupEstimate> {
    if !(s > 0.0) {
        return Err(Error::Precondition(format!("envelope point {s} must be positive")));
    }
    let at_s = phi.eval(s)?;
    let mut sups = vec![0.0; LADDER.len()];
    let mut running = at_s;
    for (k, &eps) in LADDER.iter().enumerate().rev() {
        for i in 0..LADDER_SAMPLES {
            let t = s + eps * (i as f64) / (LADDER_SAMPLES as f64);
            running = running.max(phi.eval(t)?);
        }
        sups[k] = running;
    }
    let ladder: Vec<LadderRung> = LADDER
        .iter()
        .zip(&sups)
        .map(|(&eps, &sup)| LadderRung { eps, sup })
        .collect();
    let n = ladder.len();
    let value = ladder[n - 1].sup.max(at_s);
    let converged = (ladder[n - 2].sup - ladder[n - 1].sup).abs() <= LADDER_CONVERGENCE;
    Ok(LimsupEstimate {
        s,
        value,
        ladder,
        converged,
    })
}

/// Near right admissibility: `L+phi(s) < s` at every scan point away from
/// the declared exceptional set.
pub fn check_nearly_right_admissible(phi: &ComparisonFunction, scan: &[f64]) -> Result<Verdict> {
    if scan.is_empty() || scan.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Precondition("scan points must be positive and non-empty".into()));
    }
    let mut verdict = Verdict::new("nearly_right_admissible");
    let mut sorted = scan.to_vec();
    sorted.sort_by(f64::total_cmp);

    if phi.declared_monotone() == Some(true) {
        let values = sorted.iter().map(|&s| phi.eval(s)).collect::<Result<Vec<_>>>()?;
        if values.windows(2).all(|w| w[0] <= w[1]) {
            verdict.checked_count = sorted.len();
            verdict.notes.push(
                "non-decreasing on the scan: phi is continuous off a countable set, where L+phi(s) = phi(s) < s"
                    .into(),
            );
            return Ok(verdict);
        }
        verdict
            .notes
            .push("declared monotone but decreasing on the scan; estimating the envelope".into());
    }

    let mut skipped = 0;
    for &s in &sorted {
        if phi.near_exceptional(s) {
            skipped += 1;
            continue;
        }
        verdict.checked_count += 1;
        let est = estimate_l_plus(phi, s)?;
        if !(est.value < s) {
            verdict.bad_points.push(s);
            verdict.fail(Witness::new(vec![s], &[("L+phi(s)", est.value), ("s", s)]));
        }
    }
    if skipped > 0 {
        verdict
            .notes
            .push(format!("{skipped} scan point(s) skipped near the exceptional set"));
    }
    Ok(verdict)
}

/// Sampling plan for classifying a comparison function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiPlan {
    pub normal_samples: Vec<f64>,
    pub scan: Vec<f64>,
    pub orbit_seeds: Vec<f64>,
    pub orbit_max_iters: usize,
    pub orbit_tol: f64,
    pub rng_seed: u64,
}

impl Default for PhiPlan {
    fn default() -> Self {
        Self {
            normal_samples: default_scan(),
            scan: default_scan(),
            orbit_seeds: vec![1e-3, 0.1, 1.0, 10.0, 100.0],
            orbit_max_iters: 1_000_000,
            orbit_tol: 1e-6,
            rng_seed: DEFAULT_RNG_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiReport {
    pub phi: String,
    pub exceptional: Vec<f64>,
    pub normal: Verdict,
    /// Absent when normality already failed.
    pub asymptotic_normal: Option<Verdict>,
    pub nearly_right_admissible: Option<Verdict>,
}

impl PhiReport {
    pub fn is_normal(&self) -> bool {
        self.normal.holds
    }

    pub fn is_asymptotic_normal(&self) -> bool {
        self.asymptotic_normal.as_ref().is_some_and(|v| v.holds)
    }

    pub fn is_nearly_right_admissible(&self) -> bool {
        self.nearly_right_admissible.as_ref().is_some_and(|v| v.holds)
    }

    pub fn all_hold(&self) -> bool {
        self.is_normal() && self.is_asymptotic_normal() && self.is_nearly_right_admissible()
    }
}

pub fn classify_phi(phi: &ComparisonFunction, plan: &PhiPlan) -> Result<PhiReport> {
    let normal = check_normal(phi, &plan.normal_samples)?;
    let (asymptotic_normal, nearly_right_admissible) = if normal.holds {
        (
            Some(check_asymptotic_normal(
                phi,
                &plan.orbit_seeds,
                plan.orbit_max_iters,
                plan.orbit_tol,
                plan.rng_seed,
            )?),
            Some(check_nearly_right_admissible(phi, &plan.scan)?),
        )
    } else {
        (None, None)
    };
    Ok(PhiReport {
        phi: phi.source().to_string(),
        exceptional: phi.exceptional().to_vec(),
        normal,
        asymptotic_normal,
        nearly_right_admissible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi(src: &str) -> ComparisonFunction {
        ComparisonFunction::parse(src, vec![], None).unwrap()
    }

    const STEP: &str = "if(t<1, 0, 0.9)";
    const HYBRID: &str = "if(t<1, t/2, t-(t-1)*(t-1))";

    #[test]
    fn normality() {
        let scan = default_scan();
        assert!(check_normal(&phi("t/2"), &scan).unwrap().holds);
        assert!(check_normal(&phi("t/(1+t)"), &scan).unwrap().holds);
        let v = check_normal(&phi("t"), &scan).unwrap();
        assert!(!v.holds);
        assert_eq!(v.witness.unwrap().at, vec![1e-6]);
        assert_eq!(v.bad_points.len(), scan.len());
        let v = check_normal(&phi("t/2+1"), &[1.0]).unwrap();
        assert_eq!(v.witness.unwrap().at, vec![0.0]);
    }

    #[test]
    fn rejects_bad_definitions() {
        assert!(ComparisonFunction::parse("1/t", vec![], None).is_err());
        assert!(ComparisonFunction::parse("t/2", vec![0.0], None).is_err());
        assert!(ComparisonFunction::parse("t/2", vec![1.0, 1.0], None).is_err());
        assert!(ComparisonFunction::parse("x/2", vec![], None).is_err());
    }

    #[test]
    fn halving_orbit_vanishes() {
        let v = check_asymptotic_normal(&phi("t/2"), &[1.0], 10_000, 1e-9, 7).unwrap();
        assert!(v.holds);
        assert_eq!(v.seed, Some(7));
        assert_eq!(v.checked_count, 1 + SUB_ORBITS);
    }

    #[test]
    fn harmonic_orbit_matches_closed_form() {
        // r_n = 1/(1+n): the oracle is the closed form itself.
        let f = phi("t/(1+t)");
        let mut r = 1.0f64;
        for n in 1..=10_000u32 {
            r = f.eval(r).unwrap();
            assert!((r - 1.0 / (1.0 + n as f64)).abs() <= 1e-12, "n={n}");
        }
        let v = check_asymptotic_normal(&f, &[1.0], 100_000, 1e-4, 1).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn piecewise_orbit_from_ten() {
        // Equality orbit: 36 steps of -0.25 reach 1.0, then halving from 0.75.
        let f = phi("if(t<1, t/2, t-0.25)");
        let mut r = 10.0;
        let mut steps = 0;
        while r >= 1e-9 {
            r = f.eval(r).unwrap();
            steps += 1;
        }
        assert_eq!(steps, 36 + 1 + 30);
        assert!(check_asymptotic_normal(&f, &[10.0], 200, 1e-9, 3).unwrap().holds);
    }

    #[test]
    fn identity_is_not_asymptotic_normal() {
        let v = check_asymptotic_normal(&phi("t"), &[1.0], 50, 1e-9, 0).unwrap();
        assert!(!v.holds);
        assert_eq!(v.witness.as_ref().unwrap().values["orbit"], 0.0);
    }

    #[test]
    fn envelope_examples() {
        let e = estimate_l_plus(&phi("t/2"), 1.0).unwrap();
        assert!((e.value - 0.5).abs() < 1e-6);
        let e = estimate_l_plus(&phi(STEP), 1.0).unwrap();
        assert_eq!(e.value, 0.9);
        assert!(e.converged);
        let e = estimate_l_plus(&phi(STEP), 0.5).unwrap();
        assert_eq!(e.value, 0.0);
        // the coarsest rung at s=0.95 reaches past the jump
        let e = estimate_l_plus(&phi(STEP), 0.95).unwrap();
        assert_eq!(e.ladder[0].sup, 0.9);
        assert_eq!(e.value, 0.0);
        for w in e.ladder.windows(2) {
            assert!(w[1].sup <= w[0].sup);
        }
    }

    #[test]
    fn hybrid_needs_its_exceptional_point() {
        let mut scan = default_scan();
        scan.push(1.0);
        let with_q = ComparisonFunction::parse(HYBRID, vec![1.0], None).unwrap();
        let v = check_nearly_right_admissible(&with_q, &scan).unwrap();
        assert!(v.holds, "{v:?}");
        let no_q = phi(HYBRID);
        let v = check_nearly_right_admissible(&no_q, &scan).unwrap();
        assert!(!v.holds);
        assert_eq!(v.bad_points, vec![1.0]);
        let at_one = estimate_l_plus(&no_q, 1.0).unwrap();
        assert!(at_one.value >= 1.0);
    }

    #[test]
    fn monotone_fast_path() {
        let f = ComparisonFunction::parse("t/2", vec![], Some(true)).unwrap();
        let v = check_nearly_right_admissible(&f, &default_scan()).unwrap();
        assert!(v.holds);
        assert!(v.notes[0].starts_with("non-decreasing"));
        // a wrong hint falls back to estimation
        let f = ComparisonFunction::parse("if(t<1, t/2, 0.1)", vec![], Some(true)).unwrap();
        let v = check_nearly_right_admissible(&f, &default_scan()).unwrap();
        assert!(v.holds);
        assert!(v.notes[0].starts_with("declared monotone"));
    }

    #[test]
    fn log_scan_shape() {
        let s = default_scan();
        assert_eq!(s.len(), 512);
        assert_eq!(s[0], 1e-6);
        assert_eq!(s[511], 1e3);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn classification_gates_on_normality() {
        let r = classify_phi(&phi("t"), &PhiPlan::default()).unwrap();
        assert!(!r.is_normal());
        assert!(r.asymptotic_normal.is_none());
        let r = classify_phi(&phi("t/2"), &PhiPlan::default()).unwrap();
        assert!(r.all_hold());
    }
}
