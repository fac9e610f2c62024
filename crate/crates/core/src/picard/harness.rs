use std::fmt;

use serde::Serialize;

use super::{brute_force_fixed_points, iterate_with_window, FixedPointSets, PicardTrace};
use super::{DEFAULT_MAX_ITERS, DEFAULT_TOL, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::gauge::{verify_contraction, ContractionReport, GaugeKind, SelfMap};
use crate::phi::{classify_phi, ComparisonFunction, PhiPlan, PhiReport};
use crate::space::{AxiomId, DistanceStructure, Point, StructureClass, StructureLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum TheoremId {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl TheoremId {
    /// Strongest conclusion first.
    pub const BY_STRENGTH: [TheoremId; 5] = [
        TheoremId::T3,
        TheoremId::T5,
        TheoremId::T2,
        TheoremId::T4,
        TheoremId::T1,
    ];

    pub fn number(self) -> u8 {
        match self {
            TheoremId::T1 => 1,
            TheoremId::T2 => 2,
            TheoremId::T3 => 3,
            TheoremId::T4 => 4,
            TheoremId::T5 => 5,
        }
    }

    /// Whether the conclusion pins down a genuine fixed point `z = Tz`
    /// with `d(z,z) = 0`, rather than a d-singleton of d-fixed points.
    pub fn concludes_unique_fixed_point(self) -> bool {
        matches!(self, TheoremId::T3 | TheoremId::T5)
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Theorem {}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisStatus {
    VerifiedOnSamples,
    /// Follows from other verified hypotheses.
    Derived,
    Assumed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub statement: String,
    pub status: HypothesisStatus,
}

impl Hypothesis {
    fn new(name: &str, statement: &str, status: HypothesisStatus) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            status,
        }
    }

    fn sampled(name: &str, statement: &str, ok: bool) -> Self {
        let status = if ok {
            HypothesisStatus::VerifiedOnSamples
        } else {
            HypothesisStatus::Failed
        };
        Self::new(name, statement, status)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConclusionStatus {
    Confirmed,
    Refuted,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConclusionCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub start: Point,
    pub iterations: usize,
    pub final_rho: Option<f64>,
    pub d_asymptotic: bool,
    pub cauchy_0d: bool,
    pub converged_0d: bool,
    pub limit: Option<Point>,
    /// `d(z, Tz)`
    pub limit_displacement: Option<f64>,
    /// `d(z, z)`
    pub limit_self_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    /// One entry per start, sorted by start.
    pub traces: Vec<TraceSummary>,
    /// Largest `d(z_i, z_j)` over pairs of limits.
    pub max_limit_distance: Option<f64>,
    pub brute_force: Option<FixedPointSets>,
    pub checks: Vec<ConclusionCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremVerdict {
    /// The theorem whose conclusion was tested (or, when none applies, the
    /// strongest one matching the space and gauge).
    pub theorem_id: Option<TheoremId>,
    pub applicable: Vec<TheoremId>,
    pub hypotheses: Vec<Hypothesis>,
    pub conclusion_status: ConclusionStatus,
    pub fixed_point_report: FixedPointReport,
    pub space_labels: Vec<StructureLabel>,
    pub gauge: GaugeKind,
    pub contraction: ContractionReport,
    pub phi: PhiReport,
}

impl TheoremVerdict {
    pub fn confirmed(&self) -> bool {
        self.conclusion_status == ConclusionStatus::Confirmed
    }

    /// The common limit reported by the first start, if any.
    pub fn limit(&self) -> Option<Point> {
        self.fixed_point_report.traces.first().and_then(|t| t.limit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub window: usize,
    pub phi_plan: PhiPlan,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            window: DEFAULT_WINDOW,
            phi_plan: PhiPlan::default(),
        }
    }
}

/// Five evenly spaced domain points, or every table point (at most 64).
pub fn default_starts(space: &DistanceStructure) -> Vec<Point> {
    match space.domain() {
        Some((lo, hi)) => (0..5)
            .map(|i| Point::Real(if i == 4 { hi } else { lo + (hi - lo) * i as f64 / 4.0 }))
            .collect(),
        None => {
            let n = space.sample_count();
            if n <= 64 {
                (0..n).map(Point::Index).collect()
            } else {
                (0..64).map(|i| Point::Index(i * (n - 1) / 63)).collect()
            }
        }
    }
}

pub fn run_theorem_harness(
    space: &DistanceStructure,
    map: &SelfMap,
    phi: &ComparisonFunction,
    gauge: GaugeKind,
    starts: &[Point],
    assume_d_asymptotic: bool,
    options: &HarnessOptions,
) -> Result<TheoremVerdict> {
    let class = space.classify()?;
    let phi_report = classify_phi(phi, &options.phi_plan)?;
    run_theorem_harness_with(
        space,
        map,
        phi,
        &phi_report,
        &class,
        gauge,
        starts,
        assume_d_asymptotic,
        options,
    )
}

/// Like [`run_theorem_harness`], reusing an existing classification of the
/// space and of `phi`.
#[allow(clippy::too_many_arguments)]
pub fn run_theorem_harness_with(
    space: &DistanceStructure,
    map: &SelfMap,
    phi: &ComparisonFunction,
    phi_report: &PhiReport,
    class: &StructureClass,
    gauge: GaugeKind,
    starts: &[Point],
    assume_d_asymptotic: bool,
    options: &HarnessOptions,
) -> Result<TheoremVerdict> {
    if starts.is_empty() {
        return Err(Error::Precondition("the harness needs at least one start".into()));
    }
    let contraction = verify_contraction(space, map, phi, gauge)?;

    let mut starts = starts.to_vec();
    starts.sort_by(|a, b| a.total_cmp(b));
    let traces = starts
        .iter()
        .map(|&x0| iterate_with_window(space, map, x0, options.max_iters, options.tol, options.window))
        .collect::<Result<Vec<_>>>()?;

    let facts = Facts {
        triangular: class.holds(AxiomId::Triangular),
        reflexive: class.holds(AxiomId::ReflexiveTriangular),
        sufficient: class.holds(AxiomId::Sufficient),
        gauge,
        normal: phi_report.is_normal(),
        asymptotic: phi_report.is_asymptotic_normal(),
        admissible: phi_report.is_nearly_right_admissible(),
        contraction: contraction.holds,
        orbits_asymptotic: traces.iter().all(|t| t.d_asymptotic),
        assume_d_asymptotic,
    };

    let assessed: Vec<(TheoremId, Vec<Hypothesis>)> = TheoremId::BY_STRENGTH
        .iter()
        .map(|&t| (t, facts.hypotheses(t)))
        .collect();
    let applicable: Vec<TheoremId> = assessed
        .iter()
        .filter(|(_, hs)| hs.iter().all(|h| h.status != HypothesisStatus::Failed))
        .map(|(t, _)| *t)
        .collect();
    let selected = applicable
        .first()
        .copied()
        .or_else(|| TheoremId::BY_STRENGTH.into_iter().find(|&t| facts.structural(t)));
    let hypotheses = selected
        .and_then(|t| assessed.iter().find(|(id, _)| *id == t))
        .map(|(_, hs)| hs.clone())
        .unwrap_or_else(|| {
            vec![Hypothesis::sampled(
                "triangular",
                AxiomId::Triangular.statement(),
                facts.triangular,
            )]
        });

    let mut report = summarize(space, map, &traces)?;
    let conclusion_status = match selected {
        Some(t) if applicable.contains(&t) => {
            check_conclusion(space, map, t, &traces, options.tol, &mut report)?;
            if report.checks.iter().all(|c| c.passed) {
                ConclusionStatus::Confirmed
            } else {
                ConclusionStatus::Refuted
            }
        }
        _ => ConclusionStatus::NotApplicable,
    };

    let mut applicable = applicable;
    applicable.sort();
    Ok(TheoremVerdict {
        theorem_id: selected,
        applicable,
        hypotheses,
        conclusion_status,
        fixed_point_report: report,
        space_labels: class.labels.clone(),
        gauge,
        contraction,
        phi: phi_report.clone(),
    })
}

struct Facts {
    triangular: bool,
    reflexive: bool,
    sufficient: bool,
    gauge: GaugeKind,
    normal: bool,
    asymptotic: bool,
    admissible: bool,
    contraction: bool,
    orbits_asymptotic: bool,
    assume_d_asymptotic: bool,
}

impl Facts {
    fn small_gauge(&self) -> bool {
        matches!(self.gauge, GaugeKind::M1 | GaugeKind::M2)
    }

    /// Space and gauge requirements only.
    fn structural(&self, t: TheoremId) -> bool {
        match t {
            TheoremId::T1 => self.triangular,
            TheoremId::T2 => self.reflexive,
            TheoremId::T3 => self.reflexive && self.sufficient,
            TheoremId::T4 => self.triangular && self.small_gauge(),
            TheoremId::T5 => self.triangular && self.sufficient && self.small_gauge(),
        }
    }

    fn d_asymptotic_status(&self) -> HypothesisStatus {
        // Contraction with an asymptotic normal phi forces rho_n -> 0 on
        // reflexive triangular spaces for every gauge, and on triangular
        // spaces for M1 and M2.
        let derived = self.contraction
            && self.asymptotic
            && (self.reflexive || (self.triangular && self.small_gauge()));
        if derived {
            HypothesisStatus::Derived
        } else if self.assume_d_asymptotic {
            HypothesisStatus::Assumed
        } else if self.orbits_asymptotic {
            HypothesisStatus::VerifiedOnSamples
        } else {
            HypothesisStatus::Failed
        }
    }

    fn hypotheses(&self, t: TheoremId) -> Vec<Hypothesis> {
        let mut hs = vec![Hypothesis::new(
            "0-complete",
            "every 0d-Cauchy sequence 0d-converges",
            HypothesisStatus::Assumed,
        )];
        match t {
            TheoremId::T1 | TheoremId::T4 | TheoremId::T5 => hs.push(Hypothesis::sampled(
                "triangular",
                AxiomId::Triangular.statement(),
                self.triangular,
            )),
            TheoremId::T2 | TheoremId::T3 => hs.push(Hypothesis::sampled(
                "reflexive triangular",
                AxiomId::ReflexiveTriangular.statement(),
                self.reflexive,
            )),
        }
        if matches!(t, TheoremId::T3 | TheoremId::T5) {
            hs.push(Hypothesis::sampled(
                "sufficient",
                AxiomId::Sufficient.statement(),
                self.sufficient,
            ));
        }
        if matches!(t, TheoremId::T4 | TheoremId::T5) {
            hs.push(Hypothesis::new(
                "gauge in {M1, M2}",
                "G is M1 or M2",
                if self.small_gauge() {
                    HypothesisStatus::VerifiedOnSamples
                } else {
                    HypothesisStatus::Failed
                },
            ));
        }
        hs.push(Hypothesis::sampled(
            "contraction",
            "d(Tx,Ty) <= phi(G(x,y)) for all x, y",
            self.contraction,
        ));
        hs.push(Hypothesis::sampled(
            "normal phi",
            "phi(0) = 0 and phi(t) < t for t > 0",
            self.normal,
        ));
        if t != TheoremId::T1 {
            hs.push(Hypothesis::sampled(
                "asymptotic normal phi",
                "r_{n+1} <= phi(r_n) forces r_n -> 0",
                self.asymptotic,
            ));
        }
        hs.push(Hypothesis::sampled(
            "nearly right admissible phi",
            "L+phi(s) < s off the exceptional set",
            self.admissible,
        ));
        if t == TheoremId::T1 {
            hs.push(Hypothesis::new(
                "d-asymptotic",
                "d(T^n x, T^{n+1} x) -> 0 for every x",
                self.d_asymptotic_status(),
            ));
        }
        hs
    }
}

fn summarize(
    space: &DistanceStructure,
    map: &SelfMap,
    traces: &[PicardTrace],
) -> Result<FixedPointReport> {
    let mut summaries = Vec::with_capacity(traces.len());
    for t in traces {
        let (disp, selfd) = match t.limit_candidate {
            Some(z) => (
                Some(space.distance(z, map.apply(z)?)?),
                Some(space.distance(z, z)?),
            ),
            None => (None, None),
        };
        summaries.push(TraceSummary {
            start: t.start,
            iterations: t.iterations(),
            final_rho: t.rho.last().copied(),
            d_asymptotic: t.d_asymptotic,
            cauchy_0d: t.cauchy_0d,
            converged_0d: t.converged_0d,
            limit: t.limit_candidate,
            limit_displacement: disp,
            limit_self_distance: selfd,
        });
    }
    let limits: Vec<Point> = traces.iter().filter_map(|t| t.limit_candidate).collect();
    let mut max_limit_distance: Option<f64> = None;
    for (i, &a) in limits.iter().enumerate() {
        for &b in &limits[i..] {
            let d = space.distance(a, b)?;
            max_limit_distance = Some(max_limit_distance.map_or(d, |m| m.max(d)));
        }
    }
    Ok(FixedPointReport {
        traces: summaries,
        max_limit_distance,
        brute_force: None,
        checks: Vec::new(),
    })
}

fn check_conclusion(
    space: &DistanceStructure,
    map: &SelfMap,
    theorem: TheoremId,
    traces: &[PicardTrace],
    tol: f64,
    report: &mut FixedPointReport,
) -> Result<()> {
    let mut checks = Vec::new();
    let all_converged = traces.iter().all(|t| t.converged_0d);
    checks.push(ConclusionCheck {
        name: "every orbit 0d-converges".into(),
        passed: all_converged,
        detail: format!(
            "{} of {} starts",
            traces.iter().filter(|t| t.converged_0d).count(),
            traces.len()
        ),
    });

    let worst_disp = report
        .traces
        .iter()
        .map(|s| s.limit_displacement.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    checks.push(ConclusionCheck {
        name: "limits are d-fixed".into(),
        passed: all_converged && worst_disp <= tol,
        detail: format!("max d(z,Tz) = {worst_disp:e}"),
    });

    let spread = report.max_limit_distance.unwrap_or(f64::INFINITY);
    checks.push(ConclusionCheck {
        name: "limits form a d-singleton".into(),
        passed: all_converged && spread <= tol,
        detail: format!("max d(z_i,z_j) = {spread:e}"),
    });

    let limits: Vec<Point> = traces.iter().filter_map(|t| t.limit_candidate).collect();
    if theorem.concludes_unique_fixed_point() {
        let worst_self = report
            .traces
            .iter()
            .map(|s| s.limit_self_distance.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        checks.push(ConclusionCheck {
            name: "d(z,z) = 0".into(),
            passed: all_converged && worst_self <= tol,
            detail: format!("max d(z,z) = {worst_self:e}"),
        });
        let coord_spread = spread_of(&limits);
        checks.push(ConclusionCheck {
            name: "limits coincide as points".into(),
            passed: all_converged && coord_spread <= tol,
            detail: format!("coordinate spread {coord_spread:e}"),
        });
    }

    if space.is_tabulated() {
        let sets = brute_force_fixed_points(space, map)?;
        let mut d_singleton = true;
        for &a in &sets.d_fixed {
            for &b in &sets.d_fixed {
                d_singleton &= space.distance(Point::Index(a), Point::Index(b))? <= tol;
            }
        }
        let limits_inside = limits.iter().all(|z| match z {
            Point::Index(i) => sets.d_fixed.contains(i),
            Point::Real(_) => false,
        });
        checks.push(ConclusionCheck {
            name: "Fix(T;d) is a d-singleton holding the limits".into(),
            passed: !sets.d_fixed.is_empty() && d_singleton && limits_inside,
            detail: format!("Fix(T;d) = {:?}", sets.d_fixed),
        });
        if theorem.concludes_unique_fixed_point() {
            let z = limits.first().map(|p| p.coord() as usize);
            let single = |v: &[usize]| v.len() == 1 && Some(v[0]) == z;
            checks.push(ConclusionCheck {
                name: "Fix(T;d) = Fix(T) = {z}".into(),
                passed: single(&sets.d_fixed) && single(&sets.fixed),
                detail: format!("Fix(T;d) = {:?}, Fix(T) = {:?}", sets.d_fixed, sets.fixed),
            });
        }
        report.brute_force = Some(sets);
    }
    report.checks = checks;
    Ok(())
}

fn spread_of(points: &[Point]) -> f64 {
    if points.is_empty() {
        return f64::INFINITY;
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.coord()), hi.max(p.coord()))
    });
    hi - lo
}
