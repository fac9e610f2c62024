//! Symmetric distance structures and sampled axiom checks.
//!
//! A structure is either a finite table of distances or an expression
//! `d(x,y)` over a closed interval that is sampled on a uniform grid. Every
//! axiom check runs over the sample matrix (all tuples for a table, all grid
//! tuples for an expression); analytic verdicts therefore mean "no violation
//! found on the grid".

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;

/// Slack on every axiom inequality: a violation must exceed it.
pub const SLACK: f64 = 1e-12;
/// On grids, two points closer than this are not treated as distinct.
pub const GRID_DEGENERACY: f64 = 1e-6;
pub const DEFAULT_GRID: usize = 65;

/// A point of a structure: an index into a table, or a real coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Point {
    Index(usize),
    Real(f64),
}

impl Point {
    pub fn coord(self) -> f64 {
        match self {
            Point::Index(i) => i as f64,
            Point::Real(x) => x,
        }
    }

    /// Total order used for deterministic witness selection.
    pub fn total_cmp(&self, other: &Point) -> Ordering {
        self.coord().total_cmp(&other.coord())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Index(i) => write!(f, "{i}"),
            Point::Real(x) => write!(f, "{x:?}"),
        }
    }
}

pub(crate) fn cmp_tuples(a: &[Point], b: &[Point]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        match p.total_cmp(q) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Tabulated,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInfo {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
enum Repr {
    Tabulated { n: usize, values: Vec<f64> },
    Analytic { expr: Expression, lo: f64, hi: f64, grid: usize },
}

/// A symmetric, nonnegative `d` over a point set.
#[derive(Debug, Clone)]
pub struct DistanceStructure {
    repr: Repr,
}

impl DistanceStructure {
    pub fn tabulated(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::InvalidSpace("table must have at least one point".into()));
        }
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidSpace(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidSpace(format!(
                        "d({i},{j}) = {v} is not a nonnegative real"
                    )));
                }
                values.push(v);
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if (a - b).abs() > SLACK {
                    return Err(Error::InvalidSpace(format!(
                        "not symmetric: d({i},{j}) = {a} but d({j},{i}) = {b}"
                    )));
                }
            }
        }
        Ok(Self {
            repr: Repr::Tabulated { n, values },
        })
    }

    pub fn analytic(expr: Expression, lo: f64, hi: f64, grid: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidSpace(format!("bad domain [{lo}, {hi}]")));
        }
        if grid < 2 {
            return Err(Error::InvalidSpace(format!("grid resolution {grid} < 2")));
        }
        if let Some(extra) = expr.variables().into_iter().find(|v| v != "x" && v != "y") {
            return Err(Error::InvalidSpace(format!("unexpected variable `{extra}`")));
        }
        let space = Self {
            repr: Repr::Analytic { expr, lo, hi, grid },
        };
        let pts = space.sample_points();
        for (i, &p) in pts.iter().enumerate() {
            for &q in &pts[i..] {
                let a = space.distance(p, q)?;
                let b = space.distance(q, p)?;
                if (a - b).abs() > SLACK {
                    return Err(Error::InvalidSpace(format!(
                        "not symmetric: d({p},{q}) = {a} but d({q},{p}) = {b}"
                    )));
                }
            }
        }
        Ok(space)
    }

    pub fn parse_analytic(source: &str, lo: f64, hi: f64, grid: usize) -> Result<Self> {
        let expr = Expression::parse(source, &["x", "y"])?;
        Self::analytic(expr, lo, hi, grid)
    }

    pub fn kind(&self) -> SpaceKind {
        match self.repr {
            Repr::Tabulated { .. } => SpaceKind::Tabulated,
            Repr::Analytic { .. } => SpaceKind::Analytic,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        self.kind() == SpaceKind::Tabulated
    }

    /// Number of sample points (table size or grid resolution).
    pub fn sample_count(&self) -> usize {
        match &self.repr {
            Repr::Tabulated { n, .. } => *n,
            Repr::Analytic { grid, .. } => *grid,
        }
    }

    pub fn domain(&self) -> Option<(f64, f64)> {
        match &self.repr {
            Repr::Tabulated { .. } => None,
            Repr::Analytic { lo, hi, .. } => Some((*lo, *hi)),
        }
    }

    pub fn grid_info(&self) -> Option<GridInfo> {
        match &self.repr {
            Repr::Tabulated { .. } => None,
            Repr::Analytic { lo, hi, grid, .. } => Some(GridInfo {
                lo: *lo,
                hi: *hi,
                points: *grid,
            }),
        }
    }

    pub fn expression(&self) -> Option<&Expression> {
        match &self.repr {
            Repr::Analytic { expr, .. } => Some(expr),
            Repr::Tabulated { .. } => None,
        }
    }

    /// Same structure resampled at a different grid resolution.
    pub fn with_grid(&self, grid: usize) -> Result<Self> {
        match &self.repr {
            Repr::Tabulated { .. } => Ok(self.clone()),
            Repr::Analytic { expr, lo, hi, .. } => Self::analytic(expr.clone(), *lo, *hi, grid),
        }
    }

    /// The sample plan: all indices, or the uniform grid including both endpoints.
    pub fn sample_points(&self) -> Vec<Point> {
        match &self.repr {
            Repr::Tabulated { n, .. } => (0..*n).map(Point::Index).collect(),
            Repr::Analytic { lo, hi, grid, .. } => uniform_grid(*lo, *hi, *grid)
                .into_iter()
                .map(Point::Real)
                .collect(),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match (&self.repr, p) {
            (Repr::Tabulated { n, .. }, Point::Index(i)) => i < *n,
            (Repr::Analytic { lo, hi, .. }, Point::Real(x)) => *lo <= x && x <= *hi,
            _ => false,
        }
    }

    /// Build a point of this structure from a plain number (an index for
    /// tables, a coordinate for expressions).
    pub fn point_from(&self, v: f64) -> Result<Point> {
        let p = match self.repr {
            Repr::Tabulated { .. } => {
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::InvalidSpace(format!("{v} is not a point index")));
                }
                Point::Index(v as usize)
            }
            Repr::Analytic { .. } => Point::Real(v),
        };
        if self.contains(p) {
            Ok(p)
        } else {
            Err(Error::InvalidSpace(format!("point {v} lies outside the space")))
        }
    }

    /// Whether two sample points count as distinct for the sufficiency checks.
    pub fn distinct(&self, a: Point, b: Point) -> bool {
        match (a, b) {
            (Point::Index(i), Point::Index(j)) => i != j,
            _ => (a.coord() - b.coord()).abs() > GRID_DEGENERACY,
        }
    }

    pub fn distance(&self, a: Point, b: Point) -> Result<f64> {
        match (&self.repr, a, b) {
            (Repr::Tabulated { n, values }, Point::Index(i), Point::Index(j)) => {
                if i >= *n || j >= *n {
                    return Err(Error::InvalidSpace(format!("index out of range: ({i},{j})")));
                }
                Ok(values[i * n + j])
            }
            (Repr::Analytic { expr, .. }, Point::Real(x), Point::Real(y)) => {
                let v = expr.eval2(("x", x), ("y", y))?;
                if v < 0.0 {
                    return Err(Error::InvalidSpace(format!("d({x},{y}) = {v} is negative")));
                }
                Ok(v)
            }
            _ => Err(Error::InvalidSpace(format!(
                "point kind does not match the structure: ({a}, {b})"
            ))),
        }
    }

    /// All pairwise distances over the sample plan.
    pub fn sample_matrix(&self) -> Result<SampleMatrix> {
        let points = self.sample_points();
        let n = points.len();
        let values = match &self.repr {
            Repr::Tabulated { values, .. } => values.clone(),
            Repr::Analytic { .. } => {
                let mut values = vec![0.0; n * n];
                for i in 0..n {
                    for j in i..n {
                        let v = self.distance(points[i], points[j])?;
                        values[i * n + j] = v;
                        values[j * n + i] = v;
                    }
                }
                values
            }
        };
        let distinct = (0..n * n)
            .map(|k| self.distinct(points[k / n], points[k % n]))
            .collect();
        Ok(SampleMatrix {
            points,
            values,
            distinct,
        })
    }

    pub fn check_axiom(&self, axiom: AxiomId) -> Result<AxiomReport> {
        Ok(self.sample_matrix()?.check(axiom, self.grid_info()))
    }

    pub fn classify(&self) -> Result<StructureClass> {
        Ok(self.sample_matrix()?.classify(self.grid_info()))
    }

    /// Re-evaluate a reported witness and confirm it still violates its axiom.
    pub fn witness_reproduces(&self, report: &AxiomReport) -> Result<bool> {
        let Some(w) = &report.witness else {
            return Ok(false);
        };
        let p = &w.points;
        let d = |a: Point, b: Point| self.distance(a, b);
        Ok(match report.axiom {
            AxiomId::Triangular => {
                triangle_excess(d(p[0], p[2])?, d(p[0], p[1])?, d(p[1], p[2])?) > SLACK
            }
            AxiomId::ReflexiveTriangular => {
                reflexive_excess(d(p[0], p[2])?, d(p[1], p[1])?, d(p[0], p[1])?, d(p[1], p[2])?)
                    > SLACK
            }
            AxiomId::Sufficient => self.distinct(p[0], p[1]) && d(p[0], p[1])? <= SLACK,
            AxiomId::StronglySufficient => {
                self.distinct(p[0], p[1])
                    && strongly_equal(d(p[0], p[0])?, d(p[1], p[1])?, d(p[0], p[1])?)
            }
            AxiomId::Matthews => {
                matthews_excess(d(p[0], p[0])?, d(p[1], p[1])?, d(p[0], p[1])?) > SLACK
            }
        })
    }
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * (i as f64) / last
            }
        })
        .collect()
}

fn triangle_excess(dxz: f64, dxy: f64, dyz: f64) -> f64 {
    dxz - (dxy + dyz)
}

fn reflexive_excess(dxz: f64, dyy: f64, dxy: f64, dyz: f64) -> f64 {
    (dxz + dyy) - (dxy + dyz)
}

fn matthews_excess(dxx: f64, dyy: f64, dxy: f64) -> f64 {
    dxx.max(dyy) - dxy
}

fn strongly_equal(dxx: f64, dyy: f64, dxy: f64) -> bool {
    (dxx - dxy).abs() <= SLACK && (dyy - dxy).abs() <= SLACK
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomId {
    Triangular,
    ReflexiveTriangular,
    Sufficient,
    StronglySufficient,
    Matthews,
}

impl AxiomId {
    pub const ALL: [AxiomId; 5] = [
        AxiomId::Triangular,
        AxiomId::ReflexiveTriangular,
        AxiomId::Sufficient,
        AxiomId::StronglySufficient,
        AxiomId::Matthews,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxiomId::Triangular => "triangular",
            AxiomId::ReflexiveTriangular => "reflexive_triangular",
            AxiomId::Sufficient => "sufficient",
            AxiomId::StronglySufficient => "strongly_sufficient",
            AxiomId::Matthews => "matthews",
        }
    }

    /// The inequality being checked, for reports.
    pub fn statement(self) -> &'static str {
        match self {
            AxiomId::Triangular => "d(x,z) <= d(x,y) + d(y,z)",
            AxiomId::ReflexiveTriangular => "d(x,z) + d(y,y) <= d(x,y) + d(y,z)",
            AxiomId::Sufficient => "d(x,y) = 0 implies x = y",
            AxiomId::StronglySufficient => "d(x,x) = d(y,y) = d(x,y) implies x = y",
            AxiomId::Matthews => "max{d(x,x), d(y,y)} <= d(x,y)",
        }
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomWitness {
    pub points: Vec<Point>,
    pub distances: BTreeMap<String, f64>,
    /// Amount by which the inequality fails (0 for the sufficiency axioms).
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub axiom: AxiomId,
    pub holds: bool,
    pub witness: Option<AxiomWitness>,
    pub checked_count: usize,
    pub grid: Option<GridInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureLabel {
    StandardMetric,
    PartialMetric,
    AlmostPartialMetric,
    WeakAlmostPartialMetric,
    TriangularSymmetric,
    SymmetricOnly,
}

impl StructureLabel {
    pub fn name(self) -> &'static str {
        match self {
            StructureLabel::StandardMetric => "standard_metric",
            StructureLabel::PartialMetric => "partial_metric",
            StructureLabel::AlmostPartialMetric => "almost_partial_metric",
            StructureLabel::WeakAlmostPartialMetric => "weak_almost_partial_metric",
            StructureLabel::TriangularSymmetric => "triangular_symmetric",
            StructureLabel::SymmetricOnly => "symmetric_only",
        }
    }
}

impl fmt::Display for StructureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureClass {
    /// Most specific label.
    pub label: StructureLabel,
    /// Every label whose axioms hold, most specific first.
    pub labels: Vec<StructureLabel>,
    pub reports: Vec<AxiomReport>,
    pub max_self_distance: f64,
}

impl StructureClass {
    pub fn report(&self, axiom: AxiomId) -> &AxiomReport {
        self.reports
            .iter()
            .find(|r| r.axiom == axiom)
            .expect("classification runs every axiom")
    }

    pub fn holds(&self, axiom: AxiomId) -> bool {
        self.report(axiom).holds
    }

    pub fn has(&self, label: StructureLabel) -> bool {
        self.labels.contains(&label)
    }
}

/// Distances over a sample plan, row-major.
#[derive(Debug, Clone)]
pub struct SampleMatrix {
    points: Vec<Point>,
    values: Vec<f64>,
    distinct: Vec<bool>,
}

/// Keeps the worst violation; ties go to the lexicographically least tuple.
struct WorstViolation {
    best: Option<(f64, Vec<Point>, Vec<usize>)>,
}

impl WorstViolation {
    fn new() -> Self {
        Self { best: None }
    }

    fn offer(&mut self, excess: f64, points: Vec<Point>, idx: Vec<usize>) {
        let better = match &self.best {
            None => true,
            Some((e, p, _)) => {
                excess > *e || (excess == *e && cmp_tuples(&points, p) == Ordering::Less)
            }
        };
        if better {
            self.best = Some((excess, points, idx));
        }
    }
}

impl SampleMatrix {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    fn is_distinct(&self, i: usize, j: usize) -> bool {
        self.distinct[i * self.len() + j]
    }

    pub fn check(&self, axiom: AxiomId, grid: Option<GridInfo>) -> AxiomReport {
        let n = self.len();
        let mut worst = WorstViolation::new();
        let mut checked = 0usize;
        match axiom {
            AxiomId::Triangular | AxiomId::ReflexiveTriangular => {
                let reflexive = axiom == AxiomId::ReflexiveTriangular;
                for x in 0..n {
                    for y in 0..n {
                        let dxy = self.d(x, y);
                        let dyy = self.d(y, y);
                        for z in 0..n {
                            checked += 1;
                            let excess = if reflexive {
                                reflexive_excess(self.d(x, z), dyy, dxy, self.d(y, z))
                            } else {
                                triangle_excess(self.d(x, z), dxy, self.d(y, z))
                            };
                            if excess > SLACK {
                                let pts = vec![self.points[x], self.points[y], self.points[z]];
                                worst.offer(excess, pts, vec![x, y, z]);
                            }
                        }
                    }
                }
            }
            AxiomId::Sufficient | AxiomId::StronglySufficient | AxiomId::Matthews => {
                for x in 0..n {
                    for y in (x + 1)..n {
                        checked += 1;
                        let (dxx, dyy, dxy) = (self.d(x, x), self.d(y, y), self.d(x, y));
                        let violation = match axiom {
                            AxiomId::Sufficient => {
                                (self.is_distinct(x, y) && dxy <= SLACK).then_some(0.0)
                            }
                            AxiomId::StronglySufficient => (self.is_distinct(x, y)
                                && strongly_equal(dxx, dyy, dxy))
                            .then_some(0.0),
                            _ => {
                                let e = matthews_excess(dxx, dyy, dxy);
                                (e > SLACK).then_some(e)
                            }
                        };
                        if let Some(excess) = violation {
                            // Matthews witnesses list the larger self-distance first.
                            let (a, b) = if axiom == AxiomId::Matthews && dyy > dxx {
                                (y, x)
                            } else {
                                (x, y)
                            };
                            worst.offer(excess, vec![self.points[a], self.points[b]], vec![a, b]);
                        }
                    }
                }
            }
        }
        let witness = worst
            .best
            .map(|(excess, points, idx)| self.witness(axiom, excess, points, &idx));
        AxiomReport {
            axiom,
            holds: witness.is_none(),
            witness,
            checked_count: checked,
            grid,
        }
    }

    fn witness(&self, axiom: AxiomId, excess: f64, points: Vec<Point>, idx: &[usize]) -> AxiomWitness {
        let mut distances = BTreeMap::new();
        match axiom {
            AxiomId::Triangular | AxiomId::ReflexiveTriangular => {
                let (x, y, z) = (idx[0], idx[1], idx[2]);
                distances.insert("d(x,z)".to_string(), self.d(x, z));
                distances.insert("d(x,y)".to_string(), self.d(x, y));
                distances.insert("d(y,z)".to_string(), self.d(y, z));
                if axiom == AxiomId::ReflexiveTriangular {
                    distances.insert("d(y,y)".to_string(), self.d(y, y));
                }
            }
            _ => {
                let (x, y) = (idx[0], idx[1]);
                distances.insert("d(x,y)".to_string(), self.d(x, y));
                distances.insert("d(x,x)".to_string(), self.d(x, x));
                distances.insert("d(y,y)".to_string(), self.d(y, y));
            }
        }
        AxiomWitness {
            points,
            distances,
            excess,
        }
    }

    pub fn classify(&self, grid: Option<GridInfo>) -> StructureClass {
        let reports: Vec<AxiomReport> = AxiomId::ALL.iter().map(|&a| self.check(a, grid)).collect();
        let holds = |a: AxiomId| reports.iter().any(|r| r.axiom == a && r.holds);
        let max_self_distance = (0..self.len())
            .map(|i| self.d(i, i))
            .fold(0.0, f64::max);
        let tri = holds(AxiomId::Triangular);
        let refl = holds(AxiomId::ReflexiveTriangular);
        let suff = holds(AxiomId::Sufficient);

        let mut labels = Vec::new();
        if tri && suff && max_self_distance <= SLACK {
            labels.push(StructureLabel::StandardMetric);
        }
        // Matthews plus strong sufficiency imply sufficiency; requiring the
        // sampled verdict too keeps the label chain monotone under slack.
        if refl && suff && holds(AxiomId::StronglySufficient) && holds(AxiomId::Matthews) {
            labels.push(StructureLabel::PartialMetric);
        }
        if refl && suff {
            labels.push(StructureLabel::AlmostPartialMetric);
        }
        if tri && suff {
            labels.push(StructureLabel::WeakAlmostPartialMetric);
        }
        if tri {
            labels.push(StructureLabel::TriangularSymmetric);
        }
        labels.push(StructureLabel::SymmetricOnly);

        StructureClass {
            label: labels[0],
            labels,
            reports,
            max_self_distance,
        }
    }
}
