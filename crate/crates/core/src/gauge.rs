//! Self-maps, the gauges `M1`, `M2`, `M3` and the contraction condition
//! `d(Tx,Ty) <= phi(G(x,y))`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::phi::ComparisonFunction;
use crate::space::{cmp_tuples, DistanceStructure, Point, SLACK};

/// Description of `T`: an index array over a table, or an expression in `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum SelfMapSpec {
    Tabulated(Vec<usize>),
    Analytic(Expression),
}

impl SelfMapSpec {
    pub fn parse_analytic(source: &str) -> Result<Self> {
        Ok(SelfMapSpec::Analytic(Expression::parse(source, &["x"])?))
    }
}

/// A self-map validated against the structure it acts on.
#[derive(Debug, Clone)]
pub struct SelfMap {
    spec: SelfMapSpec,
    domain: Option<(f64, f64)>,
}

impl SelfMap {
    pub fn new(spec: SelfMapSpec, space: &DistanceStructure) -> Result<Self> {
        match (&spec, space.domain()) {
            (SelfMapSpec::Tabulated(indices), None) => {
                let n = space.sample_count();
                if indices.len() != n {
                    return Err(Error::InvalidMap(format!(
                        "index array has length {}, the table has {n} points",
                        indices.len()
                    )));
                }
                if let Some((i, &t)) = indices.iter().enumerate().find(|(_, &t)| t >= n) {
                    return Err(Error::InvalidMap(format!("T({i}) = {t} is out of range")));
                }
            }
            (SelfMapSpec::Analytic(expr), Some((lo, hi))) => {
                if let Some(extra) = expr.variables().into_iter().find(|v| v != "x") {
                    return Err(Error::InvalidMap(format!("unexpected variable `{extra}`")));
                }
                for p in space.sample_points() {
                    let x = p.coord();
                    let tx = expr.eval1("x", x)?;
                    if !(lo <= tx && tx <= hi) {
                        return Err(Error::InvalidMap(format!(
                            "T({x}) = {tx} leaves the domain [{lo}, {hi}]"
                        )));
                    }
                }
            }
            _ => {
                return Err(Error::InvalidMap(
                    "map kind does not match the structure kind".into(),
                ))
            }
        }
        Ok(Self {
            spec,
            domain: space.domain(),
        })
    }

    pub fn spec(&self) -> &SelfMapSpec {
        &self.spec
    }

    pub fn apply(&self, p: Point) -> Result<Point> {
        match (&self.spec, p) {
            (SelfMapSpec::Tabulated(indices), Point::Index(i)) => indices
                .get(i)
                .map(|&t| Point::Index(t))
                .ok_or_else(|| Error::InvalidMap(format!("point {i} is out of range"))),
            (SelfMapSpec::Analytic(expr), Point::Real(x)) => {
                let tx = expr.eval1("x", x)?;
                let (lo, hi) = self.domain.expect("analytic maps carry a domain");
                if !(lo <= tx && tx <= hi) {
                    return Err(Error::InvalidMap(format!(
                        "T({x}) = {tx} leaves the domain [{lo}, {hi}]"
                    )));
                }
                Ok(Point::Real(tx))
            }
            _ => Err(Error::InvalidMap(format!("point {p} does not match the map kind"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GaugeKind {
    M1,
    M2,
    M3,
}

impl GaugeKind {
    pub const ALL: [GaugeKind; 3] = [GaugeKind::M1, GaugeKind::M2, GaugeKind::M3];
}

impl fmt::Display for GaugeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaugeKind::M1 => "M1",
            GaugeKind::M2 => "M2",
            GaugeKind::M3 => "M3",
        })
    }
}

impl FromStr for GaugeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M1" | "m1" => Ok(GaugeKind::M1),
            "M2" | "m2" => Ok(GaugeKind::M2),
            "M3" | "m3" => Ok(GaugeKind::M3),
            other => Err(Error::Config(format!("unknown gauge `{other}`"))),
        }
    }
}

/// All gauge ingredients at one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeBreakdown {
    pub m1: f64,
    /// `max{d(x,Tx), d(y,Ty)}`
    pub h: f64,
    /// `(d(x,Ty) + d(Tx,y)) / 2`
    pub l: f64,
    pub m2: f64,
    pub m3: f64,
}

impl GaugeBreakdown {
    pub fn get(&self, g: GaugeKind) -> f64 {
        match g {
            GaugeKind::M1 => self.m1,
            GaugeKind::M2 => self.m2,
            GaugeKind::M3 => self.m3,
        }
    }
}

pub fn gauge_breakdown(
    space: &DistanceStructure,
    map: &SelfMap,
    x: Point,
    y: Point,
) -> Result<GaugeBreakdown> {
    let (tx, ty) = (map.apply(x)?, map.apply(y)?);
    let m1 = space.distance(x, y)?;
    let h = space.distance(x, tx)?.max(space.distance(y, ty)?);
    let l = 0.5 * (space.distance(x, ty)? + space.distance(tx, y)?);
    let m2 = m1.max(h);
    let m3 = m2.max(l);
    Ok(GaugeBreakdown { m1, h, l, m2, m3 })
}

pub fn gauge_value(
    space: &DistanceStructure,
    map: &SelfMap,
    g: GaugeKind,
    x: Point,
    y: Point,
) -> Result<f64> {
    Ok(gauge_breakdown(space, map, x, y)?.get(g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionWitness {
    pub x: Point,
    pub y: Point,
    pub d_tx_ty: f64,
    pub gauge_value: f64,
    pub phi_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub gauge: GaugeKind,
    pub holds: bool,
    pub witness: Option<ContractionWitness>,
    /// Largest `d(Tx,Ty) - phi(G(x,y))` over the plan.
    pub max_slack: f64,
    pub checked_count: usize,
}

/// Check `d(Tx,Ty) <= phi(G(x,y)) + SLACK` over all ordered sample pairs.
/// The witness is the pair of largest slack, ties going to the
/// lexicographically least pair.
pub fn verify_contraction(
    space: &DistanceStructure,
    map: &SelfMap,
    phi: &ComparisonFunction,
    g: GaugeKind,
) -> Result<ContractionReport> {
    let points = space.sample_points();
    let images = points
        .iter()
        .map(|&p| map.apply(p))
        .collect::<Result<Vec<_>>>()?;
    let displacement = points
        .iter()
        .zip(&images)
        .map(|(&p, &tp)| space.distance(p, tp))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<ContractionWitness> = None;
    let mut max_slack = f64::NEG_INFINITY;
    let mut checked = 0;
    for (i, &x) in points.iter().enumerate() {
        for (j, &y) in points.iter().enumerate() {
            checked += 1;
            let m1 = space.distance(x, y)?;
            let gv = match g {
                GaugeKind::M1 => m1,
                GaugeKind::M2 => m1.max(displacement[i]).max(displacement[j]),
                GaugeKind::M3 => {
                    let l = 0.5
                        * (space.distance(x, images[j])? + space.distance(images[i], y)?);
                    m1.max(displacement[i]).max(displacement[j]).max(l)
                }
            };
            let lhs = space.distance(images[i], images[j])?;
            let rhs = phi.eval(gv)?;
            let slack = lhs - rhs;
            let replace = slack > max_slack
                || (slack == max_slack
                    && best
                        .as_ref()
                        .is_some_and(|w| cmp_tuples(&[x, y], &[w.x, w.y]) == Ordering::Less));
            if replace {
                max_slack = slack;
                best = Some(ContractionWitness {
                    x,
                    y,
                    d_tx_ty: lhs,
                    gauge_value: gv,
                    phi_value: rhs,
                });
            }
        }
    }
    let holds = max_slack <= SLACK;
    Ok(ContractionReport {
        gauge: g,
        holds,
        witness: if holds { None } else { best },
        max_slack,
        checked_count: checked,
    })
}

/// Re-evaluate a contraction witness; true when it still violates the bound.
pub fn contraction_witness_reproduces(
    space: &DistanceStructure,
    map: &SelfMap,
    phi: &ComparisonFunction,
    g: GaugeKind,
    w: &ContractionWitness,
) -> Result<bool> {
    let lhs = space.distance(map.apply(w.x)?, map.apply(w.y)?)?;
    let rhs = phi.eval(gauge_value(space, map, g, w.x, w.y)?)?;
    Ok(lhs - rhs > SLACK)
}
