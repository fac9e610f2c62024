//! Picard iteration with 0d-convergence and 0d-Cauchy diagnostics, fixed
//! point extraction, and the theorem harness.
//!
//! Convergence here is modulo `d`: a sequence 0d-converges to `z` when
//! `d(x_n, z) -> 0`. When `d(z,z) > 0` even the constant sequence at `z`
//! does not converge to `z`.

mod harness;

pub use harness::*;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::{SelfMap, SelfMapSpec};
use crate::space::{DistanceStructure, Point, SLACK};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_WINDOW: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardTrace {
    pub start: Point,
    /// `x_0 .. x_N`
    pub orbit: Vec<Point>,
    /// `rho[n] = d(x_n, x_{n+1})`, length `N`.
    pub rho: Vec<f64>,
    pub limit_candidate: Option<Point>,
    /// `d(x_n, z)` over the trailing window, when a candidate exists.
    pub limit_tail: Vec<f64>,
    pub d_asymptotic: bool,
    pub cauchy_0d: bool,
    pub converged_0d: bool,
    pub tol: f64,
    pub window: usize,
}

impl PicardTrace {
    pub fn iterations(&self) -> usize {
        self.rho.len()
    }

    pub fn last(&self) -> Point {
        *self.orbit.last().expect("orbit holds at least the start")
    }

    /// Diagnose an arbitrary finite orbit (not necessarily produced by `map`).
    /// `map` is only used to prefer d-fixed limit candidates.
    pub fn from_orbit(
        space: &DistanceStructure,
        map: Option<&SelfMap>,
        orbit: Vec<Point>,
        tol: f64,
        window: usize,
    ) -> Result<Self> {
        if orbit.is_empty() {
            return Err(Error::Precondition("orbit is empty".into()));
        }
        let rho = orbit
            .windows(2)
            .map(|w| space.distance(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        let mut trace = PicardTrace {
            start: orbit[0],
            orbit,
            rho,
            limit_candidate: None,
            limit_tail: Vec::new(),
            d_asymptotic: false,
            cauchy_0d: false,
            converged_0d: false,
            tol,
            window,
        };
        trace.diagnose(space, map)?;
        Ok(trace)
    }

    fn diagnose(&mut self, space: &DistanceStructure, map: Option<&SelfMap>) -> Result<()> {
        self.d_asymptotic = check_d_asymptotic(&self.rho, self.tol, self.window);
        self.cauchy_0d = detect_0d_cauchy(space, &self.orbit, self.tol, self.window)?;
        match find_0d_limit(space, map, &self.orbit, self.tol, self.window)? {
            Some((z, tail)) => {
                self.limit_candidate = Some(z);
                self.limit_tail = tail;
                self.converged_0d = true;
            }
            None => {
                self.limit_candidate = None;
                self.limit_tail.clear();
                self.converged_0d = false;
            }
        }
        Ok(())
    }
}

/// Run `x_{n+1} = T x_n` from `x0` until the last `window` values of `rho`
/// are within `tol` and the trailing window of points is 0d-Cauchy, or
/// `max_iters` steps were taken.
pub fn iterate(
    space: &DistanceStructure,
    map: &SelfMap,
    x0: Point,
    max_iters: usize,
    tol: f64,
) -> Result<PicardTrace> {
    iterate_with_window(space, map, x0, max_iters, tol, DEFAULT_WINDOW)
}

pub fn iterate_with_window(
    space: &DistanceStructure,
    map: &SelfMap,
    x0: Point,
    max_iters: usize,
    tol: f64,
    window: usize,
) -> Result<PicardTrace> {
    if !space.contains(x0) {
        return Err(Error::Precondition(format!("start {x0} is not a point of the space")));
    }
    if window < 2 || !(tol > 0.0) {
        return Err(Error::Precondition("window must be >= 2 and tol positive".into()));
    }
    let mut orbit = vec![x0];
    let mut rho = Vec::new();
    let mut x = x0;
    while rho.len() < max_iters {
        let next = map.apply(x)?;
        rho.push(space.distance(x, next)?);
        orbit.push(next);
        x = next;
        if check_d_asymptotic(&rho, tol, window) && detect_0d_cauchy(space, &orbit, tol, window)? {
            break;
        }
    }
    let mut trace = PicardTrace {
        start: x0,
        orbit,
        rho,
        limit_candidate: None,
        limit_tail: Vec::new(),
        d_asymptotic: false,
        cauchy_0d: false,
        converged_0d: false,
        tol,
        window,
    };
    trace.diagnose(space, Some(map))?;
    Ok(trace)
}

/// True iff the last `window` displacements are all within `tol`.
pub fn check_d_asymptotic(rho: &[f64], tol: f64, window: usize) -> bool {
    rho.len() >= window && rho[rho.len() - window..].iter().all(|&r| r <= tol)
}

/// True iff every pair `m < n` in the trailing `window` points has
/// `d(x_m, x_n) <= tol`.
pub fn detect_0d_cauchy(
    space: &DistanceStructure,
    orbit: &[Point],
    tol: f64,
    window: usize,
) -> Result<bool> {
    if orbit.len() < window {
        return Ok(false);
    }
    let tail = &orbit[orbit.len() - window..];
    for (i, &a) in tail.iter().enumerate() {
        for &b in &tail[i + 1..] {
            if space.distance(a, b)? > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Look for `z` with `d(x_n, z) <= tol` over the trailing window.
///
/// Analytic spaces try the trailing orbit points and `T` of the last point;
/// tables try every point. Candidates with `d(z,Tz) <= tol` are preferred,
/// then (tables) the smallest trailing average, then the smallest coordinate.
pub fn find_0d_limit(
    space: &DistanceStructure,
    map: Option<&SelfMap>,
    orbit: &[Point],
    tol: f64,
    window: usize,
) -> Result<Option<(Point, Vec<f64>)>> {
    let Some(&last) = orbit.last() else {
        return Ok(None);
    };
    let tail = &orbit[orbit.len().saturating_sub(window)..];
    let mut candidates: Vec<Point> = if space.is_tabulated() {
        space.sample_points()
    } else {
        let mut c = tail.to_vec();
        if let Some(m) = map {
            if let Ok(next) = m.apply(last) {
                c.push(next);
            }
        }
        c
    };
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();

    let mut best: Option<(bool, f64, Point, Vec<f64>)> = None;
    for z in candidates {
        let dists = tail
            .iter()
            .map(|&x| space.distance(x, z))
            .collect::<Result<Vec<_>>>()?;
        if dists.iter().any(|&v| v > tol) {
            continue;
        }
        let not_fixed = match map {
            Some(m) => space.distance(z, m.apply(z)?)? > tol,
            None => true,
        };
        let avg = if space.is_tabulated() {
            dists.iter().sum::<f64>() / dists.len() as f64
        } else {
            0.0
        };
        let better = match &best {
            None => true,
            Some((bf, ba, _, _)) => (not_fixed, avg) < (*bf, *ba),
        };
        if better {
            best = Some((not_fixed, avg, z, dists));
        }
    }
    Ok(best.map(|(_, _, z, d)| (z, d)))
}

/// `Fix(T;d) = {z : d(z,Tz) <= SLACK}` and `Fix(T) = {z : Tz = z}` by exhaustive scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedPointSets {
    pub d_fixed: Vec<usize>,
    pub fixed: Vec<usize>,
}

pub fn brute_force_fixed_points(
    space: &DistanceStructure,
    map: &SelfMap,
) -> Result<FixedPointSets> {
    let SelfMapSpec::Tabulated(indices) = map.spec() else {
        return Err(Error::Precondition("brute force needs a tabulated map".into()));
    };
    if !space.is_tabulated() {
        return Err(Error::Precondition("brute force needs a tabulated space".into()));
    }
    let mut sets = FixedPointSets {
        d_fixed: Vec::new(),
        fixed: Vec::new(),
    };
    for (z, &tz) in indices.iter().enumerate() {
        if space.distance(Point::Index(z), Point::Index(tz))? <= SLACK {
            sets.d_fixed.push(z);
        }
        if tz == z {
            sets.fixed.push(z);
        }
    }
    Ok(sets)
}
