//! Finite prefixes of abstract sequences: semi-Cauchy profiles, the
//! `m(j), n(j)` construction for semi-Cauchy sequences that are not Cauchy,
//! and a sampled check of `limsup phi(t_n) <= L+phi(s)` along a descent.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phi::{estimate_l_plus, ComparisonFunction, LADDER};
use crate::space::{DistanceStructure, Point};
use crate::verdict::{Verdict, Witness};

/// Largest allowed `t_N - s` for a descent handed to [`lemma2_check`].
pub const DESCENT_FINAL_GAP: f64 = 1e-9;
/// Slack on the envelope bound in [`lemma2_check`].
pub const ENVELOPE_SLACK: f64 = 1e-6;

/// `x_0..x_N`, either as points of a structure or as a raw distance table.
#[derive(Debug, Clone)]
pub enum SequencePrefix {
    Points {
        space: DistanceStructure,
        points: Vec<Point>,
    },
    Table(Vec<Vec<f64>>),
}

impl SequencePrefix {
    pub fn points(space: DistanceStructure, points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Precondition(format!(
                "a sequence prefix needs at least 3 terms, got {}",
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|&&p| !space.contains(p)) {
            return Err(Error::Precondition(format!("term {p} lies outside the space")));
        }
        Ok(SequencePrefix::Points { space, points })
    }

    /// Real terms measured with `|x - y|`.
    pub fn real_line(values: &[f64]) -> Result<Self> {
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Precondition("sequence terms must be finite".into()));
        }
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let space = DistanceStructure::parse_analytic("abs(x-y)", lo, hi, 3)?;
        Self::points(space, values.iter().map(|&v| Point::Real(v)).collect())
    }

    pub fn table(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 3 {
            return Err(Error::Precondition(format!(
                "a sequence prefix needs at least 3 terms, got {n}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidSpace(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidSpace(format!("d({i},{j}) = {v} is not a finite non-negative number")));
                }
                if v != rows[j][i] {
                    return Err(Error::InvalidSpace(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        Ok(SequencePrefix::Table(rows))
    }

    pub fn len(&self) -> usize {
        match self {
            SequencePrefix::Points { points, .. } => points.len(),
            SequencePrefix::Table(rows) => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `d(x_i, x_j)`.
    pub fn d(&self, i: usize, j: usize) -> Result<f64> {
        match self {
            SequencePrefix::Points { space, points } => space.distance(points[i], points[j]),
            SequencePrefix::Table(rows) => Ok(rows[i][j]),
        }
    }

    /// `d(x_k, x_{k+1})` for every `k`.
    pub fn gaps(&self) -> Result<Vec<f64>> {
        (0..self.len() - 1).map(|k| self.d(k, k + 1)).collect()
    }
}

/// Parse a plain-text list of reals, one per line. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    data_lines(text)
        .map(|(no, line)| parse_number(no, line))
        .collect()
}

/// Parse a distance table, one row per line, entries separated by commas
/// or whitespace.
pub fn parse_table(text: &str) -> Result<Vec<Vec<f64>>> {
    data_lines(text)
        .map(|(no, line)| {
            line.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| parse_number(no, s))
                .collect()
        })
        .collect()
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_number(line: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config(format!("line {line}: {s:?} is not a finite number")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiCauchyProfile {
    pub terms: usize,
    pub tol: f64,
    pub final_gap: f64,
    /// Least `k` with `d(x_i, x_{i+1}) <= tol` for every `i >= k`.
    pub onset: Option<usize>,
    pub semi_cauchy: bool,
    /// A pair `onset <= m < n` with `d(x_m, x_n) >= 10 tol`.
    pub cauchy_violation: Option<(usize, usize, f64)>,
}

/// Semi-Cauchy on the prefix means the consecutive gaps have dropped to
/// `tol` by the end; a Cauchy violation is a pair past that onset still at
/// least `10 tol` apart.
pub fn semi_cauchy_profile(prefix: &SequencePrefix, tol: f64) -> Result<SemiCauchyProfile> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("tol must be positive".into()));
    }
    let gaps = prefix.gaps()?;
    let onset = match gaps.iter().rposition(|&g| g > tol) {
        None => Some(0),
        Some(k) if k + 1 < gaps.len() => Some(k + 1),
        Some(_) => None,
    };
    let threshold = 10.0 * tol;
    let mut cauchy_violation = None;
    if let Some(start) = onset {
        let last = prefix.len() - 1;
        'outer: for m in start..last {
            for n in (m + 1..=last).rev() {
                let v = prefix.d(m, n)?;
                if v >= threshold {
                    cauchy_violation = Some((m, n, v));
                    break 'outer;
                }
            }
        }
    }
    Ok(SemiCauchyProfile {
        terms: prefix.len(),
        tol,
        final_gap: *gaps.last().expect("at least two gaps"),
        onset,
        semi_cauchy: onset.is_some(),
        cauchy_violation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessRow {
    pub j: usize,
    pub m: usize,
    pub n: usize,
    /// `d(x_m, x_n)`
    pub d_m_n: f64,
    /// `d(x_m, x_{n-1})`
    pub d_m_prev: f64,
    /// `d(x_{n-1}, x_n)`
    pub last_gap: f64,
    /// `d(x_{m+p}, x_{n+q})` indexed `[p][q]`, when `n + 1` is in the prefix.
    pub shifted: Option<[[f64; 2]; 2]>,
}

impl WitnessRow {
    /// `j <= m < n` and `d(x_m, x_n) >= eps`.
    pub fn far_pair_holds(&self, eps: f64) -> bool {
        self.j <= self.m && self.m < self.n && self.d_m_n >= eps
    }

    /// `n - m >= 2` and `d(x_m, x_{n-1}) < eps`.
    pub fn first_exit_holds(&self, eps: f64) -> bool {
        self.n - self.m >= 2 && self.d_m_prev < eps
    }

    /// `eps <= d(x_m, x_n) < eps + d(x_{n-1}, x_n)`.
    pub fn sandwich_holds(&self, eps: f64) -> bool {
        eps <= self.d_m_n && self.d_m_n < eps + self.last_gap
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub epsilon: f64,
    /// Least rank with every later consecutive gap below `epsilon`.
    pub j_eps: Option<usize>,
    pub rows: Vec<WitnessRow>,
    pub j_max: usize,
    /// False when some `A(j)` with `j <= j_max` is empty on the prefix.
    pub complete: bool,
}

impl WitnessReport {
    /// Rows at ranks `j >= j_eps`, where the first-exit property applies.
    pub fn late_rows(&self) -> impl Iterator<Item = &WitnessRow> {
        let from = self.j_eps.unwrap_or(usize::MAX);
        self.rows.iter().filter(move |r| r.j >= from)
    }
}

/// For each `j <= j_max`, `m(j)` is the least `m >= j` having some `n > m`
/// with `d(x_m, x_n) >= eps`, and `n(j)` is the least such `n` for `m(j)`.
pub fn lemma1_witness(prefix: &SequencePrefix, eps: f64, j_max: usize) -> Result<WitnessReport> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    let len = prefix.len();
    let gaps = prefix.gaps()?;
    let j_eps = match gaps.iter().rposition(|&g| g >= eps) {
        None => Some(0),
        Some(k) if k + 1 < gaps.len() => Some(k + 1),
        Some(_) => None,
    };

    // first_far[m]: None = not computed yet, Some(None) = no far partner.
    let mut first_far: Vec<Option<Option<usize>>> = vec![None; len];
    let mut far_of = |m: usize| -> Result<Option<usize>> {
        if let Some(v) = first_far[m] {
            return Ok(v);
        }
        let mut found = None;
        for n in m + 1..len {
            if prefix.d(m, n)? >= eps {
                found = Some(n);
                break;
            }
        }
        first_far[m] = Some(found);
        Ok(found)
    };

    let mut rows = Vec::new();
    let mut complete = true;
    let mut m = 0;
    for j in 0..=j_max.min(len - 1) {
        m = m.max(j);
        let n = loop {
            if m >= len - 1 {
                break None;
            }
            match far_of(m)? {
                Some(n) => break Some(n),
                None => m += 1,
            }
        };
        let Some(n) = n else {
            complete = false;
            break;
        };
        let shifted = if n + 1 < len {
            let mut s = [[0.0; 2]; 2];
            for (p, row) in s.iter_mut().enumerate() {
                for (q, v) in row.iter_mut().enumerate() {
                    *v = prefix.d(m + p, n + q)?;
                }
            }
            Some(s)
        } else {
            None
        };
        rows.push(WitnessRow {
            j,
            m,
            n,
            d_m_n: prefix.d(m, n)?,
            d_m_prev: prefix.d(m, n - 1)?,
            last_gap: gaps[n - 1],
            shifted,
        });
    }
    if j_max >= len {
        complete = false;
    }
    if rows.is_empty() {
        return Err(Error::Precondition(format!(
            "no pair of terms is at least {eps} apart"
        )));
    }
    Ok(WitnessReport {
        epsilon: eps,
        j_eps,
        rows,
        j_max,
        complete,
    })
}

/// Half the largest distance from the middle term to a later term.
pub fn auto_epsilon(prefix: &SequencePrefix) -> Result<f64> {
    let mid = prefix.len() / 2;
    let mut best: f64 = 0.0;
    for n in mid + 1..prefix.len() {
        best = best.max(prefix.d(mid, n)?);
    }
    if best > 0.0 {
        Ok(best / 2.0)
    } else {
        Err(Error::Precondition("the late terms do not separate; pass epsilon explicitly".into()))
    }
}

/// Along a descent `t_n -> s+`, `phi(t_n)` on the tail inside the finest
/// estimator neighbourhood stays below the envelope estimate at `s`.
pub fn lemma2_check(phi: &ComparisonFunction, s: f64, descent: &[f64]) -> Result<Verdict> {
    let Some(&last) = descent.last() else {
        return Err(Error::Precondition("the descent is empty".into()));
    };
    if let Some(t) = descent.iter().find(|&&t| !(t >= s)) {
        return Err(Error::Precondition(format!("descent term {t} lies below s = {s}")));
    }
    if last - s > DESCENT_FINAL_GAP {
        return Err(Error::Precondition(format!(
            "descent ends {} above s; it must end within {DESCENT_FINAL_GAP}",
            last - s
        )));
    }
    let estimate = estimate_l_plus(phi, s)?;
    let bound = estimate.value + ENVELOPE_SLACK;
    let reach = LADDER[LADDER.len() - 1];

    let mut verdict = Verdict::new("lemma2");
    let mut worst: Option<(f64, f64)> = None;
    for &t in descent.iter().filter(|&&t| t < s + reach) {
        verdict.checked_count += 1;
        let v = phi.eval(t)?;
        if worst.is_none_or(|(_, w)| v > w) {
            worst = Some((t, v));
        }
        if v > bound {
            verdict.bad_points.push(t);
        }
    }
    let (t, v) = worst.expect("the final term is within reach");
    if v > bound {
        verdict.fail(Witness::new(
            vec![t],
            &[("phi(t)", v), ("L+phi(s)", estimate.value), ("s", s)],
        ));
    }
    verdict.bad_points.sort_by(f64::total_cmp);
    verdict.notes.push(format!(
        "tail sup phi(t_n) = {v}, L+phi({s}) ~ {}",
        estimate.value
    ));
    Ok(verdict)
}
