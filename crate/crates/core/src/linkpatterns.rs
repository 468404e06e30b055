//! Radial and chordal link patterns, meander gluing and the meander matrix.
//!
//! A pattern on boundary points `1..n` (stored 0-based) is encoded by which points are
//! *closers*: every link is oriented so that the boundary interval running counter-clockwise
//! from its opener to its closer lies on the side away from the puncture. Each closer is
//! matched to the nearest unmatched opener before it (cyclically for radial patterns,
//! linearly for chordal ones); unmatched openers are rays. For radial patterns this is a
//! bijection between isotopy classes in the punctured disk and `m`-subsets of the points.
//!
//! Canonical text form (1-based):
//!
//! ```text
//! <kind> n=<n>|<links>|rays:<list>|winding:<w>
//! ```
//!
//! where `<kind>` is `radial` or `chordal`, `<links>` is a sequence `(o c)` sorted by opener,
//! `<list>` is `∅` or comma-separated indices, and `<w>` counts links whose interval passes
//! from point `n` to point `1`. Example: `radial n=4|(1 2)(4 3)|rays:∅|winding:1`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::KappaParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Radial,
    Chordal,
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternKind::Radial => "radial",
            PatternKind::Chordal => "chordal",
        })
    }
}

impl FromStr for PatternKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radial" => Ok(PatternKind::Radial),
            "chordal" => Ok(PatternKind::Chordal),
            _ => Err(Error::Parse(format!("unknown pattern kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinkPattern {
    kind: PatternKind,
    n: usize,
    /// `(opener, closer)`, sorted by opener.
    links: Vec<(usize, usize)>,
    rays: Vec<usize>,
}

impl LinkPattern {
    /// Build from the set of closers; `None` when a closer cannot be matched.
    pub fn from_closers(kind: PatternKind, closers: &[bool]) -> Option<Self> {
        let n = closers.len();
        let mut stack = Vec::new();
        let mut pending = Vec::new();
        let mut links = Vec::new();
        for (i, &c) in closers.iter().enumerate() {
            if !c {
                stack.push(i);
            } else if let Some(o) = stack.pop() {
                links.push((o, i));
            } else {
                pending.push(i);
            }
        }
        if !pending.is_empty() {
            if kind == PatternKind::Chordal {
                return None;
            }
            for c in pending {
                links.push((stack.pop()?, c));
            }
        }
        links.sort_unstable();
        Some(Self { kind, n, links, rays: stack })
    }

    /// Validate an explicit description against the canonical encoding.
    pub fn new(kind: PatternKind, n: usize, links: Vec<(usize, usize)>, rays: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut closers = vec![false; n];
        for &(o, c) in &links {
            for i in [o, c] {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Domain(format!("index {} is out of range or used twice", i + 1)));
                }
            }
            closers[c] = true;
        }
        for &r in &rays {
            if r >= n || std::mem::replace(&mut seen[r], true) {
                return Err(Error::Domain(format!("ray {} is out of range or used twice", r + 1)));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Domain("links and rays must cover every point".into()));
        }
        let canon = Self::from_closers(kind, &closers)
            .ok_or_else(|| Error::Domain("pattern is not planar for its kind".into()))?;
        let mut sorted = links.clone();
        sorted.sort_unstable();
        if canon.links != sorted {
            return Err(Error::Domain("links cross, enclose a ray, or are wrongly oriented".into()));
        }
        Ok(canon)
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.links.len()
    }
    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }
    pub fn rays(&self) -> &[usize] {
        &self.rays
    }

    pub fn winding(&self) -> usize {
        self.links.iter().filter(|(o, c)| o > c).count()
    }

    /// Partner of each point, `None` for rays.
    fn partners(&self) -> Vec<Option<usize>> {
        let mut p = vec![None; self.n];
        for &(o, c) in &self.links {
            p[o] = Some(c);
            p[c] = Some(o);
        }
        p
    }

    /// Links `(1,2)(3,4)…` on the first `2m` points, rays after.
    pub fn standard(kind: PatternKind, n: usize, m: usize) -> Result<Self> {
        check_counts(n, m)?;
        let closers: Vec<bool> = (0..n).map(|i| i < 2 * m && i % 2 == 1).collect();
        Ok(Self::from_closers(kind, &closers).expect("standard pattern is planar"))
    }

    /// Number of links strictly nested inside each link (along the longest chain).
    pub fn depths(&self) -> Vec<usize> {
        let span = |&(o, c): &(usize, usize)| (o, if c > o { c } else { c + self.n });
        let inside = |inner: (usize, usize), outer: (usize, usize)| {
            let (a, b) = span(&outer);
            let (x, y) = span(&inner);
            (x > a && y < b) || (x + self.n > a && y + self.n < b)
        };
        let k = self.links.len();
        let mut depth = vec![0usize; k];
        // nesting chains are at most k long; relax k times
        for _ in 0..k {
            for i in 0..k {
                for j in 0..k {
                    if i != j && inside(self.links[j], self.links[i]) {
                        depth[i] = depth[i].max(depth[j] + 1);
                    }
                }
            }
        }
        depth
    }
}

impl fmt::Display for LinkPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} n={}|", self.kind, self.n)?;
        for (o, c) in &self.links {
            write!(f, "({} {})", o + 1, c + 1)?;
        }
        f.write_str("|rays:")?;
        if self.rays.is_empty() {
            f.write_str("∅")?;
        } else {
            let r: Vec<String> = self.rays.iter().map(|r| (r + 1).to_string()).collect();
            f.write_str(&r.join(","))?;
        }
        write!(f, "|winding:{}", self.winding())
    }
}

impl FromStr for LinkPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("{what} in pattern '{s}'"));
        let parts: Vec<&str> = s.trim().split('|').collect();
        if parts.len() != 4 {
            return Err(bad("expected four '|'-separated fields"));
        }
        let (kind, n) = parts[0].split_once(" n=").ok_or_else(|| bad("missing 'n='"))?;
        let kind: PatternKind = kind.parse()?;
        let n: usize = n.parse().map_err(|_| bad("bad point count"))?;
        let mut links = Vec::new();
        let mut rest = parts[1];
        while !rest.is_empty() {
            let end = rest.find(')').ok_or_else(|| bad("unterminated link"))?;
            let inner = rest[..end].strip_prefix('(').ok_or_else(|| bad("link must start with '('"))?;
            let (o, c) = inner.split_once(' ').ok_or_else(|| bad("link needs two indices"))?;
            let idx = |t: &str| t.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| i - 1).ok_or_else(|| bad("bad index"));
            links.push((idx(o)?, idx(c)?));
            rest = &rest[end + 1..];
        }
        let rays_txt = parts[2].strip_prefix("rays:").ok_or_else(|| bad("missing 'rays:'"))?;
        let rays = if rays_txt == "∅" || rays_txt.is_empty() {
            Vec::new()
        } else {
            rays_txt
                .split(',')
                .map(|t| t.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| i - 1).ok_or_else(|| bad("bad ray")))
                .collect::<Result<_>>()?
        };
        let w: usize = parts[3]
            .strip_prefix("winding:")
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("bad winding field"))?;
        let p = LinkPattern::new(kind, n, links, rays)?;
        if p.winding() != w {
            return Err(bad("winding does not match the links"));
        }
        Ok(p)
    }
}

impl Serialize for LinkPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LinkPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_counts(n: usize, m: usize) -> Result<()> {
    if 2 * m > n {
        return Err(Error::Domain(format!("need 2m <= n, got n={n}, m={m}")));
    }
    Ok(())
}

fn subsets(n: usize, m: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..1 << n).filter(move |b| b.count_ones() as usize == m).map(move |b| (0..n).map(|i| b >> i & 1 == 1).collect())
}

/// All radial `(n, m)` patterns, `binomial(n, m)` of them.
pub fn enumerate_radial(n: usize, m: usize) -> Result<Vec<LinkPattern>> {
    check_counts(n, m)?;
    if n > 62 {
        return Err(Error::Domain("n too large to enumerate".into()));
    }
    Ok(subsets(n, m).map(|c| LinkPattern::from_closers(PatternKind::Radial, &c).expect("radial")).collect())
}

/// All chordal `(n, m)` patterns: rays run to a boundary point between `n` and `1`.
pub fn enumerate_chordal(n: usize, m: usize) -> Result<Vec<LinkPattern>> {
    check_counts(n, m)?;
    if n > 62 {
        return Err(Error::Domain("n too large to enumerate".into()));
    }
    Ok(subsets(n, m).filter_map(|c| LinkPattern::from_closers(PatternKind::Chordal, &c)).collect())
}

pub fn enumerate(kind: PatternKind, n: usize, m: usize) -> Result<Vec<LinkPattern>> {
    match kind {
        PatternKind::Radial => enumerate_radial(n, m),
        PatternKind::Chordal => enumerate_chordal(n, m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanderLoops {
    pub noncontractible: usize,
    pub contractible: usize,
    pub rays_ok: bool,
    /// Strands joining a ray of one pattern to a ray of the other.
    pub through: usize,
}

/// Glue `alpha` against the reflection of `beta` and classify the resulting strands.
pub fn meander_loops(alpha: &LinkPattern, beta: &LinkPattern) -> Result<MeanderLoops> {
    if alpha.kind != beta.kind || alpha.n != beta.n {
        return Err(Error::Domain("patterns must have the same kind and size".into()));
    }
    let n = alpha.n;
    let pa = alpha.partners();
    let pb = beta.partners();
    // signed counter-clockwise angle travelled along a link from u to v
    let turn = |p: &LinkPattern, u: usize, v: usize| -> f64 {
        let (o, c) = if p.links.binary_search(&(u, v)).is_ok() { (u, v) } else { (v, u) };
        let d = ((c + n - o) % n) as f64 * TAU / n as f64;
        if o == u {
            d
        } else {
            -d
        }
    };
    let mut visited = vec![false; n];
    let mut out = MeanderLoops { noncontractible: 0, contractible: 0, rays_ok: true, through: 0 };
    let mut segments = 0usize;
    // open strands start at a ray of either pattern
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let (first_is_alpha_ray, first_is_beta_ray) = (pa[start].is_none(), pb[start].is_none());
        if !first_is_alpha_ray && !first_is_beta_ray {
            continue;
        }
        // walk away from the ray end: if the point is an α-ray, continue along β
        let mut use_beta = first_is_alpha_ray;
        let start_kind_alpha = first_is_alpha_ray;
        let mut cur = start;
        visited[cur] = true;
        let end_kind_alpha;
        loop {
            let next = if use_beta { pb[cur] } else { pa[cur] };
            match next {
                Some(v) => {
                    segments += 1;
                    cur = v;
                    visited[cur] = true;
                    use_beta = !use_beta;
                }
                None => {
                    end_kind_alpha = !use_beta;
                    break;
                }
            }
        }
        if start_kind_alpha == end_kind_alpha {
            out.rays_ok = false;
        } else {
            out.through += 1;
        }
    }
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut cur = start;
        let mut use_beta = false;
        let mut angle = 0.0;
        loop {
            visited[cur] = true;
            let (p, next) = if use_beta { (beta, pb[cur]) } else { (alpha, pa[cur]) };
            let v = next.expect("closed loops have no rays");
            angle += turn(p, cur, v);
            segments += 1;
            cur = v;
            use_beta = !use_beta;
            if cur == start && !use_beta {
                break;
            }
        }
        let w = (angle / TAU).round() as i64;
        if alpha.kind == PatternKind::Radial && w != 0 {
            out.noncontractible += 1;
        } else {
            out.contractible += 1;
        }
    }
    debug_assert_eq!(segments, alpha.m() + beta.m());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanderMatrix {
    pub kappa: f64,
    pub n: usize,
    pub m: usize,
    pub kind: PatternKind,
    pub a_weight: f64,
    pub b_weight: f64,
    pub patterns: Vec<LinkPattern>,
    pub entries: Vec<Vec<f64>>,
}

impl MeanderMatrix {
    pub fn matrix(&self) -> DMatrix<f64> {
        let k = self.patterns.len();
        DMatrix::from_fn(k, k, |i, j| self.entries[i][j])
    }

    pub fn determinant(&self) -> f64 {
        self.matrix().determinant()
    }

    /// 2-norm condition number.
    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn is_symmetric(&self) -> bool {
        let k = self.patterns.len();
        (0..k).all(|i| (0..k).all(|j| self.entries[i][j] == self.entries[j][i]))
    }
}

/// Entries `2^{n_a}·n(κ)^{n_b}` for non-contractible / contractible loop counts, or 0 when
/// rays of one pattern are joined.
pub fn meander_matrix(params: &KappaParams, n: usize, m: usize, kind: PatternKind) -> Result<MeanderMatrix> {
    let patterns = enumerate(kind, n, m)?;
    let (a_weight, b_weight) = (2.0_f64, params.fugacity);
    let entries = patterns
        .iter()
        .map(|al| {
            patterns
                .iter()
                .map(|be| {
                    let l = meander_loops(al, be)?;
                    Ok(if l.rays_ok {
                        a_weight.powi(l.noncontractible as i32) * b_weight.powi(l.contractible as i32)
                    } else {
                        0.0
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeanderMatrix { kappa: params.kappa, n, m, kind, a_weight, b_weight, patterns, entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureCandidate {
    pub values: Vec<Complex64>,
    pub condition_number: f64,
    pub residual: f64,
    /// Whether every candidate is (numerically) a positive multiple of one common phase.
    pub positive: bool,
}

/// Experimental: solve `Σ_α M(α,β) Z_α = J_β` for the candidate pure partition values.
pub fn pure_partition_candidate(meander: &MeanderMatrix, j_values: &[Complex64]) -> Result<PureCandidate> {
    let k = meander.patterns.len();
    if j_values.len() != k {
        return Err(Error::Config(format!("{} values for {k} patterns", j_values.len())));
    }
    let cond = meander.condition_number();
    if !cond.is_finite() || cond > 1e13 {
        return Err(Error::SingularMatrix { kappa: meander.kappa });
    }
    // M is symmetric, so the transpose in Σ_α M(α,β)Z_α is immaterial.
    let mc = meander.matrix().map(|x| Complex64::new(x, 0.0));
    let rhs = nalgebra::DVector::from_column_slice(j_values);
    let z = mc.clone().lu().solve(&rhs).ok_or(Error::SingularMatrix { kappa: meander.kappa })?;
    let residual = (&mc * &z - &rhs).norm();
    let values: Vec<Complex64> = z.iter().cloned().collect();
    let phase = values.iter().find(|v| v.norm() > 0.0).map(|v| v / v.norm()).unwrap_or(Complex64::new(1.0, 0.0));
    let positive = values.iter().all(|v| {
        let r = v / phase;
        r.re > 0.0 && r.im.abs() <= 1e-8 * r.re
    });
    Ok(PureCandidate { values, condition_number: cond, residual, positive })
}
