//! Contour geometry, Gauss–Legendre discretization and branch-tracked iterated integration.
//!
//! A contour is discretized into composite 16-point Gauss–Legendre panels laid out in
//! traversal order, so that logarithms of the integrand factors can be continued node by
//! node from the contour's base point.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::canonical_ln;

const GL_POINTS: usize = 16;
/// Largest accepted change of argument of a single factor between consecutive nodes.
pub const MAX_ARG_STEP: f64 = PI / 4.0;

fn gl_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut v = GaussLegendre::new(GL_POINTS).expect("valid degree").as_node_weight_pairs().to_vec();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coord {
    /// Factors `sin((z−x)/2)`; the covering coordinate of the unit disk.
    Angular,
    /// Factors `z − x`.
    HalfPlane,
}

impl Coord {
    #[inline]
    pub fn factor(self, d: Complex64) -> Complex64 {
        match self {
            Coord::Angular => (d * 0.5).sin(),
            Coord::HalfPlane => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ContourSpec {
    /// Commutator loop about the real points `p < q`, based at `p + clearance`.
    ///
    /// Traversal: arc to `q`, ccw about `q`, arc back, ccw about `p`, arc, cw about `q`,
    /// arc back, cw about `p`. The connecting arc rises to `height`.
    Pochhammer { p: f64, q: f64, clearance: f64, height: f64 },
    /// Counter-clockwise circle about a real point, based at `center + radius`.
    Loop { center: f64, radius: f64 },
    /// In angular coordinates, the circle `|ζ| = radius` about the origin, i.e. the
    /// horizontal line `Im z = −ln radius` from `start` to `start + 2π`.
    OriginCircle { radius: f64, start: f64 },
    /// The open real interval `(a, b)`; only used by the interval reduction.
    Interval { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Segment { from: Complex64, to: Complex64, panels: usize },
    Arc { center: Complex64, radius: f64, start: f64, sweep: f64, panels: usize },
}

impl Piece {
    fn push(&self, level: usize, z: &mut Vec<Complex64>, w: &mut Vec<Complex64>) {
        let rule = gl_rule();
        let (panels, param): (usize, Box<dyn Fn(f64) -> (Complex64, Complex64)>) = match *self {
            Piece::Segment { from, to, panels } => (panels, Box::new(move |s| (from + (to - from) * s, to - from))),
            Piece::Arc { center, radius, start, sweep, panels } => (
                panels,
                Box::new(move |s| {
                    let e = Complex64::from_polar(radius, start + sweep * s);
                    (center + e, Complex64::i() * e * sweep)
                }),
            ),
        };
        let total = panels << level;
        let h = 1.0 / total as f64;
        for k in 0..total {
            let s0 = k as f64 * h;
            for &(x, wt) in rule {
                let s = s0 + 0.5 * h * (x + 1.0);
                let (p, dp) = param(s);
                z.push(p);
                w.push(dp * (0.5 * h * wt));
            }
        }
    }
}

/// Quadrature nodes of a contour in traversal order.
#[derive(Debug, Clone)]
pub struct Discretized {
    pub base: Complex64,
    pub z: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

fn seg_panels(len: f64, scale: f64) -> usize {
    ((len / (2.0 * scale)).ceil() as usize).max(1)
}

impl ContourSpec {
    pub fn base(&self) -> Complex64 {
        match *self {
            ContourSpec::Pochhammer { p, clearance, .. } => Complex64::new(p + clearance, 0.0),
            ContourSpec::Loop { center, radius } => Complex64::new(center + radius, 0.0),
            ContourSpec::OriginCircle { radius, start } => Complex64::new(start, -radius.ln()),
            ContourSpec::Interval { a, .. } => Complex64::new(a, 0.0),
        }
    }

    /// Whether the contour is a closed cycle.
    pub fn is_closed(&self) -> bool {
        !matches!(self, ContourSpec::Interval { .. })
    }

    /// Highest point reached above the real axis.
    pub fn top(&self) -> f64 {
        match *self {
            ContourSpec::Pochhammer { clearance, height, .. } => height.max(clearance),
            ContourSpec::Loop { radius, .. } => radius,
            ContourSpec::OriginCircle { radius, .. } => -radius.ln(),
            ContourSpec::Interval { .. } => 0.0,
        }
    }

    fn pieces(&self) -> Result<Vec<Piece>> {
        match *self {
            ContourSpec::Pochhammer { p, q, clearance: r, height: h } => {
                if !(r > 0.0) || !(h > 0.0) || q - p <= 4.0 * r {
                    return Err(Error::Clearance(format!("pochhammer about ({p}, {q}) with clearance {r}, height {h}")));
                }
                let c = |x: f64, y: f64| Complex64::new(x, y);
                let (a0, a1, a2, a3) = (c(p + r, 0.0), c(p + r, h), c(q - r, h), c(q - r, 0.0));
                let nv = seg_panels(h, r);
                let nh = seg_panels(q - p - 2.0 * r, r);
                let fwd = [
                    Piece::Segment { from: a0, to: a1, panels: nv },
                    Piece::Segment { from: a1, to: a2, panels: nh },
                    Piece::Segment { from: a2, to: a3, panels: nv },
                ];
                let back = [
                    Piece::Segment { from: a3, to: a2, panels: nv },
                    Piece::Segment { from: a2, to: a1, panels: nh },
                    Piece::Segment { from: a1, to: a0, panels: nv },
                ];
                let circle = |x: f64, start: f64, sweep: f64| Piece::Arc {
                    center: c(x, 0.0),
                    radius: r,
                    start,
                    sweep,
                    panels: 4,
                };
                let mut v = Vec::with_capacity(16);
                v.extend(fwd);
                v.push(circle(q, PI, TAU));
                v.extend(back);
                v.push(circle(p, 0.0, TAU));
                v.extend(fwd);
                v.push(circle(q, PI, -TAU));
                v.extend(back);
                v.push(circle(p, 0.0, -TAU));
                Ok(v)
            }
            ContourSpec::Loop { center, radius } => {
                if !(radius > 0.0) {
                    return Err(Error::Clearance("loop radius must be positive".into()));
                }
                Ok(vec![Piece::Arc { center: Complex64::new(center, 0.0), radius, start: 0.0, sweep: TAU, panels: 4 }])
            }
            ContourSpec::OriginCircle { radius, start } => {
                if !(radius > 0.0 && radius < 1.0) {
                    return Err(Error::Clearance(format!("origin circle radius {radius} must lie in (0, 1)")));
                }
                let y = -radius.ln();
                Ok(vec![Piece::Segment {
                    from: Complex64::new(start, y),
                    to: Complex64::new(start + TAU, y),
                    panels: 8,
                }])
            }
            ContourSpec::Interval { .. } => Err(Error::Config("intervals are integrated by interval_reduction".into())),
        }
    }

    pub fn discretize(&self, level: usize) -> Result<Discretized> {
        let mut z = Vec::new();
        let mut w = Vec::new();
        for piece in self.pieces()? {
            piece.push(level, &mut z, &mut w);
        }
        Ok(Discretized { base: self.base(), z, w })
    }
}

/// A multivalued Coulomb-gas integrand in the integration variables `v_k`:
///
/// `Π_{k,p} f(v_k − x_p)^{e_kp} · Π_{k<l} f(v_k − v_l)^{e_kl} · Π_k e^{c_k v_k}`
///
/// with `f` fixed by the coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchedIntegrand {
    pub coord: Coord,
    pub fixed: Vec<Complex64>,
    /// `[variable][fixed point]`
    pub fixed_exp: Vec<Vec<f64>>,
    /// `[variable][variable]`, symmetric; the diagonal is ignored.
    pub pair_exp: Vec<Vec<f64>>,
    pub spin: Vec<f64>,
}

impl BranchedIntegrand {
    /// Single-variable integrand.
    pub fn single(coord: Coord, fixed: Vec<(Complex64, f64)>) -> Self {
        let (pts, exps) = fixed.into_iter().unzip();
        Self { coord, fixed: pts, fixed_exp: vec![exps], pair_exp: vec![vec![0.0]], spin: vec![0.0] }
    }

    pub fn vars(&self) -> usize {
        self.fixed_exp.len()
    }

    fn validate(&self, contours: &[ContourSpec]) -> Result<()> {
        let m = self.vars();
        if contours.len() != m || self.pair_exp.len() != m || self.spin.len() != m {
            return Err(Error::Config(format!("{} contours for {m} integration variables", contours.len())));
        }
        if self.fixed_exp.iter().any(|e| e.len() != self.fixed.len()) || self.pair_exp.iter().any(|e| e.len() != m) {
            return Err(Error::Config("exponent table has the wrong shape".into()));
        }
        Ok(())
    }

    /// Value of the integrand at a point, continued from the base points of the contours
    /// along straight lines is not well defined in general; this evaluates the principal
    /// branch and is meant for real configurations only.
    pub fn principal_log(&self, v: &[Complex64]) -> Complex64 {
        let mut log = Complex64::new(0.0, 0.0);
        for (k, &vk) in v.iter().enumerate() {
            for (p, &x) in self.fixed.iter().enumerate() {
                if self.fixed_exp[k][p] != 0.0 {
                    log += self.fixed_exp[k][p] * canonical_ln(self.coord.factor(vk - x));
                }
            }
            for l in k + 1..v.len() {
                if self.pair_exp[k][l] != 0.0 {
                    log += self.pair_exp[k][l] * canonical_ln(self.coord.factor(vk - v[l]));
                }
            }
            log += self.spin[k] * vk;
        }
        log
    }
}

/// Continue `ln f(z_i)` along the nodes from the base, where the factor equals `at_base`.
///
/// `start` is the chosen log at the base; it may differ from a true logarithm of `at_base`
/// by a constant (the canonical branch drops signs), which is carried along unchanged.
fn track(
    start: Complex64,
    at_base: Complex64,
    values: impl Iterator<Item = Complex64>,
    out: &mut Vec<Complex64>,
) -> Result<()> {
    out.clear();
    if at_base.norm() == 0.0 {
        return Err(Error::Clearance("base point hits a branch point".into()));
    }
    let mut prev = at_base.ln();
    let shift = start - prev;
    for v in values {
        if v.norm() == 0.0 {
            return Err(Error::Clearance("quadrature node hits a branch point".into()));
        }
        let mut l = v.ln();
        let k = ((prev.im - l.im) / TAU).round();
        l.im += k * TAU;
        if (l.im - prev.im).abs() > MAX_ARG_STEP {
            return Err(Error::Accuracy { achieved: f64::INFINITY, requested: 0.0 });
        }
        out.push(l + shift);
        prev = l;
    }
    Ok(())
}

struct Prepared<'a> {
    f: &'a BranchedIntegrand,
    paths: Vec<Discretized>,
    /// Summed fixed-point and spin log per variable and node.
    own: Vec<Vec<Complex64>>,
    /// `cross[k][l][i]` for k < l: log f(z_k[i] − b_l), continued along path k.
    cross: Vec<Vec<Vec<Complex64>>>,
    /// log f(b_k − b_l) at the base configuration.
    cross0: Vec<Vec<Complex64>>,
}

impl<'a> Prepared<'a> {
    fn new(f: &'a BranchedIntegrand, contours: &[ContourSpec], level: usize) -> Result<Self> {
        f.validate(contours)?;
        let m = f.vars();
        let paths: Vec<Discretized> = contours.iter().map(|c| c.discretize(level)).collect::<Result<_>>()?;
        let mut own = Vec::with_capacity(m);
        let mut buf = Vec::new();
        for (k, path) in paths.iter().enumerate() {
            let mut acc: Vec<Complex64> = path.z.iter().map(|&z| f.spin[k] * z).collect();
            for (p, &x) in f.fixed.iter().enumerate() {
                let e = f.fixed_exp[k][p];
                if e == 0.0 {
                    continue;
                }
                let b = f.coord.factor(path.base - x);
                track(canonical_ln(b), b, path.z.iter().map(|&z| f.coord.factor(z - x)), &mut buf)?;
                for (a, l) in acc.iter_mut().zip(&buf) {
                    *a += e * l;
                }
            }
            own.push(acc);
        }
        let mut cross = vec![vec![Vec::new(); m]; m];
        let mut cross0 = vec![vec![Complex64::new(0.0, 0.0); m]; m];
        for k in 0..m {
            for l in k + 1..m {
                let bl = paths[l].base;
                let b = f.coord.factor(paths[k].base - bl);
                let start = canonical_ln(b);
                cross0[k][l] = start;
                if f.pair_exp[k][l] == 0.0 {
                    continue;
                }
                track(start, b, paths[k].z.iter().map(|&z| f.coord.factor(z - bl)), &mut buf)?;
                cross[k][l] = buf.clone();
            }
        }
        Ok(Self { f, paths, own, cross, cross0 })
    }

    fn integrate(&self) -> Result<Complex64> {
        let mut nodes = Vec::with_capacity(self.paths.len());
        self.level(0, &mut nodes, Complex64::new(0.0, 0.0))
    }

    fn level(&self, l: usize, outer: &mut Vec<usize>, acc: Complex64) -> Result<Complex64> {
        let path = &self.paths[l];
        let n = path.z.len();
        let mut logs = self.own[l].clone();
        let mut buf = Vec::with_capacity(n);
        for (j, &i) in outer.iter().enumerate() {
            let e = self.f.pair_exp[j][l];
            if e == 0.0 {
                continue;
            }
            let zj = self.paths[j].z[i];
            let start = if self.cross[j][l].is_empty() { self.cross0[j][l] } else { self.cross[j][l][i] };
            let b = self.f.coord.factor(zj - path.base);
            track(start, b, path.z.iter().map(|&z| self.f.coord.factor(zj - z)), &mut buf)?;
            for (a, b) in logs.iter_mut().zip(&buf) {
                *a += e * b;
            }
        }
        let last = l + 1 == self.paths.len();
        let mut sum = Complex64::new(0.0, 0.0);
        for t in 0..n {
            let here = acc + logs[t];
            if last {
                sum += path.w[t] * here.exp();
            } else {
                outer.push(t);
                sum += path.w[t] * self.level(l + 1, outer, here)?;
                outer.pop();
            }
        }
        Ok(sum)
    }
}

/// Iterated integral over the contours at a fixed refinement level.
pub fn integrate_at_level(f: &BranchedIntegrand, contours: &[ContourSpec], level: usize) -> Result<Complex64> {
    if f.vars() == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Prepared::new(f, contours, level)?.integrate()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: Complex64,
    pub error: f64,
    /// Level at which `value` was computed.
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    /// Accepted difference between successive refinements, relative to `max(1, |I|)`.
    pub tol: f64,
    pub min_level: usize,
    pub max_level: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { tol: 1e-9, min_level: 0, max_level: 6 }
    }
}

/// Refine all contours together until two successive levels agree.
pub fn integrate_adaptive(f: &BranchedIntegrand, contours: &[ContourSpec], opts: &QuadOptions) -> Result<Quadrature> {
    if f.vars() == 0 {
        return Ok(Quadrature { value: Complex64::new(1.0, 0.0), error: 0.0, level: 0 });
    }
    let mut prev: Option<Complex64> = None;
    let mut best = f64::INFINITY;
    for level in opts.min_level..=opts.max_level {
        let cur = match integrate_at_level(f, contours, level) {
            Ok(v) => v,
            Err(Error::Accuracy { .. }) => {
                prev = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some(p) = prev {
            let err = (cur - p).norm();
            best = best.min(err);
            if err <= opts.tol * cur.norm().max(1.0) {
                return Ok(Quadrature { value: cur, error: err, level });
            }
        }
        prev = Some(cur);
    }
    Err(Error::Accuracy { achieved: best, requested: opts.tol })
}

/// Single-variable contour integral with error estimate.
pub fn integrate_contour(f: &BranchedIntegrand, contour: &ContourSpec, opts: &QuadOptions) -> Result<Quadrature> {
    integrate_adaptive(f, std::slice::from_ref(contour), opts)
}

/// Net number of turns of each fixed-point factor of variable `var` around its contour.
pub fn windings(f: &BranchedIntegrand, contour: &ContourSpec, var: usize, level: usize) -> Result<Vec<f64>> {
    let path = contour.discretize(level)?;
    let mut buf = Vec::new();
    let mut out = Vec::with_capacity(f.fixed.len());
    for &x in &f.fixed {
        let b = f.coord.factor(path.base - x);
        let start = canonical_ln(b);
        let nodes = path.z.iter().chain(std::iter::once(&path.base)).map(|&z| f.coord.factor(z - x));
        track(start, b, nodes, &mut buf)?;
        let _ = var;
        out.push((buf.last().unwrap().im - start.im) / TAU);
    }
    Ok(out)
}

/// Interval reduction of a single-variable Pochhammer integral about `(x_i, x_j)`:
/// `(1 − e^{2πi e_i})(1 − e^{2πi e_j}) ∫_{x_i}^{x_j} f`, with the endpoint singularities
/// absorbed into a Gauss–Jacobi weight.
pub fn interval_reduction(f: &BranchedIntegrand, i: usize, j: usize, opts: &QuadOptions) -> Result<Quadrature> {
    if f.vars() != 1 {
        return Err(Error::NotReducible("interval reduction needs a single integration variable".into()));
    }
    let (p, q) = (f.fixed[i], f.fixed[j]);
    if p.im != 0.0 || q.im != 0.0 || !(p.re < q.re) {
        return Err(Error::NotReducible("endpoints must be real and increasing".into()));
    }
    let (p, q) = (p.re, q.re);
    let (ep, eq) = (f.fixed_exp[0][i], f.fixed_exp[0][j]);
    if ep <= -1.0 || eq <= -1.0 {
        return Err(Error::NotReducible(format!("endpoint exponents {ep}, {eq} are not integrable")));
    }
    for (k, x) in f.fixed.iter().enumerate() {
        if k != i && k != j && x.im == 0.0 && x.re > p && x.re < q && f.fixed_exp[0][k] != 0.0 {
            return Err(Error::NotReducible("another branch point lies inside the interval".into()));
        }
    }
    let pref = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, TAU * ep))
        * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, TAU * eq));
    let half = 0.5 * (q - p);
    let smooth = |t: f64| -> Complex64 {
        let x = Complex64::new(0.5 * (p + q) + half * t, 0.0);
        let mut log = f.principal_log(&[x]);
        log -= ep * (half * (1.0 + t)).ln() + eq * (half * (1.0 - t)).ln();
        log.exp()
    };
    let mut prev: Option<Complex64> = None;
    let mut deg = 16;
    let mut best = f64::INFINITY;
    while deg <= 1024 {
        let rule = gauss_quad::jacobi::GaussJacobi::new(deg, eq, ep)
            .map_err(|e| Error::NotReducible(format!("gauss-jacobi rule: {e}")))?;
        let s: Complex64 = rule.as_node_weight_pairs().iter().map(|&(t, w)| smooth(t) * w).sum();
        let cur = pref * s * half.powf(ep + eq + 1.0);
        if let Some(pv) = prev {
            let err = (cur - pv).norm();
            best = best.min(err);
            if err <= opts.tol * cur.norm().max(1.0) {
                return Ok(Quadrature { value: cur, error: err, level: deg });
            }
        }
        prev = Some(cur);
        deg *= 2;
    }
    Err(Error::Accuracy { achieved: best, requested: opts.tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn beta_integrand(p: f64, q: f64) -> BranchedIntegrand {
        BranchedIntegrand::single(Coord::HalfPlane, vec![(Complex64::new(0.0, 0.0), p), (Complex64::new(1.0, 0.0), q)])
    }

    fn poch01() -> ContourSpec {
        ContourSpec::Pochhammer { p: 0.0, q: 1.0, clearance: 0.1, height: 0.15 }
    }

    #[test]
    fn beta_half_half_is_four_pi() {
        let f = beta_integrand(-0.5, -0.5);
        let r = integrate_contour(&f, &poch01(), &QuadOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!((r.value - 4.0 * PI).norm() < 1e-10 * 4.0 * PI, "{:?}", r);
        let red = interval_reduction(&f, 0, 1, &QuadOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!((red.value - 4.0 * PI).norm() < 1e-10, "{:?}", red);
    }

    #[test]
    fn constant_and_integer_cases_vanish() {
        let f = BranchedIntegrand::single(Coord::HalfPlane, vec![]);
        let r = integrate_contour(&f, &poch01(), &QuadOptions::default()).unwrap();
        assert!(r.value.norm() < 1e-13);
        let f = beta_integrand(1.0, 1.0);
        let r = integrate_contour(&f, &poch01(), &QuadOptions::default()).unwrap();
        assert!(r.value.norm() < 1e-13);
        let f = beta_integrand(0.0, -0.5);
        let red = interval_reduction(&f, 0, 1, &QuadOptions::default()).unwrap();
        assert!(red.value.norm() < 1e-14);
    }

    #[test]
    fn pochhammer_has_zero_winding() {
        let f = beta_integrand(-0.3, 0.7);
        let w = windings(&f, &poch01(), 0, 1).unwrap();
        assert!(w.iter().all(|x| x.abs() < 1e-9), "{w:?}");
        let w = windings(&f, &ContourSpec::Loop { center: 0.0, radius: 0.1 }, 0, 1).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-9 && w[1].abs() < 1e-9);
    }

    #[test]
    fn contour_geometry_invariance() {
        let f = beta_integrand(-0.37, 0.21);
        let o = QuadOptions { tol: 1e-12, ..Default::default() };
        let a = integrate_contour(&f, &poch01(), &o).unwrap().value;
        let b = integrate_contour(&f, &ContourSpec::Pochhammer { p: 0.0, q: 1.0, clearance: 0.05, height: 0.4 }, &o)
            .unwrap()
            .value;
        assert!((a - b).norm() < 1e-9 * a.norm());
    }

    #[test]
    fn kappa_six_dual_method() {
        let e = -4.0 / 6.0;
        let f = beta_integrand(e, e);
        let o = QuadOptions { tol: 1e-12, ..Default::default() };
        let a = integrate_contour(&f, &poch01(), &o).unwrap().value;
        let b = interval_reduction(&f, 0, 1, &o).unwrap().value;
        assert!((a - b).norm() < 1e-8 * b.norm());
    }

    #[test]
    fn divergent_endpoint_not_reducible() {
        let f = beta_integrand(-1.2, 0.5);
        assert!(matches!(interval_reduction(&f, 0, 1, &QuadOptions::default()), Err(Error::NotReducible(_))));
    }

    #[test]
    fn origin_circle_residue() {
        // ∮ sin((z−x)/2)^{-2} dz over one period of a line above the pole: the function is
        // 2π-periodic with vanishing mean, so the integral is 0; e^{iz} integrates to 0 too,
        // while a constant gives 2π.
        let f = BranchedIntegrand::single(Coord::Angular, vec![(Complex64::new(0.3, 0.0), -2.0)]);
        let c = ContourSpec::OriginCircle { radius: 0.5, start: 0.0 };
        let r = integrate_contour(&f, &c, &QuadOptions::default()).unwrap();
        assert!(r.value.norm() < 1e-10, "{:?}", r);
        let one = BranchedIntegrand::single(Coord::Angular, vec![]);
        let r = integrate_contour(&one, &c, &QuadOptions::default()).unwrap();
        assert!((r.value - TAU).norm() < 1e-12);
    }

    #[test]
    fn clearance_errors() {
        let bad = ContourSpec::Pochhammer { p: 0.0, q: 0.1, clearance: 0.1, height: 0.1 };
        assert!(matches!(bad.discretize(0), Err(Error::Clearance(_))));
        assert!(ContourSpec::OriginCircle { radius: 1.5, start: 0.0 }.discretize(0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn contour_matches_interval(p in -0.95f64..2.0, q in -0.95f64..2.0) {
            let f = beta_integrand(p, q);
            let o = QuadOptions { tol: 1e-11, ..Default::default() };
            let a = integrate_contour(&f, &poch01(), &o).unwrap();
            let b = interval_reduction(&f, 0, 1, &o).unwrap();
            prop_assert!((a.value - b.value).norm() <= 1e-8 * b.value.norm().max(1.0), "{:?} {:?}", a, b);
        }
    }
}
