//! Link functions `g: [0, K] -> [0, 1]` mapping the summed arm values of a
//! subset to its expected reward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on domain and range checks to absorb floating round-off.
pub const SLACK: f64 = 1e-12;

const RANGE_CHECK_POINTS: usize = 4096;

/// Dense real polynomial `a_0 + a_1 x + ... + a_d x^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coefficients: Vec<f64>,
}

impl Polynomial {
    /// Trailing zero coefficients are dropped; an empty list is the zero polynomial.
    pub fn new(mut coefficients: Vec<f64>) -> Self {
        while coefficients.len() > 1 && coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            coefficients.push(0.0);
        }
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    /// `sum_k |a_k| |x|^k`, a bound on the magnitude of every partial sum in
    /// the evaluation. Used to scale round-off tolerances.
    pub fn abs_scale(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &a| acc * x.abs() + a.abs())
    }

    /// The affine image `lo + (hi - lo) (p - pmin) / (pmax - pmin)` where
    /// `pmin`, `pmax` are the extremes of `p` over a dense grid on `[0, x_max]`.
    /// Degree is preserved. Constant polynomials map to `(lo + hi) / 2`.
    pub fn rescaled_into(&self, x_max: f64, lo: f64, hi: f64) -> Polynomial {
        let (pmin, pmax) = grid_extremes(|x| self.eval(x), x_max);
        if pmax - pmin <= 0.0 {
            return Polynomial::new(vec![0.5 * (lo + hi)]);
        }
        let scale = (hi - lo) / (pmax - pmin);
        let mut c: Vec<f64> = self.coefficients.iter().map(|a| a * scale).collect();
        c[0] += lo - pmin * scale;
        Polynomial::new(c)
    }
}

fn grid_extremes(f: impl Fn(f64) -> f64, x_max: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..=RANGE_CHECK_POINTS {
        let y = f(x_max * i as f64 / RANGE_CHECK_POINTS as f64);
        lo = lo.min(y);
        hi = hi.max(y);
    }
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinkKind {
    Polynomial(Polynomial),
    /// `x / (1 + x)`, the unit-price multinomial-logit purchase probability.
    Mnl,
    /// Piecewise-linear interpolation through `(x, g(x))` knots.
    Tabulated(Vec<(f64, f64)>),
    /// `exp(x - x_max)`, the exponential rescaled to end at 1.
    Exp,
}

/// A validated link function on `[0, domain_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    kind: LinkKind,
    domain_max: f64,
}

impl Link {
    pub fn mnl(domain_max: f64) -> Result<Self> {
        Self::new(LinkKind::Mnl, domain_max)
    }

    pub fn exp(domain_max: f64) -> Result<Self> {
        Self::new(LinkKind::Exp, domain_max)
    }

    pub fn polynomial(coefficients: Vec<f64>, domain_max: f64) -> Result<Self> {
        Self::new(LinkKind::Polynomial(Polynomial::new(coefficients)), domain_max)
    }

    pub fn tabulated(points: Vec<(f64, f64)>, domain_max: f64) -> Result<Self> {
        Self::new(LinkKind::Tabulated(points), domain_max)
    }

    pub fn new(kind: LinkKind, domain_max: f64) -> Result<Self> {
        if !(domain_max.is_finite() && domain_max > 0.0) {
            return Err(Error::invalid(format!("link domain must be positive, got {domain_max}")));
        }
        match &kind {
            LinkKind::Polynomial(p) => {
                if p.coefficients.iter().any(|a| !a.is_finite()) {
                    return Err(Error::invalid("polynomial coefficients must be finite"));
                }
                if p.degree() < 1 {
                    return Err(Error::invalid("polynomial link needs degree >= 1"));
                }
            }
            LinkKind::Tabulated(pts) => {
                if pts.len() < 2 {
                    return Err(Error::invalid("tabulated link needs at least two knots"));
                }
                if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(Error::invalid("tabulated knots must be finite"));
                }
                if pts.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::invalid("tabulated grid must be strictly increasing in x"));
                }
                if pts[0].0 > 0.0 || pts[pts.len() - 1].0 < domain_max {
                    return Err(Error::invalid(format!("tabulated grid must cover [0, {domain_max}]")));
                }
                if pts.iter().any(|&(_, y)| !(-SLACK..=1.0 + SLACK).contains(&y)) {
                    return Err(Error::invalid("tabulated values must lie in [0, 1]"));
                }
            }
            LinkKind::Mnl | LinkKind::Exp => {}
        }
        let link = Self { kind, domain_max };
        let (lo, hi) = grid_extremes(|x| link.raw(x), domain_max);
        if lo < -SLACK || hi > 1.0 + SLACK {
            return Err(Error::invalid(format!("link leaves [0, 1] on [0, {domain_max}]: range [{lo}, {hi}]")));
        }
        Ok(link)
    }

    pub fn kind(&self) -> &LinkKind {
        &self.kind
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match &self.kind {
            LinkKind::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    /// Declared polynomial degree, `None` for non-polynomial kinds.
    pub fn degree(&self) -> Option<usize> {
        self.as_polynomial().map(Polynomial::degree)
    }

    fn raw(&self, x: f64) -> f64 {
        match &self.kind {
            LinkKind::Polynomial(p) => p.eval(x),
            LinkKind::Mnl => x / (1.0 + x),
            LinkKind::Exp => (x - self.domain_max).exp(),
            LinkKind::Tabulated(pts) => interpolate(pts, x),
        }
    }

    /// Evaluates `g(x)` for `x` in `[0, domain_max]` (with [`SLACK`]).
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= -SLACK && x <= self.domain_max + SLACK) {
            return Err(Error::Domain { x, max: self.domain_max });
        }
        Ok(self.raw(x.clamp(0.0, self.domain_max)))
    }
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    let hi = pts.partition_point(|&(px, _)| px < x);
    if hi == 0 {
        return pts[0].1;
    }
    if hi == pts.len() {
        return pts[pts.len() - 1].1;
    }
    let (x0, y0) = pts[hi - 1];
    let (x1, y1) = pts[hi];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Serializable description of a link; the domain is supplied at build time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkSpec {
    Mnl,
    Exp,
    Polynomial { coefficients: Vec<f64> },
    Tabulated { points: Vec<(f64, f64)> },
}

impl LinkSpec {
    pub fn build(&self, domain_max: f64) -> Result<Link> {
        match self {
            LinkSpec::Mnl => Link::mnl(domain_max),
            LinkSpec::Exp => Link::exp(domain_max),
            LinkSpec::Polynomial { coefficients } => Link::polynomial(coefficients.clone(), domain_max),
            LinkSpec::Tabulated { points } => Link::tabulated(points.clone(), domain_max),
        }
    }

    /// Parses the short CLI forms `mnl`, `exp`, `poly:a0,a1,...` and
    /// `linear:c` (the link `c x`).
    pub fn parse_short(s: &str) -> Result<Self> {
        let parse_list = |body: &str| -> Result<Vec<f64>> {
            body.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::invalid(format!("bad coefficient {t:?}: {e}"))))
                .collect()
        };
        match s.split_once(':') {
            None if s == "mnl" => Ok(LinkSpec::Mnl),
            None if s == "exp" => Ok(LinkSpec::Exp),
            Some(("poly", body)) => Ok(LinkSpec::Polynomial { coefficients: parse_list(body)? }),
            Some(("linear", body)) => {
                let c = parse_list(body)?;
                if c.len() != 1 {
                    return Err(Error::invalid("linear link takes one slope"));
                }
                Ok(LinkSpec::Polynomial { coefficients: vec![0.0, c[0]] })
            }
            _ => Err(Error::invalid(format!("unknown link {s:?}; expected mnl, exp, poly:a0,a1,... or linear:c"))),
        }
    }
}
