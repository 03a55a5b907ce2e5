use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    TruncatedLemma,
    SmallX,
    SmallXParameterFree,
    IntermediateV1,
    IntermediateV2,
    MedianV1,
    MedianV2,
    MedianSmallX,
    GaussianLimit,
}

impl Regime {
    pub const ALL: [Regime; 9] = [
        Regime::TruncatedLemma,
        Regime::SmallX,
        Regime::SmallXParameterFree,
        Regime::IntermediateV1,
        Regime::IntermediateV2,
        Regime::MedianV1,
        Regime::MedianV2,
        Regime::MedianSmallX,
        Regime::GaussianLimit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::TruncatedLemma => "truncated-lemma",
            Regime::SmallX => "small-x",
            Regime::SmallXParameterFree => "small-x-parameter-free",
            Regime::IntermediateV1 => "intermediate-v1",
            Regime::IntermediateV2 => "intermediate-v2",
            Regime::MedianV1 => "median-v1",
            Regime::MedianV2 => "median-v2",
            Regime::MedianSmallX => "median-small-x",
            Regime::GaussianLimit => "gaussian-limit",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        Regime::ALL.into_iter().find(|r| r.as_str() == s)
    }

    /// Median-centred regimes belong to the Poisson-space functionals.
    pub fn is_median(self) -> bool {
        matches!(
            self,
            Regime::MedianV1 | Regime::MedianV2 | Regime::MedianSmallX
        )
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_inclusive: bool,
    pub hi_inclusive: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_inclusive: bool, hi_inclusive: bool) -> Self {
        Interval {
            lo,
            hi,
            lo_inclusive,
            hi_inclusive,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval::new(lo, hi, false, false)
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval::new(lo, hi, true, true)
    }

    /// `(lo, hi]`
    pub fn left_open(lo: f64, hi: f64) -> Self {
        Interval::new(lo, hi, false, true)
    }

    pub fn empty() -> Self {
        Interval::open(f64::NAN, f64::NAN)
    }

    pub fn is_empty(&self) -> bool {
        if self.lo.is_nan() || self.hi.is_nan() {
            return true;
        }
        if self.lo == self.hi {
            !(self.lo_inclusive && self.hi_inclusive)
        } else {
            self.lo > self.hi
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        if self.is_empty() || x.is_nan() {
            return false;
        }
        let above = if self.lo_inclusive { x >= self.lo } else { x > self.lo };
        let below = if self.hi_inclusive { x <= self.hi } else { x < self.hi };
        above && below
    }

    /// Whether `other` lies inside `self` (an empty `other` always does).
    pub fn contains_interval(&self, other: &Interval) -> bool {
        if other.is_empty() {
            return true;
        }
        if self.is_empty() {
            return false;
        }
        let lo_ok = self.lo < other.lo || (self.lo == other.lo && (self.lo_inclusive || !other.lo_inclusive));
        let hi_ok = self.hi > other.hi || (self.hi == other.hi && (self.hi_inclusive || !other.hi_inclusive));
        lo_ok && hi_ok
    }

    /// Distance from `x` to the interval, zero inside.
    pub fn distance(&self, x: f64) -> f64 {
        if self.is_empty() {
            f64::INFINITY
        } else if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        let l = if self.lo_inclusive { '[' } else { '(' };
        let r = if self.hi_inclusive { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

/// Closed-form bound curves; every certificate evaluates through one of these.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundCurve {
    /// `exp(−coef·x²)`
    Quadratic { coef: f64 },
    /// `exp(−c₁·u) + b·u` with `u = min((x/λ)^p, u_cap)`.
    ///
    /// The right-hand side grows again past `u_cap = ln(c₁/b)/c₁`; since a
    /// tail probability is non-increasing in `x`, the value at `u_cap` also
    /// bounds every larger `x`.
    SmallX {
        lambda: f64,
        c1: f64,
        b: f64,
        p: f64,
        u_cap: f64,
    },
    /// `exp(−coef·x^p) + remainder`
    ParameterFree { coef: f64, p: f64, remainder: f64 },
    /// `prefactor·exp(−coef·(x/scale)^power)`
    Stretched {
        prefactor: f64,
        coef: f64,
        scale: f64,
        power: f64,
    },
    Constant { value: f64 },
    Scaled { factor: f64, inner: Box<BoundCurve> },
}

impl BoundCurve {
    /// Unclamped value of the formula.
    pub fn raw(&self, x: f64) -> f64 {
        match self {
            BoundCurve::Quadratic { coef } => (-coef * x * x).exp(),
            BoundCurve::SmallX {
                lambda,
                c1,
                b,
                p,
                u_cap,
            } => {
                let u = (x / lambda).powf(*p).min(*u_cap);
                (-c1 * u).exp() + b * u
            }
            BoundCurve::ParameterFree { coef, p, remainder } => {
                (-coef * x.powf(*p)).exp() + remainder
            }
            BoundCurve::Stretched {
                prefactor,
                coef,
                scale,
                power,
            } => prefactor * (-coef * (x / scale).powf(*power)).exp(),
            BoundCurve::Constant { value } => *value,
            BoundCurve::Scaled { factor, inner } => factor * inner.raw(x),
        }
    }

    /// The bound as a probability: `raw` clipped to 1.
    pub fn eval(&self, x: f64) -> f64 {
        self.raw(x).min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundQuery {
    pub x: f64,
    pub value: f64,
    pub in_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub regime: Regime,
    pub params: BTreeMap<String, f64>,
    pub labels: BTreeMap<String, String>,
    pub valid_x: Interval,
    pub curve: BoundCurve,
    pub notes: Vec<String>,
}

impl BoundCertificate {
    pub fn new(regime: Regime, valid_x: Interval, curve: BoundCurve) -> Self {
        BoundCertificate {
            regime,
            params: BTreeMap::new(),
            labels: BTreeMap::new(),
            valid_x,
            curve,
            notes: Vec::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_label(mut self, name: &str, value: &str) -> Self {
        self.labels.insert(name.to_string(), value.to_string());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn is_applicable(&self) -> bool {
        !self.valid_x.is_empty()
    }

    /// Bound value at `x`; meaningful only when `x` is in `valid_x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.curve.eval(x)
    }

    pub fn query(&self, x: f64) -> BoundQuery {
        BoundQuery {
            x,
            value: self.evaluate(x),
            in_range: self.valid_x.contains(x),
        }
    }

    /// Same certificate with the curve multiplied by `factor` (harness self-test).
    pub fn scaled(&self, factor: f64) -> BoundCertificate {
        let mut c = self.clone();
        c.curve = BoundCurve::Scaled {
            factor,
            inner: Box::new(self.curve.clone()),
        };
        c.params.insert("scale_factor".into(), factor);
        c
    }
}
