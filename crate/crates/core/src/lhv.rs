//! Local hidden-variable models.
//!
//! A model is a λ-domain with a normalized weight plus one ±1 response per
//! setting. Correlations are `Σ_k w_k X(λ_k) Y(λ_k)` over the domain's nodes:
//! the points of a finite domain, or the midpoints of a composite midpoint
//! rule on an interval. Responses are data (constants, `sign(cos(λ − φ))`,
//! lookup tables), so models serialize to JSON and never run user code.
//!
//! JSON schema:
//!
//! ```json
//! {
//!   "domain": {"kind": "finite", "points": [{"label": "l1", "weight": 0.5}, ...]}
//!          | {"kind": "interval", "lo": 0.0, "hi": 6.283185307179586,
//!             "weight": {"kind": "uniform"} | {"kind": "histogram", "masses": [...]},
//!             "quadrature_points": 4096},
//!   "responses": {
//!     "A":  {"kind": "constant", "value": 1}
//!         | {"kind": "sign_cos", "offset": 0.0}
//!         | {"kind": "table", "values": [1, -1, ...]},
//!     "A'": ..., "B": ..., "B'": ...
//!   }
//! }
//! ```
//!
//! Histogram masses are per equal-width bin and sum to one. A table on an
//! interval domain assigns its entries to equal-width bins.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::consistency::CorrelationSet;
use crate::error::{Error, Result};
use crate::labels::{Outcome, Pair, Setting};

pub const DEFAULT_QUADRATURE_POINTS: usize = 4096;
/// Allowed deviation of the total weight from one.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Minimum number of λ points at which responses are checked to be ±1.
pub const RESPONSE_CHECK_POINTS: usize = 1024;

fn default_quadrature_points() -> usize {
    DEFAULT_QUADRATURE_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub label: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFunction {
    #[default]
    Uniform,
    Histogram {
        masses: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaDomain {
    Finite {
        points: Vec<LambdaPoint>,
    },
    Interval {
        lo: f64,
        hi: f64,
        #[serde(default)]
        weight: WeightFunction,
        #[serde(default = "default_quadrature_points")]
        quadrature_points: usize,
    },
}

impl LambdaDomain {
    /// Finite domain with uniform weights.
    pub fn uniform_finite(n: usize) -> Self {
        LambdaDomain::Finite {
            points: (0..n)
                .map(|i| LambdaPoint {
                    label: format!("l{}", i + 1),
                    weight: 1.0 / n as f64,
                })
                .collect(),
        }
    }

    /// `[0, 2π)` with uniform weight.
    pub fn circle(quadrature_points: usize) -> Self {
        LambdaDomain::Interval {
            lo: 0.0,
            hi: std::f64::consts::TAU,
            weight: WeightFunction::Uniform,
            quadrature_points,
        }
    }

    /// Quadrature or point nodes: `(label, λ, raw weight)`. λ is the point
    /// index for finite domains.
    fn nodes(&self) -> Result<Vec<(String, f64, f64)>> {
        match self {
            LambdaDomain::Finite { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidModel("finite domain has no points".into()));
                }
                for p in points {
                    if !p.weight.is_finite() || p.weight < 0.0 {
                        return Err(Error::InvalidModel(format!(
                            "point {:?} has weight {}",
                            p.label, p.weight
                        )));
                    }
                }
                let total: f64 = points.iter().map(|p| p.weight).sum();
                if (total - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::NonNormalizedDomain(total));
                }
                Ok(points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p.label.clone(), i as f64, p.weight))
                    .collect())
            }
            LambdaDomain::Interval {
                lo,
                hi,
                weight,
                quadrature_points,
            } => {
                let (lo, hi, n) = (*lo, *hi, *quadrature_points);
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidModel(format!("empty interval [{lo}, {hi})")));
                }
                if n == 0 {
                    return Err(Error::InvalidModel("zero quadrature points".into()));
                }
                let width = hi - lo;
                let mass = match weight {
                    WeightFunction::Uniform => 1.0,
                    WeightFunction::Histogram { masses } => {
                        if masses.is_empty() || masses.len() > n {
                            return Err(Error::InvalidModel(format!(
                                "histogram needs between 1 and {n} bins, got {}",
                                masses.len()
                            )));
                        }
                        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
                            return Err(Error::InvalidModel("negative histogram mass".into()));
                        }
                        masses.iter().sum()
                    }
                };
                if (mass - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::NonNormalizedDomain(mass));
                }
                let h = width / n as f64;
                Ok((0..n)
                    .map(|k| {
                        let lambda = lo + (k as f64 + 0.5) * h;
                        let density = match weight {
                            WeightFunction::Uniform => 1.0 / width,
                            WeightFunction::Histogram { masses } => {
                                let bin = bin_index(lambda, lo, width, masses.len());
                                masses[bin] * masses.len() as f64 / width
                            }
                        };
                        (format!("λ={lambda:.12}"), lambda, density * h)
                    })
                    .collect())
            }
        }
    }
}

fn bin_index(lambda: f64, lo: f64, width: f64, bins: usize) -> usize {
    let b = ((lambda - lo) / width * bins as f64).floor();
    (b.max(0.0) as usize).min(bins - 1)
}

/// Response of one setting as a function of λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Response {
    Constant {
        value: Outcome,
    },
    /// `sign(cos(λ − offset))`, with `sign(0) = +1`. Interval domains only.
    SignCos {
        offset: f64,
    },
    Table {
        values: Vec<Outcome>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Responses {
    #[serde(rename = "A")]
    pub a: Response,
    #[serde(rename = "A'")]
    pub a_prime: Response,
    #[serde(rename = "B")]
    pub b: Response,
    #[serde(rename = "B'")]
    pub b_prime: Response,
}

impl Responses {
    pub fn get(&self, s: Setting) -> &Response {
        match s {
            Setting::A => &self.a,
            Setting::APrime => &self.a_prime,
            Setting::B => &self.b,
            Setting::BPrime => &self.b_prime,
        }
    }

    pub fn from_array(r: [Response; 4]) -> Self {
        let [a, a_prime, b, b_prime] = r;
        Responses {
            a,
            a_prime,
            b,
            b_prime,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawModel {
    domain: LambdaDomain,
    responses: Responses,
}

/// Domain nodes with normalized weights and every response evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
struct Tabulation {
    labels: Vec<String>,
    weights: Vec<f64>,
    values: [Vec<i8>; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct LhvModel {
    domain: LambdaDomain,
    responses: Responses,
    #[serde(skip)]
    table: Tabulation,
}

impl TryFrom<RawModel> for LhvModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        LhvModel::new(raw.domain, raw.responses)
    }
}

impl LhvModel {
    pub fn new(domain: LambdaDomain, responses: Responses) -> Result<Self> {
        let nodes = domain.nodes()?;
        let total: f64 = nodes.iter().map(|n| n.2).sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::NonNormalizedDomain(total));
        }
        let mut values: [Vec<i8>; 4] = Default::default();
        for s in Setting::ALL {
            let r = responses.get(s);
            check_response(&domain, r, s)?;
            values[s.index()] = nodes
                .iter()
                .map(|(_, lambda, _)| respond(&domain, r, *lambda))
                .collect();
        }
        if let LambdaDomain::Interval { lo, hi, .. } = &domain {
            // probe off-grid points as well as the nodes
            let width = hi - lo;
            for k in 0..RESPONSE_CHECK_POINTS {
                let lambda = lo + width * (k as f64 + 0.25) / RESPONSE_CHECK_POINTS as f64;
                for s in Setting::ALL {
                    let v = respond(&domain, responses.get(s), lambda);
                    if v != 1 && v != -1 {
                        return Err(Error::InvalidModel(format!(
                            "response {s} evaluates to {v} at λ = {lambda}"
                        )));
                    }
                }
            }
        }
        let table = Tabulation {
            labels: nodes.iter().map(|n| n.0.clone()).collect(),
            weights: nodes.iter().map(|n| n.2 / total).collect(),
            values,
        };
        Ok(LhvModel {
            domain,
            responses,
            table,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LhvModel::from_json(&text)
    }

    pub fn domain(&self) -> &LambdaDomain {
        &self.domain
    }

    pub fn responses(&self) -> &Responses {
        &self.responses
    }

    /// Number of λ nodes (points or quadrature midpoints).
    pub fn node_count(&self) -> usize {
        self.table.weights.len()
    }

    /// `⟨XY⟩ = Σ_k w_k X(λ_k) Y(λ_k)`. Defined for every pair of settings,
    /// including the never-measured `AA′` and `BB′`.
    pub fn correlation(&self, x: Setting, y: Setting) -> f64 {
        let (rx, ry) = (&self.table.values[x.index()], &self.table.values[y.index()]);
        self.table
            .weights
            .iter()
            .zip(rx.iter().zip(ry))
            .map(|(w, (a, b))| w * f64::from(a * b))
            .sum()
    }

    pub fn pair_correlation(&self, pair: Pair) -> f64 {
        let (x, y) = pair.settings();
        self.correlation(x, y)
    }

    /// All six correlations.
    pub fn correlation_set(&self) -> CorrelationSet {
        let mut c = CorrelationSet::new();
        for p in Pair::ALL {
            c.insert(p, self.pair_correlation(p))
                .expect("convex combination of ±1 products lies in [-1, 1]");
        }
        c
    }

    pub fn sampler(&self) -> LhvSampler<'_> {
        let index = WeightedIndex::new(&self.table.weights)
            .expect("normalized nonnegative weights with positive total");
        LhvSampler { model: self, index }
    }

    /// Draws λ and returns the readings of settings `xa` (port α) and `yb`
    /// (port β). Prefer [`LhvModel::sampler`] for many draws.
    pub fn sample_shot<R: Rng + ?Sized>(
        &self,
        xa: Setting,
        yb: Setting,
        rng: &mut R,
    ) -> Result<(Outcome, Outcome)> {
        self.sampler().sample(xa, yb, rng)
    }

    /// Convex combination of models. The result is a finite model over the
    /// disjoint union of the components' nodes, so its correlations are the
    /// weighted combination of the components' correlations.
    pub fn mixture(components: &[(f64, &LhvModel)]) -> Result<LhvModel> {
        if components.is_empty() {
            return Err(Error::InvalidModel("empty mixture".into()));
        }
        if components.iter().any(|(w, _)| w.is_nan() || *w < 0.0) {
            return Err(Error::InvalidModel("negative mixture weight".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NonNormalizedDomain(total));
        }
        let mut points = Vec::new();
        let mut tables: [Vec<Outcome>; 4] = Default::default();
        for (i, (w, m)) in components.iter().enumerate() {
            for (k, (label, nw)) in m.table.labels.iter().zip(&m.table.weights).enumerate() {
                points.push(LambdaPoint {
                    label: format!("{i}:{label}"),
                    weight: w * nw,
                });
                for s in Setting::ALL {
                    tables[s.index()].push(Outcome::from_sign(m.table.values[s.index()][k] > 0));
                }
            }
        }
        let [a, ap, b, bp] = tables;
        LhvModel::new(
            LambdaDomain::Finite { points },
            Responses::from_array([
                Response::Table { values: a },
                Response::Table { values: ap },
                Response::Table { values: b },
                Response::Table { values: bp },
            ]),
        )
    }
}

fn check_response(domain: &LambdaDomain, r: &Response, s: Setting) -> Result<()> {
    match (domain, r) {
        (_, Response::Constant { .. }) => Ok(()),
        (LambdaDomain::Finite { .. }, Response::SignCos { .. }) => Err(Error::InvalidModel(
            format!("response {s}: sign_cos needs an interval domain"),
        )),
        (LambdaDomain::Interval { .. }, Response::SignCos { offset }) => {
            if offset.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!(
                    "response {s}: offset {offset}"
                )))
            }
        }
        (LambdaDomain::Finite { points }, Response::Table { values }) => {
            if values.len() == points.len() {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!(
                    "response {s}: table has {} entries for {} points",
                    values.len(),
                    points.len()
                )))
            }
        }
        (LambdaDomain::Interval { .. }, Response::Table { values }) => {
            if values.is_empty() {
                Err(Error::InvalidModel(format!("response {s}: empty table")))
            } else {
                Ok(())
            }
        }
    }
}

fn respond(domain: &LambdaDomain, r: &Response, lambda: f64) -> i8 {
    match r {
        Response::Constant { value } => value.value(),
        Response::SignCos { offset } => {
            if (lambda - offset).cos() >= 0.0 {
                1
            } else {
                -1
            }
        }
        Response::Table { values } => {
            let i = match domain {
                LambdaDomain::Finite { .. } => lambda as usize,
                LambdaDomain::Interval { lo, hi, .. } => {
                    bin_index(lambda, *lo, hi - lo, values.len())
                }
            };
            values[i].value()
        }
    }
}

/// Inverse-CDF sampler over a model's λ nodes.
#[derive(Debug, Clone)]
pub struct LhvSampler<'a> {
    model: &'a LhvModel,
    index: WeightedIndex<f64>,
}

impl LhvSampler<'_> {
    pub fn sample<R: Rng + ?Sized>(
        &self,
        xa: Setting,
        yb: Setting,
        rng: &mut R,
    ) -> Result<(Outcome, Outcome)> {
        if !xa.is_port_a() {
            return Err(Error::InvalidLabel(format!("{xa} is not a port-α setting")));
        }
        if yb.is_port_a() {
            return Err(Error::InvalidLabel(format!("{yb} is not a port-β setting")));
        }
        let k = self.index.sample(rng);
        let v = &self.model.table.values;
        Ok((
            Outcome::from_sign(v[xa.index()][k] > 0),
            Outcome::from_sign(v[yb.index()][k] > 0),
        ))
    }
}

/// One deterministic assignment of readings to the four settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Strategy {
    /// Indexed by [`Setting::index`]: `(A, A′, B, B′)`.
    pub values: [Outcome; 4],
}

impl Strategy {
    pub fn value(&self, s: Setting) -> i8 {
        self.values[s.index()].value()
    }

    pub fn product(&self, pair: Pair) -> i8 {
        let (x, y) = pair.settings();
        self.value(x) * self.value(y)
    }

    pub fn correlations(&self) -> CorrelationSet {
        let mut c = CorrelationSet::new();
        for p in Pair::ALL {
            c.insert(p, f64::from(self.product(p)))
                .expect("±1 is in range");
        }
        c
    }

    /// Single-point model realizing this strategy.
    pub fn model(&self) -> LhvModel {
        let r = |s: Setting| Response::Constant {
            value: self.values[s.index()],
        };
        LhvModel::new(
            LambdaDomain::uniform_finite(1),
            Responses::from_array(Setting::ALL.map(r)),
        )
        .expect("constant responses on a unit point")
    }
}

/// All 16 assignments `(A, A′, B, B′) ∈ {±1}⁴`, starting at `(+,+,+,+)`
/// with B′ varying fastest.
pub fn deterministic_assignments() -> Vec<Strategy> {
    (0..16u8)
        .map(|k| Strategy {
            values: std::array::from_fn(|j| Outcome::from_sign((k >> (3 - j)) & 1 == 0)),
        })
        .collect()
}

/// Full six-entry correlation sets of the 16 deterministic strategies: the
/// vertices of the local polytope.
pub fn deterministic_strategies() -> Vec<CorrelationSet> {
    deterministic_assignments()
        .iter()
        .map(Strategy::correlations)
        .collect()
}

/// Random finite model: `points` nodes with random weights and ±1 tables.
pub fn random_finite_model<R: Rng + ?Sized>(rng: &mut R, points: usize) -> LhvModel {
    let raw: Vec<f64> = (0..points).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let pts = raw
        .iter()
        .enumerate()
        .map(|(i, w)| LambdaPoint {
            label: format!("l{}", i + 1),
            weight: w / total,
        })
        .collect();
    let mut table = || Response::Table {
        values: (0..points)
            .map(|_| Outcome::from_sign(rng.random()))
            .collect(),
    };
    let responses = Responses::from_array([table(), table(), table(), table()]);
    LhvModel::new(LambdaDomain::Finite { points: pts }, responses)
        .expect("random finite model is valid")
}

/// Random model on `[0, 2π)` with a random histogram weight and random
/// `sign(cos(λ − φ))` offsets.
pub fn random_interval_model<R: Rng + ?Sized>(rng: &mut R, quadrature_points: usize) -> LhvModel {
    let bins = rng.random_range(1..=16usize);
    let raw: Vec<f64> = (0..bins).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let mut masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
    // absorb the rounding residue so the masses sum to one
    let residue = 1.0 - masses.iter().sum::<f64>();
    masses[0] = (masses[0] + residue).max(0.0);
    let domain = LambdaDomain::Interval {
        lo: 0.0,
        hi: std::f64::consts::TAU,
        weight: WeightFunction::Histogram { masses },
        quadrature_points,
    };
    let mut sign = || Response::SignCos {
        offset: rng.random_range(0.0..std::f64::consts::TAU),
    };
    let responses = Responses::from_array([sign(), sign(), sign(), sign()]);
    LhvModel::new(domain, responses).expect("random interval model is valid")
}

/// Random model drawn evenly from three shapes: a finite table model
/// (2 to 12 points), an interval model with `sign(cos(λ − φ))` responses, or
/// a random convex mixture of two or three models of those two kinds.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, quadrature_points: usize) -> LhvModel {
    let simple = |rng: &mut R| {
        if rng.random() {
            let points = rng.random_range(2..=12);
            random_finite_model(rng, points)
        } else {
            random_interval_model(rng, quadrature_points)
        }
    };
    match rng.random_range(0..3) {
        0 => {
            let points = rng.random_range(2..=12);
            random_finite_model(rng, points)
        }
        1 => random_interval_model(rng, quadrature_points),
        _ => {
            let k = rng.random_range(2..=3);
            let parts: Vec<LhvModel> = (0..k).map(|_| simple(rng)).collect();
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let components: Vec<(f64, &LhvModel)> =
                raw.iter().map(|w| w / total).zip(&parts).collect();
            LhvModel::mixture(&components).expect("weights are normalized")
        }
    }
}
