//! Box-constrained two- and many-objective test problems and samplers for
//! their Pareto-optimal fronts.
//!
//! | id    | variables | objectives | domain        |
//! |-------|-----------|------------|---------------|
//! | P1    | 2         | 2          | `[-50, 50]^2` |
//! | P2    | n (3)     | 2          | `[-2, 2]^n`   |
//! | P3    | 1         | 2          | `[-10, 10]`   |
//! | P4    | 2         | 2          | `[-10, 10]^2` |
//! | DTLZ1 | n (7)     | M (3)      | `[0, 1]^n`    |
//! | DTLZ2 | n (12)    | M (3)      | `[0, 1]^n`    |
//!
//! DTLZ1 uses the plain distance function `g = Σ (x_i - 0.5)^2` over the
//! last `n - M + 1` variables, without the multimodal `100·[...]` term of
//! the usual definition. DTLZ2 uses `sin(x·π/2)` in every term.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mop::{non_dominated_indices_2d, squared_distance, Bounds, ObjectiveVector};

/// Grid resolution per decision dimension for the two-variable oracle fronts.
pub const GRID_RESOLUTION_2D: usize = 1024;
/// Total grid budget for oracle fronts of problems with more than two variables.
pub const GRID_BUDGET: usize = 1 << 20;
/// Seed of the random stream used by the analytic DTLZ front samplers.
pub const FRONT_SAMPLE_SEED: u64 = 0x00D7_1A25_F207_5EED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemId {
    P1,
    P2,
    P3,
    P4,
    Dtlz1,
    Dtlz2,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::P1 => "P1",
            ProblemId::P2 => "P2",
            ProblemId::P3 => "P3",
            ProblemId::P4 => "P4",
            ProblemId::Dtlz1 => "DTLZ1",
            ProblemId::Dtlz2 => "DTLZ2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontSource {
    Analytic,
    GridOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFrontSample {
    pub points: Vec<ObjectiveVector>,
    pub source: FrontSource,
}

/// A benchmark instance: which function, its dimensions and its box.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    id: ProblemId,
    n_vars: usize,
    n_objectives: usize,
    bounds: Bounds,
}

impl ProblemSpec {
    pub fn p1() -> Self {
        Self::boxed(ProblemId::P1, 2, 2, -50.0, 50.0)
    }

    pub fn p2(n_vars: usize) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::config("P2 needs at least one variable"));
        }
        Ok(Self::boxed(ProblemId::P2, n_vars, 2, -2.0, 2.0))
    }

    pub fn p3() -> Self {
        Self::boxed(ProblemId::P3, 1, 2, -10.0, 10.0)
    }

    pub fn p4() -> Self {
        Self::boxed(ProblemId::P4, 2, 2, -10.0, 10.0)
    }

    pub fn dtlz1(n_objectives: usize, n_vars: usize) -> Result<Self> {
        Self::dtlz(ProblemId::Dtlz1, n_objectives, n_vars)
    }

    pub fn dtlz2(n_objectives: usize, n_vars: usize) -> Result<Self> {
        Self::dtlz(ProblemId::Dtlz2, n_objectives, n_vars)
    }

    fn dtlz(id: ProblemId, m: usize, n: usize) -> Result<Self> {
        if m < 2 || n < m {
            return Err(Error::config(format!(
                "{} needs at least 2 objectives and n >= M (got M={m}, n={n})",
                id.name()
            )));
        }
        Ok(Self::boxed(id, n, m, 0.0, 1.0))
    }

    fn boxed(id: ProblemId, n_vars: usize, n_objectives: usize, lo: f64, hi: f64) -> Self {
        ProblemSpec {
            id,
            n_vars,
            n_objectives,
            bounds: Bounds::uniform(n_vars, lo, hi).expect("static bounds are valid"),
        }
    }

    /// Default instance of each problem.
    pub fn default_for(id: ProblemId) -> Self {
        match id {
            ProblemId::P1 => Self::p1(),
            ProblemId::P2 => Self::boxed(ProblemId::P2, 3, 2, -2.0, 2.0),
            ProblemId::P3 => Self::p3(),
            ProblemId::P4 => Self::p4(),
            ProblemId::Dtlz1 => Self::boxed(ProblemId::Dtlz1, 7, 3, 0.0, 1.0),
            ProblemId::Dtlz2 => Self::boxed(ProblemId::Dtlz2, 12, 3, 0.0, 1.0),
        }
    }

    pub fn id(&self) -> ProblemId {
        self.id
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_objectives(&self) -> usize {
        self.n_objectives
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Objective values at `x`. `x` must have `n_vars` entries inside the box.
    pub fn evaluate(&self, x: &[f64]) -> Result<ObjectiveVector> {
        if x.len() != self.n_vars {
            return Err(Error::contract(format!(
                "{} expects {} variables, got {}",
                self,
                self.n_vars,
                x.len()
            )));
        }
        if !self.bounds.contains(x) {
            return Err(Error::contract(format!(
                "{x:?} lies outside the domain of {self}"
            )));
        }
        Ok(ObjectiveVector(self.evaluate_unchecked(x)))
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match self.id {
            ProblemId::P1 => {
                let (x1, x2) = (x[0], x[1]);
                let f1 = x1 * x1 + 2.0 * x2 * x2
                    - 0.3 * (3.0 * PI * x1).cos() * (4.0 * PI * x2).cos()
                    + 0.3;
                let f2 =
                    x1 * x1 + x2 * x2 - 2.3 * (PI * x1 / 2.0).cos() * (PI * x2 / 2.0).cos() + 0.3;
                vec![f1, f2]
            }
            ProblemId::P2 => {
                let c = 1.0 / (x.len() as f64).sqrt();
                let s1: f64 = x.iter().map(|v| (v - c) * (v - c)).sum();
                let s2: f64 = x.iter().map(|v| (v + c) * (v + c)).sum();
                vec![1.0 - (-s1).exp(), 1.0 - (-s2).exp()]
            }
            ProblemId::P3 => vec![x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0)],
            ProblemId::P4 => {
                let (x1, x2) = (x[0], x[1]);
                vec![
                    1.0 - (-(x1 - 1.0).powi(2) - (x2 + 1.0).powi(2)).exp(),
                    1.0 - (-(x1 + 1.0).powi(2) - (x2 - 1.0).powi(2)).exp(),
                ]
            }
            ProblemId::Dtlz1 => {
                let m = self.n_objectives;
                let g = dtlz_g(&x[m - 1..]);
                (0..m)
                    .map(|k| {
                        // Objective k (0-based) multiplies the first m-1-k
                        // position variables, times (1 - x_{m-1-k}) for k > 0.
                        let keep = m - 1 - k;
                        let mut f = 0.5 * (1.0 + g);
                        f *= x[..keep].iter().product::<f64>();
                        if k > 0 {
                            f *= 1.0 - x[keep];
                        }
                        f
                    })
                    .collect()
            }
            ProblemId::Dtlz2 => {
                let m = self.n_objectives;
                let g = dtlz_g(&x[m - 1..]);
                (0..m)
                    .map(|k| {
                        let keep = m - 1 - k;
                        let mut f = 1.0 + g;
                        f *= x[..keep]
                            .iter()
                            .map(|v| (v * FRAC_PI_2).cos())
                            .product::<f64>();
                        if k > 0 {
                            f *= (x[keep] * FRAC_PI_2).sin();
                        }
                        f
                    })
                    .collect()
            }
        }
    }

    /// A sample of `count` points of the Pareto-optimal front.
    ///
    /// P3 and the DTLZ problems use their analytic fronts; P1, P2 and P4 are
    /// approximated by the non-dominated image of a dense decision-space
    /// grid, thinned by farthest-point selection.
    pub fn sample_pareto_front(&self, count: usize) -> Result<ParetoFrontSample> {
        if count < 2 {
            return Err(Error::contract("front sample needs at least 2 points"));
        }
        let m = self.n_objectives;
        let mut rng = ChaCha8Rng::seed_from_u64(FRONT_SAMPLE_SEED);
        let analytic = |points| ParetoFrontSample {
            points,
            source: FrontSource::Analytic,
        };
        match self.id {
            ProblemId::P3 => Ok(analytic(
                (0..count)
                    .map(|k| {
                        let t = 2.0 * k as f64 / (count - 1) as f64;
                        ObjectiveVector(vec![t * t, (t - 2.0) * (t - 2.0)])
                    })
                    .collect(),
            )),
            ProblemId::Dtlz1 => Ok(analytic(
                (0..count)
                    .map(|_| {
                        let e: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
                        let s: f64 = e.iter().sum();
                        ObjectiveVector(e.into_iter().map(|v| 0.5 * v / s).collect())
                    })
                    .collect(),
            )),
            ProblemId::Dtlz2 => Ok(analytic(
                (0..count)
                    .map(|_| loop {
                        let z: Vec<f64> = (0..m)
                            .map(|_| {
                                let v: f64 = StandardNormal.sample(&mut rng);
                                v.abs()
                            })
                            .collect();
                        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm > 1e-12 {
                            break ObjectiveVector(z.into_iter().map(|v| v / norm).collect());
                        }
                    })
                    .collect(),
            )),
            ProblemId::P1 | ProblemId::P2 | ProblemId::P4 => {
                let front = self.grid_front();
                Ok(ParetoFrontSample {
                    points: farthest_point_thin(front, count),
                    source: FrontSource::GridOracle,
                })
            }
        }
    }

    fn grid_resolution(&self) -> usize {
        if self.n_vars <= 2 {
            GRID_RESOLUTION_2D
        } else {
            let mut r = (GRID_BUDGET as f64).powf(1.0 / self.n_vars as f64).floor() as usize;
            while (r + 1)
                .checked_pow(self.n_vars as u32)
                .is_some_and(|t| t <= GRID_BUDGET)
            {
                r += 1;
            }
            r.max(2)
        }
    }

    /// Non-dominated images of a uniform grid over the decision box.
    fn grid_front(&self) -> Vec<[f64; 2]> {
        debug_assert_eq!(self.n_objectives, 2);
        let res = self.grid_resolution();
        let n = self.n_vars;
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|d| {
                let (lo, hi) = (self.bounds.lower()[d], self.bounds.upper()[d]);
                (0..res)
                    .map(|k| lo + (hi - lo) * k as f64 / (res - 1) as f64)
                    .collect()
            })
            .collect();
        let total = res.pow(n as u32);
        let mut x = vec![0.0; n];
        let images: Vec<[f64; 2]> = (0..total)
            .map(|mut idx| {
                for (d, axis) in axes.iter().enumerate() {
                    x[d] = axis[idx % res];
                    idx /= res;
                }
                let f = self.evaluate_unchecked(&x);
                [f[0], f[1]]
            })
            .collect();
        non_dominated_indices_2d(&images)
            .into_iter()
            .map(|i| images[i])
            .collect()
    }

    /// Canonical textual key, e.g. `P1`, `P2/3`, `DTLZ1/3/7`.
    pub fn key(&self) -> String {
        self.to_string()
    }
}

/// Keeps `count` points by greedy farthest-point selection starting from the
/// point with the smallest first objective. Output is sorted by the first
/// objective.
fn farthest_point_thin(points: Vec<[f64; 2]>, count: usize) -> Vec<ObjectiveVector> {
    let mut chosen: Vec<[f64; 2]> = if points.len() <= count {
        points
    } else {
        let start = (0..points.len())
            .min_by(|&a, &b| points[a][0].total_cmp(&points[b][0]))
            .unwrap_or(0);
        let mut min_d: Vec<f64> = points
            .iter()
            .map(|p| squared_distance(p, &points[start]))
            .collect();
        let mut picked = vec![points[start]];
        while picked.len() < count {
            let mut far = 0;
            for (i, d) in min_d.iter().enumerate() {
                if *d > min_d[far] {
                    far = i;
                }
            }
            let p = points[far];
            picked.push(p);
            for (d, q) in min_d.iter_mut().zip(&points) {
                *d = d.min(squared_distance(q, &p));
            }
        }
        picked
    };
    chosen.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    chosen
        .into_iter()
        .map(|p| ObjectiveVector(p.to_vec()))
        .collect()
}

fn dtlz_g(tail: &[f64]) -> f64 {
    tail.iter().map(|v| (v - 0.5) * (v - 0.5)).sum()
}

/// Distance function `g` of the DTLZ problems for a full decision vector.
pub fn dtlz_distance(problem: &ProblemSpec, x: &[f64]) -> f64 {
    dtlz_g(&x[problem.n_objectives - 1..])
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.id {
            ProblemId::P2 => write!(f, "P2/{}", self.n_vars),
            ProblemId::Dtlz1 | ProblemId::Dtlz2 => {
                write!(
                    f,
                    "{}/{}/{}",
                    self.id.name(),
                    self.n_objectives,
                    self.n_vars
                )
            }
            _ => f.write_str(self.id.name()),
        }
    }
}

impl FromStr for ProblemSpec {
    type Err = Error;

    /// Accepts `P1`..`P4`, `P5`/`DTLZ1`, `P6`/`DTLZ2` (case-insensitive),
    /// optionally followed by `/n` (P2) or `/M/n` (DTLZ).
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split('/');
        let head = parts.next().unwrap_or_default().to_ascii_uppercase();
        let id = match head.as_str() {
            "P1" => ProblemId::P1,
            "P2" => ProblemId::P2,
            "P3" => ProblemId::P3,
            "P4" => ProblemId::P4,
            "P5" | "DTLZ1" => ProblemId::Dtlz1,
            "P6" | "DTLZ2" => ProblemId::Dtlz2,
            _ => return Err(Error::Unsupported(format!("unknown problem id `{s}`"))),
        };
        let nums = parts
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| Error::config(format!("bad dimension `{p}` in problem id `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let default = ProblemSpec::default_for(id);
        match (id, nums.as_slice()) {
            (_, []) => Ok(default),
            (ProblemId::P2, [n]) => ProblemSpec::p2(*n),
            (ProblemId::Dtlz1, [m, n]) => ProblemSpec::dtlz1(*m, *n),
            (ProblemId::Dtlz2, [m, n]) => ProblemSpec::dtlz2(*m, *n),
            _ => Err(Error::config(format!(
                "unexpected dimensions in problem id `{s}`"
            ))),
        }
    }
}

impl Serialize for ProblemSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProblemSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
