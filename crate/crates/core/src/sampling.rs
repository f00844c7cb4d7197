//! Training-fold rebalancing: random over- and undersampling and SMOTE.
//!
//! Only training data may be passed in; the evaluation harness enforces that.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;
use crate::textproc::FeatureVector;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    None,
    Oversample,
    Undersample,
    Smote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub strategy: Strategy,
    #[serde(default = "default_smote_k")]
    pub smote_k: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_smote_k() -> usize {
    5
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            strategy: Strategy::None,
            smote_k: default_smote_k(),
            seed: 0,
        }
    }
}

impl SamplingSpec {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        SamplingSpec {
            strategy,
            seed,
            ..Default::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SamplingSpec { seed, ..self }
    }
}

/// Where an output row came from. Indices refer to the input rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Origin {
    Original(usize),
    Synthetic {
        base: usize,
        neighbor: usize,
        u: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub xs: Vec<FeatureVector>,
    pub ys: Vec<bool>,
    pub origins: Vec<Origin>,
}

impl Resampled {
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.ys.iter().filter(|&&y| y).count();
        (pos, self.ys.len() - pos)
    }
}

/// A synthetic SMOTE point with its parents (indices into the minority set).
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub x: FeatureVector,
    pub base: usize,
    pub neighbor: usize,
    pub u: f64,
}

/// Indices of the `k` nearest other points of `points[i]` by Euclidean
/// distance, ties broken by lower index.
fn nearest(points: &[FeatureVector], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| (points[i].squared_distance(p), j))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, j)| j).collect()
}

/// Generates `count` synthetic minority points. Base points are taken in a
/// seeded shuffled order, cycling; each is interpolated toward one of its
/// `k` nearest minority neighbors by a uniform factor in [0, 1).
pub fn smote_generate(
    minority: &[FeatureVector],
    count: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<Synthetic>> {
    if k == 0 {
        return Err(Error::Config("smote_k must be at least 1".into()));
    }
    if minority.len() < k + 1 {
        return Err(Error::TooFewMinority {
            needed: k + 1,
            available: minority.len(),
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut rng = seeds::rng(seed);
    let mut order: Vec<usize> = (0..minority.len()).collect();
    order.shuffle(&mut rng);
    let mut neighbors: Vec<Option<Vec<usize>>> = vec![None; minority.len()];
    let mut out = Vec::with_capacity(count);
    for s in 0..count {
        let base = order[s % order.len()];
        let nn = neighbors[base].get_or_insert_with(|| nearest(minority, base, k));
        let neighbor = nn[rng.gen_range(0..nn.len())];
        let u: f64 = rng.gen();
        out.push(Synthetic {
            x: minority[base].interpolate(&minority[neighbor], u),
            base,
            neighbor,
            u,
        });
    }
    Ok(out)
}

pub fn apply_sampling(xs: &[FeatureVector], ys: &[bool], spec: &SamplingSpec) -> Result<Resampled> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "{} vectors but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    let pos: Vec<usize> = (0..ys.len()).filter(|&i| ys[i]).collect();
    let neg: Vec<usize> = (0..ys.len()).filter(|&i| !ys[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let identity = || Resampled {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        origins: (0..xs.len()).map(Origin::Original).collect(),
    };
    if spec.strategy == Strategy::Smote && spec.smote_k == 0 {
        return Err(Error::Config("smote_k must be at least 1".into()));
    }
    let (minority, majority, minority_label) = if pos.len() <= neg.len() {
        (pos, neg, true)
    } else {
        (neg, pos, false)
    };
    let deficit = majority.len() - minority.len();
    let mut rng = seeds::rng(spec.seed);
    match spec.strategy {
        Strategy::None => Ok(identity()),
        Strategy::Oversample => {
            let mut out = identity();
            for _ in 0..deficit {
                let i = minority[rng.gen_range(0..minority.len())];
                out.xs.push(xs[i].clone());
                out.ys.push(minority_label);
                out.origins.push(Origin::Original(i));
            }
            Ok(out)
        }
        Strategy::Undersample => {
            let mut keep: Vec<usize> = index::sample(&mut rng, majority.len(), minority.len())
                .into_iter()
                .map(|j| majority[j])
                .chain(minority.iter().copied())
                .collect();
            keep.sort_unstable();
            Ok(Resampled {
                xs: keep.iter().map(|&i| xs[i].clone()).collect(),
                ys: keep.iter().map(|&i| ys[i]).collect(),
                origins: keep.into_iter().map(Origin::Original).collect(),
            })
        }
        Strategy::Smote => {
            let points: Vec<FeatureVector> = minority.iter().map(|&i| xs[i].clone()).collect();
            let synth = smote_generate(&points, deficit, spec.smote_k, spec.seed)?;
            let mut out = identity();
            for s in synth {
                out.xs.push(s.x);
                out.ys.push(minority_label);
                out.origins.push(Origin::Synthetic {
                    base: minority[s.base],
                    neighbor: minority[s.neighbor],
                    u: s.u,
                });
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::from_dense(v).unwrap()
    }

    fn imbalanced(n_major: usize, n_minor: usize) -> (Vec<FeatureVector>, Vec<bool>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n_major {
            xs.push(fv(&[(i % 7) as f64, 1.0, 0.0]));
            ys.push(false);
        }
        for i in 0..n_minor {
            xs.push(fv(&[0.0, (i % 5) as f64, 2.0 + (i % 3) as f64]));
            ys.push(true);
        }
        (xs, ys)
    }

    #[test]
    fn undersample_to_minority_count() {
        let (xs, ys) = imbalanced(80, 20);
        let out = apply_sampling(&xs, &ys, &SamplingSpec::new(Strategy::Undersample, 1)).unwrap();
        assert_eq!(out.class_counts(), (20, 20));
        for (o, x) in out.origins.iter().zip(&out.xs) {
            let Origin::Original(i) = *o else { panic!() };
            assert_eq!(&xs[i], x);
        }
    }

    #[test]
    fn none_is_identity() {
        let (xs, ys) = imbalanced(8, 2);
        let out = apply_sampling(&xs, &ys, &SamplingSpec::default()).unwrap();
        assert_eq!(out.xs, xs);
        assert_eq!(out.ys, ys);
    }

    #[test]
    fn oversample_keeps_every_minority_point() {
        let (xs, ys) = imbalanced(80, 20);
        let out = apply_sampling(&xs, &ys, &SamplingSpec::new(Strategy::Oversample, 3)).unwrap();
        assert_eq!(out.class_counts(), (80, 80));
        assert_eq!(&out.xs[..100], &xs[..]);
    }

    #[test]
    fn smote_balances_with_sixty_synthetics() {
        let (xs, ys) = imbalanced(80, 20);
        let out = apply_sampling(&xs, &ys, &SamplingSpec::new(Strategy::Smote, 11)).unwrap();
        assert_eq!(out.class_counts(), (80, 80));
        let synthetic = out
            .origins
            .iter()
            .filter(|o| matches!(o, Origin::Synthetic { .. }))
            .count();
        assert_eq!(synthetic, 60);
        // neighbor must be among the 5 nearest minority points of the base,
        // checked by an independent dense distance computation
        let minority: Vec<usize> = (0..ys.len()).filter(|&i| ys[i]).collect();
        for (o, x) in out.origins.iter().zip(&out.xs) {
            if let Origin::Synthetic { base, neighbor, u } = *o {
                assert!((0.0..=1.0).contains(&u));
                let db = xs[base].to_dense();
                let dist = |j: usize| -> f64 {
                    xs[j]
                        .to_dense()
                        .iter()
                        .zip(&db)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum()
                };
                let mut others: Vec<(f64, usize)> = minority
                    .iter()
                    .filter(|&&j| j != base)
                    .map(|&j| (dist(j), j))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let kth = others[4].0;
                assert!(dist(neighbor) <= kth);
                let expect: Vec<f64> = db
                    .iter()
                    .zip(xs[neighbor].to_dense())
                    .map(|(a, b)| a + u * (b - a))
                    .collect();
                for (got, want) in x.to_dense().iter().zip(expect) {
                    assert!((got - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn smote_two_points_is_on_diagonal() {
        let pts = [fv(&[0.0, 0.0]), fv(&[2.0, 2.0])];
        let s = smote_generate(&pts, 1, 1, 5).unwrap();
        let d = s[0].x.to_dense();
        assert_eq!(d[0], d[1]);
        assert!((0.0..=2.0).contains(&d[0]));
    }

    #[test]
    fn smote_identical_points_are_copied() {
        let pts = vec![fv(&[1.0, 3.0]); 4];
        for s in smote_generate(&pts, 10, 2, 8).unwrap() {
            assert_eq!(s.x, pts[0]);
        }
    }

    #[test]
    fn errors() {
        let (xs, _) = imbalanced(3, 0);
        let ys = vec![false; 3];
        assert!(matches!(
            apply_sampling(&xs, &ys, &SamplingSpec::new(Strategy::Oversample, 0)),
            Err(Error::SingleClass)
        ));
        let (xs, ys) = imbalanced(10, 3);
        let err = apply_sampling(&xs, &ys, &SamplingSpec::new(Strategy::Smote, 0)).unwrap_err();
        assert!(matches!(
            err,
            Error::TooFewMinority {
                needed: 6,
                available: 3
            }
        ));
        assert!(err.to_string().contains("short by 3"));
    }

    #[test]
    fn deterministic_given_seed() {
        let (xs, ys) = imbalanced(40, 10);
        for strategy in [Strategy::Oversample, Strategy::Undersample, Strategy::Smote] {
            let a = apply_sampling(&xs, &ys, &SamplingSpec::new(strategy, 9)).unwrap();
            let b = apply_sampling(&xs, &ys, &SamplingSpec::new(strategy, 9)).unwrap();
            assert_eq!(a, b);
        }
    }

    proptest! {
        #[test]
        fn balance_and_subset_laws(n_major in 6usize..40, n_minor in 6usize..12, seed in 0u64..1000) {
            let (xs, ys) = imbalanced(n_major.max(n_minor), n_minor);
            for strategy in [Strategy::Oversample, Strategy::Undersample, Strategy::Smote] {
                let out = apply_sampling(&xs, &ys, &SamplingSpec::new(strategy, seed)).unwrap();
                let (p, n) = out.class_counts();
                prop_assert_eq!(p, n);
                if strategy == Strategy::Undersample {
                    for o in &out.origins {
                        prop_assert!(matches!(o, Origin::Original(_)));
                    }
                }
            }
        }
    }
}
