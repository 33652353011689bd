//! Disturbances added to the desired task rate (velocity-level schemes) or
//! acceleration (acceleration-level schemes).

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::TaskSpace;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("unknown noise kind '{0}'")]
    UnknownKind(String),
    #[error("noise base has {got} components, task has {expected}")]
    BaseLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Zero,
    Constant,
    TimeVarying,
    Random,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [
        NoiseKind::Zero,
        NoiseKind::Constant,
        NoiseKind::TimeVarying,
        NoiseKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Zero => "zero",
            NoiseKind::Constant => "constant",
            NoiseKind::TimeVarying => "time_varying",
            NoiseKind::Random => "random",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| NoiseError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    Velocity,
    Acceleration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Amplitudes in base units (metres). Zero entries are never disturbed.
    pub base: Vec<f64>,
    pub unit_factor: f64,
    pub seed: u64,
    pub level: NoiseLevel,
}

impl NoiseModel {
    /// Default amplitudes: `[0.3, 0.5]` for a planar task and
    /// `[0.3, 0.5, 0.3]` on the position rows of a 6-D pose task, ten times
    /// smaller at acceleration level. Orientation rows stay clean.
    pub fn standard(
        kind: NoiseKind,
        task: TaskSpace,
        level: NoiseLevel,
        unit_factor: f64,
        seed: u64,
    ) -> Self {
        let mut base = match task {
            TaskSpace::PlanarXy => vec![0.3, 0.5],
            TaskSpace::PoseRpy => vec![0.3, 0.5, 0.3, 0.0, 0.0, 0.0],
        };
        if level == NoiseLevel::Acceleration {
            base.iter_mut().for_each(|b| *b *= 0.1);
        }
        Self {
            kind,
            base,
            unit_factor,
            seed,
            level,
        }
    }

    pub fn zero(task: TaskSpace) -> Self {
        Self::standard(NoiseKind::Zero, task, NoiseLevel::Velocity, 1.0, 0)
    }

    pub fn sampler(&self) -> NoiseSampler {
        NoiseSampler {
            model: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// Owns the random stream for one run. Each call to [`sample`] draws one
/// uniform `[0, 1)` number per component, so the stream depends only on the
/// seed and the number of calls.
///
/// [`sample`]: NoiseSampler::sample
pub struct NoiseSampler {
    model: NoiseModel,
    rng: ChaCha8Rng,
}

impl NoiseSampler {
    pub fn sample(&mut self, t: f64) -> DVector<f64> {
        let m = &self.model;
        let u = m.unit_factor;
        let n = m.base.len();
        match m.kind {
            NoiseKind::Zero => DVector::zeros(n),
            NoiseKind::Constant => DVector::from_iterator(n, m.base.iter().map(|b| u * b)),
            NoiseKind::TimeVarying => {
                let (s, c) = (2.0 * t).sin_cos();
                DVector::from_iterator(
                    n,
                    m.base
                        .iter()
                        .enumerate()
                        .map(|(i, b)| u * b * if i % 2 == 0 { s } else { c }),
                )
            }
            NoiseKind::Random => {
                let draws: Vec<f64> = (0..n).map(|_| self.rng.random::<f64>()).collect();
                DVector::from_iterator(
                    n,
                    m.base
                        .iter()
                        .zip(draws)
                        .map(|(b, r)| if *b == 0.0 { 0.0 } else { u * r }),
                )
            }
        }
    }

    pub fn check_dim(&self, task_dim: usize) -> Result<(), NoiseError> {
        if self.model.base.len() != task_dim {
            return Err(NoiseError::BaseLength {
                expected: task_dim,
                got: self.model.base.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn planar(kind: NoiseKind, u: f64) -> NoiseModel {
        NoiseModel::standard(kind, TaskSpace::PlanarXy, NoiseLevel::Velocity, u, 42)
    }

    #[test]
    fn zero_noise_is_zero() {
        let mut s = planar(NoiseKind::Zero, 1000.0).sampler();
        assert_eq!(s.sample(3.7), DVector::zeros(2));
    }

    #[test]
    fn constant_noise_in_millimetres() {
        let mut s = planar(NoiseKind::Constant, 1000.0).sampler();
        let v = s.sample(1.23);
        assert!((v[0] - 300.0).abs() < 1e-12 && (v[1] - 500.0).abs() < 1e-12);
    }

    #[test]
    fn time_varying_at_origin() {
        let mut s = planar(NoiseKind::TimeVarying, 1.0).sampler();
        assert_eq!(s.sample(0.0), DVector::from_vec(vec![0.0, 0.5]));
    }

    #[test]
    fn acceleration_level_is_ten_times_smaller() {
        let m = NoiseModel::standard(
            NoiseKind::Constant,
            TaskSpace::PlanarXy,
            NoiseLevel::Acceleration,
            1.0,
            0,
        );
        let v = m.sampler().sample(0.0);
        assert!((v[0] - 0.03).abs() < 1e-15 && (v[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn orientation_rows_stay_clean() {
        for kind in NoiseKind::ALL {
            let m = NoiseModel::standard(kind, TaskSpace::PoseRpy, NoiseLevel::Velocity, 10.0, 1);
            let mut s = m.sampler();
            for k in 0..20 {
                let v = s.sample(k as f64 * 0.1);
                assert!(v.rows(3, 3).iter().all(|x| *x == 0.0));
            }
        }
    }

    #[test]
    fn random_stream_is_reproducible_and_bounded() {
        let mut a = planar(NoiseKind::Random, 1.0).sampler();
        let mut b = planar(NoiseKind::Random, 1.0).sampler();
        for k in 0..1000 {
            let t = k as f64 * 0.01;
            let (x, y) = (a.sample(t), b.sample(t));
            assert_eq!(x, y);
            assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
        }
        let mut c = NoiseModel { seed: 43, ..planar(NoiseKind::Random, 1.0) }.sampler();
        assert_ne!(c.sample(0.0), planar(NoiseKind::Random, 1.0).sampler().sample(0.0));
    }

    #[test]
    fn base_length_is_checked() {
        let s = planar(NoiseKind::Constant, 1.0).sampler();
        assert!(s.check_dim(2).is_ok());
        assert_eq!(s.check_dim(6), Err(NoiseError::BaseLength { expected: 6, got: 2 }));
    }

    proptest! {
        #[test]
        fn samples_scale_with_unit_factor(
            kind_idx in 0usize..4,
            u_idx in 0usize..4,
            seed in any::<u64>(),
            times in proptest::collection::vec(0.0f64..20.0, 1..30),
        ) {
            let kind = NoiseKind::ALL[kind_idx];
            let u = [1.0, 10.0, 100.0, 1000.0][u_idx];
            let one = NoiseModel { seed, ..planar(kind, 1.0) };
            let scaled = NoiseModel { unit_factor: u, ..one.clone() };
            let (mut a, mut b) = (one.sampler(), scaled.sampler());
            for t in times {
                let x = a.sample(t) * u;
                let y = b.sample(t);
                prop_assert!((x - y).amax() <= 1e-12 * u);
            }
        }
    }
}
