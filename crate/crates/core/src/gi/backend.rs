use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::mp::pinv;
use super::scaling::scale_unchecked;
use super::uc::ucinv;
use super::{mx_inverse, validate, GiError, Matrix, PartitionSpec};

/// A generalized inverse that planners can call without knowing which one.
pub trait GeneralizedInverse: Send + Sync {
    fn name(&self) -> &str;

    /// Inverse of a Jacobian-shaped matrix (task rows × joint columns).
    fn invert(&self, a: &Matrix) -> Result<Matrix, GiError>;

    /// Inverse of a task-space Gram matrix such as `J W⁻¹ Jᵀ`.
    fn invert_task_gram(&self, g: &Matrix) -> Result<Matrix, GiError> {
        self.invert(g)
    }

    /// Per-joint scale vector `D` such that `diag(D)` turns a joint-space
    /// quadratic form into one that does not depend on the length unit.
    /// `None` means the plain Euclidean metric.
    fn joint_scale(&self, _j: &Matrix) -> Result<Option<DVector<f64>>, GiError> {
        Ok(None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mp,
    Uc,
    Mx,
}

impl BackendKind {
    pub const ALL: [BackendKind; 3] = [BackendKind::Mp, BackendKind::Uc, BackendKind::Mx];

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Mp => "mp",
            BackendKind::Uc => "uc",
            BackendKind::Mx => "mx",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BackendKind {
    type Err = GiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mp" => Ok(BackendKind::Mp),
            "uc" => Ok(BackendKind::Uc),
            "mx" => Ok(BackendKind::Mx),
            other => Err(GiError::InvalidInput(format!("unknown backend '{other}'"))),
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MoorePenroseBackend;

impl GeneralizedInverse for MoorePenroseBackend {
    fn name(&self) -> &str {
        "mp"
    }

    fn invert(&self, a: &Matrix) -> Result<Matrix, GiError> {
        validate(a)?;
        Ok(pinv(a))
    }
}

fn unit_scale(j: &Matrix) -> Result<Option<DVector<f64>>, GiError> {
    validate(j)?;
    Ok(Some(scale_unchecked(j)?.right))
}

#[derive(Debug, Default, Clone, Copy)]
pub struct UnitConsistentBackend;

impl GeneralizedInverse for UnitConsistentBackend {
    fn name(&self) -> &str {
        "uc"
    }

    fn invert(&self, a: &Matrix) -> Result<Matrix, GiError> {
        validate(a)?;
        ucinv(a)
    }

    fn joint_scale(&self, j: &Matrix) -> Result<Option<DVector<f64>>, GiError> {
        unit_scale(j)
    }
}

#[derive(Debug, Clone)]
pub struct MixedBackend {
    pub spec: PartitionSpec,
}

impl MixedBackend {
    pub fn new(spec: PartitionSpec) -> Self {
        Self { spec }
    }
}

impl GeneralizedInverse for MixedBackend {
    fn name(&self) -> &str {
        "mx"
    }

    fn invert(&self, a: &Matrix) -> Result<Matrix, GiError> {
        mx_inverse(a, &self.spec)
    }

    /// Task-space Gram matrices carry no joint columns to partition; the
    /// unit-consistent inverse keeps their row/column scaling behaviour.
    fn invert_task_gram(&self, g: &Matrix) -> Result<Matrix, GiError> {
        validate(g)?;
        ucinv(g)
    }

    fn joint_scale(&self, j: &Matrix) -> Result<Option<DVector<f64>>, GiError> {
        unit_scale(j)
    }
}

/// Wraps a backend and counts every inverse it hands out.
pub struct CountingInverse<'a> {
    inner: &'a dyn GeneralizedInverse,
    calls: AtomicUsize,
}

impl<'a> CountingInverse<'a> {
    pub fn new(inner: &'a dyn GeneralizedInverse) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) -> usize {
        self.calls.swap(0, Ordering::Relaxed)
    }
}

impl GeneralizedInverse for CountingInverse<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn invert(&self, a: &Matrix) -> Result<Matrix, GiError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.invert(a)
    }

    fn invert_task_gram(&self, g: &Matrix) -> Result<Matrix, GiError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.invert_task_gram(g)
    }

    fn joint_scale(&self, j: &Matrix) -> Result<Option<DVector<f64>>, GiError> {
        self.inner.joint_scale(j)
    }
}

type BackendFactory = Box<dyn Fn(&PartitionSpec) -> Box<dyn GeneralizedInverse> + Send + Sync>;

/// Backends registered by name. The partition is only used by backends that
/// need one.
pub struct BackendRegistry {
    factories: BTreeMap<String, BackendFactory>,
}

impl BackendRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&PartitionSpec) -> Box<dyn GeneralizedInverse> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn create(
        &self,
        name: &str,
        spec: &PartitionSpec,
    ) -> Result<Box<dyn GeneralizedInverse>, GiError> {
        self.factories
            .get(name)
            .map(|f| f(spec))
            .ok_or_else(|| GiError::InvalidInput(format!("unknown backend '{name}'")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}

/// Registry holding the three built-in inverses under `mp`, `uc` and `mx`.
pub fn registry() -> BackendRegistry {
    let mut r = BackendRegistry::empty();
    r.register("mp", |_| Box::new(MoorePenroseBackend));
    r.register("uc", |_| Box::new(UnitConsistentBackend));
    r.register("mx", |spec| Box::new(MixedBackend::new(spec.clone())));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_creates_every_builtin() {
        let reg = registry();
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["mp", "mx", "uc"]);
        for kind in BackendKind::ALL {
            let b = reg.create(kind.as_str(), &PartitionSpec::empty()).unwrap();
            assert_eq!(b.name(), kind.as_str());
        }
        assert!(reg.create("damped", &PartitionSpec::empty()).is_err());
    }

    #[test]
    fn counter_tracks_calls() {
        let mp = MoorePenroseBackend;
        let c = CountingInverse::new(&mp);
        let a = Matrix::identity(2, 2);
        c.invert(&a).unwrap();
        c.invert_task_gram(&a).unwrap();
        c.joint_scale(&a).unwrap();
        assert_eq!(c.calls(), 2);
        assert_eq!(c.reset(), 2);
        assert_eq!(c.calls(), 0);
    }

    #[test]
    fn kind_parses_case_insensitively() {
        assert_eq!("MX".parse::<BackendKind>().unwrap(), BackendKind::Mx);
        assert!("svf".parse::<BackendKind>().is_err());
    }
}
