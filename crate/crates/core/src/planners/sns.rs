//! Saturation in the null space with task scaling, single task.

use super::steps::Vector;
use super::PlanError;
use crate::gi::{GeneralizedInverse, GiError, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SnsOutcome {
    pub command: Vector,
    /// Fraction of the requested task actually executed, in `(0, 1]`.
    pub scale: f64,
    pub saturated: Vec<usize>,
    pub rounds: usize,
}

struct Candidate {
    scale: f64,
    a: Vector,
    b: Vector,
    saturated: Vec<usize>,
}

fn within(v: &Vector, bounds: &[f64]) -> bool {
    v.iter()
        .zip(bounds)
        .all(|(x, b)| x.abs() <= b * (1.0 + 1e-12))
}

fn clamp_to(mut v: Vector, bounds: &[f64]) -> Vector {
    for (x, b) in v.iter_mut().zip(bounds) {
        *x = x.clamp(-b, *b);
    }
    v
}

/// Largest `s` keeping `b + s·a` inside `±bounds`, and the joint that limits
/// it. Joints with `a_i = 0` never limit.
fn scale_factor(a: &Vector, b: &Vector, bounds: &[f64], free: &[bool]) -> (f64, Option<usize>) {
    let mut best = (f64::INFINITY, None);
    for i in 0..a.len() {
        if !free[i] || a[i] == 0.0 {
            continue;
        }
        let s = if a[i] > 0.0 {
            (bounds[i] - b[i]) / a[i]
        } else {
            (-bounds[i] - b[i]) / a[i]
        };
        if s < best.0 {
            best = (s, Some(i));
        }
    }
    best
}

/// Solves `J x = target` for a joint vector within `±bounds`.
///
/// Each round inverts `J` with the saturated columns zeroed. When the
/// candidate violates a bound, the joint that limits the task scale is pinned
/// at its bound and the rest of the task is redistributed. If no saturation
/// set reaches the full task, the best scaled solution seen is returned.
pub fn sns_solve(
    j: &Matrix,
    target: &Vector,
    bounds: &[f64],
    gi: &dyn GeneralizedInverse,
) -> Result<SnsOutcome, PlanError> {
    let (m, n) = j.shape();
    if bounds.len() != n || target.len() != m {
        return Err(PlanError::Shape(format!(
            "SNS needs {n} bounds and {m} targets, got {} and {}",
            bounds.len(),
            target.len()
        )));
    }
    if bounds.iter().any(|b| !(*b > 0.0)) {
        return Err(PlanError::Shape("SNS bounds must be positive".into()));
    }

    let mut free = vec![true; n];
    let mut pinned = Vector::zeros(n);
    let mut best: Option<Candidate> = None;
    let mut rounds = 0;

    while rounds <= 2 * n && free.iter().any(|f| *f) {
        rounds += 1;
        let jw = Matrix::from_fn(m, n, |r, c| if free[c] { j[(r, c)] } else { 0.0 });
        let inv = match gi.invert(&jw) {
            Ok(x) => x,
            Err(GiError::Degenerate { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        if (&jw * &inv).trace() < m as f64 - 0.5 {
            break;
        }
        let a = &inv * target;
        let b = &pinned - &inv * (j * &pinned);
        let cmd = &b + &a;
        let saturated: Vec<usize> = (0..n).filter(|&i| !free[i]).collect();
        if within(&cmd, bounds) {
            return Ok(SnsOutcome {
                command: clamp_to(cmd, bounds),
                scale: 1.0,
                saturated,
                rounds,
            });
        }
        let (s, crit) = scale_factor(&a, &b, bounds, &free);
        let s = s.min(1.0);
        if best.as_ref().is_none_or(|c| s > c.scale) {
            best = Some(Candidate {
                scale: s,
                a: a.clone(),
                b: b.clone(),
                saturated,
            });
        }
        let Some(k) = crit else { break };
        free[k] = false;
        pinned[k] = bounds[k].copysign(cmd[k]);
    }

    match best {
        Some(c) if c.scale > 0.0 => Ok(SnsOutcome {
            command: clamp_to(&c.b + &c.a * c.scale, bounds),
            scale: c.scale,
            saturated: c.saturated,
            rounds,
        }),
        _ => Err(PlanError::Infeasible { rounds }),
    }
}
