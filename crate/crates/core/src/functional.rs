//! Local update functionals and the unit-ball projection.
//!
//! Each built-in functional carries an analytically derived Lipschitz
//! constant L and output bound B (derivations in the comments on
//! [`LocalFunctional::lipschitz_bound`] and [`LocalFunctional::output_bound`]).
//! `estimate_lipschitz` is a sampling guardrail against declaration errors,
//! not the source of truth.
//!
//! Canonical evaluation order (shared with the brute-force reference
//! implementation so results are bit-comparable): neighborhood means are
//! accumulated over the neighbor states in ascending NodeId order, then the
//! center state, then divided by the count.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Clone, Debug, PartialEq)]
pub enum LocalFunctional {
    /// f = 0.
    Zero,
    /// f = scale * (mean(neighbors, center) - center).
    NeighborAverage { scale: f64 },
    /// f_j = tanh(gain * mean_j + bias), componentwise.
    SaturatedMix { gain: f64, bias: f64 },
    /// f = amplitude * tanh(|m|) * R_angle(m / |m|), where m is the
    /// neighborhood mean and R_angle rotates the first two coordinates.
    /// Maps the zero mean to zero. A bounded, Lipschitz, direction-mixing
    /// nonlinear update.
    CurvedRotation { angle: f64, amplitude: f64 },
}

pub const FUNCTIONAL_KINDS: &[&str] =
    &["zero", "neighbor_average", "saturated_mix", "curved_rotation"];

impl LocalFunctional {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::NeighborAverage { .. } => "neighbor_average",
            Self::SaturatedMix { .. } => "saturated_mix",
            Self::CurvedRotation { .. } => "curved_rotation",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params: &[f64] = match self {
            Self::Zero => &[],
            Self::NeighborAverage { scale } => std::slice::from_ref(scale),
            Self::SaturatedMix { gain, bias } => &[*gain, *bias][..],
            Self::CurvedRotation { angle, amplitude } => &[*angle, *amplitude][..],
        };
        if params.iter().all(|p| p.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteInput)
        }
    }

    /// Declared Lipschitz constant with respect to the concatenated input
    /// (center, n_1, ..., n_k) in the product Euclidean norm, valid for every
    /// arity k >= 0.
    ///
    /// Derivations (m denotes the mean over the k+1 inputs; as a linear map
    /// its coefficients are all 1/(k+1), so |m(x)-m(y)| <= |x-y|/sqrt(k+1)
    /// by Cauchy-Schwarz over the blocks):
    ///
    /// - zero: L = 0.
    /// - neighbor_average: f = a(m - c) has block coefficients a/(k+1) on
    ///   each neighbor and a(1/(k+1) - 1) on the center, giving exact
    ///   constant |a| * sqrt(k/(k+1)) < |a|. Declared: |a|.
    /// - saturated_mix: tanh is 1-Lipschitz componentwise and the bias is
    ///   constant, so L <= |g| * Lip(m) = |g|/sqrt(k+1) <= |g|. Declared: |g|.
    /// - curved_rotation: the radial map m -> tanh(|m|) m/|m| has Jacobian
    ///   tanh'(p) on the radial direction and tanh(p)/p tangentially, both
    ///   <= 1, so it is 1-Lipschitz; the rotation is an isometry. Hence
    ///   L <= amplitude * Lip(m) <= amplitude. Declared: amplitude.
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::NeighborAverage { scale } => scale.abs(),
            Self::SaturatedMix { gain, .. } => gain.abs(),
            Self::CurvedRotation { amplitude, .. } => amplitude.abs(),
        }
    }

    /// Declared output bound B over admissible inputs (every block in the
    /// closed unit ball, hence |m| <= 1):
    ///
    /// - zero: 0.
    /// - neighbor_average: |a(m - c)| <= 2|a|.
    /// - saturated_mix: |tanh(g m_j + b)| <= |g||m_j| + |b| componentwise,
    ///   so |f| <= |g| + |b| sqrt(d).
    /// - curved_rotation: |f| = amplitude * tanh(|m|) <= amplitude * tanh(1).
    pub fn output_bound(&self, dim: usize) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::NeighborAverage { scale } => 2.0 * scale.abs(),
            Self::SaturatedMix { gain, bias } => gain.abs() + bias.abs() * (dim as f64).sqrt(),
            Self::CurvedRotation { amplitude, .. } => amplitude.abs() * 1.0f64.tanh(),
        }
    }

    /// Evaluate on (center, neighbors). `neighbors` excludes the center and
    /// must be in ascending NodeId order. `flops` is advanced by the scalar
    /// multiply/add count of the evaluation.
    pub fn eval(
        &self,
        center: &[f64],
        neighbors: &[&[f64]],
        out: &mut [f64],
        flops: &mut u64,
    ) -> Result<()> {
        let dim = out.len();
        if center.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: center.len() });
        }
        for n in neighbors {
            if n.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: n.len() });
            }
        }
        match self {
            Self::Zero => out.fill(0.0),
            Self::NeighborAverage { scale } => {
                mean_into(center, neighbors, out, flops);
                for j in 0..dim {
                    out[j] = (out[j] - center[j]) * scale;
                }
                *flops += 2 * dim as u64;
            }
            Self::SaturatedMix { gain, bias } => {
                mean_into(center, neighbors, out, flops);
                for v in out.iter_mut() {
                    *v = (*gain * *v + *bias).tanh();
                }
                *flops += 3 * dim as u64;
            }
            Self::CurvedRotation { angle, amplitude } => {
                mean_into(center, neighbors, out, flops);
                let mut norm_sq = 0.0;
                for &v in out.iter() {
                    norm_sq += v * v;
                }
                *flops += 2 * dim as u64;
                if norm_sq == 0.0 {
                    return Ok(());
                }
                let norm = norm_sq.sqrt();
                let scale = amplitude * norm.tanh() / norm;
                for v in out.iter_mut() {
                    *v *= scale;
                }
                *flops += dim as u64 + 4;
                if dim >= 2 {
                    let (sin, cos) = angle.sin_cos();
                    let (a, b) = (out[0], out[1]);
                    out[0] = cos * a - sin * b;
                    out[1] = sin * a + cos * b;
                    *flops += 6;
                }
            }
        }
        Ok(())
    }
}

/// Mean over (neighbors..., center) in the canonical order: sum neighbors in
/// the given order, add the center last, divide by the count.
fn mean_into(center: &[f64], neighbors: &[&[f64]], out: &mut [f64], flops: &mut u64) {
    let dim = out.len();
    out.fill(0.0);
    for n in neighbors {
        for j in 0..dim {
            out[j] += n[j];
        }
    }
    for j in 0..dim {
        out[j] += center[j];
    }
    let count = (neighbors.len() + 1) as f64;
    for v in out.iter_mut() {
        *v /= count;
    }
    *flops += (neighbors.len() as u64 + 2) * dim as u64;
}

/// Radial projection onto the closed unit ball: identity inside, x/|x| on
/// the outside. Non-expansive. The flop budget is charged unconditionally
/// (norm plus potential rescale) so operation counts are data-independent.
pub fn project(x: &mut [f64], flops: &mut u64) -> Result<()> {
    let mut norm_sq = 0.0;
    for &c in x.iter() {
        if !c.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        norm_sq += c * c;
    }
    *flops += 3 * x.len() as u64 + 2;
    if norm_sq > 1.0 {
        let norm = norm_sq.sqrt();
        for c in x.iter_mut() {
            *c /= norm;
        }
    }
    Ok(())
}

/// Sample a point uniformly in the closed unit ball of the given dimension.
pub fn sample_in_ball(rng: &mut SplitMix64, dim: usize, out: &mut [f64]) {
    loop {
        rng.fill_normal(out);
        let norm = out.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            let scale = rng.next_f64().powf(1.0 / dim as f64) / norm;
            for c in out.iter_mut() {
                *c *= scale;
            }
            return;
        }
    }
}

/// Empirical Lipschitz estimate: max over sampled admissible input pairs of
/// |f(x) - f(y)| / |x - y|. Deterministic given the seed. Exceeding the
/// declared constant indicates a wrong declaration and is a test failure.
pub fn estimate_lipschitz(
    f: &LocalFunctional,
    dim: usize,
    neighbor_count: usize,
    samples: usize,
    seed: u64,
) -> f64 {
    assert!(samples >= 1);
    let mut rng = SplitMix64::new(seed);
    let blocks = neighbor_count + 1;
    let mut x = vec![0.0; blocks * dim];
    let mut y = vec![0.0; blocks * dim];
    let mut fx = vec![0.0; dim];
    let mut fy = vec![0.0; dim];
    let mut flops = 0u64;
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        for b in 0..blocks {
            sample_in_ball(&mut rng, dim, &mut x[b * dim..(b + 1) * dim]);
            sample_in_ball(&mut rng, dim, &mut y[b * dim..(b + 1) * dim]);
        }
        let dist_sq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist_sq == 0.0 {
            continue;
        }
        let xn: Vec<&[f64]> = (1..blocks).map(|b| &x[b * dim..(b + 1) * dim]).collect();
        let yn: Vec<&[f64]> = (1..blocks).map(|b| &y[b * dim..(b + 1) * dim]).collect();
        f.eval(&x[..dim], &xn, &mut fx, &mut flops).expect("admissible sample");
        f.eval(&y[..dim], &yn, &mut fy, &mut flops).expect("admissible sample");
        let diff_sq: f64 = fx.iter().zip(&fy).map(|(a, b)| (a - b) * (a - b)).sum();
        best = best.max((diff_sq / dist_sq).sqrt());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    #[test]
    fn project_interior_point_unchanged() {
        let mut x = [0.3, 0.4];
        let mut flops = 0;
        project(&mut x, &mut flops).unwrap();
        assert_eq!(x, [0.3, 0.4]);
    }

    #[test]
    fn project_scales_radially() {
        let mut x = [2.0, 0.0];
        let mut flops = 0;
        project(&mut x, &mut flops).unwrap();
        assert_eq!(x, [1.0, 0.0]);
    }

    #[test]
    fn project_fixes_origin() {
        let mut x = [0.0; 5];
        let mut flops = 0;
        project(&mut x, &mut flops).unwrap();
        assert_eq!(x, [0.0; 5]);
    }

    #[test]
    fn project_rejects_nan() {
        let mut x = [f64::NAN, 0.0];
        let mut flops = 0;
        assert!(matches!(project(&mut x, &mut flops), Err(Error::NonFiniteInput)));
    }

    #[test]
    fn zero_functional_outputs_zero() {
        let f = LocalFunctional::Zero;
        let mut out = [1.0, 1.0];
        let mut flops = 0;
        f.eval(&[0.5, 0.5], &[&[0.1, 0.1]], &mut out, &mut flops).unwrap();
        assert_eq!(out, [0.0, 0.0]);
    }

    #[test]
    fn neighbor_average_hand_example() {
        // c=(1,0), n1=(0,1), n2=(0,-1): mean = (1/3, 0), f = mean - c = (-2/3, 0).
        let f = LocalFunctional::NeighborAverage { scale: 1.0 };
        let mut out = [0.0, 0.0];
        let mut flops = 0;
        f.eval(&[1.0, 0.0], &[&[0.0, 1.0], &[0.0, -1.0]], &mut out, &mut flops).unwrap();
        assert!((out[0] - (-2.0 / 3.0)).abs() < 1e-15);
        assert_eq!(out[1], 0.0);
        assert!(norm(&out) <= f.output_bound(2));
    }

    #[test]
    fn saturated_mix_zero_inputs() {
        let f = LocalFunctional::SaturatedMix { gain: 1.0, bias: 0.0 };
        let mut out = [1.0; 3];
        let mut flops = 0;
        f.eval(&[0.0; 3], &[&[0.0; 3], &[0.0; 3]], &mut out, &mut flops).unwrap();
        assert_eq!(out, [0.0; 3]);
    }

    #[test]
    fn curved_rotation_zero_mean_maps_to_zero() {
        let f = LocalFunctional::CurvedRotation { angle: 0.7, amplitude: 1.0 };
        let mut out = [1.0, 1.0];
        let mut flops = 0;
        f.eval(&[1.0, 0.0], &[&[-1.0, 0.0]], &mut out, &mut flops).unwrap();
        assert_eq!(out, [0.0, 0.0]);
    }

    #[test]
    fn curved_rotation_rotates_and_contracts() {
        let f = LocalFunctional::CurvedRotation {
            angle: std::f64::consts::FRAC_PI_2,
            amplitude: 1.0,
        };
        let mut out = [0.0, 0.0];
        let mut flops = 0;
        // Single input (no neighbors): mean = center = (0.5, 0).
        f.eval(&[0.5, 0.0], &[], &mut out, &mut flops).unwrap();
        // Direction (1,0) rotated by pi/2 -> (0,1), magnitude tanh(0.5).
        assert!(out[0].abs() < 1e-15);
        assert!((out[1] - 0.5f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn eval_dimension_mismatch() {
        let f = LocalFunctional::NeighborAverage { scale: 1.0 };
        let mut out = [0.0, 0.0];
        let mut flops = 0;
        assert!(matches!(
            f.eval(&[1.0], &[], &mut out, &mut flops),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            f.eval(&[1.0, 0.0], &[&[1.0][..]], &mut out, &mut flops),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampled_lipschitz_within_declared() {
        for f in [
            LocalFunctional::Zero,
            LocalFunctional::NeighborAverage { scale: 1.0 },
            LocalFunctional::SaturatedMix { gain: 1.3, bias: 0.2 },
            LocalFunctional::CurvedRotation { angle: 0.9, amplitude: 1.5 },
        ] {
            let est = estimate_lipschitz(&f, 3, 2, 2000, 11);
            assert!(
                est <= f.lipschitz_bound() + 1e-12,
                "{}: sampled {est} > declared {}",
                f.kind_name(),
                f.lipschitz_bound()
            );
        }
    }

    #[test]
    fn sampled_outputs_within_declared_bound() {
        let mut rng = SplitMix64::new(5);
        let dim = 4;
        let mut center = vec![0.0; dim];
        let mut n1 = vec![0.0; dim];
        let mut n2 = vec![0.0; dim];
        let mut out = vec![0.0; dim];
        let mut flops = 0;
        for f in [
            LocalFunctional::NeighborAverage { scale: 2.0 },
            LocalFunctional::SaturatedMix { gain: 1.0, bias: 0.5 },
            LocalFunctional::CurvedRotation { angle: 0.4, amplitude: 2.0 },
        ] {
            for _ in 0..2000 {
                sample_in_ball(&mut rng, dim, &mut center);
                sample_in_ball(&mut rng, dim, &mut n1);
                sample_in_ball(&mut rng, dim, &mut n2);
                f.eval(&center, &[&n1, &n2], &mut out, &mut flops).unwrap();
                assert!(norm(&out) <= f.output_bound(dim) + 1e-12, "{}", f.kind_name());
            }
        }
    }
}
