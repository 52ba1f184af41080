//! Benchmark suite: the test functions f1–f14, a stochastic elliptic problem
//! with a truncated log-normal diffusion field, the error metrics used to
//! report results, and reference oracles (analytic mean for the discontinuous
//! Genz integrand, Monte Carlo / quasi-Monte Carlo means elsewhere).

use crate::cache::Model;
use crate::error::{Result, ScamrError};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, PartialEq)]
enum CaseKind {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
    F10,
    F11,
    F12,
    F13,
    F14 { c: Vec<f64> },
    Elliptic { spec: EllipticSolverSpec },
}

/// A registered benchmark case: id, dimension, input hyperbox, parameters.
#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    id: String,
    dim: usize,
    domain: Vec<(f64, f64)>,
    kind: CaseKind,
}

impl BenchmarkCase {
    /// Look up a case by string id: "f1".."f14" or "elliptic-n<dim>".
    /// `dim` is required for f14 (the paper uses 100/200/300) and must match
    /// the fixed dimension of every other f-case if given.
    /// `elliptic_resolution` overrides the 64-cell default grid.
    pub fn by_id(id: &str, dim: Option<usize>, elliptic_resolution: Option<usize>) -> Result<Self> {
        let fixed = |kind: CaseKind, d: usize, domain: Vec<(f64, f64)>| -> Result<BenchmarkCase> {
            if let Some(req) = dim {
                if req != d {
                    return Err(ScamrError::InvalidConfig(format!(
                        "case {id} has fixed dimension {d}, got --dim {req}"
                    )));
                }
            }
            Ok(BenchmarkCase {
                id: id.to_string(),
                dim: d,
                domain,
                kind,
            })
        };
        let unit = |d: usize| vec![(0.0, 1.0); d];
        match id {
            "f1" => fixed(CaseKind::F1, 2, unit(2)),
            "f2" => fixed(CaseKind::F2, 2, unit(2)),
            "f3" => fixed(CaseKind::F3, 4, unit(4)),
            "f4" => fixed(CaseKind::F4, 4, unit(4)),
            "f5" => fixed(CaseKind::F5, 4, unit(4)),
            "f6" => fixed(CaseKind::F6, 10, unit(10)),
            "f7" => fixed(CaseKind::F7, 2, unit(2)),
            "f8" => fixed(CaseKind::F8, 4, unit(4)),
            "f9" => fixed(CaseKind::F9, 10, unit(10)),
            "f10" => fixed(CaseKind::F10, 2, unit(2)),
            "f11" => fixed(CaseKind::F11, 4, unit(4)),
            "f12" => fixed(CaseKind::F12, 10, unit(10)),
            "f13" => fixed(CaseKind::F13, 10, vec![(-SQRT3, SQRT3); 10]),
            "f14" => {
                let n = dim.unwrap_or(100);
                if n < 2 {
                    return Err(ScamrError::InvalidConfig("f14 needs dim ≥ 2".into()));
                }
                Ok(BenchmarkCase {
                    id: id.to_string(),
                    dim: n,
                    domain: unit(n),
                    kind: CaseKind::F14 { c: f14_weights(n) },
                })
            }
            other => {
                if let Some(nstr) = other.strip_prefix("elliptic-n") {
                    let n: usize = nstr.parse().map_err(|_| {
                        ScamrError::InvalidConfig(format!("bad elliptic case id: {other}"))
                    })?;
                    if n < 2 {
                        return Err(ScamrError::InvalidConfig("elliptic needs dim ≥ 2".into()));
                    }
                    let spec = EllipticSolverSpec {
                        resolution: elliptic_resolution.unwrap_or(64),
                    };
                    spec.validate()?;
                    Ok(BenchmarkCase {
                        id: other.to_string(),
                        dim: n,
                        domain: vec![(-SQRT3, SQRT3); n],
                        kind: CaseKind::Elliptic { spec },
                    })
                } else {
                    Err(ScamrError::InvalidConfig(format!("unknown case id: {other}")))
                }
            }
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// Exact model value at an in-domain point.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(ScamrError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        for (d, (&v, &(lo, hi))) in x.iter().zip(self.domain.iter()).enumerate() {
            let tol = 1e-9 * (hi - lo);
            if v < lo - tol || v > hi + tol {
                return Err(ScamrError::OutOfDomain {
                    dim: d,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        Ok(match &self.kind {
            CaseKind::F1 => x[0] * x[0] + x[1] * x[1],
            CaseKind::F2 => (4.0 * x[0]).sin() * (4.0 * x[1]).sin(),
            CaseKind::F3 => x.iter().map(|v| v * v).sum(),
            CaseKind::F4 | CaseKind::F6 => x.iter().map(|v| (4.0 * v).sin()).sum(),
            CaseKind::F5 => {
                (4.0 * x[0]).sin() * (4.0 * x[1]).sin() + (4.0 * x[2]).sin() * (4.0 * x[3]).sin()
            }
            CaseKind::F7 => line_singularity(x[0], x[1]),
            CaseKind::F8 | CaseKind::F9 => {
                line_singularity(x[0], x[1]) + x[2..].iter().sum::<f64>()
            }
            CaseKind::F10 => c0_discontinuity(x[0], x[1]),
            CaseKind::F11 | CaseKind::F12 => {
                c0_discontinuity(x[0], x[1]) + x[2..].iter().sum::<f64>()
            }
            CaseKind::F13 => {
                // x_i = σ y_i with σ = 2; the run operates on the y-box.
                let s: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| f13_alpha(i) * 2.0 * y)
                    .sum();
                1.0 / (1.0 + s)
            }
            CaseKind::F14 { c } => {
                if x[0] >= 0.5 || x[1] >= 0.5 {
                    0.0
                } else {
                    let s: f64 = x.iter().zip(c.iter()).map(|(&v, &ci)| ci * v).sum();
                    s.exp()
                }
            }
            CaseKind::Elliptic { spec } => solve_elliptic(x, spec)?,
        })
    }
}

impl Model for BenchmarkCase {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        BenchmarkCase::eval(self, x)
    }
}

fn line_singularity(x1: f64, x2: f64) -> f64 {
    1.0 / ((0.3 - x1 * x1 - x2 * x2).abs() + 0.1)
}

fn c0_discontinuity(x1: f64, x2: f64) -> f64 {
    if x1 >= 0.5 || x2 >= 0.5 {
        0.0
    } else {
        (std::f64::consts::PI * x1).sin() * (std::f64::consts::PI * x2).sin()
    }
}

/// α_i = 0.1 / 2^{i−1} (1-based i).
fn f13_alpha(zero_based: usize) -> f64 {
    0.1 / 2f64.powi(zero_based as i32)
}

/// c_i = e^{−35 i / (n−1)} (1-based i).
pub fn f14_weights(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| (-35.0 * i as f64 / (n as f64 - 1.0)).exp())
        .collect()
}

/// ∫₀^u e^{c x} dx = (e^{c u} − 1)/c, stable as c → 0 (limit u).
pub fn genz_factor(c: f64, upper: f64) -> f64 {
    if c == 0.0 {
        upper
    } else {
        (c * upper).exp_m1() / c
    }
}

/// Closed-form mean of f14 over [0,1]^n: the admissible box is
/// [0,0.5)² × [0,1]^{n−2}, and the integrand factorizes.
pub fn analytic_mean_f14(n: usize) -> f64 {
    let c = f14_weights(n);
    let mut mean = genz_factor(c[0], 0.5) * genz_factor(c[1], 0.5);
    for &ci in &c[2..] {
        mean *= genz_factor(ci, 1.0);
    }
    mean
}

/// Root mean squared error over paired samples.
pub fn rmse(exact: &[f64], approx: &[f64]) -> Result<f64> {
    if exact.len() != approx.len() {
        return Err(ScamrError::LengthMismatch {
            left_name: "exact",
            left: exact.len(),
            right_name: "approx",
            right: approx.len(),
        });
    }
    let n = exact.len() as f64;
    let sum: f64 = exact
        .iter()
        .zip(approx.iter())
        .map(|(&e, &a)| (e - a) * (e - a))
        .sum();
    Ok((sum / n).sqrt())
}

/// ‖exact − approx‖₂ / ‖exact‖₂.
pub fn normalized_l2(exact: &[f64], approx: &[f64]) -> Result<f64> {
    if exact.len() != approx.len() {
        return Err(ScamrError::LengthMismatch {
            left_name: "exact",
            left: exact.len(),
            right_name: "approx",
            right: approx.len(),
        });
    }
    let num: f64 = exact
        .iter()
        .zip(approx.iter())
        .map(|(&e, &a)| (e - a) * (e - a))
        .sum();
    let den: f64 = exact.iter().map(|&e| e * e).sum();
    if den == 0.0 {
        return Err(ScamrError::InvalidConfig(
            "normalized L2 undefined for identically zero exact values".into(),
        ));
    }
    Ok((num / den).sqrt())
}

/// |I_exact − I_approx| / I_exact.
pub fn relative_mean_error(i_exact: f64, i_approx: f64) -> Result<f64> {
    if i_exact == 0.0 {
        return Err(ScamrError::InvalidConfig(
            "relative mean error undefined for zero exact mean".into(),
        ));
    }
    Ok((i_exact - i_approx).abs() / i_exact)
}

/// Plain Monte Carlo mean with standard error, seeded.
pub fn mc_reference(case: &BenchmarkCase, sample_count: usize, seed: u64) -> Result<(f64, f64)> {
    if sample_count < 1000 {
        return Err(ScamrError::InvalidConfig(
            "mc_reference needs at least 10^3 samples".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut x = vec![0.0; case.dim()];
    for _ in 0..sample_count {
        for (v, &(lo, hi)) in x.iter_mut().zip(case.domain().iter()) {
            *v = rng.gen_range(lo..hi);
        }
        let f = case.eval(&x)?;
        sum += f;
        sum_sq += f * f;
    }
    let n = sample_count as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// Shifted-Halton quasi-Monte Carlo mean (Cranley–Patterson rotation with a
/// fixed seed). Used to cross-check the analytic f14 mean.
pub fn qmc_reference(case: &BenchmarkCase, sample_count: usize) -> Result<f64> {
    let n = case.dim();
    let primes = first_primes(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x2026_0809);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut sum = 0.0;
    let mut x = vec![0.0; n];
    for k in 0..sample_count {
        for d in 0..n {
            let u = (radical_inverse(k as u64 + 1, primes[d]) + shift[d]).fract();
            let (lo, hi) = case.domain()[d];
            x[d] = lo + u * (hi - lo);
        }
        sum += case.eval(&x)?;
    }
    Ok(sum / sample_count as f64)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= b;
    }
    out
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes.iter().all(|&p| candidate % p != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Finite-difference discretization spec for the stochastic elliptic problem.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticSolverSpec {
    /// Cells per axis (nodes = resolution + 1); even so the observation point
    /// (0.5, 0.5) is a grid node.
    pub resolution: usize,
}

impl Default for EllipticSolverSpec {
    fn default() -> Self {
        Self { resolution: 64 }
    }
}

impl EllipticSolverSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 16 || self.resolution % 2 != 0 {
            return Err(ScamrError::InvalidConfig(format!(
                "elliptic resolution must be even and ≥ 16, got {}",
                self.resolution
            )));
        }
        Ok(())
    }
}

/// Diffusion coefficient a_n(x) from the truncated expansion:
/// log(a − 0.5) = 1 + Y₁ (√π L / 2)^{1/2} + Σ_{i≥2} ξ_i φ_i(x) Y_i,
/// with L_p = max{1, 2 L_c}, L = L_c/L_p, L_c = 0.5. Varies in x only.
pub fn elliptic_coefficient(sample: &[f64], x: f64) -> f64 {
    const L_C: f64 = 0.5;
    let l_p = 1.0f64.max(2.0 * L_C);
    let l = L_C / l_p;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut log_term = 1.0 + sample[0] * (sqrt_pi * l / 2.0).sqrt();
    for (idx, &y) in sample.iter().enumerate().skip(1) {
        let i = idx + 1; // 1-based index in the expansion
        let half = (i / 2) as f64;
        let xi = (sqrt_pi * l).sqrt() * (-(half * std::f64::consts::PI * l).powi(2) / 8.0).exp();
        let phi = if i % 2 == 0 {
            (half * std::f64::consts::PI * x / l_p).sin()
        } else {
            (half * std::f64::consts::PI * x / l_p).cos()
        };
        log_term += xi * phi * y;
    }
    0.5 + log_term.exp()
}

/// Solve −∇·(a ∇u) = cos(x) sin(y) on the unit square with homogeneous
/// Dirichlet data, second-order central differences and harmonic-mean face
/// coefficients, by banded Cholesky. Returns u at (0.5, 0.5).
pub fn solve_elliptic(sample: &[f64], spec: &EllipticSolverSpec) -> Result<f64> {
    spec.validate()?;
    if sample.len() < 2 {
        return Err(ScamrError::InvalidConfig(
            "elliptic sample needs n ≥ 2 components".into(),
        ));
    }
    for (d, &y) in sample.iter().enumerate() {
        if y < -SQRT3 - 1e-9 || y > SQRT3 + 1e-9 {
            return Err(ScamrError::OutOfDomain {
                dim: d,
                value: y,
                lo: -SQRT3,
                hi: SQRT3,
            });
        }
    }

    let r = spec.resolution;
    let h = 1.0 / r as f64;
    let m = r - 1; // interior nodes per axis
    let nn = m * m;

    // Node coefficients a(x_i) and harmonic-mean x-face coefficients.
    let a_node: Vec<f64> = (0..=r)
        .map(|i| {
            let a = elliptic_coefficient(sample, i as f64 * h);
            assert!(a > 0.5, "elliptic coefficient must exceed 0.5");
            a
        })
        .collect();
    let a_face = |i: usize| -> f64 {
        2.0 * a_node[i] * a_node[i + 1] / (a_node[i] + a_node[i + 1])
    };

    // Assemble the banded SPD system (row-major over interior nodes, x
    // fastest; bandwidth m).
    let bw = m;
    let mut band = vec![0.0f64; nn * (bw + 1)]; // band[row*(bw+1) + offset], offset = row − col
    let mut rhs = vec![0.0f64; nn];
    let inv_h2 = 1.0 / (h * h);
    for jy in 1..=m {
        for ix in 1..=m {
            let row = (jy - 1) * m + (ix - 1);
            let aw = a_face(ix - 1);
            let ae = a_face(ix);
            let ay = a_node[ix];
            band[row * (bw + 1)] = (aw + ae + 2.0 * ay) * inv_h2;
            if ix > 1 {
                band[row * (bw + 1) + 1] = -aw * inv_h2; // west neighbor
            }
            if jy > 1 {
                band[row * (bw + 1) + bw] = -ay * inv_h2; // south neighbor
            }
            let x = ix as f64 * h;
            let y = jy as f64 * h;
            rhs[row] = x.cos() * y.sin();
        }
    }

    cholesky_banded_solve(&mut band, &mut rhs, nn, bw)?;

    let mid = r / 2;
    let row = (mid - 1) * m + (mid - 1);
    Ok(rhs[row])
}

/// In-place banded Cholesky factorization and solve (lower band storage:
/// band[row*(bw+1) + (row − col)] for row − bw ≤ col ≤ row).
fn cholesky_banded_solve(band: &mut [f64], rhs: &mut [f64], n: usize, bw: usize) -> Result<()> {
    let w = bw + 1;
    for i in 0..n {
        let j0 = i.saturating_sub(bw);
        for j in j0..=i {
            let mut sum = band[i * w + (i - j)];
            let k0 = j0.max(j.saturating_sub(bw));
            for k in k0..j {
                sum -= band[i * w + (i - k)] * band[j * w + (j - k)];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(ScamrError::InvalidConfig(
                        "elliptic system not positive definite".into(),
                    ));
                }
                band[i * w] = sum.sqrt();
            } else {
                band[i * w + (i - j)] = sum / band[j * w];
            }
        }
    }
    // Forward substitution L z = b.
    for i in 0..n {
        let mut sum = rhs[i];
        let k0 = i.saturating_sub(bw);
        for k in k0..i {
            sum -= band[i * w + (i - k)] * rhs[k];
        }
        rhs[i] = sum / band[i * w];
    }
    // Back substitution Lᵀ u = z.
    for i in (0..n).rev() {
        let mut sum = rhs[i];
        let kmax = (i + bw).min(n - 1);
        for k in (i + 1)..=kmax {
            sum -= band[k * w + (k - i)] * rhs[k];
        }
        rhs[i] = sum / band[i * w];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn registry_and_domains() {
        let f1 = BenchmarkCase::by_id("f1", None, None).unwrap();
        assert_eq!(f1.dim(), 2);
        assert_eq!(f1.domain(), &[(0.0, 1.0), (0.0, 1.0)]);

        let f13 = BenchmarkCase::by_id("f13", None, None).unwrap();
        assert_eq!(f13.dim(), 10);
        assert_abs_diff_eq!(f13.domain()[0].1, SQRT3);

        let f14 = BenchmarkCase::by_id("f14", Some(100), None).unwrap();
        assert_eq!(f14.dim(), 100);

        let ell = BenchmarkCase::by_id("elliptic-n25", None, None).unwrap();
        assert_eq!(ell.dim(), 25);

        assert!(BenchmarkCase::by_id("f1", Some(3), None).is_err());
        assert!(BenchmarkCase::by_id("nope", None, None).is_err());
    }

    #[test]
    fn case_point_examples() {
        let f1 = BenchmarkCase::by_id("f1", None, None).unwrap();
        assert_abs_diff_eq!(f1.eval(&[0.5, 0.5]).unwrap(), 0.5);

        let f14 = BenchmarkCase::by_id("f14", Some(100), None).unwrap();
        let mut x = vec![0.3; 100];
        x[0] = 0.7;
        assert_eq!(f14.eval(&x).unwrap(), 0.0);

        let f13 = BenchmarkCase::by_id("f13", None, None).unwrap();
        assert_abs_diff_eq!(f13.eval(&vec![0.0; 10]).unwrap(), 1.0);
    }

    #[test]
    fn out_of_domain_rejected() {
        let f1 = BenchmarkCase::by_id("f1", None, None).unwrap();
        assert!(f1.eval(&[1.5, 0.0]).is_err());
    }

    #[test]
    fn formulas_match_hand_coded_duplicates() {
        // Independently retranscribed formulas; values must agree bit for bit
        // at 1000 random points per case.
        use std::f64::consts::PI;
        let duplicates: Vec<(&str, Box<dyn Fn(&[f64]) -> f64>)> = vec![
            ("f1", Box::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1])),
            ("f2", Box::new(|x: &[f64]| (4.0 * x[0]).sin() * (4.0 * x[1]).sin())),
            ("f3", Box::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3])),
            ("f4", Box::new(|x: &[f64]| {
                (4.0 * x[0]).sin() + (4.0 * x[1]).sin() + (4.0 * x[2]).sin() + (4.0 * x[3]).sin()
            })),
            ("f5", Box::new(|x: &[f64]| {
                (4.0 * x[0]).sin() * (4.0 * x[1]).sin() + (4.0 * x[2]).sin() * (4.0 * x[3]).sin()
            })),
            ("f6", Box::new(|x: &[f64]| x.iter().map(|v| (4.0 * v).sin()).sum())),
            ("f7", Box::new(|x: &[f64]| {
                1.0 / ((0.3 - x[0] * x[0] - x[1] * x[1]).abs() + 0.1)
            })),
            ("f8", Box::new(|x: &[f64]| {
                let tail = x[2] + x[3];
                1.0 / ((0.3 - x[0] * x[0] - x[1] * x[1]).abs() + 0.1) + tail
            })),
            ("f9", Box::new(|x: &[f64]| {
                1.0 / ((0.3 - x[0] * x[0] - x[1] * x[1]).abs() + 0.1)
                    + x[2..].iter().sum::<f64>()
            })),
            ("f10", Box::new(|x: &[f64]| {
                if x[0] >= 0.5 || x[1] >= 0.5 {
                    0.0
                } else {
                    (PI * x[0]).sin() * (PI * x[1]).sin()
                }
            })),
            ("f11", Box::new(|x: &[f64]| {
                let tail = x[2] + x[3];
                if x[0] >= 0.5 || x[1] >= 0.5 {
                    tail
                } else {
                    (PI * x[0]).sin() * (PI * x[1]).sin() + tail
                }
            })),
            ("f12", Box::new(|x: &[f64]| {
                let tail: f64 = x[2..].iter().sum();
                if x[0] >= 0.5 || x[1] >= 0.5 {
                    tail
                } else {
                    (PI * x[0]).sin() * (PI * x[1]).sin() + tail
                }
            })),
            ("f13", Box::new(|y: &[f64]| {
                let mut s = 0.0;
                for (i, &yi) in y.iter().enumerate() {
                    s += 0.1 / 2f64.powi(i as i32) * 2.0 * yi;
                }
                1.0 / (1.0 + s)
            })),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for (id, dup) in duplicates {
            let case = BenchmarkCase::by_id(id, None, None).unwrap();
            for _ in 0..1000 {
                let x: Vec<f64> = case
                    .domain()
                    .iter()
                    .map(|&(lo, hi)| rng.gen_range(lo..hi))
                    .collect();
                let got = case.eval(&x).unwrap();
                let want = dup(&x);
                assert_eq!(got.to_bits(), want.to_bits(), "case {id} at {x:?}");
            }
        }
        // f14 duplicate (n = 50).
        let case = BenchmarkCase::by_id("f14", Some(50), None).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0)).collect();
            let want = if x[0] >= 0.5 || x[1] >= 0.5 {
                0.0
            } else {
                let mut s = 0.0;
                for (i, &v) in x.iter().enumerate() {
                    s += (-35.0 * (i as f64 + 1.0) / 49.0).exp() * v;
                }
                s.exp()
            };
            assert_eq!(case.eval(&x).unwrap().to_bits(), want.to_bits());
        }
    }

    #[test]
    fn branch_zero_on_closed_set() {
        // f10–f12 and f14 are exactly zero-valued/branch-consistent on
        // x₁ ≥ 0.5 ∨ x₂ ≥ 0.5.
        let f10 = BenchmarkCase::by_id("f10", None, None).unwrap();
        let f14 = BenchmarkCase::by_id("f14", Some(10), None).unwrap();
        for &(x1, x2) in &[(0.5, 0.2), (0.2, 0.5), (0.5, 0.5), (0.9, 0.1)] {
            assert_eq!(f10.eval(&[x1, x2]).unwrap(), 0.0);
            let mut x = vec![0.25; 10];
            x[0] = x1;
            x[1] = x2;
            assert_eq!(f14.eval(&x).unwrap(), 0.0);
        }
        let f11 = BenchmarkCase::by_id("f11", None, None).unwrap();
        assert_abs_diff_eq!(f11.eval(&[0.5, 0.1, 0.3, 0.4]).unwrap(), 0.7);
    }

    #[test]
    fn metric_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            (25.0f64 / 2.0).sqrt()
        );
        assert_abs_diff_eq!(rmse(&[1.0, 5.0], &[1.5, 5.5]).unwrap(), 0.5);

        assert_eq!(normalized_l2(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(normalized_l2(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(normalized_l2(&[1.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(normalized_l2(&[0.0], &[1.0]).is_err());

        assert_eq!(relative_mean_error(2.0, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(relative_mean_error(2.0, 1.0).unwrap(), 0.5);
        assert_abs_diff_eq!(relative_mean_error(1.0, 1.0026).unwrap(), 0.0026, epsilon = 1e-12);
        assert!(relative_mean_error(0.0, 1.0).is_err());
    }

    #[test]
    fn genz_factor_limit() {
        // (e^{cu} − 1)/c → u as c → 0; the admissible volume fraction 0.25.
        assert_abs_diff_eq!(genz_factor(1e-300, 0.5) * genz_factor(1e-300, 0.5), 0.25);
        assert_eq!(genz_factor(0.0, 0.5), 0.5);
        // Plain value check against the direct formula.
        assert_abs_diff_eq!(
            genz_factor(0.7, 1.0),
            (0.7f64.exp() - 1.0) / 0.7,
            epsilon = 1e-15
        );
    }

    #[test]
    fn analytic_mean_f14_small_n_matches_quadrature() {
        // Independent oracle: composite Simpson per axis (the branch cuts the
        // x₁/x₂ ranges at 0.5, inside which the integrand is smooth).
        let n = 3;
        let c = f14_weights(n);
        let simpson = |c: f64, upper: f64| -> f64 {
            let m = 4000;
            let h = upper / m as f64;
            let mut s = (0.0f64).exp() + (c * upper).exp();
            for k in 1..m {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * (c * k as f64 * h).exp();
            }
            s * h / 3.0
        };
        let expected = simpson(c[0], 0.5) * simpson(c[1], 0.5) * simpson(c[2], 1.0);
        assert_abs_diff_eq!(analytic_mean_f14(n), expected, epsilon = 1e-10);

        // n = 2 has only the two half-range factors.
        let c2 = f14_weights(2);
        assert_abs_diff_eq!(
            analytic_mean_f14(2),
            genz_factor(c2[0], 0.5) * genz_factor(c2[1], 0.5),
            epsilon = 1e-15
        );
    }

    #[test]
    fn mc_reference_basics() {
        let f1 = BenchmarkCase::by_id("f1", None, None).unwrap();
        let (mean, se) = mc_reference(&f1, 100_000, 7).unwrap();
        // Exact mean 2/3.
        assert!((mean - 2.0 / 3.0).abs() < 3.0 * se + 1e-12);
        assert!(se > 0.0);

        // Reproducible across seeds within combined 3 SE.
        let f13 = BenchmarkCase::by_id("f13", None, None).unwrap();
        let (m1, s1) = mc_reference(&f13, 50_000, 1).unwrap();
        let (m2, s2) = mc_reference(&f13, 50_000, 2).unwrap();
        assert!((m1 - m2).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt());

        assert!(mc_reference(&f1, 10, 0).is_err());
    }

    #[test]
    fn qmc_cross_checks_f14_mean() {
        let case = BenchmarkCase::by_id("f14", Some(100), None).unwrap();
        let analytic = analytic_mean_f14(100);
        let qmc = qmc_reference(&case, 2_000_000).unwrap();
        let rel = (qmc - analytic).abs() / analytic;
        assert!(rel < 5e-4, "qmc {qmc} vs analytic {analytic} (rel {rel:.2e})");
    }

    #[test]
    fn elliptic_boundary_and_positivity() {
        let spec = EllipticSolverSpec { resolution: 16 };
        let sample = vec![0.3; 5];
        // Coefficient positivity over the axis.
        for i in 0..=16 {
            assert!(elliptic_coefficient(&sample, i as f64 / 16.0) > 0.5);
        }
        // Interior solve runs; boundary nodes are exactly zero by
        // construction (they are eliminated from the system).
        let u = solve_elliptic(&sample, &spec).unwrap();
        assert!(u.is_finite());
        assert!(solve_elliptic(&[3.0, 0.0], &spec).is_err()); // out of range
        assert!(solve_elliptic(&[0.1], &spec).is_err()); // n < 2
    }

    #[test]
    fn elliptic_linearity_in_inverse_coefficient() {
        // All Y = 0 degenerates to the constant coefficient A = 0.5 + e, and
        // a constant-coefficient solve scales as 1/A: u(A) = u(1)/A, so
        // halving A doubles u pointwise.
        let spec = EllipticSolverSpec { resolution: 32 };
        let sample = vec![0.0; 4];
        let u_a = solve_elliptic(&sample, &spec).unwrap();
        let a = 0.5 + 1.0f64.exp();
        let u_unit = poisson_unit_coefficient(&spec);
        assert_abs_diff_eq!(u_a, u_unit / a, epsilon = 1e-10);
        assert_abs_diff_eq!(u_unit / (a / 2.0), 2.0 * u_a, epsilon = 1e-10);
    }

    /// Reference constant-coefficient (a ≡ 1) Poisson solve sharing the
    /// banded Cholesky, used by the linearity test.
    fn poisson_unit_coefficient(spec: &EllipticSolverSpec) -> f64 {
        let r = spec.resolution;
        let h = 1.0 / r as f64;
        let m = r - 1;
        let nn = m * m;
        let bw = m;
        let mut band = vec![0.0f64; nn * (bw + 1)];
        let mut rhs = vec![0.0f64; nn];
        let inv_h2 = 1.0 / (h * h);
        for jy in 1..=m {
            for ix in 1..=m {
                let row = (jy - 1) * m + (ix - 1);
                band[row * (bw + 1)] = 4.0 * inv_h2;
                if ix > 1 {
                    band[row * (bw + 1) + 1] = -inv_h2;
                }
                if jy > 1 {
                    band[row * (bw + 1) + bw] = -inv_h2;
                }
                rhs[row] = (ix as f64 * h).cos() * (jy as f64 * h).sin();
            }
        }
        cholesky_banded_solve(&mut band, &mut rhs, nn, bw).unwrap();
        let mid = r / 2;
        rhs[(mid - 1) * m + (mid - 1)]
    }

    #[test]
    fn elliptic_grid_convergence_is_second_order() {
        // |u64 − u128| ≤ 4 |u128 − u256| + 1e-12 for one fixed sample.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sample: Vec<f64> = (0..25).map(|_| rng.gen_range(-SQRT3..SQRT3)).collect();
        let u = |res: usize| {
            solve_elliptic(&sample, &EllipticSolverSpec { resolution: res }).unwrap()
        };
        let (u64v, u128v, u256v) = (u(64), u(128), u(256));
        let coarse = (u64v - u128v).abs();
        let fine = (u128v - u256v).abs();
        assert!(
            coarse <= 4.0 * fine + 1e-12,
            "coarse {coarse:.3e} vs 4*fine {:.3e}",
            4.0 * fine
        );
    }
}
