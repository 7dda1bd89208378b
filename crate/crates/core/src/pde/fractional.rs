//! Fractional and regional fractional Laplacians, their discrete
//! counterparts and the kernel-Laplacian convergence check.

use alloc::sync::Arc;
use alloc::vec::Vec;

use libm::pow;

use crate::kernel::{JumpKernel, KernelChoice};
use crate::model::{bump, Model, Profile};
use crate::pde::discrete::MeanGenerator;
use crate::quad::adaptive;
use crate::{Error, Result};

type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A smooth function on ℝ together with its second derivative.
#[derive(Clone)]
pub struct TestFunction {
    pub f: Func,
    pub d2: Func,
    /// Closed interval outside which f vanishes, if any.
    pub support: Option<(f64, f64)>,
}

impl core::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("TestFunction").field("support", &self.support).finish_non_exhaustive()
    }
}

impl TestFunction {
    pub fn new<F, D>(f: F, d2: D, support: Option<(f64, f64)>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TestFunction { f: Arc::new(f), d2: Arc::new(d2), support }
    }

    /// exp(1 − 1/(1 − u²)) with u = (q − center)/width.
    pub fn bump(center: f64, width: f64) -> Self {
        let d2 = move |q: f64| {
            let u = (q - center) / width;
            if u.abs() >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - u * u;
            let p1 = -2.0 * u / (s * s);
            let p2 = -2.0 / (s * s) - 8.0 * u * u / (s * s * s);
            bump(u) * (p1 * p1 + p2) / (width * width)
        };
        TestFunction::new(move |q| bump((q - center) / width), d2, Some((center - width, center + width)))
    }

    pub fn eval(&self, q: f64) -> f64 {
        (self.f)(q)
    }

    pub fn as_profile(&self) -> Profile {
        let f = self.f.clone();
        Profile::Custom(f)
    }
}

/// sup_x |N² Σ_{z∈ℤ} p(z)(G((x+z)/N) − G(x/N)) − (σ²/2)G''(x/N)| over x ∈ Λ_N,
/// for each N in `ns`.
pub fn kernel_laplacian_check(kernel: &JumpKernel, g: &TestFunction, ns: &[usize]) -> Result<Vec<f64>> {
    let sigma2 = kernel
        .sigma2
        .finite()
        .ok_or_else(|| Error::Unsupported("the kernel Laplacian needs a finite-variance kernel".into()))?;
    ns.iter()
        .map(|&n| {
            let nf = n as f64;
            let zmax = match (g.support, kernel.range()) {
                (_, Some(r)) => r,
                (Some(_), None) => 2 * n + 2,
                (None, None) => 8 * n,
            };
            let tails = kernel.tails(zmax + 1);
            let mut worst: f64 = 0.0;
            for x in 1..n {
                let q = x as f64 / nf;
                let gq = g.eval(q);
                let mut s = 0.0;
                let mut last = zmax;
                for z in 1..=zmax {
                    let (a, b) = (q + z as f64 / nf, q - z as f64 / nf);
                    if let Some((lo, hi)) = g.support {
                        if a > hi && b < lo {
                            last = z - 1;
                            break;
                        }
                    }
                    s += kernel.prob(z as i64) * (g.eval(a) + g.eval(b) - 2.0 * gq);
                }
                if g.support.is_some() && last < zmax {
                    s -= 2.0 * gq * tails[last];
                }
                let err = (nf * nf * s - 0.5 * sigma2 * (g.d2)(q)).abs();
                worst = worst.max(err);
            }
            Ok(worst)
        })
        .collect()
}

fn check_frac(gamma: f64, q: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::InvalidParams("fractional order γ must lie in (0, 2)".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParams("evaluation point must lie in (0, 1)".into()));
    }
    Ok(())
}

/// ∫_0^a [G(q+u) + G(q−u) − 2G(q)] u^{−1−γ} du, with the first 10⁻³a taken
/// from the second-order Taylor term.
fn symmetric_part<F: Fn(f64) -> f64>(g: &F, q: f64, a: f64, gamma: f64, tol: f64) -> Result<f64> {
    let gq = g(q);
    let u0 = 1e-3 * a;
    let d2 = (g(q + u0) + g(q - u0) - 2.0 * gq) / (u0 * u0);
    let head = d2 * pow(u0, 2.0 - gamma) / (2.0 - gamma);
    // u = a w^m flattens the u^{1−γ} behaviour at the origin
    let m = 1.0 / (2.0 - gamma);
    let w0 = pow(1e-3, 2.0 - gamma);
    let body = adaptive(
        |w| {
            let u = a * pow(w, m);
            (g(q + u) + g(q - u) - 2.0 * gq) * pow(u, -1.0 - gamma) * a * m * pow(w, m - 1.0)
        },
        w0,
        1.0,
        tol,
        4000,
    )?;
    Ok(head + body)
}

/// Regional operator c PV∫_0^1 (G(u) − G(q))|u − q|^{−1−γ} du.
pub fn regional_frac_laplacian<F: Fn(f64) -> f64>(g: &F, q: f64, gamma: f64, c: f64, tol: f64) -> Result<f64> {
    check_frac(gamma, q)?;
    let a = q.min(1.0 - q);
    let near = symmetric_part(g, q, a, gamma, tol)?;
    let gq = g(q);
    let far = if q < 0.5 {
        adaptive(|u| (g(q + u) - gq) * pow(u, -1.0 - gamma), a, 1.0 - q, tol, 4000)?
    } else if q > 0.5 {
        adaptive(|u| (g(q - u) - gq) * pow(u, -1.0 - gamma), a, q, tol, 4000)?
    } else {
        0.0
    };
    Ok(c * (near + far))
}

/// (−Δ)^{γ/2}G(q) = c∫_0^∞ (2G(q) − G(q+u) − G(q−u)) u^{−1−γ} du with G
/// extended by zero outside (0, 1).
pub fn frac_laplacian_full_line<F: Fn(f64) -> f64>(g: &F, q: f64, gamma: f64, c: f64, tol: f64) -> Result<f64> {
    check_frac(gamma, q)?;
    let ge = |u: f64| if u > 0.0 && u < 1.0 { g(u) } else { 0.0 };
    let gq = ge(q);
    let (a, big) = (q.min(1.0 - q), q.max(1.0 - q));
    let near = symmetric_part(&ge, q, a, gamma, tol)?;
    let mid = adaptive(|u| (ge(q + u) + ge(q - u) - 2.0 * gq) * pow(u, -1.0 - gamma), a, big, tol, 4000)?;
    let tail = -2.0 * gq * pow(big, -gamma) / gamma;
    Ok(-c * (near + mid + tail))
}

/// |LG − (−(−Δ)^{γ/2}G + V₁G)| at q for the long-jump constant c_γ.
pub fn fractional_identity_residual<F: Fn(f64) -> f64>(kernel: &JumpKernel, g: &F, q: f64, tol: f64) -> Result<f64> {
    let gamma = kernel
        .gamma()
        .ok_or_else(|| Error::Unsupported("the fractional identity needs a long-jump kernel".into()))?;
    let lhs = regional_frac_laplacian(g, q, gamma, kernel.c_gamma, tol)?;
    let rhs = -frac_laplacian_full_line(g, q, gamma, kernel.c_gamma, tol)? + kernel.v1(q)? * g(q);
    Ok((lhs - rhs).abs())
}

/// N^γ Σ_{y∈Λ_N} p(y − x)(G(y/N) − G(x/N)) for x ∈ Λ_N.
pub fn discrete_regional_apply<F: Fn(f64) -> f64>(kernel: &JumpKernel, g: &F, n: usize) -> Result<Vec<f64>> {
    let gamma = kernel
        .gamma()
        .ok_or_else(|| Error::Unsupported("the regional operator needs a long-jump kernel".into()))?;
    let nf = n as f64;
    let vals: Vec<f64> = (0..=n).map(|x| g(x as f64 / nf)).collect();
    let p: Vec<f64> = (0..n).map(|z| kernel.prob(z as i64)).collect();
    let scale = pow(nf, gamma);
    Ok((1..n)
        .map(|x| {
            let s: f64 = (1..n).filter(|&y| y != x).map(|y| p[x.abs_diff(y)] * (vals[y] - vals[x])).sum();
            scale * s
        })
        .collect())
}

/// sup |N^γ Σ_{y∈Λ_N} p(y − x)(G(y/N) − G(x/N)) − c_γ PV∫_0^1 (G(u) − G(q))|u − q|^{−1−γ} du|
/// over q = x/N ∈ [lo, hi], visiting every `stride`-th site, for each N in `ns`.
pub fn fractional_laplacian_check(
    kernel: &JumpKernel,
    g: &TestFunction,
    ns: &[usize],
    window: (f64, f64),
    stride: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let gamma = match kernel.gamma() {
        Some(gm) if gm > 1.0 && gm < 2.0 => gm,
        _ => return Err(Error::Unsupported("the fractional check needs a long-jump kernel with γ ∈ (1, 2)".into())),
    };
    let (lo, hi) = window;
    if !(0.0 < lo && lo <= hi && hi < 1.0) || stride == 0 {
        return Err(Error::InvalidParams("window must lie inside (0, 1) and stride must be positive".into()));
    }
    ns.iter()
        .map(|&n| {
            let nf = n as f64;
            let vals: Vec<f64> = (0..=n).map(|x| g.eval(x as f64 / nf)).collect();
            let p: Vec<f64> = (0..n).map(|z| kernel.prob(z as i64)).collect();
            let scale = pow(nf, gamma);
            let mut worst: f64 = 0.0;
            for x in (1..n).step_by(stride) {
                let q = x as f64 / nf;
                if q < lo || q > hi {
                    continue;
                }
                let s: f64 = (1..n).filter(|&y| y != x).map(|y| p[x.abs_diff(y)] * (vals[y] - vals[x])).sum();
                let exact = regional_frac_laplacian(&|u| g.eval(u), q, gamma, kernel.c_gamma, tol)?;
                worst = worst.max((scale * s - exact).abs());
            }
            Ok(worst)
        })
        .collect()
}

/// Mean profile for γ ∈ (1, 2), θ = −1 (time scale N^γ), started from g(x/N).
pub fn fractional_generator_ode(model: &Model, g: &Profile, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    match model.params.kernel {
        KernelChoice::LongJump { gamma } if gamma > 1.0 && gamma < 2.0 => {}
        _ => return Err(Error::Unsupported("the fractional generator needs a long-jump kernel with γ ∈ (1, 2)".into())),
    }
    if model.params.theta != -1.0 {
        return Err(Error::Unsupported("the fractional regime is θ = −1".into()));
    }
    MeanGenerator::new(model).evolve(&g.on_lattice(model.params.n)?, times)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    #[test]
    fn bump_second_derivative_matches_finite_difference() {
        let g = TestFunction::bump(0.5, 0.3);
        for q in [0.3, 0.45, 0.5, 0.66, 0.78] {
            let h = 1e-4;
            let fd = (g.eval(q + h) + g.eval(q - h) - 2.0 * g.eval(q)) / (h * h);
            assert!((fd - (g.d2)(q)).abs() < 1e-5 * (1.0 + fd.abs()), "q={q}");
        }
    }

    #[test]
    fn linear_function_has_zero_kernel_error() {
        let k = JumpKernel::long_jump(3.0).unwrap();
        let g = TestFunction::new(|q| 2.0 * q - 0.3, |_| 0.0, None);
        let e = kernel_laplacian_check(&k, &g, &[64, 128]).unwrap();
        assert!(e.iter().all(|v| *v < 1e-9), "{e:?}");
    }

    #[test]
    fn nn_kernel_error_is_second_order() {
        let k = JumpKernel::nearest_neighbor();
        let g = TestFunction::bump(0.5, 0.4);
        let e = kernel_laplacian_check(&k, &g, &[128, 256, 512]).unwrap();
        assert!(e[0] / e[1] > 3.5 && e[1] / e[2] > 3.5, "{e:?}");
    }

    #[test]
    fn lj_kernel_error_decreases() {
        let k = JumpKernel::long_jump(3.0).unwrap();
        let g = TestFunction::bump(0.5, 0.4);
        let e = kernel_laplacian_check(&k, &g, &[128, 256, 512]).unwrap();
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
    }

    #[test]
    fn regional_operator_kills_constants() {
        let v = regional_frac_laplacian(&|_| 0.7, 0.3, 1.5, 1.0, 1e-12).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn regional_operator_of_a_line() {
        // G(u) = u: c∫_0^1 (u − q)|u − q|^{−1−γ} du = c[(1−q)^{1−γ} − q^{1−γ}]/(1 − γ)
        let (q, gm) = (0.3, 1.5);
        let v = regional_frac_laplacian(&|u| u, q, gm, 1.0, 1e-13).unwrap();
        let exact = (pow(1.0 - q, 1.0 - gm) - pow(q, 1.0 - gm)) / (1.0 - gm);
        assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
    }

    #[test]
    fn regional_operator_of_a_parabola() {
        // G(u) = (u − q)²: c∫_0^1 |u − q|^{1−γ} du
        let (q, gm) = (0.4, 1.3);
        let v = regional_frac_laplacian(&|u: f64| (u - q) * (u - q), q, gm, 1.0, 1e-13).unwrap();
        let exact = (pow(q, 2.0 - gm) + pow(1.0 - q, 2.0 - gm)) / (2.0 - gm);
        assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
    }

    #[test]
    fn identity_holds_for_bump() {
        let k = JumpKernel::long_jump(1.5).unwrap();
        let g = TestFunction::bump(0.5, 0.35);
        for q in [0.2, 0.4, 0.5, 0.7] {
            let r = fractional_identity_residual(&k, &|u| g.eval(u), q, 1e-10).unwrap();
            assert!(r < 1e-8, "q={q} r={r}");
        }
    }

    #[test]
    fn fractional_error_decays_like_n_to_gamma_minus_two() {
        let k = JumpKernel::long_jump(1.5).unwrap();
        let g = TestFunction::bump(0.5, 0.35);
        let e = fractional_laplacian_check(&k, &g, &[256, 1024], (0.45, 0.55), 8, 1e-10).unwrap();
        // N^{-1/2}: a factor 2 per fourfold N
        assert!((e[0] / e[1] - 2.0).abs() < 0.1, "{e:?}");
        assert!(fractional_laplacian_check(&JumpKernel::long_jump(3.0).unwrap(), &g, &[64], (0.2, 0.8), 1, 1e-8).is_err());
    }

    #[test]
    fn fractional_ode_preconditions() {
        let p = ModelParams::new(16, 0.2, 0.8, 1.0, 0.0, KernelChoice::LongJump { gamma: 3.0 }).unwrap();
        let m = Model::new(p).unwrap();
        assert!(fractional_generator_ode(&m, &Profile::Constant(0.5), &[0.1]).is_err());
        let p = ModelParams::new(16, 0.2, 0.8, 1.0, -1.0, KernelChoice::LongJump { gamma: 1.5 }).unwrap();
        let m = Model::new(p).unwrap();
        let out = fractional_generator_ode(&m, &Profile::Constant(0.5), &[0.1]).unwrap();
        assert!(out[0].iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
