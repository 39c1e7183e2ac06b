//! Epanechnikov kernel, its boundary-corrected version on a bounded domain,
//! and integrals of kernel-times-polynomial over intervals.
//!
//! The boundary kernel is
//!
//! ```text
//! k_h(u, v) = 1{u, v ∈ [lo, hi]} k_h(u - v) / ∫_lo^hi k_h(s - v) ds
//! ```
//!
//! so that it integrates to one in its first (evaluation) argument for every
//! data point `v`.

use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelFamily {
    #[default]
    Epanechnikov,
}

/// Second-order symmetric kernel supported on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KernelSpec {
    pub family: KernelFamily,
}

impl KernelSpec {
    pub const SUPPORT_RADIUS: f64 = 1.0;

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫_{-1}^{t} k`.
    #[inline]
    pub fn cdf(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => {
                if t <= -1.0 {
                    0.0
                } else if t >= 1.0 {
                    1.0
                } else {
                    0.5 + 0.75 * (t - t * t * t / 3.0)
                }
            }
        }
    }

    /// `∫_a^b u^p k(u) du`, limits clipped to the support.
    #[inline]
    pub fn partial_moment(&self, power: u32, a: f64, b: f64) -> f64 {
        let a = a.max(-1.0);
        let b = b.min(1.0);
        if a >= b {
            return 0.0;
        }
        match self.family {
            KernelFamily::Epanechnikov => {
                let anti = |u: f64| {
                    let up = u.powi(power as i32 + 1);
                    0.75 * (up / (power as f64 + 1.0) - up * u * u / (power as f64 + 3.0))
                };
                anti(b) - anti(a)
            }
        }
    }

    /// `∫ u^p k(u) du` over the full support.
    pub fn moment(&self, power: u32) -> f64 {
        self.partial_moment(power, -1.0, 1.0)
    }
}

/// Epanechnikov kernel `0.75 (1 - u²)` on `[-1, 1]`.
pub fn kernel_value(u: f64) -> f64 {
    KernelSpec::default().value(u)
}

/// Boundary-corrected kernel with bandwidth `h` on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct BoundaryKernel {
    pub spec: KernelSpec,
    pub h: f64,
    pub lo: f64,
    pub hi: f64,
    rule: GaussLegendre,
}

impl BoundaryKernel {
    pub fn new(spec: KernelSpec, h: f64, lo: f64, hi: f64, quadrature_order: usize) -> Self {
        assert!(h > 0.0, "bandwidth must be positive");
        assert!(lo < hi, "empty domain");
        BoundaryKernel {
            spec,
            h,
            lo,
            hi,
            rule: GaussLegendre::new(quadrature_order),
        }
    }

    /// `∫_lo^hi k_h(s - v) ds` in closed form.
    #[inline]
    pub fn normalizer(&self, v: f64) -> f64 {
        self.spec.cdf((self.hi - v) / self.h) - self.spec.cdf((self.lo - v) / self.h)
    }

    #[inline]
    fn in_domain(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// `k_h(u, v)`; zero when either argument leaves the domain.
    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        if !(self.in_domain(u) && self.in_domain(v)) {
            return 0.0;
        }
        let k = self.spec.value((u - v) / self.h);
        if k == 0.0 {
            return 0.0;
        }
        k / (self.h * self.normalizer(v))
    }

    /// `((u - v)/h)^p k_h(u, v)`.
    #[inline]
    pub fn eval_weighted(&self, u: f64, v: f64, power: u32) -> f64 {
        let k = self.eval(u, v);
        if k == 0.0 || power == 0 {
            return k;
        }
        k * ((u - v) / self.h).powi(power as i32)
    }

    /// `∫_a^b ((x - s)/h)^p k_h(x, s) ds`.
    ///
    /// Exact on the pieces where the normalizer is one (data point at least
    /// `h` from both ends); Gauss–Legendre on the boundary strips, where the
    /// integrand is a polynomial over a cubic.
    pub fn moment_integral(&self, x: f64, a: f64, b: f64, power: u32) -> f64 {
        if !self.in_domain(x) {
            return 0.0;
        }
        let h = self.h;
        let a = a.max(self.lo).max(x - h);
        let b = b.min(self.hi).min(x + h);
        if a >= b {
            return 0.0;
        }
        let inner_lo = self.lo + h;
        let inner_hi = self.hi - h;
        let mut total = 0.0;
        let mut piece = |s0: f64, s1: f64| {
            if s1 <= s0 {
                return;
            }
            if s0 >= inner_lo && s1 <= inner_hi {
                // u = (x - s)/h runs from (x - s1)/h to (x - s0)/h; ds = -h du
                total += self.spec.partial_moment(power, (x - s1) / h, (x - s0) / h);
            } else {
                total += self.rule.integrate(s0, s1, |s| {
                    let u = (x - s) / h;
                    u.powi(power as i32) * self.spec.value(u) / (h * self.normalizer(s))
                });
            }
        };
        let mut cuts = [a, inner_lo.clamp(a, b), inner_hi.clamp(a, b), b];
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            piece(w[0], w[1]);
        }
        total
    }
}

/// `k_h(u, v)` on `[lo, hi]`; see [`BoundaryKernel::eval`].
pub fn boundary_kernel(u: f64, v: f64, h: f64, lo: f64, hi: f64) -> f64 {
    BoundaryKernel::new(KernelSpec::default(), h, lo, hi, 1).eval(u, v)
}

/// `∫_a^b ((x - s)/h)^power k_h(x, s) ds` on `[lo, hi]`.
pub fn kernel_moment_integral(
    x: f64,
    a: f64,
    b: f64,
    h: f64,
    lo: f64,
    hi: f64,
    power: u32,
    quadrature_order: usize,
) -> f64 {
    BoundaryKernel::new(KernelSpec::default(), h, lo, hi, quadrature_order).moment_integral(x, a, b, power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Adaptive Simpson, independent of the segment logic above.
    fn adaptive<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth > 50 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
        }
        if b <= a {
            return 0.0;
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 0)
    }

    #[test]
    fn epanechnikov_values() {
        assert_eq!(kernel_value(0.0), 0.75);
        assert_eq!(kernel_value(1.0), 0.0);
        assert_eq!(kernel_value(-1.0), 0.0);
        assert_eq!(kernel_value(0.5), 0.5625);
        assert_eq!(kernel_value(1.5), 0.0);
    }

    #[test]
    fn kernel_moments() {
        let k = KernelSpec::default();
        assert!((k.moment(0) - 1.0).abs() < 1e-15);
        assert!(k.moment(1).abs() < 1e-15);
        assert!((k.moment(2) - 0.2).abs() < 1e-15);
        let numeric = adaptive(|u| u * u * kernel_value(u), -1.0, 1.0, 1e-14);
        assert!((numeric - 0.2).abs() < 1e-10);
        assert!((adaptive(kernel_value, -1.0, 1.0, 1e-14) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_kernel_matches_plain_kernel() {
        let bk = BoundaryKernel::new(KernelSpec::default(), 0.2, 0.0, 1.0, 16);
        for &(u, v) in &[(0.5, 0.45), (0.3, 0.4), (0.7, 0.7)] {
            let plain = kernel_value((u - v) / 0.2) / 0.2;
            assert!((bk.eval(u, v) - plain).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_point_doubles_kernel() {
        let bk = BoundaryKernel::new(KernelSpec::default(), 0.2, 0.0, 1.0, 16);
        assert!((bk.normalizer(0.0) - 0.5).abs() < 1e-15);
        assert!((bk.normalizer(1.0) - 0.5).abs() < 1e-15);
        for &u in &[0.0, 0.05, 0.1, 0.19] {
            let plain = kernel_value(u / 0.2) / 0.2;
            assert!((bk.eval(u, 0.0) - 2.0 * plain).abs() < 1e-13);
        }
        assert_eq!(bk.eval(-0.01, 0.0), 0.0);
        assert_eq!(bk.eval(0.5, 1.01), 0.0);
    }

    #[test]
    fn normalizes_in_first_argument_for_boundary_adjacent_points() {
        let (lo, hi, h) = (-1.25, 1.25, 0.3);
        let bk = BoundaryKernel::new(KernelSpec::default(), h, lo, hi, 16);
        for i in 0..50 {
            // 25 points in each boundary strip, including the endpoints
            let v = if i < 25 {
                lo + h * i as f64 / 24.0
            } else {
                hi - h * (i - 25) as f64 / 24.0
            };
            let a = (v - h).max(lo);
            let b = (v + h).min(hi);
            // piecewise-polynomial in u: exact Simpson on [a, v] and [v, b]
            let mass = adaptive(|u| bk.eval(u, v), a, v, 1e-15) + adaptive(|u| bk.eval(u, v), v, b, 1e-15);
            assert!((mass - 1.0).abs() < 1e-10, "v={v} mass={mass}");
        }
    }

    #[test]
    fn symmetric_in_interior() {
        let bk = BoundaryKernel::new(KernelSpec::default(), 0.25, 0.0, 2.0, 16);
        for &(u, v) in &[(0.5, 0.6), (1.0, 1.2), (1.7, 1.5)] {
            assert!((bk.eval(u, v) - bk.eval(v, u)).abs() < 1e-14);
        }
    }

    #[test]
    fn interior_moment_integrals() {
        let bk = BoundaryKernel::new(KernelSpec::default(), 0.2, 0.0, 2.0, 16);
        assert!((bk.moment_integral(1.0, 0.0, 2.0, 0) - 1.0).abs() < 1e-14);
        assert!(bk.moment_integral(1.0, 0.0, 2.0, 1).abs() < 1e-14);
        assert!((bk.moment_integral(1.0, 0.0, 2.0, 2) - 0.2).abs() < 1e-14);
        let oracle = adaptive(|s| ((1.0 - s) / 0.2f64).powi(2) * bk.eval(1.0, s), 0.8, 1.2, 1e-15);
        assert!((oracle - 0.2).abs() < 1e-10);
    }

    #[test]
    fn full_domain_mass_is_one_for_interior_x() {
        let bk = BoundaryKernel::new(KernelSpec::default(), 0.15, 0.0, 1.0, 16);
        for &x in &[0.3, 0.42, 0.5, 0.7] {
            assert!((bk.moment_integral(x, 0.0, 1.0, 0) - 1.0).abs() < 1e-12);
        }
        // near an edge the normalization runs over x, not s
        assert!(bk.moment_integral(0.0, 0.0, 1.0, 0) < 1.0);
    }

    #[test]
    fn boundary_moments_match_oracle() {
        let bk = BoundaryKernel::new(KernelSpec::default(), 0.3, 0.0, 1.0, 16);
        for &x in &[0.0, 0.1, 0.29, 0.5, 0.85, 1.0] {
            for p in 0..3 {
                let got = bk.moment_integral(x, 0.0, 1.0, p);
                let want = adaptive(|s| ((x - s) / 0.3f64).powi(p as i32) * bk.eval(x, s), 0.0, 1.0, 1e-14);
                assert!((got - want).abs() < 1e-9, "x={x} p={p} got={got} want={want}");
            }
        }
    }

    proptest! {
        #[test]
        fn moment_integral_agrees_with_adaptive_oracle(
            x in 0.0f64..2.0,
            a in -0.2f64..2.2,
            len in 0.0f64..2.0,
            h in 0.05f64..0.9,
            power in 0u32..3,
        ) {
            let bk = BoundaryKernel::new(KernelSpec::default(), h, 0.0, 2.0, 16);
            let b = a + len;
            let got = bk.moment_integral(x, a, b, power);
            // split the oracle at the kernel kinks so Simpson sees smooth pieces
            let mut cuts = vec![a, b, x - h, x, x + h, h, 2.0 - h, 0.0, 2.0];
            cuts.retain(|c| *c >= a && *c <= b);
            cuts.sort_by(f64::total_cmp);
            let mut want = 0.0;
            for w in cuts.windows(2) {
                want += adaptive(|s| ((x - s) / h).powi(power as i32) * bk.eval(x, s), w[0], w[1], 1e-14);
            }
            prop_assert!((got - want).abs() < 1e-9, "got {} want {}", got, want);
        }
    }
}
