//! Small real-coefficient polynomials: evaluation, derivatives, and
//! root finding for the degree ≤ 4 discriminants via companion-matrix
//! eigenvalues followed by one Newton polish in double-double
//! arithmetic.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense real polynomial, coefficients in ascending power order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Poly {
        Poly { coeffs }
    }

    /// Degree after trimming trailing coefficients below `tol` relative
    /// to the largest coefficient.
    pub fn degree(&self, tol: f64) -> usize {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let cut = scale * tol;
        let mut deg = 0;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.abs() > cut {
                deg = k;
            }
        }
        deg
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for c in self.coeffs.iter().rev() {
            v = v * x + c;
        }
        v
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            v = v * x + c;
        }
        v
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// All complex roots of the trimmed polynomial: companion-matrix
    /// eigenvalues, then one double-double Newton step per root.
    pub fn roots(&self, trim_tol: f64) -> Vec<Complex64> {
        let deg = self.degree(trim_tol);
        if deg == 0 {
            return Vec::new();
        }
        let c = &self.coeffs[..=deg];
        let lead = c[deg];
        let n = deg;
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -c[i] / lead;
        }
        let mut roots: Vec<Complex64> = m
            .complex_eigenvalues()
            .iter()
            .map(|e| Complex64::new(e.re, e.im))
            .collect();
        for r in roots.iter_mut() {
            *r = self.polish_root(*r, deg);
        }
        roots
    }

    // One Newton step with the residual accumulated in double-double,
    // which recovers full f64 accuracy for nearly multiple roots.
    fn polish_root(&self, r: Complex64, deg: usize) -> Complex64 {
        let dp = self.derivative();
        let mut r = r;
        for _ in 0..3 {
            let (pre, pim) = dd_eval_complex(&self.coeffs[..=deg], r);
            let p = Complex64::new(pre, pim);
            let d = dp.eval_complex(r);
            if d.norm() == 0.0 {
                break;
            }
            let step = p / d;
            r -= step;
            if step.norm() <= 1e-17 * r.norm().max(1.0) {
                break;
            }
        }
        r
    }
}

// ---- double-double helpers (error-free transforms) ----

#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, b: Dd) -> Dd {
        let s = self.hi + b.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (b.hi - bb) + self.lo + b.lo;
        let hi = s + err;
        Dd { hi, lo: err - (hi - s) }
    }

    fn mul(self, b: Dd) -> Dd {
        let p = self.hi * b.hi;
        let err = f64::mul_add(self.hi, b.hi, -p) + self.hi * b.lo + self.lo * b.hi;
        let hi = p + err;
        Dd { hi, lo: err - (hi - p) }
    }

    fn sub(self, b: Dd) -> Dd {
        self.add(Dd { hi: -b.hi, lo: -b.lo })
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

// Horner in double-double for complex argument (re/im tracked as Dd).
fn dd_eval_complex(coeffs: &[f64], x: Complex64) -> (f64, f64) {
    let xr = Dd::from(x.re);
    let xi = Dd::from(x.im);
    let mut vr = Dd::from(0.0);
    let mut vi = Dd::from(0.0);
    for c in coeffs.iter().rev() {
        let nr = vr.mul(xr).sub(vi.mul(xi)).add(Dd::from(*c));
        let ni = vr.mul(xi).add(vi.mul(xr));
        vr = nr;
        vi = ni;
    }
    (vr.value(), vi.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_factored_quartic() {
        // (x²-10x+1)(x²-6x+1)/64, the z = 1/8 simple-walk discriminant
        let p = Poly::new(vec![1.0 / 64.0, -0.25, 62.0 / 64.0, -0.25, 1.0 / 64.0]);
        let mut roots: Vec<f64> = p.roots(1e-13).iter().map(|r| r.re).collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [
            5.0 - 2.0 * 6.0f64.sqrt(),
            3.0 - 2.0 * 2.0f64.sqrt(),
            3.0 + 2.0 * 2.0f64.sqrt(),
            5.0 + 2.0 * 6.0f64.sqrt(),
        ];
        for (r, e) in roots.iter().zip(expected) {
            assert!((r - e).abs() < 1e-13 * e.abs().max(1.0), "{r} vs {e}");
        }
    }

    #[test]
    fn cubic_degree_trim() {
        let p = Poly::new(vec![2.0, -3.0, 0.0, 1.0, 0.0]);
        assert_eq!(p.degree(1e-13), 3);
        assert_eq!(p.roots(1e-13).len(), 3);
    }

    #[test]
    fn close_roots_polish() {
        // a nearly-double pair among separated roots, as happens for z
        // near the ends of (0, 1/k)
        let truth = [1.0, 1.0 + 1e-5, 3.0, 4.0];
        let mut coeffs = vec![1.0];
        for r in truth {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (i, c) in coeffs.iter().enumerate() {
                next[i] -= r * c;
                next[i + 1] += c;
            }
            coeffs = next;
        }
        let p = Poly::new(coeffs);
        for r in p.roots(1e-13) {
            let best = truth
                .iter()
                .map(|t| (r - Complex64::new(*t, 0.0)).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "root {r} off by {best:.2e}");
        }
    }
}
