//! Kernel polynomial algebra.
//!
//! For a step set S and weight z the kernel is the bivariate Laurent
//! polynomial xyz[Σ_{(i,j)∈S} x^i y^j − 1/z]. Viewed as a quadratic in
//! y it is a(x)y² + b(x)y + c(x) with
//!
//! ```text
//! a(x) = zx Σ_{(i,+1)} x^i,  b(x) = -x + zx Σ_{(i,0)} x^i,  c(x) = zx Σ_{(i,-1)} x^i
//! ```
//!
//! and symmetrically in x with ã, b̃, c̃. The discriminants d = b² − 4ac
//! and d̃ carry the branch points x₁..x₄ and y₁..y₄ ordered by
//! |x₁| < x₂ < 1 < x₃ < |x₄| (x₄ = ∞ when deg d = 3). The two algebraic
//! branches of each variable are ordered by modulus off the cuts; on a
//! cut, where the discriminant is negative, the square root is the
//! limit from the upper half-plane, +i√(−d).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::stepset::StepSet;

const TRIM_TOL: f64 = 1e-13;

/// Which complex plane an object lives in. `Side::X` selects the
/// x-plane objects: the x-branches X₀, X₁ (roots in x at a given y),
/// the curve X([y₁,y₂]) and the region 𝒢X. `Side::Y` mirrors them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

/// Which side of a branch cut a boundary value is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    Upper,
    Lower,
}

/// Kernel coefficient data at a fixed weight z.
#[derive(Debug, Clone)]
pub struct KernelData {
    pub steps: StepSet,
    pub z: f64,
    /// Quadratic-in-y coefficients, polynomials in x.
    pub a: Poly,
    pub b: Poly,
    pub c: Poly,
    /// Quadratic-in-x coefficients, polynomials in y.
    pub at: Poly,
    pub bt: Poly,
    pub ct: Poly,
    /// Discriminants: d in x, d̃ in y.
    pub d: Poly,
    pub dt: Poly,
}

fn discriminant(a: &Poly, b: &Poly, c: &Poly) -> Poly {
    let mut d = vec![0.0; 5];
    for i in 0..3 {
        for j in 0..3 {
            d[i + j] += b.coeffs[i] * b.coeffs[j] - 4.0 * a.coeffs[i] * c.coeffs[j];
        }
    }
    Poly::new(d)
}

/// Assemble the kernel coefficients. Requires 0 < z < 1/k and a model
/// whose kernel is genuinely quadratic in both variables.
pub fn build_kernel(s: StepSet, z: f64) -> Result<KernelData> {
    let k = s.k() as f64;
    if !(z > 0.0 && z < 1.0 / k) {
        return Err(Error::Domain(format!(
            "z = {z} outside (0, 1/k) = (0, {})",
            1.0 / k
        )));
    }
    if s.is_degenerate() {
        return Err(Error::Degenerate(
            "kernel not quadratic in both variables (half-plane-reducible step set)".into(),
        ));
    }
    let mut a = vec![0.0; 3];
    let mut b = vec![0.0; 3];
    let mut c = vec![0.0; 3];
    let mut at = vec![0.0; 3];
    let mut bt = vec![0.0; 3];
    let mut ct = vec![0.0; 3];
    for (i, j) in s.steps() {
        match j {
            1 => a[(i + 1) as usize] += z,
            0 => b[(i + 1) as usize] += z,
            _ => c[(i + 1) as usize] += z,
        }
        match i {
            1 => at[(j + 1) as usize] += z,
            0 => bt[(j + 1) as usize] += z,
            _ => ct[(j + 1) as usize] += z,
        }
    }
    // expanding xyz[Σ x^i y^j − 1/z] puts −x (resp. −y) in the middle
    // coefficient, not the −1 sometimes seen in print
    b[1] -= 1.0;
    bt[1] -= 1.0;
    let (a, b, c) = (Poly::new(a), Poly::new(b), Poly::new(c));
    let (at, bt, ct) = (Poly::new(at), Poly::new(bt), Poly::new(ct));
    let d = discriminant(&a, &b, &c);
    let dt = discriminant(&at, &bt, &ct);
    Ok(KernelData {
        steps: s,
        z,
        a,
        b,
        c,
        at,
        bt,
        ct,
        d,
        dt,
    })
}

impl KernelData {
    /// The kernel value xyz[Σ x^i y^j − 1/z] from the defining sum.
    pub fn value(&self, x: Complex64, y: Complex64) -> Result<Complex64> {
        if x.norm() == 0.0 || y.norm() == 0.0 {
            return Err(Error::Domain(
                "kernel value needs x != 0 and y != 0 (Laurent terms)".into(),
            ));
        }
        let mut s = Complex64::new(0.0, 0.0);
        for (i, j) in self.steps.steps() {
            s += x.powi(i as i32) * y.powi(j as i32);
        }
        Ok(x * y * self.z * (s - 1.0 / self.z))
    }

    /// Quadratic coefficients for the roots on a side, evaluated at t
    /// in the opposite plane: `Side::X` gives (ã, b̃, c̃)(t) for the
    /// x-roots at y = t.
    pub(crate) fn quad_at(&self, side: Side, t: Complex64) -> (Complex64, Complex64, Complex64) {
        match side {
            Side::X => (
                self.at.eval_complex(t),
                self.bt.eval_complex(t),
                self.ct.eval_complex(t),
            ),
            Side::Y => (
                self.a.eval_complex(t),
                self.b.eval_complex(t),
                self.c.eval_complex(t),
            ),
        }
    }

    pub(crate) fn disc(&self, side: Side) -> &Poly {
        match side {
            Side::X => &self.dt,
            Side::Y => &self.d,
        }
    }

    fn quad_polys(&self, side: Side) -> (&Poly, &Poly, &Poly) {
        match side {
            Side::X => (&self.at, &self.bt, &self.ct),
            Side::Y => (&self.a, &self.b, &self.c),
        }
    }
}

/// Branch points of both discriminants, modulus-ordered. A missing
/// fourth root (degree-3 discriminant) is reported as +∞.
#[derive(Debug, Clone, Copy)]
pub struct BranchPoints {
    pub x: [f64; 4],
    pub y: [f64; 4],
    pub deg_d: usize,
    pub deg_dt: usize,
}

impl BranchPoints {
    pub fn on_side(&self, side: Side) -> [f64; 4] {
        match side {
            // the curve X([y1,y2]) is parameterized over the y-cut
            Side::X => self.y,
            Side::Y => self.x,
        }
    }

    /// Branch points of the plane where `side`'s curve lives (x-plane
    /// points for Side::X).
    pub fn in_plane(&self, side: Side) -> [f64; 4] {
        match side {
            Side::X => self.x,
            Side::Y => self.y,
        }
    }
}

fn order_roots(label: &str, mut rr: Vec<Complex64>, deg: usize) -> Result<[f64; 4]> {
    for r in &rr {
        if r.im.abs() > 1e-7 * (1.0 + r.re.abs()) {
            return Err(Error::BranchOrdering(format!(
                "{label}: complex root {r} of the discriminant"
            )));
        }
    }
    rr.sort_by(|p, q| p.norm().partial_cmp(&q.norm()).unwrap());
    let mut v = [0.0f64; 4];
    for (i, r) in rr.iter().enumerate() {
        v[i] = r.re;
    }
    if deg == 3 {
        v[3] = f64::INFINITY;
    }
    let ok = v[0].abs() < v[1] && v[1] < 1.0 && 1.0 < v[2] && v[2] < v[3].abs() && v[1] > 0.0;
    if !ok {
        return Err(Error::BranchOrdering(format!(
            "{label}: |{}| < {} < 1 < {} < |{}| fails",
            v[0], v[1], v[2], v[3]
        )));
    }
    Ok(v)
}

/// Locate and order the branch points. Rejects singular models, whose
/// x₁ = x₂ = 0 degeneracy breaks the ordering (use the iterated-kernel
/// series pipeline for those).
pub fn branch_points(k: &KernelData) -> Result<BranchPoints> {
    if k.steps.is_singular() {
        return Err(Error::Singular(
            "branch points degenerate; use singular pipeline".into(),
        ));
    }
    let deg_d = k.d.degree(TRIM_TOL);
    let deg_dt = k.dt.degree(TRIM_TOL);
    if deg_d < 3 || deg_dt < 3 {
        return Err(Error::BranchOrdering(format!(
            "discriminant degree {deg_d}/{deg_dt}, need 3 or 4"
        )));
    }
    let x = order_roots("d", k.d.roots(TRIM_TOL), deg_d)?;
    let y = order_roots("d~", k.dt.roots(TRIM_TOL), deg_dt)?;
    Ok(BranchPoints {
        x,
        y,
        deg_d,
        deg_dt,
    })
}

/// One branch value with the data the evaluators need alongside it.
#[derive(Debug, Clone, Copy)]
pub struct BranchEval {
    /// Small-modulus root (X₀ or Y₀); on a cut, the upper-limit value.
    pub root0: Complex64,
    /// The other root; `None` encodes a root at infinity.
    pub root1: Option<Complex64>,
    /// d/dt of root0 (None when root0 itself is infinite).
    pub root0_deriv: Option<Complex64>,
    /// root0 − root1 with the cut convention (i√(−d)/a on the cut).
    pub diff: Complex64,
}

/// Evaluate the two branches at t. Off the cuts the roots are ordered
/// by modulus; on a cut (real t with negative discriminant) the square
/// root is taken as the `cut` limit, default upper.
pub fn branch_eval(
    k: &KernelData,
    side: Side,
    t: Complex64,
    cut: Option<CutSide>,
) -> Result<BranchEval> {
    let (qa, qb, qc) = k.quad_at(side, t);
    let (pa, pb, pc) = k.quad_polys(side);
    let dap = pa.derivative().eval_complex(t);
    let dbp = pb.derivative().eval_complex(t);
    let dcp = pc.derivative().eval_complex(t);
    let disc = qb * qb - 4.0 * qa * qc;
    let ddisc = k.disc(side).derivative().eval_complex(t);
    let scale = qa.norm().max(qb.norm()).max(qc.norm());
    if scale == 0.0 {
        return Err(Error::Domain("kernel quadratic vanished identically".into()));
    }

    if qa.norm() < 1e-16 * scale {
        // leading coefficient essentially gone
        if qb.norm() * qb.norm() >= 1e8 * qa.norm() * qc.norm() {
            // genuinely linear: one finite root, the other at infinity
            if qb.norm() < 1e-14 * scale {
                return Ok(BranchEval {
                    root0: Complex64::new(f64::INFINITY, 0.0),
                    root1: None,
                    root0_deriv: None,
                    diff: Complex64::new(f64::INFINITY, 0.0),
                });
            }
            let r = -qc / qb;
            let dr = -(dcp * qb - qc * dbp) / (qb * qb);
            return Ok(BranchEval {
                root0: r,
                root1: None,
                root0_deriv: Some(dr),
                diff: Complex64::new(f64::INFINITY, 0.0),
            });
        }
        if qa.norm() < 1e-300 {
            return Err(Error::Domain("kernel quadratic degenerated".into()));
        }
        // otherwise b² ~ 4ac: both roots huge but finite; the stable
        // quadratic path below handles the tiny leading coefficient
    }

    let on_cut = t.im == 0.0 && disc.im.abs() < 1e-14 * scale * scale && disc.re < 0.0;
    // evaluate both roots through the large-magnitude denominator so a
    // tiny leading coefficient never causes cancellation
    let stable_pair = |s: Complex64| -> (Complex64, Complex64) {
        let dplus = -qb + s;
        let dminus = -qb - s;
        if dplus.norm() >= dminus.norm() {
            (dplus / (2.0 * qa), 2.0 * qc / dplus)
        } else {
            (2.0 * qc / dminus, dminus / (2.0 * qa))
        }
    };
    let sqrt = if on_cut {
        let s = Complex64::new(0.0, (-disc.re).sqrt());
        match cut.unwrap_or(CutSide::Upper) {
            CutSide::Upper => s,
            CutSide::Lower => -s,
        }
    } else {
        // principal square root, then flip so root0 has smaller modulus
        let s = disc.sqrt();
        let (r0, r1) = stable_pair(s);
        if r0.norm() <= r1.norm() {
            s
        } else {
            -s
        }
    };
    let (root0, root1) = stable_pair(sqrt);
    // d/dt of the chosen branch, differentiated through whichever of
    // the two algebraically equal forms is cancellation-free
    let droot0 = if sqrt.norm() < 1e-13 * scale {
        None // branch point: derivative blows up
    } else {
        let dplus = -qb + sqrt;
        let dminus = -qb - sqrt;
        let dsqrt = ddisc / (2.0 * sqrt);
        if dplus.norm() >= dminus.norm() {
            Some((-dbp + dsqrt) / (2.0 * qa) - root0 * dap / qa)
        } else {
            // root0 = 2c/(−b − √d)
            let ddminus = -dbp - dsqrt;
            Some(2.0 * (dcp * dminus - qc * ddminus) / (dminus * dminus))
        }
    };
    Ok(BranchEval {
        root0,
        root1: Some(root1),
        root0_deriv: droot0,
        diff: sqrt / qa,
    })
}

/// The small-modulus branch alone (X₀ for Side::X, Y₀ for Side::Y).
pub fn branch_roots(
    k: &KernelData,
    side: Side,
    t: Complex64,
    cut: Option<CutSide>,
) -> Result<(Complex64, Complex64)> {
    let be = branch_eval(k, side, t, cut)?;
    let inf = Complex64::new(f64::INFINITY, 0.0);
    Ok((be.root0, be.root1.unwrap_or(inf)))
}

// Point of the upper arc of the curve at cut parameter s, as the pair
// (numerator, denominator) so that infinities stay representable.
fn curve_point_nd(k: &KernelData, side: Side, s: f64) -> (Complex64, Complex64) {
    let (qa, qb, _) = k.quad_at(side, Complex64::new(s, 0.0));
    let disc = k.disc(side).eval(s);
    let num = -qb + Complex64::new(0.0, (-disc).max(0.0).sqrt());
    (num, 2.0 * qa)
}

/// Sample the closed critical curve (X([y₁,y₂]) for Side::X) with n
/// upper-arc points; the full returned list appends the conjugate arc
/// and the real endpoints when they are finite, so it is closed under
/// conjugation. Points at infinity (possible at the endpoints of some
/// models) are skipped.
pub fn sample_critical_curve(
    k: &KernelData,
    bp: &BranchPoints,
    side: Side,
    n: usize,
) -> Result<Vec<Complex64>> {
    if k.steps.is_singular() {
        return Err(Error::Singular("critical curve degenerate".into()));
    }
    if n < 8 {
        return Err(Error::Domain("need at least 8 curve samples".into()));
    }
    let cut = bp.on_side(side);
    let (s1, s2) = (cut[0], cut[1]);
    let half = n / 2;
    let mut upper = Vec::with_capacity(half + 2);
    for i in 0..=half + 1 {
        let theta = std::f64::consts::PI * i as f64 / (half + 1) as f64;
        let s = s1 + (s2 - s1) * 0.5 * (1.0 - theta.cos());
        let (num, den) = curve_point_nd(k, side, s);
        if den.norm() > 1e-13 * (1.0 + num.norm()) {
            upper.push(num / den);
        }
    }
    let mut pts = upper.clone();
    for p in upper.iter().rev() {
        if p.im.abs() > 0.0 {
            pts.push(p.conj());
        }
    }
    Ok(pts)
}

/// A critical curve prepared for membership tests: the polyline is
/// carried through the Möbius map m(t) = 1/(t − p) with p on the far
/// cut [x₃, x₄], which keeps it bounded even when the curve passes
/// through infinity.
#[derive(Debug, Clone)]
pub struct CurveRegion {
    side: Side,
    pole: f64,
    mapped: Vec<Complex64>,
    raw_finite: Vec<Complex64>,
    base_winding: i32,
}

fn winding_number(poly: &[Complex64], q: Complex64) -> i32 {
    let mut angle = 0.0;
    for w in poly.windows(2) {
        let a = w[0] - q;
        let b = w[1] - q;
        angle += (a.re * b.im - a.im * b.re).atan2(a.re * b.re + a.im * b.im);
    }
    let a = poly[poly.len() - 1] - q;
    let b = poly[0] - q;
    angle += (a.re * b.im - a.im * b.re).atan2(a.re * b.re + a.im * b.im);
    (angle / (2.0 * std::f64::consts::PI)).round() as i32
}

fn min_dist_to_polyline(poly: &[Complex64], q: Complex64) -> f64 {
    let mut best = f64::INFINITY;
    let seg = |a: Complex64, b: Complex64| -> f64 {
        let ab = b - a;
        let len2 = ab.norm_sqr();
        if len2 == 0.0 {
            return (q - a).norm();
        }
        let t = ((q - a).re * ab.re + (q - a).im * ab.im) / len2;
        let t = t.clamp(0.0, 1.0);
        (q - (a + ab * t)).norm()
    };
    for w in poly.windows(2) {
        best = best.min(seg(w[0], w[1]));
    }
    best = best.min(seg(poly[poly.len() - 1], poly[0]));
    best
}

impl CurveRegion {
    /// Build with adaptive sampling: the cut-parameter grid doubles
    /// until successive mapped polylines differ by less than 1e−8 of
    /// the polyline scale (Hausdorff via the new midpoints).
    pub fn build(k: &KernelData, bp: &BranchPoints, side: Side) -> Result<CurveRegion> {
        if k.steps.is_singular() {
            return Err(Error::Singular("critical curve degenerate".into()));
        }
        let plane = bp.in_plane(side);
        let pole = if plane[3].is_finite() && plane[3] > plane[2] {
            plane[2] + 0.5 * (plane[3] - plane[2])
        } else {
            plane[2] + 1.0
        };
        let cut = bp.on_side(side);
        let (s1, s2) = (cut[0], cut[1]);
        let p = Complex64::new(pole, 0.0);
        let map_at = |s: f64| -> Complex64 {
            let (num, den) = curve_point_nd(k, side, s);
            if num.norm() < 1e-12 && den.norm() < 1e-12 {
                // endpoint where the curve passes through infinity
                return Complex64::new(0.0, 0.0);
            }
            den / (num - p * den)
        };
        let grid = |m: usize| -> Vec<f64> {
            (0..=m)
                .map(|i| {
                    let th = std::f64::consts::PI * i as f64 / m as f64;
                    s1 + (s2 - s1) * 0.5 * (1.0 - th.cos())
                })
                .collect()
        };
        let mut m = 64usize;
        let mut upper: Vec<Complex64> = grid(m).iter().map(|s| map_at(*s)).collect();
        loop {
            let fine_grid = grid(2 * m);
            let fine: Vec<Complex64> = fine_grid.iter().map(|s| map_at(*s)).collect();
            let scale = fine.iter().fold(0.0f64, |a, p| a.max(p.norm())).max(1e-30);
            let mut hausdorff = 0.0f64;
            for i in 0..m {
                let midpoint = fine[2 * i + 1];
                let seg_mid = (upper[i] + upper[i + 1]) * 0.5;
                hausdorff = hausdorff.max((midpoint - seg_mid).norm());
            }
            upper = fine;
            m *= 2;
            if hausdorff < 1e-8 * scale || m >= 1 << 20 {
                if hausdorff >= 1e-8 * scale {
                    return Err(Error::Accuracy {
                        message: "critical curve refinement stalled".into(),
                        achieved: hausdorff / scale,
                    });
                }
                break;
            }
        }
        let mut mapped = upper.clone();
        for q in upper.iter().rev().skip(1) {
            if q.im != 0.0 {
                mapped.push(q.conj());
            }
        }
        // raw polyline (finite points only) for distance checks
        let mut raw_finite = Vec::with_capacity(mapped.len());
        for q in &mapped {
            let t = p + 1.0 / q; // inverse Möbius
            if t.norm() < 1e12 {
                raw_finite.push(t);
            }
        }
        let base_ref = match side {
            Side::X => plane[0],
            Side::Y => plane[0],
        };
        let base = Complex64::new(base_ref, 0.0);
        let base_m = 1.0 / (base - p);
        let base_winding = winding_number(&mapped, base_m);
        if base_winding == 0 {
            return Err(Error::Accuracy {
                message: "region base point not separated by sampled curve".into(),
                achieved: 0.0,
            });
        }
        Ok(CurveRegion {
            side,
            pole,
            mapped,
            raw_finite,
            base_winding,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Membership in the component of x₁ (resp. y₁). Errors when t is
    /// within 1e−9 (relative-floored) of the sampled curve.
    pub fn contains(&self, t: Complex64) -> Result<bool> {
        let dist = min_dist_to_polyline(&self.raw_finite, t);
        if dist < 1e-9 * (1.0 + t.norm()) {
            return Err(Error::BoundaryAmbiguous(format!(
                "distance {dist:.3e} from critical curve"
            )));
        }
        let p = Complex64::new(self.pole, 0.0);
        let q = 1.0 / (t - p);
        Ok(winding_number(&self.mapped, q) == self.base_winding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepset::parse_step_set;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn simple_walk_coefficients() {
        // ({N,E,S,W}, 1/8): a = x/8, b = (x² − 8x + 1)/8, c = x/8
        let k = build_kernel(parse_step_set("N,E,S,W").unwrap(), 0.125).unwrap();
        assert_eq!(k.a.coeffs, vec![0.0, 0.125, 0.0]);
        assert_eq!(k.b.coeffs, vec![0.125, -1.0, 0.125]);
        assert_eq!(k.c.coeffs, vec![0.0, 0.125, 0.0]);
    }

    #[test]
    fn kreweras_coefficients() {
        // ({W,NE,S}, 0.2): a = zx², b = z − x, c = zx
        let k = build_kernel(parse_step_set("W,NE,S").unwrap(), 0.2).unwrap();
        assert_eq!(k.a.coeffs, vec![0.0, 0.0, 0.2]);
        assert_eq!(k.b.coeffs, vec![0.2, -1.0, 0.0]);
        assert_eq!(k.c.coeffs, vec![0.0, 0.2, 0.0]);
    }

    #[test]
    fn z_domain_enforced() {
        assert!(build_kernel(parse_step_set("N,E,S,W").unwrap(), 0.5).is_err());
        assert!(build_kernel(parse_step_set("N,E,S,W").unwrap(), 0.0).is_err());
    }

    #[test]
    fn kernel_value_examples() {
        let k = build_kernel(parse_step_set("N,E,S,W").unwrap(), 0.125).unwrap();
        // vanishes at (1, 3−2√2)
        let y = 3.0 - 2.0 * 2.0f64.sqrt();
        let v = k.value(cx(1.0, 0.0), cx(y, 0.0)).unwrap();
        assert!(v.norm() < 1e-14, "{v}");
        // value −1/2 at (1,1)
        let v = k.value(cx(1.0, 0.0), cx(1.0, 0.0)).unwrap();
        assert!((v - cx(-0.5, 0.0)).norm() < 1e-15);
        assert!(k.value(cx(0.0, 0.0), cx(1.0, 0.0)).is_err());
    }

    #[test]
    fn kernel_value_z_to_zero_limit() {
        // at tiny z only the −xy term survives
        let k = build_kernel(parse_step_set("N,E,S,W").unwrap(), 1e-12).unwrap();
        let (x, y) = (cx(0.7, 0.2), cx(-0.4, 0.9));
        let v = k.value(x, y).unwrap();
        assert!((v + x * y).norm() < 1e-10);
    }

    #[test]
    fn bivariate_identity_holds_at_random_points() {
        // a(x)y² + b(x)y + c(x) equals the defining sum
        let sets = ["N,E,S,W", "E,SW,W,NE", "NW,N,SE", "N,E,SE,S,W,NW"];
        for s in sets {
            let set = parse_step_set(s).unwrap();
            let k = build_kernel(set, 0.8 / set.k() as f64).unwrap();
            for i in 0..20 {
                let x = cx(0.3 + 0.07 * i as f64, 0.2 - 0.03 * i as f64);
                let y = cx(0.9 - 0.04 * i as f64, -0.1 + 0.05 * i as f64);
                let lhs = k.a.eval_complex(x) * y * y + k.b.eval_complex(x) * y + k.c.eval_complex(x);
                let rhs = k.value(x, y).unwrap();
                assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0), "{s} {i}");
                let lhs2 =
                    k.at.eval_complex(y) * x * x + k.bt.eval_complex(y) * x + k.ct.eval_complex(y);
                assert!((lhs2 - rhs).norm() < 1e-12 * rhs.norm().max(1.0), "{s} {i}");
            }
        }
    }

    #[test]
    fn simple_walk_branch_points() {
        let k = build_kernel(parse_step_set("N,E,S,W").unwrap(), 0.125).unwrap();
        let bp = branch_points(&k).unwrap();
        let expected = [
            5.0 - 2.0 * 6.0f64.sqrt(),
            3.0 - 2.0 * 2.0f64.sqrt(),
            3.0 + 2.0 * 2.0f64.sqrt(),
            5.0 + 2.0 * 6.0f64.sqrt(),
        ];
        for (got, want) in bp.x.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12 * want.max(1.0), "{got} vs {want}");
        }
        // diagonal symmetry: y-points equal x-points
        for (gx, gy) in bp.x.iter().zip(bp.y) {
            assert!((gx - gy).abs() < 1e-12);
        }
    }

    #[test]
    fn kreweras_has_infinite_fourth_branch_point() {
        let k = build_kernel(parse_step_set("W,NE,S").unwrap(), 0.2).unwrap();
        let bp = branch_points(&k).unwrap();
        assert_eq!(bp.deg_d, 3);
        assert!(bp.x[3].is_infinite());
        assert!(bp.x[0].abs() < bp.x[1] && bp.x[1] < 1.0 && 1.0 < bp.x[2]);
    }

    #[test]
    fn singular_model_rejected() {
        let k = build_kernel(parse_step_set("NW,NE,SE").unwrap(), 0.2).unwrap();
        let err = branch_points(&k).unwrap_err();
        assert!(err.to_string().contains("singular pipeline"), "{err}");
    }

    #[test]
    fn y_roots_at_one() {
        let k = build_kernel(parse_step_set("N,E,S,W").unwrap(), 0.125).unwrap();
        let (y0, y1) = branch_roots(&k, Side::Y, cx(1.0, 0.0), None).unwrap();
        assert!((y0.re - (3.0 - 2.0 * 2.0f64.sqrt())).abs() < 1e-12);
        assert!((y1.re - (3.0 + 2.0 * 2.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn vieta_and_vanishing() {
        let set = parse_step_set("E,SW,W,NE").unwrap();
        let k = build_kernel(set, 0.1).unwrap();
        for i in 0..50 {
            let t = cx(0.4 + 0.012 * i as f64, 0.3 - 0.011 * i as f64);
            let (y0, y1) = branch_roots(&k, Side::Y, t, None).unwrap();
            assert!(y0.norm() <= y1.norm() + 1e-12);
            let a = k.a.eval_complex(t);
            let b = k.b.eval_complex(t);
            let c = k.c.eval_complex(t);
            assert!((a * y0 * y1 - c).norm() < 1e-12 * c.norm().max(1.0));
            assert!((a * (y0 + y1) + b).norm() < 1e-12 * b.norm().max(1.0));
            let kv = k.value(t, y0).unwrap();
            assert!(kv.norm() < 1e-10, "kernel on branch: {kv}");
        }
    }

    #[test]
    fn y0_inside_unit_disc_on_unit_circle() {
        for s in ["N,E,S,W", "E,SW,W,NE", "W,NE,S"] {
            let set = parse_step_set(s).unwrap();
            let k = build_kernel(set, 0.5 / set.k() as f64).unwrap();
            for i in 0..64 {
                let th = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
                let (y0, _) = branch_roots(&k, Side::Y, cx(th.cos(), th.sin()), None).unwrap();
                assert!(y0.norm() < 1.0, "{s}: |Y0| = {} at {th}", y0.norm());
            }
        }
    }

    #[test]
    fn simple_curve_is_unit_circle() {
        let k = build_kernel(parse_step_set("N,E,S,W").unwrap(), 0.125).unwrap();
        let bp = branch_points(&k).unwrap();
        let pts = sample_critical_curve(&k, &bp, Side::X, 64).unwrap();
        for p in &pts {
            assert!((p.norm() - 1.0).abs() < 1e-10, "{p}");
        }
        // closed under conjugation
        for p in &pts {
            let has_conj = pts.iter().any(|q| (q - p.conj()).norm() < 1e-12);
            assert!(has_conj);
        }
    }

    #[test]
    fn gessel_curve_exits_unit_disc() {
        let k = build_kernel(parse_step_set("E,SW,W,NE").unwrap(), 0.1).unwrap();
        let bp = branch_points(&k).unwrap();
        let pts = sample_critical_curve(&k, &bp, Side::X, 64).unwrap();
        assert!(pts.iter().any(|p| p.norm() > 1.0));
    }

    #[test]
    fn region_membership() {
        let k = build_kernel(parse_step_set("N,E,S,W").unwrap(), 0.125).unwrap();
        let bp = branch_points(&k).unwrap();
        let gx = CurveRegion::build(&k, &bp, Side::X).unwrap();
        assert!(gx.contains(cx(0.0, 0.0)).unwrap());
        assert!(gx.contains(cx(bp.x[0], 0.0)).unwrap());
        assert!(!gx.contains(cx(bp.x[2], 0.0)).unwrap());
        assert!(!gx.contains(cx(1.7, 0.4)).unwrap());
        // near-curve point is ambiguous
        assert!(gx.contains(cx(1.0, 1e-12)).is_err());
    }

    #[test]
    fn region_membership_curve_through_infinity() {
        // {N,E,SW}: y1 = 0 and the x-curve passes through infinity
        let k = build_kernel(parse_step_set("N,E,SW").unwrap(), 0.2).unwrap();
        let bp = branch_points(&k).unwrap();
        let gx = CurveRegion::build(&k, &bp, Side::X).unwrap();
        assert!(gx.contains(cx(bp.x[0] + 0.3 * (bp.x[1] - bp.x[0]), 0.0)).unwrap());
        assert!(!gx.contains(cx(bp.x[2] + 0.1, 0.0)).unwrap());
    }

    #[test]
    fn branch_point_reflection_symmetry() {
        // reflecting the step set swaps x- and y-side branch points
        let set = parse_step_set("N,E,SW").unwrap();
        let k = build_kernel(set, 0.2).unwrap();
        let kr = build_kernel(set.reflect(), 0.2).unwrap();
        let bp = branch_points(&k).unwrap();
        let bpr = branch_points(&kr).unwrap();
        for i in 0..4 {
            let (a, b) = (bp.x[i], bpr.y[i]);
            if a.is_finite() || b.is_finite() {
                assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn reciprocal_branches_between_regions() {
        // X0(Y0(x)) = x for x in GX off the cut
        for s in ["N,E,S,W", "E,SW,W,NE", "N,SE,W"] {
            let set = parse_step_set(s).unwrap();
            let k = build_kernel(set, 0.5 / set.k() as f64).unwrap();
            let bp = branch_points(&k).unwrap();
            for i in 0..20 {
                let t = cx(
                    bp.x[0] + (0.2 + 0.03 * i as f64) * (bp.x[1] - bp.x[0]),
                    0.02 + 0.005 * i as f64,
                );
                let (y0, _) = branch_roots(&k, Side::Y, t, None).unwrap();
                let (x0, _) = branch_roots(&k, Side::X, y0, None).unwrap();
                assert!((x0 - t).norm() < 1e-9 * (1.0 + t.norm()), "{s}: {x0} vs {t}");
            }
        }
    }
}
