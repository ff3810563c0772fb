//! Exact enumeration oracle.
//!
//! Counts q(i,j;n) of quadrant-confined paths by forward dynamic
//! programming in arbitrary-precision integers, and forms rigorous
//! partial sums of the generating function with the geometric tail
//! bound that follows from q(i,j;n) ≤ kⁿ.

use std::io::Write;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::stepset::StepSet;

/// Which slice of the triple sum to accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMode {
    Full,
    XAxis,
    YAxis,
    Origin,
}

/// Exact table of q(i,j;n) for 0 ≤ i,j ≤ n ≤ n_max.
#[derive(Debug, Clone)]
pub struct CountTable {
    pub steps: StepSet,
    pub n_max: usize,
    // tables[n] is (n+1)² row-major: index i*(n+1)+j
    tables: Vec<Vec<BigUint>>,
}

/// Build the table; no walk of length n leaves the box i,j ≤ n.
pub fn count(steps: StepSet, n_max: usize) -> CountTable {
    let mut tables: Vec<Vec<BigUint>> = Vec::with_capacity(n_max + 1);
    tables.push(vec![BigUint::from(1u32)]);
    let deltas: Vec<(i8, i8)> = steps.steps().collect();
    for n in 1..=n_max {
        let w = n + 1;
        let mut cur = vec![BigUint::zero(); w * w];
        let prev = &tables[n - 1];
        let pw = n;
        for i in 0..pw {
            for j in 0..pw {
                let v = &prev[i * pw + j];
                if v.is_zero() {
                    continue;
                }
                for (di, dj) in &deltas {
                    let ii = i as i64 + *di as i64;
                    let jj = j as i64 + *dj as i64;
                    if ii >= 0 && jj >= 0 {
                        cur[ii as usize * w + jj as usize] += v;
                    }
                }
            }
        }
        tables.push(cur);
    }
    CountTable {
        steps,
        n_max,
        tables,
    }
}

impl CountTable {
    /// q(i,j;n); zero outside the stored box.
    pub fn q(&self, i: usize, j: usize, n: usize) -> BigUint {
        if n > self.n_max || i > n || j > n {
            return BigUint::zero();
        }
        self.tables[n][i * (n + 1) + j].clone()
    }

    /// All nonzero entries as (i, j, n, q).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, &BigUint)> {
        self.tables.iter().enumerate().flat_map(|(n, t)| {
            let w = n + 1;
            t.iter().enumerate().filter_map(move |(idx, v)| {
                if v.is_zero() {
                    None
                } else {
                    Some((idx / w, idx % w, n, v))
                }
            })
        })
    }

    /// Σ_{n ≤ n_max} (restricted by mode) q(i,j;n) x^i y^j zⁿ together
    /// with the tail bound (kz)^{n_max+1}/(1−kz), valid for |x|,|y| ≤ 1.
    pub fn partial_sum_with_bound(
        &self,
        x: Complex64,
        y: Complex64,
        z: f64,
        mode: SumMode,
    ) -> Result<(Complex64, f64)> {
        let k = self.steps.k() as f64;
        if !(z > 0.0 && z < 1.0 / k) {
            return Err(Error::Domain(format!("z = {z} outside (0, 1/k)")));
        }
        if x.norm() > 1.0 + 1e-12 || y.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain(
                "tail bound requires |x| <= 1 and |y| <= 1".into(),
            ));
        }
        let mut xpow = vec![Complex64::new(1.0, 0.0); self.n_max + 1];
        let mut ypow = vec![Complex64::new(1.0, 0.0); self.n_max + 1];
        for p in 1..=self.n_max {
            xpow[p] = xpow[p - 1] * x;
            ypow[p] = ypow[p - 1] * y;
        }
        let mut sum = Complex64::new(0.0, 0.0);
        let mut zn = 1.0;
        for (n, t) in self.tables.iter().enumerate() {
            let w = n + 1;
            let mut layer = Complex64::new(0.0, 0.0);
            match mode {
                SumMode::Origin => {
                    layer += t[0].to_f64().unwrap_or(f64::INFINITY);
                }
                SumMode::XAxis => {
                    for i in 0..w {
                        let v = &t[i * w];
                        if !v.is_zero() {
                            layer += v.to_f64().unwrap_or(f64::INFINITY) * xpow[i];
                        }
                    }
                }
                SumMode::YAxis => {
                    for j in 0..w {
                        let v = &t[j];
                        if !v.is_zero() {
                            layer += v.to_f64().unwrap_or(f64::INFINITY) * ypow[j];
                        }
                    }
                }
                SumMode::Full => {
                    for i in 0..w {
                        for j in 0..w {
                            let v = &t[i * w + j];
                            if !v.is_zero() {
                                layer += v.to_f64().unwrap_or(f64::INFINITY) * xpow[i] * ypow[j];
                            }
                        }
                    }
                }
            }
            sum += layer * zn;
            zn *= z;
        }
        let kz = k * z;
        let tail = kz.powi(self.n_max as i32 + 1) / (1.0 - kz);
        Ok((sum, tail))
    }

    /// CSV rows "i,j,n,q", optionally restricted to one (i, j) cell.
    pub fn write_csv<W: Write>(&self, out: &mut W, cell: Option<(usize, usize)>) -> std::io::Result<()> {
        writeln!(out, "i,j,n,q")?;
        match cell {
            Some((i, j)) => {
                for n in 0..=self.n_max {
                    writeln!(out, "{i},{j},{n},{}", self.q(i, j, n))?;
                }
            }
            None => {
                for (i, j, n, v) in self.entries() {
                    writeln!(out, "{i},{j},{n},{v}")?;
                }
            }
        }
        Ok(())
    }
}
