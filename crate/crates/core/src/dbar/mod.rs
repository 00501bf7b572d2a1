//! Solid Cauchy transform `u(z) = (1/π)∬ f(w)/(z−w) dA(w)` as a solution
//! operator for `∂u/∂z̄ = f`.
//!
//! Forms live on the global `h`-lattice. Cells within [`NEAR_CELLS`] of the
//! target are integrated exactly for piecewise-constant data, the rest by the
//! midpoint rule. Lattice targets go through an FFT convolution.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::curve::JordanDomain;
use crate::holo::dbar_samples;
use crate::lattice::{BBox, Lattice, LatticeField};

/// Cells at Chebyshev distance ≤ this many steps are integrated exactly.
pub const NEAR_CELLS: i64 = 4;

/// Residual tolerance `50·h²·scale`, relative to the size of the data.
pub fn quadrature_tolerance(h: f64, scale: f64) -> f64 {
    50.0 * h * h * scale
}

/// Samples of the single coefficient of a (0,1)-form on a lattice window.
#[derive(Debug, Clone)]
pub struct Form01Sample {
    field: Arc<LatticeField>,
    mask: Vec<bool>,
}

impl Form01Sample {
    /// Zeroes values outside the mask and drops mask entries where the value is 0.
    pub fn new(lattice: Lattice, mut values: Vec<C64>, mut mask: Vec<bool>) -> Result<Self> {
        if values.len() != lattice.len() || mask.len() != lattice.len() {
            return Err(Error::InvalidInput("form samples do not match the lattice".into()));
        }
        for (v, m) in values.iter_mut().zip(mask.iter_mut()) {
            if !*m || *v == C64::new(0.0, 0.0) {
                *v = C64::new(0.0, 0.0);
                *m = false;
            }
        }
        Ok(Self { field: Arc::new(LatticeField { lattice, values }), mask })
    }

    /// `f` sampled where `keep` holds, on a window covering `bbox`.
    pub fn from_fn_masked(
        bbox: &BBox,
        h: f64,
        f: impl Fn(C64) -> C64 + Sync,
        keep: impl Fn(C64) -> bool + Sync,
    ) -> Result<Self> {
        let lattice = Lattice::covering(bbox, h);
        let (values, mask): (Vec<C64>, Vec<bool>) = (0..lattice.len())
            .into_par_iter()
            .map(|k| {
                let z = lattice.point_at(k);
                if keep(z) {
                    (f(z), true)
                } else {
                    (C64::new(0.0, 0.0), false)
                }
            })
            .unzip();
        Self::new(lattice, values, mask)
    }

    /// `f` restricted to the open neighbourhood `Ω(ε)`.
    pub fn from_fn(domain: &JordanDomain, eps: f64, h: f64, f: impl Fn(C64) -> C64 + Sync) -> Result<Self> {
        let bbox = domain.bbox().expand(eps + 2.0 * h);
        Self::from_fn_masked(&bbox, h, f, |z| domain.signed_distance(z) < eps)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.field.lattice
    }

    pub fn h(&self) -> f64 {
        self.field.lattice.h
    }

    pub fn field(&self) -> &Arc<LatticeField> {
        &self.field
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn support(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        (0..self.mask.len())
            .filter(|&k| self.mask[k])
            .map(|k| (self.field.lattice.point_at(k), self.field.values[k]))
    }

    pub fn sup(&self) -> f64 {
        self.field.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `a·self + b·other` on the same lattice.
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        if self.field.lattice != other.field.lattice {
            return Err(Error::InvalidInput("forms live on different lattices".into()));
        }
        let values = self.field.values.iter().zip(&other.field.values).map(|(x, y)| a * x + b * y).collect();
        let mask = self.mask.iter().zip(&other.mask).map(|(x, y)| *x || *y).collect();
        Self::new(self.field.lattice, values, mask)
    }
}

/// Where to evaluate a solution.
#[derive(Debug, Clone)]
pub enum Target {
    /// Lattice points of the closed domain.
    Closure,
    /// A whole lattice window at the form's spacing; the field is kept.
    Window(Lattice),
    Points(Vec<C64>),
}

#[derive(Debug, Clone)]
pub struct DbarSolution {
    pub points: Vec<C64>,
    pub values: Vec<C64>,
    /// Full window values when the target was a lattice.
    pub field: Option<Arc<LatticeField>>,
    pub constant: f64,
    pub h: f64,
    /// `max |∂̄u − f|` over lattice points of the closed domain at least 3h
    /// inside the support truncation; `None` for scattered targets.
    pub residual: Option<f64>,
}

impl DbarSolution {
    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Rows `x,y,re_u,im_u`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "y", "re_u", "im_u"]).map_err(io_err)?;
        for (p, u) in self.points.iter().zip(&self.values) {
            wr.write_record(&[p.re.to_string(), p.im.to_string(), u.re.to_string(), u.im.to_string()])
                .map_err(io_err)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `C = 2·(diam Ω + 2τ₀)`, the sup-norm constant of the transform on `Ω(ε)`, `ε ≤ τ₀`.
pub fn operator_constant(domain: &JordanDomain, tau0: f64) -> f64 {
    2.0 * (domain.diameter() + 2.0 * tau0)
}

// x·atan(y/x) + (y/2)·ln(x²+y²), a mixed antiderivative of x/(x²+y²)
fn g_anti(x: f64, y: f64) -> f64 {
    let a = if x == 0.0 { 0.0 } else { x * (y / x).atan() };
    let b = if y == 0.0 { 0.0 } else { 0.5 * y * (x * x + y * y).ln() };
    a + b
}

fn corner_sum(g: impl Fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    g(x1, y1) - g(x0, y1) - g(x1, y0) + g(x0, y0)
}

/// `∬_{[x0,x1]×[y0,y1]} dA(ζ)/ζ`.
pub fn rectangle_integral(x0: f64, x1: f64, y0: f64, y1: f64) -> C64 {
    let re = corner_sum(g_anti, x0, x1, y0, y1);
    let im = corner_sum(|x, y| g_anti(y, x), x0, x1, y0, y1);
    C64::new(re, -im)
}

// (1/π)∬_{cell at offset (p,q)} dA(w)/(z−w) for the cell centered at z − (p,q)h.
fn cell_kernel(h: f64, dx: f64, dy: f64) -> C64 {
    // z − w = (dx, dy) at the cell center; w ranges over the cell
    let (cx, cy) = (-dx, -dy);
    -rectangle_integral(cx - 0.5 * h, cx + 0.5 * h, cy - 0.5 * h, cy + 0.5 * h) / PI
}

fn kernel(h: f64, p: i64, q: i64) -> C64 {
    if p.abs() <= NEAR_CELLS && q.abs() <= NEAR_CELLS {
        cell_kernel(h, p as f64 * h, q as f64 * h)
    } else {
        h * h / (PI * C64::new(p as f64 * h, q as f64 * h))
    }
}

/// The transform at one point `z` of the form's window.
pub fn cauchy_transform(f: &Form01Sample, z: C64) -> Result<C64> {
    let lat = f.lattice();
    let h = lat.h;
    let bb = lat.bbox().expand(0.5 * h);
    if !bb.contains(z) {
        return Err(Error::OutOfRange(format!("{z} outside the form's grid box")));
    }
    let sum = (0..lat.len())
        .into_par_iter()
        .filter(|&k| f.mask[k])
        .map(|k| {
            let w = lat.point_at(k);
            let d = z - w;
            let v = f.field.values[k];
            if d.re.abs() <= (NEAR_CELLS as f64 + 0.5) * h && d.im.abs() <= (NEAR_CELLS as f64 + 0.5) * h {
                v * cell_kernel(h, d.re, d.im)
            } else {
                v * (h * h / (PI * d))
            }
        })
        .reduce(|| C64::new(0.0, 0.0), |a, b| a + b);
    Ok(sum)
}

fn good_size(n: usize) -> usize {
    (n..).find(|&m| {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        k == 1
    })
    .unwrap()
}

// In-place 2D FFT of a row-major nx×ny array.
fn fft2(data: &mut [C64], nx: usize, ny: usize, dir: FftDirection) {
    let mut planner = FftPlanner::new();
    let row = planner.plan_fft(nx, dir);
    let col = planner.plan_fft(ny, dir);
    data.par_chunks_mut(nx).for_each(|r| row.process(r));
    let mut t = vec![C64::new(0.0, 0.0); nx * ny];
    t.par_chunks_mut(ny).enumerate().for_each(|(i, c)| {
        for (j, v) in c.iter_mut().enumerate() {
            *v = data[j * nx + i];
        }
    });
    t.par_chunks_mut(ny).for_each(|c| col.process(c));
    data.par_chunks_mut(nx).enumerate().for_each(|(j, r)| {
        for (i, v) in r.iter_mut().enumerate() {
            *v = t[i * ny + j];
        }
    });
}

/// Transform of `f` at every point of `target` (same spacing) by FFT convolution.
pub fn transform_on_window(f: &Form01Sample, target: Lattice) -> Result<LatticeField> {
    let src = *f.lattice();
    if (src.h - target.h).abs() > 1e-15 * src.h {
        return Err(Error::InvalidGrid("target window must share the form's spacing".into()));
    }
    let h = src.h;
    let lx = src.nx + target.nx - 1;
    let ly = src.ny + target.ny - 1;
    let (nx, ny) = (good_size(lx), good_size(ly));
    // kernel offset p = (target.i0 + i) − (src.i0 + k); index n ↔ p0 + n
    let p0 = target.i0 - src.i0 - (src.nx as i64 - 1);
    let q0 = target.j0 - src.j0 - (src.ny as i64 - 1);
    let mut kern = vec![C64::new(0.0, 0.0); nx * ny];
    kern.par_chunks_mut(nx).enumerate().take(ly).for_each(|(n, r)| {
        for (m, v) in r.iter_mut().enumerate().take(lx) {
            *v = kernel(h, p0 + m as i64, q0 + n as i64);
        }
    });
    let mut a = vec![C64::new(0.0, 0.0); nx * ny];
    for j in 0..src.ny {
        for i in 0..src.nx {
            a[j * nx + i] = f.field.values[src.index(i, j)];
        }
    }
    fft2(&mut kern, nx, ny, FftDirection::Forward);
    fft2(&mut a, nx, ny, FftDirection::Forward);
    a.par_iter_mut().zip(kern.par_iter()).for_each(|(x, k)| *x *= k);
    fft2(&mut a, nx, ny, FftDirection::Inverse);
    let scale = 1.0 / (nx * ny) as f64;
    let values = (0..target.len())
        .map(|k| {
            let (i, j) = (k % target.nx, k / target.nx);
            a[(j + src.ny - 1) * nx + i + src.nx - 1] * scale
        })
        .collect();
    Ok(LatticeField { lattice: target, values })
}

/// Solves `∂̄u = f` on the closed domain (or the requested target) for `f`
/// supported in `Ω(ε)`.
pub fn solve_dbar(
    f: &Form01Sample,
    domain: &JordanDomain,
    eps: f64,
    tau0: f64,
    target: Target,
) -> Result<DbarSolution> {
    if !(eps > 0.0) || eps > tau0 {
        return Err(Error::InvalidParameter(format!("need 0 < ε ≤ τ₀ (got ε={eps}, τ₀={tau0})")));
    }
    if let Some((p, _)) = f.support().find(|(p, _)| !(domain.signed_distance(*p) < eps)) {
        return Err(Error::InvalidSupport(format!("form is nonzero at {p}, outside Ω(ε)")));
    }
    let h = f.h();
    let constant = operator_constant(domain, tau0);
    let closure_lattice = || Lattice::covering(&domain.bbox().expand(2.0 * h), h);
    let (points, values, field) = match target {
        Target::Points(pts) => {
            let vals = pts.iter().map(|z| cauchy_transform(f, *z)).collect::<Result<Vec<_>>>()?;
            (pts, vals, None)
        }
        Target::Closure | Target::Window(_) => {
            let lat = match target {
                Target::Window(l) => l,
                _ => closure_lattice(),
            };
            let u = transform_on_window(f, lat)?;
            let (pts, vals): (Vec<C64>, Vec<C64>) = (0..lat.len())
                .map(|k| (lat.point_at(k), u.values[k]))
                .filter(|(z, _)| matches!(target, Target::Window(_)) || domain.signed_distance(*z) <= 0.0)
                .unzip();
            (pts, vals, Some(Arc::new(u)))
        }
    };
    let residual = match &field {
        Some(u) => Some(solution_residual(f, u, domain, eps)?),
        None => None,
    };
    Ok(DbarSolution { points, values, field, constant, h, residual })
}

// max |∂̄u − f| over closed-domain lattice points ≥ 3h inside bΩ(ε).
fn solution_residual(f: &Form01Sample, u: &LatticeField, domain: &JordanDomain, eps: f64) -> Result<f64> {
    let h = f.h();
    let keep = |z: C64| {
        let s = domain.signed_distance(z);
        s <= 0.0 && s < eps - 3.0 * h
    };
    let (pts, vals): (Vec<C64>, Vec<C64>) = (0..u.lattice.len())
        .into_par_iter()
        .map(|k| (u.lattice.point_at(k), u.values[k]))
        .filter(|(z, _)| domain.signed_distance(*z) < eps - h)
        .unzip();
    let d = dbar_samples(&pts, &vals, h)?;
    let src = f.lattice();
    let at = |z: C64| -> C64 {
        let (gi, gj) = Lattice::global_index(h, z);
        let (i, j) = (gi - src.i0, gj - src.j0);
        if i < 0 || j < 0 || i >= src.nx as i64 || j >= src.ny as i64 {
            C64::new(0.0, 0.0)
        } else {
            f.field.values[src.index(i as usize, j as usize)]
        }
    };
    let r = d.iter().filter(|(z, _)| keep(*z)).fold(f64::NAN, |m: f64, (z, du)| {
        let e = (du - at(*z)).norm();
        if m.is_nan() { e } else { m.max(e) }
    });
    if r.is_nan() {
        return Err(Error::InvalidGrid("no interior point for the residual".into()));
    }
    Ok(r)
}
