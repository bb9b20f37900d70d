//! Adaptive Gauss–Kronrod quadrature and region masses
//! `omega_i = ∫_{E_i} exp(-U(x)) dx` for one- and two-dimensional targets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::partition::EnergyPartition;
use crate::target::TargetDensity;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SEGMENTS: usize = 20_000;

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64, &mut [f64])>(f: &mut F, m: usize, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; m];
    let mut gauss = vec![0.0; m];
    let mut buf = vec![0.0; m];
    let mut add = |x: f64, wk: f64, wg: f64, kron: &mut [f64], gauss: &mut [f64]| {
        f(x, &mut buf);
        for i in 0..m {
            kron[i] += wk * buf[i];
            gauss[i] += wg * buf[i];
        }
    };
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        add(c - h * XGK[j], WGK[j], wg, &mut kron, &mut gauss);
        add(c + h * XGK[j], WGK[j], wg, &mut kron, &mut gauss);
    }
    add(c, WGK[7], WG[3], &mut kron, &mut gauss);
    let mut error: f64 = 0.0;
    for i in 0..m {
        kron[i] *= h;
        gauss[i] *= h;
        error = error.max((kron[i] - gauss[i]).abs());
    }
    Segment {
        a,
        b,
        value: kron,
        error,
    }
}

/// Integrates the `m`-vector valued `f` over `[a, b]` to absolute tolerance
/// `tol` (in the max norm of the summed error estimates). `f(x, out)` writes
/// the integrand at `x` into `out`.
///
/// ```
/// use sahmc::diagnostics::quadrature::integrate;
/// let v = integrate(|x, out| { out[0] = x.exp(); out[1] = 1.0; }, 2, 0.0, 1.0, 1e-12).unwrap();
/// assert!((v[0] - (1f64.exp() - 1.0)).abs() < 1e-12);
/// assert!((v[1] - 1.0).abs() < 1e-14);
/// ```
pub fn integrate<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    m: usize,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if a == b {
        return Ok(vec![0.0; m]);
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&mut f, m, a, b);
    let mut total_err = first.error;
    heap.push(first);
    while total_err > tol {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: tol,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval no longer splittable in floating point
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: tol,
            });
        }
        let left = gk15(&mut f, m, worst.a, mid);
        let right = gk15(&mut f, m, mid, worst.b);
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    let mut out = vec![0.0; m];
    for seg in heap {
        for (o, v) in out.iter_mut().zip(&seg.value) {
            *o += v;
        }
    }
    Ok(out)
}

/// Scan step used to locate region boundaries along a line.
const SCAN_STEP: f64 = 0.01;

/// Splits `[lo, hi]` into pieces on which the region index of `u` is
/// constant, returning `(start, end, region)` triples. Boundaries are found
/// on a grid and refined by bisection; crossings that leave and re-enter a
/// region within one grid step are missed.
fn region_pieces<U: Fn(f64) -> f64>(
    u: &U,
    partition: &EnergyPartition,
    lo: f64,
    hi: f64,
) -> Result<Vec<(f64, f64, usize)>> {
    let region = |x: f64| partition.region_index(u(x));
    let n = (((hi - lo) / SCAN_STEP).ceil() as usize).max(1);
    let step = (hi - lo) / n as f64;
    let mut pieces = Vec::new();
    let mut start = lo;
    let mut current = region(lo)?;
    let mut prev_x = lo;
    for k in 1..=n {
        let x = if k == n { hi } else { lo + step * k as f64 };
        let mut r = region(x)?;
        let mut a = prev_x;
        while r != current {
            // invariant: region(a) == current, region(b) != current
            let mut b = x;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if region(mid)? == current {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            pieces.push((start, b, current));
            start = b;
            current = region(b)?;
            a = b;
            r = region(x)?;
        }
        prev_x = x;
    }
    pieces.push((start, hi, current));
    Ok(pieces)
}

/// Adds `∫ exp(-u(x)) dx` over each piece of `[lo, hi]` to `out[region]`.
fn line_masses<U: Fn(f64) -> f64>(
    u: &U,
    partition: &EnergyPartition,
    lo: f64,
    hi: f64,
    tol: f64,
    out: &mut [f64],
) -> Result<()> {
    let pieces = region_pieces(u, partition, lo, hi)?;
    let piece_tol = tol / pieces.len() as f64;
    for (a, b, r) in pieces {
        let v = integrate(|x, o| o[0] = (-u(x)).exp(), 1, a, b, piece_tol)?;
        out[r] += v[0];
    }
    Ok(())
}

/// Region masses of a one- or two-dimensional target over the box
/// `[lo, hi]^d`, to absolute tolerance `tol`.
pub fn region_masses<T: TargetDensity + ?Sized>(
    target: &T,
    partition: &EnergyPartition,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(Error::input(format!("empty integration box [{lo}, {hi}]")));
    }
    let m = partition.len();
    match target.dim() {
        1 => {
            let mut out = vec![0.0; m];
            line_masses(&|x| target.potential(&[x]), partition, lo, hi, tol, &mut out)?;
            Ok(out)
        }
        2 => {
            let inner_tol = 1e-2 * tol / (hi - lo);
            let mut failure = None;
            let masses = integrate(
                |x1, out| {
                    out.fill(0.0);
                    let u = |x2: f64| target.potential(&[x1, x2]);
                    if let Err(e) = line_masses(&u, partition, lo, hi, inner_tol, out) {
                        failure.get_or_insert(e);
                    }
                },
                m,
                lo,
                hi,
                tol,
            )?;
            match failure {
                Some(e) => Err(e),
                None => Ok(masses),
            }
        }
        d => Err(Error::input(format!(
            "region masses need a target of dimension 1 or 2, got {d}"
        ))),
    }
}
