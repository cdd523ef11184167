use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::torus::MAX_DIM;

use super::sequence::{compose_discretized, LinearStage};
use super::{MatrixSequence, RateEstimate, RateMethod};

/// Smallest ball radius accepted by [`rate_brute_force`].
pub const MIN_RADIUS: u64 = 10;

/// Default cap on the number of lattice points a brute-force pass visits.
pub const DEFAULT_MAX_POINTS: u64 = 200_000_000;

/// Iterates over the integer box `lo..=hi` (first `n` components).
fn for_each_in_box(n: usize, lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64]) -> bool) -> bool {
    if (0..n).any(|d| lo[d] > hi[d]) {
        return false;
    }
    let mut x = [0i64; MAX_DIM];
    x[..n].copy_from_slice(&lo[..n]);
    loop {
        if f(&x[..n]) {
            return true;
        }
        let mut d = n;
        loop {
            if d == 0 {
                return false;
            }
            d -= 1;
            if x[d] < hi[d] {
                x[d] += 1;
                break;
            }
            x[d] = lo[d];
        }
    }
}

/// Whether `y` has a preimage under the composition of `stages`.
///
/// Works backwards: the points `x` with `round(A x + w) = y` lie in
/// `A^{-1}(y - w + (-1/2, 1/2]^n)`, a parallelotope of volume one whose
/// bounding box comes from the absolute row sums of `A^{-1}`. Each candidate
/// is confirmed with the forward rounding rule before recursing.
fn reaches(stages: &[LinearStage], y: &[i64]) -> bool {
    let Some((last, rest)) = stages.split_last() else {
        return true;
    };
    let n = y.len();
    let mut lo = [0i64; MAX_DIM];
    let mut hi = [0i64; MAX_DIM];
    for r in 0..n {
        let row = last.inverse.row(r);
        let c: f64 = row.iter().zip(y).zip(&last.translation).map(|((&a, &yi), &w)| a * (yi as f64 - w)).sum();
        let h = last.inverse_halfwidth[r];
        let slack = 1e-9 * (1.0 + c.abs());
        lo[r] = libm::ceil(c - h - slack) as i64;
        hi[r] = libm::floor(c + h + slack) as i64;
    }
    let mut image = [0i64; MAX_DIM];
    for_each_in_box(n, &lo, &hi, |x| {
        last.apply(x, &mut image);
        image[..n] == *y && reaches(rest, x)
    })
}

/// Whether `y ∈ (Â_k ∘ ⋯ ∘ Â_1)(Z^n)`.
pub fn in_image(seq: &MatrixSequence, y: &[i64]) -> Result<bool> {
    if y.len() != seq.dim() {
        return Err(Error::DimensionMismatch { expected: seq.dim(), found: y.len() });
    }
    Ok(reaches(seq.stages(), y))
}

fn ball_points(dim: usize, radius: u64) -> Option<u64> {
    (2 * radius + 1).checked_pow(dim as u32)
}

/// Counts image points `y` with `|y|_∞ ≤ R` (first component restricted to
/// `first`), returning the counts for radius `R` and radius `R / 2`.
pub fn brute_force_counts(seq: &MatrixSequence, radius: u64, first: Range<i64>) -> (u64, u64) {
    let n = seq.dim();
    let r = radius as i64;
    let half = (radius / 2) as i64;
    let start = first.start.max(-r);
    let end = first.end.min(r + 1);
    let mut lo = [-r; MAX_DIM];
    let mut hi = [r; MAX_DIM];
    lo[0] = start;
    hi[0] = end - 1;
    let (mut full, mut inner) = (0u64, 0u64);
    for_each_in_box(n, &lo, &hi, |y| {
        if reaches(seq.stages(), y) {
            full += 1;
            if y.iter().all(|v| v.abs() <= half) {
                inner += 1;
            }
        }
        false
    });
    (full, inner)
}

/// Turns counts from [`brute_force_counts`] over the whole ball into an estimate.
pub fn finish_brute_force(dim: usize, radius: u64, (full, inner): (u64, u64)) -> RateEstimate {
    let value = full as f64 / ball_points(dim, radius).expect("checked by caller") as f64;
    let half = inner as f64 / ball_points(dim, radius / 2).expect("smaller ball") as f64;
    RateEstimate {
        value,
        method: RateMethod::BruteForce,
        radius_or_samples: radius,
        convergence_gap: (value - half).abs(),
    }
}

/// Number of points of `B_R`, or a capacity error above `max_points`.
pub fn check_ball(dim: usize, radius: u64, max_points: u64) -> Result<u64> {
    let points = ball_points(dim, radius).unwrap_or(u64::MAX);
    if points > max_points {
        return Err(Error::Capacity { what: "lattice points in the enumeration ball", requested: points, limit: max_points });
    }
    Ok(points)
}

/// `Card(Γ_k ∩ B_R) / Card(Z^n ∩ B_R)` for the sup-norm ball `B_R`.
///
/// Membership of every `y ∈ B_R` in `Γ_k` is decided exactly by the
/// backward search of [`in_image`], so the count over `B_R` equals that of
/// a forward enumeration of all of `Z^n`.
pub fn rate_brute_force(seq: &MatrixSequence, radius: u64, max_points: u64) -> Result<RateEstimate> {
    if radius < MIN_RADIUS {
        return Err(Error::invalid("brute-force radius must be at least 10"));
    }
    check_ball(seq.dim(), radius, max_points)?;
    let r = radius as i64;
    let counts = brute_force_counts(seq, radius, -r..r + 1);
    Ok(finish_brute_force(seq.dim(), radius, counts))
}

/// All `x ∈ B_R` whose image under the composed discretization is `target`,
/// largest sup-norm first, then lexicographic.
pub fn preimage_search(seq: &MatrixSequence, target: &[i64], radius: u64, max_points: u64) -> Result<Vec<Vec<i64>>> {
    let n = seq.dim();
    if target.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: target.len() });
    }
    check_ball(n, radius, max_points)?;
    let r = radius as i64;
    let mut found = Vec::new();
    let mut err = None;
    for_each_in_box(n, &[-r; MAX_DIM], &[r; MAX_DIM], |x| {
        match compose_discretized(seq, x) {
            Ok(y) if y == target => found.push(x.to_vec()),
            Ok(_) => {}
            Err(e) => {
                err = Some(e);
                return true;
            }
        }
        false
    });
    if let Some(e) = err {
        return Err(e);
    }
    let sup = |v: &Vec<i64>| v.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
    found.sort_by(|a, b| sup(b).cmp(&sup(a)).then_with(|| a.cmp(b)));
    Ok(found)
}
