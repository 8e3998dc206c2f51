//! Brute-force optimum of
//! `max sum w_j x_j  s.t. |x_j| <= bound, |x_{j+1} - x_j| <= step`
//! by walking every vertex of the feasible polytope.
//!
//! A vertex has `K` linearly independent tight constraints. Grouping the
//! variables into maximal runs joined by tight difference constraints, each
//! run is a path whose values are fixed up to an offset, and the offset is
//! pinned by a tight box constraint on one of its members. A run pinned at
//! `+bound` must peak there and one pinned at `-bound` must bottom out there,
//! so each run contributes its sign pattern times two offsets.

pub fn chain_optimum_by_vertices(weights: &[f64], bound: f64, step: f64) -> f64 {
    assert!(!weights.is_empty() && weights.len() <= 16, "enumeration is exponential");
    let mut best = f64::NEG_INFINITY;
    walk(weights, bound, step, 0, None, 0.0, &mut best);
    best
}

fn walk(w: &[f64], bound: f64, step: f64, pos: usize, prev: Option<f64>, acc: f64, best: &mut f64) {
    let k = w.len();
    if pos == k {
        if acc > *best {
            *best = acc;
        }
        return;
    }
    let tol = 1e-12 * bound.max(step);
    let mut partial = vec![0.0; k - pos];
    for len in 1..=k - pos {
        for mask in 0u32..(1u32 << (len - 1)) {
            // path shape relative to its first value
            partial[0] = 0.0;
            for i in 1..len {
                let sign = if mask >> (i - 1) & 1 == 1 { 1.0 } else { -1.0 };
                partial[i] = partial[i - 1] + sign * step;
            }
            let shape = &partial[..len];
            let hi = shape.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = shape.iter().copied().fold(f64::INFINITY, f64::min);
            if hi - lo > 2.0 * bound + tol {
                continue;
            }
            let top = bound - hi;
            let bottom = -bound - lo;
            let offsets: &[f64] = if (top - bottom).abs() <= tol { &[top] } else { &[top, bottom] };
            for &off in offsets {
                let first = off;
                if let Some(p) = prev {
                    if (first - p).abs() > step + tol {
                        continue;
                    }
                }
                let gain: f64 = shape.iter().zip(&w[pos..pos + len]).map(|(s, wj)| wj * (s + off)).sum();
                walk(w, bound, step, pos + len, Some(shape[len - 1] + off), acc + gain, best);
            }
        }
    }
}
