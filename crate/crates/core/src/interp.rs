//! Four-point (cubic) Lagrange interpolation.

// Unused when a dependency links std.
#[allow(unused_imports)]
use num_traits::Float;

/// Weights of the cubic through `xs` evaluated at `x`.
pub(crate) fn lagrange4(xs: [f64; 4], x: f64) -> [f64; 4] {
    let mut weights = [1.0; 4];
    for (i, weight) in weights.iter_mut().enumerate() {
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                *weight *= (x - xj) / (xs[i] - xj);
            }
        }
    }
    weights
}

/// Start index of the four-point stencil around `x` in the sorted `knots`,
/// clamped to the ends. `knots` must hold at least four entries.
pub(crate) fn stencil_start(knots: &[f64], x: f64) -> usize {
    let upper = knots.partition_point(|&k| k <= x);
    upper.saturating_sub(2).min(knots.len() - 4)
}

/// Symmetry of a radial quantity under `r -> -r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Parity {
    Even,
    Odd,
}

/// Cubic interpolation of nodal `values` on the uniform grid `r_i = i h` at
/// radius `r`. Points left of the origin are filled by reflection.
pub(crate) fn radial_cubic(values: &[f64], h: f64, r: f64, parity: Parity) -> f64 {
    let n = values.len() as isize;
    let base = ((r / h).floor() as isize).clamp(0, n - 2);
    let first = (base - 1).min(n - 4);
    let mut xs = [0.0; 4];
    let mut ys = [0.0; 4];
    for k in 0..4 {
        let idx = first + k as isize;
        xs[k] = idx as f64 * h;
        ys[k] = if idx >= 0 {
            values[idx as usize]
        } else {
            match parity {
                Parity::Even => values[(-idx) as usize],
                Parity::Odd => -values[(-idx) as usize],
            }
        };
    }
    let weights = lagrange4(xs, r);
    weights.iter().zip(ys).map(|(w, y)| w * y).sum()
}
