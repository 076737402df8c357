//! Derivative-free simplex minimization (Nelder-Mead, classic coefficients).
//!
//! Kept deliberately small: the only in-crate client is the Johnson S_U
//! likelihood fit, which is a smooth 4-parameter problem. Objective values
//! that come back NaN are treated as +inf so the simplex backs away from
//! invalid regions (e.g. a scale parameter that underflowed to zero).

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Clone, Copy, Debug)]
pub(crate) struct SimplexOptions {
    /// Initial simplex edge length along each coordinate.
    pub step: f64,
    /// Converged when max(f) - min(f) over the simplex drops below this.
    pub f_tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct SimplexOutcome<const N: usize> {
    pub x: [f64; N],
    pub f: f64,
    // Diagnostic only; exercised by this module's tests.
    #[allow(dead_code)]
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn nelder_mead<const N: usize, F: Fn(&[f64; N]) -> f64>(
    f: F,
    start: [f64; N],
    opts: &SimplexOptions,
) -> SimplexOutcome<N> {
    let eval = |x: &[f64; N]| -> f64 {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<[f64; N]> = Vec::with_capacity(N + 1);
    simplex.push(start);
    for i in 0..N {
        let mut p = start;
        p[i] += opts.step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(&eval).collect();

    for iteration in 0..opts.max_iter {
        // Sort vertices by objective; stable sort keeps ties deterministic.
        let mut order: Vec<usize> = (0..=N).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i]).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if values[N] - values[0] <= opts.f_tol {
            return SimplexOutcome { x: simplex[0], f: values[0], iterations: iteration, converged: true };
        }

        // Centroid of all vertices but the worst.
        let mut centroid = [0.0; N];
        for vertex in &simplex[..N] {
            for (c, v) in centroid.iter_mut().zip(vertex) {
                *c += v;
            }
        }
        for c in &mut centroid {
            *c /= N as f64;
        }

        let blend = |from: &[f64; N], toward: &[f64; N], t: f64| -> [f64; N] {
            let mut out = [0.0; N];
            for i in 0..N {
                out[i] = from[i] + t * (toward[i] - from[i]);
            }
            out
        };

        let reflected = blend(&centroid, &simplex[N], -REFLECT);
        let f_reflected = eval(&reflected);

        if f_reflected < values[0] {
            let expanded = blend(&centroid, &simplex[N], -EXPAND);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                simplex[N] = expanded;
                values[N] = f_expanded;
            } else {
                simplex[N] = reflected;
                values[N] = f_reflected;
            }
        } else if f_reflected < values[N - 1] {
            simplex[N] = reflected;
            values[N] = f_reflected;
        } else {
            let contracted = blend(&centroid, &simplex[N], CONTRACT);
            let f_contracted = eval(&contracted);
            if f_contracted < values[N] {
                simplex[N] = contracted;
                values[N] = f_contracted;
            } else {
                // Shrink everything toward the current best vertex.
                let best = simplex[0];
                for i in 1..=N {
                    simplex[i] = blend(&best, &simplex[i], SHRINK);
                    values[i] = eval(&simplex[i]);
                }
            }
        }
    }

    // Budget exhausted: surface the best vertex with converged = false.
    let mut best = 0;
    for i in 1..=N {
        if values[i] < values[best] {
            best = i;
        }
    }
    SimplexOutcome { x: simplex[best], f: values[best], iterations: opts.max_iter, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPTS: SimplexOptions = SimplexOptions { step: 0.5, f_tol: 1e-12, max_iter: 2000 };

    #[test]
    fn minimizes_quadratic_bowl() {
        let out = nelder_mead(|x: &[f64; 2]| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2), [0.0, 0.0], &OPTS);
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-5, "{:?}", out.x);
        assert!((out.x[1] + 1.0).abs() < 1e-5, "{:?}", out.x);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let rosen = |x: &[f64; 2]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = nelder_mead(rosen, [-1.2, 1.0], &SimplexOptions { max_iter: 5000, ..OPTS });
        assert!(out.converged);
        assert!(out.f < 1e-9, "f = {}", out.f);
    }

    #[test]
    fn retreats_from_nan_regions() {
        // NaN outside the unit disk; minimum at the origin is still found.
        let f = |x: &[f64; 2]| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 > 1.0 {
                f64::NAN
            } else {
                r2
            }
        };
        let out = nelder_mead(f, [0.4, 0.4], &OPTS);
        assert!(out.converged);
        assert!(out.f < 1e-8);
    }

    #[test]
    fn budget_exhaustion_reports_not_converged() {
        let out = nelder_mead(
            |x: &[f64; 2]| x[0].powi(2) + x[1].powi(2),
            [100.0, -100.0],
            &SimplexOptions { step: 0.5, f_tol: 0.0, max_iter: 3 },
        );
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn deterministic_for_fixed_inputs() {
        let f = |x: &[f64; 3]| x.iter().map(|v| (v - 0.7).powi(2)).sum::<f64>();
        let a = nelder_mead(f, [0.0, 1.0, -1.0], &OPTS);
        let b = nelder_mead(f, [0.0, 1.0, -1.0], &OPTS);
        assert_eq!(a.f.to_bits(), b.f.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }
}
