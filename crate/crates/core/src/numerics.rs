//! Small numerical building blocks shared by the kernel, drive and oracle
//! modules: exponential divided differences, an accurate complex `expm1`,
//! and fixed quadrature rules.

use num_complex::Complex64 as C64;

/// Below this modulus `phi1` switches to its Taylor series.
const PHI1_SERIES_RADIUS: f64 = 1e-6;

/// Node spread below which the three-node divided difference is summed as a
/// series about the node centroid.
const DD3_SERIES_SPREAD: f64 = 1.0;

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn exp_m1(z: C64) -> C64 {
    let em1 = z.re.exp_m1();
    let half_sin = (0.5 * z.im).sin();
    // e^x cos y - 1 = expm1(x) cos y - 2 sin^2(y/2)
    let re = em1 * z.im.cos() - 2.0 * half_sin * half_sin;
    let im = z.re.exp() * z.im.sin();
    C64::new(re, im)
}

/// Relative deviation `|exp(a - b) - 1|` between two kernels given in log
/// space, i.e. `|K_a - K_b| / |K_b|`.
pub fn relative_deviation(log_a: C64, log_b: C64) -> f64 {
    exp_m1(log_a - log_b).norm()
}

/// `(e^z - 1) / z`, continuous through `z = 0`.
pub fn phi1(z: C64) -> C64 {
    if z.norm() < PHI1_SERIES_RADIUS {
        // 4-term Taylor series
        C64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        exp_m1(z) / z
    }
}

/// Divided difference `exp[z0, z1]`.
pub fn exp_dd2(z0: C64, z1: C64) -> C64 {
    z0.exp() * phi1(z1 - z0)
}

/// Divided difference `exp[z0, z1, z2]`, symmetric in its arguments and
/// well-conditioned for coincident or nearly coincident nodes.
///
/// By the Hermite-Genocchi formula this equals
/// `∫₀¹ dt ∫₀ᵗ ds exp(z0 + (z1 - z0)(t - s) + (z2 - z0) s)`, which is how the
/// drive module turns causal double integrals into closed forms.
pub fn exp_dd3(z0: C64, z1: C64, z2: C64) -> C64 {
    let nodes = [z0, z1, z2];
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let (p, q) = pairs
        .into_iter()
        .max_by(|&(a, b), &(c, d)| {
            (nodes[a] - nodes[b])
                .norm()
                .total_cmp(&(nodes[c] - nodes[d]).norm())
        })
        .unwrap();
    let r = 3 - p - q;
    let spread = (nodes[p] - nodes[q]).norm();

    if spread > DD3_SERIES_SPREAD {
        let (zp, zq, zr) = (nodes[p], nodes[q], nodes[r]);
        return (exp_dd2(zr, zq) - exp_dd2(zp, zr)) / (zq - zp);
    }

    // exp[z] = e^m Σ_k h_k(w) / (k+2)!, h_k the complete homogeneous
    // symmetric polynomials of the centred nodes w = z - m.
    let m = (z0 + z1 + z2) / 3.0;
    let w = [z0 - m, z1 - m, z2 - m];
    let mut h1 = C64::new(1.0, 0.0);
    let mut h2 = C64::new(1.0, 0.0);
    let mut h3 = C64::new(1.0, 0.0);
    let mut inv_fact = 0.5;
    let mut sum = h3 * inv_fact;
    // |w| <= 2/3 here, so 32 terms are far beyond double precision. No early
    // exit: h_1 of centred nodes is exactly zero.
    for k in 1..32 {
        h1 *= w[0];
        h2 = h2 * w[1] + h1;
        h3 = h3 * w[2] + h2;
        inv_fact /= (k + 2) as f64;
        sum += h3 * inv_fact;
    }
    m.exp() * sum
}

/// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// Integrates `f` over `[a, b]` with one 5-point Gauss-Legendre panel.
pub fn gauss_legendre<F: FnMut(f64) -> C64>(a: f64, b: f64, mut f: F) -> C64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5.iter()
        .map(|&(x, w)| f(mid + half * x) * w)
        .sum::<C64>()
        * half
}

/// Composite Simpson rule on uniformly spaced samples. An odd number of
/// intervals closes with Simpson's 3/8 rule on the final three; a single
/// interval falls back to the trapezoid.
pub fn simpson(values: &[C64], spacing: f64) -> C64 {
    let n = values.len();
    match n {
        0 | 1 => C64::new(0.0, 0.0),
        2 => (values[0] + values[1]) * (0.5 * spacing),
        3 => (values[0] + values[1] * 4.0 + values[2]) * (spacing / 3.0),
        _ => {
            let intervals = n - 1;
            let (even_end, tail) = if intervals.is_multiple_of(2) {
                (n - 1, false)
            } else {
                (n - 4, true)
            };
            let mut acc = values[0] + values[even_end];
            for (k, v) in values.iter().enumerate().take(even_end).skip(1) {
                acc += if k % 2 == 1 { *v * 4.0 } else { *v * 2.0 };
            }
            let mut total = acc * (spacing / 3.0);
            if tail {
                let v = &values[n - 4..];
                total += (v[0] + v[1] * 3.0 + v[2] * 3.0 + v[3]) * (3.0 * spacing / 8.0);
            }
            total
        }
    }
}

/// Fourth-order finite-difference derivative of uniformly sampled data.
/// Interior points use the centred five-point stencil, the two points at each
/// edge use one-sided five-point stencils. Requires at least five samples.
pub fn derivative4(values: &[C64], spacing: f64) -> Vec<C64> {
    let n = values.len();
    assert!(n >= 5, "derivative4 needs at least five samples");
    let inv = 1.0 / (12.0 * spacing);
    let mut out = vec![C64::new(0.0, 0.0); n];
    for k in 2..n - 2 {
        out[k] = (values[k - 2] - values[k - 1] * 8.0 + values[k + 1] * 8.0 - values[k + 2]) * inv;
    }
    let fwd = |v: &[C64]| -> [C64; 2] {
        [
            (v[0] * -25.0 + v[1] * 48.0 - v[2] * 36.0 + v[3] * 16.0 - v[4] * 3.0) * inv,
            (v[0] * -3.0 - v[1] * 10.0 + v[2] * 18.0 - v[3] * 6.0 + v[4]) * inv,
        ]
    };
    let [d0, d1] = fwd(&values[..5]);
    out[0] = d0;
    out[1] = d1;
    let rev: Vec<C64> = values[n - 5..].iter().rev().copied().collect();
    let [e0, e1] = fwd(&rev);
    out[n - 1] = -e0;
    out[n - 2] = -e1;
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
