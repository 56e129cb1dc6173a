//! Simultaneous polynomial root finding (Aberth-Ehrlich).

use num_complex::Complex64;

/// Expands `prod (z - r_k)` scaled by `lead`; coefficients in ascending order.
pub(crate) fn poly_from_linear_factors(factors: &[(Complex64, Complex64)]) -> Vec<Complex64> {
    // Each factor is `c0 + c1 z`.
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &(c0, c1) in factors {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &a) in coeffs.iter().enumerate() {
            next[i] += a * c0;
            next[i + 1] += a * c1;
        }
        coeffs = next;
    }
    coeffs
}

fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of the polynomial with ascending `coeffs`.
///
/// Trailing zero coefficients are stripped; the leading coefficient must be nonzero.
pub fn aberth_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() == 0.0) {
        coeffs.pop();
    }
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    if degree == 1 {
        return vec![-coeffs[0] / coeffs[1]];
    }

    // Cauchy-type radius bound for the starting circle.
    let lead = coeffs[degree].norm();
    let radius = coeffs[..degree]
        .iter()
        .enumerate()
        .map(|(i, c)| (c.norm() / lead).powf(1.0 / (degree - i) as f64))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / degree as f64 + 0.4))
        .collect();

    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..degree {
            let (p, dp) = eval_with_derivative(&coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(1.0, 0.0) / d
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if max_step < 1e-16 {
            break;
        }
    }
    z
}
