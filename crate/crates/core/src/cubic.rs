//! Real-root extraction for the cubic polynomials arising from Kerr
//! mean-field equations, via the trigonometric/Cardano closed forms.

/// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 = 0, ascending. Degenerate
/// leading coefficients fall through to the quadratic/linear cases.
pub fn real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if c3.abs() <= scale * 1e-300 {
        return quadratic_roots(c2, c1, c0);
    }
    // depressed form t^3 + p t + q with x = t - c2/(3 c3)
    let a = c2 / c3;
    let b = c1 / c3;
    let c = c0 / c3;
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);

    let mut roots = if disc > 0.0 {
        // three distinct real roots
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect::<Vec<_>>()
    } else {
        // one real root (Cardano), possibly a double root at disc = 0
        let half_q = q / 2.0;
        let r = (half_q * half_q + p * p * p / 27.0).max(0.0).sqrt();
        let u = (-half_q + r).cbrt();
        let v = (-half_q - r).cbrt();
        let t0 = u + v;
        let mut rs = vec![t0 - shift];
        if disc == 0.0 && p != 0.0 {
            rs.push(-t0 / 2.0 - shift);
        }
        rs
    };
    // one Newton polish per root
    for x in roots.iter_mut() {
        for _ in 0..2 {
            let f = ((c3 * *x + c2) * *x + c1) * *x + c0;
            let df = (3.0 * c3 * *x + 2.0 * c2) * *x + c1;
            if df != 0.0 {
                *x -= f / df;
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

fn quadratic_roots(c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c2.abs().max(c1.abs()).max(c0.abs());
    if c2.abs() <= scale * 1e-300 {
        if c1 == 0.0 {
            return Vec::new();
        }
        return vec![-c0 / c1];
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // numerically stable split
    let q = -0.5 * (c1 + c1.signum() * sq);
    let mut roots = if q == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![q / c2, c0 / q]
    };
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Discriminant of c3 x^3 + c2 x^2 + c1 x + c0 (positive for three distinct
/// real roots).
pub fn discriminant(c3: f64, c2: f64, c1: f64, c0: f64) -> f64 {
    18.0 * c3 * c2 * c1 * c0 - 4.0 * c2 * c2 * c2 * c0 + c2 * c2 * c1 * c1
        - 4.0 * c3 * c1 * c1 * c1
        - 27.0 * c3 * c3 * c0 * c0
}
