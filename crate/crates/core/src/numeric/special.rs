//! Special functions and cancellation-free elementary combinations.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// Exponential integral `E₁(x) = ∫_x^∞ e^{-u}/u du` for `x > 0`.
///
/// Power series below 1, Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let contrib = term / kf;
            sum += contrib;
            if contrib.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `1 - e^{-x}`.
#[inline]
pub fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `e^{-x} - 1 + x`, accurate for small `x`.
pub fn exp_neg_minus_one_plus(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // x²/2 - x³/6 + x⁴/24 - ...
        let mut term = x * x / 2.0;
        let mut sum = term;
        for k in 3..20 {
            term *= -x / k as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (-x).exp_m1() + x
    }
}

/// `sin x - x`, accurate for small `x`.
pub fn sin_minus_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        let mut term = -x * x2 / 6.0;
        let mut sum = term;
        for k in (4..30).step_by(2) {
            term *= -x2 / ((k * (k + 1)) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        x.sin() - x
    }
}

/// `cos x - 1`.
#[inline]
pub fn cos_minus_one(x: f64) -> f64 {
    let h = (0.5 * x).sin();
    -2.0 * h * h
}

/// `∫_0^ε τ e^{-τ} dτ = 1 - e^{-ε}(1 + ε)`.
pub fn lower_gamma2(eps: f64) -> f64 {
    if eps <= 0.0 {
        return 0.0;
    }
    if eps < 0.5 {
        // Σ (-1)^n ε^{n+2} / (n! (n+2))
        let mut pow = eps * eps;
        let mut sum = 0.0;
        let mut fact = 1.0;
        for n in 0..40 {
            if n > 0 {
                fact *= n as f64;
                pow *= -eps;
            }
            let term = pow / (fact * (n + 2) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        1.0 - (-eps).exp() * (1.0 + eps)
    }
}
