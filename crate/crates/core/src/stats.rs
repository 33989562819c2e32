//! Small statistics used by the analytics: OLS, Spearman, and exact
//! binomial tails.

use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

use crate::error::{Error, Result};

/// Least-squares `(slope, intercept)` of `y` on `x`. A constant `x` has no
/// defined slope.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Invalid(format!("ols needs two equal-length series of 2+ points, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("ols: x has zero variance".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// 1-based ranks; tied values share the mean of their ranks.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Spearman's rho: Pearson correlation of the tie-averaged ranks. NaN when
/// either series is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Invalid(format!("spearman needs two equal-length series of 3+ points, got {} and {}", x.len(), y.len())));
    }
    Ok(pearson(&ranks(x), &ranks(y)))
}

/// Two-sided p-value of `rho` over `n` points, from the t approximation
/// with `n - 2` degrees of freedom.
pub fn spearman_p_value(rho: f64, n: usize) -> f64 {
    if !rho.is_finite() || n < 3 {
        return f64::NAN;
    }
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    2.0 * dist.cdf(-t.abs())
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`.
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    Binomial::new(p.clamp(0.0, 1.0), n).expect("p clamped to [0, 1]").sf(k - 1)
}

/// One-sided sign test: chance of at least `wins` successes among
/// `wins + losses` fair coin flips.
pub fn sign_test(wins: u64, losses: u64) -> f64 {
    binomial_upper_tail(wins, wins + losses, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ols_recovers_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v - 1.0).collect();
        let (m, b) = ols(&x, &y).unwrap();
        assert_relative_eq!(m, 0.5, epsilon = 1e-12);
        assert_relative_eq!(b, -1.0, epsilon = 1e-12);
        assert_eq!(ols(&x, &[3.0; 4]).unwrap().0, 0.0);
        assert!(ols(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ties_share_ranks() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn spearman_by_hand() {
        // ranks x: 1 2 3 4 5, ranks y: 2 1 4 3 5, sum d^2 = 4
        let rho = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.2, 0.1, 0.5, 0.3, 0.9]).unwrap();
        assert_relative_eq!(rho, 1.0 - 6.0 * 4.0 / (5.0 * 24.0), epsilon = 1e-12);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[4.0, 8.0, 9.0]).unwrap(), 1.0);
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn p_values() {
        assert_eq!(spearman_p_value(1.0, 10), 0.0);
        assert_relative_eq!(spearman_p_value(0.0, 10), 1.0, epsilon = 1e-12);
        assert!(spearman_p_value(0.7, 40) < 1e-4);
        assert_relative_eq!(binomial_upper_tail(4, 4, 0.5), 0.0625, epsilon = 1e-12);
        assert_relative_eq!(sign_test(2, 1), 0.5, epsilon = 1e-12);
        assert_eq!(binomial_upper_tail(0, 5, 0.3), 1.0);
    }
}
