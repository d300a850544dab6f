use crate::error::{LabError, Result};

const RANK_TOL: f64 = 1e-10;

fn err(msg: impl Into<String>) -> LabError {
    LabError::Analysis(msg.into())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Residuals of `y` regressed on `[1, x1, x2]`, via modified Gram–Schmidt.
fn ols_residuals(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(3);
    for col in [vec![1.0; n], x1.to_vec(), x2.to_vec()] {
        let scale = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = col;
        for q in &basis {
            let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * qi);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 || norm <= RANK_TOL * scale {
            return Err(err("singular design matrix: predictors are collinear"));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    let mut r = y.to_vec();
    for q in &basis {
        let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
        r.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * qi);
    }
    Ok(r)
}

fn check_lengths(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<()> {
    if x1.len() != y.len() || x2.len() != y.len() {
        return Err(err(format!(
            "vectors of lengths {}, {}, {}",
            x1.len(),
            x2.len(),
            y.len()
        )));
    }
    if y.len() < 4 {
        return Err(err(format!("regression needs at least 4 heads, got {}", y.len())));
    }
    Ok(())
}

/// `1 − SS_res / SS_tot` for `y` on `[1, x1, x2]`.
pub fn r_squared(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x1, x2, y)?;
    let m = mean(y);
    let ss_tot: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(err("dependent run has zero variance"));
    }
    let ss_res: f64 = ols_residuals(x1, x2, y)?.iter().map(|r| r * r).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Adjusted R² with `k = 2` predictors.
pub fn adjusted_r2(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<f64> {
    let r2 = r_squared(x1, x2, y)?;
    let n = y.len() as f64;
    Ok(1.0 - (1.0 - r2) * (n - 1.0) / (n - 3.0))
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(err(format!(
            "pearson needs two equal-length vectors, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(err("pearson of a zero-variance vector"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
