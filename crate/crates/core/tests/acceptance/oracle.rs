//! Reference implementations used only as test oracles.

/// Cyclic Jacobi eigensolver for a dense symmetric matrix. Returns
/// eigenvalues (descending) and the matching eigenvectors as columns.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let norm: f64 = m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[b][b].total_cmp(&m[a][a]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| v.iter().map(|row| row[i]).collect())
        .collect();
    (values, vectors)
}

/// `S = X̂ X̂ᵀ / (p - 1)` with each row centered on its own mean.
pub fn row_centered_covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = rows[0].len();
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let m = r.iter().sum::<f64>() / p as f64;
            r.iter().map(|v| v - m).collect()
        })
        .collect();
    let n = rows.len();
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let d: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / (p - 1) as f64;
            s[i][j] = d;
            s[j][i] = d;
        }
    }
    s
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// `max_i |g_i - fd_i| / max_i |fd_i|`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_differences(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut xm = x.to_vec();
    (0..x.len())
        .map(|i| {
            xm[i] = x[i] + h;
            let up = f(&xm);
            xm[i] = x[i] - h;
            let down = f(&xm);
            xm[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    None,
    Vivid(&'static str),
    Be(&'static str),
}

/// Explanation rule table: column = number of thresholds
/// {0.2, 0.35, 0.5} strictly below the value (bands are right-closed).
pub fn column(v: f64) -> usize {
    [0.2, 0.35, 0.5].iter().filter(|&&t| v > t).count()
}

pub const ASSESSMENT: [&str; 4] = ["might", "probably", "probably", "sure"];
const VIVID_ROW: [&str; 4] = ["confusing", "perhaps", "something like", "obviously"];
const BE_ROW: [Option<&str>; 4] = [
    None,
    Some("perhaps"),
    Some("something like"),
    Some("obviously"),
];

pub fn table_cell(p_max: f64, delta_p: f64) -> Cell {
    let col = column(delta_p);
    if p_max > 0.5 {
        Cell::Vivid(VIVID_ROW[col])
    } else if p_max > 0.2 {
        BE_ROW[col].map_or(Cell::None, Cell::Be)
    } else {
        Cell::None
    }
}
