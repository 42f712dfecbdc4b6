//! Fuzzy c-means clustering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::BinaryMask;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcmConfig {
    pub n_clusters: usize,
    /// Fuzzifier `m`; must exceed 1.
    pub exponent_m: f64,
    pub max_iter: usize,
    /// Stop once the objective drops by less than this between iterations.
    pub min_improvement: f64,
    pub seed: u64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        Self {
            n_clusters: 2,
            exponent_m: 2.0,
            max_iter: 100,
            min_improvement: 1e-2,
            seed: 0,
        }
    }
}

impl FcmConfig {
    pub fn with_clusters(n_clusters: usize) -> Self {
        Self {
            n_clusters,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clusters < 2 {
            return Err(Error::InvalidConfig("fcm needs at least 2 clusters".into()));
        }
        if !(self.exponent_m > 1.0) || !self.exponent_m.is_finite() {
            return Err(Error::InvalidConfig("fcm exponent must be > 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("fcm max_iter must be >= 1".into()));
        }
        if !(self.min_improvement >= 0.0) {
            return Err(Error::InvalidConfig(
                "fcm min_improvement must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    /// `c × d` cluster centers.
    pub centers: Vec<Vec<f64>>,
    /// `c × N` memberships; each column sums to one.
    pub memberships: Vec<Vec<f64>>,
    pub objective_history: Vec<f64>,
    pub iterations_run: usize,
}

impl FcmResult {
    pub fn n_clusters(&self) -> usize {
        self.centers.len()
    }

    pub fn n_points(&self) -> usize {
        self.memberships.first().map_or(0, Vec::len)
    }

    /// Index of the cluster with the largest membership for point `k`,
    /// lowest index on ties.
    pub fn dominant_cluster(&self, k: usize) -> usize {
        let mut best = 0;
        for i in 1..self.memberships.len() {
            if self.memberships[i][k] > self.memberships[best][k] {
                best = i;
            }
        }
        best
    }
}

#[inline]
fn pow_m(u: f64, m: f64) -> f64 {
    if m == 2.0 {
        u * u
    } else {
        u.powf(m)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn has_distinct_points<P: AsRef<[f64]>>(data: &[P], needed: usize) -> bool {
    let mut seen: Vec<&[f64]> = Vec::with_capacity(needed);
    for p in data {
        let p = p.as_ref();
        if !seen.contains(&p) {
            seen.push(p);
            if seen.len() >= needed {
                return true;
            }
        }
    }
    false
}

/// Indices of `c` distinct points chosen at random. Random draws are tried
/// first; a scan from a random offset covers heavily duplicated data.
fn pick_distinct<P: AsRef<[f64]>>(data: &[P], c: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = data.len();
    let mut chosen: Vec<usize> = Vec::with_capacity(c);
    let is_new =
        |k: usize, chosen: &[usize]| chosen.iter().all(|&j| data[j].as_ref() != data[k].as_ref());
    while chosen.len() < c {
        let mut pick = None;
        for _ in 0..32 {
            let k = rng.gen_range(0..n);
            if is_new(k, &chosen) {
                pick = Some(k);
                break;
            }
        }
        let k = match pick {
            Some(k) => k,
            None => {
                let start = rng.gen_range(0..n);
                (0..n)
                    .map(|o| (start + o) % n)
                    .find(|&k| is_new(k, &chosen))
                    .expect("enough distinct points were checked up front")
            }
        };
        chosen.push(k);
    }
    chosen
}

fn fill_sq_dists<P: AsRef<[f64]>>(data: &[P], centers: &[Vec<f64>], d2: &mut [Vec<f64>]) {
    for (row, center) in d2.iter_mut().zip(centers) {
        for (dd, p) in row.iter_mut().zip(data) {
            *dd = sq_dist(p.as_ref(), center);
        }
    }
}

/// `u_ik = 1 / Σ_j (d_ik² / d_jk²)^(1/(m-1))`, computed from inverse powers.
fn update_memberships(d2: &[Vec<f64>], m: f64, u: &mut [Vec<f64>], inv_buf: &mut [f64]) {
    let c = d2.len();
    let n = d2.first().map_or(0, Vec::len);
    let power = 1.0 / (m - 1.0);
    for k in 0..n {
        if let Some(zero) = (0..c).find(|&i| d2[i][k] == 0.0) {
            for (i, row) in u.iter_mut().enumerate() {
                row[k] = if i == zero { 1.0 } else { 0.0 };
            }
            continue;
        }
        let mut total = 0.0;
        for i in 0..c {
            let inv = if power == 1.0 {
                1.0 / d2[i][k]
            } else {
                d2[i][k].powf(-power)
            };
            inv_buf[i] = inv;
            total += inv;
        }
        if total.is_finite() {
            for i in 0..c {
                u[i][k] = inv_buf[i] / total;
            }
        } else {
            // a distance so small its inverse overflows acts as zero
            let near = (0..c).find(|&i| inv_buf[i].is_infinite()).unwrap_or(0);
            for (i, row) in u.iter_mut().enumerate() {
                row[k] = if i == near { 1.0 } else { 0.0 };
            }
        }
    }
}

/// Clusters `data` (N points of dimension d) into `cfg.n_clusters` fuzzy
/// clusters.
///
/// Starts from memberships computed against `c` distinct data points drawn
/// with the seeded generator, then alternates center and membership updates.
/// Each recorded objective is evaluated on the current memberships against
/// the freshly updated centers, so the history is non-increasing. A point
/// sitting exactly on a center is hard-assigned to the lowest-index such
/// center.
pub fn fcm_cluster<P: AsRef<[f64]>>(data: &[P], cfg: &FcmConfig) -> Result<FcmResult> {
    cfg.validate()?;
    let n = data.len();
    let c = cfg.n_clusters;
    let dim = data.first().map_or(0, |p| p.as_ref().len());
    if dim == 0 {
        return Err(Error::InvalidInput("fcm needs non-empty points".into()));
    }
    if data.iter().any(|p| p.as_ref().len() != dim) {
        return Err(Error::ShapeMismatch("points of differing dimension".into()));
    }
    if data.iter().flat_map(|p| p.as_ref()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("fcm data must be finite".into()));
    }
    if !has_distinct_points(data, c) {
        return Err(Error::DegenerateData(format!(
            "fewer than {c} distinct points among {n}"
        )));
    }

    let m = cfg.exponent_m;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centers: Vec<Vec<f64>> = pick_distinct(data, c, &mut rng)
        .into_iter()
        .map(|k| data[k].as_ref().to_vec())
        .collect();
    let mut d2 = vec![vec![0.0; n]; c];
    let mut u = vec![vec![0.0; n]; c];
    let mut inv_buf = vec![0.0; c];
    fill_sq_dists(data, &centers, &mut d2);
    update_memberships(&d2, m, &mut u, &mut inv_buf);

    let mut history: Vec<f64> = Vec::new();
    let mut iterations_run = 0;

    for _ in 0..cfg.max_iter {
        // centers from current memberships
        for (i, center) in centers.iter_mut().enumerate() {
            let mut num = vec![0.0; dim];
            let mut den = 0.0;
            for (k, p) in data.iter().enumerate() {
                let w = pow_m(u[i][k], m);
                den += w;
                for (acc, x) in num.iter_mut().zip(p.as_ref()) {
                    *acc += w * x;
                }
            }
            if den > 0.0 {
                for (cj, nj) in center.iter_mut().zip(num) {
                    *cj = nj / den;
                }
            }
        }
        let mut objective = 0.0;
        for i in 0..c {
            for (k, p) in data.iter().enumerate() {
                let dd = sq_dist(p.as_ref(), &centers[i]);
                d2[i][k] = dd;
                objective += pow_m(u[i][k], m) * dd;
            }
        }
        iterations_run += 1;
        if let Some(&prev) = history.last() {
            if objective > prev {
                // Converged to rounding noise; keep the previous memberships.
                break;
            }
        }
        history.push(objective);

        update_memberships(&d2, m, &mut u, &mut inv_buf);

        if history.len() >= 2 {
            let prev = history[history.len() - 2];
            if prev - objective < cfg.min_improvement {
                break;
            }
        }
    }

    Ok(FcmResult {
        centers,
        memberships: u,
        objective_history: history,
        iterations_run,
    })
}

/// Hard assignment of a two-cluster result to a mask.
///
/// Pixel `k` is `true` when cluster 0 holds the larger membership (ties go to
/// cluster 0). The second value is the per-pixel dominant cluster index.
pub fn memberships_to_mask(
    result: &FcmResult,
    width: usize,
    height: usize,
) -> Result<(BinaryMask, Vec<usize>)> {
    if result.n_clusters() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "mask conversion needs 2 clusters, got {}",
            result.n_clusters()
        )));
    }
    let n = result.n_points();
    if n != width * height {
        return Err(Error::ShapeMismatch(format!(
            "{n} memberships for a {width}x{height} mask"
        )));
    }
    let labels: Vec<usize> = (0..n).map(|k| result.dominant_cluster(k)).collect();
    let mask = BinaryMask::new(width, height, labels.iter().map(|&l| l == 0).collect())?;
    Ok((mask, labels))
}
