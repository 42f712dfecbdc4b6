//! Particle swarm search over the nine elements of a color transform.
//!
//! Each particle's position is a row-major 3×3 matrix. Its cost is the
//! fraction of pixels a two-cluster fuzzy c-means segmentation of the
//! transformed image gets wrong against a ground-truth mask. Inertia and the
//! two acceleration coefficients are interpolated linearly across the run;
//! velocities and positions are hard-clamped to their intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorspace::{QuadraticVariant, TransformMatrix, TransformMeta, TransformMode};
use crate::dataset::{normalize_pixel, BinaryMask, RgbImage};
use crate::fcm::{fcm_cluster, FcmConfig};
use crate::{Error, Result};

pub const DIM: usize = 9;
pub type Position = [f64; DIM];

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub n_particles: usize,
    pub n_iterations: usize,
    pub inertia_init: f64,
    pub inertia_final: f64,
    pub c1_init: f64,
    pub c1_final: f64,
    pub c2_init: f64,
    pub c2_final: f64,
    pub position_bounds: Interval,
    pub velocity_bounds: Interval,
    /// Position step multiplier applied to the velocity.
    pub c_step: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            n_particles: 15,
            n_iterations: 30,
            inertia_init: 0.8,
            inertia_final: 0.4,
            c1_init: 1.75,
            c1_final: 0.5,
            c2_init: 0.5,
            c2_final: 1.75,
            position_bounds: Interval::new(-5.0, 5.0),
            velocity_bounds: Interval::new(-0.5, 0.5),
            c_step: 1.0,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidConfig("need at least one particle".into()));
        }
        if self.n_iterations == 0 {
            return Err(Error::InvalidConfig("need at least one iteration".into()));
        }
        if !self.position_bounds.is_valid() || !self.velocity_bounds.is_valid() {
            return Err(Error::InvalidConfig(
                "bounds must be finite, non-empty intervals".into(),
            ));
        }
        let coeffs = [
            self.inertia_init,
            self.inertia_final,
            self.c1_init,
            self.c1_final,
            self.c2_init,
            self.c2_final,
            self.c_step,
        ];
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig(
                "swarm coefficients must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Inertia weight and acceleration coefficients at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub inertia: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Linear interpolation of the coefficient schedule; iteration `t` of
/// `n_iterations` (a single-iteration run uses the initial values).
pub fn schedule_coefficients(cfg: &PsoConfig, t: usize) -> Coefficients {
    let frac = if cfg.n_iterations <= 1 {
        0.0
    } else {
        t as f64 / (cfg.n_iterations - 1) as f64
    };
    let lerp = |a: f64, b: f64| a + (b - a) * frac;
    Coefficients {
        inertia: lerp(cfg.inertia_init, cfg.inertia_final),
        c1: lerp(cfg.c1_init, cfg.c1_final),
        c2: lerp(cfg.c2_init, cfg.c2_final),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Position,
    pub velocity: Position,
    pub best_position: Position,
    pub best_cost: f64,
}

impl Particle {
    pub fn at_rest(position: Position) -> Self {
        Self {
            position,
            velocity: [0.0; DIM],
            best_position: position,
            best_cost: f64::INFINITY,
        }
    }

    /// Records a cost for the current position, updating the personal best.
    pub fn observe(&mut self, cost: f64) {
        if cost < self.best_cost {
            self.best_cost = cost;
            self.best_position = self.position;
        }
    }
}

/// New velocity: inertia plus cognitive and social pulls with fresh uniform
/// [0, 1) weights per component, clamped to `bounds`.
pub fn update_velocity<R: Rng + ?Sized>(
    p: &Particle,
    gbest: &Position,
    coeffs: Coefficients,
    bounds: Interval,
    rng: &mut R,
) -> Position {
    let r1: Position = std::array::from_fn(|_| rng.gen::<f64>());
    let r2: Position = std::array::from_fn(|_| rng.gen::<f64>());
    std::array::from_fn(|d| {
        let v = coeffs.inertia * p.velocity[d]
            + coeffs.c1 * r1[d] * (p.best_position[d] - p.position[d])
            + coeffs.c2 * r2[d] * (gbest[d] - p.position[d]);
        bounds.clamp(v)
    })
}

/// `x + c_step · v`, clamped to `bounds`.
pub fn update_position(p: &Particle, c_step: f64, bounds: Interval) -> Position {
    std::array::from_fn(|d| bounds.clamp(p.position[d] + c_step * p.velocity[d]))
}

/// Outcome of a generic swarm run.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmOutcome {
    pub best_position: Position,
    pub best_cost: f64,
    /// Global best after each iteration.
    pub gbest_history: Vec<f64>,
    pub particles: Vec<Particle>,
}

fn particle_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Minimizes `cost` over the 9-dimensional box.
///
/// Every iteration evaluates all particles (concurrently), updates personal
/// and global bests, records the global best, then moves the swarm. Each
/// particle draws from its own stream derived from the seed, so the result
/// does not depend on thread scheduling.
pub fn minimize<F>(cfg: &PsoConfig, cost: F) -> Result<SwarmOutcome>
where
    F: Fn(&Position) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let mut rngs: Vec<ChaCha8Rng> = (0..cfg.n_particles)
        .map(|i| particle_rng(cfg.seed, i))
        .collect();
    let mut swarm: Vec<Particle> = rngs
        .iter_mut()
        .map(|rng| {
            let pos: Position = std::array::from_fn(|_| {
                rng.gen_range(cfg.position_bounds.lo..=cfg.position_bounds.hi)
            });
            Particle::at_rest(pos)
        })
        .collect();

    let mut gbest_position = swarm[0].position;
    let mut gbest_cost = f64::INFINITY;
    let mut history = Vec::with_capacity(cfg.n_iterations);

    for t in 0..cfg.n_iterations {
        let costs: Vec<f64> = swarm
            .par_iter()
            .map(|p| cost(&p.position))
            .collect::<Result<_>>()?;
        for (p, &c) in swarm.iter_mut().zip(&costs) {
            if c.is_nan() {
                return Err(Error::InvalidInput("cost function returned NaN".into()));
            }
            p.observe(c);
            if p.best_cost < gbest_cost {
                gbest_cost = p.best_cost;
                gbest_position = p.best_position;
            }
        }
        history.push(gbest_cost);

        if t + 1 < cfg.n_iterations {
            let coeffs = schedule_coefficients(cfg, t);
            for (p, rng) in swarm.iter_mut().zip(rngs.iter_mut()) {
                p.velocity = update_velocity(p, &gbest_position, coeffs, cfg.velocity_bounds, rng);
                p.position = update_position(p, cfg.c_step, cfg.position_bounds);
            }
        }
    }

    Ok(SwarmOutcome {
        best_position: gbest_position,
        best_cost: gbest_cost,
        gbest_history: history,
        particles: swarm,
    })
}

/// How a candidate matrix is scored against a ground-truth mask.
#[derive(Debug, Clone)]
pub struct SegmentationObjective<'a> {
    image: &'a RgbImage,
    target: &'a BinaryMask,
    pub mode: TransformMode,
    pub quadratic_variant: QuadraticVariant,
    pub fcm: FcmConfig,
    /// Evaluate every `stride`-th row and column only. 1 uses all pixels.
    pub stride: usize,
}

impl<'a> SegmentationObjective<'a> {
    pub fn new(image: &'a RgbImage, target: &'a BinaryMask) -> Result<Self> {
        if !image.same_shape(target) {
            return Err(Error::ShapeMismatch(format!(
                "image is {}x{} but target mask is {}x{}",
                image.width(),
                image.height(),
                target.width(),
                target.height()
            )));
        }
        if image.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            image,
            target,
            mode: TransformMode::Linear,
            quadratic_variant: QuadraticVariant::AsPrinted,
            fcm: FcmConfig::default(),
            stride: 1,
        })
    }

    pub fn with_mode(mut self, mode: TransformMode, variant: QuadraticVariant) -> Self {
        self.mode = mode;
        self.quadratic_variant = variant;
        self
    }

    pub fn with_fcm(mut self, fcm: FcmConfig) -> Self {
        self.fcm = fcm;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    fn grid(&self) -> impl Iterator<Item = usize> + '_ {
        let w = self.image.width();
        let s = self.stride;
        (0..self.image.height())
            .step_by(s)
            .flat_map(move |y| (0..w).step_by(s).map(move |x| y * w + x))
    }

    /// Segmentation error of the matrix encoded by `position`.
    pub fn cost(&self, position: &Position) -> Result<f64> {
        let w = TransformMatrix::from_position(position, self.mode, self.quadratic_variant);
        let pixels = self.image.pixels();
        let truth = self.target.values();
        let idx: Vec<usize> = self.grid().collect();
        let features: Vec<[f64; 3]> = idx
            .iter()
            .map(|&i| w.apply(normalize_pixel(pixels[i])))
            .collect();
        let fcm_cfg = FcmConfig {
            n_clusters: 2,
            ..self.fcm
        };
        let result = fcm_cluster(&features, &fcm_cfg)?;
        // Cluster 0 dominant -> "class A". Score both class→skin labelings.
        let mismatches_if_a_is_skin = idx
            .iter()
            .enumerate()
            .filter(|&(k, &i)| (result.dominant_cluster(k) == 0) != truth[i])
            .count();
        let n = idx.len();
        let mismatches = mismatches_if_a_is_skin.min(n - mismatches_if_a_is_skin);
        Ok(mismatches as f64 / n as f64)
    }
}

/// Scores one candidate matrix (row-major 9-vector) by FCM segmentation error.
pub fn colorspace_fitness(
    position: &Position,
    image: &RgbImage,
    target: &BinaryMask,
    mode: TransformMode,
    quadratic_variant: QuadraticVariant,
    fcm_cfg: &FcmConfig,
) -> Result<f64> {
    SegmentationObjective::new(image, target)?
        .with_mode(mode, quadratic_variant)
        .with_fcm(*fcm_cfg)
        .cost(position)
}

/// Result of the color-space search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoResult {
    pub best_matrix: TransformMatrix,
    pub best_cost: f64,
    pub gbest_history: Vec<f64>,
    pub config_echo: PsoConfig,
}

/// Searches for the transform matrix whose FCM segmentation best matches
/// `objective`'s target mask.
pub fn optimize_objective(
    objective: &SegmentationObjective<'_>,
    cfg: &PsoConfig,
) -> Result<PsoResult> {
    let outcome = minimize(cfg, |pos| objective.cost(pos))?;
    let mut best_matrix = TransformMatrix::from_position(
        &outcome.best_position,
        objective.mode,
        objective.quadratic_variant,
    );
    best_matrix.meta = Some(TransformMeta {
        seed: cfg.seed,
        final_cost: outcome.best_cost,
        iterations: cfg.n_iterations,
        gbest_history: outcome.gbest_history.clone(),
    });
    Ok(PsoResult {
        best_matrix,
        best_cost: outcome.best_cost,
        gbest_history: outcome.gbest_history,
        config_echo: *cfg,
    })
}

pub fn optimize(
    image: &RgbImage,
    target: &BinaryMask,
    cfg: &PsoConfig,
    mode: TransformMode,
    quadratic_variant: QuadraticVariant,
    fcm_cfg: &FcmConfig,
) -> Result<PsoResult> {
    let objective = SegmentationObjective::new(image, target)?
        .with_mode(mode, quadratic_variant)
        .with_fcm(*fcm_cfg);
    optimize_objective(&objective, cfg)
}
