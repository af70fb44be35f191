//! Genetic search over variable-size centroid sets, with Lloyd refinement.
//!
//! Each individual is a centroid set. Offspring are built by tournament
//! selection, a union crossover that greedily drops the closest centroid
//! pairs back down to a target size, Gaussian jitter and a k mutation that
//! adds a data row or drops a centroid. Every individual is refined and then
//! run to its Lloyd fixpoint before scoring, so fitness always describes a
//! finalized clustering and the finalized centroids are what gets inherited.
//!
//! Randomness comes from one ChaCha stream per `(generation, slot)`, seeded
//! from the configured seed, so results do not depend on how rayon schedules
//! the work.

use log::warn;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::lloyd;
use super::{fitness, sse_to_centroids, ClusterError, Clustering};
use crate::matrix::{squared_distance, Matrix};

/// Lloyd iterations allowed when carrying an individual to its fixpoint.
const FINALIZE_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub k_min: usize,
    /// `None` means `min(60, max(2, round(sqrt(n))))`, capped at `n`.
    pub k_max: Option<usize>,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub centroid_mutation_prob: f64,
    pub centroid_mutation_sigma: f64,
    pub k_mutation_prob: f64,
    pub refinement_iterations: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            generations: 50,
            k_min: 2,
            k_max: None,
            tournament_size: 2,
            elitism_count: 1,
            centroid_mutation_prob: 0.1,
            centroid_mutation_sigma: 0.05,
            k_mutation_prob: 0.1,
            refinement_iterations: 3,
            seed: 0,
        }
    }
}

impl GaConfig {
    /// Upper bound on k for a dataset of `n` records.
    pub fn effective_k_max(&self, n: usize) -> usize {
        self.k_max
            .unwrap_or_else(|| ((n as f64).sqrt().round() as usize).clamp(2, 60))
            .min(n)
    }

    fn validate(&self, n: usize) -> Result<usize, ClusterError> {
        let bad = |m: String| Err(ClusterError::InvalidConfig(m));
        if n < self.k_min {
            return Err(ClusterError::TooFewRecords {
                n,
                k_min: self.k_min,
            });
        }
        let k_max = self.effective_k_max(n);
        if self.k_min < 2 {
            return bad(format!("k_min must be >= 2, got {}", self.k_min));
        }
        if k_max < self.k_min {
            return bad(format!("k_max {k_max} is below k_min {}", self.k_min));
        }
        if self.population_size < 2 {
            return bad("population_size must be >= 2".into());
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism_count must be below population_size".into());
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be >= 1".into());
        }
        for (name, p) in [
            ("centroid_mutation_prob", self.centroid_mutation_prob),
            ("k_mutation_prob", self.k_mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.centroid_mutation_sigma >= 0.0 && self.centroid_mutation_sigma.is_finite()) {
            return bad("centroid_mutation_sigma must be finite and >= 0".into());
        }
        Ok(k_max)
    }
}

/// Result of [`genetic_cluster`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaRun {
    pub clustering: Clustering,
    /// Score the search ranked by: Davies–Bouldin fitness, or `1 / (1 + SSE)`
    /// when k is pinned.
    pub fitness: f64,
    /// Best fitness in the population after initialization and after each
    /// generation.
    pub best_fitness_history: Vec<f64>,
    /// Fitness of every individual of the initial population.
    pub initial_fitness: Vec<f64>,
    /// Set when all records are identical and no search was possible.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
struct Individual {
    clustering: Clustering,
    fitness: f64,
}

struct Search<'a> {
    data: &'a Matrix,
    cfg: &'a GaConfig,
    k_max: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    jitter: Normal<f64>,
}

/// Clusters `data`, choosing k in `[k_min, k_max]` by Davies–Bouldin
/// fitness. When the range pins a single k the search scores individuals by
/// `1 / (1 + SSE)` instead. Deterministic for a fixed configuration.
pub fn genetic_cluster(data: &Matrix, cfg: &GaConfig) -> Result<GaRun, ClusterError> {
    let n = data.rows();
    if n == 0 {
        return Err(ClusterError::NoRecords);
    }
    if !data.is_finite() {
        return Err(ClusterError::NonFinite);
    }
    let k_max = cfg.validate(n)?;

    if (1..n).all(|i| data.row(i) == data.row(0)) {
        warn!(
            "all {n} records are identical; returning k = {} without search",
            cfg.k_min
        );
        return Ok(degenerate(data, cfg.k_min));
    }

    let d = data.cols();
    let mut lower = vec![f64::INFINITY; d];
    let mut upper = vec![f64::NEG_INFINITY; d];
    for row in data.iter_rows() {
        for j in 0..d {
            lower[j] = lower[j].min(row[j]);
            upper[j] = upper[j].max(row[j]);
        }
    }
    let search = Search {
        data,
        cfg,
        k_max,
        lower,
        upper,
        jitter: Normal::new(0.0, cfg.centroid_mutation_sigma).expect("sigma validated"),
    };

    let mut population: Vec<Individual> = (0..cfg.population_size)
        .into_par_iter()
        .map(|slot| search.random_individual(&mut stream(cfg.seed, 0, slot)))
        .collect();
    let initial_fitness: Vec<f64> = population.iter().map(|i| i.fitness).collect();
    let mut history = vec![best_index(&population).1];

    for generation in 1..=cfg.generations {
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| {
            population[b]
                .fitness
                .total_cmp(&population[a].fitness)
                .then(a.cmp(&b))
        });
        let parents = &population;
        let offspring: Vec<Individual> = (cfg.elitism_count..cfg.population_size)
            .into_par_iter()
            .map(|slot| {
                let mut rng = stream(cfg.seed, generation as u64, slot);
                let a = search.tournament(parents, &mut rng);
                let b = search.tournament(parents, &mut rng);
                let mut genome = search.crossover(
                    &parents[a].clustering.centroids,
                    &parents[b].clustering.centroids,
                    &mut rng,
                );
                genome = search.mutate(genome, &mut rng);
                search.evaluate(genome)
            })
            .collect();
        let mut next: Vec<Individual> = ranked[..cfg.elitism_count]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        next.extend(offspring);
        population = next;
        history.push(best_index(&population).1);
    }

    let (best, best_fitness) = best_index(&population);
    let best = population.swap_remove(best);
    Ok(GaRun {
        clustering: best.clustering,
        fitness: best_fitness,
        best_fitness_history: history,
        initial_fitness,
        degenerate: false,
    })
}

fn stream(seed: u64, generation: u64, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation << 32) | slot as u64);
    rng
}

/// Highest fitness, lowest index on ties.
fn best_index(population: &[Individual]) -> (usize, f64) {
    population
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bf), (i, ind)| {
            if ind.fitness > bf {
                (i, ind.fitness)
            } else {
                (bi, bf)
            }
        })
}

fn degenerate(data: &Matrix, k: usize) -> GaRun {
    let n = data.rows();
    let assignments = (0..n).map(|i| if i < k { i } else { 0 }).collect();
    let centroids = data.select_rows(&vec![0; k]);
    GaRun {
        clustering: Clustering {
            assignments,
            centroids,
        },
        fitness: 0.0,
        best_fitness_history: Vec::new(),
        initial_fitness: Vec::new(),
        degenerate: true,
    }
}

impl Search<'_> {
    fn random_individual(&self, rng: &mut ChaCha8Rng) -> Individual {
        let k = rng.random_range(self.cfg.k_min..=self.k_max);
        let mut rows = sample(rng, self.data.rows(), k).into_vec();
        rows.sort_unstable();
        self.evaluate(self.data.select_rows(&rows))
    }

    fn evaluate(&self, genome: Matrix) -> Individual {
        // Refinement followed by finalization to a fixpoint is one Lloyd
        // run: the centroid sequence is the same either way.
        let steps = self.cfg.refinement_iterations + FINALIZE_ITERATIONS;
        let clustering = lloyd(self.data, genome, steps, 0.0, false).clustering;
        let fitness = if self.cfg.k_min == self.k_max {
            // Nothing to select: with k pinned, score the partition itself.
            let sse = sse_to_centroids(self.data, &clustering.assignments, &clustering.centroids);
            1.0 / (1.0 + sse)
        } else {
            fitness(self.data, &clustering).unwrap_or(0.0)
        };
        Individual {
            clustering,
            fitness,
        }
    }

    fn tournament(&self, population: &[Individual], rng: &mut ChaCha8Rng) -> usize {
        let mut best = rng.random_range(0..population.len());
        for _ in 1..self.cfg.tournament_size {
            let c = rng.random_range(0..population.len());
            let (fc, fb) = (population[c].fitness, population[best].fitness);
            if fc > fb || (fc == fb && c < best) {
                best = c;
            }
        }
        best
    }

    /// Union of both parents' centroids, reduced to a size drawn between the
    /// parents' sizes by repeatedly dropping the later member of the closest
    /// pair.
    fn crossover(&self, a: &Matrix, b: &Matrix, rng: &mut ChaCha8Rng) -> Matrix {
        let (ka, kb) = (a.rows(), b.rows());
        let target = rng
            .random_range(ka.min(kb)..=ka.max(kb))
            .clamp(self.cfg.k_min, self.k_max);
        let pool: Vec<&[f64]> = a.iter_rows().chain(b.iter_rows()).collect();
        let m = pool.len();
        let mut dist = vec![0.0; m * m];
        for i in 0..m {
            for j in i + 1..m {
                dist[i * m + j] = squared_distance(pool[i], pool[j]);
            }
        }
        let mut alive = vec![true; m];
        for _ in target..m {
            let mut pick = (usize::MAX, f64::INFINITY);
            for i in (0..m).filter(|&i| alive[i]) {
                for j in (i + 1..m).filter(|&j| alive[j]) {
                    if dist[i * m + j] < pick.1 {
                        pick = (j, dist[i * m + j]);
                    }
                }
            }
            alive[pick.0] = false;
        }
        let kept: Vec<&[f64]> = (0..m).filter(|&i| alive[i]).map(|i| pool[i]).collect();
        Matrix::from_rows(&kept).expect("equal widths")
    }

    fn mutate(&self, mut genome: Matrix, rng: &mut ChaCha8Rng) -> Matrix {
        for c in 0..genome.rows() {
            if rng.random_bool(self.cfg.centroid_mutation_prob) {
                for (j, v) in genome.row_mut(c).iter_mut().enumerate() {
                    *v = (*v + self.jitter.sample(rng)).clamp(self.lower[j], self.upper[j]);
                }
            }
        }
        if self.cfg.k_min < self.k_max && rng.random_bool(self.cfg.k_mutation_prob) {
            let k = genome.rows();
            let grow = match (k > self.cfg.k_min, k < self.k_max) {
                (true, true) => rng.random_bool(0.5),
                (can_shrink, _) => !can_shrink,
            };
            let mut rows: Vec<Vec<f64>> = genome.iter_rows().map(<[f64]>::to_vec).collect();
            if grow {
                let r = rng.random_range(0..self.data.rows());
                rows.push(self.data.row(r).to_vec());
            } else {
                rows.remove(rng.random_range(0..k));
            }
            genome = Matrix::from_rows(&rows).expect("equal widths");
        }
        genome
    }
}
