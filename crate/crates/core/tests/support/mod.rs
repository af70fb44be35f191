//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use ontoclust::{Concept, DataMatrix, Matrix, Ontology, Parent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const TRO: &str = include_str!("../../fixtures/tro.ontology");
pub const TR_SCHEMA: &str = include_str!("../../fixtures/tr.schema");

/// Travel review attribute columns in their CSV order.
pub const TR_COLUMNS: [&str; 24] = [
    "churches",
    "resorts",
    "beaches",
    "parks",
    "theatres",
    "museums",
    "malls",
    "zoos",
    "restaurants",
    "pubs/bars",
    "local services",
    "burger/pizza shops",
    "hotels/other lodgings",
    "juice bars",
    "art galleries",
    "dance clubs",
    "swimming pools",
    "gyms",
    "bakeries",
    "beauty & spas",
    "cafes",
    "view points",
    "monuments",
    "gardens",
];

pub fn tro() -> Ontology {
    Ontology::parse(TRO).unwrap()
}

/// Planted-structure generator for travel-review-shaped data.
///
/// Every record draws one latent mean rating per top-level TRO concept
/// (Attraction, Facility), uniformly from `[0.5, 4.5]`. Each leaf rating is
/// the latent mean of its top-level ancestor plus independent Gaussian
/// noise of standard deviation `leaf_noise`, clamped to `[0, 5]` and
/// rounded to two decimals. The signal therefore lives at the group-mean
/// level: siblings share it, and averaging them shrinks only the noise. The
/// first column is a sequential user id.
#[derive(Debug, Clone, Copy)]
pub struct Planted {
    pub records: usize,
    pub leaf_noise: f64,
    pub seed: u64,
}

impl Planted {
    pub fn csv(&self) -> String {
        let o = tro();
        let top = o.depth();
        let groups: Vec<&str> = o
            .concepts_at_level(top)
            .unwrap()
            .iter()
            .map(|c| c.name.as_str())
            .collect();
        // Column -> index of its top-level ancestor.
        let group_of: HashMap<&str, usize> = o
            .concepts_at_level(1)
            .unwrap()
            .iter()
            .map(|leaf| {
                let mut c: &Concept = leaf;
                while c.level < top {
                    let Parent::Concept(p) = &c.parent else {
                        unreachable!()
                    };
                    c = o.get(p).unwrap();
                }
                let g = groups.iter().position(|g| *g == c.name).unwrap();
                (leaf.column.as_deref().unwrap(), g)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.leaf_noise).unwrap();
        let mut out = String::from("user id");
        for c in TR_COLUMNS {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in 0..self.records {
            let latent: Vec<f64> = groups.iter().map(|_| rng.random_range(0.5..4.5)).collect();
            out.push_str(&(r + 1).to_string());
            for c in TR_COLUMNS {
                let v = latent[group_of[c]] + noise.sample(&mut rng);
                out.push_str(&format!(",{:.2}", v.clamp(0.0, 5.0)));
            }
            out.push('\n');
        }
        out
    }
}

/// Random level-stratified ontology with `leaves` leaves bound to columns
/// `c0..`, and the column permutation used to bind them.
pub fn random_ontology(rng: &mut ChaCha8Rng, leaves: usize, depth: usize) -> Ontology {
    assert!(leaves >= 1 && depth >= 1);
    // Level sizes shrink (weakly) going up, each >= 1.
    let mut sizes = vec![leaves];
    for _ in 1..depth {
        let below = *sizes.last().unwrap();
        sizes.push(rng.random_range(1..=below));
    }
    let mut columns: Vec<usize> = (0..leaves).collect();
    for i in (1..leaves).rev() {
        columns.swap(i, rng.random_range(0..=i));
    }
    // names[level-1][i]
    let names: Vec<Vec<String>> = sizes
        .iter()
        .enumerate()
        .map(|(l, &s)| (0..s).map(|i| format!("L{}_{i}", l + 1)).collect())
        .collect();
    let mut concepts = Vec::new();
    for (l, &size) in sizes.iter().enumerate() {
        let parent_size = sizes.get(l + 1).copied();
        // Surjective assignment onto the level above: first cover every
        // parent, then fill randomly.
        let parents: Vec<usize> = match parent_size {
            Some(p) => {
                let mut v: Vec<usize> = (0..p).collect();
                v.extend((p..size).map(|_| rng.random_range(0..p)));
                for i in (1..v.len()).rev() {
                    v.swap(i, rng.random_range(0..=i));
                }
                v
            }
            None => vec![0; size],
        };
        for i in 0..size {
            concepts.push(Concept {
                name: names[l][i].clone(),
                level: l + 1,
                parent: match parent_size {
                    Some(_) => Parent::Concept(names[l + 1][parents[i]].clone()),
                    None => Parent::Root,
                },
                column: (l == 0).then(|| format!("c{}", columns[i])),
            });
        }
    }
    // Shuffle declaration order so forward references occur.
    for i in (1..concepts.len()).rev() {
        concepts.swap(i, rng.random_range(0..=i));
    }
    Ontology::from_concepts(concepts).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DataMatrix {
    let data = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
    DataMatrix::new(
        (0..cols).map(|j| format!("c{j}")).collect(),
        Matrix::new(rows, cols, data).unwrap(),
    )
    .unwrap()
}

/// Recursive-average oracle: a leaf reads its column; any other concept is
/// the plain mean of its children's oracle values. Written against the
/// concept list only, without the library's level machinery.
pub fn oracle_value(o: &Ontology, m: &DataMatrix, record: usize, concept: &str) -> f64 {
    let c = o.concepts().iter().find(|c| c.name == concept).unwrap();
    if let Some(col) = &c.column {
        let j = m.column_names().iter().position(|n| n == col).unwrap();
        return m.values().get(record, j);
    }
    let kids: Vec<&Concept> = o
        .concepts()
        .iter()
        .filter(|k| k.parent == Parent::Concept(c.name.clone()))
        .collect();
    let mut total = 0.0;
    for k in &kids {
        total += oracle_value(o, m, record, &k.name);
    }
    total / kids.len() as f64
}

/// Straight double-loop SSE: means first, then squared deviations.
pub fn naive_sse(points: &[Vec<f64>], assignments: &[usize]) -> f64 {
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let d = points.first().map_or(0, Vec::len);
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<&Vec<f64>> = points
            .iter()
            .zip(assignments)
            .filter(|(_, &a)| a == c)
            .map(|(p, _)| p)
            .collect();
        for j in 0..d {
            let mean = members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64;
            for p in &members {
                total += (p[j] - mean) * (p[j] - mean);
            }
        }
    }
    total
}

/// Minimum SSE over every partition of the points into exactly `k`
/// non-empty blocks, by restricted-growth-string enumeration.
pub fn brute_force_min_sse(points: &[Vec<f64>], k: usize) -> f64 {
    fn go(
        i: usize,
        used: usize,
        k: usize,
        labels: &mut Vec<usize>,
        points: &[Vec<f64>],
        best: &mut f64,
    ) {
        let n = points.len();
        if n - i < k - used {
            return;
        }
        if i == n {
            if used == k {
                *best = best.min(naive_sse(points, labels));
            }
            return;
        }
        for label in 0..=used.min(k - 1) {
            labels[i] = label;
            go(i + 1, used.max(label + 1), k, labels, points, best);
        }
    }
    let mut best = f64::INFINITY;
    let mut labels = vec![0; points.len()];
    go(0, 0, k, &mut labels, points, &mut best);
    best
}

/// Every `k`-subset of `0..n`, in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}
