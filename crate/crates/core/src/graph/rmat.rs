use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;

/// Recursive-matrix generator parameters with the Graph500 quadrant
/// probabilities (`a = 0.57, b = c = 0.19, d = 0.05`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmatParams {
    pub scale: u32,
    pub avg_degree: u32,
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl RmatParams {
    pub fn graph500(scale: u32, avg_degree: u32, seed: u64) -> Self {
        Self { scale, avg_degree, seed, a: 0.57, b: 0.19, c: 0.19 }
    }

    pub fn vertex_count(&self) -> u64 {
        1u64 << self.scale
    }

    /// Edge draws before deduplication.
    pub fn edge_draws(&self) -> u64 {
        self.vertex_count() * self.avg_degree as u64
    }

    pub fn generate(&self) -> Graph {
        assert!(self.scale <= 31, "R-MAT scale {} does not fit 32-bit ids", self.scale);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (ab, abc) = (self.a + self.b, self.a + self.b + self.c);
        let draws = self.edge_draws() as usize;
        let mut raw = Vec::with_capacity(draws);
        for _ in 0..draws {
            let (mut u, mut v) = (0u32, 0u32);
            for _ in 0..self.scale {
                let r: f64 = rng.gen();
                let (bu, bv) = if r < self.a {
                    (0, 0)
                } else if r < ab {
                    (0, 1)
                } else if r < abc {
                    (1, 0)
                } else {
                    (1, 1)
                };
                u = u << 1 | bu;
                v = v << 1 | bv;
            }
            raw.push((u, v));
        }
        Graph::from_edges(self.vertex_count() as u32, raw, true).expect("R-MAT ids in range")
    }
}

/// Directed R-MAT graph with `2^scale` vertices and `2^scale * avg_degree`
/// edge draws, normalized (duplicates and self-loops removed).
pub fn rmat_generate(scale: u32, avg_degree: u32, seed: u64) -> Graph {
    RmatParams::graph500(scale, avg_degree, seed).generate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_graph_bounds() {
        let g = rmat_generate(4, 4, 7);
        assert_eq!(g.n, 16);
        assert!(g.num_edges() <= 64);
        assert!(g.num_edges() > 0);
    }

    #[test]
    fn deterministic_for_seed() {
        assert_eq!(rmat_generate(8, 4, 3), rmat_generate(8, 4, 3));
        assert_ne!(rmat_generate(8, 4, 3).edges, rmat_generate(8, 4, 4).edges);
    }

    #[test]
    fn rmat_21_86_dimensions() {
        let p = RmatParams::graph500(21, 86, 0);
        assert_eq!(p.vertex_count(), 2_097_152);
        // 180.4M edges before deduplication.
        assert_eq!(p.edge_draws(), 180_355_072);
    }

    #[test]
    fn skewed_towards_low_ids() {
        let g = rmat_generate(10, 16, 1);
        let deg = g.degrees().out_degree;
        let low: u32 = deg[..512].iter().sum();
        let high: u32 = deg[512..].iter().sum();
        assert!(low > 2 * high);
    }
}
