use rand::Rng;

use super::engine::Individual;

/// Closed interval for one real-coded gene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const UNIT: Bounds = Bounds { lower: 0.0, upper: 1.0 };

    pub fn new(lower: f64, upper: f64) -> Self {
        assert!(lower <= upper, "empty bounds [{lower}, {upper}]");
        Bounds { lower, upper }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }
}

/// Draws two members uniformly and keeps the better one: lower front rank,
/// then larger crowding distance, then the first draw.
pub fn binary_tournament<G, R: Rng + ?Sized>(population: &[Individual<G>], rng: &mut R) -> usize {
    assert!(!population.is_empty(), "tournament over an empty population");
    let a = rng.random_range(0..population.len());
    let b = rng.random_range(0..population.len());
    let (x, y) = (&population[a], &population[b]);
    if y.front_rank < x.front_rank || (y.front_rank == x.front_rank && y.crowding > x.crowding) {
        b
    } else {
        a
    }
}

/// Simulated binary crossover, applied in place gene by gene with
/// probability 0.5 per gene; children are clamped to `bounds`.
pub fn sbx_crossover<R: Rng + ?Sized>(
    a: &mut [f64],
    b: &mut [f64],
    bounds: &[Bounds],
    eta: f64,
    rng: &mut R,
) {
    debug_assert_eq!(a.len(), b.len());
    for k in 0..a.len() {
        if !rng.random_bool(0.5) {
            continue;
        }
        let (x1, x2) = (a[k], b[k]);
        if (x1 - x2).abs() <= 1e-14 {
            continue;
        }
        let u: f64 = rng.random();
        let beta_q = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
        };
        let (lo, hi) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
        let mut c1 = bounds[k].clamp(0.5 * ((lo + hi) - beta_q * (hi - lo)));
        let mut c2 = bounds[k].clamp(0.5 * ((lo + hi) + beta_q * (hi - lo)));
        if rng.random_bool(0.5) {
            std::mem::swap(&mut c1, &mut c2);
        }
        a[k] = c1;
        b[k] = c2;
    }
}

/// Bounded polynomial mutation; each gene mutates with `per_gene` probability.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    x: &mut [f64],
    bounds: &[Bounds],
    eta: f64,
    per_gene: f64,
    rng: &mut R,
) {
    let power = 1.0 / (eta + 1.0);
    for k in 0..x.len() {
        if !rng.random_bool(per_gene.clamp(0.0, 1.0)) {
            continue;
        }
        let Bounds { lower, upper } = bounds[k];
        let span = upper - lower;
        if span <= 0.0 {
            continue;
        }
        let delta1 = (x[k] - lower) / span;
        let delta2 = (upper - x[k]) / span;
        let u: f64 = rng.random();
        let delta_q = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - delta1).powf(eta + 1.0);
            v.powf(power) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - delta2).powf(eta + 1.0);
            1.0 - v.powf(power)
        };
        x[k] = bounds[k].clamp(x[k] + delta_q * span);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ObjectiveVector;
    use crate::rng;

    fn ind(rank: usize, crowding: f64) -> Individual<u8> {
        Individual {
            genome: 0,
            objectives: ObjectiveVector::new(0.0, 0.0, 0.0),
            front_rank: rank,
            crowding,
        }
    }

    #[test]
    fn tournament_single_member() {
        let mut r = rng::stream(&[1]);
        assert_eq!(binary_tournament(&[ind(3, 0.0)], &mut r), 0);
    }

    #[test]
    fn tournament_prefers_rank_then_crowding() {
        let mut r = rng::stream(&[2]);
        let by_rank = [ind(0, 0.0), ind(1, f64::INFINITY)];
        let by_crowd = [ind(0, 0.5), ind(0, f64::INFINITY)];
        let wins = (0..400)
            .filter(|_| binary_tournament(&by_rank, &mut r) == 0)
            .count();
        // loses only when index 1 is drawn twice
        assert!((270..=330).contains(&wins), "rank-0 should win ~3/4 of draws, won {wins}");
        let crowd_wins = (0..400)
            .filter(|_| binary_tournament(&by_crowd, &mut r) == 1)
            .count();
        assert!((270..=330).contains(&crowd_wins), "{crowd_wins}");
    }

    #[test]
    fn sbx_identical_parents_unchanged() {
        let mut r = rng::stream(&[3]);
        let bounds = [Bounds::UNIT; 4];
        let mut a = [0.1, 0.5, 0.9, 0.3];
        let mut b = a;
        sbx_crossover(&mut a, &mut b, &bounds, 15.0, &mut r);
        assert_eq!(a, [0.1, 0.5, 0.9, 0.3]);
        assert_eq!(b, a);
    }

    #[test]
    fn sbx_and_pm_stay_in_bounds() {
        let mut r = rng::stream(&[4]);
        let bounds = [Bounds::UNIT, Bounds::new(0.0, 64.0)];
        for _ in 0..1000 {
            let mut a = [r.random::<f64>(), r.random::<f64>() * 64.0];
            let mut b = [r.random::<f64>(), r.random::<f64>() * 64.0];
            sbx_crossover(&mut a, &mut b, &bounds, 2.0, &mut r);
            polynomial_mutation(&mut a, &bounds, 5.0, 1.0, &mut r);
            for x in [a, b] {
                assert!((0.0..=1.0).contains(&x[0]) && (0.0..=64.0).contains(&x[1]));
            }
        }
    }

    #[test]
    fn pm_zero_rate_is_identity() {
        let mut r = rng::stream(&[5]);
        let mut x = [0.25, 0.75];
        polynomial_mutation(&mut x, &[Bounds::UNIT; 2], 20.0, 0.0, &mut r);
        assert_eq!(x, [0.25, 0.75]);
    }

    #[test]
    fn sbx_children_preserve_parent_mean() {
        let mut r = rng::stream(&[6]);
        for _ in 0..200 {
            let mut a = [0.4];
            let mut b = [0.6];
            sbx_crossover(&mut a, &mut b, &[Bounds::new(-10.0, 10.0)], 15.0, &mut r);
            assert!((a[0] + b[0] - 1.0).abs() < 1e-12);
        }
    }
}
