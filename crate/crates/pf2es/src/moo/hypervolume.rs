//! Exact hypervolume indicators for two and three objectives (maximization).

use crate::error::{Error, Result};

/// Exact hypervolume of `frontier` w.r.t. `ref_point` under maximization:
/// the Lebesgue measure of the union of boxes [ref_point, p]. Points that do
/// not strictly dominate the reference point contribute nothing.
pub fn hypervolume(frontier: &[Vec<f64>], ref_point: &[f64]) -> Result<f64> {
    match ref_point.len() {
        2 => Ok(hv2(frontier, ref_point)),
        3 => Ok(hv3(frontier, ref_point)),
        m => Err(Error::UnsupportedDimension(m)),
    }
}

fn above_ref(frontier: &[Vec<f64>], ref_point: &[f64]) -> Vec<Vec<f64>> {
    frontier
        .iter()
        .filter(|p| p.iter().zip(ref_point).all(|(&pi, &ri)| pi > ri))
        .cloned()
        .collect()
}

/// Sort-and-sweep over the staircase.
fn hv2(frontier: &[Vec<f64>], r: &[f64]) -> f64 {
    let mut pts = above_ref(frontier, r);
    if pts.is_empty() {
        return 0.0;
    }
    // descending f1; for equal f1 keep the larger f2 first
    pts.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));
    let mut hv = 0.0;
    let mut best_f2 = r[1];
    for p in &pts {
        if p[1] > best_f2 {
            hv += (p[0] - r[0]) * (p[1] - best_f2);
            best_f2 = p[1];
        }
    }
    hv
}

/// Slice along the third objective, reducing each slab to a 2-D sweep.
fn hv3(frontier: &[Vec<f64>], r: &[f64]) -> f64 {
    let pts = above_ref(frontier, r);
    if pts.is_empty() {
        return 0.0;
    }
    let mut levels: Vec<f64> = pts.iter().map(|p| p[2]).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();

    let mut volume = 0.0;
    for (j, &level) in levels.iter().enumerate() {
        let next = if j + 1 < levels.len() { levels[j + 1] } else { r[2] };
        let slab: Vec<Vec<f64>> = pts
            .iter()
            .filter(|p| p[2] >= level)
            .map(|p| vec![p[0], p[1]])
            .collect();
        volume += hv2(&slab, &r[..2]) * (level - next);
    }
    volume
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_box() {
        let hv = hypervolume(&[vec![1.0, 1.0]], &[0.0, 0.0]).unwrap();
        assert_eq!(hv, 1.0);
    }

    #[test]
    fn two_point_inclusion_exclusion() {
        // 2 + 2 - 1 overlap
        let hv = hypervolume(&[vec![2.0, 1.0], vec![1.0, 2.0]], &[0.0, 0.0]).unwrap();
        assert_eq!(hv, 3.0);
    }

    #[test]
    fn dominated_point_contributes_nothing() {
        let hv = hypervolume(&[vec![3.0, 3.0], vec![1.0, 1.0]], &[0.0, 0.0]).unwrap();
        assert_eq!(hv, 9.0);
    }

    #[test]
    fn points_not_dominating_ref_are_ignored() {
        let hv = hypervolume(&[vec![1.0, -0.5], vec![0.5, 0.5]], &[0.0, 0.0]).unwrap();
        assert_eq!(hv, 0.25);
        assert_eq!(hypervolume(&[], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn unsupported_dimension() {
        assert!(hypervolume(&[vec![1.0; 4]], &[0.0; 4]).is_err());
    }

    #[test]
    fn three_dim_known_value() {
        // unit cube plus a protruding slab
        let hv = hypervolume(&[vec![1.0, 1.0, 1.0], vec![2.0, 1.0, 0.5]], &[0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(hv, 1.0 + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn monotone_and_permutation_invariant() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for m in [2usize, 3] {
            for _ in 0..50 {
                let n = rng.gen_range(1..8);
                let mut pts: Vec<Vec<f64>> =
                    (0..n).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect();
                let r = vec![-0.1; m];
                let hv = hypervolume(&pts, &r).unwrap();
                let extra: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
                let mut bigger = pts.clone();
                bigger.push(extra);
                assert!(hypervolume(&bigger, &r).unwrap() >= hv - 1e-12);
                pts.reverse();
                assert_eq!(hypervolume(&pts, &r).unwrap(), hv);
            }
        }
    }

    #[test]
    fn three_dim_matches_monte_carlo() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for trial in 0..5 {
            let n = 4 + trial;
            let pts: Vec<Vec<f64>> =
                (0..n).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
            let r = vec![0.0; 3];
            let exact = hypervolume(&pts, &r).unwrap();
            let n_mc = 200_000usize;
            let mut hit = 0usize;
            for _ in 0..n_mc {
                let s = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
                if pts.iter().any(|p| s.iter().zip(p).all(|(&si, &pi)| si <= pi)) {
                    hit += 1;
                }
            }
            let est = hit as f64 / n_mc as f64;
            let se = (est * (1.0 - est) / n_mc as f64).sqrt().max(1e-9);
            assert!(
                (exact - est).abs() <= 3.0 * se + 1e-9,
                "exact {exact} vs mc {est} (se {se})"
            );
        }
    }
}
