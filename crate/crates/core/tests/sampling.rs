//! Statistical checks of the coin-flipping sampler.

use kronmom::{cell_probability, count_features, expected_features, GeneratorJob, KroneckerParams};

#[test]
fn cell_frequencies_match_probabilities() {
    let p = KroneckerParams::new(0.9, 0.45, 0.2, 3).unwrap();
    let seeds = 5000u64;
    let n = p.num_vertices() as usize;
    let mut hits = vec![0u32; n * n];
    for seed in 0..seeds {
        let g = GeneratorJob::new(p, seed).generate().unwrap();
        for (u, v) in g.edges() {
            hits[u as usize * n + v as usize] += 1;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let prob = cell_probability(&p, i as u64, j as u64);
            let freq = f64::from(hits[i * n + j]) / seeds as f64;
            let se = (prob * (1.0 - prob) / seeds as f64).sqrt();
            assert!(
                (freq - prob).abs() <= 4.0 * se,
                "cell ({i}, {j}): {freq} vs {prob}"
            );
        }
    }
}

#[test]
fn feature_means_match_expectations() {
    let p = KroneckerParams::new(0.95, 0.5, 0.3, 8).unwrap();
    let expected = expected_features(&p);
    let samples: Vec<[f64; 4]> = (0..200u64)
        .map(|seed| {
            let c = count_features(&GeneratorJob::new(p, seed).generate().unwrap()).unwrap();
            [c.edges, c.hairpins, c.tripins, c.triangles].map(|x| x as f64)
        })
        .collect();
    let m = samples.len() as f64;
    for (k, f) in kronmom::Feature::ALL.into_iter().enumerate() {
        let mean = samples.iter().map(|s| s[k]).sum::<f64>() / m;
        let var = samples.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();
        assert!(
            (mean - expected.get(f)).abs() <= 5.0 * se,
            "{f}: mean {mean}, expected {}, se {se}",
            expected.get(f)
        );
    }
}
