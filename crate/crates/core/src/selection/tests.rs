use super::*;
use crate::dataset::QueryRecord;
use crate::encoder::EmbeddingVector;

fn pool_from_points(points: &[[f64; 2]]) -> DemoPool {
    let records: Vec<QueryRecord> = points
        .iter()
        .enumerate()
        .map(|(i, _)| {
            QueryRecord::new(format!("p{i:03}"), format!("SELECT c{i} FROM t{i}"))
                .with_utterance(format!("utterance {i}"))
        })
        .collect();
    let embeddings: Vec<EmbeddingVector> = points.iter().map(|&p| EmbeddingVector(p)).collect();
    DemoPool::new(records, embeddings).unwrap()
}

mod kmeans_tests {
    use super::*;

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let points: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, (i * 7 % 5) as f64]).collect();
        let result = kmeans(
            &points,
            &KMeansConfig {
                k: 20,
                seed: 3,
                max_iters: 50,
                tol: 1e-9,
            },
        )
        .unwrap();
        assert!(result.inertia() < 1e-12);
        let mut seen: Vec<usize> = result.assignments.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 20, "each point in its own cluster");
    }

    #[test]
    fn two_separated_blobs_recovered() {
        let mut points = Vec::new();
        for i in 0..10 {
            let jitter = i as f64 * 0.01;
            points.push([10.0 + jitter, 10.0 - jitter]);
            points.push([-10.0 - jitter, -10.0 + jitter]);
        }
        let result = kmeans(
            &points,
            &KMeansConfig {
                k: 2,
                seed: 1,
                max_iters: 100,
                tol: 1e-9,
            },
        )
        .unwrap();
        for pair in result.assignments.chunks(2) {
            assert_ne!(pair[0], pair[1], "blob members split across clusters");
        }
        for i in (0..20).step_by(2) {
            assert_eq!(result.assignments[i], result.assignments[0]);
        }
    }

    /// Independent Lloyd used only as an oracle: plain assignment/update
    /// loop with no k-means++ and no reseeding.
    fn oracle_lloyd(points: &[[f64; 2]], mut centroids: Vec<[f64; 2]>) -> f64 {
        for _ in 0..200 {
            let assignments: Vec<usize> =
                points.iter().map(|p| nearest(p, &centroids)).collect();
            let mut sums = vec![[0.0f64; 2]; centroids.len()];
            let mut counts = vec![0usize; centroids.len()];
            for (p, &c) in points.iter().zip(assignments.iter()) {
                sums[c][0] += p[0];
                sums[c][1] += p[1];
                counts[c] += 1;
            }
            for c in 0..centroids.len() {
                if counts[c] > 0 {
                    centroids[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
                }
            }
        }
        points
            .iter()
            .map(|p| dist2(p, &centroids[nearest(p, &centroids)]))
            .sum()
    }

    #[test]
    fn twelve_point_instance_matches_exhaustive_restart_oracle() {
        // Three well-separated blobs of four.
        let points: Vec<[f64; 2]> = vec![
            [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0],
            [10.0, 0.0], [11.0, 0.0], [10.0, 1.0], [11.0, 1.0],
            [5.0, 9.0], [6.0, 9.0], [5.0, 10.0], [6.0, 10.0],
        ];
        let mut best = f64::INFINITY;
        for a in 0..12 {
            for b in (a + 1)..12 {
                for c in (b + 1)..12 {
                    let inertia =
                        oracle_lloyd(&points, vec![points[a], points[b], points[c]]);
                    if inertia < best {
                        best = inertia;
                    }
                }
            }
        }
        let result = kmeans(
            &points,
            &KMeansConfig {
                k: 3,
                seed: 42,
                max_iters: 200,
                tol: 1e-12,
            },
        )
        .unwrap();
        assert!(
            (result.inertia() - best).abs() < 1e-9,
            "kmeans inertia {} vs oracle best {}",
            result.inertia(),
            best
        );
    }

    #[test]
    fn inertia_never_increases() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        for trial in 0..20 {
            let n = rng.random_range(10..60);
            let k = rng.random_range(2..=5);
            let points: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
                .collect();
            let result = kmeans(
                &points,
                &KMeansConfig {
                    k,
                    seed: trial,
                    max_iters: 50,
                    tol: 0.0,
                },
            )
            .unwrap();
            for w in result.inertia_trace.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-9,
                    "inertia increased: {} -> {} (trial {trial})",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn assignments_optimal_at_termination() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        let points: Vec<[f64; 2]> = (0..50)
            .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        let result = kmeans(
            &points,
            &KMeansConfig {
                k: 5,
                seed: 3,
                max_iters: 100,
                tol: 1e-6,
            },
        )
        .unwrap();
        for (i, p) in points.iter().enumerate() {
            let assigned = dist2(p, &result.centroids[result.assignments[i]]);
            for c in &result.centroids {
                assert!(assigned <= dist2(p, c) + 1e-9);
            }
        }
    }

    #[test]
    fn pool_smaller_than_k_rejected() {
        let points = vec![[0.0, 0.0]; 5];
        assert!(matches!(
            kmeans(&points, &KMeansConfig::default()),
            Err(SelectionError::PoolTooSmall { .. })
        ));
    }

    #[test]
    fn duplicate_points_still_terminate_with_optimal_assignments() {
        // Mostly-duplicate input makes k-means++ place coincident centroids,
        // which exercises the empty-cluster reseeding path.
        let mut points = vec![[1.0, 1.0]; 7];
        points.push([9.0, 9.0]);
        for seed in 0..10 {
            let result = kmeans(
                &points,
                &KMeansConfig {
                    k: 3,
                    seed,
                    max_iters: 50,
                    tol: 0.0,
                },
            )
            .unwrap();
            for (i, p) in points.iter().enumerate() {
                let assigned = dist2(p, &result.centroids[result.assignments[i]]);
                for c in &result.centroids {
                    assert!(assigned <= dist2(p, c) + 1e-9, "seed {seed}");
                }
            }
            for w in result.inertia_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }
}

mod silhouette_tests {
    use super::*;

    #[test]
    fn separated_blobs_score_high() {
        let mut points = Vec::new();
        let mut assignments = Vec::new();
        for i in 0..10 {
            points.push([20.0 + (i as f64) * 0.01, 20.0]);
            assignments.push(0);
            points.push([-20.0, -20.0 - (i as f64) * 0.01]);
            assignments.push(1);
        }
        let score = silhouette(&points, &assignments, 2).unwrap();
        assert!(score > 0.9, "got {score}");
    }

    #[test]
    fn identical_points_score_zero() {
        let points = vec![[1.0, 1.0]; 6];
        let assignments = vec![0, 1, 0, 1, 0, 1];
        let score = silhouette(&points, &assignments, 2).unwrap();
        assert_eq!(score, 0.0);
    }

    #[test]
    fn six_point_fixture_matches_hand_value() {
        // Two clusters of three; frozen value computed once with the
        // standard formula ((b-a)/max(a,b), mean over points).
        let points = vec![
            [0.0, 0.0],
            [1.0, 0.2],
            [0.2, 1.0],
            [5.0, 4.0],
            [6.0, 4.4],
            [5.5, 5.0],
        ];
        let assignments = vec![0, 0, 0, 1, 1, 1];
        let score = silhouette(&points, &assignments, 2).unwrap();
        assert!(
            (score - 0.8422428245662045).abs() < 1e-9,
            "got {score}"
        );
    }

    #[test]
    fn fewer_than_two_clusters_rejected() {
        let points = vec![[0.0, 0.0], [1.0, 1.0]];
        assert!(matches!(
            silhouette(&points, &[0, 0], 1),
            Err(SelectionError::DegenerateClustering(1))
        ));
    }

    #[test]
    fn pool_level_wrapper_agrees_with_raw_form() {
        let points = vec![
            [0.0, 0.0],
            [0.5, 0.0],
            [0.0, 0.5],
            [4.0, 4.0],
            [4.5, 4.0],
            [4.0, 4.5],
        ];
        let pool = super::pool_from_points(&points);
        let index = SelectionIndex::build(&pool, 2, 1, 50, 1e-9).unwrap();
        let via_pool = silhouette_of(&pool, &index).unwrap();
        let direct = silhouette(&points, &index.assignments, 2).unwrap();
        assert_eq!(via_pool, direct);
    }
}

mod strategy_tests {
    use super::*;

    #[test]
    fn top_returns_exact_cluster_when_n_exhausts_it() {
        let points = vec![[0.0, 0.0], [0.1, 0.0], [9.0, 9.0], [9.1, 9.0]];
        let pool = pool_from_points(&points);
        let test = EmbeddingVector([0.05, 0.0]);
        let demos = select_ast_icl_top(&test, &pool, 2, None).unwrap();
        let mut ids: Vec<&str> = demos.pairs.iter().map(|p| p.record_id.as_str()).collect();
        ids.sort_unstable();
        assert_eq!(ids, vec!["p000", "p001"]);
    }

    #[test]
    fn top_exact_match_ranks_first() {
        let points = vec![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let pool = pool_from_points(&points);
        let test = EmbeddingVector([2.0, 2.0]);
        let demos = select_ast_icl_top(&test, &pool, 2, None).unwrap();
        // Most-similar-last: the zero-distance record comes last.
        assert_eq!(demos.pairs.last().unwrap().record_id, "p001");
        assert_eq!(demos.pairs.last().unwrap().score, Some(0.0));
    }

    #[test]
    fn top_matches_brute_force_sort_with_ties() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n_pool = rng.random_range(8..50);
            // Coarse grid coordinates force plenty of distance ties.
            let points: Vec<[f64; 2]> = (0..n_pool)
                .map(|_| {
                    [
                        rng.random_range(0..3) as f64,
                        rng.random_range(0..3) as f64,
                    ]
                })
                .collect();
            let pool = pool_from_points(&points);
            let test = EmbeddingVector([1.0, 1.0]);
            let n = rng.random_range(1..=n_pool.min(8));
            let got = select_ast_icl_top(&test, &pool, n, None).unwrap();

            let mut oracle: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .map(|(i, p)| (test.distance(&EmbeddingVector(*p)), i))
                .collect();
            oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut expected: Vec<String> = oracle
                .into_iter()
                .take(n)
                .map(|(_, i)| format!("p{i:03}"))
                .collect();
            expected.reverse();
            let got_ids: Vec<String> =
                got.pairs.iter().map(|p| p.record_id.clone()).collect();
            assert_eq!(got_ids, expected);
        }
    }

    #[test]
    fn random_full_pool_is_permutation() {
        let points: Vec<[f64; 2]> = (0..6).map(|i| [i as f64, 0.0]).collect();
        let pool = pool_from_points(&points);
        let demos = select_random(&pool, 6, 9, None).unwrap();
        let mut ids: Vec<&str> = demos.pairs.iter().map(|p| p.record_id.as_str()).collect();
        ids.sort_unstable();
        assert_eq!(ids, vec!["p000", "p001", "p002", "p003", "p004", "p005"]);
    }

    #[test]
    fn random_is_seed_reproducible() {
        let points: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 0.0]).collect();
        let pool = pool_from_points(&points);
        let a = select_random(&pool, 3, 7, None).unwrap();
        let b = select_random(&pool, 3, 7, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_draws_are_uniform() {
        // 10,000 single draws from a 5-record pool: each record expected
        // 2,000 times, tolerance 3 sigma (sigma = sqrt(n p (1-p)) = 40).
        let points: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, 0.0]).collect();
        let pool = pool_from_points(&points);
        let mut counts = std::collections::BTreeMap::new();
        for seed in 0..10_000u64 {
            let demos = select_random(&pool, 1, seed, None).unwrap();
            *counts.entry(demos.pairs[0].record_id.clone()).or_insert(0) += 1;
        }
        for (id, count) in counts {
            assert!(
                (count as f64 - 2000.0).abs() < 3.0 * 40.0,
                "{id} drawn {count} times"
            );
        }
    }

    #[test]
    fn bm25_identical_document_ranks_first() {
        let mut pool = pool_from_points(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        pool.records[0].sql = "SELECT height FROM mountains".into();
        pool.records[1].sql = "SELECT name FROM singers WHERE age > 30".into();
        pool.records[2].sql = "INSERT nothing shared".into();
        pool.bm25 = Bm25Stats::build(pool.records.iter().map(|r| r.sql.as_str()));
        let demos =
            select_bm25("SELECT name FROM singers WHERE age > 30", &pool, 1, None).unwrap();
        assert_eq!(demos.pairs[0].record_id, "p001");
    }

    #[test]
    fn bm25_zero_overlap_falls_back_to_index_order() {
        let mut pool = pool_from_points(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        for (i, sql) in ["SELECT a FROM t", "SELECT b FROM u", "SELECT c FROM v"]
            .iter()
            .enumerate()
        {
            pool.records[i].sql = sql.to_string();
        }
        pool.bm25 = Bm25Stats::build(pool.records.iter().map(|r| r.sql.as_str()));
        let demos = select_bm25("zzz qqq", &pool, 3, None).unwrap();
        let ids: Vec<&str> = demos.pairs.iter().map(|p| p.record_id.as_str()).collect();
        assert_eq!(ids, vec!["p000", "p001", "p002"]);
        for pair in &demos.pairs {
            assert_eq!(pair.score, Some(0.0));
        }
    }

    #[test]
    fn bm25_matches_hand_formula() {
        // Three documents, two-term query. Hand computation with
        // idf = ln(1 + (N - df + 0.5)/(df + 0.5)), k1 = 1.2, b = 0.75.
        let mut pool = pool_from_points(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        pool.records[0].sql = "apple banana apple".into(); // len 3
        pool.records[1].sql = "banana cherry".into(); // len 2
        pool.records[2].sql = "cherry cherry cherry date".into(); // len 4
        pool.bm25 = Bm25Stats::build(pool.records.iter().map(|r| r.sql.as_str()));
        // avgdl = 3, N = 3; query "apple cherry":
        //   df(apple) = 1, df(cherry) = 2
        let idf_apple = (1.0f64 + (3.0 - 1.0 + 0.5) / 1.5).ln();
        let idf_cherry = (1.0f64 + (3.0 - 2.0 + 0.5) / 2.5).ln();
        let sat = |tf: f64, dl: f64| tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * dl / 3.0));
        let expected0 = idf_apple * sat(2.0, 3.0); // doc0: apple tf=2
        let expected1 = idf_cherry * sat(1.0, 2.0); // doc1: cherry tf=1
        let expected2 = idf_cherry * sat(3.0, 4.0); // doc2: cherry tf=3
        assert!((pool.bm25.score("apple cherry", 0) - expected0).abs() < 1e-9);
        assert!((pool.bm25.score("apple cherry", 1) - expected1).abs() < 1e-9);
        assert!((pool.bm25.score("apple cherry", 2) - expected2).abs() < 1e-9);
    }

    #[test]
    fn cluster_selection_exhausts_small_cluster() {
        let points = vec![[0.0, 0.0], [0.1, 0.1], [8.0, 8.0], [8.1, 8.1], [8.2, 8.0]];
        let pool = pool_from_points(&points);
        let index = SelectionIndex::build(&pool, 2, 3, 50, 1e-9).unwrap();
        let test = EmbeddingVector([0.0, 0.1]);
        let demos = select_ast_icl(&test, &index, &pool, 2, 11, None).unwrap();
        let mut ids: Vec<&str> = demos.pairs.iter().map(|p| p.record_id.as_str()).collect();
        ids.sort_unstable();
        assert_eq!(ids, vec!["p000", "p001"]);
    }

    #[test]
    fn cluster_selection_tops_up_from_next_cluster() {
        let points = vec![[0.0, 0.0], [0.1, 0.1], [8.0, 8.0], [8.1, 8.1], [8.2, 8.0]];
        let pool = pool_from_points(&points);
        let index = SelectionIndex::build(&pool, 2, 3, 50, 1e-9).unwrap();
        let test = EmbeddingVector([0.0, 0.1]);
        let demos = select_ast_icl(&test, &index, &pool, 4, 11, None).unwrap();
        assert_eq!(demos.len(), 4);
        let ids: std::collections::BTreeSet<&str> =
            demos.pairs.iter().map(|p| p.record_id.as_str()).collect();
        assert!(ids.contains("p000") && ids.contains("p001"));
    }

    #[test]
    fn cluster_selection_seed_deterministic() {
        let points: Vec<[f64; 2]> = (0..30)
            .map(|i| [(i % 6) as f64, (i / 6) as f64])
            .collect();
        let pool = pool_from_points(&points);
        let index = SelectionIndex::build(&pool, 4, 1, 100, 1e-9).unwrap();
        let test = EmbeddingVector([1.0, 1.0]);
        let a = select_ast_icl(&test, &index, &pool, 3, 5, None).unwrap();
        let b = select_ast_icl(&test, &index, &pool, 3, 5, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nearest_centroid_matches_exhaustive_scan() {
        let index = SelectionIndex {
            centroids: vec![[0.0, 0.0], [5.0, 5.0], [-3.0, 4.0]],
            assignments: vec![],
            k: 3,
            rng_seed: 0,
        };
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(2);
        for _ in 0..100 {
            let p = [rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)];
            let got = index.nearest_centroid(&p);
            let mut best = 0;
            for c in 1..3 {
                if dist2(&p, &index.centroids[c]) < dist2(&p, &index.centroids[best]) {
                    best = c;
                }
            }
            assert_eq!(got, best);
        }
    }

    #[test]
    fn all_strategies_exclude_the_test_record() {
        let points: Vec<[f64; 2]> = (0..8).map(|i| [i as f64 * 0.1, 0.0]).collect();
        let pool = pool_from_points(&points);
        let index = SelectionIndex::build(&pool, 2, 1, 50, 1e-9).unwrap();
        let test = pool.embeddings[3];
        let exclude = Some("p003");

        let top = select_ast_icl_top(&test, &pool, 7, exclude).unwrap();
        let rand_sel = select_random(&pool, 7, 1, exclude).unwrap();
        let bm = select_bm25(&pool.records[3].sql.clone(), &pool, 7, exclude).unwrap();
        let clustered = select_ast_icl(&test, &index, &pool, 7, 1, exclude).unwrap();
        for demos in [top, rand_sel, bm, clustered] {
            assert!(
                demos.pairs.iter().all(|p| p.record_id != "p003"),
                "{:?} leaked the test record",
                demos.strategy
            );
            // No duplicates either.
            let mut ids: Vec<&str> =
                demos.pairs.iter().map(|p| p.record_id.as_str()).collect();
            ids.sort_unstable();
            let before = ids.len();
            ids.dedup();
            assert_eq!(ids.len(), before);
        }
    }

    #[test]
    fn arranged_respects_demo_order() {
        let points = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let pool = pool_from_points(&points);
        let test = EmbeddingVector([0.0, 0.0]);
        let demos = select_ast_icl_top(&test, &pool, 3, None).unwrap();
        let last = demos.arranged(DemoOrder::SimilarLast);
        assert_eq!(last.last().unwrap().record_id, "p000");
        let first = demos.arranged(DemoOrder::SimilarFirst);
        assert_eq!(first.first().unwrap().record_id, "p000");
    }
}

mod property_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn top_n_equals_brute_force(
            coords in proptest::collection::vec((-100i32..100, -100i32..100), 1..60),
            n_raw in 1usize..8,
            test_x in -100i32..100,
            test_y in -100i32..100,
        ) {
            let points: Vec<[f64; 2]> = coords
                .iter()
                .map(|&(x, y)| [x as f64 / 10.0, y as f64 / 10.0])
                .collect();
            let n = n_raw.min(points.len());
            let pool = pool_from_points(&points);
            let test = EmbeddingVector([test_x as f64 / 10.0, test_y as f64 / 10.0]);
            let got = select_ast_icl_top(&test, &pool, n, None).unwrap();

            let mut oracle: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .map(|(i, p)| (test.distance(&EmbeddingVector(*p)), i))
                .collect();
            oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut expected: Vec<String> = oracle
                .into_iter()
                .take(n)
                .map(|(_, i)| format!("p{i:03}"))
                .collect();
            expected.reverse();
            let got_ids: Vec<String> = got.pairs.iter().map(|p| p.record_id.clone()).collect();
            prop_assert_eq!(got_ids, expected);
        }

        #[test]
        fn kmeans_inertia_monotone(
            coords in proptest::collection::vec((-100i32..100, -100i32..100), 6..40),
            k in 2usize..5,
            seed in 0u64..1000,
        ) {
            let points: Vec<[f64; 2]> = coords
                .iter()
                .map(|&(x, y)| [x as f64 / 7.0, y as f64 / 7.0])
                .collect();
            prop_assume!(points.len() >= k);
            let result = kmeans(&points, &KMeansConfig { k, seed, max_iters: 30, tol: 0.0 }).unwrap();
            for w in result.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }
}
