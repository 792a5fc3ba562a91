use bias_design::causal::{
    backdoor_admissible, d_separated, minimal_backdoor_sets, simulate, Dag, Intervention,
    LinearSem,
};
use proptest::prelude::*;

/// Path-enumeration reference for d-separation, independent of the library's
/// reachability search.
struct Oracle {
    n: usize,
    edge: Vec<Vec<bool>>,
    desc: Vec<Vec<bool>>,
}

impl Oracle {
    fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut edge = vec![vec![false; n]; n];
        for &(a, b) in edges {
            edge[a][b] = true;
        }
        // reflexive-transitive closure
        let mut desc = vec![vec![false; n]; n];
        for (i, row) in desc.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in edges {
            desc[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if desc[i][k] && desc[k][j] {
                        desc[i][j] = true;
                    }
                }
            }
        }
        Self { n, edge, desc }
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edge[a][b] || self.edge[b][a]
    }

    fn simple_paths(&self, a: usize, b: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = vec![a];
        self.extend(b, &mut path, &mut out);
        out
    }

    fn extend(&self, target: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if last == target {
            out.push(path.clone());
            return;
        }
        for next in 0..self.n {
            if self.adjacent(last, next) && !path.contains(&next) {
                path.push(next);
                self.extend(target, path, out);
                path.pop();
            }
        }
    }

    fn is_open(&self, path: &[usize], s: &[usize]) -> bool {
        path.windows(3).all(|w| {
            let (p, v, q) = (w[0], w[1], w[2]);
            let collider = self.edge[p][v] && self.edge[q][v];
            if collider {
                s.iter().any(|&z| self.desc[v][z])
            } else {
                !s.contains(&v)
            }
        })
    }

    fn separated(&self, a: usize, b: usize, s: &[usize]) -> bool {
        self.simple_paths(a, b).iter().all(|p| !self.is_open(p, s))
    }

    fn open_backdoor_paths(&self, x: usize, y: usize, s: &[usize]) -> Vec<Vec<usize>> {
        self.simple_paths(x, y)
            .into_iter()
            .filter(|p| self.edge[p[1]][x] && self.is_open(p, s))
            .collect()
    }

    fn admissible(&self, x: usize, y: usize, s: &[usize]) -> bool {
        s.iter().all(|&v| !self.desc[x][v]) && self.open_backdoor_paths(x, y, s).is_empty()
    }
}

fn random_dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (3usize..=6).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let len = pairs.len();
        prop::collection::vec(prop::bool::weighted(0.4), len).prop_map(move |keep| {
            let edges = pairs.iter().zip(&keep).filter(|(_, k)| **k).map(|(e, _)| *e).collect();
            (n, edges)
        })
    })
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("V{i}")).collect()
}

fn build(n: usize, edges: &[(usize, usize)]) -> Dag {
    let names = labels(n);
    let e: Vec<(String, String)> =
        edges.iter().map(|&(a, b)| (names[a].clone(), names[b].clone())).collect();
    Dag::new(&names, &e).unwrap()
}

fn subsets(pool: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..1u32 << pool.len())
        .map(move |m| (0..pool.len()).filter(|b| m >> b & 1 == 1).map(|b| pool[b]).collect())
}

fn names_of(idx: &[usize]) -> Vec<String> {
    idx.iter().map(|i| format!("V{i}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_separation_matches_path_oracle((n, edges) in random_dag()) {
        let dag = build(n, &edges);
        let oracle = Oracle::new(n, &edges);
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let rest: Vec<usize> = (0..n).filter(|&v| v != a && v != b).collect();
                for s in subsets(&rest) {
                    let got = d_separated(&dag, &format!("V{a}"), &format!("V{b}"), &names_of(&s)).unwrap();
                    prop_assert_eq!(got, oracle.separated(a, b, &s), "a={} b={} s={:?}", a, b, s);
                    let flipped = d_separated(&dag, &format!("V{b}"), &format!("V{a}"), &names_of(&s)).unwrap();
                    prop_assert_eq!(got, flipped);
                }
            }
        }
    }

    #[test]
    fn backdoor_verdicts_match_oracle((n, edges) in random_dag()) {
        let dag = build(n, &edges);
        let oracle = Oracle::new(n, &edges);
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let (cx, cy) = (format!("V{x}"), format!("V{y}"));
                let rest: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
                for s in subsets(&rest) {
                    let v = backdoor_admissible(&dag, &cx, &cy, &names_of(&s)).unwrap();
                    prop_assert_eq!(v.admissible(), oracle.admissible(x, y, &s));
                    prop_assert_eq!(v.no_descendants, s.iter().all(|&u| !oracle.desc[x][u]));
                    if v.no_descendants {
                        prop_assert_eq!(
                            v.blocks_backdoor_paths,
                            oracle.open_backdoor_paths(x, y, &s).is_empty()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn growing_an_admissible_set_fails_only_by_descent_or_colliders((n, edges) in random_dag()) {
        let dag = build(n, &edges);
        let oracle = Oracle::new(n, &edges);
        let (x, y) = (0, n - 1);
        let rest: Vec<usize> = (1..n - 1).collect();
        for s in subsets(&rest) {
            if !oracle.admissible(x, y, &s) {
                continue;
            }
            for &extra in rest.iter().filter(|v| !s.contains(v)) {
                let mut bigger = s.clone();
                bigger.push(extra);
                let v = backdoor_admissible(&dag, "V0", &format!("V{y}"), &names_of(&bigger)).unwrap();
                if v.admissible() {
                    continue;
                }
                if !v.no_descendants {
                    prop_assert!(oracle.desc[x][extra]);
                    continue;
                }
                // the new node must open a collider on some now-open backdoor path
                let open = oracle.open_backdoor_paths(x, y, &bigger);
                prop_assert!(!open.is_empty());
                let opened = open.iter().any(|p| {
                    p.windows(3).any(|w| {
                        oracle.edge[w[0]][w[1]] && oracle.edge[w[2]][w[1]] && oracle.desc[w[1]][extra]
                    })
                });
                prop_assert!(opened);
            }
        }
    }

    #[test]
    fn minimal_sets_are_admissible_and_minimal((n, edges) in random_dag()) {
        let dag = build(n, &edges);
        let oracle = Oracle::new(n, &edges);
        let (x, y) = (0, n - 1);
        let sets = minimal_backdoor_sets(&dag, "V0", &format!("V{y}")).unwrap();
        let as_idx = |s: &Vec<String>| -> Vec<usize> {
            s.iter().map(|l| l[1..].parse().unwrap()).collect()
        };
        for set in &sets {
            let idx = as_idx(set);
            prop_assert!(oracle.admissible(x, y, &idx));
            for drop in 0..idx.len() {
                let mut smaller = idx.clone();
                smaller.remove(drop);
                prop_assert!(!oracle.admissible(x, y, &smaller));
            }
        }
        // completeness: every admissible subset contains some returned set
        let rest: Vec<usize> = (1..n - 1).collect();
        for s in subsets(&rest) {
            if oracle.admissible(x, y, &s) {
                prop_assert!(sets.iter().any(|m| as_idx(m).iter().all(|v| s.contains(v))));
            }
        }
    }
}

fn chain_sem() -> LinearSem {
    let dag = Dag::new(&["X1", "X2", "X3", "X4"], &[("X1", "X2"), ("X2", "X3"), ("X3", "X4")])
        .unwrap();
    LinearSem::new(dag, vec![0.8, -1.2, 1.5], vec![0.5, 0.0, 0.0, 0.0], vec![1.0; 4]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn interventions_leave_upstream_columns_untouched(seed in any::<u64>(), c in -3.0f64..3.0) {
        let sem = chain_sem();
        let passive = simulate(&sem, 300, seed, None).unwrap();
        for node in ["X2", "X3", "X4"] {
            let forced = simulate(&sem, 300, seed, Some(&Intervention::new().set(node, c))).unwrap();
            prop_assert!(forced.column(node).unwrap().iter().all(|&v| v == c));
            let idx: usize = node[1..].parse().unwrap();
            for up in 1..idx {
                let label = format!("X{up}");
                prop_assert_eq!(passive.column(&label).unwrap(), forced.column(&label).unwrap());
            }
        }
    }
}

#[test]
fn intervention_mean_matches_adjusted_slope() {
    use bias_design::causal::ols_fit;
    let sem = chain_sem();
    let theta3 = sem.coefficients()[2];
    let n = 20_000;
    let passive = simulate(&sem, n, 11, None).unwrap();
    // X2 closes the only backdoor path into X3 in a chain, so the slope is
    // estimated with it as a covariate.
    let fit = ols_fit(&passive, "X4", &["X3", "X2"], true).unwrap();
    let slope = fit.coefficient("X3").unwrap();
    assert!((slope - theta3).abs() < 3.0 * fit.standard_error("X3").unwrap());

    for c in [-1.0, 2.0] {
        let forced = simulate(&sem, n, 12, Some(&Intervention::new().set("X3", c))).unwrap();
        let mean = forced.mean("X4").unwrap();
        let se = forced.std_dev("X4").unwrap() / (n as f64).sqrt();
        assert!((mean - slope * c).abs() < 3.0 * se + 3.0 * fit.standard_error("X3").unwrap() * c.abs());
    }
}
