use compass_core::graph::{
    check_uniform_joint_connectivity, union_graph, Arc, ConnectivityMode, Piece, Sign,
    SignedDigraph, SwitchingSignal,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reachability matrix by Floyd-Warshall closure over an adjacency matrix.
fn closure(n: usize, arcs: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in arcs {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

fn oracle(n: usize, arcs: &[(usize, usize)]) -> (bool, bool) {
    let r = closure(n, arcs);
    let qs = (0..n).any(|root| r[root].iter().all(|&x| x));
    let strong = r.iter().all(|row| row.iter().all(|&x| x));
    (qs, strong)
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}

fn check(n: usize, arcs: &[(usize, usize)]) {
    let g = SignedDigraph::from_pairs(n, arcs).unwrap();
    let (qs, strong) = oracle(n, arcs);
    assert_eq!(g.is_quasi_strongly_connected(), qs, "n={n} arcs={arcs:?}");
    assert_eq!(g.is_strongly_connected(), strong, "n={n} arcs={arcs:?}");
}

#[test]
fn exhaustive_up_to_four_nodes() {
    for n in 1..=4 {
        let pairs = all_pairs(n);
        for mask in 0u32..(1 << pairs.len()) {
            let arcs: Vec<_> = (0..pairs.len())
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| pairs[b])
                .collect();
            check(n, &arcs);
        }
    }
}

#[test]
fn sampled_five_node_arc_sets() {
    let pairs = all_pairs(5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20_000 {
        let mask: u32 = rng.gen_range(0..1 << pairs.len());
        let arcs: Vec<_> = (0..pairs.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| pairs[b])
            .collect();
        check(5, &arcs);
    }
}

#[test]
fn signs_do_not_affect_connectivity() {
    let g = SignedDigraph::new(
        3,
        [
            Arc { from: 0, to: 1, sign: Sign::Negative },
            Arc { from: 1, to: 2, sign: Sign::Positive },
            Arc { from: 2, to: 0, sign: Sign::Negative },
        ],
    )
    .unwrap();
    assert!(g.is_strongly_connected());
    assert!(!g.is_cooperative());
}

/// Brute-force joint connectivity on a grid of window starts with step 1/64. All events in
/// the generated signals are multiples of 1/4, so the grid contains every critical start.
fn grid_verdict(
    signal: &SwitchingSignal<f64>,
    family: &[SignedDigraph],
    window: f64,
    hi: f64,
    mode: ConnectivityMode,
) -> bool {
    let steps = (hi * 64.0).round() as usize;
    (0..=steps).all(|k| {
        let t = k as f64 / 64.0;
        mode.holds(&union_graph(signal, family, t, t + window).unwrap())
    })
}

#[test]
fn event_windows_agree_with_a_fine_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = 4;
        let family: Vec<SignedDigraph> = (0..3)
            .map(|_| {
                let arcs: Vec<_> = all_pairs(n).into_iter().filter(|_| rng.gen_bool(0.25)).collect();
                SignedDigraph::from_pairs(n, &arcs).unwrap()
            })
            .collect();
        let mut t = 0.0;
        let mut pieces = Vec::new();
        for _ in 0..5 {
            pieces.push(Piece(t, rng.gen_range(0..3)));
            t += 0.25 * rng.gen_range(2..6) as f64;
        }
        let signal = SwitchingSignal::new(pieces, 0.5, t, false).unwrap();
        let window = 0.25 * rng.gen_range(2..10) as f64;
        if window > signal.span() {
            continue;
        }
        for mode in [ConnectivityMode::QuasiStrong, ConnectivityMode::Strong] {
            let r = check_uniform_joint_connectivity(&signal, &family, window, mode).unwrap();
            let brute = grid_verdict(&signal, &family, window, t - window, mode);
            assert_eq!(r.connected, brute, "{signal:?} T={window} {mode:?}");
        }
    }
}
