//! Exact linear assignment (Hungarian algorithm, shortest augmenting paths
//! with row/column potentials).

/// Solves `min Σ cost[i][assignment[i]]` over permutations of a square
/// matrix. Returns the column assigned to each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(
        cost.iter().all(|row| row.len() == n),
        "cost matrix must be square"
    );

    // 1-based arrays; index 0 is the virtual root of each augmenting path.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost[r0 - 1][col - 1] - u[r0] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0; n];
    for col in 1..=n {
        assignment[owner[col] - 1] = col - 1;
    }
    assignment
}

/// Maximizes `Σ weight[i][assignment[i]]`.
pub fn max_weight_assignment(weight: &[Vec<f64>]) -> Vec<usize> {
    let cost: Vec<Vec<f64>> = weight
        .iter()
        .map(|row| row.iter().map(|w| -w).collect())
        .collect();
    min_cost_assignment(&cost)
}
