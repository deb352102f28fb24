//! Dominance helpers shared by the PCC filter and NSGA-II.
//!
//! All objectives are minimized; callers negate maximized quantities.

/// `a` dominates `b`: no worse in every objective and better in one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the points no other point dominates, in input order.
pub fn non_dominated(points: &[Vec<f64>]) -> Vec<usize> {
    // sort by first objective so that a dominator always precedes its victim
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].partial_cmp(&points[j]).unwrap_or(std::cmp::Ordering::Equal));
    let mut front: Vec<usize> = Vec::new();
    for &i in &order {
        if !front.iter().any(|&f| dominates(&points[f], &points[i])) {
            front.retain(|&f| !dominates(&points[i], &points[f]));
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

/// Front index of every point: 0 for the non-dominated set, 1 for the set
/// that is non-dominated once front 0 is removed, and so on.
pub fn pareto_ranks(points: &[Vec<f64>]) -> Vec<usize> {
    let mut rank = vec![usize::MAX; points.len()];
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut r = 0;
    while !left.is_empty() {
        let sub: Vec<Vec<f64>> = left.iter().map(|&i| points[i].clone()).collect();
        let front = non_dominated(&sub);
        for &k in &front {
            rank[left[k]] = r;
        }
        left = left
            .iter()
            .enumerate()
            .filter(|(k, _)| front.binary_search(k).is_err())
            .map(|(_, &i)| i)
            .collect();
        r += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_points_do_not_dominate() {
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]));
        assert!(dominates(&[1.0, 1.0], &[1.0, 2.0]));
    }

    #[test]
    fn keeps_ties() {
        let pts = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 2.0], vec![0.5, 3.0]];
        assert_eq!(non_dominated(&pts), vec![0, 1, 3]);
        assert_eq!(pareto_ranks(&pts), vec![0, 0, 1, 0]);
    }
}
