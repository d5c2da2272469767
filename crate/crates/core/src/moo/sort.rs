use crate::metrics::ObjectiveVector;

/// `a` dominates `b`: no worse in every objective and strictly better in one.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let (a, b) = (a.as_array(), b.as_array());
    let mut strictly = false;
    for k in 0..3 {
        if a[k] > b[k] {
            return false;
        }
        if a[k] < b[k] {
            strictly = true;
        }
    }
    strictly
}

/// Fast non-dominated sort. Returns fronts of indices; front 0 is the
/// non-dominated set and indices inside a front keep input order.
pub fn non_dominated_sort(objectives: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&objectives[i], &objectives[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&objectives[j], &objectives[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front.
///
/// Per objective, the extreme members get `+inf` and interior members
/// accumulate the normalized gap between their neighbours. Objectives with no
/// spread are skipped. Exact duplicates of an earlier member score 0 so that
/// truncation drops copies before distinct points. Fronts of one or two
/// members are all boundary.
pub fn crowding_distance(front: &[ObjectiveVector]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }

    let mut unique: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        if !unique.iter().any(|&u| front[u] == front[i]) {
            unique.push(i);
        }
    }

    let mut distance = vec![0.0; n];
    if unique.len() <= 2 {
        for &u in &unique {
            distance[u] = f64::INFINITY;
        }
        return distance;
    }

    for k in 0..3 {
        let value = |i: usize| front[i].as_array()[k];
        let mut order = unique.clone();
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let lo = value(order[0]);
        let hi = value(order[order.len() - 1]);
        let range = hi - lo;
        if !(range > 0.0) {
            continue;
        }
        distance[order[0]] = f64::INFINITY;
        distance[order[order.len() - 1]] = f64::INFINITY;
        for w in order.windows(3) {
            distance[w[1]] += (value(w[2]) - value(w[0])) / range;
        }
    }
    distance
}
