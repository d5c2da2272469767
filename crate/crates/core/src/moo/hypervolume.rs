use crate::metrics::ObjectiveVector;

/// Hypervolume dominated by `points` and bounded by `reference` (all
/// objectives minimized). Points not strictly better than the reference in
/// every objective contribute nothing.
///
/// Slices along the third objective and sums 2-D staircase areas, which is
/// O(n² log n) and plenty for population-sized sets.
pub fn hypervolume(points: &[ObjectiveVector], reference: &ObjectiveVector) -> f64 {
    let r = reference.as_array();
    let mut pts: Vec<[f64; 3]> = points
        .iter()
        .map(|p| p.as_array())
        .filter(|p| (0..3).all(|k| p[k] < r[k]))
        .collect();
    if pts.is_empty() {
        return 0.0;
    }
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));

    let mut volume = 0.0;
    let mut active: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    let mut i = 0;
    while i < pts.len() {
        let z = pts[i][2];
        while i < pts.len() && pts[i][2] == z {
            active.push([pts[i][0], pts[i][1]]);
            i += 1;
        }
        let next_z = if i < pts.len() { pts[i][2] } else { r[2] };
        volume += area_2d(&mut active, [r[0], r[1]]) * (next_z - z);
    }
    volume
}

fn area_2d(points: &mut [[f64; 2]], reference: [f64; 2]) -> f64 {
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut best_y = reference[1];
    for p in points.iter() {
        if p[1] < best_y {
            // strip between this point's y and the previous staircase step
            area += (reference[0] - p[0]) * (best_y - p[1]);
            best_y = p[1];
        }
    }
    area
}
