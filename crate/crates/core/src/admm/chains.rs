use crate::neighborhoods::Displacement;

/// Decomposes a `width × height` grid into maximal paths along `p`.
///
/// `p = (dx, dy)` is measured in (column, row) index steps. A chain starts at
/// every pixel whose predecessor `x − p` is out of bounds and follows `+p`
/// until it leaves the grid, so each pixel lies on exactly one chain. Chains
/// are listed in raster order of their first pixel and hold row-major pixel
/// indices.
pub fn chains_for_displacement(width: usize, height: usize, p: Displacement) -> Vec<Vec<usize>> {
    assert!(p != [0, 0], "zero displacement has no chains");
    let (w, h) = (width as i64, height as i64);
    let inside = |x: i64, y: i64| x >= 0 && x < w && y >= 0 && y < h;
    let mut chains = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if inside(x - p[0], y - p[1]) {
                continue;
            }
            let mut chain = Vec::new();
            let (mut cx, mut cy) = (x, y);
            while inside(cx, cy) {
                chain.push((cy * w + cx) as usize);
                cx += p[0];
                cy += p[1];
            }
            chains.push(chain);
        }
    }
    chains
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_diagonals() {
        let rows = chains_for_displacement(4, 4, [1, 0]);
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|c| c.len() == 4));
        assert_eq!(rows[1], vec![4, 5, 6, 7]);

        let diag = chains_for_displacement(3, 3, [1, 1]);
        let mut lens: Vec<usize> = diag.iter().map(Vec::len).collect();
        lens.sort_unstable();
        assert_eq!(lens, vec![1, 1, 2, 2, 3]);
    }
}
