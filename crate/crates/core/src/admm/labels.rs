use serde::{Deserialize, Serialize};

use crate::image::Image;

/// Integer segment label per pixel, contiguous from 0 in raster discovery
/// order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<usize>,
    count: usize,
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn get(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x]
    }

    /// Pixel counts per label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Builds a map from 4-neighbour link predicates; `right(p)` links pixel
    /// `p` with `p + 1`, `down(p)` with `p + width`.
    pub(crate) fn from_links(
        width: usize,
        height: usize,
        right: impl Fn(usize) -> bool,
        down: impl Fn(usize) -> bool,
    ) -> Self {
        const UNSET: usize = usize::MAX;
        let n = width * height;
        let mut labels = vec![UNSET; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for seed in 0..n {
            if labels[seed] != UNSET {
                continue;
            }
            labels[seed] = count;
            stack.push(seed);
            while let Some(p) = stack.pop() {
                let (x, y) = (p % width, p / width);
                let mut visit = |q: usize, linked: bool| {
                    if linked && labels[q] == UNSET {
                        labels[q] = count;
                        stack.push(q);
                    }
                };
                if x + 1 < width {
                    visit(p + 1, right(p));
                }
                if x > 0 {
                    visit(p - 1, right(p - 1));
                }
                if y + 1 < height {
                    visit(p + width, down(p));
                }
                if y > 0 {
                    visit(p - width, down(p - width));
                }
            }
            count += 1;
        }
        Self {
            width,
            height,
            labels,
            count,
        }
    }
}

fn close(img: &Image, p: usize, q: usize, tol: f64) -> bool {
    img.pixel(p)
        .iter()
        .zip(img.pixel(q))
        .all(|(a, b)| (a - b).abs() <= tol)
}

/// Connected components under 4-connectivity; neighbours are joined when
/// every channel differs by at most `merge_tolerance`.
pub fn extract_labels(v: &Image, merge_tolerance: f64) -> LabelMap {
    let w = v.width();
    LabelMap::from_links(
        w,
        v.height(),
        |p| close(v, p, p + 1, merge_tolerance),
        |p| close(v, p, p + w, merge_tolerance),
    )
}

/// `1e-6 · (max − min)` of the image values.
pub fn default_merge_tolerance(v: &Image) -> f64 {
    let (lo, hi) = v.value_range();
    1e-6 * (hi - lo)
}

/// Labels of a converged split: horizontal neighbours are joined where the
/// row-chain variable `u_row` has no jump, vertical neighbours where the
/// column-chain variable `u_col` has none. Pairs whose values in `v` agree
/// within `merge_tolerance` are joined as well.
pub fn consensus_labels(u_row: &Image, u_col: &Image, v: &Image, merge_tolerance: f64) -> LabelMap {
    let w = v.width();
    LabelMap::from_links(
        w,
        v.height(),
        |p| u_row.pixel(p) == u_row.pixel(p + 1) || close(v, p, p + 1, merge_tolerance),
        |p| u_col.pixel(p) == u_col.pixel(p + w) || close(v, p, p + w, merge_tolerance),
    )
}

/// Replaces every segment by the mean of `v` over it.
pub fn piecewise_constant_projection(v: &Image, labels: &LabelMap) -> Image {
    let c = v.channels();
    let mut sums = vec![0.0; labels.count() * c];
    let sizes = labels.sizes();
    for (p, &l) in labels.labels().iter().enumerate() {
        for (k, value) in v.pixel(p).iter().enumerate() {
            sums[l * c + k] += value;
        }
    }
    let mut out = v.clone();
    for (p, &l) in labels.labels().iter().enumerate() {
        for (k, o) in out.pixel_mut(p).iter_mut().enumerate() {
            *o = sums[l * c + k] / sizes[l] as f64;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ImageShape;

    #[test]
    fn constant_and_two_plateaus() {
        let flat = Image::filled(ImageShape::new(5, 4, 1), 0.3);
        assert_eq!(extract_labels(&flat, 0.0).count(), 1);
        let split = Image::from_fn(6, 3, |x, _| if x < 0.0 { 0.0 } else { 1.0 });
        let map = extract_labels(&split, 1e-6);
        assert_eq!(map.count(), 2);
        assert_eq!(map.get(0, 0), 0);
        assert_eq!(map.get(5, 2), 1);
    }

    #[test]
    fn checkerboard_splits_every_pixel() {
        let shape = ImageShape::new(4, 3, 1);
        let mut img = Image::zeros(shape);
        for y in 0..3 {
            for x in 0..4 {
                img.set(x, y, 0, ((x + y) % 2) as f64);
            }
        }
        assert_eq!(extract_labels(&img, 0.5).count(), 12);
        assert_eq!(extract_labels(&img, 1.0).count(), 1);
    }

    #[test]
    fn projection_takes_segment_means() {
        let img = Image::from_vec(ImageShape::new(4, 1, 1), vec![1.0, 3.0, 10.0, 12.0]).unwrap();
        let map = extract_labels(&img, 2.0);
        assert_eq!(map.count(), 2);
        let proj = piecewise_constant_projection(&img, &map);
        assert_eq!(proj.data(), &[2.0, 2.0, 11.0, 11.0]);
        assert_eq!(map.sizes(), vec![2, 2]);
    }
}
