use super::NormalizedDiagram;

/// Pixel grid over the unit square in (birth, persistence) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageGrid {
    pub rows: usize,
    pub cols: usize,
    pub sigma: f64,
}

impl ImageGrid {
    pub fn square(resolution: usize, sigma: f64) -> Self {
        Self {
            rows: resolution,
            cols: resolution,
            sigma,
        }
    }
}

/// Kernels are cut off beyond this many standard deviations per axis.
const TRUNCATE_SIGMAS: f64 = 4.0;

/// Persistence image with linear weighting `w(p) = p / max p` (uniform
/// weights when every point sits on the diagonal). Rows run along
/// persistence, columns along birth; output is row-major.
pub fn persistence_image(diagram: &NormalizedDiagram, grid: &ImageGrid) -> Vec<f64> {
    let max_persistence = diagram.points.iter().map(|&(b, d)| d - b).fold(0.0f64, f64::max);
    persistence_image_with_normalizer(diagram, grid, max_persistence)
}

/// Same as [`persistence_image`] with an externally fixed weight normalizer.
pub fn persistence_image_with_normalizer(
    diagram: &NormalizedDiagram,
    grid: &ImageGrid,
    max_persistence: f64,
) -> Vec<f64> {
    let mut image = vec![0.0; grid.rows * grid.cols];
    let (dx, dy) = (1.0 / grid.cols as f64, 1.0 / grid.rows as f64);
    let s2 = grid.sigma * grid.sigma;
    // density times pixel area, so an interior point contributes unit mass
    let norm = dx * dy / (2.0 * std::f64::consts::PI * s2);
    let reach = TRUNCATE_SIGMAS * grid.sigma;

    for &(birth, death) in &diagram.points {
        let pers = death - birth;
        let weight = if max_persistence > 0.0 {
            pers / max_persistence
        } else {
            1.0
        };
        if weight == 0.0 {
            continue;
        }
        let col_range = pixel_range(birth, reach, dx, grid.cols);
        let row_range = pixel_range(pers, reach, dy, grid.rows);
        for r in row_range {
            let y = (r as f64 + 0.5) * dy - pers;
            if y.abs() > reach {
                continue;
            }
            for c in col_range.clone() {
                let x = (c as f64 + 0.5) * dx - birth;
                if x.abs() > reach {
                    continue;
                }
                image[r * grid.cols + c] += weight * norm * (-(x * x + y * y) / (2.0 * s2)).exp();
            }
        }
    }
    image
}

fn pixel_range(center: f64, reach: f64, step: f64, count: usize) -> std::ops::Range<usize> {
    let lo = ((center - reach) / step - 0.5).floor().max(0.0) as usize;
    let hi = (((center + reach) / step - 0.5).ceil() + 1.0).clamp(0.0, count as f64) as usize;
    lo.min(count)..hi
}
