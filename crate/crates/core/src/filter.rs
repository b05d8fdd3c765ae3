//! Windowed primitives shared by the filters: running-sum box means,
//! van Herk/Gil-Werman sliding minima and separable correlation. All of
//! them use replicate padding, so a window at the border sees the edge
//! sample repeated.

/// Mean over the `(2r+1)²` window of a `width x height` plane.
pub fn box_mean(plane: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    debug_assert_eq!(plane.len(), width * height);
    let n = (2 * radius + 1) as f64;
    let mut rows = vec![0.0; plane.len()];
    let mut line = Vec::with_capacity(width.max(height));
    let mut sums = Vec::with_capacity(width.max(height));
    for y in 0..height {
        line.clear();
        line.extend_from_slice(&plane[y * width..(y + 1) * width]);
        running_sum(&line, radius, &mut sums);
        rows[y * width..(y + 1) * width].copy_from_slice(&sums);
    }
    let mut out = vec![0.0; plane.len()];
    for x in 0..width {
        line.clear();
        line.extend((0..height).map(|y| rows[y * width + x]));
        running_sum(&line, radius, &mut sums);
        for (y, s) in sums.iter().enumerate() {
            out[y * width + x] = s / (n * n);
        }
    }
    out
}

/// Windowed sums of `line` with replicate padding, O(len) regardless of radius.
fn running_sum(line: &[f64], radius: usize, out: &mut Vec<f64>) {
    let len = line.len() as isize;
    let r = radius as isize;
    let at = |i: isize| line[i.clamp(0, len - 1) as usize];
    out.clear();
    // Kahan-style compensation keeps the drift of the sliding sum near one ulp.
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut add = |sum: &mut f64, v: f64| {
        let y = v - comp;
        let t = *sum + y;
        comp = (t - *sum) - y;
        *sum = t;
    };
    for i in -r..=r {
        add(&mut sum, at(i));
    }
    out.push(sum);
    for i in 1..len {
        add(&mut sum, at(i + r));
        add(&mut sum, -at(i - r - 1));
        out.push(sum);
    }
}

/// Minimum over the `(2r+1)²` window. Out-of-range neighbours are replicas
/// of edge samples, so this equals the minimum over the in-bounds window.
pub fn min_filter(plane: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    debug_assert_eq!(plane.len(), width * height);
    if radius == 0 {
        return plane.to_vec();
    }
    let mut rows = vec![0.0; plane.len()];
    let mut line = Vec::new();
    let mut mins = Vec::new();
    for y in 0..height {
        line.clear();
        line.extend_from_slice(&plane[y * width..(y + 1) * width]);
        sliding_min(&line, radius, &mut mins);
        rows[y * width..(y + 1) * width].copy_from_slice(&mins);
    }
    let mut out = vec![0.0; plane.len()];
    for x in 0..width {
        line.clear();
        line.extend((0..height).map(|y| rows[y * width + x]));
        sliding_min(&line, radius, &mut mins);
        for (y, m) in mins.iter().enumerate() {
            out[y * width + x] = *m;
        }
    }
    out
}

/// van Herk/Gil-Werman: block-wise prefix and suffix minima, three
/// comparisons per sample independent of the window size.
fn sliding_min(line: &[f64], radius: usize, out: &mut Vec<f64>) {
    let k = 2 * radius + 1;
    let len = line.len();
    // pad by `radius` edge replicas on both sides, then to a multiple of k
    let padded_len = (len + 2 * radius).div_ceil(k) * k;
    let padded: Vec<f64> = (0..padded_len)
        .map(|i| line[(i as isize - radius as isize).clamp(0, len as isize - 1) as usize])
        .collect();
    let mut prefix = padded.clone();
    let mut suffix = padded.clone();
    for start in (0..padded_len).step_by(k) {
        for i in start + 1..start + k {
            prefix[i] = prefix[i].min(prefix[i - 1]);
        }
        for i in (start..start + k - 1).rev() {
            suffix[i] = suffix[i].min(suffix[i + 1]);
        }
    }
    out.clear();
    // window over padded[j..j+k] is centered on line[j]
    out.extend((0..len).map(|j| suffix[j].min(prefix[j + k - 1])));
}

/// Correlation with a separable kernel `row ⊗ col` (each of odd length,
/// centered), replicate padding.
pub fn separable_correlate(plane: &[f64], width: usize, height: usize, row_kernel: &[f64], col_kernel: &[f64]) -> Vec<f64> {
    let rx = (row_kernel.len() / 2) as isize;
    let ry = (col_kernel.len() / 2) as isize;
    let (w, h) = (width as isize, height as isize);
    let mut rows = vec![0.0; plane.len()];
    for y in 0..height {
        let line = &plane[y * width..(y + 1) * width];
        for x in 0..w {
            rows[y * width + x as usize] = row_kernel
                .iter()
                .enumerate()
                .map(|(k, g)| g * line[(x + k as isize - rx).clamp(0, w - 1) as usize])
                .sum();
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..h {
        for x in 0..width {
            out[y as usize * width + x] = col_kernel
                .iter()
                .enumerate()
                .map(|(k, g)| g * rows[(y + k as isize - ry).clamp(0, h - 1) as usize * width + x])
                .sum();
        }
    }
    out
}

/// Adjoint of [`separable_correlate`]: scatters each output sample back onto
/// the (clamped) input positions it was read from.
pub fn separable_correlate_adjoint(
    grad: &[f64],
    width: usize,
    height: usize,
    row_kernel: &[f64],
    col_kernel: &[f64],
) -> Vec<f64> {
    let rx = (row_kernel.len() / 2) as isize;
    let ry = (col_kernel.len() / 2) as isize;
    let (w, h) = (width as isize, height as isize);
    let mut rows = vec![0.0; grad.len()];
    for y in 0..h {
        for x in 0..width {
            let g = grad[y as usize * width + x];
            for (k, kv) in col_kernel.iter().enumerate() {
                let src = (y + k as isize - ry).clamp(0, h - 1) as usize;
                rows[src * width + x] += kv * g;
            }
        }
    }
    let mut out = vec![0.0; grad.len()];
    for y in 0..height {
        for x in 0..w {
            let g = rows[y * width + x as usize];
            for (k, kv) in row_kernel.iter().enumerate() {
                let src = (x + k as isize - rx).clamp(0, w - 1) as usize;
                out[y * width + src] += kv * g;
            }
        }
    }
    out
}
