use super::Image;

/// Five-point `-Delta_h` with zero values outside the grid.
pub fn neg_laplacian(img: &Image) -> Image {
    let n = img.grid.n;
    let h = img.grid.pixel();
    let inv_h2 = 1.0 / (h * h);
    let f = &img.values;
    let mut out = Image::zeros(img.grid);
    for k in 0..n {
        for i in 0..n {
            let o = k * n + i;
            let mut s = 4.0 * f[o];
            if i > 0 {
                s -= f[o - 1];
            }
            if i + 1 < n {
                s -= f[o + 1];
            }
            if k > 0 {
                s -= f[o - n];
            }
            if k + 1 < n {
                s -= f[o + n];
            }
            out.values[o] = s * inv_h2;
        }
    }
    out
}

/// `||grad f||^2` from forward differences with zero padding, weighted by the
/// pixel area. Equals `<f, -Delta_h f>` (pixel-weighted) for any `f`.
pub fn grad_norm_sq(img: &Image) -> f64 {
    let n = img.grid.n;
    let f = &img.values;
    let mut s = 0.0;
    // differences between neighbours plus the jumps to the zero padding at the
    // low and high ends of each line
    for k in 0..n {
        for i in 0..=n {
            let a = if i < n { f[k * n + i] } else { 0.0 };
            let b = if i > 0 { f[k * n + i - 1] } else { 0.0 };
            s += (a - b) * (a - b);
        }
    }
    for i in 0..n {
        for k in 0..=n {
            let a = if k < n { f[k * n + i] } else { 0.0 };
            let b = if k > 0 { f[(k - 1) * n + i] } else { 0.0 };
            s += (a - b) * (a - b);
        }
    }
    // (difference / h)^2 * h^2
    s
}
