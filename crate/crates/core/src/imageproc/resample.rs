use super::GrayImage;

/// Source taps and weights for output index `i` of a 2x bilinear upscale with
/// half-pixel centers: output `i` samples source position `i / 2 - 0.25`.
fn taps(i: usize, len: usize) -> (usize, usize, f64) {
    let src = i as f64 / 2.0 - 0.25;
    let lo = src.floor();
    let frac = src - lo;
    let clamp = |v: f64| (v.max(0.0) as usize).min(len - 1);
    (clamp(lo), clamp(lo + 1.0), frac)
}

/// Doubles both dimensions with bilinear interpolation. Edges replicate the
/// border pixels.
pub fn upscale2x(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (ow, oh) = (2 * w, 2 * h);
    let src = img.data();
    let xtaps: Vec<_> = (0..ow).map(|x| taps(x, w)).collect();
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        let (y0, y1, fy) = taps(y, h);
        let (r0, r1) = (&src[y0 * w..(y0 + 1) * w], &src[y1 * w..(y1 + 1) * w]);
        for &(x0, x1, fx) in &xtaps {
            let top = f64::from(r0[x0]) * (1.0 - fx) + f64::from(r0[x1]) * fx;
            let bottom = f64::from(r1[x0]) * (1.0 - fx) + f64::from(r1[x1]) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(ow as u32, oh as u32, out).expect("dimensions are consistent")
}
