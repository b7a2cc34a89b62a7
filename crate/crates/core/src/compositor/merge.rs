use crate::compositor::over::over_pixel;
use crate::compositor::swap::OwnedRange;
use crate::error::{Error, Result};
use crate::render::RgbImage;

/// Round-half-up quantization of a `[0, 1]` channel to 8 bits.
#[inline]
pub fn quantize(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Concatenates owned ranges, composites the image over `background` and
/// quantizes. Ranges may extend past `width * height` into padding, which is
/// dropped; together they must tile `0..padded_len` exactly.
pub fn merge(
    ranges: &[OwnedRange],
    width: usize,
    height: usize,
    background: [f64; 4],
) -> Result<RgbImage> {
    let total = width * height;
    let mut sorted: Vec<&OwnedRange> = ranges.iter().collect();
    sorted.sort_by_key(|r| r.start);
    let mut next = 0;
    for r in &sorted {
        if r.start < next {
            return Err(Error::Parameter(format!(
                "range of worker {} starting at {} overlaps previous range ending at {next}",
                r.worker, r.start
            )));
        }
        if r.start > next {
            return Err(Error::Parameter(format!(
                "pixels {next}..{} are not owned by any worker",
                r.start
            )));
        }
        next = r.start + r.pixels.len();
    }
    if next < total {
        return Err(Error::Parameter(format!(
            "pixels {next}..{total} are not owned by any worker"
        )));
    }
    let bg = [
        background[0] * background[3],
        background[1] * background[3],
        background[2] * background[3],
        background[3],
    ];
    let mut data = Vec::with_capacity(total * 3);
    for px in sorted.iter().flat_map(|r| r.pixels.iter()).take(total) {
        let c = over_pixel(*px, bg);
        data.extend_from_slice(&[quantize(c[0]), quantize(c[1]), quantize(c[2])]);
    }
    RgbImage::new(width, height, data)
}
