use crate::error::{Error, Result};
use crate::render::PartialImage;

/// Premultiplied over: `C = C_f + (1 - A_f) C_b`, same for alpha.
#[inline]
pub fn over_pixel(front: [f64; 4], back: [f64; 4]) -> [f64; 4] {
    let t = 1.0 - front[3];
    [
        front[0] + t * back[0],
        front[1] + t * back[1],
        front[2] + t * back[2],
        front[3] + t * back[3],
    ]
}

pub(crate) fn over_slices(front: &[[f64; 4]], back: &[[f64; 4]], out: &mut [[f64; 4]]) {
    for ((o, f), b) in out.iter_mut().zip(front).zip(back) {
        *o = over_pixel(*f, *b);
    }
}

/// Composites `front` over `back`. The result keeps the front image's ids.
pub fn over_images(front: &PartialImage, back: &PartialImage) -> Result<PartialImage> {
    if (front.width, front.height) != (back.width, back.height) {
        return Err(Error::Dimension(format!(
            "over of {}x{} and {}x{}",
            front.width, front.height, back.width, back.height
        )));
    }
    let mut pixels = vec![[0.0; 4]; front.pixels.len()];
    over_slices(&front.pixels, &back.pixels, &mut pixels);
    Ok(PartialImage {
        width: front.width,
        height: front.height,
        pixels,
        block_id: front.block_id,
        order_key: front.order_key.min(back.order_key),
    })
}

/// Folds images that are already sorted front to back.
pub fn composite_serial(front_to_back: &[PartialImage]) -> Result<PartialImage> {
    let (first, rest) = front_to_back
        .split_first()
        .ok_or_else(|| Error::Parameter("nothing to composite".into()))?;
    rest.iter()
        .try_fold(first.clone(), |acc, img| over_images(&acc, img))
}
