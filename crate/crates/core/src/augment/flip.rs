use crate::data::Image;

/// Mirror map of a row of `width` pixels: `(x, y) -> (width - 1 - x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlipMap {
    pub width: usize,
}

impl FlipMap {
    pub fn new(width: usize) -> Self {
        Self { width }
    }

    #[inline]
    pub fn map(&self, x: usize, y: usize) -> (usize, usize) {
        (self.width - 1 - x, y)
    }
}

pub fn horizontal_flip(img: &Image) -> Image {
    let (w, h) = (img.width(), img.height());
    let fm = FlipMap::new(w);
    let src = img.pixels();
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let (xs, ys) = fm.map(x, y);
            out[y * w + x] = src[ys * w + xs];
        }
    }
    Image::from_raw(w, h, out)
}
