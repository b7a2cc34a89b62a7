use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

/// Premultiplied RGBA image rendered from one block.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 4]>,
    pub block_id: usize,
    /// Visibility rank of the source block for the current camera.
    pub order_key: usize,
}

impl PartialImage {
    pub fn transparent(width: usize, height: usize, block_id: usize, order_key: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![[0.0; 4]; width * height],
            block_id,
            order_key,
        }
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Checks `0 <= A <= 1` and premultiplied colour `<= A` per pixel.
    pub fn is_valid_premultiplied(&self) -> bool {
        self.pixels.iter().all(|p| {
            let a = p[3];
            (-1e-9..=1.0 + 1e-9).contains(&a) && p[..3].iter().all(|&c| c >= -1e-9 && c <= a + 1e-6)
        })
    }
}

/// 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::Dimension(format!(
                "{width}x{height} RGB needs {} bytes, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc
                .write_header()
                .map_err(|e| Error::Format(format!("png header: {e}")))?;
            writer
                .write_image_data(&self.data)
                .map_err(|e| Error::Format(format!("png data: {e}")))?;
        }
        Ok(out)
    }

    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self> {
        let decoder = png::Decoder::new(Cursor::new(bytes));
        let mut reader = decoder
            .read_info()
            .map_err(|e| Error::Format(format!("png: {e}")))?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| Error::Format(format!("png: {e}")))?;
        if info.bit_depth != png::BitDepth::Eight {
            return Err(Error::Format("only 8-bit PNG images are supported".into()));
        }
        let (w, h) = (info.width as usize, info.height as usize);
        buf.truncate(info.buffer_size());
        let data = match info.color_type {
            png::ColorType::Rgb => buf,
            png::ColorType::Rgba => buf
                .chunks_exact(4)
                .flat_map(|p| [p[0], p[1], p[2]])
                .collect(),
            png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g]).collect(),
            png::ColorType::GrayscaleAlpha => buf
                .chunks_exact(2)
                .flat_map(|p| [p[0], p[0], p[0]])
                .collect(),
            png::ColorType::Indexed => {
                return Err(Error::Format("indexed PNG not supported".into()))
            }
        };
        Self::new(w, h, data)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_png_bytes()?)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read_png(path: &Path) -> Result<Self> {
        let bytes =
            fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_png_bytes(&bytes)
    }
}
