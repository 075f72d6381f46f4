//! Pixel access: source images, crops, and the final answer visual.

use std::path::Path;
use std::sync::Arc;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::{union_bbox, BBox};
use crate::error::GeometryError;

/// An image the search runs over. Virtual images carry only dimensions and
/// are used by the simulator, where no backend ever needs real pixels.
#[derive(Debug, Clone)]
pub struct SourceImage {
    width: u32,
    height: u32,
    pixels: Option<Arc<RgbImage>>,
}

impl SourceImage {
    pub fn from_rgb(img: RgbImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            pixels: Some(Arc::new(img)),
        }
    }

    pub fn virtual_image(width: u32, height: u32) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyBox {
                w: width,
                h: height,
            });
        }
        Ok(Self {
            width,
            height,
            pixels: None,
        })
    }

    /// Reads a PNG or JPEG file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| GeometryError::Image {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Ok(Self::from_rgb(img.to_rgb8()))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn full_bbox(&self) -> BBox {
        BBox {
            x: 0,
            y: 0,
            w: self.width,
            h: self.height,
        }
    }

    pub fn pixels(&self) -> Option<&RgbImage> {
        self.pixels.as_deref()
    }

    pub fn is_virtual(&self) -> bool {
        self.pixels.is_none()
    }
}

/// Pixel-exact sub-image, no resampling.
pub fn crop_view(source: &SourceImage, bbox: BBox) -> Result<RgbImage, GeometryError> {
    if !bbox.fits_within(source.width, source.height) {
        return Err(GeometryError::OutOfBounds {
            bbox,
            width: source.width,
            height: source.height,
        });
    }
    let pixels = source.pixels().ok_or(GeometryError::NoPixels)?;
    Ok(image::imageops::crop_imm(pixels, bbox.x, bbox.y, bbox.w, bbox.h).to_image())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// The oracle sees only the current patch.
    Local,
    /// The oracle sees the full image followed by the current patch.
    GlobalLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResizePolicy {
    /// The serving model downsamples the whole input to a fixed size.
    Naive,
    /// The serving model tiles the input itself.
    ServerSide,
}

/// One image handed to the oracle, described by layout rather than pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    /// Crop of the source image.
    Region(BBox),
    /// Black canvas the size of `canvas` with each patch pasted at its
    /// position relative to the canvas origin.
    Pasted { canvas: BBox, patches: Vec<BBox> },
}

impl View {
    /// The source-image area this view covers.
    pub fn extent(&self) -> BBox {
        match self {
            View::Region(b) => *b,
            View::Pasted { canvas, .. } => *canvas,
        }
    }

    pub fn render(&self, source: &SourceImage) -> Result<RgbImage, GeometryError> {
        match self {
            View::Region(b) => crop_view(source, *b),
            View::Pasted { canvas, patches } => paste_on_canvas(source, *canvas, patches),
        }
    }
}

fn paste_on_canvas(
    source: &SourceImage,
    canvas: BBox,
    patches: &[BBox],
) -> Result<RgbImage, GeometryError> {
    let mut out = RgbImage::from_pixel(canvas.w, canvas.h, Rgb([0, 0, 0]));
    for patch in patches {
        if !canvas.contains(patch) {
            return Err(GeometryError::OutOfBounds {
                bbox: *patch,
                width: canvas.w,
                height: canvas.h,
            });
        }
        let crop = crop_view(source, *patch)?;
        image::imageops::replace(
            &mut out,
            &crop,
            (patch.x - canvas.x) as i64,
            (patch.y - canvas.y) as i64,
        );
    }
    Ok(out)
}

/// Final visual context: the views in the order the oracle should see
/// them, plus the union box `b*` they were derived from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerVisual {
    pub views: Vec<View>,
    pub union: BBox,
}

impl AnswerVisual {
    pub fn render(&self, source: &SourceImage) -> Result<Vec<RgbImage>, GeometryError> {
        self.views.iter().map(|v| v.render(source)).collect()
    }

    pub fn is_pasted(&self) -> bool {
        self.views.iter().any(|v| matches!(v, View::Pasted { .. }))
    }
}

/// Lays out the final visual for the answering call.
///
/// Global+local input always gets the full image plus the full union crop.
/// Local input with naive resizing pastes the individual patches onto a
/// blank canvas once the union's longer side exceeds `paste_longer_side`.
pub fn assemble_answer_visual(
    source: &SourceImage,
    result_boxes: &[BBox],
    mode: InputMode,
    resize_policy: ResizePolicy,
    paste_longer_side: u32,
) -> Result<AnswerVisual, GeometryError> {
    let union = union_bbox(result_boxes)?;
    for b in result_boxes {
        if !b.fits_within(source.width(), source.height()) {
            return Err(GeometryError::OutOfBounds {
                bbox: *b,
                width: source.width(),
                height: source.height(),
            });
        }
    }
    let views = match (mode, resize_policy) {
        (InputMode::GlobalLocal, _) => vec![View::Region(source.full_bbox()), View::Region(union)],
        (InputMode::Local, ResizePolicy::Naive) if union.longer_side() > paste_longer_side => {
            vec![View::Pasted {
                canvas: union,
                patches: result_boxes.to_vec(),
            }]
        }
        (InputMode::Local, _) => vec![View::Region(union)],
    };
    Ok(AnswerVisual { views, union })
}

/// Draws visited boxes (blue → red by visit order) and the union box
/// (green, 3 px) over a copy of the source.
pub fn annotate_trace(
    source: &SourceImage,
    visited: &[BBox],
    union: Option<BBox>,
) -> Result<RgbImage, GeometryError> {
    let mut out = source.pixels().ok_or(GeometryError::NoPixels)?.clone();
    let n = visited.len().max(2) - 1;
    for (i, b) in visited.iter().enumerate() {
        let t = i as f64 / n as f64;
        let color = Rgb([(255.0 * t) as u8, 0, (255.0 * (1.0 - t)) as u8]);
        draw_rect(&mut out, b, color, 1);
    }
    if let Some(u) = union {
        draw_rect(&mut out, &u, Rgb([0, 220, 0]), 3);
    }
    Ok(out)
}

fn draw_rect(img: &mut RgbImage, b: &BBox, color: Rgb<u8>, thickness: u32) {
    let (w, h) = img.dimensions();
    let x1 = b.right().min(w);
    let y1 = b.bottom().min(h);
    for t in 0..thickness {
        let (top, bottom) = (b.y + t, y1.saturating_sub(1 + t));
        let (left, right) = (b.x + t, x1.saturating_sub(1 + t));
        if top > bottom || left > right {
            break;
        }
        for x in left..=right {
            img.put_pixel(x, top, color);
            img.put_pixel(x, bottom, color);
        }
        for y in top..=bottom {
            img.put_pixel(left, y, color);
            img.put_pixel(right, y, color);
        }
    }
}
