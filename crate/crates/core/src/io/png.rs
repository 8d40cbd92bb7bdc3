//! Grayscale PNG import and 8-bit slice export.

use std::fs;
use std::io::{BufWriter, Cursor};
use std::path::Path;

use png::{BitDepth, ColorType};

use crate::error::{Error, Result};
use crate::planes::{extract_plane, plane_shape, ViewAxis};
use crate::scalar::Scalar;
use crate::volume::{min_max, Volume};

fn png_err(path: &Path, reason: impl ToString) -> Error {
    Error::Png {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Reads an 8- or 16-bit grayscale PNG as an (H, W) volume of raw sample
/// values, optionally resized bilinearly to `target` = (height, width).
pub fn read_png<T: Scalar>(path: &Path, target: Option<(usize, usize)>) -> Result<Volume<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = png::Decoder::new(Cursor::new(bytes))
        .read_info()
        .map_err(|e| png_err(path, e))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| png_err(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| png_err(path, e))?;
    if info.color_type != ColorType::Grayscale {
        return Err(png_err(path, format!("color type {:?} is not grayscale", info.color_type)));
    }
    let (h, w) = (info.height as usize, info.width as usize);
    let mut pixels = Vec::with_capacity(h * w);
    for row in buf[..info.line_size * h].chunks_exact(info.line_size) {
        match info.bit_depth {
            BitDepth::Eight => pixels.extend(row[..w].iter().map(|&v| v as f64)),
            BitDepth::Sixteen => pixels.extend(
                row[..2 * w]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64),
            ),
            other => return Err(png_err(path, format!("bit depth {other:?} is not 8 or 16"))),
        }
    }
    let (pixels, shape) = match target {
        Some((th, tw)) if (th, tw) != (h, w) => (resize_bilinear(&pixels, (h, w), (th, tw))?, vec![th, tw]),
        _ => (pixels, vec![h, w]),
    };
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Volume::from_data(id, shape, pixels.into_iter().map(T::of).collect())
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
pub fn resize_bilinear(src: &[f64], from: (usize, usize), to: (usize, usize)) -> Result<Vec<f64>> {
    let ((h, w), (th, tw)) = (from, to);
    if h * w != src.len() || h == 0 || w == 0 || th == 0 || tw == 0 {
        return Err(Error::InvalidParameter(format!("cannot resize {from:?} to {to:?}")));
    }
    let coord = |i: usize, n: usize, m: usize| -> (usize, usize, f64) {
        let p = ((i as f64 + 0.5) * n as f64 / m as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = p.floor() as usize;
        (i0, (i0 + 1).min(n - 1), p - i0 as f64)
    };
    let mut out = Vec::with_capacity(th * tw);
    for r in 0..th {
        let (y0, y1, fy) = coord(r, h, th);
        for c in 0..tw {
            let (x0, x1, fx) = coord(c, w, tw);
            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            let bottom = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    Ok(out)
}

/// Maps the plane's own min..max onto 0..255.
pub fn window_u8<T: Scalar>(plane: &[T]) -> Vec<u8> {
    let Some((lo, hi)) = min_max(plane) else {
        return Vec::new();
    };
    let (lo, hi) = (lo.wide(), hi.wide());
    plane
        .iter()
        .map(|v| {
            if hi > lo {
                ((v.wide() - lo) / (hi - lo) * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect()
}

pub fn write_gray8(path: &Path, height: usize, width: usize, pixels: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(ColorType::Grayscale);
    enc.set_depth(BitDepth::Eight);
    let mut writer = enc.write_header().map_err(|e| png_err(path, e))?;
    writer.write_image_data(pixels).map_err(|e| png_err(path, e))?;
    writer.finish().map_err(|e| png_err(path, e))
}

/// Writes one min-max windowed slice of a volume as an 8-bit PNG.
pub fn export_slice<T: Scalar>(volume: &Volume<T>, axis: ViewAxis, index: usize, path: &Path) -> Result<()> {
    let plane = extract_plane(volume, axis, index)?;
    let [h, w] = plane_shape(volume.shape(), axis);
    write_gray8(path, h, w, &window_u8(&plane))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_gray16(path: &Path, h: usize, w: usize, pixels: &[u16]) {
        let file = fs::File::create(path).unwrap();
        let mut enc = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
        enc.set_color(ColorType::Grayscale);
        enc.set_depth(BitDepth::Sixteen);
        let data: Vec<u8> = pixels.iter().flat_map(|v| v.to_be_bytes()).collect();
        enc.write_header().unwrap().write_image_data(&data).unwrap();
    }

    #[test]
    fn eight_bit_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.png");
        let px: Vec<u8> = (0..12).map(|i| i * 20).collect();
        write_gray8(&p, 3, 4, &px).unwrap();
        let v = read_png::<f32>(&p, None).unwrap();
        assert_eq!(v.shape(), &[3, 4]);
        assert_eq!(v.data(), px.iter().map(|&x| x as f32).collect::<Vec<_>>().as_slice());
        assert_eq!(v.id(), "img");
    }

    #[test]
    fn sixteen_bit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        write_gray16(&p, 1, 3, &[0, 1000, 65535]);
        assert_eq!(read_png::<f64>(&p, None).unwrap().data(), &[0.0, 1000.0, 65535.0]);
    }

    #[test]
    fn downsample_halves() {
        // 2x2 block averages for an exact factor-two reduction with center alignment
        let src: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let out = resize_bilinear(&src, (4, 4), (2, 2)).unwrap();
        let oracle: Vec<f64> = [(0, 0), (0, 2), (2, 0), (2, 2)]
            .iter()
            .map(|&(r, c)| (src[r * 4 + c] + src[r * 4 + c + 1] + src[(r + 1) * 4 + c] + src[(r + 1) * 4 + c + 1]) / 4.0)
            .collect();
        assert_eq!(out, oracle);
    }

    #[test]
    fn resize_keeps_constant_and_identity() {
        let src = vec![3.0; 35];
        assert!(resize_bilinear(&src, (5, 7), (11, 3)).unwrap().iter().all(|&v| v == 3.0));
        let ramp: Vec<f64> = (0..35).map(|i| i as f64).collect();
        assert_eq!(resize_bilinear(&ramp, (5, 7), (5, 7)).unwrap(), ramp);
    }

    #[test]
    fn resize_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.png");
        write_gray8(&p, 8, 8, &[100; 64]).unwrap();
        let v = read_png::<f32>(&p, Some((4, 2))).unwrap();
        assert_eq!(v.shape(), &[4, 2]);
        assert!(v.data().iter().all(|&x| x == 100.0));
    }

    #[test]
    fn rejects_color() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.png");
        let file = fs::File::create(&p).unwrap();
        let mut enc = png::Encoder::new(BufWriter::new(file), 1, 1);
        enc.set_color(ColorType::Rgb);
        enc.set_depth(BitDepth::Eight);
        enc.write_header().unwrap().write_image_data(&[1, 2, 3]).unwrap();
        assert!(matches!(read_png::<f32>(&p, None), Err(Error::Png { .. })));
    }

    #[test]
    fn export_windows_slice() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<f32> = (0..27).map(|i| i as f32).collect();
        let v = Volume::from_data("v", vec![3, 3, 3], data).unwrap();
        let p = dir.path().join("s.png");
        export_slice(&v, ViewAxis::Axial, 1, &p).unwrap();
        let back = read_png::<f32>(&p, None).unwrap();
        assert_eq!(back.shape(), &[3, 3]);
        assert_eq!(back.data()[0], 0.0);
        assert_eq!(back.data()[8], 255.0);
        assert_eq!(window_u8(&[2.0f32, 2.0]), vec![0, 0]);
    }
}
