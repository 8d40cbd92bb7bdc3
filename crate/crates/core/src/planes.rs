//! 2.5D slicing: stacks of adjacent planes along the three viewing axes and
//! averaging of per-axis predictions.
//!
//! A 2D image `(H, W)` is handled as a volume `(1, H, W)`: it has the single
//! axial axis and exactly one plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::{pad3, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewAxis {
    Axial,
    Coronal,
    Sagittal,
}

impl ViewAxis {
    pub const ALL: [ViewAxis; 3] = [ViewAxis::Axial, ViewAxis::Coronal, ViewAxis::Sagittal];

    /// Grid axis of the padded 3-axis layout.
    pub fn grid_axis(self) -> usize {
        match self {
            ViewAxis::Axial => 0,
            ViewAxis::Coronal => 1,
            ViewAxis::Sagittal => 2,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            ViewAxis::Axial => "axial",
            ViewAxis::Coronal => "coronal",
            ViewAxis::Sagittal => "sagittal",
        }
    }

    /// Viewing axes available for a volume with `ndim` axes.
    pub fn available(ndim: usize) -> &'static [ViewAxis] {
        if ndim == 2 {
            &ViewAxis::ALL[..1]
        } else {
            &ViewAxis::ALL
        }
    }
}

impl std::str::FromStr for ViewAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ViewAxis::ALL
            .into_iter()
            .find(|a| a.key() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown view axis {s:?}")))
    }
}

fn check_axis(ndim: usize, axis: ViewAxis) -> Result<()> {
    if !ViewAxis::available(ndim).contains(&axis) {
        return Err(Error::InvalidParameter(format!(
            "{} axis is not available on a {ndim}D volume",
            axis.key()
        )));
    }
    Ok(())
}

/// Shape of the planes cut orthogonal to `axis`.
pub fn plane_shape(shape: &[usize], axis: ViewAxis) -> [usize; 2] {
    let d = pad3(shape);
    match axis.grid_axis() {
        0 => [d[1], d[2]],
        1 => [d[0], d[2]],
        _ => [d[0], d[1]],
    }
}

/// Number of planes along `axis`.
pub fn axis_len(shape: &[usize], axis: ViewAxis) -> usize {
    pad3(shape)[axis.grid_axis()]
}

#[inline]
fn plane_offset(dims: [usize; 3], axis: usize, index: usize, r: usize, c: usize) -> usize {
    let idx = match axis {
        0 => [index, r, c],
        1 => [r, index, c],
        _ => [r, c, index],
    };
    (idx[0] * dims[1] + idx[1]) * dims[2] + idx[2]
}

/// Copies plane `index` orthogonal to `axis`, row-major.
pub fn extract_plane<T: Scalar>(volume: &Volume<T>, axis: ViewAxis, index: usize) -> Result<Vec<T>> {
    check_axis(volume.ndim(), axis)?;
    let dims = volume.dims3();
    let a = axis.grid_axis();
    if index >= dims[a] {
        return Err(Error::IndexOutOfRange { index, len: dims[a] });
    }
    let [h, w] = plane_shape(volume.shape(), axis);
    let data = volume.data();
    if a == 0 {
        return Ok(data[index * h * w..(index + 1) * h * w].to_vec());
    }
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            out.push(data[plane_offset(dims, a, index, r, c)]);
        }
    }
    Ok(out)
}

/// `k` adjacent planes centered on one plane of a volume.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceStack<T> {
    /// Channel-major `[k, height, width]` payload.
    pub data: Vec<T>,
    pub k: usize,
    pub plane_shape: [usize; 2],
    pub axis: ViewAxis,
    pub index: usize,
    pub volume_id: String,
}

impl<T: Scalar> SliceStack<T> {
    pub fn channel(&self, c: usize) -> &[T] {
        let n = self.plane_shape[0] * self.plane_shape[1];
        &self.data[c * n..(c + 1) * n]
    }

    pub fn center(&self) -> &[T] {
        self.channel(self.k / 2)
    }
}

/// Plane indices of a stack: `index + (c − k/2)` clamped to the axis.
pub fn stack_indices(index: usize, k: usize, len: usize) -> Vec<usize> {
    let half = (k / 2) as isize;
    (0..k as isize)
        .map(|c| (index as isize + c - half).clamp(0, len as isize - 1) as usize)
        .collect()
}

pub fn extract_stack<T: Scalar>(volume: &Volume<T>, axis: ViewAxis, index: usize, k: usize) -> Result<SliceStack<T>> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::InvalidParameter(format!("stack depth k = {k} must be odd")));
    }
    check_axis(volume.ndim(), axis)?;
    let len = axis_len(volume.shape(), axis);
    if index >= len {
        return Err(Error::IndexOutOfRange { index, len });
    }
    let plane_shape = plane_shape(volume.shape(), axis);
    let mut data = Vec::with_capacity(k * plane_shape[0] * plane_shape[1]);
    for i in stack_indices(index, k, len) {
        data.extend(extract_plane(volume, axis, i)?);
    }
    Ok(SliceStack {
        data,
        k,
        plane_shape,
        axis,
        index,
        volume_id: volume.id().to_string(),
    })
}

/// Every stack of the volume along each requested axis, axis by axis in the
/// order given, planes in increasing index.
pub fn iterate_stacks<'a, T: Scalar>(
    volume: &'a Volume<T>,
    k: usize,
    axes: &'a [ViewAxis],
) -> Result<impl Iterator<Item = SliceStack<T>> + 'a> {
    if axes.is_empty() {
        return Err(Error::InvalidParameter("no view axes requested".into()));
    }
    if k == 0 || k % 2 == 0 {
        return Err(Error::InvalidParameter(format!("stack depth k = {k} must be odd")));
    }
    for &a in axes {
        check_axis(volume.ndim(), a)?;
    }
    Ok(axes.iter().flat_map(move |&axis| {
        (0..axis_len(volume.shape(), axis))
            .map(move |i| extract_stack(volume, axis, i, k).expect("axis and index validated"))
    }))
}

/// Builds a volume from per-plane predictions along one axis.
#[derive(Debug, Clone)]
pub struct PlaneAssembler<T> {
    shape: Vec<usize>,
    axis: ViewAxis,
    data: Vec<T>,
    written: Vec<bool>,
}

impl<T: Scalar> PlaneAssembler<T> {
    pub fn new(shape: &[usize], axis: ViewAxis) -> Result<Self> {
        crate::volume::check_shape(shape)?;
        check_axis(shape.len(), axis)?;
        Ok(Self {
            shape: shape.to_vec(),
            axis,
            data: vec![T::zero(); shape.iter().product()],
            written: vec![false; axis_len(shape, axis)],
        })
    }

    pub fn write(&mut self, index: usize, plane: &[T]) -> Result<()> {
        let len = self.written.len();
        if index >= len {
            return Err(Error::IndexOutOfRange { index, len });
        }
        let [h, w] = plane_shape(&self.shape, self.axis);
        if plane.len() != h * w {
            return Err(Error::ShapeMismatch {
                expected: vec![h, w],
                actual: vec![plane.len()],
            });
        }
        let dims = pad3(&self.shape);
        let a = self.axis.grid_axis();
        for r in 0..h {
            for c in 0..w {
                self.data[plane_offset(dims, a, index, r, c)] = plane[r * w + c];
            }
        }
        self.written[index] = true;
        Ok(())
    }

    /// Finished volume; fails if any plane was never written.
    pub fn finish(self, id: impl Into<String>) -> Result<Volume<T>> {
        if let Some(i) = self.written.iter().position(|w| !w) {
            return Err(Error::InvalidVolume(format!(
                "plane {i} along {} was never written",
                self.axis.key()
            )));
        }
        Volume::from_data(id, self.shape, self.data)
    }
}

/// Voxelwise mean of per-axis prediction volumes: three for volumes, one for
/// 2D images.
///
/// Each voxel's values are sorted before summation, so the result does not
/// depend on the order of the inputs.
pub fn fuse_predictions<T: Scalar>(preds: &[Volume<T>]) -> Result<Volume<T>> {
    let first = preds
        .first()
        .ok_or_else(|| Error::InvalidParameter("no predictions to fuse".into()))?;
    let expected = ViewAxis::available(first.ndim()).len();
    if preds.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "expected {expected} per-axis predictions for a {}D volume, got {}",
            first.ndim(),
            preds.len()
        )));
    }
    for p in &preds[1..] {
        if p.shape() != first.shape() {
            return Err(Error::ShapeMismatch {
                expected: first.shape().to_vec(),
                actual: p.shape().to_vec(),
            });
        }
    }
    let n = preds.len() as f64;
    let mut vals = vec![0.0f64; preds.len()];
    let data = (0..first.len())
        .map(|i| {
            for (v, p) in vals.iter_mut().zip(preds) {
                *v = p.data()[i].wide();
            }
            vals.sort_by(f64::total_cmp);
            T::of(vals.iter().sum::<f64>() / n)
        })
        .collect();
    Volume::from_data(first.id(), first.shape().to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    fn random(shape: Vec<usize>, seed: u64) -> Volume<f32> {
        let n = shape.iter().product();
        let mut rng = RngStream::new(seed, 0).rng();
        Volume::new("r", shape, (0..n).map(|_| rng.random::<f32>()).collect(), (0.0, 1.0)).unwrap()
    }

    #[test]
    fn k1_is_direct_slice() {
        let v = random(vec![5, 6, 7], 1);
        for axis in ViewAxis::ALL {
            for i in 0..axis_len(v.shape(), axis) {
                let s = extract_stack(&v, axis, i, 1).unwrap();
                assert_eq!(s.data, extract_plane(&v, axis, i).unwrap());
            }
        }
        // spot check plane layout
        let p = extract_plane(&v, ViewAxis::Sagittal, 3).unwrap();
        assert_eq!(p[2 * 6 + 4], v.get(&[2, 4, 3]));
    }

    #[test]
    fn border_clamping() {
        assert_eq!(stack_indices(0, 3, 10), vec![0, 0, 1]);
        assert_eq!(stack_indices(9, 3, 10), vec![8, 9, 9]);
        assert_eq!(stack_indices(4, 5, 10), vec![2, 3, 4, 5, 6]);
        let v = random(vec![4, 4, 4], 2);
        let s = extract_stack(&v, ViewAxis::Coronal, 0, 3).unwrap();
        assert_eq!(s.channel(0), s.channel(1));
        assert_eq!(s.channel(2), extract_plane(&v, ViewAxis::Coronal, 1).unwrap().as_slice());
    }

    #[test]
    fn errors() {
        let v = random(vec![4, 4, 4], 3);
        assert!(matches!(extract_stack(&v, ViewAxis::Axial, 4, 3), Err(Error::IndexOutOfRange { .. })));
        assert!(extract_stack(&v, ViewAxis::Axial, 0, 2).is_err());
        let img = random(vec![4, 4], 3);
        assert!(extract_stack(&img, ViewAxis::Coronal, 0, 3).is_err());
        assert!(iterate_stacks(&v, 3, &[]).is_err());
    }

    #[test]
    fn stack_counts() {
        let cube = Volume::filled("c", vec![64, 64, 64], 0.0f32).unwrap();
        assert_eq!(iterate_stacks(&cube, 3, &ViewAxis::ALL).unwrap().count(), 192);
        let v = Volume::filled("c", vec![64, 32, 16], 0.0f32).unwrap();
        assert_eq!(iterate_stacks(&v, 3, &ViewAxis::ALL).unwrap().count(), 112);
        let img = Volume::filled("i", vec![32, 48], 0.0f32).unwrap();
        let stacks: Vec<_> = iterate_stacks(&img, 3, ViewAxis::available(2)).unwrap().collect();
        assert_eq!(stacks.len(), 1);
        assert_eq!(stacks[0].plane_shape, [32, 48]);
    }

    #[test]
    fn assembler_round_trip() {
        let v = random(vec![6, 5, 4], 4);
        for axis in ViewAxis::ALL {
            let mut asm = PlaneAssembler::new(v.shape(), axis).unwrap();
            for s in iterate_stacks(&v, 3, &[axis]).unwrap() {
                asm.write(s.index, s.center()).unwrap();
            }
            assert_eq!(asm.finish("r").unwrap().data(), v.data());
        }
        let asm = PlaneAssembler::<f32>::new(v.shape(), ViewAxis::Axial).unwrap();
        assert!(asm.finish("x").is_err());
    }

    #[test]
    fn fuse_basics() {
        let a = Volume::new("a", vec![1, 3], vec![0.0f32, 0.2, 0.9], (0.0, 1.0)).unwrap();
        let b = Volume::new("b", vec![1, 3], vec![0.5f32, 0.2, 0.3], (0.0, 1.0)).unwrap();
        let c = Volume::new("c", vec![1, 3], vec![1.0f32, 0.2, 0.0], (0.0, 1.0)).unwrap();
        // 2D inputs fuse exactly one prediction
        assert!(fuse_predictions(&[a.clone(), b.clone(), c.clone()]).is_err());
        let a3 = Volume::new("a", vec![1, 1, 3], a.data().to_vec(), (0.0, 1.0)).unwrap();
        let b3 = Volume::new("b", vec![1, 1, 3], b.data().to_vec(), (0.0, 1.0)).unwrap();
        let c3 = Volume::new("c", vec![1, 1, 3], c.data().to_vec(), (0.0, 1.0)).unwrap();
        let f = fuse_predictions(&[a3.clone(), b3.clone(), c3.clone()]).unwrap();
        assert_eq!(f.data()[0], 0.5);
        assert_eq!(fuse_predictions(&[a3.clone(), a3.clone(), a3.clone()]).unwrap().data(), a3.data());
        assert!(fuse_predictions(&[a3.clone(), b3]).is_err());
        let bad = Volume::filled("x", vec![1, 3, 1], 0.0f32).unwrap();
        assert!(matches!(fuse_predictions(&[a3.clone(), c3, bad]), Err(Error::ShapeMismatch { .. })));
        assert_eq!(fuse_predictions(&[a.clone()]).unwrap().data(), a.data());
    }
}
