//! Scalar grids and label maps.
//!
//! Grids are row-major. Voxel `i` along an axis covers the continuous interval
//! `[i, i + 1)`, so its center sits at `i + 0.5`. Region geometry (spheres,
//! polygons) is expressed in these continuous voxel units.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Validates a 2D or 3D shape with positive extents.
pub fn check_shape(shape: &[usize]) -> Result<()> {
    if !(2..=3).contains(&shape.len()) {
        return Err(Error::InvalidVolume(format!(
            "expected 2 or 3 axes, got {}",
            shape.len()
        )));
    }
    if shape.iter().any(|&n| n == 0) {
        return Err(Error::InvalidVolume(format!("zero-sized axis in {shape:?}")));
    }
    Ok(())
}

/// Number of voxels of a shape.
pub fn voxel_count(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Shape padded to three axes with leading singleton axes.
///
/// A 2D image `(H, W)` becomes `(1, H, W)`; this lets the kernels treat both
/// dimensionalities with the same index arithmetic.
pub fn pad3(shape: &[usize]) -> [usize; 3] {
    match *shape {
        [h, w] => [1, h, w],
        [d, h, w] => [d, h, w],
        _ => panic!("pad3 on {}-axis shape", shape.len()),
    }
}

/// Offset of the first real axis inside the padded 3-axis layout.
pub fn axis_offset(ndim: usize) -> usize {
    3 - ndim
}

/// D-dimensional scalar grid with an intensity range and an opaque id.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    shape: Vec<usize>,
    data: Vec<T>,
    intensity_range: (T, T),
    id: String,
}

impl<T: Scalar> Volume<T> {
    pub fn new(
        id: impl Into<String>,
        shape: Vec<usize>,
        data: Vec<T>,
        intensity_range: (T, T),
    ) -> Result<Self> {
        check_shape(&shape)?;
        if data.len() != voxel_count(&shape) {
            return Err(Error::InvalidVolume(format!(
                "data length {} does not match shape {:?}",
                data.len(),
                shape
            )));
        }
        let (lo, hi) = intensity_range;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidVolume(format!(
                "bad intensity range ({:?}, {:?})",
                lo, hi
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVolume(format!("non-finite value at offset {pos}")));
        }
        Ok(Self {
            shape,
            data,
            intensity_range,
            id: id.into(),
        })
    }

    /// Builds a volume whose intensity range is the data's min and max.
    pub fn from_data(id: impl Into<String>, shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let (lo, hi) = min_max(&data).unwrap_or((T::zero(), T::zero()));
        Self::new(id, shape, data, (lo, hi))
    }

    pub fn filled(id: impl Into<String>, shape: Vec<usize>, value: T) -> Result<Self> {
        check_shape(&shape)?;
        let n = voxel_count(&shape);
        Self::new(id, shape, vec![value; n], (value, value))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn intensity_range(&self) -> (T, T) {
        self.intensity_range
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Same shape, id and intensity range; new payload.
    pub fn with_data(&self, data: Vec<T>) -> Result<Self> {
        Self::new(self.id.clone(), self.shape.clone(), data, self.intensity_range)
    }

    /// Row-major offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, index: &[usize]) -> T {
        self.data[self.offset(index)]
    }

    pub fn dims3(&self) -> [usize; 3] {
        pad3(&self.shape)
    }
}

pub(crate) fn min_max<T: Scalar>(data: &[T]) -> Option<(T, T)> {
    let mut it = data.iter().copied();
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
}

/// Maps intensities to `[0, 1]` using the volume's recorded range.
///
/// Values outside the range are clipped. The result carries the range `(0, 1)`.
pub fn normalize<T: Scalar>(volume: &Volume<T>) -> Result<Volume<T>> {
    let (lo, hi) = volume.intensity_range();
    if lo == hi {
        return Err(Error::DegenerateRange(lo.wide()));
    }
    let span = hi - lo;
    let data = volume
        .data()
        .iter()
        .map(|&x| ((x - lo) / span).max(T::zero()).min(T::one()))
        .collect();
    Volume::new(volume.id(), volume.shape().to_vec(), data, (T::zero(), T::one()))
}

/// Per-voxel label map with values in `[0, 1]`; zero outside every anomaly.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyMask<T> {
    shape: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> AnomalyMask<T> {
    pub fn new(shape: Vec<usize>, values: Vec<T>) -> Result<Self> {
        check_shape(&shape)?;
        if values.len() != voxel_count(&shape) {
            return Err(Error::InvalidVolume(format!(
                "mask length {} does not match shape {:?}",
                values.len(),
                shape
            )));
        }
        if let Some(v) = values
            .iter()
            .find(|v| !(v.is_finite() && **v >= T::zero() && **v <= T::one()))
        {
            return Err(Error::InvalidVolume(format!("mask value {v:?} outside [0, 1]")));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            values: vec![T::zero(); voxel_count(shape)],
        })
    }

    /// Binary mask from a boolean support.
    pub fn from_support(shape: &[usize], support: &[bool]) -> Result<Self> {
        Self::new(
            shape.to_vec(),
            support
                .iter()
                .map(|&b| if b { T::one() } else { T::zero() })
                .collect(),
        )
    }

    pub(crate) fn from_raw(shape: Vec<usize>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), voxel_count(&shape));
        Self { shape, values }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn is_in_support(&self, offset: usize) -> bool {
        self.values[offset] > T::zero()
    }

    pub fn support_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > T::zero()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.support_count() == 0
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == T::zero() || v == T::one())
    }

    /// Voxelwise maximum of two masks (set union for binary masks).
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                actual: other.shape.clone(),
            });
        }
        Ok(Self::from_raw(
            self.shape.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        ))
    }

    /// `level` on the support, zero elsewhere.
    pub fn with_level(&self, level: T) -> Result<Self> {
        if !(level >= T::zero() && level <= T::one()) {
            return Err(Error::InvalidParameter(format!("mask level {level:?} outside [0, 1]")));
        }
        Ok(Self::from_raw(
            self.shape.clone(),
            self.values
                .iter()
                .map(|&v| if v > T::zero() { level } else { T::zero() })
                .collect(),
        ))
    }

    /// Copy of this mask as a volume (for serialization and scoring).
    pub fn to_volume(&self, id: impl Into<String>) -> Volume<T> {
        Volume::new(id, self.shape.clone(), self.values.clone(), (T::zero(), T::one()))
            .expect("mask values are finite and within [0, 1]")
    }

    pub fn from_volume(volume: &Volume<T>) -> Result<Self> {
        Self::new(volume.shape().to_vec(), volume.data().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vol(data: Vec<f64>, range: (f64, f64)) -> Volume<f64> {
        let n = data.len();
        Volume::new("v", vec![1, n], data, range).unwrap()
    }

    #[test]
    fn normalize_linear_map() {
        let v = normalize(&vol(vec![1.0, 0.0, 2.0], (0.0, 2.0))).unwrap();
        assert_eq!(v.data(), &[0.5, 0.0, 1.0]);
        assert_eq!(v.intensity_range(), (0.0, 1.0));
    }

    #[test]
    fn normalize_identity_on_unit_range() {
        let data = vec![0.0, 0.25, 0.7, 1.0];
        let v = normalize(&vol(data.clone(), (0.0, 1.0))).unwrap();
        assert_eq!(v.data(), data.as_slice());
    }

    #[test]
    fn normalize_clips() {
        let v = normalize(&vol(vec![3.0, -1.0], (0.0, 2.0))).unwrap();
        assert_eq!(v.data(), &[1.0, 0.0]);
    }

    #[test]
    fn normalize_degenerate_range() {
        let err = normalize(&vol(vec![1.0, 1.0], (1.0, 1.0))).unwrap_err();
        assert!(matches!(err, Error::DegenerateRange(_)));
    }

    #[test]
    fn normalize_idempotent() {
        let v = vol(vec![-3.0, 0.1, 4.5, 2.0, 7.0], (-1.0, 5.0));
        let once = normalize(&v).unwrap();
        let twice = normalize(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn volume_validation() {
        assert!(Volume::<f32>::new("x", vec![2, 2], vec![0.0; 3], (0.0, 1.0)).is_err());
        assert!(Volume::<f32>::new("x", vec![4], vec![0.0; 4], (0.0, 1.0)).is_err());
        assert!(Volume::<f32>::new("x", vec![2, 0], vec![], (0.0, 1.0)).is_err());
        assert!(Volume::<f32>::new("x", vec![1, 2], vec![0.0, f32::NAN], (0.0, 1.0)).is_err());
        assert!(Volume::<f32>::new("x", vec![1, 2], vec![0.0, 1.0], (2.0, 1.0)).is_err());
    }

    #[test]
    fn offsets_are_row_major() {
        let v = Volume::<f32>::filled("x", vec![2, 3, 4], 0.0).unwrap();
        assert_eq!(v.offset(&[0, 0, 1]), 1);
        assert_eq!(v.offset(&[0, 1, 0]), 4);
        assert_eq!(v.offset(&[1, 0, 0]), 12);
        assert_eq!(v.dims3(), [2, 3, 4]);
        assert_eq!(pad3(&[5, 6]), [1, 5, 6]);
    }

    #[test]
    fn mask_rejects_out_of_range() {
        assert!(AnomalyMask::<f32>::new(vec![1, 2], vec![0.0, 1.5]).is_err());
        let m = AnomalyMask::<f32>::new(vec![1, 3], vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(m.support_count(), 2);
        let lvl = m.with_level(0.3).unwrap();
        assert_eq!(lvl.values(), &[0.0, 0.3, 0.3]);
    }
}
