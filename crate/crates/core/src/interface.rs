//! Interface trace vectors and their per-interface layout.

use crate::error::{Result, SchwarzError};

/// One contiguous block of the interface vector, owned by interface `id`
/// (the interface between subdomains `id` and `id + 1` in a chain).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterfaceSlice {
    pub id: usize,
    pub offset: usize,
    pub len: usize,
}

impl InterfaceSlice {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Ordered, disjoint, covering partition of an interface vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceLayout {
    slices: Vec<InterfaceSlice>,
    total: usize,
}

impl InterfaceLayout {
    /// A layout with a single interface of `len` values.
    pub fn single(len: usize) -> Self {
        Self::from_lengths(&[len])
    }

    /// Consecutive slices with the given lengths, ids `0..lengths.len()`.
    pub fn from_lengths(lengths: &[usize]) -> Self {
        let mut offset = 0;
        let slices = lengths
            .iter()
            .enumerate()
            .map(|(id, &len)| {
                let s = InterfaceSlice { id, offset, len };
                offset += len;
                s
            })
            .collect();
        Self {
            slices,
            total: offset,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn num_interfaces(&self) -> usize {
        self.slices.len()
    }

    pub fn slices(&self) -> &[InterfaceSlice] {
        &self.slices
    }

    /// Splits `values` into per-interface slices.
    pub fn split<'a>(&self, values: &'a [f64]) -> Vec<&'a [f64]> {
        self.slices.iter().map(|s| &values[s.range()]).collect()
    }
}

/// The interface unknown `g` iterated by the fixed-point loop.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceState {
    values: Vec<f64>,
    layout: InterfaceLayout,
}

impl InterfaceState {
    pub fn new(values: Vec<f64>, layout: InterfaceLayout) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(SchwarzError::LayoutMismatch {
                expected: layout.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SchwarzError::NonFinite { index });
        }
        Ok(Self { values, layout })
    }

    pub fn zeros(layout: InterfaceLayout) -> Self {
        Self {
            values: vec![0.0; layout.len()],
            layout,
        }
    }

    /// Scalar state on a single one-value interface.
    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(vec![value], InterfaceLayout::single(1))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &InterfaceLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slice(&self, interface: usize) -> &[f64] {
        &self.values[self.layout.slices[interface].range()]
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        self.layout.split(&self.values)
    }

    /// Same layout, new values. Fails on length mismatch or non-finite entries.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.layout.clone())
    }

    pub fn ensure_layout(&self, layout: &InterfaceLayout) -> Result<()> {
        if &self.layout != layout {
            return Err(SchwarzError::LayoutMismatch {
                expected: layout.len(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_covers_vector() {
        let layout = InterfaceLayout::from_lengths(&[3, 0, 2]);
        assert_eq!(layout.len(), 5);
        let covered: usize = layout.slices().iter().map(|s| s.len).sum();
        assert_eq!(covered, layout.len());
        assert_eq!(layout.slices()[2].offset, 3);
    }

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        let layout = InterfaceLayout::single(2);
        assert!(matches!(
            InterfaceState::new(vec![1.0], layout.clone()),
            Err(SchwarzError::LayoutMismatch { .. })
        ));
        assert!(matches!(
            InterfaceState::new(vec![1.0, f64::NAN], layout),
            Err(SchwarzError::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn slices_follow_layout() {
        let layout = InterfaceLayout::from_lengths(&[1, 2]);
        let g = InterfaceState::new(vec![1.0, 2.0, 3.0], layout).unwrap();
        assert_eq!(g.slice(0), &[1.0]);
        assert_eq!(g.slice(1), &[2.0, 3.0]);
    }
}
