use nalgebra::Vector2;

use crate::belief::ClassId;
use crate::error::{Error, Result};

/// A detected landmark: relative position measurement plus its appearance
/// class.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationElement {
    pub z: Vector2<f64>,
    pub class: ClassId,
}

/// Observation array of length `|L_t|`: the `n_z` real elements first, the
/// remaining slots implicitly out of range.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationArray {
    real: Vec<ObservationElement>,
    len: usize,
}

impl ObservationArray {
    pub fn new(real: Vec<ObservationElement>, len: usize) -> Result<Self> {
        if real.len() > len {
            return Err(Error::InvalidConfig(format!(
                "{} real observations exceed array length {len}",
                real.len()
            )));
        }
        Ok(ObservationArray { real, len })
    }

    /// Array with no detections.
    pub fn empty(len: usize) -> Self {
        ObservationArray { real: Vec::new(), len }
    }

    pub fn n_z(&self) -> usize {
        self.real.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn real(&self) -> &[ObservationElement] {
        &self.real
    }

    /// Element at `index`; `None` stands for an out-of-range element.
    pub fn element(&self, index: usize) -> Option<&ObservationElement> {
        self.real.get(index)
    }
}
