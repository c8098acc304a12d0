use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scalar::Real;

/// Shape coefficients `β`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeParams<T>(Vec<T>);

impl<T: Real> ShapeParams<T> {
    pub fn new(beta: Vec<T>) -> Result<Self> {
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("non-finite shape coefficient"));
        }
        Ok(Self(beta))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![T::zero(); len])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-joint axis-angle rotations `θ` (radians), root joint first.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseParams<T>(Vec<T>);

impl<T: Real> PoseParams<T> {
    pub fn new(theta: Vec<T>) -> Result<Self> {
        if !theta.len().is_multiple_of(3) {
            return Err(Error::param(format!(
                "pose length {} is not a multiple of 3",
                theta.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::param("non-finite pose parameter"));
        }
        Ok(Self(theta))
    }

    pub fn zeros(num_joints: usize) -> Self {
        Self(vec![T::zero(); 3 * num_joints])
    }

    pub fn num_joints(&self) -> usize {
        self.0.len() / 3
    }

    pub fn joint(&self, j: usize) -> Vec3<T> {
        [self.0[3 * j], self.0[3 * j + 1], self.0[3 * j + 2]]
    }

    pub fn set_joint(&mut self, j: usize, axis_angle: Vec3<T>) {
        self.0[3 * j..3 * j + 3].copy_from_slice(&axis_angle);
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

/// A sequence of poses: JSON array of frames, each an array of radians.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseSequence<T> {
    pub frames: Vec<PoseParams<T>>,
}

impl<T: Real> PoseSequence<T> {
    /// Accepts either `[[...], [...]]` or a single bare frame `[...]`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let arr = value
            .as_array()
            .ok_or_else(|| Error::Format("pose file must be a JSON array".into()))?;
        let frames_raw: Vec<&serde_json::Value> = if arr.iter().all(|v| v.is_number()) {
            vec![&value]
        } else {
            arr.iter().collect()
        };
        let mut frames = Vec::with_capacity(frames_raw.len());
        for (i, frame) in frames_raw.into_iter().enumerate() {
            let nums = frame
                .as_array()
                .ok_or_else(|| Error::Format(format!("frame {i} is not an array")))?;
            let theta = nums
                .iter()
                .map(|x| {
                    x.as_f64()
                        .map(T::lit)
                        .ok_or_else(|| Error::Format(format!("frame {i} has a non-numeric entry")))
                })
                .collect::<Result<Vec<T>>>()?;
            frames.push(PoseParams::new(theta)?);
        }
        Ok(Self { frames })
    }

    pub fn to_json_string(&self) -> String {
        let frames: Vec<Vec<f64>> = self
            .frames
            .iter()
            .map(|f| f.as_slice().iter().map(|x| x.to_f64_lossy()).collect())
            .collect();
        serde_json::to_string(&frames).expect("pose frames serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}
