//! Flat parameter vectors with a named-tensor registry.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::invalid_input;

/// One named tensor inside a flat parameter vector. The ranges
/// `offset..offset + shape.iter().product()` of a registry partition `[0, D)`
/// in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Flat parameter vector plus the registry describing its named tensors.
///
/// Tensor data is stored row-major within each named slice; the named slices
/// are concatenated in registry order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVec {
    pub data: Vec<f64>,
    registry: Vec<TensorInfo>,
}

impl ParamVec {
    /// Wraps flat data with its registry; the registry must exactly
    /// partition `[0, data.len())` in order.
    pub fn new(data: Vec<f64>, registry: Vec<TensorInfo>) -> Result<Self> {
        let mut cursor = 0usize;
        for t in &registry {
            if t.offset != cursor {
                return Err(invalid_input!(
                    "registry gap before tensor '{}': offset {} expected {}",
                    t.name,
                    t.offset,
                    cursor
                ));
            }
            cursor += t.len();
        }
        if cursor != data.len() {
            return Err(invalid_input!(
                "registry covers {cursor} entries but data has {}",
                data.len()
            ));
        }
        Ok(ParamVec { data, registry })
    }

    /// Zero-initialized parameters for a registry.
    pub fn zeros(registry: Vec<TensorInfo>) -> Self {
        let d = registry.iter().map(TensorInfo::len).sum();
        ParamVec { data: alloc::vec![0.0; d], registry }
    }

    /// Total parameter count D.
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn registry(&self) -> &[TensorInfo] {
        &self.registry
    }

    fn info(&self, name: &str) -> Result<&TensorInfo> {
        self.registry
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| invalid_input!("no tensor named '{name}' in registry"))
    }

    /// Borrow of the named tensor's flat row-major data.
    pub fn tensor(&self, name: &str) -> Result<&[f64]> {
        let info = self.info(name)?;
        Ok(&self.data[info.range()])
    }

    /// Mutable borrow of the named tensor's flat row-major data.
    pub fn tensor_mut(&mut self, name: &str) -> Result<&mut [f64]> {
        let range = self.info(name)?.range();
        Ok(&mut self.data[range])
    }

    /// Overwrites the named tensor; `values` must match its length.
    pub fn set_tensor(&mut self, name: &str, values: &[f64]) -> Result<()> {
        let dst = self.tensor_mut(name)?;
        if dst.len() != values.len() {
            return Err(invalid_input!(
                "tensor '{name}' has {} entries, got {}",
                dst.len(),
                values.len()
            ));
        }
        dst.copy_from_slice(values);
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn reg() -> Vec<TensorInfo> {
        vec![
            TensorInfo { name: "U".to_string(), shape: vec![2, 3], offset: 0 },
            TensorInfo { name: "V".to_string(), shape: vec![3], offset: 6 },
        ]
    }

    #[test]
    fn round_trip_named_tensors() {
        let mut p = ParamVec::zeros(reg());
        assert_eq!(p.dim(), 9);
        p.set_tensor("V", &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.tensor("V").unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(&p.data[6..9], &[1.0, 2.0, 3.0]);
        assert!(p.tensor("W").is_err());
        assert!(p.set_tensor("U", &[0.0; 5]).is_err());
    }

    #[test]
    fn registry_must_partition() {
        let bad = vec![TensorInfo { name: "U".to_string(), shape: vec![2], offset: 1 }];
        assert!(ParamVec::new(vec![0.0; 3], bad).is_err());
        let short = reg();
        assert!(ParamVec::new(vec![0.0; 5], short).is_err());
    }
}
