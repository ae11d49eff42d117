//! Named parameter tensors with flat scalar indexing.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectorParams {
    names: Vec<&'static str>,
    values: Vec<DMatrix<f64>>,
}

impl SelectorParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &'static str, value: DMatrix<f64>) -> Self {
        assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.values.push(value);
        self
    }

    pub fn get(&self, name: &str) -> &DMatrix<f64> {
        let i = self.position(name);
        &self.values[i]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut DMatrix<f64> {
        let i = self.position(name);
        &mut self.values[i]
    }

    fn position(&self, name: &str) -> usize {
        self.names.iter().position(|&n| n == name).unwrap_or_else(|| panic!("no parameter named {name}"))
    }

    pub fn names(&self) -> &[&'static str] {
        &self.names
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &DMatrix<f64>)> {
        self.names.iter().copied().zip(self.values.iter())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut DMatrix<f64>> {
        self.values.iter_mut()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            names: self.names.clone(),
            values: self.values.iter().map(|v| DMatrix::zeros(v.nrows(), v.ncols())).collect(),
        }
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tensor name and (row, col) of flat index `idx` (column-major per tensor).
    pub fn locate(&self, mut idx: usize) -> (&'static str, usize, usize) {
        for (name, v) in self.iter() {
            if idx < v.len() {
                return (name, idx % v.nrows(), idx / v.nrows());
            }
            idx -= v.len();
        }
        panic!("parameter index out of range");
    }

    pub fn scalar(&self, idx: usize) -> f64 {
        let (name, r, c) = self.locate(idx);
        self.get(name)[(r, c)]
    }

    pub fn set_scalar(&mut self, idx: usize, v: f64) {
        let (name, r, c) = self.locate(idx);
        self.get_mut(name)[(r, c)] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn add_scaled(&mut self, alpha: f64, other: &Self) {
        assert_eq!(self.names, other.names);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b * alpha;
        }
    }

    pub(crate) fn zip_values_mut<'a>(
        &'a mut self,
        other: &'a Self,
    ) -> impl Iterator<Item = (&'a mut DMatrix<f64>, &'a DMatrix<f64>)> {
        assert_eq!(self.names, other.names);
        self.values.iter_mut().zip(other.values.iter())
    }
}
