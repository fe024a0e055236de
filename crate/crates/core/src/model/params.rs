use super::layers::LayerSpec;
use super::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct ParamTensor<T> {
    /// `"<layer index>.<kind>.<tensor>"`, e.g. `"0.conv3x3.weight"`.
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

/// Learnable tensors of a layer stack, in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters<T> {
    tensors: Vec<ParamTensor<T>>,
    /// `layer_start[i]..layer_start[i + 1]` are layer `i`'s tensors.
    layer_start: Vec<usize>,
}

/// Same layout as [`Parameters`], holding loss gradients.
pub type Gradients<T> = Parameters<T>;

impl<T: Real> Parameters<T> {
    pub fn zeros(layers: &[LayerSpec]) -> Self {
        let mut tensors = Vec::new();
        let mut layer_start = vec![0];
        for (i, layer) in layers.iter().enumerate() {
            for (name, shape, _) in layer.param_layout() {
                let n = shape.iter().product();
                tensors.push(ParamTensor {
                    name: format!("{i}.{}.{name}", layer.kind_name()),
                    shape,
                    data: vec![T::zero(); n],
                });
            }
            layer_start.push(tensors.len());
        }
        Self {
            tensors,
            layer_start,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|t| ParamTensor {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    data: vec![T::zero(); t.data.len()],
                })
                .collect(),
            layer_start: self.layer_start.clone(),
        }
    }

    pub fn tensors(&self) -> &[ParamTensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [ParamTensor<T>] {
        &mut self.tensors
    }

    pub fn num_layers(&self) -> usize {
        self.layer_start.len() - 1
    }

    pub fn layer(&self, i: usize) -> &[ParamTensor<T>] {
        &self.tensors[self.layer_start[i]..self.layer_start[i + 1]]
    }

    pub fn layer_mut(&mut self, i: usize) -> &mut [ParamTensor<T>] {
        let (a, b) = (self.layer_start[i], self.layer_start[i + 1]);
        &mut self.tensors[a..b]
    }

    pub(crate) fn layer_slices(&self, i: usize) -> Vec<&[T]> {
        self.layer(i).iter().map(|t| t.data.as_slice()).collect()
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.layer_start == other.layer_start
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.shape == b.shape)
    }

    /// `self += other`, elementwise in declaration order.
    pub fn add_assign(&mut self, other: &Self) {
        debug_assert!(self.same_layout(other));
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for t in &mut self.tensors {
            for x in &mut t.data {
                *x *= factor;
            }
        }
    }

    pub fn cast<U: Real>(&self) -> Parameters<U> {
        Parameters {
            tensors: self
                .tensors
                .iter()
                .map(|t| ParamTensor {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    data: t.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
                })
                .collect(),
            layer_start: self.layer_start.clone(),
        }
    }

    /// Flat view of every scalar, in declaration order.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.tensors.iter().flat_map(|t| t.data.iter())
    }
}
