/// Read-only view of one named parameter tensor.
#[derive(Debug)]
pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

/// A model whose parameters can be enumerated as flat tensors in a fixed order.
pub trait Parameters {
    fn tensors(&self) -> Vec<TensorRef<'_>>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }
}

/// Dense gradients aligned with [`Parameters::tensors`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn zeros_like<P: Parameters + ?Sized>(params: &P) -> Self {
        Gradients(params.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect())
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().flatten().all(|g| g.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Parameters live in memory as f64 but are kept exactly representable in f32,
/// the checkpoint storage type.
pub fn round_to_storage(values: &mut [f64]) {
    for v in values {
        *v = f64::from(*v as f32);
    }
}
