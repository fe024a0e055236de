use super::network::ModelSpec;
use super::params::Parameters;
use super::real::Real;
use crate::rng::SeededStream;

/// He-normal weights (`std = sqrt(2 / fan_in)`) and zero biases.
///
/// Normals come from one [`SeededStream`] in declaration order, two per
/// Box–Muller draw, so a seed fixes every weight bit-exactly.
pub fn init_weights<T: Real>(spec: &ModelSpec, seed: u64) -> Parameters<T> {
    let mut params = Parameters::zeros(spec.layers());
    let mut normals = NormalSource::new(seed);
    let mut t = 0;
    for layer in spec.layers() {
        for (_, _, fan_in) in layer.param_layout() {
            if fan_in > 0 {
                let std = (2.0 / fan_in as f64).sqrt();
                for w in &mut params.tensors_mut()[t].data {
                    *w = T::from_f64(std * normals.next());
                }
            }
            t += 1;
        }
    }
    params
}

struct NormalSource {
    stream: SeededStream,
    spare: Option<f64>,
}

impl NormalSource {
    fn new(seed: u64) -> Self {
        Self {
            stream: SeededStream::new(seed),
            spare: None,
        }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.stream.standard_normal_pair();
        self.spare = Some(b);
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::layers::{LayerSpec, Shape3};
    use crate::model::network::{build_model, LayerStack, ModelName};

    #[test]
    fn same_seed_same_parameters() {
        let spec = build_model("mini_vgg").unwrap();
        let a: Parameters<f32> = init_weights(&spec, 3);
        let b: Parameters<f32> = init_weights(&spec, 3);
        let c: Parameters<f32> = init_weights(&spec, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn biases_are_zero() {
        for name in ModelName::ALL {
            let spec = build_model(name.as_str()).unwrap();
            let p: Parameters<f64> = init_weights(&spec, 1);
            for t in p.tensors().iter().filter(|t| t.name.ends_with("bias")) {
                assert!(t.data.iter().all(|&v| v == 0.0), "{}", t.name);
            }
        }
    }

    #[test]
    fn dense_fan_in_100_std() {
        let stack = LayerStack::new(
            Shape3::new(100, 1, 1),
            vec![LayerSpec::Dense { in_features: 100, out_features: 10_000 }],
        )
        .unwrap();
        let spec = ModelSpec::new(ModelName::LinearBaseline, stack, 10_000).unwrap();
        let p: Parameters<f64> = init_weights(&spec, 2024);
        let w = &p.tensors()[0].data;
        assert_eq!(w.len(), 1_000_000);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64;
        let want = 0.02f64.sqrt();
        assert!((var.sqrt() - want).abs() / want < 0.01, "std {}", var.sqrt());
    }
}
