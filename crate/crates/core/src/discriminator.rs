//! Factor-graph discriminator.
//!
//! Each factor graph of a layer is encoded by three rounds of coefficient-
//! weighted message passing over the layer's shared `h'`, mean-pooled, and
//! classified into one of `N_e` factor indices. Because every factor sees the
//! same node features and encoder weights, only the coefficients (the
//! structure) can tell them apart.

use rand::Rng;

use crate::error::{Error, Result};
use crate::factor_layer::{aggregate, Activation, GraphContext, LayerOutput};
use crate::tensor::{Bound, ParamSet, Tensor, Var};

/// Message-passing rounds of the encoder.
pub const ENCODER_ROUNDS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discriminator {
    pub name: String,
    pub n_factors: usize,
    /// Width `F'` of the layer's transformed features.
    pub dim: usize,
}

impl Discriminator {
    pub fn new(name: impl Into<String>, n_factors: usize, dim: usize) -> Self {
        Discriminator {
            name: name.into(),
            n_factors,
            dim,
        }
    }

    pub fn encoder_weight_name(&self, round: usize) -> String {
        format!("{}.encoder{round}.weight", self.name)
    }

    pub fn classifier_weight_name(&self) -> String {
        format!("{}.classifier.weight", self.name)
    }

    pub fn classifier_bias_name(&self) -> String {
        format!("{}.classifier.bias", self.name)
    }

    /// Glorot-uniform weights, zero classifier bias.
    pub fn init_params<R: Rng + ?Sized>(&self, params: &mut ParamSet, rng: &mut R) -> Result<()> {
        if self.n_factors == 0 || self.dim == 0 {
            return Err(Error::input(format!("degenerate discriminator {self:?}")));
        }
        for r in 0..ENCODER_ROUNDS {
            params.insert(
                self.encoder_weight_name(r),
                Tensor::glorot_uniform(self.dim, self.dim, rng),
            )?;
        }
        params.insert(
            self.classifier_weight_name(),
            Tensor::glorot_uniform(self.dim, self.n_factors, rng),
        )?;
        params.insert(self.classifier_bias_name(), Tensor::zeros(&[1, self.n_factors]))?;
        Ok(())
    }

    /// Node features of one factor graph after the encoder.
    pub fn encode<'t>(
        &self,
        bound: &Bound<'t>,
        coef: Var<'t>,
        h_prime: Var<'t>,
        ctx: &GraphContext,
    ) -> Result<Var<'t>> {
        let mut x = h_prime;
        for r in 0..ENCODER_ROUNDS {
            let w = bound.get(&self.encoder_weight_name(r))?;
            x = aggregate(x.matmul(w)?, coef, ctx, Activation::Relu)?;
        }
        Ok(x)
    }

    /// Probability row over factor indices for one pooled graph vector.
    pub fn classify<'t>(&self, bound: &Bound<'t>, pooled: Var<'t>) -> Result<Var<'t>> {
        pooled
            .matmul(bound.get(&self.classifier_weight_name())?)?
            .add(bound.get(&self.classifier_bias_name())?)?
            .softmax(1)
    }

    /// `[N_e, N_e]` matrix whose row `e` is the prediction for factor graph `e`.
    pub fn factor_probabilities<'t>(
        &self,
        bound: &Bound<'t>,
        layer: &LayerOutput<'t>,
        ctx: &GraphContext,
    ) -> Result<Var<'t>> {
        if layer.factor_coefficients.len() != self.n_factors {
            return Err(Error::shape(format!(
                "discriminator for {} factors given {}",
                self.n_factors,
                layer.factor_coefficients.len()
            )));
        }
        let rows = layer
            .factor_coefficients
            .iter()
            .map(|&coef| {
                let x = self.encode(bound, coef, layer.transformed, ctx)?;
                self.classify(bound, readout(x)?)
            })
            .collect::<Result<Vec<_>>>()?;
        layer.transformed.tape().concat(&rows, 0)
    }
}

/// Mean over nodes, as a `[1, F]` row.
pub fn readout(x: Var<'_>) -> Result<Var<'_>> {
    let shape = x.shape();
    if shape.len() != 2 || shape[0] == 0 {
        return Err(Error::input(format!("readout of node features {shape:?}")));
    }
    x.mean_axis(0)?.reshape(vec![1, shape[1]])
}

/// Mean cross-entropy over every factor graph of every input graph; the
/// class of row `e` in each `[N_e, N_e]` block is `e`.
pub fn discriminator_loss<'t>(per_graph: &[Var<'t>]) -> Result<Var<'t>> {
    let first = per_graph
        .first()
        .ok_or_else(|| Error::input("discriminator loss over zero graphs"))?;
    let n_factors = first.shape()[0];
    let probs = first.tape().concat(per_graph, 0)?;
    let targets: Vec<usize> = (0..per_graph.len()).flat_map(|_| 0..n_factors).collect();
    probs.nll(&targets)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::factor_layer::{disentangle, transform, DisentangleLayer};
    use crate::graph_data::Graph;
    use crate::tensor::gradcheck::check;
    use crate::tensor::{Tape, PROB_CLIP};

    fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn disc_params(seed: u64, n_factors: usize, dim: usize) -> (Discriminator, ParamSet) {
        let d = Discriminator::new("disc", n_factors, dim);
        let mut p = ParamSet::new();
        d.init_params(&mut p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        (d, p)
    }

    #[test]
    fn near_zero_coefficients_silence_the_encoder() {
        let g = Graph::with_adjacency_features(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let ctx = GraphContext::new(&g);
        let (d, p) = disc_params(1, 2, 4);
        let tape = Tape::new();
        let bound = p.bind(&tape);
        let coef = tape.constant(Tensor::filled(&[6, 1], 1e-12));
        let x = d
            .encode(&bound, coef, tape.constant(g.features().clone()), &ctx)
            .unwrap();
        assert_eq!(x.shape(), vec![4, 4]);
        assert!(x.data().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn one_round_matches_aggregate() {
        let g = Graph::with_adjacency_features(2, &[(0, 1)]).unwrap();
        let ctx = GraphContext::new(&g);
        let tape = Tape::new();
        let h = tape.constant(Tensor::from_rows(&[[1.0, 2.0], [3.0, 5.0]]).unwrap());
        let coef = tape.constant(Tensor::from_rows(&[[0.5], [0.25]]).unwrap());
        let w = tape.constant(Tensor::identity(2));
        let round = aggregate(h.matmul(w).unwrap(), coef, &ctx, Activation::Relu).unwrap();
        // node 0 receives 0.5 · h_1, node 1 receives 0.25 · h_0; unit degrees
        assert_eq!(round.data(), vec![1.5, 2.5, 0.25, 0.5]);
    }

    #[test]
    fn readout_examples() {
        let tape = Tape::new();
        let one = tape.constant(Tensor::from_rows(&[[4.0, -1.0]]).unwrap());
        assert_eq!(readout(one).unwrap().data(), vec![4.0, -1.0]);
        let two = tape.constant(Tensor::from_rows(&[[1.0, 3.0], [3.0, 1.0]]).unwrap());
        assert_eq!(readout(two).unwrap().data(), vec![2.0, 2.0]);
        let swapped = tape.constant(Tensor::from_rows(&[[3.0, 1.0], [1.0, 3.0]]).unwrap());
        assert_eq!(readout(swapped).unwrap().data(), vec![2.0, 2.0]);
        assert!(readout(tape.constant(Tensor::zeros(&[0, 2]))).is_err());
    }

    #[test]
    fn classify_zero_weights_is_uniform() {
        let (d, mut p) = disc_params(2, 4, 3);
        *p.get_mut("disc.classifier.weight").unwrap() = Tensor::zeros(&[3, 4]);
        let tape = Tape::new();
        let bound = p.bind(&tape);
        let v = tape.constant(Tensor::from_rows(&[[0.3, -2.0, 5.0]]).unwrap());
        let probs = d.classify(&bound, v).unwrap().data();
        assert!(probs.iter().all(|&q| (q - 0.25).abs() < 1e-15));
    }

    #[test]
    fn classify_matches_affine_softmax_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (d, p) = disc_params(3, 3, 5);
        let v = random(&mut rng, &[1, 5]);
        let tape = Tape::new();
        let bound = p.bind(&tape);
        let probs = d.classify(&bound, tape.constant(v.clone())).unwrap().data();
        let w = p.get("disc.classifier.weight").unwrap();
        let b = p.get("disc.classifier.bias").unwrap();
        let logits: Vec<f64> = (0..3)
            .map(|c| b.at(0, c) + (0..5).map(|k| v.at(0, k) * w.at(k, c)).sum::<f64>())
            .collect();
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        for c in 0..3 {
            assert!((probs[c] - logits[c].exp() / z).abs() < 1e-14);
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_of_uniform_and_perfect_predictions() {
        let tape = Tape::new();
        let uniform = tape.constant(Tensor::filled(&[4, 4], 0.25));
        let l = discriminator_loss(&[uniform, uniform]).unwrap().item();
        assert!((l - 4f64.ln()).abs() < 1e-14);

        let perfect = tape.constant(Tensor::identity(3));
        let l = discriminator_loss(&[perfect]).unwrap().item();
        assert!(l >= 0.0 && l <= -(1.0 - PROB_CLIP).ln() + 1e-15);
    }

    #[test]
    fn loss_matches_per_sample_sum() {
        let rows = [
            [[0.7, 0.3], [0.4, 0.6]],
            [[0.2, 0.8], [0.9, 0.1]],
        ];
        let tape = Tape::new();
        let per_graph: Vec<_> = rows
            .iter()
            .map(|r| tape.constant(Tensor::from_rows(r).unwrap()))
            .collect();
        let l = discriminator_loss(&per_graph).unwrap().item();
        let oracle = -(0.7f64.ln() + 0.6f64.ln() + 0.2f64.ln() + 0.1f64.ln()) / 4.0;
        assert!((l - oracle).abs() < 1e-15);
    }

    #[test]
    fn probabilities_are_permutation_invariant() {
        let g = Graph::with_adjacency_features(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)])
            .unwrap();
        let perm = [3, 0, 4, 1, 2];
        let pg = g.permuted(&perm).unwrap();
        let layer = DisentangleLayer::new("layer0", 3, 5, 4);
        let mut p = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        layer.init_params(&mut p, &mut rng).unwrap();
        let d = Discriminator::new("disc", 3, 4);
        d.init_params(&mut p, &mut rng).unwrap();
        let run = |graph: &Graph| {
            let ctx = GraphContext::new(graph);
            let tape = Tape::new();
            let bound = p.bind(&tape);
            let out = layer
                .forward(&bound, tape.constant(graph.features().clone()), &ctx, Activation::Relu)
                .unwrap();
            d.factor_probabilities(&bound, &out, &ctx).unwrap().data()
        };
        let a = run(&g);
        let b = run(&pg);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-13));
        for row in a.chunks(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_gradients_reach_score_parameters() {
        let g = Graph::with_adjacency_features(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        let ctx = GraphContext::new(&g);
        let (d, p) = disc_params(5, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = g.features().clone();
        let mut live = 0;
        for _ in 0..20 {
            let w = random(&mut rng, &[3, 4]);
            let a = random(&mut rng, &[2, 6]);
            let b = random(&mut rng, &[1, 2]);
            let gc = check(
                &[w, a, b],
                |tape, v| {
                    let bound = p.bind_frozen(tape);
                    let hp = transform(tape.constant(x.clone()), v[0])?;
                    let c = disentangle(hp, &ctx, v[1], v[2])?;
                    let rows = (0..2)
                        .map(|e| {
                            let enc = d.encode(&bound, c.slice(1, e, 1)?, hp, &ctx)?;
                            d.classify(&bound, readout(enc)?)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    discriminator_loss(&[tape.concat(&rows, 0)?])
                },
                1e-5,
            )
            .unwrap();
            let err = gc.relative_error();
            assert!(err < 1e-4, "relative error {err}");
            live += usize::from(gc.analytic[1].iter().any(|&v| v != 0.0));
        }
        // draws where every encoder unit is dead carry no gradient at all
        assert!(live >= 10, "score weights received gradient in {live} of 20 draws");
    }
}
