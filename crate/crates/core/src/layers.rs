//! Embedding tables, GRU cells and stacks, and the MLP classifier head.
//!
//! Layers only hold [`ParamId`]s; the values live in a [`ParamStore`] owned by
//! the model, and every forward call records onto a caller-supplied [`Tape`].

use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::error::{dim_err, Result};
use crate::real::Real;
use crate::tape::{softmax, Tape, Var};
use crate::tensor::{ParamId, ParamStore, Tensor};

/// Weight initialization range; biases always start at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Init {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Init {
    fn default() -> Self {
        Init { lo: -0.1, hi: 0.1 }
    }
}

impl Init {
    pub fn symmetric(scale: f64) -> Self {
        Init { lo: -scale, hi: scale }
    }
}

/// I.i.d. samples from the closed interval `[lo, hi]`.
///
/// # Panics
/// If `lo > hi`.
pub fn init_uniform<T: Real, R: Rng + ?Sized>(shape: &[usize], lo: f64, hi: f64, rng: &mut R) -> Tensor<T> {
    let dist = Uniform::new_inclusive(lo, hi);
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::of(dist.sample(rng))).collect();
    Tensor::new(shape.to_vec(), data).expect("length matches shape")
}

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    pub num_symbols: usize,
    pub dim: usize,
    pub weights: ParamId,
}

impl EmbeddingTable {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        num_symbols: usize,
        dim: usize,
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        let weights = store.add(name, init_uniform(&[num_symbols, dim], init.lo, init.hi, rng))?;
        Ok(EmbeddingTable { num_symbols, dim, weights })
    }

    pub fn lookup<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, index: usize) -> Result<Var> {
        let w = tape.param(store, self.weights);
        tape.row(w, index)
    }
}

/// Gated recurrent unit.
///
/// ```text
/// z  = σ(Wz x + Uz h + bz)
/// r  = σ(Wr x + Ur h + br)
/// h~ = tanh(Wh x + Uh (r ⊙ h) + bh)
/// h' = (1 - z) ⊙ h + z ⊙ h~
/// ```
///
/// The update gate weights the candidate state, so `z = 0` copies `h`.
#[derive(Clone, Debug)]
pub struct GruCell {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub wz: ParamId,
    pub uz: ParamId,
    pub bz: ParamId,
    pub wr: ParamId,
    pub ur: ParamId,
    pub br: ParamId,
    pub wh: ParamId,
    pub uh: ParamId,
    pub bh: ParamId,
}

impl GruCell {
    /// Registers `{prefix}.Wz`, `{prefix}.Uz`, `{prefix}.bz`, ... in `store`.
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        let mut w = |store: &mut ParamStore<T>, name: &str, rows, cols| {
            store.add(format!("{prefix}.{name}"), init_uniform(&[rows, cols], init.lo, init.hi, rng))
        };
        let wz = w(store, "Wz", hidden_dim, input_dim)?;
        let uz = w(store, "Uz", hidden_dim, hidden_dim)?;
        let wr = w(store, "Wr", hidden_dim, input_dim)?;
        let ur = w(store, "Ur", hidden_dim, hidden_dim)?;
        let wh = w(store, "Wh", hidden_dim, input_dim)?;
        let uh = w(store, "Uh", hidden_dim, hidden_dim)?;
        let bz = store.add(format!("{prefix}.bz"), Tensor::zeros(&[hidden_dim]))?;
        let br = store.add(format!("{prefix}.br"), Tensor::zeros(&[hidden_dim]))?;
        let bh = store.add(format!("{prefix}.bh"), Tensor::zeros(&[hidden_dim]))?;
        Ok(GruCell { input_dim, hidden_dim, wz, uz, bz, wr, ur, br, wh, uh, bh })
    }

    pub fn step<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, h_prev: Var, x: Var) -> Result<Var> {
        if tape.value(x).shape() != [self.input_dim] {
            return dim_err(format!("gru input {:?}, cell expects [{}]", tape.value(x).shape(), self.input_dim));
        }
        if tape.value(h_prev).shape() != [self.hidden_dim] {
            return dim_err(format!("gru state {:?}, cell expects [{}]", tape.value(h_prev).shape(), self.hidden_dim));
        }
        let gate = |tape: &mut Tape<T>, w: ParamId, u: ParamId, b: ParamId, h: Var| -> Result<Var> {
            let (w, u, b) = (tape.param(store, w), tape.param(store, u), tape.param(store, b));
            let wx = tape.matvec(w, x)?;
            let uh = tape.matvec(u, h)?;
            let s = tape.add(wx, uh)?;
            tape.add(s, b)
        };
        let z_pre = gate(tape, self.wz, self.uz, self.bz, h_prev)?;
        let z = tape.sigmoid(z_pre);
        let r_pre = gate(tape, self.wr, self.ur, self.br, h_prev)?;
        let r = tape.sigmoid(r_pre);
        let rh = tape.mul(r, h_prev)?;
        let c_pre = gate(tape, self.wh, self.uh, self.bh, rh)?;
        let cand = tape.tanh(c_pre);
        let keep = tape.one_minus(z);
        let old = tape.mul(keep, h_prev)?;
        let new = tape.mul(z, cand)?;
        tape.add(old, new)
    }
}

/// Stacked GRU layers; layer `l` reads layer `l - 1`'s new state.
#[derive(Clone, Debug)]
pub struct GruStack {
    pub layers: Vec<GruCell>,
}

impl GruStack {
    /// Registers layers as `{prefix}.layer0`, `{prefix}.layer1`, ...
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        hidden: &[usize],
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(hidden.len());
        let mut in_dim = input_dim;
        for (l, &h) in hidden.iter().enumerate() {
            layers.push(GruCell::new(store, &format!("{prefix}.layer{l}"), in_dim, h, init, rng)?);
            in_dim = h;
        }
        Ok(GruStack { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |c| c.input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |c| c.hidden_dim)
    }

    pub fn zero_states<T: Real>(&self, tape: &mut Tape<T>) -> Vec<Var> {
        self.layers.iter().map(|c| tape.constant(Tensor::zeros(&[c.hidden_dim]))).collect()
    }

    /// One time step through every layer. The last returned state is the
    /// stack output.
    pub fn step<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, states: &[Var], x: Var) -> Result<Vec<Var>> {
        if states.len() != self.layers.len() {
            return dim_err(format!("{} states for a {}-layer stack", states.len(), self.layers.len()));
        }
        let mut input = x;
        let mut out = Vec::with_capacity(states.len());
        for (cell, &h) in self.layers.iter().zip(states) {
            input = cell.step(tape, store, h, input)?;
            out.push(input);
        }
        Ok(out)
    }

    /// Runs over `inputs` from `init` states and returns the final states.
    pub fn run<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, init: Vec<Var>, inputs: &[Var]) -> Result<Vec<Var>> {
        inputs.iter().try_fold(init, |states, &x| self.step(tape, store, &states, x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

/// `act(W x + b)`.
#[derive(Clone, Debug)]
pub struct Affine {
    pub input_dim: usize,
    pub output_dim: usize,
    pub w: ParamId,
    pub b: ParamId,
}

impl Affine {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        output_dim: usize,
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        let w = store.add(format!("{prefix}.W"), init_uniform(&[output_dim, input_dim], init.lo, init.hi, rng))?;
        let b = store.add(format!("{prefix}.b"), Tensor::zeros(&[output_dim]))?;
        Ok(Affine { input_dim, output_dim, w, b })
    }

    pub fn forward<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: Var, act: Activation) -> Result<Var> {
        let (w, b) = (tape.param(store, self.w), tape.param(store, self.b));
        let wx = tape.matvec(w, x)?;
        let y = tape.add(wx, b)?;
        Ok(match act {
            Activation::Identity => y,
            Activation::Relu => tape.relu(y),
            Activation::Tanh => tape.tanh(y),
        })
    }
}

/// Three affine layers: ReLU, ReLU, then softmax over classes.
#[derive(Clone, Debug)]
pub struct MlpClassifier {
    pub layers: [Affine; 3],
}

impl MlpClassifier {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        num_classes: usize,
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(MlpClassifier {
            layers: [
                Affine::new(store, &format!("{prefix}.l0"), input_dim, hidden, init, rng)?,
                Affine::new(store, &format!("{prefix}.l1"), hidden, hidden, init, rng)?,
                Affine::new(store, &format!("{prefix}.l2"), hidden, num_classes, init, rng)?,
            ],
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers[2].output_dim
    }

    /// Pre-softmax scores; feed to [`Tape::softmax_nll`] for training.
    pub fn logits<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, rep: Var) -> Result<Var> {
        if tape.value(rep).shape() != [self.input_dim()] {
            return dim_err(format!("mlp input {:?}, expects [{}]", tape.value(rep).shape(), self.input_dim()));
        }
        let h = self.layers[0].forward(tape, store, rep, Activation::Relu)?;
        let h = self.layers[1].forward(tape, store, h, Activation::Relu)?;
        self.layers[2].forward(tape, store, h, Activation::Identity)
    }

    /// Class distribution for `rep`.
    pub fn forward<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, rep: Var) -> Result<Vec<T>> {
        let logits = self.logits(tape, store, rep)?;
        Ok(softmax(tape.value(logits).data()))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Real>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn zero_all(store: &mut ParamStore<f64>) {
        store.iter_mut().for_each(|p| p.value.fill(0.0));
    }

    #[test]
    fn uniform_range_and_determinism() {
        let a: Tensor<f64> = init_uniform(&[50, 40], -0.1, 0.1, &mut rng(3));
        let b: Tensor<f64> = init_uniform(&[50, 40], -0.1, 0.1, &mut rng(3));
        assert!(a.data().iter().all(|v| (-0.1..=0.1).contains(v)));
        assert_eq!(a, b);
        let f: Tensor<f32> = init_uniform(&[1000], -0.1, 0.1, &mut rng(4));
        assert!(f.data().iter().all(|&v| (-0.1f32..=0.1f32).contains(&v)));
    }

    #[test]
    fn uniform_mean_near_zero() {
        let t: Tensor<f64> = init_uniform(&[1_000_000], -0.1, 0.1, &mut rng(11));
        let mean = t.data().iter().sum::<f64>() / t.len() as f64;
        // stddev of the mean is 0.1/sqrt(3)/1000 ≈ 5.8e-5
        assert!(mean.abs() < 0.001, "{mean}");
    }

    #[test]
    fn zero_gru_is_fixed_at_zero() {
        let mut store = ParamStore::new();
        let cell = GruCell::new(&mut store, "g", 3, 4, Init::default(), &mut rng(0)).unwrap();
        zero_all(&mut store);
        let mut tape = Tape::<f64>::new();
        let h = tape.constant(Tensor::zeros(&[4]));
        let x = tape.constant(Tensor::vector(vec![1.0, -2.0, 0.5]));
        let out = cell.step(&mut tape, &store, h, x).unwrap();
        assert_eq!(tape.value(out).data(), &[0.0; 4]);
    }

    #[test]
    fn gru_closed_form_scalar() {
        // z saturates to 1 via a large bias; h~ = tanh(Wh x) with Wh x = 1
        let mut store = ParamStore::new();
        let cell = GruCell::new(&mut store, "g", 1, 1, Init::default(), &mut rng(0)).unwrap();
        zero_all(&mut store);
        store.get_mut(cell.bz).value.data_mut()[0] = 800.0;
        store.get_mut(cell.wh).value.data_mut()[0] = 1.0;
        let mut tape = Tape::<f64>::new();
        let h = tape.constant(Tensor::vector(vec![0.3]));
        let x = tape.constant(Tensor::vector(vec![1.0]));
        let out = cell.step(&mut tape, &store, h, x).unwrap();
        let got = tape.value(out).data()[0];
        assert!((got - 1f64.tanh()).abs() < 1e-15, "{got}");
        assert!((got - 0.7616).abs() < 1e-4);
    }

    #[test]
    fn gru_fixed_point() {
        // Uh = 0, Wh = 0, bh = atanh(h) makes h~ == h_prev for any z
        let mut store = ParamStore::new();
        let cell = GruCell::new(&mut store, "g", 2, 2, Init::symmetric(0.5), &mut rng(1)).unwrap();
        let h_prev: [f64; 2] = [0.25, -0.4];
        store.get_mut(cell.uh).value.fill(0.0);
        store.get_mut(cell.wh).value.fill(0.0);
        store.get_mut(cell.bh).value.data_mut().copy_from_slice(&[h_prev[0].atanh(), h_prev[1].atanh()]);
        let mut tape = Tape::<f64>::new();
        let h = tape.constant(Tensor::vector(h_prev.to_vec()));
        let x = tape.constant(Tensor::vector(vec![0.9, -0.3]));
        let out = cell.step(&mut tape, &store, h, x).unwrap();
        for (a, b) in tape.value(out).data().iter().zip(h_prev) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn gru_dimension_errors() {
        let mut store = ParamStore::new();
        let cell = GruCell::new(&mut store, "g", 3, 4, Init::default(), &mut rng(0)).unwrap();
        let mut tape = Tape::<f64>::new();
        let h = tape.constant(Tensor::zeros(&[4]));
        let x = tape.constant(Tensor::zeros(&[2]));
        assert!(cell.step(&mut tape, &store, h, x).is_err());
        let h = tape.constant(Tensor::zeros(&[3]));
        let x = tape.constant(Tensor::zeros(&[3]));
        assert!(cell.step(&mut tape, &store, h, x).is_err());
    }

    #[test]
    fn one_layer_stack_is_a_cell() {
        let mut s1 = ParamStore::new();
        let stack = GruStack::new(&mut s1, "s", 3, &[5], Init::symmetric(0.5), &mut rng(7)).unwrap();
        let mut s2 = ParamStore::new();
        let cell = GruCell::new(&mut s2, "s.layer0", 3, 5, Init::symmetric(0.5), &mut rng(7)).unwrap();
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::vector(vec![0.1, 0.2, -0.3]));
        let z = stack.zero_states(&mut tape);
        let a = stack.step(&mut tape, &s1, &z, x).unwrap();
        let b = cell.step(&mut tape, &s2, z[0], x).unwrap();
        assert_eq!(tape.value(a[0]), tape.value(b));
        assert!(stack.step(&mut tape, &s1, &[], x).is_err());
    }

    #[test]
    fn zero_stack_stays_zero() {
        let mut store = ParamStore::new();
        let stack = GruStack::new(&mut store, "s", 2, &[3, 4], Init::default(), &mut rng(2)).unwrap();
        zero_all(&mut store);
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::vector(vec![5.0, -5.0]));
        let z = stack.zero_states(&mut tape);
        let out = stack.step(&mut tape, &store, &z, x).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|&v| tape.value(v).data().iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn mlp_zero_is_uniform() {
        let mut store = ParamStore::new();
        let mlp = MlpClassifier::new(&mut store, "mlp", 6, 128, 42, Init::default(), &mut rng(0)).unwrap();
        zero_all(&mut store);
        let mut tape = Tape::<f64>::new();
        let rep = tape.constant(Tensor::vector(vec![1.0; 6]));
        let p = mlp.forward(&mut tape, &store, rep).unwrap();
        assert_eq!(p.len(), 42);
        assert!(p.iter().all(|&v| (v - 1.0 / 42.0).abs() < 1e-15));
        let bad = tape.constant(Tensor::zeros(&[5]));
        assert!(mlp.forward(&mut tape, &store, bad).is_err());
    }

    #[test]
    fn mlp_distribution_normalized() {
        let mut store = ParamStore::new();
        let mlp = MlpClassifier::new(&mut store, "mlp", 4, 16, 7, Init::symmetric(1.0), &mut rng(5)).unwrap();
        let mut tape = Tape::<f64>::new();
        let rep = tape.constant(Tensor::vector(vec![0.3, -2.0, 1.5, 0.0]));
        let p = mlp.forward(&mut tape, &store, rep).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn argmax_ties_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0f64; 4]), 0);
    }
}
