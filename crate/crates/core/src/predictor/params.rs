use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const INPUT_SIZE: usize = 3;
pub const OUTPUT_SIZE: usize = 2;

/// Parameter blocks, in storage order.
pub const BLOCK_NAMES: [&str; 5] = ["w_input", "w_hidden", "bias", "w_output", "b_output"];

/// Location of one parameter block inside the flat storage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

/// LSTM parameters, stored as one flat row-major buffer.
///
/// Gate rows are ordered input, forget, candidate, output. The same type
/// carries gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    hidden: usize,
    data: Vec<f64>,
}

/// Disjoint mutable views of every block.
pub struct BlocksMut<'a> {
    pub w_input: &'a mut [f64],
    pub w_hidden: &'a mut [f64],
    pub bias: &'a mut [f64],
    pub w_output: &'a mut [f64],
    pub b_output: &'a mut [f64],
}

impl ModelParams {
    fn shapes(hidden: usize) -> [(usize, usize); 5] {
        [
            (4 * hidden, INPUT_SIZE),
            (4 * hidden, hidden),
            (4 * hidden, 1),
            (OUTPUT_SIZE, hidden),
            (OUTPUT_SIZE, 1),
        ]
    }

    pub fn param_count(hidden: usize) -> usize {
        Self::shapes(hidden).iter().map(|(r, c)| r * c).sum()
    }

    pub fn zeros(hidden: usize) -> Self {
        assert!(hidden >= 1, "hidden size must be at least 1");
        Self {
            hidden,
            data: vec![0.0; Self::param_count(hidden)],
        }
    }

    /// Uniform weights in `[-1/sqrt(H), 1/sqrt(H)]`, zero biases except the
    /// forget gate at +1.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut p = Self::zeros(hidden);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = p.blocks_mut();
        for w in b
            .w_input
            .iter_mut()
            .chain(b.w_hidden.iter_mut())
            .chain(b.w_output.iter_mut())
        {
            *w = rng.gen_range(-bound..=bound);
        }
        b.bias[hidden..2 * hidden].fill(1.0);
        p
    }

    pub(crate) fn from_raw(hidden: usize, data: Vec<f64>) -> Option<Self> {
        (hidden >= 1 && data.len() == Self::param_count(hidden)).then_some(Self { hidden, data })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn layout(&self) -> Vec<BlockLayout> {
        let mut offset = 0;
        Self::shapes(self.hidden)
            .iter()
            .zip(BLOCK_NAMES)
            .map(|(&(rows, cols), name)| {
                let block = BlockLayout {
                    name: name.to_string(),
                    rows,
                    cols,
                    offset,
                };
                offset += rows * cols;
                block
            })
            .collect()
    }

    fn split_points(&self) -> [usize; 4] {
        let h = self.hidden;
        let a = 4 * h * INPUT_SIZE;
        let b = a + 4 * h * h;
        let c = b + 4 * h;
        let d = c + OUTPUT_SIZE * h;
        [a, b, c, d]
    }

    pub fn w_input(&self) -> &[f64] {
        let [a, ..] = self.split_points();
        &self.data[..a]
    }

    pub fn w_hidden(&self) -> &[f64] {
        let [a, b, ..] = self.split_points();
        &self.data[a..b]
    }

    pub fn bias(&self) -> &[f64] {
        let [_, b, c, _] = self.split_points();
        &self.data[b..c]
    }

    pub fn w_output(&self) -> &[f64] {
        let [_, _, c, d] = self.split_points();
        &self.data[c..d]
    }

    pub fn b_output(&self) -> &[f64] {
        let [.., d] = self.split_points();
        &self.data[d..]
    }

    pub fn blocks_mut(&mut self) -> BlocksMut<'_> {
        let [a, b, c, d] = self.split_points();
        let (w_input, rest) = self.data.split_at_mut(a);
        let (w_hidden, rest) = rest.split_at_mut(b - a);
        let (bias, rest) = rest.split_at_mut(c - b);
        let (w_output, b_output) = rest.split_at_mut(d - c);
        BlocksMut {
            w_input,
            w_hidden,
            bias,
            w_output,
            b_output,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &ModelParams) {
        assert_eq!(self.hidden, other.hidden);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
