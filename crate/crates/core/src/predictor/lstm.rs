use super::params::{ModelParams, INPUT_SIZE, OUTPUT_SIZE};
use crate::error::{Error, Result};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() / 4 * 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One LSTM cell update.
///
/// `gates` receives the post-activation values `[i, f, g, o]` (4H).
pub(crate) fn cell_forward(
    p: &ModelParams,
    x: &[f64; INPUT_SIZE],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    c: &mut [f64],
    h: &mut [f64],
) {
    let hs = p.hidden();
    let w_in = p.w_input();
    let w_h = p.w_hidden();
    let bias = p.bias();
    for r in 0..4 * hs {
        let wi = &w_in[r * INPUT_SIZE..(r + 1) * INPUT_SIZE];
        let pre = bias[r]
            + wi[0] * x[0]
            + wi[1] * x[1]
            + wi[2] * x[2]
            + dot(&w_h[r * hs..(r + 1) * hs], h_prev);
        gates[r] = if (2 * hs..3 * hs).contains(&r) {
            pre.tanh()
        } else {
            sigmoid(pre)
        };
    }
    for k in 0..hs {
        let (i, f, g, o) = (gates[k], gates[hs + k], gates[2 * hs + k], gates[3 * hs + k]);
        c[k] = f * c_prev[k] + i * g;
        h[k] = o * c[k].tanh();
    }
}

pub(crate) fn readout(p: &ModelParams, h: &[f64]) -> [f64; OUTPUT_SIZE] {
    let hs = p.hidden();
    let w = p.w_output();
    let b = p.b_output();
    [
        b[0] + dot(&w[..hs], h),
        b[1] + dot(&w[hs..2 * hs], h),
    ]
}

/// Per-step loss weights on the normalized height and time-remaining outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w_y: f64,
    pub w_t: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { w_y: 1.0, w_t: 1.0 }
    }
}

/// Normalized inputs and targets for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub inputs: Vec<[f64; INPUT_SIZE]>,
    pub targets: Vec<[f64; OUTPUT_SIZE]>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::invalid("empty sequence"));
        }
        if self.inputs.len() != self.targets.len() {
            return Err(Error::invalid("inputs and targets differ in length"));
        }
        Ok(())
    }
}

/// Activations kept for backpropagation through time.
struct Tape {
    hidden: usize,
    gates: Vec<f64>,
    cells: Vec<f64>,
    hiddens: Vec<f64>,
    outputs: Vec<[f64; OUTPUT_SIZE]>,
}

fn run_forward(p: &ModelParams, seq: &Sequence) -> Tape {
    let hs = p.hidden();
    let n = seq.len();
    let mut tape = Tape {
        hidden: hs,
        gates: vec![0.0; n * 4 * hs],
        cells: vec![0.0; n * hs],
        hiddens: vec![0.0; n * hs],
        outputs: Vec::with_capacity(n),
    };
    let zeros = vec![0.0; hs];
    for t in 0..n {
        let (prev_h, cur_h) = tape.hiddens.split_at_mut(t * hs);
        let (prev_c, cur_c) = tape.cells.split_at_mut(t * hs);
        let h_prev = if t == 0 { &zeros[..] } else { &prev_h[(t - 1) * hs..] };
        let c_prev = if t == 0 { &zeros[..] } else { &prev_c[(t - 1) * hs..] };
        cell_forward(
            p,
            &seq.inputs[t],
            h_prev,
            c_prev,
            &mut tape.gates[t * 4 * hs..(t + 1) * 4 * hs],
            &mut cur_c[..hs],
            &mut cur_h[..hs],
        );
        tape.outputs.push(readout(p, &cur_h[..hs]));
    }
    tape
}

impl Tape {
    fn h(&self, t: usize) -> &[f64] {
        &self.hiddens[t * self.hidden..(t + 1) * self.hidden]
    }

    fn c(&self, t: usize) -> &[f64] {
        &self.cells[t * self.hidden..(t + 1) * self.hidden]
    }

    fn gates(&self, t: usize) -> &[f64] {
        &self.gates[t * 4 * self.hidden..(t + 1) * 4 * self.hidden]
    }
}

fn loss_of(outputs: &[[f64; OUTPUT_SIZE]], seq: &Sequence, w: LossWeights) -> f64 {
    let sum: f64 = outputs
        .iter()
        .zip(&seq.targets)
        .map(|(o, t)| w.w_y * (o[0] - t[0]).powi(2) + w.w_t * (o[1] - t[1]).powi(2))
        .sum();
    sum / seq.len() as f64
}

/// Mean over steps of `w_y (y_hat - y)^2 + w_t (t_hat - t)^2`, plus the raw
/// normalized outputs at every step.
pub fn sequence_loss(
    p: &ModelParams,
    seq: &Sequence,
    w: LossWeights,
) -> Result<(f64, Vec<[f64; OUTPUT_SIZE]>)> {
    seq.check()?;
    let tape = run_forward(p, seq);
    let loss = loss_of(&tape.outputs, seq, w);
    Ok((loss, tape.outputs))
}

/// Loss and its exact gradient by backpropagation through time.
pub fn loss_and_gradient(
    p: &ModelParams,
    seq: &Sequence,
    w: LossWeights,
) -> Result<(f64, ModelParams)> {
    let mut grad = ModelParams::zeros(p.hidden());
    let loss = accumulate_gradient(p, seq, w, 1.0, &mut grad)?;
    Ok((loss, grad))
}

/// Adds `scale * dLoss/dparams` into `grad` and returns the loss.
pub fn accumulate_gradient(
    p: &ModelParams,
    seq: &Sequence,
    w: LossWeights,
    scale: f64,
    grad: &mut ModelParams,
) -> Result<f64> {
    seq.check()?;
    let hs = p.hidden();
    let n = seq.len();
    let tape = run_forward(p, seq);
    let loss = loss_of(&tape.outputs, seq, w);

    let w_out = p.w_output();
    let w_h = p.w_hidden();
    let g = grad.blocks_mut();

    let zeros = vec![0.0; hs];
    let mut dh = vec![0.0; hs];
    let mut dh_next = vec![0.0; hs];
    let mut dc_next = vec![0.0; hs];
    let mut da = vec![0.0; 4 * hs];
    let norm = scale * 2.0 / n as f64;

    for t in (0..n).rev() {
        let out = tape.outputs[t];
        let tgt = seq.targets[t];
        let dy = [norm * w.w_y * (out[0] - tgt[0]), norm * w.w_t * (out[1] - tgt[1])];
        let h_t = tape.h(t);
        for k in 0..OUTPUT_SIZE {
            g.b_output[k] += dy[k];
            axpy(dy[k], h_t, &mut g.w_output[k * hs..(k + 1) * hs]);
        }

        dh.copy_from_slice(&dh_next);
        for k in 0..OUTPUT_SIZE {
            axpy(dy[k], &w_out[k * hs..(k + 1) * hs], &mut dh);
        }

        let gates = tape.gates(t);
        let c_t = tape.c(t);
        let c_prev = if t == 0 { &zeros[..] } else { tape.c(t - 1) };
        for k in 0..hs {
            let (i, f, gg, o) = (gates[k], gates[hs + k], gates[2 * hs + k], gates[3 * hs + k]);
            let tc = c_t[k].tanh();
            let d_o = dh[k] * tc;
            let dc = dc_next[k] + dh[k] * o * (1.0 - tc * tc);
            da[k] = dc * gg * i * (1.0 - i);
            da[hs + k] = dc * c_prev[k] * f * (1.0 - f);
            da[2 * hs + k] = dc * i * (1.0 - gg * gg);
            da[3 * hs + k] = d_o * o * (1.0 - o);
            dc_next[k] = dc * f;
        }

        let x = &seq.inputs[t];
        dh_next.fill(0.0);
        for r in 0..4 * hs {
            let a = da[r];
            g.bias[r] += a;
            let wi = &mut g.w_input[r * INPUT_SIZE..(r + 1) * INPUT_SIZE];
            wi[0] += a * x[0];
            wi[1] += a * x[1];
            wi[2] += a * x[2];
            if t > 0 {
                axpy(a, tape.h(t - 1), &mut g.w_hidden[r * hs..(r + 1) * hs]);
                axpy(a, &w_h[r * hs..(r + 1) * hs], &mut dh_next);
            }
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(n: usize) -> Sequence {
        Sequence {
            inputs: (0..n).map(|i| [0.1 * i as f64, 0.5, 0.02]).collect(),
            targets: (0..n).map(|_| [0.4, 0.3]).collect(),
        }
    }

    #[test]
    fn zero_params_output_bias() {
        let mut p = ModelParams::zeros(4);
        {
            let b = p.blocks_mut();
            b.b_output[0] = 0.25;
            b.b_output[1] = 0.5;
        }
        let (_, outs) = sequence_loss(&p, &seq(3), LossWeights::default()).unwrap();
        assert!(outs.iter().all(|o| *o == [0.25, 0.5]));
    }

    #[test]
    fn single_step_unit_error() {
        let mut p = ModelParams::zeros(2);
        {
            let b = p.blocks_mut();
            b.b_output[0] = 1.4;
            b.b_output[1] = 0.3;
        }
        let (loss, _) = sequence_loss(&p, &seq(1), LossWeights::default()).unwrap();
        assert!((loss - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions_have_zero_loss_and_output_gradient() {
        let mut p = ModelParams::zeros(3);
        {
            let b = p.blocks_mut();
            b.b_output[0] = 0.4;
            b.b_output[1] = 0.3;
        }
        let (loss, g) = loss_and_gradient(&p, &seq(5), LossWeights::default()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.w_output().iter().chain(g.b_output()).all(|&v| v == 0.0));
    }

    #[test]
    fn empty_sequence_rejected() {
        let p = ModelParams::zeros(2);
        let s = Sequence { inputs: vec![], targets: vec![] };
        assert!(sequence_loss(&p, &s, LossWeights::default()).is_err());
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let b: Vec<f64> = (0..11).map(|i| 1.0 - i as f64 * 0.1).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
