//! A single handle over the five trainable model families, with uniform
//! access to named parameter tensors (for the optimizer, the checkpoint
//! format, and the gradient checker) and the shared forward-pass plumbing.

use crate::cells::{
    colstsm_step, lstm_step, nll_loss, pooled_mean, rnn_output, rnn_step, softmax, CoLstsmParams,
    CoLstsmStepCache, LstmParams, LstmStepCache, PooledParams, RnnParams, SequencePair,
};
use crate::error::{Error, Result};
use crate::numkernel::{linear, DenseMatrix, DenseVector, Prng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Rnn,
    OneLstm,
    TwoLstm,
    Pooled,
    CoLstsm,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Rnn,
        ModelFamily::OneLstm,
        ModelFamily::TwoLstm,
        ModelFamily::Pooled,
        ModelFamily::CoLstsm,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelFamily::Rnn => "rnn",
            ModelFamily::OneLstm => "one-lstm",
            ModelFamily::TwoLstm => "two-lstm",
            ModelFamily::Pooled => "pooled",
            ModelFamily::CoLstsm => "colstsm",
        }
    }

    pub fn parse(s: &str) -> Option<ModelFamily> {
        Self::ALL.into_iter().find(|f| f.tag() == s)
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Two independent per-stream LSTMs whose softmax scores are fused at
/// evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLstmParams {
    pub stream_a: LstmParams,
    pub stream_b: LstmParams,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Rnn(RnnParams),
    OneLstm(LstmParams),
    TwoLstm(TwoLstmParams),
    Pooled(PooledParams),
    CoLstsm(CoLstsmParams),
}

/// Gradients mirror the parameter structure tensor for tensor, so the same
/// container type serves both.
pub type Gradients = Model;

/// Read-only view of one parameter tensor.
pub enum TensorView<'a> {
    Mat(&'a DenseMatrix),
    Vec(&'a DenseVector),
}

impl<'a> TensorView<'a> {
    pub fn data(&self) -> &[f64] {
        match self {
            TensorView::Mat(m) => m.as_slice(),
            TensorView::Vec(v) => v.as_slice(),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match self {
            TensorView::Mat(m) => vec![m.rows(), m.cols()],
            TensorView::Vec(v) => vec![v.len()],
        }
    }
}

/// Mutable view of one parameter tensor.
pub enum TensorViewMut<'a> {
    Mat(&'a mut DenseMatrix),
    Vec(&'a mut DenseVector),
}

impl<'a> TensorViewMut<'a> {
    pub fn data_mut(&mut self) -> &mut [f64] {
        match self {
            TensorViewMut::Mat(m) => m.as_mut_slice(),
            TensorViewMut::Vec(v) => v.as_mut_slice(),
        }
    }
}

macro_rules! lstm_entries {
    ($p:expr, $view:ident, $suffix:expr) => {
        vec![
            (format!("W_ix{}", $suffix), $view::Mat(&$p.w_ix)),
            (format!("W_ih{}", $suffix), $view::Mat(&$p.w_ih)),
            (format!("b_i{}", $suffix), $view::Vec(&$p.b_i)),
            (format!("W_fx{}", $suffix), $view::Mat(&$p.w_fx)),
            (format!("W_fh{}", $suffix), $view::Mat(&$p.w_fh)),
            (format!("b_f{}", $suffix), $view::Vec(&$p.b_f)),
            (format!("W_gx{}", $suffix), $view::Mat(&$p.w_gx)),
            (format!("W_gh{}", $suffix), $view::Mat(&$p.w_gh)),
            (format!("b_g{}", $suffix), $view::Vec(&$p.b_g)),
            (format!("W_ox{}", $suffix), $view::Mat(&$p.w_ox)),
            (format!("W_oh{}", $suffix), $view::Mat(&$p.w_oh)),
            (format!("b_o{}", $suffix), $view::Vec(&$p.b_o)),
            (format!("W_zh{}", $suffix), $view::Mat(&$p.w_zh)),
            (format!("b_z{}", $suffix), $view::Vec(&$p.b_z)),
        ]
    };
}

macro_rules! lstm_entries_mut {
    ($p:expr, $suffix:expr) => {
        vec![
            (format!("W_ix{}", $suffix), TensorViewMut::Mat(&mut $p.w_ix)),
            (format!("W_ih{}", $suffix), TensorViewMut::Mat(&mut $p.w_ih)),
            (format!("b_i{}", $suffix), TensorViewMut::Vec(&mut $p.b_i)),
            (format!("W_fx{}", $suffix), TensorViewMut::Mat(&mut $p.w_fx)),
            (format!("W_fh{}", $suffix), TensorViewMut::Mat(&mut $p.w_fh)),
            (format!("b_f{}", $suffix), TensorViewMut::Vec(&mut $p.b_f)),
            (format!("W_gx{}", $suffix), TensorViewMut::Mat(&mut $p.w_gx)),
            (format!("W_gh{}", $suffix), TensorViewMut::Mat(&mut $p.w_gh)),
            (format!("b_g{}", $suffix), TensorViewMut::Vec(&mut $p.b_g)),
            (format!("W_ox{}", $suffix), TensorViewMut::Mat(&mut $p.w_ox)),
            (format!("W_oh{}", $suffix), TensorViewMut::Mat(&mut $p.w_oh)),
            (format!("b_o{}", $suffix), TensorViewMut::Vec(&mut $p.b_o)),
            (format!("W_zh{}", $suffix), TensorViewMut::Mat(&mut $p.w_zh)),
            (format!("b_z{}", $suffix), TensorViewMut::Vec(&mut $p.b_z)),
        ]
    };
}

macro_rules! sub_memory_entries {
    ($s:expr, $view:ident, $suffix:expr) => {
        vec![
            (format!("W_ix{}", $suffix), $view::Mat(&$s.w_ix)),
            (format!("W_ih{}", $suffix), $view::Mat(&$s.w_ih)),
            (format!("b_i{}", $suffix), $view::Vec(&$s.b_i)),
            (format!("W_fx{}", $suffix), $view::Mat(&$s.w_fx)),
            (format!("W_fh{}", $suffix), $view::Mat(&$s.w_fh)),
            (format!("b_f{}", $suffix), $view::Vec(&$s.b_f)),
            (format!("W_gx{}", $suffix), $view::Mat(&$s.w_gx)),
            (format!("W_gh{}", $suffix), $view::Mat(&$s.w_gh)),
            (format!("b_g{}", $suffix), $view::Vec(&$s.b_g)),
            (format!("W_pi_x{}", $suffix), $view::Mat(&$s.w_pi_x)),
        ]
    };
}

macro_rules! sub_memory_entries_mut {
    ($s:expr, $suffix:expr) => {
        vec![
            (format!("W_ix{}", $suffix), TensorViewMut::Mat(&mut $s.w_ix)),
            (format!("W_ih{}", $suffix), TensorViewMut::Mat(&mut $s.w_ih)),
            (format!("b_i{}", $suffix), TensorViewMut::Vec(&mut $s.b_i)),
            (format!("W_fx{}", $suffix), TensorViewMut::Mat(&mut $s.w_fx)),
            (format!("W_fh{}", $suffix), TensorViewMut::Mat(&mut $s.w_fh)),
            (format!("b_f{}", $suffix), TensorViewMut::Vec(&mut $s.b_f)),
            (format!("W_gx{}", $suffix), TensorViewMut::Mat(&mut $s.w_gx)),
            (format!("W_gh{}", $suffix), TensorViewMut::Mat(&mut $s.w_gh)),
            (format!("b_g{}", $suffix), TensorViewMut::Vec(&mut $s.b_g)),
            (format!("W_pi_x{}", $suffix), TensorViewMut::Mat(&mut $s.w_pi_x)),
        ]
    };
}

impl Model {
    /// Fresh model with the standard initialization recipe drawn from `prng`.
    /// `input` is the per-stream feature dimension; the joint families use
    /// twice that internally.
    pub fn new(
        family: ModelFamily,
        input: usize,
        hidden: usize,
        classes: usize,
        prng: &mut Prng,
    ) -> Model {
        match family {
            ModelFamily::Rnn => Model::Rnn(RnnParams::init(2 * input, hidden, classes, prng)),
            ModelFamily::OneLstm => {
                Model::OneLstm(LstmParams::init(2 * input, hidden, classes, prng))
            }
            ModelFamily::TwoLstm => Model::TwoLstm(TwoLstmParams {
                stream_a: LstmParams::init(input, hidden, classes, prng),
                stream_b: LstmParams::init(input, hidden, classes, prng),
            }),
            ModelFamily::Pooled => Model::Pooled(PooledParams::init(input, classes, prng)),
            ModelFamily::CoLstsm => {
                Model::CoLstsm(CoLstsmParams::init(input, hidden, classes, prng))
            }
        }
    }

    /// All-zero parameters with the same shapes as `new` would produce.
    pub fn zeros(family: ModelFamily, input: usize, hidden: usize, classes: usize) -> Model {
        match family {
            ModelFamily::Rnn => Model::Rnn(RnnParams::zeros(2 * input, hidden, classes)),
            ModelFamily::OneLstm => Model::OneLstm(LstmParams::zeros(2 * input, hidden, classes)),
            ModelFamily::TwoLstm => Model::TwoLstm(TwoLstmParams {
                stream_a: LstmParams::zeros(input, hidden, classes),
                stream_b: LstmParams::zeros(input, hidden, classes),
            }),
            ModelFamily::Pooled => Model::Pooled(PooledParams::zeros(input, classes)),
            ModelFamily::CoLstsm => Model::CoLstsm(CoLstsmParams::zeros(input, hidden, classes)),
        }
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            Model::Rnn(_) => ModelFamily::Rnn,
            Model::OneLstm(_) => ModelFamily::OneLstm,
            Model::TwoLstm(_) => ModelFamily::TwoLstm,
            Model::Pooled(_) => ModelFamily::Pooled,
            Model::CoLstsm(_) => ModelFamily::CoLstsm,
        }
    }

    /// Per-stream feature dimension expected from a `SequencePair`.
    pub fn input_dim(&self) -> usize {
        match self {
            Model::Rnn(p) => p.input_dim() / 2,
            Model::OneLstm(p) => p.input_dim() / 2,
            Model::TwoLstm(p) => p.stream_a.input_dim(),
            Model::Pooled(p) => p.input_dim(),
            Model::CoLstsm(p) => p.input_dim(),
        }
    }

    /// Hidden size; zero for the pooled baseline, which has no hidden layer.
    pub fn hidden_dim(&self) -> usize {
        match self {
            Model::Rnn(p) => p.hidden_dim(),
            Model::OneLstm(p) => p.hidden_dim(),
            Model::TwoLstm(p) => p.stream_a.hidden_dim(),
            Model::Pooled(_) => 0,
            Model::CoLstsm(p) => p.hidden_dim(),
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            Model::Rnn(p) => p.classes(),
            Model::OneLstm(p) => p.classes(),
            Model::TwoLstm(p) => p.stream_a.classes(),
            Model::Pooled(p) => p.classes(),
            Model::CoLstsm(p) => p.classes(),
        }
    }

    /// Named parameter tensors in the fixed canonical order used by the
    /// checkpoint format and the gradient-check report.
    pub fn named_tensors(&self) -> Vec<(String, TensorView<'_>)> {
        match self {
            Model::Rnn(p) => vec![
                ("W_hx".to_string(), TensorView::Mat(&p.w_hx)),
                ("W_hh".to_string(), TensorView::Mat(&p.w_hh)),
                ("b_h".to_string(), TensorView::Vec(&p.b_h)),
                ("W_zh".to_string(), TensorView::Mat(&p.w_zh)),
                ("b_z".to_string(), TensorView::Vec(&p.b_z)),
            ],
            Model::OneLstm(p) => lstm_entries!(p, TensorView, ""),
            Model::TwoLstm(p) => {
                let mut v = lstm_entries!(p.stream_a, TensorView, "_a");
                v.extend(lstm_entries!(p.stream_b, TensorView, "_b"));
                v
            }
            Model::Pooled(p) => vec![
                ("W_p".to_string(), TensorView::Mat(&p.w_p)),
                ("b_p".to_string(), TensorView::Vec(&p.b_p)),
            ],
            Model::CoLstsm(p) => {
                let mut v = sub_memory_entries!(p.sub_a, TensorView, "_a");
                v.extend(sub_memory_entries!(p.sub_b, TensorView, "_b"));
                v.extend(vec![
                    ("W_pi_h".to_string(), TensorView::Mat(&p.w_pi_h)),
                    ("b_pi".to_string(), TensorView::Vec(&p.b_pi)),
                    ("W_ox".to_string(), TensorView::Mat(&p.w_ox)),
                    ("W_oh".to_string(), TensorView::Mat(&p.w_oh)),
                    ("b_o".to_string(), TensorView::Vec(&p.b_o)),
                    ("W_zh".to_string(), TensorView::Mat(&p.w_zh)),
                    ("b_z".to_string(), TensorView::Vec(&p.b_z)),
                ]);
                v
            }
        }
    }

    /// Mutable views in the same canonical order as `named_tensors`.
    pub fn named_tensors_mut(&mut self) -> Vec<(String, TensorViewMut<'_>)> {
        match self {
            Model::Rnn(p) => vec![
                ("W_hx".to_string(), TensorViewMut::Mat(&mut p.w_hx)),
                ("W_hh".to_string(), TensorViewMut::Mat(&mut p.w_hh)),
                ("b_h".to_string(), TensorViewMut::Vec(&mut p.b_h)),
                ("W_zh".to_string(), TensorViewMut::Mat(&mut p.w_zh)),
                ("b_z".to_string(), TensorViewMut::Vec(&mut p.b_z)),
            ],
            Model::OneLstm(p) => lstm_entries_mut!(p, ""),
            Model::TwoLstm(p) => {
                let mut v = lstm_entries_mut!(p.stream_a, "_a");
                v.extend(lstm_entries_mut!(p.stream_b, "_b"));
                v
            }
            Model::Pooled(p) => vec![
                ("W_p".to_string(), TensorViewMut::Mat(&mut p.w_p)),
                ("b_p".to_string(), TensorViewMut::Vec(&mut p.b_p)),
            ],
            Model::CoLstsm(p) => {
                let mut v = sub_memory_entries_mut!(p.sub_a, "_a");
                v.extend(sub_memory_entries_mut!(p.sub_b, "_b"));
                v.extend(vec![
                    ("W_pi_h".to_string(), TensorViewMut::Mat(&mut p.w_pi_h)),
                    ("b_pi".to_string(), TensorViewMut::Vec(&mut p.b_pi)),
                    ("W_ox".to_string(), TensorViewMut::Mat(&mut p.w_ox)),
                    ("W_oh".to_string(), TensorViewMut::Mat(&mut p.w_oh)),
                    ("b_o".to_string(), TensorViewMut::Vec(&mut p.b_o)),
                    ("W_zh".to_string(), TensorViewMut::Mat(&mut p.w_zh)),
                    ("b_z".to_string(), TensorViewMut::Vec(&mut p.b_z)),
                ]);
                v
            }
        }
    }

    /// Same family and shapes, all values zero. Used for gradient and
    /// velocity containers.
    pub fn zeros_like(&self) -> Model {
        let mut z = self.clone();
        for (_, mut t) in z.named_tensors_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        z
    }

    /// Fails unless `other` has the same family and tensor shapes.
    pub fn check_congruent(&self, other: &Model, what: &str) -> Result<()> {
        if self.family() != other.family() {
            return Err(Error::dims(format!(
                "{what}: family {} does not match {}",
                other.family(),
                self.family()
            )));
        }
        for ((name, a), (_, b)) in self.named_tensors().iter().zip(other.named_tensors().iter()) {
            if a.shape() != b.shape() {
                return Err(Error::dims(format!(
                    "{what}: tensor {name} has shape {:?}, expected {:?}",
                    b.shape(),
                    a.shape()
                )));
            }
        }
        Ok(())
    }

    /// self += s * other, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Model, s: f64) -> Result<()> {
        self.check_congruent(other, "add_scaled")?;
        let mut mine = self.named_tensors_mut();
        let theirs = other.named_tensors();
        for ((_, a), (_, b)) in mine.iter_mut().zip(theirs.iter()) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += s * y;
            }
        }
        Ok(())
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for (_, mut t) in self.named_tensors_mut() {
            for v in t.data_mut() {
                *v *= s;
            }
        }
    }

    /// Euclidean norm over every scalar parameter.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for (_, t) in self.named_tensors() {
            for v in t.data() {
                acc += v * v;
            }
        }
        acc.sqrt()
    }

    fn check_pair(&self, pair: &SequencePair) -> Result<()> {
        pair.validate()?;
        if pair.input_dim() != self.input_dim() {
            return Err(Error::dims(format!(
                "model expects per-stream input {} but pair has {}",
                self.input_dim(),
                pair.input_dim()
            )));
        }
        if pair.label >= self.classes() {
            return Err(Error::LabelOutOfRange {
                label: pair.label,
                classes: self.classes(),
            });
        }
        Ok(())
    }

    /// Runs the forward dynamics over the first `prefix_len` timesteps with
    /// zero initial state, emitting per-timestep logits through the
    /// classifier head.
    pub fn forward_prefix(&self, pair: &SequencePair, prefix_len: usize) -> Result<Forward> {
        self.check_pair(pair)?;
        if prefix_len == 0 || prefix_len > pair.seq_len() {
            return Err(Error::PrefixOutOfRange {
                prefix: prefix_len,
                len: pair.seq_len(),
            });
        }
        match self {
            Model::Rnn(p) => {
                let mut h = DenseVector::zeros(p.hidden_dim());
                let mut hidden = Vec::with_capacity(prefix_len);
                let mut logits = Vec::with_capacity(prefix_len);
                for t in 0..prefix_len {
                    let x = pair.a[t].concat(&pair.b[t]);
                    h = rnn_step(p, &x, &h)?;
                    logits.push(rnn_output(p, &h, false)?);
                    hidden.push(h.clone());
                }
                Ok(Forward::Rnn(RnnForward { hidden, logits }))
            }
            Model::OneLstm(p) => {
                let fused: Vec<DenseVector> = (0..prefix_len)
                    .map(|t| pair.a[t].concat(&pair.b[t]))
                    .collect();
                Ok(Forward::OneLstm(lstm_forward(p, &fused)?))
            }
            Model::TwoLstm(p) => Ok(Forward::TwoLstm(TwoLstmForward {
                a: lstm_forward(&p.stream_a, &pair.a[..prefix_len])?,
                b: lstm_forward(&p.stream_b, &pair.b[..prefix_len])?,
            })),
            Model::Pooled(p) => {
                let mean = pooled_mean(pair, prefix_len);
                let logits = linear(&p.w_p, &mean, &p.b_p)?;
                Ok(Forward::Pooled(PooledForward { mean, logits }))
            }
            Model::CoLstsm(p) => {
                let m = p.hidden_dim();
                let mut h = DenseVector::zeros(m);
                let mut ca = DenseVector::zeros(m);
                let mut cb = DenseVector::zeros(m);
                let mut steps = Vec::with_capacity(prefix_len);
                let mut logits = Vec::with_capacity(prefix_len);
                for t in 0..prefix_len {
                    let (h_t, ca_t, cb_t, cache) =
                        colstsm_step(p, &pair.a[t], &pair.b[t], &h, &ca, &cb)?;
                    logits.push(linear(&p.w_zh, &h_t, &p.b_z)?);
                    steps.push(cache);
                    h = h_t;
                    ca = ca_t;
                    cb = cb_t;
                }
                Ok(Forward::CoLstsm(CoLstsmForward { steps, logits }))
            }
        }
    }

    /// Full-length forward pass.
    pub fn forward_sequence(&self, pair: &SequencePair) -> Result<Forward> {
        self.forward_prefix(pair, pair.seq_len())
    }

    /// Mean per-timestep negative log-likelihood of the pair's label.
    pub fn sequence_loss(&self, pair: &SequencePair) -> Result<f64> {
        let fwd = self.forward_sequence(pair)?;
        fwd.sequence_loss(pair.label)
    }
}

fn lstm_forward(p: &LstmParams, xs: &[DenseVector]) -> Result<LstmForward> {
    let m = p.hidden_dim();
    let mut h = DenseVector::zeros(m);
    let mut c = DenseVector::zeros(m);
    let mut steps = Vec::with_capacity(xs.len());
    let mut logits = Vec::with_capacity(xs.len());
    for x in xs {
        let (h_t, c_t, cache) = lstm_step(p, x, &h, &c)?;
        logits.push(linear(&p.w_zh, &h_t, &p.b_z)?);
        steps.push(cache);
        h = h_t;
        c = c_t;
    }
    Ok(LstmForward { steps, logits })
}

#[derive(Debug, Clone)]
pub struct RnnForward {
    pub hidden: Vec<DenseVector>,
    pub logits: Vec<DenseVector>,
}

#[derive(Debug, Clone)]
pub struct LstmForward {
    pub steps: Vec<LstmStepCache>,
    pub logits: Vec<DenseVector>,
}

#[derive(Debug, Clone)]
pub struct TwoLstmForward {
    pub a: LstmForward,
    pub b: LstmForward,
}

#[derive(Debug, Clone)]
pub struct PooledForward {
    pub mean: DenseVector,
    pub logits: DenseVector,
}

#[derive(Debug, Clone)]
pub struct CoLstsmForward {
    pub steps: Vec<CoLstsmStepCache>,
    pub logits: Vec<DenseVector>,
}

/// Per-family forward-pass record: hidden trajectories, per-timestep logits,
/// and whatever the matching backward pass needs.
#[derive(Debug, Clone)]
pub enum Forward {
    Rnn(RnnForward),
    OneLstm(LstmForward),
    TwoLstm(TwoLstmForward),
    Pooled(PooledForward),
    CoLstsm(CoLstsmForward),
}

fn mean_step_nll(logits: &[DenseVector], label: usize) -> Result<f64> {
    let mut total = 0.0;
    for z in logits {
        total += nll_loss(&softmax(z), label)?;
    }
    Ok(total / logits.len() as f64)
}

impl Forward {
    pub fn family(&self) -> ModelFamily {
        match self {
            Forward::Rnn(_) => ModelFamily::Rnn,
            Forward::OneLstm(_) => ModelFamily::OneLstm,
            Forward::TwoLstm(_) => ModelFamily::TwoLstm,
            Forward::Pooled(_) => ModelFamily::Pooled,
            Forward::CoLstsm(_) => ModelFamily::CoLstsm,
        }
    }

    /// Number of timesteps covered by this pass (1 for the pooled family,
    /// whose forward is a single aggregate).
    pub fn steps(&self) -> usize {
        match self {
            Forward::Rnn(f) => f.hidden.len(),
            Forward::OneLstm(f) => f.steps.len(),
            Forward::TwoLstm(f) => f.a.steps.len(),
            Forward::Pooled(_) => 1,
            Forward::CoLstsm(f) => f.steps.len(),
        }
    }

    /// Sequence loss: the mean per-timestep label NLL; the two-stream
    /// family averages its two per-stream losses, the pooled family has a
    /// single term.
    pub fn sequence_loss(&self, label: usize) -> Result<f64> {
        match self {
            Forward::Rnn(f) => mean_step_nll(&f.logits, label),
            Forward::OneLstm(f) => mean_step_nll(&f.logits, label),
            Forward::TwoLstm(f) => Ok((mean_step_nll(&f.a.logits, label)?
                + mean_step_nll(&f.b.logits, label)?)
                / 2.0),
            Forward::Pooled(f) => nll_loss(&softmax(&f.logits), label),
            Forward::CoLstsm(f) => mean_step_nll(&f.logits, label),
        }
    }

    /// Class distribution at the last computed timestep; two-stream scores
    /// are fused by averaging the per-stream softmax outputs.
    pub fn last_step_probs(&self) -> DenseVector {
        match self {
            Forward::Rnn(f) => softmax(f.logits.last().expect("nonempty forward")),
            Forward::OneLstm(f) => softmax(f.logits.last().expect("nonempty forward")),
            Forward::TwoLstm(f) => {
                let pa = softmax(f.a.logits.last().expect("nonempty forward"));
                let pb = softmax(f.b.logits.last().expect("nonempty forward"));
                pa.add(&pb).scale(0.5)
            }
            Forward::Pooled(f) => softmax(&f.logits),
            Forward::CoLstsm(f) => softmax(f.logits.last().expect("nonempty forward")),
        }
    }

    /// Class distribution averaged over every computed timestep (ablation
    /// alternative to `last_step_probs`).
    pub fn mean_step_probs(&self) -> DenseVector {
        let mean_of = |logits: &[DenseVector]| {
            let mut acc = DenseVector::zeros(logits[0].len());
            for z in logits {
                acc.add_assign(&softmax(z));
            }
            acc.scale(1.0 / logits.len() as f64)
        };
        match self {
            Forward::Rnn(f) => mean_of(&f.logits),
            Forward::OneLstm(f) => mean_of(&f.logits),
            Forward::TwoLstm(f) => mean_of(&f.a.logits).add(&mean_of(&f.b.logits)).scale(0.5),
            Forward::Pooled(f) => softmax(&f.logits),
            Forward::CoLstsm(f) => mean_of(&f.logits),
        }
    }
}
