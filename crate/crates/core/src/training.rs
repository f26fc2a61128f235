//! Reverse-mode gradients, Adam, and the training loop.
//!
//! The backward pass walks one forward trace in reverse: output head,
//! temporal attention, GRU chain (all gates), event attention, and finally
//! the embedding sums, producing dense gradients for every network tensor
//! plus sparse per-row gradients for the embedding tables. Everything is
//! accumulated in f64 and the batch reduction order is fixed, so training is
//! run-to-run deterministic for a fixed seed.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_pipeline::CohortDataset;
use crate::event_model::{EventSequence, ZStats, OOV_INDEX};
use crate::hier_net::{
    forward, loss, Dims, EventAttnParams, ForwardTrace, GruParams, Mode, ModelParams, PROB_CLAMP,
};
use crate::metrics::{roc_auc, ScoredLabels};
use crate::segmentation::{Segmentation, SegmentationChoice};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training diverged: non-finite batch loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("{split} split is empty")]
    EmptySplit { split: &'static str },
    #[error("validation split cannot score an AUC: {0}")]
    DegenerateValidation(String),
}

/// Gradients of the batch loss. Network tensors are dense and mirror
/// [`ModelParams`]; embedding tables are sparse maps over the rows the batch
/// actually touched.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub attn: EventAttnParams,
    pub gru: GruParams,
    pub temporal_score: Array1<f64>,
    pub out_weight: Array1<f64>,
    pub out_bias: f64,
    pub type_rows: BTreeMap<usize, Array1<f64>>,
    pub cat_rows: BTreeMap<usize, Array1<f64>>,
    pub num_rows: BTreeMap<usize, Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(p: &ModelParams) -> Self {
        let Dims { n, h, s } = p.dims;
        Gradients {
            attn: EventAttnParams {
                event_proj: Array2::zeros((h, n)),
                state_proj: Array2::zeros((h, s)),
                bias: Array1::zeros(h),
                score: Array1::zeros(h),
            },
            gru: GruParams {
                update_in: Array2::zeros((s, n)),
                update_rec: Array2::zeros((s, s)),
                update_bias: Array1::zeros(s),
                reset_in: Array2::zeros((s, n)),
                reset_rec: Array2::zeros((s, s)),
                reset_bias: Array1::zeros(s),
                cand_in: Array2::zeros((s, n)),
                cand_rec: Array2::zeros((s, s)),
                cand_bias: Array1::zeros(s),
            },
            temporal_score: Array1::zeros(s),
            out_weight: Array1::zeros(s),
            out_bias: 0.0,
            type_rows: BTreeMap::new(),
            cat_rows: BTreeMap::new(),
            num_rows: BTreeMap::new(),
        }
    }

    /// Adds another sample's gradients into this accumulator.
    pub fn accumulate(&mut self, other: &Gradients) {
        self.attn.event_proj += &other.attn.event_proj;
        self.attn.state_proj += &other.attn.state_proj;
        self.attn.bias += &other.attn.bias;
        self.attn.score += &other.attn.score;
        self.gru.update_in += &other.gru.update_in;
        self.gru.update_rec += &other.gru.update_rec;
        self.gru.update_bias += &other.gru.update_bias;
        self.gru.reset_in += &other.gru.reset_in;
        self.gru.reset_rec += &other.gru.reset_rec;
        self.gru.reset_bias += &other.gru.reset_bias;
        self.gru.cand_in += &other.gru.cand_in;
        self.gru.cand_rec += &other.gru.cand_rec;
        self.gru.cand_bias += &other.gru.cand_bias;
        self.temporal_score += &other.temporal_score;
        self.out_weight += &other.out_weight;
        self.out_bias += other.out_bias;
        for (map, theirs) in [
            (&mut self.type_rows, &other.type_rows),
            (&mut self.cat_rows, &other.cat_rows),
            (&mut self.num_rows, &other.num_rows),
        ] {
            for (&row, grad) in theirs {
                match map.get_mut(&row) {
                    Some(acc) => *acc += grad,
                    None => {
                        map.insert(row, grad.clone());
                    }
                }
            }
        }
    }

    /// Dense view matching [`ModelParams::flatten`]; untouched embedding rows
    /// appear as zeros. Intended for gradient checking.
    pub fn flatten(&self, like: &ModelParams) -> Vec<f64> {
        let mut out = Vec::with_capacity(like.flat_len());
        let sparse_block =
            |out: &mut Vec<f64>, table: &Array2<f64>, rows: &BTreeMap<usize, Array1<f64>>| {
                for r in 0..table.nrows() {
                    match rows.get(&r) {
                        Some(g) => out.extend(g.iter()),
                        None => out.extend(std::iter::repeat_n(0.0, table.ncols())),
                    }
                }
            };
        sparse_block(&mut out, &like.tables.type_table, &self.type_rows);
        sparse_block(&mut out, &like.tables.cat_table, &self.cat_rows);
        sparse_block(&mut out, &like.tables.num_directions, &self.num_rows);
        for s in dense_slices(&self.attn, &self.gru, &self.temporal_score, &self.out_weight) {
            out.extend_from_slice(s);
        }
        out.push(self.out_bias);
        out
    }
}

fn dense_slices<'a>(
    attn: &'a EventAttnParams,
    gru: &'a GruParams,
    temporal_score: &'a Array1<f64>,
    out_weight: &'a Array1<f64>,
) -> Vec<&'a [f64]> {
    vec![
        attn.event_proj.as_slice().unwrap(),
        attn.state_proj.as_slice().unwrap(),
        attn.bias.as_slice().unwrap(),
        attn.score.as_slice().unwrap(),
        gru.update_in.as_slice().unwrap(),
        gru.update_rec.as_slice().unwrap(),
        gru.update_bias.as_slice().unwrap(),
        gru.reset_in.as_slice().unwrap(),
        gru.reset_rec.as_slice().unwrap(),
        gru.reset_bias.as_slice().unwrap(),
        gru.cand_in.as_slice().unwrap(),
        gru.cand_rec.as_slice().unwrap(),
        gru.cand_bias.as_slice().unwrap(),
        temporal_score.as_slice().unwrap(),
        out_weight.as_slice().unwrap(),
    ]
}

fn dense_slices_mut(p: &mut ModelParams) -> Vec<&mut [f64]> {
    let ModelParams {
        attn,
        gru,
        temporal_score,
        out_weight,
        ..
    } = p;
    vec![
        attn.event_proj.as_slice_mut().unwrap(),
        attn.state_proj.as_slice_mut().unwrap(),
        attn.bias.as_slice_mut().unwrap(),
        attn.score.as_slice_mut().unwrap(),
        gru.update_in.as_slice_mut().unwrap(),
        gru.update_rec.as_slice_mut().unwrap(),
        gru.update_bias.as_slice_mut().unwrap(),
        gru.reset_in.as_slice_mut().unwrap(),
        gru.reset_rec.as_slice_mut().unwrap(),
        gru.reset_bias.as_slice_mut().unwrap(),
        gru.cand_in.as_slice_mut().unwrap(),
        gru.cand_rec.as_slice_mut().unwrap(),
        gru.cand_bias.as_slice_mut().unwrap(),
        temporal_score.as_slice_mut().unwrap(),
        out_weight.as_slice_mut().unwrap(),
    ]
}

impl ModelParams {
    /// Every parameter coordinate in a fixed canonical order: embedding
    /// tables row-major, then the dense network tensors. The companion of
    /// [`Gradients::flatten`] for gradient checking.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        out.extend(self.tables.type_table.iter());
        out.extend(self.tables.cat_table.iter());
        out.extend(self.tables.num_directions.iter());
        for s in dense_slices(&self.attn, &self.gru, &self.temporal_score, &self.out_weight) {
            out.extend_from_slice(s);
        }
        out.push(self.out_bias);
        out
    }

    /// Overwrites every coordinate from a flat vector in canonical order.
    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.flat_len());
        let mut pos = 0;
        let take = |slice: &mut [f64], pos: &mut usize| {
            slice.copy_from_slice(&flat[*pos..*pos + slice.len()]);
            *pos += slice.len();
        };
        take(self.tables.type_table.as_slice_mut().unwrap(), &mut pos);
        take(self.tables.cat_table.as_slice_mut().unwrap(), &mut pos);
        take(self.tables.num_directions.as_slice_mut().unwrap(), &mut pos);
        for s in dense_slices_mut(self) {
            s.copy_from_slice(&flat[pos..pos + s.len()]);
            pos += s.len();
        }
        self.out_bias = flat[pos];
    }

    pub fn flat_len(&self) -> usize {
        self.tables.type_table.len()
            + self.tables.cat_table.len()
            + self.tables.num_directions.len()
            + dense_slices(&self.attn, &self.gru, &self.temporal_score, &self.out_weight)
                .iter()
                .map(|s| s.len())
                .sum::<usize>()
            + 1
    }
}

fn add_outer(acc: &mut Array2<f64>, col: &Array1<f64>, row: &Array1<f64>) {
    for (j, &c) in col.iter().enumerate() {
        if c != 0.0 {
            acc.row_mut(j).scaled_add(c, row);
        }
    }
}

fn add_row(map: &mut BTreeMap<usize, Array1<f64>>, row: usize, grad: &Array1<f64>, scale: f64) {
    match map.get_mut(&row) {
        Some(acc) => acc.scaled_add(scale, grad),
        None => {
            map.insert(row, grad * scale);
        }
    }
}

/// Exact reverse-mode gradients of the clamped negative log-likelihood for
/// one sample, with respect to every parameter including embedding rows.
///
/// `trace` must come from [`forward`] on the same sequence and parameters.
pub fn backward(
    trace: &ForwardTrace,
    seq: &EventSequence,
    params: &ModelParams,
    z: &ZStats,
    label: u8,
) -> Gradients {
    let mut g = Gradients::zeros_like(params);
    let t_groups = trace.hidden_states.len();
    let s_dim = params.dims.s;

    // output head; the clamp has zero slope once the prediction saturates
    let y = trace.prediction;
    let d_logit = if y <= PROB_CLAMP || y >= 1.0 - PROB_CLAMP {
        0.0
    } else {
        y - f64::from(label)
    };
    g.out_weight.scaled_add(d_logit, &trace.sequence_vector);
    g.out_bias += d_logit;
    let d_seq_vec = &params.out_weight * d_logit;

    // temporal pooling
    let mut d_hidden: Vec<Array1<f64>> = vec![Array1::zeros(s_dim); t_groups];
    match trace.mode {
        Mode::NoTemporalAttn => {
            d_hidden[t_groups - 1] += &d_seq_vec;
        }
        _ => {
            let d_betas: Vec<f64> = trace
                .hidden_states
                .iter()
                .map(|h| d_seq_vec.dot(h))
                .collect();
            let dot: f64 = trace
                .betas
                .iter()
                .zip(&d_betas)
                .map(|(b, db)| b * db)
                .sum();
            for i in 0..t_groups {
                let d_beta_logit = trace.betas[i] * (d_betas[i] - dot);
                g.temporal_score
                    .scaled_add(d_beta_logit, &trace.hidden_states[i]);
                d_hidden[i].scaled_add(trace.betas[i], &d_seq_vec);
                d_hidden[i].scaled_add(d_beta_logit, &params.temporal_score);
            }
        }
    }

    // event index ranges are implied by the per-group attention lengths
    let mut group_starts = Vec::with_capacity(t_groups);
    let mut start = 0;
    for alphas in &trace.event_alphas {
        group_starts.push(start);
        start += alphas.len();
    }
    debug_assert_eq!(start, seq.events.len());

    let zero_state = Array1::zeros(s_dim);
    let mut d_h_carry = Array1::zeros(s_dim);
    for i in (0..t_groups).rev() {
        let d_h = &d_hidden[i] + &d_h_carry;
        let h_prev = if i == 0 {
            &zero_state
        } else {
            &trace.hidden_states[i - 1]
        };
        let step = &trace.cache.gru_steps[i];
        let pooled = &trace.group_vectors[i];

        // GRU: h = (1 - z) * h_prev + z * c
        let d_update = &d_h * &(&step.cand - h_prev);
        let d_cand = &d_h * &step.update;
        let mut d_h_prev = &d_h * &(1.0 - &step.update);

        // candidate: c = tanh(cand_in g + r * rec_cand + cand_bias)
        let d_cand_pre = &d_cand * &(1.0 - &(&step.cand * &step.cand));
        add_outer(&mut g.gru.cand_in, &d_cand_pre, pooled);
        g.gru.cand_bias += &d_cand_pre;
        let mut d_pooled = params.gru.cand_in.t().dot(&d_cand_pre);
        let d_reset = &d_cand_pre * &step.rec_cand;
        let d_rec_cand = &d_cand_pre * &step.reset;
        add_outer(&mut g.gru.cand_rec, &d_rec_cand, h_prev);
        d_h_prev += &params.gru.cand_rec.t().dot(&d_rec_cand);

        // reset gate
        let d_reset_pre = &d_reset * &(&step.reset * &(1.0 - &step.reset));
        add_outer(&mut g.gru.reset_in, &d_reset_pre, pooled);
        add_outer(&mut g.gru.reset_rec, &d_reset_pre, h_prev);
        g.gru.reset_bias += &d_reset_pre;
        d_pooled += &params.gru.reset_in.t().dot(&d_reset_pre);
        d_h_prev += &params.gru.reset_rec.t().dot(&d_reset_pre);

        // update gate
        let d_update_pre = &d_update * &(&step.update * &(1.0 - &step.update));
        add_outer(&mut g.gru.update_in, &d_update_pre, pooled);
        add_outer(&mut g.gru.update_rec, &d_update_pre, h_prev);
        g.gru.update_bias += &d_update_pre;
        d_pooled += &params.gru.update_in.t().dot(&d_update_pre);
        d_h_prev += &params.gru.update_rec.t().dot(&d_update_pre);

        // group pooling back to the event embeddings
        let events = &seq.events[group_starts[i]..group_starts[i] + trace.event_alphas[i].len()];
        let embeds = &trace.cache.embeds[i];
        let alphas = &trace.event_alphas[i];
        let mut d_embeds: Vec<Array1<f64>> = match trace.mode {
            Mode::NoEventAttn => {
                let w = 1.0 / events.len() as f64;
                embeds.iter().map(|_| &d_pooled * w).collect()
            }
            _ => {
                let d_alphas: Vec<f64> = embeds.iter().map(|v| d_pooled.dot(v)).collect();
                let dot: f64 = alphas.iter().zip(&d_alphas).map(|(a, da)| a * da).sum();
                let tanhs = &trace.cache.attn_tanh[i];
                let mut d_embeds: Vec<Array1<f64>> =
                    alphas.iter().map(|&a| &d_pooled * a).collect();
                for t in 0..events.len() {
                    let d_score_logit = alphas[t] * (d_alphas[t] - dot);
                    g.attn.score.scaled_add(d_score_logit, &tanhs[t]);
                    let d_tanh = &params.attn.score * d_score_logit;
                    let d_pre = &d_tanh * &(1.0 - &(&tanhs[t] * &tanhs[t]));
                    add_outer(&mut g.attn.event_proj, &d_pre, &embeds[t]);
                    add_outer(&mut g.attn.state_proj, &d_pre, h_prev);
                    g.attn.bias += &d_pre;
                    d_embeds[t] += &params.attn.event_proj.t().dot(&d_pre);
                    d_h_prev += &params.attn.state_proj.t().dot(&d_pre);
                }
                d_embeds
            }
        };

        // embedding sums: credit each touched table row
        for (e, d_v) in events.iter().zip(d_embeds.drain(..)) {
            let type_row = if e.type_id < params.tables.type_table.nrows() {
                e.type_id
            } else {
                OOV_INDEX
            };
            add_row(&mut g.type_rows, type_row, &d_v, 1.0);
            for a in &e.cat_attrs {
                let row = if a.value_id < params.tables.cat_table.nrows() {
                    a.value_id
                } else {
                    OOV_INDEX
                };
                add_row(&mut g.cat_rows, row, &d_v, 1.0);
            }
            for a in &e.num_attrs {
                if a.slot < params.tables.num_directions.nrows() {
                    let scale = z.standardize(a.slot, a.value);
                    if scale != 0.0 {
                        add_row(&mut g.num_rows, a.slot, &d_v, scale);
                    }
                }
            }
        }

        d_h_carry = d_h_prev;
    }

    g
}

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct RowMoments {
    m: Array1<f64>,
    v: Array1<f64>,
    step: u64,
}

/// Adam moment estimates. Embedding rows keep their own moments and step
/// counts and are updated only when a batch touches them.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: u64,
    dense_m: Vec<Vec<f64>>,
    dense_v: Vec<Vec<f64>>,
    type_rows: BTreeMap<usize, RowMoments>,
    cat_rows: BTreeMap<usize, RowMoments>,
    num_rows: BTreeMap<usize, RowMoments>,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let sizes: Vec<usize> = dense_slices(
            &params.attn,
            &params.gru,
            &params.temporal_score,
            &params.out_weight,
        )
        .iter()
        .map(|s| s.len())
        .chain(std::iter::once(1)) // out_bias
        .collect();
        AdamState {
            step: 0,
            dense_m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            dense_v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            type_rows: BTreeMap::new(),
            cat_rows: BTreeMap::new(),
            num_rows: BTreeMap::new(),
        }
    }
}

fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    cfg: &AdamConfig,
) {
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    for j in 0..param.len() {
        m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
        v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
        let m_hat = m[j] / bc1;
        let v_hat = v[j] / bc2;
        param[j] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// One Adam step with bias correction. Dense tensors always update; sparse
/// embedding rows update only when the batch touched them, using per-row
/// step counts for the bias correction.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &AdamConfig,
) {
    state.step += 1;
    let grad_slices = dense_slices(
        &grads.attn,
        &grads.gru,
        &grads.temporal_score,
        &grads.out_weight,
    );
    let bias_grad = [grads.out_bias];
    {
        let mut param_slices = dense_slices_mut(params);
        for (i, p) in param_slices.iter_mut().enumerate() {
            adam_update(
                p,
                grad_slices[i],
                &mut state.dense_m[i],
                &mut state.dense_v[i],
                state.step,
                cfg,
            );
        }
    }
    let last = state.dense_m.len() - 1;
    let mut bias = [params.out_bias];
    adam_update(
        &mut bias,
        &bias_grad,
        &mut state.dense_m[last],
        &mut state.dense_v[last],
        state.step,
        cfg,
    );
    params.out_bias = bias[0];

    let n = params.dims.n;
    let tables = [
        (
            &mut params.tables.type_table,
            &grads.type_rows,
            &mut state.type_rows,
        ),
        (
            &mut params.tables.cat_table,
            &grads.cat_rows,
            &mut state.cat_rows,
        ),
        (
            &mut params.tables.num_directions,
            &grads.num_rows,
            &mut state.num_rows,
        ),
    ];
    for (table, rows, moments) in tables {
        for (&row, grad) in rows {
            let rm = moments.entry(row).or_insert_with(|| RowMoments {
                m: Array1::zeros(n),
                v: Array1::zeros(n),
                step: 0,
            });
            rm.step += 1;
            let mut slot = table.row_mut(row);
            adam_update(
                slot.as_slice_mut().unwrap(),
                grad.as_slice().unwrap(),
                rm.m.as_slice_mut().unwrap(),
                rm.v.as_slice_mut().unwrap(),
                rm.step,
                cfg,
            );
        }
    }
}

/// Everything that fixes a training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dims: Dims,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    /// Epochs without a validation AUC improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub mode: Mode,
    pub segmentation: SegmentationChoice,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dims: Dims::default(),
            batch_size: 32,
            adam: AdamConfig::default(),
            max_epochs: 50,
            patience: 5,
            seed: 42,
            mode: Mode::Full,
            segmentation: SegmentationChoice::Adaptive { m: 32 },
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss_sum: f64,
    pub train_loss_mean: f64,
    pub val_auc: f64,
    pub wall_ms: u64,
}

/// Patience bookkeeping for early stopping on a maximized metric.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        assert!(patience >= 1);
        EarlyStopper {
            patience,
            best: f64::NEG_INFINITY,
            best_epoch: 0,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, value: f64) -> StopDecision {
        if value > self.best {
            self.best = value;
            self.best_epoch = epoch;
            self.since_best = 0;
            StopDecision::Improved
        } else {
            self.since_best += 1;
            if self.since_best >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Scores a set of sequences with a trained model.
pub fn score_sequences(
    params: &ModelParams,
    z: &ZStats,
    mode: Mode,
    segmentation: SegmentationChoice,
    sequences: &[&EventSequence],
) -> ScoredLabels {
    let mut scores = Vec::with_capacity(sequences.len());
    let mut labels = Vec::with_capacity(sequences.len());
    for seq in sequences {
        let seg = segmentation.apply(&seq.times());
        let trace = forward(seq, params, z, mode, &seg);
        scores.push(trace.prediction);
        labels.push(seq.label);
    }
    ScoredLabels::new(scores, labels)
}

/// Trains on the cohort's train split with early stopping on validation AUC.
/// Returns the parameters of the best validation epoch and the full log.
pub fn train(
    dataset: &CohortDataset,
    cfg: &TrainConfig,
) -> Result<(ModelParams, Vec<EpochLog>), TrainError> {
    if dataset.train.is_empty() {
        return Err(TrainError::EmptySplit { split: "train" });
    }
    if dataset.val.is_empty() {
        return Err(TrainError::EmptySplit { split: "validation" });
    }

    let segs: Vec<Segmentation> = dataset
        .sequences
        .iter()
        .map(|s| cfg.segmentation.apply(&s.times()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ModelParams::init(cfg.dims, &dataset.vocab, &mut rng);
    let mut adam = AdamState::new(&params);
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best: Option<(ModelParams, usize)> = None;
    let mut logs = Vec::new();

    let mut order = dataset.train.clone();
    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut batch_grads = Gradients::zeros_like(&params);
            let mut batch_loss = 0.0;
            for &idx in batch {
                let seq = &dataset.sequences[idx];
                let trace = forward(seq, &params, &dataset.z_stats, cfg.mode, &segs[idx]);
                batch_loss += loss(trace.prediction, seq.label);
                let g = backward(&trace, seq, &params, &dataset.z_stats, seq.label);
                batch_grads.accumulate(&g);
            }
            if !batch_loss.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    batch: batch_no,
                });
            }
            loss_sum += batch_loss;
            adam_step(&mut params, &batch_grads, &mut adam, &cfg.adam);
        }

        let val_seqs: Vec<&EventSequence> =
            dataset.val.iter().map(|&i| &dataset.sequences[i]).collect();
        let mut scores = Vec::with_capacity(val_seqs.len());
        let mut labels = Vec::with_capacity(val_seqs.len());
        for (&i, seq) in dataset.val.iter().zip(&val_seqs) {
            let trace = forward(seq, &params, &dataset.z_stats, cfg.mode, &segs[i]);
            scores.push(trace.prediction);
            labels.push(seq.label);
        }
        let val_auc = roc_auc(&ScoredLabels::new(scores, labels))
            .map_err(|e| TrainError::DegenerateValidation(e.to_string()))?;

        logs.push(EpochLog {
            epoch,
            train_loss_sum: loss_sum,
            train_loss_mean: loss_sum / dataset.train.len() as f64,
            val_auc,
            wall_ms: started.elapsed().as_millis() as u64,
        });

        match stopper.observe(epoch, val_auc) {
            StopDecision::Improved => best = Some((params.clone(), epoch)),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }

    let (best_params, _) = best.expect("at least one epoch ran");
    Ok((best_params, logs))
}

/// Central finite-difference gradient of the per-sample loss with respect to
/// every parameter coordinate. Gradient-checking oracle; O(params) forwards.
pub fn finite_difference_grad(
    params: &ModelParams,
    seq: &EventSequence,
    z: &ZStats,
    mode: Mode,
    seg: &Segmentation,
    label: u8,
    step: f64,
) -> Vec<f64> {
    let flat = params.flatten();
    let mut probe = params.clone();
    let mut grad = vec![0.0; flat.len()];
    let mut point = flat.clone();
    for i in 0..flat.len() {
        point[i] = flat[i] + step;
        probe.assign_flat(&point);
        let up = loss(forward(seq, &probe, z, mode, seg).prediction, label);
        point[i] = flat[i] - step;
        probe.assign_flat(&point);
        let down = loss(forward(seq, &probe, z, mode, seg).prediction, label);
        point[i] = flat[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    probe.assign_flat(&point);
    grad
}

/// Relative error with a floor that keeps finite-difference noise on
/// near-zero coordinates from dominating.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
