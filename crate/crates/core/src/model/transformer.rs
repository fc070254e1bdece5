use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, Precision, ScoredOutput, Seq2Seq};
use crate::autograd::{Matrix, Scalar, Tape, Var};
use crate::error::{Error, Result};
use crate::text::{BOS_ID, EOS_ID, PAD_ID};

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub(crate) struct Param<T> {
    pub name: String,
    pub value: Matrix<T>,
}

#[derive(Debug, Clone)]
struct AttnIdx {
    q: usize,
    k: usize,
    v: usize,
    o: usize,
}

#[derive(Debug, Clone)]
struct NormIdx {
    gamma: usize,
    beta: usize,
}

#[derive(Debug, Clone)]
struct FfnIdx {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

#[derive(Debug, Clone)]
struct EncLayer {
    ln1: NormIdx,
    attn: AttnIdx,
    ln2: NormIdx,
    ffn: FfnIdx,
}

#[derive(Debug, Clone)]
struct DecLayer {
    ln1: NormIdx,
    self_attn: AttnIdx,
    ln2: NormIdx,
    cross_attn: AttnIdx,
    ln3: NormIdx,
    ffn: FfnIdx,
}

#[derive(Debug, Clone)]
struct Layout {
    /// Token table shared by the encoder, the decoder and the output projection.
    embed: usize,
    enc_pos: usize,
    dec_pos: usize,
    encoder: Vec<EncLayer>,
    enc_norm: NormIdx,
    decoder: Vec<DecLayer>,
    dec_norm: NormIdx,
    head_b: usize,
}

enum Init {
    /// Uniform with the given half-width.
    Uniform(f64),
    Const(f64),
}

struct Builder<'a, T> {
    params: Vec<Param<T>>,
    rng: &'a mut ChaCha8Rng,
}

impl<T: Scalar> Builder<'_, T> {
    fn add(&mut self, name: String, rows: usize, cols: usize, init: Init) -> usize {
        let data = (0..rows * cols)
            .map(|_| match init {
                Init::Uniform(a) => T::from_f64(self.rng.gen_range(-a..a)),
                Init::Const(c) => T::from_f64(c),
            })
            .collect();
        self.params.push(Param {
            name,
            value: Matrix::from_vec(rows, cols, data),
        });
        self.params.len() - 1
    }

    fn dense(&mut self, name: String, fan_in: usize, fan_out: usize) -> usize {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        self.add(name, fan_in, fan_out, Init::Uniform(a))
    }

    fn norm(&mut self, prefix: &str, d: usize) -> NormIdx {
        NormIdx {
            gamma: self.add(format!("{prefix}.gamma"), 1, d, Init::Const(1.0)),
            beta: self.add(format!("{prefix}.beta"), 1, d, Init::Const(0.0)),
        }
    }

    fn attn(&mut self, prefix: &str, d: usize) -> AttnIdx {
        AttnIdx {
            q: self.dense(format!("{prefix}.q"), d, d),
            k: self.dense(format!("{prefix}.k"), d, d),
            v: self.dense(format!("{prefix}.v"), d, d),
            o: self.dense(format!("{prefix}.o"), d, d),
        }
    }

    fn ffn(&mut self, prefix: &str, d: usize, f: usize) -> FfnIdx {
        FfnIdx {
            w1: self.dense(format!("{prefix}.w1"), d, f),
            b1: self.add(format!("{prefix}.b1"), 1, f, Init::Const(0.0)),
            w2: self.dense(format!("{prefix}.w2"), f, d),
            b2: self.add(format!("{prefix}.b2"), 1, d, Init::Const(0.0)),
        }
    }
}

fn build_layout<T: Scalar>(config: &ModelConfig, rng: &mut ChaCha8Rng) -> (Vec<Param<T>>, Layout) {
    let (d, f, v, l) = (config.d_model, config.ffn_dim, config.vocab_size, config.max_len);
    let mut b = Builder {
        params: Vec::new(),
        rng,
    };
    let emb = 1.0 / (d as f64).sqrt();
    let embed = b.add("shared.embed".into(), v, d, Init::Uniform(emb));
    let enc_pos = b.add("encoder.pos".into(), l, d, Init::Uniform(emb));
    let dec_pos = b.add("decoder.pos".into(), l, d, Init::Uniform(emb));
    let encoder = (0..config.n_layers)
        .map(|i| {
            let p = format!("encoder.layers.{i}");
            EncLayer {
                ln1: b.norm(&format!("{p}.ln1"), d),
                attn: b.attn(&format!("{p}.self_attn"), d),
                ln2: b.norm(&format!("{p}.ln2"), d),
                ffn: b.ffn(&format!("{p}.ffn"), d, f),
            }
        })
        .collect();
    let enc_norm = b.norm("encoder.ln_final", d);
    let decoder = (0..config.n_layers)
        .map(|i| {
            let p = format!("decoder.layers.{i}");
            DecLayer {
                ln1: b.norm(&format!("{p}.ln1"), d),
                self_attn: b.attn(&format!("{p}.self_attn"), d),
                ln2: b.norm(&format!("{p}.ln2"), d),
                cross_attn: b.attn(&format!("{p}.cross_attn"), d),
                ln3: b.norm(&format!("{p}.ln3"), d),
                ffn: b.ffn(&format!("{p}.ffn"), d, f),
            }
        })
        .collect();
    let dec_norm = b.norm("decoder.ln_final", d);
    let head_b = b.add("lm_head.bias".into(), 1, v, Init::Const(0.0));
    let layout = Layout {
        embed,
        enc_pos,
        dec_pos,
        encoder,
        enc_norm,
        decoder,
        dec_norm,
        head_b,
    };
    (b.params, layout)
}

/// Inverted dropout on activations; inert without an RNG.
struct Dropout {
    p: f64,
    rng: Option<ChaCha8Rng>,
}

impl Dropout {
    fn off() -> Self {
        Self { p: 0.0, rng: None }
    }

    fn apply<T: Scalar>(&mut self, tape: &mut Tape<T>, x: Var) -> Var {
        let Some(rng) = self.rng.as_mut().filter(|_| self.p > 0.0) else {
            return x;
        };
        let keep = T::from_f64(1.0 / (1.0 - self.p));
        let mask = (0..tape.value(x).data.len())
            .map(|_| if rng.gen_bool(self.p) { T::zero() } else { keep })
            .collect();
        tape.mask(x, mask)
    }
}

/// Pre-norm encoder-decoder transformer with learned positions and GELU
/// feed-forward blocks. `T` selects the arithmetic precision.
#[derive(Debug, Clone)]
pub struct Transformer<T> {
    config: ModelConfig,
    params: Vec<Param<T>>,
    layout: Layout,
    noise_seed: Option<u64>,
}

impl<T: Scalar> Transformer<T> {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let (params, layout) = build_layout(&config, &mut rng);
        Ok(Self {
            config,
            params,
            layout,
            noise_seed: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// `(name, rows, cols, values)` for every parameter tensor, in flattening order.
    pub fn named_parameters(&self) -> impl Iterator<Item = (&str, usize, usize, Vec<f64>)> + '_ {
        self.params.iter().map(|p| {
            (
                p.name.as_str(),
                p.value.rows,
                p.value.cols,
                p.value.data.iter().map(|x| x.as_f64()).collect(),
            )
        })
    }

    /// Replaces parameters by name; every tensor must be supplied with its exact shape.
    pub fn load_named(&mut self, entries: &[(String, usize, usize, Vec<f64>)]) -> Result<()> {
        if entries.len() != self.params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter tensors, found {}",
                self.params.len(),
                entries.len()
            )));
        }
        for p in &mut self.params {
            let (_, rows, cols, values) = entries
                .iter()
                .find(|e| e.0 == p.name)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter `{}`", p.name)))?;
            if (*rows, *cols) != (p.value.rows, p.value.cols) || values.len() != rows * cols {
                return Err(Error::Checkpoint(format!(
                    "parameter `{}` has shape {rows}×{cols}, expected {}×{}",
                    p.name, p.value.rows, p.value.cols
                )));
            }
            p.value.data = values.iter().map(|&x| T::from_f64(x)).collect();
        }
        Ok(())
    }

    fn check_tokens(&self, seq: &[usize]) -> Result<()> {
        if seq.len() > self.config.max_len {
            return Err(Error::Length {
                len: seq.len(),
                max: self.config.max_len,
            });
        }
        if let Some(&bad) = seq.iter().find(|&&t| t >= self.config.vocab_size) {
            return Err(Error::Contract(format!(
                "token id {bad} outside vocabulary of size {}",
                self.config.vocab_size
            )));
        }
        Ok(())
    }

    fn check_target(&self, target: &[usize]) -> Result<()> {
        if target.len() < 2 || target[0] != BOS_ID {
            return Err(Error::Contract(
                "target must be framed as BOS … EOS".to_string(),
            ));
        }
        self.check_tokens(target)
    }

    fn load(&self, tape: &mut Tape<T>) -> Vec<Var> {
        self.params.iter().map(|p| tape.leaf(p.value.clone())).collect()
    }

    fn norm(&self, tape: &mut Tape<T>, p: &[Var], x: Var, idx: &NormIdx) -> Var {
        tape.layer_norm(x, p[idx.gamma], p[idx.beta], T::from_f64(LN_EPS))
    }

    fn attention(
        &self,
        tape: &mut Tape<T>,
        p: &[Var],
        xq: Var,
        xkv: Var,
        idx: &AttnIdx,
        causal: bool,
    ) -> Var {
        let heads = self.config.n_heads;
        let dh = self.config.d_model / heads;
        let q = tape.matmul(xq, p[idx.q]);
        let q = tape.scale(q, T::from_f64(1.0 / (dh as f64).sqrt()));
        let k = tape.matmul(xkv, p[idx.k]);
        let v = tape.matmul(xkv, p[idx.v]);
        let merged = if heads == 1 {
            let s = tape.matmul_t(q, k);
            let a = tape.softmax(s, causal);
            tape.matmul(a, v)
        } else {
            let outs: Vec<Var> = (0..heads)
                .map(|h| {
                    let qh = tape.slice_cols(q, h * dh, dh);
                    let kh = tape.slice_cols(k, h * dh, dh);
                    let vh = tape.slice_cols(v, h * dh, dh);
                    let s = tape.matmul_t(qh, kh);
                    let a = tape.softmax(s, causal);
                    tape.matmul(a, vh)
                })
                .collect();
            tape.concat_cols(&outs)
        };
        tape.matmul(merged, p[idx.o])
    }

    fn ffn(&self, tape: &mut Tape<T>, p: &[Var], x: Var, idx: &FfnIdx) -> Var {
        let h = tape.matmul(x, p[idx.w1]);
        let h = tape.add_row(h, p[idx.b1]);
        let h = tape.gelu(h);
        let h = tape.matmul(h, p[idx.w2]);
        tape.add_row(h, p[idx.b2])
    }

    fn embed(&self, tape: &mut Tape<T>, table: Var, pos: Var, ids: &[usize]) -> Var {
        let e = tape.gather(table, ids);
        let positions: Vec<usize> = (0..ids.len()).collect();
        let pe = tape.gather(pos, &positions);
        tape.add(e, pe)
    }

    fn encode(&self, tape: &mut Tape<T>, p: &[Var], source: &[usize], drop: &mut Dropout) -> Var {
        let lay = &self.layout;
        let x = self.embed(tape, p[lay.embed], p[lay.enc_pos], source);
        let mut x = drop.apply(tape, x);
        for layer in &lay.encoder {
            let h = self.norm(tape, p, x, &layer.ln1);
            let a = self.attention(tape, p, h, h, &layer.attn, false);
            let a = drop.apply(tape, a);
            x = tape.add(x, a);
            let h = self.norm(tape, p, x, &layer.ln2);
            let f = self.ffn(tape, p, h, &layer.ffn);
            let f = drop.apply(tape, f);
            x = tape.add(x, f);
        }
        self.norm(tape, p, x, &lay.enc_norm)
    }

    /// Log-probabilities for the token after each position of `prefix`.
    fn decode(&self, tape: &mut Tape<T>, p: &[Var], memory: Var, prefix: &[usize], drop: &mut Dropout) -> Var {
        let lay = &self.layout;
        let y = self.embed(tape, p[lay.embed], p[lay.dec_pos], prefix);
        let mut y = drop.apply(tape, y);
        for layer in &lay.decoder {
            let h = self.norm(tape, p, y, &layer.ln1);
            let a = self.attention(tape, p, h, h, &layer.self_attn, true);
            let a = drop.apply(tape, a);
            y = tape.add(y, a);
            let h = self.norm(tape, p, y, &layer.ln2);
            let c = self.attention(tape, p, h, memory, &layer.cross_attn, false);
            let c = drop.apply(tape, c);
            y = tape.add(y, c);
            let h = self.norm(tape, p, y, &layer.ln3);
            let f = self.ffn(tape, p, h, &layer.ffn);
            let f = drop.apply(tape, f);
            y = tape.add(y, f);
        }
        let y = self.norm(tape, p, y, &lay.dec_norm);
        let logits = tape.matmul_t(y, p[lay.embed]);
        let logits = tape.add_row(logits, p[lay.head_b]);
        tape.log_softmax(logits)
    }

    fn check_source(&self, source: &[usize]) -> Result<()> {
        if source.is_empty() {
            return Err(Error::Contract("source must not be empty".to_string()));
        }
        self.check_tokens(source)
    }
}

impl<T: Scalar> Seq2Seq for Transformer<T> {
    fn precision(&self) -> Precision {
        if std::mem::size_of::<T>() == 4 {
            Precision::F32
        } else {
            Precision::F64
        }
    }

    fn max_len(&self) -> usize {
        self.config.max_len
    }

    fn vocab_size(&self) -> usize {
        self.config.vocab_size
    }

    fn forward(&self, source: &[usize], target: &[usize]) -> Result<ScoredOutput> {
        self.check_source(source)?;
        self.check_target(target)?;
        let mut tape = Tape::new();
        let p = self.load(&mut tape);
        let mut drop = Dropout::off();
        let memory = self.encode(&mut tape, &p, source, &mut drop);
        let logp = self.decode(&mut tape, &p, memory, &target[..target.len() - 1], &mut drop);
        Ok(ScoredOutput {
            vocab_size: self.config.vocab_size,
            logprobs: tape.value(logp).data.iter().map(|x| x.as_f64()).collect(),
            target_tokens: target[1..].to_vec(),
        })
    }

    fn generate(&self, source: &[usize], max_len: usize) -> Result<Vec<usize>> {
        self.check_source(source)?;
        let limit = max_len.min(self.config.max_len.saturating_sub(1));
        let mut tape = Tape::new();
        let p = self.load(&mut tape);
        let mut drop = Dropout::off();
        let memory = self.encode(&mut tape, &p, source, &mut drop);
        let mut prefix = vec![BOS_ID];
        let mut out = Vec::new();
        while out.len() < limit {
            let logp = self.decode(&mut tape, &p, memory, &prefix, &mut drop);
            let lv = tape.value(logp);
            let last = lv.row(lv.rows - 1);
            let mut best = 0;
            for (i, &v) in last.iter().enumerate() {
                if v > last[best] {
                    best = i;
                }
            }
            if best == EOS_ID {
                break;
            }
            out.push(best);
            prefix.push(best);
        }
        Ok(out)
    }

    fn cross_entropies_with_grad(
        &self,
        source: &[usize],
        targets: &[&[usize]],
        weights: &dyn Fn(&[f64]) -> Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_source(source)?;
        for t in targets {
            self.check_target(t)?;
        }
        let mut tape = Tape::new();
        let p = self.load(&mut tape);
        let mut drop = Dropout {
            p: self.config.dropout,
            rng: self.noise_seed.map(ChaCha8Rng::seed_from_u64),
        };
        let memory = self.encode(&mut tape, &p, source, &mut drop);
        let losses: Vec<Var> = targets
            .iter()
            .map(|t| {
                let logp = self.decode(&mut tape, &p, memory, &t[..t.len() - 1], &mut drop);
                tape.nll(logp, &t[1..], Some(PAD_ID))
            })
            .collect();
        let values: Vec<f64> = losses.iter().map(|&l| tape.scalar(l).as_f64()).collect();
        let w = weights(&values);
        assert_eq!(w.len(), values.len(), "one weight per target");
        let seeds: Vec<(Var, T)> = losses
            .iter()
            .zip(&w)
            .map(|(&l, &wi)| (l, T::from_f64(wi)))
            .collect();
        let grads = tape.backward(&seeds);
        let mut flat = Vec::with_capacity(self.num_parameters());
        for (pv, param) in p.iter().zip(&self.params) {
            match grads.get(*pv) {
                Some(g) => flat.extend(g.data.iter().map(|x| x.as_f64())),
                None => flat.extend(std::iter::repeat_n(0.0, param.value.data.len())),
            }
        }
        Ok((values, flat))
    }

    fn set_noise_seed(&mut self, seed: Option<u64>) {
        self.noise_seed = seed;
    }

    fn num_parameters(&self) -> usize {
        self.params.iter().map(|p| p.value.data.len()).sum()
    }

    fn parameters(&self) -> Vec<f64> {
        self.params
            .iter()
            .flat_map(|p| p.value.data.iter().map(|x| x.as_f64()))
            .collect()
    }

    fn set_parameters(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.num_parameters(), "parameter count mismatch");
        let mut it = values.iter();
        for p in &mut self.params {
            for x in &mut p.value.data {
                *x = T::from_f64(*it.next().unwrap());
            }
        }
    }

    fn update_parameters(&mut self, delta: &[f64]) {
        assert_eq!(delta.len(), self.num_parameters(), "parameter count mismatch");
        let mut it = delta.iter();
        for p in &mut self.params {
            for x in &mut p.value.data {
                *x += T::from_f64(*it.next().unwrap());
            }
        }
    }
}
