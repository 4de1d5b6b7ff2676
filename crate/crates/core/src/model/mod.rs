//! The reconstruction network: convolutional image encoder, 3-D transpose
//! convolution voxel decoder, single-skip refiner, domain-classifier head
//! behind a gradient reversal layer, and the voxel-classification head
//! (fully connected widths 100 and 20).
//!
//! Parameters live outside any graph in a [`ModelParams`] store; each forward
//! pass binds them as graph leaves, so a training step is: bind, forward,
//! backward, read leaf gradients, update the store.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Graph, Mode, Scalar, TensorId};

/// Channel count of the refiner's internal stage.
const REFINER_CHANNELS: usize = 8;
/// Hidden widths of the voxel-classification head.
const CLASS_HEAD_WIDTHS: (usize, usize) = (100, 20);
/// Hidden width of the domain-classifier head.
const DOMAIN_HEAD_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub image_size: usize,
    pub image_channels: usize,
    pub voxel_size: usize,
    pub num_classes: usize,
    pub latent_dim: usize,
    pub refiner_enabled: bool,
    pub channel_widths: Vec<usize>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            image_size: 32,
            image_channels: 3,
            voxel_size: 16,
            num_classes: 6,
            latent_dim: 128,
            refiner_enabled: true,
            channel_widths: vec![16, 32, 64, 128],
        }
    }
}

fn is_pow2(v: usize) -> bool {
    v != 0 && v & (v - 1) == 0
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if !is_pow2(self.image_size) || self.image_size < 8 {
            return Err(Error::invalid(
                "network_config",
                format!("image_size must be a power of two >= 8, got {}", self.image_size),
            ));
        }
        if !is_pow2(self.voxel_size) || self.voxel_size < 8 {
            return Err(Error::invalid(
                "network_config",
                format!("voxel_size must be a power of two >= 8, got {}", self.voxel_size),
            ));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("network_config", "num_classes must be >= 2"));
        }
        if self.latent_dim < 8 {
            return Err(Error::invalid("network_config", "latent_dim must be >= 8"));
        }
        if self.image_channels == 0 || self.channel_widths.is_empty() {
            return Err(Error::invalid(
                "network_config",
                "image_channels and channel_widths must be non-empty",
            ));
        }
        Ok(())
    }

    /// Stride-2 encoder stages from `image_size` down to 4x4.
    pub fn encoder_stages(&self) -> usize {
        (self.image_size / 4).trailing_zeros() as usize
    }

    /// Stride-2 decoder stages from the 2^3 seed up to `voxel_size`^3.
    pub fn decoder_stages(&self) -> usize {
        (self.voxel_size / 2).trailing_zeros() as usize
    }

    fn width(&self, stage: usize) -> usize {
        self.channel_widths[stage.min(self.channel_widths.len() - 1)]
    }

    /// Encoder channel count after the last stage.
    fn encoder_out_channels(&self) -> usize {
        self.width(self.encoder_stages() - 1)
    }

    /// Decoder channel plan: seed channels first, 1 output channel last.
    fn decoder_channels(&self) -> Vec<usize> {
        let stages = self.decoder_stages();
        let mut chans: Vec<usize> = (0..stages).rev().map(|j| self.width(j)).collect();
        chans.push(1);
        chans
    }
}

/// Owning submodule of a parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Submodule {
    Encoder,
    Decoder,
    Refiner,
    DomainHead,
    ClassHead,
}

impl Submodule {
    pub fn prefix(self) -> &'static str {
        match self {
            Submodule::Encoder => "encoder",
            Submodule::Decoder => "decoder",
            Submodule::Refiner => "refiner",
            Submodule::DomainHead => "domain_head",
            Submodule::ClassHead => "class_head",
        }
    }

    pub(crate) fn from_name(name: &str) -> Result<Submodule> {
        let prefix = name.split('.').next().unwrap_or("");
        match prefix {
            "encoder" => Ok(Submodule::Encoder),
            "decoder" => Ok(Submodule::Decoder),
            "refiner" => Ok(Submodule::Refiner),
            "domain_head" => Ok(Submodule::DomainHead),
            "class_head" => Ok(Submodule::ClassHead),
            _ => Err(Error::Incompatible(format!(
                "tensor `{name}` has no known submodule prefix"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Param<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
    pub submodule: Submodule,
    /// Updated by the optimizer; false for batchnorm running statistics.
    pub trainable: bool,
}

/// Named parameter store with deterministic (sorted) iteration order.
#[derive(Debug, Clone, Default)]
pub struct ModelParams<T: Scalar> {
    map: BTreeMap<String, Param<T>>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn insert(&mut self, name: &str, param: Param<T>) -> Result<()> {
        if self.map.contains_key(name) {
            return Err(Error::invalid(
                "model_params",
                format!("duplicate parameter name `{name}`"),
            ));
        }
        self.map.insert(name.to_string(), param);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Param<T>> {
        self.map
            .get(name)
            .ok_or_else(|| Error::invalid("model_params", format!("unknown parameter `{name}`")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Param<T>> {
        self.map
            .get_mut(name)
            .ok_or_else(|| Error::invalid("model_params", format!("unknown parameter `{name}`")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Param<T>)> {
        self.map.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Param<T>)> {
        self.map.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Total number of scalars across all tensors.
    pub fn scalar_count(&self) -> usize {
        self.map.values().map(|p| p.data.len()).sum()
    }
}

/// Everything one forward pass produces.
#[derive(Debug, Clone, Copy)]
pub struct ForwardOutputs {
    /// Latent feature batch [n, d]; the attachment point of all DA losses.
    pub latent: TensorId,
    /// Decoder occupancy probabilities [n, 1, V, V, V].
    pub voxel_raw: TensorId,
    /// Refined occupancy probabilities [n, 1, V, V, V].
    pub voxel_refined: TensorId,
    /// Domain-classifier logits [n, 1].
    pub domain_logits: TensorId,
    /// Class logits [n, K].
    pub class_logits: TensorId,
}

// ------------------------------------------------------------- init ----

fn fan_in(shape: &[usize], kind: LayerKind) -> usize {
    match kind {
        LayerKind::Dense => shape[0],
        // conv [F,C,k...]: receptive field per output element
        LayerKind::Conv => shape[1] * shape[2..].iter().product::<usize>(),
        // transpose conv [C,F,k...]: input channels times kernel volume
        LayerKind::ConvTranspose => shape[0] * shape[2..].iter().product::<usize>(),
    }
}

#[derive(Clone, Copy)]
enum LayerKind {
    Dense,
    Conv,
    ConvTranspose,
}

struct ParamBuilder<T: Scalar> {
    params: ModelParams<T>,
    rng: ChaCha8Rng,
}

impl<T: Scalar> ParamBuilder<T> {
    fn weight(&mut self, sub: Submodule, name: &str, shape: &[usize], kind: LayerKind) -> Result<()> {
        let bound = (6.0 / fan_in(shape, kind) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data: Vec<T> = (0..n)
            .map(|_| T::from_f64(self.rng.random_range(-bound..bound)))
            .collect();
        self.params.insert(
            name,
            Param {
                shape: shape.to_vec(),
                data,
                submodule: sub,
                trainable: true,
            },
        )
    }

    fn bias(&mut self, sub: Submodule, name: &str, len: usize) -> Result<()> {
        self.params.insert(
            name,
            Param {
                shape: vec![len],
                data: vec![T::zero(); len],
                submodule: sub,
                trainable: true,
            },
        )
    }

    fn batchnorm(&mut self, sub: Submodule, prefix: &str, c: usize) -> Result<()> {
        let fills: [(&str, T, bool); 4] = [
            ("gamma", T::one(), true),
            ("beta", T::zero(), true),
            ("running_mean", T::zero(), false),
            ("running_var", T::one(), false),
        ];
        for (suffix, fill, trainable) in fills {
            self.params.insert(
                &format!("{prefix}.{suffix}"),
                Param {
                    shape: vec![c],
                    data: vec![fill; c],
                    submodule: sub,
                    trainable,
                },
            )?;
        }
        Ok(())
    }
}

/// Seeded fan-in-scaled uniform initialization of every layer.
pub fn init_params<T: Scalar>(config: &NetworkConfig, seed: u64) -> Result<ModelParams<T>> {
    config.validate()?;
    let mut b = ParamBuilder {
        params: ModelParams::default(),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let d = config.latent_dim;

    // Encoder: stride-2 conv stages down to 4x4, then dense to the latent.
    let mut c_in = config.image_channels;
    for i in 0..config.encoder_stages() {
        let c_out = config.width(i);
        b.weight(
            Submodule::Encoder,
            &format!("encoder.conv{i}.weight"),
            &[c_out, c_in, 3, 3],
            LayerKind::Conv,
        )?;
        b.batchnorm(Submodule::Encoder, &format!("encoder.bn{i}"), c_out)?;
        c_in = c_out;
    }
    let enc_flat = config.encoder_out_channels() * 16;
    b.weight(Submodule::Encoder, "encoder.fc.weight", &[enc_flat, d], LayerKind::Dense)?;
    b.bias(Submodule::Encoder, "encoder.fc.bias", d)?;

    // Decoder: dense seed to 2^3, transpose-conv stages up to V^3.
    let chans = config.decoder_channels();
    b.weight(
        Submodule::Decoder,
        "decoder.fc.weight",
        &[d, chans[0] * 8],
        LayerKind::Dense,
    )?;
    b.bias(Submodule::Decoder, "decoder.fc.bias", chans[0] * 8)?;
    for j in 0..config.decoder_stages() {
        b.weight(
            Submodule::Decoder,
            &format!("decoder.deconv{j}.weight"),
            &[chans[j], chans[j + 1], 4, 4, 4],
            LayerKind::ConvTranspose,
        )?;
        if j + 1 < config.decoder_stages() {
            b.batchnorm(Submodule::Decoder, &format!("decoder.bn{j}"), chans[j + 1])?;
        }
    }
    b.bias(Submodule::Decoder, "decoder.out.bias", 1)?;

    // Refiner: one down stage, one up stage, skip concat, output conv.
    if config.refiner_enabled {
        let rc = REFINER_CHANNELS;
        b.weight(
            Submodule::Refiner,
            "refiner.down.weight",
            &[rc, 1, 4, 4, 4],
            LayerKind::Conv,
        )?;
        b.batchnorm(Submodule::Refiner, "refiner.bn_down", rc)?;
        b.weight(
            Submodule::Refiner,
            "refiner.up.weight",
            &[rc, rc, 4, 4, 4],
            LayerKind::ConvTranspose,
        )?;
        b.batchnorm(Submodule::Refiner, "refiner.bn_up", rc)?;
        b.weight(
            Submodule::Refiner,
            "refiner.out.weight",
            &[1, rc + 1, 3, 3, 3],
            LayerKind::Conv,
        )?;
        b.bias(Submodule::Refiner, "refiner.out.bias", 1)?;
    }

    // Domain head behind the GRL.
    b.weight(
        Submodule::DomainHead,
        "domain_head.fc1.weight",
        &[d, DOMAIN_HEAD_WIDTH],
        LayerKind::Dense,
    )?;
    b.bias(Submodule::DomainHead, "domain_head.fc1.bias", DOMAIN_HEAD_WIDTH)?;
    b.weight(
        Submodule::DomainHead,
        "domain_head.fc2.weight",
        &[DOMAIN_HEAD_WIDTH, 1],
        LayerKind::Dense,
    )?;
    b.bias(Submodule::DomainHead, "domain_head.fc2.bias", 1)?;

    // Voxel classification head on the flattened grid.
    let v3 = config.voxel_size.pow(3);
    let (h1, h2) = CLASS_HEAD_WIDTHS;
    b.weight(Submodule::ClassHead, "class_head.fc1.weight", &[v3, h1], LayerKind::Dense)?;
    b.bias(Submodule::ClassHead, "class_head.fc1.bias", h1)?;
    b.weight(Submodule::ClassHead, "class_head.fc2.weight", &[h1, h2], LayerKind::Dense)?;
    b.bias(Submodule::ClassHead, "class_head.fc2.bias", h2)?;
    b.weight(
        Submodule::ClassHead,
        "class_head.fc3.weight",
        &[h2, config.num_classes],
        LayerKind::Dense,
    )?;
    b.bias(Submodule::ClassHead, "class_head.fc3.bias", config.num_classes)?;

    Ok(b.params)
}

// ---------------------------------------------------------- forward ----

/// One forward pass over a parameter store: binds each parameter as a graph
/// leaf exactly once and remembers the leaf ids, so callers can read
/// per-parameter gradients after backward.
struct Ctx<'p, T: Scalar> {
    params: &'p mut ModelParams<T>,
    mode: Mode,
    ids: BTreeMap<String, TensorId>,
}

impl<'p, T: Scalar> Ctx<'p, T> {
    fn new(params: &'p mut ModelParams<T>, mode: Mode) -> Self {
        Ctx {
            params,
            mode,
            ids: BTreeMap::new(),
        }
    }

    fn bind(&mut self, g: &mut Graph<T>, name: &str) -> Result<TensorId> {
        if let Some(&id) = self.ids.get(name) {
            return Ok(id);
        }
        let p = self.params.get(name)?;
        let id = g.leaf(
            p.data.clone(),
            &p.shape,
            self.mode == Mode::Train && p.trainable,
        )?;
        self.ids.insert(name.to_string(), id);
        Ok(id)
    }

    /// Batchnorm with write-back of the running statistics in train mode.
    fn bn(&mut self, g: &mut Graph<T>, prefix: &str, x: TensorId) -> Result<TensorId> {
        let gamma = self.bind(g, &format!("{prefix}.gamma"))?;
        let beta = self.bind(g, &format!("{prefix}.beta"))?;
        let mut rm = self
            .params
            .get(&format!("{prefix}.running_mean"))?
            .data
            .clone();
        let mut rv = self
            .params
            .get(&format!("{prefix}.running_var"))?
            .data
            .clone();
        let y = g.batchnorm(x, gamma, beta, self.mode, &mut rm, &mut rv)?;
        if self.mode == Mode::Train {
            self.params.get_mut(&format!("{prefix}.running_mean"))?.data = rm;
            self.params.get_mut(&format!("{prefix}.running_var"))?.data = rv;
        }
        Ok(y)
    }

    fn dense(&mut self, g: &mut Graph<T>, prefix: &str, x: TensorId) -> Result<TensorId> {
        let w = self.bind(g, &format!("{prefix}.weight"))?;
        let b = self.bind(g, &format!("{prefix}.bias"))?;
        let h = g.matmul(x, w)?;
        g.add_row_bias(h, b)
    }
}

fn encode_with<T: Scalar>(
    g: &mut Graph<T>,
    ctx: &mut Ctx<T>,
    config: &NetworkConfig,
    images: TensorId,
) -> Result<TensorId> {
    let shape = g.shape(images).to_vec();
    let want = [config.image_channels, config.image_size, config.image_size];
    if shape.len() != 4 || shape[1..] != want {
        return Err(Error::invalid(
            "encode",
            format!("expected [n, {}, {}, {}], got {shape:?}", want[0], want[1], want[2]),
        ));
    }
    let n = shape[0];
    let mut x = images;
    for i in 0..config.encoder_stages() {
        let w = ctx.bind(g, &format!("encoder.conv{i}.weight"))?;
        x = g.conv2d(x, w, 2, 1)?;
        x = ctx.bn(g, &format!("encoder.bn{i}"), x)?;
        x = g.elu(x);
    }
    let flat = g.reshape(x, &[n, config.encoder_out_channels() * 16])?;
    ctx.dense(g, "encoder.fc", flat)
}

fn decode_with<T: Scalar>(
    g: &mut Graph<T>,
    ctx: &mut Ctx<T>,
    config: &NetworkConfig,
    latent: TensorId,
) -> Result<TensorId> {
    let shape = g.shape(latent).to_vec();
    if shape.len() != 2 || shape[1] != config.latent_dim {
        return Err(Error::invalid(
            "decode",
            format!("expected [n, {}], got {shape:?}", config.latent_dim),
        ));
    }
    let n = shape[0];
    let chans = config.decoder_channels();
    let seed = ctx.dense(g, "decoder.fc", latent)?;
    let mut x = g.reshape(seed, &[n, chans[0], 2, 2, 2])?;
    let stages = config.decoder_stages();
    for j in 0..stages {
        let w = ctx.bind(g, &format!("decoder.deconv{j}.weight"))?;
        x = g.conv_transpose3d(x, w, 2, 1)?;
        if j + 1 < stages {
            x = ctx.bn(g, &format!("decoder.bn{j}"), x)?;
            x = g.relu(x);
        }
    }
    let b = ctx.bind(g, "decoder.out.bias")?;
    let x = g.add_channel_bias(x, b)?;
    Ok(g.sigmoid(x))
}

fn check_voxel_shape<T: Scalar>(
    g: &Graph<T>,
    config: &NetworkConfig,
    voxel: TensorId,
    op: &'static str,
) -> Result<usize> {
    let v = config.voxel_size;
    let shape = g.shape(voxel);
    if shape.len() != 5 || shape[1] != 1 || shape[2] != v || shape[3] != v || shape[4] != v {
        return Err(Error::invalid(
            op,
            format!("expected [n, 1, {v}, {v}, {v}], got {shape:?}"),
        ));
    }
    Ok(shape[0])
}

fn refine_with<T: Scalar>(
    g: &mut Graph<T>,
    ctx: &mut Ctx<T>,
    config: &NetworkConfig,
    voxel: TensorId,
) -> Result<TensorId> {
    check_voxel_shape(g, config, voxel, "refine")?;
    if !config.refiner_enabled {
        return Ok(voxel);
    }
    let w_down = ctx.bind(g, "refiner.down.weight")?;
    let mut down = g.conv3d(voxel, w_down, 2, 1)?;
    down = ctx.bn(g, "refiner.bn_down", down)?;
    down = g.relu(down);
    let w_up = ctx.bind(g, "refiner.up.weight")?;
    let mut up = g.conv_transpose3d(down, w_up, 2, 1)?;
    up = ctx.bn(g, "refiner.bn_up", up)?;
    up = g.relu(up);
    let cat = g.concat_channels(up, voxel)?;
    let w_out = ctx.bind(g, "refiner.out.weight")?;
    let mut out = g.conv3d(cat, w_out, 1, 1)?;
    let b = ctx.bind(g, "refiner.out.bias")?;
    out = g.add_channel_bias(out, b)?;
    Ok(g.sigmoid(out))
}

fn classify_domain_with<T: Scalar>(
    g: &mut Graph<T>,
    ctx: &mut Ctx<T>,
    config: &NetworkConfig,
    latent: TensorId,
    grl_lambda: T,
) -> Result<TensorId> {
    let shape = g.shape(latent).to_vec();
    if shape.len() != 2 || shape[1] != config.latent_dim {
        return Err(Error::invalid(
            "classify_domain",
            format!("expected [n, {}], got {shape:?}", config.latent_dim),
        ));
    }
    let r = g.grl(latent, grl_lambda);
    let h = ctx.dense(g, "domain_head.fc1", r)?;
    let h = g.relu(h);
    ctx.dense(g, "domain_head.fc2", h)
}

fn classify_voxel_with<T: Scalar>(
    g: &mut Graph<T>,
    ctx: &mut Ctx<T>,
    config: &NetworkConfig,
    voxel: TensorId,
) -> Result<TensorId> {
    let n = check_voxel_shape(g, config, voxel, "classify_voxel")?;
    let v = config.voxel_size;
    let flat = g.reshape(voxel, &[n, v * v * v])?;
    let h = ctx.dense(g, "class_head.fc1", flat)?;
    let h = g.relu(h);
    let h = ctx.dense(g, "class_head.fc2", h)?;
    let h = g.relu(h);
    ctx.dense(g, "class_head.fc3", h)
}

/// Encode a batch of images [n, C, S, S] into latent features [n, d].
pub fn encode<T: Scalar>(
    g: &mut Graph<T>,
    params: &mut ModelParams<T>,
    config: &NetworkConfig,
    images: TensorId,
    mode: Mode,
) -> Result<TensorId> {
    let mut ctx = Ctx::new(params, mode);
    encode_with(g, &mut ctx, config, images)
}

/// Decode latent features [n, d] into occupancy probabilities [n,1,V,V,V].
pub fn decode<T: Scalar>(
    g: &mut Graph<T>,
    params: &mut ModelParams<T>,
    config: &NetworkConfig,
    latent: TensorId,
    mode: Mode,
) -> Result<TensorId> {
    let mut ctx = Ctx::new(params, mode);
    decode_with(g, &mut ctx, config, latent)
}

/// Refine a voxel probability grid; identity passthrough when disabled.
pub fn refine<T: Scalar>(
    g: &mut Graph<T>,
    params: &mut ModelParams<T>,
    config: &NetworkConfig,
    voxel: TensorId,
    mode: Mode,
) -> Result<TensorId> {
    let mut ctx = Ctx::new(params, mode);
    refine_with(g, &mut ctx, config, voxel)
}

/// Domain logits [n,1] from the latent batch, through the GRL.
pub fn classify_domain<T: Scalar>(
    g: &mut Graph<T>,
    params: &mut ModelParams<T>,
    config: &NetworkConfig,
    latent: TensorId,
    grl_lambda: T,
    mode: Mode,
) -> Result<TensorId> {
    let mut ctx = Ctx::new(params, mode);
    classify_domain_with(g, &mut ctx, config, latent, grl_lambda)
}

/// Class logits [n,K] from a voxel grid, via the flattened grid and the
/// fixed 100/20 hidden widths.
pub fn classify_voxel<T: Scalar>(
    g: &mut Graph<T>,
    params: &mut ModelParams<T>,
    config: &NetworkConfig,
    voxel: TensorId,
    mode: Mode,
) -> Result<TensorId> {
    let mut ctx = Ctx::new(params, mode);
    classify_voxel_with(g, &mut ctx, config, voxel)
}

/// Full pass: encode, decode, refine, and both heads.
pub fn forward_full<T: Scalar>(
    g: &mut Graph<T>,
    params: &mut ModelParams<T>,
    config: &NetworkConfig,
    images: TensorId,
    grl_lambda: T,
    mode: Mode,
) -> Result<ForwardOutputs> {
    Ok(forward_full_tracked(g, params, config, images, grl_lambda, mode)?.0)
}

/// [`forward_full`] that also returns the graph leaf id of every bound
/// parameter, keyed by name; the training loop reads gradients through it.
pub fn forward_full_tracked<T: Scalar>(
    g: &mut Graph<T>,
    params: &mut ModelParams<T>,
    config: &NetworkConfig,
    images: TensorId,
    grl_lambda: T,
    mode: Mode,
) -> Result<(ForwardOutputs, BTreeMap<String, TensorId>)> {
    let mut ctx = Ctx::new(params, mode);
    let latent = encode_with(g, &mut ctx, config, images)?;
    let voxel_raw = decode_with(g, &mut ctx, config, latent)?;
    let voxel_refined = refine_with(g, &mut ctx, config, voxel_raw)?;
    let domain_logits = classify_domain_with(g, &mut ctx, config, latent, grl_lambda)?;
    let class_logits = classify_voxel_with(g, &mut ctx, config, voxel_refined)?;
    Ok((
        ForwardOutputs {
            latent,
            voxel_raw,
            voxel_refined,
            domain_logits,
            class_logits,
        },
        ctx.ids,
    ))
}
