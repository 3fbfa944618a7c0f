"""Walsh neural encoder/decoder pair with hand-written backpropagation.

Encoder: one-hot(M) -> dense(M) -> ReLU -> dense(N) -> power normalisation.
Decoder: received(N) -> dense(M) -> ReLU -> dense(M) -> softmax.

Power normalisation runs over the whole codebook (all M messages), which is
the batch normalisation of a perfectly balanced message batch. A single
scalar fixes the mean power per channel use at exactly 1 for the code used
in both training and inference.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import channel as ch

PARAM_NAMES = ("enc_w1", "enc_b1", "enc_w2", "enc_b2", "dec_w1", "dec_b1", "dec_w2", "dec_b2")


class DegenerateInputError(ValueError):
    pass


class TrainingFailure(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class Topology:
    k: int = 4
    n: int = 32

    def __post_init__(self):
        if self.k < 1 or self.n < self.k:
            raise ValueError(f"invalid topology k={self.k}, N={self.n}")

    @property
    def m(self) -> int:
        return 2**self.k

    @property
    def rate(self) -> float:
        return self.k / self.n


@dataclass
class AutoencoderModel:
    enc_w1: np.ndarray
    enc_b1: np.ndarray
    enc_w2: np.ndarray
    enc_b2: np.ndarray
    dec_w1: np.ndarray
    dec_b1: np.ndarray
    dec_w2: np.ndarray
    dec_b2: np.ndarray
    topology: Topology = field(default_factory=Topology)
    final_relu: bool = False
    meta: dict = field(default_factory=dict)

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "AutoencoderModel":
        return replace(self, **{k: v.copy() for k, v in self.params().items()}, meta=dict(self.meta))

    def check(self) -> None:
        m, n = self.topology.m, self.topology.n
        shapes = {
            "enc_w1": (m, m), "enc_b1": (m,), "enc_w2": (m, n), "enc_b2": (n,),
            "dec_w1": (n, m), "dec_b1": (m,), "dec_w2": (m, m), "dec_b2": (m,),
        }
        for name, shape in shapes.items():
            a = getattr(self, name)
            if a.shape != shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")


def _glorot(rng, fan_in, fan_out):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


def init_model(seed=None, topology: Topology | None = None, final_relu: bool = False) -> AutoencoderModel:
    topology = topology or Topology()
    rng = np.random.default_rng(seed)
    m, n = topology.m, topology.n
    return AutoencoderModel(
        enc_w1=_glorot(rng, m, m), enc_b1=np.zeros(m),
        enc_w2=_glorot(rng, m, n), enc_b2=np.zeros(n),
        dec_w1=_glorot(rng, n, m), dec_b1=np.zeros(m),
        dec_w2=_glorot(rng, m, m), dec_b2=np.zeros(m),
        topology=topology, final_relu=final_relu,
    )


def zero_model(topology: Topology | None = None) -> AutoencoderModel:
    topology = topology or Topology()
    m, n = topology.m, topology.n
    return AutoencoderModel(
        np.zeros((m, m)), np.zeros(m), np.zeros((m, n)), np.zeros(n),
        np.zeros((n, m)), np.zeros(m), np.zeros((m, m)), np.zeros(m), topology,
    )


# -- normalisation -----------------------------------------------------------

def normalize(batch) -> np.ndarray:
    """Scale a batch so its mean squared amplitude per channel use is 1."""
    x = np.asarray(batch, dtype=float)
    ms = np.mean(x * x)
    if ms == 0:
        raise DegenerateInputError("cannot normalise an all-zero batch")
    return x / np.sqrt(ms)


def normalize_backward(batch, grad_out) -> np.ndarray:
    """Gradient of ``sum(grad_out * normalize(batch))`` with respect to ``batch``."""
    x = np.asarray(batch, dtype=float)
    scale = np.sqrt(np.mean(x * x))
    y = x / scale
    return (grad_out - y * np.mean(grad_out * y)) / scale


# -- forward passes ------------------------------------------------------------

def _encoder_forward(model: AutoencoderModel):
    # one-hot input: first dense layer output for message m is row m of enc_w1
    a1 = model.enc_w1 + model.enc_b1
    h1 = np.maximum(a1, 0.0)
    raw = h1 @ model.enc_w2 + model.enc_b2
    if model.final_relu:
        raw_act = np.maximum(raw, 0.0)
    else:
        raw_act = raw
    return a1, h1, raw, raw_act, normalize(raw_act)


def codebook(model: AutoencoderModel) -> np.ndarray:
    """All M normalised codewords, row m for message m."""
    return _encoder_forward(model)[-1]


def encode(model: AutoencoderModel, message) -> np.ndarray:
    """Codeword(s) for integer message(s) in ``[0, M)``."""
    msg = np.asarray(message)
    if not np.issubdtype(msg.dtype, np.integer):
        raise ValueError("messages must be integers")
    if np.any(msg < 0) or np.any(msg >= model.topology.m):
        raise ValueError(f"message out of range [0, {model.topology.m})")
    return codebook(model)[msg]


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def decoder_logits(model: AutoencoderModel, received) -> np.ndarray:
    r = np.asarray(received, dtype=float)
    h = np.maximum(r @ model.dec_w1 + model.dec_b1, 0.0)
    return h @ model.dec_w2 + model.dec_b2


def decode(model: AutoencoderModel, received) -> np.ndarray:
    """Softmax probabilities over the M messages."""
    r = np.asarray(received, dtype=float)
    if r.shape[-1] != model.topology.n:
        raise ValueError(f"received length {r.shape[-1]} != N={model.topology.n}")
    return _softmax(decoder_logits(model, r))


def infer(model: AutoencoderModel, received) -> np.ndarray:
    """Most likely message; ties go to the lowest index."""
    return np.argmax(decoder_logits(model, received), axis=-1)


# -- loss and gradients --------------------------------------------------------

def loss_from_received(model: AutoencoderModel, messages, received):
    """Mean cross-entropy and gradients given already-received vectors.

    Returns ``(loss, grads, grad_received)``; ``grads`` covers only the
    decoder parameters.
    """
    msgs = np.asarray(messages)
    b = msgs.size
    a = received @ model.dec_w1 + model.dec_b1
    h = np.maximum(a, 0.0)
    logits = h @ model.dec_w2 + model.dec_b2
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsum - z[np.arange(b), msgs]))

    dlogits = np.exp(z - logsum[:, None])
    dlogits[np.arange(b), msgs] -= 1.0
    dlogits /= b
    grads = {
        "dec_w2": h.T @ dlogits,
        "dec_b2": dlogits.sum(axis=0),
    }
    dh = dlogits @ model.dec_w2.T
    da = dh * (a > 0)
    grads["dec_w1"] = received.T @ da
    grads["dec_b1"] = da.sum(axis=0)
    return loss, grads, da @ model.dec_w1.T


def loss_and_gradients(model: AutoencoderModel, messages, channel_cfg: ch.ChannelConfig | None, rng=None,
                       realization: ch.ChannelRealization | None = None):
    """Cross-entropy of encode -> channel -> decode and gradients of every parameter.

    Pass ``realization`` to freeze the channel draw (noise and interference
    are then taken from it instead of ``rng``); with ``channel_cfg=None`` and
    no realization the channel is noiseless.
    """
    msgs = np.asarray(messages)
    if msgs.size == 0:
        raise ValueError("empty message batch")
    a1, h1, raw, raw_act, cb = _encoder_forward(model)
    tx = cb[msgs]
    if realization is not None:
        received = tx + realization.noise + realization.interference_draw
        backward = lambda g: g  # noqa: E731
    elif channel_cfg is None:
        received = tx
        backward = lambda g: g  # noqa: E731
    else:
        real, backward = ch.differentiable_apply(channel_cfg, tx, rng)
        received = real.received

    loss, grads, drx = loss_from_received(model, msgs, received)
    dtx = backward(drx)

    dcb = np.zeros_like(cb)
    np.add.at(dcb, msgs, dtx)
    draw_act = normalize_backward(raw_act, dcb)
    draw = draw_act * (raw > 0) if model.final_relu else draw_act
    grads["enc_w2"] = h1.T @ draw
    grads["enc_b2"] = draw.sum(axis=0)
    da1 = (draw @ model.enc_w2.T) * (a1 > 0)
    grads["enc_w1"] = da1  # identity input over the codebook
    grads["enc_b1"] = da1.sum(axis=0)
    return loss, grads


# -- training ------------------------------------------------------------------

@dataclass
class TrainingConfig:
    batch_size: int = 256
    steps: int = 30_000
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    train_ebn0_db: float = 8.0
    ici_db: float = 0.0
    mask: object = None
    seed: int = 0
    scenario_id: str = "baseline"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def channel(self, topology: Topology) -> ch.ChannelConfig:
        return ch.ChannelConfig(self.train_ebn0_db, self.ici_db, self.mask, topology.rate)


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            params[name] -= self.lr * (self.m[name] / c1) / (np.sqrt(self.v[name] / c2) + self.eps)


class SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params: dict, grads: dict) -> None:
        for name, g in grads.items():
            params[name] -= self.lr * g


def train(seed, tcfg: TrainingConfig, topology: Topology | None = None, *,
          init: AutoencoderModel | None = None, final_relu: bool = False,
          divergence_window: int = 1000):
    """Train an encoder/decoder pair end to end.

    Returns ``(model, loss_trace)``. ``seed`` initialises the weights;
    ``tcfg.seed`` drives message and channel sampling. Deterministic for a
    fixed pair of seeds.
    """
    topology = topology or (init.topology if init is not None else Topology())
    model = init.copy() if init is not None else init_model(seed, topology, final_relu)
    chan = tcfg.channel(topology)
    rng = np.random.default_rng(tcfg.seed)
    if tcfg.optimizer == "adam":
        opt = Adam(tcfg.learning_rate, tcfg.beta1, tcfg.beta2, tcfg.eps)
    else:
        opt = SGD(tcfg.learning_rate)
    params = model.params()
    trace = np.empty(tcfg.steps)
    ceiling = 10 * np.log(topology.m)
    bad = 0
    for step in range(tcfg.steps):
        msgs = rng.integers(0, topology.m, size=tcfg.batch_size)
        loss, grads = loss_and_gradients(model, msgs, chan, rng)
        trace[step] = loss
        if not np.isfinite(loss):
            raise TrainingFailure(f"non-finite loss at step {step}", trace[: step + 1])
        bad = bad + 1 if loss > ceiling else 0
        if bad >= divergence_window:
            raise TrainingFailure(f"loss above {ceiling:.3g} for {bad} steps", trace[: step + 1])
        opt.step(params, grads)
    model.meta = {
        "seed": seed,
        "train_seed": tcfg.seed,
        "optimizer": tcfg.optimizer,
        "steps": tcfg.steps,
        "scenario": tcfg.scenario_id,
        "train_ebn0_db": tcfg.train_ebn0_db,
        "ici_db": tcfg.ici_db,
    }
    return model, trace


def accuracy(model: AutoencoderModel, received, messages) -> float:
    return float(np.mean(infer(model, received) == np.asarray(messages)))


def min_codeword_distance(model: AutoencoderModel) -> float:
    cb = codebook(model)
    d = np.sqrt(((cb[:, None, :] - cb[None, :, :]) ** 2).sum(-1))
    return float(d[~np.eye(len(cb), dtype=bool)].min())


__all__ = [
    "AutoencoderModel", "Topology", "TrainingConfig", "TrainingFailure", "DegenerateInputError",
    "init_model", "zero_model", "normalize", "normalize_backward", "codebook", "encode",
    "decode", "decoder_logits", "infer", "loss_and_gradients", "loss_from_received", "train",
    "accuracy", "min_codeword_distance", "PARAM_NAMES",
]
