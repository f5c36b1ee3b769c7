"""Deep archetypal analysis: a variational information-bottleneck latent
model whose latent means are convex mixtures of a fixed regular simplex.

The encoder trunk feeds three heads: a row-softmax head for the mixture
weights A (batch x k), a batch-axis softmax head for B (k x batch), and a
clamped log-variance head. Latent means are mu = A @ V for the fixed
vertex matrix V, so they live inside the simplex by construction. The
archetype loss ||V - B A V||_F^2 ties the learned mixtures back to the
vertices; training minimizes kl + lambda * reconstruction + archetype loss
with reparameterized latent samples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import NumericalError, ParameterError, ShapeError
from .nn import Adam, Mlp
from .numerics import SimplexFrame, rng_create, simplex_vertices

LOGVAR_MIN = -10.0
LOGVAR_MAX = 10.0

HISTORY_COLUMNS = ["step", "total", "recon", "kl", "at", "side", "lambda"]


@dataclass(frozen=True)
class DeepAaArch:
    input_dim: int
    k: int
    encoder_hidden: tuple = (64, 64)
    decoder_hidden: tuple = (64, 64)
    side_hidden: tuple | None = None  # None disables the side head
    activation: str = "relu"

    def __post_init__(self):
        if self.k < 2:
            raise ParameterError(f"deep AA needs k >= 2, got {self.k}")
        if self.input_dim < 1:
            raise ParameterError("input_dim must be >= 1")
        if len(self.encoder_hidden) < 1 or len(self.decoder_hidden) < 1:
            raise ParameterError("encoder and decoder need at least one hidden layer")
        object.__setattr__(self, "encoder_hidden", tuple(self.encoder_hidden))
        object.__setattr__(self, "decoder_hidden", tuple(self.decoder_hidden))
        if self.side_hidden is not None:
            object.__setattr__(self, "side_hidden", tuple(self.side_hidden))

    @property
    def latent_dim(self) -> int:
        return self.k - 1

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim, "k": self.k,
            "encoder_hidden": list(self.encoder_hidden),
            "decoder_hidden": list(self.decoder_hidden),
            "side_hidden": None if self.side_hidden is None else list(self.side_hidden),
            "activation": self.activation,
        }

    @staticmethod
    def from_dict(d: dict) -> "DeepAaArch":
        side = d.get("side_hidden")
        return DeepAaArch(
            input_dim=int(d["input_dim"]), k=int(d["k"]),
            encoder_hidden=tuple(d["encoder_hidden"]),
            decoder_hidden=tuple(d["decoder_hidden"]),
            side_hidden=None if side is None else tuple(side),
            activation=d.get("activation", "relu"),
        )


@dataclass(frozen=True)
class DeepAaHyper:
    lambda0: float = 1.0
    lambda_growth: float = 1.01
    lambda_every: int = 500
    at_weight: float = 1.0
    side_weight: float = 1.0
    lr: float = 1e-3
    batch: int = 100
    epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.lambda0 <= 0:
            raise ParameterError("lambda0 must be > 0")
        if self.batch < 1 or self.epochs < 0:
            raise ParameterError("batch must be >= 1 and epochs >= 0")
        if self.lambda_every < 1:
            raise ParameterError("lambda_every must be >= 1")

    def to_dict(self) -> dict:
        return {
            "lambda0": self.lambda0, "lambda_growth": self.lambda_growth,
            "lambda_every": self.lambda_every, "at_weight": self.at_weight,
            "side_weight": self.side_weight, "lr": self.lr,
            "batch": self.batch, "epochs": self.epochs, "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "DeepAaHyper":
        return DeepAaHyper(**{k: d[k] for k in DeepAaHyper().to_dict() if k in d})


class DeepAaModel:
    """Encoder/decoder parameter sets plus the fixed simplex frame."""

    def __init__(self, arch: DeepAaArch, seed: int = 0):
        self.arch = arch
        self.frame: SimplexFrame = simplex_vertices(arch.k)
        rng = rng_create(seed)
        hidden = arch.encoder_hidden
        self.trunk = Mlp([arch.input_dim, *hidden], activation=arch.activation,
                         output_activation=arch.activation, rng=rng)
        width = hidden[-1]
        self.a_head = Mlp([width, arch.k], rng=rng)
        self.b_head = Mlp([width, arch.k], rng=rng)
        self.logvar_head = Mlp([width, arch.latent_dim], rng=rng)
        self.decoder = Mlp([arch.latent_dim, *arch.decoder_hidden, arch.input_dim],
                           activation=arch.activation, rng=rng)
        self.side_head = None
        if arch.side_hidden is not None:
            self.side_head = Mlp([arch.latent_dim, *arch.side_hidden, 1],
                                 activation=arch.activation, rng=rng)
        self.history: list = []
        self.median_logvar = np.zeros(arch.latent_dim)
        self.trained = False

    @property
    def has_side(self) -> bool:
        return self.side_head is not None

    def parameters(self):
        params = (self.trunk.parameters() + self.a_head.parameters()
                  + self.b_head.parameters() + self.logvar_head.parameters()
                  + self.decoder.parameters())
        if self.side_head is not None:
            params += self.side_head.parameters()
        return params

    # -- graph builders ----------------------------------------------------

    def _encode_nodes(self, x: ad.Node):
        h = self.trunk.forward(x)
        a = ad.row_softmax(self.a_head.forward(h))
        b = ad.row_softmax(ad.transpose(self.b_head.forward(h)))
        logvar = ad.clamp(self.logvar_head.forward(h), LOGVAR_MIN, LOGVAR_MAX)
        mu = a @ ad.constant(self.frame.vertices)
        return a, b, logvar, mu

    def _loss_nodes(self, x_batch: np.ndarray, y_batch, lam: float,
                    noise: np.ndarray):
        """Full objective graph; ``noise`` is the fixed reparameterization
        draw for this batch (shape m x (k-1))."""
        m = x_batch.shape[0]
        x = ad.constant(x_batch)
        a, b, logvar, mu = self._encode_nodes(x)

        kl = (0.5 / m) * ad.reduce_sum(
            ad.exp(logvar) + ad.square(mu) - 1.0 - logvar
        )

        t = mu + ad.exp(logvar * 0.5) * ad.constant(noise)
        x_hat = self.decoder.forward(t)
        recon = (0.5 / m) * ad.reduce_sum(ad.square(x - x_hat))

        v = ad.constant(self.frame.vertices)
        at = ad.reduce_sum(ad.square(v - (b @ a) @ v))

        parts = {"recon": recon, "kl": kl, "at": at}
        total = kl + lam * recon + _hyper_at(self) * at
        if self.side_head is not None:
            if y_batch is None:
                raise ParameterError("model has a side head but batch has no labels")
            y_hat = self.side_head.forward(t)
            side = (0.5 / m) * ad.reduce_sum(
                ad.square(ad.constant(y_batch.reshape(-1, 1)) - y_hat)
            )
            parts["side"] = side
            total = total + lam * _hyper_side(self) * side
        return total, parts

    # -- public operations ---------------------------------------------------

    def encode(self, x_batch):
        """Forward pass; returns (A, B, logvar, mu) as plain arrays."""
        x_batch = _check_batch(x_batch, self.arch.input_dim)
        a, b, logvar, mu = self._encode_nodes(ad.constant(x_batch))
        return a.value, b.value, logvar.value, mu.value

    def decode(self, t):
        """Decode latent points; returns (X_hat, y_hat-or-None)."""
        t = np.atleast_2d(np.asarray(t, float))
        if t.shape[1] != self.arch.latent_dim:
            raise ShapeError(
                f"latent points must have dim {self.arch.latent_dim}, got {t.shape[1]}"
            )
        x_hat = self.decoder.forward(ad.constant(t)).value
        y_hat = None
        if self.side_head is not None:
            y_hat = self.side_head.forward(ad.constant(t)).value[:, 0]
        return x_hat, y_hat

    def loss(self, x_batch, y_batch=None, lam: float = 1.0, rng=None):
        """Objective value on one batch; returns (total, parts dict)."""
        x_batch = _check_batch(x_batch, self.arch.input_dim)
        rng = rng if rng is not None else rng_create(0)
        noise = rng.standard_normal((x_batch.shape[0], self.arch.latent_dim))
        total, parts = self._loss_nodes(x_batch, y_batch, lam, noise)
        if not np.isfinite(total.value):
            raise NumericalError("loss is non-finite")
        return float(total.value), {k: float(v.value) for k, v in parts.items()}

    def to_dict(self) -> dict:
        d = {
            "arch": self.arch.to_dict(),
            "trunk": self.trunk.state(),
            "a_head": self.a_head.state(),
            "b_head": self.b_head.state(),
            "logvar_head": self.logvar_head.state(),
            "decoder": self.decoder.state(),
            "side_head": None if self.side_head is None else self.side_head.state(),
            "median_logvar": self.median_logvar.tolist(),
            "history": self.history,
            "trained": self.trained,
        }
        return d

    @staticmethod
    def from_dict(d: dict) -> "DeepAaModel":
        model = DeepAaModel(DeepAaArch.from_dict(d["arch"]))
        model.trunk = Mlp.from_state(d["trunk"])
        model.a_head = Mlp.from_state(d["a_head"])
        model.b_head = Mlp.from_state(d["b_head"])
        model.logvar_head = Mlp.from_state(d["logvar_head"])
        model.decoder = Mlp.from_state(d["decoder"])
        model.side_head = (None if d.get("side_head") is None
                           else Mlp.from_state(d["side_head"]))
        model.median_logvar = np.array(d.get("median_logvar",
                                             [0.0] * model.arch.latent_dim))
        model.history = list(d.get("history", []))
        model.trained = bool(d.get("trained", False))
        return model


# Tunable loss weights live on the model so checkpoints are self-contained;
# train() installs them from the hyperparameters before the first step.
def _hyper_at(model: DeepAaModel) -> float:
    return getattr(model, "at_weight", 1.0)


def _hyper_side(model: DeepAaModel) -> float:
    return getattr(model, "side_weight", 1.0)


def _check_batch(x, p: int) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, float))
    if x.shape[1] != p:
        raise ShapeError(f"batch must have {p} columns, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise NumericalError("batch contains non-finite values")
    return x


# ---------------------------------------------------------------------------
# Standalone loss pieces (shared by tests and training)

def archetype_loss(a: np.ndarray, b: np.ndarray, frame: SimplexFrame) -> float:
    """||V - B A V||_F^2 for the fixed vertex matrix V."""
    v = frame.vertices
    return float(np.sum((v - b @ a @ v) ** 2))


def kl_term(mu: np.ndarray, logvar: np.ndarray) -> float:
    """Mean (over rows) KL(N(mu_i, diag(exp(logvar_i))) || N(0, I))."""
    mu = np.atleast_2d(np.asarray(mu, float))
    logvar = np.atleast_2d(np.asarray(logvar, float))
    if mu.shape != logvar.shape:
        raise ShapeError("mu and logvar must have the same shape")
    per_row = 0.5 * np.sum(np.exp(logvar) + mu**2 - 1.0 - logvar, axis=1)
    return float(per_row.mean())


def reparameterize(mu: np.ndarray, logvar: np.ndarray, rng) -> np.ndarray:
    """t = mu + exp(logvar / 2) * eps with eps ~ N(0, I)."""
    mu = np.atleast_2d(np.asarray(mu, float))
    logvar = np.atleast_2d(np.asarray(logvar, float))
    if mu.shape != logvar.shape:
        raise ShapeError("mu and logvar must have the same shape")
    return mu + np.exp(0.5 * logvar) * rng.standard_normal(mu.shape)


# ---------------------------------------------------------------------------
# Training

def _lambda_at(hyper: DeepAaHyper, step: int, scheduled: bool) -> float:
    if not scheduled:
        return hyper.lambda0
    return hyper.lambda0 * hyper.lambda_growth ** (step // hyper.lambda_every)


def train(model: DeepAaModel, dataset, hyper: DeepAaHyper) -> DeepAaModel:
    """Mini-batch Adam training of the full objective; deterministic in
    ``hyper.seed``. The Lagrange multiplier is fixed at lambda0 unless a
    side head is present, in which case it grows geometrically."""
    x = np.asarray(dataset.x, float)
    y = None if dataset.labels is None else np.asarray(dataset.labels, float)
    n = x.shape[0]
    if n == 0:
        raise ParameterError("cannot train on an empty dataset")
    if model.has_side and y is None:
        raise ParameterError("model has a side head but the dataset has no labels")
    if hyper.batch < model.arch.k:
        warnings.warn(
            f"batch size {hyper.batch} below k={model.arch.k}; the batch-axis "
            "softmax cannot span all archetypes", stacklevel=2)
    model.at_weight = hyper.at_weight
    model.side_weight = hyper.side_weight
    rng = rng_create(hyper.seed)
    opt = Adam(model.parameters(), lr=hyper.lr)
    model.history = []
    step = 0
    for _epoch in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch):
            idx = order[start:start + hyper.batch]
            xb = x[idx]
            yb = None if y is None else y[idx]
            lam = _lambda_at(hyper, step, scheduled=model.has_side)
            noise = rng.standard_normal((xb.shape[0], model.arch.latent_dim))
            snapshot = [p.value.copy() for p in opt.params]
            total, parts = model._loss_nodes(xb, yb, lam, noise)
            if not np.isfinite(total.value):
                for p, saved in zip(opt.params, snapshot):
                    p.value[...] = saved
                raise NumericalError(
                    f"non-finite loss at step {step}; last good parameters kept"
                )
            opt.zero_grad()
            total.backward()
            opt.step()
            model.history.append([
                step, float(total.value), float(parts["recon"].value),
                float(parts["kl"].value), float(parts["at"].value),
                float(parts["side"].value) if "side" in parts else 0.0,
                lam,
            ])
            step += 1
    _, _, logvar, _ = model.encode(x)
    model.median_logvar = np.median(logvar, axis=0)
    model.trained = True
    return model


def final_archetype_loss(model: DeepAaModel, x) -> float:
    """Archetype loss of a full forward pass over the given rows."""
    a, b, _, _ = model.encode(x)
    return archetype_loss(a, b, model.frame)


# ---------------------------------------------------------------------------
# Generation and interpolation

def _check_weights(a, k: int) -> np.ndarray:
    a = np.asarray(a, float)
    if a.shape != (k,):
        raise ParameterError(f"mixture weights must have length {k}")
    if np.any(a < -1e-12) or abs(a.sum() - 1.0) > 1e-9:
        raise ParameterError("mixture weights must be on the unit simplex")
    return np.clip(a, 0.0, None)


def generate(model: DeepAaModel, a, rng=None, use_noise: bool = False):
    """Decode the latent point given by mixture weights ``a``.

    With ``use_noise`` the latent point is perturbed with the training-set
    median log-variance (there is no encoder input to supply one).
    """
    a = _check_weights(a, model.arch.k)
    t = a @ model.frame.vertices
    if use_noise:
        rng = rng if rng is not None else rng_create(0)
        t = reparameterize(t, model.median_logvar, rng)[0]
    x_hat, y_hat = model.decode(t)
    return x_hat[0], (None if y_hat is None else float(y_hat[0]))


def vertex_recovery_report(model: DeepAaModel, dataset) -> dict:
    """How well the trained model maps ground-truth archetypes to simplex
    vertices and decodes vertices back to the archetypes.

    Needs dataset.z_true with the same k as the model.
    """
    from itertools import permutations

    from .errors import MissingGroundTruth
    from .numerics import match_rows

    if dataset.z_true is None:
        raise MissingGroundTruth("vertex recovery needs Z_true")
    z_true = np.asarray(dataset.z_true, float)
    k = model.arch.k
    if z_true.shape[0] != k:
        raise ParameterError(
            f"model k={k} does not match {z_true.shape[0]} true archetypes"
        )
    # nearest data row to each true archetype, encoded to its latent mean
    nearest = np.array([
        int(np.argmin(np.linalg.norm(dataset.x - z_true[j], axis=1)))
        for j in range(k)
    ])
    _, _, _, mu = model.encode(dataset.x[nearest])
    dist = np.linalg.norm(mu[:, None, :] - model.frame.vertices[None, :, :], axis=2)
    best_perm, best_total = None, np.inf
    for perm in permutations(range(k)):
        total = sum(dist[j, perm[j]] for j in range(k))
        if total < best_total:
            best_total, best_perm = total, perm
    mu_vertex_dist = [float(dist[j, best_perm[j]]) for j in range(k)]

    # one-hot generation vs the true archetypes, optimally matched
    generated = np.array([
        generate(model, np.eye(k)[j])[0] for j in range(k)
    ])
    gen_perm, gen_errors = match_rows(generated, z_true)
    return {
        "archetype_loss": final_archetype_loss(model, dataset.x),
        "nearest_row_indices": [int(i) for i in nearest],
        "vertex_assignment": [int(v) for v in best_perm],
        "mu_vertex_distances": mu_vertex_dist,
        "generation_assignment": [int(v) for v in gen_perm],
        "generation_mean_abs_errors": [float(e) for e in gen_errors],
    }


def interpolate(model: DeepAaModel, a_start, a_end, steps: int) -> np.ndarray:
    """Decode evenly spaced mixtures along the segment a_start -> a_end."""
    if steps < 2:
        raise ParameterError("need at least 2 interpolation steps")
    a_start = _check_weights(a_start, model.arch.k)
    a_end = _check_weights(a_end, model.arch.k)
    fractions = np.linspace(0.0, 1.0, steps)
    mixtures = np.outer(1.0 - fractions, a_start) + np.outer(fractions, a_end)
    # one row at a time, through the same products as generate(), so the
    # endpoints reproduce direct generation bit-for-bit
    rows = []
    for mix in mixtures:
        t = mix @ model.frame.vertices
        x_hat, _ = model.decode(t)
        rows.append(x_hat[0])
    return np.stack(rows)
