"""Mean-field variational MLP: weight sampling, ELBO gradients, MC prediction.

Every weight and bias has a Gaussian posterior N(mu, sigma^2) with
sigma = softplus(rho), trained against a standard-normal prior via the
reparameterization trick (w = mu + sigma * eps). The minibatch objective is

    mean cross-entropy of the sampled network
        + KL(posterior || prior) / (num_batches * batch_size)

(the per-example KL fraction; see elbo_loss) and all gradients are
computed analytically in float64 so they can be checked against central
finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Task, TaskSpec
from .errors import NonFiniteLoss, ShapeMismatch
from .features import NUM_FEATURES, Normalizer

# Architecture used for every monitoring task: three hidden layers.
HIDDEN_SIZES = (272, 544, 272)

INIT_MU_RANGE = 0.1
INIT_RHO = -3.0  # sigma = softplus(-3) ~= 0.049

MODEL_FORMAT_VERSION = 1


def softplus(x: np.ndarray) -> np.ndarray:
    """ln(1 + exp(x)), overflow-safe."""
    x = np.asarray(x)
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class VariationalLayer:
    """One fully-connected layer with factorized-Gaussian weights."""

    w_mu: np.ndarray  # (out, in)
    w_rho: np.ndarray  # (out, in)
    b_mu: np.ndarray  # (out,)
    b_rho: np.ndarray  # (out,)
    activation: str  # "relu" | "none"

    def __post_init__(self):
        if self.w_mu.shape != self.w_rho.shape or self.b_mu.shape != self.b_rho.shape:
            raise ShapeMismatch("mu/rho shapes differ")
        if self.w_mu.shape[0] != self.b_mu.shape[0]:
            raise ShapeMismatch("weight/bias output sizes differ")
        if self.activation not in ("relu", "none"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.w_mu.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w_mu.shape[0]

    @property
    def num_weights(self) -> int:
        return self.w_mu.size + self.b_mu.size

    def copy(self) -> "VariationalLayer":
        return VariationalLayer(
            self.w_mu.copy(), self.w_rho.copy(), self.b_mu.copy(), self.b_rho.copy(),
            self.activation,
        )


def make_layer(in_dim: int, out_dim: int, activation: str, rng: np.random.Generator) -> VariationalLayer:
    """Fresh layer: mu ~ U(-0.1, 0.1), rho = -3 (small initial noise)."""
    return VariationalLayer(
        w_mu=rng.uniform(-INIT_MU_RANGE, INIT_MU_RANGE, size=(out_dim, in_dim)),
        w_rho=np.full((out_dim, in_dim), INIT_RHO),
        b_mu=rng.uniform(-INIT_MU_RANGE, INIT_MU_RANGE, size=out_dim),
        b_rho=np.full(out_dim, INIT_RHO),
        activation=activation,
    )


class VariationalNet:
    """Stack of variational layers ending in a linear layer over classes."""

    def __init__(self, layers: list[VariationalLayer], task: TaskSpec | None = None):
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ShapeMismatch(
                    f"layer sizes do not chain: {prev.out_dim} -> {nxt.in_dim}"
                )
        self.layers = layers
        self.task = task

    @property
    def num_features(self) -> int:
        return self.layers[0].in_dim

    @property
    def num_classes(self) -> int:
        return self.layers[-1].out_dim

    @property
    def num_weights(self) -> int:
        return sum(layer.num_weights for layer in self.layers)

    def parameters(self) -> list[np.ndarray]:
        """All trainable arrays, in the canonical (per layer: w_mu, w_rho, b_mu, b_rho) order."""
        params = []
        for layer in self.layers:
            params.extend([layer.w_mu, layer.w_rho, layer.b_mu, layer.b_rho])
        return params

    def copy(self) -> "VariationalNet":
        return VariationalNet([layer.copy() for layer in self.layers], task=self.task)


def make_net(sizes: Sequence[int], rng: np.random.Generator, task: TaskSpec | None = None) -> VariationalNet:
    """Net with ReLU hidden layers and a linear output; ``sizes`` includes input and output."""
    if len(sizes) < 2:
        raise ShapeMismatch("need at least input and output sizes")
    layers = []
    for i, (d_in, d_out) in enumerate(zip(sizes, sizes[1:])):
        activation = "none" if i == len(sizes) - 2 else "relu"
        layers.append(make_layer(d_in, d_out, activation, rng))
    return VariationalNet(layers, task=task)


def make_task_net(task: TaskSpec, rng: np.random.Generator, num_features: int = NUM_FEATURES) -> VariationalNet:
    sizes = [num_features, *HIDDEN_SIZES, task.num_classes]
    return make_net(sizes, rng, task=task)


# -- sampling and KL ----------------------------------------------------------


@dataclass
class SampledWeights:
    w: np.ndarray
    b: np.ndarray
    eps_w: np.ndarray
    eps_b: np.ndarray


def sample_weights(layer: VariationalLayer, rng: np.random.Generator) -> SampledWeights:
    """Draw one concrete weight set: w = mu + softplus(rho) * eps."""
    eps_w = rng.standard_normal(layer.w_mu.shape)
    eps_b = rng.standard_normal(layer.b_mu.shape)
    w = layer.w_mu + softplus(layer.w_rho) * eps_w
    b = layer.b_mu + softplus(layer.b_rho) * eps_b
    return SampledWeights(w=w, b=b, eps_w=eps_w, eps_b=eps_b)


def _kl_terms(mu: np.ndarray, rho: np.ndarray) -> np.ndarray:
    # KL(N(mu, sigma^2) || N(0, 1)) elementwise.
    sigma = softplus(rho)
    return -np.log(sigma) + 0.5 * (sigma * sigma + mu * mu) - 0.5


def kl_to_prior(layer: VariationalLayer) -> float:
    """Closed-form KL of the layer's posterior to the standard-normal prior."""
    return float(
        _kl_terms(layer.w_mu, layer.w_rho).sum() + _kl_terms(layer.b_mu, layer.b_rho).sum()
    )


def net_kl(net: VariationalNet) -> float:
    return sum(kl_to_prior(layer) for layer in net.layers)


def _kl_grads(layer: VariationalLayer) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    # d/dmu = mu ; d/drho = (sigma - 1/sigma) * sigmoid(rho)
    w_sigma = softplus(layer.w_rho)
    b_sigma = softplus(layer.b_rho)
    d_w_rho = (w_sigma - 1.0 / w_sigma) * sigmoid(layer.w_rho)
    d_b_rho = (b_sigma - 1.0 / b_sigma) * sigmoid(layer.b_rho)
    return layer.w_mu.copy(), d_w_rho, layer.b_mu.copy(), d_b_rho


# -- forward / loss / gradients -----------------------------------------------


def log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(z: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(z))


def forward_sampled(net: VariationalNet, X: np.ndarray, samples: list[SampledWeights]):
    """Forward pass with the given concrete weights; returns logits and caches."""
    a = X
    caches = []
    for layer, s in zip(net.layers, samples):
        z = a @ s.w.T + s.b
        caches.append((a, z))
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z
    return a, caches


def elbo_loss(
    net: VariationalNet,
    X: np.ndarray,
    y: np.ndarray,
    num_batches: int,
    rng: np.random.Generator,
    train_mc_samples: int = 1,
) -> tuple[float, list[np.ndarray]]:
    """Minibatch loss and analytic gradients for every mu and rho.

    The data term is the mean cross-entropy of the batch, averaged over
    ``train_mc_samples`` reparameterized draws. The KL term is closed form
    and weighted per example, 1/(num_batches * batch): against a mean
    (not summed) data term the usual per-minibatch KL fraction must be
    divided by the batch size as well, otherwise the KL gradient swamps
    the likelihood and the posterior collapses to the prior. Gradients
    come back in ``net.parameters()`` order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[1] != net.num_features:
        raise ShapeMismatch(f"batch shape {X.shape} does not match {net.num_features} features")
    if len(y) != len(X) or len(X) == 0:
        raise ShapeMismatch("batch is empty or labels do not match")
    batch = len(X)

    # sigma and d(sigma)/d(rho) once per call; they feed the sampling path,
    # the data-term rho gradients and the KL term alike.
    sigmas = [
        (softplus(l.w_rho), softplus(l.b_rho), sigmoid(l.w_rho), sigmoid(l.b_rho))
        for l in net.layers
    ]

    grads = [np.zeros_like(p) for p in net.parameters()]
    nll_total = 0.0
    for _ in range(train_mc_samples):
        samples = []
        for layer, (w_sigma, b_sigma, _, _) in zip(net.layers, sigmas):
            eps_w = rng.standard_normal(layer.w_mu.shape)
            eps_b = rng.standard_normal(layer.b_mu.shape)
            samples.append(
                SampledWeights(
                    w=layer.w_mu + w_sigma * eps_w,
                    b=layer.b_mu + b_sigma * eps_b,
                    eps_w=eps_w,
                    eps_b=eps_b,
                )
            )
        logits, caches = forward_sampled(net, X, samples)
        logp = log_softmax(logits)
        nll_total += -logp[np.arange(batch), y].mean()

        # Backprop of the mean cross-entropy through the sampled weights.
        dz = softmax(logits)
        dz[np.arange(batch), y] -= 1.0
        dz /= batch
        for li in reversed(range(len(net.layers))):
            a_prev, _ = caches[li]
            s = samples[li]
            _, _, w_gate, b_gate = sigmas[li]
            d_w = dz.T @ a_prev
            d_b = dz.sum(axis=0)
            base = 4 * li
            grads[base + 0] += d_w
            grads[base + 1] += d_w * s.eps_w * w_gate
            grads[base + 2] += d_b
            grads[base + 3] += d_b * s.eps_b * b_gate
            if li > 0:
                da = dz @ s.w
                _, z_prev = caches[li - 1]
                prev = net.layers[li - 1]
                dz = da * (z_prev > 0.0) if prev.activation == "relu" else da
        del dz

    for g in grads:
        g /= train_mc_samples
    nll = nll_total / train_mc_samples

    kl_weight = 1.0 / (num_batches * batch)
    kl_total = 0.0
    for li, layer in enumerate(net.layers):
        w_sigma, b_sigma, w_gate, b_gate = sigmas[li]
        kl_total += float(
            (-np.log(w_sigma) + 0.5 * (w_sigma**2 + layer.w_mu**2) - 0.5).sum()
            + (-np.log(b_sigma) + 0.5 * (b_sigma**2 + layer.b_mu**2) - 0.5).sum()
        )
        base = 4 * li
        grads[base + 0] += kl_weight * layer.w_mu
        grads[base + 1] += kl_weight * (w_sigma - 1.0 / w_sigma) * w_gate
        grads[base + 2] += kl_weight * layer.b_mu
        grads[base + 3] += kl_weight * (b_sigma - 1.0 / b_sigma) * b_gate

    loss = nll + kl_weight * kl_total
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss diverged: nll={nll}, kl={kl_total}")
    return float(loss), grads


# -- Monte-Carlo prediction ---------------------------------------------------


@dataclass(frozen=True)
class UncertainPrediction:
    """Modal class over MC forward passes plus its vote fraction."""

    modal_class: int
    certainty: float
    votes: tuple[int, ...]
    num_samples: int

    def __post_init__(self):
        if sum(self.votes) != self.num_samples:
            raise ValueError("votes must sum to the sample count")
        if self.votes[self.modal_class] != round(self.certainty * self.num_samples):
            raise ValueError("certainty inconsistent with votes")


def prediction_from_votes(votes: Sequence[int]) -> UncertainPrediction:
    """Modal class with ties broken toward the lowest class index."""
    counts = np.asarray(votes, dtype=np.int64)
    total = int(counts.sum())
    modal = int(counts.argmax())  # argmax returns the first maximum
    return UncertainPrediction(
        modal_class=modal,
        certainty=float(counts[modal] / total),
        votes=tuple(int(v) for v in counts),
        num_samples=total,
    )


def _sample_weight_stacks(net: VariationalNet, T: int, rng: np.random.Generator):
    """T weight draws per layer at once; draw order: per layer, eps_w then eps_b."""
    stacks = []
    for layer in net.layers:
        eps_w = rng.standard_normal((T, *layer.w_mu.shape))
        eps_b = rng.standard_normal((T, *layer.b_mu.shape))
        w = layer.w_mu + softplus(layer.w_rho) * eps_w
        b = layer.b_mu + softplus(layer.b_rho) * eps_b
        stacks.append((w, b))
    return stacks


def predict_batch(
    net: VariationalNet, X: np.ndarray, T: int, rng: np.random.Generator
) -> list[UncertainPrediction]:
    """MC predictions for a matrix of inputs; each pass shares one weight draw
    across all rows (the fold-evaluation fast path)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.num_features:
        raise ShapeMismatch(f"input shape {X.shape} does not match {net.num_features} features")
    if T < 1:
        raise ValueError("T must be >= 1")
    stacks = _sample_weight_stacks(net, T, rng)
    h = X  # (n, in) broadcasting up to (T, n, out)
    for layer, (w, b) in zip(net.layers, stacks):
        z = np.matmul(h, w.transpose(0, 2, 1)) + b[:, np.newaxis, :]
        h = np.maximum(z, 0.0) if layer.activation == "relu" else z
    picks = h.argmax(axis=2)  # (T, n)

    C = net.num_classes
    return [
        prediction_from_votes(np.bincount(picks[:, col], minlength=C))
        for col in range(X.shape[0])
    ]


def predict(
    net: VariationalNet, x: np.ndarray, T: int = 50, rng: np.random.Generator | None = None
) -> UncertainPrediction:
    """MC prediction for a single normalized feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != net.num_features:
        raise ShapeMismatch(f"input shape {x.shape} does not match {net.num_features} features")
    if rng is None:
        rng = np.random.default_rng()
    return predict_batch(net, x[np.newaxis, :], T=T, rng=rng)[0]


def prediction_rng(model_seed: int, cycle_index: int) -> np.random.Generator:
    """Deterministic per-cycle RNG shared by the live pipeline and offline checks."""
    return np.random.default_rng(np.random.SeedSequence((int(model_seed), int(cycle_index))))


# -- serialization -------------------------------------------------------------


@dataclass
class ModelBundle:
    """Everything a predictor needs: net, its normalizer and the training seed."""

    net: VariationalNet
    normalizer: Normalizer
    train_seed: int

    @property
    def task(self) -> TaskSpec:
        if self.net.task is None:
            raise ValueError("bundle net has no task spec")
        return self.net.task


def save_model(path: Path | str, bundle: ModelBundle) -> None:
    net = bundle.net
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "task": net.task.task.value if net.task else None,
        "classes": list(net.task.classes) if net.task else None,
        "activations": [layer.activation for layer in net.layers],
        "num_layers": len(net.layers),
        "train_seed": int(bundle.train_seed),
        "normalizer_fitted_on": bundle.normalizer.fitted_on,
    }
    arrays = {
        "norm_mean": bundle.normalizer.mean,
        "norm_std": bundle.normalizer.std,
    }
    for i, layer in enumerate(net.layers):
        arrays[f"layer{i}_w_mu"] = layer.w_mu
        arrays[f"layer{i}_w_rho"] = layer.w_rho
        arrays[f"layer{i}_b_mu"] = layer.b_mu
        arrays[f"layer{i}_b_rho"] = layer.b_rho
    np.savez(path, header=json.dumps(header, sort_keys=True), **arrays)


def load_model(path: Path | str) -> ModelBundle:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header["format_version"] != MODEL_FORMAT_VERSION:
            raise ShapeMismatch(
                f"model format version {header['format_version']} != {MODEL_FORMAT_VERSION}"
            )
        layers = []
        for i in range(header["num_layers"]):
            layers.append(
                VariationalLayer(
                    w_mu=data[f"layer{i}_w_mu"],
                    w_rho=data[f"layer{i}_w_rho"],
                    b_mu=data[f"layer{i}_b_mu"],
                    b_rho=data[f"layer{i}_b_rho"],
                    activation=header["activations"][i],
                )
            )
        task = None
        if header["task"] is not None:
            task = TaskSpec(Task(header["task"]), tuple(header["classes"]))
        normalizer = Normalizer(
            mean=data["norm_mean"],
            std=data["norm_std"],
            fitted_on=header["normalizer_fitted_on"],
        )
    return ModelBundle(
        net=VariationalNet(layers, task=task),
        normalizer=normalizer,
        train_seed=header["train_seed"],
    )
