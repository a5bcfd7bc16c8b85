"""Kernel SVMs and the template-vector SVM.

The template SVM never compares an input against support vectors. Each
input x is mapped to P similarities ``phi_p(x) = |m_p . x|`` against fixed
template vectors m_p (the crossbar columns), and the kernel is synthesised
as the inner product of those feature rows::

    K(a, b) = sum_p phi_p(a) * phi_p(b)

Training solves the usual soft-margin dual on that kernel. Afterwards the
support-vector sum folds into one weight per template,

    w_p = sum_s alpha_s * y_s * phi_p(x_s)
    f(x) = sum_p w_p * phi_p(x) + b

so the deployed model stores P templates and c * P weights whatever the
number of support vectors.
"""
from __future__ import annotations

import json
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .crossbar import (
    CrossbarArray,
    ReadoutConfig,
    crossbar_from_dict,
    crossbar_to_dict,
    ideal_mvm,
    read_mvm,
)
from .data import Dataset, Normalization
from .errors import ConfigurationError, DataError, ParameterError, SchemaError, ShapeError

log = logging.getLogger(__name__)

TAU = 1e-12
DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 1000
MODEL_FORMAT_VERSION = 1


# --------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"  # "rbf" | "linear" | "template"
    gamma: float | None = None
    readout: ReadoutConfig = ReadoutConfig()

    def __post_init__(self):
        if self.kind not in ("rbf", "linear", "template"):
            raise ParameterError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and (self.gamma is None or not self.gamma > 0):
            raise ParameterError(f"rbf kernel needs gamma > 0, got {self.gamma!r}")

    @classmethod
    def rbf(cls, gamma: float) -> "KernelSpec":
        return cls("rbf", gamma=gamma)

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    @classmethod
    def template(cls, readout: ReadoutConfig = ReadoutConfig()) -> "KernelSpec":
        return cls("template", readout=readout)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "gamma": self.gamma,
            "readout": {
                "noise_enabled": self.readout.noise_enabled,
                "absolute_value": self.readout.absolute_value,
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KernelSpec":
        return cls(doc["kind"], gamma=doc.get("gamma"), readout=ReadoutConfig(**doc.get("readout", {})))


def phi_features(x, templates, cfg: ReadoutConfig = ReadoutConfig(), seed=None) -> np.ndarray:
    """Template similarities for one input (d,) -> (P,) or a batch (n, d) -> (n, P).

    ``templates`` is either a programmed CrossbarArray (hardware readout,
    quantised and possibly noisy) or a plain d x P matrix (ideal readout).
    """
    if isinstance(templates, CrossbarArray):
        return read_mvm(templates, x, cfg, seed)
    return ideal_mvm(templates, x, absolute_value=cfg.absolute_value)


def synthesize_kernel(A, B, templates, cfg: ReadoutConfig = ReadoutConfig(), seed=None) -> np.ndarray:
    """K[i, j] = sum_p phi_p(a_i) * phi_p(b_j), a Gram matrix of feature rows."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"A has {A.shape[1]} features, B has {B.shape[1]}")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    phi_a = phi_features(A, templates, cfg, rng)
    phi_b = phi_a if B is A else phi_features(B, templates, cfg, rng)
    return phi_a @ phi_b.T


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def kernel_matrix(A, B, spec: KernelSpec, templates=None, seed=None) -> np.ndarray:
    if spec.kind == "rbf":
        return rbf_kernel(A, B, spec.gamma)
    if spec.kind == "linear":
        return np.atleast_2d(A) @ np.atleast_2d(B).T
    if templates is None:
        raise ConfigurationError("template kernel needs the template matrix or crossbar")
    return synthesize_kernel(A, B, templates, spec.readout, seed)


# --------------------------------------------------------------------------
# dual solver


@dataclass
class DualSolution:
    alpha: np.ndarray  # (N,) in [0, C], unsigned
    bias: float
    converged: bool
    n_iter: int
    gap: float  # final maximal KKT violation m - M
    objective: float


# above this many training points kernels are evaluated column by column
DENSE_KERNEL_LIMIT = 5000
COLUMN_CACHE = 512


class KernelColumns:
    """Kernel matrix evaluated one column at a time, with a small LRU cache.

    ``train_dual`` only ever touches two columns per update, so large
    training sets never need the N x N matrix in memory.
    """

    def __init__(self, n: int, cache: int = COLUMN_CACHE):
        self.n = n
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._cache_size = cache

    def _compute(self, i: int) -> np.ndarray:
        raise NotImplementedError

    def diag(self) -> np.ndarray:
        raise NotImplementedError

    def quad(self, v: np.ndarray) -> float:
        """v^T K v."""
        raise NotImplementedError

    def column(self, i: int) -> np.ndarray:
        col = self._cache.get(i)
        if col is None:
            col = self._compute(i)
            self._cache[i] = col
            if len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        else:
            self._cache.move_to_end(i)
        return col


class FeatureGram(KernelColumns):
    """K = F F^T for feature rows F (the synthesised template kernel)."""

    def __init__(self, features, cache: int = COLUMN_CACHE):
        self.features = np.asarray(features, dtype=float)
        super().__init__(self.features.shape[0], cache)

    def _compute(self, i):
        return self.features @ self.features[i]

    def diag(self):
        return np.einsum("ij,ij->i", self.features, self.features)

    def quad(self, v):
        u = self.features.T @ v
        return float(u @ u)


class RbfColumns(KernelColumns):
    def __init__(self, X, gamma: float, cache: int = COLUMN_CACHE):
        self.X = np.asarray(X, dtype=float)
        self.gamma = gamma
        self._sq = np.einsum("ij,ij->i", self.X, self.X)
        super().__init__(self.X.shape[0], cache)

    def _compute(self, i):
        d2 = self._sq + self._sq[i] - 2.0 * self.X @ self.X[i]
        return np.exp(-self.gamma * np.maximum(d2, 0.0))

    def diag(self):
        return np.ones(self.n)

    def quad(self, v, block: int = 2048):
        total = 0.0
        for s in range(0, self.n, block):
            total += float(v[s : s + block] @ (rbf_kernel(self.X[s : s + block], self.X, self.gamma) @ v))
        return total


def training_kernel(X, spec: "KernelSpec", templates=None, phi=None):
    """Dense Gram matrix for small N, a column-on-demand kernel otherwise."""
    n = (phi if phi is not None else X).shape[0]
    dense = n <= DENSE_KERNEL_LIMIT
    if phi is not None or spec.kind in ("template", "linear"):
        F = phi if phi is not None else (X if spec.kind == "linear" else phi_features(X, templates, spec.readout))
        return F @ F.T if dense else FeatureGram(F)
    return rbf_kernel(X, X, spec.gamma) if dense else RbfColumns(X, spec.gamma)


def dual_objective(K, y, alpha) -> float:
    """sum(alpha) - 1/2 (alpha*y)^T K (alpha*y), the quantity the solver maximises."""
    ay = np.asarray(alpha) * np.asarray(y)
    quad = K.quad(ay) if isinstance(K, KernelColumns) else float(ay @ np.asarray(K) @ ay)
    return float(np.sum(alpha) - 0.5 * quad)


def _bias_from_gradient(y, G, alpha, C) -> float:
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else math.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -math.inf
        if math.isinf(ub):
            rho = lb
        elif math.isinf(lb):
            rho = ub
        else:
            rho = 0.5 * (ub + lb)
    return -float(rho)


def train_dual(
    K,
    y,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> DualSolution:
    """Soft-margin SVM dual by sequential minimal optimisation.

    Each step updates the pair with the largest first-order KKT violation
    for i and the best second-order gain for j (the LIBSVM working-set
    rule). Stops once the violation gap ``m - M`` drops to ``tol``, which
    puts every point within ``tol`` of its margin condition. At most
    ``max_passes * N`` pair updates are made; on running out the current
    (feasible, best-so-far) iterate is returned with ``converged=False``.
    """
    y = np.asarray(y, dtype=float)
    if isinstance(K, KernelColumns):
        n = K.n
        diag = K.diag()
        column = K.column
    else:
        K = np.asarray(K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ShapeError(f"kernel matrix must be square, got {K.shape}")
        n = K.shape[0]
        diag = np.diag(K).copy()

        def column(i):
            return K[i]
    if y.shape != (n,):
        raise ShapeError(f"{y.shape} labels for a {n} x {n} kernel")
    if not np.all(np.abs(y) == 1):
        raise ParameterError("labels must be +1 / -1")
    if not C > 0:
        raise ParameterError(f"C must be > 0, got {C}")
    if not isinstance(K, KernelColumns) and not np.allclose(
        K, K.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(K).max(initial=0))
    ):
        raise ParameterError("kernel matrix is not symmetric")

    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of 1/2 a^T Q a - e^T a with Q = yy^T * K
    max_iter = max(1, max_passes) * n
    converged = False
    gap = math.inf
    it = 0
    while it < max_iter:
        minus_yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            gap = -math.inf
            converged = True
            break
        i = int(np.argmax(np.where(up, minus_yG, -np.inf)))
        m = minus_yG[i]
        gap = m - np.min(minus_yG[low])
        if gap <= tol:
            converged = True
            break
        Ki = column(i)
        cand = low & (minus_yG < m)
        b = m - minus_yG
        a = diag[i] + diag - 2.0 * Ki
        a = np.where(a > 0, a, TAU)
        j = int(np.argmin(np.where(cand, -(b * b) / a, np.inf)))

        ai, aj = alpha[i], alpha[j]
        quad = diag[i] + diag[j] - 2.0 * Ki[j]
        if quad <= 0:
            quad = TAU
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        dai, daj = ni - ai, nj - aj
        alpha[i], alpha[j] = ni, nj
        G += (y * y[i] * dai) * Ki + (y * y[j] * daj) * column(j)
        it += 1

    if not converged:
        log.warning("dual solver stopped after %d updates with KKT gap %.3g > tol %.3g", it, gap, tol)
    bias = _bias_from_gradient(y, G, alpha, C)
    return DualSolution(alpha, bias, converged, it, float(gap), dual_objective(K, y, alpha))


# --------------------------------------------------------------------------
# trained models


@dataclass
class TrainedSvm:
    support_vectors: np.ndarray  # (S, d)
    alphas: np.ndarray  # (S,) label-folded alpha_s * y_s
    bias: float
    kernel: KernelSpec
    C: float = DEFAULT_C
    support_index: np.ndarray | None = None  # rows of the training set
    converged: bool = True

    def __post_init__(self):
        self.support_vectors = np.atleast_2d(np.asarray(self.support_vectors, dtype=float))
        self.alphas = np.asarray(self.alphas, dtype=float).reshape(-1)
        if self.alphas.size == 0:
            self.support_vectors = self.support_vectors.reshape(0, self.support_vectors.shape[-1])
        if self.support_vectors.shape[0] != self.alphas.size:
            raise ShapeError("one alpha per support vector")
        if np.any(np.abs(self.alphas) > self.C * (1 + 1e-12)):
            raise ParameterError("|alpha| exceeds C")

    @property
    def n_support(self) -> int:
        return self.alphas.size


def fit_binary(
    X,
    y,
    kernel: KernelSpec,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
    templates=None,
    K=None,
) -> TrainedSvm:
    """Train one +1/-1 problem and keep only the points with alpha > 0."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if K is None:
        K = training_kernel(X, kernel, templates)
    sol = train_dual(K, y, C, tol, max_passes)
    sv = np.flatnonzero(sol.alpha > 0)
    return TrainedSvm(X[sv], sol.alpha[sv] * y[sv], sol.bias, kernel, C, sv, sol.converged)


def decision_function(svm: TrainedSvm, X, templates=None, seed=None) -> np.ndarray:
    """sum_s alpha_s K(x_s, x) + b evaluated directly against the support vectors."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if svm.n_support == 0:
        return np.full(X.shape[0], svm.bias)
    return kernel_matrix(X, svm.support_vectors, svm.kernel, templates, seed) @ svm.alphas + svm.bias


@dataclass
class TemplateSvmModel:
    """Deployable template SVM: P templates, a c x P weight matrix, c biases."""

    templates: np.ndarray  # (d, P) target memductances
    weights: np.ndarray  # (c, P)
    biases: np.ndarray  # (c,)
    readout: ReadoutConfig = ReadoutConfig()
    crossbar: CrossbarArray | None = None
    label_names: tuple[str, ...] | None = None
    normalization: Normalization | None = None
    n_support: tuple[int, ...] = ()
    converged: bool = True

    def __post_init__(self):
        self.templates = np.atleast_2d(np.asarray(self.templates, dtype=float))
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.biases = np.atleast_1d(np.asarray(self.biases, dtype=float))
        validate_model(self)

    @property
    def n_templates(self) -> int:
        return self.templates.shape[1]

    @property
    def n_features(self) -> int:
        return self.templates.shape[0]

    @property
    def n_classes(self) -> int:
        return max(2, self.weights.shape[0])

    @property
    def source(self):
        """What phi is read from: the programmed crossbar if any, else the ideal matrix."""
        return self.crossbar if self.crossbar is not None else self.templates


def validate_model(model: TemplateSvmModel) -> None:
    d, P = model.templates.shape
    c = model.weights.shape[0]
    if model.weights.shape[1] != P:
        raise ShapeError(f"weights have {model.weights.shape[1]} columns for {P} templates")
    if model.biases.shape != (c,):
        raise ShapeError(f"{model.biases.size} biases for {c} weight rows")
    if model.crossbar is not None and model.crossbar.shape != (d, P):
        raise ShapeError(f"crossbar is {model.crossbar.shape}, templates are {(d, P)}")
    if model.label_names is not None and len(model.label_names) != max(2, c):
        raise ShapeError(f"{len(model.label_names)} label names for {max(2, c)} classes")
    if model.normalization is not None and model.normalization.mins.shape != (d,):
        raise ShapeError("normalization does not match the feature dimension")
    if not (np.all(np.isfinite(model.weights)) and np.all(np.isfinite(model.biases))):
        raise ParameterError("non-finite weights or biases")


def fold_weights(
    svm: TrainedSvm,
    templates,
    cfg: ReadoutConfig | None = None,
    seed=None,
    phi_support=None,
) -> TemplateSvmModel:
    """Collapse the support-vector expansion into one weight per template.

    ``phi_support`` may pass the (S, P) feature rows already read during
    training so the fold reuses exactly those readouts; otherwise they are
    read again from ``templates`` (this is the calibration read when
    ``templates`` is a programmed crossbar).
    """
    if svm.kernel.kind != "template":
        raise ConfigurationError(f"cannot fold a {svm.kernel.kind!r}-kernel SVM onto templates")
    cfg = svm.kernel.readout if cfg is None else cfg
    P = templates_matrix(templates).shape[1]
    if phi_support is None:
        phi_support = (
            phi_features(svm.support_vectors, templates, cfg, seed) if svm.n_support else np.zeros((0, P))
        )
    phi_support = np.asarray(phi_support, dtype=float).reshape(svm.n_support, P)
    w = svm.alphas @ phi_support
    return TemplateSvmModel(
        templates=templates_matrix(templates),
        weights=w[None, :],
        biases=np.array([svm.bias]),
        readout=cfg,
        crossbar=templates if isinstance(templates, CrossbarArray) else None,
        n_support=(svm.n_support,),
        converged=svm.converged,
    )


def templates_matrix(templates) -> np.ndarray:
    """Target matrix for a crossbar (its ladder levels), or the matrix itself."""
    if isinstance(templates, CrossbarArray):
        return templates.ladder[templates.state_index]
    return np.asarray(templates, dtype=float)


def scores_of(model: TemplateSvmModel, phi: np.ndarray) -> np.ndarray:
    """Per-class scores from feature rows; a single-row model gets [s, -s]."""
    s = phi @ model.weights.T + model.biases
    if model.weights.shape[0] == 1:
        s = np.concatenate([s, -s], axis=-1)
    return s


def predict_batch(model: TemplateSvmModel, X, seed=None) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise ShapeError(f"input has {X.shape[1]} features, model expects {model.n_features}")
    scores = scores_of(model, phi_features(X, model.source, model.readout, seed))
    # argmax returns the first maximum, i.e. ties go to the lower class index
    return np.argmax(scores, axis=1), scores


def predict(model: TemplateSvmModel, x, seed=None) -> tuple[int, np.ndarray]:
    """Class index and per-class scores for one normalised input vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError(f"predict takes one vector, got shape {x.shape}; use predict_batch")
    classes, scores = predict_batch(model, x[None, :], seed)
    return int(classes[0]), scores[0]


def accuracy(model: TemplateSvmModel, data: Dataset, seed=None) -> float:
    classes, _ = predict_batch(model, data.features, seed)
    return float(np.mean(classes == data.labels))


def one_vs_rest_targets(labels: np.ndarray, n_classes: int) -> list[np.ndarray]:
    """+1/-1 targets per trained problem; two classes need only the class-0 problem."""
    counts = np.bincount(labels, minlength=n_classes)
    missing = [k for k in range(n_classes) if counts[k] == 0]
    if missing:
        raise DataError(f"classes {missing} have no training samples")
    rows = 1 if n_classes == 2 else n_classes
    return [np.where(labels == r, 1.0, -1.0) for r in range(rows)]


def train_multiclass(
    data: Dataset,
    templates,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    cfg: ReadoutConfig = ReadoutConfig(),
    max_passes: int = DEFAULT_MAX_PASSES,
    seed=None,
    direct: bool = False,
) -> TemplateSvmModel:
    """One-vs-rest template SVM sharing one synthesised kernel matrix.

    The training features are read once from ``templates``; with a
    programmed crossbar this read is the calibration step, so the folded
    weights absorb the device quantisation and programming offsets.

    ``direct=True`` trains each problem as a linear SVM on the feature rows
    and takes its primal weight vector instead of folding; the two routes
    agree up to rounding.
    """
    phi = phi_features(data.features, templates, cfg, seed)
    K = training_kernel(phi, KernelSpec.linear())
    rows, biases, n_sv = [], [], []
    converged = True
    for y in one_vs_rest_targets(data.labels, data.n_classes):
        if direct:
            lin = fit_binary(phi, y, KernelSpec.linear(), C, tol, max_passes, K=K)
            w = lin.alphas @ lin.support_vectors if lin.n_support else np.zeros(phi.shape[1])
            rows.append(w)
            biases.append(lin.bias)
            n_sv.append(lin.n_support)
            converged &= lin.converged
            continue
        sol = train_dual(K, y, C, tol, max_passes)
        sv = np.flatnonzero(sol.alpha > 0)
        svm = TrainedSvm(
            data.features[sv], sol.alpha[sv] * y[sv], sol.bias, KernelSpec.template(cfg), C, sv, sol.converged
        )
        folded = fold_weights(svm, templates, cfg, phi_support=phi[sv])
        rows.append(folded.weights[0])
        biases.append(folded.biases[0])
        n_sv.append(svm.n_support)
        converged &= sol.converged
    weights = np.vstack(rows)
    biases = np.array(biases)
    if data.n_classes == 2:
        weights = np.vstack([weights, -weights])
        biases = np.concatenate([biases, -biases])
    return TemplateSvmModel(
        templates=templates_matrix(templates),
        weights=weights,
        biases=biases,
        readout=cfg,
        crossbar=templates if isinstance(templates, CrossbarArray) else None,
        label_names=data.label_names,
        normalization=data.normalization,
        n_support=tuple(n_sv),
        converged=converged,
    )


# --------------------------------------------------------------------------
# traditional kernel SVM baseline


@dataclass
class KernelSvmModel:
    machines: list[TrainedSvm]
    label_names: tuple[str, ...]
    normalization: Normalization | None = None

    @property
    def n_support(self) -> int:
        """Distinct training points that are support vectors in any machine."""
        idx = set()
        for m in self.machines:
            idx.update(int(i) for i in m.support_index)
        return len(idx)

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.machines)


def default_gamma(n_features: int) -> float:
    return 1.0 / n_features


def train_kernel_svm(
    data: Dataset,
    kernel: KernelSpec | None = None,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> KernelSvmModel:
    """One-vs-rest SVM with an ordinary kernel (rbf with gamma = 1/d by default)."""
    kernel = kernel or KernelSpec.rbf(default_gamma(data.n_features))
    K = training_kernel(data.features, kernel)
    machines = [
        fit_binary(data.features, y, kernel, C, tol, max_passes, K=K)
        for y in one_vs_rest_targets(data.labels, data.n_classes)
    ]
    return KernelSvmModel(machines, data.label_names, data.normalization)


def predict_kernel_batch(model: KernelSvmModel, X) -> tuple[np.ndarray, np.ndarray]:
    scores = np.column_stack([decision_function(m, X) for m in model.machines])
    if len(model.machines) == 1:
        scores = np.column_stack([scores[:, 0], -scores[:, 0]])
    return np.argmax(scores, axis=1), scores


def kernel_accuracy(model: KernelSvmModel, data: Dataset) -> float:
    classes, _ = predict_kernel_batch(model, data.features)
    return float(np.mean(classes == data.labels))


# --------------------------------------------------------------------------
# model files


def model_to_dict(model: TemplateSvmModel) -> dict:
    doc = {
        "format": "memsvm-template-model",
        "version": MODEL_FORMAT_VERSION,
        "kernel": KernelSpec.template(model.readout).to_dict(),
        "templates": model.templates.tolist(),
        "weights": model.weights.tolist(),
        "biases": model.biases.tolist(),
        "label_names": list(model.label_names) if model.label_names is not None else None,
        "normalization": model.normalization.to_dict() if model.normalization is not None else None,
        "n_support": list(model.n_support),
        "converged": model.converged,
        "crossbar": crossbar_to_dict(model.crossbar) if model.crossbar is not None else None,
    }
    return doc


def model_from_dict(doc: dict) -> TemplateSvmModel:
    if doc.get("format") != "memsvm-template-model":
        raise SchemaError("not a template model document")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise SchemaError(f"unsupported model version {doc.get('version')!r}")
    kernel = KernelSpec.from_dict(doc["kernel"])
    if kernel.kind != "template":
        raise SchemaError("model kernel must be of kind 'template'")
    try:
        return TemplateSvmModel(
            templates=np.asarray(doc["templates"], dtype=float),
            weights=np.asarray(doc["weights"], dtype=float),
            biases=np.asarray(doc["biases"], dtype=float),
            readout=kernel.readout,
            crossbar=crossbar_from_dict(doc["crossbar"]) if doc.get("crossbar") else None,
            label_names=tuple(doc["label_names"]) if doc.get("label_names") else None,
            normalization=Normalization.from_dict(doc["normalization"]) if doc.get("normalization") else None,
            n_support=tuple(doc.get("n_support", ())),
            converged=bool(doc.get("converged", True)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"invalid model document: {exc}") from exc


def save_model(model: TemplateSvmModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1, sort_keys=True) + "\n")


def load_model(path) -> TemplateSvmModel:
    return model_from_dict(json.loads(Path(path).read_text()))
