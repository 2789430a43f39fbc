"""Online one-step-ahead predictors for dual prediction.

Every predictor is an immutable :class:`PredictorState`; :func:`observe`
returns a new state and :func:`predict` never mutates. Arithmetic for MA and
LMS filters is plain Python float math in a fixed order so that two clones
fed the same sequence stay bit-identical.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Sequence

import numpy as np

__all__ = [
    "DegenerateWindowError",
    "InvalidSpecError",
    "NotWarmedUpError",
    "PredictorKind",
    "PredictorSpec",
    "PredictorState",
    "fit_arma",
    "new_predictor",
    "observe",
    "predict",
    "warmup_needed",
]

NLMS_EPS = 1e-6


class InvalidSpecError(ValueError):
    """A predictor spec violates one of its invariants."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class NotWarmedUpError(RuntimeError):
    pass


class DegenerateWindowError(ValueError):
    """Training window carries no usable variation (e.g. constant)."""


class PredictorKind(str, Enum):
    MA = "MA"
    AR = "AR"
    ARMA = "ARMA"
    LMS = "LMS"
    LMS_VSS = "LMS_VSS"


_LABEL_RE = re.compile(
    r"^\s*(?P<kind>MA|AR|ARMA|LMS|LMS[-_]VSS|NLMS)\s*(?:\((?P<args>[^)]*)\))?\s*$",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class PredictorSpec:
    kind: PredictorKind = PredictorKind.MA
    order: int = 4
    arma_p: int = 2
    arma_q: int = 2
    train_window: int = 20
    mu0: float = 0.5
    vss_alpha: float = 0.97
    vss_gamma: float = 4.8e-4
    mu_min: float = 1e-4
    mu_max: float = 1.0
    normalize: bool = True

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "kind", PredictorKind(self.kind))
        except ValueError:
            raise InvalidSpecError("kind", f"unknown predictor kind {self.kind!r}") from None
        self.validate()

    def validate(self) -> None:
        for name in ("order", "arma_p", "arma_q", "train_window"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidSpecError(name, f"must be an integer, got {value!r}")
        if self.order < 1:
            raise InvalidSpecError("order", "must be >= 1")
        if self.train_window < 1:
            raise InvalidSpecError("train_window", "must be >= 1")
        if self.arma_p < 0 or self.arma_q < 0:
            raise InvalidSpecError("arma_p" if self.arma_p < 0 else "arma_q", "must be >= 0")
        for name in ("mu0", "vss_alpha", "vss_gamma", "mu_min", "mu_max"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidSpecError(name, "must be finite")
        if self.mu0 < 0:
            raise InvalidSpecError("mu0", "must be >= 0")
        if self.kind in (PredictorKind.AR, PredictorKind.ARMA):
            p, q = self.ar_order, self.ma_order
            if p + q < 1:
                raise InvalidSpecError("arma_p", "model needs at least one AR or MA term")
            if self.train_window < p + q + 1:
                raise InvalidSpecError(
                    "train_window",
                    f"{self.train_window} is smaller than arma_p + arma_q + 1 = {p + q + 1}",
                )
        if self.kind in (PredictorKind.LMS, PredictorKind.LMS_VSS):
            if not 0 < self.mu_min <= self.mu_max:
                raise InvalidSpecError("mu_min", "need 0 < mu_min <= mu_max")
            if not self.mu_min <= self.mu0 <= self.mu_max:
                raise InvalidSpecError("mu0", f"{self.mu0} outside [mu_min, mu_max]")

    @property
    def ar_order(self) -> int:
        return self.arma_p

    @property
    def ma_order(self) -> int:
        return 0 if self.kind is PredictorKind.AR else self.arma_q

    @property
    def capacity(self) -> int:
        """Maximum history length kept by a state built from this spec."""
        if self.kind in (PredictorKind.AR, PredictorKind.ARMA):
            return self.train_window
        return self.order

    @property
    def label(self) -> str:
        if self.kind is PredictorKind.MA:
            return f"MA({self.order})"
        if self.kind is PredictorKind.AR:
            return f"AR({self.arma_p})"
        if self.kind is PredictorKind.ARMA:
            return f"ARMA({self.arma_p},{self.arma_q})"
        if self.kind is PredictorKind.LMS:
            return "LMS"
        return "LMS-VSS"

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PredictorSpec":
        return cls(**data)

    @classmethod
    def parse(cls, label: str, **overrides: Any) -> "PredictorSpec":
        """Build a spec from a short label such as ``MA(2)``, ``ARMA(2,2)`` or ``LMS-VSS``.

        ``LMS(n)`` and ``LMS-VSS(n)`` set the tap count; keyword overrides win.
        """
        m = _LABEL_RE.match(label)
        if m is None:
            raise InvalidSpecError("kind", f"cannot parse predictor label {label!r}")
        name = m["kind"].upper().replace("-", "_")
        args = [a.strip() for a in (m["args"] or "").split(",") if a.strip()]
        try:
            nums = [int(a) for a in args]
        except ValueError:
            raise InvalidSpecError("order", f"non-integer argument in {label!r}") from None
        kw: dict[str, Any] = {}
        if name == "NLMS":
            name = "LMS"
            kw["normalize"] = True
        kind = PredictorKind(name)
        if kind is PredictorKind.MA:
            if len(nums) != 1:
                raise InvalidSpecError("order", "MA needs exactly one order, e.g. MA(4)")
            kw["order"] = nums[0]
        elif kind is PredictorKind.AR:
            if len(nums) > 1:
                raise InvalidSpecError("arma_p", "AR takes a single order")
            if nums:
                kw["arma_p"] = nums[0]
            kw["arma_q"] = 0
        elif kind is PredictorKind.ARMA:
            if len(nums) not in (0, 2):
                raise InvalidSpecError("arma_p", "ARMA takes (p, q)")
            if nums:
                kw["arma_p"], kw["arma_q"] = nums
        elif nums:
            if len(nums) != 1:
                raise InvalidSpecError("order", "LMS takes a single tap count")
            kw["order"] = nums[0]
        kw.update(overrides)
        return cls(kind=kind, **kw)


@dataclass(frozen=True)
class PredictorState:
    """Full serializable state of one predictor.

    ``weights`` holds LMS taps, or ``[intercept, ar_1..ar_p, ma_1..ma_q]`` for
    AR/ARMA (empty when the last window was degenerate). ``residuals`` are the
    most recent in-window ARMA innovations, newest first.
    """

    spec: PredictorSpec
    history: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    mu: float = 0.0
    samples_seen: int = 0
    residuals: tuple[float, ...] = field(default=())

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "history": list(self.history),
            "weights": list(self.weights),
            "mu": self.mu,
            "samples_seen": self.samples_seen,
            "residuals": list(self.residuals),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PredictorState":
        return cls(
            spec=PredictorSpec.from_dict(data["spec"]),
            history=tuple(float(v) for v in data["history"]),
            weights=tuple(float(v) for v in data["weights"]),
            mu=float(data["mu"]),
            samples_seen=int(data["samples_seen"]),
            residuals=tuple(float(v) for v in data.get("residuals", ())),
        )


def new_predictor(spec: PredictorSpec) -> PredictorState:
    spec.validate()
    if spec.kind in (PredictorKind.LMS, PredictorKind.LMS_VSS):
        return PredictorState(spec=spec, weights=(0.0,) * spec.order, mu=float(spec.mu0))
    return PredictorState(spec=spec, mu=float(spec.mu0))


def warmup_needed(state: PredictorState) -> int:
    return max(0, state.spec.capacity - len(state.history))


def predict(state: PredictorState) -> float:
    spec = state.spec
    if len(state.history) < spec.capacity:
        raise NotWarmedUpError(
            f"{spec.label} needs {warmup_needed(state)} more observation(s) before predicting"
        )
    kind = spec.kind
    if kind is PredictorKind.MA:
        return sum(state.history) / spec.order
    if kind in (PredictorKind.LMS, PredictorKind.LMS_VSS):
        return _dot(state.weights, _lms_input(state.history))
    return _arma_predict(state)


def observe(state: PredictorState, value: float) -> PredictorState:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"cannot observe non-finite value {value!r}")
    spec = state.spec
    history = state.history
    warmed = len(history) >= spec.capacity
    new_history = (history + (value,))[-spec.capacity :]
    kind = spec.kind

    if kind is PredictorKind.MA or not warmed and kind in (PredictorKind.LMS, PredictorKind.LMS_VSS):
        return replace(state, history=new_history, samples_seen=state.samples_seen + 1)

    if kind in (PredictorKind.LMS, PredictorKind.LMS_VSS):
        x = _lms_input(history)
        err = value - _dot(state.weights, x)
        step = state.mu
        if spec.normalize:
            step = step / (_dot(x, x) + NLMS_EPS)
        gain = step * err
        weights = tuple(w + gain * xi for w, xi in zip(state.weights, x))
        mu = state.mu
        if kind is PredictorKind.LMS_VSS:
            mu = min(max(spec.vss_alpha * mu + spec.vss_gamma * err * err, spec.mu_min), spec.mu_max)
        return replace(
            state, history=new_history, weights=weights, mu=mu, samples_seen=state.samples_seen + 1
        )

    # AR / ARMA: refit on the most recent window once it is full.
    if len(new_history) < spec.capacity:
        return replace(state, history=new_history, samples_seen=state.samples_seen + 1)
    try:
        coefs, resid = _fit_arma_with_residuals(new_history, spec.ar_order, spec.ma_order)
    except DegenerateWindowError:
        coefs, resid = (), ()
    return replace(
        state,
        history=new_history,
        weights=coefs,
        residuals=resid,
        samples_seen=state.samples_seen + 1,
    )


def fit_arma(window: Sequence[float], p: int, q: int) -> np.ndarray:
    """Fit ``x_t = c + sum a_i x_{t-i} + sum b_j e_{t-j}`` by two-stage least squares.

    Stage one fits a long autoregression to estimate innovations; stage two
    regresses on lagged values and lagged innovations jointly (Hannan-Rissanen).
    Returns ``[c, a_1..a_p, b_1..b_q]``. Raises :class:`DegenerateWindowError`
    when the window is constant to machine precision.
    """
    coefs, _ = _fit_arma_with_residuals(tuple(float(v) for v in window), p, q)
    return np.asarray(coefs)


def _dot(a: Sequence[float], b: Sequence[float]) -> float:
    total = 0.0
    for ai, bi in zip(a, b):
        total += ai * bi
    return total


def _lms_input(history: tuple[float, ...]) -> tuple[float, ...]:
    # most recent first
    return history[::-1]


def _lagged(x: np.ndarray, rows: range, lags: int) -> np.ndarray:
    return np.array([[x[t - i] for i in range(1, lags + 1)] for t in rows]).reshape(len(rows), lags)


def _fit_arma_with_residuals(
    window: tuple[float, ...], p: int, q: int
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    n = len(window)
    if n < p + q + 1:
        raise ValueError(f"window of {n} is too short for ARMA({p},{q})")
    x = np.asarray(window, dtype=float)
    scale = max(1.0, float(np.max(np.abs(x))))
    if float(np.ptp(x)) <= 1e-9 * scale:
        raise DegenerateWindowError("constant window")

    innov = np.zeros(n)
    start = p
    if q > 0:
        m = p + q
        rows = range(m, n)
        design = np.column_stack([np.ones(len(rows)), _lagged(x, rows, m)])
        beta, *_ = np.linalg.lstsq(design, x[m:], rcond=None)
        innov[m:] = x[m:] - design @ beta
        start = max(p, m + q)
    rows = range(start, n)
    if len(rows) == 0:
        raise DegenerateWindowError("no rows left for the joint regression")
    cols = [np.ones(len(rows)), _lagged(x, rows, p)]
    if q > 0:
        cols.append(_lagged(innov, rows, q))
    design = np.column_stack(cols)
    coefs, *_ = np.linalg.lstsq(design, x[start:], rcond=None)
    if not np.all(np.isfinite(coefs)):
        raise DegenerateWindowError("non-finite coefficients")
    fitted_resid = np.zeros(n)
    fitted_resid[start:] = x[start:] - design @ coefs
    last = tuple(float(v) for v in fitted_resid[::-1][:q])
    return tuple(float(c) for c in coefs), last


def _arma_predict(state: PredictorState) -> float:
    spec = state.spec
    if not state.weights:
        return sum(state.history) / len(state.history)
    p, q = spec.ar_order, spec.ma_order
    w = state.weights
    recent = state.history[::-1]
    pred = w[0]
    for i in range(p):
        pred += w[1 + i] * recent[i]
    for j in range(q):
        pred += w[1 + p + j] * state.residuals[j]
    return pred
