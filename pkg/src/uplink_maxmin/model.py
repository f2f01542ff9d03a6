"""Problem data, solution containers and SINR evaluation.

Everything is stored in linear scale. Base-station and user indices are
0-based inside the library; the JSON files and the command line use
1-based indices.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class InvalidInstanceError(ValueError):
    """Raised when problem data violates a structural invariant."""


class UnreachableUserError(ValueError):
    """Raised when a user has no link of positive gain to any base station."""


class SolverError(RuntimeError):
    """Raised when a solver cannot produce an answer (bad bracket, LP failure...)."""


class Kind(str, enum.Enum):
    SISO = "siso"
    SIMO = "simo"


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"


def _frozen(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    """Immutable uplink problem datum.

    Build instances with :meth:`siso` or :meth:`simo`; the constructor
    does no validation on its own.

    Attributes
    ----------
    kind : Kind
    noise : ndarray, shape (N,)
        Noise power at each base station.
    budgets : ndarray, shape (K,)
        Power budget of each user.
    gains : ndarray, shape (N, K) or None
        SISO channel power gains ``g[n, k]``.
    channels : tuple of ndarray or None
        SIMO only. ``channels[n]`` has shape ``(K, M_n)`` and row ``k`` is
        the channel vector from user ``k`` to base station ``n``.
    """

    kind: Kind
    noise: np.ndarray
    budgets: np.ndarray
    gains: Optional[np.ndarray] = None
    channels: Optional[tuple] = None

    @classmethod
    def siso(cls, gains, noise, budgets) -> "NetworkInstance":
        gains = np.asarray(gains, dtype=float)
        if gains.ndim != 2:
            raise InvalidInstanceError("gains must be a 2-D array indexed [bs][user]")
        noise = np.asarray(noise, dtype=float).reshape(-1)
        budgets = np.asarray(budgets, dtype=float).reshape(-1)
        if noise.shape[0] != gains.shape[0] or budgets.shape[0] != gains.shape[1]:
            raise InvalidInstanceError(
                f"shape mismatch: gains {gains.shape}, noise {noise.shape}, budgets {budgets.shape}"
            )
        return cls(Kind.SISO, _frozen(noise), _frozen(budgets), gains=_frozen(gains))

    @classmethod
    def simo(cls, channels, noise, budgets) -> "NetworkInstance":
        """Build a SIMO instance.

        `channels` is either an array of shape (N, K, M) or a sequence of N
        arrays of shape (K, M_n) when antenna counts differ between BSs.
        """
        noise = np.asarray(noise, dtype=float).reshape(-1)
        budgets = np.asarray(budgets, dtype=float).reshape(-1)
        per_bs = []
        for h in channels:
            h = np.asarray(h, dtype=complex)
            if h.ndim != 2:
                raise InvalidInstanceError("each BS channel block must have shape (K, M_n)")
            per_bs.append(_frozen(h))
        if len(per_bs) != noise.shape[0]:
            raise InvalidInstanceError("number of channel blocks must equal len(noise)")
        if any(h.shape[0] != budgets.shape[0] for h in per_bs):
            raise InvalidInstanceError("every channel block needs one row per user")
        return cls(Kind.SIMO, _frozen(noise), _frozen(budgets), channels=tuple(per_bs))

    @property
    def n_bs(self) -> int:
        return int(self.noise.shape[0])

    @property
    def n_users(self) -> int:
        return int(self.budgets.shape[0])

    @property
    def antennas(self) -> tuple:
        if self.kind is Kind.SISO:
            return (1,) * self.n_bs
        return tuple(int(h.shape[1]) for h in self.channels)

    @cached_property
    def channel_gains(self) -> np.ndarray:
        """``g[n, k]`` for SISO, ``||h[n][k]||^2`` for SIMO."""
        if self.kind is Kind.SISO:
            return self.gains
        g = np.array([np.sum(np.abs(h) ** 2, axis=1) for h in self.channels])
        g.flags.writeable = False
        return g

    @cached_property
    def antenna_groups(self) -> list:
        """SIMO channels stacked by antenna count: ``[(bs_indices, H), ...]``
        with ``H`` of shape ``(len(bs_indices), K, M)``."""
        groups = {}
        for n, h in enumerate(self.channels):
            groups.setdefault(h.shape[1], []).append(n)
        return [(np.array(idx), np.stack([self.channels[n] for n in idx]))
                for _, idx in sorted(groups.items())]

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "noise": self.noise.tolist(),
             "budgets": self.budgets.tolist()}
        if self.kind is Kind.SISO:
            d["gains"] = self.gains.tolist()
        else:
            d["channels"] = [
                [[[float(z.real), float(z.imag)] for z in row] for row in h]
                for h in self.channels
            ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkInstance":
        try:
            kind = Kind(d["kind"])
            if kind is Kind.SISO:
                return cls.siso(d["gains"], d["noise"], d["budgets"])
            chans = []
            for bs in d["channels"]:
                arr = np.asarray(bs, dtype=float)
                if arr.ndim != 3 or arr.shape[-1] != 2:
                    raise InvalidInstanceError("channels entries must be [re, im] pairs")
                chans.append(arr[..., 0] + 1j * arr[..., 1])
            return cls.simo(chans, d["noise"], d["budgets"])
        except KeyError as exc:
            raise InvalidInstanceError(f"missing field {exc}") from None

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "NetworkInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by every solver.

    The fixed-point loops stop when ``||p(t+1) - p(t)||_2 <= tol * ||budgets||_2``,
    which for equal budgets ``P`` is ``tol * P * sqrt(K)``.
    """

    tol: float = 1e-6
    max_iters: int = 10_000
    gamma_lo: Optional[float] = None
    gamma_hi: Optional[float] = None
    gamma_tol: float = 1e-6
    feas_tol: float = 1e-8
    init_power: str = "budgets"  # "budgets" | "ones" | "seeded"
    seed: int = 0
    lp_tol: float = 1e-9

    def __post_init__(self):
        if self.tol <= 0 or self.gamma_tol <= 0 or self.feas_tol <= 0:
            raise ValueError("tol, gamma_tol and feas_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.init_power not in ("budgets", "ones", "seeded"):
            raise ValueError(f"unknown init_power {self.init_power!r}")
        lo = 0.0 if self.gamma_lo is None else self.gamma_lo
        if self.gamma_hi is not None and not lo < self.gamma_hi:
            raise ValueError("gamma_lo must be < gamma_hi")

    def initial_power(self, budgets: np.ndarray) -> np.ndarray:
        if self.init_power == "budgets":
            return np.array(budgets, dtype=float)
        if self.init_power == "ones":
            return np.ones_like(budgets, dtype=float)
        rng = np.random.default_rng(self.seed)
        return budgets * rng.uniform(0.05, 1.0, size=budgets.shape)

    def stop_threshold(self, budgets: np.ndarray) -> float:
        return self.tol * float(np.linalg.norm(budgets))


@dataclass
class SolverResult:
    """Output of every solver.

    `association` holds 0-based BS indices. `trace` lists the weighted
    infinity norm of each power step. For binary-search methods
    `iterations` is the total over all probes of the inner iterations
    (fixed-point updates or simplex pivots) and `probes` the number of
    feasibility tests.
    """

    power: np.ndarray
    association: np.ndarray
    gamma_star: float
    iterations: int
    status: Status
    trace: list = field(default_factory=list)
    beamformers: Optional[list] = None
    residual: float = float("nan")
    probes: int = 0

    @property
    def gamma_star_db(self) -> float:
        return 10.0 * math.log10(self.gamma_star) if self.gamma_star > 0 else -math.inf

    def to_dict(self) -> dict:
        d = {
            "power": self.power.tolist(),
            "association": [int(a) + 1 for a in self.association],
            "gamma_star": self.gamma_star,
            "gamma_star_db": self.gamma_star_db,
            "iterations": self.iterations,
            "probes": self.probes,
            "status": self.status.value,
            "residual": self.residual,
            "trace": list(self.trace),
        }
        if self.beamformers is not None:
            d["beamformers"] = [[[float(z.real), float(z.imag)] for z in u]
                                for u in self.beamformers]
        return d


@dataclass(frozen=True)
class ConvergenceBound:
    """Constants bounding the interference map on the normalized power set.

    ``lower[k] <= T_k(p) <= upper[k]`` whenever ``max_k p_k / budget_k = 1``;
    the normalized iteration then contracts geometrically at rate `kappa`.
    `remark_bound` is the looser data-only bound ``1 - 1/(K G SNR + 1)``.
    """

    lower: np.ndarray
    upper: np.ndarray
    kappa: float
    remark_bound: float


def weighted_inf_norm(x, budgets) -> float:
    """Return ``max_k x_k / budgets_k``."""
    x = np.asarray(x, dtype=float)
    budgets = np.asarray(budgets, dtype=float)
    if x.shape != budgets.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {budgets.shape}")
    if np.any(budgets <= 0):
        raise ValueError("budgets must be positive")
    if x.size == 0:
        return 0.0
    return float(np.max(x / budgets))


def _check_association(inst: NetworkInstance, a) -> np.ndarray:
    a = np.asarray(a, dtype=int).reshape(-1)
    if a.shape[0] != inst.n_users:
        raise ValueError(f"association has {a.shape[0]} entries, expected {inst.n_users}")
    if np.any(a < 0) or np.any(a >= inst.n_bs):
        raise ValueError("association entries must be valid 0-based BS indices")
    return a


def _check_power(inst: NetworkInstance, p) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != inst.n_users:
        raise ValueError(f"power vector has {p.shape[0]} entries, expected {inst.n_users}")
    return p


def sinr_siso(inst: NetworkInstance, p, a) -> np.ndarray:
    """Per-user SINR for SISO powers `p` and association `a`."""
    if inst.kind is not Kind.SISO:
        raise ValueError("sinr_siso needs a SISO instance")
    p = _check_power(inst, p)
    a = _check_association(inst, a)
    g = inst.gains[a]  # row k: gains from every user into user k's BS
    own = g[np.arange(inst.n_users), np.arange(inst.n_users)] * p
    interference = g @ p - own
    return own / (inst.noise[a] + interference)


def sinr_simo(inst: NetworkInstance, p, a, beamformers: Sequence) -> np.ndarray:
    """Per-user SINR with receive vectors ``beamformers[k]`` at BS ``a[k]``."""
    if inst.kind is not Kind.SIMO:
        raise ValueError("sinr_simo needs a SIMO instance")
    p = _check_power(inst, p)
    a = _check_association(inst, a)
    if len(beamformers) != inst.n_users:
        raise ValueError("need one beamformer per user")
    out = np.empty(inst.n_users)
    for k in range(inst.n_users):
        h = inst.channels[a[k]]
        u = np.asarray(beamformers[k], dtype=complex).reshape(-1)
        if u.shape[0] != h.shape[1]:
            raise ValueError(
                f"beamformer {k} has length {u.shape[0]}, BS {a[k]} has {h.shape[1]} antennas"
            )
        power_gain = np.abs(h.conj() @ u) ** 2  # |u^H h_j|^2 for every j
        signal = p[k] * power_gain[k]
        interference = p @ power_gain - signal
        out[k] = signal / (inst.noise[a[k]] + interference)
    return out


def validate_instance(inst: NetworkInstance) -> list:
    """List every invariant violation; an empty list means the instance is valid."""
    problems = []
    if inst.n_bs < 1 or inst.n_users < 1:
        problems.append("need at least one base station and one user")
    if not np.all(np.isfinite(inst.noise)) or np.any(inst.noise <= 0):
        problems.append("noise must be positive")
    if not np.all(np.isfinite(inst.budgets)) or np.any(inst.budgets <= 0):
        problems.append("budgets must be positive")
    if inst.kind is Kind.SISO:
        g = inst.gains
        if g is None or g.shape != (inst.n_bs, inst.n_users):
            problems.append("gains must have shape (N, K)")
            return problems
        if not np.all(np.isfinite(g)):
            problems.append("gains must be finite")
        if np.any(g < 0):
            problems.append("gains must be nonnegative")
        reach = np.any(g > 0, axis=0)
    else:
        if inst.channels is None or len(inst.channels) != inst.n_bs:
            problems.append("need one channel block per base station")
            return problems
        if not all(np.all(np.isfinite(h)) for h in inst.channels):
            problems.append("channel entries must be finite")
        reach = np.any(inst.channel_gains > 0, axis=0)
    for k in np.flatnonzero(~reach):
        problems.append(f"unreachable user {k + 1}")
    return problems


def require_valid(inst: NetworkInstance) -> None:
    problems = validate_instance(inst)
    if problems:
        if all(p.startswith("unreachable user") for p in problems):
            raise UnreachableUserError("; ".join(problems))
        raise InvalidInstanceError("; ".join(problems))
