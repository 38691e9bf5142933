"""Deterministic builders for the model families used in tests and sweeps.

Indices in ``selected_indices`` and lattice windows are 1-based, matching the
JSON configuration schema.
"""
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ._validation import check_count, check_positive
from .engine import ZenoModel
from .exceptions import ValidationError
from .spectral import SpectralOperator, SubspaceProjection, random_unitary

MODEL_KINDS = ("random", "commuting", "laplacian", "momentum-circle")


def random_model(dim, rank, spectral_radius=1.0, seed=0):
    """``H = U diag(lam) U*`` with ``lam ~ U[0, radius]``; ``V`` from an independent unitary."""
    dim = check_count(dim, "dim")
    rank = check_count(rank, "rank")
    if rank > dim:
        raise ValidationError(f"rank {rank} exceeds dim {dim}")
    radius = check_positive(spectral_radius, "spectral_radius")
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.0, radius, size=dim)
    U = random_unitary(dim, rng)
    W = random_unitary(dim, rng)
    order = np.argsort(lam, kind="stable")
    H = SpectralOperator(lam[order], U[:, order], non_negative=True)
    return ZenoModel(H, SubspaceProjection(W[:, :rank]), name=f"random-d{dim}-r{rank}-s{seed}")


def commuting_model(dim, selected_indices, spectrum=None, seed=0, spectral_radius=1.0):
    """``V`` spans eigenvectors of ``H`` at ``selected_indices`` (1-based), so ``PH = HP``.

    ``spectrum`` lists the eigenvalue attached to each eigenvector index; it
    defaults to seeded uniform values on ``[0, spectral_radius]``.
    """
    dim = check_count(dim, "dim")
    idx = [check_count(i, "index") for i in selected_indices]
    if not idx:
        raise ValidationError("selected_indices must be non-empty")
    if max(idx) > dim or len(set(idx)) != len(idx):
        raise ValidationError(f"selected indices must be distinct and within 1..{dim}")
    rng = np.random.default_rng(seed)
    if spectrum is None:
        spectrum = rng.uniform(0.0, check_positive(spectral_radius, "spectral_radius"), size=dim)
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.shape != (dim,) or np.any(spectrum < 0) or not np.all(np.isfinite(spectrum)):
        raise ValidationError(f"spectrum must hold {dim} finite non-negative values")
    U = random_unitary(dim, rng)
    order = np.argsort(spectrum, kind="stable")
    H = SpectralOperator(spectrum[order], U[:, order], non_negative=True)
    V = U[:, [i - 1 for i in idx]]
    name = f"commuting-d{dim}-i{'.'.join(map(str, idx))}-s{seed}"
    return ZenoModel(H, SubspaceProjection(V), name=name, commuting=True)


def lattice_laplacian_model(N, window):
    """Dirichlet second difference on ``N`` sites, compressed to the sites ``window = (lo, hi)``.

    Eigenpairs are the sine modes ``2 - 2 cos(k pi / (N + 1))``.
    """
    N = check_count(N, "N", minimum=4)
    lo, hi = (check_count(w, "window bound") for w in window)
    if not 1 <= lo <= hi <= N:
        raise ValidationError(f"window must satisfy 1 <= lo <= hi <= {N}, got {window}")
    k = np.arange(1, N + 1)
    lam = 2.0 - 2.0 * np.cos(k * np.pi / (N + 1))
    j = np.arange(1, N + 1)[:, None]
    U = np.sqrt(2.0 / (N + 1)) * np.sin(j * k[None, :] * np.pi / (N + 1))
    H = SpectralOperator(lam, U.astype(np.complex128), non_negative=True)
    V = np.eye(N, dtype=np.complex128)[:, lo - 1:hi]
    return ZenoModel(H, SubspaceProjection(V), name=f"laplacian-N{N}-w{lo}.{hi}")


def momentum_circle_model(N, window=None):
    """Momentum operator ``-i d/dx`` on a circle of length ``2 pi`` sampled at ``N`` points.

    Eigenvalues are the integer frequencies in ``[-N/2, N/2)`` with plane-wave
    eigenvectors, so ``exp(-isH)`` is an exact cyclic shift whenever ``s`` is
    a multiple of the grid step ``2 pi / N``. ``window = (a, b)`` in chart
    coordinates selects the grid points of ``[a, b]``; it defaults to the
    middle half of the circle. The model is Hermitian but not semibounded.
    """
    N = check_count(N, "N", minimum=64)
    if N & (N - 1):
        raise ValidationError(f"N must be a power of two, got {N}")
    dx = 2.0 * np.pi / N
    x = np.arange(N) * dx
    chart_end = x[-1]
    a, b = (0.5 * np.pi, 1.5 * np.pi) if window is None else map(float, window)
    if not 0.0 < a < b < chart_end:
        raise ValidationError(f"window [{a}, {b}] must lie strictly inside (0, {chart_end})")
    freqs = np.arange(-N // 2, N // 2)
    U = np.exp(1j * np.outer(x, freqs)) / np.sqrt(N)
    H = SpectralOperator(freqs.astype(np.float64), U, non_negative=False)
    sites = np.nonzero((x >= a - 1e-12) & (x <= b + 1e-12))[0]
    if sites.size == 0:
        raise ValidationError("window contains no grid points")
    V = np.eye(N, dtype=np.complex128)[:, sites]
    meta = {"grid_step": dx, "window": (a, b), "chart_end": chart_end, "grid": x, "sites": sites}
    return ZenoModel(
        H,
        SubspaceProjection(V),
        name=f"momentum-N{N}",
        non_negative=False,
        out_of_assumption=True,
        meta=meta,
    )


@dataclass(frozen=True)
class ModelSpec:
    """Serializable description of a model (the ``model`` block of a config)."""

    kind: str
    dim: int
    rank: Optional[int] = None
    window: Optional[tuple] = None
    indices: Optional[tuple] = None
    spectrum: Optional[tuple] = None
    spectral_radius: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}; known: {', '.join(MODEL_KINDS)}")
        check_count(self.dim, "dim")
        check_positive(self.spectral_radius, "spectral_radius")
        if self.rank is not None and not 1 <= self.rank <= self.dim:
            raise ValidationError(f"rank must lie in 1..{self.dim}")
        if not isinstance(self.seed, int) or not -(2 ** 63) <= self.seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit integer")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ValidationError("model spec must be a JSON object")
        unknown = set(d) - {"kind", "dim", "rank", "window", "indices", "spectrum", "spectral_radius", "seed"}
        if unknown:
            raise ValidationError(f"unknown model spec keys: {sorted(unknown)}")
        try:
            kw = dict(d)
            for key in ("window", "indices", "spectrum"):
                if kw.get(key) is not None:
                    kw[key] = tuple(kw[key])
            return cls(**kw)
        except TypeError as exc:
            raise ValidationError(f"bad model spec: {exc}") from exc

    def to_dict(self):
        d = asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items() if v is not None}

    def build(self):
        if self.kind == "random":
            return random_model(self.dim, self.rank or self.dim, self.spectral_radius, self.seed)
        if self.kind == "commuting":
            indices = self.indices or tuple(range(1, (self.rank or self.dim) + 1))
            return commuting_model(self.dim, indices, self.spectrum, self.seed, self.spectral_radius)
        if self.kind == "laplacian":
            return lattice_laplacian_model(self.dim, self.window or (1, self.dim))
        return momentum_circle_model(self.dim, self.window)


def build_model(spec):
    """Build a :class:`ZenoModel` from a :class:`ModelSpec` or its dict form."""
    if isinstance(spec, dict):
        spec = ModelSpec.from_dict(spec)
    return spec.build()


def describe_model(model):
    """Plain-dict summary used by ``models describe``."""
    lam = model.H.eigenvalues
    info = {
        "name": model.name,
        "dim": model.dim,
        "rank": model.rank,
        "non_negative": model.non_negative,
        "commuting": model.commuting,
        "out_of_assumption": model.out_of_assumption,
        "spectrum_min": float(lam[0]),
        "spectrum_max": float(lam[-1]),
        "commutator_norm": model.commutator_norm(),
    }
    if model.non_negative:
        from .engine import zeno_generator
        from .spectral import operator_norm

        info["generator_norm"] = operator_norm(zeno_generator(model))
    return info


def momentum_test_vectors(model, t):
    """Columns: the normalized indicator of ``[b - t/2, b]`` and a smooth interior bump.

    The bump is centred in the window with width a tenth of the window length,
    so for small ``t`` its support stays inside ``[a, b]``.
    """
    if "sites" not in model.meta:
        raise ValidationError("momentum test vectors need a momentum-circle model")
    a, b = model.meta["window"]
    xs = model.meta["grid"][model.meta["sites"]]
    edge = ((xs >= b - 0.5 * t - 1e-12) & (xs <= b + 1e-12)).astype(np.complex128)
    if not edge.any():
        edge[-1] = 1.0
    width = 0.1 * (b - a)
    bump = np.exp(-(((xs - 0.5 * (a + b)) / (0.5 * width)) ** 2)).astype(np.complex128)
    vectors = np.column_stack([edge, bump])
    return vectors / np.linalg.norm(vectors, axis=0)
