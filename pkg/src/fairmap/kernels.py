"""Hot evaluation kernel: fused forward pass + per-group prediction counts.

Scoring one candidate weight vector means a forward pass over every case plus
group-restricted counting of positive predictions, repeated for each of the
~1e5 candidates of a search run, so this is where nearly all time goes. Two
interchangeable implementations ship:

* a numba ``@njit`` kernel (default when numba imports), and
* a pure-numpy fallback.

``FAIRMAP_BACKEND=auto|numba|numpy`` picks the default at import time;
``benchmarks/bench_backends.py`` compares the two. Both return identical
integer counts (the float probabilities may differ in the last ulp, which
only matters if one lands exactly on the decision threshold).
"""

from __future__ import annotations

import os

import numpy as np

from . import mlp
from .errors import ConfigError

_ENV_VAR = "FAIRMAP_BACKEND"

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via FAIRMAP_BACKEND=numpy
    njit = None
    HAVE_NUMBA = False


def _requested() -> str:
    v = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if v not in ("auto", "numba", "numpy"):
        raise ConfigError(f"{_ENV_VAR} must be auto, numba or numpy; got {v!r}")
    return v


_req = _requested()
if _req == "numba" and not HAVE_NUMBA:
    raise ConfigError(f"{_ENV_VAR}=numba but numba is not importable")

ACTIVE_BACKEND = "numba" if HAVE_NUMBA and _req != "numpy" else "numpy"


def active_backend() -> str:
    return ACTIVE_BACKEND


def counts_numpy(genome, sizes, features, labels_pos, mask_xa, mask_xb,
                 mask_ya, mask_yb, alpha, threshold):
    """Pure-numpy path. Returns (correct, pos_xa, pos_xb, pos_ya, pos_yb)."""
    probs = mlp.probabilities(genome, sizes, features, alpha)
    preds = probs > threshold
    return (
        int(np.count_nonzero(preds == labels_pos)),
        int(np.count_nonzero(preds & mask_xa)),
        int(np.count_nonzero(preds & mask_xb)),
        int(np.count_nonzero(preds & mask_ya)),
        int(np.count_nonzero(preds & mask_yb)),
    )


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _counts_jit(genome, sizes, features, labels_pos, mask_xa, mask_xb,
                    mask_ya, mask_yb, alpha, threshold):  # pragma: no cover
        a = features
        ofs = 0
        n_layers = sizes.shape[0] - 1
        for li in range(n_layers - 1):
            nin = sizes[li]
            nout = sizes[li + 1]
            w = np.ascontiguousarray(
                genome[ofs:ofs + nin * nout].reshape(nout, nin).T)
            ofs += nin * nout
            b = genome[ofs:ofs + nout]
            ofs += nout
            z = np.dot(a, w)
            for i in range(z.shape[0]):
                for j in range(nout):
                    v = z[i, j] + b[j]
                    z[i, j] = v if v >= 0.0 else alpha * v
            a = z
        nin = sizes[n_layers - 1]
        w = np.ascontiguousarray(genome[ofs:ofs + nin].reshape(1, nin).T)
        ofs += nin
        b0 = genome[ofs]
        out = np.dot(a, w)
        correct = 0
        pxa = 0
        pxb = 0
        pya = 0
        pyb = 0
        for i in range(out.shape[0]):
            zi = out[i, 0] + b0
            if zi >= 0.0:
                p = 1.0 / (1.0 + np.exp(-zi))
            else:
                e = np.exp(zi)
                p = e / (1.0 + e)
            pred = p > threshold
            if pred == labels_pos[i]:
                correct += 1
            if pred:
                if mask_xa[i]:
                    pxa += 1
                if mask_xb[i]:
                    pxb += 1
                if mask_ya[i]:
                    pya += 1
                if mask_yb[i]:
                    pyb += 1
        return correct, pxa, pxb, pya, pyb

    def counts_numba(genome, sizes, features, labels_pos, mask_xa, mask_xb,
                     mask_ya, mask_yb, alpha, threshold):
        return _counts_jit(genome, sizes, features, labels_pos, mask_xa,
                           mask_xb, mask_ya, mask_yb, alpha, threshold)

else:  # pragma: no cover
    counts_numba = None


def genome_counts(genome, sizes, features, labels_pos, mask_xa, mask_xb,
                  mask_ya, mask_yb, alpha, threshold, impl: str | None = None):
    """Dispatch to the selected backend; ``impl`` overrides for tests."""
    use = impl or ACTIVE_BACKEND
    if use == "numba":
        if not HAVE_NUMBA:
            raise ConfigError("numba backend requested but numba is unavailable")
        return counts_numba(genome, sizes, features, labels_pos, mask_xa,
                            mask_xb, mask_ya, mask_yb, alpha, threshold)
    if use == "numpy":
        return counts_numpy(genome, sizes, features, labels_pos, mask_xa,
                            mask_xb, mask_ya, mask_yb, alpha, threshold)
    raise ConfigError(f"unknown backend {use!r}")
