"""Built-in planar target densities and their tail-limit data.

Four unnormalized families, selected by string key:

``wedge-super``
    pi(x) = (1 + x1^2 + x2^2 + x1^8 x2^2) exp(-(x1^2 + x2^2)).
    Superexponential tail, radial limiting direction field.

``gauss-mixture``
    pi(x) = alpha exp(-(a^2 x1^2 + x2^2)/2) + (1-alpha) exp(-(x1^2 + a^2 x2^2)/2).
    Superexponential; the limiting field is undefined on the two diagonals
    |x1| = |x2|, where the dominant component switches.

``wedge-weibull``
    pi(x) = (1 + x1^2 + x2^2 + x1^8 x2^2)^delta exp(-(x1^2 + x2^2)^delta).
    Subexponential (Weibull-like) tail with decay index beta = 1 - 2 delta.

``weibull-mixture``
    pi(x) = alpha u1^(delta-1) exp(-u1^delta / 2) + (1-alpha) u2^(delta-1)
    exp(-u2^delta / 2) with u1 = a^2 x1^2 + x2^2, u2 = x1^2 + a^2 x2^2.
    Subexponential, diagonal exclusion set, integrable singularity at 0.

``ell_infinity`` returns the renormalized limiting gradient direction: for
superexponential families the unit vector, for subexponential families the
vector carrying its natural magnitude (it is scale invariant either way,
depending on x only through x/|x|).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, SingularConeError, SingularityError

DENSITY_KEYS = ("wedge-super", "gauss-mixture", "wedge-weibull", "weibull-mixture")

# Relative half-width of the diagonal exclusion band: x counts as diagonal
# when ||x1| - |x2|| <= DIAGONAL_TOL * |x|.
DIAGONAL_TOL = 1e-9

_CODES = {"wedge-super": 0, "gauss-mixture": 1, "wedge-weibull": 2, "weibull-mixture": 3}


@dataclass(frozen=True)
class TailLimitData:
    """Tail description consumed by field and flow construction."""

    beta: float
    tail_class: str          # "superexponential" | "subexponential"
    has_cone_exclusion: bool
    in_cone: Callable[[np.ndarray], bool]
    ell_infinity: Callable[[np.ndarray], np.ndarray]
    poly_order: int = 2      # order m of the leading polynomial in the exponent
    delta: float | None = None


@dataclass(frozen=True)
class TargetDensity:
    """A planar target with analytic gradient and tail-limit data."""

    key: str
    params: dict = field(default_factory=dict)
    dim: int = 2

    def __post_init__(self):
        if self.key not in _CODES:
            raise InvalidArgumentError(
                f"unknown density key {self.key!r}; valid keys: {', '.join(DENSITY_KEYS)}"
            )
        object.__setattr__(self, "code", _CODES[self.key])
        object.__setattr__(self, "kparams", _kernel_params(self.key, self.params))

    # -- log density -------------------------------------------------------

    def log_density(self, x) -> float:
        x = _as_point(x)
        v = float(kernels.logpi_scalar(self.code, self.kparams, x[0], x[1]))
        if v == np.inf:
            raise SingularityError(
                f"{self.key}: log density diverges at {tuple(x)}"
            )
        return v

    def log_density_batch(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != 2:
            raise InvalidArgumentError("xs must have shape (n, 2)")
        if not np.all(np.isfinite(xs)):
            raise InvalidArgumentError("points must be finite")
        out = kernels.logpi_batch(self.code, self.kparams, xs)
        # keep the scalar contract: a singular input point raises instead of
        # leaking a non-finite kernel artifact
        bad = np.nonzero(~np.isfinite(out))[0]
        if bad.size:
            i = int(bad[0])
            raise SingularityError(
                f"log density singular at point {tuple(xs[i])}")
        return out

    # -- gradient ----------------------------------------------------------

    def grad_log(self, x) -> np.ndarray:
        """Analytic gradient of the unnormalized log density."""
        x = _as_point(x)
        x1, x2 = x
        r2 = x1 * x1 + x2 * x2
        if self.code == 0:
            g = 1.0 + r2 + x1 ** 8 * x2 ** 2
            gg = np.array([2.0 * x1 + 8.0 * x1 ** 7 * x2 ** 2,
                           2.0 * x2 + 2.0 * x1 ** 8 * x2])
            return gg / g - 2.0 * x
        if self.code == 1:
            a2 = self.kparams[0]
            g1 = np.array([a2 * x1, x2])
            g2 = np.array([x1, a2 * x2])
            t1 = self.kparams[1] - 0.5 * (a2 * x1 * x1 + x2 * x2)
            t2 = self.kparams[2] - 0.5 * (x1 * x1 + a2 * x2 * x2)
            w1 = _sigmoid(t1 - t2)
            return -(w1 * g1 + (1.0 - w1) * g2)
        if r2 == 0.0:
            raise SingularityError(
                f"{self.key}: gradient singular at the origin"
            )
        if self.code == 2:
            delta = self.kparams[0]
            g = 1.0 + r2 + x1 ** 8 * x2 ** 2
            gg = np.array([2.0 * x1 + 8.0 * x1 ** 7 * x2 ** 2,
                           2.0 * x2 + 2.0 * x1 ** 8 * x2])
            return delta * gg / g - 2.0 * delta * r2 ** (delta - 1.0) * x
        delta, a2 = self.kparams[0], self.kparams[1]
        q1 = a2 * x1 * x1 + x2 * x2
        q2 = x1 * x1 + a2 * x2 * x2
        g1 = 2.0 * np.array([a2 * x1, x2])
        g2 = 2.0 * np.array([x1, a2 * x2])
        t1 = self.kparams[2] + (delta - 1.0) * np.log(q1) - 0.5 * q1 ** delta
        t2 = self.kparams[3] + (delta - 1.0) * np.log(q2) - 0.5 * q2 ** delta
        w1 = _sigmoid(t1 - t2)
        c1 = (delta - 1.0) / q1 - 0.5 * delta * q1 ** (delta - 1.0)
        c2 = (delta - 1.0) / q2 - 0.5 * delta * q2 ** (delta - 1.0)
        return w1 * c1 * g1 + (1.0 - w1) * c2 * g2

    # -- tail limit --------------------------------------------------------

    @property
    def tail_class(self) -> str:
        return "superexponential" if self.code in (0, 1) else "subexponential"

    @property
    def beta(self) -> float:
        if self.code in (0, 1):
            return 0.0
        return 1.0 - 2.0 * self.kparams[0]

    @property
    def has_cone_exclusion(self) -> bool:
        return self.code in (1, 3)

    def in_cone(self, x) -> bool:
        """Membership in the open cone where the limiting field is defined.

        For the mixtures this excludes a relative band of half-width
        DIAGONAL_TOL around the diagonals |x1| = |x2|; the wedges only
        exclude the origin.
        """
        x = _as_point(x)
        nrm = float(np.hypot(x[0], x[1]))
        if nrm == 0.0:
            return False
        if not self.has_cone_exclusion:
            return True
        return abs(abs(x[0]) - abs(x[1])) > DIAGONAL_TOL * nrm

    def ell_infinity(self, x) -> np.ndarray:
        """Scale-invariant limiting direction of the log-density gradient."""
        x = _as_point(x)
        nrm = float(np.hypot(x[0], x[1]))
        if nrm == 0.0:
            raise InvalidArgumentError("ell_infinity undefined at the origin")
        n = x / nrm
        if self.code == 0:
            return -n
        if self.code == 1:
            gi = self._dominant_precision(x)
            v = gi * n
            return -v / np.hypot(v[0], v[1])
        if self.code == 2:
            delta = self.kparams[0]
            return -2.0 * delta * n
        delta = self.kparams[0]
        gi = self._dominant_precision(x)
        v = gi * n
        # explicit products: BLAS dot fuses one of them, breaking the exact
        # swap symmetry between the two half-space formulas
        u = float(v[0]) * float(n[0]) + float(v[1]) * float(n[1])
        return -delta * u ** (delta - 1.0) * v

    def ell_infinity_sided(self, x, side: int) -> np.ndarray:
        """Mixture limiting direction with the half-space choice forced.

        side=+1 uses the |x1|-dominant formula, side=-1 the |x2|-dominant
        one; valid arbitrarily close to (and on) the diagonal, which is
        what branch integration needs.  Wedge densities ignore side.
        """
        x = _as_point(x)
        if not self.has_cone_exclusion:
            return self.ell_infinity(x)
        if side not in (-1, 1):
            raise InvalidArgumentError(f"side must be +1 or -1, got {side}")
        nrm = float(np.hypot(x[0], x[1]))
        if nrm == 0.0:
            raise InvalidArgumentError("ell_infinity undefined at the origin")
        n = x / nrm
        a2 = self.kparams[1] if self.code == 3 else self.kparams[0]
        gi = np.array([1.0, a2]) if side == 1 else np.array([a2, 1.0])
        v = gi * n
        if self.code == 1:
            return -v / np.hypot(v[0], v[1])
        delta = self.kparams[0]
        u = float(v[0]) * float(n[0]) + float(v[1]) * float(n[1])
        return -delta * u ** (delta - 1.0) * v

    def _dominant_precision(self, x) -> np.ndarray:
        """Diagonal of the precision matrix of the component dominating at x.

        Raises when x sits inside the diagonal exclusion band, where
        neither component dominates.
        """
        a2 = self.kparams[1] if self.code == 3 else self.kparams[0]
        if not self.in_cone(x):
            raise SingularConeError(
                f"{self.key}: limiting field undefined on the diagonal at {tuple(x)}"
            )
        if abs(x[0]) > abs(x[1]):
            return np.array([1.0, a2])
        return np.array([a2, 1.0])

    def tail_params(self) -> TailLimitData:
        return TailLimitData(
            beta=self.beta,
            tail_class=self.tail_class,
            has_cone_exclusion=self.has_cone_exclusion,
            in_cone=self.in_cone,
            ell_infinity=self.ell_infinity,
            poly_order=2,
            delta=float(self.kparams[0]) if self.code in (2, 3) else None,
        )


def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + np.exp(-t))
    e = np.exp(t)
    return e / (1.0 + e)


def _as_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (2,):
        raise InvalidArgumentError(f"expected a 2-d point, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"point must be finite, got {tuple(x)}")
    return x


def _kernel_params(key: str, params: dict) -> np.ndarray:
    def pull(name, default, lo=None, hi=None):
        v = params.get(name, default)
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise InvalidArgumentError(f"{key}: parameter {name}={v!r} is not a number")
        if (lo is not None and v <= lo) or (hi is not None and v >= hi):
            raise InvalidArgumentError(
                f"{key}: parameter {name}={v} outside its domain ({lo}, {hi})"
            )
        return v

    allowed = {
        "wedge-super": (),
        "gauss-mixture": ("a", "alpha"),
        "wedge-weibull": ("delta",),
        "weibull-mixture": ("delta", "a", "alpha"),
    }[key]
    for name in params:
        if name not in allowed:
            raise InvalidArgumentError(f"{key}: unknown parameter {name!r}")

    if key == "wedge-super":
        return np.empty(0)
    if key == "gauss-mixture":
        a = pull("a", 4.0, lo=1.0)
        alpha = pull("alpha", 0.5, lo=0.0, hi=1.0)
        return np.array([a * a, np.log(alpha), np.log1p(-alpha)])
    if key == "wedge-weibull":
        delta = pull("delta", 0.4, lo=0.0, hi=0.5)
        return np.array([delta])
    delta = pull("delta", 0.4, lo=0.0, hi=0.5)
    a = pull("a", 4.0, lo=1.0)
    alpha = pull("alpha", 0.5, lo=0.0, hi=1.0)
    return np.array([delta, a * a, np.log(alpha), np.log1p(-alpha)])


def make_density(key: str, **params) -> TargetDensity:
    """Build a TargetDensity from its string key and keyword parameters."""
    return TargetDensity(key=key, params=dict(params))
