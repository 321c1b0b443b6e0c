"""Sequential treatment-assignment engines and imbalance diagnostics.

Five schemes are supported: simple randomization, permuted block, Efron's
biased coin, Wei's urn and the Pocock-Simon marginal method. The first four
are applied within each stratum (joint level of the stratification factors)
when ``stratified`` is set; Pocock-Simon balances the factor margins.

Two implementations share one contract. :class:`SchemeState` assigns one
patient at a time and is the readable reference. :func:`assign_sequence`
runs a compiled kernel over a whole arrival sequence. Both consume exactly
one uniform draw per patient, in arrival order, and assign arm 1 when that
draw falls below the probability of arm 1, so for the same generator they
return identical sequences.
"""

import csv
import io
from dataclasses import dataclass, field

import numba
import numpy as np

from . import rng as rng_mod

SIMPLE = "simple"
PERMUTED_BLOCK = "permuted_block"
BIASED_COIN = "biased_coin"
URN = "urn"
POCOCK_SIMON = "pocock_simon"

KINDS = (SIMPLE, PERMUTED_BLOCK, BIASED_COIN, URN, POCOCK_SIMON)

_ALIASES = {
    "sr": SIMPLE,
    "simple": SIMPLE,
    "pb": PERMUTED_BLOCK,
    "permuted-block": PERMUTED_BLOCK,
    "permuted_block": PERMUTED_BLOCK,
    "block": PERMUTED_BLOCK,
    "bc": BIASED_COIN,
    "biased-coin": BIASED_COIN,
    "biased_coin": BIASED_COIN,
    "efron": BIASED_COIN,
    "urn": URN,
    "wei-urn": URN,
    "ps": POCOCK_SIMON,
    "pocock-simon": POCOCK_SIMON,
    "pocock_simon": POCOCK_SIMON,
    "marginal": POCOCK_SIMON,
    "minimization": POCOCK_SIMON,
}

_KIND_CODE = {SIMPLE: 0, PERMUTED_BLOCK: 1, BIASED_COIN: 2, URN: 3}

# Ties in the weighted Pocock-Simon criterion are decided up to this slack.
_PS_TIE_TOL = 1e-12


def normalize_kind(name):
    key = str(name).strip().lower().replace(" ", "-")
    try:
        return _ALIASES[key]
    except KeyError:
        raise ValueError(f"unknown randomization scheme {name!r}; expected one of {sorted(_ALIASES)}") from None


@dataclass(frozen=True)
class SchemeSpec:
    """Configuration of a randomization scheme.

    ``block_schedule`` optionally lists block sizes used cyclically within
    each stratum; when empty every block has ``block_size`` patients.
    ``ps_metric`` selects absolute or squared marginal differences for
    Pocock-Simon and ``ps_weights`` weights the margins (equal by default).
    """

    kind: str
    stratified: bool = True
    block_size: int = 4
    block_schedule: tuple = ()
    coin_p: float = 2.0 / 3.0
    urn_s: float = 1.0
    urn_omega: float = 1.0
    ps_weights: tuple | None = None
    ps_metric: str = "absolute"

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        object.__setattr__(self, "block_schedule", tuple(int(b) for b in self.block_schedule))
        if self.ps_weights is not None:
            object.__setattr__(self, "ps_weights", tuple(float(w) for w in self.ps_weights))
        if self.kind == PERMUTED_BLOCK:
            for b in self.block_sizes:
                if b < 2 or b % 2:
                    raise ValueError(f"block sizes must be even and >= 2, got {b}")
        if self.kind in (BIASED_COIN, POCOCK_SIMON) and not 0.5 < self.coin_p <= 1.0:
            raise ValueError(f"coin_p must lie in (1/2, 1], got {self.coin_p}")
        if self.kind == URN and (self.urn_s < 0 or self.urn_omega < 0):
            raise ValueError("urn_s and urn_omega must be non-negative")
        if self.ps_metric not in ("absolute", "squared"):
            raise ValueError(f"ps_metric must be 'absolute' or 'squared', got {self.ps_metric!r}")
        if self.ps_weights is not None:
            w = np.asarray(self.ps_weights)
            if np.any(w < 0) or not np.isclose(w.sum(), 1.0):
                raise ValueError("ps_weights must be non-negative and sum to 1")

    @property
    def block_sizes(self):
        return self.block_schedule or (int(self.block_size),)

    @property
    def label(self):
        """Short hyphenated name used in reports and stream keys."""
        return {
            SIMPLE: "simple",
            PERMUTED_BLOCK: "permuted-block",
            BIASED_COIN: "biased-coin",
            URN: "urn",
            POCOCK_SIMON: "pocock-simon",
        }[self.kind]

    def margin_weights(self, n_margins):
        if self.ps_weights is None:
            return np.full(n_margins, 1.0 / n_margins)
        if len(self.ps_weights) != n_margins:
            raise ValueError(f"ps_weights has {len(self.ps_weights)} entries for {n_margins} margins")
        return np.asarray(self.ps_weights, dtype=float)


def joint_codes(strata, levels):
    """Mixed-radix joint stratum code for each row of ``strata``."""
    strata = np.asarray(strata)
    if strata.ndim == 1:
        strata = strata[:, None]
    if strata.shape[1] == 0:
        return np.zeros(strata.shape[0], dtype=np.int64)
    return np.ravel_multi_index(tuple(strata.T), tuple(levels)).astype(np.int64)


def _coin(d, p):
    if d < 0:
        return p
    if d > 0:
        return 1.0 - p
    return 0.5


def _urn_p(d, k, s, omega):
    if d == 0 or omega == 0.0:
        return 0.5
    return 0.5 + omega * abs(d) / (2.0 * (2.0 * s + omega * k))


_coin_jit = numba.njit(cache=True)(_coin)
_urn_p_jit = numba.njit(cache=True)(_urn_p)


@numba.njit(cache=True)
def _stratified_kernel(kind, codes, n_strata, p, s, omega, blocks, u):
    n = codes.shape[0]
    out = np.empty(n, dtype=np.int8)
    d = np.zeros(n_strata, dtype=np.int64)
    k = np.zeros(n_strata, dtype=np.int64)
    left = np.zeros(n_strata, dtype=np.int64)
    ones_left = np.zeros(n_strata, dtype=np.int64)
    n_blocks = np.zeros(n_strata, dtype=np.int64)
    for i in range(n):
        z = codes[i]
        if kind == 0:
            prob = 0.5
        elif kind == 1:
            if left[z] == 0:
                size = blocks[n_blocks[z] % blocks.shape[0]]
                n_blocks[z] += 1
                left[z] = size
                ones_left[z] = size // 2
            prob = ones_left[z] / left[z]
        elif kind == 2:
            prob = _coin_jit(d[z], p)
        else:
            prob = _coin_jit(d[z], _urn_p_jit(d[z], k[z], s, omega))
        a = 1 if u[i] < prob else 0
        if kind == 1:
            left[z] -= 1
            ones_left[z] -= a
        d[z] += 2 * a - 1
        k[z] += 1
        out[i] = a
    return out


@numba.njit(cache=True)
def _pocock_simon_kernel(margin_codes, offsets, total_levels, weights, p, squared, tol, u):
    n, m = margin_codes.shape
    out = np.empty(n, dtype=np.int8)
    counts = np.zeros(total_levels, dtype=np.int64)
    for i in range(n):
        diff = 0.0
        for j in range(m):
            dz = counts[offsets[j] + margin_codes[i, j]]
            if squared:
                diff += weights[j] * ((dz + 1) ** 2 - (dz - 1) ** 2)
            else:
                diff += weights[j] * (abs(dz + 1) - abs(dz - 1))
        if diff < -tol:
            prob = p
        elif diff > tol:
            prob = 1.0 - p
        else:
            prob = 0.5
        a = 1 if u[i] < prob else 0
        for j in range(m):
            counts[offsets[j] + margin_codes[i, j]] += 2 * a - 1
        out[i] = a
    return out


class SchemeState:
    """Mutable state of one sequential randomization run.

    ``levels`` gives the number of levels of each stratification factor;
    patients are identified by a tuple of 0-based factor codes (a bare int
    is accepted when there is a single factor).

    >>> st = SchemeState(SchemeSpec("permuted-block"), levels=(2,), rng=1)
    >>> sum(st.assign_next(0) for _ in range(4))
    2
    """

    def __init__(self, spec, levels, rng=None):
        self.spec = spec
        self.levels = tuple(int(v) for v in levels)
        if not self.levels or any(v < 1 for v in self.levels):
            raise ValueError(f"levels must be positive integers, got {levels}")
        self.rng = np.random.default_rng(rng)
        self.n_strata = int(np.prod(self.levels))
        self.k = 0
        self.d = np.zeros(self.n_strata, dtype=np.int64)  # within-stratum imbalance
        self.n_z = np.zeros(self.n_strata, dtype=np.int64)
        # engine-internal per-stratum counters (one stratum when unstratified)
        n_engine = self.n_strata if spec.stratified else 1
        self._d = np.zeros(n_engine, dtype=np.int64)
        self._k = np.zeros(n_engine, dtype=np.int64)
        self._left = np.zeros(n_engine, dtype=np.int64)
        self._ones_left = np.zeros(n_engine, dtype=np.int64)
        self._n_blocks = np.zeros(n_engine, dtype=np.int64)
        self._offsets = np.concatenate([[0], np.cumsum(self.levels)[:-1]]).astype(np.int64)
        self._margin_d = np.zeros(int(np.sum(self.levels)), dtype=np.int64)
        self._weights = spec.margin_weights(len(self.levels))

    def _codes(self, z):
        z = (z,) if np.isscalar(z) else tuple(z)
        if len(z) != len(self.levels):
            raise ValueError(f"stratum {z} does not match {len(self.levels)} declared factors")
        for c, lv in zip(z, self.levels):
            if not 0 <= int(c) < lv:
                raise ValueError(f"unknown stratum label {z} for levels {self.levels}")
        return tuple(int(c) for c in z)

    def prob_next(self, z):
        """Probability that the next patient with factors ``z`` receives arm 1."""
        codes = self._codes(z)
        spec = self.spec
        if spec.kind == POCOCK_SIMON:
            diff = 0.0
            for j, c in enumerate(codes):
                dz = self._margin_d[self._offsets[j] + c]
                if spec.ps_metric == "squared":
                    diff += self._weights[j] * ((dz + 1) ** 2 - (dz - 1) ** 2)
                else:
                    diff += self._weights[j] * (abs(dz + 1) - abs(dz - 1))
            if diff < -_PS_TIE_TOL:
                return spec.coin_p
            if diff > _PS_TIE_TOL:
                return 1.0 - spec.coin_p
            return 0.5
        s = self._engine_stratum(codes)
        if spec.kind == SIMPLE:
            return 0.5
        if spec.kind == PERMUTED_BLOCK:
            if self._left[s] == 0:
                return 0.5  # a fresh block holds equal numbers of each arm
            return self._ones_left[s] / self._left[s]
        if spec.kind == BIASED_COIN:
            return _coin(self._d[s], spec.coin_p)
        return _coin(self._d[s], _urn_p(self._d[s], self._k[s], spec.urn_s, spec.urn_omega))

    def _engine_stratum(self, codes):
        if not self.spec.stratified:
            return 0
        return int(np.ravel_multi_index(codes, self.levels))

    def assign_next(self, z):
        """Assign the next arriving patient with stratification factors ``z``."""
        codes = self._codes(z)
        spec = self.spec
        s = self._engine_stratum(codes)
        if spec.kind == PERMUTED_BLOCK and self._left[s] == 0:
            sizes = spec.block_sizes
            size = sizes[self._n_blocks[s] % len(sizes)]
            self._n_blocks[s] += 1
            self._left[s] = size
            self._ones_left[s] = size // 2
        prob = self.prob_next(codes)
        a = 1 if self.rng.random() < prob else 0
        if spec.kind == PERMUTED_BLOCK:
            self._left[s] -= 1
            self._ones_left[s] -= a
        self._d[s] += 2 * a - 1
        self._k[s] += 1
        for j, c in enumerate(codes):
            self._margin_d[self._offsets[j] + c] += 2 * a - 1
        joint = int(np.ravel_multi_index(codes, self.levels))
        self.d[joint] += 2 * a - 1
        self.n_z[joint] += 1
        self.k += 1
        return a

    def imbalance(self):
        present = np.flatnonzero(self.n_z)
        return ImbalanceReport(present, self.n_z[present].copy(), self.d[present].copy())


def assign_sequence(spec, strata, levels, rng=None):
    """Assign a whole arrival sequence; ``strata`` has one row of factor codes per patient.

    Returns an ``int8`` array of 0/1 assignments identical to feeding the rows
    one by one to a :class:`SchemeState` driven by the same generator.
    """
    gen = np.random.default_rng(rng)
    strata = np.asarray(strata, dtype=np.int64)
    if strata.ndim == 1:
        strata = strata[:, None]
    levels = tuple(int(v) for v in levels)
    if strata.shape[1] != len(levels):
        raise ValueError(f"strata has {strata.shape[1]} factors but levels declares {len(levels)}")
    if strata.size and (strata.min() < 0 or np.any(strata.max(axis=0) >= np.asarray(levels))):
        raise ValueError(f"unknown stratum label for levels {levels}")
    u = gen.random(strata.shape[0])
    if spec.kind == POCOCK_SIMON:
        offsets = np.concatenate([[0], np.cumsum(levels)[:-1]]).astype(np.int64)
        return _pocock_simon_kernel(
            strata,
            offsets,
            int(np.sum(levels)),
            spec.margin_weights(len(levels)),
            float(spec.coin_p),
            spec.ps_metric == "squared",
            _PS_TIE_TOL,
            u,
        )
    if spec.stratified:
        codes = joint_codes(strata, levels)
        n_strata = int(np.prod(levels))
    else:
        codes = np.zeros(strata.shape[0], dtype=np.int64)
        n_strata = 1
    return _stratified_kernel(
        _KIND_CODE[spec.kind],
        codes,
        n_strata,
        float(spec.coin_p),
        float(spec.urn_s),
        float(spec.urn_omega),
        np.asarray(spec.block_sizes, dtype=np.int64),
        u,
    )


@dataclass
class ImbalanceReport:
    """Within-stratum imbalance ``D_n(z)`` = (#arm 1) - (#arm 0) per stratum."""

    strata: np.ndarray
    n_z: np.ndarray
    d: np.ndarray

    @property
    def normalized(self):
        return self.d / np.sqrt(self.n_z)

    @property
    def total(self):
        return int(self.d.sum())

    def as_dict(self):
        return {s: int(v) for s, v in zip(self.strata.tolist(), self.d)}

    def to_csv(self, fh=None):
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stratum", "n_z", "D_n", "D_over_sqrt_nz"])
        for s, nz, d, r in zip(self.strata, self.n_z, self.d, self.normalized):
            w.writerow([s, int(nz), int(d), f"{r:.10g}"])
        if fh is None:
            return buf.getvalue()


def imbalance_report(stratum, treat):
    """Vectorized imbalance from parallel arrays of stratum labels and 0/1 assignments."""
    stratum = np.asarray(stratum)
    treat = np.asarray(treat).astype(np.int64)
    labels, inv = np.unique(stratum, return_inverse=True)
    n_z = np.bincount(inv, minlength=len(labels))
    d = np.bincount(inv, weights=2 * treat - 1, minlength=len(labels)).astype(np.int64)
    return ImbalanceReport(labels, n_z, d)


def imbalance(assignments):
    """Imbalance report from a sequence of ``(stratum, assignment)`` pairs.

    >>> imbalance([(0, 1), (0, 0), (1, 1)]).as_dict()
    {0: 0, 1: 1}
    """
    pairs = list(assignments)
    if not pairs:
        raise ValueError("imbalance needs at least one assignment")
    z = [p[0] for p in pairs]
    if any(isinstance(v, tuple) for v in z):
        keys = sorted(set(z))
        index = {k: i for i, k in enumerate(keys)}
        rep = imbalance_report([index[v] for v in z], [p[1] for p in pairs])
        rep.strata = np.array([keys[i] for i in rep.strata], dtype=object)
        return rep
    return imbalance_report(z, [p[1] for p in pairs])


@dataclass(frozen=True)
class CategoricalLaw:
    """Independent categorical stratification factors.

    ``probs[j]`` are the level probabilities of factor ``j``.
    """

    probs: tuple = ((0.5, 0.5), (0.5, 0.5))

    @property
    def levels(self):
        return tuple(len(p) for p in self.probs)

    def sample(self, rng, n):
        cols = [rng.choice(len(p), size=n, p=np.asarray(p, dtype=float)) for p in self.probs]
        return np.column_stack(cols).astype(np.int64)


@dataclass
class ImbalanceMoments:
    """Monte Carlo moments of ``D_n(z)`` per joint stratum."""

    n: int
    replicates: int
    strata: list
    mean_n_z: np.ndarray
    mean_d: np.ndarray
    var_d: np.ndarray
    se_var_d: np.ndarray
    var_normalized: np.ndarray
    se_var_normalized: np.ndarray
    max_abs_d: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def var_d_over_n(self):
        return self.var_d / self.n

    def to_csv(self, fh=None):
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stratum", "n", "replicates", "mean_n_z", "mean_D", "var_D", "se_var_D",
                    "var_D_over_n", "var_D_over_sqrt_nz", "se_var_D_over_sqrt_nz", "max_abs_D"])
        for i, s in enumerate(self.strata):
            w.writerow([
                "-".join(map(str, s)), self.n, self.replicates,
                f"{self.mean_n_z[i]:.6f}", f"{self.mean_d[i]:.6f}", f"{self.var_d[i]:.6f}",
                f"{self.se_var_d[i]:.6f}", f"{self.var_d_over_n[i]:.6f}",
                f"{self.var_normalized[i]:.6f}", f"{self.se_var_normalized[i]:.6f}",
                int(self.max_abs_d[i]),
            ])
        if fh is None:
            return buf.getvalue()


def _var_and_se(x):
    """Sample variance with the Monte Carlo standard error of that variance."""
    x = x[np.isfinite(x)]
    dev2 = (x - x.mean()) ** 2
    var = dev2.sum() / (len(x) - 1)
    return var, dev2.std(ddof=1) / np.sqrt(len(x))


def monte_carlo_imbalance(spec, law, n, replicates, seed=0):
    """Moments of the within-stratum imbalance over independent trials of size ``n``.

    Replicate ``r`` draws covariates and assignments from streams keyed by
    ``(seed, "imbalance", r)``, so results do not depend on execution order.
    """
    if replicates < 100:
        raise ValueError("monte_carlo_imbalance needs at least 100 replicates")
    levels = law.levels
    n_strata = int(np.prod(levels))
    d = np.zeros((replicates, n_strata))
    n_z = np.zeros((replicates, n_strata))
    for r in range(replicates):
        strata = law.sample(rng_mod.stream(seed, "imbalance", r, rng_mod.DATA), n)
        treat = assign_sequence(spec, strata, levels, rng_mod.stream(seed, "imbalance", r, rng_mod.ASSIGN))
        codes = joint_codes(strata, levels)
        n_z[r] = np.bincount(codes, minlength=n_strata)
        d[r] = np.bincount(codes, weights=2.0 * treat - 1.0, minlength=n_strata)
    with np.errstate(invalid="ignore", divide="ignore"):
        normalized = np.where(n_z > 0, d / np.sqrt(n_z), np.nan)
    var_d, se_d, var_nrm, se_nrm = (np.empty(n_strata) for _ in range(4))
    for s in range(n_strata):
        var_d[s], se_d[s] = _var_and_se(d[:, s])
        var_nrm[s], se_nrm[s] = _var_and_se(normalized[:, s])
    return ImbalanceMoments(
        n=n,
        replicates=replicates,
        strata=[tuple(int(c) for c in np.unravel_index(s, levels)) for s in range(n_strata)],
        mean_n_z=n_z.mean(axis=0),
        mean_d=d.mean(axis=0),
        var_d=var_d,
        se_var_d=se_d,
        var_normalized=var_nrm,
        se_var_normalized=se_nrm,
        max_abs_d=np.abs(d).max(axis=0),
    )
