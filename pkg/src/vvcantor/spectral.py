"""Spectral exponents: exact roots, Monte Carlo estimates, empirical slopes,
and the bracketing / cut-set verification suites.

The exponent of a construction is the unique positive root of a strictly
decreasing function f. For one type per level f has the closed form
``sum_j p_j log sum_i (r_i m_i)^x``; in general f is estimated by averaging
log block sums over independently seeded neck blocks. Blocks are sampled
once per evaluator and reused for every x (common random numbers), so the
estimate is a deterministic, exactly decreasing function of x and the
bisection below never sees sampling noise; noise enters only through the
reported confidence interval.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .assembly import DIRICHLET, NEUMANN, assemble, refine_uniform
from .catalog import Catalog, scale_extrema
from .errors import InsufficientDataError, NeckTimeoutError, NoisyRootError
from .eigensolve import CountingSample, inertia_counts
from .measure import decompose
from .rng import Xoshiro256StarStar, stream_seed
from .vtree import VTree, cut_set, neck_subtree, sample_environment

# Stream ids (reproducibility contract): the main tree uses stream 0, Monte
# Carlo block b uses stream 1 + b.
TREE_STREAM = 0
MC_BLOCK_STREAM_BASE = 1

DEFAULT_ENV_CAP = 100_000


# ---------------------------------------------------------------------------
# Exact evaluators

def f_exact_homogeneous(catalog: Catalog, x: float) -> float:
    """sum_j p_j log sum_i (r_i m_i)^x; strictly decreasing in x > 0."""
    if x <= 0:
        raise ValueError("x must be positive")
    total = 0.0
    for p, sys_ in zip(catalog.index_probs, catalog.systems):
        s = sum((m.ratio * w) ** x for m, w in zip(sys_.maps, sys_.weights))
        total += p * math.log(s)
    return total


def _recursive_mean(catalog: Catalog, x: float) -> float:
    return sum(
        p * sum((m.ratio * w) ** x for m, w in zip(sys_.maps, sys_.weights))
        for p, sys_ in zip(catalog.index_probs, catalog.systems))


# ---------------------------------------------------------------------------
# Monte Carlo evaluator

class MonteCarloNeckEvaluator:
    """Estimates f(x) from independently seeded neck blocks.

    Block b draws its root type and environments from the stream
    ``MC_BLOCK_STREAM_BASE + b`` until the first neck environment. The
    blocks are sampled once and shared by all x (common random numbers).
    """

    def __init__(self, catalog: Catalog, v_types: int, blocks: int,
                 master_seed: int, env_cap: int = DEFAULT_ENV_CAP,
                 threads: int = 1):
        if blocks < 2:
            raise ValueError("at least 2 blocks are required")
        self.catalog = catalog
        self.v_types = v_types
        self.master_seed = master_seed
        self.env_cap = env_cap
        self.threads = max(1, threads)
        self._root_types: list[int] = []
        self._envs: list[list] = []
        self._packed = None
        self._simulate(0, blocks)

    # -- simulation ---------------------------------------------------------

    def _simulate_block(self, b: int):
        rng = Xoshiro256StarStar(stream_seed(self.master_seed, MC_BLOCK_STREAM_BASE + b))
        root = rng.randint(self.v_types)
        envs = []
        while True:
            env = sample_environment(self.catalog, self.v_types, rng)
            envs.append(env)
            if env.is_neck:
                return root, envs
            if len(envs) >= self.env_cap:
                raise NeckTimeoutError(
                    f"block {b} saw no neck within {self.env_cap} levels")

    def _simulate(self, start: int, stop: int) -> None:
        indices = range(start, stop)
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(self._simulate_block, indices))
        else:
            results = [self._simulate_block(b) for b in indices]
        for root, envs in results:
            self._root_types.append(root)
            self._envs.append(envs)
        self._packed = None

    @property
    def blocks(self) -> int:
        return len(self._envs)

    @property
    def neck_waits(self) -> np.ndarray:
        """First neck level per block."""
        return np.array([len(e) for e in self._envs], np.int64)

    def extend(self, extra: int) -> None:
        """Sample additional blocks; existing blocks are untouched."""
        self._simulate(self.blocks, self.blocks + extra)

    # -- packing for the kernels --------------------------------------------

    def _pack(self):
        if self._packed is not None:
            return self._packed
        cat = self.catalog
        n_maps = np.array([s.size for s in cat.systems], np.int64)
        sys_off = np.concatenate(([0], np.cumsum(n_maps)[:-1]))
        rm = np.array([m.ratio * w for s in cat.systems
                       for m, w in zip(s.maps, s.weights)])
        v = self.v_types
        lens = np.array([len(e) for e in self._envs], np.int64)
        block_ptr = np.concatenate(([0], np.cumsum(lens)))
        total_levels = int(block_ptr[-1])
        level_sys = np.empty((total_levels, v), np.int64)
        row_off = np.empty((total_levels, v), np.int64)
        flat: list[int] = []
        l = 0
        for envs in self._envs:
            for env in envs:
                for vt in range(v):
                    level_sys[l, vt] = env.indices[vt]
                    row_off[l, vt] = len(flat)
                    flat.extend(env.child_types[vt])
                l += 1
        self._packed = (level_sys, row_off, np.array(flat, np.int64), block_ptr,
                        np.array(self._root_types, np.int64), sys_off, n_maps, rm)
        return self._packed

    # -- evaluation ----------------------------------------------------------

    def log_sums(self, x: float) -> np.ndarray:
        level_sys, row_off, flat, ptr, roots, sys_off, n_maps, rm = self._pack()
        fx = rm ** x
        return _kernels.block_log_sums(level_sys, row_off, flat, ptr, roots,
                                       sys_off, n_maps, fx, self.v_types)

    def f(self, x: float) -> tuple[float, float]:
        """Estimate of f(x) with its standard error."""
        if x <= 0:
            raise ValueError("x must be positive")
        ls = self.log_sums(x)
        return float(ls.mean()), float(ls.std(ddof=1) / math.sqrt(ls.shape[0]))

    def f_by_root_type(self, x: float) -> dict[int, float]:
        """Conditional block means given the root type (diagnostic)."""
        ls = self.log_sums(x)
        roots = np.array(self._root_types)
        return {int(t): float(ls[roots == t].mean())
                for t in np.unique(roots)}


def f_monte_carlo(catalog: Catalog, v_types: int, x: float, blocks: int,
                  master_seed: int) -> tuple[float, float]:
    """One-shot Monte Carlo estimate; repeated calls with the same seed share
    the same blocks regardless of x."""
    return MonteCarloNeckEvaluator(catalog, v_types, blocks, master_seed).f(x)


# ---------------------------------------------------------------------------
# Root solving

@dataclass
class FEval:
    x: float
    value: float
    se: float


@dataclass
class EmpiricalFit:
    slope: float
    intercept: float
    residual: float
    n_points: int
    window: tuple[float, float]


@dataclass
class ExponentReport:
    gamma: float
    method: str
    f_evaluations: list[FEval]
    trace: list[dict]
    blocks: int | None = None
    seed: int | None = None
    ci: tuple[float, float] | None = None
    empirical: EmpiricalFit | None = None

    def to_obj(self) -> dict:
        return {
            "gamma": self.gamma,
            "method": self.method,
            "ci": list(self.ci) if self.ci else None,
            "blocks": self.blocks,
            "seed": self.seed,
            "f_evaluations": [
                {"x": e.x, "value": e.value, "se": e.se} for e in self.f_evaluations
            ],
            "trace": self.trace,
            "empirical": None if self.empirical is None else {
                "slope": self.empirical.slope,
                "intercept": self.empirical.intercept,
                "residual": self.empirical.residual,
                "n_points": self.empirical.n_points,
                "window": list(self.empirical.window),
            },
        }


def solve_gamma(evaluator, tolerance: float | None = None, *,
                method: str | None = None, z: float = 3.0,
                max_growth: int = 16) -> ExponentReport:
    """Root of a strictly decreasing f by doubling bracket search from x = 1
    and bisection.

    ``evaluator`` is either a plain callable x -> f(x) (exact, default
    tolerance 1e-10) or a MonteCarloNeckEvaluator (default tolerance 1e-3).
    For Monte Carlo, common random numbers make the estimate deterministic,
    so only the bracket endpoints are checked for sign ambiguity: if
    |f| <= z * SE there, the block count is grown up to ``max_growth`` times
    the initial count before giving up with ``NoisyRootError``. The reported
    confidence interval propagates the standard error at the root through a
    secant slope and usually dominates the bisection tolerance.
    """
    is_mc = hasattr(evaluator, "f")
    if tolerance is None:
        tolerance = 1e-3 if is_mc else 1e-10
    evals: list[FEval] = []
    initial_blocks = evaluator.blocks if is_mc else None

    def feval(x: float) -> tuple[float, float]:
        v, se = evaluator.f(x) if is_mc else (evaluator(x), 0.0)
        evals.append(FEval(x, v, se))
        return v, se

    def resolved(x: float) -> float:
        """Value at x, growing the block count while the sign is ambiguous."""
        v, se = feval(x)
        while is_mc and se > 0.0 and abs(v) <= z * se:
            if evaluator.blocks >= initial_blocks * max_growth:
                half = z * se
                raise NoisyRootError(
                    f"sign of f({x}) ambiguous at {evaluator.blocks} blocks",
                    ci=(x - half, x + half))
            evaluator.extend(evaluator.blocks)
            v, se = feval(x)
        return v

    # Bracket by doubling/halving from 1.
    v = resolved(1.0)
    if v > 0:
        lo, hi = 1.0, 2.0
        for _ in range(200):
            if resolved(hi) < 0:
                break
            lo, hi = hi, hi * 2.0
        else:
            raise AssertionError("no sign change found above 1")
    else:
        lo, hi = 0.5, 1.0
        for _ in range(200):
            if resolved(lo) > 0:
                break
            lo, hi = lo / 2.0, lo
        else:
            raise AssertionError("no sign change found below 1")

    trace = [{"lo": lo, "hi": hi, "mid": None, "f_mid": None}]
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        vm, _ = feval(mid)
        if vm > 0:
            lo = mid
        else:
            hi = mid
        trace.append({"lo": lo, "hi": hi, "mid": mid, "f_mid": vm})
    gamma = 0.5 * (lo + hi)

    ci = None
    if is_mc:
        delta = max(10.0 * tolerance, 0.02)
        x_right = gamma + delta
        x_left = max(gamma - delta, gamma / 2.0)
        v_right, _ = feval(x_right)
        v_left, _ = feval(x_left)
        slope = (v_right - v_left) / (x_right - x_left)
        _, se_root = feval(gamma)
        half = z * se_root / max(abs(slope), 1e-300)
        ci = (gamma - half, gamma + half)

    if method is None:
        method = "monte-carlo-neck" if is_mc else "exact"
    return ExponentReport(gamma=gamma, method=method, f_evaluations=evals,
                          trace=trace,
                          blocks=evaluator.blocks if is_mc else None,
                          seed=getattr(evaluator, "master_seed", None),
                          ci=ci)


def solve_gamma_recursive(catalog: Catalog, tolerance: float = 1e-10) -> float:
    """Root of sum_j p_j sum_i (r_i m_i)^gamma = 1 (the fully random
    construction's exponent; a comparison oracle for large type counts)."""
    report = solve_gamma(lambda x: _recursive_mean(catalog, x) - 1.0,
                         tolerance, method="recursive-oracle")
    return report.gamma


def gamma_exact_homogeneous(catalog: Catalog, tolerance: float = 1e-10) -> ExponentReport:
    """Exact exponent of the one-type-per-level construction."""
    method = "exact-selfsimilar" if catalog.n_systems == 1 else "exact-homogeneous"
    return solve_gamma(lambda x: f_exact_homogeneous(catalog, x),
                       tolerance, method=method)


# ---------------------------------------------------------------------------
# Empirical slope

def empirical_exponent(samples, window: tuple[float, float]) -> EmpiricalFit:
    """Least-squares slope of log N against log x inside the window.

    Accepts a list of CountingSample or an (xs, counts) pair. Requires at
    least 8 in-window samples with count >= 1 and at least two distinct
    counts; otherwise raises InsufficientDataError.
    """
    if isinstance(samples, tuple):
        xs, counts = np.asarray(samples[0], float), np.asarray(samples[1], float)
    else:
        xs = np.array([s.x for s in samples], float)
        counts = np.array([s.count for s in samples], float)
    lo, hi = window
    mask = (xs >= lo) & (xs <= hi) & (counts >= 1)
    xs, counts = xs[mask], counts[mask]
    if xs.shape[0] < 8:
        raise InsufficientDataError(
            f"only {xs.shape[0]} usable samples in window [{lo}, {hi}]")
    if np.unique(counts).shape[0] < 2:
        raise InsufficientDataError("all in-window counts are identical")
    lx, ln = np.log(xs), np.log(counts)
    design = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(design, ln, rcond=None)
    resid = ln - design @ coef
    return EmpiricalFit(slope=float(coef[0]), intercept=float(coef[1]),
                        residual=float(np.sqrt(np.mean(resid ** 2))),
                        n_points=int(xs.shape[0]), window=(float(lo), float(hi)))


# ---------------------------------------------------------------------------
# Bracketing check

@dataclass
class BracketingResult:
    """Lower/upper sums around the center counting functions on a grid.

    Per grid point the status is "ok" (chain holds), "warn" (total violation
    of one count at an isolated point; rounding can tie an eigenvalue with
    a rescaled shift) or "fail". Adjacent warnings escalate to failures.
    """

    k: int
    level: int
    splits: int
    xs: np.ndarray
    lower: np.ndarray
    center_dirichlet: np.ndarray
    center_neumann: np.ndarray
    upper: np.ndarray
    status: list[str] = field(default_factory=list)

    @property
    def n_warn(self) -> int:
        return sum(s == "warn" for s in self.status)

    @property
    def n_fail(self) -> int:
        return sum(s == "fail" for s in self.status)

    @property
    def ok(self) -> bool:
        return self.n_fail == 0

    def to_obj(self) -> dict:
        return {
            "k": self.k, "level": self.level, "splits": self.splits,
            "x": [float(v) for v in self.xs],
            "lower": [int(v) for v in self.lower],
            "center_dirichlet": [int(v) for v in self.center_dirichlet],
            "center_neumann": [int(v) for v in self.center_neumann],
            "upper": [int(v) for v in self.upper],
            "status": list(self.status),
            "n_warn": self.n_warn, "n_fail": self.n_fail,
        }


def bracketing_check(tree: VTree, k: int, xs, level: int,
                     splits: int = 1) -> BracketingResult:
    """Verify lower <= N_D <= N_N <= upper at matched resolution.

    Every cut-set member at neck level l contributes the counting functions
    of the shared subtree, discretized at level ``level - l`` (plus the same
    uniform splits as the center), evaluated at its rescaled shifts. With
    this resolution matching the member meshes are exactly the center mesh
    restricted to the member cells, so the chain holds up to rounding ties.
    """
    xs = np.sort(np.asarray(xs, dtype=np.float64))
    cs = cut_set(tree, k)
    max_level = int(cs.levels.max())
    if level < max_level:
        raise ValueError(
            f"level {level} is shallower than the deepest cut-set member ({max_level})")

    center = refine_uniform(decompose(tree, level), splits)
    pd = assemble(center, DIRICHLET)
    pn = assemble(center, NEUMANN)
    center_d = inertia_counts(pd, xs)
    center_n = inertia_counts(pn, xs)

    lower = np.zeros(xs.shape[0], np.int64)
    upper = np.zeros(xs.shape[0], np.int64)
    for l in np.unique(cs.levels):
        sub = neck_subtree(tree, int(l), level - int(l))
        sdec = refine_uniform(decompose(sub, level - int(l)), splits)
        spd = assemble(sdec, DIRICHLET)
        spn = assemble(sdec, NEUMANN)
        prods = cs.products[cs.levels == l]
        args = (prods[:, None] * xs[None, :]).ravel()
        lower += inertia_counts(spd, args).reshape(prods.shape[0], -1).sum(axis=0)
        upper += inertia_counts(spn, args).reshape(prods.shape[0], -1).sum(axis=0)

    status = []
    for i in range(xs.shape[0]):
        viol = (max(0, int(lower[i]) - int(center_d[i]))
                + max(0, int(center_d[i]) - int(center_n[i]))
                + max(0, int(center_n[i]) - int(upper[i])))
        status.append("ok" if viol == 0 else ("warn" if viol <= 1 else "fail"))
    for i in range(1, len(status)):  # warnings must be isolated
        if status[i] == "warn" and status[i - 1] == "warn":
            status[i] = status[i - 1] = "fail"

    return BracketingResult(k=k, level=level, splits=splits, xs=xs,
                            lower=lower, center_dirichlet=center_d,
                            center_neumann=center_n, upper=upper, status=status)


# ---------------------------------------------------------------------------
# Cut-set statistics

@dataclass
class CutsetStatsRow:
    k: int
    size: int                 # number of members
    harmonic_scale: float     # members / sum of member products
    max_gap: int              # largest neck-to-neck distance among members
    min_product: float
    max_product: float
    chain_lower_ok: bool      # min product >= exp(-k) * eta^max_gap
    chain_upper_ok: bool      # max product <= exp(-k)
    scale_lower_ok: bool      # harmonic scale >= exp(k)
    nd_at_scale: int | None = None
    ratio_nd_over_size: float | None = None
    nd_at_k_scale: int | None = None
    ratio_size_over_nd: float | None = None


def cutset_stats_check(tree: VTree, ks, level: int | None = None,
                       splits: int = 1) -> list[CutsetStatsRow]:
    """Exact product-chain checks per cut set plus counting diagnostics.

    The count ratios (existential constants in the underlying growth
    estimates) are reported for inspection only; the second uses exponent 1
    on the k factor as a convention.
    """
    pencil = None
    if level is not None:
        dec = refine_uniform(decompose(tree, level), splits)
        pencil = assemble(dec, DIRICHLET)
    eta = scale_extrema(tree.catalog).eta
    rows = []
    for k in ks:
        cs = cut_set(tree, k)
        mn, mx = float(cs.products.min()), float(cs.products.max())
        ek = math.exp(-float(k))
        row = CutsetStatsRow(
            k=k, size=cs.size, harmonic_scale=cs.harmonic_scale, max_gap=cs.max_gap,
            min_product=mn, max_product=mx,
            chain_lower_ok=bool(mn >= ek * eta ** cs.max_gap),
            chain_upper_ok=bool(mx <= ek),
            scale_lower_ok=bool(cs.harmonic_scale >= math.exp(float(k))),
        )
        if pencil is not None:
            nd_t = int(inertia_counts(pencil, [cs.harmonic_scale])[0])
            row.nd_at_scale = nd_t
            row.ratio_nd_over_size = nd_t / cs.size
            if k >= 1:
                nd_kt = int(inertia_counts(pencil, [k * cs.harmonic_scale])[0])
                row.nd_at_k_scale = nd_kt
                row.ratio_size_over_nd = (cs.size / nd_kt) if nd_kt else None
        rows.append(row)
    return rows
