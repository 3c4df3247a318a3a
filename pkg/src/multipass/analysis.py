"""Link taxonomy, node categories, amortized accounting and numeric checks.

Links are classified by comparing the scaled sizes ``gamma**2 * a``,
``gamma * b`` and ``c``.  Ties go to T1 before T2 before T3, and inside T3
``gamma**2 * a == gamma * b`` counts as T3A.

Every verifier returns a :class:`SweepReport`.  Hard inequalities populate
``violations``; constants that the theory only asserts to exist are reported
in ``details`` and never asserted.

The heap stream checkers (:class:`RoundStructureChecker`,
:class:`CategoryChecker`) consume one :class:`~multipass.pairing_heap.LinkEvents`
per delete-min and batch the work internally, so a full heapsort can be
checked without keeping every event in memory.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ._accel import HAVE_NUMBA, njit
from .potential import (
    PotentialConfig,
    _f_scalar,
    delta_phi_batch,
    f_array,
    f_val,
    g_array,
    h_iter,
    log_star,
)

__all__ = [
    "LinkType", "SweepReport", "CategoryAssignment",
    "classify_link", "classify_links", "category_thresholds", "category_of", "categories_for",
    "link_categories", "region_samples", "type3_grid", "g_inverse",
    "verify_link_lemma", "verify_type3_decrease_bound", "equal_category_sweep",
    "sweep_symmetric_f_bound", "find_h_extremum", "verify_slope_bound", "verify_f_inequalities",
    "RoundStructureChecker", "CategoryChecker", "verify_round_structure", "verify_category_dynamics",
    "amortized_account", "verify_raman_inequality", "verify_path_bounds", "verify_median_rotations",
]

MAX_VIOLATIONS = 50


class LinkType(enum.IntEnum):
    T1 = 1
    T2 = 2
    T3A = 3
    T3B = 4


@dataclass
class SweepReport:
    name: str
    domain: str
    samples: int = 0
    extremum_value: float = float("nan")
    extremum_location: tuple = ()
    violations: list = field(default_factory=list)
    violation_count: int = 0
    tolerance: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violation_count == 0

    def add_violation(self, item):
        self.violation_count += 1
        if len(self.violations) < MAX_VIOLATIONS:
            self.violations.append(item)

    def merge(self, other: SweepReport) -> SweepReport:
        """Combine two reports over disjoint sample blocks (extremum is a max)."""
        domain = self.domain if other.domain in self.domain else f"{self.domain}; {other.domain}"
        out = SweepReport(self.name, domain, self.samples + other.samples, tolerance=self.tolerance)
        if math.isnan(other.extremum_value) or (
            not math.isnan(self.extremum_value) and self.extremum_value >= other.extremum_value
        ):
            out.extremum_value, out.extremum_location = self.extremum_value, self.extremum_location
        else:
            out.extremum_value, out.extremum_location = other.extremum_value, other.extremum_location
        for v in self.violations + other.violations:
            if len(out.violations) < MAX_VIOLATIONS:
                out.violations.append(v)
        out.violation_count = self.violation_count + other.violation_count
        out.details = {**self.details, **other.details}
        return out

    def to_text(self) -> str:
        lines = [
            f"sweep: {self.name}",
            f"domain: {self.domain}",
            f"samples: {self.samples}",
            f"extremum: {self.extremum_value!r} at {self.extremum_location}",
            f"tolerance: {self.tolerance!r}",
            f"violations: {self.violation_count}",
        ]
        for k in sorted(self.details):
            lines.append(f"  {k}: {self.details[k]!r}")
        for v in self.violations:
            lines.append(f"  violation: {v}")
        lines.append("status: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"

    def to_row(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "extremum_value": self.extremum_value,
            "extremum_location": " ".join(str(x) for x in self.extremum_location),
            "violations": self.violation_count,
            "passed": int(self.passed),
        }


@dataclass(frozen=True)
class CategoryAssignment:
    node: int
    category: int
    H_left: float | None


# -- classification -------------------------------------------------------------


def classify_link(a, b, c, cfg: PotentialConfig) -> LinkType:
    ga = cfg.gamma**2 * float(a)
    gb = cfg.gamma * float(b)
    c = float(c)
    if ga >= gb and ga >= c:
        return LinkType.T1
    if gb >= c:
        return LinkType.T2
    return LinkType.T3A if ga >= gb else LinkType.T3B


def classify_links(a, b, c, cfg: PotentialConfig) -> np.ndarray:
    ga = cfg.gamma**2 * np.asarray(a, dtype=np.float64)
    gb = cfg.gamma * np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    return np.where(
        (ga >= gb) & (ga >= c), 1, np.where(gb >= c, 2, np.where(ga >= gb, 3, 4))
    ).astype(np.int8)


# -- categories -----------------------------------------------------------------


def category_thresholds(n: int, cfg: PotentialConfig) -> list[float]:
    """``[h^(0)(log n), ..., h^(L)(log n)]`` with ``L = log* n``."""
    L = log_star(n)
    x = math.log2(n)
    out = [x]
    for _ in range(L):
        x = h_iter(1, x, cfg)
        out.append(x)
    return out


def category_of(H_left: float | None, n: int, cfg: PotentialConfig, thresholds=None) -> int:
    """Category of a node whose left child has log-ratio ``H_left`` (None: no left child).

    A value above every interval, which only happens when the iterates of h
    are not decreasing, is put in category 1.
    """
    if H_left is None:
        return 0
    t = category_thresholds(n, cfg) if thresholds is None else thresholds
    L = len(t) - 1
    if H_left <= t[L]:
        return 0
    for i in range(1, L + 1):
        if t[i] < H_left <= t[i - 1]:
            return i
    return 1


def _log_star_array(n):
    v = np.asarray(n, dtype=np.float64).copy()
    cnt = np.zeros(v.shape, np.int64)
    while True:
        m = v > 1
        if not m.any():
            return cnt
        v[m] = np.log2(v[m])
        cnt[m] += 1


def categories_for(H, has_left, n, cfg: PotentialConfig):
    """Vector category computation; ``n`` may be a scalar or per-row array.

    Returns ``(category, L)`` arrays.
    """
    H = np.asarray(H, dtype=np.float64)
    n = np.broadcast_to(np.asarray(n, dtype=np.float64), H.shape)
    L = _log_star_array(n)
    Lmax = int(L.max()) if L.size else 0
    thr = np.empty((Lmax + 1,) + H.shape)
    thr[0] = np.log2(np.maximum(n, 1.0))
    for i in range(1, Lmax + 1):
        thr[i] = cfg.d * np.log2(2.0 + thr[i - 1]) ** 2
    rows = np.arange(H.size).reshape(H.shape) if H.ndim else np.array(0)
    bottom = thr[L, rows] if H.ndim else thr[L]
    cat = np.zeros(H.shape, np.int64)
    assigned = H <= bottom
    for i in range(1, Lmax + 1):
        m = (~assigned) & (i <= L) & (H > thr[i]) & (H <= thr[i - 1])
        cat[m] = i
        assigned |= m
    cat[~assigned] = 1
    cat[~np.asarray(has_left, bool)] = 0
    return cat, L


def link_categories(a, b, c, n, cfg: PotentialConfig):
    """Categories of x, y before a link and of the winner after it.

    Returns ``(cat_x, cat_y, cat_w, L, H_x, H_y, H_w)``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    with np.errstate(divide="ignore"):
        H_x = np.log2((a + b + c + 2) / np.where(a > 0, a, 1.0))
        H_y = np.log2((b + c + 1) / np.where(b > 0, b, 1.0))
    H_w = np.log2((a + b + c + 2) / (a + b + 1))
    cx, L = categories_for(H_x, a > 0, n, cfg)
    cy, _ = categories_for(H_y, b > 0, n, cfg)
    cw, _ = categories_for(H_w, np.ones(a.shape, bool), n, cfg)
    return cx, cy, cw, L, H_x, H_y, H_w


# -- sampling -------------------------------------------------------------------


def _log_uniform(rng, lo, hi, size):
    lo = np.asarray(lo, np.float64)
    hi = np.maximum(np.asarray(hi, np.float64), lo)
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def region_samples(link_type: LinkType, count: int, cfg: PotentialConfig, seed: int = 0,
                   max_size: float = 1e9, degenerate: bool = False):
    """Random (a, b, c) triples of the given type, log-uniform over sizes.

    Sizes of A and B are at least 1 unless ``degenerate`` is set, in which
    case about a tenth of the samples get ``b = 0`` (T1, T3A) or ``a = 0``
    (T2, T3B), the side that keeps the triple in its region.
    The c range of type-3 samples extends past ``max_size`` when the region
    itself starts beyond it (exponent 3 uses gamma = 3000**2), capped at 1e18.
    """
    rng = np.random.default_rng(seed)
    g, g2 = cfg.gamma, cfg.gamma**2
    out_a, out_b, out_c = [], [], []
    have = 0
    while have < count:
        m = max(2 * (count - have), 1024)
        if link_type == LinkType.T1:
            a = np.floor(_log_uniform(rng, 1, max_size, m))
            b = np.floor(_log_uniform(rng, 1, np.minimum(g * a, max_size), m))
            c = np.floor(_log_uniform(rng, 1, np.minimum(g2 * a, max_size), m))
        elif link_type == LinkType.T2:
            b = np.floor(_log_uniform(rng, 1, max_size, m))
            a = np.floor(_log_uniform(rng, 1, np.maximum(b / g, 1), m))
            c = np.floor(_log_uniform(rng, 1, np.minimum(g * b, max_size), m))
        elif link_type == LinkType.T3A:
            a = np.floor(_log_uniform(rng, 1, min(max_size, 1e18 / (g2 * 1e3)), m))
            b = np.floor(_log_uniform(rng, 1, np.minimum(g * a, max_size), m))
            base = np.maximum(g2 * a, g * b)
            c = np.floor(base * _log_uniform(rng, 1, 1e3, m)) + 1
        else:
            b = np.floor(_log_uniform(rng, 1, min(max_size, 1e18 / (g * 1e3)), m))
            a = np.floor(_log_uniform(rng, 1, np.maximum(b / g, 1), m))
            base = np.maximum(g2 * a, g * b)
            c = np.floor(base * _log_uniform(rng, 1, 1e3, m)) + 1
        if degenerate:
            z = rng.random(m) < 0.1
            if link_type in (LinkType.T1, LinkType.T3A):
                b[z] = 0
            else:
                a[z] = 0
        c = np.minimum(c, 1e18)
        keep = classify_links(a, b, c, cfg) == int(link_type)
        out_a.append(a[keep])
        out_b.append(b[keep])
        out_c.append(c[keep])
        have += int(keep.sum())
    a = np.concatenate(out_a)[:count].astype(np.int64)
    b = np.concatenate(out_b)[:count].astype(np.int64)
    c = np.concatenate(out_c)[:count].astype(np.int64)
    return a, b, c


def type3_grid(cfg: PotentialConfig, ab_max: int = 100, c_max: float | None = None):
    """a, b in 1..ab_max and c = max(gamma^2 a, gamma b) times powers of two."""
    if c_max is None:
        c_max = 1e9 if cfg.gamma**2 * ab_max < 1e9 else 1e18
    a, b = np.meshgrid(np.arange(1, ab_max + 1), np.arange(1, ab_max + 1), indexing="ij")
    a = a.ravel().astype(np.float64)
    b = b.ravel().astype(np.float64)
    base = np.floor(np.maximum(cfg.gamma**2 * a, cfg.gamma * b)) + 1
    As, Bs, Cs = [], [], []
    mult = 1.0
    while True:
        c = base * mult
        ok = c <= c_max
        if not ok.any():
            break
        As.append(a[ok])
        Bs.append(b[ok])
        Cs.append(c[ok])
        mult *= 2
    return (np.concatenate(As).astype(np.int64), np.concatenate(Bs).astype(np.int64),
            np.concatenate(Cs).astype(np.int64))


def g_inverse(y, cfg: PotentialConfig, hi: float = 1e6, iters: int = 80):
    """Vector bisection for ``g(x) = y`` on [0, hi]; g is increasing there."""
    y = np.asarray(y, dtype=np.float64)
    lo_x = np.zeros_like(y)
    hi_x = np.full_like(y, hi)
    for _ in range(iters):
        mid = 0.5 * (lo_x + hi_x)
        up = g_array(mid, cfg.exponent, cfg.shift) < y
        lo_x = np.where(up, mid, lo_x)
        hi_x = np.where(up, hi_x, mid)
    return hi_x


# -- link bounds ----------------------------------------------------------------


def _default_slack(cfg: PotentialConfig) -> float:
    return math.log2(4 * cfg.gamma**4)


def verify_link_lemma(link_type: LinkType, cfg: PotentialConfig, samples=None, count: int = 100_000,
                      seed: int = 0, slack: float | None = None, floor: float = 1e-9) -> SweepReport:
    """Check the per-link potential bound of one link type.

    T3A/T3B: ``dphi <= floor`` is asserted for samples with a, b >= 1;
    degenerate samples are only reported.  T1: ``dphi <= 2 g(log(a/c) + K)``
    with ``K = slack`` is asserted and the smallest sufficient K reported.
    T2: the largest dphi is reported.
    """
    link_type = LinkType(link_type)
    if samples is None:
        samples = region_samples(link_type, count, cfg, seed)
    a, b, c = (np.asarray(x) for x in samples)
    types = classify_links(a, b, c, cfg)
    if np.any(types != int(link_type)):
        raise ValueError(f"{int(np.sum(types != int(link_type)))} samples are outside region {link_type.name}")
    dphi = delta_phi_batch(a, b, c, cfg)
    rep = SweepReport(
        name=f"link-{link_type.name}-{cfg.name}",
        domain=f"{len(a)} triples of type {link_type.name}, gamma={cfg.gamma:g}, seed={seed}",
        samples=len(a),
        tolerance=floor,
    )
    if len(a) == 0:
        return rep
    i = int(np.argmax(dphi))
    rep.extremum_value = float(dphi[i])
    rep.extremum_location = (int(a[i]), int(b[i]), int(c[i]))
    if link_type in (LinkType.T3A, LinkType.T3B):
        proper = (a >= 1) & (b >= 1)
        for j in np.flatnonzero(proper & (dphi > floor)):
            rep.add_violation((int(a[j]), int(b[j]), int(c[j]), float(dphi[j])))
        degen = ~proper
        rep.details["degenerate_samples"] = int(degen.sum())
        rep.details["degenerate_max_dphi"] = float(dphi[degen].max()) if degen.any() else None
        rep.details["min_decrease"] = float(-dphi[proper].max()) if proper.any() else None
    elif link_type == LinkType.T1:
        K = _default_slack(cfg) if slack is None else slack
        cc = np.maximum(c.astype(np.float64), 1.0)
        logac = np.log2(np.maximum(a, 1) / cc)
        need = g_inverse(np.maximum(dphi, 0.0) / 2.0, cfg) - logac
        arg = logac + K
        bound = np.where(arg >= 0, 2 * g_array(np.maximum(arg, 0.0), cfg.exponent, cfg.shift), -np.inf)
        for j in np.flatnonzero(dphi > bound + floor):
            rep.add_violation((int(a[j]), int(b[j]), int(c[j]), float(dphi[j]), float(bound[j])))
        rep.details["slack"] = K
        rep.details["min_sufficient_slack"] = float(need.max())
    else:
        rep.details["max_dphi"] = rep.extremum_value
    return rep


def verify_type3_decrease_bound(subtype: LinkType, cfg: PotentialConfig, samples=None,
                                count: int = 100_000, seed: int = 0) -> SweepReport:
    """Fit ``-dphi >= c1 * Q - c2`` over type-3 samples.

    For T3A ``Q = H_A / log^2(2 + H_B)``, for T3B the roles of H_A and H_B
    swap.  ``c2_at_zero`` is the offset with no slope; ``c1`` is the largest
    slope whose offset stays within one unit of that.
    """
    subtype = LinkType(subtype)
    if subtype not in (LinkType.T3A, LinkType.T3B):
        raise ValueError("subtype must be T3A or T3B")
    if samples is None:
        samples = region_samples(subtype, count, cfg, seed)
    a, b, c = (np.asarray(x, dtype=np.float64) for x in samples)
    dphi = delta_phi_batch(a, b, c, cfg)
    H_A = np.log2((a + b + c + 2) / a)
    H_B = np.log2((b + c + 1) / b)
    Q = H_A / np.log2(2 + H_B) ** 2 if subtype == LinkType.T3A else H_B / np.log2(2 + H_A) ** 2
    c2_zero = float(np.max(dphi))
    pos = Q > 0
    c1 = float(np.min((c2_zero + 1.0 - dphi[pos]) / Q[pos])) if pos.any() else float("inf")
    c1 = max(c1, 0.0)
    c2 = float(np.max(c1 * Q + dphi))
    rep = SweepReport(
        name=f"type3-decrease-{subtype.name}-{cfg.name}",
        domain=f"{len(a)} triples of type {subtype.name}, seed={seed}",
        samples=len(a),
    )
    i = int(np.argmin(-dphi))
    rep.extremum_value = float(-dphi[i])
    rep.extremum_location = (int(a[i]), int(b[i]), int(c[i]))
    rep.details.update(c2_at_zero=c2_zero, c1=c1, c2=c2, max_decrease=float(np.max(-dphi)))
    return rep


def equal_category_sweep(cfg: PotentialConfig, n: float = 2.0**64, per_category: int = 2000,
                         seed: int = 0) -> SweepReport:
    """Smallest decrease over synthetic type-3 links whose participants share a category.

    Sizes are realized as reals so that ``n`` may exceed the integer range.
    """
    rng = np.random.default_rng(seed)
    thr = category_thresholds(int(n), cfg)
    L = len(thr) - 1
    rep = SweepReport(name=f"equal-category-{cfg.name}", domain=f"n={n:g}, d={cfg.d:g}, categories 1..{L}")
    worst = float("inf")
    worst_loc = ()
    per_cat = {}
    for i in range(1, L + 1):
        lo, hi = thr[i], min(thr[i - 1], 1000.0)
        if not lo < hi:
            continue
        HA = rng.uniform(lo, hi, per_category)
        HB = rng.uniform(lo, hi, per_category)
        b = np.exp2(rng.uniform(0, 10, per_category))
        c = b * np.exp2(HB) - b - 1
        a = (b + c + 2) / (np.exp2(HA) - 1)
        ok = (a >= 1) & (classify_links(a, b, c, cfg) >= 3)
        if not ok.any():
            continue
        d = delta_phi_batch(a[ok], b[ok], c[ok], cfg)
        cx, cy, _, _, _, _, _ = link_categories(a[ok], b[ok], c[ok], n, cfg)
        same = cx == cy
        if not same.any():
            continue
        dec = -d[same]
        j = int(np.argmin(dec))
        per_cat[i] = float(dec[j])
        rep.samples += int(same.sum())
        if dec[j] < worst:
            worst = float(dec[j])
            worst_loc = (float(a[ok][same][j]), float(b[ok][same][j]), float(c[ok][same][j]))
    rep.extremum_value = worst
    rep.extremum_location = worst_loc
    rep.details["min_decrease_by_category"] = per_cat
    return rep


# -- the symmetric bound and the extremum of f(1+x) + f(1+1/x) ---------------------


@njit
def _sym_sweep_kernel(amax, bmax, gamma, exponent, shift, limit, viol):
    best = -1.0
    ba = 0
    bb = 0
    count = 0
    nviol = 0
    over = 0
    for a in range(1, amax + 1):
        fa = float(a)
        for b in range(1, bmax + 1):
            fb = float(b)
            r = fa / fb
            if r < 1.0 / gamma or r > gamma:
                continue
            s = fa + fb + 1.0
            v = _f_scalar(s / fa, exponent, shift) + _f_scalar(s / fb, exponent, shift)
            count += 1
            if v > best:
                best = v
                ba = a
                bb = b
            if v > limit:
                over += 1
                if nviol < viol.shape[0]:
                    viol[nviol, 0] = a
                    viol[nviol, 1] = b
                    nviol += 1
    return best, ba, bb, count, over, nviol


def _sym_sweep_numpy(amax, bmax, gamma, exponent, shift, limit, viol):
    best, ba, bb, count, over, nviol = -1.0, 0, 0, 0, 0, 0
    bs = np.arange(1, bmax + 1, dtype=np.float64)
    block = max(1, 2_000_000 // bmax)
    for a0 in range(1, amax + 1, block):
        a = np.arange(a0, min(a0 + block, amax + 1), dtype=np.float64)[:, None]
        r = a / bs
        ok = (r >= 1.0 / gamma) & (r <= gamma)
        s = a + bs + 1.0
        v = f_array(s / a, exponent, shift) + f_array(s / bs, exponent, shift)
        v = np.where(ok, v, -np.inf)
        count += int(ok.sum())
        i = np.unravel_index(int(np.argmax(v)), v.shape)
        if v[i] > best:
            best, ba, bb = float(v[i]), int(a[i[0], 0]), int(bs[i[1]])
        bad = np.argwhere(v > limit)
        over += len(bad)
        for ai, bi in bad:
            if nviol < viol.shape[0]:
                viol[nviol] = (int(a[ai, 0]), int(bs[bi]))
                nviol += 1
    return best, ba, bb, count, over, nviol


def sweep_symmetric_f_bound(cfg: PotentialConfig, amax: int = 3000, bmax: int = 3000,
                            limit: float | None = None, use_numba: bool | None = None) -> SweepReport:
    """Exhaustive max of ``f((a+b+1)/a) + f((a+b+1)/b)`` over 1 <= a, b with a/b within gamma.

    Blocked numpy is the default (faster than the compiled double loop on one
    core); ``use_numba=True`` selects the loop, which needs no temporaries.
    """
    if limit is None:
        limit = 0.95 if cfg.exponent == 2 else 0.22
    use_numba = bool(use_numba) and HAVE_NUMBA
    viol = np.zeros((MAX_VIOLATIONS, 2), np.int64)
    kernel = _sym_sweep_kernel if use_numba else _sym_sweep_numpy
    best, ba, bb, count, over, nviol = kernel(amax, bmax, cfg.gamma, float(cfg.exponent), cfg.shift, limit, viol)
    rep = SweepReport(
        name=f"sym-f-bound-{cfg.name}",
        domain=f"integers 1<=a<={amax}, 1<=b<={bmax}, 1/gamma<=a/b<=gamma, gamma={cfg.gamma:g}",
        samples=int(count),
        extremum_value=float(best),
        extremum_location=(int(ba), int(bb)),
        tolerance=limit,
    )
    rep.violation_count = int(over)
    rep.violations = [tuple(int(x) for x in viol[i]) for i in range(int(nviol))]
    rep.details["limit"] = limit
    rep.details["backend"] = "numba" if use_numba else "numpy"
    return rep


def _pair_sum(x, cfg):
    x = np.asarray(x, dtype=np.float64)
    return f_array(1 + x, cfg.exponent, cfg.shift) + f_array(1 + 1 / x, cfg.exponent, cfg.shift)


def find_h_extremum(cfg: PotentialConfig, grid: int = 200_001) -> SweepReport:
    """Interior minimum of ``F(x) = f(1+x) + f(1+1/x)`` on [1, gamma].

    Also samples F on [1/gamma, gamma] (it is symmetric under x -> 1/x) and
    counts strict interior local maxima; exactly one, at x = 1, is expected.
    A violation is recorded otherwise.
    """
    hi = cfg.gamma
    xs = np.exp(np.linspace(0.0, math.log(hi), grid))
    F = _pair_sum(xs, cfg)
    i = int(np.argmin(F))
    lo_b = xs[max(i - 1, 0)]
    hi_b = xs[min(i + 1, grid - 1)]
    res = minimize_scalar(lambda t: float(_pair_sum(t, cfg)), bounds=(lo_b, hi_b), method="bounded",
                          options={"xatol": 1e-10})
    x_min = float(res.x)
    rep = SweepReport(
        name=f"h-extremum-{cfg.name}",
        domain=f"x in [1, {hi:g}], log grid of {grid} points then bounded refinement",
        samples=grid,
        extremum_value=float(res.fun),
        extremum_location=(x_min,),
    )
    full = np.exp(np.linspace(-math.log(hi), math.log(hi), 2 * grid - 1))
    Ff = _pair_sum(full, cfg)
    peaks = np.flatnonzero((Ff[1:-1] > Ff[:-2]) & (Ff[1:-1] > Ff[2:])) + 1
    peak_x = [float(full[p]) for p in peaks]
    rep.details.update(
        value_at_1=float(_pair_sum(1.0, cfg)),
        value_at_gamma=float(_pair_sum(hi, cfg)),
        interior_maxima=peak_x,
    )
    if len(peaks) != 1 or abs(math.log(peak_x[0])) > 1e-3:
        rep.add_violation(("interior maxima", peak_x))
    if not rep.details["value_at_1"] > rep.extremum_value:
        rep.add_violation(("value at 1 not above minimum", rep.details["value_at_1"]))
    return rep


# -- derivative and concavity facts ---------------------------------------------------


def _central_slope(x, cfg, rel=1e-6):
    h = rel * x
    return (f_array(x + h, cfg.exponent, cfg.shift) - f_array(x - h, cfg.exponent, cfg.shift)) / (2 * h)


def verify_slope_bound(cfg: PotentialConfig, x_max: float = 1e15, count: int = 20_000,
                       rel_tol: float = 1e-3) -> SweepReport:
    """Lower bound on f' for x >= gamma, plus f'(1) for the exponent-3 potential."""
    xs = np.exp(np.linspace(math.log(cfg.gamma), math.log(x_max), count))
    slope = _central_slope(xs, cfg)
    lx = np.log2(xs)
    if cfg.exponent == 2:
        bound = 1.0 / (3 * xs * np.log2(2 + lx) ** 2)
        form = "1/(3x log^2(2+log x))"
    else:
        bound = 0.32 / (xs * np.log2(4 + lx) ** 3)
        form = "0.32/(x log^3(4+log x))"
    ratio = slope / bound
    rep = SweepReport(name=f"slope-{cfg.name}", domain=f"x in [{cfg.gamma:g}, {x_max:g}], bound {form}",
                      samples=count, tolerance=rel_tol)
    j = int(np.argmin(ratio))
    rep.extremum_value = float(ratio[j])
    rep.extremum_location = (float(xs[j]),)
    for k in np.flatnonzero(ratio < 1 - rel_tol):
        rep.add_violation((float(xs[k]), float(slope[k]), float(bound[k])))
    if cfg.exponent == 3:
        h = 1e-6
        f0, f1, f2 = (f_val(1 + t, cfg) for t in (0.0, h, 2 * h))
        d1 = (-3 * f0 + 4 * f1 - f2) / (2 * h)
        expect = 1 / (8 * math.log(2))
        rep.details["slope_at_1"] = d1
        rep.details["slope_at_1_expected"] = expect
        if abs(d1 - expect) > rel_tol * expect or not d1 < 1.5:
            rep.add_violation(("slope at 1", d1, expect))
    return rep


def verify_f_inequalities(cfg: PotentialConfig, count: int = 100_000, seed: int = 0,
                          tol: float = 1e-12) -> SweepReport:
    """Sampled checks of f(x+y) <= f(x) + 1.5 y, f(xy) - f(x) <= f(y) and
    f(x+c) - f(y+c) <= f(x) - f(y) for x > y."""
    rng = np.random.default_rng(seed)
    e, s = cfg.exponent, cfg.shift
    x = np.exp(rng.uniform(0, math.log(1e9), count))
    y = np.exp(rng.uniform(math.log(1e-6), math.log(1e9), count))
    rep = SweepReport(name=f"f-inequalities-{cfg.name}", domain="x, y log-uniform up to 1e9",
                      samples=3 * count, tolerance=tol)
    fx = f_array(x, e, s)
    add = f_array(x + y, e, s) - fx - 1.5 * y
    yy = 1 + y
    mul = f_array(x * yy, e, s) - fx - f_array(yy, e, s)
    hi = np.maximum(x, yy)
    lo = np.minimum(x, yy)
    cc = np.exp(rng.uniform(math.log(1e-6), math.log(1e9), count))
    diff = (f_array(hi + cc, e, s) - f_array(lo + cc, e, s)) - (f_array(hi, e, s) - f_array(lo, e, s))
    for label, arr in (("additive", add), ("multiplicative", mul), ("difference", diff)):
        rep.details[f"max_{label}_excess"] = float(np.max(arr))
        for k in np.flatnonzero(arr > tol * np.maximum(1.0, fx)):
            rep.add_violation((label, float(x[k]), float(y[k]), float(arr[k])))
    rep.extremum_value = max(rep.details[f"max_{k}_excess"] for k in ("additive", "multiplicative", "difference"))
    return rep


# -- heap stream checkers -------------------------------------------------------------


@functools.lru_cache(maxsize=1 << 16)
def _lowest_threshold(n: int, cfg: PotentialConfig) -> float:
    return category_thresholds(max(n, 1), cfg)[-1]


class _Batcher:
    flush_rows = 1 << 17

    def __init__(self):
        self._raw = []
        self._n = []
        self._rows = 0
        self.ops = 0

    def feed(self, events) -> None:
        self.ops += 1
        if len(events) == 0:
            return
        self._raw.append(events.raw)
        self._n.append(np.full(len(events), events.n - 1, np.int64))
        self._rows += len(events)
        if self._rows >= self.flush_rows:
            self.flush()

    def flush(self):
        if not self._raw:
            return
        raw = np.concatenate(self._raw)
        n = np.concatenate(self._n)
        op = np.concatenate([np.full(len(r), i, np.int64) for i, r in enumerate(self._raw)])
        self._raw, self._n, self._rows = [], [], 0
        self._process(raw, n, op)

    def _process(self, raw, n, op):
        raise NotImplementedError


class RoundStructureChecker(_Batcher):
    """Per-round counting facts of multipass delete-min.

    Checks, for every round of every fed delete-min:

    * T1 + T2 links <= log n / log(1 + 1/gamma^2) + 1;
    * ``c[i-1] >= (1 + 1/gamma^2) * c[i]`` at every T1/T2 link with a
      predecessor in its round, and c never increases along a round;
    * participants of category 0 that have a left child number at most
      ``log n / -log(1 - 2^-theta) + 1``, theta the lowest category threshold.

    ``n`` is the number of nodes being linked (heap size minus the deleted root).
    """

    def __init__(self, cfg: PotentialConfig):
        super().__init__()
        self.cfg = cfg
        self.report = SweepReport(name=f"round-structure-{cfg.name}", domain="instrumented delete-min rounds")
        self.report.tolerance = 1e-12
        self.max_t12 = 0
        self.max_t12_bound_ratio = 0.0
        self.max_cat0 = 0
        self.childless = 0
        self.rounds = 0
        self.links = 0

    def _process(self, raw, n, op):
        cfg = self.cfg
        a, b, c, rnd = raw[:, 0], raw[:, 1], raw[:, 2], raw[:, 5]
        t = classify_links(a, b, c, cfg)
        t12 = t <= 2
        # group id of (op, round) for rows already ordered by op then round
        new_group = np.ones(len(raw), bool)
        new_group[1:] = (op[1:] != op[:-1]) | (rnd[1:] != rnd[:-1])
        gid = np.cumsum(new_group) - 1
        ngroups = int(gid[-1]) + 1
        self.rounds += ngroups
        self.links += len(raw)
        gn = n[new_group].astype(np.float64)
        logn = np.log2(np.maximum(gn, 2.0))
        q = 1.0 + 1.0 / cfg.gamma**2
        bound12 = logn / np.log2(q) + 1
        cnt12 = np.bincount(gid, weights=t12, minlength=ngroups)
        self.max_t12 = max(self.max_t12, int(cnt12.max()))
        self.max_t12_bound_ratio = max(self.max_t12_bound_ratio, float(np.max(cnt12 / bound12)))
        for g in np.flatnonzero(cnt12 > bound12):
            self.report.add_violation(("t1+t2 count", int(cnt12[g]), float(bound12[g])))

        cf = c.astype(np.float64)
        has_prev = ~new_group
        prev_c = np.empty_like(cf)
        prev_c[1:] = cf[:-1]
        prev_c[0] = np.inf
        bad_incr = has_prev & (cf > prev_c)
        bad_chain = has_prev & t12 & (prev_c < q * cf * (1 - self.report.tolerance))
        for i in np.flatnonzero(bad_incr):
            self.report.add_violation(("c increased", int(prev_c[i]), int(c[i])))
        for i in np.flatnonzero(bad_chain):
            self.report.add_violation(("chain", int(prev_c[i]), int(c[i])))

        cx, cy, _, L, _, _, _ = link_categories(a, b, c, n, cfg)
        cat0 = ((cx == 0) & (a > 0)).astype(np.int64) + ((cy == 0) & (b > 0)).astype(np.int64)
        self.childless += int(np.sum(a == 0) + np.sum(b == 0))
        cnt0 = np.bincount(gid, weights=cat0, minlength=ngroups)
        theta = np.array([_lowest_threshold(int(v), cfg) for v in gn])
        with np.errstate(divide="ignore"):
            bound0 = logn / -np.log2(1 - np.exp2(-theta)) + 1
        self.max_cat0 = max(self.max_cat0, int(cnt0.max()))
        for g in np.flatnonzero(cnt0 > bound0):
            self.report.add_violation(("category-0 count", int(cnt0[g]), float(bound0[g])))
        self.report.samples += len(raw)

    def result(self) -> SweepReport:
        self.flush()
        r = self.report
        r.extremum_value = float(self.max_t12)
        r.extremum_location = ("max t1+t2 per round",)
        r.details.update(
            delete_mins=self.ops, rounds=self.rounds, links=self.links,
            max_t12_per_round=self.max_t12, max_t12_over_bound=self.max_t12_bound_ratio,
            max_category0_per_round=self.max_cat0, childless_participants=self.childless,
        )
        return r


class CategoryChecker(_Batcher):
    """Winner-category monotonicity and the equal-category witness.

    Monotonicity: for links whose participants both have nonzero category,
    the winner either has category 0 after the link or a category at least
    the larger of the two.  Winners that fall to category 0 are counted in
    ``details``.

    Witness: a link is *clean* if it is of type 3 and neither participant has
    category 0.  For every link that roots a complete clean subtree of depth
    ``log* n`` in the round tree, some link of that subtree must join two
    participants of equal category.
    """

    def __init__(self, cfg: PotentialConfig):
        super().__init__()
        self.cfg = cfg
        self.report = SweepReport(name=f"category-dynamics-{cfg.name}", domain="instrumented delete-min links")
        self.checked_monotone = 0
        self.winner_to_zero = 0
        self.witness_roots = 0
        self.nonzero_links = 0

    def _process(self, raw, n, op):
        a, b, c = raw[:, 0], raw[:, 1], raw[:, 2]
        cx, cy, cw, L, _, _, _ = link_categories(a, b, c, n, self.cfg)
        both = (cx != 0) & (cy != 0)
        self.nonzero_links += int(both.sum())
        self.checked_monotone += int(both.sum())
        bad = both & (cw != 0) & (cw < np.maximum(cx, cy))
        self.winner_to_zero += int(np.sum(both & (cw == 0)))
        for i in np.flatnonzero(bad):
            self.report.add_violation(("monotonicity", int(a[i]), int(b[i]), int(c[i]),
                                       int(cx[i]), int(cy[i]), int(cw[i])))
        self.report.samples += len(raw)
        t = classify_links(a, b, c, self.cfg)
        clean = both & (t >= 3)
        if not clean.any():
            return
        starts = np.flatnonzero(np.r_[True, op[1:] != op[:-1]])
        ends = np.r_[starts[1:], len(raw)]
        for s, e in zip(starts, ends):
            if clean[s:e].any():
                self._witness(raw[s:e], clean[s:e], (cx[s:e] == cy[s:e]), int(L[s]))

    def _witness(self, raw, clean, equal, L):
        px, py = raw[:, 6], raw[:, 7]
        m = len(raw)
        depth = np.zeros(m, np.int64)
        for i in range(m):
            if clean[i]:
                dx = depth[px[i]] if px[i] >= 0 else 0
                dy = depth[py[i]] if py[i] >= 0 else 0
                depth[i] = 1 + min(dx, dy)

        def has_equal(i, levels):
            if i < 0 or levels == 0:
                return False
            if equal[i]:
                return True
            return has_equal(px[i], levels - 1) or has_equal(py[i], levels - 1)

        for i in np.flatnonzero(depth >= max(L, 1)):
            self.witness_roots += 1
            if not has_equal(int(i), L):
                self.report.add_violation(("no equal-category link", int(raw[i, 3]), int(raw[i, 5])))

    def result(self) -> SweepReport:
        self.flush()
        r = self.report
        r.extremum_value = float(self.winner_to_zero)
        r.extremum_location = ("winners dropping to category 0",)
        r.details.update(
            delete_mins=self.ops, links_with_nonzero_categories=self.nonzero_links,
            winner_to_category0=self.winner_to_zero, witness_subtrees=self.witness_roots,
            d=self.cfg.d,
        )
        return r


def verify_round_structure(event_stream, cfg: PotentialConfig) -> SweepReport:
    chk = RoundStructureChecker(cfg)
    for ev in event_stream:
        chk.feed(ev)
    return chk.result()


def verify_category_dynamics(event_stream, cfg: PotentialConfig) -> SweepReport:
    chk = CategoryChecker(cfg)
    for ev in event_stream:
        chk.feed(ev)
    return chk.result()


# -- accounting -------------------------------------------------------------------


@dataclass
class AmortizedReport:
    amortized: np.ndarray
    cumulative: np.ndarray
    total_cost: float
    total_amortized: float
    identity_error: float
    scale: float


def amortized_account(costs, delta_phis, scale: float, phi_start: float | None = None,
                      phi_end: float | None = None) -> AmortizedReport:
    """``amortized_i = cost_i + scale * dphi_i`` with the telescoping identity checked.

    With both endpoint potentials given, ``identity_error`` is the gap between
    the summed amortized costs and ``total cost + scale * (phi_end - phi_start)``.
    """
    costs = np.asarray(costs, dtype=np.float64)
    dphi = np.asarray(delta_phis, dtype=np.float64)
    am = costs + scale * dphi
    cum = np.cumsum(am)
    total = float(math.fsum(am))
    err = 0.0
    if phi_start is not None and phi_end is not None:
        err = abs(total - (float(math.fsum(costs)) + scale * (phi_end - phi_start)))
    return AmortizedReport(am, cum, float(math.fsum(costs)), total, err, scale)


# -- search tree checks ---------------------------------------------------------------


def raman_bound(n: int, length: int) -> float:
    log_n = math.log2(n)
    return 3 * log_n * math.log2(length + 1) + 3 * log_n + 1


def verify_raman_inequality(stats, n: int, tol: float = 1e-9) -> SweepReport:
    """``dpsi' <= 3 log n log(l + 1) + 3 log n + 1`` for every access."""
    rep = SweepReport(name="raman", domain=f"path-balance accesses, n={n}", tolerance=tol)
    worst = -float("inf")
    for i, s in enumerate(stats):
        bound = raman_bound(n, s.path_length)
        rep.samples += 1
        gap = s.delta_psi_prime - bound
        if gap > worst:
            worst = gap
            rep.extremum_location = (i, s.path_length)
        if gap > tol:
            rep.add_violation((i, s.path_length, s.delta_psi_prime, bound))
    rep.extremum_value = worst
    return rep


def verify_path_bounds(stats, tol: float = 1e-9) -> SweepReport:
    """Monotone-path potential never above ``l * g(log s(top) / l)``."""
    rep = SweepReport(name="monotone-path-bound", domain="paths given to multipass transformations", tolerance=tol)
    worst = -float("inf")
    for s in stats:
        for phi, bound in s.path_bounds:
            rep.samples += 1
            worst = max(worst, phi - bound)
            if phi > bound + tol:
                rep.add_violation((phi, bound))
    rep.extremum_value = worst
    return rep


def verify_median_rotations(stats, tol: float = 1e-9) -> SweepReport:
    """Each median rotation raises the sum-of-logs potential by at most log n."""
    rep = SweepReport(name="median-rotation", domain="median rotations", tolerance=tol)
    worst = -float("inf")
    for s in stats:
        for dpsi, log_n in s.median_psi:
            rep.samples += 1
            worst = max(worst, dpsi - log_n)
            if dpsi > log_n + tol:
                rep.add_violation((dpsi, log_n))
    rep.extremum_value = worst
    return rep
