"""Command-line driver: workloads, traces, instrumented runs and sweeps.

Exit status: 0 success, 1 usage error, 2 trace error, 3 violation (a sweep
found a counterexample, or the incrementally tracked potential drifted from
the recomputed one by more than 1e-6).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import analysis as an
from .bst import KeyNotFound, PathBalancedBst
from .pairing_heap import DuplicateKey, EmptyHeap, PairingHeap
from .potential import ArrayTree, PotentialConfig, total_potential

__all__ = ["TraceOp", "TraceError", "MetricRow", "ExperimentError", "PotentialMismatch",
           "parse_trace", "generate_workload", "run_experiment", "run_sweep", "write_csv", "main"]

EXIT_OK, EXIT_USAGE, EXIT_TRACE, EXIT_VIOLATION = 0, 1, 2, 3

ARITY = {"insert": (1, 1), "deletemin": (0, 0), "decreasekey": (2, 2), "access": (1, 1), "build": (1, None)}
HEAP_OPS = {"insert", "deletemin", "decreasekey", "build"}
BST_OPS = {"access", "build"}
WORKLOADS = ("random-perm", "sorted", "reverse", "repeated-access", "working-set")
SWEEPS = ("sym-f-bound", "h-extremum", "type3-sign", "type1-bound", "type2-bound",
          "round-structure", "category-dynamics", "raman")
PHI_TOLERANCE = 1e-6


@dataclass(frozen=True)
class TraceOp:
    kind: str
    args: tuple
    line: int = 0

    def __str__(self):
        return " ".join([self.kind, *map(str, self.args)])


class TraceError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class ExperimentError(ValueError):
    pass


class PotentialMismatch(RuntimeError):
    pass


@dataclass
class MetricRow:
    op_index: int
    op_kind: str
    actual_cost: int
    links_t1: int = 0
    links_t2: int = 0
    links_t3a: int = 0
    links_t3b: int = 0
    cat0_count: int = 0
    delta_phi: float = 0.0
    phi_after: float = 0.0
    amortized: float = 0.0


CSV_FIELDS = [f.name for f in fields(MetricRow)]


# -- traces -------------------------------------------------------------------------


def parse_trace(source) -> list[TraceOp]:
    """Parse a line-oriented trace from a string or an iterable of lines."""
    lines = source.splitlines() if isinstance(source, str) else source
    ops = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0]
        if not text.strip():
            continue
        tokens = []
        col = 0
        for tok in text.split():
            col = text.index(tok, col)
            tokens.append((tok, col + 1))
            col += len(tok)
        verb, vcol = tokens[0]
        verb = verb.lower()
        if verb not in ARITY:
            raise TraceError(f"unknown verb {tokens[0][0]!r}", lineno, vcol)
        lo, hi = ARITY[verb]
        nargs = len(tokens) - 1
        if nargs < lo or (hi is not None and nargs > hi):
            want = f"{lo}" if lo == hi else f"at least {lo}"
            raise TraceError(f"{verb} takes {want} key(s), got {nargs}", lineno, vcol)
        args = []
        for tok, tcol in tokens[1:]:
            try:
                args.append(int(tok))
            except ValueError:
                raise TraceError(f"key {tok!r} is not an integer", lineno, tcol) from None
        ops.append(TraceOp(verb, tuple(args), lineno))
    return ops


def generate_workload(name: str, n: int, seed: int = 0) -> list[TraceOp]:
    """Deterministic trace for ``(name, n, seed)``.

    Heap workloads insert keys 1..n (shuffled, ascending or descending) and
    then delete all of them.  Search-tree workloads build a tree by inserting
    a shuffled 1..n and then make n accesses: ``repeated-access`` draws keys
    uniformly with repetition, ``working-set`` draws them from a window of
    ``max(1, log2 n)`` consecutive keys that jumps to a fresh random spot
    every window-length accesses.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    if name in ("random-perm", "sorted", "reverse"):
        keys = np.arange(1, n + 1)
        if name == "random-perm":
            keys = rng.permutation(keys)
        elif name == "reverse":
            keys = keys[::-1]
        return [TraceOp("insert", (int(k),)) for k in keys] + [TraceOp("deletemin", ())] * n
    if name in ("repeated-access", "working-set"):
        ops = [TraceOp("build", tuple(int(k) for k in rng.permutation(np.arange(1, n + 1))))]
        if name == "repeated-access":
            targets = rng.integers(1, n + 1, n)
        else:
            w = max(1, int(math.log2(n)))
            targets = np.empty(n, np.int64)
            for start in range(0, n, w):
                base = int(rng.integers(1, max(n - w + 1, 1) + 1))
                cnt = min(w, n - start)
                targets[start:start + cnt] = base + rng.integers(0, min(w, n), cnt)
            targets = np.minimum(targets, n)
        return ops + [TraceOp("access", (int(k),)) for k in targets]
    raise ValueError(f"unknown workload {name!r}; expected one of {', '.join(WORKLOADS)}")


def _distinct_keys(trace) -> int:
    keys = set()
    for op in trace:
        if op.kind in ("insert", "build", "access"):
            keys.update(op.args)
        elif op.kind == "decreasekey":
            keys.add(op.args[1])
    return max(len(keys), 1)


# -- experiments --------------------------------------------------------------------


def _heap_phi_oracle(h: PairingHeap, cfg) -> float:
    root, left, right = h.binary_view()
    if root < 0:
        return 0.0
    return total_potential(ArrayTree(root, left, right), cfg)


def _bst_phi_oracle(t: PathBalancedBst, cfg) -> float:
    if t.root < 0:
        return 0.0
    return total_potential(ArrayTree(t.root, t.left, t.right), cfg)


def _type_counts(a, b, c, cfg):
    if len(a) == 0:
        return 0, 0, 0, 0
    counts = np.bincount(an.classify_links(a, b, c, cfg), minlength=5)
    return int(counts[1]), int(counts[2]), int(counts[3]), int(counts[4])


def _cat0(a, b, c, n, cfg):
    if len(a) == 0 or n < 1:
        return 0
    cx, cy, *_ = an.link_categories(a, b, c, n, cfg)
    return int(np.sum(cx == 0) + np.sum(cy == 0))


def run_experiment(structure: str, trace, cfg: PotentialConfig, tau: int | None = None, observer=None):
    """Execute ``trace`` with instrumentation; returns ``(rows, summary)``.

    ``observer(op_index, record)`` is called after each costed op with the
    delete-min :class:`LinkEvents` or the access :class:`AccessStats`.
    """
    if structure not in ("heap", "bst", "bst-simplified"):
        raise ExperimentError(f"unknown structure {structure!r}")
    allowed = HEAP_OPS if structure == "heap" else BST_OPS
    for i, op in enumerate(trace):
        if op.kind not in allowed:
            raise TraceError(f"op {i} ({op.kind}) is not valid for structure {structure}", op.line or None)
    N = _distinct_keys(trace)
    scale = cfg.amortized_scale(N, "bst" if structure != "heap" else "heap")
    if structure == "heap":
        rows, summary = _run_heap(trace, cfg, scale, observer)
    else:
        rows, summary = _run_bst(trace, cfg, scale, structure == "bst-simplified", tau, observer)
    summary["structure"] = structure
    summary["scale"] = scale
    summary["distinct_keys"] = N
    acct = an.amortized_account([r.actual_cost for r in rows], [r.delta_phi for r in rows], scale,
                                summary["phi_start"], summary["phi_end"])
    summary["total_cost"] = acct.total_cost
    summary["cumulative_amortized"] = acct.total_amortized
    summary["identity_error"] = acct.identity_error
    summary["ops"] = len(rows)
    return rows, summary


def _run_heap(trace, cfg, scale, observer):
    h = PairingHeap(16)
    rows = []
    phi = 0.0
    phi_start = 0.0
    max_t12 = 0
    deletions = []
    for i, op in enumerate(trace):
        try:
            if op.kind == "build":
                if len(h):
                    raise TraceError(f"op {i}: build on a nonempty heap", op.line or None)
                h = PairingHeap.from_children(op.args[0], op.args[1:])
                phi = phi_start = _heap_phi_oracle(h, cfg)
                continue
            if op.kind == "insert":
                m = len(h)
                h.insert(op.args[0])
                d = PairingHeap.insert_delta_phi(m, cfg)
                row = MetricRow(i, "insert", 1, delta_phi=d)
            elif op.kind == "deletemin":
                n = len(h)
                key, ev = h.delete_min(record=True)
                deletions.append(key)
                if observer is not None:
                    observer(i, ev)
                d = PairingHeap.root_removal_delta_phi(n, cfg)
                if len(ev):
                    d += float(np.sum(ev.delta_phi(cfg)))
                    t = ev.classify(cfg)
                    if np.any(t <= 2):
                        max_t12 = max(max_t12, int(np.bincount(ev.round[t <= 2]).max()))
                t1, t2, t3a, t3b = _type_counts(ev.a, ev.b, ev.c, cfg)
                row = MetricRow(i, "deletemin", len(ev) + 1, t1, t2, t3a, t3b,
                                _cat0(ev.a, ev.b, ev.c, n - 1, cfg), d)
            else:
                old, new = op.args
                hd = h.handle_of(old)
                nodes = h.affected_by_decrease(hd)
                before = h.local_phi(nodes, cfg)
                h.decrease_key(hd, new)
                nodes |= {h.root, int(h.left[h.root])} - {-1}
                d = h.local_phi(nodes, cfg) - before
                row = MetricRow(i, "decreasekey", 1, delta_phi=d)
        except (KeyError, EmptyHeap, DuplicateKey, ValueError) as exc:
            if isinstance(exc, TraceError):
                raise
            raise TraceError(f"op {i} ({op}): {exc}", op.line or None) from exc
        phi += row.delta_phi
        row.phi_after = phi
        row.amortized = row.actual_cost + scale * row.delta_phi
        rows.append(row)
    phi_end = _heap_phi_oracle(h, cfg)
    if abs(phi_end - phi) > PHI_TOLERANCE:
        raise PotentialMismatch(f"tracked potential {phi!r} differs from recomputed {phi_end!r}")
    summary = {
        "phi_start": phi_start, "phi_end": phi_end, "max_round_t12": max_t12,
        "deletemin_output_sorted": all(x < y for x, y in zip(deletions, deletions[1:])),
    }
    dm = [r.actual_cost for r in rows if r.op_kind == "deletemin"]
    summary["mean_deletemin_cost"] = float(np.mean(dm)) if dm else 0.0
    return rows, summary


def _run_bst(trace, cfg, scale, simplified, tau, observer):
    t = PathBalancedBst()
    rows = []
    phi = phi_start = 0.0
    max_t12 = 0
    for i, op in enumerate(trace):
        try:
            if op.kind == "build":
                if len(t):
                    raise TraceError(f"op {i}: build on a nonempty tree", op.line or None)
                t = PathBalancedBst.from_keys(op.args)
                phi = phi_start = _bst_phi_oracle(t, cfg)
                continue
            k = op.args[0]
            if simplified:
                st = t.access_simplified(k, cfg)
            else:
                st = t.analysis_access(k, tau, cfg)
        except (KeyNotFound, ValueError) as exc:
            if isinstance(exc, TraceError):
                raise
            raise TraceError(f"op {i} ({op}): {exc}", op.line or None) from exc
        if observer is not None:
            observer(i, st)
        a, b, c = st.abc()
        t1, t2, t3a, t3b = _type_counts(a, b, c, cfg)
        if st.events:
            types = an.classify_links(a, b, c, cfg)
            per_round = {}
            for e, ty in zip(st.events, types):
                if e.stage == "multipass" and ty <= 2:
                    per_round[e.round] = per_round.get(e.round, 0) + 1
            if per_round:
                max_t12 = max(max_t12, max(per_round.values()))
        row = MetricRow(i, "access", st.path_length, t1, t2, t3a, t3b, _cat0(a, b, c, len(t), cfg), st.delta_phi)
        phi += row.delta_phi
        row.phi_after = phi
        row.amortized = row.actual_cost + scale * row.delta_phi
        rows.append(row)
    phi_end = _bst_phi_oracle(t, cfg)
    if abs(phi_end - phi) > PHI_TOLERANCE:
        raise PotentialMismatch(f"tracked potential {phi!r} differs from recomputed {phi_end!r}")
    acc = [r.actual_cost for r in rows]
    summary = {"phi_start": phi_start, "phi_end": phi_end, "max_round_t12": max_t12,
               "mean_access_cost": float(np.mean(acc)) if acc else 0.0}
    return rows, summary


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(rows, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        d = asdict(r)
        w.writerow([_fmt(d[k]) for k in CSV_FIELDS])


# -- sweeps -------------------------------------------------------------------------


def _heapsort_streams(n, seed, cfg):
    rs = an.RoundStructureChecker(cfg)
    cc = an.CategoryChecker(cfg)
    rng = np.random.default_rng(seed)
    h = PairingHeap.from_keys(rng.permutation(n))
    while h:
        _, ev = h.delete_min(record=True)
        rs.feed(ev)
        cc.feed(ev)
    return rs.result(), cc.result()


def _heap_stream_job(args):
    n, seed, cfg, which = args
    rs, cc = _heapsort_streams(n, seed, cfg)
    return rs if which == "round-structure" else cc


def _raman_job(args):
    n, accesses, seed = args
    rng = np.random.default_rng(seed)
    t = PathBalancedBst.from_keys(rng.permutation(n))
    stats = [t.analysis_access(int(k)) for k in rng.integers(0, n, accesses)]
    return an.verify_raman_inequality(stats, n)


def _map(func, jobs_args, jobs):
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(func, jobs_args))
    return [func(a) for a in jobs_args]


def _merge(reports):
    out = reports[0]
    for r in reports[1:]:
        out = out.merge(r)
    return out


def run_sweep(name: str, cfg: PotentialConfig, out=None, jobs: int = 1, seed: int = 0,
              n: int | None = None, samples: int = 100_000):
    """Run a named sweep; returns ``(exit status, report)`` and writes the report text."""
    if name == "sym-f-bound":
        rep = an.sweep_symmetric_f_bound(cfg)
    elif name == "h-extremum":
        rep = an.find_h_extremum(cfg)
    elif name == "type3-sign":
        parts = _map(_link_job, [(lt, cfg, samples, seed + i) for i, lt in
                                 enumerate((an.LinkType.T3A, an.LinkType.T3B))], jobs)
        grid = an.type3_grid(cfg)
        for lt in (an.LinkType.T3A, an.LinkType.T3B):
            mask = an.classify_links(*grid, cfg) == int(lt)
            parts.append(an.verify_link_lemma(lt, cfg, samples=tuple(g[mask] for g in grid)))
        rep = _merge(parts)
        rep.name = f"type3-sign-{cfg.name}"
    elif name == "type1-bound":
        rep = an.verify_link_lemma(an.LinkType.T1, cfg, count=samples, seed=seed)
    elif name == "type2-bound":
        rep = an.verify_link_lemma(an.LinkType.T2, cfg, count=samples, seed=seed)
    elif name in ("round-structure", "category-dynamics"):
        size = n or 10_000
        seeds = [seed + i for i in range(max(jobs, 1) * 2)]
        rep = _merge(_map(_heap_stream_job, [(size, s, cfg, name) for s in seeds], jobs))
        rep.domain += f", heapsort n={size}, seeds {seeds[0]}..{seeds[-1]}"
    elif name == "raman":
        size = n or 10_000
        parts = _map(_raman_job, [(size, 1000, seed + i) for i in range(max(jobs, 2))], jobs)
        t = PathBalancedBst.monotone_path(size)
        parts.append(an.verify_raman_inequality([t.analysis_access(0)], size))
        rep = _merge(parts)
    else:
        raise ValueError(f"unknown sweep {name!r}; expected one of {', '.join(SWEEPS)}")
    text = rep.to_text()
    if out is None:
        sys.stdout.write(text)
    elif isinstance(out, io.TextIOBase) or hasattr(out, "write"):
        out.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return (EXIT_OK if rep.passed else EXIT_VIOLATION), rep


def _link_job(args):
    lt, cfg, count, seed = args
    return an.verify_link_lemma(lt, cfg, count=count, seed=seed)


# -- entry point --------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser():
    p = _Parser(prog="multipass", description="Multipass pairing heaps and path-balanced BSTs, instrumented.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_potential(q):
        q.add_argument("--potential", choices=("exp2", "exp3"), default="exp2")
        q.add_argument("--gamma", type=float, default=None)
        q.add_argument("--d", type=float, default=1.0)
        q.add_argument("--scale", type=float, default=None)

    r = sub.add_parser("run", help="execute a trace or generated workload and emit CSV metrics")
    r.add_argument("--structure", choices=("heap", "bst", "bst-simplified"), required=True)
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", metavar="FILE")
    src.add_argument("--workload", choices=WORKLOADS)
    r.add_argument("--n", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--tau", type=int, default=None)
    r.add_argument("--csv", metavar="OUT", default="-")
    r.add_argument("--summary", action="store_true", help="print the run summary to stderr")
    add_potential(r)

    s = sub.add_parser("sweep", help="run a numeric verification sweep")
    s.add_argument("--name", required=True, choices=SWEEPS)
    s.add_argument("--out", metavar="FILE", default=None)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--samples", type=int, default=100_000)
    add_potential(s)
    return p


def _config(ns):
    try:
        return PotentialConfig.from_name(ns.potential, gamma=ns.gamma, d=ns.d, scale=ns.scale)
    except ValueError as exc:
        raise SystemExit(_usage_exit(str(exc)))


def _usage_exit(msg):
    sys.stderr.write(f"multipass: error: {msg}\n")
    return EXIT_USAGE


def main(argv=None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
        cfg = _config(ns)
    except SystemExit as exc:
        return int(exc.code)
    if ns.command == "run":
        return _main_run(ns, cfg)
    if ns.jobs < 1:
        return _usage_exit("--jobs must be at least 1")
    try:
        status, _ = run_sweep(ns.name, cfg, ns.out, ns.jobs, ns.seed, ns.n, ns.samples)
    except OSError as exc:
        return _usage_exit(f"cannot write report: {exc}")
    return status


def _main_run(ns, cfg):
    try:
        if ns.trace is not None:
            with open(ns.trace, encoding="utf-8") as fh:
                trace = parse_trace(fh.read())
        else:
            if ns.n < 1:
                return _usage_exit("--n must be at least 1")
            trace = generate_workload(ns.workload, ns.n, ns.seed)
    except OSError as exc:
        return _usage_exit(f"cannot read trace: {exc}")
    except TraceError as exc:
        sys.stderr.write(f"multipass: trace error: {exc}\n")
        return EXIT_TRACE
    try:
        rows, summary = run_experiment(ns.structure, trace, cfg, ns.tau)
    except TraceError as exc:
        sys.stderr.write(f"multipass: trace error: {exc}\n")
        return EXIT_TRACE
    except PotentialMismatch as exc:
        sys.stderr.write(f"multipass: {exc}\n")
        return EXIT_VIOLATION
    try:
        if ns.csv == "-":
            write_csv(rows, sys.stdout)
        else:
            with open(ns.csv, "w", encoding="utf-8", newline="") as fh:
                write_csv(rows, fh)
    except OSError as exc:
        return _usage_exit(f"cannot write csv: {exc}")
    if ns.summary:
        for k in sorted(summary):
            sys.stderr.write(f"{k}: {summary[k]}\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
