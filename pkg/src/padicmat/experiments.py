"""Statistical harness: equidistribution, congruence, and consistency checks.

Monte-Carlo runs are sharded into independent RNG streams derived from the
master seed, so the merged histogram is identical regardless of how many
workers process the shards.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import random
import time
from fractions import Fraction

import numpy as np

from .conjugacy import class_of_matrix_gl, family_prob, fulman_prob_gl
from .galois_rings import GRElem, RingContext
from .matrix_groups import (
    GroupSpec,
    Matrix,
    char_poly,
    enumerate_group,
    hensel_lift_section,
    lie_algebra_basis,
    min_poly_mod_p,
    sample_haar,
)
from .polynomials import (
    datum_value_count,
    hayes_label,
    monomial,
    trace_datum_of,
    x_poly,
)

SCHEMA_VERSION = 1
N_SHARDS = 16
EXACT_MODE_BOUND = 10 ** 7


class ExperimentConfig:
    def __init__(self, family, n, p, m=1, k=1, sign=1, d1=0, d2=0,
                 powers=None, samples=0, seed=None, mode="montecarlo",
                 i_max=None, shards=N_SHARDS):
        if mode not in ("montecarlo", "exact"):
            raise ValueError("mode must be montecarlo or exact")
        if mode == "montecarlo" and seed is None:
            raise ValueError("montecarlo mode requires a seed")
        self.family = family
        self.n = n
        self.p = p
        self.m = m
        self.k = k
        self.sign = sign
        self.d1 = d1
        self.d2 = d2
        self.powers = list(powers) if powers else None
        self.samples = samples
        self.seed = seed
        self.mode = mode
        self.i_max = i_max
        self.shards = shards

    def context(self):
        return RingContext(self.p, self.m, self.k)

    def group_spec(self, ctx=None):
        ctx = ctx or self.context()
        if self.family == "so":
            return GroupSpec(self.family, self.n, ctx, sign=self.sign)
        return GroupSpec(self.family, self.n, ctx)

    def to_dict(self):
        return {"family": self.family, "n": self.n, "p": self.p,
                "m": self.m, "k": self.k, "sign": self.sign,
                "d1": self.d1, "d2": self.d2, "powers": self.powers,
                "samples": self.samples, "seed": self.seed,
                "mode": self.mode, "i_max": self.i_max,
                "shards": self.shards}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class TVReport:
    def __init__(self, config, cell_count, n_samples, tv, noise,
                 min_count, max_count, runtime_ms, extra=None):
        self.config = config
        self.cell_count = cell_count
        self.n_samples = n_samples
        self.tv = tv
        self.noise = noise
        self.min_count = min_count
        self.max_count = max_count
        self.runtime_ms = runtime_ms
        self.extra = extra or {}

    @property
    def passed(self):
        return float(self.tv) < 2.5 * self.noise

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION,
                "config": self.config.to_dict(),
                "cell_count": self.cell_count, "N": self.n_samples,
                "tv": float(self.tv), "noise": self.noise,
                "min_count": self.min_count, "max_count": self.max_count,
                "pass": self.passed, "runtime_ms": self.runtime_ms,
                **self.extra}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def histogram_csv(hist):
    lines = ["cell,count"]
    for key in sorted(hist, key=str):
        lines.append("%s,%d" % (key, hist[key]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# TV distance


def tv_distance(hist_a, hist_b):
    """Half-L1 distance between normalized histograms (dicts or sequences).

    Exact Fraction when the inputs are integer counts.
    """
    if not isinstance(hist_a, dict):
        hist_a = dict(enumerate(hist_a))
    if not isinstance(hist_b, dict):
        hist_b = dict(enumerate(hist_b))
    ta, tb = sum(hist_a.values()), sum(hist_b.values())
    total = Fraction(0)
    for key in set(hist_a) | set(hist_b):
        total += abs(Fraction(hist_a.get(key, 0), ta)
                     - Fraction(hist_b.get(key, 0), tb))
    return total / 2


def tv_to_uniform(hist, cell_count):
    n = sum(hist.values())
    total = Fraction(0)
    for c in hist.values():
        total += abs(Fraction(c, n) - Fraction(1, cell_count))
    total += (cell_count - len(hist)) * Fraction(1, cell_count)
    return total / 2


def expected_tv_noise(cell_count, n_samples):
    """Expected TV of a truly uniform sampler: ~ sqrt(C / (2 pi N))."""
    return math.sqrt(cell_count / (2 * math.pi * n_samples))


# ---------------------------------------------------------------------------
# sharded sampling


def _shard_rng(seed, shard):
    digest = hashlib.sha256(("%s:%d" % (seed, shard)).encode()).hexdigest()
    return random.Random(int(digest, 16))


def _shard_sizes(total, shards):
    base, rem = divmod(total, shards)
    return [base + (1 if i < rem else 0) for i in range(shards)]


def sharded_histogram(cfg, extract):
    """Merge per-shard histograms of extract(M) over Haar samples."""
    spec = cfg.group_spec()
    hist = {}
    for shard, count in enumerate(_shard_sizes(cfg.samples, cfg.shards)):
        rng = _shard_rng(cfg.seed, shard)
        for _ in range(count):
            key = extract(sample_haar(spec, rng))
            hist[key] = hist.get(key, 0) + 1
    return hist


# ---------------------------------------------------------------------------
# trace extraction


def matrix_traces(M, d1, d2):
    """(negative traces tr(M^-i) i=1..d1, positive tr(M^i) i=1..d2)."""
    pos = []
    P = Matrix.identity(M.ctx, M.n)
    for _ in range(d2):
        P = P * M
        pos.append(P.trace())
    neg = []
    if d1:
        Minv = M.inverse()
        P = Matrix.identity(M.ctx, M.n)
        for _ in range(d1):
            P = P * Minv
            neg.append(P.trace())
    return neg, pos


def trace_datum_key(M, d1, d2):
    neg, pos = matrix_traces(M, d1, d2)
    return trace_datum_of(pos, neg).key()


# ---------------------------------------------------------------------------
# experiments


def run_trace_equidistribution(cfg):
    """TV of the (d1,d2)-trace datum from uniform over its value space."""
    d = cfg.d1 + cfg.d2
    if cfg.mode == "montecarlo":
        if cfg.d1 and d >= cfg.n - 1:
            raise ValueError("two-sided data need d1 + d2 < n - 1")
    start = time.monotonic()
    ctx = cfg.context()
    cells = datum_value_count(ctx, cfg.d1, cfg.d2)
    if cfg.mode == "exact":
        spec = cfg.group_spec()
        hist = {}
        group = enumerate_group(spec)
        for M in group:
            key = trace_datum_key(M, cfg.d1, cfg.d2)
            hist[key] = hist.get(key, 0) + 1
        n_samples = len(group)
    else:
        hist = sharded_histogram(
            cfg, lambda M: trace_datum_key(M, cfg.d1, cfg.d2))
        n_samples = cfg.samples
    tv = tv_to_uniform(hist, cells)
    noise = expected_tv_noise(cells, n_samples)
    return TVReport(cfg, cells, n_samples, tv, noise,
                    min(hist.values()), max(hist.values()),
                    int((time.monotonic() - start) * 1000),
                    extra={"occupied_cells": len(hist)})


def run_single_trace(cfg, r):
    """TV of tr(M^r) over GR(p^k) from uniform."""
    if r % cfg.p == 0:
        raise ValueError("p must not divide r")
    start = time.monotonic()
    ctx = cfg.context()
    cells = ctx.q ** ctx.k if ctx.m == 1 else ctx.mod ** ctx.m

    def extract(M):
        neg, pos = matrix_traces(M, abs(r) if r < 0 else 0,
                                 r if r > 0 else 0)
        t = pos[-1] if r > 0 else neg[-1]
        return t.coeffs.tobytes()

    if cfg.mode == "exact":
        hist = {}
        group = enumerate_group(cfg.group_spec())
        for M in group:
            key = extract(M)
            hist[key] = hist.get(key, 0) + 1
        n_samples = len(group)
    else:
        hist = sharded_histogram(cfg, extract)
        n_samples = cfg.samples
    tv = tv_to_uniform(hist, cells)
    noise = expected_tv_noise(cells, n_samples)
    return TVReport(cfg, cells, n_samples, tv, noise,
                    min(hist.values()), max(hist.values()),
                    int((time.monotonic() - start) * 1000))


def run_trace_congruence(cfg):
    """Count violations of tr(M^i) = sigma(tr(M^{i/p})) mod p^{min(v, k)}."""
    p, k = cfg.p, cfg.k
    i_max = cfg.i_max or 2 * p * p
    spec = cfg.group_spec()
    ctx = spec.ctx
    violations = 0
    checked = 0
    # one row per power i = p, 2p, ..., checked against sigma of row i/p
    idx = np.arange(p, i_max + 1, p)
    req = np.empty(len(idx), dtype=np.int64)
    for t, i in enumerate(idx):
        v = 0
        while i % p == 0:
            i //= p
            v += 1
        req[t] = min(v, k)
    modulus = p ** req
    sig = ctx.sigma_mat.T
    for shard, count in enumerate(_shard_sizes(cfg.samples, cfg.shards)):
        rng = _shard_rng(cfg.seed, shard)
        for _ in range(count):
            M = sample_haar(spec, rng)
            rows = _trace_coeff_rows(M, i_max)
            delta = (rows[idx - 1] - rows[idx // p - 1] @ sig) % ctx.mod
            bad = np.any(delta % modulus[:, None], axis=1)
            checked += len(idx)
            violations += int(np.count_nonzero(bad))
    return {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(),
            "checked": checked, "violations": violations,
            "pass": violations == 0}


def _trace_coeff_rows(M, i_max):
    """Coefficient vectors of tr(M^i), i = 1..i_max, as an int64 array."""
    ctx = M.ctx
    n, m, mod = M.n, ctx.m, ctx.mod
    out = np.empty((i_max, m), dtype=np.int64)
    diag = np.arange(n)
    if m == 1:
        a = M.a[:, :, 0]
        P = np.eye(n, dtype=np.int64)
        for r in range(i_max):
            P = (P @ a) % mod
            out[r, 0] = np.trace(P) % mod
        return out
    red = ctx._red
    a = M.a
    P = np.zeros((n, n, m), dtype=np.int64)
    P[diag, diag, 0] = 1
    for r in range(i_max):
        full = np.zeros((n, n, 2 * m - 1), dtype=np.int64)
        for s in range(m):
            for t in range(m):
                full[:, :, s + t] += P[:, :, s] @ a[:, :, t] % mod
        P = (full % mod) @ red % mod
        out[r] = P[diag, diag].sum(axis=0) % mod
    return out


def _power_traces(M, i_max):
    for row in _trace_coeff_rows(M, i_max):
        yield GRElem(M.ctx, row)


def enumerate_lie_fq(spec):
    """All F_q-combinations of the Lie-algebra basis at the residue level."""
    ctx1 = spec.ctx.reduced_context(1)
    basis = lie_algebra_basis(spec)
    if spec.family == "u":
        pool = [a for a in ctx1.elements() if a.tau() == a]
    else:
        pool = list(ctx1.elements())
    if len(pool) ** len(basis) > 10 ** 6:
        raise ValueError("Lie-algebra fiber too large to enumerate")
    out = []
    for coeffs in itertools.product(pool, repeat=len(basis)):
        A = Matrix.zero(ctx1, spec.size)
        for c, B in zip(coeffs, basis):
            A = A + B.scale(c)
        out.append(A)
    return out


def onestep_fiber(A0, spec_k, lie):
    """char(A0_lift (I + p^{k-1} A1)) over the whole level-k Lie fiber."""
    ctx = spec_k.ctx
    p, k = ctx.p, ctx.k
    L = hensel_lift_section(A0, spec_k, k, check=False)
    I = Matrix.identity(ctx, spec_k.size)
    out = []
    for A1 in lie:
        pert = I + A1.lift(k).scale(ctx.elem(p ** (k - 1)))
        out.append(char_poly(L * pert))
    return out


def run_onestep_check(cfg, matrices=None):
    """Exact conditional equidistribution of char polys over the lift fiber.

    For family gl the fiber chars are bucketed into Hayes classes with d
    leading coefficients and one unit class; when deg min > d every bucket
    holds exactly q^{dim - d - 1} elements.  For family sp the buckets fix
    the d leading coefficients (intervals of width n - d) and hold exactly
    q^{dim - d} elements.  When the degree hypothesis fails for gl, the
    fiber chars concentrate on exactly q^{(k-1) deg min} distinct values;
    for sp the below-threshold count is reported without assertion.
    """
    if cfg.family not in ("gl", "sp"):
        raise ValueError("one-step check supports gl and sp")
    d = cfg.d2
    ctx_k = cfg.context()
    ctx1 = ctx_k.reduced_context(1)
    spec1 = GroupSpec(cfg.family, cfg.n, ctx1)
    spec_k = GroupSpec(cfg.family, cfg.n, ctx_k)
    lie = enumerate_lie_fq(spec1)
    q = ctx1.q
    dim = round(math.log(len(lie), q))

    if matrices is None:
        if cfg.mode == "exact":
            matrices = enumerate_group(spec1)
        else:
            rng = _shard_rng(cfg.seed, 0)
            matrices = [sample_haar(spec1, rng) for _ in range(cfg.samples)]

    results = []
    all_pass = True
    for A0 in matrices:
        degmin = min_poly_mod_p(A0).degree
        chars = onestep_fiber(A0, spec_k, lie)
        if cfg.family == "gl":
            threshold_ok = degmin > d
            expect = q ** (dim - d - 1)
            buckets = {}
            for f in chars:
                lab = hayes_label(f, d, x_poly(ctx_k))
                buckets[lab] = buckets.get(lab, 0) + 1
        else:
            threshold_ok = degmin == cfg.n
            expect = q ** (dim - d)
            buckets = {}
            for f in chars:
                key = tuple(f.coeff(cfg.n - j).coeffs.tobytes()
                            for j in range(1, d + 1))
                buckets[key] = buckets.get(key, 0) + 1
        distinct = len({f.coeffs for f in chars})
        if threshold_ok:
            ok = all(c == expect for c in buckets.values())
        elif cfg.family == "gl":
            # below the degree threshold the fiber chars concentrate on
            # exactly q^{(k-1) deg min} values; no analog is asserted for
            # sp, where the perturbation is traceless
            ok = distinct == q ** ((ctx_k.k - 1) * degmin)
        else:
            ok = True
        all_pass = all_pass and ok
        results.append({"deg_min": degmin, "hypothesis": threshold_ok,
                        "buckets": len(buckets), "distinct": distinct,
                        "pass": ok})
    return {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(),
            "fiber_size": len(lie), "results": results, "pass": all_pass}


def run_fulman_consistency(cfg):
    """Exhaustive class frequencies against the exact formulas."""
    ctx = cfg.context()
    if ctx.k != 1:
        raise ValueError("consistency check runs at the residue level")
    spec = cfg.group_spec()
    group = enumerate_group(spec)
    order = len(group)
    counts = {}
    reps = {}
    for M in group:
        key = class_of_matrix_gl(M).canonical()
        counts[key] = counts.get(key, 0) + 1
        reps.setdefault(key, M)
    mismatches = []
    for key, count in counts.items():
        datum = class_of_matrix_gl(reps[key])
        pr = fulman_prob_gl(datum)
        if cfg.family == "gl":
            expected = pr
        else:
            # det-1 data: the GL class sits inside SL, so its SL-frequency
            # is the GL probability scaled by [GL : SL] = q - 1
            expected = pr * (ctx.q - 1)
        if Fraction(count, order) != expected:
            mismatches.append(key)
    return {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(),
            "order": order, "classes": len(counts),
            "mismatches": mismatches, "pass": not mismatches}


def group_order_at_level(spec):
    """|G(GR(p^k))| = |G(F_q)| q^{(k-1) dim g} by fiber counting."""
    ctx1 = spec.ctx.reduced_context(1)
    if spec.family == "so":
        spec1 = GroupSpec(spec.family, spec.size, ctx1, sign=spec.sign)
    else:
        spec1 = GroupSpec(spec.family, spec.size, ctx1)
    base = len(enumerate_group(spec1))
    dim = len(lie_algebra_basis(spec1))
    return base * spec.ctx.q ** ((spec.ctx.k - 1) * dim)
