"""The five matrix families over F_q and GR(p^k).

Membership tests, standard forms, Lie algebras, exact uniform sampling via
the residue-field sampler plus level-by-level unipotent fibers, and the
division-free matrix algebra (Berkowitz characteristic polynomial, adjugate
of xI - M, minimal polynomial over the residue field).
"""

from __future__ import annotations

import itertools

import numpy as np

from .galois_rings import GRElem, RingContext, NonUnitError, ContextMismatchError
from .polynomials import Poly

FAMILIES = ("gl", "sl", "sp", "so", "u")


class MembershipError(ValueError):
    pass


class Matrix:
    """Square matrix over GR(p^k, m); backed by an int array (n, n, m)."""

    __slots__ = ("ctx", "a")

    def __init__(self, ctx, a):
        self.ctx = ctx
        self.a = np.asarray(a, dtype=np.int64) % ctx.mod
        if self.a.ndim != 3 or self.a.shape[0] != self.a.shape[1] \
                or self.a.shape[2] != ctx.m:
            raise ValueError("expected shape (n, n, m)")
        self.a.setflags(write=False)

    # -- constructors --

    @classmethod
    def zero(cls, ctx, n):
        return cls(ctx, np.zeros((n, n, ctx.m), dtype=np.int64))

    @classmethod
    def identity(cls, ctx, n):
        a = np.zeros((n, n, ctx.m), dtype=np.int64)
        a[np.arange(n), np.arange(n), 0] = 1
        return cls(ctx, a)

    @classmethod
    def from_rows(cls, ctx, rows):
        """rows of GRElem (or ints, taken as base-ring scalars)."""
        n = len(rows)
        a = np.zeros((n, n, ctx.m), dtype=np.int64)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise ValueError("not square")
            for j, e in enumerate(row):
                if not isinstance(e, GRElem):
                    e = ctx.elem(e)
                elif e.ctx != ctx:
                    raise ContextMismatchError("entry from a different ring")
                a[i, j] = e.coeffs
        return cls(ctx, a)

    @classmethod
    def diag(cls, ctx, entries):
        n = len(entries)
        a = np.zeros((n, n, ctx.m), dtype=np.int64)
        for i, e in enumerate(entries):
            if not isinstance(e, GRElem):
                e = ctx.elem(e)
            a[i, i] = e.coeffs
        return cls(ctx, a)

    @classmethod
    def random(cls, ctx, n, rng):
        a = np.array([rng.randrange(ctx.mod)
                      for _ in range(n * n * ctx.m)], dtype=np.int64)
        return cls(ctx, a.reshape(n, n, ctx.m))

    @classmethod
    def block_diag(cls, blocks):
        ctx = blocks[0].ctx
        n = sum(b.n for b in blocks)
        a = np.zeros((n, n, ctx.m), dtype=np.int64)
        at = 0
        for b in blocks:
            a[at:at + b.n, at:at + b.n] = b.a
            at += b.n
        return cls(ctx, a)

    # -- basics --

    @property
    def n(self):
        return self.a.shape[0]

    def entry(self, i, j):
        return GRElem(self.ctx, self.a[i, j])

    def rows(self):
        return [[self.entry(i, j) for j in range(self.n)] for i in range(self.n)]

    def __eq__(self, other):
        return (isinstance(other, Matrix) and self.ctx == other.ctx
                and np.array_equal(self.a, other.a))

    def __hash__(self):
        return hash((self.ctx, self.a.tobytes()))

    def __add__(self, other):
        self._chk(other)
        return Matrix(self.ctx, self.a + other.a)

    def __sub__(self, other):
        self._chk(other)
        return Matrix(self.ctx, self.a - other.a)

    def __neg__(self):
        return Matrix(self.ctx, -self.a)

    def _chk(self, other):
        if not isinstance(other, Matrix) or other.ctx != self.ctx:
            raise ContextMismatchError("matrix operands must share a context")

    def scale(self, c):
        if not isinstance(c, GRElem):
            c = self.ctx.elem(c)
        m, mod = self.ctx.m, self.ctx.mod
        if m == 1:
            return Matrix(self.ctx, self.a * int(c.coeffs[0]) % mod)
        out = np.zeros_like(self.a)
        for t in range(m):
            v = int(c.coeffs[t])
            if v:
                full = np.zeros(self.a.shape[:2] + (2 * m - 1,), dtype=np.int64)
                full[:, :, t:t + m] = self.a * v % mod
                out = (out + full @ self.ctx._red) % mod
        return Matrix(self.ctx, out)

    def __mul__(self, other):
        if isinstance(other, GRElem):
            return self.scale(other)
        self._chk(other)
        ctx = self.ctx
        m, mod = ctx.m, ctx.mod
        if m == 1:
            c = self.a[:, :, 0] @ other.a[:, :, 0] % mod
            return Matrix(ctx, c[:, :, None])
        nn = self.n
        full = np.zeros((nn, nn, 2 * m - 1), dtype=np.int64)
        for s in range(m):
            for t in range(m):
                full[:, :, s + t] += self.a[:, :, s] @ other.a[:, :, t] % mod
        c = (full % mod) @ ctx._red % mod
        return Matrix(ctx, c)

    def __pow__(self, e):
        if e < 0:
            return self.inverse() ** (-e)
        acc = Matrix.identity(self.ctx, self.n)
        base = self
        while e:
            if e & 1:
                acc = acc * base
            base = base * base
            e >>= 1
        return acc

    def transpose(self):
        return Matrix(self.ctx, self.a.transpose(1, 0, 2))

    def sigma(self):
        return Matrix(self.ctx, self.a @ self.ctx.sigma_mat.T % self.ctx.mod)

    def tau(self):
        if self.ctx.m % 2:
            raise ValueError("tau needs an even extension degree")
        out = self
        for _ in range(self.ctx.m // 2):
            out = out.sigma()
        return out

    def conj_transpose(self):
        """M* = tau(M)^t, for quadratic-extension contexts."""
        return self.tau().transpose()

    def trace(self):
        return GRElem(self.ctx, self.a[np.arange(self.n), np.arange(self.n)].sum(axis=0))

    def reduce(self, k):
        ctx2 = self.ctx.reduced_context(k)
        return Matrix(ctx2, self.a % ctx2.mod)

    def lift(self, k):
        return Matrix(self.ctx.raised_context(k), self.a)

    def det(self):
        if self.ctx.m == 1:
            return self.ctx.elem(_det_bareiss(self.a[:, :, 0]) % self.ctx.mod)
        c = char_poly(self)
        return (-1) ** self.n * c.coeff(0)

    def is_unit(self):
        return self.det().is_unit()

    def inverse(self):
        """Via the characteristic polynomial: division-free up to det^{-1}.

        M (M^{n-1} + c_{n-1} M^{n-2} + ... + c_1 I) = -c_0 I.
        """
        c = char_poly(self)
        acc = Matrix.identity(self.ctx, self.n)
        for j in range(self.n - 1, 0, -1):
            acc = self * acc + Matrix.identity(self.ctx, self.n).scale(c.coeff(j))
        return acc.scale(-c.coeff(0).inv())

    def encode(self):
        def ent(i, j):
            return ":".join(str(int(v)) for v in self.a[i, j])
        return ";".join(",".join(ent(i, j) for j in range(self.n))
                        for i in range(self.n))

    def __repr__(self):
        return "Matrix(%r, [%s])" % (self.ctx, self.encode())


def decode_matrix(ctx, text):
    rows = []
    for rtext in text.split(";"):
        row = []
        for etext in rtext.split(","):
            row.append(ctx.elem([int(v) for v in etext.split(":")]))
        rows.append(row)
    return Matrix.from_rows(ctx, rows)


def _det_bareiss(a):
    """Exact integer determinant (fraction-free elimination)."""
    a = [[int(v) for v in row] for row in a]
    n = len(a)
    sign = 1
    prev = 1
    for j in range(n - 1):
        if a[j][j] == 0:
            for i in range(j + 1, n):
                if a[i][j] != 0:
                    a[i], a[j] = a[j], a[i]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(j + 1, n):
            for t in range(j + 1, n):
                a[i][t] = (a[i][t] * a[j][j] - a[i][j] * a[j][t]) // prev
        prev = a[j][j]
    return sign * a[n - 1][n - 1]


# ---------------------------------------------------------------------------
# characteristic polynomial (Berkowitz, division-free) and friends


def char_poly(M):
    """Monic char poly of M, valid over GR(p^k) for any p (no divisions)."""
    ctx, n = M.ctx, M.n
    if ctx.m == 1:
        return Poly(ctx, [ctx.elem(int(c))
                          for c in _berkowitz_m1(M.a[:, :, 0], ctx.mod)])
    E = [[M.entry(i, j) for j in range(n)] for i in range(n)]
    zero, one = ctx.zero(), ctx.one()
    c = [one]  # coefficients of char of the 0x0 block, leading first
    for i in range(1, n + 1):
        d = E[i - 1][i - 1]
        R = E[i - 1][:i - 1]
        C = [E[t][i - 1] for t in range(i - 1)]
        v = [one, -d]
        w = C[:]
        for _ in range(i - 1):
            v.append(-sum((R[t] * w[t] for t in range(i - 1)), zero))
            w = [sum((E[s][t] * w[t] for t in range(i - 1)), zero)
                 for s in range(i - 1)]
        nc = [zero] * (i + 1)
        for s in range(i + 1):
            for t in range(len(c)):
                if 0 <= s - t < len(v):
                    nc[s] = nc[s] + v[s - t] * c[t]
        c = nc
    return Poly(ctx, list(reversed(c)))


def _berkowitz_m1(A, mod):
    """Berkowitz over Z/mod for an int matrix; returns low-to-high coeffs."""
    n = A.shape[0]
    c = np.array([1], dtype=np.int64)
    for i in range(1, n + 1):
        d = int(A[i - 1, i - 1])
        R = A[i - 1, :i - 1]
        Msub = A[:i - 1, :i - 1]
        v = np.zeros(i + 1, dtype=np.int64)
        v[0] = 1
        v[1] = -d % mod
        w = A[:i - 1, i - 1].copy()
        for j in range(2, i + 1):
            v[j] = -int(R @ w) % mod
            w = Msub @ w % mod
        nc = np.zeros(i + 1, dtype=np.int64)
        for t in range(len(c)):
            nc[t:] = (nc[t:] + v[:i + 1 - t] * int(c[t])) % mod
        c = nc
    return list(reversed([int(x) % mod for x in c]))


def adjugate_x_minus(M):
    """Adj(xI - M) as a list of matrix coefficients [B_0, ..., B_{n-1}].

    Computed by the Horner recurrence B_{n-1} = I, B_{j-1} = M B_j + c_j I
    where c_j are the char poly coefficients; satisfies
    (xI - M) Adj(xI - M) = char(M) I identically.
    """
    ctx, n = M.ctx, M.n
    c = char_poly(M)
    B = [None] * n
    B[n - 1] = Matrix.identity(ctx, n)
    for j in range(n - 1, 0, -1):
        B[j - 1] = M * B[j] + Matrix.identity(ctx, n).scale(c.coeff(j))
    return B


def poly_matrix_entry(B, i, j):
    """Entry (i, j) of a matrix-coefficient polynomial as a Poly."""
    ctx = B[0].ctx
    return Poly(ctx, [Bt.entry(i, j) for Bt in B])


def min_poly_mod_p(M):
    """Minimal polynomial of the residue-field reduction of M."""
    M = M.reduce(1)
    ctx, n = M.ctx, M.n
    powers = [Matrix.identity(ctx, n)]
    rows = []  # echelon rows, each with attached combination-of-powers vector
    for r in range(1, n + 2):
        powers.append(powers[-1] * M)
        vec = [powers[r - 1].entry(i, j) for i in range(n) for j in range(n)]
        comb = [ctx.one() if t == r - 1 else ctx.zero() for t in range(r)]
        for prow, pcomb, piv in rows:
            c = vec[piv]
            if not c.is_zero():
                vec = [a - c * b for a, b in zip(vec, prow)]
                pad = pcomb + [ctx.zero()] * (r - len(pcomb))
                comb = [a - c * b for a, b in zip(comb, pad)]
        nz = next((t for t, a in enumerate(vec) if not a.is_zero()), None)
        if nz is None:
            # sum_t comb[t] M^t = 0 and comb[r-1] = 1: monic annihilator
            return Poly(ctx, comb)
        pivinv = vec[nz].inv()
        vec = [a * pivinv for a in vec]
        comb = [a * pivinv for a in comb]
        rows.append((vec, comb, nz))
    raise RuntimeError("no annihilator found (impossible)")


# ---------------------------------------------------------------------------
# group specifications and standard forms


def anti_identity(ctx, n):
    """Lambda_n: ones on the anti-diagonal."""
    a = np.zeros((n, n, ctx.m), dtype=np.int64)
    a[np.arange(n), n - 1 - np.arange(n), 0] = 1
    return Matrix(ctx, a)


def nonsquare_unit(ctx):
    """A fixed non-square unit of the residue field, lifted."""
    ctx1 = ctx.reduced_context(1)
    squares = {(u * u).coeffs.tobytes() for u in ctx1.units()}
    for u in ctx1.units():
        if u.coeffs.tobytes() not in squares:
            return ctx.elem(list(u.coeffs))
    raise RuntimeError("no non-square found")


def quadratic_character(a):
    """chi_2 of a unit of the residue field: +1 for squares, -1 otherwise."""
    a = a.reduce(1) if a.ctx.k > 1 else a
    if not a.is_unit():
        return 0
    return 1 if a ** ((a.ctx.q - 1) // 2) == a.ctx.one() else -1


def symplectic_form(ctx, size):
    if size % 2:
        raise ValueError("symplectic size must be even")
    h = size // 2
    a = np.zeros((size, size, ctx.m), dtype=np.int64)
    for i in range(h):
        a[i, h + i, 0] = 1
        a[h + i, i, 0] = (-1) % ctx.mod
    return Matrix(ctx, a)


def orthogonal_form(ctx, n, sign):
    """The standard symmetric form of size n and type sign.

    Odd n: anti-diagonal ones with middle entry 1 (+) or delta (-).
    Even n: anti-diagonal ones (+), or with the middle 2x2 block replaced
    by diag(1, -delta) (-). The type is chi_2(det(K) (-1)^{floor(n/2)}).
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    K = anti_identity(ctx, n)
    if sign == 1:
        return K
    delta = nonsquare_unit(ctx)
    a = np.array(K.a)
    h = n // 2
    if n % 2 == 1:
        a[h, h] = delta.coeffs
    else:
        a[h - 1, h] = 0
        a[h, h - 1] = 0
        a[h - 1, h - 1] = ctx.one().coeffs
        a[h, h] = (-delta).coeffs
    return Matrix(ctx, a)


def form_type(K):
    """chi_2(det(K) (-1)^{floor(n/2)}) for a symmetric form K."""
    n = K.n
    return quadratic_character(K.det() * K.ctx.elem((-1) ** (n // 2)))


class GroupSpec:
    """One of the five families at a fixed size over a fixed context."""

    def __init__(self, family, size, ctx, sign=None):
        if family not in FAMILIES:
            raise ValueError("unknown family %r" % family)
        if family == "sp" and size % 2:
            raise ValueError("sp needs even size")
        if family == "so" and sign not in (1, -1):
            raise ValueError("so needs sign +1 or -1")
        if family != "so" and sign is not None:
            raise ValueError("sign is only meaningful for so")
        if family == "u" and ctx.m % 2:
            raise ValueError("u needs a quadratic-extension context")
        self.family = family
        self.size = size
        self.ctx = ctx
        self.sign = sign
        if family == "sp":
            self.form = symplectic_form(ctx, size)
        elif family == "so":
            self.form = orthogonal_form(ctx, size, sign)
        elif family == "u":
            self.form = Matrix.identity(ctx, size)
        else:
            self.form = None

    def reduced(self, k):
        return GroupSpec(self.family, self.size, self.ctx.reduced_context(k),
                         self.sign)

    def is_member(self, M):
        if M.ctx != self.ctx or M.n != self.size:
            return False
        if self.family == "gl":
            return M.det().is_unit()
        if self.family == "sl":
            return M.det() == self.ctx.one()
        if self.family == "sp":
            return M.transpose() * self.form * M == self.form
        if self.family == "so":
            return (M.transpose() * self.form * M == self.form
                    and M.det() == self.ctx.one())
        return M * M.conj_transpose() == Matrix.identity(self.ctx, self.size)

    def __repr__(self):
        tag = self.family + ("+" if self.sign == 1 else "-" if self.sign == -1 else "")
        return "GroupSpec(%s_%d over %r)" % (tag, self.size, self.ctx)


# ---------------------------------------------------------------------------
# Lie algebras


def lie_algebra_basis(spec):
    """Basis matrices of the Lie algebra over the residue field.

    The span is over F_q for gl/sl/sp/so and over the tau-fixed subfield
    for u (whose defining condition X* = -X is only semilinear over F_q).
    """
    ctx = spec.ctx.reduced_context(1)
    n = spec.size
    fam = spec.family
    if fam == "gl":
        return [_unit_matrix(ctx, n, i, j) for i in range(n) for j in range(n)]
    if fam == "sl":
        basis = [_unit_matrix(ctx, n, i, j)
                 for i in range(n) for j in range(n) if i != j]
        for i in range(n - 1):
            basis.append(_unit_matrix(ctx, n, i, i)
                         - _unit_matrix(ctx, n, n - 1, n - 1))
        return basis
    if fam == "u":
        iota = next(a for a in ctx.units() if a.tau() == -a)
        one = ctx.one()
        basis = []
        for i in range(n):
            basis.append(_scaled_unit(ctx, n, i, i, iota))
        for i in range(n):
            for j in range(i + 1, n):
                for b in (one, iota):
                    basis.append(_scaled_unit(ctx, n, i, j, b)
                                 - _scaled_unit(ctx, n, j, i, b.tau()))
        return basis
    # sp / so: solve B X + X^t B = 0 by row reduction over F_q
    B = spec.form.reduce(1) if spec.ctx.k > 1 else spec.form
    coords = [(i, j) for i in range(n) for j in range(n)]
    rows = []
    for i, j in coords:
        E = _unit_matrix(ctx, n, i, j)
        C = B * E + E.transpose() * B
        rows.append([C.entry(s, t) for s in range(n) for t in range(n)])
    # nullspace of the (n^2 x n^2) system; unknowns indexed by coords
    return [_coords_to_matrix(ctx, n, coords, vec)
            for vec in _nullspace(ctx, _transpose_grelem(rows))]


def _unit_matrix(ctx, n, i, j):
    a = np.zeros((n, n, ctx.m), dtype=np.int64)
    a[i, j, 0] = 1
    return Matrix(ctx, a)


def _scaled_unit(ctx, n, i, j, c):
    a = np.zeros((n, n, ctx.m), dtype=np.int64)
    a[i, j] = c.coeffs
    return Matrix(ctx, a)


def _coords_to_matrix(ctx, n, coords, vec):
    a = np.zeros((n, n, ctx.m), dtype=np.int64)
    for (i, j), c in zip(coords, vec):
        a[i, j] = c.coeffs
    return Matrix(ctx, a)


def _transpose_grelem(rows):
    return [list(col) for col in zip(*rows)]


def _rref(ctx, rows):
    """Reduced row echelon form over a field context; returns (rows, pivots)."""
    rows = [list(r) for r in rows]
    pivots = []
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows))
                    if not rows[i][c].is_zero()), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c].inv()
        rows[r] = [a * inv for a in rows[r]]
        for i in range(len(rows)):
            if i != r and not rows[i][c].is_zero():
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def _nullspace(ctx, rows):
    """Basis of the nullspace of the GRElem matrix 'rows' over a field."""
    if not rows:
        return []
    ncols = len(rows[0])
    red, pivots = _rref(ctx, rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [ctx.zero()] * ncols
        vec[fc] = ctx.one()
        for prow, pc in zip(red, pivots):
            vec[pc] = -prow[fc]
        basis.append(vec)
    return basis


def _solve_affine(ctx, rows, rhs):
    """One solution + nullspace basis of rows * v = rhs over a field.

    Returns None when inconsistent.
    """
    ncols = len(rows[0]) if rows else 0
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = _rref(ctx, aug)
    for prow, pc in zip(red, pivots):
        if pc == ncols:
            return None
    particular = [ctx.zero()] * ncols
    for prow, pc in zip(red, pivots):
        particular[pc] = prow[ncols]
    if rows:
        null = _nullspace(ctx, [r[:ncols] for r in rows])
    else:
        null = [[ctx.one() if t == s else ctx.zero() for t in range(ncols)]
                for s in range(ncols)]
    return particular, null


# ---------------------------------------------------------------------------
# exact uniform sampling


def sample_fq(spec, rng):
    """Exactly uniform sample from G(F_q) (residue-field level)."""
    ctx = spec.ctx.reduced_context(1)
    spec1 = spec if spec.ctx.k == 1 else spec.reduced(1)
    n = spec.size
    if spec.family in ("gl", "sl"):
        while True:
            M = Matrix.random(ctx, n, rng)
            d = M.det()
            if d.is_unit():
                break
        if spec.family == "gl":
            return M
        a = np.array(M.a)
        dinv = d.inv()
        for j in range(n):
            a[0, j] = (M.entry(0, j) * dinv).coeffs
        return Matrix(ctx, a)
    # sp / so / u: column-by-column completion of a form isometry
    fast = ctx.q <= 81
    while True:
        M = (_sample_isometry_tab(spec1, ctx, rng) if fast
             else _sample_isometry(spec1, ctx, rng))
        if spec.family != "so" or M.det() == ctx.one():
            return M


def _sample_isometry(spec, ctx, rng):
    """Uniform matrix with column Gram matrix equal to the form."""
    n = spec.size
    B = spec.form
    unitary = spec.family == "u"
    cols = []
    echelon = []  # rref of chosen columns, for independence tests
    elems = list(ctx.elements())
    j = 0
    while j < n:
        rows = []
        rhs = []
        for i, ci in enumerate(cols):
            if unitary:
                rows.append([c.tau() for c in ci])
                rhs.append(ctx.one() if i == j else ctx.zero())
            else:
                rows.append(_row_times_form(B, ci))
                rhs.append(B.entry(i, j))
        sol = _solve_affine(ctx, rows, rhs) if rows else \
            ([ctx.zero()] * n,
             [[ctx.one() if t == s else ctx.zero() for t in range(n)]
              for s in range(n)])
        if sol is None:
            raise RuntimeError("inconsistent Gram system (not a valid form)")
        particular, null = sol
        while True:
            v = list(particular)
            for bvec in null:
                c = elems[rng.randrange(len(elems))]
                v = [a + c * b for a, b in zip(v, bvec)]
            # self pairing
            if unitary:
                val = sum((a.tau() * a for a in v), ctx.zero())
                want = ctx.one()
            else:
                Bv = _matvec(B, v)
                val = sum((a * b for a, b in zip(v, Bv)), ctx.zero())
                want = B.entry(j, j)
            if val != want:
                continue
            if _dependent(ctx, echelon, v):
                continue
            break
        cols.append(v)
        _echelon_insert(ctx, echelon, v)
        j += 1
    a = np.zeros((n, n, ctx.m), dtype=np.int64)
    for j, col in enumerate(cols):
        for i, e in enumerate(col):
            a[i, j] = e.coeffs
    return Matrix(ctx, a)


_FIELD_TAB_CACHE = {}


def _field_tables(ctx):
    """Index-based arithmetic tables for a small residue field."""
    key = (ctx.p, ctx.m)
    tab = _FIELD_TAB_CACHE.get(key)
    if tab is None:
        elems = list(ctx.elements())
        idx = {e.coeffs.tobytes(): i for i, e in enumerate(elems)}
        add = [[idx[(a + b).coeffs.tobytes()] for b in elems] for a in elems]
        mul = [[idx[(a * b).coeffs.tobytes()] for b in elems] for a in elems]
        neg = [idx[(-a).coeffs.tobytes()] for a in elems]
        inv = [idx[a.inv().coeffs.tobytes()] if a.is_unit() else -1
               for a in elems]
        if ctx.m % 2 == 0:
            conj = [idx[a.tau().coeffs.tobytes()] for a in elems]
        else:
            conj = list(range(len(elems)))
        zero = idx[ctx.zero().coeffs.tobytes()]
        one = idx[ctx.one().coeffs.tobytes()]
        tab = (elems, idx, add, mul, neg, inv, conj, zero, one)
        _FIELD_TAB_CACHE[key] = tab
    return tab


def _rref_tab(tab, rows):
    add, mul, neg, inv, zero = tab[2], tab[3], tab[4], tab[5], tab[7]
    rows = [list(r) for r in rows]
    pivots = []
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != zero),
                   None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        iv = mul[inv[rows[r][c]]]
        rows[r] = [iv[a] for a in rows[r]]
        mrow = rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c] != zero:
                fr = mul[neg[rows[i][c]]]
                rows[i] = [add[a][fr[b]] for a, b in zip(rows[i], mrow)]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def _solve_affine_tab(tab, rows, rhs, ncols):
    zero, one = tab[7], tab[8]
    neg = tab[4]
    if not rows:
        return ([zero] * ncols,
                [[one if t == s else zero for t in range(ncols)]
                 for s in range(ncols)])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = _rref_tab(tab, aug)
    for prow, pc in zip(red, pivots):
        if pc == ncols:
            return None
    particular = [zero] * ncols
    for prow, pc in zip(red, pivots):
        particular[pc] = prow[ncols]
    red2, piv2 = _rref_tab(tab, [r[:ncols] for r in rows])
    free = [c for c in range(ncols) if c not in piv2]
    null = []
    for fc in free:
        vec = [zero] * ncols
        vec[fc] = one
        for prow, pc in zip(red2, piv2):
            vec[pc] = neg[prow[fc]]
        null.append(vec)
    return particular, null


def _sample_isometry_tab(spec, ctx, rng):
    """Table-driven twin of _sample_isometry for small residue fields."""
    tab = _field_tables(ctx)
    elems, idx, add, mul, neg, inv, conj, zero, one = tab
    q = len(elems)
    n = spec.size
    unitary = spec.family == "u"
    B = [[idx[spec.form.entry(i, j).coeffs.tobytes()] for j in range(n)]
         for i in range(n)]
    cols = []
    echelon = []
    for j in range(n):
        rows = []
        rhs = []
        for i, ci in enumerate(cols):
            if unitary:
                rows.append([conj[c] for c in ci])
                rhs.append(one if i == j else zero)
            else:
                row = []
                for jj in range(n):
                    acc = zero
                    for t in range(n):
                        acc = add[acc][mul[ci[t]][B[t][jj]]]
                    row.append(acc)
                rows.append(row)
                rhs.append(B[i][j])
        sol = _solve_affine_tab(tab, rows, rhs, n)
        if sol is None:
            raise RuntimeError("inconsistent Gram system (not a valid form)")
        particular, null = sol
        while True:
            v = list(particular)
            for bvec in null:
                mc = mul[rng.randrange(q)]
                v = [add[a][mc[b]] for a, b in zip(v, bvec)]
            if unitary:
                val = zero
                for a in v:
                    val = add[val][mul[conj[a]][a]]
                want = one
            else:
                val = zero
                for i in range(n):
                    if v[i] != zero:
                        acc = zero
                        bi = B[i]
                        for t in range(n):
                            acc = add[acc][mul[bi[t]][v[t]]]
                        val = add[val][mul[v[i]][acc]]
                want = B[j][j]
            if val != want:
                continue
            w = list(v)
            for prow, piv in echelon:
                c = w[piv]
                if c != zero:
                    fr = mul[neg[c]]
                    w = [add[a][fr[b]] for a, b in zip(w, prow)]
            if all(a == zero for a in w):
                continue
            break
        piv = next(t for t, a in enumerate(w) if a != zero)
        ivr = mul[inv[w[piv]]]
        echelon.append(([ivr[a] for a in w], piv))
        cols.append(v)
    a = np.zeros((n, n, ctx.m), dtype=np.int64)
    for j, col in enumerate(cols):
        for i, e in enumerate(col):
            a[i, j] = elems[e].coeffs
    return Matrix(ctx, a)


def _matvec(B, v):
    n = B.n
    # row i of B^t ... we need (B v)_i with v the candidate column pairing
    # against previous columns: <u, v> = u^t B v, so row vector is u^t B
    return [sum((B.entry(i, t) * v[t] for t in range(n)), B.ctx.zero())
            for i in range(n)]


def _row_times_form(B, u):
    n = B.n
    return [sum((u[t] * B.entry(t, j) for t in range(n)), B.ctx.zero())
            for j in range(n)]


def _dependent(ctx, echelon, v):
    v = list(v)
    for prow, piv in echelon:
        c = v[piv]
        if not c.is_zero():
            v = [a - c * b for a, b in zip(v, prow)]
    return all(a.is_zero() for a in v)


def _echelon_insert(ctx, echelon, v):
    v = list(v)
    for prow, piv in echelon:
        c = v[piv]
        if not c.is_zero():
            v = [a - c * b for a, b in zip(v, prow)]
    piv = next(t for t, a in enumerate(v) if not a.is_zero())
    inv = v[piv].inv()
    echelon.append(([a * inv for a in v], piv))


def hensel_lift_section(M, spec, to_level, check=True):
    """Deterministic member of G at to_level reducing to the member M."""
    k = to_level
    if M.ctx.k != k - 1:
        raise ValueError("input must live at level to_level - 1")
    ctx = M.ctx.raised_context(k)
    spec_k = GroupSpec(spec.family, spec.size, ctx, spec.sign)
    if check and not GroupSpec(spec.family, spec.size, M.ctx,
                               spec.sign).is_member(M):
        raise MembershipError("input is not a member at its level")
    M0 = M.lift(k)
    n = spec.size
    p = ctx.p
    eps = p ** (k - 1)
    fam = spec.family
    if fam == "gl":
        return M0
    if fam == "sl":
        d = M0.det()
        a = np.array(M0.a)
        dinv = d.inv()
        for j in range(n):
            a[0, j] = (M0.entry(0, j) * dinv).coeffs
        return Matrix(ctx, a)
    if fam in ("sp", "so"):
        B = spec_k.form
        Ek = M0.transpose() * B * M0 - B
        E = Matrix(ctx, Ek.a // eps % p)
        half = ctx.elem(pow(2, -1, ctx.mod))
        C = (_form_inverse(spec_k) * E).scale(-half)
        out = M0 * (Matrix.identity(ctx, n) + Matrix(ctx, C.a * eps))
        assert spec_k.is_member(out)
        return out
    # unitary: M M* = I
    Ek = M0 * M0.conj_transpose() - Matrix.identity(ctx, n)
    E = Matrix(ctx, Ek.a // eps % p)
    half = ctx.elem(pow(2, -1, ctx.mod))
    C = E.scale(-half)
    out = (Matrix.identity(ctx, n) + Matrix(ctx, C.a * eps)) * M0
    assert spec_k.is_member(out)
    return out


def sample_haar(spec, rng, k=None):
    """Exactly uniform sample from G(GR(p^k)).

    Residue-field sample, then one unipotent fiber per level: the members
    at level j over a fixed member at level j-1 are exactly
    M_section (I + p^{j-1} A1) with A1 ranging over the Lie algebra span.
    """
    if k is None:
        k = spec.ctx.k
    M = sample_fq(spec, rng)
    if k == 1:
        return M
    n = spec.size
    p = spec.ctx.p
    basis, pool, stack = _lie_data(spec)
    for level in range(2, k + 1):
        M = hensel_lift_section(M, spec, level, check=False)
        ctx_l = M.ctx
        if stack is not None:
            coeffs = np.array([rng.randrange(p) for _ in range(len(basis))],
                              dtype=np.int64)
            a = np.einsum("b,bij->ij", coeffs, stack) % p
            a = a[:, :, None]
        else:
            a = np.zeros((n, n, ctx_l.m), dtype=np.int64)
            for bmat in basis:
                c = pool[rng.randrange(len(pool))]
                if c.is_zero():
                    continue
                term = bmat.lift(level).scale(ctx_l.elem(list(c.coeffs)))
                a = (a + term.a) % ctx_l.mod
        pert = Matrix.identity(ctx_l, n) + Matrix(ctx_l, a * p ** (level - 1))
        M = M * pert
    return M


_FORM_INV_CACHE = {}


def _form_inverse(spec):
    key = (spec.family, spec.size, spec.ctx, spec.sign)
    if key not in _FORM_INV_CACHE:
        _FORM_INV_CACHE[key] = spec.form.inverse()
    return _FORM_INV_CACHE[key]


_LIE_CACHE = {}


def _lie_data(spec):
    key = (spec.family, spec.size, spec.ctx.p, spec.ctx.m, spec.sign)
    if key not in _LIE_CACHE:
        basis = lie_algebra_basis(spec)
        pool = _lie_coefficient_pool(spec)
        stack = None
        if spec.ctx.m == 1:
            stack = np.stack([b.a[:, :, 0] for b in basis])
        _LIE_CACHE[key] = (basis, pool, stack)
    return _LIE_CACHE[key]


def _lie_coefficient_pool(spec):
    ctx1 = spec.ctx.reduced_context(1)
    if spec.family == "u":
        return [a for a in ctx1.elements() if a.tau() == a]
    return list(ctx1.elements())


def enumerate_group(spec):
    """All members at the spec's own level, by brute force (tiny sizes only)."""
    ctx, n = spec.ctx, spec.size
    count = ctx.mod ** (ctx.m * n * n)
    if count > 10 ** 6:
        raise ValueError("enumeration too large")
    out = []
    for flat in itertools.product(range(ctx.mod), repeat=n * n * ctx.m):
        a = np.array(flat, dtype=np.int64).reshape(n, n, ctx.m)
        M = Matrix(ctx, a)
        if spec.is_member(M):
            out.append(M)
    return out
