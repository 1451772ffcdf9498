"""Derivative of the characteristic polynomial along the Lie algebra.

For a member A0 of G(F_q), the level-k members above a fixed level-(k-1)
member differ by unipotent factors I + p^{k-1} A1, and

    char(A0 (I + p^{k-1} A1)) = char(A0) - p^{k-1} dchar_{A0}(A1)

exactly, where dchar_{A0}(A1) = tr(Adj(x - A0) A0 A1).  This module computes
that linear map on the Lie algebra, its image, the predicted image for each
family (a scaled polynomial / palindromic / skew-palindromic space), explicit
block representatives of conjugacy classes with closed-form adjugates, the
join operators, and Witt-class bookkeeping for the orthogonal family.
"""

from __future__ import annotations

import numpy as np

from .galois_rings import GRElem, RingContext
from .matrix_groups import (
    GroupSpec,
    Matrix,
    adjugate_x_minus,
    anti_identity,
    char_poly,
    lie_algebra_basis,
    min_poly_mod_p,
    nonsquare_unit,
    orthogonal_form,
    poly_matrix_entry,
    quadratic_character,
    symplectic_form,
    _rref,
)
from .polynomials import Poly, hilbert90_beta, monomial, x_poly


# ---------------------------------------------------------------------------
# the map and its image


def dchar_poly(A0, A1):
    """tr(Adj(x - A0) A0 A1) as a Poly of degree < n."""
    ctx, n = A0.ctx, A0.n
    adj = adjugate_x_minus(A0)
    prod = A0 * A1
    return Poly(ctx, [(Bj * prod).trace() for Bj in adj])


def dchar_poly_noncentral(A0, A1):
    """x * tr(Adj(x - A0) A1); equals dchar_poly when tr(A1) = 0."""
    ctx = A0.ctx
    adj = adjugate_x_minus(A0)
    return Poly(ctx, [ctx.zero()] + [(Bj * A1).trace() for Bj in adj])


class LinearMapOnLie:
    """dchar (or dtrace) evaluated on a Lie-algebra basis.

    columns[t] is the value on basis element t, as a Poly.  For the unitary
    family the span is over the tau-fixed subfield; elsewhere over the
    context field.
    """

    def __init__(self, spec, A0, basis, columns):
        self.spec = spec
        self.A0 = A0
        self.basis = basis
        self.columns = columns

    def image_rref(self):
        ctx = self.A0.ctx
        n = self.spec.size
        rows = [_poly_to_vector(c, ctx, n, self.spec.family == "u")
                for c in self.columns]
        return _canonical_rows(ctx, rows)

    @property
    def rank(self):
        return len(self.image_rref())


def _fixed_field_split(ctx):
    """(iota, inv2) with tau(iota) = -iota, for splitting F_{q^2} over F_q."""
    iota = next(a for a in ctx.units() if a.tau() == -a)
    inv2 = ctx.elem(pow(2, -1, ctx.mod))
    return iota, inv2


def _poly_to_vector(f, ctx, n, split_fixed):
    """Coefficient vector of f; for the unitary family each F_{q^2}
    coefficient is split into two tau-fixed components."""
    coeffs = [f.coeff(i) for i in range(n)]
    if not split_fixed:
        return coeffs
    iota, inv2 = _fixed_field_split(ctx)
    iota_inv = iota.inv()
    out = []
    for c in coeffs:
        a = (c + c.tau()) * inv2
        b = (c - c.tau()) * inv2 * iota_inv
        out.extend([a, b])
    return out


def _canonical_rows(ctx, rows):
    rows = [r for r in rows if any(not a.is_zero() for a in r)]
    if not rows:
        return []
    red, _ = _rref(ctx, rows)
    return red


def dchar_map(A0, spec):
    if not spec.is_member(A0):
        raise ValueError("A0 is not a member of the group")
    basis = lie_algebra_basis(spec)
    cols = [dchar_poly(A0, B) for B in basis]
    return LinearMapOnLie(spec, A0, basis, cols)


def dtrace_functional(A0, r, spec):
    """A1 -> r tr(A0^r A1), packaged as a rank <= 1 map (constant polys)."""
    ctx = A0.ctx
    basis = lie_algebra_basis(spec)
    P = A0 ** r
    rc = ctx.elem(r)
    cols = [Poly(ctx, [rc * (P * B).trace()]) for B in basis]
    return LinearMapOnLie(spec, A0, basis, cols)


# ---------------------------------------------------------------------------
# predicted images


def predicted_image(A0, spec):
    """Basis (list of Poly) of the predicted image of dchar_{A0}."""
    ctx = A0.ctx
    if ctx.k != 1:
        raise ValueError("predicted_image works at the residue level")
    n = spec.size
    g = char_poly(A0)
    h = min_poly_mod_p(A0)
    co = g // h
    d = h.degree
    fam = spec.family
    if fam == "gl":
        return [co * monomial(ctx, j) for j in range(d)]
    if fam == "sl":
        return [co * monomial(ctx, j) for j in range(1, d)]
    if fam in ("sp", "so"):
        # the min poly satisfies x^d h(1/x) = eps h with eps = h(0) = +-1;
        # the image carries the same symmetry type
        eps = h.coeff(0)
        return [co * b for b in _signed_palindromic_basis(ctx, d, eps)]
    # unitary: F_q J + (char/min) * (h(0)-skew-palindromic, degree < d)
    iota, _ = _fixed_field_split(ctx)
    J = co * (h - monomial(ctx, d) + Poly(ctx, [h.coeff(0)])) * iota
    out = [J]
    alpha = h.coeff(0)
    for b in _skew_palindromic_basis(ctx, d, alpha):
        out.append(co * b)
    return out


def _signed_palindromic_basis(ctx, n, eps):
    """Basis of {f of degree < n : x^n f(1/x) = eps f} for eps = +-1."""
    out = []
    for i in range(1, (n + 1) // 2):
        out.append(monomial(ctx, i) + monomial(ctx, n - i, eps))
    if n % 2 == 0 and n >= 2 and eps == ctx.one():
        out.append(monomial(ctx, n // 2))
    return out


def _star_symmetric_basis(ctx, n):
    """F_q-basis of {f in F_{q^2}[x], deg < n : x^n tau(f)(1/x) = f}."""
    iota, _ = _fixed_field_split(ctx)
    out = []
    for i in range(1, (n + 1) // 2):
        for c in (ctx.one(), iota):
            out.append(monomial(ctx, i, c) + monomial(ctx, n - i, c.tau()))
    if n % 2 == 0 and n >= 2:
        out.append(monomial(ctx, n // 2))  # middle coefficient tau-fixed
    return out


def _skew_palindromic_basis(ctx, n, alpha):
    """F_q-basis of {f, deg < n : x^n tau(f)(1/x) = tau(alpha) f}."""
    beta = hilbert90_beta(ctx, alpha)
    beta_inv = beta.inv()
    return [b * beta_inv for b in _star_symmetric_basis(ctx, n)]


def verify_image(A0, spec, extend=False):
    """Check computed image == predicted image; returns (ok, report dict)."""
    if extend and spec.ctx.m == 1:
        lift = _splitting_extension(A0, spec)
        if lift is not None:
            A0, spec = lift
    lm = dchar_map(A0, spec)
    computed = lm.image_rref()
    ctx = A0.ctx
    n = spec.size
    pred_rows = [_poly_to_vector(f, ctx, n, spec.family == "u")
                 for f in predicted_image(A0, spec)]
    predicted = _canonical_rows(ctx, pred_rows)
    ok = computed == predicted
    report = {
        "family": spec.family,
        "n": spec.size,
        "q": ctx.q,
        "a0_digest": A0.encode(),
        "rank_computed": len(computed),
        "rank_predicted": len(predicted),
        "pass": ok,
    }
    return ok, report


def _splitting_extension(A0, spec):
    """Re-embed A0 over F_{q^l} where its char poly splits (l <= 6)."""
    from .polynomials import factor

    g = char_poly(A0.reduce(1) if A0.ctx.k > 1 else A0)
    degs = [phi.degree for phi, _ in factor(g)]
    l = 1
    for dgr in degs:
        l = l * dgr // _gcd(l, dgr)
    if l == 1 or l > 6:
        return None
    ectx = RingContext(spec.ctx.p, l, 1)
    a = np.zeros((spec.size, spec.size, l), dtype=np.int64)
    a[:, :, 0] = A0.a[:, :, 0]
    M = Matrix(ectx, a)
    return M, GroupSpec(spec.family, spec.size, ectx, spec.sign)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


# ---------------------------------------------------------------------------
# Witt classes


class WittClass:
    """Element of the Witt group of F_q, tracked as (#squares, #non-squares)
    of a diagonalization, reduced to a canonical tag."""

    TAGS = ("0", "1", "d", "1-d")

    def __init__(self, q, n_square, n_nonsquare):
        self.q = q
        if q % 4 == 1:
            key = (n_square % 2, n_nonsquare % 2)
            self.tag = {(0, 0): "0", (1, 0): "1",
                        (0, 1): "d", (1, 1): "1-d"}[key]
        else:
            key = (n_square - n_nonsquare) % 4
            self.tag = {0: "0", 1: "1", 2: "1-d", 3: "d"}[key]

    def __add__(self, other):
        if self.q != other.q:
            raise ValueError("mixed fields")
        a1, b1 = self._counts()
        a2, b2 = other._counts()
        return WittClass(self.q, a1 + a2, b1 + b2)

    def _counts(self):
        if self.q % 4 == 1:
            return {"0": (0, 0), "1": (1, 0),
                    "d": (0, 1), "1-d": (1, 1)}[self.tag]
        # q = 3 (mod 4): the class is determined by (a - b) mod 4
        return {"0": (0, 0), "1": (1, 0), "1-d": (2, 0), "d": (3, 0)}[self.tag]

    def __eq__(self, other):
        return isinstance(other, WittClass) and (self.q, self.tag) == (other.q, other.tag)

    def __hash__(self):
        return hash((self.q, self.tag))

    def __repr__(self):
        return "WittClass(q=%d, <%s>)" % (self.q, self.tag)


def witt_class_of_form(K):
    """Witt class of a nondegenerate symmetric matrix over F_q."""
    ctx = K.ctx
    diag = _diagonalize_form(K)[1]
    ns = sum(1 for dv in diag if quadratic_character(dv) == 1)
    nn = sum(1 for dv in diag if quadratic_character(dv) == -1)
    if ns + nn != len(diag):
        raise ValueError("degenerate form")
    return WittClass(ctx.q, ns, nn)


def _diagonalize_form(K):
    """P with P^t K P diagonal; returns (P as column list, diagonal values)."""
    ctx, n = K.ctx, K.n
    G = [[K.entry(i, j) for j in range(n)] for i in range(n)]
    basis = [[ctx.one() if t == i else ctx.zero() for t in range(n)]
             for i in range(n)]

    def bform(u, v):
        return sum((u[i] * G[i][j] * v[j] for i in range(n) for j in range(n)),
                   ctx.zero())

    cols, diag = [], []
    while basis:
        v = next((b for b in basis if not bform(b, b).is_zero()), None)
        if v is None:
            # all basis vectors isotropic; some cross term must be nonzero
            found = None
            for i in range(len(basis)):
                for j in range(i + 1, len(basis)):
                    if not bform(basis[i], basis[j]).is_zero():
                        found = [a + b for a, b in zip(basis[i], basis[j])]
                        break
                if found:
                    break
            if found is None:
                break  # remaining space is in the radical
            v = found
        qv = bform(v, v)
        cols.append(v)
        diag.append(qv)
        qv_inv = qv.inv()
        newbasis = []
        for b in basis:
            c = bform(v, b) * qv_inv
            w = [a - c * s for a, s in zip(b, v)]
            if any(not a.is_zero() for a in w):
                newbasis.append(w)
        # keep an independent subset
        basis = _independent_subset(ctx, newbasis, n - len(cols))
    return cols, diag


def _independent_subset(ctx, vecs, want):
    rows, keep = [], []
    for v in vecs:
        r = list(v)
        for prow, piv in rows:
            c = r[piv]
            if not c.is_zero():
                r = [a - c * b for a, b in zip(r, prow)]
        piv = next((t for t, a in enumerate(r) if not a.is_zero()), None)
        if piv is None:
            continue
        inv = r[piv].inv()
        rows.append(([a * inv for a in r], piv))
        keep.append(v)
        if len(keep) == want:
            break
    return keep


def _sqrt_table(ctx):
    tbl = {}
    for u in ctx.elements():
        key = (u * u).coeffs.tobytes()
        tbl.setdefault(key, u)
    return tbl


def congruence_transform(G, K):
    """X with X^t G X = K, for congruent nondegenerate symmetric forms."""
    ctx, n = G.ctx, G.n
    PG = _normalized_diagonalizer(G)
    PK = _normalized_diagonalizer(K)
    X = PG * PK.inverse()
    if not X.transpose() * G * X == K:
        raise ValueError("forms are not congruent")
    return X


def _normalized_diagonalizer(K):
    """P with P^t K P = diag(1,...,1[,delta]) (delta count 0 or 1)."""
    ctx, n = K.ctx, K.n
    cols, diag = _diagonalize_form(K)
    if len(cols) != n:
        raise ValueError("degenerate form")
    sqrt = _sqrt_table(ctx)
    delta = nonsquare_unit(ctx)
    norm_cols = []
    classes = []
    for v, dv in zip(cols, diag):
        if quadratic_character(dv) == 1:
            s = sqrt[dv.coeffs.tobytes()].inv()
            cls = 1
        else:
            s = sqrt[(dv * delta.inv()).coeffs.tobytes()].inv()
            cls = -1
        norm_cols.append(([a * s for a in v], cls))
        classes.append(cls)
    # order: squares first, then delta entries
    norm_cols.sort(key=lambda t: t[1], reverse=True)
    cols = [c for c, _ in norm_cols]
    n_delta = sum(1 for _, cls in norm_cols if cls == -1)
    # reduce delta pairs: T^t diag(delta, delta) T = I_2
    if n_delta >= 2:
        T = _delta_pair_transform(ctx, delta)
        while n_delta >= 2:
            i = n - n_delta
            j = i + 1
            vi, vj = cols[i], cols[j]
            cols[i] = [T[0][0] * a + T[1][0] * b for a, b in zip(vi, vj)]
            cols[j] = [T[0][1] * a + T[1][1] * b for a, b in zip(vi, vj)]
            n_delta -= 2
    P = Matrix.from_rows(ctx, [[cols[j][i] for j in range(n)]
                               for i in range(n)])
    return P


def _delta_pair_transform(ctx, delta):
    """2x2 T over F_q with T^t diag(delta, delta) T = I.

    Columns (a, b) and (-b, a) with delta (a^2 + b^2) = 1; the cross term
    vanishes automatically."""
    for a in ctx.elements():
        for b in ctx.elements():
            if delta * (a * a + b * b) == ctx.one():
                return [[a, -b], [b, a]]
    raise RuntimeError("no norm-one vector found (impossible for q odd)")


# ---------------------------------------------------------------------------
# explicit representatives


class Block:
    """One primary block of a representative recipe."""

    def __init__(self, btype, alpha, m, sign=None):
        if btype not in ("I", "II", "III"):
            raise ValueError("block type must be I, II or III")
        self.btype = btype
        self.alpha = alpha
        self.m = m
        self.sign = sign

    def __repr__(self):
        return "Block(%s, alpha=%r, m=%d, sign=%r)" % (
            self.btype, self.alpha, self.m, self.sign)


class RepresentativeRecipe:
    def __init__(self, family, blocks):
        if family not in ("gl", "sp", "so"):
            raise ValueError("recipes support gl, sp and so")
        self.family = family
        self.blocks = list(blocks)


def jordan_block(ctx, m, alpha):
    a = np.zeros((m, m, ctx.m), dtype=np.int64)
    for i in range(m):
        a[i, i] = alpha.coeffs
        if i + 1 < m:
            a[i, i + 1, 0] = 1
    return Matrix(ctx, a)


def _validate_block(family, blk, ctx):
    alpha = blk.alpha if isinstance(blk.alpha, GRElem) else ctx.elem(blk.alpha)
    is_pm1 = alpha == ctx.one() or alpha == -ctx.one()
    if family == "sp":
        if blk.btype == "II" and (not is_pm1 or blk.m % 2 == 0):
            raise ValueError("sp type II needs alpha = +-1 and odd m")
        if blk.btype == "III" and (not is_pm1 or blk.sign not in (1, -1)):
            raise ValueError("sp type III needs alpha = +-1 and a sign")
    if family == "so":
        if blk.btype == "II" and (not is_pm1 or blk.m % 2 == 1):
            raise ValueError("so type II needs alpha = +-1 and even m")
        if blk.btype == "III":
            if not is_pm1:
                raise ValueError("so type III needs alpha = +-1")
            if blk.sign == -1:
                raise ValueError(
                    "so type III with minus sign (Witt type <d>) has no "
                    "base-field representative; use an even-degree extension")
    if not alpha.is_unit():
        raise ValueError("alpha must be a unit")
    return alpha


def _sp_block_matrix(ctx, blk):
    alpha = blk.alpha
    m = blk.m
    if blk.btype in ("I", "II"):
        J = jordan_block(ctx, m, alpha)
        return Matrix.block_diag([J.inverse(), J.transpose()])
    # type III: [[alpha J_m(1)^{-1}, 0], [a S, alpha J_m(1)^t]]
    J1 = jordan_block(ctx, m, ctx.one())
    P = J1.inverse().scale(alpha)
    Q = J1.transpose().scale(alpha)
    a_val = ctx.one() if blk.sign == 1 else \
        ctx.elem((-1) ** m) * ctx.elem(2) * nonsquare_unit(ctx)
    S = _sp_S_matrix(ctx, m)
    n2 = 2 * m
    arr = np.zeros((n2, n2, ctx.m), dtype=np.int64)
    arr[:m, :m] = P.a
    arr[m:, m:] = Q.a
    arr[m:, :m] = S.scale(a_val).a
    return Matrix(ctx, arr)


def _sp_S_matrix(ctx, m):
    """First row alternates 1, -1, ...; all other rows zero."""
    a = np.zeros((m, m, ctx.m), dtype=np.int64)
    for j in range(m):
        a[0, j] = (ctx.elem((-1) ** j)).coeffs
    return Matrix(ctx, a)


def _so_type3_coupling(ctx, m, alpha):
    """(v, C) completing [[J_m(a), e_m, C], [0, a, v], [0, 0, J~]] to an
    isometry of the anti-diagonal form, where J~ is the anti-transpose of
    J_m(a)^{-1}.  The isometry condition determines v linearly and C up to
    an additive kernel; W = -v v^t / 2 is the symmetric choice."""
    J = jordan_block(ctx, m, alpha)
    Jat = _anti_transpose(J.inverse())
    LJ = anti_identity(ctx, m) * Jat
    malpha = -alpha
    v = [malpha * LJ.entry(m - 1, j) for j in range(m)]
    R = Matrix.from_rows(ctx, [[-(v[i] * v[j]) for j in range(m)]
                               for i in range(m)])
    half = ctx.elem(pow(2, -1, ctx.mod))
    W = R.scale(half)
    C = LJ.inverse().transpose() * W
    return v, C, Jat


def _so_block_matrix(ctx, blk):
    """Returns (matrix, preserved standard-shape form)."""
    alpha = blk.alpha
    m = blk.m
    if blk.btype in ("I", "II"):
        J = jordan_block(ctx, m, alpha)
        Jinv_at = _anti_transpose(J.inverse())
        M = Matrix.block_diag([J, Jinv_at])
        return M, anti_identity(ctx, 2 * m)
    # type III, Witt type <1>
    n = 2 * m + 1
    arr = np.zeros((n, n, ctx.m), dtype=np.int64)
    arr[m, m] = alpha.coeffs
    if m:
        J = jordan_block(ctx, m, alpha)
        v, C, Jat = _so_type3_coupling(ctx, m, alpha)
        arr[:m, :m] = J.a
        arr[m - 1, m] = ctx.one().coeffs  # u = (0,...,0,1)^t
        arr[:m, m + 1:] = C.a
        for j in range(m):
            arr[m, m + 1 + j] = v[j].coeffs
        arr[m + 1:, m + 1:] = Jat.a
    return Matrix(ctx, arr), anti_identity(ctx, n)


def _anti_transpose(M):
    return Matrix(M.ctx, M.a[::-1, ::-1].transpose(1, 0, 2))


def triangular_join(A, B):
    """Join of two standard-form symplectic matrices, in standard
    coordinates (the interleaving permutation of the block construction)."""
    ctx = A.ctx
    if A.n % 2 or B.n % 2:
        raise ValueError("symplectic matrices have even size")
    na, nb = A.n // 2, B.n // 2
    n = na + nb
    arr = np.zeros((2 * n, 2 * n, ctx.m), dtype=np.int64)
    # coordinate order: (A top, B top, A bottom, B bottom)
    sl = {"at": slice(0, na), "bt": slice(na, n),
          "ab": slice(n, n + na), "bb": slice(n + na, 2 * n)}
    arr[sl["at"], sl["at"]] = A.a[:na, :na]
    arr[sl["at"], sl["ab"]] = A.a[:na, na:]
    arr[sl["ab"], sl["at"]] = A.a[na:, :na]
    arr[sl["ab"], sl["ab"]] = A.a[na:, na:]
    arr[sl["bt"], sl["bt"]] = B.a[:nb, :nb]
    arr[sl["bt"], sl["bb"]] = B.a[:nb, nb:]
    arr[sl["bb"], sl["bt"]] = B.a[nb:, :nb]
    arr[sl["bb"], sl["bb"]] = B.a[nb:, nb:]
    return Matrix(ctx, arr)


def orthogonal_join(A, KA, B, KB):
    """(C, K): C preserves the standard form K of the summed Witt type."""
    ctx = A.ctx
    n = A.n + B.n
    G = Matrix.block_diag([KA, KB])
    w = witt_class_of_form(KA) + witt_class_of_form(KB)
    K = None
    for sign in (1, -1):
        cand = orthogonal_form(ctx, n, sign)
        if witt_class_of_form(cand) == w:
            K = cand
            break
    if K is None:
        raise RuntimeError("no standard form of the required Witt type")
    X = congruence_transform(G, K)
    C = X.inverse() * Matrix.block_diag([A, B]) * X
    return C, K


def build_representative(recipe, ctx):
    """Member matrix (and form for sp/so) realizing the recipe's class."""
    fam = recipe.family
    if not recipe.blocks:
        raise ValueError("empty recipe")
    if fam == "gl":
        blocks = []
        for blk in recipe.blocks:
            alpha = blk.alpha if isinstance(blk.alpha, GRElem) else ctx.elem(blk.alpha)
            if not alpha.is_unit():
                raise ValueError("alpha must be a unit")
            blocks.append(jordan_block(ctx, blk.m, alpha))
        return Matrix.block_diag(blocks), None
    if fam == "sp":
        M = None
        for blk in recipe.blocks:
            nblk = Block(blk.btype, _validate_block(fam, blk, ctx),
                         blk.m, blk.sign)
            piece = _sp_block_matrix(ctx, nblk)
            M = piece if M is None else triangular_join(M, piece)
        return M, symplectic_form(ctx, M.n)
    # so
    M, K = None, None
    for blk in recipe.blocks:
        nblk = Block(blk.btype, _validate_block(fam, blk, ctx),
                     blk.m, blk.sign)
        piece, pform = _so_block_matrix(ctx, nblk)
        if M is None:
            M, K = piece, pform
        else:
            M, K = orthogonal_join(M, K, piece, pform)
    return M, K


# ---------------------------------------------------------------------------
# closed-form adjugates


def _binpow(ctx, alpha, e):
    """(x - alpha)^e as a Poly."""
    return (x_poly(ctx) - Poly(ctx, [alpha])) ** max(e, 0)


def closed_form_X(ctx, e, alpha):
    """Adj(x - J_e(alpha)): entry (i,j) = (x-alpha)^{e-1-(j-i)} for j >= i."""
    zero = Poly(ctx, [])
    return [[_binpow(ctx, alpha, e - 1 - (j - i)) if j >= i else zero
             for j in range(e)] for i in range(e)]


def closed_form_Y(ctx, e, alpha):
    """Adj(x - J_e(alpha)^{-1}): upper triangular; diagonal
    (x-1/alpha)^{e-1}, and at offset d >= 1 the entry
    (-1)^d alpha^{-(d+1)} x^{d-1} (x-1/alpha)^{e-d-1}."""
    zero = Poly(ctx, [])
    ainv = alpha.inv()
    out = [[zero] * e for _ in range(e)]
    for i in range(e):
        for j in range(i, e):
            d = j - i
            if d == 0:
                out[i][j] = _binpow(ctx, ainv, e - 1)
            else:
                c = ctx.elem((-1) ** d) * ainv ** (d + 1)
                out[i][j] = monomial(ctx, d - 1, c) * _binpow(ctx, ainv, e - d - 1)
    return out


def _pm_scale(P, c):
    return [[f * Poly(f.ctx, [c]) for f in row] for row in P]


def _pm_mul(P, Q):
    ctx = P[0][0].ctx
    rows, inner, cols = len(P), len(Q), len(Q[0])
    out = [[Poly(ctx, []) for _ in range(cols)] for _ in range(rows)]
    for i in range(rows):
        for j in range(cols):
            s = Poly(ctx, [])
            for t in range(inner):
                s = s + P[i][t] * Q[t][j]
            out[i][j] = s
    return out


def _pm_transpose(P):
    return [list(r) for r in zip(*P)]


def _pm_anti_transpose(P):
    return [list(r) for r in zip(*[row[::-1] for row in P[::-1]])]


def _pm_from_matrix(M):
    rows, cols = M.a.shape[0], M.a.shape[1]
    return [[Poly(M.ctx, [M.entry(i, j)]) for j in range(cols)]
            for i in range(rows)]


def _pm_block(blocks):
    """Assemble a block grid of poly matrices."""
    ctx = None
    for row in blocks:
        for b in row:
            if b is not None:
                ctx = b[0][0].ctx
    rows = []
    for brow in blocks:
        height = max(len(b) for b in brow if b is not None)
        for r in range(height):
            row = []
            for b in brow:
                if b is None:
                    raise ValueError("all blocks must be given")
                row.extend(b[r])
            rows.append(row)
    return rows


def _pm_scale_poly(P, f):
    return [[g * f for g in row] for row in P]


def closed_form_adjugate(family, blk, ctx):
    """Adj(x - representative) for a single block, from the closed forms."""
    alpha = blk.alpha if isinstance(blk.alpha, GRElem) else ctx.elem(blk.alpha)
    blk = Block(blk.btype, alpha, blk.m, blk.sign)
    _validate_block(family, blk, ctx)
    m = blk.m
    if family == "sp":
        if blk.btype in ("I", "II"):
            Y = _pm_scale_poly(closed_form_Y(ctx, m, alpha),
                               _binpow(ctx, alpha, m))
            Xt = _pm_scale_poly(_pm_transpose(closed_form_X(ctx, m, alpha)),
                                _binpow(ctx, alpha.inv(), m))
            return _pm_block([[Y, _pm_zero(ctx, m, m)],
                              [_pm_zero(ctx, m, m), Xt]])
        # type III: P = alpha J_m(1)^{-1} = D J_m(alpha)^{-1} D^{-1},
        # Q = alpha J_m(1)^t = (D J_m(alpha) D^{-1})^t with D = diag(alpha^i)
        a_val = ctx.one() if blk.sign == 1 else \
            ctx.elem((-1) ** m) * ctx.elem(2) * nonsquare_unit(ctx)
        Y = _pm_conj_diag(closed_form_Y(ctx, m, alpha), alpha)
        X = _pm_conj_diag(closed_form_X(ctx, m, alpha), alpha)
        Xt = _pm_transpose(X)
        S = _pm_from_matrix(_sp_S_matrix(ctx, m))
        low = _pm_scale(_pm_mul(_pm_mul(Xt, S), Y), a_val)
        return _pm_block([
            [_pm_scale_poly(Y, _binpow(ctx, alpha, m)), _pm_zero(ctx, m, m)],
            [low, _pm_scale_poly(Xt, _binpow(ctx, alpha, m))]])
    if family == "so":
        if blk.btype in ("I", "II"):
            X = _pm_scale_poly(closed_form_X(ctx, m, alpha),
                               _binpow(ctx, alpha.inv(), m))
            Yat = _pm_scale_poly(_pm_anti_transpose(closed_form_Y(ctx, m, alpha)),
                                 _binpow(ctx, alpha, m))
            return _pm_block([[X, _pm_zero(ctx, m, m)],
                              [_pm_zero(ctx, m, m), Yat]])
        # type III (size 2m+1): x - A = [[x - J_{m+1}(alpha), -S0],
        #                                [0, x - J_m(alpha)^{-at}]]
        X1 = closed_form_X(ctx, m + 1, alpha)
        Yat = _pm_anti_transpose(closed_form_Y(ctx, m, alpha))
        S0 = _so_S0_pm(ctx, m, alpha)
        upper_right = _pm_mul(_pm_mul(X1, S0), Yat)
        return _pm_block([
            [_pm_scale_poly(X1, _binpow(ctx, alpha, m)), upper_right],
            [_pm_zero(ctx, m, m + 1),
             _pm_scale_poly(Yat, _binpow(ctx, alpha, m + 1))]])
    raise ValueError("closed forms cover sp and so blocks")


def _so_S0_pm(ctx, m, alpha):
    """The (m+1) x m coupling block of the so type-III representative,
    as a poly-matrix."""
    v, C, _ = _so_type3_coupling(ctx, m, alpha)
    rows = [[Poly(ctx, [C.entry(i, j)]) for j in range(m)] for i in range(m)]
    rows.append([Poly(ctx, [vj]) for vj in v])
    return rows


def _pm_zero(ctx, r, c):
    return [[Poly(ctx, []) for _ in range(c)] for _ in range(r)]


def _pm_conj_diag(P, alpha):
    """D P D^{-1} with D = diag(1, alpha, alpha^2, ...)."""
    ctx = P[0][0].ctx
    e = len(P)
    out = [[Poly(ctx, []) for _ in range(e)] for _ in range(e)]
    for i in range(e):
        for j in range(e):
            c = alpha ** (i - j)
            out[i][j] = P[i][j] * Poly(ctx, [c])
    return out


def generic_adjugate_pm(M):
    """Adj(xI - M) as a poly-matrix, for comparison with the closed forms."""
    B = adjugate_x_minus(M)
    n = M.n
    return [[poly_matrix_entry(B, i, j) for j in range(n)] for i in range(n)]
