"""Univariate polynomials over Galois rings.

Provides dense polynomial arithmetic, reciprocal and palindromic structure,
coefficient-window ("Hayes") equivalence classes and their characters over
finite fields, the Newton correspondence between power traces and
characteristic-polynomial coefficients, and radical counting.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np

from .galois_rings import GRElem, RingContext, ContextMismatchError


class DivisibilityViolation(ValueError):
    """A trace sequence that no matrix over the ring can realize."""


class EnumerationBound(ValueError):
    """A brute-force enumeration exceeds the configured size cap."""


class Poly:
    """Dense univariate polynomial; coeffs[i] is the coefficient of x^i."""

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx, coeffs):
        self.ctx = ctx
        cs = [c if isinstance(c, GRElem) else ctx.elem(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        for c in cs:
            if c.ctx != ctx:
                raise ContextMismatchError("coefficient from a different ring")
        self.coeffs = tuple(cs)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def is_monic(self):
        return bool(self.coeffs) and self.coeffs[-1] == self.ctx.one()

    def coeff(self, i):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return self.ctx.zero()

    def _wrap(self, other):
        if isinstance(other, Poly):
            if other.ctx != self.ctx:
                raise ContextMismatchError("different ring contexts")
            return other
        if isinstance(other, GRElem):
            return Poly(self.ctx, [other])
        return Poly(self.ctx, [self.ctx.elem(other)])

    def __add__(self, other):
        other = self._wrap(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(self.ctx, [self.coeff(i) + other.coeff(i) for i in range(n)])

    __radd__ = __add__

    def __sub__(self, other):
        other = self._wrap(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(self.ctx, [self.coeff(i) - other.coeff(i) for i in range(n)])

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __neg__(self):
        return Poly(self.ctx, [-c for c in self.coeffs])

    def __mul__(self, other):
        other = self._wrap(other)
        if self.is_zero() or other.is_zero():
            return Poly(self.ctx, [])
        out = [self.ctx.zero()] * (self.degree + other.degree + 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return Poly(self.ctx, out)

    __rmul__ = __mul__

    def __pow__(self, e):
        result = Poly(self.ctx, [1])
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __divmod__(self, other):
        other = self._wrap(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        lead_inv = other.coeffs[-1].inv()  # raises NonUnit for bad divisors
        q = [self.ctx.zero()] * max(0, self.degree - other.degree + 1)
        rem = list(self.coeffs)
        while len(rem) - 1 >= other.degree and rem:
            c = rem[-1] * lead_inv
            shift = len(rem) - 1 - other.degree
            q[shift] = c
            for j in range(other.degree + 1):
                rem[shift + j] = rem[shift + j] - c * other.coeffs[j]
            while rem and rem[-1].is_zero():
                rem.pop()
        return Poly(self.ctx, q), Poly(self.ctx, rem)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __call__(self, a):
        if not isinstance(a, GRElem):
            a = self.ctx.elem(a)
        acc = self.ctx.zero()
        for c in reversed(self.coeffs):
            acc = acc * a + c
        return acc

    def derivative(self):
        return Poly(self.ctx, [i * self.coeffs[i] for i in range(1, len(self.coeffs))])

    def gcd(self, other):
        if self.ctx.k != 1:
            raise ValueError("gcd is only defined over field contexts")
        a, b = self, self._wrap(other)
        while not b.is_zero():
            a, b = b, a % b
        if a.is_zero():
            return a
        return a * a.coeffs[-1].inv()

    def sigma(self):
        return Poly(self.ctx, [c.sigma() for c in self.coeffs])

    def reduce(self, k):
        return Poly(self.ctx.reduced_context(k), [c.reduce(k) for c in self.coeffs])

    def lift(self, k):
        return Poly(self.ctx.raised_context(k), [c.lift(k) for c in self.coeffs])

    def shift(self, t):
        """Multiply by x^t."""
        if self.is_zero():
            return self
        return Poly(self.ctx, [self.ctx.zero()] * t + list(self.coeffs))

    def __eq__(self, other):
        if isinstance(other, (int, GRElem)):
            other = self._wrap(other)
        return (isinstance(other, Poly) and self.ctx == other.ctx
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.ctx, self.coeffs))

    def encode(self):
        if self.is_zero():
            return "0 @ %r" % self.ctx
        parts = []
        for i, c in enumerate(self.coeffs):
            cs = ",".join(str(int(v)) for v in c.coeffs)
            if self.ctx.m > 1:
                cs = "(%s)" % cs
            parts.append(cs if i == 0 else "%s*x^%d" % (cs, i))
        return " + ".join(parts) + " @ %r" % self.ctx

    def __repr__(self):
        return self.encode()


def x_poly(ctx):
    return Poly(ctx, [0, 1])


def monomial(ctx, t, c=1):
    return Poly(ctx, [0] * t + [c])


def from_int_coeffs(ctx, ints):
    """Polynomial with coefficients from base-ring integers."""
    return Poly(ctx, [ctx.elem(int(c)) for c in ints])


def monic_polys(ctx, n):
    """All monic polynomials of degree n over the context, lexicographically."""
    one = ctx.one()
    for tail in itertools.product(list(ctx.elements()), repeat=n):
        yield Poly(ctx, list(tail) + [one])


# ---------------------------------------------------------------------------
# reciprocal / palindromic structure


def reciprocal(f):
    """x^deg(f) f(1/x) / f(0); an involution on monics with unit constant."""
    c0_inv = f.coeff(0).inv()
    return Poly(f.ctx, [c * c0_inv for c in reversed(f.coeffs)])


def skew_reciprocal(f):
    """Like reciprocal but with tau applied to the coefficients first."""
    cs = [c.tau() for c in f.coeffs]
    c0_inv = cs[0].inv()
    return Poly(f.ctx, [c * c0_inv for c in reversed(cs)])


def star_conjugate(f, n):
    """x^n tau(f)(1/x) for deg f <= n (no constant-term normalization)."""
    if f.degree > n:
        raise ValueError("degree exceeds n")
    return Poly(f.ctx, [f.coeff(n - i).tau() for i in range(n + 1)])


def is_palindromic(f, n):
    """x^n f(1/x) == f, for deg f <= n."""
    if f.degree > n:
        raise ValueError("degree exceeds n")
    return all(f.coeff(i) == f.coeff(n - i) for i in range(n + 1))


def palindromic_basis(ctx, n):
    """Basis of the n-palindromic polynomials of degree < n.

    These are the f with x^n f(1/x) = f and deg f < n; the constant term is
    forced to zero and coefficients pair up as a_i = a_{n-i}.
    """
    basis = []
    for i in range(1, (n + 1) // 2):
        basis.append(monomial(ctx, i) + monomial(ctx, n - i))
    if n % 2 == 0 and n >= 2:
        basis.append(monomial(ctx, n // 2))
    return basis


def palindromic_polys(ctx, n):
    """All n-palindromic polynomials of degree < n."""
    basis = palindromic_basis(ctx, n)
    for coeffs in itertools.product(list(ctx.elements()), repeat=len(basis)):
        acc = Poly(ctx, [])
        for c, b in zip(coeffs, basis):
            acc = acc + c * b
        yield acc


def star_symmetric_polys(ctx, n):
    """All f of degree < n with x^n tau(f)(1/x) = f.

    Every such f is h + h* (n odd) or h + c x^{n/2} + h* with c tau-fixed
    (n even), where deg h <= (n-1)/2 and h(0) = 0.
    """
    h_top = (n - 1) // 2
    elems = list(ctx.elements())
    tau_fixed = [a for a in elems if a.tau() == a]
    for hc in itertools.product(elems, repeat=h_top):
        h = Poly(ctx, [ctx.zero()] + list(hc))
        base = h + star_conjugate(h, n)
        if n % 2 == 0:
            for c in tau_fixed:
                yield base + c * monomial(ctx, n // 2)
        else:
            yield base


def hilbert90_beta(ctx, alpha):
    """Some beta with tau(beta)/beta = alpha, for alpha of norm 1."""
    if not (alpha * alpha.tau() == ctx.one()):
        raise ValueError("alpha must have norm 1")
    for beta in ctx.units():
        if beta.tau() == alpha * beta:
            return beta
    raise ValueError("no Hilbert-90 solution found")


def skew_palindromic_polys(ctx, n, alpha):
    """All f of degree < n with x^n tau(f)(1/x) = tau(alpha) f."""
    beta = hilbert90_beta(ctx, alpha)
    beta_inv = beta.inv()
    for g in star_symmetric_polys(ctx, n):
        yield beta_inv * g


def is_skew_palindromic(f, n, alpha):
    if not (alpha * alpha.tau() == f.ctx.one()):
        raise ValueError("alpha must have norm 1")
    return star_conjugate(f, n) == alpha.tau() * f


def to_palindromic(g, n):
    """g(x + 1/x) x^{n/2} for even n; (x+1) g(x + 1/x) x^{(n-1)/2} for odd n.

    Sends monic g of degree floor(n/2) (even n) or floor(n/2) (odd n, i.e.
    degree (n-1)/2) bijectively onto the monic n-palindromics of degree n.
    """
    ctx = g.ctx
    x2p1 = Poly(ctx, [1, 0, 1])  # x^2 + 1
    if n % 2 == 0:
        half = n // 2
        if g.degree != half:
            raise ValueError("need deg g = n/2")
        acc = Poly(ctx, [])
        for j in range(half + 1):
            acc = acc + g.coeff(j) * (x2p1 ** j).shift(half - j)
        return acc
    half = (n - 1) // 2
    if g.degree != half:
        raise ValueError("need deg g = (n-1)/2")
    acc = Poly(ctx, [])
    for j in range(half + 1):
        acc = acc + g.coeff(j) * (x2p1 ** j).shift(half - j)
    return Poly(ctx, [1, 1]) * acc


def from_palindromic(f, n):
    """Inverse of to_palindromic on monic n-palindromics of degree n."""
    ctx = f.ctx
    if f.degree != n or not f.is_monic() or not is_palindromic(f, n):
        raise ValueError("input must be monic n-palindromic of degree n")
    if n % 2 == 1:
        q, r = divmod(f, Poly(ctx, [1, 1]))
        if not r.is_zero():
            raise ValueError("odd-degree palindromic must vanish at -1")
        return from_palindromic(q, n - 1)
    half = n // 2
    x2p1 = Poly(ctx, [1, 0, 1])
    rem = f
    g = [ctx.zero()] * (half + 1)
    for j in range(half, -1, -1):
        c = rem.coeff(half + j)
        g[j] = c
        rem = rem - c * (x2p1 ** j).shift(half - j)
    if not rem.is_zero():
        raise ValueError("not in the image")
    return Poly(ctx, g)


# ---------------------------------------------------------------------------
# Hayes (coefficient-window + residue) equivalence


class HayesLabel:
    """Equivalence-class label: l next-to-leading coefficients plus f mod H.

    Two monics are equivalent iff their labels are equal; the j-th
    next-to-leading coefficient of f is the coefficient of x^{deg f - j},
    taken as 0 when deg f < j.
    """

    __slots__ = ("l", "H", "window", "residue")

    def __init__(self, l, H, window, residue):
        self.l = l
        self.H = H
        self.window = tuple(window)
        self.residue = residue

    def __eq__(self, other):
        return (isinstance(other, HayesLabel)
                and (self.l, self.H, self.window, self.residue)
                == (other.l, other.H, other.window, other.residue))

    def __hash__(self):
        return hash((self.l, self.H, self.window, self.residue))

    def __repr__(self):
        return "HayesLabel(l=%d, H=%r, window=%r, residue=%r)" % (
            self.l, self.H, self.window, self.residue)


def hayes_label(f, l, H):
    if not f.is_monic():
        raise ValueError("label defined for monic polynomials")
    window = [f.coeff(f.degree - j) for j in range(1, l + 1)]
    return HayesLabel(l, H, window, f % H if H.degree >= 1 else Poly(f.ctx, []))


def _euler_phi_poly(H):
    """Order of (F_q[x]/H)^x for monic H over a field context."""
    if H.degree == 0:
        return 1
    count = 0
    for r in _residues(H.ctx, H.degree):
        g = H if r.is_zero() else r.gcd(H)
        if g.degree == 0 and not g.is_zero():
            count += 1
    return count


def _residues(ctx, deg):
    if deg == 0:
        yield Poly(ctx, [])
        return
    for tail in itertools.product(list(ctx.elements()), repeat=deg):
        yield Poly(ctx, list(tail))


class HayesClassGroup:
    """The group of Hayes classes of monics coprime to H, for a field context.

    Classes are represented by their canonical representative: the monic of
    degree l + deg H with the prescribed window and residue.
    """

    def __init__(self, ctx, l, H, bound=10 ** 4):
        if ctx.k != 1:
            raise ValueError("Hayes class group only over field contexts")
        if not H.is_monic() and H.degree != 0:
            raise ValueError("H must be monic or a nonzero constant")
        self.ctx = ctx
        self.l = l
        self.H = H
        self.order = ctx.q ** l * _euler_phi_poly(H)
        if self.order > bound:
            raise EnumerationBound("unit group too large: %d" % self.order)
        self._reps = {}
        for window in itertools.product(list(ctx.elements()), repeat=l):
            for r in _residues(ctx, H.degree):
                if H.degree >= 1:
                    g = r.gcd(H) if not r.is_zero() else H
                    if not (g.degree == 0 and not g.is_zero()):
                        continue
                rep = self._canonical(window, r)
                self._reps[hayes_label(rep, l, H)] = rep
        assert len(self._reps) == self.order
        self._basis = None

    def _canonical(self, window, residue):
        ctx, l, H = self.ctx, self.l, self.H
        n = l + H.degree
        f = monomial(ctx, n)
        for j, c in enumerate(window, start=1):
            f = f + c * monomial(ctx, n - j)
        if H.degree >= 1:
            f = f + (residue - f % H) % H
        return f

    def label(self, f):
        return hayes_label(f, self.l, self.H)

    def contains(self, f):
        """Monic f coprime to H (always true when deg H = 0)."""
        if self.H.degree == 0:
            return f.is_monic()
        return f.is_monic() and f.gcd(self.H).degree == 0

    def rep(self, f):
        return self._reps[self.label(f)]

    def mul(self, f, g):
        return self.rep(self.rep(f) * self.rep(g))

    def identity(self):
        return self._canonical((self.ctx.zero(),) * self.l,
                               Poly(self.ctx, [1]) % self.H
                               if self.H.degree >= 1 else Poly(self.ctx, []))

    def elements(self):
        return list(self._reps.values())

    # -- abelian structure discovery --

    def basis(self):
        """Independent generators (g_i, n_i) with G = prod <g_i>, n_i orders."""
        if self._basis is not None:
            return self._basis
        ident = self.identity()
        lab = self.label

        def order_mod(g, subgroup):
            acc = g
            t = 1
            while lab(acc) not in subgroup:
                acc = self.mul(acc, g)
                t += 1
            return t, acc

        basis = []
        # subgroup: label -> exponent tuple over current basis
        subgroup = {lab(ident): ()}
        elements = self.elements()
        while len(subgroup) < self.order:
            best, best_t = None, 0
            for g in elements:
                t, _ = order_mod(g, subgroup)
                if t > best_t:
                    best, best_t = g, t
            g, t = best, best_t
            # adjust the representative so its true order equals its order
            # in the quotient: g^t lands in the subgroup; write g^t as a
            # product of basis powers and divide out a t-th root of it
            _, gt = order_mod(g, subgroup)
            exps = subgroup[lab(gt)]
            adj = g
            for (h, n_h), e in zip(basis, exps):
                if e % t != 0:
                    raise RuntimeError("basis adjustment failed")
                corr = pow_group(self, h, (-(e // t)) % n_h)
                adj = self.mul(adj, corr)
            basis.append((adj, t))
            new = {}
            for labk, exps0 in subgroup.items():
                acc = self._reps[labk]
                for e in range(t):
                    new[lab(acc)] = exps0 + (e,)
                    acc = self.mul(acc, adj)
            subgroup = new
        self._basis = (basis, subgroup)
        return self._basis

    def discrete_log(self, f):
        basis, table = self.basis()
        return table[self.label(f)]


def pow_group(group, g, e):
    acc = group.identity()
    base = g
    while e:
        if e & 1:
            acc = group.mul(acc, base)
        base = group.mul(base, base)
        e >>= 1
    return acc


class HayesCharacter:
    """A character of the Hayes class group, stored as exact exponents.

    The value on f is the root of unity exp(2*pi*i*exponent(f)/modulus);
    exponent(f) is None when f is not coprime to H (character value 0).
    """

    def __init__(self, group, exps):
        self.group = group
        basis, _ = group.basis()
        E = 1
        for _, n in basis:
            E = E * n // _gcd_int(E, n)
        self.modulus = E
        self.exps = tuple(exps)  # exponent of value on basis[i], times E/n_i

    def exponent(self, f):
        if not self.group.contains(f):
            return None
        dl = self.group.discrete_log(f)
        basis, _ = self.group.basis()
        E = self.modulus
        tot = 0
        for (g, n), c, e in zip(basis, self.exps, dl):
            tot += (E // n) * c * e
        return tot % E

    def is_trivial(self):
        basis, _ = self.group.basis()
        return all(c % n == 0 for (g, n), c in zip(basis, self.exps))

    def conjugate(self):
        basis, _ = self.group.basis()
        return HayesCharacter(self.group,
                              [(-c) % n for (g, n), c in zip(basis, self.exps)])

    def __repr__(self):
        return "HayesCharacter(exps=%r, modulus=%d)" % (self.exps, self.modulus)


def _gcd_int(a, b):
    while b:
        a, b = b, a % b
    return a


def hayes_characters(ctx, l, H, bound=10 ** 4):
    """The full dual group of the Hayes class group (size q^l phi(H))."""
    group = HayesClassGroup(ctx, l, H, bound=bound)
    basis, _ = group.basis()
    chars = []
    for exps in itertools.product(*[range(n) for _, n in basis]):
        chars.append(HayesCharacter(group, exps))
    return chars


# -- exact root-of-unity sums --


def _int_polymul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


def _int_polydiv_exact(a, b):
    a = list(a)
    q = [0] * (len(a) - len(b) + 1)
    for i in range(len(a) - len(b), -1, -1):
        c = a[i + len(b) - 1]
        assert c % b[-1] == 0
        c //= b[-1]
        q[i] = c
        for j in range(len(b)):
            a[i + j] -= c * b[j]
    assert all(v == 0 for v in a)
    return q


@functools.lru_cache(maxsize=None)
def cyclotomic_int_poly(E):
    """Coefficients of the E-th cyclotomic polynomial, low to high."""
    num = [1]
    den = [1]
    for d in range(1, E + 1):
        if E % d:
            continue
        mu = _moebius(E // d)
        term = [-1] + [0] * (d - 1) + [1]  # x^d - 1
        if mu == 1:
            num = _int_polymul(num, term)
        elif mu == -1:
            den = _int_polymul(den, term)
    return tuple(_int_polydiv_exact(num, den))


def _moebius(n):
    result = 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            result = -result
        d += 1
    if n > 1:
        result = -result
    return result


def root_of_unity_sum_is_zero(exponents, E):
    """Whether sum of exp(2 pi i e/E) over the multiset of exponents is 0."""
    counts = [0] * E
    for e in exponents:
        counts[e % E] += 1
    phi = list(cyclotomic_int_poly(E))
    # reduce the count polynomial mod Phi_E over Z (Phi_E is monic)
    for i in range(len(counts) - 1, len(phi) - 2, -1):
        c = counts[i]
        if c:
            counts[i] = 0
            for j in range(len(phi) - 1):
                counts[i - (len(phi) - 1) + j] -= c * phi[j]
    return all(v == 0 for v in counts)


# ---------------------------------------------------------------------------
# intervals


def interval_membership(h, g, width, reversed_=False):
    """h lies in the width-'width' interval around g.

    Membership means h monic of the same degree as g with deg(g - h) < width;
    the reversed variant requires h(0) invertible and tests x^n h(1/x)/h(0).
    """
    n = g.degree
    if reversed_:
        if not (h.is_monic() and h.degree == n and h.coeff(0).is_unit()):
            return False
        h = reciprocal(h)
    if not (h.is_monic() and h.degree == n):
        return False
    return (g - h).degree < width


# ---------------------------------------------------------------------------
# Newton's identities: coefficients <-> power traces


def coeffs_to_traces(f, d):
    """Power sums of the roots of monic f, indices 1..d, via Newton.

    Uses t_i = -i e_i - sum_{j<i} e_j t_{i-j} (with e_j = coeff of
    x^{n-j}), which stays inside the coefficient ring.
    """
    if not f.is_monic():
        raise ValueError("f must be monic")
    ctx = f.ctx
    n = f.degree
    e = [f.coeff(n - j) for j in range(0, n + 1)]  # e[0] = 1
    t = [ctx.zero()] * (d + 1)
    for i in range(1, d + 1):
        acc = ctx.zero()
        for j in range(1, min(i, n) + 1):
            if j == i:
                acc = acc + i * e[j]
            else:
                acc = acc + e[j] * t[i - j]
        t[i] = -acc
    return t[1:]


def newton_ambiguity(d, p, k):
    """S(d,k) = sum over j=1..k of floor(d/p^j)."""
    return sum(d // p ** j for j in range(1, k + 1))


class TraceDatum:
    """Frobenius-corrected trace sequence of a matrix over GR(p^k).

    entries[i] = tr(M^i) - sigma(tr(M^{i/p})) if p | i else tr(M^i), for
    0 != i in [-d1, d2] with p^k not dividing i; every entry satisfies
    v(entries[i]) >= min(v_p(i), k).
    """

    __slots__ = ("ctx", "d1", "d2", "entries")

    def __init__(self, ctx, d1, d2, entries):
        self.ctx = ctx
        self.d1 = d1
        self.d2 = d2
        self.entries = dict(entries)
        p, k = ctx.p, ctx.k
        for i, a in self.entries.items():
            v = _vp(abs(i), p)
            if min(v, k) >= k:
                raise ValueError("index divisible by p^k must be dropped")
            if a.valuation() < min(v, k):
                raise DivisibilityViolation(
                    "entry at index %d has valuation %d < %d"
                    % (i, a.valuation(), min(v, k)))

    @property
    def length(self):
        return self.d1 + self.d2

    def key(self):
        return (self.d1, self.d2,
                tuple(sorted((i, a.coeffs.tobytes())
                             for i, a in self.entries.items())))

    def __eq__(self, other):
        return (isinstance(other, TraceDatum) and self.ctx == other.ctx
                and self.key() == other.key())

    def __hash__(self):
        return hash((self.ctx, self.key()))

    def __repr__(self):
        body = ", ".join("%d: %r" % (i, self.entries[i])
                         for i in sorted(self.entries))
        return "TraceDatum(d1=%d, d2=%d, {%s})" % (self.d1, self.d2, body)


def _vp(i, p):
    v = 0
    while i % p == 0:
        i //= p
        v += 1
    return v


def trace_datum_of(pos_traces, neg_traces=None):
    """Build the corrected datum from raw traces tr(M^i), i = 1..d2 (and
    optionally tr(M^-i), i = 1..d1)."""
    neg_traces = neg_traces or []
    ctx = (pos_traces or neg_traces)[0].ctx
    p, k = ctx.p, ctx.k
    entries = {}
    for sign, traces in ((1, pos_traces), (-1, neg_traces)):
        for idx, t in enumerate(traces, start=1):
            if _vp(idx, p) >= k:
                continue
            a = t
            if idx % p == 0:
                a = t - traces[idx // p - 1].sigma()
            entries[sign * idx] = a
    return TraceDatum(ctx, len(neg_traces), len(pos_traces), entries)


def datum_value_count(ctx, d1, d2):
    """Number of distinct (d1,d2)-trace-datum values: q^{k d - S1 - S2}."""
    p, k, q = ctx.p, ctx.k, ctx.q
    d = d1 + d2
    return q ** (k * d - newton_ambiguity(d1, p, k) - newton_ambiguity(d2, p, k))


def _datum_coefficient_choices(ctx, entries, d):
    """All coefficient prefixes (e_1..e_d) compatible with a one-sided datum.

    entries maps i in 1..d (p^k not dividing i) to the corrected value a_i.
    Yields exactly q^{S(d,k)} tuples.
    """
    p, k, m, mod = ctx.p, ctx.k, ctx.m, ctx.mod
    # raw traces: t_i = a_i + sigma(t_{i/p}) for p | i; a_i = 0 at dropped i
    t = [None] * (d + 1)
    for i in range(1, d + 1):
        a = entries.get(i, ctx.zero())
        if i % p == 0:
            t[i] = a + t[i // p].sigma()
        else:
            t[i] = a

    results = []

    def rec(i, e):
        if i > d:
            results.append(tuple(e))
            return
        # Newton: i e_i = -(t_i + sum_{j<i} e_j t_{i-j})
        rhs = -t[i]
        for j in range(1, i):
            rhs = rhs - e[j - 1] * t[i - j]
        v = min(_vp(i, p), k)
        if rhs.valuation() < v:
            raise DivisibilityViolation("Newton step unsolvable at index %d" % i)
        if v >= k:
            if not rhs.is_zero():
                raise DivisibilityViolation("Newton step unsolvable at index %d" % i)
            for cand in ctx.elements():
                rec(i + 1, e + [cand])
            return
        u = ctx.elem(i // p ** _vp(i, p))
        base = ctx.elem(list(np.asarray(rhs.coeffs) // p ** v)) * u.inv()
        step = p ** (k - v)
        for w in itertools.product(range(p ** v), repeat=m):
            cand = base + ctx.elem([step * wi for wi in w])
            rec(i + 1, e + [cand])

    rec(1, [])
    return results


def traces_to_interval_family(datum, n):
    """Interval family equivalent to a one-sided trace datum.

    Returns (width, reps): a matrix M of size n has this trace datum iff
    char(M) lies in the width-wide interval around exactly one rep. The
    family has q^{S(d,k)} members with disjoint intervals; unconstrained
    trailing coefficients of the representatives are set to 0.
    """
    if datum.d1 != 0:
        raise ValueError("one-sided datum required; use traces_to_hayes_family")
    ctx, d = datum.ctx, datum.d2
    if d > n:
        raise ValueError("datum longer than the matrix size")
    reps = []
    for e in _datum_coefficient_choices(ctx, datum.entries, d):
        f = monomial(ctx, n)
        for j, ej in enumerate(e, start=1):
            f = f + ej * monomial(ctx, n - j)
        reps.append(f)
    return n - d, reps


def traces_to_hayes_family(datum, n):
    """Hayes-class family equivalent to a two-sided trace datum.

    Returns (l, H, reps) with l = d2 and H = x^{d1+1}: an invertible M of
    size n has this datum iff char(M) is Hayes-equivalent to exactly one rep.
    The family has q^{S(d1,k)+S(d2,k)+k} members (the constant coefficient
    of the characteristic polynomial is unconstrained, giving the q^k).
    """
    ctx, d1, d2 = datum.ctx, datum.d1, datum.d2
    if d1 + d2 >= n:
        raise ValueError("need d1 + d2 < n")
    pos = {i: a for i, a in datum.entries.items() if i > 0}
    neg = {-i: a for i, a in datum.entries.items() if i < 0}
    tops = _datum_coefficient_choices(ctx, pos, d2)
    bots = _datum_coefficient_choices(ctx, neg, d1)
    reps = []
    for e_top in tops:
        f0 = monomial(ctx, n)
        for j, ej in enumerate(e_top, start=1):
            f0 = f0 + ej * monomial(ctx, n - j)
        for e_bot in bots:
            # e_bot are the leading coefficients of char(M^{-1}) =
            # x^n char(M)(1/x) / char(M)(0), so coeff_j(char M) = c0 * e'_j
            for c0 in ctx.elements():
                f = f0 + c0
                for j, ej in enumerate(e_bot, start=1):
                    f = f + (c0 * ej) * monomial(ctx, j)
                reps.append(f)
    H = monomial(ctx, d1 + 1)
    return d2, H, reps


# ---------------------------------------------------------------------------
# factorization over fields (trial division at desk scale) and radicals

_IRR_CACHE_MAX_DEG = 8
_IRR_CACHE_MAX_Q = 9


@functools.lru_cache(maxsize=None)
def _irreducibles_cached(ctx, max_deg):
    if ctx.k != 1:
        raise ValueError("irreducible enumeration needs a field context")
    if max_deg > _IRR_CACHE_MAX_DEG or ctx.q > _IRR_CACHE_MAX_Q:
        raise EnumerationBound("irreducible cache capped at degree %d, q <= %d"
                               % (_IRR_CACHE_MAX_DEG, _IRR_CACHE_MAX_Q))
    table = {0: []}
    for d in range(1, max_deg + 1):
        found = []
        lower = [g for dd in range(1, d // 2 + 1) for g in table[dd]]
        for f in monic_polys(ctx, d):
            if all(not (f % g).is_zero() for g in lower):
                found.append(f)
        table[d] = found
    return table


def irreducible_polys(ctx, deg):
    """All monic irreducibles of the exact degree over a field context."""
    return list(_irreducibles_cached(ctx, deg)[deg])


def is_irreducible(f):
    if f.degree < 1:
        return False
    lower = _irreducibles_cached(f.ctx, max(1, f.degree // 2))
    for d in range(1, f.degree // 2 + 1):
        for g in lower[d]:
            if (f % g).is_zero():
                return False
    return True


def factor(f):
    """Factorization of monic f over a field context: list of (prime, mult)."""
    if f.ctx.k != 1:
        raise ValueError("factorization only over field contexts")
    if not f.is_monic():
        raise ValueError("f must be monic")
    out = []
    rem = f
    d = 1
    while rem.degree >= 1:
        if d > rem.degree // 2:
            out.append((rem, 1))
            break
        for g in irreducible_polys(f.ctx, d):
            mult = 0
            while (rem % g).is_zero():
                rem = rem // g
                mult += 1
            if mult:
                out.append((g, mult))
        d += 1
    # merge any duplicate tail factor
    merged = {}
    for g, e in out:
        merged[g] = merged.get(g, 0) + e

    def sortkey(item):
        g = item[0]
        return (g.degree, tuple(tuple(int(v) for v in c.coeffs) for c in g.coeffs))

    return sorted(merged.items(), key=sortkey)


def radical(f):
    """Product of the distinct monic irreducible divisors of monic f."""
    acc = Poly(f.ctx, [1])
    for g, _ in factor(f):
        acc = acc * g
    return acc


def count_with_radical_dividing(g, n):
    """Number of monic degree-n f with rad(f) | g, for squarefree monic g."""
    degs = [p.degree for p, _ in factor(g)]
    return _count_compositions(degs, n, minimum=0)


def _count_compositions(degs, n, minimum):
    # number of (e_i >= minimum) with sum e_i * degs[i] = n
    dp = [0] * (n + 1)
    dp[0] = 1
    for d in degs:
        ndp = [0] * (n + 1)
        for tot in range(n + 1):
            if dp[tot] == 0:
                continue
            e = minimum
            while tot + e * d <= n:
                ndp[tot + e * d] += dp[tot]
                e += 1
        dp = ndp
    return dp[n]


def count_small_radical(ctx, n, d):
    """Number of monic degree-n f over F_q with deg rad(f) <= d."""
    if ctx.k != 1:
        raise ValueError("field context required")
    total = 0
    for gd in range(1, d + 1):
        for g in monic_polys(ctx, gd):
            fs = factor(g)
            if any(e > 1 for _, e in fs):
                continue
            degs = [p.degree for p, _ in fs]
            total += _count_compositions(degs, n, minimum=1)
    return total
