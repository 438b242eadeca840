"""Exact arithmetic in the class-2 truncation F/F^3 of a free pro-p group.

The filtration is the q-central series P^1 = P, P^(i+1) = (P^i)^q [P^i, P].
Every element of F/F^3 has a unique normal form

    g_1^(a_1) ... g_d^(a_d) . prod_(i<j) [g_j, g_i]^(c_ij)

with generator exponents a_i mod q^2 and commutator exponents c_ij mod q.
The commutator convention is [x, y] = x^-1 y^-1 x y, so collection moves use
g_j g_i = g_i g_j [g_j, g_i] for i < j; coordinate (i, j) with i < j stores
the exponent of the basic commutator [g_j, g_i].

Elements, endomorphisms and quotients are immutable values; all operations
are pure functions.
"""

from __future__ import annotations

import re

import numpy as np

from demuskin.zq_linalg import Modulus, Submodule, ZqMatrix, inv_mod


class GeneratorSet:
    """Ordered generator labels; the normal form depends on the order."""

    __slots__ = ("labels", "_index")

    def __init__(self, labels):
        labels = tuple(labels)
        if not labels:
            raise ValueError("need at least one generator")
        if len(set(labels)) != len(labels):
            raise ValueError(f"generator labels must be unique, got {labels}")
        self.labels = labels
        self._index = {lab: i for i, lab in enumerate(labels)}

    @property
    def d(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValueError(f"unknown generator {label!r}") from None

    def __eq__(self, other):
        return isinstance(other, GeneratorSet) and self.labels == other.labels

    def __hash__(self):
        return hash(self.labels)

    def __repr__(self):
        return f"GeneratorSet{self.labels}"


def demushkin_generators(n: int) -> GeneratorSet:
    """The basis g, x0, ..., xn used for rank n+2 presentations."""
    return GeneratorSet(("g",) + tuple(f"x{i}" for i in range(n + 1)))


def _check_same_group(u: "ClassTwoElement", v: "ClassTwoElement"):
    if u.gens != v.gens or u.mod != v.mod:
        raise ValueError("elements live in different truncated groups")


class ClassTwoElement:
    """Normal form of an element of F/F^3."""

    __slots__ = ("gens", "mod", "gen_exp", "comm")

    def __init__(self, gens: GeneratorSet, mod: Modulus, gen_exp, comm):
        self.gens = gens
        self.mod = mod
        d = gens.d
        ge = np.mod(np.asarray(gen_exp, dtype=np.int64), mod.q2)
        if ge.shape != (d,):
            raise ValueError(f"gen_exp must have length {d}")
        cm = np.mod(np.asarray(comm, dtype=np.int64), mod.q)
        if cm.shape != (d, d):
            raise ValueError(f"comm must be a {d}x{d} array")
        cm = np.triu(cm, 1)
        ge.setflags(write=False)
        cm.setflags(write=False)
        self.gen_exp = ge
        self.comm = cm

    @classmethod
    def identity(cls, gens: GeneratorSet, mod: Modulus) -> "ClassTwoElement":
        d = gens.d
        return cls(gens, mod, np.zeros(d, dtype=np.int64), np.zeros((d, d), dtype=np.int64))

    @classmethod
    def generator(cls, gens: GeneratorSet, mod: Modulus, which) -> "ClassTwoElement":
        i = which if isinstance(which, int) else gens.index(which)
        d = gens.d
        ge = np.zeros(d, dtype=np.int64)
        ge[i] = 1
        return cls(gens, mod, ge, np.zeros((d, d), dtype=np.int64))

    @property
    def is_identity(self) -> bool:
        return not self.gen_exp.any() and not self.comm.any()

    @property
    def is_central(self) -> bool:
        """True iff the element lies in F^2/F^3 (gen_exp divisible by q)."""
        return not (self.gen_exp % self.mod.q).any()

    def __mul__(self, other: "ClassTwoElement") -> "ClassTwoElement":
        _check_same_group(self, other)
        q, q2 = self.mod.q, self.mod.q2
        ge = (self.gen_exp + other.gen_exp) % q2
        # collecting v's generators through u's picks up [g_j, g_i]^(a_j b_i)
        cross = np.outer(other.gen_exp % q, self.gen_exp % q)
        cm = (self.comm + other.comm + np.triu(cross, 1)) % q
        return ClassTwoElement(self.gens, self.mod, ge, cm)

    def inverse(self) -> "ClassTwoElement":
        q, q2 = self.mod.q, self.mod.q2
        a = self.gen_exp
        ge = (-a) % q2
        cross = np.outer(a % q, a % q)
        cm = (-self.comm + np.triu(cross, 1)) % q
        return ClassTwoElement(self.gens, self.mod, ge, cm)

    def __pow__(self, k: int) -> "ClassTwoElement":
        k = int(k)
        if k < 0:
            return self.inverse() ** (-k)
        result = ClassTwoElement.identity(self.gens, self.mod)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        return (
            isinstance(other, ClassTwoElement)
            and self.gens == other.gens
            and self.mod == other.mod
            and np.array_equal(self.gen_exp, other.gen_exp)
            and np.array_equal(self.comm, other.comm)
        )

    def __hash__(self):
        return hash((self.gens, self.mod, self.gen_exp.tobytes(), self.comm.tobytes()))

    def __repr__(self):
        return f"<{format_word(self)}>"

    def to_json(self) -> dict:
        d = self.gens.d
        sparse = [
            [i, j, int(self.comm[i, j])]
            for i in range(d)
            for j in range(i + 1, d)
            if self.comm[i, j]
        ]
        return {"gen_exp": [int(x) for x in self.gen_exp], "comm_exp": sparse}

    @classmethod
    def from_json(cls, data: dict, gens: GeneratorSet, mod: Modulus) -> "ClassTwoElement":
        d = gens.d
        cm = np.zeros((d, d), dtype=np.int64)
        for i, j, c in data.get("comm_exp", []):
            cm[i, j] = c
        return cls(gens, mod, np.asarray(data["gen_exp"]), cm)


def multiply(u: ClassTwoElement, v: ClassTwoElement) -> ClassTwoElement:
    return u * v


def inverse(u: ClassTwoElement) -> ClassTwoElement:
    return u.inverse()


def power(u: ClassTwoElement, k: int) -> ClassTwoElement:
    return u ** k


def commutator(u: ClassTwoElement, v: ClassTwoElement) -> ClassTwoElement:
    """[u, v] = u^-1 v^-1 u v, computed literally; lands in F^2/F^3."""
    return u.inverse() * v.inverse() * u * v


def central_sqrt(c: ClassTwoElement) -> ClassTwoElement:
    """The unique square root inside F^2/F^3, a group of odd exponent q."""
    if not c.is_central:
        raise ValueError("central_sqrt needs an element of F^2/F^3")
    return c ** ((c.mod.q + 1) // 2)


class ClassTwoEndo:
    """Endomorphism of F/F^3 given by generator images."""

    __slots__ = ("gens", "mod", "images")

    def __init__(self, images):
        images = tuple(images)
        if not images:
            raise ValueError("need at least one image")
        first = images[0]
        for im in images:
            _check_same_group(first, im)
        if len(images) != first.gens.d:
            raise ValueError("need one image per generator")
        self.gens = first.gens
        self.mod = first.mod
        self.images = images

    @classmethod
    def identity(cls, gens: GeneratorSet, mod: Modulus) -> "ClassTwoEndo":
        return cls(
            ClassTwoElement.generator(gens, mod, i) for i in range(gens.d)
        )

    @property
    def linear_matrix(self) -> np.ndarray:
        """Row i = gen_exp of the image of g_i, reduced mod q."""
        return np.array([im.gen_exp % self.mod.q for im in self.images])

    @property
    def linear_matrix_q2(self) -> np.ndarray:
        return np.array([im.gen_exp for im in self.images])

    @property
    def is_automorphism(self) -> bool:
        try:
            inv_mod(ZqMatrix(self.linear_matrix, self.mod.q))
        except ValueError:
            return False
        return True

    def __call__(self, u: ClassTwoElement) -> ClassTwoElement:
        if u.gens != self.gens or u.mod != self.mod:
            raise ValueError("element and endomorphism have different domains")
        res = ClassTwoElement.identity(self.gens, self.mod)
        for i, a in enumerate(u.gen_exp):
            if a:
                res = res * self.images[i] ** int(a)
        d = self.gens.d
        for i in range(d):
            for j in range(i + 1, d):
                c = int(u.comm[i, j])
                if c:
                    res = res * commutator(self.images[j], self.images[i]) ** c
        return res

    def __eq__(self, other):
        return (
            isinstance(other, ClassTwoEndo)
            and self.gens == other.gens
            and self.mod == other.mod
            and self.images == other.images
        )

    def __hash__(self):
        return hash((self.gens, self.mod, self.images))

    def __repr__(self):
        body = ", ".join(
            f"{lab} -> {format_word(im)}" for lab, im in zip(self.gens.labels, self.images)
        )
        return f"ClassTwoEndo({body})"

    def to_json(self) -> dict:
        return {
            "images": {
                lab: format_word(im)
                for lab, im in zip(self.gens.labels, self.images)
            }
        }

    @classmethod
    def from_json(cls, data: dict, gens: GeneratorSet, mod: Modulus) -> "ClassTwoEndo":
        images = []
        for lab in gens.labels:
            if lab not in data["images"]:
                raise ValueError(f"missing image for generator {lab!r}")
            images.append(parse_word(data["images"][lab], gens, mod))
        return cls(images)


def apply_endo(e: ClassTwoEndo, u: ClassTwoElement) -> ClassTwoElement:
    return e(u)


def compose(e1: ClassTwoEndo, e2: ClassTwoEndo) -> ClassTwoEndo:
    """The endomorphism u -> e1(e2(u))."""
    if e1.gens != e2.gens or e1.mod != e2.mod:
        raise ValueError("endomorphisms have different domains")
    return ClassTwoEndo(e1(im) for im in e2.images)


def endo_power(e: ClassTwoEndo, k: int) -> ClassTwoEndo:
    if k < 0:
        raise ValueError("endo_power only takes nonnegative exponents")
    result = ClassTwoEndo.identity(e.gens, e.mod)
    base = e
    while k:
        if k & 1:
            result = compose(result, base)
        base = compose(base, base)
        k >>= 1
    return result


def invert_auto(e: ClassTwoEndo) -> ClassTwoEndo:
    """Inverse of an automorphism of F/F^3.

    First invert the linear part mod q^2, then cancel the remaining central
    defect: the composite e . f0 fixes every generator up to an element of
    F^2/F^3, and such a map is undone by dividing the defects back out.
    """
    m = ZqMatrix(e.linear_matrix_q2, e.mod.q2)
    try:
        minv = inv_mod(m).array
    except ValueError:
        raise ValueError("endomorphism is not an automorphism (singular linear part)")
    gens, mod = e.gens, e.mod
    zero_comm = np.zeros((gens.d, gens.d), dtype=np.int64)
    f0 = ClassTwoEndo(
        ClassTwoElement(gens, mod, row, zero_comm) for row in minv
    )
    h = compose(e, f0)
    corrected = []
    for i in range(gens.d):
        g = ClassTwoElement.generator(gens, mod, i)
        defect = g.inverse() * h(g)
        if not defect.is_central:
            raise AssertionError("linear correction left a non-central defect")
        corrected.append(g * defect.inverse())
    result = compose(f0, ClassTwoEndo(corrected))
    ident = ClassTwoEndo.identity(gens, mod)
    if compose(e, result) != ident or compose(result, e) != ident:
        raise AssertionError("automorphism inversion failed to verify")
    return result


def quotient_kill(gens_to_kill, u: ClassTwoElement) -> ClassTwoElement:
    """Image of u in the truncated free group on the surviving generators.

    Substituting the identity for killed generators keeps the normal form:
    the surviving coordinates are just sliced out.  Killing free generators
    is compatible with the q-central series, so this is the image in the
    class-2 truncation of the quotient.
    """
    kill = {lab if isinstance(lab, str) else u.gens.labels[lab] for lab in gens_to_kill}
    unknown = kill - set(u.gens.labels)
    if unknown:
        raise ValueError(f"cannot kill unknown generators {sorted(unknown)}")
    if not kill:
        return u
    keep = [i for i, lab in enumerate(u.gens.labels) if lab not in kill]
    if not keep:
        raise ValueError("killing every generator leaves no group")
    small = GeneratorSet(u.gens.labels[i] for i in keep)
    return ClassTwoElement(
        small, u.mod, u.gen_exp[keep], u.comm[np.ix_(keep, keep)]
    )


def _comm_pairs(d: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(d) for j in range(i + 1, d)]


class TruncatedQuotient:
    """(F/F^3) / <central relators>, with equality decided by linear algebra.

    The mixed module (Z/q^2)^d + (Z/q)^(d(d-1)/2) embeds into (Z/q^2)^N by
    scaling the commutator block with q, so one Howell computation answers
    membership in the relator span.
    """

    __slots__ = ("gens", "mod", "central_relators", "_span")

    def __init__(self, gens: GeneratorSet, mod: Modulus, central_relators):
        self.gens = gens
        self.mod = mod
        relators = tuple(central_relators)
        for r in relators:
            if r.gens != gens or r.mod != mod:
                raise ValueError("relator lives in a different truncated group")
            if not r.is_central:
                raise ValueError(f"relator {r!r} is not central (not in F^2/F^3)")
        self.central_relators = relators
        d = gens.d
        rows = [self._lift(r) for r in relators]
        width = d + d * (d - 1) // 2
        self._span = Submodule(
            np.array(rows) if rows else np.zeros((0, width), dtype=np.int64),
            width,
            mod.q2,
        )

    def _lift(self, el: ClassTwoElement) -> np.ndarray:
        q = self.mod.q
        pairs = _comm_pairs(self.gens.d)
        comm_part = np.array([q * int(el.comm[i, j]) for i, j in pairs], dtype=np.int64)
        return np.concatenate([el.gen_exp, comm_part]) % self.mod.q2

    def equal(self, u: ClassTwoElement, v: ClassTwoElement) -> bool:
        _check_same_group(u, v)
        if u.gens != self.gens or u.mod != self.mod:
            raise ValueError("elements live in a different truncated group")
        diff = u * v.inverse()
        if not diff.is_central:
            return False
        return self._span.contains(self._lift(diff))

    def is_trivial(self, u: ClassTwoElement) -> bool:
        return self.equal(u, ClassTwoElement.identity(self.gens, self.mod))


def quotient_equal(tq: TruncatedQuotient, u: ClassTwoElement, v: ClassTwoElement) -> bool:
    return tq.equal(u, v)


# ---------------------------------------------------------------------------
# word grammar: juxtaposition = product, ^k = integer power, [a,b] =
# commutator, parentheses group, "1" is the identity
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_]\w*)|(?P<int>-?\d+)|(?P<sym>[\[\],()^]))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot tokenize word at {text[pos:]!r}")
        if m.group("name"):
            tokens.append(("name", m.group("name")))
        elif m.group("int"):
            tokens.append(("int", m.group("int")))
        elif m.group("sym"):
            tokens.append(("sym", m.group("sym")))
        pos = m.end()
    return tokens


class _WordParser:
    def __init__(self, tokens, gens: GeneratorSet, mod: Modulus):
        self.tokens = tokens
        self.pos = 0
        self.gens = gens
        self.mod = mod

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise ValueError("unexpected end of word")
        self.pos += 1
        return tok

    def expect(self, sym: str):
        tok = self.take()
        if tok != ("sym", sym):
            raise ValueError(f"expected {sym!r}, got {tok}")

    def parse_word(self) -> ClassTwoElement:
        result = ClassTwoElement.identity(self.gens, self.mod)
        while True:
            tok = self.peek()
            if tok is None or tok in (("sym", "]"), ("sym", ")"), ("sym", ",")):
                return result
            result = result * self.parse_factor()

    def parse_factor(self) -> ClassTwoElement:
        atom = self.parse_atom()
        if self.peek() == ("sym", "^"):
            self.take()
            kind, val = self.take()
            if kind != "int":
                raise ValueError(f"expected integer exponent, got {val!r}")
            return atom ** int(val)
        return atom

    def parse_atom(self) -> ClassTwoElement:
        kind, val = self.take()
        if kind == "name":
            return ClassTwoElement.generator(self.gens, self.mod, val)
        if kind == "int":
            if val == "1":
                return ClassTwoElement.identity(self.gens, self.mod)
            raise ValueError(f"unexpected integer {val!r} in word")
        if val == "[":
            left = self.parse_word()
            self.expect(",")
            right = self.parse_word()
            self.expect("]")
            return commutator(left, right)
        if val == "(":
            inner = self.parse_word()
            self.expect(")")
            return inner
        raise ValueError(f"unexpected token {val!r}")


def parse_word(text: str, gens: GeneratorSet, mod: Modulus) -> ClassTwoElement:
    parser = _WordParser(_tokenize(text), gens, mod)
    result = parser.parse_word()
    if parser.peek() is not None:
        raise ValueError(f"trailing input in word: {text!r}")
    return result


def format_word(el: ClassTwoElement) -> str:
    """Render the normal form; parse_word round-trips it."""
    parts = []
    labels = el.gens.labels
    for i, a in enumerate(el.gen_exp):
        if a:
            parts.append(labels[i] if a == 1 else f"{labels[i]}^{int(a)}")
    d = el.gens.d
    for i in range(d):
        for j in range(i + 1, d):
            c = int(el.comm[i, j])
            if c:
                base = f"[{labels[j]},{labels[i]}]"
                parts.append(base if c == 1 else f"{base}^{c}")
    return " ".join(parts) if parts else "1"
