import random

import numpy as np
import pytest

from demuskin.class2_words import (
    ClassTwoElement,
    ClassTwoEndo,
    GeneratorSet,
    TruncatedQuotient,
    apply_endo,
    central_sqrt,
    commutator,
    compose,
    demushkin_generators,
    endo_power,
    format_word,
    invert_auto,
    inverse,
    multiply,
    parse_word,
    power,
    quotient_equal,
    quotient_kill,
)
from demuskin.zq_linalg import Modulus

rng = random.Random(357911)

MODULI = [Modulus(3, 1), Modulus(3, 2), Modulus(5, 1), Modulus(5, 2)]


def random_element(gens, mod):
    d = gens.d
    ge = [rng.randrange(mod.q2) for _ in range(d)]
    cm = np.zeros((d, d), dtype=np.int64)
    for i in range(d):
        for j in range(i + 1, d):
            cm[i, j] = rng.randrange(mod.q)
    return ClassTwoElement(gens, mod, ge, cm)


def naive_collect(letters, gens, mod):
    """Letter-by-letter bubble collection, independent of the closed formulas.

    `letters` is a sequence of (index, +-1).  Swapping adjacent letters
    g_j^s g_i^t -> g_i^t g_j^s [g_j, g_i]^(s t) (j > i) is the defining
    collection move; exponents then add up coordinate-wise.
    """
    d = gens.d
    seq = list(letters)
    comm = np.zeros((d, d), dtype=np.int64)
    changed = True
    while changed:
        changed = False
        for k in range(len(seq) - 1):
            (a, s), (b, t) = seq[k], seq[k + 1]
            if a > b:
                comm[b, a] += s * t
                seq[k], seq[k + 1] = seq[k + 1], seq[k]
                changed = True
    ge = np.zeros(d, dtype=np.int64)
    for idx, s in seq:
        ge[idx] += s
    return ClassTwoElement(gens, mod, ge, comm)


def random_letters(d, length):
    return [(rng.randrange(d), rng.choice([1, -1])) for _ in range(length)]


def letters_to_element(letters, gens, mod):
    out = ClassTwoElement.identity(gens, mod)
    for idx, s in letters:
        out = out * ClassTwoElement.generator(gens, mod, idx) ** s
    return out


class TestCollection:
    def test_defining_move(self):
        gens = GeneratorSet(("a", "b"))
        mod = Modulus(3, 1)
        g1 = ClassTwoElement.generator(gens, mod, 0)
        g2 = ClassTwoElement.generator(gens, mod, 1)
        prod = g2 * g1
        assert list(prod.gen_exp) == [1, 1]
        assert prod.comm[0, 1] == 1
        # and the other order has no commutator part
        assert (g1 * g2).comm[0, 1] == 0

    @pytest.mark.parametrize("mod", MODULI, ids=lambda m: f"q{m.q}")
    def test_matches_letter_collection(self, mod):
        gens = GeneratorSet(("a", "b", "c"))
        for _ in range(300):
            letters = random_letters(3, rng.randrange(0, 9))
            assert letters_to_element(letters, gens, mod) == naive_collect(
                letters, gens, mod
            )

    @pytest.mark.parametrize("mod", MODULI, ids=lambda m: f"q{m.q}")
    def test_group_axioms(self, mod):
        gens = GeneratorSet(("a", "b", "c"))
        e = ClassTwoElement.identity(gens, mod)
        for _ in range(600):
            u = random_element(gens, mod)
            v = random_element(gens, mod)
            w = random_element(gens, mod)
            assert (u * v) * w == u * (v * w)
            assert u * e == u and e * u == u
            assert u * u.inverse() == e and u.inverse() * u == e

    @pytest.mark.parametrize("mod", MODULI, ids=lambda m: f"q{m.q}")
    def test_power_against_repeated_multiplication(self, mod):
        gens = GeneratorSet(("a", "b", "c"))
        for _ in range(60):
            u = random_element(gens, mod)
            k = rng.randrange(0, 2 * mod.q + 3)
            acc = ClassTwoElement.identity(gens, mod)
            for _ in range(k):
                acc = acc * u
            assert u ** k == acc
            assert u ** (-k) == acc.inverse()

    def test_power_of_product_of_generators(self):
        # (g1 g2)^q has gen_exp q(e1+e2); the cross commutator picks up
        # q(q-1)/2 = 0 mod q
        for mod in MODULI:
            gens = GeneratorSet(("a", "b"))
            g1 = ClassTwoElement.generator(gens, mod, 0)
            g2 = ClassTwoElement.generator(gens, mod, 1)
            u = (g1 * g2) ** mod.q
            acc = ClassTwoElement.identity(gens, mod)
            for _ in range(mod.q):
                acc = acc * (g1 * g2)
            assert u == acc
            assert list(u.gen_exp) == [mod.q, mod.q]
            assert not u.comm.any()

    @pytest.mark.parametrize("mod", MODULI, ids=lambda m: f"q{m.q}")
    def test_qsquare_power_is_trivial(self, mod):
        gens = GeneratorSet(("a", "b", "c"))
        for _ in range(40):
            u = random_element(gens, mod)
            assert (u ** mod.q2).is_identity


class TestCommutator:
    def test_self_commutator_trivial(self):
        gens = GeneratorSet(("a", "b"))
        mod = Modulus(3, 1)
        g = ClassTwoElement.generator(gens, mod, 0)
        assert commutator(g, g).is_identity

    @pytest.mark.parametrize("mod", MODULI, ids=lambda m: f"q{m.q}")
    def test_literal_word_expansion(self, mod):
        # [g1^2, g2^3] expanded as a 10-letter word
        gens = GeneratorSet(("a", "b"))
        g1 = ClassTwoElement.generator(gens, mod, 0)
        g2 = ClassTwoElement.generator(gens, mod, 1)
        letters = (
            [(0, -1)] * 2 + [(1, -1)] * 3 + [(0, 1)] * 2 + [(1, 1)] * 3
        )
        expanded = letters_to_element(letters, gens, mod)
        assert commutator(g1 ** 2, g2 ** 3) == expanded
        assert expanded.comm[0, 1] % mod.q == (-6) % mod.q

    @pytest.mark.parametrize("mod", MODULI, ids=lambda m: f"q{m.q}")
    def test_commutator_is_central_and_bilinear(self, mod):
        gens = GeneratorSet(("a", "b", "c"))
        for _ in range(150):
            u = random_element(gens, mod)
            v = random_element(gens, mod)
            c = commutator(u, v)
            assert c.is_central
            # centrality of F^2/F^3
            assert commutator(u, c).is_identity
            assert commutator(c, v).is_identity
        for _ in range(80):
            u, v, w = (random_element(gens, mod) for _ in range(3))
            assert commutator(u * v, w) == commutator(u, w) * commutator(v, w)

    @pytest.mark.parametrize("mod", MODULI, ids=lambda m: f"q{m.q}")
    def test_hall_petrescu_identity(self, mod):
        gens = GeneratorSet(("a", "b", "c"))
        for m_exp in (2, mod.q, mod.q + 1):
            for _ in range(120):
                u = random_element(gens, mod)
                v = random_element(gens, mod)
                lhs = (u * v) ** m_exp
                rhs = (
                    u ** m_exp
                    * v ** m_exp
                    * commutator(v, u) ** (m_exp * (m_exp - 1) // 2)
                )
                assert lhs == rhs
                # oracle for the power on the left
                acc = ClassTwoElement.identity(gens, mod)
                for _ in range(m_exp):
                    acc = acc * (u * v)
                assert lhs == acc


class TestCentralSqrt:
    def test_identity(self):
        gens = GeneratorSet(("a", "b"))
        mod = Modulus(3, 1)
        e = ClassTwoElement.identity(gens, mod)
        assert central_sqrt(e) == e

    def test_commutator_sqrt_mod_3(self):
        gens = GeneratorSet(("a", "b"))
        mod = Modulus(3, 1)
        c = commutator(
            ClassTwoElement.generator(gens, mod, 1),
            ClassTwoElement.generator(gens, mod, 0),
        )
        s = central_sqrt(c)
        assert s == c ** 2
        assert s * s == c

    def test_qth_power_sqrt(self):
        gens = GeneratorSet(("a", "b"))
        mod = Modulus(3, 1)
        c = ClassTwoElement.generator(gens, mod, 0) ** 3
        s = central_sqrt(c)
        assert s == ClassTwoElement.generator(gens, mod, 0) ** 6
        assert s * s == c

    @pytest.mark.parametrize("mod", MODULI, ids=lambda m: f"q{m.q}")
    def test_random_central_squares(self, mod):
        gens = GeneratorSet(("a", "b", "c"))
        for _ in range(150):
            u = random_element(gens, mod)
            c = ClassTwoElement(
                gens, mod, (u.gen_exp * mod.q) % mod.q2, u.comm
            )
            s = central_sqrt(c)
            assert s * s == c
            # endomorphism of the abelian group F^2/F^3
            v = random_element(gens, mod)
            c2 = ClassTwoElement(gens, mod, (v.gen_exp * mod.q) % mod.q2, v.comm)
            assert central_sqrt(c * c2) == central_sqrt(c) * central_sqrt(c2)

    def test_rejects_non_central(self):
        gens = GeneratorSet(("a", "b"))
        mod = Modulus(3, 1)
        with pytest.raises(ValueError):
            central_sqrt(ClassTwoElement.generator(gens, mod, 0))


class TestEndomorphisms:
    def setup_method(self):
        self.gens = GeneratorSet(("a", "b"))
        self.mod = Modulus(3, 1)
        self.g1 = ClassTwoElement.generator(self.gens, self.mod, 0)
        self.g2 = ClassTwoElement.generator(self.gens, self.mod, 1)

    def test_identity_endo(self):
        e = ClassTwoEndo.identity(self.gens, self.mod)
        u = random_element(self.gens, self.mod)
        assert apply_endo(e, u) == u

    def test_unipotent_central_example(self):
        c = commutator(self.g2, self.g1)
        e = ClassTwoEndo([self.g1 * c, self.g2])
        assert apply_endo(e, c) == c
        inv = invert_auto(e)
        assert inv.images[0] == self.g1 * c.inverse()
        assert inv.images[1] == self.g2
        assert compose(inv, e) == ClassTwoEndo.identity(self.gens, self.mod)

    @pytest.mark.parametrize("mod", MODULI, ids=lambda m: f"q{m.q}")
    def test_endos_are_homomorphisms(self, mod):
        gens = GeneratorSet(("a", "b", "c"))
        for _ in range(60):
            e = ClassTwoEndo([random_element(gens, mod) for _ in range(3)])
            u = random_element(gens, mod)
            v = random_element(gens, mod)
            assert e(u * v) == e(u) * e(v)
            assert e(u.inverse()) == e(u).inverse()

    @pytest.mark.parametrize("mod", MODULI, ids=lambda m: f"q{m.q}")
    def test_invert_random_automorphisms(self, mod):
        gens = GeneratorSet(("a", "b", "c"))
        ident = ClassTwoEndo.identity(gens, mod)
        done = 0
        while done < 25:
            e = ClassTwoEndo([random_element(gens, mod) for _ in range(3)])
            if not e.is_automorphism:
                continue
            done += 1
            inv = invert_auto(e)
            assert compose(e, inv) == ident
            assert compose(inv, e) == ident

    def test_invert_rejects_non_automorphism(self):
        e = ClassTwoEndo([self.g1 ** 3, self.g2])
        with pytest.raises(ValueError):
            invert_auto(e)

    def test_compose_associative_and_applied(self):
        gens = GeneratorSet(("a", "b", "c"))
        mod = Modulus(3, 2)
        for _ in range(25):
            e1 = ClassTwoEndo([random_element(gens, mod) for _ in range(3)])
            e2 = ClassTwoEndo([random_element(gens, mod) for _ in range(3)])
            u = random_element(gens, mod)
            assert compose(e1, e2)(u) == e1(e2(u))

    @pytest.mark.parametrize("mod", [Modulus(3, 1), Modulus(3, 2), Modulus(5, 1)], ids=lambda m: f"q{m.q}")
    def test_kernel_of_linear_reduction_is_p_group(self, mod):
        # automorphisms that are the identity mod F^2 have p-power order
        gens = GeneratorSet(("a", "b", "c"))
        bound = mod.q2 * mod.q
        for _ in range(20):
            images = []
            for i in range(3):
                g = ClassTwoElement.generator(gens, mod, i)
                central = random_element(gens, mod)
                z = ClassTwoElement(
                    gens, mod, (central.gen_exp * mod.q) % mod.q2, central.comm
                )
                images.append(g * z)
            e = ClassTwoEndo(images)
            power_of_p = 1
            g = e
            ident = ClassTwoEndo.identity(gens, mod)
            while g != ident:
                g = endo_power(g, mod.p)
                power_of_p *= mod.p
                assert power_of_p <= bound
            # order divides a power of p by construction of the loop
            assert endo_power(e, power_of_p) == ident


class TestQuotientKill:
    def setup_method(self):
        self.mod = Modulus(3, 1)
        self.gens = demushkin_generators(2)
        self.w = parse_word("x0^3 [x0,g] [x1,x2]", self.gens, self.mod)

    def test_kill_nothing(self):
        u = random_element(self.gens, self.mod)
        assert quotient_kill([], u) == u

    def test_kill_relator_support(self):
        img = quotient_kill(["x0", "x1"], self.w)
        assert img.is_identity

    def test_partial_kill_leaves_power(self):
        img = quotient_kill(["g", "x1"], self.w)
        assert not img.is_identity
        assert list(img.gen_exp) == [3, 0]
        assert not img.comm.any()

    def test_kill_is_homomorphism(self):
        for _ in range(60):
            u = random_element(self.gens, self.mod)
            v = random_element(self.gens, self.mod)
            ku = quotient_kill(["x1"], u)
            kv = quotient_kill(["x1"], v)
            assert quotient_kill(["x1"], u * v) == ku * kv

    def test_unknown_generator_rejected(self):
        with pytest.raises(ValueError):
            quotient_kill(["nope"], self.w)


class TestTruncatedQuotient:
    def setup_method(self):
        self.mod = Modulus(3, 1)
        self.gens = demushkin_generators(2)
        self.w = parse_word("x0^3 [x0,g] [x1,x2]", self.gens, self.mod)
        self.tq = TruncatedQuotient(self.gens, self.mod, [self.w])

    def test_reflexive(self):
        u = random_element(self.gens, self.mod)
        assert quotient_equal(self.tq, u, u)

    def test_relator_is_trivial(self):
        assert self.tq.is_trivial(self.w)
        assert self.tq.is_trivial(self.w ** 2)

    def test_two_sides_of_the_relation(self):
        u = parse_word("x0^3", self.gens, self.mod)
        v = parse_word("[x0,g]^-1 [x1,x2]^-1", self.gens, self.mod)
        assert quotient_equal(self.tq, u, v)

    def test_distinct_elements_differ(self):
        u = parse_word("x0", self.gens, self.mod)
        v = parse_word("x1", self.gens, self.mod)
        assert not quotient_equal(self.tq, u, v)

    def test_congruence_under_multiplication(self):
        for _ in range(40):
            u = random_element(self.gens, self.mod)
            assert quotient_equal(self.tq, u * self.w, u)

    def test_non_central_relator_rejected(self):
        bad = parse_word("x0", self.gens, self.mod)
        with pytest.raises(ValueError):
            TruncatedQuotient(self.gens, self.mod, [bad])


class TestWordGrammar:
    def test_round_trip_random(self):
        for mod in MODULI:
            gens = demushkin_generators(2)
            for _ in range(40):
                u = random_element(gens, mod)
                assert parse_word(format_word(u), gens, mod) == u

    def test_identity_renders_as_one(self):
        gens = demushkin_generators(0)
        mod = Modulus(3, 1)
        e = ClassTwoElement.identity(gens, mod)
        assert format_word(e) == "1"
        assert parse_word("1", gens, mod) == e

    def test_nested_expressions(self):
        gens = demushkin_generators(2)
        mod = Modulus(3, 1)
        u = parse_word("(x0 x1)^2 [x0 x1, g]^-1", gens, mod)
        x0 = ClassTwoElement.generator(gens, mod, "x0")
        x1 = ClassTwoElement.generator(gens, mod, "x1")
        g = ClassTwoElement.generator(gens, mod, "g")
        expected = (x0 * x1) ** 2 * commutator(x0 * x1, g) ** (-1)
        assert u == expected

    def test_parse_errors(self):
        gens = demushkin_generators(0)
        mod = Modulus(3, 1)
        for bad in ("x9", "[x0", "x0^", "x0)", "2"):
            with pytest.raises(ValueError):
                parse_word(bad, gens, mod)

    def test_json_round_trip(self):
        gens = demushkin_generators(2)
        mod = Modulus(3, 2)
        u = random_element(gens, mod)
        assert ClassTwoElement.from_json(u.to_json(), gens, mod) == u
        e = ClassTwoEndo([random_element(gens, mod) for _ in range(gens.d)])
        assert ClassTwoEndo.from_json(e.to_json(), gens, mod) == e


class TestGeneratorSet:
    def test_mismatch_rejected(self):
        mod = Modulus(3, 1)
        a = ClassTwoElement.generator(GeneratorSet(("a", "b")), mod, 0)
        c = ClassTwoElement.generator(GeneratorSet(("c", "d")), mod, 0)
        with pytest.raises(ValueError):
            multiply(a, c)

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            GeneratorSet(("a", "a"))
