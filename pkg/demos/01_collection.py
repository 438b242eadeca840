#!/usr/bin/env python3
"""Tour of the collection engine: normal forms in F/F^3.

Every element of the class-2 truncation has a unique normal form
g_1^(a_1) ... g_d^(a_d) . prod [g_j, g_i]^(c_ij) with generator exponents
mod q^2 and commutator exponents mod q.  This script multiplies a few words
and shows the coordinates.
"""

from demuskin import (
    ClassTwoElement,
    GeneratorSet,
    Modulus,
    central_sqrt,
    commutator,
    format_word,
    parse_word,
)

mod = Modulus(3, 1)  # q = 3, exponents mod 9 / commutators mod 3
gens = GeneratorSet(("a", "b", "c"))

a = ClassTwoElement.generator(gens, mod, "a")
b = ClassTwoElement.generator(gens, mod, "b")

print("q =", mod.q, " q^2 =", mod.q2)
print()

# the defining collection move: b a = a b [b,a]
print("b * a            =", format_word(b * a))
print("a * b            =", format_word(a * b))
print()

# powers pick up binomial commutator corrections
u = a * b
print("(a b)^2          =", format_word(u ** 2))
print("(a b)^3          =", format_word(u ** 3), "  (q-th power, correction vanishes)")
print("(a b)^9          =", format_word(u ** 9), "  (q^2-th power is trivial)")
print()

# commutators are computed literally and land in the centre
w = parse_word("a^2 b^-1 [c,a]", gens, mod)
print("w                =", format_word(w))
print("w^-1             =", format_word(w.inverse()))
print("[w, a]           =", format_word(commutator(w, a)))
print("[[c,a], w]       =", format_word(commutator(commutator(b, a), w)), " (centre)")
print()

# the centre F^2/F^3 has odd exponent q, so squaring is invertible there
c = parse_word("a^3 [b,a]", gens, mod)
s = central_sqrt(c)
print("central c        =", format_word(c))
print("sqrt(c)          =", format_word(s))
print("sqrt(c)^2        =", format_word(s * s))
