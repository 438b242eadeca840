#!/usr/bin/env python3
"""Exhaustive search over isotropic submodules at desk scale.

For the rank-4 standard form over Z/3 the search enumerates every free
totally isotropic submodule, confirms the rank bound n/2 + 1, and checks
that every maximal one inside the Bockstein kernel contains the cyclotomic
line.
"""

from demuskin import (
    DemushkinPresentation,
    Modulus,
    Submodule,
    bockstein_kernel,
    gamma_line,
    invariants,
    isotropic_free_submodules,
    max_isotropic_oracle,
)

pres = DemushkinPresentation.standard(2, Modulus(3, 1))
coh = invariants(pres)
full = Submodule.full(4, 3)

print("ambient rank 4 over Z/3, standard antisymmetric form")
subs = isotropic_free_submodules(coh.cup, full)
by_rank = {}
for s in subs:
    by_rank.setdefault(s.rank, 0)
    by_rank[s.rank] += 1
print("free isotropic submodules by rank:", dict(sorted(by_rank.items())))
print("maximum rank:", max_isotropic_oracle(coh.cup, full), "(= n/2 + 1)")
print()

kerb = bockstein_kernel(pres)
line = gamma_line(pres)
maximal = isotropic_free_submodules(coh.cup, kerb, rank=2)
print("maximal free isotropic submodules inside ker B:", len(maximal))
print(
    "all of them contain the cyclotomic line:",
    all(s.contains_submodule(line) for s in maximal),
)
for s in maximal[:4]:
    print("  basis:", s.basis.tolist())
