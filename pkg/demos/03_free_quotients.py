#!/usr/bin/env python3
"""Equivariant free quotients with a prescribed signature.

Under the standard involution (g fixed, x0 inverted, odd x inverted, even x
fixed) the H^2 scalar is -1, and for every u+ + u- = n/2 there is an
invariant free quotient of rank n/2 + 1 whose abelianization has eigen
ranks (u+ + 1, u-).  The certificate records the killed generators, the
verified conditions, and the relator-containment check.
"""

import json

from demuskin import (
    DemushkinPresentation,
    Modulus,
    Signature,
    build_V,
    coinvariants,
    free_quotient,
    signature_of,
    standard_involution,
    uniqueness_check,
)

n, mod = 4, Modulus(3, 1)
pres = DemushkinPresentation.standard(n, mod)
action = standard_involution(pres)
print(f"rank {n + 2} presentation, q = {mod.q}, h2_scalar = {action.h2_scalar}")
print()

for u_plus in range(n // 2 + 1):
    sig = Signature(u_plus, n // 2 - u_plus)
    iso = build_V(pres, action, sig)
    cert = free_quotient(pres, action, iso)
    print(f"signature {tuple(sig)}:")
    print("  target V dual to :", cert.kept)
    print("  killed           :", cert.killed)
    print("  flags            :", cert.flags)
    print("  measured         :", tuple(signature_of(cert, action)))
    print()

# the signature (n/2, 0) quotient is the maximal quotient with trivial action
cert = free_quotient(pres, action, build_V(pres, action, Signature(n // 2, 0)))
res = coinvariants(pres, action)
print("coinvariants:", res.kind, "of rank", res.rank)
print("kill kernel equals coinvariants kernel:", uniqueness_check(pres, action, cert))
print()
print("certificate JSON:")
print(json.dumps(cert.to_json(), indent=2)[:400], "...")
