"""Construction of equivariant free quotients with prescribed signature.

Pipeline: pick a target submodule V of H^1 (free, invariant under the
involution, totally isotropic, inside the Bockstein kernel), move to a basis
of the truncated free group in which V is spanned by duals of generators,
kill the complementary generators, and certify that the relator dies in the
quotient.  Every certificate records which of the conditions held, so a
failing input produces a red certificate rather than an exception.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from demuskin.class2_words import (
    ClassTwoElement,
    ClassTwoEndo,
    GeneratorSet,
    TruncatedQuotient,
    commutator,
    compose,
    invert_auto,
    quotient_kill,
)
from demuskin.demushkin_core import (
    DemushkinPresentation,
    InvolutionAction,
    _CoinvariantMachine,
    bockstein_kernel,
    delta_map,
    gamma_line,
    invariants,
    standard_involution,
    standard_relator,
    standard_sign_pattern,
    symmetrize_basis,
    transform_presentation,
)
from demuskin.zq_linalg import (
    Submodule,
    ZqMatrix,
    eigen_split,
    inv_mod,
    is_totally_isotropic,
    orthogonal_complement,
)

LIFTING_NOTE = (
    "the class-2 data certify a surjection onto the class-2 truncation of "
    "the free quotient; the full pro-p surjection follows by the standard "
    "embedding-problem induction and is not re-derived here"
)


class Signature(NamedTuple):
    u_plus: int
    u_minus: int


class IsotropicSubmodule:
    """A candidate V with its validated condition flags."""

    __slots__ = (
        "V",
        "free",
        "delta_invariant",
        "totally_isotropic",
        "in_bockstein_kernel",
        "gamma_contained",
    )

    def __init__(self, V, free, delta_invariant, totally_isotropic, in_bockstein_kernel, gamma_contained):
        self.V = V
        self.free = free
        self.delta_invariant = delta_invariant
        self.totally_isotropic = totally_isotropic
        self.in_bockstein_kernel = in_bockstein_kernel
        self.gamma_contained = gamma_contained  # None unless V has maximal rank

    @property
    def ok(self) -> bool:
        return (
            self.free
            and self.delta_invariant
            and self.totally_isotropic
            and self.in_bockstein_kernel
        )

    @property
    def rank(self) -> int:
        return self.V.rank

    def flag_dict(self) -> dict:
        return {
            "free": self.free,
            "delta_invariant": self.delta_invariant,
            "totally_isotropic": self.totally_isotropic,
            "in_bockstein_kernel": self.in_bockstein_kernel,
        }

    def __repr__(self):
        return f"IsotropicSubmodule(ok={self.ok}, flags={self.flag_dict()}, V={self.V!r})"


def validate_V(
    pres: DemushkinPresentation, action: InvolutionAction, V: Submodule
) -> IsotropicSubmodule:
    """Evaluate the four quotient conditions, plus the cyclotomic-line
    containment whenever V has the maximal rank n/2 + 1."""
    if V.ambient != pres.d or V.modulus != pres.mod.q:
        raise ValueError("V does not live in H^1 of the presentation")
    coh = invariants(pres)
    free = V.is_free
    image = V.image_under(action.h1_matrix.array.T)
    invariant = image == V
    isotropic = is_totally_isotropic(coh.cup, V)
    q = pres.mod.q
    in_ker = not ((V.basis @ coh.bockstein) % q).any() if V.ngens else True
    gamma_contained = None
    if free and V.rank == pres.n // 2 + 1:
        gamma_contained = V.contains_submodule(gamma_line(pres))
    return IsotropicSubmodule(V, free, invariant, isotropic, in_ker, gamma_contained)


def build_V(
    pres: DemushkinPresentation, action: InvolutionAction, sig: Signature
) -> IsotropicSubmodule:
    """The explicit maximal V with signature (u+, u-).

    With u = 2 u+ - 1 the span consists of the dual of g, the duals of
    x_(i+1) for i = 1, 3, ..., u (fixed generators) and the duals of
    x_(i-1) for i = u+3, u+5, ..., n (negated generators); for u+ = 0 the
    middle family is empty and the last one runs over i = 2, 4, ..., n.
    """
    sig = Signature(*sig)
    n = pres.n
    if sig.u_plus < 0 or sig.u_minus < 0 or sig.u_plus + sig.u_minus != n // 2:
        raise ValueError(
            f"signature {sig} does not satisfy u+ + u- = n/2 = {n // 2}"
        )
    _require_clean_standard(pres, action)
    if action.h2_scalar != -1:
        raise ValueError("signature targets need an action with h2_scalar = -1")
    u = 2 * sig.u_plus - 1
    idx = [0]
    idx += [i + 2 for i in range(1, u + 1, 2)]  # duals of x_(i+1), fixed
    idx += [i for i in range(u + 3, n + 1, 2)]  # duals of x_(i-1), negated
    d = pres.d
    rows = np.zeros((len(idx), d), dtype=np.int64)
    for r, i in enumerate(idx):
        rows[r, i] = 1
    iso = validate_V(pres, action, Submodule(rows, d, pres.mod.q))
    if not iso.ok or iso.rank != n // 2 + 1 or iso.gamma_contained is not True:
        raise AssertionError(
            "explicitly constructed V failed validation; engine inconsistency"
        )
    return iso


def _require_clean_standard(pres: DemushkinPresentation, action: InvolutionAction):
    """The builder entry points work in the symmetrized standard frame."""
    if pres.relator != standard_relator(pres.n, pres.mod):
        raise ValueError("expected the standard relator; symmetrize the basis first")
    if action.is_trivial:
        return
    expected = standard_involution(pres).endo
    if action.endo != expected:
        raise ValueError(
            "expected the clean diagonal involution; symmetrize the action first"
        )


def _unimodular_rows(space: Submodule, p: int):
    for row in space.basis:
        if ((row % p) != 0).any():
            yield row


def _partner_in(space: Submodule, vec, gram: np.ndarray, p: int, q: int):
    """First basis row pairing with vec by a unit, scaled so <vec, u> = 1."""
    w = (vec @ gram) % q
    for row in space.basis:
        val = int((row @ w) % q)
        if val % p:
            return (row * pow(val, -1, q)) % q
    return None


def _partner_with_unit_bockstein(space: Submodule, vec, gram: np.ndarray, bvec, p: int, q: int):
    """Element u of `space` with B(u) = 1 and <vec, u> a unit, by scanning
    coefficient combinations of the basis rows."""
    w = (vec @ gram) % q
    rows = space.basis
    k = rows.shape[0]
    if k == 0:
        return None
    coeffs = np.zeros(k, dtype=np.int64)
    while True:
        u = (coeffs @ rows) % q
        bval = int((u @ bvec) % q)
        pval = int((u @ w) % q)
        if bval % p and pval % p:
            return (u * pow(bval, -1, q)) % q
        j = 0
        while j < k:
            coeffs[j] += 1
            if coeffs[j] < q:
                break
            coeffs[j] = 0
            j += 1
        if j == k:
            return None


class _FrameBuilder:
    """Sequential completion of an adapted dual basis.

    Maintains the list of placed dual vectors; the working space is always
    the orthogonal complement of everything placed, intersected with the
    relevant eigenspace, the Bockstein kernel when the slot requires it, and
    the perp of the prescribed vectors not yet placed.
    """

    def __init__(self, pres, action, iso):
        self.pres = pres
        self.q = pres.mod.q
        self.p = pres.mod.p
        self.d = pres.d
        coh = invariants(pres)
        self.form = coh.cup
        self.gram = coh.cup.gram.array
        self.bvec = coh.bockstein
        self.kerb = bockstein_kernel(pres)
        self.trivial = action.is_trivial
        full = Submodule.full(self.d, self.q)
        if self.trivial:
            self.hplus = full
            self.hminus = full
        else:
            signs = standard_sign_pattern(pres.n)
            eye = np.eye(self.d, dtype=np.int64)
            self.hplus = Submodule(eye[signs == 1], self.d, self.q)
            self.hminus = Submodule(eye[signs == -1], self.d, self.q)
        self.nslots = pres.n // 2 + 1
        self.a_rows = [None] * self.nslots
        self.b_rows = [None] * self.nslots
        self.placed: list[np.ndarray] = []
        self.v_slots: list[tuple[int, str]] = []  # (slot, half) hosting V vectors
        self.iso = iso

    def working_space(self, side: Submodule, kerb: bool, pending) -> Submodule:
        space = side
        if kerb:
            space = space.intersect(self.kerb)
        if self.placed:
            span = Submodule(np.array(self.placed), self.d, self.q)
            space = space.intersect(orthogonal_complement(self.form, span))
        if pending:
            span = Submodule(np.array(pending), self.d, self.q)
            space = space.intersect(orthogonal_complement(self.form, span))
        return space

    def next_free_slot(self, start: int) -> int:
        for k in range(start, self.nslots):
            if self.a_rows[k] is None and self.b_rows[k] is None:
                return k
        raise AssertionError("ran out of hyperbolic slots; engine inconsistency")

    def place_prescribed(self, vec: np.ndarray, side: str, pending):
        """Put a V-basis vector into a fresh slot and find its partner."""
        if side == "plus":
            cand = self.working_space(self.hminus, True, pending)
            partner = _partner_in(cand, vec, self.gram, self.p, self.q)
            if partner is not None:
                slot = self.next_free_slot(1)
                self.a_rows[slot], self.b_rows[slot] = vec, partner
            else:
                # only the cyclotomic direction pairs into nothing inside
                # the Bockstein kernel; it takes the distinguished slot
                if self.a_rows[0] is not None or self.b_rows[0] is not None:
                    raise AssertionError("distinguished slot already used")
                cand = self.working_space(self.hminus, False, pending)
                partner = _partner_with_unit_bockstein(
                    cand, vec, self.gram, self.bvec, self.p, self.q
                )
                if partner is None:
                    raise AssertionError("no partner for a validated V vector")
                scale = int((vec @ self.gram @ partner) % self.q)
                vec = (vec * pow(scale, -1, self.q)) % self.q
                slot = 0
                self.a_rows[0], self.b_rows[0] = vec, partner
            self.v_slots.append((slot, "a"))
        else:
            cand = self.working_space(self.hplus, True, pending)
            partner = _partner_in(cand, vec, self.gram, self.p, self.q)
            if partner is None:
                raise AssertionError("no partner for a validated V vector")
            # _partner_in normalized <vec, partner> = 1; the slot stores
            # (a, b) with <a, b> = 1, so flip the sign for the a-half
            partner = (-partner) % self.q
            slot = self.next_free_slot(1)
            self.a_rows[slot], self.b_rows[slot] = partner, vec
            self.v_slots.append((slot, "b"))
        self.placed.extend([self.a_rows[slot], self.b_rows[slot]])

    def fill_distinguished_slot(self):
        cand_b = self.working_space(self.hminus, False, [])
        b0 = None
        for row in cand_b.basis:
            bval = int((row @ self.bvec) % self.q)
            if bval % self.p:
                b0 = (row * pow(bval, -1, self.q)) % self.q
                break
        if b0 is None:
            raise AssertionError("no unit Bockstein value available")
        cand_a = self.working_space(self.hplus, True, [])
        a0 = None
        # partner condition is <a0, b0> = 1
        w = (self.gram @ b0) % self.q
        for row in cand_a.basis:
            val = int((row @ w) % self.q)
            if val % self.p:
                a0 = (row * pow(val, -1, self.q)) % self.q
                break
        if a0 is None:
            raise AssertionError("no dual partner for the distinguished slot")
        self.a_rows[0], self.b_rows[0] = a0, b0
        self.placed.extend([a0, b0])

    def fill_generic_slot(self, slot: int):
        cand_b = self.working_space(self.hminus, True, [])
        b = None
        for row in _unimodular_rows(cand_b, self.p):
            b = row
            break
        if b is None:
            raise AssertionError("no free direction left for a generic slot")
        cand_a = self.working_space(self.hplus, True, [])
        w = (self.gram @ b) % self.q
        a = None
        for row in cand_a.basis:
            val = int((row @ w) % self.q)
            if val % self.p:
                a = (row * pow(val, -1, self.q)) % self.q
                break
        if a is None:
            raise AssertionError("pairing degenerated on the working space")
        self.a_rows[slot], self.b_rows[slot] = a, b
        self.placed.extend([a, b])

    def assemble(self) -> np.ndarray:
        """Rows of the new dual basis, in generator order."""
        t_star = np.zeros((self.d, self.d), dtype=np.int64)
        t_star[0] = self.a_rows[0]
        t_star[1] = self.b_rows[0]
        for k in range(1, self.nslots):
            t_star[2 * k] = self.b_rows[k]
            t_star[2 * k + 1] = self.a_rows[k]
        return t_star

    def kept_indices(self) -> list[int]:
        out = []
        for slot, half in self.v_slots:
            if slot == 0:
                out.append(0 if half == "a" else 1)
            else:
                out.append(2 * slot + 1 if half == "a" else 2 * slot)
        return sorted(out)


def _coordinate_dual_indices(V: Submodule) -> list[int] | None:
    """Indices J when V is exactly the span of coordinate duals e_J."""
    idx = []
    for row in V.basis:
        nz = np.nonzero(row)[0]
        if len(nz) != 1 or row[nz[0]] != 1:
            return None
        idx.append(int(nz[0]))
    return idx


def _build_adapted_change(
    pres: DemushkinPresentation, action: InvolutionAction, iso: IsotropicSubmodule
) -> ClassTwoEndo:
    q = pres.mod.q
    d = pres.d
    V = iso.V
    if _coordinate_dual_indices(V) is not None:
        return ClassTwoEndo.identity(pres.gens, pres.mod)

    builder = _FrameBuilder(pres, action, iso)
    gvec = delta_map(pres, 1)
    plus_rows: list[np.ndarray] = []
    minus_rows: list[np.ndarray] = []
    if builder.trivial:
        vplus, vminus = V, Submodule.zero(d, q)
    else:
        vplus = V.intersect(builder.hplus)
        vminus = V.intersect(builder.hminus)
        if not (vplus.is_free and vminus.is_free):
            raise AssertionError("eigenparts of a validated V must be free")
        if vplus.rank + vminus.rank != V.rank:
            raise AssertionError("V does not split along the eigenspaces")
    # start the plus list with the cyclotomic direction when present, then
    # greedily extend to a basis
    if V.contains(gvec):
        plus_rows.append(gvec % q)
    for row in vplus.basis:
        trial = Submodule(np.array(plus_rows + [row]), d, q)
        if trial.is_free and trial.rank == len(plus_rows) + 1:
            plus_rows.append(row)
    if len(plus_rows) != vplus.rank:
        raise AssertionError("failed to extend the cyclotomic line to a basis of V+")
    for row in vminus.basis:
        trial = Submodule(np.array(minus_rows + [row]), d, q)
        if trial.is_free and trial.rank == len(minus_rows) + 1:
            minus_rows.append(row)
    if len(minus_rows) != vminus.rank:
        raise AssertionError("failed to pick a free basis of V-")

    queue = [(row, "plus") for row in plus_rows] + [(row, "minus") for row in minus_rows]
    for k, (vec, side) in enumerate(queue):
        pending = [v for v, _ in queue[k + 1 :]]
        builder.place_prescribed(vec, side, pending)
    if builder.a_rows[0] is None:
        builder.fill_distinguished_slot()
    for slot in range(1, builder.nslots):
        if builder.a_rows[slot] is None:
            builder.fill_generic_slot(slot)

    t_star = builder.assemble()
    gram = invariants(pres).cup.gram.array
    if not np.array_equal((t_star @ gram @ t_star.T) % q, gram):
        raise AssertionError("adapted dual basis does not reproduce the standard pairing")
    t_gen = inv_mod(ZqMatrix(t_star, q)).array.T % q
    zero_comm = np.zeros((d, d), dtype=np.int64)
    basis = ClassTwoEndo(
        ClassTwoElement(pres.gens, pres.mod, row, zero_comm) for row in t_gen
    )
    # V expressed in the new dual coordinates must be a coordinate span
    new_coords = V.image_under(t_gen.T)
    if _coordinate_dual_indices(new_coords) is None:
        raise AssertionError("change of basis failed to realize V on generator duals")
    return basis


def adapted_basis(
    pres: DemushkinPresentation, action: InvolutionAction, V
) -> ClassTwoEndo:
    """Equivariant change of basis after which V is spanned by generator
    duals, the relator keeps its standard shape, and the pairing-partner
    condition holds (one dual per hyperbolic pair)."""
    iso = V if isinstance(V, IsotropicSubmodule) else validate_V(pres, action, V)
    if not iso.ok:
        raise ValueError(f"V fails validation: {iso.flag_dict()}")
    _require_clean_standard(pres, action)
    basis = _build_adapted_change(pres, action, iso)
    check = invert_auto(basis)(pres.relator)
    if check != standard_relator(pres.n, pres.mod):
        raise AssertionError("adapted basis did not preserve the relator shape")
    return basis


class FreeQuotientCertificate:
    """Outcome of the kill construction, green or red."""

    __slots__ = (
        "basis_change",
        "killed",
        "kept",
        "signature",
        "flags",
        "V_realized",
        "note",
        "_final_linear",
        "_kept_idx",
    )

    def __init__(self, basis_change, killed, kept, signature, flags, V_realized, note, final_linear=None, kept_idx=None):
        self.basis_change = basis_change
        self.killed = tuple(killed)
        self.kept = tuple(kept)
        self.signature = signature
        self.flags = dict(flags)
        self.V_realized = V_realized
        self.note = note
        self._final_linear = final_linear
        self._kept_idx = tuple(kept_idx) if kept_idx is not None else None

    @property
    def all_green(self) -> bool:
        return all(self.flags.values())

    def to_json(self) -> dict:
        return {
            "basis_change": self.basis_change.to_json()["images"],
            "killed": list(self.killed),
            "kept": list(self.kept),
            "signature": list(self.signature) if self.signature is not None else None,
            "flags": {k: bool(v) for k, v in self.flags.items()},
            "V": self.V_realized.to_json(),
            "lifting_note": self.note,
        }

    def __repr__(self):
        state = "green" if self.all_green else "red"
        return (
            f"FreeQuotientCertificate({state}, kept={self.kept}, "
            f"signature={self.signature})"
        )


_PIPELINE_FLAGS = ("relator_contained", "delta_invariant_kill", "surjective_mod_F2")


def free_quotient(
    pres: DemushkinPresentation, action: InvolutionAction, V
) -> FreeQuotientCertificate:
    """Run the full construction; failures surface as red flags, not errors."""
    iso = V if isinstance(V, IsotropicSubmodule) else validate_V(pres, action, V)
    flags = iso.flag_dict()
    if not iso.ok:
        flags.update({name: False for name in _PIPELINE_FLAGS})
        return FreeQuotientCertificate(
            basis_change=ClassTwoEndo.identity(pres.gens, pres.mod),
            killed=(),
            kept=(),
            signature=None,
            flags=flags,
            V_realized=iso.V,
            note="validation failed; no quotient constructed",
        )
    basis1 = _build_adapted_change(pres, action, iso)
    pres2, action2 = transform_presentation(pres, action, basis1)
    basis2, _ = symmetrize_basis(pres2, action2)
    total = compose(basis1, basis2)
    pres3, action3 = transform_presentation(pres, action, total)
    if pres3.relator != standard_relator(pres.n, pres.mod):
        raise AssertionError("final frame lost the standard relator shape")

    t_total = total.linear_matrix
    new_coords = iso.V.image_under(t_total.T)
    kept_idx = _coordinate_dual_indices(new_coords)
    if kept_idx is None:
        raise AssertionError("final frame does not realize V on generator duals")
    kept_idx = sorted(kept_idx)
    labels = pres.gens.labels
    kept = [labels[i] for i in kept_idx]
    killed = [lab for i, lab in enumerate(labels) if i not in kept_idx]
    killed_idx = [i for i in range(pres.d) if i not in kept_idx]

    if kept:
        image = quotient_kill(killed, pres3.relator)
        flags["relator_contained"] = image.is_identity
    else:
        flags["relator_contained"] = True

    kill_ok = True
    q, q2 = pres.mod.q, pres.mod.q2
    for s in killed_idx:
        img = action3.endo.images[s]
        if (img.gen_exp[kept_idx] % q2).any():
            kill_ok = False
        if img.comm[np.ix_(kept_idx, kept_idx)].any():
            kill_ok = False
    flags["delta_invariant_kill"] = kill_ok
    # kept generators project onto the quotient mod squares by construction
    flags["surjective_mod_F2"] = True

    final_linear = action3.endo.linear_matrix
    sub = final_linear[np.ix_(kept_idx, kept_idx)] if kept_idx else np.zeros((0, 0), dtype=np.int64)
    if kept_idx:
        plus, minus = eigen_split(ZqMatrix(sub, q))
        sig = Signature(plus.rank - 1, minus.rank)
    else:
        sig = Signature(-1, 0)
    return FreeQuotientCertificate(
        basis_change=total,
        killed=killed,
        kept=kept,
        signature=sig,
        flags=flags,
        V_realized=iso.V,
        note=LIFTING_NOTE,
        final_linear=final_linear,
        kept_idx=kept_idx,
    )


def signature_of(cert: FreeQuotientCertificate, action: InvolutionAction) -> Signature:
    """Eigen-rank data of the induced action on the quotient mod squares."""
    if not cert.all_green:
        raise ValueError("signature is only defined for green certificates")
    if cert._final_linear is None or cert._kept_idx is None:
        raise ValueError("certificate carries no quotient action data")
    q = action.h1_matrix.modulus
    idx = list(cert._kept_idx)
    if not idx:
        return Signature(-1, 0)
    sub = cert._final_linear[np.ix_(idx, idx)]
    plus, minus = eigen_split(ZqMatrix(sub, q))
    return Signature(plus.rank - 1, minus.rank)


def factoring_check(pres: DemushkinPresentation, V) -> bool:
    """Whether the cyclotomic dual line lies inside a maximal-rank V."""
    sub = V.V if isinstance(V, IsotropicSubmodule) else V
    if not sub.is_free or sub.rank != pres.n // 2 + 1:
        raise ValueError("factoring check applies to maximal-rank free V only")
    return sub.contains_submodule(gamma_line(pres))


def uniqueness_check(
    pres: DemushkinPresentation,
    action: InvolutionAction,
    cert: FreeQuotientCertificate,
) -> bool:
    """Compare the kill kernel with the coinvariants kernel inside the
    class-2 quotient; equality certifies the trivial-signature quotient is
    the maximal one with trivial action."""
    if not cert.all_green:
        raise ValueError("uniqueness check needs a green certificate")
    if cert.signature != Signature(pres.n // 2, 0):
        raise ValueError(
            f"uniqueness check applies to signature ({pres.n // 2}, 0); "
            f"certificate has {cert.signature}"
        )
    if action.h2_scalar != -1:
        raise ValueError("uniqueness check needs an action with h2_scalar = -1")

    machine = _CoinvariantMachine(pres, action)
    coinv_span = TruncatedQuotient(
        machine.small_gens,
        pres.mod,
        list(machine.central_relators)
        + ([machine.relator_image] if not machine.relator_image.is_identity else []),
    )

    def in_coinv_kernel(u: ClassTwoElement) -> bool:
        img = machine.project(machine.to_frame(u))
        return coinv_span.is_trivial(img)

    tau = cert.basis_change
    tau_inv = invert_auto(tau)
    killed = list(cert.killed)
    rel_final = tau_inv(pres.relator)
    kill_rel = quotient_kill(killed, rel_final)
    kill_span = TruncatedQuotient(
        GeneratorSet(cert.kept),
        pres.mod,
        [kill_rel] if not kill_rel.is_identity else [],
    )

    def in_kill_kernel(u: ClassTwoElement) -> bool:
        return kill_span.is_trivial(quotient_kill(killed, tau_inv(u)))

    gens = [
        ClassTwoElement.generator(pres.gens, pres.mod, i) for i in range(pres.d)
    ]
    coinv_generators = [pres.relator]
    for i, g in enumerate(gens):
        r = g.inverse() * action.endo.images[i]
        coinv_generators.append(r)
        coinv_generators.extend(commutator(r, h) for h in gens)
    kill_generators = [pres.relator]
    killed_elems = [tau(ClassTwoElement.generator(pres.gens, pres.mod, lab)) for lab in killed]
    frame_gens = [tau(g) for g in gens]
    for ke in killed_elems:
        kill_generators.append(ke)
        kill_generators.extend(commutator(ke, h) for h in frame_gens)

    return all(in_coinv_kernel(u) for u in kill_generators) and all(
        in_kill_kernel(u) for u in coinv_generators
    )
