"""Demushkin presentations at the class-2 window and their involutions.

A presentation of rank n+2 carries the basis g, x0, ..., xn, the relator

    w = x0^q [x0, g] [x1, x2] ... [x_(n-1), x_n]

(any class-3 tail is invisible in F/F^3) and a character giving the action
on the dualizing data mod q^2.  From the collected relator one reads off the
cup-product gram matrix (the antisymmetrized commutator coordinates) and the
Bockstein vector (the generator exponents divided by q).

An involution of the truncated group carries the matrix it induces on H^1
and the scalar by which it acts on H^2, i.e. the power t with w -> w^t.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from demuskin.class2_words import (
    ClassTwoElement,
    ClassTwoEndo,
    GeneratorSet,
    TruncatedQuotient,
    central_sqrt,
    commutator,
    compose,
    demushkin_generators,
    endo_power,
    format_word,
    invert_auto,
    parse_word,
)
from demuskin.zq_linalg import (
    ANTISYMMETRIC,
    BilinearForm,
    Modulus,
    Submodule,
    ZqMatrix,
    eigen_split,
    inv_mod,
    kernel,
)


class CharacterData:
    """One unit of Z/q^2 per generator; the values are 1 mod q.

    The congruence is forced by q being the size of the fixed part of the
    dualizing module, and it is what makes the connecting map below integral.
    """

    __slots__ = ("values",)

    def __init__(self, values, mod: Modulus):
        vals = np.mod(np.asarray(values, dtype=np.int64), mod.q2)
        if ((vals % mod.p) == 0).any():
            raise ValueError("character values must be units")
        if ((vals - 1) % mod.q).any():
            raise ValueError("character values must be congruent to 1 mod q")
        vals.setflags(write=False)
        self.values = vals

    @classmethod
    def default(cls, gens: GeneratorSet, mod: Modulus) -> "CharacterData":
        """chi(g) = 1 + q on the first generator, 1 elsewhere."""
        vals = np.ones(gens.d, dtype=np.int64)
        vals[0] = 1 + mod.q
        return cls(vals, mod)

    def __eq__(self, other):
        return isinstance(other, CharacterData) and np.array_equal(
            self.values, other.values
        )

    def __repr__(self):
        return f"CharacterData({self.values.tolist()})"


def standard_relator(n: int, mod: Modulus) -> ClassTwoElement:
    gens = demushkin_generators(n)
    x = [ClassTwoElement.generator(gens, mod, f"x{i}") for i in range(n + 1)]
    g = ClassTwoElement.generator(gens, mod, "g")
    w = x[0] ** mod.q * commutator(x[0], g)
    for k in range(1, n, 2):
        w = w * commutator(x[k], x[k + 1])
    return w


class DemushkinPresentation:
    """Rank n+2 one-relator data at the class-2 truncation."""

    __slots__ = ("n", "mod", "gens", "relator", "chi")

    def __init__(
        self,
        n: int,
        mod: Modulus,
        relator: ClassTwoElement | None = None,
        chi: CharacterData | None = None,
        gens: GeneratorSet | None = None,
    ):
        if n < 0 or n % 2:
            raise ValueError(f"rank parameter n must be even and >= 0, got {n}")
        self.n = n
        self.mod = mod
        self.gens = gens if gens is not None else demushkin_generators(n)
        if self.gens.d != n + 2:
            raise ValueError("generator count must be n + 2")
        self.relator = relator if relator is not None else standard_relator(n, mod)
        if self.relator.gens != self.gens or self.relator.mod != mod:
            raise ValueError("relator lives in a different truncated group")
        if not self.relator.is_central:
            raise ValueError("relator must lie in F^2 (gen_exp divisible by q)")
        self.chi = chi if chi is not None else CharacterData.default(self.gens, mod)
        if len(self.chi.values) != self.gens.d:
            raise ValueError("character needs one value per generator")

    @classmethod
    def standard(cls, n: int, mod: Modulus) -> "DemushkinPresentation":
        return cls(n, mod)

    @property
    def d(self) -> int:
        return self.gens.d

    @property
    def is_standard(self) -> bool:
        return self.relator == standard_relator(self.n, self.mod) and self.chi == CharacterData.default(self.gens, self.mod)

    def element(self, text: str) -> ClassTwoElement:
        return parse_word(text, self.gens, self.mod)

    def to_json(self) -> dict:
        return {
            "p": self.mod.p,
            "f": self.mod.f,
            "n": self.n,
            "labels": list(self.gens.labels),
            "relator": format_word(self.relator),
            "chi": [int(v) for v in self.chi.values],
        }

    @classmethod
    def from_json(cls, data: dict) -> "DemushkinPresentation":
        mod = Modulus(int(data["p"]), int(data["f"]))
        n = int(data["n"])
        gens = (
            GeneratorSet(data["labels"]) if "labels" in data else demushkin_generators(n)
        )
        relator = None
        if "relator" in data:
            raw = data["relator"]
            if isinstance(raw, str):
                relator = parse_word(raw, gens, mod)
            else:
                relator = ClassTwoElement.from_json(raw, gens, mod)
        chi = CharacterData(data["chi"], mod) if "chi" in data else None
        return cls(n, mod, relator=relator, chi=chi, gens=gens)

    def __repr__(self):
        return (
            f"DemushkinPresentation(n={self.n}, q={self.mod.q}, "
            f"relator={format_word(self.relator)})"
        )


@dataclass(frozen=True)
class CohomologyData:
    """Cup form and Bockstein vector read off the collected relator."""

    h1_rank: int
    cup: BilinearForm
    bockstein: np.ndarray
    cup_nondegenerate: bool
    bockstein_surjective: bool

    @property
    def is_demushkin(self) -> bool:
        return self.cup_nondegenerate and self.bockstein_surjective


def invariants(pres: DemushkinPresentation) -> CohomologyData:
    """Gram matrix G[i][j] = antisymmetrized comm coordinate, B[i] = a_i / q."""
    q = pres.mod.q
    w = pres.relator
    gram = (w.comm - w.comm.T) % q
    cup = BilinearForm(ZqMatrix(gram, q), ANTISYMMETRIC)
    bockstein = (w.gen_exp // q) % q
    surjective = bool(((bockstein % pres.mod.p) != 0).any())
    return CohomologyData(
        h1_rank=pres.d,
        cup=cup,
        bockstein=bockstein,
        cup_nondegenerate=cup.is_nondegenerate(),
        bockstein_surjective=surjective,
    )


def delta_map(pres: DemushkinPresentation, i: int) -> np.ndarray:
    """Dual vector of the connecting homomorphism on the i-th root of unity.

    Coordinate k is i * (chi(g_k) - 1)/q mod q; with the default character
    this is i on the first generator and 0 elsewhere.
    """
    q = pres.mod.q
    return (i * ((pres.chi.values - 1) // q)) % q


def gamma_line(pres: DemushkinPresentation) -> Submodule:
    """Span of the dual vector cutting out the cyclotomic quotient."""
    return Submodule(delta_map(pres, 1).reshape(1, -1), pres.d, pres.mod.q)


def bockstein_kernel(pres: DemushkinPresentation) -> Submodule:
    coh = invariants(pres)
    return kernel(ZqMatrix(coh.bockstein.reshape(1, -1), pres.mod.q))


class InvolutionAction:
    """An order <= 2 automorphism of F/F^3 compatible with the relator.

    Carries the induced matrix on H^1 (which equals the matrix of generator
    images mod q) and the H^2 scalar, i.e. the sign t with w -> w^t.  The
    identity (h1_matrix)^T . gram . h1_matrix = t . gram is verified on
    construction; at this truncation it is a consequence of the relator
    condition, so a failure is reported loudly.
    """

    __slots__ = ("endo", "h1_matrix", "h2_scalar", "coherence_ok")

    def __init__(self, endo, h1_matrix, h2_scalar, coherence_ok=True):
        self.endo = endo
        self.h1_matrix = h1_matrix
        self.h2_scalar = h2_scalar
        self.coherence_ok = coherence_ok

    @classmethod
    def build(cls, pres: DemushkinPresentation, endo: ClassTwoEndo) -> "InvolutionAction":
        if endo.gens != pres.gens or endo.mod != pres.mod:
            raise ValueError("endomorphism does not act on the presentation's group")
        mod = pres.mod
        ident = ClassTwoEndo.identity(pres.gens, mod)
        if compose(endo, endo) != ident:
            raise ValueError("endomorphism does not square to the identity on F/F^3")
        w = pres.relator
        image = endo(w)
        t = None
        for cand in range(1, mod.q):
            if cand % mod.p == 0:
                continue
            if w ** cand == image:
                t = cand
                break
        if t is None:
            raise ValueError(
                "relator is not carried to a power of itself; "
                "the action does not descend to the one-relator quotient"
            )
        if t != 1 and t != mod.q - 1:
            raise ValueError(f"relator power t={t} is not +-1, impossible for an involution")
        scalar = 1 if t == 1 else -1
        L = endo.linear_matrix
        gram = invariants(pres).cup.gram.array
        coherent = not ((L.T @ gram @ L - t * gram) % mod.q).any()
        if not coherent:
            warnings.warn(
                "cup-form coherence (M^T G M = t G) failed; this should be "
                "impossible at the class-2 truncation",
                stacklevel=2,
            )
        return cls(endo, ZqMatrix(L, mod.q), scalar, coherent)

    @property
    def is_trivial(self) -> bool:
        return np.array_equal(
            self.h1_matrix.array,
            np.eye(self.h1_matrix.rows, dtype=np.int64),
        ) and all(
            im == ClassTwoElement.generator(self.endo.gens, self.endo.mod, i)
            for i, im in enumerate(self.endo.images)
        )

    def h1_eigenspaces(self) -> tuple[Submodule, Submodule]:
        """(plus, minus) eigenspaces of the action on H^1 coordinate rows.

        Dual vectors transform by phi -> phi . L^T, so split with the
        transpose.
        """
        return eigen_split(ZqMatrix(self.h1_matrix.array.T, self.h1_matrix.modulus))

    def f2_eigenspaces(self) -> tuple[Submodule, Submodule]:
        """(plus, minus) eigenspaces on F/F^2, where rows map by a -> a . L."""
        return eigen_split(self.h1_matrix)

    def act_h1(self, row) -> np.ndarray:
        q = self.h1_matrix.modulus
        return (np.asarray(row, dtype=np.int64) @ self.h1_matrix.array.T) % q

    def to_json(self) -> dict:
        return {
            "images": self.endo.to_json()["images"],
            "h1_matrix": self.h1_matrix.to_json(),
            "h2_scalar": self.h2_scalar,
        }

    def __repr__(self):
        return f"InvolutionAction(h2_scalar={self.h2_scalar}, endo={self.endo!r})"


def standard_sign_pattern(n: int) -> np.ndarray:
    """+1 on g and even x, -1 on x0 and odd x (generator index order)."""
    signs = np.ones(n + 2, dtype=np.int64)
    signs[1] = -1  # x0
    for j in range(1, n + 1, 2):
        signs[j + 1] = -1
    return signs


def standard_involution(pres: DemushkinPresentation) -> InvolutionAction:
    """g -> g, x0 -> x0^-1, odd x -> inverse, even x -> fixed."""
    if pres.relator != standard_relator(pres.n, pres.mod):
        raise ValueError("the standard involution needs the standard relator")
    signs = standard_sign_pattern(pres.n)
    images = [
        ClassTwoElement.generator(pres.gens, pres.mod, i) ** int(s)
        for i, s in enumerate(signs)
    ]
    return InvolutionAction.build(pres, ClassTwoEndo(images))


def trivial_action(pres: DemushkinPresentation) -> InvolutionAction:
    """The identity, for running the pipeline with no group acting."""
    return InvolutionAction.build(pres, ClassTwoEndo.identity(pres.gens, pres.mod))


def lift_involution(
    pres: DemushkinPresentation, linear, perturbation: ClassTwoEndo
) -> InvolutionAction:
    """Correct a lift of an order-2 linear action to an exact involution.

    The square of the perturbation reduces to the identity mod F^2, hence
    lies in the p-group kernel of Aut(F/F^3) -> Aut(F/F^2); raising the
    perturbation to that p-power order makes it an exact involution with the
    same linear part (the power is odd).
    """
    mod = pres.mod
    lin = np.mod(np.asarray(linear, dtype=np.int64), mod.q)
    d = pres.d
    if lin.shape != (d, d):
        raise ValueError("linear part has the wrong shape")
    if not np.array_equal((lin @ lin) % mod.q, np.eye(d, dtype=np.int64)):
        raise ValueError("prescribed linear part is not an involution mod q")
    if not np.array_equal(perturbation.linear_matrix, lin):
        raise ValueError("perturbation does not reduce to the prescribed linear part")
    square = compose(perturbation, perturbation)
    ident = ClassTwoEndo.identity(pres.gens, mod)
    steps = 0
    probe = square
    while probe != ident:
        probe = endo_power(probe, mod.p)
        steps += 1
        if steps > 3 * mod.f + 2:
            raise AssertionError("kernel element order exceeded its p-power bound")
    corrected = perturbation if steps == 0 else endo_power(perturbation, mod.p ** steps)
    if compose(corrected, corrected) != ident:
        raise AssertionError("order correction failed to produce an involution")
    if not np.array_equal(corrected.linear_matrix, lin):
        raise AssertionError("order correction changed the linear part")
    return InvolutionAction.build(pres, corrected)


def _diagonal_signs(action: InvolutionAction) -> np.ndarray | None:
    """Signs when every image is g^(+-1) times a central element, else None."""
    endo = action.endo
    q = endo.mod.q
    d = endo.gens.d
    signs = np.zeros(d, dtype=np.int64)
    for i, im in enumerate(endo.images):
        row = im.gen_exp % q
        e_i = np.zeros(d, dtype=np.int64)
        e_i[i] = 1
        if np.array_equal(row, e_i):
            signs[i] = 1
        elif np.array_equal(row, (-e_i) % q):
            signs[i] = -1
        else:
            return None
    return signs


def symmetrize_basis(
    pres: DemushkinPresentation, action: InvolutionAction
) -> tuple[ClassTwoEndo, ClassTwoElement]:
    """Absorb central perturbations into the basis via central square roots.

    For sigma(g) = g . a the new generator is g . a^(1/2); for
    sigma(g) = g^-1 . b it is b^(-1/2) . g.  The returned basis change is
    unipotent, the conjugated action is exactly diagonal (+-1 on each
    generator), and the relator keeps its shape in the new basis.
    """
    signs = _diagonal_signs(action)
    if signs is None:
        raise ValueError(
            "action is not of product shape: each generator must map to "
            "itself or its inverse times a central element"
        )
    gens, mod = pres.gens, pres.mod
    new_gens = []
    for i, s in enumerate(signs):
        g = ClassTwoElement.generator(gens, mod, i)
        img = action.endo.images[i]
        if s == 1:
            defect = g.inverse() * img
            if not defect.is_central:
                raise ValueError("perturbation of a fixed generator is not central")
            new_gens.append(g * central_sqrt(defect))
        else:
            defect = g * img
            if not defect.is_central:
                raise ValueError("perturbation of a negated generator is not central")
            new_gens.append(g * central_sqrt(defect).inverse())
    basis = ClassTwoEndo(new_gens)
    basis_inv = invert_auto(basis)
    new_action_endo = compose(basis_inv, compose(action.endo, basis))
    for i, s in enumerate(signs):
        expected = ClassTwoElement.generator(gens, mod, i) ** int(s)
        if new_action_endo.images[i] != expected:
            raise AssertionError("symmetrization did not produce a clean action")
    new_relator = basis_inv(pres.relator)
    return basis, new_relator


def transform_presentation(
    pres: DemushkinPresentation, action: InvolutionAction, basis: ClassTwoEndo
) -> tuple[DemushkinPresentation, InvolutionAction]:
    """Rewrite everything in the basis h_i = basis(g_i)."""
    basis_inv = invert_auto(basis)
    new_relator = basis_inv(pres.relator)
    # chi is multiplicative and kills F^2, so it transforms through the
    # linear part of the basis change
    t = basis.linear_matrix_q2
    q2 = pres.mod.q2
    new_vals = []
    for i in range(pres.d):
        val = 1
        for k in range(pres.d):
            val = (val * pow(int(pres.chi.values[k]), int(t[i, k]), q2)) % q2
        new_vals.append(val)
    new_pres = DemushkinPresentation(
        pres.n,
        pres.mod,
        relator=new_relator,
        chi=CharacterData(new_vals, pres.mod),
        gens=pres.gens,
    )
    new_endo = compose(basis_inv, compose(action.endo, basis))
    return new_pres, InvolutionAction.build(new_pres, new_endo)


@dataclass(frozen=True)
class CoinvariantsResult:
    """Outcome of forming the maximal quotient with trivial action."""

    rank: int
    kind: str  # "free" or "demushkin"
    m: int | None
    kept_labels: tuple
    eliminated_labels: tuple
    induced: CohomologyData | None
    induced_relator: ClassTwoElement | None
    extra_central_relators: tuple
    warnings: tuple


class _CoinvariantMachine:
    """Shared mechanics: the quotient map onto the coinvariant truncation.

    After diagonalizing the linear part, a generator with sign -1 satisfies
    g^2 = central in the quotient, so with 2 invertible it equals a central
    word in the surviving generators; commutators and q-th powers touching it
    die.  `project` applies this substitution and lands in the truncated
    free group on the kept generators, `span` holds the surviving central
    relations.
    """

    def __init__(self, pres: DemushkinPresentation, action: InvolutionAction):
        self.base_change: ClassTwoEndo | None = None
        signs = _diagonal_signs(action)
        if signs is None:
            plus, minus = action.f2_eigenspaces()
            rows = np.vstack([plus.basis, minus.basis])
            if rows.shape[0] != pres.d:
                raise AssertionError("eigenspace ranks do not fill the module")
            basis = ClassTwoEndo(
                ClassTwoElement(
                    pres.gens,
                    pres.mod,
                    rows[i],
                    np.zeros((pres.d, pres.d), dtype=np.int64),
                )
                for i in range(pres.d)
            )
            self.base_change = basis
            pres, action = transform_presentation(pres, action, basis)
            signs = _diagonal_signs(action)
            if signs is None:
                raise AssertionError("diagonalized action is not of product shape")
        self.pres = pres
        self.action = action
        self.signs = signs
        gens, mod = pres.gens, pres.mod
        self.kept = [i for i, s in enumerate(signs) if s == 1]
        self.elim = [i for i, s in enumerate(signs) if s == -1]
        self.kept_labels = tuple(gens.labels[i] for i in self.kept)
        self.elim_labels = tuple(gens.labels[i] for i in self.elim)
        if not self.kept:
            raise ValueError("no generator survives; the coinvariants are trivial")

        subst_images = []
        for i, s in enumerate(signs):
            g = ClassTwoElement.generator(gens, mod, i)
            if s == 1:
                subst_images.append(g)
            else:
                # sigma(g) = g^-1 z; the difference relator gives g^2 = g sigma(g)
                b = g * action.endo.images[i]
                subst_images.append(central_sqrt(self._strip(b)))
        self.subst = ClassTwoEndo(subst_images)
        self.small_gens = GeneratorSet(self.kept_labels)

        relators = []
        for i in self.kept:
            g = ClassTwoElement.generator(gens, mod, i)
            r = g.inverse() * action.endo.images[i]
            if not r.is_central:
                raise AssertionError("difference relator of a fixed generator is not central")
            img = self.project(r)
            if not img.is_identity:
                relators.append(img)
        for i in self.elim:
            g = ClassTwoElement.generator(gens, mod, i)
            r = g.inverse() * action.endo.images[i]
            if not self.project(r).is_identity:
                raise AssertionError("eliminated generator relation did not project away")
        self.central_relators = relators
        self.span = TruncatedQuotient(self.small_gens, mod, relators)
        self.relator_image = self.project(pres.relator)

    def _strip(self, el: ClassTwoElement) -> ClassTwoElement:
        """Zero every coordinate touching an eliminated generator.

        Valid only for central elements used in the substitution: those
        coordinates lie in the kernel of the quotient map.
        """
        ge = el.gen_exp.copy()
        cm = el.comm.copy()
        for i in self.elim:
            ge[i] = 0
            cm[i, :] = 0
            cm[:, i] = 0
        return ClassTwoElement(el.gens, el.mod, ge, cm)

    def to_frame(self, u: ClassTwoElement) -> ClassTwoElement:
        if self.base_change is None:
            return u
        return invert_auto(self.base_change)(u)

    def project(self, u: ClassTwoElement) -> ClassTwoElement:
        """Image in the truncated free group on the kept generators."""
        from demuskin.class2_words import quotient_kill

        return quotient_kill(self.elim_labels, self.subst(u))

    def vanishes(self, u_original: ClassTwoElement) -> bool:
        """Membership of an original-frame element in the quotient kernel."""
        img = self.project(self.to_frame(u_original))
        return self.span.is_trivial(img)


def coinvariants(pres: DemushkinPresentation, action: InvolutionAction) -> CoinvariantsResult:
    """Rank and free/Demushkin dichotomy of the coinvariant truncation."""
    machine = _CoinvariantMachine(pres, action)
    mod = pres.mod
    rank = len(machine.kept)
    wbar = machine.relator_image
    warns = []
    extra = tuple(machine.central_relators)
    if extra:
        warns.append(
            "the coinvariant truncation carries central relations beyond the "
            "relator image"
        )
    if machine.span.is_trivial(wbar):
        return CoinvariantsResult(
            rank=rank,
            kind="free",
            m=None,
            kept_labels=machine.kept_labels,
            eliminated_labels=machine.elim_labels,
            induced=None,
            induced_relator=None,
            extra_central_relators=extra,
            warnings=tuple(warns),
        )
    m = rank - 2
    induced = None
    if m >= 0 and m % 2 == 0:
        chi_vals = [int(machine.pres.chi.values[i]) for i in machine.kept]
        induced_pres = DemushkinPresentation(
            m,
            mod,
            relator=wbar,
            chi=CharacterData(chi_vals, mod),
            gens=machine.small_gens,
        )
        induced = invariants(induced_pres)
        if not induced.cup_nondegenerate:
            warns.append("induced pairing on the coinvariants is degenerate")
    else:
        warns.append(
            f"coinvariant rank {rank} is not of the form m + 2 with m even "
            ">= 0; reporting raw truncation data"
        )
    return CoinvariantsResult(
        rank=rank,
        kind="demushkin",
        m=m,
        kept_labels=machine.kept_labels,
        eliminated_labels=machine.elim_labels,
        induced=induced,
        induced_relator=wbar,
        extra_central_relators=extra,
        warnings=tuple(warns),
    )
