"""Command-line front end: deterministic JSON/text reports over the library.

Exit codes: 0 when every named check passes, 1 when a mathematical check
fails, 2 for unusable input (bad arguments, unreadable or unparsable files).
Reports carry no timestamps and use fixed key order, so identical
configurations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from demuskin import __version__
from demuskin.class2_words import (
    ClassTwoEndo,
    compose,
    format_word,
    invert_auto,
)
from demuskin.demushkin_core import (
    DemushkinPresentation,
    InvolutionAction,
    bockstein_kernel,
    coinvariants,
    gamma_line,
    invariants,
    lift_involution,
    standard_involution,
    standard_relator,
    symmetrize_basis,
)
from demuskin.quotient_builder import (
    Signature,
    build_V,
    free_quotient,
    signature_of,
    uniqueness_check,
)
from demuskin.zq_linalg import (
    Modulus,
    Submodule,
    isotropic_free_submodules,
    max_isotropic_oracle,
    orthogonal_complement,
)

ENGINE = {
    "name": "demuskin",
    "version": __version__,
    "convention": "[a,b] = a^-1 b^-1 a b; coordinate (i,j), i<j, holds [g_j,g_i]",
}

SWEEP_N_DEFAULT = "2,4,6"
SWEEP_Q_DEFAULT = "3,9,5"
SWEEP_MAX_N = 12
SWEEP_MAX_Q = 25


class InputError(Exception):
    """Unusable input: maps to exit code 2."""


def _check(name: str, ok: bool, detail: str = "") -> dict:
    return {"name": name, "pass": bool(ok), "detail": detail}


def _report(config: dict, results: dict, checks: list[dict]) -> dict:
    return {
        "schema": "v1",
        "engine": ENGINE,
        "config": config,
        "results": results,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
    }


def _modulus(p: int, f: int) -> Modulus:
    try:
        return Modulus(p, f)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _standard_presentation(p: int, f: int, n: int) -> DemushkinPresentation:
    mod = _modulus(p, f)
    try:
        return DemushkinPresentation.standard(n, mod)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _load_presentation(path: str) -> DemushkinPresentation:
    data = _load_json(path)
    try:
        return DemushkinPresentation.from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"bad presentation file {path}: {exc}") from None


def _load_action_endo(path: str, pres: DemushkinPresentation) -> ClassTwoEndo:
    data = _load_json(path)
    try:
        return ClassTwoEndo.from_json(data, pres.gens, pres.mod)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"bad action file {path}: {exc}") from None


def _matrix_json(arr: np.ndarray, modulus: int) -> dict:
    return {
        "modulus": int(modulus),
        "rows": int(arr.shape[0]),
        "cols": int(arr.shape[1]) if arr.ndim == 2 else int(arr.shape[0]),
        "entries": [int(x) for x in np.asarray(arr).reshape(-1)],
    }


def cmd_present(args) -> dict:
    pres = _standard_presentation(args.p, args.f, args.n)
    config = {"command": "present", "p": args.p, "f": args.f, "n": args.n}
    results = {
        "presentation": pres.to_json(),
        "relator_coordinates": pres.relator.to_json(),
    }
    checks = [
        _check("relator_central", pres.relator.is_central),
        _check(
            "relator_shape",
            pres.relator == standard_relator(pres.n, pres.mod),
            "collected standard relator",
        ),
    ]
    return _report(config, results, checks)


def cmd_invariants(args) -> dict:
    if args.presentation:
        pres = _load_presentation(args.presentation)
    else:
        pres = _standard_presentation(args.p, args.f, args.n)
    config = {
        "command": "invariants",
        "p": pres.mod.p,
        "f": pres.mod.f,
        "n": pres.n,
        "presentation_file": args.presentation,
    }
    coh = invariants(pres)
    results = {
        "gram": coh.cup.gram.to_json(),
        "bockstein": [int(x) for x in coh.bockstein],
        "gamma_line": gamma_line(pres).to_json(),
        "is_demushkin": coh.is_demushkin,
    }
    checks = [
        _check("cup_nondegenerate", coh.cup_nondegenerate),
        _check("bockstein_surjective", coh.bockstein_surjective),
    ]
    return _report(config, results, checks)


def _action_checks(pres: DemushkinPresentation, endo: ClassTwoEndo):
    """Build the involution, returning (action or None, named checks)."""
    checks = []
    try:
        action = InvolutionAction.build(pres, endo)
    except ValueError as exc:
        msg = str(exc)
        if "square" in msg:
            checks.append(_check("action_squares_to_identity", False, msg))
        else:
            checks.append(_check("action_squares_to_identity", True))
            checks.append(_check("relator_carried_to_power", False, msg))
        return None, checks
    checks.append(_check("action_squares_to_identity", True))
    checks.append(_check("relator_carried_to_power", True, f"h2_scalar = {action.h2_scalar}"))
    checks.append(
        _check(
            "cup_coherence",
            action.coherence_ok,
            "(h1_matrix)^T . gram . h1_matrix = h2_scalar . gram",
        )
    )
    return action, checks


def cmd_involution(args) -> dict:
    pres = _standard_presentation(args.p, args.f, args.n)
    config = {
        "command": "involution",
        "p": args.p,
        "f": args.f,
        "n": args.n,
        "action_file": args.action,
    }
    if args.action:
        endo = _load_action_endo(args.action, pres)
    else:
        endo = standard_involution(pres).endo
    action, checks = _action_checks(pres, endo)
    results = {}
    if action is not None:
        plus, minus = action.h1_eigenspaces()
        results = {
            "h1_matrix": action.h1_matrix.to_json(),
            "h2_scalar": action.h2_scalar,
            "eigen_ranks": [plus.rank, minus.rank],
        }
        if action.h2_scalar == -1:
            expected = pres.n // 2 + 1
            checks.append(
                _check(
                    "eigen_ranks_balanced",
                    plus.rank == expected and minus.rank == expected,
                    f"expected ({expected}, {expected}), got ({plus.rank}, {minus.rank})",
                )
            )
    return _report(config, results, checks)


def cmd_symmetrize(args) -> dict:
    pres = _standard_presentation(args.p, args.f, args.n)
    if not args.action:
        raise InputError("symmetrize needs --action FILE")
    endo = _load_action_endo(args.action, pres)
    config = {
        "command": "symmetrize",
        "p": args.p,
        "f": args.f,
        "n": args.n,
        "action_file": args.action,
    }
    checks = []
    results = {}
    try:
        action = lift_involution(pres, endo.linear_matrix, endo)
        checks.append(_check("lift_to_exact_involution", True))
    except (ValueError, AssertionError) as exc:
        checks.append(_check("lift_to_exact_involution", False, str(exc)))
        return _report(config, results, checks)
    try:
        basis, relator = symmetrize_basis(pres, action)
    except (ValueError, AssertionError) as exc:
        checks.append(_check("clean_diagonal_action", False, str(exc)))
        return _report(config, results, checks)
    clean_endo = compose(invert_auto(basis), compose(action.endo, basis))
    results = {
        "basis_change": basis.to_json()["images"],
        "relator": format_word(relator),
        "clean_action": {
            lab: format_word(im)
            for lab, im in zip(pres.gens.labels, clean_endo.images)
        },
    }
    checks.append(_check("clean_diagonal_action", True))
    checks.append(
        _check(
            "relator_shape_preserved",
            relator == standard_relator(pres.n, pres.mod),
        )
    )
    return _report(config, results, checks)


def cmd_quotient(args) -> dict:
    pres = _standard_presentation(args.p, args.f, args.n)
    if args.signature is None:
        raise InputError("quotient needs --signature U+ U-")
    sig = Signature(*args.signature)
    config = {
        "command": "quotient",
        "p": args.p,
        "f": args.f,
        "n": args.n,
        "signature": list(sig),
    }
    checks = []
    try:
        action = standard_involution(pres)
        iso = build_V(pres, action, sig)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    cert = free_quotient(pres, action, iso)
    results = {"certificate": cert.to_json()}
    for name, ok in cert.flags.items():
        checks.append(_check(name, ok))
    measured = signature_of(cert, action) if cert.all_green else None
    checks.append(
        _check(
            "signature_matches",
            measured == sig,
            f"requested {tuple(sig)}, measured {tuple(measured) if measured else None}",
        )
    )
    checks.append(
        _check(
            "quotient_rank",
            len(cert.kept) == pres.n // 2 + 1,
            f"rank {len(cert.kept)}",
        )
    )
    return _report(config, results, checks)


def _parse_int_list(text: str, what: str) -> list[int]:
    if not text.strip():
        return []
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise InputError(f"bad {what} list: {text!r}") from None


def _modulus_for_q(q: int) -> Modulus:
    for p in range(3, q + 1, 2):
        if q % p == 0:
            f = 0
            m = q
            while m % p == 0:
                m //= p
                f += 1
            if m == 1:
                return _modulus(p, f)
            break
    raise InputError(f"q={q} is not an odd prime power")


def cmd_sweep(args) -> dict:
    n_list = _parse_int_list(args.sweep_n, "n")
    q_list = _parse_int_list(args.sweep_q, "q")
    for n in n_list:
        if n < 0 or n % 2 or n > SWEEP_MAX_N:
            raise InputError(f"sweep needs even n with 0 <= n <= {SWEEP_MAX_N}, got {n}")
    for q in q_list:
        if q > SWEEP_MAX_Q:
            raise InputError(f"sweep modulus guard exceeded: q={q} > {SWEEP_MAX_Q}")
    config = {"command": "sweep", "n": n_list, "q": q_list}
    rows = []
    checks = []
    for n in n_list:
        for q in q_list:
            mod = _modulus_for_q(q)
            pres = DemushkinPresentation.standard(n, mod)
            action = standard_involution(pres)
            for u_plus in range(n // 2 + 1):
                sig = Signature(u_plus, n // 2 - u_plus)
                iso = build_V(pres, action, sig)
                cert = free_quotient(pres, action, iso)
                green = cert.all_green
                measured = signature_of(cert, action) if green else None
                label = f"n{n}_q{q}_sig{u_plus}+{n // 2 - u_plus}"
                rows.append(
                    {
                        "n": n,
                        "q": q,
                        "signature": list(sig),
                        "rank": len(cert.kept),
                        "killed": list(cert.killed),
                        "green": green,
                    }
                )
                checks.append(
                    _check(
                        f"certificate_green_{label}",
                        green and measured == sig and len(cert.kept) == n // 2 + 1,
                    )
                )
                if sig == Signature(n // 2, 0) and green:
                    checks.append(
                        _check(
                            f"coinvariants_agree_{label}",
                            uniqueness_check(pres, action, cert),
                        )
                    )
    results = {"certificates": rows, "count": len(rows)}
    return _report(config, results, checks)


def cmd_oracle(args) -> dict:
    pres = _standard_presentation(args.p, args.f, args.n)
    config = {"command": "oracle", "p": args.p, "f": args.f, "n": args.n}
    coh = invariants(pres)
    kerb = bockstein_kernel(pres)
    d = pres.d
    try:
        full_max = max_isotropic_oracle(coh.cup, Submodule.full(d, pres.mod.q))
        kerb_max = max_isotropic_oracle(coh.cup, kerb)
        maximal = isotropic_free_submodules(coh.cup, kerb, rank=kerb_max)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    line = gamma_line(pres)
    contain = all(sub.contains_submodule(line) for sub in maximal)
    expected = pres.n // 2 + 1
    results = {
        "max_isotropic_rank": full_max,
        "max_isotropic_rank_in_bockstein_kernel": kerb_max,
        "maximal_count_in_bockstein_kernel": len(maximal),
    }
    checks = [
        _check("max_rank_bound", full_max == expected, f"expected {expected}"),
        _check("kernel_max_rank", kerb_max == expected, f"expected {expected}"),
        _check("maximal_contain_cyclotomic_line", contain),
    ]
    return _report(config, results, checks)


def cmd_preset_local_field(args) -> dict:
    p = args.p
    if p == 2:
        raise InputError("the local-field preset needs an odd prime")
    mod = _modulus(p, 1)
    n = p - 1
    config = {"command": "preset", "p": p, "f": 1, "n": n}
    pres = DemushkinPresentation.standard(n, mod)
    action = standard_involution(pres)
    sig = Signature(0, (p - 1) // 2)
    iso = build_V(pres, action, sig)
    cert = free_quotient(pres, action, iso)
    measured = signature_of(cert, action) if cert.all_green else None
    rank = len(cert.kept)
    eigen = [measured.u_plus + 1, measured.u_minus] if measured else None
    results = {
        "rank": rank,
        "eigen_ranks": eigen,
        "signature": list(sig),
        "certificate": cert.to_json(),
        "note": (
            "group-theoretic shadow of the totally real subfield situation: "
            "rank p+1 presentation, invariant q = p, involution acting by "
            "-1 on H^2; arithmetic hypotheses on the field (such as "
            "regularity of p) are outside this computation and not checked"
        ),
    }
    checks = [
        _check("certificate_green", cert.all_green),
        _check("rank_half_plus_one", rank == (p + 1) // 2, f"expected {(p + 1) // 2}"),
        _check(
            "eigen_ranks_match",
            eigen == [1, (p - 1) // 2],
            f"expected [1, {(p - 1) // 2}]",
        ),
    ]
    return _report(config, results, checks)


def cmd_verify(args) -> dict:
    if not args.presentation or not args.action:
        raise InputError("verify needs --presentation FILE and --action FILE")
    pres = _load_presentation(args.presentation)
    endo = _load_action_endo(args.action, pres)
    config = {
        "command": "verify",
        "presentation_file": args.presentation,
        "action_file": args.action,
    }
    coh = invariants(pres)
    checks = [
        _check("cup_nondegenerate", coh.cup_nondegenerate),
        _check("bockstein_surjective", coh.bockstein_surjective),
    ]
    try:
        line_ok = gamma_line(pres) == orthogonal_complement(
            coh.cup, bockstein_kernel(pres)
        )
    except ValueError:
        line_ok = False
    checks.append(_check("cyclotomic_line_matches_orthocomplement", line_ok))
    action, action_checks = _action_checks(pres, endo)
    checks.extend(action_checks)
    results = {"invariants": {"bockstein": [int(x) for x in coh.bockstein]}}
    if action is not None:
        plus, minus = action.h1_eigenspaces()
        results["h2_scalar"] = action.h2_scalar
        results["eigen_ranks"] = [plus.rank, minus.rank]
        if action.h2_scalar == -1:
            expected = pres.n // 2 + 1
            checks.append(
                _check(
                    "eigen_ranks_balanced",
                    plus.rank == expected and minus.rank == expected,
                )
            )
        try:
            res = coinvariants(pres, action)
            expected_kind = "free" if action.h2_scalar == -1 else "demushkin"
            checks.append(
                _check(
                    "coinvariants_dichotomy",
                    res.kind == expected_kind,
                    f"kind={res.kind}, rank={res.rank}",
                )
            )
            results["coinvariants"] = {"kind": res.kind, "rank": res.rank}
        except (ValueError, AssertionError) as exc:
            checks.append(_check("coinvariants_dichotomy", False, str(exc)))
    return _report(config, results, checks)


def render_text(report: dict) -> str:
    lines = [
        f"demuskin {report['engine']['version']} :: {report['config']['command']}",
    ]
    for key, val in report["config"].items():
        if key != "command" and val is not None:
            lines.append(f"  {key} = {val}")
    lines.append("checks:")
    for c in report["checks"]:
        mark = "PASS" if c["pass"] else "FAIL"
        detail = f"  ({c['detail']})" if c.get("detail") else ""
        lines.append(f"  [{mark}] {c['name']}{detail}")
    lines.append("all checks pass" if report["all_pass"] else "CHECK FAILURES")
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "text":
        return render_text(report)
    return json.dumps(report, indent=2) + "\n"


_COMMANDS = {
    "present": cmd_present,
    "invariants": cmd_invariants,
    "involution": cmd_involution,
    "symmetrize": cmd_symmetrize,
    "quotient": cmd_quotient,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "preset": cmd_preset_local_field,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demuskin",
        description=(
            "exact class-2 computations with Demushkin groups under an "
            "involution: invariants, symmetrization, and certified "
            "equivariant free quotients"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--p", type=int, default=3, help="odd prime p")
        cmd.add_argument("--f", type=int, default=1, help="exponent f with q = p^f")
        cmd.add_argument("--n", type=int, default=2, help="even rank parameter")
        cmd.add_argument("--signature", type=int, nargs=2, metavar=("U+", "U-"))
        cmd.add_argument("--presentation", help="presentation JSON file")
        cmd.add_argument("--action", help="action JSON file")
        cmd.add_argument("--format", choices=("json", "text"), default="json")
        cmd.add_argument("--output", help="write the report here instead of stdout")
        if name == "sweep":
            cmd.add_argument("--sweep-n", default=SWEEP_N_DEFAULT)
            cmd.add_argument("--sweep-q", default=SWEEP_Q_DEFAULT)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(report, args.format)
    if args.output:
        try:
            with open(args.output, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return 0 if report["all_pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
