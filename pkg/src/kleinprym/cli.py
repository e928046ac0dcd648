"""Command-line front end.

Exit codes separate mathematical negatives from bad input so batch harnesses
can tell "not in the Prym image" apart from bugs:

* 0  success,
* 1  verified negative (reconstruction rejected, singular family member,
     a failed verification report),
* 2  malformed input (JSON parse errors, schema violations, configurations
     that do not fit the requested construction).

All output is deterministic: identical invocations produce byte-identical
JSON (sorted keys) and DOT (fixed node order).
"""

from __future__ import annotations

import importlib.resources
import json
import random
import sys
from dataclasses import dataclass
from typing import Optional

import click
import jsonschema

from . import family as family_mod
from . import idempotents as idem_mod
from . import prym as prym_mod
from . import reconstruct as rec_mod
from . import torsion as torsion_mod
from . import towers as towers_mod
from .errors import KleinPrymError, NotInPrymImage, SingularCurve
from .projline import MarkedConfig, equivalent
from .torsion import WUniverse, class_from_subset, parse_label, span

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_BAD_INPUT = 2

_INPUT_ERRORS = (
    "DegenerateConfiguration", "InvalidConfig", "OddParity", "UniverseMismatch",
    "InvalidRamification", "InvalidCover", "NoKleinSubgroup", "UnsupportedNode",
    "InvalidDatum", "NotLiftableRepresentation",
)


@dataclass(frozen=True)
class RunSpec:
    """One CLI invocation; the seed fully determines all pseudorandomness."""

    command: str
    input: Optional[str] = None
    seed: Optional[int] = None
    output: Optional[str] = None
    format: str = "json"


def _schema(name: str) -> dict:
    text = importlib.resources.files("kleinprym.schemas").joinpath(
        f"{name}.schema.json").read_text()
    return json.loads(text)


def _read_json(path_or_inline: str, schema: Optional[str] = None) -> dict:
    if path_or_inline.lstrip().startswith("{"):
        text, origin = path_or_inline, "<inline>"
    else:
        try:
            with open(path_or_inline, "r") as fh:
                text = fh.read()
        except OSError as exc:
            raise click.exceptions.Exit(_fail(f"cannot read input: {exc}"))
        origin = path_or_inline
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise click.exceptions.Exit(_fail(
            f"{origin}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ))
    if schema is not None:
        try:
            jsonschema.validate(data, _schema(schema))
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise click.exceptions.Exit(_fail(f"{origin}: schema violation at {path}: {exc.message}"))
    return data


def _fail(message: str) -> int:
    click.echo(json.dumps({"error": message}, sort_keys=True), err=True)
    return EXIT_BAD_INPUT


def _emit(data, output: Optional[str], fmt: str = "json") -> None:
    if fmt == "json":
        text = json.dumps(data, sort_keys=True, indent=2) + "\n"
    else:
        text = data if isinstance(data, str) else str(data)
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _run(fn):
    """Map domain errors onto the exit-code taxonomy."""
    try:
        return fn()
    except NotInPrymImage as exc:
        _emit({"error": "not_in_prym_image", "violation": exc.violation,
               "detail": exc.detail}, None)
        sys.exit(EXIT_NEGATIVE)
    except SingularCurve as exc:
        _emit({"error": "singular_curve", "detail": str(exc)}, None)
        sys.exit(EXIT_NEGATIVE)
    except KleinPrymError as exc:
        _emit({"error": type(exc).__name__, "detail": str(exc)}, None)
        sys.exit(EXIT_BAD_INPUT)
    except ValueError as exc:
        _emit({"error": "ValueError", "detail": str(exc)}, None)
        sys.exit(EXIT_BAD_INPUT)


@click.group()
def main():
    """Exact constructions and inversions for hyperelliptic Klein coverings."""


# --- tower ---------------------------------------------------------------------


@main.group()
def tower():
    """Build and validate covering towers."""


@tower.command("build")
@click.option("--case", "case", required=True, type=click.Choice(towers_mod.CASES))
@click.option("--input", "-i", "input_", required=True, help="config JSON (path or inline)")
@click.option("--output", "-o", default=None)
@click.option("--format", "fmt", default="json", type=click.Choice(["json", "dot"]))
def tower_build(case, input_, output, fmt):
    data = _read_json(input_, schema="marked_config")

    def go():
        config = MarkedConfig.from_json(data)
        t = towers_mod.build_tower(config, case)
        if fmt == "dot":
            _emit(towers_mod.tower_to_dot(t), output, fmt="text")
        else:
            _emit(towers_mod.tower_to_json(t), output)

    _run(go)


@tower.command("validate")
@click.option("--input", "-i", "input_", required=True, help="tower JSON (path or inline)")
def tower_validate(input_):
    data = _read_json(input_, schema="tower")

    def go():
        t = towers_mod.tower_from_json(data)
        report = towers_mod.validate_tower(t)
        _emit(report, None)
        if not report["ok"]:
            sys.exit(EXIT_NEGATIVE)

    _run(go)


# --- torsion ---------------------------------------------------------------------


def _torsion_universe(data) -> WUniverse:
    return WUniverse(tuple(parse_label(s) for s in data["universe"]))


@main.group()
def torsion():
    """Even-subset 2-torsion calculus."""


@torsion.command("span")
@click.option("--input", "-i", "input_", required=True)
def torsion_span(input_):
    data = _read_json(input_, schema="torsion_input")

    def go():
        u = _torsion_universe(data)
        gens = [class_from_subset(u, [parse_label(s) for s in labs])
                for labs in data.get("generators", [])]
        _emit(span(u, gens).to_json(), None)

    _run(go)


@torsion.command("pair")
@click.option("--input", "-i", "input_", required=True)
def torsion_pair(input_):
    data = _read_json(input_, schema="torsion_input")

    def go():
        u = _torsion_universe(data)
        a = class_from_subset(u, [parse_label(s) for s in data["a"]])
        b = class_from_subset(u, [parse_label(s) for s in data["b"]])
        _emit({"pairing": torsion_mod.weil_pairing(a, b)}, None)

    _run(go)


@torsion.command("intersect")
@click.option("--input", "-i", "input_", required=True)
def torsion_intersect(input_):
    data = _read_json(input_, schema="torsion_input")

    def go():
        u = _torsion_universe(data)
        g = span(u, [class_from_subset(u, [parse_label(s) for s in labs])
                     for labs in data["g"]])
        h = span(u, [class_from_subset(u, [parse_label(s) for s in labs])
                     for labs in data["h"]])
        _emit(torsion_mod.intersect(g, h).to_json(), None)

    _run(go)


# --- prym ------------------------------------------------------------------------


@main.group()
def prym():
    """Prym data: datum emission, order tables, polarisation types."""


@prym.command("datum")
@click.option("--case", "case", required=True,
              type=click.Choice(["etale_klein", "mixed8", "branched12", "mixed4"]))
@click.option("--input", "-i", "input_", required=True)
@click.option("--seed", type=int, default=None)
@click.option("--output", "-o", default=None)
def prym_datum_cmd(case, input_, seed, output):
    data = _read_json(input_, schema="marked_config")

    def go():
        config = MarkedConfig.from_json(data)
        t = towers_mod.build_tower(config, case)
        _emit(prym_mod.prym_datum(t, scramble=seed).to_json(), output)

    _run(go)


def _orders_table(report: dict) -> str:
    lines = [f"case {report['case']}  g={report['g']}"]
    lines.append(f"{'subgroup':<22}{'computed':>12}{'expected':>12}  ok")
    for name, row in report["orders"].items():
        lines.append(f"{name:<22}{row['computed']:>12}{row['expected']:>12}  "
                     f"{'yes' if row['ok'] else 'NO'}")
    return "\n".join(lines) + "\n"


@prym.command("orders")
@click.option("--case", "case", required=True,
              type=click.Choice(["etale_klein", "mixed8", "branched12", "mixed4"]))
@click.option("--g", "genus", required=True, type=int)
@click.option("--format", "fmt", default="json", type=click.Choice(["json", "table"]))
@click.option("--seed", type=int, default=0)
def prym_orders(case, genus, fmt, seed):
    def go():
        rng = random.Random(f"orders:{seed}")
        config = rec_mod.random_config(case, genus, rng)
        t = towers_mod.build_tower(config, case)
        report = prym_mod.decomposition_check(t)
        if fmt == "table":
            _emit(_orders_table(report), None, fmt="text")
        else:
            _emit(report, None)
        if not report["ok"]:
            sys.exit(EXIT_NEGATIVE)

    _run(go)


@prym.command("delta")
@click.option("--case", "case", required=True,
              type=click.Choice(["etale_klein", "mixed8", "branched12", "mixed4"]))
@click.option("--g", "genus", required=True, type=int)
def prym_delta(case, genus):
    def go():
        delta = prym_mod.polarisation_type(case, genus)
        _emit({"case": case, "g": genus, "delta": list(delta),
               "dimension": len(delta)}, None)

    _run(go)


# --- invert / roundtrip ------------------------------------------------------------


@main.command("invert")
@click.argument("case", type=click.Choice(["etale_klein", "mixed8", "branched12", "mixed4"]))
@click.option("--input", "-i", "input_", required=True)
@click.option("--output", "-o", default=None)
def invert_cmd(case, input_, output):
    data = _read_json(input_, schema="prym_datum")

    def go():
        datum = prym_mod.PrymDatum.from_json(data)
        if datum.case != case:
            raise KleinPrymError(f"datum case {datum.case!r} does not match {case!r}")
        result = rec_mod.invert(datum)
        _emit(result.to_json(), output)

    _run(go)


@main.command("roundtrip")
@click.argument("case", type=click.Choice(["etale_klein", "mixed8", "branched12", "mixed4"]))
@click.option("--g", "genus", required=True, type=int)
@click.option("--count", type=int, default=10)
@click.option("--seed", type=int, default=1)
def roundtrip_cmd(case, genus, count, seed):
    def go():
        rng = random.Random(f"roundtrip:{case}:{genus}:{seed}")
        passed = 0
        failures = []
        for k in range(count):
            config = rec_mod.random_config(case, genus, rng)
            ok, _, _ = rec_mod.roundtrip(config, case, seed=seed * 100003 + k)
            if ok:
                passed += 1
            else:
                failures.append(k)
        _emit({"case": case, "g": genus, "count": count, "passed": passed,
               "report": f"{passed}/{count} equivalent", "failures": failures}, None)
        if passed != count:
            sys.exit(EXIT_NEGATIVE)

    _run(go)


# --- witnesses / fibers --------------------------------------------------------------


@main.group()
def witness():
    """Non-injectivity witnesses for double-cover Prym maps."""


@witness.command("b2")
@click.option("--g", "genus", required=True, type=int)
@click.option("--seed", type=int, default=1)
def witness_b2(genus, seed):
    def go():
        w = rec_mod.noninjectivity_witness_b2(genus, seed)
        ok = w["prym_branch_equal"] and not w["configs_equivalent"]
        _emit({"g": w["g"], "seed": w["seed"], "configs": w["configs"],
               "prym_branch": w["prym_branch"],
               "prym_branch_equal": w["prym_branch_equal"],
               "configs_equivalent": w["configs_equivalent"],
               "valid_witness": ok}, None)
        if not ok:
            sys.exit(EXIT_NEGATIVE)

    _run(go)


@main.group()
def fiber():
    """Fiber enumeration for double-cover Prym maps."""


@fiber.command("b4")
@click.option("--g", "genus", required=True, type=int)
def fiber_b4(genus):
    def go():
        classes, count = rec_mod.fiber_enumerate_b4(genus)
        _emit({"g": genus, "count": count,
               "classes": [c.to_json() for c in classes]}, None)

    _run(go)


# --- idempotents / family -------------------------------------------------------------


@main.group()
def idempotents():
    """Deck-ring idempotent ledger."""


@idempotents.command("verify")
@click.option("--case", "case", default="etale_klein",
              type=click.Choice(["etale_klein", "branched_klein"]))
def idempotents_verify(case):
    def go():
        report = idem_mod.verify_decomposition(case=case)
        report["involution_pair"] = idem_mod.verify_involution_pair()
        _emit(report, None)
        if not (report["all_hold"] and report["involution_pair"]["all_hold"]):
            sys.exit(EXIT_NEGATIVE)

    _run(go)


@main.group()
def family():
    """The explicit curve family and the Klein quotient of the line."""


@family.command("verify")
@click.option("--a", "params", required=True,
              help="comma-separated parameters, e.g. 3,5")
@click.option("--output", "-o", default=None)
def family_verify(params, output):
    def go():
        values = [s.strip() for s in params.split(",") if s.strip()]
        if not values:
            raise ValueError("no parameters given")
        F = family_mod.build_family_poly(values)
        report = {
            "parameters": values,
            "polynomial": F.to_json(),
            "degree": F.degree,
            "genus": family_mod.family_genus(len(values)),
            "involutions_verified": family_mod.verify_involutions(F),
            "quotient_poly": family_mod.quotient_substitution(F).to_json(),
            "p1_quotient": family_mod.verify_p1_quotient(),
        }
        report["ok"] = report["involutions_verified"] and report["p1_quotient"]["ok"]
        _emit(report, output)
        if not report["ok"]:
            sys.exit(EXIT_NEGATIVE)

    _run(go)


if __name__ == "__main__":
    main()
