"""Command-line interface: configuration, computation, structured reports.

Verbs:
  compute   build pages / Betti tables for one family instance
  check     run the structural self-check matrix
  explain   print a family's differential template and conventions

Reports are deterministic: identical configs produce byte-identical output
up to the duration field.  All numbers are exact integers; degrees and
dimensions never pass through floats.

Exit codes: 0 success, 2 configuration error, 3 range error,
4 internal invariant violation or failed checks.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field

from . import engine, families
from .families import (
    DifferentialsUnavailable,
    FamilyDescriptor,
    RangeError,
)
from .qexact import CompositionNonzero, rank
from .rings import InvalidShape
from .superalg import AlgebraConstructionError, AlgebraMismatch, NotInvariant

SCHEMA = "ssfilter-report/1"
ARTIFACTS = ("e1", "e2", "betti", "checks")
FORMATS = ("text", "json", "csv")
THREADS_ENV = "SSFILTER_THREADS"


class ConfigError(ValueError):
    """Bad configuration: unknown keys, wrong parameter set, bad values."""


# -- configuration ------------------------------------------------------------

_FAMILY_PARAMS = {
    "uconf-plane": set(),
    "uconf-general": {"betti", "convention"},
    "tuples": {"r"},
    "pencils-p1": {"m"},
    "pencils-curve": {"g"},
}

_KEY_ALIASES = {"genus": "g"}


@dataclass
class JobConfig:
    command: str
    family: str | None = None
    n: int | None = None
    g: int | None = None
    r: int | None = None
    m: int | None = None
    betti: dict | None = None
    convention: str = "compact-support"
    artifacts: tuple = ("betti",)
    format: str = "text"
    out: str | None = None
    pmax: int = 10
    families: tuple = ("all",)
    threads: int = 1

    def echo(self) -> dict:
        out = {"command": self.command}
        if self.command == "compute":
            out["family"] = self.family
            params = {"n": self.n}
            for key in ("g", "r", "m"):
                v = getattr(self, key)
                if v is not None:
                    params[key] = v
            if self.betti is not None:
                params["betti"] = {str(k): v for k, v in sorted(self.betti.items())}
                params["convention"] = self.convention
            out["params"] = params
            out["artifacts"] = list(self.artifacts)
        else:
            out["pmax"] = self.pmax
            out["families"] = list(self.families)
        out["format"] = self.format
        return out


def parse_betti_spec(text: str) -> dict:
    """Parse '0:1,2:3'-style Betti tables."""
    dims = {}
    for chunk in text.replace(";", ",").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError(f"bad Betti entry {chunk!r}; expected degree:rank")
        d, b = chunk.split(":", 1)
        try:
            d, b = int(d.strip()), int(b.strip())
        except ValueError:
            raise ConfigError(f"bad Betti entry {chunk!r}; expected integers")
        if d < 0 or b < 0:
            raise ConfigError(f"bad Betti entry {chunk!r}; must be nonnegative")
        if b:
            dims[d] = dims.get(d, 0) + b
    return dims


def parse_config_file(path: str) -> dict:
    """Flat key = value lines, plus one optional [betti] block of
    'degree: rank' lines."""
    values: dict = {}
    betti: dict = {}
    in_betti = False
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    with handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.lower() == "[betti]":
                in_betti = True
                continue
            if in_betti:
                sep = ":" if ":" in line else None
                parts = line.split(sep, 1) if sep else line.split()
                if len(parts) != 2:
                    raise ConfigError(f"line {lineno}: bad Betti row {line!r}")
                try:
                    d, b = int(parts[0]), int(parts[1])
                except ValueError:
                    raise ConfigError(f"line {lineno}: bad Betti row {line!r}")
                if b:
                    betti[d] = betti.get(d, 0) + b
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = _KEY_ALIASES.get(key, key)
            values[key] = val
    if betti:
        values["betti"] = betti
    return values


_INT_KEYS = {"n", "g", "r", "m", "pmax", "threads"}
_KNOWN_KEYS = _INT_KEYS | {
    "family", "betti", "convention", "artifacts", "format", "out", "families",
}


def _merge_config(command: str, file_values: dict, flag_values: dict) -> JobConfig:
    merged = dict(file_values)
    for k, v in flag_values.items():
        if v is not None:
            merged[k] = v
    for k in merged:
        if k not in _KNOWN_KEYS:
            raise ConfigError(f"unknown configuration key {k!r}")
    cfg = JobConfig(command=command)
    for k, v in merged.items():
        if k in _INT_KEYS and not isinstance(v, int):
            try:
                v = int(v)
            except ValueError:
                raise ConfigError(f"{k} must be an integer, got {v!r}")
        if k == "betti" and isinstance(v, str):
            v = parse_betti_spec(v)
        if k in ("artifacts", "families") and isinstance(v, str):
            v = tuple(s.strip() for s in v.split(",") if s.strip())
        setattr(cfg, k, v)
    return cfg


def validate_compute_config(cfg: JobConfig) -> JobConfig:
    if cfg.family is None:
        raise ConfigError("compute requires a family")
    if cfg.family not in families.FAMILY_NAMES:
        raise ConfigError(
            f"unknown family {cfg.family!r}; choose from "
            + ", ".join(families.FAMILY_NAMES)
        )
    if cfg.n is None:
        raise ConfigError("compute requires n")
    allowed = _FAMILY_PARAMS[cfg.family]
    for key in ("g", "r", "m", "betti"):
        if getattr(cfg, key) is not None and key not in allowed:
            raise ConfigError(f"family {cfg.family} does not take {key}")
    if cfg.family == "tuples" and cfg.r is None:
        raise ConfigError("family tuples requires r")
    if cfg.family == "pencils-curve" and cfg.g is None:
        raise ConfigError("family pencils-curve requires g (--genus)")
    if cfg.family == "pencils-p1" and cfg.m is None:
        cfg.m = 1
    if cfg.family == "uconf-general" and cfg.betti is None:
        raise ConfigError("family uconf-general requires a Betti table")
    if cfg.convention not in ("compact-support", "ordinary"):
        raise ConfigError(f"unknown convention {cfg.convention!r}")
    bad = [a for a in cfg.artifacts if a not in ARTIFACTS]
    if bad:
        raise ConfigError(f"unknown artifacts {bad}; choose from {ARTIFACTS}")
    if not cfg.artifacts:
        raise ConfigError("no artifacts requested")
    if cfg.format not in FORMATS:
        raise ConfigError(f"unknown format {cfg.format!r}")
    if cfg.threads < 1:
        raise ConfigError("threads must be a positive integer")
    return cfg


def make_family(cfg: JobConfig) -> FamilyDescriptor:
    if cfg.family == "uconf-plane":
        return families.family_uconf_plane(cfg.n)
    if cfg.family == "uconf-general":
        return families.family_uconf_general(cfg.betti, cfg.n, cfg.convention)
    if cfg.family == "tuples":
        return families.family_tuples(cfg.r, cfg.n)
    if cfg.family == "pencils-p1":
        return families.family_pencils_p1(cfg.m, cfg.n)
    if cfg.family == "pencils-curve":
        return families.family_pencils_curve(cfg.g, cfg.n)
    raise ConfigError(f"unknown family {cfg.family!r}")


# -- reports ------------------------------------------------------------------


@dataclass
class JobReport:
    config: dict
    pages: list = field(default_factory=list)
    betti: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    duration_ms: int = 0

    def all_checks_passed(self) -> bool:
        return all(c.get("passed") for c in self.checks)

    def to_obj(self) -> dict:
        return {
            "schema": SCHEMA,
            "config": self.config,
            "pages": self.pages,
            "betti": self.betti,
            "checks": self.checks,
            "duration_ms": self.duration_ms,
        }


def _page_obj(page, include_labels=True) -> dict:
    cells = []
    for (p, q) in sorted(page.cells):
        d = page.cells[(p, q)]
        if not d:
            continue
        cell = {"p": p, "q": q, "dim": d}
        labels = page.labels.get((p, q))
        if include_labels and labels:
            cell["labels"] = labels
        cells.append(cell)
    diffs = []
    for (p, q) in sorted(page.differentials):
        mat = page.differentials[(p, q)]
        diffs.append(
            {"p": p, "q": q, "rows": mat.rows, "cols": mat.cols,
             "rank": rank(mat)}
        )
    return {"page": page.page_index, "cells": cells, "differentials": diffs}


def _betti_obj(table) -> dict:
    return {
        "kind": table.kind,
        "dims": {str(d): b for d, b in sorted(table.dims.items()) if b},
        "converged_assumed": table.converged_assumed,
        "valid_up_to_degree": table.valid_up_to_degree,
        "complex_dim": table.complex_dim,
        "note": table.note,
    }


def run(cfg: JobConfig) -> JobReport:
    """Execute one compute job; deterministic up to the duration field."""
    t0 = time.monotonic()
    fam = make_family(cfg)
    report = JobReport(config=cfg.echo())
    want = set(cfg.artifacts)
    e1 = engine.build_e1(fam)
    need_e2 = bool(want & {"e2", "betti"})
    if "e1" in want:
        if fam.presented and (want & {"e2", "betti", "checks"}):
            engine.attach_differentials(e1, threads=cfg.threads)
        report.pages.append(_page_obj(e1))
    if need_e2:
        result = engine.stratum_tables(fam, threads=cfg.threads)
        if "e2" in want:
            report.pages.append(_page_obj(result.e2))
        if "betti" in want:
            report.betti.append(_betti_obj(result.primary))
            if result.ordinary is not None:
                report.betti.append(_betti_obj(result.ordinary))
    if "checks" in want:
        if fam.presented:
            engine.attach_differentials(e1, threads=cfg.threads)
            report.checks.append(engine.dd_zero_check(e1))
        e2 = engine.compute_e2(e1, threads=cfg.threads)
        report.checks.append(engine.chi_conservation_check(e1, e2))
    report.duration_ms = int(1000 * (time.monotonic() - t0))
    return report


def check(cfg: JobConfig) -> JobReport:
    """Run the structural self-check matrix."""
    t0 = time.monotonic()
    checks = engine.run_structural_checks(
        p_max=cfg.pmax, families=cfg.families, threads=cfg.threads
    )
    report = JobReport(config=cfg.echo(), checks=checks)
    report.duration_ms = int(1000 * (time.monotonic() - t0))
    return report


# -- rendering ----------------------------------------------------------------


def render_json(report: JobReport) -> str:
    return json.dumps(report.to_obj(), indent=2, sort_keys=True) + "\n"


def render_csv(report: JobReport) -> str:
    lines = ["record,a,b,c,d"]
    for page in report.pages:
        for cell in page["cells"]:
            lines.append(
                f"cell,{page['page']},{cell['p']},{cell['q']},{cell['dim']}"
            )
        for diff in page["differentials"]:
            lines.append(
                f"differential,{page['page']},{diff['p']},{diff['q']},{diff['rank']}"
            )
    for table in report.betti:
        for d, b in table["dims"].items():
            lines.append(f"betti,{table['kind']},{d},{b},")
    for chk in report.checks:
        name = chk.get("name", "?")
        inst = str(chk.get("instance", "")).replace(",", ";")
        lines.append(f"check,{name},{inst},{'pass' if chk.get('passed') else 'FAIL'},")
    return "\n".join(lines) + "\n"


def render_text(report: JobReport) -> str:
    out = []
    cfg = report.config
    out.append(f"ssfilter report ({SCHEMA})")
    out.append(f"config: {json.dumps(cfg, sort_keys=True)}")
    for page in report.pages:
        out.append("")
        out.append(f"page E{page['page']}:")
        out.append("  p   q    dim")
        for cell in page["cells"]:
            out.append(f"  {cell['p']:<3} {cell['q']:<4} {cell['dim']}")
            for label in cell.get("labels", ())[:0]:
                pass
        if page["differentials"]:
            out.append("  differentials (p, q) -> (p+1, q):")
            for diff in page["differentials"]:
                out.append(
                    f"    ({diff['p']}, {diff['q']}): "
                    f"{diff['rows']}x{diff['cols']}, rank {diff['rank']}"
                )
    for table in report.betti:
        out.append("")
        head = f"betti ({table['kind']})"
        if table["valid_up_to_degree"] is not None:
            head += f", valid up to degree {table['valid_up_to_degree']}"
        if table["converged_assumed"]:
            head += ", degeneration assumed"
        out.append(head + ":")
        if not table["dims"]:
            out.append("  (zero)")
        for d, b in table["dims"].items():
            out.append(f"  degree {d}: {b}")
        if table["note"]:
            out.append(f"  note: {table['note']}")
    if report.checks:
        out.append("")
        out.append("checks:")
        for chk in report.checks:
            status = "pass" if chk.get("passed") else "FAIL"
            inst = chk.get("instance", "")
            inst = f" [{inst}]" if inst else ""
            out.append(f"  {status}  {chk['name']}{inst}")
            if not chk.get("passed"):
                detail = {
                    k: v
                    for k, v in chk.items()
                    if k not in ("name", "instance", "passed")
                }
                if detail:
                    out.append(f"        detail: {json.dumps(detail, default=str)}")
    out.append("")
    out.append(f"duration_ms: {report.duration_ms}")
    return "\n".join(out) + "\n"


_EXPLAIN = {
    "uconf-plane": """\
family uconf-plane (parameter: n >= 0)
  unordered configurations of n points in the affine line, filtered by
  doubling a root (filter gap e = 2).
  filtering space M: compact-support table of the affine line, {2: 1}.
  tower member X_(n-2p): monic polynomials of degree n-2p, table {2(n-2p): 1}.
  columns: p <= 1 (a single even class; columns p >= 2 vanish).
  cells (0, 2n) and (1, 2n-2) never share a q, so the first page is final.
  convergence: compact-support cohomology of the configuration space in
  total degree p+q; ordinary Betti numbers by reflecting at 2n.""",
    "uconf-general": """\
family uconf-general (parameters: n >= 0, Betti table of X, convention)
  unordered configurations of n points in a space X with the given table,
  filtered by doubling a point (filter gap e = 2).
  column p carries Sym^i of the odd classes tensor Lambda^j of the even
  classes (i + j = p), tensored with the table of Sym^(n-2p) X obtained
  from the symmetric-product generating function
      prod over odd d of (1 + x t^d)^(b_d) *
      prod over even d of (1 - x t^d)^(-b_d).
  first page only: the page is final when consecutive columns decouple
  by q; otherwise second-page requests fail (differentials are not
  defined at the Betti level).""",
    "tuples": """\
family tuples (parameters: r >= 1, n >= 0)
  r-tuples of monic degree-n polynomials with no common root, filtered by
  multiplying every entry by a shared linear factor (filter gap e = 1).
  filtering space M: compact-support table of the affine line, {2: 1}.
  tower member X_(n-p): affine space of dimension r(n-p).
  columns: p <= 1.  For r >= 2 the two cells sit in distinct q, the page
  is final, and the dualized table is supported in degrees {0, 2r-3}.
  For r = 1 the cells share a q and only the first page is offered.""",
    "pencils-p1": """\
family pencils-p1 (parameters: m >= 1, n >= 2)
  degree-n pencils (rank m+1 linear systems) on the projective line,
  filtered by multiplying all sections by a linear form (filter gap 1).
  filtering space M: H* of the projective line (basis 1, e; deg e = 2).
  tower member X_(n-p): H* of the Grassmannian of (m+1)-planes in
  (n+1-p)-space, presented by Chern classes c_1..c_(m+1).
  one face pullback inserting slot <i> sends
      c_j |-> c_j - (m+2-j) * e<i> * c_(j-1)
  (for m = 1: c_1 |-> c_1 - 2 e<i>, c_2 |-> c_2 - e<i> c_1).
  differential out of column p: sum over i = 1..p+1 of (-1)^i times the
  face pullback, restricted to the sign-twisted invariants of the slots.
  columns: p <= 2.  convergence: relative cohomology of the pair in total
  degree p+q; ordinary Betti numbers by reflecting at twice the complex
  dimension (m+1)(n-m).""",
    "pencils-curve": """\
family pencils-curve (parameters: g >= 0, n >= 2g)
  degree-n pencils on a smooth projective genus-g curve, filtered by
  adding a basepoint (filter gap 1).
  filtering space M: H* of the curve (basis 1, alpha_1..alpha_2g, e) with
  alpha_k alpha_(g+k) = e = -alpha_(g+k) alpha_k.
  tower member X_(n-p): H*(Picard torus) tensor H*(G(2, n-p-g+1)) via the
  Leray-Hirsch splitting; generators a_1..a_2g and c_1, c_2.
  one face pullback inserting slot <i> sends
      c_1 |-> c_1 - 2 e<i>
      c_2 |-> c_2 - e<i> c_1
      a_r |-> a_r + alpha_r<i>      (r = 1..2g)
  differential out of column p: sum over i = 1..p+1 of (-1)^i times the
  face pullback, restricted to the sign-twisted invariants of the slots.
  columns: p <= n - 2g.  convergence: relative cohomology of the pair in
  total degree p+q; ordinary Betti numbers by reflecting at twice the
  complex dimension g + 2(n-g-1), certified up to degree n - 2g.
  degeneration at the second page is assumed for g >= 1 (smooth projective
  members; weight argument); for g = 0 the single surviving cell needs no
  assumption and the family reduces to pencils-p1 with m = 1.""",
}


def explain_text(family: str) -> str:
    if family not in _EXPLAIN:
        raise ConfigError(
            f"unknown family {family!r}; choose from "
            + ", ".join(families.FAMILY_NAMES)
        )
    sign_note = (
        "sign conventions: transposing adjacent slots of degrees a, b costs\n"
        "(-1)^(a*b); the invariants carry the extra sign of the permutation,\n"
        "so odd classes symmetrize and even classes alternate.  The displayed\n"
        "per-face images enter the differential with the alternating weights\n"
        "(-1)^i, so single-column formulas differ from the face image by a\n"
        "global sign."
    )
    return _EXPLAIN[family] + "\n\n" + sign_note + "\n"


# -- entry point ---------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssfilter",
        description="Exact spectral-sequence calculator for semi-simplicially "
        "filtered families",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    comp = sub.add_parser("compute", help="compute pages and Betti tables")
    comp.add_argument("--config", help="config file (key = value lines)")
    comp.add_argument("--family", choices=families.FAMILY_NAMES)
    comp.add_argument("--n", type=int)
    comp.add_argument("--genus", "-g", dest="g", type=int)
    comp.add_argument("--r", type=int, help="tuple length (family tuples)")
    comp.add_argument("--m", type=int, help="target dimension (pencils-p1)")
    comp.add_argument("--betti", help="custom Betti table, e.g. 0:1,2:1")
    comp.add_argument("--convention", choices=("compact-support", "ordinary"))
    comp.add_argument("--artifacts", help="comma list from e1,e2,betti,checks")
    comp.add_argument("--format", choices=FORMATS)
    comp.add_argument("--out", help="write the report to this path")

    chk = sub.add_parser("check", help="run the structural self-checks")
    chk.add_argument("--pmax", type=int, default=10)
    chk.add_argument("--families", default="all",
                     help="comma list of family names, or 'all'")
    chk.add_argument("--format", choices=FORMATS)
    chk.add_argument("--out")

    exp = sub.add_parser("explain", help="print a family's conventions")
    exp.add_argument("--family", required=True)
    return parser


def _threads_from_env() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return threads


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        threads = _threads_from_env()
        if args.command == "explain":
            sys.stdout.write(explain_text(args.family))
            return 0
        flag_values = {
            k: v
            for k, v in vars(args).items()
            if k not in ("command", "config") and v is not None
        }
        file_values = (
            parse_config_file(args.config)
            if getattr(args, "config", None)
            else {}
        )
        cfg = _merge_config(args.command, file_values, flag_values)
        cfg.threads = threads
        if args.command == "compute":
            cfg = validate_compute_config(cfg)
            report = run(cfg)
        else:
            if cfg.pmax < 1:
                raise ConfigError("pmax must be at least 1")
            report = check(cfg)
        renderer = {"text": render_text, "json": render_json, "csv": render_csv}
        text = renderer[cfg.format](report)
        _emit(text, cfg.out)
        return 0 if report.all_checks_passed() else 4
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except RangeError as exc:
        print(f"range error: {exc}", file=sys.stderr)
        return 3
    except DifferentialsUnavailable as exc:
        print(f"range error: {exc}", file=sys.stderr)
        return 3
    except engine.DegenerationUnknown as exc:
        print(f"range error: {exc}", file=sys.stderr)
        return 3
    except (
        NotInvariant,
        CompositionNonzero,
        AlgebraMismatch,
        AlgebraConstructionError,
        InvalidShape,
        engine.InternalInvariantViolation,
    ) as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
