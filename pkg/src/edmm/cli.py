"""Command line frontend wiring parse, validate, check and transform.

Exit codes are stable:

  0  success
  1  the model has validation (or parse) errors
  2  the model is incompatible with the requested target
  3  usage error (bad flags, unknown command or technology)
  4  I/O error (unreadable input, unusable catalog, write failure)

--format machine switches output to line-delimited tab-separated records
with a stable field order; the first field names the record type.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import compat
from .catalog import load_catalog_file
from .dsl import SourceSet, parse, serialize
from .transform import list_targets, transform, write_fileset
from .errors import (
    CatalogError,
    IncompatibleModelError,
    MissingArtifactError,
    UnknownTechnologyError,
    UnmappableElementError,
    ValidationFailed,
)
from .validation import assert_valid, render_machine, render_text, validate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INCOMPATIBLE = 2
EXIT_USAGE = 3
EXIT_IO = 4

CATALOG_ENV_VAR = "EDMM_CATALOG_PATH"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _machine_line(*fields) -> str:
    return "\t".join(str(f).replace("\t", " ").replace("\n", " ") for f in fields)


def _build_parser() -> _Parser:
    parser = _Parser(prog="edmm", description="Deployment model toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add_common(p, with_inputs=True):
        if with_inputs:
            p.add_argument("inputs", nargs="+", metavar="FILE", help="model source files")
            p.add_argument(
                "--catalog",
                action="append",
                default=[],
                metavar="FILE",
                help=f"extra type catalog (repeatable; default ${CATALOG_ENV_VAR})",
            )
        p.add_argument(
            "--format",
            choices=("text", "machine"),
            default="text",
            help="output format (default text)",
        )

    p = sub.add_parser("parse", help="parse sources and print the canonical form")
    add_common(p)

    p = sub.add_parser("validate", help="run semantic validation")
    add_common(p)

    p = sub.add_parser("check", help="check compatibility against a technology")
    add_common(p)
    p.add_argument("--target", required=True, metavar="NAME", help="technology name")

    p = sub.add_parser("transform", help="emit native deployment files")
    add_common(p)
    p.add_argument("--target", required=True, metavar="NAME", help="technology name")
    p.add_argument("--output", required=True, metavar="DIR", help="output directory")

    p = sub.add_parser("list-targets", help="list technologies and plugin status")
    add_common(p, with_inputs=False)

    return parser


def _load_catalogs(args):
    paths = list(args.catalog)
    if not paths:
        env = os.environ.get(CATALOG_ENV_VAR)
        if env:
            paths = [env]
    return [load_catalog_file(path) for path in paths]


def _parse_sources(args):
    sources = SourceSet.from_files(args.inputs)
    return parse(sources, extra_catalogs=_load_catalogs(args))


def _emit_parse_diagnostics(result, args, out, err) -> None:
    if args.format == "machine":
        for d in result.diagnostics:
            print(
                _machine_line(
                    "parse-diagnostic", d.severity, d.code, d.source, d.line, d.column, d.message
                ),
                file=out,
            )
    else:
        for d in result.diagnostics:
            print(str(d), file=err)


def _cmd_parse(args, out, err) -> int:
    result = _parse_sources(args)
    _emit_parse_diagnostics(result, args, out, err)
    if not result.ok:
        return EXIT_VALIDATION
    model = result.model
    if args.format == "machine":
        print(
            _machine_line("model", model.name, len(model.components), len(model.relations)),
            file=out,
        )
    else:
        print(serialize(model), end="", file=out)
    return EXIT_OK


def _cmd_validate(args, out, err) -> int:
    result = _parse_sources(args)
    _emit_parse_diagnostics(result, args, out, err)
    if not result.ok:
        errors = sum(1 for d in result.diagnostics if d.severity == "error")
        if args.format == "machine":
            print(_machine_line("summary", errors, 0), file=out)
        else:
            print(f"{errors} errors, 0 warnings", file=out)
        return EXIT_VALIDATION
    diagnostics = validate(result.model)
    errors = sum(1 for d in diagnostics if d.severity == "error")
    warnings = len(diagnostics) - errors
    if args.format == "machine":
        if diagnostics:
            print(render_machine(diagnostics), file=out)
        print(_machine_line("summary", errors, warnings), file=out)
    else:
        if diagnostics:
            print(render_text(diagnostics), file=out)
        print(f"{errors} errors, {warnings} warnings", file=out)
    return EXIT_VALIDATION if errors else EXIT_OK


def _validated_or_exit(args, out, err):
    result = _parse_sources(args)
    _emit_parse_diagnostics(result, args, out, err)
    if not result.ok:
        return None
    try:
        return assert_valid(result.model)
    except ValidationFailed as exc:
        if args.format == "machine":
            print(render_machine(exc.diagnostics), file=out)
        else:
            print(render_text(exc.diagnostics), file=err)
        return None


def _cmd_check(args, out, err) -> int:
    validated = _validated_or_exit(args, out, err)
    if validated is None:
        return EXIT_VALIDATION
    report = compat.check(validated, args.target)
    if args.format == "machine":
        print(compat.render_report_machine(report), file=out)
    else:
        print(compat.render_report_text(report), file=out)
    return EXIT_OK if report.compatible else EXIT_INCOMPATIBLE


def _cmd_transform(args, out, err) -> int:
    validated = _validated_or_exit(args, out, err)
    if validated is None:
        return EXIT_VALIDATION
    artifact_root = Path(args.inputs[0]).resolve().parent
    try:
        fileset = transform(validated, args.target, artifact_root=artifact_root)
    except IncompatibleModelError as exc:
        report = compat.TargetReport(technology=exc.technology, blockers=tuple(exc.blockers))
        if args.format == "machine":
            print(compat.render_report_machine(report), file=out)
        else:
            print(compat.render_report_text(report), file=err)
        return EXIT_INCOMPATIBLE
    except UnmappableElementError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INCOMPATIBLE
    written = write_fileset(fileset, Path(args.output), args.target)
    if args.format == "machine":
        for f in fileset.files:
            print(_machine_line("file", f"{args.target}/{f.path}"), file=out)
        print(_machine_line("summary", len(fileset.files), str(written)), file=out)
    else:
        for f in fileset.files:
            print(f"  {args.target}/{f.path}", file=out)
        print(f"wrote {len(fileset.files)} files to {written}", file=out)
    return EXIT_OK


def _cmd_list_targets(args, out, err) -> int:
    rows = list_targets()
    if args.format == "machine":
        for row in rows:
            print(_machine_line("target", row.name, row.category, row.status), file=out)
    else:
        width = max(len(row.name) for row in rows)
        for row in rows:
            print(f"{row.name:<{width}}  {row.category:<6} {row.status}", file=out)
    return EXIT_OK


_COMMANDS = {
    "parse": _cmd_parse,
    "validate": _cmd_validate,
    "check": _cmd_check,
    "transform": _cmd_transform,
    "list-targets": _cmd_list_targets,
}


def run(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("a command is required")
        return _COMMANDS[args.command](args, out, err)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE
    except UnknownTechnologyError as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE
    except (CatalogError, MissingArtifactError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=err)
        return EXIT_IO
    except UnicodeDecodeError as exc:
        print(f"I/O error: {exc}", file=err)
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
