"""Single entry point: validate spaces, solve, and run the full domain pipelines.

Subcommands: validate, solve, pipeline, vis, knit. Every run is deterministic
under the stub backend; all intermediate artifacts (prompts, raw responses,
parsed constraints, compiled matrices, solution) can be persisted for audit.

Exit codes:
  0  success
  1  I/O failure or unexpected error
  2  invalid input (document, constraints, CSV, flags)
  3  the hard constraints admit no solution
  4  chat backend unavailable or unconfigured
  5  retries exhausted while parsing backend replies
  6  solver resource budget exceeded
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Tuple

from .backends import (
    BackendUnavailableError,
    ChatBackend,
    HttpChatBackend,
    LlmSettings,
    StubBackend,
    StubRule,
    load_stub_rules,
    stub_backend,
)
from .constraints import (
    ConstraintError,
    RequirementInput,
    compile_constraints,
    load_constraints_document,
)
from .knitwear import TemplateError, builtin_knit_space, compose_image_prompt, extend_knit_space, load_prompt_template
from .pipeline import GenerationRecord, PipelineConfig, RetriesExhaustedError, run_pipeline
from .prompts import ReferralExample, load_templates, referral_examples_from_doc
from .solver import INFEASIBLE, ResourceLimitError, SolveResult, solve
from .space import SpaceError, read_design_space
from .visualization import (
    CsvError,
    TransformError,
    build_vis_space,
    chart_spec_json,
    emit_chart_spec,
    intrinsic_rules,
    read_table,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_BACKEND = 4
EXIT_RETRIES = 5
EXIT_RESOURCE = 6


class UsageError(Exception):
    """Mutually required flags are missing or inconsistent."""


def _packaged_json(name: str):
    text = resources.files("cods").joinpath("data", name).read_text(encoding="utf-8")
    return json.loads(text)


def _load_config(path: Optional[Path]) -> dict:
    if path is None:
        return {}
    doc = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    return doc


def _llm_settings(config: dict) -> LlmSettings:
    llm = config.get("llm", {})
    return LlmSettings(
        endpoint=llm.get("endpoint", ""),
        model=llm.get("model", ""),
        temperature=float(llm.get("temperature", 0.0)),
        timeout=float(llm.get("timeout", 60.0)),
        max_retries=int(llm.get("max_retries", 1)),
    )


def _make_backend(args, default_rules: Tuple[StubRule, ...], settings: LlmSettings) -> ChatBackend:
    if args.backend == "live":
        return HttpChatBackend(settings)
    if args.stub_rules is not None:
        return StubBackend(load_stub_rules(args.stub_rules))
    return StubBackend(default_rules)


def _pipeline_config(args, settings: LlmSettings, examples: Tuple[ReferralExample, ...], config: dict) -> PipelineConfig:
    templates_dir = config.get("templates")
    templates = load_templates(templates_dir) if templates_dir else None
    return PipelineConfig(max_retries=settings.max_retries, referral_examples=examples, templates=templates)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _write_compiled(args, cset) -> None:
    if not getattr(args, "emit_compiled", False):
        return
    if args.out is None:
        raise UsageError("--emit-compiled requires --out to name the main output")
    sidecar = args.out.with_name(args.out.stem + ".compiled.json")
    sidecar.write_text(_json_text(cset.to_doc()), encoding="utf-8")


def _write_transcript(args, record: GenerationRecord, space) -> None:
    if getattr(args, "transcript", None) is None:
        return
    lines = [json.dumps(entry.to_doc(space), ensure_ascii=False) for entry in record.transcript]
    args.transcript.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_validate(args) -> int:
    try:
        space = read_design_space(args.space)
    except SpaceError as exc:
        sys.stderr.write(f"invalid design space: {exc}\n")
        return EXIT_INVALID
    n, m = space.shape
    names = ", ".join(d.name for d in space.dimensions)
    sys.stdout.write(f"ok: {space.name} (n={n}, m={m})\ndimensions: {names}\n")
    return EXIT_OK


def cmd_solve(args) -> int:
    space = read_design_space(args.space)
    constraints = load_constraints_document(args.constraints, space)
    cset = compile_constraints(space, constraints)
    result = solve(space, cset)
    _write_compiled(args, cset)
    _emit(_json_text(result.to_doc(space, cset)), args.out)
    return EXIT_INFEASIBLE if result.status == INFEASIBLE else EXIT_OK


def _solve_from_record(space, record: GenerationRecord, extra_constraints=()) -> Tuple[SolveResult, object]:
    constraints = tuple(extra_constraints) + record.constraints
    cset = compile_constraints(space, constraints)
    return solve(space, cset), cset


def cmd_pipeline(args) -> int:
    config = _load_config(args.config)
    settings = _llm_settings(config)
    space = read_design_space(args.space)
    backend = _make_backend(args, default_rules=(), settings=settings)
    pipeline_config = _pipeline_config(args, settings, (), config)
    record = run_pipeline(space, RequirementInput(args.requirement), backend, pipeline_config)
    result, cset = _solve_from_record(space, record)
    _write_transcript(args, record, space)
    _write_compiled(args, cset)
    doc = {"record": record.to_doc(space), "result": result.to_doc(space, cset)}
    _emit(_json_text(doc), args.out)
    return EXIT_INFEASIBLE if result.status == INFEASIBLE else EXIT_OK


def cmd_vis(args) -> int:
    config = _load_config(args.config)
    settings = _llm_settings(config)
    table = read_table(args.dataset)
    space = build_vis_space(table.schema)
    rules = intrinsic_rules(space, table.schema)
    default_rules = tuple(
        StubRule(keywords=tuple(r["keywords"]), hard=tuple(r.get("hard", [])), soft=tuple(r.get("soft", [])))
        for r in _packaged_json("vis_stub_rules.json")["rules"]
    )
    backend = _make_backend(args, default_rules=default_rules, settings=settings)
    examples = referral_examples_from_doc(_packaged_json("referral_examples_vis.json"))
    pipeline_config = _pipeline_config(args, settings, examples, config)
    record = run_pipeline(space, RequirementInput(args.query), backend, pipeline_config)
    result, cset = _solve_from_record(space, record, extra_constraints=rules)
    _write_transcript(args, record, space)
    _write_compiled(args, cset)
    if result.status == INFEASIBLE:
        _emit(_json_text(result.to_doc(space, cset)), args.out)
        return EXIT_INFEASIBLE
    spec = emit_chart_spec(space, result.solution, table.schema)
    _emit(chart_spec_json(spec), args.out)
    return EXIT_OK


def cmd_knit(args) -> int:
    config = _load_config(args.config)
    settings = _llm_settings(config)
    if args.space is not None:
        extension = json.loads(args.space.read_text(encoding="utf-8"))
        space = extend_knit_space(extension)
    else:
        space = builtin_knit_space()
    default_rules = tuple(
        StubRule(keywords=tuple(r["keywords"]), hard=tuple(r.get("hard", [])), soft=tuple(r.get("soft", [])))
        for r in _packaged_json("knit_stub_rules.json")["rules"]
    )
    backend = _make_backend(args, default_rules=default_rules, settings=settings)
    examples = referral_examples_from_doc(_packaged_json("referral_examples_knit.json"))
    pipeline_config = _pipeline_config(args, settings, examples, config)
    record = run_pipeline(space, RequirementInput(args.requirement), backend, pipeline_config)
    result, cset = _solve_from_record(space, record)
    _write_transcript(args, record, space)
    if result.status == INFEASIBLE:
        _emit(_json_text(result.to_doc(space, cset)), args.out)
        return EXIT_INFEASIBLE
    template = load_prompt_template(args.template)
    prompt = compose_image_prompt(space, result.solution, template)
    _emit(prompt + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cods", description="Design automation over structured design spaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    out_flags = argparse.ArgumentParser(add_help=False)
    out_flags.add_argument("--out", type=Path, default=None, help="write the main output to this file instead of stdout")
    out_flags.add_argument("--config", type=Path, default=None, help="JSON config file (llm.*, templates)")

    backend_flags = argparse.ArgumentParser(add_help=False)
    backend_flags.add_argument("--backend", choices=("stub", "live"), default="stub", help="chat backend (default: stub)")
    backend_flags.add_argument("--stub-rules", type=Path, default=None, help="stub rules JSON overriding the shipped defaults")
    backend_flags.add_argument("--transcript", type=Path, default=None, help="write the prompt/response transcript as JSON lines")

    p = sub.add_parser("validate", help="check a design-space document")
    p.add_argument("--space", type=Path, required=True)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("solve", parents=[out_flags], help="solve a space against a constraint document")
    p.add_argument("--space", type=Path, required=True)
    p.add_argument("--constraints", type=Path, required=True)
    p.add_argument("--emit-compiled", action="store_true", help="write the compiled matrices next to --out")
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("pipeline", parents=[out_flags, backend_flags], help="generate constraints from a requirement, then solve")
    p.add_argument("--space", type=Path, required=True)
    p.add_argument("--requirement", required=True)
    p.add_argument("--emit-compiled", action="store_true")
    p.set_defaults(handler=cmd_pipeline)

    p = sub.add_parser("vis", parents=[out_flags, backend_flags], help="dataset + query -> chart spec JSON")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--emit-compiled", action="store_true")
    p.set_defaults(handler=cmd_vis)

    p = sub.add_parser("knit", parents=[out_flags, backend_flags], help="requirement -> image-generation prompt")
    p.add_argument("--requirement", required=True)
    p.add_argument("--space", type=Path, default=None, help="optional extension document merged into the built-in space")
    p.add_argument("--template", type=Path, default=None, help="prompt template file with {dimension} placeholders")
    p.set_defaults(handler=cmd_knit)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (SpaceError, ConstraintError, CsvError, TransformError, TemplateError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except BackendUnavailableError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BACKEND
    except RetriesExhaustedError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RETRIES
    except ResourceLimitError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RESOURCE
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
