"""Command-line surface: ingest, train, eval, predict, case-study,
template-search, validate-verbalizer, induce-verbalizer.

Experiments are described by a JSON config file; ``--set key=value`` flags
override individual (dotted) keys. Every report embeds the resolved config
and is byte-reproducible for a fixed seed, with timestamps isolated in the
``meta.created_at`` field.

Exit codes: 0 success, 2 usage/config, 3 data, 4 backend.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import evaluation, train as train_mod
from .corpus import (
    Dataset,
    RelationType,
    Split,
    assign_split,
    corpus_stats,
    implicit_task_instances,
    parse_conll16,
    parse_normalized,
    scheme_by_id,
    serialize_normalized,
)
from .errors import (
    BackendError,
    CapabilityError,
    ConfigError,
    DataError,
    ToolkitError,
)
from .prompt import Template, builtin_templates, load_template_file
from .scorer import (
    FeatureConfig,
    MockScorer,
    ReferenceScorer,
    RemoteConfig,
    RemoteScorer,
    Scorer,
)
from .train import SelectionMetric, TrainConfig
from .verbalizer import (
    Verbalizer,
    builtin_verbalizer,
    dump_verbalizer,
    induce_answer_sets,
    load_verbalizer_file,
    validate as validate_verbalizer,
)

ENDPOINT_ENV_VAR = "CONNPROMPT_ENDPOINT"

MODES = ("pcp", "pidrp", "pedrr")
_DEFAULT_TEMPLATE = {"pcp": "t6", "pidrp": "pidrp", "pedrr": "pedrr"}
_DEFAULT_SCHEME = {"pcp": "pdtb-second", "pidrp": "pdtb-top", "pedrr": "pdtb-second-explicit"}
_DEFAULT_VERBALIZER = {
    ("pcp", "pdtb-second"): "pdtb-second",
    ("pcp", "pdtb-top"): "pdtb-top",
    ("pcp", "conll15"): "conll15",
    ("pidrp", "pdtb-top"): "pidrp-top",
    ("pedrr", "pdtb-second-explicit"): "pedrr-second",
    ("pedrr", "pdtb-top-explicit"): "pedrr-top",
}

_CONFIG_KEYS = {
    "mode", "dataset", "scheme", "data", "template", "template_file",
    "verbalizer", "verbalizer_file", "scorer", "train", "output_dir", "jobs",
}
_SCORER_KEYS = {"kind", "endpoint", "script", "window", "timeout", "retries"}


@dataclass
class Experiment:
    """A fully resolved experiment config."""

    raw: dict
    mode: str
    dataset: Dataset
    template: Template
    verbalizer: Verbalizer
    scorer_spec: dict
    train_config: TrainConfig
    data: dict[str, str]
    output_dir: Path
    jobs: int = 1


def _apply_overrides(raw: dict, assignments: list[str]) -> dict:
    for assignment in assignments or []:
        if "=" not in assignment:
            raise ConfigError([f"--set expects key=value, got {assignment!r}"])
        key, value = assignment.split("=", 1)
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError([f"--set {key}: {part!r} is not an object"])
        node[parts[-1]] = parsed
    return raw


def load_experiment(config_path: str | Path, assignments: list[str] | None = None) -> Experiment:
    """Load, override and validate a config file; every violation at once."""
    path = Path(config_path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])
    raw = _apply_overrides(raw, assignments or [])

    violations: list[str] = []
    for key in raw:
        if key not in _CONFIG_KEYS:
            violations.append(f"unknown config key {key!r}")

    mode = raw.get("mode", "pcp")
    if mode not in MODES:
        violations.append(f"mode must be one of {MODES}, got {mode!r}")
        mode = "pcp"

    dataset_raw = raw.get("dataset", "pdtb")
    try:
        dataset = Dataset(dataset_raw)
    except ValueError:
        violations.append(f"dataset must be 'pdtb' or 'conll16', got {dataset_raw!r}")
        dataset = Dataset.PDTB

    scheme_id = raw.get("scheme", _DEFAULT_SCHEME[mode])
    scheme = None
    try:
        scheme = scheme_by_id(scheme_id)
    except DataError as exc:
        violations.append(str(exc))

    template = None
    template_id = raw.get("template", _DEFAULT_TEMPLATE[mode])
    templates = dict(builtin_templates())
    if "template_file" in raw:
        try:
            file_templates = load_template_file(Path(raw["template_file"]).read_text(encoding="utf-8"))
            templates.update(file_templates)
        except (OSError, ToolkitError) as exc:
            violations.append(f"template_file: {exc}")
    if template_id in templates:
        template = templates[template_id]
    else:
        violations.append(f"unknown template {template_id!r}")

    verbalizer = None
    if "verbalizer_file" in raw:
        if scheme is not None:
            try:
                text = Path(raw["verbalizer_file"]).read_text(encoding="utf-8")
                verbalizer = load_verbalizer_file(text, scheme)
            except (OSError, ToolkitError) as exc:
                violations.append(f"verbalizer_file: {exc}")
    else:
        verbalizer_id = raw.get("verbalizer") or _DEFAULT_VERBALIZER.get((mode, scheme_id))
        if verbalizer_id is None:
            violations.append(
                f"no default verbalizer for mode {mode!r} with scheme {scheme_id!r}; "
                "set 'verbalizer' or 'verbalizer_file'"
            )
        else:
            try:
                verbalizer = builtin_verbalizer(verbalizer_id)
            except DataError as exc:
                violations.append(str(exc))

    if verbalizer is not None and scheme is not None:
        if verbalizer.scheme.scheme_id is not scheme.scheme_id:
            violations.append(
                f"verbalizer is for scheme {verbalizer.scheme.scheme_id.value!r}, "
                f"config says {scheme_id!r}"
            )

    if template is not None:
        if mode == "pedrr" and not template.requires_connective:
            violations.append("pedrr mode requires a template with a {conn} slot")
        if mode != "pedrr" and template.requires_connective:
            violations.append(f"mode {mode!r} cannot use a connective-bearing template")

    scorer_spec = dict(raw.get("scorer", {}))
    for key in scorer_spec:
        if key not in _SCORER_KEYS:
            violations.append(f"unknown scorer key {key!r}")
    kind = scorer_spec.setdefault("kind", "reference")
    if kind not in ("mock", "reference", "remote"):
        violations.append(f"scorer.kind must be mock/reference/remote, got {kind!r}")
    endpoint = os.environ.get(ENDPOINT_ENV_VAR) or scorer_spec.get("endpoint")
    scorer_spec["endpoint"] = endpoint
    if kind == "remote" and not endpoint:
        violations.append(
            f"scorer.kind 'remote' needs scorer.endpoint or ${ENDPOINT_ENV_VAR}"
        )

    train_raw = dict(raw.get("train", {}))
    selection_raw = train_raw.pop("selection_metric", SelectionMetric.TOP_LEVEL_DEV_ACCURACY.value)
    try:
        selection = SelectionMetric(selection_raw)
    except ValueError:
        violations.append(f"unknown selection_metric {selection_raw!r}")
        selection = SelectionMetric.TOP_LEVEL_DEV_ACCURACY
    known_train = {f for f in TrainConfig.__dataclass_fields__}
    bad_train = [k for k in train_raw if k not in known_train]
    if bad_train:
        violations.append(f"unknown train keys: {bad_train}")
        for key in bad_train:
            train_raw.pop(key)
    train_config = TrainConfig(selection_metric=selection, **train_raw)
    violations.extend(train_config.violations())

    data = raw.get("data", {})
    if not isinstance(data, dict) or not all(isinstance(v, str) for v in data.values()):
        violations.append("data must be an object mapping split/format names to strings")
        data = {}
    data_format = data.get("format", "normalized")
    if data_format not in ("normalized", "conll16"):
        violations.append(f"data.format must be 'normalized' or 'conll16', got {data_format!r}")

    jobs = raw.get("jobs", 1)
    if not isinstance(jobs, int) or jobs < 1:
        violations.append(f"jobs must be a positive integer, got {jobs!r}")
        jobs = 1

    if violations:
        raise ConfigError(violations)

    return Experiment(
        raw=raw,
        mode=mode,
        dataset=dataset,
        template=template,
        verbalizer=verbalizer,
        scorer_spec=scorer_spec,
        train_config=train_config,
        data=data,
        output_dir=Path(raw.get("output_dir", "out")),
        jobs=jobs,
    )


def build_scorer(exp: Experiment, checkpoint: str | None = None) -> Scorer:
    kind = exp.scorer_spec["kind"]
    if kind == "mock":
        script = exp.scorer_spec.get("script", {})
        return MockScorer({str(k): float(v) for k, v in script.items()})
    if kind == "reference":
        if checkpoint:
            return ReferenceScorer.load_file(checkpoint)
        window = int(exp.scorer_spec.get("window", 3))
        return ReferenceScorer(FeatureConfig(window=window), seed=exp.train_config.seed)
    config = RemoteConfig(
        base_url=exp.scorer_spec["endpoint"],
        timeout=float(exp.scorer_spec.get("timeout", 30.0)),
        retries=int(exp.scorer_spec.get("retries", 2)),
    )
    scorer = RemoteScorer(config)
    if checkpoint:
        checkpoint_id = checkpoint
        path = Path(checkpoint)
        if path.exists():
            payload = json.loads(path.read_text(encoding="utf-8"))
            checkpoint_id = payload["checkpoint_id"]
        scorer.load_checkpoint(checkpoint_id)
    return scorer


def _load_split(exp: Experiment, split_key: str):
    if split_key not in exp.data:
        raise ConfigError([f"data.{split_key} is required for this command"])
    path = Path(exp.data[split_key])
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    parser = parse_conll16 if exp.data.get("format", "normalized") == "conll16" else parse_normalized
    try:
        instances = parser(path.read_text(encoding="utf-8"))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None
    return _task_instances(exp, instances)


def _task_instances(exp: Experiment, instances):
    if exp.mode == "pedrr":
        return [i for i in instances if i.rel_type is RelationType.EXPLICIT]
    return implicit_task_instances(instances, exp.dataset)


def _meta(config_echo: dict) -> dict:
    return {
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config": config_echo,
    }


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# commands


def cmd_ingest(args) -> int:
    dataset = Dataset(args.dataset)
    out_dir = Path(args.out)
    path = Path(args.input)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    parser = parse_conll16 if args.format == "conll16" else parse_normalized
    try:
        instances = parser(path.read_text(encoding="utf-8"))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None

    by_split: dict[Split, list] = {}
    for inst in instances:
        by_split.setdefault(assign_split(inst, dataset), []).append(inst)

    out_dir.mkdir(parents=True, exist_ok=True)
    for split in (Split.TRAIN, Split.DEV, Split.TEST, Split.BLIND):
        members = by_split.get(split, [])
        if members:
            _write_text(out_dir / f"{split.value}.jsonl", serialize_normalized(members))

    scheme = scheme_by_id(args.scheme or ("conll15" if dataset is Dataset.CONLL16 else "pdtb-top"))
    task = implicit_task_instances(instances, dataset)
    stats = corpus_stats(task, scheme, dataset)
    columns = (Split.TRAIN, Split.DEV, Split.TEST)
    if dataset is Dataset.CONLL16:
        columns = (Split.TRAIN, Split.DEV, Split.TEST, Split.BLIND)
    _write_text(out_dir / "stats.tsv", stats.to_tsv(columns))
    _write_json(out_dir / "ingest.meta.json", {
        "meta": _meta({"input": str(path), "format": args.format,
                       "dataset": dataset.value, "scheme": scheme.scheme_id.value}),
        "counts": {split.value: len(members) for split, members in by_split.items()},
        "stats_excluded": stats.excluded,
    })

    print(f"parsed {len(instances)} instances from {path}")
    for split in (Split.TRAIN, Split.DEV, Split.TEST, Split.BLIND, Split.UNASSIGNED):
        if split in by_split:
            print(f"  {split.value}: {len(by_split[split])}")
    print(f"stats over {scheme.scheme_id.value}: {stats.grand_total()} counted, "
          f"{stats.excluded} excluded (unresolvable)")
    return 0


def cmd_train(args) -> int:
    exp = load_experiment(args.config, args.set)
    train_set = _load_split(exp, "train")
    dev_set = _load_split(exp, "dev")
    scorer = build_scorer(exp)
    run = train_mod.fit(
        train_set, dev_set, exp.template, exp.verbalizer, scorer,
        exp.train_config, jobs=args.jobs or exp.jobs,
    )
    out = exp.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(scorer, ReferenceScorer):
        checkpoint_path = out / "checkpoint.json"
        scorer.save_file(checkpoint_path)
        checkpoint_ref = str(checkpoint_path)
    else:
        final_id = scorer.save_checkpoint("final")
        checkpoint_path = out / "checkpoint.json"
        _write_json(checkpoint_path, {"format": "remote-checkpoint/1", "checkpoint_id": final_id})
        checkpoint_ref = final_id
    payload = {"meta": _meta(exp.raw), "train_run": run.to_dict(),
               "checkpoint": checkpoint_ref}
    _write_json(out / "trainrun.json", payload)
    best = run.epochs[run.selected_epoch - 1] if run.selected_epoch >= 1 else run.epochs[0]
    print(f"selected {run.selected_checkpoint_id} "
          f"(dev metric {best.dev_metric:.4f}); wrote {out / 'trainrun.json'}")
    return 0


def cmd_eval(args) -> int:
    exp = load_experiment(args.config, args.set)
    test_set = _load_split(exp, args.split)
    scorer = build_scorer(exp, checkpoint=args.checkpoint)
    report = evaluation.evaluate(test_set, exp.template, exp.verbalizer, scorer,
                                 jobs=args.jobs or exp.jobs)
    out = exp.output_dir
    _write_json(out / "metrics.json", {"meta": _meta(exp.raw), "metrics": report.to_dict()})
    _write_text(out / "metrics.txt", report.to_text())
    _write_text(out / "confusion.tsv", report.confusion_tsv())
    print(report.to_text())
    print(f"wrote {out / 'metrics.json'}")
    return 0


def cmd_predict(args) -> int:
    exp = load_experiment(args.config, args.set)
    scorer = build_scorer(exp, checkpoint=args.checkpoint)
    token, label, scores = evaluation.predict_pair(
        args.arg1, args.arg2, exp.template, exp.verbalizer, scorer,
        connective=args.connective,
    )
    record = {
        "arg1": args.arg1,
        "arg2": args.arg2,
        "connective": args.connective,
        "predicted_connective": token,
        "predicted_label": label.canonical_name,
        "scores": dict(scores.items()),
    }
    print(json.dumps(record, indent=2, sort_keys=True))
    return 0


def cmd_case_study(args) -> int:
    exp = load_experiment(args.config, args.set)
    label = exp.verbalizer.scheme.by_name(args.label)
    if label is None:
        raise DataError(
            f"label {args.label!r} is not in scheme {exp.verbalizer.scheme.scheme_id.value}"
        )
    test_set = _load_split(exp, args.split)
    scorer = build_scorer(exp, checkpoint=args.checkpoint)
    records = evaluation.predict_all(test_set, exp.template, exp.verbalizer, scorer,
                                     jobs=args.jobs or exp.jobs)
    rows = evaluation.case_study(records, gold_label=label)
    tsv = evaluation.case_study_tsv(rows)
    _write_text(exp.output_dir / "case_study.tsv", tsv)
    _write_json(exp.output_dir / "case_study.meta.json",
                {"meta": _meta(exp.raw), "label": args.label,
                 "instances": sum(r.count for r in rows)})
    print(tsv, end="")
    return 0


def cmd_template_search(args) -> int:
    exp = load_experiment(args.config, args.set)
    train_set = _load_split(exp, "train")
    dev_set = _load_split(exp, "dev")
    all_templates = dict(builtin_templates())
    if "template_file" in exp.raw:
        all_templates.update(
            load_template_file(Path(exp.raw["template_file"]).read_text(encoding="utf-8"))
        )
    if args.templates:
        wanted = args.templates.split(",")
        missing = [t for t in wanted if t not in all_templates]
        if missing:
            raise ConfigError([f"unknown template(s): {missing}"])
        searched = {tid: all_templates[tid] for tid in wanted}
    else:
        searched = {tid: all_templates[tid] for tid in ("t1", "t2", "t3", "t4", "t5", "t6")}

    kind = exp.scorer_spec["kind"]
    if kind == "remote":
        seed_client = build_scorer(exp)
        seed_client.save_checkpoint("template-search-init")

        def factory() -> Scorer:
            client = build_scorer(exp)
            client.load_checkpoint("template-search-init")
            return client
    else:
        def factory() -> Scorer:
            return build_scorer(exp)

    results = evaluation.template_search(
        searched, train_set, dev_set, exp.verbalizer, factory, exp.train_config,
        jobs=args.jobs or exp.jobs,
    )
    tsv = evaluation.template_search_tsv(results)
    _write_text(exp.output_dir / "template_search.tsv", tsv)
    _write_json(exp.output_dir / "template_search.meta.json",
                {"meta": _meta(exp.raw), "templates": sorted(searched)})
    print(tsv, end="")
    return 0


def _standalone_scorer(kind: str, endpoint: str | None) -> Scorer:
    if kind == "mock":
        return MockScorer()
    if kind == "reference":
        return ReferenceScorer()
    endpoint = os.environ.get(ENDPOINT_ENV_VAR) or endpoint
    if not endpoint:
        raise ConfigError([f"remote scorer needs --endpoint or ${ENDPOINT_ENV_VAR}"])
    return RemoteScorer(RemoteConfig(base_url=endpoint))


def cmd_validate_verbalizer(args) -> int:
    scheme = scheme_by_id(args.scheme)
    if Path(args.verbalizer).exists():
        verbalizer = load_verbalizer_file(
            Path(args.verbalizer).read_text(encoding="utf-8"), scheme
        )
    else:
        verbalizer = builtin_verbalizer(args.verbalizer)
        if verbalizer.scheme.scheme_id is not scheme.scheme_id:
            raise ConfigError(
                [f"verbalizer {args.verbalizer!r} is for "
                 f"{verbalizer.scheme.scheme_id.value}, not {args.scheme!r}"]
            )
    if args.export:
        _write_text(Path(args.export), dump_verbalizer(verbalizer))
        print(f"exported to {args.export}")
    scorer = _standalone_scorer(args.scorer, args.endpoint)
    report = validate_verbalizer(verbalizer, scorer)
    if report.ok():
        print("ok: verbalizer passes validation")
        return 0
    for line in report.lines():
        print(line)
    raise DataError("verbalizer failed validation")


def cmd_induce_verbalizer(args) -> int:
    dataset = Dataset(args.dataset)
    scheme = scheme_by_id(args.scheme)
    path = Path(args.input)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    parser = parse_conll16 if args.format == "conll16" else parse_normalized
    try:
        instances = parser(path.read_text(encoding="utf-8"))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None
    instances = implicit_task_instances(instances, dataset)
    scorer = _standalone_scorer(args.scorer, args.endpoint)
    verbalizer, rows = induce_answer_sets(
        instances, scheme, scorer,
        max_per_label=args.max_per_label,
        ambiguity_threshold=args.ambiguity_threshold,
    )
    _write_text(Path(args.out), dump_verbalizer(verbalizer))
    report_lines = ["label\tword\tcount\tshare\tstatus"]
    report_lines += [
        f"{r.label}\t{r.word}\t{r.count}\t{r.share:.4f}\t{r.status}" for r in rows
    ]
    report_path = Path(args.report or (str(args.out) + ".report.tsv"))
    _write_text(report_path, "\n".join(report_lines) + "\n")
    print(f"wrote {args.out} and {report_path}")
    return 0


# --------------------------------------------------------------------------
# argument parsing


def _add_config_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="experiment config JSON")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a (dotted) config key")
    sub.add_argument("--jobs", type=int, default=0, help="worker cap (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="connprompt",
        description="Discourse relation recognition via connective cloze prompts",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("ingest", help="parse a corpus, assign splits, write stats")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("conll16", "normalized"), required=True)
    p.add_argument("--dataset", choices=("pdtb", "conll16"), default="pdtb")
    p.add_argument("--scheme", default=None, help="scheme for the stats table")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("train", help="fine-tune a scorer")
    _add_config_args(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("eval", help="evaluate a checkpoint")
    _add_config_args(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--split", default="test", help="which data.* file to evaluate")
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("predict", help="classify one argument pair")
    _add_config_args(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--arg1", required=True)
    p.add_argument("--arg2", required=True)
    p.add_argument("--connective", default=None)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("case-study", help="prediction breakdown for one gold label")
    _add_config_args(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--label", required=True)
    p.add_argument("--split", default="test")
    p.set_defaults(func=cmd_case_study)

    p = subs.add_parser("template-search", help="rank templates by dev accuracy")
    _add_config_args(p)
    p.add_argument("--templates", default=None, help="comma-separated template ids")
    p.set_defaults(func=cmd_template_search)

    p = subs.add_parser("validate-verbalizer", help="check answer sets against a scorer")
    p.add_argument("--verbalizer", required=True, help="builtin id or file path")
    p.add_argument("--scheme", required=True)
    p.add_argument("--scorer", choices=("mock", "reference", "remote"), default="mock")
    p.add_argument("--endpoint", default=None)
    p.add_argument("--export", default=None,
                   help="also write the verbalizer in its file format")
    p.set_defaults(func=cmd_validate_verbalizer)

    p = subs.add_parser("induce-verbalizer", help="induce answer sets from connective counts")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("conll16", "normalized"), default="normalized")
    p.add_argument("--dataset", choices=("pdtb", "conll16"), default="pdtb")
    p.add_argument("--scheme", required=True)
    p.add_argument("--max-per-label", type=int, default=5)
    p.add_argument("--ambiguity-threshold", type=float, default=0.7)
    p.add_argument("--scorer", choices=("mock", "reference", "remote"), default="mock")
    p.add_argument("--endpoint", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_induce_verbalizer)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 4
    except ToolkitError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
