"""Command-line interface.

Subcommands: ``synth`` (planted dataset), ``ingest`` (time series to
connectivity matrices), ``template`` (fit group templates), ``train``
(classifier), ``eval`` (accuracy/AUC report), ``explain`` (contrast
subgraph), and ``pipeline`` (template, train, eval, explain in one pass).

Every command prints a JSON payload to stdout.  Exit codes: 0 on success
(recoverable conditions such as non-convergence appear as a ``warnings``
field), 1 on usage errors, 2 on data or format errors, 3 on numeric
failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .connectivity import (
    pearson_connectivity,
    read_timeseries_csv,
    write_matrix_csv,
)
from .contrast import (
    ContrastProblem,
    extract_subgraph,
    local_search,
    write_subgraph_json,
)
from .errors import (
    ConstantColumn,
    DataFormatError,
    DimensionMismatch,
    EmptyTargets,
    GroupTooSmall,
    IndexOutOfRange,
    InvalidSpec,
    NonFinite,
    SingleClassSlice,
    TooFewTimepoints,
    TooLarge,
)
from .evaluation import evaluate, split
from .manifest import ManifestEntry, load_dataset, read_manifest, write_manifest
from .network import NetworkHyperParams, load_model, save_model, train
from .synth import SynthSpec, synth_generate
from .templates import (
    TemplateHyperParams,
    fit_templates,
    load_templates,
    save_templates,
)

_DATA_ERRORS = (
    ConstantColumn,
    DataFormatError,
    DimensionMismatch,
    EmptyTargets,
    GroupTooSmall,
    IndexOutOfRange,
    InvalidSpec,
    SingleClassSlice,
    TooFewTimepoints,
    TooLarge,
)


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    # Usage problems must exit 1, not argparse's default 2.
    def error(self, message):
        raise _UsageError(self, message)


def _fractions(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected three comma-separated fractions, got {text!r}"
        )
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _template_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda1", type=float, default=0.1,
                   help="sparsity weight (default 0.1)")
    p.add_argument("--lambda2", type=float, default=0.005,
                   help="inter-group hinge weight (default 0.005)")
    p.add_argument("--gamma", type=float, default=0.05,
                   help="hinge margin (default 0.05)")
    p.add_argument("--hinge-direction", choices=("literal", "separation"),
                   default="separation",
                   help="penalize gaps beyond the margin (literal) or "
                        "within it (separation; default)")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-6)


def _network_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.01, help="learning rate")
    p.add_argument("--encoder", choices=("cnn", "mlp"), default="cnn")
    p.add_argument("--batch-size", type=int, default=16)


def _contrast_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, default=0.02,
                   help="subgraph size penalty (default 0.02)")
    p.add_argument("--tau", type=float, default=0.0,
                   help="edge magnitude cutoff (default 0)")
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--group-a", type=int, default=0)
    p.add_argument("--group-b", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="tgraph", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a planted synthetic dataset")
    p.add_argument("--rois", type=int, default=16)
    p.add_argument("--groups", type=int, default=2)
    p.add_argument("--subjects-per-group", type=int, default=10)
    p.add_argument("--density", type=float, default=0.2)
    p.add_argument("--effect", type=float, default=0.6)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="turn time series into matrices")
    p.add_argument("--manifest", required=True)
    p.add_argument("--timeseries-dir", default=None,
                   help="base directory for manifest paths (default: "
                        "the manifest's directory)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("template", help="fit group templates")
    p.add_argument("--data", required=True, help="manifest of matrices")
    _template_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_template)

    p = sub.add_parser("train", help="train the classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--templates", required=True, help="template directory")
    _network_flags(p)
    p.add_argument("--fractions", type=_fractions, default=(0.7, 0.1, 0.2))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="model file")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model")
    p.add_argument("--data", required=True)
    p.add_argument("--templates", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--fractions", type=_fractions, default=(0.7, 0.1, 0.2))
    p.add_argument("--seed", type=int, default=None,
                   help="evaluate the seeded test split instead of all subjects")
    p.add_argument("--out", default=None, help="report file")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("explain", help="extract a contrast subgraph")
    p.add_argument("--templates", required=True)
    _contrast_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("pipeline", help="template, train, eval, explain")
    p.add_argument("--data", required=True)
    _template_flags(p)
    _network_flags(p)
    _contrast_flags(p)
    p.add_argument("--fractions", type=_fractions, default=(0.7, 0.1, 0.2))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=".",
                   help="output directory (default: current directory)")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _template_hyper(args) -> TemplateHyperParams:
    return TemplateHyperParams(
        lambda1=args.lambda1,
        lambda2=args.lambda2,
        gamma=args.gamma,
        max_iter=args.max_iter,
        tol=args.tol,
        hinge_direction=args.hinge_direction,
    )


def _network_hyper(args) -> NetworkHyperParams:
    return NetworkHyperParams(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        encoder_kind=args.encoder,
    )


def _classification_dataset(manifest_path):
    data = load_dataset(read_manifest(manifest_path))
    if data.num_groups < 2:
        raise DataFormatError(
            f"manifest {manifest_path} has {data.num_groups} label(s), "
            "need at least 2 for classification"
        )
    return data


def _cmd_synth(args):
    spec = SynthSpec(
        num_rois=args.rois,
        num_groups=args.groups,
        subjects_per_group=args.subjects_per_group,
        support_density=args.density,
        effect_size=args.effect,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    data, truth = synth_generate(spec)
    out = _outdir(args)
    entries = []
    for subj in data.subjects:
        name = f"{subj.subject_id}.csv"
        write_matrix_csv(subj.matrix.weights, out / name)
        entries.append(ManifestEntry(subj.subject_id, f"group{subj.label}", name))
    write_manifest(entries, out / "manifest.csv")
    for c, g in enumerate(truth.templates):
        write_matrix_csv(g, out / f"template_true_{c}.csv")
    ground = {
        "num_rois": spec.num_rois,
        "num_groups": spec.num_groups,
        "subjects_per_group": spec.subjects_per_group,
        "support_density": spec.support_density,
        "effect_size": spec.effect_size,
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
        "support_pairs": [list(p) for p in truth.support_pairs],
        "differentiated_pairs": [list(p) for p in truth.differentiated_pairs],
    }
    with open(out / "ground_truth.json", "w") as fh:
        json.dump(ground, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {
        "manifest": str(out / "manifest.csv"),
        "num_subjects": len(data.subjects),
        "num_rois": spec.num_rois,
        "num_groups": spec.num_groups,
        "support_pairs": len(truth.support_pairs),
        "differentiated_pairs": len(truth.differentiated_pairs),
    }


def _cmd_ingest(args):
    manifest = read_manifest(args.manifest)
    base = Path(args.timeseries_dir) if args.timeseries_dir else manifest.base_dir
    out = _outdir(args)
    entries = []
    for e in manifest.entries:
        src = Path(e.path)
        if not src.is_absolute():
            src = base / src
        table = read_timeseries_csv(src)
        try:
            matrix = pearson_connectivity(table)
        except ConstantColumn as exc:
            raise ConstantColumn(exc.column, f"subject {e.subject_id!r}") from exc
        except TooFewTimepoints as exc:
            raise TooFewTimepoints(f"subject {e.subject_id!r}: {exc}") from exc
        name = f"{e.subject_id}.csv"
        write_matrix_csv(matrix.weights, out / name)
        entries.append(ManifestEntry(e.subject_id, e.label, name))
    write_manifest(entries, out / "manifest.csv")
    return {"manifest": str(out / "manifest.csv"), "num_subjects": len(entries)}


def _fit_with_warnings(data, hyper):
    templates = fit_templates(data, hyper)
    warnings = []
    if not templates.converged:
        warnings.append(
            f"template fit did not converge within {hyper.max_iter} iterations"
        )
    return templates, warnings


def _cmd_template(args):
    data = load_dataset(read_manifest(args.data))
    templates, warnings = _fit_with_warnings(data, _template_hyper(args))
    out = _outdir(args)
    save_templates(templates, out)
    payload = {
        "templates": str(out / "templates.json"),
        "num_groups": templates.num_groups,
        "num_rois": templates.num_rois,
        "iterations_run": templates.iterations_run,
        "converged": templates.converged,
        "final_objective": templates.objective_trace[-1],
    }
    if warnings:
        payload["warnings"] = warnings
    return payload


def _cmd_train(args):
    data = _classification_dataset(args.data)
    templates = load_templates(args.templates)
    train_idx, val_idx, test_idx = split(data, args.fractions, args.seed)
    model = train(data, templates, _network_hyper(args), (train_idx, val_idx))
    save_model(model, args.out)
    best_val = max(acc for _, acc in model.training_history)
    return {
        "model": str(args.out),
        "epochs": len(model.training_history),
        "best_validation_accuracy": best_val,
        "train_size": len(train_idx),
        "val_size": len(val_idx),
        "test_size": len(test_idx),
    }


def _report_payload(report, seed, split_ids, hyperparameters, warnings=()):
    payload = {
        "accuracy": report.accuracy,
        "auc": report.auc,
        "per_class_counts": {str(k): v for k, v in report.per_class_counts.items()},
        "seed": seed,
        "split": split_ids,
        "hyperparameters": hyperparameters,
    }
    if warnings:
        payload["warnings"] = list(warnings)
    return payload


def _cmd_eval(args):
    data = _classification_dataset(args.data)
    templates = load_templates(args.templates)
    model = load_model(args.model)
    if args.seed is not None:
        train_idx, val_idx, test_idx = split(data, args.fractions, args.seed)
        indices = test_idx
        split_ids = {
            "train": [data.subjects[k].subject_id for k in train_idx],
            "val": [data.subjects[k].subject_id for k in val_idx],
            "test": [data.subjects[k].subject_id for k in test_idx],
        }
    else:
        indices = list(range(len(data.subjects)))
        split_ids = {"evaluated": [data.subjects[k].subject_id for k in indices]}
    report = evaluate(model, templates, data, indices, split_seed=args.seed)
    hyper = model.hyper
    payload = _report_payload(
        report,
        args.seed,
        split_ids,
        {
            "encoder": hyper.encoder_kind,
            "epochs": hyper.epochs,
            "learning_rate": hyper.learning_rate,
            "batch_size": hyper.batch_size,
        },
    )
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return payload


def _explain_from_templates(templates, args, out: Path):
    problem = ContrastProblem.from_templates(
        templates, args.group_a, args.group_b, args.eta
    )
    nodes = local_search(problem, restarts=args.restarts, seed=args.seed)
    sub = extract_subgraph(
        nodes,
        templates.templates[args.group_a],
        templates.templates[args.group_b],
        tau=args.tau,
        eta=args.eta,
    )
    write_subgraph_json(
        sub, out / "subgraph.json", args.group_a, args.group_b,
        args.restarts, args.seed,
    )
    heat = abs(
        templates.templates[args.group_a] - templates.templates[args.group_b]
    )
    write_matrix_csv(heat, out / "contrast_heatmap.csv")
    return {
        "subgraph": str(out / "subgraph.json"),
        "heatmap": str(out / "contrast_heatmap.csv"),
        "nodes": sub.nodes,
        "num_edges": len(sub.edges),
        "score": sub.score,
    }


def _cmd_explain(args):
    templates = load_templates(args.templates)
    if not (
        0 <= args.group_a < templates.num_groups
        and 0 <= args.group_b < templates.num_groups
    ):
        raise IndexOutOfRange(
            f"groups {args.group_a},{args.group_b} outside "
            f"0..{templates.num_groups - 1}"
        )
    if args.group_a == args.group_b:
        raise IndexOutOfRange("group-a and group-b must differ")
    return _explain_from_templates(templates, args, _outdir(args))


def _cmd_pipeline(args):
    data = _classification_dataset(args.data)
    out = _outdir(args)
    train_idx, val_idx, test_idx = split(data, args.fractions, args.seed)

    templates, warnings = _fit_with_warnings(
        data.subset(train_idx), _template_hyper(args)
    )
    save_templates(templates, out)

    model = train(data, templates, _network_hyper(args), (train_idx, val_idx))
    save_model(model, out / "model.json")

    report = evaluate(model, templates, data, test_idx, split_seed=args.seed)
    explain_payload = _explain_from_templates(templates, args, out)

    split_ids = {
        "train": [data.subjects[k].subject_id for k in train_idx],
        "val": [data.subjects[k].subject_id for k in val_idx],
        "test": [data.subjects[k].subject_id for k in test_idx],
    }
    hyperparameters = {
        "lambda1": args.lambda1,
        "lambda2": args.lambda2,
        "gamma": args.gamma,
        "hinge_direction": args.hinge_direction,
        "max_iter": args.max_iter,
        "tol": args.tol,
        "encoder": args.encoder,
        "epochs": args.epochs,
        "learning_rate": args.lr,
        "batch_size": args.batch_size,
        "eta": args.eta,
        "tau": args.tau,
        "restarts": args.restarts,
        "fractions": list(args.fractions),
    }
    payload = _report_payload(report, args.seed, split_ids, hyperparameters, warnings)
    # Artifact names are relative so the report is byte-identical across
    # output directories.
    payload["templates"] = "templates.json"
    payload["model"] = "model.json"
    payload["subgraph"] = "subgraph.json"
    payload["subgraph_nodes"] = explain_payload["nodes"]
    payload["subgraph_score"] = explain_payload["score"]
    with open(out / "report.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    try:
        payload = args.func(args)
    except NonFinite as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # Hyper-parameter validation failures are usage problems.
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
