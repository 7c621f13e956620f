"""Command-line surface: generate, audit, sweep, power, counterexamples, report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 the audit flagged
un-equal treatment and --fail-on-violation was given.  Every artifact is a
pure function of the invocation; JSON artifacts embed the tool version,
seed and resolved configuration, CSV artifacts carry the same metadata in a
sidecar ``<name>.meta.json``.
"""

import argparse
import json
import logging
import sys

from . import __version__
from .data import GroupPair, SplitSpec, load_csv, save_csv
from .errors import DataError, EtauditError, UsageError
from .inspector import (
    AuditConfig,
    LearnerSpec,
    counterexample_suite,
    equal_treatment_audit,
    sweep,
    sweep_to_csv,
)
from .stats import power_study, power_study_to_csv
from .synthetic import SCENARIO_KINDS, ScenarioSpec, generate

log = logging.getLogger("etaudit")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VIOLATION = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_sidecar(path, payload):
    with open(f"{path}.meta.json", "w", encoding="utf-8") as fh:
        json.dump({"tool": "etaudit", "version": __version__, **payload}, fh, indent=2)
        fh.write("\n")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}")


def _learner(kind, depth=None, n_trees=None):
    params = {}
    if depth is not None and kind in ("tree", "gbt"):
        params["max_depth"] = depth
    if n_trees is not None and kind == "gbt":
        params["n_trees"] = n_trees
    return LearnerSpec(kind, params)


def _inspector_learner(kind):
    # logistic inspectors carry the default unit ridge on the raw scale
    if kind == "logistic":
        return LearnerSpec("logistic", {"l2": 1.0})
    return _learner(kind)


def build_parser():
    parser = _Parser(prog="etaudit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"etaudit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic benchmark dataset as CSV")
    g.add_argument("--kind", required=True, choices=SCENARIO_KINDS)
    g.add_argument("--n", type=int, default=10000)
    g.add_argument("--gamma", type=float, default=None)
    g.add_argument("--mu", type=float, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    a = sub.add_parser("audit", help="audit equal treatment on a CSV dataset")
    a.add_argument("--data", required=True)
    a.add_argument("--target", required=True)
    a.add_argument("--protected", required=True)
    a.add_argument("--drop", default="", help="comma-separated columns to ignore")
    a.add_argument("--pair", default="all", help='"A:B" or "all"')
    a.add_argument("--model", default="gbt", choices=("linear", "logistic", "tree", "gbt"))
    a.add_argument("--inspector", default="logistic",
                   choices=("linear", "logistic", "tree", "gbt"))
    a.add_argument("--shap", default="exact",
                   choices=("exact", "linear", "montecarlo", "observational"))
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--ci-level", type=float, default=0.95)
    a.add_argument("--bootstrap", type=int, default=30)
    a.add_argument("--background-cap", type=int, default=512)
    a.add_argument("--mc-permutations", type=int, default=200)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--include-protected", action="store_true")
    a.add_argument("--explain-probability", action="store_true")
    a.add_argument("--workers", type=int, default=1)
    a.add_argument("--fail-on-violation", action="store_true")
    a.add_argument("--out", required=True)
    a.add_argument("--summary-csv", default=None)

    s = sub.add_parser("sweep", help="audit a grid of model x inspector configurations")
    s.add_argument("--data", required=True)
    s.add_argument("--target", required=True)
    s.add_argument("--protected", required=True)
    s.add_argument("--drop", default="")
    s.add_argument("--pair", required=True, help='"A:B"')
    s.add_argument("--models", default="gbt", help="comma-separated learner kinds")
    s.add_argument("--inspectors", default="logistic")
    s.add_argument("--depths", default="", help="tree/gbt depth grid")
    s.add_argument("--n-trees", default="", help="gbt estimator-count grid")
    s.add_argument("--shap", default="exact",
                   choices=("exact", "linear", "montecarlo", "observational"))
    s.add_argument("--bootstrap", type=int, default=1)
    s.add_argument("--background-cap", type=int, default=128)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    p = sub.add_parser("power", help="AUC-test vs accuracy-test power curves")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--mus", default="", help="comma-separated mean shifts")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    c = sub.add_parser("counterexamples", help="run the three separation constructions")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--n", type=int, default=10000)
    c.add_argument("--alpha", type=float, default=0.05)
    c.add_argument("--fail-on-violation", action="store_true")
    c.add_argument("--out", default=None)

    r = sub.add_parser("report", help="render an audit report JSON as text")
    r.add_argument("--in", dest="infile", required=True)
    r.add_argument("--format", default="md", choices=("md", "text"))
    r.add_argument("--out", default=None)
    return parser


def _cmd_generate(args):
    spec = ScenarioSpec(kind=args.kind, n=args.n, gamma=args.gamma, mu=args.mu,
                        seed=args.seed)
    ds = generate(spec)
    save_csv(ds, args.out)
    _write_sidecar(args.out, {"seed": args.seed, "spec": ds.meta,
                              "roles": {"target": ds.target, "protected": ds.protected}})
    log.info("wrote %d rows to %s", ds.n_rows, args.out)
    return EXIT_OK


def _audit_config(args):
    return AuditConfig(
        model=_learner(args.model),
        inspector=_inspector_learner(args.inspector),
        shap_variant=args.shap,
        split=SplitSpec(seed=args.seed),
        alpha=args.alpha,
        bootstrap_runs=args.bootstrap,
        background_cap=args.background_cap,
        mc_permutations=args.mc_permutations,
        include_protected=args.include_protected,
        explain_probability=args.explain_probability,
        ci_level=args.ci_level,
        workers=args.workers,
    )


def _load(args):
    drop = [c for c in args.drop.split(",") if c]
    return load_csv(args.data, target=args.target, protected=args.protected, drop=drop)


def _pairs_for(ds, spec_text):
    if spec_text == "all":
        return ds.group_pairs()
    if ":" not in spec_text:
        raise UsageError('--pair must be "A:B" or "all"')
    a, b = spec_text.split(":", 1)
    return [GroupPair(a, b)]


def _cmd_audit(args):
    ds = _load(args)
    config = _audit_config(args)
    log.info("resolved config: %s", json.dumps(config.to_dict(), sort_keys=True))
    reports = [equal_treatment_audit(ds, pair, config)
               for pair in _pairs_for(ds, args.pair)]
    doc = {
        "tool": "etaudit",
        "version": __version__,
        "seed": args.seed,
        "config": config.to_dict(),
        "reports": [r.to_dict() for r in reports],
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    if args.summary_csv:
        lines = ["pair,et_auc,et_p,dp_auc,dp_p,input_auc,combined_auc,ks_p,wasserstein"]
        for r in reports:
            lines.append(
                f"{r.pair.group_a}:{r.pair.group_b},{r.et.auc!r},{r.et.p_value!r},"
                f"{r.dp.auc!r},{r.dp.p_value!r},{r.input.auc!r},{r.combined.auc!r},"
                f"{r.dp_distances.ks_pvalue!r},{r.dp_distances.wasserstein!r}"
            )
        with open(args.summary_csv, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        _write_sidecar(args.summary_csv, {"seed": args.seed, "config": config.to_dict()})
    for r in reports:
        verdict = "VIOLATION" if r.violation() else "ok"
        log.info("pair %s:%s et_auc=%.4f p=%.3g [%s]", r.pair.group_a, r.pair.group_b,
                 r.et.auc, r.et.p_value, verdict)
    if args.fail_on_violation and any(r.violation() for r in reports):
        return EXIT_VIOLATION
    return EXIT_OK


def _cmd_sweep(args):
    ds = _load(args)
    pairs = _pairs_for(ds, args.pair)
    if len(pairs) != 1:
        raise UsageError("sweep audits exactly one pair")
    depths = _int_list(args.depths) or [None]
    counts = _int_list(args.n_trees) or [None]
    model_grid = []
    for kind in [k for k in args.models.split(",") if k]:
        for d in depths:
            for t in counts:
                spec = _learner(kind, depth=d, n_trees=t)
                if spec not in model_grid:
                    model_grid.append(spec)
    inspector_grid = []
    for kind in [k for k in args.inspectors.split(",") if k]:
        spec = _inspector_learner(kind)
        if spec not in inspector_grid:
            inspector_grid.append(spec)
    config = AuditConfig(
        shap_variant=args.shap,
        split=SplitSpec(seed=args.seed),
        bootstrap_runs=args.bootstrap,
        background_cap=args.background_cap,
    )
    log.info("sweeping %d x %d cells", len(model_grid), len(inspector_grid))
    cells = sweep(ds, pairs[0], model_grid, inspector_grid, config)
    sweep_to_csv(cells, args.out)
    _write_sidecar(args.out, {"seed": args.seed, "config": config.to_dict()})
    return EXIT_OK


def _cmd_power(args):
    mus = _float_list(args.mus) or None
    points = power_study(mu_grid=mus, n=args.n, runs=args.runs, seed=args.seed,
                         alpha=args.alpha, workers=args.workers)
    power_study_to_csv(points, args.out)
    _write_sidecar(args.out, {
        "seed": args.seed,
        "config": {"runs": args.runs, "n": args.n, "alpha": args.alpha,
                   "mus": [p.mu for p in points]},
    })
    return EXIT_OK


def _cmd_counterexamples(args):
    results = counterexample_suite(seed=args.seed, n=args.n, alpha=args.alpha)
    any_fail = False
    for name in ("lundberg", "ex42", "squared_dependence"):
        res = results[name]
        verdict = "PASS" if res.passed else "FAIL"
        any_fail = any_fail or not res.passed
        print(f"{name}: {verdict}")
    if args.out:
        doc = {
            "tool": "etaudit",
            "version": __version__,
            "seed": args.seed,
            "config": {"n": args.n, "alpha": args.alpha},
            "results": {k: {"checks": v.checks, "passed": v.passed}
                        for k, v in results.items()},
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    if any_fail and args.fail_on_violation:
        return EXIT_VIOLATION
    return EXIT_OK


def _fmt_result(d):
    return (f"AUC {d['auc']:.4f} (CI {d['ci_low']:.4f}-{d['ci_high']:.4f}), "
            f"p={d['p_value']:.3g}")


def render_report(doc, fmt="md"):
    """Human-readable rendering of an audit report document (pure function)."""
    lines = []
    h = (lambda s: f"## {s}") if fmt == "md" else (lambda s: s.upper())
    bullet = "- " if fmt == "md" else "  * "
    lines.append(
        f"{'# ' if fmt == 'md' else ''}etaudit report (tool {doc.get('version', '?')})"
    )
    for rep in doc["reports"]:
        pair = rep["pair"]
        lines.append("")
        lines.append(h(f"pair {pair['group_a']} vs {pair['group_b']}"))
        lines.append(f"{bullet}orientation: {rep['orientation']}")
        lines.append(f"{bullet}equal treatment: {_fmt_result(rep['et'])}")
        lines.append(f"{bullet}demographic parity: {_fmt_result(rep['dp'])}")
        lines.append(f"{bullet}input: {_fmt_result(rep['input'])}")
        lines.append(f"{bullet}combined: {_fmt_result(rep['combined'])}")
        dd = rep["dp_distances"]
        lines.append(
            f"{bullet}dp distances: ks_p={dd['ks_pvalue']:.3g} "
            f"wasserstein={dd['wasserstein']:.4g}"
        )
        alpha = rep.get("config", {}).get("alpha", 0.05)
        verdict = "UN-EQUAL TREATMENT flagged" if rep["et"]["p_value"] < alpha \
            else "no violation detected"
        lines.append(f"{bullet}verdict at alpha={alpha}: {verdict}")
        # standard thresholds for the DP side: AUC 0.55, KS p 0.05, Wasserstein 0.05
        dp_quiet = (
            dd["auc_c2st"] < 0.55
            and dd["ks_pvalue"] > 0.05
            and dd["wasserstein"] < 0.05
        )
        if rep["et"]["p_value"] < alpha and dp_quiet:
            lines.append(
                f"{bullet}note: equal-treatment violation with no demographic-parity "
                "violation at standard thresholds (AUC<0.55, KS p>0.05, W<0.05)"
            )
        if rep.get("drivers"):
            lines.append(f"{bullet}drivers (standardised coefficients):")
            for d in sorted(rep["drivers"], key=lambda r: -abs(r["coefficient"])):
                extra = ""
                if d.get("wasserstein_vs_random") is not None:
                    extra = f" wasserstein_vs_random={d['wasserstein_vs_random']:.4g}"
                lines.append(f"  {bullet}{d['feature']}: {d['coefficient']:+.4f}{extra}")
    return "\n".join(lines) + "\n"


def _cmd_report(args):
    try:
        with open(args.infile, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"no such file: {args.infile}")
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.infile}: not valid JSON ({exc})")
    if "reports" not in doc:
        doc = {"version": doc.get("config", {}).get("tool_version"), "reports": [doc]}
    text = render_report(doc, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "audit": _cmd_audit,
    "sweep": _cmd_sweep,
    "power": _cmd_power,
    "counterexamples": _cmd_counterexamples,
    "report": _cmd_report,
}


def run(argv):
    """Parse argv and execute; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"etaudit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"etaudit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EtauditError as exc:
        print(f"etaudit: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main():
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s",
                        stream=sys.stderr)
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
