"""`sbp` command-line tool: trace generation, training, hint selection,
simulation, the full pipeline, online modeling, and S-curve reporting.

Exit codes: 0 success, 1 runtime error, 2 usage/config error."""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, SbpError
from .history import HistoryConfig, collect_datasets
from .hints import (
    QuantSpec,
    ScoredCandidate,
    decode_hintset,
    dedup,
    encode_hintset,
    quantize,
    select,
)
from .predictors import TageLiteConfig
from .simulator import (
    SimConfig,
    render_scurve_csv,
    report_scurve,
    run,
    run_pipeline,
)
from .online_sgd import OnlineConfig, run_online
from .sparse_modeling import (
    BranchScreen,
    SolverConfig,
    correct_count,
    dump_model,
    lambda_search,
    parse_model,
    screen,
)
from .trace_io import SyntheticScenario, generate, read_trace, write_trace


def _add_history_flags(p):
    p.add_argument("--gh", type=int, default=64, help="global history bits")
    p.add_argument("--lh", type=int, default=16, help="local history bits")


def _add_baseline_flags(p):
    p.add_argument(
        "--baseline",
        choices=["gshare", "tage-lite"],
        default="gshare",
        help="primary predictor model",
    )
    p.add_argument("--gshare-bits", type=int, default=12, help="gshare index bits")
    p.add_argument("--tage-entries", type=int, default=256, help="entries per TAGE table")


def _sim_config(args):
    return SimConfig(
        history=HistoryConfig(args.gh, args.lh),
        baseline=args.baseline.replace("-", "_"),
        gshare_index_bits=args.gshare_bits,
        tage=TageLiteConfig(table_entries=args.tage_entries),
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sbp",
        description="Sparse branch prediction: offline sparse modeling, hint "
        "selection, and trace-driven MPKI evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"sbp {__version__}")
    parser.add_argument("--verbose", action="store_true", help="diagnostics to stderr")
    parser.add_argument("--jobs", type=int, default=1, help="worker cap (pipeline)")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic trace")
    g.add_argument("--kind", choices=["correlated", "loop", "utilization"], required=True)
    g.add_argument("--m", type=int, default=0, help="noise branches (correlated)")
    g.add_argument("--k", type=int, default=1, help="correlation distance in blocks")
    g.add_argument("--s", type=int, default=2, help="loop period")
    g.add_argument("--offset", type=int, default=0, help="loop phase offset")
    g.add_argument("--branch-frequency", type=float, default=1.0)
    g.add_argument("--offload-ratio", type=float, default=0.0)
    g.add_argument("--len", dest="length", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)

    t = sub.add_parser("train", help="train sparse models for screened branches")
    t.add_argument("--trace", required=True)
    _add_history_flags(t)
    t.add_argument("--min-occurrences", type=int, default=10_000)
    t.add_argument("--alpha", type=float, default=1.0, help="elastic-net L1 mixing")
    t.add_argument("-o", "--output", required=True, help="models JSON file")
    t.add_argument("--dump-text", help="directory for per-branch text dumps")

    s = sub.add_parser("select", help="score models and build a hint file")
    s.add_argument("--models", required=True, help="models JSON from `sbp train`")
    s.add_argument("--trace", required=True, help="profiling trace (scoring input)")
    _add_history_flags(s)
    _add_baseline_flags(s)
    s.add_argument("--policy", choices=["independent", "relative"], default="relative")
    s.add_argument("--budget-kb", type=float, required=True)
    s.add_argument("--q", default="3.4", help="quantization: 3.4, 3.12, or fp32")
    s.add_argument("-o", "--output", required=True, help="hint file (.sbph)")

    m = sub.add_parser("simulate", help="simulate a trace, optionally with hints")
    m.add_argument("--trace", required=True)
    _add_history_flags(m)
    _add_baseline_flags(m)
    m.add_argument("--hints", help="hint file (.sbph)")
    m.add_argument("-o", "--output", help="report JSON (default stdout)")

    p = sub.add_parser("pipeline", help="profile, train, select, and simulate")
    p.add_argument("--traces", nargs="+", required=True, help="trace files or a directory")
    _add_history_flags(p)
    _add_baseline_flags(p)
    p.add_argument("--policy", choices=["independent", "relative"], default="relative")
    p.add_argument("--budget-kb", type=float, required=True)
    p.add_argument("--q", default="3.4")
    p.add_argument("--min-occurrences", type=int, default=10_000)
    p.add_argument("--out-dir", required=True)

    o = sub.add_parser("online", help="online SGD-L1 modeling over a trace")
    o.add_argument("--trace", required=True)
    _add_history_flags(o)
    o.add_argument("--targets", default="all", help="'all' or comma-separated PCs")
    o.add_argument("--eta", type=float, default=0.05)
    o.add_argument("-o", "--output", help="results JSON (default stdout)")

    r = sub.add_parser("report", help="S-curve over report JSON files")
    r.add_argument("--scurve", nargs="+", required=True, help="coupled report JSONs")
    r.add_argument("--baseline-reports", nargs="+", help="matching baseline-only JSONs")
    r.add_argument("-o", "--output", help="CSV output (default stdout)")
    return parser


def _cmd_gen(args):
    scenario = SyntheticScenario(
        kind=args.kind,
        length=args.length,
        seed=args.seed,
        correlation_distance=args.k,
        noise_branches=args.m,
        loop_period=args.s,
        loop_offset=args.offset,
        branch_frequency=args.branch_frequency,
        offload_ratio=args.offload_ratio,
    )
    out = generate(scenario)
    if args.kind == "utilization":
        trace, offloaded = out
        sidecar = Path(args.output).with_suffix(".offload.json")
        sidecar.write_text(json.dumps(offloaded) + "\n")
    else:
        trace = out
    write_trace(trace, args.output)
    return 0


def _train_models(trace, history, screen_cfg, solver):
    datasets = collect_datasets(trace, history)
    models = {}
    for pc in sorted(datasets):
        ds = datasets[pc]
        if not screen(ds, screen_cfg):
            continue
        model = lambda_search(ds, solver)
        model = dedup(ds, model, solver)
        models[pc] = (model, ds)
    return models


def _cmd_train(args):
    trace = read_trace(args.trace)
    history = HistoryConfig(args.gh, args.lh)
    screen_cfg = BranchScreen(min_occurrences=args.min_occurrences)
    solver = SolverConfig(elasticnet_alpha=args.alpha)
    models = _train_models(trace, history, screen_cfg, solver)
    payload = {
        str(pc): {
            "bias": model.bias,
            "weights": {str(j): w for j, w in sorted(model.weights.items())},
            "lambda": model.lam,
            "accuracy": model.accuracy,
            "m": model.m,
            "sufficient": model.sufficient,
        }
        for pc, (model, _ds) in models.items()
    }
    text = json.dumps({"gh": args.gh, "lh": args.lh, "models": payload}, sort_keys=True, indent=2)
    Path(args.output).write_text(text + "\n")
    if args.dump_text:
        dump_dir = Path(args.dump_text)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for pc, (model, _ds) in models.items():
            (dump_dir / f"{pc:#x}.model").write_text(dump_model(model))
    return 0


def _load_models_json(path):
    from .sparse_modeling import SparseModel

    data = json.loads(Path(path).read_text())
    models = {}
    for pc_s, m in data["models"].items():
        models[int(pc_s)] = SparseModel(
            pc=int(pc_s),
            bias=m["bias"],
            weights={int(j): w for j, w in m["weights"].items()},
            lam=m["lambda"],
            accuracy=m["accuracy"],
            m=m["m"],
            sufficient=m["sufficient"],
        )
    return data["gh"], data["lh"], models


def _cmd_select(args):
    gh, lh, models = _load_models_json(args.models)
    if (gh, lh) != (args.gh, args.lh):
        raise ConfigError("models file history lengths disagree with --gh/--lh")
    trace = read_trace(args.trace)
    history = HistoryConfig(gh, lh)
    qspec = QuantSpec.parse(args.q)
    datasets = collect_datasets(trace, history, targets=set(models))
    base_report = run(trace, _sim_config(args), correct_from=gh + lh)
    candidates = []
    for pc in sorted(models):
        if pc not in datasets:
            continue
        model = quantize(models[pc], qspec) if qspec is not None else models[pc]
        candidates.append(
            ScoredCandidate(
                model=model,
                offline_correct=correct_count(model, datasets[pc]),
                primary_correct=base_report.per_branch[pc].correct,
            )
        )
    budget_bits = int(args.budget_kb * 8192)
    hs, chosen = select(
        candidates,
        args.policy,
        budget_bits,
        p=64,
        q=qspec.q if qspec else 32,
        lh=lh,
        gh=gh,
        phase_id=trace.phase_id,
    )
    encode_hintset(hs, args.output)
    print(f"selected (N, nnz) = {chosen}, hints = {len(hs.hints)}", file=sys.stderr)
    return 0


def _cmd_simulate(args):
    trace = read_trace(args.trace)
    hintset = decode_hintset(args.hints) if args.hints else None
    report = run(trace, _sim_config(args), hintset=hintset)
    text = report.to_json()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _expand_traces(paths):
    files = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            files.extend(sorted(path.glob("*.sbpt")))
        else:
            files.append(path)
    return files


def _cmd_pipeline(args):
    files = _expand_traces(args.traces)
    if not files:
        raise SbpError("no trace files found")
    traces = [read_trace(f) for f in files]
    history = HistoryConfig(args.gh, args.lh)
    qspec = QuantSpec.parse(args.q)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_pipeline(
        traces,
        budget_bits=int(args.budget_kb * 8192),
        policy=args.policy,
        qspec=qspec,
        history=history,
        sim_config=_sim_config(args),
        screen_cfg=BranchScreen(min_occurrences=args.min_occurrences),
        out_dir=out_dir,
    )
    summary = []
    for res in results:
        name = res.trace.phase_id or "phase"
        (out_dir / f"{name}.baseline.json").write_text(res.baseline_report.to_json())
        (out_dir / f"{name}.coupled.json").write_text(res.coupled_report.to_json())
        summary.append(
            {
                "phase_id": name,
                "baseline_mpki": res.baseline_report.mpki,
                "coupled_mpki": res.coupled_report.mpki,
                "chosen_n": res.chosen[0],
                "chosen_nnz": res.chosen[1],
                "hints": len(res.hintset.hints),
            }
        )
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n"
    )
    return 0


def _cmd_online(args):
    trace = read_trace(args.trace)
    history = HistoryConfig(args.gh, args.lh)
    targets = None
    if args.targets != "all":
        targets = {int(t, 0) for t in args.targets.split(",")}
    results = run_online(trace, history, target_pcs=targets, config=OnlineConfig(eta=args.eta))
    payload = {
        str(pc): {
            "occurrences": r.occurrences,
            "mispredictions": r.mispredictions,
            "nnz_avg": r.nnz_avg,
            "final_lambda": r.final_lambda,
        }
        for pc, r in sorted(results.items())
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_report(args):
    entries = []
    baselines = args.baseline_reports or []
    for i, path in enumerate(args.scurve):
        data = json.loads(Path(path).read_text())
        coupled = data["mpki"]
        if i < len(baselines):
            base = json.loads(Path(baselines[i]).read_text())["mpki"]
        else:
            base = coupled
        entries.append((data.get("phase_id") or Path(path).stem, base, coupled))
    table = report_scurve(entries)
    csv = render_scurve_csv(table)
    if args.output:
        Path(args.output).write_text(csv)
    else:
        sys.stdout.write(csv)
    for b in table["buckets"]:
        lo, hi = b["range"]
        print(
            f"[{lo}, {hi}) MPKI: {b['traces']} traces, mean improvement "
            f"{b['mean_improvement']:.4f} ({100 * b['mean_relative_improvement']:.2f}%)",
            file=sys.stderr,
        )
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "select": _cmd_select,
    "simulate": _cmd_simulate,
    "pipeline": _cmd_pipeline,
    "online": _cmd_online,
    "report": _cmd_report,
}


def dispatch(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"sbp: {e}", file=sys.stderr)
        return 2
    except SbpError as e:
        print(f"sbp: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"sbp: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
