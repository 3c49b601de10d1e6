"""Command-line front end.

Five subcommands cover the workflow end to end: ``simulate`` writes a logged
event panel, ``estimate`` fits the causal model on it, ``rank`` does a
one-shot template selection for a context, ``experiment`` runs the
three-arm comparison, and ``report`` re-renders a saved report. Exit codes:
0 success, 1 usage or domain error, 2 estimation failure, 3 invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np

from ..bandit.ranker import (
    ImpressionRecord,
    ObjectiveStats,
    RewardWeights,
    incremental_retrain,
    new_bundle,
    select_template,
)
from ..dml.panel import read_panel_csv, write_panel_csv
from ..dml.pipeline import DmlConfig, derive_region_weights, estimate_dvwpx
from ..domain import ContextFeatures, Device, HorizonConfig, ObjectiveVector
from ..errors import DomainError, EstimationError, InvariantViolation
from ..metrics import CTR_REGION_WEIGHTS, layout_region_bmrs, weighted_bmr
from ..rng import stream
from ..sim.panel import CONFOUNDED, RANDOMIZED, X_COLUMNS, simulate_panel
from ..sim.session import (
    build_layout,
    draw_availability,
    realize_long_term,
    simulate_session,
)
from ..sim.world import WorldConfig, generate_world
from .experiment import (
    ExperimentConfig,
    default_experiment_config,
    experiment_config_from_dict,
    load_report,
    render_report,
    run_experiment,
    save_report,
    world_config_from_dict,
    world_config_to_dict,
    write_per_day_csv,
)

OK = 0
USAGE_ERROR = 1
ESTIMATION_FAILURE = 2
INVARIANT_VIOLATION = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; usage errors here are exit 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _load_json(path: str, what: str) -> dict[str, Any]:
    try:
        payload = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise DomainError(f"{what} not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"{what} is not valid JSON: {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise DomainError(f"{what} must be a JSON object: {path}")
    return payload


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_json(args.config, "config file") if args.config else {}
    world_cfg = (
        world_config_from_dict(cfg["world"]) if "world" in cfg else WorldConfig(seed=args.seed)
    )
    if args.seed is not None and "world" not in cfg:
        world_cfg = replace(world_cfg, seed=args.seed)
    n_events = int(cfg.get("n_events", 20_000))
    policy = cfg.get("policy", CONFOUNDED)
    if policy not in (CONFOUNDED, RANDOMIZED):
        raise DomainError(f"policy must be '{CONFOUNDED}' or '{RANDOMIZED}', got {policy!r}")
    event_seed = int(cfg.get("event_seed", args.seed if args.seed is not None else world_cfg.seed))

    world = generate_world(world_cfg)
    panel = simulate_panel(world, n_events, policy, event_seed)

    out = _out_dir(args)
    write_panel_csv(panel, out / "panel.csv")
    (out / "world.json").write_text(
        json.dumps(
            {
                "world": world_config_to_dict(world_cfg),
                "policy": policy,
                "n_events": n_events,
                "event_seed": event_seed,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    print(f"wrote {panel.n_rows} events under policy {policy} to {out / 'panel.csv'}")
    return OK


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _load_json(args.config, "config file") if args.config else {}
    panel_path = Path(cfg.get("panel", Path(args.out) / "panel.csv"))
    if not panel_path.exists():
        raise DomainError(f"no panel at {panel_path}; run `simulate` first or set 'panel'")
    panel = read_panel_csv(panel_path)

    dml_kwargs = {
        k: cfg[k]
        for k in (
            "deaverage_iterations",
            "train_fraction",
            "crossfit_folds",
            "stage2",
            "lasso_grid_points",
            "lasso_cv_folds",
        )
        if k in cfg
    }
    if args.stage2 is not None:
        dml_kwargs["stage2"] = args.stage2
    if args.seed is not None:
        dml_kwargs["seed"] = args.seed
    dml_cfg = DmlConfig(**dml_kwargs)

    model = estimate_dvwpx(panel, dml_cfg)
    weights = derive_region_weights(model, X_COLUMNS)
    est = model.estimate

    lines = ["coefficient            beta    stderr"]
    for name, b, se in zip(panel.x_names, est.beta, est.stderr_beta):
        lines.append(f"{name:<18}{b:>10.4f}{se:>10.4f}")
    for name, t in zip(panel.m_names, est.theta):
        lines.append(f"{name:<18}{t:>10.4f}{'':>10}")
    for name, g in zip(panel.h_names, est.gamma):
        lines.append(f"{name:<18}{g:>10.4f}{'':>10}")
    if est.lambda_selected is not None:
        lines.append(f"lambda_selected   {est.lambda_selected:>10.6f}")
    w = weights.as_tuple()
    lines.append(f"region weights    ({w[0]:.4f}, {w[1]:.4f}, {w[2]:.4f})")
    print("\n".join(lines))

    out = _out_dir(args)
    (out / "estimate.json").write_text(
        json.dumps(
            {
                "beta": dict(zip(panel.x_names, map(float, est.beta))),
                "stderr_beta": dict(zip(panel.x_names, map(float, est.stderr_beta))),
                "theta": dict(zip(panel.m_names, map(float, est.theta))),
                "gamma": dict(zip(panel.h_names, map(float, est.gamma))),
                "lambda_selected": est.lambda_selected,
                "region_weights": list(w),
                "stage2": dml_cfg.stage2,
                "diagnostics": est.diagnostics,
            },
            indent=2,
            sort_keys=True,
            default=float,
        )
        + "\n"
    )
    return OK


def _train_rank_bundle(world, cfg: dict[str, Any], seed: int):
    """Fit a quick bundle on randomized sessions so `rank` has posteriors."""
    arm = cfg.get("arm", {})
    reward_weights = dict(arm.get("reward_weights", {"revenue": 0.5, "non_abandonment": 0.2}))
    region_weights = CTR_REGION_WEIGHTS if arm.get("satisfaction_mode") == "ctr" else None
    if arm.get("satisfaction_mode") == "dvwpx":
        raise DomainError("rank supports satisfaction modes 'none' and 'ctr'; run `experiment` for dvwpx arms")
    n_sessions = int(cfg.get("warmup_sessions", 400))
    if n_sessions < 1:
        raise DomainError("warmup_sessions must be >= 1")

    wc = world.config
    n_templates = len(world.templates)
    log: list[ImpressionRecord] = []
    for s in range(n_sessions):
        r = stream(seed, "rank_warmup", s)
        ci = int(r.integers(0, wc.n_customers))
        qi = int(r.integers(0, wc.n_queries))
        ti = int(r.integers(0, n_templates))
        device = Device.MOBILE if r.random() < wc.mobile_fraction else Device.DESKTOP
        available = draw_availability(world, r)
        layout = build_layout(world, qi, ti, available)
        session = simulate_session(world, ci, qi, layout, r)
        query = world.queries[qi]
        bmrs = layout_region_bmrs(layout, world.brands[query.brand_index])
        context = ContextFeatures(
            device=device,
            query_specificity=query.specificity,
            category_id=query.category_id,
            membership=int(world.customers.membership[ci]),
            content_signals={
                t.template_id: tuple(world.content_signals[qi, i])
                for i, t in enumerate(world.templates)
            },
        )
        long_term = realize_long_term(world, ci, qi, layout, session, r)
        log.append(
            ImpressionRecord(
                ts=1,
                context=context,
                template_id=world.templates[ti].template_id,
                targets=ObjectiveVector(
                    revenue=session.short_term_revenue,
                    non_abandonment=session.non_abandonment,
                    satisfaction=(
                        None if region_weights is None else weighted_bmr(bmrs, region_weights)
                    ),
                ),
                long_term_revenue=long_term.long_term_revenue,
                long_term_available_on=1 + HorizonConfig().delta_long_days,
            )
        )

    stats = {"revenue": np.array([r.targets.revenue for r in log])}
    stats["non_abandonment"] = np.array([float(r.targets.non_abandonment) for r in log])
    if region_weights is not None:
        stats["satisfaction"] = np.array([r.targets.satisfaction for r in log])
    reward = RewardWeights(
        weights=reward_weights,
        stats={
            name: ObjectiveStats(float(v.mean()), max(float(v.std()), 1e-6))
            for name, v in stats.items()
            if name in reward_weights
        },
    )
    bundle = new_bundle(
        categories=world.categories,
        signal_names=world.signal_names,
        reward=reward,
        region_weights=region_weights,
        with_satisfaction=region_weights is not None,
    )
    return incremental_retrain(
        bundle, log, sample_fraction=1.0, rng=stream(seed, "rank_retrain")
    )


def cmd_rank(args: argparse.Namespace) -> int:
    if not args.config:
        raise DomainError("rank needs --config pointing at a context file")
    cfg = _load_json(args.config, "context file")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))

    world_cfg = (
        world_config_from_dict(cfg["world"]) if "world" in cfg else WorldConfig(seed=seed)
    )
    world = generate_world(world_cfg)
    bundle = _train_rank_bundle(world, cfg, seed)

    if "query_index" in cfg:
        qi = int(cfg["query_index"])
        if not 0 <= qi < world.config.n_queries:
            raise DomainError(f"query_index out of range: {qi}")
        query = world.queries[qi]
        signals = {
            t.template_id: tuple(world.content_signals[qi, i])
            for i, t in enumerate(world.templates)
        }
        context = ContextFeatures(
            device=Device(cfg.get("device", "desktop")),
            query_specificity=float(cfg.get("query_specificity", query.specificity)),
            category_id=cfg.get("category_id", query.category_id),
            membership=int(cfg.get("membership", 0)),
            content_signals=signals,
        )
    else:
        try:
            context = ContextFeatures(
                device=Device(cfg["device"]),
                query_specificity=float(cfg["query_specificity"]),
                category_id=cfg["category_id"],
                membership=int(cfg["membership"]),
                content_signals={
                    k: tuple(v) for k, v in cfg["content_signals"].items()
                },
            )
        except KeyError as exc:
            raise DomainError(f"context file missing field {exc}") from exc

    candidate_ids = cfg.get("templates", [t.template_id for t in world.templates])
    known = {t.template_id for t in world.templates}
    unknown = [t for t in candidate_ids if t not in known]
    if unknown:
        raise DomainError(f"unknown template ids: {unknown}")
    from ..domain import PageLayout

    candidates = [PageLayout(template_id=t, slots=()) for t in candidate_ids]
    chosen, scores = select_template(
        context, candidates, bundle, stream(seed, "rank_select")
    )

    lines = [f"chosen template: {chosen.template_id}", "candidate scores"]
    for sc in scores:
        marker = " *" if sc.chosen else ""
        lines.append(f"  {sc.template_id:<16}{sc.score:>10.4f}{marker}")
    print("\n".join(lines))

    if args.out is not None:
        out = _out_dir(args)
        (out / "rank.json").write_text(
            json.dumps(
                {
                    "chosen": chosen.template_id,
                    "scores": [
                        {
                            "template_id": sc.template_id,
                            "score": sc.score,
                            "samples": dict(sc.samples),
                            "chosen": sc.chosen,
                        }
                        for sc in scores
                    ],
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )
    return OK


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        config = experiment_config_from_dict(_load_json(args.config, "config file"))
        if args.seed is not None:
            config = replace(config, seed=args.seed)
    else:
        config = default_experiment_config(seed=args.seed if args.seed is not None else 0)
    if args.arms is not None:
        names = [n.strip() for n in args.arms.split(",") if n.strip()]
        known = {arm.name for arm in config.arms}
        unknown = [n for n in names if n not in known]
        if unknown:
            raise DomainError(f"unknown arms: {unknown}; config has {sorted(known)}")
        config = replace(
            config, arms=tuple(arm for arm in config.arms if arm.name in names)
        )
    if args.days is not None:
        config = replace(config, days=args.days)
    return config


def cmd_experiment(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    report = run_experiment(config)
    out = _out_dir(args)
    save_report(report, out / "report.json")
    write_per_day_csv(report, out / "per_day.csv")
    print(render_report(report), end="")
    print(f"report: {out / 'report.json'}")
    return OK


def cmd_report(args: argparse.Namespace) -> int:
    path = Path(args.config) if args.config else Path(args.out) / "report.json"
    if not path.exists():
        raise DomainError(f"no report at {path}")
    try:
        report = load_report(path)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DomainError(f"malformed report {path}: {exc}") from exc
    print(render_report(report), end="")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wpxlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, fn, help_text: str, out_default=None):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument(
            "--out",
            default=out_default,
            help="output directory" + ("" if out_default is None else f" (default {out_default})"),
        )
        p.set_defaults(fn=fn)
        return p

    add("simulate", cmd_simulate, "generate a world and emit a logged event panel", "out")
    p_est = add("estimate", cmd_estimate, "fit the causal model on a panel", "out")
    p_est.add_argument(
        "--stage2", choices=("ols", "lasso"), default=None, help="second-stage fit"
    )
    p_rank = add("rank", cmd_rank, "one-shot template selection for a context file")
    p_exp = add("experiment", cmd_experiment, "run the multi-arm comparison", "out")
    p_exp.add_argument("--arms", default=None, help="comma-separated arm subset")
    p_exp.add_argument("--days", type=int, default=None, help="override day count")
    add("report", cmd_report, "re-render a saved report", "out")
    # rank only writes when asked to
    p_rank.set_defaults(out=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except EstimationError as exc:
        print(f"estimation failure: {exc}", file=sys.stderr)
        return ESTIMATION_FAILURE
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return INVARIANT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
