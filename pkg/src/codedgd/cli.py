"""Command-line front end: batch experiment runs and end-to-end verification.

  codedgd run <config.yaml>     simulate, write CSV tables and figures
  codedgd verify <config.yaml>  run coded GD and check decodes against the oracle

Exit codes: 0 success, 1 verification mismatch, 2 configuration error.
"""

import argparse
import csv
import os
import sys

import numpy as np

from .config import (build_dataset, build_point, build_source, load_config,
                     timing_model)
from .errors import CodedGdError, ConfigError
from .gradient import Partition, full_gradient, gd_step, pad_rows, partial_gradient
from .report import render_cdf_figure, render_empirical_cdfs, render_sweep_figures
from .sim import communication_load, simulate_run, write_records_csv
from .timing import (cdf_count_threshold, cdf_worker_threshold, empirical_cdf,
                     write_cdf_csv)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="codedgd",
        description="Straggler-mitigation schemes for distributed gradient descent")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate the configured experiments")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="override master_seed")
    p_run.add_argument("--out", default=None, help="override output directory")
    p_run.add_argument("--no-figures", action="store_true")

    p_ver = sub.add_parser("verify", help="check decoded gradients against the exact oracle")
    p_ver.add_argument("config")
    p_ver.add_argument("--seed", type=int, default=None)
    p_ver.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.out is not None:
        cfg.output = args.out

    try:
        if args.command == "run":
            return _cmd_run(cfg, figures=not args.no_figures)
        return _cmd_verify(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CodedGdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _point_tag(cfg, value):
    if cfg.sweep_param:
        return f"_{cfg.sweep_param}{value:g}" if isinstance(value, float) \
            else f"_{cfg.sweep_param}{value}"
    return ""


def _closed_form_cdf(plan, model, grid):
    form = plan.closed_form()
    if form is None or model is None:
        return None
    if form[0] == "worker":
        return cdf_worker_threshold(model, plan.n_workers, plan.r, form[1], grid)
    _, m_th, n = form
    return cdf_count_threshold(model, plan.n_workers, plan.r, m_th, grid,
                               units_per_message=n)


def _cmd_run(cfg, figures):
    os.makedirs(cfg.output, exist_ok=True)
    source = build_source(cfg)
    model = timing_model(cfg)
    summary = []
    single_point_curves = {}

    for value in cfg.sweep_values:
        plans, scenario = build_point(cfg, value)
        for plan in plans:
            records = simulate_run(plan, source, scenario, cfg.congestion,
                                   cfg.iterations, cfg.master_seed)
            tag = _point_tag(cfg, value)
            rec_path = os.path.join(cfg.output, f"records_{plan.scheme_id}{tag}.csv")
            write_records_csv(rec_path, records)
            completions = np.sort([r.completion for r in records])
            row = {
                "scheme": plan.scheme_id,
                "param_point": value if cfg.sweep_param else "",
                "mean_completion_ms": float(completions.mean()),
                "mean_msgs": communication_load(records),
                "p95_completion_ms": float(np.quantile(completions, 0.95)),
                "decode_success_rate": float(np.mean([r.decode_ok for r in records])),
            }
            summary.append(row)
            if not cfg.sweep_param:
                single_point_curves[plan.scheme_id] = completions

            if cfg.closed_form and model is not None and plan.closed_form() is not None:
                lo = completions[0] * 0.8
                hi = float(np.quantile(completions, 0.999)) * 1.2
                grid = np.linspace(lo, hi, 400)
                closed = _closed_form_cdf(plan, model, grid)
                mc = empirical_cdf(completions, grid)
                cdf_path = os.path.join(cfg.output, f"cdf_{plan.scheme_id}{tag}.csv")
                write_cdf_csv(cdf_path, grid, closed, mc)
                if figures:
                    render_cdf_figure(
                        os.path.join(cfg.output, f"fig_cdf_{plan.scheme_id}{tag}.png"),
                        grid, closed, mc,
                        f"{plan.scheme_id} (K={plan.n_workers}, r={plan.r})")

    sum_path = os.path.join(cfg.output, "summary.csv")
    with open(sum_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=[
            "scheme", "param_point", "mean_completion_ms", "mean_msgs",
            "p95_completion_ms", "decode_success_rate"])
        writer.writeheader()
        writer.writerows(summary)

    if figures and cfg.sweep_param:
        render_sweep_figures(cfg.output, summary, cfg.sweep_param)
    if figures and single_point_curves:
        render_empirical_cdfs(os.path.join(cfg.output, "fig_cdf_schemes.png"),
                              single_point_curves, "per-iteration completion time")

    for row in summary:
        point = f" {cfg.sweep_param}={row['param_point']}" if cfg.sweep_param else ""
        print(f"{row['scheme']}{point}: mean={row['mean_completion_ms']:.6g} "
              f"msgs={row['mean_msgs']:.3f} p95={row['p95_completion_ms']:.6g}")
    print(f"wrote {sum_path}")
    return 0


def _cmd_verify(cfg):
    data = build_dataset(cfg)
    source = build_source(cfg)
    plans, scenario = build_point(cfg, cfg.sweep_values[0])
    failures = 0
    padded_cache = {}

    for plan in plans:
        k = plan.k_gradients
        if k not in padded_cache:
            padded = pad_rows(data, k)
            part = Partition.balanced(padded.n_rows, k)
            gram = padded.X.T @ padded.X
            eta = 1.0 / float(np.linalg.eigvalsh(gram)[-1])
            padded_cache[k] = (padded, part, eta)
        padded, part, eta = padded_cache[k]
        plan.prepare(padded)

        records, delivered = simulate_run(plan, source, scenario, cfg.congestion,
                                          cfg.verify_iterations, cfg.master_seed,
                                          collect_deliveries=True)
        theta = np.zeros(padded.n_features)
        worst = 0.0
        tol_missing = int(plan.k_gradients * getattr(plan, "tolerance", 0.0))
        # gradients shrink as GD converges; keep the comparison scale from
        # collapsing below a fixed fraction of the initial gradient magnitude
        scale_floor = 1e-3 * float(np.linalg.norm(padded.X.T @ padded.y))
        for i in range(cfg.verify_iterations):
            partials = [partial_gradient(padded, part, kk, theta) for kk in range(k)]
            oracle = full_gradient(padded, part, theta)
            estimate, missing = plan.verify_decode(delivered[i], partials, theta)
            if missing:
                ok = missing <= tol_missing
                err = float("nan")
            else:
                scale = max(float(np.linalg.norm(oracle)), scale_floor, 1e-30)
                err = float(np.linalg.norm(estimate - oracle)) / scale
                worst = max(worst, err)
                ok = err <= 1e-6
            print(f"verify scheme={plan.scheme_id} iter={i:03d} "
                  f"rel_err={err:.3e} missing={missing}")
            if not ok:
                print(f"FAIL scheme={plan.scheme_id} iteration {i}: "
                      f"rel_err={err:.3e} missing={missing} (allowed {tol_missing})",
                      file=sys.stderr)
                failures += 1
                break
            theta = gd_step(theta, np.asarray(estimate, dtype=float), eta)
        else:
            print(f"verify scheme={plan.scheme_id}: OK over "
                  f"{cfg.verify_iterations} iterations, max rel_err={worst:.3e}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
