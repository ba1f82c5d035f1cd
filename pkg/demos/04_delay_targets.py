"""Walkthrough: mean-delay targets on the bundled 15-node scenario.

Flows 10, 11, and 6 carry end-to-end mean delay targets. Each target turns
into a backlog threshold (rate x target); whenever a flow's network-wide
backlog exceeds its threshold, its logistic weight rises toward 1.2 and the
review-time allocation favours it. We run the preset unweighted and
weighted with common seeds and compare.

A full-length horizon takes a few minutes; this demo uses a shorter one, so
numbers are noisier than the shipped acceptance evaluation.
"""

import qwdr

HORIZON = 30_000
SEED = 1

runs = {}
for label, row in (("unweighted", 1), ("weighted", 2)):
    cfg = qwdr.make_paper15_scenario(seed=SEED, row=row, horizon=HORIZON)
    result = qwdr.run(
        model=cfg.build_model(),
        channel=cfg.build_channel(),
        arrivals=cfg.build_arrivals(),
        horizon=cfg.horizon_slots,
        solver_cfg=cfg.build_solver_config(),
        weight_cfg=cfg.build_weight_config(),
        k0=cfg.k0,
    )
    runs[label] = qwdr.collect_metrics(result, cfg)
    print(f"{label}: {result.queues.delivered_total} delivered, "
          f"max backlog {result.max_total_queue}, {len(result.reviews)} reviews")

report = qwdr.compare_runs(runs["unweighted"], runs["weighted"])
print(f"\n{'flow':>6} {'target':>8} {'unweighted':>11} {'weighted':>9} {'ratio':>7} {'met':>5}")
for key, row in sorted(report["flows"].items(), key=lambda kv: int(kv[0])):
    target = "-" if row["target"] is None else f"{row['target']:.0f}"
    met = "-" if row["met"] is None else ("yes" if row["met"] else "no")
    print(f"{key:>6} {target:>8} {row['unweighted_delay']:>11.1f} "
          f"{row['weighted_delay']:>9.1f} {row['ratio']:>7.3f} {met:>5}")

print(f"\nmean reduction across targeted flows: {report['targeted_mean_reduction']:.1%}")
print("flow 6 shares the busiest node with flow 12: its weight fires once its")
print("backlog crosses the threshold, trading some of flow 12's service for a")
print("lower flow-6 delay. Flows 10 and 11 run far below their thresholds in")
print("this channel realization, so their weights stay at 1.")
