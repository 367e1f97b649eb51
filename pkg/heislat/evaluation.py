"""
Acceptance Suite

Runs the experiment grid that checks the mean, variance, tail, orbit,
correlation, high-discrepancy and stout-cylinder statements, and summarises
every verdict in one table.
"""

import math
import logging
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import experiments as ex
from .regions import Annulus, disk_of_area, region_to_spec

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["experiment", "check", "estimate", "target", "tolerance", "relation", "passed"]


def annulus_of_area(area: float, r_inner: float = 1.0) -> Annulus:
    """Centered annulus (r_inner, r_outer] of the given measure"""
    return Annulus((0.0, 0.0), r_inner, math.sqrt(area / math.pi + r_inner ** 2))


def acceptance_plan(trials: int, seed: int, threads: Optional[int] = None,
                    samples: int = 10 ** 6) -> List[Tuple[str, Callable, ex.ExperimentConfig]]:
    """
    The acceptance grid as (label, experiment, config) triples

    Parameters:
    -----------
    trials : int
        Trials per Monte Carlo experiment
    seed : int
        Master seed shared by every experiment
    threads : int, optional
        Worker processes
    samples : int
        Quasi-random points per correlation estimate

    Returns:
    --------
    List[Tuple[str, Callable, ExperimentConfig]]
    """
    def cfg(region, **kwargs) -> ex.ExperimentConfig:
        return ex.ExperimentConfig(trials=trials, seed=seed, threads=threads,
                                   region=region_to_spec(region), samples=samples, **kwargs)

    plan = [("sampler", ex.sampler_check, cfg(disk_of_area(10.0)))]
    plan.append(("siegel_mean_euclidean a=10", ex.siegel_mean_euclidean, cfg(annulus_of_area(10.0))))
    for a in (5.0, 10.0, 20.0, 40.0):
        plan.append((f"euclidean_variance a={a:g}", ex.euclidean_variance_check, cfg(disk_of_area(a))))
    for a, eps in ((10.0, 0.5), (20.0, 0.25)):
        plan.append((f"siegel_mean_heisenberg a={a:g} eps={eps:g}", ex.siegel_mean_heisenberg,
                     cfg(disk_of_area(a), eps=eps)))
    for a, eps in ((4.0, 0.5), (20.0, 0.25), (50.0, 0.1)):
        plan.append((f"variance_identity a={a:g} eps={eps:g}", ex.variance_identity_check,
                     cfg(disk_of_area(a), eps=eps, z=0.0)))
        plan.append((f"variance_bound a={a:g} eps={eps:g}", ex.variance_bound_check,
                     cfg(disk_of_area(a), eps=eps, z=0.0)))
    plan.append(("chebyshev_tail m=5", ex.chebyshev_tail, cfg(disk_of_area(20.0), eps=0.25)))
    plan.append(("chebyshev_tail_euclidean a=20", partial(ex.chebyshev_tail, space="euclidean"),
                 cfg(disk_of_area(20.0))))
    plan.append(("euclidean_miss_scaling", ex.euclidean_miss_scaling, cfg(disk_of_area(10.0))))
    plan.append(("heisenberg_miss_scaling eps=0.5", ex.heisenberg_miss_scaling,
                 cfg(disk_of_area(10.0), eps=0.5)))
    plan.append(("orbit_classification", ex.orbit_classification_check, cfg(disk_of_area(10.0))))
    plan.append(("correlation_agreement", ex.correlation_agreement, cfg(disk_of_area(10.0))))
    plan.append(("high_discrepancy", ex.high_discrepancy_check, cfg(disk_of_area(10.0))))
    plan.append(("stout_cylinder a=16", ex.stout_cylinder_check,
                 cfg(disk_of_area(16.0), delta=0.25, interval_length=2.0)))
    return plan


def summarize_reports(reports: Sequence[ex.ExperimentReport],
                      labels: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """One row per verdict"""
    rows = []
    labels = labels or [r.name for r in reports]
    for label, report in zip(labels, reports):
        for v in report.verdicts:
            rows.append({
                "experiment": label,
                "check": v.label,
                "estimate": v.estimate,
                "target": v.target,
                "tolerance": v.tolerance,
                "relation": v.relation,
                "passed": v.passed,
            })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def run_acceptance_suite(trials: int = 10_000, seed: int = ex.DEFAULT_SEED,
                         threads: Optional[int] = None, samples: int = 10 ** 6,
                         include: Optional[Sequence[str]] = None,
                         out_csv: Optional[str] = None) -> Tuple[pd.DataFrame, List[ex.ExperimentReport]]:
    """
    Run the acceptance grid

    Parameters:
    -----------
    trials, seed, threads, samples
        As in acceptance_plan
    include : sequence of str, optional
        Only run plan entries whose label starts with one of these prefixes
    out_csv : str, optional
        Write the verdict table here

    Returns:
    --------
    Tuple[pd.DataFrame, List[ExperimentReport]]
        Verdict table and the full reports
    """
    plan = acceptance_plan(trials, seed, threads, samples)
    if include:
        plan = [item for item in plan if any(item[0].startswith(prefix) for prefix in include)]
    labels, reports = [], []
    for label, experiment, cfg in plan:
        logger.info("Acceptance: %s", label)
        reports.append(experiment(cfg))
        labels.append(label)
    summary = summarize_reports(reports, labels)
    if out_csv:
        summary.to_csv(out_csv, index=False)
        logger.info("Verdict table saved to %s", out_csv)
    return summary, reports


def calculate_suite_metrics(summary: pd.DataFrame) -> Dict:
    """Counts of passed, failed and measured-only checks"""
    decided = summary[summary["passed"].notna()]
    passed = decided["passed"].astype(bool)
    return {
        "checks": int(len(summary)),
        "passed": int(passed.sum()),
        "failed": int((~passed).sum()),
        "measured": int(summary["passed"].isna().sum()),
        "experiments": int(summary["experiment"].nunique()),
        "all_passed": bool(passed.all()) if len(passed) else True,
    }


def print_acceptance_report(summary: pd.DataFrame, metrics: Optional[Dict] = None) -> None:
    """Print the verdict table grouped by experiment"""
    if metrics is None:
        metrics = calculate_suite_metrics(summary)
    print("=" * 72)
    print("HEISLAT ACCEPTANCE REPORT")
    print("=" * 72)
    for experiment, group in summary.groupby("experiment", sort=False):
        print(f"\n{experiment}")
        for _, row in group.iterrows():
            if row["passed"] is None or (isinstance(row["passed"], float) and np.isnan(row["passed"])):
                status = "MEASURED"
            else:
                status = "PASS" if row["passed"] else "FAIL"
            print(f"  {status:8} {row['check']:32} {row['estimate']:12.5g} "
                  f"{row['relation']:>5} {row['target']:12.5g}  (tol {row['tolerance']:.3g})")
    print(f"\nCHECKS: {metrics['passed']} passed, {metrics['failed']} failed, "
          f"{metrics['measured']} measured only, over {metrics['experiments']} experiments")
