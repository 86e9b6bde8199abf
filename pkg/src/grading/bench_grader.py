"""Deterministic grader for Monte-Carlo bench results."""

import json
import math
import sys


def _within(value: object, bound: dict) -> bool:
    if not isinstance(value, int | float) or isinstance(value, bool) or not math.isfinite(value):
        return False
    if "min" in bound and value < bound["min"]:
        return False
    if "max" in bound and value > bound["max"]:
        return False
    return True


def grade_bench(result_path: str, expected_path: str) -> float:
    """Score a bench results.json against expected metric bounds.

    expected.json maps run keys (``"<setting>/<pattern>"``) to metric bounds:
    ``{"bounds": {"Ia/M-i": {"relative_mse_all_mean": {"min": 0.001, "max": 0.004}}}}``.
    Every bound is one check; a run or metric absent from the results fails its checks.

    Returns sum(checks) / len(checks) if checks exist, else 0.0.
    """
    with open(result_path) as f:
        result = json.load(f)
    with open(expected_path) as f:
        expected = json.load(f)

    runs = {run["key"]: run.get("metrics", {}) for run in result.get("runs", [])}
    checks: list[bool] = []
    for key, metrics in expected.get("bounds", {}).items():
        observed = runs.get(key, {})
        for metric, bound in metrics.items():
            checks.append(_within(observed.get(metric), bound))

    return sum(checks) / len(checks) if checks else 0.0


if __name__ == "__main__":
    score = grade_bench(sys.argv[1], sys.argv[2])
    with open(sys.argv[3] if len(sys.argv) > 3 else "reward.txt", "w") as f:
        f.write(str(score))
