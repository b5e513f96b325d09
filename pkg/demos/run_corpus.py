"""Plan every bundled scenario and print a one-line summary for each.

    python demos/run_corpus.py
"""
import time

from ssctraj.errors import PlanningError
from ssctraj.scenario_io import corpus, load_scenario, plan_scenario


def main():
    print(f"{'scenario':28s} {'expect':20s} {'result':22s} {'cubes':>5s} {'ms':>7s}")
    for path in corpus():
        scenario = load_scenario(path)
        t0 = time.perf_counter()
        try:
            res = plan_scenario(scenario)
            result, cubes = "verified", str(len(res.corridor))
        except PlanningError as exc:
            result, cubes = type(exc).__name__, "-"
        ms = (time.perf_counter() - t0) * 1e3
        print(f"{scenario.name:28s} {scenario.expect:20s} {result:22s} {cubes:>5s} {ms:7.1f}")


if __name__ == "__main__":
    main()
