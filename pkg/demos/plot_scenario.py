"""Plan a scenario and plot s-t with the corridor, l-t and the velocity.

Needs the optional plotting extra (``pip install -e .[plot]``).

    python demos/plot_scenario.py [scenario.yaml] [out.png]
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle

from ssctraj.scenario_io import corpus_dir, load_scenario, plan_scenario


def main(argv):
    path = argv[0] if argv else corpus_dir() / "gap_speed_limit.yaml"
    out = argv[1] if len(argv) > 1 else "scenario.png"
    res = plan_scenario(load_scenario(path))
    smp = res.trajectory.sample(0.01)

    fig, (ax_st, ax_lt, ax_v) = plt.subplots(3, 1, figsize=(8, 10), sharex=True)
    occ = res.grid.occupancy.any(axis=1)
    g = res.grid
    s0, t0 = g.origin[0], g.origin[2]
    s1, t1 = s0 + g.shape[0] * g.resolution[0], t0 + g.shape[2] * g.resolution[2]
    ax_st.imshow(occ, origin="lower", aspect="auto", extent=(t0, t1, s0, s1), cmap="Greys", alpha=0.6)
    for c in res.corridor.cubes:
        ax_st.add_patch(Rectangle((c.t_start, c.lower[0]), c.duration, c.upper[0] - c.lower[0],
                                  fill=False, ec="tab:blue"))
        ax_lt.add_patch(Rectangle((c.t_start, c.lower[1]), c.duration, c.upper[1] - c.lower[1],
                                  fill=False, ec="tab:blue"))
    ax_st.plot([st.t for st in res.states], [st.s for st in res.states], "x", color="tab:orange", label="seeds")
    ax_st.plot(smp["t"], smp["s"], color="tab:red", label="trajectory")
    ax_st.set_ylim(min(smp["s"]) - 10, max(c.upper[0] for c in res.corridor.cubes) + 10)
    ax_st.set_ylabel("s [m]")
    ax_st.legend()
    ax_lt.plot(smp["t"], smp["l"], color="tab:red")
    ax_lt.set_ylabel("l [m]")
    ax_v.plot(smp["t"], smp["s_dot"], label="s_dot")
    ax_v.plot(smp["t"], smp["l_dot"], label="l_dot")
    ax_v.set_ylabel("velocity [m/s]")
    ax_v.set_xlabel("t [s]")
    ax_v.legend()
    fig.suptitle(res.scenario.name)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main(sys.argv[1:])
