"""Pilot-plus-guard cost of each transmit-diversity scheme, and the planner.

Classic multi-antenna sounding needs one pilot per antenna; shift precoding
sounds all antennas through one pilot whose guard zone is widened by the
shift extents.  The sweep shows where each scheme wins as antennas grow.
"""

from ddwave.cdds import overhead, plan_steps
from ddwave.estimate import build_layout
from ddwave.afdm import AfdmConfig, optimal_c1

L_MAX, K_MAX = 4, 3  # channel extents the receiver must sound

print("overhead cells, chirp waveform, l_max=4, k_max=3, shifts (1,1):")
print("nt | siso | mimo | cdd | dodd | cdds")
for nt in (1, 2, 4, 8):
    cells = [
        overhead("afdm", "siso", L_MAX, K_MAX),
        overhead("afdm", "mimo", L_MAX, K_MAX, nt),
        overhead("afdm", "cdd", L_MAX, K_MAX, nt),
        overhead("afdm", "dodd", L_MAX, K_MAX, nt),
        overhead("afdm", "cdds", L_MAX, K_MAX, nt, l_shift_max=1, k_shift_max=1),
    ]
    print(f" {nt} | " + " | ".join(f"{c:4d}" for c in cells))
# the cdds column is flat in nt: one pilot regardless of antenna count

# --- the planner picks the cheapest non-overlapping steps ---------------------
profile = frozenset({(0.0, 0), (-1.0, 1)})
for nt in (2, 3, 4):
    res = plan_steps(profile, nt, "afdm", n_frame=32)
    steps = " ".join(f"({s.k_shift},{s.l_shift})" for s in res.plan.steps)
    print(f"nt={nt}: steps {steps}  feasible={res.feasible}  overhead={res.overhead_cells}")

# --- and the layout realizes exactly that count -------------------------------
res = plan_steps(profile, 2, "afdm", n_frame=32)
c1, _ = optimal_c1(1, res.k_shift_extent, 32)
layout = build_layout(
    "afdm", "cdds", AfdmConfig(32, c1), 1, 1,
    n_t=2, l_shift_max=res.l_shift_extent, k_shift_max=res.k_shift_extent,
)
print("pilot cell:", layout.pilot_cells, "guards:", len(layout.guard_cells),
      "data:", len(layout.data_cells))
assert layout.overhead_cells == res.overhead_cells
