"""Embedded-pilot estimation in the loop: estimated CSI against genie CSI.

Same frames, same noise, same detector; the only difference is whether the
receiver reads the taps off the pilot zone or is handed them.  With a strong
pilot the two curves should sit on top of each other.
"""

from ddwave.channel import FixedProfile
from ddwave.harness import SimConfig, curve_to_csv, run_ber

profile = FixedProfile(((0.0, 0), (-1.0, 1)))
base = dict(
    waveform="afdm", n=32, channel=profile,
    snr_grid_db=(6.0, 9.0, 12.0),
    detector="mp",
    min_errors=150, max_frames=4000, master_seed=21,
    snrp_db=40.0,
)

perfect = run_ber(SimConfig(csi="perfect", embed_pilots=True, **base))
estimated = run_ber(SimConfig(csi="estimated", **base))

print("-- genie taps (pilot cells still reserved) --")
print(curve_to_csv(perfect))
print("-- taps read from the pilot zone --")
print(curve_to_csv(estimated))

for p, e in zip(perfect.points, estimated.points):
    print(f"{p.snr_db:g} dB: perfect {p.ber:.3e}  estimated {e.ber:.3e}")
