"""Optimal morphology for off-center payloads.

For each payload placement the optimizer finds the arm angles that maximize
hover efficiency, tie-broken by controllability.  At the optimum the thrust
center coincides with the center of gravity and all four rotors carry the
same load, which is exactly what makes the morphing craft efficient.
"""

import numpy as np

from morphquad import (
    AirframeParams,
    GRAVITY,
    PayloadSpec,
    allocation_matrix,
    compose_mass_properties,
    optimize_morphology,
    rotor_positions,
    x_config,
)

params = AirframeParams()

cases = [
    ("payload centered", (0.0, 0.0)),
    ("payload at +15 cm x", (0.15, 0.0)),
    ("payload at +15 cm y", (0.0, 0.15)),
    ("payload on the diagonal", (0.15 / np.sqrt(2), 0.15 / np.sqrt(2))),
]

print(f"{'case':26s} {'arm angles (deg)':>30s} {'eta (N/W)':>10s} "
      f"{'C':>7s} {'thrust spread':>14s}")
for label, (px, py) in cases:
    payload = PayloadSpec(m_load=1.0, r_load=[px, py, 0.0])
    props = compose_mass_properties(x_config(), params, payload)
    res = optimize_morphology(x_config(), props, params)

    positions = rotor_positions(res.morphology, params)
    A = allocation_matrix(positions, props.r_cog, params)
    f = np.linalg.solve(A, [props.m * GRAVITY, 0.0, 0.0, 0.0])
    spread = (f.max() - f.min()) / (props.m * GRAVITY)

    angles = " ".join(f"{v:6.1f}" for v in np.rad2deg(res.morphology.theta))
    print(f"{label:26s} {angles:>30s} {res.eta:10.5f} {res.C:7.2f} "
          f"{spread*100:13.3f}%")

print("\nthe X configuration is already optimal for a centered load; offset")
print("loads pull the arms toward the payload until the thrusts equalize.")
