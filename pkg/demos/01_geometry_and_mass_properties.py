"""Arm kinematics and composite mass properties.

Walks through the geometry layer: where the rotors sit as the arms swing,
how the center of gravity and inertia tensor respond to a payload, and how
the payload mount point can be recovered from mass properties alone.
"""

import numpy as np

from morphquad import (
    AirframeParams,
    Morphology,
    PayloadSpec,
    compose_mass_properties,
    infer_payload_position,
    rotor_positions,
    x_config,
)

params = AirframeParams()
print(f"airframe: body {params.d*1000:.0f} mm wide, arms {params.l*1000:.0f} mm, "
      f"dry mass {params.dry_mass:.1f} kg")

# The symmetric X configuration puts the rotors on the corners of a square.
print("\nrotor positions (m) in the X configuration:")
for i, (x, y) in enumerate(rotor_positions(x_config(), params), start=1):
    print(f"  rotor {i}: ({x:+.5f}, {y:+.5f})")

# Swinging one arm moves only its own rotor, along a circle about the hinge.
print("\nswinging arm 1 from 0 to 90 degrees:")
for deg in (0, 30, 60, 90):
    morph = Morphology(np.deg2rad([deg, 45, 45, 45]))
    x, y = rotor_positions(morph, params)[0]
    print(f"  theta1 = {deg:3d} deg -> rotor 1 at ({x:+.4f}, {y:+.4f})")

# A payload shifts the CoG by the mass-weighted lever arm and adds its
# parallel-axis term to the inertia tensor.
print("\nmass properties with a 1 kg payload moving out along +y:")
for offset in (0.0, 0.05, 0.10, 0.15):
    payload = PayloadSpec(m_load=1.0, r_load=[0.0, offset, 0.0])
    props = compose_mass_properties(x_config(), params, payload)
    print(f"  payload at {offset*100:4.0f} cm: m = {props.m:.1f} kg, "
          f"CoG y = {props.r_cog[1]*100:+.2f} cm, "
          f"Jxx = {props.J[0,0]*1000:.2f} g m^2")

# The composition inverts: given total mass and CoG, the mount point of the
# payload falls out of the moment balance.
payload = PayloadSpec(m_load=1.0, r_load=[0.04, 0.11, 0.0])
props = compose_mass_properties(x_config(), params, payload)
recovered = infer_payload_position(props, x_config(), params)
print(f"\npayload mounted at (0.040, 0.110); recovered at "
      f"({recovered[0]:.4f}, {recovered[1]:.4f})")
