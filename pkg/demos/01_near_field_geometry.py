"""
Near-field steering vectors and the beam-split mapping
======================================================

A 256-element half-wavelength array at 100 GHz has an aperture of about
0.38 m, so users 10 to 20 m away sit well inside the Rayleigh distance.
This script compares the spherical-wavefront steering vector with its
second-order (Fresnel) approximation and shows that a subcarrier away from
the carrier sees the path as a "virtual" location at the carrier.
"""

import matplotlib.pyplot as plt
import numpy as np

from nfce.geometry import (
    ArrayGeometry,
    PolarPoint,
    far_field_steering,
    fresnel_distance,
    near_field_profile,
    rayleigh_distance,
    steering_exact,
    steering_taylor,
    virtual_location,
)

geom = ArrayGeometry(256, 100e9)
print(f"aperture {geom.aperture:.4f} m, Fresnel {fresnel_distance(geom):.2f} m, "
      f"Rayleigh {rayleigh_distance(geom):.1f} m")

#%%
# Phase error of the Fresnel approximation across the array for a user at
# 10 m and 30 degrees. It stays far below pi/8 inside the coverage annulus.

point = PolarPoint(10.0, np.deg2rad(30))
exact = steering_exact(geom, point, geom.carrier_freq)
taylor = steering_taylor(geom, point, geom.carrier_freq)
err = np.angle(taylor * exact.conj())
print(f"max Taylor phase error at 10 m: {np.max(np.abs(err)):.3f} rad")

plt.plot(np.arange(1, 257), err)
plt.xlabel("antenna index n")
plt.ylabel("phase error (rad)")
plt.title("Fresnel approximation error, r = 10 m, 30 deg")
plt.savefig("demo_geometry_phase_error.svg")
plt.close()

#%%
# At the top subcarrier (105 GHz) the same path looks, at the carrier, like
# a path at a larger sine and a slightly different distance.

v = virtual_location(point, 105e9, 100e9)
print(f"virtual sine {v.sin_angle:.4f} (physical {point.sin_angle:.4f}), virtual distance {v.distance:.4f} m")
lhs = steering_taylor(geom, point, 105e9)
rhs = far_field_steering(geom, v.sin_angle, 100e9) * near_field_profile(geom, v.effective_distance, 100e9)
print(f"largest phase mismatch: {np.max(np.abs(np.angle(lhs * rhs.conj()))):.1e} rad")
