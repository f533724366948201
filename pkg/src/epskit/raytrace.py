"""Minimal 2-D geometric ray tracing in the (z, y) plane.

Used as an independent check of the closed-form displacer and wedge formulas:
nothing here uses those formulas. Rays carry a position, a unit direction and
an accumulated time; refraction is vector Snell's law at planar interfaces,
and e-ray directions inside a uniaxial slab come from the gradient of the
extraordinary index surface.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C_LIGHT

from .errors import GeometryError


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.hypot(*v)


@dataclass(frozen=True)
class Plane:
    """Line in 2-D through ``point`` with unit ``normal`` (z, y)."""

    point: tuple
    normal: tuple

    def intersect(self, origin, direction):
        n = unit(self.normal)
        denom = float(np.dot(direction, n))
        if abs(denom) < 1e-15:
            raise GeometryError("ray parallel to interface")
        s = float(np.dot(np.asarray(self.point) - origin, n)) / denom
        if s < -1e-12:
            raise GeometryError("interface lies behind the ray")
        return s


@dataclass
class Ray:
    position: np.ndarray
    direction: np.ndarray
    time_s: float = 0.0
    path: list = field(default_factory=list)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.direction = unit(self.direction)
        self.path.append(self.position.copy())

    def propagate_to(self, plane, time_index):
        """Move to ``plane``; ``time_index`` sets the speed c / time_index."""
        s = plane.intersect(self.position, self.direction)
        self.position = self.position + s * self.direction
        self.time_s += s * time_index / C_LIGHT
        self.path.append(self.position.copy())
        return s

    def refract(self, plane, n1, n2):
        self.direction = refract(self.direction, plane.normal, n1, n2)

    @property
    def angle(self):
        """Direction angle from +z towards +y, radians."""
        return float(np.arctan2(self.direction[1], self.direction[0]))


def refract(direction, normal, n1, n2):
    """Vector Snell's law; raises GeometryError on total internal reflection."""
    d = unit(direction)
    n = unit(normal)
    cos_i = float(np.dot(d, n))
    if cos_i < 0:
        n, cos_i = -n, -cos_i
    ratio = n1 / n2
    sin2_t = ratio**2 * (1 - cos_i**2)
    if sin2_t > 1:
        critical = np.degrees(np.arcsin(n2 / n1))
        raise GeometryError(
            f"total internal reflection (incidence {np.degrees(np.arccos(cos_i)):.3f} deg "
            f"exceeds critical angle {critical:.3f} deg)"
        )
    cos_t = np.sqrt(1 - sin2_t)
    return unit(ratio * d + (cos_t - ratio * cos_i) * n)


def extraordinary_ray_direction(n_o, n_e, optic_angle, k_direction=(1.0, 0.0)):
    """Energy-flow direction of an e-wave whose wave vector is ``k_direction``.

    The optic axis lies at ``optic_angle`` from +z towards +y. The extraordinary
    index surface is k_perp^2 / n_e^2 + k_par^2 / n_o^2 = (w/c)^2; the ray runs
    along its gradient.
    """
    axis = np.array([np.cos(optic_angle), np.sin(optic_angle)])
    perp = np.array([axis[1], -axis[0]])
    k = unit(k_direction)
    grad = (np.dot(k, perp) / n_e**2) * perp + (np.dot(k, axis) / n_o**2) * axis
    return unit(grad)


def trace_slab(ray, thickness, direction_inside, time_index):
    """Carry ``ray`` through a slab whose faces are normal to +z."""
    exit_face = Plane((ray.position[0] + thickness, 0.0), (1.0, 0.0))
    ray.direction = unit(direction_inside)
    ray.propagate_to(exit_face, time_index)
    ray.direction = np.array([1.0, 0.0])
    return ray


def trace_displacer_pair(length_mm, n_o, n_e, time_o, time_e, optic_angle):
    """Trace both polarisation paths through two identical displacers.

    ``n_o``/``n_e``/``time_o``/``time_e`` are pairs (first displacer at the pump,
    second displacer at the down-converted wavelength) of phase indices and
    time indices. Returns (separation_mm, delay_ps) with the separation taken
    along the pump's displacement direction (positive = under-restored) and
    the delay as time(o then e) - time(e then o).
    """
    L = length_mm * 1e-3
    dirs = [extraordinary_ray_direction(n_o[i], n_e[i], optic_angle) for i in (0, 1)]

    a = Ray((0.0, 0.0), (1.0, 0.0))
    trace_slab(a, L, (1.0, 0.0), time_o[0])
    trace_slab(a, L, dirs[1], time_e[1])

    b = Ray((0.0, 0.0), (1.0, 0.0))
    trace_slab(b, L, dirs[0], time_e[0])
    trace_slab(b, L, (1.0, 0.0), time_o[1])

    pump_shift = b.path[1][1]
    sign = np.sign(pump_shift) if pump_shift != 0 else 1.0
    separation = sign * (b.position[1] - a.position[1])
    return separation * 1e3, (a.time_s - b.time_s) * 1e12
