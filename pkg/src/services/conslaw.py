import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..models.geometry import MetricSpec, Trajectory
from ..models.reports import DriftReport
from ..models.symmetry import FirstIntegral, Generator, OnShellStatus, PhysicsLabel
from ..utils.exceptions import IntegrationError
from .geometry import geometry_service
from .parser import format_expr
from .symbolic import (
    ACCELERATIONS,
    VELOCITIES,
    AtomKind,
    atom_kind,
    normalize,
    partial_diff,
    second_order_total_derivative,
)

logger = logging.getLogger(__name__)

_TRANSLATION_LABELS = {
    1: PhysicsLabel.ENERGY,
    3: PhysicsLabel.MOMENTUM_Y,
    4: PhysicsLabel.MOMENTUM_Z,
}


class ConservationService:
    def first_integral(self, g: Generator, spec: MetricSpec, verified: bool = True) -> FirstIntegral:
        """I = mu L + sum_a (zeta^a - mu v^a) dL/dv^a - f; the d/ds integral is -L."""
        lagrangian = geometry_service.lagrangian(spec)
        expression = g.mu * lagrangian - g.f
        for coefficient, velocity in zip(g.components[1:], VELOCITIES):
            expression += (coefficient - g.mu * velocity) * partial_diff(lagrangian, velocity)
        expression = normalize(expression, spec.rules).to_expr()
        integral = FirstIntegral(expression=expression, generator=g, source_verified=verified)
        return integral.model_copy(update={"physics_label": self.classify_physics(integral)})

    def on_shell_check(self, integral: FirstIntegral, spec: MetricSpec) -> FirstIntegral:
        accelerations = dict(zip(ACCELERATIONS, geometry_service.geodesic_accelerations(spec)))
        derivative = second_order_total_derivative(integral.expression).xreplace(accelerations)
        remainder = normalize(derivative, spec.rules)
        status = OnShellStatus.PROVED if remainder.is_zero else OnShellStatus.FAILED
        if status is OnShellStatus.FAILED:
            logger.info(f"{integral.generator_name}: D_s I = {format_expr(remainder)} on shell")
        return integral.model_copy(update={"on_shell_status": status, "remainder": remainder})

    def classify_physics(self, integral: FirstIntegral) -> PhysicsLabel:
        g = integral.generator
        nonzero = [(k, normalize(c)) for k, c in enumerate(g.components) if not normalize(c).is_zero]
        gauge = normalize(g.f)
        if len(nonzero) != 1 or any(atom_kind(a) is AtomKind.COORDINATE for a in gauge.atoms()):
            return PhysicsLabel.SCALING_OTHER
        direction, coefficient = nonzero[0]
        if coefficient.atoms() or direction not in _TRANSLATION_LABELS:
            return PhysicsLabel.SCALING_OTHER
        return _TRANSLATION_LABELS[direction]

    def evaluate(self, integral: FirstIntegral, traj: Trajectory) -> np.ndarray:
        function = geometry_service.numeric_function(integral.expression, traj.metric)
        states = traj.as_array()
        s = np.array([state.s for state in traj.states])
        values = function(s, *states.T)
        return np.broadcast_to(np.asarray(values, dtype=float), s.shape)

    def numeric_drift(self, integral: FirstIntegral, traj: Trajectory) -> DriftReport:
        values = self.evaluate(integral, traj)
        drift = np.abs(values - values[0])
        scale = max(1.0, abs(float(values[0])))
        return DriftReport(
            integral=integral.text,
            generator=integral.generator_name,
            max_abs_drift=float(drift.max()),
            max_rel_drift=float(drift.max() / scale),
            step=traj.step,
            smax=traj.smax,
            proved_on_shell=integral.on_shell_status is OnShellStatus.PROVED,
        )

    def drift_convergence(
        self,
        integrals: Sequence[FirstIntegral],
        spec: MetricSpec,
        ics,
        step: float,
        smax: float,
    ) -> List[Tuple[DriftReport, DriftReport, Optional[float]]]:
        """Drift at step and step/2 with the ratio of the two maxima (None below round-off)."""
        coarse = geometry_service.integrate_geodesic(spec, ics, step, int(round(smax / step)))
        fine = geometry_service.integrate_geodesic(spec, ics, step / 2, int(round(2 * smax / step)))
        if coarse.diverged or fine.diverged:
            raise IntegrationError("Geodesic left the nondegenerate region during the convergence run")
        results = []
        for integral in integrals:
            a, b = self.numeric_drift(integral, coarse), self.numeric_drift(integral, fine)
            ratio = a.max_abs_drift / b.max_abs_drift if b.max_abs_drift > 1e-13 else None
            results.append((a, b, ratio))
        return results


conservation_service = ConservationService()
